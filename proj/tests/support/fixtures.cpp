// SPDX-License-Identifier: Apache-2.0
#include "fixtures.hpp"

#include <cstdlib>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include <sqlite3.h>

#include "ca/error.hpp"
#include "ca/fewshot.hpp"
#include "ca/profiler.hpp"
#include "ca/prompts.hpp"
#include "ca/router.hpp"

namespace ca::testing {

namespace fs = std::filesystem;
using json = nlohmann::json;

TempDir::TempDir() {
    std::string tmpl = (fs::temp_directory_path() / "ca-test-XXXXXX").string();
    if (!mkdtemp(tmpl.data())) throw std::runtime_error("mkdtemp failed");
    path_ = tmpl;
}

TempDir::~TempDir() {
    std::error_code ec;
    fs::remove_all(path_, ec);
}

void exec_script(const fs::path& db, const std::string& script) {
    sqlite3* raw = nullptr;
    if (sqlite3_open(db.c_str(), &raw) != SQLITE_OK) {
        sqlite3_close(raw);
        throw std::runtime_error("cannot create " + db.string());
    }
    char* err = nullptr;
    const int rc = sqlite3_exec(raw, script.c_str(), nullptr, nullptr, &err);
    std::string msg = err ? err : "";
    sqlite3_free(err);
    sqlite3_close(raw);
    if (rc != SQLITE_OK) throw std::runtime_error("script failed on " + db.string() + ": " + msg);
}

std::string read_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot read " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

void write_file(const fs::path& path, const std::string& text) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    out << text;
}

void create_shop_db(const fs::path& db) {
    exec_script(db, R"sql(
CREATE TABLE customer (customer_id INTEGER PRIMARY KEY, name TEXT NOT NULL, gender TEXT, age INTEGER, city TEXT);
CREATE TABLE "order" (order_id INTEGER PRIMARY KEY, customer_id INTEGER REFERENCES customer(customer_id), amount REAL, year INTEGER);
CREATE TABLE sales (sale_id INTEGER PRIMARY KEY, year INTEGER, amount REAL, region TEXT);
INSERT INTO customer VALUES
  (1,'Ana','F',18,'Lyon'),(2,'Ben','M',25,'Paris'),(3,'Chloe','F',31,'Paris'),(4,'Dan','M',44,'Nice'),
  (5,'Eve','F',52,'Lyon'),(6,'Femi','M',90,'Paris'),(7,'Gus','M',37,'Nice'),(8,'Hana','F',29,'Lyon'),
  (9,'Ivo','M',61,'Paris'),(10,'Jia','F',23,'Nice'),(11,'Kai',NULL,47,'Lyon'),(12,'Lea','F',33,'Paris');
INSERT INTO "order" VALUES
  (1,1,20.5,2019),(2,2,35.0,2019),(3,3,12.25,2020),(4,3,80.0,2020),(5,3,15.0,2021),(6,4,44.0,2021),
  (7,5,9.99,2021),(8,5,120.0,2022),(9,6,61.5,2022),(10,7,18.0,2022),(11,8,25.0,2023),(12,9,300.0,2023),
  (13,3,42.0,2023),(14,10,7.5,2023),(15,12,64.0,2022),(16,2,11.0,2020);
INSERT INTO sales VALUES
  (1,2019,1200.0,'north'),(2,2019,800.0,'south'),(3,2020,950.0,'north'),(4,2020,700.0,'south'),
  (5,2021,1500.0,'north'),(6,2021,1100.0,'south'),(7,2022,1750.0,'north'),(8,2022,1300.0,'south'),
  (9,2023,2100.0,'north'),(10,2023,1600.0,'south'),(11,2021,400.0,'east'),(12,2022,450.0,'east');
)sql");
}

void create_schools_db(const fs::path& db) {
    exec_script(db, R"sql(
CREATE TABLE schools (CDSCode TEXT PRIMARY KEY, County TEXT, District TEXT, DOC TEXT, School TEXT,
                      Street TEXT, City TEXT, State TEXT, Zip TEXT);
CREATE TABLE frpm (CDSCode TEXT PRIMARY KEY REFERENCES schools(CDSCode), "Academic Year" TEXT, "County Name" TEXT,
                   "School Name" TEXT, "Enrollment (K-12)" REAL, "Free Meal Count (K-12)" REAL);
INSERT INTO schools VALUES
  ('30001','Orange','Capistrano','54','Aliso Niguel High','28000 Wolverine Way','Aliso Viejo','CA','92656'),
  ('30002','Orange','Irvine','54','Woodbridge High','2 Meadowbrook','Irvine','CA','92604'),
  ('30003','Orange','Tustin','54','Beckman High','3588 Bryan Ave','Irvine','CA','92602'),
  ('30004','Orange','Savanna','52','Hansen Elementary','1300 South Knott Ave','Anaheim','CA','92804'),
  ('30005','Orange','Centralia','52','Danbrook Elementary','320 South Danbrook Dr','Anaheim','CA','92804'),
  ('30006','Orange','Fullerton Joint','56','Troy High','2200 East Dorothy Ln','Fullerton','CA','92831'),
  ('01001','Alameda','Fremont','54','Mission San Jose High','41717 Palm Ave','Fremont','CA','94539'),
  ('01002','Alameda','Pleasanton','54','Amador Valley High','1155 Santa Rita Rd','Pleasanton','CA','94566'),
  ('01003','Alameda','Lammersville','52','Mountain House Elementary','3950 Mountain House Rd','Byron','CA','94514'),
  ('10001','Fresno','Clovis','54','Buchanan High','1560 North Minnewawa Ave','Clovis','CA','93619'),
  ('10002','Fresno','Central','52','Teague Elementary','4725 North Polk Ave','Fresno','CA','93722'),
  ('10003','Fresno','Pacific Union','52','Pacific Union Elementary','2065 East Bowles Ave','Fresno','CA','93725'),
  ('10004','Fresno','Kings Canyon Joint','56','Reedley High','740 West North Ave','Reedley','CA','93654');
INSERT INTO frpm VALUES
  ('30001','2014-2015','Orange','Aliso Niguel High',3120,310),
  ('30002','2014-2015','Orange','Woodbridge High',2480,402),
  ('30003','2014-2015','Orange','Beckman High',2990,288),
  ('30004','2014-2015','Orange','Hansen Elementary',640,501),
  ('30005','2014-2015','Orange','Danbrook Elementary',710,622),
  ('01001','2014-2015','Alameda','Mission San Jose High',2060,95),
  ('01002','2014-2015','Alameda','Amador Valley High',2710,120),
  ('01003','2014-2015','Alameda','Mountain House Elementary',890,140),
  ('10001','2014-2015','Fresno','Buchanan High',3050,980),
  ('10002','2014-2015','Fresno','Teague Elementary',720,560);
)sql");
}

ChatResponse FunctionChatClient::complete(const ChatRequest& request) {
    auto text = fn_(request);
    if (!text) throw TransportError("scripted model has no reply for this request", false);
    return ChatResponse{std::move(*text), std::nullopt, {}};
}

std::shared_ptr<LlmGateway> make_gateway(std::shared_ptr<ChatClient> client) {
    GatewayOptions opts;
    opts.model_id = "scripted";
    opts.retry.sleep = [](std::chrono::milliseconds) {};
    return std::make_shared<LlmGateway>(std::move(client), std::move(opts));
}

namespace {

std::string line_value(const std::string& text, const std::string& label) {
    const auto p = text.find(label);
    if (p == std::string::npos) return {};
    const auto b = p + label.size();
    return text.substr(b, text.find('\n', b) - b);
}

std::optional<std::string> semantics_reply(const std::string& user) {
    const auto table = line_value(user, "Table: ");
    const auto column = line_value(user, "Column: ");
    json j = {{"description", ""}, {"aliases", json::array()}, {"unit_hint", nullptr},
              {"time_granularity_hint", nullptr}, {"enum_glossary", json::object()}};
    if (table == "schools" && column == "DOC") {
        j["description"] = "District ownership code.";
        j["enum_glossary"] = {{"52", "Elementary School District"}, {"54", "Unified School District"}};
    } else if (table == "schools" && column == "County") {
        j["description"] = "County name.";
    } else if (table == "frpm" && column == "Enrollment (K-12)") {
        j["description"] = "Enrollment for grades K through 12.";
        j["aliases"] = {"enrollment", "number of students"};
    } else if (table == "customer" && column == "gender") {
        j["description"] = "Customer gender.";
        j["aliases"] = {"sex"};
        j["enum_glossary"] = {{"F", "female"}, {"M", "male"}};
    } else if ((table == "sales" || table == "order") && column == "year") {
        j["description"] = table == "sales" ? "The sales year." : "The order year.";
        j["time_granularity_hint"] = "year";
    } else if (column == "amount") {
        j["description"] = "Amount in euros.";
        j["unit_hint"] = "EUR";
    } else {
        // Other columns get no semantics; a bare reply exercises that path.
        return std::string("No additional information.");
    }
    return "```json\n" + j.dump() + "\n```";
}

struct ScriptedQuery {
    const char* marker;
    const char* sql;
    const char* needs;    // prompt substrings required for `sql`, '|' separated
    const char* fallback;
};

const ScriptedQuery kQueries[] = {
    {"Fresno County", "SELECT COUNT(*) FROM schools WHERE County = 'Fresno'", "", ""},
    {"school names in Alameda", "SELECT School FROM schools WHERE County = 'Alameda'", "", ""},
    {"full address",
     "SELECT T1.Street FROM schools AS T1 JOIN frpm AS T2 ON T1.CDSCode = T2.CDSCode WHERE T1.County = 'Alameda' "
     "ORDER BY T2.\"Enrollment (K-12)\" DESC LIMIT 1",
     "", ""},
    {"ratio of Unified",
     "SELECT CAST(SUM(CASE WHEN DOC = '54' THEN 1 ELSE 0 END) AS REAL) / SUM(CASE WHEN DOC = '52' THEN 1 ELSE 0 END) "
     "FROM schools WHERE County = 'Orange'",
     "DOC = 52|DOC = 54",
     "SELECT CAST(SUM(CASE WHEN District LIKE '%Unified%' THEN 1 ELSE 0 END) AS REAL) / "
     "SUM(CASE WHEN District LIKE '%Elementary%' THEN 1 ELSE 0 END) FROM schools WHERE County = 'Orange'"},
    {"free meal count",
     "SELECT AVG(T2.\"Free Meal Count (K-12)\") FROM frpm AS T2 JOIN schools AS T1 ON T1.CDSCode = T2.CDSCode "
     "WHERE T1.County = 'Orange'",
     "", ""},
    {"female customers", "SELECT COUNT(*) FROM customer WHERE gender = 'F'", "", ""},
    {"average age", "SELECT AVG(age) FROM customer", "", ""},
    {"sales amount per year", "SELECT year, SUM(amount) FROM sales GROUP BY year", "", ""},
    {"after 2020", "SELECT COUNT(*) FROM \"order\" WHERE year > 2020", "", ""},
    {"most orders",
     "SELECT T1.name FROM customer AS T1 JOIN \"order\" AS T2 ON T1.customer_id = T2.customer_id "
     "GROUP BY T1.customer_id ORDER BY COUNT(*) DESC LIMIT 1",
     "", ""},
};

std::optional<std::string> generation_reply(const std::string& prompt) {
    const auto q = prompt.rfind("\nQuestion: ");
    if (q == std::string::npos) return std::nullopt;
    const auto question = prompt.substr(q);
    for (const auto& s : kQueries) {
        if (question.find(s.marker) == std::string::npos) continue;
        bool ok = true;
        std::string needs = s.needs;
        for (std::size_t b = 0; !needs.empty() && b <= needs.size();) {
            auto e = needs.find('|', b);
            if (e == std::string::npos) e = needs.size();
            if (prompt.find(needs.substr(b, e - b)) == std::string::npos) ok = false;
            b = e + 1;
        }
        return "```sql\n" + std::string(ok ? s.sql : s.fallback) + ";\n```";
    }
    return std::nullopt;
}

std::optional<std::string> routing_reply(const std::string& user) {
    // The scripted router mirrors the rule-based scores, phrased as a model
    // would, so the model path is exercised end to end.
    const auto q = line_value(user, "Question: ");
    const bool numeric = q.find("ratio") != std::string::npos || q.find("average") != std::string::npos ||
                         q.find("per year") != std::string::npos || q.find("most") != std::string::npos;
    const bool enumv = q.find("District") != std::string::npos || q.find("female") != std::string::npos ||
                       q.find("County") != std::string::npos;
    const bool synonym = q.find("enrollment") != std::string::npos;
    json j = {{"numeric", numeric ? 0.9 : 0.1}, {"domain", 0.2}, {"synonym", synonym ? 0.7 : 0.0},
              {"enum", enumv ? 0.85 : 0.05}};
    return "Here is my assessment.\n```json\n" + j.dump() + "\n```";
}

} // namespace

std::shared_ptr<ChatClient> scripted_model() {
    return std::make_shared<FunctionChatClient>([](const ChatRequest& r) -> std::optional<std::string> {
        if (r.system_prompt == semantics_system_prompt()) return semantics_reply(r.user_prompt);
        if (r.system_prompt == prompts::generation_system()) return generation_reply(r.user_prompt);
        if (r.system_prompt == prompts::routing_system()) return routing_reply(r.user_prompt);
        return std::nullopt;
    });
}

E2eFixture write_e2e_fixture(const fs::path& dir) {
    E2eFixture fx;
    fx.root = dir / "bird";
    fs::create_directories(fx.root / "dev_databases" / "california_schools");
    fs::create_directories(fx.root / "dev_databases" / "shop");
    create_schools_db(fx.root / "dev_databases" / "california_schools" / "california_schools.sqlite");
    create_shop_db(fx.root / "dev_databases" / "shop" / "shop.sqlite");

    auto rec = [](int qid, const char* db, const char* q, const char* ev, const char* sql, const char* diff) {
        return json{{"question_id", qid}, {"db_id", db}, {"question", q}, {"evidence", ev}, {"SQL", sql},
                    {"difficulty", diff}};
    };
    const char* cs = "california_schools";
    fx.records = {
        rec(0, cs, "How many schools are in Fresno County?", "", "SELECT COUNT(*) FROM schools WHERE County = 'Fresno'",
            "simple"),
        rec(5, cs, "List the school names in Alameda County.", "",
            "SELECT School FROM schools WHERE County = 'Alameda'", "simple"),
        rec(27, cs, "What is the full address of the school with the highest enrollment in Alameda County?",
            "full address = Street, City, State, Zip; enrollment refers to Enrollment (K-12)",
            "SELECT T1.Street, T1.City, T1.State, T1.Zip FROM schools AS T1 JOIN frpm AS T2 ON T1.CDSCode = T2.CDSCode "
            "WHERE T1.County = 'Alameda' ORDER BY T2.\"Enrollment (K-12)\" DESC LIMIT 1",
            "moderate"),
        rec(49, cs,
            "Compute the ratio of Unified School District schools to Elementary School District schools in Orange "
            "County.",
            "Elementary School District refers to DOC = 52; Unified School District refers to DOC = 54",
            "SELECT CAST(SUM(CASE WHEN DOC = '54' THEN 1 ELSE 0 END) AS REAL) / SUM(CASE WHEN DOC = '52' THEN 1 "
            "ELSE 0 END) FROM schools WHERE County = 'Orange'",
            "challenging"),
        rec(60, cs, "What is the average free meal count of schools in Orange County?", "",
            "SELECT AVG(frpm.\"Free Meal Count (K-12)\") FROM frpm JOIN schools ON schools.CDSCode = frpm.CDSCode "
            "WHERE schools.County = 'Orange'",
            "moderate"),
        rec(100, "shop", "How many female customers are there?", "female refers to gender = 'F'",
            "SELECT COUNT(*) FROM customer WHERE gender = 'F'", "simple"),
        rec(101, "shop", "What is the average age of customers?", "", "SELECT AVG(age) FROM customer", "simple"),
        rec(102, "shop", "What is the total sales amount per year?", "",
            "SELECT year, SUM(amount) FROM sales GROUP BY year ORDER BY year", "simple"),
        rec(103, "shop", "How many orders were placed after 2020?", "year > 2020",
            "SELECT COUNT(order_id) FROM \"order\" WHERE year >= 2021", "simple"),
        rec(104, "shop", "Which customer placed the most orders?", "",
            "SELECT name FROM customer WHERE customer_id = (SELECT customer_id FROM \"order\" GROUP BY customer_id "
            "ORDER BY COUNT(*) DESC LIMIT 1)",
            "moderate"),
    };
    write_file(fx.root / "dev.json", json(fx.records).dump(2));

    std::vector<TrainingPair> train{
        {"How many schools are in Orange County?", "SELECT COUNT(*) FROM schools WHERE County = 'Orange'",
         "california_schools"},
        {"What share of schools belong to Unified districts?",
         "SELECT CAST(SUM(CASE WHEN DOC = '54' THEN 1 ELSE 0 END) AS REAL) / COUNT(*) FROM schools",
         "california_schools"},
        {"What is the average amount of orders?", "SELECT AVG(amount) FROM \"order\"", "shop"},
        {"Which region had the highest sales in 2022?",
         "SELECT region FROM sales WHERE year = 2022 ORDER BY amount DESC LIMIT 1", "shop"},
        {"How many customers live in Paris?", "SELECT COUNT(*) FROM customer WHERE city = 'Paris'", "shop"},
    };
    BuildOptions opts;
    opts.check_schema = false;
    auto built = build_library(train, {}, nullptr, opts);
    fx.fewshot = dir / "fewshot.jsonl";
    save(built.library, fx.fewshot);
    return fx;
}

SchemaKnowledge toy_knowledge() {
    auto col = [](std::string name, std::string type) {
        ColumnKnowledge c;
        c.name = std::move(name);
        c.declared_type = std::move(type);
        return c;
    };
    SchemaKnowledge sk;
    sk.db_id = "toy";
    sk.tool_version = "test";
    TableKnowledge a{"A", "CREATE TABLE A (\n  id INTEGER PRIMARY KEY\n);", 0, {col("id", "INTEGER")}, {}};
    TableKnowledge b{"B", "CREATE TABLE B (\n  id INTEGER PRIMARY KEY,\n  a_id INTEGER\n);", 0,
                     {col("id", "INTEGER"), col("a_id", "INTEGER")}, {}};
    TableKnowledge c{"C", "CREATE TABLE C (\n  b_id INTEGER\n);", 0, {col("b_id", "INTEGER")}, {}};
    sk.tables = {a, b, c};
    sk.fk_edges = {{{"B", "a_id"}, {"A", "id"}, EdgeSource::declared, std::nullopt},
                   {{"C", "b_id"}, {"B", "id"}, EdgeSource::declared, std::nullopt}};
    return sk;
}

} // namespace ca::testing
