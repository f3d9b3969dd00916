// SPDX-License-Identifier: Apache-2.0
#include "ca/pipeline.hpp"

#include <cstdlib>
#include <fstream>

#include "ca/error.hpp"
#include "ca/evidence.hpp"
#include "ca/fewshot.hpp"
#include "ca/llm_gateway.hpp"
#include "ca/parallel.hpp"
#include "ca/text.hpp"

namespace ca {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

namespace {

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw PersistenceError(path, "cannot open for writing");
    out << text;
    if (!out) throw PersistenceError(path, "write failed");
}

} // namespace

std::string_view to_string(RunMode m) {
    switch (m) {
    case RunMode::no_evidence: return "no-evidence";
    case RunMode::gold_evidence: return "gold-evidence";
    case RunMode::ca: return "ca";
    }
    return "?";
}

RunMode parse_run_mode(std::string_view name) {
    if (name == "no-evidence") return RunMode::no_evidence;
    if (name == "gold-evidence") return RunMode::gold_evidence;
    if (name == "ca") return RunMode::ca;
    throw DataError("unknown mode '" + std::string(name) + "'");
}

Timestamp default_created_at() {
    if (const char* epoch = std::getenv("SOURCE_DATE_EPOCH"); epoch && *epoch) {
        try {
            return Timestamp(std::chrono::seconds(std::stoll(epoch)));
        } catch (const std::exception&) {
            throw DataError("SOURCE_DATE_EPOCH is not an integer");
        }
    }
    return std::chrono::time_point_cast<std::chrono::seconds>(std::chrono::system_clock::now());
}

double RunOutput::mean_ex() const {
    if (runs.empty()) return 0.0;
    double sum = 0;
    for (const auto& r : runs) sum += r.total.ex();
    return sum / static_cast<double>(runs.size());
}

std::size_t RunOutput::failures() const {
    std::size_t n = 0;
    for (const auto& r : runs) n += r.failures();
    return n;
}

SchemaKnowledge knowledge_for(const std::string& db_id, const fs::path& db_path, const fs::path& cache_dir,
                              LlmGateway* gateway, const SamplingSpec& sampling, Timestamp created_at,
                              std::vector<std::string>& warnings) {
    const auto cached = cache_dir / knowledge_file_name(db_id);
    if (fs::exists(cached)) return load_schema_knowledge(cached);
    MiningOptions opts;
    opts.sampling = sampling;
    opts.db_id = db_id;
    opts.created_at = created_at;
    auto mined = mine_schema_knowledge(db_path, gateway, opts);
    for (auto& w : mined.warnings) warnings.push_back(db_id + ": " + w);
    fs::create_directories(cache_dir);
    save(mined.knowledge, cached);
    return std::move(mined.knowledge);
}

RunOutput run_pipeline(const RunConfig& config, LlmGateway& gateway) {
    if (config.repeat == 0) throw InvariantError("repeat must be >= 1");
    RunOutput out;
    auto dataset = load_bird(config.bird_root);
    out.rejected = dataset.rejected;
    const auto examples = apply_missingness(dataset.examples, config.missingness);
    fs::create_directories(config.out_dir);

    std::map<std::string, SchemaKnowledge> knowledge;
    std::optional<FewShotRetriever> retriever;
    if (config.mode == RunMode::ca) {
        const auto cache = config.knowledge_dir.value_or(config.out_dir / "knowledge");
        std::set<std::string> needed;
        for (const auto& ex : examples)
            if (!ex.gold_evidence) needed.insert(ex.db_id);
        for (const auto& db_id : needed)
            knowledge.emplace(db_id, knowledge_for(db_id, dataset.databases.at(db_id), cache, &gateway,
                                                   config.sampling, config.created_at, out.warnings));
        retriever.emplace(config.fewshot_path ? load_fewshot_library(*config.fewshot_path) : FewShotLibrary{});
    }

    EvidenceOptions ev_opts;
    ev_opts.tau = config.tau;
    ev_opts.k = config.k;

    // Bundles depend only on the example, so they are built once and reused
    // by every repeat; generation is what repeats.
    std::vector<std::optional<std::string>> prompts(examples.size());
    std::vector<std::optional<json>> bundles(examples.size());
    std::vector<std::vector<std::string>> example_warnings(examples.size());
    parallel_for(examples.size(), config.workers, [&](std::size_t i) {
        const auto& ex = examples[i];
        PromptInput input;
        input.question = ex.question;
        if (config.mode == RunMode::ca && !ex.gold_evidence) {
            const auto& sk = knowledge.at(ex.db_id);
            auto bundle = build_evidence(ex.question, sk, &*retriever, &gateway, ev_opts);
            input.question = bundle.rewritten_question.value_or(ex.question);
            input.tables = prompt_tables(bundle, sk);
            input.evidence = evidence_lines(bundle);
            input.fewshot_block = render_fewshot_block(bundle.fewshot);
            for (auto& w : bundle.warnings) example_warnings[i].push_back(std::move(w));
            json line;
            line["question_id"] = ex.question_id;
            const auto body = bundle_to_json(bundle);
            for (const auto& [k, v] : body.items()) line[k] = v;
            bundles[i] = std::move(line);
            prompts[i] = assemble_prompt(input, sk);
            return;
        }
        if (config.mode != RunMode::no_evidence && ex.gold_evidence) input.evidence.push_back(*ex.gold_evidence);
        // Baseline prompts carry every table; the DDL comes from a cheap
        // structure-only extraction rather than full mining.
        SchemaKnowledge slice;
        try {
            const auto db = Database::open_read_only(dataset.databases.at(ex.db_id));
            for (auto& t : extract_structure(db).tables) {
                TableKnowledge tk;
                tk.name = t.name;
                tk.simplified_ddl = t.simplified_ddl;
                slice.tables.push_back(std::move(tk));
            }
        } catch (const Error& e) {
            example_warnings[i].push_back("question " + std::to_string(ex.question_id) + ": " + e.what());
            return;
        }
        prompts[i] = assemble_prompt(input, slice);
    });
    for (auto& ws : example_warnings)
        for (auto& w : ws) out.warnings.push_back(std::move(w));

    std::string bundle_lines;
    for (std::size_t i = 0; i < examples.size(); ++i)
        if (bundles[i]) bundle_lines += bundles[i]->dump() + "\n";
    if (config.mode == RunMode::ca) write_text(config.out_dir / "bundles.jsonl", bundle_lines);

    EvalOptions eval_opts;
    eval_opts.timeout = config.timeout;
    eval_opts.workers = config.workers;
    std::string report;
    json result_json;
    result_json["mode"] = to_string(config.mode);
    result_json["missingness"] = {{"level", config.missingness.level}, {"seed", config.missingness.seed}};
    result_json["runs"] = json::array();
    for (std::size_t r = 0; r < config.repeat; ++r) {
        std::vector<std::optional<std::string>> sql(examples.size());
        std::vector<std::optional<std::string>> errors(examples.size());
        parallel_for(examples.size(), config.workers, [&](std::size_t i) {
            if (!prompts[i]) return;
            try {
                sql[i] = generate_sql(gateway, *prompts[i]);
            } catch (const Error& e) {
                errors[i] = e.what();
            }
        });
        Predictions predictions;
        for (std::size_t i = 0; i < examples.size(); ++i) {
            predictions[examples[i].question_id] = sql[i];
            if (errors[i])
                out.warnings.push_back("question " + std::to_string(examples[i].question_id) +
                                       ": generation failed: " + *errors[i]);
        }
        const std::string suffix = r == 0 ? "" : "_run" + std::to_string(r + 1);
        write_text(config.out_dir / ("predictions" + suffix + ".json"), predictions_to_json(predictions).dump(2) + "\n");
        auto result = evaluate(predictions, examples, dataset.databases, eval_opts);
        if (config.repeat > 1) report += "Run " + std::to_string(r + 1) + "\n";
        report += render_report(result);
        result_json["runs"].push_back(to_json(result));
        out.runs.push_back(std::move(result));
    }
    if (config.repeat > 1) {
        char buf[32];
        std::snprintf(buf, sizeof buf, "%.2f", out.mean_ex());
        report += "Mean total EX over " + std::to_string(config.repeat) + " runs: " + buf + "\n";
    }
    write_text(config.out_dir / "result.json", result_json.dump(2) + "\n");
    write_text(config.out_dir / "report.txt", report);
    return out;
}

} // namespace ca
