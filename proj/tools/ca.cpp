// SPDX-License-Identifier: Apache-2.0
// Command-line front end: mining, few-shot library, routing, evidence,
// end-to-end runs and scoring.
#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "ca/bench.hpp"
#include "ca/error.hpp"
#include "ca/evidence.hpp"
#include "ca/fewshot.hpp"
#include "ca/llm_gateway.hpp"
#include "ca/pipeline.hpp"
#include "ca/profiler.hpp"
#include "ca/router.hpp"
#include "ca/schema_knowledge.hpp"

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitData = 2;
constexpr int kExitFailures = 3;

struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct GatewayFlags {
    std::string mock_script;
    std::string record_script;
    std::string model;
    std::size_t max_in_flight = 4;
};

// Chat client chosen by flags: a replay script, else the environment's
// HTTP endpoint; optionally wrapped to record replies.
struct GatewaySetup {
    std::shared_ptr<ca::RecordingChatClient> recorder;
    std::shared_ptr<ca::LlmGateway> gateway;

    void finish(const GatewayFlags& flags) const {
        if (recorder) recorder->save(flags.record_script);
    }
};

GatewaySetup make_gateway(const GatewayFlags& flags) {
    GatewaySetup setup;
    std::shared_ptr<ca::ChatClient> client;
    if (!flags.mock_script.empty())
        client = std::make_shared<ca::MockChatClient>(ca::MockChatClient::from_file(flags.mock_script));
    else
        client = ca::http_client_from_environment();
    if (!client) return setup;
    if (!flags.record_script.empty()) {
        setup.recorder = std::make_shared<ca::RecordingChatClient>(client);
        client = setup.recorder;
    }
    ca::GatewayOptions opts;
    opts.model_id = flags.model;
    if (opts.model_id.empty())
        if (const char* m = std::getenv("CA_LLM_MODEL")) opts.model_id = m;
    opts.max_in_flight = flags.max_in_flight;
    setup.gateway = std::make_shared<ca::LlmGateway>(std::move(client), std::move(opts));
    return setup;
}

void write_file(const fs::path& path, const std::string& text) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw ca::PersistenceError(path, "cannot open for writing");
    out << text;
}

json routing_json(const ca::RoutingDecision& d) {
    json j;
    j["labels"] = json::array();
    for (auto t : d.labels) j["labels"].push_back(ca::to_string(t));
    j["confidences"] = json::object();
    for (auto t : ca::kEvidenceTypes) j["confidences"][std::string(ca::to_string(t))] = d.confidences.at(t);
    j["threshold"] = d.threshold;
    j["source"] = ca::to_string(d.source);
    return j;
}

ca::ReportFormat parse_format(const std::string& f) {
    return f == "csv" ? ca::ReportFormat::csv : ca::ReportFormat::table;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Companion-agent evidence construction for text-to-SQL"};
    app.set_config("--config", "", "Config file (TOML key = value; flags win over the file)");
    app.require_subcommand(1);
    app.fallthrough();

    GatewayFlags gw;
    app.add_option("--mock-script", gw.mock_script, "Replay model replies from a recorded script")
        ->check(CLI::ExistingFile);
    app.add_option("--record-script", gw.record_script, "Record model replies to this script file");
    app.add_option("--model", gw.model, "Model id (defaults to CA_LLM_MODEL)");
    app.add_option("--max-in-flight", gw.max_in_flight, "Concurrent model requests")->check(CLI::PositiveNumber);
    std::size_t workers = 0;
    app.add_option("--workers", workers, "Worker threads (0 = hardware concurrency, capped at 8)");

    // mine
    auto* mine = app.add_subcommand("mine", "Mine schema knowledge for a database file or a BIRD root");
    std::string mine_target, mine_out = ".";
    ca::SamplingSpec sampling;
    bool offline = false;
    mine->add_option("target", mine_target, "SQLite file or BIRD dataset root")->required();
    mine->add_option("--out", mine_out, "Output directory for <db_id>.knowledge.json");
    mine->add_option("--sample-n", sampling.n, "Sampled values per column")->check(CLI::PositiveNumber);
    mine->add_option("--seed", sampling.seed, "Sampling seed");
    mine->add_flag("--offline", offline, "Skip semantic induction even when a model is configured");

    // fewshot
    auto* fewshot = app.add_subcommand("fewshot", "Few-shot library tools");
    fewshot->require_subcommand(1);
    auto* fs_build = fewshot->add_subcommand("build", "Build a few-shot library from BIRD-style training pairs");
    std::string train_path, fs_out = "fewshot.jsonl", fs_knowledge_dir;
    std::size_t fs_k = 5;
    bool no_schema_check = false;
    fs_build->add_option("train", train_path, "Training file (JSON array with question, SQL, db_id)")->required();
    fs_build->add_option("--out", fs_out, "Library file (JSON lines)");
    fs_build->add_option("--k", fs_k, "Default number of examples to retrieve")->check(CLI::PositiveNumber);
    fs_build->add_option("--knowledge-dir", fs_knowledge_dir, "Directory of <db_id>.knowledge.json files");
    fs_build->add_flag("--no-schema-check", no_schema_check, "Keep pairs without checking them against the schema");
    auto* fs_query = fewshot->add_subcommand("query", "Retrieve the most similar library entries");
    std::string fs_question, fs_lib, fs_db;
    std::size_t fs_query_k = 5;
    fs_query->add_option("question", fs_question)->required();
    fs_query->add_option("--fewshot", fs_lib, "Library file")->required();
    fs_query->add_option("--k", fs_query_k)->check(CLI::PositiveNumber);
    fs_query->add_option("--db", fs_db, "Prefer entries from this database");

    // route
    auto* route_cmd = app.add_subcommand("route", "Classify the evidence types a question needs");
    std::string route_question, route_knowledge;
    double route_tau = ca::kDefaultRoutingThreshold;
    route_cmd->add_option("question", route_question)->required();
    route_cmd->add_option("--knowledge", route_knowledge, "Schema knowledge file")->required();
    route_cmd->add_option("--tau", route_tau, "Confidence threshold")->check(CLI::Range(0.0, 1.0));

    // evidence
    auto* evidence_cmd = app.add_subcommand("evidence", "Build the evidence bundle for a question");
    std::string ev_question, ev_knowledge, ev_fewshot;
    double ev_tau = ca::kDefaultRoutingThreshold;
    std::size_t ev_k = 5;
    bool ev_prompt = false;
    evidence_cmd->add_option("question", ev_question)->required();
    evidence_cmd->add_option("--knowledge", ev_knowledge, "Schema knowledge file")->required();
    evidence_cmd->add_option("--fewshot", ev_fewshot, "Few-shot library file");
    evidence_cmd->add_option("--tau", ev_tau)->check(CLI::Range(0.0, 1.0));
    evidence_cmd->add_option("--k", ev_k)->check(CLI::PositiveNumber);
    evidence_cmd->add_flag("--prompt", ev_prompt, "Print the assembled generation prompt instead of the bundle");

    // run
    auto* run_cmd = app.add_subcommand("run", "Generate and score SQL for a BIRD-layout dataset");
    ca::RunConfig run;
    std::string run_mode = "ca", run_knowledge_dir, run_fewshot;
    double run_timeout = 30;
    run_cmd->add_option("--bird", run.bird_root, "Dataset root")->required();
    run_cmd->add_option("--mode", run_mode, "no-evidence | gold-evidence | ca")
        ->check(CLI::IsMember({"no-evidence", "gold-evidence", "ca"}));
    auto* missing_opt =
        run_cmd->add_option("--missingness", run.missingness.level, "Fraction of gold evidence withheld")
            ->check(CLI::Range(0.0, 1.0));
    run_cmd->add_option("--seed", run.missingness.seed, "Missingness and sampling seed");
    run_cmd->add_option("--out", run.out_dir, "Output directory")->required();
    run_cmd->add_option("--knowledge-dir", run_knowledge_dir, "Schema knowledge cache (default <out>/knowledge)");
    run_cmd->add_option("--fewshot", run_fewshot, "Few-shot library file");
    run_cmd->add_option("--tau", run.tau)->check(CLI::Range(0.0, 1.0));
    run_cmd->add_option("--k", run.k)->check(CLI::PositiveNumber);
    run_cmd->add_option("--sample-n", run.sampling.n)->check(CLI::PositiveNumber);
    run_cmd->add_option("--timeout", run_timeout, "Per-query timeout in seconds")->check(CLI::PositiveNumber);
    run_cmd->add_option("--repeat", run.repeat, "Generation repeats")->check(CLI::PositiveNumber);

    // eval
    auto* eval_cmd = app.add_subcommand("eval", "Score a predictions file");
    std::string eval_predictions, eval_bird, eval_out, eval_format = "table";
    double eval_timeout = 30;
    eval_cmd->add_option("--predictions", eval_predictions)->required();
    eval_cmd->add_option("--bird", eval_bird)->required();
    eval_cmd->add_option("--out", eval_out, "Write the result JSON here");
    eval_cmd->add_option("--timeout", eval_timeout)->check(CLI::PositiveNumber);
    eval_cmd->add_option("--format", eval_format)->check(CLI::IsMember({"table", "csv"}));

    // report
    auto* report_cmd = app.add_subcommand("report", "Render a result file");
    std::string report_result, report_format = "table";
    report_cmd->add_option("--result", report_result)->required();
    report_cmd->add_option("--format", report_format)->check(CLI::IsMember({"table", "csv"}));

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitUsage;
    }

    try {
        const auto setup = make_gateway(gw);
        ca::LlmGateway* gateway = setup.gateway.get();
        int code = kExitOk;

        if (*mine) {
            ca::MiningOptions opts;
            opts.sampling = sampling;
            opts.created_at = ca::default_created_at();
            opts.workers = workers;
            std::vector<std::pair<std::string, fs::path>> targets;
            if (fs::is_directory(mine_target)) {
                for (const auto& [db_id, path] : ca::load_bird(mine_target).databases) targets.emplace_back(db_id, path);
            } else {
                targets.emplace_back(fs::path(mine_target).stem().string(), mine_target);
            }
            fs::create_directories(mine_out);
            for (const auto& [db_id, path] : targets) {
                opts.db_id = db_id;
                auto result = ca::mine_schema_knowledge(path, offline ? nullptr : gateway, opts);
                for (const auto& w : result.warnings) std::cerr << "warning: " << db_id << ": " << w << "\n";
                const auto file = fs::path(mine_out) / ca::knowledge_file_name(db_id);
                ca::save(result.knowledge, file);
                std::cout << file.string() << "\n";
            }
        } else if (*fs_build) {
            const auto pairs = ca::load_training_pairs(train_path);
            std::map<std::string, ca::SchemaKnowledge> knowledge;
            if (!no_schema_check) {
                if (fs_knowledge_dir.empty())
                    throw UsageError("fewshot build needs --knowledge-dir, or --no-schema-check");
                for (const auto& p : pairs) {
                    if (knowledge.count(p.db_id)) continue;
                    const auto file = fs::path(fs_knowledge_dir) / ca::knowledge_file_name(p.db_id);
                    if (fs::exists(file)) knowledge.emplace(p.db_id, ca::load_schema_knowledge(file));
                }
            }
            ca::BuildOptions opts;
            opts.check_schema = !no_schema_check;
            opts.workers = workers;
            auto built = ca::build_library(pairs, knowledge, gateway, opts);
            built.library.similarity_config.default_k = fs_k;
            for (const auto& w : built.warnings) std::cerr << "warning: " << w << "\n";
            for (const auto& r : built.rejected)
                std::cerr << "rejected pair " << r.index << " (" << r.reason << "): " << r.detail << "\n";
            ca::save(built.library, fs_out);
            std::cout << built.library.entries.size() << " entries written to " << fs_out << "\n";
        } else if (*fs_query) {
            ca::FewShotRetriever retriever(ca::load_fewshot_library(fs_lib));
            json out = json::array();
            for (const auto& s : retriever.retrieve(fs_question, fs_query_k,
                                                    fs_db.empty() ? std::nullopt : std::optional(fs_db))) {
                out.push_back({{"id", s.entry.id}, {"score", s.score}, {"db_id", s.entry.db_id},
                               {"question", s.entry.raw_question}, {"sql", s.entry.raw_sql}});
            }
            std::cout << out.dump(2) << "\n";
        } else if (*route_cmd) {
            const auto sk = ca::load_schema_knowledge(route_knowledge);
            std::cout << routing_json(ca::route(route_question, sk, gateway, route_tau)).dump(2) << "\n";
        } else if (*evidence_cmd) {
            const auto sk = ca::load_schema_knowledge(ev_knowledge);
            ca::FewShotRetriever retriever(ev_fewshot.empty() ? ca::FewShotLibrary{}
                                                              : ca::load_fewshot_library(ev_fewshot));
            ca::EvidenceOptions opts;
            opts.tau = ev_tau;
            opts.k = ev_k;
            const auto bundle = ca::build_evidence(ev_question, sk, &retriever, gateway, opts);
            for (const auto& w : bundle.warnings) std::cerr << "warning: " << w << "\n";
            if (ev_prompt) {
                ca::PromptInput input{bundle.rewritten_question.value_or(bundle.question),
                                      ca::prompt_tables(bundle, sk), ca::evidence_lines(bundle),
                                      ca::render_fewshot_block(bundle.fewshot)};
                std::cout << ca::assemble_prompt(input, sk) << "\n";
            } else {
                std::cout << ca::bundle_to_json(bundle).dump(2) << "\n";
            }
        } else if (*run_cmd) {
            if (!gateway)
                throw UsageError("no language model configured: pass --mock-script or set CA_LLM_BASE_URL");
            run.mode = ca::parse_run_mode(run_mode);
            if (missing_opt->count() == 0) run.missingness.level = run.mode == ca::RunMode::gold_evidence ? 0.0 : 1.0;
            run.sampling.seed = run.missingness.seed;
            if (!run_knowledge_dir.empty()) run.knowledge_dir = run_knowledge_dir;
            if (!run_fewshot.empty()) run.fewshot_path = run_fewshot;
            run.timeout = std::chrono::milliseconds(static_cast<long long>(run_timeout * 1000));
            run.workers = workers;
            run.created_at = ca::default_created_at();
            const auto output = ca::run_pipeline(run, *gateway);
            for (const auto& r : output.rejected) std::cerr << "skipped " << r << "\n";
            for (const auto& w : output.warnings) std::cerr << "warning: " << w << "\n";
            std::ifstream report(run.out_dir / "report.txt");
            std::cout << report.rdbuf();
            if (output.failures() > 0) code = kExitFailures;
        } else if (*eval_cmd) {
            const auto ds = ca::load_bird(eval_bird);
            ca::EvalOptions opts;
            opts.timeout = std::chrono::milliseconds(static_cast<long long>(eval_timeout * 1000));
            opts.workers = workers;
            const auto result = ca::evaluate(ca::load_predictions(eval_predictions), ds.examples, ds.databases, opts);
            if (!eval_out.empty()) write_file(eval_out, ca::to_json(result).dump(2) + "\n");
            std::cout << ca::render_report(result, parse_format(eval_format));
            if (result.failures() > 0) code = kExitFailures;
        } else if (*report_cmd) {
            std::ifstream in(report_result, std::ios::binary);
            if (!in) throw ca::MissingFileError(report_result);
            json j;
            try {
                j = json::parse(in);
            } catch (const json::exception& e) {
                throw ca::FormatError(report_result, e.what());
            }
            try {
                if (j.contains("runs")) {
                    const auto& runs = j.at("runs");
                    for (std::size_t r = 0; r < runs.size(); ++r) {
                        if (runs.size() > 1) std::cout << "Run " << r + 1 << "\n";
                        std::cout << ca::render_report(ca::eval_result_from_json(runs[r]), parse_format(report_format));
                    }
                } else {
                    std::cout << ca::render_report(ca::eval_result_from_json(j), parse_format(report_format));
                }
            } catch (const json::exception& e) {
                throw ca::FormatError(report_result, e.what());
            }
        }
        setup.finish(gw);
        return code;
    } catch (const UsageError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const ca::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitData;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitData;
    }
}
