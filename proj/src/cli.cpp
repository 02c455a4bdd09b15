#include "storymem/cli.hpp"

#include "storymem/engine.hpp"
#include "storymem/errors.hpp"
#include "storymem/eval.hpp"
#include "storymem/remote_client.hpp"
#include "storymem/server.hpp"
#include "storymem/store.hpp"
#include "storymem/text.hpp"

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <iostream>
#include <memory>

using nlohmann::json;

namespace storymem::cli {

namespace {

struct CommonOpts {
    std::string config_path;
    std::string backend = "mock-sum";
    std::string state_path;
    std::string transcript_path;
    long capacity_chars = 0; // 0 = keep config/state value
    std::string policy;
};

EngineConfig load_config(const CommonOpts& opts) {
    EngineConfig cfg =
        opts.config_path.empty() ? EngineConfig{} : load_engine_config(opts.config_path);
    if (!opts.policy.empty())
        cfg.forgetting.policy = forgetting_policy_from_string(opts.policy);
    if (opts.capacity_chars > 0) cfg.capacity_chars = opts.capacity_chars;
    cfg.validate();
    return cfg;
}

EngineBackends make_backends(const EngineConfig& cfg, const std::string& name) {
    if (name == "mock-echo") return mock_backends(MockBehavior::Echo);
    if (name == "mock-sum") return mock_backends(MockBehavior::TemplateSum);
    if (name == "remote") {
        if (!cfg.remote)
            throw InputError("--backend remote requires a 'remote' section in the config");
        EngineBackends b;
        std::shared_ptr<TextGenerator> gen = remote_generator(*cfg.remote);
        b.summarizer = gen;
        b.persona_extractor = gen;
        b.persona_merger = gen;
        b.scorer = lexical_scorer();
        b.reranker = lexical_reranker();
        return b;
    }
    throw InputError("unknown backend '" + name + "' (mock-echo|mock-sum|remote)");
}

std::string events_path(const std::string& state_path) {
    return state_path + ".events.jsonl";
}
std::string evictions_path(const std::string& state_path) {
    return state_path + ".evictions.jsonl";
}

json stats_json(const Engine& engine) {
    EngineStats s = engine.stats();
    return {{"turns", s.turns},
            {"rounds", s.rounds},
            {"pool_items", s.pool_items},
            {"pool_chars", s.pool_chars},
            {"capacity_chars", s.capacity_chars ? json(*s.capacity_chars) : json(nullptr)},
            {"level1_units", s.level1_units},
            {"level2_units", s.level2_units},
            {"level3_units", s.level3_units},
            {"persona_items", s.persona_items},
            {"evictions", s.evictions},
            {"session_id", engine.state().session_id}};
}

json retrieval_json(const std::vector<RetrievedMemory>& results) {
    json out = json::array();
    for (const auto& m : results)
        out.push_back({{"id", m.id},
                       {"kind", to_string(m.kind)},
                       {"text", m.text},
                       {"rerank_score", m.rerank_score},
                       {"effective_score", m.effective_score}});
    return out;
}

// ROUGE-precision as a similarity for best-match scoring: the memory is the
// candidate, the label the reference.
class RougeScorer : public SimilarityScorer {
public:
    explicit RougeScorer(eval::RougeVariant variant) : variant_(variant) {}
    double score(const std::string& label, const std::string& memory) override {
        return eval::rouge_precision(memory, label, variant_);
    }
    std::string identity() const override {
        return variant_ == eval::RougeVariant::Rouge2 ? "rouge2" : "rougeL";
    }

private:
    eval::RougeVariant variant_;
};

std::vector<std::string> pool_texts(const Engine& engine) {
    std::vector<std::string> texts;
    for (const auto& [id, item] : engine.pool().items) texts.push_back(item.text);
    return texts;
}

Engine load_engine(const CommonOpts& opts, const EngineConfig& cfg,
                   EngineBackends backends) {
    Engine engine = Engine::load(store::read_file(opts.state_path), cfg, std::move(backends));
    if (opts.capacity_chars > 0) engine.set_capacity(opts.capacity_chars);
    return engine;
}

void flush_logs(Engine& engine, const std::string& state_path,
                const std::vector<DialogueTurn>& accepted, bool truncate) {
    if (truncate) {
        store::write_file(events_path(state_path), "");
        store::write_file(evictions_path(state_path), "");
    }
    store::append_event_log(events_path(state_path), accepted);
    store::append_eviction_log(evictions_path(state_path), engine.drain_eviction_log());
}

void print_warnings(const Engine& engine, std::ostream& err) {
    for (const auto& w : engine.warnings()) err << "warning: " << w << "\n";
}

int cmd_ingest(const CommonOpts& opts, std::ostream& out, std::ostream& err) {
    EngineConfig cfg = load_config(opts);
    Engine engine(cfg, make_backends(cfg, opts.backend));
    Transcript transcript = store::read_transcript_file(opts.transcript_path);
    engine.ingest_transcript(transcript);
    store::write_file(opts.state_path, engine.save());
    flush_logs(engine, opts.state_path, transcript.turns, /*truncate=*/true);
    print_warnings(engine, err);
    out << stats_json(engine).dump(2) << "\n";
    return kExitOk;
}

int cmd_step(const CommonOpts& opts, const std::string& out_path, std::ostream& out,
             std::ostream& err) {
    EngineConfig cfg = load_config(opts);
    Engine engine = load_engine(opts, cfg, make_backends(cfg, opts.backend));
    Transcript transcript = store::read_transcript_file(opts.transcript_path);
    for (const auto& turn : transcript.turns) engine.ingest_turn(turn);
    const std::string target = out_path.empty() ? opts.state_path : out_path;
    store::write_file(target, engine.save());
    flush_logs(engine, target, transcript.turns, /*truncate=*/target != opts.state_path);
    print_warnings(engine, err);
    out << stats_json(engine).dump(2) << "\n";
    return kExitOk;
}

int cmd_dump(const std::string& state_path, const std::string& section,
             std::ostream& out) {
    store::StateDocument doc = store::load(store::read_file(state_path));
    // Re-serialize through the canonical writer, then slice the section.
    json payload = json::parse(store::save(doc))["payload"];
    if (section == "all") {
        out << payload.dump(2) << "\n";
        return kExitOk;
    }
    const json& state = payload["state"];
    if (!state.contains(section))
        throw InputError("unknown section '" + section + "' (all|pool|persona|nsb|buffers)");
    out << state[section].dump(2) << "\n";
    return kExitOk;
}

int cmd_retrieve(const CommonOpts& opts, const std::string& query, int k,
                 std::ostream& out) {
    EngineConfig cfg = load_config(opts);
    Engine engine = load_engine(opts, cfg, make_backends(cfg, opts.backend));
    auto results = engine.retrieve(query, k > 0 ? k : cfg.retrieval_k);
    out << json({{"query", query}, {"results", retrieval_json(results)}}).dump(2) << "\n";
    return kExitOk;
}

int cmd_evict_log(const std::string& path, std::ostream& out) {
    for (const auto& r : store::read_eviction_log(path))
        out << json({{"round", r.round},
                     {"evicted_id", r.evicted_id},
                     {"effective_score", r.effective_score},
                     {"policy", r.policy}})
                   .dump()
            << "\n";
    return kExitOk;
}

int cmd_eval_labels(const CommonOpts& opts, const std::string& labels_path,
                    bool with_memscore, std::ostream& out) {
    EngineConfig cfg = load_config(opts);
    EngineBackends backends = make_backends(cfg, opts.backend);
    Engine engine = load_engine(opts, cfg, backends);
    auto labels = eval::read_labels_file(labels_path);
    auto memories = pool_texts(engine);

    auto lexical = lexical_scorer();
    RougeScorer rouge2(eval::RougeVariant::Rouge2);
    RougeScorer rougeL(eval::RougeVariant::RougeL);

    json metrics = {{"best_match_lexical", eval::best_match_score(labels, memories, *lexical)},
                    {"rouge2_precision", eval::best_match_score(labels, memories, rouge2)},
                    {"rougeL_precision", eval::best_match_score(labels, memories, rougeL)}};
    eval::EvalLog log;
    if (with_memscore)
        metrics["mem_score"] =
            eval::mem_score(memories, labels, *lexical, *backends.summarizer, &log);

    json detail = json::array();
    for (const auto& e : log)
        detail.push_back({{"context", e.context}, {"raw_output", e.raw_output}});
    out << json({{"metrics", metrics},
                 {"labels", labels.size()},
                 {"memories", memories.size()},
                 {"log", detail}})
               .dump(2)
        << "\n";
    return kExitOk;
}

int cmd_eval_probes(const CommonOpts& opts, const std::string& probes_path,
                    std::ostream& out) {
    EngineConfig cfg = load_config(opts);
    EngineBackends backends = make_backends(cfg, opts.backend);
    Engine engine = load_engine(opts, cfg, backends);
    auto probes = eval::read_probes_file(probes_path);

    // Every probe sees the final pool; per-turn replay is a library-level
    // concern where the caller controls the provider.
    auto memories = pool_texts(engine);
    eval::MemoryProvider provider = [&](int) { return memories; };
    eval::EvalLog log;
    double precision =
        eval::probe_qa_precision(probes, provider, *backends.summarizer, &log);

    json detail = json::array();
    for (const auto& e : log)
        detail.push_back({{"context", e.context}, {"raw_output", e.raw_output}});
    out << json({{"metrics", {{"probe_qa_precision", precision}}},
                 {"probes", probes.size()},
                 {"log", detail}})
               .dump(2)
        << "\n";
    return kExitOk;
}

int cmd_eval_table(const CommonOpts& opts, const std::string& triplets_path,
                   std::ostream& out) {
    EngineConfig cfg = load_config(opts);
    EngineBackends backends = make_backends(cfg, opts.backend);
    Engine engine = opts.state_path.empty()
                        ? Engine(cfg, backends, "probe-table")
                        : load_engine(opts, cfg, backends);
    auto triplets = eval::read_triplets_file(triplets_path);
    eval::EvalLog log;
    double score = eval::probe_table_eval(triplets, engine, *backends.summarizer,
                                          *backends.summarizer, &log);
    json detail = json::array();
    for (const auto& e : log)
        detail.push_back({{"context", e.context}, {"raw_output", e.raw_output}});
    out << json({{"metrics", {{"probe_table_score", score}}},
                 {"triplets", triplets.size()},
                 {"log", detail}})
               .dump(2)
        << "\n";
    return kExitOk;
}

int cmd_serve(const CommonOpts& opts, const std::string& host, int port,
              std::ostream& out) {
    EngineConfig cfg = load_config(opts);
    EngineBackends backends = make_backends(cfg, opts.backend);
    auto engine = opts.state_path.empty()
                      ? std::make_unique<Engine>(cfg, backends, "serve")
                      : std::make_unique<Engine>(load_engine(opts, cfg, backends));
    MemoryServer server(std::move(engine));
    out << "listening on " << host << ":" << port << std::endl;
    server.listen(host, port);
    return kExitOk;
}

int map_error(const Error& e, std::ostream& err) {
    err << "error: " << e.what() << "\n";
    switch (e.kind()) {
        case ErrorKind::BackendTransport:
        case ErrorKind::BackendAuth:
        case ErrorKind::BackendProtocol:
        case ErrorKind::BackendBudget:
            return kExitBackend;
        case ErrorKind::CapacityOverflow:
            return kExitCapacity;
        default:
            return kExitInput;
    }
}

} // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"long-term role-play dialogue memory engine"};
    app.require_subcommand(1);

    CommonOpts opts;
    std::string out_path, section = "all", query, labels_path, probes_path,
                triplets_path, log_path, host = "127.0.0.1";
    int k = 0, port = 8787;
    bool with_memscore = false;

    auto add_common = [&](CLI::App* cmd, bool with_backend = true) {
        cmd->add_option("--config", opts.config_path, "engine config file (JSON)");
        if (with_backend)
            cmd->add_option("--backend", opts.backend,
                            "text backend: mock-echo|mock-sum|remote");
    };

    auto* ingest = app.add_subcommand("ingest", "replay a transcript into a new state file");
    ingest->add_option("--transcript", opts.transcript_path)->required();
    ingest->add_option("--state", opts.state_path, "output state file")->required();
    ingest->add_option("--capacity-chars", opts.capacity_chars);
    ingest->add_option("--policy", opts.policy,
                       "competition_inhibition|ebbinghaus|fifo|no_inhibition|none");
    add_common(ingest);

    auto* step = app.add_subcommand("step", "continue a saved state with more turns");
    step->add_option("--state", opts.state_path)->required();
    step->add_option("--transcript", opts.transcript_path)->required();
    step->add_option("--out", out_path, "write here instead of overwriting --state");
    step->add_option("--capacity-chars", opts.capacity_chars);
    add_common(step);

    auto* dump = app.add_subcommand("dump", "print a saved state document");
    dump->add_option("--state", opts.state_path)->required();
    dump->add_option("--section", section, "all|pool|persona|nsb|buffers");

    auto* retrieve = app.add_subcommand("retrieve", "rank memories against a query");
    retrieve->add_option("--state", opts.state_path)->required();
    retrieve->add_option("--query", query)->required();
    retrieve->add_option("--k", k, "result count (default: retrieval_k)");
    add_common(retrieve);

    auto* evict = app.add_subcommand("evict-log", "print eviction audit records");
    evict->add_option("--state", opts.state_path, "state file whose log to read");
    evict->add_option("--log", log_path, "explicit log path");

    auto* eval_labels = app.add_subcommand("eval-labels", "best-match label metrics");
    eval_labels->add_option("--state", opts.state_path)->required();
    eval_labels->add_option("--labels", labels_path)->required();
    eval_labels->add_flag("--with-memscore", with_memscore,
                          "judge memories with the text backend");
    add_common(eval_labels);

    auto* eval_probes = app.add_subcommand("eval-probes", "multiple-choice probe precision");
    eval_probes->add_option("--state", opts.state_path)->required();
    eval_probes->add_option("--probes", probes_path)->required();
    add_common(eval_probes);

    auto* eval_table = app.add_subcommand("eval-table", "insertion-recall probe table");
    eval_table->add_option("--triplets", triplets_path)->required();
    eval_table->add_option("--state", opts.state_path, "optional preloaded state");
    add_common(eval_table);

    auto* serve = app.add_subcommand("serve", "expose the engine over HTTP");
    serve->add_option("--state", opts.state_path, "optional preloaded state");
    serve->add_option("--host", host);
    serve->add_option("--port", port);
    serve->add_option("--capacity-chars", opts.capacity_chars);
    add_common(serve);

    std::vector<const char*> argv;
    argv.push_back("storymem");
    for (const auto& a : args) argv.push_back(a.c_str());

    try {
        app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return kExitOk;
    } catch (const CLI::CallForAllHelp&) {
        out << app.help("", CLI::AppFormatMode::All);
        return kExitOk;
    } catch (const CLI::ParseError& e) {
        err << "usage error: " << e.what() << "\n";
        return kExitUsage;
    }

    try {
        if (ingest->parsed()) return cmd_ingest(opts, out, err);
        if (step->parsed()) return cmd_step(opts, out_path, out, err);
        if (dump->parsed()) return cmd_dump(opts.state_path, section, out);
        if (retrieve->parsed()) return cmd_retrieve(opts, query, k, out);
        if (evict->parsed()) {
            if (log_path.empty() && opts.state_path.empty())
                throw InputError("evict-log needs --state or --log");
            return cmd_evict_log(
                log_path.empty() ? evictions_path(opts.state_path) : log_path, out);
        }
        if (eval_labels->parsed())
            return cmd_eval_labels(opts, labels_path, with_memscore, out);
        if (eval_probes->parsed()) return cmd_eval_probes(opts, probes_path, out);
        if (eval_table->parsed()) return cmd_eval_table(opts, triplets_path, out);
        if (serve->parsed()) return cmd_serve(opts, host, port, out);
        err << "no subcommand\n";
        return kExitUsage;
    } catch (const Error& e) {
        return map_error(e, err);
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return 1;
    }
}

int run(int argc, char** argv) {
    std::vector<std::string> args;
    for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
    return run(args, std::cout, std::cerr);
}

} // namespace storymem::cli
