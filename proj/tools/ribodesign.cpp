// ribodesign command-line front end.
#include <chrono>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>
#include <thread>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "ribodesign/error.hpp"
#include "ribodesign/meta_opt.hpp"
#include "ribodesign/pipeline.hpp"
#include "ribodesign/ribo_eval.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace ribodesign;

namespace {

constexpr int kManifestSchema = 1;
constexpr const char* kEngineEnv = "RIBODESIGN_ENGINE";

struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

std::string utc_now() {
    const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&now, &tm);
    std::ostringstream out;
    out << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
    return out.str();
}

/// Collects what a run read, wrote and resolved; written next to the outputs.
class Manifest {
public:
    explicit Manifest(std::string command) : command_(std::move(command)), started_(utc_now()) {}

    void config(json c) { config_ = std::move(c); }
    void seed(std::uint64_t s) { seed_ = s; }
    void input(const std::string& path) { inputs_.push_back(path); }
    void output(const std::string& path) { outputs_.push_back(path); }

    void write(const fs::path& path) {
        json j{{"schema_version", kManifestSchema},
               {"command", command_},
               {"tool_version", RIBODESIGN_VERSION},
               {"config", config_},
               {"seed", seed_ ? json(*seed_) : json(nullptr)},
               {"inputs", inputs_},
               {"outputs", outputs_},
               {"started_at", started_},
               {"finished_at", utc_now()}};
        std::ofstream out(path);
        if (!out) throw Error(ErrorCode::Io, "cannot write manifest '" + path.string() + "'");
        out << j.dump(2) << '\n';
    }

private:
    std::string command_;
    std::string started_;
    json config_ = json::object();
    std::optional<std::uint64_t> seed_;
    std::vector<std::string> inputs_;
    std::vector<std::string> outputs_;
};

std::ofstream open_out(const fs::path& path) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    std::ofstream out(path);
    if (!out) throw Error(ErrorCode::Io, "cannot write '" + path.string() + "'");
    return out;
}

std::ifstream open_in(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::Io, "cannot read '" + path.string() + "'");
    return in;
}

fs::path manifest_for(const fs::path& output) {
    fs::path p = output;
    p += ".manifest.json";
    return p;
}

DesignSpace resolve_space(const std::string& spec) {
    if (spec == "riboswitch") return riboswitch_design_space();
    return load_design_space(spec);
}

std::vector<Task> read_tasks(const fs::path& path) {
    auto in = open_in(path);
    return read_tasks_jsonl(in);
}

// Engine option shared by every subcommand.
struct Common {
    std::string engine;
    std::uint64_t seed = 0;
    unsigned workers = 1;
};

void add_engine(CLI::App* cmd, Common& c) {
    cmd->add_option("--engine", c.engine, "internal | external:<command> (default $" + std::string(kEngineEnv) + ")");
}

void add_seed(CLI::App* cmd, Common& c) { cmd->add_option("--seed", c.seed, "RNG seed")->capture_default_str(); }

void add_workers(CLI::App* cmd, Common& c) {
    cmd->add_option("--workers", c.workers, "worker threads")->check(CLI::Range(1u, 256u))->capture_default_str();
}

FoldingEngine make_engine(const Common& c) {
    std::string spec = c.engine;
    if (spec.empty()) {
        const char* env = std::getenv(kEngineEnv);
        spec = env && *env ? env : "internal";
    }
    return FoldingEngine::from_spec(spec);
}

// ---------------------------------------------------------------------------

struct DatagenOptions {
    Common common;
    std::string corpus;
    std::size_t random = 0;
    std::size_t min_length = 30;
    std::size_t max_length = 400;
    std::size_t long_size = 1000;
    std::size_t short_size = 1000;
    std::size_t random_size = 1000;
    std::size_t validation_size = 100;
    MaskingPolicy policy;
    std::string out;
};

void cmd_datagen(const DatagenOptions& o) {
    if (o.corpus.empty() == (o.random == 0)) throw UsageError("datagen needs exactly one of --corpus or --random");
    const FoldingEngine engine = make_engine(o.common);
    Rng rng = make_stream(o.common.seed, 0);
    Manifest manifest("datagen");

    Corpus corpus;
    if (!o.corpus.empty()) {
        auto in = open_in(o.corpus);
        const fs::path ext = fs::path(o.corpus).extension();
        corpus = ext == ".tsv" ? read_tsv_corpus(in) : read_fasta_corpus(in, engine);
        manifest.input(o.corpus);
    } else {
        corpus = random_corpus(o.random, o.min_length, o.max_length, engine, rng);
    }

    const std::vector<DatasetSpec> specs{{DatasetKind::Validation, o.validation_size},
                                         {DatasetKind::Long, o.long_size},
                                         {DatasetKind::Short, o.short_size},
                                         {DatasetKind::Random, o.random_size}};
    const auto sets = build_datasets(corpus, specs, o.policy, rng);
    const fs::path dir(o.out);
    fs::create_directories(dir);
    for (const auto& [kind, tasks] : sets) {
        const fs::path file = dir / (std::string(to_string(kind)) + ".jsonl");
        auto out = open_out(file);
        write_tasks_jsonl(out, tasks);
        manifest.output(file.string());
    }
    manifest.seed(o.common.seed);
    manifest.config({{"engine", engine.describe()},
                     {"corpus_entries", corpus.size()},
                     {"random", o.random},
                     {"length_range", {o.min_length, o.max_length}},
                     {"sizes",
                      {{"long", o.long_size},
                       {"short", o.short_size},
                       {"random", o.random_size},
                       {"validation", o.validation_size}}},
                     {"masking",
                      {{"max_structure_parts", o.policy.max_structure_parts},
                       {"max_part_fraction", o.policy.max_part_fraction},
                       {"sequence_random_mask_fraction", o.policy.sequence_random_mask_fraction},
                       {"inverse_folding_fraction", o.policy.inverse_folding_fraction}}}});
    manifest.write(dir / "manifest.json");
}

struct TrainOptions {
    Common common;
    std::string data;
    std::string space;
    std::size_t tasks = 1000;
    std::string config;
    std::size_t steps = 50000;
    std::string out;
    std::string curve;
};

void cmd_train(const TrainOptions& o) {
    if (o.data.empty() == o.space.empty()) throw UsageError("train needs exactly one of --data or --space");
    const FoldingEngine engine = make_engine(o.common);
    Manifest manifest("train");

    AgentConfig config = default_agent_config();
    if (!o.config.empty()) {
        auto in = open_in(o.config);
        config = agent_config_from_json(json::parse(in));
        manifest.input(o.config);
    }
    std::vector<Task> tasks;
    std::string dataset;
    if (!o.data.empty()) {
        tasks = read_tasks(o.data);
        dataset = fs::path(o.data).stem().string();
        manifest.input(o.data);
    } else {
        Rng task_rng = make_stream(o.common.seed, 9);
        tasks = sample_tasks(resolve_space(o.space), o.tasks, task_rng);
        dataset = "space:" + o.space;
    }

    const TrainResult result = train_agent(config, tasks, o.steps, engine, o.common.seed, dataset);
    save_checkpoint(o.out, result.checkpoint);
    manifest.output(o.out);
    const fs::path curve = o.curve.empty() ? fs::path(o.out + ".curve.csv") : fs::path(o.curve);
    {
        auto out = open_out(curve);
        write_curve_csv(out, result.curve);
    }
    manifest.output(curve.string());
    manifest.seed(o.common.seed);
    manifest.config({{"engine", engine.describe()},
                     {"agent", to_json(config)},
                     {"steps", o.steps},
                     {"trained_steps", result.checkpoint.metadata.steps},
                     {"episodes", result.episodes.size()},
                     {"dataset", dataset},
                     {"tasks", tasks.size()}});
    manifest.write(manifest_for(o.out));
}

struct GenerateOptions {
    Common common;
    std::string space = "riboswitch";
    std::string checkpoint;
    std::string config;
    std::size_t n = 1000;
    std::optional<double> gc;
    bool frozen = false;
    bool no_refine = false;
    std::string out;
};

void cmd_generate(const GenerateOptions& o) {
    const FoldingEngine engine = make_engine(o.common);
    Manifest manifest("generate");
    const DesignSpace space = resolve_space(o.space);
    const PolicyCheckpoint checkpoint = load_checkpoint(o.checkpoint);
    manifest.input(o.checkpoint);
    PpoConfig ppo;
    if (!o.config.empty()) {
        auto in = open_in(o.config);
        ppo = agent_config_from_json(json::parse(in)).ppo;
        manifest.input(o.config);
    }

    GenerationConfig g;
    g.count = o.n;
    g.gc_target = o.gc ? o.gc : space.gc_target;
    g.adapt = !o.frozen;
    g.refine = !o.no_refine;
    g.refine_config.gc_tolerance = space.gc_tolerance;
    g.refine_config.reward_exponent = checkpoint.env.reward_exponent;
    g.workers = o.common.workers;
    const auto candidates = generate_candidates(space, checkpoint, ppo, engine, g, o.common.seed);

    auto out = open_out(o.out);
    for (const auto& c : candidates) out << to_json(c).dump() << '\n';
    manifest.output(o.out);
    manifest.seed(o.common.seed);
    manifest.config({{"engine", engine.describe()},
                     {"space", render_design_space(space)},
                     {"n", o.n},
                     {"gc_target", g.gc_target ? json(*g.gc_target) : json(nullptr)},
                     {"gc_tolerance", space.gc_tolerance},
                     {"adapt", g.adapt},
                     {"refine", g.refine},
                     {"workers", g.workers},
                     {"ppo", to_json(ppo)}});
    manifest.write(manifest_for(o.out));
}

struct EvaluateOptions {
    Common common;
    std::string candidates;
    std::string space = "riboswitch";
    int speed = 5;
    std::size_t min_stem = 1;
    std::optional<double> gc;
    std::string out;
};

void cmd_evaluate(const EvaluateOptions& o) {
    const FoldingEngine engine = make_engine(o.common);
    Manifest manifest("evaluate");
    const DesignSpace space = resolve_space(o.space);

    std::vector<std::string> sequences;
    {
        auto in = open_in(o.candidates);
        std::string line;
        while (std::getline(in, line)) {
            if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
            sequences.push_back(json::parse(line).at("sequence").get<std::string>());
        }
    }
    manifest.input(o.candidates);

    CheckConfig check;
    check.speed = o.speed;
    check.min_terminator_stem = o.min_stem;
    if (const auto target = o.gc ? o.gc : space.gc_target) check.gc = GcSpec{*target, space.gc_tolerance};
    const LibraryEvaluation eval = evaluate_library(sequences, space, engine, check, o.common.workers);

    const fs::path report(o.out);
    {
        auto out = open_out(report);
        out << to_json(eval.report).dump(2) << '\n';
    }
    const fs::path stem = report.parent_path() / report.stem();
    const fs::path records = fs::path(stem.string() + ".records.jsonl");
    const fs::path lengths = fs::path(stem.string() + ".lengths.csv");
    const fs::path gc = fs::path(stem.string() + ".gc.csv");
    {
        auto out = open_out(records);
        for (const auto& r : eval.records) out << to_json(r).dump() << '\n';
    }
    {
        auto out = open_out(lengths);
        write_length_histogram_csv(out, eval.report);
    }
    {
        auto out = open_out(gc);
        write_gc_histogram_csv(out, eval.report);
    }
    for (const auto& p : {report, records, lengths, gc}) manifest.output(p.string());
    manifest.config({{"engine", engine.describe()},
                     {"space", render_design_space(space)},
                     {"speed", o.speed},
                     {"min_terminator_stem", o.min_stem},
                     {"gc_target", check.gc ? json(check.gc->target) : json(nullptr)},
                     {"workers", o.common.workers}});
    manifest.write(manifest_for(o.out));

    std::cout << "candidates " << eval.report.total << ", unique " << eval.report.unique_sequences << ", valid "
              << std::fixed << std::setprecision(1) << 100.0 * eval.report.valid_fraction << "%, unique valid structures "
              << eval.report.unique_valid_structures << '\n';
}

struct BaselineOptions {
    Common common;
    std::string space = "riboswitch";
    std::size_t n = 50000;
    std::string out;
};

void cmd_baseline(const BaselineOptions& o) {
    Manifest manifest("baseline");
    const DesignSpace space = resolve_space(o.space);
    Rng rng = make_stream(o.common.seed, 0);
    const auto candidates = baseline_generate(o.n, layout_from_space(space), rng);
    auto out = open_out(o.out);
    for (const auto& c : candidates) out << json{{"sequence", c}}.dump() << '\n';
    manifest.output(o.out);
    manifest.seed(o.common.seed);
    manifest.config({{"space", render_design_space(space)}, {"n", o.n}});
    manifest.write(manifest_for(o.out));
}

struct MetaoptOptions {
    Common common;
    std::string data;
    std::vector<std::size_t> budgets{1000, 3000, 9000};
    int eta = 3;
    std::size_t configs = 9;
    int brackets = 1;
    std::size_t attempts = 10;
    std::size_t validation_limit = 0;
    std::string out;
};

void cmd_metaopt(const MetaoptOptions& o) {
    const FoldingEngine engine = make_engine(o.common);
    Manifest manifest("metaopt");
    const fs::path data(o.data);
    std::map<DatasetKind, std::vector<Task>> training;
    for (auto kind : {DatasetKind::Random, DatasetKind::Short, DatasetKind::Long}) {
        const fs::path file = data / (std::string(to_string(kind)) + ".jsonl");
        if (!fs::exists(file)) continue;
        training[kind] = read_tasks(file);
        manifest.input(file.string());
    }
    const fs::path validation_file = data / "validation.jsonl";
    std::vector<Task> validation = read_tasks(validation_file);
    manifest.input(validation_file.string());
    if (o.validation_limit && validation.size() > o.validation_limit) validation.resize(o.validation_limit);

    SearchConfig search;
    search.budgets = o.budgets;
    search.eta = o.eta;
    search.initial_configs = o.configs;
    search.brackets = o.brackets;
    search.attempts = o.attempts;
    search.workers = o.common.workers;
    const SearchResult result = run_search(training, validation, search, engine, o.common.seed);

    const fs::path dir(o.out);
    fs::create_directories(dir);
    std::vector<TrialResult> ranked = result.trials;
    std::stable_sort(ranked.begin(), ranked.end(), [](const TrialResult& a, const TrialResult& b) {
        if (a.budget != b.budget) return a.budget > b.budget;
        if (a.validation_loss != b.validation_loss) return a.validation_loss < b.validation_loss;
        return a.config_hash < b.config_hash;
    });
    {
        auto out = open_out(dir / "trials.jsonl");
        write_trials_jsonl(out, ranked);
    }
    {
        auto out = open_out(dir / "incumbent.json");
        out << to_json(result.incumbent.config).dump(2) << '\n';
    }
    manifest.output((dir / "trials.jsonl").string());
    manifest.output((dir / "incumbent.json").string());
    manifest.seed(o.common.seed);
    manifest.config({{"engine", engine.describe()},
                     {"budgets", o.budgets},
                     {"eta", o.eta},
                     {"configs", o.configs},
                     {"brackets", o.brackets},
                     {"attempts", o.attempts},
                     {"validation_tasks", validation.size()},
                     {"incumbent_loss", result.incumbent.validation_loss}});
    manifest.write(dir / "manifest.json");
    std::cout << "incumbent loss " << result.incumbent.validation_loss << " (" << result.trials.size() << " trials)\n";
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Variable-length RNA design with a learned policy"};
    app.set_version_flag("--version", RIBODESIGN_VERSION);
    app.require_subcommand(1);

    DatagenOptions dg;
    auto* datagen = app.add_subcommand("datagen", "build masked training and validation task sets");
    datagen->add_option("--corpus", dg.corpus, "FASTA (folded with the engine) or .tsv (sequence, structure)");
    datagen->add_option("--random", dg.random, "number of random sequences instead of a corpus");
    datagen->add_option("--min-length", dg.min_length)->capture_default_str();
    datagen->add_option("--max-length", dg.max_length)->capture_default_str();
    datagen->add_option("--long-size", dg.long_size)->capture_default_str();
    datagen->add_option("--short-size", dg.short_size)->capture_default_str();
    datagen->add_option("--random-size", dg.random_size)->capture_default_str();
    datagen->add_option("--validation-size", dg.validation_size)->capture_default_str();
    datagen->add_option("--max-parts", dg.policy.max_structure_parts)->capture_default_str();
    datagen->add_option("--max-part-fraction", dg.policy.max_part_fraction)->capture_default_str();
    datagen->add_option("--random-mask-fraction", dg.policy.sequence_random_mask_fraction)->capture_default_str();
    datagen->add_option("--inverse-folding-fraction", dg.policy.inverse_folding_fraction)->capture_default_str();
    datagen->add_option("--out", dg.out, "output directory")->required();
    add_engine(datagen, dg.common);
    add_seed(datagen, dg.common);

    TrainOptions tr;
    auto* train = app.add_subcommand("train", "train a design policy");
    train->add_option("--data", tr.data, "task JSONL");
    train->add_option("--space", tr.space, "sample training tasks from a design space ('riboswitch' or a file)");
    train->add_option("--tasks", tr.tasks, "tasks sampled with --space")->capture_default_str();
    train->add_option("--config", tr.config, "agent configuration JSON");
    train->add_option("--steps", tr.steps, "environment steps")->capture_default_str();
    train->add_option("--out", tr.out, "checkpoint path")->required();
    train->add_option("--curve", tr.curve, "learning curve CSV (default <out>.curve.csv)");
    add_engine(train, tr.common);
    add_seed(train, tr.common);

    GenerateOptions ge;
    auto* generate = app.add_subcommand("generate", "design candidates from a space");
    generate->add_option("--space", ge.space, "'riboswitch' or a design-space file")->capture_default_str();
    generate->add_option("--ckpt", ge.checkpoint, "policy checkpoint")->required();
    generate->add_option("--config", ge.config, "agent configuration JSON (PPO settings for adaptation)");
    generate->add_option("--n", ge.n, "number of candidates")->capture_default_str();
    generate->add_option("--gc", ge.gc, "GC-content target")->check(CLI::Range(0.0, 1.0));
    auto* adapt_flag = generate->add_flag("--adapt", "keep updating the policy while designing (default)");
    generate->add_flag("--frozen", ge.frozen, "do not update the policy")->excludes(adapt_flag);
    generate->add_flag("--no-refine", ge.no_refine, "skip local and GC improvement");
    generate->add_option("--out", ge.out, "candidate JSONL")->required();
    add_engine(generate, ge.common);
    add_seed(generate, ge.common);
    add_workers(generate, ge.common);

    EvaluateOptions ev;
    auto* evaluate = app.add_subcommand("evaluate", "check candidates against the riboswitch criteria");
    evaluate->add_option("--candidates", ev.candidates, "JSONL with a 'sequence' field")->required();
    evaluate->add_option("--space", ev.space)->capture_default_str();
    evaluate->add_option("--speed", ev.speed, "co-transcriptional elongation speed")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    evaluate->add_option("--min-stem", ev.min_stem, "minimum terminator stem pairs")->capture_default_str();
    evaluate->add_option("--gc", ev.gc, "GC-content target")->check(CLI::Range(0.0, 1.0));
    evaluate->add_option("--out", ev.out, "report JSON")->required();
    add_engine(evaluate, ev.common);
    add_workers(evaluate, ev.common);

    BaselineOptions bl;
    auto* baseline = app.add_subcommand("baseline", "random spacer/complement baseline library");
    baseline->add_option("--space", bl.space)->capture_default_str();
    baseline->add_option("--n", bl.n)->capture_default_str();
    baseline->add_option("--out", bl.out, "candidate JSONL")->required();
    add_engine(baseline, bl.common);
    add_seed(baseline, bl.common);

    MetaoptOptions mo;
    auto* metaopt = app.add_subcommand("metaopt", "successive-halving configuration search");
    metaopt->add_option("--data", mo.data, "datagen output directory")->required();
    metaopt->add_option("--budgets", mo.budgets, "ascending step budgets per rung")->delimiter(',')->capture_default_str();
    metaopt->add_option("--eta", mo.eta)->capture_default_str();
    metaopt->add_option("--configs", mo.configs, "configurations in the first rung")->capture_default_str();
    metaopt->add_option("--brackets", mo.brackets)->capture_default_str();
    metaopt->add_option("--attempts", mo.attempts, "design attempts per validation task")->capture_default_str();
    metaopt->add_option("--validation-limit", mo.validation_limit, "use at most this many validation tasks");
    metaopt->add_option("--out", mo.out, "output directory")->required();
    add_engine(metaopt, mo.common);
    add_seed(metaopt, mo.common);
    add_workers(metaopt, mo.common);

    try {
        app.parse(argc, argv);
    } catch (const CLI::Success& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    try {
        if (*datagen) cmd_datagen(dg);
        if (*train) cmd_train(tr);
        if (*generate) cmd_generate(ge);
        if (*evaluate) cmd_evaluate(ev);
        if (*baseline) cmd_baseline(bl);
        if (*metaopt) cmd_metaopt(mo);
    } catch (const UsageError& e) {
        std::cerr << "usage error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
