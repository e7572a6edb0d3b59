// Acceptance checks. Usage: acceptance [criterion...]; no argument runs all.
// Prints one PASS/FAIL line per criterion and exits nonzero if any failed.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <iostream>
#include <map>
#include <numeric>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "ribodesign/design_space.hpp"
#include "ribodesign/env.hpp"
#include "ribodesign/fold.hpp"
#include "ribodesign/meta_opt.hpp"
#include "ribodesign/network.hpp"
#include "ribodesign/pipeline.hpp"
#include "ribodesign/ppo.hpp"
#include "ribodesign/refine.hpp"
#include "ribodesign/ribo_eval.hpp"
#include "support.hpp"

using namespace ribodesign;

namespace {

namespace tol {
constexpr double kFoldSeconds = 120.0;
constexpr double kLengthFrequency = 0.02;
constexpr double kFamilyPoints = 3.0;
constexpr double kMaxRunFraction = 0.20;
constexpr std::size_t kMaxRuns = 5;
constexpr double kReward = 1e-9;
constexpr double kGradient = 1e-4;
constexpr double kToyImprovement = 0.2;
constexpr double kPpoSeconds = 300.0;
constexpr double kGisSuccess = 0.95;
constexpr double kGc = 0.01;
constexpr double kMwuAlpha = 0.01;
constexpr double kEndToEndSeconds = 900.0;
constexpr double kOutOfRangeGcOk = 0.01;
}  // namespace tol

struct Outcome {
    bool pass = true;
    std::string detail;
};

class Timer {
public:
    double seconds() const {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    }

private:
    std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

template <typename... Args>
std::string format(const char* fmt, Args... args) {
    char buf[512];
    std::snprintf(buf, sizeof buf, fmt, args...);
    return buf;
}

const std::string kAptamer = "AAGUGAUACCAGCAUCGUCUUGAUGCCCUUGGCAGCACUUCA";

std::vector<Task> toy_tasks(Rng& rng, std::size_t count, std::size_t min_len, std::size_t max_len,
                            const FoldingEngine& engine) {
    std::vector<Task> tasks;
    while (tasks.size() < count) {
        const std::string s = testsupport::random_rna(rng, uniform_int(rng, min_len, max_len));
        tasks.push_back(Task{std::string(s.size(), kMask), engine.fold(s).str(), {}, std::nullopt});
    }
    return tasks;
}

// ---------------------------------------------------------------------------

Outcome fold_oracle() {
    Timer timer;
    std::size_t checked = 0;
    std::size_t bad = 0;
    const auto check = [&](const std::string& s) {
        const Sequence seq(s);
        const Structure folded = nussinov_fold(s);
        const BruteForceResult oracle = brute_force_fold(seq);
        ++checked;
        if (folded.pair_table().pair_count() != oracle.max_pairs || !oracle.all_optimal.contains(folded.str()) ||
            nussinov_max_pairs(s) != oracle.max_pairs) {
            ++bad;
        }
    };
    static constexpr char nts[] = "ACGU";
    for (std::size_t n = 1; n <= 8; ++n) {
        std::size_t total = 1;
        for (std::size_t k = 0; k < n; ++k) total *= 4;
        std::string s(n, 'A');
        for (std::size_t code = 0; code < total; ++code) {
            std::size_t c = code;
            for (std::size_t k = 0; k < n; ++k, c /= 4) s[k] = nts[c % 4];
            check(s);
        }
    }
    Rng rng(1001);
    for (int i = 0; i < 500; ++i) check(testsupport::random_rna(rng, uniform_int<std::size_t>(rng, 9, 12)));
    const double secs = timer.seconds();
    return {bad == 0 && secs < tol::kFoldSeconds,
            format("%zu sequences, %zu disagreements, %.1f s (limit %.0f s)", checked, bad, secs, tol::kFoldSeconds)};
}

Outcome checker_fidelity() {
    struct Construct {
        const char* name;
        std::string sequence;
        std::string structure;
    };
    const std::string apt_a = "...........(((((.....)))))....((((((((((((";
    const std::string apt_b = "........((((((((.....)))))...)))((((((((((";
    const std::vector<Construct> constructs{
        {"RS1", kAptamer + "UUACAUC" + "UGAAGUGCUGCC" + "UUUUUUUU", apt_a + "......." + "))))))))))))" + "........"},
        {"RS2", kAptamer + "UGAUCUCGCU" + "UGAAGUGCUGC" + "UUUUUUUU", apt_a + ".........." + ")))))))))))" + ")......."},
        {"RS3", kAptamer + "UUUACAUACUCGGUAAAC" + "UGAAGUGCUGCCA" + "UUUUUUUU",
         "...........(((((.....)))))...(((((((((((((" + std::string("(((((.......)))))." ) + ")))))))))))))" + "........"},
        {"RS4", kAptamer + "AACCGAAAUUUGCGCU" + "UGAAGUGCUGC" + "UUUUUUUU",
         apt_a + "(..((.......)).)" + ")))))))))))" + ")......."},
        {"RS8", kAptamer + "CUCCUAGUGGAG" + "UGAAGUGCUG" + "UUUUUUUU", apt_b + "((((....))))" + "))))))))))" + "........"},
        {"RS10", kAptamer + "GAAAUCUC" + "UGAAGUGCUG" + "UUUUUUUU", apt_b + "((....)" + ")))))))))))" + "........"},
    };
    const DesignSpace space = riboswitch_design_space();
    const CheckConfig cfg;
    Outcome out;
    std::ostringstream detail;
    for (const auto& c : constructs) {
        const RegionMap regions = infer_regions(c.sequence, space);
        const Verdict v = check_structure(c.sequence, Structure(c.structure), {}, regions, cfg);
        const bool ok = v.hairpins_ok && v.u_stretch_ok;
        out.pass = out.pass && ok;
        detail << c.name << (ok ? " ok" : " FAILED") << "; ";
    }
    // RS1 with its last 8 symbols set to "((......"; the two opened positions
    // close at the 3' end so the structure stays balanced.
    const Construct& rs1 = constructs.front();
    const std::size_t n = rs1.sequence.size();
    auto pairs = *testsupport::oracle_pairs(rs1.structure);
    pairs.emplace_back(n - 8, n - 1);
    pairs.emplace_back(n - 7, n - 2);
    const Structure mutated = Structure::from_pairs(n, pairs);
    const Verdict mv = check_structure(rs1.sequence, mutated, {}, infer_regions(rs1.sequence, space), cfg);
    out.pass = out.pass && !mv.u_stretch_ok;
    detail << "RS1 tail-paired u_stretch_ok=" << (mv.u_stretch_ok ? "true" : "false");
    out.detail = detail.str();
    return out;
}

Outcome sampling() {
    const DesignSpace space = riboswitch_design_space();
    Rng rng(1003);
    constexpr int draws = 10000;
    std::map<std::size_t, int> counts;
    bool in_range = true;
    for (int i = 0; i < draws; ++i) {
        const Task t = sample_task(space, rng);
        in_range = in_range && t.size() >= 66 && t.size() <= 91;
        ++counts[t.size()];
    }
    double worst = 0.0;
    for (std::size_t len = 66; len <= 91; ++len) {
        worst = std::max(worst, std::abs(counts[len] / static_cast<double>(draws) - 1.0 / 26.0));
    }
    return {in_range && counts.size() == 26 && worst <= tol::kLengthFrequency,
            format("%zu distinct lengths, max |freq - 1/26| = %.4f (limit %.2f)", counts.size(), worst,
                   tol::kLengthFrequency)};
}

Outcome masking() {
    Rng rng(1004);
    const MaskingPolicy policy;
    constexpr int draws = 100000;
    std::map<TaskFamily, int> families;
    std::size_t run_violations = 0;
    for (int i = 0; i < draws; ++i) {
        const std::size_t n = uniform_int<std::size_t>(rng, 20, 200);
        const Sequence seq(testsupport::random_rna(rng, n));
        const Structure st(testsupport::random_structure(rng, n));
        const MaskedTask m = mask_sample(seq, st, policy, rng);
        ++families[m.family];
        const auto runs = masked_runs(m.task.structure_constraint);
        bool ok = runs.size() <= tol::kMaxRuns && m.structure_runs.size() <= tol::kMaxRuns;
        for (const auto& [b, e] : runs) {
            ok = ok && static_cast<double>(e - b) <= tol::kMaxRunFraction * static_cast<double>(n);
        }
        if (!ok) ++run_violations;
    }
    const auto pct = [&](TaskFamily f) { return 100.0 * families[f] / draws; };
    const double inv = pct(TaskFamily::InverseFolding);
    const double alt = pct(TaskFamily::Alternating);
    const double rnd = pct(TaskFamily::RandomMasking);
    const bool pass = std::abs(inv - 11.5) <= tol::kFamilyPoints && std::abs(alt - 66.7) <= tol::kFamilyPoints &&
                      std::abs(rnd - 21.8) <= tol::kFamilyPoints && run_violations == 0;
    return {pass, format("families %.2f / %.2f / %.2f %%, run violations %zu", inv, alt, rnd, run_violations)};
}

Outcome reward() {
    const auto engine = FoldingEngine::internal();
    const auto play = [&](double alpha, std::optional<double> gc_target) {
        EnvConfig env;
        env.reward_exponent = alpha;
        env.action_semantics = ActionSemantics::Single;
        Episode ep(Task{"?AAAAAAAAA", "??????????", {}, gc_target}, env);
        ep.step(Action::single(0));  // A: gc 0
        return finalize(ep, engine);
    };
    Outcome out;
    std::ostringstream detail;
    for (double alpha : {1.0, 10.76, 12.0}) {
        const DesignOutcome d = play(alpha, std::nullopt);
        const bool ok = d.breakdown.total_loss == 0.0 && d.breakdown.reward == 1.0;
        out.pass = out.pass && ok;
        detail << "alpha " << alpha << " -> " << d.breakdown.reward << "; ";
    }
    const DesignOutcome d = play(10.76, 0.1);
    const double expected = std::exp(10.76 * std::log(0.9));
    const double err = std::abs(d.breakdown.reward - expected);
    out.pass = out.pass && std::abs(d.breakdown.total_loss - 0.1) < 1e-15 && err <= tol::kReward;
    detail << format("loss 0.1 -> %.12f, |err| %.2e", d.breakdown.reward, err);
    out.detail = detail.str();
    return out;
}

Outcome ppo() {
    Timer timer;
    const auto engine = FoldingEngine::internal();
    Outcome out;
    std::ostringstream detail;

    // Gradient check on a tiny network with every layer type.
    double worst_grad = 0.0;
    {
        NetworkSpec spec;
        spec.embedding_dim = 3;
        spec.conv1_filter_size = 3;
        spec.conv1_filters = 2;
        spec.conv2_filter_size = 3;
        spec.conv2_filters = 2;
        spec.lstm_layers = 1;
        spec.lstm_units = 3;
        spec.fc_layers = 1;
        spec.fc_units = 8;
        Rng rng(1006);
        for (int trial = 0; trial < 5; ++trial) {
            PolicyNetwork net(spec, 5, rng);
            StateWindow w;
            for (int k = 0; k < 5; ++k) w.tokens.push_back(uniform_int(rng, 0, kVocabularySize - 1));
            worst_grad = std::max(worst_grad, policy_gradient_check(net, w, uniform_int(rng, 0, 3)));
        }
    }
    const bool grad_ok = worst_grad < tol::kGradient;
    detail << format("grad rel err %.2e; ", worst_grad);

    // Repeated updates on one fixed batch.
    bool overfit_ok = false;
    {
        Rng rng(1007);
        AgentConfig cfg;
        cfg.env.state_radius = 4;
        cfg.ppo.learning_rate = 1e-3;
        cfg.ppo.epochs_per_update = 1;
        const auto tasks = toy_tasks(rng, 4, 10, 16, engine);
        PolicyNetwork net(cfg.network, cfg.env.window_size(), rng);
        std::vector<Transition> batch;
        for (int e = 0; e < 16; ++e) {
            Rollout r = run_episode(net, tasks[static_cast<std::size_t>(e) % tasks.size()], cfg.env, engine, rng);
            batch.insert(batch.end(), r.transitions.begin(), r.transitions.end());
        }
        cfg.ppo.minibatch_size = static_cast<int>(batch.size());
        AdamOptimizer opt(net.parameter_count(), cfg.ppo.learning_rate);
        std::vector<double> surrogate{mean_surrogate(net, batch, cfg.ppo.clip_ratio)};
        for (int u = 0; u < 100; ++u) {
            ppo_update(net, opt, batch, cfg.ppo, rng);
            surrogate.push_back(mean_surrogate(net, batch, cfg.ppo.clip_ratio));
        }
        std::vector<double> idx(surrogate.size());
        std::iota(idx.begin(), idx.end(), 0.0);
        const double rho = testsupport::spearman(idx, surrogate);
        overfit_ok = rho > 0.5 && surrogate.back() > surrogate.front();
        detail << format("surrogate %.4f -> %.4f (spearman %.2f); ", surrogate.front(), surrogate.back(), rho);
    }

    // Toy tasks: trained vs untrained mean reward on the same seeds.
    bool toy_ok = false;
    {
        Rng rng(1008);
        const auto tasks = toy_tasks(rng, 10, 10, 20, engine);
        AgentConfig cfg = default_agent_config();
        cfg.ppo.batch_size = 32;
        cfg.curriculum = Curriculum::Random;
        const auto mean_reward = [&](const PolicyNetwork& net) {
            Rng eval = make_stream(1008, 99);
            double sum = 0.0;
            int count = 0;
            for (int rep = 0; rep < 20; ++rep) {
                for (const auto& t : tasks) {
                    sum += run_episode(net, t, cfg.env, engine, eval).outcome.breakdown.reward;
                    ++count;
                }
            }
            return sum / count;
        };
        const TrainResult untrained = train_agent(cfg, tasks, 0, engine, 8, "toy");
        const TrainResult trained = train_agent(cfg, tasks, 20000, engine, 8, "toy");
        const double before = mean_reward(untrained.checkpoint.instantiate());
        const double after = mean_reward(trained.checkpoint.instantiate());
        toy_ok = after - before >= tol::kToyImprovement;
        detail << format("toy reward %.3f -> %.3f; ", before, after);
    }
    const double secs = timer.seconds();
    out.pass = grad_ok && overfit_ok && toy_ok && secs < tol::kPpoSeconds;
    detail << format("%.1f s", secs);
    out.detail = detail.str();
    return out;
}

Outcome refinement() {
    const auto engine = FoldingEngine::internal();
    const RefineConfig cfg;
    Rng rng(1009);
    std::size_t loss_increase = 0;
    std::size_t literal_touched = 0;
    std::size_t lis_triggered = 0;
    for (int trial = 0; trial < 1000; ++trial) {
        const std::size_t n = uniform_int<std::size_t>(rng, 12, 40);
        const std::string natural = testsupport::random_rna(rng, n);
        std::string seq = natural;
        for (auto& c : seq) if (uniform01(rng) < 0.7) c = kMask;
        std::string st = engine.fold(natural).str();
        for (auto& c : st) if (uniform01(rng) < 0.2) c = kMask;
        std::optional<double> gc;
        if (uniform01(rng) < 0.5) gc = 0.2 + 0.6 * uniform01(rng);
        const Task task{seq, st, {}, gc};
        std::string candidate = seq;
        for (std::size_t i = 0; i < n; ++i) {
            if (candidate[i] == kMask) candidate[i] = uniform01(rng) < 0.8 ? natural[i] : "ACGU"[uniform_int(rng, 0, 3)];
        }
        const DesignOutcome d = evaluate_design(candidate, task, engine, cfg.reward_exponent);
        std::vector<RefineResult> results{local_improvement(d, task, engine, cfg),
                                          gc_improvement(d, task, engine, gc.value_or(0.5), cfg, rng),
                                          refine(d, task, engine, cfg, rng)};
        if (results[0].triggered) ++lis_triggered;
        for (const auto& r : results) {
            if (r.outcome.breakdown.structure_loss > d.breakdown.structure_loss) ++loss_increase;
            for (std::size_t i = 0; i < n; ++i) {
                if (seq[i] != kMask && r.outcome.sequence[i] != seq[i]) {
                    ++literal_touched;
                    break;
                }
            }
        }
    }

    // GIS on unconstrained-structure tasks with a reachable target.
    std::size_t success = 0;
    constexpr int gis_trials = 1000;
    for (int trial = 0; trial < gis_trials; ++trial) {
        const std::size_t n = uniform_int<std::size_t>(rng, 50, 100);
        std::string seq = testsupport::random_rna(rng, n);
        const std::string start = seq;
        std::size_t literal_strong = 0;
        std::size_t designable = 0;
        for (auto& c : seq) {
            if (uniform01(rng) < 0.8) {
                c = kMask;
                ++designable;
            } else if (c == 'G' || c == 'C') {
                ++literal_strong;
            }
        }
        const double lo = static_cast<double>(literal_strong) / static_cast<double>(n);
        const double hi = static_cast<double>(literal_strong + designable) / static_cast<double>(n);
        const double current = gc_content(start);
        const double target = std::clamp(current + (uniform01(rng) - 0.5) * 0.5, lo, hi);
        const Task task{seq, std::string(n, kMask), {}, target};
        const DesignOutcome d = evaluate_design(start, task, engine, cfg.reward_exponent);
        const RefineResult r = gc_improvement(d, task, engine, target, cfg, rng);
        if (std::abs(testsupport::oracle_gc(r.outcome.sequence) - target) <= tol::kGc) ++success;
    }
    const double rate = static_cast<double>(success) / gis_trials;
    return {loss_increase == 0 && literal_touched == 0 && rate >= tol::kGisSuccess,
            format("1000 fuzzed (LIS triggered %zu): loss increases %zu, literal edits %zu; GIS success %.3f "
                   "(limit %.2f)",
                   lis_triggered, loss_increase, literal_touched, rate, tol::kGisSuccess)};
}

AgentConfig riboswitch_agent_config() {
    AgentConfig cfg = default_agent_config();
    cfg.ppo.batch_size = 32;
    cfg.curriculum = Curriculum::Random;
    return cfg;
}

PolicyCheckpoint train_on_space(const DesignSpace& space, const AgentConfig& cfg, std::size_t steps,
                                const FoldingEngine& engine, std::uint64_t seed) {
    Rng task_rng = make_stream(seed, 10);
    const auto tasks = sample_tasks(space, 2000, task_rng);
    return train_agent(cfg, tasks, steps, engine, seed, "riboswitch").checkpoint;
}

std::vector<double> losses_of(const LibraryEvaluation& e) {
    std::vector<double> v;
    for (const auto& r : e.records) {
        if (r.structure_loss) v.push_back(*r.structure_loss);
    }
    return v;
}

double mean(const std::vector<double>& v) {
    return v.empty() ? 0.0 : std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

Outcome end_to_end() {
    Timer timer;
    const auto engine = FoldingEngine::internal();
    const DesignSpace space = riboswitch_design_space();
    const AgentConfig cfg = riboswitch_agent_config();
    Outcome out;
    std::ostringstream detail;
    bool dominance = true;
    bool validity = true;
    for (std::uint64_t seed : {11u, 12u, 13u}) {
        const PolicyCheckpoint ckpt = train_on_space(space, cfg, 50000, engine, seed);
        GenerationConfig g;
        g.count = 2000;
        const auto generated = generate_candidates(space, ckpt, cfg.ppo, engine, g, seed);
        std::vector<std::string> trained_seqs;
        for (const auto& c : generated) trained_seqs.push_back(c.outcome.sequence);
        Rng base_rng = make_stream(seed, 20);
        const auto baseline_seqs = baseline_generate(2000, layout_from_space(space), base_rng);

        const LibraryEvaluation trained = evaluate_library(trained_seqs, space, engine, CheckConfig{});
        const LibraryEvaluation baseline = evaluate_library(baseline_seqs, space, engine, CheckConfig{});
        const auto tl = losses_of(trained);
        const auto bl = losses_of(baseline);
        const auto mw = testsupport::mann_whitney_less(tl, bl);
        dominance = dominance && mw.p_less < tol::kMwuAlpha;
        validity = validity && trained.report.valid_fraction > baseline.report.valid_fraction;
        detail << format("seed %llu: loss %.3f vs %.3f (p=%.2e), valid %.4f vs %.4f; ",
                         static_cast<unsigned long long>(seed), mean(tl), mean(bl), mw.p_less,
                         trained.report.valid_fraction, baseline.report.valid_fraction);
    }
    const double secs = timer.seconds();
    out.pass = dominance && validity && secs < tol::kEndToEndSeconds;
    detail << format("dominance %s, validity %s, %.0f s", dominance ? "ok" : "FAILED", validity ? "ok" : "FAILED",
                     secs);
    out.detail = detail.str();
    return out;
}

Outcome gc_targets() {
    const auto engine = FoldingEngine::internal();
    const DesignSpace space = riboswitch_design_space();
    const AgentConfig cfg = riboswitch_agent_config();
    Outcome out;
    std::ostringstream detail;
    const auto run = [&](double target) {
        DesignSpace targeted = space;
        targeted.gc_target = target;
        const PolicyCheckpoint ckpt = train_on_space(targeted, cfg, 20000, engine, 21);
        GenerationConfig g;
        g.count = 300;
        g.gc_target = target;
        const auto generated = generate_candidates(targeted, ckpt, cfg.ppo, engine, g, 22);
        std::vector<std::string> seqs;
        for (const auto& c : generated) seqs.push_back(c.outcome.sequence);
        CheckConfig check;
        check.gc = GcSpec{target, tol::kGc};
        return evaluate_library(seqs, space, engine, check);
    };
    for (double target : {0.3, 0.45, 0.6}) {
        const LibraryEvaluation e = run(target);
        std::size_t flagged = 0;
        std::size_t wrong = 0;
        for (const auto& r : e.records) {
            const bool independent = std::abs(testsupport::oracle_gc(r.sequence) - target) <= tol::kGc;
            if (r.verdict.gc_ok.value_or(false)) {
                ++flagged;
                if (!independent) ++wrong;
            } else if (independent) {
                ++wrong;
            }
        }
        out.pass = out.pass && wrong == 0;
        detail << format("target %.2f: gc_ok %zu/%zu, disagreements %zu; ", target, flagged, e.records.size(), wrong);
    }
    for (double target : {0.1, 0.2, 0.75, 0.9}) {
        const LibraryEvaluation e = run(target);
        std::size_t flagged = 0;
        for (const auto& r : e.records) flagged += r.verdict.gc_ok.value_or(false) ? 1 : 0;
        const double frac = e.records.empty() ? 0.0 : static_cast<double>(flagged) / e.records.size();
        out.pass = out.pass && frac <= tol::kOutOfRangeGcOk;
        detail << format("target %.2f: gc_ok %.3f; ", target, frac);
    }
    out.detail = detail.str();
    return out;
}

Outcome meta_opt() {
    const auto engine = FoldingEngine::internal();
    Rng rng(1010);
    const Corpus corpus = random_corpus(400, 20, 260, engine, rng);
    const auto data = build_datasets(corpus,
                                     {{DatasetKind::Long, 20},
                                      {DatasetKind::Short, 20},
                                      {DatasetKind::Random, 20},
                                      {DatasetKind::Validation, 4}},
                                     MaskingPolicy{}, rng);
    std::map<DatasetKind, std::vector<Task>> training;
    for (const auto& [kind, tasks] : data) {
        if (kind != DatasetKind::Validation) training[kind] = tasks;
    }
    const std::vector<Task>& validation = data.at(DatasetKind::Validation);
    SearchConfig cfg;
    cfg.budgets = {100, 300, 900};
    cfg.attempts = 2;
    const auto strip = [](const SearchResult& r) {
        nlohmann::json j = nlohmann::json::array();
        for (auto t : r.trials) {
            t.wall_seconds = 0.0;
            j.push_back(to_json(t));
        }
        return j.dump();
    };
    const SearchResult a = run_search(training, validation, cfg, engine, 77);
    const SearchResult b = run_search(training, validation, cfg, engine, 77);

    std::map<int, std::vector<const TrialResult*>> rungs;
    for (const auto& t : a.trials) rungs[t.rung].push_back(&t);
    const bool schedule = rungs.size() == 3 && rungs[0].size() == 9 && rungs[1].size() == 3 && rungs[2].size() == 1;
    std::size_t violations = 0;
    for (int r = 0; r < 2; ++r) {
        for (const auto* p : rungs[r]) {
            for (const auto* q : rungs[r]) {
                if (p->promoted && !q->promoted && p->validation_loss > q->validation_loss) ++violations;
            }
        }
    }
    const bool deterministic = strip(a) == strip(b) && a.incumbent.config_hash == b.incumbent.config_hash;
    return {schedule && violations == 0 && deterministic,
            format("trials per rung %zu/%zu/%zu, promotion violations %zu, deterministic %s, incumbent loss %.4f",
                   rungs[0].size(), rungs[1].size(), rungs[2].size(), violations, deterministic ? "yes" : "no",
                   a.incumbent.validation_loss)};
}

}  // namespace

int main(int argc, char** argv) {
    const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
        {"fold_oracle", fold_oracle}, {"checker_fidelity", checker_fidelity},
        {"sampling", sampling},       {"masking", masking},
        {"reward", reward},           {"ppo", ppo},
        {"refinement", refinement},   {"end_to_end", end_to_end},
        {"gc_targets", gc_targets},   {"meta_opt", meta_opt},
    };
    std::set<std::string> wanted(argv + 1, argv + argc);
    int failures = 0;
    std::size_t ran = 0;
    for (const auto& [name, run] : criteria) {
        if (!wanted.empty() && !wanted.contains(name)) continue;
        ++ran;
        Outcome o;
        try {
            o = run();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        std::cout << (o.pass ? "PASS " : "FAIL ") << name << ": " << o.detail << std::endl;
        if (!o.pass) ++failures;
    }
    if (ran != (wanted.empty() ? criteria.size() : wanted.size())) {
        std::cerr << "unknown criterion\n";
        return 2;
    }
    return failures == 0 ? 0 : 1;
}
