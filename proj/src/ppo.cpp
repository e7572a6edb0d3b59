#include "ribodesign/ppo.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numeric>

#include "ribodesign/error.hpp"

namespace ribodesign {

// ---------------------------------------------------------------------------
// Configuration

void PpoConfig::validate() const {
    const bool ok = learning_rate >= 1e-6 && learning_rate <= 1e-3 && entropy_coefficient >= 1e-7 &&
                    entropy_coefficient <= 1e-2 && batch_size >= 1 && clip_ratio > 0.0 && clip_ratio < 1.0 &&
                    epochs_per_update >= 1 && minibatch_size >= 1 && discount > 0.0 && discount <= 1.0 &&
                    value_coefficient >= 0.0;
    if (!ok) throw Error(ErrorCode::InvalidConfig, "PPO configuration out of range");
}

nlohmann::json to_json(const PpoConfig& c) {
    return {{"learning_rate", c.learning_rate},
            {"entropy_coefficient", c.entropy_coefficient},
            {"batch_size", c.batch_size},
            {"clip_ratio", c.clip_ratio},
            {"epochs_per_update", c.epochs_per_update},
            {"minibatch_size", c.minibatch_size},
            {"discount", c.discount},
            {"value_coefficient", c.value_coefficient}};
}

PpoConfig ppo_config_from_json(const nlohmann::json& j) {
    PpoConfig c;
    c.learning_rate = j.at("learning_rate").get<double>();
    c.entropy_coefficient = j.at("entropy_coefficient").get<double>();
    c.batch_size = j.at("batch_size").get<int>();
    c.clip_ratio = j.value("clip_ratio", c.clip_ratio);
    c.epochs_per_update = j.value("epochs_per_update", c.epochs_per_update);
    c.minibatch_size = j.value("minibatch_size", c.minibatch_size);
    c.discount = j.value("discount", c.discount);
    c.value_coefficient = j.value("value_coefficient", c.value_coefficient);
    return c;
}

std::string_view to_string(Curriculum c) { return c == Curriculum::Sorted ? "sorted" : "random"; }

Curriculum curriculum_from_string(std::string_view s) {
    if (s == "sorted") return Curriculum::Sorted;
    if (s == "random") return Curriculum::Random;
    throw Error(ErrorCode::InvalidConfig, "curriculum must be random|sorted");
}

void AgentConfig::validate() const {
    env.validate();
    network.validate();
    ppo.validate();
    if (training_data == DatasetKind::Validation) {
        throw Error(ErrorCode::InvalidConfig, "validation data cannot be used for training");
    }
}

AgentConfig default_agent_config() { return AgentConfig{}; }

namespace {

nlohmann::json env_to_json(const EnvConfig& e) {
    return {{"state_radius", e.state_radius},
            {"state_composition", std::string(to_string(e.state_composition))},
            {"action_semantics", std::string(to_string(e.action_semantics))},
            {"reward_exponent", e.reward_exponent}};
}

EnvConfig env_from_json(const nlohmann::json& j) {
    EnvConfig e;
    e.state_radius = j.at("state_radius").get<int>();
    e.state_composition = state_composition_from_string(j.at("state_composition").get<std::string>());
    e.action_semantics = action_semantics_from_string(j.at("action_semantics").get<std::string>());
    e.reward_exponent = j.at("reward_exponent").get<double>();
    return e;
}

}  // namespace

nlohmann::json to_json(const AgentConfig& c) {
    return {{"env", env_to_json(c.env)},
            {"network", to_json(c.network)},
            {"ppo", to_json(c.ppo)},
            {"training_data", std::string(to_string(c.training_data))},
            {"curriculum", std::string(to_string(c.curriculum))}};
}

AgentConfig agent_config_from_json(const nlohmann::json& j) {
    AgentConfig c;
    c.env = env_from_json(j.at("env"));
    c.network = network_spec_from_json(j.at("network"));
    c.ppo = ppo_config_from_json(j.at("ppo"));
    c.training_data = dataset_kind_from_string(j.at("training_data").get<std::string>());
    c.curriculum = curriculum_from_string(j.at("curriculum").get<std::string>());
    c.validate();
    return c;
}

// ---------------------------------------------------------------------------
// PPO core

SurrogateTerms clipped_surrogate(const std::vector<double>& ratios, const std::vector<double>& advantages,
                                 double clip_ratio) {
    if (ratios.size() != advantages.size()) throw Error(ErrorCode::ShapeMismatch, "ratio/advantage size mismatch");
    SurrogateTerms s;
    s.clipped_ratios.resize(ratios.size());
    s.objective.resize(ratios.size());
    s.unclipped_active.resize(ratios.size());
    for (std::size_t i = 0; i < ratios.size(); ++i) {
        const double clipped = std::clamp(ratios[i], 1.0 - clip_ratio, 1.0 + clip_ratio);
        const double plain = ratios[i] * advantages[i];
        const double bounded = clipped * advantages[i];
        s.clipped_ratios[i] = clipped;
        s.objective[i] = std::min(plain, bounded);
        s.unclipped_active[i] = plain <= bounded;
    }
    return s;
}

AdamOptimizer::AdamOptimizer(std::size_t parameters, double learning_rate)
    : lr_(learning_rate), m_(parameters, 0.0), v_(parameters, 0.0) {}

void AdamOptimizer::step(std::span<double> params, std::span<const double> grad) {
    if (params.size() != m_.size() || grad.size() != m_.size()) {
        throw Error(ErrorCode::ShapeMismatch, "optimizer state does not match parameters");
    }
    ++t_;
    const double c1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
    const double c2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
    for (std::size_t k = 0; k < params.size(); ++k) {
        m_[k] = beta1_ * m_[k] + (1.0 - beta1_) * grad[k];
        v_[k] = beta2_ * v_[k] + (1.0 - beta2_) * grad[k] * grad[k];
        params[k] -= lr_ * (m_[k] / c1) / (std::sqrt(v_[k] / c2) + epsilon_);
    }
}

double mean_surrogate(const PolicyNetwork& net, const std::vector<Transition>& batch, double clip_ratio) {
    if (batch.empty()) return 0.0;
    std::vector<double> ratios;
    std::vector<double> advantages;
    ratios.reserve(batch.size());
    advantages.reserve(batch.size());
    for (const auto& tr : batch) {
        const auto out = net.forward(tr.window);
        ratios.push_back(std::exp(std::log(out.probs[static_cast<std::size_t>(tr.action)]) - tr.old_log_prob));
        advantages.push_back(tr.ret - tr.old_value);
    }
    const auto terms = clipped_surrogate(ratios, advantages, clip_ratio);
    return std::accumulate(terms.objective.begin(), terms.objective.end(), 0.0) / static_cast<double>(batch.size());
}

UpdateStats ppo_update(PolicyNetwork& net, AdamOptimizer& optimizer, const std::vector<Transition>& batch,
                       const PpoConfig& config, Rng& rng) {
    UpdateStats stats;
    if (batch.empty()) return stats;
    stats.mean_surrogate_before = mean_surrogate(net, batch, config.clip_ratio);

    std::vector<std::size_t> order(batch.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::vector<double> grad(net.parameter_count());
    const auto mb = static_cast<std::size_t>(config.minibatch_size);

    std::vector<ForwardCache> caches;
    std::vector<double> ratios;
    std::vector<double> advantages;
    for (int epoch = 0; epoch < config.epochs_per_update; ++epoch) {
        std::shuffle(order.begin(), order.end(), rng);
        for (std::size_t start = 0; start < order.size(); start += mb) {
            const std::size_t end = std::min(order.size(), start + mb);
            const std::size_t m = end - start;
            caches.assign(m, ForwardCache{});
            ratios.resize(m);
            advantages.resize(m);
            for (std::size_t k = 0; k < m; ++k) {
                const Transition& tr = batch[order[start + k]];
                const auto out = net.forward(tr.window, caches[k]);
                ratios[k] = std::exp(std::log(out.probs[static_cast<std::size_t>(tr.action)]) - tr.old_log_prob);
                advantages[k] = tr.ret - tr.old_value;
            }
            const SurrogateTerms terms = clipped_surrogate(ratios, advantages, config.clip_ratio);
            for (double c : terms.clipped_ratios) {
                stats.min_clipped_ratio = std::min(stats.min_clipped_ratio, c);
                stats.max_clipped_ratio = std::max(stats.max_clipped_ratio, c);
            }

            std::fill(grad.begin(), grad.end(), 0.0);
            const double inv_m = 1.0 / static_cast<double>(m);
            for (std::size_t k = 0; k < m; ++k) {
                const Transition& tr = batch[order[start + k]];
                const PolicyOutput& out = caches[k].output;
                const auto a = static_cast<std::size_t>(tr.action);
                const double h = entropy(out.probs);
                ActionVector dlogits{};
                for (std::size_t j = 0; j < dlogits.size(); ++j) {
                    const double onehot = j == a ? 1.0 : 0.0;
                    double d = 0.0;
                    if (terms.unclipped_active[k]) d -= advantages[k] * ratios[k] * (onehot - out.probs[j]);
                    // d(-c_e * H)/dlogit_j = c_e * p_j * (log p_j + H)
                    const double p = out.probs[j];
                    if (p > 0.0) d += config.entropy_coefficient * p * (std::log(p) + h);
                    dlogits[j] = d * inv_m;
                }
                const double dvalue = 2.0 * config.value_coefficient * (out.value - tr.ret) * inv_m;
                net.backward(caches[k], dlogits, dvalue, grad);
            }
            optimizer.step(net.parameters(), grad);
            ++stats.gradient_steps;
        }
    }
    stats.mean_surrogate_after = mean_surrogate(net, batch, config.clip_ratio);
    return stats;
}

namespace {

// Terminal-only reward: the return at step t is reward * discount^(T-1-t).
void apply_discount(std::vector<Transition>& transitions, double discount) {
    if (discount == 1.0) return;
    double scale = 1.0;
    for (std::size_t t = transitions.size(); t-- > 0;) {
        transitions[t].ret *= scale;
        scale *= discount;
    }
}

int sample_action(const ActionVector& probs, Rng& rng) {
    const double u = uniform01(rng);
    double acc = 0.0;
    for (std::size_t k = 0; k < probs.size(); ++k) {
        acc += probs[k];
        if (u < acc) return static_cast<int>(k);
    }
    return static_cast<int>(probs.size()) - 1;
}

}  // namespace

Rollout run_episode(const PolicyNetwork& net, const Task& task, const EnvConfig& env, const FoldingEngine& engine,
                    Rng& rng) {
    Episode ep(task, env);
    Rollout r;
    while (!ep.done()) {
        Transition tr;
        tr.window = ep.window();
        const PolicyOutput out = net.forward(tr.window);
        tr.action = sample_action(out.probs, rng);
        tr.old_log_prob = std::log(out.probs[static_cast<std::size_t>(tr.action)]);
        tr.old_value = out.value;
        const Action action = ep.pair_step() ? Action::pair(tr.action) : Action::single(tr.action);
        ep.step(action);
        r.transitions.push_back(std::move(tr));
    }
    r.outcome = finalize(ep, engine);
    for (auto& tr : r.transitions) tr.ret = r.outcome.breakdown.reward;
    return r;
}

// ---------------------------------------------------------------------------
// Checkpoints

namespace {

constexpr std::string_view kBase64Alphabet = "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789+/";

}  // namespace

std::string base64_encode(const std::vector<double>& values) {
    std::vector<unsigned char> bytes(values.size() * sizeof(double));
    std::memcpy(bytes.data(), values.data(), bytes.size());
    std::string out;
    out.reserve((bytes.size() + 2) / 3 * 4);
    for (std::size_t i = 0; i < bytes.size(); i += 3) {
        const std::uint32_t b0 = bytes[i];
        const std::uint32_t b1 = i + 1 < bytes.size() ? bytes[i + 1] : 0;
        const std::uint32_t b2 = i + 2 < bytes.size() ? bytes[i + 2] : 0;
        const std::uint32_t triple = (b0 << 16) | (b1 << 8) | b2;
        out.push_back(kBase64Alphabet[(triple >> 18) & 63]);
        out.push_back(kBase64Alphabet[(triple >> 12) & 63]);
        out.push_back(i + 1 < bytes.size() ? kBase64Alphabet[(triple >> 6) & 63] : '=');
        out.push_back(i + 2 < bytes.size() ? kBase64Alphabet[triple & 63] : '=');
    }
    return out;
}

std::vector<double> base64_decode_doubles(const std::string& text) {
    if (text.size() % 4 != 0) throw Error(ErrorCode::Io, "malformed base64 weights");
    std::vector<unsigned char> bytes;
    bytes.reserve(text.size() / 4 * 3);
    auto value = [](char c) -> std::uint32_t {
        const auto pos = kBase64Alphabet.find(c);
        if (pos == std::string_view::npos) throw Error(ErrorCode::Io, "malformed base64 weights");
        return static_cast<std::uint32_t>(pos);
    };
    for (std::size_t i = 0; i < text.size(); i += 4) {
        const std::uint32_t triple = (value(text[i]) << 18) | (value(text[i + 1]) << 12) |
                                     (text[i + 2] == '=' ? 0 : value(text[i + 2]) << 6) |
                                     (text[i + 3] == '=' ? 0 : value(text[i + 3]));
        bytes.push_back(static_cast<unsigned char>((triple >> 16) & 0xFF));
        if (text[i + 2] != '=') bytes.push_back(static_cast<unsigned char>((triple >> 8) & 0xFF));
        if (text[i + 3] != '=') bytes.push_back(static_cast<unsigned char>(triple & 0xFF));
    }
    if (bytes.size() % sizeof(double) != 0) throw Error(ErrorCode::Io, "weight payload is not a whole number of doubles");
    std::vector<double> out(bytes.size() / sizeof(double));
    std::memcpy(out.data(), bytes.data(), bytes.size());
    return out;
}

PolicyNetwork PolicyCheckpoint::instantiate() const { return PolicyNetwork(network, window_size, weights); }

nlohmann::json to_json(const PolicyCheckpoint& c) {
    return {{"format", "ribodesign-policy"},
            {"version", kCheckpointVersion},
            {"network", to_json(c.network)},
            {"env", env_to_json(c.env)},
            {"window_size", c.window_size},
            {"parameter_count", c.weights.size()},
            {"weights", base64_encode(c.weights)},
            {"metadata", {{"seed", c.metadata.seed}, {"steps", c.metadata.steps}, {"dataset", c.metadata.dataset}}}};
}

PolicyCheckpoint checkpoint_from_json(const nlohmann::json& j) {
    if (j.value("format", std::string{}) != "ribodesign-policy") throw Error(ErrorCode::Io, "not a policy checkpoint");
    if (j.at("version").get<int>() != kCheckpointVersion) throw Error(ErrorCode::Io, "unsupported checkpoint version");
    PolicyCheckpoint c;
    c.network = network_spec_from_json(j.at("network"));
    c.env = env_from_json(j.at("env"));
    c.window_size = j.at("window_size").get<int>();
    c.weights = base64_decode_doubles(j.at("weights").get<std::string>());
    if (c.weights.size() != j.at("parameter_count").get<std::size_t>()) {
        throw Error(ErrorCode::Io, "checkpoint parameter count mismatch");
    }
    const auto& m = j.at("metadata");
    c.metadata.seed = m.at("seed").get<std::uint64_t>();
    c.metadata.steps = m.at("steps").get<std::size_t>();
    c.metadata.dataset = m.at("dataset").get<std::string>();
    return c;
}

void save_checkpoint(const std::string& path, const PolicyCheckpoint& c) {
    std::ofstream out(path);
    if (!out) throw Error(ErrorCode::Io, "cannot write checkpoint '" + path + "'");
    out << to_json(c).dump(2) << '\n';
}

PolicyCheckpoint load_checkpoint(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::Io, "cannot read checkpoint '" + path + "'");
    return checkpoint_from_json(nlohmann::json::parse(in));
}

// ---------------------------------------------------------------------------
// Training

TrainResult train(PolicyNetwork& net, const std::vector<Task>& tasks, const EnvConfig& env, const PpoConfig& ppo,
                  Curriculum curriculum, std::size_t budget, const FoldingEngine& engine, Rng& rng,
                  TrainingMetadata metadata) {
    if (tasks.empty()) throw Error(ErrorCode::CorpusTooSmall, "training needs at least one task");
    env.validate();
    ppo.validate();
    if (net.window_size() != env.window_size()) throw Error(ErrorCode::ShapeMismatch, "network/env window mismatch");

    std::vector<std::size_t> order(tasks.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    if (curriculum == Curriculum::Sorted) {
        std::stable_sort(order.begin(), order.end(),
                         [&](std::size_t a, std::size_t b) { return tasks[a].size() < tasks[b].size(); });
    } else {
        std::shuffle(order.begin(), order.end(), rng);
    }

    TrainResult result;
    AdamOptimizer optimizer(net.parameter_count(), ppo.learning_rate);
    std::vector<Transition> batch;
    std::vector<double> batch_rewards;
    std::size_t steps = 0;
    std::size_t cursor = 0;

    auto flush = [&] {
        if (batch_rewards.empty()) return;
        ppo_update(net, optimizer, batch, ppo, rng);
        const double mean = std::accumulate(batch_rewards.begin(), batch_rewards.end(), 0.0) /
                            static_cast<double>(batch_rewards.size());
        result.curve.push_back({steps, mean});
        batch.clear();
        batch_rewards.clear();
    };

    while (steps < budget) {
        if (cursor == order.size()) {
            cursor = 0;
            if (curriculum == Curriculum::Random) std::shuffle(order.begin(), order.end(), rng);
        }
        const std::size_t idx = order[cursor++];
        Rollout r = run_episode(net, tasks[idx], env, engine, rng);
        apply_discount(r.transitions, ppo.discount);
        steps += r.transitions.size();
        result.episodes.push_back({idx, tasks[idx].size(), r.outcome.breakdown.reward});
        batch_rewards.push_back(r.outcome.breakdown.reward);
        std::move(r.transitions.begin(), r.transitions.end(), std::back_inserter(batch));
        if (static_cast<int>(batch_rewards.size()) >= ppo.batch_size) flush();
        // Tasks without designable positions take no steps; avoid spinning on them.
        if (r.transitions.empty() && result.episodes.size() > budget + tasks.size()) break;
    }
    flush();

    metadata.steps = steps;
    result.checkpoint.network = net.spec();
    result.checkpoint.env = env;
    result.checkpoint.window_size = net.window_size();
    result.checkpoint.weights.assign(net.parameters().begin(), net.parameters().end());
    result.checkpoint.metadata = std::move(metadata);
    return result;
}

TrainResult train_agent(const AgentConfig& config, const std::vector<Task>& tasks, std::size_t budget,
                        const FoldingEngine& engine, std::uint64_t seed, const std::string& dataset_name) {
    config.validate();
    Rng init_rng = make_stream(seed, 0);
    Rng train_rng = make_stream(seed, 1);
    PolicyNetwork net(config.network, config.env.window_size(), init_rng);
    return train(net, tasks, config.env, config.ppo, config.curriculum, budget, engine, train_rng,
                 TrainingMetadata{seed, 0, dataset_name});
}

void write_curve_csv(std::ostream& out, const std::vector<CurvePoint>& curve) {
    out << "step,mean_reward\n";
    out.precision(17);
    for (const auto& p : curve) out << p.step << ',' << p.mean_reward << '\n';
}

// ---------------------------------------------------------------------------
// Adaptation at inference time

AdaptiveDesigner::AdaptiveDesigner(PolicyNetwork net, EnvConfig env, PpoConfig ppo, FoldingEngine engine, bool adapt)
    : net_(std::move(net)),
      env_(env),
      ppo_(ppo),
      engine_(std::move(engine)),
      adapt_(adapt),
      optimizer_(net_.parameter_count(), ppo.learning_rate) {
    env_.validate();
    ppo_.validate();
    if (net_.window_size() != env_.window_size()) throw Error(ErrorCode::ShapeMismatch, "network/env window mismatch");
}

DesignOutcome AdaptiveDesigner::design(const Task& task, Rng& rng) {
    Rollout r = run_episode(net_, task, env_, engine_, rng);
    apply_discount(r.transitions, ppo_.discount);
    if (adapt_) {
        std::move(r.transitions.begin(), r.transitions.end(), std::back_inserter(buffer_));
        if (++buffered_episodes_ >= ppo_.batch_size) {
            ppo_update(net_, optimizer_, buffer_, ppo_, rng);
            ++updates_;
            buffer_.clear();
            buffered_episodes_ = 0;
        }
    }
    return std::move(r.outcome);
}

}  // namespace ribodesign
