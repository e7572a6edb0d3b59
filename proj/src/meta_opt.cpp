#include "ribodesign/meta_opt.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>

#include "ribodesign/error.hpp"
#include "ribodesign/parallel.hpp"

namespace ribodesign {

namespace cs = config_space;

namespace {

double log_uniform(Rng& rng, double lo, double hi) {
    return std::exp(std::uniform_real_distribution<double>(std::log(lo), std::log(hi))(rng));
}

int log_uniform_int(Rng& rng, int lo, int hi) {
    const double x = log_uniform(rng, static_cast<double>(lo), static_cast<double>(hi) + 1.0);
    return std::clamp(static_cast<int>(std::floor(x)), lo, hi);
}

template <typename T>
const T& pick(Rng& rng, std::initializer_list<T> options) {
    return *(options.begin() + uniform_int<std::size_t>(rng, 0, options.size() - 1));
}

bool odd_or_zero(int size, int max) { return size == 0 || (size >= 3 && size <= max && size % 2 == 1); }

}  // namespace

AgentConfig sample_config(Rng& rng) {
    AgentConfig c;
    c.env.state_radius = uniform_int(rng, 0, cs::kMaxStateRadius);
    c.env.state_composition = pick(rng, {StateComposition::Target, StateComposition::Design});
    c.env.action_semantics = pick(rng, {ActionSemantics::Pair, ActionSemantics::Single});
    c.env.reward_exponent = std::uniform_real_distribution<double>(cs::kMinRewardExponent, cs::kMaxRewardExponent)(rng);

    c.network.conv1_filter_size = pick(rng, {0, 3, 5, 7, 9, 11, 13, 15, 17});
    c.network.conv2_filter_size = pick(rng, {0, 3, 5, 7, 9});
    c.network.conv1_filters = log_uniform_int(rng, 1, cs::kMaxFilters);
    c.network.conv2_filters = log_uniform_int(rng, 1, cs::kMaxFilters);
    c.network.lstm_layers = uniform_int(rng, 0, cs::kMaxLstmLayers);
    c.network.lstm_units = log_uniform_int(rng, 1, cs::kMaxLstmUnits);
    c.network.fc_layers = uniform_int(rng, 1, cs::kMaxFcLayers);
    c.network.fc_units = log_uniform_int(rng, cs::kMinFcUnits, cs::kMaxFcUnits);
    c.network.embedding_dim = uniform_int(rng, 0, cs::kMaxEmbedding);

    c.ppo.batch_size = log_uniform_int(rng, cs::kMinBatch, cs::kMaxBatch);
    c.ppo.entropy_coefficient = log_uniform(rng, cs::kMinEntropy, cs::kMaxEntropy);
    c.ppo.learning_rate = log_uniform(rng, cs::kMinLearningRate, cs::kMaxLearningRate);

    c.training_data = pick(rng, {DatasetKind::Random, DatasetKind::Short, DatasetKind::Long});
    c.curriculum = pick(rng, {Curriculum::Random, Curriculum::Sorted});
    return c;
}

bool in_config_space(const AgentConfig& c) {
    const auto& e = c.env;
    const auto& n = c.network;
    const auto& p = c.ppo;
    return e.state_radius >= 0 && e.state_radius <= cs::kMaxStateRadius &&
           e.reward_exponent >= cs::kMinRewardExponent && e.reward_exponent <= cs::kMaxRewardExponent &&
           odd_or_zero(n.conv1_filter_size, cs::kMaxConv1FilterSize) &&
           odd_or_zero(n.conv2_filter_size, cs::kMaxConv2FilterSize) && n.conv1_filters >= 1 &&
           n.conv1_filters <= cs::kMaxFilters && n.conv2_filters >= 1 && n.conv2_filters <= cs::kMaxFilters &&
           n.lstm_layers >= 0 && n.lstm_layers <= cs::kMaxLstmLayers && n.lstm_units >= 1 &&
           n.lstm_units <= cs::kMaxLstmUnits && n.fc_layers >= 1 && n.fc_layers <= cs::kMaxFcLayers &&
           n.fc_units >= cs::kMinFcUnits && n.fc_units <= cs::kMaxFcUnits && n.embedding_dim >= 0 &&
           n.embedding_dim <= cs::kMaxEmbedding && p.batch_size >= cs::kMinBatch && p.batch_size <= cs::kMaxBatch &&
           p.entropy_coefficient >= cs::kMinEntropy && p.entropy_coefficient <= cs::kMaxEntropy &&
           p.learning_rate >= cs::kMinLearningRate && p.learning_rate <= cs::kMaxLearningRate &&
           c.training_data != DatasetKind::Validation;
}

std::uint64_t config_hash(const AgentConfig& config) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char ch : to_json(config).dump()) {
        h ^= ch;
        h *= 0x100000001b3ULL;
    }
    return h;
}

void SearchConfig::validate() const {
    if (budgets.empty() || budgets.front() == 0 || !std::is_sorted(budgets.begin(), budgets.end()) ||
        std::adjacent_find(budgets.begin(), budgets.end()) != budgets.end()) {
        throw Error(ErrorCode::InvalidConfig, "budgets must be positive and strictly ascending");
    }
    if (eta < 2) throw Error(ErrorCode::InvalidConfig, "eta must be >= 2");
    if (initial_configs < 1) throw Error(ErrorCode::InvalidConfig, "need at least one configuration");
    if (brackets < 1 || brackets > static_cast<int>(budgets.size())) {
        throw Error(ErrorCode::InvalidConfig, "bracket count must be in [1, rungs]");
    }
    if (attempts < 1) throw Error(ErrorCode::InvalidConfig, "need at least one validation attempt");
}

nlohmann::json to_json(const TrialResult& t) {
    return {{"config", to_json(t.config)},
            {"config_hash", t.config_hash},
            {"bracket", t.bracket},
            {"rung", t.rung},
            {"budget", t.budget},
            {"seed", t.seed},
            {"validation_loss", t.validation_loss},
            {"attempt_losses", t.attempt_losses},
            {"promoted", t.promoted},
            {"wall_seconds", t.wall_seconds}};
}

double validation_loss_from_attempts(const std::vector<std::vector<double>>& attempt_losses) {
    if (attempt_losses.empty()) throw Error(ErrorCode::InvalidConfig, "no validation tasks");
    double sum = 0.0;
    for (const auto& task : attempt_losses) sum += *std::min_element(task.begin(), task.end());
    return sum / static_cast<double>(attempt_losses.size());
}

TrialResult run_trial(const AgentConfig& config, const std::map<DatasetKind, std::vector<Task>>& training,
                      const std::vector<Task>& validation, std::size_t budget, std::size_t attempts,
                      const FoldingEngine& engine, std::uint64_t seed) {
    if (validation.empty()) throw Error(ErrorCode::InvalidConfig, "validation set is empty");
    const auto data = training.find(config.training_data);
    if (data == training.end() || data->second.empty()) {
        throw Error(ErrorCode::CorpusTooSmall,
                    "no training tasks for dataset '" + std::string(to_string(config.training_data)) + "'");
    }
    const auto start = std::chrono::steady_clock::now();
    TrialResult t;
    t.config = config;
    t.config_hash = config_hash(config);
    t.budget = budget;
    t.seed = seed;

    TrainResult trained = train_agent(config, data->second, budget, engine, seed,
                                      std::string(to_string(config.training_data)));
    AdaptiveDesigner designer(trained.checkpoint.instantiate(), config.env, config.ppo, engine, true);
    Rng rng = make_stream(seed, 2);
    for (const Task& task : validation) {
        auto& losses = t.attempt_losses.emplace_back();
        for (std::size_t a = 0; a < attempts; ++a) losses.push_back(designer.design(task, rng).breakdown.structure_loss);
    }
    t.validation_loss = validation_loss_from_attempts(t.attempt_losses);
    t.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return t;
}

std::vector<std::size_t> promote(const std::vector<TrialResult>& rung, int eta) {
    std::vector<std::size_t> order(rung.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        if (rung[a].validation_loss != rung[b].validation_loss) return rung[a].validation_loss < rung[b].validation_loss;
        return rung[a].config_hash < rung[b].config_hash;
    });
    const std::size_t keep = std::max<std::size_t>(1, rung.size() / static_cast<std::size_t>(eta));
    order.resize(std::min(keep, order.size()));
    return order;
}

SearchResult run_search(const std::map<DatasetKind, std::vector<Task>>& training, const std::vector<Task>& validation,
                        const SearchConfig& config, const FoldingEngine& engine, std::uint64_t seed,
                        const ConfigSampler& sampler) {
    config.validate();
    if (validation.empty()) throw Error(ErrorCode::InvalidConfig, "validation set is empty");
    Rng sample_rng = make_stream(seed, 0);
    SearchResult result;
    std::uint64_t trial_counter = 0;
    const auto eta = static_cast<std::size_t>(config.eta);

    for (int bracket = 0; bracket < config.brackets; ++bracket) {
        std::size_t n = config.initial_configs;
        for (int b = 0; b < bracket; ++b) n = std::max<std::size_t>(1, n / eta);
        std::vector<AgentConfig> configs;
        for (std::size_t k = 0; k < n; ++k) configs.push_back(sampler(sample_rng));

        for (std::size_t rung = static_cast<std::size_t>(bracket); rung < config.budgets.size(); ++rung) {
            std::vector<TrialResult> trials(configs.size());
            const std::uint64_t base = trial_counter;
            trial_counter += configs.size();
            parallel_for(configs.size(), config.workers, [&](std::size_t i) {
                trials[i] = run_trial(configs[i], training, validation, config.budgets[rung], config.attempts, engine,
                                      derive_seed(seed, base + i + 1));
                trials[i].bracket = bracket;
                trials[i].rung = static_cast<int>(rung);
            });
            const bool last = rung + 1 == config.budgets.size();
            std::vector<AgentConfig> next;
            if (!last) {
                for (std::size_t idx : promote(trials, config.eta)) {
                    trials[idx].promoted = true;
                    next.push_back(trials[idx].config);
                }
            }
            for (auto& t : trials) result.trials.push_back(std::move(t));
            if (last) break;
            configs = std::move(next);
        }
    }

    const std::size_t top = config.budgets.back();
    const TrialResult* best = nullptr;
    for (const auto& t : result.trials) {
        if (t.budget != top) continue;
        if (!best || t.validation_loss < best->validation_loss ||
            (t.validation_loss == best->validation_loss && t.config_hash < best->config_hash)) {
            best = &t;
        }
    }
    result.incumbent = *best;
    return result;
}

void write_trials_jsonl(std::ostream& out, const std::vector<TrialResult>& trials) {
    for (const auto& t : trials) out << to_json(t).dump() << '\n';
}

}  // namespace ribodesign
