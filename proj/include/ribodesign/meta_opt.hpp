#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <ostream>
#include <vector>

#include <nlohmann/json.hpp>

#include "ribodesign/design_space.hpp"
#include "ribodesign/fold.hpp"
#include "ribodesign/ppo.hpp"
#include "ribodesign/random.hpp"

namespace ribodesign {

/// Bounds of the searched configuration space.
namespace config_space {
inline constexpr int kMaxStateRadius = 32;
inline constexpr double kMinRewardExponent = 1.0;
inline constexpr double kMaxRewardExponent = 12.0;
inline constexpr int kMaxConv1FilterSize = 17;
inline constexpr int kMaxConv2FilterSize = 9;
inline constexpr int kMaxFilters = 32;
inline constexpr int kMaxLstmLayers = 3;
inline constexpr int kMaxLstmUnits = 64;
inline constexpr int kMaxFcLayers = 2;
inline constexpr int kMinFcUnits = 8;
inline constexpr int kMaxFcUnits = 64;
inline constexpr int kMaxEmbedding = 21;
inline constexpr int kMinBatch = 32;
inline constexpr int kMaxBatch = 256;
inline constexpr double kMinEntropy = 1e-7;
inline constexpr double kMaxEntropy = 1e-2;
inline constexpr double kMinLearningRate = 1e-6;
inline constexpr double kMaxLearningRate = 1e-3;
inline constexpr int kDimensions = 18;
}  // namespace config_space

/// Draws all 18 dimensions from their priors.
AgentConfig sample_config(Rng& rng);

/// True when every searched dimension lies inside the space.
bool in_config_space(const AgentConfig& config);

/// FNV-1a over the canonical JSON form; used to break ties.
std::uint64_t config_hash(const AgentConfig& config);

using ConfigSampler = std::function<AgentConfig(Rng&)>;

struct SearchConfig {
    std::vector<std::size_t> budgets{1000, 3000, 9000};
    int eta = 3;
    std::size_t initial_configs = 9;
    int brackets = 1;
    std::size_t attempts = 10;
    unsigned workers = 1;

    void validate() const;
};

struct TrialResult {
    AgentConfig config;
    std::uint64_t config_hash = 0;
    int bracket = 0;
    int rung = 0;
    std::size_t budget = 0;
    std::uint64_t seed = 0;
    double validation_loss = 0.0;
    /// attempt_losses[t][a]: normalised structure loss of attempt a on task t.
    std::vector<std::vector<double>> attempt_losses;
    bool promoted = false;
    double wall_seconds = 0.0;
};

nlohmann::json to_json(const TrialResult& t);

/// Mean over tasks of the minimum attempt loss.
double validation_loss_from_attempts(const std::vector<std::vector<double>>& attempt_losses);

/// Trains `config` for `budget` steps and scores it on `validation`.
TrialResult run_trial(const AgentConfig& config, const std::map<DatasetKind, std::vector<Task>>& training,
                      const std::vector<Task>& validation, std::size_t budget, std::size_t attempts,
                      const FoldingEngine& engine, std::uint64_t seed);

/// Indices of the configs promoted from a rung: the best floor(n / eta)
/// (at least one) by loss, ties broken by config hash.
std::vector<std::size_t> promote(const std::vector<TrialResult>& rung, int eta);

struct SearchResult {
    std::vector<TrialResult> trials;
    TrialResult incumbent;
};

/// Hyperband-style successive halving with random sampling.
SearchResult run_search(const std::map<DatasetKind, std::vector<Task>>& training, const std::vector<Task>& validation,
                        const SearchConfig& config, const FoldingEngine& engine, std::uint64_t seed,
                        const ConfigSampler& sampler = sample_config);

void write_trials_jsonl(std::ostream& out, const std::vector<TrialResult>& trials);

}  // namespace ribodesign
