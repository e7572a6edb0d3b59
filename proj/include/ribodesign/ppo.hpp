#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "ribodesign/design_space.hpp"
#include "ribodesign/env.hpp"
#include "ribodesign/network.hpp"

namespace ribodesign {

struct PpoConfig {
    double learning_rate = 5.9e-4;
    double entropy_coefficient = 4.46e-7;
    int batch_size = 247;  // episodes per update
    double clip_ratio = 0.2;
    int epochs_per_update = 4;
    int minibatch_size = 64;  // transitions per gradient step
    double discount = 1.0;
    double value_coefficient = 0.5;

    void validate() const;
};

nlohmann::json to_json(const PpoConfig& c);
PpoConfig ppo_config_from_json(const nlohmann::json& j);

enum class Curriculum { Random, Sorted };
std::string_view to_string(Curriculum c);
Curriculum curriculum_from_string(std::string_view s);

/// The full agent configuration: environment, network, PPO and data choices.
struct AgentConfig {
    EnvConfig env;
    NetworkSpec network;
    PpoConfig ppo;
    DatasetKind training_data = DatasetKind::Short;
    Curriculum curriculum = Curriculum::Sorted;

    void validate() const;
};

/// The finally selected configuration (kappa 10, target states, pair actions,
/// alpha 10.76, 2x12 FC, embedding 17, batch 247, ...).
AgentConfig default_agent_config();

nlohmann::json to_json(const AgentConfig& c);
AgentConfig agent_config_from_json(const nlohmann::json& j);

struct Transition {
    StateWindow window;
    int action = 0;
    double old_log_prob = 0.0;
    double old_value = 0.0;
    double ret = 0.0;
};

/// Per-sample clipped surrogate min(r*A, clip(r, 1-eps, 1+eps)*A).
struct SurrogateTerms {
    std::vector<double> clipped_ratios;
    std::vector<double> objective;
    /// True where the unclipped term is the active minimum (gradient flows).
    std::vector<bool> unclipped_active;
};

SurrogateTerms clipped_surrogate(const std::vector<double>& ratios, const std::vector<double>& advantages,
                                 double clip_ratio);

class AdamOptimizer {
public:
    explicit AdamOptimizer(std::size_t parameters, double learning_rate);

    void step(std::span<double> params, std::span<const double> grad);
    double learning_rate() const noexcept { return lr_; }

private:
    double lr_;
    double beta1_ = 0.9;
    double beta2_ = 0.999;
    double epsilon_ = 1e-8;
    long t_ = 0;
    std::vector<double> m_;
    std::vector<double> v_;
};

struct UpdateStats {
    double mean_surrogate_before = 0.0;
    double mean_surrogate_after = 0.0;
    double min_clipped_ratio = 1.0;
    double max_clipped_ratio = 1.0;
    std::size_t gradient_steps = 0;
};

/// PPO update over a batch of transitions (several epochs of shuffled minibatches).
UpdateStats ppo_update(PolicyNetwork& net, AdamOptimizer& optimizer, const std::vector<Transition>& batch,
                       const PpoConfig& config, Rng& rng);

/// Mean clipped-surrogate objective of a batch under the current weights.
double mean_surrogate(const PolicyNetwork& net, const std::vector<Transition>& batch, double clip_ratio);

/// One sampled (or greedy) rollout; the terminal reward is credited to every step.
struct Rollout {
    std::vector<Transition> transitions;
    DesignOutcome outcome;
};

Rollout run_episode(const PolicyNetwork& net, const Task& task, const EnvConfig& env, const FoldingEngine& engine,
                    Rng& rng);

struct CurvePoint {
    std::size_t step = 0;
    double mean_reward = 0.0;
};

struct EpisodeRecord {
    std::size_t task_index = 0;
    std::size_t task_length = 0;
    double reward = 0.0;
};

struct TrainingMetadata {
    std::uint64_t seed = 0;
    std::size_t steps = 0;
    std::string dataset;
};

/// Self-describing policy snapshot.
struct PolicyCheckpoint {
    NetworkSpec network;
    EnvConfig env;
    int window_size = 0;
    std::vector<double> weights;
    TrainingMetadata metadata;

    PolicyNetwork instantiate() const;
};

inline constexpr int kCheckpointVersion = 1;

nlohmann::json to_json(const PolicyCheckpoint& c);
PolicyCheckpoint checkpoint_from_json(const nlohmann::json& j);
void save_checkpoint(const std::string& path, const PolicyCheckpoint& c);
PolicyCheckpoint load_checkpoint(const std::string& path);

std::string base64_encode(const std::vector<double>& values);
std::vector<double> base64_decode_doubles(const std::string& text);

struct TrainResult {
    PolicyCheckpoint checkpoint;
    std::vector<CurvePoint> curve;
    std::vector<EpisodeRecord> episodes;
};

/// Trains for `budget` environment steps (episodes always run to completion).
TrainResult train(PolicyNetwork& net, const std::vector<Task>& tasks, const EnvConfig& env, const PpoConfig& ppo,
                  Curriculum curriculum, std::size_t budget, const FoldingEngine& engine, Rng& rng,
                  TrainingMetadata metadata = {});

/// Convenience: fresh network from `config`, trained on `tasks`.
TrainResult train_agent(const AgentConfig& config, const std::vector<Task>& tasks, std::size_t budget,
                        const FoldingEngine& engine, std::uint64_t seed, const std::string& dataset_name = {});

void write_curve_csv(std::ostream& out, const std::vector<CurvePoint>& curve);

/// Policy that keeps learning while it designs: completed episodes are
/// buffered and a PPO update runs every `batch_size` episodes unless frozen.
class AdaptiveDesigner {
public:
    AdaptiveDesigner(PolicyNetwork net, EnvConfig env, PpoConfig ppo, FoldingEngine engine, bool adapt);

    DesignOutcome design(const Task& task, Rng& rng);

    const PolicyNetwork& network() const noexcept { return net_; }
    bool adapting() const noexcept { return adapt_; }
    std::size_t updates() const noexcept { return updates_; }

private:
    PolicyNetwork net_;
    EnvConfig env_;
    PpoConfig ppo_;
    FoldingEngine engine_;
    bool adapt_;
    AdamOptimizer optimizer_;
    std::vector<Transition> buffer_;
    int buffered_episodes_ = 0;
    std::size_t updates_ = 0;
};

}  // namespace ribodesign
