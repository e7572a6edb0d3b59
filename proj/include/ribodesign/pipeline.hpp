#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include <nlohmann/json.hpp>

#include "ribodesign/design_space.hpp"
#include "ribodesign/ppo.hpp"
#include "ribodesign/refine.hpp"

namespace ribodesign {

struct GenerationConfig {
    std::size_t count = 1000;
    std::optional<double> gc_target;
    bool adapt = true;
    bool refine = true;
    RefineConfig refine_config;
    unsigned workers = 1;
};

struct GeneratedCandidate {
    Task task;
    DesignOutcome outcome;
    bool refined = false;
};

nlohmann::json to_json(const GeneratedCandidate& c);

/// One sampled task and a single design attempt per candidate. Worker w
/// handles candidates w, w + workers, ... with its own policy copy and an RNG
/// stream derived from `seed`, so output depends only on seed and worker count.
std::vector<GeneratedCandidate> generate_candidates(const DesignSpace& space, const PolicyCheckpoint& checkpoint,
                                                    const PpoConfig& ppo, const FoldingEngine& engine,
                                                    const GenerationConfig& config, std::uint64_t seed);

/// Tasks drawn from the space for training on it directly.
std::vector<Task> sample_tasks(const DesignSpace& space, std::size_t count, Rng& rng);

}  // namespace ribodesign
