#pragma once

#include <cstddef>
#include <string>

#include "ribodesign/design_space.hpp"
#include "ribodesign/env.hpp"
#include "ribodesign/fold.hpp"
#include "ribodesign/random.hpp"

namespace ribodesign {

struct RefineConfig {
    std::size_t lis_site_threshold = 4;  // xi
    int gis_max_attempts = 50;
    double gc_tolerance = kDefaultGcTolerance;
    double reward_exponent = 10.76;

    void validate() const;
};

struct RefineResult {
    DesignOutcome outcome;
    bool triggered = false;
    std::size_t refolds = 0;
    std::size_t accepted = 0;  // GIS substitutions kept
};

/// Exhaustive search over nucleotides at mismatched designable sites when at
/// most `lis_site_threshold` constrained sites mismatch. The input is kept
/// unless a candidate has strictly lower structure loss.
RefineResult local_improvement(const DesignOutcome& input, const Task& task, const FoldingEngine& engine,
                               const RefineConfig& config);

/// Single-site substitutions at random designable positions that move the GC
/// content toward `target_gc` (A->G, U->C to raise; G->A, C->U to lower). A
/// substitution is kept only if the structure loss does not exceed the loss
/// before the step and the GC deviation shrinks.
RefineResult gc_improvement(const DesignOutcome& input, const Task& task, const FoldingEngine& engine,
                            double target_gc, const RefineConfig& config, Rng& rng);

/// LIS, then GIS whenever LIS triggered and the task carries a GC target.
RefineResult refine(const DesignOutcome& input, const Task& task, const FoldingEngine& engine,
                    const RefineConfig& config, Rng& rng);

}  // namespace ribodesign
