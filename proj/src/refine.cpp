#include "ribodesign/refine.hpp"

#include <cmath>
#include <vector>

#include "ribodesign/error.hpp"

namespace ribodesign {

void RefineConfig::validate() const {
    if (gis_max_attempts < 1) throw Error(ErrorCode::InvalidConfig, "gis_max_attempts must be >= 1");
    if (!(gc_tolerance >= 0.0)) throw Error(ErrorCode::InvalidConfig, "gc tolerance must be >= 0");
}

namespace {

std::vector<std::size_t> mismatched_designable_sites(const DesignOutcome& d, const Task& task) {
    std::vector<std::size_t> sites;
    const std::string& target = task.structure_constraint;
    for (std::size_t i = 0; i < target.size(); ++i) {
        if (target[i] == kMask || target[i] == d.folded[i]) continue;
        if (task.sequence_constraint[i] == kMask) sites.push_back(i);
    }
    return sites;
}

}  // namespace

RefineResult local_improvement(const DesignOutcome& input, const Task& task, const FoldingEngine& engine,
                               const RefineConfig& config) {
    config.validate();
    RefineResult r{input, false, 0, 0};
    if (input.breakdown.mismatches > config.lis_site_threshold) return r;
    r.triggered = true;
    if (input.breakdown.mismatches == 0) return r;

    const auto sites = mismatched_designable_sites(input, task);
    if (sites.empty()) return r;
    std::size_t combos = 1;
    for (std::size_t k = 0; k < sites.size(); ++k) combos *= 4;

    std::string candidate = input.sequence;
    for (std::size_t code = 0; code < combos; ++code) {
        std::size_t c = code;
        for (std::size_t site : sites) {
            candidate[site] = kNucleotides[c % 4];
            c /= 4;
        }
        if (candidate == input.sequence) continue;
        DesignOutcome trial = evaluate_design(candidate, task, engine, config.reward_exponent);
        ++r.refolds;
        if (trial.breakdown.structure_loss < r.outcome.breakdown.structure_loss) r.outcome = std::move(trial);
    }
    return r;
}

RefineResult gc_improvement(const DesignOutcome& input, const Task& task, const FoldingEngine& engine,
                            double target_gc, const RefineConfig& config, Rng& rng) {
    config.validate();
    RefineResult r{input, true, 0, 0};
    const double loss_bound = input.breakdown.structure_loss;
    std::vector<std::size_t> movable;

    for (int attempt = 0; attempt < config.gis_max_attempts; ++attempt) {
        const std::string& seq = r.outcome.sequence;
        const double gc = gc_content(seq);
        const double deviation = std::abs(gc - target_gc);
        if (deviation <= config.gc_tolerance) break;
        const bool raise = gc < target_gc;

        movable.clear();
        for (std::size_t i = 0; i < seq.size(); ++i) {
            if (task.sequence_constraint[i] != kMask) continue;
            const bool strong = seq[i] == 'G' || seq[i] == 'C';
            if (strong != raise) movable.push_back(i);
        }
        if (movable.empty()) break;

        const std::size_t pos = movable[uniform_int<std::size_t>(rng, 0, movable.size() - 1)];
        std::string candidate = seq;
        switch (candidate[pos]) {
            case 'A': candidate[pos] = 'G'; break;
            case 'U': candidate[pos] = 'C'; break;
            case 'G': candidate[pos] = 'A'; break;
            case 'C': candidate[pos] = 'U'; break;
            default: break;
        }
        if (std::abs(gc_content(candidate) - target_gc) >= deviation) continue;
        DesignOutcome trial = evaluate_design(candidate, task, engine, config.reward_exponent);
        ++r.refolds;
        if (trial.breakdown.structure_loss <= loss_bound) {
            r.outcome = std::move(trial);
            ++r.accepted;
        }
    }
    return r;
}

RefineResult refine(const DesignOutcome& input, const Task& task, const FoldingEngine& engine,
                    const RefineConfig& config, Rng& rng) {
    RefineResult lis = local_improvement(input, task, engine, config);
    if (!lis.triggered || !task.gc_target) return lis;
    RefineResult gis = gc_improvement(lis.outcome, task, engine, *task.gc_target, config, rng);
    gis.refolds += lis.refolds;
    return gis;
}

}  // namespace ribodesign
