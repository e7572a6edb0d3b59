#include "ribodesign/pipeline.hpp"

#include "ribodesign/error.hpp"
#include "ribodesign/parallel.hpp"

namespace ribodesign {

nlohmann::json to_json(const GeneratedCandidate& c) {
    const RewardBreakdown& b = c.outcome.breakdown;
    return {{"task", to_json(c.task)},
            {"sequence", c.outcome.sequence},
            {"structure", c.outcome.folded},
            {"refined", c.refined},
            {"losses",
             {{"structure_loss", b.structure_loss},
              {"gc_loss", b.gc_loss},
              {"total_loss", b.total_loss},
              {"reward", b.reward},
              {"gc", gc_content(c.outcome.sequence)}}}};
}

std::vector<GeneratedCandidate> generate_candidates(const DesignSpace& space, const PolicyCheckpoint& checkpoint,
                                                    const PpoConfig& ppo, const FoldingEngine& engine,
                                                    const GenerationConfig& config, std::uint64_t seed) {
    space.validate();
    const unsigned workers = std::max(1u, config.workers);
    std::vector<GeneratedCandidate> out(config.count);
    parallel_for(workers, workers, [&](std::size_t w) {
        AdaptiveDesigner designer(checkpoint.instantiate(), checkpoint.env, ppo, engine, config.adapt);
        Rng rng = make_stream(seed, w);
        for (std::size_t i = w; i < config.count; i += workers) {
            GeneratedCandidate& c = out[i];
            c.task = sample_task(space, rng);
            if (config.gc_target) c.task.gc_target = config.gc_target;
            c.outcome = designer.design(c.task, rng);
            if (config.refine) {
                RefineResult r = refine(c.outcome, c.task, engine, config.refine_config, rng);
                c.refined = r.outcome.sequence != c.outcome.sequence;
                c.outcome = std::move(r.outcome);
            }
        }
    });
    return out;
}

std::vector<Task> sample_tasks(const DesignSpace& space, std::size_t count, Rng& rng) {
    std::vector<Task> tasks;
    tasks.reserve(count);
    for (std::size_t i = 0; i < count; ++i) tasks.push_back(sample_task(space, rng));
    return tasks;
}

}  // namespace ribodesign
