#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "ribodesign/fold.hpp"
#include "ribodesign/random.hpp"
#include "ribodesign/rna.hpp"

namespace ribodesign {

inline constexpr char kExtensionSite = '*';
inline constexpr double kDefaultGcTolerance = 0.01;

using IndexPair = std::pair<std::size_t, std::size_t>;

/// A fixed-length masked design problem: fill every '?' of the sequence
/// constraint so that the fold matches every non-'?' structure symbol.
struct Task {
    std::string sequence_constraint;
    std::string structure_constraint;
    std::vector<IndexPair> explicit_pairs;
    std::optional<double> gc_target;

    std::size_t size() const noexcept { return sequence_constraint.size(); }
    std::size_t masked_sequence_positions() const;

    /// Throws LengthMismatch / IllegalSymbol / InvalidConfig.
    void validate() const;

    friend bool operator==(const Task&, const Task&) = default;
};

nlohmann::json to_json(const Task& task);
Task task_from_json(const nlohmann::json& j);

/// Masked variable-length templates. '*' marks an extension site that expands
/// to zero or more '?' in both templates. Explicit pairs index core positions.
struct DesignSpace {
    std::string sequence_template;
    std::string structure_template;
    std::size_t min_length = 0;
    std::size_t max_length = 0;
    std::optional<double> gc_target;
    double gc_tolerance = kDefaultGcTolerance;
    std::vector<IndexPair> explicit_pairs;

    std::size_t core_length() const;
    std::size_t extension_sites() const;
    /// Core offsets at which each extension site sits.
    std::vector<std::size_t> site_offsets() const;

    void validate() const;
};

DesignSpace parse_design_space(std::string_view text);
DesignSpace load_design_space(const std::string& path);
std::string render_design_space(const DesignSpace& space);

/// The theophylline riboswitch space (42nt aptamer, masked spacer, anchored
/// complementary region, 8-U-stretch; 66..91 nt).
DesignSpace riboswitch_design_space();

/// Expands the space with the given per-site extension lengths.
Task expand(const DesignSpace& space, const std::vector<std::size_t>& extension_lengths);

/// Uniform total length, then a uniform composition of the surplus over sites.
Task sample_task(const DesignSpace& space, Rng& rng);

/// Every per-site composition of `total` extra symbols over `sites` sites.
std::vector<std::vector<std::size_t>> all_compositions(std::size_t total, std::size_t sites);

struct MaskingPolicy {
    std::size_t max_structure_parts = 5;
    double max_part_fraction = 0.20;
    double sequence_random_mask_fraction = 0.218;
    double inverse_folding_fraction = 0.115;

    void validate() const;
};

enum class TaskFamily { InverseFolding, Alternating, RandomMasking };

std::string_view to_string(TaskFamily family);

struct MaskedTask {
    Task task;
    TaskFamily family;
    /// Masked structure runs as [begin, end) intervals.
    std::vector<IndexPair> structure_runs;
};

MaskedTask mask_sample(const Sequence& seq, const Structure& structure, const MaskingPolicy& policy, Rng& rng);

/// Maximal runs of '?' as [begin, end) intervals.
std::vector<IndexPair> masked_runs(std::string_view constraint);

enum class DatasetKind { Long, Short, Random, Validation };

std::string_view to_string(DatasetKind kind);
DatasetKind dataset_kind_from_string(std::string_view name);

struct DatasetSpec {
    DatasetKind kind = DatasetKind::Short;
    std::size_t size = 1000;

    static constexpr std::size_t kLengthBoundary = 200;
    bool accepts(std::size_t length) const;
};

struct CorpusEntry {
    Sequence sequence;
    Structure structure;
};

using Corpus = std::vector<CorpusEntry>;

/// Validation entries are drawn first and excluded (by sequence) from every
/// training pool; training sets cycle over their filtered pool.
std::map<DatasetKind, std::vector<Task>> build_datasets(const Corpus& corpus, const std::vector<DatasetSpec>& specs,
                                                        const MaskingPolicy& policy, Rng& rng);

/// Random sequences with lengths uniform in [min_length, max_length], folded with `engine`.
Corpus random_corpus(std::size_t count, std::size_t min_length, std::size_t max_length,
                     const FoldingEngine& engine, Rng& rng);

/// FASTA records (T read as U, case-insensitive) folded with `engine`.
Corpus read_fasta_corpus(std::istream& in, const FoldingEngine& engine);
/// Two-column TSV: sequence, dot-bracket.
Corpus read_tsv_corpus(std::istream& in);

void write_tasks_jsonl(std::ostream& out, const std::vector<Task>& tasks);
std::vector<Task> read_tasks_jsonl(std::istream& in);

}  // namespace ribodesign
