#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "ribodesign/design_space.hpp"
#include "ribodesign/fold.hpp"
#include "ribodesign/parallel.hpp"
#include "ribodesign/random.hpp"

namespace ribodesign {

/// Half-open index interval.
struct IndexRange {
    std::size_t begin = 0;
    std::size_t end = 0;

    std::size_t size() const noexcept { return end - begin; }
    bool contains(std::size_t i) const noexcept { return i >= begin && i < end; }
    friend bool operator==(const IndexRange&, const IndexRange&) = default;
};

struct RegionMap {
    IndexRange aptamer;
    IndexRange spacer;
    IndexRange complementary;
    IndexRange u_stretch;

    std::size_t length() const noexcept { return u_stretch.end; }
    friend bool operator==(const RegionMap&, const RegionMap&) = default;
};

/// Literal landmarks of a riboswitch space: the fixed 5' aptamer, the literal
/// anchor that opens the complementary region, and the 3' U-stretch.
struct RiboswitchLayout {
    std::string aptamer;
    std::string anchor;
    std::string u_stretch;
    std::size_t min_spacer = 0;
};

/// Errors: InvalidConfig when the space lacks a literal prefix, anchor or suffix.
RiboswitchLayout layout_from_space(const DesignSpace& space);

/// Errors: AnchorNotFound when the candidate does not follow the layout.
RegionMap infer_regions(std::string_view candidate, const RiboswitchLayout& layout);
RegionMap infer_regions(std::string_view candidate, const DesignSpace& space);

struct GcSpec {
    double target = 0.0;
    double tolerance = kDefaultGcTolerance;
};

struct CheckConfig {
    int speed = 5;
    std::size_t min_terminator_stem = 1;
    std::size_t unpaired_tail = 7;
    std::optional<GcSpec> gc;
};

struct Verdict {
    bool aptamer_hairpin = false;
    bool terminator_hairpin = false;
    bool hairpins_ok = false;
    bool u_stretch_ok = false;
    bool cotranscription_ok = false;
    std::optional<bool> gc_ok;
    bool valid = false;
};

nlohmann::json to_json(const Verdict& v);

/// A pair (i, j) with no paired position strictly inside.
bool is_hairpin_closing(const PairTable& table, std::size_t i);

/// Criteria evaluated on given structures (no folding). `prefixes` are the
/// co-transcriptional intermediates; the full structure is always checked too.
Verdict check_structure(std::string_view sequence, const Structure& full, std::span<const Structure> prefixes,
                        const RegionMap& regions, const CheckConfig& config);

struct CandidateCheck {
    std::string structure;
    Verdict verdict;
};

CandidateCheck check_candidate(const Sequence& candidate, const RegionMap& regions, const FoldingEngine& engine,
                               const CheckConfig& config);

struct BaselineConfig {
    std::size_t min_spacer = 6;
    std::size_t max_spacer = 20;
    std::size_t min_complementary = 10;
    std::size_t max_complementary = 21;
};

/// aptamer + random spacer + reverse complement of an aptamer 3' suffix + U-stretch.
std::vector<std::string> baseline_generate(std::size_t n, const RiboswitchLayout& layout, Rng& rng,
                                           const BaselineConfig& config = {});

/// Smallest normalised structure loss of `folded` against the space's
/// structure template over every expansion consistent with `sequence`.
std::optional<double> space_structure_loss(std::string_view sequence, std::string_view folded,
                                           const DesignSpace& space);

struct LibraryReport {
    std::size_t total = 0;
    std::size_t unique_sequences = 0;
    std::size_t valid = 0;
    double valid_fraction = 0.0;
    std::size_t unique_valid_structures = 0;
    std::map<std::size_t, std::size_t> length_histogram;
    std::map<int, std::size_t> gc_histogram;  // bin index: floor(gc * 100)
};

nlohmann::json to_json(const LibraryReport& r);

struct CandidateRecord {
    std::string sequence;
    std::string structure;
    std::optional<RegionMap> regions;
    Verdict verdict;
    std::optional<double> structure_loss;
};

nlohmann::json to_json(const CandidateRecord& r);

struct LibraryEvaluation {
    LibraryReport report;
    std::vector<CandidateRecord> records;  // one per unique sequence, sorted
};

/// Deduplicates, folds and checks every unique candidate on `workers` threads.
LibraryEvaluation evaluate_library(std::span<const std::string> candidates, const DesignSpace& space,
                                   const FoldingEngine& engine, const CheckConfig& config, unsigned workers = 1);

void write_length_histogram_csv(std::ostream& out, const LibraryReport& r);
void write_gc_histogram_csv(std::ostream& out, const LibraryReport& r);


}  // namespace ribodesign
