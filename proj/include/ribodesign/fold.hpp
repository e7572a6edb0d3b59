#pragma once

#include <cstddef>
#include <memory>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "ribodesign/rna.hpp"

namespace ribodesign {

class FoldCache;

/// Secondary-structure oracle. The internal engine is a base-pair maximising
/// dynamic program; the external engine pipes the sequence to a user command.
/// Copies share one bounded LRU cache.
class FoldingEngine {
public:
    enum class Kind { InternalNussinov, ExternalCommand };

    static constexpr std::size_t kDefaultCacheCapacity = 50000;

    static FoldingEngine internal(std::size_t min_hairpin_loop = 3,
                                  std::size_t cache_capacity = kDefaultCacheCapacity);
    static FoldingEngine external(std::string command, std::size_t cache_capacity = kDefaultCacheCapacity);

    /// Accepts "internal" or "external:<shell command>".
    static FoldingEngine from_spec(std::string_view spec);

    Kind kind() const noexcept { return kind_; }
    std::size_t min_hairpin_loop() const noexcept { return min_hairpin_loop_; }
    const std::string& command() const noexcept { return command_; }
    std::string describe() const;

    Structure fold(const Sequence& seq) const;
    Structure fold(std::string_view seq) const;

    std::size_t cache_hits() const;
    std::size_t cache_misses() const;

private:
    FoldingEngine(Kind kind, std::size_t min_loop, std::string command, std::size_t cache_capacity);

    Structure fold_uncached(const std::string& seq) const;

    Kind kind_;
    std::size_t min_hairpin_loop_;
    std::string command_;
    std::shared_ptr<FoldCache> cache_;
};

/// Maximum-cardinality nested folding with {AU, GC, GU} pairs and hairpin
/// loops of at least `min_loop` unpaired bases. Among optimal structures the
/// traceback pairs the 3' end of an interval with its leftmost feasible partner.
Structure nussinov_fold(std::string_view seq, std::size_t min_loop = 3);

/// Maximum pair count only.
std::size_t nussinov_max_pairs(std::string_view seq, std::size_t min_loop = 3);

struct CotranscriptionalTrace {
    std::vector<std::size_t> prefix_lengths;
    std::vector<Structure> prefix_structures;
};

/// Prefix lengths speed, 2*speed, ... and always the full length last.
std::vector<std::size_t> elongation_schedule(std::size_t length, std::size_t speed);

CotranscriptionalTrace cotranscriptional_fold(const FoldingEngine& engine, const Sequence& seq,
                                              std::size_t speed);

struct BruteForceResult {
    std::size_t max_pairs = 0;
    std::set<std::string> all_optimal;
};

inline constexpr std::size_t kBruteForceMaxLength = 20;

/// Exhaustive enumeration of nested pairings; test oracle for the DP.
BruteForceResult brute_force_fold(const Sequence& seq, std::size_t min_loop = 3);

/// Runs `command` through /bin/sh, feeding `input` on stdin. Returns stdout.
/// Throws ExternalFolderFailure on spawn failure or nonzero exit.
std::string run_command(const std::string& command, const std::string& input);

/// Extracts a dot-bracket of `length` from the first token of line 1 or 2.
std::string parse_folder_output(std::string_view output, std::size_t length);

}  // namespace ribodesign
