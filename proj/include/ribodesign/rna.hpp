#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace ribodesign {

inline constexpr char kMask = '?';
inline constexpr std::string_view kNucleotides = "ACGU";

bool is_nucleotide(char c) noexcept;
bool is_structure_symbol(char c) noexcept;

/// Returns true for Watson-Crick and G-U wobble pairs.
bool can_pair(char a, char b) noexcept;

/// Watson-Crick complement (A<->U, C<->G).
char complement(char c) noexcept;

std::string reverse_complement(std::string_view seq);

/// Non-empty RNA string over {A, C, G, U}.
class Sequence {
public:
    explicit Sequence(std::string residues);

    const std::string& str() const noexcept { return residues_; }
    std::size_t size() const noexcept { return residues_.size(); }
    char operator[](std::size_t i) const { return residues_[i]; }

    friend bool operator==(const Sequence&, const Sequence&) = default;

private:
    std::string residues_;
};

/// Symmetric partner map of a nested secondary structure.
class PairTable {
public:
    PairTable() = default;
    explicit PairTable(std::vector<std::optional<std::size_t>> partner);

    std::size_t size() const noexcept { return partner_.size(); }
    std::optional<std::size_t> partner(std::size_t i) const { return partner_[i]; }
    bool paired(std::size_t i) const { return partner_[i].has_value(); }

    /// Pairs (i, j) with i < j, ordered by i.
    std::vector<std::pair<std::size_t, std::size_t>> pairs() const;
    std::size_t pair_count() const;

private:
    std::vector<std::optional<std::size_t>> partner_;
};

/// Pseudoknot-free dot-bracket structure.
class Structure {
public:
    /// Validates symbols and bracket balance.
    explicit Structure(std::string symbols);

    /// Builds dot-bracket text from nested pairs; throws on crossing pairs.
    static Structure from_pairs(std::size_t length,
                                const std::vector<std::pair<std::size_t, std::size_t>>& pairs);

    const std::string& str() const noexcept { return symbols_; }
    std::size_t size() const noexcept { return symbols_.size(); }
    char operator[](std::size_t i) const { return symbols_[i]; }
    const PairTable& pair_table() const noexcept { return table_; }

    friend bool operator==(const Structure& a, const Structure& b) { return a.symbols_ == b.symbols_; }

private:
    std::string symbols_;
    PairTable table_;
};

/// Parses a dot-bracket string. Errors: EmptyInput, IllegalSymbol, UnbalancedStructure.
Structure parse_dot_bracket(std::string_view text);

double gc_content(const Sequence& seq);
double gc_content(std::string_view seq);

struct HammingCount {
    std::size_t mismatches = 0;
    std::size_t constrained = 0;

    friend bool operator==(const HammingCount&, const HammingCount&) = default;
};

/// Positionwise comparison of a folded structure against a masked target;
/// '?' positions in the target are ignored.
HammingCount constrained_hamming(std::string_view folded, std::string_view target_constraint);
HammingCount constrained_hamming(const Structure& folded, std::string_view target_constraint);

}  // namespace ribodesign
