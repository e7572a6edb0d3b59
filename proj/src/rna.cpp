#include "ribodesign/rna.hpp"

#include <algorithm>

#include "ribodesign/error.hpp"

namespace ribodesign {

std::string_view to_string(ErrorCode code) {
    switch (code) {
        case ErrorCode::IllegalSymbol: return "IllegalSymbol";
        case ErrorCode::UnbalancedStructure: return "UnbalancedStructure";
        case ErrorCode::LengthMismatch: return "LengthMismatch";
        case ErrorCode::EmptyInput: return "EmptyInput";
        case ErrorCode::TooLong: return "TooLong";
        case ErrorCode::ExternalFolderFailure: return "ExternalFolderFailure";
        case ErrorCode::MisalignedTemplates: return "MisalignedTemplates";
        case ErrorCode::ExtensionSiteMismatch: return "ExtensionSiteMismatch";
        case ErrorCode::BadLengthRange: return "BadLengthRange";
        case ErrorCode::IllegalToken: return "IllegalToken";
        case ErrorCode::CorpusTooSmall: return "CorpusTooSmall";
        case ErrorCode::IllegalPairAction: return "IllegalPairAction";
        case ErrorCode::EpisodeDone: return "EpisodeDone";
        case ErrorCode::EpisodeNotDone: return "EpisodeNotDone";
        case ErrorCode::ShapeMismatch: return "ShapeMismatch";
        case ErrorCode::AnchorNotFound: return "AnchorNotFound";
        case ErrorCode::InvalidConfig: return "InvalidConfig";
        case ErrorCode::Io: return "Io";
    }
    return "Unknown";
}

bool is_nucleotide(char c) noexcept {
    return c == 'A' || c == 'C' || c == 'G' || c == 'U';
}

bool is_structure_symbol(char c) noexcept {
    return c == '.' || c == '(' || c == ')';
}

bool can_pair(char a, char b) noexcept {
    switch (a) {
        case 'A': return b == 'U';
        case 'U': return b == 'A' || b == 'G';
        case 'G': return b == 'C' || b == 'U';
        case 'C': return b == 'G';
        default: return false;
    }
}

char complement(char c) noexcept {
    switch (c) {
        case 'A': return 'U';
        case 'U': return 'A';
        case 'G': return 'C';
        case 'C': return 'G';
        default: return c;
    }
}

std::string reverse_complement(std::string_view seq) {
    std::string out(seq.rbegin(), seq.rend());
    std::transform(out.begin(), out.end(), out.begin(), complement);
    return out;
}

Sequence::Sequence(std::string residues) : residues_(std::move(residues)) {
    if (residues_.empty()) throw Error(ErrorCode::EmptyInput, "sequence must not be empty");
    for (std::size_t i = 0; i < residues_.size(); ++i) {
        if (!is_nucleotide(residues_[i])) {
            throw Error(ErrorCode::IllegalSymbol,
                        "invalid residue '" + std::string(1, residues_[i]) + "' at " + std::to_string(i));
        }
    }
}

PairTable::PairTable(std::vector<std::optional<std::size_t>> partner) : partner_(std::move(partner)) {}

std::vector<std::pair<std::size_t, std::size_t>> PairTable::pairs() const {
    std::vector<std::pair<std::size_t, std::size_t>> out;
    for (std::size_t i = 0; i < partner_.size(); ++i) {
        if (partner_[i] && *partner_[i] > i) out.emplace_back(i, *partner_[i]);
    }
    return out;
}

std::size_t PairTable::pair_count() const {
    return static_cast<std::size_t>(std::count_if(partner_.begin(), partner_.end(),
                                                  [](const auto& p) { return p.has_value(); })) / 2;
}

namespace {

PairTable match_brackets(std::string_view text) {
    std::vector<std::optional<std::size_t>> partner(text.size());
    std::vector<std::size_t> open;
    for (std::size_t i = 0; i < text.size(); ++i) {
        const char c = text[i];
        if (c == '(') {
            open.push_back(i);
        } else if (c == ')') {
            if (open.empty()) {
                throw Error(ErrorCode::UnbalancedStructure, "unmatched ')' at " + std::to_string(i));
            }
            partner[i] = open.back();
            partner[open.back()] = i;
            open.pop_back();
        } else if (c != '.') {
            throw Error(ErrorCode::IllegalSymbol,
                        "invalid structure symbol '" + std::string(1, c) + "' at " + std::to_string(i));
        }
    }
    if (!open.empty()) {
        throw Error(ErrorCode::UnbalancedStructure, "unmatched '(' at " + std::to_string(open.back()));
    }
    return PairTable(std::move(partner));
}

}  // namespace

Structure::Structure(std::string symbols) : symbols_(std::move(symbols)), table_(match_brackets(symbols_)) {
    if (symbols_.empty()) throw Error(ErrorCode::EmptyInput, "structure must not be empty");
}

Structure Structure::from_pairs(std::size_t length,
                                const std::vector<std::pair<std::size_t, std::size_t>>& pairs) {
    std::string text(length, '.');
    for (auto [i, j] : pairs) {
        if (i >= j || j >= length || text[i] != '.' || text[j] != '.') {
            throw Error(ErrorCode::UnbalancedStructure, "invalid pair list");
        }
        text[i] = '(';
        text[j] = ')';
    }
    Structure s(std::move(text));
    // Crossing pairs produce balanced text with different partners.
    if (s.pair_table().pair_count() != pairs.size()) {
        throw Error(ErrorCode::UnbalancedStructure, "pair list is not nested");
    }
    for (auto [i, j] : pairs) {
        if (s.pair_table().partner(i) != j) throw Error(ErrorCode::UnbalancedStructure, "pair list is not nested");
    }
    return s;
}

Structure parse_dot_bracket(std::string_view text) {
    if (text.empty()) throw Error(ErrorCode::EmptyInput, "empty dot-bracket string");
    return Structure(std::string(text));
}

double gc_content(std::string_view seq) {
    if (seq.empty()) return 0.0;
    const auto gc = std::count_if(seq.begin(), seq.end(), [](char c) { return c == 'G' || c == 'C'; });
    return static_cast<double>(gc) / static_cast<double>(seq.size());
}

double gc_content(const Sequence& seq) { return gc_content(std::string_view(seq.str())); }

HammingCount constrained_hamming(std::string_view folded, std::string_view target_constraint) {
    if (folded.size() != target_constraint.size()) {
        throw Error(ErrorCode::LengthMismatch, "folded length " + std::to_string(folded.size()) +
                                                   " vs target length " + std::to_string(target_constraint.size()));
    }
    HammingCount out;
    for (std::size_t i = 0; i < folded.size(); ++i) {
        if (target_constraint[i] == kMask) continue;
        ++out.constrained;
        if (folded[i] != target_constraint[i]) ++out.mismatches;
    }
    return out;
}

HammingCount constrained_hamming(const Structure& folded, std::string_view target_constraint) {
    return constrained_hamming(std::string_view(folded.str()), target_constraint);
}

}  // namespace ribodesign
