#include "ribodesign/ribo_eval.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "ribodesign/error.hpp"

namespace ribodesign {

RiboswitchLayout layout_from_space(const DesignSpace& space) {
    space.validate();
    const std::string& t = space.sequence_template;
    std::size_t a = 0;
    while (a < t.size() && is_nucleotide(t[a])) ++a;
    std::size_t u = t.size();
    while (u > a && is_nucleotide(t[u - 1])) --u;

    RiboswitchLayout layout;
    layout.aptamer = t.substr(0, a);
    layout.u_stretch = t.substr(u);
    std::size_t p = a;
    while (p < u && !is_nucleotide(t[p])) {
        if (t[p] == kMask) ++layout.min_spacer;
        ++p;
    }
    std::size_t q = p;
    while (q < u && is_nucleotide(t[q])) ++q;
    layout.anchor = t.substr(p, q - p);
    if (layout.aptamer.empty() || layout.anchor.empty() || layout.u_stretch.empty()) {
        throw Error(ErrorCode::InvalidConfig, "space has no literal aptamer, anchor and terminal stretch");
    }
    return layout;
}

RegionMap infer_regions(std::string_view candidate, const RiboswitchLayout& layout) {
    const std::size_t n = candidate.size();
    const std::size_t a = layout.aptamer.size();
    const std::size_t u = layout.u_stretch.size();
    if (n < a + layout.min_spacer + layout.anchor.size() + u || !candidate.starts_with(layout.aptamer) ||
        !candidate.ends_with(layout.u_stretch)) {
        throw Error(ErrorCode::AnchorNotFound, "candidate does not follow the riboswitch layout");
    }
    const std::size_t anchor = candidate.find(layout.anchor, a + layout.min_spacer);
    if (anchor == std::string_view::npos || anchor + layout.anchor.size() > n - u) {
        throw Error(ErrorCode::AnchorNotFound, "complementary anchor '" + layout.anchor + "' not found");
    }
    return RegionMap{{0, a}, {a, anchor}, {anchor, n - u}, {n - u, n}};
}

RegionMap infer_regions(std::string_view candidate, const DesignSpace& space) {
    return infer_regions(candidate, layout_from_space(space));
}

nlohmann::json to_json(const Verdict& v) {
    nlohmann::json j{{"aptamer_hairpin", v.aptamer_hairpin},
                     {"terminator_hairpin", v.terminator_hairpin},
                     {"hairpins_ok", v.hairpins_ok},
                     {"u_stretch_ok", v.u_stretch_ok},
                     {"cotranscription_ok", v.cotranscription_ok},
                     {"valid", v.valid}};
    j["gc_ok"] = v.gc_ok ? nlohmann::json(*v.gc_ok) : nlohmann::json(nullptr);
    return j;
}

bool is_hairpin_closing(const PairTable& table, std::size_t i) {
    const auto j = table.partner(i);
    if (!j || *j <= i) return false;
    for (std::size_t k = i + 1; k < *j; ++k) {
        if (table.paired(k)) return false;
    }
    return true;
}

namespace {

bool aptamer_spacer_contact(const Structure& s, const RegionMap& regions) {
    const PairTable table = s.pair_table();
    for (auto [i, j] : table.pairs()) {
        if (regions.aptamer.contains(i) && regions.spacer.contains(j)) return true;
    }
    return false;
}

}  // namespace

Verdict check_structure(std::string_view sequence, const Structure& full, std::span<const Structure> prefixes,
                        const RegionMap& regions, const CheckConfig& config) {
    if (full.size() != regions.length() || sequence.size() != regions.length()) {
        throw Error(ErrorCode::LengthMismatch, "structure length does not match the region map");
    }
    const PairTable table = full.pair_table();
    Verdict v;

    std::size_t stem = 0;
    for (auto [i, j] : table.pairs()) {
        if (regions.aptamer.contains(i) && regions.aptamer.contains(j) && is_hairpin_closing(table, i)) {
            v.aptamer_hairpin = true;
        }
        if (regions.aptamer.contains(i) && regions.complementary.contains(j)) ++stem;
    }
    v.terminator_hairpin = stem >= std::max<std::size_t>(config.min_terminator_stem, 1);
    v.hairpins_ok = v.aptamer_hairpin && v.terminator_hairpin;

    const std::size_t tail = std::min(config.unpaired_tail, regions.u_stretch.size());
    v.u_stretch_ok = true;
    for (std::size_t k = regions.length() - tail; k < regions.length(); ++k) {
        if (table.paired(k)) v.u_stretch_ok = false;
    }

    v.cotranscription_ok = !aptamer_spacer_contact(full, regions);
    for (const Structure& p : prefixes) {
        if (aptamer_spacer_contact(p, regions)) v.cotranscription_ok = false;
    }

    if (config.gc) v.gc_ok = std::abs(gc_content(sequence) - config.gc->target) <= config.gc->tolerance;
    v.valid = v.hairpins_ok && v.u_stretch_ok && v.cotranscription_ok && v.gc_ok.value_or(true);
    return v;
}

CandidateCheck check_candidate(const Sequence& candidate, const RegionMap& regions, const FoldingEngine& engine,
                               const CheckConfig& config) {
    if (config.speed < 1) throw Error(ErrorCode::InvalidConfig, "elongation speed must be >= 1");
    const CotranscriptionalTrace trace =
        cotranscriptional_fold(engine, candidate, static_cast<std::size_t>(config.speed));
    const Structure& full = trace.prefix_structures.back();
    CandidateCheck c;
    c.structure = full.str();
    c.verdict = check_structure(candidate.str(), full, trace.prefix_structures, regions, config);
    return c;
}

std::vector<std::string> baseline_generate(std::size_t n, const RiboswitchLayout& layout, Rng& rng,
                                           const BaselineConfig& config) {
    if (config.min_spacer > config.max_spacer || config.min_complementary > config.max_complementary ||
        config.max_complementary > layout.aptamer.size()) {
        throw Error(ErrorCode::InvalidConfig, "bad baseline length ranges");
    }
    std::vector<std::string> out;
    out.reserve(n);
    for (std::size_t k = 0; k < n; ++k) {
        std::string c = layout.aptamer;
        const auto spacer = uniform_int(rng, config.min_spacer, config.max_spacer);
        for (std::size_t i = 0; i < spacer; ++i) c.push_back(kNucleotides[uniform_int<std::size_t>(rng, 0, 3)]);
        const auto comp = uniform_int(rng, config.min_complementary, config.max_complementary);
        c += reverse_complement(std::string_view(layout.aptamer).substr(layout.aptamer.size() - comp));
        c += layout.u_stretch;
        out.push_back(std::move(c));
    }
    return out;
}

std::optional<double> space_structure_loss(std::string_view sequence, std::string_view folded,
                                           const DesignSpace& space) {
    if (sequence.size() != folded.size()) throw Error(ErrorCode::LengthMismatch, "sequence/structure length mismatch");
    const std::size_t core = space.core_length();
    if (sequence.size() < core || sequence.size() < space.min_length || sequence.size() > space.max_length) {
        return std::nullopt;
    }
    std::optional<double> best;
    for (const auto& comp : all_compositions(sequence.size() - core, space.extension_sites())) {
        const Task t = expand(space, comp);
        bool consistent = true;
        for (std::size_t i = 0; i < sequence.size() && consistent; ++i) {
            const char c = t.sequence_constraint[i];
            consistent = c == kMask || c == sequence[i];
        }
        if (!consistent) continue;
        const HammingCount h = constrained_hamming(folded, t.structure_constraint);
        const double loss =
            static_cast<double>(h.mismatches) / static_cast<double>(std::max<std::size_t>(h.constrained, 1));
        if (!best || loss < *best) best = loss;
    }
    return best;
}

nlohmann::json to_json(const LibraryReport& r) {
    nlohmann::json lengths = nlohmann::json::object();
    for (auto [len, count] : r.length_histogram) lengths[std::to_string(len)] = count;
    nlohmann::json gc = nlohmann::json::object();
    for (auto [bin, count] : r.gc_histogram) gc[std::to_string(bin)] = count;
    return {{"total", r.total},
            {"unique_sequences", r.unique_sequences},
            {"valid", r.valid},
            {"valid_fraction", r.valid_fraction},
            {"unique_valid_structures", r.unique_valid_structures},
            {"length_histogram", lengths},
            {"gc_histogram_percent", gc}};
}

nlohmann::json to_json(const CandidateRecord& r) {
    nlohmann::json j{{"sequence", r.sequence}, {"structure", r.structure}, {"verdict", to_json(r.verdict)}};
    if (r.regions) {
        auto range = [](const IndexRange& x) { return nlohmann::json::array({x.begin, x.end}); };
        j["regions"] = {{"aptamer", range(r.regions->aptamer)},
                        {"spacer", range(r.regions->spacer)},
                        {"complementary", range(r.regions->complementary)},
                        {"u_stretch", range(r.regions->u_stretch)}};
    } else {
        j["regions"] = nullptr;
    }
    j["losses"] = {{"structure_loss", r.structure_loss ? nlohmann::json(*r.structure_loss) : nlohmann::json(nullptr)},
                   {"gc", gc_content(r.sequence)}};
    return j;
}

LibraryEvaluation evaluate_library(std::span<const std::string> candidates, const DesignSpace& space,
                                   const FoldingEngine& engine, const CheckConfig& config, unsigned workers) {
    const RiboswitchLayout layout = layout_from_space(space);
    const std::set<std::string> unique(candidates.begin(), candidates.end());

    LibraryEvaluation eval;
    eval.records.resize(unique.size());
    std::size_t k = 0;
    for (const auto& s : unique) eval.records[k++].sequence = s;

    parallel_for(eval.records.size(), workers, [&](std::size_t i) {
        CandidateRecord& rec = eval.records[i];
        const Sequence seq(rec.sequence);
        try {
            rec.regions = infer_regions(rec.sequence, layout);
        } catch (const Error& e) {
            if (e.code() != ErrorCode::AnchorNotFound) throw;
        }
        if (rec.regions) {
            CandidateCheck c = check_candidate(seq, *rec.regions, engine, config);
            rec.structure = std::move(c.structure);
            rec.verdict = c.verdict;
        } else {
            rec.structure = engine.fold(seq).str();
            if (config.gc) rec.verdict.gc_ok = std::abs(gc_content(rec.sequence) - config.gc->target) <= config.gc->tolerance;
        }
        rec.structure_loss = space_structure_loss(rec.sequence, rec.structure, space);
    });

    LibraryReport& r = eval.report;
    r.total = candidates.size();
    r.unique_sequences = eval.records.size();
    std::set<std::string> valid_structures;
    for (const auto& rec : eval.records) {
        if (rec.verdict.valid) {
            ++r.valid;
            valid_structures.insert(rec.structure);
        }
        ++r.length_histogram[rec.sequence.size()];
        ++r.gc_histogram[static_cast<int>(std::floor(gc_content(rec.sequence) * 100.0 + 1e-9))];
    }
    r.unique_valid_structures = valid_structures.size();
    r.valid_fraction = r.unique_sequences ? static_cast<double>(r.valid) / static_cast<double>(r.unique_sequences) : 0.0;
    return eval;
}

void write_length_histogram_csv(std::ostream& out, const LibraryReport& r) {
    out << "length,count\n";
    for (auto [len, count] : r.length_histogram) out << len << ',' << count << '\n';
}

void write_gc_histogram_csv(std::ostream& out, const LibraryReport& r) {
    out << "gc_percent,count\n";
    for (auto [bin, count] : r.gc_histogram) out << bin << ',' << count << '\n';
}

}  // namespace ribodesign
