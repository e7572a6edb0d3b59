#include "ribodesign/design_space.hpp"

#include <algorithm>
#include <fstream>
#include <numeric>
#include <set>
#include <sstream>
#include <unordered_set>

#include "ribodesign/error.hpp"

namespace ribodesign {

namespace {

std::string trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r\n");
    return std::string(s.substr(b, e - b + 1));
}

std::size_t parse_count(const std::string& text, std::string_view what) {
    std::size_t pos = 0;
    unsigned long long value = 0;
    try {
        value = std::stoull(text, &pos);
    } catch (const std::exception&) {
        pos = 0;
    }
    if (pos == 0 || pos != text.size() || text.front() == '-') {
        throw Error(ErrorCode::BadLengthRange, "invalid " + std::string(what) + " '" + text + "'");
    }
    return static_cast<std::size_t>(value);
}

double parse_fraction(const std::string& text, std::string_view key) {
    std::size_t pos = 0;
    double value = 0.0;
    try {
        value = std::stod(text, &pos);
    } catch (const std::exception&) {
        pos = 0;
    }
    if (pos == 0 || pos != text.size() || value < 0.0 || value > 1.0) {
        throw Error(ErrorCode::IllegalToken, std::string(key) + " must be a fraction in [0,1], got '" + text + "'");
    }
    return value;
}

std::vector<IndexPair> parse_pairs(const std::string& text) {
    std::vector<IndexPair> out;
    std::string item;
    std::istringstream in(text);
    while (std::getline(in, item, ',')) {
        std::istringstream words(item);
        std::string word;
        while (words >> word) {
            const auto dash = word.find('-');
            if (dash == std::string::npos) throw Error(ErrorCode::IllegalToken, "pair '" + word + "' must be i-j");
            out.emplace_back(parse_count(word.substr(0, dash), "pair index"),
                             parse_count(word.substr(dash + 1), "pair index"));
        }
    }
    return out;
}

void check_pair_symbols(std::string_view structure, const std::vector<IndexPair>& pairs) {
    for (auto [i, j] : pairs) {
        if (i >= j || j >= structure.size()) {
            throw Error(ErrorCode::InvalidConfig,
                        "explicit pair " + std::to_string(i) + "-" + std::to_string(j) + " out of order or range");
        }
        const bool open_ok = structure[i] == '(' || structure[i] == kMask;
        const bool close_ok = structure[j] == ')' || structure[j] == kMask;
        if (!open_ok || !close_ok) {
            throw Error(ErrorCode::InvalidConfig, "explicit pair " + std::to_string(i) + "-" + std::to_string(j) +
                                                      " conflicts with the structure constraint");
        }
    }
}

}  // namespace

// ---------------------------------------------------------------------------
// Task

std::size_t Task::masked_sequence_positions() const {
    return static_cast<std::size_t>(std::count(sequence_constraint.begin(), sequence_constraint.end(), kMask));
}

void Task::validate() const {
    if (sequence_constraint.size() != structure_constraint.size()) {
        throw Error(ErrorCode::LengthMismatch, "sequence and structure constraints differ in length");
    }
    if (sequence_constraint.empty()) throw Error(ErrorCode::EmptyInput, "empty task");
    for (char c : sequence_constraint) {
        if (c != kMask && !is_nucleotide(c)) {
            throw Error(ErrorCode::IllegalSymbol, "invalid sequence constraint symbol '" + std::string(1, c) + "'");
        }
    }
    for (char c : structure_constraint) {
        if (c != kMask && !is_structure_symbol(c)) {
            throw Error(ErrorCode::IllegalSymbol, "invalid structure constraint symbol '" + std::string(1, c) + "'");
        }
    }
    check_pair_symbols(structure_constraint, explicit_pairs);
}

nlohmann::json to_json(const Task& task) {
    nlohmann::json j;
    j["sequence"] = task.sequence_constraint;
    j["structure"] = task.structure_constraint;
    j["pairs"] = nlohmann::json::array();
    for (auto [a, b] : task.explicit_pairs) j["pairs"].push_back({a, b});
    j["gc"] = task.gc_target ? nlohmann::json(*task.gc_target) : nlohmann::json(nullptr);
    return j;
}

Task task_from_json(const nlohmann::json& j) {
    Task t;
    t.sequence_constraint = j.at("sequence").get<std::string>();
    t.structure_constraint = j.at("structure").get<std::string>();
    if (j.contains("pairs")) {
        for (const auto& p : j.at("pairs")) t.explicit_pairs.emplace_back(p.at(0).get<std::size_t>(), p.at(1).get<std::size_t>());
    }
    if (j.contains("gc") && !j.at("gc").is_null()) t.gc_target = j.at("gc").get<double>();
    t.validate();
    return t;
}

// ---------------------------------------------------------------------------
// DesignSpace

std::size_t DesignSpace::core_length() const {
    return sequence_template.size() -
           static_cast<std::size_t>(std::count(sequence_template.begin(), sequence_template.end(), kExtensionSite));
}

std::size_t DesignSpace::extension_sites() const {
    return static_cast<std::size_t>(std::count(sequence_template.begin(), sequence_template.end(), kExtensionSite));
}

namespace {

std::vector<std::size_t> offsets_of_sites(std::string_view tmpl) {
    std::vector<std::size_t> out;
    std::size_t core = 0;
    for (char c : tmpl) {
        if (c == kExtensionSite) {
            out.push_back(core);
        } else {
            ++core;
        }
    }
    return out;
}

std::string strip_sites(std::string_view tmpl) {
    std::string out;
    for (char c : tmpl) {
        if (c != kExtensionSite) out.push_back(c);
    }
    return out;
}

}  // namespace

std::vector<std::size_t> DesignSpace::site_offsets() const { return offsets_of_sites(sequence_template); }

void DesignSpace::validate() const {
    for (char c : sequence_template) {
        if (c != kMask && c != kExtensionSite && !is_nucleotide(c)) {
            throw Error(ErrorCode::IllegalToken, "illegal sequence template token '" + std::string(1, c) + "'");
        }
    }
    for (char c : structure_template) {
        if (c != kMask && c != kExtensionSite && !is_structure_symbol(c)) {
            throw Error(ErrorCode::IllegalToken, "illegal structure template token '" + std::string(1, c) + "'");
        }
    }
    const auto seq_sites = offsets_of_sites(sequence_template);
    const auto struct_sites = offsets_of_sites(structure_template);
    if (seq_sites.size() != struct_sites.size()) {
        throw Error(ErrorCode::ExtensionSiteMismatch, "sequence has " + std::to_string(seq_sites.size()) +
                                                          " extension sites, structure has " +
                                                          std::to_string(struct_sites.size()));
    }
    const std::size_t core = core_length();
    if (core != strip_sites(structure_template).size()) {
        throw Error(ErrorCode::MisalignedTemplates, "sequence core length " + std::to_string(core) +
                                                        " differs from structure core length " +
                                                        std::to_string(strip_sites(structure_template).size()));
    }
    if (seq_sites != struct_sites) {
        throw Error(ErrorCode::MisalignedTemplates, "extension sites are not at aligned positions");
    }
    if (core == 0) throw Error(ErrorCode::MisalignedTemplates, "empty design space");
    if (min_length < core || max_length < min_length) {
        throw Error(ErrorCode::BadLengthRange, "length range " + std::to_string(min_length) + ".." +
                                                   std::to_string(max_length) + " incompatible with core length " +
                                                   std::to_string(core));
    }
    if (seq_sites.empty() && max_length != core) {
        throw Error(ErrorCode::BadLengthRange, "a space without extension sites has fixed length " +
                                                   std::to_string(core));
    }
    if (gc_target && (*gc_target < 0.0 || *gc_target > 1.0)) {
        throw Error(ErrorCode::IllegalToken, "gc_target must lie in [0,1]");
    }
    check_pair_symbols(strip_sites(structure_template), explicit_pairs);
}

DesignSpace parse_design_space(std::string_view text) {
    DesignSpace space;
    bool have_seq = false;
    bool have_struct = false;
    bool have_length = false;
    std::istringstream in{std::string(text)};
    std::string line;
    while (std::getline(in, line)) {
        const std::string stripped = trim(line);
        if (stripped.empty() || stripped.front() == '#') continue;
        const auto colon = stripped.find(':');
        if (colon == std::string::npos) throw Error(ErrorCode::IllegalToken, "expected 'key: value', got '" + stripped + "'");
        const std::string key = trim(std::string_view(stripped).substr(0, colon));
        const std::string value = trim(std::string_view(stripped).substr(colon + 1));
        if (key == "sequence") {
            space.sequence_template = value;
            have_seq = true;
        } else if (key == "structure") {
            space.structure_template = value;
            have_struct = true;
        } else if (key == "length") {
            const auto dots = value.find("..");
            if (dots == std::string::npos) throw Error(ErrorCode::BadLengthRange, "length must be MIN..MAX");
            space.min_length = parse_count(trim(value.substr(0, dots)), "minimum length");
            space.max_length = parse_count(trim(value.substr(dots + 2)), "maximum length");
            have_length = true;
        } else if (key == "gc_target") {
            space.gc_target = parse_fraction(value, key);
        } else if (key == "gc_tolerance") {
            space.gc_tolerance = parse_fraction(value, key);
        } else if (key == "pairs") {
            space.explicit_pairs = parse_pairs(value);
        } else {
            throw Error(ErrorCode::IllegalToken, "unknown key '" + key + "'");
        }
    }
    if (!have_seq || !have_struct || !have_length) {
        throw Error(ErrorCode::IllegalToken, "design space needs sequence, structure and length entries");
    }
    space.validate();
    return space;
}

DesignSpace load_design_space(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::Io, "cannot open design space '" + path + "'");
    std::stringstream buf;
    buf << in.rdbuf();
    return parse_design_space(buf.str());
}

std::string render_design_space(const DesignSpace& space) {
    std::ostringstream out;
    out << "sequence: " << space.sequence_template << '\n';
    out << "structure: " << space.structure_template << '\n';
    out << "length: " << space.min_length << ".." << space.max_length << '\n';
    if (space.gc_target) out << "gc_target: " << *space.gc_target << '\n';
    out << "gc_tolerance: " << space.gc_tolerance << '\n';
    if (!space.explicit_pairs.empty()) {
        out << "pairs:";
        for (std::size_t k = 0; k < space.explicit_pairs.size(); ++k) {
            out << (k ? ", " : " ") << space.explicit_pairs[k].first << '-' << space.explicit_pairs[k].second;
        }
        out << '\n';
    }
    return out.str();
}

DesignSpace riboswitch_design_space() {
    return parse_design_space(
        "sequence: AAGUGAUACCAGCAUCGUCUUGAUGCCCUUGGCAGCACUUCA*??????*UGAAGUGCUG*UUUUUUUU\n"
        "structure: ........???(((((.....)))))...???((((((((((*??....*))))))))))*?.......\n"
        "length: 66..91\n");
}

Task expand(const DesignSpace& space, const std::vector<std::size_t>& extension_lengths) {
    if (extension_lengths.size() != space.extension_sites()) {
        throw Error(ErrorCode::ExtensionSiteMismatch, "wrong number of extension lengths");
    }
    auto expand_one = [&](std::string_view tmpl) {
        std::string out;
        std::size_t site = 0;
        for (char c : tmpl) {
            if (c == kExtensionSite) {
                out.append(extension_lengths[site++], kMask);
            } else {
                out.push_back(c);
            }
        }
        return out;
    };
    Task t;
    t.sequence_constraint = expand_one(space.sequence_template);
    t.structure_constraint = expand_one(space.structure_template);
    t.gc_target = space.gc_target;

    // Map core indices to expanded indices.
    const auto offsets = space.site_offsets();
    auto shift = [&](std::size_t core_index) {
        std::size_t extra = 0;
        for (std::size_t s = 0; s < offsets.size(); ++s) {
            if (offsets[s] <= core_index) extra += extension_lengths[s];
        }
        return core_index + extra;
    };
    for (auto [i, j] : space.explicit_pairs) t.explicit_pairs.emplace_back(shift(i), shift(j));
    return t;
}

Task sample_task(const DesignSpace& space, Rng& rng) {
    const std::size_t sites = space.extension_sites();
    const std::size_t core = space.core_length();
    if (sites == 0) return expand(space, {});
    const std::size_t total = uniform_int<std::size_t>(rng, space.min_length, space.max_length);
    const std::size_t extra = total - core;

    // Stars and bars: choosing sites-1 bar slots among extra+sites-1 uniformly
    // gives a uniform weak composition.
    std::vector<std::size_t> slots(extra + sites - 1);
    std::iota(slots.begin(), slots.end(), std::size_t{0});
    std::vector<std::size_t> bars;
    bars.reserve(sites - 1);
    std::sample(slots.begin(), slots.end(), std::back_inserter(bars), static_cast<std::ptrdiff_t>(sites - 1), rng);
    std::vector<std::size_t> lengths;
    lengths.reserve(sites);
    std::size_t prev = 0;
    for (std::size_t b : bars) {
        lengths.push_back(b - prev);
        prev = b + 1;
    }
    lengths.push_back(extra + sites - 1 - prev);
    return expand(space, lengths);
}

std::vector<std::vector<std::size_t>> all_compositions(std::size_t total, std::size_t sites) {
    std::vector<std::vector<std::size_t>> out;
    if (sites == 0) {
        if (total == 0) out.emplace_back();
        return out;
    }
    std::vector<std::size_t> current(sites, 0);
    auto rec = [&](auto&& self, std::size_t site, std::size_t remaining) -> void {
        if (site + 1 == sites) {
            current[site] = remaining;
            out.push_back(current);
            return;
        }
        for (std::size_t k = 0; k <= remaining; ++k) {
            current[site] = k;
            self(self, site + 1, remaining - k);
        }
    };
    rec(rec, 0, total);
    return out;
}

// ---------------------------------------------------------------------------
// Masking

void MaskingPolicy::validate() const {
    const bool ok = max_structure_parts >= 1 && max_part_fraction > 0.0 && max_part_fraction <= 1.0 &&
                    sequence_random_mask_fraction >= 0.0 && inverse_folding_fraction >= 0.0 &&
                    sequence_random_mask_fraction + inverse_folding_fraction <= 1.0;
    if (!ok) throw Error(ErrorCode::InvalidConfig, "masking policy fractions out of range");
}

std::string_view to_string(TaskFamily family) {
    switch (family) {
        case TaskFamily::InverseFolding: return "inverse_folding";
        case TaskFamily::Alternating: return "alternating";
        case TaskFamily::RandomMasking: return "random_masking";
    }
    return "unknown";
}

std::vector<IndexPair> masked_runs(std::string_view constraint) {
    std::vector<IndexPair> runs;
    std::size_t i = 0;
    while (i < constraint.size()) {
        if (constraint[i] != kMask) {
            ++i;
            continue;
        }
        std::size_t j = i;
        while (j < constraint.size() && constraint[j] == kMask) ++j;
        runs.emplace_back(i, j);
        i = j;
    }
    return runs;
}

namespace {

// Places up to `parts` masked runs that neither overlap nor touch, so every
// maximal '?' run is one sampled part. A part that cannot be placed after a
// bounded number of redraws is dropped.
std::vector<IndexPair> place_structure_runs(std::size_t length, const MaskingPolicy& policy, Rng& rng) {
    const std::size_t parts = uniform_int<std::size_t>(rng, 1, policy.max_structure_parts);
    const auto cap = static_cast<std::size_t>(policy.max_part_fraction * static_cast<double>(length));
    const std::size_t max_len = std::max<std::size_t>(1, cap);
    std::vector<IndexPair> runs;
    for (std::size_t p = 0; p < parts; ++p) {
        for (int attempt = 0; attempt < 64; ++attempt) {
            const std::size_t len = uniform_int<std::size_t>(rng, 1, std::min(max_len, length));
            const std::size_t start = uniform_int<std::size_t>(rng, 0, length - len);
            const std::size_t end = start + len;
            const bool clash = std::any_of(runs.begin(), runs.end(), [&](const IndexPair& r) {
                return start <= r.second && r.first <= end;  // overlap or adjacency
            });
            if (!clash) {
                runs.emplace_back(start, end);
                break;
            }
        }
    }
    std::sort(runs.begin(), runs.end());
    return runs;
}

}  // namespace

MaskedTask mask_sample(const Sequence& seq, const Structure& structure, const MaskingPolicy& policy, Rng& rng) {
    if (seq.size() != structure.size()) {
        throw Error(ErrorCode::LengthMismatch, "sequence and structure lengths differ");
    }
    const std::size_t n = seq.size();
    MaskedTask out;
    out.task.sequence_constraint = seq.str();
    out.task.structure_constraint = structure.str();

    const double u = uniform01(rng);
    if (u < policy.inverse_folding_fraction) {
        out.family = TaskFamily::InverseFolding;
        out.task.sequence_constraint.assign(n, kMask);
        return out;
    }
    out.family = u < policy.inverse_folding_fraction + policy.sequence_random_mask_fraction ? TaskFamily::RandomMasking
                                                                                           : TaskFamily::Alternating;

    out.structure_runs = place_structure_runs(n, policy, rng);
    std::vector<bool> struct_masked(n, false);
    for (auto [b, e] : out.structure_runs) {
        for (std::size_t i = b; i < e; ++i) struct_masked[i] = true;
    }
    for (std::size_t i = 0; i < n; ++i) {
        if (struct_masked[i]) {
            out.task.structure_constraint[i] = kMask;
        } else {
            out.task.sequence_constraint[i] = kMask;
        }
    }
    if (out.family == TaskFamily::RandomMasking) {
        const double rate = uniform01(rng);
        for (std::size_t i = 0; i < n; ++i) {
            if (out.task.sequence_constraint[i] != kMask && uniform01(rng) < rate) {
                out.task.sequence_constraint[i] = kMask;
            }
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// Datasets

std::string_view to_string(DatasetKind kind) {
    switch (kind) {
        case DatasetKind::Long: return "long";
        case DatasetKind::Short: return "short";
        case DatasetKind::Random: return "random";
        case DatasetKind::Validation: return "validation";
    }
    return "unknown";
}

DatasetKind dataset_kind_from_string(std::string_view name) {
    if (name == "long") return DatasetKind::Long;
    if (name == "short") return DatasetKind::Short;
    if (name == "random") return DatasetKind::Random;
    if (name == "validation") return DatasetKind::Validation;
    throw Error(ErrorCode::InvalidConfig, "unknown dataset '" + std::string(name) + "'");
}

bool DatasetSpec::accepts(std::size_t length) const {
    switch (kind) {
        case DatasetKind::Long: return length >= kLengthBoundary;
        case DatasetKind::Short: return length <= kLengthBoundary;
        case DatasetKind::Random:
        case DatasetKind::Validation: return true;
    }
    return false;
}

std::map<DatasetKind, std::vector<Task>> build_datasets(const Corpus& corpus, const std::vector<DatasetSpec>& specs,
                                                        const MaskingPolicy& policy, Rng& rng) {
    policy.validate();
    // Distinct sequences only, in a seeded random order.
    std::vector<std::size_t> order;
    {
        std::unordered_set<std::string> seen;
        for (std::size_t i = 0; i < corpus.size(); ++i) {
            if (seen.insert(corpus[i].sequence.str()).second) order.push_back(i);
        }
    }
    std::shuffle(order.begin(), order.end(), rng);

    std::map<DatasetKind, std::vector<Task>> out;
    std::unordered_set<std::string> held_out;
    std::size_t cursor = 0;
    for (const auto& spec : specs) {
        if (spec.kind != DatasetKind::Validation) continue;
        if (cursor + spec.size > order.size()) {
            throw Error(ErrorCode::CorpusTooSmall, "validation set of " + std::to_string(spec.size) +
                                                       " needs more distinct sequences than the corpus holds");
        }
        auto& tasks = out[DatasetKind::Validation];
        for (std::size_t k = 0; k < spec.size; ++k, ++cursor) {
            const auto& entry = corpus[order[cursor]];
            held_out.insert(entry.sequence.str());
            tasks.push_back(mask_sample(entry.sequence, entry.structure, policy, rng).task);
        }
    }
    for (const auto& spec : specs) {
        if (spec.kind == DatasetKind::Validation) continue;
        std::vector<std::size_t> pool;
        for (std::size_t idx : order) {
            const auto& entry = corpus[idx];
            if (!held_out.count(entry.sequence.str()) && spec.accepts(entry.sequence.size())) pool.push_back(idx);
        }
        if (pool.empty() && spec.size > 0) {
            throw Error(ErrorCode::CorpusTooSmall, "no corpus entries qualify for the '" +
                                                       std::string(to_string(spec.kind)) + "' dataset");
        }
        auto& tasks = out[spec.kind];
        for (std::size_t k = 0; k < spec.size; ++k) {
            const auto& entry = corpus[pool[k % pool.size()]];
            tasks.push_back(mask_sample(entry.sequence, entry.structure, policy, rng).task);
        }
    }
    return out;
}

Corpus random_corpus(std::size_t count, std::size_t min_length, std::size_t max_length, const FoldingEngine& engine,
                     Rng& rng) {
    if (min_length == 0 || max_length < min_length) throw Error(ErrorCode::BadLengthRange, "bad corpus length range");
    Corpus corpus;
    corpus.reserve(count);
    for (std::size_t n = 0; n < count; ++n) {
        const std::size_t len = uniform_int<std::size_t>(rng, min_length, max_length);
        std::string s(len, 'A');
        for (char& c : s) c = kNucleotides[uniform_int<std::size_t>(rng, 0, 3)];
        Sequence seq(std::move(s));
        Structure st = engine.fold(seq);
        corpus.push_back({std::move(seq), std::move(st)});
    }
    return corpus;
}

namespace {

std::string normalise_residues(std::string_view raw) {
    std::string out;
    for (char c : raw) {
        if (c == ' ' || c == '\t' || c == '\r') continue;
        c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
        if (c == 'T') c = 'U';
        out.push_back(c);
    }
    return out;
}

}  // namespace

Corpus read_fasta_corpus(std::istream& in, const FoldingEngine& engine) {
    Corpus corpus;
    std::string line;
    std::string current;
    bool in_record = false;
    auto flush = [&] {
        if (in_record && !current.empty()) {
            Sequence seq(current);
            Structure st = engine.fold(seq);
            corpus.push_back({std::move(seq), std::move(st)});
        }
        current.clear();
    };
    while (std::getline(in, line)) {
        if (!line.empty() && line.front() == '>') {
            flush();
            in_record = true;
            continue;
        }
        if (!in_record) {
            if (trim(line).empty()) continue;
            throw Error(ErrorCode::IllegalToken, "FASTA data before the first header");
        }
        current += normalise_residues(line);
    }
    flush();
    return corpus;
}

Corpus read_tsv_corpus(std::istream& in) {
    Corpus corpus;
    std::string line;
    while (std::getline(in, line)) {
        if (trim(line).empty() || line.front() == '#') continue;
        const auto tab = line.find('\t');
        if (tab == std::string::npos) throw Error(ErrorCode::IllegalToken, "TSV line needs sequence<TAB>structure");
        Sequence seq(normalise_residues(line.substr(0, tab)));
        Structure st = parse_dot_bracket(trim(line.substr(tab + 1)));
        if (seq.size() != st.size()) throw Error(ErrorCode::LengthMismatch, "TSV sequence/structure length mismatch");
        corpus.push_back({std::move(seq), std::move(st)});
    }
    return corpus;
}

void write_tasks_jsonl(std::ostream& out, const std::vector<Task>& tasks) {
    for (const auto& t : tasks) out << to_json(t).dump() << '\n';
}

std::vector<Task> read_tasks_jsonl(std::istream& in) {
    std::vector<Task> tasks;
    std::string line;
    while (std::getline(in, line)) {
        if (trim(line).empty()) continue;
        tasks.push_back(task_from_json(nlohmann::json::parse(line)));
    }
    return tasks;
}

}  // namespace ribodesign
