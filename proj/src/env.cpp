#include "ribodesign/env.hpp"

#include <algorithm>
#include <cmath>

#include "ribodesign/error.hpp"

namespace ribodesign {

std::string_view to_string(StateComposition c) { return c == StateComposition::Target ? "target" : "design"; }
std::string_view to_string(ActionSemantics s) { return s == ActionSemantics::Pair ? "pair" : "single"; }

StateComposition state_composition_from_string(std::string_view s) {
    if (s == "target") return StateComposition::Target;
    if (s == "design") return StateComposition::Design;
    throw Error(ErrorCode::InvalidConfig, "state composition must be target|design");
}

ActionSemantics action_semantics_from_string(std::string_view s) {
    if (s == "pair") return ActionSemantics::Pair;
    if (s == "single") return ActionSemantics::Single;
    throw Error(ErrorCode::InvalidConfig, "action semantics must be pair|single");
}

void EnvConfig::validate() const {
    if (state_radius < 0 || state_radius > 32) throw Error(ErrorCode::InvalidConfig, "state radius outside [0, 32]");
    if (!(reward_exponent >= 1.0 && reward_exponent <= 12.0)) {
        throw Error(ErrorCode::InvalidConfig, "reward exponent outside [1, 12]");
    }
}

namespace {

int sequence_index(char c) {
    switch (c) {
        case 'A': return 0;
        case 'C': return 1;
        case 'G': return 2;
        case 'U': return 3;
        case kMask: return 4;
        default: throw Error(ErrorCode::IllegalSymbol, "bad sequence symbol for encoding");
    }
}

int structure_index(char c) {
    switch (c) {
        case '.': return 0;
        case '(': return 1;
        case ')': return 2;
        case kMask: return 3;
        default: throw Error(ErrorCode::IllegalSymbol, "bad structure symbol for encoding");
    }
}

}  // namespace

int encode_symbol_pair(char sequence_symbol, char structure_symbol) {
    return sequence_index(sequence_symbol) * kStructureSymbols + structure_index(structure_symbol);
}

std::pair<char, char> decode_symbol_pair(int code) {
    if (code == kPadCode) return {'\0', '\0'};
    static constexpr std::string_view seq = "ACGU?";
    static constexpr std::string_view st = ".()?";
    return {seq[static_cast<std::size_t>(code / kStructureSymbols)], st[static_cast<std::size_t>(code % kStructureSymbols)]};
}

std::optional<std::size_t> partner_of(const Task& task, std::size_t i) {
    for (auto [a, b] : task.explicit_pairs) {
        if (a == i) return b;
        if (b == i) return a;
    }
    const std::string& s = task.structure_constraint;
    if (i >= s.size()) return std::nullopt;
    if (s[i] == '(') {
        int depth = 0;
        for (std::size_t j = i; j < s.size(); ++j) {
            if (s[j] == kMask) return std::nullopt;
            if (s[j] == '(') ++depth;
            if (s[j] == ')' && --depth == 0) return j;
        }
    } else if (s[i] == ')') {
        int depth = 0;
        for (std::size_t j = i + 1; j-- > 0;) {
            if (s[j] == kMask) return std::nullopt;
            if (s[j] == ')') ++depth;
            if (s[j] == '(' && --depth == 0) return j;
        }
    }
    return std::nullopt;
}

Episode::Episode(Task task, EnvConfig config)
    : task_(std::move(task)), config_(config), working_(task_.sequence_constraint) {
    task_.validate();
    config_.validate();
    partners_.resize(task_.size());
    for (std::size_t i = 0; i < task_.size(); ++i) {
        const char c = task_.structure_constraint[i];
        const bool explicitly_paired = std::any_of(task_.explicit_pairs.begin(), task_.explicit_pairs.end(),
                                                   [&](const IndexPair& p) { return p.first == i || p.second == i; });
        if (c == '(' || c == ')' || explicitly_paired) partners_[i] = partner_of(task_, i);
    }
    advance();
}

void Episode::advance() {
    std::size_t next = working_.find(kMask, cursor_);
    if (next == std::string::npos) {
        done_ = true;
        return;
    }
    cursor_ = next;
}

bool Episode::pair_step() const {
    if (done_ || config_.action_semantics != ActionSemantics::Pair) return false;
    const auto& p = partners_[cursor_];
    return p && *p != cursor_ && working_[*p] == kMask;
}

StateWindow Episode::window() const {
    StateWindow w;
    const int radius = config_.state_radius;
    w.tokens.reserve(static_cast<std::size_t>(config_.window_size()));
    const auto n = static_cast<long>(task_.size());
    const std::string& seq_view = config_.state_composition == StateComposition::Target ? task_.sequence_constraint
                                                                                         : working_;
    for (long p = static_cast<long>(cursor_) - radius; p <= static_cast<long>(cursor_) + radius; ++p) {
        if (p < 0 || p >= n) {
            w.tokens.push_back(kPadCode);
        } else {
            const auto idx = static_cast<std::size_t>(p);
            w.tokens.push_back(encode_symbol_pair(seq_view[idx], task_.structure_constraint[idx]));
        }
    }
    return w;
}

StateWindow Episode::step(Action action) {
    if (done_) throw Error(ErrorCode::EpisodeDone, "episode already finished");
    if (action.index < 0 || action.index >= kActionCount) {
        throw Error(ErrorCode::InvalidConfig, "action index out of range");
    }
    if (action.kind == Action::Kind::Pair) {
        if (!pair_step()) {
            throw Error(ErrorCode::IllegalPairAction,
                        "no identifiable undetermined partner at position " + std::to_string(cursor_));
        }
        const auto& nts = kPairActions[static_cast<std::size_t>(action.index)];
        working_[cursor_] = nts[0];
        working_[*partners_[cursor_]] = nts[1];
    } else {
        working_[cursor_] = kNucleotides[static_cast<std::size_t>(action.index)];
    }
    ++steps_;
    advance();
    return window();
}

double reward_from_loss(double total_loss, double alpha) {
    const double clipped = std::clamp(total_loss, 0.0, 1.0);
    return std::pow(1.0 - clipped, alpha);
}

RewardBreakdown score_structure(std::string_view sequence, std::string_view folded, const Task& task, double alpha) {
    RewardBreakdown r;
    const HammingCount h = constrained_hamming(folded, task.structure_constraint);
    r.mismatches = h.mismatches;
    r.constrained = h.constrained;
    r.structure_loss = static_cast<double>(h.mismatches) / static_cast<double>(std::max<std::size_t>(h.constrained, 1));
    r.gc_loss = task.gc_target ? std::abs(gc_content(sequence) - *task.gc_target) : 0.0;
    r.total_loss = r.structure_loss + r.gc_loss;
    r.reward = reward_from_loss(r.total_loss, alpha);
    return r;
}

DesignOutcome evaluate_design(const std::string& sequence, const Task& task, const FoldingEngine& engine,
                              double alpha) {
    DesignOutcome out;
    out.sequence = sequence;
    out.folded = engine.fold(Sequence(sequence)).str();
    out.breakdown = score_structure(out.sequence, out.folded, task, alpha);
    return out;
}

DesignOutcome finalize(const Episode& episode, const FoldingEngine& engine) {
    if (!episode.done()) throw Error(ErrorCode::EpisodeNotDone, "finalize called before the episode finished");
    return evaluate_design(episode.working_sequence(), episode.task(), engine, episode.config().reward_exponent);
}

}  // namespace ribodesign
