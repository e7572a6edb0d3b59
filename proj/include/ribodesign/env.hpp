#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "ribodesign/design_space.hpp"
#include "ribodesign/fold.hpp"

namespace ribodesign {

enum class StateComposition { Target, Design };
enum class ActionSemantics { Pair, Single };

std::string_view to_string(StateComposition c);
std::string_view to_string(ActionSemantics s);
StateComposition state_composition_from_string(std::string_view s);
ActionSemantics action_semantics_from_string(std::string_view s);

struct EnvConfig {
    int state_radius = 10;
    StateComposition state_composition = StateComposition::Target;
    ActionSemantics action_semantics = ActionSemantics::Pair;
    double reward_exponent = 10.76;

    int window_size() const noexcept { return 2 * state_radius + 1; }
    void validate() const;
};

// Token vocabulary: (sequence symbol in A,C,G,U,?) x (structure symbol in .,(,),?)
// plus one pad code for positions outside the task.
inline constexpr int kSequenceSymbols = 5;
inline constexpr int kStructureSymbols = 4;
inline constexpr int kPadCode = kSequenceSymbols * kStructureSymbols;
inline constexpr int kVocabularySize = kPadCode + 1;

int encode_symbol_pair(char sequence_symbol, char structure_symbol);
/// Inverse of encode_symbol_pair; pad decodes to {'\0', '\0'}.
std::pair<char, char> decode_symbol_pair(int code);

struct StateWindow {
    std::vector<int> tokens;

    friend bool operator==(const StateWindow&, const StateWindow&) = default;
};

inline constexpr int kActionCount = 4;

/// Single actions place A, C, G, U. Pair actions place (cursor, partner)
/// as AU, UA, GC, CG.
struct Action {
    enum class Kind { Single, Pair };
    Kind kind = Kind::Single;
    int index = 0;

    static Action single(int i) { return {Kind::Single, i}; }
    static Action pair(int i) { return {Kind::Pair, i}; }
};

inline constexpr std::array<std::array<char, 2>, kActionCount> kPairActions{
    {{'A', 'U'}, {'U', 'A'}, {'G', 'C'}, {'C', 'G'}}};

/// Partner of a bracketed position: an explicit pair if declared, else the
/// bracket match found without crossing any '?'.
std::optional<std::size_t> partner_of(const Task& task, std::size_t i);

/// One design episode: undetermined positions are filled left to right.
class Episode {
public:
    /// Cursor starts on the first masked sequence position. A task without
    /// masked positions yields an episode that is already done.
    Episode(Task task, EnvConfig config);

    const Task& task() const noexcept { return task_; }
    const EnvConfig& config() const noexcept { return config_; }
    std::size_t cursor() const noexcept { return cursor_; }
    const std::string& working_sequence() const noexcept { return working_; }
    bool done() const noexcept { return done_; }
    std::size_t steps() const noexcept { return steps_; }

    /// True when the next action must be a pair action (pair semantics and an
    /// identifiable, still undetermined partner).
    bool pair_step() const;

    StateWindow window() const;

    /// Applies the action and advances the cursor. Errors: EpisodeDone, IllegalPairAction.
    StateWindow step(Action action);

private:
    void advance();

    Task task_;
    EnvConfig config_;
    std::vector<std::optional<std::size_t>> partners_;
    std::string working_;
    std::size_t cursor_ = 0;
    std::size_t steps_ = 0;
    bool done_ = false;
};

struct RewardBreakdown {
    double structure_loss = 0.0;
    double gc_loss = 0.0;
    double total_loss = 0.0;
    double reward = 0.0;
    std::size_t mismatches = 0;
    std::size_t constrained = 0;
};

/// reward = (1 - min(total_loss, 1))^alpha
double reward_from_loss(double total_loss, double alpha);

RewardBreakdown score_structure(std::string_view sequence, std::string_view folded, const Task& task, double alpha);

struct DesignOutcome {
    std::string sequence;
    std::string folded;
    RewardBreakdown breakdown;
};

/// Folds a complete sequence and scores it against the task.
DesignOutcome evaluate_design(const std::string& sequence, const Task& task, const FoldingEngine& engine,
                              double alpha);

/// Terminal reward of a finished episode. Errors: EpisodeNotDone.
DesignOutcome finalize(const Episode& episode, const FoldingEngine& engine);

}  // namespace ribodesign
