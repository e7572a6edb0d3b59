#include <doctest.h>

#include <cmath>
#include <set>

#include "ribodesign/env.hpp"
#include "ribodesign/error.hpp"
#include "support.hpp"

using namespace ribodesign;

namespace {

Task make_task(std::string seq, std::string st) { return Task{std::move(seq), std::move(st), {}, std::nullopt}; }

}  // namespace

TEST_SUITE("env") {

TEST_CASE("token codes are a bijection with a distinct pad") {
    std::set<int> seen;
    for (char s : std::string("ACGU?")) {
        for (char t : std::string(".()?")) {
            const int code = encode_symbol_pair(s, t);
            CHECK(code >= 0);
            CHECK(code < kPadCode);
            CHECK(decode_symbol_pair(code) == std::pair{s, t});
            seen.insert(code);
        }
    }
    CHECK(seen.size() == 20);
    CHECK(seen.count(kPadCode) == 0);
}

TEST_CASE("window size and padding") {
    EnvConfig cfg;
    Episode ep(make_task("??????", "(....)"), cfg);
    CHECK(ep.window().tokens.size() == 21);
    CHECK(ep.window().tokens[0] == kPadCode);
    CHECK(ep.window().tokens[10] == encode_symbol_pair('?', '('));

    cfg.state_radius = 0;
    Episode narrow(make_task("AC?", "..?"), cfg);
    CHECK(narrow.cursor() == 2);
    CHECK(narrow.window().tokens == std::vector<int>{encode_symbol_pair('?', '?')});
}

TEST_CASE("partner_of") {
    CHECK(partner_of(make_task("???????", "((...))"), 0) == 6);
    CHECK(partner_of(make_task("???????", "((...))"), 5) == 1);
    CHECK_FALSE(partner_of(make_task("???????", "((..?))"), 1).has_value());
    Task explicit_pair{"??????????", "(...?....)", {{0, 9}}, std::nullopt};
    CHECK(partner_of(explicit_pair, 0) == 9);
    CHECK(partner_of(explicit_pair, 9) == 0);
}

TEST_CASE("single and pair steps") {
    EnvConfig cfg;
    cfg.action_semantics = ActionSemantics::Single;
    Episode single(make_task("A??", "..."), cfg);
    single.step(Action::single(1));
    CHECK(single.working_sequence() == "AC?");

    cfg.action_semantics = ActionSemantics::Pair;
    Episode paired(make_task("?????", "(...)"), cfg);
    CHECK(paired.pair_step());
    paired.step(Action::pair(2));
    CHECK(paired.working_sequence() == "G???C");
    CHECK(paired.cursor() == 1);
    CHECK_FALSE(paired.pair_step());
    CHECK_THROWS_AS(paired.step(Action::pair(0)), Error);

    Episode blocked(make_task("??????", "((.?))"), cfg);
    CHECK_FALSE(blocked.pair_step());
    try {
        blocked.step(Action::pair(0));
        FAIL("expected IllegalPairAction");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::IllegalPairAction);
    }

    Episode finished(make_task("ACGU", "...."), cfg);
    CHECK(finished.done());
    CHECK_THROWS_AS(finished.step(Action::single(0)), Error);
}

TEST_CASE("property: literals preserved and termination count") {
    Rng rng(41);
    for (int trial = 0; trial < 500; ++trial) {
        const auto n = uniform_int<std::size_t>(rng, 1, 40);
        std::string seq = testsupport::random_rna(rng, n);
        std::string st = testsupport::random_structure(rng, n);
        for (auto& c : seq) if (uniform01(rng) < 0.6) c = kMask;
        for (auto& c : st) if (uniform01(rng) < 0.1) c = kMask;
        Task t = make_task(seq, st);

        EnvConfig cfg;
        cfg.state_radius = uniform_int(rng, 0, 5);
        cfg.action_semantics = uniform01(rng) < 0.5 ? ActionSemantics::Pair : ActionSemantics::Single;
        Episode ep(t, cfg);
        std::size_t pair_steps = 0;
        while (!ep.done()) {
            REQUIRE(ep.window().tokens.size() == static_cast<std::size_t>(cfg.window_size()));
            const bool pair = ep.pair_step();
            pair_steps += pair;
            ep.step(pair ? Action::pair(uniform_int(rng, 0, 3)) : Action::single(uniform_int(rng, 0, 3)));
        }
        const std::size_t masked = t.masked_sequence_positions();
        REQUIRE(ep.steps() + pair_steps == masked);
        REQUIRE(ep.working_sequence().find(kMask) == std::string::npos);
        for (std::size_t i = 0; i < n; ++i) {
            if (seq[i] != kMask) REQUIRE(ep.working_sequence()[i] == seq[i]);
        }
    }
}

TEST_CASE("target windows ignore decisions, design windows reflect them") {
    const Task t = make_task("???", "...");
    EnvConfig cfg;
    cfg.state_radius = 2;
    cfg.action_semantics = ActionSemantics::Single;

    auto trace = [&](StateComposition sigma, int first_action) {
        cfg.state_composition = sigma;
        Episode ep(t, cfg);
        std::vector<StateWindow> w{ep.window()};
        w.push_back(ep.step(Action::single(first_action)));
        return w;
    };
    CHECK(trace(StateComposition::Target, 0) == trace(StateComposition::Target, 3));
    CHECK(trace(StateComposition::Design, 0)[1] != trace(StateComposition::Design, 3)[1]);
}

TEST_CASE("reward arithmetic") {
    CHECK(reward_from_loss(0.0, 1.0) == 1.0);
    CHECK(reward_from_loss(0.0, 10.76) == 1.0);
    CHECK(reward_from_loss(0.1, 10.76) == doctest::Approx(std::pow(0.9, 10.76)).epsilon(1e-12));
    CHECK(reward_from_loss(0.1, 10.76) == doctest::Approx(0.322).epsilon(1e-3));
    CHECK(reward_from_loss(3.0, 2.0) == 0.0);

    Task t = make_task("????????", "????????");
    t.gc_target = 0.6;
    const auto b = score_structure("GCGCAUAU", "........", t, 10.76);
    CHECK(b.structure_loss == 0.0);
    CHECK(b.gc_loss == doctest::Approx(0.1).epsilon(1e-12));
    CHECK(b.reward == doctest::Approx(std::pow(0.9, 10.76)).epsilon(1e-9));
}

TEST_CASE("property: reward monotone in loss and exponent") {
    Rng rng(42);
    for (int trial = 0; trial < 1000; ++trial) {
        const double a = uniform01(rng) * 1.2;
        const double b = uniform01(rng) * 1.2;
        const double alpha = 1.0 + 11.0 * uniform01(rng);
        const double beta = 1.0 + 11.0 * uniform01(rng);
        const double ra = reward_from_loss(a, alpha);
        REQUIRE(ra >= 0.0);
        REQUIRE(ra <= 1.0);
        if (a <= b) REQUIRE(ra >= reward_from_loss(b, alpha));
        if (alpha <= beta && a < 1.0) REQUIRE(ra >= reward_from_loss(a, beta));
    }
}

TEST_CASE("finalize folds and scores") {
    const auto engine = FoldingEngine::internal();
    EnvConfig cfg;
    Episode ep(make_task("GGGAAACCC", "(((...)))"), cfg);
    const DesignOutcome out = finalize(ep, engine);
    CHECK(out.breakdown.reward == 1.0);
    Episode open(make_task("GGG?AACCC", "(((...)))"), cfg);
    CHECK_THROWS_AS(finalize(open, engine), Error);
}

TEST_CASE("config validation") {
    EnvConfig cfg;
    cfg.state_radius = 33;
    CHECK_THROWS_AS(cfg.validate(), Error);
    cfg.state_radius = 10;
    cfg.reward_exponent = 0.5;
    CHECK_THROWS_AS(cfg.validate(), Error);
}

}
