#include <doctest.h>

#include <cmath>
#include <numeric>

#include "ribodesign/error.hpp"
#include "ribodesign/network.hpp"
#include "support.hpp"

using namespace ribodesign;

namespace {

StateWindow random_window(Rng& rng, int size) {
    StateWindow w;
    for (int i = 0; i < size; ++i) w.tokens.push_back(uniform_int(rng, 0, kPadCode));
    return w;
}

NetworkSpec tiny_spec() {
    NetworkSpec s;
    s.embedding_dim = 3;
    s.conv1_filter_size = 3;
    s.conv1_filters = 3;
    s.conv2_filter_size = 0;
    s.lstm_layers = 1;
    s.lstm_units = 3;
    s.fc_layers = 2;
    s.fc_units = 8;
    return s;
}

}  // namespace

TEST_SUITE("network") {

TEST_CASE("spec validation and JSON") {
    NetworkSpec s;
    CHECK_NOTHROW(s.validate());
    CHECK(network_spec_from_json(to_json(s)) == s);
    s.conv1_filter_size = 4;
    CHECK_THROWS_AS(s.validate(), Error);
    s = NetworkSpec{};
    s.fc_layers = 3;
    CHECK_THROWS_AS(s.validate(), Error);
    s = NetworkSpec{};
    s.embedding_dim = 22;
    CHECK_THROWS_AS(s.validate(), Error);
}

TEST_CASE("forward produces a distribution") {
    Rng rng(51);
    PolicyNetwork net(NetworkSpec{}, 21, rng);
    for (int trial = 0; trial < 1000; ++trial) {
        const StateWindow w = random_window(rng, 21);
        const PolicyOutput out = net.forward(w);
        const double sum = std::accumulate(out.probs.begin(), out.probs.end(), 0.0);
        REQUIRE(std::abs(sum - 1.0) < 1e-6);
        for (double p : out.probs) {
            REQUIRE(p >= 0.15);
            REQUIRE(p <= 0.35);
        }
        REQUIRE(net.forward(w).probs == out.probs);
    }
    CHECK_THROWS_AS(net.forward(random_window(rng, 20)), Error);
}

TEST_CASE("gradient check on varied architectures") {
    const std::vector<NetworkSpec> specs{tiny_spec(), NetworkSpec{}, NetworkSpec{0, 5, 4, 3, 3, 2, 4, 1, 8},
                                         NetworkSpec{4, 0, 1, 9, 2, 0, 1, 1, 9}};
    for (std::uint64_t seed : {1u, 2u, 3u}) {
        Rng rng(seed);
        for (const auto& spec : specs) {
            PolicyNetwork net(spec, 9, rng);
            const StateWindow w = random_window(rng, 9);
            for (int a = 0; a < kActionCount; ++a) CHECK(policy_gradient_check(net, w, a) < 1e-4);
        }
    }
}

TEST_CASE("zero policy head gives a uniform distribution and no entropy gradient") {
    Rng rng(52);
    PolicyNetwork net(tiny_spec(), 7, rng);
    net.zero_policy_head();
    const StateWindow w = random_window(rng, 7);
    ForwardCache cache;
    const PolicyOutput out = net.forward(w, cache);
    for (double p : out.probs) CHECK(p == doctest::Approx(0.25).epsilon(1e-12));
    CHECK(entropy(out.probs) == doctest::Approx(std::log(4.0)).epsilon(1e-12));

    // dH/dlogit_k = -p_k (log p_k + H) vanishes at the uniform distribution.
    ActionVector dlogits{};
    const double h = entropy(out.probs);
    for (std::size_t k = 0; k < dlogits.size(); ++k) dlogits[k] = -out.probs[k] * (std::log(out.probs[k]) + h);
    std::vector<double> grad(net.parameter_count(), 0.0);
    net.backward(cache, dlogits, 0.0, grad);
    for (double g : grad) REQUIRE(std::abs(g) < 1e-12);
}

TEST_CASE("parameters round trip through the flat vector") {
    Rng rng(53);
    PolicyNetwork a(tiny_spec(), 5, rng);
    PolicyNetwork b(tiny_spec(), 5, std::vector<double>(a.parameters().begin(), a.parameters().end()));
    const StateWindow w = random_window(rng, 5);
    CHECK(a.forward(w).probs == b.forward(w).probs);
    CHECK_THROWS_AS(PolicyNetwork(tiny_spec(), 5, std::vector<double>(3, 0.0)), Error);
}

}
