#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "qrefine/rng.hpp"
#include "qrefine/scoring.hpp"

#include <vector>

using namespace qrefine;

namespace {

HallucinationVector vec(int h1, int h2, int h3, int h4) {
    HallucinationVector v;
    int values[] = {h1, h2, h3, h4};
    for (int i = 0; i < 4; ++i)
        if (values[i] >= 0) v.set(i, values[i]);
    return v;
}

// random point on the simplex via normalized exponentials
Weights random_weights(SplitMix64& rng) {
    double raw[4];
    double sum = 0;
    for (double& x : raw) {
        x = -std::log(1.0 - rng.uniform());
        sum += x;
    }
    return Weights{raw[0] / sum, raw[1] / sum, raw[2] / sum, raw[3] / sum};
}

} // namespace

TEST_CASE("composite score basics") {
    Weights uniform{};
    CHECK(composite_score(vec(0, 0, 0, 0), uniform).value == 0.0);
    CHECK(composite_score(vec(1, 1, 1, 1), uniform).value == 1.0);
    CHECK(composite_score(vec(1, 0, 0, 0), uniform).value == 0.25);
    CHECK(composite_score(vec(1, 1, 1, 1), Weights{0.1, 0.2, 0.3, 0.4}).value == 1.0);
    CHECK_FALSE(composite_score(vec(0, 0, 0, 0), uniform).partial);
}

TEST_CASE("unchecked components contribute zero and mark the score partial") {
    Weights uniform{};
    Score score = composite_score(vec(-1, 1, 0, -1), uniform);
    CHECK(score.value == 0.25);
    CHECK(score.partial);
}

TEST_CASE("invalid weights are rejected") {
    CHECK_THROWS_AS(composite_score(vec(0, 0, 0, 0), Weights{0.5, 0.5, 0.5, 0.5}),
                    InvalidWeights);
}

TEST_CASE("score properties over random vectors and weights") {
    SplitMix64 rng(1234);
    for (int i = 0; i < 10'000; ++i) {
        Weights w = random_weights(rng);
        HallucinationVector v;
        for (int c = 0; c < 4; ++c) {
            switch (rng.below(3)) {
            case 0: v.set(c, 0); break;
            case 1: v.set(c, 1); break;
            default: break; // unchecked
            }
        }
        Score score = composite_score(v, w);
        CHECK(score.value >= 0.0);
        CHECK(score.value <= 1.0 + 1e-12);
        // monotone: flipping any checked 0 to 1 never decreases the score
        for (int c = 0; c < 4; ++c) {
            if (v.get(c) != 0) continue;
            HallucinationVector flipped = v;
            flipped.set(c, 1);
            CHECK(composite_score(flipped, w).value >= score.value);
        }
        // deterministic recomputation is bit-exact
        CHECK(composite_score(v, w).value == score.value);
    }
}

TEST_CASE("score is zero iff all checked components are zero under positive weights") {
    SplitMix64 rng(77);
    for (int i = 0; i < 500; ++i) {
        Weights w = random_weights(rng);
        HallucinationVector v;
        bool any_one = false;
        for (int c = 0; c < 4; ++c) {
            int value = static_cast<int>(rng.below(2));
            v.set(c, value);
            any_one = any_one || value == 1;
        }
        Score score = composite_score(v, w);
        CHECK((score.value == 0.0) == !any_one);
    }
}

TEST_CASE("termination decisions per rule") {
    TerminationConfig config; // 0.05 / 0.01 / 7

    SUBCASE("empty history is an error") {
        std::vector<double> empty;
        CHECK_THROWS_AS(should_terminate(empty, config), EmptyHistory);
    }
    SUBCASE("single zero converges") {
        std::vector<double> h{0.0};
        CHECK(should_terminate(h, config).kind == TerminationKind::Converged);
    }
    SUBCASE("flat history stalls") {
        std::vector<double> h{0.5, 0.5};
        TerminationConfig c;
        c.epsilon1 = 0.01;
        c.epsilon2 = 0.01;
        CHECK(should_terminate(h, c).kind == TerminationKind::Stalled);
    }
    SUBCASE("improving history continues") {
        std::vector<double> h{0.5, 0.25};
        TerminationConfig c;
        c.epsilon1 = 0.01;
        c.epsilon2 = 0.01;
        c.t_max = 10;
        CHECK(should_terminate(h, c).kind == TerminationKind::Continue);
    }
    SUBCASE("budget fires at t_max + 1 scores") {
        TerminationConfig c;
        c.t_max = 3;
        std::vector<double> h{0.9, 0.8, 0.7};
        CHECK(should_terminate(h, c).kind == TerminationKind::Continue);
        h.push_back(0.6);
        CHECK(should_terminate(h, c).kind == TerminationKind::Budget);
    }
}

TEST_CASE("termination truth table covers every rule combination") {
    // each case crafts (converged?, stalled?, budget?) and asserts priority
    struct Case {
        std::vector<double> history;
        TerminationConfig config;
        TerminationKind expected;
    };
    TerminationConfig base; // 0.05 / 0.01 / 7
    TerminationConfig tiny_budget;
    tiny_budget.t_max = 1;

    std::vector<Case> cases = {
        // converged & stalled & budget -> Converged
        {{0.04, 0.041}, tiny_budget, TerminationKind::Converged},
        // converged & stalled -> Converged (priority over Stalled)
        {{0.04, 0.041}, base, TerminationKind::Converged},
        // converged & budget -> Converged
        {{0.9, 0.02}, tiny_budget, TerminationKind::Converged},
        // converged only
        {{0.01}, base, TerminationKind::Converged},
        // stalled & budget -> Stalled
        {{0.5, 0.5}, tiny_budget, TerminationKind::Stalled},
        // stalled only
        {{0.5, 0.505}, base, TerminationKind::Stalled},
        // budget only
        {{0.9, 0.7}, tiny_budget, TerminationKind::Budget},
        // none -> Continue
        {{0.9, 0.7}, base, TerminationKind::Continue},
        // boundary: last == epsilon1 is NOT converged (strict <)
        {{0.05}, base, TerminationKind::Continue},
        // boundary: |delta| == epsilon2 is NOT stalled (strict <)
        {{0.30, 0.29}, base, TerminationKind::Continue},
        // single-entry history cannot stall
        {{0.5}, base, TerminationKind::Continue},
    };
    for (std::size_t i = 0; i < cases.size(); ++i) {
        CAPTURE(i);
        CHECK(should_terminate(cases[i].history, cases[i].config).kind == cases[i].expected);
    }
}

TEST_CASE("should_terminate is a pure function") {
    std::vector<double> history{0.4, 0.39, 0.2};
    TerminationConfig config;
    auto first = should_terminate(history, config);
    for (int i = 0; i < 10; ++i) {
        auto again = should_terminate(history, config);
        CHECK(again.kind == first.kind);
        CHECK(again.rule == first.rule);
    }
}
