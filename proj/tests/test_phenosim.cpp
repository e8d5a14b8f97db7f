#include <cmath>
#include <map>

#include "doctest.h"
#include "gxe/error.hpp"
#include "gxe/phenosim.hpp"
#include "support/testutil.hpp"

using namespace gxe;

TEST_CASE("penetrance under the interaction model") {
    DiseaseModel model;
    model.baseline_prevalence = 0.01;
    model.relative_risk = 50.0;
    model.coding = GeneticCoding::dominant;
    const std::vector<std::uint8_t> g = {0, 1, 2, GenotypeMatrix::kMissing, 1};
    const std::vector<std::uint8_t> e = {1, 1, 1, 1, 0};
    const auto p = penetrance(model, g, e);
    REQUIRE(p.size() == 5);
    CHECK(p[0] == doctest::Approx(0.01));   // non-carrier
    CHECK(p[1] == doctest::Approx(0.51));   // het carrier, exposed
    CHECK(p[2] == doctest::Approx(0.51));   // dominant: hom same as het
    CHECK(p[3] == doctest::Approx(0.01));   // missing treated as non-carrier
    CHECK(p[4] == doctest::Approx(0.01));   // carrier but unexposed

    model.coding = GeneticCoding::additive;
    model.relative_risk = 20.0;
    const auto pa = penetrance(model, g, e);
    CHECK(pa[1] == doctest::Approx(0.01 * 21));
    CHECK(pa[2] == doctest::Approx(0.01 * 41));
}

TEST_CASE("disease model validation rejects impossible penetrance") {
    DiseaseModel model;
    model.baseline_prevalence = 0.05;
    model.relative_risk = 50.0;  // 0.05 * 51 > 1
    CHECK_THROWS_AS(model.validate(), ConfigError);
    model.relative_risk = 10.0;
    CHECK_NOTHROW(model.validate());
    model.baseline_prevalence = 0.0;
    CHECK_THROWS_AS(model.validate(), ConfigError);
}

TEST_CASE("waffect draws have the exact case count") {
    Rng rng(123);
    for (const std::size_t n : {1UL, 2UL, 17UL, 100UL}) {
        PenetranceVector p(n);
        for (auto& v : p) v = 0.05 + 0.9 * rng.uniform();
        for (const std::size_t c : {std::size_t{0}, n / 2, n}) {
            const auto rep = waffect_sample(p, c, rng);
            REQUIRE(rep.y.size() == n);
            std::size_t sum = 0;
            for (const auto v : rep.y) sum += v;
            CHECK(sum == c);
            CHECK(rep.n_cases == c);
        }
    }
}

TEST_CASE("brute force law for a small penetrance vector") {
    const PenetranceVector p = {0.6, 0.2, 0.2};
    const auto law = brute_force_conditional_law(p, 1);
    REQUIRE(law.size() == 3);
    // Unconditioned masses: {100}: .6*.8*.8, {010}: .4*.2*.8, {001}: .4*.8*.2
    CHECK(law.at(0b001) == doctest::Approx(0.75).epsilon(1e-12));
    CHECK(law.at(0b010) == doctest::Approx(0.125).epsilon(1e-12));
    CHECK(law.at(0b100) == doctest::Approx(0.125).epsilon(1e-12));
    double total = 0.0;
    for (const auto& [mask, prob] : law) total += prob;
    CHECK(total == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("sampler matches the enumerated law on a small case") {
    const PenetranceVector p = {0.9, 0.5, 0.3, 0.2, 0.45, 0.65};
    const std::size_t c = 3;
    const auto law = brute_force_conditional_law(p, c);
    const ConditionalBernoulliSampler sampler(p, c);
    Rng rng(2024);
    std::map<std::uint32_t, std::uint64_t> counts;
    const std::size_t draws = 40000;
    for (std::size_t t = 0; t < draws; ++t) {
        const auto y = sampler.sample(rng);
        std::uint32_t mask = 0;
        for (std::size_t i = 0; i < y.size(); ++i) {
            mask |= static_cast<std::uint32_t>(y[i]) << i;
        }
        ++counts[mask];
    }
    std::vector<double> expected;
    std::vector<std::uint64_t> observed;
    for (const auto& [mask, prob] : law) {
        expected.push_back(prob * static_cast<double>(draws));
        observed.push_back(counts.count(mask) ? counts.at(mask) : 0);
    }
    // No mass outside the support.
    std::uint64_t seen = 0;
    for (const auto& [mask, cnt] : counts) {
        REQUIRE(law.count(mask) == 1);
        seen += cnt;
    }
    CHECK(seen == draws);
    CHECK(testutil::chi2_gof_p(expected, observed) > 0.001);
}

TEST_CASE("degenerate penetrances pin individuals deterministically") {
    // p=1 individuals must be cases, p=0 must be controls.
    const PenetranceVector p = {1.0, 0.3, 0.0, 0.6};
    const ConditionalBernoulliSampler sampler(p, 2);
    Rng rng(7);
    for (int t = 0; t < 50; ++t) {
        const auto y = sampler.sample(rng);
        CHECK(y[0] == 1);
        CHECK(y[2] == 0);
        CHECK(y[1] + y[3] == 1);
    }
}

TEST_CASE("infeasible case counts are rejected") {
    CHECK_THROWS_AS(ConditionalBernoulliSampler({1.0, 1.0, 0.5}, 1),
                    ConfigError);
    CHECK_THROWS_AS(ConditionalBernoulliSampler({0.0, 0.0, 0.5}, 2),
                    ConfigError);
    CHECK_THROWS_AS(ConditionalBernoulliSampler({0.5, 0.5}, 3), ConfigError);
}

TEST_CASE("log normalizer matches direct summation") {
    const PenetranceVector p = {0.1, 0.7, 0.4, 0.25, 0.55};
    const std::size_t c = 2;
    double direct = 0.0;
    for (std::uint32_t mask = 0; mask < 32; ++mask) {
        if (__builtin_popcount(mask) != static_cast<int>(c)) continue;
        double m = 1.0;
        for (std::size_t i = 0; i < p.size(); ++i) {
            m *= (mask >> i) & 1 ? p[i] : 1.0 - p[i];
        }
        direct += m;
    }
    const ConditionalBernoulliSampler sampler(p, c);
    CHECK(sampler.log_normalizer() ==
          doctest::Approx(std::log(direct)).epsilon(1e-12));
}

TEST_CASE("permuted phenotypes are uniform over exact-count vectors") {
    Rng rng(31);
    std::size_t ones_at_0 = 0;
    const std::size_t draws = 20000;
    for (std::size_t t = 0; t < draws; ++t) {
        const auto rep = permute_phenotypes(5, 2, rng);
        std::size_t sum = 0;
        for (const auto v : rep.y) sum += v;
        REQUIRE(sum == 2);
        ones_at_0 += rep.y[0];
    }
    // Marginal P(y_0 = 1) = 2/5; allow 5 sigma.
    const double phat = static_cast<double>(ones_at_0) / draws;
    const double sd = std::sqrt(0.4 * 0.6 / draws);
    CHECK(std::fabs(phat - 0.4) < 5 * sd);
}

TEST_CASE("replicate names are zero-padded and stable") {
    CHECK(replicate_name(Hypothesis::h0, 0) == "H0_000");
    CHECK(replicate_name(Hypothesis::h1, 42) == "H1_042");
    CHECK(replicate_name(Hypothesis::h1, 1000) == "H1_1000");
}

TEST_CASE("generate_replicates is thread-invariant and round trips") {
    DiseaseModel model;
    model.baseline_prevalence = 0.05;
    model.relative_risk = 4.0;
    model.causal_snp_id = "snp1";
    const std::size_t n = 60;
    std::vector<std::uint8_t> g(n), e(n);
    Rng rng(8);
    for (std::size_t i = 0; i < n; ++i) {
        g[i] = static_cast<std::uint8_t>((rng.uniform() < 0.3 ? 1 : 0) +
                                         (rng.uniform() < 0.3 ? 1 : 0));
        e[i] = rng.uniform() < 0.5 ? 1 : 0;
    }
    const auto one = generate_replicates(model, g, e, 5, 7, 20, 99, 1);
    const auto four = generate_replicates(model, g, e, 5, 7, 20, 99, 4);
    REQUIRE(one.replicates.size() == 12);
    for (std::size_t r = 0; r < one.replicates.size(); ++r) {
        CHECK(one.replicates[r].y == four.replicates[r].y);
        CHECK(one.replicates[r].hypothesis == four.replicates[r].hypothesis);
        std::size_t sum = 0;
        for (const auto v : one.replicates[r].y) sum += v;
        CHECK(sum == 20);
    }
    CHECK(one.replicates.front().hypothesis == Hypothesis::h0);
    CHECK(one.replicates.back().hypothesis == Hypothesis::h1);

    const auto dir = testutil::temp_dir("phenosim_tsv");
    std::vector<std::string> ids;
    for (std::size_t i = 0; i < n; ++i) ids.push_back("I" + std::to_string(i));
    write_replicates(one, ids, dir / "phen.tsv", {"config_hash=0 seed=99"});
    const auto back = read_replicates(dir / "phen.tsv");
    REQUIRE(back.replicates.size() == one.replicates.size());
    CHECK(back.n == one.n);
    CHECK(back.n_cases == one.n_cases);
    for (std::size_t r = 0; r < one.replicates.size(); ++r) {
        CHECK(back.replicates[r].y == one.replicates[r].y);
    }
}
