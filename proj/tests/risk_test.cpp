#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include "svo/risk.hpp"

using svo::risk::EmpiricalSample;

namespace {

// Oracle: smallest sample value whose empirical CDF reaches p, by stepping
// through the CDF directly.
double quantile_by_cdf(const std::vector<double>& values, double p) {
    std::vector<double> sorted = values;
    std::sort(sorted.begin(), sorted.end());
    const double n = static_cast<double>(sorted.size());
    for (std::size_t i = 0; i < sorted.size(); ++i) {
        double cdf = 0.0;
        for (double v : values) {
            if (v <= sorted[i]) cdf += 1.0 / n;
        }
        if (cdf >= p - 1e-15) return sorted[i];
    }
    return sorted.back();
}

// Oracle: optimize the variational objective over eta. The objective is
// piecewise linear in eta with breakpoints at the sample values, so scanning
// the sample values is exact.
double ru_super_by_grid(const std::vector<double>& values, double p) {
    double best = 1e300;
    for (double eta : values) {
        double acc = 0.0;
        for (double z : values) acc += std::max(z - eta, 0.0);
        best = std::min(best, eta + acc / (static_cast<double>(values.size()) * (1.0 - p)));
    }
    return best;
}

double ru_sub_by_grid(const std::vector<double>& values, double p) {
    double best = -1e300;
    for (double eta : values) {
        double acc = 0.0;
        for (double z : values) acc += std::max(eta - z, 0.0);
        best = std::max(best, eta - acc / (static_cast<double>(values.size()) * p));
    }
    return best;
}

std::vector<double> random_sample(std::mt19937_64& rng, std::size_t max_n = 60) {
    std::uniform_int_distribution<std::size_t> len(1, max_n);
    std::uniform_real_distribution<double> val(-10.0, 10.0);
    std::vector<double> out(len(rng));
    for (double& v : out) v = val(rng);
    return out;
}

std::vector<double> negate(const std::vector<double>& values) {
    std::vector<double> out = values;
    for (double& v : out) v = -v;
    return out;
}

}  // namespace

TEST_CASE("empirical quantile examples") {
    EmpiricalSample s({1, 2, 3, 4});
    CHECK(svo::risk::empirical_quantile(s, 0.5) == 2.0);
    CHECK(svo::risk::empirical_quantile(s, 0.5) == quantile_by_cdf({1, 2, 3, 4}, 0.5));

    EmpiricalSample constant({7.5, 7.5, 7.5});
    for (double p : {0.1, 0.5, 0.99, 1.0}) {
        CHECK(svo::risk::empirical_quantile(constant, p) == 7.5);
    }

    EmpiricalSample three({1, 2, 3});
    CHECK(svo::risk::empirical_quantile(three, 1.0) == 3.0);

    CHECK_THROWS(svo::risk::empirical_quantile(s, 0.0));
    CHECK_THROWS(svo::risk::empirical_quantile(s, -0.1));
    CHECK_THROWS(EmpiricalSample({}));
}

TEST_CASE("quantile matches CDF-step oracle on random samples") {
    std::mt19937_64 rng(11);
    for (int trial = 0; trial < 200; ++trial) {
        const auto values = random_sample(rng);
        EmpiricalSample s(values);
        std::uniform_real_distribution<double> pdist(0.01, 1.0);
        const double p = pdist(rng);
        CHECK(svo::risk::empirical_quantile(s, p) == quantile_by_cdf(values, p));
    }
}

TEST_CASE("superquantile examples and extensions") {
    EmpiricalSample s({1, 2, 3, 4});
    CHECK(svo::risk::superquantile(s, 0.5) == doctest::Approx(3.5).epsilon(1e-12));
    CHECK(svo::risk::superquantile(s, 0.0) == doctest::Approx(2.5).epsilon(1e-12));
    CHECK(svo::risk::superquantile(s, 1.0) == 4.0);

    EmpiricalSample singleton({5});
    for (double p : {0.0, 0.3, 0.5, 1.0}) {
        CHECK(svo::risk::superquantile(singleton, p) == doctest::Approx(5.0));
    }
}

TEST_CASE("subquantile examples and extensions") {
    EmpiricalSample s({1, 2, 3, 4});
    CHECK(svo::risk::subquantile(s, 0.5) == doctest::Approx(1.5).epsilon(1e-12));
    CHECK(svo::risk::subquantile(s, 1.0) == doctest::Approx(2.5).epsilon(1e-12));
    CHECK(svo::risk::subquantile(s, 0.0) == 1.0);
}

TEST_CASE("variational forms at the empirical quantile") {
    EmpiricalSample s({1, 2, 3, 4});

    auto super_half = svo::risk::superquantile_ru(s, 0.5);
    CHECK(super_half.value == doctest::Approx(3.5).epsilon(1e-12));
    CHECK(super_half.eta == 2.0);

    auto super_hi = svo::risk::superquantile_ru(s, 0.75);
    CHECK(super_hi.value == doctest::Approx(4.0).epsilon(1e-12));
    CHECK(super_hi.eta == 3.0);

    auto sub_half = svo::risk::subquantile_ru(s, 0.5);
    CHECK(sub_half.value == doctest::Approx(1.5).epsilon(1e-12));
    CHECK(sub_half.eta == 2.0);

    auto sub_lo = svo::risk::subquantile_ru(s, 0.25);
    CHECK(sub_lo.value == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(sub_lo.eta == 1.0);

    EmpiricalSample constant({3, 3, 3, 3});
    CHECK(svo::risk::superquantile_ru(constant, 0.5).value == doctest::Approx(3.0));
    CHECK(svo::risk::superquantile_ru(constant, 0.5).eta == 3.0);
    CHECK(svo::risk::subquantile_ru(constant, 0.5).value == doctest::Approx(3.0));

    CHECK_THROWS(svo::risk::superquantile_ru(s, 0.0));
    CHECK_THROWS(svo::risk::superquantile_ru(s, 1.0));
    CHECK_THROWS(svo::risk::subquantile_ru(s, 0.0));
    CHECK_THROWS(svo::risk::subquantile_ru(s, 1.0));
}

TEST_CASE("variational value agrees with the eta-grid oracle") {
    std::mt19937_64 rng(23);
    std::uniform_real_distribution<double> pdist(0.05, 0.95);
    for (int trial = 0; trial < 40; ++trial) {
        auto values = random_sample(rng, 30);
        if (values.size() < 2) values.push_back(values.front() + 1.0);
        EmpiricalSample s(values);
        const double p = pdist(rng);
        CHECK(svo::risk::superquantile_ru(s, p).value ==
              doctest::Approx(ru_super_by_grid(values, p)).epsilon(1e-6));
        CHECK(svo::risk::subquantile_ru(s, p).value ==
              doctest::Approx(ru_sub_by_grid(values, p)).epsilon(1e-6));
    }
}

TEST_CASE("duality between subquantile and superquantile") {
    std::mt19937_64 rng(37);
    std::uniform_real_distribution<double> pdist(0.01, 0.99);
    for (int trial = 0; trial < 300; ++trial) {
        const auto values = random_sample(rng);
        EmpiricalSample s(values);
        EmpiricalSample neg(negate(values));
        const double p = pdist(rng);
        CHECK(svo::risk::subquantile(s, p) ==
              doctest::Approx(-svo::risk::superquantile(neg, 1.0 - p)).epsilon(0).scale(1).epsilon(1e-10));
    }
}

TEST_CASE("quantile symmetry away from CDF jump levels") {
    std::mt19937_64 rng(41);
    for (int trial = 0; trial < 300; ++trial) {
        const auto values = random_sample(rng);
        const double n = static_cast<double>(values.size());
        EmpiricalSample s(values);
        EmpiricalSample neg(negate(values));
        std::uniform_real_distribution<double> pdist(0.001, 0.999);
        double p = pdist(rng);
        // nudge off jump levels k/n
        if (std::abs(p * n - std::round(p * n)) < 1e-6) p += 0.5 / n / 7.0;
        if (p <= 0.0 || p >= 1.0) continue;
        CHECK(svo::risk::empirical_quantile(neg, 1.0 - p) ==
              -svo::risk::empirical_quantile(s, p));
    }
}

TEST_CASE("sandwich and monotonicity in the level") {
    std::mt19937_64 rng(53);
    for (int trial = 0; trial < 100; ++trial) {
        const auto values = random_sample(rng);
        EmpiricalSample s(values);
        const double mean = s.mean();
        double prev_super = svo::risk::superquantile(s, 0.0);
        double prev_sub = svo::risk::subquantile(s, 0.0);
        for (double p : {0.0, 0.1, 0.25, 0.5, 0.75, 0.9, 1.0}) {
            const double sup = svo::risk::superquantile(s, p);
            const double sub = svo::risk::subquantile(s, p);
            CHECK(sub <= mean + 1e-12);
            CHECK(mean <= sup + 1e-12);
            CHECK(sup >= prev_super - 1e-12);
            CHECK(sub >= prev_sub - 1e-12);
            prev_super = sup;
            prev_sub = sub;
        }
    }
}

TEST_CASE("affine equivariance") {
    std::mt19937_64 rng(67);
    std::uniform_real_distribution<double> adist(0.1, 5.0);
    std::uniform_real_distribution<double> bdist(-3.0, 3.0);
    std::uniform_real_distribution<double> pdist(0.05, 0.95);
    for (int trial = 0; trial < 100; ++trial) {
        const auto values = random_sample(rng);
        const double a = adist(rng), b = bdist(rng), p = pdist(rng);
        std::vector<double> mapped = values;
        for (double& v : mapped) v = a * v + b;
        EmpiricalSample s(values), t(mapped);
        CHECK(svo::risk::superquantile(t, p) ==
              doctest::Approx(a * svo::risk::superquantile(s, p) + b).epsilon(1e-10));
        CHECK(svo::risk::subquantile(t, p) ==
              doctest::Approx(a * svo::risk::subquantile(s, p) + b).epsilon(1e-10));
    }
}
