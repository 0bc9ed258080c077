#include <doctest.h>

#include <stdexcept>

#include <cmath>
#include <numbers>
#include <random>
#include <vector>

#include "fpnoise/statistics.hpp"

using namespace fpnoise;

namespace {

// Oracle: Phi by Simpson integration of the standard normal density from -10
// (Phi(-10) ~ 7.6e-24, far below the comparison tolerance).
double phi_by_integration(double z) {
    const double lo = -10.0;
    if (z <= lo) return 0.0;
    const int n = 200000;  // even
    const double h = (z - lo) / n;
    auto density = [](double t) {
        return std::exp(-0.5 * t * t) / std::sqrt(2.0 * std::numbers::pi);
    };
    double acc = density(lo) + density(z);
    for (int i = 1; i < n; ++i) acc += density(lo + i * h) * (i % 2 ? 4.0 : 2.0);
    return acc * h / 3.0;
}

// Oracle: covariance entry by entry, straight from the definition.
Matrix covariance_brute_force(const std::vector<NoiseSample>& samples) {
    const std::size_t n = samples.size();
    const std::size_t k = samples.front().eta.size();
    std::vector<double> mean(k, 0.0);
    for (const auto& s : samples)
        for (std::size_t j = 0; j < k; ++j) mean[j] += s.eta[j];
    for (double& m : mean) m /= static_cast<double>(n);
    Matrix out(k, k);
    for (std::size_t a = 0; a < k; ++a)
        for (std::size_t b = 0; b < k; ++b) {
            double acc = 0.0;
            for (const auto& s : samples)
                acc += (s.eta[a] - mean[a]) * (s.eta[b] - mean[b]);
            out.at(a, b) = acc / static_cast<double>(n - 1);
        }
    return out;
}

NoiseSample sample_from_eta(const std::vector<double>& eta) {
    std::vector<double> y(eta.size(), 0.0);
    std::vector<double> yt(eta);
    return NoiseSample::from_outputs(y, yt);
}

}  // namespace

TEST_CASE("estimate_sigma") {
    NoiseSample zero = NoiseSample::from_outputs({1.0, 2.0}, {1.0, 2.0});
    CHECK(estimate_sigma({zero, zero}) == 0.0);

    NoiseSample s = NoiseSample::from_outputs({0.0, 0.0}, {3.0, 4.0});
    CHECK(estimate_sigma({s}) == std::sqrt(12.5));  // sqrt(25 / (1*2))

    CHECK_THROWS_AS(estimate_sigma({}), std::invalid_argument);
    NoiseSample other = NoiseSample::from_outputs({0.0}, {1.0});
    CHECK_THROWS_AS(estimate_sigma({s, other}), std::invalid_argument);

    // The noise level is a raw RMSE (no mean centering), while the covariance
    // does center: a constant offset shows up in sigma but not in the matrix.
    NoiseSample offset = NoiseSample::from_outputs({0.0, 0.0}, {1.0, 1.0});
    CHECK(estimate_sigma({offset, offset}) == 1.0);
    CHECK(estimate_covariance({offset, offset}).degenerate);
}

TEST_CASE("normal_cdf accuracy and shape") {
    CHECK(normal_cdf(0.0) == 0.5);
    // Frozen from the integration oracle (40-digit quadrature).
    CHECK(std::fabs(normal_cdf(-1.0) - 0.15865525393145705) < 1e-13);
    CHECK(std::fabs(normal_cdf(-2.0) - 0.022750131948179207) < 1e-13);

    for (double z : {-3.0, -1.7, -0.4, 0.3, 1.1, 2.6})
        CHECK(std::fabs(normal_cdf(z) - phi_by_integration(z)) < 1e-12);

    std::mt19937_64 gen(17);
    double prev_z = -40.0, prev_phi = normal_cdf(-40.0);
    for (int i = 0; i < 10000; ++i) {
        const double z = prev_z + static_cast<double>(gen() >> 11) * 0x1.0p-53 * 0.01;
        const double p = normal_cdf(z);
        REQUIRE(p >= prev_phi);  // monotone non-decreasing
        REQUIRE(std::fabs(normal_cdf(z) + normal_cdf(-z) - 1.0) < 1e-12);
        prev_z = z;
        prev_phi = p;
    }
}

TEST_CASE("predicted_flip_rate") {
    const double sigma = 0.7;
    const double sqrt2 = std::numbers::sqrt2;
    const std::vector<double> at_one(5, sigma * sqrt2);
    CHECK(std::fabs(predicted_flip_rate(at_one, sigma) - 0.15865525393145705) < 1e-12);

    CHECK(predicted_flip_rate({0.0, 0.0}, 1.0) == 0.5);
    CHECK(predicted_flip_rate({60.0}, 1.0) == 0.0);  // underflow-deep margin
    CHECK(predicted_flip_rate({50.0}, 1.0) < 1e-250);  // astronomically small but not yet 0

    CHECK_THROWS_AS(predicted_flip_rate({1.0}, 0.0), std::invalid_argument);
    CHECK_THROWS_AS(predicted_flip_rate({-0.5}, 1.0), std::invalid_argument);
    CHECK_THROWS_AS(predicted_flip_rate({}, 1.0), std::invalid_argument);

    // Common rescaling of margins and sigma leaves the rate unchanged.
    std::mt19937_64 gen(3);
    std::vector<double> margins(50);
    for (double& m : margins) m = static_cast<double>(gen() >> 11) * 0x1.0p-53 * 3.0;
    const double base = predicted_flip_rate(margins, 0.9);
    for (double scale : {1e-3, 0.25, 7.0, 1e4}) {
        std::vector<double> scaled = margins;
        for (double& m : scaled) m *= scale;
        CHECK(std::fabs(predicted_flip_rate(scaled, 0.9 * scale) - base) <= 1e-12);
    }
}

TEST_CASE("empirical_flip_rate and the worked three-logit example") {
    NoiseSample same = NoiseSample::from_outputs({2.0, 1.0}, {2.0, 1.0});
    CHECK(empirical_flip_rate({same, same}) == 0.0);

    // argmax moves from index 0 to index 1 on a 2e-4 perturbation.
    NoiseSample flip =
        NoiseSample::from_outputs({2.31, 2.29, 2.10}, {2.3099, 2.3103, 2.10});
    CHECK(argmax_index(flip.y) == 0);
    CHECK(argmax_index(flip.y_tilde) == 1);
    CHECK(empirical_flip_rate({flip}) == 1.0);
    CHECK(std::fabs(logit_margin(flip.y) - 0.02) < 1e-12);
    NoiseSample same3 = NoiseSample::from_outputs({2.0, 1.0, 0.5}, {2.0, 1.0, 0.5});
    CHECK(empirical_flip_rate({flip, same3, same3, same3}) == 0.25);

    // Adding a constant to every logit of both outputs changes nothing.
    NoiseSample shifted = NoiseSample::from_outputs({2.31 + 5.0, 2.29 + 5.0, 2.10 + 5.0},
                                                    {2.3099 + 5.0, 2.3103 + 5.0, 2.10 + 5.0});
    CHECK(empirical_flip_rate({shifted}) == 1.0);

    // Ties break toward the lowest index on both sides.
    NoiseSample tie = NoiseSample::from_outputs({1.0, 1.0}, {1.0, 1.0});
    CHECK(empirical_flip_rate({tie}) == 0.0);
}

TEST_CASE("js_divergence") {
    const std::vector<double> p{0.5, 0.5}, q{0.75, 0.25};
    CHECK(js_divergence(p, p) == 0.0);
    CHECK(std::fabs(js_divergence({1.0, 0.0}, {0.0, 1.0}) - std::numbers::ln2) <= 1e-15);
    // Frozen from direct high-precision evaluation of the two KL terms.
    CHECK(std::fabs(js_divergence(p, q) - 0.03382207556860523) < 1e-12);
    CHECK(std::fabs(js_divergence(p, q) - js_divergence(q, p)) < 1e-12);

    CHECK_THROWS_AS(js_divergence({1.0}, {0.5, 0.5}), std::invalid_argument);
    CHECK_THROWS_AS(js_divergence({0.6, 0.6}, {0.5, 0.5}), std::invalid_argument);
    CHECK_THROWS_AS(js_divergence({1.5, -0.5}, {0.5, 0.5}), std::invalid_argument);

    // Random distributions stay within [0, ln 2] and symmetric.
    std::mt19937_64 gen(29);
    auto random_dist = [&gen](std::size_t k) {
        std::vector<double> d(k);
        double sum = 0.0;
        for (double& v : d) {
            v = static_cast<double>(gen() >> 11) * 0x1.0p-53 + 1e-6;
            sum += v;
        }
        for (double& v : d) v /= sum;
        return d;
    };
    for (int i = 0; i < 2000; ++i) {
        const auto a = random_dist(8), b = random_dist(8);
        const double d = js_divergence(a, b);
        REQUIRE(d >= 0.0);
        REQUIRE(d <= std::numbers::ln2);
        REQUIRE(std::fabs(d - js_divergence(b, a)) < 1e-12);
    }
}

TEST_CASE("softmax") {
    const auto thirds = softmax({4.2, 4.2, 4.2});
    for (double v : thirds) CHECK(std::fabs(v - 1.0 / 3.0) <= 1e-15);

    const auto quarters = softmax({0.0, std::log(3.0)});
    CHECK(std::fabs(quarters[0] - 0.25) < 1e-12);
    CHECK(std::fabs(quarters[1] - 0.75) < 1e-12);

    std::mt19937_64 gen(31);
    for (int i = 0; i < 200; ++i) {
        std::vector<double> logits(16);
        for (double& v : logits) v = (static_cast<double>(gen() >> 11) * 0x1.0p-53 - 0.5) * 20;
        const auto s = softmax(logits);
        double sum = 0.0;
        for (double v : s) sum += v;
        REQUIRE(std::fabs(sum - 1.0) < 1e-12);
        REQUIRE(argmax_index(s) == argmax_index(logits));
        std::vector<double> shifted = logits;
        for (double& v : shifted) v += 123.5;
        const auto s2 = softmax(shifted);
        for (std::size_t j = 0; j < s.size(); ++j) REQUIRE(std::fabs(s[j] - s2[j]) < 1e-12);
    }
}

TEST_CASE("expected_js") {
    NoiseSample same = NoiseSample::from_outputs({1.0, 2.0}, {1.0, 2.0});
    CHECK(expected_js({same, same}) == 0.0);

    NoiseSample moved = NoiseSample::from_outputs({1.0, 2.0}, {1.2, 1.9});
    CHECK(expected_js({moved}) == js_divergence(softmax(moved.y), softmax(moved.y_tilde)));
}

TEST_CASE("estimate_covariance") {
    SUBCASE("K=1 reduces to the sample variance") {
        std::vector<NoiseSample> samples;
        for (double e : {1.0, 2.0, 4.0}) samples.push_back(sample_from_eta({e}));
        const auto cov = estimate_covariance(samples);
        // mean 7/3; var = ((1-7/3)^2+(2-7/3)^2+(4-7/3)^2)/2
        const double mean = 7.0 / 3.0;
        const double expect =
            ((1 - mean) * (1 - mean) + (2 - mean) * (2 - mean) + (4 - mean) * (4 - mean)) / 2.0;
        CHECK(std::fabs(cov.sigma_matrix.at(0, 0) - expect) <= 1e-14);
        CHECK(cov.off_diagonal_ratio == 0.0);
        CHECK(cov.trace == cov.sigma_matrix.at(0, 0));
    }

    SUBCASE("two-sample fixture") {
        const auto cov =
            estimate_covariance({sample_from_eta({1.0, 1.0}), sample_from_eta({-1.0, -1.0})});
        CHECK(cov.sigma_matrix.at(0, 0) == 2.0);
        CHECK(cov.sigma_matrix.at(0, 1) == 2.0);
        CHECK(cov.sigma_matrix.at(1, 0) == 2.0);
        CHECK(cov.sigma_matrix.at(1, 1) == 2.0);
        CHECK(cov.off_diagonal_ratio == 0.5);
        CHECK(cov.trace == 4.0);
        CHECK_FALSE(cov.degenerate);
    }

    SUBCASE("diagonal structure and degenerate input") {
        const auto diag =
            estimate_covariance({sample_from_eta({1.0, 0.0}), sample_from_eta({-1.0, 0.0})});
        CHECK(diag.off_diagonal_ratio == 0.0);

        const auto degen =
            estimate_covariance({sample_from_eta({3.0, 3.0}), sample_from_eta({3.0, 3.0})});
        CHECK(degen.degenerate);
        CHECK(degen.off_diagonal_ratio == 0.0);
        CHECK(degen.trace == 0.0);
    }

    SUBCASE("matches the brute-force oracle on random instances") {
        std::mt19937_64 gen(41);
        for (int inst = 0; inst < 100; ++inst) {
            const std::size_t k = 1 + gen() % 5;
            const std::size_t n = 2 + gen() % 9;
            std::vector<NoiseSample> samples;
            for (std::size_t i = 0; i < n; ++i) {
                std::vector<double> eta(k);
                for (double& e : eta)
                    e = (static_cast<double>(gen() >> 11) * 0x1.0p-53 - 0.5) * 4.0;
                samples.push_back(sample_from_eta(eta));
            }
            const auto got = estimate_covariance(samples);
            const auto want = covariance_brute_force(samples);
            for (std::size_t a = 0; a < k; ++a)
                for (std::size_t b = 0; b < k; ++b)
                    REQUIRE(std::fabs(got.sigma_matrix.at(a, b) - want.at(a, b)) < 1e-12);
            // Exact symmetry and PSD within the stated tolerance.
            for (std::size_t a = 0; a < k; ++a)
                for (std::size_t b = 0; b < k; ++b)
                    REQUIRE(got.sigma_matrix.at(a, b) == got.sigma_matrix.at(b, a));
            REQUIRE(is_positive_semidefinite(got.sigma_matrix,
                                             1e-9 * std::max(got.trace, 1.0)));
        }
    }

    CHECK_THROWS_AS(estimate_covariance({sample_from_eta({1.0})}), std::invalid_argument);
}

TEST_CASE("is_positive_semidefinite") {
    Matrix ok(2, 2);
    ok.at(0, 0) = 1.0;
    ok.at(1, 1) = 2.0;
    CHECK(is_positive_semidefinite(ok, 1e-12));

    Matrix indefinite(2, 2);
    indefinite.at(0, 0) = 1.0;
    indefinite.at(0, 1) = 2.0;
    indefinite.at(1, 0) = 2.0;
    indefinite.at(1, 1) = 1.0;  // eigenvalues 3 and -1
    CHECK_FALSE(is_positive_semidefinite(indefinite, 1e-9));
    CHECK(is_positive_semidefinite(indefinite, 1.5));
}

TEST_CASE("simulate_iid_null") {
    SUBCASE("tiny sigma with a positive margin never flips") {
        const auto res = simulate_iid_null({{1.0, 0.0}}, 1e-12, 7, 1000);
        CHECK(res.flip_stats.empirical_rate == 0.0);
        CHECK(res.flip_stats.flip_count == 0);
    }

    SUBCASE("margin sigma*sqrt(2) lands on Phi(-1) within 3 binomial SE") {
        const double sigma = 0.5;
        const double margin = sigma * std::numbers::sqrt2;
        const std::size_t n = 100000;
        const auto res = simulate_iid_null({{margin, 0.0}}, sigma, 1234, n);
        const double p = 0.15865525393145705;
        const double se = std::sqrt(p * (1 - p) / static_cast<double>(n));
        CHECK(std::fabs(res.flip_stats.predicted_rate.value() - p) < 1e-12);
        CHECK(std::fabs(res.flip_stats.empirical_rate - p) <= 3.0 * se);
        // The re-estimated noise level tracks the injected one.
        CHECK(res.sigma == doctest::Approx(sigma).epsilon(0.02));
    }

    SUBCASE("finite-sample R_off of truly diagonal noise is measured, not zero") {
        std::vector<std::vector<double>> ys(1, std::vector<double>(16, 0.0));
        const auto res = simulate_iid_null(ys, 1.0, 99, 100);
        CHECK(res.covariance.off_diagonal_ratio > 0.0);
        CHECK(res.covariance.off_diagonal_ratio < 1.0);
    }

    SUBCASE("deterministic in the seed") {
        const auto a = simulate_iid_null({{0.3, 0.0}}, 0.2, 5, 500);
        const auto b = simulate_iid_null({{0.3, 0.0}}, 0.2, 5, 500);
        CHECK(a.flip_stats.empirical_rate == b.flip_stats.empirical_rate);
        CHECK(a.sigma == b.sigma);
        CHECK(a.expected_js == b.expected_js);
        CHECK(a.covariance.off_diagonal_ratio == b.covariance.off_diagonal_ratio);
    }

    CHECK_THROWS_AS(simulate_iid_null({{1.0, 0.0}}, 0.0, 1, 100), std::invalid_argument);
    CHECK_THROWS_AS(simulate_iid_null({{1.0, 0.0}}, 1.0, 1, 1), std::invalid_argument);
    CHECK_THROWS_AS(simulate_iid_null({}, 1.0, 1, 100), std::invalid_argument);
}
