// Noise estimators and metrics: global noise level, analytic and empirical
// prediction-flip rates, Jensen-Shannon divergence of softmax outputs, the
// sample covariance of the noise, and its off-diagonal mass ratio. A seeded
// i.i.d. Gaussian simulation provides the matched null baseline every
// structured-noise claim is compared against.

#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <vector>

#include "fpnoise/matmul.hpp"

namespace fpnoise {

// One trial's ideal output y, perturbed output y~, and noise eta = y~ - y.
struct NoiseSample {
    std::vector<double> eta;
    std::vector<double> y;
    std::vector<double> y_tilde;

    static NoiseSample from_outputs(std::vector<double> y, std::vector<double> y_tilde);
    std::size_t k() const { return y.size(); }
};

struct CovarianceSummary {
    Matrix sigma_matrix;             // K x K sample covariance
    std::size_t k = 0;               // logit count (kept even when the matrix is dropped)
    double off_diagonal_ratio = 0.0; // sum_{i!=j}|S_ij| / sum_{i,j}|S_ij|
    double trace = 0.0;
    std::size_t n_samples = 0;
    bool degenerate = false;         // all-zero covariance (identical samples)
};

struct FlipStats {
    double empirical_rate = 0.0;
    // Absent when the noise model is degenerate (sigma == 0).
    std::optional<double> predicted_rate;
    double sigma = 0.0;
    std::vector<double> margins;  // per-trial logit margin of y
    std::size_t flip_count = 0;
    std::size_t n_trials = 0;
};

// Everything the i.i.d. null simulation measures on its synthetic samples.
struct IidNullResult {
    double sigma = 0.0;  // RMSE re-estimated from the synthetic noise
    FlipStats flip_stats;
    double expected_js = 0.0;
    CovarianceSummary covariance;
};

// Global RMSE: sqrt( (1/(N*K)) * sum_i ||y~_i - y_i||^2 ). Throws on an empty
// sample list or inconsistent K.
double estimate_sigma(const std::vector<NoiseSample>& samples);

// Standard normal CDF, |error| <= 1e-12, via the complementary error function.
double normal_cdf(double z);

// Mean over margins of Phi(-margin / (sigma * sqrt(2))). Throws when
// sigma <= 0 (model degenerate) or any margin is negative.
double predicted_flip_rate(const std::vector<double>& margins, double sigma);

// Fraction of samples whose argmax differs between y and y~; ties break
// toward the lowest index on both sides.
double empirical_flip_rate(const std::vector<NoiseSample>& samples);

// Jensen-Shannon divergence in nats, 0*log(0/x) == 0 convention; range
// [0, ln 2]. Throws on length mismatch, negative entries, or inputs not
// summing to 1 within 1e-9.
double js_divergence(const std::vector<double>& p, const std::vector<double>& q);

// Max-subtracted softmax; sums to 1 within 1e-12 and preserves the argmax.
std::vector<double> softmax(const std::vector<double>& logits);

// Mean of js_divergence(softmax(y_i), softmax(y~_i)) over samples.
double expected_js(const std::vector<NoiseSample>& samples);

// Sample covariance (1/(N-1)) * sum (eta_i - mean)(eta_i - mean)^T plus the
// off-diagonal ratio. Requires N >= 2.
CovarianceSummary estimate_covariance(const std::vector<NoiseSample>& samples);

// Index of the largest entry, lowest index on ties.
std::size_t argmax_index(const std::vector<double>& v);

// Margin between the top and second logits; requires K >= 2.
double logit_margin(const std::vector<double>& y);

// True when the smallest eigenvalue of the (symmetric) matrix is >=
// -tolerance, established through a Cholesky factorization of S + tol*I.
bool is_positive_semidefinite(const Matrix& sigma, double tolerance);

// Draws n_draws synthetic trials with eta ~ N(0, sigma^2 I): trial t uses the
// base logits y_list[t % y_list.size()], forms y~ = y + eta with a seeded
// generator, and runs every estimator above on the synthetic samples.
// Requires sigma > 0 and n_draws >= 2.
IidNullResult simulate_iid_null(const std::vector<std::vector<double>>& y_list,
                                double sigma, std::uint64_t seed,
                                std::size_t n_draws);

}  // namespace fpnoise
