#include "fpnoise/statistics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <string>

#include "fpnoise/rng.hpp"

namespace fpnoise {

namespace {

void require_samples(const std::vector<NoiseSample>& samples, std::size_t min_n,
                     const char* where) {
    if (samples.size() < min_n)
        throw std::invalid_argument(std::string(where) + ": needs at least " +
                                    std::to_string(min_n) + " samples, got " +
                                    std::to_string(samples.size()));
    const std::size_t k = samples.front().k();
    if (k < 1) throw std::invalid_argument(std::string(where) + ": K must be >= 1");
    for (const NoiseSample& s : samples)
        if (s.k() != k || s.eta.size() != k || s.y_tilde.size() != k)
            throw std::invalid_argument(std::string(where) +
                                        ": samples have inconsistent logit counts");
}

}  // namespace

NoiseSample NoiseSample::from_outputs(std::vector<double> y,
                                      std::vector<double> y_tilde) {
    if (y.size() != y_tilde.size())
        throw std::invalid_argument("NoiseSample: y and y~ lengths differ");
    NoiseSample s;
    s.eta.resize(y.size());
    for (std::size_t i = 0; i < y.size(); ++i) s.eta[i] = y_tilde[i] - y[i];
    s.y = std::move(y);
    s.y_tilde = std::move(y_tilde);
    return s;
}

double estimate_sigma(const std::vector<NoiseSample>& samples) {
    require_samples(samples, 1, "estimate_sigma");
    const std::size_t k = samples.front().k();
    double sum_sq = 0.0;
    for (const NoiseSample& s : samples)
        for (double e : s.eta) sum_sq += e * e;
    return std::sqrt(sum_sq / (static_cast<double>(samples.size()) * static_cast<double>(k)));
}

double normal_cdf(double z) {
    return 0.5 * std::erfc(-z / std::numbers::sqrt2);
}

double predicted_flip_rate(const std::vector<double>& margins, double sigma) {
    if (sigma <= 0.0)
        throw std::invalid_argument("predicted_flip_rate: model degenerate (sigma <= 0)");
    if (margins.empty())
        throw std::invalid_argument("predicted_flip_rate: no margins");
    const double scale = sigma * std::numbers::sqrt2;
    double sum = 0.0;
    for (double m : margins) {
        if (m < 0.0)
            throw std::invalid_argument("predicted_flip_rate: negative margin");
        sum += normal_cdf(-m / scale);
    }
    return sum / static_cast<double>(margins.size());
}

std::size_t argmax_index(const std::vector<double>& v) {
    if (v.empty()) throw std::invalid_argument("argmax_index: empty vector");
    return static_cast<std::size_t>(
        std::max_element(v.begin(), v.end()) - v.begin());
}

double logit_margin(const std::vector<double>& y) {
    if (y.size() < 2)
        throw std::invalid_argument("logit_margin: needs at least two logits");
    double top = -std::numeric_limits<double>::infinity();
    double second = top;
    for (double v : y) {
        if (v > top) {
            second = top;
            top = v;
        } else if (v > second) {
            second = v;
        }
    }
    return top - second;
}

double empirical_flip_rate(const std::vector<NoiseSample>& samples) {
    require_samples(samples, 1, "empirical_flip_rate");
    std::size_t flips = 0;
    for (const NoiseSample& s : samples)
        if (argmax_index(s.y) != argmax_index(s.y_tilde)) ++flips;
    return static_cast<double>(flips) / static_cast<double>(samples.size());
}

double js_divergence(const std::vector<double>& p, const std::vector<double>& q) {
    if (p.size() != q.size())
        throw std::invalid_argument("js_divergence: length mismatch");
    if (p.empty()) throw std::invalid_argument("js_divergence: empty input");
    double sum_p = 0.0, sum_q = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) {
        if (p[i] < 0.0 || q[i] < 0.0)
            throw std::invalid_argument("js_divergence: negative probability");
        sum_p += p[i];
        sum_q += q[i];
    }
    if (std::fabs(sum_p - 1.0) > 1e-9 || std::fabs(sum_q - 1.0) > 1e-9)
        throw std::invalid_argument("js_divergence: inputs must each sum to 1");

    double acc = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) {
        const double m = 0.5 * (p[i] + q[i]);
        if (p[i] > 0.0) acc += 0.5 * p[i] * std::log(p[i] / m);
        if (q[i] > 0.0) acc += 0.5 * q[i] * std::log(q[i] / m);
    }
    // Roundoff can push a zero divergence a hair negative; ln 2 is the exact
    // upper bound of the definition.
    return std::clamp(acc, 0.0, std::numbers::ln2);
}

std::vector<double> softmax(const std::vector<double>& logits) {
    if (logits.empty()) throw std::invalid_argument("softmax: empty input");
    const double top = *std::max_element(logits.begin(), logits.end());
    std::vector<double> out(logits.size());
    double denom = 0.0;
    for (std::size_t i = 0; i < logits.size(); ++i) {
        out[i] = std::exp(logits[i] - top);
        denom += out[i];
    }
    for (double& v : out) v /= denom;
    return out;
}

double expected_js(const std::vector<NoiseSample>& samples) {
    require_samples(samples, 1, "expected_js");
    double sum = 0.0;
    for (const NoiseSample& s : samples)
        sum += js_divergence(softmax(s.y), softmax(s.y_tilde));
    return sum / static_cast<double>(samples.size());
}

CovarianceSummary estimate_covariance(const std::vector<NoiseSample>& samples) {
    require_samples(samples, 2, "estimate_covariance");
    const std::size_t n = samples.size();
    const std::size_t k = samples.front().k();

    std::vector<double> mean(k, 0.0);
    for (const NoiseSample& s : samples)
        for (std::size_t j = 0; j < k; ++j) mean[j] += s.eta[j];
    for (double& m : mean) m /= static_cast<double>(n);

    // Accumulate the lower triangle of sum (eta - mean)(eta - mean)^T and
    // mirror it, so the result is symmetric exactly.
    Matrix sigma(k, k);
    std::vector<double> centered(k);
    for (const NoiseSample& s : samples) {
        for (std::size_t j = 0; j < k; ++j) centered[j] = s.eta[j] - mean[j];
        for (std::size_t r = 0; r < k; ++r) {
            const double cr = centered[r];
            double* row = &sigma.data[r * k];
            for (std::size_t c = 0; c <= r; ++c) row[c] += cr * centered[c];
        }
    }
    const double scale = 1.0 / static_cast<double>(n - 1);
    double trace = 0.0;
    double off_mass = 0.0, total_mass = 0.0;
    for (std::size_t r = 0; r < k; ++r) {
        for (std::size_t c = 0; c <= r; ++c) {
            const double v = sigma.at(r, c) * scale;
            sigma.at(r, c) = v;
            sigma.at(c, r) = v;
            const double a = std::fabs(v);
            if (r == c) {
                trace += v;
                total_mass += a;
            } else {
                off_mass += 2.0 * a;
                total_mass += 2.0 * a;
            }
        }
    }

    CovarianceSummary out;
    out.sigma_matrix = std::move(sigma);
    out.k = k;
    out.trace = trace;
    out.n_samples = n;
    out.degenerate = (total_mass == 0.0);
    out.off_diagonal_ratio = out.degenerate ? 0.0 : off_mass / total_mass;
    return out;
}

bool is_positive_semidefinite(const Matrix& sigma, double tolerance) {
    if (sigma.rows != sigma.cols)
        throw std::invalid_argument("is_positive_semidefinite: matrix not square");
    const std::size_t k = sigma.rows;
    // Cholesky of S + tol*I; success bounds the smallest eigenvalue of S
    // from below by -tol.
    Matrix chol = sigma;
    for (std::size_t i = 0; i < k; ++i) chol.at(i, i) += tolerance;
    for (std::size_t c = 0; c < k; ++c) {
        double diag = chol.at(c, c);
        for (std::size_t i = 0; i < c; ++i) diag -= chol.at(c, i) * chol.at(c, i);
        if (diag < 0.0) return false;
        const double root = std::sqrt(diag);
        chol.at(c, c) = root;
        if (root == 0.0) {
            // Zero pivot: remaining column entries must vanish too.
            for (std::size_t r = c + 1; r < k; ++r) {
                double v = chol.at(r, c);
                for (std::size_t i = 0; i < c; ++i) v -= chol.at(r, i) * chol.at(c, i);
                if (std::fabs(v) > tolerance) return false;
                chol.at(r, c) = 0.0;
            }
            continue;
        }
        for (std::size_t r = c + 1; r < k; ++r) {
            double v = chol.at(r, c);
            for (std::size_t i = 0; i < c; ++i) v -= chol.at(r, i) * chol.at(c, i);
            chol.at(r, c) = v / root;
        }
    }
    return true;
}

IidNullResult simulate_iid_null(const std::vector<std::vector<double>>& y_list,
                                double sigma, std::uint64_t seed,
                                std::size_t n_draws) {
    if (sigma <= 0.0)
        throw std::invalid_argument("simulate_iid_null: sigma must be > 0");
    if (n_draws < 2)
        throw std::invalid_argument("simulate_iid_null: n_draws must be >= 2");
    if (y_list.empty())
        throw std::invalid_argument("simulate_iid_null: empty base logit list");
    const std::size_t k = y_list.front().size();
    if (k < 1) throw std::invalid_argument("simulate_iid_null: K must be >= 1");
    for (const auto& y : y_list)
        if (y.size() != k)
            throw std::invalid_argument("simulate_iid_null: inconsistent logit counts");

    std::vector<NoiseSample> samples;
    samples.reserve(n_draws);
    for (std::size_t t = 0; t < n_draws; ++t) {
        const std::vector<double>& y = y_list[t % y_list.size()];
        NormalSampler normals(substream_seed(seed, Stream::NullNoise, t));
        std::vector<double> y_tilde(k);
        for (std::size_t j = 0; j < k; ++j) y_tilde[j] = y[j] + sigma * normals.next();
        samples.push_back(NoiseSample::from_outputs(y, std::move(y_tilde)));
    }

    IidNullResult out;
    out.sigma = estimate_sigma(samples);
    out.expected_js = expected_js(samples);
    out.covariance = estimate_covariance(samples);

    FlipStats& fs = out.flip_stats;
    fs.sigma = sigma;
    fs.n_trials = n_draws;
    fs.empirical_rate = empirical_flip_rate(samples);
    fs.flip_count = static_cast<std::size_t>(
        std::llround(fs.empirical_rate * static_cast<double>(n_draws)));
    if (k >= 2) {
        fs.margins.reserve(n_draws);
        for (const NoiseSample& s : samples) fs.margins.push_back(logit_margin(s.y));
        fs.predicted_rate = predicted_flip_rate(fs.margins, sigma);
    }
    return out;
}

}  // namespace fpnoise
