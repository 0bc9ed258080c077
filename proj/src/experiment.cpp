#include "fpnoise/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <functional>
#include <stdexcept>
#include <thread>
#include <vector>

#include "fpnoise/rng.hpp"

namespace fpnoise {

ExperimentConfig ExperimentConfig::full_scale() { return ExperimentConfig{}; }

ExperimentConfig ExperimentConfig::desk_scale() {
    ExperimentConfig cfg;
    cfg.d_in = 128;
    cfg.d_out = 256;
    cfg.n_trials = 1000;
    return cfg;
}

void ExperimentConfig::validate() const {
    if (d_in < 1) throw std::invalid_argument("config: d_in must be >= 1");
    if (d_out < 2)
        throw std::invalid_argument("config: d_out must be >= 2 (flip analysis needs a runner-up logit)");
    if (batch < 1) throw std::invalid_argument("config: batch must be >= 1");
    if (n_trials < 2) throw std::invalid_argument("config: n_trials must be >= 2");
    // Constructor-validated fields can still arrive broken through parsing.
    if (schedule_single.kind == ScheduleKind::Blocked && schedule_single.block_size < 1)
        throw std::invalid_argument("config: schedule_single block_size must be >= 1");
    if (schedule_batched.kind == ScheduleKind::Blocked && schedule_batched.block_size < 1)
        throw std::invalid_argument("config: schedule_batched block_size must be >= 1");
}

namespace {

std::vector<double> sample_quantized_normals(std::size_t n, std::uint64_t seed,
                                             const Quantizer& qz) {
    NormalSampler normals(seed);
    std::vector<double> out(n);
    for (double& v : out) v = qz(normals.next());
    return out;
}

Matrix generate_weights(const ExperimentConfig& cfg, std::size_t trial_index) {
    const std::uint64_t index = cfg.resample_weights ? trial_index : 0;
    const Quantizer qz(cfg.precision);
    Matrix W(cfg.d_in, cfg.d_out);
    W.data = sample_quantized_normals(cfg.d_in * cfg.d_out,
                                      substream_seed(cfg.seed, Stream::Weights, index), qz);
    return W;
}

NoiseSample compute_trial(const ExperimentConfig& cfg, std::size_t trial_index,
                          const Matrix& W) {
    const Quantizer qz(cfg.precision);
    const std::vector<double> x = sample_quantized_normals(
        cfg.d_in, substream_seed(cfg.seed, Stream::Input, trial_index), qz);

    MatmulSpec spec;
    spec.d_in = cfg.d_in;
    spec.d_out = cfg.d_out;
    spec.batch = cfg.batch;
    spec.precision = cfg.precision;
    spec.accumulator_widened = cfg.widened_accumulator;

    std::vector<double> y = matmul_single(x, W, spec, cfg.schedule_single);
    std::vector<double> y_tilde = matmul_batched_row0(
        x, W, spec, cfg.schedule_batched,
        substream_seed(cfg.seed, Stream::BatchFiller, trial_index));
    return NoiseSample::from_outputs(std::move(y), std::move(y_tilde));
}

// Fans trial chunks across workers. Chunk boundaries are fixed, every chunk
// writes disjoint result slots, and nothing downstream depends on completion
// order, so results do not vary with the worker count.
void for_each_trial(std::size_t n_trials, std::size_t n_workers,
                    const std::function<void(std::size_t)>& body) {
    if (n_workers == 0) n_workers = std::thread::hardware_concurrency();
    if (n_workers < 1) n_workers = 1;
    constexpr std::size_t kChunk = 16;
    const std::size_t n_chunks = (n_trials + kChunk - 1) / kChunk;
    if (n_workers == 1 || n_chunks <= 1) {
        for (std::size_t i = 0; i < n_trials; ++i) body(i);
        return;
    }
    std::atomic<std::size_t> next_chunk{0};
    std::vector<std::thread> workers;
    workers.reserve(n_workers);
    for (std::size_t w = 0; w < n_workers; ++w) {
        workers.emplace_back([&]() {
            for (;;) {
                const std::size_t chunk = next_chunk.fetch_add(1);
                if (chunk >= n_chunks) return;
                const std::size_t begin = chunk * kChunk;
                const std::size_t end = std::min(begin + kChunk, n_trials);
                for (std::size_t i = begin; i < end; ++i) body(i);
            }
        });
    }
    for (std::thread& t : workers) t.join();
}

}  // namespace

MarginsHistogram build_margins_histogram(const std::vector<double>& margins) {
    MarginsHistogram h;
    h.counts.assign(kMarginsHistogramBins, 0);
    if (margins.empty()) return h;
    for (double m : margins) h.max_margin = std::max(h.max_margin, m);
    if (h.max_margin == 0.0) {
        h.counts[0] = margins.size();
        return h;
    }
    const double scale = static_cast<double>(kMarginsHistogramBins) / h.max_margin;
    for (double m : margins) {
        auto bin = static_cast<std::size_t>(m * scale);
        if (bin >= kMarginsHistogramBins) bin = kMarginsHistogramBins - 1;
        ++h.counts[bin];
    }
    return h;
}

NoiseReport run_experiment(const ExperimentConfig& cfg, std::size_t n_workers) {
    cfg.validate();
    const auto t_start = std::chrono::steady_clock::now();

    // Fixed-weight mode generates W once; resampling regenerates per trial.
    Matrix shared_W;
    if (!cfg.resample_weights) shared_W = generate_weights(cfg, 0);

    std::vector<NoiseSample> samples(cfg.n_trials);
    for_each_trial(cfg.n_trials, n_workers, [&](std::size_t i) {
        if (cfg.resample_weights) {
            const Matrix W = generate_weights(cfg, i);
            samples[i] = compute_trial(cfg, i, W);
        } else {
            samples[i] = compute_trial(cfg, i, shared_W);
        }
    });

    NoiseReport report;
    report.config = cfg;
    report.sigma = estimate_sigma(samples);
    report.degenerate = (report.sigma == 0.0);
    report.calibration_failure =
        cfg.precision.kind == PrecisionKind::Float16 && !report.degenerate &&
        (report.sigma < kSigmaRegimeMin || report.sigma > kSigmaRegimeMax);
    report.expected_js = expected_js(samples);
    report.covariance = estimate_covariance(samples);

    FlipStats& fs = report.flip_stats;
    fs.sigma = report.sigma;
    fs.n_trials = cfg.n_trials;
    fs.empirical_rate = empirical_flip_rate(samples);
    fs.flip_count = static_cast<std::size_t>(
        std::llround(fs.empirical_rate * static_cast<double>(cfg.n_trials)));
    fs.margins.reserve(cfg.n_trials);
    for (const NoiseSample& s : samples) fs.margins.push_back(logit_margin(s.y));
    if (!report.degenerate) fs.predicted_rate = predicted_flip_rate(fs.margins, report.sigma);
    report.margins_histogram = build_margins_histogram(fs.margins);

    if (!report.degenerate) {
        // Matched null: same sigma, same base logits (hence margins, K and N).
        std::vector<std::vector<double>> y_list;
        y_list.reserve(cfg.n_trials);
        for (const NoiseSample& s : samples) y_list.push_back(s.y);
        report.null_baseline = simulate_iid_null(
            y_list, report.sigma, substream_seed(cfg.seed, Stream::NullNoise, 0),
            cfg.n_trials);
    }

    report.wall_time_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();
    return report;
}

NoiseSample regenerate_trial(const ExperimentConfig& cfg, std::size_t trial_index) {
    cfg.validate();
    if (trial_index >= cfg.n_trials)
        throw std::out_of_range("regenerate_trial: trial index " +
                                std::to_string(trial_index) + " out of range (n_trials " +
                                std::to_string(cfg.n_trials) + ")");
    const Matrix W = generate_weights(cfg, trial_index);
    return compute_trial(cfg, trial_index, W);
}

}  // namespace fpnoise
