#include "fpnoise/report_io.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <ostream>
#include <stdexcept>

namespace fpnoise {

using nlohmann::json;

nlohmann::json config_to_json(const ExperimentConfig& cfg) {
    return json{
        {"d_in", cfg.d_in},
        {"d_out", cfg.d_out},
        {"batch", cfg.batch},
        {"n_trials", cfg.n_trials},
        {"precision", cfg.precision.name()},
        {"schedule_single", cfg.schedule_single.to_string()},
        {"schedule_batched", cfg.schedule_batched.to_string()},
        {"seed", cfg.seed},
        {"widened_accumulator", cfg.widened_accumulator},
        {"resample_weights", cfg.resample_weights},
        {"keep_covariance_matrix", cfg.keep_covariance_matrix},
    };
}

ExperimentConfig config_from_json(const nlohmann::json& j, ExperimentConfig base) {
    if (!j.is_object()) throw std::invalid_argument("config: expected a JSON object");
    ExperimentConfig cfg = std::move(base);
    for (const auto& [key, value] : j.items()) {
        if (key == "d_in") cfg.d_in = value.get<std::size_t>();
        else if (key == "d_out") cfg.d_out = value.get<std::size_t>();
        else if (key == "batch") cfg.batch = value.get<std::size_t>();
        else if (key == "n_trials") cfg.n_trials = value.get<std::size_t>();
        else if (key == "precision") cfg.precision = PrecisionFormat::parse(value.get<std::string>());
        else if (key == "schedule_single") cfg.schedule_single = ReductionSchedule::parse(value.get<std::string>());
        else if (key == "schedule_batched") cfg.schedule_batched = ReductionSchedule::parse(value.get<std::string>());
        else if (key == "seed") cfg.seed = value.get<std::uint64_t>();
        else if (key == "widened_accumulator") cfg.widened_accumulator = value.get<bool>();
        else if (key == "resample_weights") cfg.resample_weights = value.get<bool>();
        else if (key == "keep_covariance_matrix") cfg.keep_covariance_matrix = value.get<bool>();
        else
            throw std::invalid_argument("config: unknown key \"" + key + "\"");
    }
    return cfg;
}

namespace {

json flip_stats_to_json(const FlipStats& fs) {
    json j{
        {"empirical_rate", fs.empirical_rate},
        {"flip_count", fs.flip_count},
        {"n_trials", fs.n_trials},
        {"sigma", fs.sigma},
    };
    if (fs.predicted_rate)
        j["predicted_rate"] = *fs.predicted_rate;
    else
        j["predicted_rate"] = nullptr;
    return j;
}

FlipStats flip_stats_from_json(const json& j) {
    FlipStats fs;
    fs.empirical_rate = j.at("empirical_rate").get<double>();
    fs.flip_count = j.at("flip_count").get<std::size_t>();
    fs.n_trials = j.at("n_trials").get<std::size_t>();
    fs.sigma = j.at("sigma").get<double>();
    if (!j.at("predicted_rate").is_null())
        fs.predicted_rate = j.at("predicted_rate").get<double>();
    return fs;
}

json covariance_to_json(const CovarianceSummary& cov, bool keep_matrix) {
    json j{
        {"k", cov.k},
        {"n_samples", cov.n_samples},
        {"trace", cov.trace},
        {"off_diagonal_ratio", cov.off_diagonal_ratio},
        {"degenerate", cov.degenerate},
    };
    if (keep_matrix) j["matrix"] = cov.sigma_matrix.data;  // row-major k*k
    return j;
}

CovarianceSummary covariance_from_json(const json& j) {
    CovarianceSummary cov;
    cov.k = j.at("k").get<std::size_t>();
    cov.n_samples = j.at("n_samples").get<std::size_t>();
    cov.trace = j.at("trace").get<double>();
    cov.off_diagonal_ratio = j.at("off_diagonal_ratio").get<double>();
    cov.degenerate = j.at("degenerate").get<bool>();
    if (j.contains("matrix")) {
        const std::size_t k = cov.k;
        cov.sigma_matrix = Matrix(k, k);
        cov.sigma_matrix.data = j.at("matrix").get<std::vector<double>>();
        if (cov.sigma_matrix.data.size() != k * k)
            throw std::invalid_argument("report: covariance matrix size mismatch");
    }
    return cov;
}

json null_to_json(const IidNullResult& null) {
    return json{
        {"sigma", null.sigma},
        {"flip_stats", flip_stats_to_json(null.flip_stats)},
        {"expected_js", null.expected_js},
        {"off_diagonal_ratio", null.covariance.off_diagonal_ratio},
        {"trace", null.covariance.trace},
        {"n_samples", null.covariance.n_samples},
        {"covariance_degenerate", null.covariance.degenerate},
    };
}

IidNullResult null_from_json(const json& j) {
    IidNullResult null;
    null.sigma = j.at("sigma").get<double>();
    null.flip_stats = flip_stats_from_json(j.at("flip_stats"));
    null.expected_js = j.at("expected_js").get<double>();
    null.covariance.off_diagonal_ratio = j.at("off_diagonal_ratio").get<double>();
    null.covariance.trace = j.at("trace").get<double>();
    null.covariance.n_samples = j.at("n_samples").get<std::size_t>();
    null.covariance.degenerate = j.at("covariance_degenerate").get<bool>();
    return null;
}

}  // namespace

nlohmann::json report_to_json(const NoiseReport& report) {
    json j{
        {"schema_version", kReportSchemaVersion},
        {"config", config_to_json(report.config)},
        {"sigma", report.sigma},
        {"degenerate", report.degenerate},
        {"calibration_failure", report.calibration_failure},
        {"flip_stats", flip_stats_to_json(report.flip_stats)},
        {"expected_js", report.expected_js},
        {"covariance",
         covariance_to_json(report.covariance, report.config.keep_covariance_matrix)},
        {"margins_histogram",
         json{{"bin_count", report.margins_histogram.counts.size()},
              {"max_margin", report.margins_histogram.max_margin},
              {"counts", report.margins_histogram.counts}}},
        {"wall_time_seconds", report.wall_time_seconds},
    };
    j["null_baseline"] =
        report.null_baseline ? null_to_json(*report.null_baseline) : json(nullptr);
    return j;
}

NoiseReport report_from_json(const nlohmann::json& j) {
    const int version = j.at("schema_version").get<int>();
    if (version != kReportSchemaVersion)
        throw std::invalid_argument("report: unsupported schema_version " +
                                    std::to_string(version));
    NoiseReport report;
    report.config = config_from_json(j.at("config"));
    report.sigma = j.at("sigma").get<double>();
    report.degenerate = j.at("degenerate").get<bool>();
    report.calibration_failure = j.at("calibration_failure").get<bool>();
    report.flip_stats = flip_stats_from_json(j.at("flip_stats"));
    report.expected_js = j.at("expected_js").get<double>();
    report.covariance = covariance_from_json(j.at("covariance"));
    const json& hist = j.at("margins_histogram");
    report.margins_histogram.max_margin = hist.at("max_margin").get<double>();
    report.margins_histogram.counts = hist.at("counts").get<std::vector<std::uint64_t>>();
    if (!j.at("null_baseline").is_null())
        report.null_baseline = null_from_json(j.at("null_baseline"));
    report.wall_time_seconds = j.at("wall_time_seconds").get<double>();
    return report;
}

std::string report_to_string(const NoiseReport& report) {
    return report_to_json(report).dump(2) + "\n";
}

void save_report(const NoiseReport& report, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open '" + path + "' for writing");
    out << report_to_string(report);
    if (!out) throw std::runtime_error("failed writing report to '" + path + "'");
}

NoiseReport load_report(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open report '" + path + "'");
    json j;
    try {
        in >> j;
    } catch (const json::parse_error& e) {
        throw std::invalid_argument("report '" + path + "' is not valid JSON: " + e.what());
    }
    return report_from_json(j);
}

namespace {

std::string format_rate_percent(const std::optional<double>& rate) {
    if (!rate) return "n/a";
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.4g", *rate * 100.0);
    return buf;
}

}  // namespace

void print_report_table(std::ostream& os, const NoiseReport& report) {
    char line[256];
    std::snprintf(line, sizeof(line), "%-10s %-12s %-14s %-15s %-12s %-10s %-12s\n",
                  "precision", "sigma", "flip emp (%)", "flip pred (%)", "E[D_JS]",
                  "R_off (%)", "R_off null (%)");
    os << line;
    const std::string pred = format_rate_percent(report.flip_stats.predicted_rate);
    const std::string null_roff =
        report.null_baseline
            ? [&] {
                  char buf[32];
                  std::snprintf(buf, sizeof(buf), "%.2f",
                                report.null_baseline->covariance.off_diagonal_ratio * 100.0);
                  return std::string(buf);
              }()
            : std::string("n/a");
    std::snprintf(line, sizeof(line), "%-10s %-12.3e %-14.2f %-15s %-12.3e %-10.2f %-12s\n",
                  report.config.precision.name().c_str(), report.sigma,
                  report.flip_stats.empirical_rate * 100.0, pred.c_str(),
                  report.expected_js, report.covariance.off_diagonal_ratio * 100.0,
                  null_roff.c_str());
    os << line;
    if (report.degenerate)
        os << "DEGENERATE: sigma == 0, the two computation paths are identical\n";
    if (report.calibration_failure)
        os << "CALIBRATION FAILURE: f16 sigma " << report.sigma << " outside ["
           << kSigmaRegimeMin << ", " << kSigmaRegimeMax
           << "]; the schedule pair does not land in the expected regime\n";
}

void write_covariance_csv(std::ostream& os, const NoiseReport& report) {
    const Matrix& sigma = report.covariance.sigma_matrix;
    if (sigma.rows == 0 || sigma.cols == 0)
        throw std::invalid_argument(
            "report has no retained covariance matrix; re-run with "
            "keep_covariance_matrix=true (--keep-covariance)");
    char buf[128];
    std::snprintf(buf, sizeof(buf), "# K=%zu N=%zu R_off=%.17g\n", sigma.rows,
                  report.covariance.n_samples, report.covariance.off_diagonal_ratio);
    os << buf << "i,j,value\n";
    for (std::size_t i = 0; i < sigma.rows; ++i)
        for (std::size_t j = 0; j < sigma.cols; ++j) {
            std::snprintf(buf, sizeof(buf), "%zu,%zu,%.17g\n", i, j, sigma.at(i, j));
            os << buf;
        }
}

}  // namespace fpnoise
