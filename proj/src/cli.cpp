#include "fpnoise/cli.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "fpnoise/report_io.hpp"

namespace fpnoise {

namespace {

// Thrown for unreadable/unwritable files; everything shaped like a bad
// configuration value surfaces as std::invalid_argument.
struct IoError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

std::string default_output_path(const std::string& filename) {
    if (const char* dir = std::getenv("FPNOISE_OUT_DIR"); dir && *dir)
        return std::string(dir) + "/" + filename;
    return filename;
}

nlohmann::json load_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open '" + path + "'");
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::parse_error& e) {
        throw std::invalid_argument("'" + path + "' is not valid JSON: " + e.what());
    }
    return j;
}

struct RunOptions {
    std::string config_path;
    std::string output_path;
    std::string profile;  // "", "desk" or "full"
    std::optional<std::size_t> d_in, d_out, batch, n_trials;
    std::optional<std::string> precision, schedule_single, schedule_batched;
    std::optional<std::uint64_t> seed;
    std::optional<bool> widened, resample_weights;
    bool keep_covariance = false;
    std::size_t workers = 0;
};

ExperimentConfig resolve_run_config(const RunOptions& opt) {
    ExperimentConfig cfg;
    bool seed_given = false;
    if (opt.profile == "desk") cfg = ExperimentConfig::desk_scale();
    else if (opt.profile == "full" || opt.profile.empty()) cfg = ExperimentConfig::full_scale();
    else throw std::invalid_argument("unknown profile '" + opt.profile + "' (desk or full)");

    if (!opt.config_path.empty()) {
        const nlohmann::json j = load_json_file(opt.config_path);
        cfg = config_from_json(j, cfg);  // layered onto the profile; unknown keys rejected
        seed_given = j.contains("seed");
    }
    if (opt.d_in) cfg.d_in = *opt.d_in;
    if (opt.d_out) cfg.d_out = *opt.d_out;
    if (opt.batch) cfg.batch = *opt.batch;
    if (opt.n_trials) cfg.n_trials = *opt.n_trials;
    if (opt.precision) cfg.precision = PrecisionFormat::parse(*opt.precision);
    if (opt.schedule_single) cfg.schedule_single = ReductionSchedule::parse(*opt.schedule_single);
    if (opt.schedule_batched) cfg.schedule_batched = ReductionSchedule::parse(*opt.schedule_batched);
    if (opt.seed) {
        cfg.seed = *opt.seed;
        seed_given = true;
    }
    if (opt.widened) cfg.widened_accumulator = *opt.widened;
    if (opt.resample_weights) cfg.resample_weights = *opt.resample_weights;
    if (opt.keep_covariance) cfg.keep_covariance_matrix = true;

    if (!seed_given)
        throw std::invalid_argument(
            "no seed given; pass --seed (or a config file with \"seed\") so the "
            "report is reproducible");
    cfg.validate();
    return cfg;
}

int cmd_run(const RunOptions& opt) {
    const ExperimentConfig cfg = resolve_run_config(opt);
    const NoiseReport report = run_experiment(cfg, opt.workers);
    const std::string out_path =
        opt.output_path.empty() ? default_output_path("report.json") : opt.output_path;
    save_report(report, out_path);
    print_report_table(std::cout, report);
    std::cout << "report written to " << out_path << "\n";
    return kExitOk;
}

struct ValidateNullOptions {
    double sigma = 0.0;
    std::vector<double> margins;
    std::string margins_file;
    std::size_t n_draws = 1000000;
    std::optional<std::uint64_t> seed;
};

int cmd_validate_null(const ValidateNullOptions& opt) {
    if (opt.sigma <= 0.0) throw std::invalid_argument("--sigma must be > 0");
    if (!opt.seed) throw std::invalid_argument("no seed given; pass --seed");
    std::vector<double> margins = opt.margins;
    if (!opt.margins_file.empty()) {
        std::ifstream in(opt.margins_file);
        if (!in) throw IoError("cannot open margins file '" + opt.margins_file + "'");
        double m;
        while (in >> m) margins.push_back(m);
        if (!in.eof())
            throw std::invalid_argument("margins file '" + opt.margins_file +
                                        "' contains non-numeric data");
    }
    if (margins.empty())
        throw std::invalid_argument("no margins given; pass --margin or --margins-file");
    for (double m : margins)
        if (m < 0.0) throw std::invalid_argument("margins must be >= 0");

    // Two-logit base vectors [margin, 0]; draws cycle through them.
    std::vector<std::vector<double>> y_list;
    y_list.reserve(margins.size());
    for (double m : margins) y_list.push_back({m, 0.0});

    const IidNullResult result =
        simulate_iid_null(y_list, opt.sigma, *opt.seed, opt.n_draws);
    const double predicted = result.flip_stats.predicted_rate.value();
    const double empirical = result.flip_stats.empirical_rate;
    const double stderr_binom =
        std::sqrt(std::max(predicted * (1.0 - predicted), 0.0) /
                  static_cast<double>(opt.n_draws));
    const double diff = std::fabs(empirical - predicted);
    const bool ok = diff <= 3.0 * stderr_binom;

    char line[256];
    std::snprintf(line, sizeof(line),
                  "predicted flip rate  %.6f\n"
                  "empirical flip rate  %.6f  (+/- %.6f at 3 binomial SE, n=%zu)\n"
                  "difference           %.6f  -> %s\n",
                  predicted, empirical, 3.0 * stderr_binom, opt.n_draws, diff,
                  ok ? "agreement" : "DISAGREEMENT");
    std::cout << line;
    return ok ? kExitOk : kExitValidationFailure;
}

int cmd_show(const std::string& report_path, bool as_json) {
    std::ifstream probe(report_path);
    if (!probe) throw IoError("cannot open report '" + report_path + "'");
    probe.close();
    const NoiseReport report = load_report(report_path);
    if (as_json)
        std::cout << report_to_string(report);
    else
        print_report_table(std::cout, report);
    return kExitOk;
}

int cmd_dump_cov(const std::string& report_path, const std::string& out_path) {
    std::ifstream probe(report_path);
    if (!probe) throw IoError("cannot open report '" + report_path + "'");
    probe.close();
    const NoiseReport report = load_report(report_path);
    if (out_path.empty()) {
        write_covariance_csv(std::cout, report);
        return kExitOk;
    }
    std::ofstream out(out_path);
    if (!out) throw IoError("cannot open '" + out_path + "' for writing");
    write_covariance_csv(out, report);
    if (!out) throw IoError("failed writing '" + out_path + "'");
    return kExitOk;
}

}  // namespace

int cli_main(const std::vector<std::string>& args) {
    CLI::App app{
        "Reduced-precision matmul noise toolkit: emulates reduction-order "
        "divergence and evaluates its statistics"};
    app.require_subcommand(1);
    app.footer(
        "Exit codes: 0 success, 2 configuration error, 3 I/O error, "
        "4 validation failure.\n"
        "FPNOISE_OUT_DIR sets the default output directory.");

    RunOptions run_opt;
    CLI::App* run = app.add_subcommand("run", "run an experiment and write a JSON report");
    run->add_option("--config", run_opt.config_path, "JSON config file");
    run->add_option("--out", run_opt.output_path, "report output path");
    run->add_option("--profile", run_opt.profile, "dimension profile: desk or full");
    run->add_option("--d-in", run_opt.d_in, "reduction length");
    run->add_option("--d-out", run_opt.d_out, "logit count K");
    run->add_option("--batch", run_opt.batch, "batch size B");
    run->add_option("--n-trials", run_opt.n_trials, "number of trials");
    run->add_option("--precision", run_opt.precision, "f16, bf16 or f32");
    run->add_option("--schedule-single", run_opt.schedule_single,
                    "single-path reduction schedule");
    run->add_option("--schedule-batched", run_opt.schedule_batched,
                    "batched-path reduction schedule");
    run->add_option("--seed", run_opt.seed, "master seed (required)");
    run->add_option("--widened", run_opt.widened,
                    "widened (binary64) accumulator: true/false");
    run->add_option("--resample-weights", run_opt.resample_weights,
                    "regenerate W per trial instead of reusing one W: true/false");
    run->add_flag("--keep-covariance", run_opt.keep_covariance,
                  "retain the full covariance matrix in the report");
    run->add_option("--workers", run_opt.workers, "worker threads (0 = hardware)");

    ValidateNullOptions vn_opt;
    CLI::App* vn = app.add_subcommand(
        "validate-null", "Monte Carlo check of the analytic flip probability");
    vn->add_option("--sigma", vn_opt.sigma, "noise level (> 0)")->required();
    vn->add_option("--margin", vn_opt.margins, "fixed logit margin (repeatable)");
    vn->add_option("--margins-file", vn_opt.margins_file,
                   "file with one margin per line");
    vn->add_option("--n-draws", vn_opt.n_draws, "Monte Carlo draws");
    vn->add_option("--seed", vn_opt.seed, "master seed (required)");

    std::string show_path;
    bool show_json = false;
    CLI::App* show = app.add_subcommand("show", "print a stored report");
    show->add_option("--report", show_path, "report JSON path")->required();
    show->add_flag("--json", show_json, "re-emit the canonical JSON instead of the table");

    std::string cov_report_path, cov_out_path;
    CLI::App* cov = app.add_subcommand("dump-cov",
                                       "dump the retained covariance matrix as CSV");
    cov->add_option("--report", cov_report_path, "report JSON path")->required();
    cov->add_option("--out", cov_out_path, "CSV output path (stdout when absent)");

    std::vector<char*> argv;
    std::vector<std::string> storage = args;
    std::string prog = "fpnoise";
    argv.push_back(prog.data());
    for (std::string& a : storage) argv.push_back(a.data());

    try {
        app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);  // prints the diagnostic (names the offending flag)
        return kExitConfigError;
    }

    try {
        if (run->parsed()) return cmd_run(run_opt);
        if (vn->parsed()) return cmd_validate_null(vn_opt);
        if (show->parsed()) return cmd_show(show_path, show_json);
        if (cov->parsed()) return cmd_dump_cov(cov_report_path, cov_out_path);
    } catch (const IoError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitIoError;
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitConfigError;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitIoError;
    }
    return kExitConfigError;
}

}  // namespace fpnoise
