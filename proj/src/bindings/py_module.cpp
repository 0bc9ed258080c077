// Python bindings for the core operations: rounding emulation, scheduled
// matmuls, the noise estimators and the experiment harness.

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "fpnoise/experiment.hpp"
#include "fpnoise/report_io.hpp"

namespace py = pybind11;
using namespace fpnoise;

namespace {

Matrix matrix_from_rows(const std::vector<std::vector<double>>& rows) {
    if (rows.empty()) throw std::invalid_argument("matrix needs at least one row");
    Matrix m(rows.size(), rows.front().size());
    for (std::size_t r = 0; r < rows.size(); ++r) {
        if (rows[r].size() != m.cols)
            throw std::invalid_argument("matrix rows have inconsistent lengths");
        for (std::size_t c = 0; c < m.cols; ++c) m.at(r, c) = rows[r][c];
    }
    return m;
}

std::vector<std::vector<double>> matrix_to_rows(const Matrix& m) {
    std::vector<std::vector<double>> rows(m.rows, std::vector<double>(m.cols));
    for (std::size_t r = 0; r < m.rows; ++r)
        for (std::size_t c = 0; c < m.cols; ++c) rows[r][c] = m.at(r, c);
    return rows;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Reduction-order matmul noise emulation and statistics";

    py::class_<PrecisionFormat>(m, "PrecisionFormat")
        .def_static("float16", &PrecisionFormat::float16)
        .def_static("bfloat16", &PrecisionFormat::bfloat16)
        .def_static("float32_ref", &PrecisionFormat::float32_ref)
        .def_static("from_bits", &PrecisionFormat::from_bits, py::arg("mantissa_bits"),
                    py::arg("exponent_bits"))
        .def_static("parse", &PrecisionFormat::parse, py::arg("name"))
        .def_readonly("mantissa_bits", &PrecisionFormat::mantissa_bits)
        .def_readonly("exponent_bits", &PrecisionFormat::exponent_bits)
        .def_property_readonly("name", &PrecisionFormat::name)
        .def("__eq__", [](const PrecisionFormat& a, const PrecisionFormat& b) { return a == b; })
        .def("__repr__",
             [](const PrecisionFormat& f) { return "PrecisionFormat(" + f.name() + ")"; });

    py::class_<ReductionSchedule>(m, "ReductionSchedule")
        .def_static("sequential", &ReductionSchedule::sequential)
        .def_static("pairwise_tree", &ReductionSchedule::pairwise_tree)
        .def_static("blocked", &ReductionSchedule::blocked, py::arg("block_size"))
        .def_static("permuted", &ReductionSchedule::permuted, py::arg("seed"))
        .def_static("reversed_prefix", &ReductionSchedule::reversed_prefix,
                    py::arg("prefix_len"))
        .def_static("parse", &ReductionSchedule::parse, py::arg("text"))
        .def("to_string", &ReductionSchedule::to_string)
        .def("__eq__", [](const ReductionSchedule& a, const ReductionSchedule& b) { return a == b; })
        .def("__repr__", [](const ReductionSchedule& s) {
            return "ReductionSchedule(" + s.to_string() + ")";
        });

    m.def("quantize", &quantize, py::arg("x"), py::arg("fmt"),
          py::arg("flush_subnormals") = false,
          "Round x to the nearest value representable in fmt (ties to even)");
    m.def("quantize_vector", &quantize_vector, py::arg("v"), py::arg("fmt"),
          py::arg("flush_subnormals") = false);

    m.def(
        "reduction_order",
        [](const ReductionSchedule& s, std::size_t n) {
            return ReductionPlan(s, n).summand_order();
        },
        py::arg("schedule"), py::arg("length"),
        "Order in which a length-n reduction consumes its summands");

    m.def(
        "dot_scheduled",
        [](const std::vector<double>& a, const std::vector<double>& b,
           const ReductionSchedule& schedule, const PrecisionFormat& fmt, bool widened) {
            return dot_scheduled(std::span<const double>(a), std::span<const double>(b),
                                 schedule, fmt, widened);
        },
        py::arg("a"), py::arg("b"), py::arg("schedule"), py::arg("fmt"),
        py::arg("widened") = false);

    py::class_<MatmulSpec>(m, "MatmulSpec")
        .def(py::init([](std::size_t d_in, std::size_t d_out, std::size_t batch,
                         const PrecisionFormat& precision, bool widened) {
                 MatmulSpec spec{d_in, d_out, batch, precision, widened};
                 spec.validate();
                 return spec;
             }),
             py::arg("d_in"), py::arg("d_out"), py::arg("batch"), py::arg("precision"),
             py::arg("accumulator_widened") = false)
        .def_readwrite("d_in", &MatmulSpec::d_in)
        .def_readwrite("d_out", &MatmulSpec::d_out)
        .def_readwrite("batch", &MatmulSpec::batch)
        .def_readwrite("precision", &MatmulSpec::precision)
        .def_readwrite("accumulator_widened", &MatmulSpec::accumulator_widened);

    m.def(
        "matmul_single",
        [](const std::vector<double>& x, const std::vector<std::vector<double>>& W,
           const MatmulSpec& spec, const ReductionSchedule& schedule) {
            return matmul_single(x, matrix_from_rows(W), spec, schedule);
        },
        py::arg("x"), py::arg("W"), py::arg("spec"), py::arg("schedule"));
    m.def(
        "matmul_batched_row0",
        [](const std::vector<double>& x, const std::vector<std::vector<double>>& W,
           const MatmulSpec& spec, const ReductionSchedule& schedule,
           std::uint64_t filler_seed) {
            return matmul_batched_row0(x, matrix_from_rows(W), spec, schedule, filler_seed);
        },
        py::arg("x"), py::arg("W"), py::arg("spec"), py::arg("schedule"),
        py::arg("filler_seed"));

    py::class_<NoiseSample>(m, "NoiseSample")
        .def_static("from_outputs", &NoiseSample::from_outputs, py::arg("y"),
                    py::arg("y_tilde"))
        .def_readonly("eta", &NoiseSample::eta)
        .def_readonly("y", &NoiseSample::y)
        .def_readonly("y_tilde", &NoiseSample::y_tilde);

    py::class_<CovarianceSummary>(m, "CovarianceSummary")
        .def_readonly("off_diagonal_ratio", &CovarianceSummary::off_diagonal_ratio)
        .def_readonly("trace", &CovarianceSummary::trace)
        .def_readonly("n_samples", &CovarianceSummary::n_samples)
        .def_readonly("degenerate", &CovarianceSummary::degenerate)
        .def_property_readonly(
            "matrix", [](const CovarianceSummary& c) { return matrix_to_rows(c.sigma_matrix); });

    py::class_<FlipStats>(m, "FlipStats")
        .def_readonly("empirical_rate", &FlipStats::empirical_rate)
        .def_readonly("predicted_rate", &FlipStats::predicted_rate)
        .def_readonly("sigma", &FlipStats::sigma)
        .def_readonly("margins", &FlipStats::margins)
        .def_readonly("flip_count", &FlipStats::flip_count)
        .def_readonly("n_trials", &FlipStats::n_trials);

    py::class_<IidNullResult>(m, "IidNullResult")
        .def_readonly("sigma", &IidNullResult::sigma)
        .def_readonly("flip_stats", &IidNullResult::flip_stats)
        .def_readonly("expected_js", &IidNullResult::expected_js)
        .def_readonly("covariance", &IidNullResult::covariance);

    m.def("estimate_sigma", &estimate_sigma, py::arg("samples"));
    m.def("normal_cdf", &normal_cdf, py::arg("z"));
    m.def("predicted_flip_rate", &predicted_flip_rate, py::arg("margins"), py::arg("sigma"));
    m.def("empirical_flip_rate", &empirical_flip_rate, py::arg("samples"));
    m.def("js_divergence", &js_divergence, py::arg("p"), py::arg("q"));
    m.def("softmax", &softmax, py::arg("logits"));
    m.def("expected_js", &expected_js, py::arg("samples"));
    m.def("estimate_covariance", &estimate_covariance, py::arg("samples"));
    m.def("logit_margin", &logit_margin, py::arg("y"));
    m.def("simulate_iid_null", &simulate_iid_null, py::arg("y_list"), py::arg("sigma"),
          py::arg("seed"), py::arg("n_draws"));

    py::class_<ExperimentConfig>(m, "ExperimentConfig")
        .def(py::init<>())
        .def_static("desk_scale", &ExperimentConfig::desk_scale)
        .def_static("full_scale", &ExperimentConfig::full_scale)
        .def_readwrite("d_in", &ExperimentConfig::d_in)
        .def_readwrite("d_out", &ExperimentConfig::d_out)
        .def_readwrite("batch", &ExperimentConfig::batch)
        .def_readwrite("n_trials", &ExperimentConfig::n_trials)
        .def_readwrite("precision", &ExperimentConfig::precision)
        .def_readwrite("schedule_single", &ExperimentConfig::schedule_single)
        .def_readwrite("schedule_batched", &ExperimentConfig::schedule_batched)
        .def_readwrite("seed", &ExperimentConfig::seed)
        .def_readwrite("widened_accumulator", &ExperimentConfig::widened_accumulator)
        .def_readwrite("resample_weights", &ExperimentConfig::resample_weights)
        .def_readwrite("keep_covariance_matrix", &ExperimentConfig::keep_covariance_matrix);

    py::class_<NoiseReport>(m, "NoiseReport")
        .def_readonly("config", &NoiseReport::config)
        .def_readonly("sigma", &NoiseReport::sigma)
        .def_readonly("degenerate", &NoiseReport::degenerate)
        .def_readonly("calibration_failure", &NoiseReport::calibration_failure)
        .def_readonly("flip_stats", &NoiseReport::flip_stats)
        .def_readonly("expected_js", &NoiseReport::expected_js)
        .def_readonly("covariance", &NoiseReport::covariance)
        .def_readonly("null_baseline", &NoiseReport::null_baseline)
        .def_readonly("wall_time_seconds", &NoiseReport::wall_time_seconds)
        .def("to_json", [](const NoiseReport& r) { return report_to_string(r); });

    m.def("run_experiment", &run_experiment, py::arg("config"), py::arg("n_workers") = 0,
          py::call_guard<py::gil_scoped_release>());
    m.def("regenerate_trial", &regenerate_trial, py::arg("config"), py::arg("trial_index"));
}
