// Report serialization and presentation: versioned JSON documents that
// round-trip every scalar bit-exactly, a fixed 64-bin margins histogram, an
// optional full covariance dump, and the human-readable summary table.

#pragma once

#include <iosfwd>
#include <string>

#include <json.hpp>

#include "fpnoise/experiment.hpp"

namespace fpnoise {

inline constexpr int kReportSchemaVersion = 1;

nlohmann::json config_to_json(const ExperimentConfig& cfg);
// Applies the document's keys onto `base`; unknown keys are rejected by name.
ExperimentConfig config_from_json(const nlohmann::json& j,
                                  ExperimentConfig base = ExperimentConfig{});

nlohmann::json report_to_json(const NoiseReport& report);
NoiseReport report_from_json(const nlohmann::json& j);

// Serialized with a trailing newline; doubles survive the round trip
// bit-exactly.
std::string report_to_string(const NoiseReport& report);

void save_report(const NoiseReport& report, const std::string& path);
NoiseReport load_report(const std::string& path);

// One table row per report, mirroring the precision / sigma / flip-rate /
// divergence / correlation summary layout.
void print_report_table(std::ostream& os, const NoiseReport& report);

// The full K x K covariance as "i,j,value" rows after a one-line header with
// K, N and R_off. Requires a report produced with covariance retention.
void write_covariance_csv(std::ostream& os, const NoiseReport& report);

}  // namespace fpnoise
