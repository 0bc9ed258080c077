// Command-line front end. The heavy lifting lives in cli_main so tests can
// drive the full argument-to-exit-code path in process.

#pragma once

#include <string>
#include <vector>

namespace fpnoise {

// Documented exit codes.
inline constexpr int kExitOk = 0;
inline constexpr int kExitConfigError = 2;
inline constexpr int kExitIoError = 3;
inline constexpr int kExitValidationFailure = 4;

// args excludes the program name.
int cli_main(const std::vector<std::string>& args);

}  // namespace fpnoise
