#pragma once

#include <cstddef>

#include "shev/drive_cycle.hpp"

namespace shev::cli {

inline constexpr int kExitOk         = 0;
inline constexpr int kExitValidation = 2;
inline constexpr int kExitRuntime    = 3;

// Entry point for the `shev-mompc` binary; returns the process exit code.
int run(int argc, const char* const* argv);

// Step with the largest rise in reference speed; the default instant for `pareto`.
[[nodiscard]] std::size_t steepest_rise_index(const ReferenceTrajectory& ref);

}  // namespace shev::cli
