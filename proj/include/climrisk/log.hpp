#pragma once

#include <spdlog/spdlog.h>

namespace climrisk {

// Routes spdlog's default logger to stderr. The level comes from the
// CLIMRISK_LOG environment variable (trace, debug, info, warn, error, off);
// `fallback` is used when the variable is unset or unrecognised.
void init_logging(spdlog::level::level_enum fallback = spdlog::level::warn);

}  // namespace climrisk
