#include "climrisk/log.hpp"

#include <spdlog/sinks/stdout_sinks.h>

#include <cstdlib>
#include <string>

namespace climrisk {

void init_logging(spdlog::level::level_enum fallback) {
    static const bool installed = [] {
        auto logger = spdlog::stderr_logger_mt("climrisk");
        logger->set_pattern("[%l] %v");
        spdlog::set_default_logger(logger);
        return true;
    }();
    (void)installed;

    auto level = fallback;
    if (const char* env = std::getenv("CLIMRISK_LOG"); env != nullptr) {
        const auto parsed = spdlog::level::from_str(env);
        // from_str maps unknown names to off; only accept an explicit "off".
        if (parsed != spdlog::level::off || std::string(env) == "off") level = parsed;
    }
    spdlog::set_level(level);
}

}  // namespace climrisk
