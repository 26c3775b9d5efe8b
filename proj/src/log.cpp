#include "oeb/log.hpp"

#include <cstdlib>
#include <string>

#include <spdlog/sinks/stdout_color_sinks.h>

namespace oeb {

void init_logging() {
    static const bool once = [] {
        auto logger = spdlog::stderr_color_mt("oeb");
        logger->set_pattern("[%l] %v");
        spdlog::set_default_logger(logger);
        return true;
    }();
    (void)once;

    spdlog::level::level_enum level = spdlog::level::warn;
    if (const char* env = std::getenv("OEB_LOG_LEVEL")) {
        const std::string v(env);
        if (v == "error") level = spdlog::level::err;
        else if (v == "warn") level = spdlog::level::warn;
        else if (v == "info") level = spdlog::level::info;
        else if (v == "debug") level = spdlog::level::debug;
    }
    spdlog::set_level(level);
}

}  // namespace oeb
