#pragma once

#include <spdlog/spdlog.h>

namespace oeb {

// Applies OEB_LOG_LEVEL (error, warn, info, debug); default warn. Logs go to stderr.
void init_logging();

}  // namespace oeb
