#pragma once

#include <spdlog/spdlog.h>

namespace vframe {

/// Library-wide logger ("vframe"), writing to stderr.
spdlog::logger& log();

} // namespace vframe
