#include <vframe/core/log.hpp>

#include <spdlog/sinks/stdout_color_sinks.h>

namespace vframe {

spdlog::logger& log()
{
    static auto logger = [] {
        auto l = spdlog::stderr_color_mt("vframe");
        l->set_pattern("[%l] %v");
        l->set_level(spdlog::level::warn);
        return l;
    }();
    return *logger;
}

} // namespace vframe
