#include "npprompt/logging.hpp"

#include <cstdlib>

#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

namespace npprompt {

std::shared_ptr<spdlog::logger> logger() {
    static std::shared_ptr<spdlog::logger> instance = [] {
        auto log = spdlog::stderr_color_mt("npprompt");
        log->set_pattern("[%l] %v");
        log->set_level(spdlog::level::warn);
        if (const char* env = std::getenv("NPPROMPT_LOG"); env != nullptr && *env != '\0') {
            log->set_level(spdlog::level::from_str(env));
        }
        return log;
    }();
    return instance;
}

} // namespace npprompt
