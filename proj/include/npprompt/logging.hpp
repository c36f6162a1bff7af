#pragma once

#include <memory>

#include <spdlog/logger.h>

namespace npprompt {

/// Shared stderr logger; level taken from NPPROMPT_LOG on first use
/// (trace, debug, info, warn, error, off; default warn).
std::shared_ptr<spdlog::logger> logger();

} // namespace npprompt
