#include "facefit/log.hpp"

#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include <cstdlib>
#include <mutex>

namespace facefit {

namespace {

std::once_flag configured;

void configure()
{
    auto logger = spdlog::get("facefit");
    if (!logger)
        logger = spdlog::stderr_color_mt("facefit");
    spdlog::set_default_logger(logger);
    spdlog::set_pattern("facefit: %l: %v");
    spdlog::set_level(spdlog::level::warn);
    if (const char* env = std::getenv("FACEFIT_LOG"))
        spdlog::set_level(spdlog::level::from_str(env));
}

} // namespace

void init_logging()
{
    std::call_once(configured, configure);
}

bool debug_enabled()
{
    init_logging();
    return spdlog::should_log(spdlog::level::debug);
}

void log_debug(const std::string& message)
{
    init_logging();
    spdlog::debug("{}", message);
}

void log_info(const std::string& message)
{
    init_logging();
    spdlog::info("{}", message);
}

void log_warn(const std::string& message)
{
    init_logging();
    spdlog::warn("{}", message);
}

} // namespace facefit
