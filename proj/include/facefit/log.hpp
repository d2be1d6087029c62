#pragma once

#include <string>

namespace facefit {

/// Sets the log level from FACEFIT_LOG (trace, debug, info, warn, error, off). Default: warn.
void init_logging();

bool debug_enabled();

void log_debug(const std::string& message);
void log_info(const std::string& message);
void log_warn(const std::string& message);

} // namespace facefit
