#pragma once

namespace unpaired_sr {

/// Exit codes: 0 success, 1 configuration or usage error, 2 runtime or numeric error.
int run_cli(int argc, char** argv);

/// Applies UNPAIRED_SR_LOG (quiet | info | debug) to the default logger.
void configure_logging();

}  // namespace unpaired_sr
