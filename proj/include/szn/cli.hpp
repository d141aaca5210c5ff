#pragma once

#include <string>
#include <vector>

namespace szn {

/// Entry point behind the szn binary: train / eval / simulate / selftest.
/// Returns 0 on success, 1 on usage or runtime errors, 2 when selftest
/// trips an acceptance threshold.
int cli_run(const std::vector<std::string>& args);

}  // namespace szn
