#pragma once

#include <ostream>

namespace setmlvis {

/// Usage errors (bad flags, missing folder, out-of-range thresholds) exit 2;
/// data errors exit 1.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace setmlvis
