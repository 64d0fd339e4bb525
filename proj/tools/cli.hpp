// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <ostream>

namespace qfs::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;
inline constexpr int kExitData = 2;

/// Entry point of the qfsc tool. Diagnostics go to `err`.
int run(int argc, const char* const* argv, std::ostream& out,
        std::ostream& err);

}  // namespace qfs::cli
