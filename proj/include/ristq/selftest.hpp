// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <iosfwd>

namespace ristq {

/// Runs a fast invariant suite, printing one PASS/FAIL line per check.
/// Returns the number of failed checks.
int run_selftest(std::ostream &os);

} // namespace ristq
