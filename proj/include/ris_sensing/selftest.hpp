#pragma once

#include <string>
#include <vector>

namespace ris {

/// Deliberate defects for checking that the self-test notices them.
enum class SelftestFault { None, Unfold };

SelftestFault parse_selftest_fault(const std::string& text);

struct SelftestResult {
    std::string name;
    bool passed = false;
    std::string detail;
};

/// Built-in invariant suite: unfolding, product identities, ESPRIT exactness
/// and a noiseless end-to-end recovery.
std::vector<SelftestResult> run_selftest(SelftestFault fault = SelftestFault::None);

} // namespace ris
