#pragma once

#include <functional>
#include <string>
#include <vector>

namespace diffkit {

// Named end-to-end verification checks. Each one builds its own fixtures,
// runs at the pinned tolerances, and reports a headline value (the
// quantity the tolerance applies to). The acceptance suite and the CLI
// `verify` command both run these.
struct CheckResult {
    std::string name;
    bool pass = false;
    double value = 0.0;     // headline measured quantity
    std::string detail;     // human-readable summary of what was measured
    double seconds = 0.0;
};

using CheckFn = std::function<CheckResult()>;

struct NamedCheck {
    std::string name;
    CheckFn run;
};

// The registered checks, in the order the acceptance suite reports them.
const std::vector<NamedCheck>& all_checks();

std::vector<CheckResult> run_all_checks();

} // namespace diffkit
