#pragma once

#include "ssdtee/bench/config.hpp"

#include <string>
#include <vector>

namespace ssdtee::bench {

struct CheckResult {
    std::string name;
    bool passed = false;
    std::string detail;
};

/// Model invariants over every configured workload: scenario layering,
/// breakdown consistency, rate bounds, the world-switch identity, faithful
/// end-to-end results and run-to-run determinism.
[[nodiscard]] std::vector<CheckResult> selftest(const RunConfig& config);

/// Injected faults, each expected to be caught: data, MAC, counter and tree
/// bit flips, runtime metadata corruption, cross-TEE access and a program
/// exception. A result passes when the fault was detected.
[[nodiscard]] std::vector<CheckResult> tamper_demos(std::uint64_t seed);

[[nodiscard]] bool all_passed(const std::vector<CheckResult>& results) noexcept;

} // namespace ssdtee::bench
