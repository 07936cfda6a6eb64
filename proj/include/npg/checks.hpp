#pragma once

#include <cstdint>
#include <string>

namespace npg {

// Self-contained diagnostic suite behind the `check` CLI subcommand: exact
// identities (Bellman consistency, performance difference, score function,
// gradient and Fisher closed forms), sampler fidelity, and the
// width-scaling trend, each reported as pass/fail with measured values.
// Returns a JSON document string; all_pass is the overall verdict.
std::string run_check_suite(std::uint64_t seed);

bool check_suite_all_pass(const std::string& report_json);

}  // namespace npg
