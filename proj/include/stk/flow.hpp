// SPDX-License-Identifier: Apache-2.0
#pragma once

// End-to-end integration flow: parse -> schedule -> insert -> translate,
// and the memory BIST branch. Every artifact lands under one output directory.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "stk/scheduler.hpp"

namespace stk {

enum class FlowStage { parse, schedule, insert, translate, bist, all };

std::string_view to_string(FlowStage s);
std::optional<FlowStage> parse_flow_stage(std::string_view s);

struct FlowConfig {
    std::filesystem::path manifest;
    std::filesystem::path out = "stk_out";
    FlowStage stage = FlowStage::all;
    std::optional<std::size_t> pins;
    std::optional<double> power;
    bool wbr_in_chains = true;
    bool share_se = true;
    bool allow_domain_merging = true;
    bool schedule_bist = false;
    std::uint64_t seed = 1;
    std::optional<std::filesystem::path> march;  // March C- when unset
    std::size_t table_width = 16;
};

struct FlowResult {
    int exit_code = 0;
    std::string failed_stage;
    std::string message;
    std::vector<std::string> violations;
    std::vector<std::filesystem::path> written;  // relative to out, in write order
};

// Writes the artifact set; on a module error or an invariant violation the
// outputs written so far stay in place next to a FAILED marker.
FlowResult run_flow(const FlowConfig& config);

// Side-by-side totals and per-session breakdown; throws when the two
// schedules cover different entities.
std::string report_compare(const TestSchedule& a, const TestSchedule& b);

} // namespace stk
