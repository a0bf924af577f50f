// SPDX-License-Identifier: Apache-2.0
#pragma once

// Wrapper scan-chain design for one core at a given TAM width, plus the
// per-core test-time and wrapper-area models the scheduler consumes.

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "stk/core_model.hpp"

namespace stk {

using Cycles = std::uint64_t;

// NAND2-equivalent gate counts of the generated test fabric.
struct AreaConstants {
    std::uint64_t wbr_cell = 26;
    std::uint64_t controller = 371;
    std::uint64_t tam_mux = 132;
};

struct WrapperOptions {
    bool include_wbr_in_chains = true;
    bool allow_domain_merging = true;
    // Also place boundary cells on the core's test data pins (area only; those
    // cells are not on the shift path).
    bool wrap_test_pins = false;
};

// A run of consecutive flops of one core scan chain, in scan-in order.
struct ChainSegment {
    std::size_t chain = 0;
    std::size_t offset = 0;
    std::size_t length = 0;

    bool operator==(const ChainSegment&) const = default;
};

// Cells from wrapper scan-in to wrapper scan-out: input boundary cells, then
// the internal segments, then output boundary cells.
struct WrapperChain {
    std::vector<std::size_t> input_cells;
    std::vector<ChainSegment> segments;
    std::vector<std::size_t> output_cells;

    std::size_t internal_length() const;
    std::size_t scan_in_length() const { return input_cells.size() + internal_length(); }
    std::size_t scan_out_length() const { return internal_length() + output_cells.size(); }
    std::size_t length() const { return input_cells.size() + internal_length() + output_cells.size(); }

    bool operator==(const WrapperChain&) const = default;
};

struct WrapperConfig {
    std::string core;
    std::size_t tam_width = 0;
    std::vector<WrapperChain> wrapper_chains;
    bool includes_wbr_in_chains = true;
    bool wraps_test_pins = false;
    std::size_t si = 0;
    std::size_t so = 0;
    std::vector<std::string> warnings;
};

struct CoreTestTime {
    std::string core;
    PatternKind kind = PatternKind::scan;
    Cycles cycles = 0;
};

WrapperConfig design_wrapper(const CoreTestInfo& core, std::size_t tam_width, const WrapperOptions& opts = {});

// (1 + max(si, so)) * p + min(si, so)
Cycles scan_cycles(std::size_t si, std::size_t so, std::size_t patterns);
CoreTestTime scan_test_time(const CoreTestInfo& core, const WrapperConfig& cfg);
CoreTestTime functional_test_time(const CoreTestInfo& core);

struct WidthPoint {
    std::size_t width = 0;
    Cycles cycles = 0;

    bool operator==(const WidthPoint&) const = default;
};

// Raw sweep of widths 1..w_max (widths below the clock-domain minimum are
// skipped when merging is forbidden).
std::vector<WidthPoint> sweep_tam_widths(const CoreTestInfo& core, std::size_t w_max, const WrapperOptions& opts = {});
// Widths at which the test time strictly drops.
std::vector<WidthPoint> pareto_tam_widths(const CoreTestInfo& core, std::size_t w_max, const WrapperOptions& opts = {});

std::size_t wrapper_cell_count(const CoreTestInfo& core, const WrapperConfig& cfg);
std::uint64_t wrapper_area(const CoreTestInfo& core, const WrapperConfig& cfg, const AreaConstants& k = {});

// Smallest width design_wrapper accepts for this core.
std::size_t minimum_tam_width(const CoreTestInfo& core, const WrapperOptions& opts = {});

struct WrapperRow {
    std::size_t width = 0;
    std::size_t si = 0;
    std::size_t so = 0;
    Cycles cycles = 0;
    std::uint64_t area = 0;
};

std::vector<WrapperRow> wrapper_table(const CoreTestInfo& core, std::size_t w_max, const WrapperOptions& opts = {},
                                      const AreaConstants& k = {});
std::string format_wrapper_table(const CoreTestInfo& core, const std::vector<WrapperRow>& rows);
// One JSON object per line.
std::string wrapper_records(const CoreTestInfo& core, const std::vector<WrapperRow>& rows);

} // namespace stk
