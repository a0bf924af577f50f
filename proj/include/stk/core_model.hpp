// SPDX-License-Identifier: Apache-2.0
#pragma once

// In-memory test model of an SOC: per-core test descriptions (the STIL-like
// `.core` format) and the SOC manifest that ties cores, memories, the pin
// budget and the netlist together.

#include <cstddef>
#include <filesystem>
#include <limits>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "stk/error.hpp"

namespace stk {

// Dedicated chip pins of the session test controller (test_mode, session_si).
inline constexpr std::size_t controller_pin_count = 2;

enum class Softness { hard, soft };
enum class PinKind { clock, reset, scan_enable, test_enable };
enum class PatternKind { scan, functional };
enum class CaptureMode { normal, pulse_clock };
enum class MemoryPorts { single_port, two_port };

std::string_view to_string(PinKind k);
std::string_view to_string(PatternKind k);
std::string_view to_string(CaptureMode m);
std::string_view to_string(MemoryPorts p);

struct ScanChain {
    std::string name;
    std::size_t length = 0;
    std::string clock_domain;
    std::string scan_in;
    // Dedicated scan-out pin, or the functional output (`po<k>`) the chain
    // shares when `shared_out` is set.
    std::string scan_out;
    bool shared_out = false;

    bool operator==(const ScanChain&) const = default;
};

struct ControlPin {
    std::string name;
    PinKind kind = PinKind::test_enable;
    bool shareable = false;

    bool operator==(const ControlPin&) const = default;
};

// Bit strings are in shift order: character 0 of a load string is the first
// bit shifted in and ends in the cell nearest scan-out; character 0 of an
// unload string is the first bit observed. `inputs`/`outputs` are indexed by
// functional pin number. Expected values may use 'X' for don't-care.
struct Pattern {
    std::vector<std::string> load;
    std::vector<std::string> unload;
    std::string inputs;
    std::string outputs;

    bool operator==(const Pattern&) const = default;
};

struct PatternSet {
    PatternKind kind = PatternKind::scan;
    std::size_t count = 0;
    CaptureMode capture = CaptureMode::normal;
    std::optional<std::vector<Pattern>> vectors;

    bool operator==(const PatternSet&) const = default;
};

struct CoreTestInfo {
    std::string name;
    std::size_t ti = 0;
    std::size_t to = 0;
    std::size_t pi = 0;
    std::size_t po = 0;
    std::vector<ScanChain> scan_chains;
    std::vector<PatternSet> pattern_sets;
    std::vector<std::string> clock_domains;
    std::vector<ControlPin> control_pins;
    Softness softness = Softness::hard;
    double test_power = 1.0;

    bool operator==(const CoreTestInfo&) const = default;

    std::size_t total_flops() const;
    const PatternSet* scan_patterns() const;
    const PatternSet* functional_patterns() const;
    // (scan chain name, functional output pin) for every chain whose output
    // is shared with a functional output.
    std::vector<std::pair<std::string, std::string>> shared_pins() const;
    bool has_shared_pins() const;
};

// Functional pins are implicit: inputs are named pi0..pi<n-1>, outputs po0..
std::string functional_input_name(std::size_t i);
std::string functional_output_name(std::size_t i);
// Returns the index encoded in a `po<k>` name, if it is one.
std::optional<std::size_t> functional_output_index(std::string_view pin);

struct MemoryConfig {
    std::string name;
    std::size_t words = 0;
    std::size_t width = 0;
    MemoryPorts ports = MemoryPorts::single_port;

    bool operator==(const MemoryConfig&) const = default;
};

struct SocDescription {
    std::string name;
    std::vector<CoreTestInfo> cores;
    std::vector<MemoryConfig> memories;
    std::size_t pin_budget = 80;
    double power_cap = std::numeric_limits<double>::infinity();
    std::filesystem::path netlist_path;
    std::size_t chip_gates = 0;
    std::vector<std::string> warnings;
    std::vector<std::string> notes;

    const CoreTestInfo* find_core(std::string_view name) const;
};

struct ValidationReport {
    std::string subject;
    std::vector<std::string> violations;
    std::vector<std::string> notes;

    bool ok() const { return violations.empty(); }
};

CoreTestInfo parse_core_test_info(std::string_view text);
std::string serialize_core_test_info(const CoreTestInfo& core);
ValidationReport validate_core(const CoreTestInfo& core);

// Parses and validates; throws Error when the core violates an invariant.
CoreTestInfo load_core_file(const std::filesystem::path& path);

// Core paths in the manifest are resolved against `base_dir`.
SocDescription parse_soc_manifest(std::string_view text, const std::filesystem::path& base_dir);
SocDescription load_soc_manifest(const std::filesystem::path& path);

// Fewest chip pins a core needs to be tested alone: its control pins, the two
// test-controller pins and one TAM wire pair if it has scan chains.
std::size_t minimum_pin_need(const CoreTestInfo& core);

std::string read_text_file(const std::filesystem::path& path);

} // namespace stk
