// SPDX-License-Identifier: Apache-2.0
#pragma once

// March algorithms, a bit-accurate memory simulator with single-fault
// injection, exhaustive fault coverage, and the memory BIST fabric (one
// shared controller, sequencers, one TPG per memory).

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "stk/core_model.hpp"
#include "stk/netlist.hpp"
#include "stk/scheduler.hpp"

namespace stk {

enum class AddressOrder { up, down, either };
enum class MarchOp { r0, r1, w0, w1 };

std::string_view to_string(MarchOp op);

struct MarchElement {
    AddressOrder order = AddressOrder::either;
    std::vector<MarchOp> ops;

    bool operator==(const MarchElement&) const = default;
};

struct MarchAlgorithm {
    std::string name;
    std::vector<MarchElement> elements;

    bool operator==(const MarchAlgorithm&) const = default;
    std::size_t op_count() const;
};

// `{ *(w0); ^(r0,w1); v(r1,w0) }`. Orders: ^ up, v down, * either (also the
// arrows U+21D1, U+21D3, U+21D5). `//` comments are allowed.
MarchAlgorithm parse_march(std::string_view text, std::string name = {});
std::string serialize_march(const MarchAlgorithm& m);

MarchAlgorithm mats_plus();
MarchAlgorithm march_c_minus();

// words * op_count, one operation per cycle.
Cycles bist_test_time(const MarchAlgorithm& m, const MemoryConfig& mem);

enum class FaultKind { saf0, saf1, tf_up, tf_down, cfid };
enum class FaultClass { saf, tf, cfid };

std::string_view to_string(FaultKind k);
std::string_view to_string(FaultClass c);
FaultClass fault_class(FaultKind k);

struct MemoryCell {
    std::size_t word = 0;
    std::size_t bit = 0;

    bool operator==(const MemoryCell&) const = default;
};

struct MemoryFault {
    FaultKind kind = FaultKind::saf0;
    MemoryCell victim;
    // cfid only: an aggressor transition (rising or falling) forces the victim.
    MemoryCell aggressor;
    bool rising = true;
    bool forced = true;

    bool operator==(const MemoryFault&) const = default;
};

std::string describe(const MemoryFault& f);

struct MarchFailure {
    std::size_t element = 0;  // 0-based
    std::size_t op = 0;       // index within the element
    std::size_t address = 0;
    std::size_t bit = 0;
    Cycles cycle = 0;

    bool operator==(const MarchFailure&) const = default;
};

struct MarchResult {
    bool pass = true;
    std::optional<MarchFailure> failure;
    Cycles cycles = 0;
};

// Memory starts all-zero. Simulation stops at the first failing read.
MarchResult simulate_march(const MarchAlgorithm& m, const MemoryConfig& mem,
                           const std::optional<MemoryFault>& fault = std::nullopt);

// RAM port activity of one operation: solid data backgrounds, so `data` is
// replicated over the word.
struct RamOp {
    std::size_t address = 0;
    bool write = false;
    bool data = false;

    bool operator==(const RamOp&) const = default;
};

std::vector<RamOp> march_trace(const MarchAlgorithm& m, const MemoryConfig& mem);

struct KindCoverage {
    FaultClass kind = FaultClass::saf;
    std::size_t total = 0;
    std::size_t detected = 0;
    std::vector<MemoryFault> undetected;

    double fraction() const { return total ? static_cast<double>(detected) / static_cast<double>(total) : 1.0; }
};

struct CoverageReport {
    std::string algorithm;
    MemoryConfig memory;
    std::vector<KindCoverage> kinds;
};

// Every single fault of the given classes. Coupling faults pair cells of the
// same bit column in different words. Throws when a class has more than
// `max_faults` faults.
std::vector<MemoryFault> enumerate_faults(const MemoryConfig& mem, FaultClass kind);
std::uint64_t fault_count(const MemoryConfig& mem, FaultClass kind);
CoverageReport fault_coverage(const MarchAlgorithm& m, const MemoryConfig& mem, const std::vector<FaultClass>& kinds,
                              std::size_t max_faults = 4096);
std::string format_coverage(const std::vector<CoverageReport>& reports);
std::string coverage_records(const std::vector<CoverageReport>& reports);  // JSON lines

enum class SequencerGrouping { per_shape, per_memory };

struct GroupingPolicy {
    SequencerGrouping grouping = SequencerGrouping::per_shape;
    // Sequencers run in parallel (fabric time = max) or one after another (sum).
    bool concurrent = true;
};

struct BistFabric {
    Netlist netlist;  // cell library, BIST modules, memories, top `bist_fabric`
    std::vector<std::vector<std::string>> groups;  // memory names per sequencer
    GroupingPolicy policy;
    Cycles cycles = 0;

    std::size_t count_instances(std::string_view module_prefix) const;
};

BistFabric generate_bist(const std::vector<MemoryConfig>& memories, const MarchAlgorithm& m,
                         const GroupingPolicy& policy = {});

TestEntity bist_test_entity(const BistFabric& fabric, double power = 1.0);

struct BistMemoryCheck {
    std::string memory;
    std::size_t ops = 0;
    std::optional<std::size_t> mismatch;  // first diverging cycle
    std::string message;
};

struct BistVerifyReport {
    std::vector<BistMemoryCheck> memories;
    std::vector<std::string> violations;

    bool ok() const;
};

// Interprets the sequencer programs and TPG decode of the fabric cycle by
// cycle and compares each memory's RAM activity with march_trace.
BistVerifyReport verify_fabric(const BistFabric& fabric, const std::vector<MemoryConfig>& memories,
                               const MarchAlgorithm& m);

std::size_t address_bits(std::size_t words);

} // namespace stk
