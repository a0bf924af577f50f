// SPDX-License-Identifier: Apache-2.0
#pragma once

// Session-based test scheduling under a chip test-pin budget and a power cap.
//
// Pin model, per session: control pins of the co-scheduled cores (after
// SE/TE pooling) + the test-controller pins + two pins (in/out) per TAM wire
// must fit the budget. Functional vectors go through the chip functional-IO
// port, which one entity at a time may own; they are not charged to the test
// budget.

#include <cstddef>
#include <cstdint>
#include <functional>
#include <limits>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "stk/core_model.hpp"
#include "stk/wrapper.hpp"

namespace stk {

enum class EntityKind { scan, functional, bist };
enum class ScheduleMode { session_based, serial, non_session };

std::string_view to_string(EntityKind k);
std::string_view to_string(ScheduleMode m);

enum class ResourceMode { exclusive, shared };

// Something an entity holds for the whole session: its core, the functional
// IO port, the pooled scan-enable. Two holders conflict unless both are shared.
struct Resource {
    std::string name;
    ResourceMode mode = ResourceMode::exclusive;

    bool operator==(const Resource&) const = default;
};

struct TestEntity {
    std::string id;
    std::string core;
    EntityKind kind = EntityKind::scan;
    // Pareto points, ascending width, strictly decreasing cycles. Entities
    // that use no TAM wires have the single point (0, cycles).
    std::vector<WidthPoint> time_function;
    std::vector<ControlPin> control_pins;
    std::size_t min_width = 0;
    std::size_t max_width = 0;
    std::size_t functional_pins = 0;
    double power = 1.0;
    std::vector<Resource> resources;
    // Capture mode of scan entities (decides how SE is driven).
    CaptureMode capture = CaptureMode::normal;

    bool operator==(const TestEntity&) const = default;

    // Cycles at the best Pareto point not wider than `width`.
    Cycles cycles_at(std::size_t width) const;
    Cycles best_cycles() const { return time_function.empty() ? 0 : time_function.back().cycles; }
};

struct SharingPolicy {
    bool share_se = true;
    bool share_te = false;

    bool operator==(const SharingPolicy&) const = default;
};

struct Constraints {
    std::size_t pin_budget = 80;
    double power_cap = std::numeric_limits<double>::infinity();
    SharingPolicy sharing;
    std::size_t controller_pins = controller_pin_count;
    WrapperOptions wrapper;
    // Shift functional vectors through the wrapper boundary cells over the TAM
    // instead of applying them on the functional-IO port.
    bool functional_via_wrapper = false;
    // Extra entity (the memory BIST fabric) appended to the SOC's entities.
    std::optional<TestEntity> bist_entity;
};

// Constraints carrying the manifest's pin budget and power cap.
Constraints default_constraints(const SocDescription& soc);

struct TestIoBudget {
    std::size_t total_pins = 0;
    std::size_t clock_pins = 0;
    std::size_t reset_pins = 0;
    std::size_t scan_enable_pins = 0;
    std::size_t test_enable_pins = 0;
    std::size_t control_pins_used = 0;
    std::size_t controller_pins = 0;
    // total - control - controller; negative means infeasible.
    long long tam_pins_available = 0;

    bool feasible() const { return tam_pins_available >= 0; }
};

TestIoBudget io_accounting(const std::vector<const TestEntity*>& entities, const SharingPolicy& sharing,
                           std::size_t total_pins, std::size_t controller_pins = controller_pin_count);
TestIoBudget io_accounting(const std::vector<TestEntity>& entities, const SharingPolicy& sharing,
                           std::size_t total_pins, std::size_t controller_pins = controller_pin_count);

// Chip-level pin that drives a core control pin under the sharing policy.
std::string chip_control_pin(const std::string& core, const ControlPin& pin, const SharingPolicy& sharing);
std::string tam_in_pin(std::size_t wire);
std::string tam_out_pin(std::size_t wire);
std::string fio_in_pin(std::size_t i);
std::string fio_out_pin(std::size_t i);

struct Assignment {
    TestEntity entity;
    std::size_t width = 0;
    std::vector<std::size_t> wires;
    // core-side pin (wsi<k>/wso<k>, control pin, pi<k>/po<k>) -> chip pin
    std::map<std::string, std::string> pin_map;
    Cycles cycles = 0;
};

struct Session {
    std::size_t index = 0;
    std::vector<Assignment> assignments;
    Cycles session_time = 0;
    std::size_t io_used = 0;
    double power_used = 0.0;
};

struct TestSchedule {
    std::vector<Session> sessions;
    Cycles total_cycles = 0;
    ScheduleMode mode = ScheduleMode::session_based;
    Constraints constraints;

    const Assignment* find(const std::string& entity_id) const;
};

std::vector<TestEntity> build_test_entities(const SocDescription& soc, const Constraints& c);

// Conflicts, power and pins for a set of co-scheduled entities, with the
// session-time-minimizing width allocation.
struct SessionPlan {
    bool feasible = false;
    std::string reason;
    std::vector<std::size_t> widths;
    Cycles time = 0;
    TestIoBudget io;
    double power = 0.0;
};

SessionPlan plan_session(const std::vector<const TestEntity*>& members, const Constraints& c);
bool resources_compatible(const std::vector<const TestEntity*>& members, std::string* why = nullptr);

// Builds a schedule from explicit session membership and widths.
TestSchedule make_schedule(const std::vector<std::vector<const TestEntity*>>& sessions,
                           const std::vector<std::vector<std::size_t>>& widths, const Constraints& c,
                           ScheduleMode mode);

TestSchedule schedule_sessions(const SocDescription& soc, const Constraints& c);
TestSchedule schedule_sessions(const std::vector<TestEntity>& entities, const Constraints& c);
TestSchedule schedule_serial(const SocDescription& soc, const Constraints& c);
TestSchedule schedule_serial(const std::vector<TestEntity>& entities, const Constraints& c);

// Partition filter for the exhaustive search: receives the block sizes.
using PartitionFilter = std::function<bool(const std::vector<std::size_t>& block_sizes)>;

inline constexpr std::size_t exhaustive_entity_limit = 6;

// Optimal session-based schedule by enumeration of all set partitions, each
// block at its optimal width assignment. Returns nullopt when no partition
// passing `filter` is feasible.
std::optional<TestSchedule> exhaustive_schedule(const std::vector<TestEntity>& entities, const Constraints& c,
                                                const PartitionFilter& filter = {});
TestSchedule exhaustive_schedule(const SocDescription& soc, const Constraints& c);

struct SessionReport {
    std::size_t index = 0;
    Cycles session_time = 0;
    std::size_t io_used = 0;
    std::size_t control_pins = 0;
    std::size_t tam_pins = 0;
    double power_used = 0.0;
    std::vector<std::string> entities;
};

struct ScheduleReport {
    Cycles total_cycles = 0;
    std::vector<SessionReport> sessions;
    std::vector<std::string> violations;

    bool ok() const { return violations.empty(); }
};

ScheduleReport evaluate_schedule(const TestSchedule& s);

std::string format_schedule(const TestSchedule& s);
std::string format_gantt(const TestSchedule& s, std::size_t columns = 60);

} // namespace stk
