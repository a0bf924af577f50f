// SPDX-License-Identifier: Apache-2.0
#include "doctest.h"

#include <algorithm>
#include <random>

#include "stk/scheduler.hpp"

using namespace stk;

namespace {

const std::string fx = STK_FIXTURES;

TestEntity fixed(const std::string& id, Cycles t, std::size_t width, std::size_t control)
{
    TestEntity e;
    e.id = id;
    e.core = id;
    e.time_function = {{width, t}};
    e.min_width = e.max_width = width;
    for (std::size_t i = 0; i < control; ++i)
        e.control_pins.push_back({id + "_c" + std::to_string(i), PinKind::clock, false});
    e.resources = {{"core:" + id, ResourceMode::exclusive}};
    return e;
}

TestEntity random_entity(std::mt19937_64& rng, const std::string& id)
{
    std::uniform_int_distribution<std::size_t> w(1, 6), ctl(1, 5);
    std::uniform_int_distribution<Cycles> t(100, 10000);
    TestEntity e;
    e.id = id;
    e.core = id;
    Cycles cur = t(rng);
    std::size_t widths = w(rng);
    for (std::size_t k = 1; k <= widths; ++k) {
        e.time_function.push_back({k, cur});
        cur = cur * 3 / 4;
    }
    e.min_width = 1;
    e.max_width = widths;
    for (std::size_t i = 0; i < ctl(rng); ++i)
        e.control_pins.push_back({id + "_c" + std::to_string(i), PinKind::clock, false});
    e.resources = {{"core:" + id, ResourceMode::exclusive}};
    return e;
}

} // namespace

TEST_CASE("io accounting on the DSC cores")
{
    auto soc = load_soc_manifest(fx + "/dsc/dsc.manifest");
    Constraints c = default_constraints(soc);
    auto ents = build_test_entities(soc, c);
    SharingPolicy none{false, false};
    auto io = io_accounting(ents, none, 80);
    CHECK(io.control_pins_used == 19);
    CHECK(io.clock_pins == 6);
    CHECK(io.reset_pins == 4);
    CHECK(io.test_enable_pins == 7);
    CHECK(io.scan_enable_pins == 2);
    auto pooled = io_accounting(ents, SharingPolicy{}, 80);
    CHECK(pooled.control_pins_used == 18);
    CHECK(pooled.scan_enable_pins == 1);
    auto empty = io_accounting(std::vector<TestEntity>{}, none, 80);
    CHECK(empty.control_pins_used == 0);
    CHECK(empty.tam_pins_available == 78);
}

TEST_CASE("DSC schedules")
{
    auto soc = load_soc_manifest(fx + "/dsc/dsc.manifest");
    Constraints c = default_constraints(soc);
    auto ents = build_test_entities(soc, c);
    REQUIRE(ents.size() == 4);

    auto s = schedule_sessions(soc, c);
    auto rep = evaluate_schedule(s);
    CHECK(rep.ok());
    CHECK(s.sessions.size() == 3);
    for (const auto& sr : rep.sessions)
        CHECK(sr.io_used <= 80);

    auto serial = schedule_serial(soc, c);
    CHECK(serial.sessions.size() == 4);
    Cycles sum = 0;
    for (const auto& e : ents) {
        auto plan = plan_session({&e}, c);
        sum += plan.time;
    }
    CHECK(serial.total_cycles == sum);
    CHECK(evaluate_schedule(serial).ok());
    CHECK(s.total_cycles < serial.total_cycles);

    auto best = exhaustive_schedule(soc, c);
    CHECK(evaluate_schedule(best).ok());
    CHECK(best.total_cycles <= s.total_cycles);
    CHECK(static_cast<double>(s.total_cycles) <= 1.10 * static_cast<double>(best.total_cycles));
}

TEST_CASE("two fixed entities")
{
    std::vector<TestEntity> e{fixed("a", 100, 2, 1), fixed("b", 60, 2, 1)};
    Constraints c;
    c.pin_budget = 40;
    auto s = schedule_sessions(e, c);
    CHECK(s.sessions.size() == 1);
    CHECK(s.total_cycles == 100);
    // one entity needs 1 + 2 + 4 = 7 pins, both need 12
    c.pin_budget = 8;
    auto t = schedule_sessions(e, c);
    CHECK(t.sessions.size() == 2);
    CHECK(t.total_cycles == 160);

    std::vector<TestEntity> one{fixed("a", 100, 2, 1)};
    auto s1 = schedule_sessions(one, c);
    auto s2 = schedule_serial(one, c);
    CHECK(s1.total_cycles == s2.total_cycles);
    CHECK(s1.sessions.size() == s2.sessions.size());
    auto ex = exhaustive_schedule(one, c);
    REQUIRE(ex);
    CHECK(ex->sessions.size() == 1);
}

TEST_CASE("heuristic never beats the optimum")
{
    std::mt19937_64 rng(3);
    for (int i = 0; i < 200; ++i) {
        std::vector<TestEntity> e;
        std::size_t n = 3 + static_cast<std::size_t>(i % 3);
        for (std::size_t k = 0; k < n; ++k)
            e.push_back(random_entity(rng, "e" + std::to_string(k)));
        Constraints c;
        c.pin_budget = 14 + static_cast<std::size_t>(i % 20);
        auto h = schedule_sessions(e, c);
        auto opt = exhaustive_schedule(e, c);
        REQUIRE(opt);
        CHECK(evaluate_schedule(h).ok());
        CHECK(evaluate_schedule(*opt).ok());
        CHECK(h.total_cycles >= opt->total_cycles);
        CHECK(h.total_cycles <= schedule_serial(e, c).total_cycles);
    }
}

TEST_CASE("mutated schedule is flagged")
{
    std::vector<TestEntity> e{fixed("a", 100, 2, 1), fixed("b", 60, 2, 1)};
    Constraints c;
    c.pin_budget = 40;
    auto s = schedule_sessions(e, c);
    REQUIRE(s.sessions[0].assignments.size() == 2);
    s.sessions[0].assignments[1].wires = s.sessions[0].assignments[0].wires;
    auto rep = evaluate_schedule(s);
    REQUIRE(!rep.ok());
    CHECK(rep.violations[0].find("assigned twice") != std::string::npos);

    TestSchedule empty;
    CHECK(evaluate_schedule(empty).total_cycles == 0);
}

TEST_CASE("pin pressure favours serial")
{
    auto soc = load_soc_manifest(fx + "/counterexample/pin_pressure.manifest");
    Constraints c = default_constraints(soc);
    auto ents = build_test_entities(soc, c);
    auto serial = schedule_serial(ents, c);
    auto multi = exhaustive_schedule(ents, c, [](const std::vector<std::size_t>& sizes) {
        return std::any_of(sizes.begin(), sizes.end(), [](std::size_t n) { return n > 1; });
    });
    REQUIRE(multi);
    CHECK(serial.total_cycles < multi->total_cycles);
    auto h = schedule_sessions(ents, c);
    CHECK(h.total_cycles == serial.total_cycles);
}

TEST_CASE("infeasible budget")
{
    auto soc = load_soc_manifest(fx + "/dsc/dsc.manifest");
    Constraints c = default_constraints(soc);
    c.pin_budget = 10;
    CHECK_THROWS_WITH_AS(schedule_sessions(soc, c), doctest::Contains("infeasible"), Error);
}
