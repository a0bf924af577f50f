// SPDX-License-Identifier: Apache-2.0
#include "doctest.h"

#include <algorithm>

#include "stk/dft.hpp"

using namespace stk;

namespace {

const std::string fx = STK_FIXTURES;

std::size_t count_cells(const Module& m, std::string_view cell)
{
    return static_cast<std::size_t>(
        std::count_if(m.instances.begin(), m.instances.end(), [&](const Instance& i) { return i.module == cell; }));
}

Netlist with_library(std::vector<Module> extra, const std::string& top)
{
    Netlist n;
    n.modules = test_cell_library();
    for (auto& m : extra)
        n.modules.push_back(std::move(m));
    n.top = top;
    return n;
}

Module core_module(const CoreTestInfo& c)
{
    Module m;
    m.name = c.name;
    m.leaf = true;
    for (std::size_t i = 0; i < c.pi; ++i)
        m.ports.push_back({functional_input_name(i), PortDir::input});
    for (const auto& p : c.control_pins)
        m.ports.push_back({p.name, PortDir::input});
    for (const auto& ch : c.scan_chains)
        m.ports.push_back({ch.scan_in, PortDir::input});
    for (std::size_t j = 0; j < c.po; ++j)
        m.ports.push_back({functional_output_name(j), PortDir::output});
    for (const auto& ch : c.scan_chains)
        if (!ch.shared_out)
            m.ports.push_back({ch.scan_out, PortDir::output});
    return m;
}

TestEntity fixed(const std::string& id, Cycles t, std::size_t width, std::size_t control)
{
    TestEntity e;
    e.id = id + ".scan";
    e.core = id;
    e.time_function = {{width, t}};
    e.min_width = e.max_width = width;
    for (std::size_t i = 0; i < control; ++i)
        e.control_pins.push_back({"c" + std::to_string(i), PinKind::clock, false});
    e.resources = {{"core:" + id, ResourceMode::exclusive}};
    return e;
}

// Loads session k, LSB first, then enters test mode.
void load_session(GateSim& sim, std::size_t k, std::size_t bits)
{
    sim.set("test_mode", false);
    for (std::size_t i = 0; i < bits; ++i) {
        sim.set("session_si", (k >> i) & 1);
        sim.clock();
    }
    sim.set("test_mode", true);
    sim.eval();
}

} // namespace

TEST_CASE("TV wrapper")
{
    auto tv = load_core_file(fx + "/dsc/tv.core");
    auto cfg = design_wrapper(tv, 2);
    auto w = generate_wrapper_netlist(tv, cfg);
    CHECK(count_cells(w, cells::wbr) == 65);
    CHECK(count_cells(w, cells::mux2) == 1);
    CHECK(w.port("wsi0"));
    CHECK(w.port("wso1"));
    CHECK(!w.port("wsi2"));
    auto n = with_library({core_module(tv), w}, w.name);
    auto r = validate_netlist(n);
    CHECK_MESSAGE(r.ok(), (r.ok() ? "" : r.violations[0]));
}

TEST_CASE("pass-through wrapper")
{
    CoreTestInfo c;
    c.name = "P";
    c.clock_domains = {"a"};
    c.scan_chains = {{"c0", 4, "a", "si", "so", false}};
    c.ti = 1;
    c.to = 1;
    auto w = generate_wrapper_netlist(c, design_wrapper(c, 1));
    CHECK(count_cells(w, cells::wbr) == 0);
    const Instance* core = w.instance("core");
    REQUIRE(core);
    CHECK(*core->connection("si")->net == "wsi0");
    CHECK(*core->connection("so")->net == "wso0");
}

TEST_CASE("USB wrapper")
{
    auto usb = load_core_file(fx + "/dsc/usb.core");
    auto w = generate_wrapper_netlist(usb, design_wrapper(usb, 2));
    CHECK(count_cells(w, cells::wbr) == 325);
    CHECK(w.port("wso1"));
    auto n = with_library({core_module(usb), w}, w.name);
    CHECK(validate_netlist(n).ok());
    // without boundary cells on the shift path the cells still isolate the core
    WrapperOptions o;
    o.include_wbr_in_chains = false;
    auto w2 = generate_wrapper_netlist(usb, design_wrapper(usb, 2, o));
    CHECK(count_cells(w2, cells::wbr) == 325);
    CHECK(validate_netlist(with_library({core_module(usb), w2}, w2.name)).ok());
}

TEST_CASE("controller decode")
{
    auto soc = load_soc_manifest(fx + "/dsc/dsc.manifest");
    auto s = schedule_sessions(soc, default_constraints(soc));
    REQUIRE(s.sessions.size() == 3);
    auto ctrl = generate_test_controller(s, soc);
    CHECK(count_cells(ctrl, cells::dff) == 2);
    std::size_t en = 0;
    for (const auto& p : ctrl.ports)
        en += p.name.rfind("en_", 0) == 0;
    CHECK(en == 4);
    auto n = with_library({ctrl}, ctrl.name);
    REQUIRE(validate_netlist(n).ok());
    GateSim sim(n, ctrl.name);
    sim.set("se", true);
    for (std::size_t k = 0; k < 3; ++k) {
        load_session(sim, k, 2);
        for (std::size_t j = 0; j < 3; ++j)
            CHECK(sim.get("sess" + std::to_string(j)) == (j == k));
        for (const auto& sess : s.sessions)
            for (const auto& a : sess.assignments)
                CHECK(sim.get("en_" + sanitize_name(a.entity.id)) == (sess.index == k));
    }
    sim.set("test_mode", false);
    sim.eval();
    for (std::size_t j = 0; j < 3; ++j)
        CHECK(!sim.get("sess" + std::to_string(j)));
}

TEST_CASE("controller register width")
{
    std::vector<TestEntity> e;
    for (int i = 0; i < 5; ++i)
        e.push_back(fixed("k" + std::to_string(i), 100 + static_cast<Cycles>(i), 2, 1));
    Constraints c;
    c.pin_budget = 8;
    auto s = schedule_sessions(e, c);
    REQUIRE(s.sessions.size() == 5);
    SocDescription soc;
    for (int i = 0; i < 5; ++i) {
        CoreTestInfo core;
        core.name = "k" + std::to_string(i);
        core.control_pins = {{"c0", PinKind::clock, false}, {"se", PinKind::scan_enable, true}};
        soc.cores.push_back(core);
    }
    auto ctrl = generate_test_controller(s, soc);
    CHECK(count_cells(ctrl, cells::dff) == 3);
    auto n = with_library({ctrl}, ctrl.name);
    REQUIRE(validate_netlist(n).ok());
    GateSim sim(n, ctrl.name);
    sim.set("se", false);
    for (std::size_t k = 0; k < 8; ++k) {
        load_session(sim, k, 3);
        for (std::size_t j = 0; j < 5; ++j)
            CHECK(sim.get("sess" + std::to_string(j)) == (j == k));
    }

    auto one = schedule_sessions(std::vector<TestEntity>{e[0]}, c);
    auto c1 = generate_test_controller(one, soc);
    CHECK(count_cells(c1, cells::dff) == 0);
    GateSim s1(with_library({c1}, c1.name), c1.name);
    s1.set("test_mode", true);
    s1.eval();
    CHECK(s1.get("en_k0_scan"));
}

TEST_CASE("TAM selectors")
{
    std::vector<TestEntity> e{fixed("a", 100, 2, 1), fixed("b", 90, 2, 1)};
    Constraints c;
    c.pin_budget = 40;
    auto together = schedule_sessions(e, c);
    REQUIRE(together.sessions.size() == 1);
    auto m1 = generate_tam_mux(together);
    CHECK(count_cells(m1, cells::mux2) == 0);

    c.pin_budget = 8;
    auto apart = schedule_sessions(e, c);
    REQUIRE(apart.sessions.size() == 2);
    auto m2 = generate_tam_mux(apart);
    std::size_t outs = 0;
    for (const auto& p : m2.ports)
        outs += p.name.rfind("tam_out", 0) == 0;
    CHECK(outs == 2);
    CHECK(count_cells(m2, cells::mux2) == outs);
}

TEST_CASE("DSC insertion")
{
    auto soc = load_soc_manifest(fx + "/dsc/dsc.manifest");
    auto s = schedule_sessions(soc, default_constraints(soc));
    auto fabric = generate_test_fabric(soc, s);
    auto original = parse_netlist(read_text_file(soc.netlist_path));
    REQUIRE(validate_netlist(original).ok());
    auto inserted = insert_dft(original, fabric);
    auto r = validate_netlist(inserted);
    CHECK_MESSAGE(r.ok(), (r.ok() ? "" : r.violations[0]));
    auto t = check_transparency(original, inserted, fabric);
    CHECK_MESSAGE(t.ok(), (t.ok() ? "" : t.violations[0]));
    CHECK(parse_netlist(write_netlist(inserted)) == inserted);

    CHECK(insert_dft(original, GeneratedTestFabric{}) == original);

    auto broken = original;
    auto& top = broken.top_module();
    top.instances.erase(std::remove_if(top.instances.begin(), top.instances.end(),
                                       [](const Instance& i) { return i.module == "TV"; }),
                        top.instances.end());
    CHECK_THROWS_WITH_AS(insert_dft(broken, fabric), doctest::Contains("missing core instance"), Error);

    // a mutation that rewires a functional path must be caught
    auto bad = inserted;
    for (auto& inst : bad.top_module().instances)
        if (inst.name == "u_tv_wrapper")
            for (auto& c : inst.connections)
                if (c.port == "pi0")
                    c.net = "bus_w0";
    CHECK(!check_transparency(original, bad, fabric).ok());
}

TEST_CASE("area report")
{
    CHECK(area_report(0, 1000).test_area == 503);
    auto r = area_report(100, 1000000);
    CHECK(r.test_area == 3103);
    CHECK(r.overhead_fraction == doctest::Approx(0.003103));

    auto soc = load_soc_manifest(fx + "/dsc/dsc.manifest");
    auto fabric = generate_test_fabric(soc, schedule_sessions(soc, default_constraints(soc)));
    std::size_t cells = (221 + 104) + (25 + 40) + (165 + 104);
    CHECK(fabric.wbr_cells() == cells);
    std::uint64_t area = 26 * cells + 503;
    auto dsc = area_report(fabric, soc.chip_gates);
    CHECK(dsc.test_area == area);
    CHECK(dsc.overhead_fraction == doctest::Approx(0.003).epsilon(0.0005 / 0.003));
    auto calibrated = area_report(fabric, static_cast<std::uint64_t>(static_cast<double>(area) / 0.003));
    CHECK(calibrated.overhead_fraction == doctest::Approx(0.003).epsilon(1e-4));
    CHECK_THROWS_AS(area_report(1, 0), Error);
}
