// SPDX-License-Identifier: Apache-2.0
#pragma once

// Structural test logic for a scheduled SOC: one wrapper per scheduled core,
// the session controller, the TAM output selectors, the functional-IO
// selectors, and their insertion into the SOC netlist.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "stk/core_model.hpp"
#include "stk/netlist.hpp"
#include "stk/scheduler.hpp"
#include "stk/wrapper.hpp"

namespace stk {

// Wrapper module `<core>_wrapper`: the core's functional and control ports,
// plus wsi<k>/wso<k> per wrapper chain and wmode, wse, wclk. The core itself
// is instance `core`. Soft cores are expected to expose one re-stitched
// chain per wrapper chain as rsi<k>/rso<k>.
Module generate_wrapper_netlist(const CoreTestInfo& core, const WrapperConfig& cfg);

std::string wrapper_module_name(const std::string& core);
std::string sanitize_name(const std::string& s);

// Session register loaded serially (session_si, LSB first, clocked by
// ref_clk while test_mode=0) and decoded while test_mode=1.
// Outputs: sess<s>, en_<entity>, core_en_<core>, wmode_<core>, wse_<core>,
// ften_<core> (functional-IO owner).
Module generate_test_controller(const TestSchedule& s, const SocDescription& soc);
std::size_t session_register_bits(std::size_t sessions);

// tam_in<k> -> <core>_wsi<j>, and per tam_out<k> a selector chain over the
// sessions driving it.
Module generate_tam_mux(const TestSchedule& s);

// fio_out<j> selector chain over the cores tested on the functional-IO port.
Module generate_fio_mux(const TestSchedule& s, const SocDescription& soc);

struct GeneratedTestFabric {
    std::vector<CoreTestInfo> cores;     // wrapped cores, schedule order
    std::vector<WrapperConfig> configs;  // parallel to cores
    std::vector<Module> wrappers;        // parallel to cores
    std::vector<std::string> fio_cores;  // cores with a functional-IO entity
    std::optional<Module> controller;
    std::optional<Module> tam_mux;
    std::optional<Module> fio_mux;
    TestSchedule schedule;

    bool empty() const { return wrappers.empty() && !controller; }
    std::size_t wbr_cells() const;
};

GeneratedTestFabric generate_test_fabric(const SocDescription& soc, const TestSchedule& s);

// Wraps every scheduled core instance of the top module and adds the
// controller, selectors and chip test pins. An empty fabric returns the
// netlist unchanged. Throws on a missing core instance or a port mismatch
// between the wrapper and the core module.
Netlist insert_dft(const Netlist& soc_netlist, const GeneratedTestFabric& fabric);

// Functional-mode equivalence: with the wrappers and selectors transparent,
// every original endpoint (scan chain pins of wrapped cores excepted) is
// connected to exactly the same set of original endpoints as before.
NetlistCheck check_transparency(const Netlist& original, const Netlist& inserted, const GeneratedTestFabric& fabric);

struct AreaReport {
    std::size_t wbr_cells = 0;
    std::uint64_t wrapper_area = 0;
    std::uint64_t controller_area = 0;
    std::uint64_t tam_mux_area = 0;
    std::uint64_t test_area = 0;
    std::uint64_t chip_gates = 0;
    double overhead_fraction = 0.0;
    std::vector<std::pair<std::string, std::uint64_t>> per_core;
};

// `chip_gate_count` is the gate count of the whole chip, test logic included.
AreaReport area_report(std::size_t wbr_cells, std::uint64_t chip_gate_count, const AreaConstants& k = {});
AreaReport area_report(const GeneratedTestFabric& fabric, std::uint64_t chip_gate_count, const AreaConstants& k = {});
std::string format_area_report(const AreaReport& r);

} // namespace stk
