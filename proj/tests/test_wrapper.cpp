// SPDX-License-Identifier: Apache-2.0
#include "doctest.h"

#include <algorithm>
#include <random>

#include "random_core.hpp"
#include "shift_sim.hpp"
#include "stk/core_model.hpp"
#include "stk/wrapper.hpp"

using namespace stk;

namespace {

const std::string fx = STK_FIXTURES;

CoreTestInfo soft_core(std::size_t flops, std::size_t patterns)
{
    CoreTestInfo c;
    c.name = "S";
    c.softness = Softness::soft;
    c.clock_domains = {"a"};
    c.control_pins = {{"clk", PinKind::clock, false}, {"se", PinKind::scan_enable, true}};
    c.scan_chains = {{"c0", flops, "a", "si0", "so0", false}};
    c.ti = 3;
    c.to = 1;
    c.pattern_sets = {{PatternKind::scan, patterns, CaptureMode::normal, std::nullopt}};
    return c;
}

std::vector<testing::SimChain> sim_shape(const WrapperConfig& cfg)
{
    std::vector<testing::SimChain> out;
    for (const auto& wc : cfg.wrapper_chains)
        out.push_back({wc.input_cells.size(), wc.internal_length(), wc.output_cells.size()});
    return out;
}

} // namespace

TEST_CASE("USB at two wires without boundary cells")
{
    auto usb = load_core_file(fx + "/dsc/usb.core");
    WrapperOptions o;
    o.include_wbr_in_chains = false;
    auto cfg = design_wrapper(usb, 2, o);
    CHECK(cfg.si == 1629);
    CHECK(cfg.so == 1629);
    std::vector<std::size_t> lens;
    for (const auto& wc : cfg.wrapper_chains)
        lens.push_back(wc.internal_length());
    std::sort(lens.begin(), lens.end());
    CHECK(lens == std::vector<std::size_t>{416, 1629});

    // brute force over every 2-partition of the chains
    std::size_t best = SIZE_MAX;
    for (unsigned mask = 0; mask < 16; ++mask) {
        std::size_t a = 0, b = 0;
        for (unsigned i = 0; i < 4; ++i)
            ((mask >> i) & 1 ? a : b) += usb.scan_chains[i].length;
        best = std::min(best, std::max(a, b));
    }
    CHECK(cfg.si == best);

    auto one = design_wrapper(usb, 1, o);
    CHECK(one.wrapper_chains[0].internal_length() == 2045);
}

TEST_CASE("soft core even split")
{
    auto c = soft_core(2045, 10);
    auto cfg = design_wrapper(c, 4);
    std::vector<std::size_t> lens;
    for (const auto& wc : cfg.wrapper_chains)
        lens.push_back(wc.internal_length());
    CHECK(lens == std::vector<std::size_t>{512, 511, 511, 511});
    auto pts = pareto_tam_widths(c, 4);
    REQUIRE(pts.size() == 4);
    for (std::size_t i = 0; i < pts.size(); ++i) {
        std::size_t w = i + 1;
        std::size_t longest = (2045 + w - 1) / w;
        CHECK(pts[i].cycles == (1 + longest) * 10 + longest);
    }
}

TEST_CASE("wrapper invariants on random cores")
{
    std::mt19937_64 rng(11);
    for (int i = 0; i < 300; ++i) {
        auto c = testing::random_core(rng);
        std::size_t w = std::uniform_int_distribution<std::size_t>(1, 6)(rng);
        WrapperOptions o;
        o.include_wbr_in_chains = i % 2 == 0;
        auto cfg = design_wrapper(c, w, o);
        REQUIRE(cfg.wrapper_chains.size() == w);
        std::vector<std::size_t> flops(c.scan_chains.size(), 0);
        std::vector<int> in(c.pi, 0), out(c.po, 0);
        std::size_t si = 0, so = 0;
        for (const auto& wc : cfg.wrapper_chains) {
            for (const auto& s : wc.segments) {
                if (c.softness == Softness::hard)
                    CHECK((s.offset == 0 && s.length == c.scan_chains[s.chain].length));
                flops[s.chain] += s.length;
            }
            for (auto k : wc.input_cells)
                ++in[k];
            for (auto k : wc.output_cells)
                ++out[k];
            si = std::max(si, wc.scan_in_length());
            so = std::max(so, wc.scan_out_length());
        }
        for (std::size_t k = 0; k < c.scan_chains.size(); ++k)
            CHECK(flops[k] == c.scan_chains[k].length);
        for (int v : in)
            CHECK(v == (o.include_wbr_in_chains ? 1 : 0));
        for (int v : out)
            CHECK(v == (o.include_wbr_in_chains ? 1 : 0));
        CHECK(cfg.si == si);
        CHECK(cfg.so == so);
    }
}

TEST_CASE("test time formula against the shift simulator")
{
    CHECK(scan_cycles(3, 3, 2) == 11);
    CHECK(testing::simulate_scan_cycles({{0, 3, 0}}, 2) == 11);
    CHECK(scan_cycles(3, 3, 0) == 0);

    auto tv = load_core_file(fx + "/dsc/tv.core");
    WrapperOptions o;
    o.include_wbr_in_chains = false;
    // both wrapper chains end at the 577-flop chain's length on the unload side
    // too, so the final unload is 577 shifts: (1+577)*229 + 577
    auto tv2 = design_wrapper(tv, 2, o);
    CHECK(tv2.si == 577);
    CHECK(tv2.so == 577);
    CHECK(scan_test_time(tv, tv2).cycles == 132939);
    CHECK(testing::simulate_scan_cycles({{0, 5, 0}, {0, 4, 0}}, 3) == scan_cycles(5, 5, 3));
    CHECK(functional_test_time(tv).cycles == 202673);
    CHECK(functional_test_time(load_core_file(fx + "/dsc/jpeg.core")).cycles == 235696);

    std::mt19937_64 rng(5);
    testing::RandomCoreOptions ro;
    ro.max_flops = 24;
    for (int i = 0; i < 100; ++i) {
        auto c = testing::random_core(rng, ro);
        std::size_t w = std::uniform_int_distribution<std::size_t>(1, 4)(rng);
        WrapperOptions wo;
        wo.include_wbr_in_chains = i % 3 != 0;
        auto cfg = design_wrapper(c, w, wo);
        std::size_t p = c.scan_patterns()->count;
        CHECK(scan_test_time(c, cfg).cycles == testing::simulate_scan_cycles(sim_shape(cfg), p));
    }
}

TEST_CASE("pareto widths and area")
{
    auto usb = load_core_file(fx + "/dsc/usb.core");
    WrapperOptions o;
    o.include_wbr_in_chains = false;
    auto sweep = sweep_tam_widths(usb, 5, o);
    REQUIRE(sweep.size() == 5);
    for (std::size_t i = 1; i < 5; ++i)
        CHECK(sweep[i].cycles == sweep[1].cycles);
    auto pts = pareto_tam_widths(usb, 5, o);
    REQUIRE(pts.size() == 2);
    CHECK(pts[0].width == 1);
    CHECK(pts[1].width == 2);

    auto single = soft_core(10, 3);
    single.softness = Softness::hard;
    CHECK(pareto_tam_widths(single, 4).size() == 1);

    auto tv = load_core_file(fx + "/dsc/tv.core");
    CHECK(wrapper_area(tv, design_wrapper(tv, 2)) == 1690);
    CHECK(wrapper_area(usb, design_wrapper(usb, 2)) == 8450);
    auto bare = soft_core(5, 1);
    CHECK(wrapper_area(bare, design_wrapper(bare, 1)) == 0);

    // boundary cells included: USB w=2 and TV widths
    CHECK(scan_test_time(usb, design_wrapper(usb, 2)).cycles == 1168709);
    CHECK(scan_test_time(usb, design_wrapper(usb, 1)).cycles == 1625321);
    CHECK(scan_test_time(tv, design_wrapper(tv, 2)).cycles == 137531);
    CHECK(scan_test_time(tv, design_wrapper(tv, 3)).cycles == 132939);
}

TEST_CASE("clock domains kept apart")
{
    auto usb = load_core_file(fx + "/dsc/usb.core");
    WrapperOptions o;
    o.allow_domain_merging = false;
    CHECK_THROWS_AS(design_wrapper(usb, 3, o), Error);
    auto cfg = design_wrapper(usb, 4, o);
    CHECK(cfg.warnings.empty());
    CHECK(!design_wrapper(usb, 2).warnings.empty());
}
