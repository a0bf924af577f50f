// SPDX-License-Identifier: Apache-2.0
#include "doctest.h"

#include <random>

#include "random_core.hpp"
#include "stk/core_model.hpp"
#include "stk/scheduler.hpp"

using namespace stk;

namespace {
const std::string fx = STK_FIXTURES;
}

TEST_CASE("USB core file")
{
    auto c = load_core_file(fx + "/dsc/usb.core");
    CHECK(c.ti == 18);
    CHECK(c.to == 4);
    CHECK(c.pi == 221);
    CHECK(c.po == 104);
    REQUIRE(c.scan_chains.size() == 4);
    CHECK(c.scan_chains[0].length == 1629);
    CHECK(c.scan_chains[1].length == 78);
    CHECK(c.scan_chains[2].length == 293);
    CHECK(c.scan_chains[3].length == 45);
    REQUIRE(c.scan_patterns());
    CHECK(c.scan_patterns()->count == 716);
    CHECK(c.functional_patterns() == nullptr);
}

TEST_CASE("JPEG and TV core files")
{
    auto j = load_core_file(fx + "/dsc/jpeg.core");
    CHECK(j.ti == 1);
    CHECK(j.to == 0);
    CHECK(j.pi == 165);
    CHECK(j.po == 104);
    CHECK(j.scan_chains.empty());
    REQUIRE(j.functional_patterns());
    CHECK(j.functional_patterns()->count == 235696);

    auto t = load_core_file(fx + "/dsc/tv.core");
    CHECK(t.ti == 6);
    CHECK(t.to == 1);
    CHECK(t.pi == 25);
    CHECK(t.po == 40);
    CHECK(t.scan_patterns()->count == 229);
    CHECK(t.functional_patterns()->count == 202673);
    auto rep = validate_core(t);
    CHECK(rep.ok());
    REQUIRE(rep.notes.size() == 1);
    CHECK(rep.notes[0].find("shared pin") != std::string::npos);
}

TEST_CASE("empty core with a zero-count functional set")
{
    auto c = parse_core_test_info("core E { patterns func count=0; }");
    CHECK(c.scan_chains.empty());
    REQUIRE(c.functional_patterns());
    CHECK(c.functional_patterns()->count == 0);
    CHECK(serialize_core_test_info(parse_core_test_info("core E { }")) == "core E {\n}\n");
}

TEST_CASE("validation failures")
{
    CHECK_THROWS_WITH_AS(parse_core_test_info("core A { ti 2; to 1; clockdomains a; control clk kind=clock;\n"
                                              "  chain c len=0 clk=a in=si out=so; }"),
                         doctest::Contains("chain length >= 1"), ParseError);

    auto c = load_core_file(fx + "/dsc/tv.core");
    Pattern p;
    for (const auto& ch : c.scan_chains) {
        p.load.push_back(std::string(ch.length, '0'));
        p.unload.push_back(std::string(ch.length, '1'));
    }
    p.inputs = std::string(c.pi, '0');
    p.outputs = std::string(c.po, 'X');
    c.pattern_sets[0].count = 1;
    c.pattern_sets[0].vectors = std::vector<Pattern>{p};
    CHECK(validate_core(c).ok());
    (*c.pattern_sets[0].vectors)[0].load[1].pop_back();
    auto rep = validate_core(c);
    REQUIRE(!rep.ok());
    CHECK(rep.violations[0].find("load string") != std::string::npos);

    CHECK_THROWS_AS(parse_core_test_info("core A { ti 1; bogus 3; }"), ParseError);
    try {
        parse_core_test_info("core A {\n  pi x;\n}");
        FAIL("expected a parse error");
    } catch (const ParseError& e) {
        CHECK(e.line() == 2);
    }
}

TEST_CASE("serialize round trip")
{
    auto usb = load_core_file(fx + "/dsc/usb.core");
    CHECK(parse_core_test_info(serialize_core_test_info(usb)) == usb);

    std::mt19937_64 rng(7);
    testing::RandomCoreOptions o;
    o.vectors = true;
    for (int i = 0; i < 200; ++i) {
        auto c = testing::random_core(rng, o, "R" + std::to_string(i));
        REQUIRE(validate_core(c).ok());
        auto text = serialize_core_test_info(c);
        auto back = parse_core_test_info(text);
        CHECK(back == c);
        CHECK(serialize_core_test_info(back) == text);
    }
}

TEST_CASE("SOC manifest")
{
    auto soc = load_soc_manifest(fx + "/dsc/dsc.manifest");
    CHECK(soc.name == "DSC");
    REQUIRE(soc.cores.size() == 3);
    CHECK(soc.cores[0].name == "USB");
    CHECK(soc.cores[1].name == "TV");
    CHECK(soc.cores[2].name == "JPEG");
    CHECK(soc.pin_budget == 80);
    CHECK(soc.chip_gates == 5879000);
    CHECK(soc.memories.size() == 12);
    CHECK(soc.notes.empty());

    auto empty = parse_soc_manifest("soc Z;", fx);
    CHECK(empty.cores.empty());
    CHECK(!empty.warnings.empty());

    auto tight = parse_soc_manifest("soc T; pin_budget 5; core dsc/usb.core;", fx);
    REQUIRE(tight.cores.size() == 1);
    // the oracle: USB's control pins alone exceed the budget
    std::size_t control = tight.cores[0].control_pins.size();
    CHECK(control + controller_pin_count > 5);
    REQUIRE(!tight.notes.empty());
    CHECK(tight.notes[0].find("USB") != std::string::npos);

    CHECK_THROWS_AS(parse_soc_manifest("soc T; core missing.core;", fx), Error);
    CHECK_THROWS_AS(parse_soc_manifest("soc T; core dsc/usb.core; core dsc/usb.core;", fx), Error);
    CHECK_THROWS_AS(parse_soc_manifest("soc T; pin_budget -3;", fx), Error);
}
