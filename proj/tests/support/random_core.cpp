// SPDX-License-Identifier: Apache-2.0
#include "random_core.hpp"

#include <algorithm>

namespace stk::testing {

namespace {

std::size_t pick(std::mt19937_64& rng, std::size_t lo, std::size_t hi)
{
    return std::uniform_int_distribution<std::size_t>(lo, hi)(rng);
}

} // namespace

std::string random_bits(std::mt19937_64& rng, std::size_t n, bool allow_x)
{
    std::string s(n, '0');
    for (auto& c : s) {
        std::size_t r = pick(rng, 0, allow_x ? 4 : 1);
        c = r == 0 ? '0' : r == 1 ? '1' : r == 2 ? '0' : r == 3 ? '1' : 'X';
    }
    return s;
}

CoreTestInfo random_core(std::mt19937_64& rng, const RandomCoreOptions& o, const std::string& name)
{
    CoreTestInfo c;
    c.name = name;
    c.pi = pick(rng, 0, o.max_pi);
    c.po = pick(rng, 0, o.max_po);
    std::size_t domains = pick(rng, 1, std::max<std::size_t>(1, o.max_domains));
    for (std::size_t d = 0; d < domains; ++d) {
        c.clock_domains.push_back("d" + std::to_string(d));
        c.control_pins.push_back({"clk" + std::to_string(d), PinKind::clock, false});
    }
    c.control_pins.push_back({"rst", PinKind::reset, false});
    c.control_pins.push_back({"se", PinKind::scan_enable, true});
    bool te = pick(rng, 0, 1) == 1;
    if (te)
        c.control_pins.push_back({"te", PinKind::test_enable, false});

    std::size_t chains = pick(rng, 1, std::max<std::size_t>(1, o.max_chains));
    std::size_t budget = std::max(o.max_flops, chains);
    std::size_t total = pick(rng, chains, budget);
    // random composition of `total` into `chains` positive parts
    std::vector<std::size_t> cuts;
    for (std::size_t i = 1; i < total; ++i)
        cuts.push_back(i);
    std::shuffle(cuts.begin(), cuts.end(), rng);
    cuts.resize(chains - 1);
    std::sort(cuts.begin(), cuts.end());
    std::size_t prev = 0;
    bool shared_used = false;
    for (std::size_t k = 0; k < chains; ++k) {
        std::size_t end = k + 1 < chains ? cuts[k] : total;
        ScanChain ch;
        ch.name = "c" + std::to_string(k);
        ch.length = end - prev;
        prev = end;
        ch.clock_domain = c.clock_domains[pick(rng, 0, domains - 1)];
        ch.scan_in = "si" + std::to_string(k);
        if (o.shared_outputs && !shared_used && c.po > 0 && pick(rng, 0, 3) == 0) {
            ch.shared_out = true;
            ch.scan_out = functional_output_name(pick(rng, 0, c.po - 1));
            shared_used = true;
        } else {
            ch.scan_out = "so" + std::to_string(k);
            ++c.to;
        }
        c.scan_chains.push_back(ch);
    }
    c.ti = c.control_pins.size() + c.scan_chains.size();
    c.softness = o.soft < 0 ? (pick(rng, 0, 1) ? Softness::soft : Softness::hard)
                            : (o.soft ? Softness::soft : Softness::hard);

    PatternSet scan;
    scan.kind = PatternKind::scan;
    scan.count = pick(rng, 1, std::max<std::size_t>(1, o.max_patterns));
    if (te && o.pulse_clock && pick(rng, 0, 1))
        scan.capture = CaptureMode::pulse_clock;
    if (o.vectors) {
        std::vector<Pattern> v;
        for (std::size_t i = 0; i < scan.count; ++i) {
            Pattern p;
            for (const auto& ch : c.scan_chains) {
                p.load.push_back(random_bits(rng, ch.length));
                p.unload.push_back(random_bits(rng, ch.length, true));
            }
            p.inputs = random_bits(rng, c.pi);
            p.outputs = random_bits(rng, c.po, true);
            v.push_back(std::move(p));
        }
        scan.vectors = std::move(v);
    }
    c.pattern_sets.push_back(std::move(scan));
    if (o.functional && pick(rng, 0, 2) == 0) {
        PatternSet f;
        f.kind = PatternKind::functional;
        f.count = pick(rng, 0, 50);
        c.pattern_sets.push_back(f);
    }
    c.test_power = static_cast<double>(pick(rng, 1, 20)) / 10.0;
    return c;
}

} // namespace stk::testing
