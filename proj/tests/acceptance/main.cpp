// SPDX-License-Identifier: Apache-2.0
// Acceptance run: one PASS/FAIL line per criterion, exit status 1 if any fails.
#include <algorithm>
#include <chrono>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <iomanip>
#include <iostream>
#include <map>
#include <random>
#include <sstream>

#include "random_core.hpp"
#include "shift_sim.hpp"
#include "stk/core_model.hpp"
#include "stk/dft.hpp"
#include "stk/march.hpp"
#include "stk/netlist.hpp"
#include "stk/patterns.hpp"
#include "stk/scheduler.hpp"
#include "stk/wrapper.hpp"
#include "wrapper_model.hpp"

using namespace stk;
namespace fs = std::filesystem;

namespace {

const std::string fx = STK_FIXTURES;

// Collects failed expectations of one criterion.
struct Check {
    std::vector<std::string> failures;
    std::string detail;

    void expect(bool ok, const std::string& what)
    {
        if (!ok && failures.size() < 5)
            failures.push_back(what);
        else if (!ok)
            failures.back() = "...";
    }
};

int failed = 0;

void criterion(int n, const std::string& name, double limit_s, const std::function<void(Check&)>& body)
{
    Check c;
    auto t0 = std::chrono::steady_clock::now();
    try {
        body(c);
    } catch (const std::exception& e) {
        c.failures.push_back(std::string("exception: ") + e.what());
    }
    double s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (limit_s > 0 && s > limit_s)
        c.failures.push_back("runtime " + std::to_string(s) + " s over " + std::to_string(limit_s) + " s");
    bool ok = c.failures.empty();
    failed += !ok;
    std::ostringstream t;
    t << std::fixed << std::setprecision(2) << s;
    std::cout << (ok ? "PASS" : "FAIL") << " " << std::setw(2) << n << " " << name << " (" << t.str() << " s)";
    if (!c.detail.empty())
        std::cout << ": " << c.detail;
    std::cout << "\n";
    for (const auto& f : c.failures)
        std::cout << "       " << f << "\n";
    std::cout.flush();
}

SocDescription dsc() { return load_soc_manifest(fx + "/dsc/dsc.manifest"); }

// Best max bin over all assignments of `lens` to `w` bins (bins interchangeable).
std::size_t best_partition(const std::vector<std::size_t>& lens, std::size_t w)
{
    std::vector<std::size_t> bins(w, 0);
    std::size_t best = SIZE_MAX;
    std::function<void(std::size_t, std::size_t)> go = [&](std::size_t i, std::size_t used) {
        if (i == lens.size()) {
            best = std::min(best, *std::max_element(bins.begin(), bins.end()));
            return;
        }
        for (std::size_t b = 0; b < std::min(used + 1, w); ++b) {
            bins[b] += lens[i];
            if (bins[b] < best)
                go(i + 1, std::max(used, b + 1));
            bins[b] -= lens[i];
        }
    };
    go(0, 0);
    return best;
}

std::size_t longest_internal(const WrapperConfig& cfg)
{
    std::size_t m = 0;
    for (const auto& wc : cfg.wrapper_chains)
        m = std::max(m, wc.internal_length());
    return m;
}

CoreTestInfo grid_core(const std::vector<std::size_t>& lengths, std::size_t pi, std::size_t po, std::size_t p)
{
    CoreTestInfo c;
    c.name = "G";
    c.pi = pi;
    c.po = po;
    c.clock_domains = {"d0"};
    c.control_pins = {{"clk", PinKind::clock, false}, {"se", PinKind::scan_enable, true}};
    for (std::size_t k = 0; k < lengths.size(); ++k)
        c.scan_chains.push_back(
            {"c" + std::to_string(k), lengths[k], "d0", "si" + std::to_string(k), "so" + std::to_string(k), false});
    c.ti = c.control_pins.size() + lengths.size();
    c.to = lengths.size();
    c.pattern_sets = {{PatternKind::scan, p, CaptureMode::normal, std::nullopt}};
    return c;
}

std::vector<std::string> stream_rows(const CycleStream& s)
{
    std::vector<std::string> out(s.length());
    for (std::uint64_t t = 0; t < s.length(); ++t)
        s.row(t, out[t]);
    return out;
}

std::map<std::string, std::string> tree(const fs::path& root)
{
    std::map<std::string, std::string> t;
    for (const auto& e : fs::recursive_directory_iterator(root))
        if (e.is_regular_file()) {
            std::ifstream is(e.path(), std::ios::binary);
            std::ostringstream os;
            os << is.rdbuf();
            t[fs::relative(e.path(), root).string()] = os.str();
        }
    return t;
}

} // namespace

int main(int argc, char** argv)
{
    std::string stk_bin = argc > 1 ? argv[1] : STK_BIN;

    criterion(1, "core test information of the camera SOC", 1.0, [](Check& c) {
        struct Row {
            std::string name;
            std::size_t ti, to, pi, po;
            std::vector<std::size_t> chains;
            std::size_t scan, func;
        };
        const std::vector<Row> table = {{"USB", 18, 4, 221, 104, {1629, 78, 293, 45}, 716, 0},
                                        {"TV", 6, 1, 25, 40, {577, 576}, 229, 202673},
                                        {"JPEG", 1, 0, 165, 104, {}, 0, 235696}};
        auto soc = dsc();
        c.expect(soc.cores.size() == 3, "expected 3 cores");
        for (const auto& r : table) {
            const auto* core = soc.find_core(r.name);
            c.expect(core != nullptr, r.name + " missing");
            if (!core)
                continue;
            std::vector<std::size_t> lens;
            for (const auto& ch : core->scan_chains)
                lens.push_back(ch.length);
            c.expect(core->ti == r.ti && core->to == r.to && core->pi == r.pi && core->po == r.po,
                     r.name + " TI/TO/PI/PO");
            c.expect(lens == r.chains, r.name + " chains");
            c.expect((core->scan_patterns() ? core->scan_patterns()->count : 0) == r.scan, r.name + " scan patterns");
            c.expect((core->functional_patterns() ? core->functional_patterns()->count : 0) == r.func,
                     r.name + " functional patterns");
            c.expect(validate_core(*core).ok(), r.name + " validation");
        }
        c.detail = "3 cores, 6 columns exact";
    });

    criterion(2, "session-based schedule of the camera SOC", 5.0, [](Check& c) {
        auto soc = dsc();
        Constraints k = default_constraints(soc);
        c.expect(k.pin_budget == 80 && k.sharing.share_se, "default constraints");
        auto s = schedule_sessions(soc, k);
        auto serial = schedule_serial(soc, k);
        auto rs = evaluate_schedule(s), rr = evaluate_schedule(serial);
        c.expect(rs.ok() && rr.ok(), "schedule violations");
        c.expect(s.sessions.size() == 3, "sessions " + std::to_string(s.sessions.size()));
        c.expect(rs.total_cycles < rr.total_cycles, "session-based not shorter than serial");
        for (auto t : {rs.total_cycles, rr.total_cycles})
            c.expect(t >= 1'000'000 && t <= 10'000'000, "total outside [1e6, 1e7]: " + std::to_string(t));
        c.detail = std::to_string(s.sessions.size()) + " sessions, " + std::to_string(rs.total_cycles) + " < " +
                   std::to_string(rr.total_cycles) + " serial";
    });

    criterion(3, "pin pressure makes serial testing best", 10.0, [](Check& c) {
        auto soc = load_soc_manifest(fx + "/counterexample/pin_pressure.manifest");
        Constraints k = default_constraints(soc);
        auto ents = build_test_entities(soc, k);
        auto serial = schedule_serial(ents, k);
        auto multi = exhaustive_schedule(ents, k, [](const std::vector<std::size_t>& sizes) {
            return std::any_of(sizes.begin(), sizes.end(), [](std::size_t n) { return n > 1; });
        });
        c.expect(ents.size() >= 2, "needs at least two entities");
        c.expect(evaluate_schedule(serial).ok(), "serial schedule violations");
        if (multi) {
            c.expect(serial.total_cycles < multi->total_cycles, "a multi-entity schedule is not slower");
            c.detail = "serial " + std::to_string(serial.total_cycles) + " < best multi-entity " +
                       std::to_string(multi->total_cycles);
        } else {
            c.detail = "serial " + std::to_string(serial.total_cycles) + ", no multi-entity session fits";
        }
    });

    criterion(4, "control IO accounting without sharing", 0, [](Check& c) {
        auto soc = dsc();
        auto ents = build_test_entities(soc, default_constraints(soc));
        auto io = io_accounting(ents, SharingPolicy{false, false}, soc.pin_budget);
        c.expect(io.control_pins_used == 19, "total " + std::to_string(io.control_pins_used));
        c.expect(io.clock_pins == 6 && io.reset_pins == 4 && io.test_enable_pins == 7 && io.scan_enable_pins == 2,
                 "breakdown");
        c.detail = std::to_string(io.control_pins_used) + " = " + std::to_string(io.clock_pins) + " clock + " +
                   std::to_string(io.reset_pins) + " reset + " + std::to_string(io.test_enable_pins) + " TE + " +
                   std::to_string(io.scan_enable_pins) + " SE";
    });

    criterion(5, "chain balancing against brute force", 30.0, [](Check& c) {
        std::mt19937_64 rng(2024);
        testing::RandomCoreOptions o;
        o.soft = 0;
        o.max_chains = 8;
        o.max_flops = 200;
        WrapperOptions wo;
        wo.include_wbr_in_chains = false;
        double worst = 0.0;
        for (int i = 0; i < 200; ++i) {
            auto core = testing::random_core(rng, o, "H" + std::to_string(i));
            std::size_t w = std::uniform_int_distribution<std::size_t>(1, 8)(rng);
            std::vector<std::size_t> lens;
            for (const auto& ch : core.scan_chains)
                lens.push_back(ch.length);
            auto lpt = longest_internal(design_wrapper(core, w, wo));
            auto opt = best_partition(lens, w);
            double bound = (4.0 / 3.0 - 1.0 / (3.0 * static_cast<double>(w))) * static_cast<double>(opt);
            c.expect(static_cast<double>(lpt) <= bound + 1e-9,
                     "instance " + std::to_string(i) + ": " + std::to_string(lpt) + " vs opt " + std::to_string(opt));
            worst = std::max(worst, static_cast<double>(lpt) / static_cast<double>(opt));
        }
        for (const auto& core : dsc().cores) {
            if (core.scan_chains.empty())
                continue;
            std::vector<std::size_t> lens;
            for (const auto& ch : core.scan_chains)
                lens.push_back(ch.length);
            for (std::size_t w = 1; w <= 8; ++w)
                c.expect(longest_internal(design_wrapper(core, w, wo)) == best_partition(lens, w),
                         core.name + " w=" + std::to_string(w) + " not optimal");
        }
        std::ostringstream d;
        d << "200 random hard cores, worst ratio " << std::setprecision(4) << worst << "; camera cores optimal for w=1..8";
        c.detail = d.str();
    });

    criterion(6, "test time model against shift simulation and emitted streams", 0, [](Check& c) {
        const std::vector<std::size_t> values = {1, 2, 3, 5, 8, 13, 21};
        std::vector<std::vector<std::size_t>> shapes;
        for (std::size_t a = 0; a < values.size(); ++a) {
            shapes.push_back({values[a]});
            for (std::size_t b = a; b < values.size(); ++b) {
                shapes.push_back({values[a], values[b]});
                for (std::size_t d = b; d < values.size(); ++d)
                    shapes.push_back({values[a], values[b], values[d]});
            }
        }
        std::size_t runs = 0;
        for (const auto& lens : shapes)
            for (std::size_t p = 0; p <= 8; ++p)
                for (auto [pi, po] : {std::pair<std::size_t, std::size_t>{0, 0}, {2, 1}, {1, 3}})
                    for (bool wbr : {false, true}) {
                        if (!wbr && pi + po > 0)
                            continue;
                        auto core = grid_core(lens, pi, po, p);
                        WrapperOptions wo;
                        wo.include_wbr_in_chains = wbr;
                        for (std::size_t w = 1; w <= lens.size() + 1; ++w) {
                            auto cfg = design_wrapper(core, w, wo);
                            std::vector<testing::SimChain> sim;
                            for (const auto& wc : cfg.wrapper_chains)
                                sim.push_back({wc.input_cells.size(), wc.internal_length(), wc.output_cells.size()});
                            c.expect(scan_test_time(core, cfg).cycles == testing::simulate_scan_cycles(sim, p),
                                     "grid core mismatch at p=" + std::to_string(p) + " w=" + std::to_string(w));
                            ++runs;
                        }
                    }

        auto soc = dsc();
        auto sched = schedule_sessions(soc, default_constraints(soc));
        auto fabric = generate_test_fabric(soc, sched);
        auto map = make_translation_map(fabric, 1);
        std::size_t entities = 0;
        for (const auto& sess : sched.sessions)
            for (const auto& a : sess.assignments) {
                auto st = translate_to_chip(a, map);
                const auto& core = *soc.find_core(a.entity.core);
                Cycles model = a.entity.kind == EntityKind::scan ? scan_test_time(core, map.wrappers.at(core.name)).cycles
                                                                 : functional_test_time(core).cycles;
                c.expect(st->length() == model && st->length() == a.cycles, a.entity.id + " emitted length");
                ++entities;
            }
        c.detail = std::to_string(runs) + " grid wrappers (<= 63 flops, p <= 8), " + std::to_string(entities) +
                   " camera entities";
    });

    criterion(7, "chip-level vectors reproduce core responses", 60.0, [](Check& c) {
        std::mt19937_64 rng(7);
        testing::RandomCoreOptions o;
        o.vectors = true;
        std::size_t mutations = 0, detected = 0, cycles = 0;
        for (int trial = 0; trial < 100; ++trial) {
            auto core = testing::random_core(rng, o, "C" + std::to_string(trial));
            const auto& set = *core.scan_patterns();
            std::size_t w = std::uniform_int_distribution<std::size_t>(minimum_tam_width(core), 5)(rng);
            WrapperOptions wo;
            wo.include_wbr_in_chains = rng() & 1;
            auto cfg = design_wrapper(core, w, wo);
            std::vector<std::size_t> wires(w);
            for (std::size_t i = 0; i < w; ++i)
                wires[i] = 2 * i + (rng() & 1);
            SharingPolicy sh{static_cast<bool>(rng() & 1), static_cast<bool>(rng() & 1)};
            VectorSource golden(*set.vectors);
            auto ws = std::make_shared<WrapperSource>(core, cfg, std::make_shared<VectorSource>(*set.vectors));
            auto st = scan_stream(core, ws, set.capture, wires, sh);
            cycles += st->length();
            auto r = testing::run_wrapper_model(core, cfg, golden, *st, st->length(), wires, set.capture, sh, trial);
            c.expect(r.ok() && r.captures == set.count,
                     "core " + std::to_string(trial) + ": " + (r.errors.empty() ? "mismatch" : r.errors[0]));

            auto rows = stream_rows(*st);
            std::vector<std::pair<std::size_t, std::size_t>> expects;
            for (std::size_t t = 0; t < rows.size(); ++t)
                for (std::size_t k = 0; k < rows[t].size(); ++k)
                    if (rows[t][k] == 'H' || rows[t][k] == 'L')
                        expects.push_back({t, k});
            for (int m = 0; m < 5 && !expects.empty(); ++m) {
                auto [t, k] = expects[rng() % expects.size()];
                auto mutated = rows;
                mutated[t][k] = mutated[t][k] == 'H' ? 'L' : 'H';
                TableStream ts(st->pins(), mutated);
                ++mutations;
                bool caught =
                    !testing::run_wrapper_model(core, cfg, golden, ts, ts.length(), wires, set.capture, sh, trial).ok();
                detected += caught;
                c.expect(caught, "core " + std::to_string(trial) + ": mutation at cycle " + std::to_string(t) +
                                     " not detected");
            }
        }
        c.detail = "100 cores, " + std::to_string(cycles) + " cycles, " + std::to_string(detected) + "/" +
                   std::to_string(mutations) + " mutations detected";
    });

    criterion(8, "DFT insertion on the camera SOC", 0, [](Check& c) {
        auto soc = dsc();
        auto fabric = generate_test_fabric(soc, schedule_sessions(soc, default_constraints(soc)));
        auto original = parse_netlist(read_text_file(soc.netlist_path));
        auto inserted = insert_dft(original, fabric);
        auto v = validate_netlist(inserted);
        auto t = check_transparency(original, inserted, fabric);
        c.expect(v.ok(), "structural: " + (v.ok() ? std::string() : v.violations[0]));
        c.expect(t.ok(), "transparency: " + (t.ok() ? std::string() : t.violations[0]));
        c.expect(parse_netlist(write_netlist(inserted)) == inserted, "written netlist does not reparse");
        c.detail = std::to_string(fabric.wrappers.size()) + " wrappers, " + std::to_string(fabric.wbr_cells()) +
                   " boundary cells, transparent mode isomorphic";
    });

    criterion(9, "area model", 0, [](Check& c) {
        // 26 per boundary cell, 371 controller, 132 TAM multiplexer
        for (std::size_t cells : {0u, 1u, 100u, 659u}) {
            auto r = area_report(cells, 10'000'000);
            c.expect(r.test_area == 26 * cells + 371 + 132, "total for " + std::to_string(cells) + " cells");
        }
        auto soc = dsc();
        auto fabric = generate_test_fabric(soc, schedule_sessions(soc, default_constraints(soc)));
        std::size_t cells = 0;
        for (const auto& core : soc.cores)
            cells += core.pi + core.po;
        auto r = area_report(fabric, soc.chip_gates);
        std::uint64_t hand = 26 * cells + 371 + 132;
        c.expect(r.wbr_cells == cells, "boundary cells " + std::to_string(r.wbr_cells));
        c.expect(r.test_area == hand, "test area " + std::to_string(r.test_area) + " vs " + std::to_string(hand));
        c.expect(std::abs(r.overhead_fraction - 0.003) <= 0.0005, "overhead off");
        std::ostringstream d;
        d << hand << " gates on " << soc.chip_gates << ", overhead " << std::fixed << std::setprecision(3)
          << 100.0 * r.overhead_fraction << "%";
        c.detail = d.str();
    });

    criterion(10, "memory BIST coverage and fabric equivalence", 60.0, [](Check& c) {
        std::size_t faults = 0, fabrics = 0;
        for (std::size_t w : {4, 8, 16})
            for (std::size_t b : {1, 4}) {
                MemoryConfig mem{"m" + std::to_string(w) + "x" + std::to_string(b), w, b, MemoryPorts::single_port};
                auto mats = fault_coverage(mats_plus(), mem, {FaultClass::saf});
                c.expect(mats.kinds[0].detected == mats.kinds[0].total, "MATS+ SAF on " + mem.name);
                auto cm = fault_coverage(march_c_minus(), mem, {FaultClass::saf, FaultClass::tf, FaultClass::cfid});
                for (const auto& k : cm.kinds) {
                    c.expect(k.total > 0 && k.detected == k.total,
                             "March C- " + std::string(to_string(k.kind)) + " on " + mem.name);
                    faults += k.total;
                }
                faults += mats.kinds[0].total;
                for (const auto& m : {mats_plus(), march_c_minus()}) {
                    auto f = generate_bist({mem}, m);
                    c.expect(verify_fabric(f, {mem}, m).ok(), "fabric for " + mem.name);
                    ++fabrics;
                }
            }
        std::mt19937_64 rng(31);
        for (int i = 0; i < 40; ++i) {
            std::vector<MemoryConfig> mems;
            std::size_t n = 1 + rng() % 6;
            for (std::size_t j = 0; j < n; ++j)
                mems.push_back({"m" + std::to_string(j), 1 + rng() % 64, 1 + rng() % 8,
                                rng() & 1 ? MemoryPorts::two_port : MemoryPorts::single_port});
            auto m = i % 2 ? march_c_minus() : mats_plus();
            GroupingPolicy p{rng() & 1 ? SequencerGrouping::per_memory : SequencerGrouping::per_shape,
                             static_cast<bool>(rng() & 1)};
            c.expect(verify_fabric(generate_bist(mems, m, p), mems, m).ok(), "random fabric " + std::to_string(i));
            ++fabrics;
        }
        auto soc = dsc();
        c.expect(verify_fabric(generate_bist(soc.memories, march_c_minus()), soc.memories, march_c_minus()).ok(),
                 "camera SOC fabric");
        ++fabrics;
        c.detail = std::to_string(faults) + " faults simulated, all detected; " + std::to_string(fabrics) +
                   " fabrics verified";
    });

    criterion(11, "two full flow runs give identical outputs", 0, [&](Check& c) {
        fs::path base = fs::temp_directory_path() / "stk_acceptance";
        fs::remove_all(base);
        std::vector<std::map<std::string, std::string>> trees;
        for (const char* run : {"a", "b"}) {
            fs::path out = base / run;
            std::string cmd = "\"" + stk_bin + "\" all --manifest \"" + fx + "/dsc/dsc.manifest\" --out \"" +
                              out.string() + "\" > /dev/null";
            int rc = std::system(cmd.c_str());
            c.expect(rc == 0, std::string("run ") + run + " exit status " + std::to_string(rc));
            trees.push_back(tree(out));
        }
        c.expect(!trees[0].empty(), "no outputs");
        c.expect(trees[0] == trees[1], "output trees differ");
        std::uint64_t bytes = 0;
        for (const auto& [k, v] : trees[0])
            bytes += v.size();
        c.detail = std::to_string(trees[0].size()) + " files, " + std::to_string(bytes) + " bytes, byte-identical";
        fs::remove_all(base);
    });

    std::cout << (failed ? std::to_string(failed) + " of 11 criteria failed" : "all 11 criteria pass") << "\n";
    return failed ? 1 : 0;
}
