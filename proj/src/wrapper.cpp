// SPDX-License-Identifier: Apache-2.0
#include "stk/wrapper.hpp"

#include <algorithm>
#include <iomanip>
#include <map>
#include <numeric>
#include <set>
#include <sstream>

#include "json.hpp"

namespace stk {

std::size_t WrapperChain::internal_length() const
{
    std::size_t n = 0;
    for (const auto& s : segments)
        n += s.length;
    return n;
}

namespace {

std::vector<std::string> domains_with_chains(const CoreTestInfo& core)
{
    std::vector<std::string> out;
    for (const auto& ch : core.scan_chains)
        if (std::find(out.begin(), out.end(), ch.clock_domain) == out.end())
            out.push_back(ch.clock_domain);
    return out;
}

// Longest-processing-time-first over whole chains. With `domain_locked`,
// a wrapper chain only ever holds chains of one clock domain, and enough
// empty wrapper chains are held back for domains not seen yet.
void partition_hard(const CoreTestInfo& core, bool domain_locked, std::vector<WrapperChain>& out)
{
    std::vector<std::size_t> order(core.scan_chains.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return core.scan_chains[a].length > core.scan_chains[b].length;
    });

    std::vector<std::size_t> load(out.size(), 0);
    std::vector<std::string> owner(out.size());
    std::set<std::string> unseen;
    if (domain_locked)
        for (const auto& d : domains_with_chains(core))
            unseen.insert(d);

    for (std::size_t item : order) {
        const auto& ch = core.scan_chains[item];
        std::size_t empties = static_cast<std::size_t>(std::count(owner.begin(), owner.end(), std::string()));
        std::size_t reserve = unseen.size() - (unseen.count(ch.clock_domain) ? 1 : 0);
        std::size_t best = out.size();
        for (std::size_t k = 0; k < out.size(); ++k) {
            if (domain_locked) {
                bool empty = owner[k].empty();
                if (!empty && owner[k] != ch.clock_domain)
                    continue;
                if (empty && !unseen.count(ch.clock_domain) && empties <= reserve)
                    continue;
            }
            if (best == out.size() || load[k] < load[best])
                best = k;
        }
        out[best].segments.push_back({item, 0, ch.length});
        load[best] += ch.length;
        if (domain_locked) {
            owner[best] = ch.clock_domain;
            unseen.erase(ch.clock_domain);
        }
    }
}

// Cuts the flops [first, first+count) of the concatenated chains (in declared
// order) into per-chain segments.
void append_flop_range(const CoreTestInfo& core, const std::vector<std::size_t>& chains, std::size_t first,
                       std::size_t count, WrapperChain& dst)
{
    std::size_t base = 0;
    for (std::size_t c : chains) {
        std::size_t len = core.scan_chains[c].length;
        std::size_t lo = std::max(first, base);
        std::size_t hi = std::min(first + count, base + len);
        if (lo < hi)
            dst.segments.push_back({c, lo - base, hi - lo});
        base += len;
    }
}

void split_even(const CoreTestInfo& core, const std::vector<std::size_t>& chains, std::size_t n_out,
                std::vector<WrapperChain>& out, std::size_t out_first)
{
    std::size_t total = 0;
    for (std::size_t c : chains)
        total += core.scan_chains[c].length;
    std::size_t base = total / n_out, extra = total % n_out;
    std::size_t pos = 0;
    for (std::size_t k = 0; k < n_out; ++k) {
        std::size_t len = base + (k < extra ? 1 : 0);
        append_flop_range(core, chains, pos, len, out[out_first + k]);
        pos += len;
    }
}

void partition_soft(const CoreTestInfo& core, bool domain_locked, std::vector<WrapperChain>& out)
{
    if (!domain_locked) {
        std::vector<std::size_t> all(core.scan_chains.size());
        std::iota(all.begin(), all.end(), 0);
        split_even(core, all, out.size(), out, 0);
        return;
    }
    // Give every domain one wrapper chain, then hand out the rest to whichever
    // domain currently has the longest per-chain share.
    auto domains = domains_with_chains(core);
    std::vector<std::vector<std::size_t>> members(domains.size());
    std::vector<std::size_t> flops(domains.size(), 0);
    for (std::size_t c = 0; c < core.scan_chains.size(); ++c) {
        auto d = static_cast<std::size_t>(
            std::find(domains.begin(), domains.end(), core.scan_chains[c].clock_domain) - domains.begin());
        members[d].push_back(c);
        flops[d] += core.scan_chains[c].length;
    }
    std::vector<std::size_t> share(domains.size(), 1);
    for (std::size_t extra = out.size() - domains.size(); extra > 0; --extra) {
        std::size_t best = 0;
        auto per_chain = [&](std::size_t d) { return (flops[d] + share[d] - 1) / share[d]; };
        for (std::size_t d = 1; d < domains.size(); ++d)
            if (per_chain(d) > per_chain(best))
                best = d;
        ++share[best];
    }
    std::size_t first = 0;
    for (std::size_t d = 0; d < domains.size(); ++d) {
        split_even(core, members[d], share[d], out, first);
        first += share[d];
    }
}

} // namespace

std::size_t minimum_tam_width(const CoreTestInfo& core, const WrapperOptions& opts)
{
    if (opts.allow_domain_merging)
        return 1;
    return std::max<std::size_t>(1, domains_with_chains(core).size());
}

WrapperConfig design_wrapper(const CoreTestInfo& core, std::size_t tam_width, const WrapperOptions& opts)
{
    if (tam_width < 1)
        throw Error("core '" + core.name + "': TAM width must be at least 1");
    std::size_t min_w = minimum_tam_width(core, opts);
    if (tam_width < min_w)
        throw Error("core '" + core.name + "': infeasible TAM width " + std::to_string(tam_width) + ", " +
                    std::to_string(min_w) + " clock domains cannot share wrapper chains");

    WrapperConfig cfg;
    cfg.core = core.name;
    cfg.tam_width = tam_width;
    cfg.includes_wbr_in_chains = opts.include_wbr_in_chains;
    cfg.wraps_test_pins = opts.wrap_test_pins;
    cfg.wrapper_chains.resize(tam_width);

    if (core.softness == Softness::hard)
        partition_hard(core, !opts.allow_domain_merging, cfg.wrapper_chains);
    else
        partition_soft(core, !opts.allow_domain_merging, cfg.wrapper_chains);

    if (opts.include_wbr_in_chains) {
        auto fill = [&](std::size_t n, bool input) {
            for (std::size_t i = 0; i < n; ++i) {
                std::size_t best = 0;
                for (std::size_t k = 1; k < tam_width; ++k) {
                    const auto& a = cfg.wrapper_chains[k];
                    const auto& b = cfg.wrapper_chains[best];
                    if ((input ? a.scan_in_length() < b.scan_in_length() : a.scan_out_length() < b.scan_out_length()))
                        best = k;
                }
                (input ? cfg.wrapper_chains[best].input_cells : cfg.wrapper_chains[best].output_cells).push_back(i);
            }
        };
        fill(core.pi, true);
        fill(core.po, false);
    }

    for (std::size_t k = 0; k < tam_width; ++k) {
        const auto& wc = cfg.wrapper_chains[k];
        cfg.si = std::max(cfg.si, wc.scan_in_length());
        cfg.so = std::max(cfg.so, wc.scan_out_length());
        std::vector<std::string> doms;
        for (const auto& s : wc.segments) {
            const auto& d = core.scan_chains[s.chain].clock_domain;
            if (std::find(doms.begin(), doms.end(), d) == doms.end())
                doms.push_back(d);
        }
        if (doms.size() > 1) {
            std::string list;
            for (const auto& d : doms)
                list += (list.empty() ? "" : ",") + d;
            cfg.warnings.push_back("wrapper chain " + std::to_string(k) + " of core '" + core.name +
                                   "' mixes clock domains " + list + " (lock-up latches assumed)");
        }
    }
    return cfg;
}

Cycles scan_cycles(std::size_t si, std::size_t so, std::size_t patterns)
{
    if (patterns == 0)
        return 0;
    Cycles hi = std::max(si, so), lo = std::min(si, so);
    return (1 + hi) * static_cast<Cycles>(patterns) + lo;
}

CoreTestTime scan_test_time(const CoreTestInfo& core, const WrapperConfig& cfg)
{
    const PatternSet* set = core.scan_patterns();
    if (!set)
        throw Error("core '" + core.name + "' has no scan patterns");
    if (cfg.core != core.name)
        throw Error("wrapper configuration for '" + cfg.core + "' used with core '" + core.name + "'");
    return {core.name, PatternKind::scan, scan_cycles(cfg.si, cfg.so, set->count)};
}

CoreTestTime functional_test_time(const CoreTestInfo& core)
{
    const PatternSet* set = core.functional_patterns();
    if (!set)
        throw Error("core '" + core.name + "' has no functional patterns");
    return {core.name, PatternKind::functional, set->count};
}

std::vector<WidthPoint> sweep_tam_widths(const CoreTestInfo& core, std::size_t w_max, const WrapperOptions& opts)
{
    std::vector<WidthPoint> out;
    for (std::size_t w = minimum_tam_width(core, opts); w <= w_max; ++w)
        out.push_back({w, scan_test_time(core, design_wrapper(core, w, opts)).cycles});
    return out;
}

std::vector<WidthPoint> pareto_tam_widths(const CoreTestInfo& core, std::size_t w_max, const WrapperOptions& opts)
{
    std::vector<WidthPoint> out;
    for (const auto& pt : sweep_tam_widths(core, w_max, opts))
        if (out.empty() || pt.cycles < out.back().cycles)
            out.push_back(pt);
    return out;
}

std::size_t wrapper_cell_count(const CoreTestInfo& core, const WrapperConfig& cfg)
{
    std::size_t cells = core.pi + core.po;
    if (cfg.wraps_test_pins)
        cells += core.ti + core.to;
    return cells;
}

std::uint64_t wrapper_area(const CoreTestInfo& core, const WrapperConfig& cfg, const AreaConstants& k)
{
    return k.wbr_cell * wrapper_cell_count(core, cfg);
}

std::vector<WrapperRow> wrapper_table(const CoreTestInfo& core, std::size_t w_max, const WrapperOptions& opts,
                                      const AreaConstants& k)
{
    std::vector<WrapperRow> rows;
    for (std::size_t w = minimum_tam_width(core, opts); w <= w_max; ++w) {
        auto cfg = design_wrapper(core, w, opts);
        WrapperRow r;
        r.width = w;
        r.si = cfg.si;
        r.so = cfg.so;
        r.cycles = core.scan_patterns() ? scan_test_time(core, cfg).cycles : 0;
        r.area = wrapper_area(core, cfg, k);
        rows.push_back(r);
    }
    return rows;
}

std::string format_wrapper_table(const CoreTestInfo& core, const std::vector<WrapperRow>& rows)
{
    std::ostringstream os;
    os << "core " << core.name << "\n";
    os << std::setw(6) << "w" << std::setw(8) << "si" << std::setw(8) << "so" << std::setw(14) << "cycles"
       << std::setw(10) << "area" << "\n";
    for (const auto& r : rows)
        os << std::setw(6) << r.width << std::setw(8) << r.si << std::setw(8) << r.so << std::setw(14) << r.cycles
           << std::setw(10) << r.area << "\n";
    return os.str();
}

std::string wrapper_records(const CoreTestInfo& core, const std::vector<WrapperRow>& rows)
{
    std::string out;
    for (const auto& r : rows) {
        nlohmann::ordered_json j;
        j["core"] = core.name;
        j["w"] = r.width;
        j["si"] = r.si;
        j["so"] = r.so;
        j["cycles"] = r.cycles;
        j["area"] = r.area;
        out += j.dump() + "\n";
    }
    return out;
}

} // namespace stk
