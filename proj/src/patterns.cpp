// SPDX-License-Identifier: Apache-2.0
#include "stk/patterns.hpp"

#include <algorithm>
#include <ostream>
#include <random>
#include <set>

#include "stk/dft.hpp"

namespace stk {

namespace {

std::uint64_t fnv1a(std::string_view s, std::uint64_t h = 1469598103934665603ull)
{
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

std::uint64_t mix(std::uint64_t x)
{
    x += 0x9e3779b97f4a7c15ull;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
    return x ^ (x >> 31);
}

char expect_symbol(char c)
{
    return c == '0' ? 'L' : c == '1' ? 'H' : 'X';
}

} // namespace

SyntheticSource::SyntheticSource(const CoreTestInfo& core, PatternKind kind, std::size_t count, std::uint64_t seed)
    : pi_(core.pi), po_(core.po), count_(count), scan_(kind == PatternKind::scan)
{
    for (const auto& ch : core.scan_chains)
        chain_lengths_.push_back(ch.length);
    seed_ = mix(seed ^ fnv1a(core.name) ^ (scan_ ? 0x5ca9ull : 0xf00cull));
}

Pattern SyntheticSource::at(std::size_t i) const
{
    if (i >= count_)
        throw Error("pattern index " + std::to_string(i) + " out of range");
    std::mt19937_64 rng(mix(seed_ + i));
    std::uint64_t bits = 0;
    int left = 0;
    auto bit = [&]() {
        if (left == 0) {
            bits = rng();
            left = 64;
        }
        --left;
        bool b = bits & 1;
        bits >>= 1;
        return b;
    };
    // roughly one expected bit in eight is a don't-care
    auto expected = [&]() {
        bool x = bit() && bit() && bit();
        return x ? 'X' : (bit() ? '1' : '0');
    };
    Pattern p;
    if (scan_)
        for (std::size_t len : chain_lengths_) {
            std::string load(len, '0'), unload(len, '0');
            for (auto& c : load)
                c = bit() ? '1' : '0';
            for (auto& c : unload)
                c = expected();
            p.load.push_back(std::move(load));
            p.unload.push_back(std::move(unload));
        }
    p.inputs.assign(pi_, '0');
    for (auto& c : p.inputs)
        c = bit() ? '1' : '0';
    p.outputs.assign(po_, '0');
    for (auto& c : p.outputs)
        c = expected();
    return p;
}

std::shared_ptr<const PatternSource> core_patterns(const CoreTestInfo& core, PatternKind kind, std::uint64_t seed)
{
    const PatternSet* set = kind == PatternKind::scan ? core.scan_patterns() : core.functional_patterns();
    if (!set)
        throw Error("core '" + core.name + "' has no " + std::string(to_string(kind)) + " patterns");
    if (set->vectors)
        return std::make_shared<VectorSource>(*set->vectors);
    return std::make_shared<SyntheticSource>(core, kind, set->count, seed);
}

WrapperSource::WrapperSource(const CoreTestInfo& core, WrapperConfig cfg,
                             std::shared_ptr<const PatternSource> core_level)
    : core_info_(core), cfg_(std::move(cfg)), core_(std::move(core_level))
{
    if (cfg_.core != core.name)
        throw Error("wrapper configuration for '" + cfg_.core + "' used with core '" + core.name + "'");
}

Pattern WrapperSource::at(std::size_t i) const
{
    const CoreTestInfo& core = core_info_;
    Pattern c = core_->at(i);
    const std::string where = "core '" + core.name + "' pattern " + std::to_string(i) + ": ";
    if (c.load.size() != core.scan_chains.size() || c.unload.size() != core.scan_chains.size())
        throw Error(where + "needs one load and one unload string per scan chain");
    for (std::size_t k = 0; k < core.scan_chains.size(); ++k)
        if (c.load[k].size() != core.scan_chains[k].length || c.unload[k].size() != core.scan_chains[k].length)
            throw Error(where + "vector length does not match chain '" + core.scan_chains[k].name + "' length " +
                        std::to_string(core.scan_chains[k].length));
    const bool wbr = cfg_.includes_wbr_in_chains;
    if (wbr && (c.inputs.size() != core.pi || c.outputs.size() != core.po))
        throw Error(where + "input/output strings do not match the core's functional pins");

    Pattern w;
    for (const auto& wc : cfg_.wrapper_chains) {
        // position order, scan-in side first
        std::string stim, resp;
        if (wbr)
            for (std::size_t idx : wc.input_cells)
                stim += c.inputs[idx];
        for (const auto& seg : wc.segments) {
            std::size_t len = core.scan_chains[seg.chain].length;
            for (std::size_t j = seg.offset; j < seg.offset + seg.length; ++j) {
                stim += c.load[seg.chain][len - 1 - j];
                resp += c.unload[seg.chain][len - 1 - j];
            }
        }
        if (wbr)
            for (std::size_t idx : wc.output_cells)
                resp += c.outputs[idx];
        std::reverse(stim.begin(), stim.end());
        std::reverse(resp.begin(), resp.end());
        w.load.push_back(std::move(stim));
        w.unload.push_back(std::move(resp));
    }
    if (!wbr) {
        w.inputs = c.inputs;
        w.outputs = c.outputs;
    }
    return w;
}

PatternSet translate_to_wrapper(const CoreTestInfo& core, const PatternSet& set, const WrapperConfig& cfg)
{
    if (set.kind != PatternKind::scan)
        throw Error("only scan patterns are shifted through wrapper chains");
    if (!set.vectors)
        throw Error("core '" + core.name + "': pattern set carries no vectors");
    WrapperSource src(core, cfg, std::make_shared<VectorSource>(*set.vectors));
    PatternSet out;
    out.kind = set.kind;
    out.count = set.count;
    out.capture = set.capture;
    std::vector<Pattern> v;
    for (std::size_t i = 0; i < src.count(); ++i)
        v.push_back(src.at(i));
    out.vectors = std::move(v);
    return out;
}

namespace {

struct ControlColumns {
    std::vector<std::size_t> clocks, resets, se, te;
};

void add_control_pins(const CoreTestInfo& core, const SharingPolicy& sharing, std::vector<std::string>& pins,
                      ControlColumns& cols)
{
    for (const auto& p : core.control_pins) {
        std::string chip = chip_control_pin(core.name, p, sharing);
        if (std::find(pins.begin(), pins.end(), chip) != pins.end())
            continue;
        std::size_t col = pins.size();
        pins.push_back(chip);
        switch (p.kind) {
        case PinKind::clock: cols.clocks.push_back(col); break;
        case PinKind::reset: cols.resets.push_back(col); break;
        case PinKind::scan_enable: cols.se.push_back(col); break;
        case PinKind::test_enable: cols.te.push_back(col); break;
        }
    }
}

class ScanStream : public CycleStream {
public:
    ScanStream(const CoreTestInfo& core, std::shared_ptr<const WrapperSource> src, CaptureMode capture,
               const std::vector<std::size_t>& wires, const SharingPolicy& sharing)
        : src_(std::move(src)), pulse_(capture == CaptureMode::pulse_clock)
    {
        const WrapperConfig& cfg = src_->config();
        if (wires.size() != cfg.wrapper_chains.size())
            throw Error("core '" + core.name + "': " + std::to_string(wires.size()) + " TAM wires for " +
                        std::to_string(cfg.wrapper_chains.size()) + " wrapper chains");
        for (std::size_t k = 0; k < wires.size(); ++k) {
            const auto& wc = cfg.wrapper_chains[k];
            chains_.push_back({pins_.size(), pins_.size() + 1, wc.scan_in_length(), wc.scan_out_length()});
            pins_.push_back(tam_in_pin(wires[k]));
            pins_.push_back(tam_out_pin(wires[k]));
        }
        add_control_pins(core, sharing, pins_, ctl_);
        ref_clk_ = pins_.size();
        pins_.push_back("ref_clk");
        si_ = cfg.si;
        so_ = cfg.so;
        l_ = std::max(si_, so_);
        p_ = src_->count();
        length_ = scan_cycles(si_, so_, p_);
    }

    const std::vector<std::string>& pins() const override { return pins_; }
    std::uint64_t length() const override { return length_; }

    void row(std::uint64_t t, std::string& out) const override
    {
        if (t >= length_)
            throw Error("cycle " + std::to_string(t) + " past the end of the stream");
        out.assign(pins_.size(), 'X');
        // locate the block
        std::size_t block = 0;
        std::uint64_t off = 0, len = si_;
        bool capture = false;
        if (t < si_) {
            off = t;
        } else if (t == si_) {
            capture = true;
        } else {
            std::uint64_t u = t - si_ - 1;
            std::uint64_t mid = static_cast<std::uint64_t>(p_ - 1) * (l_ + 1);
            if (u < mid) {
                block = 1 + static_cast<std::size_t>(u / (l_ + 1));
                off = u % (l_ + 1);
                len = l_;
                capture = off == l_;
            } else {
                block = p_;
                off = u - mid;
                len = so_;
            }
        }
        if (capture) {
            for (const auto& ch : chains_)
                out[ch.in] = '0';
        } else {
            const Pattern* load = block < p_ ? &pattern(block) : nullptr;
            const Pattern* unload = block >= 1 ? &pattern(block - 1) : nullptr;
            for (std::size_t k = 0; k < chains_.size(); ++k) {
                const auto& ch = chains_[k];
                std::uint64_t start = len - ch.si;
                out[ch.in] = (load && off >= start) ? load->load[k][off - start] : '0';
                out[ch.out] = (unload && off < ch.so) ? expect_symbol(unload->unload[k][off]) : 'X';
            }
        }
        for (std::size_t c : ctl_.clocks)
            out[c] = '1';
        for (std::size_t c : ctl_.resets)
            out[c] = '0';
        for (std::size_t c : ctl_.se)
            out[c] = (capture && !pulse_) ? '0' : '1';
        for (std::size_t c : ctl_.te)
            out[c] = (capture && pulse_) ? '0' : '1';
        out[ref_clk_] = '1';
    }

private:
    struct Chain {
        std::size_t in, out;
        std::uint64_t si, so;
    };

    const Pattern& pattern(std::size_t i) const
    {
        for (auto& slot : cache_)
            if (slot.first == i)
                return slot.second;
        auto& victim = cache_[next_victim_];
        next_victim_ ^= 1;
        victim.first = i;
        victim.second = src_->at(i);
        return victim.second;
    }

    std::shared_ptr<const WrapperSource> src_;
    bool pulse_;
    std::vector<std::string> pins_;
    std::vector<Chain> chains_;
    ControlColumns ctl_;
    std::size_t ref_clk_ = 0;
    std::uint64_t si_ = 0, so_ = 0, l_ = 0;
    std::size_t p_ = 0;
    std::uint64_t length_ = 0;
    mutable std::pair<std::size_t, Pattern> cache_[2] = {{SIZE_MAX, {}}, {SIZE_MAX, {}}};
    mutable int next_victim_ = 0;
};

class FunctionalStream : public CycleStream {
public:
    FunctionalStream(const CoreTestInfo& core, std::shared_ptr<const PatternSource> src, const SharingPolicy& sharing)
        : src_(std::move(src)), pi_(core.pi), po_(core.po)
    {
        for (std::size_t i = 0; i < core.pi; ++i)
            pins_.push_back(fio_in_pin(i));
        for (std::size_t j = 0; j < core.po; ++j)
            pins_.push_back(fio_out_pin(j));
        add_control_pins(core, sharing, pins_, ctl_);
    }

    const std::vector<std::string>& pins() const override { return pins_; }
    std::uint64_t length() const override { return src_->count(); }

    void row(std::uint64_t t, std::string& out) const override
    {
        Pattern p = src_->at(static_cast<std::size_t>(t));
        if (p.inputs.size() != pi_ || p.outputs.size() != po_)
            throw Error("functional pattern " + std::to_string(t) + " does not match the core's pins");
        out.assign(pins_.size(), 'X');
        for (std::size_t i = 0; i < pi_; ++i)
            out[i] = p.inputs[i];
        for (std::size_t j = 0; j < po_; ++j)
            out[pi_ + j] = expect_symbol(p.outputs[j]);
        for (std::size_t c : ctl_.clocks)
            out[c] = '1';
        for (std::size_t c : ctl_.resets)
            out[c] = '0';
        for (std::size_t c : ctl_.se)
            out[c] = '0';
        for (std::size_t c : ctl_.te)
            out[c] = '0';
    }

private:
    std::shared_ptr<const PatternSource> src_;
    std::size_t pi_, po_;
    std::vector<std::string> pins_;
    ControlColumns ctl_;
};

// An entity that runs from on-chip state only (memory BIST) for a number of
// cycles; it drives no chip pins of its own.
class IdleStream : public CycleStream {
public:
    explicit IdleStream(std::uint64_t n) : n_(n) {}
    const std::vector<std::string>& pins() const override { return pins_; }
    std::uint64_t length() const override { return n_; }
    void row(std::uint64_t, std::string& out) const override { out.clear(); }

private:
    std::vector<std::string> pins_;
    std::uint64_t n_;
};

bool poolable(const std::string& pin) { return pin == "se" || pin == "te" || pin == "ref_clk"; }

class MergedStream : public CycleStream {
public:
    explicit MergedStream(std::vector<std::unique_ptr<CycleStream>> streams) : streams_(std::move(streams))
    {
        pins_ = {"test_mode", "session_si"};
        std::map<std::string, std::size_t> col;
        std::set<std::string> shared;
        for (const auto& s : streams_) {
            std::vector<std::size_t> m;
            for (const auto& p : s->pins()) {
                if (p == "test_mode" || p == "session_si")
                    throw Error("pin collision: '" + p + "' belongs to the session controller");
                auto it = col.find(p);
                if (it == col.end()) {
                    col[p] = pins_.size();
                    m.push_back(pins_.size());
                    pins_.push_back(p);
                } else {
                    if (!poolable(p))
                        throw Error("pin collision: '" + p + "' is used by two entities of one session");
                    m.push_back(it->second);
                    shared.insert(p);
                }
            }
            map_.push_back(std::move(m));
            length_ = std::max(length_, s->length());
        }
        for (std::size_t i = 0; i < pins_.size(); ++i)
            shared_.push_back(shared.count(pins_[i]) ? 1 : 0);
    }

    const std::vector<std::string>& pins() const override { return pins_; }
    std::uint64_t length() const override { return length_; }

    void row(std::uint64_t t, std::string& out) const override
    {
        out.assign(pins_.size(), 'X');
        out[0] = '1';
        out[1] = '0';
        for (std::size_t s = 0; s < streams_.size(); ++s) {
            if (t >= streams_[s]->length())
                continue;
            streams_[s]->row(t, buf_);
            const auto& m = map_[s];
            for (std::size_t c = 0; c < m.size(); ++c) {
                char sym = buf_[c];
                char& dst = out[m[c]];
                if (shared_[m[c]] && dst != 'X' && sym != 'X' && sym != dst)
                    throw Error("pin collision on '" + pins_[m[c]] + "' at cycle " + std::to_string(t) + ": " +
                                std::string(1, dst) + " vs " + std::string(1, sym));
                if (sym != 'X' || !shared_[m[c]])
                    dst = sym;
            }
        }
    }

private:
    std::vector<std::unique_ptr<CycleStream>> streams_;
    std::vector<std::string> pins_;
    std::vector<std::vector<std::size_t>> map_;
    std::vector<char> shared_;
    std::uint64_t length_ = 0;
    mutable std::string buf_;
};

} // namespace

TranslationMap make_translation_map(const GeneratedTestFabric& fabric, std::uint64_t seed)
{
    TranslationMap m;
    for (std::size_t i = 0; i < fabric.cores.size(); ++i) {
        m.cores[fabric.cores[i].name] = fabric.cores[i];
        m.wrappers[fabric.cores[i].name] = fabric.configs[i];
    }
    m.sharing = fabric.schedule.constraints.sharing;
    m.seed = seed;
    return m;
}

std::unique_ptr<CycleStream> scan_stream(const CoreTestInfo& core, std::shared_ptr<const WrapperSource> patterns,
                                         CaptureMode capture, const std::vector<std::size_t>& wires,
                                         const SharingPolicy& sharing)
{
    return std::make_unique<ScanStream>(core, std::move(patterns), capture, wires, sharing);
}

std::unique_ptr<CycleStream> functional_stream(const CoreTestInfo& core, std::shared_ptr<const PatternSource> patterns,
                                               const SharingPolicy& sharing)
{
    return std::make_unique<FunctionalStream>(core, std::move(patterns), sharing);
}

std::unique_ptr<CycleStream> translate_to_chip(const Assignment& a, const TranslationMap& map)
{
    const TestEntity& e = a.entity;
    if (e.kind == EntityKind::bist)
        return std::make_unique<IdleStream>(a.cycles);
    auto core_it = map.cores.find(e.core);
    if (core_it == map.cores.end())
        throw Error("entity '" + e.id + "': core '" + e.core + "' is not in the translation map");
    const CoreTestInfo& core = core_it->second;
    std::unique_ptr<CycleStream> s;
    if (e.kind == EntityKind::scan) {
        auto w = map.wrappers.find(e.core);
        if (w == map.wrappers.end())
            throw Error("entity '" + e.id + "': pin unmapped, no wrapper for core '" + e.core + "'");
        if (w->second.tam_width != a.width)
            throw Error("entity '" + e.id + "': wrapper has " + std::to_string(w->second.tam_width) +
                        " chains but the schedule assigns " + std::to_string(a.width) + " wires");
        auto src = std::make_shared<WrapperSource>(core, w->second, core_patterns(core, PatternKind::scan, map.seed));
        const PatternSet* set = core.scan_patterns();
        s = scan_stream(core, std::move(src), set->capture, a.wires, map.sharing);
    } else {
        if (a.width != 0)
            throw Error("entity '" + e.id + "': functional vectors through the wrapper are not translated");
        s = functional_stream(core, core_patterns(core, PatternKind::functional, map.seed), map.sharing);
    }
    if (s->length() != a.cycles)
        throw Error("entity '" + e.id + "': stream has " + std::to_string(s->length()) + " cycles, schedule says " +
                    std::to_string(a.cycles));
    return s;
}

std::unique_ptr<CycleStream> merge_session_patterns(std::vector<std::unique_ptr<CycleStream>> streams)
{
    return std::make_unique<MergedStream>(std::move(streams));
}

std::unique_ptr<CycleStream> session_stream(const Session& s, const TranslationMap& map)
{
    std::vector<std::unique_ptr<CycleStream>> parts;
    for (const auto& a : s.assignments)
        parts.push_back(translate_to_chip(a, map));
    return merge_session_patterns(std::move(parts));
}

std::unique_ptr<CycleStream> session_setup_stream(std::size_t index, std::size_t sessions)
{
    if (index >= std::max<std::size_t>(sessions, 1))
        throw Error("session " + std::to_string(index) + " out of range");
    std::size_t bits = session_register_bits(sessions);
    std::vector<std::string> rows;
    for (std::size_t i = 0; i < bits; ++i)
        rows.push_back(std::string("0") + (((index >> i) & 1) ? '1' : '0') + "1");
    return std::make_unique<TableStream>(std::vector<std::string>{"test_mode", "session_si", "ref_clk"},
                                         std::move(rows));
}

TableStream::TableStream(std::vector<std::string> pins, std::vector<std::string> rows)
    : pins_(std::move(pins)), rows_(std::move(rows))
{
    for (const auto& r : rows_)
        if (r.size() != pins_.size())
            throw Error("table stream row width " + std::to_string(r.size()) + " != " + std::to_string(pins_.size()) +
                        " pins");
}

void emit_vectors(const CycleStream& s, std::ostream& out)
{
    std::string line;
    for (std::size_t i = 0; i < s.pins().size(); ++i)
        line += (i ? " " : "") + s.pins()[i];
    line += '\n';
    out.write(line.data(), static_cast<std::streamsize>(line.size()));
    std::string row;
    std::string buf;
    buf.reserve(1 << 20);
    for (std::uint64_t t = 0; t < s.length(); ++t) {
        s.row(t, row);
        buf += row;
        buf += '\n';
        if (buf.size() >= (1 << 20) - 4096) {
            out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
            buf.clear();
        }
    }
    out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
    if (!out)
        throw Error("vector write failed");
}

} // namespace stk
