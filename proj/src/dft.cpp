// SPDX-License-Identifier: Apache-2.0
#include "stk/dft.hpp"

#include <algorithm>
#include <iomanip>
#include <map>
#include <set>
#include <sstream>

namespace stk {

namespace {

Connection pin(std::string port, std::string net) { return {std::move(port), std::move(net)}; }
Connection open(std::string port) { return {std::move(port), std::nullopt}; }

void add_port(Module& m, const std::string& name, PortDir dir)
{
    if (!m.port(name))
        m.ports.push_back({name, dir});
}

void add_net(Module& m, const std::string& name)
{
    if (!m.has_net(name))
        m.nets.push_back(name);
}

void add_inst(Module& m, std::string_view mod, std::string name, std::vector<Connection> conns)
{
    Instance i;
    i.module = std::string(mod);
    i.name = std::move(name);
    i.connections = std::move(conns);
    m.instances.push_back(std::move(i));
}

const ScanChain& chain_of(const CoreTestInfo& core, const ChainSegment& s) { return core.scan_chains.at(s.chain); }

std::string rsi(std::size_t k) { return "rsi" + std::to_string(k); }
std::string rso(std::size_t k) { return "rso" + std::to_string(k); }

// Ports the wrapper expects on the core module.
std::map<std::string, PortDir> wrapped_core_ports(const CoreTestInfo& core, const WrapperConfig& cfg)
{
    std::map<std::string, PortDir> out;
    for (std::size_t i = 0; i < core.pi; ++i)
        out[functional_input_name(i)] = PortDir::input;
    for (std::size_t j = 0; j < core.po; ++j)
        out[functional_output_name(j)] = PortDir::output;
    for (const auto& p : core.control_pins)
        out[p.name] = PortDir::input;
    if (core.softness == Softness::hard) {
        for (const auto& ch : core.scan_chains) {
            out[ch.scan_in] = PortDir::input;
            if (!ch.shared_out)
                out[ch.scan_out] = PortDir::output;
        }
    } else {
        for (std::size_t k = 0; k < cfg.wrapper_chains.size(); ++k) {
            if (cfg.wrapper_chains[k].internal_length() == 0)
                continue;
            out[rsi(k)] = PortDir::input;
            out[rso(k)] = PortDir::output;
        }
    }
    return out;
}

const ControlPin* find_pin(const CoreTestInfo& core, PinKind kind)
{
    for (const auto& p : core.control_pins)
        if (p.kind == kind)
            return &p;
    return nullptr;
}

const ControlPin* scan_enable_pin(const CoreTestInfo& core) { return find_pin(core, PinKind::scan_enable); }

// Pulse-clock cores keep SE high through capture and drop TE instead, so the
// boundary cells of those cores follow TE as well.
const ControlPin* capture_te_pin(const CoreTestInfo& core, const TestEntity& e)
{
    return e.capture == CaptureMode::pulse_clock ? find_pin(core, PinKind::test_enable) : nullptr;
}

std::string en_name(const std::string& entity) { return "en_" + sanitize_name(entity); }

// Drives `out` with the OR of `ins` (BUF for a single input).
void or_tree(Module& m, const std::string& prefix, const std::vector<std::string>& ins, const std::string& out)
{
    if (ins.size() == 1) {
        add_inst(m, cells::buf, prefix + "_b", {pin("a", ins[0]), pin("y", out)});
        return;
    }
    std::string acc = ins[0];
    for (std::size_t i = 1; i < ins.size(); ++i) {
        std::string y = i + 1 == ins.size() ? out : prefix + "_o" + std::to_string(i);
        if (y != out)
            add_net(m, y);
        add_inst(m, cells::or2, prefix + "_or" + std::to_string(i), {pin("a", acc), pin("b", ins[i]), pin("y", y)});
        acc = y;
    }
}

bool uses_fio(const Assignment& a)
{
    return a.entity.kind == EntityKind::functional && a.width == 0;
}

} // namespace

std::string wrapper_module_name(const std::string& core) { return core + "_wrapper"; }

std::string sanitize_name(const std::string& s)
{
    std::string out = s;
    for (char& c : out)
        if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '_'))
            c = '_';
    return out;
}

Module generate_wrapper_netlist(const CoreTestInfo& core, const WrapperConfig& cfg)
{
    if (cfg.core != core.name)
        throw Error("wrapper configuration for '" + cfg.core + "' used with core '" + core.name + "'");
    if (cfg.wrapper_chains.empty())
        throw Error("core '" + core.name + "': wrapper has no chains");
    Module m;
    m.name = wrapper_module_name(core.name);
    for (std::size_t i = 0; i < core.pi; ++i)
        add_port(m, functional_input_name(i), PortDir::input);
    for (std::size_t j = 0; j < core.po; ++j)
        add_port(m, functional_output_name(j), PortDir::output);
    for (const auto& p : core.control_pins)
        add_port(m, p.name, PortDir::input);
    for (std::size_t k = 0; k < cfg.wrapper_chains.size(); ++k) {
        add_port(m, "wsi" + std::to_string(k), PortDir::input);
        add_port(m, "wso" + std::to_string(k), PortDir::output);
    }
    add_port(m, "wmode", PortDir::input);
    add_port(m, "wse", PortDir::input);
    add_port(m, "wclk", PortDir::input);

    Instance c;
    c.module = core.name;
    c.name = "core";
    for (std::size_t i = 0; i < core.pi; ++i) {
        add_net(m, "c_" + functional_input_name(i));
        c.connections.push_back(pin(functional_input_name(i), "c_" + functional_input_name(i)));
    }
    for (std::size_t j = 0; j < core.po; ++j) {
        add_net(m, "c_" + functional_output_name(j));
        c.connections.push_back(pin(functional_output_name(j), "c_" + functional_output_name(j)));
    }
    for (const auto& p : core.control_pins)
        c.connections.push_back(pin(p.name, p.name));

    std::vector<Instance> body;
    auto wbr_cell = [&](const std::string& name, const std::string& fi, const std::string& fo, const std::string& si,
                        std::optional<std::string> so) {
        Instance i;
        i.module = std::string(cells::wbr);
        i.name = name;
        i.connections = {pin("fi", fi), pin("si", si), pin("se", "wse"), pin("mode", "wmode"), pin("clk", "wclk"),
                         pin("fo", fo), Connection{"so", so}};
        body.push_back(std::move(i));
    };
    bool need_tie = false;

    for (std::size_t k = 0; k < cfg.wrapper_chains.size(); ++k) {
        const auto& wc = cfg.wrapper_chains[k];
        const std::string wsi = "wsi" + std::to_string(k), wso = "wso" + std::to_string(k);
        std::string prev = wsi;
        std::size_t remaining = (cfg.includes_wbr_in_chains ? wc.input_cells.size() + wc.output_cells.size() : 0);
        remaining += core.softness == Softness::hard ? wc.segments.size() : (wc.internal_length() ? 1 : 0);
        auto next_net = [&](const std::string& fresh) {
            if (--remaining == 0)
                return wso;
            add_net(m, fresh);
            return fresh;
        };
        if (cfg.includes_wbr_in_chains)
            for (std::size_t i : wc.input_cells) {
                std::string name = functional_input_name(i);
                std::string so = next_net("s_" + name);
                wbr_cell("wbr_" + name, name, "c_" + name, prev, so);
                prev = so;
            }
        if (core.softness == Softness::hard) {
            for (const auto& seg : wc.segments) {
                const ScanChain& ch = chain_of(core, seg);
                c.connections.push_back(pin(ch.scan_in, prev));
                if (ch.shared_out) {
                    // The shared functional output feeds the shift path only
                    // while shifting.
                    need_tie = true;
                    std::string y = next_net("sh_" + ch.scan_out);
                    body.push_back(Instance{std::string(cells::mux2), "shsel_" + ch.name, {},
                                            {pin("a", "w_tie0"), pin("b", "c_" + ch.scan_out), pin("s", "wse"),
                                             pin("y", y)}});
                    prev = y;
                } else {
                    std::string so = next_net("c_" + ch.scan_out);
                    c.connections.push_back(pin(ch.scan_out, so));
                    prev = so;
                }
            }
        } else if (wc.internal_length()) {
            c.connections.push_back(pin(rsi(k), prev));
            std::string so = next_net("c_" + rso(k));
            c.connections.push_back(pin(rso(k), so));
            prev = so;
        }
        if (cfg.includes_wbr_in_chains)
            for (std::size_t j : wc.output_cells) {
                std::string name = functional_output_name(j);
                std::string so = next_net("s_" + name);
                wbr_cell("wbr_" + name, "c_" + name, name, prev, so);
                prev = so;
            }
        if (prev == wsi)
            body.push_back(Instance{std::string(cells::buf), "thru_" + std::to_string(k), {},
                                    {pin("a", wsi), pin("y", wso)}});
    }

    if (!cfg.includes_wbr_in_chains && core.pi + core.po > 0) {
        // Isolation cells still sit on every functional pin; they form a
        // boundary chain of their own that is not on the TAM.
        need_tie = true;
        std::string prev = "w_tie0";
        std::size_t n = core.pi + core.po, made = 0;
        auto so_net = [&](const std::string& fresh) -> std::optional<std::string> {
            if (++made == n)
                return std::nullopt;
            add_net(m, fresh);
            return fresh;
        };
        for (std::size_t i = 0; i < core.pi; ++i) {
            std::string name = functional_input_name(i);
            auto so = so_net("s_" + name);
            wbr_cell("wbr_" + name, name, "c_" + name, prev, so);
            if (so)
                prev = *so;
        }
        for (std::size_t j = 0; j < core.po; ++j) {
            std::string name = functional_output_name(j);
            auto so = so_net("s_" + name);
            wbr_cell("wbr_" + name, "c_" + name, name, prev, so);
            if (so)
                prev = *so;
        }
    }
    if (need_tie) {
        add_net(m, "w_tie0");
        add_inst(m, cells::tie0, "tie0", {pin("y", "w_tie0")});
    }
    m.instances.insert(m.instances.begin(), std::move(c));
    for (auto& i : body)
        m.instances.push_back(std::move(i));
    return m;
}

std::size_t session_register_bits(std::size_t sessions)
{
    std::size_t k = 0;
    while ((std::size_t{1} << k) < sessions)
        ++k;
    return k;
}

Module generate_test_controller(const TestSchedule& s, const SocDescription& soc)
{
    Module m;
    m.name = "test_controller";
    const std::size_t n = s.sessions.size();
    if (n == 0)
        throw Error("test controller: schedule has no sessions");
    add_port(m, "test_mode", PortDir::input);
    add_port(m, "session_si", PortDir::input);
    add_port(m, "ref_clk", PortDir::input);

    // Per core: sessions it appears in, its scan and functional entities.
    std::vector<std::string> cores;
    std::map<std::string, std::vector<std::string>> core_sessions;
    std::map<std::string, std::string> scan_entity, fio_entity;
    std::map<std::string, const TestEntity*> scan_entities;
    std::vector<std::string> se_pins;
    for (const auto& sess : s.sessions)
        for (const auto& a : sess.assignments) {
            if (a.entity.kind == EntityKind::bist)
                continue;
            const std::string& c = a.entity.core;
            if (!core_sessions.count(c))
                cores.push_back(c);
            auto& list = core_sessions[c];
            std::string line = "sess" + std::to_string(sess.index);
            if (std::find(list.begin(), list.end(), line) == list.end())
                list.push_back(line);
            if (a.entity.kind == EntityKind::scan) {
                scan_entity[c] = a.entity.id;
                scan_entities[c] = &a.entity;
            }
            if (uses_fio(a))
                fio_entity[c] = a.entity.id;
        }
    for (const auto& [c, _] : scan_entity) {
        const CoreTestInfo* core = soc.find_core(c);
        if (!core)
            throw Error("test controller: core '" + c + "' is not part of the SOC");
        const ControlPin* se = scan_enable_pin(*core);
        if (!se)
            throw Error("test controller: core '" + c + "' has scan patterns but no scan-enable pin");
        std::string chip = chip_control_pin(c, *se, s.constraints.sharing);
        if (std::find(se_pins.begin(), se_pins.end(), chip) == se_pins.end())
            se_pins.push_back(chip);
        if (const ControlPin* te = capture_te_pin(*core, *scan_entities[c])) {
            chip = chip_control_pin(c, *te, s.constraints.sharing);
            if (std::find(se_pins.begin(), se_pins.end(), chip) == se_pins.end())
                se_pins.push_back(chip);
        }
    }
    for (const auto& p : se_pins)
        add_port(m, p, PortDir::input);

    for (std::size_t k = 0; k < n; ++k)
        add_port(m, "sess" + std::to_string(k), PortDir::output);
    for (const auto& sess : s.sessions)
        for (const auto& a : sess.assignments)
            add_port(m, en_name(a.entity.id), PortDir::output);
    for (const auto& c : cores)
        add_port(m, "core_en_" + c, PortDir::output);
    for (const auto& [c, _] : scan_entity) {
        add_port(m, "wmode_" + c, PortDir::output);
        add_port(m, "wse_" + c, PortDir::output);
    }
    for (const auto& [c, _] : fio_entity)
        add_port(m, "ften_" + c, PortDir::output);

    // Session register: session_si -> r<k-1> -> ... -> r0, held in test mode.
    const std::size_t bits = session_register_bits(n);
    for (std::size_t i = 0; i < bits; ++i) {
        std::string r = "r" + std::to_string(i), d = "d" + std::to_string(i), rn = "rn" + std::to_string(i);
        add_net(m, r);
        add_net(m, d);
        add_net(m, rn);
    }
    for (std::size_t i = 0; i < bits; ++i) {
        std::string r = "r" + std::to_string(i);
        std::string from = i + 1 == bits ? "session_si" : "r" + std::to_string(i + 1);
        add_inst(m, cells::mux2, "hold" + std::to_string(i),
                 {pin("a", from), pin("b", r), pin("s", "test_mode"), pin("y", "d" + std::to_string(i))});
        add_inst(m, cells::dff, "reg" + std::to_string(i),
                 {pin("d", "d" + std::to_string(i)), pin("clk", "ref_clk"), pin("q", r)});
        add_inst(m, cells::inv, "inv" + std::to_string(i), {pin("a", r), pin("y", "rn" + std::to_string(i))});
    }
    for (std::size_t k = 0; k < n; ++k) {
        std::string out = "sess" + std::to_string(k);
        if (bits == 0) {
            add_inst(m, cells::buf, "dec0", {pin("a", "test_mode"), pin("y", out)});
            continue;
        }
        std::string acc = "test_mode";
        for (std::size_t i = 0; i < bits; ++i) {
            std::string lit = ((k >> i) & 1) ? "r" + std::to_string(i) : "rn" + std::to_string(i);
            std::string y = i + 1 == bits ? out : "dec" + std::to_string(k) + "_" + std::to_string(i);
            if (y != out)
                add_net(m, y);
            add_inst(m, cells::and2, "dec" + std::to_string(k) + "_and" + std::to_string(i),
                     {pin("a", acc), pin("b", lit), pin("y", y)});
            acc = y;
        }
    }
    for (const auto& sess : s.sessions)
        for (const auto& a : sess.assignments)
            add_inst(m, cells::buf, "b_" + en_name(a.entity.id),
                     {pin("a", "sess" + std::to_string(sess.index)), pin("y", en_name(a.entity.id))});
    for (const auto& c : cores)
        or_tree(m, "cen_" + c, core_sessions[c], "core_en_" + c);
    for (const auto& [c, id] : scan_entity) {
        add_inst(m, cells::buf, "wm_" + c, {pin("a", en_name(id)), pin("y", "wmode_" + c)});
        const CoreTestInfo& core = *soc.find_core(c);
        std::string se = chip_control_pin(c, *scan_enable_pin(core), s.constraints.sharing);
        if (const ControlPin* te = capture_te_pin(core, *scan_entities[c])) {
            add_net(m, "wst_" + c);
            add_inst(m, cells::and2, "wt_" + c,
                     {pin("a", se), pin("b", chip_control_pin(c, *te, s.constraints.sharing)), pin("y", "wst_" + c)});
            se = "wst_" + c;
        }
        add_inst(m, cells::and2, "ws_" + c, {pin("a", se), pin("b", en_name(id)), pin("y", "wse_" + c)});
    }
    for (const auto& [c, id] : fio_entity)
        add_inst(m, cells::buf, "ft_" + c, {pin("a", en_name(id)), pin("y", "ften_" + c)});
    return m;
}

Module generate_tam_mux(const TestSchedule& s)
{
    Module m;
    m.name = "tam_mux";
    struct Source {
        std::size_t session;
        std::string net;
    };
    std::map<std::size_t, std::vector<Source>> sources;
    std::vector<std::pair<std::string, std::size_t>> wsi;  // wrapper-side input, wire
    for (const auto& sess : s.sessions)
        for (const auto& a : sess.assignments) {
            if (a.entity.kind != EntityKind::scan)
                continue;
            for (std::size_t j = 0; j < a.width; ++j) {
                std::size_t w = a.wires.at(j);
                sources[w].push_back({sess.index, a.entity.core + "_wso" + std::to_string(j)});
                wsi.emplace_back(a.entity.core + "_wsi" + std::to_string(j), w);
            }
        }
    std::set<std::size_t> sel_sessions;
    for (const auto& [w, src] : sources)
        for (std::size_t i = 1; i < src.size(); ++i)
            sel_sessions.insert(src[i].session);

    for (const auto& [w, _] : sources)
        add_port(m, tam_in_pin(w), PortDir::input);
    for (const auto& [w, src] : sources)
        for (const auto& x : src)
            add_port(m, x.net, PortDir::input);
    for (std::size_t k : sel_sessions)
        add_port(m, "sess" + std::to_string(k), PortDir::input);
    for (const auto& [name, _] : wsi)
        add_port(m, name, PortDir::output);
    for (const auto& [w, _] : sources)
        add_port(m, tam_out_pin(w), PortDir::output);

    for (const auto& [name, w] : wsi)
        add_inst(m, cells::buf, "bi_" + name, {pin("a", tam_in_pin(w)), pin("y", name)});
    for (const auto& [w, src] : sources) {
        const std::string out = tam_out_pin(w);
        if (src.size() == 1) {
            add_inst(m, cells::buf, "bo_" + out, {pin("a", src[0].net), pin("y", out)});
            continue;
        }
        std::string acc = src[0].net;
        for (std::size_t i = 1; i < src.size(); ++i) {
            std::string y = i + 1 == src.size() ? out : out + "_" + std::to_string(i);
            if (y != out)
                add_net(m, y);
            add_inst(m, cells::mux2, "sel_" + out + "_" + std::to_string(i),
                     {pin("a", acc), pin("b", src[i].net), pin("s", "sess" + std::to_string(src[i].session)),
                      pin("y", y)});
            acc = y;
        }
    }
    return m;
}

Module generate_fio_mux(const TestSchedule& s, const SocDescription& soc)
{
    Module m;
    m.name = "fio_mux";
    std::vector<const CoreTestInfo*> cores;
    for (const auto& sess : s.sessions)
        for (const auto& a : sess.assignments)
            if (uses_fio(a)) {
                const CoreTestInfo* c = soc.find_core(a.entity.core);
                if (!c)
                    throw Error("functional-IO selector: core '" + a.entity.core + "' is not part of the SOC");
                cores.push_back(c);
            }
    std::size_t outs = 0;
    for (const auto* c : cores) {
        add_port(m, "ften_" + c->name, PortDir::input);
        for (std::size_t j = 0; j < c->po; ++j)
            add_port(m, c->name + "_" + functional_output_name(j), PortDir::input);
        outs = std::max(outs, c->po);
    }
    for (std::size_t j = 0; j < outs; ++j)
        add_port(m, fio_out_pin(j), PortDir::output);
    if (outs == 0)
        return m;
    add_net(m, "zero");
    add_inst(m, cells::tie0, "tie0", {pin("y", "zero")});
    for (std::size_t j = 0; j < outs; ++j) {
        std::vector<const CoreTestInfo*> src;
        for (const auto* c : cores)
            if (c->po > j)
                src.push_back(c);
        std::string acc = "zero";
        for (std::size_t i = 0; i < src.size(); ++i) {
            std::string y = i + 1 == src.size() ? fio_out_pin(j) : fio_out_pin(j) + "_" + std::to_string(i);
            if (y != fio_out_pin(j))
                add_net(m, y);
            add_inst(m, cells::mux2, "sel_" + fio_out_pin(j) + "_" + std::to_string(i),
                     {pin("a", acc), pin("b", src[i]->name + "_" + functional_output_name(j)),
                      pin("s", "ften_" + src[i]->name), pin("y", y)});
            acc = y;
        }
    }
    return m;
}

std::size_t GeneratedTestFabric::wbr_cells() const
{
    std::size_t n = 0;
    for (std::size_t i = 0; i < cores.size(); ++i)
        n += wrapper_cell_count(cores[i], configs[i]);
    return n;
}

GeneratedTestFabric generate_test_fabric(const SocDescription& soc, const TestSchedule& s)
{
    GeneratedTestFabric f;
    f.schedule = s;
    std::map<std::string, std::size_t> width;
    std::vector<std::string> order;
    for (const auto& sess : s.sessions)
        for (const auto& a : sess.assignments) {
            if (a.entity.kind == EntityKind::bist)
                continue;
            if (a.entity.kind == EntityKind::functional && a.width > 0)
                throw Error("entity '" + a.entity.id +
                            "': functional vectors shifted through the wrapper are not supported by netlist generation");
            if (!width.count(a.entity.core)) {
                order.push_back(a.entity.core);
                width[a.entity.core] = 1;
            }
            if (a.entity.kind == EntityKind::scan)
                width[a.entity.core] = a.width;
            if (uses_fio(a))
                f.fio_cores.push_back(a.entity.core);
        }
    for (const auto& name : order) {
        const CoreTestInfo* core = soc.find_core(name);
        if (!core)
            throw Error("schedule references core '" + name + "' that is not part of the SOC");
        WrapperOptions opts = s.constraints.wrapper;
        std::size_t w = std::max(width[name], minimum_tam_width(*core, opts));
        f.cores.push_back(*core);
        f.configs.push_back(design_wrapper(*core, w, opts));
        f.wrappers.push_back(generate_wrapper_netlist(*core, f.configs.back()));
    }
    if (!s.sessions.empty())
        f.controller = generate_test_controller(s, soc);
    bool any_scan = false;
    for (const auto& sess : s.sessions)
        for (const auto& a : sess.assignments)
            any_scan = any_scan || (a.entity.kind == EntityKind::scan && a.width > 0);
    if (any_scan)
        f.tam_mux = generate_tam_mux(s);
    if (!f.fio_cores.empty())
        f.fio_mux = generate_fio_mux(s, soc);
    return f;
}

namespace {

class TopEditor {
public:
    explicit TopEditor(Module& top) : top_(top) {}

    void port(const std::string& name, PortDir dir)
    {
        if (const Port* p = top_.port(name)) {
            if (p->dir != dir)
                throw Error("top module already has port '" + name + "' with a different direction");
            return;
        }
        if (std::find(top_.nets.begin(), top_.nets.end(), name) != top_.nets.end())
            throw Error("chip test pin '" + name + "' collides with an existing net");
        top_.ports.push_back({name, dir});
    }

    std::string net(const std::string& name)
    {
        if (top_.has_net(name))
            throw Error("net name '" + name + "' already used in module " + top_.name);
        top_.nets.push_back(name);
        return name;
    }

    void inst(std::string_view mod, const std::string& name, std::vector<Connection> conns)
    {
        if (top_.instance(name))
            throw Error("instance name '" + name + "' already used in module " + top_.name);
        add_inst(top_, mod, name, std::move(conns));
    }

private:
    Module& top_;
};

std::vector<Connection> straight(const Module& m, const std::map<std::string, std::string>& rename = {})
{
    std::vector<Connection> out;
    for (const auto& p : m.ports) {
        auto it = rename.find(p.name);
        out.push_back(pin(p.name, it == rename.end() ? "dft_" + p.name : it->second));
    }
    return out;
}

} // namespace

Netlist insert_dft(const Netlist& soc_netlist, const GeneratedTestFabric& fabric)
{
    if (fabric.empty())
        return soc_netlist;
    if (!fabric.controller)
        throw Error("test fabric has wrappers but no controller");
    Netlist n = soc_netlist;
    for (auto& lib : test_cell_library())
        if (!n.find(lib.name))
            n.modules.push_back(std::move(lib));
    // Generated modules are appended at the end so `top` stays valid.
    std::vector<Module> added;

    Module& top = n.top_module();
    TopEditor ed(top);
    const auto& sharing = fabric.schedule.constraints.sharing;

    ed.port("test_mode", PortDir::input);
    ed.port("session_si", PortDir::input);
    ed.port("ref_clk", PortDir::input);
    std::set<std::string> chip_ctrl;
    for (const auto& core : fabric.cores)
        for (const auto& p : core.control_pins)
            chip_ctrl.insert(chip_control_pin(core.name, p, sharing));
    for (const auto& p : chip_ctrl)
        ed.port(p, PortDir::input);
    std::size_t fio_in = 0;
    for (const auto& core : fabric.cores)
        if (std::find(fabric.fio_cores.begin(), fabric.fio_cores.end(), core.name) != fabric.fio_cores.end())
            fio_in = std::max(fio_in, core.pi);
    for (std::size_t i = 0; i < fio_in; ++i)
        ed.port(fio_in_pin(i), PortDir::input);

    // Controller: chip pins by name, everything else on dft_<port> nets.
    std::map<std::string, std::string> ctrl_map = {
        {"test_mode", "test_mode"}, {"session_si", "session_si"}, {"ref_clk", "ref_clk"}};
    for (const auto& p : chip_ctrl)
        ctrl_map[p] = p;
    const Module& ctrl = *fabric.controller;
    for (const auto& p : ctrl.ports)
        if (!ctrl_map.count(p.name))
            ed.net("dft_" + p.name);
    ed.inst("test_controller", "u_test_controller", straight(ctrl, ctrl_map));
    added.push_back(ctrl);

    if (fabric.tam_mux) {
        std::map<std::string, std::string> rename;
        for (const auto& p : fabric.tam_mux->ports) {
            if (p.name.rfind("tam_in", 0) == 0 || p.name.rfind("tam_out", 0) == 0) {
                ed.port(p.name, p.dir);
                rename[p.name] = p.name;
            } else if (p.name.rfind("sess", 0) == 0) {
                rename[p.name] = "dft_" + p.name;
            } else {
                ed.net("dft_" + p.name);
            }
        }
        ed.inst("tam_mux", "u_tam_mux", straight(*fabric.tam_mux, rename));
        added.push_back(*fabric.tam_mux);
    }

    bool need_tie = false;
    std::map<std::string, std::string> fio_map;
    for (std::size_t ci = 0; ci < fabric.cores.size(); ++ci) {
        const CoreTestInfo& core = fabric.cores[ci];
        const WrapperConfig& cfg = fabric.configs[ci];
        Module wrapper = fabric.wrappers[ci];

        const Module* def = n.find(core.name);
        if (!def)
            throw Error("core '" + core.name + "': module not defined in the SOC netlist");
        for (const auto& [pname, dir] : wrapped_core_ports(core, cfg)) {
            const Port* p = def->port(pname);
            if (!p)
                throw Error("core '" + core.name + "': port-name mismatch, module has no port '" + pname + "'");
            if (p->dir != dir)
                throw Error("core '" + core.name + "': port-name mismatch, port '" + pname +
                            "' has the wrong direction");
        }
        Instance& inner = *wrapper.instance("core");
        for (const auto& p : def->ports)
            if (!inner.connection(p.name))
                inner.connections.push_back(open(p.name));

        std::vector<std::size_t> hits;
        for (std::size_t i = 0; i < top.instances.size(); ++i)
            if (top.instances[i].module == core.name)
                hits.push_back(i);
        if (hits.empty())
            throw Error("core '" + core.name + "': missing core instance in top module " + top.name);
        if (hits.size() > 1)
            throw Error("core '" + core.name + "': instantiated " + std::to_string(hits.size()) +
                        " times in the top module, expected once");
        Instance orig = top.instances[hits[0]];
        top.instances.erase(top.instances.begin() + static_cast<std::ptrdiff_t>(hits[0]));
        const std::string X = orig.name;
        auto orig_net = [&](const std::string& port) -> std::optional<std::string> {
            const Connection* c = orig.connection(port);
            return c ? c->net : std::nullopt;
        };

        const bool fio =
            std::find(fabric.fio_cores.begin(), fabric.fio_cores.end(), core.name) != fabric.fio_cores.end();
        const Assignment* scan = fabric.schedule.find(core.name + ".scan");
        const std::size_t scan_width = scan ? scan->width : 0;

        Instance w;
        w.module = wrapper.name;
        w.name = X + "_wrapper";
        for (const auto& p : wrapper.ports) {
            const std::string& pn = p.name;
            const ControlPin* cp = nullptr;
            for (const auto& c : core.control_pins)
                if (c.name == pn)
                    cp = &c;
            bool is_pi = pn.size() > 2 && pn.rfind("pi", 0) == 0 &&
                         std::all_of(pn.begin() + 2, pn.end(), [](char c) { return std::isdigit(static_cast<unsigned char>(c)); });
            if (cp) {
                std::string y = ed.net(X + "_" + pn + "_t");
                ed.inst(cells::mux2, X + "_csel_" + pn,
                        {Connection{"a", orig_net(pn)}, pin("b", chip_control_pin(core.name, *cp, sharing)),
                         pin("s", "dft_core_en_" + core.name), pin("y", y)});
                w.connections.push_back(pin(pn, y));
            } else if (is_pi) {
                if (!fio) {
                    w.connections.push_back({pn, orig_net(pn)});
                    continue;
                }
                std::size_t i = static_cast<std::size_t>(std::stoul(pn.substr(2)));
                std::string y = ed.net(X + "_" + pn + "_t");
                ed.inst(cells::mux2, X + "_fsel_" + pn,
                        {Connection{"a", orig_net(pn)}, pin("b", fio_in_pin(i)), pin("s", "dft_ften_" + core.name),
                         pin("y", y)});
                w.connections.push_back(pin(pn, y));
            } else if (functional_output_index(pn)) {
                auto net = orig_net(pn);
                if (fio && !net)
                    net = ed.net(X + "_" + pn + "_t");
                w.connections.push_back({pn, net});
                if (fio)
                    fio_map[core.name + "_" + pn] = *net;
            } else if (pn.rfind("wsi", 0) == 0) {
                std::size_t j = static_cast<std::size_t>(std::stoul(pn.substr(3)));
                if (j < scan_width) {
                    w.connections.push_back(pin(pn, "dft_" + core.name + "_wsi" + std::to_string(j)));
                } else {
                    need_tie = true;
                    w.connections.push_back(pin(pn, "dft_tie0"));
                }
            } else if (pn.rfind("wso", 0) == 0) {
                std::size_t j = static_cast<std::size_t>(std::stoul(pn.substr(3)));
                if (j < scan_width)
                    w.connections.push_back(pin(pn, "dft_" + core.name + "_wso" + std::to_string(j)));
                else
                    w.connections.push_back(open(pn));
            } else if (pn == "wmode" || pn == "wse") {
                if (scan) {
                    w.connections.push_back(pin(pn, "dft_" + pn + "_" + core.name));
                } else {
                    need_tie = true;
                    w.connections.push_back(pin(pn, "dft_tie0"));
                }
            } else if (pn == "wclk") {
                w.connections.push_back(pin(pn, "ref_clk"));
            } else {
                throw Error("wrapper port '" + pn + "' has no connection rule");
            }
        }
        ed.inst(w.module, w.name, w.connections);
        added.push_back(std::move(wrapper));
    }

    if (fabric.fio_mux) {
        std::map<std::string, std::string> rename;
        for (const auto& p : fabric.fio_mux->ports) {
            if (p.name.rfind("fio_out", 0) == 0) {
                ed.port(p.name, PortDir::output);
                rename[p.name] = p.name;
            } else if (p.name.rfind("ften_", 0) == 0) {
                rename[p.name] = "dft_" + p.name;
            } else {
                rename[p.name] = fio_map.at(p.name);
            }
        }
        ed.inst("fio_mux", "u_fio_mux", straight(*fabric.fio_mux, rename));
        added.push_back(*fabric.fio_mux);
    }
    if (need_tie) {
        ed.net("dft_tie0");
        ed.inst(cells::tie0, "u_dft_tie0", {pin("y", "dft_tie0")});
    }
    for (auto& m : added) {
        if (n.find(m.name))
            throw Error("module '" + m.name + "' already exists in the SOC netlist");
        n.modules.push_back(std::move(m));
    }
    return n;
}

NetlistCheck check_transparency(const Netlist& original, const Netlist& inserted, const GeneratedTestFabric& fabric)
{
    NetlistCheck r;
    std::set<std::string> endpoints = all_endpoints(original);
    std::map<std::string, std::string> rename;
    const Module& top = original.top_module();
    for (const auto& core : fabric.cores)
        for (const auto& inst : top.instances) {
            if (inst.module != core.name)
                continue;
            rename[inst.name + "_wrapper/core"] = inst.name;
            for (const auto& ch : core.scan_chains) {
                endpoints.erase(inst.name + "." + ch.scan_in);
                if (!ch.shared_out)
                    endpoints.erase(inst.name + "." + ch.scan_out);
            }
        }
    auto arcs = functional_mode_arcs();
    auto before = connectivity_classes(original, arcs, endpoints);
    auto after = connectivity_classes(inserted, arcs, endpoints, rename);
    std::set<std::string> seen_after;
    for (const auto& cls : after)
        seen_after.insert(cls.begin(), cls.end());
    for (const auto& e : endpoints)
        if (!seen_after.count(e))
            r.violations.push_back("endpoint '" + e + "' disappeared");
    auto show = [](const std::set<std::string>& cls) {
        std::string s;
        for (const auto& e : cls)
            s += (s.empty() ? "" : " ") + e;
        return "{" + s + "}";
    };
    for (const auto& cls : before)
        if (!after.count(cls))
            r.violations.push_back("connectivity changed: " + show(cls) + " not preserved");
    for (const auto& cls : after)
        if (!before.count(cls))
            r.violations.push_back("connectivity changed: " + show(cls) + " is new");
    return r;
}

AreaReport area_report(std::size_t wbr_cells, std::uint64_t chip_gate_count, const AreaConstants& k)
{
    if (chip_gate_count == 0)
        throw Error("chip gate count must be positive");
    AreaReport r;
    r.wbr_cells = wbr_cells;
    r.wrapper_area = k.wbr_cell * wbr_cells;
    r.controller_area = k.controller;
    r.tam_mux_area = k.tam_mux;
    r.test_area = r.wrapper_area + r.controller_area + r.tam_mux_area;
    r.chip_gates = chip_gate_count;
    if (r.test_area > chip_gate_count)
        throw Error("chip gate count " + std::to_string(chip_gate_count) + " is below the test logic area " +
                    std::to_string(r.test_area));
    r.overhead_fraction = static_cast<double>(r.test_area) / static_cast<double>(chip_gate_count);
    return r;
}

AreaReport area_report(const GeneratedTestFabric& fabric, std::uint64_t chip_gate_count, const AreaConstants& k)
{
    AreaReport r = area_report(fabric.wbr_cells(), chip_gate_count, k);
    for (std::size_t i = 0; i < fabric.cores.size(); ++i)
        r.per_core.emplace_back(fabric.cores[i].name, wrapper_area(fabric.cores[i], fabric.configs[i], k));
    return r;
}

std::string format_area_report(const AreaReport& r)
{
    std::ostringstream os;
    for (const auto& [core, area] : r.per_core)
        os << "wrapper " << std::left << std::setw(12) << core << std::right << std::setw(10) << area << "\n";
    os << "wrapper cells        " << std::setw(10) << r.wbr_cells << "\n";
    os << "wrapper area         " << std::setw(10) << r.wrapper_area << "\n";
    os << "test controller      " << std::setw(10) << r.controller_area << "\n";
    os << "TAM multiplexers     " << std::setw(10) << r.tam_mux_area << "\n";
    os << "test logic total     " << std::setw(10) << r.test_area << "\n";
    os << "chip gates           " << std::setw(10) << r.chip_gates << "\n";
    os << std::fixed << std::setprecision(2);
    os << "overhead             " << std::setw(9) << r.overhead_fraction * 100.0 << "%\n";
    return os.str();
}

} // namespace stk
