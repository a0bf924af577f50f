// SPDX-License-Identifier: Apache-2.0
#include "stk/netlist.hpp"

#include <algorithm>
#include <functional>
#include <numeric>
#include <sstream>

#include "lexer.hpp"

namespace stk {

using detail::Token;
using detail::TokenCursor;

const std::string* Instance::param(std::string_view key) const
{
    for (const auto& [k, v] : params)
        if (k == key)
            return &v;
    return nullptr;
}

const Connection* Instance::connection(std::string_view p) const
{
    for (const auto& c : connections)
        if (c.port == p)
            return &c;
    return nullptr;
}

const Port* Module::port(std::string_view n) const
{
    for (const auto& p : ports)
        if (p.name == n)
            return &p;
    return nullptr;
}

const Instance* Module::instance(std::string_view n) const
{
    for (const auto& i : instances)
        if (i.name == n)
            return &i;
    return nullptr;
}

Instance* Module::instance(std::string_view n)
{
    for (auto& i : instances)
        if (i.name == n)
            return &i;
    return nullptr;
}

bool Module::has_net(std::string_view n) const
{
    return port(n) || std::find(nets.begin(), nets.end(), n) != nets.end();
}

const Module* Netlist::find(std::string_view name) const
{
    for (const auto& m : modules)
        if (m.name == name)
            return &m;
    return nullptr;
}

Module* Netlist::find(std::string_view name)
{
    for (auto& m : modules)
        if (m.name == name)
            return &m;
    return nullptr;
}

const Module& Netlist::top_module() const
{
    const Module* m = find(top);
    if (!m)
        throw Error("netlist top module '" + top + "' is not defined");
    return *m;
}

Module& Netlist::top_module()
{
    Module* m = find(top);
    if (!m)
        throw Error("netlist top module '" + top + "' is not defined");
    return *m;
}

namespace {

std::string_view dir_name(PortDir d)
{
    switch (d) {
    case PortDir::input: return "input";
    case PortDir::output: return "output";
    case PortDir::inout: return "inout";
    }
    return "input";
}

void parse_module(TokenCursor& cur, Netlist& out)
{
    Module m;
    m.name = cur.expect_word("module name").text;
    if (out.find(m.name))
        cur.fail("duplicate module '" + m.name + "'");
    cur.expect("(");
    if (!cur.accept(")")) {
        do {
            const Token& d = cur.expect_word("port direction");
            Port p;
            if (d.text == "input")
                p.dir = PortDir::input;
            else if (d.text == "output")
                p.dir = PortDir::output;
            else if (d.text == "inout")
                p.dir = PortDir::inout;
            else
                cur.fail(d, "expected input, output or inout");
            p.name = cur.expect_word("port name").text;
            if (m.port(p.name))
                cur.fail("duplicate port '" + p.name + "'");
            m.ports.push_back(std::move(p));
        } while (cur.accept(","));
        cur.expect(")");
    }
    cur.expect(";");

    for (;;) {
        const Token& t = cur.expect_word("statement");
        if (t.text == "endmodule")
            break;
        if (t.text == "leaf") {
            m.leaf = true;
            if (cur.peek().is("area")) {
                cur.next();
                cur.expect("=");
                m.area = detail::parse_count(cur.next(), cur);
            }
            cur.expect(";");
        } else if (t.text == "net") {
            do
                m.nets.push_back(cur.expect_word("net name").text);
            while (cur.accept(","));
            cur.expect(";");
        } else if (t.text == "inst") {
            Instance inst;
            inst.module = cur.expect_word("module name").text;
            inst.name = cur.expect_word("instance name").text;
            if (cur.accept("#")) {
                cur.expect("(");
                if (!cur.accept(")")) {
                    do {
                        std::string k = cur.expect_word("parameter name").text;
                        cur.expect("=");
                        inst.params.emplace_back(std::move(k), cur.expect_word("parameter value").text);
                    } while (cur.accept(","));
                    cur.expect(")");
                }
            }
            cur.expect("(");
            if (!cur.accept(")")) {
                do {
                    cur.expect(".");
                    Connection c;
                    c.port = cur.expect_word("port name").text;
                    cur.expect("(");
                    if (!cur.accept(")")) {
                        c.net = cur.expect_word("net name").text;
                        cur.expect(")");
                    }
                    inst.connections.push_back(std::move(c));
                } while (cur.accept(","));
                cur.expect(")");
            }
            cur.expect(";");
            m.instances.push_back(std::move(inst));
        } else {
            cur.fail(t, "unknown statement '" + t.text + "'");
        }
    }
    out.modules.push_back(std::move(m));
}

} // namespace

Netlist parse_netlist(std::string_view text)
{
    TokenCursor cur(detail::tokenize(text, "(),;#=."));
    Netlist out;
    while (!cur.at_end()) {
        const Token& t = cur.expect_word("'module' or 'top'");
        if (t.text == "module") {
            parse_module(cur, out);
        } else if (t.text == "top") {
            if (!out.top.empty())
                cur.fail(t, "top given twice");
            out.top = cur.expect_word("top module").text;
            cur.expect(";");
        } else {
            cur.fail(t, "expected 'module' or 'top'");
        }
    }
    return out;
}

std::string write_module(const Module& m)
{
    std::ostringstream os;
    os << "module " << m.name << " (";
    for (std::size_t i = 0; i < m.ports.size(); ++i)
        os << (i ? ", " : "") << dir_name(m.ports[i].dir) << " " << m.ports[i].name;
    os << ");\n";
    if (m.leaf)
        os << "  leaf area=" << m.area << ";\n";
    for (const auto& n : m.nets)
        os << "  net " << n << ";\n";
    for (const auto& inst : m.instances) {
        os << "  inst " << inst.module << " " << inst.name;
        if (!inst.params.empty()) {
            os << " #(";
            for (std::size_t i = 0; i < inst.params.size(); ++i)
                os << (i ? ", " : "") << inst.params[i].first << "=" << inst.params[i].second;
            os << ")";
        }
        os << " (";
        for (std::size_t i = 0; i < inst.connections.size(); ++i) {
            const auto& c = inst.connections[i];
            os << (i ? ", " : "") << "." << c.port << "(" << c.net.value_or("") << ")";
        }
        os << ");\n";
    }
    os << "endmodule\n";
    return os.str();
}

std::string write_netlist(const Netlist& n)
{
    std::string out;
    for (const auto& m : n.modules)
        out += write_module(m) + "\n";
    if (!n.top.empty())
        out += "top " + n.top + ";\n";
    return out;
}

NetlistCheck validate_netlist(const Netlist& n)
{
    NetlistCheck r;
    auto add = [&](std::string s) { r.violations.push_back(std::move(s)); };
    if (n.top.empty())
        add("no top module");
    else if (!n.find(n.top))
        add("top module '" + n.top + "' is not defined");

    for (const auto& m : n.modules) {
        const std::string where = "module " + m.name + ": ";
        if (m.leaf && (!m.instances.empty() || !m.nets.empty()))
            add(where + "leaf module has a body");
        std::map<std::string, int> drivers;
        std::set<std::string> declared;
        for (const auto& p : m.ports) {
            declared.insert(p.name);
            if (p.dir != PortDir::output)
                ++drivers[p.name];
        }
        for (const auto& net : m.nets)
            if (!declared.insert(net).second)
                add(where + "net '" + net + "' declared twice");

        std::set<std::string> inst_names;
        for (const auto& inst : m.instances) {
            const std::string iw = where + "instance " + inst.name + ": ";
            if (!inst_names.insert(inst.name).second)
                add(where + "duplicate instance '" + inst.name + "'");
            const Module* def = n.find(inst.module);
            if (!def) {
                add(iw + "undefined module '" + inst.module + "'");
                continue;
            }
            std::map<std::string, int> seen;
            for (const auto& c : inst.connections) {
                const Port* p = def->port(c.port);
                if (!p) {
                    add(iw + "module " + def->name + " has no port '" + c.port + "'");
                    continue;
                }
                if (++seen[c.port] > 1)
                    add(iw + "port '" + c.port + "' connected more than once");
                if (!c.net)
                    continue;
                if (!declared.count(*c.net)) {
                    add(iw + "undeclared net '" + *c.net + "'");
                    continue;
                }
                if (p->dir != PortDir::input)
                    ++drivers[*c.net];
            }
            for (const auto& p : def->ports)
                if (!seen.count(p.name))
                    add(iw + "port '" + p.name + "' is not connected");
        }
        for (const auto& [net, count] : drivers)
            if (count > 1)
                add(where + "net '" + net + "' has " + std::to_string(count) + " drivers");
    }
    return r;
}

std::vector<Module> test_cell_library(std::uint64_t wbr_area)
{
    auto leaf = [](std::string name, std::vector<std::string> in, std::vector<std::string> out, std::uint64_t area) {
        Module m;
        m.name = std::move(name);
        m.leaf = true;
        m.area = area;
        for (auto& p : in)
            m.ports.push_back({std::move(p), PortDir::input});
        for (auto& p : out)
            m.ports.push_back({std::move(p), PortDir::output});
        return m;
    };
    return {
        leaf(std::string(cells::wbr), {"fi", "si", "se", "mode", "clk"}, {"fo", "so"}, wbr_area),
        leaf(std::string(cells::mux2), {"a", "b", "s"}, {"y"}, 2),
        leaf(std::string(cells::buf), {"a"}, {"y"}, 1),
        leaf(std::string(cells::inv), {"a"}, {"y"}, 1),
        leaf(std::string(cells::and2), {"a", "b"}, {"y"}, 1),
        leaf(std::string(cells::or2), {"a", "b"}, {"y"}, 1),
        leaf(std::string(cells::dff), {"d", "clk"}, {"q"}, 4),
        leaf(std::string(cells::tie0), {}, {"y"}, 0),
        leaf(std::string(cells::tie1), {}, {"y"}, 0),
    };
}

FlatNetlist flatten(const Netlist& n, std::string_view top)
{
    std::string top_name = top.empty() ? n.top : std::string(top);
    const Module* tm = n.find(top_name);
    if (!tm)
        throw Error("cannot flatten: module '" + top_name + "' is not defined");
    FlatNetlist flat;

    std::function<void(const Module&, const std::string&, std::map<std::string, std::size_t>&, int)> walk;
    walk = [&](const Module& m, const std::string& prefix, std::map<std::string, std::size_t>& ids, int depth) {
        if (depth > 64)
            throw Error("netlist hierarchy too deep (recursive module '" + m.name + "'?)");
        for (const auto& net : m.nets)
            if (!ids.count(net))
                ids[net] = flat.net_count++;
        auto id_of = [&](const std::string& net) {
            auto it = ids.find(net);
            if (it == ids.end())
                throw Error("module " + m.name + ": undeclared net '" + net + "'");
            return it->second;
        };
        for (const auto& inst : m.instances) {
            const Module* def = n.find(inst.module);
            if (!def)
                throw Error("module " + m.name + ": undefined module '" + inst.module + "'");
            std::string path = prefix.empty() ? inst.name : prefix + "/" + inst.name;
            std::map<std::string, std::size_t> child;
            for (const auto& p : def->ports) {
                const Connection* c = inst.connection(p.name);
                child[p.name] = (c && c->net) ? id_of(*c->net) : flat.net_count++;
            }
            if (def->leaf) {
                FlatNetlist::Leaf leaf;
                leaf.path = path;
                leaf.module = def->name;
                leaf.inst = &inst;
                leaf.pins = std::move(child);
                flat.leaves.push_back(std::move(leaf));
            } else {
                walk(*def, path, child, depth + 1);
            }
        }
    };
    std::map<std::string, std::size_t> ids;
    for (const auto& p : tm->ports) {
        ids[p.name] = flat.net_count++;
        flat.top_ports[p.name] = ids[p.name];
    }
    walk(*tm, "", ids, 0);
    return flat;
}

TransparentArcs functional_mode_arcs()
{
    return {
        {std::string(cells::wbr), {{"fi", "fo"}}},
        {std::string(cells::mux2), {{"a", "y"}}},
        {std::string(cells::buf), {{"a", "y"}}},
    };
}

namespace {

struct UnionFind {
    std::vector<std::size_t> parent;
    explicit UnionFind(std::size_t n) : parent(n) { std::iota(parent.begin(), parent.end(), 0); }
    std::size_t find(std::size_t x)
    {
        while (parent[x] != x)
            x = parent[x] = parent[parent[x]];
        return x;
    }
    void unite(std::size_t a, std::size_t b) { parent[find(a)] = find(b); }
};

} // namespace

ConnectivityClasses connectivity_classes(const Netlist& n, const TransparentArcs& arcs,
                                         const std::set<std::string>& endpoints,
                                         const std::map<std::string, std::string>& rename)
{
    FlatNetlist flat = flatten(n);
    UnionFind uf(flat.net_count);
    for (const auto& leaf : flat.leaves) {
        auto it = arcs.find(leaf.module);
        if (it == arcs.end())
            continue;
        for (const auto& [a, b] : it->second)
            uf.unite(leaf.pins.at(a), leaf.pins.at(b));
    }
    std::map<std::size_t, std::set<std::string>> groups;
    auto visit = [&](const std::string& name, std::size_t net) {
        if (endpoints.count(name))
            groups[uf.find(net)].insert(name);
    };
    for (const auto& [name, net] : flat.top_ports)
        visit(name, net);
    for (const auto& leaf : flat.leaves) {
        auto r = rename.find(leaf.path);
        const std::string& path = r == rename.end() ? leaf.path : r->second;
        for (const auto& [pin, net] : leaf.pins)
            visit(path + "." + pin, net);
    }
    ConnectivityClasses out;
    for (auto& [_, g] : groups)
        out.insert(std::move(g));
    return out;
}

std::set<std::string> all_endpoints(const Netlist& n)
{
    FlatNetlist flat = flatten(n);
    std::set<std::string> out;
    for (const auto& [name, _] : flat.top_ports)
        out.insert(name);
    for (const auto& leaf : flat.leaves)
        for (const auto& [pin, _] : leaf.pins)
            out.insert(leaf.path + "." + pin);
    return out;
}

GateSim::GateSim(const Netlist& n, std::string_view module) : flat_(flatten(n, module))
{
    value_.assign(flat_.net_count, 0);
    driven_by_input_.assign(flat_.net_count, 0);
    const Module& m = *n.find(module);
    for (const auto& p : m.ports)
        if (p.dir != PortDir::output)
            driven_by_input_[flat_.top_ports.at(p.name)] = 1;
    for (std::size_t i = 0; i < flat_.leaves.size(); ++i) {
        const auto& mod = flat_.leaves[i].module;
        if (mod == cells::dff)
            dff_.push_back(i);
        else if (mod != cells::mux2 && mod != cells::buf && mod != cells::inv && mod != cells::and2 &&
                 mod != cells::or2 && mod != cells::tie0 && mod != cells::tie1)
            throw Error("gate simulation: unsupported cell '" + mod + "' at " + flat_.leaves[i].path);
    }
}

void GateSim::set(std::string_view port, bool value)
{
    auto it = flat_.top_ports.find(std::string(port));
    if (it == flat_.top_ports.end() || !driven_by_input_[it->second])
        throw Error("gate simulation: no input port '" + std::string(port) + "'");
    value_[it->second] = value;
}

bool GateSim::get(std::string_view port) const
{
    auto it = flat_.top_ports.find(std::string(port));
    if (it == flat_.top_ports.end())
        throw Error("gate simulation: no port '" + std::string(port) + "'");
    return value_[it->second];
}

void GateSim::eval()
{
    // Relax until stable; the generated logic is acyclic apart from the
    // flops, so the number of passes is bounded by the logic depth.
    for (std::size_t pass = 0; pass <= flat_.leaves.size() + 1; ++pass) {
        bool changed = false;
        for (const auto& leaf : flat_.leaves) {
            const auto& mod = leaf.module;
            auto in = [&](const char* p) { return value_[leaf.pins.at(p)] != 0; };
            bool y;
            if (mod == cells::dff)
                continue;
            if (mod == cells::mux2)
                y = in("s") ? in("b") : in("a");
            else if (mod == cells::buf)
                y = in("a");
            else if (mod == cells::inv)
                y = !in("a");
            else if (mod == cells::and2)
                y = in("a") && in("b");
            else if (mod == cells::or2)
                y = in("a") || in("b");
            else
                y = mod == cells::tie1;
            char& out = value_[leaf.pins.at("y")];
            if (out != static_cast<char>(y)) {
                out = y;
                changed = true;
            }
        }
        if (!changed)
            return;
    }
    throw Error("gate simulation did not settle (combinational loop)");
}

void GateSim::clock()
{
    eval();
    std::vector<char> next;
    for (std::size_t i : dff_)
        next.push_back(value_[flat_.leaves[i].pins.at("d")]);
    for (std::size_t k = 0; k < dff_.size(); ++k)
        value_[flat_.leaves[dff_[k]].pins.at("q")] = next[k];
    eval();
}

} // namespace stk
