// SPDX-License-Identifier: Apache-2.0
#include "stk/march.hpp"

#include <algorithm>
#include <iomanip>
#include <map>
#include <set>
#include <sstream>

#include "json.hpp"
#include "lexer.hpp"
#include "stk/dft.hpp"

namespace stk {

std::string_view to_string(MarchOp op)
{
    switch (op) {
    case MarchOp::r0: return "r0";
    case MarchOp::r1: return "r1";
    case MarchOp::w0: return "w0";
    case MarchOp::w1: return "w1";
    }
    return "?";
}

std::string_view to_string(FaultKind k)
{
    switch (k) {
    case FaultKind::saf0: return "SAF0";
    case FaultKind::saf1: return "SAF1";
    case FaultKind::tf_up: return "TF_up";
    case FaultKind::tf_down: return "TF_down";
    case FaultKind::cfid: return "CFid";
    }
    return "?";
}

std::string_view to_string(FaultClass c)
{
    switch (c) {
    case FaultClass::saf: return "SAF";
    case FaultClass::tf: return "TF";
    case FaultClass::cfid: return "CFid";
    }
    return "?";
}

FaultClass fault_class(FaultKind k)
{
    switch (k) {
    case FaultKind::saf0:
    case FaultKind::saf1: return FaultClass::saf;
    case FaultKind::tf_up:
    case FaultKind::tf_down: return FaultClass::tf;
    case FaultKind::cfid: return FaultClass::cfid;
    }
    return FaultClass::saf;
}

std::size_t MarchAlgorithm::op_count() const
{
    std::size_t n = 0;
    for (const auto& e : elements)
        n += e.ops.size();
    return n;
}

namespace {

bool is_read(MarchOp op) { return op == MarchOp::r0 || op == MarchOp::r1; }
bool op_value(MarchOp op) { return op == MarchOp::r1 || op == MarchOp::w1; }

std::optional<AddressOrder> parse_order(std::string_view w)
{
    if (w == "^" || w == "\xE2\x87\x91" || w == "up")
        return AddressOrder::up;
    if (w == "v" || w == "\xE2\x87\x93" || w == "down")
        return AddressOrder::down;
    if (w == "*" || w == "\xE2\x87\x95" || w == "either")
        return AddressOrder::either;
    return std::nullopt;
}

std::optional<MarchOp> parse_op(std::string_view w)
{
    if (w == "r0") return MarchOp::r0;
    if (w == "r1") return MarchOp::r1;
    if (w == "w0") return MarchOp::w0;
    if (w == "w1") return MarchOp::w1;
    return std::nullopt;
}

char order_char(AddressOrder o) { return o == AddressOrder::up ? '^' : o == AddressOrder::down ? 'v' : '*'; }

// Addresses of one element; "either" runs ascending.
template <typename F>
void for_each_address(AddressOrder o, std::size_t words, F&& f)
{
    if (o == AddressOrder::down)
        for (std::size_t a = words; a-- > 0;)
            f(a);
    else
        for (std::size_t a = 0; a < words; ++a)
            f(a);
}

void check_memory(const MemoryConfig& mem)
{
    if (mem.words == 0 || mem.width == 0)
        throw Error("memory '" + mem.name + "' needs words >= 1 and width >= 1");
}

class FaultyMemory {
public:
    FaultyMemory(const MemoryConfig& mem, const std::optional<MemoryFault>& f)
        : width_(mem.width), cells_(mem.words * mem.width, 0), fault_(f)
    {
    }

    void write(std::size_t a, bool v)
    {
        for (std::size_t b = 0; b < width_; ++b)
            write_bit(a, b, v);
    }

    bool read_bit(std::size_t a, std::size_t b) const
    {
        if (fault_ && fault_->victim == MemoryCell{a, b}) {
            if (fault_->kind == FaultKind::saf0)
                return false;
            if (fault_->kind == FaultKind::saf1)
                return true;
        }
        return cells_[a * width_ + b];
    }

private:
    void write_bit(std::size_t a, std::size_t b, bool v)
    {
        auto& c = cells_[a * width_ + b];
        bool old = c;
        bool now = v;
        if (fault_ && fault_->victim == MemoryCell{a, b}) {
            if (fault_->kind == FaultKind::tf_up && !old && v)
                now = false;
            if (fault_->kind == FaultKind::tf_down && old && !v)
                now = true;
        }
        c = now;
        if (fault_ && fault_->kind == FaultKind::cfid && fault_->aggressor == MemoryCell{a, b} && old != now &&
            now == fault_->rising)
            cells_[fault_->victim.word * width_ + fault_->victim.bit] = fault_->forced;
    }

    std::size_t width_;
    std::vector<char> cells_;
    std::optional<MemoryFault> fault_;
};

std::string program_code(const MarchAlgorithm& m)
{
    std::string s;
    for (const auto& e : m.elements) {
        if (!s.empty())
            s += '_';
        s += e.order == AddressOrder::up ? 'U' : e.order == AddressOrder::down ? 'D' : 'E';
        for (auto op : e.ops)
            s += to_string(op);
    }
    return s;
}

MarchAlgorithm parse_program_code(std::string_view code)
{
    MarchAlgorithm m;
    std::size_t i = 0;
    while (i < code.size()) {
        MarchElement e;
        char o = code[i++];
        if (o == 'U') e.order = AddressOrder::up;
        else if (o == 'D') e.order = AddressOrder::down;
        else if (o == 'E') e.order = AddressOrder::either;
        else throw Error("sequencer program: bad address order '" + std::string(1, o) + "'");
        while (i < code.size() && code[i] != '_') {
            if (i + 1 >= code.size())
                throw Error("sequencer program: truncated op");
            auto op = parse_op(code.substr(i, 2));
            if (!op)
                throw Error("sequencer program: unknown op '" + std::string(code.substr(i, 2)) + "'");
            e.ops.push_back(*op);
            i += 2;
        }
        if (i < code.size())
            ++i;
        m.elements.push_back(std::move(e));
    }
    return m;
}

} // namespace

MarchAlgorithm parse_march(std::string_view text, std::string name)
{
    using detail::Token;
    detail::TokenCursor cur(detail::tokenize(text, "{}();,"));
    MarchAlgorithm m;
    m.name = std::move(name);
    const Token open = cur.expect("{");
    while (!cur.accept("}")) {
        if (!m.elements.empty())
            cur.expect(";");
        if (cur.accept("}"))
            break;
        MarchElement e;
        if (!cur.peek().is("(")) {
            const Token& o = cur.next();
            auto order = parse_order(o.text);
            if (!order)
                cur.fail(o, "unknown address order '" + o.text + "'");
            e.order = *order;
        }
        cur.expect("(");
        if (cur.peek().is(")"))
            cur.fail("empty element");
        do {
            const Token& t = cur.next();
            auto op = parse_op(t.text);
            if (!op)
                cur.fail(t, "unknown op '" + t.text + "'");
            e.ops.push_back(*op);
        } while (cur.accept(","));
        cur.expect(")");
        m.elements.push_back(std::move(e));
    }
    if (!cur.at_end())
        cur.fail("text after the closing brace");
    if (m.elements.empty())
        throw ParseError(open.line, open.column, "elements nonempty");
    return m;
}

std::string serialize_march(const MarchAlgorithm& m)
{
    std::string s = "{";
    for (std::size_t i = 0; i < m.elements.size(); ++i) {
        if (i)
            s += "; ";
        s += order_char(m.elements[i].order);
        s += '(';
        for (std::size_t j = 0; j < m.elements[i].ops.size(); ++j) {
            if (j)
                s += ',';
            s += to_string(m.elements[i].ops[j]);
        }
        s += ')';
    }
    return s + "}";
}

MarchAlgorithm mats_plus() { return parse_march("{*(w0); ^(r0,w1); v(r1,w0)}", "MATS+"); }

MarchAlgorithm march_c_minus()
{
    return parse_march("{*(w0); ^(r0,w1); ^(r1,w0); v(r0,w1); v(r1,w0); *(r0)}", "March C-");
}

Cycles bist_test_time(const MarchAlgorithm& m, const MemoryConfig& mem)
{
    return static_cast<Cycles>(mem.words) * m.op_count();
}

std::string describe(const MemoryFault& f)
{
    auto cell = [](const MemoryCell& c) { return "(" + std::to_string(c.word) + "," + std::to_string(c.bit) + ")"; };
    std::string s = std::string(to_string(f.kind)) + " " + cell(f.victim);
    if (f.kind == FaultKind::cfid)
        s += std::string(" aggressor ") + cell(f.aggressor) + (f.rising ? " up" : " down") + " forces " +
             (f.forced ? "1" : "0");
    return s;
}

MarchResult simulate_march(const MarchAlgorithm& m, const MemoryConfig& mem, const std::optional<MemoryFault>& fault)
{
    check_memory(mem);
    if (fault) {
        auto inside = [&](const MemoryCell& c) { return c.word < mem.words && c.bit < mem.width; };
        if (!inside(fault->victim) || (fault->kind == FaultKind::cfid && !inside(fault->aggressor)))
            throw Error("fault " + describe(*fault) + " lies outside memory '" + mem.name + "'");
        if (fault->kind == FaultKind::cfid && fault->aggressor == fault->victim)
            throw Error("coupling fault with aggressor == victim");
    }
    FaultyMemory ram(mem, fault);
    MarchResult r;
    for (std::size_t ei = 0; ei < m.elements.size(); ++ei) {
        const auto& e = m.elements[ei];
        bool stop = false;
        for_each_address(e.order, mem.words, [&](std::size_t a) {
            if (stop)
                return;
            for (std::size_t oi = 0; oi < e.ops.size(); ++oi) {
                MarchOp op = e.ops[oi];
                Cycles cyc = r.cycles++;
                if (!is_read(op)) {
                    ram.write(a, op_value(op));
                    continue;
                }
                for (std::size_t b = 0; b < mem.width; ++b)
                    if (ram.read_bit(a, b) != op_value(op)) {
                        r.pass = false;
                        r.failure = MarchFailure{ei, oi, a, b, cyc};
                        stop = true;
                        return;
                    }
            }
        });
        if (stop)
            break;
    }
    return r;
}

std::vector<RamOp> march_trace(const MarchAlgorithm& m, const MemoryConfig& mem)
{
    std::vector<RamOp> t;
    t.reserve(bist_test_time(m, mem));
    for (const auto& e : m.elements)
        for_each_address(e.order, mem.words, [&](std::size_t a) {
            for (auto op : e.ops)
                t.push_back({a, !is_read(op), op_value(op)});
        });
    return t;
}

std::uint64_t fault_count(const MemoryConfig& mem, FaultClass kind)
{
    std::uint64_t cells = static_cast<std::uint64_t>(mem.words) * mem.width;
    if (kind != FaultClass::cfid)
        return 2 * cells;
    return mem.words ? 4 * cells * (mem.words - 1) : 0;
}

std::vector<MemoryFault> enumerate_faults(const MemoryConfig& mem, FaultClass kind)
{
    std::vector<MemoryFault> out;
    for (std::size_t w = 0; w < mem.words; ++w)
        for (std::size_t b = 0; b < mem.width; ++b) {
            MemoryCell v{w, b};
            switch (kind) {
            case FaultClass::saf:
                out.push_back({FaultKind::saf0, v, {}, true, false});
                out.push_back({FaultKind::saf1, v, {}, true, true});
                break;
            case FaultClass::tf:
                out.push_back({FaultKind::tf_up, v, {}, true, false});
                out.push_back({FaultKind::tf_down, v, {}, true, false});
                break;
            case FaultClass::cfid:
                for (std::size_t aw = 0; aw < mem.words; ++aw) {
                    if (aw == w)
                        continue;
                    for (bool rising : {true, false})
                        for (bool forced : {false, true})
                            out.push_back({FaultKind::cfid, v, {aw, b}, rising, forced});
                }
                break;
            }
        }
    return out;
}

CoverageReport fault_coverage(const MarchAlgorithm& m, const MemoryConfig& mem, const std::vector<FaultClass>& kinds,
                              std::size_t max_faults)
{
    check_memory(mem);
    CoverageReport r;
    r.algorithm = m.name;
    r.memory = mem;
    for (auto k : kinds) {
        auto n = fault_count(mem, k);
        if (n > max_faults)
            throw Error("fault enumeration too large: " + std::to_string(n) + " " +
                        std::string(to_string(k)) + " faults on " + mem.name + " (limit " +
                        std::to_string(max_faults) + ")");
        auto faults = enumerate_faults(mem, k);
        KindCoverage kc;
        kc.kind = k;
        kc.total = faults.size();
        for (const auto& f : faults) {
            if (!simulate_march(m, mem, f).pass)
                ++kc.detected;
            else
                kc.undetected.push_back(f);
        }
        r.kinds.push_back(std::move(kc));
    }
    return r;
}

std::string format_coverage(const std::vector<CoverageReport>& reports)
{
    std::ostringstream os;
    os << std::left << std::setw(12) << "algorithm" << std::setw(16) << "memory" << std::setw(10) << "shape"
       << std::setw(6) << "kind" << std::right << std::setw(16) << "detected/total" << std::setw(10) << "coverage"
       << "\n";
    for (const auto& r : reports)
        for (const auto& k : r.kinds) {
            std::string shape = std::to_string(r.memory.words) + "x" + std::to_string(r.memory.width);
            std::string ratio = std::to_string(k.detected) + "/" + std::to_string(k.total);
            os << std::left << std::setw(12) << r.algorithm << std::setw(16) << r.memory.name << std::setw(10) << shape
               << std::setw(6) << to_string(k.kind) << std::right << std::setw(16) << ratio << std::setw(9)
               << std::fixed << std::setprecision(2) << 100.0 * k.fraction() << "%\n";
        }
    return os.str();
}

std::string coverage_records(const std::vector<CoverageReport>& reports)
{
    std::string out;
    for (const auto& r : reports)
        for (const auto& k : r.kinds) {
            nlohmann::ordered_json j;
            j["algorithm"] = r.algorithm;
            j["memory"] = r.memory.name;
            j["words"] = r.memory.words;
            j["width"] = r.memory.width;
            j["kind"] = to_string(k.kind);
            j["detected"] = k.detected;
            j["total"] = k.total;
            out += j.dump() + "\n";
        }
    return out;
}

std::size_t address_bits(std::size_t words)
{
    std::size_t b = 1;
    while ((std::size_t{1} << b) < words)
        ++b;
    return b;
}

// ---------------------------------------------------------------------------
// BIST fabric

namespace {

Connection pin(std::string port, std::string net) { return {std::move(port), std::move(net)}; }

std::string idx(std::string_view base, std::size_t i) { return std::string(base) + std::to_string(i); }

std::string ram_module_name(const MemoryConfig& m)
{
    return std::string(m.ports == MemoryPorts::two_port ? "RAM_TP_" : "RAM_SP_") + std::to_string(m.words) + "x" +
           std::to_string(m.width);
}

Module ram_module(const MemoryConfig& mem)
{
    Module r;
    r.name = ram_module_name(mem);
    r.leaf = true;
    std::size_t ab = address_bits(mem.words);
    auto side = [&](const std::string& s) {
        r.ports.push_back({"clk" + s, PortDir::input});
        r.ports.push_back({"ce" + s, PortDir::input});
        r.ports.push_back({"we" + s, PortDir::input});
        for (std::size_t k = 0; k < ab; ++k)
            r.ports.push_back({"a" + s + std::to_string(k), PortDir::input});
        for (std::size_t i = 0; i < mem.width; ++i)
            r.ports.push_back({"d" + s + std::to_string(i), PortDir::input});
        for (std::size_t i = 0; i < mem.width; ++i)
            r.ports.push_back({"q" + s + std::to_string(i), PortDir::output});
    };
    if (mem.ports == MemoryPorts::two_port) {
        side("a");
        side("b");
    } else {
        side("");
    }
    return r;
}

std::string port_a(const MemoryConfig& mem, std::string_view p)
{
    return std::string(p) + (mem.ports == MemoryPorts::two_port ? "a" : "");
}

std::string seq_module_name(std::size_t ab) { return "BIST_SEQ_A" + std::to_string(ab); }
std::string tpg_module_name(std::size_t ab, std::size_t db)
{
    return "BIST_TPG_A" + std::to_string(ab) + "_D" + std::to_string(db);
}

Module seq_module(std::size_t ab)
{
    Module s;
    s.name = seq_module_name(ab);
    s.leaf = true;
    s.ports = {{"clk", PortDir::input}, {"go", PortDir::input}, {"fin", PortDir::output},
               {"valid", PortDir::output}, {"rw", PortDir::output}, {"data", PortDir::output}};
    for (std::size_t k = 0; k < ab; ++k)
        s.ports.push_back({idx("a", k), PortDir::output});
    return s;
}

Module tpg_module(std::size_t ab, std::size_t db)
{
    Module t;
    t.name = tpg_module_name(ab, db);
    t.leaf = true;
    t.ports = {{"clk", PortDir::input}, {"en", PortDir::input}, {"valid", PortDir::input}, {"rw", PortDir::input},
               {"data", PortDir::input}};
    for (std::size_t k = 0; k < ab; ++k)
        t.ports.push_back({idx("a", k), PortDir::input});
    t.ports.push_back({"ram_ce", PortDir::output});
    t.ports.push_back({"ram_we", PortDir::output});
    for (std::size_t k = 0; k < ab; ++k)
        t.ports.push_back({idx("ram_a", k), PortDir::output});
    for (std::size_t i = 0; i < db; ++i)
        t.ports.push_back({idx("ram_d", i), PortDir::output});
    for (std::size_t i = 0; i < db; ++i)
        t.ports.push_back({idx("ram_q", i), PortDir::input});
    t.ports.push_back({"err", PortDir::output});
    return t;
}

} // namespace

std::size_t BistFabric::count_instances(std::string_view prefix) const
{
    const Module* top = netlist.find(netlist.top);
    if (!top)
        return 0;
    return static_cast<std::size_t>(std::count_if(top->instances.begin(), top->instances.end(), [&](const Instance& i) {
        return i.module.compare(0, prefix.size(), prefix) == 0;
    }));
}

BistFabric generate_bist(const std::vector<MemoryConfig>& memories, const MarchAlgorithm& m,
                         const GroupingPolicy& policy)
{
    if (memories.empty())
        throw Error("memory BIST: empty memory list");
    if (m.elements.empty())
        throw Error("memory BIST: march algorithm has no elements");
    std::set<std::string> names;
    for (const auto& mem : memories) {
        check_memory(mem);
        if (!names.insert(sanitize_name(mem.name)).second)
            throw Error("memory BIST: duplicate memory name '" + mem.name + "'");
    }

    BistFabric f;
    f.policy = policy;
    std::vector<std::vector<std::size_t>> groups;
    if (policy.grouping == SequencerGrouping::per_memory) {
        for (std::size_t i = 0; i < memories.size(); ++i)
            groups.push_back({i});
    } else {
        std::map<std::pair<std::size_t, std::size_t>, std::size_t> shape_group;
        for (std::size_t i = 0; i < memories.size(); ++i) {
            auto key = std::make_pair(memories[i].words, memories[i].width);
            auto it = shape_group.find(key);
            if (it == shape_group.end()) {
                shape_group[key] = groups.size();
                groups.push_back({i});
            } else {
                groups[it->second].push_back(i);
            }
        }
    }

    Netlist& n = f.netlist;
    n.modules = test_cell_library();
    std::set<std::string> defined;
    for (const auto& mod : n.modules)
        defined.insert(mod.name);
    auto define = [&](Module mod) {
        if (defined.insert(mod.name).second)
            n.modules.push_back(std::move(mod));
    };

    Module ctrl;
    ctrl.name = "BIST_CTRL";
    ctrl.leaf = true;
    ctrl.ports = {{"clk", PortDir::input},  {"start", PortDir::input},  {"sel_si", PortDir::input},
                  {"done", PortDir::output}, {"fail", PortDir::output}, {"diag_so", PortDir::output}};
    for (std::size_t g = 0; g < groups.size(); ++g) {
        ctrl.ports.push_back({idx("go", g), PortDir::output});
        ctrl.ports.push_back({idx("fin", g), PortDir::input});
    }
    for (std::size_t j = 0; j < memories.size(); ++j) {
        ctrl.ports.push_back({idx("en", j), PortDir::output});
        ctrl.ports.push_back({idx("err", j), PortDir::input});
    }
    define(ctrl);

    Module top;
    top.name = "bist_fabric";
    top.ports = {{"ref_clk", PortDir::input},   {"bist_start", PortDir::input}, {"bist_sel_si", PortDir::input},
                 {"bist_done", PortDir::output}, {"bist_fail", PortDir::output}, {"bist_diag_so", PortDir::output}};
    top.nets.push_back("tie_lo");
    top.instances.push_back({std::string(cells::tie0), "u_tie", {}, {pin("y", "tie_lo")}});

    Instance ci{"BIST_CTRL",
                "u_bist_ctrl",
                {{"sequencers", std::to_string(groups.size())},
                 {"tpgs", std::to_string(memories.size())},
                 {"concurrent", policy.concurrent ? "1" : "0"}},
                {pin("clk", "ref_clk"), pin("start", "bist_start"), pin("sel_si", "bist_sel_si"),
                 pin("done", "bist_done"), pin("fail", "bist_fail"), pin("diag_so", "bist_diag_so")}};

    const std::string prog = program_code(m);
    std::vector<std::size_t> tpg_of(memories.size());
    for (std::size_t g = 0; g < groups.size(); ++g) {
        const MemoryConfig& shape = memories[groups[g][0]];
        std::size_t ab = address_bits(shape.words);
        define(seq_module(ab));
        std::string s = "s" + std::to_string(g) + "_";
        for (std::string p : {"go", "fin", "valid", "rw", "data"})
            top.nets.push_back(s + p);
        for (std::size_t k = 0; k < ab; ++k)
            top.nets.push_back(s + idx("a", k));
        ci.connections.push_back(pin(idx("go", g), s + "go"));
        ci.connections.push_back(pin(idx("fin", g), s + "fin"));
        Instance si{seq_module_name(ab),
                    "u_seq" + std::to_string(g),
                    {{"prog", prog}, {"words", std::to_string(shape.words)}},
                    {pin("clk", "ref_clk"), pin("go", s + "go"), pin("fin", s + "fin"), pin("valid", s + "valid"),
                     pin("rw", s + "rw"), pin("data", s + "data")}};
        for (std::size_t k = 0; k < ab; ++k)
            si.connections.push_back(pin(idx("a", k), s + idx("a", k)));
        top.instances.push_back(std::move(si));

        for (std::size_t j : groups[g]) {
            const MemoryConfig& mem = memories[j];
            std::string mn = sanitize_name(mem.name);
            std::string t = "t" + std::to_string(j) + "_";
            std::size_t db = mem.width;
            define(tpg_module(ab, db));
            define(ram_module(mem));
            top.nets.push_back(t + "en");
            top.nets.push_back(t + "err");
            std::string r = mn + "_";
            top.nets.push_back(r + "ce");
            top.nets.push_back(r + "we");
            for (std::size_t k = 0; k < ab; ++k)
                top.nets.push_back(r + idx("a", k));
            for (std::size_t i = 0; i < db; ++i)
                top.nets.push_back(r + idx("d", i));
            for (std::size_t i = 0; i < db; ++i)
                top.nets.push_back(r + idx("q", i));
            ci.connections.push_back(pin(idx("en", j), t + "en"));
            ci.connections.push_back(pin(idx("err", j), t + "err"));

            Instance ti{tpg_module_name(ab, db),
                        "u_tpg" + std::to_string(j),
                        {{"rd_code", "0"}, {"wr_code", "1"}},
                        {pin("clk", "ref_clk"), pin("en", t + "en"), pin("valid", s + "valid"), pin("rw", s + "rw"),
                         pin("data", s + "data")}};
            for (std::size_t k = 0; k < ab; ++k)
                ti.connections.push_back(pin(idx("a", k), s + idx("a", k)));
            ti.connections.push_back(pin("ram_ce", r + "ce"));
            ti.connections.push_back(pin("ram_we", r + "we"));
            for (std::size_t k = 0; k < ab; ++k)
                ti.connections.push_back(pin(idx("ram_a", k), r + idx("a", k)));
            for (std::size_t i = 0; i < db; ++i)
                ti.connections.push_back(pin(idx("ram_d", i), r + idx("d", i)));
            for (std::size_t i = 0; i < db; ++i)
                ti.connections.push_back(pin(idx("ram_q", i), r + idx("q", i)));
            ti.connections.push_back(pin("err", t + "err"));
            tpg_of[j] = top.instances.size();
            top.instances.push_back(std::move(ti));

            // port A under test; port B of two-port parts held idle
            Instance ri{ram_module_name(mem),
                        mn,
                        {{"words", std::to_string(mem.words)}, {"width", std::to_string(mem.width)}},
                        {}};
            std::string a = mem.ports == MemoryPorts::two_port ? "a" : "";
            ri.connections.push_back(pin("clk" + a, "ref_clk"));
            ri.connections.push_back(pin("ce" + a, r + "ce"));
            ri.connections.push_back(pin("we" + a, r + "we"));
            for (std::size_t k = 0; k < ab; ++k)
                ri.connections.push_back(pin("a" + a + std::to_string(k), r + idx("a", k)));
            for (std::size_t i = 0; i < db; ++i)
                ri.connections.push_back(pin("d" + a + std::to_string(i), r + idx("d", i)));
            for (std::size_t i = 0; i < db; ++i)
                ri.connections.push_back(pin("q" + a + std::to_string(i), r + idx("q", i)));
            if (mem.ports == MemoryPorts::two_port) {
                ri.connections.push_back(pin("clkb", "ref_clk"));
                ri.connections.push_back(pin("ceb", "tie_lo"));
                ri.connections.push_back(pin("web", "tie_lo"));
                for (std::size_t k = 0; k < ab; ++k)
                    ri.connections.push_back(pin(idx("ab", k), "tie_lo"));
                for (std::size_t i = 0; i < db; ++i)
                    ri.connections.push_back(pin(idx("db", i), "tie_lo"));
                for (std::size_t i = 0; i < db; ++i)
                    ri.connections.push_back({idx("qb", i), std::nullopt});
            }
            top.instances.push_back(std::move(ri));
        }
        std::vector<std::string> names_in_group;
        for (std::size_t j : groups[g])
            names_in_group.push_back(memories[j].name);
        f.groups.push_back(std::move(names_in_group));

        Cycles t = bist_test_time(m, shape);
        f.cycles = policy.concurrent ? std::max(f.cycles, t) : f.cycles + t;
    }
    top.instances.insert(top.instances.begin() + 1, std::move(ci));
    n.modules.push_back(std::move(top));
    n.top = "bist_fabric";
    return f;
}

TestEntity bist_test_entity(const BistFabric& fabric, double power)
{
    TestEntity e;
    e.id = "memory.bist";
    e.core = "memory_bist";
    e.kind = EntityKind::bist;
    e.time_function = {{0, fabric.cycles}};
    e.power = power;
    e.resources = {{"bist", ResourceMode::exclusive}};
    return e;
}

bool BistVerifyReport::ok() const
{
    if (!violations.empty())
        return false;
    for (const auto& m : memories)
        if (m.mismatch || !m.message.empty())
            return false;
    return true;
}

BistVerifyReport verify_fabric(const BistFabric& fabric, const std::vector<MemoryConfig>& memories,
                               const MarchAlgorithm& m)
{
    BistVerifyReport rep;
    const Module* top = fabric.netlist.find(fabric.netlist.top);
    if (!top) {
        rep.violations.push_back("fabric has no top module");
        return rep;
    }
    auto structural = validate_netlist(fabric.netlist);
    for (auto& v : structural.violations)
        rep.violations.push_back(v);

    std::size_t controllers = 0;
    std::vector<const Instance*> tpgs, seqs;
    for (const auto& i : top->instances) {
        if (i.module == "BIST_CTRL")
            ++controllers;
        else if (i.module.rfind("BIST_TPG_", 0) == 0)
            tpgs.push_back(&i);
        else if (i.module.rfind("BIST_SEQ_", 0) == 0)
            seqs.push_back(&i);
    }
    if (controllers != 1)
        rep.violations.push_back("expected one BIST controller, found " + std::to_string(controllers));

    auto net_of = [](const Instance& i, std::string_view port) -> std::string {
        const Connection* c = i.connection(port);
        return c && c->net ? *c->net : std::string();
    };
    auto count_param = [](const Instance& i, std::string_view key) -> std::optional<std::size_t> {
        const std::string* v = i.param(key);
        if (!v)
            return std::nullopt;
        try {
            return static_cast<std::size_t>(std::stoull(*v));
        } catch (...) {
            return std::nullopt;
        }
    };

    std::set<const Instance*> bound;
    for (const auto& mem : memories) {
        BistMemoryCheck chk;
        chk.memory = mem.name;
        const Instance* ram = top->instance(sanitize_name(mem.name));
        if (!ram || ram->module != ram_module_name(mem)) {
            chk.message = "no RAM instance of the right shape";
            rep.memories.push_back(chk);
            continue;
        }
        std::string ce = net_of(*ram, port_a(mem, "ce"));
        std::vector<const Instance*> drivers;
        for (auto* t : tpgs)
            if (!ce.empty() && net_of(*t, "ram_ce") == ce)
                drivers.push_back(t);
        if (drivers.size() != 1) {
            chk.message = std::to_string(drivers.size()) + " TPGs drive this memory";
            rep.memories.push_back(chk);
            continue;
        }
        const Instance& tpg = *drivers[0];
        bound.insert(&tpg);
        const Module* tm = fabric.netlist.find(tpg.module);
        std::size_t ab = 0, db = 0;
        if (tm)
            for (const auto& p : tm->ports) {
                ab += p.name.rfind("ram_a", 0) == 0;
                db += p.name.rfind("ram_d", 0) == 0;
            }
        if (db != mem.width || (std::size_t{1} << ab) < mem.words) {
            chk.message = "TPG widths do not fit the memory";
            rep.memories.push_back(chk);
            continue;
        }
        // TPG to RAM wiring
        std::string a = mem.ports == MemoryPorts::two_port ? "a" : "";
        bool wired = net_of(tpg, "ram_we") == net_of(*ram, "we" + a);
        for (std::size_t k = 0; k < address_bits(mem.words); ++k)
            wired = wired && net_of(tpg, idx("ram_a", k)) == net_of(*ram, "a" + a + std::to_string(k));
        for (std::size_t i = 0; i < db; ++i)
            wired = wired && net_of(tpg, idx("ram_d", i)) == net_of(*ram, "d" + a + std::to_string(i)) &&
                    net_of(tpg, idx("ram_q", i)) == net_of(*ram, "q" + a + std::to_string(i));
        if (!wired) {
            chk.message = "TPG and RAM ports are not wired one-to-one";
            rep.memories.push_back(chk);
            continue;
        }
        std::vector<const Instance*> feeding;
        for (auto* s : seqs)
            if (net_of(*s, "valid") == net_of(tpg, "valid"))
                feeding.push_back(s);
        if (feeding.size() != 1) {
            chk.message = "TPG bound to " + std::to_string(feeding.size()) + " sequencers";
            rep.memories.push_back(chk);
            continue;
        }
        const Instance& seq = *feeding[0];
        bool seq_wired = net_of(seq, "rw") == net_of(tpg, "rw") && net_of(seq, "data") == net_of(tpg, "data");
        for (std::size_t k = 0; k < ab; ++k)
            seq_wired = seq_wired && net_of(seq, idx("a", k)) == net_of(tpg, idx("a", k));
        const std::string* prog = seq.param("prog");
        auto words = count_param(seq, "words");
        auto rd = count_param(tpg, "rd_code"), wr = count_param(tpg, "wr_code");
        if (!seq_wired || !prog || !words || !rd || !wr) {
            chk.message = "sequencer/TPG command interface incomplete";
            rep.memories.push_back(chk);
            continue;
        }

        // Sequencer: commands (rw=1 write) per op; TPG: decode to RAM signals.
        MarchAlgorithm program;
        try {
            program = parse_program_code(*prog);
        } catch (const Error& e) {
            chk.message = e.what();
            rep.memories.push_back(chk);
            continue;
        }
        std::vector<RamOp> seen;
        std::size_t mask = (std::size_t{1} << ab) - 1;
        for (const auto& e : program.elements)
            for_each_address(e.order, *words, [&](std::size_t addr) {
                for (auto op : e.ops) {
                    std::size_t rw = is_read(op) ? 0 : 1;
                    RamOp r;
                    r.address = addr & mask;
                    if (rw == *wr)
                        r.write = true;
                    else if (rw == *rd)
                        r.write = false;
                    else
                        continue;
                    r.data = op_value(op);
                    seen.push_back(r);
                }
            });
        auto expect = march_trace(m, mem);
        chk.ops = seen.size();
        std::size_t n = std::min(seen.size(), expect.size());
        for (std::size_t c = 0; c < n; ++c)
            if (!(seen[c] == expect[c])) {
                chk.mismatch = c;
                break;
            }
        if (!chk.mismatch && seen.size() != expect.size())
            chk.mismatch = n;
        if (chk.mismatch) {
            std::size_t c = *chk.mismatch;
            auto show = [](const std::vector<RamOp>& v, std::size_t c) {
                if (c >= v.size())
                    return std::string("<end>");
                return std::string(v[c].write ? "w" : "r") + (v[c].data ? "1" : "0") + "@" +
                       std::to_string(v[c].address);
            };
            chk.message = "diverges at cycle " + std::to_string(c) + ": fabric " + show(seen, c) + ", expected " +
                          show(expect, c);
        }
        rep.memories.push_back(chk);
    }
    for (auto* t : tpgs)
        if (!bound.count(t))
            rep.violations.push_back("TPG " + t->name + " drives no listed memory");
    return rep;
}

} // namespace stk
