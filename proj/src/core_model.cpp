// SPDX-License-Identifier: Apache-2.0
#include "stk/core_model.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "lexer.hpp"

namespace stk {

using detail::Token;
using detail::TokenCursor;

std::string_view to_string(PinKind k)
{
    switch (k) {
    case PinKind::clock: return "clock";
    case PinKind::reset: return "reset";
    case PinKind::scan_enable: return "scan_enable";
    case PinKind::test_enable: return "test_enable";
    }
    return "?";
}

std::string_view to_string(PatternKind k)
{
    return k == PatternKind::scan ? "scan" : "func";
}

std::string_view to_string(CaptureMode m)
{
    return m == CaptureMode::normal ? "normal" : "pulse_clock";
}

std::string_view to_string(MemoryPorts p)
{
    return p == MemoryPorts::single_port ? "single" : "two";
}

std::size_t CoreTestInfo::total_flops() const
{
    std::size_t n = 0;
    for (const auto& c : scan_chains)
        n += c.length;
    return n;
}

const PatternSet* CoreTestInfo::scan_patterns() const
{
    for (const auto& p : pattern_sets)
        if (p.kind == PatternKind::scan)
            return &p;
    return nullptr;
}

const PatternSet* CoreTestInfo::functional_patterns() const
{
    for (const auto& p : pattern_sets)
        if (p.kind == PatternKind::functional)
            return &p;
    return nullptr;
}

std::vector<std::pair<std::string, std::string>> CoreTestInfo::shared_pins() const
{
    std::vector<std::pair<std::string, std::string>> out;
    for (const auto& c : scan_chains)
        if (c.shared_out)
            out.emplace_back(c.name, c.scan_out);
    return out;
}

bool CoreTestInfo::has_shared_pins() const
{
    return std::any_of(scan_chains.begin(), scan_chains.end(), [](const ScanChain& c) { return c.shared_out; });
}

std::string functional_input_name(std::size_t i)
{
    return "pi" + std::to_string(i);
}

std::string functional_output_name(std::size_t i)
{
    return "po" + std::to_string(i);
}

std::optional<std::size_t> functional_output_index(std::string_view pin)
{
    if (pin.size() < 3 || pin.substr(0, 2) != "po")
        return std::nullopt;
    std::size_t v = 0;
    auto [ptr, ec] = std::from_chars(pin.data() + 2, pin.data() + pin.size(), v);
    if (ec != std::errc() || ptr != pin.data() + pin.size())
        return std::nullopt;
    return v;
}

const CoreTestInfo* SocDescription::find_core(std::string_view n) const
{
    for (const auto& c : cores)
        if (c.name == n)
            return &c;
    return nullptr;
}

std::size_t minimum_pin_need(const CoreTestInfo& core)
{
    std::size_t need = core.control_pins.size() + controller_pin_count;
    if (!core.scan_chains.empty() && core.scan_patterns())
        need += 2;
    return need;
}

std::string read_text_file(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw Error("cannot open '" + path.string() + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

// ---------------------------------------------------------------------------
// validation

namespace {

bool is_bits(std::string_view s, bool allow_x)
{
    return std::all_of(s.begin(), s.end(), [&](char c) { return c == '0' || c == '1' || (allow_x && c == 'X'); });
}

void check_pattern(const CoreTestInfo& core, const PatternSet& set, std::size_t index, const Pattern& p,
                   std::vector<std::string>& v)
{
    std::string where = std::string(to_string(set.kind)) + " pattern " + std::to_string(index);
    if (set.kind == PatternKind::scan) {
        if (p.load.size() != core.scan_chains.size() || p.unload.size() != core.scan_chains.size()) {
            v.push_back(where + ": needs one load and one unload string per scan chain");
            return;
        }
        for (std::size_t c = 0; c < core.scan_chains.size(); ++c) {
            const auto& ch = core.scan_chains[c];
            if (p.load[c].size() != ch.length)
                v.push_back(where + ": load string for chain '" + ch.name + "' has " + std::to_string(p.load[c].size()) +
                            " bits, chain length is " + std::to_string(ch.length));
            if (p.unload[c].size() != ch.length)
                v.push_back(where + ": unload string for chain '" + ch.name + "' has " +
                            std::to_string(p.unload[c].size()) + " bits, chain length is " +
                            std::to_string(ch.length));
            if (!is_bits(p.load[c], false) || !is_bits(p.unload[c], true))
                v.push_back(where + ": chain '" + ch.name + "' strings must be 0/1 (X allowed in unload)");
        }
    } else if (!p.load.empty() || !p.unload.empty()) {
        v.push_back(where + ": functional patterns carry no scan data");
    }
    if (p.inputs.size() != core.pi)
        v.push_back(where + ": input string has " + std::to_string(p.inputs.size()) + " bits, core has " +
                    std::to_string(core.pi) + " inputs");
    if (p.outputs.size() != core.po)
        v.push_back(where + ": output string has " + std::to_string(p.outputs.size()) + " bits, core has " +
                    std::to_string(core.po) + " outputs");
    if (!is_bits(p.inputs, false) || !is_bits(p.outputs, true))
        v.push_back(where + ": input/output strings must be 0/1 (X allowed in outputs)");
}

} // namespace

ValidationReport validate_core(const CoreTestInfo& core)
{
    ValidationReport r;
    r.subject = core.name;
    auto& v = r.violations;

    if (core.name.empty())
        v.push_back("core name is empty");

    std::set<std::string> domains;
    for (const auto& d : core.clock_domains)
        if (!domains.insert(d).second)
            v.push_back("duplicate clock domain '" + d + "'");

    std::set<std::string> pins;
    for (std::size_t i = 0; i < core.pi; ++i)
        pins.insert(functional_input_name(i));
    for (std::size_t i = 0; i < core.po; ++i)
        pins.insert(functional_output_name(i));
    auto claim_pin = [&](const std::string& pin) {
        if (pin.empty())
            v.push_back("empty pin name");
        else if (!pins.insert(pin).second)
            v.push_back("duplicate pin '" + pin + "'");
    };

    for (const auto& cp : core.control_pins)
        claim_pin(cp.name);

    std::set<std::string> chain_names;
    std::size_t dedicated_out = 0;
    std::set<std::string> shared_targets;
    for (const auto& ch : core.scan_chains) {
        if (!chain_names.insert(ch.name).second)
            v.push_back("duplicate scan chain '" + ch.name + "'");
        if (ch.length < 1)
            v.push_back("chain '" + ch.name + "': chain length >= 1 required");
        if (!domains.count(ch.clock_domain))
            v.push_back("chain '" + ch.name + "': unknown clock domain '" + ch.clock_domain + "'");
        claim_pin(ch.scan_in);
        if (ch.shared_out) {
            auto idx = functional_output_index(ch.scan_out);
            if (!idx || *idx >= core.po)
                v.push_back("chain '" + ch.name + "': shared output '" + ch.scan_out +
                            "' is not a functional output");
            else if (!shared_targets.insert(ch.scan_out).second)
                v.push_back("functional output '" + ch.scan_out + "' shared by more than one chain");
            else
                r.notes.push_back("shared pin: chain '" + ch.name + "' scan output shares functional output '" +
                                  ch.scan_out + "'");
        } else {
            claim_pin(ch.scan_out);
            ++dedicated_out;
        }
    }

    if (core.ti != core.control_pins.size() + core.scan_chains.size())
        v.push_back("ti = " + std::to_string(core.ti) + " but " + std::to_string(core.control_pins.size()) +
                    " control pins + " + std::to_string(core.scan_chains.size()) + " scan inputs are declared");
    if (core.to != dedicated_out)
        v.push_back("to = " + std::to_string(core.to) + " but " + std::to_string(dedicated_out) +
                    " dedicated scan outputs are declared");

    bool has_te = std::any_of(core.control_pins.begin(), core.control_pins.end(),
                              [](const ControlPin& p) { return p.kind == PinKind::test_enable; });
    std::set<PatternKind> kinds;
    for (const auto& set : core.pattern_sets) {
        if (!kinds.insert(set.kind).second)
            v.push_back("more than one " + std::string(to_string(set.kind)) + " pattern set");
        if (set.kind == PatternKind::scan && set.count > 0 && core.scan_chains.empty())
            v.push_back("scan patterns declared but the core has no scan chains");
        if (set.kind == PatternKind::functional && set.capture != CaptureMode::normal)
            v.push_back("capture mode applies to scan patterns only");
        if (set.kind == PatternKind::scan && set.capture == CaptureMode::pulse_clock && !has_te)
            v.push_back("pulse_clock capture needs a test_enable control pin");
        if (set.vectors) {
            if (set.vectors->size() != set.count)
                v.push_back(std::string(to_string(set.kind)) + " pattern set declares count " +
                            std::to_string(set.count) + " but carries " + std::to_string(set.vectors->size()) +
                            " vectors");
            for (std::size_t i = 0; i < set.vectors->size(); ++i)
                check_pattern(core, set, i, (*set.vectors)[i], v);
        }
    }

    if (!(core.test_power >= 0.0))
        v.push_back("test power must be nonnegative");
    return r;
}

// ---------------------------------------------------------------------------
// core file reader

namespace {

constexpr std::string_view core_punct = "{};,=";

using Attributes = std::vector<std::pair<const Token*, const Token*>>;  // key, value (null for flags)

// Collects `key=value` and bare-flag words up to the terminating ';'.
Attributes read_attributes(TokenCursor& cur)
{
    Attributes attrs;
    while (!cur.peek().is(";")) {
        const Token& key = cur.expect_word("attribute");
        if (cur.accept("=")) {
            // An empty value is allowed (e.g. `pi=` for a core without inputs).
            if (cur.peek().kind == Token::Kind::word && !cur.peek(1).is("="))
                attrs.emplace_back(&key, &cur.next());
            else
                attrs.emplace_back(&key, nullptr);
        } else {
            attrs.emplace_back(&key, nullptr);
        }
    }
    cur.expect(";");
    return attrs;
}

struct RawVector {
    const Token* at = nullptr;
    std::map<std::string, std::string> load, unload;
    std::string inputs, outputs;
};

CoreTestInfo read_core(TokenCursor& cur)
{
    CoreTestInfo core;
    const Token& kw = cur.expect("core");
    core.name = cur.expect_word("core name").text;
    cur.expect("{");

    struct PendingVectors {
        std::size_t set_index;
        std::vector<RawVector> raw;
    };
    std::vector<PendingVectors> pending;
    std::set<std::string> domains;
    std::set<std::string> pins;
    auto claim = [&](const Token& at, const std::string& pin) {
        if (!pins.insert(pin).second)
            cur.fail(at, "duplicate pin '" + pin + "'");
    };
    std::vector<std::pair<const Token*, std::string>> chain_domains;

    while (!cur.accept("}")) {
        const Token& st = cur.expect_word("statement");
        const std::string& w = st.text;
        if (w == "ti" || w == "to" || w == "pi" || w == "po") {
            std::size_t n = detail::parse_count(cur.next(), cur);
            (w == "ti" ? core.ti : w == "to" ? core.to : w == "pi" ? core.pi : core.po) = n;
            cur.expect(";");
        } else if (w == "clockdomains") {
            while (!cur.peek().is(";")) {
                const Token& d = cur.expect_word("clock domain");
                if (!domains.insert(d.text).second)
                    cur.fail(d, "duplicate clock domain '" + d.text + "'");
                core.clock_domains.push_back(d.text);
                if (!cur.accept(","))
                    break;
            }
            cur.expect(";");
        } else if (w == "control") {
            ControlPin cp;
            const Token& name = cur.expect_word("control pin name");
            cp.name = name.text;
            claim(name, cp.name);
            bool have_kind = false;
            for (auto [k, val] : read_attributes(cur)) {
                if (k->text == "kind" && val) {
                    have_kind = true;
                    if (val->text == "clock") cp.kind = PinKind::clock;
                    else if (val->text == "reset") cp.kind = PinKind::reset;
                    else if (val->text == "scan_enable") cp.kind = PinKind::scan_enable;
                    else if (val->text == "test_enable") cp.kind = PinKind::test_enable;
                    else cur.fail(*val, "unknown control pin kind '" + val->text + "'");
                } else if (k->text == "shareable" && !val) {
                    cp.shareable = true;
                } else {
                    cur.fail(*k, "unknown control attribute '" + k->text + "'");
                }
            }
            if (!have_kind)
                cur.fail(name, "control pin '" + cp.name + "' needs kind=");
            core.control_pins.push_back(std::move(cp));
        } else if (w == "chain") {
            ScanChain ch;
            const Token& name = cur.expect_word("chain name");
            ch.name = name.text;
            bool have_len = false;
            for (auto [k, val] : read_attributes(cur)) {
                if (!val)
                    cur.fail(*k, "chain attribute '" + k->text + "' needs a value");
                if (k->text == "len") {
                    ch.length = detail::parse_count(*val, cur);
                    have_len = true;
                    if (ch.length == 0)
                        cur.fail(*val, "chain '" + ch.name + "': chain length >= 1 required");
                } else if (k->text == "clk") {
                    ch.clock_domain = val->text;
                    chain_domains.emplace_back(val, val->text);
                } else if (k->text == "in") {
                    ch.scan_in = val->text;
                    claim(*val, ch.scan_in);
                } else if (k->text == "out") {
                    if (val->text.rfind("shared:", 0) == 0) {
                        ch.shared_out = true;
                        ch.scan_out = val->text.substr(7);
                    } else {
                        ch.scan_out = val->text;
                        claim(*val, ch.scan_out);
                    }
                } else {
                    cur.fail(*k, "unknown chain attribute '" + k->text + "'");
                }
            }
            if (!have_len || ch.clock_domain.empty() || ch.scan_in.empty() || ch.scan_out.empty())
                cur.fail(name, "chain '" + ch.name + "' needs len=, clk=, in= and out=");
            core.scan_chains.push_back(std::move(ch));
        } else if (w == "patterns") {
            PatternSet set;
            const Token& kind = cur.expect_word("pattern kind");
            if (kind.text == "scan") set.kind = PatternKind::scan;
            else if (kind.text == "func") set.kind = PatternKind::functional;
            else cur.fail(kind, "pattern kind must be scan or func");
            bool have_count = false;
            for (auto [k, val] : read_attributes(cur)) {
                if (k->text == "count" && val) {
                    set.count = detail::parse_count(*val, cur);
                    have_count = true;
                } else if (k->text == "capture" && val) {
                    if (val->text == "pulse_clock") set.capture = CaptureMode::pulse_clock;
                    else if (val->text == "normal") set.capture = CaptureMode::normal;
                    else cur.fail(*val, "capture must be normal or pulse_clock");
                } else {
                    cur.fail(*k, "unknown patterns attribute '" + k->text + "'");
                }
            }
            if (!have_count)
                cur.fail(kind, "patterns statement needs count=");
            core.pattern_sets.push_back(std::move(set));
        } else if (w == "vectors") {
            if (core.pattern_sets.empty())
                cur.fail(st, "vectors block must follow a patterns statement");
            if (core.pattern_sets.back().vectors)
                cur.fail(st, "pattern set already has vectors");
            PendingVectors pv{core.pattern_sets.size() - 1, {}};
            cur.expect("{");
            while (!cur.accept("}")) {
                RawVector rv;
                rv.at = &cur.expect("v");
                for (auto [k, val] : read_attributes(cur)) {
                    std::string value = val ? val->text : std::string();
                    const std::string& key = k->text;
                    if (key == "pi") rv.inputs = value;
                    else if (key == "po") rv.outputs = value;
                    else if (key.rfind("load.", 0) == 0) rv.load[key.substr(5)] = value;
                    else if (key.rfind("unload.", 0) == 0) rv.unload[key.substr(7)] = value;
                    else cur.fail(*k, "unknown vector field '" + key + "'");
                }
                pv.raw.push_back(std::move(rv));
            }
            core.pattern_sets.back().vectors.emplace();
            pending.push_back(std::move(pv));
        } else if (w == "power") {
            core.test_power = detail::parse_real(cur.next(), cur);
            cur.expect(";");
        } else if (w == "soft" || w == "hard") {
            core.softness = w == "soft" ? Softness::soft : Softness::hard;
            cur.expect(";");
        } else {
            cur.fail(st, "unknown statement '" + w + "'");
        }
    }

    for (const auto& [tok, d] : chain_domains)
        if (!domains.count(d))
            cur.fail(*tok, "unknown clock domain '" + d + "'");

    std::map<std::string, std::size_t> chain_index;
    for (std::size_t i = 0; i < core.scan_chains.size(); ++i)
        chain_index[core.scan_chains[i].name] = i;
    for (auto& pv : pending) {
        auto& out = *core.pattern_sets[pv.set_index].vectors;
        bool scan = core.pattern_sets[pv.set_index].kind == PatternKind::scan;
        for (auto& rv : pv.raw) {
            Pattern p;
            p.inputs = std::move(rv.inputs);
            p.outputs = std::move(rv.outputs);
            if (scan) {
                p.load.resize(core.scan_chains.size());
                p.unload.resize(core.scan_chains.size());
            }
            for (auto* m : {&rv.load, &rv.unload}) {
                for (auto& [chain, bits] : *m) {
                    auto it = chain_index.find(chain);
                    if (it == chain_index.end() || !scan)
                        cur.fail(*rv.at, "vector references unknown scan chain '" + chain + "'");
                    (m == &rv.load ? p.load : p.unload)[it->second] = std::move(bits);
                }
            }
            out.push_back(std::move(p));
        }
    }

    auto report = validate_core(core);
    if (!report.ok())
        cur.fail(kw, "core '" + core.name + "': " + report.violations.front());
    return core;
}

std::string format_real(double v)
{
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, ptr);
}

} // namespace

CoreTestInfo parse_core_test_info(std::string_view text)
{
    TokenCursor cur(detail::tokenize(text, core_punct));
    CoreTestInfo core = read_core(cur);
    if (!cur.at_end())
        cur.fail("unexpected text after core block");
    return core;
}

std::string serialize_core_test_info(const CoreTestInfo& core)
{
    std::ostringstream os;
    os << "core " << core.name << " {\n";
    if (core.ti) os << "  ti " << core.ti << ";\n";
    if (core.to) os << "  to " << core.to << ";\n";
    if (core.pi) os << "  pi " << core.pi << ";\n";
    if (core.po) os << "  po " << core.po << ";\n";
    if (!core.clock_domains.empty()) {
        os << "  clockdomains ";
        for (std::size_t i = 0; i < core.clock_domains.size(); ++i)
            os << (i ? ", " : "") << core.clock_domains[i];
        os << ";\n";
    }
    for (const auto& cp : core.control_pins)
        os << "  control " << cp.name << " kind=" << to_string(cp.kind) << (cp.shareable ? " shareable" : "")
           << ";\n";
    for (const auto& ch : core.scan_chains)
        os << "  chain " << ch.name << " len=" << ch.length << " clk=" << ch.clock_domain << " in=" << ch.scan_in
           << " out=" << (ch.shared_out ? "shared:" : "") << ch.scan_out << ";\n";
    for (const auto& set : core.pattern_sets) {
        os << "  patterns " << to_string(set.kind) << " count=" << set.count;
        if (set.capture != CaptureMode::normal)
            os << " capture=" << to_string(set.capture);
        os << ";\n";
        if (set.vectors) {
            os << "  vectors {\n";
            for (const auto& p : *set.vectors) {
                os << "    v";
                for (std::size_t c = 0; c < p.load.size(); ++c)
                    os << " load." << core.scan_chains[c].name << "=" << p.load[c];
                for (std::size_t c = 0; c < p.unload.size(); ++c)
                    os << " unload." << core.scan_chains[c].name << "=" << p.unload[c];
                if (!p.inputs.empty()) os << " pi=" << p.inputs;
                if (!p.outputs.empty()) os << " po=" << p.outputs;
                os << ";\n";
            }
            os << "  }\n";
        }
    }
    if (core.test_power != 1.0)
        os << "  power " << format_real(core.test_power) << ";\n";
    if (core.softness == Softness::soft)
        os << "  soft;\n";
    os << "}\n";
    return os.str();
}

CoreTestInfo load_core_file(const std::filesystem::path& path)
{
    try {
        return parse_core_test_info(read_text_file(path));
    } catch (const ParseError& e) {
        throw Error(path.string() + ":" + e.what());
    }
}

// ---------------------------------------------------------------------------
// manifest

SocDescription parse_soc_manifest(std::string_view text, const std::filesystem::path& base_dir)
{
    TokenCursor cur(detail::tokenize(text, ";="));
    SocDescription soc;
    std::set<std::string> names;
    std::set<std::string> mem_names;
    while (!cur.at_end()) {
        const Token& st = cur.expect_word("manifest statement");
        if (st.text == "soc") {
            soc.name = cur.expect_word("soc name").text;
            cur.expect(";");
        } else if (st.text == "pin_budget" || st.text == "chip_gates") {
            const Token& v = cur.next();
            if (!v.text.empty() && v.text[0] == '-')
                cur.fail(v, st.text + " must not be negative");
            (st.text == "pin_budget" ? soc.pin_budget : soc.chip_gates) = detail::parse_count(v, cur);
            cur.expect(";");
        } else if (st.text == "power_cap") {
            const Token& v = cur.next();
            soc.power_cap = detail::parse_real(v, cur);
            if (soc.power_cap < 0)
                cur.fail(v, "power_cap must not be negative");
            cur.expect(";");
        } else if (st.text == "netlist") {
            soc.netlist_path = base_dir / cur.expect_word("netlist path").text;
            cur.expect(";");
        } else if (st.text == "core") {
            const Token& p = cur.expect_word("core file path");
            auto path = base_dir / p.text;
            if (!std::filesystem::exists(path))
                cur.fail(p, "missing core file '" + path.string() + "'");
            CoreTestInfo core = load_core_file(path);
            if (!names.insert(core.name).second)
                cur.fail(p, "duplicate core name '" + core.name + "'");
            soc.cores.push_back(std::move(core));
            cur.expect(";");
        } else if (st.text == "memory") {
            MemoryConfig m;
            const Token& n = cur.expect_word("memory name");
            m.name = n.text;
            if (!mem_names.insert(m.name).second)
                cur.fail(n, "duplicate memory name '" + m.name + "'");
            while (!cur.accept(";")) {
                const Token& k = cur.expect_word("memory attribute");
                cur.expect("=");
                const Token& v = cur.expect_word("value");
                if (k.text == "words") m.words = detail::parse_count(v, cur);
                else if (k.text == "width") m.width = detail::parse_count(v, cur);
                else if (k.text == "ports" && (v.text == "single" || v.text == "two"))
                    m.ports = v.text == "single" ? MemoryPorts::single_port : MemoryPorts::two_port;
                else cur.fail(k, "bad memory attribute '" + k.text + "=" + v.text + "'");
            }
            if (m.words < 2 || m.width < 1)
                cur.fail(n, "memory '" + m.name + "' needs words >= 2 and width >= 1");
            soc.memories.push_back(std::move(m));
        } else {
            cur.fail(st, "unknown manifest statement '" + st.text + "'");
        }
    }

    if (soc.cores.empty())
        soc.warnings.push_back("manifest lists no cores");
    for (const auto& c : soc.cores) {
        std::size_t need = minimum_pin_need(c);
        if (need > soc.pin_budget)
            soc.notes.push_back("infeasible: core '" + c.name + "' needs at least " + std::to_string(need) +
                                " test pins (" + std::to_string(c.control_pins.size()) +
                                " control), pin budget is " + std::to_string(soc.pin_budget));
    }
    return soc;
}

SocDescription load_soc_manifest(const std::filesystem::path& path)
{
    try {
        return parse_soc_manifest(read_text_file(path), path.parent_path());
    } catch (const ParseError& e) {
        throw Error(path.string() + ":" + e.what());
    }
}

} // namespace stk
