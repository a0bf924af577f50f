// SPDX-License-Identifier: Apache-2.0
#include "stk/flow.hpp"

#include <algorithm>
#include <fstream>
#include <iomanip>
#include <set>
#include <sstream>

#include "stk/core_model.hpp"
#include "stk/dft.hpp"
#include "stk/march.hpp"
#include "stk/netlist.hpp"
#include "stk/patterns.hpp"
#include "stk/wrapper.hpp"

namespace fs = std::filesystem;

namespace stk {

std::string_view to_string(FlowStage s)
{
    switch (s) {
    case FlowStage::parse: return "parse";
    case FlowStage::schedule: return "schedule";
    case FlowStage::insert: return "insert";
    case FlowStage::translate: return "translate";
    case FlowStage::bist: return "bist";
    case FlowStage::all: return "all";
    }
    return "?";
}

std::optional<FlowStage> parse_flow_stage(std::string_view s)
{
    for (auto st : {FlowStage::parse, FlowStage::schedule, FlowStage::insert, FlowStage::translate, FlowStage::bist,
                    FlowStage::all})
        if (to_string(st) == s)
            return st;
    return std::nullopt;
}

namespace {

std::string mode_label(const TestSchedule& s)
{
    return s.mode == ScheduleMode::serial ? "serial" : s.mode == ScheduleMode::non_session ? "non-session"
                                                                                           : "session-based";
}

std::multiset<std::string> entity_ids(const TestSchedule& s)
{
    std::multiset<std::string> ids;
    for (const auto& sess : s.sessions)
        for (const auto& a : sess.assignments)
            ids.insert(a.entity.id);
    return ids;
}

// Stage error carrying the stage name.
struct StageError : Error {
    StageError(std::string st, const std::string& what) : Error(what), stage(std::move(st)) {}
    std::string stage;
};

class Flow {
public:
    explicit Flow(const FlowConfig& c) : cfg_(c) {}

    FlowResult run();

private:
    bool wants(FlowStage s) const
    {
        if (cfg_.stage == FlowStage::all || s == FlowStage::parse)
            return true;
        if (cfg_.stage == FlowStage::bist || s == FlowStage::bist)
            return cfg_.stage == s;
        return static_cast<int>(s) <= static_cast<int>(cfg_.stage);
    }

    template <typename F>
    void stage(const std::string& name, F&& f)
    {
        try {
            f();
        } catch (const StageError&) {
            throw;
        } catch (const std::exception& e) {
            throw StageError(name, e.what());
        }
    }

    void write(const fs::path& rel, const std::string& text)
    {
        fs::path p = cfg_.out / rel;
        fs::create_directories(p.parent_path());
        std::ofstream os(p, std::ios::binary);
        os.write(text.data(), static_cast<std::streamsize>(text.size()));
        if (!os)
            throw Error("cannot write " + p.string());
        res_.written.push_back(rel);
    }

    void write_stream(const fs::path& rel, const CycleStream& s)
    {
        fs::path p = cfg_.out / rel;
        fs::create_directories(p.parent_path());
        std::ofstream os(p, std::ios::binary);
        if (!os)
            throw Error("cannot write " + p.string());
        emit_vectors(s, os);
        os.close();
        if (!os)
            throw Error("cannot write " + p.string());
        res_.written.push_back(rel);
    }

    void violation(const std::string& stage, const std::string& v)
    {
        res_.violations.push_back(stage + ": " + v);
    }

    void do_parse();
    void do_schedule();
    void do_insert();
    void do_translate();
    void do_bist();
    void do_area();
    void do_summary();

    Constraints constraints() const
    {
        Constraints c = default_constraints(soc_);
        if (cfg_.pins)
            c.pin_budget = *cfg_.pins;
        if (cfg_.power)
            c.power_cap = *cfg_.power;
        c.sharing.share_se = cfg_.share_se;
        c.wrapper.include_wbr_in_chains = cfg_.wbr_in_chains;
        c.wrapper.allow_domain_merging = cfg_.allow_domain_merging;
        return c;
    }

    MarchAlgorithm algorithm() const
    {
        if (!cfg_.march)
            return march_c_minus();
        return parse_march(read_text_file(*cfg_.march), cfg_.march->stem().string());
    }

    const FlowConfig& cfg_;
    FlowResult res_;
    SocDescription soc_;
    std::optional<TestSchedule> sched_, serial_;
    std::optional<GeneratedTestFabric> fabric_;
    std::optional<BistFabric> bist_;
    std::optional<MarchAlgorithm> march_;
    std::optional<AreaReport> area_;
    std::vector<CoverageReport> coverage_;
    std::vector<std::string> summary_;
};

void Flow::do_parse()
{
    stage("parse", [&] { soc_ = load_soc_manifest(cfg_.manifest); });
    std::ostringstream os;
    os << "soc " << soc_.name << "\n";
    os << "cores " << soc_.cores.size() << "  memories " << soc_.memories.size() << "  pin_budget " << soc_.pin_budget
       << "  power_cap " << soc_.power_cap << "  chip_gates " << soc_.chip_gates << "\n\n";
    if (!soc_.cores.empty()) {
        os << std::left << std::setw(10) << "core" << std::right << std::setw(6) << "kind" << std::setw(6) << "TI"
           << std::setw(6) << "TO" << std::setw(6) << "PI" << std::setw(6) << "PO" << std::setw(8) << "chains"
           << std::setw(8) << "flops" << std::setw(8) << "scan" << std::setw(10) << "func" << "  status\n";
        for (const auto& c : soc_.cores) {
            std::size_t flops = 0;
            for (const auto& ch : c.scan_chains)
                flops += ch.length;
            auto scan = c.scan_patterns();
            auto func = c.functional_patterns();
            auto v = validate_core(c);
            os << std::left << std::setw(10) << c.name << std::right << std::setw(6)
               << (c.softness == Softness::soft ? "soft" : "hard") << std::setw(6) << c.ti << std::setw(6) << c.to
               << std::setw(6) << c.pi << std::setw(6) << c.po << std::setw(8) << c.scan_chains.size() << std::setw(8)
               << flops << std::setw(8) << (scan ? scan->count : 0) << std::setw(10) << (func ? func->count : 0)
               << "  " << (v.ok() ? "ok" : "INVALID") << "\n";
            for (const auto& x : v.violations) {
                os << "  violation: " << x << "\n";
                violation("parse", c.name + ": " + x);
            }
            for (const auto& n : v.notes)
                os << "  note: " << n << "\n";
        }
    }
    if (!soc_.memories.empty()) {
        os << "\nmemories\n";
        for (const auto& m : soc_.memories)
            os << "  " << std::left << std::setw(14) << m.name << std::right << std::setw(6) << m.words << " x "
               << std::setw(3) << m.width << "  " << to_string(m.ports) << "\n";
    }
    for (const auto& w : soc_.warnings)
        os << "warning: " << w << "\n";
    for (const auto& n : soc_.notes)
        os << "note: " << n << "\n";
    write("validation.txt", os.str());
    summary_.push_back("soc " + soc_.name + ": " + std::to_string(soc_.cores.size()) + " cores, " +
                       std::to_string(soc_.memories.size()) + " memories");
}

void Flow::do_schedule()
{
    Constraints c = constraints();
    stage("schedule", [&] {
        if (cfg_.schedule_bist && !soc_.memories.empty()) {
            march_ = algorithm();
            bist_ = generate_bist(soc_.memories, *march_);
            c.bist_entity = bist_test_entity(*bist_);
        }
        std::ostringstream wt, wj;
        for (const auto& core : soc_.cores) {
            if (core.scan_chains.empty())
                continue;
            auto rows = wrapper_table(core, cfg_.table_width, c.wrapper);
            wt << format_wrapper_table(core, rows) << "\n";
            wj << wrapper_records(core, rows);
        }
        write("wrappers.txt", wt.str());
        write("wrappers.jsonl", wj.str());

        sched_ = schedule_sessions(soc_, c);
        serial_ = schedule_serial(soc_, c);
    });
    auto rep = evaluate_schedule(*sched_);
    for (const auto& v : rep.violations)
        violation("schedule", v);
    auto io = io_accounting(build_test_entities(soc_, c), c.sharing, c.pin_budget);
    std::ostringstream os;
    os << format_schedule(*sched_) << "\n";
    os << "control IOs " << io.control_pins_used << " (clock " << io.clock_pins << ", reset " << io.reset_pins
       << ", SE " << io.scan_enable_pins << ", TE " << io.test_enable_pins << "), controller " << io.controller_pins
       << ", TAM pins available " << io.tam_pins_available << "\n";
    write("schedule.txt", os.str());
    write("gantt.txt", format_gantt(*sched_));
    write("compare.txt", report_compare(*sched_, *serial_));
    summary_.push_back("sessions " + std::to_string(sched_->sessions.size()) + ", session-based total " +
                       std::to_string(sched_->total_cycles) + ", serial total " +
                       std::to_string(serial_->total_cycles));
}

void Flow::do_insert()
{
    stage("insert", [&] {
        fabric_ = generate_test_fabric(soc_, *sched_);
        if (soc_.netlist_path.empty()) {
            summary_.push_back("netlist: none in manifest, insertion skipped");
            return;
        }
        auto original = parse_netlist(read_text_file(soc_.netlist_path));
        auto inserted = insert_dft(original, *fabric_);
        write("netlist/soc_dft.net", write_netlist(inserted));
        auto check = validate_netlist(inserted);
        auto trans = check_transparency(original, inserted, *fabric_);
        std::ostringstream os;
        os << "structural checks: " << (check.ok() ? "pass" : "FAIL") << "\n";
        for (const auto& v : check.violations) {
            os << "  " << v << "\n";
            violation("insert", v);
        }
        os << "transparent-mode connectivity: " << (trans.ok() ? "isomorphic" : "DIFFERS") << "\n";
        for (const auto& v : trans.violations) {
            os << "  " << v << "\n";
            violation("insert", v);
        }
        os << "wrappers " << fabric_->wrappers.size() << ", boundary cells " << fabric_->wbr_cells() << "\n";
        write("netlist/checks.txt", os.str());
        summary_.push_back(std::string("inserted netlist: structural ") + (check.ok() ? "pass" : "FAIL") +
                           ", transparency " + (trans.ok() ? "pass" : "FAIL"));
    });
}

void Flow::do_area()
{
    stage("area", [&] {
        if (soc_.chip_gates == 0) {
            summary_.push_back("area: no chip gate count in manifest");
            return;
        }
        area_ = area_report(*fabric_, soc_.chip_gates);
        write("area.txt", format_area_report(*area_));
        std::ostringstream os;
        os << "area: test logic " << area_->test_area << " gates, overhead " << std::fixed << std::setprecision(2)
           << 100.0 * area_->overhead_fraction << "%";
        summary_.push_back(os.str());
    });
}

void Flow::do_translate()
{
    stage("translate", [&] {
        auto map = make_translation_map(*fabric_, cfg_.seed);
        const std::size_t n = sched_->sessions.size();
        Cycles total = 0;
        // every session's controller load, in session order
        std::vector<std::string> pins, rows;
        std::string row;
        for (std::size_t k = 0; k < n; ++k) {
            auto st = session_setup_stream(k, n);
            pins = st->pins();
            for (std::uint64_t c = 0; c < st->length(); ++c) {
                st->row(c, row);
                rows.push_back(row);
            }
        }
        write_stream("vectors/setup.vec", TableStream(pins, rows));
        for (std::size_t k = 0; k < n; ++k) {
            const auto& sess = sched_->sessions[k];
            auto st = session_stream(sess, map);
            if (st->length() != sess.session_time)
                violation("translate", "session " + std::to_string(k) + " stream has " +
                                           std::to_string(st->length()) + " cycles, session time " +
                                           std::to_string(sess.session_time));
            write_stream("vectors/session" + std::to_string(k) + ".vec", *st);
            total += st->length();
        }
        summary_.push_back("vectors: " + std::to_string(n) + " sessions, " + std::to_string(total) + " cycles");
    });
}

void Flow::do_bist()
{
    if (soc_.memories.empty()) {
        summary_.push_back("bist: no memories");
        return;
    }
    stage("bist", [&] {
        if (!march_)
            march_ = algorithm();
        if (!bist_)
            bist_ = generate_bist(soc_.memories, *march_);
        write("bist/fabric.net", write_netlist(bist_->netlist));
        auto v = verify_fabric(*bist_, soc_.memories, *march_);
        std::ostringstream vs;
        vs << "algorithm " << serialize_march(*march_) << "\n";
        vs << "controllers " << bist_->count_instances("BIST_CTRL") << ", sequencers "
           << bist_->count_instances("BIST_SEQ") << ", TPGs " << bist_->count_instances("BIST_TPG") << ", cycles "
           << bist_->cycles << "\n";
        for (const auto& m : v.memories)
            vs << "  " << std::left << std::setw(14) << m.memory << std::right << std::setw(8) << m.ops << " ops  "
               << (m.mismatch || !m.message.empty() ? m.message : "trace equal") << "\n";
        for (const auto& x : v.violations)
            vs << "  violation: " << x << "\n";
        write("bist/verify.txt", vs.str());
        if (!v.ok())
            violation("bist", "fabric does not reproduce the march trace");

        // exhaustive coverage where the enumeration fits, plus the small reference memories
        const std::vector<FaultClass> kinds = {FaultClass::saf, FaultClass::tf, FaultClass::cfid};
        std::vector<std::string> skipped;
        for (const auto& mem : soc_.memories) {
            std::vector<FaultClass> fit;
            for (auto k : kinds) {
                if (fault_count(mem, k) <= 4096)
                    fit.push_back(k);
                else
                    skipped.push_back(mem.name + " " + std::string(to_string(k)));
            }
            if (!fit.empty())
                coverage_.push_back(fault_coverage(*march_, mem, fit));
        }
        for (std::size_t w : {4, 8, 16})
            for (std::size_t b : {1, 4})
                coverage_.push_back(fault_coverage(
                    *march_, {"ref_" + std::to_string(w) + "x" + std::to_string(b), w, b, MemoryPorts::single_port},
                    kinds));
        std::string text = format_coverage(coverage_);
        if (!skipped.empty()) {
            text += "\nnot enumerated (more than 4096 faults):\n";
            for (const auto& s : skipped)
                text += "  " + s + "\n";
        }
        write("bist/coverage.txt", text);
        write("bist/coverage.jsonl", coverage_records(coverage_));
        std::size_t det = 0, tot = 0;
        for (const auto& r : coverage_)
            for (const auto& k : r.kinds) {
                det += k.detected;
                tot += k.total;
            }
        std::ostringstream s;
        s << "bist: " << march_->name << ", " << bist_->cycles << " cycles, coverage " << det << "/" << tot
          << " faults, fabric " << (v.ok() ? "verified" : "MISMATCH");
        summary_.push_back(s.str());
    });
}

void Flow::do_summary()
{
    std::ostringstream os;
    os << "stage " << to_string(cfg_.stage) << "\n";
    for (const auto& s : summary_)
        os << s << "\n";
    os << "violations " << res_.violations.size() << "\n";
    for (const auto& v : res_.violations)
        os << "  " << v << "\n";
    write("summary.txt", os.str());
}

FlowResult Flow::run()
{
    fs::create_directories(cfg_.out);
    fs::remove(cfg_.out / "FAILED");
    fs::remove_all(cfg_.out / "vectors");
    try {
        do_parse();
        bool empty = soc_.cores.empty() && soc_.memories.empty();
        if (!empty) {
            if (!soc_.cores.empty() && wants(FlowStage::schedule))
                do_schedule();
            if (!soc_.cores.empty() && wants(FlowStage::insert))
                do_insert();
            if (!soc_.cores.empty() && wants(FlowStage::translate))
                do_translate();
            if (wants(FlowStage::bist))
                do_bist();
            if (fabric_)
                do_area();
            do_summary();
        }
    } catch (const StageError& e) {
        res_.failed_stage = e.stage;
        res_.message = e.what();
    }
    if (!res_.failed_stage.empty() || !res_.violations.empty()) {
        res_.exit_code = 1;
        std::ofstream os(cfg_.out / "FAILED", std::ios::binary);
        if (!res_.failed_stage.empty())
            os << "stage " << res_.failed_stage << ": " << res_.message << "\n";
        for (const auto& v : res_.violations)
            os << v << "\n";
    }
    return res_;
}

} // namespace

FlowResult run_flow(const FlowConfig& config)
{
    Flow f(config);
    return f.run();
}

std::string report_compare(const TestSchedule& a, const TestSchedule& b)
{
    if (entity_ids(a) != entity_ids(b))
        throw Error("report_compare: schedules cover different entities (mismatched SOC)");
    std::string la = mode_label(a), lb = mode_label(b);
    if (la == lb) {
        la += " (a)";
        lb += " (b)";
    }
    std::ostringstream os;
    const int w = 18;
    os << std::left << std::setw(14) << "" << std::right << std::setw(w) << la << std::setw(w) << lb << "\n";
    os << std::left << std::setw(14) << "total cycles" << std::right << std::setw(w) << a.total_cycles << std::setw(w)
       << b.total_cycles << "\n";
    os << std::left << std::setw(14) << "sessions" << std::right << std::setw(w) << a.sessions.size() << std::setw(w)
       << b.sessions.size() << "\n";
    std::size_t n = std::max(a.sessions.size(), b.sessions.size());
    for (std::size_t k = 0; k < n; ++k) {
        auto cell = [&](const TestSchedule& s) {
            return k < s.sessions.size() ? std::to_string(s.sessions[k].session_time) : std::string("-");
        };
        os << std::left << std::setw(14) << ("  session " + std::to_string(k)) << std::right << std::setw(w) << cell(a)
           << std::setw(w) << cell(b) << "\n";
    }
    for (const auto* s : {&a, &b}) {
        os << "\n" << (s == &a ? la : lb) << ":\n";
        for (const auto& sess : s->sessions) {
            os << "  session " << sess.index << ":";
            for (const auto& as : sess.assignments)
                os << " " << as.entity.id << "(w=" << as.width << ")";
            os << "\n";
        }
    }
    long long delta = static_cast<long long>(b.total_cycles) - static_cast<long long>(a.total_cycles);
    os << "\ndelta " << delta << "\n";
    if (delta > 0)
        os << "verdict: " << mode_label(a) << " wins\n";
    else if (delta < 0)
        os << "verdict: " << mode_label(b) << " wins\n";
    else
        os << "verdict: tie\n";
    return os.str();
}

} // namespace stk
