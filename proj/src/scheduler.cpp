// SPDX-License-Identifier: Apache-2.0
#include "stk/scheduler.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <numeric>
#include <set>
#include <sstream>

namespace stk {

std::string_view to_string(EntityKind k)
{
    switch (k) {
    case EntityKind::scan: return "scan";
    case EntityKind::functional: return "func";
    case EntityKind::bist: return "bist";
    }
    return "?";
}

std::string_view to_string(ScheduleMode m)
{
    switch (m) {
    case ScheduleMode::session_based: return "session_based";
    case ScheduleMode::serial: return "serial";
    case ScheduleMode::non_session: return "non_session";
    }
    return "?";
}

Cycles TestEntity::cycles_at(std::size_t width) const
{
    const WidthPoint* best = nullptr;
    for (const auto& pt : time_function)
        if (pt.width <= width)
            best = &pt;
    if (!best)
        throw Error("entity '" + id + "' has no test time at width " + std::to_string(width));
    return best->cycles;
}

const Assignment* TestSchedule::find(const std::string& entity_id) const
{
    for (const auto& s : sessions)
        for (const auto& a : s.assignments)
            if (a.entity.id == entity_id)
                return &a;
    return nullptr;
}

// ---------------------------------------------------------------------------
// pins

std::string chip_control_pin(const std::string& core, const ControlPin& pin, const SharingPolicy& sharing)
{
    if (pin.shareable && pin.kind == PinKind::scan_enable && sharing.share_se)
        return "se";
    if (pin.shareable && pin.kind == PinKind::test_enable && sharing.share_te)
        return "te";
    return core + "_" + pin.name;
}

Constraints default_constraints(const SocDescription& soc)
{
    Constraints c;
    c.pin_budget = soc.pin_budget;
    c.power_cap = soc.power_cap;
    return c;
}

std::string tam_in_pin(std::size_t wire) { return "tam_in" + std::to_string(wire); }
std::string tam_out_pin(std::size_t wire) { return "tam_out" + std::to_string(wire); }
std::string fio_in_pin(std::size_t i) { return "fio_in" + std::to_string(i); }
std::string fio_out_pin(std::size_t i) { return "fio_out" + std::to_string(i); }

TestIoBudget io_accounting(const std::vector<const TestEntity*>& entities, const SharingPolicy& sharing,
                           std::size_t total_pins, std::size_t controller_pins)
{
    TestIoBudget b;
    b.total_pins = total_pins;
    b.controller_pins = controller_pins;
    std::set<std::string> seen;
    for (const TestEntity* e : entities) {
        for (const auto& pin : e->control_pins) {
            if (!seen.insert(chip_control_pin(e->core, pin, sharing)).second)
                continue;
            switch (pin.kind) {
            case PinKind::clock: ++b.clock_pins; break;
            case PinKind::reset: ++b.reset_pins; break;
            case PinKind::scan_enable: ++b.scan_enable_pins; break;
            case PinKind::test_enable: ++b.test_enable_pins; break;
            }
        }
    }
    b.control_pins_used = b.clock_pins + b.reset_pins + b.scan_enable_pins + b.test_enable_pins;
    b.tam_pins_available = static_cast<long long>(total_pins) - static_cast<long long>(b.control_pins_used) -
                           static_cast<long long>(controller_pins);
    return b;
}

TestIoBudget io_accounting(const std::vector<TestEntity>& entities, const SharingPolicy& sharing,
                           std::size_t total_pins, std::size_t controller_pins)
{
    std::vector<const TestEntity*> ptrs;
    for (const auto& e : entities)
        ptrs.push_back(&e);
    return io_accounting(ptrs, sharing, total_pins, controller_pins);
}

// ---------------------------------------------------------------------------
// entities

namespace {

void add_se_resource(const CoreTestInfo& core, const SharingPolicy& sharing, bool holds_se_high,
                     std::vector<Resource>& out)
{
    if (!sharing.share_se)
        return;
    bool pooled = std::any_of(core.control_pins.begin(), core.control_pins.end(), [](const ControlPin& p) {
        return p.kind == PinKind::scan_enable && p.shareable;
    });
    if (pooled)
        out.push_back({"se", holds_se_high ? ResourceMode::shared : ResourceMode::exclusive});
}

std::size_t own_tam_wire_limit(const CoreTestInfo& core, const Constraints& c)
{
    long long pins = static_cast<long long>(c.pin_budget) - static_cast<long long>(core.control_pins.size()) -
                     static_cast<long long>(c.controller_pins);
    return pins > 1 ? static_cast<std::size_t>(pins / 2) : 0;
}

// Functional vectors shifted through input/output boundary cells at width w.
std::vector<WidthPoint> wrapper_functional_points(const CoreTestInfo& core, std::size_t p, std::size_t w_max)
{
    std::vector<WidthPoint> out;
    for (std::size_t w = 1; w <= w_max; ++w) {
        std::size_t shift = std::max((core.pi + w - 1) / w, (core.po + w - 1) / w);
        Cycles cyc = static_cast<Cycles>(p) * std::max<std::size_t>(shift, 1);
        if (out.empty() || cyc < out.back().cycles)
            out.push_back({w, cyc});
    }
    return out;
}

} // namespace

std::vector<TestEntity> build_test_entities(const SocDescription& soc, const Constraints& c)
{
    std::vector<TestEntity> out;
    for (const auto& core : soc.cores) {
        std::size_t w_limit = own_tam_wire_limit(core, c);
        const PatternSet* scan = core.scan_patterns();
        if (scan && scan->count > 0 && !core.scan_chains.empty()) {
            TestEntity e;
            e.id = core.name + ".scan";
            e.core = core.name;
            e.kind = EntityKind::scan;
            e.capture = scan->capture;
            std::size_t lo = minimum_tam_width(core, c.wrapper);
            e.time_function = pareto_tam_widths(core, std::max(lo, w_limit), c.wrapper);
            e.min_width = e.time_function.front().width;
            e.max_width = e.time_function.back().width;
            e.control_pins = core.control_pins;
            e.power = core.test_power;
            e.resources.push_back({"core:" + core.name, ResourceMode::exclusive});
            if (core.has_shared_pins())
                e.resources.push_back({"fio", ResourceMode::exclusive});
            add_se_resource(core, c.sharing, scan->capture == CaptureMode::pulse_clock, e.resources);
            out.push_back(std::move(e));
        }
        const PatternSet* func = core.functional_patterns();
        if (func && func->count > 0) {
            TestEntity e;
            e.id = core.name + ".func";
            e.core = core.name;
            e.kind = EntityKind::functional;
            e.control_pins = core.control_pins;
            e.power = core.test_power;
            e.functional_pins = core.pi + core.po;
            e.resources.push_back({"core:" + core.name, ResourceMode::exclusive});
            if (c.functional_via_wrapper) {
                e.time_function = wrapper_functional_points(core, func->count, std::max<std::size_t>(1, w_limit));
                e.min_width = e.time_function.front().width;
                e.max_width = e.time_function.back().width;
            } else {
                e.time_function = {{0, func->count}};
                e.resources.push_back({"fio", ResourceMode::exclusive});
            }
            add_se_resource(core, c.sharing, false, e.resources);
            out.push_back(std::move(e));
        }
    }
    if (c.bist_entity)
        out.push_back(*c.bist_entity);
    return out;
}

// ---------------------------------------------------------------------------
// session planning

bool resources_compatible(const std::vector<const TestEntity*>& members, std::string* why)
{
    std::set<std::string> ids;
    for (const TestEntity* e : members)
        if (!ids.insert(e->id).second) {
            if (why)
                *why = "entity '" + e->id + "' appears twice";
            return false;
        }
    for (std::size_t i = 0; i < members.size(); ++i)
        for (std::size_t j = i + 1; j < members.size(); ++j)
            for (const auto& a : members[i]->resources)
                for (const auto& b : members[j]->resources)
                    if (a.name == b.name &&
                        (a.mode == ResourceMode::exclusive || b.mode == ResourceMode::exclusive)) {
                        if (why)
                            *why = "'" + members[i]->id + "' and '" + members[j]->id + "' both need " + a.name;
                        return false;
                    }
    return true;
}

SessionPlan plan_session(const std::vector<const TestEntity*>& members, const Constraints& c)
{
    SessionPlan plan;
    if (!resources_compatible(members, &plan.reason))
        return plan;
    for (const TestEntity* e : members)
        plan.power += e->power;
    if (plan.power > c.power_cap) {
        plan.reason = "power " + std::to_string(plan.power) + " exceeds cap";
        return plan;
    }
    plan.io = io_accounting(members, c.sharing, c.pin_budget, c.controller_pins);
    long long pins_left = plan.io.tam_pins_available;
    // index into each entity's Pareto list
    std::vector<std::size_t> step(members.size(), 0);
    for (const TestEntity* e : members)
        pins_left -= 2 * static_cast<long long>(e->time_function.front().width);
    if (pins_left < 0) {
        plan.reason = "not enough pins: " + std::to_string(plan.io.control_pins_used) + " control, " +
                      std::to_string(c.controller_pins) + " controller, budget " + std::to_string(c.pin_budget);
        return plan;
    }
    // Widen the bottleneck entity one Pareto step at a time.
    while (!members.empty()) {
        std::size_t worst = 0;
        for (std::size_t i = 1; i < members.size(); ++i)
            if (members[i]->time_function[step[i]].cycles > members[worst]->time_function[step[worst]].cycles)
                worst = i;
        const auto& tf = members[worst]->time_function;
        if (step[worst] + 1 >= tf.size())
            break;
        long long extra = 2 * static_cast<long long>(tf[step[worst] + 1].width - tf[step[worst]].width);
        if (extra > pins_left)
            break;
        pins_left -= extra;
        ++step[worst];
    }
    plan.feasible = true;
    for (std::size_t i = 0; i < members.size(); ++i) {
        const auto& pt = members[i]->time_function[step[i]];
        plan.widths.push_back(pt.width);
        plan.time = std::max(plan.time, pt.cycles);
    }
    return plan;
}

TestSchedule make_schedule(const std::vector<std::vector<const TestEntity*>>& sessions,
                           const std::vector<std::vector<std::size_t>>& widths, const Constraints& c,
                           ScheduleMode mode)
{
    TestSchedule s;
    s.mode = mode;
    s.constraints = c;
    for (std::size_t k = 0; k < sessions.size(); ++k) {
        Session sess;
        sess.index = k;
        std::size_t wire = 0;
        std::size_t tam_pins = 0;
        for (std::size_t i = 0; i < sessions[k].size(); ++i) {
            const TestEntity& e = *sessions[k][i];
            Assignment a;
            a.entity = e;
            a.width = widths[k][i];
            a.cycles = e.cycles_at(a.width);
            for (std::size_t j = 0; j < a.width; ++j) {
                a.wires.push_back(wire + j);
                a.pin_map["wsi" + std::to_string(j)] = tam_in_pin(wire + j);
                a.pin_map["wso" + std::to_string(j)] = tam_out_pin(wire + j);
            }
            wire += a.width;
            tam_pins += 2 * a.width;
            for (const auto& pin : e.control_pins)
                a.pin_map[pin.name] = chip_control_pin(e.core, pin, c.sharing);
            sess.session_time = std::max(sess.session_time, a.cycles);
            sess.power_used += e.power;
            sess.assignments.push_back(std::move(a));
        }
        auto io = io_accounting(sessions[k], c.sharing, c.pin_budget, c.controller_pins);
        sess.io_used = io.control_pins_used + c.controller_pins + tam_pins;
        s.total_cycles += sess.session_time;
        s.sessions.push_back(std::move(sess));
    }
    return s;
}

// ---------------------------------------------------------------------------
// heuristic

namespace {

using Group = std::vector<const TestEntity*>;

struct Candidate {
    std::vector<Group> sessions;
    std::vector<SessionPlan> plans;

    Cycles total() const
    {
        Cycles t = 0;
        for (const auto& p : plans)
            t += p.time;
        return t;
    }
};

[[noreturn]] void throw_infeasible(const TestEntity& e, const SessionPlan& p)
{
    throw Error("infeasible instance: entity '" + e.id + "' cannot be scheduled alone (" + p.reason + ")");
}

TestSchedule to_schedule(const Candidate& cand, const Constraints& c, ScheduleMode mode)
{
    std::vector<std::vector<std::size_t>> widths;
    for (const auto& p : cand.plans)
        widths.push_back(p.widths);
    return make_schedule(cand.sessions, widths, c, mode);
}

Candidate serial_candidate(const std::vector<TestEntity>& entities, const Constraints& c)
{
    Candidate cand;
    for (const auto& e : entities) {
        Group g{&e};
        auto plan = plan_session(g, c);
        if (!plan.feasible)
            throw_infeasible(e, plan);
        cand.sessions.push_back(g);
        cand.plans.push_back(plan);
    }
    return cand;
}

// One move or swap that strictly lowers the total; false when none exists.
bool improve_once(Candidate& cand, const Constraints& c)
{
    Cycles base = cand.total();
    std::size_t n = cand.sessions.size();
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            if (i == j)
                continue;
            for (std::size_t a = 0; a < cand.sessions[i].size(); ++a) {
                // move a: i -> j
                Group gi = cand.sessions[i], gj = cand.sessions[j];
                const TestEntity* ea = gi[a];
                gi.erase(gi.begin() + static_cast<std::ptrdiff_t>(a));
                gj.push_back(ea);
                SessionPlan pj = plan_session(gj, c);
                if (pj.feasible) {
                    SessionPlan pi = gi.empty() ? SessionPlan{true, {}, {}, 0, {}, 0.0} : plan_session(gi, c);
                    if (pi.feasible && base - cand.plans[i].time - cand.plans[j].time + pi.time + pj.time < base) {
                        cand.sessions[i] = gi;
                        cand.plans[i] = pi;
                        cand.sessions[j] = gj;
                        cand.plans[j] = pj;
                        if (gi.empty()) {
                            cand.sessions.erase(cand.sessions.begin() + static_cast<std::ptrdiff_t>(i));
                            cand.plans.erase(cand.plans.begin() + static_cast<std::ptrdiff_t>(i));
                        }
                        return true;
                    }
                }
                if (j < i)
                    continue;
                for (std::size_t b = 0; b < cand.sessions[j].size(); ++b) {
                    Group si = cand.sessions[i], sj = cand.sessions[j];
                    std::swap(si[a], sj[b]);
                    SessionPlan pi = plan_session(si, c);
                    if (!pi.feasible)
                        continue;
                    SessionPlan pj2 = plan_session(sj, c);
                    if (!pj2.feasible)
                        continue;
                    if (base - cand.plans[i].time - cand.plans[j].time + pi.time + pj2.time < base) {
                        cand.sessions[i] = si;
                        cand.plans[i] = pi;
                        cand.sessions[j] = sj;
                        cand.plans[j] = pj2;
                        return true;
                    }
                }
            }
        }
    }
    return false;
}

} // namespace

TestSchedule schedule_sessions(const std::vector<TestEntity>& entities, const Constraints& c)
{
    std::vector<const TestEntity*> order;
    for (const auto& e : entities)
        order.push_back(&e);

    std::map<const TestEntity*, Cycles> alone;
    for (const TestEntity* e : order) {
        auto plan = plan_session({e}, c);
        if (!plan.feasible)
            throw_infeasible(*e, plan);
        alone[e] = plan.time;
    }
    std::stable_sort(order.begin(), order.end(), [&](const TestEntity* a, const TestEntity* b) {
        if (alone[a] != alone[b])
            return alone[a] > alone[b];
        return a->id < b->id;
    });

    Candidate cand;
    std::vector<bool> placed(order.size(), false);
    for (std::size_t i = 0; i < order.size(); ++i) {
        if (placed[i])
            continue;
        Group g{order[i]};
        placed[i] = true;
        SessionPlan plan = plan_session(g, c);
        for (std::size_t j = i + 1; j < order.size(); ++j) {
            if (placed[j])
                continue;
            Group trial = g;
            trial.push_back(order[j]);
            SessionPlan tp = plan_session(trial, c);
            // Join only if it costs less than running the entity on its own.
            if (tp.feasible && tp.time < plan.time + alone[order[j]]) {
                g = std::move(trial);
                plan = std::move(tp);
                placed[j] = true;
            }
        }
        cand.sessions.push_back(std::move(g));
        cand.plans.push_back(std::move(plan));
    }

    for (std::size_t guard = 0; guard < 1000 && improve_once(cand, c); ++guard) {
    }

    Candidate serial = serial_candidate(entities, c);
    if (serial.total() < cand.total())
        return to_schedule(serial, c, ScheduleMode::session_based);
    return to_schedule(cand, c, ScheduleMode::session_based);
}

TestSchedule schedule_sessions(const SocDescription& soc, const Constraints& c)
{
    return schedule_sessions(build_test_entities(soc, c), c);
}

TestSchedule schedule_serial(const std::vector<TestEntity>& entities, const Constraints& c)
{
    return to_schedule(serial_candidate(entities, c), c, ScheduleMode::serial);
}

TestSchedule schedule_serial(const SocDescription& soc, const Constraints& c)
{
    return schedule_serial(build_test_entities(soc, c), c);
}

// ---------------------------------------------------------------------------
// exhaustive oracle

namespace {

// Smallest session time reachable for a block: try candidate times in
// ascending order, give each member the narrowest width meeting it, check
// the pins.
std::optional<std::pair<Cycles, std::vector<std::size_t>>> best_block(const Group& block, const Constraints& c)
{
    if (!resources_compatible(block))
        return std::nullopt;
    double power = 0;
    for (const TestEntity* e : block)
        power += e->power;
    if (power > c.power_cap)
        return std::nullopt;
    auto io = io_accounting(block, c.sharing, c.pin_budget, c.controller_pins);
    if (!io.feasible())
        return std::nullopt;

    std::vector<Cycles> targets;
    for (const TestEntity* e : block)
        for (const auto& pt : e->time_function)
            targets.push_back(pt.cycles);
    std::sort(targets.begin(), targets.end());
    targets.erase(std::unique(targets.begin(), targets.end()), targets.end());

    for (Cycles t : targets) {
        std::vector<std::size_t> widths;
        long long pins = 0;
        bool ok = true;
        for (const TestEntity* e : block) {
            const WidthPoint* pick = nullptr;
            for (const auto& pt : e->time_function)
                if (pt.cycles <= t) {
                    pick = &pt;
                    break;
                }
            if (!pick) {
                ok = false;
                break;
            }
            widths.push_back(pick->width);
            pins += 2 * static_cast<long long>(pick->width);
        }
        if (ok && pins <= io.tam_pins_available)
            return std::make_pair(t, widths);
    }
    return std::nullopt;
}

} // namespace

std::optional<TestSchedule> exhaustive_schedule(const std::vector<TestEntity>& entities, const Constraints& c,
                                                const PartitionFilter& filter)
{
    std::size_t n = entities.size();
    if (n > exhaustive_entity_limit)
        throw Error("instance too large for exhaustive search: " + std::to_string(n) + " entities (limit " +
                    std::to_string(exhaustive_entity_limit) + ")");
    if (n == 0) {
        TestSchedule empty;
        empty.constraints = c;
        return empty;
    }

    // Restricted growth strings enumerate every set partition once.
    std::vector<std::size_t> label(n, 0);
    std::optional<Cycles> best_total;
    std::vector<Group> best_groups;
    std::vector<std::vector<std::size_t>> best_widths;
    for (;;) {
        std::size_t blocks = *std::max_element(label.begin(), label.end()) + 1;
        std::vector<Group> groups(blocks);
        for (std::size_t i = 0; i < n; ++i)
            groups[label[i]].push_back(&entities[i]);
        std::vector<std::size_t> sizes;
        for (const auto& g : groups)
            sizes.push_back(g.size());
        if (!filter || filter(sizes)) {
            Cycles total = 0;
            std::vector<std::vector<std::size_t>> widths;
            bool ok = true;
            for (const auto& g : groups) {
                auto b = best_block(g, c);
                if (!b) {
                    ok = false;
                    break;
                }
                total += b->first;
                widths.push_back(b->second);
            }
            if (ok && (!best_total || total < *best_total)) {
                best_total = total;
                best_groups = groups;
                best_widths = widths;
            }
        }
        // next restricted growth string
        std::size_t i = n;
        bool advanced = false;
        while (i-- > 1) {
            std::size_t max_prefix = *std::max_element(label.begin(), label.begin() + static_cast<std::ptrdiff_t>(i));
            if (label[i] <= max_prefix) {
                ++label[i];
                std::fill(label.begin() + static_cast<std::ptrdiff_t>(i) + 1, label.end(), 0);
                advanced = true;
                break;
            }
        }
        if (!advanced)
            break;
    }
    if (!best_total)
        return std::nullopt;
    return make_schedule(best_groups, best_widths, c, ScheduleMode::session_based);
}

TestSchedule exhaustive_schedule(const SocDescription& soc, const Constraints& c)
{
    auto s = exhaustive_schedule(build_test_entities(soc, c), c);
    if (!s)
        throw Error("infeasible instance: no feasible session partition");
    return *s;
}

// ---------------------------------------------------------------------------
// validation and reports

ScheduleReport evaluate_schedule(const TestSchedule& s)
{
    ScheduleReport r;
    const Constraints& c = s.constraints;
    std::set<std::string> seen;
    for (const auto& sess : s.sessions) {
        SessionReport sr;
        sr.index = sess.index;
        std::vector<const TestEntity*> members;
        std::set<std::size_t> wires;
        std::string tag = "session " + std::to_string(sess.index) + ": ";
        for (const auto& a : sess.assignments) {
            members.push_back(&a.entity);
            sr.entities.push_back(a.entity.id);
            if (!seen.insert(a.entity.id).second)
                r.violations.push_back(tag + "entity '" + a.entity.id + "' scheduled more than once");
            if (a.wires.size() != a.width)
                r.violations.push_back(tag + "entity '" + a.entity.id + "' has " + std::to_string(a.wires.size()) +
                                       " wires for width " + std::to_string(a.width));
            for (std::size_t w : a.wires)
                if (!wires.insert(w).second)
                    r.violations.push_back(tag + "TAM wire " + std::to_string(w) + " assigned twice");
            Cycles cyc = 0;
            try {
                cyc = a.entity.cycles_at(a.width);
            } catch (const Error& e) {
                r.violations.push_back(tag + e.what());
            }
            if (a.width < a.entity.min_width || a.width > std::max(a.entity.max_width, a.entity.min_width))
                r.violations.push_back(tag + "entity '" + a.entity.id + "' width " + std::to_string(a.width) +
                                       " outside its range");
            if (cyc != a.cycles)
                r.violations.push_back(tag + "entity '" + a.entity.id + "' records " + std::to_string(a.cycles) +
                                       " cycles, model gives " + std::to_string(cyc));
            sr.session_time = std::max(sr.session_time, cyc);
            sr.power_used += a.entity.power;
            sr.tam_pins += 2 * a.width;
        }
        std::string why;
        if (!resources_compatible(members, &why))
            r.violations.push_back(tag + why);
        auto io = io_accounting(members, c.sharing, c.pin_budget, c.controller_pins);
        sr.control_pins = io.control_pins_used;
        sr.io_used = io.control_pins_used + c.controller_pins + sr.tam_pins;
        if (sr.io_used > c.pin_budget)
            r.violations.push_back(tag + "uses " + std::to_string(sr.io_used) + " pins, budget " +
                                   std::to_string(c.pin_budget));
        if (sr.power_used > c.power_cap)
            r.violations.push_back(tag + "power over cap");
        if (sr.session_time != sess.session_time)
            r.violations.push_back(tag + "recorded time " + std::to_string(sess.session_time) + " != recomputed " +
                                   std::to_string(sr.session_time));
        r.total_cycles += sr.session_time;
        r.sessions.push_back(std::move(sr));
    }
    if (r.total_cycles != s.total_cycles)
        r.violations.push_back("recorded total " + std::to_string(s.total_cycles) + " != recomputed " +
                               std::to_string(r.total_cycles));
    return r;
}

std::string format_schedule(const TestSchedule& s)
{
    std::ostringstream os;
    os << "schedule mode=" << to_string(s.mode) << " sessions=" << s.sessions.size() << " total=" << s.total_cycles
       << " pin_budget=" << s.constraints.pin_budget << "\n";
    for (const auto& sess : s.sessions) {
        os << "session " << sess.index << " time=" << sess.session_time << " io=" << sess.io_used
           << " power=" << sess.power_used << "\n";
        for (const auto& a : sess.assignments) {
            os << "  entity " << a.entity.id << " kind=" << to_string(a.entity.kind) << " width=" << a.width
               << " wires=";
            for (std::size_t i = 0; i < a.wires.size(); ++i)
                os << (i ? "," : "") << a.wires[i];
            if (a.wires.empty())
                os << "-";
            os << " cycles=" << a.cycles << "\n";
            for (const auto& [from, to] : a.pin_map)
                os << "    pin " << from << " -> " << to << "\n";
        }
    }
    os << "total " << s.total_cycles << "\n";
    return os.str();
}

std::string format_gantt(const TestSchedule& s, std::size_t columns)
{
    std::ostringstream os;
    Cycles total = std::max<Cycles>(s.total_cycles, 1);
    std::size_t name_w = 8;
    for (const auto& sess : s.sessions)
        for (const auto& a : sess.assignments)
            name_w = std::max(name_w, a.entity.id.size());
    Cycles start = 0;
    for (const auto& sess : s.sessions) {
        auto col = [&](Cycles t) { return static_cast<std::size_t>((t * columns) / total); };
        os << "session " << sess.index << "  [" << start << ", " << start + sess.session_time << ")\n";
        for (const auto& a : sess.assignments) {
            std::size_t from = col(start), to = std::max(col(start + a.cycles), from + 1);
            std::string bar(columns, ' ');
            for (std::size_t i = from; i < std::min(to, columns); ++i)
                bar[i] = '#';
            os << "  " << std::left << std::setw(static_cast<int>(name_w)) << a.entity.id << std::right << " |"
               << bar << "| " << a.cycles << "\n";
        }
        start += sess.session_time;
    }
    os << "total " << s.total_cycles << " cycles\n";
    return os.str();
}

} // namespace stk
