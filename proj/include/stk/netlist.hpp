// SPDX-License-Identifier: Apache-2.0
#pragma once

// Hierarchical structural netlists: modules with single-bit ports, nets and
// instances. Text form (line oriented, whitespace insensitive):
//
//   module <name> (input a, output b, ...);
//     leaf area=<n>;                           // primitive, no body
//     net <name>;
//     inst <module> <name> #(k=v, ...) (.port(net), .other());
//   endmodule
//   top <name>;
//
// `.port()` is an explicit open connection.

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "stk/error.hpp"

namespace stk {

enum class PortDir { input, output, inout };

struct Port {
    std::string name;
    PortDir dir = PortDir::input;

    bool operator==(const Port&) const = default;
};

struct Connection {
    std::string port;
    std::optional<std::string> net;  // nullopt: explicitly open

    bool operator==(const Connection&) const = default;
};

struct Instance {
    std::string module;
    std::string name;
    std::vector<std::pair<std::string, std::string>> params;
    std::vector<Connection> connections;

    bool operator==(const Instance&) const = default;

    const std::string* param(std::string_view key) const;
    const Connection* connection(std::string_view port) const;
};

struct Module {
    std::string name;
    std::vector<Port> ports;
    std::vector<std::string> nets;
    std::vector<Instance> instances;
    bool leaf = false;
    std::uint64_t area = 0;

    bool operator==(const Module&) const = default;

    const Port* port(std::string_view n) const;
    const Instance* instance(std::string_view n) const;
    Instance* instance(std::string_view n);
    bool has_net(std::string_view n) const;
};

struct Netlist {
    std::vector<Module> modules;
    std::string top;

    bool operator==(const Netlist&) const = default;

    const Module* find(std::string_view name) const;
    Module* find(std::string_view name);
    const Module& top_module() const;
    Module& top_module();
};

Netlist parse_netlist(std::string_view text);
std::string write_netlist(const Netlist& n);
std::string write_module(const Module& m);

struct NetlistCheck {
    std::vector<std::string> violations;
    bool ok() const { return violations.empty(); }
};

// Every instance port connected exactly once (net or explicit open), every
// net declared, no net with two drivers, every referenced module defined.
NetlistCheck validate_netlist(const Netlist& n);

// Primitive cells used by generated test logic.
namespace cells {
inline constexpr std::string_view wbr = "WBR_CELL";   // fi si se mode clk -> fo so
inline constexpr std::string_view mux2 = "MUX2";      // a b s -> y   (y = s ? b : a)
inline constexpr std::string_view buf = "BUF";        // a -> y
inline constexpr std::string_view inv = "INV";        // a -> y
inline constexpr std::string_view and2 = "AND2";      // a b -> y
inline constexpr std::string_view or2 = "OR2";        // a b -> y
inline constexpr std::string_view dff = "DFF";        // d clk -> q
inline constexpr std::string_view tie0 = "TIE0";      // -> y
inline constexpr std::string_view tie1 = "TIE1";      // -> y
} // namespace cells

// Leaf definitions of the cells above; the WBR cell carries `wbr_area`.
std::vector<Module> test_cell_library(std::uint64_t wbr_area = 26);

// Elaborated view: every leaf instance with its full path and, per pin, a
// global net id. Top-level ports are included as endpoints.
struct FlatNetlist {
    struct Leaf {
        std::string path;
        std::string module;
        const Instance* inst = nullptr;
        std::map<std::string, std::size_t> pins;
    };
    std::vector<Leaf> leaves;
    std::map<std::string, std::size_t> top_ports;
    std::size_t net_count = 0;
};

FlatNetlist flatten(const Netlist& n, std::string_view top = {});

// Pairs of pins through which a value passes unchanged when the test logic
// is inactive (wrapper cells in functional mode, selectors on input a).
using TransparentArcs = std::map<std::string, std::vector<std::pair<std::string, std::string>>>;
TransparentArcs functional_mode_arcs();

// Endpoint name: "<top port>" or "<instance path>.<pin>".
using ConnectivityClasses = std::set<std::set<std::string>>;

// Groups the chosen endpoints by electrical connectivity after collapsing
// the given transparent arcs. Paths of leaf instances are rewritten through
// `rename` (new path -> path the caller wants reported).
ConnectivityClasses connectivity_classes(const Netlist& n, const TransparentArcs& arcs,
                                         const std::set<std::string>& endpoints,
                                         const std::map<std::string, std::string>& rename = {});

// All endpoints of a netlist: top ports and every pin of every leaf.
std::set<std::string> all_endpoints(const Netlist& n);

// Two-valued cycle simulation of a module built from the primitive cells.
// All DFFs share one clock; `clock()` latches every D input.
class GateSim {
public:
    GateSim(const Netlist& n, std::string_view module);

    void set(std::string_view port, bool value);
    bool get(std::string_view port) const;
    void eval();
    void clock();

private:
    FlatNetlist flat_;
    std::vector<char> value_;
    std::vector<char> driven_by_input_;
    std::vector<std::size_t> dff_;
};

} // namespace stk
