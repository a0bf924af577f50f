#!/usr/bin/env python3
# SPDX-License-Identifier: Apache-2.0
# Writes the pre-DFT DSC netlist used by the fixtures (deterministic).
# Core modules are black boxes with the pins declared in the .core files.
import re
import sys
from pathlib import Path

here = Path(__file__).resolve().parent.parent / "fixtures" / "dsc"


def core_pins(path):
    text = path.read_text()
    name = re.search(r"core\s+(\w+)", text).group(1)
    pi = int((re.search(r"\bpi\s+(\d+);", text) or [0, 0])[1])
    po = int((re.search(r"\bpo\s+(\d+);", text) or [0, 0])[1])
    ins, outs = [f"pi{i}" for i in range(pi)], [f"po{j}" for j in range(po)]
    ctrl = re.findall(r"control\s+(\w+)\s+kind=(\w+)", text)
    for m in re.finditer(r"chain\s+\w+.*?in=(\w+)\s+out=([\w:]+);", text):
        ins.append(m.group(1))
        if not m.group(2).startswith("shared:"):
            outs.append(m.group(2))
    return name, pi, po, ctrl, ins, outs


def module(name, ins, outs, body=None, area=None):
    ports = ", ".join([f"input {p}" for p in ins] + [f"output {p}" for p in outs])
    lines = [f"module {name} ({ports});"]
    if body is None:
        lines.append(f"  leaf area={area};")
    else:
        lines += body
    lines.append("endmodule\n")
    return "\n".join(lines)


def main():
    cores = {n: (n, pi, po, ctrl, ins, outs) for n, pi, po, ctrl, ins, outs in
             (core_pins(here / f) for f in ("usb.core", "tv.core", "jpeg.core"))}
    out = []
    for n, pi, po, ctrl, ins, outs in cores.values():
        cins = [c for c, _ in ctrl]
        out.append(module(n, ins[:pi] + cins + ins[pi:], outs, area=0))

    # system bus / CPU subsystem and PLL, also black boxes
    out.append(module("CPU_SS", ["clk", "rst_n"] + [f"rd{i}" for i in range(128)],
                      [f"wr{i}" for i in range(192)] + ["irq_usb", "irq_tv"], area=0))
    out.append(module("TIE0", [], ["y"], area=0))
    out.append(module("PLL", ["ref"], ["c0", "c1", "c2", "c3", "c4"], area=0))

    top_in = ["ref_clk", "rst_n"] + [f"usb_dp_in{i}" for i in range(29)] + [f"cam_d{i}" for i in range(8)]
    top_out = [f"usb_dp_out{i}" for i in range(8)] + [f"vout{i}" for i in range(40)]
    nets, insts = [], []

    def net(n):
        nets.append(n)
        return n

    for c in ("c0", "c1", "c2", "c3", "c4"):
        net(f"pll_{c}")
    net("tie_lo")
    for i in range(192):
        net(f"bus_w{i}")
    for i in range(128):
        net(f"bus_r{i}")
    for j in range(104):
        net(f"usb_po{j}")
    for j in range(104):
        net(f"jpeg_po{j}")
    insts.append("  inst TIE0 u_tie (.y(tie_lo));")
    insts.append("  inst PLL u_pll (.ref(ref_clk), .c0(pll_c0), .c1(pll_c1), .c2(pll_c2), .c3(pll_c3), .c4(pll_c4));")
    cpu = ["  inst CPU_SS u_cpu (.clk(pll_c0), .rst_n(rst_n)"]
    for i in range(128):
        # read bus: USB outputs 0..63, JPEG outputs 0..63
        cpu.append(f".rd{i}(" + (f"usb_po{i}" if i < 64 else f"jpeg_po{i - 64}") + ")")
    for i in range(192):
        cpu.append(f".wr{i}(bus_w{i})")
    cpu.append(".irq_usb(), .irq_tv()")
    insts.append(", ".join(cpu) + ");")

    def ctrl_net(kind, idx):
        if kind == "clock":
            return f"pll_c{1 + idx % 4}"
        if kind == "reset":
            return "rst_n"
        return "tie_lo"

    # USB: pins 0..28 from the pads, the rest from the bus
    n, pi, po, ctrl, ins, outs = cores["USB"]
    conns = [f".pi{i}(" + (f"usb_dp_in{i}" if i < 29 else f"bus_w{i - 29}") + ")" for i in range(pi)]
    conns += [f".{c}({ctrl_net(k, i)})" for i, (c, k) in enumerate(ctrl)]
    conns += [f".{p}()" for p in ins[pi:]]
    conns += [f".po{j}(" + (f"usb_dp_out{j}" if j < 8 else f"usb_po{j}") + ")" for j in range(po)]
    conns += [f".{p}()" for p in outs[po:]]
    insts.append("  inst USB u_usb (" + ", ".join(conns) + ");")

    # TV: inputs from the bus, outputs to the video pads
    n, pi, po, ctrl, ins, outs = cores["TV"]
    conns = [f".pi{i}(bus_w{100 + i})" for i in range(pi)]
    conns += [f".{c}({ctrl_net(k, i)})" for i, (c, k) in enumerate(ctrl)]
    conns += [f".{p}()" for p in ins[pi:]]
    conns += [f".po{j}(vout{j})" for j in range(po)]
    conns += [f".{p}()" for p in outs[po:]]
    insts.append("  inst TV u_tv (" + ", ".join(conns) + ");")

    # JPEG: camera pads, USB data and the bus
    n, pi, po, ctrl, ins, outs = cores["JPEG"]
    src = [f"cam_d{i}" for i in range(8)] + [f"usb_po{64 + j}" for j in range(40)] + \
          [f"bus_w{i}" for i in range(192)]
    conns = [f".pi{i}({src[i]})" for i in range(pi)]
    conns += [f".{c}({ctrl_net(k, i)})" for i, (c, k) in enumerate(ctrl)]
    conns += [f".po{j}(jpeg_po{j})" for j in range(po)]
    insts.append("  inst JPEG u_jpeg (" + ", ".join(conns) + ");")

    body = [f"  net {x};" for x in nets] + insts
    out.append(module("DSC", top_in, top_out, body=body))
    out.append("top DSC;\n")
    # unused USB outputs 8..63 stay on the read bus; 104 outputs all driven
    text = "\n".join(out)
    dst = Path(sys.argv[1]) if len(sys.argv) > 1 else here / "dsc.net"
    dst.write_text(text)


if __name__ == "__main__":
    main()
