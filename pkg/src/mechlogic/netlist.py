"""NOR-only logic netlists, their golden simulation, and lowering to physics.

A netlist is a graph of two-input NOR gates over single-driver nets, with
primary inputs, primary outputs and a shared constant-zero net.  Circuit
combinators build the usual derived operators (NOT, AND, OR, XOR, MUX,
adders, comparators, shifts) out of NOR gates; shifts are pure rewiring.

The golden simulator is three-valued (0/1/X) so feedback latches can start
honestly unknown and resolve; it iterates gate evaluation to a fixpoint per
input phase.  ``compile_netlist`` lowers each gate to one mechanical NOR
instance and each net to spring+dashpot fanout couplings.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from .gates import GateCompiler, LogicLevel, LogicReference, NorTemplate

X = 2  # unknown/ambiguous logic value


def nor3(a, b):
    """Three-valued NOR over {0, 1, X=2}; arrays or scalars."""
    a = np.asarray(a)
    b = np.asarray(b)
    out = np.full(np.broadcast(a, b).shape, X, dtype=np.uint8)
    out[(a == 1) | (b == 1)] = 0
    out[(a == 0) & (b == 0)] = 1
    return out if out.shape else np.uint8(out)


class NetlistError(ValueError):
    pass


class OscillationError(RuntimeError):
    """Golden simulation failed to reach a fixpoint."""


@dataclass
class Net:
    index: int
    name: str = ""
    driver: tuple | None = None  # ("gate", gate_index) | ("input", pos) | ("zero",)
    fanout: list = field(default_factory=list)  # gate inputs fed: (gate_index, pin)
    feedback: bool = False  # pre-created net driven later: cuts cycles


class Netlist:
    """Frozen NOR gate graph (build through NetlistBuilder)."""

    def __init__(self, gates, nets, inputs, outputs, const_zero, gate_counts,
                 name="", delay_gates=()):
        self.gates = tuple(gates)          # (in_a, in_b, out) net indices
        self.nets = nets
        self.inputs = tuple(inputs)        # net indices
        self.outputs = tuple(outputs)      # net indices
        self.const_zero = const_zero       # net index or None
        self.gate_counts = dict(gate_counts)
        self.delay_gates = frozenset(delay_gates)
        self.name = name
        self.n_gates = len(self.gates)
        self.gate_in_a = np.array([g[0] for g in self.gates], dtype=np.int64)
        self.gate_in_b = np.array([g[1] for g in self.gates], dtype=np.int64)
        self.gate_out = np.array([g[2] for g in self.gates], dtype=np.int64)
        self._eval_order = self._levelize()

    @property
    def n_nets(self):
        return len(self.nets)

    def _levelize(self):
        """Assign every gate a level, treating feedback nets as sources.

        Feedback nets (latch cores, register outputs) cut every cycle in
        well-formed builds, so the remaining graph levelizes completely;
        any residue (a cycle not passing through a feedback net) is put in
        a final catch-all level and settles, or not, during sweeps.
        """
        n = self.n_gates
        net_level = {}
        for net in self.nets:
            if net.driver is None or net.driver[0] != "gate" or net.feedback:
                net_level[net.index] = 0
        levels = []
        remaining = set(range(n))
        while remaining:
            batch = []
            for g in sorted(remaining):
                a, b, o = self.gates[g]
                if a in net_level and b in net_level:
                    batch.append(g)
            if not batch:
                levels.append(np.array(sorted(remaining), dtype=np.int64))
                break
            lv = len(levels) + 1
            for g in batch:
                o = self.gates[g][2]
                if not self.nets[o].feedback:
                    net_level[o] = lv
                remaining.discard(g)
            levels.append(np.array(batch, dtype=np.int64))
        self._gate_levels = levels
        return np.concatenate(levels) if levels else np.empty(0, dtype=np.int64)

    def combinational_depth(self) -> int:
        """Longest combinational path in gate levels, with feedback nets
        (register/latch outputs) as timing sources: what one clock pause
        must cover."""
        return len(self._gate_levels)

    def find_loops(self):
        """Strongly connected components with more than one gate (or a
        self-loop); latches live in these."""
        adj = [[] for _ in range(self.n_gates)]
        driver_of = {}
        for g, (_, _, o) in enumerate(self.gates):
            driver_of[o] = g
        for g, (a, b, _) in enumerate(self.gates):
            for src in (a, b):
                if src in driver_of:
                    adj[driver_of[src]].append(g)
        index = {}
        low = {}
        onstack = [False] * self.n_gates
        stack = []
        sccs = []
        counter = [0]

        def strongconnect(v):
            work = [(v, 0)]
            while work:
                node, pi = work.pop()
                if pi == 0:
                    index[node] = low[node] = counter[0]
                    counter[0] += 1
                    stack.append(node)
                    onstack[node] = True
                recurse = False
                for j in range(pi, len(adj[node])):
                    w = adj[node][j]
                    if w not in index:
                        work.append((node, j + 1))
                        work.append((w, 0))
                        recurse = True
                        break
                    elif onstack[w]:
                        low[node] = min(low[node], index[w])
                if recurse:
                    continue
                if low[node] == index[node]:
                    scc = []
                    while True:
                        w = stack.pop()
                        onstack[w] = False
                        scc.append(w)
                        if w == node:
                            break
                    if len(scc) > 1 or node in adj[node]:
                        sccs.append(sorted(scc))
                for parent, _ in work[::-1]:
                    low[parent] = min(low[parent], low[node])
                    break
        for v in range(self.n_gates):
            if v not in index:
                strongconnect(v)
        return sccs

    def validate(self):
        for net in self.nets:
            if net.driver is None:
                raise NetlistError(f"net {net.index} ({net.name!r}) has no driver")
        for g, (a, b, o) in enumerate(self.gates):
            for n in (a, b, o):
                if not 0 <= n < self.n_nets:
                    raise NetlistError(f"gate {g} references unknown net {n}")
        return self


class NetlistBuilder:
    """Accumulates NOR gates and nets; combinators live here.

    Bus handles are plain lists of net indices, LSB first.
    """

    def __init__(self, name=""):
        self.name = name
        self._gates = []
        self._nets = []
        self._inputs = []
        self._outputs = []
        self._const_zero = None
        self._frozen = None
        self.gate_counts = {}
        self.delay_gates = []  # latch output chains, frozen during pulses

    # -- net management ----------------------------------------------------

    def _new_net(self, name=""):
        net = Net(index=len(self._nets), name=name)
        self._nets.append(net)
        return net.index

    def input_net(self, name=""):
        n = self._new_net(name)
        self._nets[n].driver = ("input", len(self._inputs))
        self._inputs.append(n)
        return n

    def input_bus(self, name, width):
        return [self.input_net(f"{name}[{i}]") for i in range(width)]

    def output_net(self, net, name=""):
        if name:
            self._nets[net].name = name
        self._outputs.append(net)
        return net

    def output_bus(self, nets, name):
        for i, n in enumerate(nets):
            self.output_net(n, f"{name}[{i}]")
        return nets

    @property
    def const0(self):
        if self._const_zero is None:
            self._const_zero = self._new_net("const0")
            self._nets[self._const_zero].driver = ("zero",)
        return self._const_zero

    def _count(self, kind, n=1):
        self.gate_counts[kind] = self.gate_counts.get(kind, 0) + n

    # -- gates and combinators ----------------------------------------------

    def nor(self, a, b, name=""):
        out = self._new_net(name)
        g = len(self._gates)
        self._gates.append((a, b, out))
        self._nets[out].driver = ("gate", g)
        self._nets[a].fanout.append((g, 0))
        self._nets[b].fanout.append((g, 1))
        self._count("nor")
        return out

    def not_(self, a):
        self._count("not_")
        return self.nor(a, self.const0)

    def or_(self, a, b):
        self._count("or_")
        return self.nor(self.nor(a, b), self.const0)

    def and_(self, a, b):
        # NOR(NOT a, NOT b): three gates, two levels of propagation
        self._count("and_")
        return self.nor(self.nor(a, self.const0), self.nor(b, self.const0))

    def xor_(self, a, b):
        # shares the AND term: NOR(NOR(a,b), AND(a,b))
        self._count("xor_")
        na = self.nor(a, self.const0)
        nb = self.nor(b, self.const0)
        both = self.nor(na, nb)          # a AND b
        neither = self.nor(a, b)
        return self.nor(neither, both)

    def mux(self, a, b, sel):
        """Output a when sel=0, b when sel=1 (single nets)."""
        self._count("mux")
        nsel = self.nor(sel, self.const0)
        ta = self.nor(self.nor(a, self.const0), sel)    # a AND NOT sel
        tb = self.nor(self.nor(b, self.const0), nsel)   # b AND sel
        return self.nor(self.nor(ta, tb), self.const0)  # ta OR tb

    def mux_bus(self, a_bus, b_bus, sel):
        if len(a_bus) != len(b_bus):
            raise NetlistError("mux operand width mismatch")
        nsel = self.nor(sel, self.const0)
        out = []
        for a, b in zip(a_bus, b_bus):
            ta = self.nor(self.nor(a, self.const0), sel)
            tb = self.nor(self.nor(b, self.const0), nsel)
            out.append(self.nor(self.nor(ta, tb), self.const0))
        self._count("mux_bus")
        return out

    def half_adder(self, a, b):
        """(sum, carry) in five gates; carry is the shared AND term."""
        self._count("half_adder")
        na = self.nor(a, self.const0)
        nb = self.nor(b, self.const0)
        carry = self.nor(na, nb)         # a AND b
        neither = self.nor(a, b)
        s = self.nor(neither, carry)     # a XOR b
        return s, carry

    def full_adder(self, a, b, cin):
        """(sum, carry) in twelve gates, reusing the xor-pair structure."""
        self._count("full_adder")
        x, ab = self.half_adder(a, b)
        s, xc = self.half_adder(x, cin)
        cout = self.nor(self.nor(ab, xc), self.const0)  # ab OR (x AND cin)
        return s, cout

    def ripple_adder(self, a_bus, b_bus):
        """(sum bus, overflow): LSB-first ripple chain, 5 + 12*(n-1) gates."""
        if len(a_bus) != len(b_bus):
            raise NetlistError("adder operand width mismatch")
        self._count("ripple_adder")
        out = []
        s, c = self.half_adder(a_bus[0], b_bus[0])
        out.append(s)
        for a, b in zip(a_bus[1:], b_bus[1:]):
            s, c = self.full_adder(a, b, c)
            out.append(s)
        return out, c

    def greater_than(self, a_bus, b_bus):
        """a > b, unsigned.

        Per-bit (greater, equal) pairs merge in a balanced tree with
        (G,E) o (g,e) = (G or E and g, E and e), keeping the depth
        logarithmic so the clock pause covers wide comparators.
        """
        if len(a_bus) != len(b_bus):
            raise NetlistError("comparator width mismatch")
        self._count("greater_than")
        pairs = []
        for a, b in zip(a_bus, b_bus):  # LSB first; tree keeps MSB priority
            na = self.nor(a, self.const0)
            nb = self.nor(b, self.const0)
            g_here = self.nor(na, b)     # a AND NOT b
            x_here = self.nor(self.nor(a, b), self.nor(na, nb))  # a XOR b
            e_here = self.nor(x_here, self.const0)               # a XNOR b
            pairs.append((g_here, e_here))
        while len(pairs) > 1:
            merged = []
            for i in range(0, len(pairs) - 1, 2):
                g_lo, e_lo = pairs[i]
                g_hi, e_hi = pairs[i + 1]
                # high half dominates: G = g_hi OR (e_hi AND g_lo)
                step = self.nor(self.nor(e_hi, self.const0), self.nor(g_lo, self.const0))
                g = self.nor(self.nor(g_hi, step), self.const0)
                e = self.nor(self.nor(e_hi, self.const0), self.nor(e_lo, self.const0))
                merged.append((g, e))
            if len(pairs) % 2:
                merged.append(pairs[-1])
            pairs = merged
        return pairs[0][0]

    def not_equal(self, a_bus, b_bus):
        if len(a_bus) != len(b_bus):
            raise NetlistError("comparator width mismatch")
        self._count("not_equal")
        terms = []
        for a, b in zip(a_bus, b_bus):
            x = self.xor_(a, b)
            self.gate_counts["xor_"] -= 1
            terms.append(x)
        while len(terms) > 1:
            merged = []
            for i in range(0, len(terms) - 1, 2):
                merged.append(self.nor(self.nor(terms[i], terms[i + 1]), self.const0))
            if len(terms) % 2:
                merged.append(terms[-1])
            terms = merged
        return terms[0]

    def shift_right_logical(self, bus):
        """Zero gates: rewire down one position, zero-fill the MSB."""
        self._count("shift_right_logical")
        return bus[1:] + [self.const0]

    def shift_right_arith(self, bus):
        """Zero gates: rewire down one position, reuse the MSB net."""
        self._count("shift_right_arith")
        return bus[1:] + [bus[-1]]

    def _nor_into(self, a, b, out):
        """NOR gate driving a pre-created net (feedback loops need this)."""
        g = len(self._gates)
        if self._nets[out].driver is not None:
            raise NetlistError(f"net {out} multiply driven")
        self._gates.append((a, b, out))
        self._nets[out].driver = ("gate", g)
        self._nets[out].feedback = True
        self._nets[a].fanout.append((g, 0))
        self._nets[b].fanout.append((g, 1))
        self._count("nor")
        return out

    def build_latch(self, data, enable):
        """Level-sensitive latch plus a five-pair output delay chain.

        The storage loop is the hazard-free mux form with a redundant
        (data AND held) consensus term, so the enable release cannot glitch
        the kept value: q = (data AND en) OR (q AND NOT en) OR (data AND q).
        The returned output sits behind ten identity gates so downstream
        logic starts moving only after the enable pulse has ended.
        """
        self._count("latch")
        q = self._new_net("latch_q")
        nen = self.nor(enable, self.const0)
        ndata = self.nor(data, self.const0)
        nq = self.nor(q, self.const0)
        u = self.nor(ndata, nen)        # data AND enable
        w = self.nor(nq, enable)        # q AND NOT enable
        w2 = self.nor(ndata, nq)        # data AND q  (consensus)
        o1 = self.nor(self.nor(u, w), self.const0)   # u OR w
        self._nor_into(self.nor(o1, w2), self.const0, q)
        out = q
        for _ in range(5):
            out = self.nor(self.nor(out, self.const0), self.const0)
            self.delay_gates.extend((len(self._gates) - 2, len(self._gates) - 1))
            self._count("delay_pair")
        return out

    def identity(self, a):
        """(a NOR 0) NOR 0 - one delay stage."""
        self._count("identity")
        return self.nor(self.nor(a, self.const0), self.const0)

    def cap_fanout(self, cap: int = 8):
        """Split gate-output nets with more than ``cap`` consumers through
        identity buffer pairs.

        A physical channel loses k_couple/omega of local damping per
        attached gate pair; past roughly three times this cap the
        compensated network acquires growing off-resonance modes, so high
        fanout is carried by buffer trees instead.  Primary-input nets need
        no capping (every consumer gets its own drive pair).
        """
        changed = True
        while changed:
            changed = False
            for net in list(self._nets):
                if net.driver is None or net.driver[0] != "gate":
                    continue
                if len(net.fanout) <= cap:
                    continue
                changed = True
                consumers = list(net.fanout)
                net.fanout.clear()
                groups = [consumers[i:i + cap] for i in range(0, len(consumers), cap)]
                for grp in groups:
                    inv = self.nor(net.index, self.const0)
                    buf = self.nor(inv, self.const0)
                    self._count("fanout_buffer")
                    for g, pin in grp:
                        a, b, o = self._gates[g]
                        self._gates[g] = (buf, b, o) if pin == 0 else (a, buf, o)
                        self._nets[buf].fanout.append((g, pin))
        return self

    # -- freeze -------------------------------------------------------------

    def freeze(self) -> Netlist:
        if self._frozen is None:
            self._frozen = Netlist(self._gates, self._nets, self._inputs,
                                   self._outputs, self._const_zero,
                                   self.gate_counts, self.name,
                                   delay_gates=self.delay_gates).validate()
        return self._frozen


def golden_simulate(netlist: Netlist, schedule, init=None, max_sweeps=None,
                    frozen_gates=None):
    """Three-valued fixpoint simulation, one fixpoint per input phase.

    ``schedule`` is a sequence of per-phase input assignments: each phase is
    a dict {input net index: value} or an array over netlist.inputs.  Values
    may be batched (numpy arrays of equal length) to evaluate many vectors
    at once.  Returns per-phase arrays of all net values.

    Values carry over between phases; the first phase starts from X (or
    ``init``).  A phase that fails to reach a fixpoint within
    ``max_sweeps`` (default 4 * gate count) raises OscillationError.
    """
    nets = netlist.n_nets
    # batch size from the first array-valued assignment
    batch = 1
    for phase in schedule:
        vals = phase.values() if isinstance(phase, dict) else phase
        for v in vals:
            if np.ndim(v) > 0:
                batch = max(batch, np.shape(v)[0])
    v = np.full((nets, batch), X, dtype=np.uint8)
    if init is not None:
        v[:] = np.asarray(init, dtype=np.uint8).reshape(nets, -1)
    if netlist.const_zero is not None:
        v[netlist.const_zero] = 0
    if max_sweeps is None:
        max_sweeps = 4 * max(netlist.n_gates, 1)
    levels = netlist._gate_levels
    if frozen_gates:
        fz = frozenset(frozen_gates)
        levels = [lv[~np.isin(lv, list(fz))] for lv in levels]
        levels = [lv for lv in levels if len(lv)]
    results = []
    for phase in schedule:
        if isinstance(phase, dict):
            items = phase.items()
        else:
            items = zip(netlist.inputs, phase)
        for net, val in items:
            v[net] = np.asarray(val, dtype=np.uint8)
        converged = False
        for _ in range(max_sweeps):
            # level-ordered sweep: each level is vectorized, and values
            # reach feedback nets at the end of the pass; repeat passes
            # until the whole assignment is stable
            changed = False
            for lv in levels:
                a = v[netlist.gate_in_a[lv]]
                b = v[netlist.gate_in_b[lv]]
                nv = np.full_like(a, X)
                nv[(a == 1) | (b == 1)] = 0
                nv[(a == 0) & (b == 0)] = 1
                o = netlist.gate_out[lv]
                if not np.array_equal(nv, v[o]):
                    v[o] = nv
                    changed = True
            if not changed:
                converged = True
                break
        if not converged:
            raise OscillationError(
                f"no fixpoint within {max_sweeps} sweeps (oscillating loop)")
        results.append(v.copy())
    return results


def output_values(netlist: Netlist, result):
    """Output net values from one phase result (column 0 when unbatched)."""
    return [int(result[o, 0]) if result.shape[1] == 1 else result[o]
            for o in netlist.outputs]


def bus_value(result, bus, column=0):
    """Integer value of a bus (LSB first); None if any bit is X."""
    total = 0
    for i, net in enumerate(bus):
        bit = int(result[net, column])
        if bit == X:
            return None
        total |= bit << i
    return total


def compile_netlist(netlist: Netlist, template: NorTemplate,
                    reference: LogicReference | None = None):
    """Lower a netlist to a MechanicalSystem.

    One NOR instance per gate; each gate-driven net becomes spring+dashpot
    couplings from the driving channel to every fanout gate pair; primary
    inputs and the constant-zero net become harmonic drive pairs at the
    nominal Zero level (run-time schedules set the actual levels).

    Returns (system, binding, stats): ``binding`` maps nets to oscillator
    probes and inputs to drive-index pairs.
    """
    reference = reference or LogicReference()
    netlist.validate()
    comp = GateCompiler(template, reference)
    instances = []
    for g in range(netlist.n_gates):
        instances.append(comp.instantiate_nor(f"g{g}"))

    # destination map: net -> list of (instance, logical input index)
    dest_map = {}
    for net in netlist.nets:
        dests = []
        for gate_idx, pin in net.fanout:
            dests.append((instances[gate_idx], pin))
        dest_map[net.index] = dests

    input_drives = {}
    for net in netlist.nets:
        if net.driver is None:
            raise NetlistError(f"net {net.index} undriven")
        kind = net.driver[0]
        if kind == "gate":
            src = instances[net.driver[1]]
            for inst, pin in dest_map[net.index]:
                comp.connect(src, inst, pin)
        elif kind in ("input", "zero"):
            level = LogicLevel.ZERO
            drives = []
            for inst, pin in dest_map[net.index]:
                drives.append(comp.drive_input(inst, pin, level))
            input_drives[net.index] = drives
        else:  # pragma: no cover
            raise NetlistError(f"unknown driver kind {kind}")

    system = comp.finalize()
    binding = {
        "channel_of_net": {
            net.index: instances[net.driver[1]].channel
            for net in netlist.nets if net.driver and net.driver[0] == "gate"
        },
        "drives_of_input": input_drives,
        "instances": instances,
    }
    stats = {
        "oscillators": system.n,
        "springs": len(system.springs),
        "cubics": len(system.cubics),
        "dashpots": len(system.dashpots),
        "gates": netlist.n_gates,
        "drives": len(system.drives),
    }
    assert stats["oscillators"] == 6 * netlist.n_gates
    assert stats["cubics"] == 5 * netlist.n_gates
    assert stats["springs"] == stats["dashpots"] == comp.n_connections
    return system, binding, stats


# ---------------------------------------------------------------------------
# structural netlist import (JSON subset)

SUPPORTED_CELLS = ("NOR", "NOT", "LATCH")


def import_structural_netlist(source) -> Netlist:
    """Import a structural JSON netlist (documented subset).

    Expected shape: {"modules": {name: {"ports": {pname: {"direction":
    "input"|"output", "bits": [...]}}, "cells": {cname: {"type":
    "NOR"|"NOT"|"LATCH", "connections": {"A": [bit], "B": [bit], "Y": [bit],
    "D": [bit], "EN": [bit], "Q": [bit]}}}}}}.  Net ids are integers
    ("bits"); NOT cells are rewritten as NOR(a, const0); LATCH cells expand
    through build_latch.  Cell order does not matter.
    """
    if isinstance(source, (str, bytes)) and not str(source).lstrip().startswith("{"):
        with open(source) as fh:
            doc = json.load(fh)
    elif isinstance(source, (str, bytes)):
        doc = json.loads(source)
    else:
        doc = source
    modules = doc.get("modules", {})
    if len(modules) != 1:
        raise NetlistError(f"expected exactly one module, got {len(modules)}")
    (mod_name, mod), = modules.items()

    b = NetlistBuilder(name=mod_name)
    bit_to_net = {}

    def net_of(bit, name=""):
        if bit not in bit_to_net:
            bit_to_net[bit] = b._new_net(name or f"n{bit}")
        return bit_to_net[bit]

    for pname, port in mod.get("ports", {}).items():
        bits = port["bits"]
        if port["direction"] == "input":
            for i, bit in enumerate(bits):
                if bit in bit_to_net:
                    raise NetlistError(f"input bit {bit} multiply driven")
                n = b.input_net(f"{pname}[{i}]" if len(bits) > 1 else pname)
                bit_to_net[bit] = n

    # first pass: reserve output nets so cell order is irrelevant
    cells = list(mod.get("cells", {}).items())
    for cname, cell in cells:
        ctype = cell.get("type")
        if ctype not in SUPPORTED_CELLS:
            raise NetlistError(f"unsupported cell type {ctype!r} in {cname}")
        conn = {k: v[0] for k, v in cell.get("connections", {}).items()}
        out_bit = conn["Q"] if ctype == "LATCH" else conn["Y"]
        out_net = net_of(out_bit)
        if b._nets[out_net].driver is not None:
            raise NetlistError(f"net {out_bit} multiply driven")
        if ctype != "LATCH":
            b._nets[out_net].driver = ("reserved",)

    # second pass: wire gates into the reserved nets, expand latches
    for cname, cell in cells:
        ctype = cell["type"]
        conn = {k: v[0] for k, v in cell["connections"].items()}
        if ctype == "NOR":
            out = net_of(conn["Y"])
            b._nets[out].driver = None
            b._nor_into(net_of(conn["A"]), net_of(conn["B"]), out)
        elif ctype == "NOT":
            out = net_of(conn["Y"])
            b._nets[out].driver = None
            b._nor_into(net_of(conn["A"]), b.const0, out)
            b._count("not_")
        else:
            q = b.build_latch(net_of(conn["D"]), net_of(conn["EN"]))
            out = net_of(conn["Q"])
            # alias: drive the declared Q bit from the latch output
            b._nets[out].driver = None
            b._nor_into(b.nor(q, b.const0), b.const0, out)

    for pname, port in mod.get("ports", {}).items():
        if port["direction"] == "output":
            bits = port["bits"]
            for i, bit in enumerate(bits):
                if bit not in bit_to_net or b._nets[bit_to_net[bit]].driver is None:
                    raise NetlistError(f"output bit {bit} undriven")
                b.output_net(bit_to_net[bit], f"{pname}[{i}]" if len(bits) > 1 else pname)
    return b.freeze()


def export_structural_netlist(netlist: Netlist, name: str | None = None) -> dict:
    """Export to the same JSON subset import_structural_netlist accepts.

    NOR gates with a constant-zero input are emitted as NOT cells; the
    constant-zero net itself is never exported.
    """
    ports = {}
    bit = [max(netlist.n_nets, 2)]
    for i, n in enumerate(netlist.inputs):
        ports[netlist.nets[n].name or f"in{i}"] = {"direction": "input", "bits": [n]}
    for i, n in enumerate(netlist.outputs):
        ports[netlist.nets[n].name or f"out{i}"] = {"direction": "output", "bits": [n]}
    cells = {}
    for g, (a, bb, o) in enumerate(netlist.gates):
        if netlist.const_zero is not None and bb == netlist.const_zero:
            cells[f"g{g}"] = {"type": "NOT", "connections": {"A": [a], "Y": [o]}}
        elif netlist.const_zero is not None and a == netlist.const_zero:
            cells[f"g{g}"] = {"type": "NOT", "connections": {"A": [bb], "Y": [o]}}
        else:
            cells[f"g{g}"] = {"type": "NOR", "connections": {"A": [a], "B": [bb], "Y": [o]}}
    return {"modules": {name or netlist.name or "top": {"ports": ports, "cells": cells}}}


def stats_csv(stats: dict) -> str:
    keys = ["gates", "oscillators", "springs", "cubics", "dashpots", "drives"]
    present = [k for k in keys if k in stats]
    return ",".join(present) + "\n" + ",".join(str(stats[k]) for k in present) + "\n"
