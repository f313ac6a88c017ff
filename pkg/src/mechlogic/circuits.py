"""Demonstrator circuits: NOR cascade, 2-bit adder, square-root FSM, CPU.

Everything here is a pure netlist generator; the produced graphs run under
the golden simulator or compile to mechanics.  Registers are level latches
clocked by a shared enable line per the pulse/pause schedule; each latch
output carries the standard five-pair delay chain, so latched values start
moving only after the enable pulse has ended.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .netlist import Netlist, NetlistBuilder, bus_value, golden_simulate


@dataclass(frozen=True)
class ClockSchedule:
    """Latch-enable timing in carrier periods."""

    pulse_periods: int = 2500
    pause_periods: int = 25000

    @property
    def cycle_periods(self) -> int:
        return self.pulse_periods + self.pause_periods


@dataclass(frozen=True)
class ProcessorPorts:
    """Net indices of the processor's memory interface."""

    read_addr: tuple   # 8 output nets (channel oscillators once compiled)
    read_data: tuple   # 8 primary inputs (driven gate pairs)
    write_addr: tuple  # 8 output nets
    write_data: tuple  # 8 output nets
    write_valid: int   # 1 output net
    clock: int         # latch-enable primary input
    reset: int         # register-zeroing primary input


@dataclass(frozen=True)
class RegisterFileSpec:
    """Architectural registers, each 8 latches wide.

    ``nets`` maps observation names (ra/wa/wd/A/B/C/D buses and the ovf,
    imm, ldm, wv flag bits) to their net indices in the built netlist.
    """

    names: tuple = ("read_addr", "write_addr", "write_data", "A", "B", "C", "D")
    width: int = 8
    flags: tuple = ("overflow", "write_valid", "imm_pending", "load_pending")
    nets: dict | None = None


def build_nor_cascade(depth: int = 3) -> Netlist:
    """NOR followed by identity stages: (((x1 NOR x2) NOR 0) NOR 0) ...

    ``depth`` counts total gate stages (1 = bare NOR); each identity stage
    adds one (x NOR 0) NOR 0 pair, i.e. two gate delays... the published
    three-gate variant is depth=3: NOR plus two inverter stages.
    """
    if depth < 1:
        raise ValueError("depth must be >= 1")
    b = NetlistBuilder(f"cascade{depth}")
    x1 = b.input_net("x1")
    x2 = b.input_net("x2")
    y = b.nor(x1, x2)
    for _ in range(depth - 1):
        y = b.nor(y, b.const0)
    b.output_net(y, "y")
    return b.freeze()


def build_adder2() -> Netlist:
    """Two 2-bit operands in, 3-bit sum out; 17 NOR gates."""
    b = NetlistBuilder("adder2")
    a = b.input_bus("a", 2)
    bb = b.input_bus("b", 2)
    s, carry = b.ripple_adder(a, bb)
    b.output_bus(s + [carry], "s")
    return b.freeze()


@dataclass
class SqrtPorts:
    value: tuple      # input bus, 2*width bits
    reset: int
    clock: int
    guess: tuple      # output bus, width bits


def build_sqrt_fsm(width: int = 8):
    """Binary-search square root machine.

    Registers hold the current guess and the halving probe bit.  Each clock:
    candidate = guess + probe; its square is compared combinationally
    against the input; the guess keeps the candidate when the square does
    not exceed the input.  One result bit settles per clock, MSB first.
    Returns (netlist, SqrtPorts).
    """
    if width < 2:
        raise ValueError("width must be >= 2")
    b = NetlistBuilder(f"sqrt{width}")
    n_in = 2 * width
    value = b.input_bus("value", n_in)
    reset = b.input_net("reset")
    clock = b.input_net("clock")

    guess_q = [b._new_net(f"guess{i}") for i in range(width)]
    probe_q = [b._new_net(f"probe{i}") for i in range(width)]

    cand, _ = b.ripple_adder(guess_q, probe_q)

    # combinational squarer: sum over bit pairs of cand
    # cand^2 = sum_i c_i 2^(2i) + sum_{i<j} c_i c_j 2^(i+j+1)
    partial_cols = [[] for _ in range(2 * width)]
    for i in range(width):
        partial_cols[2 * i].append(cand[i])  # c_i AND c_i = c_i
        for j in range(i + 1, width):
            col = i + j + 1
            if col < 2 * width:
                partial_cols[col].append(b.and_(cand[i], cand[j]))
    square = _sum_columns(b, partial_cols, 2 * width)

    too_big = b.greater_than(square, value)

    next_guess = b.mux_bus(cand, guess_q, too_big)
    init_guess = [b.const0] * width
    next_guess = b.mux_bus(next_guess, init_guess, reset)

    shifted = b.shift_right_logical(probe_q)
    init_probe = [b.const0] * (width - 1) + [_const1(b)]
    next_probe = b.mux_bus(shifted, init_probe, reset)

    for i in range(width):
        _latch_into(b, next_guess[i], clock, guess_q[i])
        _latch_into(b, next_probe[i], clock, probe_q[i])

    out = [b.identity(g) for g in guess_q]
    b.output_bus(out, "guess")
    return b.freeze(), SqrtPorts(value=tuple(value), reset=reset, clock=clock,
                                 guess=tuple(out))


def _const1(b: NetlistBuilder):
    return b.nor(b.const0, b.const0)


def _sum_columns(b: NetlistBuilder, cols, width):
    """Carry-save reduction of per-column partial product lists.

    Waves of full/half adders run across all columns in parallel until
    every column holds at most two bits, then one ripple pass finishes;
    this keeps the squarer's depth logarithmic in the operand count.
    """
    cols = [list(c) for c in cols[:width]] + [[], []]
    while any(len(cols[i]) > 2 for i in range(width)):
        nxt = [[] for _ in range(width + 2)]
        for i in range(width):
            col = cols[i]
            j = 0
            while len(col) - j >= 3:
                s, c = b.full_adder(col[j], col[j + 1], col[j + 2])
                j += 3
                nxt[i].append(s)
                nxt[i + 1].append(c)
            nxt[i].extend(col[j:])
        cols = nxt
    out = []
    carry = None
    for i in range(width):
        bits = list(cols[i]) + ([carry] if carry is not None else [])
        if not bits:
            out.append(b.const0)
            carry = None
        elif len(bits) == 1:
            out.append(bits[0])
            carry = None
        elif len(bits) == 2:
            s, carry = b.half_adder(bits[0], bits[1])
            out.append(s)
        else:
            s, carry = b.full_adder(bits[0], bits[1], bits[2])
            out.append(s)
    return out


def _latch_into(b: NetlistBuilder, data, enable, q_net):
    """build_latch variant that drives a pre-created register net.

    Same topology as NetlistBuilder.build_latch (hazard-free mux loop plus
    the five-pair output delay); the register net receives the delayed
    output so feedback paths can be declared before the latch body exists.
    """
    b._count("latch")
    q = b._new_net("latch_q")
    nen = b.nor(enable, b.const0)
    ndata = b.nor(data, b.const0)
    nq = b.nor(q, b.const0)
    u = b.nor(ndata, nen)
    w = b.nor(nq, enable)
    w2 = b.nor(ndata, nq)
    o1 = b.nor(b.nor(u, w), b.const0)
    b._nor_into(b.nor(o1, w2), b.const0, q)
    out = q
    for _ in range(4):
        out = b.nor(b.nor(out, b.const0), b.const0)
        b.delay_gates.extend((len(b._gates) - 2, len(b._gates) - 1))
        b._count("delay_pair")
    # fifth delay pair drives the register net directly
    b._nor_into(b.nor(out, b.const0), b.const0, q_net)
    b.delay_gates.extend((len(b._gates) - 2, len(b._gates) - 1))
    b._count("delay_pair")
    return q_net


# ---------------------------------------------------------------------------
# the processor


OPCODES = ("SWAP_AC", "SWAP_BD", "SWAP_AB", "COPY_AC", "SAVE_AB", "LOAD_AB",
           "LDNX_AB", "SKPNX_A_GRT_B", "SKPNX_A_DIF_B", "SKPNX_OVER",
           "JMP_C", "NOT_C", "ANORB_TO_C", "APLUSB_TO_D", "RSL_D", "RSA_D")


def build_processor():
    """The 8-bit stored-program machine as a NOR netlist.

    Datapath computes candidate next values for every register from the
    byte on the read-data bus; a mux tree keyed on the decoded opcode (low
    nibble) commits one candidate per register at each clock.  Two
    micro-flags extend the architectural registers: ``imm_pending`` marks
    the literal-fetch cycle of LDNX_AB (the processor reads the byte after
    the opcode through the same read port), and ``load_pending`` marks the
    memory cycle of LOAD_AB, during which the read-address register holds
    the operand address and register A carries the return address.

    Returns (netlist, ProcessorPorts, RegisterFileSpec).
    """
    b = NetlistBuilder("processor8")
    rd_data = b.input_bus("rd_data", 8)
    clock = b.input_net("clock")
    reset = b.input_net("reset")

    regs = {}
    for name in ("ra", "wa", "wd", "A", "B", "C", "D"):
        regs[name] = [b._new_net(f"{name}{i}") for i in range(8)]
    ovf = b._new_net("ovf")
    imm = b._new_net("imm")
    ldm = b._new_net("ldm")
    wv = b._new_net("wv")

    ra, wa, wd = regs["ra"], regs["wa"], regs["wd"]
    A, B, C, D = regs["A"], regs["B"], regs["C"], regs["D"]

    # instruction decode: low nibble one-hot, gated by "act" (no micro-flag)
    nib = rd_data[:4]
    nnib = [b.not_(x) for x in nib]
    act = b.nor(imm, ldm)
    onehot = []
    for code in range(16):
        bits = [nib[i] if (code >> i) & 1 else nnib[i] for i in range(4)]
        t1 = b.and_(bits[0], bits[1])
        t2 = b.and_(bits[2], bits[3])
        t3 = b.and_(t1, t2)
        onehot.append(b.and_(t3, act))
    o = dict(zip(OPCODES, onehot))

    # shared datapath blocks
    inc_ra = _increment(b, ra)
    inc2_ra = ra[:1] + _increment(b, ra[1:])  # +2 = increment from bit 1
    sum_ab, carry = b.ripple_adder(A, B)
    a_gt_b = b.greater_than(A, B)
    a_ne_b = b.not_equal(A, B)
    nor_ab = [b.nor(x, y) for x, y in zip(A, B)]
    not_c = [b.not_(x) for x in C]
    rsl_d = b.shift_right_logical(D)
    rsa_d = b.shift_right_arith(D)

    skp = b.or_(b.or_(b.and_(o["SKPNX_A_GRT_B"], a_gt_b),
                      b.and_(o["SKPNX_A_DIF_B"], a_ne_b)),
                b.and_(o["SKPNX_OVER"], ovf))

    # next read address: default +1; taken skip +2; JMP_C -> C;
    # LOAD_AB cycle 1 -> A (operand address); memory cycle -> A (return)
    ra_n = b.mux_bus(inc_ra, inc2_ra, skp)
    ra_n = b.mux_bus(ra_n, C, o["JMP_C"])
    ldm_or_load = b.or_(ldm, o["LOAD_AB"])
    ra_n = b.mux_bus(ra_n, A, ldm_or_load)

    # A: SWAP_AC -> C; SWAP_AB -> B; LOAD c1 -> return address (inc ra);
    # LOAD c2 -> ra (the stashed old A); literal cycle -> rd_data
    a_n = b.mux_bus(A, C, o["SWAP_AC"])
    a_n = b.mux_bus(a_n, B, o["SWAP_AB"])
    a_n = b.mux_bus(a_n, inc_ra, o["LOAD_AB"])
    a_n = b.mux_bus(a_n, ra, ldm)
    a_n = b.mux_bus(a_n, rd_data, imm)

    # B: SWAP_BD -> D; SWAP_AB -> A; memory cycle -> rd_data
    b_n = b.mux_bus(B, D, o["SWAP_BD"])
    b_n = b.mux_bus(b_n, A, o["SWAP_AB"])
    b_n = b.mux_bus(b_n, rd_data, ldm)

    # C: SWAP_AC/COPY_AC -> A; NOT_C; ANORB_TO_C
    c_from_a = b.or_(o["SWAP_AC"], o["COPY_AC"])
    c_n = b.mux_bus(C, A, c_from_a)
    c_n = b.mux_bus(c_n, not_c, o["NOT_C"])
    c_n = b.mux_bus(c_n, nor_ab, o["ANORB_TO_C"])

    # D: SWAP_BD -> B; APLUSB -> sum; shifts
    d_n = b.mux_bus(D, B, o["SWAP_BD"])
    d_n = b.mux_bus(d_n, sum_ab, o["APLUSB_TO_D"])
    d_n = b.mux_bus(d_n, rsl_d, o["RSL_D"])
    d_n = b.mux_bus(d_n, rsa_d, o["RSA_D"])

    wa_n = b.mux_bus(wa, B, o["SAVE_AB"])
    wd_n = b.mux_bus(wd, A, o["SAVE_AB"])
    wv_n = o["SAVE_AB"]
    ovf_n = b.mux(ovf, carry, o["APLUSB_TO_D"])
    imm_n = o["LDNX_AB"]
    ldm_n = o["LOAD_AB"]

    nreset = b.not_(reset)
    for bus_next, bus_q in ((ra_n, ra), (wa_n, wa), (wd_n, wd),
                            (a_n, A), (b_n, B), (c_n, C), (d_n, D)):
        for bit_next, bit_q in zip(bus_next, bus_q):
            _latch_into(b, b.and_(bit_next, nreset), clock, bit_q)
    for bit_next, bit_q in ((ovf_n, ovf), (imm_n, imm), (ldm_n, ldm), (wv_n, wv)):
        _latch_into(b, b.and_(bit_next, nreset), clock, bit_q)

    b.cap_fanout(8)

    ra_out = [b.identity(x) for x in ra]
    wa_out = [b.identity(x) for x in wa]
    wd_out = [b.identity(x) for x in wd]
    wv_out = b.identity(wv)
    b.output_bus(ra_out, "read_addr")
    b.output_bus(wa_out, "write_addr")
    b.output_bus(wd_out, "write_data")
    b.output_net(wv_out, "write_valid")

    ports = ProcessorPorts(read_addr=tuple(ra_out), read_data=tuple(rd_data),
                           write_addr=tuple(wa_out), write_data=tuple(wd_out),
                           write_valid=wv_out, clock=clock, reset=reset)
    regnets = {"ra": ra, "wa": wa, "wd": wd, "A": A, "B": B, "C": C, "D": D,
               "ovf": ovf, "imm": imm, "ldm": ldm, "wv": wv}
    return b.freeze(), ports, RegisterFileSpec(nets=regnets)


def _increment(b: NetlistBuilder, bus):
    """bus + 1 (wrapping), half-adder chain against constant one."""
    one = _const1(b)
    out = []
    carry = one
    for bit in bus:
        s, carry = b.half_adder(bit, carry)
        out.append(s)
    return out


# ---------------------------------------------------------------------------
# golden clocked execution


class GoldenMachine:
    """Clock-stepped golden simulation of a latch-based netlist.

    Each clock cycle is a pause phase (enable low, inputs applied, the
    combinational part settles) and a pulse phase (enable high, latch cores
    capture).  During the pulse the latch output delay chains are frozen,
    which is the golden rendering of their physical role: latched values
    start propagating only after the pulse has ended, so transparent-phase
    feedback through the datapath cannot recirculate.
    """

    def __init__(self, netlist: Netlist, clock_net: int):
        self.netlist = netlist
        self.clock = clock_net
        self.values = None

    def settle(self, inputs: dict):
        res = golden_simulate(self.netlist, [{**inputs, self.clock: 0}],
                              init=self.values)
        self.values = res[-1]
        return res[0]

    def pulse(self, inputs: dict):
        res = golden_simulate(self.netlist, [{**inputs, self.clock: 1}],
                              init=self.values,
                              frozen_gates=self.netlist.delay_gates)
        self.values = res[-1]
        return res[0]

    def cycle(self, inputs: dict):
        settled = self.settle(inputs)
        self.pulse(inputs)
        return settled  # settled pre-latch state


def golden_sqrt(value: int, width: int = 8, max_clocks: int | None = None):
    """Run the square-root FSM netlist to convergence; returns the guess."""
    net, ports = build_sqrt_fsm(width)
    m = GoldenMachine(net, ports.clock)
    bits = {n: (value >> i) & 1 for i, n in enumerate(ports.value)}
    m.cycle({**bits, ports.reset: 1})
    clocks = max_clocks if max_clocks is not None else width + 1
    for _ in range(clocks):
        m.cycle({**bits, ports.reset: 0})
    m.settle({**bits, ports.reset: 0})
    return bus_value(m.values, list(ports.guess))
