"""Memory co-simulation for processor runs.

The emulated memory watches the processor's output oscillators, decodes
addresses and data from vibration amplitudes, answers on the read-data
lines with harmonic drives at the nominal logic levels, and commits writes
when the write-valid line decodes as One.  The same protocol exists at the
golden netlist level (no demodulation) for fast lockstep checks.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .circuits import ClockSchedule, GoldenMachine, ProcessorPorts
from .dynamics import TWO_PI, State, rk4_integrate
from .gates import LogicLevel, LogicReference, classify
from .isa import Instruction, MachineState, MemoryImage, clock_cycles_of, emulate_step
from .netlist import Netlist, bus_value


class CosimFault(RuntimeError):
    """Ambiguous bit at a decision instant, with location attached."""

    def __init__(self, message, cycle=None, bit=None, amplitude=None):
        super().__init__(message)
        self.cycle = cycle
        self.bit = bit
        self.amplitude = amplitude


@dataclass(frozen=True)
class SamplingPolicy:
    """When the memory device looks at the ports and answers.

    All times are carrier periods.  ``read_decode_at`` is the instant
    within the cycle when the read-address bus is demodulated and the
    read-data drives updated (it must leave the downstream datapath enough
    settle time before the pulse).  ``commit_offset`` is the write-port
    sampling instant; the default sits two demodulation windows before the
    latch pulse.  ``hysteresis`` widens the accepted bands when decoding
    bits (0 keeps the strict bands).
    """

    demod_window: int = 50
    read_decode_at: int = 7000
    commit_offset: int | None = None
    hysteresis: float = 0.0

    def resolved_commit(self, clock: ClockSchedule) -> int:
        if self.commit_offset is not None:
            return self.commit_offset
        return clock.pause_periods - 2 * self.demod_window

    def validate(self, clock: ClockSchedule):
        if self.read_decode_at < self.demod_window:
            raise ValueError("read decode must wait for one demod window")
        commit = self.resolved_commit(clock)
        if not self.read_decode_at < commit < clock.pause_periods:
            raise ValueError("commit instant must lie in the stable window "
                             "between read decode and the latch pulse")


@dataclass
class MemoryEvent:
    cycle: int
    kind: str       # "read" | "write" | "halt"
    address: int
    data: int


class CosimDevice:
    """Plays the memory during an ODE processor run.

    Owns the MemoryImage, decodes port amplitudes at the policy instants,
    drives the read-data inputs at nominal levels, and logs every decoded
    read and committed write.
    """

    def __init__(self, memory: MemoryImage, policy: SamplingPolicy | None = None,
                 reference: LogicReference | None = None):
        self.memory = memory
        self.policy = policy or SamplingPolicy()
        self.reference = reference or LogicReference()
        self.events: list[MemoryEvent] = []
        self.snapshots: list[bytes] = []

    def decode_bit(self, amplitude: float, cycle: int, bit: int) -> int:
        ref = self.reference
        level = classify(amplitude, ref.u_ref, ref)
        if level == LogicLevel.AMBIGUOUS and self.policy.hysteresis > 0.0:
            r = amplitude / ref.u_ref
            h = self.policy.hysteresis
            if ref.zero_band[0] - h <= r <= ref.zero_band[1] + h:
                level = LogicLevel.ZERO
            elif ref.one_band[0] - h <= r <= ref.one_band[1] + h:
                level = LogicLevel.ONE
        if level == LogicLevel.AMBIGUOUS:
            raise CosimFault(
                f"ambiguous bit at cycle {cycle}, bit {bit}: "
                f"amplitude {amplitude:.4g} ({amplitude / ref.u_ref:.3f} of reference)",
                cycle=cycle, bit=bit, amplitude=amplitude)
        return level.value

    def decode_byte(self, amplitudes, cycle: int) -> int:
        total = 0
        for i, a in enumerate(amplitudes):
            total |= self.decode_bit(a, cycle, i) << i
        return total


def export_pgm(memory: MemoryImage) -> str:
    """16x16 grayscale PGM (plain P2), one pixel per memory byte."""
    lines = ["P2", "16 16", "255"]
    for row in range(16):
        lines.append(" ".join(str(b) for b in memory.data[16 * row: 16 * row + 16]))
    return "\n".join(lines) + "\n"


def event_log_csv(events) -> str:
    lines = ["cycle,kind,address,data"]
    for e in events:
        lines.append(f"{e.cycle},{e.kind},{e.address},{e.data}")
    return "\n".join(lines) + "\n"


def halt_detect(events) -> int | None:
    """First cycle whose decoded read address repeats the previous cycle's
    with no intervening write: the self-jump signature."""
    prev_cycle = None
    prev_addr = None
    wrote = set(e.cycle for e in events if e.kind == "write")
    for e in events:
        if e.kind != "read":
            continue
        if prev_addr is not None and e.address == prev_addr and e.cycle not in wrote \
                and prev_cycle not in wrote:
            return e.cycle
        prev_cycle, prev_addr = e.cycle, e.address
    return None


# ---------------------------------------------------------------------------
# golden-level processor execution (fast oracle for lockstep)


def golden_processor_run(netlist: Netlist, ports: ProcessorPorts,
                         memory: MemoryImage, n_cycles: int,
                         regs: dict | None = None):
    """Clocked golden run with the memory bridged in.

    Per cycle: settle with the clock low, snapshot the register state,
    commit a pending write when write-valid is latched One, decode the
    read address and answer with memory[address] on the read-data inputs,
    settle again, then pulse the latch enables.  Cycle 0 applies reset.
    Returns (memory, events, register trace); ``reg_trace[k]`` is the
    state at the start of cycle k (before its instruction commits).
    """
    m = GoldenMachine(netlist, ports.clock)
    events = []
    reg_trace = []
    data_bits = {net: 0 for net in ports.read_data}
    for cycle in range(n_cycles):
        reset = 1 if cycle == 0 else 0
        base = {ports.reset: reset, **data_bits}
        settled = m.settle(base)
        if regs is not None:
            snap = {}
            for name, bus in regs.items():
                snap[name] = bus_value(m.values, bus) if isinstance(bus, list) \
                    else int(m.values[bus, 0])
            reg_trace.append(snap)
        if not reset:
            wv = int(m.values[ports.write_valid, 0])
            if wv == 1:
                wa = bus_value(m.values, list(ports.write_addr))
                wd = bus_value(m.values, list(ports.write_data))
                memory.write(wa, wd)
                events.append(MemoryEvent(cycle, "write", wa, wd))
            addr = bus_value(m.values, list(ports.read_addr))
        else:
            addr = 0
        data = memory.read(addr)
        events.append(MemoryEvent(cycle, "read", addr, data))
        data_bits = {net: (data >> i) & 1 for i, net in enumerate(ports.read_data)}
        base = {ports.reset: reset, **data_bits}
        m.settle(base)
        m.pulse(base)
    return memory, events, reg_trace


def lockstep_compare(netlist: Netlist, ports: ProcessorPorts, regs: dict,
                     image: MemoryImage, n_instructions: int):
    """Run the ISA emulator and the golden netlist side by side.

    The netlist spends two clock cycles on LDNX_AB and LOAD_AB (literal and
    memory cycles through the shared read port), one on everything else;
    registers are compared at every instruction boundary.  Returns the
    number of instructions checked.
    """
    emu_mem = image.copy()
    net_mem = image.copy()
    emu = MachineState()
    costs = []
    probe = MachineState()
    probe_mem = image.copy()
    for _ in range(n_instructions):
        op = Instruction(probe_mem.read(probe.pc) & 0x0F)
        costs.append(clock_cycles_of(op))
        probe, _ = emulate_step(probe, probe_mem)
        if probe.halted:
            break
    total_cycles = 1 + sum(costs) + 1
    _, _, reg_trace = golden_processor_run(netlist, ports, net_mem,
                                           total_cycles, regs=regs)
    # cycle 0 is reset; instruction k starts at cycle 1 + sum(costs[:k])
    boundary = 1
    checked = 0
    for cost in costs:
        snap = reg_trace[boundary]
        got = dict(A=snap["A"], B=snap["B"], C=snap["C"], D=snap["D"],
                   pc=snap["ra"], write_addr=snap["wa"], write_data=snap["wd"],
                   overflow=snap["ovf"])
        want = emu.registers()
        if got != want:
            raise AssertionError(
                f"lockstep divergence at instruction {checked} "
                f"(cycle {boundary}): netlist {got} vs emulator {want}")
        emu, _ = emulate_step(emu, emu_mem)
        checked += 1
        boundary += cost
        if emu.halted:
            break
    if bytes(emu_mem.data) != bytes(net_mem.data):
        raise AssertionError("memory contents diverged")
    return checked


# ---------------------------------------------------------------------------
# ODE co-simulation


def cosim_run(system, binding, ports: ProcessorPorts, device: CosimDevice,
              clock: ClockSchedule, n_cycles: int,
              omega: float, dt: float = 0.025, reset_cycles: int = 1,
              progress=None):
    """Integrate a compiled processor against the emulated memory.

    Per cycle: after the read-address bus has settled, its eight channels
    are demodulated and classified, the read-data drives take the bits of
    memory[address]; at the commit instant the write port is decoded and a
    One on write-valid stores the byte; the latch enable then pulses per
    the clock schedule.  Returns (memory, events, snapshots, final state).
    """
    policy = device.policy
    policy.validate(clock)
    ref = device.reference
    period = TWO_PI / omega

    chan = binding["channel_of_net"]
    ra_probe = [chan[n] for n in ports.read_addr]
    wa_probe = [chan[n] for n in ports.write_addr]
    wd_probe = [chan[n] for n in ports.write_data]
    wv_probe = chan[ports.write_valid]
    probes = ra_probe + wa_probe + wd_probe + [wv_probe]
    col = {p: i for i, p in enumerate(probes)}

    drives_of = binding["drives_of_input"]

    def set_level(amps, net, bit):
        target = ref.drive_amplitude(LogicLevel.ONE if bit else LogicLevel.ZERO)
        for pair in drives_of[net]:
            for di in pair:
                amps[di] = target

    steps_per_period = int(round(1.0 / dt))
    se = max(1, int(math.floor(0.125 / dt + 1e-9)))  # sample stride
    sample_dt = se * dt * period
    cycle_steps = clock.cycle_periods * steps_per_period
    read_step = policy.read_decode_at * steps_per_period
    commit_step = policy.resolved_commit(clock) * steps_per_period
    pulse_step = clock.pause_periods * steps_per_period
    n_steps = n_cycles * cycle_steps
    window = policy.demod_window

    def demod_trailing(tracebuf, probe_idx, upto_step):
        rows = len(tracebuf)
        nwin = int(round(window * period / sample_dt))
        seg = tracebuf[max(0, rows - nwin): rows, col[probe_idx]]
        tt = (np.arange(rows - len(seg), rows) + 1) * sample_dt
        s = np.sum(seg * np.sin(omega * tt)) * sample_dt
        c = np.sum(seg * np.cos(omega * tt)) * sample_dt
        tw = len(seg) * sample_dt
        return 2.0 / tw * math.hypot(s, c)

    # fresh drive table: idle clock low, reset asserted, data zero
    amps = system.drive_amplitudes()
    pending = {"halted_at": None}

    def controller(step, t, drive_amps, tracebuf):
        cycle = step // cycle_steps
        local = step - cycle * cycle_steps
        if step >= n_steps:
            return
        if local == 0:
            # cycle boundary housekeeping: reset and clock idle
            set_level(drive_amps, ports.clock, 0)
            set_level(drive_amps, ports.reset, 1 if cycle < reset_cycles else 0)
            device.snapshots.append(bytes(device.memory.data))
            if progress:
                progress(cycle, device.events)
        elif local == read_step:
            a = [demod_trailing(tracebuf, p, step) for p in ra_probe]
            addr = device.decode_byte(a, cycle)
            data = device.memory.read(addr)
            device.events.append(MemoryEvent(cycle, "read", addr, data))
            for i, net in enumerate(ports.read_data):
                set_level(drive_amps, net, (data >> i) & 1)
        elif local == commit_step:
            wv_amp = demod_trailing(tracebuf, wv_probe, step)
            wv = device.decode_bit(wv_amp, cycle, -1)
            if wv == 1:
                wa = device.decode_byte(
                    [demod_trailing(tracebuf, p, step) for p in wa_probe], cycle)
                wd = device.decode_byte(
                    [demod_trailing(tracebuf, p, step) for p in wd_probe], cycle)
                device.memory.write(wa, wd)
                device.events.append(MemoryEvent(cycle, "write", wa, wd))
        elif local == pulse_step:
            set_level(drive_amps, ports.clock, 1)

    # controller granularity: gcd of all action steps; they are multiples of
    # one period, so act once per period
    final, traces = rk4_integrate(
        system, State.zero(system.n), dt=dt, n_steps=n_steps, probes=probes,
        omega_ref=omega, sample_every=se, controller=controller,
        control_every=steps_per_period, drive_amplitudes=amps)
    device.snapshots.append(bytes(device.memory.data))
    return device.memory, device.events, device.snapshots, final
