"""Command-line surface: every demonstrator as a subcommand emitting files.

Exit codes: 0 on success, 1 when a computed result disagrees with its
digital oracle, 2 on a simulation fault.  Numeric results are written to
files (CSV, PGM, hex dumps); logs carry progress only.
"""

from __future__ import annotations

import argparse
import math
import os
import sys

import numpy as np

from . import calibrate as cal
from . import circuits, dynamics, isa, memharness, netlist, utm
from .gates import GateCompiler, LogicLevel, LogicReference, NorTemplate, classify


def _load_config(args):
    if args.config:
        template, reference, _ = cal.load_calibration(args.config)
    else:
        template, reference = cal.operating_template()
    return template, reference


def _require_omega(template):
    if template.omega is None:
        print("error: configuration has no calibrated operating frequency; "
              "run `mechlogic calibrate` first", file=sys.stderr)
        sys.exit(2)
    return template.omega


def _out(args, name):
    os.makedirs(args.outdir, exist_ok=True)
    return os.path.join(args.outdir, name)


def cmd_calibrate(args):
    template, reference = _load_config(args)
    lo = args.omega_min if args.omega_min else 0.2 * math.sqrt(template.k_gate / template.m_gate)
    hi = args.omega_max if args.omega_max else 0.999 * math.sqrt(template.k_gate / template.m_gate)
    grid = np.linspace(lo, hi, args.grid_points)
    try:
        omega, margin = cal.calibrate_operating_frequency(template, reference,
                                                          omega_grid=grid)
    except cal.CalibrationError as e:
        print(f"calibration failed: {e}", file=sys.stderr)
        path = _out(args, "calibration_failure.txt")
        with open(path, "w") as fh:
            fh.write(f"best_omega={e.best_omega!r}\nbest_margin={e.best_margin!r}\n")
        return 1
    path = _out(args, "operating.calib")
    cal.save_calibration(path, template.with_omega(omega), reference,
                         extras={"worst_corner_margin": round(margin, 6)})
    print(f"omega* = {omega:.6f}, worst-case corner margin {margin:+.4f} -> {path}")
    return 0


def cmd_nor_map(args):
    template, reference = _load_config(args)
    _require_omega(template)
    f_grid, amp, lvl = cal.nor_response_map(template, reference, n=args.n)
    path = _out(args, "nor_map.csv")
    with open(path, "w") as fh:
        fh.write("F_G1,F_G2,u_C_amplitude,level\n")
        for i, f1 in enumerate(f_grid):
            for j, f2 in enumerate(f_grid):
                fh.write(f"{f1:.9g},{f2:.9g},{amp[i, j]:.9g},{lvl[i, j]}\n")
    print(f"NOR steady-state map ({args.n}x{args.n}) -> {path}")
    return 0


def cmd_truth_table(args):
    template, reference = _load_config(args)
    omega = _require_omega(template)
    want = [LogicLevel.ONE, LogicLevel.ZERO, LogicLevel.ZERO, LogicLevel.ZERO]
    rows = []
    if args.backend == "ode":
        table = cal.truth_table_ode(template, settle_periods=args.settle,
                                    reference=reference)
        got = [table[row][0] for row in cal.INPUT_ROWS]
        rows = [(row, table[row][1], lv) for row, lv in zip(cal.INPUT_ROWS, got)]
    else:
        got = []
        for row in cal.INPUT_ROWS:
            st = cal.rest_reachable_state(template, reference.drive_amplitude(row[0]),
                                          reference.drive_amplitude(row[1]))
            lv = classify(st.amp_chan, reference.u_ref, reference)
            got.append(lv)
            rows.append((row, st.amp_chan, lv))
    path = _out(args, "truth_table.csv")
    with open(path, "w") as fh:
        fh.write("in1,in2,amplitude,level\n")
        for row, amp, lv in rows:
            fh.write(f"{row[0].name},{row[1].name},{amp:.9g},{lv.name}\n")
    print(f"truth table -> {path}: " + ", ".join(lv.name for lv in got))
    return 0 if got == want else 1


def cmd_cascade(args):
    template, reference = _load_config(args)
    omega = _require_omega(template)
    net = circuits.build_nor_cascade(args.depth)
    system, binding, stats = netlist.compile_netlist(net, template, reference)
    chan = binding["channel_of_net"][net.outputs[0]]
    amps = system.drive_amplitudes()
    levels = (LogicLevel.ZERO, LogicLevel.ZERO)
    for net_idx, lv in zip(net.inputs, levels):
        for pair in binding["drives_of_input"][net_idx]:
            for di in pair:
                amps[di] = reference.drive_amplitude(lv)
    steps = int(args.settle / 0.025)
    try:
        _, traces = dynamics.rk4_integrate(system, dynamics.State.zero(system.n),
                                           dt=0.025, n_steps=steps, probes=[chan],
                                           omega_ref=omega, drive_amplitudes=amps)
    except dynamics.SimulationFault as e:
        print(f"simulation fault: {e}", file=sys.stderr)
        return 2
    path = _out(args, "cascade_trace.csv")
    dynamics.export_traces_csv(path, traces, omega)
    amp = dynamics.demodulate_amplitude(traces[0], omega, 50)
    lv = classify(amp, reference.u_ref, reference)
    print(f"cascade depth {args.depth}: output {amp:.6g} ({lv.name}) -> {path}")
    return 0 if lv == LogicLevel.ONE else 1


def cmd_adder(args):
    template, reference = _load_config(args)
    net = circuits.build_adder2()
    if args.backend == "golden":
        bad = 0
        path = _out(args, "adder_golden.csv")
        with open(path, "w") as fh:
            fh.write("a,b,sum,ok\n")
            for a in range(4):
                for b in range(4):
                    bits = [(a >> 0) & 1, (a >> 1) & 1, (b >> 0) & 1, (b >> 1) & 1]
                    res = netlist.golden_simulate(
                        net, [dict(zip(net.inputs, bits))])[0]
                    got = sum(int(res[o, 0]) << i for i, o in enumerate(net.outputs))
                    ok = got == a + b
                    bad += (not ok)
                    fh.write(f"{a},{b},{got},{int(ok)}\n")
        print(f"golden adder sweep -> {path} ({16 - bad}/16 correct)")
        return 0 if bad == 0 else 1
    omega = _require_omega(template)
    system, binding, stats = netlist.compile_netlist(net, template, reference)
    out_chans = [binding["channel_of_net"][o] for o in net.outputs]
    bad = 0
    path = _out(args, "adder_ode.csv")
    amps0 = system.drive_amplitudes()
    zero_f = reference.drive_amplitude(LogicLevel.ZERO)
    for net_idx in net.inputs:
        for pair in binding["drives_of_input"][net_idx]:
            for di in pair:
                amps0[di] = zero_f
    st0, _ = dynamics.rk4_integrate(system, dynamics.State.zero(system.n), dt=0.025,
                                    n_steps=int(args.settle / 0.025),
                                    omega_ref=template.omega, drive_amplitudes=amps0)
    with open(path, "w") as fh:
        fh.write("a,b,sum,s0_amp,s1_amp,s2_amp,ok\n")
        for a in range(4):
            for b in range(4):
                amps = amps0.copy()
                bits = [(a >> 0) & 1, (a >> 1) & 1, (b >> 0) & 1, (b >> 1) & 1]
                for net_idx, bit in zip(net.inputs, bits):
                    for pair in binding["drives_of_input"][net_idx]:
                        for di in pair:
                            amps[di] = reference.drive_amplitude(
                                LogicLevel.ONE if bit else LogicLevel.ZERO)
                try:
                    _, traces = dynamics.rk4_integrate(
                        system, st0, dt=0.025, n_steps=int(args.settle / 0.025),
                        probes=out_chans, omega_ref=template.omega,
                        drive_amplitudes=amps)
                except dynamics.SimulationFault as e:
                    print(f"simulation fault: {e}", file=sys.stderr)
                    return 2
                got = 0
                amps_out = []
                for i, tr in enumerate(traces):
                    amp = dynamics.demodulate_amplitude(tr, template.omega, 50)
                    amps_out.append(amp)
                    lv = classify(amp, reference.u_ref, reference)
                    if lv == LogicLevel.ONE:
                        got |= 1 << i
                    elif lv == LogicLevel.AMBIGUOUS:
                        got = -1
                ok = got == a + b
                bad += (not ok)
                fh.write(f"{a},{b},{got}," +
                         ",".join(f"{x:.9g}" for x in amps_out) + f",{int(ok)}\n")
    print(f"ODE adder sweep -> {path} ({16 - bad}/16 correct)")
    return 0 if bad == 0 else 1


def cmd_sqrt(args):
    template, reference = _load_config(args)
    if args.backend == "golden":
        got = circuits.golden_sqrt(args.n, width=args.width)
        want = math.isqrt(args.n)
        print(f"sqrt({args.n}) = {got} (floor oracle {want})")
        return 0 if got == want else 1
    # ODE backend at the configured width
    omega = _require_omega(template)
    net, ports = circuits.build_sqrt_fsm(args.width)
    system, binding, stats = netlist.compile_netlist(net, template, reference)
    clk = circuits.ClockSchedule()
    runner = SqrtOdeRunner(system, binding, net, ports, template, reference, clk,
                           dt=args.dt)
    got, amps = runner.run(args.n, n_clocks=args.width + 2,
                           progress=print if args.verbose else None)
    want = math.isqrt(args.n)
    path = _out(args, "sqrt_ode.csv")
    with open(path, "w") as fh:
        fh.write("bit,amplitude\n")
        for i, a in enumerate(amps):
            fh.write(f"{i},{a:.9g}\n")
    print(f"ODE sqrt({args.n}) = {got} (oracle {want}) -> {path}")
    return 0 if got == want else 1


class SqrtOdeRunner:
    """Clocked ODE execution of the square-root machine."""

    def __init__(self, system, binding, net, ports, template, reference, clock,
                 dt=0.025):
        self.system = system
        self.binding = binding
        self.net = net
        self.ports = ports
        self.template = template
        self.reference = reference
        self.clock = clock
        self.dt = dt

    def _set(self, amps, net_idx, bit):
        lv = LogicLevel.ONE if bit else LogicLevel.ZERO
        for pair in self.binding["drives_of_input"][net_idx]:
            for di in pair:
                amps[di] = self.reference.drive_amplitude(lv)

    def run(self, value, n_clocks, progress=None):
        omega = self.template.omega
        spp = int(round(1.0 / self.dt))
        cyc = self.clock.cycle_periods
        pulse_at = self.clock.pause_periods

        def controller(step, t, amps, tr):
            per = step // spp
            cycle, local = divmod(per, cyc)
            if local == 0:
                self._set(amps, self.ports.clock, 0)
                self._set(amps, self.ports.reset, 1 if cycle == 0 else 0)
                for i, n in enumerate(self.ports.value):
                    self._set(amps, n, (value >> i) & 1)
                if progress:
                    progress(f"sqrt cycle {cycle}")
            elif local == pulse_at:
                self._set(amps, self.ports.clock, 1)

        n_steps = n_clocks * cyc * spp
        guess_chans = [self.binding["channel_of_net"][n] for n in self.ports.guess]
        _, traces = dynamics.rk4_integrate(
            self.system, dynamics.State.zero(self.system.n), dt=self.dt,
            n_steps=n_steps, probes=guess_chans, omega_ref=omega,
            controller=controller, control_every=spp)
        got = 0
        amps_out = []
        for i, tr in enumerate(traces):
            amp = dynamics.demodulate_amplitude(tr, omega, 50)
            amps_out.append(amp)
            if classify(amp, self.reference.u_ref, self.reference) == LogicLevel.ONE:
                got |= 1 << i
        return got, amps_out


def cmd_assemble(args):
    with open(args.source) as fh:
        text = fh.read()
    try:
        image = isa.assemble(text)
    except isa.AssemblyError as e:
        print(f"assembly error: {e}", file=sys.stderr)
        return 2
    if args.output.endswith(".hex"):
        with open(args.output, "w") as fh:
            fh.write(image.hex_dump())
    else:
        with open(args.output, "wb") as fh:
            fh.write(bytes(image.data))
    print(f"{isa.program_size(image)} bytes -> {args.output}")
    return 0


def _load_image(path):
    if path.endswith(".hex"):
        with open(path) as fh:
            return isa.MemoryImage.from_hex_dump(fh.read())
    with open(path, "rb") as fh:
        return isa.MemoryImage(fh.read())


def cmd_emulate(args):
    image = _load_image(args.image) if args.image else isa.assemble(
        isa.sieve_program())
    try:
        mem, cycles, trace = isa.run_until_halt(image, args.max_cycles)
    except isa.EmulationError as e:
        print(f"emulation error: {e}", file=sys.stderr)
        return 2
    dump = _out(args, "memory.hex")
    with open(dump, "w") as fh:
        fh.write(mem.hex_dump())
    with open(_out(args, "trace.csv"), "w") as fh:
        fh.write(isa.trace_csv(trace))
    print(f"halted after {cycles} instructions -> {dump}")
    if args.check_sieve:
        ref = isa.reference_sieve(32)
        ok = all((mem.data[128 + n] != 0) == ref[n] for n in range(2, 32))
        print(f"sieve primality region {'matches' if ok else 'DISAGREES with'} "
              "the reference sieve")
        return 0 if ok else 1
    return 0


def cmd_cpu_run(args):
    template, reference = _load_config(args)
    image = _load_image(args.image) if args.image else isa.assemble(
        isa.sieve_program())
    net, ports, spec = circuits.build_processor()
    if args.backend == "golden":
        # derive the needed cycle count from the emulator
        mem_probe = image.copy()
        try:
            _, instructions, trace = isa.run_until_halt(mem_probe,
                                                        args.max_cycles)
        except isa.EmulationError as e:
            print(f"emulation error: {e}", file=sys.stderr)
            return 2
        cycles = args.cycles or (1 + sum(isa.clock_cycles_of(r.opcode)
                                         for r in trace) + 2)
        mem, events, _ = memharness.golden_processor_run(net, ports, image.copy(),
                                                         cycles, regs=spec.nets)
        with open(_out(args, "memory.hex"), "w") as fh:
            fh.write(mem.hex_dump())
        with open(_out(args, "events.csv"), "w") as fh:
            fh.write(memharness.event_log_csv(events))
        halt = memharness.halt_detect(events)
        ref_mem = image.copy()
        isa.run_until_halt(ref_mem, args.max_cycles)
        ok = bytes(mem.data) == bytes(ref_mem.data)
        print(f"golden netlist run: {cycles} cycles, halt detected at "
              f"{halt}, memory {'matches' if ok else 'DISAGREES with'} the emulator")
        return 0 if ok else 1
    omega = _require_omega(template)
    system, binding, stats = netlist.compile_netlist(net, template, reference)
    device = memharness.CosimDevice(image.copy(),
                                    memharness.SamplingPolicy(),
                                    reference)
    clk = circuits.ClockSchedule()

    def progress(cycle, events):
        reads = [e for e in events if e.kind == "read"]
        pc = reads[-1].address if reads else "-"
        print(f"cycle {cycle}/{args.cycles}: pc={pc}", flush=True)

    try:
        mem, events, snaps, _ = memharness.cosim_run(
            system, binding, ports, device, clk, n_cycles=args.cycles,
            omega=omega, dt=args.dt, progress=progress)
    except (memharness.CosimFault, dynamics.SimulationFault) as e:
        print(f"co-simulation fault: {e}", file=sys.stderr)
        return 2
    with open(_out(args, "memory.hex"), "w") as fh:
        fh.write(mem.hex_dump())
    with open(_out(args, "events.csv"), "w") as fh:
        fh.write(memharness.event_log_csv(events))
    for i, snap in enumerate(snaps):
        with open(_out(args, f"memory_{i:04d}.pgm"), "w") as fh:
            fh.write(memharness.export_pgm(isa.MemoryImage(snap)))
    print(f"co-simulation complete: {len(events)} port events, "
          f"{len(snaps)} snapshots -> {args.outdir}")
    return 0


def cmd_utm_run(args):
    rng = np.random.default_rng(args.seed)
    spec = utm.UtmSpec.random(rng) if args.random else utm.UtmSpec.stationary()
    init = {i: int(rng.integers(0, 5)) for i in range(-8, 9)} if args.random else {}
    ref_tape = utm.Tape(dict(init))
    state = 0
    for _ in range(args.steps):
        state = utm.utm_reference_step(spec, ref_tape, state)
    emu_tape, emu_state, n_instr = utm.run_utm_emulation(
        spec, utm.Tape(dict(init)), steps=args.steps)
    ok = emu_tape.snapshot() == ref_tape.snapshot() and emu_state == state
    path = _out(args, "utm_tape.csv")
    with open(path, "w") as fh:
        fh.write("position,symbol\n")
        for pos in sorted(emu_tape.snapshot()):
            fh.write(f"{pos},{emu_tape.cells[pos]}\n")
    print(f"{args.steps} Turing steps in {n_instr} instructions; "
          f"tape {'matches' if ok else 'DISAGREES with'} the direct interpreter "
          f"-> {path}")
    return 0 if ok else 1


def main(argv=None):
    p = argparse.ArgumentParser(prog="mechlogic",
                                description="mechanical logic compiler and simulator")
    p.add_argument("--config", help="calibration file (default: packaged operating set)")
    p.add_argument("--outdir", default="mechlogic-out", help="output directory")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("calibrate", help="sweep the operating frequency")
    s.add_argument("--grid-points", type=int, default=41)
    s.add_argument("--omega-min", type=float)
    s.add_argument("--omega-max", type=float)
    s.set_defaults(fn=cmd_calibrate)

    s = sub.add_parser("nor-map", help="steady-state response map as CSV")
    s.add_argument("--n", type=int, default=41)
    s.set_defaults(fn=cmd_nor_map)

    s = sub.add_parser("truth-table", help="four-row NOR truth table")
    s.add_argument("--golden", dest="backend", action="store_const",
                   const="steady", default="ode")
    s.add_argument("--ode", dest="backend", action="store_const", const="ode")
    s.add_argument("--settle", type=int, default=3000)
    s.set_defaults(fn=cmd_truth_table)

    s = sub.add_parser("cascade", help="NOR-identity cascade run")
    s.add_argument("--depth", type=int, default=3)
    s.add_argument("--settle", type=int, default=4000)
    s.set_defaults(fn=cmd_cascade)

    s = sub.add_parser("adder", help="2-bit adder sweep")
    s.add_argument("--golden", dest="backend", action="store_const",
                   const="golden", default="ode")
    s.add_argument("--ode", dest="backend", action="store_const", const="ode")
    s.add_argument("--settle", type=int, default=2500)
    s.set_defaults(fn=cmd_adder)

    s = sub.add_parser("sqrt", help="square-root machine")
    s.add_argument("--n", type=int, required=True)
    s.add_argument("--width", type=int, default=8)
    s.add_argument("--golden", dest="backend", action="store_const",
                   const="golden", default="golden")
    s.add_argument("--ode", dest="backend", action="store_const", const="ode")
    s.add_argument("--dt", type=float, default=0.025)
    s.add_argument("--verbose", action="store_true")
    s.set_defaults(fn=cmd_sqrt)

    s = sub.add_parser("assemble", help="assemble a program")
    s.add_argument("source")
    s.add_argument("-o", "--output", default="program.bin")
    s.set_defaults(fn=cmd_assemble)

    s = sub.add_parser("emulate", help="run a memory image on the emulator")
    s.add_argument("--image", help="binary or .hex image (default: sieve)")
    s.add_argument("--max-cycles", type=int, default=5000)
    s.add_argument("--check-sieve", action="store_true")
    s.set_defaults(fn=cmd_emulate)

    s = sub.add_parser("cpu-run", help="processor netlist run (golden or ODE)")
    s.add_argument("--image", help="binary or .hex image (default: sieve)")
    s.add_argument("--golden", dest="backend", action="store_const",
                   const="golden", default="golden")
    s.add_argument("--ode", dest="backend", action="store_const", const="ode")
    s.add_argument("--cycles", type=int, default=0)
    s.add_argument("--max-cycles", type=int, default=5000)
    s.add_argument("--dt", type=float, default=0.04)
    s.set_defaults(fn=cmd_cpu_run)

    s = sub.add_parser("utm-run", help="Turing machine emulation (ISA level)")
    s.add_argument("--steps", type=int, default=1000)
    s.add_argument("--random", action="store_true", default=True)
    s.add_argument("--stationary", dest="random", action="store_false")
    s.add_argument("--seed", type=int, default=0)
    s.set_defaults(fn=cmd_utm_run)

    args = p.parse_args(argv)
    return args.fn(args)


if __name__ == "__main__":
    sys.exit(main())
