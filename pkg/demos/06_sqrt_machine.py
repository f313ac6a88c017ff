"""The binary-search square-root machine.

Golden-level: watch one result bit settle per clock, most significant
first, for sqrt(2809) -> 53; then verify every 16-bit input against the
integer-square-root oracle in one batched run.  Pass --ode to integrate
the width-4 machine computing sqrt(9) = 3 (several minutes).
"""

import math
import sys

import numpy as np

from mechlogic.circuits import GoldenMachine, build_sqrt_fsm
from mechlogic.netlist import bus_value

net, ports = build_sqrt_fsm(8)
print(f"square-root machine: {net.n_gates} NOR gates, "
      f"combinational depth {net.combinational_depth()}")

value = 2809
m = GoldenMachine(net, ports.clock)
bits = {n: (value >> i) & 1 for i, n in enumerate(ports.value)}
m.cycle({**bits, ports.reset: 1})
print(f"computing sqrt({value}):")
for clock in range(1, 10):
    m.cycle({**bits, ports.reset: 0})
    m.settle({**bits, ports.reset: 0})
    guess = bus_value(m.values, list(ports.guess))
    print(f"  clock {clock}: guess = {guess:3d} = {guess:08b}")

vals = np.arange(65536)
mb = GoldenMachine(net, ports.clock)
vbits = {n: ((vals >> i) & 1).astype(np.uint8) for i, n in enumerate(ports.value)}
mb.cycle({**vbits, ports.reset: np.ones(65536, np.uint8)})
for _ in range(9):
    mb.cycle({**vbits, ports.reset: np.zeros(65536, np.uint8)})
mb.settle({**vbits, ports.reset: np.zeros(65536, np.uint8)})
got = np.zeros(65536, dtype=np.int64)
for i, n in enumerate(ports.guess):
    got |= mb.values[n].astype(np.int64) << i
ok = np.array_equal(got, np.floor(np.sqrt(vals)).astype(np.int64))
print(f"exhaustive check over [0, 65535]: {'all correct' if ok else 'MISMATCH'}")

if "--ode" in sys.argv:
    from mechlogic.calibrate import operating_template
    from mechlogic.circuits import ClockSchedule
    from mechlogic.cli import SqrtOdeRunner
    from mechlogic.netlist import compile_netlist
    template, ref = operating_template()
    net4, ports4 = build_sqrt_fsm(4)
    system, binding, stats = compile_netlist(net4, template, ref)
    print("\nODE run (width 4):", stats)
    runner = SqrtOdeRunner(system, binding, net4, ports4, template, ref,
                           ClockSchedule(), dt=0.03)
    got, amps = runner.run(9, n_clocks=6, progress=print)
    print(f"integrated sqrt(9) = {got}")
