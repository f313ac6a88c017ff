"""The eight-bit processor computing prime numbers.

Assembles the sieve, runs it on the cycle-accurate emulator, then executes
the same image on the golden processor netlist with the bridged memory and
writes publication-style PGM snapshots of the memory plane.  Pass --ode to
co-simulate a short load/add/store program on the full mechanical model
(roughly an hour).
"""

import sys

from mechlogic.circuits import build_processor
from mechlogic.isa import (
    assemble, clock_cycles_of, program_size, reference_sieve, run_until_halt,
    sieve_program,
)
from mechlogic.memharness import export_pgm, golden_processor_run, halt_detect
from mechlogic.isa import MemoryImage

text = sieve_program(32, 128)
image = assemble(text)
print(f"sieve program: {program_size(image)} bytes")
mem, instructions, trace = run_until_halt(image.copy(), 2000)
clocks = sum(clock_cycles_of(r.opcode) for r in trace)
primes = [n for n in range(2, 32) if mem.data[128 + n] == 0]
print(f"emulator: halted after {instructions} instructions "
      f"({clocks} clock cycles); primes {primes}")
assert [n for n in range(2, 32) if not reference_sieve(32)[n]] == primes

net, ports, spec = build_processor()
print(f"\nprocessor netlist: {net.n_gates} NOR gates "
      f"({6 * net.n_gates} oscillators when compiled)")
cycles = 1 + clocks + 4
mem2, events, _ = golden_processor_run(net, ports, image.copy(), cycles)
halt = halt_detect(events)
ok = bytes(mem2.data) == bytes(mem.data)
print(f"golden netlist: {cycles} cycles, halt detected at cycle {halt}, "
      f"memory {'matches' if ok else 'DIFFERS from'} the emulator")
for frac, tag in ((0.25, "early"), (1.0, "final")):
    k = int(frac * clocks)
    snap = image.copy()
    for e in events:
        if e.kind == "write" and e.cycle <= k:
            snap.data[e.address] = e.data
    with open(f"sieve_memory_{tag}.pgm", "w") as fh:
        fh.write(export_pgm(snap))
print("-> sieve_memory_early.pgm, sieve_memory_final.pgm")

if "--ode" in sys.argv:
    from mechlogic.calibrate import operating_template
    from mechlogic.circuits import ClockSchedule
    from mechlogic.memharness import CosimDevice, SamplingPolicy, cosim_run
    from mechlogic.netlist import compile_netlist
    template, ref = operating_template()
    program = """
        LDNX_AB 32
        SWAP_AB
        LDNX_AB 5
        APLUSB_TO_D
        SWAP_AB
        SWAP_BD
        SWAP_AB
        SAVE_AB
    """
    img = assemble(program)
    system, binding, stats = compile_netlist(net, template, ref)
    print("\nODE co-simulation:", stats)
    device = CosimDevice(img.copy(), SamplingPolicy(), ref)
    mem3, ev, snaps, _ = cosim_run(system, binding, ports, device,
                                   ClockSchedule(), n_cycles=13,
                                   omega=template.omega, dt=0.04,
                                   progress=lambda c, e: print(f"  cycle {c}"))
    print("writes:", [(e.address, e.data) for e in ev if e.kind == "write"])
