"""The mechanical NOR gate: steady-state map, truth table, reconstruction.

Writes the two-input response map as CSV (force-force plane, channel
amplitude and logic classification), runs the four truth-table rows by
direct integration, and shows how a three-gate cascade squeezes input
spread out of the output level.
"""

import numpy as np

from mechlogic.calibrate import (
    INPUT_ROWS, nor_response_map, operating_template, rest_reachable_state,
    truth_table_ode,
)
from mechlogic.circuits import build_nor_cascade
from mechlogic.gates import LogicLevel
from mechlogic.run import CompiledRun

template, ref = operating_template()
print(f"operating frequency: {template.omega:.4f} rad per time unit")

f_grid, amp, lvl = nor_response_map(template, ref, n=21)
with open("nor_map.csv", "w") as fh:
    fh.write("F_G1,F_G2,u_C_amplitude,level\n")
    for i, f1 in enumerate(f_grid):
        for j, f2 in enumerate(f_grid):
            fh.write(f"{f1:.9g},{f2:.9g},{amp[i, j]:.9g},{lvl[i, j]}\n")
print("steady-state response map -> nor_map.csv")

print("\ntruth table, semi-analytic vs integrated:")
table = truth_table_ode(template, settle_periods=3000, reference=ref)
for row in INPUT_ROWS:
    st = rest_reachable_state(template, ref.drive_amplitude(row[0]),
                              ref.drive_amplitude(row[1]))
    lv, a = table[row]
    print(f"  {row[0].name:4}/{row[1].name:4}: steady {st.amp_chan / ref.u_ref:.3f}, "
          f"integrated {a / ref.u_ref:.3f} -> {lv.name}")

print("\nlevel reconstruction over the zero band (output should be One):")
lo, hi = ref.band_corners(LogicLevel.ZERO)
for depth in (1, 3):
    run = CompiledRun(build_nor_cascade(depth), template, ref)
    out = run.netlist.outputs[0]
    amps = []
    for f1 in np.linspace(lo, hi, 5):
        for f2 in np.linspace(lo, hi, 5):
            run.reset_state()
            run.set_input(run.netlist.inputs[0], float(f1))
            run.set_input(run.netlist.inputs[1], float(f2))
            run.run(4000 + 1500 * depth, probes=[out])
            amps.append(run.amplitude(out) / ref.u_ref)
    amps = np.array(amps)
    print(f"  {depth} gate(s): output in [{amps.min():.4f}, {amps.max():.4f}] "
          f"(spread {amps.max() - amps.min():.5f})")
