"""The mechanical latch under a pulse/pause clock.

Stores a bit on the enable pulse, holds it while the data input toggles,
and shows the publication-style timing property: the (delay-chained)
output does not start moving until the latching pulse has ended.
"""

import numpy as np

from mechlogic.calibrate import operating_template
from mechlogic.circuits import ClockSchedule
from mechlogic.gates import LogicLevel
from mechlogic.netlist import NetlistBuilder
from mechlogic.run import CompiledRun, sliding_amplitude

template, ref = operating_template()
b = NetlistBuilder("latch")
data = b.input_net("data")
enable = b.input_net("enable")
b.output_net(b.build_latch(data, enable), "q")
run = CompiledRun(b.freeze(), template, ref)
q = run.netlist.outputs[0]
clk = ClockSchedule()
print("latch stats:", run.stats, "| clock:", clk)

def show(tag):
    print(f"  {tag}: q = {run.amplitude(q) / ref.u_ref:.3f} ({run.level(q).name})")

run.set_inputs({data: 0, enable: 0})
run.run(clk.pause_periods, probes=[q])
run.set_input(enable, 1)
run.run(clk.pulse_periods, probes=[q])
run.set_inputs({data: 0, enable: 0})
run.run(6000, probes=[q])
show("initialized with data=0 pulse")

run.set_input(data, 1)
run.run(12000, probes=[q])
show("data raised, enable idle (hold)")

t_pulse_start = run.state.t
run.set_input(enable, 1)
run.run(clk.pulse_periods, probes=[q])
times, amps = sliding_amplitude(run.traces[q], run.omega, 50)
print(f"  during the pulse: output stays in the zero band "
      f"(max {amps.max() / ref.u_ref:.3f})")
run.set_input(enable, 0)
run.run(8000, probes=[q])
show("after the pulse (stored 1)")
times2, amps2 = sliding_amplitude(run.traces[q], run.omega, 50)
depart = times2[np.flatnonzero(amps2 > 0.67 * ref.u_ref)[0]]
t_end = t_pulse_start + clk.pulse_periods * run.period
print(f"  output departs {((depart - t_end) / run.period):.0f} periods "
      f"after the pulse ends")
