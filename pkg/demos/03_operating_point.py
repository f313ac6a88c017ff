"""Why the operating constants are a calibration artifact.

The packaged reference constants define the block's structure, but a sweep
shows no drive frequency gives them a valid truth table: the channel's
damping wall keeps its amplitude far from the logic bands.  The packaged
operating set keeps every reference value that can be kept and re-derives
the channel stiffness, insulator-channel coupling, channel drive and the
two slow/fast quality factors; this script re-validates it from scratch.
"""

import numpy as np

from mechlogic.calibrate import (
    CalibrationError, calibrate_operating_frequency, operating_template,
    truth_table_margin,
)
from mechlogic.gates import LogicReference, NorTemplate

reference_set = NorTemplate()
ref = LogicReference()
print("reference constants:", reference_set)
try:
    calibrate_operating_frequency(reference_set, ref,
                                  omega_grid=np.linspace(2.0, 14.0, 25), refine=0)
    print("unexpected: reference set calibrated")
except CalibrationError as e:
    print(f"reference set: {e}")

template, _ = operating_template()
print("\noperating set:", template)
margin = truth_table_margin(template, ref, template.omega, corners=True)
print(f"worst-case corner margin at omega*: {margin:+.4f} (band units)")

omega, margin = calibrate_operating_frequency(
    template, ref, omega_grid=np.linspace(0.98 * template.omega,
                                          1.02 * template.omega, 9))
print(f"local frequency sweep confirms omega* = {omega:.6f} "
      f"(shipped {template.omega:.6f}), margin {margin:+.4f}")
