"""Forced harmonic oscillator: integrator vs closed-form response.

Drives a single damped oscillator past resonance, compares the demodulated
steady-state amplitude with the analytic transfer function, and measures
the integrator's convergence order on a nonlinear benchmark.
"""

import numpy as np

from mechlogic.dynamics import (
    CubicCoupling, HarmonicDrive, LinearSpring, MechanicalSystem, Oscillator,
    State, demodulate_amplitude, linear_response, rk4_integrate,
)

osc = Oscillator.from_modal(m=1.0, q=25.0, omega0=3.0)
print(f"oscillator: m=1, Q=25, natural frequency {osc.natural_frequency:.3f}")

print(f"{'omega':>8} {'integrated':>12} {'analytic':>12} {'rel err':>10}")
for omega in (2.0, 2.6, 2.9, 3.0, 3.1, 3.5, 4.0):
    system = MechanicalSystem([osc], drives=[HarmonicDrive(0, 0.8, omega)])
    periods = int(10 * 25 * 3.0 / omega) + 60
    _, traces = rk4_integrate(system, State.zero(1), dt=0.025,
                              n_steps=periods * 40, probes=[0])
    got = demodulate_amplitude(traces[0], omega, 25)
    want, _ = linear_response(osc, osc.k, 0.8, omega)
    print(f"{omega:8.2f} {got:12.6f} {want:12.6f} {abs(got - want) / want:10.2e}")

# convergence order: halving dt should shrink the end-state error ~16x
bench = MechanicalSystem(
    [Oscillator(1.0, 0.05, 9.0), Oscillator(2.0, 0.08, 6.0)],
    springs=[LinearSpring(0, 1, 0.7)],
    cubics=[CubicCoupling(0, 1, 0.4)],
    drives=[HarmonicDrive(0, 1.0, 2.5)],
)

def end_state(dt):
    f, _ = rk4_integrate(bench, State([0.1, -0.05], [0.0, 0.02]),
                         dt=dt, n_steps=int(round(5 / dt)))
    return np.concatenate([f.u, f.v])

ref = end_state(0.04 / 8)
e1 = np.linalg.norm(end_state(0.04) - ref)
e2 = np.linalg.norm(end_state(0.02) - ref)
print(f"\nconvergence order: {np.log2(e1 / e2):.2f} (classic RK4 -> 4)")
