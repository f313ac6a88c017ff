"""Networks of damped harmonic oscillators with cubic couplings.

The mechanical substrate for everything else in this package: oscillators
carry a local mass/damping/stiffness, and are wired together with linear
springs, dashpots and cubic (gamma * u^2 * v) couplings, then driven by
harmonic forces and forward-integrated with a fixed-step RK4 scheme.

Amplitudes are read back out of displacement traces by quadrature
demodulation at the drive frequency.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

try:
    from numba import njit

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - numba is a declared dependency
    HAVE_NUMBA = False

    def njit(*args, **kwargs):
        def wrap(fn):
            return fn

        if args and callable(args[0]):
            return args[0]
        return wrap


TWO_PI = 2.0 * math.pi


class SimulationFault(RuntimeError):
    """A state entry became non-finite during integration.

    Carries the offending oscillator index/label and the simulation time so
    a failure inside a large compiled network can be traced back to a gate.
    """

    def __init__(self, message, oscillator=None, label=None, time=None):
        super().__init__(message)
        self.oscillator = oscillator
        self.label = label
        self.time = time


class DivergentResponseFault(ValueError):
    """Undamped oscillator evaluated exactly on resonance."""


@dataclass(frozen=True)
class Oscillator:
    """One degree of freedom: mass, local damping and grounded stiffness.

    ``c`` and ``k`` may be negative: compensating for coupling elements can
    push the local values below zero while the total diagonal stays at the
    intended template value.
    """

    m: float
    c: float
    k: float
    label: str = ""

    def __post_init__(self):
        if not self.m > 0.0:
            raise ValueError(f"oscillator mass must be positive, got {self.m}")

    @classmethod
    def from_modal(cls, m: float, q: float, omega0: float, label: str = "") -> "Oscillator":
        """Build from (mass, quality factor, natural frequency)."""
        if q <= 0.0 or omega0 <= 0.0:
            raise ValueError("Q and omega0 must be positive")
        return cls(m=m, c=m * omega0 / q, k=m * omega0 ** 2, label=label)

    @property
    def natural_frequency(self) -> float:
        if self.k < 0.0:
            raise ValueError(f"negative grounded stiffness {self.k} has no natural frequency")
        return math.sqrt(self.k / self.m)

    @property
    def quality_factor(self) -> float:
        return self.m * self.natural_frequency / self.c


@dataclass(frozen=True)
class LinearSpring:
    """Momentum-conserving spring between oscillators a and b."""

    a: int
    b: int
    k: float

    def __post_init__(self):
        if self.a == self.b:
            raise ValueError("spring endpoints must differ")


@dataclass(frozen=True)
class Dashpot:
    """Momentum-conserving damper between oscillators a and b."""

    a: int
    b: int
    c: float

    def __post_init__(self):
        if self.a == self.b:
            raise ValueError("dashpot endpoints must differ")


@dataclass(frozen=True)
class CubicCoupling:
    """Coupling derived from the potential V = gamma * u^2 * v.

    ``u`` is the squared side, ``v`` the linear side.  Force on u is
    -2*gamma*u*v, force on v is -gamma*u^2; gamma is signed.
    """

    u: int
    v: int
    gamma: float

    def __post_init__(self):
        if self.u == self.v:
            raise ValueError("cubic coupling endpoints must differ")


@dataclass(frozen=True)
class HarmonicDrive:
    """External force F0*sin(omega*t + phase) on one oscillator."""

    target: int
    amplitude: float
    omega: float
    phase: float = 0.0

    def __post_init__(self):
        if not self.omega > 0.0:
            raise ValueError("drive frequency must be positive")


@dataclass(frozen=True)
class State:
    """Displacements, velocities and time of a system snapshot."""

    u: np.ndarray
    v: np.ndarray
    t: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "u", np.asarray(self.u, dtype=np.float64))
        object.__setattr__(self, "v", np.asarray(self.v, dtype=np.float64))
        if self.u.shape != self.v.shape:
            raise ValueError("u and v must have matching shapes")
        if not (np.isfinite(self.u).all() and np.isfinite(self.v).all()):
            raise ValueError("state entries must be finite")

    @classmethod
    def zero(cls, n: int) -> "State":
        return cls(np.zeros(n), np.zeros(n), 0.0)


@dataclass
class Trace:
    """Uniformly sampled displacement record of one oscillator."""

    probe: int
    label: str
    sample_period: float
    t0: float
    samples: np.ndarray

    @property
    def times(self) -> np.ndarray:
        return self.t0 + self.sample_period * np.arange(len(self.samples))


class MechanicalSystem:
    """Immutable oscillator network plus packed arrays for the integrator."""

    def __init__(self, oscillators, springs=(), dashpots=(), cubics=(), drives=()):
        self.oscillators = tuple(oscillators)
        self.springs = tuple(springs)
        self.dashpots = tuple(dashpots)
        self.cubics = tuple(cubics)
        self.drives = tuple(drives)
        n = len(self.oscillators)
        for s in self.springs:
            if not (0 <= s.a < n and 0 <= s.b < n):
                raise ValueError(f"spring {s} out of range")
        for d in self.dashpots:
            if not (0 <= d.a < n and 0 <= d.b < n):
                raise ValueError(f"dashpot {d} out of range")
        for cc in self.cubics:
            if not (0 <= cc.u < n and 0 <= cc.v < n):
                raise ValueError(f"cubic {cc} out of range")
        for dr in self.drives:
            if not 0 <= dr.target < n:
                raise ValueError(f"drive {dr} out of range")

        self.m = np.array([o.m for o in self.oscillators], dtype=np.float64)
        self.c = np.array([o.c for o in self.oscillators], dtype=np.float64)
        self.k = np.array([o.k for o in self.oscillators], dtype=np.float64)
        self.labels = tuple(o.label for o in self.oscillators)

        self._sa = np.array([s.a for s in self.springs], dtype=np.int64)
        self._sb = np.array([s.b for s in self.springs], dtype=np.int64)
        self._sk = np.array([s.k for s in self.springs], dtype=np.float64)
        self._da = np.array([d.a for d in self.dashpots], dtype=np.int64)
        self._db = np.array([d.b for d in self.dashpots], dtype=np.int64)
        self._dc = np.array([d.c for d in self.dashpots], dtype=np.float64)
        self._cu = np.array([cc.u for cc in self.cubics], dtype=np.int64)
        self._cv = np.array([cc.v for cc in self.cubics], dtype=np.int64)
        self._cg = np.array([cc.gamma for cc in self.cubics], dtype=np.float64)
        self._di = np.array([dr.target for dr in self.drives], dtype=np.int64)
        self._dF = np.array([dr.amplitude for dr in self.drives], dtype=np.float64)
        self._dw = np.array([dr.omega for dr in self.drives], dtype=np.float64)
        self._dp = np.array([dr.phase for dr in self.drives], dtype=np.float64)

    @property
    def n(self) -> int:
        return len(self.oscillators)

    def drive_frequency(self) -> float:
        """Common angular frequency of all drives."""
        if not self.drives:
            raise ValueError("system has no drives; pass omega_ref explicitly")
        omegas = {dr.omega for dr in self.drives}
        if len(omegas) != 1:
            raise ValueError(f"drives use multiple frequencies: {sorted(omegas)}")
        return self.drives[0].omega

    def drive_amplitudes(self) -> np.ndarray:
        """Copy of the built-in drive amplitudes (mutable run-time table)."""
        return self._dF.copy()

    def total_diagonal_stiffness(self) -> np.ndarray:
        """Local stiffness plus each incident spring's diagonal contribution."""
        total = self.k.copy()
        for s in self.springs:
            total[s.a] += s.k
            total[s.b] += s.k
        return total

    def total_diagonal_damping(self) -> np.ndarray:
        total = self.c.copy()
        for d in self.dashpots:
            total[d.a] += d.c
            total[d.b] += d.c
        return total


class SystemBuilder:
    """Accumulates oscillators and elements, then freezes a MechanicalSystem.

    Mutating accessors allow compensation passes to adjust local stiffness
    and damping before finalization.
    """

    def __init__(self):
        self._osc: list[Oscillator] = []
        self._springs: list[LinearSpring] = []
        self._dashpots: list[Dashpot] = []
        self._cubics: list[CubicCoupling] = []
        self._drives: list[HarmonicDrive] = []
        self.finalized = False

    def _check_open(self):
        if self.finalized:
            raise RuntimeError("builder already finalized")

    def add_oscillator(self, osc: Oscillator) -> int:
        self._check_open()
        self._osc.append(osc)
        return len(self._osc) - 1

    def add_spring(self, a: int, b: int, k: float) -> None:
        self._check_open()
        self._springs.append(LinearSpring(a, b, k))

    def add_dashpot(self, a: int, b: int, c: float) -> None:
        self._check_open()
        self._dashpots.append(Dashpot(a, b, c))

    def add_cubic(self, u: int, v: int, gamma: float) -> None:
        self._check_open()
        self._cubics.append(CubicCoupling(u, v, gamma))

    def add_drive(self, target: int, amplitude: float, omega: float, phase: float = 0.0) -> int:
        self._check_open()
        self._drives.append(HarmonicDrive(target, amplitude, omega, phase))
        return len(self._drives) - 1

    def adjust_local_stiffness(self, index: int, delta: float) -> None:
        self._check_open()
        o = self._osc[index]
        self._osc[index] = Oscillator(o.m, o.c, o.k + delta, o.label)

    def adjust_local_damping(self, index: int, delta: float) -> None:
        self._check_open()
        o = self._osc[index]
        self._osc[index] = Oscillator(o.m, o.c + delta, o.k, o.label)

    def oscillator(self, index: int) -> Oscillator:
        return self._osc[index]

    @property
    def n_oscillators(self) -> int:
        return len(self._osc)

    @property
    def n_drives(self) -> int:
        return len(self._drives)

    def counts(self) -> dict:
        return {
            "oscillators": len(self._osc),
            "springs": len(self._springs),
            "dashpots": len(self._dashpots),
            "cubics": len(self._cubics),
            "drives": len(self._drives),
        }

    def finalize(self) -> MechanicalSystem:
        self._check_open()
        self.finalized = True
        return MechanicalSystem(self._osc, self._springs, self._dashpots, self._cubics, self._drives)


def compute_accelerations(system: MechanicalSystem, state: State,
                          drive_amplitudes: np.ndarray | None = None) -> np.ndarray:
    """Acceleration of every oscillator at the given state.

    Element contributions are summed in insertion order so results are
    bit-reproducible.  Raises SimulationFault on a non-finite total.
    """
    if state.u.shape[0] != system.n:
        raise ValueError("state dimension does not match system")
    u, v = state.u, state.v
    with np.errstate(over="ignore", invalid="ignore"):
        force = -system.c * v - system.k * u
    for s in system.springs:
        f = s.k * (u[s.b] - u[s.a])
        force[s.a] += f
        force[s.b] -= f
    for d in system.dashpots:
        f = d.c * (v[d.b] - v[d.a])
        force[d.a] += f
        force[d.b] -= f
    for cc in system.cubics:
        force[cc.u] += -2.0 * cc.gamma * u[cc.u] * u[cc.v]
        force[cc.v] += -cc.gamma * u[cc.u] ** 2
    amps = system._dF if drive_amplitudes is None else drive_amplitudes
    for j, dr in enumerate(system.drives):
        force[dr.target] += amps[j] * math.sin(dr.omega * state.t + dr.phase)
    if not np.isfinite(force).all():
        bad = int(np.flatnonzero(~np.isfinite(force))[0])
        raise SimulationFault(
            f"non-finite force on oscillator {bad} ({system.labels[bad]!r}) at t={state.t}",
            oscillator=bad, label=system.labels[bad], time=state.t)
    return force / system.m


@njit(cache=True)
def _rk4_chunk(n_steps, dt, t0, m, c, k, u, v,
               sa, sb, sk, da, db, dc, cu, cv, cg, di, dF, dw, dp,
               probes, samples, sample_every, sample_base, step_base, acc):
    """Fixed-step RK4 over one chunk; returns faulting oscillator or -1.

    Forces are accumulated element by element in insertion order.  State is
    checked for non-finite entries after every step.
    """
    a1, a2, a3, a4 = acc[0], acc[1], acc[2], acc[3]
    ut, vt = acc[4], acc[5]
    n = m.shape[0]
    for s in range(n_steps):
        t = t0 + s * dt
        for stage in range(4):
            if stage == 0:
                ts = t
                for i in range(n):
                    ut[i] = u[i]
                    vt[i] = v[i]
            elif stage == 1:
                ts = t + 0.5 * dt
                for i in range(n):
                    ut[i] = u[i] + 0.5 * dt * v[i]
                    vt[i] = v[i] + 0.5 * dt * a1[i]
            elif stage == 2:
                ts = t + 0.5 * dt
                for i in range(n):
                    ut[i] = u[i] + 0.5 * dt * v[i] + 0.25 * dt * dt * a1[i]
                    vt[i] = v[i] + 0.5 * dt * a2[i]
            else:
                ts = t + dt
                for i in range(n):
                    ut[i] = u[i] + dt * v[i] + 0.5 * dt * dt * a2[i]
                    vt[i] = v[i] + dt * a3[i]
            if stage == 0:
                out = a1
            elif stage == 1:
                out = a2
            elif stage == 2:
                out = a3
            else:
                out = a4
            for i in range(n):
                out[i] = -c[i] * vt[i] - k[i] * ut[i]
            for e in range(sa.shape[0]):
                ia = sa[e]
                ib = sb[e]
                f = sk[e] * (ut[ib] - ut[ia])
                out[ia] += f
                out[ib] -= f
            for e in range(da.shape[0]):
                ia = da[e]
                ib = db[e]
                f = dc[e] * (vt[ib] - vt[ia])
                out[ia] += f
                out[ib] -= f
            for e in range(cu.shape[0]):
                iu = cu[e]
                iv = cv[e]
                g = cg[e]
                out[iu] += -2.0 * g * ut[iu] * ut[iv]
                out[iv] += -g * ut[iu] * ut[iu]
            for e in range(di.shape[0]):
                out[di[e]] += dF[e] * np.sin(dw[e] * ts + dp[e])
            for i in range(n):
                out[i] /= m[i]
        for i in range(n):
            un = u[i] + dt * v[i] + dt * dt / 6.0 * (a1[i] + a2[i] + a3[i])
            vn = v[i] + dt / 6.0 * (a1[i] + 2.0 * a2[i] + 2.0 * a3[i] + a4[i])
            u[i] = un
            v[i] = vn
            if not (np.isfinite(un) and np.isfinite(vn)):
                return i, s
        gstep = step_base + s + 1
        if sample_every > 0 and gstep % sample_every == 0:
            row = sample_base + gstep // sample_every - 1
            for p in range(probes.shape[0]):
                samples[row, p] = u[probes[p]]
    return -1, n_steps


def rk4_integrate(system: MechanicalSystem,
                  initial: State,
                  dt: float,
                  n_steps: int,
                  probes=(),
                  omega_ref: float | None = None,
                  sample_every: int | None = None,
                  controller=None,
                  control_every: int | None = None,
                  drive_amplitudes: np.ndarray | None = None):
    """Integrate ``n_steps`` of classic RK4 with step ``dt`` drive periods.

    ``dt`` is a fraction of the reference period 2*pi/omega_ref (the common
    drive frequency by default) and must lie in (0, 0.05].  ``probes`` are
    oscillator indices whose displacement is recorded every
    ``sample_every``-th step (default: period/8 Nyquist margin).

    ``controller(step, t, amps, tracebuf)`` is invoked every
    ``control_every`` steps and may mutate the drive amplitude table in
    place; this is how clock schedules and the memory harness inject
    time-varying inputs without touching the immutable system.

    Returns ``(final_state, traces)``.
    """
    if not 0.0 < dt <= 0.05:
        raise ValueError(f"dt must be in (0, 0.05] drive periods, got {dt}")
    if omega_ref is None:
        omega_ref = system.drive_frequency()
    period = TWO_PI / omega_ref
    dt_time = dt * period
    if sample_every is None:
        # largest stride that keeps the sample period within T/8
        sample_every = max(1, int(math.floor(0.125 / dt + 1e-9)))
    if sample_every * dt > 0.125 + 1e-12:
        raise ValueError("sample period exceeds 1/8 drive period")
    if initial.u.shape[0] != system.n:
        raise ValueError("initial state does not match system size")

    u = initial.u.copy()
    v = initial.v.copy()
    amps = system.drive_amplitudes() if drive_amplitudes is None else np.asarray(
        drive_amplitudes, dtype=np.float64).copy()
    if amps.shape[0] != len(system.drives):
        raise ValueError("drive amplitude table size mismatch")

    probes = np.asarray(list(probes), dtype=np.int64)
    n_samples = n_steps // sample_every
    samples = np.empty((n_samples, probes.shape[0]), dtype=np.float64)
    acc = np.empty((6, system.n), dtype=np.float64)

    if control_every is None:
        control_every = n_steps if controller is None else max(1, int(round(1.0 / dt)))
    done = 0
    while done < n_steps:
        if controller is not None and done % control_every == 0:
            controller(done, initial.t + done * dt_time, amps, samples[: done // sample_every])
        todo = min(control_every - (done % control_every) or control_every, n_steps - done)
        bad, bad_step = _rk4_chunk(todo, dt_time, initial.t + done * dt_time,
                                   system.m, system.c, system.k, u, v,
                                   system._sa, system._sb, system._sk,
                                   system._da, system._db, system._dc,
                                   system._cu, system._cv, system._cg,
                                   system._di, amps, system._dw, system._dp,
                                   probes, samples, sample_every, 0, done, acc)
        if bad >= 0:
            t_fault = initial.t + (done + bad_step + 1) * dt_time
            raise SimulationFault(
                f"non-finite state on oscillator {bad} ({system.labels[bad]!r}) "
                f"near t={t_fault:.6g} (force bounds exceeded can make an "
                f"effective stiffness negative and the motion divergent)",
                oscillator=bad, label=system.labels[bad], time=t_fault)
        done += todo
    if controller is not None:
        controller(done, initial.t + done * dt_time, amps, samples)

    final = State(u, v, initial.t + n_steps * dt_time)
    traces = [
        Trace(probe=int(p), label=system.labels[int(p)],
              sample_period=sample_every * dt_time,
              t0=initial.t + sample_every * dt_time,
              samples=samples[:, j].copy())
        for j, p in enumerate(probes)
    ]
    return final, traces


def demodulate_amplitude(trace: Trace, omega: float, window_periods: int) -> float:
    """Quadrature amplitude of a trace over a trailing integer-period window.

    A = (2/Tw) * sqrt((integral u sin wt)^2 + (integral u cos wt)^2) with a
    rectangular window; phase-insensitive by construction.
    """
    if window_periods < 1:
        raise ValueError("window must cover at least one period")
    period = TWO_PI / omega
    n_win = int(round(window_periods * period / trace.sample_period))
    if n_win > len(trace.samples):
        raise ValueError(
            f"trace ({len(trace.samples)} samples) shorter than "
            f"{window_periods}-period window ({n_win} samples)")
    t = trace.times[-n_win:]
    u = trace.samples[-n_win:]
    tw = n_win * trace.sample_period
    s = np.sum(u * np.sin(omega * t)) * trace.sample_period
    c = np.sum(u * np.cos(omega * t)) * trace.sample_period
    return 2.0 / tw * math.hypot(s, c)


def linear_response(osc: Oscillator, k_eff: float, f0: float, omega: float):
    """Steady-state amplitude and phase of a driven linear oscillator.

    The caller supplies the effective stiffness (which may include a
    nonlinear detuning term).  Returns (amplitude, phase).
    """
    re = k_eff - osc.m * omega ** 2
    im = osc.c * omega
    denom = math.hypot(re, im)
    if denom == 0.0:
        raise DivergentResponseFault(
            "undamped oscillator driven exactly on resonance has no finite response")
    return f0 / denom, math.atan2(-im, re)


def total_energy(system: MechanicalSystem, state: State) -> float:
    """Kinetic plus quadratic plus cubic potential energy (drives excluded)."""
    u, v = state.u, state.v
    e = 0.5 * float(np.sum(system.m * v ** 2)) + 0.5 * float(np.sum(system.k * u ** 2))
    for s in system.springs:
        e += 0.5 * s.k * (u[s.b] - u[s.a]) ** 2
    for cc in system.cubics:
        e += cc.gamma * u[cc.u] ** 2 * u[cc.v]
    return e


def export_traces_csv(path, traces, omega_ref: float) -> None:
    """Write traces as CSV: time in drive periods, displacements at 9 digits."""
    if not traces:
        raise ValueError("no traces to export")
    n = min(len(tr.samples) for tr in traces)
    period = TWO_PI / omega_ref
    t = traces[0].times[:n] / period
    with open(path, "w") as fh:
        fh.write("time," + ",".join(tr.label or f"osc{tr.probe}" for tr in traces) + "\n")
        for i in range(n):
            row = ",".join(f"{tr.samples[i]:.9g}" for tr in traces)
            fh.write(f"{t[i]:.9g},{row}\n")
