"""The NOR building block and the rules for wiring blocks into networks.

A NOR instance is six oscillators: two physical gates per logical input
(one spring-coupled, one dashpot-coupled, so their back-actions on the
driving channel interfere destructively), an insulator that integrates the
mean-square gate motion into a slow offset, and a channel whose effective
stiffness - and therefore vibration amplitude - that offset controls.

Binary levels ride on vibration amplitude: a zero is 36.5%-67% of the
reference, a one is 92%-102.5%.  Composition couples an output channel to a
downstream gate pair with a spring of k = F_R/u_R plus the matched dashpot,
and the local stiffness/damping of both endpoints is compensated so every
oscillator keeps its free-standing template values.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field, replace

from .dynamics import Oscillator, SystemBuilder

TWO_PI = 2.0 * math.pi


class LogicLevel(enum.Enum):
    ZERO = 0
    ONE = 1
    AMBIGUOUS = 2


# Amplitude bands as fractions of the reference force/displacement.
ZERO_BAND = (0.365, 0.67)
ONE_BAND = (0.92, 1.025)
# Nominal drive levels sit at the band midpoints.
ZERO_LEVEL = 0.5 * (ZERO_BAND[0] + ZERO_BAND[1])  # 0.5175
ONE_LEVEL = 0.5 * (ONE_BAND[0] + ONE_BAND[1])    # 0.9725


@dataclass(frozen=True)
class LogicReference:
    """Reference force/displacement and the amplitude bands built on them."""

    f_ref: float = 0.7
    u_ref: float = 0.0182
    zero_band: tuple = ZERO_BAND
    one_band: tuple = ONE_BAND

    def __post_init__(self):
        if self.zero_band[1] >= self.one_band[0]:
            raise ValueError("zero and one bands must be disjoint")
        for level in (ZERO_LEVEL, ONE_LEVEL):
            band = self.zero_band if level == ZERO_LEVEL else self.one_band
            if not band[0] < level < band[1]:
                raise ValueError("nominal level outside its band")

    @property
    def k_couple(self) -> float:
        """Inter-block spring constant F_R/u_R (~38.4615)."""
        return self.f_ref / self.u_ref

    def drive_amplitude(self, level: LogicLevel) -> float:
        if level == LogicLevel.ZERO:
            return ZERO_LEVEL * self.f_ref
        if level == LogicLevel.ONE:
            return ONE_LEVEL * self.f_ref
        raise ValueError("can only drive ZERO or ONE")

    def band_corners(self, level: LogicLevel) -> tuple:
        band = self.zero_band if level == LogicLevel.ZERO else self.one_band
        return band[0] * self.f_ref, band[1] * self.f_ref


def classify(amplitude: float, reference: float, bands: LogicReference | None = None) -> LogicLevel:
    """Map an amplitude to ZERO/ONE/AMBIGUOUS relative to a reference scale.

    Band edges are inclusive.  ``reference`` is F_R for forces and u_R for
    displacements; classification is the same pure function of the ratio.
    """
    if amplitude < 0.0:
        raise ValueError("amplitude must be non-negative")
    bands = bands or LogicReference()
    r = amplitude / reference
    if bands.zero_band[0] <= r <= bands.zero_band[1]:
        return LogicLevel.ZERO
    if bands.one_band[0] <= r <= bands.one_band[1]:
        return LogicLevel.ONE
    return LogicLevel.AMBIGUOUS


def classification_margin(amplitude: float, reference: float, expected: LogicLevel,
                          bands: LogicReference | None = None) -> float:
    """Signed distance (in band-fraction units) from the nearest edge of the
    expected band; positive inside, negative outside."""
    bands = bands or LogicReference()
    band = bands.zero_band if expected == LogicLevel.ZERO else bands.one_band
    r = amplitude / reference
    return min(r - band[0], band[1] - r)


@dataclass(frozen=True)
class NorTemplate:
    """Free-standing parameters of one NOR block.

    Defaults are the reference constant set; an operating set with a valid
    calibrated drive frequency is distributed as packaged calibration data
    (see ``mechlogic.calibrate.operating_template``).
    """

    m_gate: float = 0.2
    q_gate: float = 200.0
    k_gate: float = 25.582
    m_ins: float = 1.0
    q_ins: float = 1.5
    k_ins: float = 0.394784
    m_chan: float = 6.0
    q_chan: float = 1.5
    k_chan: float = 14311.8
    gamma_ig: float = 12.0
    gamma_ic: float = 6.0
    f_chan: float = 1.326
    omega: float | None = None  # calibrated operating frequency

    def __post_init__(self):
        for name in ("m_gate", "m_ins", "m_chan"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")
        for name in ("q_gate", "q_ins", "q_chan"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")

    def gate_oscillator(self, label: str = "gate") -> Oscillator:
        return Oscillator.from_modal(self.m_gate, self.q_gate,
                                     math.sqrt(self.k_gate / self.m_gate), label)

    def insulator_oscillator(self, label: str = "ins") -> Oscillator:
        return Oscillator.from_modal(self.m_ins, self.q_ins,
                                     math.sqrt(self.k_ins / self.m_ins), label)

    def channel_oscillator(self, label: str = "chan") -> Oscillator:
        return Oscillator.from_modal(self.m_chan, self.q_chan,
                                     math.sqrt(self.k_chan / self.m_chan), label)

    def require_omega(self) -> float:
        if self.omega is None:
            raise ValueError("template has no calibrated operating frequency; "
                             "run calibration or load the packaged operating set")
        return self.omega

    def with_omega(self, omega: float) -> "NorTemplate":
        return replace(self, omega=omega)


@dataclass(frozen=True)
class NorInstance:
    """Oscillator indices of one instantiated NOR block.

    Suffix ``_s`` marks the spring-coupled physical gate of a logical input,
    ``_d`` the dashpot-coupled one.
    """

    gate1_s: int
    gate1_d: int
    gate2_s: int
    gate2_d: int
    insulator: int
    channel: int
    drive: int  # index of the channel drive in the builder's drive list

    def input_pair(self, which: int) -> tuple:
        if which == 0:
            return self.gate1_s, self.gate1_d
        if which == 1:
            return self.gate2_s, self.gate2_d
        raise IndexError("logical input must be 0 or 1")


class GateCompiler:
    """Owns a SystemBuilder and enforces the block wiring rules.

    Tracks which logical inputs are already driven or connected, and applies
    the diagonal compensation on every connect so each oscillator keeps its
    template stiffness/damping.
    """

    def __init__(self, template: NorTemplate, reference: LogicReference | None = None):
        self.template = template
        self.reference = reference or LogicReference()
        self.builder = SystemBuilder()
        self.instances: list[NorInstance] = []
        self._input_used: dict = {}
        self.n_connections = 0

    def instantiate_nor(self, label: str = "") -> NorInstance:
        """Add one NOR block: 6 oscillators, 5 cubics, 1 channel drive."""
        t = self.template
        b = self.builder
        tag = label or f"nor{len(self.instances)}"
        g1s = b.add_oscillator(t.gate_oscillator(f"{tag}.g1s"))
        g1d = b.add_oscillator(t.gate_oscillator(f"{tag}.g1d"))
        g2s = b.add_oscillator(t.gate_oscillator(f"{tag}.g2s"))
        g2d = b.add_oscillator(t.gate_oscillator(f"{tag}.g2d"))
        ins = b.add_oscillator(t.insulator_oscillator(f"{tag}.ins"))
        chan = b.add_oscillator(t.channel_oscillator(f"{tag}.chan"))
        for g in (g1s, g1d, g2s, g2d):
            b.add_cubic(u=g, v=ins, gamma=+t.gamma_ig)
        b.add_cubic(u=chan, v=ins, gamma=-t.gamma_ic)
        drive = b.add_drive(chan, t.f_chan, t.require_omega(), 0.0)
        inst = NorInstance(g1s, g1d, g2s, g2d, ins, chan, drive)
        self.instances.append(inst)
        return inst

    def _claim_input(self, inst: NorInstance, which: int, how: str):
        key = (id(inst), which)
        if key in self._input_used:
            raise ValueError(
                f"logical input {which} of instance already {self._input_used[key]}")
        self._input_used[key] = how

    def connect(self, source: NorInstance, dest: NorInstance, dest_input: int) -> None:
        """Couple a source channel into a destination logical input.

        Adds the spring to the spring-gate and the matched dashpot to the
        dashpot-gate, then subtracts both diagonal contributions from the
        endpoints' local values (the compensation that keeps every
        oscillator at its free-standing template parameters).
        """
        self._claim_input(dest, dest_input, "connected")
        k = self.reference.k_couple
        omega = self.template.require_omega()
        c = k / omega
        chan = source.channel
        gs, gd = dest.input_pair(dest_input)
        b = self.builder
        b.add_spring(chan, gs, k)
        b.add_dashpot(chan, gd, c)
        b.adjust_local_stiffness(chan, -k)
        b.adjust_local_stiffness(gs, -k)
        b.adjust_local_damping(chan, -c)
        b.adjust_local_damping(gd, -c)
        self.n_connections += 1

    def drive_input(self, inst: NorInstance, which: int, level: LogicLevel,
                    extra_phase: float = 0.0) -> tuple:
        """Drive a free logical input at the nominal level amplitude.

        The spring-gate is driven at phase 0 and the dashpot-gate at pi/2,
        mirroring the quadrature a channel coupling would impose, so driven
        and connected inputs are interchangeable.  Returns the two drive
        indices.
        """
        self._claim_input(inst, which, "driven")
        amp = self.reference.drive_amplitude(level)
        omega = self.template.require_omega()
        gs, gd = inst.input_pair(which)
        b = self.builder
        i_s = b.add_drive(gs, amp, omega, 0.0 + extra_phase)
        i_d = b.add_drive(gd, amp, omega, math.pi / 2 + extra_phase)
        return i_s, i_d

    def finalize(self):
        return self.builder.finalize()
