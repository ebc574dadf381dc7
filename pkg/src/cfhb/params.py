"""Converter configuration, operating points and soft-switching checks.

Every duty and commutation angle is stored as a fraction of the switching
period ``Ts``. Grid quantities are sampled once per switching interval and
held constant inside it. The negative half cycle is handled by symmetry:
planning always works on ``|vg|`` and ``|ig|``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable, Optional

# Peak winding current used by the fixed-peak scheme at rated load (A).
DEFAULT_IMAX = 10.2

# Degeneracy thresholds near the grid zero crossing.
DEGENERATE_CURRENT_FRACTION = 0.01
MIN_OFF_TIME_FACTOR = 2.0


class InfeasibleOperatingPoint(ValueError):
    """Raised when an interval cannot be operated as planned."""


class ZcsInfeasible(InfeasibleOperatingPoint):
    """Peak winding current too low for body-diode commutation."""


class TimingOverflow(InfeasibleOperatingPoint):
    """Commutation stages do not fit inside half a switching period."""


class Scheme(str, Enum):
    SPSM = "spsm"
    DCPSM = "dcpsm"
    IDCPSM = "idcpsm"

    @classmethod
    def parse(cls, text: str) -> "Scheme":
        try:
            return cls(text.strip().lower())
        except ValueError:
            names = ", ".join(s.value for s in cls)
            raise ValueError(f"unknown scheme {text!r} (expected one of {names})") from None


@dataclass(frozen=True)
class ConverterParams:
    """Electrical ratings and magnetics. Defaults are the 1.5 kW prototype."""

    vg_rms: float = 230.0   # grid RMS voltage (V)
    fg: float = 50.0        # grid frequency (Hz)
    vo: float = 345.0       # output voltage (V)
    po: float = 1500.0      # output power (W)
    fsw: float = 100e3      # switching frequency (Hz)
    n: float = 0.38         # turns ratio Ns/Np
    l1: float = 740e-6      # boost inductor 1 (H)
    l2: float = 740e-6      # boost inductor 2 (H)
    llk: float = 600e-9     # HFT leakage, ac-side referred (H)
    ls: float = 7.5e-6      # dc-side series inductor (H)

    def __post_init__(self):
        for name in ("vg_rms", "fg", "vo", "po", "fsw", "n", "l1", "l2", "llk", "ls"):
            value = getattr(self, name)
            if not (math.isfinite(value) and value > 0):
                raise ValueError(f"{name} must be finite and > 0, got {value!r}")


@dataclass(frozen=True)
class DeviceParams:
    """Loss-model coefficients. Placeholders of the right device class, not datasheet fits."""

    rds_on_ac: float = 0.080    # ac-side SiC MOSFET channel (ohm)
    rds_on_dc: float = 0.030    # dc-side MOSFET channel (ohm)
    vf_ac: float = 3.3          # SiC body diode drop (V)
    vf_dc: float = 1.5
    r_winding_ac: float = 0.050
    r_winding_dc: float = 0.050
    r_series: float = 0.050     # external series inductor on the dc side
    r_boost: float = 0.050      # each boost inductor
    p_core_fixed: float = 5.0   # W
    e_hard_switch: float = 0.0  # J per hard transition

    def __post_init__(self):
        for name, value in vars(self).items():
            if not (math.isfinite(value) and value >= 0):
                raise ValueError(f"{name} must be finite and >= 0, got {value!r}")


@dataclass(frozen=True)
class DerivedParams:
    params: ConverterParams
    vm: float                       # grid peak voltage (V)
    im: float                       # grid peak current (A)
    ts: float                       # switching period (s)
    lt: float                       # total series inductance, ac-side referred (H)
    intervals_per_half_cycle: int

    @property
    def vo(self) -> float:
        return self.params.vo

    @property
    def n(self) -> float:
        return self.params.n

    @property
    def transfer_gain(self) -> float:
        """Duty fraction per ampere of winding-current change: n*Lt/(Vo*Ts)."""
        return self.n * self.lt / (self.vo * self.ts)


def derive(params: ConverterParams) -> DerivedParams:
    """Precompute Vm, Im, Ts, Lt and the interval count for a half grid cycle."""
    vm = math.sqrt(2.0) * params.vg_rms
    if params.n * vm >= params.vo / 2.0:
        raise InfeasibleOperatingPoint(
            f"d1 <= 0.5 infeasible: n*Vm = {params.n * vm:.6g} V must be below Vo/2 = {params.vo / 2:.6g} V"
        )
    ratio = params.fsw / (2.0 * params.fg)
    count = round(ratio)
    if count < 1 or abs(ratio - count) > 1e-9 * ratio:
        raise ValueError(f"fsw/(2*fg) must be a positive integer, got {ratio!r}")
    return DerivedParams(
        params=params,
        vm=vm,
        im=2.0 * params.po / vm,
        ts=1.0 / params.fsw,
        lt=params.llk + params.ls / params.n**2,
        intervals_per_half_cycle=count,
    )


def angle_of(derived: DerivedParams, k: int) -> float:
    """Electrical angle (rad) at the start of interval ``k``."""
    return math.pi * k / derived.intervals_per_half_cycle


def grid_sample(derived: DerivedParams, k: int) -> tuple[float, float]:
    """Grid voltage and current held over interval ``k`` (unity power factor)."""
    if not 0 <= k < 2 * derived.intervals_per_half_cycle:
        raise IndexError(f"interval index {k} outside one grid cycle")
    return grid_sample_angle(derived, angle_of(derived, k))


def grid_sample_angle(derived: DerivedParams, omega_tau: float) -> tuple[float, float]:
    s = math.sin(omega_tau)
    return derived.vm * s, derived.im * s


def duty_d1(vg: float, vo: float, n: float) -> float:
    """AC-side duty that keeps boost-inductor volt-seconds balanced."""
    d1 = (vo - n * abs(vg)) / vo
    if d1 <= 0.5:
        raise InfeasibleOperatingPoint(f"d1 = {d1:.6g} <= 0.5 at vg = {vg:.6g} V")
    return d1


def inductor_ripple(vg: float, d1: float, ts: float, inductance: float) -> float:
    """Peak-to-peak boost inductor ripple over one on-time (A)."""
    return abs(vg) * d1 * ts / inductance


# SPSM peak current and beta come from outside this model; a provider maps
# (vg, ig, d1, derived) to (i_lk_pk, beta); beta=None keeps the commutation beta.
PeakProvider = Callable[[float, float, float, DerivedParams], "tuple[float, Optional[float]]"]


@dataclass(frozen=True)
class ModulationScheme:
    tag: Scheme
    i_max: float = DEFAULT_IMAX
    r: Optional[float] = None
    provider: Optional[PeakProvider] = field(default=None, compare=False)

    def __post_init__(self):
        if self.tag in (Scheme.DCPSM, Scheme.SPSM) and not self.i_max > 0:
            raise ValueError(f"{self.tag.value}: i_max must be > 0, got {self.i_max!r}")
        if self.tag is Scheme.IDCPSM:
            if self.r is None:
                raise ValueError("idcpsm: peak-current ratio r is required")
            # r <= 0.5 is constructible so the validator can report it; see FeasibilityReport.circulating
            if not self.r > 0:
                raise ValueError(f"idcpsm: r must be > 0, got {self.r!r}")

    @classmethod
    def dcpsm(cls, i_max: float = DEFAULT_IMAX) -> "ModulationScheme":
        return cls(Scheme.DCPSM, i_max=i_max)

    @classmethod
    def idcpsm(cls, r: float) -> "ModulationScheme":
        return cls(Scheme.IDCPSM, r=r)

    @classmethod
    def idcpsm_matched(cls, derived: DerivedParams, i_max: float = DEFAULT_IMAX) -> "ModulationScheme":
        """IDCPSM whose peak equals ``i_max`` at the grid peak."""
        return cls(Scheme.IDCPSM, r=rated_ratio(derived, i_max))

    @classmethod
    def spsm(cls, i_max: float = DEFAULT_IMAX, provider: Optional[PeakProvider] = None) -> "ModulationScheme":
        return cls(Scheme.SPSM, i_max=i_max, provider=provider)


def rated_ratio(derived: DerivedParams, i_max: float = DEFAULT_IMAX) -> float:
    return i_max / derived.im


def zcs_margin_ratio(derived: DerivedParams) -> float:
    """Smallest IDCPSM ratio that keeps ZCS once worst-case ripple is included."""
    p = derived.params
    return 0.5 * (1.0 + derived.vm * derived.ts / (p.l1 * derived.im))


def default_spsm_provider(i_max: float) -> PeakProvider:
    def provide(vg: float, ig: float, d1: float, derived: DerivedParams):
        ripple = inductor_ripple(vg, d1, derived.ts, derived.params.l1)
        return max(i_max, 0.5 * (abs(ig) + ripple)), None

    return provide


def ilk_peak(scheme: ModulationScheme, ig: float, *, vg: float = 0.0, d1: float = 1.0,
             derived: Optional[DerivedParams] = None) -> float:
    """Peak winding current the scheme commands for this interval."""
    if scheme.tag is Scheme.DCPSM:
        return scheme.i_max
    if scheme.tag is Scheme.IDCPSM:
        return scheme.r * abs(ig)
    if derived is None:
        raise ValueError("spsm peak current needs derived parameters for its provider")
    provider = scheme.provider or default_spsm_provider(scheme.i_max)
    return provider(vg, ig, d1, derived)[0]


def duty_d2(i_lk_pk: float, derived: DerivedParams) -> float:
    """DC-side duty that ramps the winding current from zero to ``i_lk_pk``."""
    if i_lk_pk < 0:
        raise ValueError(f"peak current must be >= 0, got {i_lk_pk!r}")
    d2 = derived.transfer_gain * i_lk_pk
    if d2 >= 0.5:
        raise TimingOverflow(f"d2 = {d2:.6g} does not fit in half a switching period")
    return d2


@dataclass(frozen=True)
class Commutation:
    alpha: float         # stage-2 transfer time, fraction of Ts
    beta: float          # stage-5 body-diode time, fraction of Ts
    i_lk_t1: float       # winding current when S2ag turns on (A)
    i_lk_t5: float       # winding current at S1ag ZCS (A)


def commutation_angles(vg: float, ig: float, d1: float, i_lk_pk: float,
                       derived: DerivedParams, *, check: bool = True) -> Commutation:
    """Stage-2 and stage-5 durations from the boundary winding currents.

    Ripple for alpha uses L2 (the leg handing over at t1); ripple for beta uses
    L1 (the leg whose body diode must empty by t5).
    """
    p = derived.params
    vg, ig = abs(vg), abs(ig)
    i_t1 = -0.5 * (ig - inductor_ripple(vg, d1, derived.ts, p.l2))
    i_t5 = 0.5 * (ig + inductor_ripple(vg, d1, derived.ts, p.l1))
    if check and ig > 0 and i_lk_pk <= i_t5:
        raise ZcsInfeasible(f"i_lk_pk = {i_lk_pk:.6g} A does not exceed i_lk(t5) = {i_t5:.6g} A")
    gain = derived.transfer_gain
    return Commutation(alpha=gain * abs(i_t1), beta=gain * abs(i_t5 - i_lk_pk), i_lk_t1=i_t1, i_lk_t5=i_t5)


@dataclass(frozen=True)
class IntervalPlan:
    k: int
    omega_tau: float
    vg: float
    ig: float
    d1: float
    d2: float
    alpha: float
    beta: float
    i_lk_pk: float
    i_lk_t1: float
    i_lk_t5: float
    scheme: Scheme
    ripple1: float = 0.0    # L1 peak-to-peak ripple (A)
    ripple2: float = 0.0    # L2 peak-to-peak ripple (A)
    gain: float = 0.0       # n*Lt/(Vo*Ts), kept for the mirrored half
    degenerate: bool = False
    degenerate_reason: Optional[str] = None

    @property
    def i_cir(self) -> float:
        return circulating(self.i_lk_pk, self.ig)

    @property
    def alpha_mirror(self) -> float:
        """Second-half transfer time; its boundary current comes from L1."""
        return self.gain * 0.5 * abs(self.ig - self.ripple1)

    @property
    def beta_mirror(self) -> float:
        """Second-half body-diode time; its boundary current comes from L2."""
        return self.gain * abs(self.i_lk_pk - 0.5 * (self.ig + self.ripple2))

    @property
    def timing_budget(self) -> float:
        """Largest of the two halves' alpha + d2 + beta + (1 - d1)."""
        off = 1.0 - self.d1
        return max(self.alpha + self.d2 + self.beta, self.alpha_mirror + self.d2 + self.beta_mirror) + off


def circulating(i_lk_pk: float, ig: float) -> float:
    return i_lk_pk - 0.5 * abs(ig)


def _degeneracy(derived: DerivedParams, ig: float, d1: float, alpha: float, beta: float) -> Optional[str]:
    if abs(ig) < DEGENERATE_CURRENT_FRACTION * derived.im:
        return "zero-current"
    if 1.0 - d1 < MIN_OFF_TIME_FACTOR * (alpha + beta):
        return "min-off-time"
    return None


def plan_interval(derived: DerivedParams, scheme: ModulationScheme, k: int,
                  omega_tau: Optional[float] = None) -> IntervalPlan:
    """Operating point of interval ``k`` for ``scheme``.

    ``omega_tau`` overrides the sampled angle (used to address exact angles
    such as 10 degrees that do not fall on an interval boundary). ZCS or
    circulating-current problems are left for :func:`validate_soft_switching`
    instead of raising here.
    """
    p = derived.params
    if omega_tau is None:
        omega_tau = angle_of(derived, k)
    vg, ig = grid_sample_angle(derived, omega_tau)
    vg, ig = abs(vg), abs(ig)
    d1 = duty_d1(vg, p.vo, p.n)
    provided_beta = None
    if scheme.tag is Scheme.SPSM:
        provider = scheme.provider or default_spsm_provider(scheme.i_max)
        pk, provided_beta = provider(vg, ig, d1, derived)
    else:
        pk = ilk_peak(scheme, ig)
    d2 = duty_d2(pk, derived)
    com = commutation_angles(vg, ig, d1, pk, derived, check=False)
    beta = com.beta if provided_beta is None else provided_beta
    reason = _degeneracy(derived, ig, d1, com.alpha, beta)
    return IntervalPlan(
        k=k, omega_tau=omega_tau, vg=vg, ig=ig, d1=d1, d2=d2,
        alpha=com.alpha, beta=beta, i_lk_pk=pk, i_lk_t1=com.i_lk_t1, i_lk_t5=com.i_lk_t5,
        scheme=scheme.tag,
        ripple1=inductor_ripple(vg, d1, derived.ts, p.l1),
        ripple2=inductor_ripple(vg, d1, derived.ts, p.l2),
        gain=derived.transfer_gain,
        degenerate=reason is not None,
        degenerate_reason=reason,
    )


def plan_at_angle(derived: DerivedParams, scheme: ModulationScheme, degrees: float) -> IntervalPlan:
    """Plan at an exact angle, labelled with the nearest interval index."""
    k = nearest_interval(derived, degrees)
    return plan_interval(derived, scheme, k, omega_tau=math.radians(degrees))


def nearest_interval(derived: DerivedParams, degrees: float) -> int:
    count = derived.intervals_per_half_cycle
    return min(max(round(degrees / 180.0 * count), 0), 2 * count - 1)


@dataclass(frozen=True)
class FeasibilityReport:
    k: int
    omega_tau: float
    zcs: bool             # (a) i_lk_pk above both body-diode release currents
    circulating: bool     # (b) i_lk_pk - ig/2 > 0
    timing: bool          # (c) commutation fits in Ts/2
    duty: bool            # (d) 0.5 < d1 < 1
    margin: Optional[bool]  # IDCPSM ratio above the ripple-aware bound; None for other schemes
    degenerate: bool
    degenerate_reason: Optional[str]

    @property
    def passed(self) -> bool:
        return self.zcs and self.circulating and self.timing and self.duty and self.margin is not False

    @property
    def failures(self) -> list[str]:
        names = [("a", self.zcs), ("b", self.circulating), ("c", self.timing), ("d", self.duty)]
        out = [tag for tag, ok in names if not ok]
        if self.margin is False:
            out.append("e")
        return out


def validate_soft_switching(plan: IntervalPlan, scheme: Optional[ModulationScheme] = None,
                            derived: Optional[DerivedParams] = None) -> FeasibilityReport:
    """Soft-switching verdicts for one planned interval (never raises).

    The ripple-aware ratio bound is only checked when both ``scheme`` and
    ``derived`` are given and the scheme is IDCPSM.
    """
    release = 0.5 * (plan.ig + max(plan.ripple1, plan.ripple2))
    margin = None
    if scheme is not None and derived is not None and scheme.tag is Scheme.IDCPSM:
        margin = scheme.r > zcs_margin_ratio(derived)
    return FeasibilityReport(
        k=plan.k,
        omega_tau=plan.omega_tau,
        zcs=plan.i_lk_pk > release,
        circulating=plan.i_cir > 0,
        timing=plan.timing_budget < 0.5,
        duty=0.5 < plan.d1 < 1.0,
        margin=margin,
        degenerate=plan.degenerate,
        degenerate_reason=plan.degenerate_reason,
    )
