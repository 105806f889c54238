"""Power-recycling cavity in front of the postselecting element.

The postselector is modelled as a lossless mirror whose amplitude reflectivity
is ``r_m = sqrt(P_r)``.  A partially transmitting mirror ``(r, p)`` in front of
it forms a resonant cavity, so light that fails postselection is sent back for
another attempt.  The scalar-mirror picture is only meaningful for
``g * sqrt(n) << 1``, where the reflected meter state is close to a rescaled
copy of the input.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass

import numpy as np

from .errors import (
    DegenerateBranchError,
    DivergentCavityError,
    InvalidArgumentError,
    SingularApproximationError,
    StepSizeError,
)
from .info_measures import DEGENERATE_PROB, pd_derivative_closed
from .state_algebra import MeterSpec, SelectionSpec, postselect_prob

_HALF_PI = math.pi / 2
_FD_RTOL = 1e-5
_FD_ATOL = 1e-8


@dataclass(frozen=True)
class MirrorSpec:
    """Recycling mirror with amplitude reflectivity ``r`` and single-pass phase ``theta``."""

    r: float
    theta: float = 0.0

    def __post_init__(self):
        if not (math.isfinite(self.r) and 0.0 <= self.r < 1.0):
            raise InvalidArgumentError(f"mirror reflectivity must lie in [0, 1), got {self.r!r}")
        if not math.isfinite(self.theta):
            raise InvalidArgumentError("cavity phase must be finite")

    @property
    def p(self) -> float:
        return math.sqrt(1.0 - self.r * self.r)


@dataclass(frozen=True)
class EffectiveMirror:
    """Postselector seen as a mirror: ``r_m = sqrt(P_r)`` and ``p_m = sqrt(P_d)``."""

    r_m: float

    def __post_init__(self):
        if not (0.0 <= self.r_m <= 1.0):
            raise InvalidArgumentError(f"r_m must lie in [0, 1], got {self.r_m!r}")

    @property
    def p_m(self) -> float:
        return math.sqrt(max(1.0 - self.r_m * self.r_m, 0.0))


@dataclass(frozen=True)
class RecycledDistribution:
    p_c: float
    p_b: float


@dataclass(frozen=True)
class RecycledLedger:
    p_c: float
    p_b: float
    f_c: float
    f_b: float
    f_pow: float


def effective_mirror(sel: SelectionSpec, meter: MeterSpec, g: float) -> EffectiveMirror:
    return EffectiveMirror(math.sqrt(min(postselect_prob(sel, meter, g).p_r, 1.0)))


def _round_trip(mirror: MirrorSpec, r_m: float) -> complex:
    loop = mirror.r * r_m * cmath.exp(1j * mirror.theta)
    if mirror.r * r_m >= 1.0:
        raise DivergentCavityError(f"round-trip gain r * r_m = {mirror.r * r_m!r} >= 1")
    return loop


def cavity_gain(mirror: MirrorSpec, em: EffectiveMirror) -> complex:
    """Intracavity amplitude per unit input, ``p / (1 - r r_m e^{i theta})``."""
    return mirror.p / (1.0 - _round_trip(mirror, em.r_m))


def return_amplitude(mirror: MirrorSpec, em: EffectiveMirror) -> complex:
    """Amplitude sent back towards the source, ``-r + p^2 r_m e^{i theta} / (1 - r r_m e^{i theta})``."""
    loop = _round_trip(mirror, em.r_m)
    return -mirror.r + mirror.p**2 * em.r_m * cmath.exp(1j * mirror.theta) / (1.0 - loop)


def recycle_probabilities(p_d: float, mirror: MirrorSpec, p_r: float | None = None) -> RecycledDistribution:
    """Detected and returned fractions for a postselector with acceptance ``p_d``."""
    p_r = 1.0 - p_d if p_r is None else p_r
    x = EffectiveMirror(math.sqrt(min(max(p_r, 0.0), 1.0))).r_m
    _round_trip(mirror, x)
    # |gain|^2 and |return amplitude|^2 expanded over D = |1 - r x e^{i theta}|^2;
    # p_r enters directly so that r = 0 returns the bare distribution unchanged
    r, c = mirror.r, math.cos(mirror.theta)
    den = 1.0 - 2.0 * r * x * c + (r * x) ** 2
    return RecycledDistribution(mirror.p**2 * p_d / den, (p_r - 2.0 * r * x * c + r * r) / den)


def recycled_distribution(
    sel: SelectionSpec, meter: MeterSpec, g: float, mirror: MirrorSpec
) -> RecycledDistribution:
    dist = postselect_prob(sel, meter, g)
    return recycle_probabilities(dist.p_d, mirror, dist.p_r)


def _recycled_derivatives(p_d: float, p_r: float, dp_d: float, mirror: MirrorSpec) -> tuple[float, float]:
    # chain rule through x = r_m = sqrt(P_r):
    #   P_c = p^2 (1 - x^2) / D,  P_b = (x^2 - 2 r x cos(theta) + r^2) / D,
    #   D = 1 - 2 r x cos(theta) + r^2 x^2
    r, c = mirror.r, math.cos(mirror.theta)
    x = math.sqrt(p_r)
    dx = -dp_d / (2.0 * x)
    den = 1.0 - 2.0 * r * x * c + r * r * x * x
    d_den = (-2.0 * r * c + 2.0 * r * r * x) * dx
    num_b = x * x - 2.0 * r * x * c + r * r
    d_num_b = (2.0 * x - 2.0 * r * c) * dx
    dp_c = mirror.p**2 * (dp_d * den - p_d * d_den) / den**2
    dp_b = (d_num_b * den - num_b * d_den) / den**2
    return dp_c, dp_b


def _central(sel, meter, g, mirror, h) -> np.ndarray:
    hi = recycled_distribution(sel, meter, g + h, mirror)
    lo = recycled_distribution(sel, meter, g - h, mirror)
    return np.array([hi.p_c - lo.p_c, hi.p_b - lo.p_b]) / (2 * h)


def _richardson_derivatives(sel, meter, g, mirror, h) -> tuple[float, float]:
    coarse = _central(sel, meter, g, mirror, h)
    fine = _central(sel, meter, g, mirror, h / 2)
    scale = np.maximum(np.abs(coarse), np.abs(fine))
    if np.any(np.abs(coarse - fine) > _FD_RTOL * scale + _FD_ATOL):
        raise StepSizeError(f"dP/dg at h and h/2 disagree ({coarse} vs {fine}); reduce fd_step")
    # the h^2 error term cancels between the two estimates
    dp_c, dp_b = (4 * fine - coarse) / 3
    return float(dp_c), float(dp_b)


def _is_symmetric(sel: SelectionSpec) -> bool:
    return math.isclose(sel.theta_i, _HALF_PI, abs_tol=1e-15) and math.isclose(
        sel.theta_f, _HALF_PI, abs_tol=1e-15
    )


def f_pow_exact(
    sel: SelectionSpec,
    meter: MeterSpec,
    g: float,
    mirror: MirrorSpec,
    fd_step: float = 1e-5,
) -> RecycledLedger:
    """Fisher information of the recycled outcome statistics ``{P_c, P_b}``.

    At theta_i = theta_f = pi/2 the derivatives follow analytically from the
    closed-form ``dP_d/dg``; otherwise both probabilities are differentiated by
    central differences at ``fd_step`` and ``fd_step / 2``, which must agree
    and are combined by Richardson extrapolation.
    """
    if not fd_step > 0:
        raise InvalidArgumentError(f"fd_step must be positive, got {fd_step!r}")
    dist = postselect_prob(sel, meter, g)
    rec = recycle_probabilities(dist.p_d, mirror, dist.p_r)
    if rec.p_c < DEGENERATE_PROB or rec.p_b < DEGENERATE_PROB:
        raise DegenerateBranchError(
            f"recycled distribution is degenerate (P_c = {rec.p_c:.3e}, P_b = {rec.p_b:.3e})"
        )
    if _is_symmetric(sel) and dist.p_r > DEGENERATE_PROB:
        dp_d = pd_derivative_closed(meter.n, g, sel.phi0)
        dp_c, dp_b = _recycled_derivatives(dist.p_d, dist.p_r, dp_d, mirror)
    else:
        dp_c, dp_b = _richardson_derivatives(sel, meter, g, mirror, fd_step)
    f_c = dp_c**2 / rec.p_c
    f_b = dp_b**2 / rec.p_b
    return RecycledLedger(rec.p_c, rec.p_b, f_c, f_b, f_c + f_b)


def f_pow_approx(n: float, g: float, r: float) -> float:
    """Small-coupling closed form of the recycled Fisher information at phi0 = pi.

    ``F_pow ~ n^2 B^2 [1 + (cos ng - r)^2 / ((1 - r^2) sin^2 ng)]`` with
    ``B = (1 - r^2)(sin 2ng + 2g cos 2ng) / ((r cos ng - 1)^2 cos ng)``.
    """
    if n < 0 or not (0.0 <= r < 1.0):
        raise InvalidArgumentError(f"need n >= 0 and 0 <= r < 1, got n={n!r}, r={r!r}")
    ng = n * g
    s, c = math.sin(ng), math.cos(ng)
    if abs(s) < 1e-14 or abs(c) < 1e-14:
        raise SingularApproximationError(f"n*g = {ng!r} is a singular point of the approximation")
    b = (1 - r * r) * (math.sin(2 * ng) + 2 * g * math.cos(2 * ng)) / ((r * c - 1) ** 2 * c)
    return n * n * b * b * (1 + (c - r) ** 2 / ((1 - r * r) * s * s))
