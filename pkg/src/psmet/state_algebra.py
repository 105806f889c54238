"""Coherent-state algebra for a qubit-coupled optical meter.

The meter starts in a coherent state ``|alpha>`` and is coupled to a two-level
system through ``U = exp(i g sigma_z n)``.  Every meter state reachable from
there is a finite superposition of rotated coherent states ``|alpha e^{+-ig}>``,
optionally weighted by powers of the number operator (derivatives with respect
to ``g`` bring those down).  Such superpositions are represented symbolically
by :class:`BranchSuperposition`; inner products are evaluated in closed form
from coherent-state overlaps, so no Fock truncation is involved.
"""

from __future__ import annotations

import cmath
import math
from collections import defaultdict
from dataclasses import dataclass
from typing import Iterable, Literal

from .errors import InvalidArgumentError, UnsupportedOperationError

Branch = Literal["accept", "reject"]

_SUM_TOL = 1e-12
_CLOSURE_TOL = 1e-10


def _check_finite(*values: complex | float) -> None:
    for v in values:
        if not cmath.isfinite(complex(v)):
            raise InvalidArgumentError(f"non-finite input: {v!r}")


def _abs2(z: complex) -> float:
    return z.real * z.real + z.imag * z.imag


def _log_overlap(beta: complex, gamma: complex) -> complex:
    """log <beta|gamma>, written so that nearby labels do not cancel."""
    d = beta - gamma
    return complex(-0.5 * _abs2(d), (beta.conjugate() * gamma).imag)


def _expm1(w: complex) -> complex:
    a, b = w.real, w.imag
    s = math.sin(0.5 * b)
    return complex(math.expm1(a) * math.cos(b) - 2.0 * s * s, math.exp(a) * math.sin(b))


# coefficients of <beta|n^m|gamma> / <beta|gamma> as a polynomial in conj(beta)*gamma
_NUMBER_POLY = {0: (1.0,), 1: (0.0, 1.0), 2: (0.0, 1.0, 1.0)}


def coherent_overlap(beta: complex, gamma: complex) -> complex:
    """Inner product ``<beta|gamma> = exp(-|beta|^2/2 - |gamma|^2/2 + conj(beta) gamma)``."""
    beta, gamma = complex(beta), complex(gamma)
    _check_finite(beta, gamma)
    return cmath.exp(_log_overlap(beta, gamma))


def number_weighted_overlap(beta: complex, gamma: complex, order: int) -> complex:
    """``<beta| n^order |gamma>`` for ``order`` in {1, 2}."""
    if order not in (1, 2):
        raise InvalidArgumentError(f"unsupported number-operator order {order!r}")
    beta, gamma = complex(beta), complex(gamma)
    _check_finite(beta, gamma)
    x = beta.conjugate() * gamma
    poly = sum(c * x**t for t, c in enumerate(_NUMBER_POLY[order]))
    return poly * cmath.exp(_log_overlap(beta, gamma))


@dataclass(frozen=True)
class MeterSpec:
    """Coherent meter ``|alpha>``; the mean photon number is derived, never stored."""

    alpha: complex

    def __post_init__(self):
        object.__setattr__(self, "alpha", complex(self.alpha))
        _check_finite(self.alpha)

    @classmethod
    def from_photon_number(cls, n: float, phase: float = 0.0) -> "MeterSpec":
        if not math.isfinite(n) or n < 0:
            raise InvalidArgumentError(f"photon number must be finite and >= 0, got {n!r}")
        return cls(cmath.rect(math.sqrt(n), phase))

    @property
    def n(self) -> float:
        return _abs2(self.alpha)


@dataclass(frozen=True)
class SelectionSpec:
    """Pre- and postselection Bloch angles of the two-level system.

    ``|psi_i> = cos(theta_i/2)|g> + sin(theta_i/2) e^{i phi_i}|e>`` and likewise
    for ``|psi_f>``.  The rejected outcome projects onto the orthogonal state
    ``sin(theta_f/2)|g> - cos(theta_f/2) e^{i phi_f}|e>``.
    """

    theta_i: float
    theta_f: float
    phi_i: float = 0.0
    phi_f: float = 0.0

    def __post_init__(self):
        _check_finite(self.theta_i, self.theta_f, self.phi_i, self.phi_f)

    @classmethod
    def with_phi0(cls, theta_i: float, theta_f: float, phi0: float) -> "SelectionSpec":
        return cls(theta_i, theta_f, phi_i=phi0, phi_f=0.0)

    @property
    def phi0(self) -> float:
        return self.phi_i - self.phi_f

    @property
    def accept_coefficients(self) -> tuple[float, float]:
        """(c_g, c_e) multiplying ``|alpha e^{-ig}>`` and ``e^{i phi0}|alpha e^{ig}>``."""
        return (
            math.cos(self.theta_i / 2) * math.cos(self.theta_f / 2),
            math.sin(self.theta_i / 2) * math.sin(self.theta_f / 2),
        )

    @property
    def reject_coefficients(self) -> tuple[float, float]:
        """(r_g, r_e); the rejected state is ``r_g|alpha e^{-ig}> - r_e e^{i phi0}|alpha e^{ig}>``."""
        return (
            math.cos(self.theta_i / 2) * math.sin(self.theta_f / 2),
            math.sin(self.theta_i / 2) * math.cos(self.theta_f / 2),
        )


@dataclass(frozen=True)
class Component:
    """One term ``coeff * n^number_power |label>``.

    ``sign`` is the sigma_z eigenvalue (+1 for |e>, -1 for |g>) that rotated
    the label; ``system`` tags the qubit state for joint states, and terms with
    different tags are orthogonal.
    """

    coeff: complex
    label: complex
    number_power: int = 0
    sign: int = 0
    system: str | None = None


@dataclass(frozen=True)
class BranchSuperposition:
    components: tuple[Component, ...]

    def __post_init__(self):
        object.__setattr__(self, "components", tuple(self.components))
        for c in self.components:
            _check_finite(c.coeff, c.label)
            if c.number_power < 0:
                raise InvalidArgumentError("number_power must be >= 0")

    def __add__(self, other: "BranchSuperposition") -> "BranchSuperposition":
        return BranchSuperposition(self.components + other.components)

    def scaled(self, factor: complex) -> "BranchSuperposition":
        return BranchSuperposition(
            Component(c.coeff * factor, c.label, c.number_power, c.sign, c.system)
            for c in self.components
        )

    def inner(self, other: "BranchSuperposition") -> complex:
        """``<self|other>``.

        The overlap exponential is split as ``1 + expm1(w)``; the ``1`` part
        factorises into per-group coefficient sums, which keeps destructive
        interference between nearly identical labels accurate.
        """
        return _inner(self.components, other.components)

    def norm2(self) -> float:
        return max(self.inner(self).real, 0.0)


def _group_sums(comps: Iterable[Component]) -> dict:
    sums: dict = defaultdict(lambda: [0j, 0j, 0j])
    for c in comps:
        s = sums[(c.system, c.number_power)]
        for t in range(3):
            s[t] += c.coeff * c.label**t
    return sums


def _inner(left: tuple[Component, ...], right: tuple[Component, ...]) -> complex:
    for c in left + right:
        if c.number_power > 2:
            raise UnsupportedOperationError("number powers above 2 are not supported")

    smooth = 0j
    lsum, rsum = _group_sums(left), _group_sums(right)
    for (sys_l, p_l), sl in lsum.items():
        for (sys_r, p_r), sr in rsum.items():
            if sys_l != sys_r:
                continue
            m = p_l + p_r
            if m > 2:
                raise UnsupportedOperationError("inner products need total number power <= 2")
            for t, a in enumerate(_NUMBER_POLY[m]):
                if a:
                    smooth += a * sl[t].conjugate() * sr[t]

    rest = 0j
    for cl in left:
        for cr in right:
            if cl.system != cr.system:
                continue
            w = _log_overlap(cl.label, cr.label)
            if w == 0:
                continue
            x = cl.label.conjugate() * cr.label
            poly = sum(a * x**t for t, a in enumerate(_NUMBER_POLY[cl.number_power + cr.number_power]))
            rest += cl.coeff.conjugate() * cr.coeff * poly * _expm1(w)
    return smooth + rest


@dataclass(frozen=True)
class PostselectionDistribution:
    p_d: float
    p_r: float

    def __post_init__(self):
        for p in (self.p_d, self.p_r):
            if not (0.0 <= p <= 1.0 + _CLOSURE_TOL):
                raise InvalidArgumentError(f"probability out of range: {p!r}")
        if abs(self.p_d + self.p_r - 1.0) > _CLOSURE_TOL:
            raise InvalidArgumentError(f"p_d + p_r = {self.p_d + self.p_r!r} != 1")


def _rotated_labels(meter: MeterSpec, g: float) -> tuple[complex, complex]:
    _check_finite(g)
    return meter.alpha * cmath.exp(-1j * g), meter.alpha * cmath.exp(1j * g)


def conditional_meter(
    sel: SelectionSpec, meter: MeterSpec, g: float, branch: Branch = "accept"
) -> BranchSuperposition:
    """Unnormalised meter state after projecting the system onto ``branch``."""
    low, high = _rotated_labels(meter, g)
    phase = cmath.exp(1j * sel.phi0)
    if branch == "accept":
        a, b = sel.accept_coefficients
        coeffs = (complex(a), b * phase)
    elif branch == "reject":
        a, b = sel.reject_coefficients
        coeffs = (complex(a), -b * phase)
    else:
        raise InvalidArgumentError(f"unknown branch {branch!r}")
    comps = [Component(coeffs[0], low, 0, -1), Component(coeffs[1], high, 0, +1)]
    # pure projections onto a sigma_z eigenstate leave a single coherent component
    return BranchSuperposition(c for c in comps if c.coeff != 0)


def joint_state(sel: SelectionSpec, meter: MeterSpec, g: float) -> BranchSuperposition:
    """``U |psi_i>|alpha>`` with the qubit carried as a component tag."""
    low, high = _rotated_labels(meter, g)
    return BranchSuperposition(
        (
            Component(complex(math.cos(sel.theta_i / 2)), low, 0, -1, "g"),
            Component(math.sin(sel.theta_i / 2) * cmath.exp(1j * sel.phi_i), high, 0, +1, "e"),
        )
    )


def meter_g_derivative(state: BranchSuperposition) -> BranchSuperposition:
    """d/dg of a bare superposition: ``|alpha e^{s ig}> -> i s n |alpha e^{s ig}>``."""
    out = []
    for c in state.components:
        if c.number_power != 0:
            raise UnsupportedOperationError("only first derivatives of bare states are supported")
        if c.sign not in (-1, 1):
            raise InvalidArgumentError("component carries no rotation sign")
        out.append(Component(1j * c.sign * c.coeff, c.label, 1, c.sign, c.system))
    return BranchSuperposition(out)


def postselect_prob(sel: SelectionSpec, meter: MeterSpec, g: float) -> PostselectionDistribution:
    p_d = conditional_meter(sel, meter, g, "accept").norm2()
    p_r = conditional_meter(sel, meter, g, "reject").norm2()
    return PostselectionDistribution(p_d, p_r)


def postselect_prob_derivative(sel: SelectionSpec, meter: MeterSpec, g: float) -> float:
    """Analytic ``dP_d/dg = 2 Re <Phi_d|dPhi_d/dg>`` for arbitrary selection angles."""
    state = conditional_meter(sel, meter, g, "accept")
    return 2.0 * state.inner(meter_g_derivative(state)).real


def postselect_prob_closed(n: float, g: float, phi0: float) -> float:
    """Acceptance probability for ``theta_i = theta_f = pi/2``.

    ``P_d = [1 + exp(-2n sin^2 g) cos(n sin 2g + phi0)] / 2``, evaluated as
    ``cos^2(x/2) + expm1(-2n sin^2 g) cos(x) / 2`` to avoid cancellation near
    ``P_d = 0``.
    """
    if not math.isfinite(n) or n < 0:
        raise InvalidArgumentError(f"photon number must be finite and >= 0, got {n!r}")
    _check_finite(g, phi0)
    x = n * math.sin(2 * g) + phi0
    return math.cos(x / 2) ** 2 + 0.5 * math.expm1(-2 * n * math.sin(g) ** 2) * math.cos(x)
