"""Brute-force cross-check in a truncated Fock basis.

Every analytic quantity in the package has a counterpart here that uses
explicit state vectors and central finite differences instead of coherent
state algebra and hand-derived derivatives.  The two paths share only the
definition of the branch coefficients and the recycling formulas.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Iterable, Sequence

import numpy as np
from scipy.stats import poisson

from .errors import (
    DegenerateBranchError,
    InvalidArgumentError,
    PsmetError,
    StepSizeError,
    TruncationOverflowError,
)
from .info_measures import DEGENERATE_PROB, fisher_ledger
from .recycling import MirrorSpec, f_pow_exact, recycle_probabilities, recycled_distribution
from .state_algebra import Branch, MeterSpec, SelectionSpec

HARD_CAP = 4096
RICHARDSON_RTOL = 1e-5
RICHARDSON_ATOL = 1e-8


@dataclass(frozen=True)
class TruncationSpec:
    tail_tol: float = 1e-14
    min_k: int = 0
    hard_cap: int = HARD_CAP

    def __post_init__(self):
        if not self.tail_tol > 0:
            raise InvalidArgumentError("tail_tol must be positive")

    def k_max(self, n: float) -> int:
        """Smallest cutoff whose Poisson(n) tail mass is below ``tail_tol``."""
        k = max(int(math.ceil(n + 10 * math.sqrt(n) + 20)), self.min_k)
        while poisson.sf(k, n) >= self.tail_tol:
            k += 1
            if k > self.hard_cap:
                break
        if k > self.hard_cap:
            raise TruncationOverflowError(f"n = {n!r} needs more than {self.hard_cap} Fock states")
        return k


def coherent_to_fock(alpha: complex, trunc: TruncationSpec = TruncationSpec(), k_max: int | None = None) -> np.ndarray:
    """Fock amplitudes ``e^{-|a|^2/2} a^k / sqrt(k!)`` for ``k = 0..k_max``."""
    alpha = complex(alpha)
    if k_max is None:
        k_max = trunc.k_max(abs(alpha) ** 2)
    if k_max > trunc.hard_cap:
        raise TruncationOverflowError(f"k_max = {k_max} exceeds the cap {trunc.hard_cap}")
    out = np.empty(k_max + 1, dtype=complex)
    out[0] = math.exp(-0.5 * abs(alpha) ** 2)
    for k in range(1, k_max + 1):
        out[k] = out[k - 1] * alpha / math.sqrt(k)
    return out


def _rotated(meter: MeterSpec, g: float, k_max: int, trunc: TruncationSpec):
    a = coherent_to_fock(meter.alpha * np.exp(-1j * g), trunc, k_max)
    b = coherent_to_fock(meter.alpha * np.exp(1j * g), trunc, k_max)
    return a, b


def oracle_conditional(
    sel: SelectionSpec,
    meter: MeterSpec,
    g: float,
    branch: Branch = "accept",
    trunc: TruncationSpec = TruncationSpec(),
) -> np.ndarray:
    """Unnormalised conditional meter state as a Fock vector."""
    k = trunc.k_max(meter.n)
    a, b = _rotated(meter, g, k, trunc)
    phase = np.exp(1j * sel.phi0)
    if branch == "accept":
        cg, ce = sel.accept_coefficients
        return cg * a + ce * phase * b
    if branch == "reject":
        rg, re = sel.reject_coefficients
        return rg * a - re * phase * b
    raise InvalidArgumentError(f"unknown branch {branch!r}")


def oracle_joint(sel: SelectionSpec, meter: MeterSpec, g: float, trunc: TruncationSpec = TruncationSpec()) -> np.ndarray:
    """Joint qubit-meter state flattened as ``[|g> block, |e> block]``."""
    k = trunc.k_max(meter.n)
    a, b = _rotated(meter, g, k, trunc)
    return np.concatenate(
        [math.cos(sel.theta_i / 2) * a, math.sin(sel.theta_i / 2) * np.exp(1j * sel.phi_i) * b]
    )


def _check_richardson(coarse: float, fine: float, what: str) -> None:
    if abs(coarse - fine) > RICHARDSON_RTOL * max(abs(coarse), abs(fine)) + RICHARDSON_ATOL:
        raise StepSizeError(f"{what}: estimates at h and h/2 differ ({coarse!r} vs {fine!r})")


def _qfi_central(state_at, g, h):
    psi = state_at(g)
    dpsi = (state_at(g + h) - state_at(g - h)) / (2 * h)
    return 4.0 * (np.vdot(dpsi, dpsi).real - abs(np.vdot(psi, dpsi)) ** 2)


def fd_qfi(state_at: Callable[[float], np.ndarray], g: float, h: float = 1e-5) -> float:
    """Pure-state QFI with a central-difference derivative of ``state_at``.

    ``state_at`` must return normalised vectors.  The estimate at ``h`` is
    checked against one at ``h/2``.
    """
    if not h > 0:
        raise InvalidArgumentError("h must be positive")
    q = _qfi_central(state_at, g, h)
    _check_richardson(q, _qfi_central(state_at, g, h / 2), "QFI")
    return max(float(q), 0.0)


def _fi_central(prob_at, g, h):
    p = np.atleast_1d(np.asarray(prob_at(g), dtype=float))
    dp = (np.atleast_1d(prob_at(g + h)) - np.atleast_1d(prob_at(g - h))) / (2 * h)
    if p.size == 1:
        p, dp = np.array([p[0], 1.0 - p[0]]), np.array([dp[0], -dp[0]])
    keep = p > DEGENERATE_PROB
    return float(np.sum(dp[keep] ** 2 / p[keep]))


def fd_classical_fi(prob_at: Callable[[float], float | Sequence[float]], g: float, h: float = 1e-5) -> float:
    """Classical FI ``sum_m (dp_m/dg)^2 / p_m`` with central differences.

    ``prob_at`` returns either one probability (a binary outcome) or the
    full outcome distribution.
    """
    if not h > 0:
        raise InvalidArgumentError("h must be positive")
    f = _fi_central(prob_at, g, h)
    _check_richardson(f, _fi_central(prob_at, g, h / 2), "classical FI")
    return f


def richardson_limit(steps: Sequence[float], values: Sequence[float], power: int = 2) -> float:
    """Extrapolate ``values(step)`` to ``step -> 0`` assuming an expansion in ``step**power``."""
    x = np.asarray(steps, dtype=float) ** power
    y = np.asarray(values, dtype=float)
    if x.size != y.size or x.size < 2:
        raise InvalidArgumentError("need at least two matching samples")
    # Neville recursion evaluated at x = 0
    p = list(y)
    for m in range(1, len(p)):
        for i in range(len(p) - m):
            p[i] = (x[i] * p[i + 1] - x[i + m] * p[i]) / (x[i] - x[i + m])
    return float(p[0])


@dataclass(frozen=True)
class OraclePoint:
    n: float
    theta_i: float
    theta_f: float
    phi0: float
    g: float
    r: float = 0.0
    cavity_phase: float = 0.0

    @property
    def selection(self) -> SelectionSpec:
        return SelectionSpec.with_phi0(self.theta_i, self.theta_f, self.phi0)

    @property
    def meter(self) -> MeterSpec:
        return MeterSpec.from_photon_number(self.n)

    @property
    def mirror(self) -> MirrorSpec:
        return MirrorSpec(self.r, self.cavity_phase)


@dataclass(frozen=True)
class OracleRow:
    point: int
    quantity: str
    analytic: float | None
    oracle: float | None
    rel_err: float | None
    status: str  # PASS, FAIL or SKIPPED
    note: str = ""


@dataclass
class OracleReport:
    rows: list[OracleRow] = field(default_factory=list)
    prob_tol: float = 1e-6
    fd_tol: float = 1e-5

    @property
    def passed(self) -> bool:
        return all(r.status != "FAIL" for r in self.rows)

    def max_error(self, quantities: Iterable[str] | None = None) -> float:
        wanted = None if quantities is None else set(quantities)
        errs = [
            r.rel_err
            for r in self.rows
            if r.rel_err is not None and (wanted is None or r.quantity in wanted)
        ]
        return max(errs, default=0.0)

    def format_table(self) -> str:
        lines = [f"{'pt':>4} {'quantity':<6} {'analytic':>24} {'oracle':>24} {'rel_err':>10}  status"]
        for r in self.rows:
            a = "" if r.analytic is None else f"{r.analytic:.17g}"
            o = "" if r.oracle is None else f"{r.oracle:.17g}"
            e = "" if r.rel_err is None else f"{r.rel_err:.2e}"
            tail = f"  {r.note}" if r.note else ""
            lines.append(f"{r.point:>4} {r.quantity:<6} {a:>24} {o:>24} {e:>10}  {r.status}{tail}")
        lines.append(
            f"max rel_err: prob/QFI {self.max_error(PROB_QUANTITIES):.3e} (tol {self.prob_tol:.0e}), "
            f"FD {self.max_error(FD_QUANTITIES):.3e} (tol {self.fd_tol:.0e}) -> "
            + ("PASS" if self.passed else "FAIL")
        )
        return "\n".join(lines)


PROB_QUANTITIES = ("P_d", "P_r", "Q_d", "Q_r", "Q_j", "F_p")
FD_QUANTITIES = ("P_c", "P_b", "F_pow")


# Quantities obtained by finite differences cannot resolve values below the
# Richardson gate's absolute floor, so that floor also bounds the error scale.
_FD_DERIVED = ("Q_d", "Q_r", "Q_j", "F_p", "F_pow")


def _rel_err(a: float, b: float, floor: float = 0.0) -> float:
    scale = max(abs(a), abs(b), floor)
    return 0.0 if scale == 0 else abs(a - b) / scale


def _oracle_values(pt: OraclePoint, trunc: TruncationSpec, h: float) -> dict:
    sel, meter = pt.selection, pt.meter
    out: dict = {}

    def prob(branch):
        def at(g):
            v = oracle_conditional(sel, meter, g, branch, trunc)
            return float(np.vdot(v, v).real)

        return at

    p_d, p_r = prob("accept")(pt.g), prob("reject")(pt.g)
    out["P_d"], out["P_r"] = p_d, p_r

    for branch, key in (("accept", "Q_d"), ("reject", "Q_r")):
        p = p_d if branch == "accept" else p_r
        if p < DEGENERATE_PROB:
            out[key] = None
            continue

        def normed(g, branch=branch):
            v = oracle_conditional(sel, meter, g, branch, trunc)
            return v / np.linalg.norm(v)

        out[key] = fd_qfi(normed, pt.g, h)

    out["Q_j"] = fd_qfi(lambda g: oracle_joint(sel, meter, g, trunc), pt.g, h)
    if min(p_d, p_r) < DEGENERATE_PROB:
        out["F_p"] = None  # removable limit: the analytic side reports 0 by convention
    else:
        out["F_p"] = fd_classical_fi(lambda g: [prob("accept")(g), prob("reject")(g)], pt.g, h)

    def recycled(g):
        d = recycle_probabilities(prob("accept")(g), pt.mirror, prob("reject")(g))
        return [d.p_c, d.p_b]

    p_c, p_b = recycled(pt.g)
    out["P_c"], out["P_b"] = p_c, p_b
    out["F_pow"] = None if min(p_c, p_b) < DEGENERATE_PROB else fd_classical_fi(recycled, pt.g, h)
    return out


def _analytic_values(pt: OraclePoint, fd_step: float) -> dict:
    sel, meter = pt.selection, pt.meter
    led = fisher_ledger(sel, meter, pt.g)
    out = {"P_d": led.p_d, "P_r": led.p_r, "Q_d": led.q_d, "Q_r": led.q_r, "Q_j": led.q_j, "F_p": led.f_p}
    try:
        rec = f_pow_exact(sel, meter, pt.g, pt.mirror, fd_step)
        out.update(P_c=rec.p_c, P_b=rec.p_b, F_pow=rec.f_pow)
    except DegenerateBranchError:
        d = recycled_distribution(sel, meter, pt.g, pt.mirror)
        out.update(P_c=d.p_c, P_b=d.p_b, F_pow=None)
    return out


def oracle_report(
    points: Sequence[OraclePoint],
    trunc: TruncationSpec = TruncationSpec(),
    h: float = 1e-5,
    prob_tol: float = 1e-6,
    fd_tol: float = 1e-5,
) -> OracleReport:
    """Compare analytic and brute-force values at every point.

    Degenerate branches are reported as SKIPPED.  Errors raised at a point
    are re-raised with the point index attached.
    """
    if len(points) == 0:
        raise InvalidArgumentError("oracle_report needs at least one point")
    report = OracleReport(prob_tol=prob_tol, fd_tol=fd_tol)
    for i, pt in enumerate(points):
        try:
            ana = _analytic_values(pt, h)
            ora = _oracle_values(pt, trunc, h)
        except PsmetError as exc:
            raise type(exc)(f"point {i} {pt}: {exc}") from exc
        for q in PROB_QUANTITIES + FD_QUANTITIES:
            a, o = ana[q], ora[q]
            if a is None or o is None:
                report.rows.append(OracleRow(i, q, a, o, None, "SKIPPED", "degenerate branch"))
                continue
            err = _rel_err(a, o, RICHARDSON_ATOL if q in _FD_DERIVED else 0.0)
            tol = prob_tol if q in PROB_QUANTITIES else fd_tol
            report.rows.append(OracleRow(i, q, a, o, err, "PASS" if err <= tol else "FAIL"))
    return report


def random_points(count: int, seed: int = 0) -> list[OraclePoint]:
    """Seeded random parameter points away from exactly degenerate settings."""
    rng = np.random.default_rng(seed)
    pts = []
    for _ in range(count):
        pts.append(
            OraclePoint(
                n=float(rng.uniform(0.5, 9.0)),
                theta_i=float(rng.uniform(0.2, 2 * np.pi - 0.2)),
                theta_f=float(rng.uniform(0.2, 2 * np.pi - 0.2)),
                phi0=float(rng.uniform(0.0, 2 * np.pi)),
                g=float(rng.uniform(0.01, 0.3)),
                r=float(rng.uniform(0.0, 0.95)),
            )
        )
    return pts
