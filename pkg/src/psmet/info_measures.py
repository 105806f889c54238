"""Fisher information bookkeeping for postselected coherent-state metrology.

All quantities are information about the coupling ``g`` per incident pulse.
The ledger splits the information available after postselection into the
accepted photons (``P_d Q_d``), the rejected photons (``P_r Q_r``) and the
binary accept/reject statistics itself (``F_p``).
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass

from .errors import (
    DegenerateBranchError,
    InvalidArgumentError,
    NumericalError,
    OrthogonalPostselectionError,
    SingularLimitError,
)
from .state_algebra import (
    Branch,
    BranchSuperposition,
    MeterSpec,
    SelectionSpec,
    conditional_meter,
    joint_state,
    meter_g_derivative,
    postselect_prob,
    postselect_prob_derivative,
)

DEGENERATE_PROB = 1e-12
_NORM_TOL = 1e-10
_CLAMP_TOL = 1e-10
_LEDGER_RTOL = 1e-8


@dataclass(frozen=True)
class FisherLedger:
    pd_qd: float
    pr_qr: float
    f_p: float
    f_tot: float
    q_j: float
    p_d: float
    p_r: float
    q_d: float | None  # None when the branch is degenerate
    q_r: float | None


def classical_fisher_two_outcome(p_d: float, dp_d_dg: float, p_r: float | None = None) -> float:
    """Fisher information of the binary distribution ``{P_d, 1 - P_d}``.

    Pass ``p_r`` when it is known more accurately than ``1 - p_d``.
    """
    if not (0.0 <= p_d <= 1.0):
        raise InvalidArgumentError(f"p_d must lie in [0, 1], got {p_d!r}")
    q = 1.0 - p_d if p_r is None else p_r
    if p_d < DEGENERATE_PROB or q < DEGENERATE_PROB:
        if abs(dp_d_dg) < math.sqrt(DEGENERATE_PROB):
            return 0.0
        raise SingularLimitError(
            f"P = {min(p_d, q):.3e} vanishes while dP/dg = {dp_d_dg:.3e} does not"
        )
    return dp_d_dg**2 / (p_d * q)


def pd_derivative_closed(n: float, g: float, phi0: float) -> float:
    """``dP_d/dg = -n exp(-2n sin^2 g) sin(n sin 2g + phi0 + 2g)`` at theta_i = theta_f = pi/2."""
    return -n * math.exp(-2 * n * math.sin(g) ** 2) * math.sin(n * math.sin(2 * g) + phi0 + 2 * g)


def qfi_pure(state: BranchSuperposition, deriv: BranchSuperposition) -> float:
    """``4 [<dPhi|dPhi> - |<Phi|dPhi>|^2]`` for a normalised pure state.

    ``deriv`` must be the derivative of the normalised state, including the
    g-dependence of the normalisation.
    """
    norm2 = state.norm2()
    if abs(norm2 - 1.0) > _NORM_TOL:
        raise InvalidArgumentError(f"state is not normalised (norm^2 = {norm2!r})")
    q = 4.0 * (deriv.norm2() - abs(state.inner(deriv)) ** 2)
    if q < 0.0:
        if q < -_CLAMP_TOL:
            raise NumericalError(f"negative QFI {q!r}")
        q = 0.0
    return q


def _normalised_with_derivative(
    raw: BranchSuperposition,
) -> tuple[float, BranchSuperposition, BranchSuperposition]:
    p = raw.norm2()
    d_raw = meter_g_derivative(raw)
    dp = 2.0 * raw.inner(d_raw).real
    root = math.sqrt(p)
    state = raw.scaled(1.0 / root)
    # quotient rule: d(Phi/sqrt P) = Phi'/sqrt P - P'/(2 P^{3/2}) Phi
    deriv = d_raw.scaled(1.0 / root) + raw.scaled(-dp / (2.0 * p * root))
    return p, state, deriv


def conditional_qfi(sel: SelectionSpec, meter: MeterSpec, g: float, branch: Branch) -> float:
    raw = conditional_meter(sel, meter, g, branch)
    p = raw.norm2()
    if p < DEGENERATE_PROB:
        raise DegenerateBranchError(f"{branch} branch probability {p:.3e} is below {DEGENERATE_PROB}")
    _, state, deriv = _normalised_with_derivative(raw)
    return qfi_pure(state, deriv)


def joint_qfi(sel: SelectionSpec, meter: MeterSpec) -> float:
    """QFI of the state before postselection, ``4 n^2 sin^2(theta_i) + 4 n``."""
    n = meter.n
    return 4 * n * n * math.sin(sel.theta_i) ** 2 + 4 * n


def joint_qfi_numeric(sel: SelectionSpec, meter: MeterSpec, g: float) -> float:
    """Same quantity as :func:`joint_qfi`, evaluated from the joint state itself."""
    state = joint_state(sel, meter, g)
    return qfi_pure(state, meter_g_derivative(state))


def _branch_info(sel: SelectionSpec, meter: MeterSpec, g: float, branch: Branch):
    raw = conditional_meter(sel, meter, g, branch)
    p = raw.norm2()
    if p < DEGENERATE_PROB:
        return None
    _, state, deriv = _normalised_with_derivative(raw)
    return qfi_pure(state, deriv)


def fisher_ledger(sel: SelectionSpec, meter: MeterSpec, g: float) -> FisherLedger:
    dist = postselect_prob(sel, meter, g)
    dp = postselect_prob_derivative(sel, meter, g)
    f_p = classical_fisher_two_outcome(min(dist.p_d, 1.0), dp, dist.p_r)
    q_d = _branch_info(sel, meter, g, "accept")
    q_r = _branch_info(sel, meter, g, "reject")
    pd_qd = 0.0 if q_d is None else dist.p_d * q_d
    pr_qr = 0.0 if q_r is None else dist.p_r * q_r
    f_tot = pd_qd + pr_qr + f_p
    q_j = joint_qfi(sel, meter)
    if f_tot > q_j * (1 + _LEDGER_RTOL) + _CLAMP_TOL:
        raise NumericalError(f"F_tot = {f_tot!r} exceeds the input information {q_j!r}")
    return FisherLedger(pd_qd, pr_qr, f_p, f_tot, q_j, dist.p_d, dist.p_r, q_d, q_r)


def weak_value(sel: SelectionSpec) -> complex:
    """Weak value of sigma_z in the full-angle form used throughout this package.

    ``A_w = (sin ti sin tf e^{i phi0} - cos ti cos tf) / (sin ti sin tf e^{i phi0} + cos ti cos tf)``
    """
    ss = math.sin(sel.theta_i) * math.sin(sel.theta_f) * cmath.exp(1j * sel.phi0)
    cc = math.cos(sel.theta_i) * math.cos(sel.theta_f)
    den = ss + cc
    if abs(den) <= 1e-14:
        raise OrthogonalPostselectionError("pre- and postselected states are orthogonal")
    return (ss - cc) / den


def peak_phi0(n: float, g: float) -> float:
    """Relative phase at which ``dP_d/dg`` vanishes and all information moves to the accepted photons."""
    if n < 0:
        raise InvalidArgumentError(f"photon number must be >= 0, got {n!r}")
    return (math.pi - n * math.sin(2 * g) - 2 * g) % (2 * math.pi)


def fp_small_g_limit(n: float) -> float:
    """``lim_{g->0} F_p`` at phi0 = pi, equal to ``4 n (n + 1)``."""
    if n < 0:
        raise InvalidArgumentError(f"photon number must be >= 0, got {n!r}")
    return 4 * n * (n + 1)


def cramer_rao_bound(fisher: float, trials: int = 1) -> float:
    """Smallest achievable variance of an unbiased estimate of g, ``1 / (N F)``."""
    if not fisher > 0:
        raise InvalidArgumentError(f"Fisher information must be positive, got {fisher!r}")
    if int(trials) != trials or trials < 1:
        raise InvalidArgumentError(f"trial count must be a positive integer, got {trials!r}")
    return 1.0 / (trials * fisher)
