"""Run configuration, parameter sweeps, peak search and CSV output."""

from __future__ import annotations

import dataclasses
import math
import re
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Sequence

import numpy as np

from .errors import (
    DegenerateBranchError,
    InvalidArgumentError,
    SingularApproximationError,
    SingularLimitError,
)
from .fock_oracle import OraclePoint, OracleReport, TruncationSpec, oracle_report, random_points
from .info_measures import (
    DEGENERATE_PROB,
    classical_fisher_two_outcome,
    conditional_qfi,
    joint_qfi,
)
from .recycling import MirrorSpec, f_pow_approx, f_pow_exact, recycled_distribution
from .state_algebra import MeterSpec, SelectionSpec, postselect_prob, postselect_prob_derivative

AXES = ("theta_f", "phi0", "g", "r", "n", "theta_i")
METRIC_SETS = ("ledger", "recycled")
PEAK_METRICS = ("F_tot", "PdQd", "PrQr", "F_p", "F_pow")
LEDGER_COLUMNS = ("P_d", "P_r", "Q_d", "Q_r", "PdQd", "PrQr", "F_p", "F_tot", "Q_j")
RECYCLED_COLUMNS = ("P_c", "P_b", "F_c", "F_b", "F_pow", "F_pow_approx")
COARSE_POINTS = 64
PEAK_TOL = 1e-6

_DEFAULT_RANGES = {
    "theta_f": (0.0, 2 * math.pi),
    "theta_i": (0.0, 2 * math.pi),
    "phi0": (0.0, 2 * math.pi),
    "g": (1e-3, 0.05 * math.pi),
    "r": (0.0, 0.95),
    "n": (1.0, 16.0),
}

_PI_LITERAL = re.compile(r"([+-]?)(\d*\.?\d*(?:[eE][+-]?\d+)?)\*?pi(?:/(\d+\.?\d*))?")


def parse_number(text: str | float) -> float:
    """Parse a float, also accepting multiples of pi such as ``0.5pi``, ``-pi`` or ``pi/2``."""
    if isinstance(text, (int, float)):
        value = float(text)
    else:
        s = text.strip().replace(" ", "").lower()
        m = _PI_LITERAL.fullmatch(s)
        try:
            if m:
                sign, coef, den = m.groups()
                value = (float(coef) if coef else 1.0) * math.pi / (float(den) if den else 1.0)
                value = -value if sign == "-" else value
            else:
                value = float(s)
        except ValueError:
            raise InvalidArgumentError(f"cannot parse number {text!r}") from None
    if not math.isfinite(value):
        raise InvalidArgumentError(f"non-finite value {text!r}")
    return value


@dataclass(frozen=True)
class RunConfig:
    n: float = 4.0
    g: float = 0.05
    theta_i: float = math.pi / 2
    theta_f: float = math.pi / 2
    phi0: float = math.pi
    phi_i: float | None = None
    phi_f: float | None = None
    r: float = 0.0
    cavity_phase: float = 0.0
    axis: str | None = None
    start: float | None = None
    stop: float | None = None
    steps: int = 512
    metric: str = "ledger"
    fd_step: float = 1e-5
    trunc_tol: float = 1e-14
    seed: int = 0
    points: int = 100
    prob_tol: float = 1e-6
    fd_tol: float = 1e-5
    out: str | None = None
    format: str = "csv"

    def __post_init__(self):
        for f in dataclasses.fields(self):
            v = getattr(self, f.name)
            if isinstance(v, float) and not math.isfinite(v):
                raise InvalidArgumentError(f"{f.name} must be finite")
        if self.n < 0:
            raise InvalidArgumentError("n must be >= 0")
        if not 0.0 <= self.r < 1.0:
            raise InvalidArgumentError("r must lie in [0, 1)")
        if self.axis is not None and self.axis not in AXES:
            raise InvalidArgumentError(f"unknown axis {self.axis!r}; choose from {', '.join(AXES)}")
        if self.steps < 2:
            raise InvalidArgumentError("steps must be >= 2")
        if self.points < 1:
            raise InvalidArgumentError("points must be >= 1")
        if self.format not in ("csv", "tsv"):
            raise InvalidArgumentError(f"unknown format {self.format!r}")
        if self.metric not in METRIC_SETS + PEAK_METRICS:
            raise InvalidArgumentError(f"unknown metric {self.metric!r}")
        for name in ("fd_step", "trunc_tol", "prob_tol", "fd_tol"):
            if not getattr(self, name) > 0:
                raise InvalidArgumentError(f"{name} must be positive")
        if self.axis is not None:
            lo, hi = self.bounds
            if not lo < hi:
                raise InvalidArgumentError(f"sweep range must satisfy from < to, got [{lo}, {hi}]")

    @property
    def effective_phi0(self) -> float:
        if self.phi_i is not None or self.phi_f is not None:
            return (self.phi_i or 0.0) - (self.phi_f or 0.0)
        return self.phi0

    @property
    def bounds(self) -> tuple[float, float]:
        lo, hi = _DEFAULT_RANGES[self.axis]
        return (lo if self.start is None else self.start, hi if self.stop is None else self.stop)

    @property
    def recycled(self) -> bool:
        return self.metric == "recycled" or self.metric == "F_pow"

    def at(self, value: float) -> "RunConfig":
        """Copy with the sweep axis set to ``value``."""
        if self.axis == "phi0":
            return dataclasses.replace(self, phi0=value, phi_i=None, phi_f=None)
        return dataclasses.replace(self, **{self.axis: value})

    def selection(self) -> SelectionSpec:
        return SelectionSpec.with_phi0(self.theta_i, self.theta_f, self.effective_phi0)

    def meter(self) -> MeterSpec:
        return MeterSpec.from_photon_number(self.n)

    def mirror(self) -> MirrorSpec:
        return MirrorSpec(self.r, self.cavity_phase)


_FIELD_TYPES = {f.name: f.type for f in dataclasses.fields(RunConfig)}
_KEY_ALIASES = {"from": "start", "to": "stop"}
_STRING_KEYS = {"axis", "metric", "out", "format"}
_INT_KEYS = {"steps", "seed", "points"}


def coerce_setting(key: str, value: str) -> tuple[str, object]:
    """Map a config key (``theta-i``, ``from``, ...) and its text to a RunConfig field."""
    name = key.strip().replace("-", "_")
    name = _KEY_ALIASES.get(name, name)
    if name not in _FIELD_TYPES:
        raise InvalidArgumentError(f"unknown configuration key {key!r}")
    if name in _STRING_KEYS:
        return name, str(value).strip()
    if name in _INT_KEYS:
        number = parse_number(value)
        if number != int(number):
            raise InvalidArgumentError(f"{key} must be an integer, got {value!r}")
        return name, int(number)
    return name, parse_number(value)


def read_config_file(path: str | Path) -> dict:
    """Parse ``key = value`` lines; ``#`` starts a comment."""
    settings = {}
    text = _resolve_config(path).read_text()
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise InvalidArgumentError(f"{path}:{lineno}: expected 'key = value'")
        key, value = line.split("=", 1)
        name, parsed = coerce_setting(key, value)
        settings[name] = parsed
    return settings


def _resolve_config(path: str | Path):
    p = Path(path)
    if p.is_file():
        return p
    name = p.name if p.suffix == ".cfg" else p.name + ".cfg"
    preset = resources.files("psmet") / "presets" / name
    if preset.is_file():
        return preset
    raise InvalidArgumentError(f"configuration file {str(path)!r} not found")


def preset_names() -> list[str]:
    folder = resources.files("psmet") / "presets"
    return sorted(p.name[:-4] for p in folder.iterdir() if p.name.endswith(".cfg"))


def build_config(config_file: str | Path | None = None, **overrides) -> RunConfig:
    """Defaults, then the config file, then ``overrides`` (``None`` values are ignored)."""
    settings = read_config_file(config_file) if config_file else {}
    overrides = {k: v for k, v in overrides.items() if v is not None}
    if "phi0" in overrides and not {"phi_i", "phi_f"} & overrides.keys():
        settings.pop("phi_i", None)
        settings.pop("phi_f", None)
    settings.update(overrides)
    try:
        return RunConfig(**settings)
    except TypeError as exc:
        raise InvalidArgumentError(str(exc)) from None


@dataclass(frozen=True)
class LedgerRow:
    axis: float | None
    values: dict[str, float | None] = field(default_factory=dict)

    def __getitem__(self, key: str) -> float | None:
        return self.values[key]


def _optional_qfi(sel, meter, g, branch, p):
    if p < DEGENERATE_PROB:
        return None
    try:
        return conditional_qfi(sel, meter, g, branch)
    except DegenerateBranchError:
        return None


def evaluate_point(cfg: RunConfig, axis_value: float | None = None, recycled: bool | None = None) -> LedgerRow:
    """All ledger (and optionally recycling) columns at one parameter point.

    Undefined entries (degenerate branches, singular limits) are ``None``.
    """
    sel, meter, g = cfg.selection(), cfg.meter(), cfg.g
    dist = postselect_prob(sel, meter, g)
    dp = postselect_prob_derivative(sel, meter, g)
    try:
        f_p = classical_fisher_two_outcome(min(dist.p_d, 1.0), dp, dist.p_r)
    except SingularLimitError:
        f_p = None
    q_d = _optional_qfi(sel, meter, g, "accept", dist.p_d)
    q_r = _optional_qfi(sel, meter, g, "reject", dist.p_r)
    pd_qd = 0.0 if q_d is None else dist.p_d * q_d
    pr_qr = 0.0 if q_r is None else dist.p_r * q_r
    values: dict[str, float | None] = {
        "P_d": dist.p_d,
        "P_r": dist.p_r,
        "Q_d": q_d,
        "Q_r": q_r,
        "PdQd": pd_qd,
        "PrQr": pr_qr,
        "F_p": f_p,
        "F_tot": None if f_p is None else pd_qd + pr_qr + f_p,
        "Q_j": joint_qfi(sel, meter),
    }
    if cfg.recycled if recycled is None else recycled:
        values.update(_recycled_values(cfg, sel, meter, g))
    return LedgerRow(axis_value, values)


def _recycled_values(cfg, sel, meter, g) -> dict:
    mirror = cfg.mirror()
    out: dict[str, float | None] = dict.fromkeys(RECYCLED_COLUMNS)
    try:
        rec = f_pow_exact(sel, meter, g, mirror, cfg.fd_step)
        out.update(P_c=rec.p_c, P_b=rec.p_b, F_c=rec.f_c, F_b=rec.f_b, F_pow=rec.f_pow)
    except DegenerateBranchError:
        d = recycled_distribution(sel, meter, g, mirror)
        out.update(P_c=d.p_c, P_b=d.p_b)
    symmetric = math.isclose(cfg.theta_i, math.pi / 2) and math.isclose(cfg.theta_f, math.pi / 2)
    at_pi = math.isclose(math.cos(sel.phi0), -1.0, abs_tol=1e-12)
    if symmetric and at_pi and cfg.cavity_phase == 0.0:
        try:
            out["F_pow_approx"] = f_pow_approx(meter.n, g, cfg.r)
        except SingularApproximationError:
            pass
    return out


def run_ledger(cfg: RunConfig) -> LedgerRow:
    return evaluate_point(cfg)


def run_recycle(cfg: RunConfig) -> LedgerRow:
    return evaluate_point(cfg, recycled=True)


def axis_values(cfg: RunConfig, steps: int | None = None) -> np.ndarray:
    if cfg.axis is None:
        raise InvalidArgumentError("a sweep needs an axis")
    lo, hi = cfg.bounds
    return np.linspace(lo, hi, cfg.steps if steps is None else steps)


def run_sweep(cfg: RunConfig) -> list[LedgerRow]:
    return [evaluate_point(cfg.at(float(x)), float(x)) for x in axis_values(cfg)]


def columns(recycled: bool) -> tuple[str, ...]:
    return ("axis",) + LEDGER_COLUMNS + (RECYCLED_COLUMNS if recycled else ())


def format_rows(rows: Sequence[LedgerRow], fmt: str = "csv", recycled: bool = False) -> str:
    sep = "," if fmt == "csv" else "\t"
    cols = columns(recycled)
    lines = [sep.join(cols)]
    for row in rows:
        cells = [_cell(row.axis)] + [_cell(row.values.get(c)) for c in cols[1:]]
        lines.append(sep.join(cells))
    return "\n".join(lines) + "\n"


def _cell(v: float | None) -> str:
    if v is None or not math.isfinite(v):
        return ""
    return f"{v:.17g}"


def emit_csv(rows: Sequence[LedgerRow], fmt: str = "csv", path: str | Path | None = None, recycled: bool = False) -> str:
    """Render rows and, if ``path`` is given, write them there (LF line endings)."""
    text = format_rows(rows, fmt, recycled)
    if path is not None:
        try:
            with open(path, "w", newline="\n") as fh:
                fh.write(text)
        except OSError as exc:
            raise InvalidArgumentError(f"cannot write {path}: {exc}") from None
    return text


@dataclass(frozen=True)
class PeakResult:
    x: float
    value: float
    bracket_width: float
    boundary: bool = False


def _metric_at(cfg: RunConfig, metric: str, x: float) -> float:
    row = evaluate_point(cfg.at(x), x, recycled=metric == "F_pow")
    v = row.values.get(metric)
    return -math.inf if v is None else v


def find_peak(cfg: RunConfig, metric: str, tol: float = PEAK_TOL) -> PeakResult:
    """Maximise ``metric`` along the configured axis.

    A 64-point scan picks the bracket around the best sample (ties within
    1e-9 relative go to the smaller axis value); golden-section search then
    shrinks it below ``tol``.  A maximum on the scan boundary is reported as
    such without refinement.
    """
    if metric not in PEAK_METRICS:
        raise InvalidArgumentError(f"unknown peak metric {metric!r}")
    xs = axis_values(cfg, COARSE_POINTS)
    ys = np.array([_metric_at(cfg, metric, float(x)) for x in xs])
    if not np.isfinite(ys).any():
        raise InvalidArgumentError(f"{metric} is undefined over the whole range")
    best = ys.max()
    i = int(np.flatnonzero(ys >= best - 1e-9 * abs(best))[0])
    if i == 0 or i == len(xs) - 1:
        return PeakResult(float(xs[i]), float(ys[i]), 0.0, boundary=True)

    def f(x):
        return _metric_at(cfg, metric, x)

    a, b = float(xs[i - 1]), float(xs[i + 1])
    inv_phi = (math.sqrt(5) - 1) / 2
    c, d = b - inv_phi * (b - a), a + inv_phi * (b - a)
    fc, fd = f(c), f(d)
    while b - a > tol:
        if fc >= fd:
            b, d, fd = d, c, fc
            c = b - inv_phi * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + inv_phi * (b - a)
            fd = f(d)
    x = 0.5 * (a + b)
    return PeakResult(x, f(x), b - a)


def verify_points(cfg: RunConfig) -> list[OraclePoint]:
    """The configured point followed by ``points - 1`` seeded random points."""
    first = OraclePoint(cfg.n, cfg.theta_i, cfg.theta_f, cfg.effective_phi0, cfg.g, cfg.r, cfg.cavity_phase)
    return [first] + random_points(cfg.points - 1, cfg.seed)


def run_verify(cfg: RunConfig) -> OracleReport:
    return oracle_report(
        verify_points(cfg),
        trunc=TruncationSpec(tail_tol=cfg.trunc_tol),
        h=cfg.fd_step,
        prob_tol=cfg.prob_tol,
        fd_tol=cfg.fd_tol,
    )


def format_report(report: OracleReport, fmt: str = "csv") -> str:
    sep = "," if fmt == "csv" else "\t"
    lines = [sep.join(("point", "quantity", "analytic", "oracle", "rel_err", "status"))]
    for r in report.rows:
        lines.append(
            sep.join((str(r.point), r.quantity, _cell(r.analytic), _cell(r.oracle), _cell(r.rel_err), r.status))
        )
    return "\n".join(lines) + "\n"
