"""Single-parameter regressions of daily interruption counts.

Each weather feature gets four candidate models (polynomials of degree 1-3
and a two-term exponential ``b0 + b1*exp(b2*x) + b3*exp(b4*x)``), scored by
SSE, R-square, adjusted R-square and RMSE. The lowest-RMSE candidate wins.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.special import comb

from .errors import DimensionMismatch, NonConvergence, RankDeficient
from .ingest import FEATURES, Dataset

log = logging.getLogger(__name__)

POLYNOMIAL = "polynomial"
EXPONENTIAL = "exp2"

TIE_RTOL = 1e-6
# RMSE values this small are exact fits and compare as ties
EXACT_RMSE = 1e-9


@dataclass(frozen=True)
class RegressionModel:
    kind: str
    beta: tuple[float, ...]
    input_name: str = ""
    degree: int | None = None

    def __post_init__(self):
        object.__setattr__(self, "beta", tuple(float(b) for b in self.beta))
        if self.kind == POLYNOMIAL:
            if self.degree not in (1, 2, 3):
                raise ValueError(f"polynomial degree must be 1, 2 or 3, got {self.degree}")
            expected = self.degree + 1
        elif self.kind == EXPONENTIAL:
            object.__setattr__(self, "degree", None)
            expected = 5
        else:
            raise ValueError(f"unknown model kind {self.kind!r}")
        if len(self.beta) != expected:
            raise ValueError(f"{self.label} needs {expected} coefficients, got {len(self.beta)}")
        if not all(math.isfinite(b) for b in self.beta):
            raise ValueError(f"non-finite coefficient in {self.beta}")

    @property
    def n_coef(self) -> int:
        return len(self.beta)

    @property
    def label(self) -> str:
        if self.kind == POLYNOMIAL:
            return f"Polynomial({self.degree})"
        return "Exponential(2)"

    @property
    def sort_key(self) -> int:
        return self.degree if self.kind == POLYNOMIAL else 4

    def to_dict(self) -> dict:
        out = {"kind": self.kind, "beta": list(self.beta)}
        if self.kind == POLYNOMIAL:
            out["degree"] = self.degree
        return out

    @classmethod
    def from_dict(cls, data: dict, input_name: str = "") -> "RegressionModel":
        return cls(data["kind"], tuple(data["beta"]), input_name, data.get("degree"))


def polynomial(beta, input_name: str = "") -> RegressionModel:
    return RegressionModel(POLYNOMIAL, tuple(beta), input_name, len(beta) - 1)


def exponential(beta, input_name: str = "") -> RegressionModel:
    return RegressionModel(EXPONENTIAL, tuple(beta), input_name)


def _safe_exp(z):
    return np.exp(np.clip(z, -700.0, 700.0))


def predict(model: RegressionModel, x) -> np.ndarray:
    """Evaluate the model pointwise. No clamping: negative values pass through."""
    x = np.asarray(x, dtype=float)
    b = model.beta
    if model.kind == POLYNOMIAL:
        out = np.full_like(x, b[-1])
        for coef in reversed(b[:-1]):
            out = out * x + coef
        return out
    return b[0] + b[1] * _safe_exp(b[2] * x) + b[3] * _safe_exp(b[4] * x)


def derivative(model: RegressionModel, x) -> np.ndarray:
    """d predict / dx in closed form."""
    x = np.asarray(x, dtype=float)
    b = model.beta
    if model.kind == POLYNOMIAL:
        out = np.zeros_like(x)
        for power in range(len(b) - 1, 0, -1):
            out = out * x + power * b[power]
        return out
    return b[1] * b[2] * _safe_exp(b[2] * x) + b[3] * b[4] * _safe_exp(b[4] * x)


def _check_xyw(x, y, weights):
    x = np.asarray(x, dtype=float).ravel()
    y = np.asarray(y, dtype=float).ravel()
    w = np.ones_like(y) if weights is None else np.asarray(weights, dtype=float).ravel()
    if not (len(x) == len(y) == len(w)):
        raise DimensionMismatch(f"x, y and weights lengths differ: {len(x)}, {len(y)}, {len(w)}")
    if np.any(w < 0) or not np.all(np.isfinite(w)):
        raise DimensionMismatch("weights must be finite and non-negative")
    return x, y, w


# -- polynomial ----------------------------------------------------------------

def fit_polynomial(x, y, degree: int, weights=None, input_name: str = "") -> RegressionModel:
    """Weighted least-squares polynomial fit.

    The abscissa is centred and scaled to [-1, 1] and the Vandermonde columns
    are normalised by their max-abs before the solve; coefficients are then
    mapped back to the raw monomial basis.
    """
    if degree not in (1, 2, 3):
        raise ValueError(f"degree must be 1, 2 or 3, got {degree}")
    x, y, w = _check_xyw(x, y, weights)
    if len(x) < degree + 2:
        raise DimensionMismatch(f"degree {degree} fit needs at least {degree + 2} points, got {len(x)}")
    if len(np.unique(x[w > 0])) < degree + 1:
        raise RankDeficient(f"degree {degree} fit needs {degree + 1} distinct x values")

    center = float(np.mean(x))
    half = float(np.max(np.abs(x - center)))
    u = (x - center) / half
    design = np.vander(u, degree + 1, increasing=True)
    col_scale = np.max(np.abs(design), axis=0)
    design = design / col_scale
    sw = np.sqrt(w)
    gamma, _, rank, _ = np.linalg.lstsq(design * sw[:, None], y * sw, rcond=None)
    if rank < degree + 1:
        raise RankDeficient(f"design matrix has rank {rank} < {degree + 1}")
    gamma = gamma / col_scale

    # sum_j g_j ((x - c)/s)^j expanded into powers of x
    beta = np.zeros(degree + 1)
    for j, g in enumerate(gamma):
        for k in range(j + 1):
            beta[k] += g * comb(j, k, exact=True) * (-center) ** (j - k) / half ** j
    return RegressionModel(POLYNOMIAL, tuple(beta), input_name, degree)


# -- two-term exponential ------------------------------------------------------

@dataclass(frozen=True)
class ExpFitOptions:
    """Solver settings for :func:`fit_exponential2`.

    Start rates are multiples of ``1 / range(x)``; each pair is one start.
    """

    max_iter: int = 200
    grad_tol: float = 1e-8
    damping: float = 1e-3
    start_rates: tuple[tuple[float, float], ...] = (
        (0.5, -0.5), (0.1, -0.1), (0.5, 0.1), (-0.5, -0.1),
        (0.5, -0.1), (-0.5, 0.1), (0.1, 0.01), (-0.1, -0.01),
        (-4.0, -8.0), (4.0, 8.0), (-2.0, 2.0),
    )


@dataclass
class ExpSolveResult:
    """Outcome of one damped Gauss-Newton start, in scaled coordinates."""

    theta: np.ndarray
    sse: float
    grad_norm: float
    iterations: int
    converged: bool


def _exp_design(theta, u):
    a0, a1, r1, a2, r2 = theta
    e1 = _safe_exp(r1 * u)
    e2 = _safe_exp(r2 * u)
    f = a0 + a1 * e1 + a2 * e2
    jac = np.column_stack([np.ones_like(u), e1, a1 * u * e1, e2, a2 * u * e2])
    return f, jac


def exp2_gradient(theta, u, y, w) -> np.ndarray:
    """Gradient of the weighted SSE with respect to the scaled parameters."""
    f, jac = _exp_design(np.asarray(theta, dtype=float), u)
    return -2.0 * jac.T @ (w * (y - f))


MAX_SCALED_RATE = 50.0
# rates closer than this over the scaled range are one exponential with
# cancelling amplitudes: the infimum lies outside the two-term family
MERGED_RATE_GAP = 1e-2
STALL_GAIN = 1e-10


def _solve2(a00, a01, a11, b):
    det = a00 * a11 - a01 * a01
    if not (det > 0.0 and math.isfinite(det)):
        return None
    return np.array([(a11 * b[0] - a01 * b[1]) / det, (a00 * b[1] - a01 * b[0]) / det])


def _spd_solve3(g, b):
    """Cholesky solve of a symmetric positive definite 3x3 system; None if not SPD."""
    l00 = g[0][0]
    if not l00 > 0.0:
        return None
    l00 = math.sqrt(l00)
    l10 = g[1][0] / l00
    l20 = g[2][0] / l00
    d1 = g[1][1] - l10 * l10
    if not d1 > 1e-26 * g[1][1]:
        return None
    l11 = math.sqrt(d1)
    l21 = (g[2][1] - l20 * l10) / l11
    d2 = g[2][2] - l20 * l20 - l21 * l21
    if not d2 > 1e-26 * g[2][2]:
        return None
    l22 = math.sqrt(d2)
    z0 = b[0] / l00
    z1 = (b[1] - l10 * z0) / l11
    z2 = (b[2] - l20 * z0 - l21 * z1) / l22
    x2 = z2 / l22
    x1 = (z1 - l21 * x2) / l11
    x0 = (z0 - l10 * x1 - l20 * x2) / l00
    out = np.array([x0, x1, x2])
    return out if np.all(np.isfinite(out)) else None


def _rate_search(rates, u, y, w, opts: ExpFitOptions) -> ExpSolveResult:
    """Levenberg-damped Gauss-Newton with the offset and amplitudes projected out.

    For fixed rates the offset and amplitudes are a linear least-squares
    problem, so each step re-solves them exactly and only the two rates are
    iterated. Because the amplitudes always sit at their optimum, the SSE
    gradient in the amplitude directions is zero and the rate gradient equals
    the full five-parameter gradient; the stopping test is therefore the full
    one, ``max|grad| < grad_tol * (1 + SSE)``. Working this way keeps the
    solver out of the valley where two nearly equal exponentials cancel with
    huge amplitudes. Returns early, unconverged, when steps stop paying.
    """
    sw = np.sqrt(w)
    ys = y * sw
    usw = u * sw

    def evaluate(rho):
        if abs(rho[0]) > MAX_SCALED_RATE or abs(rho[1]) > MAX_SCALED_RATE:
            return None
        basis = np.empty((3, len(u)))
        basis[0] = sw
        np.multiply(np.exp(rho[0] * u), sw, out=basis[1])
        np.multiply(np.exp(rho[1] * u), sw, out=basis[2])
        gram = (basis @ basis.T).tolist()
        amp = _spd_solve3(gram, (basis @ ys).tolist())
        if amp is None:
            return None
        res = ys - amp @ basis
        sse = float(res @ res)
        if not math.isfinite(sse):
            return None
        return amp, basis, gram, res, sse

    rho = np.asarray(rates, dtype=float)
    state = evaluate(rho)
    if state is None:
        return ExpSolveResult(np.full(5, np.nan), math.inf, math.inf, 0, False)
    amp, basis, gram, res, sse = state
    mu = opts.damping
    it = 0
    while True:
        raw = np.empty((2, len(u)))
        np.multiply(basis[1], amp[1] * u, out=raw[0])
        np.multiply(basis[2], amp[2] * u, out=raw[1])
        # project off the span of the offset/amplitude columns
        cross = (basis @ raw.T).T.tolist()
        coef = np.array([_spd_solve3(gram, c) for c in cross])
        jac = raw - coef @ basis
        # d SSE / d rate = -2 * (d model / d rate) . residual
        rhs = (jac @ res).tolist()
        gnorm = 2.0 * max(abs(rhs[0]), abs(rhs[1]))
        theta = np.array([amp[0], amp[1], rho[0], amp[2], rho[1]])
        if gnorm < opts.grad_tol * (1.0 + sse):
            return ExpSolveResult(theta, sse, gnorm, it, True)
        if it >= opts.max_iter:
            return ExpSolveResult(theta, sse, gnorm, it, False)
        (h00, h01), (_, h11) = (jac @ jac.T).tolist()
        while True:
            it += 1
            step = _solve2(h00 * (1 + mu), h01, h11 * (1 + mu), rhs)
            trial = evaluate(rho + step) if step is not None else None
            if trial is not None and trial[4] < sse:
                gain = sse - trial[4]
                rho = rho + step
                amp, basis, gram, res, sse = trial
                mu = max(mu / 10.0, 1e-12)
                if gain <= STALL_GAIN * sse:
                    # flat direction: hand over to the full-parameter polish
                    theta = np.array([amp[0], amp[1], rho[0], amp[2], rho[1]])
                    return ExpSolveResult(theta, sse, gnorm, it, False)
                break
            mu *= 10.0
            if mu > 1e16 or it >= opts.max_iter:
                # no descent step left: stationarity is judged as it stands
                return ExpSolveResult(theta, sse, gnorm, it, gnorm < opts.grad_tol * (1.0 + sse))


def _levenberg(theta, u, y, w, opts: ExpFitOptions) -> ExpSolveResult:
    """Levenberg-Marquardt on all five scaled parameters."""
    sw = np.sqrt(w)
    ys = y * sw
    usw = u * sw
    n = len(u)

    def evaluate(th):
        if abs(th[2]) > MAX_SCALED_RATE or abs(th[4]) > MAX_SCALED_RATE:
            return None
        jac = np.empty((5, n))
        jac[0] = sw
        np.multiply(np.exp(th[2] * u), sw, out=jac[1])
        np.multiply(np.exp(th[4] * u), sw, out=jac[3])
        rs = ys - (th[0] * jac[0] + th[1] * jac[1] + th[3] * jac[3])
        sse = float(rs @ rs)
        return (jac, rs, sse) if math.isfinite(sse) else None

    theta = np.asarray(theta, dtype=float)
    state = evaluate(theta)
    if state is None:
        return ExpSolveResult(theta, math.inf, math.inf, 0, False)
    jac, rs, sse = state
    mu = opts.damping
    it = 0
    while True:
        np.multiply(jac[1], theta[1] * u, out=jac[2])
        np.multiply(jac[3], theta[3] * u, out=jac[4])
        jtr = jac @ rs
        gnorm = 2.0 * float(np.max(np.abs(jtr)))
        if gnorm < opts.grad_tol * (1.0 + sse):
            return ExpSolveResult(theta, sse, gnorm, it, True)
        if it >= opts.max_iter:
            return ExpSolveResult(theta, sse, gnorm, it, False)
        jtj = jac @ jac.T
        if not np.all(np.isfinite(jtj)):
            return ExpSolveResult(theta, sse, gnorm, it, False)
        diag = np.maximum(np.diag(jtj), 1e-300)
        while True:
            it += 1
            lhs = jtj.copy()
            lhs.flat[::6] += mu * diag
            try:
                step = np.linalg.solve(lhs, jtr)
            except np.linalg.LinAlgError:
                step = None
            trial = evaluate(theta + step) if step is not None and np.all(np.isfinite(step)) else None
            if trial is not None and trial[2] < sse:
                theta = theta + step
                jac, rs, sse = trial
                mu = max(mu / 10.0, 1e-12)
                break
            mu *= 10.0
            if mu > 1e16 or it >= opts.max_iter:
                return ExpSolveResult(theta, sse, gnorm, it, gnorm < opts.grad_tol * (1.0 + sse))


def _unscale_exp(theta, center, half):
    a0, a1, r1, a2, r2 = (float(t) for t in theta)
    terms = sorted([(r1 / half, a1 * math.exp(-r1 * center / half)),
                    (r2 / half, a2 * math.exp(-r2 * center / half))])
    (b2, b1), (b4, b3) = terms
    return (a0, b1, b2, b3, b4)


def fit_exponential2(x, y, weights=None, opts: ExpFitOptions | None = None,
                     input_name: str = "") -> RegressionModel:
    """Fit ``b0 + b1*exp(b2*x) + b3*exp(b4*x)`` by damped Gauss-Newton from several starts.

    The solver works on x rescaled to [-1, 1]; the returned coefficients are in
    raw units with the two terms ordered by rate. Raises ``NonConvergence`` when
    no start reaches the gradient tolerance within ``opts.max_iter`` steps, or
    when the only stationary points found have merged rates.
    """
    opts = opts or ExpFitOptions()
    x, y, w = _check_xyw(x, y, weights)
    if len(x) < 8:
        raise DimensionMismatch(f"exponential fit needs at least 8 points, got {len(x)}")
    lo, hi = float(np.min(x)), float(np.max(x))
    if hi <= lo:
        raise DimensionMismatch("exponential fit is not identifiable for constant x")
    center, half = (lo + hi) / 2.0, (hi - lo) / 2.0
    u = (x - center) / half
    span = hi - lo

    starts = []
    for k1, k2 in opts.start_rates:
        res = _rate_search((k1 / span * half, k2 / span * half), u, y, w, opts)
        if np.all(np.isfinite(res.theta)):
            starts.append(res)
    starts.sort(key=lambda r: r.sse)

    best_ok = None
    best_any = None
    polished = {}
    for res in starts:
        if not res.converged:
            if best_ok is not None and res.sse > best_ok[0].sse * (1.0 + 1e-9):
                # a stalled start above a certified fit cannot overtake it
                continue
            # stalls in one valley share their SSE; polish each valley once,
            # and never a merged one, which stays ineligible whatever happens
            key = float(f"{res.sse:.6g}")
            if abs(res.theta[2] - res.theta[4]) >= MERGED_RATE_GAP:
                if key not in polished:
                    polished[key] = _levenberg(res.theta, u, y, w, opts)
                res = polished[key]
        try:
            model = RegressionModel(EXPONENTIAL, _unscale_exp(res.theta, center, half), input_name)
        except (ValueError, OverflowError):
            continue
        if best_any is None or res.sse < best_any[0].sse:
            best_any = (res, model)
        merged = abs(res.theta[2] - res.theta[4]) < MERGED_RATE_GAP
        if res.converged and not merged and (best_ok is None or res.sse < best_ok[0].sse):
            best_ok = (res, model)

    if best_ok is None:
        best = best_any[1] if best_any else None
        raise NonConvergence(
            f"two-term exponential fit for {input_name or 'x'} did not converge from any start",
            best=best,
        )
    return best_ok[1]


def scaled_exp_gradient(model: RegressionModel, x, y, weights=None) -> np.ndarray:
    """SSE gradient of an exponential model in the solver's scaled coordinates."""
    x, y, w = _check_xyw(x, y, weights)
    lo, hi = float(np.min(x)), float(np.max(x))
    center, half = (lo + hi) / 2.0, (hi - lo) / 2.0
    b0, b1, b2, b3, b4 = model.beta
    theta = (b0, b1 * math.exp(b2 * center), b2 * half, b3 * math.exp(b4 * center), b4 * half)
    return exp2_gradient(theta, (x - center) / half, y, w)


# -- goodness of fit -----------------------------------------------------------

@dataclass(frozen=True)
class FitReport:
    sse: float
    r_square: float | None
    adj_r_square: float | None
    rmse: float
    dof: int
    n: int
    weights: np.ndarray | None = field(default=None, compare=False, repr=False)

    def to_dict(self) -> dict:
        return {"sse": self.sse, "r2": self.r_square, "adj_r2": self.adj_r_square,
                "rmse": self.rmse, "dof": self.dof}


def goodness_of_fit(model: RegressionModel, x, y, weights=None) -> FitReport:
    """SSE, R-square, adjusted R-square and RMSE of ``model`` on (x, y).

    R-square fields are ``None`` when y has zero weighted variance.
    """
    x, y, w = _check_xyw(x, y, weights)
    n = len(y)
    dof = n - model.n_coef
    if dof < 1:
        raise DimensionMismatch(f"{n} points leave no residual degrees of freedom for {model.n_coef} coefficients")
    resid = y - predict(model, x)
    sse = float(np.sum(w * resid ** 2))
    ybar = float(np.sum(w * y) / np.sum(w))
    sst = float(np.sum(w * (y - ybar) ** 2))
    if sst > 0:
        # differences first keep hand-checkable ratios exact (5 - 4) / 5 == 0.2
        r2 = (sst - sse) / sst
        adj = (sst * dof - sse * (n - 1)) / (sst * dof)
    else:
        r2 = adj = None
    return FitReport(sse, r2, adj, math.sqrt(sse / dof), dof, n, None if weights is None else w)


# -- selection and catalog -------------------------------------------------------

@dataclass(frozen=True)
class Candidate:
    """One fitted (or failed) candidate model for a feature."""

    kind: str
    degree: int | None
    model: RegressionModel | None = None
    report: FitReport | None = None
    status: str = "ok"  # "ok" | "nonconverged" | "failed"
    error: str = ""

    @property
    def eligible(self) -> bool:
        return self.status == "ok" and self.report is not None

    @property
    def n_coef(self) -> int:
        return self.degree + 1 if self.kind == POLYNOMIAL else 5

    @property
    def sort_key(self) -> int:
        return self.degree if self.kind == POLYNOMIAL else 4

    def to_dict(self) -> dict:
        out = {"kind": self.kind, "degree": self.degree}
        out["beta"] = list(self.model.beta) if self.model else []
        rep = self.report.to_dict() if self.report else dict.fromkeys(("sse", "r2", "adj_r2", "rmse", "dof"))
        out.update(rep)
        out["status"] = self.status
        if self.error:
            out["error"] = self.error
        return out


def select_best(candidates: Sequence[Candidate]) -> Candidate:
    """Lowest RMSE wins.

    RMSEs within a relative 1e-6 of the minimum count as tied; ties go to
    fewer coefficients, then lower SSE, then the simpler kind.
    """
    pool = [c for c in candidates if c.eligible]
    if not pool:
        raise ValueError("no eligible candidates to select from")
    best_rmse = min(c.report.rmse for c in pool)
    cutoff = max(best_rmse * (1.0 + TIE_RTOL), EXACT_RMSE)
    tied = [c for c in pool if c.report.rmse <= cutoff]
    return min(tied, key=lambda c: (c.n_coef, c.report.sse, c.sort_key))


CANDIDATE_SPECS = ((POLYNOMIAL, 1), (POLYNOMIAL, 2), (POLYNOMIAL, 3), (EXPONENTIAL, None))


def fit_candidate(kind, degree, x, y, weights=None, opts=None, input_name="") -> Candidate:
    try:
        if kind == POLYNOMIAL:
            model = fit_polynomial(x, y, degree, weights, input_name)
        else:
            model = fit_exponential2(x, y, weights, opts, input_name)
    except NonConvergence as exc:
        report = goodness_of_fit(exc.best, x, y, weights) if exc.best is not None else None
        return Candidate(kind, degree, exc.best, report, "nonconverged", str(exc))
    except (RankDeficient, DimensionMismatch) as exc:
        return Candidate(kind, degree, status="failed", error=str(exc))
    return Candidate(kind, degree, model, goodness_of_fit(model, x, y, weights))


@dataclass
class CatalogEntry:
    feature: str
    candidates: list[Candidate]
    winner: int

    @property
    def model(self) -> RegressionModel:
        return self.candidates[self.winner].model

    def to_dict(self) -> dict:
        return {"feature": self.feature,
                "candidates": [c.to_dict() for c in self.candidates],
                "winner": self.winner}


@dataclass
class ModelCatalog:
    target: str
    entries: list[CatalogEntry]
    dropped: dict[str, str] = field(default_factory=dict)

    @property
    def features(self) -> list[str]:
        return [e.feature for e in self.entries]

    def winner(self, feature: str) -> RegressionModel:
        for e in self.entries:
            if e.feature == feature:
                return e.model
        raise KeyError(feature)

    def winners(self) -> dict[str, RegressionModel]:
        return {e.feature: e.model for e in self.entries}

    def to_json(self) -> list[dict]:
        out = [e.to_dict() for e in self.entries]
        out.extend({"feature": f, "candidates": [], "winner": None, "dropped": reason}
                   for f, reason in self.dropped.items())
        return out

    @classmethod
    def from_json(cls, target: str, data: list[dict]) -> "ModelCatalog":
        entries, dropped = [], {}
        for item in data:
            if item.get("winner") is None:
                dropped[item["feature"]] = item.get("dropped", "")
                continue
            cands = []
            for c in item["candidates"]:
                model = RegressionModel.from_dict(c, item["feature"]) if c["beta"] else None
                report = None
                if c.get("rmse") is not None:
                    report = FitReport(c["sse"], c["r2"], c["adj_r2"], c["rmse"], c["dof"], c["dof"] + len(c["beta"]))
                cands.append(Candidate(c["kind"], c.get("degree"), model, report, c.get("status", "ok"), c.get("error", "")))
            entries.append(CatalogEntry(item["feature"], cands, item["winner"]))
        return cls(target, entries, dropped)


TARGETS = {"N": 0, "M": 1}


def target_column(ds: Dataset, target: str) -> np.ndarray:
    target = target.upper()
    if target not in TARGETS:
        raise ValueError(f"target must be 'N' or 'M', got {target!r}")
    return ds.targets()[:, TARGETS[target]]


def fit_feature(feature: str, x, y, weights=None, opts=None) -> CatalogEntry | None:
    """Fit all four candidates for one feature; ``None`` if none is usable."""
    cands = [fit_candidate(kind, deg, x, y, weights, opts, feature) for kind, deg in CANDIDATE_SPECS]
    if not any(c.eligible for c in cands):
        return None
    best = select_best(cands)
    return CatalogEntry(feature, cands, cands.index(best))


def fit_catalog(ds: Dataset, target: str, weights=None, opts: ExpFitOptions | None = None,
                features: Sequence[str] = FEATURES) -> ModelCatalog:
    """Fit, score and select a model for every weather feature against ``target``."""
    ds.require_size()
    y = target_column(ds, target)
    entries, dropped = [], {}
    for name in features:
        entry = fit_feature(name, ds.column(name), y, weights, opts)
        if entry is None:
            reason = "every candidate model failed to fit"
            log.warning("dropping feature %s for target %s: %s", name, target.upper(), reason)
            dropped[name] = reason
        else:
            entries.append(entry)
    return ModelCatalog(target.upper(), entries, dropped)
