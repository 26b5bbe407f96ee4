"""First-derivative sensitivity of the forecaster outputs to each weather parameter."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import expit

from .errors import DimensionMismatch, InputError
from .ingest import Dataset, DailyWeather
from .mlp import OUTPUTS, FeatureSpec, MlpNetwork, TrainedForecaster, _raw_matrix, feature_matrix
from .regression import derivative

RAW = "raw"
PER_SD = "per_sd"


def analytic_input_gradient(net: MlpNetwork, x) -> np.ndarray:
    """``d output_o / d input_i`` as an (inputs, outputs) matrix."""
    x = np.asarray(x, dtype=float)
    if x.shape != (net.n_inputs,):
        raise DimensionMismatch(f"expected {net.n_inputs} inputs, got shape {x.shape}")
    return batch_input_gradient(net, x[None, :])[0]


def batch_input_gradient(net: MlpNetwork, inputs) -> np.ndarray:
    """Per-row input gradients, shape (k, inputs, outputs)."""
    x = np.asarray(inputs, dtype=float)
    if x.ndim != 2 or x.shape[1] != net.n_inputs:
        raise DimensionMismatch(f"expected k x {net.n_inputs} inputs, got shape {x.shape}")
    g = expit(x @ net.w.T + net.b_hidden)
    slope = g * (1.0 - g)
    return np.einsum("mi,kmo->kio", net.w, slope[:, :, None] * net.v[None, :, :])


def _chain_weights(spec: FeatureSpec, raw: np.ndarray) -> np.ndarray:
    """d input_q / d raw_p for every row: shape (k, raw params, inputs)."""
    k, n_raw = raw.shape
    jac = np.zeros((k, n_raw, spec.input_dim))
    pos = {f: i for i, f in enumerate(spec.raw_features)}
    for i in range(n_raw):
        jac[:, i, i] = 1.0
    cat_n, cat_m = spec.catalog_n, spec.catalog_m
    agg_n, agg_m = spec.input_dim - 2, spec.input_dim - 1
    for j, f in enumerate(spec.derived_features):
        slope = derivative(cat_n.winner(f), raw[:, pos[f]])
        jac[:, pos[f], n_raw + j] = slope
        jac[:, pos[f], agg_n] = slope / len(cat_n.entries)
    for e in cat_m.entries:
        jac[:, pos[e.feature], agg_m] = derivative(e.model, raw[:, pos[e.feature]]) / len(cat_m.entries)
    return jac / spec.scale


def chain_to_raw(feature_grad, spec: FeatureSpec, record: DailyWeather) -> np.ndarray:
    """Map an (inputs, outputs) gradient on normalised inputs to (raw params, outputs)."""
    feature_grad = np.asarray(feature_grad, dtype=float)
    if feature_grad.ndim != 2 or feature_grad.shape[0] != spec.input_dim:
        raise DimensionMismatch(f"expected a {spec.input_dim} x outputs gradient, got {feature_grad.shape}")
    raw = np.array([[getattr(record, f) for f in spec.raw_features]], dtype=float)
    return _chain_weights(spec, raw)[0] @ feature_grad


def raw_derivatives(forecaster: TrainedForecaster, data) -> np.ndarray:
    """d output / d raw parameter for every row, shape (k, raw params, outputs)."""
    spec = forecaster.feature_spec
    raw = _raw_matrix(data, spec.raw_features)
    grads = batch_input_gradient(forecaster.network, feature_matrix(raw, spec))
    return np.einsum("kpi,kio->kpo", _chain_weights(spec, raw), grads)


def normalise_scores(mean_abs: np.ndarray) -> np.ndarray:
    """Columns scaled to sum to 1; an all-zero column becomes uniform."""
    totals = mean_abs.sum(axis=0)
    uniform = np.full_like(mean_abs, 1.0 / mean_abs.shape[0])
    safe = np.where(totals > 0, totals, 1.0)
    return np.where(totals > 0, mean_abs / safe, uniform)


@dataclass(frozen=True, eq=False)
class SensitivityReport:
    parameters: tuple[str, ...]
    scores: np.ndarray       # (params, outputs), columns sum to 1
    mean_abs: np.ndarray     # (params, outputs), before normalisation
    units: str
    days: int
    per_day: np.ndarray | None = None

    def ranked(self, output: str) -> list[str]:
        col = self.scores[:, OUTPUTS.index(output)]
        order = sorted(range(len(self.parameters)), key=lambda i: (-col[i], self.parameters[i]))
        return [self.parameters[i] for i in order]

    def score(self, parameter: str, output: str) -> float:
        return float(self.scores[self.parameters.index(parameter), OUTPUTS.index(output)])

    def to_json(self) -> dict:
        outs = []
        for o, name in enumerate(OUTPUTS):
            outs.append({
                "output": name,
                "scores": [{"parameter": p, "score": float(self.scores[i, o]),
                            "mean_abs_derivative": float(self.mean_abs[i, o])}
                           for i, p in enumerate(self.parameters)],
                "ranked": self.ranked(name),
            })
        return {"units": self.units, "days": self.days, "outputs": outs}

    def to_csv(self) -> str:
        lines = ["output,parameter,score,mean_abs_derivative,rank"]
        for o, name in enumerate(OUTPUTS):
            rank = {p: r + 1 for r, p in enumerate(self.ranked(name))}
            for i, p in enumerate(self.parameters):
                lines.append(f"{name},{p},{float(self.scores[i, o])!r},{float(self.mean_abs[i, o])!r},{rank[p]}")
        return "\n".join(lines) + "\n"


def aggregate(forecaster: TrainedForecaster, ds: Dataset, units: str = PER_SD,
              keep_per_day: bool = False) -> SensitivityReport:
    """Mean absolute raw-parameter derivative over ``ds``, normalised per output.

    ``units="per_sd"`` multiplies each parameter's derivative by that
    parameter's training-split standard deviation (the normalisation scale of
    its raw input), so parameters measured in strikes, inches and degrees are
    compared per typical variation. ``units="raw"`` leaves them per unit.
    """
    if units not in (RAW, PER_SD):
        raise InputError(f"units must be {RAW!r} or {PER_SD!r}, got {units!r}")
    if not len(ds):
        raise InputError("sensitivity needs a non-empty dataset")
    spec = forecaster.feature_spec
    per_day = raw_derivatives(forecaster, ds)
    if units == PER_SD:
        per_day = per_day * spec.scale[: len(spec.raw_features)][None, :, None]
    mean_abs = np.mean(np.abs(per_day), axis=0)
    return SensitivityReport(tuple(spec.raw_features), normalise_scores(mean_abs), mean_abs, units, len(ds),
                             per_day if keep_per_day else None)
