"""Hybrid single-hidden-layer network trained by a ridge-regularised ELM solve.

Inputs are the raw daily weather features, the per-feature N-catalog
predictions, and the means of the N- and M-catalog predictions, each
z-scored with statistics from the training split.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import LinAlgError, cho_factor, cho_solve
from scipy.special import expit

from .errors import DimensionMismatch, InputError, MissingCatalogEntry, SingularSystem
from .ingest import FEATURES, DailyWeather, Dataset
from .regression import ModelCatalog, RegressionModel, predict

MODEL_VERSION = "gridcast-mlp/1"
OUTPUTS = ("N", "M")
SIGMOID = "sigmoid"
IDENTITY = "identity"


@dataclass(frozen=True, eq=False)
class FeatureSpec:
    """Input layout plus the train-split affine normalisation of every input."""

    raw_features: tuple[str, ...]
    catalog_n: ModelCatalog
    catalog_m: ModelCatalog
    shift: np.ndarray
    scale: np.ndarray

    def __post_init__(self):
        for cat in (self.catalog_n, self.catalog_m):
            extra = [f for f in cat.features if f not in self.raw_features]
            if extra:
                raise MissingCatalogEntry(f"catalog {cat.target} has features not among the raw inputs: {extra}")
            if not cat.entries:
                raise MissingCatalogEntry(f"catalog {cat.target} has no fitted features")
        if self.shift.shape != (self.input_dim,) or self.scale.shape != (self.input_dim,):
            raise DimensionMismatch(f"normalisation must have length {self.input_dim}")
        if not (np.all(self.scale > 0) and np.all(np.isfinite(self.scale)) and np.all(np.isfinite(self.shift))):
            raise InputError("normalisation scales must be positive and finite")

    @property
    def derived_features(self) -> list[str]:
        kept = set(self.catalog_n.features)
        return [f for f in self.raw_features if f in kept]

    @property
    def input_dim(self) -> int:
        return len(self.raw_features) + len(self.catalog_n.entries) + 2

    @property
    def input_names(self) -> list[str]:
        return (list(self.raw_features) + [f"pred_n:{f}" for f in self.derived_features]
                + ["mean_pred_n", "mean_pred_m"])

    def to_dict(self) -> dict:
        return {
            "raw_features": list(self.raw_features),
            "input_names": self.input_names,
            "input_dim": self.input_dim,
            "catalogs": {"N": self.catalog_n.to_json(), "M": self.catalog_m.to_json()},
            "shift": self.shift.tolist(),
            "scale": self.scale.tolist(),
        }

    @classmethod
    def from_dict(cls, data: dict) -> "FeatureSpec":
        return cls(
            tuple(data["raw_features"]),
            ModelCatalog.from_json("N", data["catalogs"]["N"]),
            ModelCatalog.from_json("M", data["catalogs"]["M"]),
            np.asarray(data["shift"], dtype=float),
            np.asarray(data["scale"], dtype=float),
        )


def _raw_matrix(ds_or_matrix, raw_features) -> np.ndarray:
    if isinstance(ds_or_matrix, Dataset):
        return np.column_stack([ds_or_matrix.column(f) for f in raw_features]) if len(ds_or_matrix) else \
            np.empty((0, len(raw_features)))
    x = np.asarray(ds_or_matrix, dtype=float)
    if x.ndim != 2 or x.shape[1] != len(raw_features):
        raise DimensionMismatch(f"expected a k x {len(raw_features)} feature matrix, got shape {x.shape}")
    return x


def unnormalised_inputs(raw: np.ndarray, raw_features, catalog_n: ModelCatalog, catalog_m: ModelCatalog) -> np.ndarray:
    """Assemble the un-normalised input matrix from a k x len(raw_features) matrix."""
    col = {f: raw[:, i] for i, f in enumerate(raw_features)}
    kept_n = set(catalog_n.features)
    pred_n = [predict(catalog_n.winner(f), col[f]) for f in raw_features if f in kept_n]
    pred_m = [predict(e.model, col[e.feature]) for e in catalog_m.entries]
    agg = np.column_stack([np.mean(pred_n, axis=0), np.mean(pred_m, axis=0)])
    return np.column_stack([raw] + pred_n + [agg])


def fit_feature_spec(train: Dataset, catalog_n: ModelCatalog, catalog_m: ModelCatalog,
                     raw_features=FEATURES) -> FeatureSpec:
    """Z-score every input using training-split statistics; constant inputs get scale 1."""
    for cat in (catalog_n, catalog_m):
        missing = [f for f in cat.features if f not in raw_features]
        if missing:
            raise MissingCatalogEntry(f"catalog {cat.target} has features not among the raw inputs: {missing}")
        if not cat.entries:
            raise MissingCatalogEntry(f"catalog {cat.target} has no fitted features")
    raw = _raw_matrix(train, raw_features)
    x = unnormalised_inputs(raw, raw_features, catalog_n, catalog_m)
    shift = x.mean(axis=0)
    scale = x.std(axis=0)
    scale[~(scale > 0)] = 1.0
    return FeatureSpec(tuple(raw_features), catalog_n, catalog_m, shift, scale)


def feature_matrix(data, spec: FeatureSpec) -> np.ndarray:
    """Normalised k x input_dim matrix for a Dataset or a raw feature matrix."""
    raw = _raw_matrix(data, spec.raw_features)
    return (unnormalised_inputs(raw, spec.raw_features, spec.catalog_n, spec.catalog_m) - spec.shift) / spec.scale


def build_features(record: DailyWeather, spec: FeatureSpec) -> np.ndarray:
    raw = np.array([[getattr(record, f) for f in spec.raw_features]], dtype=float)
    return feature_matrix(raw, spec)[0]


@dataclass(frozen=True, eq=False)
class MlpNetwork:
    w: np.ndarray          # (hidden, inputs)
    b_hidden: np.ndarray   # (hidden,)
    v: np.ndarray          # (hidden, outputs)
    b_out: np.ndarray      # (outputs,)
    g_activation: str = SIGMOID
    f_activation: str = IDENTITY

    def __post_init__(self):
        if self.w.ndim != 2 or min(self.w.shape) < 1:
            raise DimensionMismatch(f"hidden weights must be a non-empty matrix, got shape {self.w.shape}")
        m = self.w.shape[0]
        if self.b_hidden.shape != (m,) or self.v.ndim != 2 or self.v.shape[0] != m \
                or self.b_out.shape != (self.v.shape[1],):
            raise DimensionMismatch("inconsistent network layer shapes")
        for arr in (self.w, self.b_hidden, self.v, self.b_out):
            if not np.all(np.isfinite(arr)):
                raise InputError("network weights must be finite")
        if self.g_activation != SIGMOID or self.f_activation != IDENTITY:
            raise InputError("only sigmoid hidden and identity output activations are supported")

    @property
    def n_inputs(self) -> int:
        return self.w.shape[1]

    @property
    def n_hidden(self) -> int:
        return self.w.shape[0]

    def to_dict(self) -> dict:
        return {"w": self.w.tolist(), "b_hidden": self.b_hidden.tolist(), "v": self.v.tolist(),
                "b_out": self.b_out.tolist(), "g": self.g_activation, "f": self.f_activation}

    @classmethod
    def from_dict(cls, data: dict) -> "MlpNetwork":
        arr = lambda key: np.asarray(data[key], dtype=float)
        return cls(arr("w"), arr("b_hidden"), arr("v"), arr("b_out"), data.get("g", SIGMOID), data.get("f", IDENTITY))


def hidden_matrix(net: MlpNetwork, inputs) -> np.ndarray:
    x = np.asarray(inputs, dtype=float)
    if x.ndim != 2 or x.shape[1] != net.n_inputs:
        raise DimensionMismatch(f"expected k x {net.n_inputs} inputs, got shape {x.shape}")
    return expit(x @ net.w.T + net.b_hidden)


def forward_batch(net: MlpNetwork, inputs) -> np.ndarray:
    return net.b_out + hidden_matrix(net, inputs) @ net.v


def forward(net: MlpNetwork, x) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if x.shape != (net.n_inputs,):
        raise DimensionMismatch(f"expected {net.n_inputs} inputs, got shape {x.shape}")
    return forward_batch(net, x[None, :])[0]


def mse(predictions, targets) -> np.ndarray:
    p = np.asarray(predictions, dtype=float)
    t = np.asarray(targets, dtype=float)
    if p.shape != t.shape or p.ndim != 2 or p.shape[0] == 0:
        raise DimensionMismatch(f"prediction shape {p.shape} does not match target shape {t.shape}")
    return np.mean((p - t) ** 2, axis=0)


def elm_solve(H, Y, lam: float) -> tuple[np.ndarray, np.ndarray]:
    """Ridge output weights ``(H^T H + lam I)^-1 H^T Y`` and the mean residual per output."""
    H = np.asarray(H, dtype=float)
    Y = np.asarray(Y, dtype=float)
    if Y.ndim == 1:
        Y = Y[:, None]
    if H.ndim != 2 or H.shape[0] < 1 or Y.shape[0] != H.shape[0]:
        raise DimensionMismatch(f"H shape {H.shape} incompatible with Y shape {Y.shape}")
    if not lam >= 0 or not math.isfinite(lam):
        raise InputError(f"ridge parameter must be finite and non-negative, got {lam}")
    gram = H.T @ H
    gram[np.diag_indices_from(gram)] += lam
    if lam == 0 and np.linalg.matrix_rank(H) < H.shape[1]:
        raise SingularSystem(f"hidden matrix has rank below {H.shape[1]} and no ridge term")
    try:
        v = cho_solve(cho_factor(gram), H.T @ Y)
    except LinAlgError as exc:
        raise SingularSystem(f"normal matrix is not positive definite: {exc}") from None
    return v, np.mean(Y - H @ v, axis=0)


@dataclass(frozen=True)
class ElmConfig:
    delta: float = 1.0
    delta1: float = 2.0
    delta2: float = 2.0
    seed: int = 0
    restarts: int = 20
    hidden_count: int = 10
    ridge: float | None = None   # overrides ||Y||^delta when set

    def __post_init__(self):
        if not 1.0 <= self.delta <= 2.0:
            raise InputError(f"delta must lie in [1, 2], got {self.delta}")
        if self.delta1 != 2 or self.delta2 != 2:
            raise InputError("only quadratic norms (delta1 = delta2 = 2) have a closed-form solve")
        if self.restarts < 1 or self.hidden_count < 1:
            raise InputError("restarts and hidden_count must be at least 1")
        if self.ridge is not None and not (self.ridge >= 0 and math.isfinite(self.ridge)):
            raise InputError(f"ridge must be finite and non-negative, got {self.ridge}")

    def ridge_for(self, Y: np.ndarray) -> float:
        if self.ridge is not None:
            return float(self.ridge)
        return float(np.linalg.norm(Y) ** self.delta)

    def to_dict(self) -> dict:
        return {"delta": self.delta, "delta1": self.delta1, "delta2": self.delta2, "seed": self.seed,
                "restarts": self.restarts, "hidden_count": self.hidden_count, "ridge": self.ridge}

    @classmethod
    def from_dict(cls, data: dict) -> "ElmConfig":
        known = cls().to_dict()
        unknown = set(data) - set(known)
        if unknown:
            raise InputError(f"unknown ELM config keys: {sorted(unknown)}")
        return cls(**{**known, **data})


def forecast_values(net: MlpNetwork, inputs) -> np.ndarray:
    """Network outputs clamped at zero, as reported to users."""
    return np.maximum(forward_batch(net, inputs), 0.0)


def init_weights(rng: np.random.Generator, hidden: int, n_inputs: int):
    return rng.uniform(-1.0, 1.0, (hidden, n_inputs)), rng.uniform(-1.0, 1.0, hidden)


def fit_elm_arrays(x_train, y_train, x_val, y_val, cfg: ElmConfig):
    """Best-of-``cfg.restarts`` ELM fit on normalised arrays.

    Returns ``(network, trace)``; each trace entry holds the per-output
    train and validate MSE of one restart (``None`` if its solve failed).
    Restart selection minimises the summed validate MSE over both outputs.
    """
    x_train = np.asarray(x_train, dtype=float)
    y_train = np.asarray(y_train, dtype=float)
    lam = cfg.ridge_for(y_train)
    streams = np.random.SeedSequence(cfg.seed).spawn(cfg.restarts)
    best, best_score, trace = None, math.inf, []
    for i, stream in enumerate(streams):
        w, b = init_weights(np.random.default_rng(stream), cfg.hidden_count, x_train.shape[1])
        H = expit(x_train @ w.T + b)
        try:
            # centred columns leave the output bias out of the ridge penalty
            v, _ = elm_solve(H - H.mean(axis=0), y_train, lam)
        except SingularSystem as exc:
            trace.append({"restart": i, "train_mse": None, "validate_mse": None, "error": str(exc)})
            continue
        net = MlpNetwork(w, b, v, np.mean(y_train - H @ v, axis=0))
        tr = mse(forecast_values(net, x_train), y_train)
        va = mse(forecast_values(net, x_val), y_val)
        trace.append({"restart": i, "train_mse": tr.tolist(), "validate_mse": va.tolist()})
        if va.sum() < best_score:
            best, best_score = net, float(va.sum())
    if best is None:
        raise SingularSystem("every restart produced a singular output solve")
    return best, trace


@dataclass(frozen=True, eq=False)
class TrainedForecaster:
    feature_spec: FeatureSpec
    network: MlpNetwork
    config: ElmConfig
    train_mse: np.ndarray
    validate_mse: np.ndarray
    test_mse: np.ndarray | None = None
    restart_trace: list = field(default_factory=list)

    def predict(self, data) -> np.ndarray:
        """Clamped (N, M) forecasts for a Dataset or raw feature matrix."""
        return forecast_values(self.network, feature_matrix(data, self.feature_spec))

    def evaluate(self, ds: Dataset) -> np.ndarray:
        return mse(self.predict(ds), ds.targets())

    def to_json(self) -> dict:
        metrics = {"train_mse": self.train_mse.tolist(), "validate_mse": self.validate_mse.tolist(),
                   "test_mse": None if self.test_mse is None else self.test_mse.tolist(),
                   "restart_trace": self.restart_trace}
        return {"version": MODEL_VERSION, "outputs": list(OUTPUTS), "feature_spec": self.feature_spec.to_dict(),
                **self.network.to_dict(), "config": self.config.to_dict(), "metrics": metrics}

    @classmethod
    def from_json(cls, data: dict) -> "TrainedForecaster":
        if data.get("version") != MODEL_VERSION:
            raise InputError(f"unsupported model version {data.get('version')!r}")
        m = data["metrics"]
        return cls(
            FeatureSpec.from_dict(data["feature_spec"]),
            MlpNetwork.from_dict(data),
            ElmConfig.from_dict(data["config"]),
            np.asarray(m["train_mse"]), np.asarray(m["validate_mse"]),
            None if m.get("test_mse") is None else np.asarray(m["test_mse"]),
            list(m.get("restart_trace", [])),
        )


def elm_train(train: Dataset, validate: Dataset, spec: FeatureSpec, cfg: ElmConfig,
              test: Dataset | None = None) -> TrainedForecaster:
    """Train the output layer over ``cfg.restarts`` random hidden layers, keep the best on validation."""
    if not len(train) or not len(validate):
        raise InputError("training and validation sets must be non-empty")
    x_tr, x_va = feature_matrix(train, spec), feature_matrix(validate, spec)
    net, trace = fit_elm_arrays(x_tr, train.targets(), x_va, validate.targets(), cfg)
    tr = mse(forecast_values(net, x_tr), train.targets())
    va = mse(forecast_values(net, x_va), validate.targets())
    te = None
    if test is not None and len(test):
        te = mse(forecast_values(net, feature_matrix(test, spec)), test.targets())
    return TrainedForecaster(spec, net, cfg, tr, va, te, trace)
