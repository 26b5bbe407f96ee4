"""Seeded synthetic weather and interruption data with known ground truth.

Hourly weather is simulated with subtropical ranges (temperature roughly
40-95 F, up to ~6 in/day of rain, up to ~3000 strikes/day), reduced to daily
features by the same code path as real data, and interruption counts are
drawn as ``round(max(0, sum_p f_p(x_p) + interaction + noise))``.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field
from datetime import date, datetime, timedelta
from typing import NamedTuple

import numpy as np
from scipy.special import comb

from .errors import InputError
from .ingest import (
    DEFAULT_BASE_TEMP,
    FEATURES,
    DailyRecord,
    Dataset,
    HourlyWeatherRow,
    daily_features,
)
from .regression import EXPONENTIAL, POLYNOMIAL, RegressionModel, predict

MIN_DAYS = 60


def centered_polynomial(coeffs, center: float, scale: float, name: str = "") -> RegressionModel:
    """Polynomial given as ``sum_j c_j ((x - center)/scale)^j``, returned in raw monomial form."""
    degree = len(coeffs) - 1
    beta = [0.0] * (degree + 1)
    for j, c in enumerate(coeffs):
        for k in range(j + 1):
            beta[k] += c * comb(j, k, exact=True) * (-center) ** (j - k) / scale ** j
    return RegressionModel(POLYNOMIAL, tuple(beta), name, degree)


def _exp(b0, b1, b2, b3, b4, name=""):
    return RegressionModel(EXPONENTIAL, (b0, b1, b2, b3, b4), name)


def default_responses_n() -> dict[str, RegressionModel]:
    return {
        "t_max": centered_polynomial((1.0, 1.2, 0.0, 0.5), 82.0, 10.0, "t_max"),
        "t_ave": centered_polynomial((0.5, 0.6, 0.8, 0.3), 75.0, 10.0, "t_ave"),
        "t_min": centered_polynomial((0.5, 0.4, 0.0, 0.3), 68.0, 10.0, "t_min"),
        "hdd": _exp(-0.6, 0.6, 0.08, 0.0, 0.0, "hdd"),
        "cdd": centered_polynomial((0.0, 0.0, 0.012), 0.0, 1.0, "cdd"),
        "w_pea": _exp(0.0, 0.6, 0.05, 0.2, -0.1, "w_pea"),
        "w_ave": _exp(0.0, 0.3, 0.09, 0.0, 0.0, "w_ave"),
        "w_sus": centered_polynomial((0.5, 0.6, 0.0, 0.2), 12.0, 6.0, "w_sus"),
        "p_rain": _exp(2.5, -2.5, -0.9, 0.3, 0.25, "p_rain"),
        "pressure_a": centered_polynomial((0.5, -0.8, 0.0, 0.3), 30.0, 0.2, "pressure_a"),
        "lightning_l": centered_polynomial((0.0, 3.0, 0.6, -0.15), 0.0, 1000.0, "lightning_l"),
    }


def default_responses_m() -> dict[str, RegressionModel]:
    out = {}
    for name, model in default_responses_n().items():
        if model.kind == POLYNOMIAL:
            beta = tuple(0.35 * b for b in model.beta)
        else:
            b0, b1, b2, b3, b4 = model.beta
            beta = (0.35 * b0, 0.35 * b1, b2, 0.35 * b3, b4)
        out[name] = RegressionModel(model.kind, beta, name, model.degree)
    return out


@dataclass
class SyntheticSpec:
    """Recipe for a synthetic dataset.

    ``interaction_n`` / ``interaction_m`` multiply ``p_rain * lightning_l / 1000``
    (inches times thousands of strikes). ``noise_n`` / ``noise_m`` are the
    standard deviations of the additive Gaussian noise on each count.
    """

    days: int = 850
    seed: int = 0
    start: date = date(2015, 1, 1)
    base_temp: float = DEFAULT_BASE_TEMP
    intercept_n: float = 4.0
    intercept_m: float = 1.5
    responses_n: dict[str, RegressionModel] = field(default_factory=default_responses_n)
    responses_m: dict[str, RegressionModel] = field(default_factory=default_responses_m)
    interaction_n: float = 3.0
    interaction_m: float = 1.5
    noise_n: float = 2.0
    noise_m: float = 1.0
    integer_counts: bool = True

    def __post_init__(self):
        if self.days < MIN_DAYS:
            raise InputError(f"days must be at least {MIN_DAYS}, got {self.days}")
        if self.noise_n < 0 or self.noise_m < 0:
            raise InputError("noise standard deviations must be non-negative")
        for responses in (self.responses_n, self.responses_m):
            unknown = set(responses) - set(FEATURES)
            if unknown:
                raise InputError(f"unknown response features: {sorted(unknown)}")

    def to_dict(self) -> dict:
        out = {k: v for k, v in asdict(self).items() if k not in ("responses_n", "responses_m", "start")}
        out["start"] = self.start.isoformat()
        out["responses_n"] = {k: m.to_dict() for k, m in self.responses_n.items()}
        out["responses_m"] = {k: m.to_dict() for k, m in self.responses_m.items()}
        return out

    @classmethod
    def from_dict(cls, data: dict) -> "SyntheticSpec":
        data = dict(data)
        preset = data.pop("preset", None)
        base = PRESETS[preset]() if preset else cls()
        kwargs = asdict(base)
        kwargs["responses_n"] = base.responses_n
        kwargs["responses_m"] = base.responses_m
        for key in ("responses_n", "responses_m"):
            if key in data:
                kwargs[key] = {k: RegressionModel.from_dict(v, k) for k, v in data.pop(key).items()}
        if "start" in data:
            kwargs["start"] = date.fromisoformat(data.pop("start"))
        unknown = set(data) - set(kwargs)
        if unknown:
            raise InputError(f"unknown synthetic spec keys: {sorted(unknown)}")
        kwargs.update(data)
        return cls(**kwargs)


def planted_spec(days: int = 850, seed: int = 0, ratio: float = 5.0) -> SyntheticSpec:
    """Linear drivers in standardised units, lightning ``ratio`` times stronger than each other driver.

    Coefficients are per typical standard deviation of each weather parameter.
    Signs alternate inside the temperature and wind groups so that strongly
    correlated drivers do not stack into one composite signal rivalling the
    planted one.
    """
    per_sd = {
        "t_max": (7.0, 1), "t_ave": (6.0, -1), "t_min": (6.0, 1), "hdd": (2.5, 1), "cdd": (6.0, -1),
        "w_pea": (6.0, 1), "w_ave": (3.0, -1), "w_sus": (4.0, 1), "p_rain": (0.6, 1),
        "pressure_a": (0.08, 1), "lightning_l": (400.0, 1),
    }
    base = 0.5
    resp_n, resp_m = {}, {}
    for name, (sd, sign) in per_sd.items():
        coef = sign * base * (ratio if name == "lightning_l" else 1.0)
        resp_n[name] = RegressionModel(POLYNOMIAL, (0.0, coef / sd), name, 1)
        resp_m[name] = RegressionModel(POLYNOMIAL, (0.0, 0.5 * coef / sd), name, 1)
    return SyntheticSpec(
        days=days, seed=seed, intercept_n=8.0, intercept_m=4.0,
        responses_n=resp_n, responses_m=resp_m,
        interaction_n=0.0, interaction_m=0.0, noise_n=0.5, noise_m=0.25,
    )


PRESETS = {
    "default": SyntheticSpec,
    "planted": planted_spec,
}


@dataclass
class GroundTruth:
    seed: int
    days: int
    base_temp: float
    intercept_n: float
    intercept_m: float
    responses_n: dict[str, RegressionModel]
    responses_m: dict[str, RegressionModel]
    interaction_n: float
    interaction_m: float
    noise_n: float
    noise_m: float

    def to_json(self) -> dict:
        def families(responses):
            return {k: {"family": m.label, **m.to_dict()} for k, m in responses.items()}

        return {
            "seed": self.seed, "days": self.days, "base_temp": self.base_temp,
            "intercept": {"N": self.intercept_n, "M": self.intercept_m},
            "responses": {"N": families(self.responses_n), "M": families(self.responses_m)},
            "interaction": {"N": self.interaction_n, "M": self.interaction_m,
                            "term": "p_rain * lightning_l / 1000"},
            "noise_sd": {"N": self.noise_n, "M": self.noise_m},
        }


class WeatherSim(NamedTuple):
    dates: list[date]
    temperature: np.ndarray
    precipitation: np.ndarray
    pressure: np.ndarray
    wind: np.ndarray
    lightning: np.ndarray

    def rows(self) -> list[HourlyWeatherRow]:
        out = []
        for d, day in enumerate(self.dates):
            base = datetime(day.year, day.month, day.day)
            for h in range(24):
                out.append(HourlyWeatherRow(
                    base + timedelta(hours=h),
                    float(self.temperature[d, h]), float(self.precipitation[d, h]),
                    float(self.pressure[d, h]), float(self.wind[d, h]), float(self.lightning[d, h]),
                ))
        return out


class SyntheticRun(NamedTuple):
    dataset: Dataset
    truth: GroundTruth
    weather: WeatherSim


def _ar1(rng, n, phi, sd):
    out = np.empty(n)
    out[0] = rng.normal(0.0, sd)
    innov = rng.normal(0.0, sd * math.sqrt(1 - phi * phi), n)
    for i in range(1, n):
        out[i] = phi * out[i - 1] + innov[i]
    return out


def simulate_weather(days: int, rng: np.random.Generator, start: date = date(2015, 1, 1)) -> WeatherSim:
    dates = [start + timedelta(days=d) for d in range(days)]
    doy = np.array([d.timetuple().tm_yday for d in dates], dtype=float)
    hours = np.arange(24, dtype=float)
    season = np.sin(2 * np.pi * (doy - 105.0) / 365.25)
    summer = np.clip(np.sin(2 * np.pi * (doy - 80.0) / 365.25), 0.0, None)

    # temperature: seasonal mean, persistent anomalies, diurnal cycle
    t_day = 75.0 + 9.0 * season + _ar1(rng, days, 0.7, 4.0) * (1.3 - 0.6 * summer)
    amp = rng.uniform(4.0, 9.0, days)
    temp = t_day[:, None] + amp[:, None] * np.sin(2 * np.pi * (hours - 9.0) / 24.0)
    temp = np.round(np.clip(temp + rng.normal(0.0, 0.7, (days, 24)), 38.0, 97.0), 1)

    # rain: wet days more likely and heavier in summer, falling in a short burst
    wet = rng.random(days) < 0.18 + 0.4 * summer
    total = np.where(wet, rng.exponential(0.3 + 0.7 * summer), 0.0)
    total = np.minimum(total, 6.0)
    burst_len = rng.integers(1, 5, days)
    burst_start = np.clip(np.round(rng.normal(13.0 + 3.0 * summer, 4.0)), 0, 23).astype(int)
    precip = np.zeros((days, 24))
    lightning = np.zeros((days, 24))
    storm = wet & (rng.random(days) < 0.25 + 0.6 * summer)
    strikes = np.where(storm, rng.exponential(250.0 + 700.0 * summer) * (0.4 + total), 0.0)
    strikes = np.minimum(np.round(strikes), 3000.0)
    for d in np.flatnonzero(wet):
        hrs = (burst_start[d] + np.arange(burst_len[d])) % 24
        share = rng.dirichlet(np.ones(len(hrs)))
        precip[d, hrs] = total[d] * share
        if strikes[d] > 0:
            counts = rng.multinomial(int(strikes[d]), share)
            lightning[d, hrs] = counts
    precip = np.round(precip, 2)

    # pressure: bounded random walk, dips with rain, semi-diurnal tide
    p_day = np.clip(30.0 + _ar1(rng, days, 0.85, 0.08) - 0.04 * total, 29.55, 30.45)
    pressure = p_day[:, None] + 0.02 * np.sin(4 * np.pi * hours / 24.0) + rng.normal(0.0, 0.004, (days, 24))
    pressure = np.round(pressure, 3)

    # wind: bounded daily level, afternoon peak, gusts in storm hours
    w_day = np.clip(9.0 + _ar1(rng, days, 0.6, 3.0) - 1.5 * summer, 2.0, 22.0)
    wind = w_day[:, None] * (1.0 + 0.35 * np.sin(2 * np.pi * (hours - 9.0) / 24.0))
    wind = wind + rng.gamma(2.0, 1.0, (days, 24)) + np.where(lightning > 0, rng.uniform(5.0, 22.0, (days, 24)), 0.0)
    wind = np.round(np.clip(wind, 0.0, None), 1)

    return WeatherSim(dates, temp, precip, pressure, wind, lightning)


def response(responses: dict[str, RegressionModel], intercept: float, features: dict[str, np.ndarray]) -> np.ndarray:
    """Noise-free additive response ``intercept + sum_p f_p(x_p)``."""
    out = np.full(len(next(iter(features.values()))), float(intercept))
    for name, model in responses.items():
        out = out + predict(model, features[name])
    return out


def generate_full(spec: SyntheticSpec) -> SyntheticRun:
    rng = np.random.default_rng(spec.seed)
    weather = simulate_weather(spec.days, rng, spec.start)
    feats = daily_features(weather.temperature, weather.precipitation, weather.pressure,
                           weather.wind, weather.lightning, base_temp=spec.base_temp)
    coupling = feats["p_rain"] * feats["lightning_l"] / 1000.0
    eps = rng.normal(0.0, 1.0, (2, spec.days))
    n_val = response(spec.responses_n, spec.intercept_n, feats) + spec.interaction_n * coupling + spec.noise_n * eps[0]
    m_val = response(spec.responses_m, spec.intercept_m, feats) + spec.interaction_m * coupling + spec.noise_m * eps[1]
    if spec.integer_counts:
        n_val = np.round(np.maximum(n_val, 0.0)).astype(int)
        m_val = np.round(np.maximum(m_val, 0.0)).astype(int)
    records = []
    for k, day in enumerate(weather.dates):
        values = [float(feats[name][k]) for name in FEATURES]
        n = int(n_val[k]) if spec.integer_counts else float(n_val[k])
        m = int(m_val[k]) if spec.integer_counts else float(m_val[k])
        records.append(DailyRecord(day, *values, n_sustained=n, m_momentary=m))
    truth = GroundTruth(
        spec.seed, spec.days, spec.base_temp, spec.intercept_n, spec.intercept_m,
        dict(spec.responses_n), dict(spec.responses_m),
        spec.interaction_n, spec.interaction_m, spec.noise_n, spec.noise_m,
    )
    ds = Dataset(tuple(records), f"synthetic seed={spec.seed} days={spec.days}")
    return SyntheticRun(ds, truth, weather)


def generate(spec: SyntheticSpec) -> tuple[Dataset, GroundTruth]:
    """Simulate a dataset from ``spec``; identical seeds give identical output."""
    run = generate_full(spec)
    return run.dataset, run.truth


def truth_to_json_text(truth: GroundTruth) -> str:
    return json.dumps(truth.to_json(), indent=2, sort_keys=True) + "\n"
