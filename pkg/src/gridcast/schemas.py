"""JSON Schemas for every file the CLI writes, plus CSV validation helpers.

CSV files are checked by converting each row to a dict of typed values and
validating it against a row schema, after an exact header comparison.
"""

from __future__ import annotations

import csv
import io

import jsonschema

from .ingest import DATASET_HEADER, FEATURES, INTERRUPTION_HEADER, WEATHER_HEADER

_num = {"type": "number"}
_nullable_num = {"type": ["number", "null"]}
_count = {"type": "integer", "minimum": 0}
_date = {"type": "string", "pattern": r"^\d{4}-\d{2}-\d{2}$"}
_feature = {"type": "string", "enum": list(FEATURES)}
_pair = {"type": "object", "required": ["N", "M"], "properties": {"N": _num, "M": _num}}
_nullable_pair = {"oneOf": [_pair, {"type": "null"}]}
_vector = {"type": "array", "items": _num}
_matrix = {"type": "array", "items": _vector}

MODEL_SCHEMA_REGRESSION = {
    "type": "object",
    "required": ["kind", "beta"],
    "properties": {
        "kind": {"enum": ["polynomial", "exp2"]},
        "degree": {"type": ["integer", "null"]},
        "beta": _vector,
    },
}

CANDIDATE_SCHEMA = {
    "type": "object",
    "required": ["kind", "degree", "beta", "status", "sse", "r2", "adj_r2", "rmse", "dof"],
    "properties": {
        "kind": {"enum": ["polynomial", "exp2"]},
        "degree": {"type": ["integer", "null"]},
        "beta": _vector,
        "status": {"enum": ["ok", "nonconverged", "failed"]},
        "error": {"type": "string"},
        "sse": _nullable_num, "r2": _nullable_num, "adj_r2": _nullable_num, "rmse": _nullable_num,
        "dof": {"type": ["integer", "null"]},
    },
}

CATALOG_SCHEMA = {
    "type": "array",
    "items": {
        "type": "object",
        "required": ["feature", "candidates", "winner"],
        "properties": {
            "feature": _feature,
            "candidates": {"type": "array", "items": CANDIDATE_SCHEMA},
            "winner": {"type": ["integer", "null"], "minimum": 0, "maximum": 3},
            "dropped": {"type": "string"},
        },
    },
}

FEATURE_SPEC_SCHEMA = {
    "type": "object",
    "required": ["raw_features", "input_names", "input_dim", "catalogs", "shift", "scale"],
    "properties": {
        "raw_features": {"type": "array", "items": _feature},
        "input_names": {"type": "array", "items": {"type": "string"}},
        "input_dim": {"type": "integer", "minimum": 3},
        "catalogs": {"type": "object", "required": ["N", "M"],
                     "properties": {"N": CATALOG_SCHEMA, "M": CATALOG_SCHEMA}},
        "shift": _vector,
        "scale": {"type": "array", "items": {"type": "number", "exclusiveMinimum": 0}},
    },
}

_trace_entry = {
    "type": "object",
    "required": ["restart", "train_mse", "validate_mse"],
    "properties": {
        "restart": {"type": "integer", "minimum": 0},
        "train_mse": {"oneOf": [_vector, {"type": "null"}]},
        "validate_mse": {"oneOf": [_vector, {"type": "null"}]},
        "error": {"type": "string"},
    },
}

MLP_MODEL_SCHEMA = {
    "type": "object",
    "required": ["version", "outputs", "feature_spec", "w", "b_hidden", "v", "b_out", "g", "f", "config", "metrics"],
    "properties": {
        "version": {"const": "gridcast-mlp/1"},
        "outputs": {"const": ["N", "M"]},
        "feature_spec": FEATURE_SPEC_SCHEMA,
        "w": _matrix, "b_hidden": _vector, "v": _matrix, "b_out": _vector,
        "g": {"const": "sigmoid"},
        "f": {"const": "identity"},
        "config": {
            "type": "object",
            "required": ["delta", "delta1", "delta2", "seed", "restarts", "hidden_count", "ridge"],
            "properties": {
                "delta": {"type": "number", "minimum": 1, "maximum": 2},
                "delta1": {"const": 2}, "delta2": {"const": 2},
                "seed": {"type": "integer"},
                "restarts": {"type": "integer", "minimum": 1},
                "hidden_count": {"type": "integer", "minimum": 1},
                "ridge": _nullable_num,
            },
        },
        "metrics": {
            "type": "object",
            "required": ["train_mse", "validate_mse", "test_mse", "restart_trace"],
            "properties": {
                "train_mse": _vector, "validate_mse": _vector,
                "test_mse": {"oneOf": [_vector, {"type": "null"}]},
                "restart_trace": {"type": "array", "items": _trace_entry},
            },
        },
    },
}

METRICS_SCHEMA = {
    "type": "object",
    "required": ["outputs", "sizes", "hybrid", "baseline", "reduction_pct", "baseline_definition",
                 "forecasts_clamped_at_zero", "restart_trace"],
    "properties": {
        "outputs": {"const": ["N", "M"]},
        "sizes": {"type": "object", "required": ["train", "validate", "test"],
                  "additionalProperties": {"type": "integer", "minimum": 0}},
        "hybrid": {"type": "object", "required": ["train", "validate", "test"],
                   "additionalProperties": _nullable_pair},
        "baseline": {"type": "object", "required": ["train", "validate", "test"],
                     "additionalProperties": _nullable_pair},
        "reduction_pct": {"oneOf": [
            {"type": "object", "required": ["N", "M"], "additionalProperties": _nullable_num},
            {"type": "null"}]},
        "baseline_definition": {
            "type": "object",
            "required": ["formula", "offset", "kept_features"],
        },
        "forecasts_clamped_at_zero": {"type": "boolean"},
        "restart_trace": {"type": "array", "items": _trace_entry},
    },
}

SENSITIVITY_SCHEMA = {
    "type": "object",
    "required": ["units", "days", "outputs"],
    "properties": {
        "units": {"enum": ["raw", "per_sd"]},
        "days": {"type": "integer", "minimum": 1},
        "outputs": {
            "type": "array", "minItems": 2, "maxItems": 2,
            "items": {
                "type": "object",
                "required": ["output", "scores", "ranked"],
                "properties": {
                    "output": {"enum": ["N", "M"]},
                    "scores": {"type": "array", "items": {
                        "type": "object",
                        "required": ["parameter", "score"],
                        "properties": {"parameter": _feature,
                                       "score": {"type": "number", "minimum": 0, "maximum": 1},
                                       "mean_abs_derivative": {"type": "number", "minimum": 0}},
                    }},
                    "ranked": {"type": "array", "items": _feature},
                },
            },
        },
    },
}

GROUND_TRUTH_SCHEMA = {
    "type": "object",
    "required": ["seed", "days", "base_temp", "intercept", "responses", "interaction", "noise_sd"],
    "properties": {
        "seed": {"type": "integer"},
        "days": {"type": "integer", "minimum": 60},
        "base_temp": _num,
        "intercept": _pair,
        "responses": {
            "type": "object", "required": ["N", "M"],
            "additionalProperties": {
                "type": "object",
                "propertyNames": {"enum": list(FEATURES)},
                "additionalProperties": {**MODEL_SCHEMA_REGRESSION,
                                         "required": ["family", "kind", "beta"]},
            },
        },
        "interaction": {"type": "object", "required": ["N", "M", "term"]},
        "noise_sd": {"type": "object", "required": ["N", "M"],
                     "properties": {"N": {"type": "number", "minimum": 0}, "M": {"type": "number", "minimum": 0}}},
    },
}

PROVENANCE_SCHEMA = {
    "type": "object",
    "required": ["weather", "interruptions", "base_temp", "hourly_rows", "aligned_days",
                 "skipped_incomplete_days", "weather_only_days", "interruption_only_days"],
    "properties": {
        "weather": {"type": "string"},
        "interruptions": {"type": "string"},
        "base_temp": _num,
        "hourly_rows": {"type": "integer", "minimum": 0},
        "aligned_days": {"type": "integer", "minimum": 1},
        "skipped_incomplete_days": {"type": "array", "items": _date},
        "weather_only_days": {"type": "array", "items": _date},
        "interruption_only_days": {"type": "array", "items": _date},
    },
}

JSON_SCHEMAS = {
    "catalog": CATALOG_SCHEMA,
    "model": MLP_MODEL_SCHEMA,
    "metrics": METRICS_SCHEMA,
    "sensitivity": SENSITIVITY_SCHEMA,
    "ground_truth": GROUND_TRUTH_SCHEMA,
    "provenance": PROVENANCE_SCHEMA,
}

# -- CSV files: exact header plus a per-row schema ------------------------------

_finite = {"type": "number"}

CSV_SCHEMAS = {
    "dataset": (DATASET_HEADER, {
        "type": "object",
        "properties": {"date": _date, **{c: _finite for c in DATASET_HEADER[1:12]}, "n": _count, "m": _count},
    }),
    "weather": (WEATHER_HEADER, {
        "type": "object",
        "properties": {"timestamp": {"type": "string", "pattern": r"^\d{4}-\d{2}-\d{2}[T ]\d{2}:\d{2}(:\d{2})?$"},
                       "temperature_f": _finite, "precip_in": {"type": "number", "minimum": 0},
                       "pressure_inhg": _finite, "wind_mph": {"type": "number", "minimum": 0},
                       "lightning": _count},
    }),
    "interruptions": (INTERRUPTION_HEADER, {
        "type": "object",
        "properties": {"date": _date, "n_sustained": _count, "m_momentary": _count},
    }),
    "fit_table": (("feature", "model", "status", "sse", "r2", "adj_r2", "rmse", "winner"), {
        "type": "object",
        "properties": {"feature": _feature, "model": {"type": "string"},
                       "status": {"enum": ["ok", "nonconverged", "failed"]},
                       "sse": _nullable_num, "r2": _nullable_num, "adj_r2": _nullable_num, "rmse": _nullable_num,
                       "winner": {"enum": [0, 1]}},
    }),
    "forecast": (("date", "n_forecast", "m_forecast"), {
        "type": "object",
        "properties": {"date": _date, "n_forecast": {"type": "number", "minimum": 0},
                       "m_forecast": {"type": "number", "minimum": 0}},
    }),
    "sensitivity": (("output", "parameter", "score", "mean_abs_derivative", "rank"), {
        "type": "object",
        "properties": {"output": {"enum": ["N", "M"]}, "parameter": _feature,
                       "score": {"type": "number", "minimum": 0, "maximum": 1},
                       "mean_abs_derivative": {"type": "number", "minimum": 0},
                       "rank": {"type": "integer", "minimum": 1}},
    }),
}


def _typed(cell: str):
    if cell == "":
        return None
    for conv in (int, float):
        try:
            return conv(cell)
        except ValueError:
            pass
    return cell


def validate_json(document, name: str) -> None:
    """Raise ``jsonschema.ValidationError`` if ``document`` does not match schema ``name``."""
    jsonschema.validate(document, JSON_SCHEMAS[name])


def validate_csv(text: str, name: str) -> int:
    """Validate CSV ``text`` against schema ``name``; returns the number of data rows."""
    header, row_schema = CSV_SCHEMAS[name]
    reader = csv.reader(io.StringIO(text))
    got = next(reader, None)
    if got is None or tuple(got) != tuple(header):
        raise jsonschema.ValidationError(f"{name}: header {got} != {list(header)}")
    validator = jsonschema.Draft202012Validator(row_schema)
    count = 0
    for raw in reader:
        if len(raw) != len(header):
            raise jsonschema.ValidationError(f"{name}: row {count + 2} has {len(raw)} cells, expected {len(header)}")
        validator.validate({h: _typed(c) for h, c in zip(header, raw)})
        count += 1
    return count
