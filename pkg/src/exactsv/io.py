"""File formats: parameter JSON, quote CSV, path CSV and result JSON."""

from __future__ import annotations

import csv
import json
import math
from pathlib import Path

import numpy as np

from .calibration import OptionQuote, model_from_params
from .errors import ValidationError
from .model import ModelSpec, Variant

PARAM_KEYS = {"variant", "rho", "theta", "c", "alpha", "beta", "v0_j",
              "lambda_j", "r", "q"}
REQUIRED_KEYS = {"variant", "rho", "theta", "c", "v0_j", "lambda_j"}


def parse_params(data: dict) -> ModelSpec:
    """Validate a parameter mapping and build the model.

    Unknown keys are rejected so that typos cannot silently fall back to
    defaults.
    """
    if not isinstance(data, dict):
        raise ValidationError("parameters must be a JSON object")
    unknown = set(data) - PARAM_KEYS
    if unknown:
        raise ValidationError(f"unknown parameter keys: {sorted(unknown)}")
    missing = REQUIRED_KEYS - set(data)
    if missing:
        raise ValidationError(f"missing parameter keys: {sorted(missing)}")
    try:
        variant = Variant(data["variant"])
    except ValueError as exc:
        raise ValidationError(str(exc)) from None
    params = {k: data[k] for k in ("rho", "theta", "c")}
    params["lambda_j"] = _as_list(data["lambda_j"], "lambda_j")
    params["v0_j"] = _as_list(data["v0_j"], "v0_j")
    if variant == Variant.GL_OU_GGC:
        if data.get("alpha") is None or data.get("beta") is None:
            raise ValidationError("gl-ou-ggc needs alpha and beta")
        params["alpha"] = data["alpha"]
        params["beta"] = data["beta"]
    for key, val in params.items():
        vals = val if isinstance(val, list) else [val]
        if not all(isinstance(v, (int, float)) and not isinstance(v, bool)
                   and math.isfinite(v) for v in vals):
            raise ValidationError(f"{key} must be finite numbers")
    try:
        return model_from_params(params, variant, float(data.get("r", 0.0)),
                                 float(data.get("q", 0.0)))
    except ValidationError:
        raise
    except (ValueError, TypeError) as exc:
        raise ValidationError(str(exc)) from None


def _as_list(value, name):
    if isinstance(value, (int, float)) and not isinstance(value, bool):
        return [float(value)]
    if isinstance(value, list) and value:
        return list(value)
    raise ValidationError(f"{name} must be a number or a non-empty list")


def load_params(path) -> ModelSpec:
    try:
        data = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise ValidationError(f"invalid JSON in {path}: {exc}") from None
    return parse_params(data)


def model_to_params(model: ModelSpec) -> dict:
    out = {"variant": model.variant.value, "rho": model.rho,
           "theta": model.theta, "c": model.scale.c,
           "alpha": getattr(model.scale, "a", None),
           "beta": getattr(model.scale, "b", None),
           "v0_j": [f.v0_j for f in model.factors],
           "lambda_j": [f.lambda_j for f in model.factors],
           "r": model.r, "q": model.q}
    return out


def read_quotes(path) -> list[OptionQuote]:
    """Quotes from a CSV with header ``strike,maturity_years,price``."""
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or [f.strip() for f in reader.fieldnames] != [
                "strike", "maturity_years", "price"]:
            raise ValidationError(
                "quote CSV header must be strike,maturity_years,price")
        out = []
        for line, row in enumerate(reader, start=2):
            try:
                out.append(OptionQuote(float(row["strike"]),
                                       float(row["maturity_years"]),
                                       float(row["price"])))
            except (TypeError, ValueError) as exc:
                raise ValidationError(f"{path}:{line}: {exc}") from None
    if not out:
        raise ValidationError(f"{path}: no quotes")
    return out


def write_quotes(path, quotes) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["strike", "maturity_years", "price"])
        for qt in quotes:
            w.writerow([repr(float(qt.strike)), repr(float(qt.maturity_years)),
                        repr(float(qt.market_price))])


def write_paths_csv(fh, batch) -> None:
    """One row per (path, observation time)."""
    nf = batch.v.shape[2]
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(["path_id", "time", "price", "tau", "lev"]
               + [f"v_{j + 1}" for j in range(nf)])
    for i in range(batch.trials):
        for k, t in enumerate(batch.times):
            w.writerow([i, repr(float(t)), repr(float(batch.price[i, k])),
                        repr(float(batch.tau[i, k])), repr(float(batch.lev[i, k]))]
                       + [repr(float(x)) for x in batch.v[i, k]])


def _clean(obj):
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_clean(v) for v in obj.tolist()]
    if isinstance(obj, (np.floating, float)):
        x = float(obj)
        return x if math.isfinite(x) else None
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


def dump_result(result: dict, metadata: dict | None = None) -> str:
    """Deterministic JSON text.

    Keys are sorted and non-finite floats become ``null``. Anything that
    varies between reruns (timings, thread counts) belongs in
    ``metadata``, which is only emitted when given.
    """
    body = _clean(result)
    if metadata is not None:
        body = dict(body)
        body["metadata"] = _clean(metadata)
    return json.dumps(body, sort_keys=True, indent=2) + "\n"
