"""Bundle persistence: versioned JSON container for per-preset models.

The file is self-describing: schema version, the canonical feature-name list
(verified on load), and per preset the family tag, hyperparameters, learned
parameters, feature mask, and CV metrics.  Floats serialize via ``repr`` style
JSON encoding, which round-trips doubles exactly, so a saved and reloaded
bundle produces bitwise-identical predictions.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from ..features import feature_names
from ..presets import is_preset
from .core import (
    CVReport,
    Metrics,
    ModelSpec,
    PresetEntry,
    PresetModelBundle,
    TrainedModel,
)

SCHEMA_VERSION = 1

_ARRAY_DTYPES = {"int32", "int64", "float64", "bool"}


class BundleFormatError(ValueError):
    """Bundle file is corrupt or does not match the expected schema/layout."""


def _encode_value(v):
    if isinstance(v, np.ndarray):
        dtype = str(v.dtype)
        if dtype not in _ARRAY_DTYPES:
            raise TypeError(f"unsupported array dtype {dtype}")
        return {"__array__": v.tolist(), "dtype": dtype}
    if isinstance(v, (np.integer,)):
        return int(v)
    if isinstance(v, (np.floating,)):
        return float(v)
    return v


def _decode_value(v):
    if isinstance(v, dict) and "__array__" in v:
        return np.asarray(v["__array__"], dtype=v["dtype"])
    return v


def _encode_params(params: dict) -> dict:
    return {k: _encode_value(v) for k, v in params.items()}


def _decode_params(obj: dict) -> dict:
    return {k: _decode_value(v) for k, v in obj.items()}


def _metrics_to_obj(m: Metrics) -> dict:
    return {"mae": m.mae, "mse": m.mse, "mape": m.mape}


def _metrics_from_obj(obj: dict) -> Metrics:
    return Metrics(mae=obj["mae"], mse=obj["mse"], mape=obj["mape"])


def save_bundle(bundle: PresetModelBundle, path: str | Path) -> None:
    presets_obj = {}
    for preset, entry in bundle.entries.items():
        model = entry.model
        std = None
        if model.standardization is not None:
            mean, scale = model.standardization
            std = {"mean": mean.tolist(), "scale": scale.tolist()}
        presets_obj[preset] = {
            "family": model.spec.family,
            "hyperparams": model.spec.hyperparams,
            "seed": model.spec.seed,
            "feature_mask": [bool(b) for b in entry.feature_mask],
            "standardization": std,
            "params": _encode_params(model.params),
            "metrics": _metrics_to_obj(entry.metrics),
            "cv_folds": [_metrics_to_obj(m) for m in entry.cv.fold_metrics],
        }
    doc = {
        "schema_version": bundle.schema_version,
        "feature_names": bundle.feature_names,
        "presets": presets_obj,
    }
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(doc, fh, indent=1)
        fh.write("\n")


def load_bundle(path: str | Path) -> PresetModelBundle:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            doc = json.load(fh)
    except (json.JSONDecodeError, UnicodeDecodeError) as exc:
        raise BundleFormatError(f"{path}: corrupt bundle payload: {exc}") from exc
    if not isinstance(doc, dict):
        raise BundleFormatError(f"{path}: corrupt bundle payload: not an object")
    version = doc.get("schema_version")
    if version != SCHEMA_VERSION:
        raise BundleFormatError(
            f"{path}: schema version mismatch: file has {version!r}, expected {SCHEMA_VERSION}"
        )
    names = doc.get("feature_names")
    if names != feature_names():
        raise BundleFormatError(f"{path}: feature-name layout mismatch")
    entries = {}
    try:
        for preset, obj in doc["presets"].items():
            if not is_preset(preset):
                raise BundleFormatError(f"{path}: unknown preset {preset!r}")
            spec = ModelSpec(
                family=obj["family"], hyperparams=obj["hyperparams"], seed=obj["seed"]
            )
            mask = np.asarray(obj["feature_mask"], dtype=bool)
            std = None
            if obj["standardization"] is not None:
                std = (
                    np.asarray(obj["standardization"]["mean"], dtype=np.float64),
                    np.asarray(obj["standardization"]["scale"], dtype=np.float64),
                )
            model = TrainedModel(
                spec=spec,
                feature_mask=mask,
                standardization=std,
                params=_decode_params(obj["params"]),
            )
            fold_metrics = [_metrics_from_obj(m) for m in obj["cv_folds"]]
            metrics = _metrics_from_obj(obj["metrics"])
            entries[preset] = PresetEntry(
                model=model,
                metrics=metrics,
                feature_mask=mask.copy(),
                cv=CVReport(fold_metrics=fold_metrics, mean=metrics),
            )
    except (KeyError, TypeError, ValueError) as exc:
        if isinstance(exc, BundleFormatError):
            raise
        raise BundleFormatError(f"{path}: corrupt bundle payload: {exc}") from exc
    return PresetModelBundle(
        entries=entries, feature_names=list(names), schema_version=version
    )
