"""Versioned JSON model files and training-trace CSVs.

Every float is stored as its shortest round-trip decimal string, so loading
a saved model reproduces it bit for bit. Loading re-runs the model's own
validation, so a file with e.g. a transition row that does not sum to 1 is
rejected.
"""

from __future__ import annotations

import json
from pathlib import Path
from typing import Union

import numpy as np

from ..crf.model import CrfModel
from ..crf.thresholds import ThresholdBank
from ..errors import DataError, ModelFormatError
from ..features import Discretizer
from ..hmm.model import HmmModel
from .io import atomic_write, write_table_csv
from .types import LabelSet

FORMAT_VERSION = 1


def _enc(arr) -> list:
    """Nested lists of decimal strings."""
    a = np.asarray(arr, dtype=float)
    if a.ndim == 0:
        return repr(float(a))
    return [_enc(x) for x in a]


def _dec(obj, what: str) -> np.ndarray:
    try:
        return np.array(_dec_list(obj), dtype=float)
    except (TypeError, ValueError):
        raise ModelFormatError(f"{what}: expected nested lists of decimal strings") from None


def _dec_list(obj):
    if isinstance(obj, list):
        return [_dec_list(x) for x in obj]
    if not isinstance(obj, str):
        raise TypeError
    return float(obj)


def _discretizer_json(d: Discretizer) -> dict:
    return {"D": d.D, "edges": [_enc(e) for e in d.edges],
            "feature_names": list(d.feature_names) if d.feature_names is not None else None}


def _discretizer_from(obj: dict) -> Discretizer:
    names = obj.get("feature_names")
    return Discretizer(int(obj["D"]), tuple(_dec(e, "discretizer edges") for e in obj["edges"]),
                       tuple(names) if names is not None else None)


def model_to_json(model: Union[HmmModel, CrfModel]) -> dict:
    if isinstance(model, HmmModel):
        return {
            "format_version": FORMAT_VERSION,
            "kind": "hmm",
            "state_names": list(model.state_names),
            "feature_names": list(model.feature_names) if model.feature_names is not None
            else None,
            "pi": _enc(model.pi),
            "theta": _enc(model.theta),
            "phi": _enc(model.phi),
            "discretizer": _discretizer_json(model.discretizer)
            if model.discretizer is not None else None,
        }
    if isinstance(model, CrfModel):
        bank = model.bank
        return {
            "format_version": FORMAT_VERSION,
            "kind": "crf",
            "labels": list(bank.label_set.members),
            "feature_names": list(bank.feature_names),
            "thresholds": _enc(bank.thresholds),
            "relevant": bank.relevant.astype(int).tolist(),
            "mu_exceed": _enc(model.mu_exceed),
            "mu_not": _enc(model.mu_not),
            "nu": repr(model.nu),
            "sigma2": repr(model.sigma2),
        }
    raise TypeError(f"cannot serialize {type(model).__name__}")


def model_from_json(obj: dict) -> Union[HmmModel, CrfModel]:
    if not isinstance(obj, dict):
        raise ModelFormatError("model file must hold a JSON object")
    version = obj.get("format_version")
    if version != FORMAT_VERSION:
        raise ModelFormatError(f"unsupported model format_version {version!r}; "
                               f"expected {FORMAT_VERSION}")
    try:
        if obj["kind"] == "hmm":
            disc = obj.get("discretizer")
            names = obj.get("feature_names")
            return HmmModel(_dec(obj["pi"], "pi"), _dec(obj["theta"], "theta"),
                            _dec(obj["phi"], "phi"), tuple(obj["state_names"]),
                            tuple(names) if names is not None else None,
                            _discretizer_from(disc) if disc is not None else None)
        if obj["kind"] == "crf":
            bank = ThresholdBank(LabelSet(obj["labels"]), tuple(obj["feature_names"]),
                                 _dec(obj["thresholds"], "thresholds"),
                                 np.array(obj["relevant"], dtype=bool))
            return CrfModel(bank, _dec(obj["mu_exceed"], "mu_exceed"),
                            _dec(obj["mu_not"], "mu_not"), float(obj["nu"]),
                            float(obj["sigma2"]))
    except KeyError as e:
        raise ModelFormatError(f"model file lacks field {e.args[0]!r}") from None
    except ModelFormatError:
        raise
    except DataError as e:
        raise ModelFormatError(f"invalid model: {e}") from None
    raise ModelFormatError(f"unknown model kind {obj.get('kind')!r}")


def save_model(model: Union[HmmModel, CrfModel], path) -> None:
    obj = model_to_json(model)
    with atomic_write(path) as fh:
        json.dump(obj, fh, indent=1)
        fh.write("\n")


def load_model(path) -> Union[HmmModel, CrfModel]:
    path = Path(path)
    if not path.exists():
        raise DataError(f"{path}: no such file")
    try:
        obj = json.loads(path.read_text())
    except json.JSONDecodeError as e:
        raise ModelFormatError(f"{path}: not valid JSON ({e})") from None
    return model_from_json(obj)


def write_em_trace(traces, path) -> None:
    """Columns restart, iteration, log_likelihood."""
    rows = [(r, i, float(v)) for r, tr in enumerate(traces) for i, v in enumerate(tr)]
    write_table_csv(("restart", "iteration", "log_likelihood"), rows, path)


def write_gibbs_trace(trace, path) -> None:
    """Columns sweep, log_joint."""
    write_table_csv(("sweep", "log_joint"), [(i + 1, float(v)) for i, v in enumerate(trace)],
                    path)


def write_crf_trace(trace, path) -> None:
    """Columns iteration, objective, grad_norm."""
    write_table_csv(("iteration", "objective", "grad_norm"),
                    [(int(i), float(f), float(g)) for i, f, g in np.asarray(trace)], path)
