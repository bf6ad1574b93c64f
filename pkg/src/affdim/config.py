"""JSON job configuration with field-path error messages."""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .ergodic import MeasureSpec
from .errors import InvalidInputError
from .linalg import Subspace
from .words import MatrixTuple

ESTIMATOR_KEYS = {
    "n": int,
    "schedule": list,
    "depth": int,
    "trials": int,
    "lyapunov_length": int,
    "path_length": int,
    "samples": int,
    "seed": int,
    "tolerance": float,
    "s_values": list,
    "points": int,
    "radius": float,
    "centers": int,
    "scales": list,
    "window": list,
}


class ConfigError(InvalidInputError):
    """Invalid configuration; ``path`` names the offending field."""

    def __init__(self, path, message):
        self.path = path
        super().__init__(f"{path}: {message}")


@dataclass
class JobConfig:
    tuple: MatrixTuple
    measure: MeasureSpec
    subspace: Subspace | None = None
    translations: np.ndarray | None = None
    estimator: dict = field(default_factory=dict)
    raw: dict = field(default_factory=dict)

    def get(self, key, default=None):
        return self.estimator.get(key, default)


def _array(value, path, ndim):
    try:
        arr = np.array(value, dtype=float)
    except (TypeError, ValueError) as exc:
        raise ConfigError(path, f"not a numeric array ({exc})") from None
    if arr.ndim != ndim:
        raise ConfigError(path, f"expected a {ndim}-level nested list, got {arr.ndim}")
    return arr


def _wrap(path, fn, *args):
    try:
        return fn(*args)
    except ConfigError:
        raise
    except InvalidInputError as exc:
        raise ConfigError(path, str(exc)) from None


def _measure(raw, m):
    if raw is None or raw == "uniform":
        return MeasureSpec.uniform(m)
    if not isinstance(raw, dict) or len(raw) != 1:
        raise ConfigError("measure", 'expected "uniform", {"bernoulli": {...}} or {"markov": {...}}')
    (kind, body), = raw.items()
    if kind not in ("bernoulli", "markov"):
        raise ConfigError("measure", f"unknown measure kind {kind!r}")
    if not isinstance(body, dict) or "p" not in body:
        raise ConfigError(f"measure.{kind}", "missing field p")
    p = _array(body["p"], f"measure.{kind}.p", 1)
    if p.size != m:
        raise ConfigError(f"measure.{kind}.p", f"length {p.size} does not match {m} matrices")
    if kind == "bernoulli":
        return _wrap(f"measure.{kind}", MeasureSpec.bernoulli, p)
    if "P" not in body:
        raise ConfigError("measure.markov", "missing field P")
    P = _array(body["P"], "measure.markov.P", 2)
    for r, row in enumerate(P):
        if abs(row.sum() - 1) > 1e-12:
            raise ConfigError(f"measure.markov.P[{r}]", f"row sums to {row.sum():.15g}, not 1")
    return _wrap("measure.markov", MeasureSpec.markov, p, P)


def parse_config(raw):
    """Validate a decoded JSON document into a :class:`JobConfig`."""
    if not isinstance(raw, dict):
        raise ConfigError("<root>", "expected a JSON object")
    if "matrices" not in raw:
        raise ConfigError("matrices", "missing")
    mats = _array(raw["matrices"], "matrices", 3)
    for i, A in enumerate(mats):
        if A.shape[0] != A.shape[1]:
            raise ConfigError(f"matrices[{i}]", f"not square: {A.shape}")
        sv = np.linalg.svd(A, compute_uv=False)
        if not sv[0] < 1:
            raise ConfigError(f"matrices[{i}]", f"not contracting (norm {sv[0]:.6g})")
        if not sv[-1] > 0:
            raise ConfigError(f"matrices[{i}]", "singular")
    T = _wrap("matrices", MatrixTuple, mats)
    mu = _measure(raw.get("measure"), T.m)
    W = None
    if raw.get("subspace") is not None:
        vecs = _array(raw["subspace"], "subspace", 2)
        if vecs.shape[1] != T.d:
            raise ConfigError("subspace", f"basis vectors must have length {T.d}")
        W = _wrap("subspace", Subspace.span, vecs.T, vecs.shape[0])
    a = None
    if raw.get("translations") is not None:
        a = _array(raw["translations"], "translations", 2)
        if a.shape != (T.m, T.d):
            raise ConfigError("translations", f"expected shape ({T.m}, {T.d}), got {a.shape}")
    est = raw.get("estimator", {}) or {}
    if not isinstance(est, dict):
        raise ConfigError("estimator", "expected an object")
    for key, val in est.items():
        if key not in ESTIMATOR_KEYS:
            raise ConfigError(f"estimator.{key}", "unknown parameter")
        want = ESTIMATOR_KEYS[key]
        ok = isinstance(val, list) if want is list else isinstance(val, (int, float)) and not isinstance(val, bool)
        if want is int and ok and float(val) != int(val):
            ok = False
        if not ok:
            raise ConfigError(f"estimator.{key}", f"expected {want.__name__}, got {val!r}")
    return JobConfig(T, mu, W, a, dict(est), raw)


def load_config(path):
    try:
        with open(path, encoding="utf-8") as fh:
            raw = json.load(fh)
    except OSError as exc:
        raise ConfigError("<file>", f"cannot read {path}: {exc.strerror}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError("<file>", f"invalid JSON at line {exc.lineno} column {exc.colno}: {exc.msg}") from None
    return parse_config(raw)
