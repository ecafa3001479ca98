"""Domain types for linear constraint systems under uncertainty.

A system is a list of affine constraints ``a_z @ z + a_theta @ theta + c <= 0``
over recourse variables ``z`` and uncertain parameters ``theta``, together
with a Gaussian description of ``theta`` (mean and SPD covariance) and an
optional hyperbox of maximum deviations.  Models are immutable once built and
safe to share across concurrent analyses.

Models are interchanged as JSON documents; see ``parse_model`` for the
schema.  Parsing fails closed: unknown keys are rejected.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from . import linalg
from .errors import DimensionError, NotSPDError, SchemaError

__all__ = [
    "LinearConstraint",
    "GaussianUncertainty",
    "HyperboxSpec",
    "UncertaintySetSpec",
    "SystemModel",
    "SET_KINDS",
    "parse_model",
    "load_model",
    "serialize_model",
    "evaluate_constraint",
    "box_from_sigmas",
]

SET_KINDS = ("ellipsoid", "box", "l1", "l2", "linf")

_SYM_RTOL = 1e-12


def _owned(x, length: int, what: str) -> np.ndarray:
    v = np.array(x, dtype=float).reshape(-1)
    if v.shape != (length,):
        raise DimensionError(f"{what}: expected length {length}, got {np.shape(x)}")
    if not np.all(np.isfinite(v)):
        raise SchemaError(f"{what}: entries must be finite numbers")
    v.setflags(write=False)
    return v


def _check_shape(x, length: int, what: str) -> np.ndarray:
    v = np.asarray(x, dtype=float)
    if v.shape != (length,):
        raise DimensionError(f"{what}: expected length {length}, got shape {v.shape}")
    return v


@dataclass(frozen=True, eq=False)
class LinearConstraint:
    """Affine constraint a_z @ z + a_theta @ theta + c <= 0."""

    name: str
    a_z: np.ndarray
    a_theta: np.ndarray
    c: float

    def validate(self, n_z: int, n_theta: int) -> None:
        object.__setattr__(self, "a_z", _owned(self.a_z, n_z, f"constraint {self.name!r}: a_z"))
        object.__setattr__(
            self, "a_theta", _owned(self.a_theta, n_theta, f"constraint {self.name!r}: a_theta")
        )
        if not np.any(self.a_z) and not np.any(self.a_theta):
            raise SchemaError(f"constraint {self.name!r} is constant (all coefficients zero)")


@dataclass(frozen=True, eq=False)
class GaussianUncertainty:
    """Mean and SPD covariance of the uncertain parameters, in model units."""

    mean: np.ndarray
    covariance: np.ndarray

    def validate(self, n_theta: int) -> None:
        object.__setattr__(self, "mean", _owned(self.mean, n_theta, "uncertainty mean"))
        cov = np.array(self.covariance, dtype=float)
        if cov.shape != (n_theta, n_theta):
            raise DimensionError(f"covariance: expected ({n_theta}, {n_theta}), got {cov.shape}")
        scale = float(np.max(np.abs(cov)))
        if scale == 0.0 or float(np.max(np.abs(cov - cov.T))) > _SYM_RTOL * scale:
            raise NotSPDError("covariance is not symmetric within tolerance")
        cov = 0.5 * (cov + cov.T)
        cov.setflags(write=False)
        object.__setattr__(self, "covariance", cov)
        self.chol  # certify positive definiteness now, not on first use

    @property
    def chol(self) -> np.ndarray:
        """Lower Cholesky factor of the (symmetrized) covariance."""
        try:
            return self._chol
        except AttributeError:
            chol = linalg.cholesky(np.asarray(self.covariance, dtype=float))
            object.__setattr__(self, "_chol", chol)
            return chol


@dataclass(frozen=True, eq=False)
class HyperboxSpec:
    """Nonnegative maximum deviations below/above the nominal point.

    A degenerate all-zero box is a valid point set for the flexibility test;
    model files and index computations reject it because scaling a point set
    never reaches the feasible boundary.
    """

    delta_minus: np.ndarray
    delta_plus: np.ndarray

    def validate(self, n_theta: int, allow_zero: bool = False) -> None:
        dm = _owned(self.delta_minus, n_theta, "hyperbox delta_minus")
        dp = _owned(self.delta_plus, n_theta, "hyperbox delta_plus")
        object.__setattr__(self, "delta_minus", dm)
        object.__setattr__(self, "delta_plus", dp)
        if np.any(dm < 0) or np.any(dp < 0):
            raise SchemaError("hyperbox deviations must be nonnegative")
        if not allow_zero and not (np.any(dm) or np.any(dp)):
            raise SchemaError("hyperbox deviations cannot all be zero")


@dataclass(frozen=True, eq=False)
class UncertaintySetSpec:
    """Tagged choice of uncertainty-set family, centred at the model mean.

    kind is one of "ellipsoid", "box", "l1", "l2", "linf".  The box kind
    carries its own deviation vectors; when omitted the model's hyperbox
    block is used.
    """

    kind: str
    hyperbox: HyperboxSpec | None = None

    def __post_init__(self):
        if self.kind not in SET_KINDS:
            raise SchemaError(f"unknown uncertainty-set kind {self.kind!r}")
        if self.hyperbox is not None and self.kind != "box":
            raise SchemaError("hyperbox data only applies to the box kind")


@dataclass(frozen=True, eq=False)
class SystemModel:
    """Validated constraint system plus uncertainty description.

    The constraint order in the source document defines the index set used
    in every report and diagnostic.
    """

    name: str
    n_z: int
    n_theta: int
    constraints: tuple[LinearConstraint, ...]
    uncertainty: GaussianUncertainty
    hyperbox: HyperboxSpec | None = None

    def __post_init__(self):
        if not isinstance(self.n_z, int) or not isinstance(self.n_theta, int):
            raise SchemaError("n_z and n_theta must be integers")
        if self.n_z < 0 or self.n_theta < 1:
            raise SchemaError("need n_z >= 0 and n_theta >= 1")
        object.__setattr__(self, "constraints", tuple(self.constraints))
        if len(self.constraints) < 1:
            raise SchemaError("at least one constraint is required")
        names = [c.name for c in self.constraints]
        if len(set(names)) != len(names):
            raise SchemaError("constraint names must be unique")
        for con in self.constraints:
            con.validate(self.n_z, self.n_theta)
        self.uncertainty.validate(self.n_theta)
        if self.hyperbox is not None:
            self.hyperbox.validate(self.n_theta)
        # stacked coefficient arrays, shared by the solver modules
        a_z = np.array([c.a_z for c in self.constraints], dtype=float).reshape(
            len(self.constraints), self.n_z
        )
        a_th = np.array([c.a_theta for c in self.constraints], dtype=float)
        cs = np.array([c.c for c in self.constraints], dtype=float)
        for arr in (a_z, a_th, cs):
            arr.setflags(write=False)
        object.__setattr__(self, "a_z_matrix", a_z)
        object.__setattr__(self, "a_theta_matrix", a_th)
        object.__setattr__(self, "c_vector", cs)

    @property
    def n_con(self) -> int:
        return len(self.constraints)

    @property
    def theta_bar(self) -> np.ndarray:
        return self.uncertainty.mean

    def constraint_names(self) -> tuple[str, ...]:
        return tuple(c.name for c in self.constraints)


_TOP_KEYS = {"name", "n_z", "n_theta", "constraints", "uncertainty", "hyperbox"}
_CON_KEYS = {"name", "a_z", "a_theta", "c"}
_UNC_KEYS = {"mean", "covariance"}
_BOX_KEYS = {"delta_minus", "delta_plus"}


def _require_keys(obj, keys: set, what: str) -> None:
    if not isinstance(obj, dict):
        raise SchemaError(f"{what}: expected an object")
    extra = set(obj) - keys
    if extra:
        raise SchemaError(f"{what}: unknown keys {sorted(extra)}")
    missing = keys - set(obj)
    if missing:
        raise SchemaError(f"{what}: missing keys {sorted(missing)}")


def parse_model(text: str) -> SystemModel:
    """Parse and validate a model from its JSON document.

    Schema::

        {
          "name": str,
          "n_z": int >= 0, "n_theta": int >= 1,
          "constraints": [{"name": str, "a_z": [...], "a_theta": [...], "c": num}, ...],
          "uncertainty": {"mean": [...], "covariance": [[...], ...]},
          "hyperbox": {"delta_minus": [...], "delta_plus": [...]}   # optional
        }

    Raises SchemaError for structural problems (including unknown keys),
    DimensionError for length mismatches, and NotSPDError when the covariance
    fails symmetry or Cholesky factorization.
    """
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise SchemaError(f"not valid JSON: {exc}") from exc
    if not isinstance(doc, dict):
        raise SchemaError("top level must be a JSON object")
    extra = set(doc) - _TOP_KEYS
    if extra:
        raise SchemaError(f"unknown top-level keys {sorted(extra)}")
    missing = (_TOP_KEYS - {"hyperbox"}) - set(doc)
    if missing:
        raise SchemaError(f"missing top-level keys {sorted(missing)}")

    name = doc["name"]
    if not isinstance(name, str):
        raise SchemaError("name must be a string")
    n_z, n_theta = doc["n_z"], doc["n_theta"]
    for label, val in (("n_z", n_z), ("n_theta", n_theta)):
        if not isinstance(val, int) or isinstance(val, bool):
            raise SchemaError(f"{label} must be an integer")

    if not isinstance(doc["constraints"], list):
        raise SchemaError("constraints must be a list")
    constraints = []
    for i, raw in enumerate(doc["constraints"]):
        _require_keys(raw, _CON_KEYS, f"constraint #{i}")
        if not isinstance(raw["name"], str):
            raise SchemaError(f"constraint #{i}: name must be a string")
        if not isinstance(raw["c"], (int, float)) or isinstance(raw["c"], bool):
            raise SchemaError(f"constraint #{i}: c must be a number")
        constraints.append(
            LinearConstraint(
                name=raw["name"],
                a_z=np.asarray(raw["a_z"], dtype=float).reshape(-1),
                a_theta=np.asarray(raw["a_theta"], dtype=float).reshape(-1),
                c=float(raw["c"]),
            )
        )

    _require_keys(doc["uncertainty"], _UNC_KEYS, "uncertainty")
    uncertainty = GaussianUncertainty(
        mean=np.asarray(doc["uncertainty"]["mean"], dtype=float),
        covariance=np.asarray(doc["uncertainty"]["covariance"], dtype=float),
    )

    hyperbox = None
    if "hyperbox" in doc:
        _require_keys(doc["hyperbox"], _BOX_KEYS, "hyperbox")
        hyperbox = HyperboxSpec(
            delta_minus=np.asarray(doc["hyperbox"]["delta_minus"], dtype=float),
            delta_plus=np.asarray(doc["hyperbox"]["delta_plus"], dtype=float),
        )

    return SystemModel(
        name=name,
        n_z=n_z,
        n_theta=n_theta,
        constraints=tuple(constraints),
        uncertainty=uncertainty,
        hyperbox=hyperbox,
    )


def load_model(path) -> SystemModel:
    """Read and parse a model file (UTF-8 JSON)."""
    with open(path, encoding="utf-8") as fh:
        return parse_model(fh.read())


def serialize_model(model: SystemModel) -> str:
    """JSON document that parses back to a field-identical model."""
    doc = {
        "name": model.name,
        "n_z": model.n_z,
        "n_theta": model.n_theta,
        "constraints": [
            {
                "name": c.name,
                "a_z": [float(v) for v in c.a_z],
                "a_theta": [float(v) for v in c.a_theta],
                "c": float(c.c),
            }
            for c in model.constraints
        ],
        "uncertainty": {
            "mean": [float(v) for v in model.uncertainty.mean],
            "covariance": [[float(v) for v in row] for row in model.uncertainty.covariance],
        },
    }
    if model.hyperbox is not None:
        doc["hyperbox"] = {
            "delta_minus": [float(v) for v in model.hyperbox.delta_minus],
            "delta_plus": [float(v) for v in model.hyperbox.delta_plus],
        }
    return json.dumps(doc, indent=2)


def evaluate_constraint(model: SystemModel, j: int, z, theta) -> float:
    """Value of constraint j at (z, theta): a_z @ z + a_theta @ theta + c."""
    if not 0 <= j < model.n_con:
        raise IndexError(f"constraint index {j} out of range")
    con = model.constraints[j]
    z = _check_shape(z, model.n_z, "z")
    theta = _check_shape(theta, model.n_theta, "theta")
    return float(con.a_z @ z + con.a_theta @ theta + con.c)


def box_from_sigmas(model: SystemModel, k: float) -> HyperboxSpec:
    """Symmetric hyperbox of k standard deviations per component."""
    if k < 0:
        raise ValueError("k must be nonnegative")
    sig = np.sqrt(np.diag(model.uncertainty.covariance))
    return HyperboxSpec(delta_minus=k * sig, delta_plus=k * sig)
