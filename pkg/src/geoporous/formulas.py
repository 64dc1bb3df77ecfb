"""Small JSON-expressible expression catalog for mappings evaluable anywhere.

Every formula maps an ``(n, d_in)`` array of points to an ``(n, d_out)`` array.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from geoporous import spaces as sp


def _rows(X) -> np.ndarray:
    return np.atleast_2d(np.asarray(X, dtype=np.float64))


class Formula:
    def evaluate(self, X) -> np.ndarray:  # pragma: no cover - interface
        raise NotImplementedError

    def __call__(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=np.float64)
        if X.ndim == 1:
            return self.evaluate(X[None, :])[0]
        return self.evaluate(X)

    def to_json(self) -> dict:  # pragma: no cover - interface
        raise NotImplementedError


@dataclass(frozen=True, eq=False)
class Identity(Formula):
    def evaluate(self, X):
        return _rows(X).copy()

    def to_json(self):
        return {"type": "identity"}


@dataclass(frozen=True, eq=False)
class Constant(Formula):
    value: np.ndarray

    def evaluate(self, X):
        v = np.asarray(self.value, dtype=np.float64).reshape(-1)
        return np.broadcast_to(v, (len(_rows(X)), len(v))).copy()

    def to_json(self):
        return {"type": "constant", "value": np.asarray(self.value).reshape(-1).tolist()}


@dataclass(frozen=True, eq=False)
class Affine(Formula):
    """x -> matrix @ x + offset."""

    matrix: np.ndarray
    offset: np.ndarray = None

    def evaluate(self, X):
        A = np.atleast_2d(np.asarray(self.matrix, dtype=np.float64))
        out = _rows(X) @ A.T
        if self.offset is not None:
            out = out + np.asarray(self.offset, dtype=np.float64).reshape(-1)
        return out

    def to_json(self):
        obj = {"type": "affine", "matrix": np.atleast_2d(self.matrix).tolist()}
        if self.offset is not None:
            obj["offset"] = np.asarray(self.offset).reshape(-1).tolist()
        return obj


@dataclass(frozen=True, eq=False)
class Clamp(Formula):
    inner: Formula
    lo: float
    hi: float

    def evaluate(self, X):
        return np.clip(self.inner.evaluate(X), self.lo, self.hi)

    def to_json(self):
        return {"type": "clamp", "inner": self.inner.to_json(), "lo": self.lo, "hi": self.hi}


@dataclass(frozen=True, eq=False)
class Min(Formula):
    parts: tuple

    def evaluate(self, X):
        return np.minimum.reduce([p.evaluate(X) for p in self.parts])

    def to_json(self):
        return {"type": "min", "parts": [p.to_json() for p in self.parts]}


@dataclass(frozen=True, eq=False)
class Max(Formula):
    parts: tuple

    def evaluate(self, X):
        return np.maximum.reduce([p.evaluate(X) for p in self.parts])

    def to_json(self):
        return {"type": "max", "parts": [p.to_json() for p in self.parts]}


@dataclass(frozen=True, eq=False)
class Compose(Formula):
    """outer(inner(x))."""

    outer: Formula
    inner: Formula

    def evaluate(self, X):
        return self.outer.evaluate(self.inner.evaluate(X))

    def to_json(self):
        return {"type": "compose", "outer": self.outer.to_json(), "inner": self.inner.to_json()}


@dataclass(frozen=True, eq=False)
class GeodesicCombination(Formula):
    """x -> (1 - weight) first(x) (+) weight second(x) in ``space``."""

    space: sp.SpaceDescriptor
    first: Formula
    second: Formula
    weight: float

    def evaluate(self, X):
        return sp.interpolate(self.space, self.first.evaluate(X), self.second.evaluate(X), self.weight)

    def to_json(self):
        return {"type": "geodesic", "space": self.space.to_json(), "first": self.first.to_json(),
                "second": self.second.to_json(), "weight": self.weight}


@dataclass(frozen=True, eq=False)
class PiecewiseLinear(Formula):
    """Piecewise-linear interpolation in the first input coordinate.

    ``values[k]`` is the output vector at ``knots[k]``; outside the knot range
    the end values are held.
    """

    knots: np.ndarray
    values: np.ndarray

    def evaluate(self, X):
        t = _rows(X)[:, 0]
        V = np.asarray(self.values, dtype=np.float64)
        V = V[:, None] if V.ndim == 1 else V
        k = np.asarray(self.knots, dtype=np.float64)
        return np.stack([np.interp(t, k, V[:, j]) for j in range(V.shape[1])], axis=1)

    def to_json(self):
        return {"type": "piecewise_linear", "knots": np.asarray(self.knots).tolist(),
                "values": np.asarray(self.values).tolist()}


@dataclass(frozen=True, eq=False)
class Cases(Formula):
    """First matching branch; ``branches`` is a tuple of (predicate, formula)."""

    space: sp.SpaceDescriptor
    branches: tuple
    default: Formula

    def evaluate(self, X):
        X = _rows(X)
        out = self.default.evaluate(X)
        done = np.zeros(len(X), dtype=bool)
        for pred, formula in self.branches:
            hit = pred.contains(self.space, X) & ~done
            if hit.any():
                out[hit] = formula.evaluate(X[hit])
                done |= hit
        return out

    def to_json(self):
        return {"type": "cases", "space": self.space.to_json(),
                "branches": [{"when": p.to_json(), "then": f.to_json()} for p, f in self.branches],
                "default": self.default.to_json()}


@dataclass(frozen=True, eq=False)
class PythonFormula(Formula):
    """Wraps a vectorised callable; not serialisable."""

    fn: object
    name: str = "python"

    def evaluate(self, X):
        return np.atleast_2d(np.asarray(self.fn(_rows(X)), dtype=np.float64).reshape(len(_rows(X)), -1))

    def to_json(self):
        raise TypeError(f"formula {self.name!r} wraps a Python callable and has no JSON form")


def from_json(obj: dict) -> Formula:
    from geoporous.regions import predicate_from_json

    kind = obj.get("type")
    if kind == "identity":
        return Identity()
    if kind == "constant":
        return Constant(np.asarray(obj["value"], dtype=np.float64))
    if kind == "affine":
        off = obj.get("offset")
        return Affine(np.asarray(obj["matrix"], dtype=np.float64),
                      None if off is None else np.asarray(off, dtype=np.float64))
    if kind == "clamp":
        return Clamp(from_json(obj["inner"]), float(obj["lo"]), float(obj["hi"]))
    if kind == "min":
        return Min(tuple(from_json(p) for p in obj["parts"]))
    if kind == "max":
        return Max(tuple(from_json(p) for p in obj["parts"]))
    if kind == "compose":
        return Compose(from_json(obj["outer"]), from_json(obj["inner"]))
    if kind == "geodesic":
        return GeodesicCombination(sp.SpaceDescriptor.from_json(obj["space"]), from_json(obj["first"]),
                                   from_json(obj["second"]), float(obj["weight"]))
    if kind == "piecewise_linear":
        return PiecewiseLinear(np.asarray(obj["knots"], dtype=np.float64), np.asarray(obj["values"], dtype=np.float64))
    if kind == "cases":
        branches = tuple((predicate_from_json(b["when"]), from_json(b["then"])) for b in obj["branches"])
        return Cases(sp.SpaceDescriptor.from_json(obj["space"]), branches, from_json(obj["default"]))
    raise ValueError(f"unknown formula type {kind!r}")


def scaled(q: float, dim: int = 1) -> Affine:
    """x -> q x."""
    return Affine(q * np.eye(dim))


def star_example_mapping(chord: float = 1.0 / 3.0) -> Cases:
    """The two-arm star mapping: 0 on the arm toward u, and
    z -> (max(z1 - 1/3, 0) / 2, 0) on the arm toward e."""
    from geoporous.regions import SegmentSet, arm_direction

    e, _ = arm_direction(chord)
    zero = np.zeros(2)
    shifted = Max((Affine(np.array([[1.0, 0.0], [0.0, 0.0]]), np.array([-1.0 / 3.0, 0.0])), Constant(zero)))
    on_a = Affine(0.5 * np.eye(2), None)
    return Cases(sp.euclidean(2), ((SegmentSet(zero, e), Compose(on_a, shifted)),), Constant(zero))
