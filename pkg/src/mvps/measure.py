"""Finite color spaces, finite measures and reinforcement kernels.

A model is stored as plain numpy arrays. In float mode the arrays are
``float64``; in exact mode they are ``object`` arrays of
:class:`fractions.Fraction`, so the same array code runs over both.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path

import numpy as np

RTOL = 1e-9
ATOL = 1e-12
NU_SUM_TOL = 1e-9


class ModelError(ValueError):
    """Base class for malformed or invalid urn models."""


class ZeroMass(ModelError):
    pass


class DimensionMismatch(ModelError):
    pass


class InvalidTheta(ModelError):
    pass


class InvalidKernel(ModelError):
    pass


class MassLeak(ModelError):
    """A surviving color reinforces a color that has no base mass.

    Such a model cannot be exchangeable: ``X1`` never takes the null color
    but later draws can.
    """

    def __init__(self, source, target, mass):
        self.source = source
        self.target = target
        self.mass = mass
        super().__init__(
            f"color {source!r} places mass {float(mass):.6g} on nu-null color {target!r}"
        )


def as_fraction(value) -> Fraction:
    """Convert a JSON-ish scalar to an exact rational.

    Floats go through their shortest decimal repr, so ``0.2`` becomes 1/5.
    """
    if isinstance(value, Fraction):
        return value
    if isinstance(value, bool):
        raise TypeError("booleans are not weights")
    if isinstance(value, (int, np.integer)):
        return Fraction(int(value))
    if isinstance(value, (float, np.floating)):
        return Fraction(repr(float(value)))
    if isinstance(value, str):
        return Fraction(value)
    if isinstance(value, dict) and set(value) == {"num", "den"}:
        return Fraction(int(value["num"]), int(value["den"]))
    raise TypeError(f"cannot read {value!r} as a rational number")


def _is_exact_scalar(value) -> bool:
    return (
        isinstance(value, (int, Fraction, str))
        and not isinstance(value, bool)
        or isinstance(value, dict) and set(value) == {"num", "den"}
    )


def is_exact(arr) -> bool:
    return isinstance(arr, np.ndarray) and arr.dtype == object


def close(a, b, exact: bool = False, rtol: float = RTOL, atol: float = ATOL) -> bool:
    if exact:
        return a == b
    return abs(a - b) <= atol + rtol * max(abs(a), abs(b))


def normalize(m):
    """Rescale a finite measure to total mass one.

    >>> normalize(np.array([2.0, 3.0, 5.0]))
    array([0.2, 0.3, 0.5])
    """
    m = np.asarray(m)
    if m.ndim != 1:
        raise DimensionMismatch("a finite measure is a 1-d weight vector")
    if np.any(m < 0):
        raise ModelError("measure weights must be non-negative")
    total = m.sum()
    if total == 0:
        raise ZeroMass("cannot normalize a measure with zero total mass")
    return m / total


def tv_distance(p, q) -> float:
    """Total variation distance between two probability vectors."""
    p = np.asarray(p)
    q = np.asarray(q)
    if p.shape != q.shape or p.ndim != 1:
        raise DimensionMismatch(f"shapes {p.shape} and {q.shape} differ")
    return np.abs(p - q).sum() / 2


@dataclass(frozen=True)
class UrnModel:
    """Parameters ``(theta, nu, R)`` of a measure-valued Polya urn sequence.

    ``kernel[i, j]`` is the mass of color ``j`` added after observing
    color ``i``. ``nu_total`` keeps the unnormalized total of the base
    weights as read from a model file.
    """

    theta: float | Fraction
    colors: tuple[str, ...]
    nu: np.ndarray
    kernel: np.ndarray
    nu_total: float | Fraction = 1
    _exact: bool = field(default=False, repr=False)

    def __post_init__(self):
        k = len(self.colors)
        if k < 1:
            raise DimensionMismatch("a color space needs at least one color")
        if len(set(self.colors)) != k:
            raise DimensionMismatch("color labels must be unique")
        if self.nu.shape != (k,) or self.kernel.shape != (k, k):
            raise DimensionMismatch(
                f"{k} colors but nu has shape {self.nu.shape} "
                f"and R has shape {self.kernel.shape}"
            )
        if not self.theta > 0:
            raise InvalidTheta(f"theta must be positive, got {self.theta}")
        if np.any(self.nu < 0) or np.any(self.kernel < 0):
            raise ModelError("nu and R must be non-negative")
        total = self.nu.sum()
        if self._exact:
            if total != 1:
                raise ModelError(f"nu sums to {total}, not 1")
        elif not abs(float(total) - 1.0) <= NU_SUM_TOL:
            raise ModelError(f"nu sums to {float(total)!r}, not 1")
        self.nu.setflags(write=False)
        self.kernel.setflags(write=False)

    @property
    def exact(self) -> bool:
        return self._exact

    @property
    def k(self) -> int:
        return len(self.colors)

    def index(self, color) -> int:
        """Resolve a color label or an integer index."""
        if isinstance(color, (int, np.integer)) and not isinstance(color, bool):
            if 0 <= color < self.k:
                return int(color)
        elif color in self.colors:
            return self.colors.index(color)
        raise KeyError(color)

    def row_masses(self):
        return self.kernel.sum(axis=1)

    def as_float(self) -> UrnModel:
        if not self._exact:
            return self
        return UrnModel(
            theta=float(self.theta),
            colors=self.colors,
            nu=self.nu.astype(float),
            kernel=self.kernel.astype(float),
            nu_total=float(self.nu_total),
        )

    def replace(self, **changes) -> UrnModel:
        fields = dict(
            theta=self.theta,
            colors=self.colors,
            nu=self.nu,
            kernel=self.kernel,
            nu_total=self.nu_total,
            _exact=self._exact,
        )
        fields.update(changes)
        return UrnModel(**fields)

    def to_dict(self) -> dict:
        return {
            "theta": to_jsonable(self.theta),
            "colors": list(self.colors),
            "nu": [to_jsonable(v) for v in self.nu],
            "R": [[to_jsonable(v) for v in row] for row in self.kernel],
        }


def make_model(theta, nu, kernel, colors=None, exact: bool = False) -> UrnModel:
    """Build a model, normalizing ``nu`` and checking shapes.

    With ``exact=True`` every weight is converted by :func:`as_fraction`.
    """
    if exact:
        theta = as_fraction(theta)
        nu_arr = np.array([as_fraction(v) for v in nu], dtype=object)
        rows = [[as_fraction(v) for v in row] for row in kernel]
        k_arr = np.empty((len(rows), len(rows[0]) if rows else 0), dtype=object)
        for i, row in enumerate(rows):
            if len(row) != k_arr.shape[1]:
                raise DimensionMismatch("R must be a square matrix")
            k_arr[i, :] = row
    else:
        theta = float(theta)
        nu_arr = np.asarray(nu, dtype=float)
        try:
            k_arr = np.asarray(kernel, dtype=float)
        except ValueError as exc:
            raise DimensionMismatch("R must be a square matrix") from exc
        if not (np.all(np.isfinite(nu_arr)) and np.all(np.isfinite(k_arr))):
            raise ModelError("weights must be finite")
    if colors is None:
        colors = tuple(f"x{i + 1}" for i in range(len(nu_arr)))
    colors = tuple(str(c) for c in colors)
    if nu_arr.ndim != 1 or len(nu_arr) != len(colors):
        raise DimensionMismatch("nu must have one weight per color")
    total = nu_arr.sum() if len(nu_arr) else 0
    return UrnModel(
        theta=theta,
        colors=colors,
        nu=normalize(nu_arr),
        kernel=k_arr,
        nu_total=total,
        _exact=exact,
    )


def validate_model(model: UrnModel) -> UrnModel:
    """Restrict a model to the support of its base measure.

    Colors with zero base mass can never be drawn from an exchangeable
    model, so they are removed from the color list, ``nu`` and ``R``.
    Raises :class:`MassLeak` when a surviving row reinforces a removed
    color, and :class:`InvalidKernel` when a surviving row is zero.
    """
    keep = np.flatnonzero(model.nu > 0)
    drop = np.flatnonzero(model.nu == 0)
    if len(drop):
        leak = model.kernel[np.ix_(keep, drop)]
        worst = np.unravel_index(np.argmax(leak), leak.shape)
        worst_mass = leak[worst]
        if (worst_mass > 0) if model.exact else (worst_mass > ATOL):
            raise MassLeak(
                model.colors[keep[worst[0]]], model.colors[drop[worst[1]]], worst_mass
            )
    kernel = model.kernel[np.ix_(keep, keep)]
    masses = kernel.sum(axis=1)
    if np.any(masses <= 0):
        bad = model.colors[keep[int(np.argmin(masses))]]
        raise InvalidKernel(f"color {bad!r} has positive base mass but a zero row")
    if len(drop) == 0:
        return model
    return model.replace(
        colors=tuple(model.colors[i] for i in keep),
        nu=model.nu[keep].copy(),
        kernel=kernel.copy(),
    )


def to_jsonable(value):
    """Numbers for JSON; non-integer rationals become ``{"num", "den"}``."""
    if isinstance(value, Fraction):
        if value.denominator == 1:
            return value.numerator
        return {"num": value.numerator, "den": value.denominator}
    if isinstance(value, (np.floating, float)):
        f = float(value)
        return int(f) if f.is_integer() and abs(f) < 2**53 else f
    if isinstance(value, (np.integer, int)):
        return int(value)
    return value


def model_from_dict(data: dict) -> UrnModel:
    try:
        theta = data["theta"]
        nu = data["nu"]
        kernel = data["R"]
    except KeyError as exc:
        raise ModelError(f"model is missing field {exc.args[0]!r}") from None
    colors = data.get("colors")
    scalars = [theta, *nu, *(v for row in kernel for v in row)]
    exact = all(_is_exact_scalar(v) for v in scalars)
    if not exact and any(isinstance(v, (dict, str)) for v in scalars):
        raise ModelError("mixing rational and floating-point weights is not supported")
    if len(kernel) != len(nu) or any(len(row) != len(nu) for row in kernel):
        raise DimensionMismatch("R must be a k x k matrix matching nu")
    return make_model(theta, nu, kernel, colors=colors, exact=exact)


def load_model(path) -> UrnModel:
    with open(Path(path)) as fh:
        try:
            data = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ModelError(f"{path}: not valid JSON ({exc})") from None
    if not isinstance(data, dict):
        raise ModelError(f"{path}: expected a JSON object")
    return model_from_dict(data)


def dump_model(model: UrnModel, path) -> None:
    with open(Path(path), "w") as fh:
        json.dump(model.to_dict(), fh, indent=2)
        fh.write("\n")


def conditional(nu, block):
    """``nu(. | block)`` as a full-length vector."""
    out = np.zeros_like(nu)
    idx = list(block)
    out[idx] = nu[idx] / nu[idx].sum()
    return out


def isclose_vec(a, b, exact: bool = False) -> bool:
    if exact:
        return bool(np.all(a == b))
    return all(math.isclose(x, y, rel_tol=RTOL, abs_tol=ATOL) for x, y in zip(a, b))
