"""Exact finite-depth laws of an MVPS by enumeration.

On an exact model (object arrays of Fractions) all arithmetic is rational
and residuals are exact; on a float model they carry rounding error only.
The oracle works on the model as given, including nu-null colors, so it
can expose mass leaks that the classifier reports.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .measure import ATOL, RTOL, UrnModel, to_jsonable

DEFAULT_DEPTH = 4
DEFAULT_BUDGET = 10**6


class BudgetExceeded(ValueError):
    pass


class UnknownColor(KeyError):
    pass


@dataclass(frozen=True)
class JointPmf:
    """``probs[x1, ..., xn]`` is the probability of the color sequence."""

    depth: int
    probs: np.ndarray

    def __getitem__(self, seq):
        return self.probs[tuple(seq)]

    def items(self):
        for idx in np.ndindex(self.probs.shape):
            yield idx, self.probs[idx]

    def total(self):
        return self.probs.sum()


@dataclass(frozen=True)
class OracleReport:
    depth: int
    passed: bool
    max_residual: object
    violation_depth: int | None = None
    sequence: tuple[int, ...] | None = None
    permuted: tuple[int, ...] | None = None
    residuals_by_depth: tuple = ()

    def to_dict(self, model: UrnModel | None = None) -> dict:
        def names(seq):
            if seq is None or model is None:
                return list(seq) if seq is not None else None
            return [model.colors[i] for i in seq]

        return {
            "depth": self.depth,
            "passed": self.passed,
            "max_residual": to_jsonable(self.max_residual),
            "violation_depth": self.violation_depth,
            "witness": None
            if self.sequence is None
            else {
                "sequence": names(self.sequence),
                "permuted": names(self.permuted),
                "delta": to_jsonable(self.max_residual),
            },
            "residuals_by_depth": [to_jsonable(r) for r in self.residuals_by_depth],
        }


def predictive_exact(model: UrnModel, history=()) -> np.ndarray:
    """``(theta nu + sum_i R_{h_i}) / (theta + sum_i R_{h_i}(X))``."""
    num = model.theta * model.nu
    den = model.theta
    for h in history:
        try:
            i = model.index(h)
        except KeyError:
            raise UnknownColor(h) from None
        num = num + model.kernel[i]
        den = den + model.kernel[i].sum()
    return num / den


def _layers(model: UrnModel, depth: int, budget: int):
    """Yield the joint pmf array at each depth ``1..depth``."""
    k = model.k
    if k**depth > budget:
        raise BudgetExceeded(f"{k}^{depth} sequences exceed the budget of {budget}")
    kernel = model.kernel
    masses = kernel.sum(axis=1)
    # one row of urn numerators per prefix, flattened in C order
    num = (model.theta * model.nu)[None, :]
    den = np.array([model.theta], dtype=num.dtype)
    prob = np.array([1], dtype=num.dtype) if model.exact else np.ones(1)
    for d in range(1, depth + 1):
        prob = (prob[:, None] * num / den[:, None]).reshape(-1)
        yield prob.reshape((k,) * d)
        if d < depth:
            num = (num[:, None, :] + kernel[None, :, :]).reshape(-1, k)
            den = (den[:, None] + masses[None, :]).reshape(-1)


def joint_pmf(model: UrnModel, n: int, budget: int = DEFAULT_BUDGET) -> JointPmf:
    if n < 1:
        raise ValueError("depth must be at least 1")
    for probs in _layers(model, n, budget):
        pass
    return JointPmf(depth=n, probs=probs)


def _sorted_representative(k: int, d: int) -> np.ndarray:
    seqs = np.indices((k,) * d).reshape(d, -1)
    return np.ravel_multi_index(tuple(np.sort(seqs, axis=0)), (k,) * d)


def exchangeability_depth_check(
    model: UrnModel,
    n: int = DEFAULT_DEPTH,
    budget: int = DEFAULT_BUDGET,
    rtol: float = RTOL,
    atol: float = ATOL,
) -> OracleReport:
    """Check permutation invariance of the joint pmf at every depth ``<= n``.

    Each sequence is compared with its sorted rearrangement. The report
    stops at the first depth with a violation and names the sequence pair
    with the largest probability gap there.
    """
    k = model.k
    overall = 0
    by_depth = []
    for d, probs in enumerate(_layers(model, n, budget), start=1):
        flat = probs.reshape(-1)
        rep = flat[_sorted_representative(k, d)]
        gap = np.abs(flat - rep)
        worst = int(np.argmax(gap))
        res = gap[worst]
        by_depth.append(res)
        overall = max(overall, res)
        if model.exact:
            bad = res != 0
        else:
            bad = res > atol + rtol * max(abs(flat[worst]), abs(rep[worst]))
        if bad:
            seq = tuple(int(i) for i in np.unravel_index(worst, probs.shape))
            return OracleReport(
                depth=n,
                passed=False,
                max_residual=res,
                violation_depth=d,
                sequence=seq,
                permuted=tuple(sorted(seq)),
                residuals_by_depth=tuple(by_depth),
            )
    return OracleReport(depth=n, passed=True, max_residual=overall, residuals_by_depth=tuple(by_depth))
