"""Exact classification of finite-color reinforcement kernels.

A finite model is either i.i.d., exchangeable with a block-diagonal
kernel whose rows are base-measure conditionals, or not exchangeable.
Every check excludes nu-null colors; run :func:`validate_model` first or
let :func:`classify` do it.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .measure import (
    ATOL,
    RTOL,
    MassLeak,
    UrnModel,
    close,
    conditional,
    isclose_vec,
    to_jsonable,
    tv_distance,
    validate_model,
)

IID = "IID"
EXCHANGEABLE = "Exchangeable"
NOT_EXCHANGEABLE = "NotExchangeable"

ROW_TV_TOL = 1e-9


class UnbalancedInput(ValueError):
    pass


@dataclass(frozen=True)
class BalanceProfile:
    row_masses: np.ndarray
    balanced: bool
    m: object = None


@dataclass(frozen=True)
class Partition:
    """Blocks of color indices, sorted by smallest member."""

    blocks: tuple[tuple[int, ...], ...]

    def __post_init__(self):
        seen = [i for b in self.blocks for i in b]
        if len(seen) != len(set(seen)) or any(len(b) == 0 for b in self.blocks):
            raise ValueError("blocks must be disjoint and non-empty")

    @classmethod
    def of(cls, blocks) -> Partition:
        blocks = sorted(tuple(sorted(int(i) for i in b)) for b in blocks)
        return cls(tuple(blocks))

    def block_of(self, i: int) -> int:
        for k, b in enumerate(self.blocks):
            if i in b:
                return k
        raise KeyError(i)

    def labels(self, k: int) -> np.ndarray:
        """Block index of every color ``0..k-1``."""
        out = np.full(k, -1, dtype=int)
        for b, block in enumerate(self.blocks):
            out[list(block)] = b
        return out

    def masses(self, nu) -> np.ndarray:
        return np.array([nu[list(b)].sum() for b in self.blocks], dtype=nu.dtype)

    def to_list(self) -> list[list[int]]:
        return [list(b) for b in self.blocks]


@dataclass(frozen=True)
class SymmetryReport:
    detailed_balance: bool
    detailed_balance_residual: object
    detailed_balance_at: tuple[int, int]
    two_step: bool
    two_step_residual: object
    two_step_at: tuple[int, int, int]

    @property
    def passed(self) -> bool:
        return self.detailed_balance and self.two_step


@dataclass(frozen=True)
class Verdict:
    kind: str
    model: UrnModel
    partition: Partition | None = None
    m: object = None
    witness: dict | None = None
    normalized_model: UrnModel | None = None
    symmetry: SymmetryReport | None = None
    warnings: tuple[str, ...] = field(default=())

    @property
    def exchangeable(self) -> bool:
        return self.kind != NOT_EXCHANGEABLE

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "partition": self.partition.to_list() if self.partition else None,
            "m": to_jsonable(self.m) if self.m is not None else None,
            "witness": _jsonable_tree(self.witness),
            "normalized": (
                self.normalized_model.to_dict() if self.normalized_model else None
            ),
            "warnings": list(self.warnings),
        }


def _jsonable_tree(obj):
    if isinstance(obj, dict):
        return {k: _jsonable_tree(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable_tree(v) for v in obj]
    return to_jsonable(obj)


def balance_profile(model: UrnModel) -> BalanceProfile:
    masses = model.row_masses()
    lo, hi = masses.min(), masses.max()
    balanced = bool(close(lo, hi, model.exact))
    m = None
    if balanced:
        m = masses[0] if model.exact else float(masses.mean())
    return BalanceProfile(row_masses=masses, balanced=balanced, m=m)


def is_iid(model: UrnModel) -> bool:
    masses = model.row_masses()
    return all(
        isclose_vec(model.kernel[i] / masses[i], model.nu, model.exact)
        for i in range(model.k)
    )


def normalize_model(model: UrnModel, m=None) -> UrnModel:
    """Rescale to row mass one: ``(theta / m, nu, R / m)``."""
    if m is None:
        profile = balance_profile(model)
        if not profile.balanced:
            raise UnbalancedInput(
                f"row masses range over [{profile.row_masses.min()}, "
                f"{profile.row_masses.max()}]"
            )
        m = profile.m
    if m == 1:
        return model
    return model.replace(theta=model.theta / m, kernel=model.kernel / m)


def _rows_normalized(model: UrnModel):
    masses = model.row_masses()
    if not close(masses.min(), masses.max(), model.exact):
        raise UnbalancedInput("symmetry identities need a balanced kernel")
    return model.kernel / masses[:, None]


def symmetry_checks(model: UrnModel) -> SymmetryReport:
    """Evaluate the two finite-space symmetry identities.

    ``nu_i R_i(j) == nu_j R_j(i)`` and ``R_x(y) R_y(z) == R_x(z) R_z(y)``,
    on the row-normalized kernel. Residuals and positions are the maxima.
    """
    r = _rows_normalized(model)
    flow = model.nu[:, None] * r
    db = np.abs(flow - flow.T)
    db_at = np.unravel_index(int(np.argmax(db)), db.shape)
    db_res = db[db_at]

    two = r[:, :, None] * r[None, :, :]
    # (x, y, z) and (x, z, y) state the same identity; keep z < y
    below = np.tril(np.ones((model.k, model.k), dtype=int), k=-1)
    ts = np.abs(two - two.transpose(0, 2, 1)) * below[None, :, :]
    ts_at = np.unravel_index(int(np.argmax(ts)), ts.shape)
    ts_res = ts[ts_at]

    def ok(res, scale):
        if model.exact:
            return res == 0
        return res <= ATOL + RTOL * scale

    return SymmetryReport(
        detailed_balance=bool(ok(db_res, np.abs(flow).max())),
        detailed_balance_residual=db_res,
        detailed_balance_at=tuple(int(i) for i in db_at),
        two_step=bool(ok(ts_res, np.abs(two).max())),
        two_step_residual=ts_res,
        two_step_at=tuple(int(i) for i in ts_at),
    )


def _group_rows(r, exact: bool) -> list[list[int]]:
    groups: list[list[int]] = []
    for i in range(len(r)):
        for g in groups:
            same = np.all(r[i] == r[g[0]]) if exact else tv_distance(r[i], r[g[0]]) <= ROW_TV_TOL
            if same:
                g.append(i)
                break
        else:
            groups.append([i])
    return groups


def detect_partition(model: UrnModel) -> Partition | dict:
    """Find blocks ``D_k`` with rows equal to ``nu(. | D_k)``.

    Returns a :class:`Partition`, or a witness dict naming the color with
    the largest residual when no block structure exists.
    """
    r = _rows_normalized(model)
    nu = model.nu
    exact = model.exact

    worst = None
    for i in range(model.k):
        support = np.flatnonzero(r[i] > 0)
        res = tv_distance(r[i], conditional(nu, support))
        if worst is None or res > worst[0]:
            worst = (res, i, support)
    res, i, support = worst
    if not (res == 0 if exact else res <= ROW_TV_TOL):
        return {
            "check": "conditional_row",
            "color": i,
            "support": [int(j) for j in support],
            "residual": res,
        }

    groups = _group_rows(r, exact)
    worst = None
    for g in groups:
        res = tv_distance(r[g[0]], conditional(nu, g))
        if worst is None or res > worst[0]:
            worst = (res, g)
    res, g = worst
    if not (res == 0 if exact else res <= ROW_TV_TOL):
        return {
            "check": "block_closure",
            "color": g[0],
            "group": g,
            "support": [int(j) for j in np.flatnonzero(r[g[0]] > 0)],
            "residual": res,
        }
    return Partition.of(groups)


def _lift(partition: Partition, kept: list[int]) -> Partition:
    return Partition.of([[kept[i] for i in b] for b in partition.blocks])


def classify(model: UrnModel) -> Verdict:
    """Decide whether the MVPS is i.i.d., exchangeable, or neither.

    Partitions and witness indices refer to the colors of ``model`` as
    given, before nu-null colors are pruned.
    """
    try:
        pruned = validate_model(model)
    except MassLeak as leak:
        witness = {
            "check": "mass_leak",
            "color": model.index(leak.source),
            "target": model.index(leak.target),
            "residual": leak.mass,
        }
        return Verdict(NOT_EXCHANGEABLE, model, witness=witness, warnings=(str(leak),))
    kept = [model.index(c) for c in pruned.colors]
    warnings = ()
    if len(kept) < model.k:
        dropped = [c for c in model.colors if c not in pruned.colors]
        warnings = (f"pruned nu-null colors {dropped}",)

    profile = balance_profile(pruned)
    if is_iid(pruned):
        if profile.balanced:
            normalized = normalize_model(pruned, profile.m)
        else:
            iid_rows = np.tile(pruned.nu, (pruned.k, 1))
            normalized = pruned.replace(kernel=iid_rows)
        return Verdict(
            IID,
            model,
            partition=Partition.of([kept]),
            m=profile.m,
            normalized_model=normalized,
            warnings=warnings,
        )

    if not profile.balanced:
        masses = profile.row_masses
        lo, hi = int(np.argmin(masses)), int(np.argmax(masses))
        witness = {
            "check": "balance",
            "colors": [kept[lo], kept[hi]],
            "row_masses": [masses[lo], masses[hi]],
            "residual": masses[hi] - masses[lo],
            "reason": "an unbalanced exchangeable MVPS must be i.i.d.",
        }
        return Verdict(NOT_EXCHANGEABLE, model, witness=witness, warnings=warnings)

    normalized = normalize_model(pruned, profile.m)
    symmetry = symmetry_checks(normalized)
    found = detect_partition(normalized)
    if isinstance(found, Partition) and symmetry.passed:
        return Verdict(
            EXCHANGEABLE,
            model,
            partition=_lift(found, kept),
            m=profile.m,
            normalized_model=normalized,
            symmetry=symmetry,
            warnings=warnings,
        )

    if not symmetry.detailed_balance:
        witness = {
            "check": "detailed_balance",
            "at": [kept[j] for j in symmetry.detailed_balance_at],
            "residual": symmetry.detailed_balance_residual,
        }
    elif not symmetry.two_step:
        witness = {
            "check": "two_step",
            "at": [kept[j] for j in symmetry.two_step_at],
            "residual": symmetry.two_step_residual,
        }
    else:
        witness = dict(found)
        witness["color"] = kept[witness["color"]]
        for key in ("support", "group"):
            if key in witness:
                witness[key] = [kept[j] for j in witness[key]]
    return Verdict(
        NOT_EXCHANGEABLE,
        model,
        m=profile.m,
        witness=witness,
        normalized_model=normalized,
        symmetry=symmetry,
        warnings=warnings,
    )
