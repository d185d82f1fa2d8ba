"""Path sampling, stick-breaking draws and the hybrid [0, 1] example.

Uniform consumption order is part of the reproducibility contract:

* predictive paths: one variate per run per step (inverse CDF over the
  color order);
* stick-breaking: per stick, one variate for the stick and one for its
  source color;
* DP-mixture paths: per step, a block of label variates then a block of
  color variates;
* hybrid paths: per step, blocks of variates for the fresh/copy choice,
  the copied index and the fresh value.
"""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass

import numpy as np

from .kernels import EXCHANGEABLE, IID, Verdict, classify
from .measure import UrnModel, validate_model


class InvalidAlpha(ValueError):
    pass


class NonPositiveEps(ValueError):
    pass


class InvalidS(ValueError):
    pass


class MissingPartition(ValueError):
    pass


@dataclass(frozen=True)
class PathSample:
    """A realized path. ``colors`` holds indices, or reals for hybrid paths.

    ``predictive_trace[t]`` is the predictive law used to draw ``colors[t]``.
    """

    colors: np.ndarray
    predictive_trace: np.ndarray | None = None

    def __len__(self):
        return len(self.colors)


@dataclass(frozen=True)
class RandomMeasureDraw:
    weights: np.ndarray
    sources: np.ndarray
    truncation_mass: float
    composite: np.ndarray

    def to_dict(self, model: UrnModel | None = None) -> dict:
        sources = [int(z) for z in self.sources]
        if model is not None:
            sources = [model.colors[z] for z in sources]
        return {
            "weights": self.weights.tolist(),
            "sources": sources,
            "composite": self.composite.tolist(),
            "truncation_mass": self.truncation_mass,
        }


def _categorical(weights: np.ndarray, u: np.ndarray, fallback: int) -> np.ndarray:
    """Inverse-CDF draw per row of ``weights`` (unnormalized)."""
    cum = np.cumsum(weights, axis=-1)
    target = u * cum[..., -1]
    idx = np.sum(cum <= target[..., None], axis=-1)
    return np.minimum(idx, fallback)


def beta_stick(u: float, alpha: float) -> float:
    """Inverse CDF of Beta(1, alpha) at ``u``: ``1 - (1 - u) ** (1 / alpha)``."""
    if not alpha > 0:
        raise InvalidAlpha(f"alpha must be positive, got {alpha}")
    if not 0 <= u < 1:
        raise ValueError(f"u must lie in [0, 1), got {u}")
    return -math.expm1(math.log1p(-u) / alpha)


def _float_model(model: UrnModel) -> UrnModel:
    validate_model(model)
    return model.as_float()


def _predictive_steps(model: UrnModel, n: int, runs: int, rng):
    """Yield ``(predictive numerators, denominators, colors)`` step by step."""
    if n < 1 or runs < 1:
        raise ValueError("n and runs must be positive")
    fm = _float_model(model)
    kernel = fm.kernel
    masses = kernel.sum(axis=1)
    last_live = int(np.flatnonzero(fm.nu > 0)[-1])

    num = np.tile(fm.theta * fm.nu, (runs, 1))
    den = np.full(runs, fm.theta)
    for _ in range(n):
        u = rng.uniforms(runs)
        x = _categorical(num, u, last_live)
        yield num, den, x
        num += kernel[x]
        den += masses[x]


def sample_paths(model: UrnModel, n: int, runs: int, rng, trace: bool = False):
    """Simulate ``runs`` independent paths of length ``n`` in lockstep.

    Returns an ``(runs, n)`` array of color indices, and the
    ``(runs, n, k)`` predictive trace when ``trace`` is set.
    """
    colors = np.empty((runs, n), dtype=np.int64)
    tr = np.empty((runs, n, model.k)) if trace else None
    for t, (num, den, x) in enumerate(_predictive_steps(model, n, runs, rng)):
        if trace:
            tr[:, t, :] = num / den[:, None]
        colors[:, t] = x
    return (colors, tr) if trace else colors


def sample_counts(model: UrnModel, n: int, runs: int, rng) -> np.ndarray:
    """Per-run color counts after ``n`` steps; consumes the stream like sample_paths."""
    counts = np.zeros((runs, model.k), dtype=np.int64)
    rows = np.arange(runs)
    for _, _, x in _predictive_steps(model, n, runs, rng):
        counts[rows, x] += 1
    return counts


def sample_path(model: UrnModel, n: int, rng) -> PathSample:
    """One predictive path with its trace; indices refer to ``model.colors``."""
    colors, tr = sample_paths(model, n, 1, rng, trace=True)
    return PathSample(colors=colors[0], predictive_trace=tr[0])


def stick_breaking(theta_over_m: float, model: UrnModel, eps: float, rng) -> RandomMeasureDraw:
    """Truncated draw of ``sum_j V_j R_{Z_j}`` with ``Z_j ~ nu``.

    Sticks are broken until the remaining mass drops below ``eps``;
    ``composite`` is renormalized by the retained weight.
    """
    if not 0 < eps < 1:
        raise NonPositiveEps(f"eps must lie in (0, 1), got {eps}")
    if not theta_over_m > 0:
        raise InvalidAlpha(f"theta/m must be positive, got {theta_over_m}")
    pruned = validate_model(model).as_float()
    kept = np.array([model.index(c) for c in pruned.colors])
    rows = np.zeros((pruned.k, model.k))
    rows[:, kept] = pruned.kernel / pruned.kernel.sum(axis=1, keepdims=True)
    cum_nu = np.cumsum(pruned.nu)

    weights, sources = [], []
    remaining = 1.0
    while remaining >= eps:
        w = beta_stick(rng.uniform(), theta_over_m)
        u = rng.uniform()
        z = min(int(np.sum(cum_nu <= u * cum_nu[-1])), pruned.k - 1)
        weights.append(w * remaining)
        sources.append(z)
        remaining *= 1.0 - w
    v = np.array(weights)
    z = np.array(sources, dtype=np.int64)
    composite = v @ rows[z] / v.sum()
    return RandomMeasureDraw(weights=v, sources=kept[z], truncation_mass=remaining, composite=composite)


def _mixture_parts(model: UrnModel, verdict: Verdict | None):
    if verdict is None:
        verdict = classify(model)
    if verdict.kind not in (IID, EXCHANGEABLE) or verdict.partition is None:
        raise MissingPartition(f"model is {verdict.kind}; no block partition available")
    fm = model.as_float()
    blocks = verdict.partition.blocks
    block_nu = np.array([fm.nu[list(b)].sum() for b in blocks])
    m = verdict.m if verdict.m is not None else 1.0
    return fm, blocks, block_nu, float(fm.theta) / float(m)


def dp_mixture_paths(model: UrnModel, n: int, runs: int, rng, verdict: Verdict | None = None):
    """Labels and colors from the Dirichlet-process mixture form of the model.

    Labels follow a Polya sequence on blocks with parameters
    ``(theta / m, nu(D_k))``; each color is drawn from ``nu(. | D_label)``.
    Returns ``(labels, colors)``, both ``(runs, n)`` integer arrays.
    """
    fm, blocks, block_nu, c = _mixture_parts(model, verdict)
    nb = len(blocks)
    within = [fm.nu[list(b)] / fm.nu[list(b)].sum() for b in blocks]
    within_cum = np.zeros((nb, fm.k))
    members = np.zeros((nb, fm.k), dtype=np.int64)
    for b, block in enumerate(blocks):
        within_cum[b, : len(block)] = np.cumsum(within[b])
        within_cum[b, len(block):] = np.inf
        members[b, : len(block)] = block
    sizes = np.array([len(b) for b in blocks])

    counts = np.tile(c * block_nu, (runs, 1))
    labels = np.empty((runs, n), dtype=np.int64)
    colors = np.empty((runs, n), dtype=np.int64)
    rows = np.arange(runs)
    for t in range(n):
        u_label = rng.uniforms(runs)
        u_color = rng.uniforms(runs)
        xi = _categorical(counts, u_label, nb - 1)
        pos = np.sum(within_cum[xi] <= u_color[:, None], axis=1)
        pos = np.minimum(pos, sizes[xi] - 1)
        labels[:, t] = xi
        colors[:, t] = members[xi, pos]
        counts[rows, xi] += 1.0
    return labels, colors


def dp_mixture_path(model: UrnModel, n: int, rng, verdict: Verdict | None = None):
    labels, colors = dp_mixture_paths(model, n, 1, rng, verdict=verdict)
    return labels[0], colors[0]


def hybrid_paths(theta: float, s: float, n: int, runs: int, rng) -> np.ndarray:
    """Paths of the [0, 1] example with ``nu`` uniform and ``S = [0, s)``.

    Reinforcement is a unit atom at ``x`` for ``x < s`` and the uniform law
    on ``[s, 1]`` otherwise, so a past value is either copied bit for bit
    or replaced by a fresh draw from ``[s, 1)``.
    """
    if not 0 < s < 1:
        raise InvalidS(f"s must lie in (0, 1), got {s}")
    if not theta > 0:
        raise ValueError("theta must be positive")
    values = np.empty((runs, n))
    rows = np.arange(runs)
    for t in range(n):
        u_fresh = rng.uniforms(runs)
        u_index = rng.uniforms(runs)
        u_value = rng.uniforms(runs)
        if t == 0:
            values[:, 0] = u_value
            continue
        fresh = u_fresh < theta / (theta + t)
        src = values[rows, np.minimum((u_index * t).astype(np.int64), t - 1)]
        reinforced = np.where(src < s, src, s + (1.0 - s) * u_value)
        values[:, t] = np.where(fresh, u_value, reinforced)
    return values


def hybrid_example_path(theta: float, s: float, n: int, rng) -> PathSample:
    return PathSample(colors=hybrid_paths(theta, s, n, 1, rng)[0])


def path_to_csv(path: PathSample, model: UrnModel | None = None) -> str:
    """CSV with ``step``, the color label (or value) and one column per color."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    header = ["step", "color" if model is not None else "value"]
    if path.predictive_trace is not None:
        labels = model.colors if model is not None else range(path.predictive_trace.shape[1])
        header += [f"p_{c}" for c in labels]
    writer.writerow(header)
    for t, x in enumerate(path.colors):
        label = model.colors[int(x)] if model is not None else repr(float(x))
        row = [t + 1, label]
        if path.predictive_trace is not None:
            row += [repr(float(p)) for p in path.predictive_trace[t]]
        writer.writerow(row)
    return buf.getvalue()

