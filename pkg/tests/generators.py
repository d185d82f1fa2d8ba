"""Random finite models for property and agreement tests."""
from fractions import Fraction

import numpy as np

from mvps.measure import make_model


def random_partition(rng, k):
    labels = rng.integers(0, k, size=k)
    blocks = {}
    for i, b in enumerate(labels):
        blocks.setdefault(int(b), []).append(i)
    return list(blocks.values())


def _rational(rng, lo=1, hi=9):
    return Fraction(int(rng.integers(lo, hi + 1)), int(rng.integers(1, 4)))


def block_model(rng, k, exact=False, blocks=None):
    """Exchangeable kernel: each row is ``m * nu(. | block of the row)``."""
    w = [int(x) for x in rng.integers(1, 10, size=k)]
    blocks = blocks if blocks is not None else random_partition(rng, k)
    m = _rational(rng)
    theta = _rational(rng)
    total = sum(w)
    kernel = [[Fraction(0)] * k for _ in range(k)]
    for block in blocks:
        mass = sum(w[j] for j in block)
        for i in block:
            for j in block:
                kernel[i][j] = m * Fraction(w[j], mass)
    nu = [Fraction(x, total) for x in w]
    if not exact:
        theta, nu = float(theta), [float(x) for x in nu]
        kernel = [[float(x) for x in row] for row in kernel]
    return make_model(theta, nu, kernel, exact=exact)


def iid_model(rng, k, exact=False):
    """Rows proportional to nu with row-specific masses."""
    w = [int(x) for x in rng.integers(1, 10, size=k)]
    total = sum(w)
    nu = [Fraction(x, total) for x in w]
    masses = [_rational(rng) for _ in range(k)]
    kernel = [[mi * p for p in nu] for mi in masses]
    theta = _rational(rng)
    if not exact:
        theta, nu = float(theta), [float(x) for x in nu]
        kernel = [[float(x) for x in row] for row in kernel]
    return make_model(theta, nu, kernel, exact=exact)


def perturb(rng, model):
    """Add mass to one or two random kernel entries."""
    kernel = model.kernel.copy()
    for _ in range(int(rng.integers(1, 3))):
        i, j = rng.integers(0, model.k, size=2)
        if model.exact:
            kernel[i, j] = kernel[i, j] + Fraction(int(rng.integers(1, 6)), 10)
        else:
            kernel[i, j] += float(rng.uniform(0.1, 0.6))
    return model.replace(kernel=kernel)


def dense_model(rng, k):
    """Arbitrary positive float kernel."""
    return make_model(
        float(rng.uniform(0.2, 3)), rng.uniform(0.1, 1, size=k), rng.uniform(0, 2, size=(k, k))
    )


def with_null_color(rng, model, leak=False):
    """Append a color with zero base mass; optionally let a row reinforce it."""
    k = model.k
    dtype = model.kernel.dtype
    zero = Fraction(0) if model.exact else 0.0
    kernel = np.full((k + 1, k + 1), zero, dtype=dtype)
    kernel[:k, :k] = model.kernel
    kernel[k, k] = Fraction(1) if model.exact else 1.0
    if leak:
        kernel[int(rng.integers(0, k)), k] = Fraction(1, 2) if model.exact else 0.5
    nu = np.array(list(model.nu) + [zero], dtype=dtype)
    return model.replace(colors=model.colors + (f"x{k + 1}",), nu=nu, kernel=kernel)


def mixed_family(rng, count, exact_share=0.5):
    """Models of 2-4 colors: blocks, i.i.d., perturbations, null colors."""
    models = []
    for n in range(count):
        k = int(rng.integers(2, 5))
        exact = rng.random() < exact_share
        kind = n % 6
        if kind == 0:
            m = block_model(rng, k, exact)
        elif kind == 1:
            m = iid_model(rng, k, exact)
        elif kind == 2:
            m = perturb(rng, block_model(rng, k, exact))
        elif kind == 3:
            m = perturb(rng, iid_model(rng, k, exact))
        elif kind == 4:
            m = dense_model(rng, k)
        else:
            base = block_model(rng, min(k, 3), exact)
            m = with_null_color(rng, base, leak=bool(rng.random() < 0.5))
        models.append(m)
    return models


def relabel(model, perm):
    """Model with color ``i`` renamed to position ``perm[i]``."""
    inv = np.argsort(perm)
    return model.replace(
        colors=tuple(model.colors[i] for i in inv),
        nu=model.nu[inv].copy(),
        kernel=model.kernel[np.ix_(inv, inv)].copy(),
    )


def k_color_family(family, w, m=1.0, ms=(1.0, 1.0, 1.0), exact=False):
    """The five exchangeable 3-color reinforcement matrices for weights ``w``.

    Family 0 is the i.i.d. case; 1-3 merge two colors into one block; 4 is
    the three-color Polya urn.
    """
    w1, w2, w3 = w
    wbar = w1 + w2 + w3
    wb1, wb2, wb3 = w2 + w3, w1 + w3, w1 + w2
    z = 0
    if family == 0:
        rows = [[mi * w1 / wbar, mi * w2 / wbar, mi * w3 / wbar] for mi in ms]
    elif family == 1:
        rows = [[m * w1 / wb3, m * w2 / wb3, z], [m * w1 / wb3, m * w2 / wb3, z], [z, z, m]]
    elif family == 2:
        rows = [[m * w1 / wb2, z, m * w3 / wb2], [z, m, z], [m * w1 / wb2, z, m * w3 / wb2]]
    elif family == 3:
        rows = [[m, z, z], [z, m * w2 / wb1, m * w3 / wb1], [z, m * w2 / wb1, m * w3 / wb1]]
    else:
        rows = [[m, z, z], [z, m, z], [z, z, m]]
    return make_model(1, list(w), rows, exact=exact)


K_COLOR_PARTITIONS = [None, [[0, 1], [2]], [[0, 2], [1]], [[0], [1, 2]], [[0], [1], [2]]]
