"""Monte Carlo checks of the limit behaviour of exchangeable MVPSs.

Stochastic statistics pass when they sit within ``NSE`` estimated standard
errors of their target. Non-stochastic ones (zero standard error) must
match to ``ATOL``.
"""
from __future__ import annotations

import csv
import io
import json
import math
import time
from dataclasses import asdict, dataclass, field

import numpy as np

from .kernels import IID, NOT_EXCHANGEABLE, Partition, Verdict, classify
from .measure import ATOL, UrnModel, conditional, to_jsonable, tv_distance
from .oracle import DEFAULT_BUDGET, exchangeability_depth_check
from .rng import RngStream
from .samplers import MissingPartition, hybrid_paths, sample_counts, sample_paths, stick_breaking

NSE = 4.0
TV_DELTA = 0.02
TV_FINAL = 0.01
IID_TV_TOL = 1e-12


@dataclass
class StatRecord:
    name: str
    observed: float
    target: float
    tolerance: float
    passed: bool
    se: float | None = None


@dataclass
class ExperimentReport:
    name: str
    parameters: dict
    seed: int
    statistics: list[StatRecord] = field(default_factory=list)
    runtime: float = 0.0
    notes: list[str] = field(default_factory=list)
    extra: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return all(s.passed for s in self.statistics)

    def add(self, name, observed, target, tolerance, se=None) -> StatRecord:
        observed, target = float(observed), float(target)
        rec = StatRecord(
            name=name,
            observed=observed,
            target=target,
            tolerance=float(tolerance),
            passed=bool(abs(observed - target) <= tolerance),
            se=None if se is None else float(se),
        )
        self.statistics.append(rec)
        return rec

    def band(self, name, observed, target, se, nse=NSE) -> StatRecord:
        tol = nse * se if se > 0 else ATOL
        return self.add(name, observed, target, tol, se=se)

    def stat(self, name) -> StatRecord:
        for s in self.statistics:
            if s.name == name:
                return s
        raise KeyError(name)

    def to_dict(self) -> dict:
        out = asdict(self)
        out["passed"] = self.passed
        return _plain(out)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)

    def csv_rows(self) -> list[list]:
        return [
            [self.name, s.name, s.observed, s.target, s.tolerance, s.se, s.passed]
            for s in self.statistics
        ]


CSV_HEADER = ["experiment", "statistic", "observed", "target", "tolerance", "se", "passed"]


def reports_to_csv(reports) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_HEADER)
    for r in reports:
        writer.writerows(r.csv_rows())
    return buf.getvalue()


def _plain(obj):
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_plain(v) for v in obj.tolist()]
    if isinstance(obj, float) and not math.isfinite(obj):
        return str(obj)
    return to_jsonable(obj)


def moments(x) -> dict:
    """Sample mean and variance with their standard errors."""
    x = np.asarray(x, dtype=float)
    n = len(x)
    mean = math.fsum(x) / n
    dev = x - mean
    var = math.fsum(dev**2) / (n - 1)
    m2 = math.fsum(dev**2) / n
    m4 = math.fsum(dev**4) / n
    return {
        "mean": mean,
        "var": var,
        "se_mean": math.sqrt(var / n),
        "se_var": math.sqrt(max(m4 - m2 * m2, 0.0) / n),
    }


def dirichlet_block_targets(theta_over_m: float, nu, partition) -> list[tuple[float, float]]:
    """Mean and variance of each block's mass under ``Dir(theta/m * nu(D_k))``."""
    nu = np.asarray(nu, dtype=float)
    blocks = partition.blocks if isinstance(partition, Partition) else partition
    out = []
    for b in blocks:
        a = float(nu[list(b)].sum())
        var = 0.0 if math.isinf(theta_over_m) else a * (1 - a) / (theta_over_m + 1)
        out.append((a, var))
    return out


def frequency_variance(a: float, theta_over_m: float, length: int) -> float:
    """Variance of a block's empirical frequency after ``length`` draws.

    Given the directing measure the draws are i.i.d., so the limit variance
    picks up a binomial term ``E[P(1 - P)] / length``.
    """
    if math.isinf(theta_over_m):
        return a * (1 - a) / length
    c = theta_over_m
    return a * (1 - a) / (c + 1) * (1 + c / length)


def _cells(model: UrnModel, verdict: Verdict):
    """Blocks to track and the concentration for their targets."""
    if verdict.kind == NOT_EXCHANGEABLE or verdict.partition is None:
        raise MissingPartition(f"model is {verdict.kind}; limit theorems do not apply")
    if verdict.kind == IID:
        live = verdict.partition.blocks[0]
        return Partition.of([[i] for i in live]), math.inf
    return verdict.partition, float(model.theta) / float(verdict.m)


def _block_label(model: UrnModel, cells: Partition, k: int) -> str:
    return "{" + ",".join(model.colors[i] for i in cells.blocks[k]) + "}"


def limit_frequency_experiment(
    model: UrnModel, runs: int, length: int, seed: int, verdict: Verdict | None = None
) -> ExperimentReport:
    """Moments of block frequencies at ``length`` against Dirichlet targets."""
    t0 = time.perf_counter()
    verdict = verdict or classify(model)
    cells, c = _cells(model, verdict)
    fm = model.as_float()
    report = ExperimentReport(
        "limit_frequency",
        {"runs": runs, "length": length, "theta_over_m": c, "kind": verdict.kind},
        seed,
    )
    counts = sample_counts(model, length, runs, RngStream(seed))
    limits = dirichlet_block_targets(c, fm.nu, cells)
    for k, block in enumerate(cells.blocks):
        freq = counts[:, list(block)].sum(axis=1) / length
        mo = moments(freq)
        a, limit_var = limits[k]
        label = _block_label(model, cells, k)
        report.band(f"freq{label}.mean", mo["mean"], a, mo["se_mean"])
        report.band(f"freq{label}.var", mo["var"], frequency_variance(a, c, length), mo["se_var"])
        report.extra[f"freq{label}.limit_var"] = limit_var
    report.notes.append("variance targets include the finite-length binomial term")
    report.runtime = time.perf_counter() - t0
    return report


def _plugin_limit(fm: UrnModel, partition: Partition, counts: np.ndarray) -> np.ndarray:
    total = counts.sum()
    out = np.zeros(fm.k)
    for block in partition.blocks:
        out += counts[list(block)].sum() / total * conditional(fm.nu, block)
    return out


def _block_marginal(p, partition: Partition) -> np.ndarray:
    return np.array([p[list(b)].sum() for b in partition.blocks])


def tv_convergence_experiment(
    model: UrnModel,
    length: int,
    checkpoints,
    seed: int,
    settle_step: int | None = None,
    delta: float = TV_DELTA,
    final_tol: float = TV_FINAL,
    verdict: Verdict | None = None,
) -> ExperimentReport:
    """TV distance from the predictive at each checkpoint to the path's own limit.

    The limit is the plug-in ``sum_k freq_k nu(. | D_k)`` built from block
    frequencies at the final step. Checkpoints at or after ``settle_step``
    must be below ``delta``; the last one below ``final_tol``. For i.i.d.
    models every checkpoint must be zero up to rounding.
    """
    t0 = time.perf_counter()
    verdict = verdict or classify(model)
    if verdict.kind == NOT_EXCHANGEABLE or verdict.partition is None:
        raise MissingPartition(f"model is {verdict.kind}; no block partition available")
    partition = verdict.partition
    checkpoints = sorted(int(t) for t in checkpoints)
    if not checkpoints or checkpoints[0] < 1 or checkpoints[-1] > length:
        raise ValueError("checkpoints must lie in [1, length]")
    if settle_step is None:
        settle_step = length // 2
    fm = model.as_float()
    report = ExperimentReport(
        "tv_convergence",
        {
            "length": length,
            "checkpoints": checkpoints,
            "settle_step": settle_step,
            "delta": delta,
            "final_tol": final_tol,
            "kind": verdict.kind,
        },
        seed,
    )
    path = sample_paths(model, length, 1, RngStream(seed))[0]
    masses = fm.kernel.sum(axis=1)
    limit = _plugin_limit(fm, partition, np.bincount(path, minlength=fm.k))
    limit_blocks = _block_marginal(limit, partition)

    trace = []
    identity_gap = 0.0
    for t in checkpoints:
        counts = np.bincount(path[:t], minlength=fm.k)
        pred = (fm.theta * fm.nu + counts @ fm.kernel) / (fm.theta + counts @ masses)
        tv = float(tv_distance(pred, limit))
        block_tv = float(tv_distance(_block_marginal(pred, partition), limit_blocks))
        identity_gap = max(identity_gap, abs(tv - block_tv))
        trace.append(tv)
        if verdict.kind == IID:
            report.add(f"tv@{t}", tv, 0.0, IID_TV_TOL)
        elif t == checkpoints[-1]:
            report.add(f"tv@{t}", tv, 0.0, final_tol)
        elif t >= settle_step:
            report.add(f"tv@{t}", tv, 0.0, delta)
    report.add("block_tv_identity", identity_gap, 0.0, IID_TV_TOL)
    report.extra["trace"] = dict(zip(checkpoints, trace))
    report.notes.append(
        f"thresholds {delta} / {final_tol} are engineering defaults; no rate is known"
    )
    report.runtime = time.perf_counter() - t0
    return report


def stickbreaking_vs_frequency_test(
    model: UrnModel,
    draws: int,
    runs: int,
    length: int,
    seed: int,
    eps: float = 1e-8,
    verdict: Verdict | None = None,
) -> ExperimentReport:
    """Compare block-mass moments of stick-breaking draws and long-run frequencies.

    Stick draws use stream 1 of ``seed``, paths use stream 2.
    """
    t0 = time.perf_counter()
    verdict = verdict or classify(model)
    cells, c = _cells(model, verdict)
    stick_c = c if math.isfinite(c) else float(model.theta) / float(verdict.m or 1)
    fm = model.as_float()
    report = ExperimentReport(
        "stickbreaking_vs_frequency",
        {"draws": draws, "runs": runs, "length": length, "eps": eps, "theta_over_m": c},
        seed,
    )
    rng = RngStream(seed, stream=1)
    sticks = np.array(
        [
            _block_marginal(stick_breaking(stick_c, model, eps, rng).composite, cells)
            for _ in range(draws)
        ]
    )
    counts = sample_counts(model, length, runs, RngStream(seed, stream=2))
    limits = dirichlet_block_targets(c, fm.nu, cells)
    for k, block in enumerate(cells.blocks):
        label = _block_label(model, cells, k)
        a, limit_var = limits[k]
        finite_var = frequency_variance(a, c, length)
        sb = moments(sticks[:, k])
        fr = moments(counts[:, list(block)].sum(axis=1) / length)
        report.band(f"stick{label}.mean", sb["mean"], a, sb["se_mean"])
        report.band(f"stick{label}.var", sb["var"], limit_var, sb["se_var"])
        report.band(f"freq{label}.mean", fr["mean"], a, fr["se_mean"])
        report.band(f"freq{label}.var", fr["var"], finite_var, fr["se_var"])
        report.band(
            f"diff{label}.mean",
            sb["mean"] - fr["mean"],
            0.0,
            math.hypot(sb["se_mean"], fr["se_mean"]),
        )
        report.band(
            f"diff{label}.var",
            sb["var"] - fr["var"],
            limit_var - finite_var,
            math.hypot(sb["se_var"], fr["se_var"]),
        )
    report.runtime = time.perf_counter() - t0
    return report


def singular_structure_experiment(
    theta: float, s: float, length: int, runs: int, seed: int
) -> ExperimentReport:
    """Atom placement and the law of the mass in ``S = [0, s)`` for the hybrid example."""
    t0 = time.perf_counter()
    report = ExperimentReport(
        "singular_structure", {"theta": theta, "s": s, "length": length, "runs": runs}, seed
    )
    values = hybrid_paths(theta, s, length, runs, RngStream(seed))
    repeated_outside = 0
    surplus_outside = 0
    repeated_inside = 0
    for row in values:
        srt = np.sort(row)
        dup = srt[1:][srt[1:] == srt[:-1]]
        distinct_dup = np.unique(dup)
        repeated_outside += int(np.sum(distinct_dup >= s))
        repeated_inside += int(np.sum(distinct_dup < s))
        tail = srt[srt >= s]
        surplus_outside += len(tail) - len(np.unique(tail))
    report.add("repeated_values_outside_S", repeated_outside, 0, 0)
    report.add("exact_repeats_in_complement", surplus_outside, 0, 0)
    report.extra["repeated_values_inside_S"] = repeated_inside

    frac = np.mean(values < s, axis=1)
    mo = moments(frac)
    report.band("frac_S.mean", mo["mean"], s, mo["se_mean"])
    report.band("frac_S.var", mo["var"], frequency_variance(s, theta, length), mo["se_var"])
    report.extra["frac_S.limit_var"] = s * (1 - s) / (theta + 1)
    report.runtime = time.perf_counter() - t0
    return report


def oracle_agreement_report(
    model: UrnModel, verdict: Verdict, depth: int = 4, budget: int = DEFAULT_BUDGET
) -> ExperimentReport:
    """Cross-check the classifier against exact enumeration."""
    t0 = time.perf_counter()
    depth = max(1, min(depth, int(math.log(budget) / math.log(model.k)) if model.k > 1 else depth))
    oracle = exchangeability_depth_check(model, depth, budget=budget)
    report = ExperimentReport("oracle_agreement", {"depth": depth, "kind": verdict.kind}, 0)
    expected = 0.0 if verdict.kind == NOT_EXCHANGEABLE else 1.0
    report.add("oracle_pass", float(oracle.passed), expected, 0)
    report.extra["oracle"] = oracle.to_dict(model)
    report.runtime = time.perf_counter() - t0
    return report


SUITES = {
    "quick": {"runs": 1000, "length": 500, "tv_length": 4000, "draws": 1000, "depth": 3},
    "full": {"runs": 4000, "length": 2000, "tv_length": 10000, "draws": 4000, "depth": 4},
}


def run_suite(model: UrnModel, suite: str = "full", seed: int = 0, executor=None) -> list:
    """Every applicable experiment for ``model``; one report each."""
    cfg = SUITES[suite]
    verdict = classify(model)
    jobs = [lambda: oracle_agreement_report(model, verdict, cfg["depth"])]
    if verdict.kind != NOT_EXCHANGEABLE:
        L = cfg["tv_length"]
        checkpoints = sorted({max(1, L // d) for d in (100, 20, 10, 4, 2)} | {3 * L // 4, L})
        jobs += [
            lambda: limit_frequency_experiment(
                model, cfg["runs"], cfg["length"], seed, verdict=verdict
            ),
            lambda: tv_convergence_experiment(model, L, checkpoints, seed, verdict=verdict),
            lambda: stickbreaking_vs_frequency_test(
                model, cfg["draws"], cfg["runs"], cfg["length"], seed, verdict=verdict
            ),
        ]
    if executor is None:
        return [job() for job in jobs]
    return [f.result() for f in [executor.submit(job) for job in jobs]]
