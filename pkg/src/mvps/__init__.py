"""Measure-valued Polya urn sequences on finite color spaces."""
from .kernels import (
    Partition,
    Verdict,
    balance_profile,
    classify,
    detect_partition,
    is_iid,
    normalize_model,
    symmetry_checks,
)
from .measure import UrnModel, load_model, make_model, normalize, tv_distance, validate_model
from .oracle import exchangeability_depth_check, joint_pmf, predictive_exact
from .rng import RngStream
from .samplers import beta_stick, dp_mixture_path, hybrid_example_path, sample_path, stick_breaking

__all__ = [
    "Partition",
    "RngStream",
    "UrnModel",
    "Verdict",
    "balance_profile",
    "beta_stick",
    "classify",
    "detect_partition",
    "dp_mixture_path",
    "exchangeability_depth_check",
    "hybrid_example_path",
    "is_iid",
    "joint_pmf",
    "load_model",
    "make_model",
    "normalize",
    "normalize_model",
    "predictive_exact",
    "sample_path",
    "stick_breaking",
    "symmetry_checks",
    "tv_distance",
    "validate_model",
]
