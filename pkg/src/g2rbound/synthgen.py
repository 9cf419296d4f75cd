"""Controllable real/synthetic scenario generators.

Two knobs stand in for the two experimental axes: ``gamma`` moves the
synthetic feature distribution away from the real one, ``rho`` makes the
synthetic labels disagree with the real labeling. At ``gamma = rho = 0``
both sides come from the same labeled distribution.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .core import (
    DatasetPair,
    HypothesisSpace,
    LabelingFunction,
    LookupTable,
    ProbTable,
    SampleSet,
    Threshold,
    apply_labeling,
    derive_seed,
    make_rng,
    sample,
)
from .errors import CapacityError, ValidationError
from .oracle import MAX_DOMAIN_SIZE, DiscreteInstance

KINDS = ("gaussian-pair", "discrete-instance", "overestimation")
KNOBS = ("gamma", "rho")

SIGMA = 1.0
# shift length at gamma = 1, in units of SIGMA
SHIFT = 2.0
SPACING = 2.0 * np.sqrt(2.0)
# fixed key for the per-component shift directions; independent of any run seed
_LAYOUT_KEY = 7_340_033
DISCRETE_SPACE_SIZE = 64
OVERESTIMATION_HALF = 8


@dataclass(frozen=True)
class ScenarioConfig:
    kind: str = "gaussian-pair"
    gamma: float = 0.0
    rho: float = 0.0
    n: int = 5_000
    m: int = 2_000
    dims: int = 8
    arity: int = 10
    seed: int = 0

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValidationError(f"kind must be one of {KINDS}, got {self.kind!r}")
        for knob in KNOBS:
            v = getattr(self, knob)
            if not 0.0 <= v <= 1.0:
                raise ValidationError(f"{knob} must lie in [0, 1], got {v}")
        if self.n < 1 or self.m < 1:
            raise ValidationError("n and m must be >= 1")
        if self.dims < 1:
            raise ValidationError("dims must be >= 1")
        if self.arity < 2:
            raise ValidationError("arity must be >= 2")
        if self.seed < 0:
            raise ValidationError("seed must be non-negative")


# ---------------------------------------------------------------------------
# Gaussian mixtures
# ---------------------------------------------------------------------------


def gaussian_means(arity: int, dims: int, sigma: float = SIGMA) -> np.ndarray:
    """Component means at ``+-s e_i``, ordered ``e_0..e_{d-1}, -e_0..``.

    ``s = 2 sqrt(2) sigma`` puts every pair of components at least ``4 sigma`` apart.
    """
    if arity > 2 * dims:
        raise ValidationError(f"cannot place {arity} well-separated means in {dims} dimensions")
    basis = np.concatenate([np.eye(dims), -np.eye(dims)])
    return SPACING * sigma * basis[:arity]


def shift_directions(arity: int, dims: int) -> np.ndarray:
    """Fixed unit direction per component along which the synthetic mean moves."""
    v = make_rng(_LAYOUT_KEY, arity, dims).normal(size=(arity, dims))
    return v / np.linalg.norm(v, axis=1, keepdims=True)


def bayes_labeling(means: np.ndarray, sigma: float = SIGMA, weights=None) -> LabelingFunction:
    """Posterior-argmax labeling of an isotropic Gaussian mixture."""
    means = np.asarray(means, dtype=np.float64)
    k = len(means)
    log_w = np.log(np.full(k, 1.0 / k) if weights is None else np.asarray(weights, dtype=np.float64))

    def rule(x):
        sq = ((np.asarray(x, dtype=np.float64)[:, None, :] - means[None]) ** 2).sum(axis=2)
        return np.argmax(log_w - sq / (2 * sigma**2), axis=1)

    return LabelingFunction(k, rule=rule)


def _balanced_labels(count: int, arity: int, rng) -> np.ndarray:
    return rng.permutation(np.arange(count) % arity)


def _gaussian_side(count, cfg, means, dirs, origin, split, key):
    rng = make_rng(cfg.seed, 10, key)
    y = _balanced_labels(count, cfg.arity, rng)
    if origin == "real":
        x = means[y] + SIGMA * rng.normal(size=(count, cfg.dims))
    else:
        center = means[y] + cfg.gamma * SHIFT * SIGMA * dirs[y]
        x = center + SIGMA * np.sqrt(1.0 + cfg.gamma) * rng.normal(size=(count, cfg.dims))
        # independent stream for label noise so rho does not perturb the features
        noise = make_rng(cfg.seed, 11, key)
        flip = noise.random(count) < cfg.rho
        offset = noise.integers(1, cfg.arity, count)
        y = np.where(flip, (y + offset) % cfg.arity, y)
    return SampleSet(x, y, origin, split)


def make_gaussian_pair(cfg: ScenarioConfig) -> DatasetPair:
    """Real side: balanced Gaussian mixture labeled by component of origin.

    Synthetic side: each component mean shifted by ``gamma * 2 sigma`` along
    a fixed direction, covariance scaled by ``1 + gamma``, and each label
    resampled from the other labels with probability ``rho``.
    """
    if cfg.kind != "gaussian-pair":
        raise ValidationError("make_gaussian_pair needs kind = 'gaussian-pair'")
    means = gaussian_means(cfg.arity, cfg.dims)
    dirs = shift_directions(cfg.arity, cfg.dims)
    return DatasetPair(
        real_train=_gaussian_side(cfg.n, cfg, means, dirs, "real", "train", 0),
        real_test=_gaussian_side(cfg.m, cfg, means, dirs, "real", "test", 1),
        synth_train=_gaussian_side(cfg.n, cfg, means, dirs, "synthetic", "train", 2),
        synth_test=_gaussian_side(cfg.m, cfg, means, dirs, "synthetic", "test", 3),
    )


# ---------------------------------------------------------------------------
# discrete worlds
# ---------------------------------------------------------------------------


def sample_pair(inst: DiscreteInstance, n: int, m: int, seed: int) -> DatasetPair:
    """Train/test samples from both sides of a discrete instance."""
    def draw(dist, f, count, origin, split, key):
        return apply_labeling(f, sample(dist, count, derive_seed(seed, 30, key), origin, split))

    return DatasetPair(
        real_train=draw(inst.dist_r, inst.f_r, n, "real", "train", 0),
        real_test=draw(inst.dist_r, inst.f_r, m, "real", "test", 1),
        synth_train=draw(inst.dist_g, inst.f_g, n, "synthetic", "train", 2),
        synth_test=draw(inst.dist_g, inst.f_g, m, "synthetic", "test", 3),
    )


def make_discrete_instance(cfg: ScenarioConfig) -> tuple[DiscreteInstance, DatasetPair]:
    """Random finite world with ``K = cfg.dims`` points.

    ``dist_g = (1 - gamma) dist_r + gamma T`` for a random table ``T``; each
    synthetic label differs from the real one with probability ``rho``. All
    random draws happen before the knobs are applied, so for a fixed seed
    the knobs are the only thing that changes.
    """
    if cfg.kind != "discrete-instance":
        raise ValidationError("make_discrete_instance needs kind = 'discrete-instance'")
    k, arity = cfg.dims, cfg.arity
    if k > MAX_DOMAIN_SIZE:
        raise CapacityError(f"domain size {k} exceeds {MAX_DOMAIN_SIZE}")
    rng = make_rng(cfg.seed, 20)
    dist_r = ProbTable.normalized(rng.dirichlet(np.ones(k)))
    other = ProbTable.normalized(rng.dirichlet(np.ones(k)))
    f_r = rng.integers(0, arity, k)
    flip_u = rng.random(k)
    flip_off = rng.integers(1, arity, k)
    tables = rng.integers(0, arity, (DISCRETE_SPACE_SIZE - 2, k))

    dist_g = ProbTable((1.0 - cfg.gamma) * dist_r.mass + cfg.gamma * other.mass)
    f_g = np.where(flip_u < cfg.rho, (f_r + flip_off) % arity, f_r)
    members = [LookupTable(np.zeros(k, np.int64), arity), LookupTable(f_r, arity)]
    members += [LookupTable(t, arity) for t in tables]
    inst = DiscreteInstance(
        dist_r, dist_g,
        LabelingFunction(arity, table=f_r), LabelingFunction(arity, table=f_g),
        HypothesisSpace.finite(members, arity, domain_size=k),
    )
    return inst, sample_pair(inst, cfg.n, cfg.m, derive_seed(cfg.seed, 21))


def make_overestimation_instance(seed: int, half: int = OVERESTIMATION_HALF) -> DiscreteInstance:
    """Disjoint supports with one labeling pattern repeated on both halves.

    Real mass lives on ``0..half-1``, synthetic mass on ``half..2*half-1``.
    The space holds every threshold (``t = half`` separates the supports,
    ``t = 2*half`` is constant 0) plus the repeated pattern itself.
    """
    rng = make_rng(seed, 40)
    k = 2 * half
    pattern = rng.integers(0, 2, half)
    pattern[0], pattern[-1] = 0, 1
    f = np.tile(pattern, 2)
    r = np.zeros(k)
    g = np.zeros(k)
    r[:half] = rng.dirichlet(np.ones(half))
    g[half:] = rng.dirichlet(np.ones(half))
    members = [Threshold(t) for t in range(k + 1)] + [LookupTable(f, 2)]
    return DiscreteInstance(
        ProbTable.normalized(r), ProbTable.normalized(g),
        LabelingFunction(2, table=f), LabelingFunction(2, table=f),
        HypothesisSpace.finite(members, 2, domain_size=k),
    )


def sweep(base: ScenarioConfig, knob: str, values: Sequence[float], seeds: Sequence[int]) -> list[ScenarioConfig]:
    """Value-major Cartesian product of knob values and seeds."""
    if knob not in KNOBS:
        raise ValidationError(f"knob must be one of {KNOBS}, got {knob!r}")
    if len(values) == 0:
        raise ValidationError("sweep needs at least one value")
    if len(seeds) == 0:
        raise ValidationError("sweep needs at least one seed")
    for v in values:
        if not 0.0 <= v <= 1.0:
            raise ValidationError(f"{knob} value {v} outside [0, 1]")
    return [dataclasses.replace(base, **{knob: float(v), "seed": int(s)}) for v in values for s in seeds]


def make_fuzz_instance(seed: int, max_domain: int = 12, max_space: int = 256) -> DiscreteInstance:
    """Small random world for property fuzzing: ``K <= max_domain``, ``|H| <= max_space``.

    Binary or ternary labels; binary spaces always contain constant 0, and
    about a third of binary draws use the full threshold family instead of
    random tables.
    """
    rng = make_rng(seed, 60)
    k = int(rng.integers(2, max_domain + 1))
    arity = int(rng.choice([2, 2, 3]))

    def table():
        w = rng.dirichlet(np.ones(k)) * (rng.random(k) < 0.8)
        if w.sum() == 0:
            w[rng.integers(k)] = 1.0
        return ProbTable.normalized(w)

    dist_r, dist_g = table(), table()
    f_r = rng.integers(0, arity, k)
    f_g = np.where(rng.random(k) < rng.random(), rng.integers(0, arity, k), f_r)
    if arity == 2 and rng.random() < 1 / 3:
        space = HypothesisSpace.thresholds_1d(k)
    else:
        size = int(rng.integers(2, max_space + 1))
        tables = rng.integers(0, arity, (size - 1, k))
        members = [LookupTable(np.zeros(k, np.int64), arity)] + [LookupTable(t, arity) for t in tables]
        space = HypothesisSpace.finite(members, arity, domain_size=k)
    return DiscreteInstance(dist_r, dist_g, LabelingFunction(arity, table=f_r),
                            LabelingFunction(arity, table=f_g), space)
