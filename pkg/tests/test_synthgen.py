import dataclasses

import numpy as np
import pytest
from scipy.stats import spearmanr

from g2rbound.core import HypothesisSpace
from g2rbound.errors import CapacityError, ValidationError
from g2rbound.oracle import exact_bounds, exact_d_HdH, exact_joint_opt, exact_risk
from g2rbound.synthgen import (
    SHIFT,
    SIGMA,
    ScenarioConfig,
    gaussian_means,
    make_discrete_instance,
    make_gaussian_pair,
    make_overestimation_instance,
    shift_directions,
    sweep,
)

GAUSS = ScenarioConfig("gaussian-pair", n=400, m=200, dims=8, arity=10)
DISC = ScenarioConfig("discrete-instance", n=100, m=100, dims=16, arity=3)


class TestConfig:
    @pytest.mark.parametrize("bad", [{"gamma": -0.1}, {"rho": 1.5}, {"n": 0}, {"kind": "gan"}, {"arity": 1}])
    def test_invalid(self, bad):
        with pytest.raises(ValidationError):
            dataclasses.replace(GAUSS, **bad)


class TestGaussianPair:
    def test_means_separated(self):
        mu = gaussian_means(10, 8)
        gaps = np.linalg.norm(mu[:, None] - mu[None], axis=2)[~np.eye(10, dtype=bool)]
        assert gaps.min() >= 4 * SIGMA - 1e-12

    def test_layout_is_fixed(self):
        assert np.array_equal(shift_directions(10, 8), shift_directions(10, 8))
        assert np.allclose(np.linalg.norm(shift_directions(10, 8), axis=1), 1.0)

    def test_too_many_classes(self):
        with pytest.raises(ValidationError):
            gaussian_means(5, 2)

    def test_deterministic(self):
        a, b = make_gaussian_pair(GAUSS), make_gaussian_pair(GAUSS)
        assert np.array_equal(a.synth_train.features, b.synth_train.features)
        assert np.array_equal(a.synth_test.labels, b.synth_test.labels)

    def test_permutation_null_at_zero_knobs(self):
        # statistic: squared norm of the mean difference over features plus one-hot labels
        def stat(a, b):
            return float(np.sum((a.mean(axis=0) - b.mean(axis=0)) ** 2))

        accepted = 0
        for seed in range(100):
            data = make_gaussian_pair(dataclasses.replace(GAUSS, n=200, seed=seed))
            eye = np.eye(GAUSS.arity)
            r = np.hstack([data.real_train.features, eye[data.real_train.labels]])
            g = np.hstack([data.synth_train.features, eye[data.synth_train.labels]])
            pooled = np.vstack([r, g])
            observed = stat(r, g)
            rng = np.random.default_rng(seed)
            count = 0
            for _ in range(199):
                p = rng.permutation(len(pooled))
                count += stat(pooled[p[:200]], pooled[p[200:]]) >= observed
            accepted += (count + 1) / 200 > 0.05
        assert accepted >= 90

    def test_rho_one_binary_flips_everything(self):
        cfg = dataclasses.replace(GAUSS, arity=2, rho=1.0)
        clean = make_gaussian_pair(dataclasses.replace(cfg, rho=0.0))
        noisy = make_gaussian_pair(cfg)
        assert np.array_equal(noisy.synth_train.labels, 1 - clean.synth_train.labels)
        assert np.array_equal(noisy.synth_train.features, clean.synth_train.features)
        assert np.array_equal(noisy.real_train.labels, clean.real_train.labels)

    def test_rho_resamples_other_labels(self):
        clean = make_gaussian_pair(GAUSS)
        noisy = make_gaussian_pair(dataclasses.replace(GAUSS, rho=1.0))
        assert np.all(noisy.synth_train.labels != clean.synth_train.labels)

    def test_gamma_one_displacement(self):
        cfg = dataclasses.replace(GAUSS, gamma=1.0, n=20_000)
        data = make_gaussian_pair(cfg)
        mu = gaussian_means(cfg.arity, cfg.dims)
        x, y = data.synth_train.features, data.synth_train.labels
        for c in range(cfg.arity):
            pts = x[y == c]
            disp = np.linalg.norm(pts.mean(axis=0) - mu[c])
            # standard error of the displacement along its direction
            se = SIGMA * np.sqrt(2.0) / np.sqrt(len(pts))
            assert abs(disp - SHIFT * SIGMA) <= 3 * se + SIGMA * np.sqrt(2.0 * cfg.dims / len(pts))
            along = (pts.mean(axis=0) - mu[c]) @ shift_directions(cfg.arity, cfg.dims)[c]
            assert abs(along - SHIFT * SIGMA) <= 3 * se

    def test_real_balance(self):
        for n in (400, 1003, 5000):
            data = make_gaussian_pair(dataclasses.replace(GAUSS, n=n))
            counts = np.bincount(data.real_train.labels, minlength=GAUSS.arity)
            assert np.all(np.abs(counts - n / GAUSS.arity) <= 1)

    def test_wrong_kind(self):
        with pytest.raises(ValidationError):
            make_gaussian_pair(DISC)


class TestDiscreteInstance:
    def test_gamma_zero(self):
        inst, _ = make_discrete_instance(DISC)
        assert np.array_equal(inst.dist_g.mass, inst.dist_r.mass)
        assert exact_d_HdH(inst.space, inst.dist_g, inst.dist_r) == 0.0

    def test_rho_zero(self):
        inst, _ = make_discrete_instance(dataclasses.replace(DISC, gamma=0.7))
        assert np.array_equal(inst.f_g.table, inst.f_r.table)

    def test_rho_one_changes_every_label(self):
        inst, _ = make_discrete_instance(dataclasses.replace(DISC, rho=1.0))
        assert np.all(inst.f_g.table != inst.f_r.table)

    def test_capacity(self):
        with pytest.raises(CapacityError):
            make_discrete_instance(dataclasses.replace(DISC, dims=5000))

    def test_sizes(self):
        _, data = make_discrete_instance(DISC)
        assert (data.n, data.m) == (DISC.n, DISC.m)

    def test_lambda_monotone_in_rho(self):
        values = np.linspace(0, 1, 11)
        means = []
        for v in values:
            acc = []
            for s in range(50):
                inst, _ = make_discrete_instance(dataclasses.replace(DISC, gamma=0.3, rho=float(v), seed=s))
                acc.append(exact_joint_opt(inst.space, inst)[1])
            means.append(np.mean(acc))
        assert spearmanr(values, means)[0] >= 0.9

    def test_half_dHdH_monotone_in_gamma(self):
        values = np.linspace(0, 1, 11)
        means = []
        for v in values:
            acc = []
            for s in range(50):
                inst, _ = make_discrete_instance(dataclasses.replace(DISC, gamma=float(v), rho=0.2, seed=s))
                acc.append(0.5 * exact_d_HdH(inst.space, inst.dist_g, inst.dist_r))
            means.append(np.mean(acc))
        assert spearmanr(values, means)[0] >= 0.9


class TestOverestimation:
    @pytest.mark.parametrize("seed", range(5))
    def test_supremum_is_two(self, seed):
        inst = make_overestimation_instance(seed)
        assert exact_d_HdH(inst.space, inst.dist_g, inst.dist_r) == 2.0

    def test_pattern_hypothesis_is_perfect(self):
        inst = make_overestimation_instance(0)
        h = inst.space.members[-1]
        assert exact_risk(h, inst.f_r, inst.dist_r) == 0.0
        assert exact_risk(h, inst.f_g, inst.dist_g) == 0.0
        rep = exact_bounds(inst, h)
        assert rep.b_g2r == 0.0 and rep.b_da == 1.0

    def test_space_contents(self):
        inst = make_overestimation_instance(3)
        preds = inst.space.prediction_matrix(np.arange(inst.domain_size))
        assert any(np.all(p == 0) for p in preds)
        half = inst.domain_size // 2
        separator = np.r_[np.zeros(half, int), np.ones(half, int)]
        assert any(np.array_equal(p, separator) for p in preds)


class TestSweep:
    def test_single(self):
        out = sweep(GAUSS, "gamma", [0.5], [7])
        assert len(out) == 1 and out[0].gamma == 0.5 and out[0].seed == 7

    def test_value_major(self):
        values = list(np.linspace(0, 1, 8))
        out = sweep(GAUSS, "rho", values, range(5))
        assert len(out) == 40
        assert [(c.rho, c.seed) for c in out] == [(float(v), s) for v in values for s in range(5)]
        assert all(c.n == GAUSS.n and c.dims == GAUSS.dims for c in out)

    def test_deterministic(self):
        assert sweep(DISC, "gamma", [0.1, 0.9], [1, 2]) == sweep(DISC, "gamma", [0.1, 0.9], [1, 2])

    @pytest.mark.parametrize("args", [("gamma", [1.2], [0]), ("alpha", [0.1], [0]), ("rho", [], [0])])
    def test_invalid(self, args):
        with pytest.raises(ValidationError):
            sweep(GAUSS, *args)


def test_thresholds_space_fits_overestimation_domain():
    assert len(HypothesisSpace.thresholds_1d(16)) == 17
