import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from otmtr import geometry, metrics
from otmtr.metrics import evaluate, mse, signed_emd, signed_pr_auc

import oracles


@pytest.fixture(scope="module")
def cost_5x5():
    return geometry.build_geodesic_costs(geometry.grid_mesh(5, 5, spacing=1.0))


def _sparse_truth(p=20, idx=(2, 7, 11), vals=(25.0, 22.0, 28.0)):
    x = np.zeros(p)
    x[list(idx)] = vals
    return x


def test_auc_perfect_ranking():
    truth = _sparse_truth()
    assert signed_pr_auc(truth, truth) == 1.0


def test_auc_zero_estimate_base_rate():
    truth = _sparse_truth()
    assert signed_pr_auc(np.zeros(20), truth) == pytest.approx(3 / 20)
    assert signed_pr_auc(np.zeros(20), truth) == pytest.approx(
        oracles.pr_auc_bruteforce(np.zeros(20), truth > 0))


def test_auc_sign_flip_degenerate_half():
    truth = _sparse_truth()
    flipped = -truth
    # the positive half scores at chance, the negative half is skipped
    assert signed_pr_auc(flipped, truth) == pytest.approx(
        oracles.pr_auc_bruteforce(np.zeros(20), truth > 0))


def test_auc_matches_bruteforce_random():
    rng = np.random.default_rng(1)
    for _ in range(25):
        p = 30
        est = rng.standard_normal(p) * (rng.random(p) < 0.6)
        truth = np.zeros(p)
        truth[rng.choice(p, 5, replace=False)] = (
            rng.uniform(20, 30, 5) * rng.choice([-1, 1], 5))
        halves = []
        for sign in (1.0, -1.0):
            pos = np.maximum(sign * truth, 0) > 0
            if pos.any():
                halves.append(oracles.pr_auc_bruteforce(np.maximum(sign * est, 0), pos))
        assert signed_pr_auc(est, truth) == pytest.approx(np.mean(halves))


def test_auc_nan_when_truth_empty():
    assert np.isnan(signed_pr_auc(np.ones(4), np.zeros(4)))


@given(st.floats(min_value=0.1, max_value=10.0),
       st.floats(min_value=0.0, max_value=5.0))
@settings(max_examples=20, deadline=None)
def test_auc_invariant_under_monotone_rescaling(scale, shift):
    rng = np.random.default_rng(0)
    est = rng.standard_normal(20)
    truth = _sparse_truth()
    rescaled = np.sign(est) * (scale * np.abs(est) ** 1.5 + shift * (est != 0))
    assert signed_pr_auc(rescaled, truth) == pytest.approx(
        signed_pr_auc(est, truth))


def test_emd_identity_and_symmetry(cost_5x5):
    a = np.zeros(25)
    a[[3, 8]] = [24.0, -21.0]
    b = np.zeros(25)
    b[[5, 17]] = [20.0, -26.0]
    assert signed_emd(a, a, cost_5x5) == 0.0
    assert signed_emd(a, b, cost_5x5) == pytest.approx(
        signed_emd(b, a, cost_5x5), abs=1e-12)


def test_emd_single_displaced_source(cost_5x5):
    a = np.zeros(25)
    a[3] = 24.0
    b = np.zeros(25)
    b[17] = 29.0
    assert signed_emd(a, b, cost_5x5) == pytest.approx(0.5 * cost_5x5[3, 17])


def test_emd_empty_part_conventions(cost_5x5):
    worst = cost_5x5.max()
    a = np.zeros(25)
    a[2] = 10.0   # positive only
    b = np.zeros(25)
    b[2] = 10.0
    b[4] = -3.0   # negative part present only in truth
    # positive halves match exactly (0); negative half has one empty side
    assert signed_emd(a, b, cost_5x5) == pytest.approx(0.5 * worst)
    assert signed_emd(np.zeros(25), np.zeros(25), cost_5x5) == 0.0


def test_emd_matches_lp_oracle(cost_5x5):
    rng = np.random.default_rng(5)
    for _ in range(5):
        est = np.zeros(25)
        est[rng.choice(25, 5, replace=False)] = rng.uniform(1, 5, 5) * rng.choice([-1, 1], 5)
        truth = np.zeros(25)
        truth[rng.choice(25, 4, replace=False)] = rng.uniform(20, 30, 4) * rng.choice([-1, 1], 4)
        halves = []
        for sign in (1.0, -1.0):
            a = np.maximum(sign * est, 0)
            b = np.maximum(sign * truth, 0)
            if a.sum() == 0 and b.sum() == 0:
                halves.append(0.0)
            elif a.sum() == 0 or b.sum() == 0:
                halves.append(cost_5x5.max())
            else:
                ia, ib = np.flatnonzero(a), np.flatnonzero(b)
                halves.append(oracles.kantorovich_lp_oracle(
                    a[ia] / a.sum(), b[ib] / b.sum(),
                    cost_5x5[np.ix_(ia, ib)]))
        assert signed_emd(est, truth, cost_5x5) == pytest.approx(
            np.mean(halves), abs=1e-9)


def test_mse_values():
    assert mse(np.array([1.0, 2.0]), np.array([1.0, 2.0])) == 0.0
    x = np.arange(4, dtype=float)
    assert mse(x + 3.0, x) == pytest.approx(9.0)
    assert mse(np.array([3.0, 4.0]), np.zeros(2)) == pytest.approx(12.5)


def test_evaluate_means(cost_5x5):
    truths = [_sparse_truth(25, (1, 6), (25.0, -22.0)),
              _sparse_truth(25, (2, 9), (21.0, -27.0))]
    report = evaluate(truths, truths, cost_5x5)
    assert report.auc == 1.0
    assert report.emd == 0.0
    assert report.mse == 0.0
    assert len(report.per_subject) == 2
