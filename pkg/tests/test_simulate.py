import numpy as np
import pytest
from scipy import stats

from otmtr import simulate
from otmtr.simulate import (MultiSubjectDataset, SimConfig, SimulationError,
                            add_noise, generate_leadfields, generate_sources,
                            load_dataset, make_dataset, save_dataset)


def _config(**kw):
    base = dict(n_subjects=4, n_sensors=20, n_sources=48, q_active=2,
                snr=4.0, seed=1)
    base.update(kw)
    return SimConfig(**base)


def test_shared_leadfield_identical(small_grid):
    cfg = _config(shared_leadfield=True)
    Ls = generate_leadfields(cfg, small_grid)
    assert all(L is Ls[0] for L in Ls)


def test_leadfields_deterministic(small_grid):
    a = generate_leadfields(_config(), small_grid)
    b = generate_leadfields(_config(), small_grid)
    for La, Lb in zip(a, b):
        assert np.array_equal(La, Lb)


def test_leadfield_columns_unit_norm(small_grid):
    Ls = generate_leadfields(_config(), small_grid)
    for L in Ls:
        assert np.allclose(np.linalg.norm(L, axis=0), 1.0)


def test_leadfield_column_correlation_decays(small_grid):
    L = generate_leadfields(_config(shared_leadfield=True), small_grid)[0]
    M = small_grid.cost
    rng = np.random.default_rng(0)
    cors, dists = [], []
    p = M.shape[0]
    for _ in range(300):
        i, j = rng.integers(0, p, 2)
        if i == j:
            continue
        cors.append(float(L[:, i] @ L[:, j]))
        dists.append(M[i, j])
    rank = stats.spearmanr(dists, cors).statistic
    assert rank < -0.2


def test_sources_respect_labels_and_sparsity(small_grid):
    cfg = _config()
    truth = generate_sources(cfg, small_grid.labels)
    labels = small_grid.labels
    active_labels = set(int(v) for v in truth.active_labels)
    for x in truth.sources:
        nz = np.flatnonzero(x)
        assert len(nz) == cfg.q_active
        assert {int(labels.labels[j]) for j in nz} == active_labels
        mags = np.abs(x[nz])
        assert np.all((mags >= 20.0) & (mags <= 30.0))


def test_sources_overlap_structure(small_grid):
    cfg = _config(n_subjects=6, overlap_fraction=0.5)
    truth = generate_sources(cfg, small_grid.labels)
    shared = truth.shared_subjects
    assert len(shared) == 3
    supports = [frozenset(np.flatnonzero(x).tolist()) for x in truth.sources]
    shared_support = supports[shared[0]]
    for s in shared:
        assert supports[s] == shared_support


def test_sources_full_overlap(small_grid):
    cfg = _config(n_subjects=5, overlap_fraction=1.0)
    truth = generate_sources(cfg, small_grid.labels)
    supports = [frozenset(np.flatnonzero(x).tolist()) for x in truth.sources]
    assert all(s == supports[0] for s in supports)


def test_sources_one_sign_per_label(small_grid):
    cfg = _config(n_subjects=8)
    truth = generate_sources(cfg, small_grid.labels)
    labels = small_grid.labels.labels
    for k, lab in enumerate(truth.active_labels):
        signs = set()
        for x in truth.sources:
            for j in np.flatnonzero(x):
                if labels[j] == lab:
                    signs.add(np.sign(x[j]))
        assert len(signs) == 1


def test_sources_rejects_too_many_labels(small_grid):
    with pytest.raises(SimulationError):
        generate_sources(_config(q_active=5), small_grid.labels)


def test_add_noise_definition_inverts():
    rng = np.random.default_rng(2)
    B = [rng.standard_normal(30) for _ in range(4)]
    Y, sigma = add_noise(B, snr=4.0, seed=0)
    recovered = sum(np.linalg.norm(b) for b in B) / (len(B) * sigma)
    assert recovered == pytest.approx(4.0, rel=1e-12)


def test_add_noise_noiseless_limit():
    B = [np.ones(10)]
    Y, sigma = add_noise(B, snr=1e12, seed=0)
    assert sigma == pytest.approx(np.linalg.norm(B[0]) / 1e12)
    assert np.abs(Y[0] - B[0]).max() < 1e-9


def test_add_noise_rejects_zero_signal():
    with pytest.raises(SimulationError):
        add_noise([np.zeros(5)], snr=4.0, seed=0)


def test_add_noise_empirical_std():
    n, S = 2500, 5
    B = [np.full(n, 3.0) for _ in range(S)]
    Y, sigma = add_noise(B, snr=4.0, seed=3)
    eps = np.concatenate([y - b for y, b in zip(Y, B)])
    assert eps.std() == pytest.approx(sigma, rel=0.05)


def test_make_dataset_deterministic(small_grid):
    d1, t1 = make_dataset(_config(), small_grid)
    d2, t2 = make_dataset(_config(), small_grid)
    for a, b in zip(d1.observations, d2.observations):
        assert np.array_equal(a, b)
    for a, b in zip(t1.sources, t2.sources):
        assert np.array_equal(a, b)
    assert t1.noise_sigma == t2.noise_sigma


def test_truth_invariants_over_many_seeds(small_grid):
    labels = small_grid.labels
    for seed in range(100):
        cfg = _config(seed=seed)
        truth = generate_sources(cfg, labels)
        for x in truth.sources:
            nz = np.flatnonzero(x)
            assert len(nz) == cfg.q_active
            for j in nz:
                assert labels.labels[j] in truth.active_labels


def test_dataset_validation():
    with pytest.raises(SimulationError):
        MultiSubjectDataset([np.zeros((3, 4))], [np.zeros(3), np.zeros(3)])
    with pytest.raises(SimulationError):
        MultiSubjectDataset([np.zeros((3, 4)), np.zeros((4, 4))],
                            [np.zeros(3), np.zeros(4)])


def test_save_load_round_trip(tmp_path, small_grid):
    cfg = _config()
    ds, truth = make_dataset(cfg, small_grid)
    save_dataset(tmp_path / "bench", ds, truth, cfg)
    ds2, truth2, cfg2 = load_dataset(tmp_path / "bench")
    assert cfg2 == cfg
    assert truth2.noise_sigma == truth.noise_sigma
    for a, b in zip(ds.observations, ds2.observations):
        assert np.array_equal(a, b)
    for a, b in zip(ds.leadfields, ds2.leadfields):
        assert np.array_equal(a, b)
    for a, b in zip(truth.sources, truth2.sources):
        assert np.array_equal(a, b)
