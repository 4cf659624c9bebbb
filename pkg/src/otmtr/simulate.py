# -*- coding: utf-8 -*-
"""
Synthetic multi-subject benchmark generator: label-constrained sparse
signed sources with partial cross-subject overlap, smooth per-subject
sensor profiles standing in for anatomical leadfields, and Gaussian
noise calibrated to a target signal-to-noise ratio.

Everything is a pure function of (config, seed).
"""

import json
import os
from dataclasses import dataclass, asdict

import numpy as np

from .geometry import save_matrix, load_matrix


class SimulationError(ValueError):
    """Invalid simulation request."""


@dataclass
class SimConfig:
    """Benchmark generation parameters.

    ``n_sensors < n_sources`` is the intended ill-posed regime; larger
    sensor counts are allowed (useful for noise-estimation studies) but
    not the design center. Amplitudes are drawn uniformly from
    ``amp_range`` (nAm) and signs once per label with probability
    ``sign_prob`` of being positive.
    """

    n_subjects: int
    n_sensors: int
    n_sources: int
    q_active: int
    overlap_fraction: float = 0.5
    amp_range: tuple = (20.0, 30.0)
    sign_prob: float = 0.5
    snr: float = 4.0
    shared_leadfield: bool = False
    seed: int = 0
    leadfield_smoothness_cm: float = 2.0
    leadfield_mix_angle_deg: float = 25.0

    def __post_init__(self):
        if self.n_subjects < 1:
            raise SimulationError("need at least one subject")
        if self.q_active < 1:
            raise SimulationError("q_active must be >= 1")
        if not (0.0 <= self.overlap_fraction <= 1.0):
            raise SimulationError("overlap_fraction must lie in [0, 1]")
        if self.snr <= 0:
            raise SimulationError("snr must be > 0")
        if self.amp_range[0] > self.amp_range[1] or self.amp_range[0] < 0:
            raise SimulationError("amp_range must be an increasing nonnegative pair")


@dataclass
class GroundTruth:
    """True sources behind a synthetic dataset."""

    sources: list                     # S dense signed vectors, q-sparse
    active_labels: np.ndarray         # label id per active slot
    noise_sigma: float = None
    shared_subjects: np.ndarray = None  # indices drawing the common vertices


@dataclass
class MultiSubjectDataset:
    """Aligned per-subject leadfields and single-instant observations."""

    leadfields: list
    observations: list

    def __post_init__(self):
        if len(self.leadfields) != len(self.observations):
            raise SimulationError("leadfields and observations must align")
        shapes = {np.asarray(L).shape for L in self.leadfields}
        if len(shapes) != 1:
            raise SimulationError("all leadfields must share one shape")
        n, _ = shapes.pop()
        for y in self.observations:
            if np.asarray(y).shape != (n,):
                raise SimulationError("observation length must match sensor count")

    @property
    def n_subjects(self):
        return len(self.leadfields)


def _rngs(config):
    lead_seed, source_seed, noise_seed = np.random.SeedSequence(config.seed).spawn(3)
    return (np.random.default_rng(lead_seed), np.random.default_rng(source_seed),
            noise_seed)


def _smooth_profiles(rng, n, geometry, smoothness):
    """Random sensor profiles smoothed along the source metric."""
    W = np.exp(-(geometry.cost / smoothness) ** 2 / 2.0)
    G = rng.standard_normal((n, geometry.n_sources))
    return G @ W


def _unit_columns(L):
    norms = np.linalg.norm(L, axis=0)
    norms[norms == 0] = 1.0
    return L / norms


def generate_leadfields(config, geometry):
    """Per-subject forward operators with spatially correlated columns.

    Columns are random sensor profiles smoothed over the geometry, so
    nearby sources produce similar measurements (the property that makes
    the inverse problem ill-posed), then normalized to unit norm. With
    ``shared_leadfield`` all subjects receive references to one matrix;
    otherwise each subject mixes the base profile with an independent one
    at ``leadfield_mix_angle_deg``.
    """
    rng, _, _ = _rngs(config)
    n = config.n_sensors
    if config.n_sources != geometry.n_sources:
        raise SimulationError("config.n_sources=%d but geometry has %d vertices"
                              % (config.n_sources, geometry.n_sources))
    base = _smooth_profiles(rng, n, geometry, config.leadfield_smoothness_cm)
    if config.shared_leadfield:
        shared = _unit_columns(base)
        return [shared] * config.n_subjects
    theta = np.deg2rad(config.leadfield_mix_angle_deg)
    out = []
    for _ in range(config.n_subjects):
        fresh = _smooth_profiles(rng, n, geometry, config.leadfield_smoothness_cm)
        out.append(_unit_columns(np.cos(theta) * base + np.sin(theta) * fresh))
    return out


def generate_sources(config, labels):
    """Label-constrained sparse signed sources across subjects.

    ``q_active`` labels are chosen; every subject holds one source per
    chosen label. A fixed fraction of subjects (rounded) share the exact
    vertex in every label, the rest draw their own vertex inside the same
    label. One sign per label, shared by all subjects.
    """
    _, rng, _ = _rngs(config)
    q = config.q_active
    if q > labels.n_labels:
        raise SimulationError("q_active=%d exceeds the %d available labels"
                              % (q, labels.n_labels))
    p = labels.labels.shape[0]
    if p != config.n_sources:
        raise SimulationError("label partition size mismatch")
    S = config.n_subjects

    chosen = rng.choice(labels.n_labels, size=q, replace=False)
    signs = np.where(rng.random(q) < config.sign_prob, 1.0, -1.0)
    shared_vertices = np.array([rng.choice(labels.members(lab)) for lab in chosen])
    n_shared = int(round(config.overlap_fraction * S))
    order = rng.permutation(S)
    shared_subjects = np.sort(order[:n_shared])
    shared_mask = np.zeros(S, dtype=bool)
    shared_mask[shared_subjects] = True

    sources = []
    lo, hi = config.amp_range
    for s in range(S):
        x = np.zeros(p)
        for k, lab in enumerate(chosen):
            v = shared_vertices[k] if shared_mask[s] else rng.choice(labels.members(lab))
            x[v] = signs[k] * rng.uniform(lo, hi)
        sources.append(x)
    return GroundTruth(sources, np.asarray(chosen), None, shared_subjects)


def add_noise(B_list, snr, seed):
    """Gaussian sensor noise at a common level set by the target SNR.

    ``sigma = sum_s ||B_s|| / (S * snr)``; every observation receives
    i.i.d. noise of that standard deviation.
    """
    if snr <= 0:
        raise SimulationError("snr must be > 0")
    B_list = [np.asarray(b, dtype=np.float64) for b in B_list]
    norms = [np.linalg.norm(b) for b in B_list]
    if sum(norms) == 0:
        raise SimulationError("all clean signals are zero; SNR is undefined")
    sigma = sum(norms) / (len(B_list) * snr)
    rng = np.random.default_rng(seed)
    Y_list = [b + sigma * rng.standard_normal(b.shape[0]) for b in B_list]
    return Y_list, float(sigma)


def make_dataset(config, geometry):
    """Full benchmark draw: leadfields, sources, noisy observations."""
    if geometry.labels is None:
        raise SimulationError("geometry needs a label partition")
    leadfields = generate_leadfields(config, geometry)
    truth = generate_sources(config, geometry.labels)
    B = [leadfields[s] @ truth.sources[s] for s in range(config.n_subjects)]
    _, _, noise_seed = _rngs(config)
    Y, sigma = add_noise(B, config.snr, noise_seed)
    truth.noise_sigma = sigma
    return MultiSubjectDataset(leadfields, Y), truth


def save_dataset(directory, dataset, truth, config):
    """Persist a dataset as binary matrices plus a JSON sidecar."""
    os.makedirs(directory, exist_ok=True)
    S = dataset.n_subjects
    for s in range(S):
        save_matrix(os.path.join(directory, "leadfield_%03d.bin" % s),
                    dataset.leadfields[s])
        save_matrix(os.path.join(directory, "observation_%03d.bin" % s),
                    np.asarray(dataset.observations[s])[None, :])
        save_matrix(os.path.join(directory, "source_%03d.bin" % s),
                    np.asarray(truth.sources[s])[None, :])
    sidecar = {
        "config": asdict(config),
        "seed": config.seed,
        "noise_sigma": truth.noise_sigma,
        "active_labels": [int(v) for v in truth.active_labels],
        "shared_subjects": [int(v) for v in truth.shared_subjects],
        "active_indices": [[int(i) for i in np.flatnonzero(x)]
                           for x in truth.sources],
        "n_subjects": S,
    }
    with open(os.path.join(directory, "dataset.json"), "w") as f:
        json.dump(sidecar, f, indent=2, sort_keys=True)


def load_dataset(directory):
    """Load a dataset written by ``save_dataset``."""
    with open(os.path.join(directory, "dataset.json")) as f:
        sidecar = json.load(f)
    S = sidecar["n_subjects"]
    leadfields, observations, sources = [], [], []
    for s in range(S):
        leadfields.append(load_matrix(os.path.join(directory, "leadfield_%03d.bin" % s)))
        observations.append(load_matrix(
            os.path.join(directory, "observation_%03d.bin" % s))[0])
        sources.append(load_matrix(os.path.join(directory, "source_%03d.bin" % s))[0])
    cfg = sidecar["config"]
    cfg["amp_range"] = tuple(cfg["amp_range"])
    config = SimConfig(**cfg)
    truth = GroundTruth(sources, np.asarray(sidecar["active_labels"]),
                        sidecar["noise_sigma"],
                        np.asarray(sidecar["shared_subjects"]))
    return MultiSubjectDataset(leadfields, observations), truth, config
