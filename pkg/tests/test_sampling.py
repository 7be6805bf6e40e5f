"""Monte Carlo shot sampling."""

from __future__ import annotations

import numpy as np
import pytest

from floqsim import dem as dem_mod
from floqsim.sampling import ShotSampler, sample_shots


def test_zero_probability_model_gives_zero_syndromes():
    m = dem_mod.from_mechanisms(4, 1, [(0.0, [0, 1], [0])])
    S, O = sample_shots(m, 100, seed=1)
    assert S.shape == (100, 4) and O.shape == (100, 1)
    assert not S.any() and not O.any()


def test_certain_mechanism_fires_every_shot():
    m = dem_mod.from_mechanisms(4, 2, [(1.0 - 1e-15, [1, 3], [1])])
    S, O = sample_shots(m, 50, seed=2)
    assert np.all(S == [0, 1, 0, 1]) and np.all(O == [0, 1])


def test_marginals_within_three_sigma():
    ps = [0.001, 0.01, 0.05, 0.2]
    m = dem_mod.from_mechanisms(4, 0, [(p, [i], []) for i, p in enumerate(ps)])
    shots = 100_000
    S, _ = sample_shots(m, shots, seed=3)
    for i, p in enumerate(ps):
        sigma = np.sqrt(p * (1 - p) / shots)
        assert abs(S[:, i].mean() - p) <= 3 * sigma


def test_xor_of_overlapping_mechanisms():
    p, q = 0.1, 0.3
    m = dem_mod.from_mechanisms(2, 0, [(p, [0], []), (q, [0, 1], [])])
    S, _ = sample_shots(m, 200_000, seed=4)
    expect = p * (1 - q) + q * (1 - p)
    assert abs(S[:, 0].mean() - expect) < 4 * np.sqrt(expect * (1 - expect) / S.shape[0])


def test_seeded_reproducibility(model):
    m = model("hf", 1, 4, 3e-3)
    a = sample_shots(m, 3000, seed=7)
    b = sample_shots(m, 3000, seed=7)
    c = sample_shots(m, 3000, seed=8)
    assert np.array_equal(a[0], b[0]) and np.array_equal(a[1], b[1])
    assert not np.array_equal(a[0], c[0])


def test_batches_concatenate_to_sample(model):
    m = model("hcf", 1, 2, 5e-3)
    sampler = ShotSampler(m)
    parts = list(sampler.batches(2500, seed=9, batch_size=1000))
    assert [p.first_shot for p in parts] == [0, 1000, 2000]
    assert [p.syndromes.shape[0] for p in parts] == [1000, 1000, 500]
    S, _ = sample_shots(m, 2500, seed=9, batch_size=1000)
    assert np.array_equal(np.concatenate([p.syndromes for p in parts]), S)


def test_syndrome_parity_matches_mechanism_weights(model):
    # every HCF mechanism has weight 2, so every sampled syndrome has even weight
    S, _ = sample_shots(model("hcf", 1, 8, 1e-2), 2000, seed=10)
    assert np.all(S.sum(axis=1) % 2 == 0)


def test_negative_shots_rejected(model):
    with pytest.raises(ValueError):
        list(ShotSampler(model("hcf", 1, 1)).batches(-1, 0))
