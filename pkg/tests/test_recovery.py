import math
import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))
from conftest import REFERENCE  # noqa: E402

from qscilab.detspace import enumerate_strings, hartree_fock, join, split_raw
from qscilab.integrals import mp2_t2
from qscilab.lucj import build_state, params_from_t2
from qscilab.recovery import (
    RecoveryConfig,
    UnrecoverableInputError,
    correct_configurations,
    filter_physical,
    flip_weights,
    recover_loop,
    write_trace,
)
from qscilab.sampler import NoiseConfig, SampleSet, apply_noise, random_uniform_set, sample_exact
from qscilab.subspace import BatchConfig


@pytest.fixture(scope="module")
def noisy_h4(h4):
    state = build_state(h4, params_from_t2(mp2_t2(h4), 2, truncated=True), "2L'")
    return apply_noise(sample_exact(state, 30, seed=1), NoiseConfig(0.6, seed=1))


def test_flip_weights_kernel():
    np.testing.assert_allclose(flip_weights(np.array([1.0, 0.0]), np.array([0.25, 0.25])), [0.75 + 1e-12, 0.25 + 1e-12])


def test_filter_physical():
    s = SampleSet({join(0b011, 0b011, 3): 2, join(0b111, 0b011, 3): 1, join(0b001, 0b101, 3): 4}, 6)
    assert filter_physical(s, 2, 2).counts == {join(0b011, 0b011, 3): 2}


def test_correction_is_idempotent_on_physical_sets(noisy_h4):
    phys = filter_physical(noisy_h4, 2, 2)
    occ = np.full((4, 2), 0.5)
    assert correct_configurations(phys, occ, 2, 2, seed=3) == phys


def test_correction_fixes_weights_and_keeps_counts(noisy_h4):
    occ = np.full((4, 2), 0.5)
    fixed = correct_configurations(noisy_h4, occ, 2, 2, seed=0)
    assert fixed.total_counts == noisy_h4.total_counts
    for key in fixed.counts:
        a, b = split_raw(key, 4)
        assert a.bit_count() == 2 and b.bit_count() == 2


def test_correction_occupation_shape_checked(noisy_h4):
    with pytest.raises(ValueError):
        correct_configurations(noisy_h4, np.zeros((4,)), 2, 2)


def test_flip_frequencies_follow_weights():
    """alpha = orbitals {2, 3} must lose one electron; occupations favour keeping 2."""
    n_orb, trials = 20, 20_000
    betas = enumerate_strings(n_orb, 10)[:trials]
    raw = SampleSet({join(0b1100, b, n_orb): 1 for b in betas}, 2 * n_orb)
    occ = np.zeros((n_orb, 2))
    occ[:4, 0] = [0.99, 0.01, 0.99, 0.01]
    out = correct_configurations(raw, occ, 1, 10, seed=1)
    kept_2 = sum(c for k, c in out.counts.items() if split_raw(k, n_orb)[0] == 0b0100)
    w2, w3 = 1 - 0.99 + 1e-12, 1 - 0.01 + 1e-12
    p = w3 / (w2 + w3)  # dropping bit 3 keeps bit 2
    assert abs(kept_2 - trials * p) <= 3 * math.sqrt(trials * p * (1 - p))


def test_custom_kernel_is_used():
    n = 4
    raw = SampleSet({join(0b0111, 0b0011, n): 1}, 2 * n)
    # kernel that only allows removing orbital 0
    def only_zero(bits, occ):
        return np.where(occ > 0.9, 1.0, 0.0)
    occ = np.zeros((n, 2))
    occ[0, 0] = 1.0
    out = correct_configurations(raw, occ, 2, 2, kernel=only_zero)
    assert out.keys() == [join(0b0110, 0b0011, n)]


def test_loop_iteration_zero_only(h4, noisy_h4):
    steps = recover_loop(noisy_h4, h4, RecoveryConfig(0, seed=1, batch=BatchConfig(4, d=36)))
    assert len(steps) == 1
    assert steps[0].samples == filter_physical(noisy_h4, 2, 2)


def test_loop_is_variational_and_reproducible(h4, noisy_h4):
    cfg = RecoveryConfig(3, seed=2, batch=BatchConfig(5, d=16))
    steps = recover_loop(noisy_h4, h4, cfg)
    assert [s.iteration for s in steps] == [0, 1, 2, 3]
    for s in steps:
        assert s.energy >= REFERENCE["h4_2.00"]["e_fci"] - 1e-10
        assert s.occupations.shape == (4, 2)
        assert s.occupations.sum(axis=0) == pytest.approx([2, 2])
        assert s.samples.total_counts <= noisy_h4.total_counts
    # later iterations correct the original raw set, so every count is recovered
    assert steps[1].samples.total_counts == noisy_h4.total_counts
    assert [s.energy for s in recover_loop(noisy_h4, h4, cfg)] == [s.energy for s in steps]


def test_unrecoverable_without_physical_keys(h4):
    raw = SampleSet({join(0b0111, 0b0001, 4): 5}, 8)
    with pytest.raises(UnrecoverableInputError):
        recover_loop(raw, h4, RecoveryConfig(1))
    steps = recover_loop(raw, h4, RecoveryConfig(1, inject_hf=True, batch=BatchConfig(2, d=4)))
    hf = hartree_fock(h4)
    assert steps[0].samples.keys() == [join(hf.alpha, hf.beta, 4)]
    assert steps[0].energy == pytest.approx(REFERENCE["h4_2.00"]["e_hf"], abs=1e-9)


def test_random_selection_reaches_fci(h4):
    raw = random_uniform_set(8, 20, include_hf=hartree_fock(h4), seed=0)
    steps = recover_loop(raw, h4, RecoveryConfig(2, seed=0, batch=BatchConfig(10, d=36, seed=0)))
    assert steps[-1].energy - REFERENCE["h4_2.00"]["e_fci"] < 1e-3


def test_config_validation():
    with pytest.raises(ValueError):
        RecoveryConfig(-1)
    with pytest.raises(ValueError):
        recover_loop(SampleSet({}, 8), None, RecoveryConfig())


def test_trace_file(h4, noisy_h4, tmp_path):
    steps = recover_loop(noisy_h4, h4, RecoveryConfig(1, seed=0, batch=BatchConfig(2, d=9)))
    path = tmp_path / "t.csv"
    write_trace(steps, path)
    lines = path.read_text().splitlines()
    assert lines[0] == "iteration,energy,batch_energies,dimension,distinct_keys"
    assert len(lines) == 3
    assert float(lines[2].split(",")[1]) == steps[1].energy
