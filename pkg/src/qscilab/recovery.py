"""Configuration recovery for samples that violate per-sector particle number."""

from __future__ import annotations

import csv
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Callable

import numpy as np

from .detspace import hartree_fock, join, split_raw
from .eig import occupations
from .integrals import MolecularHamiltonian
from .sampler import SampleSet, stream
from .subspace import BatchConfig, BatchResult, run_batches

WEIGHT_FLOOR = 1e-12


class UnrecoverableInputError(ValueError):
    pass


def flip_weights(bits: np.ndarray, occ: np.ndarray) -> np.ndarray:
    """Default kernel: ``|x - n| + floor`` for each candidate bit."""
    return np.abs(bits - occ) + WEIGHT_FLOOR


@dataclass(frozen=True)
class RecoveryConfig:
    iterations: int = 5
    seed: int = 0
    batch: BatchConfig = field(default_factory=lambda: BatchConfig(d=16))
    inject_hf: bool = False
    kernel: Callable[[np.ndarray, np.ndarray], np.ndarray] = flip_weights

    def __post_init__(self):
        if self.iterations < 0:
            raise ValueError("iterations must be >= 0")


def filter_physical(samples: SampleSet, n_alpha: int, n_beta: int) -> SampleSet:
    n = samples.n_orbitals
    keep = {}
    for key, count in samples.counts.items():
        a, b = split_raw(key, n)
        if a.bit_count() == n_alpha and b.bit_count() == n_beta:
            keep[key] = count
    return SampleSet(keep, samples.n_qubits)


def _correct_sector(bits: int, target: int, occ: np.ndarray, rng, kernel) -> int:
    weight = bits.bit_count()
    if weight == target:
        return bits
    n = len(occ)
    x = np.array([(bits >> p) & 1 for p in range(n)], dtype=float)
    if weight > target:
        cand = np.nonzero(x == 1)[0]
    else:
        cand = np.nonzero(x == 0)[0]
    w = kernel(x[cand], occ[cand])
    chosen = rng.choice(cand, size=abs(weight - target), replace=False, p=w / w.sum())
    for p in chosen:
        bits ^= 1 << int(p)
    return bits


def correct_configurations(
    raw: SampleSet, occ: np.ndarray, n_alpha: int, n_beta: int, seed: int = 0, kernel=flip_weights
) -> SampleSet:
    """Flip bits of weight-violating strings toward the target electron counts.

    ``occ`` has shape ``(N, 2)``. Per sector, surplus electrons are removed
    from occupied bits and missing ones added to empty bits, choosing the
    bits without replacement with probability proportional to
    ``kernel(x, n)``. Key ``i`` of ``raw`` uses ``stream(seed, i)``.
    """
    n = raw.n_orbitals
    occ = np.asarray(occ, dtype=float)
    if occ.shape != (n, 2):
        raise ValueError(f"occupations must have shape ({n}, 2), got {occ.shape}")
    out: dict[int, int] = {}
    for i, (key, count) in enumerate(raw.counts.items()):
        a, b = split_raw(key, n)
        if a.bit_count() != n_alpha or b.bit_count() != n_beta:
            rng = stream(seed, i)
            a = _correct_sector(a, n_alpha, occ[:, 0], rng, kernel)
            b = _correct_sector(b, n_beta, occ[:, 1], rng, kernel)
            key = join(a, b, n)
        out[key] = out.get(key, 0) + count
    return SampleSet(out, raw.n_qubits)


@dataclass(frozen=True)
class RecoveryStep:
    iteration: int
    energy: float
    batches: BatchResult
    occupations: np.ndarray
    samples: SampleSet

    @property
    def dimension(self) -> int:
        return self.batches.batches[self.batches.argmin].dimension


def recover_loop(raw: SampleSet, ham: MolecularHamiltonian, cfg: RecoveryConfig) -> list[RecoveryStep]:
    """Iterative configuration recovery.

    Iteration 0 diagonalizes batches drawn from the physical part of ``raw``.
    Each later iteration corrects the *original* ``raw`` set with the
    occupations averaged over the previous iteration's batch ground states.
    """
    if not len(raw):
        raise ValueError("empty sample set")
    na, nb = ham.n_alpha, ham.n_beta
    current = filter_physical(raw, na, nb)
    if not len(current) and cfg.inject_hf:
        hf = hartree_fock(ham)
        key = join(hf.alpha, hf.beta, ham.n_orbitals)
        counts = dict(current.counts)
        counts[key] = counts.get(key, 0) + 1
        current = SampleSet(counts, raw.n_qubits)
    if not len(current):
        raise UnrecoverableInputError("no sample has the right electron counts and HF injection is off")
    steps = []
    for it in range(cfg.iterations + 1):
        if it > 0:
            current = correct_configurations(raw, steps[-1].occupations, na, nb, seed=int(stream(cfg.seed, it).integers(2**63)), kernel=cfg.kernel)
        batch_cfg = replace(cfg.batch, seed=int(stream(cfg.seed, it, 1).integers(2**63)))
        result = run_batches(current, ham, batch_cfg)
        steps.append(RecoveryStep(it, result.energy, result, occupations(result.states), current))
    return steps


def write_trace(steps: list[RecoveryStep], path: str | Path) -> None:
    """CSV: iteration, min-batch energy, per-batch energies, dimension, distinct keys."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["iteration", "energy", "batch_energies", "dimension", "distinct_keys"])
        for s in steps:
            w.writerow([s.iteration, repr(float(s.energy)), ";".join(repr(float(e)) for e in s.batches.energies), s.dimension, len(s.samples)])
