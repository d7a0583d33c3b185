"""Batched CI subspaces from sample sets and the batch-minimum energy."""

from __future__ import annotations

import csv
import logging
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from .detspace import Determinant, split_raw
from .eig import CIVector, build_hamiltonian, ground_state
from .integrals import MolecularHamiltonian
from .lucj import CapacityError
from .sampler import SampleSet, stream

logger = logging.getLogger(__name__)

FIXED_SUBSPACE = "fixed-subspace"
FIXED_DRAW = "fixed-draw"


@dataclass(frozen=True)
class BatchConfig:
    """How batches are drawn.

    ``fixed-subspace`` draws until ``sqrt(d)`` distinct strings are pooled;
    ``fixed-draw`` makes exactly ``n_draw`` draws. With ``pool="alpha"`` only
    the alpha half of each draw is pooled.
    """

    n_batches: int = 10
    mode: str = FIXED_SUBSPACE
    d: int | None = None
    n_draw: int | None = None
    seed: int = 0
    pool: str = "pooled"
    max_dimension: int = 4_000_000
    solver: str = "davidson"

    def __post_init__(self):
        if self.n_batches < 1:
            raise ValueError("n_batches must be >= 1")
        if self.mode == FIXED_SUBSPACE:
            if self.d is None or self.d < 1 or math.isqrt(self.d) ** 2 != self.d:
                raise ValueError("fixed-subspace mode needs a perfect-square d")
        elif self.mode == FIXED_DRAW:
            if self.n_draw is None or self.n_draw < 1:
                raise ValueError("fixed-draw mode needs n_draw >= 1")
        else:
            raise ValueError(f"unknown batch mode {self.mode!r}")
        if self.pool not in ("pooled", "alpha"):
            raise ValueError("pool must be 'pooled' or 'alpha'")

    @property
    def string_target(self) -> int:
        return math.isqrt(self.d)


@dataclass(frozen=True)
class Batch:
    strings: frozenset[int]
    slots: int
    dimension: int
    energy: float
    state: CIVector


@dataclass(frozen=True)
class BatchResult:
    batches: tuple[Batch, ...]

    @property
    def energies(self) -> list[float]:
        return [b.energy for b in self.batches]

    @property
    def argmin(self) -> int:
        return int(np.argmin(self.energies))

    @property
    def energy(self) -> float:
        return min(self.energies)

    @property
    def states(self) -> list[CIVector]:
        return [b.state for b in self.batches]


def _halves(samples: SampleSet, pool: str):
    n = samples.n_orbitals
    for key in samples.counts:
        a, b = split_raw(key, n)
        yield key, ((a,) if pool == "alpha" else (a, b))


def pooled_strings(samples: SampleSet, pool: str = "pooled") -> set[int]:
    out: set[int] = set()
    for _, halves in _halves(samples, pool):
        out.update(halves)
    return out


def draw_strings(
    samples: SampleSet,
    mode: str = FIXED_SUBSPACE,
    target: int | None = None,
    n_draw: int | None = None,
    seed: int = 0,
    pool: str = "pooled",
) -> tuple[set[int], int]:
    """Pool spin strings from count-weighted draws (with replacement).

    Returns the string set and the number of string slots visited (two per
    draw when pooling both halves). ``fixed-subspace`` stops as soon as
    ``target`` distinct strings are held, or returns every available string if
    fewer exist; ``fixed-draw`` stops after ``n_draw`` draws.
    """
    if not len(samples):
        raise ValueError("empty sample set")
    keys = np.array(list(samples.counts), dtype=object)
    halves = dict(_halves(samples, pool))
    weights = np.fromiter(samples.counts.values(), dtype=float, count=len(keys))
    weights /= weights.sum()
    rng = np.random.default_rng(seed)
    strings: set[int] = set()
    slots = 0
    if mode == FIXED_DRAW:
        for idx in rng.choice(len(keys), size=n_draw, p=weights):
            for s in halves[keys[idx]]:
                strings.add(s)
                slots += 1
        return strings, slots
    if mode != FIXED_SUBSPACE:
        raise ValueError(f"unknown batch mode {mode!r}")
    available = len(pooled_strings(samples, pool))
    goal = min(target, available)
    while len(strings) < goal:
        for idx in rng.choice(len(keys), size=max(64, 2 * (goal - len(strings))), p=weights):
            for s in halves[keys[idx]]:
                strings.add(s)
                slots += 1
                if len(strings) == goal:
                    return strings, slots
    return strings, slots


def _role_filter(strings, n_alpha: int, n_beta: int):
    sa = sorted(s for s in strings if s.bit_count() == n_alpha)
    sb = sorted(s for s in strings if s.bit_count() == n_beta)
    return sa, sb


def subspace_dimension(strings, n_alpha: int, n_beta: int) -> int:
    """Size of the recombined space without building it."""
    sa, sb = _role_filter(strings, n_alpha, n_beta)
    return len(sa) * len(sb)


def recombine(strings, n_alpha: int, n_beta: int) -> list[Determinant]:
    """Sorted Cartesian product of the weight-filtered alpha and beta strings."""
    sa, sb = _role_filter(strings, n_alpha, n_beta)
    return [Determinant(a, b) for a in sa for b in sb]


def _solve(strings, ham: MolecularHamiltonian, max_dimension: int, solver: str):
    dim = subspace_dimension(strings, ham.n_alpha, ham.n_beta)
    if dim > max_dimension:
        raise CapacityError(f"subspace dimension {dim} exceeds the cap of {max_dimension}")
    if dim == 0:
        return dim, None, None
    space = recombine(strings, ham.n_alpha, ham.n_beta)
    energy, state = ground_state(build_hamiltonian(space, ham), space, ham.n_orbitals, method=solver)
    return dim, energy, state


def run_batches(samples: SampleSet, ham: MolecularHamiltonian, cfg: BatchConfig) -> BatchResult:
    """Draw, recombine and diagonalize ``cfg.n_batches`` independent batches.

    Batch ``k`` draws with the generator ``stream(cfg.seed, k)``. Batches whose
    recombined space is empty are skipped; if all are empty a ``ValueError``
    is raised.
    """
    batches = []
    for k in range(cfg.n_batches):
        batch_seed = int(stream(cfg.seed, k).integers(2**63))
        if cfg.mode == FIXED_SUBSPACE:
            strings, slots = draw_strings(samples, cfg.mode, target=cfg.string_target, seed=batch_seed, pool=cfg.pool)
        else:
            strings, slots = draw_strings(samples, cfg.mode, n_draw=cfg.n_draw, seed=batch_seed, pool=cfg.pool)
        dim, energy, state = _solve(strings, ham, cfg.max_dimension, cfg.solver)
        if dim == 0:
            logger.info("batch %d: no strings of the right weight", k)
            continue
        batches.append(Batch(frozenset(strings), slots, dim, energy, state))
    if not batches:
        raise ValueError("every batch produced an empty subspace")
    return BatchResult(tuple(batches))


def full_subspace(
    samples: SampleSet, ham: MolecularHamiltonian, max_dimension: int = 4_000_000, pool: str = "pooled", solver: str = "davidson"
) -> tuple[float, int, CIVector]:
    """Diagonalize in the space built from every pooled string; returns (energy, dimension, state)."""
    strings = pooled_strings(samples, pool)
    dim, energy, state = _solve(strings, ham, max_dimension, solver)
    if dim == 0:
        raise ValueError("no strings of the right weight in the sample set")
    return energy, dim, state


def write_batch_summary(result: BatchResult, path: str | Path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["batch", "strings_drawn", "distinct_strings", "dimension", "energy"])
        for k, b in enumerate(result.batches):
            w.writerow([k, b.slots, len(b.strings), b.dimension, repr(float(b.energy))])
