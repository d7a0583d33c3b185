"""Sample sets: exact sampling, the bit-flip noise model, uniform selection, file I/O.

Randomness comes from numpy's PCG64. Where work is split per item (parent
bitstrings in the noise model), item ``i`` of the sorted key list draws from
``SeedSequence(seed, spawn_key=(i,))`` so results do not depend on the order
or the process in which items are handled.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping

import numpy as np

from .detspace import Determinant, join, parse_bits, render_bits
from .eig import CIVector

BIT_ORDERS = ("alpha-low", "beta-low", "interleaved")


def stream(seed: int, *key: int) -> np.random.Generator:
    """Independent generator for ``(seed, key...)``."""
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed, spawn_key=key)))


@dataclass(frozen=True)
class SampleSet:
    """Multiset of raw ``n_qubits``-bit strings (alpha sector in the low half)."""

    counts: Mapping[int, int]
    n_qubits: int

    def __post_init__(self):
        if self.n_qubits % 2:
            raise ValueError("n_qubits must be even")
        limit = 1 << self.n_qubits
        clean = {}
        for key in sorted(self.counts):
            c = int(self.counts[key])
            if c <= 0:
                raise ValueError(f"nonpositive count {c} for key {key}")
            if not 0 <= key < limit:
                raise ValueError(f"key {key} does not fit in {self.n_qubits} bits")
            clean[int(key)] = c
        object.__setattr__(self, "counts", clean)

    @property
    def n_orbitals(self) -> int:
        return self.n_qubits // 2

    @property
    def total_counts(self) -> int:
        return sum(self.counts.values())

    def __len__(self) -> int:
        return len(self.counts)

    def keys(self) -> list[int]:
        return list(self.counts)

    @classmethod
    def from_keys(cls, keys: Iterable[int], n_qubits: int) -> SampleSet:
        counts: dict[int, int] = {}
        for k in keys:
            counts[k] = counts.get(k, 0) + 1
        return cls(counts, n_qubits)


@dataclass(frozen=True)
class NoiseConfig:
    p: float
    max_flips: int | None = None
    seed: int = 0

    def __post_init__(self):
        if not 0.0 <= self.p <= 1.0:
            raise ValueError("p must lie in [0, 1]")
        if self.max_flips is not None and self.max_flips < 1:
            raise ValueError("max_flips must be >= 1")


def _state_keys(state: CIVector) -> np.ndarray:
    return np.array([join(d.alpha, d.beta, state.n_orbitals) for d in state.dets], dtype=object)


def sample_exact(state: CIVector, n_shots: int, seed: int = 0, tol: float = 1e-8) -> SampleSet:
    """Multinomial draw of ``n_shots`` outcomes with probabilities ``|c_i|^2``."""
    probs = state.probabilities()
    if abs(probs.sum() - 1.0) > tol:
        raise ValueError(f"state is not normalized (norm^2 = {probs.sum():.12f})")
    counts = np.random.default_rng(seed).multinomial(n_shots, probs / probs.sum())
    keys = _state_keys(state)
    nz = np.nonzero(counts)[0]
    return SampleSet({keys[i]: int(counts[i]) for i in nz}, 2 * state.n_orbitals)


def support_samples(state: CIVector, cutoff: float = 1e-12, resolution: int = 10**8) -> SampleSet:
    """Every determinant with ``|c|^2 > cutoff``, counts ``max(1, round(p * resolution))``.

    A deterministic stand-in for a very large shot budget.
    """
    probs = state.probabilities()
    keys = _state_keys(state)
    return SampleSet(
        {keys[i]: max(1, int(round(probs[i] * resolution))) for i in np.nonzero(probs > cutoff)[0]},
        2 * state.n_orbitals,
    )


def _descendant(parent: int, n_bits: int, p: float, max_flips: int, rng: np.random.Generator) -> int:
    child = parent
    flips = 0
    while flips < max_flips and rng.random() < p:
        child ^= 1 << int(rng.integers(n_bits))
        flips += 1
    return child


def apply_noise(samples: SampleSet, cfg: NoiseConfig) -> SampleSet:
    """Bit-flip noise model: every parent adds one descendant with its counts.

    Starting from a copy of the parent, a uniformly chosen bit is flipped
    while ``r < p`` (``r`` uniform in ``[0, 1)``), at most ``max_flips`` times
    (default ``8 * n_qubits``). A descendant equal to its parent doubles the
    parent's count, so total counts always double.
    """
    n_bits = samples.n_qubits
    cap = cfg.max_flips if cfg.max_flips is not None else 8 * n_bits
    out = dict(samples.counts)
    for i, (parent, count) in enumerate(samples.counts.items()):
        child = _descendant(parent, n_bits, cfg.p, cap, stream(cfg.seed, i))
        out[child] = out.get(child, 0) + count
    return SampleSet(out, n_bits)


def _uniform_keys(rng: np.random.Generator, n_bits: int, size: int) -> list[int]:
    lo = rng.integers(0, 1 << 32, size=size, dtype=np.uint64)
    hi = rng.integers(0, 1 << 32, size=size, dtype=np.uint64)
    mask = (1 << n_bits) - 1
    return [((int(h) << 32) | int(l)) & mask for h, l in zip(hi, lo)]


def random_uniform_set(
    n_qubits: int, target_distinct: int, include_hf: Determinant | None = None, seed: int = 0
) -> SampleSet:
    """Uniform draws over all ``n_qubits``-bit strings until ``target_distinct`` distinct keys.

    Each draw adds one count. ``include_hf`` (if given) then adds one count
    of the reference determinant.
    """
    if n_qubits > 64:
        raise ValueError("at most 64 qubits are supported")
    if target_distinct > 1 << n_qubits:
        raise ValueError(f"{target_distinct} distinct strings requested from a space of {1 << n_qubits}")
    rng = np.random.default_rng(seed)
    counts: dict[int, int] = {}
    while len(counts) < target_distinct:
        chunk = max(16, 2 * (target_distinct - len(counts)))
        for key in _uniform_keys(rng, n_qubits, chunk):
            counts[key] = counts.get(key, 0) + 1
            if len(counts) == target_distinct:
                break
    if include_hf is not None:
        hf = join(include_hf.alpha, include_hf.beta, n_qubits // 2)
        counts[hf] = counts.get(hf, 0) + 1
    return SampleSet(counts, n_qubits)


def _reorder(bits: str, n_orbitals: int, order: str, to_file: bool) -> str:
    """Convert between the package rendering and ``order`` (character strings)."""
    if order == "alpha-low":
        return bits
    if order == "beta-low":
        return bits[n_orbitals:] + bits[:n_orbitals]
    if order == "interleaved":
        # file string, rightmost first: a0 b0 a1 b1 ...; package: alpha in low half
        if to_file:
            x = parse_bits(bits)
            a, b = x & ((1 << n_orbitals) - 1), x >> n_orbitals
            y = 0
            for p in range(n_orbitals):
                y |= ((a >> p) & 1) << (2 * p) | ((b >> p) & 1) << (2 * p + 1)
            return render_bits(y, 2 * n_orbitals)
        y = parse_bits(bits)
        a = b = 0
        for p in range(n_orbitals):
            a |= ((y >> (2 * p)) & 1) << p
            b |= ((y >> (2 * p + 1)) & 1) << p
        return render_bits(join(a, b, n_orbitals), 2 * n_orbitals)
    raise ValueError(f"unknown bit order {order!r}; choose from {BIT_ORDERS}")


def write_samples(samples: SampleSet, path: str | Path, bit_order: str = "alpha-low") -> None:
    """One JSON record per line: ``{"bits": "<2N chars>", "count": k}``."""
    n = samples.n_qubits
    with open(path, "w") as fh:
        for key, count in samples.counts.items():
            bits = _reorder(render_bits(key, n), n // 2, bit_order, to_file=True)
            fh.write(json.dumps({"bits": bits, "count": count}) + "\n")


def read_samples(path: str | Path, n_qubits: int | None = None, bit_order: str = "alpha-low") -> SampleSet:
    counts: dict[int, int] = {}
    width = n_qubits
    with open(path) as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                rec = json.loads(line)
                bits, count = rec["bits"], rec["count"]
            except (json.JSONDecodeError, KeyError, TypeError):
                raise ValueError(f"{path}:{lineno}: malformed record") from None
            if not isinstance(count, int) or count <= 0:
                raise ValueError(f"{path}:{lineno}: count must be a positive integer")
            if width is None:
                width = len(bits)
            if len(bits) != width or width % 2:
                raise ValueError(f"{path}:{lineno}: expected {width} bits, got {len(bits)}")
            try:
                key = parse_bits(_reorder(bits, width // 2, bit_order, to_file=False))
            except ValueError as exc:
                raise ValueError(f"{path}:{lineno}: {exc}") from None
            counts[key] = counts.get(key, 0) + count
    return SampleSet(counts, width or 0)
