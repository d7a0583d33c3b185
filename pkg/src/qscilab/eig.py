"""Subspace Hamiltonians, lowest eigenpairs and orbital occupations."""

from __future__ import annotations

import logging
from collections import defaultdict
from dataclasses import dataclass
from typing import Sequence

import numpy as np
import scipy.sparse as sp

from .detspace import Determinant, diagonal_energy, popcount, slater_condon
from .integrals import MolecularHamiltonian

logger = logging.getLogger(__name__)

SparseHamiltonian = sp.csr_matrix

DENSE_LIMIT = 2000
GROUPING_THRESHOLD = 64


class ConvergenceError(RuntimeError):
    def __init__(self, message: str, residual: float):
        self.residual = residual
        super().__init__(f"{message} (best residual {residual:.3e})")


@dataclass(frozen=True, eq=False)
class CIVector:
    """Amplitudes over an ordered, duplicate-free determinant list."""

    dets: tuple[Determinant, ...]
    amplitudes: np.ndarray
    n_orbitals: int

    def __post_init__(self):
        dets = tuple(Determinant(*d) for d in self.dets)
        amps = np.asarray(self.amplitudes, dtype=complex).reshape(-1)
        if len(dets) != len(amps):
            raise ValueError("amplitudes and determinants differ in length")
        if any(b <= a for a, b in zip(dets, dets[1:])):
            raise ValueError("determinants must be sorted and unique")
        object.__setattr__(self, "dets", dets)
        object.__setattr__(self, "amplitudes", amps)

    @classmethod
    def from_unsorted(cls, dets, amplitudes, n_orbitals: int) -> CIVector:
        order = sorted(range(len(dets)), key=lambda i: dets[i])
        amps = np.asarray(amplitudes, dtype=complex)
        return cls(tuple(dets[i] for i in order), amps[order], n_orbitals)

    def __len__(self):
        return len(self.dets)

    @property
    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    def probabilities(self) -> np.ndarray:
        return np.abs(self.amplitudes) ** 2

    def support(self, cutoff: float = 1e-12) -> list[Determinant]:
        p = self.probabilities()
        return [d for d, w in zip(self.dets, p) if w > cutoff]

    def as_dict(self) -> dict[Determinant, complex]:
        return dict(zip(self.dets, self.amplitudes))

    def overlap(self, other: CIVector) -> complex:
        """``<self|other>``."""
        mine = self.as_dict()
        return complex(sum(np.conj(mine[d]) * c for d, c in zip(other.dets, other.amplitudes) if d in mine))


def _electron_counts(space: Sequence[Determinant]) -> tuple[int, int]:
    counts = {(popcount(d.alpha), popcount(d.beta)) for d in space}
    if len(counts) > 1:
        raise ValueError(f"mixed electron counts in space: {sorted(counts)}")
    return counts.pop() if counts else (0, 0)


def _pairs_all(space: Sequence[Determinant]):
    for i, di in enumerate(space):
        for j in range(i):
            dj = space[j]
            if popcount(di.alpha ^ dj.alpha) + popcount(di.beta ^ dj.beta) <= 4:
                yield i, j


def _pairs_grouped(space: Sequence[Determinant]):
    groups: dict[int, list[tuple[int, int]]] = defaultdict(list)
    for i, d in enumerate(space):
        groups[d.alpha].append((d.beta, i))
    alphas = list(groups)
    for x, a1 in enumerate(alphas):
        g1 = groups[a1]
        # same alpha string: beta may differ by up to a double excitation
        for u, (b1, i) in enumerate(g1):
            for b2, j in g1[:u]:
                if popcount(b1 ^ b2) <= 4:
                    yield i, j
        for a2 in alphas[:x]:
            da = popcount(a1 ^ a2)
            if da > 4:
                continue
            g2 = groups[a2]
            if da == 4:
                lookup = dict(g2)
                for b1, i in g1:
                    j = lookup.get(b1)
                    if j is not None:
                        yield i, j
            else:
                for b1, i in g1:
                    for b2, j in g2:
                        if popcount(b1 ^ b2) <= 2:
                            yield i, j


def build_hamiltonian(
    space: Sequence[Determinant], ham: MolecularHamiltonian, grouped: bool | None = None
) -> sp.csr_matrix:
    """Sparse matrix ``<D_i|H|D_j>`` over ``space`` (in the given order).

    Connected pairs are found through alpha-string grouping for spaces larger
    than ``GROUPING_THRESHOLD`` unless ``grouped`` forces a choice; both scans
    give the same matrix.
    """
    space = [Determinant(*d) for d in space]
    _electron_counts(space)
    n = len(space)
    if grouped is None:
        grouped = n > GROUPING_THRESHOLD
    rows = list(range(n))
    cols = list(range(n))
    vals = [diagonal_energy(ham, d) for d in space]
    for i, j in (_pairs_grouped(space) if grouped else _pairs_all(space)):
        v = slater_condon(ham, space[i], space[j])
        if v != 0.0:
            rows += (i, j)
            cols += (j, i)
            vals += (v, v)
    return sp.csr_matrix((vals, (rows, cols)), shape=(n, n))


def _dense_lowest(matrix) -> tuple[float, np.ndarray]:
    dense = matrix.toarray() if sp.issparse(matrix) else np.asarray(matrix)
    w, v = np.linalg.eigh(dense)
    return float(w[0]), v[:, 0]


RESTART_KEEP = 4


def davidson(
    matrix,
    tol: float = 1e-8,
    max_iter: int = 1000,
    max_space: int = 20,
    level_shift: float = 1e-6,
) -> tuple[float, np.ndarray]:
    """Lowest eigenpair of a real symmetric matrix by Davidson iteration.

    Starts from the unit vector on the smallest diagonal entry, uses the
    diagonal preconditioner and restarts from the lowest ``RESTART_KEEP`` Ritz vectors when
    the search space reaches ``max_space`` vectors.
    """
    n = matrix.shape[0]
    diag = np.asarray(matrix.diagonal(), dtype=float)
    if n == 1:
        return float(diag[0]), np.ones(1)
    basis = np.zeros((n, 0))
    hbasis = np.zeros((n, 0))
    guess = np.zeros(n)
    guess[int(np.argmin(diag))] = 1.0
    new = guess
    best = np.inf
    theta, ritz = float(diag.min()), guess
    rng = np.random.default_rng(0)
    for it in range(max_iter):
        for _ in range(2):
            new = new - basis @ (basis.T @ new)
        norm = np.linalg.norm(new)
        if norm < 1e-10:
            # preconditioned residual collapsed into the space; perturb
            new = rng.standard_normal(n)
            new -= basis @ (basis.T @ new)
            norm = np.linalg.norm(new)
        new /= norm
        basis = np.column_stack([basis, new])
        hbasis = np.column_stack([hbasis, matrix @ new])
        small = basis.T @ hbasis
        w, s = np.linalg.eigh(0.5 * (small + small.T))
        theta = float(w[0])
        ritz = basis @ s[:, 0]
        hritz = hbasis @ s[:, 0]
        residual = hritz - theta * ritz
        rnorm = float(np.linalg.norm(residual))
        best = min(best, rnorm)
        # a search space spanning everything is exact up to rounding
        if rnorm <= tol or basis.shape[1] == n:
            logger.debug("davidson converged in %d iterations (residual %.2e)", it + 1, rnorm)
            return theta, ritz / np.linalg.norm(ritz)
        denom = diag - theta
        tiny = np.abs(denom) < level_shift
        denom[tiny] = np.where(denom[tiny] < 0, -level_shift, level_shift)
        new = residual / denom
        if basis.shape[1] >= max_space:
            # thick restart on the lowest Ritz vectors; products are recomputed
            # so rounding does not accumulate over restarts
            basis, _ = np.linalg.qr(basis @ s[:, :RESTART_KEEP])
            hbasis = np.asarray(matrix @ basis)
    raise ConvergenceError(f"Davidson did not converge in {max_iter} iterations", best)


def ground_state(
    matrix,
    dets: Sequence[Determinant] | None = None,
    n_orbitals: int | None = None,
    tol: float = 1e-8,
    max_iter: int = 1000,
    method: str = "davidson",
) -> tuple[float, CIVector | np.ndarray]:
    """Lowest eigenvalue and normalized eigenvector of a subspace Hamiltonian.

    ``method`` is ``"davidson"`` or ``"dense"`` (the latter only up to
    ``DENSE_LIMIT``). When ``dets`` is given the vector is returned as a
    :class:`CIVector` over that (sorted) space, otherwise as an array.
    """
    n = matrix.shape[0]
    if n < 1:
        raise ValueError("empty Hamiltonian")
    if method == "dense":
        if n > DENSE_LIMIT:
            raise ValueError(f"dense solve limited to dimension {DENSE_LIMIT}")
        energy, vec = _dense_lowest(matrix)
    elif method == "davidson":
        energy, vec = davidson(matrix, tol=tol, max_iter=max_iter)
    else:
        raise ValueError(f"unknown method {method!r}")
    # fix the sign so the largest component is positive
    k = int(np.argmax(np.abs(vec)))
    if vec[k] < 0:
        vec = -vec
    if dets is None:
        return energy, vec
    norb = n_orbitals if n_orbitals is not None else max(max(d.alpha | d.beta for d in dets).bit_length(), 1)
    return energy, CIVector.from_unsorted(list(dets), vec, norb)


def occupations(states: Sequence[CIVector]) -> np.ndarray:
    """Batch-averaged spin-orbital occupations, shape ``(N, 2)`` (alpha, beta).

    ``n[p, s] = (1/K) sum_k sum_i |c_i^k|^2 bit_{p,s}(D_i^k)``.
    """
    if not states:
        raise ValueError("no states to average")
    norb = states[0].n_orbitals
    out = np.zeros((norb, 2))
    shifts = np.arange(norb, dtype=np.uint64)
    for state in states:
        if state.n_orbitals != norb:
            raise ValueError("states have different orbital counts")
        w = state.probabilities()
        a = np.fromiter((d.alpha for d in state.dets), dtype=np.uint64, count=len(state))
        b = np.fromiter((d.beta for d in state.dets), dtype=np.uint64, count=len(state))
        out[:, 0] += w @ ((a[:, None] >> shifts) & np.uint64(1)).astype(float)
        out[:, 1] += w @ ((b[:, None] >> shifts) & np.uint64(1)).astype(float)
    return out / len(states)


def solve_space(
    space: Sequence[Determinant], ham: MolecularHamiltonian, method: str = "davidson", tol: float = 1e-8
) -> tuple[float, CIVector]:
    """Convenience: build the subspace Hamiltonian and return its ground state."""
    space = sorted(set(Determinant(*d) for d in space))
    hs = build_hamiltonian(space, ham)
    return ground_state(hs, space, ham.n_orbitals, tol=tol, method=method)
