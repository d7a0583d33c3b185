"""Bit-packed Slater determinants and Slater-Condon matrix elements.

Conventions used everywhere in the package:

* A spin string is a Python ``int``; bit ``p`` set means spatial orbital
  ``p`` is occupied.
* A raw measurement string packs ``2N`` bits with the alpha sector in the low
  ``N`` bits and the beta sector in the high ``N`` bits.
* Fermionic phases follow the ordering ``a+_{0a} ... a+_{(N-1)a} a+_{0b} ...``
  (ascending orbital index inside a sector, alpha block before beta block).
"""

from __future__ import annotations

from itertools import combinations
from typing import NamedTuple

from .integrals import MolecularHamiltonian

MAX_ORBITALS = 32


class Determinant(NamedTuple):
    """Occupation strings of one Slater determinant; ordered by ``(alpha, beta)``."""

    alpha: int
    beta: int


class Excitation(NamedTuple):
    degree: int
    holes: tuple[tuple[int, int], ...]
    particles: tuple[tuple[int, int], ...]
    sign: int


def popcount(x: int) -> int:
    return x.bit_count()


def occupied(bits: int) -> list[int]:
    out = []
    p = 0
    while bits:
        if bits & 1:
            out.append(p)
        bits >>= 1
        p += 1
    return out


def enumerate_strings(n_orbitals: int, n_electrons: int) -> list[int]:
    """All ``C(n_orbitals, n_electrons)`` spin strings in increasing order."""
    if not 0 <= n_orbitals <= MAX_ORBITALS:
        raise ValueError(f"n_orbitals must be in [0, {MAX_ORBITALS}]")
    if not 0 <= n_electrons <= n_orbitals:
        raise ValueError(f"cannot place {n_electrons} electrons in {n_orbitals} orbitals")
    out = [sum(1 << p for p in occ) for occ in combinations(range(n_orbitals), n_electrons)]
    out.sort()
    return out


def split_raw(x: int, n_orbitals: int) -> tuple[int, int]:
    """Split a raw ``2N``-bit string into ``(alpha, beta)``."""
    mask = (1 << n_orbitals) - 1
    return x & mask, (x >> n_orbitals) & mask


def join(alpha: int, beta: int, n_orbitals: int) -> int:
    return alpha | (beta << n_orbitals)


def render_bits(x: int, n_bits: int) -> str:
    """Render with the highest bit leftmost (for raw strings: highest beta bit)."""
    return format(x, f"0{n_bits}b")


def parse_bits(text: str) -> int:
    if not text or set(text) - {"0", "1"}:
        raise ValueError(f"not a 0/1 string: {text!r}")
    return int(text, 2)


def _between(bits: int, a: int, b: int) -> int:
    lo, hi = min(a, b), max(a, b)
    mask = ((1 << hi) - 1) & ~((1 << (lo + 1)) - 1)
    return popcount(bits & mask)


def _sector(i_bits: int, j_bits: int) -> tuple[list[int], list[int], int]:
    """Holes, particles and sign for the move ``i_bits -> j_bits`` in one sector."""
    holes = occupied(i_bits & ~j_bits)
    particles = occupied(j_bits & ~i_bits)
    sign = 1
    if len(holes) <= 2:
        cur = i_bits
        for h, p in zip(holes, particles):
            if _between(cur, h, p) & 1:
                sign = -sign
            cur ^= (1 << h) | (1 << p)
    return holes, particles, sign


def excitation(det_i: Determinant, det_j: Determinant) -> Excitation:
    """Excitation taking ``det_i`` to ``det_j``.

    ``det_j = sign * a+_{p_k} a_{h_k} ... a+_{p_1} a_{h_1} det_i`` with holes
    and particles paired in ascending order, alpha pairs applied first. Holes
    and particles are ``(orbital, spin)`` with spin 0 for alpha, 1 for beta.
    Degrees above two are reported without hole/particle detail.
    """
    if popcount(det_i.alpha) != popcount(det_j.alpha) or popcount(det_i.beta) != popcount(det_j.beta):
        raise ValueError("determinants have different electron counts")
    da = popcount(det_i.alpha ^ det_j.alpha) // 2
    db = popcount(det_i.beta ^ det_j.beta) // 2
    degree = da + db
    if degree > 2:
        return Excitation(degree, (), (), 1)
    ha, pa, sa = _sector(det_i.alpha, det_j.alpha)
    hb, pb, sb = _sector(det_i.beta, det_j.beta)
    holes = tuple((h, 0) for h in ha) + tuple((h, 1) for h in hb)
    particles = tuple((p, 0) for p in pa) + tuple((p, 1) for p in pb)
    return Excitation(degree, holes, particles, sa * sb)


def diagonal_energy(ham: MolecularHamiltonian, det: Determinant) -> float:
    eri = ham.eri_dense
    h = ham.h
    occ_a = occupied(det.alpha)
    occ_b = occupied(det.beta)
    e = ham.e_core
    e += sum(h[p, p] for p in occ_a) + sum(h[p, p] for p in occ_b)
    for occ in (occ_a, occ_b):
        for i, p in enumerate(occ):
            for q in occ[:i]:
                e += eri[p, p, q, q] - eri[p, q, q, p]
    for p in occ_a:
        for q in occ_b:
            e += eri[p, p, q, q]
    return float(e)


def slater_condon(ham: MolecularHamiltonian, det_i: Determinant, det_j: Determinant) -> float:
    """``<det_i|H|det_j>`` by the Slater-Condon rules (chemists' notation)."""
    exc = excitation(det_i, det_j)
    if exc.degree == 0:
        return diagonal_energy(ham, det_i)
    if exc.degree > 2:
        return 0.0
    eri = ham.eri_dense
    if exc.degree == 1:
        (h, spin), (p, _) = exc.holes[0], exc.particles[0]
        same = occupied(det_i.beta if spin else det_i.alpha)
        other = occupied(det_i.alpha if spin else det_i.beta)
        v = ham.h[h, p]
        for k in same:
            v += eri[h, p, k, k] - eri[h, k, k, p]
        for k in other:
            v += eri[h, p, k, k]
        return float(exc.sign * v)
    (h1, s1), (h2, s2) = exc.holes
    (p1, _), (p2, _) = exc.particles
    if s1 == s2:
        v = eri[h1, p1, h2, p2] - eri[h1, p2, h2, p1]
    else:
        v = eri[h1, p1, h2, p2]
    return float(exc.sign * v)


def hartree_fock(ham: MolecularHamiltonian) -> Determinant:
    return Determinant(*ham.hf_occupation)
