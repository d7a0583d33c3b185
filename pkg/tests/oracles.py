"""Independent reference implementations used only by the tests.

Everything here is deliberately brute force: explicit second-quantized
operators on the full Fock space, determinant minors for orbital rotations.
None of it shares code paths with the package beyond the bit conventions.
"""

from itertools import combinations

import numpy as np


def mode_index(p, spin, norb):
    """Mode ordering a0..a(N-1), b0..b(N-1); matches the raw bit layout."""
    return p + spin * norb


def annihilator(mode, n_modes):
    """Dense matrix of a_mode on the 2**n_modes occupation basis.

    Basis state ``x`` is (a+_0)^{x_0} (a+_1)^{x_1} ... |0>, so removing mode
    m picks up (-1)^(number of occupied modes below m).
    """
    dim = 1 << n_modes
    a = np.zeros((dim, dim))
    for x in range(dim):
        if x >> mode & 1:
            below = bin(x & ((1 << mode) - 1)).count("1")
            a[x ^ (1 << mode), x] = (-1) ** below
    return a


def fock_hamiltonian(h, eri, e_core, norb):
    """Full Fock-space matrix of H = sum h a+a + 1/2 sum (pq|rs) a+_p a+_r a_s a_q."""
    n_modes = 2 * norb
    ann = [annihilator(m, n_modes) for m in range(n_modes)]
    cre = [a.T for a in ann]
    dim = 1 << n_modes
    H = e_core * np.eye(dim)
    for s1 in range(2):
        for p in range(norb):
            for q in range(norb):
                if h[p, q]:
                    H += h[p, q] * cre[mode_index(p, s1, norb)] @ ann[mode_index(q, s1, norb)]
    for s1 in range(2):
        for s2 in range(2):
            for p in range(norb):
                for q in range(norb):
                    for r in range(norb):
                        for s in range(norb):
                            v = eri[p, q, r, s]
                            if v:
                                H += 0.5 * v * (
                                    cre[mode_index(p, s1, norb)]
                                    @ cre[mode_index(r, s2, norb)]
                                    @ ann[mode_index(s, s2, norb)]
                                    @ ann[mode_index(q, s1, norb)]
                                )
    return H


def random_integrals(norb, rng):
    """Random real integrals with full 8-fold symmetry."""
    h = rng.normal(size=(norb, norb))
    h = h + h.T
    eri = rng.normal(size=(norb,) * 4)
    eri = (
        eri + eri.transpose(1, 0, 2, 3) + eri.transpose(0, 1, 3, 2) + eri.transpose(1, 0, 3, 2)
    )
    eri = eri + eri.transpose(2, 3, 0, 1)
    return h, eri


def strings(norb, nelec):
    return sorted(sum(1 << p for p in c) for c in combinations(range(norb), nelec))


def rotate_dense(amps, norb, n_alpha, n_beta, u):
    """Apply the orbital rotation a+_p -> sum_q u[q, p] a+_q via determinant minors.

    ``amps`` is a (n_astr, n_bstr) grid over all strings in increasing order.
    """
    sa = strings(norb, n_alpha)
    sb = strings(norb, n_beta)

    def occ(x):
        return [p for p in range(norb) if x >> p & 1]

    def minor_matrix(ss):
        m = np.zeros((len(ss), len(ss)), dtype=complex)
        for i, x in enumerate(ss):
            for j, y in enumerate(ss):
                m[i, j] = np.linalg.det(u[np.ix_(occ(x), occ(y))]) if occ(x) else 1.0
        return m

    return minor_matrix(sa) @ amps @ minor_matrix(sb).T
