import sys
from pathlib import Path

import numpy as np
import pytest
import scipy.sparse as sp

sys.path.insert(0, str(Path(__file__).parent))
from conftest import REFERENCE, dense_fci, full_space  # noqa: E402
from oracles import annihilator  # noqa: E402

from qscilab import data_path, read_fcidump
from qscilab.detspace import Determinant, hartree_fock, join
from qscilab.eig import (
    CIVector,
    ConvergenceError,
    build_hamiltonian,
    davidson,
    ground_state,
    occupations,
    solve_space,
)


@pytest.mark.parametrize("name", ["h2_0.735", "h4_0.75", "h4_1.00", "h4_1.50", "h4_2.00", "h6_1.00", "h6_2.00"])
def test_fci_matches_reference(name):
    ham = read_fcidump(data_path(f"{name}.fcidump"))
    e, _ = solve_space(full_space(ham), ham)
    assert e == pytest.approx(REFERENCE[name]["e_fci"], abs=1e-9)


def test_davidson_matches_dense_on_random_matrices():
    # diagonally dominant, like CI matrices in a determinant basis
    rng = np.random.default_rng(3)
    for n in (2, 7, 60, 300, 1500):
        a = 0.05 * rng.normal(size=(n, n))
        a = a + a.T + np.diag(rng.uniform(-2, 5, n))
        e, v = davidson(sp.csr_matrix(a), tol=1e-9)
        assert e == pytest.approx(np.linalg.eigvalsh(a)[0], abs=1e-9)
        assert np.linalg.norm(a @ v - e * v) < 1e-8


def test_davidson_one_by_one():
    e, v = ground_state(sp.csr_matrix([[-0.5]]))
    assert e == -0.5 and v.tolist() == [1.0]


def test_convergence_error_reports_residual():
    rng = np.random.default_rng(0)
    a = rng.normal(size=(80, 80))
    a = a + a.T
    with pytest.raises(ConvergenceError) as exc:
        davidson(sp.csr_matrix(a), tol=1e-14, max_iter=3)
    assert exc.value.residual > 0


def test_ground_state_methods_agree(h6):
    space = full_space(h6)
    hs = build_hamiltonian(space, h6)
    e1, v1 = ground_state(hs, space, 6, tol=1e-10)
    e2, v2 = ground_state(hs, space, 6, method="dense")
    assert e1 == pytest.approx(e2, abs=1e-10)
    assert abs(abs(v1.overlap(v2)) - 1) < 1e-9
    assert v1.norm == pytest.approx(1.0)
    with pytest.raises(ValueError):
        ground_state(hs, method="lanczos")


def test_grouped_and_all_pairs_scans_agree(h6):
    rng = np.random.default_rng(11)
    space = full_space(h6)
    for _ in range(3):
        pick = [space[i] for i in rng.choice(len(space), 200, replace=False)]
        a = build_hamiltonian(pick, h6, grouped=True)
        b = build_hamiltonian(pick, h6, grouped=False)
        assert (a != b).nnz == 0


def test_variational_bound_on_nested_subspaces(h4):
    e_fci = REFERENCE["h4_2.00"]["e_fci"]
    space = full_space(h4)
    rng = np.random.default_rng(5)
    order = rng.permutation(len(space))
    hf = hartree_fock(h4)
    prev = np.inf
    for k in (1, 5, 12, 20, 30, 36):
        sub = {space[i] for i in order[:k]} | {hf}
        e, _ = solve_space(sub, h4)
        assert e >= e_fci - 1e-10
        assert e <= prev + 1e-10
        prev = e


def test_singleton_subspace_is_diagonal_element(h4):
    hf = hartree_fock(h4)
    e, v = solve_space([hf], h4)
    assert e == pytest.approx(REFERENCE["h4_2.00"]["e_hf"], abs=1e-9)
    assert v.dets == (hf,)


def test_permutation_invariance(h4):
    space = full_space(h4)
    rng = np.random.default_rng(1)
    e0, v0 = ground_state(build_hamiltonian(space, h4), space, 4)
    shuffled = [space[i] for i in rng.permutation(len(space))]
    e1, v1 = ground_state(build_hamiltonian(shuffled, h4), shuffled, 4)
    assert e1 == pytest.approx(e0, abs=1e-10)
    assert abs(abs(v0.overlap(v1)) - 1) < 1e-9


def test_occupations_against_fock_density(h2):
    """Occupations equal <psi|n_p|psi> with explicit number operators."""
    stretched = read_fcidump(data_path("h4_2.00.fcidump"))
    for ham in (h2, stretched):
        norb = ham.n_orbitals
        e, vec = solve_space(full_space(ham), ham)
        n_modes = 2 * norb
        psi = np.zeros(1 << n_modes)
        for d, c in zip(vec.dets, vec.amplitudes):
            psi[join(d.alpha, d.beta, norb)] = c.real
        occ = occupations([vec])
        for p in range(norb):
            for s in range(2):
                a = annihilator(p + s * norb, n_modes)
                assert occ[p, s] == pytest.approx(psi @ (a.T @ a) @ psi, abs=1e-12)
        assert occ.sum(axis=0) == pytest.approx([ham.n_alpha, ham.n_beta])


def test_occupations_average_over_states():
    a = CIVector((Determinant(0b01, 0b01),), np.array([1.0]), 2)
    b = CIVector((Determinant(0b10, 0b01),), np.array([1.0]), 2)
    np.testing.assert_allclose(occupations([a, b]), [[0.5, 1.0], [0.5, 0.0]])
    with pytest.raises(ValueError):
        occupations([])


def test_civector_validation():
    with pytest.raises(ValueError):
        CIVector((Determinant(2, 1), Determinant(1, 1)), np.ones(2), 2)
    v = CIVector.from_unsorted([Determinant(2, 1), Determinant(1, 1)], np.array([0.6, 0.8]), 2)
    assert v.dets == (Determinant(1, 1), Determinant(2, 1))
    assert v.as_dict()[Determinant(2, 1)] == 0.6
    assert v.support(0.5) == [Determinant(1, 1)]


def test_mixed_electron_counts_rejected(h2):
    with pytest.raises(ValueError):
        build_hamiltonian([Determinant(1, 1), Determinant(3, 1)], h2)


def test_dense_fci_helper_consistent(h2):
    e, _, _ = dense_fci(h2)
    assert e == pytest.approx(REFERENCE["h2_0.735"]["e_fci"], abs=1e-12)
