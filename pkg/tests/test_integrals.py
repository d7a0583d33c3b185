import itertools
import sys
from pathlib import Path

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

sys.path.insert(0, str(Path(__file__).parent))
from oracles import annihilator, fock_hamiltonian, mode_index  # noqa: E402

from qscilab import data_path
from qscilab.integrals import (
    DegenerateOrbitalError,
    FcidumpError,
    MolecularHamiltonian,
    T2FormatError,
    T2Tensor,
    format_fcidump,
    format_t2,
    fock_diagonal,
    mp2_t2,
    parse_fcidump,
    parse_t2,
)

HEADER = " &FCI NORB={norb},NELEC={nelec},MS2={ms2},\n  ORBSYM=1,\n  ISYM=1,\n &END\n"


def header(norb=2, nelec=2, ms2=0):
    return HEADER.format(norb=norb, nelec=nelec, ms2=ms2)


def test_core_energy_only():
    ham = parse_fcidump(header(1, 2) + "0.5 0 0 0 0\n")
    assert ham.e_core == 0.5
    assert not ham.h.any()
    assert ham.g == {}


def test_symmetry_expansion():
    ham = parse_fcidump(header(2, 2) + "0.25 1 2 1 2\n")
    for p, q, r, s in ((0, 1, 0, 1), (1, 0, 1, 0), (0, 1, 1, 0), (1, 0, 0, 1)):
        assert ham.eri(p, q, r, s) == 0.25
        assert ham.eri_dense[p, q, r, s] == 0.25
    assert ham.eri(0, 0, 1, 1) == 0.0


def test_electron_counts_from_ms2():
    ham = parse_fcidump(header(3, 3, 1) + "0.1 1 1 0 0\n")
    assert (ham.n_alpha, ham.n_beta) == (2, 1)


def test_fortran_exponent():
    ham = parse_fcidump(header(1, 2) + "1.5D-01 1 1 0 0\n")
    assert ham.h[0, 0] == pytest.approx(0.15)


@pytest.mark.parametrize(
    "body, line",
    [
        ("0.1 1 3 1 1\n", 5),  # index out of range
        ("0.1 1 2 1 2\n0.2 2 1 2 1\n", 6),  # conflicting duplicate
        ("0.1 1 1\n", 5),  # truncated entry
        ("0.1 1 1 0 0\n0.3 1 1 0 0\n", 6),
    ],
)
def test_parse_errors_name_line(body, line):
    with pytest.raises(FcidumpError) as exc:
        parse_fcidump(header() + body)
    assert exc.value.line == line
    assert f"line {line}" in str(exc.value)


def test_malformed_header():
    with pytest.raises(FcidumpError):
        parse_fcidump("NORB=2\n0.1 1 1 1 1\n")
    with pytest.raises(FcidumpError):
        parse_fcidump(" &FCI NELEC=2, &END\n")


def test_consistent_duplicates_accepted(h2):
    # the bundled file lists (11|22) and (22|11) separately
    assert h2.eri(0, 0, 1, 1) == h2.eri(1, 1, 0, 0)


@pytest.mark.parametrize("name", ["h2_0.735", "h4_2.00", "h6_1.00"])
def test_fcidump_round_trip(name):
    ham = parse_fcidump(data_path(f"{name}.fcidump").read_text())
    again = parse_fcidump(format_fcidump(ham))
    assert again == ham


@pytest.mark.parametrize("name", ["h4_1.00", "h6_2.00"])
def test_all_eight_permutations_agree(name):
    ham = parse_fcidump(data_path(f"{name}.fcidump").read_text())
    eri = ham.eri_dense
    for (p, q, r, s) in ham.g:
        vals = {eri[i] for i in ((p, q, r, s), (q, p, r, s), (p, q, s, r), (q, p, s, r),
                                 (r, s, p, q), (s, r, p, q), (r, s, q, p), (s, r, q, p))}
        assert len(vals) == 1


def test_fock_diagonal_trivial():
    ham = MolecularHamiltonian(2, 1, 1, 0.0, np.diag([-1.25, -0.47]), {})
    np.testing.assert_array_equal(fock_diagonal(ham), [-1.25, -0.47])
    zero = MolecularHamiltonian(3, 1, 1, 0.0, np.zeros((3, 3)), {})
    np.testing.assert_array_equal(fock_diagonal(zero), np.zeros(3))


@pytest.mark.parametrize("name", ["h2_0.735", "h4_2.00"])
def test_fock_diagonal_loop_oracle(name):
    ham = parse_fcidump(data_path(f"{name}.fcidump").read_text())
    expected = [
        ham.h[p, p] + sum(2 * ham.eri(p, p, i, i) - ham.eri(p, i, i, p) for i in range(ham.n_alpha))
        for p in range(ham.n_orbitals)
    ]
    np.testing.assert_allclose(fock_diagonal(ham), expected, atol=1e-14)


def test_fock_diagonal_is_canonical_for_bundled_rhf(h4):
    # canonical RHF orbitals: off-diagonal Fock elements vanish
    eri = h4.eri_dense
    occ = slice(0, h4.n_alpha)
    fock = h4.h + 2 * np.einsum("pqii->pq", eri[:, :, occ, occ]) - np.einsum("piiq->pq", eri[:, occ, occ, :])
    np.testing.assert_allclose(fock, np.diag(fock_diagonal(h4)), atol=1e-8)


def test_mp2_zero_integrals():
    ham = MolecularHamiltonian(3, 1, 1, 0.0, np.diag([-1.0, 0.5, 0.7]), {})
    assert not mp2_t2(ham).amplitudes.any()


def test_mp2_single_entry():
    # (ia|jb) = 0.1 with orbital energies giving denominator -1.0
    ham = MolecularHamiltonian(2, 1, 1, 0.0, np.zeros((2, 2)), {(0, 1, 0, 1): 0.1})
    t = mp2_t2(ham, eps=np.array([0.0, 0.5]))
    assert t.amplitudes[0, 0, 0, 0] == pytest.approx(-0.1)


def test_mp2_degenerate_denominator():
    ham = MolecularHamiltonian(2, 1, 1, 0.0, np.zeros((2, 2)), {(0, 1, 0, 1): 0.1})
    with pytest.raises(DegenerateOrbitalError) as exc:
        mp2_t2(ham, eps=np.array([0.3, 0.3]))
    assert exc.value.index == (0, 0, 0, 0)


def test_mp2_h2_matches_first_order_perturbation(h2):
    """t equals <D|H|HF> / (E0(HF) - E0(D)) from the explicit operator matrix."""
    norb = 2
    H = fock_hamiltonian(h2.h, h2.eri_dense, h2.e_core, norb)
    hf = 0b0101  # a0, b0
    dbl = 0b1010  # a1, b1
    coupling = H[dbl, hf]
    # orbital energies from the Fock operator's diagonal, built with the
    # operator algebra rather than the closed formula
    ann = [annihilator(m, 2 * norb) for m in range(2 * norb)]
    eps = []
    for p in range(norb):
        # eps_p = E(HF + electron in p, beta) - E(HF) for virtual, E(HF) - E(HF - electron) for occupied
        m = mode_index(p, 1, norb)
        if p < h2.n_alpha:
            removed = ann[m] @ np.eye(16)[:, hf]
            idx = int(np.flatnonzero(removed)[0])
            eps.append(H[hf, hf] - H[idx, idx])
        else:
            added = ann[m].T @ np.eye(16)[:, hf]
            idx = int(np.flatnonzero(added)[0])
            eps.append(H[idx, idx] - H[hf, hf])
    np.testing.assert_allclose(eps, fock_diagonal(h2), atol=1e-12)
    expected = coupling / (2 * eps[0] - 2 * eps[1])
    assert mp2_t2(h2).amplitudes[0, 0, 0, 0] == pytest.approx(expected, abs=1e-14)


@pytest.mark.parametrize("name", ["h4_1.00", "h6_2.00"])
def test_mp2_exchange_symmetry_exhaustive(name):
    ham = parse_fcidump(data_path(f"{name}.fcidump").read_text())
    t = mp2_t2(ham).amplitudes
    for i, j, a, b in itertools.product(range(t.shape[0]), range(t.shape[0]), range(t.shape[2]), range(t.shape[2])):
        assert t[i, j, a, b] == t[j, i, b, a]


def test_parse_t2_empty_body():
    t = parse_t2("n_occ 2 n_virt 3\n")
    assert t.amplitudes.shape == (2, 2, 3, 3)
    assert not t.amplitudes.any()


def test_parse_t2_symmetry_fill():
    t = parse_t2("n_occ 2 n_virt 3\n0 1 2 0 0.05\n").amplitudes
    assert t[0, 1, 2, 0] == 0.05
    assert t[1, 0, 0, 2] == 0.05
    assert np.count_nonzero(t) == 2


def test_parse_t2_errors():
    with pytest.raises(T2FormatError):
        parse_t2("n_occ 1 n_virt 1\n0 0 1 0 0.1\n")
    with pytest.raises(T2FormatError):
        parse_t2("n_occ 2 n_virt 2\n0 1 1 0 0.1\n1 0 0 1 0.2\n")
    with pytest.raises(T2FormatError):
        parse_t2("0 0 0 0 0.1\n")


@pytest.mark.parametrize("name", ["h4_2.00", "h6_1.00"])
def test_t2_round_trip(name):
    t = mp2_t2(parse_fcidump(data_path(f"{name}.fcidump").read_text()))
    assert parse_t2(format_t2(t)) == t


def test_bundled_ccsd_t2_file():
    t = parse_t2(data_path("h4_2.00.t2").read_text())
    assert (t.n_occ, t.n_virt) == (2, 2)
    assert t.exchange_asymmetry() == 0.0


@settings(max_examples=30, deadline=None)
@given(st.integers(2, 4).flatmap(lambda n: st.tuples(st.just(n), st.lists(st.floats(-1, 1), min_size=n**4, max_size=n**4))))
def test_random_integral_serialization_round_trip(data):
    n, flat = data
    eri = np.array(flat).reshape((n,) * 4)
    g = {}
    for idx in itertools.product(range(n), repeat=4):
        from qscilab.integrals import canonical_index

        g.setdefault(canonical_index(*idx), eri[idx])
    ham = MolecularHamiltonian(n, 1, 1, 0.1, np.eye(n), g)
    assert parse_fcidump(format_fcidump(ham)) == ham
