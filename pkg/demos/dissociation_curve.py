"""
H4 dissociation with sampled subspaces
======================================

Stretching a linear H4 chain makes the Hartree-Fock determinant a poor
description of the ground state. Here we compare three energies along the
bond-length scan: Hartree-Fock, exact diagonalization, and a diagonalization
in subspaces built from 2L' LUCJ samples.
"""

import json

from qscilab import data_path, read_fcidump
from qscilab.detspace import diagonal_energy, hartree_fock
from qscilab.integrals import mp2_t2
from qscilab.lucj import build_state, params_from_t2
from qscilab.sampler import sample_exact
from qscilab.scan import fci_energy
from qscilab.subspace import BatchConfig, run_batches

reference = json.loads(data_path("reference_energies.json").read_text())

###############################################################################
# Each geometry ships as an FCIDUMP in the package data. The LUCJ parameters
# come from MP2 amplitudes, so no external quantum chemistry code is needed.

print(f"{'R/A':>5} {'E_HF':>12} {'E_FCI':>12} {'E_QSCI':>12} {'dim':>4}")
for label in ("0.75", "1.00", "1.50", "2.00"):
    ham = read_fcidump(data_path(f"h4_{label}.fcidump"))
    params = params_from_t2(mp2_t2(ham), n_layers=2, truncated=True)
    state = build_state(ham, params, "2L'")
    samples = sample_exact(state, n_shots=200, seed=0)
    result = run_batches(samples, ham, BatchConfig(n_batches=10, d=16, seed=0))
    e_hf = diagonal_energy(ham, hartree_fock(ham))
    e_fci = fci_energy(ham)
    best = result.batches[result.argmin]
    print(f"{label:>5} {e_hf:12.6f} {e_fci:12.6f} {result.energy:12.6f} {best.dimension:4d}")

###############################################################################
# The exact energies agree with the bundled reference values.

for label in ("0.75", "2.00"):
    ham = read_fcidump(data_path(f"h4_{label}.fcidump"))
    assert abs(fci_energy(ham) - reference[f"h4_{label}"]["e_fci"]) < 1e-9
