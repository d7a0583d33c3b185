"""
Recovery from uniformly random bitstrings
=========================================

Replace the quantum samples with uniformly random 8-bit strings plus one
Hartree-Fock count. Most random strings have the wrong electron counts, yet
recovery steered by the occupations still finds the important determinants
of a small system.
"""

import json

from qscilab import data_path, read_fcidump
from qscilab.detspace import hartree_fock
from qscilab.recovery import RecoveryConfig, filter_physical, recover_loop
from qscilab.sampler import random_uniform_set
from qscilab.subspace import BatchConfig

ham = read_fcidump(data_path("h4_2.00.fcidump"))
e_fci = json.loads(data_path("reference_energies.json").read_text())["h4_2.00"]["e_fci"]

for seed in range(3):
    raw = random_uniform_set(8, 20, include_hf=hartree_fock(ham), seed=seed)
    kept = len(filter_physical(raw, ham.n_alpha, ham.n_beta))
    steps = recover_loop(raw, ham, RecoveryConfig(2, seed=seed, batch=BatchConfig(10, d=36, seed=seed)))
    print(f"seed {seed}: {kept} of {len(raw)} keys physical; "
          + ", ".join(f"it{s.iteration} {1e3 * (s.energy - e_fci):.3f} mHa" for s in steps))
