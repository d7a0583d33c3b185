"""
Fixed-draw batches on H6
========================

Instead of fixing the subspace dimension, each batch can make a fixed number
of draws from the sample set. The subspace then grows with the diversity of
the samples. A stretched H6 chain has 400 determinants in total.
"""

import json

from qscilab import data_path, read_fcidump
from qscilab.integrals import mp2_t2
from qscilab.lucj import build_state, params_from_t2
from qscilab.sampler import sample_exact
from qscilab.subspace import FIXED_DRAW, BatchConfig, pooled_strings, run_batches

ham = read_fcidump(data_path("h6_2.00.fcidump"))
e_fci = json.loads(data_path("reference_energies.json").read_text())["h6_2.00"]["e_fci"]
state = build_state(ham, params_from_t2(mp2_t2(ham), 2, truncated=True), "2L'")
samples = sample_exact(state, 2000, seed=3)
print(f"{len(samples)} distinct keys, {len(pooled_strings(samples))} distinct spin strings")

for n_draw in (5, 20, 100):
    result = run_batches(samples, ham, BatchConfig(10, FIXED_DRAW, n_draw=n_draw, seed=3))
    best = result.batches[result.argmin]
    print(f"n_draw={n_draw:4d}: {best.slots} slots, dimension {best.dimension:3d}, "
          f"error {1e3 * max(result.energy - e_fci, 0.0):.3f} mHa")
