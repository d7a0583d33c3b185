"""Regenerate the bundled FCIDUMP fixtures (development only, needs pyscf).

    python tools/make_fcidumps.py

Writes canonical-RHF integrals for small hydrogen systems in STO-6G, a CCSD
t2 file for the stretched H4 chain, and pyscf FCI energies used as an
external cross-check in the test-suite.
"""

import json
from pathlib import Path

import numpy as np
from pyscf import cc, fci, gto, scf
from pyscf.tools import fcidump

OUT = Path(__file__).resolve().parent.parent / "src" / "qscilab" / "data"

SYSTEMS = {
    "h2_0.735": [("H", (0, 0, 0)), ("H", (0, 0, 0.735))],
}
for r in (0.75, 1.0, 1.5, 2.0):
    SYSTEMS[f"h4_{r:.2f}"] = [("H", (0, 0, i * r)) for i in range(4)]
for r in (1.0, 2.0):
    SYSTEMS[f"h6_{r:.2f}"] = [("H", (0, 0, i * r)) for i in range(6)]


def main():
    OUT.mkdir(parents=True, exist_ok=True)
    refs = {}
    for name, atoms in SYSTEMS.items():
        mol = gto.M(atom=atoms, basis="sto-6g", unit="angstrom", verbose=0, symmetry=False)
        mf = scf.RHF(mol)
        mf.conv_tol = 1e-12
        mf.kernel()
        mo = mf.mo_coeff
        fcidump.from_scf(mf, str(OUT / f"{name}.fcidump"), tol=1e-14)
        h1 = mo.T @ mf.get_hcore() @ mo
        eri = mol.ao2mo(mo, compact=False).reshape((mol.nao,) * 4)
        e_fci, _ = fci.direct_spin1.kernel(h1, eri, mol.nao, mol.nelectron, ecore=mol.energy_nuc(), conv_tol=1e-13)
        mycc = cc.CCSD(mf)
        mycc.conv_tol = 1e-10
        mycc.kernel()
        refs[name] = {"e_hf": float(mf.e_tot), "e_fci": float(e_fci), "e_ccsd": float(mycc.e_tot)}
        if name == "h4_2.00":
            nocc, _, nvirt, _ = mycc.t2.shape
            lines = [f"n_occ {nocc} n_virt {nvirt}"]
            for i, j, a, b in np.ndindex(mycc.t2.shape):
                v = mycc.t2[i, j, a, b]
                if abs(v) > 1e-14 and (i, a) <= (j, b):
                    lines.append(f"{i} {j} {a} {b} {v:.16e}")
            (OUT / f"{name}.t2").write_text("\n".join(lines) + "\n")
    (OUT / "reference_energies.json").write_text(json.dumps(refs, indent=2) + "\n")


if __name__ == "__main__":
    main()
