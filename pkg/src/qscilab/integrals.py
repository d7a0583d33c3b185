"""Molecular integrals: FCIDUMP ingestion, orbital energies and MP2 doubles."""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path
from typing import Mapping

import numpy as np

DUPLICATE_TOL = 1e-12


class FcidumpError(ValueError):
    """Raised for malformed FCIDUMP input."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class T2FormatError(ValueError):
    """Raised for malformed t2 amplitude files."""


class DegenerateOrbitalError(ValueError):
    """Raised when an MP2 energy denominator is (nearly) zero."""

    def __init__(self, index: tuple[int, int, int, int], denominator: float):
        self.index = index
        self.denominator = denominator
        super().__init__(f"degenerate orbitals at (i,j,a,b)={index}: denominator {denominator:.3e}")


def canonical_index(p: int, q: int, r: int, s: int) -> tuple[int, int, int, int]:
    """Lexicographically smallest of the eight permutations of ``(pq|rs)``."""
    return min(
        (p, q, r, s), (q, p, r, s), (p, q, s, r), (q, p, s, r),
        (r, s, p, q), (s, r, p, q), (r, s, q, p), (s, r, q, p),
    )


@dataclass(frozen=True, eq=False)
class MolecularHamiltonian:
    """Spin-restricted molecular Hamiltonian in an orthonormal orbital basis.

    Two-electron integrals are in chemists' notation and stored once per
    symmetry class, keyed by :func:`canonical_index`.
    """

    n_orbitals: int
    n_alpha: int
    n_beta: int
    e_core: float
    h: np.ndarray
    g: Mapping[tuple[int, int, int, int], float] = field(default_factory=dict)

    def __post_init__(self):
        n = self.n_orbitals
        h = np.array(self.h, dtype=float)
        if h.shape != (n, n):
            raise ValueError(f"h must be {n}x{n}, got {h.shape}")
        if not np.allclose(h, h.T, atol=1e-12, rtol=0):
            raise ValueError("one-electron integrals are not symmetric")
        if not (0 < self.n_alpha <= n and 0 < self.n_beta <= n):
            raise ValueError(f"electron counts ({self.n_alpha}, {self.n_beta}) invalid for {n} orbitals")
        h.setflags(write=False)
        object.__setattr__(self, "h", h)
        g = {}
        for key, value in self.g.items():
            if any(not 0 <= k < n for k in key):
                raise ValueError(f"two-electron index {key} out of range")
            ckey = canonical_index(*key)
            if ckey in g and abs(g[ckey] - value) > DUPLICATE_TOL:
                raise ValueError(f"conflicting values for integral {ckey}")
            if value != 0.0:
                g[ckey] = float(value)
        object.__setattr__(self, "g", g)

    def eri(self, p: int, q: int, r: int, s: int) -> float:
        """Return ``(pq|rs)``."""
        return self.g.get(canonical_index(p, q, r, s), 0.0)

    @cached_property
    def eri_dense(self) -> np.ndarray:
        """Dense ``(N, N, N, N)`` array of ``(pq|rs)``; read-only."""
        n = self.n_orbitals
        out = np.zeros((n, n, n, n))
        for (p, q, r, s), v in self.g.items():
            for idx in ((p, q, r, s), (q, p, r, s), (p, q, s, r), (q, p, s, r),
                        (r, s, p, q), (s, r, p, q), (r, s, q, p), (s, r, q, p)):
                out[idx] = v
        out.setflags(write=False)
        return out

    @property
    def hf_occupation(self) -> tuple[int, int]:
        """Bitmasks of the aufbau (lowest orbitals occupied) reference."""
        return (1 << self.n_alpha) - 1, (1 << self.n_beta) - 1

    def __eq__(self, other):
        if not isinstance(other, MolecularHamiltonian):
            return NotImplemented
        return (
            self.n_orbitals == other.n_orbitals
            and self.n_alpha == other.n_alpha
            and self.n_beta == other.n_beta
            and self.e_core == other.e_core
            and np.array_equal(self.h, other.h)
            and self.g == other.g
        )

    __hash__ = None


_HEADER_KEY = re.compile(r"([A-Za-z_][A-Za-z0-9_]*)\s*=\s*([^=]*?)(?=,?\s*[A-Za-z_][A-Za-z0-9_]*\s*=|$)")


def _parse_header(text: str, line_no: int) -> dict[str, str]:
    body = re.sub(r"&FCI|&END|/\s*$", " ", text, flags=re.IGNORECASE)
    values = {}
    for key, value in _HEADER_KEY.findall(body.strip()):
        values[key.upper()] = value.strip().rstrip(",").strip()
    for key in ("NORB", "NELEC"):
        if key not in values:
            raise FcidumpError(f"header is missing {key}", line_no)
    return values


def _as_float(token: str) -> float:
    return float(token.replace("D", "E").replace("d", "e"))


def parse_fcidump(text: str) -> MolecularHamiltonian:
    """Parse an FCIDUMP document.

    Indices on disk are 1-based. ``value p q r s`` lines with all indices
    nonzero are two-electron integrals, ``value p q 0 0`` one-electron
    integrals and ``value 0 0 0 0`` the core energy. Orbital-energy lines
    (``value p 0 0 0``) are ignored.

    Raises:
        FcidumpError: on a malformed header, an index outside ``[0, NORB]`` or
            conflicting duplicate entries. The message names the line.
    """
    lines = text.splitlines()
    header_lines = []
    start = None
    for i, line in enumerate(lines):
        header_lines.append(line)
        stripped = line.strip()
        if stripped.upper().endswith("&END") or stripped == "/" or stripped.upper() == "&END":
            start = i + 1
            break
    if start is None or not header_lines[0].strip().upper().startswith("&FCI"):
        raise FcidumpError("missing &FCI ... &END header", 1)
    header = _parse_header(" ".join(header_lines), 1)
    try:
        norb = int(header["NORB"])
        nelec = int(header["NELEC"])
        ms2 = int(header.get("MS2", "0"))
    except ValueError as exc:
        raise FcidumpError(f"non-integer header value ({exc})", 1) from None
    if norb < 1 or nelec < 0 or (nelec + ms2) % 2 or abs(ms2) > nelec:
        raise FcidumpError(f"inconsistent header NORB={norb} NELEC={nelec} MS2={ms2}", 1)

    h = np.zeros((norb, norb))
    h_seen = np.zeros((norb, norb), dtype=bool)
    g: dict[tuple[int, int, int, int], float] = {}
    e_core = None
    for line_no, line in enumerate(lines[start:], start=start + 1):
        tokens = line.split()
        if not tokens:
            continue
        if len(tokens) != 5:
            raise FcidumpError(f"expected 'value p q r s', got {line.strip()!r}", line_no)
        try:
            value = _as_float(tokens[0])
            p, q, r, s = (int(t) for t in tokens[1:])
        except ValueError:
            raise FcidumpError(f"unparseable entry {line.strip()!r}", line_no) from None
        if any(not 0 <= k <= norb for k in (p, q, r, s)):
            raise FcidumpError(f"index out of range [0, {norb}]", line_no)
        if p and q and r and s:
            key = canonical_index(p - 1, q - 1, r - 1, s - 1)
            if key in g and abs(g[key] - value) > DUPLICATE_TOL:
                raise FcidumpError(f"conflicting duplicate for ({p}{q}|{r}{s})", line_no)
            g[key] = value
        elif p and q and not r and not s:
            a, b = p - 1, q - 1
            if h_seen[a, b] and abs(h[a, b] - value) > DUPLICATE_TOL:
                raise FcidumpError(f"conflicting duplicate for h({p},{q})", line_no)
            h[a, b] = h[b, a] = value
            h_seen[a, b] = h_seen[b, a] = True
        elif not (p or q or r or s):
            if e_core is not None and abs(e_core - value) > DUPLICATE_TOL:
                raise FcidumpError("conflicting core energy", line_no)
            e_core = value
        elif p and not (q or r or s):
            continue
        else:
            raise FcidumpError(f"unsupported index pattern {p} {q} {r} {s}", line_no)
    return MolecularHamiltonian(
        n_orbitals=norb,
        n_alpha=(nelec + ms2) // 2,
        n_beta=(nelec - ms2) // 2,
        e_core=0.0 if e_core is None else e_core,
        h=h,
        g=g,
    )


def read_fcidump(path: str | Path) -> MolecularHamiltonian:
    return parse_fcidump(Path(path).read_text())


def format_fcidump(ham: MolecularHamiltonian) -> str:
    """Serialize to FCIDUMP text (one line per symmetry-unique entry)."""
    n = ham.n_orbitals
    out = [
        f" &FCI NORB={n},NELEC={ham.n_alpha + ham.n_beta},MS2={ham.n_alpha - ham.n_beta},",
        "  ORBSYM=" + ",".join("1" * n) + ",",
        "  ISYM=1,",
        " &END",
    ]
    for (p, q, r, s) in sorted(ham.g):
        out.append(f"{ham.g[(p, q, r, s)]!r:>24} {p + 1:4d} {q + 1:4d} {r + 1:4d} {s + 1:4d}")
    for p in range(n):
        for q in range(p + 1):
            if ham.h[p, q] != 0.0:
                out.append(f"{float(ham.h[p, q])!r:>24} {p + 1:4d} {q + 1:4d}    0    0")
    out.append(f"{float(ham.e_core)!r:>24}    0    0    0    0")
    return "\n".join(out) + "\n"


def write_fcidump(ham: MolecularHamiltonian, path: str | Path) -> None:
    Path(path).write_text(format_fcidump(ham))


def fock_diagonal(ham: MolecularHamiltonian) -> np.ndarray:
    """Diagonal of the closed-shell Fock operator.

    Only meaningful as orbital energies when the orbitals are the canonical
    RHF orbitals of these integrals; that is assumed, not checked.
    """
    eri = ham.eri_dense
    occ = slice(0, ham.n_alpha)
    coulomb = np.einsum("ppii->p", eri[:, :, occ, occ])
    exchange = np.einsum("piip->p", eri[:, occ, occ, :])
    return np.diag(ham.h) + 2.0 * coulomb - exchange


@dataclass(frozen=True, eq=False)
class T2Tensor:
    """Restricted doubles amplitudes ``t[i, j, a, b]`` (virtual indices start at 0)."""

    amplitudes: np.ndarray

    def __post_init__(self):
        t = np.array(self.amplitudes, dtype=float)
        if t.ndim != 4 or t.shape[0] != t.shape[1] or t.shape[2] != t.shape[3]:
            raise ValueError(f"t2 must have shape (n_occ, n_occ, n_virt, n_virt), got {t.shape}")
        t.setflags(write=False)
        object.__setattr__(self, "amplitudes", t)

    @property
    def n_occ(self) -> int:
        return self.amplitudes.shape[0]

    @property
    def n_virt(self) -> int:
        return self.amplitudes.shape[2]

    def exchange_asymmetry(self) -> float:
        t = self.amplitudes
        return float(np.max(np.abs(t - t.transpose(1, 0, 3, 2)), initial=0.0))

    def __eq__(self, other):
        if not isinstance(other, T2Tensor):
            return NotImplemented
        return np.array_equal(self.amplitudes, other.amplitudes)

    __hash__ = None


def mp2_t2(ham: MolecularHamiltonian, eps: np.ndarray | None = None, threshold: float = 1e-8) -> T2Tensor:
    """First-order doubles amplitudes ``(ia|jb) / (e_i + e_j - e_a - e_b)``.

    Raises:
        DegenerateOrbitalError: if any denominator is below ``threshold``.
    """
    if eps is None:
        eps = fock_diagonal(ham)
    eps = np.asarray(eps, dtype=float)
    nocc = ham.n_alpha
    eri = ham.eri_dense
    ovov = eri[:nocc, nocc:, :nocc, nocc:]  # (i a | j b)
    e_occ, e_vir = eps[:nocc], eps[nocc:]
    denom = (
        e_occ[:, None, None, None] + e_occ[None, :, None, None]
        - e_vir[None, None, :, None] - e_vir[None, None, None, :]
    )
    small = np.abs(denom) <= threshold
    if small.any():
        idx = tuple(int(k) for k in np.argwhere(small)[0])
        raise DegenerateOrbitalError(idx, float(denom[idx]))
    t = ovov.transpose(0, 2, 1, 3) / denom
    # exact exchange symmetry (pairs are equal up to rounding already)
    t = 0.5 * (t + t.transpose(1, 0, 3, 2))
    return T2Tensor(t)


def parse_t2(text: str) -> T2Tensor:
    """Parse a t2 file: header ``n_occ <n> n_virt <m>`` then ``i j a b value`` lines.

    The exchange partner ``t[j, i, b, a]`` of every listed entry is filled in.
    """
    rows = [(k, line.split('#', 1)[0].split()) for k, line in enumerate(text.splitlines(), start=1)]
    rows = [(k, toks) for k, toks in rows if toks]
    if not rows:
        raise T2FormatError("missing header")
    k0, head = rows[0]
    try:
        fields = dict(zip(head[::2], head[1::2]))
        nocc, nvirt = int(fields["n_occ"]), int(fields["n_virt"])
    except (KeyError, ValueError):
        raise T2FormatError(f"line {k0}: expected 'n_occ <n> n_virt <m>'") from None
    t = np.zeros((nocc, nocc, nvirt, nvirt))
    seen = np.zeros(t.shape, dtype=bool)
    for k, toks in rows[1:]:
        if len(toks) != 5:
            raise T2FormatError(f"line {k}: expected 'i j a b value'")
        try:
            i, j, a, b = (int(x) for x in toks[:4])
            value = float(toks[4])
        except ValueError:
            raise T2FormatError(f"line {k}: unparseable entry") from None
        if not (0 <= i < nocc and 0 <= j < nocc and 0 <= a < nvirt and 0 <= b < nvirt):
            raise T2FormatError(f"line {k}: index out of declared range")
        for idx in ((i, j, a, b), (j, i, b, a)):
            if seen[idx] and abs(t[idx] - value) > DUPLICATE_TOL:
                raise T2FormatError(f"line {k}: conflicts with symmetric partner {idx}")
            t[idx] = value
            seen[idx] = True
    return T2Tensor(t)


def format_t2(t2: T2Tensor) -> str:
    lines = [f"n_occ {t2.n_occ} n_virt {t2.n_virt}"]
    for i, j, a, b in np.ndindex(t2.amplitudes.shape):
        v = t2.amplitudes[i, j, a, b]
        if v != 0.0 and (i, a) <= (j, b):
            lines.append(f"{i} {j} {a} {b} {float(v)!r}")
    return "\n".join(lines) + "\n"


def read_t2(path: str | Path) -> T2Tensor:
    return parse_t2(Path(path).read_text())


def write_t2(t2: T2Tensor, path: str | Path) -> None:
    Path(path).write_text(format_t2(t2))
