"""Local unitary cluster Jastrow (LUCJ) states built exactly in the determinant basis.

Operator conventions: an orbital-rotation generator ``K`` acts as
``K^ = sum_pq K[p, q] a+_p a_q`` on both spin sectors, so that
``exp(K^) a+_p exp(-K^) = sum_q U[q, p] a+_q`` with ``U = expm(K)``. A layer is
``exp(K^) exp(iJ^) exp(-K^)`` with

    J^ = sum_pq J_ss[p, q] (n_pa n_qa + n_pb n_qb) + J_os[p, q] (n_pa n_qb + n_pb n_qa).
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np
import scipy.linalg

from .detspace import Determinant, enumerate_strings
from .eig import CIVector
from .integrals import MolecularHamiltonian, T2Tensor

MAX_STATE_ORBITALS = 14
MODES = ("1L", "2L", "2L'")


class CapacityError(RuntimeError):
    """Requested object does not fit the configured size limits."""


@dataclass(frozen=True, eq=False)
class LucjLayer:
    K: np.ndarray
    J_ss: np.ndarray
    J_os: np.ndarray

    def __post_init__(self):
        K = np.array(self.K, dtype=complex)
        J_ss = np.array(self.J_ss, dtype=float)
        J_os = np.array(self.J_os, dtype=float)
        n = K.shape[0]
        if K.shape != (n, n) or J_ss.shape != (n, n) or J_os.shape != (n, n):
            raise ValueError("layer matrices must share one square shape")
        check_anti_hermitian(K)
        for name, J in (("J_ss", J_ss), ("J_os", J_os)):
            if np.max(np.abs(J - J.T), initial=0.0) > 1e-12:
                raise ValueError(f"{name} is not symmetric")
        object.__setattr__(self, "K", K)
        object.__setattr__(self, "J_ss", J_ss)
        object.__setattr__(self, "J_os", J_os)

    @property
    def n_orbitals(self) -> int:
        return self.K.shape[0]

    def localized(self) -> LucjLayer:
        return LucjLayer(self.K, self.J_ss * same_spin_mask(self.n_orbitals), self.J_os * opposite_spin_mask(self.n_orbitals))


@dataclass(frozen=True, eq=False)
class LucjParams:
    layers: tuple[LucjLayer, ...]
    final_rotation: np.ndarray | None = None

    def __post_init__(self):
        layers = tuple(self.layers)
        if not layers:
            raise ValueError("at least one layer is required")
        object.__setattr__(self, "layers", layers)
        if self.final_rotation is not None:
            K = np.array(self.final_rotation, dtype=complex)
            check_anti_hermitian(K)
            object.__setattr__(self, "final_rotation", K)

    @property
    def n_orbitals(self) -> int:
        return self.layers[0].n_orbitals


def check_anti_hermitian(K: np.ndarray, tol: float = 1e-12) -> None:
    if np.max(np.abs(K + K.conj().T), initial=0.0) > tol:
        raise ValueError("orbital-rotation generator is not anti-Hermitian")


def same_spin_mask(n: int) -> np.ndarray:
    idx = np.arange(n)
    return (np.abs(idx[:, None] - idx[None, :]) == 1).astype(float)


def opposite_spin_mask(n: int) -> np.ndarray:
    return np.eye(n)


# --------------------------------------------------------------------------
# parameters from t2


def _generator_from_unitary(v: np.ndarray) -> np.ndarray:
    k = scipy.linalg.logm(v)
    return 0.5 * (k - k.conj().T)


def _fix_column_phases(v: np.ndarray) -> np.ndarray:
    k = np.argmax(np.abs(v), axis=0)
    ph = v[k, np.arange(v.shape[1])]
    return v * (np.abs(ph) / ph)[None, :]


def double_factorize_t2(t2: T2Tensor, tol: float = 1e-10):
    """Eigen-decomposition of the doubles matrix ``M[(i,a),(j,b)] = t[i,j,a,b]``.

    Returns ``(eta, vectors)`` sorted by ``|eta|`` descending, keeping
    eigenvalues above ``tol``; ``vectors[:, mu]`` reshapes to ``(n_occ, n_virt)``.
    """
    no, nv = t2.n_occ, t2.n_virt
    m = t2.amplitudes.transpose(0, 2, 1, 3).reshape(no * nv, no * nv)
    eta, g = np.linalg.eigh(0.5 * (m + m.T))
    order = np.argsort(-np.abs(eta), kind="stable")
    eta, g = eta[order], g[:, order]
    keep = np.abs(eta) > tol
    return eta[keep], g[:, keep]


def _terms_from_factor(eta: float, gvec: np.ndarray, no: int, nv: int):
    """The two Hermitian-square terms reproducing ``eta/2 (S^2 - S+^2)``.

    With ``S = sum g_ia E_ai``, ``X = S + S+`` and ``Y = i(S - S+)``:
    ``S^2 - S+^2 = -i/4 [(X + Y)^2 - (X - Y)^2]``, so each factor contributes
    two layers with coefficients ``-eta/8`` and ``+eta/8``.
    """
    n = no + nv
    g = gvec.reshape(no, nv)
    out = []
    for phase, coeff in ((1 + 1j, -eta / 8), (1 - 1j, eta / 8)):
        G = np.zeros((n, n), dtype=complex)
        G[no:, :no] = phase * g.T
        G[:no, no:] = np.conj(phase) * g
        d, v = np.linalg.eigh(G)
        v = _fix_column_phases(v)
        J = coeff * np.outer(d, d)
        out.append(LucjLayer(_generator_from_unitary(v), J, J))
    return out


def params_from_t2(t2: T2Tensor, n_layers: int = 2, local: bool = False, truncated: bool = False) -> LucjParams:
    """LUCJ parameters from restricted t2 amplitudes by double factorization.

    Every eigenpair of the doubles matrix yields two layers (see
    :func:`_terms_from_factor`); layers are ordered by ``|eta|`` and the
    first ``n_layers`` are kept. With ``truncated`` the last kept layer only
    contributes its orbital rotation, as ``final_rotation``.
    """
    if n_layers < 1:
        raise ValueError("n_layers must be >= 1")
    eta, g = double_factorize_t2(t2)
    n = t2.n_occ + t2.n_virt
    if eta.size == 0:
        zero = np.zeros((n, n))
        layers = [LucjLayer(zero, zero, zero) for _ in range(n_layers)]
    else:
        needed = -(-n_layers // 2)
        if needed > eta.size:
            raise ValueError(f"{n_layers} layers need {needed} factors but the doubles matrix has rank {eta.size}")
        layers = []
        for mu in range(needed):
            layers.extend(_terms_from_factor(eta[mu], g[:, mu], t2.n_occ, t2.n_virt))
        layers = layers[:n_layers]
    if local:
        layers = [layer.localized() for layer in layers]
    if truncated:
        if n_layers < 2:
            raise ValueError("the truncated ansatz needs two layers")
        return LucjParams(tuple(layers[:-1]), final_rotation=layers[-1].K)
    return LucjParams(tuple(layers))


# --------------------------------------------------------------------------
# state construction on the (alpha strings) x (beta strings) grid


@dataclass(frozen=True)
class _Space:
    norb: int
    alpha: tuple[int, ...]
    beta: tuple[int, ...]

    @classmethod
    def full(cls, norb: int, n_alpha: int, n_beta: int) -> _Space:
        return cls(norb, tuple(enumerate_strings(norb, n_alpha)), tuple(enumerate_strings(norb, n_beta)))


def givens_decomposition(u: np.ndarray):
    """Factor a unitary into nearest-neighbour two-orbital rotations and phases.

    Returns ``(rotations, phases)`` with ``u = R_1 ... R_m diag(phases)`` where
    each ``R_k`` is the identity except for the 2x2 block ``w`` on orbitals
    ``(p, p + 1)``, given as ``(p, w)``.
    """
    u = np.array(u, dtype=complex)
    n = u.shape[0]
    factors = []
    for j in range(n):
        for i in range(n - 1, j, -1):
            a, b = u[i - 1, j], u[i, j]
            if b == 0:
                continue
            r = np.hypot(abs(a), abs(b))
            g = np.array([[np.conj(a), np.conj(b)], [-b, a]]) / r
            u[[i - 1, i], :] = g @ u[[i - 1, i], :]
            factors.append((i - 1, g.conj().T))
    return factors, np.diag(u).copy()


def _string_pairs(strings: Sequence[int], p: int, q: int):
    """Index pairs (s with p occupied and q empty, partner) plus parity sign."""
    index = {s: k for k, s in enumerate(strings)}
    lo, hi = min(p, q), max(p, q)
    between = ((1 << hi) - 1) & ~((1 << (lo + 1)) - 1)
    src, dst, sign = [], [], []
    for k, s in enumerate(strings):
        if s >> p & 1 and not s >> q & 1:
            src.append(k)
            dst.append(index[s ^ (1 << p) ^ (1 << q)])
            sign.append(-1.0 if (s & between).bit_count() & 1 else 1.0)
    both = [k for k, s in enumerate(strings) if s >> p & 1 and s >> q & 1]
    return np.array(src, dtype=int), np.array(dst, dtype=int), np.array(sign), np.array(both, dtype=int)


def _rotate_sector(grid: np.ndarray, strings, p: int, q: int, w: np.ndarray, axis: int) -> np.ndarray:
    """Apply a rotation of orbitals (p, q) with block ``w`` (rows/cols ordered p, q)."""
    src, dst, sign, both = _string_pairs(strings, p, q)
    g = np.moveaxis(grid, axis, 0)
    out = g.copy()
    if src.size:
        sh = (-1,) + (1,) * (g.ndim - 1)
        x_p, x_q = g[src], g[dst]
        s = sign.reshape(sh)
        out[src] = w[0, 0] * x_p + w[0, 1] * s * x_q
        out[dst] = w[1, 0] * s * x_p + w[1, 1] * x_q
    if both.size:
        out[both] = g[both] * (w[0, 0] * w[1, 1] - w[0, 1] * w[1, 0])
    return np.moveaxis(out, 0, axis)


def _phase_sector(grid: np.ndarray, strings, phases: np.ndarray, axis: int) -> np.ndarray:
    factors = np.array([np.prod([phases[p] for p in range(len(phases)) if s >> p & 1]) for s in strings])
    shape = [1] * grid.ndim
    shape[axis] = -1
    return grid * factors.reshape(shape)


def rotate_grid(grid: np.ndarray, space: _Space, u: np.ndarray) -> np.ndarray:
    """Apply the one-body unitary ``u`` (``a+_p -> sum_q u[q,p] a+_q``) to both sectors."""
    rotations, phases = givens_decomposition(u)
    out = np.asarray(grid, dtype=complex)
    for axis, strings in ((0, space.alpha), (1, space.beta)):
        out = _phase_sector(out, strings, phases, axis)
        for p, w in reversed(rotations):
            out = _rotate_sector(out, strings, p, p + 1, w, axis)
    return out


def _occupation_matrix(strings, norb: int) -> np.ndarray:
    s = np.array(strings, dtype=np.int64)
    return ((s[:, None] >> np.arange(norb)) & 1).astype(float)


def jastrow_phases(space: _Space, J_ss: np.ndarray, J_os: np.ndarray) -> np.ndarray:
    na = _occupation_matrix(space.alpha, space.norb)
    nb = _occupation_matrix(space.beta, space.norb)
    theta_a = np.einsum("ip,pq,iq->i", na, J_ss, na)
    theta_b = np.einsum("jp,pq,jq->j", nb, J_ss, nb)
    cross = na @ (J_os + J_os.T) @ nb.T
    return theta_a[:, None] + theta_b[None, :] + cross


def _to_grid(state: CIVector, space: _Space) -> np.ndarray:
    ia = {s: k for k, s in enumerate(space.alpha)}
    ib = {s: k for k, s in enumerate(space.beta)}
    grid = np.zeros((len(space.alpha), len(space.beta)), dtype=complex)
    for d, c in zip(state.dets, state.amplitudes):
        try:
            grid[ia[d.alpha], ib[d.beta]] = c
        except KeyError:
            raise ValueError(f"determinant {d} is outside the fixed-particle-number space") from None
    return grid


def _from_grid(grid: np.ndarray, space: _Space) -> CIVector:
    dets = tuple(Determinant(a, b) for a in space.alpha for b in space.beta)
    return CIVector(dets, grid.reshape(-1), space.norb)


def _space_of(state: CIVector) -> _Space:
    if not len(state):
        raise ValueError("empty state")
    d = state.dets[0]
    return _Space.full(state.n_orbitals, d.alpha.bit_count(), d.beta.bit_count())


def apply_orbital_rotation(state: CIVector, K: np.ndarray, direction: int = 1) -> CIVector:
    """Return ``exp(direction * K^) |state>`` over the full fixed-number space."""
    K = np.asarray(K, dtype=complex)
    check_anti_hermitian(K, tol=1e-10)
    if direction not in (1, -1):
        raise ValueError("direction must be +1 or -1")
    space = _space_of(state)
    grid = rotate_grid(_to_grid(state, space), space, scipy.linalg.expm(direction * K))
    return _from_grid(grid, space)


def apply_jastrow(state: CIVector, J_ss: np.ndarray, J_os: np.ndarray) -> CIVector:
    """Multiply every amplitude by ``exp(i theta_D)`` with ``theta_D = <D|J^|D>``."""
    norb = state.n_orbitals
    sa = sorted({d.alpha for d in state.dets})
    sb = sorted({d.beta for d in state.dets})
    space = _Space(norb, tuple(sa), tuple(sb))
    theta = jastrow_phases(space, np.asarray(J_ss, float), np.asarray(J_os, float))
    ia = {s: k for k, s in enumerate(sa)}
    ib = {s: k for k, s in enumerate(sb)}
    phases = np.array([theta[ia[d.alpha], ib[d.beta]] for d in state.dets])
    return CIVector(state.dets, state.amplitudes * np.exp(1j * phases), norb)


def build_state(ham: MolecularHamiltonian, params: LucjParams, mode: str = "2L'") -> CIVector:
    """Exact LUCJ state ``prod_mu exp(K_mu) exp(iJ_mu) exp(-K_mu) |HF>``.

    ``mode`` selects ``"1L"`` (first layer), ``"2L"`` (two layers) or
    ``"2L'"`` (first layer followed by the bare rotation ``exp(K_2)``).
    """
    if mode not in MODES:
        raise ValueError(f"mode must be one of {MODES}")
    norb = ham.n_orbitals
    if norb > MAX_STATE_ORBITALS:
        raise CapacityError(f"full-space LUCJ states are limited to {MAX_STATE_ORBITALS} orbitals, got {norb}")
    if params.n_orbitals != norb:
        raise ValueError("parameter and Hamiltonian orbital counts differ")
    if mode == "2L" and len(params.layers) < 2:
        raise ValueError("mode 2L needs two layers")
    final = None
    if mode == "1L":
        layers = params.layers[:1]
    elif mode == "2L":
        layers = params.layers[:2]
    else:
        layers = params.layers[:1]
        final = params.final_rotation
        if final is None:
            if len(params.layers) < 2:
                raise ValueError("mode 2L' needs a final rotation or a second layer")
            final = params.layers[1].K
    space = _Space.full(norb, ham.n_alpha, ham.n_beta)
    grid = np.zeros((len(space.alpha), len(space.beta)), dtype=complex)
    grid[0, 0] = 1.0  # aufbau strings sort first
    for layer in layers:
        u = scipy.linalg.expm(layer.K)
        grid = rotate_grid(grid, space, u.conj().T)
        grid = grid * np.exp(1j * jastrow_phases(space, layer.J_ss, layer.J_os))
        grid = rotate_grid(grid, space, u)
    if final is not None:
        grid = rotate_grid(grid, space, scipy.linalg.expm(final))
    grid /= np.linalg.norm(grid)
    return _from_grid(grid, space)


# --------------------------------------------------------------------------
# parameter files


def format_lucj_params(params: LucjParams) -> str:
    """Text form: ``[layer k]`` / ``[final_rotation]`` sections of
    ``K p q re im``, ``J_ss p q value`` and ``J_os p q value`` lines."""
    lines = [f"norb {params.n_orbitals}"]

    def k_lines(K):
        for p, q in zip(*np.nonzero(K)):
            lines.append(f"K {p} {q} {float(K[p, q].real)!r} {float(K[p, q].imag)!r}")

    for k, layer in enumerate(params.layers):
        lines.append(f"[layer {k}]")
        k_lines(layer.K)
        for name, J in (("J_ss", layer.J_ss), ("J_os", layer.J_os)):
            for p, q in zip(*np.nonzero(J)):
                lines.append(f"{name} {p} {q} {float(J[p, q])!r}")
    if params.final_rotation is not None:
        lines.append("[final_rotation]")
        k_lines(params.final_rotation)
    return "\n".join(lines) + "\n"


def parse_lucj_params(text: str) -> LucjParams:
    norb = None
    sections: list[dict] = []
    final = None
    current = None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        toks = line.split()
        try:
            if toks[0] == "norb":
                norb = int(toks[1])
                continue
            if norb is None:
                raise ValueError("'norb' must come first")
            if line.startswith("[layer"):
                current = {"K": np.zeros((norb, norb), complex), "J_ss": np.zeros((norb, norb)), "J_os": np.zeros((norb, norb))}
                sections.append(current)
            elif line == "[final_rotation]":
                final = np.zeros((norb, norb), complex)
                current = {"K": final}
            elif toks[0] == "K" and current is not None:
                p, q = int(toks[1]), int(toks[2])
                current["K"][p, q] = float(toks[3]) + 1j * float(toks[4])
            elif toks[0] in ("J_ss", "J_os") and current is not None and toks[0] in current:
                current[toks[0]][int(toks[1]), int(toks[2])] = float(toks[3])
            else:
                raise ValueError(f"unexpected line {line!r}")
        except (ValueError, IndexError) as exc:
            raise ValueError(f"line {lineno}: {exc}") from None
    layers = tuple(LucjLayer(s["K"], s["J_ss"], s["J_os"]) for s in sections)
    return LucjParams(layers, final_rotation=final)


def read_lucj_params(path: str | Path) -> LucjParams:
    return parse_lucj_params(Path(path).read_text())


def write_lucj_params(params: LucjParams, path: str | Path) -> None:
    Path(path).write_text(format_lucj_params(params))
