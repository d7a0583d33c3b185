"""Dissociation scans: per-geometry pipeline and CSV tables.

A scan is configured by an INI file::

    [scan]
    ansatz = 2L'          ; 1L, 2L, 2L' or none
    sampler = noisy       ; exact, support, noisy, random or external
    shots = 30
    noise_p = 0.6
    iterations = 5
    subspace_dim = 36
    seed = 1

    [geometry 2.00]
    fcidump = h4_2.00.fcidump

Relative paths are resolved against the config file's directory. Every key
and its default is listed in ``DEFAULTS``.
"""

from __future__ import annotations

import configparser
import csv
import io
import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path

from .detspace import Determinant, enumerate_strings, hartree_fock
from .eig import solve_space
from .integrals import mp2_t2, read_fcidump, read_t2
from .lucj import MODES, build_state, params_from_t2
from .recovery import RecoveryConfig, filter_physical, recover_loop
from .sampler import (
    NoiseConfig,
    apply_noise,
    random_uniform_set,
    read_samples,
    sample_exact,
    stream,
    support_samples,
)
from .subspace import FIXED_DRAW, FIXED_SUBSPACE, BatchConfig, pooled_strings, subspace_dimension

logger = logging.getLogger(__name__)

SAMPLERS = ("exact", "support", "noisy", "random", "external")

DEFAULTS = {
    "ansatz": "2L'",
    "t2": "mp2",
    "local": "false",
    "sampler": "exact",
    "shots": "10000",
    "noise_p": "0.0",
    "max_flips": "",
    "random_target": "",
    "random_hf": "true",
    "iterations": "5",
    "batches": "10",
    "batch_mode": FIXED_SUBSPACE,
    "subspace_dim": "16",
    "n_draw": "",
    "pool": "pooled",
    "inject_hf": "false",
    "seed": "0",
    "bit_order": "alpha-low",
    "fci_max_dimension": "20000",
    "max_dimension": "4000000",
    "workers": "1",
    "output": "scan.csv",
}

ROW_FIELDS = (
    "geometry", "mode", "iteration", "energy", "dimension",
    "distinct_physical", "e_fci", "error", "message",
)
SIZE_FIELDS = ("geometry", "mode", "distinct_sampled", "pooled_strings", "dimension")


@dataclass(frozen=True)
class Geometry:
    label: str
    fcidump: Path
    t2_file: Path | None = None
    samples: Path | None = None


@dataclass(frozen=True)
class ScanConfig:
    geometries: tuple[Geometry, ...]
    ansatz: str = "2L'"
    t2: str = "mp2"
    local: bool = False
    sampler: str = "exact"
    shots: int = 10000
    noise: NoiseConfig = field(default_factory=lambda: NoiseConfig(0.0))
    random_target: int | None = None
    random_hf: bool = True
    recovery: RecoveryConfig = field(default_factory=RecoveryConfig)
    bit_order: str = "alpha-low"
    fci_max_dimension: int = 20000
    seed: int = 0
    workers: int = 1
    output: Path | None = None
    settings: tuple[tuple[str, str], ...] = ()

    def __post_init__(self):
        if self.ansatz not in MODES + ("none",):
            raise ValueError(f"ansatz must be one of {MODES + ('none',)}")
        if self.sampler not in SAMPLERS:
            raise ValueError(f"sampler must be one of {SAMPLERS}")
        if self.t2 not in ("mp2", "file"):
            raise ValueError("t2 must be 'mp2' or 'file'")
        if self.sampler == "external" and any(g.samples is None for g in self.geometries):
            raise ValueError("external sampling needs a samples path for every geometry")
        if self.sampler in ("exact", "support", "noisy") and self.ansatz == "none":
            raise ValueError(f"sampler {self.sampler!r} needs an ansatz")
        if self.sampler == "random" and self.ansatz == "none" and self.random_target is None:
            raise ValueError("random sampling without an ansatz needs random_target")

    @property
    def descriptor(self) -> str:
        if self.sampler == "noisy":
            return f"{self.ansatz}/noisy(p={self.noise.p})"
        if self.sampler in ("random", "external"):
            return self.sampler
        return f"{self.ansatz}/{self.sampler}"


@dataclass(frozen=True)
class ScanRow:
    geometry: str
    mode: str
    iteration: int
    energy: float
    dimension: int
    distinct_physical: int
    e_fci: float | None
    message: str = ""

    @property
    def error(self) -> float | None:
        if self.e_fci is None or math.isnan(self.energy):
            return None
        return self.energy - self.e_fci

    def as_list(self) -> list[str]:
        def fmt(x):
            return "" if x is None else repr(float(x))

        return [
            self.geometry, self.mode, str(self.iteration), fmt(self.energy), str(self.dimension),
            str(self.distinct_physical), fmt(self.e_fci), fmt(self.error), self.message,
        ]


def _bool(text: str) -> bool:
    return text.strip().lower() in ("1", "true", "yes", "on")


def _opt_int(text: str) -> int | None:
    return int(text) if text.strip() else None


def load_config(path: str | Path, overrides: dict[str, str] | None = None) -> ScanConfig:
    """Read an INI scan configuration; ``overrides`` replace ``[scan]`` keys."""
    path = Path(path)
    parser = configparser.ConfigParser(inline_comment_prefixes=(";", "#"))
    parser.optionxform = str
    if not parser.read(path):
        raise FileNotFoundError(path)
    base = path.parent
    settings = dict(DEFAULTS)
    if parser.has_section("scan"):
        unknown = set(parser["scan"]) - set(DEFAULTS)
        if unknown:
            raise ValueError(f"unknown [scan] keys: {sorted(unknown)}")
        settings.update(parser["scan"])
    settings.update({k: str(v) for k, v in (overrides or {}).items() if v is not None})

    def resolve(p):
        return None if p is None else (base / p).resolve()

    geometries = []
    for section in parser.sections():
        if not section.startswith("geometry"):
            continue
        sec = parser[section]
        label = section[len("geometry"):].strip() or sec.get("label", section)
        if "fcidump" not in sec:
            raise ValueError(f"[{section}] needs an fcidump path")
        geometries.append(
            Geometry(label, resolve(sec["fcidump"]), resolve(sec.get("t2_file")), resolve(sec.get("samples")))
        )
    if not geometries:
        raise ValueError("no [geometry ...] sections")
    seed = int(settings["seed"])
    mode = settings["batch_mode"]
    batch = BatchConfig(
        n_batches=int(settings["batches"]),
        mode=mode,
        d=int(settings["subspace_dim"]) if mode == FIXED_SUBSPACE else None,
        n_draw=_opt_int(settings["n_draw"]) if mode == FIXED_DRAW else None,
        pool=settings["pool"],
        max_dimension=int(settings["max_dimension"]),
    )
    return ScanConfig(
        geometries=tuple(geometries),
        ansatz=settings["ansatz"],
        t2=settings["t2"],
        local=_bool(settings["local"]),
        sampler=settings["sampler"],
        shots=int(settings["shots"]),
        noise=NoiseConfig(float(settings["noise_p"]), _opt_int(settings["max_flips"])),
        random_target=_opt_int(settings["random_target"]),
        random_hf=_bool(settings["random_hf"]),
        recovery=RecoveryConfig(iterations=int(settings["iterations"]), batch=batch, inject_hf=_bool(settings["inject_hf"])),
        bit_order=settings["bit_order"],
        fci_max_dimension=int(settings["fci_max_dimension"]),
        seed=seed,
        workers=int(settings["workers"]),
        output=resolve(settings["output"]) if settings["output"] else None,
        settings=tuple(sorted(settings.items())),
    )


def fci_energy(ham, max_dimension: int = 20000) -> float | None:
    """Exact ground energy over the full space, or ``None`` when it is too large."""
    na = math.comb(ham.n_orbitals, ham.n_alpha)
    nb = math.comb(ham.n_orbitals, ham.n_beta)
    if na * nb > max_dimension:
        return None
    space = [Determinant(a, b) for a in enumerate_strings(ham.n_orbitals, ham.n_alpha)
             for b in enumerate_strings(ham.n_orbitals, ham.n_beta)]
    return solve_space(space, ham)[0]


def _geometry_seeds(cfg: ScanConfig, index: int) -> dict[str, int]:
    rng = stream(cfg.seed, index)
    return {k: int(rng.integers(2**63)) for k in ("shots", "noise", "random", "recovery")}


def geometry_samples(cfg: ScanConfig, geom: Geometry, index: int):
    """Hamiltonian and raw sample set for one geometry (no diagonalization)."""
    ham = read_fcidump(geom.fcidump)
    seeds = _geometry_seeds(cfg, index)
    n_qubits = 2 * ham.n_orbitals
    if cfg.sampler == "external":
        return ham, read_samples(geom.samples, n_qubits, cfg.bit_order)
    exact = None
    if cfg.ansatz != "none":
        if cfg.t2 == "file":
            if geom.t2_file is None:
                raise ValueError(f"geometry {geom.label} has no t2_file")
            t2 = read_t2(geom.t2_file)
        else:
            t2 = mp2_t2(ham)
        truncated = cfg.ansatz == "2L'"
        layers = 1 if cfg.ansatz == "1L" else 2
        state = build_state(ham, params_from_t2(t2, layers, local=cfg.local, truncated=truncated), cfg.ansatz)
        if cfg.sampler == "support":
            exact = support_samples(state)
        else:
            exact = sample_exact(state, cfg.shots, seed=seeds["shots"])
    if cfg.sampler in ("exact", "support"):
        return ham, exact
    if cfg.sampler == "noisy":
        return ham, apply_noise(exact, replace(cfg.noise, seed=seeds["noise"]))
    target = cfg.random_target if cfg.random_target is not None else len(exact)
    hf = hartree_fock(ham) if cfg.random_hf else None
    return ham, random_uniform_set(n_qubits, target, hf, seed=seeds["random"])


def _run_geometry(args) -> list[ScanRow]:
    cfg, index = args
    geom = cfg.geometries[index]
    desc = cfg.descriptor
    try:
        ham, raw = geometry_samples(cfg, geom, index)
        e_fci = fci_energy(ham, cfg.fci_max_dimension)
        rec = replace(cfg.recovery, seed=_geometry_seeds(cfg, index)["recovery"])
        steps = recover_loop(raw, ham, rec)
    except Exception as exc:  # one bad geometry must not end the scan
        logger.warning("geometry %s failed: %s", geom.label, exc)
        return [ScanRow(geom.label, desc, -1, math.nan, 0, 0, None, f"{type(exc).__name__}: {exc}")]
    rows = []
    for s in steps:
        rows.append(ScanRow(
            geom.label, desc, s.iteration, s.energy, s.dimension,
            len(filter_physical(s.samples, ham.n_alpha, ham.n_beta)), e_fci,
        ))
    return rows


def _provenance(cfg: ScanConfig) -> list[str]:
    return [f"# {k} = {v}" for k, v in cfg.settings]


def rows_to_csv(rows, header, provenance=()) -> str:
    buf = io.StringIO()
    for line in provenance:
        buf.write(line + "\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow(r if isinstance(r, (list, tuple)) else r.as_list())
    return buf.getvalue()


def _map(cfg: ScanConfig, fn):
    jobs = [(cfg, i) for i in range(len(cfg.geometries))]
    if cfg.workers > 1:
        with ProcessPoolExecutor(cfg.workers) as pool:
            return list(pool.map(fn, jobs))
    return [fn(j) for j in jobs]


def run_scan(cfg: ScanConfig, output: str | Path | None = None) -> list[ScanRow]:
    """Run every geometry and write one CSV row per (geometry, iteration)."""
    rows = [r for chunk in _map(cfg, _run_geometry) for r in chunk]
    output = output or cfg.output
    if output is not None:
        Path(output).write_text(rows_to_csv(rows, ROW_FIELDS, _provenance(cfg)))
    return rows


def _sizes_geometry(args) -> list:
    cfg, index = args
    geom = cfg.geometries[index]
    try:
        ham, raw = geometry_samples(cfg, geom, index)
    except Exception as exc:
        logger.warning("geometry %s failed: %s", geom.label, exc)
        return [geom.label, cfg.descriptor, "", "", ""]
    phys = filter_physical(raw, ham.n_alpha, ham.n_beta)
    strings = pooled_strings(phys, cfg.recovery.batch.pool)
    return [
        geom.label, cfg.descriptor, str(len(raw)), str(len(strings)),
        str(subspace_dimension(strings, ham.n_alpha, ham.n_beta)),
    ]


def report_sizes(cfg: ScanConfig, output: str | Path | None = None) -> list[list[str]]:
    """Sample-set and subspace sizes per geometry, without diagonalization."""
    rows = _map(cfg, _sizes_geometry)
    if output is not None:
        Path(output).write_text(rows_to_csv(rows, SIZE_FIELDS, _provenance(cfg)))
    return rows
