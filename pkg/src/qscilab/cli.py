"""Command-line entry point: ``qscilab {scan,sizes,fci,sample,recover}``."""

from __future__ import annotations

import argparse
import logging
import math
import sys

from . import scan as scanmod
from .detspace import hartree_fock
from .integrals import mp2_t2, read_fcidump, read_t2
from .lucj import MODES, build_state, params_from_t2
from .recovery import RecoveryConfig, recover_loop, write_trace
from .sampler import BIT_ORDERS, NoiseConfig, apply_noise, read_samples, sample_exact, write_samples
from .subspace import FIXED_DRAW, FIXED_SUBSPACE, BatchConfig


def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--seed", type=int, help="global RNG seed (default: config value, else 0)")
    p.add_argument("--bit-order", choices=BIT_ORDERS, help="bit layout of sample files (default alpha-low)")


def _batch_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--batches", type=int, default=10, help="number of batches K (default 10)")
    p.add_argument("--subspace-dim", type=int, default=16, help="fixed-subspace target d, a perfect square (default 16)")
    p.add_argument("--n-draw", type=int, help="switch to fixed-draw batches with this many draws")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="qscilab", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    for name, helptext in (("scan", "run a dissociation scan"), ("sizes", "report sample and subspace sizes")):
        p = sub.add_parser(name, help=helptext,
                           description=f"{helptext}. Config defaults: "
                           + ", ".join(f"{k}={v or '<unset>'}" for k, v in scanmod.DEFAULTS.items()))
        p.add_argument("--config", required=True)
        p.add_argument("--output", help="CSV path (default: config 'output')")
        p.add_argument("--noise-p", type=float, help="override noise_p")
        p.add_argument("--batches", type=int, help="override batches")
        p.add_argument("--mode", choices=MODES + ("none",), help="override ansatz")
        _common(p)

    p = sub.add_parser("fci", help="exact ground-state energy of an FCIDUMP")
    p.add_argument("--fcidump", required=True)
    p.add_argument("--max-dimension", type=int, default=200000)

    p = sub.add_parser("sample", help="sample an LUCJ state to a sample file")
    p.add_argument("--fcidump", required=True)
    p.add_argument("--state", choices=MODES, default="2L'", help="ansatz (default 2L')")
    p.add_argument("--t2", help="t2 file (default: MP2 amplitudes)")
    p.add_argument("--local", action="store_true", help="apply the nearest-neighbour Jastrow masks")
    p.add_argument("--shots", type=int, required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--noise-p", type=float, help="apply the bit-flip noise model with this p")
    p.add_argument("--max-flips", type=int, help="flip cap for the noise model (default 8 * 2N)")
    _common(p)

    p = sub.add_parser("recover", help="configuration recovery on a sample file")
    p.add_argument("--samples", required=True)
    p.add_argument("--fcidump", required=True)
    p.add_argument("--iters", type=int, default=5)
    p.add_argument("--inject-hf", action="store_true", help="seed HF when no sample is physical")
    p.add_argument("--out", help="trace CSV path (default: stdout)")
    _batch_args(p)
    _common(p)
    return parser


def _overrides(args) -> dict:
    return {
        "seed": args.seed, "noise_p": args.noise_p, "batches": args.batches,
        "ansatz": args.mode, "bit_order": args.bit_order,
        "sampler": "noisy" if args.noise_p is not None else None,
    }


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    try:
        if args.command in ("scan", "sizes"):
            cfg = scanmod.load_config(args.config, _overrides(args))
            if args.command == "scan":
                rows = scanmod.run_scan(cfg, args.output)
                if args.output is None and cfg.output is None:
                    sys.stdout.write(scanmod.rows_to_csv(rows, scanmod.ROW_FIELDS))
            else:
                out = args.output or (cfg.output.with_name(cfg.output.stem + "_sizes.csv") if cfg.output else None)
                rows = scanmod.report_sizes(cfg, out)
                if out is None:
                    sys.stdout.write(scanmod.rows_to_csv(rows, scanmod.SIZE_FIELDS))
        elif args.command == "fci":
            ham = read_fcidump(args.fcidump)
            e = scanmod.fci_energy(ham, args.max_dimension)
            if e is None:
                print(f"full space exceeds {args.max_dimension} determinants", file=sys.stderr)
                return 2
            dim = math.comb(ham.n_orbitals, ham.n_alpha) * math.comb(ham.n_orbitals, ham.n_beta)
            print(f"{e!r} {dim}")
        elif args.command == "sample":
            ham = read_fcidump(args.fcidump)
            t2 = read_t2(args.t2) if args.t2 else mp2_t2(ham)
            layers = 1 if args.state == "1L" else 2
            params = params_from_t2(t2, layers, local=args.local, truncated=args.state == "2L'")
            seed = args.seed or 0
            samples = sample_exact(build_state(ham, params, args.state), args.shots, seed=seed)
            if args.noise_p is not None:
                samples = apply_noise(samples, NoiseConfig(args.noise_p, args.max_flips, seed=seed + 1))
            write_samples(samples, args.out, args.bit_order or "alpha-low")
        elif args.command == "recover":
            ham = read_fcidump(args.fcidump)
            raw = read_samples(args.samples, 2 * ham.n_orbitals, args.bit_order or "alpha-low")
            if args.n_draw:
                batch = BatchConfig(args.batches, FIXED_DRAW, n_draw=args.n_draw)
            else:
                batch = BatchConfig(args.batches, FIXED_SUBSPACE, d=args.subspace_dim)
            steps = recover_loop(raw, ham, RecoveryConfig(args.iters, seed=args.seed or 0, batch=batch, inject_hf=args.inject_hf))
            if args.out:
                write_trace(steps, args.out)
            else:
                for s in steps:
                    print(f"{s.iteration} {s.energy!r} {s.dimension} {len(s.samples)}")
    except (OSError, ValueError, RuntimeError) as exc:
        print(f"qscilab: error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
