"""
Experiment Runner - BD-IRS THz Simulator

Usage:
    python main.py solve --config configs/system.yaml --seed 7 --scheme hybrid --out results/solve
    python main.py solve --scheme tdma --format json --timing
    python main.py sweep --spec configs/sweeps.yaml --out results/sweeps --workers 4

Exit codes: 0 success, 2 configuration / domain / output errors.
"""

import argparse
import sys
from pathlib import Path

project_root = Path(__file__).resolve().parent
sys.path.insert(0, str(project_root))

import config
from logs.logging_config import setup_logging
from src.baselines.schemes import SCHEMES
from src.core.errors import BDIRSError, ConfigurationError, DomainError, EmitError
from src.core.router import ExperimentRouter
from src.core.system_config import load_config
from src.harness.results import FORMATS
from src.harness.sweep import load_sweep_specs

EXIT_FAILURE = 1
EXIT_USAGE   = 2


def _load(args):
    cfg = load_config(args.config)
    overrides = {}
    if config.ABSORPTION_TABLE_PATH and cfg.absorption_table is None:
        overrides["absorption_table"] = config.ABSORPTION_TABLE_PATH
    if getattr(args, "timing", False):
        overrides["timing"] = True
    return cfg.with_overrides(**overrides) if overrides else cfg


def run_solve(args) -> int:
    cfg    = _load(args)
    seed   = args.seed if args.seed is not None else cfg.seed
    router = ExperimentRouter()

    print("\n" + "=" * 70)
    print(f"  SOLVE  : scheme={args.scheme} seed={seed}")
    print(f"  SYSTEM : N={cfg.N} (r={cfg.N_r}, t={cfg.N_t}) M={cfg.M} M_RF={cfg.M_RF} K={cfg.K}")
    print(f"  RADIO  : f_c={cfg.f_c:.4g} Hz  B={cfg.B:.4g} Hz  P_max={cfg.P_max_dbm} dBm")
    print("=" * 70)

    result = router.handle_solve(cfg, seed, args.scheme, args.out, args.format)

    print(f"\n  RATE        : {result['rate']:.6g} bits/s/Hz")
    print(f"  OUTER ITERS : {result['outer_iters']}")
    if result["flags"]:
        print(f"  FLAGS       : {', '.join(result['flags'])}")
    print("\n" + "─" * 70)
    for f in result["files"]:
        print(f"   • {f}")
    print("=" * 70 + "\n")
    return 0


def run_sweep(args) -> int:
    cfg     = _load(args)
    specs   = load_sweep_specs(args.spec)
    workers = args.workers if args.workers is not None else config.WORKERS
    router  = ExperimentRouter(workers=workers)

    print("\n" + "=" * 70)
    print(f"  SWEEPS : {[s.name for s in specs]}")
    print(f"  WORKERS: {workers}")
    print("=" * 70)

    results = router.handle_sweep(cfg, specs, args.out, args.format)

    for name, info in results.items():
        print(f"\n  {name}: {info['rows']} row(s), {info['failures']} flagged")
        for f in info["files"]:
            print(f"   • {f}")
    print("=" * 70 + "\n")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(description="Hybrid reflective/transmissive BD-IRS THz sum-rate experiments")
    sub = parser.add_subparsers(dest="command", required=True)

    solve = sub.add_parser("solve", help="Solve one seeded scenario")
    solve.add_argument("--config",  type=str, default=config.DEFAULT_CONFIG_PATH)
    solve.add_argument("--seed",    type=int, default=None)
    solve.add_argument("--scheme",  type=str, default="hybrid", choices=SCHEMES)
    solve.add_argument("--out",     type=str, default="results/solve")
    solve.add_argument("--format",  type=str, default="csv", choices=FORMATS)
    solve.add_argument("--timing",  action="store_true", default=False)
    solve.set_defaults(func=run_solve)

    sweep = sub.add_parser("sweep", help="Run the sweeps listed in a spec file")
    sweep.add_argument("--config",  type=str, default=config.DEFAULT_CONFIG_PATH)
    sweep.add_argument("--spec",    type=str, default="configs/sweeps.yaml")
    sweep.add_argument("--out",     type=str, default="results/sweeps")
    sweep.add_argument("--format",  type=str, default="csv", choices=FORMATS)
    sweep.add_argument("--workers", type=int, default=None)
    sweep.add_argument("--timing",  action="store_true", default=False)
    sweep.set_defaults(func=run_sweep)

    return parser


def main(argv=None) -> int:
    setup_logging()
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ConfigurationError, DomainError, EmitError) as e:
        print(f"ERROR: {e}", file=sys.stderr)
        return EXIT_USAGE
    except BDIRSError as e:
        # numerical failure inside a solve
        print(f"ERROR: {type(e).__name__}: {e}", file=sys.stderr)
        return EXIT_FAILURE


if __name__ == "__main__":
    sys.exit(main())
