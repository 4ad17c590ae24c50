"""Command-line front end: ``bench``, ``recover`` and ``selftest``.

Exit codes: 0 success, 1 selftest failure, 2 bad config / unparsable input,
3 I/O failure while writing results, 4 algorithm error during recovery.
"""

from __future__ import annotations

import argparse
import logging
import os
import sys
from pathlib import Path
from typing import Dict, Optional, Sequence

from .bench import ExperimentConfig, run_sweep, to_csv, write_manifest
from .errors import ConfigInvalid, DimensionMismatch, GPFusionError
from .pursuits import ALGORITHMS, PursuitConfig, fugp, ifugp, omp, sp

log = logging.getLogger("gpfusion")

EXIT_OK, EXIT_FAIL, EXIT_CONFIG, EXIT_IO, EXIT_ALGO = 0, 1, 2, 3, 4
SEED_ENV = "GPFUSION_SEED"

_KEYS = frozenset({
    "n", "k", "alphas", "s", "t", "distribution", "noise", "smnr_db",
    "algorithms", "seed", "output",
})


def parse_config_text(text: str) -> Dict[str, str]:
    """Parse flat ``key = value`` lines; ``#`` starts a comment."""
    out: Dict[str, str] = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigInvalid(f"line {lineno}: expected key = value, got {raw!r}")
        key, value = (p.strip() for p in line.split("=", 1))
        apply_setting(out, key, value)
    return out


def apply_setting(settings: Dict[str, str], key: str, value: str) -> None:
    k = key.strip().lower()
    if k not in _KEYS:
        raise ConfigInvalid(f"unknown config key {key!r}")
    settings[k] = value.strip()


def build_config(settings: Dict[str, str], base_dir: Path, seed_flag: Optional[int]) -> ExperimentConfig:
    s = dict(settings)
    try:
        kwargs = {}
        for key in ("n", "k", "s", "t"):
            if key in s:
                kwargs[key] = int(s[key])
        if "alphas" in s:
            kwargs["alphas"] = tuple(float(a) for a in s["alphas"].split(",") if a.strip())
        if "algorithms" in s:
            kwargs["algorithms"] = tuple(a.strip().lower() for a in s["algorithms"].split(",") if a.strip())
        if "distribution" in s:
            kwargs["distribution"] = s["distribution"].lower()
        noise = s.get("noise", "noisy" if "smnr_db" in s else "clean").lower()
        if noise == "noisy":
            if "smnr_db" not in s:
                raise ConfigInvalid("noise = noisy needs smnr_db")
            kwargs["smnr_db"] = float(s["smnr_db"])
        elif noise != "clean":
            raise ConfigInvalid(f"noise must be clean or noisy, got {noise!r}")
        if seed_flag is not None:
            kwargs["seed"] = seed_flag
        elif "seed" in s:
            kwargs["seed"] = int(s["seed"])
        elif os.environ.get(SEED_ENV):
            kwargs["seed"] = int(os.environ[SEED_ENV])
        if "output" in s:
            out = Path(s["output"])
            kwargs["output"] = out if out.is_absolute() else base_dir / out
    except ValueError as exc:
        if isinstance(exc, ConfigInvalid):
            raise
        raise ConfigInvalid(str(exc)) from None
    return ExperimentConfig(**kwargs)


def cmd_bench(args) -> int:
    path = Path(args.config)
    try:
        text = path.read_text()
    except OSError as exc:
        log.error("cannot read config: %s", exc)
        return EXIT_CONFIG
    try:
        settings = parse_config_text(text)
        for item in args.set or ():
            if "=" not in item:
                raise ConfigInvalid(f"--set expects KEY=VALUE, got {item!r}")
            apply_setting(settings, *item.split("=", 1))
        config = build_config(settings, path.parent, args.seed)
    except ConfigInvalid as exc:
        log.error("bad config: %s", exc)
        return EXIT_CONFIG

    output = config.output or path.with_suffix(".csv")
    log.info("sweep: N=%d K=%d alphas=%s S=%d T=%d %s %s seed=%d",
             config.n, config.k, ",".join(f"{a:g}" for a in config.alphas), config.s,
             config.t, config.distribution.value, config.noise.label(), config.seed)
    result = run_sweep(config, workers=args.workers, progress=True)
    body = to_csv(result)
    if args.stdout:
        sys.stdout.write(body)
        return EXIT_OK
    try:
        output.parent.mkdir(parents=True, exist_ok=True)
        output.write_text(body)
        write_manifest(config, output.with_suffix(output.suffix + ".manifest"), args.workers)
    except OSError as exc:
        log.error("cannot write results: %s", exc)
        return EXIT_IO
    log.info("wrote %s", output)
    return EXIT_OK


def _fmt(v: float) -> str:
    return format(float(v), ".17g")


def cmd_recover(args) -> int:
    from .ensemble import read_matrix, read_vector, write_vector

    try:
        A = read_matrix(args.matrix)
        b = read_vector(args.measurement)
        if b.shape[0] != A.shape[0]:
            raise DimensionMismatch(f"matrix has {A.shape[0]} rows, measurement has {b.shape[0]} entries")
        if not 1 <= args.sparsity < A.shape[0]:
            raise DimensionMismatch(f"need 1 <= K < M, got K={args.sparsity}, M={A.shape[0]}")
        if args.algo in ("fugp", "ifugp") and 2 * args.sparsity > A.shape[0]:
            raise DimensionMismatch(f"{args.algo} needs M >= 2K, got M={A.shape[0]}")
    except (OSError, ValueError) as exc:
        log.error("cannot load problem: %s", exc)
        return EXIT_CONFIG

    cfg = PursuitConfig(args.sparsity, correlation_uses_magnitude=not args.signed_omp)
    try:
        if args.algo == "omp":
            est = omp(A, b, cfg)[0]
        elif args.algo == "sp":
            est = sp(A, b, cfg)[0]
        elif args.algo == "fugp":
            est = fugp(A, b, cfg)[0]
        else:
            est = ifugp(A, b, cfg)[0]
    except GPFusionError as exc:
        log.error("%s failed: %s", args.algo, exc)
        return EXIT_ALGO

    base = args.index_base
    print("support:", " ".join(str(i + base) for i in est.support))
    print("coefficients:", " ".join(_fmt(c) for c in est.coefficients))
    print("residual_norm:", _fmt(est.residual_norm))
    if args.out:
        try:
            write_vector(args.out, est.to_dense())
        except OSError as exc:
            log.error("cannot write %s: %s", args.out, exc)
            return EXIT_IO
    return EXIT_OK


def cmd_selftest(args) -> int:
    from .selftest import run_checks

    results = run_checks()
    width = max(len(name) for name, _, _ in results)
    for name, ok, detail in results:
        print(f"{name:<{width}}  {'PASS' if ok else 'FAIL'}  {detail}")
    return EXIT_OK if all(ok for _, ok, _ in results) else EXIT_FAIL


def make_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="gpfusion", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("bench", help="run a Monte Carlo sweep from a key=value config file")
    p.add_argument("--config", required=True)
    p.add_argument("--set", action="append", metavar="KEY=VALUE", help="override a config key")
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--stdout", action="store_true", help="write the CSV to standard output")
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("recover", help="recover a sparse vector from matrix/measurement files")
    p.add_argument("--matrix", required=True)
    p.add_argument("--measurement", required=True)
    p.add_argument("--sparsity", type=int, required=True)
    p.add_argument("--algo", choices=ALGORITHMS, required=True)
    p.add_argument("--out", default=None, help="write the dense estimate as a vector file")
    p.add_argument("--signed-omp", action="store_true",
                   help="select OMP atoms by signed rather than absolute correlation")
    p.add_argument("--index-base", type=int, choices=(0, 1), default=0)
    p.set_defaults(func=cmd_recover)

    p = sub.add_parser("selftest", help="run the fast invariant checks and a mini sweep")
    p.set_defaults(func=cmd_selftest)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = make_parser()
    args = parser.parse_args(argv)
    handler = logging.StreamHandler(sys.stderr)
    handler.setFormatter(logging.Formatter("%(levelname)s %(message)s"))
    log.handlers[:] = [handler]
    log.setLevel(logging.DEBUG if args.verbose else logging.INFO)
    log.propagate = False
    if args.command == "bench" and args.workers < 1:
        parser.error("--workers must be at least 1")
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
