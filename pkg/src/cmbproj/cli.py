"""Command-line driver.

Exit status: 0 on success, 2 for configuration errors, 3 for numerical
errors, 4 for I/O or file-format errors.  Flags override values from an
optional key=value config file.
"""

from __future__ import annotations

import argparse
import sys

from .basis import BasisFormatError, MappingFormatError
from .harness import (ConfigError, GammaFormatError, RunConfig,
                      run_bench, run_convergence_study, run_crosscheck,
                      run_gamma, serialize_gamma, write_rows_csv)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERIC = 3
EXIT_IO = 4

_CONFIG_KEYS = {
    "mode": str, "lmin": int, "lmax": int, "pmax": int, "mapping": str,
    "r-samples": int, "integrator": str, "h2": str, "mu-points": int,
    "block": int, "workers": int, "out": str, "format": str,
    "bench-repeats": int,
}


def _parse_config_file(path) -> dict:
    values = {}
    with open(path, "r", encoding="utf-8") as f:
        for lineno, line in enumerate(f, start=1):
            s = line.split("#", 1)[0].strip()
            if not s:
                continue
            if "=" not in s:
                raise ConfigError(f"{path}:{lineno}: expected key=value")
            key, _, raw = s.partition("=")
            key = key.strip()
            if key not in _CONFIG_KEYS:
                raise ConfigError(f"{path}:{lineno}: unknown key {key!r}")
            try:
                values[key] = _CONFIG_KEYS[key](raw.strip())
            except ValueError as exc:
                raise ConfigError(
                    f"{path}:{lineno}: bad value for {key!r}") from exc
    return values


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="cmbproj",
        description="Projection-matrix computation between primordial and "
                    "late-time bispectrum bases.")
    p.add_argument("--mode", choices=["gamma2d", "gamma3d", "crosscheck",
                                      "convergence", "bench"])
    p.add_argument("--lmin", type=int)
    p.add_argument("--lmax", type=int)
    p.add_argument("--pmax", type=int)
    p.add_argument("--mapping", help="'default' or a modalmap v1 file path")
    p.add_argument("--r-samples", type=int, dest="r_samples")
    p.add_argument("--integrator", choices=["trap", "hermite", "spline"])
    p.add_argument("--h2", choices=["gosper", "exact"])
    p.add_argument("--mu-points", type=int, dest="mu_points")
    p.add_argument("--block", type=int)
    p.add_argument("--workers", type=int)
    p.add_argument("--out")
    p.add_argument("--format", choices=["csv", "bin"], dest="fmt")
    p.add_argument("--bench-repeats", type=int, dest="bench_repeats")
    p.add_argument("--config", help="key=value config file; flags override")
    return p


_FILE_TO_FIELD = {
    "mode": "mode", "lmin": "l_min", "lmax": "l_max", "pmax": "p_max",
    "mapping": "mapping", "r-samples": "r_samples",
    "integrator": "integrator", "h2": "h2_mode", "mu-points": "mu_points",
    "block": "block", "workers": "workers", "out": "out", "format": "fmt",
    "bench-repeats": "bench_repeats",
}

_ARG_TO_FIELD = {
    "mode": "mode", "lmin": "l_min", "lmax": "l_max", "pmax": "p_max",
    "mapping": "mapping", "r_samples": "r_samples",
    "integrator": "integrator", "h2": "h2_mode", "mu_points": "mu_points",
    "block": "block", "workers": "workers", "out": "out", "fmt": "fmt",
    "bench_repeats": "bench_repeats",
}


def config_from_args(args: argparse.Namespace) -> RunConfig:
    config = RunConfig()
    if args.config:
        for key, value in _parse_config_file(args.config).items():
            setattr(config, _FILE_TO_FIELD[key], value)
    for arg, fld in _ARG_TO_FIELD.items():
        value = getattr(args, arg)
        if value is not None:
            setattr(config, fld, value)
    return config.validate()


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        try:
            config = config_from_args(args)
        except FileNotFoundError as exc:
            print(f"error: {exc}", file=sys.stderr)
            return EXIT_IO

        if config.mode in ("gamma2d", "gamma3d"):
            gamma = run_gamma(config)
            if config.out:
                serialize_gamma(gamma, config.out, config.fmt)
                print(f"wrote {gamma.shape[0]}x{gamma.shape[1]} matrix "
                      f"to {config.out} ({config.fmt})")
            else:
                for line in config.header_lines():
                    print(line)
                print(f"matrix {gamma.shape[0]}x{gamma.shape[1]} "
                      f"frobenius={float((gamma.values**2).sum())**0.5:.17g}")
        elif config.mode == "crosscheck":
            report = run_crosscheck(config)
            for line in config.header_lines():
                print(line)
            for line in report.lines():
                print(line)
        elif config.mode == "convergence":
            rows = run_convergence_study(config)
            _emit_rows(rows, config)
        elif config.mode == "bench":
            rows = run_bench(config)
            _emit_rows(rows, config)
        return EXIT_OK
    except (ConfigError, MappingFormatError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (FloatingPointError, MemoryError, RuntimeError,
            ZeroDivisionError) as exc:
        print(f"numerical error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (OSError, GammaFormatError, BasisFormatError) as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return EXIT_IO


def _emit_rows(rows, config) -> None:
    if config.out:
        write_rows_csv(rows, config, config.out)
        print(f"wrote {len(rows)} rows to {config.out}")
    else:
        for line in config.header_lines():
            print(line)
        keys = list(rows[0])
        print(",".join(keys))
        for row in rows:
            print(",".join(str(row[k]) for k in keys))


if __name__ == "__main__":
    sys.exit(main())
