"""Command-line entry point.

    dimer-ppwpi run --config <path> [--out <path>] [--threads N]
    dimer-ppwpi selftest

Exit codes: 0 ok, 1 usage, 2 config error, 3 numerical error, 4 selftest
failure.  CSV goes to ``--out`` (else ``run.out`` from the config, else
stdout).  File output is written to a temporary sibling and renamed on
success, so a failed run leaves no partial file behind.  Times in the CSV
are in vibrational periods, like the config.
"""

from __future__ import annotations

import argparse
import io
import os
import sys
import tempfile
import warnings
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from . import __version__
from .config import ConfigError, RunConfig, parse_config
from .selftest import format_report, run_selftest
from .signal_engine import SweepPointError, duration_sweep, pump_probe, pump_probe_difference
from .special_functions import QuadratureError
from .vibronic_model import DimerModel, VibronicBasis

EXIT_OK, EXIT_USAGE, EXIT_CONFIG, EXIT_NUMERICAL, EXIT_SELFTEST = 0, 1, 2, 3, 4

HEADERS = {
    "pp": ("t_CA", "HH-HV", "HH+2HV", "r_PP"),
    "ppd": ("t_CA", "VHH-VHV", "VHH+2VHV", "r_PPD"),
    "sweep": ("sigma_A", "sigma_C", "r"),
}
_SWEEP_MODE = {
    "sweep-pp": "pp",
    "sweep-ppd-impulsive": "ppd_impulsive_control",
    "sweep-ppd-control": "ppd_finite_control",
}
NUMERICAL_ERRORS = (ArithmeticError, FloatingPointError, np.linalg.LinAlgError,
                    QuadratureError, SweepPointError)


class NumericalError(RuntimeError):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="dimer-ppwpi",
                     description="Pump-probe and control-modified pump-probe anisotropies "
                                 "of a vibronic energy-transfer dimer.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    run = sub.add_parser("run", help="run the mode named in the config file")
    run.add_argument("--config", required=True, help="INI-style run configuration")
    run.add_argument("--out", help="CSV output path (default: run.out, else stdout)")
    run.add_argument("--threads", type=int, help="worker threads for scans and sweeps")
    sub.add_parser("selftest", help="run the invariant suite on built-in defaults")
    return parser


def format_value(value: float) -> str:
    value = float(value)
    if value == 0.0:
        value = 0.0  # no signed zeros in output
    return f"{value:.11e}"


def render_csv(header, rows) -> str:
    buf = io.StringIO()
    buf.write(",".join(header) + "\n")
    for row in rows:
        buf.write(",".join(format_value(v) for v in row) + "\n")
    return buf.getvalue()


def _map_rows(fn, items, threads):
    if threads > 1 and len(items) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            return list(pool.map(fn, items))
    return [fn(x) for x in items]


def compute(config: RunConfig, threads: int | None = None):
    """(header, rows) for a non-selftest config; times in periods."""
    threads = threads or config.threads
    model = DimerModel(config.model, VibronicBasis(config.n_max))
    period = config.period
    if config.mode in ("pp", "ppd"):
        def row(t_ca):
            try:
                if config.mode == "pp":
                    res = pump_probe(model, config.pulses, t_CA=t_ca)
                else:
                    res = pump_probe_difference(model, config.pulses, t_PA=config.t_PA, t_CA=t_ca)
            except NUMERICAL_ERRORS as exc:
                raise NumericalError(f"t_CA={t_ca / period:.6g} T_vib: "
                                     f"{type(exc).__name__}: {exc}") from exc
            return (t_ca / period, res.difference, res.isotropic, res.anisotropy)
        return HEADERS[config.mode], _map_rows(row, list(config.t_CA), threads)
    try:
        table = duration_sweep(model, config.pulses, config.sigma_grid,
                               mode=_SWEEP_MODE[config.mode], t_PA=config.t_PA,
                               impulsive_sigma=config.impulsive_sigma, threads=threads)
    except SweepPointError as exc:
        a, c = exc.point
        raise NumericalError(f"sigma_A={a / period:.6g} T_vib, sigma_C={c / period:.6g} T_vib: "
                             f"{type(exc.__cause__).__name__}: {exc.__cause__}") from exc
    return HEADERS["sweep"], [(a / period, c / period, r) for a, c, r in table]


def write_output(text: str, path: str | None) -> None:
    if path is None:
        sys.stdout.write(text)
        return
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(prefix=".partial-", suffix=".csv", dir=directory)
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _selftest(n_max=16) -> int:
    results = run_selftest(n_max, progress=lambda c: print(format_report(c), flush=True))
    failed = sum(not c.passed for c in results)
    total = sum(c.seconds for c in results)
    print(f"{len(results) - failed}/{len(results)} checks passed in {total:.1f} s")
    return EXIT_OK if failed == 0 else EXIT_SELFTEST


def _report_warnings(caught):
    seen = set()
    for w in caught:
        msg = str(w.message)
        if msg not in seen:
            seen.add(msg)
            print(f"warning: {msg}", file=sys.stderr)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.command == "selftest":
        return _selftest()
    if args.threads is not None and args.threads < 1:
        print("dimer-ppwpi: error: --threads must be >= 1", file=sys.stderr)
        return EXIT_USAGE
    try:
        config = parse_config(args.config)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    if config.mode == "selftest":
        return _selftest(config.n_max)
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        try:
            header, rows = compute(config, args.threads)
        except NumericalError as exc:
            _report_warnings(caught)
            print(f"numerical error: {exc}", file=sys.stderr)
            return EXIT_NUMERICAL
    _report_warnings(caught)
    write_output(render_csv(header, rows), args.out or config.out)
    return EXIT_OK


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
