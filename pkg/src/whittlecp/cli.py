"""Command-line interface: simulate, estimate-d, detect, montecarlo, selftest.

Exit codes: 0 success, 2 usage error, 3 data error, 4 numeric failure.
Failures print one JSON record on stderr.
"""
from __future__ import annotations

import argparse
import json
import logging
import math
import re
import sys
from pathlib import Path

from . import __version__, defaults
from ._backend import default_threads
from .errors import DataError, DomainError, WhittleCPError
from .io import (
    emit_curve, read_trajectory, write_periodogram_csv, write_trajectory,
)
from .montecarlo import (
    ExperimentConfig, records_to_csv, run, tables_to_csv, tables_to_markdown,
)
from .segmentation import detect as detect_breaks
from .spectral import SegmentWindow, build_prefix
from .synthesis import FAMILIES, INNOVATIONS, ProcessSpec, synthesize
from .whittle import estimate_d

log = logging.getLogger("whittlecp")

# knob -> (formula, runtime function of n, why this default)
DEFAULT_DOCS = {
    "m": ("floor(n**0.65)", defaults.bandwidth,
          "bandwidth suited to spectra as smooth as FARIMA near zero"),
    "kmax": ("2*(floor(ln n) - 1)", defaults.k_max,
             "large enough for the slope fit over the upper half of K"),
    "zn": ("2/sqrt(n)", defaults.penalty,
           "vanishes while sqrt(m)*z_n still diverges"),
    "bic": ("2*ln(n)/n", defaults.bic_penalty, "classical BIC weight, for comparison"),
    "step": ("max(1, n//200)", defaults.step, "about 200 candidate breakpoints"),
    "min-seg": ("max(20, ceil(n/20))", defaults.min_segment,
                "shortest segment on which a local Whittle fit is attempted"),
    "truncation": ("10*n", defaults.truncation, "MA(inf) weights kept by the simulator"),
}
_EXAMPLE_N = (500, 2000, 5000)


def _fmt_default(v):
    return str(v) if isinstance(v, int) else f"{v:.6g}"


def defaults_epilog(keys):
    lines = ["defaults (functions of the series length n):"]
    for key in keys:
        formula, fn, why = DEFAULT_DOCS[key]
        examples = ", ".join(f"n={n} -> {_fmt_default(fn(n))}" for n in _EXAMPLE_N)
        lines.append(f"  {key}: {formula}  [{examples}]")
        lines.append(f"      {why}")
    return "\n".join(lines)


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        _emit_error("usage", message, 2)
        sys.exit(2)


def _emit_error(kind, message, code):
    sys.stderr.write(json.dumps({"error": kind, "message": message, "exit_code": code}) + "\n")


def _floats(text):
    if text is None or text == "":
        return ()
    if isinstance(text, (list, tuple)):
        return tuple(float(t) for t in text)
    if isinstance(text, (int, float)):
        return (float(text),)
    try:
        return tuple(float(t) for t in str(text).split(",") if t.strip())
    except ValueError:
        raise DomainError(f"expected a comma-separated list of numbers, got {text!r}") from None


def _range(text, name):
    try:
        a, b = (int(v) for v in str(text).split(":"))
    except ValueError:
        raise DomainError(f"{name} must look like a:b, got {text!r}") from None
    return a, b


def _write_json(obj, path):
    text = json.dumps(obj, indent=2)
    if path in (None, "-"):
        sys.stdout.write(text + "\n")
    else:
        Path(path).write_text(text + "\n")


def load_config(path) -> dict:
    """Read a JSON or TOML mapping."""
    path = Path(path)
    try:
        raw = path.read_bytes()
    except OSError as exc:
        raise DataError(f"cannot read config {path}: {exc.strerror or exc}") from exc
    try:
        if path.suffix.lower() == ".toml":
            try:
                import tomllib
            except ModuleNotFoundError:  # Python < 3.11
                import tomli as tomllib
            return tomllib.loads(raw.decode())
        return json.loads(raw)
    except (ValueError, UnicodeDecodeError) as exc:
        raise DataError(f"malformed config {path}: {exc}") from exc


def _check_positive(value, name, minimum=1):
    if value is not None and value < minimum:
        raise DomainError(f"--{name} must be >= {minimum}")


# --------------------------------------------------------------------------
# subcommands
# --------------------------------------------------------------------------

def cmd_simulate(args):
    ds = _floats(args.d)
    taus = _floats(args.taus)
    if not ds:
        raise DomainError("--d needs at least one memory parameter")
    _check_positive(args.n, "n")
    spec = ProcessSpec.single(args.family, ds, taus, n=args.n, psi=args.psi, theta=args.theta,
                              innovation=args.innovation, truncation=args.truncation)
    traj = synthesize(spec, args.seed)
    if args.out in (None, "-"):
        sys.stdout.write("".join(repr(float(v)) + "\n" for v in traj.values))
    else:
        write_trajectory(args.out, traj)
        log.info("wrote %d values to %s", len(traj), args.out)
    return 0


def cmd_estimate_d(args):
    x = read_trajectory(args.input).values
    n = len(x)
    m = defaults.bandwidth(n) if args.m is None else args.m
    prefix = build_prefix(x, m)
    w = SegmentWindow(*_range(args.window, "--window")).check(n) if args.window else SegmentWindow(0, n)
    if args.dump_periodogram:
        write_periodogram_csv(args.dump_periodogram, prefix, w)
    fit = estimate_d(prefix, w, backend=args.backend)
    _write_json({**fit.to_dict(), "m": m, "window": [w.a, w.b]}, args.out)
    return 0


def cmd_detect(args):
    x = read_trajectory(args.input).values
    for name in ("m", "step", "min_seg"):
        _check_positive(getattr(args, name), name.replace("_", "-"))
    _check_positive(args.kmax, "kmax", 0)
    _check_positive(args.known_k, "known-k", 0)
    if args.zn is not None and not args.zn >= 0:
        raise DomainError("--zn must be >= 0")
    fit_range = range(*(lambda a, b: (a, b + 1))(*_range(args.fit_range, "--fit-range"))) \
        if args.fit_range else None
    res = detect_breaks(
        x, rule=args.rule, z_n=args.zn, known_k=args.known_k, fit_range=fit_range,
        m=args.m, k_max=args.kmax, step=args.step, min_seg=args.min_seg,
        threads=args.threads, backend=args.backend,
    )
    if args.emit_curve:
        sel = res.selection
        slope = (sel.s_hat if sel.rule == "slope" else sel.z_n) or 0.0
        emit_curve(res, args.emit_curve, slope)
    _write_json(res.to_dict(), args.out)
    return 0


def _experiments_from(cfg: dict, reps=None, seed0=None):
    shared = dict(cfg.get("defaults", {}))
    for key in ("reps", "seed0"):
        if key in cfg:
            shared.setdefault(key, cfg[key])
    items = cfg.get("experiments")
    if items is None:
        items = [{k: v for k, v in cfg.items() if k not in ("defaults", "threads")}]
    out = []
    for item in items:
        data = {**shared, **item}
        if reps is not None:
            data["reps"] = reps
        if seed0 is not None:
            data["seed0"] = seed0
        try:
            out.append(ExperimentConfig.from_dict(data))
        except TypeError as exc:
            raise DomainError(f"bad experiment entry: {exc}") from None
    return out


def cmd_montecarlo(args):
    cfg = load_config(args.config)
    _check_positive(args.reps, "reps")
    threads = args.threads if args.threads is not None else cfg.get("threads")
    exps = _experiments_from(cfg, args.reps, args.seed0)
    tables = []
    for e in exps:
        log.info("running %s (%s, %d reps)", e.name, e.mode, e.reps)
        tables.append(run(e, threads=threads, backend=args.backend))
    md = tables_to_markdown(tables)
    sys.stdout.write(md)
    if args.out_dir:
        out = Path(args.out_dir)
        out.mkdir(parents=True, exist_ok=True)
        (out / "tables.md").write_text(md)
        (out / "tables.csv").write_text(tables_to_csv(tables))
        for i, t in enumerate(tables):
            (out / f"replications_{i:02d}.csv").write_text(records_to_csv(t))
    return 0


def cmd_selftest(args):
    """Check that the defaults printed by --help are the ones used at runtime."""
    parser = build_parser()
    help_text = ""
    for action in parser._subparsers._group_actions:
        for sub in action.choices.values():
            help_text += sub.format_help()
    closed_forms = {
        "m": lambda n: int(math.floor(n ** 0.65)),
        "kmax": lambda n: 2 * (int(math.floor(math.log(n))) - 1),
        "zn": lambda n: 2 / math.sqrt(n),
        "bic": lambda n: 2 * math.log(n) / n,
        "step": lambda n: max(1, n // 200),
        "min-seg": lambda n: max(20, math.ceil(n / 20)),
        "truncation": lambda n: 10 * n,
    }
    checks = []
    for key, (_, fn, _) in DEFAULT_DOCS.items():
        m = re.search(rf"^\s+{re.escape(key)}: .*\[(.*)\]$", help_text, re.M)
        printed = dict(re.findall(r"n=(\d+) -> ([^,\]]+)", m.group(1))) if m else {}
        for n in _EXAMPLE_N:
            runtime = fn(n)
            shown = printed.get(str(n))
            ok = (shown is not None and math.isclose(float(shown), runtime, rel_tol=1e-5)
                  and math.isclose(closed_forms[key](n), runtime, rel_tol=1e-12))
            checks.append({"knob": key, "n": n, "help": shown, "runtime": runtime, "ok": ok})
    ok = all(c["ok"] for c in checks)
    _write_json({"ok": ok, "checks": checks}, args.out)
    return 0 if ok else 4


# --------------------------------------------------------------------------
# parser
# --------------------------------------------------------------------------

def build_parser():
    p = _Parser(prog="whittlecp", description=__doc__.splitlines()[0],
                formatter_class=argparse.RawDescriptionHelpFormatter)
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON or TOML file whose keys mirror the long flags")
    common.add_argument("--threads", type=int, default=None,
                        help=f"worker threads (default: WHITTLECP_THREADS or {default_threads()})")
    common.add_argument("--backend", choices=("numba", "numpy"), default=None,
                        help="kernel implementation (default: numba unless WHITTLECP_DISABLE_NUMBA=1)")
    common.add_argument("-v", "--verbose", action="count", default=0)
    common.add_argument("--out", default=None, help="output path (default: stdout)")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)
    fmt = argparse.RawDescriptionHelpFormatter

    s = sub.add_parser("simulate", parents=[common], formatter_class=fmt,
                       help="simulate a piecewise long-memory series",
                       epilog=defaults_epilog(["truncation"]))
    s.add_argument("--family", choices=FAMILIES, default="farima00")
    s.add_argument("--d", required=False, default=None,
                   help="memory parameter per regime, comma separated, each in [0, 0.5)")
    s.add_argument("--taus", default="", help="relative change times in (0,1), comma separated")
    s.add_argument("--psi", type=float, default=-0.7, help="AR coefficient (farima11)")
    s.add_argument("--theta", type=float, default=0.3, help="MA coefficient (farima11)")
    s.add_argument("--n", type=int, default=1000)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--innovation", choices=INNOVATIONS, default="normal")
    s.add_argument("--truncation", type=int, default=None)
    s.set_defaults(func=cmd_simulate)

    e = sub.add_parser("estimate-d", parents=[common], formatter_class=fmt,
                       help="local Whittle estimate of d on a window",
                       epilog=defaults_epilog(["m"]))
    e.add_argument("--input", required=False, default=None, help="CSV (one value per line) or JSON series")
    e.add_argument("--m", type=int, default=None, help="bandwidth")
    e.add_argument("--window", default=None, help="a:b selects samples a+1..b (default: all)")
    e.add_argument("--dump-periodogram", default=None, help="write (j, lambda_j, I) rows to this CSV")
    e.set_defaults(func=cmd_estimate_d)

    d = sub.add_parser("detect", parents=[common], formatter_class=fmt,
                       help="detect changes in the memory parameter",
                       epilog=defaults_epilog(["m", "kmax", "zn", "bic", "step", "min-seg"]))
    d.add_argument("--input", required=False, default=None)
    d.add_argument("--m", type=int, default=None, help="bandwidth")
    d.add_argument("--kmax", type=int, default=None, help="largest number of breaks")
    d.add_argument("--rule", choices=("fixed", "bic", "slope"), default="slope")
    d.add_argument("--zn", type=float, default=None, help="penalty per break for --rule fixed")
    d.add_argument("--step", type=int, default=None, help="candidate grid spacing (1 = exact)")
    d.add_argument("--min-seg", dest="min_seg", type=int, default=None, help="minimum segment length")
    d.add_argument("--known-k", dest="known_k", type=int, default=None,
                   help="fix the number of breaks instead of selecting it")
    d.add_argument("--fit-range", dest="fit_range", default=None,
                   help="K range a:b (inclusive) for the slope fit (default: ceil(kmax/2):kmax)")
    d.add_argument("--emit-curve", dest="emit_curve", default=None,
                   help="write K, 2C(K), 2C(K)+2*slope*K to this CSV")
    d.set_defaults(func=cmd_detect)

    mc = sub.add_parser("montecarlo", parents=[common], formatter_class=fmt,
                        help="replicated experiments (RMSE and recognition tables)",
                        epilog=defaults_epilog(["m", "kmax", "zn", "step", "min-seg", "truncation"]))
    mc.add_argument("--reps", type=int, default=None, help="override replications per experiment")
    mc.add_argument("--seed0", type=int, default=None, help="override the base seed")
    mc.add_argument("--out-dir", dest="out_dir", default=None,
                    help="directory for tables.md, tables.csv and per-replication CSVs")
    mc.set_defaults(func=cmd_montecarlo)

    st = sub.add_parser("selftest", parents=[common], help="check help-text defaults against runtime")
    st.set_defaults(func=cmd_selftest)
    return p


def _apply_config(parser, argv):
    """Let ``--config`` supply defaults for any long flag of the chosen subcommand."""
    args = parser.parse_args(argv)
    if not args.config or args.command == "montecarlo":
        return args
    cfg = load_config(args.config)
    subparser = parser._subparsers._group_actions[0].choices[args.command]
    dests = {a.dest for a in subparser._actions}
    mapped = {}
    for key, value in cfg.items():
        dest = key.replace("-", "_")
        if dest == "min_segment":
            dest = "min_seg"
        if dest not in dests:
            raise DomainError(f"config key {key!r} is not a flag of {args.command}")
        mapped[dest] = value
    subparser.set_defaults(**mapped)
    return parser.parse_args(argv)


def main(argv=None):
    parser = build_parser()
    argv = sys.argv[1:] if argv is None else list(argv)
    try:
        args = _apply_config(parser, argv)
        logging.basicConfig(level=logging.WARNING - 10 * min(args.verbose, 2),
                            format="%(levelname)s %(message)s")
        if args.command in ("estimate-d", "detect") and not args.input:
            raise DomainError("--input is required")
        if args.command == "simulate" and args.d is None:
            raise DomainError("--d is required")
        if args.command == "montecarlo" and not args.config:
            raise DomainError("--config is required")
        return args.func(args)
    except WhittleCPError as exc:
        _emit_error(exc.kind, str(exc), exc.exit_code)
        return exc.exit_code
    except FloatingPointError as exc:
        _emit_error("numeric", str(exc), 4)
        return 4


if __name__ == "__main__":
    sys.exit(main())
