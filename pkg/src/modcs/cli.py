"""Command-line front end.

Subcommands
-----------
simulate   run an experiment described by a key=value config file
benchmark  run one of the four built-in benchmark panels (a-d)
check      evaluate a stability-condition report for given parameters
ric        estimate restricted isometry / orthogonality constants
zeta       estimate the support-error spread factor for a problem size

Exit codes: 0 success, 1 usage/config error, 2 runtime failure.  Every run
writes a manifest.json recording its parameters into the output directory.
"""

from __future__ import annotations

import argparse
import json
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from .analysis import (
    ExhaustiveRicRoc,
    SampledRicRoc,
    check_add_ls_del_stability,
    check_add_ls_del_stability_general,
    check_add_ls_del_stability_relaxed,
    check_lscs_stability,
    check_modcs_stability,
    estimate_zeta,
)
from .harness import (
    BENCHMARK_PANELS,
    ExperimentSpec,
    benchmark_spec,
    run_experiment,
    write_outputs,
)
from .recovery import ALGORITHMS, RecoveryConfig
from .sensing import (
    DEFAULT_SUBSET_BUDGET,
    gaussian_matrix,
    load_matrix_csv,
    ric_exhaustive,
    ric_sampled,
    roc,
)
from .signal_model import GENERATORS, ModelParams


class UsageError(Exception):
    """Bad flags or config content; exits with status 1."""


class _Parser(argparse.ArgumentParser):
    # the contract reserves exit status 1 for usage errors (argparse
    # defaults to 2, which we use for runtime failures instead)
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


# ---------------------------------------------------------------------------
# config files (simulate)
# ---------------------------------------------------------------------------

_INT_KEYS = {"m", "s0", "sa", "d", "n", "n0", "horizon", "trials",
             "master_seed", "trial_offset", "solver_max_iters"}
_FLOAT_KEYS = {"r", "noise_c", "epsilon", "alpha", "alpha_add", "alpha_del",
               "solver_epsilon", "solver_opt_tol"}
_STR_KEYS = {"generator", "algorithms", "init", "noise", "output_dir"}
_ALL_KEYS = _INT_KEYS | _FLOAT_KEYS | _STR_KEYS


def parse_config_text(text: str) -> dict:
    """Parse `key = value` lines; '#' starts a comment, blanks ignored."""
    out = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise UsageError(f"config line {lineno}: expected key = value, "
                             f"got {raw.strip()!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        out[key] = value
    return out


def _convert(key: str, value: str):
    if key not in _ALL_KEYS:
        raise UsageError(f"unknown config key {key!r}")
    try:
        if key in _INT_KEYS:
            return int(value)
        if key in _FLOAT_KEYS:
            # accept simple fractions like 2/3 for the magnitude step
            if "/" in value:
                num, den = value.split("/", 1)
                return float(num) / float(den)
            return float(value)
    except (ValueError, ZeroDivisionError):
        raise UsageError(f"config key {key}: cannot parse {value!r}") from None
    return value


def build_spec(mapping: dict) -> ExperimentSpec:
    """Build an ExperimentSpec from string config values.

    Required keys: m, s0, sa, r, n, algorithms, and one of noise_c /
    epsilon / noise=none.  Threshold keys (alpha, alpha_add, alpha_del),
    init, and solver_epsilon apply to every algorithm that uses them.
    """
    cfg = {k: _convert(k, v) for k, v in mapping.items()}
    missing = [k for k in ("m", "s0", "sa", "r", "n", "algorithms")
               if k not in cfg]
    if missing:
        raise UsageError("config is missing required keys: "
                         + ", ".join(missing))
    if cfg.get("noise", "") == "none":
        cfg["noise_c"] = 0.0
    if "noise_c" not in cfg and "epsilon" not in cfg:
        raise UsageError("config needs noise_c, epsilon, or noise = none")
    generator = cfg.get("generator", "shift")
    if generator not in GENERATORS:
        raise UsageError(f"generator must be one of {sorted(GENERATORS)}")
    try:
        model = ModelParams(m=cfg["m"], s0=cfg["s0"], sa=cfg["sa"],
                            r=cfg["r"], d=cfg.get("d", 3),
                            generator=generator, seed=0)
        names = [s.strip() for s in cfg["algorithms"].split(",") if s.strip()]
        if not names:
            raise UsageError("algorithms list is empty")
        configs = []
        for name in names:
            if name not in ALGORITHMS:
                raise UsageError(f"unknown algorithm {name!r}; choose from "
                                 + ", ".join(sorted(ALGORITHMS)))
            kwargs = {"algorithm": name, "init": cfg.get("init", "oracle"),
                      "epsilon": cfg.get("solver_epsilon")}
            if name in ("modcs-add-ls-del", "lscs"):
                for k in ("alpha_add", "alpha_del"):
                    if k not in cfg:
                        raise UsageError(f"algorithm {name} needs {k}")
                kwargs["alpha_add"] = cfg["alpha_add"]
                kwargs["alpha_del"] = cfg["alpha_del"]
            else:
                if "alpha" not in cfg:
                    raise UsageError(f"algorithm {name} needs alpha")
                kwargs["alpha"] = cfg["alpha"]
            configs.append(RecoveryConfig(**kwargs))
        return ExperimentSpec(
            model=model, n=cfg["n"], noise_c=cfg.get("noise_c"),
            algorithms=tuple(configs), horizon=cfg.get("horizon", 200),
            trials=cfg.get("trials", 100),
            master_seed=cfg.get("master_seed", 0),
            n0=cfg.get("n0"), trial_offset=cfg.get("trial_offset", 0),
            epsilon=cfg.get("epsilon"),
            solver_opt_tol=cfg.get("solver_opt_tol", 1e-5),
            solver_max_iters=cfg.get("solver_max_iters", 2500),
            output_dir=cfg.get("output_dir"))
    except UsageError:
        raise
    except ValueError as exc:
        raise UsageError(str(exc)) from exc


# ---------------------------------------------------------------------------
# shared helpers
# ---------------------------------------------------------------------------


def _write_cli_manifest(out_dir, command: str, params: dict,
                        files=()) -> Path:
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    manifest = {
        "created_unix": int(time.time()),
        "package_version": __version__,
        "numpy_version": np.__version__,
        "command": command,
        "params": params,
        "files": [str(f) for f in files],
    }
    path = out_dir / "manifest.json"
    path.write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    return path


def _load_matrix(args) -> tuple:
    """Matrix from --matrix FILE or --gaussian N,M[,SEED]; returns (A, desc)."""
    if args.matrix:
        A = load_matrix_csv(args.matrix)
        return A, {"matrix": str(args.matrix), "shape": list(A.shape)}
    if args.gaussian:
        parts = args.gaussian.split(",")
        if len(parts) not in (2, 3):
            raise UsageError("--gaussian wants N,M or N,M,SEED")
        try:
            n, m = int(parts[0]), int(parts[1])
            seed = int(parts[2]) if len(parts) == 3 else 0
        except ValueError:
            raise UsageError(f"--gaussian: cannot parse {args.gaussian!r}") \
                from None
        return gaussian_matrix(n, m, seed), \
            {"gaussian": {"n": n, "m": m, "seed": seed}}
    raise UsageError("give a matrix via --matrix FILE or --gaussian N,M[,SEED]")


def _print_series_summary(result, stream=sys.stdout):
    series = result.series()
    tail = slice(max(0, result.spec.horizon // 2), None)
    for a in series.algorithms:
        print(f"  {a:18s} nmse[last]={series.nmse[a][-1]:.3e}  "
              f"nmse[mean,tail]={float(np.mean(series.nmse[a][tail])):.3e}  "
              f"misses[last]={series.misses_norm[a][-1]:.3e}  "
              f"extras[last]={series.extras_norm[a][-1]:.3e}",
              file=stream)


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------


def cmd_simulate(args) -> int:
    mapping = {}
    if args.config:
        path = Path(args.config)
        if not path.exists():
            raise UsageError(f"config file not found: {path}")
        mapping.update(parse_config_text(path.read_text()))
    for item in args.set or []:
        if "=" not in item:
            raise UsageError(f"--set wants key=value, got {item!r}")
        key, value = item.split("=", 1)
        mapping[key.strip()] = value.strip()
    if not mapping:
        raise UsageError("simulate needs --config FILE and/or --set key=value")
    spec = build_spec(mapping)
    out_dir = args.out or spec.output_dir or "."
    result = run_experiment(spec, progress=args.progress)
    written = write_outputs(result, out_dir)
    print(f"simulate: {spec.trials} trials x {spec.horizon} steps, "
          f"{len(spec.algorithms)} algorithm(s), "
          f"{result.wall_seconds:.1f}s")
    _print_series_summary(result)
    print(f"outputs in {Path(out_dir).resolve()}")
    return 0


def cmd_benchmark(args) -> int:
    algorithms = None
    if args.algorithms:
        algorithms = [s.strip() for s in args.algorithms.split(",")
                      if s.strip()]
    try:
        spec = benchmark_spec(args.panel, trials=args.trials,
                              horizon=args.horizon, master_seed=args.seed,
                              algorithms=algorithms)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    out_dir = args.out or f"panel_{args.panel}"
    result = run_experiment(spec, progress=args.progress)
    write_outputs(result, out_dir)
    p = BENCHMARK_PANELS[args.panel]
    print(f"benchmark panel {args.panel}: n={p['n']} r={p['r']:.4g} "
          f"d={p['d']}, {spec.trials} trials x {spec.horizon} steps, "
          f"{result.wall_seconds:.1f}s")
    _print_series_summary(result)
    print(f"outputs in {Path(out_dir).resolve()}")
    return 0


_REPORTS = ("modcs-stability", "add-ls-del-stability",
            "add-ls-del-stability-relaxed", "add-ls-del-stability-general",
            "lscs-stability")


def cmd_check(args) -> int:
    A, matrix_desc = _load_matrix(args)
    if args.mode == "exhaustive":
        provider = ExhaustiveRicRoc(A, budget=args.budget)
    else:
        provider = SampledRicRoc(A, num_samples=args.samples, seed=args.seed)
    common = dict(s0=args.s0, sa=args.sa, epsilon=args.epsilon, r=args.r,
                  provider=provider)
    name = args.report
    try:
        if name == "modcs-stability":
            report = check_modcs_stability(**common)
        elif name == "add-ls-del-stability":
            report = check_add_ls_del_stability(alpha_add=args.alpha_add,
                                                **common)
        elif name == "add-ls-del-stability-relaxed":
            report = check_add_ls_del_stability_relaxed(
                alpha_add=args.alpha_add, zeta=args.zeta, **common)
        elif name == "add-ls-del-stability-general":
            report = check_add_ls_del_stability_general(
                alpha_add=args.alpha_add, zeta=args.zeta, d0=args.d0,
                f=args.f if args.f is not None else args.sa, **common)
        else:
            report = check_lscs_stability(alpha_add=args.alpha_add, **common)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    print(report.render())
    files = []
    if args.csv:
        import csv as _csv
        rows = report.to_rows()
        Path(args.csv).parent.mkdir(parents=True, exist_ok=True)
        with open(args.csv, "w", newline="") as fh:
            writer = _csv.DictWriter(fh, fieldnames=list(rows[0].keys()))
            writer.writeheader()
            writer.writerows(rows)
        files.append(args.csv)
    params = {k: v for k, v in vars(args).items()
              if k not in ("func", "matrix", "gaussian")}
    params["matrix_source"] = matrix_desc
    params["status"] = report.status
    _write_cli_manifest(args.out, "check", params, files)
    return 0


def cmd_ric(args) -> int:
    if not args.s and not args.theta:
        raise UsageError("give at least one --s S or --theta S1,S2")
    A, matrix_desc = _load_matrix(args)
    estimates = []
    for s in args.s or []:
        if args.mode == "exhaustive":
            est = ric_exhaustive(A, s, budget=args.budget)
        else:
            est = ric_sampled(A, s, num_samples=args.samples, seed=args.seed)
        estimates.append(("delta", est))
    for pair in args.theta or []:
        try:
            s1, s2 = (int(p) for p in pair.split(","))
        except ValueError:
            raise UsageError(f"--theta wants S1,S2, got {pair!r}") from None
        est = roc(A, s1, s2, mode=args.mode, num_samples=args.samples,
                  seed=args.seed, budget=args.budget)
        estimates.append(("theta", est))
    print(f"matrix: {A.shape[0]} x {A.shape[1]}")
    rows = []
    for kind, est in estimates:
        order = ",".join(str(v) for v in est.order)
        note = "exact" if est.method == "exhaustive" else "lower bound"
        print(f"  {kind}({order}) = {est.value:.6f}   [{est.method}: "
              f"{est.subsets_examined} subsets, {note}]")
        rows.append({"kind": kind, "order": order, "value": est.value,
                     "method": est.method,
                     "subsets_examined": est.subsets_examined})
    params = {k: v for k, v in vars(args).items()
              if k not in ("func", "matrix", "gaussian")}
    params["matrix_source"] = matrix_desc
    params["estimates"] = rows
    _write_cli_manifest(args.out, "ric", params)
    return 0


def cmd_zeta(args) -> int:
    n = args.n
    if n is None:
        # default measurement count scales like S0 * log2(m)
        n = int(np.ceil(0.3861 * args.s0 * np.log2(args.m)))
    try:
        value = estimate_zeta(m=args.m, s0=args.s0, sa=args.sa, r=args.r,
                              d=args.d, n=n, c=args.c, trials=args.trials,
                              horizon=args.horizon, seed=args.seed)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    print(f"zeta estimate: {value:.4f}  (m={args.m}, n={n}, s0={args.s0}, "
          f"sa={args.sa}, r={args.r:.4g}, trials={args.trials})")
    params = {k: v for k, v in vars(args).items() if k != "func"}
    params["n_used"] = n
    params["zeta"] = value
    _write_cli_manifest(args.out, "zeta", params)
    return 0


# ---------------------------------------------------------------------------
# parser
# ---------------------------------------------------------------------------


def _add_matrix_flags(p):
    p.add_argument("--matrix", help="CSV file holding the sensing matrix")
    p.add_argument("--gaussian", metavar="N,M[,SEED]",
                   help="generate an N x M iid Gaussian matrix instead")
    p.add_argument("--mode", choices=("exhaustive", "sampled"),
                   default="exhaustive",
                   help="exhaustive = exact (budget-limited); sampled = "
                        "lower bound")
    p.add_argument("--samples", type=int, default=20000,
                   help="subset samples for --mode sampled")
    p.add_argument("--budget", type=int, default=DEFAULT_SUBSET_BUDGET,
                   help="max subsets for --mode exhaustive")
    p.add_argument("--seed", type=int, default=0,
                   help="seed for sampled subset draws")
    p.add_argument("--out", default=".",
                   help="directory for manifest.json (default: .)")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="modcs",
                     description="Recursive recovery of time sequences of "
                                 "sparse signals: experiments, stability "
                                 "checks, and constant estimation.")
    parser.add_argument("--version", action="version",
                        version=f"modcs {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="run an experiment from a config "
                                        "file (key = value lines)")
    p.add_argument("--config", help="config file path")
    p.add_argument("--set", action="append", metavar="KEY=VALUE",
                   help="override/supply a config value (repeatable)")
    p.add_argument("--out", help="output directory (default: config "
                                 "output_dir or .)")
    p.add_argument("--progress", action="store_true",
                   help="print per-trial progress")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("benchmark", help="run a built-in benchmark panel")
    p.add_argument("--panel", required=True, choices=sorted(BENCHMARK_PANELS))
    p.add_argument("--trials", type=int, default=100)
    p.add_argument("--horizon", type=int, default=200)
    p.add_argument("--seed", type=int, default=0, help="master seed")
    p.add_argument("--algorithms",
                   help="comma list overriding the default five")
    p.add_argument("--out", help="output directory (default: panel_<x>)")
    p.add_argument("--progress", action="store_true")
    p.set_defaults(func=cmd_benchmark)

    p = sub.add_parser("check", help="evaluate a stability-condition report")
    p.add_argument("--report", required=True, choices=_REPORTS)
    p.add_argument("--s0", type=int, required=True,
                   help="initial support size")
    p.add_argument("--sa", type=int, required=True,
                   help="per-step support change size")
    p.add_argument("--epsilon", type=float, required=True,
                   help="measurement noise norm bound")
    p.add_argument("--r", type=float, required=True,
                   help="per-step magnitude increase")
    p.add_argument("--alpha-add", dest="alpha_add", type=float, default=0.0,
                   help="addition threshold (add-LS-del reports)")
    p.add_argument("--zeta", type=float, default=1.0,
                   help="support-error spread factor (relaxed/general)")
    p.add_argument("--d0", type=int, default=2,
                   help="magnitude rungs (general report)")
    p.add_argument("--f", type=int, default=None,
                   help="false-addition allowance (general report; "
                        "default sa)")
    p.add_argument("--csv", help="also write the report rows as CSV here")
    _add_matrix_flags(p)
    p.set_defaults(func=cmd_check)

    p = sub.add_parser("ric", help="estimate restricted isometry / "
                                   "orthogonality constants")
    p.add_argument("--s", type=int, action="append", metavar="S",
                   help="estimate delta(S) (repeatable)")
    p.add_argument("--theta", action="append", metavar="S1,S2",
                   help="estimate theta(S1,S2) (repeatable)")
    _add_matrix_flags(p)
    p.set_defaults(func=cmd_ric)

    p = sub.add_parser("zeta", help="estimate the support-error spread "
                                    "factor")
    p.add_argument("--m", type=int, required=True, help="signal length")
    p.add_argument("--s0", type=int, default=None,
                   help="initial support size (default m/10)")
    p.add_argument("--sa", type=int, default=None,
                   help="per-step change size (default m/100)")
    p.add_argument("--r", type=float, default=1.0)
    p.add_argument("--d", type=int, default=3)
    p.add_argument("--n", type=int, default=None,
                   help="measurements (default ceil(0.3861 s0 log2 m))")
    p.add_argument("--c", type=float, default=0.1266,
                   help="noise half-width")
    p.add_argument("--trials", type=int, default=500)
    p.add_argument("--horizon", type=int, default=20)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default=".",
                   help="directory for manifest.json (default: .)")
    p.set_defaults(func=cmd_zeta)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.command == "zeta":
        if args.s0 is None:
            args.s0 = max(1, round(0.1 * args.m))
        if args.sa is None:
            args.sa = max(1, round(0.01 * args.m))
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"modcs: error: {exc}", file=sys.stderr)
        return 1
    except Exception as exc:  # noqa: BLE001 - surface runtime failures as exit 2
        print(f"modcs: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
