"""Command-line interface: rates, scenario runs, figure data, Markov comparison, oracle audits.

Exit codes: 0 success, 2 configuration or domain error, 3 numerical failure.
"""
from __future__ import annotations

import argparse
import csv
import json
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .entanglement import concurrence_series
from .errors import ConsistencyError, DomainError, NumericalError, UsageError
from .evolution import Basis, Trajectory
from .markov import compare_markov, lindblad_integrate
from .rates import SystemParams, compute_rates
from .scenarios import ScenarioKind, ScenarioSpec, build_initial, decoherence_report, evolve_scenario

EXIT_OK, EXIT_CONFIG, EXIT_NUMERICAL = 0, 2, 3
WORKERS_ENV = "NMPAIR_WORKERS"
MODELS = ("nonmarkov", "markov", "both", "oracle")

DEFAULTS = {
    "lambda": 0.1,
    "omega0": 1.0,
    "r": None,
    "omega0r": 1.0,
    "scenario": "class_a",
    "p": 0.5,
    "tmax": 5.0,
    "n": 201,
    "model": "nonmarkov",
    "out": None,
    "format": "csv",
}


class ConfigError(DomainError):
    """Invalid or unresolvable run configuration."""


@dataclass(frozen=True)
class RunConfig:
    """Resolved run configuration (defaults < JSON file < flags)."""

    params: SystemParams
    scenario: ScenarioKind
    p: float
    tmax: float
    n: int
    model: str
    out: str | None
    fmt: str

    def spec(self) -> ScenarioSpec:
        return ScenarioSpec.on_gamma0_grid(self.scenario, self.params, self.tmax, self.n, self.p)

    def warnings(self) -> list[str]:
        return self.params.validity_warnings()


def _load_config(path: str | None) -> dict:
    if not path:
        return {}
    try:
        with open(path, encoding="utf-8") as fh:
            data = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    if not isinstance(data, dict):
        raise ConfigError("config file must hold a JSON object")
    unknown = set(data) - set(DEFAULTS) - {"N", "k_max", "values", "outdir"}
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")
    return data


def _merged(args, **defaults) -> dict:
    cfg = dict(DEFAULTS, **defaults)
    cfg.update(_load_config(getattr(args, "config", None)))
    for key in list(DEFAULTS) + ["N", "k_max", "values", "outdir"]:
        val = getattr(args, key.replace("-", "_"), None)
        if val is not None:
            cfg[key] = val
    # an explicit r on the command line wins over any omega0r
    if getattr(args, "r", None) is not None:
        cfg["omega0r"] = None
    return cfg


def _params(cfg: dict) -> SystemParams:
    try:
        lam, w0 = float(cfg["lambda"]), float(cfg["omega0"])
        if cfg.get("r") is not None:
            return SystemParams(lam, w0, float(cfg["r"]))
        return SystemParams.from_dimensionless(lam, w0, float(cfg["omega0r"]))
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from exc


def resolve_config(cfg: dict) -> RunConfig:
    params = _params(cfg)
    try:
        kind = ScenarioKind(cfg["scenario"])
    except ValueError as exc:
        raise ConfigError(f"unknown scenario {cfg['scenario']!r}") from exc
    if cfg["model"] not in MODELS:
        raise ConfigError(f"model must be one of {MODELS}")
    n = int(cfg["n"])
    tmax = float(cfg["tmax"])
    if n < 2 or tmax <= 0:
        raise ConfigError("need n >= 2 and tmax > 0")
    if cfg["format"] not in ("csv", "json"):
        raise ConfigError("format must be csv or json")
    return RunConfig(params, kind, float(cfg["p"]), tmax, n, cfg["model"], cfg["out"], cfg["format"])


# --- output ------------------------------------------------------------------


def _fmt(x) -> str:
    if isinstance(x, str):
        return x
    return "%.17g" % x


def write_csv(path: str | None, header, rows) -> None:
    """CSV with a header row, 17 significant digits and LF line endings."""
    fh = open(path, "w", newline="", encoding="utf-8") if path else sys.stdout
    try:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([_fmt(x) for x in row])
    finally:
        if path:
            fh.close()


def write_json(path: str | None, obj) -> None:
    text = json.dumps(obj, indent=2, sort_keys=True) + "\n"
    if path:
        with open(path, "w", newline="\n", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _workers(n_tasks: int) -> int:
    cap = os.environ.get(WORKERS_ENV)
    try:
        cap = int(cap) if cap else os.cpu_count() or 1
    except ValueError:
        cap = 1
    return max(1, min(n_tasks, cap))


def _map(fn, items):
    """Ordered map over items, run concurrently up to the worker cap."""
    items = list(items)
    with ThreadPoolExecutor(_workers(len(items))) as pool:
        return list(pool.map(fn, items))


# --- commands ----------------------------------------------------------------


def cmd_rates(args) -> int:
    cfg = _merged(args)
    params = _params(cfg)
    for msg in params.validity_warnings():
        print(f"warning: {msg}", file=sys.stderr)
    rates = compute_rates(params)
    out = {
        "gamma0": rates.gamma0,
        "gammaR": rates.gammaR,
        "sigma": rates.sigma,
        "gammaR_over_gamma0": rates.ratio,
        "sigma_over_gamma0": rates.sigma / rates.gamma0 if rates.gamma0 else float("nan"),
        "omega0_r": params.omega0_r,
    }
    if args.json:
        write_json(None, out)
    else:
        for k, v in out.items():
            print(f"{k} = {v:.17g}")
    return EXIT_OK


_TRAJ_HEADER = ["model", "gamma0_t", "concurrence", "rho_OO", "rho_mm", "rho_pp", "rho_II",
                "re_rho_IO", "im_rho_IO", "re_rho_pm", "im_rho_pm"]


def _traj_rows(traj: Trajectory, gamma0: float):
    bell = traj.in_basis(Basis.BELL)
    conc = concurrence_series(traj).values
    for i, t in enumerate(bell.times):
        m = bell.states[i]
        yield [traj.model, gamma0 * t, conc[i], m[0, 0].real, m[1, 1].real, m[2, 2].real, m[3, 3].real,
               m[3, 0].real, m[3, 0].imag, m[2, 1].real, m[2, 1].imag]


def _run_model(run: RunConfig, model: str) -> Trajectory:
    spec = run.spec()
    if model == "nonmarkov":
        return evolve_scenario(spec)
    if model == "markov":
        return lindblad_integrate(build_initial(spec), spec.params, spec.tgrid)
    from .oracle import build_mode_grid, integrate_amplitudes, reconstruct_rho

    grid = build_mode_grid(spec.params, 2000)
    return reconstruct_rho(integrate_amplitudes(grid, tgrid=spec.tgrid), spec)


def cmd_evolve(args) -> int:
    run = resolve_config(_merged(args))
    for msg in run.warnings():
        print(f"warning: {msg}", file=sys.stderr)
    models = ["nonmarkov", "markov"] if run.model == "both" else [run.model]
    trajs = _map(lambda m: _run_model(run, m), models)
    g0 = compute_rates(run.params).gamma0
    rows = [row for tr in trajs for row in _traj_rows(tr, g0)]
    if run.fmt == "json":
        write_json(run.out, {"header": _TRAJ_HEADER, "rows": rows})
    else:
        write_csv(run.out, _TRAJ_HEADER, rows)
    return EXIT_OK


FIGURES = {
    1: ("class_a", "omega0r", (0.1, 0.5, 1.0, 5.0, 50.0)),
    2: ("class_a", "p", (0.3, 0.5, 0.7, 0.9)),
    3: ("bell_minus", "omega0r", (0.5, 1.0, 2.0)),
    4: ("bell_plus", "omega0r", (0.5, 1.0, 2.0)),
}


def figure_curves(n: int, cfg: dict) -> dict:
    """Concurrence curves for figure ``n``: {label: (gamma0_t, concurrence)}."""
    if n not in FIGURES:
        raise ConfigError("figure number must be 1, 2, 3 or 4")
    kind, sweep, values = FIGURES[n]
    if cfg.get("values"):
        values = tuple(float(v) for v in cfg["values"])

    def one(val):
        c = dict(cfg, scenario=kind)
        c[sweep] = val
        if sweep == "omega0r":
            c["r"] = None
        run = resolve_config(c)
        traj = evolve_scenario(run.spec())
        g0 = compute_rates(run.params).gamma0
        return f"{sweep}={val:g}", (g0 * traj.times, concurrence_series(traj).values)

    return dict(_map(one, values))


def cmd_figure(args) -> int:
    cfg = _merged(args)
    curves = figure_curves(args.number, cfg)
    outdir = cfg.get("outdir") or "."
    os.makedirs(outdir, exist_ok=True)
    for label, (t, c) in curves.items():
        path = os.path.join(outdir, f"fig{args.number}_{label.replace('=', '_')}.csv")
        write_csv(path, ["gamma0_t", "concurrence"], zip(t, c))
        print(path)
    return EXIT_OK


def cmd_compare_markov(args) -> int:
    cfg = _merged(args, p=1.0)
    params = _params(cfg)
    cmp = compare_markov(params, float(cfg["p"]), float(cfg["tmax"]), int(cfg["n"]))
    header = ["gamma0_t", "nonmarkov_pp", "markov_pp", "ratio_pp", "rel_diff_pp", "nonmarkov_mm", "markov_mm",
              "rel_diff_mm"]
    with np.errstate(divide="ignore", invalid="ignore"):
        rows = zip(cmp.gamma0_t, cmp.nonmarkov_pp, cmp.markov_pp, cmp.ratio_pp, cmp.rel_diff_pp, cmp.nonmarkov_mm,
                   cmp.markov_mm, cmp.rel_diff_mm)
        write_csv(cfg["out"], header, rows)
    summary = {"omega0_r": params.omega0_r, "p": float(cfg["p"]), "divergence": cmp.divergence()}
    print(json.dumps(summary, sort_keys=True), file=sys.stderr if not cfg["out"] else sys.stdout)
    return EXIT_OK


def cmd_decohere(args) -> int:
    cfg = _merged(args, scenario="factorized_ground")
    run = resolve_config(cfg)
    if run.scenario not in (ScenarioKind.FACTORIZED_GROUND, ScenarioKind.FACTORIZED_EXCITED):
        raise ConfigError("decohere needs a factorized scenario")
    rep = decoherence_report(run.spec())
    write_csv(run.out, ["gamma0_t", "coherence_q1", "coherence_q2", "baseline", "ratio_q1"], rep.rows())
    return EXIT_OK


def cmd_oracle_audit(args) -> int:
    from .oracle import audit

    cfg = _merged(args)
    params = _params(cfg)
    Ns = cfg.get("N") or [2000]
    Ns = [int(x) for x in (Ns if isinstance(Ns, (list, tuple)) else [Ns])]
    k_max = cfg.get("k_max")
    reports = _map(lambda N: audit(params, N=N, k_max=k_max), Ns)
    main = reports[-1].as_dict()
    main["convergence"] = [{"N": r.N, "max_rel_error": r.errors} for r in reports]
    write_json(cfg["out"], main)
    return EXIT_OK


# --- entry point ---------------------------------------------------------------


def _add_params(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="JSON file with run settings; flags override it")
    p.add_argument("--lambda", dest="lambda", type=float, help="coupling lambda")
    p.add_argument("--omega0", type=float, help="transition frequency omega0")
    g = p.add_mutually_exclusive_group()
    g.add_argument("--omega0r", type=float, help="dimensionless separation omega0 r (default input)")
    g.add_argument("--r", type=float, help="raw separation r")


def _add_run(p: argparse.ArgumentParser) -> None:
    p.add_argument("--scenario", choices=[k.value for k in ScenarioKind])
    p.add_argument("--p", type=float, help="state parameter p")
    p.add_argument("--tmax", type=float, help="final time in units of 1/Gamma_0")
    p.add_argument("--n", type=int, help="number of samples")
    p.add_argument("--out", help="output path (stdout when omitted)")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="nmpair", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("rates", help="print Gamma_0, Gamma_r and sigma")
    _add_params(p)
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_rates)

    p = sub.add_parser("evolve", help="evolve a scenario and write a trajectory")
    _add_params(p)
    _add_run(p)
    p.add_argument("--model", choices=MODELS)
    p.add_argument("--format", choices=("csv", "json"))
    p.set_defaults(func=cmd_evolve)

    p = sub.add_parser("figure", help="concurrence curves behind figures 1-4")
    p.add_argument("number", type=int, choices=(1, 2, 3, 4))
    _add_params(p)
    _add_run(p)
    p.add_argument("--values", type=float, nargs="+", help="override the swept values")
    p.add_argument("--outdir", help="directory for the CSV files")
    p.set_defaults(func=cmd_figure)

    p = sub.add_parser("compare-markov", help="non-Markov vs Ficek-Tanas for Class A")
    _add_params(p)
    _add_run(p)
    p.set_defaults(func=cmd_compare_markov)

    p = sub.add_parser("decohere", help="single-qubit coherence of a factorized state")
    _add_params(p)
    _add_run(p)
    p.set_defaults(func=cmd_decohere)

    p = sub.add_parser("oracle-audit", help="field oracle vs closed forms (JSON report)")
    _add_params(p)
    p.add_argument("--N", type=int, nargs="+", help="mode counts; the last one is the main report")
    p.add_argument("--k-max", dest="k_max", type=float, help="mode cutoff (default 50 omega0)")
    p.add_argument("--out", help="output path (stdout when omitted)")
    p.set_defaults(func=cmd_oracle_audit)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (DomainError, UsageError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (NumericalError, ConsistencyError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
