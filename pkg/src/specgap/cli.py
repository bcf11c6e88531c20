"""Command-line front door: ``specgap <command> --scenario file.json``.

A scenario is a JSON object

    {"command": ..., "symbol": {...}, "potential": {...}, "params": {...}, "seed": 20240531}

with ``params`` defaults filled per command (see ``DEFAULTS``). Reports are
JSON (sorted keys, no timestamps) or CSV, and always carry the resolved scenario.
Exit codes: 0 success, 2 informative negative outcome (no root, no witness,
no zero crossing), 1 errors.
"""

from __future__ import annotations

import argparse
import copy
import csv
import io
import json
import math
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import constructions as cs
from . import core_model as cm
from . import eigensolve as es
from . import halfline_shooting as hl
from . import operator_grid as og
from . import specfun as sf
from . import weak_coupling as wc
from .errors import MissingZeroCrossing, NoRootError, ScenarioError, SpecgapError

COMMANDS = ("spectrum", "bs-root", "weak-coupling", "quadform", "shoot", "construct-well",
            "construct-ess-spec", "construct-spots", "construct-sparse", "diagnostics", "specfun-table")

_GRID = {"half_width": 40.0, "points": 1024}

DEFAULTS = {
    "spectrum": {"grid": _GRID, "sigma": 1.0, "count": 1, "tol": 1e-8, "sampling": "auto", "max_iter": 300},
    "bs-root": {"grid": _GRID, "sigma": 1.0, "sigmas": None, "tol": 1e-8, "bracket": None,
                "free_space": False, "sampling": "auto", "pad": 4},
    "weak-coupling": {"sigmas": [], "solve": False, "grid": _GRID, "free_space": True, "pad": 4},
    "quadform": {"sigma": 0.1, "eps_floor": 1e-12},
    "shoot": {"sigma": 0.01, "x_max": None, "method": "adaptive", "step": None, "rtol": 1e-10,
              "jost": True, "fit_sigmas": None, "resample": 20000},
    "construct-well": {"pairs": [[-1.0, 1.0]], "grid_check": None},
    "construct-ess-spec": {"epsilon": 0.1, "count": 8, "scale": 1.0},
    "construct-spots": {"dimension": 3, "amplitude": 1.0, "power": 2.0, "n_max": 10, "sigma_factor": 2.0},
    "construct-sparse": {"dimension": 3, "n0": None, "n_terms": 40, "betas": [0.5, 1.0, 2.0]},
    "diagnostics": {"delta0": 0.5, "alpha": 2.0},
    "specfun-table": {"xs": [0.1, 0.5, 1.0, 2.0, 5.0, 10.0, 20.0, 50.0], "alphas": [1.25, 1.5, 1.75, 2.0]},
}

NEEDS = {
    "spectrum": ("symbol", "potential"),
    "bs-root": ("potential",),
    "weak-coupling": ("symbol", "potential"),
    "quadform": ("symbol", "potential"),
    "shoot": ("potential",),
    "diagnostics": ("potential",),
}


@dataclass
class Scenario:
    command: str
    params: dict
    seed: int = es.DEFAULT_SEED
    symbol: object = None
    potential: object = None
    output: dict = field(default_factory=dict)

    def to_dict(self):
        out = {"command": self.command, "params": copy.deepcopy(self.params), "seed": self.seed}
        if self.output:
            out["output"] = dict(self.output)
        if self.symbol is not None:
            out["symbol"] = self.symbol.to_dict()
        if self.potential is not None:
            out["potential"] = self.potential.to_dict()
        return out


def scenario_from_dict(data, command=None):
    """Validate and resolve a scenario mapping, collecting every problem before raising."""
    problems = []
    if not isinstance(data, dict):
        raise ScenarioError("scenario must be a JSON object")
    cmd = data.get("command", command)
    if command is not None and data.get("command") not in (None, command):
        problems.append(f"command: file says {data.get('command')!r} but {command!r} was requested")
    if cmd not in COMMANDS:
        raise ScenarioError(problems + [f"command: unknown {cmd!r}; valid commands: {', '.join(COMMANDS)}"])
    for key in data:
        if key not in ("command", "symbol", "potential", "params", "seed", "output"):
            problems.append(f"{key}: unknown top-level field")
    params = copy.deepcopy(DEFAULTS[cmd])
    given = data.get("params", {})
    if not isinstance(given, dict):
        problems.append("params: must be an object")
        given = {}
    for key, val in given.items():
        if key not in params:
            problems.append(f"params.{key}: unknown parameter for {cmd} (known: {', '.join(sorted(params))})")
        elif isinstance(params[key], dict) and isinstance(val, dict):
            params[key] = {**params[key], **val}
        else:
            params[key] = val
    seed = data.get("seed", es.DEFAULT_SEED)
    if not isinstance(seed, int) or isinstance(seed, bool) or seed < 0:
        problems.append("seed: must be a non-negative integer")
        seed = es.DEFAULT_SEED

    symbol = potential = None
    for name in NEEDS.get(cmd, ()):
        if name not in data:
            problems.append(f"{name}: required for {cmd}")
    if "symbol" in data:
        try:
            symbol = cm.symbol_from_dict(data["symbol"])
        except (SpecgapError, KeyError, TypeError, ValueError) as exc:
            problems.append(f"symbol: {exc}")
    if "potential" in data:
        try:
            potential = cm.potential_from_dict(data["potential"])
        except (SpecgapError, KeyError, TypeError, ValueError) as exc:
            problems.append(f"potential: {exc}")
    if symbol is not None and potential is not None and symbol.dimension != potential.dimension:
        problems.append(f"symbol.dimension = {symbol.dimension} and potential.dimension = "
                        f"{potential.dimension} disagree")
    output = data.get("output", {})
    if not isinstance(output, dict) or set(output) - {"dir", "format"}:
        problems.append("output: object with optional 'dir' and 'format'")
        output = {}
    elif output.get("format", "json") not in ("json", "csv"):
        problems.append("output.format: json or csv")
    problems += _check_params(cmd, params, symbol, potential)
    if problems:
        raise ScenarioError(problems)
    return Scenario(cmd, params, seed, symbol, potential, dict(output))


def _positive(params, key, problems, allow_none=False):
    val = params.get(key)
    if val is None and allow_none:
        return
    if not isinstance(val, (int, float)) or isinstance(val, bool) or not val > 0:
        problems.append(f"params.{key}: must be a positive number, got {val!r}")


def _check_params(cmd, p, symbol, potential):
    problems = []
    if cmd in ("spectrum", "bs-root") or (cmd == "weak-coupling" and p.get("solve")):
        g = p["grid"]
        if not isinstance(g.get("points"), int) or g["points"] < 2 or g["points"] & (g["points"] - 1):
            problems.append("params.grid.points: must be a power of two")
        if not isinstance(g.get("half_width"), (int, float)) or not g["half_width"] > 0:
            problems.append("params.grid.half_width: must be positive")
        dim = (potential or symbol).dimension if (potential or symbol) is not None else None
        if dim is not None and dim not in (1, 2):
            problems.append(f"potential.dimension = {dim}: grids support d = 1, 2")
    if cmd == "spectrum":
        _positive(p, "tol", problems)
        if not isinstance(p["count"], int) or p["count"] < 1:
            problems.append("params.count: must be an integer >= 1")
        if not isinstance(p["sigma"], (int, float)) or p["sigma"] < 0:
            problems.append("params.sigma: must be >= 0")
    if cmd == "bs-root":
        sig = p["sigmas"] if p["sigmas"] is not None else [p["sigma"]]
        if not isinstance(sig, list) or not all(isinstance(s, (int, float)) and s > 0 for s in sig):
            problems.append("params.sigma(s): must be positive")
        if not p["free_space"] and symbol is None:
            problems.append("symbol: required unless params.free_space is true")
        if p["free_space"] and symbol is not None and not (
                isinstance(symbol, cm.PowerLaw) and symbol.alpha == 2.0):
            problems.append("symbol: free-space Birman-Schwinger covers the Laplacian (power_law, alpha = 2) only")
        if p["bracket"] is not None and (not isinstance(p["bracket"], list) or len(p["bracket"]) != 2):
            problems.append("params.bracket: must be [lambda_lo, lambda_hi]")
    if cmd == "weak-coupling":
        if not isinstance(p["sigmas"], list) or not all(isinstance(s, (int, float)) and s > 0 for s in p["sigmas"]):
            problems.append("params.sigmas: must be a list of positive numbers")
    if cmd == "quadform":
        if not isinstance(p["sigma"], (int, float)) or p["sigma"] < 0:
            problems.append("params.sigma: must be >= 0")
        _positive(p, "eps_floor", problems)
    if cmd == "shoot":
        _positive(p, "sigma", problems)
        _positive(p, "x_max", problems, allow_none=True)
        if p["method"] not in ("adaptive", "rk4"):
            problems.append("params.method: adaptive or rk4")
        if p["method"] == "rk4":
            _positive(p, "step", problems)
        if potential is not None and potential.dimension != 1:
            problems.append(f"potential.dimension = {potential.dimension}: shooting is one-dimensional")
    if cmd == "construct-well":
        pairs = p["pairs"]
        if not isinstance(pairs, list) or not pairs or not all(
                isinstance(x, list) and len(x) == 2 and x[0] < 0 < x[1] for x in pairs):
            problems.append("params.pairs: list of [lambda < 0, delta > 0]")
    if cmd == "construct-ess-spec":
        _positive(p, "epsilon", problems)
        _positive(p, "scale", problems)
        if not isinstance(p["count"], int) or p["count"] < 1:
            problems.append("params.count: must be an integer >= 1")
    if cmd in ("construct-spots", "construct-sparse"):
        if not isinstance(p["dimension"], int) or p["dimension"] < 3:
            problems.append("params.dimension: must be an integer >= 3")
    if cmd == "construct-sparse":
        if p["n0"] is not None and (not isinstance(p["n0"], int) or p["n0"] < 3):
            problems.append("params.n0: must be an integer >= 3 or null")
    return problems


def parse_scenario(path, command=None):
    """Read and validate a scenario file."""
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ScenarioError(f"cannot read scenario {path}: {exc}") from None
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ScenarioError(f"malformed JSON in {path}: {exc}") from None
    return scenario_from_dict(data, command)


# ------------------------------------------------------------------ runners

@dataclass
class Outcome:
    status: str
    result: dict
    table: tuple = ((), [])  # (header, rows) for CSV output

    @property
    def exit_code(self):
        return 0 if self.status == "ok" else 2


def _make_grid(p, dim):
    return og.Grid(dim, float(p["grid"]["half_width"]), int(p["grid"]["points"]))


def _run_spectrum(sc):
    p = sc.params
    H = og.GridHamiltonian.build(_make_grid(p, sc.potential.dimension), sc.symbol, sc.potential,
                                 p["sigma"], p["sampling"])
    rep = es.lowest_eigenpairs(H, p["count"], p["tol"], seed=sc.seed, max_iter=p["max_iter"])
    rows = [(i, float(v), float(r)) for i, (v, r) in enumerate(zip(rep.eigenvalues, rep.residuals))]
    return Outcome("ok", rep.to_dict(), (("index", "eigenvalue", "residual"), rows))


def _bs_family(sc):
    p = sc.params
    grid = _make_grid(p, sc.potential.dimension)
    if p["free_space"]:
        return og.FreeSpaceBS.build(grid, sc.potential, p["sampling"], p["pad"])
    return og.GridHamiltonian.build(grid, sc.symbol, sc.potential, 1.0, p["sampling"])


def _run_bs_root(sc):
    p = sc.params
    family = _bs_family(sc)
    sigmas = p["sigmas"] if p["sigmas"] is not None else [p["sigma"]]
    results, rows, missing = [], [], False
    for s in sigmas:
        try:
            r = es.bs_root(family, float(s), p["bracket"], p["tol"], seed=sc.seed)
            results.append({"status": "ok", **r.to_dict()})
            rows.append((float(s), r.lam, r.mu, r.evaluations))
        except NoRootError as exc:
            missing = True
            results.append({"status": "no-root", "sigma": float(s), "message": str(exc)})
            rows.append((float(s), None, None, None))
    return Outcome("no-root" if missing else "ok", {"roots": results},
                   (("sigma", "lambda", "mu", "evaluations"), rows))


def _run_weak_coupling(sc):
    p = sc.params
    m = wc.coupling_constant_m(sc.potential, sc.symbol)
    regime = wc._regime_for(sc.symbol)
    alpha = float(sc.symbol.alpha)
    preds = [wc.predict_lambda(float(s), m.m_fourier, regime, alpha) for s in p["sigmas"]]
    result = {"coupling": m.to_dict(), "regime": regime.value,
              "predictions": [x.to_dict() for x in preds]}
    rows = [(x.sigma, x.lam, None) for x in preds]
    status = "ok"
    if p["solve"] and p["sigmas"]:
        grid = _make_grid(p, sc.potential.dimension)
        if p["free_space"]:
            family = og.FreeSpaceBS.build(grid, sc.potential, pad=p["pad"])
        else:
            family = og.GridHamiltonian.build(grid, sc.symbol, sc.potential, 1.0)
        solved = []
        for i, s in enumerate(p["sigmas"]):
            try:
                lam = es.bs_root(family, float(s), seed=sc.seed).lam
            except NoRootError:
                lam, status = None, "no-root"
            solved.append({"sigma": float(s), "lambda": lam})
            rows[i] = (rows[i][0], rows[i][1], lam)
        result["solved"] = solved
        good = [(x["sigma"], x["lambda"]) for x in solved if x["lambda"] is not None]
        if len(good) >= 2:
            result["fit"] = _law_fit(good, regime, alpha, m.m_fourier)
    return Outcome(status, result, (("sigma", "lambda_predicted", "lambda_solved"), rows))


def _law_fit(pairs, regime, alpha, m):
    s = np.array([a for a, _ in pairs])
    lam = np.abs(np.array([b for _, b in pairs]))
    if regime is wc.Regime.LOG2D:
        slope = float(np.polyfit(1.0 / s**2, np.log(lam), 1)[0])
        return {"abscissa": "1/sigma^2", "slope": slope, "predicted_slope": -4.0 * math.pi / m,
                "ratio": slope / (-4.0 * math.pi / m)}
    slope = float(np.polyfit(np.log(s), np.log(lam), 1)[0])
    pred = 2.0 * alpha / (alpha - 1.0)
    return {"abscissa": "ln sigma", "slope": slope, "predicted_slope": pred, "ratio": slope / pred}


def _run_quadform(sc):
    p = sc.params
    w = wc.quadform_witness(sc.symbol, sc.potential, float(p["sigma"]), float(p["eps_floor"]))
    rows = [tuple(float(v) for v in h) for h in w.history]
    return Outcome("ok" if w.found else "witness-not-found", w.to_dict(),
                   (("eps", "I1", "I2", "form_value"), rows))


def _run_shoot(sc):
    p = sc.params
    V, sigma = sc.potential, float(p["sigma"])
    tr = hl.integrate_ivp(V, sigma, p["x_max"], p["method"], p["step"], p["rtol"])
    result = {"trace": tr.certificate_dict()}
    status = "ok"
    try:
        result["form"] = hl.truncated_form_value(V, sigma, tr, p["resample"]).to_dict()
    except MissingZeroCrossing as exc:
        status = "no-zero-crossing"
        result["form"] = {"message": str(exc)}
    if p["jost"]:
        result["jost"] = hl.jost_solution(V, sigma).to_dict()
        result["coefficients"] = hl.expansion_coefficients(V).to_dict()
    if p["fit_sigmas"]:
        result["fit"] = hl.fit_sigma_expansion(V, tuple(p["fit_sigmas"])).to_dict()
    return Outcome(status, result, (("x", "psi", "dpsi"), tr.to_rows()))


def _run_construct_well(sc):
    p = sc.params
    sols = [cs.well_match(float(lam), float(d)) for lam, d in p["pairs"]]
    out = []
    for s in sols:
        res = cs.well_eigenfunction_residual(s, detail=True)
        out.append({**s.to_dict(), "eigenfunction_residual": res.to_dict()})
    result = {"wells": out}
    gc = p["grid_check"]
    if gc:
        s = sols[0]
        H = og.GridHamiltonian.build(og.Grid(2, float(gc.get("half_width", 12.0)), int(gc.get("points", 512))),
                                     cm.PowerLaw(2, 2.0), cm.RadialWell(2, s.h, s.delta), 1.0)
        rep = es.lowest_eigenpairs(H, 1, seed=sc.seed)
        result["grid_check"] = {"grid_eigenvalue": float(rep.eigenvalues[0]),
                                "relative_error": float(abs(rep.eigenvalues[0] / s.lam - 1.0))}
    rows = [(s.lam, s.delta, s.tau, s.h, s.residual) for s in sols]
    return Outcome("ok", result, (("lambda", "delta", "tau", "h", "residual"), rows))


def _run_construct_ess_spec(sc):
    p = sc.params
    E = cs.build_ess_spec_potential(float(p["epsilon"]), int(p["count"]), float(p["scale"]))
    return Outcome("ok", E.to_dict(), (E.CSV_HEADER, E.rows()))


def _run_construct_spots(sc):
    p = sc.params
    prof = cs.BumpProfile(float(p["amplitude"]), float(p["power"]))
    S = cs.spots_threshold(prof, int(p["dimension"]), range(1, int(p["n_max"]) + 1), float(p["sigma_factor"]))
    return Outcome("ok", {**S.to_dict(), "profile": prof.to_dict()}, (("n", "R_n", "scaled_rayleigh"),
                                                                       list(S.quotients)))


def _run_construct_sparse(sc):
    p = sc.params
    cert = cs.sparse_bump_certificate(int(p["dimension"]), p["n0"], int(p["n_terms"]))
    betas = [cs.beta_divergence_check(float(b), dimension=int(p["dimension"])) for b in p["betas"]]
    rows = [(b.beta, b.bump_integral, b.divergent) for b in betas]
    return Outcome("ok", {"certificate": cert.to_dict(), "beta_checks": [b.to_dict() for b in betas]},
                   (("beta", "bump_integral", "divergent"), rows))


def _run_diagnostics(sc):
    p = sc.params
    rep = cm.diagnostics(sc.potential, float(p["delta0"]), float(p["alpha"]))
    d = rep.to_dict()
    return Outcome("ok", d, (("quantity", "value"), sorted(d.items())))


def _run_specfun_table(sc):
    p = sc.params
    bessel, consts = sf.specfun_table(p["xs"], p["alphas"])
    result = {"bessel": [dict(zip(("x", "J0", "J1", "K0", "K1"), r)) for r in bessel],
              "constants": [dict(zip(("alpha", "c1", "c2"), r)) for r in consts]}
    return Outcome("ok", result, (("x", "J0", "J1", "K0", "K1"), bessel))


RUNNERS = {
    "spectrum": _run_spectrum, "bs-root": _run_bs_root, "weak-coupling": _run_weak_coupling,
    "quadform": _run_quadform, "shoot": _run_shoot, "construct-well": _run_construct_well,
    "construct-ess-spec": _run_construct_ess_spec, "construct-spots": _run_construct_spots,
    "construct-sparse": _run_construct_sparse, "diagnostics": _run_diagnostics,
    "specfun-table": _run_specfun_table,
}


def run(scenario):
    """Execute a validated scenario; returns an Outcome (exit_code 0 or 2)."""
    return RUNNERS[scenario.command](scenario)


# ------------------------------------------------------------------ output

def _clean(obj):
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        if math.isnan(x):
            return "nan"
        if math.isinf(x):
            return "inf" if x > 0 else "-inf"
        return x
    return obj


def render(scenario, outcome, fmt="json"):
    """Report text; byte-identical for identical scenario and seed."""
    if fmt == "json":
        doc = {"command": scenario.command, "status": outcome.status, "scenario": scenario.to_dict(),
               "result": outcome.result}
        return json.dumps(_clean(doc), indent=2, sort_keys=True, allow_nan=False) + "\n"
    header, rows = outcome.table
    buf = io.StringIO()
    buf.write("# scenario: " + json.dumps(_clean(scenario.to_dict()), sort_keys=True, allow_nan=False) + "\n")
    buf.write(f"# status: {outcome.status}\n")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow(["" if v is None else repr(float(v)) if isinstance(v, (float, np.floating)) else v
                         for v in row])
    return buf.getvalue()


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # usage errors are errors (1); 2 is reserved for negative outcomes
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def build_parser():
    parser = _Parser(prog="specgap", description="Bound states of A - sigma V: solvers and certificates.")
    parser.add_argument("command", help=f"one of {', '.join(COMMANDS)}, or 'construct <kind>'")
    parser.add_argument("kind", nargs="?", help="construction kind after 'construct'")
    parser.add_argument("--scenario", help="scenario JSON file (defaults apply when omitted)")
    parser.add_argument("--out", help="directory for the report (stdout when omitted)")
    parser.add_argument("--seed", type=int, help="override the scenario seed")
    parser.add_argument("--format", choices=("json", "csv"), help="report format (default json)")
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    command = args.command
    if command == "construct":
        if args.kind not in ("well", "ess-spec", "spots", "sparse"):
            print("specgap: error: construct needs one of well, ess-spec, spots, sparse", file=sys.stderr)
            return 1
        command = f"construct-{args.kind}"
    elif args.kind is not None:
        print(f"specgap: error: unexpected argument {args.kind!r}", file=sys.stderr)
        return 1
    try:
        if command not in COMMANDS:
            raise ScenarioError(f"command: unknown {command!r}; valid commands: {', '.join(COMMANDS)}")
        if args.scenario:
            sc = parse_scenario(args.scenario, command)
        else:
            sc = scenario_from_dict({"command": command})
        if args.seed is not None:
            if args.seed < 0:
                raise ScenarioError("seed: must be a non-negative integer")
            sc.seed = args.seed
        fmt = args.format or sc.output.get("format", "json")
        out_dir = args.out or sc.output.get("dir")
        outcome = run(sc)
        text = render(sc, outcome, fmt)
    except ScenarioError as exc:
        print("specgap: invalid scenario:", file=sys.stderr)
        for prob in exc.problems:
            print(f"  - {prob}", file=sys.stderr)
        return 1
    except SpecgapError as exc:
        print(f"specgap: {command}: {exc}", file=sys.stderr)
        return 1
    if out_dir:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        (out / f"{command}.{fmt}").write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)
    return outcome.exit_code


if __name__ == "__main__":
    raise SystemExit(main())
