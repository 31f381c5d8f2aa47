"""Command-line entry point: ``fracmag <workflow> [options]``.

Options come from an INI file (``--config``; any section, flat keys) and are
overridden by flags. Exit codes: 0 success, 2 invalid input, 3 numerical failure.
"""
from __future__ import annotations

import argparse
import configparser
import json
import logging
import math
import os
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .io import FormatError, read_csv, read_field, read_json, write_csv, write_field, write_json

log = logging.getLogger("fracmag")

WORKFLOWS = ("seminorm", "apply", "minimize", "critical", "sigma-curve", "split", "verify",
             "calibrate")
PLOT_KINDS = ("trace", "sigma-curve", "concentration", "radial-profile")
SUITES = ("diamagnetic", "upsilon", "gauge", "cutoff")


class ConfigError(ValueError):
    """Invalid configuration; message starts with the offending field path."""


class NumericalFailure(RuntimeError):
    pass


# -- parsing -----------------------------------------------------------------

def _common(p: argparse.ArgumentParser):
    p.add_argument("--config", help="INI file; flags override its values")
    p.add_argument("--out", help="output directory (default: ./fracmag-<workflow>)")
    p.add_argument("--s", type=float, help="fractional order in (0, 1)")
    p.add_argument("--p", type=float, help="Lebesgue exponent in (2, 6/(3-2s)]")
    p.add_argument("--potential", help="zero | constant-field:B | linear:M11,...,M33[;b1,b2,b3]")
    p.add_argument("--n", type=int, help="grid points per axis")
    p.add_argument("--L", type=float, help="box side length")
    p.add_argument("--center", help="grid center x,y,z")
    p.add_argument("--field", help="input field (FMAG1)")
    p.add_argument("--generator", help="gaussian:w | bump:r | bubble:eps[:d] | two-bumps:D[:r] | noisy:w:amp")
    p.add_argument("--threads", type=int, help="worker threads (0 = auto)")
    p.add_argument("--seed", type=int, help="random seed")
    p.add_argument("--exterior", choices=("yes", "no"), help="include pairs leaving the box")
    p.add_argument("-v", "--verbose", action="store_true")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="fracmag", description=__doc__.splitlines()[0])
    ap.add_argument("--version", action="version", version=f"fracmag {__version__}")
    sub = ap.add_subparsers(dest="workflow", required=True)

    p = sub.add_parser("seminorm", help="magnetic Gagliardo energy of a field")
    _common(p)
    p.add_argument("--r-cut", type=float)
    p.add_argument("--far", choices=("exact", "drop", "fast"))

    p = sub.add_parser("apply", help="apply the fractional magnetic Laplacian")
    _common(p)
    p.add_argument("--form", choices=("principal-value", "symmetric-difference"))
    p.add_argument("--epsilon", type=float)

    for name, hlp in (("minimize", "ground state on the L^p sphere"),
                      ("critical", "critical level (no L^2 term, p = 6/(3-2s))")):
        p = sub.add_parser(name, help=hlp)
        _common(p)
        p.add_argument("--mass", type=float)
        p.add_argument("--max-iter", type=int)
        p.add_argument("--tol", type=float)
        p.add_argument("--step", type=float)
        p.add_argument("--radial", choices=("yes", "no"))
        if name == "critical":
            p.add_argument("--fixed", choices=("yes", "no"), help="run exactly max-iter steps")

    p = sub.add_parser("sigma-curve", help="seminorm of sigma-rescaled fields")
    _common(p)
    p.add_argument("--sigmas", help="comma-separated values in (0, 1]")

    p = sub.add_parser("split", help="dichotomy splitting report")
    _common(p)
    p.add_argument("--xi", help="split center x,y,z")
    p.add_argument("--rbar", type=float)
    p.add_argument("--rn", type=float)

    p = sub.add_parser("verify", help="inequality / identity suites")
    _common(p)
    p.add_argument("--suite", choices=SUITES)
    p.add_argument("--samples", type=int, help="random fields per potential")

    p = sub.add_parser("calibrate", help="fit the Talenti constant d_s")
    _common(p)
    p.add_argument("--method", choices=("lattice", "fourier"))

    p = sub.add_parser("plotdata", help="tidy CSV from result files")
    p.add_argument("--kind", choices=PLOT_KINDS, required=True)
    p.add_argument("--input", required=True, help="result file (json or fmag)")
    p.add_argument("--out", help="output CSV path")
    p.add_argument("-v", "--verbose", action="store_true")
    return ap


DEFAULTS = {
    "potential": "zero", "threads": 0, "seed": 0, "exterior": "yes", "far": "exact",
    "form": "principal-value", "mass": 1.0, "max_iter": 500, "tol": 1e-10, "radial": "no",
    "fixed": "no", "sigmas": "1,0.5,0.25,0.125", "suite": "diamagnetic", "samples": 5,
    "method": "lattice", "center": "0,0,0",
}

_TYPES = {"s": float, "p": float, "n": int, "L": float, "threads": int, "seed": int,
          "r_cut": float, "epsilon": float, "mass": float, "max_iter": int, "tol": float,
          "step": float, "rbar": float, "rn": float, "samples": int}


def _load_config(path) -> dict:
    cp = configparser.ConfigParser(interpolation=None)
    cp.optionxform = str
    try:
        with open(path, encoding="utf-8") as fh:
            cp.read_file(fh)
    except (OSError, configparser.Error) as exc:
        raise ConfigError(f"config: {exc}") from None
    out = {}
    for section in cp.sections():
        for key, val in cp.items(section):
            key = key.replace("-", "_")
            typ = _TYPES.get(key)
            try:
                out[key] = typ(val) if typ else val.strip()
            except ValueError:
                raise ConfigError(f"{section}.{key}: cannot parse {val!r}") from None
    return out


def resolve(args: argparse.Namespace) -> dict:
    """Defaults < config file < flags; FRACMAG_THREADS overrides the thread count."""
    cfg = dict(DEFAULTS)
    if getattr(args, "config", None):
        cfg.update(_load_config(args.config))
    for k, v in vars(args).items():
        if v is not None and k not in ("config", "verbose"):
            cfg[k] = v
    env = os.environ.get("FRACMAG_THREADS")
    if env is not None:
        try:
            cfg["threads"] = int(env)
        except ValueError:
            raise ConfigError(f"FRACMAG_THREADS: not an integer: {env!r}") from None
    return cfg


def _require(cfg: dict, *keys):
    for k in keys:
        if cfg.get(k) is None:
            raise ConfigError(f"missing required option --{k.replace('_', '-')}")


def _vector(text, name) -> tuple:
    try:
        v = tuple(float(t) for t in str(text).split(","))
    except ValueError:
        raise ConfigError(f"{name}: expected x,y,z, got {text!r}") from None
    if len(v) != 3 or not all(map(math.isfinite, v)):
        raise ConfigError(f"{name}: expected three finite numbers, got {text!r}")
    return v


def parse_potential(text: str):
    from .potential import MagneticPotential
    kind, _, rest = str(text).partition(":")
    try:
        if kind == "zero" and not rest:
            return MagneticPotential.zero()
        if kind == "constant-field":
            return MagneticPotential.constant_field(float(rest))
        if kind == "linear":
            mpart, _, bpart = rest.partition(";")
            m = np.array([float(t) for t in mpart.split(",")]).reshape(3, 3)
            b = [float(t) for t in bpart.split(",")] if bpart else [0.0, 0.0, 0.0]
            return MagneticPotential.linear(m, b)
    except ValueError as exc:
        raise ConfigError(f"potential: {exc}") from None
    raise ConfigError(f"potential: unknown potential {text!r}")


def _params(cfg: dict, critical: bool = False):
    from .params import DomainError, FractionalParams, cs_constant
    _require(cfg, "s")
    try:
        cs_constant(cfg["s"])
    except DomainError as exc:
        raise ConfigError(f"params.s: {exc}") from None
    try:
        if critical:
            return FractionalParams.critical(cfg["s"])
        p = cfg.get("p")
        if p is None:
            p = min(3.0, 0.5 * (2.0 + 6.0 / (3.0 - 2.0 * cfg["s"])))
        return FractionalParams(cfg["s"], p)
    except (DomainError, ValueError) as exc:
        name = "s" if "s " in str(exc) or "(0, 1)" in str(exc) else "p"
        raise ConfigError(f"params.{name}: {exc}") from None


def _grid(cfg: dict):
    from .grid import Grid
    _require(cfg, "n", "L")
    try:
        return Grid.from_extent(cfg["n"], cfg["L"], _vector(cfg["center"], "grid.center"))
    except ValueError as exc:
        raise ConfigError(f"grid: {exc}") from None


def _input_field(cfg: dict, grid, s: float):
    from .grid import Bump, Field, Gaussian, TalentiBubble, TwoBumps, make_field
    if cfg.get("field"):
        try:
            return read_field(cfg["field"])[0]
        except OSError as exc:
            raise ConfigError(f"field: {exc}") from None
    gen_text = cfg.get("generator") or f"gaussian:{grid.L / 6.0!r}"
    kind, *vals = str(gen_text).split(":")
    try:
        nums = [float(v) for v in vals]
        c = grid.center
        if kind == "gaussian":
            return make_field(grid, Gaussian(nums[0] if nums else 1.0, c))
        if kind == "bump":
            return make_field(grid, Bump(c, nums[0]))
        if kind == "bubble":
            return make_field(grid, TalentiBubble(s, c, nums[0], nums[1] if len(nums) > 1 else 1.0))
        if kind == "two-bumps":
            return make_field(grid, TwoBumps(nums[0], nums[1] if len(nums) > 1 else 0.0, c))
        if kind == "noisy":
            rng = np.random.default_rng(cfg["seed"])
            base = make_field(grid, Gaussian(nums[0], c)).values
            noise = rng.standard_normal(grid.shape) + 1j * rng.standard_normal(grid.shape)
            return Field(grid, base * (1.0 + nums[1] * noise))
    except (ValueError, IndexError) as exc:
        raise ConfigError(f"generator: {gen_text!r}: {exc}") from None
    raise ConfigError(f"generator: unknown kind {kind!r}")


def _quad(cfg: dict):
    from .gagliardo import QuadPolicy
    try:
        return QuadPolicy(r_cut=cfg.get("r_cut"), far=cfg["far"], exterior=cfg["exterior"] == "yes")
    except ValueError as exc:
        raise ConfigError(f"policy: {exc}") from None


def _set_threads(n: int) -> int:
    import numba
    if n < 0:
        raise ConfigError(f"threads: must be >= 0, got {n}")
    avail = numba.config.NUMBA_NUM_THREADS
    k = avail if n == 0 else min(n, avail)
    numba.set_num_threads(k)
    return k


# -- workflows -----------------------------------------------------------------

def _wf_seminorm(cfg, out: Path):
    from .gagliardo import seminorm_sq
    params = _params(cfg)
    grid = _grid(cfg)
    A = parse_potential(cfg["potential"])
    u = _input_field(cfg, grid, params.s)
    e = seminorm_sq(params, A, u, _quad(cfg))
    write_json(out / "energy.json", e.to_dict())


def _operator_policy(cfg: dict, grid):
    from .operator import OperatorPolicy
    try:
        pol = OperatorPolicy(form=cfg["form"], epsilon=cfg.get("epsilon"),
                             exterior=cfg["exterior"] == "yes")
        pol.radii(grid)
    except ValueError as exc:
        raise ConfigError(f"policy: {exc}") from None
    return pol


def _wf_apply(cfg, out: Path):
    from .operator import apply_operator
    params = _params(cfg)
    grid = _grid(cfg)
    A = parse_potential(cfg["potential"])
    u = _input_field(cfg, grid, params.s)
    res = apply_operator(params, A, u, _operator_policy(cfg, grid))
    write_field(out / "operator.fmag", res.field, params.s, params.p)
    write_json(out / "apply.json", {**res.metadata, "valid_nodes": int(res.valid.sum())})


def _write_min(out: Path, res, params):
    write_field(out / "minimizer.fmag", res.minimizer, params.s, params.p)
    write_csv(out / "trace.csv", ("iter", "energy", "constraint_residual", "grad_norm"),
              res.trace_rows())
    summ = res.summary()
    summ["energy_trace"] = list(res.energy_trace)
    write_json(out / "result.json", summ)


def _min_options(cfg, critical=False):
    from .groundstate import MinimizeOptions
    try:
        return MinimizeOptions(step=cfg.get("step"), max_iter=cfg["max_iter"], tol=cfg["tol"],
                               radial=cfg["radial"] == "yes", policy=_quad(cfg), seed=cfg["seed"])
    except ValueError as exc:
        raise ConfigError(f"options: {exc}") from None


def _wf_minimize(cfg, out: Path):
    from .groundstate import Constraint, minimize
    params = _params(cfg)
    _require(cfg, "p")
    grid = _grid(cfg)
    A = parse_potential(cfg["potential"])
    u0 = _input_field(cfg, grid, params.s)
    res = minimize(params, A, u0, Constraint(params.p, cfg["mass"]), _min_options(cfg))
    _write_min(out, res, params)
    if not res.converged:
        raise NumericalFailure(f"minimization did not converge: {res.message}")


def _wf_critical(cfg, out: Path):
    from .groundstate import critical_level
    params = _params(cfg, critical=True)
    grid = _grid(cfg)
    A = parse_potential(cfg["potential"])
    u0 = _input_field(cfg, grid, params.s)
    res = critical_level(params, A, u0, _min_options(cfg), fixed_iterations=cfg["fixed"] == "yes")
    _write_min(out, res, params)
    write_csv(out / "concentration.csv", ("R", "Q"), res.concentration)


def _wf_sigma(cfg, out: Path):
    from .groundstate import sigma_scaling_curve
    params = _params(cfg)
    grid = _grid(cfg)
    A = parse_potential(cfg["potential"])
    u = _input_field(cfg, grid, params.s)
    try:
        sig = [float(t) for t in str(cfg["sigmas"]).split(",")]
        curve = sigma_scaling_curve(params, A, u, sig, _quad(cfg))
    except ValueError as exc:
        raise ConfigError(f"sigmas: {exc}") from None
    write_csv(out / "sigma_curve.csv", ("sigma", "seminorm_sq", "nonmagnetic_ref"), curve)
    write_json(out / "sigma_curve.json", {"curve": [list(r) for r in curve]})


def _wf_split(cfg, out: Path):
    from .cclab import SupportOverlap, dichotomy_split
    params = _params(cfg)
    grid = _grid(cfg)
    _require(cfg, "rbar", "rn")
    A = parse_potential(cfg["potential"])
    u = _input_field(cfg, grid, params.s)
    xi = _vector(cfg.get("xi", "0,0,0"), "split.xi")
    try:
        rep = dichotomy_split(params, A, u, xi, cfg["rbar"], cfg["rn"], policy=_quad(cfg))
    except (SupportOverlap, ValueError) as exc:
        raise ConfigError(f"split: {exc}") from None
    write_field(out / "u1.fmag", rep.u1, params.s, params.p)
    write_field(out / "u2.fmag", rep.u2, params.s, params.p)
    write_json(out / "split.json", rep.to_dict())


def _wf_verify(cfg, out: Path):
    from .cclab import cutoff, gauge_transform, verify_cutoff_estimate
    from .gagliardo import seminorm_sq
    from .grid import Field, Gaussian, make_field
    from .kernel import pair_stats, upsilon_integral
    from .potential import MagneticPotential, shift_potential
    params = _params(cfg)
    grid = _grid(cfg)
    rng = np.random.default_rng(cfg["seed"])
    suite = cfg["suite"]
    given = parse_potential(cfg["potential"])
    pots = {"zero": MagneticPotential.zero(), "constant-field:2": MagneticPotential.constant_field(2.0),
            "linear": MagneticPotential.linear(rng.standard_normal((3, 3)), rng.standard_normal(3)),
            "given": given}
    env = make_field(grid, Gaussian(grid.L / 6.0, grid.center)).values

    # translations wrap periodically, so the gauge check needs negligible boundary mass
    tight = make_field(grid, Gaussian(grid.L / 16.0, grid.center)).values

    def rand_field(envelope=env):
        z = rng.standard_normal(grid.shape) + 1j * rng.standard_normal(grid.shape)
        return Field(grid, z * envelope)

    report = {"suite": suite, "cases": []}
    ok = True
    if suite in ("diamagnetic", "upsilon"):
        worst = 0.0
        for name, A in pots.items():
            for k in range(cfg["samples"]):
                u = rand_field()
                st = pair_stats(params, A, u)
                case = {"potential": name, "sample": k, "max_violation": st.diamagnetic_violation,
                        "upsilon_min_rel": st.upsilon_min_rel, "pairs": st.pairs}
                if suite == "upsilon":
                    lhs = (seminorm_sq(params, A, u).gagliardo
                           - seminorm_sq(params, MagneticPotential.zero(), u.abs()).gagliardo)
                    rhs = upsilon_integral(params, A, u)
                    case["identity_rel_err"] = abs(lhs - rhs) / max(abs(rhs), 1e-300)
                    ok &= case["identity_rel_err"] <= 1e-10
                worst = max(worst, st.diamagnetic_violation)
                ok &= st.upsilon_min_rel >= -1e-12
                report["cases"].append(case)
        report["max_violation"] = worst
        ok &= worst <= 1e-12
    elif suite == "gauge":
        A = pots["linear"] if given.is_zero else given
        worst = 0.0
        for k in range(cfg["samples"]):
            u = rand_field(tight)
            cells = rng.integers(-2, 3, size=3)
            xi = cells * grid.h
            v, desc = gauge_transform(params, u, xi, -A(xi))
            a = seminorm_sq(params, A, u).total
            b = seminorm_sq(params, shift_potential(A, xi, -A(xi)), v).total
            err = abs(a - b) / a
            worst = max(worst, err)
            ab2 = np.abs(u.values) ** 2
            edge = ab2.sum() - ab2[2:-2, 2:-2, 2:-2].sum()
            report["cases"].append({"cells": desc.cells, "rel_err": err,
                                    "boundary_mass": float(edge / ab2.sum())})
        report["max_rel_err"] = worst
        ok &= worst <= 1e-10
    else:
        u = make_field(grid, Gaussian(grid.L / 8.0, grid.center))
        phi = cutoff(max(grid.L / 8.0, 2.0 * grid.h), grid.center, grid)
        r = verify_cutoff_estimate(params, given, u, phi)
        report["cases"].append(r)
        ok &= r["ratio"] <= 1.0
    report["passed"] = bool(ok)
    write_json(out / "verify.json", report)
    if not ok:
        raise NumericalFailure(f"verification suite {suite!r} failed")


def _wf_calibrate(cfg, out: Path):
    from .operator import CalibrationError, calibrate_talenti
    params = _params(cfg)
    n = cfg.get("n") or 48
    L = cfg.get("L") or 16.0
    try:
        cal = calibrate_talenti(params, n=n, L=L, method=cfg["method"])
    except CalibrationError as exc:
        raise NumericalFailure(str(exc)) from None
    write_json(out / "calibration.json", cal.to_dict())


def _validate(cfg: dict):
    """Reject bad inputs before anything is written."""
    wf = cfg["workflow"]
    _params(cfg, critical=wf == "critical")
    if wf == "minimize":
        _require(cfg, "p")
    if wf == "split":
        _require(cfg, "rbar", "rn")
    if wf != "calibrate":
        grid = _grid(cfg)
        if wf == "apply":
            _operator_policy(cfg, grid)
    parse_potential(cfg["potential"])
    if int(cfg["threads"]) < 0:
        raise ConfigError(f"threads: must be >= 0, got {cfg['threads']}")


_RUNNERS = {"seminorm": _wf_seminorm, "apply": _wf_apply, "minimize": _wf_minimize,
            "critical": _wf_critical, "sigma-curve": _wf_sigma, "split": _wf_split,
            "verify": _wf_verify, "calibrate": _wf_calibrate}


def run(cfg: dict) -> int:
    """Execute one workflow; writes manifest.json before any compute."""
    wf = cfg["workflow"]
    _validate(cfg)
    out = Path(cfg.get("out") or f"fracmag-{wf}")
    threads = _set_threads(int(cfg["threads"]))
    out.mkdir(parents=True, exist_ok=True)
    manifest = {"fracmag": __version__, "workflow": wf, "threads": threads,
                "config": {k: v for k, v in sorted(cfg.items()) if k != "out"},
                "status": "running"}
    write_json(out / "manifest.json", manifest)
    _RUNNERS[wf](cfg, out)
    manifest["status"] = "complete"
    write_json(out / "manifest.json", manifest)
    return 0


# -- plot data -------------------------------------------------------------------

def emit_plotdata(kind: str, src, dest=None) -> Path:
    src = Path(src)
    if kind == "radial-profile":
        u, _, _ = read_field(src)
        from .groundstate import shell_keys
        keys = shell_keys(u.grid)
        uniq, inv = np.unique(keys, return_inverse=True)
        counts = np.bincount(inv)
        flat = u.flat
        cols = [np.bincount(inv, weights=w) / counts
                for w in (flat.real, flat.imag, np.abs(flat))]
        r = 0.5 * u.grid.h * np.sqrt(uniq)
        rows = list(zip(r, *cols))
        header = ("r", "re", "im", "abs")
    elif kind == "sigma-curve":
        data = read_json(src)
        if "curve" not in data:
            raise FormatError(src, 0, "missing key 'curve'")
        rows = data["curve"]
        header = ("sigma", "seminorm_sq", "nonmagnetic_ref")
    else:
        data = read_json(src)
        if kind == "trace":
            if src.suffix == ".csv":
                raise FormatError(src, 0, "trace plot data is built from result.json")
            need = ("energy_trace",)
            for k in need:
                if k not in data:
                    raise FormatError(src, 0, f"missing key {k!r}")
            trace_csv = src.with_name("trace.csv")
            if trace_csv.exists():
                _, rows = read_csv(trace_csv, ("iter", "energy", "constraint_residual", "grad_norm"))
                rows = [[int(r[0])] + r[1:] for r in rows]
            else:
                rows = [[k, e, math.nan, math.nan] for k, e in enumerate(data["energy_trace"])]
            header = ("iter", "energy", "constraint_residual", "grad_norm")
        else:
            if not data.get("concentration"):
                raise FormatError(src, 0, "missing key 'concentration'")
            rows = data["concentration"]
            header = ("R", "Q")
    dest = Path(dest) if dest else src.with_name(f"plot-{kind}.csv")
    write_csv(dest, header, rows)
    return dest


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        if args.workflow == "plotdata":
            path = emit_plotdata(args.kind, args.input, args.out)
            print(path)
            return 0
        cfg = resolve(args)
        return run(cfg)
    except ConfigError as exc:
        print(f"fracmag: error: {exc}", file=sys.stderr)
        return 2
    except (FormatError, OSError) as exc:
        print(f"fracmag: error: {exc}", file=sys.stderr)
        return 3
    except (NumericalFailure, ArithmeticError) as exc:
        print(f"fracmag: numerical failure: {exc}", file=sys.stderr)
        return 3
    except ValueError as exc:
        # domain errors raised by the library for inputs that passed flag parsing
        print(f"fracmag: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
