"""Command-line runner: ``mln solve|check|spectrum|scaling-test --config cfg.json``.

Exit codes: 0 success, 1 invariant failure, 2 configuration, 3 geometry
(including the alpha threshold), 4 convergence, 5 bandwidth.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import json
import logging
import math
import sys
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from .io import read_field, write_field
from .mpa import (
    GeometryError,
    SolverConfig,
    find_solutions,
    mountain_pass_search,
    probe_sphere_infimum,
    ps_diagnostics,
    restart_check,
    write_trace_csv,
)
from .operators import ModelParams, ThresholdError, coercivity_constants
from .potential import (
    PotentialSpec,
    eigen_decompose,
    mu_and_lower_bound,
    potential_coercivity_constants,
    verify_c0_bound,
)
from .scaling import (
    BandwidthError,
    GaussianGenerator,
    ScalingTriple,
    exponent_system,
    find_negative_energy_point,
    scaling_slopes,
    verify_scaling_identities,
    write_scan_csv,
)
from .spectral import Grid3

log = logging.getLogger("mln")

EXIT_OK, EXIT_INVARIANT, EXIT_CONFIG, EXIT_GEOMETRY, EXIT_CONVERGENCE, EXIT_BANDWIDTH = 0, 1, 2, 3, 4, 5


class ConfigError(ValueError):
    pass


_SOLVER_KEYS = {f.name for f in dataclasses.fields(SolverConfig)}

_SCHEMA = {
    "model": {"kin", "omega", "alpha", "s", "p"},
    "potential": {"kind", "v0", "curvature", "file"},
    "grid": {"n", "L"},
    "solver": _SOLVER_KEYS,
    "output": {"dir", "dump_fields", "figures"},
    "generator": {"amplitude", "width"},
    "spectrum": {"K"},
    "scaling": {"lambda", "beta", "gamma", "n", "L", "width", "slope_n", "slope_L", "slope_width", "slopes"},
    "check": {"samples"},
}


@dataclass
class RunConfig:
    model: ModelParams
    grid: Grid3
    solver: SolverConfig
    potential: PotentialSpec | None = None
    output: dict = field(default_factory=lambda: {"dir": "out", "dump_fields": False, "figures": True})
    generator: dict = field(default_factory=dict)
    spectrum: dict = field(default_factory=lambda: {"K": 10})
    scaling: dict = field(default_factory=dict)
    check: dict = field(default_factory=lambda: {"samples": 200})

    def to_dict(self) -> dict:
        return {
            "model": self.model.to_dict(),
            "grid": {"n": self.grid.n, "L": self.grid.box_len},
            "solver": dataclasses.asdict(self.solver),
            "potential": None if self.potential is None else self.potential.to_dict(),
            "output": self.output,
            "generator": self.generator,
            "spectrum": self.spectrum,
            "scaling": self.scaling,
            "check": self.check,
        }


def _section(raw: dict, name: str) -> dict:
    sec = raw.get(name) or {}
    if not isinstance(sec, dict):
        raise ConfigError(f"'{name}' must be an object")
    bad = sorted(set(sec) - _SCHEMA[name])
    if bad:
        raise ConfigError(f"unknown key '{name}.{bad[0]}' (allowed: {', '.join(sorted(_SCHEMA[name]))})")
    return sec


def _build(name: str, ctor, **kw):
    try:
        return ctor(**kw)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"invalid '{name}': {exc}") from exc


def parse_config(raw: dict, base_dir: Path | None = None) -> RunConfig:
    if not isinstance(raw, dict):
        raise ConfigError("config must be a JSON object")
    bad = sorted(set(raw) - set(_SCHEMA))
    if bad:
        raise ConfigError(f"unknown key '{bad[0]}' (allowed: {', '.join(sorted(_SCHEMA))})")
    model = _build("model", ModelParams, **_section(raw, "model"))
    g = _section(raw, "grid")
    grid = _build("grid", Grid3, n=g.get("n", 32), box_len=g.get("L", 16.0))
    solver = _build("solver", SolverConfig, **_section(raw, "solver"))
    pot = None
    if raw.get("potential") is not None:
        p = dict(_section(raw, "potential"))
        if "file" in p:
            path = Path(p["file"])
            if base_dir is not None and not path.is_absolute():
                path = base_dir / path
            try:
                values, _ = read_field(path)
            except (OSError, ValueError) as exc:
                raise ConfigError(f"invalid 'potential.file': {exc}") from exc
            pot = _build("potential", PotentialSpec.tabulated, values=values)
        else:
            kind = p.pop("kind", "harmonic")
            if "v0" not in p:
                raise ConfigError("'potential.v0' is required")
            pot = _build("potential", PotentialSpec, kind=kind, **p)
    out = {"dir": "out", "dump_fields": False, "figures": True, **_section(raw, "output")}
    gen = _section(raw, "generator")
    _build("generator", GaussianGenerator, **gen)
    spec = {"K": 10, **_section(raw, "spectrum")}
    if not isinstance(spec["K"], int) or spec["K"] < 1:
        raise ConfigError("invalid 'spectrum.K': must be a positive integer")
    sc = _section(raw, "scaling")
    chk = {"samples": 200, **_section(raw, "check")}
    if not isinstance(chk["samples"], int) or chk["samples"] < 10:
        raise ConfigError("invalid 'check.samples': must be an integer >= 10")
    return RunConfig(model, grid, solver, pot, out, gen, spec, sc, chk)


def load_config(path) -> RunConfig:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc}") from exc
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"malformed JSON at line {exc.lineno}, column {exc.colno}: {exc.msg}") from exc
    return parse_config(raw, path.parent)


# output helpers


def _clean(obj):
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if math.isfinite(v) else repr(v)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


def write_report(out: Path, payload: dict) -> Path:
    """``report.json``; the ``timestamp`` key is the only non-deterministic field."""
    payload = {"timestamp": datetime.now(timezone.utc).isoformat(), **_clean(payload)}
    path = out / "report.json"
    path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")
    return path


def _figures(cfg: RunConfig) -> bool:
    return bool(cfg.output.get("figures", True))


def _generator(cfg: RunConfig) -> GaussianGenerator:
    g = cfg.generator
    return GaussianGenerator(g.get("amplitude", 1.0), g.get("width", 0.1 * cfg.grid.box_len))


# subcommands


def run_solve(cfg: RunConfig, out: Path) -> int:
    prm, grid, scfg, V = cfg.model, cfg.grid, cfg.solver, cfg.potential
    payload: dict = {"command": "solve", "config": cfg.to_dict()}
    try:
        if V is None:
            payload["constants"] = coercivity_constants(prm).to_dict()
        else:
            c1, c2 = potential_coercivity_constants(prm, V.v0)
            payload["constants"] = {"c1": c1, "c2": c2}
    except ThresholdError as exc:
        log.error("%s", exc)
        payload["error"] = str(exc)
        write_report(out, payload)
        return EXIT_GEOMETRY
    vals = None if V is None else V.sample(grid).values
    try:
        probe = probe_sphere_infimum(prm, None, 100, grid, seed=scfg.seed, potential=vals)
        payload["geometry"] = probe.to_dict()
        if not probe.passed:
            raise GeometryError(f"sphere infimum delta = {probe.delta:.4g} <= 0 (geometry)")
        ep = find_negative_energy_point(_generator(cfg), prm, grid, rho=probe.rho, potential=vals,
                                        v0=None if V is None else V.v0)
        payload["endpoint"] = ep.to_dict()
        write_scan_csv(out / "scan.csv", ep.scan)
        if V is None and 4.0 < prm.p:
            reports = find_solutions(prm, ep.e, scfg)
        else:
            reports = [mountain_pass_search(prm, ep.e, scfg, potential=V, delta=probe.delta)]
    except BandwidthError as exc:
        log.error("%s", exc)
        payload["error"] = str(exc)
        write_report(out, payload)
        return EXIT_BANDWIDTH
    except GeometryError as exc:
        log.error("%s", exc)
        payload["error"] = str(exc)
        write_report(out, payload)
        return EXIT_GEOMETRY
    sols = []
    all_ok = True
    for i, rep in enumerate(reports):
        d = rep.to_dict()
        d["delta"] = probe.delta
        d["above_sphere_infimum"] = rep.J_value >= probe.delta
        if rep.trace:
            d["ps"] = ps_diagnostics(rep.trace, prm, scfg.tol).to_dict() if V is None else None
        ok = rep.success and rep.J_value > 0 and rep.weak_residual <= scfg.tol
        if ok:
            drift, _ = restart_check(rep, prm, scfg, potential=V)
            d["restart_rel_change"] = drift
        d["passed"] = ok
        all_ok &= ok
        sols.append(d)
        if cfg.output.get("dump_fields"):
            write_field(out / f"u_{i}.mln1", rep.u_star, "u", prm.to_dict())
            write_field(out / f"phi_{i}.mln1", rep.phi_star, "phi", prm.to_dict())
    payload["solutions"] = sols
    first = reports[0]
    write_trace_csv(out / "trace.csv", first.trace)
    if _figures(cfg):
        from .plotting import plot_profile, plot_scan, plot_trace

        if first.trace:
            plot_trace(first.trace, out / "trace.png")
        plot_scan(ep.scan, out / "scan.png")
        for i, rep in enumerate(reports):
            plot_profile(rep.u_star, rep.phi_star, out / f"profile_{i}.png")
    write_report(out, payload)
    for d in sols:
        log.info("J = %.10g  residual = %.3e  passed = %s", d["J_value"], d["dual_residual"], d["passed"])
    return EXIT_OK if all_ok else EXIT_CONVERGENCE


def run_check(cfg: RunConfig, out: Path) -> int:
    from .checks import run_invariant_suite

    rows = run_invariant_suite(cfg.grid, cfg.model, cfg.check["samples"], cfg.solver.seed, cfg.potential)
    with open(out / "check.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["name", "passed", "value", "tol"])
        for r in rows:
            w.writerow([r.name, int(r.passed), repr(r.value), repr(r.tol)])
    write_report(out, {"command": "check", "config": cfg.to_dict(), "checks": [r.to_dict() for r in rows]})
    for r in rows:
        log.info("%-32s %s", r.name, "pass" if r.passed else "FAIL")
    return EXIT_OK if all(r.passed for r in rows) else EXIT_INVARIANT


def run_spectrum(cfg: RunConfig, out: Path) -> int:
    V = cfg.potential
    if V is None:
        log.error("spectrum needs a 'potential' section")
        return EXIT_CONFIG
    prm, grid = cfg.model, cfg.grid
    spec = eigen_decompose(prm, V, grid, K=cfg.spectrum["K"], seed=cfg.solver.seed)
    mb = mu_and_lower_bound(prm, V, grid, n_samples=200, seed=cfg.solver.seed)
    payload = {"command": "spectrum", "config": cfg.to_dict(), "spectrum": spec.to_dict(),
               "shift_bound": {"mu": mb.mu, "c_w": mb.c_w, "reduced": mb.reduced, "verified": mb.verified,
                          "worst_margin": mb.worst_margin}}
    if spec.k0 is not None:
        payload["c0_worst_margin"] = verify_c0_bound(spec, prm, V, seed=cfg.solver.seed)
    with open(out / "spectrum.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["k", "lambda", "residual"])
        for k, (lam, res) in enumerate(zip(spec.eigvals, spec.residuals), start=1):
            w.writerow([k, repr(float(lam)), repr(float(res))])
    if cfg.output.get("dump_fields"):
        for k, e in enumerate(spec.eigvecs, start=1):
            write_field(out / f"eig_{k}.mln1", e, "u", prm.to_dict(), {"eigen_index": k})
    if _figures(cfg):
        from .plotting import plot_spectrum

        plot_spectrum(spec.eigvals, out / "spectrum.png")
    write_report(out, payload)
    log.info("eigenvalues: %s", ", ".join(f"{x:.6f}" for x in spec.eigvals))
    return EXIT_OK if spec.converged else EXIT_CONVERGENCE


def run_scaling_test(cfg: RunConfig, out: Path) -> int:
    prm, sc = cfg.model, cfg.scaling
    t = ScalingTriple(sc.get("lambda", 2.0), sc.get("beta", 1.0), sc.get("gamma", 2.0))
    payload: dict = {"command": "scaling-test", "config": cfg.to_dict()}
    try:
        grid = Grid3(sc.get("n", 128), sc.get("L", 30.0))
        rep = verify_scaling_identities(GaussianGenerator(1.0, sc.get("width", 1.5)), t, prm.s, grid)
        payload["identities"] = rep.to_dict()
        payload["exponent_system"] = exponent_system(t.beta, t.gamma, prm.s)
        ok = rep.holds and all(payload["exponent_system"].values())
        if sc.get("slopes", True):
            sg = Grid3(sc.get("slope_n", 256), sc.get("slope_L", 24.0))
            sl = scaling_slopes(GaussianGenerator(1.0, sc.get("slope_width", 3.0)), t.beta, t.gamma, prm.s, sg)
            payload["slopes"] = sl.to_dict()
            ok &= sl.max_error() <= 1e-2
            with open(out / "slopes.csv", "w", newline="") as fh:
                w = csv.writer(fh)
                w.writerow(["lambda", *sl.values.keys()])
                for i, lam in enumerate(sl.lambdas):
                    w.writerow([repr(float(lam)), *(repr(float(v[i])) for v in sl.values.values())])
            if _figures(cfg):
                from .plotting import plot_slopes

                plot_slopes(sl, out / "slopes.png")
        ep = find_negative_energy_point(_generator(cfg), prm, cfg.grid)
        payload["endpoint"] = ep.to_dict()
        write_scan_csv(out / "scan.csv", ep.scan)
        if _figures(cfg):
            from .plotting import plot_scan

            plot_scan(ep.scan, out / "scan.png")
    except BandwidthError as exc:
        log.error("%s", exc)
        payload["error"] = str(exc)
        write_report(out, payload)
        return EXIT_BANDWIDTH
    write_report(out, payload)
    return EXIT_OK if ok else EXIT_INVARIANT


COMMANDS = {"solve": run_solve, "check": run_check, "spectrum": run_spectrum, "scaling-test": run_scaling_test}


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="mln", description=__doc__.splitlines()[0])
    ap.add_argument("command", choices=sorted(COMMANDS))
    ap.add_argument("--config", required=True, help="JSON run configuration")
    ap.add_argument("--out", default=None, help="output directory (overrides output.dir)")
    ap.add_argument("--seed", type=int, default=None, help="overrides solver.seed")
    ap.add_argument("-v", "--verbose", action="store_true")
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.INFO, format="%(levelname)s %(message)s")
    logging.getLogger("matplotlib").setLevel(logging.WARNING)
    try:
        cfg = load_config(args.config)
        if args.seed is not None:
            if args.seed < 0:
                raise ConfigError("--seed must be a nonnegative integer")
            cfg.solver = dataclasses.replace(cfg.solver, seed=args.seed)
    except ConfigError as exc:
        log.error("config: %s", exc)
        return EXIT_CONFIG
    out = Path(args.out or cfg.output.get("dir", "out"))
    out.mkdir(parents=True, exist_ok=True)
    return COMMANDS[args.command](cfg, out)


if __name__ == "__main__":
    sys.exit(main())
