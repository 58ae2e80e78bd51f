"""Command-line experiment runner.

Usage::

    volterra-lift <command> --config <file.toml> [--seed N] [--out DIR]

Commands: ``sample``, ``lift``, ``verify-chen``, ``moments``, ``scaling``,
``grr``, ``diverge``. Exit codes: 0 success, 1 parameter error, 2 failed
verification, 3 numerical error. Errors are written to stderr as JSON.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .analysis import grr_check
from .driver import DriverSpec, sample_paths
from .errors import NumericalError, ParameterError, VerificationError, VolterraError
from .grid import make_uniform_grid
from .level1 import KERNEL_RULES, build_level1, check_level1_gamma
from .level2 import build_level2, chen_residual, ito_strat_divergence_probe, resolve_scheme
from .montecarlo import MonteCarlo, bound_ratio_surface, scaling_exponent, stratum_tuples
from .regularity import FamilyAN

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

COMMANDS = ("sample", "lift", "verify-chen", "moments", "scaling", "grr", "diverge")
MOMENT_TARGETS = ("z1_var", "z1_12_var", "z2_var", "z2_12_var")
DEFAULT_FAMILY = ((0.6, 0.1), (0.8, 0.2))
CHEN_TOL = 1e-12
SECTION_KEYS = {
    "sample": {"count"},
    "moments": {"targets", "tuples"},
    "scaling": {"targets", "mode", "tolerance"},
    "grr": {"paths", "levels", "max_upper_points", "delta_points"},
    "diverge": {"s", "t", "tau", "mesh_levels"},
}


@dataclass
class ExperimentConfig:
    """Resolved experiment settings; ``configs/`` holds annotated examples of the file layout."""

    driver: DriverSpec
    gamma: float
    horizon: float = 1.0
    cells: int = 64
    alpha: float = 0.5
    kappa: float = 0.45
    family: tuple = DEFAULT_FAMILY
    p: int | str = "auto"
    samples: int = 2000
    lags: list | None = None
    seed: int = 0
    output_dir: str = "out"
    rule: str = "cell_average"
    sections: dict = field(default_factory=dict)

    @property
    def grid(self):
        return make_uniform_grid(self.horizon, self.cells)

    def section(self, name: str) -> dict:
        return self.sections.get(name, {})

    def resolved(self) -> dict:
        out = asdict(self)
        out["driver"] = asdict(self.driver)
        out["family"] = [list(x) for x in self.family]
        return out


def load_config(path: str | Path, seed: int | None = None, out: str | None = None) -> ExperimentConfig:
    """Parse and validate a TOML config; command-line overrides win."""
    try:
        with open(path, "rb") as fh:
            raw = tomllib.load(fh)
    except FileNotFoundError:
        raise ParameterError(f"config file not found: {path}") from None
    except tomllib.TOMLDecodeError as exc:
        raise ParameterError(f"config does not parse: {exc}") from None
    return config_from_dict(raw, seed, out)


def config_from_dict(raw: dict, seed: int | None = None, out: str | None = None) -> ExperimentConfig:
    raw = dict(raw)
    drv = dict(raw.pop("driver", {}))
    grid = dict(raw.pop("grid", {}))
    reg = dict(raw.pop("regularity", {}))
    raw_seed = raw.pop("seed", 0)
    seed = int(seed if seed is not None else raw_seed)
    driver = DriverSpec(kind=drv.get("kind", "fbm"), hurst=float(drv.get("hurst", 0.75)),
                        dim=int(drv.get("dim", 1)), seed=seed)
    if "gamma" not in raw:
        raise ParameterError("gamma is required")
    gamma = float(raw.pop("gamma"))
    sections = {k: raw.pop(k) for k in list(raw) if isinstance(raw[k], dict)}
    cfg = ExperimentConfig(
        driver=driver, gamma=gamma,
        horizon=float(grid.get("horizon", 1.0)), cells=int(grid.get("cells", 64)),
        alpha=float(reg.get("alpha", 0.5)), kappa=float(reg.get("kappa", 0.45)),
        family=tuple(tuple(float(v) for v in pair) for pair in reg.get("family", DEFAULT_FAMILY)),
        p=raw.pop("p", "auto"), samples=int(raw.pop("samples", 2000)),
        lags=raw.pop("lags", None), seed=seed,
        output_dir=str(out if out is not None else raw.pop("output_dir", "out")),
        rule=str(raw.pop("rule", "cell_average")), sections=sections,
    )
    raw.pop("output_dir", None)
    if raw:
        raise ParameterError(f"unknown config keys: {sorted(raw)}")
    for name, body in sections.items():
        if name not in SECTION_KEYS:
            raise ParameterError(f"unknown config section [{name}]")
        extra = set(body) - SECTION_KEYS[name]
        if extra:
            raise ParameterError(f"unknown keys in [{name}]: {sorted(extra)}")
    validate_config(cfg)
    return cfg


def validate_config(cfg: ExperimentConfig):
    """All checks that must pass before any computation."""
    cfg.grid
    check_level1_gamma(cfg.driver.kind, cfg.driver.hurst, cfg.gamma)
    resolve_scheme(cfg.driver.kind, cfg.driver.hurst, cfg.gamma)
    if not cfg.gamma < cfg.kappa < cfg.alpha:
        raise ParameterError("need gamma < kappa < alpha")
    FamilyAN.build(cfg.alpha, cfg.gamma, cfg.family)
    if cfg.rule not in KERNEL_RULES:
        raise ParameterError(f"rule must be one of {KERNEL_RULES}")
    if cfg.samples < 2:
        raise ParameterError("samples must be >= 2")
    if not (cfg.p == "auto" or (isinstance(cfg.p, int) and cfg.p >= 1)):
        raise ParameterError("p must be 'auto' or a positive integer")


# output helpers ---------------------------------------------------------------

def _fmt(x) -> str:
    if x is None:
        return ""
    if isinstance(x, (float, np.floating)):
        return format(float(x), ".17g")
    return str(x)


def _meta(cfg: ExperimentConfig, command: str) -> dict:
    return {"version": f"volterra-lift {__version__}", "command": command, "config": cfg.resolved()}


def write_csv(path: Path, cfg: ExperimentConfig, command: str, header: list, rows: list):
    buf = io.StringIO()
    meta = _meta(cfg, command)
    buf.write(f"# {meta['version']}\n# command: {command}\n")
    buf.write("# config: " + json.dumps(meta["config"], sort_keys=True) + "\n")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([_fmt(x) for x in row])
    path.write_text(buf.getvalue(), encoding="utf-8")


def write_json(path: Path, cfg: ExperimentConfig, command: str, payload: dict):
    doc = {"meta": _meta(cfg, command), **payload}
    path.write_text(json.dumps(doc, sort_keys=True, indent=2, default=_json_default) + "\n", encoding="utf-8")


def _json_default(x):
    if isinstance(x, (np.floating, np.integer)):
        return x.item()
    if isinstance(x, np.ndarray):
        return x.tolist()
    raise TypeError(type(x))


# commands ---------------------------------------------------------------------

def cmd_sample(cfg, out: Path) -> int:
    count = int(cfg.section("sample").get("count", 1))
    paths = sample_paths(cfg.driver, cfg.grid, count)
    m = cfg.driver.dim
    rows = [[p.index, t, *p.values[k]] for p in paths for k, t in enumerate(cfg.grid.points)]
    write_csv(out / "paths.csv", cfg, "sample", ["sample", "t"] + [f"x{i + 1}" for i in range(m)], rows)
    return 0


def cmd_lift(cfg, out: Path) -> int:
    path = sample_paths(cfg.driver, cfg.grid, 1)[0]
    z1 = build_level1(path, cfg.gamma, cfg.rule)
    z2 = build_level2(z1)
    n, m = cfg.cells, cfg.driver.dim
    diag = z1.diagonal()
    top = z2.base(n)
    rows = [[t, *diag[k], *top[k].ravel()] for k, t in enumerate(cfg.grid.points)]
    header = ["t"] + [f"z1_diag_{i + 1}" for i in range(m)]
    header += [f"z2_T_{i + 1}_{j + 1}" for i in range(m) for j in range(m)]
    write_csv(out / "lift.csv", cfg, "lift", header, rows)
    summary = {
        "scheme": z2.scheme,
        "max_abs_z1": float(np.max(np.abs(z1.data.values))),
        "max_abs_z2": float(np.max(np.abs(z2.data.values))),
        "z1_T_0_T": z1.base(n)[-1].tolist(),
        "z2_T_0_T": top[-1].tolist(),
    }
    write_json(out / "lift.json", cfg, "lift", summary)
    return 0


def cmd_verify_chen(cfg, out: Path) -> int:
    path = sample_paths(cfg.driver, cfg.grid, 1)[0]
    z2 = build_level2(build_level1(path, cfg.gamma, cfg.rule))
    resid, scale = chen_residual(z2)
    ok = resid <= CHEN_TOL * scale
    write_json(out / "chen.json", cfg, "verify-chen",
               {"max_residual": resid, "field_scale": scale, "relative": resid / scale if scale else 0.0,
                "tolerance": CHEN_TOL, "passed": bool(ok)})
    return 0 if ok else 2


def _tuples_for(cfg, target):
    given = cfg.section("moments").get("tuples")
    if given:
        want = 3 if target in ("z1_var", "z2_var") else 4
        return [tuple(tp) for tp in given if len(tp) == want]
    return [tp for tps in stratum_tuples(cfg.grid, target).values() for tp in tps]


def cmd_moments(cfg, out: Path) -> int:
    sec = cfg.section("moments")
    targets = sec.get("targets", ["z1_var", "z2_var"])
    bad = [t for t in targets if t not in MOMENT_TARGETS]
    if bad:
        raise ParameterError(f"unknown moment targets {bad}; choose from {MOMENT_TARGETS}")
    eta, zeta = cfg.family[0]
    mc = MonteCarlo(cfg.driver, cfg.grid, cfg.gamma, cfg.samples, rule=cfg.rule, eta=eta, zeta=zeta)
    rows, hits, checked = [], 0, 0
    for target in targets:
        for tp in _tuples_for(cfg, target):
            r = mc.estimate(target, tp)
            s, t = tp[0], tp[1]
            tau, tau_p = (tp[2], None) if len(tp) == 3 else (tp[3], tp[2])
            rows.append([target, s, t, tau, tau_p, r.estimate, r.stderr, r.oracle, r.bound, r.ratio, r.samples])
            if r.z_score is not None:
                checked += 1
                hits += abs(r.z_score) <= 4
    write_csv(out / "moments.csv", cfg, "moments",
              ["target", "s", "t", "tau", "tau_prime", "estimate", "stderr", "oracle", "bound", "ratio", "samples"], rows)
    return 0 if checked == 0 or hits >= 0.95 * checked else 2


def default_lags(cells: int, h: float, limit: float) -> list:
    """Dyadic lags up to ``limit``, starting at 8 cells when that still leaves six of them."""
    lags = [h * 2**k for k in range(cells.bit_length()) if h * 2**k <= limit + 1e-12]
    start = [x for x in lags if x >= 8 * h - 1e-12]
    return start if len(start) >= 6 else lags[-6:]


def cmd_scaling(cfg, out: Path) -> int:
    sec = cfg.section("scaling")
    targets = sec.get("targets", ["z1_var", "z2_var"])
    mode = sec.get("mode", "diagonal")
    tol = float(sec.get("tolerance", 0.05))
    h, T = cfg.grid.h, cfg.horizon
    lags = cfg.lags or default_lags(cfg.cells, h, T if mode == "diagonal" else T / 2)
    mc = MonteCarlo(cfg.driver, cfg.grid, cfg.gamma, cfg.samples, rule=cfg.rule)
    rows, ok = [], True
    for target in targets:
        r = scaling_exponent(mc, target, mode, lags)
        rows.append([target, mode, r.exponent_est, r.exponent_expected, r.r_squared])
        ok &= abs(r.exponent_est - r.exponent_expected) <= tol and r.r_squared >= 0.99
    write_csv(out / "scaling.csv", cfg, "scaling", ["target", "mode", "exponent_est", "exponent_expected", "r_squared"], rows)
    return 0 if ok else 2


def cmd_grr(cfg, out: Path) -> int:
    sec = cfg.section("grr")
    count = int(sec.get("paths", 1))
    levels = sec.get("levels", [1])
    kw = dict(max_upper_points=int(sec.get("max_upper_points", 65)), delta_points=int(sec.get("delta_points", 33)))
    a, k, g = cfg.alpha, cfg.kappa, cfg.gamma
    reports, ok = [], True
    for path in sample_paths(cfg.driver, cfg.grid, count):
        z1 = build_level1(path, g, cfg.rule)
        fields = {1: (z1, a, k)}
        if 2 in levels:
            fields[2] = (build_level2(z1), 2 * a - g, 2 * k - g)
        for level in levels:
            fld, alpha, kappa = fields[level]
            for eta, zeta in cfg.family:
                rep = grr_check(fld, alpha, g, kappa, eta, zeta, cfg.p, **kw)
                ok &= bool(np.isfinite(rep.grr_ratio1) and np.isfinite(rep.grr_ratio12))
                reports.append({"sample": path.index, "level": level, "eta": eta, "zeta": zeta, **rep.to_dict()})
    write_json(out / "grr.json", cfg, "grr", {"reports": reports, "all_finite": ok})
    return 0 if ok else 2


def cmd_diverge(cfg, out: Path) -> int:
    sec = cfg.section("diverge")
    T = cfg.horizon
    s, t = float(sec.get("s", 0.0)), float(sec.get("t", T))
    tau = float(sec.get("tau", t))
    mesh = sec.get("mesh_levels", [(t - s) * 2.0**-k for k in range(4, 11)])
    vals = ito_strat_divergence_probe(cfg.gamma, s, t, tau, mesh)
    write_csv(out / "diverge.csv", cfg, "diverge", ["h", "value"], vals)
    ordered = [v for _, v in sorted(vals)]
    if cfg.gamma > 0 and not all(a > b for a, b in zip(ordered[:-1], ordered[1:])):
        return 2
    return 0


HANDLERS = {
    "sample": cmd_sample, "lift": cmd_lift, "verify-chen": cmd_verify_chen, "moments": cmd_moments,
    "scaling": cmd_scaling, "grr": cmd_grr, "diverge": cmd_diverge,
}


def run(command: str, cfg: ExperimentConfig) -> int:
    """Execute one command and write its artifacts into ``cfg.output_dir``."""
    if command not in HANDLERS:
        raise ParameterError(f"unknown command {command!r}; choose from {COMMANDS}")
    out = Path(cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    return HANDLERS[command](cfg, out)


def _fail(code: int, exc: BaseException) -> int:
    doc = {"error": type(exc).__name__, "message": str(exc), "exit_code": code}
    if isinstance(exc, ParameterError):
        doc["constraints"] = exc.constraints
    sys.stderr.write(json.dumps(doc, sort_keys=True) + "\n")
    return code


class _Parser(argparse.ArgumentParser):
    """Usage errors become parameter errors (exit 1) instead of argparse's exit 2."""

    def error(self, message):
        raise ParameterError(message)


def main(argv=None) -> int:
    parser = _Parser(prog="volterra-lift", description=__doc__.split("\n\n")[0])
    parser.add_argument("command", choices=COMMANDS)
    parser.add_argument("--config", required=True, help="TOML experiment file")
    parser.add_argument("--seed", type=int, default=None, help="override the config seed")
    parser.add_argument("--out", default=None, help="override the output directory")
    try:
        args = parser.parse_args(argv)
        cfg = load_config(args.config, args.seed, args.out)
        return run(args.command, cfg)
    except ParameterError as exc:
        return _fail(1, exc)
    except VerificationError as exc:
        return _fail(2, exc)
    except (NumericalError, FloatingPointError, np.linalg.LinAlgError) as exc:
        return _fail(3, exc)
    except VolterraError as exc:
        return _fail(1, exc)
    except OSError as exc:
        return _fail(1, exc)


if __name__ == "__main__":
    sys.exit(main())
