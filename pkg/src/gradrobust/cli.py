"""Command line runner for the named experiments.

    gradrobust run ex2_gradient_poly --refine 3 --out ex2.csv --plot

Writes one CSV row per (h, mu, lambda) triple.  The thermo experiment also
writes the displacement sampled on a 50x50 grid next to the main CSV.
"""

from __future__ import annotations

import argparse
import csv
import io
import logging
import math
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .analysis import ErrorReport
from .fe_basis import DiscreteField
from .pipeline import ELEMENTS, METHODS, error_report, load_mode, sample_grid, solve_problem, spaces
from .problems import (ThermoParams, example_gradient_cubic, example_gradient_poly,
                       example_incompressible, example_nearly_incompressible, thermo_pipeline)
from .mesh import build_rect_mesh
from .reconstruction import reconstruction_defects

log = logging.getLogger("gradrobust")

EXIT_OK, EXIT_CONFIG, EXIT_SOLVER = 0, 2, 3

COLUMNS = ("experiment", "method", "elements", "h", "mu", "lambda", "dofs", "err_h1",
           "err_h1_semi", "err_l2", "norm_u_h1", "div_residual", "constitutive_residual",
           "solver_residual")

EXPERIMENTS = {
    "ex1_incompressible": lambda mu, lam: example_incompressible(mu),
    "ex2_gradient_poly": example_gradient_poly,
    "ex3_gradient_cubic": example_gradient_cubic,
    "ex4_nearly_incompressible": example_nearly_incompressible,
    "thermo": None,
}

DECADES_MU = tuple(10.0 ** -e for e in range(6))
DECADES_LAM = tuple(10.0 ** e for e in range(6))
SWEEP_MU, SWEEP_LAM = 1e-5, 1e5


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class ExperimentConfig:
    experiment: str
    method: str = "robust"
    elements: str = "q2_dgp1"
    refinement: tuple = (3,)
    mu_list: tuple | None = None
    lambda_list: tuple | None = None
    out_path: str | None = None
    plot: bool = False
    seed: int = 0
    pairs: tuple = field(default=(), compare=False)


def parse_floats(text: str, allow_inf: bool = True) -> tuple:
    out = []
    for tok in text.split(","):
        tok = tok.strip()
        try:
            v = float(tok)
        except ValueError:
            raise ConfigError(f"not a number: {tok!r}") from None
        if math.isnan(v) or v <= 0 or (math.isinf(v) and not allow_inf):
            raise ConfigError(f"expected a positive value, got {tok!r}")
        out.append(v)
    return tuple(out)


def parse_refinement(text: str) -> tuple:
    try:
        rs = tuple(int(t) for t in text.split(","))
    except ValueError:
        raise ConfigError(f"refinement must be integers, got {text!r}") from None
    if any(r < 0 or r > 8 for r in rs):
        raise ConfigError("refinement exponents must lie in 0..8")
    return rs


def parameter_pairs(cfg: ExperimentConfig) -> tuple:
    """(mu, lambda) pairs in sweep order."""
    exp = cfg.experiment
    mus, lams = cfg.mu_list, cfg.lambda_list
    if exp == "thermo":
        if mus is not None:
            raise ConfigError("thermo takes mu from the material data")
        p = ThermoParams()
        return tuple((p.mu, lam) for lam in (lams or (p.lam,)))
    if exp == "ex1_incompressible":
        if lams is not None and any(math.isfinite(v) for v in lams):
            raise ConfigError("ex1_incompressible is the lambda = inf case")
        return tuple((mu, math.inf) for mu in (mus or DECADES_MU))
    if lams is not None and any(math.isinf(v) for v in lams):
        raise ConfigError("lambda = inf is only accepted for ex1_incompressible")
    if mus is None and lams is None:
        sweep = [(SWEEP_MU, lam) for lam in DECADES_LAM]
        sweep += [(mu, SWEEP_LAM) for mu in DECADES_MU if (mu, SWEEP_LAM) not in sweep]
        return tuple(sweep)
    return tuple((mu, lam) for mu in (mus or (SWEEP_MU,)) for lam in (lams or (SWEEP_LAM,)))


def validate(cfg: ExperimentConfig) -> ExperimentConfig:
    if cfg.experiment not in EXPERIMENTS:
        raise ConfigError(f"unknown experiment {cfg.experiment!r}")
    if cfg.method not in METHODS:
        raise ConfigError(f"unknown method {cfg.method!r}")
    if cfg.elements not in ELEMENTS:
        raise ConfigError(f"unknown element pair {cfg.elements!r}")
    try:
        load_mode(cfg.method, cfg.elements)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    if not cfg.refinement:
        raise ConfigError("empty refinement list")
    return ExperimentConfig(**{**cfg.__dict__, "pairs": parameter_pairs(cfg)})


def _fmt(v) -> str:
    if isinstance(v, float):
        return repr(v)
    return str(v)


def self_check(cfg: ExperimentConfig) -> float:
    """Commuting-defect check on a seeded random displacement field."""
    n = 2 ** min(cfg.refinement)
    mesh = build_rect_mesh(n, n)
    V, Q = spaces(mesh, "q2_dgp1")
    rng = np.random.default_rng(cfg.seed)
    coeffs = rng.standard_normal(V.n_dofs)
    coeffs[V.boundary_dofs] = 0.0
    d = reconstruction_defects(V, Q, DiscreteField(V, coeffs))
    log.info("self-check seed=%d commuting defect %.3e", cfg.seed, d.commuting_defect)
    return d.commuting_defect


@dataclass(frozen=True)
class RunResult:
    rows: list
    fields: dict


def run(cfg: ExperimentConfig) -> RunResult:
    """Run every (mu, lambda, refinement) combination of ``cfg``.

    Raises
    ------
    RuntimeError
        When a solve fails; the message names the failing run.
    """
    cfg = validate(cfg) if not cfg.pairs else cfg
    if cfg.method == "robust":
        self_check(cfg)
    rows, fields = [], {}
    for mu, lam in cfg.pairs:
        for r in cfg.refinement:
            n = 2 ** r
            h = (ThermoParams().L if cfg.experiment == "thermo" else 1.0) / n
            try:
                if cfg.experiment == "thermo":
                    params = ThermoParams()
                    mesh = build_rect_mesh(n, n, params.L, params.L)
                    problem = thermo_pipeline(params, mesh, lam=lam)
                else:
                    problem = EXPERIMENTS[cfg.experiment](mu, lam)
                    mesh = build_rect_mesh(n, n, *problem.extent)
                sol = solve_problem(problem, mesh, cfg.elements, cfg.method)
                report = error_report(problem, sol)
            except (np.linalg.LinAlgError, RuntimeError, FloatingPointError) as exc:
                raise RuntimeError(f"{cfg.experiment}: solve failed at h={h!r}, "
                                   f"mu={mu!r}, lambda={lam!r}: {exc}") from exc
            log.info("%s r=%d mu=%g lambda=%g err_h1=%.4e", cfg.experiment, r, mu, lam,
                     report.err_h1)
            rows.append(row_of(cfg, mu, lam, report))
            if cfg.experiment == "thermo":
                fields[(r, mu, lam)] = sample_grid(sol.u_h, 50)
    return RunResult(rows, fields)


def row_of(cfg: ExperimentConfig, mu: float, lam: float, report: ErrorReport) -> dict:
    row = {"experiment": cfg.experiment, "method": cfg.method, "elements": cfg.elements,
           "mu": float(mu), "lambda": float(lam)}
    row.update(report.as_dict())
    return {c: row[c] for c in COLUMNS}


def rows_to_csv(rows, columns=COLUMNS) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for row in rows:
        w.writerow([_fmt(row[c]) for c in columns])
    return buf.getvalue()


def grid_to_csv(grid: np.ndarray) -> str:
    rows = [dict(zip(("x", "y", "u1", "u2"), map(float, r))) for r in grid]
    return rows_to_csv(rows, ("x", "y", "u1", "u2"))


def field_path(out: Path, r: int, tag: str = "") -> Path:
    return out.with_name(f"{out.stem}_field_r{r}{tag}.csv")


# -- plotting ---------------------------------------------------------------

_COLORS = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b")


def plot_series(rows, refinement) -> tuple:
    """Choose the x-axis and split rows into log-log polylines."""
    if len(refinement) > 1:
        key = lambda r: (r["mu"], r["lambda"])
        xlabel, xof = "h", lambda r: r["h"]
        label = lambda k: f"mu={k[0]:g}, lambda={k[1]:g}"
    else:
        mus = {r["mu"] for r in rows}
        lams = {r["lambda"] for r in rows}
        if len(lams) > 1 and len(mus) == 1:
            key, xlabel, xof = (lambda r: r["mu"]), "lambda", (lambda r: r["lambda"])
            label = lambda k: f"mu={k:g}"
        else:
            key, xlabel, xof = (lambda r: r["lambda"]), "1/mu", (lambda r: 1.0 / r["mu"])
            label = lambda k: f"lambda={k:g}"
        if len(lams) > 1 and len(mus) > 1:
            # a combined default sweep: one line along lambda, one along mu
            lam_line = [r for r in rows if r["mu"] == SWEEP_MU and r["lambda"] != SWEEP_LAM]
            mu_line = [r for r in rows if r["lambda"] == SWEEP_LAM]
            if lam_line and mu_line:
                return "lambda or 1/mu", [
                    (f"lambda sweep, mu={SWEEP_MU:g}",
                     [(r["lambda"], r["err_h1"]) for r in rows if r["mu"] == SWEEP_MU]),
                    (f"1/mu sweep, lambda={SWEEP_LAM:g}",
                     [(1.0 / r["mu"], r["err_h1"]) for r in mu_line])]
    groups = {}
    for r in rows:
        groups.setdefault(key(r), []).append((xof(r), r["err_h1"]))
    return xlabel, [(label(k), pts) for k, pts in groups.items()]


def svg_loglog(series, xlabel: str, ylabel: str, title: str = "",
               width: int = 560, height: int = 400) -> str:
    """A minimal log-log line plot as an SVG document."""
    pts = [(x, y) for _, s in series for x, y in s if x > 0 and y > 0]
    left, right, top, bottom = 70, 20, 30, 50
    if not pts:
        lx0, lx1, ly0, ly1 = 0.0, 1.0, 0.0, 1.0
    else:
        lx = np.log10([p[0] for p in pts])
        ly = np.log10([p[1] for p in pts])
        lx0, lx1 = math.floor(lx.min()), math.ceil(lx.max())
        ly0, ly1 = math.floor(ly.min()), math.ceil(ly.max())
        lx1, ly1 = max(lx1, lx0 + 1), max(ly1, ly0 + 1)
    pw, ph = width - left - right, height - top - bottom

    def sx(x):
        return left + (math.log10(x) - lx0) / (lx1 - lx0) * pw

    def sy(y):
        return top + (ly1 - math.log10(y)) / (ly1 - ly0) * ph

    out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
           f'font-family="sans-serif" font-size="11">',
           f'<rect x="{left}" y="{top}" width="{pw}" height="{ph}" fill="none" stroke="black"/>']
    for e in range(lx0, lx1 + 1):
        x = sx(10.0 ** e)
        out.append(f'<text x="{x:.1f}" y="{top + ph + 15}" text-anchor="middle">1e{e}</text>')
    for e in range(ly0, ly1 + 1):
        y = sy(10.0 ** e)
        out.append(f'<text x="{left - 5}" y="{y + 4:.1f}" text-anchor="end">1e{e}</text>')
    out.append(f'<text x="{left + pw / 2}" y="{height - 10}" text-anchor="middle">{xlabel}</text>')
    out.append(f'<text x="15" y="{top + ph / 2}" text-anchor="middle" '
               f'transform="rotate(-90 15 {top + ph / 2})">{ylabel}</text>')
    if title:
        out.append(f'<text x="{left + pw / 2}" y="18" text-anchor="middle">{title}</text>')
    for i, (name, s) in enumerate(series):
        color = _COLORS[i % len(_COLORS)]
        s = sorted((x, y) for x, y in s if x > 0 and y > 0)
        if s:
            poly = " ".join(f"{sx(x):.2f},{sy(y):.2f}" for x, y in s)
            out.append(f'<polyline points="{poly}" fill="none" stroke="{color}"/>')
        out.append(f'<text x="{left + 8}" y="{top + 15 + 14 * i}" fill="{color}">{name}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


# -- entry point --------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="gradrobust",
                                 description="Gradient-robust mixed FEM experiments.")
    sub = ap.add_subparsers(dest="command", required=True)
    r = sub.add_parser("run", help="run a named experiment")
    r.add_argument("experiment", choices=sorted(EXPERIMENTS))
    r.add_argument("--method", default="robust", choices=METHODS)
    r.add_argument("--elements", default="q2_dgp1", choices=ELEMENTS)
    r.add_argument("--refine", default="3", help="comma separated r, n = 2^r cells per side")
    r.add_argument("--mu", default=None, help="comma separated shear moduli")
    r.add_argument("--lambda", dest="lam", default=None,
                   help="comma separated Lame lambdas, or inf")
    r.add_argument("--out", default=None, help="CSV path (stdout if omitted)")
    r.add_argument("--plot", action="store_true", help="write an SVG next to the CSV")
    r.add_argument("--seed", type=int, default=0, help="seed of the randomized self-check")
    r.add_argument("-v", "--verbose", action="store_true")
    return ap


def config_from_args(args) -> ExperimentConfig:
    return validate(ExperimentConfig(
        experiment=args.experiment, method=args.method, elements=args.elements,
        refinement=parse_refinement(args.refine),
        mu_list=parse_floats(args.mu, allow_inf=False) if args.mu else None,
        lambda_list=parse_floats(args.lam) if args.lam else None,
        out_path=args.out, plot=args.plot, seed=args.seed))


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_CONFIG
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s", stream=sys.stderr)
    try:
        cfg = config_from_args(args)
        if cfg.plot and cfg.out_path is None:
            raise ConfigError("--plot needs --out")
    except ConfigError as exc:
        print(f"gradrobust: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        result = run(cfg)
    except RuntimeError as exc:
        print(f"gradrobust: {exc}", file=sys.stderr)
        return EXIT_SOLVER

    text = rows_to_csv(result.rows)
    if cfg.out_path is None:
        sys.stdout.write(text)
        return EXIT_OK
    out = Path(cfg.out_path)
    out.parent.mkdir(parents=True, exist_ok=True)
    out.write_text(text)
    single = len({(mu, lam) for _, mu, lam in result.fields}) <= 1
    for (r, mu, lam), grid in result.fields.items():
        tag = "" if single else f"_lambda{lam!r}"
        field_path(out, r, tag).write_text(grid_to_csv(grid))
    if cfg.plot:
        xlabel, series = plot_series(result.rows, cfg.refinement)
        svg = svg_loglog(series, xlabel, "H1 error", f"{cfg.experiment} ({cfg.method}, "
                                                     f"{cfg.elements})")
        out.with_suffix(".svg").write_text(svg)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
