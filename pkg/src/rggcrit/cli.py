"""Command-line front end: formula tables, simulation runs, verification
tables and report aggregation.

Exit codes: 0 success, 1 usage error, 2 regime/domain error, 3 I/O error.
All randomness flows from --seed; the only environment override is the
worker count (RGGCRIT_THREADS).
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
from dataclasses import dataclass, field

import numpy as np

from . import experiments as ex
from . import geometry as geo
from . import theory as th
from .errors import DomainError

__all__ = ["RunConfig", "main"]

_COMMANDS = ("theory", "simulate", "verify-lemma", "verify-geometry",
             "decompose", "palm", "report")


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # argparse defaults to exit code 2
        self.print_usage(sys.stderr)
        sys.stderr.write(f"{self.prog}: error: {message}\n")
        sys.exit(1)


@dataclass
class RunConfig:
    """Merged file + flag configuration for one CLI invocation."""

    command: str
    d: int = 3
    k: int = 0
    c: list[float] = field(default_factory=lambda: [1.0])
    n: list[float] = field(default_factory=lambda: [1e6])
    region: str = "cube"
    sides: list[float] | None = None
    trials: int = 100
    seed: int = 0
    c_grid: str = "-2:6:41"
    xi: float = 0.0
    n_grid: list[float] = field(default_factory=lambda: [1e4, 1e6, 1e8])
    radius: float | None = None
    layer_constant: float = 1.0
    budget: int = 1_000_000
    threads: int | None = None
    output: str | None = None
    format: str = "csv"
    input: str | None = None
    ks_threshold: float = 0.15
    equal_threshold: float = 0.9

    def region_obj(self) -> geo.Region:
        sides = tuple(self.sides) if self.sides else ()
        return geo.Region(self.region, self.d, sides)

    def c_grid_array(self) -> np.ndarray:
        lo, hi, num = self.c_grid.split(":")
        return np.linspace(float(lo), float(hi), int(num))

    def to_json(self) -> str:
        obj = {k: v for k, v in self.__dict__.items() if v is not None}
        return json.dumps(obj, sort_keys=True)

    @staticmethod
    def from_json(text: str) -> "RunConfig":
        return RunConfig(**json.loads(text))


def _float_list(text: str) -> list[float]:
    return [float(x) for x in text.split(",") if x]


def _build_parser() -> _Parser:
    p = _Parser(prog="rggcrit",
                description="Critical radii of random geometric graphs: "
                            "formulas, simulation, verification")
    p.add_argument("command", choices=_COMMANDS)
    p.add_argument("--config", help="JSON config file; flags override its keys")
    p.add_argument("--d", type=int)
    p.add_argument("--k", type=int)
    p.add_argument("--c", type=_float_list, help="comma list of c values")
    p.add_argument("--n", type=_float_list, help="comma list of n values")
    p.add_argument("--region", choices=("cube", "ball", "box"))
    p.add_argument("--sides", type=_float_list, help="box side lengths")
    p.add_argument("--trials", type=int, help="Monte Carlo trial count M")
    p.add_argument("--seed", type=int, help="master seed")
    p.add_argument("--c-grid", dest="c_grid", help="lo:hi:num")
    p.add_argument("--xi", type=float, help="offset for verify-lemma")
    p.add_argument("--n-grid", dest="n_grid", type=_float_list)
    p.add_argument("--radius", type=float, help="override r (default r_n(c))")
    p.add_argument("--layer-constant", dest="layer_constant", type=float)
    p.add_argument("--budget", type=int, help="Monte Carlo sample budget")
    p.add_argument("--threads", type=int, help="worker processes")
    p.add_argument("--output", help="output file or directory (simulate)")
    p.add_argument("--format", choices=("csv", "json"))
    p.add_argument("--input", help="input directory for report")
    p.add_argument("--ks-threshold", dest="ks_threshold", type=float)
    p.add_argument("--equal-threshold", dest="equal_threshold", type=float)
    return p


def load_config(argv: list[str]) -> RunConfig:
    ns = _build_parser().parse_args(argv)
    base: dict = {}
    if ns.config:
        try:
            with open(ns.config) as fh:
                base = json.load(fh)
        except OSError as e:
            raise FileNotFoundError(f"cannot read config {ns.config}: {e}") from e
    merged = dict(base)
    for key, value in vars(ns).items():
        if key == "config":
            continue
        if value is not None:
            merged[key] = value
    merged.setdefault("command", ns.command)
    valid = set(RunConfig.__dataclass_fields__)
    unknown = set(merged) - valid
    if unknown:
        raise DomainError(f"unknown config keys: {sorted(unknown)}")
    return RunConfig(**merged)


def _fmt(x) -> str:
    if isinstance(x, bool):
        return str(int(x))
    if isinstance(x, float):
        return f"{x:.17g}"
    return str(x)


def _emit_table(cfg: RunConfig, header: list[str], rows: list[list]) -> None:
    if cfg.format == "json":
        payload = [dict(zip(header, row)) for row in rows]
        text = json.dumps(payload, indent=2, default=float) + "\n"
    else:
        buf = io.StringIO()
        w = csv.writer(buf)
        w.writerow(header)
        for row in rows:
            w.writerow([_fmt(v) for v in row])
        text = buf.getvalue()
    if cfg.output:
        with open(cfg.output, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def cmd_theory(cfg: RunConfig) -> int:
    region = cfg.region_obj()
    area = geo.surface_area(region)
    header = ["d", "k", "c", "n", "area", "denom_coeff", "xi", "r_n", "gumbel_target"]
    rows = []
    for c in cfg.c:
        for n in cfg.n:
            params = th.TheoryParams(cfg.d, cfg.k, c, n, region)
            dc = th.critical_radius(params)
            rows.append([cfg.d, cfg.k, c, n, area, dc.c_d, dc.xi, dc.r_n,
                         th.gumbel_cdf(c)])
    _emit_table(cfg, header, rows)
    return 0


def cmd_simulate(cfg: RunConfig) -> int:
    out_dir = cfg.output or "."
    os.makedirs(out_dir, exist_ok=True)
    params = th.TheoryParams(cfg.d, cfg.k, cfg.c[0], cfg.n[0], cfg.region_obj())
    cdf = ex.run_batch(params, cfg.trials, cfg.seed,
                       c_grid=cfg.c_grid_array(), threads=cfg.threads)
    ex.write_trials_csv(cdf, os.path.join(out_dir, "trials.csv"))
    ex.write_summary_csv(cdf, os.path.join(out_dir, "summary.csv"))
    ex.write_summary_json(cdf, os.path.join(out_dir, "summary.json"),
                          master_seed=cfg.seed)
    sys.stdout.write(
        f"simulate: M={cfg.trials} ks_delta={ex.ks_distance(cdf, 'delta'):.4f} "
        f"ks_kappa={ex.ks_distance(cdf, 'kappa'):.4f} "
        f"equal_fraction={cdf.equal_fraction:.4f}\n")
    return 0


def cmd_verify_lemma(cfg: RunConfig) -> int:
    header = ["d", "k", "xi", "n", "lhs", "rhs", "ratio"]
    rows = []
    rhs = th.lemma1_rhs(cfg.d, cfg.k, cfg.xi)
    for n in cfg.n_grid:
        lhs = th.lemma1_lhs(cfg.d, cfg.k, n, cfg.xi)
        rows.append([cfg.d, cfg.k, cfg.xi, n, lhs, rhs, lhs / rhs])
    _emit_table(cfg, header, rows)
    return 0


def cmd_verify_geometry(cfg: RunConfig) -> int:
    rng = np.random.default_rng(cfg.seed)
    header = ["quantity", "d", "r", "param", "exact", "mc", "mc_se", "zscore"]
    rows = []
    for d in (3, 4, 5):
        r = 1.0
        cases = [
            ("segment", 0.3 * r, geo.segment_volume(d, r, 0.3 * r),
             geo.segment_volume_mc(d, r, 0.3 * r, cfg.budget, rng)),
            ("lens", r, geo.lens_volume(d, r, r),
             geo.lens_volume_mc(d, r, r, cfg.budget, rng)),
            ("shadow", 0.1 * r, geo.shadow_volume_exact(d, r, 0.1 * r),
             geo.shadow_volume_mc(d, r, 0.1 * r, cfg.budget, rng)),
        ]
        for name, param, exact, est in cases:
            z = (est.value - exact) / est.std_error if est.std_error else 0.0
            rows.append([name, d, r, param, exact, est.value, est.std_error, z])
    _emit_table(cfg, header, rows)
    return 0


def cmd_decompose(cfg: RunConfig) -> int:
    params = th.TheoryParams(cfg.d, cfg.k, cfg.c[0], cfg.n[0], cfg.region_obj())
    r = cfg.radius if cfg.radius is not None else th.critical_radius(params).r_n
    rng = np.random.default_rng(cfg.seed)
    dec = th.decompose_psi_integral(params, r, cfg.layer_constant,
                                    budget=cfg.budget, rng=rng)
    header = ["zone", "value", "std_error", "share"]
    total = dec.total
    rows = [[name, part.value, part.std_error,
             part.value / total.value if total.value else math.nan]
            for name, part in (("interior", dec.interior), ("sliver", dec.sliver),
                               ("boundary_layer", dec.boundary_layer),
                               ("outer_layer", dec.outer_layer),
                               ("total", total))]
    _emit_table(cfg, header, rows)
    return 0


def cmd_palm(cfg: RunConfig) -> int:
    params = th.TheoryParams(cfg.d, cfg.k, cfg.c[0], cfg.n[0], cfg.region_obj())
    r = cfg.radius if cfg.radius is not None else th.critical_radius(params).r_n
    res = ex.palm_check(params, r, cfg.trials, master_seed=cfg.seed,
                        budget=cfg.budget)
    header = ["empirical_mean", "empirical_se", "integral", "integral_se", "zscore"]
    _emit_table(cfg, header, [[res.empirical_mean, res.empirical_se,
                               res.integral, res.integral_se, res.zscore]])
    return 0


def cmd_report(cfg: RunConfig) -> int:
    src = cfg.input or "."
    summary_path = os.path.join(src, "summary.json")
    if not os.path.exists(summary_path):
        raise FileNotFoundError(f"missing simulation summary {summary_path}")
    with open(summary_path) as fh:
        summary = json.load(fh)
    criteria = [
        {"name": "ks_kappa", "value": summary["ks_kappa"],
         "threshold": cfg.ks_threshold,
         "pass": summary["ks_kappa"] <= cfg.ks_threshold},
        {"name": "ks_delta", "value": summary["ks_delta"],
         "threshold": cfg.ks_threshold,
         "pass": summary["ks_delta"] <= cfg.ks_threshold},
        {"name": "equal_fraction", "value": summary["equal_fraction"],
         "threshold": cfg.equal_threshold,
         "pass": summary["equal_fraction"] >= cfg.equal_threshold},
    ]
    lemma_path = os.path.join(src, "lemma.csv")
    if os.path.exists(lemma_path):
        with open(lemma_path) as fh:
            ratios = [float(row["ratio"]) for row in csv.DictReader(fh)]
        devs = [abs(x - 1.0) for x in ratios]
        criteria.append({"name": "lemma_ratio_trend", "value": devs,
                         "pass": all(a > b for a, b in zip(devs, devs[1:]))})
    geom_path = os.path.join(src, "geometry.csv")
    if os.path.exists(geom_path):
        with open(geom_path) as fh:
            zs = [float(row["zscore"]) for row in csv.DictReader(fh)]
        criteria.append({"name": "geometry_zscores", "value": zs,
                         "pass": all(abs(z) <= 3.0 for z in zs)})
    verdict = {"criteria": criteria, "all_pass": all(c["pass"] for c in criteria)}
    text = json.dumps(verdict, indent=2) + "\n"
    if cfg.output:
        with open(cfg.output, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return 0


_DISPATCH = {
    "theory": cmd_theory,
    "simulate": cmd_simulate,
    "verify-lemma": cmd_verify_lemma,
    "verify-geometry": cmd_verify_geometry,
    "decompose": cmd_decompose,
    "palm": cmd_palm,
    "report": cmd_report,
}


def main(argv: list[str] | None = None) -> int:
    argv = sys.argv[1:] if argv is None else argv
    try:
        cfg = load_config(argv)
        return _DISPATCH[cfg.command](cfg)
    except SystemExit:
        raise
    except FileNotFoundError as e:
        sys.stderr.write(f"rggcrit: {e}\n")
        return 3
    except OSError as e:
        sys.stderr.write(f"rggcrit: {e}\n")
        return 3
    except DomainError as e:
        sys.stderr.write(f"rggcrit: {e}\n")
        return 2


if __name__ == "__main__":
    sys.exit(main())
