"""``scaling-lab`` command line: evaluation, sweeps, energies, necessity, oracle, diagnostics and fits."""

from __future__ import annotations

import argparse
import concurrent.futures
import csv
import io
import math
import os
import sys
from dataclasses import dataclass
from typing import Dict, Iterable, List, Optional, Sequence

import numpy as np

from .scaling import ALL_REGIMES, DomainError, Params, RegimeId, eval_scaling, regime_value

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_DOMINANCE = 3

PARAM_NAMES = ("mu", "eps", "theta", "L")

# leading-term exponents of each regime in each parameter (None where the
# leading term carries a parameter-dependent logarithm)
EXPONENTS: Dict[RegimeId, Dict[str, Optional[float]]] = {
    RegimeId.Constant: {"mu": 0.0, "eps": 0.0, "theta": 2.0, "L": 1.0},
    RegimeId.Affine: {"mu": 1.0, "eps": 0.0, "theta": 2.0, "L": None},
    RegimeId.LinearInterpolation: {"mu": None, "eps": None, "theta": None, "L": None},
    RegimeId.SingleTruncatedBranching: {"mu": None, "eps": None, "theta": None, "L": None},
    RegimeId.CornerLaminate: {"mu": None, "eps": None, "theta": None, "L": None},
    RegimeId.Branching: {"mu": 0.0, "eps": 2.0 / 3.0, "theta": 2.0 / 3.0, "L": 1.0 / 3.0},
    RegimeId.Laminate: {"mu": 0.5, "eps": 0.5, "theta": None, "L": 0.5},
    RegimeId.TwoScaleBranching: {"mu": None, "eps": None, "theta": None, "L": None},
}


class DominanceError(Exception):
    """The requested regime is not the argmin over the whole fit range."""


class UsageError(Exception):
    pass


def fmt(x) -> str:
    if isinstance(x, (bool, np.bool_)):
        return "1" if x else "0"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, float) or isinstance(x, np.floating):
        return f"{float(x):.16e}"
    return str(x)


def write_csv(header: Sequence[str], rows: Iterable[Sequence], out) -> None:
    w = csv.writer(out, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([fmt(v) for v in r])


def threads() -> int:
    raw = os.environ.get("SCALING_LAB_THREADS", "")
    try:
        n = int(raw)
    except ValueError:
        n = os.cpu_count() or 1
    return max(1, n)


# ---------------------------------------------------------------------------
# eval


def eval_row(p: Params) -> List:
    res = eval_scaling(p)
    return [p.mu, p.eps, p.theta, p.L] + [res.values[r] for r in ALL_REGIMES] + [res.total, res.argmin.slug]


EVAL_HEADER = list(PARAM_NAMES) + [r.slug for r in ALL_REGIMES] + ["total", "argmin"]


def cmd_eval(a, out) -> int:
    write_csv(EVAL_HEADER, [eval_row(_params(a))], out)
    return EXIT_OK


# ---------------------------------------------------------------------------
# sweep


@dataclass(frozen=True)
class Axis:
    name: str
    lo: float
    hi: float
    count: int

    def values(self) -> np.ndarray:
        return np.geomspace(self.lo, self.hi, self.count)


def parse_axis(text: str) -> Axis:
    parts = text.split(":")
    if len(parts) != 4:
        raise UsageError(f"axis must be name:lo:hi:count, got {text!r}")
    name, lo, hi, cnt = parts
    if name not in PARAM_NAMES:
        raise UsageError(f"unknown axis parameter {name!r}")
    lo_f, hi_f, n = float(lo), float(hi), int(cnt)
    if not (lo_f > 0 and hi_f > 0):
        raise UsageError("axis ranges must be positive")
    if n < 2:
        raise UsageError("axis count must be at least 2")
    return Axis(name, lo_f, hi_f, n)


def _energy_cells(p: Params):
    from .constructions import build_best
    from .energy import total_energy

    f, _ = build_best(p)
    e = total_energy(f, p).total
    return e, e / eval_scaling(p).total


def _sweep_row(args):
    p, with_energy = args
    row = eval_row(p)
    if with_energy:
        row += list(_energy_cells(p))
    return row


def _map_ordered(fn, items: List, heavy: bool) -> List:
    n = threads()
    if n <= 1 or len(items) <= 1 or not heavy:
        return [fn(it) for it in items]
    with concurrent.futures.ProcessPoolExecutor(max_workers=n) as ex:
        return list(ex.map(fn, items))


def cmd_sweep(a, out) -> int:
    ax1, ax2 = parse_axis(a.axis1), parse_axis(a.axis2)
    if ax1.name == ax2.name:
        raise UsageError("the two sweep axes must differ")
    fixed = {k: getattr(a, k) for k in PARAM_NAMES if k not in (ax1.name, ax2.name)}
    missing = [k for k, v in fixed.items() if v is None]
    if missing:
        raise UsageError(f"missing fixed parameter(s): {', '.join(missing)}")
    items = []
    for v1 in ax1.values():
        for v2 in ax2.values():
            d = dict(fixed)
            d[ax1.name] = float(v1)
            d[ax2.name] = float(v2)
            items.append((Params(**d), a.with_energy))
    rows = _map_ordered(_sweep_row, items, a.with_energy)
    header = EVAL_HEADER + (["energy", "ratio"] if a.with_energy else [])
    write_csv(header, rows, out)
    return EXIT_OK


# ---------------------------------------------------------------------------
# energy


ENERGY_HEADER = ["kind", "mu", "eps", "theta", "L", "elastic_mart", "elastic_aust", "surface", "tail", "total",
                 "scaling_total", "ratio"]


def build_for(a, p: Params):
    from . import constructions as C

    kind = C.ConstructionKind.parse(a.kind) if a.kind not in (None, "best") else None
    if kind is None:
        return C.build_best(p)[0]
    if kind in C.COMPOSITES:
        return C.build_composite(kind, p)
    need = {
        C.ConstructionKind.ExteriorFlow: ("alpha", "beta", "Lbar"),
        C.ConstructionKind.BoundaryLaminate: ("N", "h"),
        C.ConstructionKind.BranchCell: ("h", "ell", "N"),
        C.ConstructionKind.InterpWedge: ("beta_tilde",),
    }[kind]
    vals = {k: getattr(a, k) for k in need}
    miss = [k for k, v in vals.items() if v is None]
    if miss:
        raise UsageError(f"{kind.value} needs --{' --'.join(miss)}")
    if kind is C.ConstructionKind.ExteriorFlow:
        return C.build_exterior_flow(vals["alpha"], vals["beta"], vals["Lbar"], p.theta)
    if kind is C.ConstructionKind.BoundaryLaminate:
        return C.build_boundary_laminate(vals["N"], vals["h"], p.theta)
    if kind is C.ConstructionKind.BranchCell:
        return C.build_branch_cell(vals["h"], vals["ell"], vals["N"], p.theta)
    return C.build_interp_wedge(vals["beta_tilde"], p.theta)


def cmd_energy(a, out) -> int:
    from .energy import QuadratureSpec, TailMode, total_energy
    from .fields import dump_field

    p = _params(a)
    f = build_for(a, p)
    q = QuadratureSpec(order=a.order, tail_mode=TailMode(a.tail_mode),
                       truncation_radius=a.truncation_radius)
    e = total_energy(f, p, q, j_form=a.j_form)
    s = eval_scaling(p).total
    kind = f.params_used.get("resolved_kind", f.kind)
    write_csv(ENERGY_HEADER, [[kind, p.mu, p.eps, p.theta, p.L, e.elastic_martensite, e.elastic_austenite,
                               e.surface, e.tail_estimate, e.total, s, e.total / s]], out)
    if a.dump_field:
        with open(a.dump_field, "w") as fh:
            fh.write(dump_field(f))
    return EXIT_OK


# ---------------------------------------------------------------------------
# necessity


def cmd_necessity(a, out) -> int:
    from . import logspace as ls
    from .necessity import CASE_IDS, check_case, grid_to_level

    case = a.case_pos or a.case
    if case is None:
        raise UsageError("give a case id or 'all'")
    cases = CASE_IDS if str(case).lower() == "all" else [str(case).lower()]
    for c in cases:
        if c not in CASE_IDS:
            raise UsageError(f"unknown necessity case {c!r}")
    rows = []
    for c in cases:
        grid = grid_to_level(c, a.jmax, a.count) if a.jmax is not None else None
        rep = check_case(c, grid)
        verdict = "pass" if rep.passed else "fail"
        for tw, lp, lr in rep.rows:
            lp_txt = ";".join(fmt(ls.as_float(v)) for v in lp.as_tuple())
            rows.append([c, _tower_label(tw), lp_txt, lr, verdict])
    write_csv(["case", "j", "log_params", "log_ratio", "verdict"], rows, out)
    return EXIT_OK


def _tower_label(tw) -> str:
    """The j (or L_j) value, or its iterated logarithm when it overflows a double."""
    for lvl, v in enumerate(tw.atoms):
        if math.isfinite(v):
            return fmt(float(v)) if lvl == 0 else f"log^{lvl}:{fmt(float(v))}"
    return "inf"


# ---------------------------------------------------------------------------
# oracle


def cmd_oracle(a, out) -> int:
    from . import oracle as O

    p = _params(a)
    g = O.Grid(a.n1, a.n2, a.collar)
    s = eval_scaling(p).total
    if a.bracket:
        b = O.bracket(p, g, a.budget, a.tol)
        write_csv(["mu", "eps", "theta", "L", "n1", "n2", "lower_probe", "upper_probe", "construction_energy",
                   "scaling_total", "upper_ratio"],
                  [[p.mu, p.eps, p.theta, p.L, g.n1, g.n2, b.lower_probe, b.upper_probe, b.construction_energy,
                    s, b.upper_probe / s]], out)
        return EXIT_OK
    _, rep = O.minimize(p, g, a.init, a.budget, a.tol, a.seed, a.bc)
    write_csv(["mu", "eps", "theta", "L", "n1", "n2", "bc", "init", "energy", "iterations", "residual",
               "smoothing", "budget_exhausted", "scaling_total", "ratio"],
              [[p.mu, p.eps, p.theta, p.L, g.n1, g.n2, a.bc, a.init, rep.energy, rep.iterations, rep.residual,
                rep.smoothing, rep.budget_exhausted, s, rep.energy / s]], out)
    return EXIT_OK


# ---------------------------------------------------------------------------
# diagnose


def cmd_diagnose(a, out) -> int:
    from . import diagnostics as D

    p = _params(a)
    f = build_for(a, p)
    sets = D.classify_slices(f, p, a.grid_n)
    outside = np.flatnonzero(~sets.P_mask)
    picks = set()
    if outside.size and a.path_samples > 0:
        picks = set(outside[np.linspace(0, outside.size - 1, min(a.path_samples, outside.size)).astype(int)].tolist())
    rows = []
    for i, x1 in enumerate(sets.x1):
        if i in picks:
            ps = D.path_sample(f, p, float(x1))
            pi, pb = ps.path_integral, ps.path_bound
        else:
            pi = pb = float("nan")
        rows.append([float(x1), bool(sets.C_mask[i]), bool(sets.P_mask[i]), float(sets.endpoint_gap[i]), pi, pb])
    write_csv(["x1", "in_C", "in_P", "endpoint_gap", "path_integral", "path_bound"], rows, out)
    return EXIT_OK


# ---------------------------------------------------------------------------
# fit


@dataclass(frozen=True)
class FitReport:
    regime: RegimeId
    axis: str
    slope: float
    expected: float
    residual: float


def fit_slope(regime: RegimeId, axis: str, lo: float, hi: float, fixed: Dict[str, float], count: int = 9) -> FitReport:
    """Log-log slope of the best construction's energy along ``axis``."""
    from .constructions import build_best
    from .energy import total_energy

    xs = np.geomspace(lo, hi, count)
    energies = []
    for x in xs:
        d = dict(fixed)
        d[axis] = float(x)
        p = Params(**d)
        if eval_scaling(p).argmin is not regime:
            raise DominanceError(f"{regime.slug} is not the argmin at {axis}={x:.6g}")
        f, _ = build_best(p)
        energies.append(total_energy(f, p).total)
    lx, ly = np.log(xs), np.log(np.asarray(energies))
    slope, icpt = np.polyfit(lx, ly, 1)
    resid = float(np.sqrt(np.mean((ly - (slope * lx + icpt)) ** 2)))
    expected = EXPONENTS[regime][axis]
    if expected is None:
        # no pure power law: compare with the local slope of the regime formula itself
        vals = [regime_value(Params(**{**fixed, axis: float(x)}), regime) for x in xs]
        expected = float(np.polyfit(lx, np.log(vals), 1)[0])
    return FitReport(regime, axis, float(slope), float(expected), resid)


def cmd_fit(a, out) -> int:
    regime = RegimeId.parse(a.regime)
    if a.axis not in PARAM_NAMES:
        raise UsageError(f"unknown axis {a.axis!r}")
    fixed = {k: getattr(a, k) for k in PARAM_NAMES if k != a.axis}
    missing = [k for k, v in fixed.items() if v is None]
    if missing:
        raise UsageError(f"missing fixed parameter(s): {', '.join(missing)}")
    rep = fit_slope(regime, a.axis, a.lo, a.hi, fixed, a.count)
    ok = abs(rep.slope - rep.expected) <= a.slope_tol
    write_csv(["regime", "axis", "slope", "expected", "residual", "within_tolerance"],
              [[rep.regime.slug, rep.axis, rep.slope, rep.expected, rep.residual, ok]], out)
    return EXIT_OK


# ---------------------------------------------------------------------------
# parser


def _params(a) -> Params:
    vals = {k: getattr(a, k) for k in PARAM_NAMES}
    missing = [k for k, v in vals.items() if v is None]
    if missing:
        raise UsageError(f"missing parameter(s): {', '.join('--' + k for k in missing)}")
    return Params(**vals)


def _add_params(sp) -> None:
    for k in PARAM_NAMES:
        sp.add_argument(f"--{k}", type=float, default=None)


def _add_kind(sp) -> None:
    sp.add_argument("--kind", default="best")
    for k in ("alpha", "beta", "Lbar", "h", "ell", "beta_tilde"):
        sp.add_argument(f"--{k}", type=float, default=None)
    sp.add_argument("--N", type=int, default=None)


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="scaling-lab", description="Energy scaling laws for a martensitic nucleus.")
    ap.add_argument("--config", default=None, help="file of key = value lines (flags override)")
    sub = ap.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("eval", help="all regime values, total and argmin")
    _add_params(sp)
    sp.set_defaults(func=cmd_eval)

    sp = sub.add_parser("sweep", help="two-axis log sweep")
    _add_params(sp)
    sp.add_argument("--axis1", required=True, help="name:lo:hi:count")
    sp.add_argument("--axis2", required=True, help="name:lo:hi:count")
    sp.add_argument("--with-energy", action="store_true")
    sp.set_defaults(func=cmd_sweep)

    sp = sub.add_parser("energy", help="energy breakdown of a construction")
    _add_params(sp)
    _add_kind(sp)
    sp.add_argument("--order", type=int, default=8)
    sp.add_argument("--tail-mode", default="analytic", choices=["analytic", "fitted"])
    sp.add_argument("--truncation-radius", type=float, default=None)
    sp.add_argument("--j-form", action="store_true", help="use the symmetrized austenite density")
    sp.add_argument("--dump-field", default=None)
    sp.set_defaults(func=cmd_energy)

    sp = sub.add_parser("necessity", help="necessity sequence report")
    sp.add_argument("case_pos", nargs="?", default=None)
    sp.add_argument("--case", default=None)
    sp.add_argument("--jmax", type=float, default=None)
    sp.add_argument("--count", type=int, default=25)
    sp.set_defaults(func=cmd_necessity)

    sp = sub.add_parser("oracle", help="direct minimization of the discretized energy")
    _add_params(sp)
    sp.add_argument("--n1", type=int, default=64)
    sp.add_argument("--n2", type=int, default=64)
    sp.add_argument("--collar", type=float, default=1.0)
    sp.add_argument("--init", default="zero", choices=["zero", "best_construction", "random"])
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--budget", type=int, default=2000)
    sp.add_argument("--tol", type=float, default=1e-8)
    sp.add_argument("--bc", default="zero_outer", choices=["zero_outer", "free_outer"])
    sp.add_argument("--bracket", action="store_true", help="report lower and upper probes")
    sp.set_defaults(func=cmd_oracle)

    sp = sub.add_parser("diagnose", help="per-slice diagnostics of a construction")
    _add_params(sp)
    _add_kind(sp)
    sp.add_argument("--grid-n", type=int, default=2048)
    sp.add_argument("--path-samples", type=int, default=32)
    sp.set_defaults(func=cmd_diagnose)

    sp = sub.add_parser("fit", help="log-log slope of construction energies")
    _add_params(sp)
    sp.add_argument("--regime", required=True)
    sp.add_argument("--axis", required=True, choices=list(PARAM_NAMES))
    sp.add_argument("--lo", type=float, required=True)
    sp.add_argument("--hi", type=float, required=True)
    sp.add_argument("--count", type=int, default=9)
    sp.add_argument("--slope-tol", type=float, default=0.05)
    sp.set_defaults(func=cmd_fit)
    return ap


def read_config(path: str) -> Dict[str, str]:
    out = {}
    with open(path) as fh:
        for n, line in enumerate(fh, 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise UsageError(f"{path}:{n}: expected key = value")
            k, v = (s.strip() for s in line.split("=", 1))
            out[k.replace("-", "_")] = v
    return out


def _apply_config(ap: argparse.ArgumentParser, argv: List[str]) -> None:
    pre = argparse.ArgumentParser(add_help=False)
    pre.add_argument("--config", default=None)
    known, _ = pre.parse_known_args(argv)
    if not known.config:
        return
    cfg = read_config(known.config)
    for action in ap._subparsers._group_actions:
        for sp in action.choices.values():
            dests = {a.dest: a for a in sp._actions}
            vals = {}
            for k, v in cfg.items():
                if k in dests:
                    act = dests[k]
                    if isinstance(act, argparse._StoreTrueAction):
                        vals[k] = v.lower() in ("1", "true", "yes", "on")
                    else:
                        vals[k] = act.type(v) if act.type else v
            sp.set_defaults(**vals)
            for k in vals:
                dests[k].required = False


def main(argv: Optional[Sequence[str]] = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    ap = build_parser()
    try:
        _apply_config(ap, argv)
    except (OSError, UsageError, ValueError) as e:
        print(f"scaling-lab: {e}", file=sys.stderr)
        return EXIT_USAGE
    try:
        a = ap.parse_args(argv)
    except SystemExit as e:
        return int(e.code or 0)
    buf = io.StringIO()
    try:
        code = a.func(a, buf)
    except (UsageError, DomainError, ValueError) as e:
        print(f"scaling-lab: {e}", file=sys.stderr)
        ap.print_usage(sys.stderr)
        return EXIT_USAGE
    except DominanceError as e:
        print(f"scaling-lab: {e}", file=sys.stderr)
        return EXIT_DOMINANCE
    try:
        sys.stdout.write(buf.getvalue())
        sys.stdout.flush()
    except BrokenPipeError:
        # reader went away (e.g. piped into head); keep the interpreter from complaining at exit
        sys.stdout = open(os.devnull, "w")
    return code


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
