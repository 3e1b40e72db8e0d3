"""Batch driver: ``polycycle-lab <command> --input cfg.json [--output out.csv]``.

Exit status is 0 on success, 2 when a checked property fails, 1 on I/O,
configuration or domain errors.  Output is byte-reproducible: floats are
written with 17 significant digits and record order is fixed.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from . import __version__
from .errors import BoundViolation, DomainError, InvalidConfig, OrderingViolation, OutOfRange
from .invariants import (THConfig, assign_k, assign_k_merge, frequencies, invariant_vector,
                         projective_invariant, rotation_problems)
from .map_models import SHIPPED_MODELS, GridSpec, certify_estimates, model_from_spec
from .rectifier import build_chart, chart_residual
from .rotation import Interval, RotationProblem, orbit_frequency, predicted_limit, rational_orbit_count
from .sparkler import SparkProblem, polynomial_P, spark_bracket, spark_objective, spark_sequence, th_sparks

MODEL_KEYS = {"kind", "C", "Lambda", "a", "beta", "additive_eps", "delta"}


def thread_count() -> int:
    raw = os.environ.get("POLYCYCLE_LAB_THREADS", "0")
    try:
        n = int(raw)
    except ValueError:
        raise InvalidConfig(f"POLYCYCLE_LAB_THREADS must be an integer, got {raw!r}",
                            "POLYCYCLE_LAB_THREADS")
    if n < 0:
        raise InvalidConfig("POLYCYCLE_LAB_THREADS must be >= 0", "POLYCYCLE_LAB_THREADS")
    return n or min(8, os.cpu_count() or 1)


def pmap(fn, items):
    """Order-preserving map over at most POLYCYCLE_LAB_THREADS workers."""
    items = list(items)
    n = thread_count()
    if n == 1 or len(items) < 2:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=n) as ex:
        return list(ex.map(fn, items))


# ---- input / output ------------------------------------------------------

def load_config(path):
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as e:
        raise OSError(f"cannot read {path}: {e.strerror}") from e
    try:
        return json.loads(text)
    except json.JSONDecodeError as e:
        raise InvalidConfig(f"malformed JSON in {path} at line {e.lineno}, column {e.colno}: {e.msg}")


def _cell(v):
    if v is None:
        return ""
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return f"{float(v):.17g}"
    return str(v)


def render_csv(columns, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\r\n")
    w.writerow(columns)
    for r in rows:
        w.writerow([_cell(r.get(c)) for c in columns])
    return buf.getvalue()


def _jsonable(v):
    if isinstance(v, dict):
        return {k: _jsonable(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_jsonable(x) for x in v]
    if isinstance(v, (np.integer,)):
        return int(v)
    if isinstance(v, (np.floating,)):
        return float(v)
    if isinstance(v, np.bool_):
        return bool(v)
    return v


def render_json(obj) -> str:
    return json.dumps(_jsonable(obj), indent=2) + "\n"


def write_text(path, text):
    if path in (None, "-"):
        sys.stdout.write(text)
        return
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(text)


class Result:
    """Tabular records plus extra JSON fields and named property checks."""

    def __init__(self, columns, rows, extra=None):
        self.columns = columns
        self.rows = rows
        self.extra = extra or {}
        self.checks = []

    def check(self, name, ok, detail=""):
        self.checks.append((name, bool(ok), detail))

    def render(self, fmt):
        if fmt == "json":
            return render_json(dict(self.extra, records=[{c: r.get(c) for c in self.columns}
                                                         for r in self.rows]))
        return render_csv(self.columns, self.rows)


def _get(d, key, default=None, kind=float):
    if key not in d:
        return default
    v = d[key]
    if kind in (int, float) and (isinstance(v, bool) or not isinstance(v, (int, float))):
        raise InvalidConfig(f"field '{key}' must be a number, got {v!r}", key)
    if kind is int and int(v) != v:
        raise InvalidConfig(f"field '{key}' must be an integer, got {v!r}", key)
    return kind(v)


def _model(d):
    if not isinstance(d, dict):
        raise InvalidConfig("config must be a JSON object")
    if "model" in d:
        return model_from_spec(d["model"])
    if "Lambda" in d:
        return model_from_spec({k: v for k, v in d.items() if k in MODEL_KEYS})
    raise InvalidConfig("config is missing field 'model'", "model")


# ---- subcommands ---------------------------------------------------------

def cmd_rectify(cfg, args):
    model = _model(cfg)
    tol = args.tol if args.tol is not None else 1e-12
    eps = _get(cfg, "eps", 0.0)
    if "x" in cfg:
        xs = [float(v) for v in cfg["x"]]
    else:
        npts = _get(cfg, "points", 20, int)
        lo = _get(cfg, "x_min", 1e-12)
        hi = _get(cfg, "x_max", min(0.1, 0.5 * model.delta))
        if not 0 < lo < hi < 1:
            raise InvalidConfig(f"need 0 < x_min < x_max < 1, got {lo!r}, {hi!r}", "x_min")
        xs = list(np.geomspace(hi, lo, npts))
    chart = build_chart(model, tol, eps)

    def row(x):
        return {"x": x, "xi": chart(x), "residual": chart_residual(chart, x)}

    rows = pmap(row, xs)
    res = Result(["x", "xi", "residual"], rows,
                 {"model": model.to_spec(), "tol": tol, "eps": eps,
                  "tail_constant": chart.tail_constant, "normalization": chart.normalization})
    if args.check:
        worst = max(r["residual"] for r in rows)
        res.check("conjugacy residual below 10*tol", worst < 10 * tol, f"max {worst:.3g}")
        order = sorted(rows, key=lambda r: -r["x"])
        xi = [r["xi"] for r in order]
        res.check("chart increasing towards 0", all(a < b for a, b in zip(xi, xi[1:])))
        norm = [abs(chart(x) - math.log(-math.log(x))) * -math.log(x) for x in chart.probes]
        half = len(norm) // 2
        res.check("normalization rate O(1/(-ln x))",
                  max(norm[half:]) <= 2 * max(norm[:half]) + 1e-9,
                  f"scaled errors {', '.join(f'{v:.3g}' for v in norm)}")
        if model.a == 0 and eps == 0 and model.Lambda > 1:
            shift = model.lnC / (model.Lambda - 1)
            err = max(abs(r["xi"] - math.log(-math.log(r["x"]) - shift)) for r in rows)
            res.check("closed form for C x^Lambda", err < 1e-9, f"max error {err:.3g}")
    return res


def _P(cfg):
    if "P" not in cfg:
        raise InvalidConfig("config is missing field 'P'", "P")
    P = cfg["P"]
    if isinstance(P, list):
        return polynomial_P([float(c) for c in P])
    if isinstance(P, bool) or not isinstance(P, (int, float)):
        raise InvalidConfig("field 'P' must be a number or a list of coefficients", "P")
    return float(P)


def cmd_sparkle(cfg, args):
    model = _model(cfg)
    P = _P(cfg)
    tol = args.tol if args.tol is not None else 1e-12
    n_min = _get(cfg, "n_min", 1, int)
    n_max = args.depth if args.depth is not None else _get(cfg, "n_max", 40, int)
    if not 1 <= n_min <= n_max:
        raise InvalidConfig(f"need 1 <= n_min <= n_max, got {n_min}, {n_max}", "n_min")
    seq = spark_sequence(model, P, range(n_min, n_max + 1), tol)
    rows = [{"n": n, "xi_value": c.xi, "residual": r} for n, c, r in seq]
    res = Result(["n", "xi_value", "residual"], rows,
                 {"model": model.to_spec(), "tol": tol, "first_n": seq.first_n,
                  "skipped": list(seq.skipped)})
    if args.check:
        xi = np.array(seq.xis)
        lnlam = math.log(model.Lambda)
        res.check("roots decrease in n", bool(np.all(np.diff(xi) > 0)))
        if xi.size >= 4:
            h = xi.size // 2
            ns = np.array(seq.ns[h:], dtype=float)
            slope = float(np.polyfit(ns, xi[h:], 1)[0])
            res.check("slope equals -ln Lambda", abs(slope + lnlam) < 1e-4, f"slope {slope:.12g}")
        r = np.abs(np.array(seq.residuals))
        noisy = r > 1e-11
        above = r[: int(np.argmin(noisy)) if not noisy.all() else r.size]
        tail = above[len(above) // 4:] if above.size > 3 else above
        res.check("residuals decay", bool(np.all(np.diff(tail) < 0)) and r[-1] < max(r[0], 1e-3),
                  f"last {r[-1]:.3g}")
        ok = True
        for n in seq.ns:
            prob = SparkProblem(model, P, n)
            lo, hi = spark_bracket(prob, tol)
            width = hi - lo
            grid = np.linspace(lo - 2 * width, hi + 2 * width, 32)
            g = np.array([spark_objective(prob, t) for t in grid])
            flips = int(np.sum(np.diff(np.sign(g[np.isfinite(g)])) != 0))
            ok &= flips == 1
        res.check("single sign change around each root", ok)
    return res


def _table_and_report(cfg, args, depth):
    config = THConfig.from_dict(cfg)
    tol = args.tol if args.tol is not None else 1e-12
    table = th_sparks(config, depth, tol)
    if table.m0 is None:
        raise OrderingViolation(
            "exterior roots fail the interleaving order eps_{1,m} > ... > eps_{N,m} > "
            "eps_{1,m+1} on every stored tail")
    assign = assign_k(table, skip_uncertified=True)
    inv = invariant_vector(config)
    freq_tol = _get(cfg, "freq_tol", 0.01)
    return config, table, assign, inv, freq_tol


def cmd_th_run(cfg, args):
    depth = args.depth if args.depth is not None else 1000
    config, table, assign, inv, freq_tol = _table_and_report(cfg, args, depth)
    if args.table:
        write_text(args.table, table.to_csv())
    report = frequencies(assign, depth, inv, freq_tol)
    rows = list(report.records())
    extra = {"depth": depth, "mode": table.mode, "m0": table.m0, "skipped": assign.skipped,
             "phi": inv.phi, "Phi": list(inv.Phi), "q": inv.q,
             "projective": list(projective_invariant(config)),
             "frequencies": report.to_dict()}
    res = Result(["k", "psi", "predicted", "abs_error"], rows, extra)
    if args.check:
        res.check("interleaving order beyond m0", table.m0 is not None, f"m0 = {table.m0}")
        res.check("interior roots decrease", table.n0 == int(table.iota_n[0]))
        res.check("sum of Phi equals phi", abs(sum(inv.Phi) - inv.phi) < 1e-12)
        res.check("every Phi_k positive", all(v > 0 for v in inv.Phi))
        res.check("frequencies sum to 1", int(report.counts.sum()) == len(assign))
        merged = assign_k_merge(table, skip_uncertified=True)
        res.check("binary search agrees with merge scan",
                  np.array_equal(merged.k, assign.k) and np.array_equal(merged.m, assign.m))
        label = "frequency limits" if inv.q is None else f"rational sandwich (q = {inv.q})"
        res.check(label, report.passed, ", ".join(report.verdict))
        p = config.perturbation
        if table.mode == "synthetic" and not p.r_iota and not any(p.r_eps) and not assign.skipped:
            counts = [int(orbit_frequency(rp, len(assign)).counts[-1])
                      for rp in rotation_problems(config)]
            res.check("counts equal rotation-orbit counts", counts == [int(c) for c in report.counts])
    return res


def cmd_freq(cfg, args):
    depth = args.depth if args.depth is not None else 10**5
    config, table, assign, inv, freq_tol = _table_and_report(cfg, args, depth)
    top = int(assign.n.max())
    if "cuts" in cfg:
        cuts = sorted({int(c) for c in cfg["cuts"]})
    else:
        cuts = sorted({int(c) for c in np.geomspace(10, top, 13).round()} | {top})
    cuts = [c for c in cuts if int(assign.n[0]) <= c <= top]
    if not cuts:
        raise DomainError(f"no cut lies in the assigned range [{int(assign.n[0])}, {top}]")
    rows = []
    reports = {}
    for cut in cuts:
        rep = frequencies(assign, cut, inv, freq_tol)
        reports[cut] = rep
        for r in rep.records():
            rows.append(dict(r, cut=cut, liminf=float(rep.liminf[r["k"] - 1]),
                             limsup=float(rep.limsup[r["k"] - 1])))
    final = reports[cuts[-1]]
    res = Result(["cut", "k", "psi", "predicted", "abs_error", "liminf", "limsup"], rows,
                 {"phi": inv.phi, "Phi": list(inv.Phi), "q": inv.q, "final": final.to_dict()})
    if args.check:
        res.check("frequencies sum to 1 at every cut",
                  all(int(r.counts.sum()) == int((assign.n <= c).sum()) for c, r in reports.items()))
        label = "frequency limits" if inv.q is None else f"rational sandwich (q = {inv.q})"
        res.check(label, final.passed, ", ".join(final.verdict))
    return res


def _interval(cfg):
    if "J" not in cfg:
        raise InvalidConfig("config is missing field 'J'", "J")
    J = cfg["J"]
    if not isinstance(J, list) or len(J) != 2:
        raise InvalidConfig("field 'J' must be a pair [a, b]", "J")
    try:
        return Interval(float(J[0]), float(J[1]), cfg.get("kind", "closed"))
    except DomainError as e:
        raise InvalidConfig(str(e), "J")


def cmd_rotate(cfg, args):
    if "rho" not in cfg:
        raise InvalidConfig("config is missing field 'rho'", "rho")
    rho = _get(cfg, "rho")
    c = _get(cfg, "c", 0.0)
    J = _interval(cfg)
    n = args.depth if args.depth is not None else _get(cfg, "n", 10**5, int)
    drift = None
    if "drift" in cfg:
        dd = cfg["drift"]
        r, q = _get(dd, "r", 0.0), _get(dd, "q", 0.5)
        if not 0 < q < 1:
            raise InvalidConfig("drift q must lie in (0, 1)", "q")
        drift = lambda j: r * q ** j.astype(float)
    problem = RotationProblem(c, rho, J, drift)
    trace = orbit_frequency(problem, n)
    samples = _get(cfg, "samples", 60, int)
    ns = sorted({int(v) for v in np.geomspace(1, n, samples).round()} | {n})
    rows = [{"n": k, "count": int(trace.counts[k - 1]), "psi": trace.at(k)} for k in ns]
    pred = predicted_limit(rho, J)
    tol = args.tol if args.tol is not None else 0.01
    extra = {"rho": rho, "c": c, "J": [J.a, J.b], "kind": J.kind, "n": n,
             "prediction": {"kind": pred.kind, "value": pred.value, "q": pred.q, "p": pred.p},
             "liminf": trace.liminf_est, "limsup": trace.limsup_est}
    res = Result(["n", "count", "psi"], rows, extra)
    if args.check:
        res.check("psi within [0, 1]", bool(np.all((trace.psi >= 0) & (trace.psi <= 1))))
        res.check(f"limit prediction ({pred.kind})",
                  pred.holds(trace.liminf_est, trace.limsup_est, tol if pred.kind == "exact" else 0),
                  f"liminf {trace.liminf_est:.6g}, limsup {trace.limsup_est:.6g}")
        if pred.q is not None:
            try:
                rational_orbit_count(c, pred.p, pred.q, J)
                res.check("periodic-orbit count bound", True)
            except BoundViolation as e:
                res.check("periodic-orbit count bound", False, str(e))
        d = 1e-3
        wide = orbit_frequency(RotationProblem(c, rho, J.widened(d), drift), n).counts
        thin = orbit_frequency(RotationProblem(c, rho, J.shrunk(d), drift), n).counts
        res.check("sandwich under shrinking/enlarging J",
                  bool(np.all(thin <= trace.counts) and np.all(trace.counts <= wide)))
    return res


def cmd_certify(cfg, args):
    if not isinstance(cfg, dict):
        raise InvalidConfig("config must be a JSON object")
    if cfg.get("shipped"):
        models = dict(SHIPPED_MODELS)
    elif "models" in cfg:
        if not isinstance(cfg["models"], dict):
            raise InvalidConfig("field 'models' must map names to model records", "models")
        models = {name: model_from_spec(spec) for name, spec in cfg["models"].items()}
    else:
        models = {"model": _model(cfg)}
    g = cfg.get("grid", {})
    if not isinstance(g, dict):
        raise InvalidConfig("field 'grid' must be an object", "grid")
    known = {f for f in GridSpec.__dataclass_fields__}
    extra = set(g) - known
    if extra:
        raise InvalidConfig(f"unknown grid field(s): {sorted(extra)}", sorted(extra)[0])
    kw = dict(g)
    if args.seed is not None:
        kw["seed"] = args.seed
        kw.setdefault("jitter", 0.5)
    grid = GridSpec(**kw)
    names = sorted(models)
    certs = pmap(lambda name: certify_estimates(models[name], grid), names)
    rows = []
    for name, cert in zip(names, certs):
        for rec in cert.records():
            rows.append({"model": name, "property": rec["property"], "status": rec["status"],
                         "c": cert.c, "C": cert.C})
    extra = {"grid": {f: getattr(grid, f) for f in known},
             "certificates": {name: {"passed": cert.passed, "c": cert.c, "C": cert.C,
                                     "failures": cert.failures, "exemptions": cert.exemptions,
                                     "worst_ratios": cert.worst_ratios,
                                     "model": models[name].to_spec()}
                              for name, cert in zip(names, certs)}}
    res = Result(["model", "property", "status", "c", "C"], rows, extra)
    res.validation = [f"{name}: {msg}" for name, cert in zip(names, certs) for msg in cert.failures]
    if args.check:
        for name, cert in zip(names, certs):
            for prop, status in cert.checks.items():
                if status in ("pass", "fail"):
                    res.check(f"{name} {prop}", status == "pass")
            exempt = [prop for prop, status in cert.checks.items() if status == "exempt"]
            if exempt:
                res.check(f"{name} exemptions reported", all(
                    any(e.startswith(prop + ":") for e in cert.exemptions) for prop in exempt),
                    ", ".join(exempt))
    return res


# ---- plots ---------------------------------------------------------------

def render_plot(command, res, path):
    from . import plotting

    if command == "rectify":
        plotting.plot_rectify(res.rows, path)
    elif command == "sparkle":
        plotting.plot_sparkle(res.rows, path)
    elif command == "th-run":
        plotting.plot_frequencies(res.rows, path)
    elif command == "freq":
        plotting.plot_sweep(res.rows, path)
    elif command == "rotate":
        plotting.plot_rotation(res.rows, res.extra["J"][1] - res.extra["J"][0], path)
    elif command == "certify":
        plotting.plot_certificate(res.rows, path)


COMMANDS = {
    "rectify": (cmd_rectify, "rectifying-chart values and conjugacy residuals"),
    "sparkle": (cmd_sparkle, "roots of Delta_eps^n(eps) = P(eps) over a range of n"),
    "th-run": (cmd_th_run, "spark table, arc assignment and visit frequencies"),
    "freq": (cmd_freq, "visit frequencies over a sweep of cuts"),
    "rotate": (cmd_rotate, "visit frequencies of a rotation orbit"),
    "certify": (cmd_certify, "grid certification of the map estimates"),
}


def _positive_float(text):
    v = float(text)
    if not v > 0:
        raise argparse.ArgumentTypeError(f"must be positive, got {text}")
    return v


def _positive_int(text):
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError(f"must be at least 1, got {text}")
    return v


def build_parser():
    p = argparse.ArgumentParser(prog="polycycle-lab", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True)
    for name, (_, help_text) in COMMANDS.items():
        s = sub.add_parser(name, help=help_text)
        s.add_argument("--input", "-i", required=True, help="JSON config")
        s.add_argument("--output", "-o", default="-", help="output path (default stdout)")
        s.add_argument("--format", "-f", choices=("csv", "json"), default="csv")
        s.add_argument("--tol", type=_positive_float)
        s.add_argument("--depth", type=_positive_int)
        s.add_argument("--seed", type=int)
        s.add_argument("--check", action="store_true", help="report pass/fail per property")
        s.add_argument("--plot", metavar="PNG", help="also render a figure to this file")
        if name == "th-run":
            s.add_argument("--table", metavar="CSV", help="write the spark table here")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    fn = COMMANDS[args.command][0]
    try:
        cfg = load_config(args.input)
        res = fn(cfg, args)
        write_text(args.output, res.render(args.format))
        if args.plot:
            render_plot(args.command, res, args.plot)
    except (OrderingViolation, BoundViolation) as e:
        print(f"validation failure: {e}", file=sys.stderr)
        return 2
    except InvalidConfig as e:
        print(f"invalid config: {e}", file=sys.stderr)
        return 1
    except (DomainError, OutOfRange) as e:
        print(f"error: {e}", file=sys.stderr)
        return 1
    except OSError as e:
        print(f"I/O error: {e}", file=sys.stderr)
        return 1

    status = 0
    for msg in getattr(res, "validation", []):
        print(f"validation failure: {msg}", file=sys.stderr)
        status = 2
    if args.check:
        out = sys.stderr if args.output in (None, "-") else sys.stdout
        for name, ok, detail in res.checks:
            print(f"{'PASS' if ok else 'FAIL'}  {name}" + (f"  ({detail})" if detail else ""),
                  file=out)
            if not ok:
                status = 2
    return status


if __name__ == "__main__":
    sys.exit(main())
