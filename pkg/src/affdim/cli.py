"""Command-line front end: ``affdim <command> --config job.json [--out result.json]``.

Every command writes one versioned JSON document (stdout, or ``--out``). With
``--out``, bulk tables go to ``<stem>.<table>.csv`` next to it and, with
``--figures``, plots to ``<stem>.<figure>.png``.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import os
import sys
import time
import warnings
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from . import __version__
from .attractor import IFSInstance, chaos_game, local_dim_estimate, projected_dim_experiment, random_translations
from .config import load_config
from .criteria import (
    _check_planar,
    algebra_irreducible,
    antidiagonal_nonexact_criterion,
    ceil_level,
    d3_necessary_conditions,
    distinct_value_bounds,
    line_projection_dim,
    planar_measure_drop_criterion,
    planar_set_drop_criterion,
)
from .ergodic import entropy, lyapunov_dim, lyapunov_exact, lyapunov_mc, rng_for, s_extremes
from .errors import InvalidInputError, ResourceLimitError
from .linalg import Subspace
from .presets import ANTIDIAGONAL_S_LOWER, ANTIDIAGONAL_S_UPPER, antidiagonal_example
from .pressure import PressureConfig, affinity_dim, pressure_curve, proj_affinity_dim

SCHEMA = "affdim.result/1"


def _clean(x):
    """JSON-safe copy: numpy scalars unwrapped, non-finite floats as strings."""
    if isinstance(x, dict):
        return {str(k): _clean(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_clean(v) for v in x]
    if isinstance(x, np.ndarray):
        return _clean(x.tolist())
    if isinstance(x, Subspace):
        return {"dim": x.dim, "basis": _clean(x.basis.T)}
    if isinstance(x, (np.bool_,)):
        return bool(x)
    if isinstance(x, (np.integer,)):
        return int(x)
    if isinstance(x, (float, np.floating)):
        x = float(x)
        return x if math.isfinite(x) else str(x)
    return x


class Report:
    """Collects the result document, side tables and figures of one run."""

    def __init__(self, command, args, inputs):
        self.doc = {
            "schema": SCHEMA,
            "version": __version__,
            "command": command,
            "inputs": inputs,
            "parameters": {},
            "result": {},
            "warnings": [],
        }
        self.tables = {}
        self.figures = {}
        self.args = args

    def table(self, name, header, rows):
        self.tables[name] = (header, rows)

    def figure(self, name, fn):
        self.figures[name] = fn

    def finish(self):
        a = self.args
        if not a.no_timestamp:
            self.doc["timestamp"] = datetime.now(timezone.utc).isoformat()
        if a.out:
            out = Path(a.out)
            stem = out.with_suffix("")
            files = {"tables": {}, "figures": {}}
            for name, (header, rows) in self.tables.items():
                path = Path(f"{stem}.{name}.csv")
                with open(path, "w", newline="") as fh:
                    w = csv.writer(fh)
                    w.writerow(header)
                    w.writerows([[_csv_cell(v) for v in r] for r in rows])
                files["tables"][name] = path.name
            if a.figures:
                for name, fn in self.figures.items():
                    path = Path(f"{stem}.{name}.png")
                    fn(path)
                    files["figures"][name] = path.name
            self.doc["side_files"] = files
        text = json.dumps(_clean(self.doc), indent=2, sort_keys=True)
        if a.out:
            Path(a.out).write_text(text + "\n")
        else:
            sys.stdout.write(text + "\n")


def _csv_cell(v):
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return v


def _pressure_cfg(job, args):
    est = job.get
    n = args.max_n if args.max_n is not None else est("n")
    return PressureConfig(
        n=n,
        schedule=None if args.max_n is not None else est("schedule"),
        depth=args.depth if args.depth is not None else est("depth"),
        tol=args.tolerance if args.tolerance is not None else est("tolerance", 1e-4),
    )


def _seed(job, args):
    return args.seed if args.seed is not None else int(job.get("seed", 0))


def _need_subspace(job):
    if job.subspace is None:
        raise InvalidInputError("subspace: required by this command")
    return job.subspace


def cmd_affinity_dim(job, args, rep):
    cfg = _pressure_cfg(job, args)
    est = affinity_dim(job.tuple, cfg)
    rep.doc["parameters"] = {"n": est.n, "tol": cfg.tol}
    rep.doc["result"] = est.as_dict()
    s_hi = est.trace["search_interval"][1]
    rows = pressure_curve(job.tuple, None, np.linspace(0, s_hi, 41), est.n, depth=0)
    rep.table("pressure", ["s", "phi_rate", "psi_rate"], rows)
    rep.figure("pressure", lambda p: _plot().pressure_curve_figure(rows, p, est.value))


def cmd_proj_affinity_dim(job, args, rep):
    W = _need_subspace(job)
    cfg = _pressure_cfg(job, args)
    est = proj_affinity_dim(job.tuple, W, cfg)
    rep.doc["parameters"] = {"n": est.n, "tol": cfg.tol, "k": W.dim}
    res = est.as_dict()
    if W.dim == 1:
        res["line_projection"] = line_projection_dim(job.tuple, W, cfg).as_dict()
    rep.doc["result"] = res
    rows = pressure_curve(job.tuple, W, np.linspace(0, W.dim, 41), est.n, depth=0)
    rep.table("pressure", ["s", "phi_rate", "psi_rate"], rows)
    rep.figure("pressure", lambda p: _plot().pressure_curve_figure(rows, p, est.value))


def cmd_pressure_curve(job, args, rep):
    T = job.tuple
    W = job.subspace
    cfg = _pressure_cfg(job, args)
    n = cfg.length(T.m)
    top = W.dim if W is not None and not W.is_full() else math.log(T.m) / math.log(1 / T.alpha_plus) if T.m > 1 else T.d
    s_values = job.get("s_values") or np.linspace(0, top, 21).tolist()
    depth = cfg.psi_depth(T.d)
    rows = pressure_curve(T, W, s_values, n, depth=depth)
    rep.doc["parameters"] = {"n": n, "depth": depth}
    rep.doc["result"] = {"rows": [list(r) for r in rows], "columns": ["s", "phi_rate", "psi_rate"]}
    rep.table("pressure", ["s", "phi_rate", "psi_rate"], rows)
    rep.figure("pressure", lambda p: _plot().pressure_curve_figure(rows, p))


def _lyapunov(job, args):
    trials = args.trials if args.trials is not None else int(job.get("trials", 64))
    n = int(job.get("lyapunov_length", 10000))
    mc = lyapunov_mc(job.tuple, job.measure, n=n, trials=trials, seed=_seed(job, args), workers=args.threads)
    exact = lyapunov_exact(job.tuple, job.measure)
    return exact, mc, {"n": n, "trials": trials, "stride": 10}


def cmd_lyapunov(job, args, rep):
    exact, mc, params = _lyapunov(job, args)
    best = exact if exact is not None else mc
    rep.doc["parameters"] = dict(params, seed=_seed(job, args))
    rep.doc["result"] = {
        "entropy": entropy(job.measure),
        "mc": mc.as_dict(),
        "exact": exact.as_dict() if exact is not None else None,
        "lyapunov_dim": lyapunov_dim(job.measure, job.tuple, best),
        "lyapunov_dim_source": best.mode,
        "ergodic": job.measure.ergodic,
    }
    if not job.measure.ergodic:
        rep.doc["warnings"].append("measure is not ergodic; exponents are averages over components")


def _s_profile(job, args, T, mu, W):
    samples = int(job.get("samples", 200))
    N = int(job.get("path_length", 2000))
    prof = s_extremes(mu, T, W, samples=samples, N=N, seed=_seed(job, args), workers=args.threads)
    return prof, {"samples": samples, "path_length": N}


def _s_tables(rep, prof, marks=()):
    rep.table("samples", ["sample", "estimate", "oscillation"], [(r["sample"], r["estimate"], r["oscillation"]) for r in prof.records])
    h = prof.histogram
    rep.table("histogram", ["left", "right", "count"], list(zip(h["edges"][:-1], h["edges"][1:], h["counts"])))
    rep.figure("histogram", lambda p: _plot().histogram_figure(h["edges"], h["counts"], p, "S estimate", marks))


def cmd_s_spectrum(job, args, rep):
    W = _need_subspace(job)
    prof, params = _s_profile(job, args, job.tuple, job.measure, W)
    rep.doc["parameters"] = dict(params, seed=_seed(job, args))
    rep.doc["result"] = prof.as_dict(with_records=False)
    _s_tables(rep, prof)


def _is_antidiagonal(T):
    A = T.matrices
    return T.d == 2 and np.all(A[:, 0, 0] == 0) and np.all(A[:, 1, 1] == 0)


def cmd_criteria(job, args, rep):
    T, mu, W = job.tuple, job.measure, job.subspace
    out = {}
    out["irreducible"] = {}
    for q in range(1, T.d):
        try:
            out["irreducible"][str(q)] = algebra_irreducible(T, q)
        except ResourceLimitError as exc:
            out["irreducible"][str(q)] = None
            rep.doc["warnings"].append(str(exc))
    if _is_antidiagonal(T):
        out["antidiagonal_nonexact"] = antidiagonal_nonexact_criterion(T).as_dict()
    if W is not None:
        if T.d == 2 and W.dim == 1:
            _check_planar(T, W)
            out["planar_set_drop"] = planar_set_drop_criterion(T, W).as_dict()
            out["planar_measure_drop"] = planar_measure_drop_criterion(T, W, mu).as_dict()
        if T.d == 3 and W.dim in (1, 2):
            out["d3_necessary"] = d3_necessary_conditions(T, W).as_dict()
        if W.dim < T.d:
            cfg = _pressure_cfg(job, args)
            aff = affinity_dim(T, cfg)
            exact = lyapunov_exact(T, mu)
            spectrum = exact if exact is not None else lyapunov_mc(T, mu, n=5000, trials=16, seed=_seed(job, args), workers=args.threads)
            ldim = lyapunov_dim(mu, T, spectrum)
            ell, ellp = ceil_level(aff.value, W.dim), ceil_level(ldim, W.dim)
            sb, mb = distinct_value_bounds(T.d, W.dim, ell, ellp)
            out["distinct_value_bounds"] = {
                "affinity_dim": aff.value,
                "lyapunov_dim": ldim,
                "ell": ell,
                "ell_prime": ellp,
                "set_bound": sb,
                "measure_bound": mb,
            }
    rep.doc["result"] = out


def cmd_irreducible(job, args, rep):
    q = args.q
    rep.doc["parameters"] = {"q": q}
    rep.doc["result"] = {"irreducible": algebra_irreducible(job.tuple, q)}


def cmd_box_experiment(job, args, rep):
    T = job.tuple
    W = job.subspace if job.subspace is not None else Subspace.full(T.d)
    trials = args.trials if args.trials is not None else int(job.get("trials", 10))
    N = int(job.get("points", 10**6))
    radius = float(job.get("radius", 1.0))
    seed = _seed(job, args)
    res = projected_dim_experiment(
        T, W, job.measure, trials=trials, N=N, seed=seed, radius=radius, cfg=_pressure_cfg(job, args), workers=args.threads
    )
    rep.doc["parameters"] = {"trials": trials, "points": N, "radius": radius, "seed": seed}
    if not res["hypotheses_met"]:
        rep.doc["warnings"].append(res["note"])
    rep.doc["result"] = res
    rep.table("trials", ["trial", "box_dim", "r_squared"], [(r["trial"], r["box_dim"], r["r_squared"]) for r in res["rows"]])
    if res["rows"]:
        first = res["rows"][0]
        rep.figure("boxcount", lambda p: _plot().box_count_figure(first["scales"], first["counts"], p, first["box_dim"]))


def cmd_local_dim(job, args, rep):
    T = job.tuple
    seed = _seed(job, args)
    a = job.translations
    if a is None:
        a = random_translations(T.m, T.d, float(job.get("radius", 1.0)), rng_for(seed, 0))
    N = int(job.get("points", 10**6))
    cloud = chaos_game(IFSInstance(T, a), job.measure, N, seed=seed + 1, workers=args.threads)
    if job.subspace is not None:
        cloud = cloud.project(job.subspace)
    centers = int(job.get("centers", 200))
    res = local_dim_estimate(cloud, n_centers=centers, seed=seed)
    rep.doc["parameters"] = {"points": N, "centers": centers, "seed": seed, "burn_in": cloud.meta["burn_in"]}
    rep.doc["result"] = {
        "translations": np.asarray(a).tolist(),
        "radii": res.radii.tolist(),
        "skipped": res.skipped,
        "histogram": res.histogram,
        "median_slope": float(np.median(res.slopes)) if res.slopes.size else None,
    }
    rep.table("slopes", ["center", "slope"], list(enumerate(res.slopes.tolist())))
    h = res.histogram
    rep.table("histogram", ["left", "right", "count"], list(zip(h["edges"][:-1], h["edges"][1:], h["counts"])))
    pts = cloud.points[:20000]
    rep.table("cloud", [f"x{i + 1}" for i in range(pts.shape[1])], pts.tolist())
    rep.figure("histogram", lambda p: _plot().histogram_figure(h["edges"], h["counts"], p, "local slope"))
    rep.figure("cloud", lambda p: _plot().cloud_figure(cloud.points, p))


def cmd_example(job, args, rep):
    t0 = time.perf_counter()
    T, mu, W = antidiagonal_example()
    seed = args.seed if args.seed is not None else 0
    samples, N = 200, 2000
    prof = s_extremes(mu, T, W, samples=samples, N=N, seed=seed, workers=args.threads)
    exact = lyapunov_exact(T, mu)
    rep.doc["inputs"] = {"preset": "antidiagonal-markov", "matrices": T.matrices.tolist(), "measure": mu.as_dict(), "subspace": W}
    rep.doc["parameters"] = {"samples": samples, "path_length": N, "seed": seed}
    rep.doc["result"] = {
        "entropy": entropy(mu),
        "exponents": exact.as_dict(),
        "lyapunov_dim": lyapunov_dim(mu, T, exact),
        "s_bar": prof.s_upper,
        "s_lower": prof.s_lower,
        "s_bar_closed_form": ANTIDIAGONAL_S_UPPER,
        "s_lower_closed_form": ANTIDIAGONAL_S_LOWER,
        "profile": prof.as_dict(with_records=False),
        "antidiagonal_nonexact": antidiagonal_nonexact_criterion(T).as_dict(),
        "planar_measure_drop": planar_measure_drop_criterion(T, W, mu).as_dict(),
    }
    if not args.no_timestamp:
        rep.doc["runtime_seconds"] = time.perf_counter() - t0
    _s_tables(rep, prof, marks=(ANTIDIAGONAL_S_LOWER, ANTIDIAGONAL_S_UPPER))


def _plot():
    from . import plotting  # noqa: PLC0415  (matplotlib only when figures are requested)

    return plotting


COMMANDS = {
    "affinity-dim": (cmd_affinity_dim, "affinity dimension of the tuple"),
    "proj-affinity-dim": (cmd_proj_affinity_dim, "projected affinity dimension for the configured subspace"),
    "pressure-curve": (cmd_pressure_curve, "phi- and psi-sum rates on a grid of s"),
    "lyapunov": (cmd_lyapunov, "Lyapunov exponents, entropy and Lyapunov dimension"),
    "s-spectrum": (cmd_s_spectrum, "projected local exponents over sampled paths"),
    "criteria": (cmd_criteria, "all applicable structural tests"),
    "irreducible": (cmd_irreducible, "irreducibility of the q-th exterior power"),
    "box-experiment": (cmd_box_experiment, "box dimension of projected attractors, random translations"),
    "local-dim": (cmd_local_dim, "local-dimension slopes of a projected point cloud"),
    "example-8-1": (cmd_example, "built-in antidiagonal Markov example (no config needed)"),
}


def build_parser():
    parser = argparse.ArgumentParser(prog="affdim", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)
    for name, (_, help_text) in COMMANDS.items():
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--config", required=name != "example-8-1", help="JSON job file")
        p.add_argument("--out", help="result JSON path; side files share its stem")
        p.add_argument("--seed", type=int)
        p.add_argument("--threads", type=int, default=os.cpu_count() or 1)
        p.add_argument("--tolerance", type=float, help="bisection tolerance")
        p.add_argument("--max-n", type=int, help="word length for pressure sums")
        p.add_argument("--depth", type=int, help="orbit depth of the psi envelope")
        p.add_argument("--trials", type=int)
        p.add_argument("--no-timestamp", action="store_true", help="omit wall-clock fields")
        p.add_argument("--figures", action="store_true", help="also render PNG figures (needs --out)")
        if name == "irreducible":
            p.add_argument("--q", type=int, required=True)
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    handler = COMMANDS[args.command][0]
    try:
        job = load_config(args.config) if args.config else None
        inputs = job.raw if job is not None else {}
        rep = Report(args.command, args, inputs)
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always")
            handler(job, args, rep)
        rep.doc["warnings"].extend(sorted({str(w.message) for w in caught}))
        rep.finish()
    except ResourceLimitError as exc:
        print(f"affdim: resource limit: {exc}", file=sys.stderr)
        return 2
    except InvalidInputError as exc:
        print(f"affdim: invalid config: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
