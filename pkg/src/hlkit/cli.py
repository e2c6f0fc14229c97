"""Experiment runner.

    hlkit <experiment> [--config FILE] [--out DIR] [--seed N] [--threads N]
    hlkit list
    hlkit sample <experiment>

Each run writes one or more comma-separated tables plus ``manifest.json``
echoing the fully resolved configuration.  Exit codes: 0 success, 2 usage,
3 validation, 4 algorithm failure.
"""
from __future__ import annotations

import argparse
import csv
import datetime as _dt
import json
import os
import sys
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import numpy as np

from . import __version__
from .covering import refine_cover, wiener_select
from .descriptors import (ConfigError, boundary_function, domain_from_description,
                          family_from_description, function_from_description,
                          grid_from_description, random_interval_union,
                          set_from_description, space_from_description)
from .differentiation import differentiation_experiment, geometric_radii
from .errors import AlgorithmFailure, HLKitError
from .maximal import maximal_field, restricted_weak_type_test, weak_type_pipeline
from .poisson import (APPROACH_COLUMNS, asymptotic_ratio, kernel_eval, kernel_normalization,
                      nontangential_experiment, poisson_extend, survey_ratios)
from .space import Ball, ball_members, verify_metric_axioms

EXIT_OK, EXIT_USAGE, EXIT_VALIDATION, EXIT_FAILURE = 0, 2, 3, 4
FORMATS = {"csv": ",", "tsv": "\t"}


@dataclass
class Table:
    name: str
    columns: list
    rows: list


@dataclass
class ExperimentConfig:
    experiment: str
    space: dict | str | None = None
    domain: dict | None = None
    params: dict = field(default_factory=dict)
    seed: int | None = None
    out: str = "results"
    format: str = "csv"
    threads: int | None = None
    base: Path | None = None

    @classmethod
    def from_dict(cls, raw: dict, experiment: str | None = None, base=None) -> "ExperimentConfig":
        if not isinstance(raw, dict):
            raise ConfigError("config", "expected a JSON object")
        name = experiment or raw.get("experiment")
        if raw.get("experiment") not in (None, name):
            raise ConfigError("experiment", f"config is for {raw['experiment']!r}, not {name!r}")
        output = raw.get("output", {}) or {}
        cfg = cls(experiment=name, space=raw.get("space"), domain=raw.get("domain"),
                  params=dict(raw.get("params", {}) or {}), seed=raw.get("seed"),
                  out=output.get("path", "results"), format=output.get("format", "csv"),
                  threads=raw.get("threads"), base=base)
        cfg.validate()
        return cfg

    def validate(self):
        if self.experiment not in EXPERIMENTS:
            raise ConfigError("experiment", f"unknown experiment {self.experiment!r}")
        if self.format not in FORMATS:
            raise ConfigError("output.format", f"expected one of {sorted(FORMATS)}")
        if self.seed is not None and (not isinstance(self.seed, int) or isinstance(self.seed, bool)
                                      or self.seed < 0):
            raise ConfigError("seed", "must be a nonnegative integer")
        if self.threads is not None and (not isinstance(self.threads, int) or self.threads < 1):
            raise ConfigError("threads", "must be a positive integer")
        needs = EXPERIMENTS[self.experiment].needs
        if needs == "space" and self.space is None:
            raise ConfigError("space", "required for this experiment")
        if needs == "domain" and self.domain is None:
            raise ConfigError("domain", "required for this experiment")
        if EXPERIMENTS[self.experiment].randomised and self.seed is None:
            raise ConfigError("seed", "required for randomised experiments")

    def resolved(self) -> dict:
        return {"experiment": self.experiment, "space": self.space, "domain": self.domain,
                "params": self.params, "seed": self.seed, "threads": self.threads,
                "output": {"path": str(self.out), "format": self.format}}


# -- parameter helpers ----------------------------------------------------
def _param(cfg, name, default=None, required=False):
    if name not in cfg.params:
        if required:
            raise ConfigError(f"params.{name}", "required")
        return default
    return cfg.params[name]


def _floats(cfg, name, default=None, required=False, check=None, message=""):
    val = _param(cfg, name, default, required)
    if val is None:
        return None
    try:
        arr = np.atleast_1d(np.asarray(val, dtype=float))
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"params.{name}", "expected numbers") from exc
    if arr.size == 0 or not np.all(np.isfinite(arr)):
        raise ConfigError(f"params.{name}", "expected finite numbers")
    if check is not None and not check(arr):
        raise ConfigError(f"params.{name}", message)
    return arr


def _int(cfg, name, default, minimum=1):
    val = _param(cfg, name, default)
    if not isinstance(val, int) or isinstance(val, bool) or val < minimum:
        raise ConfigError(f"params.{name}", f"expected an integer >= {minimum}")
    return val


def _space(cfg):
    return space_from_description(cfg.space, cfg.seed, cfg.base)


def _coord_columns(space):
    if space.coords is None:
        return ["label"], lambda i: [space.labels[i] if space.labels else i]
    return [f"x{k}" for k in range(space.dim)], lambda i: space.coords[i].tolist()


# -- experiments ----------------------------------------------------------
def run_metric_check(cfg):
    space = _space(cfg)
    rep = verify_metric_axioms(space, _int(cfg, "samples", 1000), cfg.seed)
    trip = rep.triple or (None, None, None)
    return [Table("metric-check", ["passed", "checked", "violation", "a", "b", "c", "seed"],
                  [[rep.passed, rep.checked, rep.violation, *trip, cfg.seed]])], {}


def run_cover(cfg):
    space = _space(cfg)
    family = family_from_description(space, _param(cfg, "family", required=True), cfg.seed, cfg.base,
                                     "params.family")
    dilation = float(_floats(cfg, "dilation", 3.0, check=lambda a: a[0] >= 1,
                             message="must be at least 1")[0])
    tdesc = _param(cfg, "target")
    if tdesc is None:
        target = ball_members(space, family[0])
        for b in family[1:]:
            target = target | ball_members(space, b)
    else:
        target = set_from_description(space, tdesc, cfg.seed, "params.target")
    sel = wiener_select(space, family, target, dilation)
    rows = []
    for rank, i in enumerate(sel.selected):
        b = family[i]
        rows.append([rank, i, b.center, b.radius, float(space.weights[ball_members(space, b).mask].sum())])
    doc = sel.to_dict(family)
    doc["covers"] = sel.covers
    return [Table("cover", ["rank", "family_index", "center", "radius", "mass"], rows)], {"cover": doc}


def run_refine(cfg):
    space = _space(cfg)
    K = set_from_description(space, _param(cfg, "set", required=True), cfg.seed, "params.set")
    fdesc = _param(cfg, "family")
    if fdesc is None:
        family = [Ball(int(K.indices[0]) if len(K) else 0, 2 * space.diameter() + 1)]
    else:
        family = family_from_description(space, fdesc, cfg.seed, cfg.base, "params.family")
    threshold = float(_floats(cfg, "threshold", 0.5, check=lambda a: 0 < a[0] < 1,
                              message="must lie in (0, 1)")[0])
    ref = refine_cover(space, K, family, threshold)
    rows = []
    for b, dens, par in zip(ref.balls, ref.density_ratios, ref.parents):
        mass = float(space.weights[ball_members(space, b).mask].sum())
        rows.append([b.center, b.radius, mass, dens, par])
    doc = ref.to_dict()
    doc["certificates"] = ref.certificates()
    return [Table("refine", ["center", "radius", "mass", "density", "parent"], rows)], {"refine": doc}


def run_maximal(cfg):
    space = _space(cfg)
    f = function_from_description(space, _param(cfg, "function", required=True), cfg.seed, cfg.base,
                                  "params.function")
    Mf = maximal_field(space, f, threads=cfg.threads).values
    cols, coord = _coord_columns(space)
    rows = [[i, *coord(i), float(f[i]), float(Mf[i])] for i in range(space.n)]
    return [Table("maximal", ["index", *cols, "f", "Mf"], rows)], {}


def _lambdas(cfg, name="lambdas", default=None):
    return _floats(cfg, name, default, required=default is None,
                   check=lambda a: bool(np.all((a > 0) & (a < 1))), message="each value must lie in (0, 1)")


def run_weaktype(cfg):
    space = _space(cfg)
    E = set_from_description(space, _param(cfg, "set", required=True), cfg.seed, "params.set")
    lam = _lambdas(cfg)
    slack = _param(cfg, "slack")
    rep = restricted_weak_type_test(space, E, lam, slack, threads=cfg.threads)
    rows = [[l, m, 4 * rep.reference_norm / l * (1 + rep.slack), c, rep.slack, ok]
            for l, m, c, ok in rep.rows()]
    return [Table("weaktype", ["lambda", "superlevel_measure", "bound", "empirical_constant",
                               "slack", "passed"], rows)], {}


def run_chain(cfg):
    space = _space(cfg)
    instances = _int(cfg, "instances", 1)
    sdesc = _param(cfg, "set", required=True)
    lam = _lambdas(cfg)
    rng = np.random.default_rng(cfg.seed)
    rows = []
    for k in range(instances):
        if sdesc.get("kind") == "random-intervals":
            E = random_interval_union(space, rng, int(sdesc.get("count", 3)),
                                      float(sdesc.get("max_fraction", 0.2)))
        else:
            E = set_from_description(space, sdesc, cfg.seed, "params.set")
        for l in lam:
            try:
                tr = weak_type_pipeline(space, E, float(l))
            except AlgorithmFailure as exc:
                raise AlgorithmFailure(f"instance {k}, lambda {l}: {exc}", exc.condition) from exc
            rows.append([k, float(l), tr.E_mass, tr.S_mass, tr.K_mass, tr.ball_mass, tr.ball_E_mass,
                         len(tr.balls), tr.exhaustion_rounds, *[ok for *_, ok in tr.links]])
    cols = ["instance", "lambda", "E", "S", "K", "sum_B", "sum_B_and_E", "balls", "exhaustion_rounds",
            "link_S_2K", "link_2K_4B", "link_4B_BE", "link_BE_E"]
    return [Table("chain", cols, rows)], {}


def run_differentiate(cfg):
    space = _space(cfg)
    f = function_from_description(space, _param(cfg, "function", required=True), cfg.seed, cfg.base,
                                  "params.function")
    radii = _floats(cfg, "radii", check=lambda a: bool(np.all(a > 0) and np.all(np.diff(a) < 0)),
                    message="must be positive and strictly decreasing")
    if radii is None:
        ratio = float(_floats(cfg, "ratio", 0.5, check=lambda a: 0 < a[0] < 1,
                              message="must lie in (0, 1)")[0])
        radii = geometric_radii(space, ratio)
    eps = _floats(cfg, "epsilons", [0.1], check=lambda a: bool(np.all(a > 0)), message="must be positive")
    rep = differentiation_experiment(space, f, radii, eps)
    tables = [Table("differentiate", ["r", "epsilon", "bad_set_measure"], rep.rows())]
    track = _param(cfg, "trajectories")
    if track:
        idx = [int(i) for i in track]
        if any(not 0 <= i < space.n for i in idx):
            raise ConfigError("params.trajectories", "point index out of range")
        rows = [[i, float(r), float(rep.trajectories[k, i]), float(f[i])]
                for i in idx for k, r in enumerate(rep.radii)]
        tables.append(Table("trajectories", ["index", "r", "average", "f"], rows))
    return tables, {}


def _points(cfg, name):
    pts = _param(cfg, name, required=True)
    try:
        return np.atleast_2d(np.asarray(pts, dtype=float))
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"params.{name}", "expected a list of coordinate vectors") from exc


def _domain(cfg):
    return domain_from_description(cfg.domain)


def _grid(cfg, domain):
    return grid_from_description(domain, _param(cfg, "grid", {}))


def run_kernel_eval(cfg):
    dom = _domain(cfg)
    xs, ts = _points(cfg, "points"), _points(cfg, "boundary")
    rows = []
    for x in xs:
        for t in ts:
            rows.append([*x.tolist(), *dom.boundary_point(t).tolist(), kernel_eval(dom, x, t),
                         asymptotic_ratio(dom, x, t)])
    d = dom.ambient_dim
    cols = [f"x{k}" for k in range(d)] + [f"t{k}" for k in range(d)] + ["P", "ratio"]
    return [Table("kernel-eval", cols, rows)], {}


def run_kernel_normalize(cfg):
    dom = _domain(cfg)
    grid = _grid(cfg, dom)
    rows = []
    for x in _points(cfg, "points"):
        s = kernel_normalization(dom, x, grid)
        rows.append([*x.tolist(), float(dom.delta(x)), s, s - 1.0])
    cols = [f"x{k}" for k in range(dom.ambient_dim)] + ["delta", "normalization", "error"]
    return [Table("kernel-normalize", cols, rows)], {"grid": grid.descriptor}


def run_ratio_survey(cfg):
    dom = _domain(cfg)
    samples = _int(cfg, "samples", 10000)
    rng_range = _floats(cfg, "delta_range", [1e-4, 0.5],
                        check=lambda a: a.size == 2 and 0 < a[0] <= a[1], message="need 0 < low <= high")
    res = survey_ratios(dom, samples, np.random.default_rng(cfg.seed), tuple(rng_range))
    cols = list(res)
    return [Table("ratio-survey", cols, [[res[c] for c in cols]])], {}


def _harmonic_oracle(desc):
    kind = (desc or {}).get("kind")
    if kind == "constant":
        c = float(desc.get("value", 1.0))
        return lambda x: c
    if kind == "cos":
        return lambda x: x[0]
    if kind == "sin":
        return lambda x: x[1]
    if kind == "re-z2":
        return lambda x: x[0] ** 2 - x[1] ** 2
    if kind == "coordinate":
        axis = int(desc.get("axis", 0))
        return lambda x: x[axis]
    return None


def run_extend(cfg):
    dom = _domain(cfg)
    grid = _grid(cfg, dom)
    bdesc = _param(cfg, "boundary", required=True)
    f = boundary_function(dom, grid, bdesc, cfg.base, "params.boundary")
    exact = _harmonic_oracle(bdesc)
    rows = []
    for x in _points(cfg, "points"):
        u = poisson_extend(dom, grid, f, x)
        ex = None if exact is None else float(exact(x))
        rows.append([*x.tolist(), u, ex, None if ex is None else abs(u - ex)])
    cols = [f"x{k}" for k in range(dom.ambient_dim)] + ["u", "exact", "abs_error"]
    return [Table("extend", cols, rows)], {"grid": grid.descriptor}


def run_converge(cfg):
    dom = _domain(cfg)
    grid = _grid(cfg, dom)
    f = boundary_function(dom, grid, _param(cfg, "boundary", required=True), cfg.base, "params.boundary")
    apex = _param(cfg, "apex", 0)
    if isinstance(apex, dict) and "angle" in apex:
        th = grid.angles()
        a = float(apex["angle"])
        apex = int(np.argmin(np.abs(np.angle(np.exp(1j * (th - a))))))
    elif isinstance(apex, list):
        apex = int(np.argmin(np.linalg.norm(grid.nodes - dom.boundary_point(apex), axis=1)))
    if not isinstance(apex, int) or not 0 <= apex < grid.size:
        raise ConfigError("params.apex", "expected a node index, coordinates or {'angle': ...}")
    alpha = float(_floats(cfg, "alpha", 2.0, check=lambda a: a[0] > 1, message="must exceed 1")[0])
    scales = _floats(cfg, "scales", check=lambda a: bool(np.all(a > 0) and np.all(np.diff(a) < 0)),
                     message="must be positive and strictly decreasing")
    if scales is None:
        lo, hi = (int(v) for v in _param(cfg, "levels", [1, 8]))
        scales = 2.0 ** -np.arange(lo, hi + 1)
    target = _param(cfg, "target")
    rows = nontangential_experiment(dom, grid, f, apex, alpha, scales, target)
    return ([Table("converge", list(APPROACH_COLUMNS), [r.astuple() for r in rows])],
            {"grid": grid.descriptor, "apex": grid.nodes[apex].tolist(), "f_apex": float(f[apex])})


@dataclass(frozen=True)
class Experiment:
    description: str
    runner: object
    needs: str
    randomised: bool = False


EXPERIMENTS = {
    "metric-check": Experiment("check symmetry and the triangle inequality on random triples",
                               run_metric_check, "space", True),
    "cover": Experiment("greedy Wiener selection: disjoint balls whose 3-dilates cover the target",
                        run_cover, "space"),
    "refine": Experiment("density refinement of a ball cover with certified density and mass bounds",
                         run_refine, "space"),
    "maximal": Experiment("exact centred Hardy-Littlewood maximal function at every point",
                          run_maximal, "space"),
    "weaktype": Experiment("restricted weak-type test of |{M chi_E > lambda}| against 4|E|/lambda",
                           run_weaktype, "space"),
    "chain": Experiment("restricted weak-type argument run as an algorithm, every link verified",
                        run_chain, "space", True),
    "differentiate": Experiment("ball averages along a shrinking radius schedule and bad-set measures",
                                run_differentiate, "space"),
    "kernel-eval": Experiment("closed-form Poisson kernel and comparability ratio at given pairs",
                              run_kernel_eval, "domain"),
    "kernel-normalize": Experiment("quadrature integral of the Poisson kernel (should be 1)",
                                   run_kernel_normalize, "domain"),
    "ratio-survey": Experiment("random survey of P(x,t)|x-t|^d/delta(x) against analytic bounds",
                               run_ratio_survey, "domain", True),
    "extend": Experiment("Poisson integral of boundary data at interior points",
                         run_extend, "domain"),
    "converge": Experiment("nontangential approach errors |u(x) - f(y)| per scale",
                           run_converge, "domain"),
}


def list_experiments() -> dict:
    return {name: e.description for name, e in EXPERIMENTS.items()}


def sample_config(name: str) -> dict:
    if name not in EXPERIMENTS:
        raise ConfigError("experiment", f"unknown experiment {name!r}")
    text = resources.files("hlkit").joinpath("samples", f"{name}.json").read_text()
    return json.loads(text)


def _fmt(v):
    if v is None:
        return ""
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    if isinstance(v, np.integer):
        return str(int(v))
    return str(v)


def _jsonable(obj):
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.floating):
        return float(obj)
    if isinstance(obj, Path):
        return str(obj)
    return obj


def run(cfg: ExperimentConfig) -> list[Path]:
    """Execute one experiment and write its tables, documents and manifest."""
    cfg.validate()
    tables, docs = EXPERIMENTS[cfg.experiment].runner(cfg)
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    written = []
    ext = cfg.format
    for t in tables:
        path = out / f"{t.name}.{ext}"
        with path.open("w", newline="") as fh:
            w = csv.writer(fh, delimiter=FORMATS[ext], lineterminator="\n")
            w.writerow(t.columns)
            for row in t.rows:
                w.writerow([_fmt(v) for v in row])
        written.append(path)
    for name, doc in docs.items():
        path = out / f"{name}.json"
        path.write_text(json.dumps(_jsonable(doc), indent=2, sort_keys=True) + "\n")
        written.append(path)
    manifest = {
        "experiment": cfg.experiment,
        "config": _jsonable(cfg.resolved()),
        "outputs": [p.name for p in written],
        "version": __version__,
        "created": _dt.datetime.now(_dt.timezone.utc).isoformat(timespec="seconds"),
    }
    mpath = out / "manifest.json"
    mpath.write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    return written + [mpath]


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="hlkit", description=__doc__.split("\n\n")[0])
    sub = p.add_subparsers(dest="command", metavar="<experiment>")
    sub.add_parser("list", help="list the available experiments")
    sp = sub.add_parser("sample", help="print the bundled sample config of an experiment")
    sp.add_argument("name", choices=sorted(EXPERIMENTS))
    for name, e in EXPERIMENTS.items():
        ep = sub.add_parser(name, help=e.description)
        ep.add_argument("--config", help="JSON config file (default: the bundled sample)")
        ep.add_argument("--out", help="output directory")
        ep.add_argument("--seed", type=int, help="random seed (overrides the config)")
        ep.add_argument("--threads", type=int,
                        help="worker threads for data-parallel loops (default: all cores)")
    return p


def main(argv=None) -> int:
    parser = build_parser()
    argv = sys.argv[1:] if argv is None else list(argv)
    if not argv:
        parser.print_usage(sys.stderr)
        return EXIT_USAGE
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code else EXIT_OK
    if args.command == "list":
        for name, desc in list_experiments().items():
            print(f"{name:18s} {desc}")
        return EXIT_OK
    if args.command == "sample":
        print(json.dumps(sample_config(args.name), indent=2))
        return EXIT_OK
    try:
        if args.config:
            path = Path(args.config)
            try:
                raw = json.loads(path.read_text())
            except (OSError, json.JSONDecodeError) as exc:
                raise ConfigError("--config", str(exc)) from exc
            base = path.parent
        else:
            raw, base = sample_config(args.command), None
        if args.seed is not None:
            raw["seed"] = args.seed
        if args.threads is not None:
            raw["threads"] = args.threads
        if args.out is not None:
            raw.setdefault("output", {})
            raw["output"] = dict(raw["output"] or {}, path=args.out)
        cfg = ExperimentConfig.from_dict(raw, args.command, base)
        files = run(cfg)
    except AlgorithmFailure as exc:
        print(f"hlkit: algorithm failure ({exc.condition}): {exc}", file=sys.stderr)
        return EXIT_FAILURE
    except HLKitError as exc:
        print(f"hlkit: invalid input: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    for f in files:
        print(f)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
