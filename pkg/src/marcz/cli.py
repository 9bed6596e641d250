"""``marcz`` command line: configuration, dispatch, artifacts and manifests.

Every invocation is turned into a config document
``{command, seed, output_dir, format, source, params}``, validated against a
JSON schema and passed to :func:`run`. ``run`` writes the artifacts and a
``manifest.json`` that echoes the config, so ``marcz run manifest.json``
reproduces the artifacts byte for byte.

Exit codes: 0 all checks passed, 2 a certificate or check failed,
3 an iteration did not converge, 64 invalid configuration, 74 I/O failure.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import math
import sys
import time
from importlib import metadata
from pathlib import Path

import jsonschema

from . import analysis, density, discretize, entropy, sparsify
from ._rng import env_seed, set_workers
from .errors import (BudgetExhaustedError, CheckFailed, ConvergenceError, InvariantError,
                     MarczError, NetTooCoarseError, PreconditionError, RankDeficiencyError)
from .serialize import (certificate_to_dict, dumps, lewis_to_dict, plain, plan_from_dict,
                        plan_to_dict, read_json, subspace_from_dict, subspace_to_dict)
from .space import (build_rademacher, build_random, build_trig, build_trig_n, frequency_block,
                    hyperbolic_cross, make_uniform_torus)

log = logging.getLogger("marcz")

EXIT_OK, EXIT_CHECK, EXIT_CONVERGENCE, EXIT_SOFTWARE = 0, 2, 3, 70
EXIT_USAGE, EXIT_IO = 64, 74

COMMANDS = (
    "space.gen", "analyze",
    "discretize.sample", "discretize.certify", "discretize.two-stage",
    "density.lewis", "density.transform", "density.weighted",
    "sparsify.bss",
    "entropy.pack", "entropy.number", "entropy.sandwich", "entropy.transfer",
    "entropy.scaling",
    "report",
)

_number = {"type": ["number", "string"]}
_posint = {"type": "integer", "minimum": 1}

SOURCE_SCHEMA = {
    "type": "object",
    "properties": {
        "in": {"type": "string"},
        "kind": {"enum": ["torus", "rademacher", "trig", "hcross", "random"]},
        "N": _posint, "d": _posint, "n": {"type": "integer", "minimum": 0},
        "points": _posint, "M": _posint, "spike": {"type": "number"},
        "Ns": {"type": "array", "items": _posint},
    },
    "additionalProperties": False,
    "anyOf": [{"required": ["in"]}, {"required": ["kind"]}],
}

CONFIG_SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "title": "marcz experiment config",
    "type": "object",
    "required": ["command", "seed", "output_dir"],
    "properties": {
        "command": {"enum": list(COMMANDS)},
        "seed": {"type": "integer", "minimum": 0, "maximum": 2**64 - 1},
        "output_dir": {"type": "string", "minLength": 1},
        "format": {"enum": ["json", "csv"]},
        "source": SOURCE_SCHEMA,
        "params": {
            "type": "object",
            "properties": {
                "p": _number, "q": _number, "eps": {"type": ["number", "array"]}, "b": _number,
                "k": _posint, "m": _posint, "N": _posint, "budget": {"type": "integer",
                                                                    "minimum": 1000},
                "restarts": _posint, "attempts": _posint, "C": _number, "C_p": _number,
                "method": {"enum": ["exact-eigen", "heuristic", "net-rigorous"]},
                "plan": {"type": "string"}, "net_radius": _number, "trials": _posint,
                "manifests": {"type": "array", "items": {"type": "string"}},
            },
            "additionalProperties": False,
        },
    },
    "additionalProperties": False,
    "allOf": [
        {"if": {"properties": {"command": {"not": {"enum": ["report", "entropy.sandwich"]}}}},
         "then": {"required": ["source"]}},
        {"if": {"properties": {"command": {"const": "discretize.certify"}}},
         "then": {"properties": {"params": {"required": ["plan"]}}, "required": ["params"]}},
        {"if": {"properties": {"command": {"const": "entropy.number"}}},
         "then": {"properties": {"params": {"required": ["k"]}}, "required": ["params"]}},
        {"if": {"properties": {"command": {"const": "report"}}},
         "then": {"properties": {"params": {"required": ["manifests"]}}, "required": ["params"]}},
    ],
}

MANIFEST_REQUIRED = ("version", "command", "config", "artifacts", "assertions", "exit_code")


def version() -> str:
    try:
        return metadata.version("artifact")
    except metadata.PackageNotFoundError:
        return "0.0.0"


def _to_float(x):
    if isinstance(x, str):
        x = x.strip().lower()
        if x in ("inf", "infinity", "+inf"):
            return math.inf
    return float(x)


class _Run:
    """Mutable state of one run: artifacts, assertions and stage timings."""

    def __init__(self, config: dict):
        self.config = config
        self.out = Path(config["output_dir"])
        self.params = dict(config.get("params", {}))
        self.seed = int(config["seed"])
        self.fmt = config.get("format", "json")
        self.artifacts: list[str] = []
        self.assertions: dict[str, bool] = {}
        self.timings: dict[str, float] = {}
        self.exit_code = EXIT_OK
        self.summary: dict = {}

    def param(self, name, default=None, conv=None):
        v = self.params.get(name, default)
        if v is None:
            return None
        return conv(v) if conv else v

    def stage(self, name):
        run = self

        class _Timer:
            def __enter__(self):
                self.t = time.perf_counter()

            def __exit__(self, *exc):
                run.timings[name] = round(time.perf_counter() - self.t, 6)
                return False

        return _Timer()

    def write(self, name: str, obj) -> None:
        self.out.mkdir(parents=True, exist_ok=True)
        (self.out / name).write_text(dumps(obj), encoding="utf-8")
        self.artifacts.append(name)

    def write_csv(self, name: str, header, rows) -> None:
        self.out.mkdir(parents=True, exist_ok=True)
        (self.out / name).write_text(csv_text(header, rows), encoding="utf-8", newline="")
        self.artifacts.append(name)

    def check(self, name: str, ok: bool, code: int = EXIT_CHECK) -> None:
        self.assertions[name] = bool(ok)
        if not ok and self.exit_code == EXIT_OK:
            self.exit_code = code


def csv_text(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\r\n")
    w.writerow(header)
    for r in rows:
        w.writerow(["" if r.get(h) is None else r.get(h) for h in header])
    return buf.getvalue()


# -------------------------------------------------------------------- sources

def build_source(source: dict, seed: int):
    """Subspace described by a source block (a file or a generator)."""
    if "in" in source:
        return subspace_from_dict(read_json(source["in"]))
    kind = source["kind"]
    if kind == "trig":
        return build_trig_n(source.get("N", 9), source.get("points", 64))
    if kind == "rademacher":
        return build_rademacher(source.get("N", 3))[1]
    if kind == "random":
        return build_random(source.get("M", 200), source.get("N", 4), seed=seed,
                            spike=source.get("spike"))
    d = source.get("d", 2)
    space = make_uniform_torus(d, source.get("points", 16))
    Q = hyperbolic_cross(d, source.get("n", 1)) if kind == "hcross" else \
        frequency_block(d, source.get("n", 1))
    return build_trig(space, Q, label=f"{kind}(d={d},n={source.get('n', 1)})")


def build_family(source: dict, seed: int):
    Ns = source.get("Ns") or [source.get("N", 3)]
    base = {k: v for k, v in source.items() if k != "Ns"}
    return [build_source(dict(base, N=N), seed) for N in Ns]


# ------------------------------------------------------------------ commands

def _cmd_space_gen(r: _Run, sub):
    r.write("subspace.json", subspace_to_dict(sub))
    r.summary.update(N=sub.dimension, M=sub.M)


def _cmd_analyze(r: _Run, sub):
    p = r.param("p", 2.0, _to_float)
    q = r.param("q", "inf", _to_float)
    restarts = r.param("restarts", 64, int)
    with r.stage("christoffel"):
        prof = analysis.christoffel(sub, seed=r.seed, with_k2=sub.dimension >= 2,
                                    restarts=restarts)
    with r.stage("nikolskii"):
        nik = analysis.nikolskii_constant(sub, p, q, restarts=restarts, seed=r.seed)
    Mq = None
    if math.isfinite(q):
        with r.stage("gaussian_mean"):
            Mq = analysis.gaussian_mean_norm(sub, q, trials=r.param("trials", 10_000, int),
                                             seed=r.seed)
    rep = {"N": sub.dimension, "K1": prof.K1, "K2": prof.K2, "q_logN": prof.q_logN,
           "log_base": prof.log_base, "christoffel_max": float(prof.christoffel.max()),
           "nikolskii": {"p": p, "q": q, "value": nik},
           "M_q": None if Mq is None else {"q": q, "value": Mq.value, "stderr": Mq.stderr,
                                           "trials": Mq.trials}}
    r.write("analysis.json", rep)
    r.summary.update(N=sub.dimension, K1=prof.K1, K2=prof.K2)


def _emit_plan(r: _Run, plan, cert, eps=None):
    r.write("plan.json", plan_to_dict(plan))
    r.write("certificate.json", certificate_to_dict(cert))
    r.summary.update(m=plan.m, p=plan.p, C1=cert.C1, C2=cert.C2, method=cert.method)
    if eps is not None:
        r.check("certificate_within_eps", cert.within(eps))


def _cmd_sample(r: _Run, sub):
    p = r.param("p", 2.0, _to_float)
    eps = r.param("eps", None, float)
    m = r.param("m")
    if m is None:
        K1 = analysis.christoffel(sub, check=False).K1
        m = discretize.suggest_m(sub.dimension, K1, eps if eps is not None else 0.5,
                                 r.param("C", 8.0, float))
    with r.stage("sample"):
        plan = discretize.sample_random(sub.space, int(m), r.seed, p=p)
    with r.stage("certify"):
        cert = discretize.certify(sub, plan, restarts=r.param("restarts", 16, int), seed=r.seed)
    _emit_plan(r, plan, cert, eps)
    r.summary["N"] = sub.dimension


def _cmd_certify(r: _Run, sub):
    plan = plan_from_dict(read_json(r.params["plan"]))
    p = r.param("p", None, _to_float)
    if p is not None and p != plan.p:
        plan = discretize.SamplePlan(plan.indices, plan.weights, p, plan.provenance)
    eps = r.param("eps", None, float)
    with r.stage("certify"):
        cert = discretize.certify(sub, plan, method=r.param("method"),
                                  restarts=r.param("restarts", 16, int), seed=r.seed,
                                  net_radius=r.param("net_radius", 0.1, float))
    r.write("certificate.json", certificate_to_dict(cert))
    r.summary.update(N=sub.dimension, m=plan.m, p=plan.p, C1=cert.C1, C2=cert.C2,
                     method=cert.method)
    if eps is not None:
        r.check("certificate_within_eps", cert.within(eps))


def _cmd_two_stage(r: _Run, sub):
    p = r.param("p", 2.0, _to_float)
    eps = r.param("eps", 0.5, float)
    with r.stage("two_stage"):
        try:
            plan, cert = discretize.two_stage_discretize(
                sub, p, eps, seed=r.seed, C=r.param("C", 8.0, float),
                C_p=r.param("C_p", 8.0, float), attempts=r.param("attempts", 200, int),
                restarts=r.param("restarts", 16, int))
        except BudgetExhaustedError as exc:
            plan, cert = exc.plan, exc.certificate
    _emit_plan(r, plan, cert, eps)
    N = sub.dimension
    r.summary["N"] = N
    r.check("plan_size_within_target", plan.m <= cert.detail.get("target", plan.m))


def _cmd_lewis(r: _Run, sub):
    p = r.param("p", 1.0, _to_float)
    with r.stage("lewis"):
        lb = density.lewis_basis(sub, p)
    r.write("lewis.json", lewis_to_dict(lb))
    r.summary.update(N=sub.dimension, p=p, iterations=lb.iterations)
    r.check("identity_residual", lb.identity_residual(sub.space.weights, seed=r.seed) < 1e-7)


def _cmd_transform(r: _Run, sub):
    p = r.param("p", 1.0, _to_float)
    with r.stage("lewis"):
        lb = density.lewis_basis(sub, p)
    with r.stage("transform"):
        _, new = density.change_of_density(sub, lb, seed=r.seed)
    r.write("lewis.json", lewis_to_dict(lb))
    r.write("subspace.json", subspace_to_dict(new))
    r.summary.update(N=sub.dimension, p=p, K1=analysis.christoffel(new, check=False).K1)


def _cmd_weighted(r: _Run, sub):
    b = r.param("b", None, float)
    if b is not None:
        with r.stage("weighted_l2"):
            plan, cert = density.weighted_discretize_l2(sub, b, seed=r.seed,
                                                        C=r.param("C", 8.0, float))
        _emit_plan(r, plan, cert)
        r.check("size_at_most_bN", plan.m <= math.ceil(b * sub.dimension))
        r.check("ratio_within_bound", cert.ratio <= sparsify.ratio_bound(b) * (1 + 1e-9) + 1e-6)
    else:
        p = r.param("p", 1.0, _to_float)
        eps = r.param("eps", 0.5, float)
        with r.stage("weighted_lp"):
            try:
                plan, cert = density.weighted_discretize_lp(
                    sub, p, eps, seed=r.seed, C=r.param("C", 8.0, float),
                    C_p=r.param("C_p", 8.0, float), attempts=r.param("attempts", 200, int),
                    restarts=r.param("restarts", 16, int))
            except BudgetExhaustedError as exc:
                plan, cert = exc.plan, exc.certificate
        _emit_plan(r, plan, cert, eps)
    r.summary["N"] = sub.dimension


def _cmd_bss(r: _Run, sub):
    b = r.param("b", 2.0, float)
    start = r.param("plan")
    start_plan = None if start is None else plan_from_dict(read_json(start))
    with r.stage("bss"):
        plan = sparsify.bss_select(sub, b, start_plan=start_plan, allow_large_b=b > 4)
        cert = discretize.certify_exact_l2(sub, plan)
    _emit_plan(r, plan, cert)
    r.summary["N"] = sub.dimension
    r.check("size_at_most_bN", plan.m <= math.ceil(b * sub.dimension))
    if start_plan is None:
        r.check("ratio_within_bound", cert.ratio <= sparsify.ratio_bound(b) + 1e-6)


def _cmd_pack(r: _Run, sub):
    p, q = r.param("p", 2.0, _to_float), r.param("q", "inf", _to_float)
    eps = r.param("eps", 0.5, float)
    with r.stage("pack"):
        est = entropy.pack_greedy(sub, p, q, eps, budget=r.param("budget", 100_000, int),
                                  seed=r.seed)
    r.write("estimate.json", est)
    r.summary.update(N=sub.dimension, eps=eps, H_lower=est.lower, H_upper=est.upper)


def _cmd_number(r: _Run, sub):
    p, q = r.param("p", 2.0, _to_float), r.param("q", "inf", _to_float)
    k = int(r.params["k"])
    budget = r.param("budget", 100_000, int)
    rows = []
    with r.stage("entropy_number"):
        for kk in range(1, k + 1):
            est = entropy.entropy_number(sub, p, q, kk, budget=budget, seed=r.seed)
            rows.append({"k": kk, "lower": est.lower, "upper": est.upper})
    r.write("estimate.json", est)
    r.write_csv("entropy_numbers.csv", ["k", "lower", "upper"], rows)
    r.summary.update(N=sub.dimension, k=k, eps_lower=est.lower, eps_upper=est.upper)


def _cmd_sandwich(r: _Run, sub):
    N = r.param("N", int(sub.dimension) if sub is not None else 2, int)
    p = r.param("p", 2.0, _to_float)
    eps = r.param("eps", 0.5, float)
    with r.stage("sandwich"):
        rep = entropy.check_ball_entropy_sandwich(N, p, eps,
                                                  budget=r.param("budget", 100_000, int),
                                                  seed=r.seed, strict=False)
    r.write("report.json", rep)
    r.summary.update(N=N, eps=eps, H_lower=rep.lower, H_upper=rep.upper)
    r.check("sandwich", rep.passed)


def _cmd_transfer(r: _Run, sub):
    p, q = r.param("p", 1.0, _to_float), r.param("q", "inf", _to_float)
    eps = r.param("eps", [0.5, 0.25])
    eps_list = [float(e) for e in (eps if isinstance(eps, list) else [eps])]
    with r.stage("transfer"):
        rep = entropy.check_transfer_inequality(sub, p, q, eps_list,
                                                budget=r.param("budget", 20_000, int),
                                                seed=r.seed, strict=False)
    r.write("report.json", rep)
    r.write_csv("transfer.csv", ["eps", "lhs_lower", "rhs_upper", "terms", "passed"], rep.rows)
    r.summary.update(N=sub.dimension)
    r.check("transfer", rep.passed)


def _cmd_scaling(r: _Run, family):
    p, q = r.param("p", 2.0, _to_float), r.param("q", "inf", _to_float)
    kind = r.config["source"].get("kind")
    with r.stage("scaling"):
        rep = entropy.check_entropy_scaling(family, p, q, seed=r.seed,
                                            budget=r.param("budget", 20_000, int),
                                            restarts=r.param("restarts", 16, int),
                                            volumetric=kind == "rademacher")
    r.write("report.json", rep)
    header = ["N", "k", "K1", "K2", "eps_lower", "eps_upper", "ratio"]
    if kind == "rademacher":
        header.append("volumetric_eps_lower")
    r.write_csv("scaling.csv", header, rep.rows)
    r.summary.update(S0=rep.S0, bounded=rep.bounded)
    r.assertions["bounded"] = bool(rep.bounded)  # reported, never fatal


REPORT_COLUMNS = ["manifest", "command", "N", "M", "m", "p", "C1", "C2", "method", "k", "eps",
                  "eps_lower", "eps_upper", "H_lower", "H_upper", "m_over_N_ln3N", "exit_code"]


def report_rows(manifest_paths) -> list[dict]:
    """One summary row per manifest; raises PreconditionError on foreign documents."""
    rows = []
    for path in manifest_paths:
        doc = read_json(path)
        if not isinstance(doc, dict) or any(k not in doc for k in MANIFEST_REQUIRED):
            raise PreconditionError(f"{path} is not a marcz manifest")
        s = doc.get("summary", {})
        row = {"manifest": str(path), "command": doc["command"], "exit_code": doc["exit_code"]}
        for key in REPORT_COLUMNS:
            if key in s:
                row[key] = s[key]
        N, m = s.get("N"), s.get("m")
        if N and m and N > 1:
            row["m_over_N_ln3N"] = m / (N * math.log(N) ** 3)
        rows.append(row)
    return rows


def _cmd_report(r: _Run, _):
    rows = report_rows(r.params["manifests"])
    if r.fmt == "csv":
        r.write_csv("summary.csv", REPORT_COLUMNS, rows)
    else:
        r.write("summary.json", {"columns": REPORT_COLUMNS, "rows": rows})
    r.summary.update(rows=len(rows))


DISPATCH = {
    "space.gen": _cmd_space_gen, "analyze": _cmd_analyze,
    "discretize.sample": _cmd_sample, "discretize.certify": _cmd_certify,
    "discretize.two-stage": _cmd_two_stage,
    "density.lewis": _cmd_lewis, "density.transform": _cmd_transform,
    "density.weighted": _cmd_weighted,
    "sparsify.bss": _cmd_bss,
    "entropy.pack": _cmd_pack, "entropy.number": _cmd_number,
    "entropy.sandwich": _cmd_sandwich, "entropy.transfer": _cmd_transfer,
    "entropy.scaling": _cmd_scaling,
    "report": _cmd_report,
}


def validate_config(config) -> None:
    jsonschema.validate(config, CONFIG_SCHEMA)


def run(config: dict) -> dict:
    """Execute one config and return its manifest (also written to ``manifest.json``).

    Invalid configs return a manifest with exit code 64 without touching the
    file system; I/O errors give 74.
    """
    try:
        validate_config(config)
    except jsonschema.ValidationError as exc:
        log.error("invalid config: %s", exc.message)
        return {"exit_code": EXIT_USAGE, "error": exc.message, "config": config}
    r = _Run(config)
    error = None
    try:
        source = config.get("source")
        cmd = config["command"]
        with r.stage("load"):
            if cmd == "entropy.scaling":
                target = build_family(source, r.seed)
            elif source is None:
                target = None
            else:
                target = build_source(source, r.seed)
        DISPATCH[cmd](r, target)
    except (CheckFailed, NetTooCoarseError) as exc:
        r.exit_code, error = EXIT_CHECK, str(exc)
    except ConvergenceError as exc:
        r.exit_code, error = EXIT_CONVERGENCE, str(exc)
    except (PreconditionError, RankDeficiencyError, jsonschema.ValidationError, KeyError,
            ValueError) as exc:
        r.exit_code, error = EXIT_USAGE, str(exc)
    except OSError as exc:
        r.exit_code, error = EXIT_IO, str(exc)
    except (InvariantError, MarczError) as exc:
        r.exit_code, error = EXIT_SOFTWARE, str(exc)
    manifest = {
        "version": version(), "command": config["command"], "config": config,
        "artifacts": r.artifacts, "assertions": r.assertions, "timings": r.timings,
        "summary": plain(r.summary), "exit_code": r.exit_code,
        "status": "pass" if r.exit_code == EXIT_OK else "fail",
    }
    if error is not None:
        manifest["error"] = error
        log.error("%s", error)
    try:
        r.out.mkdir(parents=True, exist_ok=True)
        (r.out / "manifest.json").write_text(dumps(manifest), encoding="utf-8")
    except OSError as exc:
        log.error("cannot write manifest: %s", exc)
        manifest["exit_code"] = EXIT_IO
    return plain(manifest)


# ---------------------------------------------------------------- arguments

class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _add_source(p):
    g = p.add_argument_group("subspace source")
    g.add_argument("--in", dest="src_in", metavar="FILE", help="subspace JSON")
    g.add_argument("--kind", choices=["torus", "rademacher", "trig", "hcross", "random"])
    g.add_argument("--N", type=int, help="dimension")
    g.add_argument("--d", type=int, help="torus dimension")
    g.add_argument("--n", type=int, help="frequency level (torus block or hyperbolic cross)")
    g.add_argument("--points", type=int, help="grid points per axis")
    g.add_argument("--M", type=int, help="atoms of a random space")
    g.add_argument("--spike", type=float, help="mass of atom 0 of a random space")


def _common(p):
    p.add_argument("--seed", type=int, default=None, help="seed (default: $MARCZ_SEED or 0)")
    p.add_argument("--out", default="marcz-out", help="output directory")
    p.add_argument("--format", choices=["json", "csv"], default="json")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="marcz", description=__doc__.splitlines()[0])
    parser.add_argument("--threads", type=int, default=1, help="worker cap (never changes results)")
    parser.add_argument("-v", "--verbose", action="count", default=0)
    top = parser.add_subparsers(dest="group", required=True, parser_class=_Parser)

    def leaf(sub, name, *opts, source=True):
        p = sub.add_parser(name)
        _common(p)
        if source:
            _add_source(p)
        for o in opts:
            o(p)
        return p

    P = lambda p: p.add_argument("--p", default=None, help="norm exponent (inf allowed)")  # noqa: E731
    Q = lambda p: p.add_argument("--q", default=None, help="metric exponent (inf allowed)")  # noqa: E731
    EPS = lambda p: p.add_argument("--eps", type=float, default=None)  # noqa: E731

    space = top.add_parser("space")
    ss = space.add_subparsers(dest="action", required=True, parser_class=_Parser)
    leaf(ss, "gen")

    an = leaf(top, "analyze", P, Q)
    an.add_argument("--restarts", type=int)
    an.add_argument("--trials", type=int)

    disc = top.add_parser("discretize")
    ds = disc.add_subparsers(dest="action", required=True, parser_class=_Parser)
    s = leaf(ds, "sample", P, EPS)
    s.add_argument("--m", type=int)
    s.add_argument("--C", type=float)
    c = leaf(ds, "certify", P, EPS)
    c.add_argument("--plan", required=True)
    c.add_argument("--method", choices=["exact-eigen", "heuristic", "net-rigorous"])
    c.add_argument("--net-radius", dest="net_radius", type=float)
    c.add_argument("--restarts", type=int)
    t = leaf(ds, "two-stage", P, EPS)
    for name in ("--C", "--Cp"):
        t.add_argument(name, type=float, dest="C_p" if name == "--Cp" else "C")
    t.add_argument("--attempts", type=int)
    t.add_argument("--restarts", type=int)

    den = top.add_parser("density")
    dd = den.add_subparsers(dest="action", required=True, parser_class=_Parser)
    leaf(dd, "lewis", P)
    leaf(dd, "transform", P)
    w = leaf(dd, "weighted", P, EPS)
    w.add_argument("--b", type=float, help="run the p = 2 selection with at most bN points")
    w.add_argument("--attempts", type=int)

    sp = top.add_parser("sparsify")
    spp = sp.add_subparsers(dest="action", required=True, parser_class=_Parser)
    bss = leaf(spp, "bss")
    bss.add_argument("--b", type=float, default=2.0)
    bss.add_argument("--plan")

    ent = top.add_parser("entropy")
    es = ent.add_subparsers(dest="action", required=True, parser_class=_Parser)
    for name in ("pack", "number", "sandwich", "transfer", "scaling"):
        e = leaf(es, name, P, Q, source=True)
        e.add_argument("--budget", type=int)
        if name == "number":
            e.add_argument("--k", type=int, required=True)
        elif name == "transfer":
            e.add_argument("--eps", type=float, nargs="+")
        else:
            EPS(e)
        if name == "scaling":
            e.add_argument("--Ns", type=int, nargs="+", help="family dimensions")

    rep = top.add_parser("report")
    _common(rep)
    rep.add_argument("manifests", nargs="*")

    run_p = top.add_parser("run", help="run a config or re-run a manifest")
    run_p.add_argument("config")
    run_p.add_argument("--out", default=None, help="override the output directory")
    return parser


_PARAM_KEYS = ("p", "q", "eps", "b", "k", "m", "budget", "restarts", "attempts", "C", "C_p",
               "method", "plan", "net_radius", "trials")


def config_from_args(args) -> dict:
    command = args.group if args.group in ("analyze", "report") else f"{args.group}.{args.action}"
    seed = args.seed if args.seed is not None else env_seed(0)
    config = {"command": command, "seed": int(seed), "output_dir": args.out,
              "format": args.format}
    if command == "report":
        config["params"] = {"manifests": list(args.manifests)}
        return config
    source = {}
    if getattr(args, "src_in", None):
        source["in"] = args.src_in
    for key in ("kind", "N", "d", "n", "points", "M", "spike", "Ns"):
        v = getattr(args, key, None)
        if v is not None:
            source[key] = v
    params = {}
    for key in _PARAM_KEYS:
        v = getattr(args, key, None)
        if v is not None:
            params[key] = v
    if command == "entropy.sandwich":
        if "N" in source:
            params["N"] = source["N"]
        source = {k: v for k, v in source.items() if k not in ("N",)}
    if source:
        config["source"] = source
    if params:
        config["params"] = params
    return config


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.WARNING - 10 * min(args.verbose, 2),
                        format="%(levelname)s %(name)s: %(message)s")
    set_workers(args.threads)
    if args.group == "run":
        try:
            doc = read_json(args.config)
        except (OSError, json.JSONDecodeError) as exc:
            print(f"marcz: cannot read {args.config}: {exc}", file=sys.stderr)
            return EXIT_IO if isinstance(exc, OSError) else EXIT_USAGE
        config = doc.get("config", doc) if isinstance(doc, dict) else doc
        if args.out is not None and isinstance(config, dict):
            config = dict(config, output_dir=args.out)
    else:
        config = config_from_args(args)
    manifest = run(config)
    out = {k: manifest.get(k) for k in ("command", "exit_code", "status", "artifacts", "summary",
                                        "error") if k in manifest}
    print(json.dumps(out, sort_keys=True))
    return int(manifest["exit_code"])


if __name__ == "__main__":
    sys.exit(main())
