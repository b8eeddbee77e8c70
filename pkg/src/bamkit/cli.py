"""``bamkit`` command line: scenario tasks and the worked-example registry.

Exit codes: 0 pass, 1 check failed (witness in the report), 2 usage or
parse error, 3 validation error.
"""

import argparse
import csv
import json
import sys
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from . import repro as repro_mod
from .bam import (BAMViolation, BamCertificate, Provenance, certify_empirical, combineN_product,
                  compose_chain, iterate)
from .circumcenter import (CircumcenterOf, OperatorSet, build_reflection_suite, cc_compose_combine,
                           circumcenter, crm_certificate, map_rate)
from .operators import (Averaged, Compose, ConvexCombo, Identity, LinearMap, Projector, Reflector,
                        SampleSpec, ShiftConjugate)
from .sets import (AffineSubspace, Ball, LinearSubspace, Orthant, OrthantBall, Segment, Singleton,
                   TwoBallIntersection, friedrichs_cosine)

TASKS = ("project", "angle", "circumcenter", "certify", "iterate", "rate", "compose", "combine")
EXIT_PASS, EXIT_FAIL, EXIT_USAGE, EXIT_INVALID = 0, 1, 2, 3


class ConfigError(Exception):
    """Scenario fails validation (exit 3)."""


class ParseError(Exception):
    """Scenario cannot be read (exit 2)."""


# ---------------------------------------------------------------- scenario

def _vec(value, dim, what):
    try:
        v = np.asarray(value, dtype=float)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{what}: not a numeric vector") from exc
    if v.shape != (dim,):
        raise ConfigError(f"{what}: expected length {dim}, got shape {v.shape}")
    return v


def _basis(value, dim, what):
    vecs = [_vec(v, dim, what) for v in value]
    return LinearSubspace(vecs, dim=dim)


def build_set(spec, dim, name):
    kind = spec.get("type")
    try:
        if kind == "ball":
            return Ball(_vec(spec["center"], dim, name), spec["radius"])
        if kind == "linear":
            return _basis(spec.get("basis", []), dim, name)
        if kind == "affine":
            return AffineSubspace(_vec(spec["anchor"], dim, name), _basis(spec.get("basis", []), dim, name))
        if kind == "orthant":
            return Orthant(dim, None if "apex" not in spec else _vec(spec["apex"], dim, name))
        if kind == "orthant_ball":
            return OrthantBall(dim, spec.get("radius", 1.0))
        if kind == "singleton":
            return Singleton(_vec(spec["point"], dim, name))
        if kind == "segment":
            return Segment(_vec(spec["a"], dim, name), _vec(spec["b"], dim, name))
        if kind == "two_balls":
            b1, b2 = spec["balls"]
            return TwoBallIntersection(Ball(_vec(b1["center"], dim, name), b1["radius"]),
                                       Ball(_vec(b2["center"], dim, name), b2["radius"]))
    except KeyError as exc:
        raise ConfigError(f"set {name!r}: missing field {exc.args[0]!r}") from exc
    except ValueError as exc:
        raise ConfigError(f"set {name!r}: {exc}") from exc
    raise ConfigError(f"set {name!r}: unknown type {kind!r}")


class Scenario:
    """Validated scenario: named sets and operators plus a task block."""

    def __init__(self, doc):
        if not isinstance(doc, dict):
            raise ParseError("scenario must be a JSON object")
        if doc.get("version") != 1:
            raise ParseError("scenario must declare \"version\": 1")
        self.doc = doc
        try:
            self.dim = int(doc["ambient_dim"])
        except (KeyError, TypeError, ValueError) as exc:
            raise ConfigError("ambient_dim is required") from exc
        self.sets = {name: build_set(spec, self.dim, name)
                     for name, spec in doc.get("sets", {}).items()}
        self._op_specs = doc.get("operators", {})
        self._ops = {}
        self.task = doc.get("task", {})
        self.sample = doc.get("sample", {})

    def set(self, name):
        if name not in self.sets:
            raise ConfigError(f"undefined set {name!r}")
        return self.sets[name]

    def operator(self, name, _stack=()):
        if name in self._ops:
            return self._ops[name]
        if name not in self._op_specs:
            raise ConfigError(f"undefined operator {name!r}")
        if name in _stack:
            raise ConfigError(f"operator {name!r} refers to itself")
        spec = self._op_specs[name]
        stack = _stack + (name,)
        sub = lambda n: self.operator(n, stack)  # noqa: E731
        kind = spec.get("type")
        try:
            if kind == "identity":
                op = Identity(self.dim)
            elif kind == "projector":
                op = Projector(self.set(spec["set"]))
            elif kind == "reflector":
                op = Reflector(self.set(spec["set"]))
            elif kind == "averaged":
                op = Averaged(sub(spec["base"]), spec["gamma"])
            elif kind == "linear":
                op = LinearMap(spec["matrix"], spec.get("offset"))
                if op.dim != self.dim:
                    raise ConfigError(f"operator {name!r}: matrix is not {self.dim}x{self.dim}")
            elif kind == "shift":
                op = ShiftConjugate(sub(spec["base"]), _vec(spec["z"], self.dim, name))
            elif kind == "compose":
                op = Compose([sub(n) for n in spec["ops"]])
            elif kind == "combo":
                op = ConvexCombo(spec["weights"], [sub(n) for n in spec["ops"]])
            elif kind == "circumcenter":
                if "suite" in spec:
                    op = CircumcenterOf(self.suite(spec["suite"]))
                else:
                    op = CircumcenterOf(OperatorSet([sub(n) for n in spec["ops"]], self.dim))
            else:
                raise ConfigError(f"operator {name!r}: unknown type {kind!r}")
        except KeyError as exc:
            raise ConfigError(f"operator {name!r}: missing field {exc.args[0]!r}") from exc
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"operator {name!r}: {exc}") from exc
        self._ops[name] = op
        return op

    def suite(self, spec):
        try:
            return build_reflection_suite([self.set(n) for n in spec["subspaces"]], spec["kind"])
        except KeyError as exc:
            raise ConfigError(f"suite: missing field {exc.args[0]!r}") from exc
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"suite: {exc}") from exc

    def sample_spec(self, seed=None):
        s = self.sample
        center = s.get("center")
        if center is not None:
            center = tuple(_vec(center, self.dim, "sample.center"))
        count = int(s.get("count", 2000))
        hw = float(s.get("half_width", 10.0))
        if count < 1 or hw <= 0:
            raise ConfigError("sample count must be >= 1 and half_width > 0")
        return SampleSpec(seed=int(s.get("seed", 0)) if seed is None else seed,
                          count=count, center=center, half_width=hw)

    def need(self, key):
        if key not in self.task:
            raise ConfigError(f"task is missing field {key!r}")
        return self.task[key]


def load_scenario(path):
    try:
        doc = json.loads(Path(path).read_text())
    except OSError as exc:
        raise ParseError(f"cannot read {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ParseError(f"{path}: invalid JSON ({exc})") from exc
    return Scenario(doc)


# ------------------------------------------------------------------ tasks

def describe_set(C):
    if isinstance(C, Singleton):
        return {"type": "singleton", "point": C.point.tolist()}
    if isinstance(C, AffineSubspace):
        return {"type": "affine", "anchor": C.anchor.tolist(), "basis": C.par.basis.T.tolist()}
    if isinstance(C, LinearSubspace):
        return {"type": "linear", "basis": C.basis.T.tolist()}
    return {"type": type(C).__name__, "repr": repr(C)}


def describe_cert(cert: BamCertificate):
    return {"gamma": cert.gamma, "kappa": cert.kappa, "provenance": cert.provenance.value,
            "fixed_set": describe_set(cert.fixed_set)}


def _verify_empirically(sc, op, cert, seed):
    """Cross-check a theorem certificate with sampling; returns (ok, details)."""
    try:
        emp = certify_empirical(op, cert.fixed_set, sc.sample_spec(seed))
    except BAMViolation as exc:
        return False, {"violation": exc.reason, "witness": np.asarray(exc.witness).tolist()}
    return emp.gamma <= cert.gamma + 1e-6, {"empirical_gamma": emp.gamma}


def task_project(sc, seed):
    C = sc.set(sc.need("set"))
    x = _vec(sc.need("point"), sc.dim, "point")
    return True, {"projection": C.project(x).tolist()}, None


def task_angle(sc, seed):
    names = sc.need("sets")
    if len(names) != 2:
        raise ConfigError("angle needs exactly two sets")
    r = friedrichs_cosine(sc.set(names[0]), sc.set(names[1]))
    return True, {"cosine": r.cosine, "dim_intersection": r.dim_intersection}, None


def task_circumcenter(sc, seed):
    if "points" in sc.task:
        pts = [_vec(p, sc.dim, "points") for p in sc.task["points"]]
    else:
        op = sc.operator(sc.need("operator"))
        if not isinstance(op, CircumcenterOf):
            raise ConfigError("circumcenter task needs a circumcenter operator or points")
        pts = op.S.images(_vec(sc.need("point"), sc.dim, "point"))
    r = circumcenter(pts)
    return True, {"point": None if r.point is None else r.point.tolist(),
                  "hull_residual": r.hull_residual, "spread": r.spread}, None


def task_certify(sc, seed):
    op = sc.operator(sc.need("operator"))
    F = sc.set(sc.need("fixed_set"))
    spec = sc.sample_spec(seed)
    try:
        cert = certify_empirical(op, F, spec)
    except BAMViolation as exc:
        return False, {"violation": exc.reason}, np.asarray(exc.witness).tolist()
    out = describe_cert(cert)
    out["samples"] = spec.count
    out["box"] = {"center": list(spec.center) if spec.center else [0.0] * sc.dim,
                  "half_width": spec.half_width}
    return True, out, None


def task_iterate(sc, seed):
    op = sc.operator(sc.need("operator"))
    F = sc.set(sc.need("fixed_set"))
    if "gamma" in sc.task:
        cert = BamCertificate(F, float(sc.task["gamma"]), Provenance.EMPIRICAL, {"given": True})
    else:
        try:
            cert = certify_empirical(op, F, sc.sample_spec(seed))
        except BAMViolation as exc:
            return False, {"violation": exc.reason}, np.asarray(exc.witness).tolist()
    x0 = _vec(sc.need("x0"), sc.dim, "x0")
    steps = int(sc.task.get("steps", 20))
    tr = iterate(op, cert, x0, steps)
    ok = tr.rate_law_holds()
    result = {"gamma": cert.gamma, "steps": steps, "final_error": float(tr.errors[-1]),
              "rate_law_holds": ok,
              "trace": {"k": list(range(steps + 1)), "error": tr.errors.tolist(),
                        "bound_ratio": [float(v) if np.isfinite(v) else None for v in tr.bound_ratios]}}
    witness = None if ok else {"k": int(np.argmax(tr.bound_ratios))}
    return ok, result, witness


def task_rate(sc, seed):
    subspaces = [sc.set(n) for n in sc.need("subspaces")]
    kind = sc.task.get("kind", "power_set_products")
    try:
        cert = crm_certificate(subspaces, kind)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    out = describe_cert(cert)
    if len(subspaces) >= 2:
        out["map_rate"] = map_rate(subspaces)
    return True, out, None


def _parts(sc):
    certs, ops = [], []
    for part in sc.need("parts"):
        op = sc.operator(part["operator"])
        F = sc.set(part["fixed_set"])
        if "gamma" in part:
            cert = BamCertificate(F, float(part["gamma"]), Provenance.EMPIRICAL, {"given": True})
        else:
            cert = certify_empirical(op, F, sc.sample_spec())
        certs.append(cert)
        ops.append(op)
    return ops, certs


def _compose_or_combine(sc, seed, mode):
    try:
        if "suites" in sc.task:
            suites = [sc.suite(s) for s in sc.task["suites"]]
            op, cert = cc_compose_combine(suites, mode, sc.task.get("weights"))
        else:
            ops, certs = _parts(sc)
            if mode == "compose":
                op, cert = Compose(list(reversed(ops))), compose_chain(certs)
            else:
                w = sc.task.get("weights") or [1.0 / len(ops)] * len(ops)
                op, cert = ConvexCombo(w, ops), combineN_product(certs, w)
    except BAMViolation as exc:
        return False, {"violation": exc.reason}, None if exc.witness is None else np.asarray(exc.witness).tolist()
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    out = describe_cert(cert)
    ok = True
    if sc.task.get("verify", True):
        ok, extra = _verify_empirically(sc, op, cert, seed)
        out.update(extra)
    return ok, out, None if ok else out.get("witness")


def task_compose(sc, seed):
    return _compose_or_combine(sc, seed, "compose")


def task_combine(sc, seed):
    return _compose_or_combine(sc, seed, "combine")


TASK_FUNCS = {name: globals()[f"task_{name}"] for name in TASKS}


def run_scenario(task, sc: Scenario, seed=None):
    declared = sc.task.get("type")
    if declared is not None and declared != task:
        raise ConfigError(f"config declares task {declared!r}, command asked for {task!r}")
    ok, result, witness = TASK_FUNCS[task](sc, seed)
    report = {"version": 1, "task": task, "status": "pass" if ok else "fail",
              "result": result, "witness": witness,
              "timestamp": datetime.now(timezone.utc).isoformat()}
    return ok, report


def write_outputs(report, out_dir):
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    (out / "report.json").write_text(json.dumps(report, indent=2, sort_keys=True) + "\n")
    trace = report.get("result", {}).get("trace") if isinstance(report.get("result"), dict) else None
    if trace:
        with open(out / "trace.csv", "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["k", "error", "bound_ratio"])
            for row in zip(trace["k"], trace["error"], trace["bound_ratio"]):
                w.writerow([row[0], repr(row[1]), repr(row[2])])


# -------------------------------------------------------------------- main

def _parser():
    p = argparse.ArgumentParser(prog="bamkit", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)
    for t in TASKS:
        tp = sub.add_parser(t, help=f"run a {t} scenario")
        tp.add_argument("--config", required=True, help="scenario JSON file")
        tp.add_argument("--seed", type=int, default=None, help="override the sampling seed")
        tp.add_argument("--out", default=None, help="directory for report.json / trace.csv")
    rp = sub.add_parser("repro", help="re-run a registered worked example")
    rp.add_argument("example_id", nargs="?")
    rp.add_argument("--all", action="store_true", help="run every registered example")
    rp.add_argument("--out", default=None, help="directory for repro JSON reports")
    return p


def _run_repro(args):
    ids = list(repro_mod.REGISTRY) if args.all else [args.example_id]
    if not args.all and args.example_id not in repro_mod.REGISTRY:
        print(f"unknown example id {args.example_id!r}; registered ids:", file=sys.stderr)
        for k in repro_mod.REGISTRY:
            print(f"  {k}", file=sys.stderr)
        return EXIT_USAGE
    all_ok = True
    for ex in ids:
        rep = repro_mod.repro(ex)
        all_ok &= rep.overall
        print(f"{'PASS' if rep.overall else 'FAIL'} {ex}")
        for c in rep.checks:
            print(f"    [{'ok' if c.passed else 'FAIL'}] {c.description}: measured {c.measured}")
        if args.out:
            out = Path(args.out)
            out.mkdir(parents=True, exist_ok=True)
            (out / f"repro-{ex}.json").write_text(json.dumps(rep.to_dict(), indent=2) + "\n")
    return EXIT_PASS if all_ok else EXIT_FAIL


def main(argv=None):
    args = _parser().parse_args(argv)
    if args.command == "repro":
        if not args.all and not args.example_id:
            print("repro needs an example id or --all", file=sys.stderr)
            return EXIT_USAGE
        return _run_repro(args)
    try:
        sc = load_scenario(args.config)
        ok, report = run_scenario(args.command, sc, args.seed)
    except ParseError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except ConfigError as exc:
        print(f"invalid scenario: {exc}", file=sys.stderr)
        return EXIT_INVALID
    print(json.dumps(report, indent=2, sort_keys=True))
    if args.out:
        write_outputs(report, args.out)
    return EXIT_PASS if ok else EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
