"""Command-line front end.

Subcommands: mesh | hopf | dilation | audit | construct | selftest.

Every JSON report embeds the effective config, seed, mesh checksums and the
package version, and contains no timestamps, so identical inputs give
byte-identical output.  Exit codes: 0 success, 1 validation error,
2 numerical-tolerance failure.
"""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import __version__
from . import audit as audit_mod
from . import construction, dilation, hopf, maps, mesh
from .forms import bump_area_form
from .solver import NonExactError, SolverError

EXIT_OK, EXIT_VALIDATION, EXIT_NUMERICAL = 0, 1, 2

DEFAULTS = {
    "mesh": {"dim": 3, "level": 1, "product_steps": None, "validate": None},
    "hopf": {"map": "i∘hopf", "level": 3, "quad_order": hopf.HOPF_QUAD_ORDER, "oracle": True,
             "independence_trials": 0, "omega_scale": 1.0},
    "dilation": {"map": "hopf", "k": [1, 2, 3], "samples": 10_000, "refine_rounds": 3, "refine_points": 1000,
                 "csv": None},
    "audit": {"homotopy": "line-null:i∘hopf", "mesh_level": 1, "steps": None, "quad_order": audit_mod.AUDIT_QUAD_ORDER,
              "hopf_level": 3, "samples": 10_000},
    "construct": {"delta_list": [0.2, 0.1, 0.05], "W": 0.3, "r": 0.9, "f0": "cone:hopf", "samples": 10_000,
                  "csv": None},
    "selftest": {},
}


class ToleranceFailure(RuntimeError):
    pass


def _json_default(o):
    if isinstance(o, np.ndarray):
        return o.tolist()
    if isinstance(o, (np.floating, np.integer, np.bool_)):
        return o.item()
    raise TypeError(f"cannot serialize {type(o).__name__}")


def _dump(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True, default=_json_default)


def _report(command: str, config: dict, seed: int, result, checksums: dict | None = None) -> dict:
    return {"command": command, "config": config, "seed": seed, "version": __version__,
            "mesh_checksums": checksums or {}, "result": result}


def _emit(report: dict, out: str | None):
    text = _dump(report) + "\n"
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def _split_floats(s: str) -> list[float]:
    return [float(v) for v in s.replace(",", " ").split()]


# -- subcommands --------------------------------------------------------------------

def cli_mesh(cfg: dict, seed: int, out: str | None):
    if cfg["validate"]:
        c = mesh.load_mesh(cfg["validate"])
        mesh.validate(c)
        return {"valid": True, "counts": [c.count(k) for k in range(c.dim + 1)],
                "euler_characteristic": c.euler_characteristic}, {"mesh": c.checksum()}
    c = mesh.gen_sphere(cfg["dim"], cfg["level"])
    if cfg["product_steps"]:
        if cfg["dim"] != 3:
            raise ValueError("product meshes are built over S^3")
        c = mesh.gen_product_interval(c, cfg["product_steps"])
    mesh.validate(c)
    if out:
        mesh.save_mesh(c, out)
    return {"counts": [c.count(k) for k in range(c.dim + 1)], "euler_characteristic": c.euler_characteristic,
            "max_edge_length": c.max_edge_length(), "written_to": out}, {"mesh": c.checksum()}


def _sphere_factor(name: str):
    """G with F = i∘G, for the linking oracle (None when F is not of that form)."""
    key = name.replace(".", "∘")
    for prefix in ("i∘", "i-s2∘"):
        if key.startswith(prefix):
            g = maps.registry(key[len(prefix):])
            return g if g.codomain == maps.sphere(2) else None
    return None


def cli_hopf(cfg: dict, seed: int):
    F = maps.registry(cfg["map"])
    c = mesh.gen_sphere(3, cfg["level"])
    # omega_scale != 1 changes the normalization of omega; H scales by its square
    omega = bump_area_form() if cfg["omega_scale"] == 1.0 else bump_area_form().scaled(cfg["omega_scale"])
    rep = hopf.hopf_invariant(F, omega, c, cfg["quad_order"])
    result = {"report": rep.to_dict()}
    g = _sphere_factor(cfg["map"]) if cfg["oracle"] else None
    if g is not None:
        result["linking_oracle"] = hopf.linking_oracle(g)
    if cfg["independence_trials"]:
        result["primitive_independence"] = hopf.primitive_independence(
            F, omega, c, cfg["independence_trials"], seed, cfg["quad_order"])
    return result, {"sphere": c.checksum()}


def cli_dilation(cfg: dict, seed: int):
    F = maps.registry(cfg["map"])
    plan = dilation.SamplingPlan(count=cfg["samples"], refine_rounds=cfg["refine_rounds"],
                                 refine_points=cfg["refine_points"], seed=seed)
    reports = [dilation.dilation(F, k, plan) for k in cfg["k"]]
    if cfg["csv"]:
        dilation.write_csv(reports, cfg["csv"])
    return {"reports": [r.to_dict() for r in reports]}, {}


def cli_audit(cfg: dict, seed: int):
    F = maps.registry(cfg["homotopy"])
    plan = dilation.SamplingPlan(count=cfg["samples"], seed=seed)
    rep = audit_mod.audit_homotopy(F, base_level=cfg["mesh_level"], steps=cfg["steps"], q_order=cfg["quad_order"],
                                   hopf_level=cfg["hopf_level"], plan=plan)
    bounds = [vars(b) for b in audit_mod.verify_chain_bounds(rep)]
    return {"report": rep.to_dict(), "chain_bounds": bounds}, rep.mesh_checksums


def cli_construct(cfg: dict, seed: int):
    F0 = maps.registry(cfg["f0"])
    plan = dilation.SamplingPlan(count=cfg["samples"], seed=seed)
    rep = construction.sweep(cfg["delta_list"], cfg["W"], cfg["r"], F0, plan)
    if cfg["csv"]:
        rep.write_csv(cfg["csv"])
    return rep.to_dict(), {}


# -- selftest -----------------------------------------------------------------------

def selftest_cases():
    """The trivially checkable examples, as (name, thunk returning bool)."""
    s3 = maps.sphere(3)
    plan = dilation.SamplingPlan(count=2000, refine_rounds=1, refine_points=200)

    def ddzero():
        for c in (mesh.gen_sphere(2, 2), mesh.gen_sphere(3, 1), mesh.gen_product_interval(mesh.gen_sphere(3, 0), 2)):
            for k in range(c.dim - 1):
                if abs(c.coboundary(k + 1) @ c.coboundary(k)).max() > 0:
                    return False
        return True

    def euler():
        return mesh.gen_sphere(2, 2).euler_characteristic == 2 and mesh.gen_sphere(3, 1).euler_characteristic == 0

    def identity_dil():
        ident = maps.identity(s3)
        return all(abs(dilation.dilation(ident, k, plan).sup_estimate - 1) < 1e-9 for k in (1, 2, 3))

    def constant_dil():
        f = maps.constant_map([0.3, 0.1, 0.2])
        return all(dilation.dilation(f, k, plan).sup_estimate == 0 for k in (1, 2, 3))

    def constant_hopf():
        return hopf.hopf_invariant(maps.constant_map([0.0, 0.0, 1.0]), level=1).value == 0.0

    def relation_linear():
        lin = maps.AnalyticMap("lin", maps.euclidean(2), maps.euclidean(2), lambda x: x * [2.0, 1.0],
                               lambda x: np.broadcast_to(np.diag([2.0, 1.0]), (len(x), 2, 2)).copy())
        r = dilation.check_dilation_relation(lin, 1, 2, plan)
        return r.holds and abs(r.lhs - 2) < 1e-12 and abs(r.rhs - np.sqrt(2)) < 1e-12

    def pullback_identity():
        ident = maps.identity(maps.euclidean(3))
        return abs(dilation.check_pullback_bound(ident, bump_area_form(), plan)) <= 1e-9

    def lambda_profile():
        lam, _ = construction.build_lambda(0.9)
        Lam = construction.build_Lambda(0.9)
        x = np.random.default_rng(0).standard_normal((200, 3))
        x = x / np.linalg.norm(x, axis=1, keepdims=True) * 0.6
        return abs(lam(0.9 / 8) - 1 / 8) < 1e-15 and np.allclose(np.linalg.norm(Lam(x), axis=1), 1, atol=1e-12)

    def sweep_rows():
        rep = construction.sweep([0.1, 0.2], plan=dilation.SamplingPlan(count=500, refine_rounds=0))
        return [r.delta for r in rep.rows] == [0.2, 0.1]

    return [
        ("d o d = 0 on generated meshes", ddzero),
        ("Euler characteristics of S^2 and S^3", euler),
        ("identity on S^3 has dil_k = 1", identity_dil),
        ("constant map has dil_k = 0", constant_dil),
        ("constant map has Hopf invariant 0", constant_hopf),
        ("dilation relation for singular values (2, 1)", relation_linear),
        ("pullback bound is an equality for the identity", pullback_identity),
        ("lambda(r/8) = 1/8 and |Lambda| = 1 past r/2", lambda_profile),
        ("sweep rows sorted by delta", sweep_rows),
    ]


def cli_selftest(cfg: dict, seed: int):
    results = {}
    for name, case in selftest_cases():
        try:
            ok = bool(case())
        except Exception as exc:  # a crash is a failure of that case
            ok = False
            print(f"selftest {name}: {type(exc).__name__}: {exc}", file=sys.stderr)
        results[name] = ok
        print(f"[{'PASS' if ok else 'FAIL'}] {name}", file=sys.stderr)
    if not all(results.values()):
        raise ToleranceFailure(f"{sum(not v for v in results.values())} selftest case(s) failed")
    return {"cases": results}, {}


# -- argument parsing ---------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--threads", type=int, default=1, help="worker cap; results do not depend on it")
    common.add_argument("--out", default=None, help="write the JSON report (or mesh file) here")
    common.add_argument("--quad-order", type=int, default=None)
    common.add_argument("--level", type=int, default=None)
    common.add_argument("--config", default=None, help="JSON file with parameter overrides")

    p = argparse.ArgumentParser(prog="hopflab", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True)

    m = sub.add_parser("mesh", parents=[common], help="generate or validate a mesh")
    m.add_argument("--dim", type=int, choices=(2, 3))
    m.add_argument("--product-steps", type=int)
    m.add_argument("--validate", metavar="FILE")

    h = sub.add_parser("hopf", parents=[common], help="generalized Hopf invariant of a map S^3 -> R^3")
    h.add_argument("--map")
    h.add_argument("--no-oracle", dest="oracle", action="store_false", default=None)
    h.add_argument("--independence-trials", type=int)
    h.add_argument("--omega-scale", type=float)

    dl = sub.add_parser("dilation", parents=[common], help="sampled k-dilation")
    dl.add_argument("--map")
    dl.add_argument("--k", type=int, nargs="+")
    dl.add_argument("--samples", type=int)
    dl.add_argument("--refine-rounds", type=int)
    dl.add_argument("--refine-points", type=int)
    dl.add_argument("--csv")

    a = sub.add_parser("audit", parents=[common], help="audit a homotopy S^3 x [0,1] -> R^3")
    a.add_argument("--homotopy")
    a.add_argument("--mesh-level", type=int)
    a.add_argument("--steps", type=int)
    a.add_argument("--hopf-level", type=int)
    a.add_argument("--samples", type=int)

    c = sub.add_parser("construct", parents=[common], help="delta sweep of the squeeze construction")
    c.add_argument("--delta-list", type=_split_floats)
    c.add_argument("--W", type=float)
    c.add_argument("--r", type=float)
    c.add_argument("--f0")
    c.add_argument("--samples", type=int)
    c.add_argument("--csv")

    sub.add_parser("selftest", parents=[common], help="run the built-in example suite")
    return p


def resolve_config(args: argparse.Namespace) -> dict:
    cfg = dict(DEFAULTS[args.command])
    if args.config:
        overrides = json.loads(Path(args.config).read_text())
        unknown = set(overrides) - set(cfg)
        if unknown:
            raise ValueError(f"unknown config keys for {args.command}: {sorted(unknown)}")
        cfg.update(overrides)
    for key in cfg:
        val = getattr(args, key, None)
        if val is not None:
            cfg[key] = val
    if args.level is not None:
        if "level" in cfg:
            cfg["level"] = args.level
        elif "mesh_level" in cfg:
            cfg["mesh_level"] = args.level
    if args.quad_order is not None and "quad_order" in cfg:
        cfg["quad_order"] = args.quad_order
    return cfg


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = resolve_config(args)
        if args.command == "mesh":
            result, sums = cli_mesh(cfg, args.seed, args.out)
            _emit(_report("mesh", cfg, args.seed, result, sums), None)
            return EXIT_OK
        run = {"hopf": cli_hopf, "dilation": cli_dilation, "audit": cli_audit, "construct": cli_construct,
               "selftest": cli_selftest}[args.command]
        result, sums = run(cfg, args.seed)
        _emit(_report(args.command, cfg, args.seed, result, sums), args.out)
        return EXIT_OK
    except (NonExactError, SolverError, audit_mod.AuditError, hopf.RegularValueError, hopf.LinkingRoundingError,
            ToleranceFailure) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except FileNotFoundError as exc:
        print(f"path error: {exc.filename}: no such file", file=sys.stderr)
        return EXIT_VALIDATION
    except KeyError as exc:
        print(f"error: {exc.args[0]}", file=sys.stderr)
        return EXIT_VALIDATION
    except (ValueError, mesh.MeshValidationError, mesh.MeshParseError, mesh.MeshResourceError,
            maps.DomainError) as exc:
        print(f"validation error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION


if __name__ == "__main__":
    sys.exit(main())
