"""Command-line interface: ``subricci {invariants,geodesic,mcp-check,verify}``.

Exit codes: 0 success, 2 domain error, 3 configuration error, 4 verification failure.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from . import __version__
from .contact import FrameSpec, structure_constant_values
from .errors import (ConfigError, ConjugatePointError, ContactError, DomainError, ExprSyntaxError,
                     IntegrationError, OrderExhaustedError, UnknownIdentifierError)
from .fields import Point
from .flow import FlowOptions, integrate_flow
from .invariants import LiftedFields, curvatures, phase_points
from .mcp import mcp_check_many
from .models import BUILTIN, ModelDef, sample_phase_points

if sys.version_info >= (3, 11):
    import tomllib
else:  # pragma: no cover
    import tomli as tomllib

SCHEMA = 1
EXIT_OK, EXIT_DOMAIN, EXIT_CONFIG, EXIT_VERIFY = 0, 2, 3, 4


@dataclass
class RunConfig:
    model: ModelDef
    source: str
    jet_order: int = 8
    step: float = 1e-3
    method: str = "rk4"
    samples: int | None = None
    seed: int = 0
    T: float = 1.0
    tolerances: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.jet_order < 0:
            raise ConfigError("jet_order must be nonnegative")
        if not self.step > 0:
            raise ConfigError("step must be positive")
        if self.samples is not None and self.samples < 1:
            raise ConfigError("samples must be at least 1")
        for k, v in self.tolerances.items():
            if not (isinstance(v, (int, float)) and v > 0):
                raise ConfigError(f"tolerance {k!r} must be a positive number")


_MODEL_KEYS = {"name", "builtin", "coords", "v1", "v2", "box", "density"}
_RUN_KEYS = {"jet_order", "step", "method", "samples", "seed", "T", "tolerances"}


def _load_toml(path: str) -> dict:
    p = Path(path)
    if not p.is_file():
        raise ConfigError(f"config file not found: {path}")
    try:
        return tomllib.loads(p.read_text(encoding="utf-8"))
    except (tomllib.TOMLDecodeError, UnicodeDecodeError) as exc:
        raise ConfigError(f"cannot parse {path}: {exc}") from None


def model_from_table(table: dict, label: str) -> ModelDef:
    unknown = set(table) - _MODEL_KEYS
    if unknown:
        raise ConfigError(f"{label}: unknown [model] keys {sorted(unknown)}")
    if "builtin" in table:
        name = table["builtin"]
        if name not in BUILTIN:
            raise ConfigError(f"{label}: unknown builtin model {name!r}")
        return BUILTIN[name]()
    for key in ("coords", "v1", "v2"):
        if key not in table:
            raise ConfigError(f"{label}: [model] needs {key!r}")
    try:
        box = tuple((float(lo), float(hi)) for lo, hi in table.get("box", [[-1, 1]] * 3))
        if len(box) != 3 or any(not lo < hi for lo, hi in box):
            raise ValueError("box needs three [lo, hi] intervals with lo < hi")
        spec = FrameSpec(tuple(table["coords"]), tuple(map(str, table["v1"])),
                         tuple(map(str, table["v2"])), table.get("density"), box)
    except (ExprSyntaxError, UnknownIdentifierError) as exc:
        raise ConfigError(f"{label}: bad frame expression: {exc}") from None
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{label}: {exc}") from None
    return ModelDef(str(table.get("name", Path(label).stem)), spec)


def load_config(args) -> RunConfig:
    data: dict = {}
    if args.config:
        data = _load_toml(args.config)
        unknown = set(data) - {"model", "run"}
        if unknown:
            raise ConfigError(f"{args.config}: unknown sections {sorted(unknown)}")
    model_arg = args.model
    if model_arg is None and "model" not in data:
        model_arg = "heisenberg"
    if model_arg is not None:
        if model_arg in BUILTIN:
            model, source = BUILTIN[model_arg](), model_arg
        else:
            mdata = _load_toml(model_arg)
            if "model" not in mdata:
                raise ConfigError(f"{model_arg}: missing [model] section")
            model, source = model_from_table(mdata["model"], model_arg), model_arg
            data = {"run": mdata.get("run", {}), **{k: v for k, v in data.items() if k != "model"}}
    else:
        model, source = model_from_table(data["model"], args.config), args.config
    run = dict(data.get("run", {}))
    unknown = set(run) - _RUN_KEYS
    if unknown:
        raise ConfigError(f"unknown [run] keys {sorted(unknown)}")
    for flag, key in (("jet_order", "jet_order"), ("samples", "samples"), ("seed", "seed"), ("T", "T")):
        v = getattr(args, flag, None)
        if v is not None:
            run[key] = v
    try:
        return RunConfig(model=model, source=source, **run)
    except TypeError as exc:
        raise ConfigError(f"bad [run] section: {exc}") from None


def _vector(text: str | None, name: str) -> np.ndarray:
    if text is None:
        raise ConfigError(f"--{name} is required")
    try:
        v = np.array([float(x) for x in text.replace(" ", "").split(",")])
    except ValueError:
        raise ConfigError(f"--{name} must be three comma-separated numbers") from None
    if v.shape != (3,) or not np.all(np.isfinite(v)):
        raise ConfigError(f"--{name} must be three comma-separated finite numbers")
    return v


def _clean(obj):
    """JSON-ready copy: numpy scalars and arrays to Python, non-finite floats to None."""
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _clean(obj.tolist())
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        return x if math.isfinite(x) else None
    return obj


def _emit(args, text: str):
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


def _report(args, cfg: RunConfig, command: str, body: dict) -> dict:
    doc = {"schema": SCHEMA, "command": command, "model": cfg.model.name, "source": cfg.source,
           "version": __version__}
    if not args.no_timestamp:
        doc["timestamp"] = datetime.now(timezone.utc).isoformat(timespec="seconds")
    doc.update(body)
    _emit(args, json.dumps(_clean(doc), indent=2) + "\n")
    return doc


def cmd_invariants(args, cfg: RunConfig) -> int:
    q = _vector(args.point, "point")
    p = _vector(args.covector, "covector")
    cs = cfg.model.structure(cfg.jet_order)
    lf = LiftedFields(cs)
    alpha = phase_points(q, p)
    rec = curvatures(lf, alpha[None])
    inv = {k: float(v[0]) for k, v in rec.as_dict().items()}
    sc = {k: float(v[0]) for k, v in structure_constant_values(cs, q[None]).items()}
    pt = Point(q[None])
    _report(args, cfg, "invariants", {
        "point": q, "covector": p, "invariants": inv, "structure_constants": sc,
        "sigma": [float(c(pt)[0]) for c in cs.sigma], "reeb": cs.e(pt)[:, 0],
    })
    return EXIT_OK


def cmd_geodesic(args, cfg: RunConfig) -> int:
    q = _vector(args.point, "point")
    p = _vector(args.covector, "covector")
    lf = LiftedFields(cfg.model.structure(cfg.jet_order))
    opts = FlowOptions(method=cfg.method, step=cfg.step, variational=False)
    samples = cfg.samples if cfg.samples is not None else 100
    tr = integrate_flow(lf, np.concatenate([q, p]), cfg.T, opts, samples=samples if cfg.T else None)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["t", "q1", "q2", "q3", "p1", "p2", "p3", "H", "h0"])
    for k in range(len(tr)):
        w.writerow([repr(float(x)) for x in (tr.t[k], *tr.states[k], tr.H[k], tr.h0[k])])
    _emit(args, buf.getvalue())
    if not tr.energy_ok:
        print(f"energy drift {tr.energy_drift:.3e} exceeds tolerance", file=sys.stderr)
        return EXIT_VERIFY
    return EXIT_OK


def cmd_mcp_check(args, cfg: RunConfig) -> int:
    lf = LiftedFields(cfg.model.structure(cfg.jet_order))
    n = cfg.samples if cfg.samples is not None else 25
    alphas = sample_phase_points(cfg.model, n, cfg.seed, cs=lf.cs)
    kw = {}
    for key in ("product_tol", "loewner_tol", "hyp_tol"):
        if key in cfg.tolerances:
            kw[key] = cfg.tolerances[key]
    r = cfg.model.claims.get("mcp_r")
    reps = mcp_check_many(lf, alphas, r, step=cfg.step, **kw)
    entries = [{"model": cfg.model.name, **rp.as_dict()} for rp in reps]
    counts = {s: sum(e["status"] == s for e in entries) for s in ("pass", "fail", "skipped")}
    _report(args, cfg, "mcp-check", {"samples": n, "seed": cfg.seed, "summary": counts,
                                      "all_pass": counts["fail"] == 0, "checks": entries})
    return EXIT_VERIFY if counts["fail"] else EXIT_OK


def cmd_verify(args, cfg: RunConfig) -> int:
    from .suites import SUITES, Context, run_all

    names = args.suite or list(SUITES)
    bad = [n for n in names if n not in SUITES]
    if bad:
        raise ConfigError(f"unknown suites {bad}; choose from {', '.join(SUITES)}")
    lf = LiftedFields(cfg.model.structure(cfg.jet_order))
    ctx = Context(cfg.model, lf, seed=cfg.seed, samples=cfg.samples or 100, step=cfg.step)
    results = run_all(ctx, names)
    ok = all(r.passed for r in results.values())
    _report(args, cfg, "verify", {"seed": cfg.seed, "all_pass": ok,
                                   "suites": {k: r.as_dict() for k, r in results.items()}})
    return EXIT_OK if ok else EXIT_VERIFY


COMMANDS = {
    "invariants": cmd_invariants,
    "geodesic": cmd_geodesic,
    "mcp-check": cmd_mcp_check,
    "verify": cmd_verify,
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--model", help="builtin model name or path to a TOML model file")
    common.add_argument("--config", help="TOML run configuration ([model] and [run] sections)")
    common.add_argument("--jet-order", dest="jet_order", type=int, help="maximum jet order (default 8)")
    common.add_argument("--seed", type=int, help="sampling seed")
    common.add_argument("--samples", type=int, help="number of samples")
    common.add_argument("--out", help="write output here instead of stdout")
    common.add_argument("--no-timestamp", action="store_true", help="omit the timestamp from JSON")

    parser = argparse.ArgumentParser(prog="subricci", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in ("invariants", "geodesic"):
        sp = sub.add_parser(name, parents=[common])
        sp.add_argument("--point", help="base point q1,q2,q3")
        sp.add_argument("--covector", help="covector p1,p2,p3")
        if name == "geodesic":
            sp.add_argument("--T", type=float, help="integration time (default 1)")
    sub.add_parser("mcp-check", parents=[common])
    vp = sub.add_parser("verify", parents=[common])
    vp.add_argument("--suite", action="append", help="run only this suite (repeatable)")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code else EXIT_OK
    try:
        cfg = load_config(args)
        cfg.model.verify()
        return COMMANDS[args.command](args, cfg)
    except OrderExhaustedError as exc:
        print(f"error: jet order exhausted: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (DomainError, ContactError, ConjugatePointError, IntegrationError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DOMAIN


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
