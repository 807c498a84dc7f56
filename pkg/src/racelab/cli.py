"""Command-line front end: ``python -m racelab <command> ...``.

Every command builds a RunConfig, computes a result dict and writes it
as JSON (schema ``race-dist-lab/1``) or CSV. Floats are written with 17
significant digits so a rerun with the same configuration is
byte-identical.
"""

from __future__ import annotations

import argparse
import csv
import io
import itertools
import json
import math
import os
import sys
import warnings
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from racelab.errors import ConfigError, ConvergenceError, DataError, RaceLabError
from racelab.modchar import build_modulus, c_coefficient, character_group, conductor_log_identity
from racelab.zerodata import (ZeroSet, _zero_set, count_zeros, covariance_data, ingest_zeros, nq_model,
                              synth_zeros, variance_vq, write_zeros)

SCHEMA = "race-dist-lab/1"
EXIT_CODES = {ConfigError: 2, DataError: 3, ConvergenceError: 4}
DEFAULT_ZEROS = "synth:1000:0"


@dataclass(frozen=True)
class ZeroSource:
    kind: str  # file | synth | compute
    path: str | None = None
    T: float | None = None
    seed: int | None = None
    tol: float = 1e-10


def parse_zero_source(text: str) -> ZeroSource:
    """``<path>``, ``synth:<T>:<seed>`` or ``compute:<T>[:<tol>]``."""
    parts = text.split(":")
    try:
        if parts[0] == "synth":
            if len(parts) != 3:
                raise ValueError
            return ZeroSource("synth", T=float(parts[1]), seed=int(parts[2]))
        if parts[0] == "compute":
            if len(parts) not in (2, 3):
                raise ValueError
            return ZeroSource("compute", T=float(parts[1]), tol=float(parts[2]) if len(parts) == 3 else 1e-10)
    except ValueError:
        raise ConfigError(f"bad zero source {text!r}; use <path>, synth:<T>:<seed> or compute:<T>[:<tol>]") from None
    return ZeroSource("file", path=text)


@dataclass(frozen=True)
class RunConfig:
    command: str
    q: int
    residues: tuple[int, ...] = ()
    zeros: ZeroSource = field(default_factory=lambda: parse_zero_source(DEFAULT_ZEROS))
    action: str | None = None
    V: tuple[float, ...] = ()
    lam: tuple[float, ...] = ()
    n: int = 10_000
    seed: int = 0
    out: str | None = None
    fmt: str = "json"
    T: float | None = None
    complete: str = "none"
    points: int = 801
    table: bool = False

    def __post_init__(self):
        if self.q < 3:
            raise ConfigError("q must be >= 3")
        if self.fmt not in ("json", "csv"):
            raise ConfigError("format must be json or csv")
        if len(set(r % self.q for r in self.residues)) != len(self.residues):
            raise ConfigError("residues must be distinct mod q")
        for a in self.residues:
            if math.gcd(a, self.q) != 1:
                raise ConfigError(f"residue {a} is not a unit mod {self.q}")
        if self.n < 1:
            raise ConfigError("--n must be positive")


# ---------------------------------------------------------------------------
# serialization


def _num(x) -> str:
    x = float(x)
    if not math.isfinite(x):
        return "null"
    return format(x, ".17g")


def _to_json(obj, indent: int = 0) -> str:
    pad, inner = "  " * indent, "  " * (indent + 1)
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{inner}{json.dumps(str(k))}: {_to_json(v, indent + 1)}" for k, v in obj.items()]
        return "{\n" + ",\n".join(items) + "\n" + pad + "}"
    if isinstance(obj, np.ndarray):
        obj = obj.tolist()
    if isinstance(obj, (list, tuple)):
        if not obj:
            return "[]"
        if all(not isinstance(v, (dict, list, tuple, np.ndarray)) for v in obj):
            return "[" + ", ".join(_to_json(v) for v in obj) + "]"
        return "[\n" + ",\n".join(inner + _to_json(v, indent + 1) for v in obj) + "\n" + pad + "]"
    if isinstance(obj, (bool, np.bool_)):
        return "true" if obj else "false"
    if obj is None:
        return "null"
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        return _num(obj)
    return json.dumps(str(obj))


def _cell(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return format(float(v), ".17g")
    if v is None:
        return ""
    return str(v)


def render(result: dict, fmt: str) -> str:
    """JSON document, or CSV of result["rows"] preceded by '# key: value' lines."""
    if fmt == "json":
        return _to_json({"schema": SCHEMA, **result}) + "\n"
    buf = io.StringIO()
    buf.write(f"# schema: {SCHEMA}\n")
    for k, v in result.items():
        if k != "rows" and not isinstance(v, (dict, list, tuple)):
            buf.write(f"# {k}: {_cell(v)}\n")
    rows = result.get("rows", [])
    if rows:
        w = csv.writer(buf, lineterminator="\n")
        cols = list(rows[0])
        w.writerow(cols)
        for row in rows:
            w.writerow([_cell(row.get(c)) for c in cols])
    return buf.getvalue()


# ---------------------------------------------------------------------------
# zero loading


def _cache_dir() -> Path | None:
    root = os.environ.get("RACE_LAB_CACHE")
    return Path(root) if root else None


def load_zeros(cfg: RunConfig, G) -> ZeroSet:
    src = cfg.zeros
    if src.kind == "file":
        if not Path(src.path).exists():
            raise DataError(f"zero file {src.path} not found")
        return ingest_zeros(src.path, G)
    if src.kind == "synth":
        return synth_zeros(G, src.T, src.seed)
    from racelab.lfzeros import bulk_zeros

    cache = _cache_dir()
    path = cache / f"zeros-computed-q{cfg.q}-T{src.T!r}-tol{src.tol!r}.npz" if cache else None
    if path is not None and path.exists():
        with np.load(path) as f:
            lists = {int(k[1:]): f[k] for k in f.files}
        return _zero_set(G, lists, {m: float(src.T) for m in lists}, "computed", {"T": src.T, "tol": src.tol})
    Z = bulk_zeros(G, src.T, src.tol)
    if path is not None:
        path.parent.mkdir(parents=True, exist_ok=True)
        tmp = path.with_suffix(".tmp.npz")
        np.savez(tmp, **{f"m{m}": g for m, g in Z.ordinates.items()})
        tmp.replace(path)
    return Z


def _residues(cfg: RunConfig, m, minimum: int = 2) -> tuple[int, ...]:
    if cfg.residues:
        res = tuple(a % cfg.q for a in cfg.residues)
    elif m.totient <= 12:
        # all units, non-squares first so the leading coordinate is the favoured class
        res = tuple(sorted((int(a) for a in m.units()), key=lambda a: (c_coefficient(m, a), a)))
    else:
        raise ConfigError(f"phi({cfg.q}) = {m.totient} > 12: pass --residues")
    if len(res) < minimum:
        raise ConfigError(f"need at least {minimum} residues")
    return res


# ---------------------------------------------------------------------------
# commands


def cmd_chars(cfg: RunConfig) -> dict:
    m = build_modulus(cfg.q)
    G = character_group(m)
    lhs, rhs = conductor_log_identity(m, G)
    head = {"q": m.q, "phi": m.totient, "identity_lhs": lhs, "identity_rhs": rhs,
            "identity_rel_error": abs(lhs - rhs) / abs(rhs)}
    if cfg.table:
        rows = []
        for chi in G:
            vals = chi.values(np.arange(1, m.q + 1))
            rows += [{"conrey_index": chi.conrey_index, "n": n, "value_re": float(v.real), "value_im": float(v.imag)}
                     for n, v in zip(range(1, m.q + 1), np.round(vals, 15) + 0.0)]
        return {**head, "rows": rows}
    rows = [{"conrey": chi.conrey_index, "conductor": chi.conductor, "parity": chi.parity,
             "real": chi.is_real, "primitive": chi.is_primitive, "principal": chi.is_principal}
            for chi in G]
    return {**head, "rows": rows}


def _zero_stats(Z: ZeroSet) -> dict:
    H = Z.min_horizon
    out = {"q": Z.q, "provenance": Z.provenance, "horizon": H, "total": Z.total,
           "V_q": variance_vq(Z), "V_q_completed": variance_vq(Z, True, "density")}
    if H >= 2:
        main, R = nq_model(Z.modulus, H)
        out.update({"N_q_T": count_zeros(Z, H), "N_q_model": main, "R_q": R})
    out["rows"] = [{"conrey": c, "conductor": Z.conductors[c], "count": len(Z.ordinates[c]),
                    "first": float(Z.ordinates[c][0]) if len(Z.ordinates[c]) else None,
                    "horizon": Z.horizon[c]} for c in Z.characters]
    return out


def cmd_zeros(cfg: RunConfig) -> dict:
    m = build_modulus(cfg.q)
    G = character_group(m)
    act = cfg.action
    if act in ("synth", "compute"):
        if cfg.T is None:
            raise ConfigError(f"zeros {act} needs --T")
        src = ZeroSource("synth", T=cfg.T, seed=cfg.seed) if act == "synth" else ZeroSource("compute", T=cfg.T)
        Z = load_zeros(RunConfig(**{**_fields(cfg), "zeros": src}), G)
        if cfg.out is None:
            raise ConfigError(f"zeros {act} needs --out for the zero file")
        write_zeros(Z, cfg.out)
        return _zero_stats(Z)
    Z = load_zeros(cfg, G)
    return _zero_stats(Z)


def _fields(cfg: RunConfig) -> dict:
    return {k: getattr(cfg, k) for k in cfg.__dataclass_fields__}


def cmd_cov(cfg: RunConfig) -> dict:
    m = build_modulus(cfg.q)
    G = character_group(m)
    Z = load_zeros(cfg, G)
    cov = covariance_data(Z, G, _residues(cfg, m), cfg.complete != "none",
                          cfg.complete if cfg.complete != "none" else "asymptotic")
    return {"q": m.q, "residues": list(cov.residues), "c_vector": cov.c_vector, "variance": cov.variance,
            "b_matrix": cov.b_matrix, "completion": cfg.complete}


def cmd_density(cfg: RunConfig) -> dict:
    from racelab.randmodel import density_1d, race_model

    m = build_modulus(cfg.q)
    G = character_group(m)
    Z = load_zeros(cfg, G)
    a = cfg.residues[0] if cfg.residues else None
    model = race_model(Z, G, ())
    g = density_1d(model, a=a, n_points=cfg.points)
    rows = [{"x": x, "density": d, "cdf": c} for x, d, c in zip(g.points, g.density, g.cdf())]
    return {"q": m.q, "variable": g.meta["variable"], "t_max": g.t_max, "mass": g.mass,
            "truncation_bound": g.truncation_bound, "rows": rows}


def _tail_rows(cfg: RunConfig, with_tilted: bool) -> dict:
    from racelab.gaussmodel import theorem1_tail
    from racelab.randmodel import mc_tail, race_model, tilted_tail
    from racelab.tailbounds import mo_upper, regime_envelopes, theorem4_tail

    m = build_modulus(cfg.q)
    G = character_group(m)
    Z = load_zeros(cfg, G)
    res = _residues(cfg, m, minimum=1)
    model = race_model(Z, G, res)
    n = max(cfg.n, 1000)
    if cfg.V and cfg.lam:
        raise ConfigError("pass either --V or --lambda, not both")
    # --lambda measures the radius in units of the standard deviation sqrt(V_q)
    Vs = tuple(l * math.sqrt(model.variance) for l in cfg.lam) if cfg.lam else (cfg.V or (1.0,))
    rows = []
    cov = covariance_data(Z, G, res) if len(res) >= 2 else None
    for V in Vs:
        row = {"V": V}
        mc = mc_tail(model, V, n, cfg.seed)
        row.update({"mc": mc.estimate, "mc_se": mc.std_error, "mc_max_norm": mc.meta.get("p_max", mc.estimate)})
        if V > 0:
            env = regime_envelopes(Z, m, V, len(res))
            row.update({"regime": env.regime, "mo_upper": env.upper, "mo_lower": env.lower,
                        "mo_upper_y": mo_upper(Z, V).bound})
            if cov is not None:
                t1 = theorem1_tail(cov, V / math.sqrt(cov.variance))
                row.update({"gaussian": t1.gaussian, "corrected": t1.corrected})
            with warnings.catch_warnings():
                warnings.simplefilter("ignore")
                row["theorem4_log"] = theorem4_tail(m, G, V).log_tail
            if with_tilted:
                tt = tilted_tail(model, V, n, cfg.seed)
                row.update({"tilted_y": tt.estimate, "tilted_y_log": tt.log_estimate,
                            "tilted_y_rel_se": tt.meta.get("log_std_error", 0.0)})
        else:
            row.update({"regime": None, "mo_upper": 1.0, "mo_lower": 1.0, "mo_upper_y": 1.0})
            if cov is not None:
                row.update({"gaussian": 1.0, "corrected": 1.0})
            row["theorem4_log"] = None
            if with_tilted:
                row.update({"tilted_y": None, "tilted_y_log": None, "tilted_y_rel_se": None})
        rows.append(row)
    out = {"q": m.q, "residues": list(res), "n": n, "seed": cfg.seed, "variance": model.variance,
           "zero_source": asdict(cfg.zeros), "rows": rows}
    if len(rows) == 1:
        out["probability"] = rows[0]["mc"]
    return out


def cmd_tail(cfg: RunConfig) -> dict:
    return _tail_rows(cfg, with_tilted=True)


def cmd_report(cfg: RunConfig) -> dict:
    if not cfg.V and not cfg.lam:
        m = build_modulus(cfg.q)
        scale = m.totient * math.log(m.q)
        cfg = RunConfig(**{**_fields(cfg), "V": tuple(float(v) for v in np.geomspace(0.05, 3.0, 10) * math.sqrt(scale))})
    return _tail_rows(cfg, with_tilted=False)


def cmd_race(cfg: RunConfig) -> dict:
    from racelab.randmodel import race_density, race_model

    m = build_modulus(cfg.q)
    G = character_group(m)
    Z = load_zeros(cfg, G)
    res = _residues(cfg, m)
    if len(res) > 5:
        raise ConfigError("race enumerates orderings; use at most 5 residues")
    model = race_model(Z, G, res)
    n = max(cfg.n, 1)
    rows = []
    for perm in itertools.permutations(res):
        est = race_density(model, perm, n, cfg.seed)
        rows.append({"ordering": " > ".join(map(str, perm)), "density": est.estimate,
                     "std_error": est.std_error, "ci_low": est.ci_low, "ci_high": est.ci_high})
    return {"q": m.q, "residues": list(res), "n": n, "seed": cfg.seed, "rows": rows}


def cmd_saddle(cfg: RunConfig) -> dict:
    from racelab.tailbounds import saddle_shape_check, saddle_solve

    m = build_modulus(cfg.q)
    G = character_group(m)
    if len(cfg.V) != 1:
        raise ConfigError("saddle needs a single --V")
    ctx = saddle_solve(m, G, cfg.V[0])
    dev, allow = saddle_shape_check(ctx)
    return {**asdict(ctx), "shape_deviation": dev, "shape_allowance": allow, "shape_ok": dev <= allow}


COMMANDS = {"chars": cmd_chars, "zeros": cmd_zeros, "cov": cmd_cov, "density": cmd_density,
            "tail": cmd_tail, "race": cmd_race, "saddle": cmd_saddle, "report": cmd_report}
CSV_DEFAULT = {"density", "report"}


# ---------------------------------------------------------------------------
# argument parsing


def _floats(text: str) -> tuple[float, ...]:
    try:
        return tuple(float(v) for v in text.split(",") if v.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def _ints(text: str) -> tuple[int, ...]:
    try:
        return tuple(int(v) for v in text.split(",") if v.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--q", type=int, required=True, help="modulus")
    common.add_argument("--residues", type=_ints, default=(), help="a1,a2,... units mod q")
    common.add_argument("--zeros", default=DEFAULT_ZEROS, help="<path> | synth:<T>:<seed> | compute:<T>[:<tol>]")
    common.add_argument("--V", type=_floats, default=(), help="deviation(s), comma-separated")
    common.add_argument("--lambda", dest="lam", type=_floats, default=(), help="normalized radius")
    common.add_argument("--n", type=int, default=10_000, help="Monte Carlo sample count")
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--out", default=None, help="output file (default stdout)")
    common.add_argument("--format", dest="fmt", choices=("json", "csv"), default=None)
    common.add_argument("--T", type=float, default=None, help="zero horizon for zeros synth/compute")
    common.add_argument("--complete", choices=("none", "asymptotic", "density"), default="none",
                        help="tail completion for cov")
    common.add_argument("--points", type=int, default=801, help="grid size for density")
    common.add_argument("--table", action="store_true", help="chars: emit the full value table")

    p = argparse.ArgumentParser(prog="racelab", description="Prime race random-model laboratory")
    sub = p.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        sp = sub.add_parser(name, parents=[common])
        if name == "zeros":
            sp.add_argument("action", choices=("ingest", "synth", "compute", "stats"))
    return p


def config_from_args(ns: argparse.Namespace) -> RunConfig:
    fmt = ns.fmt or ("csv" if ns.command in CSV_DEFAULT or ns.command == "chars" else "json")
    return RunConfig(command=ns.command, q=ns.q, residues=tuple(ns.residues), zeros=parse_zero_source(ns.zeros),
                     action=getattr(ns, "action", None), V=tuple(ns.V), lam=tuple(ns.lam), n=ns.n, seed=ns.seed,
                     out=ns.out,
                     fmt=fmt, T=ns.T, complete=ns.complete, points=ns.points, table=ns.table)


def _origin(exc: BaseException) -> str:
    tb = exc.__traceback__
    where = "racelab"
    while tb is not None:
        mod = tb.tb_frame.f_globals.get("__name__", "")
        if mod.startswith("racelab"):
            where = f"{mod}.{tb.tb_frame.f_code.co_name}"
        tb = tb.tb_next
    return where


def run(argv=None) -> int:
    parser = build_parser()
    ns = parser.parse_args(argv)
    try:
        cfg = config_from_args(ns)
        result = COMMANDS[cfg.command](cfg)
        text = render(result, cfg.fmt)
        dest = cfg.out
        if cfg.command == "zeros" and cfg.action in ("synth", "compute"):
            dest = None  # --out received the zero file; the summary goes to stdout
        if dest:
            Path(dest).write_text(text)
        else:
            sys.stdout.write(text)
        return 0
    except RaceLabError as e:
        code = next((c for cls, c in EXIT_CODES.items() if isinstance(e, cls)), 1)
        print(f"racelab: {type(e).__name__} in {_origin(e)}: {e}", file=sys.stderr)
        return code


def main() -> None:
    sys.exit(run())
