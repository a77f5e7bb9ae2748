"""Scenario files: strict JSON schema, canonical serialization, and content hashing."""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass
from pathlib import Path

from .distributions import Family, ValueDistribution
from .equilibrium import SolverOptions
from .errors import ParseError, SchemaError, ValidationError
from .market import ExchangeSpec, Kind, MarketConfig, MechanismSpec

SCHEMA_VERSION = 1

_TOP_KEYS = {"schema_version", "market", "solver", "sim"}
_MARKET_KEYS = {"n_bidders", "distribution", "exchanges"}
_DIST_KEYS = {"family", "params"}
_EX_KEYS = {"lambda", "kind", "reserve"}
_SOLVER_KEYS = {"grid_size", "root_tol", "regularity_grid"}
_SIM_KEYS = {"samples", "seed"}

_FAMILIES = {f.value for f in Family}
_KINDS = {k.value for k in Kind}


@dataclass(frozen=True)
class SimSettings:
    samples: int = 1_000_000
    seed: int = 1


@dataclass(frozen=True)
class ScenarioFile:
    schema_version: int
    market: MarketConfig
    solver: SolverOptions
    sim: SimSettings | None = None
    warnings: tuple[str, ...] = ()


def _require_keys(obj, allowed, where):
    if not isinstance(obj, dict):
        raise ValidationError(f"{where}: expected an object")
    for key in obj:
        if key not in allowed:
            raise SchemaError(f"{where}.{key}: unknown key" if where else f"{key}: unknown key")


def _number(obj, key, where, minimum=None, integer=False):
    if key not in obj:
        raise ValidationError(f"{where}.{key}: missing")
    val = obj[key]
    if isinstance(val, bool) or not isinstance(val, (int, float)):
        raise ValidationError(f"{where}.{key}: expected a number")
    if integer and int(val) != val:
        raise ValidationError(f"{where}.{key}: expected an integer")
    if minimum is not None and val < minimum:
        raise ValidationError(f"{where}.{key}: must be >= {minimum}, got {val}")
    return int(val) if integer else float(val)


def _parse_market(raw):
    _require_keys(raw, _MARKET_KEYS, "market")
    n = _number(raw, "n_bidders", "market", minimum=2, integer=True)

    dist_raw = raw.get("distribution")
    if dist_raw is None:
        raise ValidationError("market.distribution: missing")
    _require_keys(dist_raw, _DIST_KEYS, "distribution")
    family = dist_raw.get("family")
    if family not in _FAMILIES:
        raise ValidationError(f"distribution.family: expected one of {sorted(_FAMILIES)}")
    params = dist_raw.get("params")
    if not isinstance(params, list) or not all(
            isinstance(x, (int, float)) and not isinstance(x, bool) for x in params):
        raise ValidationError("distribution.params: expected a list of numbers")
    try:
        dist = ValueDistribution(Family(family), tuple(float(x) for x in params))
    except ValueError as exc:
        raise ValidationError(f"distribution.params: {exc}") from exc

    ex_raw = raw.get("exchanges")
    if not isinstance(ex_raw, list) or not ex_raw:
        raise ValidationError("exchanges: expected a non-empty list")
    exchanges = []
    flags = []
    hi = dist.support[1]
    for i, item in enumerate(ex_raw):
        where = f"exchanges[{i}]"
        _require_keys(item, _EX_KEYS, where)
        lam = _number(item, "lambda", where)
        if lam <= 0.0:
            raise ValidationError(f"{where}.lambda: must be > 0, got {lam}")
        kind = item.get("kind")
        if kind not in _KINDS:
            raise ValidationError(f"{where}.kind: expected 'fp' or 'sp'")
        reserve = _number(item, "reserve", where, minimum=0.0)
        if not math.isfinite(reserve):
            raise ValidationError(f"{where}.reserve: must be finite")
        if reserve >= hi:
            flags.append(f"reserve_above_support:{where}")
        exchanges.append(ExchangeSpec(lam, MechanismSpec(Kind(kind), reserve)))
    return MarketConfig(n, dist, tuple(exchanges)), flags


def _parse_solver(raw):
    if raw is None:
        return SolverOptions()
    _require_keys(raw, _SOLVER_KEYS, "solver")
    kw = {}
    if "grid_size" in raw:
        kw["grid_size"] = _number(raw, "grid_size", "solver", minimum=16, integer=True)
    if "root_tol" in raw:
        tol = _number(raw, "root_tol", "solver")
        if tol <= 0.0:
            raise ValidationError(f"solver.root_tol: must be > 0, got {tol}")
        kw["root_tol"] = tol
    if "regularity_grid" in raw:
        kw["regularity_grid"] = _number(raw, "regularity_grid", "solver", minimum=16, integer=True)
    return SolverOptions(**kw)


def _parse_sim(raw):
    if raw is None:
        return None
    _require_keys(raw, _SIM_KEYS, "sim")
    samples = _number(raw, "samples", "sim", minimum=1, integer=True) if "samples" in raw \
        else SimSettings().samples
    seed = _number(raw, "seed", "sim", integer=True) if "seed" in raw else SimSettings().seed
    return SimSettings(samples=samples, seed=seed)


def parse_scenario(source):
    """Parse a scenario from a JSON file path or a JSON text blob."""
    text = str(source)
    if not text.lstrip().startswith("{"):
        path = Path(text)
        if not path.exists():
            raise ParseError(f"scenario file not found: {path}")
        text = path.read_text(encoding="utf-8")
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"line {exc.lineno} column {exc.colno}: {exc.msg}") from exc
    if not isinstance(raw, dict):
        raise SchemaError("top level: expected an object")
    _require_keys(raw, _TOP_KEYS, "")
    version = raw.get("schema_version")
    if version != SCHEMA_VERSION:
        raise SchemaError(f"schema_version: expected {SCHEMA_VERSION}, got {version!r}")
    if "market" not in raw:
        raise ValidationError("market: missing")
    market, flags = _parse_market(raw["market"])
    solver = _parse_solver(raw.get("solver"))
    sim = _parse_sim(raw.get("sim"))
    return ScenarioFile(
        schema_version=version, market=market, solver=solver, sim=sim,
        warnings=tuple(flags))


def scenario_dict(sc):
    """Plain-dict form of a scenario with stable key order."""
    out = {
        "schema_version": sc.schema_version,
        "market": {
            "n_bidders": sc.market.n_bidders,
            "distribution": {
                "family": sc.market.dist.family.value,
                "params": list(sc.market.dist.params),
            },
            "exchanges": [
                {"lambda": ex.share, "kind": ex.kind.value, "reserve": ex.reserve}
                for ex in sc.market.exchanges
            ],
        },
        "solver": {
            "grid_size": sc.solver.grid_size,
            "root_tol": sc.solver.root_tol,
            "regularity_grid": sc.solver.regularity_grid,
        },
    }
    if sc.sim is not None:
        out["sim"] = {"samples": sc.sim.samples, "seed": sc.sim.seed}
    return out


def serialize_scenario(sc):
    return json.dumps(scenario_dict(sc), indent=2, sort_keys=True)


def scenario_hash(sc):
    """Content digest of the canonicalized scenario JSON."""
    canon = json.dumps(scenario_dict(sc), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canon.encode("utf-8")).hexdigest()
