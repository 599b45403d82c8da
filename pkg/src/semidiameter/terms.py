"""Symbolic total maps on the natural numbers.

A ``MapExpr`` is a closed, serializable term denoting a total function
N -> N.  Evaluation is deterministic: the same term at the same point
always yields the same value.  Composition is written left to right
throughout the package, matching the right-action convention for
transformation semigroups: ``Compose(f, g)`` is the map x |-> g(f(x)),
i.e. "f then g".

``Opaque`` nodes are escape hatches for lazily tabulated constructions.
They name a registered generator procedure plus a JSON parameter tree;
the procedure must be pure (output depends only on the generator name,
the parameters and the input point), so memo tables behave as caches
and terms stay serializable.
"""

from __future__ import annotations

import json
import math
import threading
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable


class TermError(ValueError):
    """Malformed term construction."""


class UnknownGenerator(KeyError):
    """Opaque term references a generator id that is not registered."""


class BudgetExhausted(RuntimeError):
    """A bounded search ran out of its step budget.

    Raised by scanning generators when a claimed-infinite set fails to
    produce requested elements within the configured scan limit; the
    claim is then suspect and callers may retry with a larger budget.
    """


# Per-instance step budget for scanning Opaque generators.  Generous
# enough for window sizes used in tests; override via set_scan_limit.
_SCAN_LIMIT = 4_000_000


def scan_limit() -> int:
    return _SCAN_LIMIT


def set_scan_limit(n: int) -> int:
    """Set the global scan budget, returning the previous value."""
    global _SCAN_LIMIT
    old = _SCAN_LIMIT
    _SCAN_LIMIT = int(n)
    return old


# ---------------------------------------------------------------------------
# Cantor pairing


def pack(a: int, b: int) -> int:
    """Cantor pairing: the fixed bijection N x N -> N."""
    s = a + b
    return s * (s + 1) // 2 + b


def unpack(x: int) -> tuple[int, int]:
    """Inverse of :func:`pack`."""
    w = (math.isqrt(8 * x + 1) - 1) // 2
    b = x - w * (w + 1) // 2
    return w - b, b


# ---------------------------------------------------------------------------
# Grammar


@dataclass(frozen=True)
class MapExpr:
    """Base class for map terms; use the concrete node types."""

    def __call__(self, x: int) -> int:
        return evaluate(self, x)


@dataclass(frozen=True)
class Id(MapExpr):
    pass


@dataclass(frozen=True)
class Const(MapExpr):
    c: int

    def __post_init__(self):
        if self.c < 0:
            raise TermError("Const value must be a natural number")


@dataclass(frozen=True)
class AffineMod(MapExpr):
    """x = q*m + r  |->  a_r * q + b_r, one (a, b) rule per residue."""

    m: int
    rules: tuple[tuple[int, int], ...]

    def __post_init__(self):
        if self.m < 1:
            raise TermError("AffineMod modulus must be >= 1")
        if len(self.rules) != self.m:
            raise TermError("AffineMod needs exactly one rule per residue")
        for a, b in self.rules:
            if a < 0 or b < 0:
                raise TermError("AffineMod coefficients must be natural numbers")


@dataclass(frozen=True)
class PiecewiseMod(MapExpr):
    """x = q*m + r  |->  branches[r](q)."""

    m: int
    branches: tuple[MapExpr, ...]

    def __post_init__(self):
        if self.m < 1:
            raise TermError("PiecewiseMod modulus must be >= 1")
        if len(self.branches) != self.m:
            raise TermError("PiecewiseMod needs exactly one branch per residue")


@dataclass(frozen=True)
class Compose(MapExpr):
    """x |-> g(f(x)) -- apply f first (left-to-right convention)."""

    f: MapExpr
    g: MapExpr


@dataclass(frozen=True)
class PackPair(MapExpr):
    """x |-> pack(f(x), g(x))."""

    f: MapExpr
    g: MapExpr


@dataclass(frozen=True)
class UnpackFirst(MapExpr):
    pass


@dataclass(frozen=True)
class UnpackSecond(MapExpr):
    pass


@dataclass(frozen=True)
class Patch(MapExpr):
    """f with finitely many values overridden."""

    f: MapExpr
    table: tuple[tuple[int, int], ...]

    def __post_init__(self):
        keys = [k for k, _ in self.table]
        if len(set(keys)) != len(keys):
            raise TermError("Patch table keys must be distinct")
        if any(k < 0 or v < 0 for k, v in self.table):
            raise TermError("Patch table entries must be natural numbers")
        object.__setattr__(self, "table", tuple(sorted(self.table)))


@dataclass(frozen=True)
class Opaque(MapExpr):
    """Registered deterministic procedure; params is canonical JSON text."""

    gen: str
    params_json: str = "{}"

    @property
    def params(self):
        return json.loads(self.params_json)


def opaque(gen: str, params) -> Opaque:
    """Build an Opaque node with canonically serialized parameters."""
    return Opaque(gen, json.dumps(params, sort_keys=True, separators=(",", ":")))


# ---------------------------------------------------------------------------
# Generator registry

class GeneratorRegistry:
    """Registry of Opaque generator procedures.

    A maker receives the parsed parameter tree and returns the evaluation
    callable.  Instances are cached per (name, params) so any internal
    memo tables are shared; fills must be idempotent, which holds for
    pure procedures, so concurrent use needs no locking beyond the
    dict-update guard here.
    """

    def __init__(self):
        self._makers: dict[str, Callable] = {}
        self._instances: dict[tuple[str, str], Callable[[int], int]] = {}
        self._lock = threading.Lock()

    def register(self, name: str, maker: Callable, replace: bool = False) -> None:
        if not replace and name in self._makers:
            raise TermError(f"generator {name!r} already registered")
        self._makers[name] = maker

    def registered(self, name: str) -> bool:
        return name in self._makers

    def instance(self, name: str, params_json: str):
        key = (name, params_json)
        inst = self._instances.get(key)
        if inst is None:
            maker = self._makers.get(name)
            if maker is None:
                raise UnknownGenerator(name)
            made = maker(json.loads(params_json))
            with self._lock:
                inst = self._instances.setdefault(key, made)
        return inst


GENERATORS = GeneratorRegistry()


# ---------------------------------------------------------------------------
# Evaluation

@lru_cache(maxsize=None)
def compile_map(e: MapExpr) -> Callable[[int], int]:
    """Compile a term to a plain closure; cached per term."""
    if isinstance(e, Id):
        return lambda x: x
    if isinstance(e, Const):
        c = e.c
        return lambda x: c
    if isinstance(e, AffineMod):
        m, rules = e.m, e.rules
        if m == 1:
            a, b = rules[0]
            return lambda x: a * x + b
        def aff(x, m=m, rules=rules):
            q, r = divmod(x, m)
            a, b = rules[r]
            return a * q + b
        return aff
    if isinstance(e, PiecewiseMod):
        m = e.m
        branches = tuple(compile_map(b) for b in e.branches)
        def piece(x, m=m, branches=branches):
            q, r = divmod(x, m)
            return branches[r](q)
        return piece
    if isinstance(e, Compose):
        fc, gc = compile_map(e.f), compile_map(e.g)
        return lambda x: gc(fc(x))
    if isinstance(e, PackPair):
        fc, gc = compile_map(e.f), compile_map(e.g)
        return lambda x: pack(fc(x), gc(x))
    if isinstance(e, UnpackFirst):
        return lambda x: unpack(x)[0]
    if isinstance(e, UnpackSecond):
        return lambda x: unpack(x)[1]
    if isinstance(e, Patch):
        fc = compile_map(e.f)
        tbl = dict(e.table)
        return lambda x: tbl[x] if x in tbl else fc(x)
    if isinstance(e, Opaque):
        return GENERATORS.instance(e.gen, e.params_json)
    raise TermError(f"cannot compile {e!r}")


def evaluate(e: MapExpr, x: int) -> int:
    if x < 0:
        raise ValueError("maps are defined on the naturals")
    return compile_map(e)(x)


# ---------------------------------------------------------------------------
# Serialization

def to_json(e: MapExpr) -> dict:
    if isinstance(e, Id):
        return {"op": "Id"}
    if isinstance(e, Const):
        return {"op": "Const", "c": e.c}
    if isinstance(e, AffineMod):
        return {"op": "AffineMod", "m": e.m, "rules": [list(r) for r in e.rules]}
    if isinstance(e, PiecewiseMod):
        return {"op": "PiecewiseMod", "m": e.m,
                "branches": [to_json(b) for b in e.branches]}
    if isinstance(e, Compose):
        return {"op": "Compose", "f": to_json(e.f), "g": to_json(e.g)}
    if isinstance(e, PackPair):
        return {"op": "PackPair", "f": to_json(e.f), "g": to_json(e.g)}
    if isinstance(e, UnpackFirst):
        return {"op": "UnpackFirst"}
    if isinstance(e, UnpackSecond):
        return {"op": "UnpackSecond"}
    if isinstance(e, Patch):
        return {"op": "Patch", "f": to_json(e.f), "table": [list(r) for r in e.table]}
    if isinstance(e, Opaque):
        return {"op": "Opaque", "gen": e.gen, "params": e.params}
    raise TermError(f"cannot serialize {e!r}")


def from_json(d: dict) -> MapExpr:
    op = d["op"]
    if op == "Id":
        return Id()
    if op == "Const":
        return Const(d["c"])
    if op == "AffineMod":
        return AffineMod(d["m"], tuple((a, b) for a, b in d["rules"]))
    if op == "PiecewiseMod":
        return PiecewiseMod(d["m"], tuple(from_json(b) for b in d["branches"]))
    if op == "Compose":
        return Compose(from_json(d["f"]), from_json(d["g"]))
    if op == "PackPair":
        return PackPair(from_json(d["f"]), from_json(d["g"]))
    if op == "UnpackFirst":
        return UnpackFirst()
    if op == "UnpackSecond":
        return UnpackSecond()
    if op == "Patch":
        return Patch(from_json(d["f"]), tuple((k, v) for k, v in d["table"]))
    if op == "Opaque":
        return opaque(d["gen"], d["params"])
    raise TermError(f"unknown op {op!r}")


def dumps(e: MapExpr) -> str:
    return json.dumps(to_json(e), sort_keys=True, separators=(",", ":"))


def loads(s: str) -> MapExpr:
    return from_json(json.loads(s))
