"""Canonical generator maps and the reusable Opaque generator kit.

Fixed instantiations (the rest of the package and all fixtures depend on
these exact choices):

* ``ALPHA_HAT``  x |-> 2x   and  ``BETA_HAT``  x |-> 2x+1.  Two injections
  whose images (evens, odds) are disjoint and cover N, so membership and
  complements are decidable in closed form.
* ``ALPHA_TILDE`` / ``BETA_TILDE``: the coordinate projections through the
  Cantor pairing, i.e. unpack-first / unpack-second.  Both are surjections
  all of whose kernel classes are infinite.

The Opaque generators registered here are the workhorses for derived
capabilities: incremental preimage/rank scans, set-builder enumerators
over indicator terms, order-isomorphisms between decidable sets, and the
two-family interleaving used to build a common refinement of kernel
partitions.  All of them are pure in (name, params, x) and keep
append-only memo state, so repeated evaluation is cheap and idempotent.
"""

from __future__ import annotations

import bisect
import heapq
from collections import deque

from .terms import (AffineMod, BudgetExhausted, Compose, Const, GENERATORS, Id,
                    MapExpr, PackPair, PiecewiseMod, UnpackFirst, UnpackSecond,
                    compile_map, from_json, opaque, pack, scan_limit, to_json,
                    unpack)

ALPHA_HAT = AffineMod(1, ((2, 0),))
BETA_HAT = AffineMod(1, ((2, 1),))
ALPHA_TILDE = UnpackFirst()
BETA_TILDE = UnpackSecond()

DOUBLE = AffineMod(1, ((2, 0),))
DOUBLE_PLUS1 = AffineMod(1, ((2, 1),))


def gamma_hat(theta: MapExpr, phi: MapExpr) -> MapExpr:
    """The map with ALPHA_HAT . g = theta and BETA_HAT . g = phi.

    Sends 2q to theta(q) and 2q+1 to phi(q); its image is the union of
    the two images, and it is injective whenever theta and phi are
    injective with disjoint images.
    """
    return PiecewiseMod(2, (theta, phi))


def gamma_tilde(theta: MapExpr, phi: MapExpr) -> MapExpr:
    """The map with g . ALPHA_TILDE = theta and g . BETA_TILDE = phi.

    Sends x to pack(theta(x), phi(x)); its kernel is the intersection of
    the two kernels.
    """
    return PackPair(theta, phi)


def constant(y: int) -> MapExpr:
    return Const(y)


# ---------------------------------------------------------------------------
# Closed-form indicator / enumerator builders

ALWAYS = Const(1)
NEVER = Const(0)


def residue_indicator(m: int, c: int) -> MapExpr:
    """Indicator of the arithmetic progression {m*q + c}."""
    return AffineMod(m, tuple((0, 1 if r == c else 0) for r in range(m)))


def residue_complement_enum(m: int, c: int) -> MapExpr:
    """Increasing enumeration of N minus the progression {m*q + c}; m >= 2."""
    others = [r for r in range(m) if r != c]
    return AffineMod(m - 1, tuple((m, r) for r in others))


EVEN_INDICATOR = residue_indicator(2, 0)
ODD_INDICATOR = residue_indicator(2, 1)


def ind_or(*terms: MapExpr) -> MapExpr:
    return opaque("ind_or", {"terms": [to_json(t) for t in terms]})


def ind_and(*terms: MapExpr) -> MapExpr:
    return opaque("ind_and", {"terms": [to_json(t) for t in terms]})


def ind_not(term: MapExpr) -> MapExpr:
    return opaque("ind_not", {"term": to_json(term)})


def eq_maps_indicator(f: MapExpr, g: MapExpr) -> MapExpr:
    """Indicator of {x : f(x) == g(x)}."""
    return opaque("ind_eq", {"f": to_json(f), "g": to_json(g)})


def select_enum(require=(), forbid=()) -> MapExpr:
    """Increasing enumeration of {v : all require hold, no forbid holds}."""
    return opaque("select_enum", {
        "require": [to_json(t) for t in require],
        "forbid": [to_json(t) for t in forbid],
    })


def complement_enum(member: MapExpr) -> MapExpr:
    """Increasing enumeration of the zero set of an indicator."""
    return select_enum(forbid=(member,))


def preimage_enum(f: MapExpr) -> MapExpr:
    """Packed preimage enumerator: pack(y, i) |-> i-th v with f(v) = y."""
    return opaque("preimage_enum", {"map": to_json(f)})


def kernel_rank(f: MapExpr) -> MapExpr:
    """x |-> position of x in the increasing enumeration of its kernel class."""
    return opaque("kernel_rank", {"map": to_json(f)})


def drop_values(base: MapExpr, drop) -> MapExpr:
    """Enumerator `base` with finitely many output values removed."""
    return opaque("drop_values", {"base": to_json(base), "drop": sorted(drop)})


def merge_enums(*enums: MapExpr) -> MapExpr:
    """Increasing union of strictly increasing enumerators."""
    return opaque("merge_enum", {"enums": [to_json(t) for t in enums]})


def enum_membership(enum: MapExpr, stride: int = 1, offset: int = 0) -> MapExpr:
    """Indicator of {enum(stride*i + offset) : i in N} for increasing enum."""
    return opaque("enum_member", {
        "enum": to_json(enum), "stride": stride, "offset": offset})


def injective_image_indicator(f: MapExpr, base_member: MapExpr,
                              pre_indicator: MapExpr) -> MapExpr:
    """Indicator of f-image points whose (unique) f-preimage satisfies a test.

    Only meaningful for injective f with exact image indicator
    ``base_member``: v is accepted iff v lies in im f and the preimage
    point passes ``pre_indicator``.
    """
    return opaque("inj_image_through", {
        "map": to_json(f), "member": to_json(base_member),
        "pre": to_json(pre_indicator)})


def region_map(regions, default: MapExpr) -> MapExpr:
    """First-match piecewise map: [(indicator, map), ...] with fallback."""
    return opaque("region_map", {
        "regions": [[to_json(i), to_json(m)] for i, m in regions],
        "default": to_json(default)})


def order_embed(src: MapExpr, dst: MapExpr, stride: int = 1,
                offset: int = 0) -> MapExpr:
    """Rank transport from one decidable set into another.

    A point v with src(v) = 1 of src-rank r is sent to the
    (stride*r + offset)-th point of the dst set; off the src set the map
    falls back to the identity (callers fence it with region_map).
    stride 1 gives the order isomorphism, stride 2 an embedding whose
    image misses every other dst point.
    """
    return opaque("order_embed", {
        "src": to_json(src), "dst": to_json(dst),
        "stride": stride, "offset": offset})


def rank_transport(src_enum: MapExpr, dst_map: MapExpr) -> MapExpr:
    """v = src_enum(i) |-> dst_map(i); identity off the enumerated set."""
    return opaque("rank_transport", {
        "src_enum": to_json(src_enum), "dst_map": to_json(dst_map)})


def bijection_inverse(f: MapExpr) -> MapExpr:
    """Pointwise inverse of a bijection, computed by incremental scan."""
    return opaque("bijection_inverse", {"map": to_json(f)})


def set_rank(ind: MapExpr) -> MapExpr:
    """x |-> number of points below x satisfying the indicator.

    On the indicator's 1-set this is the rank within the increasing
    enumeration; elsewhere it is still defined (the count), so region
    fencing is up to the caller.
    """
    return opaque("set_rank", {"ind": to_json(ind)})


def interleave_class_of(a_class_of: MapExpr, b_class_of: MapExpr) -> MapExpr:
    """Class map of the interleaved common refinement of two kernel families."""
    return opaque("dbl_interleave", {
        "a": to_json(a_class_of), "b": to_json(b_class_of)})


# ---------------------------------------------------------------------------
# Generator implementations


def _budget_guard(steps: int, what: str):
    if steps > scan_limit():
        raise BudgetExhausted(f"{what}: scan budget exhausted after {steps} steps")


def _make_ind_or(params):
    fns = [compile_map(from_json(t)) for t in params["terms"]]
    return lambda x: 1 if any(f(x) for f in fns) else 0


def _make_ind_and(params):
    fns = [compile_map(from_json(t)) for t in params["terms"]]
    return lambda x: 1 if all(f(x) for f in fns) else 0


def _make_ind_not(params):
    f = compile_map(from_json(params["term"]))
    return lambda x: 0 if f(x) else 1


def _make_ind_eq(params):
    f = compile_map(from_json(params["f"]))
    g = compile_map(from_json(params["g"]))
    return lambda x: 1 if f(x) == g(x) else 0


def _make_select_enum(params):
    require = [compile_map(from_json(t)) for t in params["require"]]
    forbid = [compile_map(from_json(t)) for t in params["forbid"]]
    hits: list[int] = []
    state = {"v": 0}

    def at(i: int) -> int:
        steps = 0
        while len(hits) <= i:
            v = state["v"]
            state["v"] = v + 1
            steps += 1
            _budget_guard(steps, "select_enum")
            if all(r(v) for r in require) and not any(f(v) for f in forbid):
                hits.append(v)
        return hits[i]

    return at


def _make_preimage_enum(params):
    f = compile_map(from_json(params["map"]))
    found: dict[int, list[int]] = {}
    state = {"v": 0}

    def at(packed: int) -> int:
        y, i = unpack(packed)
        hits = found.setdefault(y, [])
        steps = 0
        while len(hits) <= i:
            v = state["v"]
            state["v"] = v + 1
            steps += 1
            _budget_guard(steps, "preimage_enum")
            found.setdefault(f(v), []).append(v)
        return hits[i]

    return at


def _make_kernel_rank(params):
    f = compile_map(from_json(params["map"]))
    found: dict[int, list[int]] = {}
    state = {"v": 0}

    def rank(x: int) -> int:
        steps = 0
        while state["v"] <= x:
            v = state["v"]
            state["v"] = v + 1
            steps += 1
            _budget_guard(steps, "kernel_rank")
            found.setdefault(f(v), []).append(v)
        return bisect.bisect_left(found[f(x)], x)

    return rank


def _make_drop_values(params):
    base = compile_map(from_json(params["base"]))
    drop = set(params["drop"])
    hits: list[int] = []
    state = {"j": 0}

    def at(i: int) -> int:
        steps = 0
        while len(hits) <= i:
            v = base(state["j"])
            state["j"] += 1
            steps += 1
            _budget_guard(steps, "drop_values")
            if v not in drop:
                hits.append(v)
        return hits[i]

    return at


def _make_merge_enum(params):
    enums = [compile_map(from_json(t)) for t in params["enums"]]
    hits: list[int] = []
    heap = [(e(0), k, 0) for k, e in enumerate(enums)]
    heapq.heapify(heap)

    def at(i: int) -> int:
        steps = 0
        while len(hits) <= i:
            steps += 1
            _budget_guard(steps, "merge_enum")
            v, k, j = heapq.heappop(heap)
            if not hits or hits[-1] != v:
                hits.append(v)
            heapq.heappush(heap, (enums[k](j + 1), k, j + 1))
        return hits[i]

    return at


def _make_enum_member(params):
    enum = compile_map(from_json(params["enum"]))
    stride, offset = params["stride"], params["offset"]
    seen: set[int] = set()
    state = {"i": 0, "max": -1}

    def member(x: int) -> int:
        steps = 0
        while state["max"] < x:
            v = enum(stride * state["i"] + offset)
            state["i"] += 1
            state["max"] = v
            seen.add(v)
            steps += 1
            _budget_guard(steps, "enum_member")
        return 1 if x in seen else 0

    return member


def _make_inj_image_through(params):
    f = compile_map(from_json(params["map"]))
    member = compile_map(from_json(params["member"]))
    pre = compile_map(from_json(params["pre"]))
    # incremental preimage index for the injective map
    pre_of: dict[int, int] = {}
    state = {"v": 0}

    def test(x: int) -> int:
        if not member(x):
            return 0
        steps = 0
        while x not in pre_of:
            v = state["v"]
            state["v"] = v + 1
            steps += 1
            _budget_guard(steps, "inj_image_through")
            pre_of.setdefault(f(v), v)
        return 1 if pre(pre_of[x]) else 0

    return test


def _make_region_map(params):
    regions = [(compile_map(from_json(i)), compile_map(from_json(m)))
               for i, m in params["regions"]]
    default = compile_map(from_json(params["default"]))

    def apply(x: int) -> int:
        for ind, fn in regions:
            if ind(x):
                return fn(x)
        return default(x)

    return apply


class _SetScan:
    """Incremental increasing enumeration + rank for an indicator's 1-set."""

    def __init__(self, ind, what):
        self.ind = ind
        self.what = what
        self.hits: list[int] = []
        self.cursor = 0

    def at(self, i: int) -> int:
        steps = 0
        while len(self.hits) <= i:
            v = self.cursor
            self.cursor += 1
            steps += 1
            _budget_guard(steps, self.what)
            if self.ind(v):
                self.hits.append(v)
        return self.hits[i]

    def rank(self, x: int) -> int:
        steps = 0
        while self.cursor <= x:
            v = self.cursor
            self.cursor += 1
            steps += 1
            _budget_guard(steps, self.what)
            if self.ind(v):
                self.hits.append(v)
        return bisect.bisect_left(self.hits, x)


def _make_order_embed(params):
    src = _SetScan(compile_map(from_json(params["src"])), "order_embed/src")
    dst = _SetScan(compile_map(from_json(params["dst"])), "order_embed/dst")
    stride, offset = params["stride"], params["offset"]

    def apply(x: int) -> int:
        if not src.ind(x):
            return x
        r = src.rank(x)
        return dst.at(stride * r + offset)

    return apply


def _make_rank_transport(params):
    src_enum = compile_map(from_json(params["src_enum"]))
    dst_map = compile_map(from_json(params["dst_map"]))
    index: dict[int, int] = {}
    state = {"i": 0, "max": -1}

    def apply(x: int) -> int:
        steps = 0
        while state["max"] < x:
            v = src_enum(state["i"])
            index.setdefault(v, state["i"])
            state["i"] += 1
            state["max"] = v
            steps += 1
            _budget_guard(steps, "rank_transport")
        if x in index:
            return dst_map(index[x])
        return x

    return apply


def _make_bijection_inverse(params):
    f = compile_map(from_json(params["map"]))
    pre_of: dict[int, int] = {}
    state = {"v": 0}

    def inv(x: int) -> int:
        steps = 0
        while x not in pre_of:
            v = state["v"]
            state["v"] = v + 1
            steps += 1
            _budget_guard(steps, "bijection_inverse")
            pre_of.setdefault(f(v), v)
        return pre_of[x]

    return inv


def _make_set_rank(params):
    scan = _SetScan(compile_map(from_json(params["ind"])), "set_rank")
    return scan.rank


# ---------------------------------------------------------------------------
# Interleaved refinement of two kernel families

class InterleaveTabulator:
    """Stagewise selection producing a common refinement class family.

    Stage t decodes to a quadruple (a, b, c, n) through the fixed pairing
    (n the parity bit, then two unpacks); it selects the least not yet
    selected element of family-A class a if n = 0, of family-B class a
    if n = 1, and files the selected element under refinement class c.
    Every point is eventually selected because stages revisiting any
    fixed class recur infinitely often and always consume its least
    unselected element; `class_of` therefore terminates, with a stage
    budget guarding dishonest families.
    """

    def __init__(self, a_class_of, b_class_of):
        self.fams = (a_class_of, b_class_of)
        self.queues: list[dict[int, deque]] = [{}, {}]
        self.cursor = [0, 0]
        self.selected: dict[int, int] = {}   # value -> refinement class
        self.log: list[tuple[int, int, int, int, int]] = []  # (v, a, b, c, n)
        self.stage = 0

    @staticmethod
    def decode(stage: int) -> tuple[int, int, int, int]:
        n = stage & 1
        a, rest = unpack(stage >> 1)
        b, c = unpack(rest)
        return a, b, c, n

    def _least_unused(self, fam: int, cls: int) -> int:
        q = self.queues[fam].setdefault(cls, deque())
        steps = 0
        while True:
            while not q:
                v = self.cursor[fam]
                self.cursor[fam] = v + 1
                steps += 1
                _budget_guard(steps, "dbl_interleave/feed")
                self.queues[fam].setdefault(self.fams[fam](v), deque()).append(v)
            v = q.popleft()
            if v not in self.selected:
                return v

    def run_stage(self) -> tuple[int, int, int, int, int]:
        a, b, c, n = self.decode(self.stage)
        v = self._least_unused(n, a)
        self.selected[v] = c
        self.log.append((v, a, b, c, n))
        self.stage += 1
        return v, a, b, c, n

    def run_until_stage(self, stage: int) -> None:
        while self.stage < stage:
            self.run_stage()

    def class_of(self, x: int) -> int:
        steps = 0
        while x not in self.selected:
            self.run_stage()
            steps += 1
            _budget_guard(steps, "dbl_interleave/class_of")
        return self.selected[x]

    def __call__(self, x: int) -> int:
        return self.class_of(x)


def _make_dbl_interleave(params):
    a = compile_map(from_json(params["a"]))
    b = compile_map(from_json(params["b"]))
    return InterleaveTabulator(a, b)


def interleave_tabulator(a_class_of: MapExpr, b_class_of: MapExpr) -> InterleaveTabulator:
    """The shared tabulator instance behind interleave_class_of(a, b)."""
    term = interleave_class_of(a_class_of, b_class_of)
    return GENERATORS.instance(term.gen, term.params_json)


for _name, _maker in [
    ("ind_or", _make_ind_or),
    ("ind_and", _make_ind_and),
    ("ind_not", _make_ind_not),
    ("ind_eq", _make_ind_eq),
    ("select_enum", _make_select_enum),
    ("preimage_enum", _make_preimage_enum),
    ("kernel_rank", _make_kernel_rank),
    ("drop_values", _make_drop_values),
    ("merge_enum", _make_merge_enum),
    ("enum_member", _make_enum_member),
    ("inj_image_through", _make_inj_image_through),
    ("region_map", _make_region_map),
    ("order_embed", _make_order_embed),
    ("rank_transport", _make_rank_transport),
    ("bijection_inverse", _make_bijection_inverse),
    ("set_rank", _make_set_rank),
    ("dbl_interleave", _make_dbl_interleave),
]:
    if not GENERATORS.registered(_name):
        GENERATORS.register(_name, _maker)
