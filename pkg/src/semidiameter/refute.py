"""Depth-bounded refuters with independently replayable certificates.

Each refuter takes a candidate finite generating set U (elements with
capabilities, or pairs of them) and a depth K, and produces elements
provably not connected by any U-sequence of length at most K, packaged
as a ``RefutationCertificate``: the constructed maps, the finite
obstruction data the argument rests on, and a list of finite assertions.
``check_certificate`` replays every assertion from the serialized data
alone, so a certificate can be audited without trusting the construction
code.  Unbounded statements ("the universal congruence is not finitely
generated at all") are the K -> infinity schema of these refutations and
are never asserted by code.

Relation words: a right word over U is an alternating composite
a1 b1^-1 a2 b2^-1 ...; a depth-K right derivation between two maps
forces some word of length <= K to sit inside (first)(second)^-1, so
exhibiting, for every such word, a pair inside the word whose
coordinates the two constructed maps separate kills every candidate
derivation at once.  Left words mirror this with a1^-1 b1 a2^-1 b2 ...
and the containment reversed: the constructed pair must lie inside
theta^-1 phi but outside every word.

Fresh obstruction points come from a reserved block far above all probed
windows (FRESH_BASE) so they cannot interfere with scans.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Optional, Sequence

from . import combinators as cb
from .capability import (Capability, FINITE, MissingCapability,
                         verify_equal_on_window)
from .sequences import DerivationSequence, WitnessResult, verify_sequence
from .terms import (AffineMod, Compose, Const, Id, MapExpr, Patch,
                    PiecewiseMod, UnpackFirst, compile_map, evaluate,
                    from_json, pack, to_json)

FRESH_BASE = 1 << 20

FWD, INV = "fwd", "inv"


class RefutationError(RuntimeError):
    """The refuter could not assemble its obstruction data."""


class SoundnessViolation(AssertionError):
    """A refutation and a witness for the same (U, K) both validated."""


# ---------------------------------------------------------------------------
# Relation words


def sigma_words(units: Sequence[MapExpr], max_k: int, side: str):
    """All alternating words of length <= max_k over the unit set.

    Yields lists of (term, direction) pairs: for the right side
    a1 b1^-1 a2 b2^-1 ..., for the left side a1^-1 b1 a2^-1 b2 ... .
    The count is the sum over k <= max_k of |units|^(2k).
    """
    n = len(units)
    first_dir, second_dir = (FWD, INV) if side == "right" else (INV, FWD)
    for k in range(1, max_k + 1):
        for code in range(n ** (2 * k)):
            idx, c = [], code
            for _ in range(2 * k):
                idx.append(c % n)
                c //= n
            word = []
            for j in range(k):
                word.append((units[idx[2 * j]], first_dir))
                word.append((units[idx[2 * j + 1]], second_dir))
            yield word


class InverseTables:
    """Shared preimage tables: map term -> {value: [preimages < budget]}."""

    def __init__(self, budget: int):
        self.budget = budget
        self._tables: dict[MapExpr, dict[int, list[int]]] = {}

    def table(self, term: MapExpr) -> dict[int, list[int]]:
        tbl = self._tables.get(term)
        if tbl is None:
            fc = compile_map(term)
            tbl = {}
            for u in range(self.budget):
                tbl.setdefault(fc(u), []).append(u)
            self._tables[term] = tbl
        return tbl

    def pre_point(self, term: MapExpr, value: int) -> Optional[int]:
        hits = self.table(term).get(value)
        return hits[0] if hits else None


def evaluate_word(word, x: int, budget: int = 4096,
                  tables: Optional[InverseTables] = None) -> set[int]:
    """Bounded set evaluation of a relation word at a point.

    Forward letters map the running set pointwise; inverse letters take
    preimages found by scanning [0, budget).  Exact whenever every
    needed fibre lies inside the scan range; otherwise a deterministic
    budget-bounded under-approximation, so certificates replay
    bit-for-bit at the recorded budget.
    """
    tables = tables or InverseTables(budget)
    cur = {x}
    for term, direction in word:
        if not cur:
            return set()
        if direction == FWD:
            fc = compile_map(term)
            cur = {fc(v) for v in cur}
        else:
            tbl = tables.table(term)
            nxt: set[int] = set()
            for v in cur:
                nxt.update(tbl.get(v, ()))
            cur = nxt
    return cur


# ---------------------------------------------------------------------------
# Certificates and the standalone checker


@dataclass
class RefutationCertificate:
    data: dict

    @property
    def kind(self) -> str:
        return self.data["kind"]

    @property
    def depth(self) -> Optional[int]:
        return self.data.get("depth")

    @property
    def claim(self) -> str:
        return self.data["claim"]

    def to_json(self) -> dict:
        return self.data

    def dumps(self) -> str:
        return json.dumps(self.data, sort_keys=True, indent=1)

    @staticmethod
    def from_json(d: dict) -> "RefutationCertificate":
        return RefutationCertificate(d)


@dataclass(frozen=True)
class ReplayReport:
    ok: bool
    assertions_checked: int
    failed_index: Optional[int] = None
    detail: Optional[dict] = None


class _CertBuilder:
    def __init__(self, kind, side, depth, claim):
        self.data = {
            "format": "refutation/1",
            "kind": kind, "side": side, "depth": depth, "claim": claim,
            "generators": [], "defs": {}, "assertions": [], "notes": [],
        }

    def gen(self, term: MapExpr):
        self.data["generators"].append(to_json(term))

    def define(self, name: str, term: MapExpr) -> str:
        self.data["defs"][name] = to_json(term)
        return name

    def note(self, text: str):
        self.data["notes"].append(text)

    def assert_(self, **kw):
        self.data["assertions"].append(kw)

    def eval_eq(self, t, x, val):
        self.assert_(a="eval", t=t, x=x, eq=val)

    def eq_pair(self, t1, x1, t2, x2):
        self.assert_(a="eq_pair", l=[t1, x1], r=[t2, x2])

    def ne_pair(self, t1, x1, t2, x2):
        self.assert_(a="ne_pair", l=[t1, x1], r=[t2, x2])

    def distinct(self, vals):
        self.assert_(a="distinct", vals=list(vals))

    def not_in(self, val, values):
        self.assert_(a="not_in", val=val, set=sorted(set(values)))

    def pattern_match(self, left, right):
        self.assert_(a="pattern_match", left=list(left), right=list(right))

    def window_never(self, t, n, val):
        self.assert_(a="window_never", t=t, n=n, val=val)

    def window_injective(self, t, n):
        self.assert_(a="window_injective", t=t, n=n)

    def window_covered(self, member, mapped, n, scan):
        self.assert_(a="window_covered", member=member, map=mapped, n=n,
                     scan=scan)

    def window_zero_on(self, cond, t, n):
        self.assert_(a="window_zero_on", cond=cond, t=t, n=n)

    def count_zero_ge(self, t, n, minimum):
        self.assert_(a="count_zero_ge", t=t, n=n, min=minimum)

    def rel_member(self, word, x, val, budget, member=True):
        self.assert_(a="rel_in" if member else "rel_not_in",
                     word=[[w if isinstance(w, str) else to_json(w), d]
                           for w, d in word],
                     x=x, val=val, budget=budget)

    def build(self) -> RefutationCertificate:
        return RefutationCertificate(self.data)


def _resolve(defs: dict, ref) -> MapExpr:
    if isinstance(ref, str):
        return from_json(defs[ref])
    return from_json(ref)


def check_certificate(cert: RefutationCertificate | dict) -> ReplayReport:
    """Replay every finite assertion of a certificate from serialized data."""
    data = cert.data if isinstance(cert, RefutationCertificate) else cert
    defs = data.get("defs", {})
    tables: dict[int, InverseTables] = {}
    for i, a in enumerate(data.get("assertions", [])):
        try:
            ok, detail = _check_one(a["a"], a, defs, tables)
        except Exception as exc:   # malformed data counts as a failed replay
            return ReplayReport(False, i, i, {"error": repr(exc)})
        if not ok:
            return ReplayReport(False, i, i, detail)
    return ReplayReport(True, len(data.get("assertions", [])))


def _check_one(kind, a, defs, tables):
    if kind == "eval":
        got = evaluate(_resolve(defs, a["t"]), a["x"])
        return got == a["eq"], {"got": got, "want": a["eq"], "x": a["x"]}
    if kind in ("eq_pair", "ne_pair"):
        (t1, x1), (t2, x2) = a["l"], a["r"]
        v1 = evaluate(_resolve(defs, t1), x1)
        v2 = evaluate(_resolve(defs, t2), x2)
        ok = (v1 == v2) if kind == "eq_pair" else (v1 != v2)
        return ok, {"left": v1, "right": v2}
    if kind == "distinct":
        vals = a["vals"]
        return len(set(vals)) == len(vals), {"vals": vals}
    if kind == "not_in":
        return a["val"] not in set(a["set"]), {"val": a["val"]}
    if kind == "pattern_match":
        left, right = a["left"], a["right"]
        if len(left) != len(right):
            return False, {"reason": "length mismatch"}
        ok = all((left[i] == left[j]) == (right[i] == right[j])
                 for i in range(len(left)) for j in range(len(left)))
        return ok, {}
    if kind == "window_never":
        fc = compile_map(_resolve(defs, a["t"]))
        for x in range(a["n"]):
            if fc(x) == a["val"]:
                return False, {"x": x}
        return True, {}
    if kind == "window_injective":
        fc = compile_map(_resolve(defs, a["t"]))
        seen = {}
        for x in range(a["n"]):
            v = fc(x)
            if v in seen:
                return False, {"collision": (seen[v], x)}
            seen[v] = x
        return True, {}
    if kind == "window_covered":
        member = compile_map(_resolve(defs, a["member"]))
        fc = compile_map(_resolve(defs, a["map"]))
        attained = {fc(u) for u in range(a["scan"])}
        for v in range(a["n"]):
            if not member(v) and v not in attained:
                return False, {"uncovered": v}
        return True, {}
    if kind == "window_zero_on":
        cond = compile_map(_resolve(defs, a["cond"]))
        fc = compile_map(_resolve(defs, a["t"]))
        for x in range(a["n"]):
            if cond(x) and fc(x) != 0:
                return False, {"x": x}
        return True, {}
    if kind == "count_zero_ge":
        fc = compile_map(_resolve(defs, a["t"]))
        count = sum(1 for x in range(a["n"]) if fc(x) == 0)
        return count >= a["min"], {"count": count, "min": a["min"]}
    if kind in ("rel_in", "rel_not_in"):
        word = [(_resolve(defs, w), d) for w, d in a["word"]]
        shared = tables.setdefault(a["budget"], InverseTables(a["budget"]))
        got = evaluate_word(word, a["x"], a["budget"], shared)
        inside = a["val"] in got
        return inside == (kind == "rel_in"), {"set_size": len(got)}
    raise ValueError(f"unknown assertion type {kind!r}")


# ---------------------------------------------------------------------------
# Ideal-generation refuters


def refute_right_ideal_fg(units: Sequence[tuple[MapExpr, Capability]],
                          window: int = 512) -> RefutationCertificate:
    """No finite set of non-injective maps generates them all as a right
    ideal: a map separating every listed kernel pair escapes.

    Each unit must carry a collision witness.  The escaping map fixes
    all witness points and collapses two fresh ones, so it stays
    non-injective while refusing to factor through any unit (a factor
    u*s would have to collapse whatever u collapses).
    """
    b = _CertBuilder("right-ideal-fg", "right", None,
                     "theta lies in no unit * S^1, so the units do not "
                     "generate the right ideal")
    witnesses = []
    for term, cap in units:
        if cap.collision is None:
            raise MissingCapability("every unit needs a collision witness")
        witnesses.append(cap.collision)
        b.gen(term)
    fresh = FRESH_BASE + 2 * max([0] + [max(w) for w in witnesses])
    theta = Patch(Id(), ((fresh + 1, fresh),))
    b.define("theta", theta)
    for i, (term, _) in enumerate(units):
        x, y = witnesses[i]
        name = b.define(f"u{i}", term)
        b.distinct([x, y])
        b.eq_pair(name, x, name, y)          # the unit collapses the pair
        b.eval_eq("theta", x, x)             # theta separates it again
        b.eval_eq("theta", y, y)
        b.ne_pair("theta", x, "theta", y)
    b.eq_pair("theta", fresh, "theta", fresh + 1)   # theta is non-injective
    b.distinct([fresh, fresh + 1])
    if not units:
        b.note("empty unit set: the generated ideal is empty, theta escapes")
    return b.build()


def refute_left_ideal_fg(units: Sequence[tuple[MapExpr, Capability]],
                         window: int = 512) -> RefutationCertificate:
    """Dual statement for left ideals of non-surjective maps.

    Each unit certifies a missing point; a map fixing all of them while
    missing only a fresh point cannot factor as s * unit (its image
    would then avoid the unit's missing point).
    """
    b = _CertBuilder("left-ideal-fg", "left", None,
                     "theta lies in no S^1 * unit, so the units do not "
                     "generate the left ideal")
    missing = []
    for term, cap in units:
        if cap.image_complement is None or cap.image_complement.is_empty:
            raise MissingCapability("every unit needs a certified missing point")
        missing.append(cap.image_complement.value_at(0))
        b.gen(term)
    fresh = FRESH_BASE + 2 * max([0] + missing)
    theta = Patch(Id(), ((fresh, fresh + 1),))
    b.define("theta", theta)
    for i, (term, cap) in enumerate(units):
        x = missing[i]
        name = b.define(f"u{i}", term)
        comp = cap.image_complement
        if comp.kind == FINITE:
            b.note(f"u{i} misses exactly {list(comp.values)}")
        else:
            cname = b.define(f"comp{i}", comp.enum)
            b.eval_eq(cname, 0, x)
        b.window_never(name, window, x)      # spot check: x is not attained
        b.eval_eq("theta", x, x)             # but theta attains it
    b.eval_eq("theta", fresh, fresh + 1)
    b.window_never("theta", window, fresh)   # theta misses the fresh point
    if not units:
        b.note("empty unit set: vacuous, any non-surjective map escapes")
    return b.build()


# ---------------------------------------------------------------------------
# Congruence-depth refuters via relation words


def refute_right_cong_depth(units: Sequence[tuple[MapExpr, Capability]],
                            depth: int, budget: int = 4096,
                            probe: int = 64) -> RefutationCertificate:
    """D_r(S, U) > depth for finite-to-one units with cofinite images.

    For every right word of length <= depth a pair inside the word is
    chosen with spread, distinct coordinates; two finite-support
    permutations then send first coordinates into a fresh even block and
    second coordinates into the odd block, so no word fits inside
    theta phi^-1, and with it no derivation of length <= depth.
    """
    for term, cap in units:
        if not cap.cert_finite_to_one:
            raise MissingCapability("units must be certified finite-to-one")
        comp = cap.image_complement
        if comp is None or comp.kind != FINITE or not comp.exact:
            raise MissingCapability(
                "units must have a certified finite image complement")
    terms = [t for t, _ in units]
    b = _CertBuilder("right-cong-depth", "right", depth,
                     f"no right derivation of length <= {depth} joins "
                     "theta to phi over the units")
    unit_names = {}
    for i, t in enumerate(terms):
        b.gen(t)
        unit_names[id(t)] = b.define(f"u{i}", t)

    tables = InverseTables(budget)
    # first and second coordinates feed two different permutations, so
    # each family must be distinct on its own; cross-collisions are fine
    chosen_x: set[int] = set()
    chosen_y: set[int] = set()
    live, empty_count = [], 0
    prev_x = prev_y = -2
    for word in sigma_words(terms, depth, "right"):
        found = None
        x = prev_x + 2
        for _ in range(probe):
            if x not in chosen_x:
                for y in sorted(evaluate_word(word, x, budget, tables)):
                    if y >= prev_y + 2 and y not in chosen_y:
                        found = (x, y)
                        break
            if found:
                break
            x += 1
        if found is None:
            empty_count += 1
            continue
        xi, yi = found
        chosen_x.add(xi)
        chosen_y.add(yi)
        prev_x, prev_y = xi, yi
        live.append((word, xi, yi))
    if not live:
        raise RefutationError("no word produced an obstruction pair")
    if empty_count:
        b.note(f"{empty_count} word(s) produced no pair within the probe "
               "budget; treated as empty")

    theta_tbl, phi_tbl = {}, {}
    for i, (_, x, y) in enumerate(live):
        ev, od = 2 * (FRESH_BASE + i), 2 * (FRESH_BASE + i) + 1
        theta_tbl[x] = ev
        theta_tbl[ev] = x
        phi_tbl[y] = od
        phi_tbl[od] = y
    b.define("theta", Patch(Id(), tuple(sorted(theta_tbl.items()))))
    b.define("phi", Patch(Id(), tuple(sorted(phi_tbl.items()))))

    b.distinct([x for (_, x, _) in live])
    b.distinct([y for (_, _, y) in live])
    for i, (word, x, y) in enumerate(live):
        named = [(unit_names[id(t)], d) for t, d in word]
        b.rel_member(named, x, y, budget, member=True)
        b.eval_eq("theta", x, 2 * (FRESH_BASE + i))
        b.eval_eq("phi", y, 2 * (FRESH_BASE + i) + 1)
        b.ne_pair("theta", x, "phi", y)
    x0 = live[0][1]
    b.ne_pair("theta", x0, "phi", x0)        # the endpoints differ
    return b.build()


def refute_left_cong_depth(units: Sequence[tuple[MapExpr, Capability]],
                           depth: int, budget: int = 4096,
                           ) -> RefutationCertificate:
    """D_l(S, U) > depth for finite-to-one units.

    For every left word the fibreward image of a probe point is a finite
    explicit set; a point outside it is paired to the probe by a
    finite-support permutation, so the pair sits in theta^-1 phi but in
    no word, and no derivation of length <= depth exists.
    """
    for term, cap in units:
        if not cap.cert_finite_to_one:
            raise MissingCapability("units must be certified finite-to-one")
    terms = [t for t, _ in units]
    b = _CertBuilder("left-cong-depth", "left", depth,
                     f"no left derivation of length <= {depth} joins "
                     "theta to phi over the units")
    unit_names = {}
    for i, t in enumerate(terms):
        b.gen(t)
        unit_names[id(t)] = b.define(f"u{i}", t)

    tables = InverseTables(budget)
    chosen: set[int] = set()
    data = []
    prev_x = prev_y = -2
    for word in sigma_words(terms, depth, "left"):
        x = prev_x + 2
        while x in chosen:
            x += 1
        reach = evaluate_word(word, x, budget, tables)
        y = max(prev_y + 2, 0)
        while y in reach or y in chosen or y == x:
            y += 1
        chosen.update((x, y))
        prev_x, prev_y = x, y
        data.append((word, x, y))

    phi_tbl = []
    for _, x, y in data:
        phi_tbl += [(x, y), (y, x)]
    b.define("theta", Id())
    b.define("phi", Patch(Id(), tuple(phi_tbl)))
    b.distinct([x for (_, x, _) in data] + [y for (_, _, y) in data])
    for word, x, y in data:
        named = [(unit_names[id(t)], d) for t, d in word]
        b.rel_member(named, x, y, budget, member=False)
        b.eval_eq("theta", x, x)
        b.eval_eq("phi", x, y)
    x0 = data[0][1]
    b.ne_pair("theta", x0, "phi", x0)
    return b.build()


# ---------------------------------------------------------------------------
# Colarge bookkeeping


@dataclass(frozen=True)
class ColargeProbe:
    bad_point: Optional[int]
    window: int
    leftover: int
    evidence: dict


def colarge_step(maps: Sequence[MapExpr], points: Sequence[int],
                 next_map: MapExpr, window: int = 2048,
                 threshold: Optional[int] = None) -> ColargeProbe:
    """Bounded instance of the one-bad-point principle.

    With Y the union of the listed fibres (points[i] under maps[i])
    already colarge, at most one x can make Y + (x-fibre of next_map)
    fail to be colarge.  The probe reports the next_map-value absorbing
    more than half of the window outside Y, if any, plus the leftover
    count so callers can insist on a margin.
    """
    if len(maps) != len(points):
        raise ValueError("maps and points must align")
    fcs = [compile_map(m) for m in maps]
    nc = compile_map(next_map)
    outside = [v for v in range(window)
               if all(fc(v) != p for fc, p in zip(fcs, points))]
    freq: dict[int, int] = {}
    for v in outside:
        val = nc(v)
        freq[val] = freq.get(val, 0) + 1
    bad = None
    if outside:
        top, count = max(freq.items(), key=lambda kv: kv[1])
        if count > len(outside) // 2:
            bad = top
    if threshold is None:
        threshold = max(8, window // 8)
    return ColargeProbe(bad, window, len(outside),
                        {"classes_seen": len(freq), "threshold": threshold})


# ---------------------------------------------------------------------------
# Depth-2 refuter below the Baer-Levi bound (right side)


def refute_right_depth2_bl(pair_set, window: int = 2048,
                           probe: int = 512) -> RefutationCertificate:
    """D_r(S, U) > 2 for a finite pair set U inside the injections.

    Replays the two-step analysis: intersecting pairs contribute matched
    points (x_i, y_i); avoided values rule the fresh w_i; a fixed sparse
    injection theta and an extension phi of a partial bijection built
    from the w/y/z data jointly cover the naturals, which no two-step
    derivation over U tolerates.
    """
    pairs = []
    for (g, cg), (d, cd) in pair_set:
        for cap in (cg, cd):
            if not cap.cert_injective or cap.image_member is None:
                raise MissingCapability(
                    "pair elements must be certified injective with image "
                    "indicators")
        pairs.append(((g, cg), (d, cd)))
        if g != d:
            pairs.append(((d, cd), (g, cg)))     # orientation closure

    b = _CertBuilder("right-depth2-bl", "right", 2,
                     "no right derivation of length <= 2 joins theta to phi "
                     "over the pair set")
    for (g, _), (d, _) in pair_set:
        b.gen(g)
        b.gen(d)

    inv = InverseTables(1 << 16)
    inter = []
    for (g, cg), (d, cd) in pairs:
        member = compile_map(cd.image_member)
        gc = compile_map(g)
        for x in range(probe):
            if member(gc(x)):
                inter.append(((g, cg), (d, cd), x))
                break
    if not inter:
        iota = cb.ALPHA_HAT
        icap = Capability(image_member=cb.EVEN_INDICATOR, cert_injective=True)
        inter.append(((iota, icap), (iota, icap), 0))
        b.note("no intersecting pair in U; augmented with the diagonal pair "
               "(even-stride, even-stride), which relates nothing new")

    xs, ys = [], []
    for (g, _), (d, _), x in inter:
        y = inv.pre_point(d, evaluate(g, x))
        if y is None:
            raise RefutationError("matched preimage point out of scan range")
        xs.append(x)
        ys.append(y)

    n = len(inter)
    avoided = set(ys)
    q_rows = []
    for j in range(n):
        for k in range(n):
            (gk, _), (dk, cdk), _ = inter[k]
            val = evaluate(gk, ys[j])
            if compile_map(cdk.image_member)(val):
                w_val = inv.pre_point(dk, val)
                if w_val is not None:
                    avoided.add(w_val)
                    q_rows.append((j, k, w_val))

    # w_i fresh, repeating exactly with the x pattern
    w_of_x: dict[int, int] = {}
    ws = []
    base = FRESH_BASE
    for x in xs:
        if x not in w_of_x:
            w_of_x[x] = base
            base += 1
        ws.append(w_of_x[x])

    theta = AffineMod(1, ((4, 0),))                      # sparse injection
    mem_theta = cb.residue_indicator(4, 0)
    # z_i inside im theta, off the x_i theta values, repeating with y pattern
    z_of_y: dict[int, int] = {}
    zs, z_args = [], []
    abase = FRESH_BASE + n + 1
    for y in ys:
        if y not in z_of_y:
            while abase in xs:
                abase += 1
            z_of_y[y] = abase
            abase += 1
        z_args.append(z_of_y[y])
        zs.append(4 * z_of_y[y])

    a_pts = sorted(set(ws) | set(ys))
    b_pts = sorted({4 * x for x in xs} | set(zs))
    in_a = Patch(Const(0), tuple((p, 1) for p in a_pts))
    in_b = Patch(Const(0), tuple((p, 1) for p in b_pts))
    src1 = cb.ind_and(cb.ind_not(mem_theta), cb.ind_not(in_a))
    dst1 = cb.ind_and(cb.ind_not(mem_theta), cb.ind_not(in_b))
    src2 = cb.ind_and(mem_theta, cb.ind_not(in_a))
    dst2 = cb.ind_and(mem_theta, cb.ind_not(in_b))
    table = {}
    for i in range(n):
        table[ws[i]] = 4 * xs[i]
        table[ys[i]] = zs[i]
    phi = Patch(cb.region_map([(src1, cb.order_embed(src1, dst1, 1)),
                               (src2, cb.order_embed(src2, dst2, 2))],
                              default=Id()),
                tuple(sorted(table.items())))

    b.define("theta", theta)
    b.define("phi", phi)
    b.define("mem_theta", mem_theta)
    for i, ((g, _), (d, _), _) in enumerate(inter):
        b.define(f"g{i}", g)
        b.define(f"d{i}", d)

    for i in range(n):
        b.eq_pair(f"g{i}", xs[i], f"d{i}", ys[i])    # matched points
        b.not_in(ws[i], sorted(avoided))
        b.eval_eq("theta", xs[i], 4 * xs[i])
        b.eval_eq("theta", z_args[i], zs[i])
        b.not_in(zs[i], sorted(4 * x for x in xs))
        b.eq_pair("phi", ws[i], "theta", xs[i])      # w_i lands on x_i theta
        b.eval_eq("phi", ys[i], zs[i])               # y_i lands on z_i
    b.pattern_match(xs, ws)
    b.pattern_match(ys, zs)
    for j, k, w_val in q_rows:                       # avoided-value replay
        b.eq_pair(f"g{k}", ys[j], f"d{k}", w_val)
    b.window_injective("phi", window)
    b.window_injective("theta", window)
    b.window_covered("mem_theta", "phi", window, 4 * window + 4)
    return b.build()


# ---------------------------------------------------------------------------
# Depth-3 refuter for injections above the symmetric group


def refute_right_depth3_inj(units, probe: int = 256,
                            window: int = 1024) -> RefutationCertificate:
    """D_r(S, U) > 3 when U mixes cofinite-image and Baer-Levi injections.

    Tuples (a1, b1, a2, b2, a3, b3) with cofinite-image a1, b3 are the
    only shapes a three-step derivation between two cofinite-image maps
    can take (the Baer-Levi part is an ideal); for each tuple two
    evaluation chains are forced apart, and the identity plus one
    finite-support permutation realize the endpoints.
    """
    classified = []
    for term, cap in units:
        if not cap.cert_injective:
            raise MissingCapability("units must be certified injective")
        comp = cap.image_complement
        if cap.cert_image_coinfinite:
            classified.append((term, cap, "bl"))
        elif comp is not None and comp.kind == FINITE and comp.exact:
            classified.append((term, cap, "cosmall"))
        else:
            raise MissingCapability(
                "each unit needs either a coinfinite-image certificate or an "
                "exact finite complement")
    b = _CertBuilder("right-depth3-inj", "right", 3,
                     "no right derivation of length <= 3 joins theta to phi "
                     "over the units")
    names = {}
    for i, (t, _, _) in enumerate(classified):
        b.gen(t)
        names[id(t)] = b.define(f"u{i}", t)
    small = [t for t, _, k in classified if k == "cosmall"]
    allt = [t for t, _, _ in classified]
    if not small:
        b.note("all units certified Baer-Levi: any three-step product stays "
               "Baer-Levi while the endpoints are not; vacuous refutation")
        b.define("theta", Id())
        b.eval_eq("theta", 0, 0)
        return b.build()

    inv = InverseTables(1 << 14)
    rows = []
    chosen: set[int] = set()
    for a1 in small:
        for b1t in allt:
            for a2 in allt:
                for b2t in allt:
                    for a3 in allt:
                        for b3 in small:
                            rows.append(_depth3_row(
                                a1, b1t, a2, b2t, a3, b3, inv, chosen, probe))

    phi_tbl = {}
    for row in rows:
        x_p, y_p = row[6], row[9]
        phi_tbl[y_p] = x_p
        phi_tbl[x_p] = y_p
    b.define("theta", Id())
    b.define("phi", Patch(Id(), tuple(sorted(phi_tbl.items()))))
    b.distinct([r[6] for r in rows] + [r[9] for r in rows])
    for a1, b1t, a2, b2t, a3, b3, x_p, w1, t_val, y_p, w2, s_val in rows:
        b.eq_pair(names[id(a1)], x_p, names[id(b1t)], w1)
        b.eval_eq(names[id(a2)], w1, t_val)
        b.eq_pair(names[id(b3)], y_p, names[id(a3)], w2)
        b.eval_eq(names[id(b2t)], w2, s_val)
        b.distinct([t_val, s_val])
        b.eval_eq("theta", x_p, x_p)
        b.eval_eq("phi", y_p, x_p)
    return b.build()


def _depth3_row(a1, b1t, a2, b2t, a3, b3, inv, chosen, probe):
    """One tuple's obstruction data: two separated evaluation chains."""
    x_p = wit1 = t_val = None
    for x in range(probe):
        if x in chosen:
            continue
        w = inv.pre_point(b1t, evaluate(a1, x))
        if w is None:
            continue
        x_p, wit1, t_val = x, w, evaluate(a2, w)
        break
    if x_p is None:
        raise RefutationError("no probe point for a tuple's first chain")
    chosen.add(x_p)
    for y in range(probe):
        if y in chosen:
            continue
        w2 = inv.pre_point(a3, evaluate(b3, y))
        if w2 is None:
            continue
        s_val = evaluate(b2t, w2)
        if s_val != t_val:
            chosen.add(y)
            return (a1, b1t, a2, b2t, a3, b3, x_p, wit1, t_val, y, w2, s_val)
    raise RefutationError("no separated second chain point")


# ---------------------------------------------------------------------------
# Left-side depth refuters for surjections


def _sym_split(units):
    sym, other = [], []
    for i, (term, cap) in enumerate(units):
        if cap.cert_injective and cap.cert_surjective:
            sym.append((i, term, cap))
        elif cap.collision is not None:
            other.append((i, term, cap))
        else:
            raise MissingCapability(
                "each unit needs bijection certificates or a collision witness")
    return sym, other


def _vacuous_no_bijection(b, other, names, steps_text):
    for i, term, cap in other:
        x, y = cap.collision
        b.distinct([x, y])
        b.eq_pair(names[i], x, names[i], y)
    b.note(f"no unit is a bijection, but {steps_text}; vacuous refutation")
    return b.build()


def refute_left_depth2_surj(units, window: int = 2048,
                            fibre_samples: int = 6) -> RefutationCertificate:
    """D_l(S, U) > 2 for units inside the surjections.

    A two-step left derivation ending at the identity forces its last
    pair into the bijections; the composites (bijection)^-1 * unit then
    pin a colarge union of fibres A, and a surjection with all fibres
    infinite whose marked fibres dodge A contradicts every candidate
    derivation.
    """
    sym, other = _sym_split(units)
    b = _CertBuilder("left-depth2-surj", "left", 2,
                     "no left derivation of length <= 2 joins theta to the "
                     "identity over the units")
    names = []
    for i, (t, _) in enumerate(units):
        b.gen(t)
        names.append(b.define(f"u{i}", t))
    if not sym:
        return _vacuous_no_bijection(
            b, other, names,
            "a two-step derivation to the identity needs one")

    v_terms = [Compose(cb.bijection_inverse(mu), lam)
               for _, mu, _ in sym for lam, _ in units]

    half = window // 2
    covered = [False] * half
    y_vals, a_parts = [], []
    for phi in v_terms:
        fc = compile_map(phi)
        vals = [fc(v) for v in range(half)]
        pick = None
        for cand in range(8):
            leftover = sum(1 for v in range(half)
                           if not covered[v] and vals[v] != cand)
            if leftover >= window // 8:
                pick = cand
                break
        if pick is None:
            raise RefutationError("no colarge fibre choice for a composite")
        for v in range(half):
            if vals[v] == pick:
                covered[v] = True
        y_vals.append(pick)
        a_parts.append(cb.eq_maps_indicator(phi, Const(pick)))
    in_a = cb.ind_or(*a_parts) if len(a_parts) > 1 else a_parts[0]

    inv = InverseTables(1 << 14)
    mark_rows, marked = [], []
    for ai, (alpha, _) in enumerate(units):
        for bi, (beta, _) in enumerate(units):
            for vi in range(len(v_terms)):
                z = inv.pre_point(beta, y_vals[vi])
                if z is None:
                    raise RefutationError("fibre point out of scan range")
                x = evaluate(alpha, z)
                mark_rows.append((ai, bi, vi, z, x))
                marked.append(x)
    f_pts = sorted(set(marked))

    in_f = Patch(Const(0), tuple((p, 1) for p in f_pts))
    non_f = cb.select_enum(forbid=(in_f,))
    m = len(f_pts)
    f_cycle = AffineMod(m, tuple((0, p) for p in f_pts)) if m > 1 \
        else Const(f_pts[0])
    spread = Compose(UnpackFirst(), non_f)
    # marked fibres live inside even ranks of the complement of A
    theta = cb.region_map(
        [(in_a, Compose(cb.set_rank(in_a), spread))],
        default=Compose(cb.set_rank(cb.ind_not(in_a)),
                        PiecewiseMod(2, (f_cycle, spread))))
    b.define("theta", theta)
    b.define("in_A", in_a)
    for vi, t in enumerate(v_terms):
        b.define(f"v{vi}", t)
        b.note(f"v{vi} pins fibre value {y_vals[vi]}")

    for i, term, cap in other:
        x, y = cap.collision
        b.distinct([x, y])
        b.eq_pair(names[i], x, names[i], y)
    b.count_zero_ge("in_A", half, window // 8)       # A is colarge here
    for (ai, bi, vi, z, x) in mark_rows:
        b.eval_eq(names[bi], z, y_vals[vi])
        b.eval_eq(names[ai], z, x)
    pre_theta = cb.preimage_enum(theta)
    b.define("pre_theta", pre_theta)
    for x in f_pts:
        for j in range(fibre_samples):
            w = evaluate(pre_theta, pack(x, j))
            b.eval_eq("theta", w, x)          # w lies in the marked fibre
            b.eval_eq("in_A", w, 0)           # and dodges A
    return b.build()


def refute_left_depth3_surj(units, window: int = 1024,
                            z_probe: int = 48) -> RefutationCertificate:
    """D_l(S, U) > 3 for units inside the surjections.

    A three-step left derivation ending at the identity forces first and
    last pairs into the bijections.  Tuples split by whether one value's
    fibre absorbs all but finitely much of the middle composite; both
    branches collect finite obstruction data under colarge bookkeeping,
    and a bijection carrying one fibre union off the other contradicts
    every candidate derivation.
    """
    sym, other = _sym_split(units)
    b = _CertBuilder("left-depth3-surj", "left", 3,
                     "no left derivation of length <= 3 joins theta to the "
                     "identity over the units")
    names = []
    for i, (t, _) in enumerate(units):
        b.gen(t)
        names.append(b.define(f"u{i}", t))
    if not sym:
        return _vacuous_no_bijection(
            b, other, names,
            "a three-step derivation to the identity needs one on each end")

    def uname(term):
        for i, (t, _) in enumerate(units):
            if t == term:
                return names[i]
        raise KeyError(term)

    all_terms = [t for t, _ in units]
    sym_terms = [t for _, t, _ in sym]
    tuples = [(a1, b1t, a2, b2t, a3, b3)
              for a1 in sym_terms for b1t in all_terms for a2 in all_terms
              for b2t in all_terms for a3 in all_terms for b3 in sym_terms]

    inv = InverseTables(1 << 14)

    def middle_union(b2t, a2, w, zmax, cap_size=12):
        """sampled union of a2(fibres of z under b2t) over z != w"""
        out: set[int] = set()
        fca = compile_map(a2)
        tbl = inv.table(b2t)
        for z in range(zmax):
            if z == w:
                continue
            for u in tbl.get(z, ())[:8]:
                out.add(fca(u))
                if len(out) > cap_size:
                    return None
        return out

    cat1, cat2 = [], []
    for tup in tuples:
        _, _, a2, b2t, _, _ = tup
        found = None
        for w in range(4):
            s1 = middle_union(b2t, a2, w, z_probe)
            if s1 is None:
                continue
            s2 = middle_union(b2t, a2, w, 2 * z_probe)
            if s2 is not None and s2 == s1:
                found = (w, sorted(s1))
                break
        if found is not None:
            cat1.append((tup, found[0], found[1]))
        else:
            cat2.append(tup)
    w_set = sorted({w for _, w, _ in cat1})
    l_set = sorted({v for _, _, s in cat1 for v in s})

    inv_terms: dict[MapExpr, MapExpr] = {}

    def inv_of(term):
        if term not in inv_terms:
            inv_terms[term] = cb.bijection_inverse(term)
        return inv_terms[term]

    # category 1: matched chains through points off the finite data
    rows1 = []
    used: set[int] = set()
    for (tup, w, lset) in cat1:
        a1, b1t, a2, b2t, a3, b3 = tup
        row = None
        for u_i in range(1 << 10):
            if u_i in w_set:
                continue
            z = inv.pre_point(a3, u_i)
            if z is None:
                continue
            x_i = evaluate(b3, z)
            if x_i in used:
                continue
            row = [u_i, z, x_i]
            break
        if row is None:
            raise RefutationError("no usable first chain for a category-1 "
                                  "tuple")
        used.add(row[2])
        second = None
        for v_i in range(1 << 10):
            if v_i in l_set:
                continue
            z2 = inv.pre_point(b1t, v_i)
            if z2 is None:
                continue
            y_i = evaluate(a1, z2)
            if y_i in used:
                continue
            second = [v_i, z2, y_i]
            break
        if second is None:
            raise RefutationError("no usable second chain for a category-1 "
                                  "tuple")
        used.add(second[2])
        rows1.append((tup, w, lset, *row, *second))

    k_vals = set()
    for tup in cat2:
        a1, b1t = tup[0], tup[1]
        for row in rows1:
            y_i = row[8]
            k_vals.add(evaluate(b1t, evaluate(inv_of(a1), y_i)))
    k_list = sorted(k_vals)

    # category 2: colarge bookkeeping with incremental window coverage
    half = window
    cov_a = [False] * half
    cov_b = [False] * half
    a_parts, b_parts, rows2 = [], [], []
    for tup in cat2:
        a1, b1t, a2, b2t, a3, b3 = tup
        a_probe = compile_map(Compose(inv_of(b3), a3))
        b_probe = compile_map(Compose(inv_of(a1), b1t))
        a_vals = [a_probe(v) for v in range(half)]
        b_vals = [b_probe(v) for v in range(half)]
        picked = None
        for a_cand in range(96):
            left_a = sum(1 for v in range(half)
                         if not cov_a[v] and a_vals[v] != a_cand)
            if left_a < half // 8:
                continue
            b_cand = wit = None
            for u in inv.table(b2t).get(a_cand, ()):
                cand = evaluate(a2, u)
                if cand not in k_list:
                    b_cand, wit = cand, u
                    break
            if b_cand is None:
                continue
            left_b = sum(1 for v in range(half)
                         if not cov_b[v] and b_vals[v] != b_cand)
            if left_b < half // 8:
                continue
            picked = (a_cand, b_cand, wit)
            break
        if picked is None:
            raise RefutationError("colarge bookkeeping found no admissible "
                                  "choice for a tuple")
        a_cand, b_cand, wit = picked
        for v in range(half):
            if a_vals[v] == a_cand:
                cov_a[v] = True
            if b_vals[v] == b_cand:
                cov_b[v] = True
        a_parts.append(cb.eq_maps_indicator(Compose(inv_of(b3), a3),
                                            Const(a_cand)))
        b_parts.append(cb.eq_maps_indicator(Compose(inv_of(a1), b1t),
                                            Const(b_cand)))
        rows2.append((tup, a_cand, b_cand, wit))

    in_a = cb.ind_or(*a_parts) if len(a_parts) > 1 else \
        (a_parts[0] if a_parts else cb.NEVER)
    in_b = cb.ind_or(*b_parts) if len(b_parts) > 1 else \
        (b_parts[0] if b_parts else cb.NEVER)
    x_pts = [row[5] for row in rows1]
    y_pts = [row[8] for row in rows1]
    in_x = Patch(Const(0), tuple((p, 1) for p in sorted(x_pts))) \
        if x_pts else cb.NEVER
    in_y = Patch(Const(0), tuple((p, 1) for p in sorted(y_pts))) \
        if y_pts else cb.NEVER
    src_a = cb.ind_and(in_a, cb.ind_not(in_x))
    dst_d = cb.ind_and(cb.ind_not(in_b), cb.ind_not(in_y))
    c_ind = cb.ind_and(dst_d, Compose(cb.set_rank(dst_d), cb.EVEN_INDICATOR))
    rest = cb.ind_and(cb.ind_not(in_a), cb.ind_not(in_x))
    z_ind = cb.ind_and(cb.ind_not(in_y), cb.ind_not(c_ind))
    theta_base = cb.region_map(
        [(src_a, cb.order_embed(src_a, dst_d, 2)),
         (rest, cb.order_embed(rest, z_ind, 1))], default=Id())
    theta = Patch(theta_base, tuple(sorted(zip(x_pts, y_pts)))) if x_pts \
        else theta_base
    b.define("theta", theta)
    b.define("in_A", in_a)
    b.define("in_B", in_b)
    b.define("theta_then_inB", Compose(theta, in_b))
    b.define("srcA_offX", src_a)

    for (tup, w, lset, u_i, z, x_i, v_i, z2, y_i) in rows1:
        a1, b1t, a2, b2t, a3, b3 = tup
        b.not_in(u_i, w_set)
        b.eval_eq(uname(a3), z, u_i)
        b.eval_eq(uname(b3), z, x_i)
        b.not_in(v_i, l_set)
        b.eval_eq(uname(b1t), z2, v_i)
        b.eval_eq(uname(a1), z2, y_i)
        b.eval_eq("theta", x_i, y_i)
    for (tup, a_cand, b_cand, wit) in rows2:
        _, _, a2, b2t, _, _ = tup
        b.eval_eq(uname(b2t), wit, a_cand)
        b.eval_eq(uname(a2), wit, b_cand)
        b.not_in(b_cand, k_list)
    if a_parts:
        b.count_zero_ge("in_A", half, half // 8)
        b.count_zero_ge("in_B", half, half // 8)
    b.window_injective("theta", window // 2)
    b.window_zero_on("srcA_offX", "theta_then_inB", window // 2)
    if cat1:
        b.note(f"{len(cat1)} tuple(s) in the absorbed-middle branch with "
               f"pivot values {w_set}")
    return b.build()


# ---------------------------------------------------------------------------
# Soundness gate


def assert_no_conflict(cert: RefutationCertificate,
                       witness: WitnessResult | DerivationSequence,
                       window: int = 512) -> None:
    """Raise if a depth refutation and a short witness both validate.

    A certificate claiming no derivation of length <= K between its
    theta and phi, together with a verified sequence of length <= K
    joining exactly those endpoints over the same generators, means a
    soundness bug somewhere; this gate refuses to let both stand.
    """
    seq = witness.sequence if isinstance(witness, WitnessResult) else witness
    depth = cert.depth
    if depth is None or len(seq) > depth:
        return
    defs = cert.data.get("defs", {})
    if "theta" not in defs or "phi" not in defs:
        return
    if cert.data.get("side") != seq.side:
        return
    gens = {json.dumps(g, sort_keys=True) for g in cert.data["generators"]}
    seq_gens = {json.dumps(to_json(g), sort_keys=True)
                for g in seq.generators if not isinstance(g, Id)}
    if not seq_gens <= gens:
        return
    theta = from_json(defs["theta"])
    phi = from_json(defs["phi"])
    if not (verify_equal_on_window(theta, seq.a, window).ok
            and verify_equal_on_window(phi, seq.b, window).ok):
        return
    if check_certificate(cert).ok and verify_sequence(seq, window).ok:
        raise SoundnessViolation(
            f"certificate claims depth > {depth} but a verified sequence of "
            f"length {len(seq)} joins the same endpoints over the same units")
