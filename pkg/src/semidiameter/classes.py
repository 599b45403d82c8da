"""Membership classification and seeded sampling for map semigroups on N.

Supported classes (the tag strings are the stable CLI / JSON names):

===========  ===============================================================
T            all total maps
F            finite-to-one total maps (over N this coincides with the class
             of maps sending infinite sets to infinite sets, so the tag H
             is accepted as an alias: a map with an infinite fibre kills an
             infinite set, and a finite-to-one map can only shrink an
             infinite set to an infinite set)
Inj / Surj   injective / surjective total maps
Sym          bijections
BL           injective with coinfinite image (Baer-Levi)
DBL          surjective with every kernel class infinite (dual Baer-Levi)
BL1 / DBL1   the above together with the identity
SymBL/SymDBL bijections united with BL / DBL
TNotInj      total, not injective
TNotSurj     total, not surjective
I            injective partial maps (partial bijections)
PT           all partial maps
===========  ===============================================================

``member_check`` returns a *certified* yes only when the supplied
capability certificates entail membership, a certified no only with a
concrete witness, and otherwise reports mere window consistency -- it
never guesses.
"""

from __future__ import annotations

import random
from dataclasses import dataclass
from typing import Optional, Union

from . import combinators as cb
from .capability import (ALL_FINITE, ALL_INFINITE, Capability, EMPTY_CAP,
                         Enumeration, FINITE, INFINITE, MIXED,
                         MalformedCapability, MissingCapability, PreimageInfo,
                         WindowReport, check_capabilities, finite_set,
                         infinite_enum)
from .terms import (AffineMod, Compose, Const, Id, MapExpr, Patch, PiecewiseMod,
                    compile_map, evaluate, from_json, to_json)

CLASS_TAGS = ("T", "F", "Inj", "Surj", "Sym", "BL", "DBL", "BL1", "DBL1",
              "SymBL", "SymDBL", "TNotInj", "TNotSurj", "I", "PT")

_ALIASES = {"H": "F"}


def normalize_tag(tag: str) -> str:
    tag = _ALIASES.get(tag, tag)
    if tag not in CLASS_TAGS:
        raise ValueError(f"unknown class tag {tag!r}")
    return tag


@dataclass(frozen=True)
class PartialMapExpr:
    """A partial map: indicator of the domain plus a body term.

    The body is only meaningful on domain points; verifiers never
    evaluate it elsewhere.  The empty map (the zero of the partial
    bijection monoid) has domain indicator Const(0).
    """

    domain: MapExpr
    body: MapExpr
    domain_complement: Optional[Enumeration] = None

    def defined_at(self, x: int) -> bool:
        return bool(evaluate(self.domain, x))

    def at(self, x: int) -> Optional[int]:
        if self.defined_at(x):
            return evaluate(self.body, x)
        return None

    def to_json(self) -> dict:
        d = {"domain": to_json(self.domain), "body": to_json(self.body)}
        if self.domain_complement is not None:
            d["domain_complement"] = self.domain_complement.to_json()
        return d

    @staticmethod
    def from_json(d: dict) -> "PartialMapExpr":
        comp = (Enumeration.from_json(d["domain_complement"])
                if "domain_complement" in d else None)
        return PartialMapExpr(from_json(d["domain"]), from_json(d["body"]), comp)


IDENTITY_PARTIAL = PartialMapExpr(Const(1), Id(), finite_set(()))
EMPTY_PARTIAL = PartialMapExpr(Const(0), Id())

Element = Union[MapExpr, PartialMapExpr]

CERTIFIED_YES = "certifiedYes"
CERTIFIED_NO = "certifiedNo"
WINDOW_CONSISTENT = "windowConsistent"


@dataclass(frozen=True)
class MemberVerdict:
    kind: str
    tag: str
    witness: Optional[dict] = None
    report: Optional[WindowReport] = None

    @property
    def is_yes(self) -> bool:
        return self.kind == CERTIFIED_YES

    @property
    def is_no(self) -> bool:
        return self.kind == CERTIFIED_NO


def _window_collision(e: MapExpr, n: int) -> Optional[tuple[int, int]]:
    fc = compile_map(e)
    seen: dict[int, int] = {}
    for x in range(n):
        v = fc(x)
        if v in seen:
            return seen[v], x
        seen[v] = x
    return None


def member_check(e: Element, cap: Capability, tag: str, n: int = 256) -> MemberVerdict:
    """Classify an element against a class tag at window size n."""
    tag = normalize_tag(tag)

    if isinstance(e, PartialMapExpr):
        if tag == "PT":
            return MemberVerdict(CERTIFIED_YES, tag)
        if tag == "I":
            # injectivity of the body restricted to the domain
            if cap.cert_injective:
                return MemberVerdict(CERTIFIED_YES, tag)
            seen: dict[int, int] = {}
            for x in range(n):
                v = e.at(x)
                if v is None:
                    continue
                if v in seen:
                    return MemberVerdict(CERTIFIED_NO, tag,
                                         {"collision": (seen[v], x)})
                seen[v] = x
            return MemberVerdict(WINDOW_CONSISTENT, tag)
        if (e.domain_complement is not None and e.domain_complement.is_empty):
            return member_check(e.body, cap, tag, n)
        return MemberVerdict(WINDOW_CONSISTENT, tag,
                             {"note": "partial element, total-class tag"})

    report = check_capabilities(e, cap, n)
    if not report.ok:
        raise MalformedCapability(f"capability fails its window check: {report.witness}")

    def yes():
        return MemberVerdict(CERTIFIED_YES, tag, report=report)

    def no(witness):
        return MemberVerdict(CERTIFIED_NO, tag, witness=witness, report=report)

    def dunno():
        return MemberVerdict(WINDOW_CONSISTENT, tag, report=report)

    collision = cap.collision or _window_collision(e, n)

    if tag == "PT":
        return yes()
    if tag == "T":
        return yes()
    if tag == "F":
        if cap.cert_finite_to_one:
            return yes()
        return dunno()
    if tag == "Inj":
        if collision is not None:
            return no({"collision": collision})
        if cap.cert_injective:
            return yes()
        return dunno()
    if tag == "Surj":
        if cap.cert_surjective:
            return yes()
        comp = cap.image_complement
        if comp is not None and comp.kind == FINITE and comp.values and comp.exact:
            return no({"missing": comp.values[0]})
        if comp is not None and comp.kind == INFINITE:
            return no({"missing": comp.value_at(0)})
        return dunno()
    if tag == "Sym":
        if collision is not None:
            return no({"collision": collision})
        if cap.cert_injective and cap.cert_surjective:
            return yes()
        return dunno()
    if tag == "BL":
        if collision is not None:
            return no({"collision": collision})
        comp = cap.image_complement
        if cap.cert_injective and (
                cap.cert_image_coinfinite
                or (comp is not None and comp.kind == INFINITE)):
            return yes()
        if comp is not None and comp.kind == FINITE and comp.exact:
            return no({"image_complement_finite": list(comp.values)})
        return dunno()
    if tag == "DBL":
        if cap.cert_surjective and cap.cert_all_kernel_classes_infinite:
            return yes()
        if cap.preimage is not None and cap.preimage.per_class == ALL_FINITE:
            return no({"kernel_classes": "all finite"})
        return dunno()
    if tag in ("BL1", "DBL1"):
        if e == Id():
            return yes()
        return member_check(e, cap, tag[:-1], n)
    if tag == "SymBL":
        inner = member_check(e, cap, "Sym", n)
        if inner.is_yes:
            return yes()
        return member_check(e, cap, "BL", n)
    if tag == "SymDBL":
        inner = member_check(e, cap, "Sym", n)
        if inner.is_yes:
            return yes()
        return member_check(e, cap, "DBL", n)
    if tag == "TNotInj":
        if collision is not None:
            return MemberVerdict(CERTIFIED_YES, tag, {"collision": collision},
                                 report)
        if cap.cert_injective:
            return no({"certified_injective": True})
        return dunno()
    if tag == "TNotSurj":
        comp = cap.image_complement
        if comp is not None and not comp.is_empty:
            return MemberVerdict(CERTIFIED_YES, tag,
                                 {"missing": comp.value_at(0)}, report)
        if cap.cert_surjective:
            return no({"certified_surjective": True})
        return dunno()
    if tag == "I":
        # a total injection is in particular a partial bijection
        if collision is not None:
            return no({"collision": collision})
        if cap.cert_injective:
            return yes()
        return dunno()
    raise AssertionError(tag)


IN_K = "inK"
NOT_IN_K = "notInK"
NOT_DECIDED = "notDecided"


def k_class_probe(alpha: MapExpr, cap: Capability, x: int,
                  spot: int = 8) -> str:
    """Is the kernel class of x infinite, per the capability's claim?

    Requires a preimage oracle.  An all-infinite claim answers yes, an
    all-finite claim answers no; a mixed claim is spot-checked only (the
    probe is necessarily inconclusive).
    """
    if cap.preimage is None:
        raise MissingCapability("k_class_probe needs a preimage oracle")
    per = cap.preimage.per_class
    if per == ALL_INFINITE:
        return IN_K
    if per == ALL_FINITE:
        return NOT_IN_K
    try:
        cap.preimage.class_prefix(x, spot)
    except Exception:
        return NOT_DECIDED
    return NOT_DECIDED


# ---------------------------------------------------------------------------
# Seeded random elements, class by class.
#
# Each class has a fixed generator grammar chosen so that the membership
# certificates can be attached honestly and in closed form:
#
#   Sym      residue shuffle composed with finite-support permutations
#   BL       finite permutation, then a stride x |-> m*x + c with m >= 2
#   DBL      finite permutation, then unpack-first, then finite permutation
#   Inj      Sym or BL samples (optionally composed)
#   Surj     compositions of Sym / DBL samples and the halving map
#   F        products of all-slopes-positive affine maps, shuffles, patches
#   T        free bounded-depth grammar terms
#   TNotSurj stride maps, optionally pre-collapsed (kills injectivity only)
#   TNotInj  identity patched with one extra collision, or halving composites
#   I        injective body restricted to a decidable domain
#   PT       as I without the injectivity constraint


HALVE = AffineMod(2, ((1, 0), (1, 0)))   # 2q |-> q, 2q+1 |-> q : onto, 2-to-1


def _rng(tag: str, seed, depth: int) -> random.Random:
    return random.Random(f"{tag}|{seed}|{depth}")


def _finite_perm_patch(rng: random.Random, span: int = 24) -> MapExpr:
    """A finite-support permutation as a Patch over the identity."""
    pts = rng.sample(range(span), rng.randrange(2, 7))
    img = pts[1:] + pts[:1]          # one cycle on the sampled points
    return Patch(Id(), tuple(zip(pts, img)))


def _residue_shuffle(rng: random.Random) -> MapExpr:
    m = rng.randrange(2, 5)
    perm = list(range(m))
    rng.shuffle(perm)
    return AffineMod(m, tuple((m, perm[r]) for r in range(m)))


def _perm_term(rng: random.Random, depth: int) -> MapExpr:
    e: MapExpr = _residue_shuffle(rng) if rng.random() < 0.7 else Id()
    for _ in range(max(1, depth - 1)):
        if rng.random() < 0.8:
            e = Compose(e, _finite_perm_patch(rng))
    return e


def _perm_cap(term: MapExpr) -> Capability:
    return Capability(
        image_member=cb.ALWAYS,
        image_complement=finite_set(()),
        preimage=PreimageInfo(cb.preimage_enum(term), ALL_FINITE),
        class_rank=Const(0),
        cert_injective=True, cert_surjective=True, cert_finite_to_one=True)


def _sym_sample(rng: random.Random, depth: int):
    t = _perm_term(rng, depth)
    return t, _perm_cap(t)


def _bl_sample(rng: random.Random, depth: int):
    m = rng.randrange(2, 6)
    c = rng.randrange(m)
    stride = AffineMod(1, ((m, c),))
    pre = _perm_term(rng, depth - 1) if depth > 1 else Id()
    term = Compose(pre, stride) if not isinstance(pre, Id) else stride
    cap = Capability(
        image_member=cb.residue_indicator(m, c),
        image_complement=infinite_enum(cb.residue_complement_enum(m, c)),
        preimage=PreimageInfo(cb.preimage_enum(term), ALL_FINITE),
        cert_injective=True, cert_image_coinfinite=True, cert_finite_to_one=True)
    return term, cap


def _dbl_sample(rng: random.Random, depth: int):
    term: MapExpr = cb.ALPHA_TILDE
    if depth > 1 and rng.random() < 0.8:
        term = Compose(_finite_perm_patch(rng), term)
    if rng.random() < 0.6:
        term = Compose(term, _finite_perm_patch(rng))
    cap = Capability(
        image_member=cb.ALWAYS,
        image_complement=finite_set(()),
        preimage=PreimageInfo(cb.preimage_enum(term), ALL_INFINITE),
        class_rank=cb.kernel_rank(term),
        cert_surjective=True, cert_all_kernel_classes_infinite=True,
        collision=_window_collision(term, 64))
    return term, cap


def _inj_sample(rng: random.Random, depth: int):
    if rng.random() < 0.5:
        return _sym_sample(rng, depth)
    return _bl_sample(rng, depth)


def _surj_sample(rng: random.Random, depth: int):
    term, _ = _dbl_sample(rng, depth) if rng.random() < 0.4 \
        else _sym_sample(rng, depth)
    if rng.random() < 0.6:
        term = Compose(HALVE, term) if rng.random() < 0.5 else Compose(term, HALVE)
    cap = Capability(
        image_member=cb.ALWAYS,
        image_complement=finite_set(()),
        preimage=PreimageInfo(cb.preimage_enum(term), MIXED),
        cert_surjective=True,
        collision=_window_collision(term, 128))
    return term, cap


def _f_sample(rng: random.Random, depth: int):
    def atom():
        m = rng.randrange(1, 4)
        return AffineMod(m, tuple((rng.randrange(1, 4) * m if m > 1 else
                                   rng.randrange(1, 4),
                                   rng.randrange(0, 5)) for _ in range(m)))
    e = atom()
    for _ in range(depth - 1):
        pick = rng.random()
        if pick < 0.4:
            e = Compose(e, atom())
        elif pick < 0.7:
            e = Compose(e, _finite_perm_patch(rng))
        else:
            keys = rng.sample(range(16), 3)
            e = Patch(e, tuple((k, rng.randrange(0, 32)) for k in keys))
    return e, Capability(cert_finite_to_one=True)


def _t_sample(rng: random.Random, depth: int):
    def build(d: int) -> MapExpr:
        if d <= 0:
            return rng.choice([Id(), Const(rng.randrange(5)),
                               AffineMod(1, ((rng.randrange(4), rng.randrange(4)),))])
        pick = rng.random()
        if pick < 0.3:
            return Compose(build(d - 1), build(d - 1))
        if pick < 0.5:
            return PiecewiseMod(2, (build(d - 1), build(d - 1)))
        if pick < 0.7:
            m = rng.randrange(1, 4)
            return AffineMod(m, tuple((rng.randrange(4), rng.randrange(6))
                                      for _ in range(m)))
        if pick < 0.85:
            keys = rng.sample(range(12), 2)
            return Patch(build(d - 1), tuple((k, rng.randrange(12)) for k in keys))
        return build(d - 1)
    return build(depth), EMPTY_CAP


def _tnotsurj_sample(rng: random.Random, depth: int):
    m = rng.randrange(2, 6)
    c = rng.randrange(m)
    stride = AffineMod(1, ((m, c),))
    collision = None
    if rng.random() < 0.5:
        term: MapExpr = Compose(HALVE, stride)   # m*(x//2)+c, collapses pairs
        collision = (0, 1)
    else:
        pre = _perm_term(rng, max(1, depth - 1))
        term = Compose(pre, stride)
    cap = Capability(
        image_member=cb.residue_indicator(m, c),
        image_complement=infinite_enum(cb.residue_complement_enum(m, c)),
        cert_injective=collision is None,
        cert_image_coinfinite=True,
        cert_finite_to_one=True,
        collision=collision)
    return term, cap


def _tnotinj_sample(rng: random.Random, depth: int):
    pick = rng.random()
    if pick < 0.4:
        a = rng.randrange(0, 8)
        b = rng.randrange(8, 16)
        term: MapExpr = Patch(Id(), ((b, evaluate(Id(), a)),))
        collision = (a, b)
        cap = Capability(collision=collision, cert_surjective=False)
        return term, cap
    term, _ = _sym_sample(rng, max(1, depth - 1))
    term = Compose(HALVE, term)
    return term, Capability(collision=(0, 1))


def _partial_sample(rng: random.Random, depth: int, injective: bool):
    kind = rng.random()
    if kind < 0.15:
        return EMPTY_PARTIAL, Capability(cert_injective=True)
    if kind < 0.3:
        return IDENTITY_PARTIAL, Capability(cert_injective=True,
                                            cert_surjective=True)
    m = rng.randrange(2, 5)
    r = rng.randrange(m)
    domain = cb.residue_indicator(m, r)
    comp = infinite_enum(cb.residue_complement_enum(m, r))
    body = _perm_term(rng, depth) if injective else _t_sample(rng, depth)[0]
    if injective and rng.random() < 0.5:
        mm = rng.randrange(2, 5)
        body = Compose(body, AffineMod(1, ((mm, rng.randrange(mm)),)))
    return (PartialMapExpr(domain, body, comp),
            Capability(cert_injective=injective))


_SAMPLERS = {
    "T": _t_sample,
    "F": _f_sample,
    "Inj": _inj_sample,
    "Surj": _surj_sample,
    "Sym": _sym_sample,
    "BL": _bl_sample,
    "DBL": _dbl_sample,
    "TNotInj": _tnotinj_sample,
    "TNotSurj": _tnotsurj_sample,
}


def stride_element(m: int, c: int):
    """x |-> m*x + c with its closed-form capability (Baer-Levi for m >= 2)."""
    term = AffineMod(1, ((m, c),))
    if m == 1 and c == 0:
        return Id(), _perm_cap(Id())
    cap = Capability(
        image_member=cb.residue_indicator(m, c),
        image_complement=infinite_enum(cb.residue_complement_enum(m, c))
        if m >= 2 else finite_set(range(c)),
        preimage=PreimageInfo(cb.preimage_enum(term), ALL_FINITE),
        cert_injective=True, cert_image_coinfinite=m >= 2,
        cert_finite_to_one=True)
    return term, cap


def dbl_projection(which: str = "first"):
    term = cb.ALPHA_TILDE if which == "first" else cb.BETA_TILDE
    collision = (0, 1) if which == "first" else (0, 2)
    cap = Capability(
        image_member=cb.ALWAYS,
        image_complement=finite_set(()),
        preimage=PreimageInfo(cb.preimage_enum(term), ALL_INFINITE),
        class_rank=cb.kernel_rank(term),
        cert_surjective=True, cert_all_kernel_classes_infinite=True,
        collision=collision)
    return term, cap


def halving_element():
    cap = Capability(
        image_member=cb.ALWAYS,
        image_complement=finite_set(()),
        preimage=PreimageInfo(cb.preimage_enum(HALVE), ALL_FINITE),
        cert_surjective=True, cert_finite_to_one=True, collision=(0, 1))
    return HALVE, cap


def constant_element(y: int):
    term = Const(y)
    cap = Capability(
        image_member=Patch(Const(0), ((y, 1),)),
        image_complement=infinite_enum(cb.drop_values(
            AffineMod(1, ((1, 0),)), [y])),
        cert_finite_to_one=False, collision=(0, 1))
    return term, cap


ELEMENT_BUILDERS = {
    "identity": lambda p: (Id(), _perm_cap(Id())),
    "alpha_hat": lambda p: stride_element(2, 0),
    "beta_hat": lambda p: stride_element(2, 1),
    "alpha_tilde": lambda p: dbl_projection("first"),
    "beta_tilde": lambda p: dbl_projection("second"),
    "stride": lambda p: stride_element(p["m"], p["c"]),
    "halve": lambda p: halving_element(),
    "const": lambda p: constant_element(p["y"]),
    "random": lambda p: random_element(p["class"], p.get("seed", 0),
                                       p.get("depth", 2)),
    "identity_partial": lambda p: (IDENTITY_PARTIAL,
                                   Capability(cert_injective=True,
                                              cert_surjective=True)),
    "empty_partial": lambda p: (EMPTY_PARTIAL, Capability(cert_injective=True)),
}


def build_element(spec: dict):
    """Element spec -> (element, capability).

    Either {"builder": name, "params": {...}} for a registered builder,
    or {"term": <term json>, "capability": <capability json>} inline
    (capability optional; partial elements use {"partial": ...}).
    """
    if "builder" in spec:
        name = spec["builder"]
        if name not in ELEMENT_BUILDERS:
            raise ValueError(f"unknown element builder {name!r}")
        return ELEMENT_BUILDERS[name](spec.get("params", {}))
    cap = Capability.from_json(spec["capability"]) if "capability" in spec \
        else EMPTY_CAP
    if "partial" in spec:
        return PartialMapExpr.from_json(spec["partial"]), cap
    return from_json(spec["term"]), cap


def random_element(tag: str, seed, depth: int = 2):
    """Deterministic-in-seed element of the class, with honest capability."""
    tag = normalize_tag(tag)
    if depth < 1:
        raise ValueError("depth must be >= 1")
    rng = _rng(tag, seed, depth)
    if tag == "I":
        return _partial_sample(rng, depth, injective=True)
    if tag == "PT":
        return _partial_sample(rng, depth, injective=False)
    if tag in ("BL1", "DBL1"):
        if rng.random() < 0.2:
            return Id(), _perm_cap(Id())
        return _SAMPLERS[tag[:-1]](rng, depth)
    if tag == "SymBL":
        return _sym_sample(rng, depth) if rng.random() < 0.5 else _bl_sample(rng, depth)
    if tag == "SymDBL":
        return _sym_sample(rng, depth) if rng.random() < 0.5 else _dbl_sample(rng, depth)
    return _SAMPLERS[tag](rng, depth)
