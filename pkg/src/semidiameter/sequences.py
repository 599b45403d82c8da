"""Derivation sequences between semigroup elements, and their verifier.

A right sequence from a to b over a generator set U is a chain

    a = u1*s1,  v1*s1 = u2*s2,  ...,  vn*sn = b

with every (u_i, v_i) drawn from U and multipliers s_i from the ambient
monoid; products are written left to right (u*s means "u then s").  A
left sequence is the mirror image with multipliers on the left.  Length
zero is permitted only between pointwise-equal endpoints.  The adjoined
identity of a non-monoid is represented by the identity map, which acts
identically under composition; when used it must be listed among the
generators.

Verification is exact on a finite window [0, N): every step equality is
evaluated pointwise, and every step element must be (structurally) one
of the declared generators.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Union

from .capability import Capability, WindowReport
from .classes import Element, PartialMapExpr
from .terms import MapExpr, compile_map, to_json, from_json

RIGHT = "right"
LEFT = "left"


@dataclass(frozen=True)
class Step:
    u: Element
    v: Element
    s: Element


@dataclass(frozen=True)
class DerivationSequence:
    side: str
    a: Element
    b: Element
    steps: tuple[Step, ...]
    generators: tuple[Element, ...]

    def __post_init__(self):
        if self.side not in (RIGHT, LEFT):
            raise ValueError(f"side must be 'right' or 'left', got {self.side!r}")

    def __len__(self) -> int:
        return len(self.steps)

    def to_json(self) -> dict:
        return {
            "side": self.side,
            "a": _element_json(self.a),
            "b": _element_json(self.b),
            "steps": [{"u": _element_json(st.u), "v": _element_json(st.v),
                       "s": _element_json(st.s)} for st in self.steps],
            "generators": [_element_json(g) for g in self.generators],
        }

    @staticmethod
    def from_json(d: dict) -> "DerivationSequence":
        return DerivationSequence(
            d["side"],
            _element_from_json(d["a"]),
            _element_from_json(d["b"]),
            tuple(Step(_element_from_json(st["u"]), _element_from_json(st["v"]),
                       _element_from_json(st["s"])) for st in d["steps"]),
            tuple(_element_from_json(g) for g in d["generators"]),
        )


def _element_json(e: Element) -> dict:
    if isinstance(e, PartialMapExpr):
        return {"partial": e.to_json()}
    return to_json(e)


def _element_from_json(d: dict) -> Element:
    if "partial" in d:
        return PartialMapExpr.from_json(d["partial"])
    return from_json(d)


def _evaluator(e: Element):
    """Return f(x) -> value-or-None (None = undefined, for partial maps)."""
    if isinstance(e, PartialMapExpr):
        dom = compile_map(e.domain)
        body = compile_map(e.body)
        return lambda x: body(x) if dom(x) else None
    fc = compile_map(e)
    return lambda x: fc(x)


def _product_evaluator(first: Element, second: Element):
    """Pointwise evaluator of 'first then second' with undefinedness."""
    f = _evaluator(first)
    g = _evaluator(second)

    def prod(x: int):
        y = f(x)
        if y is None:
            return None
        return g(y)

    return prod


class SideMismatch(ValueError):
    pass


def verify_sequence(seq: DerivationSequence, n: int) -> WindowReport:
    """Check a derivation sequence exactly on the window [0, n).

    Verifies generator membership of every step pair and the full chain
    of step equalities for the declared side; a failure carries the step
    index and the least offending point.
    """
    checks = 0
    for i, st in enumerate(seq.steps):
        checks += 2
        if st.u not in seq.generators or st.v not in seq.generators:
            return WindowReport(n, False, checks,
                                {"reason": "step uses a non-generator",
                                 "step": i + 1})

    if not seq.steps:
        rep = _equal_on_window(_evaluator(seq.a), _evaluator(seq.b), n)
        if not rep.ok:
            return WindowReport(n, False, checks + rep.checks_run,
                                {"reason": "length-0 sequence with distinct endpoints",
                                 **rep.witness})
        return WindowReport(n, True, checks + rep.checks_run)

    def times(u: Element, s: Element):
        if seq.side == RIGHT:
            return _product_evaluator(u, s)
        return _product_evaluator(s, u)

    sides = [(_evaluator(seq.a), times(seq.steps[0].u, seq.steps[0].s), 0)]
    for i in range(len(seq.steps) - 1):
        sides.append((times(seq.steps[i].v, seq.steps[i].s),
                      times(seq.steps[i + 1].u, seq.steps[i + 1].s), i + 1))
    last = seq.steps[-1]
    sides.append((times(last.v, last.s), _evaluator(seq.b), len(seq.steps)))

    for lhs, rhs, at in sides:
        rep = _equal_on_window(lhs, rhs, n)
        checks += rep.checks_run
        if not rep.ok:
            return WindowReport(n, False, checks,
                                {"reason": "step equality fails",
                                 "equality_index": at, **rep.witness})
    return WindowReport(n, True, checks)


def _equal_on_window(f, g, n: int) -> WindowReport:
    for x in range(n):
        a, b = f(x), g(x)
        if a != b:
            return WindowReport(n, False, x + 1, {"x": x, "left": a, "right": b})
    return WindowReport(n, True, n)


@dataclass(frozen=True)
class WitnessResult:
    """A constructed sequence plus the capability data of intermediates.

    ``intermediates`` lists (term, capability, note) for every element the
    construction introduced, so callers can re-run class membership checks.
    """

    sequence: DerivationSequence
    intermediates: tuple = ()
    notes: tuple[str, ...] = ()

    def __len__(self) -> int:
        return len(self.sequence)
