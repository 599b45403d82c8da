"""Computability sidecars for map terms, and windowed verification.

Whether a map is injective, what its image misses, how its kernel
classes look -- none of this is decidable from an arbitrary term, so
elements travel with a ``Capability`` record supplied by whoever built
them.  Certificates are boolean claims; enumerators are themselves map
terms (index -> value), which keeps capabilities serializable and lets
the checker spot-test them on finite windows.  Soundness of everything
downstream is relative to capability honesty; the window checks here
catch dishonest records early.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Optional

from .terms import MapExpr, compile_map, evaluate, pack, to_json, from_json


class MalformedCapability(ValueError):
    """A capability contradicts the element it describes."""


class MissingCapability(ValueError):
    """An operation needs a certificate or oracle the caller did not supply."""


FINITE = "finite"
INFINITE = "infinite"

ALL_FINITE = "all_finite"
ALL_INFINITE = "all_infinite"
MIXED = "mixed"


@dataclass(frozen=True)
class Enumeration:
    """A set given either as an explicit finite list or a strictly
    increasing enumerator term.

    ``exact`` distinguishes "this is the whole set" from "this is an
    infinite subset of it" (enough to witness infinitude, not enough to
    decide membership).
    """

    kind: str                      # FINITE | INFINITE
    values: tuple[int, ...] = ()
    enum: Optional[MapExpr] = None
    exact: bool = True

    def __post_init__(self):
        if self.kind == FINITE:
            object.__setattr__(self, "values", tuple(sorted(self.values)))
        elif self.kind == INFINITE:
            if self.enum is None:
                raise MalformedCapability("infinite enumeration needs an enumerator")
        else:
            raise MalformedCapability(f"bad enumeration kind {self.kind!r}")

    @property
    def is_empty(self) -> bool:
        return self.kind == FINITE and not self.values

    def value_at(self, i: int) -> int:
        if self.kind == FINITE:
            return self.values[i]
        return evaluate(self.enum, i)

    def prefix(self, k: int) -> list[int]:
        if self.kind == FINITE:
            return list(self.values[:k])
        return [self.value_at(i) for i in range(k)]

    def to_json(self) -> dict:
        d = {"kind": self.kind, "exact": self.exact}
        if self.kind == FINITE:
            d["values"] = list(self.values)
        else:
            d["enum"] = to_json(self.enum)
        return d

    @staticmethod
    def from_json(d: dict) -> "Enumeration":
        if d["kind"] == FINITE:
            return Enumeration(FINITE, tuple(d["values"]), exact=d.get("exact", True))
        return Enumeration(INFINITE, enum=from_json(d["enum"]),
                           exact=d.get("exact", True))


def finite_set(values) -> Enumeration:
    return Enumeration(FINITE, tuple(values))


def infinite_enum(enum: MapExpr, exact: bool = True) -> Enumeration:
    return Enumeration(INFINITE, enum=enum, exact=exact)


@dataclass(frozen=True)
class PreimageInfo:
    """Kernel-class oracle: pack(y, i) |-> i-th element of the class of y."""

    enum: MapExpr
    per_class: str = MIXED          # ALL_FINITE | ALL_INFINITE | MIXED

    def class_prefix(self, y: int, k: int) -> list[int]:
        return [evaluate(self.enum, pack(y, i)) for i in range(k)]

    def to_json(self) -> dict:
        return {"enum": to_json(self.enum), "per_class": self.per_class}

    @staticmethod
    def from_json(d: dict) -> "PreimageInfo":
        return PreimageInfo(from_json(d["enum"]), d["per_class"])


@dataclass(frozen=True)
class Capability:
    image_member: Optional[MapExpr] = None      # indicator term for im f
    image_complement: Optional[Enumeration] = None
    preimage: Optional[PreimageInfo] = None
    class_rank: Optional[MapExpr] = None        # x |-> rank of x in its class
    collision: Optional[tuple[int, int]] = None  # witness of non-injectivity
    cert_injective: bool = False
    cert_surjective: bool = False
    cert_image_coinfinite: bool = False
    cert_all_kernel_classes_infinite: bool = False
    cert_finite_to_one: bool = False

    def but(self, **kw) -> "Capability":
        return replace(self, **kw)

    def to_json(self) -> dict:
        d = {
            "certs": {
                "injective": self.cert_injective,
                "surjective": self.cert_surjective,
                "image_coinfinite": self.cert_image_coinfinite,
                "all_kernel_classes_infinite": self.cert_all_kernel_classes_infinite,
                "finite_to_one": self.cert_finite_to_one,
            }
        }
        if self.image_member is not None:
            d["image_member"] = to_json(self.image_member)
        if self.image_complement is not None:
            d["image_complement"] = self.image_complement.to_json()
        if self.preimage is not None:
            d["preimage"] = self.preimage.to_json()
        if self.class_rank is not None:
            d["class_rank"] = to_json(self.class_rank)
        if self.collision is not None:
            d["collision"] = list(self.collision)
        return d

    @staticmethod
    def from_json(d: dict) -> "Capability":
        certs = d.get("certs", {})
        return Capability(
            image_member=from_json(d["image_member"]) if "image_member" in d else None,
            image_complement=Enumeration.from_json(d["image_complement"])
            if "image_complement" in d else None,
            preimage=PreimageInfo.from_json(d["preimage"]) if "preimage" in d else None,
            class_rank=from_json(d["class_rank"]) if "class_rank" in d else None,
            collision=tuple(d["collision"]) if "collision" in d else None,
            cert_injective=certs.get("injective", False),
            cert_surjective=certs.get("surjective", False),
            cert_image_coinfinite=certs.get("image_coinfinite", False),
            cert_all_kernel_classes_infinite=certs.get(
                "all_kernel_classes_infinite", False),
            cert_finite_to_one=certs.get("finite_to_one", False),
        )


EMPTY_CAP = Capability()


@dataclass(frozen=True)
class WindowReport:
    window: int
    ok: bool
    checks_run: int
    witness: Optional[dict] = None

    @property
    def status(self) -> str:
        return "pass" if self.ok else "fail"


def verify_equal_on_window(f: MapExpr, g: MapExpr, n: int) -> WindowReport:
    """Exact pointwise comparison on [0, n); reports the least mismatch."""
    if n < 1:
        raise ValueError("window must have size >= 1")
    fc, gc = compile_map(f), compile_map(g)
    for x in range(n):
        a, b = fc(x), gc(x)
        if a != b:
            return WindowReport(n, False, x + 1,
                                {"x": x, "left": a, "right": b})
    return WindowReport(n, True, n)


def check_capabilities(e: MapExpr, cap: Capability, n: int,
                       enum_prefix: int = 256) -> WindowReport:
    """Run every window-consistency test a capability admits.

    Checks on [0, n): claimed injectivity has no collisions; every
    evaluated value passes the image indicator; complement-enumerator
    outputs are strictly increasing and never collide with evaluated
    values; preimage-enumerator outputs land in the right class, in
    increasing order; class ranks agree with direct re-enumeration; a
    collision witness actually collides.  A decreasing enumerator or a
    certificate contradicted by data raises MalformedCapability.
    """
    fc = compile_map(e)
    values = [fc(x) for x in range(n)]
    checks = 0

    if cap.collision is not None:
        x, y = cap.collision
        checks += 1
        if x == y or fc(x) != fc(y):
            raise MalformedCapability(f"collision witness ({x},{y}) does not collide")
        if cap.cert_injective:
            raise MalformedCapability("cert_injective alongside a collision witness")

    if cap.cert_injective:
        seen: dict[int, int] = {}
        for x, v in enumerate(values):
            checks += 1
            if v in seen:
                raise MalformedCapability(
                    f"claimed injective but {seen[v]} and {x} collide at {v}")
            seen[v] = x

    if cap.image_member is not None:
        mc = compile_map(cap.image_member)
        for x, v in enumerate(values):
            checks += 1
            if not mc(v):
                return WindowReport(n, False, checks,
                                    {"reason": "image_member rejects a value",
                                     "x": x, "value": v})

    if cap.image_complement is not None:
        comp = cap.image_complement
        value_set = set(values)
        k = len(comp.values) if comp.kind == FINITE else enum_prefix
        prev = -1
        for i in range(k):
            w = comp.value_at(i)
            checks += 1
            if w <= prev:
                raise MalformedCapability("complement enumerator not increasing")
            prev = w
            if w in value_set:
                return WindowReport(n, False, checks,
                                    {"reason": "complement value is attained",
                                     "value": w})
            if cap.image_member is not None and comp.exact is not False:
                if compile_map(cap.image_member)(w):
                    raise MalformedCapability(
                        "complement value accepted by image_member")

    if cap.preimage is not None:
        probe_classes = sorted(set(values[: min(n, 48)]))[:16]
        # only indices guaranteed to exist may be probed: index 0 of an
        # attained class always does, deeper ones only under an
        # all-infinite claim (a finite class would make the scan diverge)
        depth = 4 if cap.preimage.per_class == ALL_INFINITE else 1
        for y in probe_classes:
            prev = -1
            for i in range(depth):
                v = evaluate(cap.preimage.enum, pack(y, i))
                checks += 1
                if v <= prev:
                    raise MalformedCapability("preimage enumerator not increasing")
                prev = v
                if fc(v) != y:
                    return WindowReport(n, False, checks,
                                        {"reason": "preimage enumerator off-class",
                                         "class": y, "value": v})

    if cap.class_rank is not None:
        if cap.preimage is None:
            raise MalformedCapability("class_rank without preimage oracle")
        rc = compile_map(cap.class_rank)
        for x in range(min(n, 128)):
            r = rc(x)
            checks += 1
            v = evaluate(cap.preimage.enum, pack(fc(x), r))
            if v != x:
                return WindowReport(n, False, checks,
                                    {"reason": "class_rank disagrees with enumerator",
                                     "x": x, "rank": r, "enumerated": v})

    return WindowReport(n, True, checks)
