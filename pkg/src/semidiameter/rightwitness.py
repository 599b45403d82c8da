"""Right-sequence constructors.

Every constructor emits a sequence over a small fixed generator set
whose length realizes the known bound for its class:

=============================  ======  =====================================
total / finite-to-one maps       1     through the even/odd merge map
non-surjective maps              2     through a constant map
Baer-Levi                       <= 3   via a bridge through fresh territory
injections (Sym + BL setting)   <= 4   conjugate into Baer-Levi, bridge, exit
partial bijections               2     through the empty map (a left zero)
right ideal descent            k + 2   enter the ideal, derive there, leave
=============================  ======  =====================================

Branching decisions that depend on infinitude of complements are made by
interleaved bounded scans with doubling budgets; a wrong guess surfaces
as a budget error or a failed window verification, never as a silently
wrong sequence.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

from . import combinators as cb
from .capability import (Capability, Enumeration, FINITE, INFINITE,
                         MissingCapability, PreimageInfo, finite_set,
                         infinite_enum, MIXED, ALL_FINITE)
from .classes import EMPTY_PARTIAL, IDENTITY_PARTIAL, PartialMapExpr
from .sequences import (RIGHT, DerivationSequence, Step, WitnessResult,
                        verify_sequence)
from .terms import (BudgetExhausted, Compose, Const, Id, MapExpr, evaluate,
                    scan_limit, set_scan_limit)

AH, BH = cb.ALPHA_HAT, cb.BETA_HAT


def _seq(a, b, steps, gens) -> DerivationSequence:
    return DerivationSequence(RIGHT, a, b, tuple(steps), tuple(gens))


def _derived_gamma_hat_cap(cap_t: Capability, cap_p: Capability,
                           theta: MapExpr, phi: MapExpr,
                           injective_disjoint: bool = False) -> Capability:
    """Capability of the merge map, derived from its two halves.

    Its image is the union of the two images; finite-to-one-ness is
    inherited; injectivity only under the disjoint-images flag the
    caller must justify.
    """
    member = None
    complement = None
    if cap_t.image_member is not None and cap_p.image_member is not None:
        member = cb.ind_or(cap_t.image_member, cap_p.image_member)
        complement = infinite_enum(cb.complement_enum(member)) \
            if (_coinf(cap_t) and _coinf(cap_p)) else None
    return Capability(
        image_member=member,
        image_complement=complement,
        cert_finite_to_one=cap_t.cert_finite_to_one and cap_p.cert_finite_to_one,
        cert_injective=injective_disjoint,
        cert_image_coinfinite=complement is not None)


def _coinf(cap: Capability) -> bool:
    return cap.cert_image_coinfinite or (
        cap.image_complement is not None and cap.image_complement.kind == INFINITE)


def right_witness_total(theta: MapExpr, phi: MapExpr,
                        cap_t: Capability = Capability(),
                        cap_p: Capability = Capability()) -> WitnessResult:
    """Length-1 sequence between any two total maps."""
    g = cb.gamma_hat(theta, phi)
    seq = _seq(theta, phi, [Step(AH, BH, g)], (AH, BH))
    cap = _derived_gamma_hat_cap(cap_t, cap_p, theta, phi)
    return WitnessResult(seq, ((g, cap, "merge of the endpoints"),))


def right_witness_finite_to_one(theta: MapExpr, phi: MapExpr,
                                cap_t: Capability,
                                cap_p: Capability) -> WitnessResult:
    """As for total maps; the merge map inherits finite fibres."""
    if not (cap_t.cert_finite_to_one and cap_p.cert_finite_to_one):
        raise MissingCapability("both endpoints must be certified finite-to-one")
    res = right_witness_total(theta, phi, cap_t, cap_p)
    g, cap, _ = res.intermediates[0]
    assert cap.cert_finite_to_one
    return WitnessResult(res.sequence, ((g, cap, "finite-to-one merge"),))


def _sole_missing_point(cap: Capability) -> Optional[int]:
    comp = cap.image_complement
    if comp is not None and comp.kind == FINITE and comp.exact \
            and len(comp.values) == 1:
        return comp.values[0]
    return None


def right_witness_non_surjective(theta: MapExpr, phi: MapExpr,
                                 cap_t: Capability,
                                 cap_p: Capability) -> WitnessResult:
    """Length-2 sequence between non-surjective maps, through a constant.

    The constant's value y is chosen so that adjoining y to either image
    still leaves something uncovered: y only has to avoid being the sole
    missing point of either endpoint.
    """
    for cap, name in ((cap_t, "theta"), (cap_p, "phi")):
        if cap.image_complement is None or cap.image_complement.is_empty:
            raise MissingCapability(
                f"{name} needs a nonempty image-complement enumerator")
    forbidden = {p for p in (_sole_missing_point(cap_t),
                             _sole_missing_point(cap_p)) if p is not None}
    y = 0
    while y in forbidden:
        y += 1
    c_y = Const(y)
    g1 = cb.gamma_hat(theta, c_y)
    g2 = cb.gamma_hat(c_y, phi)

    def shrunk(cap: Capability) -> Capability:
        comp = cap.image_complement
        if comp.kind == FINITE:
            new = finite_set(v for v in comp.values if v != y)
        else:
            new = infinite_enum(cb.drop_values(comp.enum, [y]), exact=comp.exact)
        member = None
        if cap.image_member is not None:
            member = cb.ind_or(cap.image_member, _point_indicator(y))
        return Capability(image_member=member, image_complement=new,
                          cert_image_coinfinite=comp.kind == INFINITE)

    seq = _seq(theta, phi, [Step(AH, BH, g1), Step(AH, BH, g2)], (AH, BH))
    return WitnessResult(seq, (
        (g1, shrunk(cap_t), "endpoint merged with the constant"),
        (g2, shrunk(cap_p), "constant merged with the endpoint"),
    ), notes=(f"constant value y={y}",))


def _point_indicator(y: int) -> MapExpr:
    from .terms import Patch
    return Patch(Const(0), ((y, 1),))


def _probe_enum(enum: MapExpr, count: int,
                budgets=(1 << 15, 1 << 19, 1 << 22)) -> bool:
    """Can the enumerator produce `count` values within a doubling budget?

    The first (small) budget only has to surface element 0, so a branch
    whose set is plain empty is rejected cheaply; only sets that show
    life are granted the larger budgets for the full fill.
    """
    old = set_scan_limit(budgets[0])
    try:
        evaluate(enum, 0)
    except BudgetExhausted:
        return False
    finally:
        set_scan_limit(old)
    for budget in budgets[1:]:
        old = set_scan_limit(budget)
        try:
            evaluate(enum, count - 1)
            return True
        except BudgetExhausted:
            continue
        finally:
            set_scan_limit(old)
    return False


def bridge_bl(theta: MapExpr, phi: MapExpr, joint_complement: Enumeration,
              cap_t: Capability, cap_p: Capability) -> tuple[MapExpr, WitnessResult]:
    """Length-2 sequence between Baer-Levi maps missing a common infinite set.

    The midpoint injects everything into every other element of the
    joint complement, so both merge maps stay injective with coinfinite
    image -- the skipped complement elements witness coinfiniteness by
    construction.
    """
    if joint_complement.kind != INFINITE:
        raise MissingCapability("bridge needs an infinite joint complement")
    lam = Compose(cb.DOUBLE, joint_complement.enum)
    lam_member = cb.enum_membership(joint_complement.enum, stride=2, offset=0)
    lam_cap = Capability(
        image_member=lam_member,
        image_complement=infinite_enum(cb.complement_enum(lam_member)),
        cert_injective=True, cert_image_coinfinite=True)

    def merged_cap(a_cap, b_member):
        member = None
        if a_cap.image_member is not None:
            member = cb.ind_or(a_cap.image_member, b_member)
        return Capability(
            image_member=member,
            image_complement=infinite_enum(cb.complement_enum(member))
            if member is not None else None,
            cert_injective=True, cert_image_coinfinite=True)

    g1 = cb.gamma_hat(theta, lam)
    g2 = cb.gamma_hat(lam, phi)
    seq = _seq(theta, phi, [Step(AH, BH, g1), Step(AH, BH, g2)], (AH, BH))
    inter = (
        (lam, lam_cap, "bridge map into the joint complement"),
        (g1, merged_cap(cap_t, lam_member), "first merge"),
        (g2, merged_cap(cap_p, lam_member), "second merge"),
    )
    return lam, WitnessResult(seq, inter)


class UndecidedBranch(RuntimeError):
    """Neither branch produced enough complement elements within budget."""


def right_witness_bl(theta: MapExpr, phi: MapExpr,
                     cap_t: Capability, cap_p: Capability,
                     window: int = 4096) -> WitnessResult:
    """Sequence of length <= 3 between Baer-Levi maps.

    Branch A (the two images miss a common infinite set): bridge
    directly, length 2.  Branch B: first slide theta into every other
    element of (im phi minus im theta), then bridge to phi, length 3.
    Branch choice is by bounded scanning; the output is always window
    verified before being returned.
    """
    for cap, name in ((cap_t, "theta"), (cap_p, "phi")):
        if cap.image_member is None:
            raise MissingCapability(f"{name} needs an image-membership indicator")
        if not (cap.cert_injective and _coinf(cap)):
            raise MissingCapability(f"{name} must be certified Baer-Levi")

    need = 2 * window + 2
    joint = cb.select_enum(forbid=(cap_t.image_member, cap_p.image_member))
    if _probe_enum(joint, need):
        _, res = bridge_bl(theta, phi, infinite_enum(joint), cap_t, cap_p)
        return WitnessResult(res.sequence, res.intermediates, ("branch A",))

    # branch B: Y = im phi \ im theta is infinite when A fails
    y_enum = cb.select_enum(require=(cap_p.image_member,),
                            forbid=(cap_t.image_member,))
    if not _probe_enum(y_enum, need):
        raise UndecidedBranch("both joint-complement and image-difference "
                              "scans exhausted their budgets")
    lam = Compose(cb.DOUBLE, y_enum)
    lam_member = cb.enum_membership(y_enum, stride=2, offset=0)
    lam_cap = Capability(
        image_member=lam_member,
        image_complement=infinite_enum(cb.complement_enum(lam_member)),
        cert_injective=True, cert_image_coinfinite=True)
    g = cb.gamma_hat(theta, lam)
    g_member = cb.ind_or(cap_t.image_member, lam_member)
    g_cap = Capability(
        image_member=g_member,
        image_complement=infinite_enum(cb.complement_enum(g_member)),
        cert_injective=True, cert_image_coinfinite=True)
    # im lam lies inside im phi, so their joint complement is phi's
    _, bridge = bridge_bl(lam, phi, infinite_enum(
        cb.complement_enum(cap_p.image_member)), lam_cap, cap_p)
    seq = _seq(theta, phi, (Step(AH, BH, g),) + bridge.sequence.steps, (AH, BH))
    inter = ((lam, lam_cap, "slide into the image difference"),
             (g, g_cap, "entry merge")) + bridge.intermediates[1:]
    return WitnessResult(seq, inter, ("branch B",))


def right_witness_injective(theta: MapExpr, phi: MapExpr,
                            cap_t: Capability, cap_p: Capability,
                            window: int = 4096,
                            theta_factorization=None,
                            phi_factorization=None) -> WitnessResult:
    """Sequence of length <= 4 between injections, over {1, even, odd}.

    Both endpoints are first pushed into Baer-Levi territory by
    precomposition with the even (or odd) stride; the side for phi is
    picked by interleaved complement scanning so the two pushed images
    miss a common infinite set, and the bridge runs between them.  The
    first and last steps use the adjoined identity as a generator.
    """
    for cap, name in ((cap_t, "theta"), (cap_p, "phi")):
        if not cap.cert_injective:
            raise MissingCapability(f"{name} must be certified injective")
        if cap.image_member is None:
            raise MissingCapability(f"{name} needs an image-membership indicator")

    gamma0, sigma = theta_factorization or (Id(), theta)
    delta0, tau = phi_factorization or (Id(), phi)

    theta1 = Compose(AH, sigma)
    theta1_member = cb.injective_image_indicator(sigma, cap_t.image_member,
                                                 cb.EVEN_INDICATOR)
    theta1_cap = Capability(image_member=theta1_member,
                            image_complement=infinite_enum(
                                cb.complement_enum(theta1_member)),
                            cert_injective=True, cert_image_coinfinite=True)

    need = 2 * window + 2
    chosen = None
    for hat, parity_ind, label in ((AH, cb.EVEN_INDICATOR, "even"),
                                   (BH, cb.ODD_INDICATOR, "odd")):
        phi1 = Compose(hat, tau)
        phi1_member = cb.injective_image_indicator(tau, cap_p.image_member,
                                                   parity_ind)
        joint = cb.select_enum(forbid=(theta1_member, phi1_member))
        if _probe_enum(joint, need):
            chosen = (hat, phi1, phi1_member, joint, label)
            break
    if chosen is None:
        raise UndecidedBranch("no pushed image pair with scannable joint "
                              "complement")
    hat, phi1, phi1_member, joint, label = chosen
    phi1_cap = Capability(image_member=phi1_member,
                          image_complement=infinite_enum(
                              cb.complement_enum(phi1_member)),
                          cert_injective=True, cert_image_coinfinite=True)

    _, bridge = bridge_bl(theta1, phi1, infinite_enum(joint),
                          theta1_cap, phi1_cap)
    gens = (Id(), AH, BH) if (gamma0 == Id() and delta0 == Id()) else \
        (Id(), AH, BH, gamma0, delta0)
    steps = (Step(gamma0, AH, sigma),) + bridge.sequence.steps + \
        (Step(hat, delta0, tau),)
    seq = _seq(theta, phi, steps, gens)
    inter = ((theta1, theta1_cap, "theta pushed through the even stride"),
             (phi1, phi1_cap, f"phi pushed through the {label} stride")) \
        + bridge.intermediates
    return WitnessResult(seq, inter, (f"phi side: {label}",))


def right_witness_partial_bijections(a: PartialMapExpr,
                                     b: PartialMapExpr) -> WitnessResult:
    """Length-2 sequence between partial bijections through the empty map.

    The empty map is a left zero of the partial-map monoid, so every
    element reaches it in one step.
    """
    one, zero = IDENTITY_PARTIAL, EMPTY_PARTIAL
    seq = _seq(a, b, [Step(one, zero, a), Step(zero, one, b)], (one, zero))
    return WitnessResult(seq)


def right_witness_ideal_descent(a: MapExpr, b: MapExpr, u: MapExpr,
                                inner: Callable[[MapExpr, MapExpr], WitnessResult],
                                ) -> WitnessResult:
    """Descend into a right ideal, derive there, and come back.

    Given u in a right ideal I and a constructor producing I-sequences,
    emits  a = 1*a,  u*a ~ ... ~ u*b,  1*b = b,  of length inner+2.
    """
    ua, ub = Compose(u, a), Compose(u, b)
    inner_res = inner(ua, ub)
    inner_seq = inner_res.sequence
    if inner_seq.side != RIGHT:
        raise ValueError("inner witness must be a right sequence")
    gens = (Id(), u) + tuple(g for g in inner_seq.generators
                             if g not in (Id(), u))
    steps = (Step(Id(), u, a),) + inner_seq.steps + (Step(u, Id(), b),)
    seq = _seq(a, b, steps, gens)
    return WitnessResult(seq, inner_res.intermediates,
                         inner_res.notes + ("ideal descent",))
