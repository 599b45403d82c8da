"""Left-sequence constructors.

Mirrors of the right-hand constructions, with the pairing projections as
the generating pair and kernels in place of images:

=============================  ======  =====================================
total maps                       1     through the pairing of the endpoints
non-injective maps               2     through a constant map
dual Baer-Levi                   2     through an interleaved refinement of
                                       the two kernel partitions
dual Baer-Levi with identity    <= 3   identity endpoints enter via a
                                       projection
surjections                      4     push both endpoints into dual
                                       Baer-Levi, derive there, come back
=============================  ======  =====================================

The refinement of two kernel partitions is built by the staged
interleaving tabulator; its classes meet every class of both input
partitions infinitely often, which is exactly what keeps the two middle
maps inside the dual Baer-Levi class.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

from . import combinators as cb
from .capability import (ALL_INFINITE, Capability, MissingCapability,
                         PreimageInfo, finite_set)
from .sequences import (LEFT, DerivationSequence, Step, WitnessResult,
                        verify_sequence)
from .terms import Compose, Const, Id, MapExpr, evaluate, to_json

AT, BT = cb.ALPHA_TILDE, cb.BETA_TILDE

ALPHA_TILDE_CAP = Capability(
    image_member=cb.ALWAYS,
    image_complement=finite_set(()),
    preimage=PreimageInfo(cb.preimage_enum(AT), ALL_INFINITE),
    class_rank=cb.kernel_rank(AT),
    cert_surjective=True, cert_all_kernel_classes_infinite=True,
    collision=(0, 2))


def _seq(a, b, steps, gens) -> DerivationSequence:
    return DerivationSequence(LEFT, a, b, tuple(steps), tuple(gens))


def left_witness_total(theta: MapExpr, phi: MapExpr,
                       cap_t: Capability = Capability(),
                       cap_p: Capability = Capability()) -> WitnessResult:
    """Length-1 left sequence between any two total maps."""
    g = cb.gamma_tilde(theta, phi)
    seq = _seq(theta, phi, [Step(AT, BT, g)], (AT, BT))
    return WitnessResult(seq, ((g, Capability(), "pairing of the endpoints"),))


def left_witness_non_injective(theta: MapExpr, phi: MapExpr,
                               cap_t: Capability,
                               cap_p: Capability) -> WitnessResult:
    """Length-2 left sequence between non-injective maps, through a constant.

    Pairing with a constant does not change the kernel, so both middle
    maps inherit the endpoint collisions.
    """
    for cap, name in ((cap_t, "theta"), (cap_p, "phi")):
        if cap.collision is None:
            raise MissingCapability(f"{name} needs a collision witness")
    c0 = Const(0)
    g1 = cb.gamma_tilde(theta, c0)
    g2 = cb.gamma_tilde(c0, phi)
    seq = _seq(theta, phi, [Step(AT, BT, g1), Step(AT, BT, g2)], (AT, BT))
    return WitnessResult(seq, (
        (g1, Capability(collision=cap_t.collision), "endpoint paired with constant"),
        (g2, Capability(collision=cap_p.collision), "constant paired with endpoint"),
    ))


# ---------------------------------------------------------------------------
# Kernel families and their interleaved refinement


@dataclass(frozen=True)
class ClassFamily:
    """A partition of N presented through its class map.

    ``class_of`` sends a point to its class index; ``member`` is the
    packed enumerator (class, i) -> i-th member in increasing order and
    ``rank`` its inverse on the second coordinate.  For families claimed
    all-infinite every class enumerator is unbounded.
    """

    class_of: MapExpr
    member: Optional[MapExpr] = None
    rank: Optional[MapExpr] = None
    all_infinite: bool = False

    def with_scan_oracles(self) -> "ClassFamily":
        return ClassFamily(self.class_of,
                           member=cb.preimage_enum(self.class_of),
                           rank=cb.kernel_rank(self.class_of),
                           all_infinite=self.all_infinite)


def kernel_family(f: MapExpr, cap: Capability) -> ClassFamily:
    """The kernel partition of a map, classes indexed by image points."""
    if not cap.cert_all_kernel_classes_infinite:
        raise MissingCapability("kernel family requires the all-infinite claim")
    member = cap.preimage.enum if cap.preimage is not None else cb.preimage_enum(f)
    rank = cap.class_rank if cap.class_rank is not None else cb.kernel_rank(f)
    return ClassFamily(f, member, rank, all_infinite=True)


def interleave_families(a: ClassFamily, b: ClassFamily) -> ClassFamily:
    """A third all-infinite partition refining into both inputs.

    Every class of the result meets every class of either input in an
    infinite set (witnessed stagewise by the tabulator), which is the
    combinatorial heart of the two-step derivation between dual
    Baer-Levi maps.
    """
    if not (a.all_infinite and b.all_infinite):
        raise MissingCapability("interleaving needs two all-infinite families")
    class_of = cb.interleave_class_of(a.class_of, b.class_of)
    return ClassFamily(class_of, cb.preimage_enum(class_of),
                       cb.kernel_rank(class_of), all_infinite=True)


def _dbl_cap(f: MapExpr, collision: Optional[tuple[int, int]] = None) -> Capability:
    return Capability(
        image_member=cb.ALWAYS,
        image_complement=finite_set(()),
        preimage=PreimageInfo(cb.preimage_enum(f), ALL_INFINITE),
        class_rank=cb.kernel_rank(f),
        cert_surjective=True, cert_all_kernel_classes_infinite=True,
        collision=collision)


def left_witness_dbl(theta: MapExpr, phi: MapExpr,
                     cap_t: Capability, cap_p: Capability) -> WitnessResult:
    """Length-2 left sequence between dual Baer-Levi maps.

    The midpoint's kernel partition refines against both endpoint
    kernels, so each pairing has all fibres of the form
    (endpoint class) meet (refinement class) -- infinite by the
    interleaving -- keeping both middle maps dual Baer-Levi.
    """
    for cap, name in ((cap_t, "theta"), (cap_p, "phi")):
        if not (cap.cert_surjective and cap.cert_all_kernel_classes_infinite):
            raise MissingCapability(f"{name} must be certified dual Baer-Levi")
    fam_a = kernel_family(theta, cap_t)
    fam_b = kernel_family(phi, cap_p)
    fam_c = interleave_families(fam_a, fam_b)
    lam = fam_c.class_of
    g1 = cb.gamma_tilde(theta, lam)
    g2 = cb.gamma_tilde(lam, phi)
    seq = _seq(theta, phi, [Step(AT, BT, g1), Step(AT, BT, g2)], (AT, BT))
    return WitnessResult(seq, (
        (lam, _dbl_cap(lam), "interleaved refinement class map"),
        (g1, _dbl_cap(g1), "endpoint paired with refinement"),
        (g2, _dbl_cap(g2), "refinement paired with endpoint"),
    ))


def left_witness_dbl1(theta: MapExpr, phi: MapExpr,
                      cap_t: Optional[Capability] = None,
                      cap_p: Optional[Capability] = None) -> WitnessResult:
    """Left sequence of length <= 3 in dual Baer-Levi with identity adjoined.

    Identity endpoints step to a projection first (pair (1, first
    projection), multiplier 1); the rest is the two-step dual Baer-Levi
    derivation.
    """
    is_id_t, is_id_p = theta == Id(), phi == Id()
    if is_id_t and is_id_p:
        return WitnessResult(_seq(theta, phi, (), (Id(), AT, BT)))
    if is_id_t:
        inner = left_witness_dbl(AT, phi, ALPHA_TILDE_CAP, cap_p)
        steps = (Step(Id(), AT, Id()),) + inner.sequence.steps
        seq = _seq(theta, phi, steps, (Id(), AT, BT))
        return WitnessResult(seq, inner.intermediates, ("identity entry",))
    if is_id_p:
        inner = left_witness_dbl(theta, AT, cap_t, ALPHA_TILDE_CAP)
        steps = inner.sequence.steps + (Step(AT, Id(), Id()),)
        seq = _seq(theta, phi, steps, (Id(), AT, BT))
        return WitnessResult(seq, inner.intermediates, ("identity exit",))
    inner = left_witness_dbl(theta, phi, cap_t, cap_p)
    return WitnessResult(
        _seq(theta, phi, inner.sequence.steps, (Id(), AT, BT)),
        inner.intermediates)


def left_witness_surjective(theta: MapExpr, phi: MapExpr,
                            cap_t: Capability,
                            cap_p: Capability) -> WitnessResult:
    """Length-4 left sequence between surjections over {1, projections}.

    Post-composing a surjection with the first projection lands in dual
    Baer-Levi: every fibre is a preimage of a full pairing column, and a
    surjection pulls an infinite set back to an infinite set.  The
    derived capabilities are built from that argument rather than
    requested from the caller.
    """
    for cap, name in ((cap_t, "theta"), (cap_p, "phi")):
        if not cap.cert_surjective:
            raise MissingCapability(f"{name} must be certified surjective")
        if cap.preimage is None:
            raise MissingCapability(f"{name} needs a preimage oracle")
    theta1 = Compose(theta, AT)
    phi1 = Compose(phi, AT)
    inner = left_witness_dbl(theta1, phi1, _dbl_cap(theta1), _dbl_cap(phi1))
    steps = (Step(Id(), AT, theta),) + inner.sequence.steps + (Step(AT, Id(), phi),)
    seq = _seq(theta, phi, steps, (Id(), AT, BT))
    inter = ((theta1, _dbl_cap(theta1), "theta pushed through the projection"),
             (phi1, _dbl_cap(phi1), "phi pushed through the projection")) \
        + inner.intermediates
    return WitnessResult(seq, inter)


# ---------------------------------------------------------------------------
# Exhibiting the dual Baer-Levi class inside a monoid of surjections


@dataclass(frozen=True)
class FactorizationReport:
    pi: MapExpr
    beta: MapExpr
    psi: MapExpr
    verification: object
    notes: tuple[str, ...] = ()


def dbl_containment_factorization(alpha: MapExpr, cap_alpha: Capability,
                                  gamma: MapExpr, cap_gamma: Capability,
                                  k_enum: Optional[MapExpr] = None,
                                  window: int = 1024) -> FactorizationReport:
    """Factor an arbitrary dual Baer-Levi map through powers of alpha.

    Requires alpha to have infinitely many infinite fibres (an enumerator
    of such fibre indices).  Builds a permutation pi sending every other
    big-fibre index to a representative of its alpha-fibre, so
    beta = alpha . pi . alpha is dual Baer-Levi; then transports gamma's
    kernel classes onto beta's rank-by-rank with a bijection psi,
    giving psi . beta = gamma pointwise (window verified).
    """
    if cap_alpha.preimage is None:
        raise MissingCapability("alpha needs a preimage oracle")
    if cap_alpha.preimage.per_class == "all_finite":
        raise MissingCapability("alpha has no infinite fibres on record")
    if k_enum is None:
        if not cap_alpha.cert_all_kernel_classes_infinite:
            raise MissingCapability(
                "supply k_enum unless every alpha fibre is infinite")
        k_enum = Id()   # every index has an infinite fibre
    if not (cap_gamma.cert_surjective and cap_gamma.cert_all_kernel_classes_infinite):
        raise MissingCapability("gamma must be certified dual Baer-Levi")

    # y_x = every other big-fibre index; a_x = least point of alpha's x-fibre
    pre_alpha = cap_alpha.preimage.enum
    y_enum = Compose(cb.DOUBLE, k_enum)
    first_of_fibre = Compose(cb.PackPair(Id(), Const(0)), pre_alpha)
    y_member = cb.enum_membership(k_enum, stride=2, offset=0)
    # A = {a_x}: v belongs iff v is the least point of its own alpha-fibre
    a_member = cb.eq_maps_indicator(Compose(alpha, first_of_fibre), Id())
    pi = cb.region_map(
        regions=[(y_member, cb.rank_transport(y_enum, first_of_fibre))],
        default=cb.order_embed(cb.ind_not(y_member), cb.ind_not(a_member)))
    beta = Compose(Compose(alpha, pi), alpha)
    # psi sends the rank-r point of a gamma fibre to the rank-r point of
    # the matching beta fibre, so psi-then-beta recovers gamma
    psi = Compose(cb.PackPair(gamma, cb.kernel_rank(gamma)),
                  cb.preimage_enum(beta))
    from .capability import verify_equal_on_window
    verification = verify_equal_on_window(Compose(psi, beta), gamma, window)
    return FactorizationReport(pi, beta, psi, verification,
                               notes=("beta = alpha.pi.alpha",
                                      "psi transports kernel classes by rank"))
