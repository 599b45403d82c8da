import random

import pytest
from hypothesis import given, settings, strategies as st

from semidiameter.terms import (AffineMod, Compose, Const, Id, Opaque, Patch,
                                PiecewiseMod, TermError, UnknownGenerator,
                                dumps, evaluate, from_json, loads, pack,
                                to_json, unpack)
from semidiameter import combinators as cb


def test_evaluate_basic_nodes():
    assert evaluate(Id(), 7) == 7
    assert evaluate(AffineMod(1, ((2, 0),)), 5) == 10
    pm = PiecewiseMod(2, (AffineMod(1, ((1, 1),)), AffineMod(1, ((3, 0),))))
    assert evaluate(pm, 5) == 6          # odd branch at q=2: 3*2
    assert evaluate(Const(9), 123) == 9
    assert evaluate(Patch(Id(), ((3, 0),)), 3) == 0
    assert evaluate(Patch(Id(), ((3, 0),)), 4) == 4
    assert evaluate(Compose(AffineMod(1, ((2, 0),)), AffineMod(1, ((1, 1),))), 5) == 11


def test_pack_unpack_values():
    assert pack(0, 0) == 0
    assert pack(1, 2) == 8
    assert unpack(4) == (1, 1)
    assert pack(1, 1) == 4


def test_pack_unpack_inverse_ranges():
    for x in range(10 ** 6):
        a, b = unpack(x)
        assert pack(a, b) == x
    for a in range(700):
        for b in range(700 - a):
            assert unpack(pack(a, b)) == (a, b)


def test_malformed_terms_rejected():
    with pytest.raises(TermError):
        AffineMod(0, ())
    with pytest.raises(TermError):
        AffineMod(2, ((1, 0),))
    with pytest.raises(TermError):
        PiecewiseMod(2, (Id(),))
    with pytest.raises(TermError):
        Patch(Id(), ((1, 0), (1, 2)))


def test_unregistered_opaque():
    with pytest.raises(UnknownGenerator):
        evaluate(Opaque("no-such-generator", "{}"), 0)


def random_term(rng, depth):
    if depth <= 0:
        return rng.choice([
            Id(), Const(rng.randrange(6)),
            AffineMod(1, ((rng.randrange(4), rng.randrange(4)),))])
    pick = rng.random()
    if pick < 0.25:
        return Compose(random_term(rng, depth - 1), random_term(rng, depth - 1))
    if pick < 0.45:
        return PiecewiseMod(2, (random_term(rng, depth - 1),
                                random_term(rng, depth - 1)))
    if pick < 0.65:
        m = rng.randrange(1, 4)
        return AffineMod(m, tuple((rng.randrange(4), rng.randrange(6))
                                  for _ in range(m)))
    if pick < 0.8:
        keys = rng.sample(range(10), 2)
        return Patch(random_term(rng, depth - 1),
                     tuple((k, rng.randrange(10)) for k in keys))
    from semidiameter.terms import PackPair, UnpackFirst
    if pick < 0.9:
        return Compose(PackPair(random_term(rng, depth - 1), Id()),
                       UnpackFirst())
    return random_term(rng, depth - 1)


def test_serialization_roundtrip_1000_terms():
    rng = random.Random(7)
    for _ in range(1000):
        t = random_term(rng, 3)
        back = loads(dumps(t))
        for x in range(0, 1024, 7):
            assert evaluate(back, x) == evaluate(t, x)


def test_serialization_exact_roundtrip_structure():
    rng = random.Random(8)
    for _ in range(200):
        t = random_term(rng, 3)
        assert from_json(to_json(t)) == t


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 1023), st.integers(0, 400))
def test_compose_associative_pointwise(x, salt):
    rng = random.Random(salt)
    f, g, h = (random_term(rng, 2) for _ in range(3))
    lhs = Compose(Compose(f, g), h)
    rhs = Compose(f, Compose(g, h))
    assert evaluate(lhs, x) == evaluate(rhs, x)


def test_residue_complement_closed_form():
    # every residue class complement, checked against a brute scan
    for m in range(2, 6):
        for c in range(m):
            enum = cb.residue_complement_enum(m, c)
            brute = [v for v in range(200) if v % m != c]
            got = [evaluate(enum, i) for i in range(len(brute))]
            assert got == brute


def test_opaque_params_canonical():
    a = cb.ind_or(Id(), Const(0))
    b = loads(dumps(a))
    assert a == b and isinstance(a, Opaque)
