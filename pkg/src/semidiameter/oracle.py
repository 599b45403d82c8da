"""Ground truth on finite semigroups: closures, congruences, diameters.

Elements are finite transformations (tuples t with t[i] the image of i,
composed left to right) or finite partitions; anything hashable with a
supplied product works.  The one-step relation underlying all distance
computations is exactly the derivation form: a ~ b in one step iff
a = u*s and b = v*s for a generating pair (u, v) and a multiplier s from
the monoid with adjoined identity.  Distances are graph distances over
these edges, so they faithfully measure derivation length, with no
shortcut through quotients.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Callable, Iterable, Optional, Sequence

from .partitions import FinitePartition


def compose_transformations(t, s):
    """Left-to-right composition of image tuples: x(ts) = (xt)s."""
    return tuple(s[v] for v in t)


def transformation_product(a, b):
    if isinstance(a, FinitePartition):
        return a * b
    return compose_transformations(a, b)


def identity_like(element):
    if isinstance(element, FinitePartition):
        return FinitePartition.identity(element.n)
    return tuple(range(len(element)))


class CapExceeded(RuntimeError):
    pass


@dataclass
class FiniteSemigroup:
    elements: list
    product: Callable
    index: dict = field(repr=False, default_factory=dict)
    table: list = field(repr=False, default_factory=list)
    identity_index: Optional[int] = None
    adjoined_identity: bool = False

    def __post_init__(self):
        if not self.index:
            self.index = {e: i for i, e in enumerate(self.elements)}
        if not self.table:
            self.table = [[self.index[self.product(a, b)] for b in self.elements]
                          for a in self.elements]
        if self.identity_index is None:
            for i, e in enumerate(self.elements):
                if all(self.table[i][j] == j and self.table[j][i] == j
                       for j in range(len(self.elements))):
                    self.identity_index = i
                    break

    def __len__(self):
        return len(self.elements)

    def mul(self, i: int, j: int) -> int:
        return self.table[i][j]

    def multiplier_indices(self) -> list[Optional[int]]:
        """Indices of S^1: all of S, plus None for an adjoined identity."""
        if self.identity_index is not None:
            return list(range(len(self.elements)))
        return [None] + list(range(len(self.elements)))

    def mul_opt(self, i: int, s: Optional[int]) -> int:
        return i if s is None else self.table[i][s]

    def lmul_opt(self, s: Optional[int], i: int) -> int:
        return i if s is None else self.table[s][i]

    def spot_check_associativity(self, limit: int = 60) -> bool:
        n = len(self.elements)
        if n > limit:
            return True
        for i in range(n):
            for j in range(n):
                for k in range(n):
                    if self.table[self.table[i][j]][k] != \
                            self.table[i][self.table[j][k]]:
                        return False
        return True


def generate_semigroup(gens: Sequence, product: Callable = transformation_product,
                       max_elements: int = 4096) -> FiniteSemigroup:
    """Closure of the generators under the product, breadth first."""
    elements = []
    index = {}
    queue = []
    for g in gens:
        if g not in index:
            index[g] = len(elements)
            elements.append(g)
            queue.append(g)
    while queue:
        a = queue.pop(0)
        for b in list(elements):
            for c in (product(a, b), product(b, a)):
                if c not in index:
                    if len(elements) >= max_elements:
                        raise CapExceeded(f"closure exceeded {max_elements}")
                    index[c] = len(elements)
                    elements.append(c)
                    queue.append(c)
    sg = FiniteSemigroup(elements, product, index)
    if not sg.spot_check_associativity():
        raise AssertionError("product table is not associative")
    return sg


def full_transformation_monoid(n: int) -> FiniteSemigroup:
    elements = [tuple(t) for t in itertools.product(range(n), repeat=n)]
    return FiniteSemigroup(elements, compose_transformations)


# ---------------------------------------------------------------------------
# Congruence closures and distances


class _UF:
    def __init__(self, n):
        self.p = list(range(n))

    def find(self, x):
        while self.p[x] != x:
            self.p[x] = self.p[self.p[x]]
            x = self.p[x]
        return x

    def union(self, a, b):
        ra, rb = self.find(a), self.find(b)
        if ra != rb:
            self.p[rb] = ra


def _pair_indices(sg: FiniteSemigroup, pairs) -> list[tuple[int, int]]:
    out = []
    for u, v in pairs:
        iu = u if isinstance(u, int) else sg.index[u]
        iv = v if isinstance(v, int) else sg.index[v]
        out.append((iu, iv))
    return out


def right_congruence_closure(sg: FiniteSemigroup, pairs) -> list[list[int]]:
    """Classes of the right congruence generated by the pairs.

    One union pass over all (u*s, v*s) suffices: the derivation chains
    are exactly paths in that relation, and right-multiplying a chain
    by any s gives another chain, so the union-find closure is already
    right-compatible.
    """
    uf = _UF(len(sg))
    for iu, iv in _pair_indices(sg, pairs):
        for s in sg.multiplier_indices():
            uf.union(sg.mul_opt(iu, s), sg.mul_opt(iv, s))
    classes: dict[int, list[int]] = {}
    for i in range(len(sg)):
        classes.setdefault(uf.find(i), []).append(i)
    return sorted(classes.values())


def left_congruence_closure(sg: FiniteSemigroup, pairs) -> list[list[int]]:
    uf = _UF(len(sg))
    for iu, iv in _pair_indices(sg, pairs):
        for s in sg.multiplier_indices():
            uf.union(sg.lmul_opt(s, iu), sg.lmul_opt(s, iv))
    classes: dict[int, list[int]] = {}
    for i in range(len(sg)):
        classes.setdefault(uf.find(i), []).append(i)
    return sorted(classes.values())


def _one_step_edges(sg: FiniteSemigroup, pairs, side: str):
    adj: list[set[int]] = [set() for _ in range(len(sg))]
    edge_data: dict[tuple[int, int], tuple] = {}
    for iu, iv in _pair_indices(sg, pairs):
        for s in sg.multiplier_indices():
            if side == "right":
                a, b2 = sg.mul_opt(iu, s), sg.mul_opt(iv, s)
            else:
                a, b2 = sg.lmul_opt(s, iu), sg.lmul_opt(s, iv)
            adj[a].add(b2)
            adj[b2].add(a)
            edge_data.setdefault((a, b2), (iu, iv, s))
            edge_data.setdefault((b2, a), (iv, iu, s))
    return adj, edge_data


INF = float("inf")


def distance_matrix(sg: FiniteSemigroup, pairs, side: str = "right"):
    """All-pairs derivation distances (graph BFS on one-step edges)."""
    adj, _ = _one_step_edges(sg, pairs, side)
    n = len(sg)
    dist = [[INF] * n for _ in range(n)]
    for src in range(n):
        dist[src][src] = 0
        frontier = [src]
        d = 0
        while frontier:
            d += 1
            nxt = []
            for a in frontier:
                for b in adj[a]:
                    if dist[src][b] is INF:
                        dist[src][b] = d
                        nxt.append(b)
            frontier = nxt
    return dist


def right_distances(sg, pairs):
    return distance_matrix(sg, pairs, "right")


def left_distances(sg, pairs):
    return distance_matrix(sg, pairs, "left")


def is_universal(sg: FiniteSemigroup, pairs, side: str = "right") -> bool:
    classes = (right_congruence_closure if side == "right"
               else left_congruence_closure)(sg, pairs)
    return len(classes) == 1


def diameter_for(sg: FiniteSemigroup, pairs, side: str = "right"):
    """Max derivation distance, or inf when the pairs are not universal."""
    dist = distance_matrix(sg, pairs, side)
    worst = 0
    for row in dist:
        for d in row:
            if d is INF:
                return INF
            worst = max(worst, d)
    return worst


def is_universal_right(sg, pairs):
    return is_universal(sg, pairs, "right")


def right_diameter_for(sg, pairs):
    return diameter_for(sg, pairs, "right")


def left_diameter_for(sg, pairs):
    return diameter_for(sg, pairs, "left")


@dataclass(frozen=True)
class DiameterSearch:
    pairs: tuple
    diameter: object
    exhaustive: bool
    examined: int


def search_min_diameter(sg: FiniteSemigroup, max_pairs: int,
                        side: str = "right", exhaustive_limit: int = 10,
                        beam: int = 2000, seed: int = 0) -> DiameterSearch:
    """Minimum diameter over pair sets of bounded size.

    Exhaustive for small semigroups (every subset of S x S up to the
    size bound, with early exit at the theoretical floor); beyond the
    guard a seeded random beam reports an upper bound only.
    """
    n = len(sg)
    floor = 0 if n == 1 else 1
    all_pairs = [(i, j) for i in range(n) for j in range(n) if i < j]
    best: Optional[tuple] = None
    best_d = INF
    examined = 0
    if n == 1:
        return DiameterSearch((), 0, True, 0)
    if n <= exhaustive_limit:
        # enlarging a pair set never increases the diameter, so larger
        # sizes can only improve; the floor justifies early exit
        for k in range(1, max_pairs + 1):
            for combo in itertools.combinations(all_pairs, k):
                examined += 1
                d = diameter_for(sg, combo, side)
                if d < best_d:
                    best, best_d = combo, d
                    if best_d <= floor:
                        return DiameterSearch(best, best_d, True, examined)
        return DiameterSearch(best or (), best_d, True, examined)
    import random as _random
    rng = _random.Random(seed)
    for _ in range(beam):
        k = rng.randrange(1, max_pairs + 1)
        combo = tuple(rng.sample(all_pairs, k))
        examined += 1
        d = diameter_for(sg, combo, side)
        if d < best_d:
            best, best_d = combo, d
    return DiameterSearch(best or (), best_d, False, examined)


# ---------------------------------------------------------------------------
# Cross checks


def naive_congruence_fixpoint(sg: FiniteSemigroup, pairs,
                              side: str = "right") -> list[list[int]]:
    """Slow fixpoint of reflexive-symmetric-transitive-compatible closure.

    Kept deliberately independent of the union-find route: it iterates
    relation matrices to a fixed point and is used to cross-examine
    right_congruence_closure in tests.
    """
    n = len(sg)
    rel = [[i == j for j in range(n)] for i in range(n)]
    for iu, iv in _pair_indices(sg, pairs):
        rel[iu][iv] = rel[iv][iu] = True
    changed = True
    while changed:
        changed = False
        for a in range(n):
            for b2 in range(n):
                if not rel[a][b2]:
                    continue
                for s in sg.multiplier_indices():
                    if side == "right":
                        x, y = sg.mul_opt(a, s), sg.mul_opt(b2, s)
                    else:
                        x, y = sg.lmul_opt(s, a), sg.lmul_opt(s, b2)
                    if not rel[x][y]:
                        rel[x][y] = rel[y][x] = True
                        changed = True
                for c in range(n):
                    if rel[b2][c] and not rel[a][c]:
                        rel[a][c] = rel[c][a] = True
                        changed = True
    classes = []
    seen = set()
    for i in range(n):
        if i in seen:
            continue
        cls = [j for j in range(n) if rel[i][j]]
        seen.update(cls)
        classes.append(cls)
    return sorted(classes)


def reconstruct_sequence(sg: FiniteSemigroup, pairs, a: int, b: int,
                         side: str = "right"):
    """Explicit derivation steps realizing the BFS distance from a to b.

    Returns a list of (u, v, s) index triples (s None for the adjoined
    identity) or None when a and b are not related.
    """
    adj, edge_data = _one_step_edges(sg, pairs, side)
    prev: dict[int, int] = {a: a}
    frontier = [a]
    while frontier and b not in prev:
        nxt = []
        for x in frontier:
            for y in adj[x]:
                if y not in prev:
                    prev[y] = x
                    nxt.append(y)
        frontier = nxt
    if b not in prev:
        return None
    path = [b]
    while path[-1] != a:
        path.append(prev[path[-1]])
    path.reverse()
    return [edge_data[(path[i], path[i + 1])] for i in range(len(path) - 1)]


def cross_check_sequence_semantics(sg: FiniteSemigroup, pairs, trials: int,
                                   side: str = "right", seed: int = 0) -> dict:
    """Replay reconstructed sequences against the product table.

    For random related pairs, rebuilds an explicit derivation of length
    equal to the BFS distance and re-verifies every step equality; any
    mismatch is an engine bug and raises.
    """
    import random as _random
    rng = _random.Random(seed)
    dist = distance_matrix(sg, pairs, side)
    n = len(sg)
    related = [(a, b) for a in range(n) for b in range(n)
               if a != b and dist[a][b] is not INF]
    checked = 0
    for _ in range(trials):
        if not related:
            break
        a, b = rng.choice(related)
        steps = reconstruct_sequence(sg, pairs, a, b, side)
        assert steps is not None and len(steps) == dist[a][b], \
            "distance and reconstruction disagree"
        cur = a
        for u, v, s in steps:
            if side == "right":
                lhs, nxt = sg.mul_opt(u, s), sg.mul_opt(v, s)
            else:
                lhs, nxt = sg.lmul_opt(s, u), sg.lmul_opt(s, v)
            assert lhs == cur, "step does not match the running element"
            cur = nxt
        assert cur == b, "sequence does not land on the target"
        checked += 1
    return {"checked": checked, "pairs_related": len(related)}


def left_zero_elements(sg: FiniteSemigroup) -> list[int]:
    return [z for z in range(len(sg))
            if all(sg.table[z][s] == z for s in range(len(sg)))]
