"""Partition and partial Brauer monoid arithmetic.

Finite elements are set partitions of two rows of n vertices (tops
1..n, bottoms 1'..n'; JSON uses negative integers for the bottom row).
The product stacks two diagrams, identifies the inner rows, and reads
off connected components with a union-find over the 3n vertices.

Symbolic elements live on N + N' and are presented through block
oracles (vertex -> block id, block id -> members with a size tag); the
diagonal-act construction and its windowed verifier work entirely
through these oracles, with component searches capped so an oversized
claim surfaces as an error rather than a wrong answer.
"""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass
from typing import Iterable, Optional

from .capability import WindowReport
from .terms import MapExpr, compile_map, evaluate, from_json, to_json

TOP, BOT = 0, 1


# ---------------------------------------------------------------------------
# Finite partitions


class _UnionFind:
    def __init__(self):
        self.parent: dict = {}

    def find(self, x):
        p = self.parent
        while p.setdefault(x, x) != x:
            p[x] = p[p[x]]
            x = p[x]
        return x

    def union(self, x, y):
        rx, ry = self.find(x), self.find(y)
        if rx != ry:
            self.parent[ry] = rx


def _vertex_key(v: int) -> tuple[int, int]:
    # tops sort before bottoms, each row by index
    return (0, v) if v > 0 else (1, -v)


@dataclass(frozen=True)
class FinitePartition:
    """Set partition of {1..n} + {-1..-n}; canonical block order."""

    n: int
    blocks: tuple[tuple[int, ...], ...]

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("n must be >= 1")
        seen: set[int] = set()
        for blk in self.blocks:
            if not blk:
                raise ValueError("blocks must be nonempty")
            seen.update(blk)
        universe = set(range(1, self.n + 1)) | set(range(-self.n, 0))
        if seen != universe:
            raise ValueError("blocks must partition the 2n vertices exactly")
        canon = tuple(sorted((tuple(sorted(b, key=_vertex_key)) for b in self.blocks),
                             key=lambda b: _vertex_key(b[0])))
        object.__setattr__(self, "blocks", canon)

    @staticmethod
    def identity(n: int) -> "FinitePartition":
        return FinitePartition(n, tuple((i, -i) for i in range(1, n + 1)))

    @staticmethod
    def from_blocks(n: int, blocks: Iterable[Iterable[int]]) -> "FinitePartition":
        return FinitePartition(n, tuple(tuple(b) for b in blocks))

    def block_of(self, v: int) -> tuple[int, ...]:
        for blk in self.blocks:
            if v in blk:
                return blk
        raise KeyError(v)

    def __mul__(self, other: "FinitePartition") -> "FinitePartition":
        return multiply(self, other)

    def star(self) -> "FinitePartition":
        """Swap the two rows (the diagram upside-down)."""
        return FinitePartition(self.n, tuple(tuple(-v for v in b)
                                             for b in self.blocks))

    def is_pb(self) -> bool:
        return all(len(b) <= 2 for b in self.blocks)

    def to_json(self) -> dict:
        return {"n": self.n, "blocks": [list(b) for b in self.blocks]}

    @staticmethod
    def from_json(d: dict) -> "FinitePartition":
        return FinitePartition(d["n"], tuple(tuple(b) for b in d["blocks"]))


def multiply(a: FinitePartition, b: FinitePartition) -> FinitePartition:
    """Product via connected components of the stacked diagram.

    Vertices: ('t', i) tops, ('m', i) shared middle, ('b', i) bottoms.
    a's bottoms and b's tops land on the middle row.
    """
    if a.n != b.n:
        raise ValueError("size mismatch")
    uf = _UnionFind()
    for blk in a.blocks:
        first = blk[0]
        for v in blk[1:]:
            uf.union(_upper(first), _upper(v))
    for blk in b.blocks:
        first = blk[0]
        for v in blk[1:]:
            uf.union(_lower(first), _lower(v))
    comp: dict = {}
    for i in range(1, a.n + 1):
        for node in (("t", i), ("b", i)):
            comp.setdefault(uf.find(node), []).append(
                i if node[0] == "t" else -i)
        uf.find(("m", i))   # ensure middle nodes are present
    blocks = [tuple(vs) for vs in comp.values()]
    return FinitePartition(a.n, tuple(blocks))


def _upper(v: int):
    return ("t", v) if v > 0 else ("m", -v)


def _lower(v: int):
    return ("m", v) if v > 0 else ("b", -v)


def render_ascii(p: FinitePartition) -> str:
    """Two-row text diagram: vertex labels plus a block-id row each."""
    if p.n > 40:
        raise ValueError("diagram too wide to render")
    ids = {}
    for k, blk in enumerate(p.blocks):
        for v in blk:
            ids[v] = k
    width = max(3, len(str(p.n)) + 1)
    def row(vals):
        return "".join(str(v).rjust(width) for v in vals)
    lines = [
        row(range(1, p.n + 1)),
        row(ids[i] for i in range(1, p.n + 1)),
        row(ids[-i] for i in range(1, p.n + 1)),
        row(f"{i}'" for i in range(1, p.n + 1)),
    ]
    return "\n".join(lines)


# ---------------------------------------------------------------------------
# Symbolic partitions on N + N'

Vertex = tuple[int, int]            # (row, index)

SIZE_FIN = "finite"
SIZE_INF = "infinite"


class SymbolicPartition:
    """Block-oracle presentation of a partition of N + N'.

    Subclasses implement ``block_id(vertex)`` and
    ``block_members(block_id) -> (size_tag, members)`` where members is
    a list for finite blocks (always, for the partial-Brauer fragment
    this package constructs).  ``descriptor()`` returns the JSON form.
    """

    max_block = None        # declared bound on block sizes, if any

    def block_id(self, v: Vertex):
        raise NotImplementedError

    def block_members(self, bid) -> tuple[str, list[Vertex]]:
        raise NotImplementedError

    def is_pb(self) -> bool:
        return self.max_block is not None and self.max_block <= 2

    def star(self) -> "SymbolicPartition":
        return _Star(self)

    def descriptor(self) -> dict:
        raise NotImplementedError

    def block_of(self, v: Vertex) -> list[Vertex]:
        return self.block_members(self.block_id(v))[1]


class _Star(SymbolicPartition):
    def __init__(self, base: SymbolicPartition):
        self.base = base
        self.max_block = base.max_block

    def block_id(self, v: Vertex):
        row, i = v
        return self.base.block_id((1 - row, i))

    def block_members(self, bid):
        tag, members = self.base.block_members(bid)
        return tag, [(1 - r, i) for r, i in members]

    def star(self) -> SymbolicPartition:
        return self.base

    def descriptor(self) -> dict:
        return {"kind": "star", "base": self.base.descriptor()}


class IdentitySymbolic(SymbolicPartition):
    max_block = 2

    def block_id(self, v: Vertex):
        return v[1]

    def block_members(self, bid):
        return SIZE_FIN, [(TOP, bid), (BOT, bid)]

    def descriptor(self) -> dict:
        return {"kind": "identity"}


class MatchingSymbolic(SymbolicPartition):
    """Graph of a bijection, with optionally split (singleton) columns.

    Block of top x is {top x, bottom perm(x)}, unless the split
    indicator holds at x, in which case both vertices are singletons.
    Always partial-Brauer.
    """

    max_block = 2

    def __init__(self, perm: MapExpr, split: MapExpr):
        self.perm = perm
        self.split = split
        self._fwd = compile_map(perm)
        self._split = compile_map(split)
        self._inv: dict[int, int] = {}
        self._cursor = 0

    def _inverse(self, y: int) -> int:
        while y not in self._inv:
            self._inv.setdefault(self._fwd(self._cursor), self._cursor)
            self._cursor += 1
        return self._inv[y]

    def block_id(self, v: Vertex):
        row, i = v
        x = i if row == TOP else self._inverse(i)
        if self._split(x):
            return ("s", row, i)
        return ("m", x)

    def block_members(self, bid):
        if bid[0] == "s":
            return SIZE_FIN, [(bid[1], bid[2])]
        x = bid[1]
        return SIZE_FIN, [(TOP, x), (BOT, self._fwd(x))]

    def descriptor(self) -> dict:
        return {"kind": "matching", "perm": to_json(self.perm),
                "split": to_json(self.split)}


# The five-way split of the naturals backing the diagonal-act generators.

def five_split():
    """Index maps a..e: five injections with disjoint images covering N."""
    return tuple((lambda x, r=r: 5 * x + r) for r in range(5))


def _a(x): return 5 * x
def _b(x): return 5 * x + 1
def _c(x): return 5 * x + 2
def _d(x): return 5 * x + 3
def _e(x): return 5 * x + 4


class AlphaSymbolic(SymbolicPartition):
    """First diagonal-act generator: {x, a_x'}, {b_x', c_x'}, singletons
    {d_x'}, {e_x'}."""

    max_block = 2

    def block_id(self, v: Vertex):
        row, i = v
        if row == TOP:
            return ("x", i)
        q, r = divmod(i, 5)
        if r == 0:
            return ("x", q)
        if r in (1, 2):
            return ("bc", q)
        return ("s", i)

    def block_members(self, bid):
        kind = bid[0]
        if kind == "x":
            return SIZE_FIN, [(TOP, bid[1]), (BOT, _a(bid[1]))]
        if kind == "bc":
            return SIZE_FIN, [(BOT, _b(bid[1])), (BOT, _c(bid[1]))]
        return SIZE_FIN, [(BOT, bid[1])]

    def descriptor(self) -> dict:
        return {"kind": "alpha_five"}


class BetaSymbolic(SymbolicPartition):
    """Second generator: {x, e_x'}, {c_x', d_x'}, singletons {a_x'}, {b_x'}."""

    max_block = 2

    def block_id(self, v: Vertex):
        row, i = v
        if row == TOP:
            return ("x", i)
        q, r = divmod(i, 5)
        if r == 4:
            return ("x", q)
        if r in (2, 3):
            return ("cd", q)
        return ("s", i)

    def block_members(self, bid):
        kind = bid[0]
        if kind == "x":
            return SIZE_FIN, [(TOP, bid[1]), (BOT, _e(bid[1]))]
        if kind == "cd":
            return SIZE_FIN, [(BOT, _c(bid[1])), (BOT, _d(bid[1]))]
        return SIZE_FIN, [(BOT, bid[1])]

    def descriptor(self) -> dict:
        return {"kind": "beta_five"}


class GammaSymbolic(SymbolicPartition):
    """The diagonal-act solution for a pair (theta, phi).

    Top blocks are theta's blocks relabelled through a_/b_ and phi's
    blocks relabelled through e_/d_; every c_x is tied to bottom x.
    Partial-Brauer whenever both inputs are.
    """

    def __init__(self, theta: SymbolicPartition, phi: SymbolicPartition):
        self.theta = theta
        self.phi = phi
        if theta.max_block is not None and phi.max_block is not None:
            self.max_block = max(theta.max_block, phi.max_block, 2)
        else:
            self.max_block = None

    def block_id(self, v: Vertex):
        row, i = v
        if row == BOT:
            return ("c", i)
        q, r = divmod(i, 5)
        if r == 2:
            return ("c", q)
        if r in (0, 1):             # a_u or b_v: theta block relabelled
            inner = (TOP, q) if r == 0 else (BOT, q)
            return ("L", self.theta.block_id(inner))
        inner = (TOP, q) if r == 4 else (BOT, q)
        return ("R", self.phi.block_id(inner))

    def block_members(self, bid):
        kind = bid[0]
        if kind == "c":
            return SIZE_FIN, [(TOP, _c(bid[1])), (BOT, bid[1])]
        if kind == "L":
            tag, members = self.theta.block_members(bid[1])
            return tag, [(TOP, _a(i) if r == TOP else _b(i)) for r, i in members]
        tag, members = self.phi.block_members(bid[1])
        return tag, [(TOP, _e(i) if r == TOP else _d(i)) for r, i in members]

    def descriptor(self) -> dict:
        return {"kind": "gamma_five", "theta": self.theta.descriptor(),
                "phi": self.phi.descriptor()}


def diagonal_generator_pair() -> tuple[AlphaSymbolic, BetaSymbolic]:
    return AlphaSymbolic(), BetaSymbolic()


def diagonal_solution(theta: SymbolicPartition,
                      phi: SymbolicPartition) -> GammaSymbolic:
    return GammaSymbolic(theta, phi)


def symbolic_from_descriptor(d: dict) -> SymbolicPartition:
    kind = d["kind"]
    if kind == "identity":
        return IdentitySymbolic()
    if kind == "alpha_five":
        return AlphaSymbolic()
    if kind == "beta_five":
        return BetaSymbolic()
    if kind == "matching":
        return MatchingSymbolic(from_json(d["perm"]), from_json(d["split"]))
    if kind == "gamma_five":
        return GammaSymbolic(symbolic_from_descriptor(d["theta"]),
                             symbolic_from_descriptor(d["phi"]))
    if kind == "star":
        return symbolic_from_descriptor(d["base"]).star()
    raise ValueError(f"unknown symbolic partition kind {kind!r}")


class CapExceeded(RuntimeError):
    """A component search outgrew the declared block-size bound."""


def product_block(left: SymbolicPartition, right: SymbolicPartition,
                  v: Vertex, cap: int) -> list[Vertex]:
    """Connected component of a vertex in the stacked product diagram.

    Nodes: ('o', vertex) outer (tops of left, bottoms of right),
    ('m', i) shared middle (left bottoms = right tops).  The search
    follows block oracles and stops past `cap` visited nodes.
    """
    def neighbours(node):
        tag, val = node
        if tag == "o":
            row, i = val
            if row == TOP:
                blk = left.block_of((TOP, i))
                return [("o", (TOP, j)) if r == TOP else ("m", j)
                        for r, j in blk]
            blk = right.block_of((BOT, i))
            return [("o", (BOT, j)) if r == BOT else ("m", j)
                    for r, j in blk]
        i = val
        out = []
        for r, j in left.block_of((BOT, i)):
            out.append(("o", (TOP, j)) if r == TOP else ("m", j))
        for r, j in right.block_of((TOP, i)):
            out.append(("o", (BOT, j)) if r == BOT else ("m", j))
        return out

    start = ("o", v)
    seen = {start}
    frontier = [start]
    while frontier:
        node = frontier.pop()
        for nxt in neighbours(node):
            if nxt not in seen:
                if len(seen) >= cap:
                    raise CapExceeded(f"component around {v} exceeded {cap}")
                seen.add(nxt)
                frontier.append(nxt)
    return sorted((val for tag, val in seen if tag == "o"))


def verify_product_on_window(left: SymbolicPartition,
                             right: SymbolicPartition,
                             expected: SymbolicPartition,
                             n: int, cap: Optional[int] = None) -> WindowReport:
    """Check left*right = expected on all window vertices.

    For every top and bottom vertex with index < n the product component
    is computed by capped search and compared with the expected block.
    The cap defaults to the expected block size bound plus relay room;
    partitions without a finite bound are rejected.
    """
    if cap is None:
        bounds = [p.max_block for p in (left, right, expected)]
        if any(bd is None for bd in bounds):
            raise CapExceeded("no declared block-size bound; supply a cap")
        cap = 4 * (max(bounds) + 4)
    checks = 0
    for i in range(n):
        for row in (TOP, BOT):
            v = (row, i)
            got = product_block(left, right, v, cap)
            want = sorted(expected.block_of(v))
            checks += 1
            if got != want:
                return WindowReport(n, False, checks,
                                    {"vertex": v, "got": got, "want": want})
    return WindowReport(n, True, checks)


def verify_diagonal_witness(theta: SymbolicPartition, phi: SymbolicPartition,
                            n: int = 256) -> WindowReport:
    """Window check that the generator pair solves (theta, phi).

    Verifies alpha*gamma = theta and beta*gamma = phi for
    gamma = diagonal_solution(theta, phi).
    """
    alpha, beta = diagonal_generator_pair()
    gamma = diagonal_solution(theta, phi)
    rep = verify_product_on_window(alpha, gamma, theta, n)
    if not rep.ok:
        return rep
    rep2 = verify_product_on_window(beta, gamma, phi, n)
    if not rep2.ok:
        return rep2
    return WindowReport(n, True, rep.checks_run + rep2.checks_run)


def verify_diagonal_witness_starred(theta: SymbolicPartition,
                                    phi: SymbolicPartition,
                                    n: int = 256) -> WindowReport:
    """The flipped identity: gamma* solves (theta*, phi*) from the left."""
    alpha, beta = diagonal_generator_pair()
    gamma = diagonal_solution(theta, phi)
    rep = verify_product_on_window(gamma.star(), alpha.star(), theta.star(), n)
    if not rep.ok:
        return rep
    rep2 = verify_product_on_window(gamma.star(), beta.star(), phi.star(), n)
    if not rep2.ok:
        return rep2
    return WindowReport(n, True, rep.checks_run + rep2.checks_run)
