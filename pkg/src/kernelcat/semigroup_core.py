"""Finite monoids by generator closure, homomorphisms and trace monoids."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Callable, Hashable, Sequence

from .errors import DEFAULT_LIMITS, KernelcatError, Limits, LimitExceeded

TABLE_THRESHOLD = 4000   # above this many elements the Cayley table is not materialised


class NotAHomomorphism(KernelcatError):
    def __init__(self, message: str, pair=None):
        super().__init__(message)
        self.pair = pair


class EmptyPreimage(KernelcatError):
    pass


class FinMonoid:
    """An enumerated monoid.

    Elements are numbered 0..n-1 with the identity at ``identity`` (always 0
    for monoids built by :func:`closure`).  ``right[i][j]`` is the index of
    ``element_i * generator_j``; together with ``parent``/``last`` (the word
    structure of the breadth-first spanning tree) it determines every
    product, and the full Cayley ``table`` is built lazily from it.
    """

    def __init__(self, carriers: list, identity: int, generators: list[int],
                 right: list[list[int]] | None = None,
                 parent: list[int] | None = None, last: list[int] | None = None,
                 table: list[list[int]] | None = None):
        self.carriers = carriers
        self.identity = identity
        self.generators = list(generators)
        self.right = right
        self.parent = parent
        self.last = last
        self._table = table
        self._index = None

    @classmethod
    def from_table(cls, table: Sequence[Sequence[int]], identity: int = 0,
                   generators: Sequence[int] | None = None, carriers: list | None = None) -> "FinMonoid":
        """Wrap an explicit multiplication table (no closure is run)."""
        n = len(table)
        table = [list(r) for r in table]
        if any(len(r) != n for r in table):
            raise KernelcatError("multiplication table must be square")
        if any(not 0 <= x < n for r in table for x in r):
            raise KernelcatError("table entry out of range")
        if any(table[identity][i] != i or table[i][identity] != i for i in range(n)):
            raise KernelcatError(f"element {identity} is not a two-sided identity")
        gens = list(range(n)) if generators is None else list(generators)
        return cls(carriers if carriers is not None else list(range(n)), identity, gens, table=table)

    def __len__(self) -> int:
        return len(self.carriers)

    @property
    def order(self) -> int:
        return len(self.carriers)

    @property
    def table(self) -> list[list[int]]:
        if self._table is None:
            self._table = self._build_table()
        return self._table

    def _build_table(self) -> list[list[int]]:
        n = len(self)
        if n > TABLE_THRESHOLD:
            raise LimitExceeded(f"refusing to materialise a {n}x{n} Cayley table")
        right, parent, last = self.right, self.parent, self.last
        tab = [[0] * n for _ in range(n)]
        # elements are numbered so that parent[y] < y
        for x in range(n):
            row = tab[x]
            row[0] = x
            for y in range(1, n):
                row[y] = right[row[parent[y]]][last[y]]
        return tab

    def mul(self, x: int, y: int) -> int:
        if self._table is not None:
            return self._table[x][y]
        for g in self.word(y):
            x = self.right[x][g]
        return x

    def word(self, i: int) -> tuple[int, ...]:
        """Generator positions spelling element i (empty for the identity)."""
        if self.parent is None:
            if i == self.identity:
                return ()
            if i in self.generators:
                return (self.generators.index(i),)
            raise KernelcatError("abstract monoid without closure data has no words")
        out = []
        while i != self.identity:
            out.append(self.last[i])
            i = self.parent[i]
        return tuple(reversed(out))

    def index_of(self, carrier) -> int:
        if self._index is None:
            self._index = {c: i for i, c in enumerate(self.carriers)}
        return self._index[carrier]

    def is_associative(self, sample: int | None = None, seed: int = 0) -> bool:
        import random

        n, t = len(self), self.table
        if sample is None:
            triples = ((a, b, c) for a in range(n) for b in range(n) for c in range(n))
        else:
            rng = random.Random(seed)
            triples = ((rng.randrange(n), rng.randrange(n), rng.randrange(n)) for _ in range(sample))
        return all(t[t[a][b]][c] == t[a][t[b][c]] for a, b, c in triples)

    def is_commutative(self) -> bool:
        t = self.table
        n = len(self)
        return all(t[a][b] == t[b][a] for a in range(n) for b in range(a + 1, n))

    def power(self, x: int, e: int) -> int:
        r = self.identity
        for _ in range(e):
            r = self.mul(r, x)
        return r

    # --- interchange -----------------------------------------------------
    def to_dict(self, carrier_format: Callable | None = None) -> dict:
        d = {
            "order": len(self),
            "identity": self.identity,
            "generators": list(self.generators),
            "table": [x for row in self.table for x in row],
        }
        if carrier_format is not None:
            d["carrier"] = [carrier_format(c) for c in self.carriers]
        return d

    @classmethod
    def from_dict(cls, d: dict, carrier_parse: Callable | None = None) -> "FinMonoid":
        n = d["order"]
        flat = d["table"]
        if len(flat) != n * n:
            raise KernelcatError(f"table has {len(flat)} entries, expected {n * n}")
        table = [flat[i * n:(i + 1) * n] for i in range(n)]
        carriers = None
        if carrier_parse is not None and "carrier" in d:
            carriers = [carrier_parse(c) for c in d["carrier"]]
        return cls.from_table(table, d.get("identity", 0), d.get("generators"), carriers)


def closure(generators: Sequence, mul: Callable[[Any, Any], Any], identity: Hashable,
            limits: Limits = DEFAULT_LIMITS,
            on_new: Callable[[Any, tuple[int, ...]], None] | None = None) -> FinMonoid:
    """Enumerate the monoid generated by ``generators`` breadth first.

    The identity is element 0 whether or not it appears among the generators.
    New elements are numbered by word length, then by (left factor index,
    generator index), so the numbering depends only on the generator order.
    ``on_new(value, word)`` is called for every newly found element and may
    raise to abort the enumeration.
    """
    gens = list(generators)
    carriers = [identity]
    index = {identity: 0}
    parent = [-1]
    last = [-1]
    right: list[list[int]] = []
    steps = 0
    i = 0
    while i < len(carriers):
        x = carriers[i]
        row = []
        for j, g in enumerate(gens):
            steps += 1
            y = mul(x, g)
            k = index.get(y)
            if k is None:
                k = len(carriers)
                index[y] = k
                carriers.append(y)
                parent.append(i)
                last.append(j)
                if on_new is not None:
                    on_new(y, _word(parent, last, k))
            row.append(k)
        right.append(row)
        i += 1
        if len(carriers) > limits.max_elements or steps > limits.max_steps:
            partial = FinMonoid(carriers, 0, [right[0][j] for j in range(len(gens))] if right else [],
                                None, parent, last)
            partial._index = index
            raise LimitExceeded(
                f"closure stopped at {len(carriers)} elements after {steps} products",
                partial=partial, frontier=len(carriers) - i)
    gen_idx = [index[g] for g in gens]
    m = FinMonoid(carriers, 0, gen_idx, right, parent, last)
    m._index = index
    m.steps = steps
    return m


def _word(parent: list[int], last: list[int], i: int) -> tuple[int, ...]:
    out = []
    while i != 0:
        out.append(last[i])
        i = parent[i]
    return tuple(reversed(out))


def matrix_closure(generators: Sequence, limits: Limits = DEFAULT_LIMITS, on_new=None) -> FinMonoid:
    """Closure of square matrices (identity adjoined as element 0)."""
    from .exact_algebra import identity as eye, mat_mul

    if not generators:
        raise KernelcatError("need at least one generator")
    g0 = generators[0]
    for g in generators:
        if not g.is_square or g.shape != g0.shape:
            raise KernelcatError("generators must be square of equal size")
        if g.field != g0.field:
            raise KernelcatError("generators must share a field")
    return closure(generators, mat_mul, eye(g0.field, g0.rows), limits, on_new)


def submonoid(M: FinMonoid, gens: Sequence[int], limits: Limits = DEFAULT_LIMITS) -> FinMonoid:
    """Closure inside an enumerated monoid; carriers are indices of M."""
    return closure(list(gens), M.mul, M.identity, limits)


# ---------------------------------------------------------------------------
# homomorphisms
# ---------------------------------------------------------------------------

@dataclass
class MonoidHom:
    domain: FinMonoid
    codomain: FinMonoid
    image: list[int]                       # element of domain -> element of codomain
    preimages: list[list[int]] = field(default_factory=list)

    def __post_init__(self):
        if not self.preimages:
            pre = [[] for _ in range(len(self.codomain))]
            for m, n in enumerate(self.image):
                pre[n].append(m)
            self.preimages = pre

    def __call__(self, m: int) -> int:
        return self.image[m]

    @property
    def generator_images(self) -> list[int]:
        return [self.image[g] for g in self.domain.generators]

    def verify(self) -> None:
        M, N, phi = self.domain, self.codomain, self.image
        if phi[M.identity] != N.identity:
            raise NotAHomomorphism("identity not sent to identity", (M.identity, M.identity))
        tm, tn = M.table, N.table
        for x in range(len(M)):
            for y in range(len(M)):
                if phi[tm[x][y]] != tn[phi[x]][phi[y]]:
                    raise NotAHomomorphism(f"phi({x}*{y}) != phi({x})*phi({y})", (x, y))


def hom_from_carrier_map(M: FinMonoid, f: Callable[[Any], Hashable]) -> MonoidHom:
    """Build phi from a map on carriers; the codomain is the image.

    Codomain elements are numbered by first appearance along M's element
    order, so the image of M's identity is 0.  The codomain table is read off
    from M's table and every entry is checked for consistency, which is
    exactly the homomorphism condition.
    """
    values = [f(c) for c in M.carriers]
    idx: dict = {}
    image = []
    for v in values:
        if v not in idx:
            idx[v] = len(idx)
        image.append(idx[v])
    k = len(idx)
    tn = [[-1] * k for _ in range(k)]
    tm = M.table
    n = len(M)
    for x in range(n):
        for y in range(n):
            a, b, c = image[x], image[y], image[tm[x][y]]
            if tn[a][b] == -1:
                tn[a][b] = c
            elif tn[a][b] != c:
                raise NotAHomomorphism(
                    f"products {x}*{y} and an earlier pair disagree under the map", (x, y))
    if any(tn[0][j] != j or tn[j][0] != j for j in range(k)):
        raise NotAHomomorphism("image of the identity is not an identity", (M.identity, M.identity))
    carriers = [None] * k
    for v, i in idx.items():
        carriers[i] = v
    N = FinMonoid.from_table(tn, 0, sorted({image[g] for g in M.generators}), carriers)
    return MonoidHom(M, N, image)


def identity_hom(M: FinMonoid) -> MonoidHom:
    return hom_from_carrier_map(M, lambda c: c)


def trivial_hom(M: FinMonoid) -> MonoidHom:
    return hom_from_carrier_map(M, lambda c: ())


def stabilizer_pair(phi: MonoidHom, n1: int, n2: int) -> list[int]:
    """Elements m with n1*phi(m) = n1 and phi(m)*n2 = n2."""
    tn = phi.codomain.table
    return [m for m, nm in enumerate(phi.image) if tn[n1][nm] == n1 and tn[nm][n2] == n2]


# ---------------------------------------------------------------------------
# trace monoids
# ---------------------------------------------------------------------------

TRIVIAL = "Trivial"
GENERAL = "GeneralFinite"


def elementary_abelian_tag(p: int) -> str:
    return f"ElementaryAbelianP({p})"


@dataclass
class TraceMonoid:
    stabilizer: list[int]
    classes: list[list[int]]          # partition of the stabilizer, class 0 holds the identity
    table: list[list[int]]            # quotient multiplication on class indices
    tag: str
    class_of: dict[int, int]

    @property
    def order(self) -> int:
        return len(self.classes)

    def as_monoid(self) -> FinMonoid:
        return FinMonoid.from_table(self.table, 0, list(range(len(self.classes))))


def triple_signature(M: FinMonoid, left: Sequence[int], m: int, right: Sequence[int]) -> tuple:
    t = M.table
    return tuple(t[t[a][m]][b] for a in left for b in right)


def trace_monoid(phi: MonoidHom, n1: int, n2: int) -> TraceMonoid:
    """The stabilizer of (n1, n2) modulo m ~ m' iff m1 m m2 = m1 m' m2 on preimages."""
    left, right = phi.preimages[n1], phi.preimages[n2]
    if not left:
        raise EmptyPreimage(f"codomain element {n1} has no preimage")
    if not right:
        raise EmptyPreimage(f"codomain element {n2} has no preimage")
    M = phi.domain
    stab = stabilizer_pair(phi, n1, n2)
    by_sig: dict[tuple, int] = {}
    classes: list[list[int]] = []
    class_of: dict[int, int] = {}
    # identity first so that class 0 is the identity class
    for m in sorted(stab, key=lambda x: x != M.identity):
        sig = triple_signature(M, left, m, right)
        c = by_sig.setdefault(sig, len(classes))
        if c == len(classes):
            classes.append([])
        classes[c].append(m)
        class_of[m] = c
    t = M.table
    k = len(classes)
    table = [[-1] * k for _ in range(k)]
    for a in range(k):
        for b in range(k):
            for x in classes[a]:
                for y in classes[b]:
                    c = class_of.get(t[x][y])
                    if c is None:
                        raise KernelcatError("stabilizer is not closed under multiplication")
                    if table[a][b] == -1:
                        table[a][b] = c
                    elif table[a][b] != c:
                        raise KernelcatError("triple-product relation is not a congruence")
    return TraceMonoid(stab, classes, table, classify_table(table, 0), class_of)


def classify_table(table: list[list[int]], identity: int = 0) -> str:
    k = len(table)
    if k == 1:
        return TRIVIAL
    p = _prime_root(k)
    if p is None:
        return GENERAL
    commutative = all(table[a][b] == table[b][a] for a in range(k) for b in range(a + 1, k))
    if not commutative:
        return GENERAL
    for a in range(k):
        x = identity
        for _ in range(p):
            x = table[x][a]
        if x != identity:
            return GENERAL
    return elementary_abelian_tag(p)


def _prime_root(k: int) -> int | None:
    p = next(d for d in range(2, k + 1) if k % d == 0)
    while k % p == 0:
        k //= p
    return p if k == 1 else None


def find_isomorphism(t1: Sequence[Sequence[int]], t2: Sequence[Sequence[int]],
                     id1: int = 0, id2: int = 0) -> list[int] | None:
    """Backtracking search for a table isomorphism; fine for small orders."""
    n = len(t1)
    if n != len(t2):
        return None
    assign = [-1] * n
    used = [False] * n
    assign[id1] = id2
    used[id2] = True
    order = [i for i in range(n) if i != id1]

    def consistent() -> bool:
        for a in range(n):
            if assign[a] < 0:
                continue
            for b in range(n):
                if assign[b] < 0:
                    continue
                c = assign[t1[a][b]]
                if c >= 0 and c != t2[assign[a]][assign[b]]:
                    return False
        return True

    def go(pos: int) -> bool:
        if pos == len(order):
            return consistent()
        a = order[pos]
        for cand in range(n):
            if not used[cand]:
                assign[a], used[cand] = cand, True
                if consistent() and go(pos + 1):
                    return True
                assign[a], used[cand] = -1, False
        return False

    return list(assign) if go(0) else None


def transformation_monoid(maps: Sequence[Sequence[int]], limits: Limits = DEFAULT_LIMITS) -> FinMonoid:
    """Monoid of maps on {0..k-1}; composition is diagrammatic (apply left first)."""
    k = len(maps[0])
    ident = tuple(range(k))
    return closure([tuple(m) for m in maps], lambda f, g: tuple(g[f[i]] for i in range(k)), ident, limits)

