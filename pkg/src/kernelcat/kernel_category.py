"""The kernel category of a monoid homomorphism.

Objects are pairs (n1, n2) of codomain elements.  The arrow [n1, m, n2]
runs from (n1, phi(m) n2) to (n1 phi(m), n2); composition is diagrammatic,
[n1, m, phi(m') n2][n1 phi(m), m', n2] = [n1, m m', n2].  Two triples with
the same n1, n2 are the same arrow when phi-data agree and m1 m m2 = m1 m' m2
for all m1 over phi^-1(n1) and m2 over phi^-1(n2).

Two contexts supply arrow keys:

* :class:`EnumeratedContext` - M is an enumerated :class:`FinMonoid` and the
  key carries the table of triple products over all preimage pairs;
* :class:`BlockContext` - M consists of block upper triangular matrices
  [[A, B], [0, C]] and phi projects to (A, C); the triple product
  [[X, Z], [0, Y]] m [[U, W], [0, V]] has corner XAW + XBV + ZCV, so the key
  only needs X B V beside the phi-data.
"""

from __future__ import annotations

import hashlib
import heapq
import random
from dataclasses import dataclass, field
from typing import Any, Sequence

from .errors import DEFAULT_LIMITS, KernelcatError, Limits, LimitExceeded, SoundnessError
from .exact_algebra import Mat, identity as eye, mat_mul
from .semigroup_core import FinMonoid, MonoidHom, closure


class ModeUnavailable(KernelcatError):
    pass


class NonComposable(KernelcatError):
    pass


Obj = tuple[int, int]


@dataclass(frozen=True)
class KernelArrow:
    source: Obj
    target: Obj
    key: tuple
    rep: Any = field(compare=False)
    word: tuple[int, ...] = field(compare=False, default=())

    @property
    def n1(self) -> int:
        return self.source[0]

    @property
    def n2(self) -> int:
        return self.target[1]


class EnumeratedContext:
    """Arrow keys for a homomorphism out of an enumerated monoid."""

    mode = "enumerated"

    def __init__(self, phi: MonoidHom):
        self.phi = phi
        self.M = phi.domain
        self.N = phi.codomain
        self.ntab = self.N.table
        self.mtab = self.M.table

    @property
    def one(self) -> int:
        return self.M.identity

    @property
    def generators(self) -> list[int]:
        return list(self.M.generators)

    def image(self, m: int) -> int:
        return self.phi.image[m]

    def mul(self, a: int, b: int) -> int:
        return self.mtab[a][b]

    def key(self, n1: int, m: int, n2: int) -> tuple:
        t = self.mtab
        nm = self.phi.image[m]
        sig = tuple(t[t[a][m]][b] for a in self.phi.preimages[n1] for b in self.phi.preimages[n2])
        return (n1, n2, self.ntab[n1][nm], self.ntab[nm][n2], sig)

    def rep_text(self, m: int) -> str:
        return str(m)


class BlockContext:
    """Arrow keys for block upper triangular matrices projected to their diagonal.

    ``split`` is the size of the top-left block.  The codomain N (pairs of
    diagonal blocks) is enumerated from the generator images under ``limits``.
    """

    mode = "block"

    def __init__(self, generators: Sequence[Mat], split: int, limits: Limits = DEFAULT_LIMITS):
        if not generators:
            raise ModeUnavailable("no generators")
        self.gens = list(generators)
        n = self.gens[0].rows
        if not 0 < split < n:
            raise ModeUnavailable(f"split {split} does not give two nonempty blocks of {n}")
        for g in self.gens:
            if not g.block(split, n, 0, split).is_zero():
                raise ModeUnavailable("generator is not block upper triangular")
        self.n = n
        self.split = split
        self.field = self.gens[0].field
        self.identity_matrix = eye(self.field, n)

        def pmul(a, b):
            return (a[0] @ b[0], a[1] @ b[1])

        one = (eye(self.field, split), eye(self.field, n - split))
        self.N = closure([self._diag(g) for g in self.gens], pmul, one, limits)
        self.ntab = self.N.table

    def _diag(self, m: Mat) -> tuple[Mat, Mat]:
        s, n = self.split, self.n
        return m.block(0, s, 0, s), m.block(s, n, s, n)

    @property
    def one(self) -> Mat:
        return self.identity_matrix

    @property
    def generators(self) -> list[Mat]:
        return self.gens

    def image(self, m: Mat) -> int:
        return self.N.index_of(self._diag(m))

    def mul(self, a: Mat, b: Mat) -> Mat:
        return mat_mul(a, b)

    def xbv(self, n1: int, m: Mat, n2: int) -> Mat:
        X = self.N.carriers[n1][0]
        V = self.N.carriers[n2][1]
        s, n = self.split, self.n
        return X @ m.block(0, s, s, n) @ V

    def key(self, n1: int, m: Mat, n2: int) -> tuple:
        nm = self.image(m)
        return (n1, n2, self.ntab[n1][nm], self.ntab[nm][n2], self.xbv(n1, m, n2).entries)

    def rep_text(self, m: Mat) -> str:
        return m.key_bytes().decode()


def arrow_key(ctx, n1: int, m, n2: int) -> tuple:
    if not hasattr(ctx, "key"):
        raise ModeUnavailable("context provides neither an enumerated monoid nor block structure")
    return ctx.key(n1, m, n2)


def make_arrow(ctx, n1: int, m, n2: int, word: tuple[int, ...] = ()) -> KernelArrow:
    nm = ctx.image(m)
    src = (n1, ctx.ntab[nm][n2])
    tgt = (ctx.ntab[n1][nm], n2)
    return KernelArrow(src, tgt, ctx.key(n1, m, n2), m, word)


def arrow_compose(ctx, f: KernelArrow, g: KernelArrow) -> KernelArrow:
    """Diagrammatic composite: f first, then g."""
    if f.target != g.source:
        raise NonComposable(f"target {f.target} of f differs from source {g.source} of g")
    return make_arrow(ctx, f.n1, ctx.mul(f.rep, g.rep), g.n2, f.word + g.word)


def identity_arrow(ctx, obj: Obj) -> KernelArrow:
    return make_arrow(ctx, obj[0], ctx.one, obj[1])


@dataclass
class KernelCat:
    ctx: Any
    arrows: dict[tuple, KernelArrow]
    generating: list[KernelArrow]
    complete: bool = True
    steps: int = 0

    @property
    def objects(self) -> list[Obj]:
        seen = dict.fromkeys(a.source for a in self.arrows.values())
        seen.update(dict.fromkeys(a.target for a in self.arrows.values()))
        return list(seen)

    @property
    def arrow_count(self) -> int:
        return len(self.arrows)

    def compose(self, f: KernelArrow, g: KernelArrow) -> KernelArrow:
        h = arrow_compose(self.ctx, f, g)
        return self.arrows.get(h.key, h)

    def hom(self, a: Obj, b: Obj) -> list[KernelArrow]:
        return [f for f in self.arrows.values() if f.source == a and f.target == b]

    def by_source(self) -> dict[Obj, list[KernelArrow]]:
        out: dict[Obj, list[KernelArrow]] = {}
        for f in self.arrows.values():
            out.setdefault(f.source, []).append(f)
        return out

    def dump(self, seed: int = 0) -> dict:
        """Object list, arrow list with key digests, and a spot-check seed."""
        objs = sorted(self.objects)
        oid = {o: i for i, o in enumerate(objs)}
        arrows = []
        for f in self.arrows.values():
            digest = hashlib.sha256(key_bytes(f.key)).hexdigest()[:16]
            arrows.append({
                "source": oid[f.source],
                "target": oid[f.target],
                "key": digest,
                "word": "*".join(f"g{i + 1}" for i in f.word) or "1",
            })
        arrows.sort(key=lambda a: (a["source"], a["target"], a["key"]))
        return {
            "mode": self.ctx.mode,
            "complete": self.complete,
            "objects": [list(o) for o in objs],
            "arrows": arrows,
            "arrow_count": len(arrows),
            "spot_check_seed": seed,
        }


def key_bytes(key) -> bytes:
    """Canonical byte encoding of an arrow key."""
    return repr(_key_text(key)).encode()


def _key_text(key) -> Any:
    if isinstance(key, tuple):
        return tuple(_key_text(k) for k in key)
    return str(key)


def kernel_category(ctx, limits: Limits = DEFAULT_LIMITS) -> KernelCat:
    """Close the generating arrows [n1, x, n2] (x a generator) under composition.

    Every arrow factors through generating arrows, so extending each known
    arrow on the right by the generating arrows leaving its target reaches
    the whole category.  Identity arrows are included at every object of
    N x N.  On :class:`LimitExceeded` the partial category is attached and
    flagged incomplete.
    """
    N = ctx.N
    ntab = ctx.ntab
    nN = len(N)
    gens = ctx.generators
    gimg = [ctx.image(x) for x in gens]
    # right_of[xi][k] = all n2 with phi(x) n2 = k
    right_of = []
    for gi in gimg:
        buckets: dict[int, list[int]] = {}
        for n2 in range(nN):
            buckets.setdefault(ntab[gi][n2], []).append(n2)
        right_of.append(buckets)

    arrows: dict[tuple, KernelArrow] = {}
    # worklist ordered by (source object, key bytes) so representatives are deterministic
    queue: list[tuple] = []

    def push(f: KernelArrow) -> None:
        if f.key not in arrows:
            arrows[f.key] = f
            heapq.heappush(queue, (f.source, key_bytes(f.key), f))

    generating: list[KernelArrow] = []
    for n1 in range(nN):
        for n2 in range(nN):
            push(make_arrow(ctx, n1, ctx.one, n2))
    for n1 in range(nN):
        for n2 in range(nN):
            for xi, x in enumerate(gens):
                f = make_arrow(ctx, n1, x, n2, (xi,))
                generating.append(f)
                push(f)

    steps = 0
    while queue:
        f = heapq.heappop(queue)[2]
        n1, k = f.n1, f.n2
        for xi, x in enumerate(gens):
            targets = right_of[xi].get(k, ())
            if not targets:
                continue
            m = ctx.mul(f.rep, x)
            for n2 in targets:
                steps += 1
                push(make_arrow(ctx, n1, m, n2, f.word + (xi,)))
        if len(arrows) > limits.max_elements or steps > limits.max_steps:
            partial = KernelCat(ctx, arrows, generating, complete=False, steps=steps)
            raise LimitExceeded(
                f"kernel category exceeded limits with {len(arrows)} arrows",
                partial=partial, frontier=len(queue))
    return KernelCat(ctx, arrows, generating, complete=True, steps=steps)


def endo_monoid(K: KernelCat, obj: Obj) -> FinMonoid:
    """Self-arrows at ``obj`` under composition; carriers are arrow keys."""
    loops = [f for f in K.arrows.values() if f.source == obj and f.target == obj]
    ident = identity_arrow(K.ctx, obj)
    loops.sort(key=lambda f: f.key != ident.key)
    idx = {f.key: i for i, f in enumerate(loops)}
    table = []
    for f in loops:
        row = []
        for g in loops:
            h = arrow_compose(K.ctx, f, g)
            if h.key not in idx:
                raise SoundnessError("composite of loops missing from the arrow store")
            row.append(idx[h.key])
        table.append(row)
    return FinMonoid.from_table(table, 0, list(range(len(loops))), [f.key for f in loops])


def check_category_axioms(K: KernelCat, exhaustive_limit: int = 500, samples: int = 20_000,
                          seed: int = 0) -> dict:
    """Associativity on composable triples and identity laws at every object."""
    src = K.by_source()
    ctx = K.ctx
    arrows = list(K.arrows.values())
    ids = {o: identity_arrow(ctx, o) for o in K.objects}
    for f in arrows:
        if arrow_compose(ctx, ids[f.source], f).key != f.key:
            raise SoundnessError(f"left identity fails at {f.source}")
        if arrow_compose(ctx, f, ids[f.target]).key != f.key:
            raise SoundnessError(f"right identity fails at {f.target}")
    checked = 0

    def assoc(f, g, h):
        left = arrow_compose(ctx, arrow_compose(ctx, f, g), h)
        right = arrow_compose(ctx, f, arrow_compose(ctx, g, h))
        if left.key != right.key:
            raise SoundnessError("composition is not associative")
        if left.key not in K.arrows:
            raise SoundnessError("composite missing from the arrow store")

    if len(arrows) <= exhaustive_limit:
        for f in arrows:
            for g in src.get(f.target, ()):
                for h in src.get(g.target, ()):
                    assoc(f, g, h)
                    checked += 1
        exhaustive = True
    else:
        rng = random.Random(seed)
        for _ in range(samples):
            f = rng.choice(arrows)
            gs = src.get(f.target)
            if not gs:
                continue
            g = rng.choice(gs)
            hs = src.get(g.target)
            if not hs:
                continue
            assoc(f, g, rng.choice(hs))
            checked += 1
        exhaustive = False
    return {"triples_checked": checked, "exhaustive": exhaustive, "objects": len(ids)}


@dataclass
class EmbeddingReport:
    elements: int
    distinct_keys: int
    collisions: list[tuple[int, int]]

    @property
    def injective(self) -> bool:
        return not self.collisions


def embed_via_unit(ctx, elements: Sequence) -> EmbeddingReport:
    """Check that m -> [1, m, 1] separates the supplied elements."""
    e = ctx.N.identity
    seen: dict[tuple, int] = {}
    collisions = []
    for i, m in enumerate(elements):
        k = ctx.key(e, m, e)
        if k in seen:
            collisions.append((seen[k], i))
        else:
            seen[k] = i
    return EmbeddingReport(len(elements), len(seen), collisions)


@dataclass
class KernelFiniteness:
    certified: bool
    arrow_count: int
    bound: int | None
    direct_order: int | None = None
    injective: bool | None = None
    objects: int = 0
    steps: int = 0
    reason: str = ""

    def to_dict(self) -> dict:
        return {
            "certified": self.certified,
            "arrow_count": self.arrow_count,
            "bound": self.bound,
            "direct_order": self.direct_order,
            "unit_embedding_injective": self.injective,
            "objects": self.objects,
            "reason": self.reason,
        }


def finiteness_via_kernel(ctx, limits: Limits = DEFAULT_LIMITS,
                          elements: Sequence | None = None) -> KernelFiniteness:
    """Enumerate K_phi; when it closes, |M| <= number of arrows.

    ``elements`` (all of M, when known) feeds the injectivity check of
    m -> [1, m, 1] and the comparison with the direct order.
    """
    try:
        K = kernel_category(ctx, limits)
    except LimitExceeded as exc:
        partial = exc.partial
        return KernelFiniteness(False, partial.arrow_count if partial else 0, None,
                                steps=partial.steps if partial else 0, reason=str(exc))
    res = KernelFiniteness(True, K.arrow_count, K.arrow_count,
                           objects=len(ctx.N) ** 2, steps=K.steps)
    if elements is not None:
        emb = embed_via_unit(ctx, elements)
        res.injective = emb.injective
        res.direct_order = len(elements)
        if not emb.injective:
            raise SoundnessError(f"m -> [1,m,1] collides on {emb.collisions[:3]}")
        if len(elements) > K.arrow_count:
            raise SoundnessError(f"|M| = {len(elements)} exceeds arrow count {K.arrow_count}")
    return res
