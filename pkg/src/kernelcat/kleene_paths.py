"""Images of hom-sets of a free category under a functor, by vertex elimination.

A labeled graph and an edge labelling determine a functor from the free
category on the graph.  For a set X of vertices write H^X[v][w] for the
images of nonempty paths v -> w whose interior vertices lie in X.  Then
H^{} is the edge labels and, eliminating x,

    H^X[v][w] = H^{X-x}[v][w]  u  H^{X-x}[v][x] (H^{X-x}[x][x])* H^{X-x}[x][w]

where * is submonoid closure (identity included).  The full table is
H^V plus the identity on each diagonal entry (the empty path).
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from typing import Any, Hashable, Sequence

from .errors import DEFAULT_LIMITS, KernelcatError, Limits, LimitExceeded
from .exact_algebra import Field, Mat, identity as eye, mat_mul
from .semigroup_core import FinMonoid


class MonoidLabels:
    """One-object codomain: labels are element indices of a FinMonoid."""

    def __init__(self, M: FinMonoid):
        self.M = M

    def compose(self, a: int, b: int) -> int:
        return self.M.mul(a, b)

    def identity(self, v: int) -> int:
        return self.M.identity

    def check(self, src: int, tgt: int, label) -> None:
        if not (isinstance(label, int) and 0 <= label < len(self.M)):
            raise KernelcatError(f"label {label!r} is not an element of the monoid")


class MatrixLabels:
    """Category of matrices: vertex v has dimension dims[v]; an edge v -> w
    is labelled by a dims[v] x dims[w] matrix and composes by matrix product."""

    def __init__(self, field: Field, dims: Sequence[int]):
        self.field = field
        self.dims = list(dims)
        self._ids = [eye(field, d) for d in self.dims]

    def compose(self, a: Mat, b: Mat) -> Mat:
        return mat_mul(a, b)

    def identity(self, v: int) -> Mat:
        return self._ids[v]

    def check(self, src: int, tgt: int, label) -> None:
        if not isinstance(label, Mat) or label.shape != (self.dims[src], self.dims[tgt]):
            raise KernelcatError(
                f"edge {src}->{tgt} needs a {self.dims[src]}x{self.dims[tgt]} matrix label")


@dataclass
class LabeledGraph:
    num_vertices: int
    edges: list[tuple[int, int, Any]]
    labels: Any          # MonoidLabels or MatrixLabels

    def __post_init__(self):
        for s, t, lab in self.edges:
            if not (0 <= s < self.num_vertices and 0 <= t < self.num_vertices):
                raise KernelcatError(f"edge ({s}, {t}) has an endpoint outside the graph")
            self.labels.check(s, t, lab)


@dataclass
class PathImageTable:
    homs: dict[tuple[int, int], frozenset]
    order: list[int]
    stages: list[dict[tuple[int, int], frozenset]] = field(default_factory=list)

    def sizes(self) -> dict[tuple[int, int], int]:
        return {k: len(v) for k, v in self.homs.items()}

    def __getitem__(self, vw: tuple[int, int]) -> frozenset:
        return self.homs[vw]


def submonoid_closure(seed, compose, one: Hashable, limits: Limits = DEFAULT_LIMITS) -> set:
    """Smallest product-closed set containing ``seed`` and ``one``."""
    seed = list(dict.fromkeys(seed))
    out = {one}
    queue = deque([one])
    steps = 0
    while queue:
        x = queue.popleft()
        for g in seed:
            steps += 1
            y = compose(x, g)
            if y not in out:
                out.add(y)
                queue.append(y)
        if len(out) > limits.max_elements or steps > limits.max_steps:
            raise LimitExceeded(f"submonoid closure exceeded limits at {len(out)} elements",
                                partial=out, frontier=len(queue))
    return out


def _products(compose, A, B) -> set:
    return {compose(a, b) for a in A for b in B}


def _edge_table(g: LabeledGraph) -> dict[tuple[int, int], set]:
    V = range(g.num_vertices)
    H = {(v, w): set() for v in V for w in V}
    for s, t, lab in g.edges:
        H[s, t].add(lab)
    return H


def image_homsets(g: LabeledGraph, order: Sequence[int] | None = None,
                  limits: Limits = DEFAULT_LIMITS, keep_stages: bool = False) -> PathImageTable:
    """Hom-set images by eliminating vertices in ``order`` (default ascending)."""
    n = g.num_vertices
    order = list(range(n)) if order is None else list(order)
    if sorted(order) != list(range(n)):
        raise KernelcatError("elimination order must be a permutation of the vertices")
    comp = g.labels.compose
    H = _edge_table(g)
    stages = [{k: frozenset(v) for k, v in H.items()}] if keep_stages else []
    for x in order:
        star = submonoid_closure(H[x, x], comp, g.labels.identity(x), limits)
        # (H[v][x] * star) for each v, computed once per stage
        into = {v: _products(comp, H[v, x], star) for v in range(n) if H[v, x]}
        new = {}
        for (v, w), cur in H.items():
            left = into.get(v)
            if left and H[x, w]:
                extra = _products(comp, left, H[x, w])
                new[v, w] = cur | extra
            else:
                new[v, w] = set(cur)
            if len(new[v, w]) > limits.max_elements:
                raise LimitExceeded(f"hom-set ({v}, {w}) exceeded limits", partial=new)
        H = new
        if keep_stages:
            stages.append({k: frozenset(v) for k, v in H.items()})
    homs = {}
    for (v, w), s in H.items():
        if v == w:
            s = s | {g.labels.identity(v)}
        homs[v, w] = frozenset(s)
    return PathImageTable(homs, order, stages)


def image_homsets_bruteforce(g: LabeledGraph, limits: Limits = DEFAULT_LIMITS) -> PathImageTable:
    """Grow path images edge by edge until no new value appears."""
    n = g.num_vertices
    comp = g.labels.compose
    out_edges: dict[int, list[tuple[int, Any]]] = {v: [] for v in range(n)}
    for s, t, lab in g.edges:
        out_edges[s].append((t, lab))
    found: dict[tuple[int, int], set] = {(v, w): set() for v in range(n) for w in range(n)}
    queue = deque()
    for v in range(n):
        one = g.labels.identity(v)
        found[v, v].add(one)
        queue.append((v, v, one))
    steps = 0
    total = n
    while queue:
        v, w, val = queue.popleft()
        for t, lab in out_edges[w]:
            steps += 1
            y = comp(val, lab)
            if y not in found[v, t]:
                found[v, t].add(y)
                total += 1
                queue.append((v, t, y))
        if total > limits.max_elements * max(n, 1) or steps > limits.max_steps:
            raise LimitExceeded("path enumeration exceeded limits", partial=found, frontier=len(queue))
    return PathImageTable({k: frozenset(s) for k, s in found.items()}, [])
