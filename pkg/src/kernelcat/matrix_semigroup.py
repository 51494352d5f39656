"""Triangularisation, irreducible-block certificates and the off-diagonal embedding."""

from __future__ import annotations

import math
import random
from dataclasses import dataclass, field
from typing import Iterable, Sequence

from .errors import KernelcatError, SoundnessError
from .exact_algebra import (
    Field,
    Mat,
    RowSpace,
    block_diag,
    embed_matrix,
    factor_polynomial,
    field_make,
    from_columns,
    identity as eye,
    inverse,
    mat_add,
    mat_scale,
    mat_vec,
    minimal_polynomial,
    nullspace,
    poly_eval_matrix,
    root_of_unity_orders,
    trace,
    trace_form,
    transpose,
    zeros,
)
from .semigroup_core import TRIVIAL, elementary_abelian_tag


class DoesNotSpan(KernelcatError):
    pass


class DegenerateGram(SoundnessError):
    def __init__(self, message: str, kernel_vector=None):
        super().__init__(message)
        self.kernel_vector = kernel_vector


class NotInSpan(KernelcatError):
    pass


class NotInStabilizer(KernelcatError):
    def __init__(self, relation: str):
        super().__init__(f"stabilizer relation {relation} fails")
        self.relation = relation


# ---------------------------------------------------------------------------
# subspaces and the generated algebra
# ---------------------------------------------------------------------------

def spin_up(gens: Sequence[Mat], v: Sequence) -> list[tuple]:
    """Basis of the smallest subspace containing v and stable under every generator."""
    F = gens[0].field
    space = RowSpace(F, len(v))
    if not space.add(v):
        return []
    i = 0
    while i < len(space.vectors):
        w = space.vectors[i]
        for g in gens:
            space.add(mat_vec(g, w))
        i += 1
    return list(space.vectors)


def echelon_basis(F: Field, vectors: Sequence[Sequence]) -> list[tuple]:
    """Reduced row echelon basis of the span (a canonical basis)."""
    from .exact_algebra import _rref_rows

    rows, pivots = _rref_rows(F, [list(v) for v in vectors])
    return [tuple(r) for r in rows[:len(pivots)]]


def annihilator(F: Field, vectors: Sequence[Sequence], n: int) -> list[tuple]:
    if not vectors:
        return [tuple(F.one if i == j else F.zero for i in range(n)) for j in range(n)]
    return nullspace(Mat.from_rows(F, [list(v) for v in vectors]))


@dataclass
class SpanningResult:
    spans: bool
    dim: int
    basis: list[Mat]


def spanning_check(gens: Sequence[Mat]) -> SpanningResult:
    """Dimension of the unital algebra generated by ``gens``."""
    F = gens[0].field
    n = gens[0].rows
    space = RowSpace(F, n * n)
    basis: list[Mat] = []
    one = eye(F, n)
    space.add(one.entries)
    basis.append(one)
    i = 0
    while i < len(basis) and len(basis) < n * n:
        b = basis[i]
        for g in gens:
            c = b @ g
            if space.add(c.entries):
                basis.append(c)
        i += 1
    return SpanningResult(len(basis) == n * n, len(basis), basis)


@dataclass
class SubspaceSearch:
    """Outcome of :func:`invariant_subspace`.

    ``basis`` is a proper nonzero invariant subspace (echelon basis) or None.
    ``irreducible`` is True only when irreducibility was proved: the algebra
    spans everything, or the kernel criterion of Norton applied.
    """

    basis: list[tuple] | None
    algebra_dim: int
    irreducible: bool
    method: str


def _pseudo_random_vectors(F: Field, n: int, count: int, rng: random.Random) -> list[tuple]:
    out = []
    for _ in range(count):
        if F.is_finite:
            elems = F.elements()
            out.append(tuple(rng.choice(elems) for _ in range(n)))
        else:
            out.append(tuple(rng.randint(-3, 3) for _ in range(n)))
    return out


def invariant_subspace(gens: Sequence[Mat], probes: int = 24, seed: int = 20240611) -> SubspaceSearch:
    """Look for a proper nonzero subspace stable under every generator.

    Seeds, in order: standard basis vectors, generator columns, and eight
    fixed pseudo-random vectors, each spun up under the generators; the same
    under the transposed generators (whose invariant subspaces have invariant
    annihilators); then kernel probes - for an algebra element a and an
    irreducible factor f of its minimal polynomial, vectors of ker f(a) and
    ker f(a)^T are spun up, and when ker f(a) has dimension deg f and both
    spins fill the space the module is certified irreducible.
    """
    F = gens[0].field
    n = gens[0].rows
    alg = spanning_check(gens)
    if n == 1:
        return SubspaceSearch(None, alg.dim, True, "dimension one")
    if alg.spans:
        return SubspaceSearch(None, alg.dim, True, "algebra spans")
    gens_t = [transpose(g) for g in gens]
    rng = random.Random(seed)

    def proper(vs) -> bool:
        return 0 < len(vs) < n

    std = [tuple(F.one if i == j else F.zero for i in range(n)) for j in range(n)]
    randoms = _pseudo_random_vectors(F, n, 8, rng)
    col_seeds = std + [g.col(j) for g in gens for j in range(n)] + randoms
    row_seeds = std + [g.row(i) for g in gens for i in range(n)] + randoms
    for v in col_seeds:
        W = spin_up(gens, v)
        if proper(W):
            return SubspaceSearch(echelon_basis(F, W), alg.dim, False, "spin-up")
    for v in row_seeds:
        W = spin_up(gens_t, v)
        if proper(W):
            return SubspaceSearch(echelon_basis(F, annihilator(F, W, n)), alg.dim, False, "dual spin-up")

    candidates = list(gens)
    for _ in range(probes):
        a = zeros(F, n, n)
        for b in alg.basis:
            c = F.from_int(rng.randint(-2, 2)) if not F.is_finite else rng.choice(F.elements())
            if not F.is_zero(c):
                a = mat_add(a, mat_scale(c, b))
        candidates.append(a)
    for a in candidates:
        for f, mult in factor_polynomial(F, minimal_polynomial(a)):
            fa = poly_eval_matrix(f, a)
            ker = nullspace(fa)
            for v in ker:
                W = spin_up(gens, v)
                if proper(W):
                    return SubspaceSearch(echelon_basis(F, W), alg.dim, False, "kernel probe")
            ker_t = nullspace(transpose(fa))
            for w in ker_t:
                W = spin_up(gens_t, w)
                if proper(W):
                    return SubspaceSearch(echelon_basis(F, annihilator(F, W, n)), alg.dim, False,
                                          "dual kernel probe")
            if mult > 0 and ker and len(ker) == len(f) - 1:
                return SubspaceSearch(None, alg.dim, True, "Norton criterion")
    return SubspaceSearch(None, alg.dim, False, "search exhausted")


# ---------------------------------------------------------------------------
# flags
# ---------------------------------------------------------------------------

@dataclass
class BlockInfo:
    offset: int
    size: int
    spans: bool
    algebra_dim: int
    irreducible: bool
    method: str


@dataclass
class FlagDecomposition:
    field: Field
    Q: Mat
    Q_inv: Mat
    sizes: list[int]
    conjugated: list[Mat]
    blocks: list[BlockInfo]
    base_field: Field | None = None

    def diagonal_block(self, i: int) -> list[Mat]:
        b = self.blocks[i]
        lo, hi = b.offset, b.offset + b.size
        return [c.block(lo, hi, lo, hi) for c in self.conjugated]


def completion_basis(F: Field, W: Sequence[tuple], n: int) -> list[tuple]:
    """W followed by the first standard vectors that complete it to a basis."""
    space = RowSpace(F, n)
    for w in W:
        space.add(w)
    out = list(W)
    for j in range(n):
        e = tuple(F.one if i == j else F.zero for i in range(n))
        if space.add(e):
            out.append(e)
    return out


def _triangularize(gens: Sequence[Mat]) -> tuple[Mat, list[int], list[SubspaceSearch]]:
    F = gens[0].field
    n = gens[0].rows
    search = invariant_subspace(gens)
    if search.basis is None:
        return eye(F, n), [n], [search]
    m = len(search.basis)
    Q = from_columns(F, completion_basis(F, search.basis, n))
    Qi = inverse(Q)
    conj = [Qi @ g @ Q for g in gens]
    QA, sA, iA = _triangularize([c.block(0, m, 0, m) for c in conj])
    QC, sC, iC = _triangularize([c.block(m, n, m, n) for c in conj])
    return Q @ block_diag([QA, QC]), sA + sC, iA + iC


def _assemble(gens: Sequence[Mat], Q: Mat, sizes: list[int], searches) -> FlagDecomposition:
    F = gens[0].field
    Qi = inverse(Q)
    conj = [Qi @ g @ Q for g in gens]
    blocks = []
    off = 0
    for size, s in zip(sizes, searches):
        blocks.append(BlockInfo(off, size, s.algebra_dim == size * size, s.algebra_dim,
                                s.irreducible, s.method))
        off += size
    flag = FlagDecomposition(F, Q, Qi, list(sizes), conj, blocks)
    check_block_triangular(flag)
    return flag


def check_block_triangular(flag: FlagDecomposition) -> None:
    n = flag.Q.rows
    bounds = []
    off = 0
    for s in flag.sizes:
        bounds.append((off, off + s))
        off += s
    if off != n:
        raise SoundnessError(f"block sizes {flag.sizes} do not add up to {n}")
    for c in flag.conjugated:
        for lo, hi in bounds:
            if hi < n and not c.block(hi, n, lo, hi).is_zero():
                raise SoundnessError("conjugated generator has a nonzero entry below the blocks")


def triangularize(gens: Sequence[Mat], extend: bool = True, max_field_order: int = 4096) -> FlagDecomposition:
    """Simultaneous block upper triangular form with irreducible diagonal blocks.

    Over a prime field GF(p), if some diagonal block is irreducible but its
    algebra is not the full matrix algebra, the decomposition is redone over
    GF(p^k) for increasing k (up to the matrix size, and the lcm of the
    offending block sizes) until every block spans; the first success wins.
    """
    F = gens[0].field
    Q, sizes, searches = _triangularize(gens)
    flag = _assemble(gens, Q, sizes, searches)
    if not extend or F.kind != "GFp" or all(b.spans for b in flag.blocks):
        return flag
    n = gens[0].rows
    bad = [b.size for b in flag.blocks if not b.spans]
    ks = sorted(set(range(2, n + 1)) | {math.lcm(*bad)})
    for k in ks:
        if k < 2 or F.p ** k > max_field_order:
            continue
        ext = field_make({"kind": "GF", "p": F.p, "k": k})
        lifted = [embed_matrix(g, ext) for g in gens]
        Qe, se, ie = _triangularize(lifted)
        cand = _assemble(lifted, Qe, se, ie)
        if all(b.spans for b in cand.blocks):
            cand.base_field = F
            return cand
    return flag


# ---------------------------------------------------------------------------
# irreducible blocks: Burnside basis, dual basis, reconstruction
# ---------------------------------------------------------------------------

@dataclass
class BurnsideBasisData:
    basis: list[Mat]
    indices: list[int]             # positions of the basis elements in the supplied stream
    gram: Mat                      # d_ij = tr(s_i s_j)
    dual: Mat                      # C = D^-1; s_i* = sum_j c_ij s_j

    @property
    def n(self) -> int:
        return self.basis[0].rows

    def dual_elements(self) -> list[Mat]:
        F = self.basis[0].field
        n = self.n
        out = []
        for i in range(len(self.basis)):
            acc = zeros(F, n, n)
            for j, s in enumerate(self.basis):
                c = self.dual[i, j]
                if not F.is_zero(c):
                    acc = mat_add(acc, mat_scale(c, s))
            out.append(acc)
        return out


def gram_matrix(basis: Sequence[Mat]) -> Mat:
    F = basis[0].field
    return Mat.from_rows(F, [[trace_form(a, b) for b in basis] for a in basis])


def burnside_basis(elements: Iterable[Mat], n: int) -> BurnsideBasisData:
    """First n^2 linearly independent elements of the stream, with Gram and dual matrices."""
    space = None
    basis: list[Mat] = []
    idx: list[int] = []
    for i, s in enumerate(elements):
        if space is None:
            space = RowSpace(s.field, n * n)
        if space.add(s.entries):
            basis.append(s)
            idx.append(i)
            if len(basis) == n * n:
                break
    if len(basis) < n * n:
        raise DoesNotSpan(f"only {len(basis)} of {n * n} independent elements")
    D = gram_matrix(basis)
    try:
        C = inverse(D)
    except KernelcatError:
        raise DegenerateGram("trace form Gram matrix is singular", nullspace(D)[0]) from None
    if C @ D != eye(D.field, n * n):
        raise SoundnessError("C*D != I")
    return BurnsideBasisData(basis, idx, D, C)


def reconstruct_coeffs(s: Mat, data: BurnsideBasisData) -> list:
    """Coefficients a_i = sum_j c_ij tr(s s_j); checks sum a_i s_i == s."""
    F = s.field
    traces = [trace_form(s, b) for b in data.basis]
    k = len(data.basis)
    coeffs = []
    for i in range(k):
        acc = F.zero
        for j in range(k):
            c = data.dual[i, j]
            if not F.is_zero(c) and not F.is_zero(traces[j]):
                acc = F.add(acc, F.mul(c, traces[j]))
        coeffs.append(acc)
    recon = zeros(F, s.rows, s.cols)
    for a, b in zip(coeffs, data.basis):
        if not F.is_zero(a):
            recon = mat_add(recon, mat_scale(a, b))
    if recon != s:
        raise NotInSpan("element is not reproduced by its dual-basis coefficients")
    return coeffs


# ---------------------------------------------------------------------------
# trace sets
# ---------------------------------------------------------------------------

@dataclass
class TraceSet:
    values: list
    provenance: str                     # "enumerated" or "a-priori"
    root_orders: list[int] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.values)

    def __contains__(self, x) -> bool:
        return x in self.values


def trace_set(elements: Iterable[Mat]) -> TraceSet:
    vals = []
    seen = set()
    F = None
    for s in elements:
        F = s.field
        t = trace(s)
        if t not in seen:
            seen.add(t)
            vals.append(t)
    if F is not None and F.kind in ("Q", "GFp"):
        vals.sort()
    return TraceSet(vals, "enumerated")


def admissible_traces(n: int, field: Field, prime_entries: bool = True) -> TraceSet:
    """Traces a periodic n x n matrix can have.

    Over Q the eigenvalues are 0 or roots of unity, so the trace is a rational
    algebraic integer, i.e. an integer, of absolute value at most n.  Over a
    finite field the trace lies in the prime field when the entries do, and
    in the field otherwise.
    """
    if field.kind == "Q":
        return TraceSet(list(range(-n, n + 1)), "a-priori", root_of_unity_orders(n))
    if prime_entries:
        return TraceSet(field.prime_subfield(), "a-priori")
    return TraceSet(field.elements(), "a-priori")


def irreducible_bound(data: BurnsideBasisData | None, T: TraceSet | int, n: int | None = None,
                      enumerated_order: int | None = None) -> int:
    """|T|^(n^2); with an enumerated order, assert it respects the bound."""
    size = T if isinstance(T, int) else len(T)
    if n is None:
        n = data.n
    bound = size ** (n * n)
    if enumerated_order is not None and enumerated_order > bound:
        raise SoundnessError(f"|S| = {enumerated_order} exceeds |T|^(n^2) = {bound}")
    return bound


# ---------------------------------------------------------------------------
# the off-diagonal embedding of a trace monoid
# ---------------------------------------------------------------------------

def split_blocks(m: Mat, split: int) -> tuple[Mat, Mat, Mat]:
    n = m.rows
    if not m.block(split, n, 0, split).is_zero():
        raise KernelcatError("matrix is not block upper triangular for this split")
    return m.block(0, split, 0, split), m.block(0, split, split, n), m.block(split, n, split, n)


def block_trace_embedding(split: int, n1: tuple[Mat, Mat], n2: tuple[Mat, Mat], m: Mat) -> Mat:
    """psi(m) = X B V for m = [[A, B], [0, C]] stabilising n1 = (X, Y), n2 = (U, V)."""
    X, Y = n1
    U, V = n2
    A, B, C = split_blocks(m, split)
    if X @ A != X:
        raise NotInStabilizer("XA = X")
    if Y @ C != Y:
        raise NotInStabilizer("YC = Y")
    if A @ U != U:
        raise NotInStabilizer("AU = U")
    if C @ V != V:
        raise NotInStabilizer("CV = V")
    return X @ B @ V


def trace_classification(field: Field, shape: tuple[int, int]) -> str:
    """Trace monoids for a block split embed in the additive group of m x r matrices:
    torsion-free in characteristic 0 (so periodic means trivial), exponent p otherwise."""
    if field.characteristic() == 0:
        return TRIVIAL
    return elementary_abelian_tag(field.characteristic())

