"""Acceptance criteria; each test reports one [PASS]/[FAIL] line in the summary."""

import copy
import io
import itertools
import json
import random
import time
from math import gcd

import pytest

from kernelcat.cli import EXIT_INVALID, EXIT_OK, run
from kernelcat.errors import LimitExceeded, Limits
from kernelcat.exact_algebra import (
    Mat,
    field_make,
    identity,
    inverse,
    root_of_unity_orders,
    trace,
)
from kernelcat.kernel_category import (
    EnumeratedContext,
    check_category_axioms,
    embed_via_unit,
    endo_monoid,
    kernel_category,
)
from kernelcat.kleene_paths import LabeledGraph, MonoidLabels, image_homsets, image_homsets_bruteforce
from kernelcat.matrix_semigroup import (
    block_trace_embedding,
    burnside_basis,
    reconstruct_coeffs,
    trace_set,
    triangularize,
)
from kernelcat.pipeline import FINITE, NON_PERIODIC, mcnaughton_zalcstein
from kernelcat.semigroup_core import hom_from_carrier_map, matrix_closure, trace_monoid

import conftest
from conftest import (
    ALL_FIXTURES,
    M2GF2_GENS,
    PERIODIC_Q_FIXTURES,
    S3_GENS,
    UNIPOTENT_GF3,
    UNIPOTENT_Q,
    random_transformation_monoid,
    small_homs,
)


# 1 ---------------------------------------------------------------------------

def test_criterion_1_end_to_end(criterion):
    criterion(1, "end-to-end finiteness: S3 -> 6, GF(3) unipotent -> 3, Q unipotent -> witness")
    r = mcnaughton_zalcstein(S3_GENS)
    assert (r.verdict, r.order) == (FINITE, 6)
    r = mcnaughton_zalcstein([UNIPOTENT_GF3])
    assert (r.verdict, r.order) == (FINITE, 3)
    r = mcnaughton_zalcstein([UNIPOTENT_Q])
    assert r.verdict == NON_PERIODIC and r.witness == UNIPOTENT_Q


# 2 ---------------------------------------------------------------------------

def test_criterion_2_full_matrix_monoid(criterion):
    criterion(2, "M2(GF(2)) closes to 16 elements and meets |S| <= |T|^4 with equality")
    S = matrix_closure(M2GF2_GENS)
    assert len(S) == 16
    # oracle: every 2x2 matrix over GF(2) appears
    F = M2GF2_GENS[0].field
    everything = {Mat(F, 2, 2, t) for t in itertools.product((0, 1), repeat=4)}
    assert set(S.carriers) == everything
    data = burnside_basis(S.carriers, 2)
    assert len(data.basis) == 4
    T = trace_set(S.carriers)
    assert len(T) == 2
    assert len(S) == len(T) ** 4 == 16


# 3 ---------------------------------------------------------------------------

def _spanning_fixtures():
    """(name, block generators) for every irreducible block whose algebra spans."""
    out = []
    for name, gens in sorted(ALL_FIXTURES.items()):
        flag = triangularize(gens)
        for i, b in enumerate(flag.blocks):
            if b.spans:
                out.append((f"{name}[{i}]", flag.diagonal_block(i)))
    return out


def test_criterion_3_dual_basis_exactness(criterion):
    criterion(3, "dual-basis reconstruction is exact and C*D = I on every spanning fixture")
    cases = _spanning_fixtures()
    assert any(bg[0].rows >= 2 for _, bg in cases)
    for name, bg in cases:
        S = matrix_closure(bg)
        d = bg[0].rows
        data = burnside_basis(S.carriers, d)
        assert data.dual @ data.gram == identity(data.gram.field, d * d), name
        assert data.gram @ data.dual == identity(data.gram.field, d * d), name
        for s in S.carriers:
            coeffs = reconstruct_coeffs(s, data)
            # rebuild independently of the library's own check
            acc = [data.gram.field.zero] * (d * d)
            F = data.gram.field
            for a, b in zip(coeffs, data.basis):
                acc = [F.add(x, F.mul(a, y)) for x, y in zip(acc, b.entries)]
            assert tuple(acc) == s.entries, name


# 4 ---------------------------------------------------------------------------

def _random_block_upper(rng, F, n, s):
    elems = F.elements()
    rows = [[rng.choice(elems) for _ in range(n)] for _ in range(n)]
    for i in range(s, n):
        for j in range(s):
            rows[i][j] = F.zero
    return Mat.from_rows(F, rows)


def test_criterion_4_off_diagonal_embedding(criterion):
    criterion(4, ">= 100 random stabilizer pairs: psi(1)=0, psi additive, separation = congruence")
    rng = random.Random(2024)
    fields = [field_make("GF(2)"), field_make("GF(3)"), field_make("GF(5)")]
    pairs_checked = {F.p: 0 for F in fields}
    per_instance = 8
    attempts = 0
    nontrivial = 0
    while min(pairs_checked.values()) < 60 and attempts < 4000:
        attempts += 1
        F = fields[attempts % 3]
        n = rng.choice([2, 3])
        s = rng.randrange(1, n)
        gens = [_random_block_upper(rng, F, n, s) for _ in range(rng.choice([1, 2]))]
        if rng.random() < 0.5:
            u = _random_block_upper(rng, F, n, s)
            gens.append(Mat.from_rows(F, [[F.one if i == j else (u[i, j] if i < s <= j else F.zero)
                                           for j in range(n)] for i in range(n)]))
        try:
            M = matrix_closure(gens, Limits(max_elements=400))
        except LimitExceeded:
            continue

        def proj(c, s=s, n=n):
            return (c.block(0, s, 0, s), c.block(s, n, s, n))

        phi = hom_from_carrier_map(M, proj)
        N = phi.codomain
        objs = list(itertools.product(range(len(N)), repeat=2))
        rng.shuffle(objs)
        # the identity pair first: its stabilizer is the whole kernel of the projection
        objs.sort(key=lambda o: o != (0, 0))
        for n1, n2 in objs[:per_instance]:
            T = trace_monoid(phi, n1, n2)
            X, Y = N.carriers[n1]
            U, V = N.carriers[n2]
            psi = {m: block_trace_embedding(s, (X, Y), (U, V), M.carriers[m]) for m in T.stabilizer}
            assert psi[M.identity].is_zero()
            for a in T.stabilizer:
                for b in T.stabilizer:
                    assert psi[M.mul(a, b)] == psi[a] + psi[b]
                    assert (psi[a] == psi[b]) == (T.class_of[a] == T.class_of[b])
            pairs_checked[F.p] += 1
            nontrivial += T.order > 1
    assert sum(pairs_checked.values()) >= 100
    assert nontrivial >= 50
    assert all(v >= 60 for v in pairs_checked.values()), pairs_checked


# 5 ---------------------------------------------------------------------------

def test_criterion_5_kernel_category(criterion):
    criterion(5, ">= 20 homomorphisms: K closes, axioms hold, End = trace monoid, [1,m,1] injective")
    homs = small_homs()
    assert len(homs) >= 20
    for name, phi in homs:
        M = phi.domain
        assert len(M) <= 24
        ctx = EnumeratedContext(phi)
        K = kernel_category(ctx)
        assert K.complete
        info = check_category_axioms(K, exhaustive_limit=10 ** 9)
        assert info["exhaustive"]
        for obj in itertools.product(range(len(phi.codomain)), repeat=2):
            E = endo_monoid(K, obj)
            T = trace_monoid(phi, *obj)
            # explicit isomorphism: a loop [n1, m, n2] goes to the class of m
            f = [T.class_of[K.arrows[key].rep] for key in E.carriers]
            assert sorted(f) == list(range(T.order)), (name, obj)
            for x, y in itertools.product(range(len(E)), repeat=2):
                assert f[E.table[x][y]] == T.table[f[x]][f[y]], (name, obj)
        emb = embed_via_unit(ctx, list(range(len(M))))
        assert emb.injective, name
        assert len(M) <= K.arrow_count, name


# 6 ---------------------------------------------------------------------------

def test_criterion_6_elimination_matches_paths(criterion):
    criterion(6, "vertex elimination equals path enumeration on 200 random graphs, order independent")
    rng = random.Random(99)
    for _ in range(200):
        M = random_transformation_monoid(rng, rng.choice([2, 3, 4]), rng.choice([1, 2]), 12)
        assert len(M) <= 12
        nv = rng.randint(1, 5)
        ne = rng.randint(0, 8)
        edges = [(rng.randrange(nv), rng.randrange(nv), rng.randrange(len(M))) for _ in range(ne)]
        g = LabeledGraph(nv, edges, MonoidLabels(M))
        oracle = image_homsets_bruteforce(g).homs
        assert image_homsets(g).homs == oracle
        for _ in range(3):
            order = list(range(nv))
            rng.shuffle(order)
            assert image_homsets(g, order).homs == oracle


# 7 ---------------------------------------------------------------------------

def _totient_by_gcd(k):
    return sum(1 for j in range(1, k + 1) if gcd(j, k) == 1)


def test_criterion_7_rational_trace_admissibility(criterion):
    criterion(7, "rational traces are integers in [-n, n]; n=2 root orders are {1,2,3,4,6}")
    for name, gens in PERIODIC_Q_FIXTURES.items():
        n = gens[0].rows
        assert n <= 4
        for s in matrix_closure(gens).carriers:
            t = trace(s)
            assert isinstance(t, int) and -n <= t <= n, name
    assert set(root_of_unity_orders(2)) == {1, 2, 3, 4, 6}
    for n in (1, 2, 3, 4):
        oracle = {k for k in range(1, 500) if _totient_by_gcd(k) <= n}
        assert set(root_of_unity_orders(n)) == oracle


# 8 ---------------------------------------------------------------------------

def test_criterion_8_triangularization(criterion):
    criterion(8, "zeros below the blocks; conjugated generators give the same order")
    for name, gens in sorted(ALL_FIXTURES.items()):
        flag = triangularize(gens)
        n = gens[0].rows
        bounds = list(itertools.accumulate([0] + flag.sizes))
        for c in flag.conjugated:
            for lo, hi in zip(bounds, bounds[1:]):
                for i in range(hi, n):
                    for j in range(lo, hi):
                        assert flag.field.is_zero(c[i, j]), name
        # Q really conjugates
        assert inverse(flag.Q) == flag.Q_inv
        order = mcnaughton_zalcstein(gens).order
        again = mcnaughton_zalcstein(flag.conjugated)
        assert again.verdict == FINITE and again.order == order, name


# 9 ---------------------------------------------------------------------------

def _cli(argv, doc=None, tmp=None):
    out = io.StringIO()
    if doc is not None:
        path = tmp / f"doc{time.perf_counter_ns()}.json"
        path.write_text(json.dumps(doc))
        argv = argv + [str(path)]
    code = run(argv, stdout=out, stderr=io.StringIO())
    return code, out.getvalue()


def _bump(F, token):
    """A different scalar in the same text syntax."""
    x = F.parse(token)
    return F.format(F.add(x, F.one))


def _tamper_matrix(cert_path_value, F, i=0, j=0):
    rows = copy.deepcopy(cert_path_value)
    rows[i][j] = _bump(F, rows[i][j])
    return rows


def _tamperings(cert):
    """Named single-field modifications of a Finite certificate."""
    F = field_make(cert["flag"]["field"])
    G = field_make(cert["field"])
    out = {}

    def add(name, fn):
        c = copy.deepcopy(cert)
        fn(c)
        out[name] = c

    add("order", lambda c: c.__setitem__("order", c["order"] + 1))
    add("generator entry", lambda c: c["generators"].__setitem__(0, _tamper_matrix(c["generators"][0], G)))
    add("Q entry", lambda c: c["flag"].__setitem__("Q", _tamper_matrix(c["flag"]["Q"], F, c["n"] - 1, 0)))
    add("conjugated entry", lambda c: c["flag"]["conjugated"].__setitem__(
        0, _tamper_matrix(c["flag"]["conjugated"][0], F)))
    add("block sizes", lambda c: c["flag"].__setitem__("blocks", [c["n"]] if len(c["flag"]["blocks"]) > 1
                                                       else [1, c["n"] - 1]))
    add("generator periods", lambda c: c["generator_periods"][0].__setitem__(1, c["generator_periods"][0][1] + 1))
    add("block order", lambda c: c["blocks"][0].__setitem__("order", c["blocks"][0]["order"] + 1))
    add("trace set", lambda c: c["blocks"][0].__setitem__("traces", c["blocks"][0]["traces"][1:]))
    spanning = [i for i, b in enumerate(cert["blocks"]) if b.get("bound_path") == "burnside"]
    if spanning:
        k = spanning[0]
        add("Gram entry", lambda c: c["blocks"][k].__setitem__("gram", _tamper_matrix(c["blocks"][k]["gram"], F)))
        add("dual entry", lambda c: c["blocks"][k].__setitem__("dual", _tamper_matrix(c["blocks"][k]["dual"], F)))
        if len(cert["blocks"][k]["basis_words"]) > 1:
            # distinct basis elements have distinct words, so swapping two is always a change
            add("basis word", lambda c: c["blocks"][k]["basis_words"].reverse())
        add("trace bound", lambda c: c["blocks"][k].__setitem__("trace_bound", c["blocks"][k]["trace_bound"] + 1))
    if cert.get("kernel", {}).get("applicable"):
        add("kernel arrow count", lambda c: c["kernel"].__setitem__("arrow_count", c["kernel"]["arrow_count"] + 1))
        add("kernel removed", lambda c: c.__setitem__("kernel", {"applicable": False}))
    return out


def test_criterion_9_certificate_verification(criterion, tmp_path):
    criterion(9, "verify accepts every Finite certificate and rejects single-field tamperings (exit 4)")
    rejected = set()
    for name, gens in sorted(ALL_FIXTURES.items()):
        cert = mcnaughton_zalcstein(gens).certificate
        code, _ = _cli(["verify"], cert, tmp_path)
        assert code == EXIT_OK, name
        for tname, bad in _tamperings(cert).items():
            code, out = _cli(["verify"], bad, tmp_path)
            assert code == EXIT_INVALID, (name, tname)
            rejected.add(tname)
    assert {"Gram entry", "dual entry", "order", "Q entry", "trace set",
            "block sizes", "generator entry", "kernel arrow count"} <= rejected


# 10 --------------------------------------------------------------------------

def test_criterion_10_determinism(criterion, tmp_path):
    criterion(10, "repeated and generator-permuted runs agree; suite under 2 minutes")
    for name, gens in sorted(ALL_FIXTURES.items()):
        a = mcnaughton_zalcstein(gens)
        b = mcnaughton_zalcstein(gens)
        assert json.dumps(a.certificate, sort_keys=True) == json.dumps(b.certificate, sort_keys=True)
        S1, S2 = matrix_closure(gens), matrix_closure(gens)
        assert S1.carriers == S2.carriers and S1.table == S2.table
        perm = list(reversed(gens))
        c = mcnaughton_zalcstein(perm)
        assert c.verdict == a.verdict and c.order == a.order, name
        assert set(matrix_closure(perm).carriers) == set(S1.carriers)
        assert sorted(triangularize(perm).sizes) == sorted(triangularize(gens).sizes)
    doc = {"field": "Q", "n": 3, "generators": [g.format() for g in S3_GENS]}
    reports = []
    for _ in range(2):
        code, out = _cli(["check"], doc, tmp_path)
        rep = json.loads(out)
        rep["counters"].pop("milliseconds", None)
        reports.append(json.dumps(rep, sort_keys=True))
    assert reports[0] == reports[1]


@pytest.mark.run_last
def test_criterion_10_suite_runtime(criterion):
    criterion(10, "repeated and generator-permuted runs agree; suite under 2 minutes")
    elapsed = time.perf_counter() - conftest.SESSION_START
    print(f"suite elapsed {elapsed:.1f}s")
    assert elapsed < 120
