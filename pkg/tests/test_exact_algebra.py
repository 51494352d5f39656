from fractions import Fraction
import itertools

import pytest
from hypothesis import given, settings, strategies as st

from kernelcat.exact_algebra import (
    QQ,
    ExceededCap,
    FieldMismatch,
    Mat,
    NonPrimeModulus,
    PowerPeriod,
    ReducibleModulusPolynomial,
    ShapeMismatch,
    SingularMatrix,
    euler_phi,
    factor_polynomial,
    field_make,
    identity,
    inverse,
    is_periodic_rational,
    least_irreducible,
    mat_add,
    mat_mul,
    mat_pow,
    mat_scale,
    minimal_polynomial,
    nullspace,
    power_period,
    rank,
    rank_rref_inverse,
    rref,
    trace,
    trace_form,
    zeros,
)

from conftest import GF2, GF3, GF5, SWAP, UNIPOTENT_Q, mat


def test_field_make_basic():
    assert field_make("Q").characteristic() == 0
    assert field_make({"kind": "Q"}) == QQ
    F5 = field_make({"kind": "GF", "p": 5})
    assert F5.characteristic() == 5 and F5.order() == 5
    assert str(field_make("GF(2^3)")) == "GF(2^3)"


def test_non_prime_modulus():
    with pytest.raises(NonPrimeModulus):
        field_make({"kind": "GF", "p": 4})


def test_reducible_modulus_rejected():
    # x^2 + 1 = (x + 1)^2 over GF(2)
    with pytest.raises(ReducibleModulusPolynomial):
        field_make({"kind": "GF", "p": 2, "k": 2, "modulus": [1, 0, 1]})
    with pytest.raises(ReducibleModulusPolynomial):
        field_make({"kind": "GF", "p": 3, "k": 2, "modulus": [1, 0, 2]})


def test_least_irreducible_matches_enumeration():
    # GF(4): x^2+x+1 is the only irreducible quadratic; GF(8): x^3+x+1 precedes x^3+x^2+1
    assert least_irreducible(2, 2) == (1, 1, 1)
    assert least_irreducible(2, 3) == (1, 1, 0, 1)
    # GF(9): x^2+1 is irreducible (-1 is not a square mod 3) and is least
    assert least_irreducible(3, 2) == (1, 0, 1)


@pytest.mark.parametrize("spec", ["GF(2^2)", "GF(2^3)", "GF(3^2)", "GF(2^4)"])
def test_extension_field_axioms(spec):
    F = field_make(spec)
    els = F.elements()
    assert len(els) == F.order()
    nonzero = [a for a in els if not F.is_zero(a)]
    for a in nonzero:
        assert F.mul(a, F.inv(a)) == F.one
    # multiplicative group is cyclic of order q-1: every element satisfies a^(q-1) = 1
    for a in nonzero:
        assert F.pow(a, F.order() - 1) == F.one
    sample = els[: min(len(els), 9)]
    for a, b, c in itertools.product(sample, repeat=3):
        assert F.mul(a, F.add(b, c)) == F.add(F.mul(a, b), F.mul(a, c))
        assert F.mul(F.mul(a, b), c) == F.mul(a, F.mul(b, c))


def test_scalar_syntax_roundtrip():
    assert QQ.parse("-3/6") == Fraction(-1, 2)
    assert QQ.parse("4/2") == 2 and isinstance(QQ.parse("4/2"), int)
    assert QQ.format(Fraction(-1, 2)) == "-1/2"
    F9 = field_make("GF(3^2)")
    assert F9.parse([1, 2]) == (1, 2)
    assert F9.parse(2) == (2, 0)
    assert F9.format((0, 1)) == [0, 1]
    for bad in ["1/0", "x", "1.5", True]:
        with pytest.raises(Exception):
            QQ.parse(bad)
    with pytest.raises(Exception):
        GF3.parse(3)


def test_identity_times_x():
    X = mat(QQ, [["1/2", -3], [7, 0]])
    assert identity(QQ, 2) @ X == X
    assert X @ identity(QQ, 2) == X


def test_swap_squared_is_identity():
    assert SWAP @ SWAP == identity(QQ, 2)


def test_unipotent_product_gf3():
    # [[1,1],[0,1]]^2 = [[1,2],[0,1]] by direct multiplication
    u = mat(GF3, [[1, 1], [0, 1]])
    assert mat_mul(u, u) == mat(GF3, [[1, 2], [0, 1]])


def test_shape_and_field_errors():
    with pytest.raises(ShapeMismatch):
        mat(QQ, [[1, 2]]) @ mat(QQ, [[1, 2]])
    with pytest.raises(FieldMismatch):
        mat(QQ, [[1]]) @ mat(GF2, [[1]])
    with pytest.raises(ShapeMismatch):
        mat_add(mat(QQ, [[1, 2]]), mat(QQ, [[1], [2]]))


def test_rank_rref_inverse_examples():
    r, red, inv = rank_rref_inverse(identity(QQ, 3))
    assert r == 3 and inv == identity(QQ, 3)
    r, red, inv = rank_rref_inverse(mat(QQ, [[1, 2], [2, 4]]))
    assert r == 1 and inv is None
    assert red == mat(QQ, [[1, 2], [0, 0]])
    u = mat(GF2, [[1, 1], [0, 1]])
    assert inverse(u) == u
    with pytest.raises(SingularMatrix):
        inverse(mat(QQ, [[1, 2], [2, 4]]))


def test_trace_form_examples():
    E11 = mat(QQ, [[1, 0], [0, 0]])
    E22 = mat(QQ, [[0, 0], [0, 1]])
    assert trace_form(E11, E11) == 1
    assert trace_form(E11, E22) == 0
    assert trace_form(SWAP, SWAP) == 2


def test_power_period_examples():
    assert power_period(SWAP) == PowerPeriod(1, 2)
    assert power_period(identity(GF5, 3)) == PowerPeriod(1, 1)
    with pytest.raises(ExceededCap):
        power_period(UNIPOTENT_Q, cap=100)


def test_power_period_index_greater_than_one():
    # [[0,1],[0,0]] squares to zero: s^2 = s^3, so (a, b) = (2, 1)
    assert power_period(mat(QQ, [[0, 1], [0, 0]])) == PowerPeriod(2, 1)


def test_rational_periodicity_decision():
    assert is_periodic_rational(SWAP)
    assert is_periodic_rational(mat(QQ, [[0, -1], [1, -1]]))
    assert not is_periodic_rational(UNIPOTENT_Q)
    assert not is_periodic_rational(mat(QQ, [["1/2", 0], [0, 2]]))
    assert is_periodic_rational(mat(QQ, [[0, 1, 0], [0, 0, 1], [0, 0, 0]]))


def test_euler_phi_against_gcd_count():
    from math import gcd

    for k in range(1, 200):
        assert euler_phi(k) == sum(1 for j in range(1, k + 1) if gcd(j, k) == 1)


def test_minimal_polynomial_and_factoring():
    # rotation by 90 degrees: x^2 + 1, irreducible over Q, splits over GF(5) as (x-2)(x-3)
    rot = mat(QQ, [[0, -1], [1, 0]])
    mp = minimal_polynomial(rot)
    assert mp == [1, 0, 1]
    assert factor_polynomial(QQ, mp) == [([1, 0, 1], 1)]
    facs = factor_polynomial(GF5, [1, 0, 1])
    assert sorted(f for f, _ in facs) == [[2, 1], [3, 1]]
    F9 = field_make("GF(3^2)")
    facs9 = factor_polynomial(F9, [F9.one, F9.zero, F9.one])
    assert len(facs9) == 2 and all(len(f) == 2 for f, _ in facs9)


# --- properties -----------------------------------------------------------------

def _mats(F, n, m, elems):
    return st.lists(st.sampled_from(elems), min_size=n * m, max_size=n * m).map(
        lambda xs: Mat(F, n, m, tuple(xs)))


rationals = st.fractions(min_value=-5, max_value=5, max_denominator=4).map(
    lambda x: x.numerator if x.denominator == 1 else x)


def _qmats(n, m):
    return st.lists(rationals, min_size=n * m, max_size=n * m).map(lambda xs: Mat(QQ, n, m, tuple(xs)))


@settings(max_examples=60, deadline=None)
@given(st.sampled_from([2, 3, 5, 7]), st.data())
def test_matrix_identities_gfp(p, data):
    F = field_make({"kind": "GF", "p": p})
    a = data.draw(_mats(F, 3, 3, F.elements()))
    b = data.draw(_mats(F, 3, 3, F.elements()))
    c = data.draw(_mats(F, 3, 3, F.elements()))
    assert (a @ b) @ c == a @ (b @ c)
    assert trace(a @ b) == trace(b @ a)
    assert trace_form(a, b) == trace_form(b, a)
    assert rank(a) + len(nullspace(a)) == 3
    _, _, inv = rank_rref_inverse(a)
    if inv is not None:
        assert a @ inv == identity(F, 3) == inv @ a


@settings(max_examples=40, deadline=None)
@given(_qmats(3, 3), _qmats(3, 3), _qmats(3, 3))
def test_matrix_identities_q(a, b, c):
    assert (a @ b) @ c == a @ (b @ c)
    assert trace(a @ b) == trace(b @ a)
    assert trace_form(a, b) == trace_form(b, a)
    assert rank(a) + len(nullspace(a)) == 3
    for v in nullspace(a):
        assert all(x == 0 for x in (a @ Mat(QQ, 3, 1, v)).entries)
    _, _, inv = rank_rref_inverse(a)
    if inv is not None:
        assert a @ inv == identity(QQ, 3) == inv @ a


@settings(max_examples=40, deadline=None)
@given(st.data())
def test_power_period_minimal_by_listing(data):
    F = data.draw(st.sampled_from([GF2, GF3, field_make("GF(2^2)")]))
    s = data.draw(_mats(F, 2, 2, F.elements()))
    pp = power_period(s)
    powers = [mat_pow(s, e) for e in range(1, pp.index + pp.period + 1)]
    assert powers[-1] == powers[pp.index - 1]
    assert len(set(powers[:-1])) == len(powers) - 1


@settings(max_examples=30, deadline=None)
@given(st.sampled_from([2, 3]), st.data())
def test_scale_and_bilinearity(p, data):
    F = field_make({"kind": "GF", "p": p})
    a = data.draw(_mats(F, 2, 2, F.elements()))
    b = data.draw(_mats(F, 2, 2, F.elements()))
    c = data.draw(st.sampled_from(F.elements()))
    assert trace_form(mat_scale(c, a), b) == F.mul(c, trace_form(a, b))
    assert trace_form(mat_add(a, b), b) == F.add(trace_form(a, b), trace_form(b, b))
    assert zeros(F, 2, 2) @ a == zeros(F, 2, 2)
    assert rref(a)[0] == rank(a)
