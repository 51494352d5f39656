import random
import time

import pytest

from kernelcat.exact_algebra import QQ, Mat, field_make
from kernelcat.semigroup_core import (
    closure,
    hom_from_carrier_map,
    matrix_closure,
    transformation_monoid,
)
from kernelcat.errors import Limits, LimitExceeded

GF2 = field_make("GF(2)")
GF3 = field_make("GF(3)")
GF5 = field_make("GF(5)")


def mat(F, rows):
    return Mat.parse(F, rows)


def perm_matrix(F, perm):
    """Column j has its 1 in row perm[j]."""
    n = len(perm)
    return Mat.from_rows(F, [[F.one if perm[j] == i else F.zero for j in range(n)] for i in range(n)])


S3_GENS = [perm_matrix(QQ, (1, 0, 2)), perm_matrix(QQ, (1, 2, 0))]
SWAP = mat(QQ, [[0, 1], [1, 0]])
UNIPOTENT_Q = mat(QQ, [[1, 1], [0, 1]])
UNIPOTENT_GF3 = mat(GF3, [[1, 1], [0, 1]])
ROTATION_Q = mat(QQ, [[0, -1], [1, 0]])
M2GF2_GENS = [mat(GF2, [[1, 1], [0, 1]]), mat(GF2, [[0, 1], [1, 0]]), mat(GF2, [[1, 0], [0, 0]])]
UPPER_GF2_GENS = [mat(GF2, [[1, 1], [0, 1]]), mat(GF2, [[0, 0], [0, 1]]), mat(GF2, [[1, 0], [0, 0]])]


def upper_gf2():
    return matrix_closure(UPPER_GF2_GENS)


def diag_pair(m: Mat):
    return tuple(m[i, i] for i in range(m.rows))


# periodic rational fixtures with n <= 4
PERIODIC_Q_FIXTURES = {
    "S3": S3_GENS,
    "S4": [perm_matrix(QQ, (1, 0, 2, 3)), perm_matrix(QQ, (1, 2, 3, 0))],
    "swap": [SWAP],
    "rotation": [ROTATION_Q],
    "dihedral8": [ROTATION_Q, mat(QQ, [[1, 0], [0, -1]])],
    "idempotents": [mat(QQ, [[1, 0], [0, 0]]), mat(QQ, [[1, 1], [0, 0]])],
    "nilpotent": [mat(QQ, [[0, 1, 0], [0, 0, 1], [0, 0, 0]])],
    "order3_rot": [mat(QQ, [[0, -1], [1, -1]])],
    "signed_perm3": [perm_matrix(QQ, (1, 2, 0)), mat(QQ, [[-1, 0, 0], [0, 1, 0], [0, 0, 1]])],
    "reducible_mixed": [mat(QQ, [[0, 1, 0], [1, 0, 0], [0, 0, -1]]),
                        mat(QQ, [[1, 0, 0], [0, 0, 1], [0, 0, 0]])],
}

FINITE_FIELD_FIXTURES = {
    "unipotent_gf3": [UNIPOTENT_GF3],
    "M2_gf2": M2GF2_GENS,
    "upper_gf2": UPPER_GF2_GENS,
    "rotation_gf3": [mat(GF3, [[0, 2], [1, 0]])],
    "borel_gf5": [mat(GF5, [[2, 1], [0, 3]]), mat(GF5, [[1, 0], [0, 4]])],
    "three_by_three_gf2": [mat(GF2, [[1, 1, 0], [0, 1, 1], [0, 0, 1]]), mat(GF2, [[1, 0, 0], [0, 0, 1], [0, 1, 0]])],
}

ALL_FIXTURES = {**PERIODIC_Q_FIXTURES, **FINITE_FIELD_FIXTURES}


def random_transformation_monoid(rng: random.Random, points: int, ngens: int, max_order: int):
    """Random monoid of maps on a small set, redrawn until its order is at most max_order."""
    while True:
        maps = [tuple(rng.randrange(points) for _ in range(points)) for _ in range(ngens)]
        try:
            M = transformation_monoid(maps, Limits(max_elements=max_order))
        except LimitExceeded:
            continue
        if len(M) <= max_order:
            return M


def small_homs(seed: int = 7):
    """A varied list of (name, hom) with |M| <= 24."""
    rng = random.Random(seed)
    out = []
    up = upper_gf2()
    out.append(("upper_gf2->diag", hom_from_carrier_map(up, diag_pair)))
    out.append(("upper_gf2->id", hom_from_carrier_map(up, lambda c: c)))
    s3 = matrix_closure(S3_GENS)
    out.append(("S3->id", hom_from_carrier_map(s3, lambda c: c)))
    out.append(("S3->trivial", hom_from_carrier_map(s3, lambda c: ())))
    out.append(("S3->sign", hom_from_carrier_map(s3, _det3)))
    out.append(("unipotent_gf3->diag", hom_from_carrier_map(matrix_closure([UNIPOTENT_GF3]), diag_pair)))
    cyc = closure([1], lambda a, b: (a + b) % 6, 0)
    out.append(("Z6->Z3", hom_from_carrier_map(cyc, lambda c: c % 3)))
    out.append(("Z6->Z2", hom_from_carrier_map(cyc, lambda c: c % 2)))
    while len(out) < 26:
        # pairs of maps; projecting to the first coordinate is a homomorphism
        k = rng.choice([2, 3])
        gens = []
        for _ in range(rng.choice([1, 2])):
            f = tuple(rng.randrange(k) for _ in range(k))
            g = tuple(rng.randrange(k) for _ in range(k))
            gens.append((f, g))

        def pmul(a, b, k=k):
            return (tuple(b[0][a[0][i]] for i in range(k)), tuple(b[1][a[1][i]] for i in range(k)))

        ident = (tuple(range(k)), tuple(range(k)))
        try:
            M = closure(gens, pmul, ident, Limits(max_elements=24))
        except LimitExceeded:
            continue
        if len(M) > 24 or len(M) < 2:
            continue
        which = rng.choice(["first", "id", "trivial"])
        if which == "first":
            phi = hom_from_carrier_map(M, lambda c: c[0])
        elif which == "id":
            phi = hom_from_carrier_map(M, lambda c: c)
        else:
            phi = hom_from_carrier_map(M, lambda c: ())
        out.append((f"pairs{len(out)}-{which}", phi))
    return out


def _det3(m: Mat):
    # sign of a permutation matrix via its determinant
    a = m.to_rows()
    return (a[0][0] * (a[1][1] * a[2][2] - a[1][2] * a[2][1])
            - a[0][1] * (a[1][0] * a[2][2] - a[1][2] * a[2][0])
            + a[0][2] * (a[1][0] * a[2][1] - a[1][1] * a[2][0]))


# --- acceptance summary -------------------------------------------------------

ACCEPTANCE_RESULTS: dict[int, tuple[str, str]] = {}
SESSION_START = time.perf_counter()


def pytest_collection_modifyitems(items):
    # the suite-runtime check must see every other test finish first
    last = [it for it in items if it.get_closest_marker("run_last")]
    rest = [it for it in items if not it.get_closest_marker("run_last")]
    items[:] = rest + last


def pytest_configure(config):
    config.addinivalue_line("markers", "run_last: run after every other test")


@pytest.fixture
def criterion(request):
    """Record a pass/fail line for an acceptance criterion."""
    def record(number: int, title: str):
        ACCEPTANCE_RESULTS.setdefault(number, (title, "pending"))
        request.node._criterion = (number, title)
    return record


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    crit = getattr(item, "_criterion", None)
    if crit and rep.when == "call":
        title, before = ACCEPTANCE_RESULTS.get(crit[0], (crit[1], "pending"))
        status = "FAIL" if before == "FAIL" or not rep.passed else "PASS"
        ACCEPTANCE_RESULTS[crit[0]] = (title, status)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for num in sorted(ACCEPTANCE_RESULTS):
        title, status = ACCEPTANCE_RESULTS[num]
        terminalreporter.write_line(f"[{status}] criterion {num}: {title}")
