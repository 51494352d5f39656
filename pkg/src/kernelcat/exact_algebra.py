"""Exact scalar and dense matrix arithmetic over Q and GF(p^k).

Scalars are plain Python values so that matrices hash and compare cheaply:

* over Q an entry is an ``int`` when integral and a reduced ``Fraction``
  otherwise (the two hash identically, so interning is unaffected);
* over GF(p) an entry is an ``int`` in ``[0, p)``;
* over GF(p^k) an entry is a length-k tuple of coefficients (low degree
  first) of the residue modulo the field's monic irreducible modulus.

Nothing in this module rounds.
"""

from __future__ import annotations

import itertools
import math
import re
from dataclasses import dataclass, field as dc_field
from fractions import Fraction
from functools import reduce
from typing import Iterable, Sequence

from .errors import KernelcatError, LimitExceeded


class NonPrimeModulus(KernelcatError):
    pass


class ReducibleModulusPolynomial(KernelcatError):
    pass


class ShapeMismatch(KernelcatError):
    pass


class FieldMismatch(KernelcatError):
    pass


class SingularMatrix(KernelcatError):
    pass


class ScalarSyntaxError(KernelcatError):
    pass


class ExceededCap(LimitExceeded):
    """Raised by :func:`power_period` when no repeat shows up within the cap."""


def is_prime(n: int) -> bool:
    if n < 2:
        return False
    if n % 2 == 0:
        return n == 2
    d = 3
    while d * d <= n:
        if n % d == 0:
            return False
        d += 2
    return True


# ---------------------------------------------------------------------------
# polynomials over GF(p) as coefficient lists, low degree first
# ---------------------------------------------------------------------------

def _trim(c: list) -> list:
    while c and c[-1] == 0:
        c.pop()
    return c


def _poly_mod_p(a: Sequence[int], b: Sequence[int], p: int) -> list[int]:
    a = _trim([x % p for x in a])
    b = _trim([x % p for x in b])
    if not b:
        raise ZeroDivisionError("polynomial division by zero")
    inv_lead = pow(b[-1], p - 2, p)
    while len(a) >= len(b):
        q = a[-1] * inv_lead % p
        shift = len(a) - len(b)
        for i, bc in enumerate(b):
            a[shift + i] = (a[shift + i] - q * bc) % p
        _trim(a)
    return a


def is_irreducible_mod_p(poly: Sequence[int], p: int) -> bool:
    """Trial division by every monic polynomial of degree <= deg/2."""
    poly = _trim([x % p for x in poly])
    deg = len(poly) - 1
    if deg < 1:
        return False
    for d in range(1, deg // 2 + 1):
        for low in itertools.product(range(p), repeat=d):
            if not _poly_mod_p(poly, list(low) + [1], p):
                return False
    return True


def least_irreducible(p: int, k: int) -> tuple[int, ...]:
    """Lexicographically least monic irreducible of degree k over GF(p).

    Candidates x^k + c_{k-1}x^{k-1} + ... + c_0 are ordered by the tuple
    (c_{k-1}, ..., c_0).  Returned coefficients are low degree first.
    """
    for high_first in itertools.product(range(p), repeat=k):
        low = tuple(reversed(high_first))
        cand = low + (1,)
        if is_irreducible_mod_p(cand, p):
            return cand
    raise ReducibleModulusPolynomial(f"no irreducible of degree {k} over GF({p})")


# ---------------------------------------------------------------------------
# fields
# ---------------------------------------------------------------------------

_FIELD_RE = re.compile(r"^\s*GF\(\s*(\d+)\s*(?:\^\s*(\d+)\s*)?\)\s*$")


@dataclass(frozen=True)
class Field:
    """A field handle: ``Q``, ``GF(p)`` or ``GF(p^k)``.

    ``kind`` is one of ``"Q"``, ``"GFp"``, ``"GFq"``.  For ``GFq`` the
    modulus is a monic irreducible polynomial of degree k, low degree first.
    """

    kind: str
    p: int = 0
    k: int = 1
    modulus: tuple[int, ...] = ()
    _cache: dict = dc_field(default_factory=dict, compare=False, hash=False, repr=False)

    # --- descriptors -----------------------------------------------------
    def characteristic(self) -> int:
        return 0 if self.kind == "Q" else self.p

    @property
    def is_finite(self) -> bool:
        return self.kind != "Q"

    def order(self) -> int | None:
        return None if self.kind == "Q" else self.p ** self.k

    def descriptor(self) -> dict:
        if self.kind == "Q":
            return {"kind": "Q"}
        if self.kind == "GFp":
            return {"kind": "GF", "p": self.p}
        return {"kind": "GF", "p": self.p, "k": self.k, "modulus": list(self.modulus)}

    def __str__(self) -> str:
        if self.kind == "Q":
            return "Q"
        if self.kind == "GFp":
            return f"GF({self.p})"
        return f"GF({self.p}^{self.k})"

    # --- constants -------------------------------------------------------
    @property
    def zero(self):
        if self.kind == "GFq":
            return (0,) * self.k
        return 0

    @property
    def one(self):
        if self.kind == "GFq":
            return (1,) + (0,) * (self.k - 1)
        return 1

    def from_int(self, n: int):
        if self.kind == "Q":
            return n
        if self.kind == "GFp":
            return n % self.p
        return (n % self.p,) + (0,) * (self.k - 1)

    def embed_prime(self, c):
        """Map an element of the prime field (an int) into this field."""
        return self.from_int(c)

    def elements(self) -> list:
        if self.kind == "Q":
            raise ValueError("Q is infinite")
        if self.kind == "GFp":
            return list(range(self.p))
        return [tuple(reversed(t)) for t in itertools.product(range(self.p), repeat=self.k)]

    def prime_subfield(self) -> list:
        return [self.from_int(c) for c in range(self.p)] if self.is_finite else []

    # --- arithmetic ------------------------------------------------------
    def add(self, a, b):
        if self.kind == "Q":
            return _norm_q(a + b)
        if self.kind == "GFp":
            return (a + b) % self.p
        p = self.p
        return tuple((x + y) % p for x, y in zip(a, b))

    def sub(self, a, b):
        if self.kind == "Q":
            return _norm_q(a - b)
        if self.kind == "GFp":
            return (a - b) % self.p
        p = self.p
        return tuple((x - y) % p for x, y in zip(a, b))

    def neg(self, a):
        if self.kind == "Q":
            return -a
        if self.kind == "GFp":
            return (-a) % self.p
        return tuple((-x) % self.p for x in a)

    def mul(self, a, b):
        if self.kind == "Q":
            return _norm_q(a * b)
        if self.kind == "GFp":
            return a * b % self.p
        key = (a, b)
        hit = self._cache.get(key)
        if hit is None:
            hit = self._gfq_mul(a, b)
            if len(self._cache) < 1 << 18:
                self._cache[key] = hit
        return hit

    def _gfq_mul(self, a, b):
        p, k, mod = self.p, self.k, self.modulus
        prod = [0] * (2 * k - 1)
        for i, x in enumerate(a):
            if x:
                for j, y in enumerate(b):
                    prod[i + j] += x * y
        for d in range(2 * k - 2, k - 1, -1):
            c = prod[d] % p
            if c:
                for i in range(k):
                    prod[d - k + i] -= c * mod[i]
            prod[d] = 0
        return tuple(x % p for x in prod[:k])

    def inv(self, a):
        if self.is_zero(a):
            raise ZeroDivisionError("inverse of zero")
        if self.kind == "Q":
            return _norm_q(Fraction(1) / a)
        if self.kind == "GFp":
            return pow(a, self.p - 2, self.p)
        return self.pow(a, self.p ** self.k - 2)

    def div(self, a, b):
        return self.mul(a, self.inv(b))

    def pow(self, a, e: int):
        result = self.one
        base = a
        while e:
            if e & 1:
                result = self.mul(result, base)
            base = self.mul(base, base)
            e >>= 1
        return result

    def is_zero(self, a) -> bool:
        if self.kind == "GFq":
            return not any(a)
        return a == 0

    def is_prime_subfield_element(self, a) -> bool:
        if self.kind != "GFq":
            return True
        return not any(a[1:])

    # --- text syntax -----------------------------------------------------
    def parse(self, token):
        """Parse a scalar from its text or JSON form.

        Q: ``"a/b"``, ``"a"`` or an int.  GF(p): int in [0, p).  GF(p^k): a
        coefficient list ``[c0, ..., c_{k-1}]`` or an int in [0, p).
        """
        if self.kind == "Q":
            if isinstance(token, bool):
                raise ScalarSyntaxError(f"not a rational: {token!r}")
            if isinstance(token, int):
                return token
            if isinstance(token, str) and re.fullmatch(r"\s*[+-]?\d+(\s*/\s*\d+)?\s*", token):
                try:
                    return _norm_q(Fraction(token.replace(" ", "")))
                except ZeroDivisionError:
                    raise ScalarSyntaxError(f"zero denominator in {token!r}") from None
            raise ScalarSyntaxError(f"not a rational: {token!r}")
        p = self.p
        if isinstance(token, str) and re.fullmatch(r"\s*\d+\s*", token):
            token = int(token)
        if isinstance(token, int) and not isinstance(token, bool):
            if not 0 <= token < p:
                raise ScalarSyntaxError(f"{token} is not in [0, {p})")
            return self.from_int(token)
        if self.kind == "GFq" and isinstance(token, (list, tuple)):
            if len(token) != self.k or not all(
                isinstance(c, int) and not isinstance(c, bool) and 0 <= c < p for c in token
            ):
                raise ScalarSyntaxError(
                    f"expected {self.k} coefficients in [0, {p}), got {token!r}"
                )
            return tuple(token)
        raise ScalarSyntaxError(f"not an element of {self}: {token!r}")

    def format(self, a):
        """Inverse of :meth:`parse`, producing a JSON-ready value."""
        if self.kind == "Q":
            if isinstance(a, int):
                return str(a)
            return f"{a.numerator}/{a.denominator}"
        if self.kind == "GFp":
            return a
        return list(a)

    def key_text(self, a) -> str:
        if self.kind == "Q":
            return self.format(a)
        if self.kind == "GFp":
            return str(a)
        return "[" + ",".join(map(str, a)) + "]"


def _norm_q(x):
    if isinstance(x, Fraction) and x.denominator == 1:
        return x.numerator
    return x


QQ = Field("Q")


def field_make(spec) -> Field:
    """Build a field from a descriptor.

    Accepts ``"Q"``, ``"GF(p)"``, ``"GF(p^k)"`` or a dict
    ``{"kind": "Q"}`` / ``{"kind": "GF", "p": p, "k": k, "modulus": [...]}``.
    Without an explicit modulus the least irreducible of degree k is used.
    """
    if isinstance(spec, Field):
        return spec
    if isinstance(spec, str):
        s = spec.strip()
        if s in ("Q", "QQ", "Rationals"):
            return QQ
        m = _FIELD_RE.match(s)
        if not m:
            raise KernelcatError(f"unrecognised field descriptor {spec!r}")
        spec = {"kind": "GF", "p": int(m.group(1)), "k": int(m.group(2) or 1)}
    if not isinstance(spec, dict):
        raise KernelcatError(f"unrecognised field descriptor {spec!r}")
    kind = spec.get("kind")
    if kind in ("Q", "Rationals"):
        return QQ
    if kind not in ("GF", "PrimeField", "ExtensionField"):
        raise KernelcatError(f"unknown field kind {kind!r}")
    p = spec.get("p")
    k = spec.get("k", 1)
    if not isinstance(p, int) or not isinstance(k, int) or k < 1:
        raise KernelcatError(f"bad field parameters in {spec!r}")
    if not is_prime(p):
        raise NonPrimeModulus(f"{p} is not prime")
    modulus = spec.get("modulus")
    if k == 1 and modulus is None:
        return Field("GFp", p=p)
    if modulus is None:
        modulus = least_irreducible(p, k)
    modulus = tuple(modulus)
    if len(modulus) != k + 1 or modulus[-1] != 1 or not all(0 <= c < p for c in modulus):
        raise ReducibleModulusPolynomial(
            f"modulus must be monic of degree {k} with coefficients in [0, {p})"
        )
    if not is_irreducible_mod_p(modulus, p):
        raise ReducibleModulusPolynomial(f"{list(modulus)} is reducible over GF({p})")
    if k == 1:
        return Field("GFp", p=p)
    return Field("GFq", p=p, k=k, modulus=modulus)


# ---------------------------------------------------------------------------
# matrices
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Mat:
    """Dense immutable matrix; ``entries`` is row-major."""

    field: Field
    rows: int
    cols: int
    entries: tuple

    def __post_init__(self):
        if len(self.entries) != self.rows * self.cols:
            raise ShapeMismatch(
                f"{len(self.entries)} entries for a {self.rows}x{self.cols} matrix"
            )

    @classmethod
    def from_rows(cls, field: Field, rows: Sequence[Sequence]) -> "Mat":
        rows = [list(r) for r in rows]
        if not rows or not rows[0]:
            raise ShapeMismatch("matrices must have positive dimensions")
        ncols = len(rows[0])
        if any(len(r) != ncols for r in rows):
            raise ShapeMismatch("ragged rows")
        return cls(field, len(rows), ncols, tuple(x for r in rows for x in r))

    @classmethod
    def parse(cls, field: Field, rows) -> "Mat":
        return cls.from_rows(field, [[field.parse(t) for t in r] for r in rows])

    def __getitem__(self, ij):
        i, j = ij
        return self.entries[i * self.cols + j]

    def row(self, i: int) -> tuple:
        return self.entries[i * self.cols:(i + 1) * self.cols]

    def col(self, j: int) -> tuple:
        return self.entries[j::self.cols]

    def to_rows(self) -> list[list]:
        return [list(self.row(i)) for i in range(self.rows)]

    def format(self) -> list[list]:
        f = self.field.format
        return [[f(x) for x in self.row(i)] for i in range(self.rows)]

    @property
    def shape(self) -> tuple[int, int]:
        return self.rows, self.cols

    @property
    def is_square(self) -> bool:
        return self.rows == self.cols

    def key_bytes(self) -> bytes:
        kt = self.field.key_text
        return (f"{self.rows}x{self.cols}:" + ",".join(kt(x) for x in self.entries)).encode()

    def is_zero(self) -> bool:
        z = self.field.is_zero
        return all(z(x) for x in self.entries)

    def block(self, r0: int, r1: int, c0: int, c1: int) -> "Mat":
        return Mat(self.field, r1 - r0, c1 - c0,
                   tuple(self.entries[i * self.cols + j] for i in range(r0, r1) for j in range(c0, c1)))

    def __matmul__(self, other: "Mat") -> "Mat":
        return mat_mul(self, other)

    def __add__(self, other: "Mat") -> "Mat":
        return mat_add(self, other)

    def __sub__(self, other: "Mat") -> "Mat":
        return mat_sub(self, other)

    def __repr__(self) -> str:
        return f"Mat({self.field}, {self.format()})"


def identity(field: Field, n: int) -> Mat:
    z, o = field.zero, field.one
    return Mat(field, n, n, tuple(o if i == j else z for i in range(n) for j in range(n)))


def zeros(field: Field, rows: int, cols: int) -> Mat:
    return Mat(field, rows, cols, (field.zero,) * (rows * cols))


def _same_field(a: Mat, b: Mat) -> Field:
    if a.field != b.field:
        raise FieldMismatch(f"{a.field} vs {b.field}")
    return a.field


def mat_mul(a: Mat, b: Mat) -> Mat:
    F = _same_field(a, b)
    if a.cols != b.rows:
        raise ShapeMismatch(f"cannot multiply {a.shape} by {b.shape}")
    n, m, r = a.rows, a.cols, b.cols
    ae, be = a.entries, b.entries
    bcols = [be[j::r] for j in range(r)]
    out = []
    if F.kind == "GFq":
        add, mul, z = F.add, F.mul, F.zero
        for i in range(n):
            arow = ae[i * m:(i + 1) * m]
            for col in bcols:
                acc = z
                for x, y in zip(arow, col):
                    if any(x) and any(y):
                        acc = add(acc, mul(x, y))
                out.append(acc)
        return Mat(F, n, r, tuple(out))
    for i in range(n):
        arow = ae[i * m:(i + 1) * m]
        for col in bcols:
            out.append(sum(x * y for x, y in zip(arow, col) if x and y))
    if F.kind == "GFp":
        p = F.p
        return Mat(F, n, r, tuple(x % p for x in out))
    return Mat(F, n, r, tuple(_norm_q(x) for x in out))


def mat_add(a: Mat, b: Mat) -> Mat:
    F = _same_field(a, b)
    if a.shape != b.shape:
        raise ShapeMismatch(f"cannot add {a.shape} and {b.shape}")
    return Mat(F, a.rows, a.cols, tuple(F.add(x, y) for x, y in zip(a.entries, b.entries)))


def mat_sub(a: Mat, b: Mat) -> Mat:
    F = _same_field(a, b)
    if a.shape != b.shape:
        raise ShapeMismatch(f"cannot subtract {a.shape} and {b.shape}")
    return Mat(F, a.rows, a.cols, tuple(F.sub(x, y) for x, y in zip(a.entries, b.entries)))


def mat_scale(c, a: Mat) -> Mat:
    F = a.field
    return Mat(F, a.rows, a.cols, tuple(F.mul(c, x) for x in a.entries))


def transpose(a: Mat) -> Mat:
    return Mat(a.field, a.cols, a.rows, tuple(a.entries[i * a.cols + j] for j in range(a.cols) for i in range(a.rows)))


def mat_vec(a: Mat, v: Sequence) -> tuple:
    F = a.field
    out = []
    for i in range(a.rows):
        acc = F.zero
        for x, y in zip(a.row(i), v):
            acc = F.add(acc, F.mul(x, y))
        out.append(acc)
    return tuple(out)


def block_diag(blocks: Sequence[Mat]) -> Mat:
    F = blocks[0].field
    n = sum(b.rows for b in blocks)
    m = sum(b.cols for b in blocks)
    rows = [[F.zero] * m for _ in range(n)]
    r0 = c0 = 0
    for b in blocks:
        for i in range(b.rows):
            for j in range(b.cols):
                rows[r0 + i][c0 + j] = b[i, j]
        r0 += b.rows
        c0 += b.cols
    return Mat.from_rows(F, rows)


def from_columns(field: Field, cols: Sequence[Sequence]) -> Mat:
    n = len(cols[0])
    return Mat.from_rows(field, [[c[i] for c in cols] for i in range(n)])


def mat_pow(a: Mat, e: int) -> Mat:
    result = identity(a.field, a.rows)
    base = a
    while e:
        if e & 1:
            result = result @ base
        base = base @ base
        e >>= 1
    return result


def embed_matrix(a: Mat, target: Field) -> Mat:
    """Lift a matrix over a prime field into an extension of it."""
    if a.field == target:
        return a
    if a.field.kind != "GFp" or target.characteristic() != a.field.p:
        raise FieldMismatch(f"cannot embed {a.field} into {target}")
    return Mat(target, a.rows, a.cols, tuple(target.from_int(x) for x in a.entries))


# ---------------------------------------------------------------------------
# trace, trace form
# ---------------------------------------------------------------------------

def trace(a: Mat):
    if not a.is_square:
        raise ShapeMismatch(f"trace of non-square {a.shape}")
    F = a.field
    return reduce(F.add, (a[i, i] for i in range(a.rows)), F.zero)


def trace_form(a: Mat, b: Mat):
    """tr(ab), computed without forming the full product."""
    F = _same_field(a, b)
    if not (a.is_square and a.shape == b.shape):
        raise ShapeMismatch(f"trace form needs equal square shapes, got {a.shape}, {b.shape}")
    n = a.rows
    acc = F.zero
    for i in range(n):
        for k in range(n):
            x, y = a[i, k], b[k, i]
            if not F.is_zero(x) and not F.is_zero(y):
                acc = F.add(acc, F.mul(x, y))
    return acc


# ---------------------------------------------------------------------------
# row reduction
# ---------------------------------------------------------------------------

def _rref_rows(F: Field, rows: list[list]) -> tuple[list[list], list[int]]:
    rows = [list(r) for r in rows]
    if not rows:
        return rows, []
    ncols = len(rows[0])
    pivots: list[int] = []
    r = 0
    for c in range(ncols):
        pr = next((i for i in range(r, len(rows)) if not F.is_zero(rows[i][c])), None)
        if pr is None:
            continue
        rows[r], rows[pr] = rows[pr], rows[r]
        inv = F.inv(rows[r][c])
        rows[r] = [F.mul(inv, x) for x in rows[r]]
        for i in range(len(rows)):
            if i != r and not F.is_zero(rows[i][c]):
                f = rows[i][c]
                rows[i] = [F.sub(x, F.mul(f, y)) for x, y in zip(rows[i], rows[r])]
        pivots.append(c)
        r += 1
        if r == len(rows):
            break
    return rows, pivots


def rref(a: Mat) -> tuple[int, Mat, list[int]]:
    """Return (rank, reduced row echelon form, pivot columns)."""
    rows, pivots = _rref_rows(a.field, a.to_rows())
    return len(pivots), Mat.from_rows(a.field, rows), pivots


def rank(a: Mat) -> int:
    return rref(a)[0]


def inverse(a: Mat) -> Mat:
    if not a.is_square:
        raise SingularMatrix(f"non-square {a.shape} has no inverse")
    F, n = a.field, a.rows
    aug = [list(a.row(i)) + [F.one if i == j else F.zero for j in range(n)] for i in range(n)]
    rows, pivots = _rref_rows(F, aug)
    if pivots[:n] != list(range(n)):
        raise SingularMatrix("matrix is singular")
    return Mat.from_rows(F, [r[n:] for r in rows])


def rank_rref_inverse(a: Mat) -> tuple[int, Mat, Mat | None]:
    r, red, _ = rref(a)
    inv = inverse(a) if a.is_square and r == a.rows else None
    return r, red, inv


def nullspace(a: Mat) -> list[tuple]:
    """Basis of {x : a x = 0} as column vectors (tuples)."""
    F = a.field
    rows, pivots = _rref_rows(F, a.to_rows())
    free = [c for c in range(a.cols) if c not in pivots]
    basis = []
    for fc in free:
        v = [F.zero] * a.cols
        v[fc] = F.one
        for r, pc in enumerate(pivots):
            v[pc] = F.neg(rows[r][fc])
        basis.append(tuple(v))
    return basis


class RowSpace:
    """Incrementally maintained echelon basis of a subspace of F^n.

    ``add`` reports whether a vector was independent of what came before;
    ``reduce`` returns the residual after projecting out the basis.
    """

    def __init__(self, field: Field, dim: int):
        self.field = field
        self.dim = dim
        self._rows: list[list] = []      # each normalised: 1 at its pivot
        self._pivots: list[int] = []
        self.vectors: list[tuple] = []   # the original independent vectors, in order

    def __len__(self) -> int:
        return len(self._rows)

    def reduce(self, v: Sequence) -> list:
        F = self.field
        v = list(v)
        for row, pc in zip(self._rows, self._pivots):
            c = v[pc]
            if not F.is_zero(c):
                v = [F.sub(x, F.mul(c, y)) for x, y in zip(v, row)]
        return v

    def contains(self, v: Sequence) -> bool:
        F = self.field
        return all(F.is_zero(x) for x in self.reduce(v))

    def add(self, v: Sequence) -> bool:
        F = self.field
        res = self.reduce(v)
        pc = next((i for i, x in enumerate(res) if not F.is_zero(x)), None)
        if pc is None:
            return False
        inv = F.inv(res[pc])
        res = [F.mul(inv, x) for x in res]
        # keep rows fully reduced against the new pivot
        for i, row in enumerate(self._rows):
            c = row[pc]
            if not F.is_zero(c):
                self._rows[i] = [F.sub(x, F.mul(c, y)) for x, y in zip(row, res)]
        self._rows.append(res)
        self._pivots.append(pc)
        self.vectors.append(tuple(v))
        return True


# ---------------------------------------------------------------------------
# periodicity
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class PowerPeriod:
    """Smallest index a and period b with s^a = s^(a+b)."""

    index: int
    period: int


def power_period(s: Mat, cap: int = 1_000_000) -> PowerPeriod:
    """Find index and period of ``s`` by interning successive powers.

    Raises :class:`ExceededCap` when ``cap`` powers pass without a repeat.
    Over Q that only means "not shown periodic"; use
    :func:`is_periodic_rational` for a decision.
    """
    if not s.is_square:
        raise ShapeMismatch(f"power_period needs a square matrix, got {s.shape}")
    seen: dict[Mat, int] = {}
    cur = s
    for e in range(1, cap + 1):
        prev = seen.get(cur)
        if prev is not None:
            return PowerPeriod(prev, e - prev)
        seen[cur] = e
        cur = cur @ s
    raise ExceededCap(f"no repeated power among s^1..s^{cap}")


def euler_phi(k: int) -> int:
    result, m, d = k, k, 2
    while d * d <= m:
        if m % d == 0:
            while m % d == 0:
                m //= d
            result -= result // d
        d += 1
    if m > 1:
        result -= result // m
    return result


def root_of_unity_orders(n: int) -> list[int]:
    """Orders k of roots of unity that can be eigenvalues of an n x n rational matrix."""
    # phi(k) >= sqrt(k/2), so k <= 2 n^2
    return [k for k in range(1, 2 * n * n + 3) if euler_phi(k) <= n]


def rational_period_exponent(n: int) -> int:
    return reduce(math.lcm, root_of_unity_orders(n), 1)


def is_periodic_rational(s: Mat) -> bool:
    """Decide periodicity of a rational square matrix exactly.

    A periodic rational n x n matrix has eigenvalues 0 or roots of unity of
    order k with phi(k) <= n, semisimple on the unit part, so s^n = s^(n+L)
    with L the lcm of those orders; the converse is immediate.
    """
    n = s.rows
    L = rational_period_exponent(n)
    sn = mat_pow(s, n)
    return sn == sn @ mat_pow(s, L)


# ---------------------------------------------------------------------------
# polynomials over an arbitrary Field (low degree first)
# ---------------------------------------------------------------------------

def poly_trim(F: Field, c: list) -> list:
    while c and F.is_zero(c[-1]):
        c.pop()
    return c


def poly_divmod(F: Field, a: Sequence, b: Sequence) -> tuple[list, list]:
    a = poly_trim(F, list(a))
    b = poly_trim(F, list(b))
    if not b:
        raise ZeroDivisionError("polynomial division by zero")
    inv_lead = F.inv(b[-1])
    q = [F.zero] * max(len(a) - len(b) + 1, 0)
    while len(a) >= len(b):
        c = F.mul(a[-1], inv_lead)
        shift = len(a) - len(b)
        q[shift] = c
        for i, bc in enumerate(b):
            a[shift + i] = F.sub(a[shift + i], F.mul(c, bc))
        a.pop()
        poly_trim(F, a)
    return q, a


def poly_eval_matrix(coeffs: Sequence, a: Mat) -> Mat:
    """Horner evaluation of a polynomial at a square matrix."""
    F = a.field
    n = a.rows
    result = zeros(F, n, n)
    for c in reversed(list(coeffs)):
        result = result @ a
        if not F.is_zero(c):
            result = mat_add(result, mat_scale(c, identity(F, n)))
    return result


def minimal_polynomial(a: Mat) -> list:
    """Monic minimal polynomial of a square matrix, low degree first."""
    F = a.field
    n = a.rows
    powers = [identity(F, n)]
    while True:
        powers.append(powers[-1] @ a)
        cols = [p.entries for p in powers]
        ns = nullspace(from_columns(F, cols))
        if ns:
            # a dependency involving the newest power exists; normalise it
            v = next(v for v in ns if not F.is_zero(v[-1]))
            inv = F.inv(v[-1])
            return [F.mul(inv, x) for x in v]


def factor_polynomial(F: Field, coeffs: Sequence, max_candidates: int = 200_000) -> list[tuple[list, int]]:
    """Factor a monic polynomial into monic irreducibles with multiplicity.

    Over Q and GF(p) this delegates to sympy.  Over GF(p^k) it uses trial
    division by monic polynomials, bounded by ``max_candidates``; a leftover
    that could not be split within the budget is returned with multiplicity
    -1 to mark it as possibly reducible.
    """
    coeffs = poly_trim(F, list(coeffs))
    if len(coeffs) <= 1:
        return []
    if F.kind in ("Q", "GFp"):
        return _factor_sympy(F, coeffs)
    factors: list[tuple[list, int]] = []
    rest = coeffs
    budget = max_candidates
    d = 1
    elems = F.elements()
    # smaller factors are divided out first, so any candidate that divides is irreducible
    while 2 * d <= len(rest) - 1:
        for low in itertools.product(elems, repeat=d):
            budget -= 1
            if budget < 0:
                factors.append((rest, -1))
                return factors
            cand = list(low) + [F.one]
            q, r = poly_divmod(F, rest, cand)
            mult = 0
            while not r:
                rest, mult = q, mult + 1
                q, r = poly_divmod(F, rest, cand)
            if mult:
                factors.append((cand, mult))
        d += 1
    if len(rest) > 1:
        factors.append((rest, 1))
    return factors


def _factor_sympy(F: Field, coeffs: list) -> list[tuple[list, int]]:
    import sympy

    x = sympy.Symbol("x")
    if F.kind == "Q":
        expr = sum(sympy.Rational(c.numerator, c.denominator) * x ** i
                   if isinstance(c, Fraction) else sympy.Integer(c) * x ** i
                   for i, c in enumerate(coeffs))
        poly = sympy.Poly(expr, x, domain="QQ")
    else:
        poly = sympy.Poly(list(reversed(coeffs)), x, modulus=F.p)
    _, facs = poly.factor_list()
    out = []
    for fac, mult in facs:
        cs = list(reversed(fac.all_coeffs()))
        if F.kind == "Q":
            lead = sympy.Rational(cs[-1])
            vals = [sympy.Rational(c) / lead for c in cs]
            out.append(([_norm_q(Fraction(int(v.p), int(v.q))) for v in vals], int(mult)))
        else:
            ints = [int(c) % F.p for c in cs]
            inv = pow(ints[-1], F.p - 2, F.p)
            out.append(([c * inv % F.p for c in ints], int(mult)))
    return out


def parse_vector_list(field: Field, vecs: Iterable[Sequence]) -> list[tuple]:
    return [tuple(field.parse(t) for t in v) for v in vecs]
