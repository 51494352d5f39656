"""Finiteness decision for finitely generated matrix semigroups, with certificates.

The procedure adjoins the identity, checks every generator for periodicity,
puts the generators in block upper triangular form, enumerates the semigroup
exactly, and then cross-validates the order against per-block trace bounds
and against the kernel category of the projection onto the diagonal blocks.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from typing import Any, Sequence

from .errors import DEFAULT_LIMITS, KernelcatError, Limits, LimitExceeded, SoundnessError
from .exact_algebra import (
    ExceededCap,
    Field,
    Mat,
    embed_matrix,
    field_make,
    identity as eye,
    inverse,
    is_periodic_rational,
    power_period,
    rank,
    trace,
)
from .kernel_category import BlockContext, finiteness_via_kernel
from .matrix_semigroup import (
    BurnsideBasisData,
    FlagDecomposition,
    admissible_traces,
    burnside_basis,
    check_block_triangular,
    gram_matrix,
    reconstruct_coeffs,
    spanning_check,
    trace_classification,
    trace_set,
    triangularize,
)
from .semigroup_core import FinMonoid, matrix_closure

CERT_FORMAT = "kernelcat-certificate"
CERT_VERSION = 1

FINITE = "Finite"
NON_PERIODIC = "NonPeriodicWitness"
INCONCLUSIVE = "Inconclusive"


class _NonPeriodicFound(Exception):
    def __init__(self, element: Mat, word: tuple[int, ...]):
        self.element = element
        self.word = word


def word_text(word: Sequence[int]) -> str:
    return "*".join(f"g{i + 1}" for i in word) or "1"


def parse_word(text: str) -> tuple[int, ...]:
    if text in ("", "1"):
        return ()
    out = []
    for part in text.split("*"):
        if not part.startswith("g") or not part[1:].isdigit() or int(part[1:]) < 1:
            raise KernelcatError(f"bad word {text!r}")
        out.append(int(part[1:]) - 1)
    return tuple(out)


def evaluate_word(gens: Sequence[Mat], word: Sequence[int]) -> Mat:
    out = eye(gens[0].field, gens[0].rows)
    for i in word:
        out = out @ gens[i]
    return out


@dataclass
class FinitenessReport:
    verdict: str
    order: int | None = None
    witness: Mat | None = None
    witness_word: str | None = None
    certificate: dict = field(default_factory=dict)
    counters: dict = field(default_factory=dict)
    reason: str = ""

    def to_dict(self) -> dict:
        d: dict[str, Any] = {"verdict": self.verdict}
        if self.order is not None:
            d["order"] = self.order
        if self.witness is not None:
            d["witness"] = self.witness.format()
            d["witness_word"] = self.witness_word
        if self.reason:
            d["reason"] = self.reason
        d["certificate"] = self.certificate
        d["counters"] = self.counters
        return d


def _validate(gens: Sequence[Mat]) -> tuple[Field, int]:
    if not gens:
        raise KernelcatError("need at least one generator")
    F, n = gens[0].field, gens[0].rows
    for g in gens:
        if not g.is_square or g.rows != n:
            raise KernelcatError("generators must be square matrices of one size")
        if g.field != F:
            raise KernelcatError("generators must share a field")
    return F, n


def _fmt_mats(ms: Sequence[Mat]) -> list:
    return [m.format() for m in ms]


def _base_certificate(F: Field, n: int, gens: Sequence[Mat]) -> dict:
    return {
        "format": CERT_FORMAT,
        "version": CERT_VERSION,
        "field": F.descriptor(),
        "n": n,
        "generators": _fmt_mats(gens),
    }


def flag_to_dict(flag: FlagDecomposition) -> dict:
    return {
        "field": flag.field.descriptor(),
        "Q": flag.Q.format(),
        "blocks": list(flag.sizes),
        "conjugated": _fmt_mats(flag.conjugated),
        "block_methods": [b.method for b in flag.blocks],
    }


def _scan_for_nonperiodic(partial: FinMonoid, budget: int = 5000):
    """Exact periodicity test on the most recent elements of a partial closure."""
    n = len(partial.carriers)
    for i in range(n - 1, max(0, n - budget) - 1, -1):
        if not is_periodic_rational(partial.carriers[i]):
            return partial.carriers[i], partial.word(i)
    return None


def analyse_block(block_gens: Sequence[Mat], offset: int, limits: Limits) -> dict:
    """Enumerate one diagonal block and, when its algebra spans, certify it
    through the dual basis of the trace form."""
    F = block_gens[0].field
    d = block_gens[0].rows
    alg = spanning_check(block_gens)
    Sb = matrix_closure(block_gens, limits)
    T = trace_set(Sb.carriers)
    prime_entries = all(F.is_prime_subfield_element(x) for g in block_gens for x in g.entries)
    adm = admissible_traces(d, F, prime_entries)
    out: dict[str, Any] = {
        "offset": offset,
        "size": d,
        "spans": alg.spans,
        "algebra_dim": alg.dim,
        "order": len(Sb),
        "traces": [F.format(t) for t in T.values],
        "admissible_count": len(adm),
        "a_priori_bound": len(adm) ** (d * d),
    }
    if F.kind == "Q":
        out["admissible_traces"] = [F.format(t) for t in adm.values]
        out["root_orders"] = adm.root_orders
    if not all(t in adm for t in T.values):
        raise SoundnessError(f"enumerated trace outside the admissible set in block at {offset}")
    if not alg.spans:
        out["bound_path"] = ("unavailable over Q" if F.kind == "Q"
                             else "unavailable: block algebra does not span")
        return out
    data = burnside_basis(Sb.carriers, d)
    for s in Sb.carriers:
        reconstruct_coeffs(s, data)
    bound = len(T) ** (d * d)
    if len(Sb) > bound:
        raise SoundnessError(f"block order {len(Sb)} exceeds |T|^(d^2) = {bound}")
    out.update({
        "bound_path": "burnside",
        "basis": _fmt_mats(data.basis),
        "basis_words": [word_text(Sb.word(i)) for i in data.indices],
        "gram": data.gram.format(),
        "dual": data.dual.format(),
        "trace_bound": bound,
    })
    return out


def kernel_check(flag: FlagDecomposition, elements: Sequence[Mat], limits: Limits) -> dict:
    """Kernel category of the projection onto (first block, remaining blocks)."""
    if len(flag.sizes) < 2:
        return {"applicable": False, "reason": "single diagonal block"}
    split = flag.sizes[0]
    conj = [flag.Q_inv @ embed_matrix(s, flag.field) @ flag.Q for s in elements]
    ctx = BlockContext(flag.conjugated, split, limits)
    res = finiteness_via_kernel(ctx, limits, elements=conj)
    out = {"applicable": True, "split": [split, flag.Q.rows - split],
           "codomain_order": len(ctx.N),
           "trace_classification": trace_classification(flag.field, (split, flag.Q.rows - split))}
    out.update(res.to_dict())
    return out


def mcnaughton_zalcstein(gens: Sequence[Mat], limits: Limits = DEFAULT_LIMITS,
                         with_kernel: bool = True) -> FinitenessReport:
    t0 = time.perf_counter()
    F, n = _validate(gens)
    cert = _base_certificate(F, n, gens)
    counters: dict[str, Any] = {}

    def done(report: FinitenessReport) -> FinitenessReport:
        counters["milliseconds"] = round((time.perf_counter() - t0) * 1000, 3)
        report.counters = counters
        report.certificate = {**cert, "verdict": report.verdict}
        if report.order is not None:
            report.certificate["order"] = report.order
        if report.witness is not None:
            report.certificate["witness"] = report.witness.format()
            report.certificate["witness_word"] = report.witness_word
        return report

    # generator periodicity
    periods = []
    for i, g in enumerate(gens):
        if F.kind == "Q" and not is_periodic_rational(g):
            return done(FinitenessReport(NON_PERIODIC, witness=g, witness_word=word_text((i,)),
                                         reason=f"generator g{i + 1} is not periodic"))
        try:
            pp = power_period(g, limits.cap_powers)
        except ExceededCap as exc:
            return done(FinitenessReport(INCONCLUSIVE, reason=f"g{i + 1}: {exc}"))
        periods.append([pp.index, pp.period])
    cert["generator_periods"] = periods

    # exact enumeration; over Q every new element must have an integer trace in [-n, n]
    def watch(x: Mat, word):
        t = trace(x)
        if not isinstance(t, int) or abs(t) > n:
            raise _NonPeriodicFound(x, word)

    try:
        S = matrix_closure(gens, limits, on_new=watch if F.kind == "Q" else None)
    except _NonPeriodicFound as w:
        return done(FinitenessReport(NON_PERIODIC, witness=w.element, witness_word=word_text(w.word),
                                     reason="element trace is not an integer in [-n, n]"))
    except LimitExceeded as exc:
        counters["elements"] = len(exc.partial.carriers) if exc.partial else 0
        if F.kind == "Q" and exc.partial is not None:
            hit = _scan_for_nonperiodic(exc.partial)
            if hit is not None:
                return done(FinitenessReport(NON_PERIODIC, witness=hit[0], witness_word=word_text(hit[1]),
                                             reason="element fails the exact periodicity test"))
        return done(FinitenessReport(INCONCLUSIVE, reason=str(exc)))
    counters["elements"] = len(S)
    counters["steps"] = S.steps

    flag = triangularize(gens)
    cert["flag"] = flag_to_dict(flag)
    try:
        cert["blocks"] = [analyse_block(flag.diagonal_block(i), b.offset, limits)
                          for i, b in enumerate(flag.blocks)]
        if with_kernel:
            kc = kernel_check(flag, S.carriers, limits)
            cert["kernel"] = kc
            if kc.get("applicable"):
                counters["arrows"] = kc["arrow_count"]
        else:
            cert["kernel"] = {"applicable": False, "reason": "disabled"}
    except LimitExceeded as exc:
        cert["blocks_incomplete"] = str(exc)
    return done(FinitenessReport(FINITE, order=len(S)))


# ---------------------------------------------------------------------------
# certificate verification
# ---------------------------------------------------------------------------

@dataclass
class VerifyResult:
    failures: list[str]

    @property
    def ok(self) -> bool:
        return not self.failures


def _parse_mats(F: Field, payload) -> list[Mat]:
    return [Mat.parse(F, m) for m in payload]


def verify_certificate(cert: dict, limits: Limits = DEFAULT_LIMITS) -> VerifyResult:
    """Recheck every assertion a certificate makes, recomputing what it reports."""
    fails: list[str] = []
    try:
        _verify(cert, limits, fails)
    except (KernelcatError, KeyError, TypeError, ValueError, IndexError) as exc:
        fails.append(f"malformed certificate: {type(exc).__name__}: {exc}")
    return VerifyResult(fails)


def _verify(cert: dict, limits: Limits, fails: list[str]) -> None:
    if cert.get("format") != CERT_FORMAT or cert.get("version") != CERT_VERSION:
        fails.append("unknown certificate format or version")
        return
    F = field_make(cert["field"])
    n = cert["n"]
    gens = _parse_mats(F, cert["generators"])
    if any(g.shape != (n, n) for g in gens):
        fails.append("generator shape differs from n")
        return
    verdict = cert.get("verdict")
    if verdict == NON_PERIODIC:
        w = evaluate_word(gens, parse_word(cert["witness_word"]))
        if w != Mat.parse(F, cert["witness"]):
            fails.append("witness is not the product named by its word")
        if F.kind != "Q":
            fails.append("non-periodic witnesses only exist over Q")
        elif is_periodic_rational(w):
            fails.append("witness is periodic")
        return
    if verdict != FINITE:
        fails.append(f"verdict {verdict!r} carries nothing to verify")
        return

    if F.kind == "Q":
        bad = [i for i, g in enumerate(gens) if not is_periodic_rational(g)]
        if bad:
            fails.append(f"generator g{bad[0] + 1} is not periodic")
            return
    S = matrix_closure(gens, limits)
    if len(S) != cert["order"]:
        fails.append(f"order {cert['order']} but closure has {len(S)} elements")
    periods = [[p.index, p.period] for p in (power_period(g, limits.cap_powers) for g in gens)]
    if cert.get("generator_periods") != periods:
        fails.append("generator periods do not match")

    flag = cert["flag"]
    E = field_make(flag["field"])
    Q = Mat.parse(E, flag["Q"])
    if rank(Q) != n:
        fails.append("Q is singular")
        return
    Qi = inverse(Q)
    conj = _parse_mats(E, flag["conjugated"])
    lifted = [embed_matrix(g, E) for g in gens]
    if len(conj) != len(gens) or any(Qi @ g @ Q != c for g, c in zip(lifted, conj)):
        fails.append("conjugated generators are not Q^-1 g Q")
        return
    sizes = flag["blocks"]
    fd = FlagDecomposition(E, Q, Qi, list(sizes), conj, [])
    try:
        check_block_triangular(fd)
    except SoundnessError as exc:
        fails.append(str(exc))
        return

    blocks = cert["blocks"]
    offsets = [sum(sizes[:i]) for i in range(len(sizes))]
    if [b["offset"] for b in blocks] != offsets or [b["size"] for b in blocks] != list(sizes):
        fails.append("block records do not match the flag")
        return
    for b in blocks:
        lo, d = b["offset"], b["size"]
        bg = [c.block(lo, lo + d, lo, lo + d) for c in conj]
        _verify_block(E, b, bg, limits, fails)

    kc = cert.get("kernel", {})
    if fails:
        # the certificate is already rejected; skip the costly kernel recomputation
        if kc.get("applicable"):
            fails.append("kernel cross-check not recomputed")
        return
    if kc.get("applicable"):
        fresh = kernel_check(fd, S.carriers, limits)
        for key in ("arrow_count", "codomain_order", "split", "trace_classification", "certified"):
            if fresh.get(key) != kc.get(key):
                fails.append(f"kernel {key} recorded as {kc.get(key)!r}, recomputed {fresh.get(key)!r}")
        if kc.get("certified") and cert["order"] > kc.get("arrow_count", -1):
            fails.append("order exceeds the kernel arrow count")
    elif len(sizes) >= 2 and kc.get("reason") != "disabled":
        fails.append("kernel cross-check missing for a reducible flag")


def _verify_block(E: Field, b: dict, bg: list[Mat], limits: Limits, fails: list[str]) -> None:
    d, lo = b["size"], b["offset"]
    tag = f"block at {lo}"
    Sb = matrix_closure(bg, limits)
    if len(Sb) != b["order"]:
        fails.append(f"{tag}: order {b['order']} but closure has {len(Sb)}")
    T = trace_set(Sb.carriers)
    recorded_T = [E.parse(t) for t in b["traces"]]
    if set(recorded_T) != set(T.values) or len(recorded_T) != len(T.values):
        fails.append(f"{tag}: trace set does not match")
    prime_entries = all(E.is_prime_subfield_element(x) for g in bg for x in g.entries)
    adm = admissible_traces(d, E, prime_entries)
    if b.get("admissible_count") != len(adm) or b.get("a_priori_bound") != len(adm) ** (d * d):
        fails.append(f"{tag}: admissible trace bound does not match")
    if not all(t in adm for t in recorded_T):
        fails.append(f"{tag}: trace outside the admissible set")
    if b.get("bound_path") != "burnside":
        if spanning_check(bg).spans:
            fails.append(f"{tag}: block spans but no dual-basis data recorded")
        return
    basis = _parse_mats(E, b["basis"])
    words = [parse_word(w) for w in b["basis_words"]]
    if len(basis) != d * d or len(words) != d * d:
        fails.append(f"{tag}: basis must have {d * d} elements")
        return
    if any(evaluate_word(bg, w) != s for w, s in zip(words, basis)):
        fails.append(f"{tag}: basis element differs from the product of its word")
    D = Mat.parse(E, b["gram"])
    C = Mat.parse(E, b["dual"])
    if gram_matrix(basis) != D:
        fails.append(f"{tag}: Gram matrix does not match tr(s_i s_j)")
    if C @ D != eye(E, d * d):
        fails.append(f"{tag}: C*D != I")
        return
    if rank(Mat(E, d * d, d * d, tuple(x for s in basis for x in s.entries))) != d * d:
        fails.append(f"{tag}: basis is not linearly independent")
        return
    data = BurnsideBasisData(basis, list(range(d * d)), D, C)
    for s in Sb.carriers:
        try:
            reconstruct_coeffs(s, data)
        except KernelcatError:
            fails.append(f"{tag}: an element is not reconstructed from the dual basis")
            break
    bound = len(recorded_T) ** (d * d)
    if b.get("trace_bound") != bound:
        fails.append(f"{tag}: trace bound should be {bound}")
    if b["order"] > bound:
        fails.append(f"{tag}: order exceeds |T|^(d^2)")
