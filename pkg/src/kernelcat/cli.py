"""Command line interface.

Subcommands read one JSON document (a path, or ``-`` for stdin) and print a
JSON report.  Exit codes: 0 success / finite, 1 usage or input error,
2 non-periodic witness, 3 inconclusive (limits), 4 certificate invalid.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import os
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

from . import __version__
from .errors import DEFAULT_LIMITS, KernelcatError, Limits, LimitExceeded
from .exact_algebra import Field, Mat, field_make
from .kernel_category import (
    BlockContext,
    EnumeratedContext,
    check_category_axioms,
    kernel_category,
)
from .kleene_paths import LabeledGraph, MatrixLabels, MonoidLabels, image_homsets
from .pipeline import (
    FINITE,
    INCONCLUSIVE,
    NON_PERIODIC,
    flag_to_dict,
    mcnaughton_zalcstein,
    verify_certificate,
    word_text,
)
from .matrix_semigroup import triangularize
from .semigroup_core import FinMonoid, MonoidHom, hom_from_carrier_map, matrix_closure

EXIT_OK = 0
EXIT_INPUT = 1
EXIT_NON_PERIODIC = 2
EXIT_INCONCLUSIVE = 3
EXIT_INVALID = 4

ENV_PREFIX = "KERNELCAT_"


class InputError(KernelcatError):
    """Malformed job input; ``where`` locates the offending value."""

    def __init__(self, message: str, where: str = ""):
        super().__init__(f"{where}: {message}" if where else message)
        self.where = where


# ---------------------------------------------------------------------------
# job input
# ---------------------------------------------------------------------------

@dataclass
class JobInput:
    field: Field
    n: int
    generators: list[Mat]
    limits: dict = field(default_factory=dict)
    options: dict = field(default_factory=dict)

    def canonical(self) -> dict:
        d: dict[str, Any] = {
            "field": self.field.descriptor(),
            "n": self.n,
            "generators": [g.format() for g in self.generators],
        }
        if self.limits:
            d["limits"] = dict(sorted(self.limits.items()))
        d.update(self.options)
        return d


def load_document(path: str) -> Any:
    try:
        text = sys.stdin.read() if path == "-" else Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise InputError(f"cannot read input: {exc.strerror}", path) from None
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise InputError(exc.msg, f"{path}:{exc.lineno}:{exc.colno}") from None


def _parse_field(doc: dict) -> Field:
    if "field" not in doc:
        raise InputError("missing 'field'", "$")
    try:
        return field_make(doc["field"])
    except KernelcatError as exc:
        raise InputError(str(exc), "$.field") from None


def _parse_matrix(F: Field, rows, where: str, shape: tuple[int, int] | None = None) -> Mat:
    if not isinstance(rows, list) or not rows or not all(isinstance(r, list) for r in rows):
        raise InputError("expected a nonempty list of rows", where)
    parsed = []
    for i, r in enumerate(rows):
        row = []
        for j, tok in enumerate(r):
            try:
                row.append(F.parse(tok))
            except KernelcatError as exc:
                raise InputError(str(exc), f"{where}[{i}][{j}]") from None
        parsed.append(row)
    try:
        m = Mat.from_rows(F, parsed)
    except KernelcatError as exc:
        raise InputError(str(exc), where) from None
    if shape is not None and m.shape != shape:
        raise InputError(f"expected shape {shape[0]}x{shape[1]}, got {m.rows}x{m.cols}", where)
    return m


_LIMIT_KEYS = ("max_elements", "max_steps", "cap_powers")


def _parse_limits(doc: dict) -> dict:
    lim = doc.get("limits", {})
    if not isinstance(lim, dict):
        raise InputError("expected an object", "$.limits")
    for k, v in lim.items():
        if k not in _LIMIT_KEYS:
            raise InputError(f"unknown limit {k!r}", f"$.limits.{k}")
        if not isinstance(v, int) or isinstance(v, bool) or v < 1:
            raise InputError("expected a positive integer", f"$.limits.{k}")
    return dict(lim)


def parse_job(doc: Any) -> JobInput:
    if not isinstance(doc, dict):
        raise InputError("expected a JSON object", "$")
    F = _parse_field(doc)
    n = doc.get("n")
    if not isinstance(n, int) or isinstance(n, bool) or n < 1:
        raise InputError("expected a positive integer", "$.n")
    gens = doc.get("generators")
    if not isinstance(gens, list) or not gens:
        raise InputError("expected a nonempty list of matrices", "$.generators")
    mats = [_parse_matrix(F, g, f"$.generators[{i}]", (n, n)) for i, g in enumerate(gens)]
    options = {k: v for k, v in doc.items() if k not in ("field", "n", "generators", "limits")}
    return JobInput(F, n, mats, _parse_limits(doc), options)


def parse_monoid(doc: Any, where: str) -> FinMonoid:
    if not isinstance(doc, dict):
        raise InputError("expected a monoid object", where)
    try:
        return FinMonoid.from_dict(doc)
    except (KernelcatError, KeyError, TypeError) as exc:
        raise InputError(f"bad monoid: {exc}", where) from None


# ---------------------------------------------------------------------------
# limits, caching, output
# ---------------------------------------------------------------------------

def resolve_limits(args, file_limits: dict) -> Limits:
    """Precedence: command line flag, then environment, then input file, then defaults."""
    vals = {}
    for k in _LIMIT_KEYS:
        flag = getattr(args, k, None)
        env = os.environ.get(ENV_PREFIX + k.upper())
        if flag is not None:
            vals[k] = flag
        elif env:
            try:
                vals[k] = int(env)
            except ValueError:
                raise InputError(f"{ENV_PREFIX + k.upper()} must be an integer") from None
        elif k in file_limits:
            vals[k] = file_limits[k]
    return DEFAULT_LIMITS.replace(**vals)


def cache_key(command: str, canonical_input: Any, limits: Limits) -> str:
    blob = json.dumps({"command": command, "input": canonical_input, "limits": limits.__dict__,
                       "version": __version__}, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(blob.encode()).hexdigest()


def dumps(obj: Any) -> str:
    return json.dumps(obj, sort_keys=True, indent=2)


@dataclass
class Outcome:
    report: dict
    code: int
    certificate: dict | None = None


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------

def cmd_check(doc: Any, limits: Limits) -> Outcome:
    job = parse_job(doc)
    rep = mcnaughton_zalcstein(job.generators, limits)
    code = {FINITE: EXIT_OK, NON_PERIODIC: EXIT_NON_PERIODIC, INCONCLUSIVE: EXIT_INCONCLUSIVE}[rep.verdict]
    result = rep.to_dict()
    counters = result.pop("counters")
    return Outcome({"result": result, "counters": counters}, code, rep.certificate)


def cmd_closure(doc: Any, limits: Limits) -> Outcome:
    job = parse_job(doc)
    try:
        S = matrix_closure(job.generators, limits)
    except LimitExceeded as exc:
        seen = len(exc.partial.carriers) if exc.partial else 0
        return Outcome({"result": {"verdict": INCONCLUSIVE, "elements_seen": seen, "reason": str(exc)},
                        "counters": {"elements": seen}}, EXIT_INCONCLUSIVE)
    result: dict[str, Any] = {
        "order": len(S),
        "generators": list(S.generators),
        "elements": [{"word": word_text(S.word(i)), "matrix": m.format()} for i, m in enumerate(S.carriers)],
    }
    if len(S) <= 500:
        result["monoid"] = S.to_dict()
    return Outcome({"result": result, "counters": {"elements": len(S), "steps": S.steps}}, EXIT_OK)


def cmd_triangularize(doc: Any, limits: Limits) -> Outcome:
    job = parse_job(doc)
    flag = triangularize(job.generators)
    result = flag_to_dict(flag)
    result["spans"] = [b.spans for b in flag.blocks]
    result["algebra_dims"] = [b.algebra_dim for b in flag.blocks]
    result["irreducible_certified"] = [b.irreducible for b in flag.blocks]
    return Outcome({"result": result, "counters": {}}, EXIT_OK)


def _kernel_context(doc: Any, limits: Limits):
    if isinstance(doc, dict) and "monoid" in doc:
        M = parse_monoid(doc["monoid"], "$.monoid")
        hom = doc.get("hom", "identity")
        if hom == "identity":
            phi = hom_from_carrier_map(M, lambda c: c)
        elif hom == "trivial":
            phi = hom_from_carrier_map(M, lambda c: ())
        elif isinstance(hom, dict) and "image" in hom:
            N = parse_monoid(hom.get("codomain"), "$.hom.codomain")
            image = hom["image"]
            if not isinstance(image, list) or len(image) != len(M) or not all(
                    isinstance(x, int) and 0 <= x < len(N) for x in image):
                raise InputError("image must list a codomain index per element", "$.hom.image")
            phi = MonoidHom(M, N, list(image))
            try:
                phi.verify()
            except KernelcatError as exc:
                raise InputError(str(exc), "$.hom") from None
        else:
            raise InputError("expected 'identity', 'trivial' or {codomain, image}", "$.hom")
        return EnumeratedContext(phi), None
    job = parse_job(doc)
    split = job.options.get("split")
    if split is None:
        flag = triangularize(job.generators)
        if len(flag.sizes) < 2:
            raise InputError("generators admit no block split; give 'split' or use a monoid", "$")
        return BlockContext(flag.conjugated, flag.sizes[0], limits), flag
    if not isinstance(split, int) or not 0 < split < job.n:
        raise InputError(f"split must be in 1..{job.n - 1}", "$.split")
    try:
        return BlockContext(job.generators, split, limits), None
    except KernelcatError as exc:
        raise InputError(str(exc), "$.generators") from None


def cmd_kernelcat(doc: Any, limits: Limits) -> Outcome:
    ctx, flag = _kernel_context(doc, limits)
    try:
        K = kernel_category(ctx, limits)
    except LimitExceeded as exc:
        K = exc.partial
        return Outcome({"result": {"verdict": INCONCLUSIVE, "reason": str(exc), "category": K.dump()},
                        "counters": {"arrows": K.arrow_count}}, EXIT_INCONCLUSIVE)
    axioms = check_category_axioms(K)
    result = {"category": K.dump(), "axioms": axioms, "codomain_order": len(ctx.N)}
    if flag is not None:
        result["flag"] = flag_to_dict(flag)
    return Outcome({"result": result, "counters": {"arrows": K.arrow_count, "steps": K.steps}}, EXIT_OK)


def parse_graph(doc: Any) -> LabeledGraph:
    if not isinstance(doc, dict):
        raise InputError("expected a JSON object", "$")
    edges = doc.get("edges")
    if not isinstance(edges, list):
        raise InputError("expected a list of [source, target, label] triples", "$.edges")
    if "monoid" in doc:
        M = parse_monoid(doc["monoid"], "$.monoid")
        nv = doc.get("vertices")
        if not isinstance(nv, int) or nv < 1:
            raise InputError("expected a positive vertex count", "$.vertices")
        labels = MonoidLabels(M)
        parsed = []
        for i, e in enumerate(edges):
            if not (isinstance(e, list) and len(e) == 3):
                raise InputError("expected [source, target, label]", f"$.edges[{i}]")
            parsed.append((e[0], e[1], e[2]))
    else:
        F = _parse_field(doc)
        dims = doc.get("dims")
        if not isinstance(dims, list) or not dims or not all(isinstance(d, int) and d > 0 for d in dims):
            raise InputError("expected a list of positive vertex dimensions", "$.dims")
        nv = len(dims)
        labels = MatrixLabels(F, dims)
        parsed = []
        for i, e in enumerate(edges):
            if not (isinstance(e, list) and len(e) == 3):
                raise InputError("expected [source, target, label]", f"$.edges[{i}]")
            parsed.append((e[0], e[1], _parse_matrix(F, e[2], f"$.edges[{i}][2]")))
    try:
        return LabeledGraph(nv, parsed, labels)
    except KernelcatError as exc:
        raise InputError(str(exc), "$.edges") from None


def cmd_kleene(doc: Any, limits: Limits) -> Outcome:
    g = parse_graph(doc)
    order = doc.get("order")
    try:
        table = image_homsets(g, order, limits)
    except LimitExceeded as exc:
        return Outcome({"result": {"verdict": INCONCLUSIVE, "reason": str(exc)}, "counters": {}},
                       EXIT_INCONCLUSIVE)
    except KernelcatError as exc:
        raise InputError(str(exc), "$.order") from None

    def fmt(x):
        return x.format() if isinstance(x, Mat) else x

    def sort_key(x):
        return x.key_bytes() if isinstance(x, Mat) else repr(x).encode()

    homs = []
    for (v, w), vals in sorted(table.homs.items()):
        homs.append({"source": v, "target": w, "size": len(vals),
                     "values": [fmt(x) for x in sorted(vals, key=sort_key)]})
    total = sum(h["size"] for h in homs)
    return Outcome({"result": {"order": table.order, "homsets": homs},
                    "counters": {"values": total}}, EXIT_OK)


def cmd_verify(doc: Any, limits: Limits) -> Outcome:
    if not isinstance(doc, dict):
        raise InputError("expected a certificate object", "$")
    cert = doc
    if "certificate" not in doc and isinstance(doc.get("result"), dict):
        cert = doc["result"].get("certificate", doc)
    elif "certificate" in doc:
        cert = doc["certificate"]
    res = verify_certificate(cert, limits)
    return Outcome({"result": {"valid": res.ok, "failures": res.failures}, "counters": {}},
                   EXIT_OK if res.ok else EXIT_INVALID)


COMMANDS = {
    "check": cmd_check,
    "closure": cmd_closure,
    "triangularize": cmd_triangularize,
    "kernelcat": cmd_kernelcat,
    "kleene": cmd_kleene,
    "verify": cmd_verify,
}


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="kernelcat", description=__doc__.split("\n\n")[0])
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True)
    helps = {
        "check": "decide finiteness and emit a certificate",
        "closure": "enumerate the generated monoid",
        "triangularize": "block upper triangular form",
        "kernelcat": "enumerate the kernel category of a projection or homomorphism",
        "kleene": "hom-set images of a labelled graph by vertex elimination",
        "verify": "re-check a certificate",
    }
    for name, text in helps.items():
        sp = sub.add_parser(name, help=text)
        sp.add_argument("input", help="input JSON file, or - for stdin")
        sp.add_argument("--max-elements", type=int, dest="max_elements")
        sp.add_argument("--max-steps", type=int, dest="max_steps")
        sp.add_argument("--cap-powers", type=int, dest="cap_powers")
        sp.add_argument("--cache", metavar="DIR")
        sp.add_argument("--emit-certificate", metavar="PATH")
        sp.add_argument("--quiet", action="store_true", default=None)
    return p


def _env_flag(args, name: str):
    val = getattr(args, name)
    if val is None:
        val = os.environ.get(ENV_PREFIX + name.upper()) or None
    return val


def run(argv: list[str] | None = None, stdout=None, stderr=None) -> int:
    stdout = stdout or sys.stdout
    stderr = stderr or sys.stderr
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_INPUT if exc.code else EXIT_OK
    quiet = bool(args.quiet) or os.environ.get(ENV_PREFIX + "QUIET", "") not in ("", "0")
    cache_dir = _env_flag(args, "cache")
    cert_path = _env_flag(args, "emit_certificate")
    try:
        doc = load_document(args.input)
        limits = resolve_limits(args, _parse_limits(doc) if isinstance(doc, dict) else {})
        key = cache_key(args.command, _canonical_doc(doc), limits)
        cached = _cache_read(cache_dir, key)
        if cached is not None:
            report, code, cert = cached["report"], cached["code"], cached.get("certificate")
            report["cache_hit"] = True
        else:
            out = COMMANDS[args.command](doc, limits)
            report = {
                "command": args.command,
                "tool_version": __version__,
                "input_digest": key,
                **out.report,
                "cache_hit": False,
            }
            code, cert = out.code, out.certificate
            _cache_write(cache_dir, key, {"report": report, "code": code, "certificate": cert})
    except InputError as exc:
        print(f"kernelcat: input error at {exc}", file=stderr)
        return EXIT_INPUT
    except KernelcatError as exc:
        print(f"kernelcat: error: {exc}", file=stderr)
        return EXIT_INPUT
    if cert_path and cert is not None:
        Path(cert_path).write_text(dumps(cert) + "\n", encoding="utf-8")
    if not quiet:
        stdout.write(dumps(report) + "\n")
    return code


def _canonical_doc(doc: Any) -> Any:
    """Matrix jobs are re-emitted in canonical scalar syntax; anything else is used as is."""
    try:
        return parse_job(doc).canonical()
    except KernelcatError:
        return doc


def _cache_read(cache_dir: str | None, key: str) -> dict | None:
    if not cache_dir:
        return None
    path = Path(cache_dir) / f"{key}.json"
    if not path.exists():
        return None
    try:
        return json.loads(path.read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError):
        return None


def _cache_write(cache_dir: str | None, key: str, payload: dict) -> None:
    if not cache_dir:
        return
    d = Path(cache_dir)
    d.mkdir(parents=True, exist_ok=True)
    tmp = d / f"{key}.json.tmp"
    tmp.write_text(json.dumps(payload, sort_keys=True), encoding="utf-8")
    tmp.replace(d / f"{key}.json")


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
