"""Command-line front end.

Exit codes: 0 pass/equal, 1 checker failure or language inequality,
2 usage, parse or verification error.
"""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import jsonschema

from . import transforms as tf
from .alphabet import (DistributedAlphabet, FiniteAcceptor, KleeneError, Verdict, acceptor_equal,
                       acceptor_language_bounded, format_word, shortlex)
from .expressions import (ConnectedExpression, Duct, ParseError, Regex, SumExpression,
                          check_cables_wellformed, check_pairing_wellformed, format_sce, parse_regex,
                          parse_sce, regex_acceptor, sidecar_json)
from .nets import Cluster, NetSystem, find_s_cover
from .products import ProductSystem, check_matching_wellformed, direct_product_closure_check

DEFAULT_N = 8

_LETTERS = {"type": "array", "items": {"type": "string"}}
_ALPHABET = {"type": "object", "required": ["distribution"],
             "properties": {"distribution": {"type": "array", "minItems": 1,
                                             "items": {**_LETTERS, "minItems": 1}}}}
_MOVE = {"type": "array", "items": {"type": "string"}, "minItems": 3, "maxItems": 3}

NET_SCHEMA = {
    "type": "object",
    "required": ["alphabet", "places", "transitions", "initial", "finals"],
    "properties": {
        "alphabet": _ALPHABET,
        "places": _LETTERS,
        "transitions": {"type": "array", "items": {
            "type": "object", "required": ["id", "label", "pre", "post"],
            "properties": {"id": {"type": "string"}, "label": {"type": "string"},
                           "pre": _LETTERS, "post": _LETTERS}}},
        "initial": _LETTERS,
        "finals": {"type": "array", "items": _LETTERS},
    },
}

PS_SCHEMA = {
    "type": "object",
    "required": ["alphabet", "components"],
    "properties": {
        "alphabet": _ALPHABET,
        "components": {"type": "array", "items": {
            "type": "object", "required": ["states", "initial", "finals", "moves"],
            "properties": {"states": _LETTERS, "initial": {"type": "string"}, "finals": _LETTERS,
                           "moves": {"type": "array", "items": _MOVE}}}},
        "acceptance": {"type": "object", "properties": {
            "mode": {"enum": ["product", "subset"]},
            "finals": {"type": "array", "items": _LETTERS}}},
        "matchings": {"type": "object", "additionalProperties": {"type": "array", "items": _LETTERS}},
        "globals": {"type": "object", "additionalProperties": {
            "type": "array", "items": {"type": "array", "items": _MOVE}}},
        "initials": {"type": "array", "items": _LETTERS},
    },
}

_DUCT = {"type": "object", "required": ["block", "effect"],
         "properties": {"block": {"type": "string"}, "effect": {**_LETTERS, "minItems": 1}}}
SIDECAR_SCHEMA = {
    "type": "object",
    "required": ["alphabet"],
    "properties": {
        "alphabet": _ALPHABET,
        "summands": {"type": "array", "items": {"type": "object", "properties": {
            "pairings": {"type": "object", "additionalProperties": {
                "type": "array", "items": _LETTERS}},
            "cables": {"type": "object", "additionalProperties": {
                "type": "array", "items": {"type": "array", "items": _DUCT}}}}}},
    },
}

CHECK_SCHEMA = {
    "type": "object",
    "required": ["path", "property", "verdict", "witness"],
    "properties": {"path": {"type": "string"}, "property": {"type": "string"},
                   "verdict": {"enum": ["pass", "fail"]}, "note": {"type": "string"}},
}

REPORT_SCHEMA = {
    "type": "object",
    "required": ["input_hash", "direction", "properties", "language_equal", "witness"],
    "properties": {
        "input_hash": {"type": "string", "pattern": "^[0-9a-f]{64}$"},
        "direction": {"type": "string"},
        "properties": {"type": "array", "items": {
            "type": "object", "required": ["name", "source_verdict", "target_verdict"],
            "properties": {"name": {"type": "string"},
                           "source_verdict": {"enum": ["yes", "no", "n/a"]},
                           "target_verdict": {"enum": ["yes", "no", "n/a"]}}}},
        "language_equal": {"type": ["boolean", "null"]},
        "witness": {"type": ["string", "null"]},
        "error": {"type": ["string", "null"]},
    },
}

LANG_SCHEMA = {
    "type": "object",
    "required": ["mode"],
    "properties": {
        "mode": {"enum": ["enum", "eq", "closure"]},
        "words": _LETTERS,
        "equal": {"type": "boolean"},
        "closed": {"type": "boolean"},
        "witness": {"type": ["string", "null"]},
        "n": {"type": "integer", "minimum": 0},
    },
}


class UsageError(KleeneError):
    pass


# ---------------------------------------------------------------- loading

def _read_json(path: Path, schema=None):
    try:
        data = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise ParseError(f"{path}: invalid JSON at line {exc.lineno} column {exc.colno}: {exc.msg}")
    if schema is not None:
        try:
            jsonschema.validate(data, schema)
        except jsonschema.ValidationError as exc:
            where = "/".join(str(p) for p in exc.absolute_path) or "<root>"
            raise ParseError(f"{path}: {where}: {exc.message}") from None
    return data


def sidecar_path(path: Path) -> Path:
    return path.with_suffix(".json")


def load(path) -> object:
    """Net, product system, expression or plain regex, chosen by file name
    and content. Expression text files take alphabet and annotations from a
    .json sidecar of the same stem."""
    path = Path(path)
    if not path.exists():
        raise UsageError(f"{path}: no such file")
    name = path.name
    if name.endswith(".txt"):
        return _load_text(path)
    data = _read_json(path)
    if name.endswith(".net.json") or (isinstance(data, dict) and "places" in data):
        return _build(NetSystem.from_json, _read_json(path, NET_SCHEMA), path)
    if name.endswith(".ps.json") or (isinstance(data, dict) and "components" in data):
        return _build(ProductSystem.from_json, _read_json(path, PS_SCHEMA), path)
    raise ParseError(f"{path}: cannot tell what kind of object this is")


def _build(fn, data, path):
    try:
        return fn(data)
    except (ValueError, KeyError, TypeError) as exc:
        raise ParseError(f"{path}: {exc}") from None


def _load_text(path: Path):
    text = path.read_text().strip()
    side = sidecar_path(path)
    meta = _read_json(side, SIDECAR_SCHEMA) if side.exists() else None
    alphabet = _build(DistributedAlphabet.from_json, meta["alphabet"], side) if meta else None
    try:
        if "fsync" in text or text == "0":
            if alphabet is None:
                raise ParseError(f"{path}: expression files need the sidecar {side.name} with the alphabet")
            return parse_sce(text, alphabet, meta.get("summands"))
        r = parse_regex(text)
    except ParseError as exc:
        loc = f" at offset {exc.pos}" if getattr(exc, "pos", None) is not None else ""
        raise ParseError(f"{path}{loc}: {exc}") from None
    except ValueError as exc:
        raise ParseError(f"{path}: {exc}") from None
    return _Regex(r, alphabet)


class _Regex:
    """A plain regex, optionally with a distribution from its sidecar."""

    def __init__(self, regex: Regex, alphabet: DistributedAlphabet | None):
        self.regex = regex
        self.alphabet = alphabet

    def acceptor(self) -> FiniteAcceptor:
        return regex_acceptor(self.regex, self.alphabet.letters if self.alphabet else ())


def acceptor_of(obj) -> FiniteAcceptor:
    if isinstance(obj, _Regex):
        return obj.acceptor()
    return tf.to_acceptor(obj)


def alphabet_of(obj):
    return obj.alphabet


# ---------------------------------------------------------------- checks

def _s_decomposable(sys):
    try:
        find_s_cover(sys)
    except KleeneError as exc:
        return Verdict(False, getattr(exc, "location", None), str(exc))
    return Verdict(True)


def _all_letters(check):
    def run(ps):
        for a in ps.alphabet.global_letters:
            v = check(ps, a)
            if not v:
                return v
        return Verdict(True)
    return run


def property_table(obj) -> dict:
    if isinstance(obj, NetSystem):
        return {**tf.NET_PROPERTIES, "s-decomposable": _s_decomposable}
    if isinstance(obj, ProductSystem):
        return {**tf.PS_PROPERTIES, "matching-wellformed": _all_letters(check_matching_wellformed)}
    if isinstance(obj, (ConnectedExpression, SumExpression)):
        return {**tf.CE_PROPERTIES,
                "cables-wellformed": tf._all(check_cables_wellformed),
                "pairing-wellformed": tf._all(check_pairing_wellformed)}
    raise UsageError("plain regexes have no structural properties")


def jsonable(x):
    if isinstance(x, Cluster):
        return {"places": sorted(x.places), "transitions": sorted(x.transitions)}
    if isinstance(x, Duct):
        return {"block": sorted(map(str, x.block)), "effect": sorted(map(str, x.effect))}
    if isinstance(x, Regex):
        return str(x)
    if isinstance(x, (frozenset, set)):
        return sorted((jsonable(y) for y in x), key=lambda y: json.dumps(y, sort_keys=True))
    if isinstance(x, (tuple, list)):
        return [jsonable(y) for y in x]
    if isinstance(x, dict):
        return {str(k): jsonable(v) for k, v in x.items()}
    if x is None or isinstance(x, (str, int, float, bool)):
        return x
    return str(x)


def show(x) -> str:
    """Compact text form: tuples as (x,y), sets as {x,y}."""
    if isinstance(x, Cluster):
        return "cluster{" + ",".join(sorted(x.places) + sorted(x.transitions)) + "}"
    if isinstance(x, Duct):
        return f"({show(x.block)},{show(x.effect)})"
    if isinstance(x, (frozenset, set)):
        return "{" + ",".join(sorted(show(y) for y in x)) + "}"
    if isinstance(x, (tuple, list)):
        return "(" + ",".join(show(y) for y in x) + ")"
    return str(x)


# --------------------------------------------------------------- output

def emit(args, data, schema, text):
    if args.format == "json":
        jsonschema.validate(data, schema)
        print(json.dumps(data, indent=2, sort_keys=True))
    else:
        print(text)


def write_object(obj, out: Path):
    """SCEs are written as text plus a .json sidecar; everything else as JSON."""
    if isinstance(obj, (ConnectedExpression, SumExpression)):
        out.write_text(format_sce(obj) + "\n")
        sidecar_path(out).write_text(json.dumps(sidecar_json(obj), indent=1) + "\n")
    else:
        out.write_text(json.dumps(obj.to_json(), indent=1) + "\n")


def render_object(obj) -> str:
    if isinstance(obj, (ConnectedExpression, SumExpression)):
        return format_sce(obj) + "\n" + json.dumps(sidecar_json(obj), indent=1)
    return json.dumps(obj.to_json(), indent=1)


def report_text(rep: tf.ConversionReport) -> str:
    lines = [f"direction: {rep.direction}", f"input: {rep.input_hash[:16]}"]
    for p in rep.properties:
        lines.append(f"  {p.name}: {p.source_verdict} -> {p.target_verdict}")
    lines.append(f"language equal: {rep.language_equal}")
    if rep.witness is not None:
        lines.append(f"witness: {format_word(rep.witness) if isinstance(rep.witness, tuple) else rep.witness}")
    if rep.error:
        lines.append(f"error: {rep.error}")
    return "\n".join(lines)


# ---------------------------------------------------------------- commands

def cmd_check(args) -> int:
    obj = load(args.path)
    table = property_table(obj)
    if args.property not in table:
        raise UsageError(f"unknown property {args.property!r} for this input; "
                         f"choose from {', '.join(sorted(table))}")
    v = table[args.property](obj)
    data = {"path": str(args.path), "property": args.property,
            "verdict": "pass" if v else "fail", "witness": jsonable(v.witness), "note": v.note}
    text = "pass" if v else f"fail: witness {show(v.witness)}"
    if v.note and not v:
        text += f" ({v.note})"
    emit(args, data, CHECK_SCHEMA, text)
    return 0 if v else 1


def cmd_convert(args) -> int:
    obj = load(args.path)
    if isinstance(obj, _Regex):
        raise UsageError("plain regexes cannot be converted; use an fsync expression")
    kind, _, _ = tf.DIRECTIONS.get(args.direction, (None, None, None))
    if kind is None:
        raise UsageError(f"unknown direction {args.direction!r}; choose from {', '.join(tf.DIRECTIONS)}")
    expected = {"net": NetSystem, "ps": ProductSystem, "expr": (ConnectedExpression, SumExpression)}[kind]
    if not isinstance(obj, expected):
        raise UsageError(f"direction {args.direction} expects a {kind} input")
    rep = tf.run_conversion(args.direction, obj)
    return _finish([rep], args, rep.output)


def cmd_pipeline(args) -> int:
    obj = load(args.path)
    if isinstance(obj, NetSystem):
        legs = ["net-to-sce" if args.route == "cables" else "net-to-sce-pairings", "sce-to-net"]
    elif isinstance(obj, (ConnectedExpression, SumExpression)):
        legs = ["sce-to-net", "net-to-sce" if args.route == "cables" else "net-to-sce-pairings"]
    else:
        raise UsageError("pipeline takes a net or an expression")
    reports = []
    cur = obj
    for leg in legs:
        rep = tf.run_conversion(leg, cur)
        reports.append(rep)
        if not rep.ok:
            break
        cur = rep.output
    if reports[-1].ok:
        v = acceptor_equal(acceptor_of(obj), acceptor_of(cur))
        if not v:
            reports[-1].language_equal = False
            reports[-1].witness = v.witness
    return _finish(reports, args, reports[0].output if len(reports) == 1 else cur)


def _finish(reports, args, output) -> int:
    failed = any(r.error for r in reports)
    unequal = any(r.language_equal is False for r in reports)
    refuse = (failed or unequal) and not args.force
    if args.output and output is not None and not refuse:
        write_object(output, Path(args.output))
    if args.format == "json":
        data = [r.to_json() for r in reports]
        for d in data:
            jsonschema.validate(d, REPORT_SCHEMA)
        payload = {"reports": data}
        if not args.output and output is not None and not refuse:
            payload["output"] = tf.serialize(output)
        print(json.dumps(payload, indent=2, sort_keys=True))
    else:
        if not args.output and output is not None and not refuse:
            print(render_object(output))
        print("\n\n".join(report_text(r) for r in reports))
    if refuse and args.output:
        print(f"refusing to write {args.output}: conversion not certified (use --force)", file=sys.stderr)
    if failed:
        return 2
    return 1 if unequal else 0


def cmd_lang(args) -> int:
    if args.mode == "enum":
        (path,), n = _paths_and_n(args, 1)
        words = shortlex(acceptor_language_bounded(acceptor_of(load(path)), n))
        shown = [format_word(w) for w in words]
        emit(args, {"mode": "enum", "n": n, "words": shown}, LANG_SCHEMA, "\n".join(shown))
        return 0
    if args.mode == "eq":
        if len(args.args) != 2:
            raise UsageError("lang eq takes two inputs")
        a, b = (load(p) for p in args.args)
        v = acceptor_equal(acceptor_of(a), acceptor_of(b))
        w = None if v else format_word(v.witness)
        text = "equal" if v else f"different: {w} is accepted by exactly one input"
        emit(args, {"mode": "eq", "equal": v.ok, "witness": w}, LANG_SCHEMA, text)
        return 0 if v else 1
    (path,), n = _paths_and_n(args, 1)
    obj = load(path)
    if alphabet_of(obj) is None:
        raise UsageError("closure needs a distribution; add a sidecar with the alphabet")
    v = direct_product_closure_check(acceptor_of(obj), alphabet_of(obj), n)
    w = None if v else format_word(v.witness)
    text = f"closed up to length {n}" if v else f"counterexample {w}"
    emit(args, {"mode": "closure", "n": n, "closed": v.ok, "witness": w}, LANG_SCHEMA, text)
    return 0 if v else 1


def _paths_and_n(args, k):
    rest = list(args.args)
    n = args.n
    if len(rest) == k + 1:
        try:
            n = int(rest.pop())
        except ValueError:
            raise UsageError(f"length bound must be an integer, got {rest[-1]!r}") from None
    if len(rest) != k:
        raise UsageError(f"lang {args.mode} takes {k} input(s) and an optional length bound")
    if n is None:
        n = DEFAULT_N
    if n < 0:
        raise UsageError("length bound must be nonnegative")
    return rest, n


def cmd_demo(args) -> int:
    """Walk the bundled examples: each language, the models that accept it,
    and the certified closure counterexamples."""
    from importlib.resources import files
    data = files("kleenefc") / "data"
    rows = []
    for name, net in [("L_s", "fig1.net.json"), ("L_p", "fig1-product.net.json"),
                      ("L_3", "fig3-product.net.json"), ("L_4", "fig3.net.json")]:
        sys_ = load(Path(str(data / net)))
        dc = tf.verdict_of(sys_, "distributed-choice")
        closure = direct_product_closure_check(tf.to_acceptor(sys_), sys_.alphabet, 3)
        e = tf.net_to_sce(sys_)
        rows.append({"language": name, "net": net, "distributed-choice": dc,
                     "direct-product-closed-to-3": closure.ok,
                     "closure-witness": None if closure else format_word(closure.witness),
                     "sce": format_sce(e)})
    if args.format == "json":
        print(json.dumps(rows, indent=2))
    else:
        for r in rows:
            w = "closed" if r["direct-product-closed-to-3"] else f"not closed ({r['closure-witness']})"
            print(f"{r['language']}: {r['net']}, distributed choice {r['distributed-choice']}, "
                  f"direct-product closure {w}\n    {r['sce']}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="kleenefc",
                                description="Free-choice nets, product systems and connected expressions.")
    p.add_argument("--format", choices=["text", "json"], default="text")
    sub = p.add_subparsers(dest="command", required=True)

    c = sub.add_parser("check", help="run a property checker")
    c.add_argument("path")
    c.add_argument("property")
    c.set_defaults(func=cmd_check)

    c = sub.add_parser("convert", help="convert between models with a report")
    c.add_argument("path")
    c.add_argument("direction", help=", ".join(tf.DIRECTIONS))
    c.add_argument("-o", "--output")
    c.add_argument("--force", action="store_true", help="write uncertified output")
    c.set_defaults(func=cmd_convert)

    c = sub.add_parser("lang", help="enumerate or compare languages")
    c.add_argument("mode", choices=["enum", "eq", "closure"])
    c.add_argument("args", nargs="+", help="inputs, then an optional length bound")
    c.add_argument("-n", type=int, default=None, help=f"length bound (default {DEFAULT_N})")
    c.set_defaults(func=cmd_lang)

    c = sub.add_parser("pipeline", help="net to SCE to net (or the reverse), certified")
    c.add_argument("path")
    c.add_argument("--route", choices=["cables", "pairings"], default="cables")
    c.add_argument("-o", "--output")
    c.add_argument("--force", action="store_true")
    c.set_defaults(func=cmd_pipeline)

    c = sub.add_parser("demo", help="walk the bundled examples")
    c.set_defaults(func=cmd_demo)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    # --format is accepted before or after the subcommand
    argv = list(sys.argv[1:] if argv is None else argv)
    fmt = []
    for flag in ("--format=json", "--format=text"):
        while flag in argv:
            argv.remove(flag)
            fmt = ["--format", flag.split("=")[1]]
    if "--format" in argv:
        i = argv.index("--format")
        fmt = argv[i:i + 2]
        del argv[i:i + 2]
    try:
        args = parser.parse_args(fmt + argv)
    except SystemExit as exc:
        return 2 if exc.code else 0
    try:
        return args.func(args)
    except (KleeneError, ValueError, OSError) as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    raise SystemExit(main())
