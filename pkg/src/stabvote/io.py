"""File formats and JSON encoding.

Truth tables (and subset masks) are two-line text files::

    n=<int>
    <hex digits>

The hex string has exactly ceil(2**n / 4) digits, most significant first;
bit ``idx(x)`` of the number is the table entry for x. Method specs are JSON
objects with a ``kind`` field and the variant's fields.
"""

from __future__ import annotations

import dataclasses
import json
import math
import os
from fractions import Fraction

from .errors import ParseError, ValidationError
from .hypercube import N_DENSE, BooleanFunction
from .methods import (
    SPEC_TYPES,
    Dictator,
    Majority,
    ThresholdMajority,
    TwoTier,
    UNCouncil,
    VotingMethod,
    WeightedMajority,
    make_method,
)


def hex_digits(n: int) -> int:
    return math.ceil((1 << n) / 4)


def format_table(n: int, table: int) -> str:
    return f"n={n}\n{table:0{hex_digits(n)}x}\n"


def parse_table(text: str):
    """Return (n, table) from the two-line format. Errors carry byte offsets."""
    first, sep, rest = text.partition("\n")
    header = first.strip()
    if not header.startswith("n="):
        raise ParseError("offset 0: header must look like 'n=<int>'", 0)
    try:
        n = int(header[2:])
    except ValueError:
        raise ParseError(f"offset 2: bad voter count {header[2:]!r}", 2) from None
    if not 1 <= n <= N_DENSE:
        raise ParseError(f"offset 2: n={n} outside 1..{N_DENSE}", 2)
    if not sep:
        raise ParseError(f"offset {len(first)}: missing hex line", len(first))
    start = len(first) + 1
    body = rest.rstrip("\r\n ")
    if "\n" in body:
        extra = start + body.index("\n") + 1
        raise ParseError(f"offset {extra}: unexpected data after the hex line", extra)
    body = body.rstrip("\r")
    for pos, ch in enumerate(body):
        if ch not in "0123456789abcdefABCDEF":
            raise ParseError(f"offset {start + pos}: {ch!r} is not a hex digit", start + pos)
    want = hex_digits(n)
    if len(body) != want:
        raise ParseError(f"offset {start}: expected {want} hex digits for n={n}, got {len(body)}", start)
    table = int(body, 16)
    if table >> (1 << n):
        raise ParseError(f"offset {start}: value has bits beyond 2**{n}", start)
    return n, table


def save_table(f: BooleanFunction, path) -> None:
    with open(path, "w") as fh:
        fh.write(format_table(f.n, f.table))


def load_table(path) -> BooleanFunction:
    with open(path) as fh:
        n, table = parse_table(fh.read())
    return BooleanFunction(n, table, name=os.path.basename(str(path)))


_KINDS = {cls.kind: cls for cls in SPEC_TYPES}


def spec_to_dict(spec) -> dict:
    if isinstance(spec, Dictator):
        return {"kind": spec.kind, "i": spec.i}
    if isinstance(spec, Majority):
        return {"kind": spec.kind}
    if isinstance(spec, ThresholdMajority):
        return {"kind": spec.kind, "t": spec.t}
    if isinstance(spec, WeightedMajority):
        return {"kind": spec.kind, "weights": list(spec.weights), "t": spec.t}
    if isinstance(spec, TwoTier):
        inner = [spec_to_dict(s) for s in spec.inner] if isinstance(spec.inner, tuple) else spec_to_dict(spec.inner)
        return {"kind": spec.kind, "states": [list(s) for s in spec.states], "inner": inner, "outer": spec_to_dict(spec.outer)}
    if isinstance(spec, UNCouncil):
        return {"kind": spec.kind, "era": spec.era}
    raise ValidationError(f"not a method spec: {spec!r}")


def spec_from_dict(doc: dict):
    if not isinstance(doc, dict) or "kind" not in doc:
        raise ParseError("method spec must be an object with a 'kind' field")
    kind = doc["kind"]
    try:
        if kind == "dictator":
            return Dictator(int(doc["i"]))
        if kind == "majority":
            return Majority()
        if kind == "threshold_majority":
            return ThresholdMajority(doc["t"])
        if kind == "weighted_majority":
            return WeightedMajority(tuple(doc["weights"]), doc.get("t", 0))
        if kind == "two_tier":
            inner = doc.get("inner", {"kind": "majority"})
            inner = tuple(spec_from_dict(s) for s in inner) if isinstance(inner, list) else spec_from_dict(inner)
            outer = spec_from_dict(doc.get("outer", {"kind": "majority"}))
            return TwoTier(tuple(tuple(s) for s in doc["states"]), inner, outer)
        if kind == "un_council":
            return UNCouncil(doc.get("era", "post1965"))
    except KeyError as exc:
        raise ParseError(f"method spec of kind {kind!r} is missing field {exc}") from None
    raise ParseError(f"unknown method kind {kind!r}; expected one of {sorted(_KINDS)}")


def save_spec(spec, path, n=None) -> None:
    doc = spec_to_dict(spec)
    if n is not None:
        doc["n"] = n
    with open(path, "w") as fh:
        json.dump(doc, fh, indent=2)
        fh.write("\n")


def load_spec(path):
    """Return (spec, n) where n is None unless the document fixes it."""
    with open(path) as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ParseError(f"{path}: invalid JSON at offset {exc.pos}: {exc.msg}", exc.pos) from None
    n = doc.get("n") if isinstance(doc, dict) else None
    return spec_from_dict(doc), n


def _floats(text):
    try:
        return [float(v) if "." in v or "e" in v.lower() else int(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise ValidationError(f"bad number list {text!r}") from None


def parse_method_name(name: str):
    """Built-in method names.

    ``maj``, ``tmaj:<t>``, ``dict:<i>``, ``wmaj:<w1,...>[;<t>]``,
    ``two-tier:<s1,s2,...>[;<e1,e2,...>]`` or ``two-tier:<m>x<size>``,
    ``un-pre1965``, ``un-post1965``. Returns a MethodSpec.
    """
    head, _, arg = name.partition(":")
    if head == "maj" and not arg:
        return Majority()
    if head == "tmaj" and arg:
        return ThresholdMajority(_floats(arg)[0])
    if head == "dict" and arg:
        return Dictator(int(arg))
    if head == "wmaj" and arg:
        weights, _, t = arg.partition(";")
        return WeightedMajority(tuple(_floats(weights)), _floats(t)[0] if t else 0)
    if head == "two-tier" and arg:
        sizes, _, electors = arg.partition(";")
        if "x" in sizes:
            m, size = sizes.split("x")
            sizes_list = [int(size)] * int(m)
        else:
            sizes_list = [int(v) for v in _floats(sizes)]
        weights = _floats(electors) if electors else None
        return TwoTier.from_sizes(sizes_list, weights)
    if head in ("un-pre1965", "un-post1965") and not arg:
        return UNCouncil(head[3:])
    raise ValidationError(f"unknown method name {name!r}")


def load_method(ref: str, n=None, dense=None):
    """Resolve a CLI method reference: a built-in name, a .json spec, or a table file."""
    if os.path.exists(ref):
        if ref.endswith(".json"):
            spec, doc_n = load_spec(ref)
            return make_method(spec, n or doc_n, dense)
        f = load_table(ref)
        if n is not None and n != f.n:
            raise ValidationError(f"{ref} has n={f.n}, but --n {n} was given")
        return f
    return make_method(parse_method_name(ref), n, dense)


def rational(value) -> dict:
    value = Fraction(value)
    return {"num": str(value.numerator), "den": str(value.denominator), "float": float(value)}


def to_jsonable(obj):
    """Recursively convert reports to JSON-ready data.

    Fractions become {"num", "den", "float"}; ints stay ints except where the
    caller wraps them with ``str``.
    """
    if isinstance(obj, Fraction):
        return rational(obj)
    if isinstance(obj, bool) or obj is None or isinstance(obj, (str, float)):
        return obj
    if isinstance(obj, int):
        return obj
    if hasattr(obj, "_asdict"):
        return {k: to_jsonable(v) for k, v in obj._asdict().items()}
    if dataclasses.is_dataclass(obj):
        return {f.name: to_jsonable(getattr(obj, f.name)) for f in dataclasses.fields(obj)}
    if isinstance(obj, dict):
        return {str(k): to_jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [to_jsonable(v) for v in obj]
    if hasattr(obj, "item"):
        return obj.item()
    if isinstance(obj, VotingMethod) or isinstance(obj, BooleanFunction):
        return repr(obj)
    raise TypeError(f"cannot encode {type(obj).__name__}")


def dumps(doc) -> str:
    return json.dumps(to_jsonable(doc), indent=2) + "\n"
