"""Interface types and border values.

Types live on the four borders of programs and scenarios.  Spatial types
(``sn``, ``sb``, ...) describe north/south borders, temporal types (``tn``,
``tb``, ...) describe west/east borders.  A border interface is a
semicolon-list of module tuples; ``nil`` elements may be freely inserted into
or dropped from such a list, so most operations work on a canonical form with
the nils removed.

Beyond the integer/boolean leaves the module provides three extensions used
by the termination-detection corpus: a finite integer-set leaf
(``sIntSet``/``tIntSet``), a two-valued color leaf (``sColor``/``tColor``
with constants ``white``/``black``), and named tuple fields (records such as
``token(col,pos)`` and set arrays such as ``msg[~]``).
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Iterable, Optional, Sequence

SPATIAL = "s"
TEMPORAL = "t"

INT_MIN = -(2**63)
INT_MAX = 2**63 - 1


class IfaceError(Exception):
    """Malformed type or value construction."""


# ---------------------------------------------------------------------------
# Types
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Type:
    def kind(self) -> Optional[str]:
        """Spatial/temporal tag, or None for kind-neutral nil."""
        return None


@dataclass(frozen=True)
class TNil(Type):
    pass


@dataclass(frozen=True)
class TInt(Type):
    k: str = SPATIAL

    def kind(self):
        return self.k


@dataclass(frozen=True)
class TBool(Type):
    k: str = SPATIAL

    def kind(self):
        return self.k


@dataclass(frozen=True)
class TColor(Type):
    k: str = SPATIAL

    def kind(self):
        return self.k


@dataclass(frozen=True)
class TSet(Type):
    k: str = SPATIAL

    def kind(self):
        return self.k


@dataclass(frozen=True)
class TTuple(Type):
    """Comma tuple; fields may carry names (records, interface variables)."""

    fields: tuple = ()  # tuple of (name | None, Type)

    def kind(self):
        for _, t in self.fields:
            k = t.kind()
            if k is not None:
                return k
        return None


@dataclass(frozen=True)
class TList(Type):
    """Semicolon list of module tuples."""

    items: tuple = ()

    def kind(self):
        for t in self.items:
            k = t.kind()
            if k is not None:
                return k
        return None


@dataclass(frozen=True)
class TStarTuple(Type):
    """(T)* — any number of comma-repetitions of T."""

    elem: Type = TNil()

    def kind(self):
        return self.elem.kind()


@dataclass(frozen=True)
class TStarList(Type):
    """(T;)* — any number of semicolon-repetitions of T."""

    elem: Type = TNil()

    def kind(self):
        return self.elem.kind()


@dataclass(frozen=True)
class TUnion(Type):
    alts: tuple = ()

    def kind(self):
        for t in self.alts:
            k = t.kind()
            if k is not None:
                return k
        return None


NIL = TNil()


def is_nil_type(t: Type) -> bool:
    return isinstance(t, TNil)


def canon_type(t: Type) -> Type:
    """Canonical form: nils dropped from lists, singletons collapsed.

    Empty tuples/lists collapse to nil; a star whose element is nil denotes
    only nil-lists and collapses to nil as well.  Idempotent.
    """
    if isinstance(t, TNil) or isinstance(t, (TInt, TBool, TColor, TSet)):
        return t
    if isinstance(t, TTuple):
        fields = tuple((n, canon_type(ft)) for n, ft in t.fields)
        if not fields:
            return NIL
        if len(fields) == 1 and fields[0][0] is None:
            return fields[0][1]
        return TTuple(fields)
    if isinstance(t, TList):
        items = [canon_type(x) for x in t.items]
        items = [x for x in items if not is_nil_type(x)]
        flat = []
        for x in items:
            if isinstance(x, TList):
                flat.extend(x.items)
            else:
                flat.append(x)
        if not flat:
            return NIL
        if len(flat) == 1:
            return flat[0]
        return TList(tuple(flat))
    if isinstance(t, TStarTuple):
        e = canon_type(t.elem)
        return NIL if is_nil_type(e) else TStarTuple(e)
    if isinstance(t, TStarList):
        e = canon_type(t.elem)
        return NIL if is_nil_type(e) else TStarList(e)
    if isinstance(t, TUnion):
        alts = []
        for a in t.alts:
            a = canon_type(a)
            parts = a.alts if isinstance(a, TUnion) else (a,)
            for p in parts:
                if p not in alts:
                    alts.append(p)
        if not alts:
            return NIL
        if len(alts) == 1:
            return alts[0]
        return TUnion(tuple(alts))
    raise IfaceError(f"unknown type node {t!r}")


def nil_normalize(t: Type) -> Type:
    """Remove all nil list elements; idempotent."""
    return canon_type(t)


def type_list_items(t: Type) -> list:
    """Top-level semicolon items of an interface type (nil -> empty list)."""
    t = canon_type(t)
    if is_nil_type(t):
        return []
    if isinstance(t, TList):
        return list(t.items)
    return [t]


def type_from_items(items: Sequence[Type]) -> Type:
    return canon_type(TList(tuple(items)))


# ---------------------------------------------------------------------------
# Insertion plans (=_n equality)
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class InsertionPlan:
    """Positions (in the merged sequence) at which a nil is inserted."""

    left: tuple = ()
    right: tuple = ()
    length: int = 0


def align_up_to_nil(left: Sequence, right: Sequence, is_nil, equal) -> Optional[InsertionPlan]:
    """Leftmost-insertion alignment of two sequences up to nil elements.

    Returns the deterministic minimal plan making both sides equal, or None
    if their non-nil subsequences differ.
    """
    li = ri = pos = 0
    lins, rins = [], []
    while li < len(left) or ri < len(right):
        lnil = li < len(left) and is_nil(left[li])
        rnil = ri < len(right) and is_nil(right[ri])
        if lnil and rnil:
            li += 1
            ri += 1
        elif lnil:
            rins.append(pos)
            li += 1
        elif rnil:
            lins.append(pos)
            ri += 1
        elif li < len(left) and ri < len(right):
            if not equal(left[li], right[ri]):
                return None
            li += 1
            ri += 1
        else:
            return None  # one side has trailing non-nil items
        pos += 1
    return InsertionPlan(tuple(lins), tuple(rins), pos)


def equal_up_to_nil(t: Type, u: Type) -> Optional[InsertionPlan]:
    """Nil-insertion plan making two interface types equal, if one exists."""
    return align_up_to_nil(
        type_list_items_raw(t),
        type_list_items_raw(u),
        is_nil=lambda x: is_nil_type(canon_type(x)),
        equal=lambda a, b: canon_type(a) == canon_type(b),
    )


def type_list_items_raw(t: Type) -> list:
    """Top-level semicolon items *without* dropping nils (for alignment)."""
    if isinstance(t, TList):
        return list(t.items)
    return [t]


# ---------------------------------------------------------------------------
# Intersection (type matching)
# ---------------------------------------------------------------------------


def _isect_fields(fa, fb):
    if len(fa) != len(fb):
        return None
    out = []
    for (na, ta), (nb, tb) in zip(fa, fb):
        if na is not None and nb is not None and na != nb:
            return None
        it = type_match(ta, tb)
        if it is None:
            return None
        out.append((na if na is not None else nb, it))
    return tuple(out)


def type_match(t: Type, u: Type) -> Optional[Type]:
    """Intersection of the two value sets, or None when empty."""
    t, u = canon_type(t), canon_type(u)
    if isinstance(t, TUnion):
        alts = [x for x in (type_match(a, u) for a in t.alts) if x is not None]
        if not alts:
            return None
        return canon_type(TUnion(tuple(alts)))
    if isinstance(u, TUnion):
        return type_match(u, t)

    star = (TStarTuple, TStarList)
    if isinstance(t, TNil) or isinstance(u, TNil):
        other = u if isinstance(t, TNil) else t
        if isinstance(other, TNil) or isinstance(other, star):
            return NIL
        return None

    if isinstance(t, (TInt, TBool, TColor, TSet)) or isinstance(u, (TInt, TBool, TColor, TSet)):
        if type(t) is type(u) and t.kind() == u.kind():
            return t
        # a leaf may still sit inside a star or a named singleton tuple
        if isinstance(u, star):
            t, u = u, t
        if isinstance(t, star):
            e = type_match(t.elem, u)
            return e  # one repetition
        if isinstance(t, TTuple) and len(t.fields) == 1:
            e = type_match(t.fields[0][1], u)
            return None if e is None else TTuple(((t.fields[0][0], e),))
        if isinstance(u, TTuple) and len(u.fields) == 1:
            return type_match(u, t)
        return None

    if isinstance(t, TTuple) and isinstance(u, TTuple):
        fields = _isect_fields(t.fields, u.fields)
        return None if fields is None else TTuple(fields)
    if isinstance(t, TList) and isinstance(u, TList):
        if len(t.items) != len(u.items):
            return None
        out = []
        for a, b in zip(t.items, u.items):
            it = type_match(a, b)
            if it is None:
                return None
            out.append(it)
        return TList(tuple(out))

    if isinstance(t, star) and isinstance(u, star):
        if type(t) is type(u):
            e = type_match(t.elem, u.elem)
            return NIL if e is None else type(t)(e)
        return NIL  # both contain the empty repetition only
    if isinstance(u, star):
        t, u = u, t
    if isinstance(t, TStarList) and isinstance(u, TList):
        out = []
        for b in u.items:
            it = type_match(t.elem, b)
            if it is None:
                return None
            out.append(it)
        return TList(tuple(out))
    if isinstance(t, TStarTuple) and isinstance(u, TTuple):
        fields = []
        for n, b in u.fields:
            it = type_match(t.elem, b)
            if it is None:
                return None
            fields.append((n, it))
        return TTuple(tuple(fields))
    if isinstance(t, star):
        e = type_match(t.elem, u)
        return e
    return None


def union_type(t: Type, u: Type) -> Type:
    """t ∪ u, collapsed when both sides coincide."""
    t, u = canon_type(t), canon_type(u)
    if t == u:
        return t
    return canon_type(TUnion((t, u)))


# ---------------------------------------------------------------------------
# Values
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Value:
    pass


@dataclass(frozen=True)
class VNil(Value):
    pass


@dataclass(frozen=True)
class VInt(Value):
    v: int = 0

    def __post_init__(self):
        if not (INT_MIN <= self.v <= INT_MAX):
            raise IfaceError(f"integer out of 64-bit range: {self.v}")


@dataclass(frozen=True)
class VBool(Value):
    v: bool = False


@dataclass(frozen=True)
class VColor(Value):
    v: str = "white"

    def __post_init__(self):
        if self.v not in ("white", "black"):
            raise IfaceError(f"bad color {self.v!r}")


@dataclass(frozen=True)
class VSet(Value):
    v: frozenset = frozenset()


@dataclass(frozen=True)
class VTup(Value):
    items: tuple = ()


@dataclass(frozen=True)
class VList(Value):
    items: tuple = ()


VNIL = VNil()
WHITE = VColor("white")
BLACK = VColor("black")


def is_nil_value(v: Value) -> bool:
    return isinstance(v, VNil)


def canon_value(v: Value) -> Value:
    """Mirror of canon_type: collapse empties/singletons, drop nil list items."""
    if isinstance(v, (VNil, VInt, VBool, VColor, VSet)):
        return v
    if isinstance(v, VTup):
        items = tuple(canon_value(x) for x in v.items)
        if not items:
            return VNIL
        if len(items) == 1:
            return items[0]
        return VTup(items)
    if isinstance(v, VList):
        items = [canon_value(x) for x in v.items]
        items = [x for x in items if not is_nil_value(x)]
        flat = []
        for x in items:
            if isinstance(x, VList):
                flat.extend(x.items)
            else:
                flat.append(x)
        if not flat:
            return VNIL
        if len(flat) == 1:
            return flat[0]
        return VList(tuple(flat))
    raise IfaceError(f"unknown value node {v!r}")


def values_equal(a: Value, b: Value) -> bool:
    return canon_value(a) == canon_value(b)


def bundle_values(values: Iterable[Value]) -> Value:
    """Semicolon-bundle of the non-nil entries of a border."""
    return canon_value(VList(tuple(values)))


def _match_list(elems, items) -> bool:
    """Sequential list membership; star items absorb any run of repetitions.

    Canonical values flatten nested lists, so one repetition of a star whose
    element is itself a k-item list consumes k consecutive elements.
    """
    if not items:
        return not elems
    head, rest = items[0], items[1:]
    if isinstance(head, TStarList):
        if _match_list(elems, rest):
            return True
        elem_items = type_list_items(head.elem)
        for take in range(1, len(elems) + 1):
            if _match_list(elems[:take], elem_items) and _match_list(elems[take:], items):
                return True
        return False
    return bool(elems) and value_has_type(elems[0], head) and _match_list(elems[1:], rest)


def value_has_type(v: Value, t: Type) -> bool:
    """Structural membership; star types accept any repetition count >= 0."""
    v, t = canon_value(v), canon_type(t)
    if isinstance(t, TNil):
        return isinstance(v, VNil)
    if isinstance(t, TInt):
        return isinstance(v, VInt)
    if isinstance(t, TBool):
        return isinstance(v, VBool)
    if isinstance(t, TColor):
        return isinstance(v, VColor)
    if isinstance(t, TSet):
        return isinstance(v, VSet)
    if isinstance(t, TUnion):
        return any(value_has_type(v, a) for a in t.alts)
    if isinstance(t, TTuple):
        if len(t.fields) == 1:
            return value_has_type(v, t.fields[0][1])
        if not isinstance(v, VTup) or len(v.items) != len(t.fields):
            return False
        return all(value_has_type(x, ft) for x, (_, ft) in zip(v.items, t.fields))
    if isinstance(t, TList):
        if len(t.items) == 1:
            return value_has_type(v, t.items[0])
        if isinstance(v, VList):
            elems = list(v.items)
        elif isinstance(v, VNil):
            elems = []
        else:
            elems = [v]
        return _match_list(elems, list(t.items))
    if isinstance(t, TStarTuple):
        if isinstance(v, VNil):
            return True
        if isinstance(v, VTup):
            return all(value_has_type(x, t.elem) for x in v.items)
        return value_has_type(v, t.elem)
    if isinstance(t, TStarList):
        if isinstance(v, VNil):
            return True
        elems = list(v.items) if isinstance(v, VList) else [v]
        return _match_list(elems, [t])
    raise IfaceError(f"unknown type node {t!r}")


def default_value(t: Type) -> Value:
    """Default initialization: 0 / false / white / empty set / empty star."""
    t = canon_type(t)
    if isinstance(t, TNil):
        return VNIL
    if isinstance(t, TInt):
        return VInt(0)
    if isinstance(t, TBool):
        return VBool(False)
    if isinstance(t, TColor):
        return WHITE
    if isinstance(t, TSet):
        return VSet(frozenset())
    if isinstance(t, TTuple):
        return canon_value(VTup(tuple(default_value(ft) for _, ft in t.fields)))
    if isinstance(t, TList):
        return canon_value(VList(tuple(default_value(it) for it in t.items)))
    if isinstance(t, (TStarTuple, TStarList)):
        return VNIL
    if isinstance(t, TUnion):
        return default_value(t.alts[0])
    raise IfaceError(f"unknown type node {t!r}")


# ---------------------------------------------------------------------------
# Concrete syntax
# ---------------------------------------------------------------------------

_LEAVES = {
    "nil": NIL,
    "sn": TInt(SPATIAL),
    "sb": TBool(SPATIAL),
    "tn": TInt(TEMPORAL),
    "tb": TBool(TEMPORAL),
    "sInt": TInt(SPATIAL),
    "tInt": TInt(TEMPORAL),
    "sBool": TBool(SPATIAL),
    "tBool": TBool(TEMPORAL),
    "sColor": TColor(SPATIAL),
    "tColor": TColor(TEMPORAL),
    "sIntSet": TSet(SPATIAL),
    "tIntSet": TSet(TEMPORAL),
}

_LEAF_NAMES = {
    (TInt, SPATIAL): "sn",
    (TInt, TEMPORAL): "tn",
    (TBool, SPATIAL): "sb",
    (TBool, TEMPORAL): "tb",
    (TColor, SPATIAL): "sColor",
    (TColor, TEMPORAL): "tColor",
    (TSet, SPATIAL): "sIntSet",
    (TSet, TEMPORAL): "tIntSet",
}


class TypeSyntaxError(IfaceError):
    pass


def parse_type(text: str) -> Type:
    """Parse the concrete type syntax: leaves, (a,b), (a;b), (a)*, (a;)*, (a|b)."""
    toks = _lex_type(text)
    t, pos = _parse_list(toks, 0)
    if pos != len(toks):
        raise TypeSyntaxError(f"trailing tokens in type: {toks[pos:]}")
    return t


def _lex_type(text: str):
    toks, i = [], 0
    while i < len(text):
        ch = text[i]
        if ch.isspace():
            i += 1
        elif ch in "(),;|*:":
            toks.append(ch)
            i += 1
        elif ch.isalnum() or ch == "_" or ch == "~" or ch == "[" or ch == "]":
            j = i
            while j < len(text) and (text[j].isalnum() or text[j] in "_~[]"):
                j += 1
            toks.append(text[i:j])
            i = j
        else:
            raise TypeSyntaxError(f"bad character {ch!r} in type")
    return toks


def _parse_list(toks, pos):
    items, pos = [], pos
    t, pos = _parse_union(toks, pos)
    items.append(t)
    while pos < len(toks) and toks[pos] == ";":
        pos += 1
        if pos >= len(toks) or toks[pos] in (")", ";"):
            continue  # trailing semicolon
        t, pos = _parse_union(toks, pos)
        items.append(t)
    if len(items) == 1:
        return items[0], pos
    return TList(tuple(items)), pos


def _parse_union(toks, pos):
    t, pos = _parse_tuple(toks, pos)
    alts = [t]
    while pos < len(toks) and toks[pos] == "|":
        t, pos = _parse_tuple(toks, pos + 1)
        alts.append(t)
    if len(alts) == 1:
        return alts[0], pos
    return TUnion(tuple(alts)), pos


def _parse_tuple(toks, pos):
    fields = []
    name, t, pos = _parse_field(toks, pos)
    fields.append((name, t))
    while pos < len(toks) and toks[pos] == ",":
        name, t, pos = _parse_field(toks, pos + 1)
        fields.append((name, t))
    if len(fields) == 1 and fields[0][0] is None:
        return fields[0][1], pos
    return TTuple(tuple(fields)), pos


def _parse_field(toks, pos):
    # a ':' can only follow a field name, so the lookahead disambiguates
    # names that collide with leaf spellings (e.g. a variable called "tn")
    if pos + 1 < len(toks) and toks[pos + 1] == ":" and toks[pos] not in "(),;|*:":
        name = toks[pos]
        t, pos = _parse_atom(toks, pos + 2)
        return name, t, pos
    t, pos = _parse_atom(toks, pos)
    return None, t, pos


def _parse_atom(toks, pos):
    if pos >= len(toks):
        raise TypeSyntaxError("unexpected end of type")
    tok = toks[pos]
    if tok == "(":
        inner, pos = _parse_list(toks, pos + 1)
        semi_star = pos > 0 and toks[pos - 1] == ";"
        if pos >= len(toks) or toks[pos] != ")":
            raise TypeSyntaxError("missing ')' in type")
        pos += 1
        if pos < len(toks) and toks[pos] == "*":
            pos += 1
            if semi_star:
                return TStarList(inner), pos
            return TStarTuple(inner), pos
        return inner, pos
    if tok in _LEAVES:
        return _LEAVES[tok], pos + 1
    raise TypeSyntaxError(f"unknown type token {tok!r}")


def type_to_str(t: Type) -> str:
    t = canon_type(t)
    return _tts(t)


def _tts(t: Type) -> str:
    if isinstance(t, TNil):
        return "nil"
    if isinstance(t, (TInt, TBool, TColor, TSet)):
        return _LEAF_NAMES[(type(t), t.kind())]
    if isinstance(t, TTuple):
        parts = [f"{n}:{_tts(ft)}" if n else _tts(ft) for n, ft in t.fields]
        return "(" + ", ".join(parts) + ")"
    if isinstance(t, TList):
        return "(" + "; ".join(_tts(x) for x in t.items) + ")"
    if isinstance(t, TStarTuple):
        return "(" + _tts(t.elem) + ")*"
    if isinstance(t, TStarList):
        return "(" + _tts(t.elem) + ";)*"
    if isinstance(t, TUnion):
        return "(" + " | ".join(_tts(a) for a in t.alts) + ")"
    raise IfaceError(f"unknown type node {t!r}")


# ---------------------------------------------------------------------------
# JSON encoding (tag + children)
# ---------------------------------------------------------------------------


def type_to_json(t: Type):
    if isinstance(t, TNil):
        return {"t": "nil"}
    if isinstance(t, (TInt, TBool, TColor, TSet)):
        tag = {TInt: "int", TBool: "bool", TColor: "color", TSet: "set"}[type(t)]
        return {"t": tag, "kind": t.kind()}
    if isinstance(t, TTuple):
        return {"t": "tuple", "fields": [[n, type_to_json(ft)] for n, ft in t.fields]}
    if isinstance(t, TList):
        return {"t": "list", "items": [type_to_json(x) for x in t.items]}
    if isinstance(t, TStarTuple):
        return {"t": "star_tuple", "elem": type_to_json(t.elem)}
    if isinstance(t, TStarList):
        return {"t": "star_list", "elem": type_to_json(t.elem)}
    if isinstance(t, TUnion):
        return {"t": "union", "alts": [type_to_json(a) for a in t.alts]}
    raise IfaceError(f"unknown type node {t!r}")


def value_to_json(v: Value):
    if isinstance(v, VNil):
        return {"v": "nil"}
    if isinstance(v, VInt):
        return {"v": "int", "value": v.v}
    if isinstance(v, VBool):
        return {"v": "bool", "value": v.v}
    if isinstance(v, VColor):
        return {"v": "color", "value": v.v}
    if isinstance(v, VSet):
        return {"v": "set", "value": sorted(v.v)}
    if isinstance(v, VTup):
        return {"v": "tuple", "items": [value_to_json(x) for x in v.items]}
    if isinstance(v, VList):
        return {"v": "list", "items": [value_to_json(x) for x in v.items]}
    raise IfaceError(f"unknown value node {v!r}")


def value_from_json(obj) -> Value:
    tag = obj["v"]
    if tag == "nil":
        return VNIL
    if tag == "int":
        return VInt(obj["value"])
    if tag == "bool":
        return VBool(obj["value"])
    if tag == "color":
        return VColor(obj["value"])
    if tag == "set":
        return VSet(frozenset(obj["value"]))
    if tag == "tuple":
        return VTup(tuple(value_from_json(x) for x in obj["items"]))
    if tag == "list":
        return VList(tuple(value_from_json(x) for x in obj["items"]))
    raise IfaceError(f"bad value json tag {tag!r}")


def value_to_str(v: Value) -> str:
    v = canon_value(v)
    if isinstance(v, VNil):
        return "nil"
    if isinstance(v, VInt):
        return str(v.v)
    if isinstance(v, VBool):
        return "true" if v.v else "false"
    if isinstance(v, VColor):
        return v.v
    if isinstance(v, VSet):
        return "{" + ",".join(str(x) for x in sorted(v.v)) + "}"
    if isinstance(v, VTup):
        return "(" + ", ".join(value_to_str(x) for x in v.items) + ")"
    if isinstance(v, VList):
        return "(" + "; ".join(value_to_str(x) for x in v.items) + ")"
    raise IfaceError(f"unknown value node {v!r}")
