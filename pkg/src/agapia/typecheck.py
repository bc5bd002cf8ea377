"""Four-border type inference and composition legality.

Modules are typed from their interface declarations; composite programs
follow the border rules: horizontal composition connects east to west and
concatenates north/south, vertical composition is the dual, diagonal
composition connects both axes, ``if`` takes unions, and the three whiles
star or union their borders.  "Match" means the two border types have a
nonempty intersection; values crossing a connection are later checked
against that intersection.

Undeclared interface variables resolve through a small signature table
mirroring the case-study declarations: ``c``/``col`` are colors,
``active``/``b``/``flag`` booleans, ``x[~]`` an integer-set array,
``x(f,...)`` a record, everything else an integer.  An explicit ``x:T``
annotation always wins.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Set, Tuple

from . import ast as A
from .iface import (
    NIL,
    SPATIAL,
    TEMPORAL,
    TBool,
    TColor,
    TInt,
    TList,
    TSet,
    TStarList,
    TStarTuple,
    TTuple,
    Type,
    canon_type,
    type_from_items,
    type_list_items,
    type_match,
    type_to_str,
    union_type,
)

_BOOL_NAMES = {"active", "b", "flag"}
_COLOR_NAMES = {"c", "col", "color"}


class TypeCheckError(Exception):
    def __init__(self, message, span=None):
        self.message = message
        self.span = span
        at = f" at {span}" if span else ""
        super().__init__(f"{message}{at}")


class MatchFailure(TypeCheckError):
    def __init__(self, axis, got, expected, span=None):
        self.axis = axis
        super().__init__(
            f"{axis} borders do not match: {type_to_str(got)} vs {type_to_str(expected)}", span
        )


class ConditionScopeError(TypeCheckError):
    def __init__(self, offenders, allowed, span=None):
        self.offenders = sorted(offenders)
        super().__init__(
            f"condition mentions {', '.join(sorted(offenders))} outside the shared interface "
            f"{{{', '.join(sorted(allowed))}}}",
            span,
        )


@dataclass(frozen=True)
class ProgramType:
    w: Type = NIL
    n: Type = NIL
    e: Type = NIL
    s: Type = NIL

    def __str__(self):
        return (
            f"<{type_to_str(self.w)} | {type_to_str(self.n)} | "
            f"{type_to_str(self.e)} | {type_to_str(self.s)}>"
        )


def field_leaf(name: str, kind: str) -> Type:
    if name in _COLOR_NAMES:
        return TColor(kind)
    if name in _BOOL_NAMES:
        return TBool(kind)
    return TInt(kind)


def decl_type(d: A.Decl, kind: str) -> Type:
    if d.ann is not None:
        ann = canon_type(d.ann)
        k = ann.kind()
        if k is not None and k != kind:
            raise TypeCheckError(
                f"{d.name} is declared on a {'spatial' if kind == SPATIAL else 'temporal'} "
                f"border but annotated with a {'spatial' if k == SPATIAL else 'temporal'} type",
                d.span,
            )
        return ann
    if d.form == "array":
        return TStarTuple(TSet(kind))
    if d.form == "record":
        return TTuple(tuple((f, field_leaf(f, kind)) for f in d.fields))
    return field_leaf(d.name, kind)


def decls_tuple_type(decls: Tuple[A.Decl, ...], kind: str) -> Type:
    if not decls:
        return NIL
    return TTuple(tuple((d.name, decl_type(d, kind)) for d in decls))


def module_type(m: A.Module) -> ProgramType:
    return ProgramType(
        w=decls_tuple_type(m.listen, TEMPORAL),
        n=decls_tuple_type(m.read, SPATIAL),
        e=decls_tuple_type(m.speak, TEMPORAL),
        s=decls_tuple_type(m.write, SPATIAL),
    )


# ---------------------------------------------------------------------------
# Variable collections
# ---------------------------------------------------------------------------


def expr_vars(e: A.Expr) -> Set[str]:
    if isinstance(e, (A.EInt, A.EBool, A.EColor, A.ENull, A.ERandBool)):
        return set()
    if isinstance(e, A.EVar):
        return {e.name}
    if isinstance(e, A.EField):
        return expr_vars(e.base)
    if isinstance(e, A.EIndex):
        return expr_vars(e.base) | expr_vars(e.index)
    if isinstance(e, A.EBin):
        return expr_vars(e.left) | expr_vars(e.right)
    if isinstance(e, A.ENot):
        return expr_vars(e.expr)
    if isinstance(e, A.EMod):
        return expr_vars(e.expr) | expr_vars(e.modulus)
    if isinstance(e, A.ERandInt):
        return expr_vars(e.bound)
    if isinstance(e, A.ESetLit):
        out = set()
        for x in e.items:
            out |= expr_vars(x)
        return out
    raise TypeCheckError(f"unknown expression {e!r}")


def type_var_names(t: Type) -> Set[str]:
    """Names of the interface variables visible in a border type."""
    t = canon_type(t)
    if isinstance(t, TTuple):
        out = set()
        for name, ft in t.fields:
            if name is not None:
                out.add(name)
            else:
                out |= type_var_names(ft)
        return out
    if isinstance(t, TList):
        out = set()
        for x in t.items:
            out |= type_var_names(x)
        return out
    if isinstance(t, (TStarList, TStarTuple)):
        return type_var_names(t.elem)
    if hasattr(t, "alts"):
        out = set()
        for x in t.alts:
            out |= type_var_names(x)
        return out
    return set()


def check_condition_scope(cond: A.Expr, allowed: Set[str], span=None) -> None:
    offenders = expr_vars(cond) - set(allowed)
    if offenders:
        raise ConditionScopeError(offenders, allowed, span)


def _shared_names(t: Type, u: Type) -> Set[str]:
    return type_var_names(t) & type_var_names(u)


# ---------------------------------------------------------------------------
# Module well-formedness
# ---------------------------------------------------------------------------


def _stmt_assigned(stmts) -> Set[str]:
    out = set()
    for s in stmts:
        if isinstance(s, A.WAssign):
            out.add(s.target.name)
        elif isinstance(s, A.WNew):
            out.add(s.name)
        elif isinstance(s, A.WIf):
            out |= _stmt_assigned(s.then) | _stmt_assigned(s.els)
        elif isinstance(s, A.WWhile):
            out |= _stmt_assigned(s.body)
        elif isinstance(s, A.WFor):
            out.add(s.var)
            out |= _stmt_assigned(s.body)
    return out


def check_module(m: A.Module) -> ProgramType:
    for group in (m.listen, m.read, m.speak, m.write):
        names = [d.name for d in group]
        if len(names) != len(set(names)):
            raise TypeCheckError("duplicate interface variable in module", m.span)
    in_names = {d.name for d in m.listen} | {d.name for d in m.read}
    assigned = _stmt_assigned(m.body)
    for d in tuple(m.speak) + tuple(m.write):
        if d.name not in in_names and d.name not in assigned:
            # never assigned: the variable is emitted with its default value
            pass
    return module_type(m)


# ---------------------------------------------------------------------------
# Inference
# ---------------------------------------------------------------------------


def infer_type(p: A.Program) -> ProgramType:
    """Infer the four-border type of a macro-expanded, resolved program."""
    if isinstance(p, A.PNil):
        return ProgramType()
    if isinstance(p, A.PRef):
        raise TypeCheckError(f"unresolved program reference {p.name}", p.span)
    if isinstance(p, A.PForS):
        raise TypeCheckError("for_s must be macro-expanded before type inference", p.span)
    if isinstance(p, A.PModule):
        return check_module(p.module)
    if isinstance(p, A.PHComp):
        t1, t2 = infer_type(p.left), infer_type(p.right)
        if type_match(t1.e, t2.w) is None:
            raise MatchFailure("east/west", t1.e, t2.w, p.span)
        return ProgramType(
            w=t1.w,
            n=type_from_items(type_list_items(t1.n) + type_list_items(t2.n)),
            e=t2.e,
            s=type_from_items(type_list_items(t1.s) + type_list_items(t2.s)),
        )
    if isinstance(p, A.PVComp):
        t1, t2 = infer_type(p.left), infer_type(p.right)
        if type_match(t1.s, t2.n) is None:
            raise MatchFailure("south/north", t1.s, t2.n, p.span)
        return ProgramType(
            w=type_from_items(type_list_items(t1.w) + type_list_items(t2.w)),
            n=t1.n,
            e=type_from_items(type_list_items(t1.e) + type_list_items(t2.e)),
            s=t2.s,
        )
    if isinstance(p, A.PDComp):
        t1, t2 = infer_type(p.left), infer_type(p.right)
        if type_match(t1.e, t2.w) is None:
            raise MatchFailure("east/west", t1.e, t2.w, p.span)
        if type_match(t1.s, t2.n) is None:
            raise MatchFailure("south/north", t1.s, t2.n, p.span)
        return ProgramType(w=t1.w, n=t1.n, e=t2.e, s=t2.s)
    if isinstance(p, A.PIf):
        t1, t2 = infer_type(p.then), infer_type(p.els)
        allowed = _shared_names(t1.w, t2.w) | _shared_names(t1.n, t2.n)
        check_condition_scope(p.cond, allowed, p.span)
        return ProgramType(
            w=union_type(t1.w, t2.w),
            n=union_type(t1.n, t2.n),
            e=union_type(t1.e, t2.e),
            s=union_type(t1.s, t2.s),
        )
    if isinstance(p, A.PWhileT):
        t = infer_type(p.body)
        if type_match(t.n, t.s) is None:
            raise MatchFailure("north/south", t.n, t.s, p.span)
        check_condition_scope(p.cond, _shared_names(t.n, t.s), p.span)
        ns = union_type(t.n, t.s)
        return ProgramType(w=canon_type(TStarList(t.w)), n=ns, e=canon_type(TStarList(t.e)), s=ns)
    if isinstance(p, A.PWhileS):
        t = infer_type(p.body)
        if type_match(t.w, t.e) is None:
            raise MatchFailure("west/east", t.w, t.e, p.span)
        check_condition_scope(p.cond, _shared_names(t.w, t.e), p.span)
        we = union_type(t.w, t.e)
        return ProgramType(w=we, n=canon_type(TStarList(t.n)), e=we, s=canon_type(TStarList(t.s)))
    if isinstance(p, A.PWhileST):
        t = infer_type(p.body)
        if type_match(t.w, t.e) is None:
            raise MatchFailure("west/east", t.w, t.e, p.span)
        if type_match(t.n, t.s) is None:
            raise MatchFailure("north/south", t.n, t.s, p.span)
        allowed = _shared_names(t.w, t.e) | _shared_names(t.n, t.s)
        check_condition_scope(p.cond, allowed, p.span)
        return ProgramType(
            w=union_type(t.w, t.e),
            n=union_type(t.n, t.s),
            e=union_type(t.w, t.e),
            s=union_type(t.n, t.s),
        )
    raise TypeCheckError(f"unknown program node {p!r}")
