"""for_s macro expansion.

``for_s(i=a; i<b; i++){R}`` rewrites to ``i=a ## while_s(i<b){R ## i++}``
where the counter modules have empty spatial interfaces and temporal
interfaces equal to R's (which must include ``i``).
"""

from __future__ import annotations

from . import ast as A
from .iface import TTuple, Type, canon_type
from .typecheck import infer_type


class MacroError(Exception):
    def __init__(self, message, span=None):
        self.span = span
        super().__init__(message)


def _decls_from_type(t: Type, span=None):
    t = canon_type(t)
    if not isinstance(t, TTuple) or any(n is None for n, _ in t.fields):
        raise MacroError(
            "for_s body must have a named temporal interface to synthesize counter modules", span
        )
    return tuple(A.Decl(name, ann=ft) for name, ft in t.fields)


def _counter_module(decls, body_stmt, name):
    return A.Module(listen=decls, read=(), body=(body_stmt,), speak=decls, write=(), name=name)


def expand_for_s(p: A.Program) -> A.Program:
    """Rewrite every for_s node, innermost first; identity on macro-free trees."""
    if isinstance(p, (A.PNil, A.PModule, A.PRef)):
        return p
    if isinstance(p, A.PIf):
        return A.PIf(p.cond, expand_for_s(p.then), expand_for_s(p.els), span=p.span)
    if isinstance(p, (A.PVComp, A.PHComp, A.PDComp)):
        return type(p)(expand_for_s(p.left), expand_for_s(p.right), span=p.span)
    if isinstance(p, (A.PWhileT, A.PWhileS, A.PWhileST)):
        return type(p)(p.cond, expand_for_s(p.body), span=p.span)
    if isinstance(p, A.PForS):
        body = expand_for_s(p.body)
        bt = infer_type(body)
        w_decls = _decls_from_type(bt.w, p.span)
        e_decls = _decls_from_type(bt.e, p.span)
        if p.var not in {d.name for d in w_decls} or p.var not in {d.name for d in e_decls}:
            raise MacroError(
                f"for_s counter {p.var!r} is not part of the body's temporal interface", p.span
            )
        init_mod = _counter_module(
            w_decls, A.WAssign(A.LVar(p.var), p.init), name=f"{p.var}.init"
        )
        inc_mod = _counter_module(
            e_decls,
            A.WAssign(A.LVar(p.var), A.EBin("+", A.EVar(p.var), A.EInt(1))),
            name=f"{p.var}.inc",
        )
        guard = A.EBin("<", A.EVar(p.var), p.bound)
        return A.PHComp(
            A.PModule(init_mod),
            A.PWhileS(guard, A.PHComp(body, A.PModule(inc_mod))),
            span=p.span,
        )
    raise MacroError(f"unknown program node {p!r}")


def has_for_s(p: A.Program) -> bool:
    if isinstance(p, A.PForS):
        return True
    if isinstance(p, A.PIf):
        return has_for_s(p.then) or has_for_s(p.els)
    if isinstance(p, (A.PVComp, A.PHComp, A.PDComp)):
        return has_for_s(p.left) or has_for_s(p.right)
    if isinstance(p, (A.PWhileT, A.PWhileS, A.PWhileST)):
        return has_for_s(p.body)
    return False
