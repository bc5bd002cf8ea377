"""Deterministic pretty-printer; parse(pretty(p)) == p modulo spans."""

from __future__ import annotations

from . import ast as A
from .iface import type_to_str

# precedence levels for expression printing
_LEVEL = {"||": 0, "&&": 1, "<": 2, "==": 2, "!=": 2, "contains": 2, "+": 4, "-": 4, "union": 4, "*": 5, "/": 5}
_MOD_LEVEL = 3
_UNARY_LEVEL = 6
_ATOM_LEVEL = 7


def expr_to_str(e: A.Expr, min_level: int = 0) -> str:
    text, level = _expr(e)
    if level < min_level:
        return f"({text})"
    return text


def _expr(e: A.Expr):
    if isinstance(e, A.EInt):
        return str(e.v), _ATOM_LEVEL
    if isinstance(e, A.EBool):
        return ("true" if e.v else "false"), _ATOM_LEVEL
    if isinstance(e, A.EColor):
        return e.name, _ATOM_LEVEL
    if isinstance(e, A.ENull):
        return "null", _ATOM_LEVEL
    if isinstance(e, A.ESetLit):
        return "{" + ", ".join(expr_to_str(x) for x in e.items) + "}", _ATOM_LEVEL
    if isinstance(e, A.EVar):
        return e.name, _ATOM_LEVEL
    if isinstance(e, A.EField):
        return expr_to_str(e.base, _ATOM_LEVEL) + "." + e.name, _ATOM_LEVEL
    if isinstance(e, A.EIndex):
        return expr_to_str(e.base, _ATOM_LEVEL) + "[" + expr_to_str(e.index) + "]", _ATOM_LEVEL
    if isinstance(e, A.ERandInt):
        return "random(" + expr_to_str(e.bound) + ")", _ATOM_LEVEL
    if isinstance(e, A.ERandBool):
        return "random(true, false)", _ATOM_LEVEL
    if isinstance(e, A.ENot):
        return "!" + expr_to_str(e.expr, _UNARY_LEVEL), _UNARY_LEVEL
    if isinstance(e, A.EMod):
        body = expr_to_str(e.expr, _MOD_LEVEL + 1)
        return body + "[mod " + expr_to_str(e.modulus, _MOD_LEVEL + 1) + "]", _MOD_LEVEL
    if isinstance(e, A.EBin):
        lvl = _LEVEL[e.op]
        left = expr_to_str(e.left, lvl)
        right = expr_to_str(e.right, lvl + 1)  # left-associative
        return f"{left} {e.op} {right}", lvl
    raise TypeError(f"unknown expression {e!r}")


def _decl_to_str(d: A.Decl) -> str:
    if d.form == "array":
        return f"{d.name}[~]"
    if d.form == "record":
        return f"{d.name}({','.join(d.fields)})"
    if d.ann is not None:
        return f"{d.name}:{type_to_str(d.ann)}"
    return d.name


def _decls_to_str(decls) -> str:
    if not decls:
        return "nil"
    return ", ".join(_decl_to_str(d) for d in decls)


def _stmts(stmts, indent: int) -> str:
    pad = "  " * indent
    out = []
    for s in stmts:
        out.append(pad + stmt_to_str(s, indent))
    return "\n".join(out)


def stmt_to_str(s: A.WStmt, indent: int = 0) -> str:
    pad = "  " * indent
    if isinstance(s, A.WNil):
        return "nil;"
    if isinstance(s, A.WNew):
        ann = f" : {type_to_str(s.ann)}" if s.ann is not None else ""
        return f"new {s.name}{ann};"
    if isinstance(s, A.WDelay):
        return f"delay({expr_to_str(s.expr)});"
    if isinstance(s, A.WAssign):
        return f"{_lvalue(s.target)} = {expr_to_str(s.expr)};"
    if isinstance(s, A.WIf):
        head = f"if ({expr_to_str(s.cond)}) {{\n{_stmts(s.then, indent + 1)}\n{pad}}}"
        if s.els:
            head += f" else {{\n{_stmts(s.els, indent + 1)}\n{pad}}}"
        return head
    if isinstance(s, A.WWhile):
        return f"while ({expr_to_str(s.cond)}) {{\n{_stmts(s.body, indent + 1)}\n{pad}}}"
    if isinstance(s, A.WFor):
        head = f"for ({s.var} = {expr_to_str(s.init)}; {expr_to_str(s.cond)}; {s.var}++)"
        return f"{head} {{\n{_stmts(s.body, indent + 1)}\n{pad}}}"
    raise TypeError(f"unknown statement {s!r}")


def _lvalue(lv: A.LValue) -> str:
    if isinstance(lv, A.LVar):
        return lv.name
    if isinstance(lv, A.LField):
        return f"{lv.name}.{lv.fieldname}"
    if isinstance(lv, A.LIndex):
        return f"{lv.name}[{expr_to_str(lv.index)}]"
    raise TypeError(f"unknown lvalue {lv!r}")


def module_to_str(m: A.Module, indent: int = 0) -> str:
    pad = "  " * indent
    body = _stmts(m.body, indent + 1)
    return (
        f"module{{listen {_decls_to_str(m.listen)}}}{{read {_decls_to_str(m.read)}}}{{\n"
        f"{body}\n"
        f"{pad}}}{{speak {_decls_to_str(m.speak)}}}{{write {_decls_to_str(m.write)}}}"
    )


_COMP_OPS = {A.PVComp: "#", A.PHComp: "##", A.PDComp: "####"}


def program_to_str(p: A.Program, indent: int = 0) -> str:
    pad = "  " * indent
    if isinstance(p, A.PNil):
        return "nil"
    if isinstance(p, A.PRef):
        return p.name
    if isinstance(p, A.PModule):
        return module_to_str(p.module, indent)
    if isinstance(p, (A.PVComp, A.PHComp, A.PDComp)):
        op = _COMP_OPS[type(p)]
        left = program_to_str(p.left, indent)
        if isinstance(p.left, (A.PVComp, A.PHComp, A.PDComp)) and _COMP_OPS[type(p.left)] != op:
            left = f"({left})"
        right = program_to_str(p.right, indent)
        if isinstance(p.right, (A.PVComp, A.PHComp, A.PDComp)):
            right = f"({right})"
        return f"{left} {op} {right}"
    if isinstance(p, A.PIf):
        return (
            f"if ({expr_to_str(p.cond)}) {{\n{pad}  {program_to_str(p.then, indent + 1)}\n"
            f"{pad}}} else {{\n{pad}  {program_to_str(p.els, indent + 1)}\n{pad}}}"
        )
    for klass, kw in ((A.PWhileT, "while_t"), (A.PWhileS, "while_s"), (A.PWhileST, "while_st")):
        if isinstance(p, klass):
            return f"{kw} ({expr_to_str(p.cond)}) {{\n{pad}  {program_to_str(p.body, indent + 1)}\n{pad}}}"
    if isinstance(p, A.PForS):
        head = f"for_s ({p.var} = {expr_to_str(p.init)}; {p.var} < {expr_to_str(p.bound)}; {p.var}++)"
        return f"{head} {{\n{pad}  {program_to_str(p.body, indent + 1)}\n{pad}}}"
    raise TypeError(f"unknown program node {p!r}")


def pretty(p) -> str:
    """Render a Program or SourceFile back to concrete syntax."""
    if isinstance(p, A.SourceFile):
        if p.program is not None:
            return program_to_str(p.program) + "\n"
        chunks = [f"{name} = {program_to_str(prog)}" for name, prog in p.defs]
        return "\n\n".join(chunks) + "\n"
    return program_to_str(p) + "\n"
