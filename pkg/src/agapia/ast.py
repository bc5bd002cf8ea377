"""AST for AGAPIA v0.1 programs.

Nodes are frozen dataclasses; source spans are attached but excluded from
structural equality, so parse(pretty(p)) == p holds modulo spans.

Composition operators use the concrete spellings ``#`` (vertical), ``##``
(horizontal) and ``####`` (diagonal); all three share one precedence level
and associate to the left.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Tuple

from .iface import Type


@dataclass(frozen=True)
class Span:
    line: int = 0
    col: int = 0
    end_line: int = 0
    end_col: int = 0
    file: str = "<input>"

    def __str__(self):
        return f"{self.file}:{self.line}:{self.col}"


def _span_field():
    return field(default=None, compare=False, repr=False)


# ---------------------------------------------------------------------------
# Expressions
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Expr:
    pass


@dataclass(frozen=True)
class EInt(Expr):
    v: int
    span: Optional[Span] = _span_field()


@dataclass(frozen=True)
class EBool(Expr):
    v: bool
    span: Optional[Span] = _span_field()


@dataclass(frozen=True)
class EColor(Expr):
    name: str  # "white" | "black"
    span: Optional[Span] = _span_field()


@dataclass(frozen=True)
class ENull(Expr):
    """Empty-set literal ``null``."""

    span: Optional[Span] = _span_field()


@dataclass(frozen=True)
class ESetLit(Expr):
    items: Tuple[Expr, ...]
    span: Optional[Span] = _span_field()


@dataclass(frozen=True)
class EVar(Expr):
    name: str
    span: Optional[Span] = _span_field()


@dataclass(frozen=True)
class EField(Expr):
    base: Expr
    name: str
    span: Optional[Span] = _span_field()


@dataclass(frozen=True)
class EIndex(Expr):
    base: Expr
    index: Expr
    span: Optional[Span] = _span_field()


@dataclass(frozen=True)
class EBin(Expr):
    """Binary op: + - * / < == != && || union contains."""

    op: str
    left: Expr
    right: Expr
    span: Optional[Span] = _span_field()


@dataclass(frozen=True)
class ENot(Expr):
    expr: Expr
    span: Optional[Span] = _span_field()


@dataclass(frozen=True)
class EMod(Expr):
    """Postfix wraparound: ``E [mod E]``."""

    expr: Expr
    modulus: Expr
    span: Optional[Span] = _span_field()


@dataclass(frozen=True)
class ERandInt(Expr):
    """random(k): uniform draw from [0, k]."""

    bound: Expr
    span: Optional[Span] = _span_field()


@dataclass(frozen=True)
class ERandBool(Expr):
    """random(true,false)."""

    span: Optional[Span] = _span_field()


# ---------------------------------------------------------------------------
# Module code (W statements)
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class WStmt:
    pass


@dataclass(frozen=True)
class WNil(WStmt):
    span: Optional[Span] = _span_field()


@dataclass(frozen=True)
class WNew(WStmt):
    name: str
    ann: Optional[Type] = None
    span: Optional[Span] = _span_field()


@dataclass(frozen=True)
class LValue:
    pass


@dataclass(frozen=True)
class LVar(LValue):
    name: str
    span: Optional[Span] = _span_field()


@dataclass(frozen=True)
class LField(LValue):
    name: str
    fieldname: str
    span: Optional[Span] = _span_field()


@dataclass(frozen=True)
class LIndex(LValue):
    name: str
    index: Expr = None
    span: Optional[Span] = _span_field()


@dataclass(frozen=True)
class WAssign(WStmt):
    target: LValue
    expr: Expr
    span: Optional[Span] = _span_field()


@dataclass(frozen=True)
class WIf(WStmt):
    cond: Expr
    then: Tuple[WStmt, ...]
    els: Tuple[WStmt, ...] = ()
    span: Optional[Span] = _span_field()


@dataclass(frozen=True)
class WWhile(WStmt):
    cond: Expr
    body: Tuple[WStmt, ...]
    span: Optional[Span] = _span_field()


@dataclass(frozen=True)
class WFor(WStmt):
    """C-style counting loop ``for(x=E; B; x++){W}``."""

    var: str
    init: Expr
    cond: Expr
    body: Tuple[WStmt, ...]
    span: Optional[Span] = _span_field()


@dataclass(frozen=True)
class WDelay(WStmt):
    """delay(e): semantic no-op; the argument is never evaluated."""

    expr: Expr
    span: Optional[Span] = _span_field()


# ---------------------------------------------------------------------------
# Modules and programs
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Decl:
    """One interface variable: ``x``, ``x:T``, ``msg[~]`` or ``token(col,pos)``."""

    name: str
    form: str = "plain"  # plain | array | record
    fields: Tuple[str, ...] = ()
    ann: Optional[Type] = None
    span: Optional[Span] = _span_field()


@dataclass(frozen=True)
class Program:
    pass


@dataclass(frozen=True)
class Module:
    listen: Tuple[Decl, ...]
    read: Tuple[Decl, ...]
    body: Tuple[WStmt, ...]
    speak: Tuple[Decl, ...]
    write: Tuple[Decl, ...]
    name: Optional[str] = field(default=None, compare=False)
    span: Optional[Span] = _span_field()


@dataclass(frozen=True)
class PNil(Program):
    span: Optional[Span] = _span_field()


@dataclass(frozen=True)
class PModule(Program):
    module: Module
    span: Optional[Span] = _span_field()


@dataclass(frozen=True)
class PRef(Program):
    name: str
    span: Optional[Span] = _span_field()


@dataclass(frozen=True)
class PIf(Program):
    cond: Expr
    then: Program
    els: Program
    span: Optional[Span] = _span_field()


@dataclass(frozen=True)
class PVComp(Program):
    left: Program
    right: Program
    span: Optional[Span] = _span_field()


@dataclass(frozen=True)
class PHComp(Program):
    left: Program
    right: Program
    span: Optional[Span] = _span_field()


@dataclass(frozen=True)
class PDComp(Program):
    left: Program
    right: Program
    span: Optional[Span] = _span_field()


@dataclass(frozen=True)
class PWhileT(Program):
    cond: Expr
    body: Program
    span: Optional[Span] = _span_field()


@dataclass(frozen=True)
class PWhileS(Program):
    cond: Expr
    body: Program
    span: Optional[Span] = _span_field()


@dataclass(frozen=True)
class PWhileST(Program):
    cond: Expr
    body: Program
    span: Optional[Span] = _span_field()


@dataclass(frozen=True)
class PForS(Program):
    """Spatial for macro: ``for_s(i=a; i<b; i++){P}``."""

    var: str
    init: Expr
    bound: Expr
    body: Program
    span: Optional[Span] = _span_field()


@dataclass(frozen=True)
class SourceFile:
    """Either a bare program or a sequence of ``NAME = program`` definitions."""

    defs: Tuple[Tuple[str, Program], ...] = ()
    program: Optional[Program] = None
    span: Optional[Span] = _span_field()

    def entry(self) -> Program:
        if self.program is not None:
            return self.program
        if not self.defs:
            raise ValueError("empty source file")
        return self.defs[0][1]


class ResolutionError(Exception):
    pass


def resolve(p: Program, env: dict, _stack=()) -> Program:
    """Inline PRef nodes using the definition environment."""
    if isinstance(p, PRef):
        if p.name in _stack:
            raise ResolutionError(f"recursive definition of {p.name}")
        if p.name not in env:
            raise ResolutionError(f"undefined program name {p.name}")
        target = resolve(env[p.name], env, _stack + (p.name,))
        if isinstance(target, PModule) and target.module.name is None:
            named = Module(
                target.module.listen,
                target.module.read,
                target.module.body,
                target.module.speak,
                target.module.write,
                name=p.name,
            )
            return PModule(named)
        return target
    if isinstance(p, (PNil, PModule)):
        return p
    if isinstance(p, PIf):
        return PIf(p.cond, resolve(p.then, env, _stack), resolve(p.els, env, _stack))
    if isinstance(p, (PVComp, PHComp, PDComp)):
        return type(p)(resolve(p.left, env, _stack), resolve(p.right, env, _stack))
    if isinstance(p, (PWhileT, PWhileS, PWhileST)):
        return type(p)(p.cond, resolve(p.body, env, _stack))
    if isinstance(p, PForS):
        return PForS(p.var, p.init, p.bound, resolve(p.body, env, _stack))
    raise ResolutionError(f"unknown program node {p!r}")


def resolve_file(f: SourceFile, entry: Optional[str] = None) -> Program:
    env = dict(f.defs)
    if entry is not None:
        if entry not in env:
            raise ResolutionError(f"no definition named {entry}")
        root: Program = PRef(entry)
    elif f.program is not None:
        root = f.program
    elif f.defs:
        root = PRef(f.defs[0][0])
    else:
        raise ResolutionError("empty source file")
    return resolve(root, env)
