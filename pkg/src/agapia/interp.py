"""Scenario-producing operational semantics.

``run`` evaluates a macro-expanded program on concrete border inputs and
emits its running scenario: modules become single cells, compositions
delegate to hcomp/vcomp/dcomp with runtime border checks, ``if`` runs the
chosen branch, and the three whiles emit either an identity or a
vertical/horizontal/diagonal chain whose every entry border satisfies the
guard and whose exit border violates it.

Randomness comes from a splitmix64 stream derived from the run seed and the
logical coordinate of the module occurrence (its tree path including loop
indices), so outcomes cannot depend on evaluation order.  ``random(k)``
draws uniformly from [0, k] by rejection; ``delay(e)`` never evaluates its
argument.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Callable, List, Optional, Sequence

from . import ast as A
from .iface import (
    INT_MAX,
    INT_MIN,
    SPATIAL,
    TEMPORAL,
    TTuple,
    TStarList,
    TStarTuple,
    Type,
    VBool,
    VColor,
    VInt,
    VList,
    VNIL,
    VSet,
    VTup,
    Value,
    bundle_values,
    canon_type,
    canon_value,
    default_value,
    is_nil_value,
    type_list_items,
    type_match,
    value_has_type,
    value_to_str,
    type_to_str,
)
from .scenario import Cell, LABEL_ID, Scenario, dcomp, dcomp_chain, hcomp, vcomp
from .typecheck import ProgramType, decl_type, decls_tuple_type, infer_type

MASK64 = (1 << 64) - 1


class AgapiaRuntimeError(Exception):
    def __init__(self, message, span=None, kind="runtime"):
        self.span = span
        self.kind = kind
        at = f" at {span}" if span else ""
        super().__init__(f"{message}{at}")


class LoopBoundExceeded(AgapiaRuntimeError):
    def __init__(self, loop_kind, bound, span=None):
        self.loop_kind = loop_kind
        self.bound = bound
        super().__init__(f"{loop_kind} exceeded {bound} iterations", span, kind="loop-bound")


# ---------------------------------------------------------------------------
# Randomness
# ---------------------------------------------------------------------------


def _mix64(z: int) -> int:
    z &= MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
    return z ^ (z >> 31)


def _fnv1a(text: str) -> int:
    h = 0xCBF29CE484222325
    for b in text.encode():
        h = ((h ^ b) * 0x100000001B3) & MASK64
    return h


class Stream:
    """splitmix64 stream."""

    def __init__(self, state: int):
        self.state = state & MASK64

    def next_u64(self) -> int:
        self.state = (self.state + 0x9E3779B97F4A7C15) & MASK64
        return _mix64(self.state)

    def draw_int(self, k: int) -> int:
        n = k + 1
        limit = (1 << 64) - ((1 << 64) % n)
        while True:
            u = self.next_u64()
            if u < limit:
                return u % n

    def draw_bool(self) -> bool:
        return bool(self.next_u64() & 1)


def stream_for(seed: int, path: str) -> Stream:
    return Stream(_mix64(seed & MASK64) ^ _fnv1a(path))


class ScriptedSource:
    """Replays a decision trail; used to enumerate all random branches."""

    def __init__(self, trail: Sequence[int] = ()):
        self.trail = list(trail)
        self.pos = 0
        self.options: List[int] = []

    def _choose(self, n: int) -> int:
        c = self.trail[self.pos] if self.pos < len(self.trail) else 0
        self.options.append(n)
        self.pos += 1
        return c

    def draw_int(self, k: int) -> int:
        return self._choose(k + 1)

    def draw_bool(self) -> bool:
        return self._choose(2) == 1


def enumerate_branches(run_fn: Callable[[object], object], limit: Optional[int] = None):
    """All outcomes of run_fn under every possible sequence of random draws."""
    trail: List[int] = []
    count = 0
    while True:
        src = ScriptedSource(trail)
        yield run_fn(src)
        count += 1
        # odometer advance over the recorded option counts
        taken = [(src.trail[i] if i < len(src.trail) else 0) for i in range(src.pos)]
        i = src.pos - 1
        while i >= 0 and taken[i] + 1 >= src.options[i]:
            i -= 1
        if i < 0:
            return
        if limit is not None and count >= limit:
            raise AgapiaRuntimeError(f"branch enumeration exceeded {limit} branches", kind="search")
        trail = taken[:i] + [taken[i] + 1]


# ---------------------------------------------------------------------------
# Module stores and evaluation
# ---------------------------------------------------------------------------


class ModuleStore:
    """Flat variable store; no spatial/temporal distinction inside a module."""

    def __init__(self):
        self.values = {}
        self.types = {}  # declared interface/new types, where known

    def declare(self, name: str, t: Optional[Type], value: Optional[Value] = None):
        self.types[name] = canon_type(t) if t is not None else None
        if value is not None:
            self.values[name] = canon_value(value)
        elif t is not None:
            self.values[name] = default_value(t)
        else:
            self.values[name] = VInt(0)

    def get(self, name: str, span=None) -> Value:
        if name not in self.values:
            raise AgapiaRuntimeError(f"undeclared variable {name!r}", span, kind="undeclared")
        return self.values[name]

    def set(self, name: str, value: Value):
        # assignment implicitly declares module-local temporaries
        self.values[name] = canon_value(value)
        self.types.setdefault(name, None)

    def record_fields(self, name: str):
        t = self.types.get(name)
        if isinstance(t, TTuple) and all(n is not None for n, _ in t.fields):
            return tuple(n for n, _ in t.fields)
        return None

    def array_elem_type(self, name: str) -> Optional[Type]:
        t = self.types.get(name)
        if isinstance(t, (TStarTuple, TStarList)):
            return t.elem
        return None


def _int(v: Value, span=None) -> int:
    if not isinstance(v, VInt):
        raise AgapiaRuntimeError(f"expected an integer, got {value_to_str(v)}", span)
    return v.v


def _bool(v: Value, span=None) -> bool:
    if not isinstance(v, VBool):
        raise AgapiaRuntimeError(f"expected a boolean, got {value_to_str(v)}", span)
    return v.v


def _set(v: Value, span=None) -> frozenset:
    if isinstance(v, VSet):
        return v.v
    if is_nil_value(v):
        return frozenset()
    raise AgapiaRuntimeError(f"expected a set, got {value_to_str(v)}", span)


def _check_int(n: int, span=None) -> VInt:
    if not (INT_MIN <= n <= INT_MAX):
        raise AgapiaRuntimeError(f"64-bit integer overflow: {n}", span, kind="overflow")
    return VInt(n)


def eval_expr(e: A.Expr, store: ModuleStore, source) -> Value:
    if isinstance(e, A.EInt):
        return _check_int(e.v, e.span)
    if isinstance(e, A.EBool):
        return VBool(e.v)
    if isinstance(e, A.EColor):
        return VColor(e.name)
    if isinstance(e, A.ENull):
        return VSet(frozenset())
    if isinstance(e, A.ESetLit):
        return VSet(frozenset(_int(eval_expr(x, store, source), e.span) for x in e.items))
    if isinstance(e, A.EVar):
        return store.get(e.name, e.span)
    if isinstance(e, A.EField):
        if not isinstance(e.base, A.EVar):
            raise AgapiaRuntimeError("field access applies to variables only", e.span)
        fields = store.record_fields(e.base.name)
        v = store.get(e.base.name, e.span)
        if fields is None or e.name not in fields:
            raise AgapiaRuntimeError(f"{e.base.name!r} has no field {e.name!r}", e.span)
        if not isinstance(v, VTup) or len(v.items) != len(fields):
            raise AgapiaRuntimeError(f"{e.base.name!r} is not a record value", e.span)
        return v.items[fields.index(e.name)]
    if isinstance(e, A.EIndex):
        if not isinstance(e.base, A.EVar):
            raise AgapiaRuntimeError("indexing applies to variables only", e.span)
        v = store.get(e.base.name, e.span)
        items = v.items if isinstance(v, VTup) else (() if is_nil_value(v) else (v,))
        i = _int(eval_expr(e.index, store, source), e.span)
        if not (0 <= i < len(items)):
            raise AgapiaRuntimeError(f"index {i} out of range for {e.base.name!r}", e.span)
        return items[i]
    if isinstance(e, A.ENot):
        return VBool(not _bool(eval_expr(e.expr, store, source), e.span))
    if isinstance(e, A.EMod):
        a = _int(eval_expr(e.expr, store, source), e.span)
        m = _int(eval_expr(e.modulus, store, source), e.span)
        if m <= 0:
            raise AgapiaRuntimeError(f"modulus must be positive, got {m}", e.span)
        return VInt(a % m)
    if isinstance(e, A.ERandInt):
        k = _int(eval_expr(e.bound, store, source), e.span)
        if k < 0:
            raise AgapiaRuntimeError(f"random bound must be >= 0, got {k}", e.span)
        return VInt(source.draw_int(k))
    if isinstance(e, A.ERandBool):
        return VBool(source.draw_bool())
    if isinstance(e, A.EBin):
        lv = eval_expr(e.left, store, source)
        rv = eval_expr(e.right, store, source)
        op = e.op
        if op == "==":
            return VBool(canon_value(lv) == canon_value(rv))
        if op == "!=":
            return VBool(canon_value(lv) != canon_value(rv))
        if op == "&&":
            return VBool(_bool(lv, e.span) and _bool(rv, e.span))
        if op == "||":
            return VBool(_bool(lv, e.span) or _bool(rv, e.span))
        if op == "<":
            return VBool(_int(lv, e.span) < _int(rv, e.span))
        if op == "contains":
            return VBool(_int(rv, e.span) in _set(lv, e.span))
        if op == "union":
            return VSet(_set(lv, e.span) | _set(rv, e.span))
        if op == "-" and (isinstance(lv, VSet) or isinstance(rv, VSet)):
            return VSet(_set(lv, e.span) - _set(rv, e.span))
        a, b = _int(lv, e.span), _int(rv, e.span)
        if op == "+":
            return _check_int(a + b, e.span)
        if op == "-":
            return _check_int(a - b, e.span)
        if op == "*":
            return _check_int(a * b, e.span)
        if op == "/":
            if b == 0:
                raise AgapiaRuntimeError("division by zero", e.span, kind="div-zero")
            q = abs(a) // abs(b)
            return _check_int(q if (a >= 0) == (b >= 0) else -q, e.span)
        raise AgapiaRuntimeError(f"unknown operator {op!r}", e.span)
    raise AgapiaRuntimeError(f"unknown expression {e!r}")


def _assign(lv: A.LValue, value: Value, store: ModuleStore, span=None):
    if isinstance(lv, A.LVar):
        store.set(lv.name, value)
        return
    if isinstance(lv, A.LField):
        fields = store.record_fields(lv.name)
        if fields is None or lv.fieldname not in fields:
            raise AgapiaRuntimeError(f"{lv.name!r} has no field {lv.fieldname!r}", span)
        v = store.get(lv.name, span)
        items = list(v.items) if isinstance(v, VTup) else [VNIL] * len(fields)
        items[fields.index(lv.fieldname)] = canon_value(value)
        store.values[lv.name] = VTup(tuple(items))
        return
    if isinstance(lv, A.LIndex):
        raise AgapiaRuntimeError("internal: LIndex handled by caller", span)
    raise AgapiaRuntimeError(f"unknown lvalue {lv!r}", span)


def exec_stmts(stmts, store: ModuleStore, source, cfg) -> None:
    for s in stmts:
        exec_stmt(s, store, source, cfg)


def exec_stmt(s: A.WStmt, store: ModuleStore, source, cfg) -> None:
    if isinstance(s, A.WNil) or isinstance(s, A.WDelay):
        return  # delay(e) is a no-op and never evaluates its argument
    if isinstance(s, A.WNew):
        if s.name in store.values:
            raise AgapiaRuntimeError(f"variable {s.name!r} already declared", s.span)
        store.declare(s.name, s.ann)
        return
    if isinstance(s, A.WAssign):
        if isinstance(s.target, A.LIndex):
            name = s.target.name
            v = store.get(name, s.span) if name in store.values else VNIL
            items = list(v.items) if isinstance(v, VTup) else ([] if is_nil_value(v) else [v])
            i = _int(eval_expr(s.target.index, store, source), s.span)
            if i < 0:
                raise AgapiaRuntimeError(f"negative index {i} for {name!r}", s.span)
            elem_t = store.array_elem_type(name)
            filler = default_value(elem_t) if elem_t is not None else VNIL
            while len(items) <= i:
                items.append(filler)
            items[i] = canon_value(eval_expr(s.expr, store, source))
            store.values[name] = VTup(tuple(items))
            return
        _assign(s.target, eval_expr(s.expr, store, source), store, s.span)
        return
    if isinstance(s, A.WIf):
        branch = s.then if _bool(eval_expr(s.cond, store, source), s.span) else s.els
        exec_stmts(branch, store, source, cfg)
        return
    if isinstance(s, A.WWhile):
        count = 0
        while _bool(eval_expr(s.cond, store, source), s.span):
            count += 1
            if count > cfg.max_inner:
                raise LoopBoundExceeded("while", cfg.max_inner, s.span)
            exec_stmts(s.body, store, source, cfg)
        return
    if isinstance(s, A.WFor):
        store.set(s.var, eval_expr(s.init, store, source))
        count = 0
        while _bool(eval_expr(s.cond, store, source), s.span):
            count += 1
            if count > cfg.max_inner:
                raise LoopBoundExceeded("for", cfg.max_inner, s.span)
            exec_stmts(s.body, store, source, cfg)
            store.set(s.var, _check_int(_int(store.get(s.var, s.span)) + 1, s.span))
        return
    raise AgapiaRuntimeError(f"unknown statement {s!r}")


@dataclass
class RunConfig:
    seed: int = 0
    max_inner: int = 10_000
    max_while_t: int = 10_000
    max_while_s: int = 10_000
    max_while_st: int = 10_000
    trace: bool = False
    check_io_types: bool = True
    source_factory: Optional[Callable[[str], object]] = None

    def source_for(self, path: str):
        if self.source_factory is not None:
            return self.source_factory(path)
        return stream_for(self.seed, path)


def _bind_decls(store: ModuleStore, decls, kind, value: Value, what: str, span=None):
    value = canon_value(value)
    if not decls:
        if not is_nil_value(value):
            raise AgapiaRuntimeError(f"{what} input should be nil, got {value_to_str(value)}", span)
        return
    expected = decls_tuple_type(decls, kind)
    if not value_has_type(value, expected):
        raise AgapiaRuntimeError(
            f"{what} input {value_to_str(value)} does not inhabit its declared type "
            f"{type_to_str(expected)}",
            span,
        )
    if len(decls) == 1:
        store.declare(decls[0].name, decl_type(decls[0], kind), value)
        return
    if not isinstance(value, VTup) or len(value.items) != len(decls):
        raise AgapiaRuntimeError(f"{what} input arity mismatch", span)
    for d, v in zip(decls, value.items):
        store.declare(d.name, decl_type(d, kind), v)


def _pack_decls(store: ModuleStore, decls, span=None) -> Value:
    if not decls:
        return VNIL
    return canon_value(VTup(tuple(store.get(d.name, span) for d in decls)))


def _eval_module_core(m: A.Module, tin: Value, sin: Value, source, cfg: RunConfig):
    store = ModuleStore()
    _bind_decls(store, m.listen, TEMPORAL, tin, "listen", m.span)
    _bind_decls(store, m.read, SPATIAL, sin, "read", m.span)
    for d in m.speak:
        if d.name not in store.values:
            store.declare(d.name, decl_type(d, TEMPORAL))
    for d in m.write:
        if d.name not in store.values:
            store.declare(d.name, decl_type(d, SPATIAL))
    exec_stmts(m.body, store, source, cfg)
    return _pack_decls(store, m.speak, m.span), _pack_decls(store, m.write, m.span)


def eval_module(
    m: A.Module, tin: Value = VNIL, sin: Value = VNIL, source=None, cfg: Optional[RunConfig] = None
) -> Scenario:
    """Run a module body on its two inputs; returns the single-cell scenario."""
    cfg = cfg or RunConfig()
    source = source if source is not None else cfg.source_for("module")
    east, south = _eval_module_core(m, tin, sin, source, cfg)
    label = (m.name or "M")[0].upper()
    return Scenario([[Cell(label, west=canon_value(tin), north=canon_value(sin), east=east, south=south)]])


def module_outcomes(
    m: A.Module, tin: Value = VNIL, sin: Value = VNIL, cfg: Optional[RunConfig] = None,
    limit: Optional[int] = None,
):
    """All (east, south) outputs of a module over every random branch."""
    cfg = cfg or RunConfig()
    outs = set()
    for out in enumerate_branches(lambda src: _eval_module_core(m, tin, sin, src, cfg), limit):
        outs.add(out)
    return outs


# ---------------------------------------------------------------------------
# Program execution
# ---------------------------------------------------------------------------


class Cursor:
    def __init__(self, entries: Sequence[Value]):
        self.entries = [canon_value(v) for v in entries]
        self.pos = 0

    def take_nonnil(self, what="input", span=None) -> Value:
        while self.pos < len(self.entries):
            v = self.entries[self.pos]
            self.pos += 1
            if not is_nil_value(v):
                return v
        raise AgapiaRuntimeError(f"ran out of {what} entries", span)

    def peek_nonnil(self) -> Optional[Value]:
        for v in self.entries[self.pos :]:
            if not is_nil_value(v):
                return v
        return None

    def remaining_nonnil(self) -> List[Value]:
        return [v for v in self.entries[self.pos :] if not is_nil_value(v)]

    def take_remaining(self) -> List[Value]:
        out = self.remaining_nonnil()
        self.pos = len(self.entries)
        return out


def _take_arity(cur: Cursor, t: Type, span=None) -> List[Value]:
    """Consume the entries a border of type t stands for (greedy on stars)."""
    items = type_list_items(t)
    if any(isinstance(x, (TStarList,)) for x in items):
        return cur.take_remaining()
    return [cur.take_nonnil("border", span) for _ in items]


@dataclass
class TraceRecord:
    kind: str  # while_st | while_s | while_t
    path: str
    index: int
    t_entries: tuple
    s_entries: tuple
    body: Optional[Scenario] = None  # None on the exit record
    node: Optional[A.Program] = None  # the loop this boundary belongs to


class _Ctx:
    def __init__(self, cfg: RunConfig):
        self.cfg = cfg
        self.types = {}
        self.records: List[TraceRecord] = []

    def type_of(self, p: A.Program) -> ProgramType:
        t = self.types.get(id(p))
        if t is None:
            t = infer_type(p)
            self.types[id(p)] = t
        return t


def _bind_names_from_type(t: Type, entries: Sequence[Value], store: ModuleStore):
    """Bind interface variable names to border entry components, leftmost first."""
    items = type_list_items(t)
    queue = [v for v in (canon_value(x) for x in entries) if not is_nil_value(v)]

    def bind_tuple(tt: TTuple, v: Value):
        fields = tt.fields
        if len(fields) == 1:
            name, ft = fields[0]
            if name is not None and name not in store.values:
                store.declare(name, ft, v)
            return
        if isinstance(v, VTup) and len(v.items) == len(fields):
            for (name, ft), item in zip(fields, v.items):
                if name is not None and name not in store.values:
                    store.declare(name, ft, item)

    for it in items:
        if isinstance(it, TStarList):
            elem = it.elem
            while queue:
                v = queue.pop(0)
                if isinstance(elem, TTuple):
                    bind_tuple(elem, v)
        elif isinstance(it, TTuple):
            if queue:
                bind_tuple(it, queue.pop(0))
        else:
            if queue:
                queue.pop(0)


def _eval_guard(cond: A.Expr, bindings, cfg) -> bool:
    store = ModuleStore()
    for t, entries in bindings:
        if t is not None:
            _bind_names_from_type(t, entries, store)
    v = eval_expr(cond, store, ScriptedSource())
    return _bool(v, getattr(cond, "span", None))


def _identity_scenario(t_entries: Sequence[Value], s_entries: Sequence[Value]) -> Scenario:
    tb = bundle_values(t_entries)
    s_entries = [canon_value(v) for v in s_entries]
    cols = max(1, len(s_entries))
    cells = []
    for j in range(cols):
        sv = s_entries[j] if j < len(s_entries) else VNIL
        cells.append(Cell(LABEL_ID, west=tb, east=tb, north=sv, south=sv))
    return Scenario([cells])


def _run(p: A.Program, tcur: Cursor, scur: Cursor, ctx: _Ctx, path: str) -> Scenario:
    cfg = ctx.cfg
    if isinstance(p, A.PNil):
        return _identity_scenario([], [])
    if isinstance(p, A.PModule):
        m = p.module
        tin = tcur.take_nonnil("temporal", m.span) if m.listen else VNIL
        sin = scur.take_nonnil("spatial", m.span) if m.read else VNIL
        return eval_module(m, tin, sin, cfg.source_for(path), cfg)
    if isinstance(p, A.PHComp):
        f1 = _run(p.left, tcur, scur, ctx, path + "h")
        f2 = _run(p.right, Cursor(f1.east_border()), scur, ctx, path + "H")
        return hcomp(f1, f2)
    if isinstance(p, A.PVComp):
        f1 = _run(p.left, tcur, scur, ctx, path + "v")
        f2 = _run(p.right, tcur, Cursor(f1.south_border()), ctx, path + "V")
        return vcomp(f1, f2)
    if isinstance(p, A.PDComp):
        f1 = _run(p.left, tcur, scur, ctx, path + "d")
        f2 = _run(p.right, Cursor(f1.east_border()), Cursor(f1.south_border()), ctx, path + "D")
        return dcomp(f1, f2)
    if isinstance(p, A.PIf):
        t1, t2 = ctx.type_of(p.then), ctx.type_of(p.els)
        wt = type_match(t1.w, t2.w)
        nt = type_match(t1.n, t2.n)
        tpeek = [v for v in [tcur.peek_nonnil()] if v is not None]
        speek = [v for v in [scur.peek_nonnil()] if v is not None]
        # when the arm types only overlap through differing star shapes the
        # intersection may be empty; fall back to binding through each arm
        bindings = [(wt, tpeek), (nt, speek)]
        if wt is None:
            bindings += [(t1.w, tpeek), (t2.w, tpeek)]
        if nt is None:
            bindings += [(t1.n, speek), (t2.n, speek)]
        chosen = p.then if _eval_guard(p.cond, bindings, cfg) else p.els
        return _run(chosen, tcur, scur, ctx, path + "i")
    if isinstance(p, (A.PWhileT, A.PWhileS, A.PWhileST)):
        return _run_while(p, tcur, scur, ctx, path)
    if isinstance(p, A.PForS):
        raise AgapiaRuntimeError("for_s must be macro-expanded before running", p.span)
    if isinstance(p, A.PRef):
        raise AgapiaRuntimeError(f"unresolved program reference {p.name}", p.span)
    raise AgapiaRuntimeError(f"unknown program node {p!r}")


def _run_while(p, tcur: Cursor, scur: Cursor, ctx: _Ctx, path: str) -> Scenario:
    cfg = ctx.cfg
    bt = ctx.type_of(p.body)
    if isinstance(p, A.PWhileT):
        kind, bound, compose = "while_t", cfg.max_while_t, vcomp
        guard_types = (None, type_match(bt.n, bt.s))
        t_entries: List[Value] = []
        s_entries = _take_arity(scur, bt.n, p.span)
    elif isinstance(p, A.PWhileS):
        kind, bound, compose = "while_s", cfg.max_while_s, hcomp
        guard_types = (type_match(bt.w, bt.e), None)
        t_entries = _take_arity(tcur, bt.w, p.span)
        s_entries = []
    else:
        kind, bound, compose = "while_st", cfg.max_while_st, dcomp
        guard_types = (type_match(bt.w, bt.e), type_match(bt.n, bt.s))
        t_entries = _take_arity(tcur, bt.w, p.span)
        s_entries = _take_arity(scur, bt.n, p.span)

    def guard(tents, sents):
        bindings = []
        if guard_types[0] is not None:
            bindings.append((guard_types[0], tents))
        if guard_types[1] is not None:
            bindings.append((guard_types[1], sents))
        return _eval_guard(p.cond, bindings, cfg)

    parts: List[Scenario] = []
    index = 0
    while guard(t_entries, s_entries):
        index += 1
        if index > bound:
            raise LoopBoundExceeded(kind, bound, p.span)
        if isinstance(p, A.PWhileT):
            body_t: Cursor = tcur  # each iteration consumes its own west entries
            body_s = Cursor(s_entries)
        elif isinstance(p, A.PWhileS):
            body_t = Cursor(t_entries)
            body_s = scur
        else:
            body_t = Cursor(t_entries)
            body_s = Cursor(s_entries)
        fi = _run(p.body, body_t, body_s, ctx, f"{path}.{index}.")
        if cfg.trace:
            ctx.records.append(
                TraceRecord(kind, path, index - 1, tuple(t_entries), tuple(s_entries), fi, p)
            )
        parts.append(fi)
        if isinstance(p, A.PWhileT):
            s_entries = [v for v in fi.south_border()]
        elif isinstance(p, A.PWhileS):
            t_entries = [v for v in fi.east_border()]
        else:
            t_entries = [v for v in fi.east_border()]
            s_entries = [v for v in fi.south_border()]
    assert not guard(t_entries, s_entries)
    if cfg.trace:
        ctx.records.append(
            TraceRecord(kind, path, index, tuple(t_entries), tuple(s_entries), None, p)
        )
    if not parts:
        return _identity_scenario(t_entries, s_entries)
    if isinstance(p, A.PWhileST):
        return dcomp_chain(parts)
    chain = parts[0]
    for fi in parts[1:]:
        chain = compose(chain, fi)
    return chain


def _as_entries(v) -> List[Value]:
    if isinstance(v, (list, tuple)):
        return [canon_value(x) for x in v]
    v = canon_value(v)
    if is_nil_value(v):
        return []
    if isinstance(v, VList):
        return list(v.items)
    return [v]


def run(
    p: A.Program,
    tin=VNIL,
    sin=VNIL,
    cfg: Optional[RunConfig] = None,
) -> Scenario:
    """Execute a program on border inputs, returning its running scenario."""
    cfg = cfg or RunConfig()
    ctx = _Ctx(cfg)
    t_entries, s_entries = _as_entries(tin), _as_entries(sin)
    if cfg.check_io_types:
        pt = ctx.type_of(p)
        if not value_has_type(bundle_values(t_entries), pt.w):
            raise AgapiaRuntimeError(
                f"temporal input {value_to_str(bundle_values(t_entries))} does not inhabit w(P)"
            )
        if not value_has_type(bundle_values(s_entries), pt.n):
            raise AgapiaRuntimeError(
                f"spatial input {value_to_str(bundle_values(s_entries))} does not inhabit n(P)"
            )
    return _run(p, Cursor(t_entries), Cursor(s_entries), ctx, "")


def trace(p: A.Program, tin=VNIL, sin=VNIL, cfg: Optional[RunConfig] = None):
    """Run with boundary tracing; returns (scenario, records)."""
    cfg = replace(cfg or RunConfig(), trace=True)
    ctx = _Ctx(cfg)
    t_entries, s_entries = _as_entries(tin), _as_entries(sin)
    scenario = _run(p, Cursor(t_entries), Cursor(s_entries), ctx, "")
    return scenario, ctx.records
