"""First-order border-condition formulas.

Formulas speak about contour/state variables: scalars (``token``, ``tid``),
record fields (``token.col``), set arrays (``msg[k]``) and per-process
families (``active[r]``).  Primed variables (``x'``) refer to the post side
of a Hoare triple, unprimed ones to the pre side; a formula evaluated at a
single boundary uses only the pre side.

All quantifiers are bounded by set terms (usually interval literals
``[a,b)`` / ``[a,b]``), so evaluation is total and terminating.  ``wrap(x,m)``
is x mod m, covering the paper-style wraparound reading of ``i-1`` at
``i=0``; ``max``/``min`` and set operations ``union``/``inter``/``-`` are
available in terms.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Dict, Optional, Tuple

from .iface import (
    VBool,
    VColor,
    VInt,
    VNil,
    VSet,
    VTup,
    Value,
    canon_value,
)


def _indexable_items(v: Value) -> tuple:
    """Components of an array value; a canonical singleton is one component."""
    if isinstance(v, VTup):
        return v.items
    if isinstance(v, VNil):
        return ()
    return (v,)


class FormulaError(Exception):
    pass


class FormulaEvalError(FormulaError):
    pass


# ---------------------------------------------------------------------------
# AST
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Term:
    pass


@dataclass(frozen=True)
class TLit(Term):
    value: Value


@dataclass(frozen=True)
class TVar(Term):
    name: str
    primed: bool = False


@dataclass(frozen=True)
class TField(Term):
    base: Term
    name: str


@dataclass(frozen=True)
class TIndex(Term):
    base: Term
    index: Term


@dataclass(frozen=True)
class TBin(Term):
    op: str  # + - union inter
    left: Term
    right: Term


@dataclass(frozen=True)
class TFun(Term):
    name: str  # max | min | wrap
    args: Tuple[Term, ...]


@dataclass(frozen=True)
class TInterval(Term):
    lo: Term
    hi: Term
    inclusive: bool = False


@dataclass(frozen=True)
class TSetLit(Term):
    items: Tuple[Term, ...]


@dataclass(frozen=True)
class TTupleT(Term):
    items: Tuple[Term, ...]


@dataclass(frozen=True)
class Formula:
    pass


@dataclass(frozen=True)
class FCmp(Formula):
    op: str  # = != < <= > >= in subset
    left: Term
    right: Term


@dataclass(frozen=True)
class FBoolTerm(Formula):
    term: Term


@dataclass(frozen=True)
class FNot(Formula):
    body: Formula


@dataclass(frozen=True)
class FAnd(Formula):
    items: Tuple[Formula, ...]


@dataclass(frozen=True)
class FOr(Formula):
    items: Tuple[Formula, ...]


@dataclass(frozen=True)
class FImp(Formula):
    left: Formula
    right: Formula


@dataclass(frozen=True)
class FQuant(Formula):
    kind: str  # forall | exists
    var: str
    domain: Term
    body: Formula


TRUE = FBoolTerm(TLit(VBool(True)))
FALSE = FBoolTerm(TLit(VBool(False)))


# ---------------------------------------------------------------------------
# Environments
# ---------------------------------------------------------------------------


@dataclass
class Env:
    """One side (pre or post) of a binding: scalars plus indexed families."""

    scalars: Dict[str, Value] = field(default_factory=dict)
    families: Dict[str, tuple] = field(default_factory=dict)
    recfields: Dict[str, tuple] = field(default_factory=dict)
    aliases: Dict[str, str] = field(default_factory=dict)

    def copy(self) -> "Env":
        return Env(dict(self.scalars), dict(self.families), dict(self.recfields), dict(self.aliases))


def _alias_term(path: str) -> Term:
    parts = path.split(".")
    t: Term = TVar(parts[0])
    for p in parts[1:]:
        t = TField(t, p)
    return t


def _base_name(t: Term) -> Optional[str]:
    if isinstance(t, TVar):
        return t.name
    if isinstance(t, (TField, TIndex)):
        return _base_name(t.base)
    return None


def eval_term(t: Term, pre: Env, post: Optional[Env], bound: Dict[str, Value]) -> Value:
    def ev(x):
        return eval_term(x, pre, post, bound)

    if isinstance(t, TLit):
        return t.value
    if isinstance(t, TVar):
        if not t.primed and t.name in bound:
            return bound[t.name]
        env = pre
        if t.primed:
            if post is None:
                raise FormulaEvalError(f"primed variable {t.name}' without a post binding")
            env = post
        if t.name in env.scalars:
            return env.scalars[t.name]
        if t.name in env.aliases:
            # an alias resolves entirely within its own side
            return eval_term(_alias_term(env.aliases[t.name]), env, None, {})
        if t.name in env.families:
            raise FormulaEvalError(f"family variable {t.name} must be indexed")
        raise FormulaEvalError(f"unbound variable {t.name}{chr(39) if t.primed else ''}")
    if isinstance(t, TField):
        base = ev(t.base)
        name = _base_name(t.base)
        env = post if (isinstance(t.base, TVar) and t.base.primed and post) else pre
        fields = env.recfields.get(name) if name else None
        if fields is None or t.name not in fields:
            raise FormulaEvalError(f"no field {t.name!r} on {name!r}")
        if not isinstance(base, VTup) or len(base.items) != len(fields):
            raise FormulaEvalError(f"{name!r} is not a record value")
        return base.items[fields.index(t.name)]
    if isinstance(t, TIndex):
        idx = _as_int(ev(t.index))
        if isinstance(t.base, TVar):
            name, primed = t.base.name, t.base.primed
            env = post if primed else pre
            if primed and post is None:
                raise FormulaEvalError(f"primed variable {name}' without a post binding")
            if name not in bound and env is not None and name in env.families:
                fam = env.families[name]
                if not (0 <= idx < len(fam)):
                    raise FormulaEvalError(f"index {idx} out of range for family {name}")
                return fam[idx]
        base = ev(t.base)
        items = _indexable_items(base)
        if not (0 <= idx < len(items)):
            raise FormulaEvalError(f"index {idx} out of range")
        return items[idx]
    if isinstance(t, TBin):
        a, b = ev(t.left), ev(t.right)
        if t.op == "union":
            return VSet(_as_set(a) | _as_set(b))
        if t.op == "inter":
            return VSet(_as_set(a) & _as_set(b))
        if t.op == "-" and (isinstance(a, VSet) or isinstance(b, VSet)):
            return VSet(_as_set(a) - _as_set(b))
        x, y = _as_int(a), _as_int(b)
        if t.op == "+":
            return VInt(x + y)
        if t.op == "-":
            return VInt(x - y)
        if t.op == "*":
            return VInt(x * y)
        raise FormulaEvalError(f"unknown term operator {t.op}")
    if isinstance(t, TFun):
        args = [ev(a) for a in t.args]
        if t.name == "max":
            return VInt(max(_as_int(a) for a in args))
        if t.name == "min":
            return VInt(min(_as_int(a) for a in args))
        if t.name == "wrap":
            x, m = _as_int(args[0]), _as_int(args[1])
            if m <= 0:
                raise FormulaEvalError("wrap modulus must be positive")
            return VInt(x % m)
        raise FormulaEvalError(f"unknown function {t.name}")
    if isinstance(t, TInterval):
        lo, hi = _as_int(ev(t.lo)), _as_int(ev(t.hi))
        top = hi + 1 if t.inclusive else hi
        return VSet(frozenset(range(lo, top)))
    if isinstance(t, TSetLit):
        return VSet(frozenset(_as_int(ev(x)) for x in t.items))
    if isinstance(t, TTupleT):
        return canon_value(VTup(tuple(ev(x) for x in t.items)))
    raise FormulaEvalError(f"unknown term {t!r}")


def _as_int(v: Value) -> int:
    if isinstance(v, VInt):
        return v.v
    raise FormulaEvalError(f"expected integer, got {v}")


def _as_set(v: Value) -> frozenset:
    if isinstance(v, VSet):
        return v.v
    raise FormulaEvalError(f"expected set, got {v}")


def _as_bool(v: Value) -> bool:
    if isinstance(v, VBool):
        return v.v
    raise FormulaEvalError(f"expected boolean, got {v}")


def eval_formula(
    f: Formula, pre: Env, post: Optional[Env] = None, bound: Optional[Dict[str, Value]] = None
) -> bool:
    """Classical two-valued evaluation; all quantifiers range over finite sets."""
    bound = bound or {}

    def ev(g, b):
        return eval_formula(g, pre, post, b)

    if isinstance(f, FBoolTerm):
        return _as_bool(eval_term(f.term, pre, post, bound))
    if isinstance(f, FCmp):
        a = eval_term(f.left, pre, post, bound)
        b = eval_term(f.right, pre, post, bound)
        if f.op in ("=", "=="):
            return canon_value(a) == canon_value(b)
        if f.op == "!=":
            return canon_value(a) != canon_value(b)
        if f.op == "in":
            return _as_int(a) in _as_set(b)
        if f.op == "subset":
            return _as_set(a) <= _as_set(b)
        x, y = _as_int(a), _as_int(b)
        return {"<": x < y, "<=": x <= y, ">": x > y, ">=": x >= y}[f.op]
    if isinstance(f, FNot):
        return not ev(f.body, bound)
    if isinstance(f, FAnd):
        return all(ev(g, bound) for g in f.items)
    if isinstance(f, FOr):
        return any(ev(g, bound) for g in f.items)
    if isinstance(f, FImp):
        return (not ev(f.left, bound)) or ev(f.right, bound)
    if isinstance(f, FQuant):
        dom = _as_set(eval_term(f.domain, pre, post, bound))
        vals = sorted(dom)
        if f.kind == "forall":
            return all(ev(f.body, {**bound, f.var: VInt(x)}) for x in vals)
        return any(ev(f.body, {**bound, f.var: VInt(x)}) for x in vals)
    raise FormulaEvalError(f"unknown formula {f!r}")


# ---------------------------------------------------------------------------
# Compilation to closures (hot-loop evaluation)
# ---------------------------------------------------------------------------


def compile_formula(f: Formula):
    """Compile to a closure fn(pre, post, bound) -> bool.

    Semantically identical to eval_formula; used by the proof checker's
    enumeration loops where interpretive dispatch dominates.
    """
    return _compile_f(f)


def _compile_t(t: Term):
    if isinstance(t, TLit):
        v = t.value
        return lambda pre, post, bnd: v
    if isinstance(t, TVar):
        name, primed = t.name, t.primed
        if primed:
            def var_post(pre, post, bnd, name=name):
                if post is None:
                    raise FormulaEvalError(f"primed variable {name}' without a post binding")
                v = post.scalars.get(name)
                if v is not None:
                    return v
                if name in post.aliases:
                    return eval_term(_alias_term(post.aliases[name]), post, None, {})
                raise FormulaEvalError(f"unbound variable {name}'")
            return var_post

        def var_pre(pre, post, bnd, name=name):
            v = bnd.get(name)
            if v is not None:
                return v
            v = pre.scalars.get(name)
            if v is not None:
                return v
            if name in pre.aliases:
                return eval_term(_alias_term(pre.aliases[name]), pre, None, bnd)
            raise FormulaEvalError(f"unbound variable {name}")
        return var_pre
    if isinstance(t, TField):
        base = _compile_t(t.base)
        name = _base_name(t.base)
        fname = t.name
        primed = isinstance(t.base, TVar) and t.base.primed

        def field_fn(pre, post, bnd):
            env = post if (primed and post is not None) else pre
            fields = env.recfields.get(name) if name else None
            if fields is None or fname not in fields:
                raise FormulaEvalError(f"no field {fname!r} on {name!r}")
            b = base(pre, post, bnd)
            if not isinstance(b, VTup) or len(b.items) != len(fields):
                raise FormulaEvalError(f"{name!r} is not a record value")
            return b.items[fields.index(fname)]
        return field_fn
    if isinstance(t, TIndex):
        idx = _compile_t(t.index)
        if isinstance(t.base, TVar):
            name, primed = t.base.name, t.base.primed
            base = _compile_t(t.base)

            def index_var(pre, post, bnd):
                i = idx(pre, post, bnd)
                if not isinstance(i, VInt):
                    raise FormulaEvalError(f"index must be an integer, got {i}")
                i = i.v
                env = post if primed else pre
                if primed and post is None:
                    raise FormulaEvalError(f"primed variable {name}' without a post binding")
                if name not in bnd and env is not None:
                    fam = env.families.get(name)
                    if fam is not None:
                        if not (0 <= i < len(fam)):
                            raise FormulaEvalError(f"index {i} out of range for family {name}")
                        return fam[i]
                b = base(pre, post, bnd)
                items = _indexable_items(b)
                if not (0 <= i < len(items)):
                    raise FormulaEvalError(f"index {i} out of range")
                return items[i]
            return index_var
        base = _compile_t(t.base)

        def index_fn(pre, post, bnd):
            b = base(pre, post, bnd)
            i = idx(pre, post, bnd)
            items = _indexable_items(b)
            if not (isinstance(i, VInt) and 0 <= i.v < len(items)):
                raise FormulaEvalError("bad index")
            return items[i.v]
        return index_fn
    if isinstance(t, TBin):
        a, b, op = _compile_t(t.left), _compile_t(t.right), t.op
        if op == "union":
            return lambda pre, post, bnd: VSet(_as_set(a(pre, post, bnd)) | _as_set(b(pre, post, bnd)))
        if op == "inter":
            return lambda pre, post, bnd: VSet(_as_set(a(pre, post, bnd)) & _as_set(b(pre, post, bnd)))

        def arith(pre, post, bnd, a=a, b=b, op=op):
            x, y = a(pre, post, bnd), b(pre, post, bnd)
            if op == "-" and (isinstance(x, VSet) or isinstance(y, VSet)):
                return VSet(_as_set(x) - _as_set(y))
            xi, yi = _as_int(x), _as_int(y)
            if op == "+":
                return VInt(xi + yi)
            if op == "-":
                return VInt(xi - yi)
            return VInt(xi * yi)
        return arith
    if isinstance(t, TFun):
        args = [_compile_t(a) for a in t.args]
        name = t.name
        if name == "wrap":
            a, m = args

            def wrap_fn(pre, post, bnd):
                x, mm = _as_int(a(pre, post, bnd)), _as_int(m(pre, post, bnd))
                if mm <= 0:
                    raise FormulaEvalError("wrap modulus must be positive")
                return VInt(x % mm)
            return wrap_fn
        if name == "max":
            return lambda pre, post, bnd: VInt(max(_as_int(g(pre, post, bnd)) for g in args))
        return lambda pre, post, bnd: VInt(min(_as_int(g(pre, post, bnd)) for g in args))
    if isinstance(t, TInterval):
        lo, hi, inc = _compile_t(t.lo), _compile_t(t.hi), t.inclusive

        def interval(pre, post, bnd):
            a, b = _as_int(lo(pre, post, bnd)), _as_int(hi(pre, post, bnd))
            return VSet(frozenset(range(a, b + 1 if inc else b)))
        return interval
    if isinstance(t, TSetLit):
        items = [_compile_t(x) for x in t.items]
        return lambda pre, post, bnd: VSet(frozenset(_as_int(g(pre, post, bnd)) for g in items))
    if isinstance(t, TTupleT):
        items = [_compile_t(x) for x in t.items]
        return lambda pre, post, bnd: canon_value(VTup(tuple(g(pre, post, bnd) for g in items)))
    raise FormulaError(f"cannot compile term {t!r}")


def _compile_f(f: Formula):
    if isinstance(f, FBoolTerm):
        g = _compile_t(f.term)

        def boolterm(pre, post, bnd):
            v = g(pre, post, bnd)
            if not isinstance(v, VBool):
                raise FormulaEvalError(f"expected boolean, got {v}")
            return v.v
        return boolterm
    if isinstance(f, FCmp):
        a, b, op = _compile_t(f.left), _compile_t(f.right), f.op
        if op in ("=", "=="):
            return lambda pre, post, bnd: canon_value(a(pre, post, bnd)) == canon_value(b(pre, post, bnd))
        if op == "!=":
            return lambda pre, post, bnd: canon_value(a(pre, post, bnd)) != canon_value(b(pre, post, bnd))
        if op == "in":
            return lambda pre, post, bnd: _as_int(a(pre, post, bnd)) in _as_set(b(pre, post, bnd))
        if op == "subset":
            return lambda pre, post, bnd: _as_set(a(pre, post, bnd)) <= _as_set(b(pre, post, bnd))
        cmps = {
            "<": lambda x, y: x < y,
            "<=": lambda x, y: x <= y,
            ">": lambda x, y: x > y,
            ">=": lambda x, y: x >= y,
        }
        cf = cmps[op]
        return lambda pre, post, bnd: cf(_as_int(a(pre, post, bnd)), _as_int(b(pre, post, bnd)))
    if isinstance(f, FNot):
        g = _compile_f(f.body)
        return lambda pre, post, bnd: not g(pre, post, bnd)
    if isinstance(f, FAnd):
        gs = [_compile_f(x) for x in f.items]
        return lambda pre, post, bnd: all(g(pre, post, bnd) for g in gs)
    if isinstance(f, FOr):
        gs = [_compile_f(x) for x in f.items]
        return lambda pre, post, bnd: any(g(pre, post, bnd) for g in gs)
    if isinstance(f, FImp):
        a, b = _compile_f(f.left), _compile_f(f.right)
        return lambda pre, post, bnd: (not a(pre, post, bnd)) or b(pre, post, bnd)
    if isinstance(f, FQuant):
        dom = _compile_t(f.domain)
        body = _compile_f(f.body)
        var = f.var
        if f.kind == "forall":
            def forall(pre, post, bnd):
                vals = _as_set(dom(pre, post, bnd))
                for x in vals:
                    if not body(pre, post, {**bnd, var: VInt(x)}):
                        return False
                return True
            return forall

        def exists(pre, post, bnd):
            vals = _as_set(dom(pre, post, bnd))
            for x in vals:
                if body(pre, post, {**bnd, var: VInt(x)}):
                    return True
            return False
        return exists
    raise FormulaError(f"cannot compile formula {f!r}")


# ---------------------------------------------------------------------------
# Structural transforms
# ---------------------------------------------------------------------------


def _map_terms(t: Term, fn) -> Term:
    t2 = fn(t)
    if t2 is not t:
        return t2
    if isinstance(t, TField):
        return TField(_map_terms(t.base, fn), t.name)
    if isinstance(t, TIndex):
        return TIndex(_map_terms(t.base, fn), _map_terms(t.index, fn))
    if isinstance(t, TBin):
        return TBin(t.op, _map_terms(t.left, fn), _map_terms(t.right, fn))
    if isinstance(t, TFun):
        return TFun(t.name, tuple(_map_terms(a, fn) for a in t.args))
    if isinstance(t, TInterval):
        return TInterval(_map_terms(t.lo, fn), _map_terms(t.hi, fn), t.inclusive)
    if isinstance(t, TSetLit):
        return TSetLit(tuple(_map_terms(a, fn) for a in t.items))
    if isinstance(t, TTupleT):
        return TTupleT(tuple(_map_terms(a, fn) for a in t.items))
    return t


def _transform_vars(f: Formula, var_fn, shadowed=frozenset()) -> Formula:
    def term_fn(t):
        if isinstance(t, TVar) and t.name not in shadowed:
            return var_fn(t)
        return t

    if isinstance(f, FBoolTerm):
        return FBoolTerm(_map_terms(f.term, term_fn))
    if isinstance(f, FCmp):
        return FCmp(f.op, _map_terms(f.left, term_fn), _map_terms(f.right, term_fn))
    if isinstance(f, FNot):
        return FNot(_transform_vars(f.body, var_fn, shadowed))
    if isinstance(f, FAnd):
        return FAnd(tuple(_transform_vars(g, var_fn, shadowed) for g in f.items))
    if isinstance(f, FOr):
        return FOr(tuple(_transform_vars(g, var_fn, shadowed) for g in f.items))
    if isinstance(f, FImp):
        return FImp(
            _transform_vars(f.left, var_fn, shadowed), _transform_vars(f.right, var_fn, shadowed)
        )
    if isinstance(f, FQuant):
        return FQuant(
            f.kind,
            f.var,
            _map_terms(f.domain, term_fn),
            _transform_vars(f.body, var_fn, shadowed | {f.var}),
        )
    raise FormulaError(f"unknown formula {f!r}")


def prime_all(f: Formula) -> Formula:
    """Mark every free variable primed (bound quantifier vars untouched)."""
    return _transform_vars(f, lambda t: TVar(t.name, True))


def strip_primes(f: Formula) -> Formula:
    return _transform_vars(f, lambda t: TVar(t.name, False))


def is_fully_primed(f: Formula, ignore=frozenset()) -> bool:
    found = []

    def check(t):
        if isinstance(t, TVar) and t.name not in ignore:
            found.append(t.primed)
        return t

    _transform_vars(f, check)
    return all(found)


def normalize(f: Formula) -> Formula:
    """Flatten nested conjunction/disjunction and alpha-rename bound vars."""
    f = _alpha(f, {}, [0])
    return _flatten(f)


def _alpha(f: Formula, ren, counter) -> Formula:
    if isinstance(f, FQuant):
        fresh = f"_q{counter[0]}"
        counter[0] += 1
        body = _transform_vars(
            f.body, lambda t: TVar(fresh, t.primed) if t.name == f.var else t
        )
        # domain is outside the binder's scope
        dom = _map_terms(f.domain, lambda t: t)
        return FQuant(f.kind, fresh, dom, _alpha(body, ren, counter))
    if isinstance(f, FNot):
        return FNot(_alpha(f.body, ren, counter))
    if isinstance(f, FAnd):
        return FAnd(tuple(_alpha(g, ren, counter) for g in f.items))
    if isinstance(f, FOr):
        return FOr(tuple(_alpha(g, ren, counter) for g in f.items))
    if isinstance(f, FImp):
        return FImp(_alpha(f.left, ren, counter), _alpha(f.right, ren, counter))
    return f


def _flatten(f: Formula) -> Formula:
    if isinstance(f, FAnd):
        items = []
        for g in f.items:
            g = _flatten(g)
            items.extend(g.items if isinstance(g, FAnd) else [g])
        return items[0] if len(items) == 1 else FAnd(tuple(items))
    if isinstance(f, FOr):
        items = []
        for g in f.items:
            g = _flatten(g)
            items.extend(g.items if isinstance(g, FOr) else [g])
        return items[0] if len(items) == 1 else FOr(tuple(items))
    if isinstance(f, FNot):
        return FNot(_flatten(f.body))
    if isinstance(f, FImp):
        return FImp(_flatten(f.left), _flatten(f.right))
    if isinstance(f, FQuant):
        return FQuant(f.kind, f.var, f.domain, _flatten(f.body))
    return f


def formulas_equal(a: Formula, b: Formula) -> bool:
    return normalize(a) == normalize(b)


# ---------------------------------------------------------------------------
# Concrete syntax
# ---------------------------------------------------------------------------

_PUNCT = ["->", "==", "!=", "<=", ">=", "&&", "||", "(", ")", "[", "]", "{", "}",
          ",", ":", ".", "'", "=", "<", ">", "!", "+", "-", "*"]
_KEYWORDS = {
    "forall", "exists", "in", "subset", "union", "inter", "max", "min", "wrap",
    "true", "false", "white", "black", "empty", "prime",
}


def _lex(text: str):
    toks, i = [], 0
    while i < len(text):
        ch = text[i]
        if ch.isspace():
            i += 1
            continue
        if ch.isdigit():
            j = i
            while j < len(text) and text[j].isdigit():
                j += 1
            toks.append(("int", text[i:j]))
            i = j
            continue
        if ch.isalpha() or ch == "_":
            j = i
            while j < len(text) and (text[j].isalnum() or text[j] == "_"):
                j += 1
            word = text[i:j]
            toks.append(("kw" if word in _KEYWORDS else "ident", word))
            i = j
            continue
        for p in _PUNCT:
            if text.startswith(p, i):
                toks.append((p, p))
                i += len(p)
                break
        else:
            raise FormulaError(f"bad character {ch!r} in formula")
    toks.append(("eof", ""))
    return toks


class _FParser:
    def __init__(self, toks):
        self.toks = toks
        self.pos = 0

    def peek(self, off=0):
        return self.toks[min(self.pos + off, len(self.toks) - 1)]

    def at(self, kind, text=None):
        t = self.peek()
        return t[0] == kind and (text is None or t[1] == text)

    def advance(self):
        t = self.toks[self.pos]
        if t[0] != "eof":
            self.pos += 1
        return t

    def expect(self, kind):
        if self.at(kind):
            return self.advance()
        raise FormulaError(f"expected {kind!r}, found {self.peek()[1]!r}")

    def formula(self) -> Formula:
        return self.implies()

    def implies(self) -> Formula:
        left = self.f_or()
        if self.at("->"):
            self.advance()
            return FImp(left, self.implies())
        return left

    def f_or(self) -> Formula:
        items = [self.f_and()]
        while self.at("||"):
            self.advance()
            items.append(self.f_and())
        return items[0] if len(items) == 1 else FOr(tuple(items))

    def f_and(self) -> Formula:
        items = [self.f_not()]
        while self.at("&&"):
            self.advance()
            items.append(self.f_not())
        return items[0] if len(items) == 1 else FAnd(tuple(items))

    def f_not(self) -> Formula:
        if self.at("!"):
            self.advance()
            return FNot(self.f_not())
        if self.at("kw", "prime"):
            self.advance()
            self.expect("(")
            f = self.formula()
            self.expect(")")
            return prime_all(f)
        if self.at("kw", "forall") or self.at("kw", "exists"):
            kind = self.advance()[1]
            var = self.expect("ident")[1]
            if not (self.at("kw", "in")):
                raise FormulaError("expected 'in' after quantifier variable")
            self.advance()
            dom = self.term()
            self.expect(":")
            return FQuant(kind, var, dom, self.f_not_body())
        return self.atom()

    def f_not_body(self) -> Formula:
        # quantifier body extends to the end of the enclosing unit
        return self.implies()

    def atom(self) -> Formula:
        if self.at("("):
            # lookahead: parenthesized formula vs tuple/paren term
            save = self.pos
            try:
                self.advance()
                f = self.formula()
                self.expect(")")
                if self.peek()[0] in ("=", "==", "!=", "<", "<=", ">", ">=") or self.at(
                    "kw", "in"
                ) or self.at("kw", "subset"):
                    raise FormulaError("term context")
                return f
            except FormulaError:
                self.pos = save
        left = self.term()
        for op in ("=", "==", "!=", "<", "<=", ">", ">="):
            if self.at(op):
                self.advance()
                return FCmp("=" if op == "==" else op, left, self.term())
        if self.at("kw", "in"):
            self.advance()
            return FCmp("in", left, self.term())
        if self.at("kw", "subset"):
            self.advance()
            return FCmp("subset", left, self.term())
        return FBoolTerm(left)

    def term(self) -> Term:
        left = self.term_atom_chain()
        while self.peek()[0] in ("+", "-") or self.at("kw", "union") or self.at("kw", "inter"):
            op = self.advance()[1]
            right = self.term_atom_chain()
            left = TBin(op, left, right)
        return left

    def term_atom_chain(self) -> Term:
        t = self.term_atom()
        while True:
            if self.at("."):
                self.advance()
                t = TField(t, self.expect("ident")[1])
            elif self.at("["):
                self.advance()
                idx = self.term()
                self.expect("]")
                t = TIndex(t, idx)
            else:
                return t

    def term_atom(self) -> Term:
        tok = self.peek()
        if tok[0] == "int":
            self.advance()
            return TLit(VInt(int(tok[1])))
        if self.at("kw", "true") or self.at("kw", "false"):
            self.advance()
            return TLit(VBool(tok[1] == "true"))
        if self.at("kw", "white") or self.at("kw", "black"):
            self.advance()
            return TLit(VColor(tok[1]))
        if self.at("kw", "empty"):
            self.advance()
            return TLit(VSet(frozenset()))
        if self.at("kw", "max") or self.at("kw", "min") or self.at("kw", "wrap"):
            name = self.advance()[1]
            self.expect("(")
            a = self.term()
            self.expect(",")
            b = self.term()
            self.expect(")")
            return TFun(name, (a, b))
        if tok[0] == "{":
            self.advance()
            items = []
            if not self.at("}"):
                items.append(self.term())
                while self.at(","):
                    self.advance()
                    items.append(self.term())
            self.expect("}")
            return TSetLit(tuple(items))
        if tok[0] == "[":
            self.advance()
            lo = self.term()
            self.expect(",")
            hi = self.term()
            if self.at("]"):
                self.advance()
                return TInterval(lo, hi, inclusive=True)
            self.expect(")")
            return TInterval(lo, hi, inclusive=False)
        if tok[0] == "(":
            self.advance()
            first = self.term()
            if self.at(","):
                items = [first]
                while self.at(","):
                    self.advance()
                    items.append(self.term())
                self.expect(")")
                return TTupleT(tuple(items))
            self.expect(")")
            return first
        if tok[0] == "ident":
            self.advance()
            primed = False
            if self.at("'"):
                self.advance()
                primed = True
            return TVar(tok[1], primed)
        raise FormulaError(f"expected a term, found {tok[1]!r}")


def parse_formula(text: str) -> Formula:
    p = _FParser(_lex(text))
    f = p.formula()
    if not p.at("eof"):
        raise FormulaError(f"trailing tokens in formula: {p.peek()[1]!r}")
    return f


def formula_to_str(f: Formula) -> str:
    if isinstance(f, FBoolTerm):
        return term_to_str(f.term)
    if isinstance(f, FCmp):
        op = {"=": "=", "in": " in ", "subset": " subset "}.get(f.op, f.op)
        sep = op if op.startswith(" ") else f" {op} "
        return f"{term_to_str(f.left)}{sep}{term_to_str(f.right)}"
    if isinstance(f, FNot):
        return f"!({formula_to_str(f.body)})"
    if isinstance(f, FAnd):
        return " && ".join(f"({formula_to_str(g)})" for g in f.items)
    if isinstance(f, FOr):
        return " || ".join(f"({formula_to_str(g)})" for g in f.items)
    if isinstance(f, FImp):
        return f"({formula_to_str(f.left)}) -> ({formula_to_str(f.right)})"
    if isinstance(f, FQuant):
        return f"{f.kind} {f.var} in {term_to_str(f.domain)} : ({formula_to_str(f.body)})"
    raise FormulaError(f"unknown formula {f!r}")


def term_to_str(t: Term) -> str:
    if isinstance(t, TLit):
        v = t.value
        if isinstance(v, VInt):
            return str(v.v)
        if isinstance(v, VBool):
            return "true" if v.v else "false"
        if isinstance(v, VColor):
            return v.v
        if isinstance(v, VSet):
            return "{" + ",".join(str(x) for x in sorted(v.v)) + "}" if v.v else "empty"
        raise FormulaError(f"unprintable literal {v!r}")
    if isinstance(t, TVar):
        return t.name + ("'" if t.primed else "")
    if isinstance(t, TField):
        return f"{term_to_str(t.base)}.{t.name}"
    if isinstance(t, TIndex):
        return f"{term_to_str(t.base)}[{term_to_str(t.index)}]"
    if isinstance(t, TBin):
        op = t.op if t.op in "+-*" else f" {t.op} "
        return f"({term_to_str(t.left)}{op}{term_to_str(t.right)})"
    if isinstance(t, TFun):
        return f"{t.name}({', '.join(term_to_str(a) for a in t.args)})"
    if isinstance(t, TInterval):
        close = "]" if t.inclusive else ")"
        return f"[{term_to_str(t.lo)}, {term_to_str(t.hi)}{close}"
    if isinstance(t, TSetLit):
        return "{" + ", ".join(term_to_str(a) for a in t.items) + "}"
    if isinstance(t, TTupleT):
        return "(" + ", ".join(term_to_str(a) for a in t.items) + ")"
    raise FormulaError(f"unknown term {t!r}")
