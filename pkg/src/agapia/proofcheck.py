"""Proof-script checker with bounded-enumeration discharge.

A proof script is an s-expression tree of rule applications over Hoare
triples.  Structural rules (horizontal/vertical/diagonal composition, if,
the whiles, the simple for) are checked by matching contour shapes and
formula seams; basic obligations and implication side conditions are
discharged by exhaustive enumeration of a declared finite state space, with
``random(k)`` treated as universal choice over all branches.

Conventions:
  * Post-formulas follow the priming convention: ``x'`` is the value after
    the program, bare ``x`` the value before; ``prime(F)`` primes every free
    variable of F.  Names declared ``(constants ...)`` are rigid and never
    primed.
  * A premise's post connects to the next premise's pre when stripping the
    primes yields the same normalized formula under the same parameters.
  * Scripts check once per ring size n in the domain; contour exponents and
    variable-space sizes may be arithmetic expressions over n and the rule
    parameters.
"""

from __future__ import annotations

import re
import time
from dataclasses import dataclass, field, replace
from itertools import product as iproduct
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple

from . import ast as A
from .ast import resolve_file
from .contour import Contour, ContourError, parse_contour
from .formula import (
    Env,
    FAnd,
    FCmp,
    FNot,
    Formula,
    compile_formula,
    TField,
    TLit,
    TVar,
    eval_formula,
    formulas_equal,
    is_fully_primed,
    normalize,
    parse_formula,
    prime_all,
    strip_primes,
    _transform_vars,
)
from .iface import VBool, VColor, VInt, VSet, VTup, Value, canon_value
from .interp import RunConfig, module_outcomes
from .parser import parse_source
from .macro import expand_for_s


class ProofError(Exception):
    pass


class ScriptError(ProofError):
    pass


# ---------------------------------------------------------------------------
# S-expressions
# ---------------------------------------------------------------------------


def parse_sexprs(text: str):
    toks = _sexpr_lex(text)
    out, pos = [], 0
    while pos < len(toks):
        node, pos = _sexpr_parse(toks, pos)
        out.append(node)
    return out


def _sexpr_lex(text: str):
    toks, i = [], 0
    while i < len(text):
        ch = text[i]
        if ch.isspace():
            i += 1
        elif ch == ";":
            while i < len(text) and text[i] != "\n":
                i += 1
        elif ch in "()":
            toks.append(ch)
            i += 1
        elif ch == '"':
            j = i + 1
            while j < len(text) and text[j] != '"':
                j += 1
            if j >= len(text):
                raise ScriptError("unterminated string in script")
            toks.append(("str", text[i + 1 : j]))
            i = j + 1
        else:
            j = i
            while j < len(text) and not text[j].isspace() and text[j] not in '();"':
                j += 1
            toks.append(("atom", text[i:j]))
            i = j
    return toks


def _sexpr_parse(toks, pos):
    t = toks[pos]
    if t == "(":
        out = []
        pos += 1
        while pos < len(toks) and toks[pos] != ")":
            node, pos = _sexpr_parse(toks, pos)
            out.append(node)
        if pos >= len(toks):
            raise ScriptError("unbalanced parenthesis in script")
        return out, pos + 1
    if t == ")":
        raise ScriptError("unexpected ')'")
    kind, val = t
    if kind == "str":
        return ("str", val), pos + 1
    try:
        return int(val), pos + 1
    except ValueError:
        return val, pos + 1


def _is_str(x):
    return isinstance(x, tuple) and len(x) == 2 and x[0] == "str"


def _text(x):
    if _is_str(x):
        return x[1]
    if isinstance(x, (str, int)):
        return str(x)
    raise ScriptError(f"expected text, got {x!r}")


# ---------------------------------------------------------------------------
# Domains and state spaces
# ---------------------------------------------------------------------------


@dataclass
class Domain:
    """Finite search space bounds for obligation discharge."""

    n_values: Tuple[int, ...] = (1, 2, 3, 4)
    int_lo: int = 0
    int_hi: int = 4
    set_lo: int = 0
    set_hi: int = 4
    star_max: int = 4
    max_states: int = 5_000_000
    branch_limit: int = 500_000


class SearchSpaceTooLarge(ProofError):
    pass


def _eval_int(expr, env: Dict[str, int]) -> int:
    if isinstance(expr, int):
        return expr
    expr = str(expr).strip()
    if not re.fullmatch(r"[A-Za-z0-9_+\-* ()]*", expr):
        raise ScriptError(f"bad arithmetic expression {expr!r}")
    try:
        return int(eval(expr, {"__builtins__": {}}, dict(env)))
    except Exception as e:
        raise ScriptError(f"cannot evaluate {expr!r}: {e}")


@dataclass
class VarSpec:
    name: str
    kind: str  # scalar | array | family
    spec: tuple  # value spec tree
    length: object = None  # expression, for array/family


def _parse_value_spec(form, domain: Domain):
    if isinstance(form, list):
        head = form[0]
        if head == "int":
            lo = form[1] if len(form) > 1 else domain.int_lo
            hi = form[2] if len(form) > 2 else domain.int_hi
            return ("int", lo, hi)
        if head == "set":
            lo = form[1] if len(form) > 1 else domain.set_lo
            hi = form[2] if len(form) > 2 else domain.set_hi
            return ("set", lo, hi)
        if head == "record":
            fields = []
            for f in form[1:]:
                fields.append((f[0], _parse_value_spec(f[1:] if len(f) > 2 else f[1], domain)))
            return ("record", tuple(fields))
        raise ScriptError(f"unknown value spec {form!r}")
    if form == "color":
        return ("color",)
    if form == "bool":
        return ("bool",)
    if form == "int":
        return ("int", domain.int_lo, domain.int_hi)
    if form == "set":
        return ("set", domain.set_lo, domain.set_hi)
    if form == "index":
        return ("index",)
    raise ScriptError(f"unknown value spec {form!r}")


def parse_var_specs(forms, domain: Domain) -> List[VarSpec]:
    out = []
    for form in forms:
        name = form[0]
        kind = form[1]
        if kind in ("array", "family"):
            length = form[2]
            spec = _parse_value_spec(form[3] if len(form) == 4 else list(form[3:]), domain)
            out.append(VarSpec(name, kind, spec, length))
        elif kind == "record":
            fields = []
            for f in form[2:]:
                fields.append((f[0], _parse_value_spec(f[1] if len(f) == 2 else list(f[1:]), domain)))
            out.append(VarSpec(name, "scalar", ("record", tuple(fields))))
        else:
            spec = _parse_value_spec(form[1] if len(form) == 2 else list(form[1:]), domain)
            out.append(VarSpec(name, "scalar", spec))
    return out


def _enum_values(spec, ienv) -> List[Value]:
    kind = spec[0]
    if kind == "int":
        lo, hi = _eval_int(spec[1], ienv), _eval_int(spec[2], ienv)
        return [VInt(x) for x in range(lo, hi)]
    if kind == "color":
        return [VColor("white"), VColor("black")]
    if kind == "bool":
        return [VBool(False), VBool(True)]
    if kind == "set":
        lo, hi = _eval_int(spec[1], ienv), _eval_int(spec[2], ienv)
        universe = list(range(lo, hi))
        out = []
        for mask in range(1 << len(universe)):
            out.append(VSet(frozenset(x for i, x in enumerate(universe) if mask >> i & 1)))
        return out
    if kind == "record":
        lists = [_enum_values(fs, ienv) for _, fs in spec[1]]
        return [canon_value(VTup(combo)) for combo in iproduct(*lists)]
    raise ScriptError(f"cannot enumerate {spec!r}")


@dataclass
class StateSpace:
    specs: List[VarSpec]
    aliases: Dict[str, str]
    constants: frozenset = frozenset({"n"})

    def record_fields(self) -> Dict[str, tuple]:
        out = {}
        for vs in self.specs:
            spec = vs.spec
            if spec[0] == "record":
                out[vs.name] = tuple(fn for fn, _ in spec[1])
        return out

    def size(self, n: int, params: Dict[str, int]) -> int:
        ienv = {"n": n, **params}
        total = 1
        for vs in self.specs:
            if vs.kind == "scalar":
                total *= len(_enum_values(vs.spec, ienv))
            else:
                length = _eval_int(vs.length, ienv)
                if vs.spec[0] == "index":
                    continue
                total *= len(_enum_values(vs.spec, ienv)) ** length
        return total

    def states(self, n: int, params: Dict[str, int]):
        ienv = {"n": n, **params}
        names, pools = [], []
        for vs in self.specs:
            if vs.kind == "scalar":
                names.append((vs.name, "scalar"))
                pools.append(_enum_values(vs.spec, ienv))
            else:
                length = _eval_int(vs.length, ienv)
                if vs.spec[0] == "index":
                    names.append((vs.name, vs.kind))
                    pools.append([tuple(VInt(k) for k in range(length))])
                    continue
                elems = _enum_values(vs.spec, ienv)
                names.append((vs.name, vs.kind))
                pools.append([tuple(c) for c in iproduct(elems, repeat=length)])
        for combo in iproduct(*pools):
            yield {name: val for (name, _), val in zip(names, combo)}

    def env(self, state: Dict, n: int, params: Dict[str, int]) -> Env:
        env = Env(aliases=dict(self.aliases))
        env.scalars["n"] = VInt(n)
        for k, v in params.items():
            env.scalars[k] = VInt(v)
        recs = self.record_fields()
        for vs in self.specs:
            val = state.get(vs.name)
            if val is None:
                continue
            if vs.kind == "scalar":
                env.scalars[vs.name] = val
            elif vs.kind == "array":
                env.scalars[vs.name] = canon_value(VTup(tuple(val)))
            else:
                env.families[vs.name] = tuple(val)
        env.recfields.update(recs)
        # extra scalars written back by modules (post states)
        for k, v in state.items():
            if k not in env.scalars and k not in env.families and not k.startswith("_"):
                if isinstance(v, tuple):
                    env.families.setdefault(k, v)
                else:
                    env.scalars.setdefault(k, v)
        extra_recs = state.get("_recfields")
        if extra_recs:
            for k, v in extra_recs.items():
                env.recfields.setdefault(k, v)
        return env


# ---------------------------------------------------------------------------
# Module input/output against a state
# ---------------------------------------------------------------------------


def _resolve_name(space: StateSpace, name: str) -> str:
    seen = set()
    while name in space.aliases and name not in seen:
        seen.add(name)
        target = space.aliases[name]
        if "." in target:
            return name  # dotted aliases never name module ports
        name = target
    return name


def _module_input_value(space, state, params, n, focus, name, span=None) -> Value:
    name = _resolve_name(space, name)
    if name == "n":
        return VInt(n)
    if name in params:
        return VInt(params[name])
    if name in state:
        val = state[name]
        kinds = {vs.name: vs.kind for vs in space.specs}
        kind = kinds.get(name, "family" if isinstance(val, tuple) else "scalar")
        if kind == "array":
            return canon_value(VTup(tuple(val)))
        if kind == "family":
            if focus is None or not (0 <= focus < len(val)):
                raise ProofError(f"family {name} needs a focus index")
            return val[focus]
        return val
    raise ProofError(f"module input {name!r} not present in the state space")


def _module_inputs(space, state, params, n, focus, m: A.Module):
    def pack(decls):
        if not decls:
            return canon_value(VTup(()))
        vals = [_module_input_value(space, state, params, n, focus, d.name) for d in decls]
        return canon_value(VTup(tuple(vals)))

    return pack(m.listen), pack(m.read)


def _writeback(space, state, params, n, focus, m: A.Module, east: Value, south: Value):
    """Post state after the module writes its outputs; framed vars copied."""
    new = dict(state)
    mutated = []

    def unpack(decls, value):
        value = canon_value(value)
        if not decls:
            return []
        if len(decls) == 1:
            return [value]
        assert isinstance(value, VTup) and len(value.items) == len(decls)
        return list(value.items)

    recfields = dict(state.get("_recfields", {}))
    kinds = {vs.name: vs.kind for vs in space.specs}
    for decls, value in ((m.speak, east), (m.write, south)):
        for d, v in zip(decls, unpack(decls, value)):
            name = _resolve_name(space, d.name)
            if d.form == "record":
                recfields[name] = tuple(d.fields)
            if name == "n":
                if v != VInt(n):
                    mutated.append((d.name, v))
                continue
            if name in params:
                if v != VInt(params[name]):
                    mutated.append((d.name, v))
                continue
            cur = new.get(name)
            kind = kinds.get(name, "family" if isinstance(cur, tuple) else "scalar")
            if kind == "family":
                lst = list(cur) if cur is not None else []
                if focus is None:
                    raise ProofError(f"family {name} needs a focus index")
                if focus == len(lst):
                    lst.append(v)
                elif 0 <= focus < len(lst):
                    lst[focus] = v
                else:
                    raise ProofError(f"focus {focus} out of range for family {name}")
                new[name] = tuple(lst)
            elif kind == "array":
                items = v.items if isinstance(v, VTup) else (() if v == canon_value(VTup(())) else (v,))
                new[name] = tuple(items)
            else:
                new[name] = v
    if recfields:
        new["_recfields"] = recfields
    return new, mutated


# ---------------------------------------------------------------------------
# Verdicts and reports
# ---------------------------------------------------------------------------


@dataclass
class Verdict:
    status: str  # valid | counterexample | shape-mismatch | formula-mismatch |
    #              side-condition-failed | variable-mutated | error
    detail: str = ""
    enumerated: int = 0
    discharged: int = 0
    witness: Optional[dict] = None

    @property
    def ok(self):
        return self.status == "valid"


@dataclass
class NodeResult:
    name: str
    rule: str
    n: int
    verdict: Verdict
    elapsed: float = 0.0


@dataclass
class Report:
    results: List[NodeResult] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return all(r.verdict.ok for r in self.results)

    def first_failure(self) -> Optional[NodeResult]:
        for r in self.results:
            if not r.verdict.ok:
                return r
        return None

    def summary_lines(self) -> List[str]:
        lines = []
        for r in self.results:
            v = r.verdict
            extra = f" states={v.enumerated} checked={v.discharged}" if v.enumerated else ""
            detail = f" -- {v.detail}" if v.detail and not v.ok else ""
            lines.append(
                f"[{'PASS' if v.ok else 'FAIL'}] n={r.n} {r.rule:<12} {r.name}"
                f" ({r.elapsed:.2f}s{extra}) {v.status}{detail}"
            )
        return lines


def _witness_text(state, params, extra=""):
    parts = []
    for k, v in sorted(state.items()):
        if k.startswith("_"):
            continue
        parts.append(f"{k}={_short_value(v)}")
    ptxt = " ".join(f"{k}={v}" for k, v in sorted(params.items()))
    return f"{ptxt} | {' '.join(parts)}{extra}"


def _short_value(v):
    from .iface import value_to_str

    if isinstance(v, tuple):
        return "[" + ",".join(value_to_str(x) for x in v) + "]"
    return value_to_str(v)


# ---------------------------------------------------------------------------
# Script model
# ---------------------------------------------------------------------------


@dataclass
class ProofNode:
    rule: str
    name: str
    attrs: Dict[str, object]
    children: List["ProofNode"]


@dataclass
class Triple:
    contour: Optional[Contour]
    pre: Formula
    pre_params: Dict[str, int]
    post: Formula
    post_params: Dict[str, int]
    program: Optional[A.Program]


@dataclass
class Script:
    title: str
    domain: Domain
    aliases: Dict[str, str]
    var_forms: list
    formulas: Dict[str, str]
    programs: Dict[str, A.Program]
    proof: Optional[ProofNode]
    lemmas: List[ProofNode]
    constants: frozenset = frozenset({"n"})

    def space(self, var_forms=None) -> StateSpace:
        forms = var_forms if var_forms is not None else self.var_forms
        return StateSpace(parse_var_specs(forms, self.domain), self.aliases, self.constants)

    def expand(self, text: str) -> str:
        return _expand_refs(text, self.formulas)

    def formula(self, text: str) -> Formula:
        f = parse_formula(self.expand(text))
        return _unprime_constants(f, self.constants)


def _unprime_constants(f: Formula, constants) -> Formula:
    return _transform_vars(
        f, lambda t: TVar(t.name, False) if t.primed and t.name in constants else t
    )


_REF_RE = re.compile(r"\$([A-Za-z_][A-Za-z0-9_]*)")


def _expand_refs(text: str, table: Dict[str, str], seen=()) -> str:
    def sub(m):
        name = m.group(1)
        if name in seen:
            raise ScriptError(f"cyclic formula reference ${name}")
        if name not in table:
            raise ScriptError(f"unknown formula reference ${name}")
        return "(" + _expand_refs(table[name], table, seen + (name,)) + ")"

    return _REF_RE.sub(sub, text)


def parse_script(
    text: str,
    base_dir: Optional[str] = None,
    extra_sources: Optional[Dict[str, str]] = None,
) -> Script:
    forms = parse_sexprs(text)
    if len(forms) != 1 or forms[0][0] != "script":
        raise ScriptError("a proof script is a single (script ...) form")
    title = ""
    domain = Domain()
    aliases: Dict[str, str] = {}
    var_forms: list = []
    formulas: Dict[str, str] = {}
    prog_env: Dict[str, A.Program] = {}
    proof = None
    lemmas: List[ProofNode] = []
    constants = {"n"}
    for form in forms[0][1:]:
        head = form[0]
        if head == "title":
            title = _text(form[1])
        elif head == "domain":
            for entry in form[1:]:
                key = entry[0]
                if key == "n":
                    lo, hi = int(entry[1]), int(entry[2])
                    domain = replace(domain, n_values=tuple(range(lo, hi + 1)))
                elif key == "max-states":
                    domain = replace(domain, max_states=int(entry[1]))
                elif key == "branch-limit":
                    domain = replace(domain, branch_limit=int(entry[1]))
                else:
                    raise ScriptError(f"unknown domain entry {key!r}")
        elif head == "constants":
            constants.update(str(x) for x in form[1:])
        elif head == "aliases":
            for entry in form[1:]:
                aliases[str(entry[0])] = str(entry[1])
        elif head == "vars":
            var_forms = form[1:]
        elif head == "formula":
            formulas[str(form[1])] = _text(form[2])
        elif head == "source":
            fname = _text(form[1])
            src = None
            if extra_sources and fname in extra_sources:
                src = extra_sources[fname]
            elif base_dir is not None and (Path(base_dir) / fname).exists():
                src = (Path(base_dir) / fname).read_text()
            elif Path(fname).exists():
                src = Path(fname).read_text()
            if src is None:
                raise ScriptError(f"cannot find program source {fname!r}")
            sf = parse_source(src, fname)
            for name, p in sf.defs:
                prog_env[name] = p
        elif head == "program":
            name = str(form[1])
            src = _text(form[2])
            sf = parse_source(src, f"<program {name}>")
            prog_env[name] = sf.entry() if sf.program is not None else sf.defs[0][1]
        elif head == "proof":
            proof = _parse_node(form[1])
        elif head == "lemma":
            lemmas.append(_parse_node(form))
        elif head == "obligation":
            lemmas.append(_parse_node(form[1]))
        else:
            raise ScriptError(f"unknown script section {head!r}")
    # resolve all programs against the collected environment
    resolved = {}
    for name in prog_env:
        resolved[name] = A.resolve(A.PRef(name), prog_env)
    return Script(
        title, domain, aliases, var_forms, formulas, resolved, proof, lemmas, frozenset(constants)
    )


_RULES = {
    "basic", "hcomp", "vcomp", "dcomp", "if", "autowhile-t", "autowhile-s",
    "stwhile", "simplefor", "implication", "lemma",
}


def _parse_node(form) -> ProofNode:
    rule = str(form[0])
    if rule not in _RULES:
        raise ScriptError(f"unknown rule {rule!r}")
    attrs: Dict[str, object] = {}
    children: List[ProofNode] = []
    i = 1
    while i < len(form):
        item = form[i]
        if isinstance(item, str) and item.startswith(":"):
            attrs[item[1:]] = form[i + 1]
            i += 2
        elif isinstance(item, list):
            children.append(_parse_node(item))
            i += 1
        else:
            raise ScriptError(f"unexpected item {item!r} in ({rule} ...)")
    name = _text(attrs.get("name", ("str", rule)))
    return ProofNode(rule, name, attrs, children)


def _params_of(attr, n: int) -> Dict[str, int]:
    out = {}
    if attr is None:
        return out
    for entry in attr:
        out[str(entry[0])] = _eval_int(entry[1], {"n": n})
    return out


# ---------------------------------------------------------------------------
# Checking
# ---------------------------------------------------------------------------


class _Checker:
    def __init__(self, script: Script, domain: Optional[Domain] = None, progress=None):
        self.script = script
        self.domain = domain or script.domain
        self.report = Report()
        self.progress = progress

    # -- helpers ---------------------------------------------------------

    def _contour(self, node: ProofNode, n: int, extra=None) -> Optional[Contour]:
        text = node.attrs.get("contour")
        if text is None:
            return None
        env = {"n": n}
        env.update(extra or {})
        return parse_contour(_text(text), env)

    def _formula(self, node: ProofNode, key: str, default: Optional[str] = None) -> Formula:
        text = node.attrs.get(key)
        if text is None:
            if default is None:
                raise ScriptError(f"({node.rule} {node.name}) is missing :{key}")
            return self.script.formula(default)
        return self.script.formula(_text(text))

    def _space_for(self, node: ProofNode) -> StateSpace:
        if "vars" in node.attrs:
            return self.script.space(node.attrs["vars"])
        return self.script.space()

    def _program(self, node: ProofNode) -> Optional[A.Program]:
        name = node.attrs.get("program")
        if name is None:
            return None
        name = str(name)
        if name not in self.script.programs:
            raise ScriptError(f"unknown program {name!r} in ({node.rule} {node.name})")
        return self.script.programs[name]

    def _record(self, node: ProofNode, n: int, verdict: Verdict, elapsed: float):
        self.report.results.append(NodeResult(node.name, node.rule, n, verdict, elapsed))
        if self.progress:
            self.progress(self.report.results[-1])

    # -- enumeration cores -------------------------------------------------

    def _discharge_basic(
        self, node, space, module, n, focus, pre, pre_params, post, post_params
    ) -> Verdict:
        size = space.size(n, pre_params)
        if size > self.domain.max_states:
            return Verdict("error", f"search space too large: {size}")
        cfg = RunConfig()
        pre_c = compile_formula(pre)
        post_c = compile_formula(post)
        outcome_cache: Dict[tuple, frozenset] = {}
        enumerated = discharged = 0
        for state in space.states(n, pre_params):
            enumerated += 1
            env_pre = space.env(state, n, pre_params)
            try:
                if not pre_c(env_pre, None, {}):
                    continue
            except Exception as e:
                return Verdict("error", f"pre-formula evaluation failed: {e}")
            discharged += 1
            tin, sin = _module_inputs(space, state, pre_params, n, focus, module)
            key = (tin, sin)
            outs = outcome_cache.get(key)
            if outs is None:
                outs = frozenset(
                    module_outcomes(module, tin, sin, cfg, limit=self.domain.branch_limit)
                )
                outcome_cache[key] = outs
            for east, south in outs:
                post_state, mutated = _writeback(
                    space, state, pre_params, n, focus, module, east, south
                )
                if mutated:
                    return Verdict(
                        "variable-mutated",
                        f"module changed {mutated[0][0]} to {_short_value(mutated[0][1])}",
                        enumerated,
                        discharged,
                        {"state": state},
                    )
                env_post = space.env(post_state, n, post_params)
                try:
                    okay = post_c(env_pre, env_post, {})
                except Exception as e:
                    return Verdict("error", f"post-formula evaluation failed: {e}")
                if not okay:
                    return Verdict(
                        "counterexample",
                        _witness_text(state, pre_params, " => " + _witness_text(post_state, post_params)),
                        enumerated,
                        discharged,
                        {"state": state, "post": post_state},
                    )
        return Verdict("valid", "", enumerated, discharged)

    def _check_state_implication(
        self, space, n, ante, ante_params, cons, cons_params
    ) -> Verdict:
        size = space.size(n, ante_params)
        if size > self.domain.max_states:
            return Verdict("error", f"search space too large: {size}")
        ante_c = compile_formula(ante)
        cons_c = compile_formula(cons)
        enumerated = discharged = 0
        for state in space.states(n, ante_params):
            enumerated += 1
            env_a = space.env(state, n, ante_params)
            try:
                if not ante_c(env_a, None, {}):
                    continue
            except Exception as e:
                return Verdict("error", f"formula evaluation failed: {e}")
            discharged += 1
            env_c = space.env(state, n, cons_params)
            if not cons_c(env_c, None, {}):
                return Verdict(
                    "side-condition-failed",
                    _witness_text(state, ante_params),
                    enumerated,
                    discharged,
                    {"state": state},
                )
        return Verdict("valid", "", enumerated, discharged)

    # -- seam/shape helpers --------------------------------------------------

    def _seam_match(self, post_triple: Triple, pre_triple: Triple) -> Optional[str]:
        """post of one premise connects to pre of the next (prime-stripped)."""
        if not is_fully_primed(post_triple.post, self.script.constants):
            return "premise post-condition is not fully primed"
        if post_triple.post_params != pre_triple.pre_params:
            return (
                f"parameters differ across the seam: {post_triple.post_params} vs "
                f"{pre_triple.pre_params}"
            )
        if not formulas_equal(strip_primes(post_triple.post), pre_triple.pre):
            return "middle condition differs between the premises"
        return None

    # -- rule checks -------------------------------------------------------

    def check_node(self, node: ProofNode, n: int) -> Optional[Triple]:
        t0 = time.time()
        try:
            triple = self._check_node_inner(node, n)
        except (ScriptError, ProofError, ContourError) as e:
            self._record(node, n, Verdict("error", str(e)), time.time() - t0)
            return None
        if triple is not None and "as-contour" in node.attrs:
            # the conclusion re-grained for the enclosing rule (same borders,
            # coarser unit lines); formulas are granularity-independent
            triple = replace(
                triple, contour=parse_contour(_text(node.attrs["as-contour"]), {"n": n})
            )
        return triple

    def _check_node_inner(self, node: ProofNode, n: int) -> Optional[Triple]:
        t0 = time.time()
        rule = node.rule
        if rule == "lemma":
            space = self._space_for(node)
            f = self._formula(node, "formula")
            params = _params_of(node.attrs.get("params"), n)
            v = self._check_state_implication(space, n, TRUE_F, {}, f, params)
            if v.ok:
                # re-run counting only satisfying antecedents when formula is an implication
                pass
            self._record(node, n, v, time.time() - t0)
            return None

        if rule == "basic":
            return self._check_basic_node(node, n, t0)
        if rule == "simplefor":
            return self._check_simplefor(node, n, t0)
        if rule == "implication":
            return self._check_implication(node, n, t0)
        if rule == "stwhile":
            return self._check_stwhile(node, n, t0)
        if rule in ("hcomp", "vcomp", "dcomp"):
            return self._check_comp(node, n, t0)
        if rule == "if":
            return self._check_if(node, n, t0)
        if rule in ("autowhile-t", "autowhile-s"):
            return self._check_autowhile(node, n, t0)
        raise ScriptError(f"unhandled rule {rule}")

    def _triple(self, node: ProofNode, n: int, program, extra_env=None) -> Triple:
        return Triple(
            contour=self._contour(node, n, extra_env),
            pre=self._formula(node, "pre"),
            pre_params=_params_of(node.attrs.get("pre-params"), n),
            post=self._formula(node, "post"),
            post_params=_params_of(node.attrs.get("post-params"), n),
            program=program,
        )

    def _check_basic_node(self, node: ProofNode, n: int, t0) -> Optional[Triple]:
        program = self._program(node)
        if not isinstance(program, A.PModule):
            self._record(node, n, Verdict("shape-mismatch", "basic rule applies to a module"), 0)
            return None
        triple = self._triple(node, n, program)
        if triple.contour is not None and (triple.contour.k != 1 or triple.contour.l != 1):
            self._record(
                node, n, Verdict("shape-mismatch", "basic contour focus must be (N E)"), 0
            )
            return None
        space = self._space_for(node)
        # optional parameter sweep: (:forall ((name lo hi) ...)) checks every combination
        sweeps = node.attrs.get("forall")
        param_sets = [({}, {})]
        if sweeps is not None:
            param_sets = []
            names = [str(s[0]) for s in sweeps]
            ranges = [
                range(_eval_int(s[1], {"n": n}), _eval_int(s[2], {"n": n})) for s in sweeps
            ]
            for combo in iproduct(*ranges):
                d = dict(zip(names, combo))
                param_sets.append((d, d))
        total = Verdict("valid")
        for extra_pre, extra_post in param_sets:
            pre_params = {**triple.pre_params, **extra_pre}
            post_params = {**triple.post_params, **extra_post}
            focus_expr = node.attrs.get("at")
            focus = (
                _eval_int(focus_expr, {"n": n, **pre_params}) if focus_expr is not None else None
            )
            v = self._discharge_basic(
                node, space, program.module, n, focus,
                triple.pre, pre_params, triple.post, post_params,
            )
            total.enumerated += v.enumerated
            total.discharged += v.discharged
            if not v.ok:
                v.enumerated, v.discharged = total.enumerated, total.discharged
                self._record(node, n, v, time.time() - t0)
                return None
        self._record(node, n, total, time.time() - t0)
        return triple

    def _check_simplefor(self, node: ProofNode, n: int, t0) -> Optional[Triple]:
        program = self._program(node)
        if not isinstance(program, A.PForS):
            self._record(node, n, Verdict("shape-mismatch", "simplefor applies to for_s"), 0)
            return None
        var = str(node.attrs.get("var", program.var))
        if var != program.var:
            self._record(node, n, Verdict("shape-mismatch", f"counter is {program.var!r}"), 0)
            return None
        lo = _eval_int(node.attrs.get("from", 0), {"n": n})
        hi = _eval_int(node.attrs.get("to", "n"), {"n": n})
        if not isinstance(program.init, A.EInt) or program.init.v != lo:
            self._record(node, n, Verdict("shape-mismatch", "for_s start differs from :from"), 0)
            return None
        if not self._bound_matches(program.bound, hi, n):
            self._record(node, n, Verdict("shape-mismatch", "for_s bound differs from :to"), 0)
            return None
        body = program.body
        if not isinstance(body, A.PModule):
            self._record(node, n, Verdict("shape-mismatch", "for_s body must be a module"), 0)
            return None
        if var in _assigned_names(body.module.body):
            self._record(
                node, n, Verdict("variable-mutated", f"{var} is assigned inside the body"), 0
            )
            return None
        space = self._space_for(node)
        contour = self._contour(node, n)
        schema_text = node.attrs.get("formula")
        if schema_text is not None:
            schema = self.script.formula(_text(schema_text))
            total_enum = total_chk = 0
            a = hi - lo
            if contour is not None and a > 0 and contour.l % a != 0:
                self._record(
                    node, n,
                    Verdict("shape-mismatch", "conclusion east exponent is not a multiple of a"),
                    time.time() - t0,
                )
                return None
            for j in range(lo, hi):
                # premise j gets contour tau (E^l)^j (N^k E^l) (E^l)^(a-j-1) sigma
                primed = _unprime_constants(prime_all(schema), self.script.constants)
                v = self._discharge_basic(
                    node, space, body.module, n, j, schema, {var: j}, primed, {var: j + 1}
                )
                total_enum += v.enumerated
                total_chk += v.discharged
                if not v.ok:
                    v.detail = f"{var}={j}: {v.detail}"
                    self._record(node, n, v, time.time() - t0)
                    return None
            self._record(
                node, n, Verdict("valid", "", total_enum, total_chk), time.time() - t0
            )
            return Triple(
                contour, schema, {var: lo},
                _unprime_constants(prime_all(schema), self.script.constants), {var: hi}, program,
            )
        # explicit premises: verify the chain and each child
        triples = [self.check_node(ch, n) for ch in node.children]
        if any(t is None for t in triples):
            self._record(node, n, Verdict("error", "a premise failed"), time.time() - t0)
            return None
        for j, t in enumerate(triples):
            if t.pre_params.get(var) != lo + j or t.post_params.get(var) != lo + j + 1:
                self._record(
                    node, n,
                    Verdict("formula-mismatch", f"chain broken at position {j}"),
                    time.time() - t0,
                )
                return None
            if j + 1 < len(triples):
                err = self._seam_match(t, triples[j + 1])
                if err:
                    self._record(
                        node, n,
                        Verdict("formula-mismatch", f"chain broken at position {j}: {err}"),
                        time.time() - t0,
                    )
                    return None
        self._record(node, n, Verdict("valid"), time.time() - t0)
        first, last = triples[0], triples[-1]
        return Triple(contour, first.pre, first.pre_params, last.post, last.post_params, program)

    def _bound_matches(self, bound: A.Expr, hi: int, n: int) -> bool:
        if isinstance(bound, A.EInt):
            return bound.v == hi
        if isinstance(bound, A.EVar):
            resolved = _resolve_name(self.script.space(), bound.name)
            return resolved == "n" and hi == n
        return False

    def _check_implication(self, node: ProofNode, n: int, t0) -> Optional[Triple]:
        if len(node.children) != 1:
            self._record(node, n, Verdict("shape-mismatch", "implication takes one premise"), 0)
            return None
        child = self.check_node(node.children[0], n)
        if child is None:
            self._record(node, n, Verdict("error", "premise failed"), time.time() - t0)
            return None
        triple = self._triple(node, n, child.program)
        space = self._space_for(node)
        v1 = self._check_state_implication(
            space, n, triple.pre, triple.pre_params, child.pre, child.pre_params
        )
        if not v1.ok:
            v1.detail = f"pre-strengthening failed: {v1.detail}"
            self._record(node, n, v1, time.time() - t0)
            return None
        if not (
            is_fully_primed(child.post, self.script.constants)
            and is_fully_primed(triple.post, self.script.constants)
        ):
            self._record(
                node, n,
                Verdict("error", "implication sides must be state formulas (fully primed posts)"),
                time.time() - t0,
            )
            return None
        v2 = self._check_state_implication(
            space, n,
            strip_primes(child.post), child.post_params,
            strip_primes(triple.post), triple.post_params,
        )
        if not v2.ok:
            v2.detail = f"post-weakening failed: {v2.detail}"
            self._record(node, n, v2, time.time() - t0)
            return None
        self._record(
            node, n,
            Verdict("valid", "", v1.enumerated + v2.enumerated, v1.discharged + v2.discharged),
            time.time() - t0,
        )
        return triple

    def _guard_formula(self, cond: A.Expr) -> Formula:
        return _expr_to_formula(cond)

    def _check_stwhile(self, node: ProofNode, n: int, t0) -> Optional[Triple]:
        program = self._program(node)
        if not isinstance(program, A.PWhileST):
            self._record(node, n, Verdict("shape-mismatch", "stwhile applies to while_st"), 0)
            return None
        if len(node.children) != 1:
            self._record(node, n, Verdict("shape-mismatch", "stwhile takes one premise"), 0)
            return None
        child = self.check_node(node.children[0], n)
        if child is None:
            self._record(node, n, Verdict("error", "premise failed"), time.time() - t0)
            return None
        guard = self._guard_formula(program.cond)
        if "cond" in node.attrs:
            declared = self.script.formula(_text(node.attrs["cond"]))
            if not formulas_equal(declared, guard):
                self._record(
                    node, n, Verdict("formula-mismatch", "declared :cond differs from the guard"),
                    time.time() - t0,
                )
                return None
        inv = self._formula(node, "inv")
        if child.program is not None and child.program != program.body:
            self._record(
                node, n, Verdict("shape-mismatch", "premise program is not the loop body"),
                time.time() - t0,
            )
            return None
        if not formulas_equal(child.pre, FAnd((inv, guard))):
            self._record(
                node, n,
                Verdict("formula-mismatch", "premise pre-condition is not Inv && Cond"),
                time.time() - t0,
            )
            return None
        # side condition: premise post implies Inv
        space = self._space_for(node)
        v = self._check_state_implication(
            space, n, strip_primes(child.post), child.post_params, inv, child.post_params
        )
        if not v.ok:
            v.detail = f"C' -> Inv failed: {v.detail}"
            self._record(node, n, v, time.time() - t0)
            return None
        conclusion_post = prime_all(
            _unprime_constants(FAnd((inv, FNot(guard))), self.script.constants)
        )
        declared = self._triple(node, n, program)
        if not formulas_equal(declared.pre, inv) or not formulas_equal(
            declared.post, conclusion_post
        ):
            self._record(
                node, n,
                Verdict("formula-mismatch", "declared conclusion differs from the rule's"),
                time.time() - t0,
            )
            return None
        self._record(node, n, Verdict("valid", "", v.enumerated, v.discharged), time.time() - t0)
        return declared

    def _check_comp(self, node: ProofNode, n: int, t0) -> Optional[Triple]:
        kinds = {"hcomp": A.PHComp, "vcomp": A.PVComp, "dcomp": A.PDComp}
        klass = kinds[node.rule]
        program = self._program(node)
        if program is not None and not isinstance(program, klass):
            self._record(node, n, Verdict("shape-mismatch", f"{node.rule} program kind"), 0)
            return None
        if len(node.children) != 2:
            self._record(node, n, Verdict("shape-mismatch", f"{node.rule} takes two premises"), 0)
            return None
        t1 = self.check_node(node.children[0], n)
        t2 = self.check_node(node.children[1], n)
        if t1 is None or t2 is None:
            self._record(node, n, Verdict("error", "a premise failed"), time.time() - t0)
            return None
        if program is not None:
            left_ok = self._program_matches(program.left, t1.program, node.children[0])
            right_ok = self._program_matches(program.right, t2.program, node.children[1])
            if not (left_ok and right_ok):
                self._record(
                    node, n, Verdict("shape-mismatch", "premise programs are not the operands"),
                    time.time() - t0,
                )
                return None
        err = self._seam_match(t1, t2)
        if err:
            self._record(node, n, Verdict("formula-mismatch", err), time.time() - t0)
            return None
        serr = self._comp_shapes(node.rule, t1.contour, t2.contour, self._contour(node, n))
        if serr:
            self._record(node, n, Verdict("shape-mismatch", serr), time.time() - t0)
            return None
        triple = self._triple(node, n, program)
        if not (
            formulas_equal(triple.pre, t1.pre)
            and triple.pre_params == t1.pre_params
            and formulas_equal(triple.post, t2.post)
            and triple.post_params == t2.post_params
        ):
            self._record(
                node, n, Verdict("formula-mismatch", "conclusion differs from premises"),
                time.time() - t0,
            )
            return None
        self._record(node, n, Verdict("valid"), time.time() - t0)
        return triple

    def _program_matches(self, expected, got, child_node: ProofNode) -> bool:
        if got is None:
            return True  # the child rule did not bind a program (e.g. lemma-backed)
        if expected == got:
            return True
        # allow the child to refer to the same program through a regrained contour
        return False

    def _comp_shapes(self, rule, c1, c2, concl) -> Optional[str]:
        if c1 is None or c2 is None or concl is None:
            return None  # contours are optional bookkeeping
        if rule == "dcomp":
            for c in (c2, concl):
                if (c.tau, c.k, c.l, c.sigma) != (c1.tau, c1.k, c1.l, c1.sigma):
                    return "diagonal premises and conclusion must share one contour shape"
            return None
        if rule == "hcomp":
            # premise1: tau (N^k E^l) E^m sigma ; premise2: tau E^l (N^k E^m) sigma
            if c1.k != c2.k or c1.k != concl.k:
                return "vertical focus exponents disagree"
            m = c2.l
            if concl.l != c1.l + m:
                return "conclusion east exponent is not l+m"
            if _norm_segs(c2.tau) != _norm_segs(c1.tau + (("E", c1.l),)):
                return "premise-2 prefix must extend premise-1's by E^l"
            if _norm_segs(c1.sigma) != _norm_segs((("E", m),) + c2.sigma):
                return "premise-1 suffix must start with E^m"
            if _norm_segs(concl.tau) != _norm_segs(c1.tau) or _norm_segs(concl.sigma) != _norm_segs(c2.sigma):
                return "conclusion tau/sigma differ from the premises'"
            return None
        if rule == "vcomp":
            if c1.l != c2.l or c1.l != concl.l:
                return "horizontal focus exponents disagree"
            if concl.k != c1.k + c2.k:
                return "conclusion north exponent is not k1+k2"
            if _norm_segs(c1.tau) != _norm_segs(concl.tau + (("N", c2.k),)):
                return "premise-1 prefix must extend the conclusion's by N^k2"
            if _norm_segs(c2.sigma) != _norm_segs((("N", c1.k),) + concl.sigma):
                return "premise-2 suffix must start with N^k1"
            return None
        return None

    def _check_if(self, node: ProofNode, n: int, t0) -> Optional[Triple]:
        program = self._program(node)
        if not isinstance(program, A.PIf):
            self._record(node, n, Verdict("shape-mismatch", "if rule applies to if"), 0)
            return None
        if len(node.children) != 2:
            self._record(node, n, Verdict("shape-mismatch", "if takes two premises"), 0)
            return None
        t1 = self.check_node(node.children[0], n)
        t2 = self.check_node(node.children[1], n)
        if t1 is None or t2 is None:
            self._record(node, n, Verdict("error", "a premise failed"), time.time() - t0)
            return None
        cond = self._guard_formula(program.cond)
        triple = self._triple(node, n, program)
        if not formulas_equal(t1.pre, FAnd((triple.pre, cond))):
            self._record(node, n, Verdict("formula-mismatch", "then-premise pre is not C && Cond"), time.time() - t0)
            return None
        if not formulas_equal(t2.pre, FAnd((triple.pre, FNot(cond)))):
            self._record(node, n, Verdict("formula-mismatch", "else-premise pre is not C && !Cond"), time.time() - t0)
            return None
        if not (formulas_equal(t1.post, triple.post) and formulas_equal(t2.post, triple.post)):
            self._record(node, n, Verdict("formula-mismatch", "branch posts differ"), time.time() - t0)
            return None
        self._record(node, n, Verdict("valid"), time.time() - t0)
        return triple

    def _check_autowhile(self, node: ProofNode, n: int, t0) -> Optional[Triple]:
        from .iface import is_nil_type, canon_type
        from .typecheck import infer_type

        program = self._program(node)
        want = A.PWhileT if node.rule == "autowhile-t" else A.PWhileS
        if not isinstance(program, want):
            self._record(node, n, Verdict("shape-mismatch", f"{node.rule} program kind"), 0)
            return None
        body = expand_for_s(program.body)
        bt = infer_type(body)
        dummy = (
            is_nil_type(canon_type(bt.w)) and is_nil_type(canon_type(bt.e))
            if node.rule == "autowhile-t"
            else is_nil_type(canon_type(bt.n)) and is_nil_type(canon_type(bt.s))
        )
        if not dummy:
            self._record(
                node, n,
                Verdict("side-condition-failed", "loop body interfaces are not dummy (nil)"),
                time.time() - t0,
            )
            return None
        if len(node.children) != 1:
            self._record(node, n, Verdict("shape-mismatch", "one premise expected"), 0)
            return None
        child = self.check_node(node.children[0], n)
        if child is None:
            self._record(node, n, Verdict("error", "premise failed"), time.time() - t0)
            return None
        guard = self._guard_formula(program.cond)
        inv = self._formula(node, "inv")
        if not formulas_equal(child.pre, FAnd((inv, guard))):
            self._record(node, n, Verdict("formula-mismatch", "premise pre is not Inv && Cond"), time.time() - t0)
            return None
        if not formulas_equal(strip_primes(child.post), inv):
            self._record(node, n, Verdict("formula-mismatch", "premise post is not Inv"), time.time() - t0)
            return None
        triple = Triple(
            self._contour(node, n), inv, child.pre_params,
            prime_all(_unprime_constants(FAnd((inv, FNot(guard))), self.script.constants)),
            child.post_params, program,
        )
        self._record(node, n, Verdict("valid"), time.time() - t0)
        return triple


TRUE_F = parse_formula("true")


def _norm_segs(segs) -> tuple:
    """Merge adjacent same-direction runs; accepts Segments or (dir,count)."""
    out: List[List] = []
    for s in segs:
        d, c = (s.direction, s.count) if hasattr(s, "direction") else s
        if out and out[-1][0] == d:
            out[-1][1] += c
        else:
            out.append([d, c])
    return tuple((d, c) for d, c in out)


def _assigned_names(stmts) -> set:
    out = set()
    for s in stmts:
        if isinstance(s, A.WAssign):
            out.add(s.target.name)
        elif isinstance(s, A.WNew):
            out.add(s.name)
        elif isinstance(s, A.WIf):
            out |= _assigned_names(s.then) | _assigned_names(s.els)
        elif isinstance(s, A.WWhile):
            out |= _assigned_names(s.body)
        elif isinstance(s, A.WFor):
            out.add(s.var)
            out |= _assigned_names(s.body)
    return out


def _expr_to_formula(e: A.Expr) -> Formula:
    """Program boolean expressions as formulas (for guard comparison)."""
    from .formula import FOr, TBin

    def term(x: A.Expr):
        if isinstance(x, A.EInt):
            return TLit(VInt(x.v))
        if isinstance(x, A.EBool):
            return TLit(VBool(x.v))
        if isinstance(x, A.EColor):
            return TLit(VColor(x.name))
        if isinstance(x, A.EVar):
            return TVar(x.name)
        if isinstance(x, A.EField):
            return TField(term(x.base), x.name)
        if isinstance(x, A.EBin) and x.op in ("+", "-", "*"):
            return TBin(x.op, term(x.left), term(x.right))
        raise ProofError(f"guard expression {x!r} has no formula translation")

    if isinstance(e, A.ENot):
        return FNot(_expr_to_formula(e.expr))
    if isinstance(e, A.EBin) and e.op == "&&":
        return FAnd((_expr_to_formula(e.left), _expr_to_formula(e.right)))
    if isinstance(e, A.EBin) and e.op == "||":
        return FOr((_expr_to_formula(e.left), _expr_to_formula(e.right)))
    if isinstance(e, A.EBin) and e.op in ("==", "!=", "<"):
        op = "=" if e.op == "==" else e.op
        return FCmp(op, term(e.left), term(e.right))
    if isinstance(e, A.EBool):
        return FBoolTermLit(e.v)
    raise ProofError(f"guard expression {e!r} has no formula translation")


def FBoolTermLit(v: bool) -> Formula:
    from .formula import FBoolTerm

    return FBoolTerm(TLit(VBool(v)))


# ---------------------------------------------------------------------------
# Entry points
# ---------------------------------------------------------------------------


def check_proof(
    script: Script, domain: Optional[Domain] = None, progress=None
) -> Report:
    """Check every lemma and the proof tree once per ring size in the domain."""
    checker = _Checker(script, domain, progress)
    for n in checker.domain.n_values:
        for lemma in script.lemmas:
            checker.check_node(lemma, n)
        if script.proof is not None:
            checker.check_node(script.proof, n)
    return checker.report


def check_script_text(
    text: str, base_dir=None, extra_sources=None, domain: Optional[Domain] = None, progress=None
) -> Report:
    return check_proof(parse_script(text, base_dir, extra_sources), domain, progress)


# ---------------------------------------------------------------------------
# Empirical soundness harness
# ---------------------------------------------------------------------------


@dataclass
class SoundnessReport:
    scenarios: int = 0
    violations: List[str] = field(default_factory=list)

    @property
    def ok(self):
        return not self.violations


def soundness_harness_module(
    script: Script, node_space: StateSpace, module: A.Module, focus: Optional[int],
    pre: Formula, pre_params: Dict[str, int], post: Formula, post_params: Dict[str, int],
    n: int, domain: Optional[Domain] = None,
) -> SoundnessReport:
    """Enumerate all module scenarios satisfying the pre; assert the post.

    This is the Theorem-1 witness for module-level triples: every scenario
    (every input state and every random branch) that satisfies the input
    condition must satisfy the output condition.
    """
    domain = domain or script.domain
    report = SoundnessReport()
    cfg = RunConfig()
    for state in node_space.states(n, pre_params):
        env_pre = node_space.env(state, n, pre_params)
        if not eval_formula(pre, env_pre):
            continue
        tin, sin = _module_inputs(node_space, state, pre_params, n, focus, module)
        for east, south in module_outcomes(module, tin, sin, cfg, limit=domain.branch_limit):
            report.scenarios += 1
            post_state, mutated = _writeback(
                node_space, state, pre_params, n, focus, module, east, south
            )
            env_post = node_space.env(post_state, n, post_params)
            if mutated or not eval_formula(post, env_pre, env_post):
                report.violations.append(_witness_text(state, pre_params))
    return report
