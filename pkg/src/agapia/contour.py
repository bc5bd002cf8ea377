"""Hoare-assertion contours and bindings against concrete scenarios.

A contour is the pair of staircase lines ``tau (N^k E^l) sigma`` (west-north,
the pre side) and ``tau (E^l N^k) sigma`` (south-east, the post side) around
a focused k x l block.  Horizontal unit lines are indexed from the left,
vertical ones from the top, and an index never changes when the program is
applied: a variable keeps its index and merely moves from the pre line to
the post line.

The implementation covers the two families the corpus proofs use: the plain
rectangle (empty tau/sigma) around a whole scenario, and the single-row
staircase ``(E^l)^j (N^k E^l) (E^l)^(a-j-1)`` that focuses position j of a
row of applications.  Exponents in the concrete syntax may be arithmetic
expressions over instantiation variables, e.g. ``E^j (N E) E^(n-j-1)``.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

from . import ast as A
from .formula import Env, Formula, eval_formula
from .iface import (
    TStarList,
    TStarTuple,
    TTuple,
    Type,
    Value,
    canon_value,
    is_nil_value,
    type_list_items,
)
from .scenario import Scenario


class ContourError(Exception):
    pass


class ContourOutOfBounds(ContourError):
    pass


@dataclass(frozen=True)
class Segment:
    direction: str  # 'N' | 'E'
    count: int

    def __post_init__(self):
        if self.direction not in ("N", "E") or self.count < 1:
            raise ContourError(f"bad segment {self.direction}^{self.count}")


@dataclass(frozen=True)
class Contour:
    tau: Tuple[Segment, ...] = ()
    k: int = 1
    l: int = 1
    sigma: Tuple[Segment, ...] = ()

    def __post_init__(self):
        if self.k < 1 or self.l < 1:
            raise ContourError("focus exponents must be >= 1")

    def east_units(self, which: str) -> int:
        segs = self.tau if which == "tau" else self.sigma
        return sum(s.count for s in segs if s.direction == "E")

    def is_row_staircase(self) -> bool:
        return all(s.direction == "E" for s in self.tau + self.sigma)

    def __str__(self):
        def segs(ss):
            return " ".join(f"{s.direction}^{s.count}" if s.count > 1 else s.direction for s in ss)

        parts = []
        if self.tau:
            parts.append(segs(self.tau))
        focus = ("N" if self.k == 1 else f"N^{self.k}") + " " + ("E" if self.l == 1 else f"E^{self.l}")
        parts.append(f"({focus})")
        if self.sigma:
            parts.append(segs(self.sigma))
        return " ".join(parts)


_SEG_RE = re.compile(r"([NE])(?:\^(\([^()]*\)|[A-Za-z0-9_+\-* ]+?))?(?=\s|$|\(|[NE])")


def _eval_exp(text: str, env: Dict[str, int]) -> int:
    expr = text.strip()
    if expr.startswith("(") and expr.endswith(")"):
        expr = expr[1:-1]
    if not re.fullmatch(r"[A-Za-z0-9_+\-* ()]*", expr):
        raise ContourError(f"bad exponent expression {text!r}")
    try:
        return int(eval(expr, {"__builtins__": {}}, dict(env)))  # arithmetic over ints only
    except Exception as e:
        raise ContourError(f"cannot evaluate exponent {text!r}: {e}")


def _find_focus_group(text: str):
    """Span of the focus (...) group: a paren group not used as an exponent."""
    i = 0
    while i < len(text):
        if text[i] == "(":
            j = i - 1
            while j >= 0 and text[j].isspace():
                j -= 1
            if j < 0 or text[j] != "^":
                depth, k = 0, i
                while k < len(text):
                    if text[k] == "(":
                        depth += 1
                    elif text[k] == ")":
                        depth -= 1
                        if depth == 0:
                            return i, k
                    k += 1
                raise ContourError(f"unbalanced parentheses in contour {text!r}")
            # skip past the exponent group
            depth, k = 0, i
            while k < len(text):
                if text[k] == "(":
                    depth += 1
                elif text[k] == ")":
                    depth -= 1
                    if depth == 0:
                        break
                k += 1
            i = k
        i += 1
    raise ContourError(f"contour {text!r} has no (N^k E^l) focus group")


def parse_contour(text: str, env: Optional[Dict[str, int]] = None) -> Contour:
    """Parse e.g. ``E^j (N E) E^(n-j-1)``; zero exponents drop the segment."""
    env = env or {}
    start, end = _find_focus_group(text)
    before, focus_text, after = text[:start], text[start + 1 : end], text[end + 1 :]

    def parse_segs(part: str) -> Tuple[Segment, ...]:
        out = []
        for d, exp in _SEG_RE.findall(part):
            count = _eval_exp(exp, env) if exp else 1
            if count < 0:
                raise ContourError(f"negative exponent in {part!r}")
            if count > 0:
                out.append(Segment(d, count))
        return tuple(out)

    focus = parse_segs(focus_text)
    if len(focus) != 2 or focus[0].direction != "N" or focus[1].direction != "E":
        raise ContourError(f"focus group must be (N^k E^l), got {focus_text!r}")
    return Contour(parse_segs(before), focus[0].count, focus[1].count, parse_segs(after))


@dataclass
class ContourBinding:
    """Unit-line values: horizontal indexed from left, vertical from top."""

    hlines: List[Value] = field(default_factory=list)
    vlines: List[Value] = field(default_factory=list)

    def line(self, orientation: str, index: int) -> Value:
        lines = self.hlines if orientation == "h" else self.vlines
        if not (0 <= index < len(lines)):
            raise ContourOutOfBounds(f"no {orientation}-line {index}")
        return lines[index]


def bind_contour(c: Contour, s: Scenario, anchor: Tuple[int, int] = (0, 0)):
    """Pre- and post-side bindings of a contour placed on a scenario.

    ``anchor`` is the (row, col) of the focus block's top-left cell.  The
    focus spans k rows and l columns; tau/sigma segments (east-only) extend
    along the same row: tau lines run at the south edge (their programs have
    already been applied), sigma lines at the north edge.
    """
    if not c.is_row_staircase():
        raise ContourError("general tau/sigma with N segments are not supported")
    r0, c0 = anchor
    jl, sl = c.east_units("tau"), c.east_units("sigma")
    if r0 < 0 or c0 - jl < 0 or r0 + c.k > s.rows or c0 + c.l + sl > s.cols:
        raise ContourOutOfBounds(
            f"contour {c} at anchor {anchor} does not fit a {s.rows}x{s.cols} scenario"
        )
    if c.k != s.rows:
        raise ContourOutOfBounds("focus must span all rows of the scenario")

    pre = ContourBinding()
    post = ContourBinding()
    # horizontal lines, left to right
    for col in range(c0 - jl, c0 + c.l + sl):
        if col < c0:  # tau: already applied, at the south edge
            v = s.cells[-1][col].south
            pre.hlines.append(v)
            post.hlines.append(v)
        elif col < c0 + c.l:  # focus block
            pre.hlines.append(s.cells[0][col].north)
            post.hlines.append(s.cells[-1][col].south)
        else:  # sigma: not yet applied, at the north edge
            v = s.cells[0][col].north
            pre.hlines.append(v)
            post.hlines.append(v)
    # vertical lines, top to bottom, on the focus block
    for row in range(r0, r0 + c.k):
        pre.vlines.append(s.cells[row][c0].west)
        post.vlines.append(s.cells[row][c0 + c.l - 1].east)
    return pre, post


# ---------------------------------------------------------------------------
# Named environments over typed borders
# ---------------------------------------------------------------------------


def _bind_fields(env: Env, tt: TTuple, value: Value, family: bool):
    fields = tt.fields
    value = canon_value(value)
    if len(fields) == 1:
        items = [value]
    elif hasattr(value, "items") and len(getattr(value, "items", ())) == len(fields):
        items = list(value.items)
    else:
        return
    for (name, ftype), item in zip(fields, items):
        if name is None:
            continue
        if family:
            env.families.setdefault(name, [])
            env.families[name] = tuple(list(env.families[name]) + [item])
        else:
            env.scalars.setdefault(name, item)
        if isinstance(ftype, TTuple) and all(n is not None for n, _ in ftype.fields):
            env.recfields.setdefault(name, tuple(n for n, _ in ftype.fields))


def env_from_typed_borders(
    pairs: Sequence[Tuple[Type, Sequence[Value]]], aliases: Optional[Dict[str, str]] = None
) -> Env:
    """Build a formula environment from (border type, border entries) pairs.

    Entries under a starred border item become indexed families; entries
    under a direct tuple item become scalars.  Nil entries never bind.
    """
    env = Env(aliases=dict(aliases or {}))
    for t, entries in pairs:
        queue = [canon_value(v) for v in entries if not is_nil_value(canon_value(v))]
        for item_t in type_list_items(t):
            if isinstance(item_t, (TStarList, TStarTuple)):
                elem = item_t.elem
                while queue:
                    v = queue.pop(0)
                    if isinstance(elem, TTuple):
                        _bind_fields(env, elem, v, family=True)
            elif isinstance(item_t, TTuple):
                if queue:
                    _bind_fields(env, item_t, queue.pop(0), family=False)
            else:
                if queue:
                    queue.pop(0)
    return env


# ---------------------------------------------------------------------------
# Hoare triples
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class HoareTriple:
    contour: Contour
    pre: Formula
    program: A.Program
    post: Formula
    aliases: tuple = ()  # ((name, path), ...)

    def alias_dict(self):
        return dict(self.aliases)


def holds(t: HoareTriple, s: Scenario, anchor: Tuple[int, int] = (0, 0)) -> bool:
    """Pre implies post on the concrete scenario's contour bindings."""
    from .typecheck import infer_type  # local import to avoid a cycle

    pt = infer_type(t.program)
    pre_b, post_b = bind_contour(t.contour, s, anchor)
    aliases = t.alias_dict()
    pre_env = env_from_typed_borders(
        [(pt.w, pre_b.vlines), (pt.n, pre_b.hlines)], aliases
    )
    post_env = env_from_typed_borders(
        [(pt.e, post_b.vlines), (pt.s, post_b.hlines)], aliases
    )
    if not eval_formula(t.pre, pre_env):
        return True
    return eval_formula(t.post, pre_env, post_env)
