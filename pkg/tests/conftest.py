"""Shared generators: random types, values, ASTs, and well-typed programs."""

from __future__ import annotations

import random

import pytest

from agapia import ast as A
from agapia.iface import (
    SPATIAL,
    TEMPORAL,
    NIL,
    TBool,
    TColor,
    TInt,
    TList,
    TSet,
    TStarList,
    TStarTuple,
    TTuple,
    TUnion,
    VBool,
    VColor,
    VInt,
    VList,
    VNIL,
    VSet,
    VTup,
)


def gen_type(rng: random.Random, depth: int, kind=SPATIAL):
    leaves = [NIL, TInt(kind), TBool(kind), TColor(kind), TSet(kind)]
    if depth <= 0:
        return rng.choice(leaves)
    roll = rng.random()
    if roll < 0.35:
        return rng.choice(leaves)
    if roll < 0.5:
        return TTuple(
            tuple(
                (rng.choice([None, f"v{i}"]), gen_type(rng, depth - 1, kind))
                for i in range(rng.randint(1, 3))
            )
        )
    if roll < 0.65:
        return TList(tuple(gen_type(rng, depth - 1, kind) for _ in range(rng.randint(1, 3))))
    if roll < 0.78:
        return TStarList(gen_type(rng, depth - 1, kind))
    if roll < 0.9:
        return TStarTuple(gen_type(rng, depth - 1, kind))
    return TUnion(tuple(gen_type(rng, depth - 1, kind) for _ in range(2)))


def gen_value(rng: random.Random, depth: int):
    leaves = [
        VNIL,
        VInt(rng.randint(0, 3)),
        VBool(rng.random() < 0.5),
        VColor(rng.choice(["white", "black"])),
        VSet(frozenset(rng.sample(range(4), rng.randint(0, 2)))),
    ]
    if depth <= 0 or rng.random() < 0.5:
        return rng.choice(leaves)
    if rng.random() < 0.5:
        return VTup(tuple(gen_value(rng, depth - 1) for _ in range(rng.randint(0, 3))))
    return VList(tuple(gen_value(rng, depth - 1) for _ in range(rng.randint(0, 3))))


# ---------------------------------------------------------------------------
# Random syntactically-valid ASTs (for the round-trip property)
# ---------------------------------------------------------------------------

_NAMES = ["x", "y", "z", "acc", "cnt", "v1", "v2"]


def gen_expr(rng, depth, names=_NAMES):
    if depth <= 0 or rng.random() < 0.4:
        return rng.choice(
            [
                A.EInt(rng.randint(0, 9)),
                A.EVar(rng.choice(names)),
                A.EBool(rng.random() < 0.5),
                A.EColor(rng.choice(["white", "black"])),
                A.ENull(),
            ]
        )
    roll = rng.random()
    if roll < 0.5:
        op = rng.choice(["+", "-", "*", "/", "<", "==", "!=", "&&", "||", "union", "contains"])
        return A.EBin(op, gen_expr(rng, depth - 1, names), gen_expr(rng, depth - 1, names))
    if roll < 0.6:
        return A.ENot(gen_expr(rng, depth - 1, names))
    if roll < 0.7:
        return A.EMod(gen_expr(rng, depth - 1, names), gen_expr(rng, depth - 1, names))
    if roll < 0.78:
        return A.ERandInt(gen_expr(rng, depth - 1, names))
    if roll < 0.82:
        return A.ERandBool()
    if roll < 0.88:
        return A.ESetLit(tuple(gen_expr(rng, depth - 1, names) for _ in range(rng.randint(0, 2))))
    if roll < 0.94:
        return A.EField(A.EVar(rng.choice(names)), rng.choice(["col", "pos"]))
    return A.EIndex(A.EVar(rng.choice(names)), gen_expr(rng, depth - 1, names))


def gen_stmt(rng, depth):
    if depth <= 0 or rng.random() < 0.45:
        target = rng.choice(
            [
                A.LVar(rng.choice(_NAMES)),
                A.LField(rng.choice(_NAMES), rng.choice(["col", "pos"])),
                A.LIndex(rng.choice(_NAMES), gen_expr(rng, 1)),
            ]
        )
        return A.WAssign(target, gen_expr(rng, depth))
    roll = rng.random()
    if roll < 0.3:
        return A.WIf(
            gen_expr(rng, depth - 1),
            gen_stmts(rng, depth - 1),
            gen_stmts(rng, depth - 1) if rng.random() < 0.5 else (),
        )
    if roll < 0.5:
        return A.WWhile(gen_expr(rng, depth - 1), gen_stmts(rng, depth - 1))
    if roll < 0.7:
        return A.WFor(
            rng.choice(_NAMES), gen_expr(rng, depth - 1), gen_expr(rng, depth - 1),
            gen_stmts(rng, depth - 1),
        )
    if roll < 0.8:
        return A.WDelay(gen_expr(rng, depth - 1))
    if roll < 0.9:
        return A.WNil()
    return A.WNew(rng.choice(["nx", "ny"]), None)


def gen_stmts(rng, depth):
    return tuple(gen_stmt(rng, depth) for _ in range(rng.randint(1, 3)))


def gen_decls(rng):
    forms = []
    for name in rng.sample(["p", "q", "r", "msgs", "tok"], rng.randint(0, 3)):
        roll = rng.random()
        if roll < 0.6:
            forms.append(A.Decl(name))
        elif roll < 0.8:
            forms.append(A.Decl(name, form="array"))
        else:
            forms.append(A.Decl(name, form="record", fields=("col", "pos")))
    return tuple(forms)


def gen_module(rng, depth):
    return A.Module(
        listen=gen_decls(rng),
        read=gen_decls(rng),
        body=gen_stmts(rng, depth),
        speak=gen_decls(rng),
        write=gen_decls(rng),
    )


def gen_ast(rng, depth):
    """Arbitrary syntactically valid program (need not typecheck)."""
    if depth <= 0 or rng.random() < 0.35:
        if rng.random() < 0.2:
            return A.PNil()
        return A.PModule(gen_module(rng, max(depth, 1)))
    roll = rng.random()
    if roll < 0.4:
        klass = rng.choice([A.PVComp, A.PHComp, A.PDComp])
        return klass(gen_ast(rng, depth - 1), gen_ast(rng, depth - 1))
    if roll < 0.55:
        return A.PIf(gen_expr(rng, depth - 1), gen_ast(rng, depth - 1), gen_ast(rng, depth - 1))
    if roll < 0.85:
        klass = rng.choice([A.PWhileT, A.PWhileS, A.PWhileST])
        return klass(gen_expr(rng, depth - 1), gen_ast(rng, depth - 1))
    return A.PForS(
        rng.choice(_NAMES), A.EInt(rng.randint(0, 3)), gen_expr(rng, depth - 1),
        gen_ast(rng, depth - 1),
    )


# ---------------------------------------------------------------------------
# Well-typed terminating programs (for dynamic type soundness)
# ---------------------------------------------------------------------------
#
# Every generated module shares the interface (ta:tInt, tf:tBool) on the
# temporal borders and (sa:sInt, sf:sBool) on the spatial ones, and bumps
# both counters, so guards on "counter < K" terminate.  Composition has to
# respect border arities at runtime, so generation tracks each subtree's
# spatial width plus two flags: results of vertical composition / while_t
# can only keep composing vertically (their east border carries several
# entries), results of while_s only horizontally (their south border has a
# run-dependent arity).

_GUARD_BOUND = 6


class _WT:
    def __init__(self, prog, width, theight=1, vonly=False, honly=False, pt=True, ps=True):
        self.prog = prog
        self.width = width  # spatial arity; None = run-dependent (while_s)
        self.theight = theight  # temporal arity; None = run-dependent (while_t)
        self.vonly = vonly
        self.honly = honly
        # per-axis progress: a while body must be guaranteed to bump the
        # counter its guard reads; a nested while can degenerate into an
        # identity and stall the enclosing loop
        self.pt = pt  # the guard-visible east entry advances ta
        self.ps = ps  # the guard-visible south entry advances sa


def _wt_module(rng):
    from agapia.iface import TBool as TB

    listen = (A.Decl("ta"), A.Decl("tf", ann=TB(TEMPORAL)))
    read = (A.Decl("sa"), A.Decl("sf", ann=TB(SPATIAL)))
    body = [
        A.WAssign(A.LVar("ta"), A.EBin("+", A.EVar("ta"), A.EInt(1))),
        A.WAssign(A.LVar("sa"), A.EBin("+", A.EVar("sa"), A.EInt(1))),
        A.WAssign(A.LVar("tf"), A.EBin("<", A.EVar("ta"), A.EInt(rng.randint(0, 9)))),
        A.WAssign(A.LVar("sf"), A.EBin("<", A.EVar("sa"), A.EInt(rng.randint(0, 9)))),
    ]
    if rng.random() < 0.4:
        body.append(A.WAssign(A.LVar("tmp"), A.ERandInt(A.EInt(rng.randint(0, 3)))))
        body.append(
            A.WIf(
                A.EBin("<", A.EVar("tmp"), A.EInt(2)),
                (A.WAssign(A.LVar("ta"), A.EBin("+", A.EVar("ta"), A.EInt(1))),),
                (),
            )
        )
    if rng.random() < 0.3:
        body.append(A.WAssign(A.LVar("j"), A.EInt(0)))
        body.append(
            A.WWhile(
                A.EBin("<", A.EVar("j"), A.EInt(rng.randint(1, 3))),
                (A.WAssign(A.LVar("j"), A.EBin("+", A.EVar("j"), A.EInt(1))),),
            )
        )
    speak = (A.Decl("ta"), A.Decl("tf", ann=TB(TEMPORAL)))
    write = (A.Decl("sa"), A.Decl("sf", ann=TB(SPATIAL)))
    return _WT(A.PModule(A.Module(listen, read, tuple(body), speak, write)), width=1)


def _gen_wt(rng: random.Random, depth: int) -> _WT:
    if depth <= 0 or rng.random() < 0.35:
        return _wt_module(rng)
    for _ in range(12):  # retry until the picked rule's side conditions fit
        roll = rng.random()
        if roll < 0.2:
            a = _gen_wt(rng, depth - 1)
            b = _gen_wt(rng, depth - 1)
            if a.vonly or b.vonly:
                continue
            width = None if (a.width is None or b.width is None) else a.width + b.width
            return _WT(A.PHComp(a.prog, b.prog), width, theight=a.theight,
                       honly=a.honly or b.honly, pt=b.pt, ps=a.ps)
        if roll < 0.4:
            a = _gen_wt(rng, depth - 1)
            b = _gen_wt(rng, depth - 1)
            if a.honly or b.honly or a.width is None or a.width != b.width:
                continue
            theight = None if (a.theight is None or b.theight is None) else a.theight + b.theight
            return _WT(A.PVComp(a.prog, b.prog), a.width, theight=theight,
                       vonly=True, pt=a.pt, ps=b.ps)
        if roll < 0.55:
            a = _gen_wt(rng, depth - 1)
            b = _gen_wt(rng, depth - 1)
            if a.vonly or b.vonly or a.honly or b.honly or a.width is None or a.width != b.width:
                continue
            return _WT(A.PDComp(a.prog, b.prog), a.width, theight=a.theight,
                       pt=b.pt, ps=b.ps)
        if roll < 0.7:
            a = _gen_wt(rng, depth - 1)
            b = _gen_wt(rng, depth - 1)
            if (
                a.width is None or a.width != b.width
                or a.theight is None or a.theight != b.theight
                or a.vonly != b.vonly or a.honly != b.honly
            ):
                continue
            cond = A.EBin("<", A.EVar(rng.choice(["ta", "sa"])), A.EInt(rng.randint(0, 8)))
            return _WT(A.PIf(cond, a.prog, b.prog), a.width, theight=a.theight,
                       vonly=a.vonly or b.vonly, honly=a.honly or b.honly,
                       pt=a.pt and b.pt, ps=a.ps and b.ps)
        if roll < 0.8:
            a = _gen_wt(rng, depth - 1)
            if a.honly or a.vonly or a.width is None or not a.ps:
                continue
            guard = A.EBin("<", A.EVar("sa"), A.EInt(rng.randint(1, _GUARD_BOUND)))
            return _WT(A.PWhileT(guard, a.prog), a.width, theight=None,
                       vonly=True, pt=False, ps=False)
        if roll < 0.9:
            a = _gen_wt(rng, depth - 1)
            if a.vonly or a.honly or not a.pt:
                continue
            guard = A.EBin("<", A.EVar("ta"), A.EInt(rng.randint(1, _GUARD_BOUND)))
            return _WT(A.PWhileS(guard, a.prog), None, theight=a.theight,
                       honly=True, pt=False, ps=False)
        a = _gen_wt(rng, depth - 1)
        if a.vonly or a.honly or a.width is None or not (a.pt or a.ps):
            continue
        guard = A.EBin(
            "&&",
            A.EBin("<", A.EVar("ta"), A.EInt(rng.randint(1, _GUARD_BOUND))),
            A.EBin("<", A.EVar("sa"), A.EInt(rng.randint(1, _GUARD_BOUND))),
        )
        return _WT(A.PWhileST(guard, a.prog), a.width, theight=a.theight,
                   pt=False, ps=False)
    return _wt_module(rng)


def gen_well_typed(rng: random.Random, depth: int):
    return _gen_wt(rng, depth).prog


def well_typed_inputs(p):
    """Matching border inputs for a generated well-typed program.

    Star-typed borders (outer while loops) accept any repetition count, so
    they get a generous supply; leftovers are never consumed.
    """
    from agapia.typecheck import infer_type
    from agapia.iface import TStarList, TUnion, type_list_items

    pt = infer_type(p)

    def has_star(t):
        return any(
            isinstance(x, TStarList)
            or (isinstance(x, TUnion) and any(isinstance(a, TStarList) for a in x.alts))
            for x in type_list_items(t)
        )

    def entries(t):
        out = []
        for item in type_list_items(t):
            if isinstance(item, TStarList):
                continue
            out.append(VTup((VInt(0), VBool(True))))
        if has_star(t):
            out.extend(VTup((VInt(0), VBool(True))) for _ in range(240))
        return out

    return entries(pt.w), entries(pt.n), pt


@pytest.fixture
def rng():
    return random.Random(20260809)
