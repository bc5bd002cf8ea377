"""Acceptance criteria, one test per criterion, at the stated tolerances.

Each test prints a [criterion N] PASS line with its measured runtime; the
stated runtime budgets are asserted.
"""

import random
import time
from itertools import product
from pathlib import Path

import pytest

from agapia import ast as A
from agapia.iface import VInt, bundle_values, value_has_type, values_equal
from agapia.interp import RunConfig, run, trace
from agapia.macro import expand_for_s
from agapia.parser import ParseErrors, parse, parse_source
from agapia.pretty import pretty
from agapia.proofcheck import Domain, check_script_text, parse_script, soundness_harness_module
from agapia.protocol import (
    PROTOCOL_SOURCE,
    flagship_proof,
    invariant_formulas,
    monitor_run,
    soundness_harness_loop,
    soundness_harness_program,
    soundness_harness_round,
)
from agapia.scenario import (
    BorderMismatch,
    borders_equal_up_to_nil,
    dcomp,
    equivalent,
    hcomp,
    id_cell,
    id_col,
    id_row,
    single_cell,
    vcomp,
)
from agapia.typecheck import infer_type
from conftest import gen_well_typed, well_typed_inputs
from test_syntax import GOLDEN, NEAR_MISSES

CORPUS = Path(__file__).resolve().parent.parent / "corpus"
SOURCES = {"termination.agapia": PROTOCOL_SOURCE}


def report(criterion, elapsed, budget, detail=""):
    line = f"[criterion {criterion}] PASS in {elapsed:.2f}s (budget {budget}s) {detail}"
    print(line)
    assert elapsed < budget, line


def test_criterion_1_grammar_coverage():
    t0 = time.time()
    for text, _label in GOLDEN:
        A.resolve_file(parse_source(text))
    for text, _label in NEAR_MISSES:
        with pytest.raises(ParseErrors):
            A.resolve_file(parse_source(text))
    src = (CORPUS / "termination.agapia").read_text()
    sf = parse_source(src)
    printed = pretty(sf)
    assert parse_source(printed) == sf
    assert pretty(parse_source(printed)) == printed  # fixpoint
    report(1, time.time() - t0, 1.0, f"{len(GOLDEN)} productions, {len(NEAR_MISSES)} near-misses")


def _cells(values=(0, 1, 2)):
    vs = [VInt(v) for v in values]
    return [
        single_cell("M", west=w, north=n, east=e, south=s)
        for w, n, e, s in product(vs, repeat=4)
    ]


def test_criterion_2_scenario_laws():
    t0 = time.time()
    cells = _cells()
    # identities
    for f in cells:
        assert equivalent(hcomp(f, id_col(f.east_border())), f)
        assert equivalent(hcomp(id_col(f.west_border()), f), f)
        assert equivalent(vcomp(f, id_row(f.south_border())), f)
        assert equivalent(vcomp(id_row(f.north_border()), f), f)
        d = dcomp(f, id_cell(f.east_data(), f.south_data()))
        assert borders_equal_up_to_nil(d, f)
    # associativity up to dummy normalization, over composable triples
    h_checked = v_checked = 0
    for a in cells:
        bs = [b for b in cells if values_equal(a.east_data(), b.west_data())]
        for b in bs[:9]:
            for c in cells:
                if not values_equal(b.east_data(), c.west_data()):
                    continue
                assert equivalent(hcomp(hcomp(a, b), c), hcomp(a, hcomp(b, c)))
                h_checked += 1
        bs = [b for b in cells if values_equal(a.south_data(), b.north_data())]
        for b in bs[:9]:
            for c in cells:
                if not values_equal(b.south_data(), c.north_data()):
                    continue
                assert equivalent(vcomp(vcomp(a, b), c), vcomp(a, vcomp(b, c)))
                v_checked += 1
    # diagonal composition of 1x1 cells is the 3x3 of the defining formula
    d_checked = 0
    for a in cells:
        for b in cells:
            if not (
                values_equal(a.east_data(), b.west_data())
                and values_equal(a.south_data(), b.north_data())
            ):
                continue
            d = dcomp(a, b)
            assert (d.rows, d.cols) == (3, 3)
            assert values_equal(d.west_data(), a.west_data())
            assert values_equal(d.east_data(), b.east_data())
            d_checked += 1
    report(
        2, time.time() - t0, 10.0,
        f"hcomp assoc x{h_checked}, vcomp assoc x{v_checked}, dcomp 3x3 x{d_checked}",
    )


def test_criterion_3_dynamic_type_soundness():
    t0 = time.time()
    rng = random.Random(20260809)
    violations = 0

    def check(p, tin, sin, pt, seed):
        nonlocal violations
        s = run(p, tin, sin, RunConfig(seed=seed))
        for border, t in (
            (s.west_border(), pt.w),
            (s.north_border(), pt.n),
            (s.east_border(), pt.e),
            (s.south_border(), pt.s),
        ):
            if not value_has_type(bundle_values(border), t):
                violations += 1

    for i in range(500):
        p = gen_well_typed(rng, 4)
        tin, sin, pt = well_typed_inputs(p)
        check(p, tin, sin, pt, i)
    corpus = expand_for_s(parse(PROTOCOL_SOURCE))
    pt = infer_type(corpus)
    for n in (1, 2, 3):
        check(corpus, [], [VInt(n)], pt, n)
    assert violations == 0
    report(3, time.time() - t0, 60.0, "500 random programs + corpus, zero violations")


def test_criterion_4_while_guard_discipline():
    t0 = time.time()
    from agapia.interp import _eval_guard
    from agapia.iface import type_match

    checked = 0

    def verify_records(prog, records):
        nonlocal checked
        btypes = {}
        by_path = {}
        for r in records:
            by_path.setdefault((r.kind, r.path), []).append(r)
        for (rec_kind, _path), path_records in by_path.items():
            path_records.sort(key=lambda r: r.index)
            loop = path_records[0].node
            if id(loop.body) not in btypes:
                btypes[id(loop.body)] = infer_type(loop.body)
            bt = btypes[id(loop.body)]

            def guard(r):
                bindings = []
                if rec_kind in ("while_s", "while_st"):
                    bindings.append((type_match(bt.w, bt.e), list(r.t_entries)))
                if rec_kind in ("while_t", "while_st"):
                    bindings.append((type_match(bt.n, bt.s), list(r.s_entries)))
                return _eval_guard(loop.cond, bindings, None)

            for r in path_records[:-1]:
                assert guard(r), f"entry border violates the guard at {r.path}:{r.index}"
                checked += 1
            assert not guard(path_records[-1]), "exit border satisfies the guard"
            checked += 1

    # protocol runs
    corpus = expand_for_s(parse(PROTOCOL_SOURCE))
    for n, seed in ((1, 0), (2, 1), (3, 0), (3, 5)):
        _s, records = trace(corpus, [], [VInt(n)], RunConfig(seed=seed))
        verify_records(corpus, records)
    # generated loop programs (the construction-time asserts also run here)
    rng = random.Random(7)
    produced = 0
    while produced < 80:
        p = gen_well_typed(rng, 3)
        if not isinstance(p, (A.PWhileT, A.PWhileS, A.PWhileST)):
            continue
        produced += 1
        tin, sin, _pt = well_typed_inputs(p)
        _s, records = trace(p, tin, sin, RunConfig(seed=produced))
        verify_records(p, records)
    assert checked > 100
    report(4, time.time() - t0, 60.0, f"{checked} boundary checks, zero assert failures")


SWEEP = [(n, seed) for n in (1, 2, 3, 4, 5) for seed in range(20)]
_sweep_reports = {}


def _run_sweep():
    if not _sweep_reports:
        for n, seed in SWEEP:
            _sweep_reports[(n, seed)] = monitor_run(n, seed, oracle_check=True)
    return _sweep_reports


def test_criterion_5_protocol_correctness():
    t0 = time.time()
    reports = _run_sweep()
    inconclusive = [k for k, r in reports.items() if r.inconclusive]
    assert inconclusive == []
    for (n, seed), r in reports.items():
        assert r.terminated and r.rounds <= 1000, (n, seed)
        assert r.final_state.token_col == "white" and r.final_state.token_pos == 0
        assert all(not a for a in r.final_state.active), (n, seed)
        assert all(m == frozenset() for m in r.final_state.msg), (n, seed)
        assert r.oracle_match is True, (n, seed)
    report(5, time.time() - t0, 120.0, "100/100 runs detected termination; oracle exact match")


def test_criterion_6_invariant_monitoring():
    t0 = time.time()
    reports = _run_sweep()
    boundaries = positions = 0
    for (n, seed), r in reports.items():
        assert r.violations == [], (n, seed, r.violations[:3])
        boundaries += r.boundaries_checked
        positions += r.positions_checked
    report(6, time.time() - t0, 120.0, f"Inv at {boundaries} boundaries, Inv2 at {positions} positions")


def test_criterion_7_flagship_proof():
    t0 = time.time()
    rep = check_script_text(
        flagship_proof(), extra_sources=SOURCES, domain=Domain(n_values=(1, 2, 3))
    )
    assert rep.ok, [
        (r.n, r.rule, r.name, r.verdict.status, r.verdict.detail) for r in rep.results if not r.verdict.ok
    ]
    rules = {r.rule for r in rep.results}
    assert {"basic", "simplefor", "implication", "stwhile", "dcomp", "hcomp"} <= rules
    states = sum(r.verdict.enumerated for r in rep.results)
    checked = sum(r.verdict.discharged for r in rep.results)
    elapsed = time.time() - t0
    report(7, elapsed, 600.0, f"all {len(rep.results)} obligations valid; "
                              f"{states} states enumerated, {checked} discharged")


def test_criterion_8_mutation_sensitivity():
    t0 = time.time()
    # (a) drop the "c[k] = black" consequence from P2d
    mutated_script = flagship_proof().replace(
        "(msg[k] inter [0,k) != empty -> c[k] = black)", "true"
    )
    rep_a = check_script_text(mutated_script, extra_sources=SOURCES, domain=Domain(n_values=(2,)))
    assert not rep_a.ok
    bad_a = [r for r in rep_a.results if not r.verdict.ok]
    assert any(
        r.verdict.witness is not None
        and r.verdict.status in ("counterexample", "side-condition-failed")
        for r in bad_a
    )
    # (b) swap white/black in R's token-passing branch
    mutated_src = PROTOCOL_SOURCE.replace("token.col=black;c=white", "token.col=white;c=black")
    rep_b = check_script_text(
        flagship_proof(),
        extra_sources={"termination.agapia": mutated_src},
        domain=Domain(n_values=(2,)),
    )
    assert not rep_b.ok
    bad_b = [r for r in rep_b.results if not r.verdict.ok]
    assert any(
        r.verdict.status == "counterexample" and r.verdict.witness is not None for r in bad_b
    )
    report(8, time.time() - t0, 300.0, "both corruptions produced concrete witnesses")


def test_criterion_9_empirical_soundness():
    t0 = time.time()
    scenarios = 0
    # module-level accepted triples, re-enumerated independently of the checker
    script = parse_script(flagship_proof(), extra_sources=SOURCES)
    forms = script.formula("$Inv2x")
    from agapia.formula import prime_all
    from agapia.proofcheck import _unprime_constants

    for n in (1, 2):
        for j in range(n):
            rep = soundness_harness_module(
                script, script.space(), script.programs["ROUND"].body.module, j,
                forms, {"tid": j},
                _unprime_constants(prime_all(forms), script.constants), {"tid": j + 1},
                n=n,
            )
            assert rep.ok, rep.violations[:2]
            scenarios += rep.scenarios
    # composite accepted triples, driven through the real interpreter
    for n in (1, 2):
        r1 = soundness_harness_round(n)
        assert r1.ok, r1.violations[:2]
        r2 = soundness_harness_loop(n)
        assert r2.ok, r2.violations[:2]
        r3 = soundness_harness_program(n)
        assert r3.ok, r3.violations[:2]
        scenarios += r1.scenarios + r2.scenarios + r3.scenarios
    assert scenarios > 1000
    report(9, time.time() - t0, 600.0, f"{scenarios} scenarios, zero soundness violations")
