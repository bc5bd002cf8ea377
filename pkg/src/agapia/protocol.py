"""Dual-pass ring termination detection: corpus program, oracle, monitor.

The program ``P = I #### Q`` initializes ``n`` ring processes and then loops
rounds in which every process takes its incoming jobs, possibly works and
sends new jobs, and passes the colored token when passive.  Termination is
detected when the first process receives its white token back at position 0.

``oracle_simulate`` is an independent state-machine implementation of the
protocol steps, driven by the same per-module random streams as the
interpreter, so terminal states can be compared field by field.
``monitor_run`` executes the real program and evaluates the invariants at
every round boundary and at every position inside each round.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple

from . import ast as A
from .ast import resolve_file
from .contour import env_from_typed_borders
from .formula import Env, Formula, eval_formula, parse_formula
from .iface import (
    VBool,
    VColor,
    VInt,
    VSet,
    VTup,
    Value,
    canon_value,
    is_nil_value,
)
from .interp import LoopBoundExceeded, RunConfig, run as run_prog, stream_for, trace
from .macro import expand_for_s
from .parser import parse_source
from .typecheck import infer_type

PROTOCOL_SOURCE = """\
// Dual-pass ring termination detection.
// P initializes n ring processes and loops rounds of R until the first
// process gets its white token back at position 0.

P = I #### Q

I = I1 ## for_s(tid=0;tid<tn;tid++){I2}

I1 = module{listen nil}{read n}{
tn=n; token.col=black; token.pos=0;
}{speak tn,tid,msg[~],token(col,pos)}{write nil}

I2 = module{listen tn,tid,msg[~],token(col,pos)}{read nil}{
id=tid; c=white; active=true; msg[id]=null;
}{speak tn,tid,msg[~],token(col,pos);}{write id,c,active}

Q = while_st(!(token.col==white && token.pos==0)){
  for_s(tid=0;tid<tn;tid++){R}}

R = module{listen tn,tid,msg[~],token(col,pos)}{read id,c,active}{
for(j=0;j<tn;j++){ //take my jobs
  if(msg[j] contains id){
    msg[j]=msg[j]-{id};
    active=true;};}
if(active){ //execute code, send jobs, update color
  delay(random_time);
  r=random(tn-1);
  for(i=0;i<r;i++){ k=random(tn-1);
    if(k!=id){msg[id]=msg[id] union {k}};
    if(k<id){c=black};}
  active=random(true,false);}
if(!active && token.pos==id){ //termination
  if(id==0)token.col=white;
  if(id!=0 && c==black){
    token.col=black;c=white};
  token.pos=token.pos+1[mod tn];}
}{speak tn,tid,msg[~],token(col,pos);}{write id,c,active}
"""

ALIASES = {"n": "tn", "i": "token.pos"}


def protocol_file() -> A.SourceFile:
    return parse_source(PROTOCOL_SOURCE, "termination.agapia")


def build_protocol(entry: str = "P") -> A.Program:
    """The resolved protocol AST (for_s macros still present)."""
    return resolve_file(protocol_file(), entry)


_prepared = {}


def prepared_protocol(entry: str = "P") -> A.Program:
    """Resolved and macro-expanded, ready to run; cached."""
    if entry not in _prepared:
        _prepared[entry] = expand_for_s(build_protocol(entry))
    return _prepared[entry]


# ---------------------------------------------------------------------------
# Invariant formulas
# ---------------------------------------------------------------------------

_TRAIL = "[0, wrap(i-1,tn)]"
_BEYOND = "[wrap(i-1,tn)+1, tn)"

_FORMULA_TEXTS = {
    # the two base properties
    "P1": (
        "token.col = white -> ("
        f"(forall r in {_TRAIL} : active[r] = false && msg[r] = empty)"
        f" || (exists k in {_BEYOND} : c[k] = black))"
    ),
    "P2": "token.col = white -> (forall k in [0, tn) : msg[k] != empty -> c[k] = black)",
    # detailed, position-indexed variations (tid = current position)
    "P1d": (
        "token.col = white -> ("
        f"(forall r in {_TRAIL} : active[r] = false && msg[r] subset [max(tid,i), tn))"
        f" || (exists k in {_BEYOND} : c[k] = black))"
    ),
    "P2d": (
        "token.col = white -> (forall k in [0, tid) : "
        "msg[k] subset ([0,k) union [tid, tn)) && "
        "(msg[k] inter [0,k) != empty -> c[k] = black))"
    ),
    # effect descriptions of one R application, by token-position case
    "Q1": (
        "token' = token && "
        "(forall k in [0, tn) : k != tid -> msg'[k] = msg[k] - {tid}) && "
        "((active[tid] = false && !(exists k in [0, tn) : tid in msg[k]) -> "
        "active'[tid] = false && msg'[tid] = empty)"
        " || "
        "(active[tid] = true || (exists k in [0, tn) : tid in msg[k]) -> "
        "msg'[tid] subset ([0,tid) union [tid+1, tn)) && "
        "(msg'[tid] inter [0,tid) != empty -> c'[tid] = black)))"
    ),
    "Q2": (
        "(forall k in [0, tn) : k != tid -> msg'[k] = msg[k] - {tid}) && "
        "((active'[tid] = true -> token' = token && "
        "(msg'[tid] inter [0,tid) != empty -> c'[tid] = black))"
        " || "
        "(active'[tid] = false -> token'.pos = wrap(token.pos+1, tn) && "
        "(token'.col = white -> msg'[tid] inter [0,tid) = empty)))"
    ),
    # structural facts that make the round chain inductive under enumeration
    "MsgStruct": (
        "(forall k in [0, tid) : msg[k] subset ([0,k) union [tid, tn))) && "
        "(forall k in [tid, tn) : msg[k] subset [tid, tn))"
    ),
    "TrailGuard": (
        "token.col = white -> ("
        f"((forall r in {_TRAIL} : active[r] = false && msg[r] subset [max(tid,i), tn))"
        " && (forall k in [0, tn) : msg[k] inter [tid, i) != empty -> c[k] = black))"
        f" || (exists k in {_BEYOND} : c[k] = black))"
    ),
    "NotDetected": "tid < tn -> !(token.col = white && token.pos = 0)",
    # boundary conditions
    "InitUpTo": (
        "tn = n && token = (black, 0) && "
        "(forall k in [0, tid) : id[k] = k && c[k] = white && active[k] = true && msg[k] = empty)"
    ),
    "AllDone": "forall k in [0, tn) : active[k] = false && msg[k] = empty",
    "RoundMsgLocal": "forall k in [0, tn) : msg[k] subset [0, k)",
}

_DERIVED = {
    "Q3": "Q1",  # same effect description as the tid < token.pos case
}


def invariant_formulas() -> Dict[str, Formula]:
    """All protocol formulas: P1, P2, P1d, P2d, Q1-Q3, Inv, Inv2, and the
    strengthened round-chain invariant Inv2x used by the machine-checked proof."""
    out = {name: parse_formula(text) for name, text in _FORMULA_TEXTS.items()}
    for name, src in _DERIVED.items():
        out[name] = out[src]
    from .formula import FAnd

    out["Inv"] = FAnd((out["P1"], out["P2"]))
    out["Inv2"] = FAnd((out["P1d"], out["P2d"]))
    # cheap conjuncts first: enumeration rejects most states on them
    out["Inv2x"] = FAnd((out["NotDetected"], out["MsgStruct"], out["P2d"], out["P1d"], out["TrailGuard"]))
    return out


def formula_text(name: str) -> str:
    if name in _FORMULA_TEXTS:
        return _FORMULA_TEXTS[name]
    if name in _DERIVED:
        return _FORMULA_TEXTS[_DERIVED[name]]
    composites = {
        "Inv": "($P1) && ($P2)",
        "Inv2": "($P1d) && ($P2d)",
        "Inv2x": "($NotDetected) && ($MsgStruct) && ($P2d) && ($P1d) && ($TrailGuard)",
    }
    return composites[name]


# ---------------------------------------------------------------------------
# Ring state and the oracle simulator
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class RingState:
    n: int
    token_col: str
    token_pos: int
    c: Tuple[str, ...]
    active: Tuple[bool, ...]
    msg: Tuple[frozenset, ...]


@dataclass
class OracleResult:
    state: RingState
    rounds: int
    terminated: bool


def oracle_simulate(n: int, seed: int, max_rounds: int = 1000) -> OracleResult:
    """Direct state-machine of the protocol steps (1)-(3).

    Uses the interpreter's stream discipline: process j in round k draws
    from the stream of the R occurrence at that logical coordinate.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    c = ["white"] * n
    active = [True] * n
    msg = [set() for _ in range(n)]
    col, pos = "black", 0
    rounds = 0
    while not (col == "white" and pos == 0):
        rounds += 1
        if rounds > max_rounds:
            return OracleResult(
                RingState(n, col, pos, tuple(c), tuple(active), tuple(frozenset(m) for m in msg)),
                rounds - 1,
                False,
            )
        for j in range(n):
            src = stream_for(seed, f"D.{rounds}.H.{j + 1}.h")
            for jj in range(n):  # take my jobs
                if j in msg[jj]:
                    msg[jj].discard(j)
                    active[j] = True
            if active[j]:  # work, send jobs, maybe go passive
                r = src.draw_int(n - 1)
                for _ in range(r):
                    k = src.draw_int(n - 1)
                    if k != j:
                        msg[j].add(k)
                    if k < j:
                        c[j] = "black"
                active[j] = src.draw_bool()
            if not active[j] and pos == j:  # pass the token
                if j == 0:
                    col = "white"
                if j != 0 and c[j] == "black":
                    col = "black"
                    c[j] = "white"
                pos = (pos + 1) % n
    return OracleResult(
        RingState(n, col, pos, tuple(c), tuple(active), tuple(frozenset(m) for m in msg)),
        rounds,
        True,
    )


# ---------------------------------------------------------------------------
# Extracting ring states from scenario borders
# ---------------------------------------------------------------------------


def _state_from_entries(t_entry: Value, s_entries) -> RingState:
    t = canon_value(t_entry)
    assert isinstance(t, VTup) and len(t.items) == 4
    tn, _tid, msg, token = t.items
    msgs = msg.items if isinstance(msg, VTup) else ((msg,) if not is_nil_value(msg) else ())
    col = token.items[0].v
    pos = token.items[1].v
    cs, acts = [], []
    for v in s_entries:
        v = canon_value(v)
        if is_nil_value(v):
            continue
        _pid, pc, pact = v.items
        cs.append(pc.v)
        acts.append(pact.v)
    return RingState(
        tn.v, col, pos, tuple(cs), tuple(acts), tuple(frozenset(m.v) for m in msgs)
    )


def _round_position_env(row, j: int, n: int) -> Env:
    """Mid-round state at position j of a round row: processes < j post,
    processes >= j pre; token/msg from the west of the j-th R cell."""
    rcells = [c for c in row.cells[0] if not is_nil_value(c.north)]
    assert len(rcells) == n
    if j < n:
        t = canon_value(rcells[j].west)
    else:
        t = canon_value(row.cells[0][-1].east)
    env = Env(aliases=dict(ALIASES))
    tn, tid, msg, token = t.items
    env.scalars.update({"tn": tn, "tid": VInt(j), "msg": msg, "token": token})
    env.recfields["token"] = ("col", "pos")
    fam_id, fam_c, fam_a = [], [], []
    for k in range(n):
        rec = canon_value(rcells[k].south if k < j else rcells[k].north)
        fam_id.append(rec.items[0])
        fam_c.append(rec.items[1])
        fam_a.append(rec.items[2])
    env.families = {"id": tuple(fam_id), "c": tuple(fam_c), "active": tuple(fam_a)}
    return env


def _boundary_env(t_entries, s_entries, tid_value: int) -> Env:
    env = Env(aliases=dict(ALIASES))
    t = canon_value(t_entries[0]) if t_entries else None
    nonnil = [canon_value(v) for v in t_entries if not is_nil_value(canon_value(v))]
    t = nonnil[0] if nonnil else None
    if t is not None:
        tn, _tid, msg, token = t.items
        env.scalars.update({"tn": tn, "tid": VInt(tid_value), "msg": msg, "token": token})
        env.recfields["token"] = ("col", "pos")
    fam_id, fam_c, fam_a = [], [], []
    for v in s_entries:
        v = canon_value(v)
        if is_nil_value(v):
            continue
        fam_id.append(v.items[0])
        fam_c.append(v.items[1])
        fam_a.append(v.items[2])
    env.families = {"id": tuple(fam_id), "c": tuple(fam_c), "active": tuple(fam_a)}
    return env


# ---------------------------------------------------------------------------
# Monitor
# ---------------------------------------------------------------------------


@dataclass
class Violation:
    where: str
    formula: str
    detail: str = ""


@dataclass
class MonitorReport:
    n: int
    seed: int
    rounds: int = 0
    terminated: bool = False
    inconclusive: bool = False
    violations: List[Violation] = field(default_factory=list)
    boundaries_checked: int = 0
    positions_checked: int = 0
    final_state: Optional[RingState] = None
    oracle_state: Optional[RingState] = None
    oracle_match: Optional[bool] = None

    @property
    def ok(self) -> bool:
        return not self.violations and (self.terminated or self.inconclusive)


def monitor_run(
    n: int, seed: int, cfg: Optional[RunConfig] = None, oracle_check: bool = True
) -> MonitorReport:
    """Run the protocol and evaluate the invariants at every boundary.

    Inv (= P1 && P2) is checked at every round boundary of the while_st;
    Inv2 (= P1d && P2d) and the strengthened Inv2x at every position inside
    every round; the final boundary must satisfy token=(white,0) and
    "all passive, no pending messages".
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    cfg = cfg or RunConfig(seed=seed, max_while_st=1000)
    cfg.seed = seed
    report = MonitorReport(n=n, seed=seed)
    forms = invariant_formulas()
    prog = prepared_protocol()
    try:
        _scenario, records = trace(prog, [], [VInt(n)], cfg)
    except LoopBoundExceeded as e:
        if e.loop_kind == "while_st":
            report.inconclusive = True
            report.rounds = e.bound
            return report
        raise
    st_records = [r for r in records if r.kind == "while_st"]
    report.rounds = len(st_records) - 1
    report.terminated = True

    for rec in st_records:
        env = _boundary_env(rec.t_entries, rec.s_entries, tid_value=0)
        report.boundaries_checked += 1
        if not eval_formula(forms["Inv"], env):
            report.violations.append(Violation(f"round {rec.index} boundary", "Inv"))
        if rec.body is not None:
            for j in range(n + 1):
                penv = _round_position_env(rec.body, j, n)
                report.positions_checked += 1
                for name in ("Inv2", "Inv2x"):
                    if not eval_formula(forms[name], penv):
                        report.violations.append(
                            Violation(f"round {rec.index} position {j}", name)
                        )
            pend = _round_position_env(rec.body, n, n)
            if not eval_formula(forms["RoundMsgLocal"], pend):
                report.violations.append(
                    Violation(f"round {rec.index} end", "RoundMsgLocal")
                )

    final = st_records[-1]
    fenv = _boundary_env(final.t_entries, final.s_entries, tid_value=0)
    token = fenv.scalars["token"]
    if not (token.items[0] == VColor("white") and token.items[1] == VInt(0)):
        report.violations.append(Violation("final boundary", "token=(white,0)"))
    if not eval_formula(forms["AllDone"], fenv):
        report.violations.append(Violation("final boundary", "AllDone"))
    report.final_state = _state_from_entries(
        [v for v in final.t_entries if not is_nil_value(canon_value(v))][0], final.s_entries
    )

    if oracle_check:
        oracle = oracle_simulate(n, seed, max_rounds=cfg.max_while_st)
        report.oracle_state = oracle.state
        report.oracle_match = oracle.terminated and oracle.state == report.final_state
        if not report.oracle_match:
            report.violations.append(
                Violation("terminal state", "oracle agreement", f"{oracle.state} vs {report.final_state}")
            )
    return report


# ---------------------------------------------------------------------------
# The flagship proof script
# ---------------------------------------------------------------------------

_GUARD_TEXT = "!(token.col = white && token.pos = 0)"
_FINAL_TEXT = "($Inv) && token = (white, 0) && ($AllDone)"

_RING_VARS = """\
  (vars
    (token record (col color) (pos (int 0 n)))
    (msg array n (set 0 n))
    (c family n color)
    (active family n bool)
    (id family n index))"""

_INIT_VARS = """\
    :vars ((token record (col color) (pos (int 0 n)))
           (msg array tid (set 0 n))
           (c family tid color)
           (active family tid bool)
           (id family tid index))"""


def flagship_proof(n_max: int = 3) -> str:
    """The termination-detection proof script in the Appendix-A shape.

    Round chaining uses Inv2x, a strengthening of Inv2 = P1d && P2d with the
    structural message facts (MsgStruct), the black-source guard for jobs
    aimed at not-yet-swept trail processes (TrailGuard), and the not-yet-
    detected clause (NotDetected).  The literal Inv2 chain admits
    enumeration counterexamples (see the regression tests), so the script
    carries the inductive version and closes the gap to Inv by checked
    implications, including the paper-shaped "Inv2 && tid=n -> Inv" lemma.
    """
    formulas = "\n".join(
        f'  (formula {name} "{text}")' for name, text in _FORMULA_TEXTS.items()
    )
    composite = "\n".join(
        f'  (formula {name} "{formula_text(name)}")' for name in ("Inv", "Inv2", "Inv2x")
    )
    return f"""\
; Machine-checked safety proof for the ring termination-detection program.
; Checked per ring size n in the domain; all basic obligations and side
; conditions are discharged by exhaustive enumeration with random(k)
; treated as universal choice.
(script
  (title "dual-pass ring termination detection is safe")
  (domain (n 1 {n_max}))
  (constants n)
  (source "termination.agapia")
  (program ROUND "for_s(tid=0;tid<tn;tid++){{R}}")
  (program INITFOR "for_s(tid=0;tid<tn;tid++){{I2}}")
  (aliases (tn n) (i token.pos))
{_RING_VARS}
{formulas}
{composite}
  (formula Cond "{_GUARD_TEXT}")
  (formula Final "{_FINAL_TEXT}")

  ; the paper's closing implication, checked as stated
  (lemma :name "paper-final-step" :formula "($Inv2) -> ($Inv)" :params ((tid n)))
  ; endpoints of the strengthened chain
  (lemma :name "chain-start" :formula "($Inv) && ($Cond) -> ($Inv2x)" :params ((tid 0)))
  (lemma :name "chain-end" :formula "($Inv2x) -> ($Inv)" :params ((tid n)))
  ; detection means global termination (the content of the safety theorem)
  (lemma :name "detection-is-termination"
         :formula "($Inv) && !($Cond) -> ($AllDone)")
  ; effect descriptions of one R application (the paper's case analysis):
  ; each case obligation is a basic-rule check over every token position
  (obligation (basic :name "R effect when the token is elsewhere (Q1, Q3)"
    :program R :at tid :forall ((tid 0 n))
    :pre "($Inv2x) && token.col = white && tid != token.pos"
    :post "$Q1"))
  (obligation (basic :name "R effect at the token (Q2)"
    :program R :at tid :forall ((tid 0 n))
    :pre "($Inv2x) && token.col = white && tid = token.pos"
    :post "$Q2"))

  (proof
    (dcomp :name "P = I #### Q" :program P :contour "(N E)"
      :pre "true" :post "prime($Final)"
      (hcomp :name "I = I1 ## init-chain" :program I
        :contour "(N E^(n+1))" :as-contour "(N E)"
        :pre "true" :post "prime($InitUpTo)" :post-params ((tid n))
        (basic :name "I1 fills the defaults" :program I1
          :contour "(N E) E^n" :vars ()
          :pre "true" :post "prime($InitUpTo)" :post-params ((tid 0)))
        (simplefor :name "I2 activates each process" :var tid :from 0 :to n
          :program INITFOR :at tid
          :contour "E (N E^n)" :formula "$InitUpTo"
{_INIT_VARS}))
      (implication :name "loop wrapper" :contour "(N E)"
        :pre "$InitUpTo" :pre-params ((tid n)) :post "prime($Final)"
        (stwhile :name "termination loop" :program Q
          :contour "(N E^n)" :as-contour "(N E)"
          :inv "$Inv" :cond "$Cond"
          :pre "$Inv" :post "prime(($Inv) && !($Cond))"
          (implication :name "a round preserves Inv" :contour "(N E^n)"
            :pre "($Inv) && ($Cond)" :post "prime($Inv)"
            (simplefor :name "R preserves Inv2x position by position"
              :var tid :from 0 :to n :program ROUND :at tid
              :contour "(N E^n)" :formula "$Inv2x")))))))
"""


_INITFOR_TEXT = "for_s(tid=0;tid<tn;tid++){I2}"


# ---------------------------------------------------------------------------
# Empirical soundness harness for the composite protocol triples
# ---------------------------------------------------------------------------


@dataclass
class HarnessReport:
    scenarios: int = 0
    states: int = 0
    violations: List[str] = field(default_factory=list)

    @property
    def ok(self):
        return not self.violations


def _ring_space():
    from .proofcheck import parse_script

    script = parse_script(
        flagship_proof(), extra_sources={"termination.agapia": PROTOCOL_SOURCE}
    )
    return script, script.space()


def _state_inputs(state, n):
    token = state["token"]
    msg = canon_value(VTup(tuple(state["msg"])))
    tin = [canon_value(VTup((VInt(n), VInt(0), msg, token)))]
    sin = [
        canon_value(VTup((VInt(k), state["c"][k], state["active"][k]))) for k in range(n)
    ]
    return tin, sin


def _round_outcome_env(scenario) -> Env:
    east = canon_value(scenario.east_data())
    south = [v for v in scenario.south_border() if not is_nil_value(canon_value(v))]
    return _boundary_env([east], south, tid_value=0)


def _state_key(env: Env):
    return (
        env.scalars["token"],
        env.scalars["msg"],
        env.families["c"],
        env.families["active"],
    )


def round_transitions(n: int, state, branch_limit: int = 100_000):
    """All post-round boundary environments from one ring state (every branch)."""
    from .interp import enumerate_branches
    from .interp import ScriptedSource  # noqa: F401  (type of the sources)

    round_prog = prepared_protocol(entry="Q").body
    tin, sin = _state_inputs(state, n)

    def run_once(src):
        cfg = RunConfig(source_factory=lambda path: src)
        scenario = run_prog(round_prog, tin, sin, cfg)
        return _round_outcome_env(scenario)

    outs = {}
    for env in enumerate_branches(run_once, limit=branch_limit):
        outs[_state_key(env)] = env
    return list(outs.values())


def soundness_harness_round(n: int, branch_limit: int = 100_000) -> HarnessReport:
    """Theorem-1 witness for {Inv && Cond} round {Inv'}: every scenario of
    the round program whose entry satisfies the pre must satisfy Inv at its
    exit, over all inputs in the domain and all random branches."""
    _script, space = _ring_space()
    forms = invariant_formulas()
    guard = parse_formula(_GUARD_TEXT)
    report = HarnessReport()
    for state in space.states(n, {}):
        env = space.env(state, n, {})
        report.states += 1
        if not (eval_formula(forms["Inv"], env) and eval_formula(guard, env)):
            continue
        for post_env in round_transitions(n, state, branch_limit):
            report.scenarios += 1
            if not eval_formula(forms["Inv"], post_env):
                report.violations.append(f"round from {state} reached {post_env.scalars}")
    return report


def soundness_harness_loop(n: int, branch_limit: int = 100_000) -> HarnessReport:
    """Theorem-1 witness for {Inv} while_st {Inv && !Cond}: breadth-first
    closure of the round transition over every Inv-state; all boundary
    states satisfy Inv and all terminal states satisfy the post."""
    _script, space = _ring_space()
    forms = invariant_formulas()
    guard = parse_formula(_GUARD_TEXT)
    done = parse_formula(_FORMULA_TEXTS["AllDone"])
    report = HarnessReport()
    seen = set()
    frontier = []
    envs = {}
    for state in space.states(n, {}):
        env = space.env(state, n, {})
        report.states += 1
        if not eval_formula(forms["Inv"], env):
            continue
        key = _state_key(env)
        if key not in seen:
            seen.add(key)
            frontier.append((state, env))
    while frontier:
        state, env = frontier.pop()
        if not eval_formula(forms["Inv"], env):
            report.violations.append(f"Inv fails at boundary {env.scalars}")
            continue
        if not eval_formula(guard, env):
            if not eval_formula(done, env):
                report.violations.append(f"terminal state not all-done: {env.scalars}")
            continue
        for post_env in round_transitions(n, state, branch_limit):
            report.scenarios += 1
            key = _state_key(post_env)
            if key in seen:
                if not eval_formula(forms["Inv"], post_env):
                    report.violations.append(f"Inv fails at boundary {post_env.scalars}")
                continue
            seen.add(key)
            frontier.append((_env_to_state(post_env, n), post_env))
    return report


def _env_to_state(env: Env, n: int):
    msg = env.scalars["msg"]
    msgs = msg.items if isinstance(msg, VTup) else ((msg,) if not is_nil_value(msg) else ())
    return {
        "token": env.scalars["token"],
        "msg": tuple(msgs),
        "c": tuple(env.families["c"]),
        "active": tuple(env.families["active"]),
        "id": tuple(VInt(k) for k in range(n)),
    }


def soundness_harness_program(n: int, branch_limit: int = 100_000) -> HarnessReport:
    """Theorem-1 witness for the top-level triple on P = I #### Q: from the
    initialization state, every reachable terminal state satisfies the final
    condition (white token at 0, all passive, no pending messages)."""
    forms = invariant_formulas()
    guard = parse_formula(_GUARD_TEXT)
    done = parse_formula(_FORMULA_TEXTS["AllDone"])
    init = prepared_protocol(entry="I")
    s = run_prog(init, [], [VInt(n)], RunConfig(seed=0))
    east = canon_value(s.east_data())
    south = [v for v in s.south_border() if not is_nil_value(canon_value(v))]
    env0 = _boundary_env([east], south, tid_value=0)
    report = HarnessReport(states=1)
    seen = {_state_key(env0)}
    frontier = [(_env_to_state(env0, n), env0)]
    while frontier:
        state, env = frontier.pop()
        if not eval_formula(forms["Inv"], env):
            report.violations.append(f"Inv fails at boundary {env.scalars}")
            continue
        if not eval_formula(guard, env):
            token = env.scalars["token"]
            if token != VTup((VColor("white"), VInt(0))) or not eval_formula(done, env):
                report.violations.append(f"bad terminal state {env.scalars}")
            continue
        for post_env in round_transitions(n, state, branch_limit):
            report.scenarios += 1
            key = _state_key(post_env)
            if key not in seen:
                seen.add(key)
                frontier.append((_env_to_state(post_env, n), post_env))
    return report

