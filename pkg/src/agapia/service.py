"""HTTP service exposing the toolchain.

A thin FastAPI wrapper over the core package so the parser, typechecker,
interpreter, verifier, and the protocol case study can serve multiple
clients from one long-lived process:

    uvicorn agapia.service:app

Requests carry program/script sources inline; responses mirror the CLI's
--json payloads.
"""

from __future__ import annotations

from typing import List, Optional

from fastapi import FastAPI, HTTPException
from pydantic import BaseModel, Field

from . import __version__
from .ast import ResolutionError, resolve_file
from .cli import JSON_SCHEMA_VERSION, _ast_json, _value_from_plain
from .iface import VInt, type_to_json, value_to_json
from .interp import AgapiaRuntimeError, RunConfig, run as run_program
from .macro import MacroError, expand_for_s
from .parser import ParseErrors, parse_source
from .pretty import pretty
from .proofcheck import Domain, ProofError, ScriptError, check_proof, parse_script
from .protocol import PROTOCOL_SOURCE, monitor_run
from .render import render_ascii, render_svg
from .typecheck import TypeCheckError, infer_type

app = FastAPI(title="agapia", version=__version__)


class SourceRequest(BaseModel):
    source: str
    entry: Optional[str] = None


class ParseResponse(BaseModel):
    schema_version: int = JSON_SCHEMA_VERSION
    pretty: str
    ast: dict


class TypeResponse(BaseModel):
    schema_version: int = JSON_SCHEMA_VERSION
    w: dict
    n: dict
    e: dict
    s: dict
    text: str


class RunRequest(BaseModel):
    source: str
    entry: Optional[str] = None
    seed: int = 0
    max_iters: int = Field(default=10_000, ge=1)
    tin: List[object] = Field(default_factory=list)
    sin: List[object] = Field(default_factory=list)
    render: Optional[str] = None  # ascii | svg


class RunResponse(BaseModel):
    schema_version: int = JSON_SCHEMA_VERSION
    rows: int
    cols: int
    east: dict
    south: dict
    scenario: dict
    rendered: Optional[str] = None


class VerifyRequest(BaseModel):
    script: str
    program_sources: dict = Field(default_factory=dict)
    n_max: Optional[int] = None


class VerifyResult(BaseModel):
    name: str
    rule: str
    n: int
    status: str
    detail: str
    states: int


class VerifyResponse(BaseModel):
    schema_version: int = JSON_SCHEMA_VERSION
    title: str
    ok: bool
    results: List[VerifyResult]


class ProtocolRequest(BaseModel):
    n: int = Field(default=3, ge=1)
    seed: int = 0
    max_rounds: int = Field(default=1000, ge=1)
    oracle_check: bool = True


class ProtocolResponse(BaseModel):
    schema_version: int = JSON_SCHEMA_VERSION
    n: int
    seed: int
    rounds: int
    terminated: bool
    inconclusive: bool
    ok: bool
    oracle_match: Optional[bool]
    violations: List[dict]
    final_state: Optional[dict]


def _bad_request(e: Exception, code: int = 422):
    raise HTTPException(status_code=code, detail=str(e))


def _prepared(req: SourceRequest):
    sf = parse_source(req.source, "<request>")
    return sf, expand_for_s(resolve_file(sf, req.entry))


@app.get("/health")
def health():
    return {"status": "ok", "version": __version__}


@app.post("/parse", response_model=ParseResponse)
def parse_endpoint(req: SourceRequest):
    try:
        sf = parse_source(req.source, "<request>")
    except ParseErrors as e:
        _bad_request(e)
    return ParseResponse(pretty=pretty(sf), ast=_ast_json(sf))


@app.post("/typecheck", response_model=TypeResponse)
def typecheck_endpoint(req: SourceRequest):
    try:
        _, prog = _prepared(req)
        t = infer_type(prog)
    except (ParseErrors, ResolutionError, MacroError, TypeCheckError) as e:
        _bad_request(e)
    return TypeResponse(
        w=type_to_json(t.w), n=type_to_json(t.n), e=type_to_json(t.e), s=type_to_json(t.s),
        text=str(t),
    )


@app.post("/run", response_model=RunResponse)
def run_endpoint(req: RunRequest):
    try:
        _, prog = _prepared(SourceRequest(source=req.source, entry=req.entry))
        infer_type(prog)
        tin = [_value_from_plain(x) for x in req.tin]
        sin = [_value_from_plain(x) for x in req.sin]
    except (ParseErrors, ResolutionError, MacroError, TypeCheckError, ValueError) as e:
        _bad_request(e)
    cfg = RunConfig(
        seed=req.seed, max_inner=req.max_iters, max_while_t=req.max_iters,
        max_while_s=req.max_iters, max_while_st=req.max_iters,
    )
    try:
        scenario = run_program(prog, tin, sin, cfg)
    except AgapiaRuntimeError as e:
        _bad_request(e, 400)
    rendered = None
    if req.render == "ascii":
        rendered = render_ascii(scenario)
    elif req.render == "svg":
        rendered = render_svg(scenario)
    return RunResponse(
        rows=scenario.rows,
        cols=scenario.cols,
        east=value_to_json(scenario.east_data()),
        south=value_to_json(scenario.south_data()),
        scenario=scenario.to_json(),
        rendered=rendered,
    )


@app.post("/verify", response_model=VerifyResponse)
def verify_endpoint(req: VerifyRequest):
    sources = {"termination.agapia": PROTOCOL_SOURCE, **req.program_sources}
    try:
        script = parse_script(req.script, extra_sources=sources)
    except ScriptError as e:
        _bad_request(e)
    domain = script.domain
    if req.n_max is not None:
        from dataclasses import replace

        lo = min(domain.n_values)
        domain = replace(domain, n_values=tuple(range(lo, req.n_max + 1)))
    try:
        report = check_proof(script, domain)
    except ProofError as e:
        _bad_request(e, 400)
    return VerifyResponse(
        title=script.title,
        ok=report.ok,
        results=[
            VerifyResult(
                name=r.name, rule=r.rule, n=r.n, status=r.verdict.status,
                detail=r.verdict.detail, states=r.verdict.enumerated,
            )
            for r in report.results
        ],
    )


@app.post("/protocol/ring", response_model=ProtocolResponse)
def protocol_endpoint(req: ProtocolRequest):
    cfg = RunConfig(seed=req.seed, max_while_st=req.max_rounds)
    rep = monitor_run(req.n, req.seed, cfg, oracle_check=req.oracle_check)
    final = None
    if rep.final_state is not None:
        final = {
            "token": [rep.final_state.token_col, rep.final_state.token_pos],
            "c": list(rep.final_state.c),
            "active": list(rep.final_state.active),
            "msg": [sorted(m) for m in rep.final_state.msg],
        }
    return ProtocolResponse(
        n=rep.n, seed=rep.seed, rounds=rep.rounds, terminated=rep.terminated,
        inconclusive=rep.inconclusive, ok=rep.ok, oracle_match=rep.oracle_match,
        violations=[{"where": v.where, "formula": v.formula, "detail": v.detail} for v in rep.violations],
        final_state=final,
    )
