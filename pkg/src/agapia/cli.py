"""Command-line toolchain.

Subcommands: parse, typecheck, run, render, verify, protocol.  Exit codes:
0 success, 1 usage error, 2 parse/type error, 3 runtime error,
4 verification failure.  Every subcommand has a --json mode (schema version
in the payload); identical invocations produce byte-identical output.

``AGAPIA_DOMAIN_N`` sets the default upper ring size for ``verify``.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from dataclasses import asdict
from pathlib import Path

from . import __version__
from .ast import ResolutionError, resolve_file
from .iface import VInt, Value, value_from_json, value_to_str
from .interp import AgapiaRuntimeError, RunConfig, run as run_program
from .macro import MacroError, expand_for_s
from .parser import ParseErrors, parse_source
from .pretty import pretty
from .proofcheck import Domain, ProofError, ScriptError, check_proof, parse_script
from .render import render_ascii, render_svg
from .typecheck import TypeCheckError, infer_type

JSON_SCHEMA_VERSION = 1

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_PARSE_TYPE = 2
EXIT_RUNTIME = 3
EXIT_VERIFY = 4


def _emit_json(payload) -> None:
    payload = {"schema": JSON_SCHEMA_VERSION, **payload}
    sys.stdout.write(json.dumps(payload, sort_keys=True, indent=2) + "\n")


def _ast_json(node):
    from dataclasses import fields, is_dataclass

    if is_dataclass(node):
        out = {"node": type(node).__name__}
        for f in fields(node):
            if f.name == "span":
                sp = getattr(node, f.name)
                if sp is not None:
                    out["span"] = {"line": sp.line, "col": sp.col, "file": sp.file}
                continue
            out[f.name] = _ast_json(getattr(node, f.name))
        return out
    if isinstance(node, tuple):
        return [_ast_json(x) for x in node]
    if isinstance(node, (str, int, bool)) or node is None:
        return node
    if isinstance(node, frozenset):
        return sorted(node)
    return str(node)


def _load_file(path: str):
    p = Path(path)
    if not p.exists():
        raise FileNotFoundError(f"no such file: {path}")
    return parse_source(p.read_text(), path)


def _prepare(path: str, entry=None):
    sf = _load_file(path)
    prog = resolve_file(sf, entry)
    return sf, expand_for_s(prog)


def _parse_inputs(arg: str):
    if not arg:
        return []
    out = []
    for chunk in arg.split(";"):
        chunk = chunk.strip()
        if not chunk:
            continue
        out.append(_parse_input_value(chunk))
    return out


def _parse_input_value(text: str) -> Value:
    obj = json.loads(text)
    return _value_from_plain(obj)


def _value_from_plain(obj) -> Value:
    from .iface import VBool, VColor, VSet, VTup

    if isinstance(obj, bool):
        return VBool(obj)
    if isinstance(obj, int):
        return VInt(obj)
    if isinstance(obj, str) and obj in ("white", "black"):
        return VColor(obj)
    if isinstance(obj, list):
        return VTup(tuple(_value_from_plain(x) for x in obj))
    if isinstance(obj, dict) and "set" in obj:
        return VSet(frozenset(obj["set"]))
    raise ValueError(f"cannot read input value {obj!r}")


def cmd_parse(args) -> int:
    try:
        sf = _load_file(args.file)
    except ParseErrors as e:
        for err in e.errors:
            print(f"error: {err}", file=sys.stderr)
        return EXIT_PARSE_TYPE
    except FileNotFoundError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_PARSE_TYPE
    if args.json:
        _emit_json({"kind": "ast", "file": args.file, "ast": _ast_json(sf)})
    else:
        sys.stdout.write(pretty(sf))
    return EXIT_OK


def cmd_typecheck(args) -> int:
    try:
        _, prog = _prepare(args.file, args.entry)
        t = infer_type(prog)
    except (ParseErrors, FileNotFoundError, ResolutionError, MacroError, TypeCheckError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_PARSE_TYPE
    if args.json:
        from .iface import type_to_json

        _emit_json(
            {
                "kind": "program-type",
                "w": type_to_json(t.w),
                "n": type_to_json(t.n),
                "e": type_to_json(t.e),
                "s": type_to_json(t.s),
            }
        )
    else:
        print(t)
    return EXIT_OK


def cmd_run(args) -> int:
    try:
        _, prog = _prepare(args.file, args.entry)
        infer_type(prog)
    except (ParseErrors, FileNotFoundError, ResolutionError, MacroError, TypeCheckError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_PARSE_TYPE
    cfg = RunConfig(
        seed=args.seed,
        max_inner=args.max_iters,
        max_while_t=args.max_iters,
        max_while_s=args.max_iters,
        max_while_st=args.max_iters,
    )
    try:
        tin = _parse_inputs(args.tin)
        sin = _parse_inputs(args.sin)
        scenario = run_program(prog, tin, sin, cfg)
    except AgapiaRuntimeError as e:
        print(f"runtime error: {e}", file=sys.stderr)
        return EXIT_RUNTIME
    except ValueError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_USAGE
    if args.json is not None:
        payload = {"schema": JSON_SCHEMA_VERSION, "kind": "scenario", **scenario.to_json()}
        text = json.dumps(payload, sort_keys=True)
        if args.json == "-":
            sys.stdout.write(text + "\n")
        else:
            Path(args.json).write_text(text + "\n")
    if args.render == "ascii":
        sys.stdout.write(render_ascii(scenario))
    elif args.render == "svg":
        sys.stdout.write(render_svg(scenario))
    elif args.json is None:
        print(f"scenario {scenario.rows}x{scenario.cols}")
        print("east:  " + value_to_str(scenario.east_data()))
        print("south: " + value_to_str(scenario.south_data()))
    return EXIT_OK


def cmd_render(args) -> int:
    try:
        payload = json.loads(Path(args.file).read_text())
        from .scenario import Scenario

        scenario = Scenario.from_json(payload)
    except Exception as e:
        print(f"error: cannot load scenario dump: {e}", file=sys.stderr)
        return EXIT_PARSE_TYPE
    out = render_svg(scenario) if args.format == "svg" else render_ascii(scenario)
    sys.stdout.write(out)
    return EXIT_OK


def _domain_from_arg(arg, script_domain: Domain) -> Domain:
    from dataclasses import replace

    n_max = None
    if arg:
        for part in arg.split(","):
            key, _, val = part.partition("=")
            if key.strip() == "n":
                n_max = int(val)
            else:
                print(f"warning: ignoring domain setting {part!r}", file=sys.stderr)
    elif os.environ.get("AGAPIA_DOMAIN_N"):
        n_max = int(os.environ["AGAPIA_DOMAIN_N"])
    if n_max is None:
        return script_domain
    lo = min(script_domain.n_values)
    return replace(script_domain, n_values=tuple(range(lo, n_max + 1)))


def cmd_verify(args) -> int:
    try:
        text = Path(args.file).read_text()
        script = parse_script(text, base_dir=str(Path(args.file).parent))
    except (ScriptError, FileNotFoundError, ParseErrors) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_PARSE_TYPE
    domain = _domain_from_arg(args.domain, script.domain)
    progress = None
    if not args.json and not args.quiet:
        progress = lambda r: print(
            f"[{'PASS' if r.verdict.ok else 'FAIL'}] n={r.n} {r.rule:<12} {r.name}"
            + (f" ({r.verdict.enumerated} states)" if r.verdict.enumerated else ""),
            flush=True,
        )
    try:
        report = check_proof(script, domain, progress=progress)
    except ProofError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_VERIFY
    if args.json:
        _emit_json(
            {
                "kind": "verification-report",
                "title": script.title,
                "ok": report.ok,
                "results": [
                    {
                        "name": r.name,
                        "rule": r.rule,
                        "n": r.n,
                        "status": r.verdict.status,
                        "detail": r.verdict.detail,
                        "states": r.verdict.enumerated,
                        "checked": r.verdict.discharged,
                    }
                    for r in report.results
                ],
            }
        )
    else:
        if args.quiet:
            for line in report.summary_lines():
                print(line)
        print(f"verdict: {'ALL VALID' if report.ok else 'FAILED'}")
        fail = report.first_failure()
        if fail:
            print(f"first failure: {fail.rule} {fail.name}: {fail.verdict.detail}")
    return EXIT_OK if report.ok else EXIT_VERIFY


def cmd_protocol(args) -> int:
    from .protocol import monitor_run, oracle_simulate, prepared_protocol

    if args.action != "ring":
        print("error: only the 'ring' protocol is available", file=sys.stderr)
        return EXIT_USAGE
    cfg = RunConfig(seed=args.seed, max_while_st=args.max_rounds)
    if args.monitor or args.oracle_check:
        rep = monitor_run(args.n, args.seed, cfg, oracle_check=args.oracle_check)
        if args.json:
            _emit_json(
                {
                    "kind": "monitor-report",
                    "n": rep.n,
                    "seed": rep.seed,
                    "rounds": rep.rounds,
                    "terminated": rep.terminated,
                    "inconclusive": rep.inconclusive,
                    "violations": [asdict(v) for v in rep.violations],
                    "boundaries": rep.boundaries_checked,
                    "positions": rep.positions_checked,
                    "oracle_match": rep.oracle_match,
                    "final_state": None if rep.final_state is None else {
                        "token": [rep.final_state.token_col, rep.final_state.token_pos],
                        "c": list(rep.final_state.c),
                        "active": list(rep.final_state.active),
                        "msg": [sorted(m) for m in rep.final_state.msg],
                    },
                }
            )
        else:
            status = "inconclusive" if rep.inconclusive else ("ok" if rep.ok else "VIOLATIONS")
            print(f"ring n={rep.n} seed={rep.seed}: {status} after {rep.rounds} rounds")
            print(f"boundaries checked: {rep.boundaries_checked}, positions: {rep.positions_checked}")
            if rep.oracle_match is not None:
                print(f"oracle agreement: {rep.oracle_match}")
            for v in rep.violations[:10]:
                print(f"  violation at {v.where}: {v.formula} {v.detail}")
        if rep.inconclusive:
            return EXIT_OK  # inconclusive is reported, not failed
        return EXIT_OK if rep.ok else EXIT_VERIFY
    try:
        scenario = run_program(prepared_protocol(), [], [VInt(args.n)], cfg)
    except AgapiaRuntimeError as e:
        print(f"runtime error: {e}", file=sys.stderr)
        return EXIT_RUNTIME
    if args.render == "svg":
        sys.stdout.write(render_svg(scenario))
    elif args.render == "ascii":
        sys.stdout.write(render_ascii(scenario))
    else:
        print(f"scenario {scenario.rows}x{scenario.cols}")
        print("final: " + value_to_str(scenario.east_data()))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="agapia", description=__doc__)
    ap.add_argument("--version", action="version", version=f"agapia {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("parse", help="parse a source file; print it back or dump the AST")
    p.add_argument("file")
    p.add_argument("--json", action="store_true")
    p.set_defaults(fn=cmd_parse)

    p = sub.add_parser("typecheck", help="infer the four-border program type")
    p.add_argument("file")
    p.add_argument("--entry", default=None)
    p.add_argument("--json", action="store_true")
    p.set_defaults(fn=cmd_typecheck)

    p = sub.add_parser("run", help="execute a program on border inputs")
    p.add_argument("file")
    p.add_argument("--entry", default=None)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--max-iters", type=int, default=10_000)
    p.add_argument("--tin", default="", help="temporal inputs, ';'-separated JSON values")
    p.add_argument("--sin", default="", help="spatial inputs, ';'-separated JSON values")
    p.add_argument("--json", nargs="?", const="-", default=None, metavar="OUT")
    p.add_argument("--render", choices=("ascii", "svg"), default=None)
    p.set_defaults(fn=cmd_run)

    p = sub.add_parser("render", help="render a scenario JSON dump")
    p.add_argument("file")
    p.add_argument("--format", choices=("ascii", "svg"), default="ascii")
    p.set_defaults(fn=cmd_render)

    p = sub.add_parser("verify", help="check a .sthl proof script")
    p.add_argument("file")
    p.add_argument("--domain", default=None, help="e.g. n=3")
    p.add_argument("--json", action="store_true")
    p.add_argument("--quiet", action="store_true", help="summary table only")
    p.set_defaults(fn=cmd_verify)

    p = sub.add_parser("protocol", help="run the termination-detection case study")
    p.add_argument("action", choices=("ring",))
    p.add_argument("--n", type=int, default=3)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--max-rounds", type=int, default=1000)
    p.add_argument("--monitor", action="store_true")
    p.add_argument("--oracle-check", action="store_true")
    p.add_argument("--render", choices=("ascii", "svg"), default=None)
    p.add_argument("--json", action="store_true")
    p.set_defaults(fn=cmd_protocol)
    return ap


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
    except SystemExit as e:
        return EXIT_USAGE if e.code not in (0, None) else 0
    return args.fn(args)


if __name__ == "__main__":
    sys.exit(main())
