"""Lexer and recursive-descent parser for AGAPIA v0.1 source files.

A source file is either a bare program or a sequence of ``NAME = program``
definitions (the corpus style).  Comments run from ``//`` to end of line.
On a syntax error the parser records a positioned diagnostic, skips to the
next statement boundary and keeps going, so one bad statement yields one
error.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import List, Optional, Tuple

from . import ast as A
from .iface import TypeSyntaxError, parse_type

KEYWORDS = {
    "module", "listen", "read", "speak", "write", "new", "if", "else",
    "while", "while_t", "while_s", "while_st", "for", "for_s", "nil",
    "null", "true", "false", "white", "black", "union", "minus",
    "contains", "random", "delay", "mod",
}

PUNCT = [
    "####", "##", "++", "==", "!=", "&&", "||", "#", "{", "}", "(", ")",
    "[", "]", ";", ",", ":", ".", "~", "=", "<", "!", "+", "-", "*", "/", "|",
]


@dataclass
class Token:
    kind: str  # 'ident', 'int', 'kw', punct literal, 'eof'
    text: str
    line: int
    col: int


class ParseError(Exception):
    def __init__(self, message, span: Optional[A.Span] = None):
        self.message = message
        self.span = span
        at = f" at {span}" if span else ""
        super().__init__(f"{message}{at}")


class ParseErrors(Exception):
    def __init__(self, errors: List[ParseError]):
        self.errors = errors
        super().__init__("; ".join(str(e) for e in errors))


def lex(text: str, filename: str = "<input>") -> List[Token]:
    toks: List[Token] = []
    i, line, col = 0, 1, 1
    n = len(text)
    while i < n:
        ch = text[i]
        if ch == "\n":
            i += 1
            line += 1
            col = 1
            continue
        if ch.isspace():
            i += 1
            col += 1
            continue
        if text.startswith("//", i):
            while i < n and text[i] != "\n":
                i += 1
            continue
        if ch.isdigit():
            j = i
            while j < n and text[j].isdigit():
                j += 1
            toks.append(Token("int", text[i:j], line, col))
            col += j - i
            i = j
            continue
        if ch.isalpha() or ch == "_":
            j = i
            while j < n and (text[j].isalnum() or text[j] == "_"):
                j += 1
            word = text[i:j]
            toks.append(Token("kw" if word in KEYWORDS else "ident", word, line, col))
            col += j - i
            i = j
            continue
        for p in PUNCT:
            if text.startswith(p, i):
                toks.append(Token(p, p, line, col))
                i += len(p)
                col += len(p)
                break
        else:
            raise ParseErrors([ParseError(f"unexpected character {ch!r}", A.Span(line, col, line, col, filename))])
    toks.append(Token("eof", "", line, col))
    return toks


class Parser:
    def __init__(self, tokens: List[Token], filename: str = "<input>"):
        self.toks = tokens
        self.pos = 0
        self.filename = filename
        self.errors: List[ParseError] = []

    # -- token plumbing ----------------------------------------------------

    def peek(self, off=0) -> Token:
        return self.toks[min(self.pos + off, len(self.toks) - 1)]

    def at(self, kind, text=None) -> bool:
        t = self.peek()
        return t.kind == kind and (text is None or t.text == text)

    def at_kw(self, word) -> bool:
        return self.at("kw", word)

    def advance(self) -> Token:
        t = self.toks[self.pos]
        if t.kind != "eof":
            self.pos += 1
        return t

    def span(self, tok: Token) -> A.Span:
        return A.Span(tok.line, tok.col, tok.line, tok.col + max(len(tok.text) - 1, 0), self.filename)

    def expect(self, kind, text=None) -> Token:
        if self.at(kind, text):
            return self.advance()
        t = self.peek()
        want = text or kind
        raise ParseError(f"expected {want!r}, found {t.text or t.kind!r}", self.span(t))

    def expect_kw(self, word) -> Token:
        if self.at_kw(word):
            return self.advance()
        t = self.peek()
        raise ParseError(f"expected {word!r}, found {t.text or t.kind!r}", self.span(t))

    def error_here(self, msg) -> ParseError:
        return ParseError(msg, self.span(self.peek()))

    def sync_statement(self):
        """Skip to just past the next ';' (or to a closing brace)."""
        depth = 0
        while not self.at("eof"):
            t = self.peek()
            if t.kind == "{":
                depth += 1
            elif t.kind == "}":
                if depth == 0:
                    return
                depth -= 1
            elif t.kind == ";" and depth == 0:
                self.advance()
                return
            self.advance()

    # -- source files ------------------------------------------------------

    def parse_file(self) -> A.SourceFile:
        start = self.peek()
        defs: List[Tuple[str, A.Program]] = []
        program = None
        if self.at("ident") and self.peek(1).kind == "=":
            while self.at("ident") and self.peek(1).kind == "=":
                name = self.advance().text
                self.expect("=")
                try:
                    p = self.parse_program()
                except ParseError as e:
                    self.errors.append(e)
                    self.sync_statement()
                    p = A.PNil()
                while self.at(";"):
                    self.advance()
                defs.append((name, p))
            if not self.at("eof"):
                self.errors.append(self.error_here("expected a definition or end of file"))
        else:
            try:
                program = self.parse_program()
            except ParseError as e:
                self.errors.append(e)
                program = A.PNil()
            while self.at(";"):
                self.advance()
            if not self.at("eof"):
                self.errors.append(self.error_here("trailing tokens after program"))
        if self.errors:
            raise ParseErrors(self.errors)
        return A.SourceFile(tuple(defs), program, span=self.span(start))

    # -- programs ----------------------------------------------------------

    def parse_program(self) -> A.Program:
        left = self.parse_program_atom()
        while self.peek().kind in ("#", "##", "####"):
            op = self.advance()
            right = self.parse_program_atom()
            node = {"#": A.PVComp, "##": A.PHComp, "####": A.PDComp}[op.kind]
            left = node(left, right, span=self.span(op))
        return left

    def parse_program_atom(self) -> A.Program:
        t = self.peek()
        if t.kind == "(":
            self.advance()
            p = self.parse_program()
            self.expect(")")
            return p
        if self.at_kw("nil"):
            return A.PNil(span=self.span(self.advance()))
        if self.at_kw("module"):
            return self.parse_module()
        if self.at_kw("if"):
            self.advance()
            self.expect("(")
            cond = self.parse_expr()
            self.expect(")")
            self.expect("{")
            then = self.parse_program()
            self.expect("}")
            self.expect_kw("else")
            self.expect("{")
            els = self.parse_program()
            self.expect("}")
            return A.PIf(cond, then, els, span=self.span(t))
        for kw, node in (("while_t", A.PWhileT), ("while_s", A.PWhileS), ("while_st", A.PWhileST)):
            if self.at_kw(kw):
                self.advance()
                self.expect("(")
                cond = self.parse_expr()
                self.expect(")")
                self.expect("{")
                body = self.parse_program()
                self.expect("}")
                return node(cond, body, span=self.span(t))
        if self.at_kw("for_s"):
            self.advance()
            self.expect("(")
            var = self.expect("ident").text
            self.expect("=")
            init = self.parse_expr()
            self.expect(";")
            var2 = self.expect("ident").text
            self.expect("<")
            bound = self.parse_expr()
            self.expect(";")
            var3 = self.expect("ident").text
            self.expect("++")
            self.expect(")")
            self.expect("{")
            body = self.parse_program()
            self.expect("}")
            if var2 != var or var3 != var:
                raise ParseError(f"for_s counter must be {var!r} throughout", self.span(t))
            return A.PForS(var, init, bound, body, span=self.span(t))
        if t.kind == "ident":
            return A.PRef(self.advance().text, span=self.span(t))
        raise self.error_here(f"expected a program, found {t.text or t.kind!r}")

    # -- modules -----------------------------------------------------------

    def parse_module(self) -> A.PModule:
        start = self.expect_kw("module")
        self.expect("{")
        self.expect_kw("listen")
        listen = self.parse_decls()
        self.expect("}")
        self.expect("{")
        self.expect_kw("read")
        read = self.parse_decls()
        self.expect("}")
        self.expect("{")
        body = self.parse_stmts()
        self.expect("}")
        self.expect("{")
        self.expect_kw("speak")
        speak = self.parse_decls()
        self.expect("}")
        self.expect("{")
        self.expect_kw("write")
        write = self.parse_decls()
        self.expect("}")
        mod = A.Module(listen, read, tuple(body), speak, write, span=self.span(start))
        return A.PModule(mod, span=self.span(start))

    def parse_decls(self) -> Tuple[A.Decl, ...]:
        if self.at_kw("nil"):
            self.advance()
            return ()
        decls = [self.parse_decl()]
        while self.at(","):
            self.advance()
            decls.append(self.parse_decl())
        if self.at(";"):  # trailing semicolon as in the corpus speak lists
            self.advance()
        return tuple(decls)

    def parse_decl(self) -> A.Decl:
        t = self.expect("ident")
        name = t.text
        if self.at("["):
            self.advance()
            self.expect("~")
            self.expect("]")
            return A.Decl(name, form="array", span=self.span(t))
        if self.at("("):
            self.advance()
            fields = [self.expect("ident").text]
            while self.at(","):
                self.advance()
                fields.append(self.expect("ident").text)
            self.expect(")")
            return A.Decl(name, form="record", fields=tuple(fields), span=self.span(t))
        if self.at(":"):
            self.advance()
            ann = self.parse_type_annotation()
            return A.Decl(name, ann=ann, span=self.span(t))
        return A.Decl(name, span=self.span(t))

    def parse_type_annotation(self):
        """Collect the next leaf or balanced-paren token group and parse it."""
        parts = []
        t = self.peek()
        if t.kind in ("ident", "kw") and t.text != "nil":
            parts.append(self.advance().text)
        elif self.at_kw("nil"):
            parts.append(self.advance().text)
        elif t.kind == "(":
            depth = 0
            while True:
                tok = self.peek()
                if tok.kind == "eof":
                    raise self.error_here("unterminated type annotation")
                parts.append(self.advance().text)
                if tok.kind == "(":
                    depth += 1
                elif tok.kind == ")":
                    depth -= 1
                    if depth == 0:
                        break
            if self.at("*"):
                parts.append(self.advance().text)
        else:
            raise self.error_here("expected a type annotation")
        if parts and parts[-1] != "*" and self.at("*"):
            parts.append(self.advance().text)
        try:
            return parse_type(" ".join(parts))
        except TypeSyntaxError as e:
            raise ParseError(f"bad type annotation: {e}", self.span(t))

    # -- statements ----------------------------------------------------------

    def parse_stmts(self) -> List[A.WStmt]:
        stmts: List[A.WStmt] = []
        while not self.at("}") and not self.at("eof"):
            if self.at(";"):
                self.advance()
                continue
            try:
                stmts.append(self.parse_stmt())
            except ParseError as e:
                self.errors.append(e)
                self.sync_statement()
        return stmts

    def parse_block(self) -> Tuple[A.WStmt, ...]:
        """Either a braced block or a single statement (corpus if-style)."""
        if self.at("{"):
            self.advance()
            body = self.parse_stmts()
            self.expect("}")
            if self.at(";"):
                self.advance()
            return tuple(body)
        return (self.parse_stmt(),)

    def parse_stmt(self) -> A.WStmt:
        t = self.peek()
        if self.at_kw("nil"):
            self.advance()
            if self.at(";"):
                self.advance()
            return A.WNil(span=self.span(t))
        if self.at_kw("new"):
            self.advance()
            name = self.expect("ident").text
            ann = None
            if self.at(":"):
                self.advance()
                ann = self.parse_type_annotation()
            if self.at(";"):
                self.advance()
            return A.WNew(name, ann, span=self.span(t))
        if self.at_kw("delay"):
            self.advance()
            self.expect("(")
            expr = self.parse_expr()
            self.expect(")")
            if self.at(";"):
                self.advance()
            return A.WDelay(expr, span=self.span(t))
        if self.at_kw("if"):
            self.advance()
            self.expect("(")
            cond = self.parse_expr()
            self.expect(")")
            then = self.parse_block()
            els: Tuple[A.WStmt, ...] = ()
            if self.at_kw("else"):
                self.advance()
                els = self.parse_block()
            return A.WIf(cond, then, els, span=self.span(t))
        if self.at_kw("while"):
            self.advance()
            self.expect("(")
            cond = self.parse_expr()
            self.expect(")")
            body = self.parse_block()
            return A.WWhile(cond, body, span=self.span(t))
        if self.at_kw("for"):
            self.advance()
            self.expect("(")
            var = self.expect("ident").text
            self.expect("=")
            init = self.parse_expr()
            self.expect(";")
            cond = self.parse_expr()
            self.expect(";")
            var2 = self.expect("ident").text
            self.expect("++")
            self.expect(")")
            body = self.parse_block()
            if var2 != var:
                raise ParseError(f"for counter must be {var!r} throughout", self.span(t))
            return A.WFor(var, init, cond, body, span=self.span(t))
        if t.kind == "ident":
            lv = self.parse_lvalue()
            self.expect("=")
            expr = self.parse_expr()
            if self.at(";"):
                self.advance()
            return A.WAssign(lv, expr, span=self.span(t))
        raise self.error_here(f"expected a statement, found {t.text or t.kind!r}")

    def parse_lvalue(self) -> A.LValue:
        t = self.expect("ident")
        if self.at("."):
            self.advance()
            f = self.expect("ident").text
            return A.LField(t.text, f, span=self.span(t))
        if self.at("["):
            self.advance()
            idx = self.parse_expr()
            self.expect("]")
            return A.LIndex(t.text, idx, span=self.span(t))
        return A.LVar(t.text, span=self.span(t))

    # -- expressions ---------------------------------------------------------

    def parse_expr(self) -> A.Expr:
        return self.parse_or()

    def parse_or(self) -> A.Expr:
        left = self.parse_and()
        while self.at("||"):
            op = self.advance()
            left = A.EBin("||", left, self.parse_and(), span=self.span(op))
        return left

    def parse_and(self) -> A.Expr:
        left = self.parse_cmp()
        while self.at("&&"):
            op = self.advance()
            left = A.EBin("&&", left, self.parse_cmp(), span=self.span(op))
        return left

    def parse_cmp(self) -> A.Expr:
        left = self.parse_modexpr()
        while self.peek().kind in ("<", "==", "!=") or self.at_kw("contains"):
            op = self.advance()
            opname = "contains" if op.kind == "kw" else op.kind
            left = A.EBin(opname, left, self.parse_modexpr(), span=self.span(op))
        return left

    def parse_modexpr(self) -> A.Expr:
        left = self.parse_add()
        if self.at("[") and self.peek(1).kind == "kw" and self.peek(1).text == "mod":
            br = self.advance()
            self.advance()  # mod
            m = self.parse_add()
            self.expect("]")
            return A.EMod(left, m, span=self.span(br))
        return left

    def parse_add(self) -> A.Expr:
        left = self.parse_mul()
        while self.peek().kind in ("+", "-") or self.at_kw("union") or self.at_kw("minus"):
            op = self.advance()
            opname = {"+": "+", "-": "-", "union": "union", "minus": "-"}[op.text]
            left = A.EBin(opname, left, self.parse_mul(), span=self.span(op))
        return left

    def parse_mul(self) -> A.Expr:
        left = self.parse_unary()
        while self.peek().kind in ("*", "/"):
            op = self.advance()
            left = A.EBin(op.kind, left, self.parse_unary(), span=self.span(op))
        return left

    def parse_unary(self) -> A.Expr:
        if self.at("!"):
            op = self.advance()
            return A.ENot(self.parse_unary(), span=self.span(op))
        return self.parse_postfix()

    def parse_postfix(self) -> A.Expr:
        e = self.parse_atom()
        while True:
            if self.at("."):
                self.advance()
                f = self.expect("ident").text
                e = A.EField(e, f)
            elif self.at("[") and not (self.peek(1).kind == "kw" and self.peek(1).text == "mod"):
                self.advance()
                idx = self.parse_expr()
                self.expect("]")
                e = A.EIndex(e, idx)
            else:
                return e

    def parse_atom(self) -> A.Expr:
        t = self.peek()
        if t.kind == "int":
            self.advance()
            return A.EInt(int(t.text), span=self.span(t))
        if self.at_kw("true") or self.at_kw("false"):
            self.advance()
            return A.EBool(t.text == "true", span=self.span(t))
        if self.at_kw("white") or self.at_kw("black"):
            self.advance()
            return A.EColor(t.text, span=self.span(t))
        if self.at_kw("null"):
            self.advance()
            return A.ENull(span=self.span(t))
        if self.at_kw("random"):
            self.advance()
            self.expect("(")
            booleanish = self.at_kw("true") or self.at_kw("false")
            if booleanish and self.peek(1).kind == ",":
                first = self.advance().text
                self.expect(",")
                second = self.advance().text
                self.expect(")")
                if {first, second} != {"true", "false"}:
                    raise ParseError("random over booleans must be random(true,false)", self.span(t))
                return A.ERandBool(span=self.span(t))
            bound = self.parse_expr()
            self.expect(")")
            return A.ERandInt(bound, span=self.span(t))
        if t.kind == "{":
            self.advance()
            items = []
            if not self.at("}"):
                items.append(self.parse_expr())
                while self.at(","):
                    self.advance()
                    items.append(self.parse_expr())
            self.expect("}")
            return A.ESetLit(tuple(items), span=self.span(t))
        if t.kind == "(":
            self.advance()
            e = self.parse_expr()
            self.expect(")")
            return e
        if t.kind == "ident":
            self.advance()
            return A.EVar(t.text, span=self.span(t))
        raise self.error_here(f"expected an expression, found {t.text or t.kind!r}")


def parse_source(text: str, filename: str = "<input>") -> A.SourceFile:
    p = Parser(lex(text, filename), filename)
    return p.parse_file()


def parse(text: str, filename: str = "<input>", entry: Optional[str] = None) -> A.Program:
    """Parse and resolve to a closed program (the spec-facing entry point)."""
    return A.resolve_file(parse_source(text, filename), entry)
