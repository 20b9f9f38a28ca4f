"""Lexer and recursive-descent parser for ``.mini`` source files."""

from __future__ import annotations

import re
from dataclasses import dataclass

from . import nodes as n
from .tree import Ast, renumber

KEYWORDS = {"fun", "var", "if", "else", "while", "return", "assert", "true", "false", "null"}
INT_MAX = 2**63 - 1

_TOKEN_RE = re.compile(
    r"""
    (?P<ws>[ \t\r\n]+)
  | (?P<comment>//[^\n]*)
  | (?P<int>[0-9]+)
  | (?P<name>[A-Za-z_][A-Za-z0-9_]*)
  | (?P<str>"(?:[^"\\\n]|\\.)*")
  | (?P<op>==|!=|<=|>=|&&|\|\||[-+*/%<>=!(){}\[\],;.:])
    """,
    re.VERBOSE,
)

_ESCAPES = {"n": "\n", "t": "\t", '"': '"', "\\": "\\"}


@dataclass(frozen=True)
class Token:
    kind: str  # int | name | str | op | kw | eof
    text: str
    start: int
    end: int


class ParseError(Exception):
    def __init__(self, message: str, line: int, column: int, expected: frozenset[str] = frozenset()):
        self.message = message
        self.line = line
        self.column = column
        self.expected = expected
        super().__init__(f"parse error at {line}:{column}: {message}")


def _position(text: str, offset: int) -> tuple[int, int]:
    line = text.count("\n", 0, offset) + 1
    col = offset - (text.rfind("\n", 0, offset) + 1) + 1
    return line, col


def tokenize(text: str) -> list[Token]:
    tokens = []
    pos = 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if m is None:
            line, col = _position(text, pos)
            raise ParseError(f"unexpected character {text[pos]!r}", line, col)
        kind = m.lastgroup
        if kind not in ("ws", "comment"):
            if kind == "name" and m.group() in KEYWORDS:
                kind = "kw"
            tokens.append(Token(kind, m.group(), m.start(), m.end()))
        pos = m.end()
    tokens.append(Token("eof", "", len(text), len(text)))
    return tokens


def _unescape(raw: str) -> str:
    out = []
    i = 1
    while i < len(raw) - 1:
        c = raw[i]
        if c == "\\":
            out.append(_ESCAPES.get(raw[i + 1], raw[i + 1]))
            i += 2
        else:
            out.append(c)
            i += 1
    return "".join(out)


_BINARY_LEVELS = [
    ("||",),
    ("&&",),
    ("==", "!="),
    ("<", "<=", ">", ">="),
    ("+", "-"),
    ("*", "/", "%"),
]


class Parser:
    def __init__(self, text: str):
        self.text = text
        self.tokens = tokenize(text)
        self.pos = 0

    # -- helpers ------------------------------------------------------------

    @property
    def tok(self) -> Token:
        return self.tokens[self.pos]

    def _at(self, *texts: str) -> bool:
        t = self.tok
        return t.kind in ("op", "kw") and t.text in texts

    def _error(self, expected) -> ParseError:
        t = self.tok
        line, col = _position(self.text, t.start)
        found = "end of input" if t.kind == "eof" else repr(t.text)
        expected = frozenset(expected)
        return ParseError(f"expected {' or '.join(sorted(expected))}, found {found}", line, col, expected)

    def _expect(self, text: str) -> Token:
        if not self._at(text):
            raise self._error({text})
        return self._advance()

    def _advance(self) -> Token:
        t = self.tokens[self.pos]
        self.pos += 1
        return t

    def _name(self) -> Token:
        if self.tok.kind != "name":
            raise self._error({"identifier"})
        return self._advance()

    def _end(self) -> int:
        return self.tokens[self.pos - 1].end

    # -- declarations ---------------------------------------------------------

    def parse_functions(self) -> tuple[n.FunDecl, ...]:
        functions = []
        while self.tok.kind != "eof":
            functions.append(self.fundecl())
        return tuple(functions)

    def fundecl(self) -> n.FunDecl:
        start = self._expect("fun").start
        name = self._name().text
        self._expect("(")
        params = []
        if not self._at(")"):
            params.append(self._name().text)
            while self._at(","):
                self._advance()
                params.append(self._name().text)
        self._expect(")")
        if len(set(params)) != len(params):
            raise self._error({"distinct parameter names"})
        body = self.block()
        return n.FunDecl(name=name, params=tuple(params), body=body, span=(start, self._end()))

    def block(self) -> n.Block:
        start = self._expect("{").start
        stmts = []
        while not self._at("}"):
            if self.tok.kind == "eof":
                raise self._error({"}"})
            stmts.append(self.statement())
        self._advance()
        return n.Block(stmts=tuple(stmts), span=(start, self._end()))

    # -- statements -----------------------------------------------------------

    def statement(self) -> n.Stmt:
        start = self.tok.start
        if self._at("var"):
            self._advance()
            name = self._name().text
            self._expect("=")
            init = self.expression()
            self._expect(";")
            return n.VarDecl(name=name, init=init, span=(start, self._end()))
        if self._at("if"):
            self._advance()
            self._expect("(")
            cond = self.expression()
            self._expect(")")
            then = self.block()
            orelse = None
            if self._at("else"):
                self._advance()
                orelse = self.block()
            return n.If(cond=cond, then=then, orelse=orelse, span=(start, self._end()))
        if self._at("while"):
            self._advance()
            self._expect("(")
            cond = self.expression()
            self._expect(")")
            body = self.block()
            return n.While(cond=cond, body=body, span=(start, self._end()))
        if self._at("return"):
            self._advance()
            value = None
            if not self._at(";"):
                value = self.expression()
            self._expect(";")
            return n.Return(value=value, span=(start, self._end()))
        if self._at("assert"):
            self._advance()
            self._expect("(")
            cond = self.expression()
            self._expect(")")
            self._expect(";")
            return n.Assert(cond=cond, span=(start, self._end()))
        expr = self.expression()
        if self._at("="):
            if not isinstance(expr, n.LVALUE_KINDS):
                raise self._error({";"})
            self._advance()
            value = self.expression()
            self._expect(";")
            return n.Assign(target=expr, value=value, span=(start, self._end()))
        if not self._at(";"):
            raise self._error({";", "="})
        self._advance()
        return n.ExprStmt(expr=expr, span=(start, self._end()))

    # -- expressions ----------------------------------------------------------

    def expression(self) -> n.Expr:
        return self._binary(0)

    def _binary(self, level: int) -> n.Expr:
        if level == len(_BINARY_LEVELS):
            return self._unary()
        left = self._binary(level + 1)
        while self.tok.kind == "op" and self.tok.text in _BINARY_LEVELS[level]:
            op = self._advance().text
            right = self._binary(level + 1)
            left = n.BinOp(op=op, left=left, right=right, span=(left.span[0], self._end()))
        return left

    def _unary(self) -> n.Expr:
        if self._at("!", "-"):
            start = self.tok.start
            op = self._advance().text
            operand = self._unary()
            return n.UnOp(op=op, operand=operand, span=(start, self._end()))
        return self._postfix()

    def _postfix(self) -> n.Expr:
        expr = self._primary()
        while True:
            start = expr.span[0]
            if self._at("."):
                self._advance()
                name = self._name().text
                if self._at("("):
                    args = self._args()
                    expr = n.Call(name=name, args=args, receiver=expr, span=(start, self._end()))
                else:
                    expr = n.FieldAccess(obj=expr, name=name, span=(start, self._end()))
            elif self._at("["):
                self._advance()
                index = self.expression()
                self._expect("]")
                expr = n.Index(obj=expr, index=index, span=(start, self._end()))
            else:
                return expr

    def _args(self) -> tuple[n.Expr, ...]:
        self._expect("(")
        args = []
        if not self._at(")"):
            args.append(self.expression())
            while self._at(","):
                self._advance()
                args.append(self.expression())
        self._expect(")")
        return tuple(args)

    def _primary(self) -> n.Expr:
        t = self.tok
        start = t.start
        if t.kind == "int":
            value = int(t.text)
            if value > INT_MAX:
                line, col = _position(self.text, t.start)
                raise ParseError("integer literal out of range", line, col)
            self._advance()
            return n.Literal(value=value, span=(start, t.end))
        if t.kind == "str":
            self._advance()
            return n.Literal(value=_unescape(t.text), span=(start, t.end))
        if t.kind == "kw" and t.text in ("true", "false", "null"):
            self._advance()
            value = {"true": True, "false": False, "null": None}[t.text]
            return n.Literal(value=value, span=(start, t.end))
        if t.kind == "name":
            self._advance()
            if self._at("("):
                args = self._args()
                return n.Call(name=t.text, args=args, span=(start, self._end()))
            return n.VarRef(name=t.text, span=(start, t.end))
        if self._at("("):
            self._advance()
            inner = self.expression()
            self._expect(")")
            return inner
        if self._at("{"):
            return self._record()
        if self._at("["):
            self._advance()
            elems = []
            if not self._at("]"):
                elems.append(self.expression())
                while self._at(","):
                    self._advance()
                    elems.append(self.expression())
            self._expect("]")
            return n.ArrayLit(elems=tuple(elems), span=(start, self._end()))
        raise self._error({"expression"})

    def _record(self) -> n.RecordLit:
        start = self._expect("{").start
        fields: list[tuple[str, n.Expr]] = []
        seen: set[str] = set()
        if not self._at("}"):
            while True:
                name_tok = self._name()
                if name_tok.text in seen:
                    line, col = _position(self.text, name_tok.start)
                    raise ParseError(f"duplicate record field {name_tok.text!r}", line, col)
                seen.add(name_tok.text)
                self._expect(":")
                fields.append((name_tok.text, self.expression()))
                if not self._at(","):
                    break
                self._advance()
        self._expect("}")
        return n.RecordLit(fields=tuple(fields), span=(start, self._end()))


def parse(text: str, path: str = "<string>") -> Ast:
    """Parse a whole file. Raises ``ParseError`` on malformed input."""
    functions = Parser(text).parse_functions()
    return Ast(path=path, functions=renumber(functions, keep_origin=False), text=text)


def parse_expr(text: str) -> n.Expr:
    """Parse a standalone expression (used to build synthesized conditions)."""
    p = Parser(text)
    expr = p.expression()
    if p.tok.kind != "eof":
        raise p._error({"end of input"})
    return n.strip_meta(expr)


def parse_stmt(text: str) -> n.Stmt:
    p = Parser(text)
    stmt = p.statement()
    if p.tok.kind != "eof":
        raise p._error({"end of input"})
    return n.strip_meta(stmt)
