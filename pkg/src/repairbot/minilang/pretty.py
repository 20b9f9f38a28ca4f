"""Canonical pretty-printer.

Formatting is fixed: two-space indent, one statement per line, a blank line
between functions, minimal parentheses.
"""

from __future__ import annotations

from . import nodes as n
from .tree import Ast

INDENT = "  "

_PRECEDENCE = {
    "||": 1,
    "&&": 2,
    "==": 3,
    "!=": 3,
    "<": 4,
    "<=": 4,
    ">": 4,
    ">=": 4,
    "+": 5,
    "-": 5,
    "*": 6,
    "/": 6,
    "%": 6,
}
_UNARY = 7
_POSTFIX = 8

_ESCAPES = {"\\": "\\\\", '"': '\\"', "\n": "\\n", "\t": "\\t"}


def pretty(ast: Ast) -> str:
    return "\n".join(pretty_function(fn) for fn in ast.functions)


def pretty_function(fn: n.FunDecl) -> str:
    lines = [f"fun {fn.name}({', '.join(fn.params)}) {{"]
    _block_lines(fn.body, 1, lines)
    lines.append("}")
    return "\n".join(lines) + "\n"


def pretty_stmt(stmt: n.Stmt, depth: int = 0) -> str:
    """Render a statement at ``depth`` indentation levels, no trailing newline."""
    lines: list[str] = []
    _stmt_lines(stmt, depth, lines)
    return "\n".join(lines)


def _block_lines(block: n.Block, depth: int, lines: list[str]) -> None:
    for stmt in block.stmts:
        _stmt_lines(stmt, depth, lines)


def _stmt_lines(stmt: n.Stmt, depth: int, lines: list[str]) -> None:
    pad = INDENT * depth
    if isinstance(stmt, n.VarDecl):
        lines.append(f"{pad}var {stmt.name} = {pretty_expr(stmt.init)};")
    elif isinstance(stmt, n.Assign):
        lines.append(f"{pad}{pretty_expr(stmt.target)} = {pretty_expr(stmt.value)};")
    elif isinstance(stmt, n.ExprStmt):
        lines.append(f"{pad}{pretty_expr(stmt.expr)};")
    elif isinstance(stmt, n.Return):
        if stmt.value is None:
            lines.append(f"{pad}return;")
        else:
            lines.append(f"{pad}return {pretty_expr(stmt.value)};")
    elif isinstance(stmt, n.Assert):
        lines.append(f"{pad}assert({pretty_expr(stmt.cond)});")
    elif isinstance(stmt, n.If):
        lines.append(f"{pad}if ({pretty_expr(stmt.cond)}) {{")
        _block_lines(stmt.then, depth + 1, lines)
        if stmt.orelse is not None:
            lines.append(f"{pad}}} else {{")
            _block_lines(stmt.orelse, depth + 1, lines)
        lines.append(f"{pad}}}")
    elif isinstance(stmt, n.While):
        lines.append(f"{pad}while ({pretty_expr(stmt.cond)}) {{")
        _block_lines(stmt.body, depth + 1, lines)
        lines.append(f"{pad}}}")
    else:
        raise TypeError(f"not a statement: {stmt!r}")


def pretty_expr(expr: n.Expr) -> str:
    return _expr(expr, 0)


def _wrap(text: str, prec: int, context: int) -> str:
    return f"({text})" if prec < context else text


def _expr(e: n.Expr, context: int) -> str:
    if isinstance(e, n.Literal):
        return _literal(e.value)
    if isinstance(e, n.VarRef):
        return e.name
    if isinstance(e, n.BinOp):
        prec = _PRECEDENCE[e.op]
        # left-associative: an equal-precedence right operand needs parens
        text = f"{_expr(e.left, prec)} {e.op} {_expr(e.right, prec + 1)}"
        return _wrap(text, prec, context)
    if isinstance(e, n.UnOp):
        return _wrap(f"{e.op}{_expr(e.operand, _UNARY)}", _UNARY, context)
    if isinstance(e, n.Call):
        args = ", ".join(_expr(a, 0) for a in e.args)
        if e.receiver is None:
            return f"{e.name}({args})"
        return f"{_expr(e.receiver, _POSTFIX)}.{e.name}({args})"
    if isinstance(e, n.FieldAccess):
        return f"{_expr(e.obj, _POSTFIX)}.{e.name}"
    if isinstance(e, n.Index):
        return f"{_expr(e.obj, _POSTFIX)}[{_expr(e.index, 0)}]"
    if isinstance(e, n.RecordLit):
        inner = ", ".join(f"{name}: {_expr(v, 0)}" for name, v in e.fields)
        return "{" + inner + "}"
    if isinstance(e, n.ArrayLit):
        return "[" + ", ".join(_expr(v, 0) for v in e.elems) + "]"
    raise TypeError(f"not an expression: {e!r}")


def _literal(value) -> str:
    if value is None:
        return "null"
    if value is True:
        return "true"
    if value is False:
        return "false"
    if isinstance(value, int):
        # negative literals only arise from synthesis; they reparse as UnOp
        return str(value) if value >= 0 else f"(-{-value})"
    return '"' + "".join(_ESCAPES.get(c, c) for c in value) + '"'
