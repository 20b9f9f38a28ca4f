"""The ``.mini`` language: parser, printer, interpreter and edits."""

from . import nodes
from .edits import Edit, EditKind, InvalidEdit, apply_by_origin, apply_edit
from .interp import (
    DEFAULT_BUDGET,
    CondEval,
    Deref,
    DuplicateFunction,
    ErrorKind,
    Interpreter,
    MiniRuntimeError,
    NodeKey,
    RunResult,
    StmtEnter,
    evaluate,
    run,
)
from .parser import ParseError, parse, parse_expr, parse_stmt
from .pretty import pretty, pretty_expr, pretty_stmt
from .tree import Ast
from .values import Array, Record, Value, values_equal

__all__ = [
    "Array",
    "Ast",
    "CondEval",
    "DEFAULT_BUDGET",
    "Deref",
    "DuplicateFunction",
    "Edit",
    "EditKind",
    "ErrorKind",
    "Interpreter",
    "InvalidEdit",
    "MiniRuntimeError",
    "NodeKey",
    "ParseError",
    "Record",
    "RunResult",
    "StmtEnter",
    "Value",
    "apply_by_origin",
    "apply_edit",
    "evaluate",
    "nodes",
    "parse",
    "parse_expr",
    "parse_stmt",
    "pretty",
    "pretty_expr",
    "pretty_stmt",
    "run",
    "values_equal",
]
