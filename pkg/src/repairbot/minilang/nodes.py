"""AST node classes for the mini language.

Nodes are frozen dataclasses. ``id``, ``span`` and ``origin`` are excluded
from equality so that ``==`` is structural equality of the tree.

``id`` is the pre-order index of the node within its file. ``origin`` is the
id the node had in the originally parsed file; it survives edits and is
``None`` for nodes synthesized by a repair engine.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field
from typing import Iterator, Optional, Union

Span = tuple[int, int]


def _meta(default=None):
    return field(default=default, compare=False, repr=False, kw_only=True)


@dataclass(frozen=True)
class Node:
    id: int = _meta(-1)
    span: Span = _meta((0, 0))
    origin: Optional[int] = _meta(None)

    @property
    def kind(self) -> str:
        return type(self).__name__

    def children(self) -> Iterator["Node"]:
        for f in dataclasses.fields(self):
            if not f.compare:
                continue
            yield from _iter_nodes(getattr(self, f.name))

    def walk(self) -> Iterator["Node"]:
        """Yield this node and all descendants in pre-order."""
        yield self
        for child in self.children():
            yield from child.walk()


def _iter_nodes(value) -> Iterator[Node]:
    if isinstance(value, Node):
        yield value
    elif isinstance(value, tuple):
        for item in value:
            yield from _iter_nodes(item)


# -- expressions ------------------------------------------------------------


@dataclass(frozen=True)
class Expr(Node):
    pass


@dataclass(frozen=True)
class Literal(Expr):
    value: Union[int, bool, str, None]

    def __eq__(self, other):
        # True == 1 in Python; literals must also agree on type
        if type(other) is not Literal:
            return NotImplemented
        return type(self.value) is type(other.value) and self.value == other.value

    def __hash__(self):
        return hash((type(self.value), self.value))


@dataclass(frozen=True)
class VarRef(Expr):
    name: str


@dataclass(frozen=True)
class BinOp(Expr):
    op: str
    left: Expr
    right: Expr


@dataclass(frozen=True)
class UnOp(Expr):
    op: str
    operand: Expr


@dataclass(frozen=True)
class Call(Expr):
    """``name(args)`` or, with a receiver, ``receiver.name(args)``.

    A receiver call is sugar for ``name(receiver, args...)`` that raises
    NullDeref when the receiver is null.
    """

    name: str
    args: tuple[Expr, ...]
    receiver: Optional[Expr] = None


@dataclass(frozen=True)
class FieldAccess(Expr):
    obj: Expr
    name: str


@dataclass(frozen=True)
class Index(Expr):
    obj: Expr
    index: Expr


@dataclass(frozen=True)
class RecordLit(Expr):
    fields: tuple[tuple[str, Expr], ...]

    def children(self) -> Iterator[Node]:
        for _, value in self.fields:
            yield value


@dataclass(frozen=True)
class ArrayLit(Expr):
    elems: tuple[Expr, ...]


# -- statements -------------------------------------------------------------


@dataclass(frozen=True)
class Stmt(Node):
    pass


@dataclass(frozen=True)
class Block(Node):
    stmts: tuple[Stmt, ...]


@dataclass(frozen=True)
class VarDecl(Stmt):
    name: str
    init: Expr


@dataclass(frozen=True)
class Assign(Stmt):
    target: Expr  # VarRef, FieldAccess or Index
    value: Expr


@dataclass(frozen=True)
class If(Stmt):
    cond: Expr
    then: Block
    orelse: Optional[Block] = None


@dataclass(frozen=True)
class While(Stmt):
    cond: Expr
    body: Block


@dataclass(frozen=True)
class Return(Stmt):
    value: Optional[Expr] = None


@dataclass(frozen=True)
class Assert(Stmt):
    cond: Expr


@dataclass(frozen=True)
class ExprStmt(Stmt):
    expr: Expr


@dataclass(frozen=True)
class FunDecl(Node):
    name: str
    params: tuple[str, ...]
    body: Block


STATEMENT_KINDS = (VarDecl, Assign, If, While, Return, Assert, ExprStmt)
LVALUE_KINDS = (VarRef, FieldAccess, Index)


def is_statement(node: Node) -> bool:
    return isinstance(node, Stmt)


def strip_meta(node: Node) -> Node:
    """Return a copy of ``node`` with ids, spans and origins reset.

    Used for synthesized nodes and donor copies so that they never alias an
    existing node's origin.
    """
    updates = {}
    for f in dataclasses.fields(node):
        if not f.compare:
            continue
        updates[f.name] = _strip_value(getattr(node, f.name))
    return dataclasses.replace(node, id=-1, span=(0, 0), origin=None, **updates)


def _strip_value(value):
    if isinstance(value, Node):
        return strip_meta(value)
    if isinstance(value, tuple):
        return tuple(_strip_value(v) for v in value)
    return value
