"""Structural edits over an ``Ast``.

Every edit returns a new, renumbered ``Ast``; the input is never modified.
Nodes that survive an edit keep their ``origin`` so that callers can keep
addressing them by their id in the originally parsed file.
"""

from __future__ import annotations

import dataclasses
import enum
from dataclasses import dataclass
from typing import Optional

from . import nodes as n
from .tree import Ast, renumber


class EditKind(str, enum.Enum):
    DELETE = "delete"
    INSERT_BEFORE = "insert_before"
    REPLACE = "replace"
    WRAP_IN_IF = "wrap_in_if"


class InvalidEdit(ValueError):
    pass


@dataclass(frozen=True)
class Edit:
    kind: EditKind
    path: str
    target: int
    payload: Optional[n.Node] = None

    @classmethod
    def delete(cls, path: str, target: int) -> "Edit":
        return cls(EditKind.DELETE, path, target)

    @classmethod
    def insert_before(cls, path: str, target: int, stmt: n.Stmt) -> "Edit":
        return cls(EditKind.INSERT_BEFORE, path, target, n.strip_meta(stmt))

    @classmethod
    def replace(cls, path: str, target: int, node: n.Node) -> "Edit":
        return cls(EditKind.REPLACE, path, target, n.strip_meta(node))

    @classmethod
    def wrap_in_if(cls, path: str, target: int, cond: n.Expr) -> "Edit":
        return cls(EditKind.WRAP_IN_IF, path, target, n.strip_meta(cond))

    def retarget(self, target: int) -> "Edit":
        return dataclasses.replace(self, target=target)


def apply_edit(ast: Ast, edit: Edit) -> Ast:
    """Apply ``edit``, addressing its target by current node id."""
    if not 0 <= edit.target < len(ast.nodes):
        raise InvalidEdit(f"no node {edit.target} in {ast.path}")
    target = ast.node(edit.target)
    parent = ast.parents.get(target.id)
    kind = edit.kind

    if kind is EditKind.REPLACE:
        if isinstance(target, n.Stmt):
            if not isinstance(edit.payload, n.Stmt):
                raise InvalidEdit("a statement can only be replaced by a statement")
        elif isinstance(target, n.Expr):
            if not isinstance(edit.payload, n.Expr):
                raise InvalidEdit("an expression can only be replaced by an expression")
            if isinstance(parent, n.Assign) and parent.target is target and not isinstance(
                edit.payload, n.LVALUE_KINDS
            ):
                raise InvalidEdit("assignment target must stay assignable")
        else:
            raise InvalidEdit(f"cannot replace a {target.kind}")
        replacement = [edit.payload]
    else:
        if not isinstance(target, n.Stmt) or not isinstance(parent, n.Block):
            raise InvalidEdit(f"{kind.value} needs a statement target, got {target.kind}")
        if kind is EditKind.DELETE:
            replacement = []
        elif kind is EditKind.INSERT_BEFORE:
            if not isinstance(edit.payload, n.Stmt):
                raise InvalidEdit("inserted node must be a statement")
            replacement = [edit.payload, target]
        elif kind is EditKind.WRAP_IN_IF:
            if not isinstance(edit.payload, n.Expr):
                raise InvalidEdit("guard must be an expression")
            replacement = [n.If(cond=edit.payload, then=n.Block(stmts=(target,)))]
        else:
            raise InvalidEdit(f"unknown edit {kind!r}")

    functions = tuple(_rebuild(fn, target.id, replacement) for fn in ast.functions)
    return Ast(path=ast.path, functions=renumber(functions), text=ast.text)


def _rebuild(node: n.Node, target: int, replacement: list[n.Node]) -> n.Node:
    if not any(d.id == target for d in node.walk()):
        return node
    updates = {}
    for f in dataclasses.fields(node):
        if f.compare:
            updates[f.name] = _rebuild_value(getattr(node, f.name), target, replacement, isinstance(node, n.Block))
    return dataclasses.replace(node, **updates)


def _rebuild_value(value, target, replacement, in_block: bool):
    if isinstance(value, n.Node):
        if value.id == target:
            (single,) = replacement
            return single
        return _rebuild(value, target, replacement)
    if isinstance(value, tuple):
        out = []
        for item in value:
            if in_block and isinstance(item, n.Node) and item.id == target:
                out.extend(replacement)
            else:
                out.append(_rebuild_value(item, target, replacement, False))
        return tuple(out)
    return value


def replace_subtree(node: n.Node, target_id: int, replacement: n.Node) -> n.Node:
    """Copy of ``node`` with its descendant ``target_id`` swapped out."""
    if node.id == target_id:
        return replacement
    return _rebuild(node, target_id, [replacement])


def apply_by_origin(ast: Ast, edit: Edit) -> Ast:
    """Apply an edit whose target is an id from the originally parsed file."""
    current = ast.resolve(edit.target)
    if current is None:
        raise InvalidEdit(f"node {edit.target} of {ast.path} no longer exists")
    return apply_edit(ast, edit.retarget(current))
