"""The ``Ast`` container: one parsed file with a pre-order node index."""

from __future__ import annotations

import dataclasses
import itertools
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterator, Optional

from .nodes import FunDecl, Node, Stmt


def renumber(functions: tuple[FunDecl, ...], keep_origin: bool = True) -> tuple[FunDecl, ...]:
    """Assign dense pre-order ids starting at 0.

    With ``keep_origin=False`` every node's origin is set to its new id,
    which is what a fresh parse wants.
    """
    counter = itertools.count()
    return tuple(_renumber(fn, counter, keep_origin) for fn in functions)


def _renumber(node: Node, counter, keep_origin: bool) -> Node:
    nid = next(counter)
    updates = {}
    for f in dataclasses.fields(node):
        if f.compare:
            updates[f.name] = _renumber_value(getattr(node, f.name), counter, keep_origin)
    origin = node.origin if keep_origin else nid
    return dataclasses.replace(node, id=nid, origin=origin, **updates)


def _renumber_value(value, counter, keep_origin):
    if isinstance(value, Node):
        return _renumber(value, counter, keep_origin)
    if isinstance(value, tuple):
        return tuple(_renumber_value(v, counter, keep_origin) for v in value)
    return value


@dataclass(frozen=True, eq=False)
class Ast:
    """A parsed source file.

    ``text`` is the source the spans point into. For an AST produced by an
    edit it is still the original text, so spans of untouched nodes keep
    pointing at their original location.
    """

    path: str
    functions: tuple[FunDecl, ...]
    text: str = field(default="", repr=False)

    def __eq__(self, other):
        if not isinstance(other, Ast):
            return NotImplemented
        return self.functions == other.functions

    def __hash__(self):
        return hash(self.functions)

    @cached_property
    def nodes(self) -> list[Node]:
        out = [n for fn in self.functions for n in fn.walk()]
        assert all(n.id == i for i, n in enumerate(out)), "ids are not dense pre-order"
        return out

    @cached_property
    def parents(self) -> dict[int, Node]:
        parents: dict[int, Node] = {}
        for node in self.nodes:
            for child in node.children():
                parents[child.id] = node
        return parents

    @cached_property
    def _by_origin(self) -> dict[int, int]:
        index: dict[int, int] = {}
        for node in self.nodes:
            if node.origin is not None:
                index.setdefault(node.origin, node.id)
        return index

    def node(self, node_id: int) -> Node:
        return self.nodes[node_id]

    def resolve(self, origin: int) -> Optional[int]:
        """Current id of the node that had id ``origin`` in the parsed file."""
        return self._by_origin.get(origin)

    def function(self, name: str) -> Optional[FunDecl]:
        for fn in self.functions:
            if fn.name == name:
                return fn
        return None

    def statements(self) -> Iterator[Stmt]:
        for node in self.nodes:
            if isinstance(node, Stmt):
                yield node

    def enclosing_function(self, node_id: int) -> FunDecl:
        node = self.nodes[node_id]
        while not isinstance(node, FunDecl):
            node = self.parents[node.id]
        return node

    def line_of(self, node: Node) -> int:
        return self.text.count("\n", 0, node.span[0]) + 1
