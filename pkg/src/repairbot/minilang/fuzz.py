"""Random AST generator for round-trip testing of the parser and printer."""

from __future__ import annotations

import random

from . import nodes as n
from .tree import Ast, renumber

_NAMES = ["x", "y", "z", "acc", "total", "item", "self", "cfg", "i", "v"]
_FIELDS = ["f", "name", "count", "next", "processor", "value"]
_FUNCS = ["foo", "bar", "helper", "compute", "stop", "len", "print"]
_BINOPS = ["||", "&&", "==", "!=", "<", "<=", ">", ">=", "+", "-", "*", "/", "%"]
_STR_CHARS = 'abc XYZ_019"\\\n\t'


class AstFuzzer:
    def __init__(self, seed: int, max_depth: int = 4):
        self.rng = random.Random(seed)
        self.max_depth = max_depth

    def program(self) -> Ast:
        count = self.rng.randint(1, 3)
        functions = tuple(self.function(f"f{i}") for i in range(count))
        return Ast(path="fuzz.mini", functions=renumber(functions, keep_origin=False))

    def function(self, name: str) -> n.FunDecl:
        params = tuple(self.rng.sample(_NAMES, self.rng.randint(0, 3)))
        return n.FunDecl(name=name, params=params, body=self.block(0))

    def block(self, depth: int) -> n.Block:
        size = self.rng.randint(0, 4 if depth < 2 else 2)
        return n.Block(stmts=tuple(self.stmt(depth) for _ in range(size)))

    def stmt(self, depth: int) -> n.Stmt:
        choices = ["var", "assign", "expr", "return", "assert"]
        if depth < 3:
            choices += ["if", "while"]
        k = self.rng.choice(choices)
        if k == "var":
            return n.VarDecl(name=self.rng.choice(_NAMES), init=self.expr(0))
        if k == "assign":
            return n.Assign(target=self.lvalue(), value=self.expr(0))
        if k == "expr":
            return n.ExprStmt(expr=self.expr(0))
        if k == "return":
            return n.Return(value=self.expr(0) if self.rng.random() < 0.7 else None)
        if k == "assert":
            return n.Assert(cond=self.expr(0))
        if k == "if":
            orelse = self.block(depth + 1) if self.rng.random() < 0.4 else None
            return n.If(cond=self.expr(0), then=self.block(depth + 1), orelse=orelse)
        return n.While(cond=self.expr(0), body=self.block(depth + 1))

    def lvalue(self) -> n.Expr:
        k = self.rng.randrange(3)
        base = n.VarRef(name=self.rng.choice(_NAMES))
        if k == 0:
            return base
        if k == 1:
            return n.FieldAccess(obj=self.postfix_base(1), name=self.rng.choice(_FIELDS))
        return n.Index(obj=self.postfix_base(1), index=self.expr(1))

    def postfix_base(self, depth: int) -> n.Expr:
        return self.expr(depth)

    def literal(self) -> n.Literal:
        k = self.rng.randrange(5)
        if k == 0:
            return n.Literal(value=self.rng.choice([0, 1, 7, 10, 42, 2**63 - 1]))
        if k == 1:
            return n.Literal(value=self.rng.random() < 0.5)
        if k == 2:
            return n.Literal(value=None)
        if k == 3:
            length = self.rng.randint(0, 6)
            return n.Literal(value="".join(self.rng.choice(_STR_CHARS) for _ in range(length)))
        return n.Literal(value=self.rng.randint(0, 1000))

    def expr(self, depth: int) -> n.Expr:
        if depth >= self.max_depth:
            return self.literal() if self.rng.random() < 0.5 else n.VarRef(name=self.rng.choice(_NAMES))
        k = self.rng.randrange(11)
        d = depth + 1
        if k <= 1:
            return self.literal()
        if k == 2:
            return n.VarRef(name=self.rng.choice(_NAMES))
        if k in (3, 4):
            return n.BinOp(op=self.rng.choice(_BINOPS), left=self.expr(d), right=self.expr(d))
        if k == 5:
            return n.UnOp(op=self.rng.choice("!-"), operand=self.expr(d))
        if k == 6:
            args = tuple(self.expr(d) for _ in range(self.rng.randint(0, 2)))
            receiver = self.expr(d) if self.rng.random() < 0.4 else None
            return n.Call(name=self.rng.choice(_FUNCS), args=args, receiver=receiver)
        if k == 7:
            return n.FieldAccess(obj=self.expr(d), name=self.rng.choice(_FIELDS))
        if k == 8:
            return n.Index(obj=self.expr(d), index=self.expr(d))
        if k == 9:
            names = self.rng.sample(_FIELDS, self.rng.randint(0, 3))
            return n.RecordLit(fields=tuple((f, self.expr(d)) for f in names))
        return n.ArrayLit(elems=tuple(self.expr(d) for _ in range(self.rng.randint(0, 3))))


def random_programs(count: int, seed: int = 0):
    fuzzer = AstFuzzer(seed)
    for _ in range(count):
        yield fuzzer.program()
