"""Deterministic tracing interpreter.

A run executes one zero-argument entry function against a set of parsed
files. Statement coverage is always collected; the full event trace
(``StmtEnter``, ``CondEval``, ``Deref``) only when requested, because env
snapshots are expensive.
"""

from __future__ import annotations

import enum
import sys
from dataclasses import dataclass, field
from typing import Callable, Iterable, Optional

from . import nodes as n
from .tree import Ast
from .values import Array, Record, Value, copy_value, is_int, render, type_name, values_equal, wrap_int, INT_MIN

DEFAULT_BUDGET = 1_000_000
MAX_CALL_DEPTH = 100

NodeKey = tuple[str, int]  # (file path, node id)


class ErrorKind(str, enum.Enum):
    NullDeref = "NullDeref"
    AssertFail = "AssertFail"
    DivByZero = "DivByZero"
    UndefinedName = "UndefinedName"
    TypeMismatch = "TypeMismatch"
    OutOfBounds = "OutOfBounds"
    BudgetExceeded = "BudgetExceeded"

    def __str__(self):
        return self.value


class MiniRuntimeError(Exception):
    """A runtime failure of the interpreted program.

    ``at`` is the innermost statement executing when the error was raised;
    ``node`` is the expression (or statement) that raised it.
    """

    def __init__(self, kind: ErrorKind, path: str, at: int, node: int, message: str):
        super().__init__(f"{kind}: {message}")
        self.kind = kind
        self.path = path
        self.at = at
        self.node = node
        self.message = message

    @property
    def key(self) -> NodeKey:
        return (self.path, self.at)

    def __eq__(self, other):
        if not isinstance(other, MiniRuntimeError):
            return NotImplemented
        return (self.kind, self.path, self.at, self.node, self.message) == (
            other.kind, other.path, other.at, other.node, other.message)

    def __hash__(self):
        return hash((self.kind, self.path, self.at, self.node))

    def __repr__(self):
        return f"MiniRuntimeError({self.kind}, {self.path}:{self.at}, {self.message!r})"


# -- trace events -------------------------------------------------------------


@dataclass(frozen=True)
class StmtEnter:
    path: str
    node: int


@dataclass(frozen=True)
class CondEval:
    path: str
    node: int  # the If/While statement's condition expression
    value: bool
    env: dict = field(compare=False, hash=False)
    forced: bool = False

    def __eq__(self, other):
        if not isinstance(other, CondEval):
            return NotImplemented
        return (
            (self.path, self.node, self.value, self.forced) == (other.path, other.node, other.value, other.forced)
            and self.env.keys() == other.env.keys()
            and all(values_equal(self.env[k], other.env[k]) for k in self.env)
        )

    __hash__ = None


@dataclass(frozen=True, eq=False)
class Deref:
    path: str
    node: int
    receiver: Value

    def __eq__(self, other):
        if not isinstance(other, Deref):
            return NotImplemented
        return (self.path, self.node) == (other.path, other.node) and values_equal(self.receiver, other.receiver)

    __hash__ = None


TraceEvent = StmtEnter | CondEval | Deref

# force(cond_key, k) -> forced value for the k-th evaluation (0-based), or None
ForceFn = Callable[[NodeKey, int], Optional[bool]]


@dataclass
class RunResult:
    error: Optional[MiniRuntimeError]
    steps: int
    covered: frozenset[NodeKey]
    events: list = field(default_factory=list)
    output: list[str] = field(default_factory=list)
    cond_counts: dict[NodeKey, int] = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return self.error is None


class _Return(Exception):
    def __init__(self, value: Value):
        self.value = value


@dataclass(frozen=True)
class _Function:
    path: str
    decl: n.FunDecl


class DuplicateFunction(ValueError):
    pass


def function_table(asts: Iterable[Ast]) -> dict[str, _Function]:
    table: dict[str, _Function] = {}
    for ast in asts:
        for fn in ast.functions:
            if fn.name in table:
                raise DuplicateFunction(f"function {fn.name!r} defined in {table[fn.name].path} and {ast.path}")
            table[fn.name] = _Function(ast.path, fn)
    return table


class Interpreter:
    """Single-use interpreter; create a fresh one per run."""

    def __init__(
        self,
        asts: Iterable[Ast],
        budget: int = DEFAULT_BUDGET,
        trace: bool = False,
        force: Optional[ForceFn] = None,
        watch: Optional[set[NodeKey]] = None,
        functions: Optional[dict[str, _Function]] = None,
    ):
        if budget <= 0:
            raise ValueError("budget must be positive")
        self.functions = functions if functions is not None else function_table(asts)
        self.budget = budget
        self.trace = trace
        self.force = force
        self.watch = watch
        self.steps = 0
        self.covered: set[NodeKey] = set()
        self.events: list = []
        self.output: list[str] = []
        self.cond_counts: dict[NodeKey, int] = {}
        self._path = ""
        self._stmt = -1
        self._depth = 0
        self._scopes: list[dict[str, Value]] = []

    def run(self, entry: str) -> RunResult:
        fn = self.functions.get(entry)
        if fn is None or fn.decl.params:
            raise ValueError(f"entry {entry!r} must be an existing zero-argument function")
        self._path = fn.path
        error = None
        limit = sys.getrecursionlimit()
        if limit < 5000:
            sys.setrecursionlimit(5000)
        try:
            self._call(fn, [], node_id=fn.decl.id)
        except MiniRuntimeError as exc:
            error = exc
        return RunResult(
            error=error,
            steps=self.steps,
            covered=frozenset(self.covered),
            events=self.events,
            output=self.output,
            cond_counts=self.cond_counts,
        )

    # -- helpers --------------------------------------------------------------

    def _fail(self, kind: ErrorKind, node: n.Node, message: str):
        raise MiniRuntimeError(kind, self._path, self._stmt, node.id, message)

    def _tick(self, node: n.Node) -> None:
        self.steps += 1
        if self.steps > self.budget:
            self._fail(ErrorKind.BudgetExceeded, node, f"step budget {self.budget} exceeded")

    def _lookup(self, name: str, node: n.Node) -> Value:
        for scope in reversed(self._scopes):
            if name in scope:
                return scope[name]
        self._fail(ErrorKind.UndefinedName, node, f"undefined variable {name!r}")

    def env_snapshot(self) -> dict[str, Value]:
        env: dict[str, Value] = {}
        for scope in self._scopes:
            for k, v in scope.items():
                env[k] = copy_value(v)
        return env

    # -- calls ------------------------------------------------------------------

    def _call(self, fn: _Function, args: list[Value], node_id: int) -> Value:
        if self._depth >= MAX_CALL_DEPTH:
            raise MiniRuntimeError(
                ErrorKind.BudgetExceeded, self._path, self._stmt, node_id, "call depth exceeded"
            )
        saved = (self._path, self._stmt, self._scopes)
        self._path = fn.path
        self._scopes = [dict(zip(fn.decl.params, args))]
        self._depth += 1
        try:
            self._block(fn.decl.body)
            return None
        except _Return as ret:
            return ret.value
        finally:
            self._depth -= 1
            self._path, self._stmt, self._scopes = saved

    # -- statements ---------------------------------------------------------------

    def _block(self, block: n.Block) -> None:
        self._scopes.append({})
        try:
            for stmt in block.stmts:
                self._exec(stmt)
        finally:
            self._scopes.pop()

    def _exec(self, stmt: n.Stmt) -> None:
        self._stmt = stmt.id
        key = (self._path, stmt.id)
        self.covered.add(key)
        if self.trace:
            self.events.append(StmtEnter(*key))
        self._tick(stmt)
        kind = type(stmt)
        if kind is n.ExprStmt:
            self._eval(stmt.expr)
        elif kind is n.Assign:
            self._assign(stmt)
        elif kind is n.VarDecl:
            value = self._eval(stmt.init)
            self._scopes[-1][stmt.name] = value
        elif kind is n.If:
            if self._condition(stmt.cond, stmt):
                self._block(stmt.then)
            elif stmt.orelse is not None:
                self._block(stmt.orelse)
        elif kind is n.While:
            while self._condition(stmt.cond, stmt):
                self._block(stmt.body)
                self._stmt = stmt.id
                self._tick(stmt)
        elif kind is n.Return:
            value = None if stmt.value is None else self._eval(stmt.value)
            raise _Return(value)
        elif kind is n.Assert:
            value = self._eval(stmt.cond)
            if value is not True:
                if value is not False:
                    self._fail(ErrorKind.TypeMismatch, stmt.cond, f"assert on {type_name(value)}")
                self._fail(ErrorKind.AssertFail, stmt, "assertion failed")
        else:
            raise TypeError(f"unknown statement {stmt!r}")

    def _condition(self, cond: n.Expr, stmt: n.Stmt) -> bool:
        key = (self._path, cond.id)
        k = self.cond_counts.get(key, 0)
        self.cond_counts[key] = k + 1
        self._stmt = stmt.id
        forced = self.force(key, k) if self.force is not None else None
        if forced is not None:
            value = forced
        else:
            value = self._eval(cond)
            if not isinstance(value, bool):
                self._fail(ErrorKind.TypeMismatch, cond, f"condition is {type_name(value)}, not bool")
        if self.trace or (self.watch is not None and key in self.watch):
            self.events.append(CondEval(self._path, cond.id, value, self.env_snapshot(), forced is not None))
        return value

    def _assign(self, stmt: n.Assign) -> None:
        target = stmt.target
        if isinstance(target, n.VarRef):
            value = self._eval(stmt.value)
            for scope in reversed(self._scopes):
                if target.name in scope:
                    scope[target.name] = value
                    return
            self._fail(ErrorKind.UndefinedName, target, f"assignment to undeclared {target.name!r}")
        elif isinstance(target, n.FieldAccess):
            obj = self._deref(target.obj, target)
            value = self._eval(stmt.value)
            if not isinstance(obj, Record):
                self._fail(ErrorKind.TypeMismatch, target, f"field assignment on {type_name(obj)}")
            obj.fields[target.name] = value
        elif isinstance(target, n.Index):
            obj = self._deref(target.obj, target)
            idx = self._eval(target.index)
            value = self._eval(stmt.value)
            items = self._array_slot(obj, idx, target)
            items[idx] = value
        else:
            self._fail(ErrorKind.TypeMismatch, target, "invalid assignment target")

    # -- expressions ------------------------------------------------------------------

    def _deref(self, receiver: n.Expr, node: n.Expr) -> Value:
        value = self._eval(receiver)
        if self.trace:
            self.events.append(Deref(self._path, node.id, value))
        if value is None:
            self._fail(ErrorKind.NullDeref, node, "dereference of null")
        return value

    def _array_slot(self, obj: Value, idx: Value, node: n.Expr) -> list:
        if not isinstance(obj, Array):
            self._fail(ErrorKind.TypeMismatch, node, f"indexing {type_name(obj)}")
        if not is_int(idx):
            self._fail(ErrorKind.TypeMismatch, node, f"index is {type_name(idx)}")
        if not 0 <= idx < len(obj.items):
            self._fail(ErrorKind.OutOfBounds, node, f"index {idx} out of bounds for length {len(obj.items)}")
        return obj.items

    def _eval(self, e: n.Expr) -> Value:
        self._tick(e)
        kind = type(e)
        if kind is n.Literal:
            return e.value
        if kind is n.VarRef:
            return self._lookup(e.name, e)
        if kind is n.BinOp:
            return self._binop(e)
        if kind is n.UnOp:
            v = self._eval(e.operand)
            if e.op == "!":
                if not isinstance(v, bool):
                    self._fail(ErrorKind.TypeMismatch, e, f"! applied to {type_name(v)}")
                return not v
            if not is_int(v):
                self._fail(ErrorKind.TypeMismatch, e, f"- applied to {type_name(v)}")
            return wrap_int(-v)
        if kind is n.FieldAccess:
            obj = self._deref(e.obj, e)
            if not isinstance(obj, Record):
                self._fail(ErrorKind.TypeMismatch, e, f"field access on {type_name(obj)}")
            if e.name not in obj.fields:
                self._fail(ErrorKind.UndefinedName, e, f"record has no field {e.name!r}")
            return obj.fields[e.name]
        if kind is n.Index:
            obj = self._deref(e.obj, e)
            idx = self._eval(e.index)
            if isinstance(obj, str) and is_int(idx):
                if not 0 <= idx < len(obj):
                    self._fail(ErrorKind.OutOfBounds, e, f"index {idx} out of bounds for length {len(obj)}")
                return obj[idx]
            return self._array_slot(obj, idx, e)[idx]
        if kind is n.Call:
            return self._invoke(e)
        if kind is n.RecordLit:
            return Record({name: self._eval(v) for name, v in e.fields})
        if kind is n.ArrayLit:
            return Array([self._eval(v) for v in e.elems])
        raise TypeError(f"unknown expression {e!r}")

    def _binop(self, e: n.BinOp) -> Value:
        op = e.op
        if op == "&&" or op == "||":
            left = self._eval(e.left)
            if not isinstance(left, bool):
                self._fail(ErrorKind.TypeMismatch, e, f"{op} on {type_name(left)}")
            if (op == "&&" and not left) or (op == "||" and left):
                return left
            right = self._eval(e.right)
            if not isinstance(right, bool):
                self._fail(ErrorKind.TypeMismatch, e, f"{op} on {type_name(right)}")
            return right
        left = self._eval(e.left)
        right = self._eval(e.right)
        if op == "==":
            return values_equal(left, right)
        if op == "!=":
            return not values_equal(left, right)
        if op == "+" and isinstance(left, str) and isinstance(right, str):
            return left + right
        if op in ("<", "<=", ">", ">="):
            if not ((is_int(left) and is_int(right)) or (isinstance(left, str) and isinstance(right, str))):
                self._fail(ErrorKind.TypeMismatch, e, f"{type_name(left)} {op} {type_name(right)}")
            if op == "<":
                return left < right
            if op == "<=":
                return left <= right
            if op == ">":
                return left > right
            return left >= right
        if not (is_int(left) and is_int(right)):
            self._fail(ErrorKind.TypeMismatch, e, f"{type_name(left)} {op} {type_name(right)}")
        if op == "+":
            return wrap_int(left + right)
        if op == "-":
            return wrap_int(left - right)
        if op == "*":
            return wrap_int(left * right)
        if right == 0:
            self._fail(ErrorKind.DivByZero, e, f"{op} by zero")
        # truncating division, remainder takes the dividend's sign
        q = abs(left) // abs(right)
        if (left < 0) != (right < 0):
            q = -q
        if op == "/":
            return wrap_int(q)
        if left == INT_MIN and right == -1:
            return 0
        return left - right * q

    def _invoke(self, e: n.Call) -> Value:
        args: list[Value] = []
        if e.receiver is not None:
            args.append(self._deref(e.receiver, e))
        args.extend(self._eval(a) for a in e.args)
        fn = self.functions.get(e.name)
        if fn is None:
            return self._builtin(e, args)
        if len(args) != len(fn.decl.params):
            self._fail(
                ErrorKind.TypeMismatch, e, f"{e.name} expects {len(fn.decl.params)} arguments, got {len(args)}"
            )
        return self._call(fn, args, node_id=e.id)

    def _builtin(self, e: n.Call, args: list[Value]) -> Value:
        if e.name == "print":
            self.output.append(" ".join(render(a) for a in args))
            return None
        if e.name == "len":
            if len(args) != 1:
                self._fail(ErrorKind.TypeMismatch, e, "len expects 1 argument")
            (v,) = args
            if v is None:
                self._fail(ErrorKind.NullDeref, e, "len of null")
            if isinstance(v, str):
                return len(v)
            if isinstance(v, Array):
                return len(v.items)
            if isinstance(v, Record):
                return len(v.fields)
            self._fail(ErrorKind.TypeMismatch, e, f"len of {type_name(v)}")
        self._fail(ErrorKind.UndefinedName, e, f"undefined function {e.name!r}")


def run(
    asts: Iterable[Ast], entry: str, budget: int = DEFAULT_BUDGET, trace: bool = True, **kwargs
) -> RunResult:
    return Interpreter(asts, budget=budget, trace=trace, **kwargs).run(entry)


def evaluate(expr: n.Expr, env: dict[str, Value], budget: int = 10_000) -> Value:
    """Evaluate a call-free expression in a flat environment.

    Raises ``MiniRuntimeError`` like a normal run would; used by condition
    synthesis to check candidates against recorded snapshots.
    """
    interp = Interpreter([], budget=budget, functions={})
    interp._scopes = [env]
    return interp._eval(expr)
