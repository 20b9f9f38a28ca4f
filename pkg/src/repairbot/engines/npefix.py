"""Repair of null dereferences with static guard, early-return or default edits.

Strategies, tried in this order per crashing statement ``S`` with null
receiver ``r``:

GuardSkip
    ``if (r != null) { S }``
EarlyReturn
    ``if (r == null) { return <neutral>; }`` inserted before ``S``; the neutral
    value is ``null`` in functions that return values, a bare ``return``
    otherwise.
DefaultValue
    ``if (r != null) { S } else { S[r := default] }`` where the default is an
    empty array for indexed receivers and an empty record otherwise.

Receivers that are not plain variable/field/index chains are first bound to
a fresh local so they are evaluated once.
"""

from __future__ import annotations

import enum
import logging
from dataclasses import dataclass
from typing import Mapping, Optional, Sequence

from ..minilang import Ast, Deref, Edit, ErrorKind, NodeKey, pretty_expr
from ..minilang import nodes as n
from ..minilang.edits import replace_subtree
from ..minilang.interp import DEFAULT_BUDGET
from ..patch import Engine, Patch
from ..testkit import ParsedProject, SuiteReport
from .common import Deadline, NoFixFound, make_patch, try_edits

log = logging.getLogger(__name__)

FRESH_LOCAL = "npe_recv"


class NotApplicable(NoFixFound):
    pass


class Strategy(str, enum.Enum):
    GUARD_SKIP = "GuardSkip"
    EARLY_RETURN = "EarlyReturn"
    DEFAULT_VALUE = "DefaultValue"

    def __str__(self):
        return self.value


STRATEGY_ORDER = (Strategy.GUARD_SKIP, Strategy.EARLY_RETURN, Strategy.DEFAULT_VALUE)


@dataclass(frozen=True)
class DerefDiagnosis:
    test: str
    site: NodeKey  # the statement whose execution raised NullDeref
    deref: NodeKey  # the dereferencing expression
    receiver: str
    trace_index: int


def _receiver_of(node: n.Node) -> Optional[n.Expr]:
    if isinstance(node, (n.FieldAccess, n.Index)):
        return node.obj
    if isinstance(node, n.Call):
        return node.receiver
    return None


def diagnose(parsed: ParsedProject, report: SuiteReport, traces: Mapping[str, list]) -> list[DerefDiagnosis]:
    """One diagnosis per NullDeref failure, ordered by test id."""
    out = []
    for result in sorted(report.results, key=lambda r: r.test):
        err = result.error
        if result.passed or err is None or err.kind is not ErrorKind.NullDeref:
            continue
        events = traces.get(result.test, [])
        index = None
        for i in range(len(events) - 1, -1, -1):
            ev = events[i]
            if isinstance(ev, Deref) and ev.receiver is None:
                index = i
                break
        if index is None:
            continue
        ev = events[index]
        receiver = _receiver_of(parsed.asts[ev.path].node(ev.node))
        if receiver is None:
            continue
        out.append(DerefDiagnosis(result.test, err.key, (ev.path, ev.node), pretty_expr(receiver), index))
    if not out:
        raise NotApplicable("no failing test raised NullDeref")
    return out


def collect_traces(parsed: ParsedProject, report: SuiteReport, budget: int = DEFAULT_BUDGET) -> dict[str, list]:
    traces = {}
    for case in parsed.tests:
        if not report.result(case.id).passed:
            traces[case.id] = parsed.run_test(case, budget, trace=True).events
    return traces


# -- strategies ------------------------------------------------------------------


def _is_pure(e: n.Expr) -> bool:
    if isinstance(e, (n.VarRef, n.Literal)):
        return True
    if isinstance(e, n.FieldAccess):
        return _is_pure(e.obj)
    if isinstance(e, n.Index):
        return _is_pure(e.obj) and _is_pure(e.index)
    return False


def _returns_value(fn: n.FunDecl) -> bool:
    return any(isinstance(d, n.Return) and d.value is not None for d in fn.walk())


def _default_for(deref: n.Node) -> n.Expr:
    if isinstance(deref, n.Index):
        return n.ArrayLit(elems=())
    return n.RecordLit(fields=())


def _fresh_name(fn: n.FunDecl) -> str:
    taken = set(fn.params) | {d.name for d in fn.walk() if isinstance(d, (n.VarDecl, n.VarRef))}
    name, i = FRESH_LOCAL, 0
    while name in taken:
        i += 1
        name = f"{FRESH_LOCAL}{i}"
    return name


def null_check(receiver: n.Expr, op: str) -> n.Expr:
    return n.BinOp(op=op, left=n.strip_meta(receiver), right=n.Literal(value=None))


def strategy_edits(parsed: ParsedProject, diag: DerefDiagnosis, strategy: Strategy) -> tuple[Edit, ...]:
    path, stmt_id = diag.site
    ast: Ast = parsed.asts[path]
    stmt = ast.node(stmt_id)
    deref = ast.node(diag.deref[1])
    receiver = _receiver_of(deref)
    if not isinstance(stmt, n.Stmt) or not isinstance(ast.parents.get(stmt_id), n.Block):
        raise NoFixFound("crashing statement is not inside a block")

    prelude: list[Edit] = []
    if _is_pure(receiver):
        recv_ref: n.Expr = receiver
    else:
        # evaluate the receiver once into a fresh local, then use the local
        recv_ref = n.VarRef(name=_fresh_name(ast.enclosing_function(stmt_id)))
        prelude = [
            Edit.replace(path, receiver.id, recv_ref),
            Edit.insert_before(path, stmt_id, n.VarDecl(name=recv_ref.name, init=receiver)),
        ]

    if strategy is Strategy.GUARD_SKIP:
        return tuple(prelude) + (Edit.wrap_in_if(path, stmt_id, null_check(recv_ref, "!=")),)

    if strategy is Strategy.EARLY_RETURN:
        fn = ast.enclosing_function(stmt_id)
        value = n.Literal(value=None) if _returns_value(fn) else None
        early = n.If(cond=null_check(recv_ref, "=="), then=n.Block(stmts=(n.Return(value=value),)))
        return tuple(prelude) + (Edit.insert_before(path, stmt_id, early),)

    # DefaultValue: keep S for non-null receivers, run S on a default otherwise
    if prelude:
        guarded = replace_subtree(stmt, receiver.id, recv_ref)
        binding: tuple[Edit, ...] = (prelude[1],)
    else:
        guarded = stmt
        binding = ()
    defaulted = replace_subtree(stmt, receiver.id, _default_for(deref))
    branch = n.If(
        cond=null_check(recv_ref, "!="),
        then=n.Block(stmts=(n.strip_meta(guarded),)),
        orelse=n.Block(stmts=(n.strip_meta(defaulted),)),
    )
    return binding + (Edit.replace(path, stmt_id, branch),)


def repair(
    parsed: ParsedProject,
    report: SuiteReport,
    diagnoses: Sequence[DerefDiagnosis],
    budget: int = DEFAULT_BUDGET,
    deadline: Optional[Deadline] = None,
) -> Patch:
    if not diagnoses:
        raise NotApplicable("no diagnoses")
    deadline = deadline or Deadline(None)
    partial: list = []
    seen_sites = set()
    for diag in diagnoses:
        if diag.site in seen_sites:
            continue
        seen_sites.add(diag.site)
        site_fix = None
        for strategy in STRATEGY_ORDER:
            deadline.check()
            edits = strategy_edits(parsed, diag, strategy)
            after = try_edits(parsed, edits, budget)
            if after is None:
                continue
            if after.all_passed:
                return _patch(parsed, report, after, edits, [(diag, strategy)])
            if site_fix is None and after.result(diag.test).passed:
                site_fix = (edits, strategy)
        if site_fix is not None:
            partial.append((diag, *site_fix))

    # several independent null bugs: combine the per-site fixes
    if len(partial) > 1:
        edits = tuple(e for _, site_edits, _ in partial for e in site_edits)
        after = try_edits(parsed, edits, budget)
        if after is not None and after.all_passed:
            return _patch(parsed, report, after, edits, [(d, s) for d, _, s in partial])
    raise NoFixFound("no strategy passed the full suite")


def _patch(parsed, report, after, edits, chosen) -> Patch:
    parts = [f"{s} on `{d.receiver}` ({d.site[0]})" for d, s in chosen]
    return make_patch(
        Engine.NPEFIX, parsed, edits, report, after,
        "guard null dereference: " + "; ".join(parts),
        strategies=[str(s) for _, s in chosen],
        receivers=[d.receiver for d, _ in chosen],
    )
