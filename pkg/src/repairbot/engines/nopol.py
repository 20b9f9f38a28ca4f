"""Condition repair by angelic-value discovery and template synthesis.

For a suspicious ``if``/``while`` condition the engine first looks for a
sequence of boolean values which, forced at that condition, makes each failing
test pass (the *angelic* values). It then enumerates a bounded grammar of
conditions and keeps the first one that reproduces the angelic values on the
failing tests and the observed values on the passing tests.

Grammar order (this order defines the answer):

level 1
    ``true``, ``false``; boolean variables; ``v == null``, ``v != null`` for
    reference-typed variables; then for each operator in
    ``== != < <= > >=``, for each integer variable ``x`` (by name), for each
    right operand (constants ascending, then the other integer variables):
    ``x op rhs``.
level 2
    ``!t`` for each non-constant level-1 term ``t``; then ``a && b``, then
    ``a || b``, over pairs of non-constant level-1 terms with ``a`` before ``b``.

The constant pool is ``{-1, 0, 1}`` plus the integer literals of the
function that holds the condition.
"""

from __future__ import annotations

import itertools
import logging
from dataclasses import dataclass
from typing import Iterator, Optional, Sequence

from ..faultloc import DEFAULT_TOP_K, SuspiciousnessMap
from ..minilang import Edit, MiniRuntimeError, NodeKey, evaluate, pretty_expr
from ..minilang import nodes as n
from ..minilang.interp import DEFAULT_BUDGET, CondEval
from ..minilang.values import Array, Record, is_int
from ..patch import Engine, Patch
from ..testkit import ParsedProject, SuiteReport
from .common import Deadline, NoFixFound, exploration_budget, make_patch, try_edits

log = logging.getLogger(__name__)

MAX_FLIP_EVALUATIONS = 8
CANDIDATES_PER_SITE = 5
COMPARISONS = ("==", "!=", "<", "<=", ">", ">=")


class NoAngelicValues(NoFixFound):
    pass


@dataclass(frozen=True)
class AngelicRecord:
    test: str
    site: NodeKey  # (path, condition expression id)
    forced: tuple[bool, ...]
    snapshots: tuple[dict, ...]


@dataclass(frozen=True)
class Observation:
    """A condition evaluation seen in a passing test, with its actual value."""

    test: str
    value: bool
    env: dict


# -- angelic values ------------------------------------------------------------


def _sequences(observed: int) -> Iterator[Optional[tuple[bool, ...]]]:
    """``None`` stands for a constant forcing of unbounded length."""
    yield None  # all true
    yield ()  # placeholder for all false, see _forcer
    if observed <= MAX_FLIP_EVALUATIONS:
        for bits in itertools.product((False, True), repeat=observed):
            yield bits


def _forcer(seq, site: NodeKey):
    if seq is None:
        return lambda key, k: True if key == site else None
    if seq == ():
        return lambda key, k: False if key == site else None
    return lambda key, k: (seq[k] if k < len(seq) else None) if key == site else None


def angelic_for_site(
    parsed: ParsedProject,
    test_id: str,
    site: NodeKey,
    budget: int = DEFAULT_BUDGET,
    deadline: Optional[Deadline] = None,
) -> list[AngelicRecord]:
    case = next(c for c in parsed.tests if c.id == test_id)
    baseline = parsed.run_test(case, budget, watch={site})
    observed = sum(1 for e in baseline.events if isinstance(e, CondEval))
    if observed == 0:
        return []
    cap = exploration_budget(baseline.steps, budget)
    records: list[AngelicRecord] = []
    seen: set[tuple[bool, ...]] = set()
    for seq in _sequences(observed):
        if deadline is not None:
            deadline.check()
        result = parsed.run_test(case, cap, force=_forcer(seq, site), watch={site})
        if not result.passed:
            continue
        evals = [e for e in result.events if isinstance(e, CondEval)]
        forced = tuple(e.value for e in evals)
        if forced in seen:
            continue
        seen.add(forced)
        records.append(AngelicRecord(test_id, site, forced, tuple(e.env for e in evals)))
    return records


def find_angelic(
    parsed: ParsedProject,
    report: SuiteReport,
    sites: Sequence[NodeKey],
    budget: int = DEFAULT_BUDGET,
    deadline: Optional[Deadline] = None,
) -> list[AngelicRecord]:
    """Every successful forcing for every (failing test, site) pair."""
    if not report.failing:
        raise ValueError("find_angelic needs failing tests")
    records = []
    for test_id in report.failing:
        for site in sites:
            records.extend(angelic_for_site(parsed, test_id, site, budget, deadline))
    if not records:
        raise NoAngelicValues("no forcing makes a failing test pass")
    return records


def passing_observations(
    parsed: ParsedProject, report: SuiteReport, site: NodeKey, budget: int = DEFAULT_BUDGET
) -> list[Observation]:
    obs = []
    for case in parsed.tests:
        if not report.result(case.id).passed:
            continue
        result = parsed.run_test(case, budget, watch={site})
        obs.extend(Observation(case.id, e.value, e.env) for e in result.events if isinstance(e, CondEval))
    return obs


# -- synthesis -----------------------------------------------------------------


def _int_literal(value: int) -> n.Expr:
    if value < 0:
        return n.UnOp(op="-", operand=n.Literal(value=-value))
    return n.Literal(value=value)


def constant_pool(parsed: ParsedProject, site: NodeKey) -> list[int]:
    path, cond_id = site
    fn = parsed.asts[path].enclosing_function(cond_id)
    consts = {-1, 0, 1}
    for node in fn.walk():
        if isinstance(node, n.Literal) and is_int(node.value):
            consts.add(node.value)
    return sorted(consts)


def level1_terms(env_list: Sequence[dict], constants: Sequence[int]) -> list[n.Expr]:
    names = sorted(set.intersection(*(set(e) for e in env_list))) if env_list else []

    def all_match(pred):
        return [v for v in names if all(pred(e[v]) for e in env_list)]

    bools = all_match(lambda x: isinstance(x, bool))
    ints = all_match(is_int)
    refs = all_match(lambda x: x is None or isinstance(x, (Record, Array)))

    terms: list[n.Expr] = [n.Literal(value=True), n.Literal(value=False)]
    terms += [n.VarRef(name=b) for b in bools]
    for v in refs:
        terms.append(n.BinOp(op="==", left=n.VarRef(name=v), right=n.Literal(value=None)))
        terms.append(n.BinOp(op="!=", left=n.VarRef(name=v), right=n.Literal(value=None)))
    for op in COMPARISONS:
        for lhs in ints:
            rhs_list = [_int_literal(c) for c in constants] + [n.VarRef(name=o) for o in ints if o != lhs]
            for rhs in rhs_list:
                terms.append(n.BinOp(op=op, left=n.VarRef(name=lhs), right=rhs))
    return terms


def _vector(expr: n.Expr, envs: Sequence[dict]) -> tuple:
    out = []
    for env in envs:
        try:
            v = evaluate(expr, env)
        except MiniRuntimeError:
            v = None
        out.append(v if isinstance(v, bool) else None)
    return tuple(out)


def _not(a):
    return tuple(None if x is None else not x for x in a)


def _and(a, b):
    return tuple(False if x is False else (None if x is None else y) for x, y in zip(a, b))


def _or(a, b):
    return tuple(True if x is True else (None if x is None else y) for x, y in zip(a, b))


def candidates(
    records: Sequence[AngelicRecord],
    passing: Sequence[Observation],
    constants: Sequence[int],
    max_level: int = 2,
) -> Iterator[n.Expr]:
    """Yield every consistent condition, in grammar order."""
    sites = {r.site for r in records}
    if len(sites) > 1:
        raise ValueError("records must share one site")
    envs: list[dict] = []
    expected: list[bool] = []
    for obs in passing:
        envs.append(obs.env)
        expected.append(obs.value)
    n_passing = len(envs)

    groups: dict[str, list[tuple[int, int]]] = {}
    for rec in records:
        start = len(envs)
        envs.extend(rec.snapshots)
        expected.extend(rec.forced)
        groups.setdefault(rec.test, []).append((start, len(envs)))

    want = tuple(expected)

    def consistent(vec) -> bool:
        if vec[:n_passing] != want[:n_passing]:
            return False
        return all(any(vec[a:b] == want[a:b] for a, b in spans) for spans in groups.values())

    terms = level1_terms(envs, constants)
    vectors = [_vector(t, envs) for t in terms]
    for term, vec in zip(terms, vectors):
        if consistent(vec):
            yield term
    if max_level < 2:
        return
    composite = [(t, v) for t, v in zip(terms, vectors) if not isinstance(t, n.Literal)]
    for term, vec in composite:
        if consistent(_not(vec)):
            yield n.UnOp(op="!", operand=term)
    for op, combine in (("&&", _and), ("||", _or)):
        for (ta, va), (tb, vb) in itertools.combinations(composite, 2):
            if consistent(combine(va, vb)):
                yield n.BinOp(op=op, left=ta, right=tb)


def synthesize(
    records: Sequence[AngelicRecord],
    passing: Sequence[Observation],
    constants: Sequence[int],
) -> n.Expr:
    for expr in candidates(records, passing, constants):
        return expr
    raise NoFixFound("bounded condition grammar exhausted")


# -- repair --------------------------------------------------------------------


def condition_sites(parsed: ParsedProject, localization: SuspiciousnessMap, top_k: int = DEFAULT_TOP_K) -> list[NodeKey]:
    sites = []
    for key in localization.top(top_k):
        if localization.score(key) <= 0:
            continue
        path, stmt_id = key
        stmt = parsed.asts[path].node(stmt_id)
        if isinstance(stmt, (n.If, n.While)):
            sites.append((path, stmt.cond.id))
    return sites


def repair(
    parsed: ParsedProject,
    report: SuiteReport,
    localization: SuspiciousnessMap,
    budget: int = DEFAULT_BUDGET,
    deadline: Optional[Deadline] = None,
    top_k: int = DEFAULT_TOP_K,
) -> Patch:
    """Replace one condition so that the whole suite passes."""
    if report.all_passed:
        raise NoFixFound("nothing to repair")
    deadline = deadline or Deadline(None)
    for site in condition_sites(parsed, localization, top_k):
        per_test = [angelic_for_site(parsed, t, site, budget, deadline) for t in report.failing]
        if not all(per_test):
            continue
        records = [r for recs in per_test for r in recs]
        passing = passing_observations(parsed, report, site, budget)
        constants = constant_pool(parsed, site)
        path, cond_id = site
        original = parsed.asts[path].node(cond_id)
        for expr in itertools.islice(candidates(records, passing, constants), CANDIDATES_PER_SITE):
            deadline.check()
            if expr == n.strip_meta(original):
                continue
            edits = (Edit.replace(path, cond_id, expr),)
            after = try_edits(parsed, edits, budget)
            if after is not None and after.all_passed:
                log.info("nopol: %s -> %s", pretty_expr(original), pretty_expr(expr))
                return make_patch(
                    Engine.NOPOL, parsed, edits, report, after,
                    f"change condition `{pretty_expr(original)}` to `{pretty_expr(expr)}`",
                    site=list(site), condition=pretty_expr(expr),
                )
    raise NoFixFound("no condition site yielded a validated patch")
