"""Mutation-only generate-and-validate search over statements.

Mutants are edit scripts addressed by node ids of the original snapshot.
Each generation is scored on the full suite, the better half survives, and
the rest of the population is refilled by mutating random survivors. The
first mutant that passes every test is minimized and returned.

Random draws come from ``SplitMix64`` in a fixed order per mutation:
operator, then target, then donor (``Delete`` draws no donor). Survivors are
picked with one ``below`` draw each.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

from ..faultloc import DEFAULT_TOP_K, SuspiciousnessMap
from ..minilang import Ast, Edit, EditKind, NodeKey, pretty_stmt
from ..minilang import nodes as n
from ..minilang.interp import DEFAULT_BUDGET
from ..patch import Engine, Patch, apply_edits
from ..rng import SplitMix64
from ..testkit import ParsedProject, SuiteReport
from .common import Deadline, NoFixFound, exploration_budget, make_patch, try_edits

log = logging.getLogger(__name__)

MAX_RESAMPLES = 10
OPERATORS = (EditKind.DELETE, EditKind.INSERT_BEFORE, EditKind.REPLACE)


class NoApplicableMutation(Exception):
    pass


@dataclass(frozen=True)
class SearchConfig:
    population: int = 40
    generations: int = 50
    seed: int = 42
    w_pass: float = 1.0
    w_fail: float = 10.0
    p_delete: float = 0.3
    p_insert: float = 0.3
    p_replace: float = 0.4
    max_edits: int = 2
    top_k: int = DEFAULT_TOP_K
    step_budget: int = DEFAULT_BUDGET

    def __post_init__(self):
        if abs(self.p_delete + self.p_insert + self.p_replace - 1.0) > 1e-9:
            raise ValueError("operator probabilities must sum to 1")
        if self.population < 1 or self.generations < 1 or self.max_edits < 1:
            raise ValueError("population, generations and max_edits must be >= 1")

    @property
    def operator_weights(self) -> tuple[float, float, float]:
        return (self.p_delete, self.p_insert, self.p_replace)


@dataclass
class Mutant:
    id: int
    edits: tuple[Edit, ...]
    parent: Optional[int] = None
    draws: int = 0
    fitness: Optional[float] = None
    report: Optional[SuiteReport] = field(default=None, repr=False)


# -- scope analysis --------------------------------------------------------------


def scope_at(ast: Ast, stmt_id: int) -> frozenset[str]:
    """Variables visible just before statement ``stmt_id`` (lexical only)."""
    names: set[str] = set()
    node = ast.node(stmt_id)
    while not isinstance(node, n.FunDecl):
        parent = ast.parents[node.id]
        if isinstance(parent, n.Block):
            for sibling in parent.stmts:
                if sibling.id == node.id:
                    break
                if isinstance(sibling, n.VarDecl):
                    names.add(sibling.name)
        node = parent
    names.update(node.params)
    return frozenset(names)


def free_vars(stmt: n.Stmt) -> frozenset[str]:
    declared = {d.name for d in stmt.walk() if isinstance(d, n.VarDecl)}
    used = {d.name for d in stmt.walk() if isinstance(d, n.VarRef)}
    if isinstance(stmt, n.VarDecl):
        declared.discard(stmt.name)
        used_in_init = {d.name for d in stmt.init.walk() if isinstance(d, n.VarRef)}
        return frozenset(used_in_init)
    return frozenset(used - declared)


class DonorPool:
    """Distinct statements of the snapshot's non-test files, usable as donors."""

    def __init__(self, parsed: ParsedProject):
        self.parsed = parsed
        self.donors: list[tuple[NodeKey, n.Stmt, frozenset[str]]] = []
        seen: set[n.Stmt] = set()
        for ast in parsed.src_asts:
            for stmt in ast.statements():
                # structurally identical statements are one ingredient
                shape = n.strip_meta(stmt)
                if shape in seen:
                    continue
                seen.add(shape)
                self.donors.append(((ast.path, stmt.id), stmt, free_vars(stmt)))
        self._scopes: dict[NodeKey, frozenset[str]] = {}

    def for_target(self, target: NodeKey, for_replace: bool) -> list[tuple[NodeKey, n.Stmt]]:
        if target not in self._scopes:
            path, sid = target
            self._scopes[target] = scope_at(self.parsed.asts[path], sid)
        scope = self._scopes[target]
        path, sid = target
        original = n.strip_meta(self.parsed.asts[path].node(sid))
        pool = []
        for key, stmt, fv in self.donors:
            if not fv <= scope:
                continue
            if for_replace and (key == target or n.strip_meta(stmt) == original):
                continue
            pool.append((key, stmt))
        return pool


def mutate(
    parsed: ParsedProject,
    current: dict[str, Ast],
    localization: SuspiciousnessMap,
    rng: SplitMix64,
    config: SearchConfig = SearchConfig(),
    pool: Optional[DonorPool] = None,
    operator: Optional[EditKind] = None,
) -> Edit:
    """Draw one statement-level edit.

    ``current`` holds the mutant's already-edited ASTs; targets that no longer
    exist there are not eligible. ``operator`` pins the operator (tests).
    """
    pool = pool or DonorPool(parsed)
    targets = []
    weights = []
    for key in localization.top(config.top_k):
        path, sid = key
        ast = current.get(path, parsed.asts[path])
        if ast.resolve(sid) is None:
            continue
        targets.append(key)
        weights.append(localization.score(key))
    if not targets:
        raise NoApplicableMutation("no localized statement left to mutate")
    if sum(weights) <= 0:
        weights = [1.0] * len(targets)

    for _ in range(MAX_RESAMPLES):
        op = OPERATORS[rng.weighted(config.operator_weights)] if operator is None else operator
        if operator is not None:
            rng.uniform()  # keep the draw order stable
        path, sid = target = targets[rng.weighted(weights)]
        if op is EditKind.DELETE:
            return Edit.delete(path, sid)
        donors = pool.for_target(target, for_replace=op is EditKind.REPLACE)
        if not donors:
            continue
        _, donor = donors[rng.below(len(donors))]
        if op is EditKind.INSERT_BEFORE:
            return Edit.insert_before(path, sid, donor)
        return Edit.replace(path, sid, donor)
    raise NoApplicableMutation(f"no donor after {MAX_RESAMPLES} resamples")


# -- search --------------------------------------------------------------------------


class Search:
    def __init__(
        self,
        parsed: ParsedProject,
        report: SuiteReport,
        localization: SuspiciousnessMap,
        config: SearchConfig,
        deadline: Optional[Deadline] = None,
        log_path: Optional[Path] = None,
    ):
        self.parsed = parsed
        self.report = report
        self.localization = localization
        self.config = config
        self.deadline = deadline or Deadline(None)
        self.log_path = log_path
        self.rng = SplitMix64(config.seed)
        self.pool = DonorPool(parsed)
        self.originally_failing = set(report.failing)
        max_steps = max((r.steps for r in report.results), default=0)
        self.cap = exploration_budget(max_steps, config.step_budget)
        self._cache: dict[tuple[Edit, ...], tuple[float, Optional[SuiteReport]]] = {}
        self._next_id = 0
        self.generation = 0
        self.evaluated = 0
        self.best_history: list[float] = []

    def _new_mutant(self, edits, parent=None) -> Mutant:
        m = Mutant(self._next_id, tuple(edits), parent, self.rng.draws)
        self._next_id += 1
        return m

    def fitness(self, edits: tuple[Edit, ...]) -> tuple[float, Optional[SuiteReport]]:
        if edits in self._cache:
            return self._cache[edits]
        self.deadline.check()
        self.evaluated += 1
        after = try_edits(self.parsed, edits, self.cap)
        if after is None:
            value = -1.0
        else:
            kept = sum(1 for r in after.results if r.passed and r.test not in self.originally_failing)
            fixed = sum(1 for r in after.results if r.passed and r.test in self.originally_failing)
            value = self.config.w_pass * kept + self.config.w_fail * fixed
        self._cache[edits] = (value, after)
        return value, after

    def _draw(self, base_edits: tuple[Edit, ...]) -> Edit:
        try:
            current = apply_edits(self.parsed, base_edits)
        except Exception:
            current = {}
        return mutate(self.parsed, current, self.localization, self.rng, self.config, self.pool)

    def _child(self, parent: Mutant) -> Mutant:
        edits = parent.edits
        if len(edits) >= self.config.max_edits:
            edits = edits[:-1]
        try:
            edit = self._draw(edits)
        except NoApplicableMutation:
            return self._new_mutant(parent.edits, parent.id)
        return self._new_mutant(edits + (edit,), parent.id)

    def _initial(self) -> list[Mutant]:
        population = []
        attempts = 0
        while len(population) < self.config.population and attempts < self.config.population * MAX_RESAMPLES:
            attempts += 1
            try:
                population.append(self._new_mutant((self._draw(()),)))
            except NoApplicableMutation:
                continue
        return population

    def _log(self, record: dict) -> None:
        if self.log_path is None:
            return
        with open(self.log_path, "a", encoding="utf-8") as fh:
            fh.write(json.dumps(record, sort_keys=True) + "\n")

    def run(self) -> Patch:
        if self.report.all_passed:
            raise NoFixFound("nothing to repair")
        population = self._initial()
        if not population:
            raise NoFixFound("no applicable mutation")
        for gen in range(1, self.config.generations + 1):
            self.generation = gen
            for m in population:
                if m.fitness is None:
                    m.fitness, m.report = self.fitness(m.edits)
                if m.report is not None and m.report.all_passed:
                    best = max(x.fitness for x in population if x.fitness is not None)
                    self.best_history.append(best)
                    self._log({"generation": gen, "best_fitness": best, "evaluated": self.evaluated, "found": True})
                    return self._finish(m)
            ranked = sorted(population, key=lambda m: (-m.fitness, m.id))
            self.best_history.append(ranked[0].fitness)
            self._log({"generation": gen, "best_fitness": ranked[0].fitness, "evaluated": self.evaluated})
            elites = ranked[: max(1, self.config.population // 2)]
            children = []
            while len(elites) + len(children) < self.config.population:
                parent = elites[self.rng.below(len(elites))]
                children.append(self._child(parent))
            population = elites + children
        raise NoFixFound(f"no repair after {self.config.generations} generations")

    def _finish(self, mutant: Mutant) -> Patch:
        edits = minimize(self.parsed, mutant.edits, self.config.step_budget)
        after = try_edits(self.parsed, edits, self.config.step_budget)
        if after is None or not after.all_passed:
            raise NoFixFound("mutant failed full-budget revalidation")
        summary = "; ".join(_describe(self.parsed, e) for e in edits)
        return make_patch(
            Engine.GENPROG, self.parsed, edits, self.report, after, summary,
            generation=self.generation, evaluated=self.evaluated, mutant=mutant.id, seed=self.config.seed,
        )


def minimize(parsed: ParsedProject, edits: tuple[Edit, ...], budget: int = DEFAULT_BUDGET) -> tuple[Edit, ...]:
    """Greedily drop edits that are not needed for the suite to pass."""
    edits = tuple(edits)
    i = 0
    while i < len(edits) and len(edits) > 1:
        trial = edits[:i] + edits[i + 1:]
        after = try_edits(parsed, trial, budget)
        if after is not None and after.all_passed:
            edits = trial
        else:
            i += 1
    return edits


def _describe(parsed: ParsedProject, edit: Edit) -> str:
    ast = parsed.asts[edit.path]
    target = pretty_stmt(ast.node(edit.target)).strip().splitlines()[0]
    line = ast.line_of(ast.node(edit.target))
    if edit.kind is EditKind.DELETE:
        return f"delete `{target}` ({edit.path}:{line})"
    donor = pretty_stmt(edit.payload).strip().splitlines()[0]
    if edit.kind is EditKind.INSERT_BEFORE:
        return f"insert `{donor}` before `{target}` ({edit.path}:{line})"
    return f"replace `{target}` with `{donor}` ({edit.path}:{line})"


def search(
    parsed: ParsedProject,
    report: SuiteReport,
    localization: SuspiciousnessMap,
    config: SearchConfig = SearchConfig(),
    deadline: Optional[Deadline] = None,
    log_path: Optional[Path] = None,
) -> Patch:
    return Search(parsed, report, localization, config, deadline, log_path).run()
