import itertools

import pytest

from repairbot.engines import NoFixFound, nopol
from repairbot.engines.nopol import AngelicRecord, NoAngelicValues, Observation
from repairbot.minilang import CondEval, evaluate, nodes as n, parse_expr, pretty_expr
from repairbot.minilang.nodes import strip_meta
from repairbot.minilang.values import Array, Record
from repairbot.patch import apply_diff
from repairbot.testkit import run_suite

from conftest import load, load_localized


def site_of(parsed, path, text):
    """(path, cond id) of the if/while whose condition prints as ``text``."""
    ast = parsed.asts[path]
    for node in ast.nodes:
        if isinstance(node, (n.If, n.While)) and pretty_expr(node.cond) == text:
            return (path, node.cond.id)
    raise LookupError(text)


# -- independent oracles ---------------------------------------------------------


def grammar_oracle(envs, constants):
    """The documented grammar, written out directly: yields (source text, python predicate)."""
    names = sorted(set.intersection(*(set(e) for e in envs)))

    def every(pred):
        return [v for v in names if all(pred(e[v]) for e in envs)]

    ints = every(lambda x: isinstance(x, int) and not isinstance(x, bool))
    bools = every(lambda x: isinstance(x, bool))
    refs = every(lambda x: x is None or isinstance(x, (Record, Array)))
    ops = {"==": lambda a, b: a == b, "!=": lambda a, b: a != b, "<": lambda a, b: a < b,
           "<=": lambda a, b: a <= b, ">": lambda a, b: a > b, ">=": lambda a, b: a >= b}

    level1 = [("true", lambda e: True), ("false", lambda e: False)]
    level1 += [(b, lambda e, b=b: e[b]) for b in bools]
    for r in refs:
        level1.append((f"{r} == null", lambda e, r=r: e[r] is None))
        level1.append((f"{r} != null", lambda e, r=r: e[r] is not None))
    for op, fn in ops.items():
        for x in ints:
            for c in sorted(constants):
                level1.append((f"{x} {op} {c}", lambda e, x=x, c=c, fn=fn: fn(e[x], c)))
            for y in ints:
                if y != x:
                    level1.append((f"{x} {op} {y}", lambda e, x=x, y=y, fn=fn: fn(e[x], e[y])))
    yield from level1
    terms = level1[2:]
    for text, fn in terms:
        yield (f"!({text})", lambda e, fn=fn: not fn(e))
    for joiner, combine in (("&&", lambda a, b: a and b), ("||", lambda a, b: a or b)):
        for (ta, fa), (tb, fb) in itertools.combinations(terms, 2):
            yield (f"({ta}) {joiner} ({tb})", lambda e, fa=fa, fb=fb, c=combine: c(fa(e), fb(e)))


def oracle_first(records, passing, constants):
    envs = [o.env for o in passing] + [s for r in records for s in r.snapshots]
    tests = sorted({r.test for r in records})
    for text, pred in grammar_oracle(envs, constants):
        if any(pred(o.env) != o.value for o in passing):
            continue
        if all(
            any(tuple(pred(s) for s in r.snapshots) == r.forced for r in records if r.test == t) for t in tests
        ):
            return text
    return None


def exhaustive_forcings(parsed, test_id, site, count):
    case = next(c for c in parsed.tests if c.id == test_id)
    winners = []
    for bits in itertools.product((False, True), repeat=count):
        res = parsed.run_test(case, 100_000, force=lambda key, k: bits[k] if key == site and k < count else None,
                              watch={site})
        evaluations = [e for e in res.events if isinstance(e, CondEval)]
        if res.passed and len(evaluations) == count:
            winners.append(bits)
    return winners


def same_expr(a, text):
    return strip_meta(a) == strip_meta(parse_expr(text))


# -- angelic values --------------------------------------------------------------


def test_intro_bug_angelic_record():
    parsed, report = load("offby1-mini")
    site = site_of(parsed, "src/discount.mini", "x < 10")
    (rec,) = nopol.find_angelic(parsed, report, [site])
    assert rec.test == "tests/test_discount.mini::test_boundary_order"
    assert rec.forced == (True,)
    assert rec.snapshots[0]["x"] == 10


def test_forcing_that_never_helps():
    parsed, report = load("promo-fee-mini")
    site = site_of(parsed, "src/fee.mini", "weight > 10")
    with pytest.raises(NoAngelicValues):
        nopol.find_angelic(parsed, report, [site])


def test_three_evaluations_only_one_sequence_passes():
    parsed, report = load("encode-mini")
    site = site_of(parsed, "src/encode.mini", "values[i] > 8")
    (test_id,) = report.failing
    oracle = exhaustive_forcings(parsed, test_id, site, 3)
    assert oracle == [(True, True, False)]
    records = nopol.find_angelic(parsed, report, [site])
    assert [r.forced for r in records] == oracle
    assert all(len(r.snapshots) == len(r.forced) for r in records)


@pytest.mark.parametrize("name", ["offby1-mini", "encode-mini", "promo-fee-mini", "geocache-mini"])
def test_records_replay(name):
    parsed, report, susp = load_localized(name)
    for site in nopol.condition_sites(parsed, susp):
        for test_id in report.failing:
            for rec in nopol.angelic_for_site(parsed, test_id, site):
                case = next(c for c in parsed.tests if c.id == test_id)
                seq = rec.forced
                res = parsed.run_test(case, force=lambda key, k: seq[k] if key == site and k < len(seq) else None)
                assert res.passed


# -- synthesis -------------------------------------------------------------------


def test_synthesis_of_the_intro_fix():
    records = [AngelicRecord("t_boundary", ("a.mini", 5), (True,), ({"x": 10},))]
    passing = [Observation("t_small", True, {"x": 3}), Observation("t_large", False, {"x": 15})]
    expr = nopol.synthesize(records, passing, [-1, 0, 1, 10])
    assert pretty_expr(expr) == "x <= 10"


def test_degenerate_true():
    records = [AngelicRecord("t", ("a.mini", 5), (True, True), ({"x": 1}, {"x": 2}))]
    assert same_expr(nopol.synthesize(records, [], [-1, 0, 1]), "true")


def test_unsolvable_case_agrees_with_oracle():
    records = [AngelicRecord("f", ("s", 1), (True,), ({"x": 1, "y": 7},))]
    passing = [Observation("p", False, {"x": 0, "y": 7}), Observation("q", False, {"x": 1, "y": 6}),
               Observation("r", False, {"x": 2, "y": 8})]
    assert oracle_first(records, passing, [0, 1, 10]) is None
    with pytest.raises(NoFixFound):
        nopol.synthesize(records, passing, [0, 1, 10])


def test_grammar_exhausted():
    # x == 1 must be true and false at once
    records = [AngelicRecord("t", ("a.mini", 5), (True,), ({"x": 1},))]
    with pytest.raises(NoFixFound):
        nopol.synthesize(records, [Observation("p", False, {"x": 1})], [0])


def test_records_must_share_a_site():
    records = [AngelicRecord("t", ("a.mini", 1), (True,), ({},)), AngelicRecord("t", ("a.mini", 2), (True,), ({},))]
    with pytest.raises(ValueError):
        nopol.synthesize(records, [], [0])


def test_constant_pool():
    parsed, _ = load("promo-fee-mini")
    site = site_of(parsed, "src/fee.mini", "weight < 4")
    assert nopol.constant_pool(parsed, site) == [-1, 0, 1, 4, 5, 9, 10]


TWO_VARS = [
    # (records, passing) over variables {x, y} with constants {0, 1, 10}
    (
        [AngelicRecord("f", ("s", 1), (True,), ({"x": 4, "y": 4},))],
        [Observation("p1", False, {"x": 3, "y": 5}), Observation("p2", False, {"x": 10, "y": 1})],
    ),
    (
        [AngelicRecord("f", ("s", 1), (False, True), ({"x": 0, "y": 2}, {"x": 1, "y": 1}))],
        [Observation("p", True, {"x": 2, "y": 0})],
    ),
    (
        [AngelicRecord("f", ("s", 1), (True,), ({"x": 10, "y": 0},)),
         AngelicRecord("f", ("s", 1), (False,), ({"x": 10, "y": 0},))],
        [Observation("p", False, {"x": 11, "y": 0}), Observation("p", True, {"x": 9, "y": 3})],
    ),
    (
        [AngelicRecord("f", ("s", 1), (True,), ({"x": 5, "y": 0, "flag": True},))],
        [Observation("p", False, {"x": 5, "y": 0, "flag": False})],
    ),
    (
        [AngelicRecord("f", ("s", 1), (True,), ({"x": 1, "y": 7},))],
        [Observation("p", False, {"x": 0, "y": 7}), Observation("q", False, {"x": 1, "y": 0}),
         Observation("r", False, {"x": 2, "y": 8})],
    ),
]


@pytest.mark.parametrize("records, passing", TWO_VARS)
def test_matches_brute_force_enumerator(records, passing):
    expected = oracle_first(records, passing, [0, 1, 10])
    assert expected is not None
    assert same_expr(nopol.synthesize(records, passing, [0, 1, 10]), expected)


@pytest.mark.parametrize(
    "name, cond, expected",
    [
        ("offby1-mini", "x < 10", "x <= 10"),
        ("encode-mini", "values[i] > 8", "i != 2"),
        ("promo-fee-mini", "weight < 4", "weight == 10 || weight < 4"),
    ],
)
def test_fixture_sites_match_brute_force(name, cond, expected):
    parsed, report = load(name)
    path = next(iter(p for p in parsed.asts if p.startswith("src/")))
    site = site_of(parsed, path, cond)
    records = [r for t in report.failing for r in nopol.angelic_for_site(parsed, t, site)]
    passing = nopol.passing_observations(parsed, report, site)
    constants = nopol.constant_pool(parsed, site)
    synthesized = nopol.synthesize(records, passing, constants)
    oracle = oracle_first(records, passing, constants)
    assert same_expr(synthesized, oracle)
    assert same_expr(synthesized, expected)
    # agreement with every observation, through the interpreter's own evaluator
    for obs in passing:
        assert evaluate(synthesized, obs.env) == obs.value


def test_promo_fee_needs_level_two():
    parsed, report = load("promo-fee-mini")
    site = site_of(parsed, "src/fee.mini", "weight < 4")
    records = [r for t in report.failing for r in nopol.angelic_for_site(parsed, t, site)]
    passing = nopol.passing_observations(parsed, report, site)
    level1 = list(nopol.candidates(records, passing, nopol.constant_pool(parsed, site), max_level=1))
    assert level1 == []


# -- repair ----------------------------------------------------------------------


def _equivalent_on_range(expr, text, var="x"):
    reference = parse_expr(text)
    return all(evaluate(expr, {var: v}) == evaluate(reference, {var: v}) for v in range(-100, 101))


def test_offby1_repair():
    parsed, report, susp = load_localized("offby1-mini")
    patch = nopol.repair(parsed, report, susp)
    assert "x <= 10" in patch.diff
    (edit,) = patch.edits
    target = parsed.asts[edit.path].node(edit.target)
    assert isinstance(parsed.asts[edit.path].parents[target.id], (n.If, n.While))
    assert _equivalent_on_range(edit.payload, "x <= 10")
    assert apply_diff(patch.diff, {f.path: f.text for f in parsed.project.files}) == patch.patched_sources
    assert run_suite(parsed.project.with_sources(patch.patched_sources)).all_passed


def test_promo_fee_repair_is_level_two():
    parsed, report, susp = load_localized("promo-fee-mini")
    patch = nopol.repair(parsed, report, susp)
    assert patch.details["condition"] == "weight == 10 || weight < 4"


def test_nothing_to_repair():
    parsed, report = load("counter-mini")
    with pytest.raises(NoFixFound):
        nopol.repair(parsed, report, None)


def test_abstains_without_condition_fix():
    parsed, report, susp = load_localized("deep-bug-mini")
    with pytest.raises(NoFixFound):
        nopol.repair(parsed, report, susp)


def test_deterministic():
    a = nopol.repair(*load_localized("promo-fee-mini"))
    b = nopol.repair(*load_localized("promo-fee-mini"))
    assert a.diff == b.diff and a.edits == b.edits
