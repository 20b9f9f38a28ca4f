import json
from collections import Counter

import pytest

from repairbot.engines import NoFixFound, genprog
from repairbot.engines.common import try_edits
from repairbot.engines.genprog import DonorPool, NoApplicableMutation, Search, SearchConfig
from repairbot.faultloc import SuspiciousnessMap
from repairbot.minilang import Edit, EditKind, nodes as n, parse_stmt, pretty_stmt
from repairbot.patch import apply_edits
from repairbot.rng import SplitMix64
from repairbot.testkit import ParsedProject, Project, run_suite

from conftest import load, load_localized

# -- rng ------------------------------------------------------------------------


def test_splitmix64_reference_vectors():
    rng = SplitMix64(1234567)
    assert [rng.next_u64() for _ in range(5)] == [
        6457827717110365317,
        3203168211198807973,
        9817491932198370423,
        4593380528125082431,
        16408922859458223821,
    ]
    assert SplitMix64(0).next_u64() == 0xE220A8397B1DCDAF


def test_rng_derived_draws():
    rng = SplitMix64(9)
    xs = [rng.uniform() for _ in range(1000)]
    assert all(0.0 <= x < 1.0 for x in xs)
    assert all(0 <= rng.below(7) < 7 for _ in range(1000))
    assert rng.draws == 2000
    rng = SplitMix64(5)
    tally = Counter(rng.weighted([0.3, 0.3, 0.4]) for _ in range(20_000))
    for i, p in enumerate([0.3, 0.3, 0.4]):
        assert abs(tally[i] / 20_000 - p) < 0.02


def test_weighted_skips_zero_weights():
    rng = SplitMix64(1)
    assert {rng.weighted([0.0, 1.0, 0.0]) for _ in range(200)} == {1}


# -- config and mutation ---------------------------------------------------------


@pytest.mark.parametrize(
    "kwargs", [dict(p_delete=0.5), dict(population=0), dict(generations=0), dict(max_edits=0)]
)
def test_config_validation(kwargs):
    with pytest.raises(ValueError):
        SearchConfig(**kwargs)


def tiny_project(tmp_path, src, tests="fun test_x() { assert(true); }\n"):
    (tmp_path / "src").mkdir()
    (tmp_path / "tests").mkdir()
    (tmp_path / "src" / "a.mini").write_text(src)
    (tmp_path / "tests" / "test_a.mini").write_text(tests)
    (tmp_path / "project.json").write_text(json.dumps({"name": "tiny"}))
    return ParsedProject.from_project(Project.load(tmp_path))


def localize_all(parsed):
    keys = sorted(parsed.statement_universe())
    return SuspiciousnessMap({k: 1.0 for k in keys}, tuple(keys))


def test_forced_delete_on_single_statement(tmp_path):
    parsed = tiny_project(tmp_path, "fun f() {\n  g();\n}\n")
    edit = genprog.mutate(parsed, {}, localize_all(parsed), SplitMix64(1), operator=EditKind.DELETE)
    (ast,) = apply_edits(parsed, (edit,)).values()
    assert ast.functions[0].body == n.Block(stmts=())


def test_forced_insert_without_donors(tmp_path):
    parsed = tiny_project(tmp_path, "fun f(a) {\n  x = a;\n}\n")
    with pytest.raises(NoApplicableMutation):
        genprog.mutate(parsed, {}, localize_all(parsed), SplitMix64(1), operator=EditKind.INSERT_BEFORE)


def test_donor_scope_filter():
    parsed, _ = load("sign-flip-mini")
    pool = DonorPool(parsed)
    (ast,) = parsed.src_asts
    target = next(s for s in ast.statements() if pretty_stmt(s).strip() == "sum = sum - v;")
    donors = {pretty_stmt(d).strip() for _, d in pool.for_target((ast.path, target.id), for_replace=True)}
    assert "sum = sum + v;" in donors
    assert "sum = sum - v;" not in donors
    first = next(s for s in ast.statements() if pretty_stmt(s).strip() == "var sum = 0;")
    # nothing declared yet before the first statement: only closed or parameter-only donors
    early = {pretty_stmt(d).strip() for _, d in pool.for_target((ast.path, first.id), for_replace=False)}
    assert "sum = sum + v;" not in early and "var sum = 0;" in early


# -- brute-force single-edit oracle -----------------------------------------------


def all_single_edits(parsed):
    donors, seen = [], set()
    for ast in parsed.src_asts:
        for s in ast.statements():
            if n.strip_meta(s) not in seen:
                seen.add(n.strip_meta(s))
                donors.append(s)
    for ast in parsed.src_asts:
        for s in ast.statements():
            yield Edit.delete(ast.path, s.id)
            for d in donors:
                yield Edit.insert_before(ast.path, s.id, d)
                yield Edit.replace(ast.path, s.id, d)


def repairing_single_edits(parsed):
    out = set()
    for edit in all_single_edits(parsed):
        report = try_edits(parsed, (edit,), budget=20_000)
        if report is not None and report.all_passed:
            out.add(edit)
    return out


@pytest.fixture(scope="module")
def brute():
    return {name: repairing_single_edits(load(name)[0]) for name in ("sign-flip-mini", "spurious-reset-mini")}


def test_brute_force_confirms_sign_flip_repair(brute):
    parsed, _ = load("sign-flip-mini")
    described = {(e.kind, pretty_stmt(parsed.asts[e.path].node(e.target)).strip(),
                  pretty_stmt(e.payload).strip() if e.payload else None) for e in brute["sign-flip-mini"]}
    assert (EditKind.REPLACE, "sum = sum - v;", "sum = sum + v;") in described


def test_brute_force_confirms_spurious_reset_delete(brute):
    parsed, _ = load("spurious-reset-mini")
    deletes = [e for e in brute["spurious-reset-mini"] if e.kind is EditKind.DELETE]
    assert [pretty_stmt(parsed.asts[e.path].node(e.target)).strip() for e in deletes] == ["total = 0;"]


@pytest.mark.parametrize("name", ["sign-flip-mini", "spurious-reset-mini"])
def test_search_finds_a_brute_force_repair(name, brute):
    parsed, report, susp = load_localized(name)
    patch = genprog.search(parsed, report, susp, SearchConfig(seed=42))
    assert len(patch.edits) == 1
    assert patch.edits[0] in brute[name]
    assert patch.details["generation"] <= 50
    assert run_suite(parsed.project.with_sources(patch.patched_sources)).all_passed


def test_seed_determinism():
    runs = []
    for _ in range(2):
        parsed, report, susp = load_localized("sign-flip-mini")
        patch = genprog.search(parsed, report, susp, SearchConfig(seed=42))
        runs.append((patch.diff, patch.details["generation"], patch.details["evaluated"], patch.edits))
    assert runs[0] == runs[1]


def test_abstention_is_deterministic_too():
    outcomes = []
    for _ in range(2):
        parsed, report, susp = load_localized("deep-bug-mini")
        search = Search(parsed, report, susp, SearchConfig(seed=42, generations=8))
        with pytest.raises(NoFixFound) as info:
            search.run()
        outcomes.append((str(info.value), search.generation, search.evaluated, search.best_history))
    assert outcomes[0] == outcomes[1]
    history = outcomes[0][3]
    assert history == sorted(history), "elite fitness must never decrease"


def test_no_single_edit_fixes_deep_bug():
    assert repairing_single_edits(load("deep-bug-mini")[0]) == set()


def test_already_passing_runs_no_generation():
    parsed, report = load("counter-mini")
    search = Search(parsed, report, None, SearchConfig())
    with pytest.raises(NoFixFound):
        search.run()
    assert search.generation == 0 and search.evaluated == 0


def test_minimize_drops_unneeded_edits():
    parsed, _ = load("spurious-reset-mini")
    ast = next(iter(parsed.src_asts))
    reset = next(s for s in ast.statements() if pretty_stmt(s).strip() == "total = 0;")
    ret = next(s for s in ast.statements() if pretty_stmt(s).strip() == "return len(prices);")
    noise = Edit.insert_before(ast.path, ret.id, parse_stmt("var unused = 1;"))
    fix = Edit.delete(ast.path, reset.id)
    assert genprog.minimize(parsed, (noise, fix)) == (fix,)


@pytest.mark.parametrize("name", ["sign-flip-mini", "spurious-reset-mini"])
def test_returned_patch_is_minimal(name):
    parsed, report, susp = load_localized(name)
    patch = genprog.search(parsed, report, susp, SearchConfig(seed=42))
    for i in range(len(patch.edits)):
        rest = patch.edits[:i] + patch.edits[i + 1 :]
        after = try_edits(parsed, rest)
        assert after is None or not after.all_passed


def test_search_log(tmp_path):
    parsed, report, susp = load_localized("spurious-reset-mini")
    log_path = tmp_path / "search.jsonl"
    genprog.search(parsed, report, susp, SearchConfig(seed=42), log_path=log_path)
    records = [json.loads(l) for l in log_path.read_text().splitlines()]
    assert records and records[-1]["found"] is True
    assert [r["generation"] for r in records] == list(range(1, len(records) + 1))
    assert all("best_fitness" in r and "evaluated" in r for r in records)
