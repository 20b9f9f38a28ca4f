import io
import json
import os

import pytest

from repairbot.cli import EXIT_ERROR, EXIT_NO_PATCH, EXIT_OK, RANKING_NOTE, main
from repairbot.config import Config, ConfigError, load_config, parse_engines
from repairbot.patch import Engine
from repairbot.pipeline import FakeClock

from conftest import FIXTURES, WATCH_START, write_corpus


class Run:
    def __init__(self, tmp_path):
        self.state = tmp_path / "state"
        self.clock = FakeClock(WATCH_START)

    def __call__(self, *argv, env=None):
        out, err = io.StringIO(), io.StringIO()
        code = main([argv[0], "--state", str(self.state), *map(str, argv[1:])], self.clock, env or {}, out, err)
        return code, out.getvalue(), err.getvalue()


@pytest.fixture
def run(tmp_path):
    return Run(tmp_path)


def test_repair_exit_codes(run):
    code, out, _ = run("repair", FIXTURES / "offby1-mini")
    assert code == EXIT_OK and "Nopol: patch" in out and "queued local-offby1-mini-1-nopol" in out
    code, out, _ = run("repair", FIXTURES / "counter-mini")
    assert code == EXIT_NO_PATCH and "nothing to repair" in out
    code, _, err = run("repair", FIXTURES / "broken-mini")
    assert code == EXIT_ERROR and err.startswith("error: CompileError:")
    code, out, _ = run("repair", FIXTURES / "deep-bug-mini", "--engines", "nopol,npefix")
    assert code == EXIT_NO_PATCH and "no patch found" in out
    code, _, err = run("repair", FIXTURES / "missing-mini")
    assert code == EXIT_ERROR


def test_repeated_local_repairs_get_fresh_build_ids(run):
    run("repair", FIXTURES / "offby1-mini")
    code, out, _ = run("repair", FIXTURES / "offby1-mini")
    assert code == EXIT_OK and "local-offby1-mini-2-nopol" in out


def test_usage_errors_exit_one(run):
    assert run("frobnicate")[0] == EXIT_ERROR
    assert run("review", "reject", "x")[0] == EXIT_ERROR  # --note is required
    assert run("watch", "--max-polls", "0")[0] == EXIT_ERROR
    assert run("stats", "--engines", "nopol,sorcery")[0] == EXIT_ERROR
    assert run("stats", "--poll-secs", "0.5")[0] == EXIT_ERROR


def test_review_flow(run, tmp_path):
    run("repair", FIXTURES / "ditto-mini")
    code, out, _ = run("review", "list")
    assert code == EXIT_OK
    assert out.splitlines()[0].startswith("local-ditto-mini-1-npefix  NpeFix  +")
    assert out.splitlines()[-1] == RANKING_NOTE
    code, out, _ = run("review", "show", "local-ditto-mini-1-npefix")
    assert "status: Pending" in out and "Failing tests fixed (1):" in out

    code, out, _ = run("review", "approve", "local-ditto-mini-1-npefix", "--note", "ok by me")
    assert code == EXIT_OK
    dest = run.state / "proposals" / "ditto-mini" / "local-ditto-mini-1-npefix"
    assert (dest / "metadata.json").is_file()
    assert json.loads((dest / "metadata.json").read_text())["note"] == "ok by me"
    # a second approval is illegal and changes nothing
    code, _, err = run("review", "approve", "local-ditto-mini-1-npefix")
    assert code == EXIT_ERROR and "IllegalTransition" in err
    assert run("review", "list")[1] == "no pending proposals\n"
    assert run("review", "show", "nope")[0] == EXIT_ERROR

    run("repair", FIXTURES / "offby1-mini")
    code, out, _ = run("review", "reject", "local-offby1-mini-1-nopol", "--note", "prefer a wider refactor")
    assert code == EXIT_OK
    code, out, _ = run("stats", "--format", "json")
    stats = json.loads(out)
    assert stats["proposals"] == {"Pending": 0, "Approved": 0, "Rejected": 1, "Submitted": 1}


def test_watch_once_then_stats(run, tmp_path):
    inbox = tmp_path / "inbox"
    write_corpus(inbox)
    code, out, _ = run("watch", "--inbox", inbox, "--once", "--workers", "2")
    assert code == EXIT_OK
    events = [json.loads(line) for line in out.splitlines()]
    assert sum(e["event"] == "processed" for e in events) == 8
    code, out, _ = run("stats")
    assert "failure rate: 25.0%\n" in out and "builds seen: 8\n" in out


def test_watch_refuses_locked_state(run, tmp_path):
    run.state.mkdir()
    (run.state / "watch.lock").write_text(f"{os.getpid()}\n")
    code, _, err = run("watch", "--inbox", tmp_path / "inbox", "--once")
    assert code == EXIT_ERROR and "WatchLocked" in err


@pytest.mark.parametrize("command", [["repair", str(FIXTURES / "offby1-mini")], ["watch", "--once"]])
def test_unwritable_state_dir(tmp_path, command):
    blocker = tmp_path / "file"
    blocker.write_text("not a directory")
    err = io.StringIO()
    argv = [*command, "--state", str(blocker / "state"), "--inbox", str(tmp_path / "inbox")]
    assert main(argv, FakeClock(WATCH_START), {}, io.StringIO(), err) == EXIT_ERROR
    assert err.getvalue().startswith("error: ConfigError:")


# -- configuration -------------------------------------------------------------------


def test_precedence_flags_env_file_defaults(tmp_path):
    state = tmp_path / "state"
    state.mkdir()
    (state / "config.json").write_text(json.dumps({"seed": 1, "workers": 3, "poll_secs": 5, "engines": "genprog"}))
    env = {"REPAIRBOT_STATE": str(state), "REPAIRBOT_SEED": "2", "REPAIRBOT_WORKERS": "6"}
    config = load_config({"seed": 3}, env)
    assert config.seed == 3  # flag beats env and file
    assert config.workers == 6  # env beats file
    assert config.poll_secs == 5.0  # file beats default
    assert config.engines == (Engine.GENPROG,)
    assert config.max_diff_lines == Config().max_diff_lines
    assert config.proposals == state / "proposals"


def test_config_errors(tmp_path):
    with pytest.raises(ConfigError):
        load_config({}, {"REPAIRBOT_WORKERS": "many"})
    with pytest.raises(ConfigError):
        load_config({}, {"REPAIRBOT_COLOUR": "blue"})
    (tmp_path / "config.json").write_text("[1, 2]")
    with pytest.raises(ConfigError):
        load_config({"state": str(tmp_path)}, {})


def test_parse_engines_is_ordered_and_case_insensitive():
    assert parse_engines("GenProg, nopol,NOPOL") == (Engine.NOPOL, Engine.GENPROG)
    with pytest.raises(ConfigError):
        parse_engines(" , ")
