import json
import shutil
from datetime import datetime, timedelta, timezone
from pathlib import Path

import pytest

from repairbot.faultloc import localize
from repairbot.pipeline import run_build
from repairbot.testkit import ParsedProject, Project, run_suite

FIXTURES = Path(__file__).parent / "fixtures"

# eight builds: six passing, two failing (one in four)
CORPUS = [
    "counter-mini",
    "greeter-mini",
    "offby1-mini",
    "counter-mini",
    "greeter-mini",
    "ditto-mini",
    "counter-mini",
    "greeter-mini",
]
CORPUS_START = datetime(2026, 1, 5, 8, 0, tzinfo=timezone.utc)
WATCH_START = datetime(2026, 1, 5, 12, 0, tzinfo=timezone.utc)


def load(name):
    parsed = ParsedProject.from_project(Project.load(FIXTURES / name))
    report = run_suite(parsed)
    return parsed, report


def load_localized(name):
    parsed, report = load(name)
    return parsed, report, localize(parsed, report)


def write_corpus(inbox: Path, plan=CORPUS) -> list[str]:
    """Copy fixtures into ``inbox`` as builds; every other build ships its own log."""
    ids = []
    for i, fixture in enumerate(plan, 1):
        build = inbox / f"build-{i:02d}"
        shutil.copytree(FIXTURES / fixture, build)
        created = CORPUS_START + timedelta(minutes=30 * i)
        (build / "build.json").write_text(json.dumps({"created_at": created.isoformat()}))
        if i % 2 == 0:
            (build / "build.log").write_text(run_build(build))
        ids.append(build.name)
    return ids


@pytest.fixture
def fixture_copy(tmp_path):
    def copy(name):
        dest = tmp_path / name
        shutil.copytree(FIXTURES / name, dest)
        return dest

    return copy
