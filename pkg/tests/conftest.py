import os
import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

SCENES = Path(__file__).parent.parent / "src" / "ungrasp" / "scenes"


def scene_path(name):
    return str(SCENES / f"{name}.json")


def load(name):
    from ungrasp.cli import parse_scene
    return parse_scene(scene_path(name))


slow = pytest.mark.skipif(not os.environ.get("UNGRASP_SLOW"),
                          reason="exhaustive oracle run; set UNGRASP_SLOW=1")

ACCEPTANCE = []  # (criterion, passed, detail), filled by test_acceptance


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for n, ok, detail in sorted(ACCEPTANCE):
        terminalreporter.write_line(f"criterion {n}: {'PASS' if ok else 'FAIL'}  {detail}")
