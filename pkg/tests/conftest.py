from __future__ import annotations

from pathlib import Path

import pytest

DATA_DIR = Path(__file__).parent / "data"


@pytest.fixture
def data_dir() -> Path:
    return DATA_DIR


def make_clamp_project(root: Path) -> Path:
    """A tiny Python project: clamp() should cap at 10 but doesn't.

    Trigger tests exercise the cap; the rest of the suite pins the identity
    behavior below the cap, so the naive "return 10" fix regresses.
    """
    project = root / "clamp_project"
    project.mkdir(parents=True)
    (project / "clamp.py").write_text("def clamp(x):\n    return x\n")
    (project / "test_trigger.py").write_text(
        "from clamp import clamp\n\nassert clamp(15) == 10\nassert clamp(99) == 10\n"
    )
    (project / "test_other.py").write_text(
        "from clamp import clamp\n\nassert clamp(5) == 5\nassert clamp(-3) == -3\n"
    )
    (project / "run_all.py").write_text(
        "import subprocess\nimport sys\n\n"
        'for script in ["test_other.py", "test_trigger.py"]:\n'
        "    proc = subprocess.run([sys.executable, script])\n"
        "    if proc.returncode != 0:\n"
        "        sys.exit(1)\n"
    )
    return project


def make_clamp_bug(root: Path, **overrides):
    from aprkit.validation import BugUnderRepair, Hunk

    project = make_clamp_project(root)
    fields = dict(
        id="clamp",
        language="Python",
        workdir=project,
        hunks=[Hunk("clamp.py", 2, 2)],
        build_cmd="python3 -m py_compile clamp.py",
        test_cmd="python3 run_all.py",
        trigger_cmds=["python3 test_trigger.py"],
        timeout_s=30.0,
    )
    fields.update(overrides)
    return BugUnderRepair(**fields)
