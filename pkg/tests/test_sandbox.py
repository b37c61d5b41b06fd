import os
from concurrent.futures import ThreadPoolExecutor

import pytest

from asa.sandbox import (
    InterpreterNotFound,
    WorkspaceUnwritable,
    execute_program,
    snapshot_workspace,
)

PY = "python3"


class TestExecuteProgram:
    def test_pure_print(self, tmp_path):
        outcome = execute_program('print("hello")', tmp_path, PY, 10)
        assert outcome.exit_ok
        assert outcome.exit_code == 0
        assert outcome.stdout == "hello\n"
        assert outcome.files_created == ()
        assert not outcome.timed_out

    def test_exception_captured(self, tmp_path):
        outcome = execute_program('raise ValueError("boom")', tmp_path, PY, 10)
        assert not outcome.exit_ok
        assert "Traceback" in outcome.stderr
        assert "boom" in outcome.stderr

    def test_timeout_keeps_created_files(self, tmp_path):
        source = (
            'open("data.csv", "w").write("1,2\\n")\n'
            "import time\ntime.sleep(30)\n"
        )
        outcome = execute_program(source, tmp_path, PY, 1.0)
        assert outcome.timed_out
        assert not outcome.exit_ok
        assert "data.csv" in outcome.files_created

    def test_source_file_excluded_from_diff(self, tmp_path):
        outcome = execute_program("x = 1", tmp_path, PY, 10, name="prog_0_0")
        assert (tmp_path / "prog_0_0.py").exists()
        assert outcome.files_created == ()

    def test_runs_with_workspace_cwd(self, tmp_path):
        outcome = execute_program(
            "import os; print(os.getcwd())", tmp_path, PY, 10
        )
        assert outcome.stdout.strip() == str(tmp_path.resolve())

    def test_trial_index_env(self, tmp_path):
        outcome = execute_program(
            'import os; print(os.environ["TRIAL_INDEX"])',
            tmp_path, PY, 10, extra_env={"TRIAL_INDEX": "7"},
        )
        assert outcome.stdout.strip() == "7"

    def test_interpreter_not_found(self, tmp_path):
        with pytest.raises(InterpreterNotFound):
            execute_program("x = 1", tmp_path, "no-such-interp-xyz", 10)

    def test_missing_workspace(self, tmp_path):
        with pytest.raises(WorkspaceUnwritable):
            execute_program("x = 1", tmp_path / "nope", PY, 10)

    def test_output_truncated(self, tmp_path):
        outcome = execute_program('print("x" * 100000)', tmp_path, PY, 10)
        assert len(outcome.stdout.encode()) <= 32 * 1024

    def test_isolation_between_workspaces(self, tmp_path):
        ws = [tmp_path / f"ws{i}" for i in range(2)]
        for w in ws:
            w.mkdir()
        sources = [
            f'open("mark_{i}.txt", "w").write("{i}")' for i in range(2)
        ]
        with ThreadPoolExecutor(max_workers=2) as pool:
            outcomes = list(
                pool.map(
                    lambda args: execute_program(args[0], args[1], PY, 10),
                    zip(sources, ws),
                )
            )
        assert outcomes[0].files_created == ("mark_0.txt",)
        assert outcomes[1].files_created == ("mark_1.txt",)


class TestSnapshotWorkspace:
    def test_empty_dir(self, tmp_path):
        assert snapshot_workspace(tmp_path).entries == {}

    def test_unchanged_file_stable_digest(self, tmp_path):
        (tmp_path / "a.txt").write_text("content")
        first = snapshot_workspace(tmp_path)
        second = snapshot_workspace(tmp_path)
        assert first.entries == second.entries

    def test_modified_file_changes_digest(self, tmp_path):
        path = tmp_path / "a.txt"
        path.write_text("v1")
        before = snapshot_workspace(tmp_path)
        path.write_text("v2")
        after = snapshot_workspace(tmp_path)
        assert before.entries["a.txt"] != after.entries["a.txt"]

    def test_paths_relative_and_normalized(self, tmp_path):
        sub = tmp_path / "sub"
        sub.mkdir()
        (sub / "b.txt").write_text("x")
        manifest = snapshot_workspace(tmp_path)
        assert list(manifest.entries) == ["sub/b.txt"]
        assert not any(p.startswith("..") or os.path.isabs(p) for p in manifest.entries)
