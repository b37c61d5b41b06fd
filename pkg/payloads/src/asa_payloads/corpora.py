"""Scripted-conversation corpus generators.

A corpus is a JSON-lines file of ``{"match": ..., "response": ...}`` records,
the exchange format the harness's scripted provider replays. Each scenario's
embedded payloads drive the agent loop through one named behavior
deterministically.
"""

from __future__ import annotations

import json
from pathlib import Path

from .scripts import provided_rw_payload

SCENARIOS = ("happy_rw", "broken_then_fixed", "infinite_bug", "main_sub", "nested")

COMPLETE = "MISSION COMPLETE"
CONFIRMED = "Checked: the program is free of errors and compliant with the plan."


class UnknownScenario(Exception):
    pass


def _fence(source: str, tag: str = "python") -> str:
    body = source if source.endswith("\n") else source + "\n"
    return f"```{tag}\n{body}```"


def _entry(response: str, match: str | None = None) -> dict:
    return {"match": match, "response": response}


def _broken(marker: str) -> str:
    return f'raise RuntimeError("deliberate bug {marker}")\n'


def _happy_rw() -> list[dict]:
    script = provided_rw_payload().source
    return [
        _entry("Running the full scaling study.\n" + _fence(script)),
        _entry(CONFIRMED, match="compliance"),
        _entry("All required outputs exist and the exponent is in the "
               f"expected range.\n{COMPLETE}"),
    ]


def _broken_then_fixed() -> list[dict]:
    return [
        _entry("First attempt.\n" + _fence(_broken("v0"))),
        _entry(CONFIRMED),
        _entry("Fixed the crash.\n" + _fence(provided_rw_payload().source)),
        _entry(f"The study succeeded on the second attempt.\n{COMPLETE}"),
    ]


def _infinite_bug(max_debug_attempts: int = 6) -> list[dict]:
    entries = [
        _entry("Attempting the study.\n" + _fence(_broken("v0"))),
        _entry(CONFIRMED),
    ]
    for k in range(1, max_debug_attempts):
        entries.append(_entry(f"Trying fix {k}.\n" + _fence(_broken(f"v{k}"))))
    return entries


_SUB_TASK = '''\
with open("output.txt", "w") as fh:
    fh.write("sub-task output\\n")
print("wrote output.txt")
'''


def _main_sub() -> list[dict]:
    """One corpus replayed by the Main dialogue and by each subordinate.

    Turn 1 carries both the delegated plans (read by Main) and a program
    (read by subordinates); turn 2 is a plain confirmation for both; turn 3
    completes both.
    """
    rp_a = ("Sub-task A: write output.txt containing the text 'sub-task "
            "output' in your own directory, then finish.")
    rp_b = ("Sub-task B: write output.txt containing the text 'sub-task "
            "output' in your own directory, then finish.")
    turn1 = (
        "Splitting the mission into two delegated plans.\n"
        "<<<prompt\n" + rp_a + "\nend >>>\n"
        "<<<prompt\n" + rp_b + "\nend >>>\n"
        "Reference implementation for the sub-task:\n" + _fence(_SUB_TASK)
    )
    return [
        _entry(turn1),
        _entry("Confirmed: the program is correct and compliant."),
        _entry(f"Every part of the mission is finished.\n{COMPLETE}"),
    ]


def _nested(trials: int = 3) -> list[dict]:
    """A payload that re-invokes the harness CLI once per nested trial."""
    inner = _happy_rw()
    inner_jsonl = "".join(json.dumps(e) + "\n" for e in inner)
    payload = f'''\
import json
import subprocess
import sys

with open("nested_plan.txt", "w") as fh:
    fh.write("Run the random walk scaling study and report the exponent.\\n")
with open("nested_corpus.jsonl", "w") as fh:
    fh.write({inner_jsonl!r})
with open("nested.cfg", "w") as fh:
    fh.write("provider=scripted\\ncorpus=nested_corpus.jsonl\\n")

statuses = {{}}
for i in range({trials}):
    proc = subprocess.run(
        [sys.executable, "-m", "asa", "run", "-s", "nested_plan.txt",
         "-n", str(i), "--config", "nested.cfg"],
        capture_output=True, text=True,
    )
    lines = proc.stdout.strip().splitlines()
    statuses["trial_" + str(i)] = {{
        "exit_code": proc.returncode,
        "final_line": lines[-1] if lines else "",
    }}

with open("summary.json", "w") as fh:
    json.dump({{"trials": {trials}, "statuses": statuses}}, fh, indent=2)
print("nested runs finished")
'''
    return [
        _entry("Running the nested study.\n" + _fence(payload)),
        _entry(CONFIRMED),
        _entry(f"All nested trials are organized and summarized.\n{COMPLETE}"),
    ]


_BUILDERS = {
    "happy_rw": _happy_rw,
    "broken_then_fixed": _broken_then_fixed,
    "infinite_bug": _infinite_bug,
    "main_sub": _main_sub,
    "nested": _nested,
}


def corpus_bundle(scenario: str, out_path: str | Path) -> Path:
    """Write the scenario's corpus file and return its path."""
    try:
        builder = _BUILDERS[scenario]
    except KeyError:
        raise UnknownScenario(scenario) from None
    out_path = Path(out_path)
    with open(out_path, "w", encoding="utf-8") as fh:
        for entry in builder():
            fh.write(json.dumps(entry) + "\n")
    return out_path
