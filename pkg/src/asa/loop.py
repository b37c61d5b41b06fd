"""The mission state machine.

One mission is a strictly sequential dialogue: send the research plan, pull
assistant turns, extract and execute payload programs, feed results and
errors back, and stop on a sentinel, the debug-attempt budget, or the turn
budget. Multi-tier coordination (Main/Subordinate) and nested self-invocation
build on the same loop.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path

from .mission import (
    DialogueHistory,
    Limits,
    Message,
    MissionStatus,
    ResearchPlan,
    persist_transcript,
    system_message,
    user_message,
)
from .parsing import (
    SENTINEL_COMPLETE,
    SENTINEL_FAILED,
    UnbalancedDelimiters,
    detect_sentinel,
    extract_ai_rps,
    extract_code_blocks,
    fence,
)
from .providers import Provider
from .remote import RemoteTarget
from .sandbox import Sandbox, WorkspaceUnwritable


class ProviderFailed(Exception):
    pass


class TurnLimit(Exception):
    pass


SYSTEM_PREAMBLE = """You are an autonomous simulation research agent. \
Carry out the research plan below step by step, without human help.
Rules:
- Reply with at most one fenced ```{tag} code block per message; it will be \
executed in the working directory and the results returned to you.
- Name every output file; write all files into the working directory.
- When every requirement of the plan is fulfilled, end your reply with the \
single line: {complete}
- If the plan cannot be fulfilled, end your reply with the single line: {failed}
"""

SUBORDINATE_PREAMBLE = """You are a subordinate agent assigned one delegated \
sub-task. Complete only that sub-task, working in your own directory.
Rules:
- Reply with at most one fenced ```{tag} code block per message; it will be \
executed and the results returned to you.
- When the sub-task is done, end your reply with the single line: {complete}
- If the sub-task cannot be done, end your reply with the single line: {failed}
"""

MAIN_PREAMBLE = """You are the Main coordinating agent. Break the research \
plan below into sub-tasks, but do not execute any code yourself.
Rules:
- Emit each sub-task as a standalone research plan for a subordinate agent, \
between a line "< < < prompt" and a line "end > > >". Each must be \
self-contained: subordinates see nothing but the text you put inside.
- After each batch of sub-task plans you will receive the subordinates' \
reports.
- When the whole plan is fulfilled, end your reply with the single line: \
{complete}
- If the plan cannot be fulfilled, end your reply with the single line: {failed}
"""

PROGRESS_CHECK = (
    "No program was found in your reply. Check the dialogues and the files in "
    "the working directory to determine the task progress, then continue the "
    "mission."
)

ERROR_PREFIX = "The program failed."

NUDGE = (
    "You resubmitted the same program that already failed. Do not repeat it; "
    "take a different approach."
)


def _preamble(template: str, tag: str) -> str:
    return template.format(
        tag=tag, complete=SENTINEL_COMPLETE, failed=SENTINEL_FAILED
    )


def compliance_request(source: str, tag: str) -> str:
    return (
        "Before execution, check the following program for errors and for "
        "compliance with the mission requirements. Reply with a corrected "
        "program if changes are needed, otherwise confirm it is ready.\n"
        + fence(source, tag)
    )


def error_report(outcome) -> str:
    return (
        f"{ERROR_PREFIX} Exit code {outcome.exit_code}"
        f"{' (timed out)' if outcome.timed_out else ''}.\n"
        f"stdout:\n{outcome.stdout}\n"
        f"stderr:\n{outcome.stderr}\n"
        "Fix the program and resend it in full."
    )


def success_report(outcome) -> str:
    files = ", ".join(outcome.files_created) or "none"
    return (
        f"The program ran successfully.\nstdout:\n{outcome.stdout}\n"
        f"Files created: {files}\n"
        "Check the dialogues and the files in the working directory to "
        "determine the task progress, then continue the mission."
    )


def digest(source: str) -> str:
    return hashlib.sha256(source.encode("utf-8")).hexdigest()


@dataclass
class DebugState:
    attempts: int = 0
    last_source_digests: list[str] = field(default_factory=list)


def detect_error_loop(state: DebugState, new_source: str) -> bool:
    """True iff the new source is byte-identical (by digest) to the
    immediately preceding failed source."""
    if not state.last_source_digests:
        return False
    return digest(new_source) == state.last_source_digests[-1]


def trim_memory(history: DialogueHistory, threshold: int) -> DialogueHistory:
    """Drop the oldest debug exchanges beyond `threshold`.

    A debug exchange is a failed assistant program immediately followed by
    the error report the loop appended. The research plan message, the
    latest program, and the latest error always survive; non-debug messages
    are untouched.
    """
    messages = list(history.messages)
    pairs = [
        i
        for i in range(len(messages) - 1)
        if messages[i].role == "assistant"
        and messages[i + 1].role == "user"
        and messages[i + 1].content.startswith(ERROR_PREFIX)
    ]
    excess = len(pairs) - threshold
    if excess <= 0:
        return DialogueHistory(messages)
    drop = {j for i in pairs[:excess] for j in (i, i + 1)}
    return DialogueHistory([m for j, m in enumerate(messages) if j not in drop])


@dataclass(frozen=True)
class MissionReport:
    status: MissionStatus
    turns: int
    programs_written: int
    programs_failed: int
    artifacts: tuple[str, ...]
    transcript_path: Path

    def final_line(self) -> str:
        return "mission complete" if self.status.state == "complete" else "mission failed"


def write_report(report: MissionReport, path: str | Path) -> None:
    Path(path).write_text(
        json.dumps(
            {
                "status": report.status.state,
                "reason": report.status.reason,
                "turns": report.turns,
                "programs_written": report.programs_written,
                "programs_failed": report.programs_failed,
                "artifacts": list(report.artifacts),
                "transcript": str(report.transcript_path),
            },
            indent=2,
        )
        + "\n",
        encoding="utf-8",
    )


class _Mission:
    """Bookkeeping shared by the mission variants."""

    def __init__(self, rp: ResearchPlan, provider: Provider, sandbox: Sandbox):
        self.rp = rp
        self.provider = provider
        self.sandbox = sandbox
        self.limits: Limits = rp.limits
        self.history = DialogueHistory()
        self.turns = 0
        self.programs_written = 0
        self.programs_failed = 0
        self.artifacts: list[str] = []
        self.status = MissionStatus.running()

    def next_assistant(self) -> Message:
        if self.turns >= self.limits.max_turns:
            raise TurnLimit()
        try:
            msg = self.provider.complete(self.history)
        except Exception as exc:
            raise ProviderFailed(str(exc)) from exc
        self.history.append(msg)
        self.turns += 1
        return msg

    def finish(self, state: str, reason: str = "") -> MissionReport:
        self.status = self.status.advanced(
            state=state, reason=reason, turns_used=self.turns
        )
        transcript = self.rp.workspace / "transcript.jsonl"
        persist_transcript(self.history, transcript)
        report = MissionReport(
            status=self.status,
            turns=self.turns,
            programs_written=self.programs_written,
            programs_failed=self.programs_failed,
            artifacts=tuple(sorted(set(self.artifacts))),
            transcript_path=transcript,
        )
        write_report(report, self.rp.workspace / "mission_report.json")
        return report


def _prepare_workspace(rp: ResearchPlan) -> None:
    try:
        rp.workspace.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise WorkspaceUnwritable(str(rp.workspace)) from exc


def run_mission(
    rp: ResearchPlan,
    provider: Provider,
    sandbox: Sandbox | None = None,
    remote: RemoteTarget | None = None,
    preamble: str | None = None,
) -> MissionReport:
    """Run the full dialogue/extract/execute/debug cycle for one plan."""
    _prepare_workspace(rp)
    tag = rp.payload_language_tag
    if sandbox is None:
        sandbox = Sandbox(
            rp.workspace,
            timeout=rp.limits.exec_timeout,
            trial_index=rp.trial_index,
        )
    if remote is not None:
        # payloads learn where the remote host is; the secret stays in env
        sandbox.extra_env.update(
            {
                "ASA_REMOTE_HOST": remote.host,
                "ASA_REMOTE_PORT": str(remote.port),
                "ASA_REMOTE_USER": remote.username,
                "ASA_REMOTE_DIR": remote.remote_dir,
            }
        )
    m = _Mission(rp, provider, sandbox)
    m.history.append(system_message(preamble or _preamble(SYSTEM_PREAMBLE, tag)))
    m.history.append(user_message(rp.text))

    try:
        while True:
            msg = m.next_assistant()
            sentinel = detect_sentinel(msg.content)
            if sentinel == "complete":
                return m.finish("complete")
            if sentinel == "failed":
                return m.finish("failed", "mission failed")

            blocks = extract_code_blocks(msg.content, tag)
            if not blocks:
                m.history.append(user_message(PROGRESS_CHECK))
                continue
            source = blocks[0].source

            # pre-execution error-check / compliance confirmation turn
            m.history.append(user_message(compliance_request(source, tag)))
            reply = m.next_assistant()
            sentinel = detect_sentinel(reply.content)
            if sentinel == "complete":
                return m.finish("complete")
            if sentinel == "failed":
                return m.finish("failed", "mission failed")
            reply_blocks = extract_code_blocks(reply.content, tag)
            if reply_blocks:
                source = reply_blocks[0].source

            result = _debug_cycle(m, source, tag)
            if result is not None:
                return result
    except TurnLimit:
        return m.finish("failed", "turn limit")
    except ProviderFailed as exc:
        return m.finish("failed", f"provider: {exc}")


def _debug_cycle(m: _Mission, source: str, tag: str) -> MissionReport | None:
    """Execute one turn's program, debugging up to max_debug_attempts.

    Returns a terminal report on failure/sentinel, or None to continue the
    outer loop after a successful execution.
    """
    debug = DebugState()
    consecutive_repeats = 0
    turn_no = m.turns
    while True:
        outcome = m.sandbox.run(source, turn_no, debug.attempts)
        m.programs_written += 1
        m.artifacts.extend(outcome.files_created)
        if outcome.exit_ok:
            m.history.append(user_message(success_report(outcome)))
            return None
        m.programs_failed += 1
        debug.attempts += 1
        debug.last_source_digests.append(digest(source))
        if debug.attempts >= m.limits.max_debug_attempts:
            return m.finish("failed", "mission failed")
        m.history.append(user_message(error_report(outcome)))
        # pull fixes until one is executable (new code, not a repeat)
        while True:
            fix = m.next_assistant()
            sentinel = detect_sentinel(fix.content)
            if sentinel == "complete":
                return m.finish("complete")
            if sentinel == "failed":
                return m.finish("failed", "mission failed")
            fix_blocks = extract_code_blocks(fix.content, tag)
            if not fix_blocks:
                m.history.append(user_message(PROGRESS_CHECK))
                continue
            new_source = fix_blocks[0].source
            if detect_error_loop(debug, new_source):
                consecutive_repeats += 1
                if consecutive_repeats >= 2:
                    return m.finish("failed", "error loop")
                m.history = trim_memory(
                    m.history, m.limits.memory_trim_threshold
                )
                m.history.append(user_message(NUDGE))
                continue
            consecutive_repeats = 0
            source = new_source
            break


@dataclass(frozen=True)
class SubordinateResult:
    index: int
    report: MissionReport
    rp_body: str


def run_main_sub(
    rp: ResearchPlan,
    provider_factory,
    sandbox_factory=None,
) -> tuple[MissionReport, list[SubordinateResult]]:
    """Two-tier coordination: a Main dialogue emits AI research plans, each
    executed by a fresh subordinate mission with an isolated history.

    provider_factory() must return a fresh provider per dialogue (Main first,
    then one per subordinate); sandbox_factory(workspace, trial_index)
    likewise, defaulting to the local Sandbox.
    """
    _prepare_workspace(rp)
    tag = rp.payload_language_tag
    if sandbox_factory is None:
        def sandbox_factory(workspace, trial_index):
            return Sandbox(workspace, timeout=rp.limits.exec_timeout,
                           trial_index=trial_index)

    main = _Mission(rp, provider_factory(), sandbox_factory(rp.workspace, rp.trial_index))
    main.history.append(system_message(_preamble(MAIN_PREAMBLE, tag)))
    main.history.append(user_message(rp.text))
    subordinates: list[SubordinateResult] = []

    try:
        while True:
            msg = main.next_assistant()
            sentinel = detect_sentinel(msg.content)
            if sentinel == "complete":
                return main.finish("complete"), subordinates
            if sentinel == "failed":
                return main.finish("failed", "mission failed"), subordinates
            try:
                ai_rps = extract_ai_rps(msg.content)
            except UnbalancedDelimiters:
                main.history.append(
                    user_message(
                        "A sub-task plan opener had no matching closer. Resend "
                        "each plan between '< < < prompt' and 'end > > >' lines."
                    )
                )
                continue
            if not ai_rps:
                main.history.append(
                    user_message(
                        "No sub-task plan was found in your reply. Check the "
                        "dialogues and files in the working directory, then "
                        "continue the mission."
                    )
                )
                continue
            report_lines = []
            for ai_rp in ai_rps:
                index = len(subordinates)
                sub_ws = rp.workspace / f"sub_{index}"
                sub_rp = ResearchPlan(
                    id=f"{rp.id}-sub{index}",
                    text=ai_rp.body,
                    workspace=sub_ws,
                    payload_language_tag=tag,
                    limits=rp.limits,
                    trial_index=rp.trial_index,
                )
                sub_report = run_mission(
                    sub_rp,
                    provider_factory(),
                    sandbox_factory(sub_ws, rp.trial_index),
                    preamble=_preamble(SUBORDINATE_PREAMBLE, tag),
                )
                subordinates.append(SubordinateResult(index, sub_report, ai_rp.body))
                report_lines.append(
                    f"Subordinate {index} finished with status "
                    f"{sub_report.status.state}"
                    + (f" ({sub_report.status.reason})"
                       if sub_report.status.reason else "")
                    + f"; programs run: {sub_report.programs_written}, "
                    f"files: {', '.join(sub_report.artifacts) or 'none'}."
                )
            main.history.append(user_message("\n".join(report_lines)))
    except TurnLimit:
        return main.finish("failed", "turn limit"), subordinates
    except ProviderFailed as exc:
        return main.finish("failed", f"provider: {exc}"), subordinates


def run_nested(
    rp: ResearchPlan,
    provider: Provider,
    sandbox: Sandbox | None = None,
) -> MissionReport:
    """Nested automation: identical to run_mission, relying on the harness CLI
    being invocable from payload programs ("run -s <rp file> -n i"); every such
    invocation is an independent mission in its own trial_<i> workspace under
    the primary's workspace."""
    return run_mission(rp, provider, sandbox)
