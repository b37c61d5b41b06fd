import json

import httpx

from asa.loop import (
    ERROR_PREFIX,
    NUDGE,
    DebugState,
    detect_error_loop,
    digest,
    run_main_sub,
    run_mission,
    run_nested,
    trim_memory,
)
from asa.mission import (
    DialogueHistory,
    Limits,
    ResearchPlan,
    assistant_message,
    load_transcript,
    system_message,
    user_message,
)
from asa.providers import LiveProvider, ProviderConfig, ScriptedProvider
from corpora import (
    error_loop_corpus,
    happy_corpus,
    infinite_bug_corpus,
    instant_complete_corpus,
    main_sub_corpora,
    nested_corpus,
)


def make_rp(tmp_path, text="Run the random walk study and report.", **limit_kw):
    limits = Limits(**limit_kw) if limit_kw else Limits()
    return ResearchPlan(
        id="rp1",
        text=text,
        workspace=tmp_path / "trial_0",
        limits=limits,
    )


class TestRunMission:
    def test_happy_path(self, tmp_path):
        rp = make_rp(tmp_path)
        report = run_mission(rp, ScriptedProvider(happy_corpus()))
        assert report.status.state == "complete"
        assert report.programs_written == 1
        assert report.programs_failed == 0
        assert report.final_line() == "mission complete"
        for name in ("data.csv", "conformation.svg", "fit.svg", "report.md",
                     "transcript.jsonl", "mission_report.json"):
            assert (rp.workspace / name).exists()

    def test_instant_sentinel(self, tmp_path):
        rp = make_rp(tmp_path)
        report = run_mission(rp, ScriptedProvider(instant_complete_corpus()))
        assert report.status.state == "complete"
        assert report.programs_written == 0

    def test_infinite_bug_hits_debug_budget(self, tmp_path):
        rp = make_rp(tmp_path, max_debug_attempts=3)
        report = run_mission(rp, ScriptedProvider(infinite_bug_corpus(3)))
        assert report.status.state == "failed"
        assert report.status.reason == "mission failed"
        assert report.programs_written == 3  # exactly max_debug_attempts executions
        assert report.programs_failed == 3
        progs = list(rp.workspace.glob("prog_*.py"))
        assert len(progs) == 3

    def test_error_loop_fails_fast_after_second_repeat(self, tmp_path):
        rp = make_rp(tmp_path, max_debug_attempts=6)
        report = run_mission(rp, ScriptedProvider(error_loop_corpus()))
        assert report.status.state == "failed"
        assert report.status.reason == "error loop"
        # only the two distinct programs ever executed; repeats were refused
        assert report.programs_written == 2
        transcript = load_transcript(rp.workspace / "transcript.jsonl")
        contents = [m.content for m in transcript]
        assert NUDGE in contents

    def test_turn_limit_bounds_liveness(self, tmp_path):
        rp = make_rp(tmp_path, max_turns=4)
        # corpus of endless prose: no code, no sentinel
        from asa.providers import CorpusEntry, ScriptedCorpus

        chatter = ScriptedCorpus([CorpusEntry(f"thinking {i}") for i in range(10)])
        report = run_mission(rp, ScriptedProvider(chatter))
        assert report.status.state == "failed"
        assert report.status.reason == "turn limit"
        assert report.turns == 4

    def test_provider_error_becomes_failure(self, tmp_path):
        rp = make_rp(tmp_path)
        from asa.providers import ScriptedCorpus

        report = run_mission(rp, ScriptedProvider(ScriptedCorpus([])))
        assert report.status.state == "failed"
        assert report.status.reason.startswith("provider")

    def test_counter_consistency(self, tmp_path):
        rp = make_rp(tmp_path, max_debug_attempts=3)
        report = run_mission(rp, ScriptedProvider(infinite_bug_corpus(3)))
        assert report.programs_failed <= report.programs_written

    def test_transcript_persisted_and_reloadable(self, tmp_path):
        rp = make_rp(tmp_path)
        report = run_mission(rp, ScriptedProvider(happy_corpus()))
        transcript = load_transcript(report.transcript_path)
        assert transcript.messages[0].role == "system"
        assert transcript.messages[1].content == rp.text

    def test_provider_transparency(self, tmp_path):
        """Identical response texts through the scripted and live providers
        produce identical missions."""
        rp_a = make_rp(tmp_path / "a")
        scripted_report = run_mission(rp_a, ScriptedProvider(happy_corpus()))
        responses = iter([e.response for e in happy_corpus().entries])

        def handler(request):
            return httpx.Response(
                200,
                json={"choices": [{"message": {"role": "assistant",
                                               "content": next(responses)}}]},
            )

        live = LiveProvider(
            ProviderConfig(base_url="https://api.example.test/v1",
                           model_name="m", backoff_base=0.0),
            transport=httpx.MockTransport(handler),
        )
        rp_b = make_rp(tmp_path / "b")
        live_report = run_mission(rp_b, live)
        assert live_report.status.state == scripted_report.status.state
        assert live_report.programs_written == scripted_report.programs_written
        ta = load_transcript(scripted_report.transcript_path)
        tb = load_transcript(live_report.transcript_path)
        assert [(m.role, m.content) for m in ta] == [(m.role, m.content) for m in tb]


class TestDetectErrorLoop:
    def test_identical_resubmission(self):
        state = DebugState(attempts=1, last_source_digests=[digest("bad code")])
        assert detect_error_loop(state, "bad code")

    def test_whitespace_change_is_new_code(self):
        state = DebugState(attempts=1, last_source_digests=[digest("bad code")])
        assert not detect_error_loop(state, "bad  code")

    def test_first_submission(self):
        assert not detect_error_loop(DebugState(), "anything")

    def test_only_immediately_preceding_counts(self):
        state = DebugState(
            attempts=2, last_source_digests=[digest("v1"), digest("v2")]
        )
        assert not detect_error_loop(state, "v1")
        assert detect_error_loop(state, "v2")


def debug_history(n_exchanges):
    history = DialogueHistory([
        system_message("rules"),
        user_message("the plan"),
    ])
    for i in range(n_exchanges):
        history.append(assistant_message(f"```python\nprog {i}\n```"))
        history.append(user_message(f"{ERROR_PREFIX} err {i}"))
    return history


class TestTrimMemory:
    def test_drops_oldest_beyond_threshold(self):
        trimmed = trim_memory(debug_history(5), 3)
        contents = [m.content for m in trimmed]
        assert len(trimmed) == 2 + 2 * 3
        assert "the plan" in contents  # RP retained
        assert f"{ERROR_PREFIX} err 4" in contents  # latest error retained
        assert "```python\nprog 4\n```" in contents  # latest program retained
        assert f"{ERROR_PREFIX} err 0" not in contents
        assert f"{ERROR_PREFIX} err 1" not in contents

    def test_no_debug_exchanges_is_identity(self):
        history = DialogueHistory([
            system_message("rules"),
            user_message("plan"),
            assistant_message("just prose"),
        ])
        assert trim_memory(history, 3) == history

    def test_exactly_threshold_unchanged(self):
        history = debug_history(3)
        assert trim_memory(history, 3) == history

    def test_non_debug_messages_untouched(self):
        history = debug_history(5)
        history.append(assistant_message("progress note"))
        trimmed = trim_memory(history, 2)
        assert trimmed.messages[-1].content == "progress note"


class TestMainSub:
    def test_two_subordinates_complete(self, tmp_path):
        rp = make_rp(tmp_path, text="Create part_a.txt and part_b.txt via sub-tasks.")
        main_corpus, sub_corpora = main_sub_corpora()
        providers = [ScriptedProvider(main_corpus)] + [
            ScriptedProvider(c) for c in sub_corpora
        ]
        it = iter(providers)
        report, subs = run_main_sub(rp, provider_factory=lambda: next(it))
        assert report.status.state == "complete"
        assert len(subs) == 2
        assert all(s.report.status.state == "complete" for s in subs)
        assert (rp.workspace / "sub_0" / "part_a.txt").read_text() == "alpha\n"
        assert (rp.workspace / "sub_1" / "part_b.txt").read_text() == "beta\n"
        main_transcript = load_transcript(rp.workspace / "transcript.jsonl")
        joined = "\n".join(m.content for m in main_transcript)
        assert "Subordinate 0 finished with status complete" in joined
        assert "Subordinate 1 finished with status complete" in joined

    def test_subordinate_isolation(self, tmp_path):
        rp = make_rp(tmp_path, text="Coordinate the two sub-tasks.")
        main_corpus, sub_corpora = main_sub_corpora()
        providers = [ScriptedProvider(main_corpus)] + [
            ScriptedProvider(c) for c in sub_corpora
        ]
        it = iter(providers)
        report, subs = run_main_sub(rp, provider_factory=lambda: next(it))
        main_transcript = load_transcript(rp.workspace / "transcript.jsonl")
        for k, sub in enumerate(subs):
            sub_transcript = load_transcript(
                rp.workspace / f"sub_{k}" / "transcript.jsonl"
            )
            inputs = [m for m in sub_transcript if m.role != "assistant"]
            for main_msg in main_transcript:
                for sub_msg in inputs:
                    if sub_msg.content == sub.rp_body:
                        continue  # the AI-RP itself is the one allowed carryover
                    assert main_msg.content not in sub_msg.content

    def test_failed_subordinate_relayed(self, tmp_path):
        from asa.providers import CorpusEntry, ScriptedCorpus

        rp = make_rp(tmp_path, text="Coordinate one failing sub-task.")
        main_corpus = ScriptedCorpus([
            CorpusEntry("<<<prompt\nConnect to the remote server.\nend >>>"),
            CorpusEntry("Understood, the sub-task failed.\nMISSION COMPLETE",
                        match="failed"),
        ])
        # the sub gives up immediately (e.g. missing credentials)
        sub_corpus = ScriptedCorpus([
            CorpusEntry("No username or password was provided.\nMISSION FAILED"),
        ])
        providers = iter([ScriptedProvider(main_corpus), ScriptedProvider(sub_corpus)])
        report, subs = run_main_sub(rp, provider_factory=lambda: next(providers))
        assert report.status.state == "complete"
        assert subs[0].report.status.state == "failed"
        main_transcript = load_transcript(rp.workspace / "transcript.jsonl")
        joined = "\n".join(m.content for m in main_transcript)
        assert "Subordinate 0 finished with status failed" in joined

    def test_zero_ai_rps_then_sentinel(self, tmp_path):
        from asa.providers import CorpusEntry, ScriptedCorpus

        rp = make_rp(tmp_path)
        main_corpus = ScriptedCorpus([
            CorpusEntry("Nothing to delegate.\nMISSION COMPLETE"),
        ])
        providers = iter([ScriptedProvider(main_corpus)])
        report, subs = run_main_sub(rp, provider_factory=lambda: next(providers))
        assert report.status.state == "complete"
        assert subs == []


class TestNested:
    def test_three_nested_trials(self, tmp_path):
        rp = make_rp(tmp_path, text="Execute the plan p1.txt three times and "
                                    "organize the results.")
        report = run_nested(rp, ScriptedProvider(nested_corpus(trials=3)))
        assert report.status.state == "complete"
        summary = json.loads((rp.workspace / "summary.json").read_text())
        assert summary["trials"] == 3
        for i in range(3):
            trial_dir = rp.workspace / f"trial_{i}"
            assert (trial_dir / "hello.txt").read_text() == "hello\n"
            assert (trial_dir / "mission_report.json").exists()
            assert summary["statuses"][f"trial_{i}"]["exit_code"] == 0
            assert summary["statuses"][f"trial_{i}"]["final_line"] == "mission complete"
            # containment: every nested workspace lives under the primary's
            assert trial_dir.resolve().is_relative_to(rp.workspace.resolve())
