import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from semtag import prompts
from semtag.errors import AllRunsFailedError, EmptyPromptError, NoCandidatesError
from semtag.pipeline import (
    EnsembleRunner, MetricSet, RunRecord, Task, build_prompt, score, select_best,
)
from semtag.prompts import TaskKind
from semtag.providers import MockBackend, Usage


def record(model="m", run=1, cpr=1.0, twf=None, tags=None, cost=0.0, task=TaskKind.TAG, failure=None):
    metrics = None if failure else MetricSet(cpr=cpr, twf=twf, n_tags=tags)
    return RunRecord(doc_id="d", task=task, model=model, run_index=run, temperature=1.0,
                     max_tokens=8000, cost=cost, metrics=metrics, failure=failure)


class TestPrompts:
    def test_clean_prompt_layout(self):
        prompt = build_prompt(Task.clean(), "body text")
        assert prompt == prompts.CLEAN_INSTRUCTION + "\n\nbody text"

    def test_tag_prompt_lists_vocabulary(self):
        template = Task.tag().prompt_template
        assert template.endswith("\n\n<location> <entity> <event> <organization> <date>")

    def test_empty_body(self):
        with pytest.raises(EmptyPromptError):
            build_prompt(Task.clean(), "")

    def test_split_recovers_body(self):
        body = "first\n\nsecond paragraph"
        assert prompts.split(build_prompt(Task.tag(), body)) == (TaskKind.TAG, body)
        assert prompts.split(build_prompt(Task.clean(), body)) == (TaskKind.CLEAN, body)


class TestScore:
    def test_clean_identity(self):
        metrics = score(Task.clean(), "Taking note", "Taking note")
        assert metrics == MetricSet(cpr=1.0)

    def test_tagging_ignores_markup(self):
        metrics = score(Task.tag(), "The situation in Iran",
                        "The situation in <location>Iran</location>")
        assert metrics == MetricSet(cpr=1.0, twf=1.0, n_tags=1)

    def test_untagged_output(self):
        metrics = score(Task.tag(), "plain", "plain")
        assert (metrics.twf, metrics.n_tags, metrics.cpr) == (1.0, 0, 1.0)

    def test_malformed_tagging(self):
        metrics = score(Task.tag(), "ab", "<entity><date>ab</entity></date>")
        assert metrics.twf == pytest.approx(1 / 3)
        assert metrics.cpr == 1.0


class TestSelection:
    def test_preservation_beats_cost(self):
        records = [
            record("gpt-4.1-mini", cpr=0.9992, twf=0.9964, tags=80, cost=0.0033),
            record("gpt-4.1", cpr=0.9999, twf=0.9992, tags=92, cost=0.017),
        ]
        assert select_best(records, Task.tag()) == 1

    def test_preservation_outranks_tag_count(self):
        records = [
            record("gpt-5.1", cpr=0.9995, twf=0.9991, tags=93),
            record("gpt-4.1", cpr=0.9999, twf=0.9992, tags=92),
        ]
        assert select_best(records, Task.tag()) == 1

    def test_twf_then_tag_count(self):
        records = [
            record("a", cpr=0.99, twf=0.9, tags=50),
            record("b", cpr=0.99, twf=1.0, tags=10),
            record("c", cpr=0.99, twf=1.0, tags=12),
        ]
        assert select_best(records, Task.tag()) == 2

    def test_cost_then_name_then_run(self):
        assert select_best([record("a", cost=2.0), record("b", cost=1.0)], Task.tag()) == 1
        assert select_best([record("b"), record("a")], Task.tag()) == 1
        assert select_best([record("a", run=2), record("a", run=1)], Task.tag()) == 1

    def test_cleaning_ignores_tag_metrics(self):
        records = [
            record("a", cpr=0.95, twf=1.0, tags=99, task=TaskKind.CLEAN),
            record("b", cpr=0.96, task=TaskKind.CLEAN),
        ]
        assert select_best(records, Task.clean()) == 1

    def test_malformed_winner_still_selected(self):
        records = [
            record("a", cpr=0.999, twf=0.5, tags=3),
            record("b", cpr=0.990, twf=1.0, tags=3),
        ]
        assert select_best(records, Task.tag()) == 0

    def test_failed_records_excluded(self):
        records = [record("a", failure="TransportError: x"), record("b", cpr=0.1)]
        assert select_best(records, Task.tag()) == 1

    @settings(max_examples=300)
    @given(st.lists(
        st.tuples(
            st.sampled_from(["gpt-4.1", "gpt-5.1", "o3"]),
            st.integers(min_value=1, max_value=3),
            st.sampled_from([0.9, 0.99, 1.0]),
            st.sampled_from([0.5, 1.0]),
            st.integers(min_value=0, max_value=3),
            st.sampled_from([0.0, 0.01]),
        ),
        min_size=1, max_size=8, unique_by=lambda row: (row[0], row[1]),
    ), st.randoms())
    def test_winner_independent_of_record_order(self, rows, rng):
        records = [record(m, run=r, cpr=c, twf=w, tags=t, cost=k) for m, r, c, w, t, k in rows]
        shuffled = list(records)
        rng.shuffle(shuffled)
        winner = records[select_best(records, Task.tag())]
        assert shuffled[select_best(shuffled, Task.tag())] is winner

    def test_no_candidates(self):
        with pytest.raises(NoCandidatesError):
            select_best([record("a", failure="RefusalError: no")], Task.tag())


class TestEnsembleRunner:
    async def test_full_roster(self, document, roster):
        records = await EnsembleRunner(MockBackend()).run_task(document, Task.clean(), roster)

        assert len(records) == 14
        assert [(r.model, r.run_index) for r in records] == [
            (spec.name, run) for spec in roster for run in (1, 2)
        ]
        assert sum(r.selected for r in records) == 1
        assert all(r.metrics.cpr == 1.0 for r in records)

    async def test_identity_tie_goes_to_cheapest(self, document, roster):
        records = await EnsembleRunner(MockBackend()).run_task(document, Task.clean(), roster)
        winner = next(r for r in records if r.selected)
        assert winner.model == "gpt-5-nano"
        assert winner.run_index == 1

    async def test_parallelism_does_not_change_results(self, document, roster, tagging_backend):
        task = Task.tag()
        serial = await EnsembleRunner(tagging_backend, parallelism=1).run_task(document, task, roster)
        wide = await EnsembleRunner(tagging_backend, parallelism=8).run_task(document, task, roster)
        assert serial == wide

    async def test_completion_order_does_not_matter(self, document, roster, flaky_backend):
        delays = {spec.name: 0.001 * (len(roster) - i) for i, spec in enumerate(roster)}
        slow_first = await EnsembleRunner(flaky_backend(delay_by_model=delays)).run_task(
            document, Task.clean(), roster)
        plain = await EnsembleRunner(flaky_backend()).run_task(document, Task.clean(), roster)
        assert slow_first == plain

    async def test_partial_failure(self, document, roster, flaky_backend):
        backend = flaky_backend(failing={"gpt-5-nano", "gpt-4.1"})
        records = await EnsembleRunner(backend).run_task(document, Task.clean(), roster)

        failed = [r for r in records if r.failed]
        assert len(failed) == 4
        assert all(r.failure.startswith("TransportError") for r in failed)
        assert all(r.metrics is None for r in failed)
        winner = next(r for r in records if r.selected)
        assert winner.model == "gpt-4.1-nano"

    async def test_all_runs_failed(self, document, roster, flaky_backend):
        backend = flaky_backend(failing={spec.name for spec in roster})
        with pytest.raises(AllRunsFailedError) as excinfo:
            await EnsembleRunner(backend).run_task(document, Task.clean(), roster)
        assert len(excinfo.value.records) == 14
        assert not any(r.selected for r in excinfo.value.records)

    async def test_truncated_output_is_scored(self, document, roster):
        runner = EnsembleRunner(MockBackend(), max_tokens=10)
        records = await runner.run_task(document, Task.clean(), roster[:1], runs_per_model=1)
        assert records[0].truncated
        assert records[0].metrics.cpr < 1.0
        assert records[0].selected

    async def test_costs_follow_pricing(self, document, roster):
        records = await EnsembleRunner(MockBackend()).run_task(document, Task.clean(), roster)
        by_model = {r.model: r.cost for r in records if r.run_index == 1}
        assert by_model["gpt-4o"] > by_model["gpt-4.1"] > by_model["gpt-4.1-nano"]
        assert records[0].usage != Usage()
