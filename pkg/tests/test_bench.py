import json

import pytest

from hmrag.bench import (
    BenchmarkReport,
    ConfigCell,
    Variant,
    build_variant_indexes,
    decomposition_labels,
    load_queries,
    run_benchmark,
    scaling_probe,
    write_report,
)
from hmrag.config import EngineConfig
from hmrag.metrics import load_judgments
from hmrag.retrieval import ResultItem
from hmrag.synth import SynthSpec, generate


@pytest.fixture(scope="module")
def bench_setup(tmp_path_factory):
    tmp = tmp_path_factory.mktemp("bench")
    paths = generate(
        SynthSpec(seed=0, docs=4, pages_per_doc=2, image_density=1.0, n_queries=8),
        tmp / "corpus",
    )
    variants = build_variant_indexes(paths["manifest"], tmp / "work", EngineConfig(seed=0))
    return tmp, paths, variants


def test_decomposition_labels():
    items = [
        ResultItem(node_id="n1", score=1.0, level=0, modality_tags=["text"],
                   snippet="alpha beta gamma delta epsilon"),
        ResultItem(node_id="n2", score=0.5, level=0, modality_tags=["text"],
                   snippet="one two"),
    ]
    assert decomposition_labels(items) == ["alpha beta gamma delta", "one two"]


class TestBuildVariants:
    def test_matrix_names_and_sharing(self, bench_setup):
        _, _, variants = bench_setup
        names = [v.name for v in variants]
        assert names == ["full", "multimodal_fixed", "text_only", "text_only_fixed"]
        by_name = {v.name: v for v in variants}
        assert by_name["full"].store.dir == by_name["multimodal_fixed"].store.dir
        assert by_name["text_only"].store.dir != by_name["full"].store.dir
        assert by_name["full"].agentic and not by_name["multimodal_fixed"].agentic

    def test_fusion_axis_config(self, bench_setup):
        _, _, variants = bench_setup
        by_name = {v.name: v for v in variants}
        assert by_name["full"].store.config.multimodal
        assert not by_name["text_only"].store.config.multimodal


class TestRunBenchmark:
    def test_cells_and_traces(self, bench_setup):
        _, paths, variants = bench_setup
        report = run_benchmark(
            variants, load_queries(paths["queries"]), load_judgments(paths["judgments"]),
            top_k=10)
        assert set(report.cells) == {v.name for v in variants}
        for cell in report.cells.values():
            assert cell.evaluated == 8 and cell.skipped == 0
            assert 0.0 <= cell.ndcg_mean <= 1.0
            assert 0.0 <= cell.sga <= 1.0
            assert 0.0 <= cell.tda <= 1.0
            assert cell.per_phase_ndcg
        assert len(report.traces) == 4 * 8

    def test_fixed_variants_always_direct(self, bench_setup):
        _, paths, variants = bench_setup
        report = run_benchmark(
            variants, load_queries(paths["queries"]), load_judgments(paths["judgments"]))
        for trace in report.traces:
            if "fixed" in trace["config"]:
                assert trace["strategy"] == "DirectSearch"

    def test_skips_queries_without_positive_judgments(self, bench_setup, tmp_path):
        _, paths, variants = bench_setup
        queries = load_queries(paths["queries"])[:1]
        queries.append({"query_id": "q-unjudged", "text": "anything", "phase": "rescue"})
        report = run_benchmark(
            [variants[0]], queries, load_judgments(paths["judgments"]))
        cell = report.cells["full"]
        assert cell.evaluated == 1 and cell.skipped == 1


class TestWriteReport:
    def test_outputs(self, tmp_path):
        report = BenchmarkReport(
            cells={
                "full": ConfigCell(0.9, 1.0, 0.5, 8, 0, {"rescue": 0.9}),
                "text_only": ConfigCell(0.6, 0.5, 0.25, 8, 0, {"rescue": 0.6}),
            }
        )
        paths = write_report(report, tmp_path / "report")
        text = paths["tsv"].read_text()
        lines = text.splitlines()
        assert lines[0] == "config\tndcg\tsga\ttda\tevaluated\tskipped"
        assert lines[1].startswith("full\t0.900000\t1.000000")
        data = json.loads(paths["json"].read_text())
        assert data["cells"]["text_only"]["ndcg"] == 0.6
        assert paths["figure"].exists()
        assert paths["figure"].read_bytes()[:8] == b"\x89PNG\r\n\x1a\n"


def test_scaling_probe_smoke(tmp_path):
    result = scaling_probe(tmp_path, sizes=(24, 36), queries_per_size=2)
    assert result["sizes"] == [24, 36]
    assert len(result["build_seconds"]) == 2
    assert all(t > 0 for t in result["build_seconds"])
    assert result["figure"].exists()
