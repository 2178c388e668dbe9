import json
import math

import numpy as np
import pytest

from sarlook.encoder.stacks import Embedding
from sarlook.evaluate import (
    SMOKE_CONFIG,
    ExperimentConfig,
    mcnemar_test,
    mean_precision,
    precision_at_k,
    render_report_table,
    run_experiment,
)
from sarlook.retrieval import build_index
from sarlook.vignette import VignetteMeta


class TestPrecisionAtK:
    def test_all_match(self):
        assert precision_at_k([1, 1, 1, 1, 1], 1, 5) == 1.0

    def test_none_match(self):
        assert precision_at_k([2, 3, 4, 5, 6], 1, 5) == 0.0

    def test_three_of_five(self):
        assert precision_at_k([1, 1, 1, 0, 0], 1, 5) == pytest.approx(0.6)

    def test_short_list_rejected(self):
        with pytest.raises(ValueError, match="need"):
            precision_at_k([1, 1], 1, 5)

    def test_in_unit_interval(self, rng):
        for _ in range(50):
            labels = rng.integers(0, 3, size=20).tolist()
            p = precision_at_k(labels, 1, int(rng.integers(1, 20)))
            assert 0.0 <= p <= 1.0


def _emb(vid, vec):
    return Embedding(id=vid, vector=np.asarray(vec, float),
                     representation_tag="VIG", encoder_tag="BASELINE",
                     encoder_version="t")


def _labeled_index(rng, n, dim, label_of):
    items = []
    for i in range(n):
        items.append((_emb(f"q{i:03d}", rng.standard_normal(dim)),
                      VignetteMeta(class_label=label_of(i))))
    return build_index(items)


class TestMeanPrecision:
    def test_single_query_equals_its_precision(self, rng):
        idx = _labeled_index(rng, 10, 4, lambda i: i % 2)
        emb = _emb("q001", idx.vector_for("q001"))
        got = mean_precision(idx, [(emb, 1)], k=3)
        assert 0.0 <= got <= 1.0

    def test_single_label_index_gives_one(self, rng):
        idx = _labeled_index(rng, 8, 4, lambda i: 3)
        queries = [(_emb(f"q{i:03d}", idx.vector_for(f"q{i:03d}")), 3) for i in range(8)]
        assert mean_precision(idx, queries, k=7) == 1.0

    def test_permutation_invariant(self, rng):
        idx = _labeled_index(rng, 12, 4, lambda i: i % 3)
        queries = [(_emb(f"q{i:03d}", idx.vector_for(f"q{i:03d}")), i % 3) for i in range(12)]
        a = mean_precision(idx, queries, k=5)
        b = mean_precision(idx, list(reversed(queries)), k=5)
        assert a == b

    def test_self_excluded(self, rng):
        # one entry per label: if the query were not excluded, P@1 would be 1
        idx = _labeled_index(rng, 6, 4, lambda i: i)
        emb = _emb("q002", idx.vector_for("q002"))
        assert mean_precision(idx, [(emb, 2)], k=1) == 0.0

    def test_matches_independent_recomputation(self, rng):
        idx = _labeled_index(rng, 30, 6, lambda i: i % 5)
        queries = [(_emb(f"q{i:03d}", idx.vector_for(f"q{i:03d}")), i % 5)
                   for i in range(0, 30, 3)]
        got = mean_precision(idx, queries, k=5)
        # rerun oracle: manual cosine ranking per query
        total = 0.0
        for emb, label in queries:
            sims = []
            for j in range(len(idx)):
                a = idx.vectors[j].astype(float)
                b = emb.vector
                sims.append((float(a @ b / (np.linalg.norm(a) * np.linalg.norm(b))),
                             idx.ids[j]))
            order = sorted(range(len(idx)), key=lambda j: (-sims[j][0], sims[j][1]))
            ranked = [idx.metas[j].class_label for j in order if idx.ids[j] != emb.id]
            total += sum(1 for lbl in ranked[:5] if lbl == label) / 5
        assert got == pytest.approx(total / len(queries), abs=1e-12)


class TestMcNemar:
    def test_identical_vectors(self):
        assert mcnemar_test([True, False, True], [True, False, True]) == (0.0, 1.0)

    def test_formula_case(self):
        # b01=10, b10=0 -> (10-1)^2/10 = 8.1; p from chi-square(1)
        a = [True] * 10 + [False] * 5
        b = [False] * 10 + [False] * 5
        statistic, p = mcnemar_test(a, b)
        assert statistic == pytest.approx(8.1, abs=1e-12)
        # independent oracle: chi2(1) survival = erfc(sqrt(x/2))
        assert p == pytest.approx(math.erfc(math.sqrt(8.1 / 2)), rel=1e-9)
        assert p < 0.01

    def test_balanced_discordance(self):
        for n in (1, 4, 9):
            a = [True] * n + [False] * n
            b = [False] * n + [True] * n
            statistic, p = mcnemar_test(a, b)
            assert statistic == pytest.approx(1.0 / (2 * n), abs=1e-12)
            assert p > 0.01

    def test_symmetry(self, rng):
        a = rng.integers(0, 2, 30).astype(bool).tolist()
        b = rng.integers(0, 2, 30).astype(bool).tolist()
        assert mcnemar_test(a, b) == mcnemar_test(b, a)

    def test_length_mismatch(self):
        with pytest.raises(ValueError):
            mcnemar_test([True], [True, False])


@pytest.fixture(scope="module")
def smoke_report(tmp_path_factory):
    out = tmp_path_factory.mktemp("exp")
    report = run_experiment(SMOKE_CONFIG, out, log=None)
    return report, out


class TestExperimentHarness:

    def test_report_schema(self, smoke_report):
        report, out = smoke_report
        data = json.loads((out / "report.json").read_text())
        assert data["schema"] == "sarlook-experiment-report-v1"
        assert set(data["results"]) == {
            "U-Vig", "U-Subap", "U-Dop-Vig", "U-Dop-Subap",
            "B-Vig", "B-Subap", "B-Dop-Vig", "B-Dop-Subap",
        }
        for method, block in data["results"].items():
            for k in SMOKE_CONFIG.precision_ks:
                sub = block[f"p_at_{k}"]
                assert 0.0 <= sub["overall"] <= 1.0
                assert set(sub["per_class"]) == set(data["class_names"])
                assert all(0.0 <= v <= 1.0 for v in sub["per_class"].values())
        assert data["query_protocol"]["self_excluded"] is True

    def test_metrics_files_written(self, smoke_report):
        _report, out = smoke_report
        for tag in ("vig", "subap", "dop_vig", "dop_subap"):
            lines = (out / f"train_metrics_{tag}.jsonl").read_text().splitlines()
            assert len(lines) == SMOKE_CONFIG.epochs
            assert all({"epoch", "train_loss", "val_loss"} == set(json.loads(l)) for l in lines)

    def test_table_rendering(self, smoke_report):
        report, out = smoke_report
        table = (out / "report.txt").read_text()
        assert "U-Subap" in table and "Overall" in table
        assert table == render_report_table(report)

    def test_runtime_sidecar(self, smoke_report):
        _report, out = smoke_report
        side = json.loads((out / "report_runtime.json").read_text())
        assert side["runtime_seconds"] > 0


def test_config_validation():
    with pytest.raises(ValueError, match="exceeds"):
        ExperimentConfig(num_classes=2, test_per_class=10, precision_ks=(50,))
    with pytest.raises(ValueError, match="num_classes"):
        ExperimentConfig(num_classes=11)


def test_config_roundtrip():
    d = SMOKE_CONFIG.to_dict()
    assert ExperimentConfig.from_dict(d) == SMOKE_CONFIG
