"""Retrieval evaluation: precision at k, McNemar testing, experiment harness.

The experiment harness generates a seeded synthetic dataset, builds the four
input representations (vignette / subaperture magnitudes, Doppler fields on
both), trains one auto-encoder per representation, indexes the test split
and reports mean P@5 / P@50 over class-stratified queries for both the
auto-encoder and the deterministic baseline descriptor.

Everything is derived from one master seed; the canonical report JSON is
byte-identical across runs (wall-clock runtime goes to a sidecar file).
"""
from __future__ import annotations

import json
import math
import time
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy import stats as _scipy_stats

from .encoder.baseline import baseline_descriptor
from .encoder.model import EncoderConfig
from .encoder.stacks import Embedding, InputStack, build_representation_stacks
from .encoder.training import embed_stacks, train_autoencoder
from .retrieval import RetrievalIndex, build_index, query
from .synth import SynthParams, synth_vignette
from .vignette import CLASS_ABBREV, VignetteMeta


def precision_at_k(ranked_labels, query_label, k: int) -> float:
    """Fraction of the top-k labels equal to the query label.

    The ranked list must already exclude the query itself.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    if len(ranked_labels) < k:
        raise ValueError(f"ranked list has {len(ranked_labels)} entries, need >= {k}")
    return sum(1 for lbl in ranked_labels[:k] if lbl == query_label) / k


def mean_precision(idx: RetrievalIndex, queries, k: int) -> float:
    """Mean precision_at_k over (embedding, label) queries.

    Each query's own id is excluded from its ranking before scoring.
    """
    if not queries:
        raise ValueError("no queries given")
    scores = []
    for emb, label in queries:
        exclude = emb.id if isinstance(emb, Embedding) and emb.id in idx else None
        results = query(idx, emb, n_max=len(idx), exclude_id=exclude)
        scores.append(precision_at_k([r.meta.class_label for r in results], label, k))
    return math.fsum(scores) / len(queries)  # fsum: exactly order-independent


def mcnemar_test(correct_a, correct_b) -> tuple[float, float]:
    """Continuity-corrected McNemar statistic and chi-square(1) p-value."""
    if len(correct_a) != len(correct_b):
        raise ValueError("paired correctness lists must have equal length")
    if len(correct_a) == 0:
        raise ValueError("need at least one pair")
    b01 = sum(1 for a, b in zip(correct_a, correct_b) if a and not b)
    b10 = sum(1 for a, b in zip(correct_a, correct_b) if not a and b)
    if b01 + b10 == 0:
        return 0.0, 1.0
    statistic = (abs(b01 - b10) - 1) ** 2 / (b01 + b10)
    p_value = float(_scipy_stats.chi2.sf(statistic, df=1))
    return float(statistic), p_value


# ---------------------------------------------------------------------------
# experiment harness

METHOD_LABEL = {
    ("VIG", "AUTOENC"): "U-Vig",
    ("SUBAP", "AUTOENC"): "U-Subap",
    ("DOP_VIG", "AUTOENC"): "U-Dop-Vig",
    ("DOP_SUBAP", "AUTOENC"): "U-Dop-Subap",
    ("VIG", "BASELINE"): "B-Vig",
    ("SUBAP", "BASELINE"): "B-Subap",
    ("DOP_VIG", "BASELINE"): "B-Dop-Vig",
    ("DOP_SUBAP", "BASELINE"): "B-Dop-Subap",
}


@dataclass(frozen=True)
class ExperimentConfig:
    master_seed: int = 709
    num_classes: int = 10
    train_per_class: int = 100
    test_per_class: int = 20
    rows: int = 640
    cols: int = 640
    prf: float = 1600.0
    spacing: float = 5.0
    speckle_looks: int = 1
    n_sub: int = 4
    decimation: int = 10
    dce_filter: int = 32
    widths: tuple[int, int, int, int] = (8, 8, 16, 32)
    attention_heads: int = 4
    epochs: int = 10
    batch_size: int = 16
    learning_rate: float = 1e-3
    val_fraction: float = 0.1
    queries_per_class: int = 10
    precision_ks: tuple[int, ...] = (5, 50)

    def __post_init__(self) -> None:
        if not 1 <= self.num_classes <= 10:
            raise ValueError("num_classes must be in [1, 10]")
        max_k = self.num_classes * self.test_per_class - 1
        if max(self.precision_ks) > max_k:
            raise ValueError(f"precision k {max(self.precision_ks)} exceeds index size {max_k}")

    def to_dict(self) -> dict:
        d = {k: getattr(self, k) for k in self.__dataclass_fields__}
        d["widths"] = list(self.widths)
        d["precision_ks"] = list(self.precision_ks)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentConfig":
        d = dict(d)
        if "widths" in d:
            d["widths"] = tuple(d["widths"])
        if "precision_ks" in d:
            d["precision_ks"] = tuple(d["precision_ks"])
        return cls(**d)


#: reduced preset for smoke tests and the determinism criterion
SMOKE_CONFIG = ExperimentConfig(
    master_seed=101,
    num_classes=2,
    train_per_class=6,
    test_per_class=4,
    rows=320,
    cols=320,
    widths=(2, 2, 3, 4),
    epochs=2,
    batch_size=4,
    queries_per_class=2,
    precision_ks=(5,),
)


@dataclass
class ExperimentReport:
    config: dict
    class_names: list[str]
    query_protocol: dict
    results: dict
    mcnemar: dict
    runtime_seconds: float = 0.0

    def to_canonical_dict(self) -> dict:
        """Deterministic content only; runtime lives in the sidecar."""
        return {
            "schema": "sarlook-experiment-report-v1",
            "config": self.config,
            "class_names": self.class_names,
            "query_protocol": self.query_protocol,
            "results": self.results,
            "mcnemar": self.mcnemar,
        }

    def to_canonical_json(self) -> str:
        return json.dumps(self.to_canonical_dict(), sort_keys=True, indent=1)


def _vignette_seed(master: int, split: str, class_id: int, index: int) -> int:
    split_code = {"train": 0, "test": 1}[split]
    seq = np.random.SeedSequence([master, split_code, class_id, index])
    return int(seq.generate_state(1, dtype=np.uint64)[0])


def _dataset_stacks(cfg: ExperimentConfig, split: str, per_class: int, log):
    """Per-representation stacks plus (id -> class label) for one split."""
    by_rep: dict[str, list[InputStack]] = {tag: [] for tag in
                                           ("VIG", "SUBAP", "DOP_VIG", "DOP_SUBAP")}
    labels: dict[str, int] = {}
    total = cfg.num_classes * per_class
    done = 0
    for class_id in range(cfg.num_classes):
        for i in range(per_class):
            p = SynthParams(
                class_id=class_id,
                seed=_vignette_seed(cfg.master_seed, split, class_id, i),
                rows=cfg.rows,
                cols=cfg.cols,
                speckle_looks=cfg.speckle_looks,
            )
            vid = f"{split}-{CLASS_ABBREV[class_id].lower()}-{i:04d}"
            v = synth_vignette(p, prf=cfg.prf, azimuth_spacing=cfg.spacing,
                               range_spacing=cfg.spacing, vignette_id=vid)
            stacks = build_representation_stacks(
                v, n_sub=cfg.n_sub, k=cfg.decimation,
                d1=cfg.dce_filter, d2=cfg.dce_filter,
            )
            for tag, s in stacks.items():
                by_rep[tag].append(s)
            labels[vid] = class_id
            done += 1
            if log and done % 100 == 0:
                log(f"  {split}: {done}/{total} vignettes preprocessed")
    return by_rep, labels


def _encoder_config(cfg: ExperimentConfig, stack: InputStack, rep_index: int) -> EncoderConfig:
    c, h, w = stack.shape
    return EncoderConfig(
        input_channels=c,
        input_height=h,
        input_width=w,
        widths=cfg.widths,
        attention_heads=cfg.attention_heads,
        seed=cfg.master_seed * 10 + rep_index,
    )


def _evaluate_method(idx, queries, labels, cfg):
    """Overall and per-class P@k plus the per-query top-1 correctness."""
    per_query = {k: [] for k in cfg.precision_ks}
    top1 = []
    q_labels = []
    for emb in queries:
        label = labels[emb.id]
        q_labels.append(label)
        results = query(idx, emb, n_max=len(idx), exclude_id=emb.id)
        ranked = [r.meta.class_label for r in results]
        top1.append(ranked[0] == label)
        for k in cfg.precision_ks:
            per_query[k].append(precision_at_k(ranked, label, k))
    out = {}
    for k in cfg.precision_ks:
        vals = np.asarray(per_query[k])
        q_arr = np.asarray(q_labels)
        per_class = {
            CLASS_ABBREV[c]: float(vals[q_arr == c].mean())
            for c in range(cfg.num_classes)
        }
        out[f"p_at_{k}"] = {"overall": float(vals.mean()), "per_class": per_class}
    return out, top1


def run_experiment(
    cfg: ExperimentConfig,
    out_dir: str | Path,
    log=print,
) -> ExperimentReport:
    """Full comparison of the four input representations; writes report.json
    (canonical), report.txt (human table) and report_runtime.json."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    t0 = time.time()
    stage = "generate+preprocess train split"
    try:
        if log:
            log(f"[stage] {stage}")
        train_stacks, _train_labels = _dataset_stacks(cfg, "train", cfg.train_per_class, log)

        stage = "generate+preprocess test split"
        if log:
            log(f"[stage] {stage}")
        test_stacks, test_labels = _dataset_stacks(cfg, "test", cfg.test_per_class, log)

        models = {}
        for rep_index, tag in enumerate(("VIG", "SUBAP", "DOP_VIG", "DOP_SUBAP")):
            stage = f"train auto-encoder [{tag}]"
            if log:
                log(f"[stage] {stage}")
            enc_cfg = _encoder_config(cfg, train_stacks[tag][0], rep_index)
            model, _history = train_autoencoder(
                train_stacks[tag], enc_cfg,
                epochs=cfg.epochs, batch_size=cfg.batch_size, lr=cfg.learning_rate,
                val_fraction=cfg.val_fraction,
                metrics_path=out_dir / f"train_metrics_{tag.lower()}.jsonl",
            )
            models[tag] = model

        stage = "embed test split + build indexes"
        if log:
            log(f"[stage] {stage}")
        embeddings: dict[tuple[str, str], list[Embedding]] = {}
        for tag in ("VIG", "SUBAP", "DOP_VIG", "DOP_SUBAP"):
            embeddings[(tag, "AUTOENC")] = embed_stacks(models[tag], test_stacks[tag],
                                                        cfg.batch_size)
            embeddings[(tag, "BASELINE")] = [baseline_descriptor(s) for s in test_stacks[tag]]
        indexes = {
            key: build_index([(e, VignetteMeta(class_label=test_labels[e.id])) for e in embs])
            for key, embs in embeddings.items()
        }

        stage = "evaluate queries"
        if log:
            log(f"[stage] {stage}")
        rng = np.random.Generator(np.random.PCG64(
            np.random.SeedSequence([cfg.master_seed, 0xE7A1])))
        query_ids: list[str] = []
        ids_by_class: dict[int, list[str]] = {c: [] for c in range(cfg.num_classes)}
        for vid, lbl in test_labels.items():
            ids_by_class[lbl].append(vid)
        for c in range(cfg.num_classes):
            pool = sorted(ids_by_class[c])
            chosen = rng.choice(len(pool), size=min(cfg.queries_per_class, len(pool)),
                                replace=False)
            query_ids.extend(pool[i] for i in sorted(chosen))

        results = {}
        top1_by_method = {}
        for key, idx in sorted(indexes.items()):
            label = METHOD_LABEL[key]
            emb_by_id = {e.id: e for e in embeddings[key]}
            queries = [emb_by_id[qid] for qid in query_ids]
            results[label], top1_by_method[label] = _evaluate_method(
                idx, queries, test_labels, cfg)

        stage = "significance tests"
        mcnemar = {}
        for a, b in (("U-Subap", "U-Vig"), ("U-Dop-Subap", "U-Dop-Vig")):
            statistic, p_value = mcnemar_test(top1_by_method[a], top1_by_method[b])
            b01 = sum(1 for x, y in zip(top1_by_method[a], top1_by_method[b]) if x and not y)
            b10 = sum(1 for x, y in zip(top1_by_method[a], top1_by_method[b]) if not x and y)
            mcnemar[f"{a}_vs_{b}"] = {
                "criterion": "top-1 neighbor class match",
                "b01": b01, "b10": b10,
                "statistic": statistic, "p_value": p_value,
            }
    except Exception as exc:
        raise RuntimeError(f"experiment stage failed: {stage}: {exc}") from exc

    report = ExperimentReport(
        config=cfg.to_dict(),
        class_names=[CLASS_ABBREV[c] for c in range(cfg.num_classes)],
        query_protocol={
            "count": len(query_ids),
            "per_class": cfg.queries_per_class,
            "stratified": True,
            "self_excluded": True,
        },
        results=results,
        mcnemar=mcnemar,
        runtime_seconds=time.time() - t0,
    )
    (out_dir / "report.json").write_text(report.to_canonical_json())
    (out_dir / "report.txt").write_text(render_report_table(report))
    (out_dir / "report_runtime.json").write_text(
        json.dumps({"runtime_seconds": report.runtime_seconds}))
    if log:
        log(f"experiment finished in {report.runtime_seconds:.1f}s -> {out_dir / 'report.json'}")
    return report


def render_report_table(report: ExperimentReport) -> str:
    """Classes as columns with P@k sub-columns, one row per method."""
    ks = sorted(int(k.split("_")[-1]) for k in
                next(iter(report.results.values())).keys())
    cols = report.class_names + ["Overall"]
    lines = []
    header1 = f"{'Method':<14}" + "".join(f"{c:>{6 * len(ks)}}" for c in cols)
    header2 = f"{'':<14}" + "".join("".join(f"{f'P@{k}':>6}" for k in ks) for _ in cols)
    lines.append(header1)
    lines.append(header2)
    for method in sorted(report.results):
        row = f"{method:<14}"
        for c in cols:
            for k in ks:
                block = report.results[method][f"p_at_{k}"]
                val = block["overall"] if c == "Overall" else block["per_class"][c]
                row += f"{100 * val:>6.1f}"
        lines.append(row)
    return "\n".join(lines) + "\n"
