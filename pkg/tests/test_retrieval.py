import numpy as np
import pytest

from sarlook.encoder.stacks import Embedding
from sarlook.retrieval import (
    build_index,
    cosine_similarity,
    load_index,
    query,
    save_index,
)
from sarlook.vignette import FormatError, VignetteMeta


def emb(vid, vec, rep="VIG", enc="BASELINE"):
    return Embedding(id=vid, vector=np.asarray(vec, float), representation_tag=rep,
                     encoder_tag=enc, encoder_version="t1")


def random_index(rng, n, dim, rep="VIG", enc="BASELINE"):
    items = []
    for i in range(n):
        vec = rng.standard_normal(dim)
        items.append((emb(f"id{i:04d}", vec, rep, enc),
                      VignetteMeta(class_label=int(rng.integers(0, 10)))))
    return build_index(items)


def brute_force_ranking(idx, q_vec):
    """Independent double-loop oracle for the ranking."""
    sims = []
    for i in range(len(idx)):
        a = idx.vectors[i].astype(np.float64)
        b = np.asarray(q_vec, float)
        num = sum(float(a[j]) * float(b[j]) for j in range(len(b)))
        na = sum(float(x) * float(x) for x in a) ** 0.5
        nb = sum(float(x) * float(x) for x in b) ** 0.5
        sims.append(min(1.0, max(-1.0, num / (na * nb))))
    order = sorted(range(len(idx)), key=lambda i: (-sims[i], idx.ids[i]))
    return [idx.ids[i] for i in order]


class TestCosine:
    def test_identical(self):
        a = np.array([1.0, 2.0, 3.0])
        assert cosine_similarity(a, a) == pytest.approx(1.0, abs=1e-15)

    def test_orthogonal(self):
        assert cosine_similarity([1, 0], [0, 1]) == 0.0

    def test_antiparallel(self):
        a = np.array([0.3, -2.0, 5.0])
        assert cosine_similarity(a, -a) == pytest.approx(-1.0, abs=1e-15)

    def test_clamped_range(self, rng):
        for _ in range(50):
            a, b = rng.standard_normal(6), rng.standard_normal(6)
            assert -1.0 <= cosine_similarity(a, b) <= 1.0

    def test_symmetry(self, rng):
        a, b = rng.standard_normal(8), rng.standard_normal(8)
        assert cosine_similarity(a, b) == cosine_similarity(b, a)

    def test_zero_norm_rejected(self):
        with pytest.raises(ValueError, match="zero-norm"):
            cosine_similarity([0, 0], [1, 2])

    def test_dim_mismatch(self):
        with pytest.raises(ValueError, match="mismatch"):
            cosine_similarity([1, 2], [1, 2, 3])


class TestBuildIndex:
    def test_n_in_n_out(self, rng):
        idx = random_index(rng, 12, 5)
        assert len(idx) == 12 and idx.dimension == 5

    def test_duplicate_id_named(self, rng):
        items = [(emb("dup", rng.standard_normal(4)), None),
                 (emb("dup", rng.standard_normal(4)), None)]
        with pytest.raises(ValueError, match="dup"):
            build_index(items)

    def test_zero_norm_rejected(self):
        with pytest.raises(ValueError, match="zero-norm"):
            build_index([(emb("z", [0.0, 0.0]), None)])

    def test_mixed_tags_rejected(self, rng):
        items = [(emb("a", rng.standard_normal(4), rep="VIG"), None),
                 (emb("b", rng.standard_normal(4), rep="SUBAP"), None)]
        with pytest.raises(ValueError, match="mixed"):
            build_index(items)

    def test_dim_mismatch_rejected(self, rng):
        items = [(emb("a", rng.standard_normal(4)), None),
                 (emb("b", rng.standard_normal(5)), None)]
        with pytest.raises(ValueError, match="dimension"):
            build_index(items)

    def test_permutation_invariant_queries(self, rng):
        items = [(emb(f"i{i}", rng.standard_normal(6)), None) for i in range(20)]
        q = rng.standard_normal(6)
        r1 = query(build_index(items), q, 20)
        rng.shuffle(items)
        r2 = query(build_index(items), q, 20)
        assert [x.id for x in r1] == [x.id for x in r2]
        assert [x.similarity for x in r1] == [x.similarity for x in r2]


class TestQuery:
    def test_exact_match_rank_one(self, rng):
        idx = random_index(rng, 10, 6)
        q = idx.vector_for("id0003")
        res = query(idx, q, 5)
        assert res[0].id == "id0003"
        assert res[0].similarity == pytest.approx(1.0, abs=1e-12)
        assert [r.rank for r in res] == [1, 2, 3, 4, 5]

    def test_n_max_larger_than_index(self, rng):
        idx = random_index(rng, 7, 4)
        assert len(query(idx, rng.standard_normal(4), 100)) == 7

    def test_bruteforce_oracle(self, rng):
        idx = random_index(rng, 200, 8)
        for _ in range(10):
            q = rng.standard_normal(8)
            got = [r.id for r in query(idx, q, 200)]
            assert got == brute_force_ranking(idx, q)

    def test_topk_prefix_property(self, rng):
        idx = random_index(rng, 60, 5)
        q = rng.standard_normal(5)
        full = [r.id for r in query(idx, q, 60)]
        for k in (1, 5, 50):
            assert [r.id for r in query(idx, q, k)] == full[:k]

    def test_scale_invariance(self, rng):
        idx = random_index(rng, 40, 5)
        q = rng.standard_normal(5)
        r1 = query(idx, q, 40)
        r2 = query(idx, 37.5 * q, 40)
        assert [x.id for x in r1] == [x.id for x in r2]
        assert [x.rank for x in r1] == [x.rank for x in r2]

    def test_similarities_non_increasing(self, rng):
        idx = random_index(rng, 50, 6)
        res = query(idx, rng.standard_normal(6), 50)
        sims = [r.similarity for r in res]
        assert all(a >= b for a, b in zip(sims, sims[1:]))

    def test_exclude_id(self, rng):
        idx = random_index(rng, 10, 6)
        res = query(idx, idx.vector_for("id0002"), 9, exclude_id="id0002")
        assert "id0002" not in [r.id for r in res]
        assert len(res) == 9

    def test_zero_norm_query_rejected(self, rng):
        idx = random_index(rng, 5, 3)
        with pytest.raises(ValueError, match="zero-norm"):
            query(idx, np.zeros(3), 3)

    def test_dim_mismatch_rejected(self, rng):
        idx = random_index(rng, 5, 3)
        with pytest.raises(ValueError, match="dim"):
            query(idx, np.ones(4), 3)

    def test_tie_break_by_id(self):
        v = np.array([1.0, 0.0])
        items = [(emb(i, v) , None) for i in ("zz", "aa", "mm")]
        res = query(build_index(items), v, 3)
        assert [r.id for r in res] == ["aa", "mm", "zz"]


class TestPersistence:
    def test_roundtrip(self, rng, tmp_path):
        idx = random_index(rng, 25, 6, rep="SUBAP", enc="AUTOENC")
        path = tmp_path / "test.srix"
        save_index(idx, path)
        back = load_index(path)
        assert back.ids == idx.ids
        assert np.array_equal(back.vectors, idx.vectors)
        assert back.metas == idx.metas
        assert back.representation_tag == "SUBAP" and back.encoder_tag == "AUTOENC"

    def test_query_results_survive_roundtrip(self, rng, tmp_path):
        idx = random_index(rng, 30, 8)
        path = tmp_path / "test.srix"
        save_index(idx, path)
        back = load_index(path)
        q = rng.standard_normal(8)
        r1, r2 = query(idx, q, 30), query(back, q, 30)
        assert [x.id for x in r1] == [x.id for x in r2]
        assert all(abs(a.similarity - b.similarity) < 1e-6 for a, b in zip(r1, r2))

    def test_truncated_file(self, rng, tmp_path):
        idx = random_index(rng, 10, 4)
        path = tmp_path / "test.srix"
        save_index(idx, path)
        raw = path.read_bytes()
        path.write_bytes(raw[:len(raw) - 7])
        with pytest.raises(FormatError):
            load_index(path)

    def test_bad_magic(self, tmp_path):
        path = tmp_path / "bad.srix"
        path.write_bytes(b"XXXX" + b"\x00" * 20)
        with pytest.raises(FormatError, match="magic"):
            load_index(path)
