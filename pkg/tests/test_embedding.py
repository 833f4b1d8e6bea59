import numpy as np
import pytest

from hmrag import TEXT_DIM, VISUAL_DIM
from hmrag.embedding import (
    DEFAULT_ALPHA,
    FusedEmbedding,
    TokenEmbeddingSet,
    build_projection,
    cosine,
    fuse,
    maxsim,
    project_visual,
    token_set_for_text,
    unit_rows,
)
from oracles import maxsim_brute


class TestProjection:
    def test_shape_and_orthonormal_columns(self):
        proj = build_projection(3)
        assert proj.entries.shape == (TEXT_DIM, VISUAL_DIM)
        gram = proj.entries.T @ proj.entries
        assert np.allclose(gram, np.eye(VISUAL_DIM), atol=1e-10)

    def test_regeneration_exact(self):
        a = build_projection(11)
        b = build_projection(11)
        assert np.array_equal(a.entries, b.entries)

    def test_seed_sensitivity(self):
        assert not np.array_equal(build_projection(1).entries, build_projection(2).entries)

    def test_norm_preserving(self):
        proj = build_projection(0)
        rng = np.random.default_rng(42)
        v = rng.standard_normal(VISUAL_DIM)
        out = project_visual(v, proj)
        assert out.shape == (TEXT_DIM,)
        assert abs(np.linalg.norm(out) - np.linalg.norm(v)) < 1e-8

    def test_wrong_dim_rejected(self):
        with pytest.raises(ValueError):
            project_visual(np.zeros(TEXT_DIM), build_projection(0))


class TestFuse:
    def test_convex_combination(self):
        t = np.full(TEXT_DIM, 1.0)
        v = np.full(TEXT_DIM, -1.0)
        fused = fuse(t, v, 0.7)
        assert np.allclose(fused.vector, 0.7 - 0.3)
        assert fused.alpha_used == 0.7 and fused.has_visual

    def test_text_only(self):
        t = np.arange(TEXT_DIM, dtype=float)
        fused = fuse(t, None, 0.7)
        assert np.array_equal(fused.vector, t)
        assert fused.alpha_used == 1.0 and not fused.has_visual

    def test_no_renormalization(self):
        t = np.zeros(TEXT_DIM)
        t[0] = 2.0
        v = np.zeros(TEXT_DIM)
        v[1] = 2.0
        fused = fuse(t, v, 0.5)
        assert abs(np.linalg.norm(fused.vector) - np.sqrt(2.0)) < 1e-12

    def test_alpha_bounds(self):
        t = np.zeros(TEXT_DIM)
        for bad in (-0.1, 1.1):
            with pytest.raises(ValueError):
                fuse(t, t, bad)

    def test_alpha_extremes(self):
        t = np.zeros(TEXT_DIM); t[0] = 1.0
        v = np.zeros(TEXT_DIM); v[1] = 1.0
        assert np.array_equal(fuse(t, v, 1.0).vector, t)
        assert np.array_equal(fuse(t, v, 0.0).vector, v)

    def test_default_alpha(self):
        assert DEFAULT_ALPHA == 0.7

    def test_text_only_record_must_use_alpha_one(self):
        with pytest.raises(ValueError):
            FusedEmbedding(vector=np.zeros(TEXT_DIM), alpha_used=0.7, has_visual=False)


class TestCosine:
    def test_identical(self):
        v = np.array([1.0, 2.0, 3.0])
        assert cosine(v, v) == pytest.approx(1.0)

    def test_orthogonal(self):
        assert cosine(np.array([1.0, 0.0]), np.array([0.0, 1.0])) == 0.0

    def test_zero_vector(self):
        assert cosine(np.zeros(3), np.array([1.0, 0.0, 0.0])) == 0.0

    def test_mismatch(self):
        with pytest.raises(ValueError):
            cosine(np.zeros(3), np.zeros(4))


class TestMaxSim:
    def test_hand_example(self):
        q = TokenEmbeddingSet("q", np.array([[1.0, 0.0], [0.0, 1.0]]))
        d = TokenEmbeddingSet("d", np.array([[1.0, 0.0], [np.sqrt(0.5), np.sqrt(0.5)]]))
        # token 1 matches exactly (1.0); token 2 best hits the diagonal (cos 45deg)
        assert maxsim(q, d) == pytest.approx(1.0 + np.sqrt(0.5))

    def test_matches_brute_force(self):
        rng = np.random.default_rng(5)
        for _ in range(25):
            q = rng.standard_normal((int(rng.integers(1, 6)), 8))
            d = rng.standard_normal((int(rng.integers(1, 7)), 8))
            got = maxsim(TokenEmbeddingSet("q", q), TokenEmbeddingSet("d", d))
            assert got == pytest.approx(maxsim_brute(q, d), abs=1e-9)

    def test_asymmetric(self):
        rng = np.random.default_rng(6)
        q = rng.standard_normal((3, 8))
        d = rng.standard_normal((5, 8))
        a = maxsim(TokenEmbeddingSet("q", q), TokenEmbeddingSet("d", d))
        b = maxsim(TokenEmbeddingSet("d", d), TokenEmbeddingSet("q", q))
        assert a != pytest.approx(b)

    def test_empty_rejected(self):
        with pytest.raises(ValueError):
            TokenEmbeddingSet("q", np.zeros((0, 4)))


class TestTokenSets:
    def test_unit_rows(self):
        rows = unit_rows([np.array([3.0, 4.0]), np.array([0.0, 0.0])])
        assert np.allclose(rows[0], [0.6, 0.8])
        assert np.array_equal(rows[1], [0.0, 0.0])

    def test_dedup_first_occurrence(self, provider):
        ts = token_set_for_text("o", ["a", "b", "a", "c", "b"], provider)
        assert ts.vectors.shape == (3, TEXT_DIM)
        direct = unit_rows(provider.embed_text(["a", "b", "c"]))
        assert np.allclose(ts.vectors, direct)

    def test_empty_tokens(self, provider):
        with pytest.raises(ValueError):
            token_set_for_text("o", [], provider)
