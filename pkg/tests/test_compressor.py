"""Mock encoders and the two-stage page compression pipeline."""

import numpy as np
import pytest
from conftest import random_page, scalar_cross_attention

from docpress.attention import AttentionParams
from docpress.compressor import (
    EncoderConfig,
    Page,
    PageCompressor,
    compress_page,
    embed_ocr,
    encode_page_visual,
    global_visual_compression,
    local_ocr_compression,
    page_budget,
    token_reduction_ratio,
)
from docpress.geometry import BBox, GridConfig, OcrToken, assign_ocr, filter_ocr, select_grid


def ocr_word(text, x0, y0, x1, y1, conf=0.9):
    return OcrToken(text=text, bbox=BBox(x0, y0, x1, y1), conf=conf)


CFG = EncoderConfig()
GRID_CFG = GridConfig()


class TestEncodePageVisual:
    def test_bit_identical_across_calls(self):
        page = Page(page_id=3, width_px=768, height_px=768)
        grid = select_grid(768, 768, GRID_CFG)
        a = encode_page_visual(page, grid, CFG)
        b = encode_page_visual(page, grid, CFG)
        for i in range(grid.rows):
            for j in range(grid.cols):
                np.testing.assert_array_equal(a.local[i][j], b.local[i][j])
                np.testing.assert_array_equal(a.global_regions[i][j],
                                              b.global_regions[i][j])

    def test_shapes_follow_config(self):
        page = Page(page_id=1, width_px=768, height_px=768)
        grid = select_grid(768, 768, GRID_CFG)
        feats = encode_page_visual(page, grid, CFG)
        assert grid.crop_count == 4
        for i in range(grid.rows):
            for j in range(grid.cols):
                assert feats.local[i][j].shape == (16, 32)
                assert feats.global_regions[i][j].shape == (4, 32)

    def test_values_bounded(self):
        page = Page(page_id=9, width_px=1024, height_px=768)
        grid = select_grid(1024, 768, GRID_CFG)
        feats = encode_page_visual(page, grid, CFG)
        for row in feats.local:
            for block in row:
                assert (np.abs(block) <= 1.0).all()

    def test_distinct_pages_differ(self):
        grid = select_grid(768, 768, GRID_CFG)
        blocks = []
        for pid in range(100):
            feats = encode_page_visual(Page(pid, 768, 768), grid, CFG)
            blocks.append(feats.local[0][0])
        for n in range(1, 100):
            assert not np.array_equal(blocks[0], blocks[n])


class TestEmbedOcr:
    def test_empty_list(self):
        out = embed_ocr([], CFG)
        assert out.shape == (0, 32)

    def test_identical_words_identical_rows(self):
        toks = [ocr_word("total", 0.1, 0.1, 0.2, 0.15),
                ocr_word("total", 0.5, 0.5, 0.6, 0.55)]
        out = embed_ocr(toks, CFG)
        np.testing.assert_array_equal(out[0], out[1])

    def test_case_folding(self):
        out = embed_ocr([ocr_word("Berlin", 0.1, 0.1, 0.2, 0.15),
                         ocr_word("berlin", 0.5, 0.5, 0.6, 0.55)], CFG)
        np.testing.assert_array_equal(out[0], out[1])

    def test_rows_unit_norm(self):
        toks = [ocr_word(w, 0.1, 0.1, 0.2, 0.15) for w in ("a", "bb", "ccc")]
        out = embed_ocr(toks, CFG)
        np.testing.assert_allclose(np.linalg.norm(out, axis=1), 1.0, atol=1e-12)


class TestFusionStages:
    def setup_method(self):
        self.local_params = AttentionParams.init(32, seed=0)
        self.global_params = AttentionParams.init(32, seed=1)

    def test_local_empty_ocr_is_identity(self):
        v = np.arange(64.0).reshape(2, 32)
        out = local_ocr_compression(v, np.zeros((0, 32)), self.local_params)
        np.testing.assert_array_equal(out, v)

    def test_local_preserves_row_count(self):
        rng = np.random.default_rng(2)
        v = rng.normal(size=(16, 32))
        for k in (0, 1, 1000):
            out = local_ocr_compression(v, rng.normal(size=(k, 32)), self.local_params)
            assert out.shape == v.shape

    def test_global_empty_context_is_identity(self):
        g = np.arange(128.0).reshape(4, 32)
        out = global_visual_compression(g, np.zeros((0, 32)), self.global_params)
        np.testing.assert_array_equal(out, g)

    def test_global_output_rows_fixed(self):
        rng = np.random.default_rng(4)
        g = rng.normal(size=(4, 32))
        for p in (1, 16, 64):
            out = global_visual_compression(g, rng.normal(size=(p, 32)),
                                            self.global_params)
            assert out.shape == (4, 32)

    def test_local_matches_scalar_oracle(self):
        params = AttentionParams.init(3, seed=0)
        v = np.array([[0.2, -0.4, 1.0], [0.9, 0.1, -0.3]])
        t = np.array([[0.5, 0.5, -0.5]])
        expected = scalar_cross_attention(v, t, params)
        np.testing.assert_allclose(local_ocr_compression(v, t, params),
                                   expected, atol=1e-9)


class TestCompressPage:
    def setup_method(self):
        self.local = AttentionParams.init(32, seed=10)
        self.globl = AttentionParams.init(32, seed=11)

    def compress(self, page):
        return compress_page(page, CFG, GRID_CFG, self.local, self.globl)

    def test_token_count_independent_of_ocr(self):
        rng = np.random.default_rng(8)
        counts = set()
        for n_ocr in (0, 1, 100, 5000):
            page = random_page(rng, page_id=1, n_ocr=n_ocr, width=768, height=1024)
            counts.add(self.compress(page).token_count)
        assert len(counts) == 1

    def test_matches_manual_pipeline_bit_exact(self):
        rng = np.random.default_rng(12)
        page = random_page(rng, page_id=5, n_ocr=40, width=1024, height=768)
        emb = self.compress(page)

        grid = select_grid(page.width_px, page.height_px, GRID_CFG)
        kept = filter_ocr(list(page.ocr), 0.0)
        assigned = assign_ocr(kept, grid, GRID_CFG)
        feats = encode_page_visual(page, grid, CFG)
        blocks = []
        for i in range(grid.rows):
            for j in range(grid.cols):
                t = embed_ocr(assigned[i][j], CFG)
                vt = local_ocr_compression(feats.local[i][j], t, self.local)
                blocks.append(global_visual_compression(feats.global_regions[i][j],
                                                        vt, self.globl))
        np.testing.assert_array_equal(emb.tokens, np.vstack(blocks))

    def test_zero_ocr_equals_visual_only_path(self):
        page = Page(page_id=2, width_px=768, height_px=768)
        emb = self.compress(page)
        grid = select_grid(768, 768, GRID_CFG)
        feats = encode_page_visual(page, grid, CFG)
        blocks = []
        for i in range(grid.rows):
            for j in range(grid.cols):
                blocks.append(global_visual_compression(
                    feats.global_regions[i][j], feats.local[i][j], self.globl))
        np.testing.assert_array_equal(emb.tokens, np.vstack(blocks))

    def test_budget_matches_grid_times_regions(self):
        rng = np.random.default_rng(14)
        for _ in range(20):
            page = random_page(rng, page_id=int(rng.integers(1000)), n_ocr=5)
            grid = select_grid(page.width_px, page.height_px, GRID_CFG)
            assert self.compress(page).token_count == page_budget(grid, CFG)

    def test_ocr_permutation_within_crop_is_inert(self):
        # all tokens inside crop (0,0) of a square page
        rng = np.random.default_rng(16)
        words = ["alpha", "bravo", "delta", "echo", "fable"]
        toks = []
        for w in words:
            x0 = float(rng.uniform(0.02, 0.3))
            y0 = float(rng.uniform(0.02, 0.3))
            toks.append(ocr_word(w, x0, y0, x0 + 0.05, y0 + 0.05))
        base = Page(page_id=7, width_px=768, height_px=768, ocr=tuple(toks))
        emb_base = self.compress(base)
        for _ in range(5):
            perm = [toks[k] for k in rng.permutation(len(toks))]
            emb_perm = self.compress(Page(7, 768, 768, ocr=tuple(perm)))
            np.testing.assert_allclose(emb_perm.tokens, emb_base.tokens, atol=1e-9)

    def test_moving_token_only_touches_affected_regions(self):
        inside_00 = ocr_word("alpha", 0.1, 0.1, 0.2, 0.15)
        inside_11 = ocr_word("alpha", 0.6, 0.6, 0.7, 0.65)
        before = self.compress(Page(3, 768, 768, ocr=(inside_00,)))
        after = self.compress(Page(3, 768, 768, ocr=(inside_11,)))
        g_r = CFG.global_tokens_per_region
        blocks_before = [before.tokens[k * g_r:(k + 1) * g_r] for k in range(4)]
        blocks_after = [after.tokens[k * g_r:(k + 1) * g_r] for k in range(4)]
        # crops 1 and 2 never saw the token in either page
        np.testing.assert_array_equal(blocks_before[1], blocks_after[1])
        np.testing.assert_array_equal(blocks_before[2], blocks_after[2])
        assert not np.array_equal(blocks_before[0], blocks_after[0])
        assert not np.array_equal(blocks_before[3], blocks_after[3])

    def test_confidence_threshold_filters_before_fusion(self):
        low = ocr_word("alpha", 0.1, 0.1, 0.2, 0.15, conf=0.2)
        page = Page(4, 768, 768, ocr=(low,))
        with_filter = compress_page(page, CFG, GRID_CFG, self.local, self.globl,
                                    ocr_conf_threshold=0.5)
        bare = self.compress(Page(4, 768, 768))
        np.testing.assert_array_equal(with_filter.tokens, bare.tokens)


class TestTokenReductionRatio:
    def test_reported_ratio(self):
        assert token_reduction_ratio(3210, 576) == pytest.approx(5.57, abs=0.01)

    def test_equal_counts(self):
        assert token_reduction_ratio(576, 576) == 1.0

    def test_ocr_free_baseline(self):
        assert token_reduction_ratio(2880, 576) == pytest.approx(5.0, abs=1e-12)

    def test_zero_compressed_rejected(self):
        with pytest.raises(ValueError):
            token_reduction_ratio(3210, 0)


class TestPageCompressor:
    def test_callable_matches_free_function(self):
        comp = PageCompressor.build()
        rng = np.random.default_rng(19)
        page = random_page(rng, page_id=12, n_ocr=10, width=768, height=1024)
        direct = compress_page(page, comp.encoder, comp.grid,
                               comp.local_params, comp.global_params)
        np.testing.assert_array_equal(comp(page).tokens, direct.tokens)

    def test_budget_for_agrees_with_output(self):
        comp = PageCompressor.build()
        rng = np.random.default_rng(20)
        page = random_page(rng, page_id=2, n_ocr=3)
        assert comp(page).token_count == comp.budget_for(page)

    def test_paper_scale_budget_is_576(self):
        comp = PageCompressor.build(
            encoder=EncoderConfig(d_model=64, global_tokens_per_region=144),
            grid=GridConfig(min_crops=4, max_crops=4),
        )
        page = Page(page_id=1, width_px=768, height_px=1024)
        assert comp(page).token_count == 576
