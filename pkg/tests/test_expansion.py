"""Expansion: count law, determinism, range preservation, per-family geometry."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from domainscope.corpus import SampleSet
from domainscope.expansion import (
    ExpansionConfig,
    expand,
    perspective_image,
    rotate_image,
    shift_image,
    transform_one,
)


def image_set(rng, count=3, h=8, w=8, c=3):
    data = rng.random((count, h * w * c)).astype(np.float32)
    return SampleSet((h, w, c), data)


def flat_set(rng, count=3, dims=16):
    return SampleSet((dims,), rng.random((count, dims)).astype(np.float32))


# -- expand laws ------------------------------------------------------------------

def test_zero_variants_is_identity():
    s = flat_set(np.random.default_rng(0))
    out = expand(s, ExpansionConfig(variants_per_sample=0, suite="perturb-only"))
    assert np.array_equal(out.data, s.data)


def test_count_law_matches_announced_size():
    s = flat_set(np.random.default_rng(1), count=50)
    out = expand(s, ExpansionConfig(variants_per_sample=8, suite="perturb-only"))
    assert len(out) == 450


@settings(max_examples=20, deadline=None)
@given(count=st.integers(1, 7), t=st.integers(0, 9), seed=st.integers(0, 1000))
def test_count_law_property(count, t, seed):
    s = flat_set(np.random.default_rng(seed), count=count, dims=4)
    cfg = ExpansionConfig(variants_per_sample=t, seed=seed, suite="perturb-only")
    assert len(expand(s, cfg)) == count * (1 + t)


def test_perturbation_bound():
    s = SampleSet((12,), np.full((4, 12), 0.5, dtype=np.float32))
    cfg = ExpansionConfig(variants_per_sample=8, epsilon=0.03, suite="perturb-only")
    out = expand(s, cfg)
    assert out.data.min() >= 0.47 - 1e-7
    assert out.data.max() <= 0.53 + 1e-7


def test_determinism_bit_identical():
    s = image_set(np.random.default_rng(2))
    cfg = ExpansionConfig(seed=123)
    a = expand(s, cfg)
    b = expand(s, cfg)
    assert np.array_equal(a.data.view(np.uint32), b.data.view(np.uint32))


def test_seed_changes_output():
    s = image_set(np.random.default_rng(3))
    a = expand(s, ExpansionConfig(seed=1))
    b = expand(s, ExpansionConfig(seed=2))
    assert not np.array_equal(a.data, b.data)


@settings(max_examples=15, deadline=None)
@given(seed=st.integers(0, 10_000))
def test_outputs_stay_in_range(seed):
    rng = np.random.default_rng(seed)
    s = image_set(rng, count=2, h=6, w=6, c=1)
    out = expand(s, ExpansionConfig(seed=seed))
    assert out.data.min() >= 0.0
    assert out.data.max() <= 1.0


def test_zero_magnitude_config_is_identity():
    rng = np.random.default_rng(4)
    s = image_set(rng, count=3, h=7, w=5, c=2)
    cfg = ExpansionConfig(
        variants_per_sample=8, epsilon=0.0, max_translate=0.0,
        max_rotate_deg=0.0, max_perspective_jitter=0.0, seed=9,
    )
    out = expand(s, cfg)
    for i in range(len(s)):
        block = out.data[i * 9:(i + 1) * 9]
        assert np.array_equal(block, np.repeat(s.data[i:i + 1], 9, axis=0))


def test_geometric_suite_rejects_flat_vectors():
    s = flat_set(np.random.default_rng(5))
    with pytest.raises(ValueError, match="full-geometric"):
        expand(s, ExpansionConfig(suite="full-geometric"))


def test_original_always_first_per_group():
    s = image_set(np.random.default_rng(6), count=4)
    out = expand(s, ExpansionConfig(variants_per_sample=3, seed=0))
    for i in range(4):
        assert np.array_equal(out.data[i * 4], s.data[i])


# -- transform_one ---------------------------------------------------------------

def test_rotate_zero_degrees_exact():
    img = np.random.default_rng(7).random((9, 9, 3)).astype(np.float32)
    cfg = ExpansionConfig(max_rotate_deg=0.0)
    out = transform_one(img, "rotate", cfg, 11)
    assert np.array_equal(out, img)


def test_rotate_90_equals_index_permutation():
    img = np.random.default_rng(8).random((12, 12, 3)).astype(np.float32)
    rotated = rotate_image(img, 90.0)
    assert np.array_equal(rotated, np.rot90(img, k=-1, axes=(0, 1)))
    rotated_back = rotate_image(img, -90.0)
    assert np.array_equal(rotated_back, np.rot90(img, k=1, axes=(0, 1)))


def test_translate_full_width_blanks_image():
    img = np.random.default_rng(9).random((6, 6, 1)).astype(np.float32)
    assert np.all(shift_image(img, 6, 0) == 0.0)
    assert np.all(shift_image(img, 0, -6) == 0.0)


def test_translate_shift_places_pixels():
    img = np.zeros((4, 4, 1), dtype=np.float32)
    img[1, 1, 0] = 1.0
    out = shift_image(img, 2, 1)
    assert out[2, 3, 0] == 1.0
    assert out.sum() == 1.0


def test_perspective_zero_jitter_is_identity():
    img = np.random.default_rng(10).random((8, 8, 3)).astype(np.float32)
    out = perspective_image(img, np.zeros((4, 2)))
    assert np.array_equal(out, img)


def test_perspective_matches_manual_corner_shift():
    # pulling every source corner 2px right is a pure translation homography
    img = np.random.default_rng(11).random((10, 10, 1)).astype(np.float32)
    offsets = np.array([[2.0, 0.0]] * 4)
    out = perspective_image(img, offsets)
    expected = shift_image(img, -2, 0)
    assert np.allclose(out, expected, atol=1e-6)


def test_perturb_any_shape():
    x = np.full((5,), 0.5, dtype=np.float32)
    cfg = ExpansionConfig(epsilon=0.1)
    out = transform_one(x, "perturb", cfg, 3)
    assert out.shape == x.shape
    assert np.all(np.abs(out.astype(np.float64) - 0.5) <= 0.1 + 1e-9)


def test_geometric_transform_rejects_flat():
    x = np.full((5,), 0.5, dtype=np.float32)
    with pytest.raises(ValueError, match=r"\(H, W, C\)"):
        transform_one(x, "rotate", ExpansionConfig(), 0)


def test_unknown_kind():
    x = np.zeros((2, 2, 1), dtype=np.float32)
    with pytest.raises(ValueError, match="unknown transform kind"):
        transform_one(x, "warp", ExpansionConfig(), 0)


def test_config_validation():
    with pytest.raises(ValueError):
        ExpansionConfig(variants_per_sample=-1)
    with pytest.raises(ValueError):
        ExpansionConfig(epsilon=-0.1)
    with pytest.raises(ValueError):
        ExpansionConfig(suite="mystery")
