import math

import numpy as np
import pytest

from buildingmesh import (
    ImageGray,
    ImageRGB,
    SsimParams,
    UnsupportedMetricError,
    VideoScore,
    lpips,
    luminance,
    psnr,
    ssim,
    video_ssim,
)

from helpers import brute_ssim

RNG = np.random.default_rng(7)


def rand_rgb(h=24, w=32, lo=0, hi=256):
    return ImageRGB(RNG.integers(lo, hi, size=(h, w, 3), dtype=np.uint8))


def flat_rgb(value, h=24, w=32):
    return ImageRGB(np.full((h, w, 3), value, dtype=np.uint8))


# ---------------------------------------------------------------------------
# psnr


def test_psnr_identical_images_is_infinite():
    a = rand_rgb()
    assert psnr(a, a) == math.inf


def test_psnr_uniform_offset_matches_closed_form():
    a = flat_rgb(100)
    b = flat_rgb(116)
    assert psnr(a, b) == pytest.approx(10.0 * math.log10(65025.0 / 256.0), abs=1e-9)


def test_psnr_maximal_difference_is_zero_db():
    assert psnr(flat_rgb(0), flat_rgb(255)) == pytest.approx(0.0, abs=1e-12)


def test_psnr_rejects_dimension_mismatch():
    with pytest.raises(ValueError, match="dimensions"):
        psnr(flat_rgb(0, h=8, w=8), flat_rgb(0, h=8, w=9))


def test_psnr_decreases_with_noise_amplitude():
    base = RNG.integers(70, 180, size=(40, 40, 3)).astype(np.int64)
    scores = []
    for amp in [1, 4, 16, 64]:
        noise = RNG.integers(-amp, amp + 1, size=base.shape)
        noisy = np.clip(base + noise, 0, 255).astype(np.uint8)
        scores.append(psnr(ImageRGB(base.astype(np.uint8)), ImageRGB(noisy)))
    assert all(x > y for x, y in zip(scores, scores[1:]))


# ---------------------------------------------------------------------------
# luminance


def test_luminance_uses_bt601_weights():
    img = ImageRGB(
        np.array(
            [[[255, 0, 0], [0, 255, 0]], [[0, 0, 255], [255, 255, 255]]],
            dtype=np.uint8,
        )
    )
    lum = luminance(img)
    assert lum == pytest.approx(
        np.array([[0.299 * 255, 0.587 * 255], [0.114 * 255, 255.0]])
    )


# ---------------------------------------------------------------------------
# ssim


def test_ssim_of_an_image_with_itself_is_one():
    a = rand_rgb(20, 26)
    assert ssim(a, a) == pytest.approx(1.0, abs=1e-9)
    plane = RNG.uniform(0, 255, size=(15, 17))
    assert ssim(plane, plane) == pytest.approx(1.0, abs=1e-9)


def test_ssim_is_symmetric():
    a = rand_rgb(18, 21)
    b = rand_rgb(18, 21)
    assert abs(ssim(a, b) - ssim(b, a)) <= 1e-12


def test_ssim_of_constant_images_matches_closed_form():
    c1 = (0.01 * 255.0) ** 2
    expected = c1 / (255.0**2 + c1)
    assert ssim(flat_rgb(0), flat_rgb(255)) == pytest.approx(expected, abs=1e-9)


def test_ssim_near_one_under_tiny_noise():
    base = RNG.integers(60, 190, size=(32, 32), dtype=np.uint8)
    noisy = (base.astype(np.int64) + RNG.integers(-1, 2, size=base.shape)).astype(
        np.uint8
    )
    val = ssim(ImageGray(base), ImageGray(noisy))
    assert 0.9 < val < 1.0


def test_ssim_matches_per_window_oracle():
    for _ in range(4):
        a = RNG.uniform(0, 255, size=(13, 16))
        b = np.clip(a + RNG.normal(0, 12, size=a.shape), 0, 255)
        assert ssim(a, b) == pytest.approx(brute_ssim(a, b), abs=1e-9)


def test_ssim_oracle_agreement_with_custom_params():
    params = SsimParams(window=5, sigma=0.8, dynamic_range=1.0)
    a = RNG.uniform(0, 1, size=(9, 9))
    b = RNG.uniform(0, 1, size=(9, 9))
    expected = brute_ssim(a, b, size=5, sigma=0.8, dynamic_range=1.0)
    assert ssim(a, b, params) == pytest.approx(expected, abs=1e-9)


def test_ssim_reduces_rgb_to_luminance_first():
    a = rand_rgb(16, 16)
    b = rand_rgb(16, 16)
    assert ssim(a, b) == pytest.approx(ssim(luminance(a), luminance(b)), abs=1e-12)


def test_ssim_rejects_undersized_images():
    with pytest.raises(ValueError, match="smaller"):
        ssim(np.zeros((10, 30)), np.zeros((10, 30)))


def test_ssim_rejects_shape_mismatch():
    with pytest.raises(ValueError, match="dimensions"):
        ssim(np.zeros((12, 12)), np.zeros((12, 13)))


def test_ssim_params_validation():
    with pytest.raises(ValueError, match="odd"):
        SsimParams(window=8)
    with pytest.raises(ValueError, match="odd"):
        SsimParams(window=1)
    with pytest.raises(ValueError):
        SsimParams(sigma=0.0)
    with pytest.raises(ValueError):
        SsimParams(k1=0.0)
    with pytest.raises(ValueError):
        SsimParams(dynamic_range=0.0)


def test_ssim_kernel_is_normalized():
    assert SsimParams().kernel1d().sum() == pytest.approx(1.0, abs=1e-12)
    assert SsimParams(window=7, sigma=0.9).kernel1d().sum() == pytest.approx(1.0)


# ---------------------------------------------------------------------------
# video


def test_video_ssim_scores_each_frame_independently():
    a_frames = [rand_rgb(14, 14) for _ in range(4)]
    b_frames = [rand_rgb(14, 14) for _ in range(4)]
    score = video_ssim(a_frames, b_frames)
    assert score.per_frame == [ssim(fa, fb) for fa, fb in zip(a_frames, b_frames)]
    assert score.mean == pytest.approx(np.mean(score.per_frame))
    assert score.min == pytest.approx(np.min(score.per_frame))
    assert score.min <= score.mean + 1e-12


def test_video_ssim_of_identical_sequences_is_one():
    frames = [rand_rgb(12, 12) for _ in range(3)]
    score = video_ssim(frames, frames)
    assert score.mean == pytest.approx(1.0, abs=1e-9)
    assert score.min == pytest.approx(1.0, abs=1e-9)


def test_one_bad_frame_drags_the_minimum_below_the_mean():
    frames = [flat_rgb(128) for _ in range(5)]
    damaged = list(frames)
    damaged[2] = flat_rgb(255)
    score = video_ssim(frames, damaged)
    assert score.min < score.mean


def test_video_ssim_validates_sequences():
    frames = [flat_rgb(1)]
    with pytest.raises(ValueError, match="lengths"):
        video_ssim(frames, frames * 2)
    with pytest.raises(ValueError, match="empty"):
        video_ssim([], [])


def test_video_score_rejects_inconsistent_aggregates():
    with pytest.raises(ValueError, match="min exceeds mean"):
        VideoScore([0.5], mean=0.4, min=0.6)
    with pytest.raises(ValueError, match="empty"):
        VideoScore([], mean=0.0, min=0.0)


# ---------------------------------------------------------------------------
# lpips stub


def test_lpips_is_explicitly_unsupported():
    with pytest.raises(UnsupportedMetricError, match="perceptual model"):
        lpips(flat_rgb(0), flat_rgb(0))
