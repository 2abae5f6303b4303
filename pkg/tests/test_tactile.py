import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from skilltransfer.tactile import (GradientField, PerceptionConfig, PerceptionError, ShapePose, Stripes, blank_image,
                                   contour_rmse, edge_pose, extract_contours, gaussian_kernel, gaussian_smooth,
                                   gradient_field, hough_lines, hysteresis, nonmax_suppress, synth_tactile_image,
                                   texture_threshold)
from skilltransfer.tactile.bench import run_benchmark
from skilltransfer.tactile.contours import thresholds
from skilltransfer.tactile.io import contours_from_json, contours_to_json, read_image, svg_overlay, write_image
from skilltransfer.tactile.synth import shape_geometry

BIN = math.radians(1.0)


def ang_diff(a, b, period=math.pi):
    d = (a - b) % period
    return min(d, period - d)


# texture threshold

def test_texture_threshold_examples():
    G = np.zeros((4, 4))
    G[0, 0], G[1, 2], G[3, 3] = 10, 20, 33
    assert texture_threshold(G) == 21
    assert texture_threshold(np.full((3, 3), 5.0)) == 5
    with pytest.raises(PerceptionError):
        texture_threshold(np.zeros((3, 3)))


@given(st.lists(st.floats(0.01, 1000), min_size=1, max_size=50))
def test_texture_threshold_is_floor_of_mean(vals):
    G = np.zeros(len(vals) + 3)
    G[:len(vals)] = vals
    assert texture_threshold(G) == math.floor(sum(vals) / len(vals)) or \
        abs(texture_threshold(G) - math.floor(np.mean(vals))) == 0


# smoothing and gradients

def test_kernel_sums_to_one_and_rejects_even():
    for size, sigma in [(3, 0.5), (5, 1.0), (7, 2.0)]:
        assert abs(gaussian_kernel(size, sigma).sum() - 1.0) <= 1e-12
    with pytest.raises(PerceptionError):
        gaussian_kernel(4, 1.0)
    with pytest.raises(PerceptionError):
        gaussian_kernel(5, 0.0)


def test_smoothing_constant_and_impulse():
    assert np.allclose(gaussian_smooth(np.full((9, 9), 7.0)), 7.0, atol=1e-12)
    img = np.zeros((11, 11))
    img[5, 5] = 1.0
    S = gaussian_smooth(img)
    assert S.argmax() == 5 * 11 + 5
    k = gaussian_kernel(5, 1.0)
    assert np.allclose(S[3:8, 3:8], k, atol=1e-15)


def test_gradient_ramps():
    xx = np.tile(np.arange(8.0), (6, 1))
    g = gradient_field(xx)
    inner = (slice(1, -1), slice(1, -1))
    assert np.allclose(g.direction[inner], 0.0)
    assert np.allclose(g.magnitude[inner], 2.0)
    assert np.all(g.magnitude[0] == 0) and np.all(g.magnitude[:, -1] == 0)
    gv = gradient_field(xx.T.copy())
    assert np.allclose(gv.direction[inner], math.pi / 2)
    assert not gradient_field(np.ones((5, 5))).magnitude.any()
    with pytest.raises(PerceptionError):
        gradient_field(np.ones((2, 5)))


# non-maximum suppression

def test_nms_thins_sampled_step_to_one_pixel():
    # step whose edge passes through pixel centres of column 6
    S = np.zeros((12, 14))
    S[:, 6] = 50.0
    S[:, 7:] = 100.0
    N = nonmax_suppress(gradient_field(S))
    cols = set(np.nonzero(N[1:-1].any(axis=0))[0])
    assert cols == {6}


def test_nms_constant_and_isolated():
    assert not nonmax_suppress(gradient_field(np.full((6, 6), 3.0))).any()
    G = np.zeros((7, 7))
    G[3, 3] = 9.0
    for theta in (0.0, math.pi / 4, math.pi / 2, 3 * math.pi / 4, -math.pi / 3):
        N = nonmax_suppress(GradientField(G, np.full(G.shape, theta), G))
        assert N[3, 3] == 9.0 and N.sum() == 9.0


# hysteresis

def test_hysteresis_cases():
    N = np.full((4, 4), 10.0)
    assert len(hysteresis(N, 5, 2)) == 16
    N = np.zeros((6, 8))
    N[1, 1:6] = 3.0  # weak chain
    N[1, 6] = 9.0  # touches one strong pixel
    N[4, 1:4] = 3.0  # weak island
    C = hysteresis(N, 8, 2)
    kept = {tuple(p) for p in C.points}
    assert kept == {(x, 1) for x in range(1, 7)}
    with pytest.raises(PerceptionError):
        hysteresis(N, 1, 2)


def test_hysteresis_diagonal_connectivity():
    N = np.zeros((5, 5))
    N[1, 1], N[2, 2], N[3, 3] = 9, 3, 3
    assert len(hysteresis(N, 8, 2)) == 3


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10_000), st.floats(0.5, 3.0), st.floats(0.0, 2.0))
def test_raising_k_high_shrinks_output(seed, k_lo, extra):
    rng = np.random.default_rng(seed)
    N = rng.exponential(10.0, (30, 30)) * (rng.random((30, 30)) < 0.4)
    T = 10.0
    a = hysteresis(N, (k_lo + 0.5) * T, k_lo * T).mask()
    b = hysteresis(N, (k_lo + 0.5 + extra) * T, k_lo * T).mask()
    assert not (b & ~a).any()
    assert not ((N >= (k_lo + 0.5 + extra) * T) & ~(N >= (k_lo + 0.5) * T)).any()


# thresholds

def test_threshold_ratios_exact(rng):
    for _ in range(10):
        img, _ = synth_tactile_image("circle", texture=Stripes(angle=rng.uniform(0, math.pi)), rng=rng)
        kh, kl = rng.uniform(1.0, 3.0), rng.uniform(0.2, 1.0)
        C, _ = extract_contours(img, PerceptionConfig(k_high=kh, k_low=kl))
        assert C.low <= C.high
        assert C.high == kh * C.texture and C.low == kl * C.texture


def test_fixed_method_uses_constants():
    assert thresholds(13.0, PerceptionConfig(method="fixed")) == (60.0, 30.0)
    with pytest.raises(ValueError):
        PerceptionConfig(method="magic")


# end to end

def test_single_ridge_concentrated_with_one_dominant_line(rng):
    from scipy import ndimage
    for deg in (0.0, 35.0, 45.0, 100.0):
        pose = ShapePose(160, 120, math.radians(deg))
        clean, _ = synth_tactile_image("rect-line", pose, texture=None, noise=0.0)
        ridge = clean >= 100 + 0.5 * (255 - 100)  # rendered ridge above half height
        dist = ndimage.distance_transform_edt(~ridge)
        img, _ = synth_tactile_image("rect-line", pose, texture=None, noise=0.5, rng=rng)
        C, H = extract_contours(img)
        assert len(C) > 100
        assert dist[C.points[:, 1], C.points[:, 0]].max() <= 2.0
        dom = H.dominant()
        assert ang_diff(dom.theta, pose.angle + math.pi / 2) <= BIN
        votes = sorted((l.votes for l in H), reverse=True)
        assert len(votes) == 1 or votes[0] >= 3 * votes[1]


def test_blank_frame_gives_no_contour():
    for seed in range(5):
        img = blank_image(noise=1.0, rng=seed)
        C, H = extract_contours(img)
        assert len(C) < 0.001 * img.size
        assert len(H) == 0


def test_constant_frame_errors():
    with pytest.raises(PerceptionError):
        extract_contours(np.full((20, 20), 80, np.uint8))


def test_boundary_beats_stripes(rng):
    for k in range(12):
        edge = rng.uniform(0, math.pi)
        stripes = edge + rng.uniform(math.radians(20), math.radians(160))
        img, _ = synth_tactile_image("rect-line", ShapePose(160, 120, edge), Stripes(angle=stripes), rng=rng)
        _, H = extract_contours(img)
        theta = H.dominant().theta
        assert ang_diff(theta, edge + math.pi / 2) <= BIN
        assert ang_diff(theta, stripes + math.pi / 2) > 10 * BIN


def test_rotation_equivariance(rng):
    for _ in range(6):
        angle = rng.uniform(0, math.pi)
        img, _ = synth_tactile_image("rect-line", ShapePose(120, 120, angle), Stripes(angle=angle), rng=rng,
                                     width=240, height=240)
        t0 = extract_contours(img)[1].dominant().theta
        t1 = extract_contours(np.rot90(img).copy())[1].dominant().theta
        assert ang_diff(t1, t0 + math.pi / 2) <= BIN + 1e-9


# Hough

def test_hough_collinear_points():
    t = np.arange(50)
    d = np.array([math.cos(math.radians(30)), math.sin(math.radians(30))])
    pts = np.rint(np.array([100.0, 60.0]) + t[:, None] * d).astype(int)
    H = hough_lines(pts, min_votes=20)
    assert len(H) == 1
    # the line runs at 30 degrees, so its normal sits at 120
    assert ang_diff(H[0].theta, math.radians(120)) <= BIN


def test_hough_square_outline():
    s = np.arange(20, 101)
    pts = np.concatenate([np.c_[s, np.full_like(s, 20)], np.c_[s, np.full_like(s, 100)],
                          np.c_[np.full_like(s, 20), s], np.c_[np.full_like(s, 100), s]])
    H = hough_lines(pts, min_votes=40)
    thetas = sorted({round(math.degrees(l.theta)) % 180 for l in H})
    assert thetas == [0, 90]
    assert len(H) == 4
    assert all(0 <= l.theta < math.pi for l in H)
    assert all(abs(np.linalg.norm(l.direction) - 1) < 1e-12 for l in H)


def test_hough_empty_errors():
    with pytest.raises(ValueError):
        hough_lines(np.zeros((0, 2), int))


# RMSE

def test_rmse_examples():
    truth = [np.array([[0.0, 10.0], [100.0, 10.0]])]
    on = np.c_[np.arange(0, 100, 5), np.full(20, 10)]
    assert contour_rmse(on, truth) == 0.0
    off = on + [0, 3]
    assert contour_rmse(off, truth) == pytest.approx(3.0, abs=1e-12)
    with pytest.raises(PerceptionError):
        contour_rmse(np.zeros((0, 2)), truth)


def test_rmse_against_dense_sampling_oracle(rng):
    poly = [np.array([[10.0, 10.0], [200.0, 50.0], [120.0, 200.0]])]
    pts = rng.uniform(0, 240, (200, 2))
    t = np.linspace(0, 1, 20001)[:, None]
    dense = np.vstack([a + t * (b - a) for a, b in zip(poly[0][:-1], poly[0][1:])])
    d = np.sqrt(((pts[:, None] - dense[None]) ** 2).sum(-1)).min(1)
    assert contour_rmse(pts, poly) == pytest.approx(math.sqrt(np.mean(d ** 2)), abs=1e-3)


# synthetic generator

def test_circle_truth_is_360_segments():
    img, truth = synth_tactile_image("circle", size=60.0, rng=0)
    assert img.shape == (240, 320) and img.dtype == np.uint8
    assert len(truth) == 1 and len(truth[0]) == 361
    r = np.hypot(truth[0][:, 0] - 160, truth[0][:, 1] - 120)
    assert np.allclose(r, 60.0)


def test_line_bundle_truth_has_five_segments():
    _, truth = synth_tactile_image("line-bundle", rng=0)
    assert len(truth) == 5 and all(len(p) == 2 for p in truth)


def test_edge_pose_clips_truth():
    pose = edge_pose("pentagon")
    full = shape_geometry("pentagon", pose).polylines[0]
    _, truth = synth_tactile_image("pentagon", pose, rng=0)
    pts = np.vstack(truth)
    assert pts[:, 0].max() <= 319 + 1e-9
    xs = full[:, 0]
    assert (xs.max() - 319) / (xs.max() - xs.min()) == pytest.approx(0.4)
    bundle = edge_pose("line-bundle")
    _, t2 = synth_tactile_image("line-bundle", bundle, rng=0)
    assert len(t2) == 3


def test_shape_out_of_frame_errors():
    with pytest.raises(ValueError):
        synth_tactile_image("circle", ShapePose(2000, 2000), size=10)
    with pytest.raises(ValueError):
        synth_tactile_image("hexagon")


def test_generator_is_deterministic():
    a, _ = synth_tactile_image("pentagon", rng=7)
    b, _ = synth_tactile_image("pentagon", rng=7)
    assert np.array_equal(a, b)


# files

def test_image_io_pgm_and_png(tmp_path, rng):
    img, _ = synth_tactile_image("acute-angle", rng=rng)
    for name in ("f.pgm", "f.png"):
        write_image(tmp_path / name, img)
        assert np.array_equal(read_image(tmp_path / name), img)
    assert (tmp_path / "f.pgm").read_bytes()[:2] == b"P5"


def test_contour_json_round_trip(rng):
    img, _ = synth_tactile_image("right-angle", rng=rng)
    C, H = extract_contours(img)
    text = contours_to_json(C, H)
    doc = json.loads(text)
    assert set(doc) >= {"points", "lines", "thresholds"}
    assert set(doc["thresholds"]) == {"texture", "high", "low"}
    C2, H2 = contours_from_json(text)
    assert contours_to_json(C2, H2) == text


def test_svg_overlay(tmp_path, rng):
    img, _ = synth_tactile_image("rect-line", rng=rng)
    C, H = extract_contours(img)
    svg = svg_overlay(img, C, H, tmp_path / "o.svg")
    assert svg.count("<circle") == len(C)
    assert svg.count("<line ") == len(H)
    assert (tmp_path / "o.svg").read_text() == svg


def test_small_benchmark_csv():
    res = run_benchmark(seeds=2, shapes=("rect-line", "pentagon"))
    lines = res.to_csv().splitlines()
    assert lines[0] == "shape,condition,method,rmse"
    assert len(lines) == 1 + 2 * 2 + 2
    assert res.to_csv() == run_benchmark(seeds=2, shapes=("rect-line", "pentagon")).to_csv()
