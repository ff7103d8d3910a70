import math

import numpy as np
import pytest

from voxelcast import Camera, Ray, generate_ray, intersect_clipbox


def norm(v):
    return np.linalg.norm(v)


def test_ray_directions_are_unit(rng):
    cam = Camera(eye=(0, 0, -10), target=(0, 0, 0))
    for _ in range(50):
        px, py = rng.integers(0, 64, 2)
        r = generate_ray(cam, int(px), int(py), 64, 64)
        assert norm(r.direction) == pytest.approx(1.0, abs=1e-12)
        assert np.array_equal(r.origin, [0, 0, -10])


def test_center_pixel_ray_points_forward():
    cam = Camera(eye=(0, 0, -10), target=(0, 0, 5))
    r = generate_ray(cam, 50, 50, 101, 101)  # pixel center on the axis
    assert r.direction == pytest.approx([0, 0, 1], abs=1e-12)


def test_pixel_rays_mirror_across_image_center():
    cam = Camera(eye=(1, 2, -10), target=(1, 2, 0), fov_y=45)
    w = h = 64
    left = generate_ray(cam, 3, 10, w, h)
    right = generate_ray(cam, w - 4, 10, w, h)
    assert left.direction[1] == pytest.approx(right.direction[1], abs=1e-12)
    assert left.direction[0] == pytest.approx(-right.direction[0], abs=1e-12)
    top = generate_ray(cam, 12, 0, w, h)
    bottom = generate_ray(cam, 12, h - 1, w, h)
    assert top.direction[1] == pytest.approx(-bottom.direction[1], abs=1e-12)


def test_vertical_fov_matches_tangent():
    cam = Camera(eye=(0, 0, -10), target=(0, 0, 0), fov_y=60)
    h = w = 101
    r = generate_ray(cam, 50, 0, w, h)
    v_ndc = 1.0 - 2.0 * 0.5 / h
    want = math.atan(v_ndc * math.tan(math.radians(30)))
    got = math.atan2(r.direction[1], r.direction[2])
    assert got == pytest.approx(want, abs=1e-12)
    assert got < math.radians(30)


def test_generate_ray_rejects_outside_pixels():
    cam = Camera(eye=(0, 0, -10), target=(0, 0, 0))
    with pytest.raises(ValueError):
        generate_ray(cam, 64, 0, 64, 64)
    with pytest.raises(ValueError):
        generate_ray(cam, -1, 0, 64, 64)


def test_orbit_zero_is_identity():
    cam = Camera(eye=(3, 4, -12), target=(1, 1, 1))
    r0 = generate_ray(cam, 7, 9, 32, 32)
    cam2 = Camera(eye=(3, 4, -12), target=(1, 1, 1), azimuth=0.0, elevation=0.0, zoom=1.0)
    r1 = generate_ray(cam2, 7, 9, 32, 32)
    assert r0.origin == pytest.approx(r1.origin, abs=1e-9)
    assert r0.direction == pytest.approx(r1.direction, abs=1e-12)


def test_azimuth_rotates_eye_about_target_y():
    cam = Camera(eye=(0, 0, 10), target=(0, 0, 0), azimuth=90.0)
    r = generate_ray(cam, 8, 8, 17, 17)
    assert r.origin == pytest.approx([10, 0, 0], abs=1e-9)
    cam = Camera(eye=(0, 0, 10), target=(0, 0, 0), azimuth=180.0)
    r = generate_ray(cam, 8, 8, 17, 17)
    assert r.origin == pytest.approx([0, 0, -10], abs=1e-9)


def test_elevation_lifts_eye_and_clamps_short_of_pole():
    cam = Camera(eye=(0, 0, 10), target=(0, 0, 0), elevation=30.0)
    r = generate_ray(cam, 8, 8, 17, 17)
    assert r.origin[1] == pytest.approx(10 * math.sin(math.radians(30)), abs=1e-9)
    assert np.linalg.norm(r.origin) == pytest.approx(10.0, abs=1e-9)
    cam = Camera(eye=(0, 0, 10), target=(0, 0, 0), elevation=90.0)
    r = generate_ray(cam, 8, 8, 17, 17)
    assert r.origin[1] < 10.0  # clamped below the pole
    assert r.origin[1] == pytest.approx(10 * math.sin(math.radians(89.9)), abs=1e-9)


def test_zoom_divides_distance():
    cam = Camera(eye=(0, 0, 10), target=(0, 0, 0), zoom=2.0)
    r = generate_ray(cam, 8, 8, 17, 17)
    assert np.linalg.norm(r.origin) == pytest.approx(5.0, abs=1e-9)


def test_orbit_composes_with_zoom():
    cam = Camera(eye=(0, 0, 8), target=(0, 0, 0), azimuth=90.0, zoom=4.0)
    r = generate_ray(cam, 8, 8, 17, 17)
    assert r.origin == pytest.approx([2, 0, 0], abs=1e-9)


def test_camera_validation():
    with pytest.raises(ValueError):
        Camera(eye=(1, 1, 1), target=(1, 1, 1))
    with pytest.raises(ValueError):
        Camera(eye=(0, 0, 1), target=(0, 0, 0), fov_y=0.0)
    with pytest.raises(ValueError):
        Camera(eye=(0, 0, 1), target=(0, 0, 0), fov_y=180.0)
    with pytest.raises(ValueError):
        Camera(eye=(0, 0, 1), target=(0, 0, 0), zoom=0.0)


def ray(origin, direction):
    d = np.asarray(direction, float)
    return Ray(origin=np.asarray(origin, float), direction=d / np.linalg.norm(d))


def test_clipbox_entry_exit_from_outside():
    got = intersect_clipbox(ray((-1, 0.5, 0.5), (1, 0, 0)), (0, 0, 0), (1, 1, 1))
    assert got == pytest.approx((1.0, 2.0), abs=1e-12)


def test_clipbox_inside_origin_clamps_entry_to_zero():
    got = intersect_clipbox(ray((0.5, 0.5, 0.5), (1, 0, 0)), (0, 0, 0), (1, 1, 1))
    assert got == pytest.approx((0.0, 0.5), abs=1e-12)


def test_clipbox_miss_and_behind_are_none():
    assert intersect_clipbox(ray((-1, 5, 0.5), (1, 0, 0)), (0, 0, 0), (1, 1, 1)) is None
    assert intersect_clipbox(ray((2, 0.5, 0.5), (1, 0, 0)), (0, 0, 0), (1, 1, 1)) is None


def test_clipbox_axis_parallel_rays():
    # parallel to x inside the slab
    got = intersect_clipbox(ray((0.5, 0.5, -2), (0, 0, 1)), (0, 0, 0), (1, 1, 1))
    assert got == pytest.approx((2.0, 3.0), abs=1e-12)
    # parallel and outside the slab
    assert intersect_clipbox(ray((1.5, 0.5, -2), (0, 0, 1)), (0, 0, 0), (1, 1, 1)) is None
    # origin exactly on the slab boundary counts as inside
    got = intersect_clipbox(ray((1.0, 0.5, -2), (0, 0, 1)), (0, 0, 0), (1, 1, 1))
    assert got == pytest.approx((2.0, 3.0), abs=1e-12)


def test_clipbox_entry_not_after_exit(rng):
    lo, hi = np.zeros(3), np.full(3, 10.0)
    hits = 0
    for _ in range(1000):
        origin = rng.uniform(-15, 25, 3)
        direction = rng.normal(size=3)
        got = intersect_clipbox(ray(origin, direction), lo, hi)
        if got is not None:
            t0, t1 = got
            assert 0.0 <= t0 <= t1
            hits += 1
    assert hits > 30


def test_clipbox_agrees_with_stepping_oracle(rng):
    # walk each ray in tiny steps; inside-ness must match the interval
    lo, hi = np.zeros(3), np.array([4.0, 5.0, 6.0])
    for _ in range(200):
        origin = rng.uniform(-8, 12, 3)
        direction = rng.normal(size=3)
        r = ray(origin, direction)
        got = intersect_clipbox(r, lo, hi)
        ts = np.linspace(0.01, 25.0, 500)
        pts = r.origin[None, :] + ts[:, None] * r.direction[None, :]
        inside = np.all((pts >= lo) & (pts <= hi), axis=1)
        if got is None:
            assert not inside.any()
        else:
            t0, t1 = got
            for t, inn in zip(ts, inside):
                if inn:
                    assert t0 - 1e-2 <= t <= t1 + 1e-2
