import numpy as np
import pytest

from voxelcast import (
    Camera,
    ClipBox,
    Light,
    RenderMode,
    RenderSettings,
    Scene,
    ThresholdWindow,
    TransferFunction,
    default_scene,
    make_phantom,
    render_frame,
)


def opaque_lut():
    return TransferFunction(
        points=[
            (-1000.0, (0.1, 0.2, 0.3, 1.0)),
            (0.0, (0.9, 0.8, 0.7, 1.0)),
            (1000.0, (1.0, 1.0, 1.0, 1.0)),
        ]
    )


@pytest.fixture(scope="module")
def sphere32():
    return make_phantom("sphere", 32, radius=10)


@pytest.fixture(scope="module")
def sphere_scene(sphere32):
    return default_scene(sphere32)


def small(**kw):
    kw.setdefault("width", 64)
    kw.setdefault("height", 64)
    return RenderSettings(**kw)


def test_empty_volume_renders_background_only():
    vol = make_phantom("empty", 16)
    scene = default_scene(vol)
    bg = (0.25, 0.5, 0.75, 1.0)
    fb = render_frame(vol, scene, small(background=bg))
    want = np.array([64, 128, 191, 255], np.uint8)
    assert (fb.pixels == want).all()
    # octree skips the whole volume without a single fetch
    assert fb.sample_count == 0


def test_empty_volume_brute_force_same_image_more_samples():
    vol = make_phantom("empty", 16)
    scene = default_scene(vol)
    a = render_frame(vol, scene, small(use_octree=True))
    b = render_frame(vol, scene, small(use_octree=False))
    assert np.array_equal(a.pixels, b.pixels)
    assert b.sample_count > 0


def test_frame_buffer_shape_and_metadata(sphere32, sphere_scene):
    fb = render_frame(sphere32, sphere_scene, small(width=40, height=24))
    assert fb.pixels.shape == (24, 40, 4)
    assert fb.pixels.dtype == np.uint8
    assert fb.width == 40 and fb.height == 24
    assert fb.render_ms > 0
    assert fb.sample_count > 0
    assert fb.rgb().shape == (24, 40, 3)


def test_sphere_center_brighter_than_silhouette_edge(sphere32):
    eye = (16.0, 16.0, -30.0)
    scene = Scene(
        camera=Camera(eye=eye, target=(16.0, 16.0, 16.0)),
        light=Light(position=eye),
    )
    fb = render_frame(sphere32, scene, small(background=(0, 0, 0, 0)))
    hits = fb.pixels[:, :, 3] == 255
    assert hits.any() and not hits.all()
    center = fb.pixels[32, 32, :3].astype(int).sum()
    assert hits[32, 32]
    # walk the center row outward to the last hit pixel (silhouette edge)
    cols = np.nonzero(hits[32])[0]
    edge = cols.max()
    edge_val = fb.pixels[32, edge, :3].astype(int).sum()
    assert center > edge_val * 2


def test_all_opaque_composited_matches_surface_exactly(sphere32, sphere_scene):
    scene = Scene(
        camera=sphere_scene.camera,
        light=sphere_scene.light,
        window=sphere_scene.window,
        transfer=opaque_lut(),
    )
    a = render_frame(sphere32, scene, small(mode=RenderMode.SURFACE))
    b = render_frame(sphere32, scene, small(mode=RenderMode.COMPOSITED))
    assert np.array_equal(a.pixels, b.pixels)


def test_composited_translucent_differs_from_surface(sphere32, sphere_scene):
    a = render_frame(sphere32, sphere_scene, small(mode=RenderMode.SURFACE))
    b = render_frame(sphere32, sphere_scene, small(mode=RenderMode.COMPOSITED))
    assert not np.array_equal(a.pixels, b.pixels)


def test_worker_count_does_not_change_pixels(sphere32, sphere_scene):
    frames = [
        render_frame(sphere32, sphere_scene, small(), workers=n).pixels for n in (1, 2, 4)
    ]
    assert np.array_equal(frames[0], frames[1])
    assert np.array_equal(frames[0], frames[2])


def test_tile_height_does_not_change_pixels(sphere32, sphere_scene):
    a = render_frame(sphere32, sphere_scene, small(tile_rows=5))
    b = render_frame(sphere32, sphere_scene, small(tile_rows=64))
    assert np.array_equal(a.pixels, b.pixels)


def test_octree_skipping_is_bit_identical_to_brute_force(sphere32, sphere_scene):
    a = render_frame(sphere32, sphere_scene, small(use_octree=True))
    b = render_frame(sphere32, sphere_scene, small(use_octree=False))
    assert np.array_equal(a.pixels, b.pixels)
    assert a.sample_count < b.sample_count


def test_octree_identity_holds_on_shell_and_band_window():
    vol = make_phantom("shell", 32, r_inner=8, r_outer=12)
    scene = default_scene(vol)
    for window in (ThresholdWindow(500, 4095), ThresholdWindow(400, 600)):
        s = Scene(camera=scene.camera, light=scene.light, window=window)
        a = render_frame(vol, s, small(use_octree=True))
        b = render_frame(vol, s, small(use_octree=False))
        assert np.array_equal(a.pixels, b.pixels)


def test_adaptive_sampling_cuts_samples_with_tiny_image_deviation():
    # small sphere in a mostly-empty grid: long ray stretches are strideable
    vol = make_phantom("sphere", 64, radius=8)
    scene = default_scene(vol)
    uniform = render_frame(vol, scene, small(use_octree=False))
    adaptive = render_frame(
        vol, scene, small(use_octree=False, use_adaptive=True, adaptive_factor=4)
    )
    assert adaptive.sample_count < 0.6 * uniform.sample_count
    diff = np.abs(adaptive.pixels.astype(int) - uniform.pixels.astype(int))
    assert diff.max() <= 2


def test_clipbox_shrink_turns_clipped_pixels_to_background(sphere32, sphere_scene):
    bg = (0.0, 0.0, 0.25, 1.0)
    full = render_frame(sphere32, sphere_scene, small(background=bg))
    half_ext = sphere32.extent[0] / 2
    scene = Scene(
        camera=sphere_scene.camera,
        light=sphere_scene.light,
        clip=ClipBox(lo=(0, 0, 0), hi=(half_ext, 1e9, 1e9)),
    )
    clipped = render_frame(sphere32, scene, small(background=bg))
    bg_px = np.array([0, 0, 64, 255], np.uint8)
    # screen-left columns look at world x > half extent, now clipped
    assert (clipped.pixels[32, :8] == bg_px).all()
    assert not (full.pixels[32] == bg_px).all(axis=1).all()
    # clipping only removes hits: pixels that were background stay background
    full_is_bg = (full.pixels == bg_px).all(axis=2)
    clip_is_bg = (clipped.pixels == bg_px).all(axis=2)
    assert (~full_is_bg | clip_is_bg).all()


def test_camera_inside_shell_shades_zero_gradient_hits_black():
    vol = make_phantom("shell", 32, r_inner=10, r_outer=14)
    center = tuple(e / 2 for e in vol.extent)
    eye = (center[0] + 12.0, center[1], center[2])  # mid-shell, inside material
    scene = Scene(
        camera=Camera(eye=eye, target=center),
        light=Light(position=(100.0, 100.0, 100.0)),
    )
    fb = render_frame(vol, scene, small(background=(0, 0, 0.25, 1)))
    # forward rays start inside material: immediate hit, flat neighborhood,
    # zero gradient, black pixel
    assert (fb.pixels[32, 32] == np.array([0, 0, 0, 255], np.uint8)).all()
    assert (fb.pixels[31:34, 31:34, :3] == 0).all()


def test_surface_alpha_marks_hits_opaque(sphere32, sphere_scene):
    fb = render_frame(sphere32, sphere_scene, small(background=(0, 0, 0, 0.0)))
    alphas = np.unique(fb.pixels[:, :, 3])
    assert set(alphas.tolist()) <= {0, 255}
    assert 255 in alphas and 0 in alphas


def test_render_settings_validation():
    with pytest.raises(ValueError):
        RenderSettings(width=0)
    with pytest.raises(ValueError):
        RenderSettings(fine_step=2.0, coarse_step=1.0)
    with pytest.raises(ValueError):
        RenderSettings(mode="xray")
    with pytest.raises(ValueError):
        RenderSettings(adaptive_factor=0)
    with pytest.raises(ValueError):
        RenderSettings(background=(2, 0, 0, 1))


def test_default_scene_places_eye_outside_and_light_at_eye(sphere32):
    scene = default_scene(sphere32)
    assert scene.camera.eye[2] < 0  # outside the volume box
    assert tuple(scene.light.position) == tuple(scene.camera.eye)
    assert scene.window.low == 500.0 and scene.window.high == 4095.0
