"""
Tests for cameras, quadrature, the neural volume renderer and the coordinate rasterizer.
"""

import logging
import time

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays

from utils.config import get_config
from src.assets.rng import RngStream
from src.errors import InvalidInputError
from src.field.decoder import DecoderNet
from src.field.triplane import TriPlaneField
from src.geometry.mesh import icosphere
from src.geometry.morph import MorphParams, build_toy_morph_model, surface_field_for
from src.geometry.surface_field import SurfaceField
from src.render.camera import Camera, camera_vector, make_rays, neutral_camera, orbit_camera
from src.render.raster import mirror_mesh_coords, render_mesh_coords
from src.render.volume import (
    QuadratureSpec,
    composite,
    march,
    render_image,
    render_ray,
    render_rays,
    render_rays_backward,
)
from src.train.bundles import GeneratorBundle
from src.train.config import ModelConfig

logger = logging.getLogger(__name__)


def _scene(res: int = 6, channels: int = 3, seed: int = 0):
    rng = RngStream(seed)
    planes, _ = rng.derive("planes").normal((3, res, res, channels), 0.5)
    tp = TriPlaneField(planes, np.array([[-1.0] * 3, [1.0] * 3]))
    net = DecoderNet.create(channels, [8], 3, rng.derive("decoder"))
    return tp, net


def _constant_query(sigma: float, color):
    color = np.asarray(color, dtype=np.float64)

    def query(points):
        n = len(points)
        return np.tile(color, (n, 1)), np.full(n, sigma), None

    return query


class TestCamera:
    """Tests for camera construction and ray generation."""

    def test_neutral_camera_position(self):
        cam = neutral_camera(16)
        np.testing.assert_allclose(cam.translation, [0.0, 0.0, -2.7], atol=1e-12)
        np.testing.assert_allclose(cam.optical_axis, [0.0, 0.0, 1.0], atol=1e-12)
        assert cam.focal == 16.0

    def test_orbit_looks_at_origin(self):
        cam = orbit_camera(0.4, 0.2, 3.0, 8, 8)
        eye = cam.translation
        np.testing.assert_allclose(np.cross(cam.optical_axis, -eye), 0.0, atol=1e-12)

    def test_invalid_depth_range(self):
        with pytest.raises(InvalidInputError):
            Camera.look_at([0, 0, -3], [0, 0, 0], 8, 8, t_near=2.0, t_far=1.0)

    def test_non_orthonormal_rotation(self):
        with pytest.raises(InvalidInputError):
            Camera(8.0, 4.0, 4.0, 8, 8, np.diag([1.0, 2.0, 1.0]), np.zeros(3), 1.0, 2.0)

    def test_rays_are_unit_and_row_major(self, camera8):
        rays = make_rays(camera8)
        assert len(rays) == 64
        np.testing.assert_allclose(np.linalg.norm(rays.directions, axis=1), 1.0)
        assert rays.pixels[9].tolist() == [1, 1]

    def test_mirror_twice_is_identity(self):
        cam = orbit_camera(0.3, 0.1, 2.7, 8, 8)
        twice = cam.mirrored().mirrored()
        np.testing.assert_allclose(twice.rotation, cam.rotation)
        np.testing.assert_allclose(twice.translation, cam.translation)

    def test_camera_vector(self, camera8):
        vec = camera_vector(camera8)
        assert vec.shape == (12,)
        np.testing.assert_allclose(vec[9:], camera8.translation)

    def test_axis_angle_camera(self):
        cam = Camera.from_axis_angle([0.0, 0.0, 0.0], [0.0, 0.0, -2.7], 8, 8, 8.0, 1.2, 4.2)
        np.testing.assert_allclose(cam.rotation, np.eye(3))


class TestQuadrature:
    """Tests for alpha compositing."""

    @settings(max_examples=40, deadline=None)
    @given(arrays(np.float64, (3, 10), elements=st.floats(0.0, 50.0)))
    def test_transmittance_conservation(self, sigma):
        weights, _, final = composite(sigma, 0.1)
        np.testing.assert_allclose(weights.sum(axis=1) + final, 1.0, atol=1e-12)
        assert np.all(weights >= 0.0)

    def test_transmittance_conservation_many_rays(self):
        sigma, _ = RngStream(11).normal((10_000, 24), 20.0)
        weights, after, final = composite(np.abs(sigma), 0.1)
        np.testing.assert_allclose(weights.sum(axis=1) + final, 1.0, rtol=0, atol=1e-12)
        np.testing.assert_allclose(after[:, -1], final, rtol=0, atol=0)
        assert np.all(weights >= 0.0)

    def test_empty_space(self):
        weights, after, final = composite(np.zeros((2, 5)), 0.3)
        assert np.all(weights == 0.0)
        assert np.all(final == 1.0)

    def test_constant_density(self, camera8):
        rays = make_rays(camera8)
        quad = QuadratureSpec(32)
        result, _ = march(rays, camera8, quad, _constant_query(0.5, [1.0, 0.5, 0.0]))
        expected_t = np.exp(-0.5 * (camera8.t_far - camera8.t_near))
        np.testing.assert_allclose(result.transmittance, expected_t, rtol=1e-12)
        np.testing.assert_allclose(result.features[:, 1], 0.5 * (1.0 - expected_t), rtol=1e-12)
        assert np.all((result.depth > camera8.t_near) & (result.depth < camera8.t_far))

    def test_stratified_needs_stream(self, camera8):
        quad = QuadratureSpec(8, stratified=True)
        with pytest.raises(InvalidInputError):
            march(make_rays(camera8), camera8, quad, _constant_query(1.0, [1.0]))

    def test_too_few_samples(self):
        with pytest.raises(InvalidInputError):
            QuadratureSpec(1)


class TestNeuralRender:
    """Tests for rendering a tri-plane field."""

    def test_thread_count_does_not_change_bytes(self):
        tp, net = _scene()
        cam = neutral_camera(20)
        quad = QuadratureSpec(8, stratified=True, jitter=RngStream(3))
        one, depth_one = render_image(tp, net, None, cam, quad, threads=1)
        many, depth_many = render_image(tp, net, None, cam, quad, threads=3)
        assert one.pixels.tobytes() == many.pixels.tobytes()
        assert depth_one.pixels.tobytes() == depth_many.pixels.tobytes()

    def test_image_shapes(self, camera8):
        tp, net = _scene()
        features, depth = render_image(tp, net, None, camera8, QuadratureSpec(8))
        assert features.pixels.shape == (8, 8, 3)
        assert depth.pixels.shape == (8, 8, 1)

    def test_single_ray_matches_image(self, camera8):
        tp, net = _scene()
        quad = QuadratureSpec(8)
        features, _ = render_image(tp, net, None, camera8, quad)
        rays = make_rays(camera8)
        feature, _, _ = render_ray(tp, net, None, (rays.origins[10], rays.directions[10]), camera8, quad)
        np.testing.assert_allclose(feature, features.pixels[1, 2], rtol=1e-5, atol=1e-6)

    def test_identity_field_changes_nothing(self, camera8):
        tp, net = _scene()
        sphere = icosphere(1, radius=0.8)
        quad = QuadratureSpec(8)
        plain, _ = render_image(tp, net, None, camera8, quad)
        deformed, _ = render_image(tp, net, SurfaceField.identity(sphere), camera8, quad)
        assert plain.pixels.tobytes() == deformed.pixels.tobytes()

    def test_deformation_changes_image(self, camera8):
        tp, net = _scene()
        sphere = icosphere(1, radius=0.8)
        sf = SurfaceField(sphere, sphere.translated([0.3, 0.0, 0.0]))
        quad = QuadratureSpec(8)
        plain, _ = render_image(tp, net, None, camera8, quad)
        deformed, _ = render_image(tp, net, sf, camera8, quad)
        assert not np.array_equal(plain.pixels, deformed.pixels)

    def test_plane_gradient_matches_finite_difference(self):
        tp, net = _scene(res=4)
        cam = neutral_camera(4)
        quad = QuadratureSpec(6)
        rays = make_rays(cam)
        grad_out, _ = RngStream(9).normal((len(rays), 3))
        out = render_rays(tp, net, None, rays, cam, quad, keep_cache=True)
        grad_planes, _ = render_rays_backward(tp, net, out, grad_out)

        def objective(planes):
            shifted = TriPlaneField(planes, tp.bounds)
            return np.sum(render_rays(shifted, net, None, rays, cam, quad).features * grad_out)

        h = 1e-6
        for index in [(0, 1, 2, 0), (1, 2, 1, 2), (2, 2, 2, 1)]:
            up, down = tp.planes.copy(), tp.planes.copy()
            up[index] += h
            down[index] -= h
            fd = (objective(up) - objective(down)) / (2 * h)
            assert grad_planes[index] == pytest.approx(fd, rel=1e-4, abs=1e-8)


    @pytest.mark.slow
    def test_deformed_render_is_interactive(self):
        """64x64 render through a head surface field on one thread, BVH already built."""
        g = GeneratorBundle.create(ModelConfig(), RngStream(0))
        w = g.style(RngStream(1).normal(g.cfg.latent_dim)[0])
        model = build_toy_morph_model(seed=0)
        theta = np.array([0.3, -0.2, 0.0, 0.15, 0.0, 0.0])
        sf = surface_field_for(model, MorphParams(np.zeros(model.shape_dim), theta, np.zeros(model.expr_dim)))
        cam = neutral_camera(64)
        g.render_image(w, neutral_camera(8), sf)
        start = time.perf_counter()
        image = g.render_image(w, cam, sf, threads=1)
        elapsed = time.perf_counter() - start
        logger.info(f"64x64 deformed render: {elapsed:.3f}s")
        assert image.pixels.shape == (64, 64, g.cfg.feature_channels)
        assert elapsed < 1.0

class TestRasterizer:
    """Tests for the mesh coordinate image."""

    def test_sphere_coverage(self):
        sphere = icosphere(2)
        cam = neutral_camera(16)
        coords = render_mesh_coords(sphere, cam).pixels
        sentinel = np.float32(get_config().BACKGROUND_SENTINEL)
        assert coords[0, 0, 0] == sentinel
        center = coords[8, 8]
        assert center[2] < 0  # front of the sphere faces the camera at -z
        radius = np.linalg.norm(coords[coords[:, :, 0] != sentinel], axis=1)
        assert np.all((radius > 0.95) & (radius < 1.0 + 1e-5))

    def test_mirror_matches_mirrored_scene(self):
        sphere = icosphere(2).with_vertices(icosphere(2).vertices * np.array([0.8, 1.0, 0.9]) + [0.2, 0, 0])
        cam = orbit_camera(0.3, 0.1, 2.7, 16, 16)
        mirrored = mirror_mesh_coords(render_mesh_coords(sphere, cam)).pixels
        direct = render_mesh_coords(sphere.mirrored_x(), cam.mirrored()).pixels
        sentinel = np.float32(get_config().BACKGROUND_SENTINEL)
        covered_a = mirrored[:, :, 0] != sentinel
        covered_b = direct[:, :, 0] != sentinel
        assert np.mean(covered_a == covered_b) > 0.95
        both = covered_a & covered_b
        np.testing.assert_allclose(mirrored[both], direct[both], atol=1e-4)
