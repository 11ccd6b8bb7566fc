import numpy as np
import pytest

from panostage.errors import ValidationError
from panostage.image import HdrPanorama, scale_radiance
from panostage.layout import CornerPolicy, WindowRect, place_components
from panostage.mesh import TriangleMesh, make_box
from panostage.projection import PerspectiveView, pano_to_perspective
from panostage.scene import (
    AreaEmitter,
    ExtraSurface,
    IrradianceProbe,
    PointEmitter,
    SceneDescription,
    assemble_scene,
    env_radiance,
    export_scene,
    import_scene,
    irradiance_probe,
    preview_render,
    scene_equal,
)

from conftest import component, gray_for_luminance, rectangle_room, uniform_pano


def uniform_env(luminance=100.0, height=32):
    return uniform_pano(height, luminance, calibration=1.0)


def env_only_scene(luminance=100.0):
    return SceneDescription(env=uniform_env(luminance))


def black_box_mesh(half=1.0, center=(0, 0, 0)):
    box = make_box(2 * half, 2 * half, 2 * half)
    v = box.vertices.copy()
    v[:, 1] -= half  # center the depth axis
    v += np.asarray(center, dtype=np.float64)
    v[:, 2] -= half
    return TriangleMesh(v, box.faces.copy())


class TestProbePhysics:
    def test_furnace(self):
        scene = env_only_scene(100.0)
        probe = IrradianceProbe(position=(0, 0, 0), normal=(0, 0, 1),
                                sample_count=256, seed=3)
        result = irradiance_probe(scene, probe)
        assert abs(result.illuminance - 100.0 * np.pi) <= 3 * result.stderr + 1e-6 * np.pi * 100

    def test_furnace_many_seeds(self):
        scene = env_only_scene(70.0)
        expected = 70.0 * np.pi
        for seed in range(20):
            r = irradiance_probe(scene, IrradianceProbe((0, 0, 0), (0, 0, 1), 128, seed=seed))
            assert abs(r.illuminance - expected) <= 3 * r.stderr + 1e-6 * expected

    def test_enclosed_by_black_box_is_dark(self):
        scene = SceneDescription(
            env=uniform_env(500.0),
            extra_surfaces=(ExtraSurface(black_box_mesh(half=1.0)),),
        )
        r = irradiance_probe(scene, IrradianceProbe((0, 0, 0), (0, 0, 1), 256, seed=1))
        assert r.illuminance == 0.0
        assert r.stderr == 0.0

    def test_half_space_occluder(self):
        # vertical plane through the probe normal blocks half the hemisphere
        quad = TriangleMesh(
            np.array([
                [-1e6, 1e-3, -1e6], [1e6, 1e-3, -1e6], [1e6, 1e-3, 1e6], [-1e6, 1e-3, 1e6],
            ]),
            np.array([[0, 1, 2], [0, 2, 3]]),
        )
        lum = 100.0
        scene = SceneDescription(env=uniform_env(lum), extra_surfaces=(ExtraSurface(quad),))
        r = irradiance_probe(scene, IrradianceProbe((0, 0, 0), (0, 0, 1), 4096, seed=5))
        assert abs(r.illuminance - np.pi * lum / 2) <= 3 * r.stderr + 1e-6
        assert r.stderr > 0

    def test_point_emitter_inverse_square(self):
        # black env, single point source straight above the probe
        env = HdrPanorama(np.zeros((8, 16, 3), dtype=np.float32), calibration=1.0)
        power = np.array([400.0 * np.pi, 400.0 * np.pi, 400.0 * np.pi])
        scene = SceneDescription(env=env, emitters=(PointEmitter((0, 0, 2.0), power),))
        r = irradiance_probe(scene, IrradianceProbe((0, 0, 0), (0, 0, 1), 64, seed=0))
        # E = P/(4 pi) * cos/d^2 = 400 pi / (4 pi) / 4 = 25 per channel
        expected = 179.0 * 25.0
        assert r.illuminance == pytest.approx(expected, rel=1e-9)

    def test_area_emitter_hit(self):
        env = HdrPanorama(np.zeros((8, 16, 3), dtype=np.float32), calibration=1.0)
        # emitting ceiling far larger than the probe's view: E -> pi * L
        em = AreaEmitter(
            [[-50, -50, 1.0], [50, -50, 1.0], [50, 50, 1.0], [-50, 50, 1.0]],
            radiance_rgb=(1.0, 1.0, 1.0),
        )
        scene = SceneDescription(env=env, emitters=(em,))
        r = irradiance_probe(scene, IrradianceProbe((0, 0, 0), (0, 0, 1), 512, seed=2))
        assert r.illuminance == pytest.approx(np.pi * 179.0, rel=1e-3)

    def test_linearity_in_env(self):
        base = env_only_scene(50.0)
        doubled = env_only_scene(100.0)
        p = IrradianceProbe((0, 0, 0), (0, 0, 1), 128, seed=9)
        r1 = irradiance_probe(base, p)
        r2 = irradiance_probe(doubled, p)
        assert r2.illuminance == pytest.approx(2 * r1.illuminance, rel=1e-5)

    def test_linearity_in_emitter_power(self):
        env = HdrPanorama(np.zeros((8, 16, 3), dtype=np.float32), calibration=1.0)
        p = IrradianceProbe((0, 0, 0), (0, 0, 1), 64, seed=0)
        one = SceneDescription(env=env, emitters=(PointEmitter((0.5, 0, 2.0), (100.0,) * 3),))
        two = SceneDescription(env=env, emitters=(PointEmitter((0.5, 0, 2.0), (200.0,) * 3),))
        r1 = irradiance_probe(one, p)
        r2 = irradiance_probe(two, p)
        assert r2.illuminance == pytest.approx(2 * r1.illuminance, rel=1e-12)

    def test_stderr_scaling(self):
        # gradient environment: nonzero variance, stderr ~ 1/sqrt(N)
        h = 16
        grad = np.linspace(0.1, 1.0, 2 * h, dtype=np.float32)
        pix = np.broadcast_to(grad[None, :, None], (h, 2 * h, 3)).copy()
        scene = SceneDescription(env=HdrPanorama(pix, calibration=1.0))
        errs = []
        for n in (256, 1024, 4096):
            r = irradiance_probe(scene, IrradianceProbe((0, 0, 0), (0, 0, 1), n, seed=4))
            errs.append(r.stderr)
        assert errs[0] > errs[1] > errs[2]
        assert errs[0] / errs[1] == pytest.approx(2.0, rel=0.35)

    def test_probe_outside_room_rejected(self):
        room = rectangle_room(4.0, 3.0, kitchen_walls=[0])
        scene = assemble_scene(room, None, uniform_env())
        with pytest.raises(ValidationError):
            irradiance_probe(scene, IrradianceProbe((10, 10, 1), (0, 0, 1), 64))

    def test_sample_count_minimum(self):
        with pytest.raises(ValidationError):
            IrradianceProbe((0, 0, 0), (0, 0, 1), 8)

    def test_determinism(self):
        scene = env_only_scene(80.0)
        p = IrradianceProbe((0, 0, 0), (0.2, 0.1, 1.0), 128, seed=11, probe_id=7)
        a = irradiance_probe(scene, p)
        b = irradiance_probe(scene, p)
        assert a.illuminance == b.illuminance
        assert a.stderr == b.stderr


class TestAssemble:
    def test_uncalibrated_env_rejected(self):
        room = rectangle_room(kitchen_walls=[0])
        env = uniform_pano(16, 100.0)  # no calibration
        with pytest.raises(ValidationError):
            assemble_scene(room, None, env)

    def test_empty_plan_gives_room_shell_only(self):
        room = rectangle_room(kitchen_walls=[0])
        scene = assemble_scene(room, None, uniform_env())
        assert scene.placements == ()
        td = scene.trace_data()
        # floor + ceiling (2 tris each for a rectangle) + 4 walls x 2 tris
        assert len(td.caster.v0) == 2 + 2 + 8

    def test_component_vertices_conserved(self):
        room = rectangle_room(4.0, 3.0, kitchen_walls=[0])
        plan = place_components(room, [component("c", width=1.0)], CornerPolicy.LEAVE_GAP)
        scene = assemble_scene(room, plan, uniform_env())
        assert len(scene.placements) == 1
        assert len(scene.placements[0].world_mesh.vertices) == 8  # box corners

    def test_orientation_rotates_env_sampling_exactly(self):
        h = 16
        rng = np.random.default_rng(0)
        pix = rng.random((h, 2 * h, 3)).astype(np.float32)
        env = HdrPanorama(pix, calibration=1.0)
        base = SceneDescription(env=env, orientation_deg=0.0)
        rot = SceneDescription(env=env, orientation_deg=90.0)
        dirs = rng.normal(size=(50, 3))
        a = env_radiance(rot, dirs)
        # rotating the scene orientation by 90 deg = rolling the pano w/4
        rolled = HdrPanorama(np.roll(pix, -(2 * h) // 4, axis=1), calibration=1.0)
        b = env_radiance(SceneDescription(env=rolled, orientation_deg=0.0), dirs)
        np.testing.assert_allclose(a, b, atol=1e-12)

    def test_material_override(self):
        room = rectangle_room(kitchen_walls=[0])
        scene = assemble_scene(room, None, uniform_env(), materials={"floor": (0.2, 0.3, 0.4)})
        np.testing.assert_allclose(scene.room_materials["floor"].albedo, [0.2, 0.3, 0.4])

    def test_bad_albedo_rejected(self):
        room = rectangle_room(kitchen_walls=[0])
        with pytest.raises(ValidationError):
            assemble_scene(room, None, uniform_env(), materials={"floor": (1.2, 0.3, 0.4)})

    def test_with_material_unknown_slot(self):
        scene = env_only_scene()
        with pytest.raises(ValidationError):
            scene.with_material("granite", (0.5, 0.5, 0.5))

    def test_invalid_plan_rejected(self):
        from panostage.layout import PlacementEntry, PlacementPlan, PlacementTransform
        room = rectangle_room(4.0, 3.0, kitchen_walls=[0])
        c = component("c", width=1.0)
        overlapping = PlacementPlan((
            PlacementEntry(c, 0, 0.0, PlacementTransform(0.0, 0.5, 0.0)),
            PlacementEntry(c, 0, 0.5, PlacementTransform(0.0, 1.0, 0.0)),
        ), CornerPolicy.LEAVE_GAP)
        with pytest.raises(ValidationError, match="invalid plan"):
            assemble_scene(room, overlapping, uniform_env())


class TestPreview:
    def test_env_only_matches_perspective_projection(self):
        h = 64
        rng = np.random.default_rng(1)
        base = 0.2 + 0.6 * rng.random((h, 2 * h, 3)).astype(np.float32)
        # smooth it so bilinear sampling differences stay tiny
        pix = (base + np.roll(base, 1, axis=1) + np.roll(base, -1, axis=1)) / 3
        env = HdrPanorama(pix, calibration=1.0)
        pano = HdrPanorama(pix)
        scene = SceneDescription(env=env)
        view = PerspectiveView(fov=75.0, yaw=30.0, pitch=-10.0, width=33, height=25)
        preview = preview_render(scene, view, spp=1, seed=0)
        reference = pano_to_perspective(pano, view)
        np.testing.assert_allclose(preview, reference, atol=1e-5)

    def test_white_floor_energy_closure(self):
        # white albedo floor under a uniform env with open walls: the floor
        # radiance approaches (1/pi) * pi * L = L
        lum = 100.0
        env = uniform_env(lum, height=16)
        floor = TriangleMesh(
            np.array([[-50, -50, 0.0], [50, -50, 0.0], [50, 50, 0.0], [-50, 50, 0.0]]),
            np.array([[0, 1, 2], [0, 2, 3]]),
        )
        scene = SceneDescription(env=env, extra_surfaces=(
            ExtraSurface(floor, albedo=(1.0, 1.0, 1.0)),))
        view = PerspectiveView(fov=60.0, yaw=0.0, pitch=-45.0, width=9, height=9)
        img = preview_render(scene, view, spp=64, seed=0, eye=np.array([0, 0, 1.0]))
        center = img[4, 4]
        assert center[0] == pytest.approx(gray_for_luminance(lum), rel=0.05)

    def test_doubling_env_doubles_surface_radiance(self):
        room = rectangle_room(4.0, 3.0, kitchen_walls=[0],
                              windows=[WindowRect(0, 1.0, 3.0, 0.8, 2.0)])
        env1 = uniform_env(50.0)
        env2 = scale_radiance(uniform_pano(32, 50.0), 2.0)
        view = PerspectiveView(fov=70.0, yaw=0.0, pitch=-20.0, width=17, height=13)
        scene1 = assemble_scene(room, None, env1)
        scene2 = assemble_scene(room, None, env2)
        a = preview_render(scene1, view, spp=16, seed=6)
        b = preview_render(scene2, view, spp=16, seed=6)
        np.testing.assert_allclose(b, 2 * a, rtol=1e-5)

    def test_window_shows_env_directly(self):
        room = rectangle_room(4.0, 3.0, kitchen_walls=[0],
                              windows=[WindowRect(0, 0.5, 3.5, 0.5, 2.5)])
        lum = 321.0
        scene = assemble_scene(room, None, uniform_env(lum))
        # camera at room center looking toward wall 0 (which runs along +x
        # from the origin; inward normal +y, so the wall lies toward -y)
        view = PerspectiveView(fov=40.0, yaw=-90.0, pitch=0.0, width=9, height=9)
        img = preview_render(scene, view, spp=4, seed=0)
        assert img[4, 4, 0] == pytest.approx(gray_for_luminance(lum), rel=1e-4)

    def test_deterministic_bits(self):
        room = rectangle_room(4.0, 3.0, kitchen_walls=[0],
                              windows=[WindowRect(0, 1.0, 3.0, 0.8, 2.0)])
        plan = place_components(room, [component("c", width=1.0)], CornerPolicy.LEAVE_GAP)
        scene = assemble_scene(room, plan, uniform_env())
        view = PerspectiveView(fov=80.0, yaw=-90.0, pitch=-15.0, width=24, height=16)
        a = preview_render(scene, view, spp=8, seed=42)
        b = preview_render(scene, view, spp=8, seed=42)
        assert a.tobytes() == b.tobytes()

    def test_albedo_linearity_on_surfaces(self):
        # pre-tonemap preview radiance is albedo/pi * E: doubling albedo
        # doubles the lit-surface pixels exactly (fixed seed)
        room = rectangle_room(4.0, 3.0, kitchen_walls=[0],
                              windows=[WindowRect(0, 1.0, 3.0, 0.8, 2.0)])
        view = PerspectiveView(fov=30.0, yaw=0.0, pitch=-80.0, width=9, height=9)  # floor only
        a = preview_render(assemble_scene(room, None, uniform_env(),
                                          materials={"floor": (0.3, 0.3, 0.3)}),
                           view, spp=8, seed=2)
        b = preview_render(assemble_scene(room, None, uniform_env(),
                                          materials={"floor": (0.6, 0.6, 0.6)}),
                           view, spp=8, seed=2)
        lit = a[..., 0] > 1e-6
        assert lit.any()
        np.testing.assert_allclose(b[lit], 2 * a[lit], rtol=1e-6)

    def test_different_seed_changes_noise(self):
        room = rectangle_room(4.0, 3.0, kitchen_walls=[0],
                              windows=[WindowRect(0, 1.0, 3.0, 0.8, 2.0)])
        scene = assemble_scene(room, None, uniform_env())
        view = PerspectiveView(fov=80.0, yaw=-90.0, pitch=-15.0, width=16, height=12)
        a = preview_render(scene, view, spp=2, seed=1)
        b = preview_render(scene, view, spp=2, seed=2)
        assert a.tobytes() != b.tobytes()


class TestExport:
    def make_scene(self, tmp_path):
        room = rectangle_room(4.0, 3.0, kitchen_walls=[0],
                              windows=[WindowRect(0, 1.0, 3.0, 0.8, 2.0)])
        comps = [component("fridge", width=0.9, depth=0.7, height=1.8, category="Refrigerator"),
                 component("sink", width=0.8, depth=0.6, height=0.9, category="Sink")]
        plan = place_components(room, comps, CornerPolicy.LEAVE_GAP)
        rng = np.random.default_rng(3)
        env = HdrPanorama(rng.random((16, 32, 3)).astype(np.float32), calibration=2.0)
        emitters = (PointEmitter((2.0, 1.5, 2.4), (100.0, 90.0, 80.0)),
                    AreaEmitter([[1, 1, 2.69], [2, 1, 2.69], [2, 2, 2.69], [1, 2, 2.69]],
                                (5.0, 5.0, 5.0)))
        return assemble_scene(room, plan, env, emitters=emitters, orientation_deg=45.0)

    def test_round_trip_clean(self, tmp_path):
        scene = self.make_scene(tmp_path)
        export_scene(scene, tmp_path / "out")
        back = import_scene(tmp_path / "out")
        assert scene_equal(scene, back, tol=1e-9) == []

    def test_identity_transform_is_identity_matrix(self, tmp_path):
        # a placement with theta=0, t=0, scale=1 exports the 4x4 identity
        from panostage.layout import PlacementEntry, PlacementTransform
        c = component("c", width=1.0)
        entry = PlacementEntry(c, 0, 0.0, PlacementTransform(0.0, 0.0, 0.0, 1.0))
        scene = SceneDescription(
            env=uniform_env(),
            placements=(
                __import__("panostage.scene", fromlist=["PlacedComponent"]).PlacedComponent(
                    entry, c.load_mesh(), c.load_mesh(),
                    {"body": __import__("panostage.scene", fromlist=["Material"]).Material([0.5, 0.5, 0.5])}),
            ),
        )
        doc = export_scene(scene, tmp_path / "out")
        m = np.array(doc["placements"][0]["transform_4x4_row_major"]).reshape(4, 4)
        np.testing.assert_array_equal(m, np.eye(4))

    def test_env_pixel_bit_exact(self, tmp_path):
        scene = self.make_scene(tmp_path)
        export_scene(scene, tmp_path / "out")
        from panostage.hdrio import read_exr
        pixels, cal = read_exr(tmp_path / "out" / "env.exr")
        assert pixels[0, 0].tobytes() == scene.env.pixels[0, 0].tobytes()
        assert cal == pytest.approx(2.0)

    def test_l_shaped_room_shell_triangulation(self):
        # non-convex floor polygon: ear clipping must still cover the floor
        from conftest import l_shaped_room
        from panostage.scene import room_shell_meshes
        room = l_shaped_room(kitchen_walls=[0])
        meshes = room_shell_meshes(room)
        floor = meshes["floor"]
        assert len(floor.faces) == len(room.corners) - 2
        # triangulated area equals the polygon area
        area = 0.0
        for f in floor.faces:
            a, b, c = floor.vertices[f][:, :2]
            area += 0.5 * abs((b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0]))
        from panostage.geometry import polygon_area
        assert area == pytest.approx(polygon_area(room.corners), abs=1e-9)
        # probing inside an L room works; outside the notch is rejected
        env = uniform_env()
        scene = assemble_scene(room, None, env)
        r = irradiance_probe(scene, IrradianceProbe((1.0, 1.0, 1.0), (0, 0, 1), 64))
        assert np.isfinite(r.illuminance)
        with pytest.raises(ValidationError):
            irradiance_probe(scene, IrradianceProbe((5.0, 4.5, 1.0), (0, 0, 1), 64))

    def test_material_texture_and_specular_round_trip(self, tmp_path):
        room = rectangle_room(4.0, 3.0, kitchen_walls=[0])
        plan = place_components(room, [component("cab", width=1.0)], CornerPolicy.LEAVE_GAP)
        materials = {
            "floor": {"albedo": [0.4, 0.35, 0.3], "texture": "oak_planks.png"},
            "components": {"cab": {"body": {"albedo": [0.7, 0.7, 0.72], "specular": 0.25}}},
        }
        scene = assemble_scene(room, plan, uniform_env(), materials=materials)
        assert scene.room_materials["floor"].texture == "oak_planks.png"
        assert scene.placements[0].slot_materials["body"].specular == 0.25
        export_scene(scene, tmp_path / "out")
        back = import_scene(tmp_path / "out")
        assert scene_equal(scene, back) == []
        assert back.room_materials["floor"].texture == "oak_planks.png"
        assert back.placements[0].slot_materials["body"].specular == 0.25

    def test_material_bad_specular_rejected(self):
        from panostage.scene import Material
        with pytest.raises(ValidationError):
            Material([0.5, 0.5, 0.5], specular=1.5)
        with pytest.raises(ValidationError):
            Material.of({"albedo": [0.5, 0.5, 0.5], "shininess": 3})

    def test_unwritable_directory_rejected(self, tmp_path):
        scene = self.make_scene(tmp_path)
        (tmp_path / "blocker").write_text("a file, not a directory")
        with pytest.raises(ValidationError, match="cannot create"):
            export_scene(scene, tmp_path / "blocker" / "scene")

    def test_schema_version_checked(self, tmp_path):
        scene = self.make_scene(tmp_path)
        export_scene(scene, tmp_path / "out")
        import json
        doc = json.loads((tmp_path / "out" / "scene.json").read_text())
        doc["schema_version"] = 99
        (tmp_path / "out" / "scene.json").write_text(json.dumps(doc))
        with pytest.raises(ValidationError):
            import_scene(tmp_path / "out")
