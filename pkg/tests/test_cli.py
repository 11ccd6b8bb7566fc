import json

import numpy as np
import pytest

from panostage import hdrio
from panostage.cli import EXIT_OK, EXIT_VALIDATION, load_mask, main
from panostage.image import HdrPanorama, scale_radiance
from panostage.projection import fisheye_from_panorama

from conftest import uniform_pano, write_component_library


@pytest.fixture
def staged_inputs(tmp_path):
    """layout.json, mask.json, components/, env.exr for the stage command."""
    layout = {
        "corners_m": [[0.0, 0.0], [4.0, 0.0], [4.0, 3.0], [0.0, 3.0]],
        "height_m": 2.7,
        "kitchen_walls": [0],
        "windows": [{"wall": 2, "s0_m": 1.0, "s1_m": 3.0, "z0_m": 0.9, "z1_m": 2.1}],
    }
    (tmp_path / "layout.json").write_text(json.dumps(layout))
    write_component_library(tmp_path / "components", [
        ("fridge", "Refrigerator", 0.9, 0.7, 1.8),
        ("cabinet", "Cabinet", 0.6, 0.6, 0.9),
        ("oven", "Oven", 0.76, 0.65, 0.9),
        ("sink", "Sink", 0.9, 0.6, 0.9),
    ])
    env = uniform_pano(32, 4000.0, calibration=1.0)
    hdrio.save_panorama(tmp_path / "env.exr", env)
    return tmp_path


def test_calibrate_command_round_trip(tmp_path):
    truth = uniform_pano(64, 100.0)
    displayed = scale_radiance(truth, 0.5)
    # strip the calibration marker: this is what a raw capture looks like
    displayed = HdrPanorama(displayed.pixels)
    hdrio.save_panorama(tmp_path / "indoor.exr", displayed)
    hdrio.save_panorama(tmp_path / "outdoor.exr", displayed)
    code = main(["calibrate", str(tmp_path / "indoor.exr"), str(tmp_path / "outdoor.exr"),
                 "--lux", str(100.0 * np.pi), "--out", str(tmp_path / "cal")])
    assert code == EXIT_OK
    result = json.loads((tmp_path / "cal" / "calibration.json").read_text())
    assert result["factor"] == pytest.approx(2.0, rel=1e-5)
    back = hdrio.load_panorama(tmp_path / "cal" / "indoor_calibrated.exr")
    assert back.calibration == pytest.approx(2.0, rel=1e-5)
    np.testing.assert_allclose(back.pixels, truth.pixels, rtol=1e-5)


def test_calibrate_identity_passthrough(tmp_path):
    pano = uniform_pano(64, 100.0)
    hdrio.save_panorama(tmp_path / "in.exr", pano)
    hdrio.save_panorama(tmp_path / "out.exr", pano)
    code = main(["calibrate", str(tmp_path / "in.exr"), str(tmp_path / "out.exr"),
                 "--lux", str(100.0 * np.pi), "--out", str(tmp_path / "cal")])
    assert code == EXIT_OK
    back = hdrio.load_panorama(tmp_path / "cal" / "indoor_calibrated.exr")
    np.testing.assert_allclose(back.pixels, pano.pixels, rtol=1e-6)


def test_calibrate_missing_lux_is_usage_error(tmp_path, capsys):
    with pytest.raises(SystemExit) as exc:
        main(["calibrate", "a.exr", "b.exr", "--out", "o"])
    assert exc.value.code == 2  # argparse usage error


def test_project_fisheye_matches_library(tmp_path, rng):
    pix = (rng.random((64, 128, 3)) * 5).astype(np.float32)
    pano = HdrPanorama(pix)
    hdrio.save_panorama(tmp_path / "p.exr", pano)
    code = main(["project", str(tmp_path / "p.exr"), "--mode", "fisheye",
                 "--size", "65", "--out", str(tmp_path / "f.exr")])
    assert code == EXIT_OK
    out, _ = hdrio.read_exr(tmp_path / "f.exr")
    expected = fisheye_from_panorama(pano, 65).pixels
    assert out.tobytes() == expected.tobytes()


def test_project_perspective_yaw_periodicity(tmp_path, rng):
    pix = (rng.random((32, 64, 3))).astype(np.float32)
    hdrio.save_panorama(tmp_path / "p.exr", HdrPanorama(pix))
    for yaw, name in ((15.0, "a.exr"), (375.0, "b.exr")):
        code = main(["project", str(tmp_path / "p.exr"), "--mode", "perspective",
                     "--yaw", str(yaw), "--size", "33", "--out", str(tmp_path / name)])
        assert code == EXIT_OK
    a, _ = hdrio.read_exr(tmp_path / "a.exr")
    b, _ = hdrio.read_exr(tmp_path / "b.exr")
    assert a.tobytes() == b.tobytes()


def test_load_mask_rle_json(tmp_path):
    (tmp_path / "mask.json").write_text(json.dumps({"width": 10, "runs": [[2, 3], [7, 1]]}))
    mask = load_mask(tmp_path / "mask.json")
    assert mask.tolist() == [False, False, True, True, True, False, False, True, False, False]


def test_load_mask_png(tmp_path):
    row = np.zeros((1, 12, 3), dtype=np.uint8)
    row[0, 4:9] = 255
    hdrio.save_png(tmp_path / "mask.png", row)
    mask = load_mask(tmp_path / "mask.png")
    assert mask.sum() == 5 and mask[4] and mask[8] and not mask[3]


def test_load_mask_png_must_be_one_row(tmp_path):
    from panostage.errors import ValidationError
    img = np.zeros((2, 12, 3), dtype=np.uint8)
    hdrio.save_png(tmp_path / "tall.png", img)
    with pytest.raises(ValidationError):
        load_mask(tmp_path / "tall.png")


def test_stage_orientation_changes_preview(staged_inputs, rng):
    # a rotated environment map lights the room differently through the window
    pix = (rng.random((32, 64, 3)) * 50).astype(np.float32)
    hdrio.write_exr(staged_inputs / "env_grad.exr", pix, calibration=1.0)
    args = [
        "stage", "--layout", str(staged_inputs / "layout.json"),
        "--components", str(staged_inputs / "components"),
        "--sequence", "cabinet", "--policy", "leave-gap",
        "--env", str(staged_inputs / "env_grad.exr"),
        "--spp", "2", "--preview-size", "24x16", "--yaw", "90",
    ]
    assert main(args + ["--out", str(staged_inputs / "o0"), "--orientation", "0"]) == EXIT_OK
    assert main(args + ["--out", str(staged_inputs / "o90"), "--orientation", "90"]) == EXIT_OK
    a = (staged_inputs / "o0" / "preview.exr").read_bytes()
    b = (staged_inputs / "o90" / "preview.exr").read_bytes()
    assert a != b


def test_stage_end_to_end(staged_inputs):
    out = staged_inputs / "staged"
    code = main([
        "stage", "--layout", str(staged_inputs / "layout.json"),
        "--components", str(staged_inputs / "components"),
        "--sequence", "fridge,cabinet,oven,sink,cabinet",
        "--policy", "scale-last",
        "--env", str(staged_inputs / "env.exr"),
        "--out", str(out), "--seed", "7", "--spp", "4", "--preview-size", "48x32",
        "--yaw", "-90",
    ])
    assert code == EXIT_OK
    plan = json.loads((out / "plan.json").read_text())
    assert [e["component"] for e in plan["entries"]] == ["fridge", "cabinet", "oven", "sink", "cabinet"]
    assert (out / "scene" / "scene.json").exists()
    assert (out / "preview.exr").exists()
    assert (out / "preview.png").exists()


def test_stage_deterministic_bits(staged_inputs):
    args = [
        "stage", "--layout", str(staged_inputs / "layout.json"),
        "--components", str(staged_inputs / "components"),
        "--sequence", "fridge,cabinet,sink", "--policy", "leave-gap",
        "--env", str(staged_inputs / "env.exr"),
        "--seed", "3", "--spp", "2", "--preview-size", "32x24",
    ]
    code_a = main(args + ["--out", str(staged_inputs / "run_a")])
    code_b = main(args + ["--out", str(staged_inputs / "run_b")])
    assert code_a == code_b == EXIT_OK
    for rel in ("plan.json", "scene/scene.json", "scene/env.exr",
                "scene/meshes/component_000.obj", "preview.exr", "preview.png"):
        a = (staged_inputs / "run_a" / rel).read_bytes()
        b = (staged_inputs / "run_b" / rel).read_bytes()
        assert a == b, f"{rel} differs between identical runs"


def test_stage_l_shaped_room(staged_inputs, tmp_path):
    layout = {
        "corners_m": [[0.0, 0.0], [6.0, 0.0], [6.0, 3.0], [3.0, 3.0], [3.0, 5.0], [0.0, 5.0]],
        "height_m": 2.7,
        "kitchen_walls": [0, 1],
    }
    (tmp_path / "l_layout.json").write_text(json.dumps(layout))
    out = tmp_path / "l_staged"
    code = main([
        "stage", "--layout", str(tmp_path / "l_layout.json"),
        "--components", str(staged_inputs / "components"),
        "--sequence", "fridge,fridge,fridge,fridge,sink,sink,sink",
        "--policy", "leave-gap",
        "--env", str(staged_inputs / "env.exr"),
        "--out", str(out), "--spp", "2", "--preview-size", "24x16",
    ])
    assert code == EXIT_OK
    plan = json.loads((out / "plan.json").read_text())
    walls = {e["wall"] for e in plan["entries"]}
    assert walls == {0, 1}  # the run spans both kitchen walls


def test_stage_empty_sequence_rejected(staged_inputs, capsys):
    code = main([
        "stage", "--layout", str(staged_inputs / "layout.json"),
        "--components", str(staged_inputs / "components"),
        "--sequence", "", "--env", str(staged_inputs / "env.exr"),
        "--out", str(staged_inputs / "x"),
    ])
    assert code == EXIT_VALIDATION
    assert "sequence" in capsys.readouterr().err


def test_stage_uncalibrated_env_rejected(staged_inputs, capsys):
    hdrio.save_panorama(staged_inputs / "raw.exr", uniform_pano(16, 10.0))
    code = main([
        "stage", "--layout", str(staged_inputs / "layout.json"),
        "--components", str(staged_inputs / "components"),
        "--sequence", "cabinet", "--policy", "leave-gap",
        "--env", str(staged_inputs / "raw.exr"),
        "--out", str(staged_inputs / "x"),
    ])
    assert code == EXIT_VALIDATION
    assert "calibrat" in capsys.readouterr().err


def test_config_file_defaults(staged_inputs):
    cfg = {"stage": {"seed": 9, "spp": 2, "preview-size": "24x16", "yaw": -90.0}}
    (staged_inputs / "cfg.json").write_text(json.dumps(cfg))
    code = main([
        "--config", str(staged_inputs / "cfg.json"),
        "stage", "--layout", str(staged_inputs / "layout.json"),
        "--components", str(staged_inputs / "components"),
        "--sequence", "cabinet", "--policy", "leave-gap",
        "--env", str(staged_inputs / "env.exr"),
        "--out", str(staged_inputs / "cfg_run"),
    ])
    assert code == EXIT_OK


def test_config_toml(staged_inputs):
    (staged_inputs / "cfg.toml").write_text('[stage]\nseed = 4\nspp = 2\npolicy = "leave-gap"\n'
                                            'preview-size = "24x16"\n')
    code = main([
        "--config", str(staged_inputs / "cfg.toml"),
        "stage", "--layout", str(staged_inputs / "layout.json"),
        "--components", str(staged_inputs / "components"),
        "--sequence", "cabinet",
        "--env", str(staged_inputs / "env.exr"),
        "--out", str(staged_inputs / "toml_run"),
    ])
    assert code == EXIT_OK


def test_missing_input_file_is_io_error(tmp_path, capsys):
    from panostage.cli import EXIT_IO
    code = main(["calibrate", str(tmp_path / "ghost.exr"), str(tmp_path / "ghost2.exr"),
                 "--lux", "100", "--out", str(tmp_path / "o")])
    assert code == EXIT_IO


def test_config_unknown_key_rejected(staged_inputs, capsys):
    (staged_inputs / "cfg.json").write_text(json.dumps({"stage": {"nonsense": 1}}))
    code = main([
        "--config", str(staged_inputs / "cfg.json"),
        "stage", "--layout", str(staged_inputs / "layout.json"),
        "--components", str(staged_inputs / "components"),
        "--sequence", "cabinet", "--policy", "leave-gap",
        "--env", str(staged_inputs / "env.exr"),
        "--out", str(staged_inputs / "y"),
    ])
    assert code == EXIT_VALIDATION
    assert "unknown config keys" in capsys.readouterr().err
