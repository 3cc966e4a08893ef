import json
import os
import subprocess

import numpy as np
import pytest

import actor_motion as am


def random_rotations(rng, n):
    q = rng.normal(size=(n, 4))
    q /= np.linalg.norm(q, axis=1, keepdims=True)
    w, x, y, z = q.T
    return np.stack([
        np.stack([1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y)], -1),
        np.stack([2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x)], -1),
        np.stack([2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y)], -1),
    ], 1)


def test_sixd_round_trip():
    mats = random_rotations(np.random.default_rng(0), 200)
    six = am.matrix_to_sixd(mats)
    assert six.shape == (200, 6)
    np.testing.assert_allclose(six[:, :3], mats[:, :, 0])
    back = am.sixd_to_matrix(six)
    np.testing.assert_allclose(back, mats, atol=1e-12)
    assert am.geodesic_distance(mats[0], mats[0]) < 1e-12


def test_degenerate_sixd_raises_with_code():
    with pytest.raises(am.ActorError) as info:
        am.sixd_to_matrix(np.array([1.0, 0, 0, 2.0, 0, 0]))
    assert info.value.code == "DegenerateInput"


def test_kl_and_fid():
    assert am.kl_divergence([0.0, 0.0], [0.0, 0.0]) == 0.0
    assert am.kl_divergence([1.0], [0.0]) == pytest.approx(0.5)
    x = np.random.default_rng(1).normal(size=(500, 1))
    assert am.fid(x, x) < 1e-8
    assert am.fid(x, x + 2.0) == pytest.approx(4.0, rel=1e-6)


def test_forward_kinematics_and_jitter():
    t = 10
    rot = np.tile(np.array([1.0, 0, 0, 0, 1, 0]), (t, 24, 1))
    disp = np.zeros((t, 3))
    disp[:, 0] = np.linspace(0, 1, t)
    joints = am.forward_kinematics(rot, disp)
    assert joints.shape == (t, 24, 3)
    np.testing.assert_allclose(joints[:, 0], disp, atol=1e-12)
    assert am.jitter_score(rot, disp) < 1e-20


@pytest.fixture(scope="module")
def trained(tmp_path_factory):
    cli = os.environ.get("ACTOR_CLI")
    if not cli:
        pytest.skip("ACTOR_CLI not set")
    root = tmp_path_factory.mktemp("actor")
    data = root / "data"
    am.generate_dataset(data, sequences_per_action=6, duration=[20, 20], seed=3)
    config = root / "tiny.json"
    config.write_text(json.dumps({
        "model": {"latent_dim": 16, "layers": 1, "heads": 2, "ff_dim": 32},
        "train": {"epochs": 1, "batch_size": 8, "fixed_duration": 20},
    }))
    ckpt = root / "model.pt"
    subprocess.run([cli, "train", "--config", str(config), "--data", str(data), "--out", str(ckpt)],
                   check=True, capture_output=True)
    return root, data, ckpt


def test_dataset_files(trained):
    _, data, _ = trained
    manifest = json.loads((data / "manifest.json").read_text())
    assert len(manifest["action_names"]) == 5
    first = next(p for p in data.rglob("*.motion"))
    m = am.load_motion(first)
    assert m["rotations"].shape == (20, 24, 6)
    assert m["displacement"].shape == (20, 3)


def test_model_generate_denoise_interpolate(trained, tmp_path):
    _, _, ckpt = trained
    model = am.Model(str(ckpt))
    assert model.action_names == am.builtin_actions()
    a = model.generate("squat", duration=25, seed=4)
    b = model.generate(2, duration=25, seed=4)
    assert a["rotations"].shape == (25, 24, 6)
    np.testing.assert_array_equal(a["rotations"], b["rotations"])
    clean = model.denoise(a["rotations"], a["displacement"], "squat")
    assert clean["rotations"].shape == a["rotations"].shape
    mid = model.interpolate(a, clean, "squat", 0.5)
    assert mid["rotations"].shape[0] == 25
    with pytest.raises(am.ActorError):
        model.generate("cartwheel")
    path = tmp_path / "a.motion"
    am.save_motion(path, a)
    back = am.load_motion(path)
    np.testing.assert_array_equal(back["rotations"], a["rotations"])
    assert back["action"] == a["action"]
