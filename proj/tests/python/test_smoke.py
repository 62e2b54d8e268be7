"""Smoke tests for the python surface: thin checks that the bindings expose
the core operations and agree with the C++ behaviour on small cases."""

import math

import pytest

import relpose as rp


def make_scene(seed=1, aliasing=0.0):
    cfg = rp.SynthSceneConfig()
    cfg.num_sequences = 2
    cfg.frames_per_sequence = 15
    cfg.descriptor_dim = 8
    cfg.aliasing_fraction = aliasing
    cfg.rng_seed = seed
    return rp.generate_synth_scene(cfg)


def make_model_config():
    cfg = rp.ModelConfig()
    cfg.encoder.input_dim = 8
    cfg.encoder.hidden_dims = [12]
    cfg.encoder.feature_dim = 6
    cfg.encoder.dropout_rate = 0.0
    cfg.head_hidden = 10
    return cfg


def test_quaternion_algebra():
    i = rp.Quaternion(0, 1, 0, 0)
    j = rp.Quaternion(0, 0, 1, 0)
    k = rp.quat_multiply(i, j)
    assert (k.w, k.x, k.y, k.z) == (0, 0, 0, 1)

    q = rp.quat_normalize(rp.Quaternion(1, 2, 3, 4))
    assert rp.is_unit(q)
    ident = rp.quat_multiply(q, rp.quat_conjugate(q))
    assert abs(ident.w - 1) < 1e-15


def test_relative_pose_and_errors():
    p = rp.Pose()
    p.position = rp.Position(1, 2, 3)
    ref = rp.Pose()
    rel = rp.relative_pose(p, ref)
    assert (rel.x_rel.px, rel.x_rel.py, rel.x_rel.pz) == (1, 2, 3)
    assert rp.position_error_m(p.position, ref.position) == pytest.approx(math.sqrt(14))
    assert rp.angular_error_deg(p.orientation, ref.orientation) == pytest.approx(0)


def test_synth_scene_and_pairings():
    scene = make_scene()
    assert len(scene) == 30
    assert len(rp.test_split(scene)) + len(rp.train_split(scene)) == 30
    next_pairs = rp.pair_next(scene)
    random_pairs = rp.pair_random(scene, 1)
    assert len(next_pairs) == len(random_pairs) == 30
    assert all(p.current != p.reference for p in random_pairs)
    assert rp.mean_pair_descriptor_distance(scene, next_pairs) < rp.mean_pair_descriptor_distance(
        scene, random_pairs
    )


def test_train_and_evaluate():
    scene = make_scene()
    model = rp.Model(make_model_config(), init_seed=1)
    cfg = rp.TrainConfig()
    cfg.learning_rate = 1e-3
    cfg.batch_size = 8
    cfg.max_epochs = 5
    cfg.convergence_window = 1000
    report = rp.train(model, rp.train_split(scene), cfg)
    assert report.epochs_run == 5
    assert report.epoch_losses[-1] < report.epoch_losses[0]

    result = rp.evaluate(model, rp.test_split(scene))
    assert result.median_position_error == rp.median(result.position_errors)
    assert all(0 <= e <= 180 for e in result.orientation_errors)


def test_checkpoint_roundtrip(tmp_path):
    model = rp.Model(make_model_config(), init_seed=3)
    path = str(tmp_path / "ckpt.json")
    model.save_checkpoint(path)
    back = rp.Model.load_checkpoint(path)
    scene = make_scene(seed=4)
    d = scene.frames[0].descriptor
    assert back.encode(d) == model.encode(d)
    assert back.s_x == model.s_x and back.s_q == model.s_q


def test_scene_jsonl_roundtrip(tmp_path):
    scene = make_scene(seed=5, aliasing=0.1)
    path = str(tmp_path / "scene.jsonl")
    rp.write_scene_jsonl(path, scene)
    back = rp.load_scene_jsonl(path)
    assert len(back) == len(scene)
    assert back.frames[0].descriptor == scene.frames[0].descriptor


def test_gradcheck_subset():
    entries = rp.run_gradcheck_suite(points_per_loss=5, seed=2)
    assert len(entries) == 8
    assert all(e.passed for e in entries)


def test_ablation_rows():
    scene = make_scene(seed=6)
    cfg = rp.TrainConfig()
    cfg.learning_rate = 1e-3
    cfg.batch_size = 8
    cfg.max_epochs = 2
    rows = rp.run_ablation(scene, make_model_config(), cfg, [rp.Combination.G], [1, 2])
    assert [r.seed for r in rows] == [1, 2]
    assert all(r.median_pos_m >= 0 for r in rows)


def test_errors_are_python_exceptions():
    with pytest.raises(rp.RelposeError):
        rp.quat_normalize(rp.Quaternion(0, 0, 0, 0))
    with pytest.raises(rp.RelposeError):
        rp.median([])
