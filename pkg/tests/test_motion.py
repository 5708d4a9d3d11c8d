import dataclasses

import numpy as np
import pytest

from wbtrack.geometry import rot_z, quat_from_rpy
from wbtrack.motion import (
    ClipParseError,
    CurationConfig,
    MotionClip,
    SynthParams,
    curate_dataset,
    load_clip,
    resample_clip,
    save_clip,
    synth_clip,
    to_local_frame,
)
from wbtrack.motion.clip import _central_diff


def write_minimal_clip(path, J=12, nframes=2, quat=(1, 0, 0, 0)):
    kp = " ".join(["0.1"] * 36)
    dof = " ".join(["0"] * J)
    with open(path, "w") as fh:
        fh.write(f"MCLIP v1 fps=50 J={J} K=12\n")
        for _ in range(nframes):
            fh.write(f"0 0 0.85 {quat[0]} {quat[1]} {quat[2]} {quat[3]} 0 0 0 0 0 0 {dof} {kp} 0.85\n")


class TestClipIO:
    def test_minimal_standing_clip(self, tmp_path):
        path = tmp_path / "stand.mclip"
        write_minimal_clip(path, J=23)
        clip = load_clip(path)
        assert clip.num_joints == 23
        assert clip.fps == 50
        assert len(clip) == 2
        assert clip.keypoints_local.shape == (2, 12, 3)

    def test_bad_quaternion_rejected(self, tmp_path):
        path = tmp_path / "bad.mclip"
        write_minimal_clip(path, quat=(0.5, 0, 0, 0))
        with pytest.raises(ClipParseError, match="line 2"):
            load_clip(path)

    def test_dimension_mismatch_names_line(self, tmp_path):
        path = tmp_path / "short.mclip"
        write_minimal_clip(path)
        with open(path, "a") as fh:
            fh.write("0 0 0.85 1 0 0 0\n")
        with pytest.raises(ClipParseError, match="line 4"):
            load_clip(path)

    def test_round_trip(self, tmp_path, walk_clip):
        path = tmp_path / "walk.mclip"
        save_clip(walk_clip, path)
        back = load_clip(path)
        for field in ("root_pos", "root_quat", "root_lin_vel", "root_ang_vel",
                      "dof_pos", "keypoints_local", "height"):
            np.testing.assert_allclose(
                getattr(back, field), getattr(walk_clip, field), atol=1e-9
            )

    def test_dash_velocities_reconstructed(self, tmp_path, walk_clip):
        path = tmp_path / "novel.mclip"
        with open(path, "w") as fh:
            fh.write(f"MCLIP v1 fps={walk_clip.fps} J={walk_clip.num_joints} K=12\n")
            for i in range(len(walk_clip)):
                fields = np.concatenate([
                    walk_clip.root_pos[i], walk_clip.root_quat[i],
                    walk_clip.dof_pos[i], walk_clip.keypoints_local[i].ravel(),
                    [walk_clip.height[i]],
                ])
                head = " ".join(f"{v:.17g}" for v in fields[:7])
                tail = " ".join(f"{v:.17g}" for v in fields[7:])
                fh.write(f"{head} - - {tail}\n")
        back = load_clip(path)
        expected = _central_diff(walk_clip.root_pos, walk_clip.fps)
        np.testing.assert_allclose(back.root_lin_vel, expected, atol=1e-9)

    def test_min_frames(self, tmp_path):
        path = tmp_path / "one.mclip"
        write_minimal_clip(path, nframes=1)
        with pytest.raises(ClipParseError):
            load_clip(path)


class TestResample:
    def test_decimation_halves_frames(self, walk_clip):
        down = resample_clip(walk_clip, 25)
        assert abs(len(down) - len(walk_clip) / 2) <= 1
        assert abs(down.duration - walk_clip.duration) <= 1.0 / 25

    def test_constant_pose_fixed_point(self, stand_clip):
        up = resample_clip(stand_clip, 173.0)
        for i in range(len(up)):
            np.testing.assert_allclose(up.dof_pos[i], stand_clip.dof_pos[0], atol=1e-12)
            np.testing.assert_allclose(up.root_pos[i], stand_clip.root_pos[0], atol=1e-12)

    def test_band_limited_round_trip(self, walk_clip):
        back = resample_clip(resample_clip(walk_clip, 200), 50)
        n = min(len(back), len(walk_clip))
        assert np.abs(back.dof_pos[:n] - walk_clip.dof_pos[:n]).max() < 1e-3

    def test_same_fps_identity(self, walk_clip):
        same = resample_clip(walk_clip, walk_clip.fps)
        np.testing.assert_allclose(same.dof_pos, walk_clip.dof_pos, atol=1e-12)

    def test_bad_fps(self, walk_clip):
        with pytest.raises(ValueError):
            resample_clip(walk_clip, 0.0)


class TestLocalFrame:
    def test_identity(self, walk_clip):
        f = walk_clip.frame(37)
        out = to_local_frame(f, f.root_pos, f.yaw)
        np.testing.assert_allclose(out.keypoints_local, f.keypoints_local, atol=1e-12)
        assert np.isclose(
            np.linalg.norm(out.root_lin_vel), np.linalg.norm(f.root_lin_vel)
        )
        np.testing.assert_allclose(out.root_pos, 0.0, atol=1e-12)

    def test_pure_yaw_offset(self, stand_clip):
        f = stand_clip.frame(0)
        kp = np.zeros((12, 3))
        kp[0] = [1.0, 0.0, 0.0]
        f = dataclasses.replace(f, keypoints_local=kp)
        out = to_local_frame(f, f.root_pos, f.yaw + np.pi / 2)
        np.testing.assert_allclose(out.keypoints_local[0], [0.0, -1.0, 0.0], atol=1e-12)

    def test_translation_invariance(self, walk_clip):
        f = walk_clip.frame(10)
        out = to_local_frame(f, f.root_pos + np.array([3.0, -2.0, 0.0]), f.yaw)
        np.testing.assert_allclose(out.keypoints_local, f.keypoints_local, atol=1e-12)

    def test_isometry(self, walk_clip):
        rng = np.random.default_rng(0)
        f = walk_clip.frame(55)
        for _ in range(20):
            pos = rng.normal(size=3)
            yaw = rng.uniform(-np.pi, np.pi)
            out = to_local_frame(f, pos, yaw)
            d0 = np.linalg.norm(
                f.keypoints_local[:, None] - f.keypoints_local[None], axis=-1
            )
            d1 = np.linalg.norm(
                out.keypoints_local[:, None] - out.keypoints_local[None], axis=-1
            )
            np.testing.assert_allclose(d0, d1, atol=1e-9)

    def test_yaw_wrapped(self, walk_clip):
        f = walk_clip.frame(0)
        out = to_local_frame(f, f.root_pos, f.yaw - 3.0)
        assert -np.pi <= out.yaw <= np.pi


class TestSynth:
    def test_stand_identical_frames(self, stand_clip):
        assert len(stand_clip) == 100
        assert np.all(stand_clip.dof_pos == stand_clip.dof_pos[0])
        assert np.all(stand_clip.root_lin_vel == 0.0)
        assert np.all(stand_clip.root_ang_vel == 0.0)

    def test_walk_mean_speed(self, test_model):
        clip = synth_clip("walk", SynthParams(model=test_model, stride=0.4, freq=1.0), seed=7)
        speed = (clip.root_pos[-1, 0] - clip.root_pos[0, 0]) / clip.duration
        assert abs(speed - 0.4) / 0.4 < 0.05

    def test_determinism(self, test_model):
        p = SynthParams(model=test_model)
        a = synth_clip("squat", p, seed=11)
        b = synth_clip("squat", p, seed=11)
        assert np.array_equal(a.dof_pos, b.dof_pos)
        assert np.array_equal(a.keypoints_local, b.keypoints_local)

    @pytest.mark.parametrize("kind", ["walk", "squat", "arm_wave", "turn", "run"])
    def test_velocity_consistency(self, test_model, kind):
        clip = synth_clip(kind, SynthParams(model=test_model), seed=3)
        expected = _central_diff(clip.root_pos, clip.fps)
        assert np.abs(clip.root_lin_vel - expected).max() < 1e-6

    def test_out_of_range_params(self, test_model):
        with pytest.raises(ValueError):
            synth_clip("walk", SynthParams(model=test_model, stride=2.0))
        with pytest.raises(ValueError):
            synth_clip("walk", SynthParams(model=test_model, freq=0.0))
        with pytest.raises(ValueError):
            synth_clip("nope", SynthParams(model=test_model))


class TestCurate:
    def test_standing_accepted(self, test_model, stand_clip):
        cfg = CurationConfig(model=test_model)
        accepted, reports = curate_dataset([stand_clip], cfg)
        assert len(accepted) == 1
        r = reports[0]
        assert r.accepted
        assert r.limit_violation_frac == 0.0
        assert r.airborne_frac == 0.0

    def test_limit_violation_fraction(self, test_model, stand_clip):
        dof = stand_clip.dof_pos.copy()
        n_bad = int(0.3 * len(stand_clip))
        dof[:n_bad, 0] = test_model.q_max[0] + 0.1
        bad = dataclasses.replace(stand_clip, dof_pos=dof, name="bad")
        cfg = CurationConfig(model=test_model)
        _, reports = curate_dataset([bad], cfg)
        assert not reports[0].accepted
        assert np.isclose(reports[0].limit_violation_frac, 0.30)

    def test_diversity_prefers_distinct_kinds(self, test_model):
        p = SynthParams(model=test_model)
        same = [synth_clip("stand", p, seed=s) for s in range(3)]
        mixed = [
            synth_clip("stand", p, seed=0),
            synth_clip("arm_wave", p, seed=1),
            synth_clip("squat", p, seed=2),
        ]
        cfg = CurationConfig(model=test_model)
        _, r_same = curate_dataset(same, cfg)
        _, r_mixed = curate_dataset(mixed, cfg)
        assert r_mixed[0].diversity_score > r_same[0].diversity_score

    def test_order_insensitive(self, test_model):
        p = SynthParams(model=test_model)
        clips = [synth_clip(k, p, seed=i) for i, k in enumerate(["stand", "walk", "squat"])]
        cfg = CurationConfig(model=test_model)
        _, fwd = curate_dataset(clips, cfg)
        _, rev = curate_dataset(clips[::-1], cfg)
        assert [r.name for r in rev] == [r.name for r in fwd][::-1]
        for a, b in zip(fwd, rev[::-1]):
            assert a == b

    def test_empty_input(self, test_model):
        with pytest.raises(ValueError):
            curate_dataset([], CurationConfig(model=test_model))
