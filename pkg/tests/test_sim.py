import dataclasses

import numpy as np
import pytest
from scipy.spatial.transform import Rotation

import wbtrack.sim as sim
from wbtrack.geometry import quat_from_rpy, yaw_quat, quat_mul, quat_rotate
from wbtrack.sim import (
    GRAVITY,
    SIM_DT,
    IntegrationFault,
    PhysicalParams,
    RandomizationRanges,
    keypoint_positions,
    load_model,
    pd_torques,
    randomize_params,
    reset_to_frame,
    step,
)
from wbtrack.sim.fk import forward_kinematics, keypoint_world
from wbtrack.sim.physics import advance_python


def airborne_frame(clip, z=6.0):
    f = clip.frame(0)
    pos = f.root_pos.copy()
    pos[2] = z
    return dataclasses.replace(
        f, root_pos=pos, root_lin_vel=np.zeros(3), root_ang_vel=np.zeros(3)
    )


class TestReset:
    def test_standing_reset(self, test_model, stand_clip):
        st = reset_to_frame(test_model, stand_clip.frame(0))
        assert np.all(st.root_lin_vel == 0)
        assert np.all(st.dof_vel == 0)
        assert st.foot_contact.all()

    def test_midair_reset(self, test_model, stand_clip):
        st = reset_to_frame(test_model, airborne_frame(stand_clip))
        assert not st.foot_contact.any()
        st, _ = sim.advance(test_model, st, test_model.default_pose[None], PhysicalParams.nominal(test_model), 10)
        assert np.all(st.air_time > 0)

    def test_keypoints_match_frame(self, test_model, walk_clip):
        f = walk_clip.frame(30)
        st = reset_to_frame(test_model, f)
        kp = keypoint_positions(test_model, st)[0]
        np.testing.assert_allclose(kp, f.keypoints_local, atol=1e-6)

    def test_dimension_mismatch(self, g1_model, stand_clip):
        with pytest.raises(ValueError):
            reset_to_frame(g1_model, stand_clip.frame(0))


class TestPdTorques:
    def test_setpoint_equilibrium(self, test_model, stand_clip):
        st = reset_to_frame(test_model, stand_clip.frame(0))
        tau = pd_torques(test_model, st, st.dof_pos)
        np.testing.assert_allclose(tau, 0.0)

    def test_direct_formula(self, test_model, stand_clip):
        st = reset_to_frame(test_model, stand_clip.frame(0))
        J = test_model.num_joints
        tau = pd_torques(test_model, st, st.dof_pos + 0.5, kp=np.full(J, 10.0), kd=np.zeros(J))
        np.testing.assert_allclose(tau, 5.0)

    def test_saturation(self, test_model, stand_clip):
        st = reset_to_frame(test_model, stand_clip.frame(0))
        tau = pd_torques(test_model, st, st.dof_pos + 100.0)
        np.testing.assert_allclose(tau[0], test_model.torque_limit)

    def test_nan_action_rejected(self, test_model, stand_clip):
        st = reset_to_frame(test_model, stand_clip.frame(0))
        bad = st.dof_pos.copy()
        bad[0, 0] = np.nan
        with pytest.raises(ValueError):
            pd_torques(test_model, st, bad)


class TestStep:
    def test_standing_equilibrium(self, test_model, stand_clip):
        st = reset_to_frame(test_model, stand_clip.frame(0))
        z0 = st.root_pos[0, 2]
        for _ in range(500):
            st = step(test_model, st, np.zeros((1, test_model.num_joints)))
        assert abs(st.root_pos[0, 2] - z0) < 1e-3

    def test_ballistic(self, test_model, stand_clip):
        st = reset_to_frame(test_model, airborne_frame(stand_clip))
        for _ in range(250):
            st = step(test_model, st, np.zeros((1, test_model.num_joints)))
        assert abs(st.root_lin_vel[0, 2] + GRAVITY * 0.5) < 1e-6

    def test_friction_cap_audit(self, test_model, walk_clip):
        params = PhysicalParams(friction=np.array([0.5]), motor_scale=np.ones((1, 12)))
        st = reset_to_frame(test_model, walk_clip.frame(0), params)
        rng = np.random.default_rng(0)
        for i in range(200):
            targets = test_model.default_pose + 0.3 * rng.normal(size=12)
            tau = pd_torques(test_model, st, targets[None], params)
            st = step(test_model, st, tau, params=params)
            ft = np.linalg.norm(st.foot_force[0, :, :2], axis=-1)
            # per-foot force sums two capped points, so the cap doubles
            assert np.all(ft <= 2 * 0.5 * st.foot_force[0, :, 2] + 1e-9)

    def test_divergence_fault(self, test_model, stand_clip):
        st = reset_to_frame(test_model, stand_clip.frame(0))
        st.root_lin_vel[0, 0] = np.inf
        with pytest.raises(IntegrationFault):
            step(test_model, st, np.zeros((1, test_model.num_joints)))

    def test_determinism(self, test_model, walk_clip):
        def run():
            st = reset_to_frame(test_model, walk_clip.frame(5))
            tau = np.full((1, test_model.num_joints), 0.7)
            for _ in range(50):
                st = step(test_model, st, tau)
            return st
        a, b = run(), run()
        assert np.array_equal(a.root_pos, b.root_pos)
        assert np.array_equal(a.dof_pos, b.dof_pos)

    def test_energy_audit(self, test_model, stand_clip):
        f = airborne_frame(stand_clip, z=8.0)
        f = dataclasses.replace(
            f,
            root_lin_vel=np.array([1.0, 0.5, 2.0]),
            root_ang_vel=np.array([0.3, -0.2, 0.4]),
        )
        st = reset_to_frame(test_model, f, dof_vel=np.full(12, 0.5))
        m, I = test_model.total_mass, test_model.rot_inertia

        def energy(s):
            return (
                0.5 * m * np.sum(s.root_lin_vel[0] ** 2)
                + m * GRAVITY * s.root_pos[0, 2]
                + 0.5 * I * np.sum(s.root_ang_vel[0] ** 2)
                + 0.5 * np.sum(test_model.joint_inertia * s.dof_vel[0] ** 2)
            )

        e0 = energy(st)
        for _ in range(500):
            st = step(test_model, st, np.zeros((1, 12)))
        assert not st.foot_contact.any()
        assert abs(energy(st) - e0) / e0 < 0.01

    def test_contact_complementarity(self, test_model, stand_clip):
        st = reset_to_frame(test_model, airborne_frame(stand_clip, z=2.0))
        for _ in range(100):
            st = step(test_model, st, np.zeros((1, 12)))
            if not st.foot_contact.any():
                np.testing.assert_allclose(st.foot_force[0, :, 2], 0.0)


class TestRandomize:
    def test_degenerate_range(self, test_model):
        p = randomize_params(test_model, 0, RandomizationRanges(friction=(1.0, 1.0)))
        assert p.friction[0] == 1.0

    def test_seed_determinism(self, test_model):
        a = randomize_params(test_model, 42, n=8)
        b = randomize_params(test_model, 42, n=8)
        assert np.array_equal(a.friction, b.friction)
        assert np.array_equal(a.motor_scale, b.motor_scale)

    def test_monte_carlo_mean(self, test_model):
        p = randomize_params(test_model, 1, RandomizationRanges(friction=(0.3, 1.2)), n=10_000)
        assert abs(p.friction.mean() - 0.75) < 0.02


class TestKeypoints:
    def test_default_pose_geometry(self, test_model, stand_clip):
        st = reset_to_frame(test_model, stand_clip.frame(0))
        kp = keypoint_positions(test_model, st)[0]
        # shoulder keypoints sit at their attachment offsets from the root
        np.testing.assert_allclose(kp[0], [0.0, 0.16, 0.30], atol=1e-12)
        np.testing.assert_allclose(kp[1], [0.0, -0.16, 0.30], atol=1e-12)

    def test_world_yaw_translation_invariance(self, test_model, walk_clip):
        f = walk_clip.frame(40)
        st = reset_to_frame(test_model, f)
        kp0 = keypoint_positions(test_model, st)[0]
        dq = yaw_quat(np.pi / 3)
        st2 = st.copy()
        st2.root_pos = st.root_pos + np.array([5.0, -1.0, 0.0])
        st2.root_quat = quat_mul(dq[None], st.root_quat)
        st2.root_lin_vel = quat_rotate(dq[None], st.root_lin_vel)
        kp1 = keypoint_positions(test_model, st2)[0]
        np.testing.assert_allclose(kp1, kp0, atol=1e-9)

    @pytest.mark.parametrize("model_name", ["test_12dof", "g1_like_23dof", "h1_like_21dof"])
    def test_fk_against_scipy_oracle(self, model_name):
        """Independent chain-multiplication FK using scipy rotations."""
        model = load_model(model_name)
        rng = np.random.default_rng(5)
        q = rng.uniform(model.q_min, model.q_max)
        root_pos = rng.normal(size=3)
        quat_xyzw = Rotation.random(random_state=3).as_quat()
        root_quat = np.r_[quat_xyzw[3], quat_xyzw[:3]]

        rots = {}
        poss = {}
        base_rot = Rotation.from_quat(np.r_[root_quat[1:], root_quat[0]])
        for j in range(model.num_joints):
            p = model.parent[j]
            parent_rot = base_rot if p < 0 else rots[p]
            parent_pos = root_pos if p < 0 else poss[p]
            poss[j] = parent_pos + parent_rot.apply(model.offset[j])
            rots[j] = parent_rot * Rotation.from_rotvec(model.axis[j] * q[j])
        expected = np.stack(
            [poss[model.kp_joint[k]] + rots[model.kp_joint[k]].apply(model.kp_offset[k])
             for k in range(12)]
        )
        actual = keypoint_world(model, root_pos, root_quat, q)[0]
        np.testing.assert_allclose(actual, expected, atol=1e-9)


class TestBackendParity:
    def test_advance_matches_python(self, g1_model):
        from wbtrack.motion import SynthParams, synth_clip

        clip = synth_clip("walk", SynthParams(model=g1_model), seed=3)
        st = reset_to_frame(g1_model, clip.frame(10), n=3)
        params = randomize_params(g1_model, 0, n=3)
        targets = np.tile(g1_model.default_pose, (3, 1)) + 0.1
        a, la = sim.advance(g1_model, st.copy(), targets, params, 10)
        b, lb = advance_python(g1_model, st.copy(), targets, params, 10)
        for k in ("root_pos", "root_quat", "root_lin_vel", "root_ang_vel",
                  "dof_pos", "dof_vel", "foot_force", "air_time"):
            np.testing.assert_allclose(
                getattr(a, k), getattr(b, k), atol=1e-10, err_msg=k
            )
        assert np.array_equal(a.foot_contact, b.foot_contact)
        np.testing.assert_allclose(la, lb, atol=1e-12)


class TestModelParsing:
    def test_shipped_models(self):
        for name, J in (("g1_like_23dof", 23), ("h1_like_21dof", 21), ("test_12dof", 12)):
            m = load_model(name)
            assert m.num_joints == J
            assert len(m.kp_joint) == 12

    def test_bad_limits(self, test_model):
        from wbtrack.sim.model import ModelParseError, parse_model
        import importlib.resources

        text = (
            importlib.resources.files("wbtrack.sim")
            .joinpath("models/test_12dof.txt")
            .read_text()
        )
        with pytest.raises(ModelParseError):
            parse_model(text.replace("limits=-2.5,2.5", "limits=2.5,-2.5"))
