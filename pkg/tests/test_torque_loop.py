import numpy as np
import pytest

from omnisafe.torque_loop import (DelayedPlant, TorqueController, TorqueGains,
                                  delay_free_response, run_torque_loop,
                                  spring_outer_loop, zero_force_mode)


class TestPlant:
    def test_all_zero(self):
        plant = DelayedPlant(gain=2.0, delay=3)
        out = [plant.step(0.0) for _ in range(10)]
        assert out == [0.0] * 10

    def test_unit_step_delay(self):
        plant = DelayedPlant(gain=2.0, delay=3)
        out = [plant.step(1.0) for _ in range(6)]
        assert out == [0.0, 0.0, 0.0, 2.0, 2.0, 2.0]

    def test_shift_oracle(self, rng):
        gain, delay = 1.7, 4
        plant = DelayedPlant(gain=gain, delay=delay)
        u = rng.normal(size=50)
        tau_ext = rng.normal(size=50)
        out = np.array([plant.step(ui, ei) for ui, ei in zip(u, tau_ext)])
        shifted = np.concatenate([np.zeros(delay), u[:-delay]])
        np.testing.assert_allclose(out - tau_ext, gain * shifted, atol=1e-14)

    def test_zero_delay(self):
        plant = DelayedPlant(gain=3.0, delay=0)
        assert plant.step(1.0) == 3.0

    def test_negative_delay_rejected(self):
        with pytest.raises(ValueError):
            DelayedPlant(gain=1.0, delay=-1)


class TestController:
    def test_zero_everything(self):
        ctrl = TorqueController(TorqueGains(K_p=10.0), delay=5, mode="plain-P")
        assert ctrl.step(0.0, 0.0) == 0.0

    def test_plain_p_diverges_smith_settles(self):
        gains = TorqueGains(K_p=10.0, G_hat=1.0)
        plain = run_torque_loop(
            TorqueController(gains, delay=5, mode="plain-P"),
            DelayedPlant(gain=1.0, delay=5), 1.0, steps=200)
        assert np.max(np.abs(plain["tau_s"])) > 1e3

        smith = run_torque_loop(
            TorqueController(gains, delay=5, mode="smith"),
            DelayedPlant(gain=1.0, delay=5), 1.0, steps=500)
        assert abs(smith["tau_s"][-1] - 1.0) < 1e-6

    def test_constant_disturbance_fixed_point(self):
        # steady state solves u = (K_ff tau_d + K_p(tau_d - tau_s)
        # + K_p G_hat u)/(1 + K_p G_hat), tau_s = G u + tau_ext
        K_p, G, tau_d, tau_ext = 7.0, 1.3, 0.8, 0.5
        gains = TorqueGains(K_p=K_p, G_hat=G)
        out = run_torque_loop(
            TorqueController(gains, delay=4, mode="smith"),
            DelayedPlant(gain=G, delay=4), tau_d, tau_ext, steps=800)
        lhs = np.array([[1.0 + K_p * gains.G_hat - K_p * gains.G_hat, K_p],
                        [-G, 1.0]])
        rhs = np.array([(gains.K_ff + K_p) * tau_d, tau_ext])
        u_star, tau_s_star = np.linalg.solve(lhs, rhs)
        assert out["tau_s"][-1] == pytest.approx(tau_s_star, abs=1e-9)
        assert out["u"][-1] == pytest.approx(u_star, abs=1e-9)
        # matches the published disturbance attenuation
        assert tau_s_star == pytest.approx(tau_d + tau_ext / (1 + K_p * G))

    def test_smith_impulse_matches_shifted_delay_free(self):
        delay = 5
        gains = TorqueGains(K_p=10.0, G_hat=1.0)
        impulse = np.zeros(500)
        impulse[0] = 1.0
        smith = run_torque_loop(
            TorqueController(gains, delay=delay, mode="smith"),
            DelayedPlant(gain=1.0, delay=delay), impulse)
        free = delay_free_response(gains, 1.0, impulse)
        shifted = np.concatenate([np.zeros(delay), free[:-delay]])
        np.testing.assert_allclose(smith["tau_s"], shifted, atol=1e-9)

    def test_stability_frontier(self):
        def stable(mode, k_p):
            gains = TorqueGains(K_p=float(k_p), G_hat=1.0)
            out = run_torque_loop(TorqueController(gains, delay=5, mode=mode),
                                  DelayedPlant(gain=1.0, delay=5),
                                  1.0, steps=2000)
            return np.all(np.abs(out["tau_s"]) < 50.0)

        def frontier(mode, cap=40):
            best = 0
            for k_p in range(1, cap + 1):
                if stable(mode, k_p):
                    best = k_p
                else:
                    break
            return best

        assert frontier("plain-P") < frontier("smith")

    def test_pi_mode_integrates_out_error(self):
        gains = TorqueGains(K_p=0.3, K_i=0.01, G_hat=1.0, K_ff=0.0,
                            windup_limit=1000.0)
        out = run_torque_loop(TorqueController(gains, delay=2, mode="PI"),
                              DelayedPlant(gain=1.0, delay=2), 1.0,
                              steps=6000)
        assert abs(out["tau_s"][-1] - 1.0) < 1e-3

    def test_default_windup_clamp_tracks_tau_d(self):
        # without an explicit limit the accumulator clamps at 10x the
        # largest desired torque, so a long saturation cannot wind up
        gains = TorqueGains(K_p=0.3, K_i=0.01, G_hat=1.0, K_ff=0.0)
        ctrl = TorqueController(gains, delay=2, mode="PI")
        plant = DelayedPlant(gain=0.0, delay=2)   # dead plant: it never tracks
        out = run_torque_loop(ctrl, plant, 1.0, steps=5000)
        assert ctrl._integral == pytest.approx(10.0)
        assert np.max(np.abs(out["u"])) <= gains.K_i * 10.0 + gains.K_p

    def test_bad_mode_rejected(self):
        with pytest.raises(ValueError):
            TorqueController(TorqueGains(), delay=1, mode="pid")


class TestZeroForce:
    def test_no_disturbance(self):
        ctrl = TorqueController(TorqueGains(K_p=9.0, G_hat=1.0), delay=3)
        out = zero_force_mode(ctrl, DelayedPlant(gain=1.0, delay=3),
                              np.zeros(100))
        np.testing.assert_array_equal(out["u"], 0.0)
        np.testing.assert_array_equal(out["tau_s"], 0.0)

    def test_residual_attenuation(self):
        # tau_ext = 1, K_p = 9, G = 1 -> steady sensed torque 0.1
        ctrl = TorqueController(TorqueGains(K_p=9.0, G_hat=1.0), delay=3)
        out = zero_force_mode(ctrl, DelayedPlant(gain=1.0, delay=3),
                              np.ones(600))
        assert out["tau_s"][-1] == pytest.approx(0.1, abs=1e-9)

    def test_ramp_tracking_slope(self):
        K_p, G = 9.0, 1.0
        ctrl = TorqueController(TorqueGains(K_p=K_p, G_hat=G), delay=3)
        ramp = 0.01 * np.arange(1000)
        out = zero_force_mode(ctrl, DelayedPlant(gain=G, delay=3), ramp)
        u_slope = np.mean(np.diff(out["u"][500:]))
        expected = -K_p / (1.0 + K_p * G) * 0.01
        assert u_slope == pytest.approx(expected, rel=1e-6)


class TestSpringOuterLoop:
    def make_inner(self):
        gains = TorqueGains(K_p=10.0, G_hat=1.0)
        return (TorqueController(gains, delay=5, mode="smith"),
                DelayedPlant(gain=1.0, delay=5))

    def test_published_frequency(self):
        # I = 0.71 kg m^2 with k = (2 pi 0.4)^2 I = 4.48 N m / rad
        ctrl, plant = self.make_inner()
        k = (2.0 * np.pi * 0.4) ** 2 * 0.71
        assert k == pytest.approx(4.48, abs=5e-3)
        assert k == pytest.approx(4.47, rel=0.01)
        out = spring_outer_loop(k, 0.71, ctrl, plant, dt=1e-3, duration=10.0)
        assert out["frequency"] == pytest.approx(0.4, rel=0.05)

    def test_frequency_scales_with_inertia(self):
        k = 4.48
        freqs = []
        for inertia in (0.71, 1.42):
            ctrl, plant = self.make_inner()
            freqs.append(spring_outer_loop(k, inertia, ctrl, plant, dt=1e-3,
                                           duration=20.0)["frequency"])
        assert freqs[0] / freqs[1] == pytest.approx(np.sqrt(2.0), rel=0.02)

    def test_zero_stiffness_drifts(self):
        ctrl, plant = self.make_inner()
        out = spring_outer_loop(0.0, 0.71, ctrl, plant, dt=1e-3,
                                duration=2.0, angle0=0.0, tau_ext=1.0)
        angle = out["angle"]
        assert np.all(np.diff(angle[100:]) > 0.0)
        assert out["frequency"] == 0.0
