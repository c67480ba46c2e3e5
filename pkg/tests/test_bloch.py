import math

import numpy as np
import pytest

from ionqsim.bloch import (DetectionModel, DrivePulse, PureState, Z_PLUS,
                           born_probability, detect, evolve, measure,
                           rabi_excitation_probability, ramsey_probability,
                           state_from_angles)
from oracles import evolve_oracle, overlap_probability


class TestStateFromAngles:
    def test_poles_and_equator(self):
        np.testing.assert_allclose(state_from_angles(0.0, 0.0), [0, 0, 1], atol=1e-15)
        np.testing.assert_allclose(state_from_angles(math.pi / 2, 0.0), [1, 0, 0], atol=1e-15)

    def test_generic_angle(self):
        # sin(135deg)cos(45deg), sin(135deg)sin(45deg), cos(135deg)
        s = state_from_angles(3 * math.pi / 4, math.pi / 4)
        np.testing.assert_allclose(s, [0.5, 0.5, -0.7071067811865476], atol=1e-15)

    @pytest.mark.parametrize("theta,phi", [(-0.1, 0.0), (math.pi + 0.1, 0.0),
                                           (1.0, -0.1), (1.0, 2 * math.pi)])
    def test_out_of_range_rejected(self, theta, phi):
        with pytest.raises(ValueError):
            state_from_angles(theta, phi)
        with pytest.raises(ValueError):
            PureState(theta, phi)


class TestEvolve:
    def test_resonant_pi_pulse_inverts(self):
        pulse = DrivePulse(rabi=1.0, detuning=0.0, duration=math.pi)
        np.testing.assert_allclose(evolve(Z_PLUS, pulse), [0, 0, -1], atol=1e-12)

    def test_free_precession_fixes_pole(self):
        pulse = DrivePulse(rabi=0.0, detuning=3.0, duration=1.7)
        np.testing.assert_allclose(evolve(Z_PLUS, pulse), Z_PLUS, atol=1e-15)

    def test_free_precession_sign_against_oracle(self):
        # sign convention of the frame is fixed by the 2x2 expm oracle
        delta, t = 0.9, 1.3
        pulse = DrivePulse(rabi=0.0, detuning=delta, duration=t)
        got = evolve(np.array([1.0, 0.0, 0.0]), pulse)
        want = evolve_oracle([1.0, 0.0, 0.0], 0.0, delta, t)
        np.testing.assert_allclose(got, want, atol=1e-12)
        np.testing.assert_allclose(got, [math.cos(delta * t), math.sin(delta * t), 0.0],
                                   atol=1e-12)

    def test_matches_matrix_exponential_oracle(self):
        rng = np.random.default_rng(11)
        for _ in range(200):
            theta, phi = math.acos(rng.uniform(-1, 1)), rng.uniform(0, 2 * math.pi)
            s = state_from_angles(theta, phi)
            pulse = DrivePulse(rabi=rng.uniform(0, 5), detuning=rng.uniform(-5, 5),
                               duration=rng.uniform(0, 4), phase=rng.uniform(0, 2 * math.pi))
            got = evolve(s, pulse)
            want = evolve_oracle(s, pulse.rabi, pulse.detuning, pulse.duration, pulse.phase)
            np.testing.assert_allclose(got, want, atol=1e-12)

    def test_norm_preserved(self):
        rng = np.random.default_rng(12)
        for _ in range(300):
            s = state_from_angles(math.acos(rng.uniform(-1, 1)), rng.uniform(0, 2 * math.pi))
            pulse = DrivePulse(rabi=rng.uniform(0, 10), detuning=rng.uniform(-10, 10),
                               duration=rng.uniform(0, 10), phase=rng.uniform(0, 2 * math.pi))
            assert abs(np.linalg.norm(evolve(s, pulse)) - 1.0) < 1e-12

    def test_semigroup_on_fixed_axis(self):
        rng = np.random.default_rng(13)
        for _ in range(100):
            s = state_from_angles(math.acos(rng.uniform(-1, 1)), rng.uniform(0, 2 * math.pi))
            rabi, det, phase = rng.uniform(0, 3), rng.uniform(-3, 3), rng.uniform(0, 2 * math.pi)
            t1, t2 = rng.uniform(0, 2), rng.uniform(0, 2)
            two_step = evolve(evolve(s, DrivePulse(rabi, det, t1, phase)),
                              DrivePulse(rabi, det, t2, phase))
            one_step = evolve(s, DrivePulse(rabi, det, t1 + t2, phase))
            np.testing.assert_allclose(two_step, one_step, atol=1e-10)

    def test_pulse_validation(self):
        with pytest.raises(ValueError):
            DrivePulse(rabi=-1.0)
        with pytest.raises(ValueError):
            DrivePulse(rabi=1.0, duration=-1.0)


class TestRabiProbability:
    def test_resonant_pulses(self):
        assert rabi_excitation_probability(1.0, 0.0, math.pi) == pytest.approx(1.0, abs=1e-12)
        assert rabi_excitation_probability(1.0, 0.0, math.pi / 2) == pytest.approx(0.5, abs=1e-12)

    def test_detuned_value(self):
        # Omega = delta: P1 = sin^2(pi/sqrt(2))/2 = 0.31661...
        got = rabi_excitation_probability(1.0, 1.0, math.pi)
        assert got == pytest.approx(0.5 * math.sin(math.pi / math.sqrt(2)) ** 2, abs=1e-14)

    def test_degenerate_limit(self):
        assert rabi_excitation_probability(0.0, 0.0, 1.0) == 0.0

    def test_agrees_with_evolve_composition(self):
        rng = np.random.default_rng(14)
        for _ in range(1000):
            rabi, det, t = rng.uniform(0, 5), rng.uniform(-5, 5), rng.uniform(0, 5)
            direct = rabi_excitation_probability(rabi, det, t)
            s = evolve(Z_PLUS, DrivePulse(rabi, det, t))
            composed = born_probability(s, PureState(math.pi))
            assert abs(direct - composed) < 1e-10


class TestRamsey:
    def test_resonant_pulses_compose_to_pi(self):
        pulse = DrivePulse(rabi=2.0, detuning=0.0, duration=math.pi / 4)
        for t_p in (0.0, 0.3, 2.0):
            assert ramsey_probability(pulse, t_p) == pytest.approx(1.0, abs=1e-12)

    def test_half_period_null_in_ideal_limit(self):
        # pulse duration -> 0 at fixed pi/2 area; delta * t_p = pi
        omega, delta = 1e7, 1.0
        pulse = DrivePulse(rabi=omega, detuning=delta, duration=0.5 * math.pi / omega)
        assert ramsey_probability(pulse, math.pi / delta) == pytest.approx(0.0, abs=1e-5)

    def test_fringe_period_at_paper_detuning(self):
        # detuning 103.9 Hz -> fringe period 1/103.9 s in precession time
        delta = 2 * math.pi * 103.9
        omega = 2 * math.pi * 50e3
        pulse = DrivePulse(rabi=omega, detuning=delta, duration=0.5 * math.pi / omega)
        period = 1.0 / 103.9
        for t_p in (0.0, 0.25 * period, 0.4 * period):
            p0 = ramsey_probability(pulse, t_p)
            p1 = ramsey_probability(pulse, t_p + period)
            assert p1 == pytest.approx(p0, abs=1e-6)
        assert ramsey_probability(pulse, 0.5 * period) == pytest.approx(0.0, abs=1e-4)


class TestBornProbability:
    def test_aligned_and_orthogonal(self):
        m = PureState(0.7, 1.1)
        assert born_probability(m.bloch(), m) == pytest.approx(1.0, abs=1e-12)
        orth = state_from_angles(0.7 + math.pi / 2, 1.1)
        assert born_probability(orth, m) == pytest.approx(0.5, abs=1e-12)

    def test_overlap_with_z(self):
        s = state_from_angles(3 * math.pi / 4, math.pi / 4)
        # cos^2(3 pi / 8)
        assert born_probability(s, PureState(0.0)) == pytest.approx(0.14644660940672627,
                                                                    abs=1e-14)

    def test_equals_amplitude_overlap(self):
        rng = np.random.default_rng(15)
        for _ in range(300):
            ts, ps = math.acos(rng.uniform(-1, 1)), rng.uniform(0, 2 * math.pi)
            tm, pm = math.acos(rng.uniform(-1, 1)), rng.uniform(0, 2 * math.pi)
            got = born_probability(state_from_angles(ts, ps), PureState(tm, pm))
            assert abs(got - overlap_probability(tm, pm, ts, ps)) < 1e-12

    def test_antipode_completeness(self):
        rng = np.random.default_rng(16)
        for _ in range(300):
            s = state_from_angles(math.acos(rng.uniform(-1, 1)), rng.uniform(0, 2 * math.pi))
            m = PureState(math.acos(rng.uniform(-1, 1)), rng.uniform(0, 2 * math.pi))
            total = born_probability(s, m) + born_probability(s, m.antipode())
            assert abs(total - 1.0) < 1e-12


class TestMeasure:
    def test_deterministic_at_poles(self):
        rng = np.random.default_rng(17)
        m = PureState(1.0, 2.0)
        for _ in range(50):
            outcome, collapsed = measure(m.bloch(), m, rng)
            assert outcome == 1
            np.testing.assert_allclose(collapsed, m.bloch(), atol=1e-15)
            outcome, collapsed = measure(-m.bloch(), m, rng)
            assert outcome == -1
            np.testing.assert_allclose(collapsed, -m.bloch(), atol=1e-15)

    def test_projection_idempotent(self):
        rng = np.random.default_rng(18)
        for _ in range(100):
            s = state_from_angles(math.acos(rng.uniform(-1, 1)), rng.uniform(0, 2 * math.pi))
            m = PureState(math.acos(rng.uniform(-1, 1)), rng.uniform(0, 2 * math.pi))
            outcome, collapsed = measure(s, m, rng)
            for _ in range(3):
                again, collapsed = measure(collapsed, m, rng)
                assert again == outcome

    def test_frequency_matches_born(self):
        rng = np.random.default_rng(19)
        s = state_from_angles(math.pi / 2, 0.0)   # orthogonal to z
        n = 100_000
        hits = sum(measure(s, PureState(0.0), rng)[0] == 1 for _ in range(n))
        sigma = math.sqrt(0.25 / n)
        assert abs(hits / n - 0.5) < 4 * sigma

    def test_generic_direction_frequency(self):
        rng = np.random.default_rng(20)
        s = state_from_angles(0.4, 0.3)
        m = PureState(1.2, 2.0)
        p = born_probability(s, m)
        n = 100_000
        hits = sum(measure(s, m, rng)[0] == 1 for _ in range(n))
        assert abs(hits / n - p) < 4 * math.sqrt(p * (1 - p) / n)


class TestDetectionModel:
    def test_poisson_tail_derivation(self):
        # P(count <= 1 | mean 5) = e^-5 (1 + 5)
        model = DetectionModel.from_counts(on_mean=5.0, off_mean=0.05, threshold=1)
        assert 1.0 - model.eta1 == pytest.approx(6.0 * math.exp(-5.0), abs=1e-12)
        assert model.eta0 == pytest.approx(math.exp(-0.05) * 1.05, abs=1e-12)

    def test_paper_operating_point(self):
        # mean counts about 5 ("on") and 0.2 ("off"); threshold set so
        # that "on" is misread in less than 0.5% of cases
        model = DetectionModel.from_counts(on_mean=5.3, off_mean=0.2, threshold=0)
        assert 1.0 - model.eta1 < 0.005
        assert model.eta0 == pytest.approx(math.exp(-0.2), abs=1e-12)

    def test_zero_off_mean_never_misreads_off(self):
        rng = np.random.default_rng(21)
        model = DetectionModel.from_counts(on_mean=9.0, off_mean=0.0, threshold=0)
        for _ in range(200):
            observed_on, count = detect(False, model, rng)
            assert not observed_on and count == 0

    def test_marginal_error_rates(self):
        rng = np.random.default_rng(22)
        model = DetectionModel.from_counts(on_mean=5.3, off_mean=0.2, threshold=0)
        n = 50_000
        on_misread = sum(not detect(True, model, rng)[0] for _ in range(n)) / n
        off_misread = sum(detect(False, model, rng)[0] for _ in range(n)) / n
        for rate, expected in ((on_misread, 1 - model.eta1), (off_misread, 1 - model.eta0)):
            assert abs(rate - expected) < 4 * math.sqrt(expected * (1 - expected) / n)

    def test_efficiency_only_model(self):
        rng = np.random.default_rng(23)
        model = DetectionModel.from_efficiencies(0.9, 0.95)
        n = 50_000
        off_ok = sum(not detect(False, model, rng)[0] for _ in range(n)) / n
        assert abs(off_ok - 0.9) < 4 * math.sqrt(0.9 * 0.1 / n)

    def test_validation(self):
        with pytest.raises(ValueError):
            DetectionModel(eta0=0.4, eta1=0.9)
        with pytest.raises(ValueError):
            DetectionModel(eta0=0.9, eta1=0.9, on_mean=5.0, off_mean=0.2, threshold=None)
        with pytest.raises(ValueError):
            # stored efficiencies inconsistent with the Poisson tails
            DetectionModel(eta0=0.99, eta1=0.99, on_mean=5.0, off_mean=0.2, threshold=0)
        with pytest.raises(ValueError):
            DetectionModel.from_counts(on_mean=5.0, off_mean=0.2, threshold=-1)
        # a threshold starving eta1 below 1/2 is not a valid model
        with pytest.raises(ValueError):
            DetectionModel.from_counts(on_mean=5.0, off_mean=0.2, threshold=10)
