import math

import numpy as np
import pytest

from invharm import (
    AnalysisReport,
    Diagnostics,
    DomainError,
    NormalModes,
    SqueezeSpec,
    Trajectory,
    WindowTooShort,
    approx_D,
    approx_f1,
    coeffs_general,
    critical_time_derived,
    critical_time_paper,
    decoherence_time,
    dtilde,
    find_divergences,
    fit_entropy_line,
    fit_entropy_log,
    kappa_default,
    run_exact,
)
from invharm.coefficients import EnvVariance

from conftest import BASE


def synthetic_trajectory(times, S, omega=1.0):
    diags = [
        Diagnostics(a=0.5, A=1.0, S=s, S_approx=s, varsigma=0.0, purity=1.0, E=0.5)
        for s in S
    ]
    return Trajectory(
        times=np.asarray(times, float),
        moments=np.zeros((len(times), 5)),
        diags=diags,
        meta={"omega": omega},
    )


class TestCriticalTime:
    def test_paper_base_value(self):
        # -2 ln(pi/64) + ln(1/2) with omega = lam = 1
        t = critical_time_paper(1.0, 1.0, math.pi / 64)
        assert t == pytest.approx(-2.0 * math.log(math.pi / 64) + math.log(0.5), rel=1e-12)
        assert t == pytest.approx(5.3352, abs=5e-4)

    def test_derived_base_value(self):
        # -2 ln(pi/64) + ln(1) with omega = lam = 1
        t = critical_time_derived(1.0, 1.0, math.pi / 64)
        assert t == pytest.approx(-2.0 * math.log(math.pi / 64), rel=1e-12)
        assert t == pytest.approx(6.0283, abs=5e-4)

    def test_logarithmic_coupling_dependence(self):
        for lam in (0.5, 1.0, 2.0):
            base = critical_time_derived(1.0, lam, 0.1)
            weaker = critical_time_derived(1.0, lam, 0.1 / math.e**2)
            assert weaker - base == pytest.approx(4.0 / lam, rel=1e-12)
            basep = critical_time_paper(1.0, lam, 0.1)
            weakerp = critical_time_paper(1.0, lam, 0.1 / math.e**2)
            assert weakerp - basep == pytest.approx(4.0 / lam, rel=1e-12)

    def test_domain_errors(self):
        with pytest.raises(DomainError):
            critical_time_paper(1.0, 0.0, 0.1)
        with pytest.raises(DomainError):
            critical_time_paper(1.0, -1.0, 0.1)
        with pytest.raises(DomainError):
            critical_time_derived(1.0, 1.0, 0.0)
        with pytest.raises(DomainError):
            critical_time_derived(1.0, 1.0, 1.5)


class TestFindDivergences:
    def test_decoupled_no_roots(self):
        modes = NormalModes(omega=1.0, lambda_sq=1.0, theta_c=0.0, m_s=1.0, m_e=1.0)
        assert find_divergences(modes, 100.0) == []

    def test_base_first_root(self, base_modes):
        roots = find_divergences(base_modes, 10.0)
        assert len(roots) >= 1
        t1 = roots[0]
        assert abs(dtilde(base_modes, t1)) < 1e-8
        assert t1 == pytest.approx(7.994, abs=2e-3)
        t_c = critical_time_derived(1.0, 1.0, math.pi / 64)
        assert t1 >= t_c - 0.5

    def test_roots_sorted_and_bracketed(self, base_modes):
        roots = find_divergences(base_modes, 20.0)
        assert roots == sorted(roots)
        assert all(0.0 < r < 20.0 for r in roots)
        for r in roots:
            assert dtilde(base_modes, r - 1e-4) * dtilde(base_modes, r + 1e-4) < 0

    def test_stable_environment_against_dense_scan(self):
        # strong mixing with a stable environment: the determinant
        # oscillates through zero repeatedly; check the scanning root
        # finder against a brute-force fine grid
        modes = NormalModes(
            omega=1.0, lambda_sq=-16.0, theta_c=math.pi / 4, m_s=1.0, m_e=1.0
        )
        roots = find_divergences(modes, 50.0)
        ts = np.linspace(0.0, 50.0, 200001)
        vals = np.array([dtilde(modes, t) for t in ts])
        brute = ts[:-1][np.sign(vals[:-1]) * np.sign(vals[1:]) < 0]
        assert len(roots) == len(brute) > 10
        assert np.abs(np.array(roots) - brute).max() < 5e-4

    def test_stable_environment_weak_mixing_no_roots(self):
        # weak mixing with a stable environment: bounded determinant
        # oscillation that never reaches zero
        modes = NormalModes(
            omega=1.0, lambda_sq=-16.0, theta_c=math.pi / 10, m_s=1.0, m_e=1.0
        )
        assert find_divergences(modes, 50.0) == []

    def test_rejects_nonpositive_horizon(self, base_modes):
        with pytest.raises(ValueError):
            find_divergences(base_modes, 0.0)


class TestApproxD:
    def test_unit_at_zero_coupling(self):
        assert approx_D(1.0, 1.0, 0.0, 5.0) == 1.0

    def test_tracks_exact_determinant(self):
        th = 1e-3
        modes = NormalModes(omega=1.0, lambda_sq=1.0, theta_c=th, m_s=1.0, m_e=1.0)
        t_c = critical_time_derived(1.0, 1.0, th)
        for t in np.linspace(1.0, 0.8 * t_c, 30):
            exact = dtilde(modes, t)
            approx = approx_D(1.0, 1.0, th, t)
            assert abs(approx - exact) < 0.2 * max(abs(exact), abs(exact - 1.0), 0.05)


class TestApproxF1:
    def test_requires_unstable_environment(self):
        stable = NormalModes(omega=1.0, lambda_sq=-1.0, theta_c=0.1, m_s=1.0, m_e=1.0)
        with pytest.raises(DomainError):
            approx_f1(stable, 1.0)

    def test_quadruples_when_coupling_doubles(self, base_modes):
        doubled = NormalModes(
            omega=1.0, lambda_sq=1.0, theta_c=2.0 * base_modes.theta_c, m_s=1.0, m_e=1.0
        )
        r = approx_f1(doubled, 3.0) / approx_f1(base_modes, 3.0)
        assert r == pytest.approx(4.0, rel=1e-10)

    def test_growth_exponent_exact(self, base_modes):
        # log-increment over dt = 2 is exactly 2 * lam * dt
        g = math.log(approx_f1(base_modes, 5.0)) - math.log(approx_f1(base_modes, 3.0))
        assert g == pytest.approx(2.0 * base_modes.lam * 2.0, rel=1e-12)

    def test_order_of_magnitude_band(self, base_modes):
        # envelope estimate: bounds the actual diffusion scalar from
        # above within two decades over the pre-breakdown window
        env = EnvVariance(dy2=0.5, dq2=0.5)
        for t in np.linspace(3.0, 7.0, 9):
            actual = coeffs_general(base_modes, env, t).f1
            ratio = actual / approx_f1(base_modes, t)
            assert 0.01 < ratio < 10.0


class TestEntropyFits:
    def test_line_fit_exact_recovery(self):
        times = np.linspace(0.0, 20.0, 2001)
        S = 0.7 * times - 1.3
        slope, s0 = fit_entropy_line(synthetic_trajectory(times, S), (5.0, 15.0))
        assert slope == pytest.approx(0.7, rel=1e-12)
        assert s0 == pytest.approx(-1.3, rel=1e-10)

    def test_line_fit_ignores_periodic_modulation(self):
        times = np.linspace(0.0, 20.0, 4001)
        # modulation at twice the mode frequency, period pi/omega
        S = 0.7 * times - 1.3 + 0.2 * np.sin(2.0 * times)
        slope, s0 = fit_entropy_line(synthetic_trajectory(times, S), (5.0, 15.0))
        # whole-period trimming keeps the residual modulation bias an
        # order of magnitude below the modulation amplitude
        assert slope == pytest.approx(0.7, abs=0.02)
        assert s0 == pytest.approx(-1.3, abs=0.25)

    def test_line_fit_window_checks(self):
        times = np.linspace(0.0, 20.0, 201)
        traj = synthetic_trajectory(times, times)
        with pytest.raises(WindowTooShort):
            fit_entropy_line(traj, (5.0, 25.0))  # beyond trajectory
        with pytest.raises(WindowTooShort):
            fit_entropy_line(traj, (5.0, 7.0))  # < 3 modulation periods

    def test_log_fit_exact_recovery(self):
        times = np.linspace(1.0, 100.0, 2001)
        S = 2.0 + 0.5 * np.log(times)
        c0, c1 = fit_entropy_log(synthetic_trajectory(times, S), (10.0, 100.0))
        assert c0 == pytest.approx(2.0, rel=1e-10)
        assert c1 == pytest.approx(0.5, rel=1e-10)

    def test_log_fit_rejects_zero_start(self):
        times = np.linspace(0.0, 10.0, 101)
        with pytest.raises(WindowTooShort):
            fit_entropy_log(synthetic_trajectory(times, times), (0.0, 10.0))

    def test_unstable_entropy_is_not_logarithmic(self, base_modes):
        # a linearly growing entropy fits a log model poorly
        grid = np.linspace(0.0, 16.0, 801)
        traj = run_exact(base_modes, SqueezeSpec(4.0), SqueezeSpec(2.0), grid)
        c0, c1 = fit_entropy_log(traj, (5.0, 15.0))
        times = traj.times
        mask = (times >= 5.0) & (times <= 15.0)
        S = traj.entropies()[mask]
        resid = S - (c0 + c1 * np.log(times[mask]))
        assert np.sqrt(np.mean(resid**2)) / np.sqrt(np.mean(S**2)) > 0.05

    def test_base_run_slope_is_instability_rate(self, base_modes):
        grid = np.linspace(0.0, 16.0, 801)
        traj = run_exact(base_modes, SqueezeSpec(4.0), SqueezeSpec(2.0), grid)
        slope, s0 = fit_entropy_line(traj, (5.0, 15.0))
        assert slope == pytest.approx(1.0, rel=0.1)
        assert s0 < 0.0  # linear growth postponed, not instantaneous


class TestDecoherenceTime:
    def test_hand_value(self):
        # kappa * dx2 = 1: t_d = (S_d - ln|theta|)/lam
        t_d = decoherence_time(math.log(2.0), 1.0, 1.0, math.pi / 64, 1.0)
        assert t_d == pytest.approx(math.log(2.0) + math.log(64.0 / math.pi), rel=1e-12)
        assert t_d == pytest.approx(3.7073, abs=5e-4)

    def test_weaker_coupling_delays(self):
        base = decoherence_time(1.0, 1.0, 1.0, 0.1, 1.0)
        weaker = decoherence_time(1.0, 1.0, 1.0, 0.1 / math.e, 1.0)
        assert weaker - base == pytest.approx(1.0, rel=1e-12)

    def test_inverse_in_rate(self):
        a = decoherence_time(1.0, 1.0, 1.0, 0.1, 1.0)
        b = decoherence_time(1.0, 1.0, 1.0, 0.1, 2.0)
        assert a / b == pytest.approx(2.0, rel=1e-12)

    def test_requires_positive_rate(self):
        with pytest.raises(DomainError):
            decoherence_time(1.0, 1.0, 1.0, 0.1, 0.0)


class TestKappaDefault:
    def test_base_value(self, base_modes):
        assert kappa_default(base_modes) == pytest.approx(math.sqrt(2.0), rel=1e-12)

    def test_requires_unstable_environment(self):
        stable = NormalModes(omega=1.0, lambda_sq=-1.0, theta_c=0.1, m_s=1.0, m_e=1.0)
        with pytest.raises(DomainError):
            kappa_default(stable)


class TestFreeParticleOnset:
    def test_breakdown_onset_superlogarithmic_in_coupling(self):
        # for a free-particle environment the first determinant root
        # moves out much faster than the exponential-environment
        # logarithm: quartering theta pushes it out by more than 4x
        first = {}
        for th, horizon in ((math.pi / 16, 80.0), (math.pi / 64, 900.0)):
            modes = NormalModes(
                omega=1.0, lambda_sq=0.0, theta_c=th, m_s=1.0, m_e=1.0
            )
            roots = find_divergences(modes, horizon)
            assert roots, f"no root found below {horizon} for theta={th}"
            first[th] = roots[0]
        assert first[math.pi / 64] / first[math.pi / 16] > 4.0


class TestAnalysisReport:
    def test_defaults(self):
        r = AnalysisReport()
        assert r.divergence_times == []
        assert r.slope is None and r.S0 is None
