"""The momentum-quadrature oracle: accuracy contract and cross-checks."""
import math
import warnings

import numpy as np
import pytest
from scipy.integrate import IntegrationWarning

from pairloss.errors import AccuracyError, DomainError
from pairloss.params import EnvelopeKind, PacketParams
from pairloss.propagate import (relative_norm_sq, residual_probability,
                                rel_wave)
from pairloss.quadrature import (QuadratureSpec, phi_by_quadrature,
                                 quadrature_residual)

PLAIN = EnvelopeKind.PLAIN
EXCITED = EnvelopeKind.NODE_EXCITED


def free_gaussian_pair(r, t, p):
    """Textbook free spreading packet, built independently of the package.

    At gamma = 0 the relative wave is (J(r0+|r|) + J(r0-|r|))/(2 sqrt(N)) with
    J the standard free Gaussian: this is written out from the usual
    (1 + 2 i b^2 t)^{-1/2} exp[...] form, not from pairloss internals.
    """
    b, k0, r0 = p.beta, p.k0, p.r0
    den = 1.0 + 2j * b**2 * t

    def J(u):
        return (b * math.sqrt(2 * math.pi) / np.sqrt(den)
                * np.exp(-b**2 * (u - 2 * k0 * t) ** 2 / (2 * den)
                         + 1j * (k0 * u - k0**2 * t)))

    absr = abs(r)
    return 0.5 * (J(r0 + absr) + J(r0 - absr))


class TestPointwise:
    def test_spec_validation(self):
        with pytest.raises(DomainError):
            QuadratureSpec(n_sigma=4.0)
        with pytest.raises(DomainError):
            QuadratureSpec(abs_tol=0.0)
        with pytest.raises(DomainError):
            QuadratureSpec(max_subdivisions=5)

    def test_free_case_matches_textbook_form(self, hermitian):
        norm = math.sqrt(relative_norm_sq(hermitian, PLAIN))
        for r, t in ((0.0, 0.0), (4.0, 0.5), (-9.0, 1.0), (13.0, 2.0)):
            qv, _ = phi_by_quadrature(r, t, hermitian, PLAIN)
            ref = free_gaussian_pair(r, t, hermitian) / norm
            assert abs(qv - ref) < 1e-8 * max(abs(ref), 1e-4)

    def test_t0_matches_initial_state(self, golden):
        for kind in (PLAIN, EXCITED):
            for r in (-11.0, -2.0, 3.5, 10.0):
                qv, _ = phi_by_quadrature(r, 0.0, golden, kind)
                cf = rel_wave(r, 0.0, golden, kind)
                assert abs(qv - cf) < 1e-8 * max(abs(cf), 1e-6)

    def test_random_points_against_closed_form(self, golden, rng):
        t_max = 3.0 * golden.r0 / (2.0 * golden.k0)
        for kind in (PLAIN, EXCITED):
            for _ in range(100):
                r = float(rng.uniform(-22.0, 22.0))
                t = float(rng.uniform(0.0, t_max))
                qv, qe = phi_by_quadrature(r, t, golden, kind)
                cf = rel_wave(r, t, golden, kind)
                if abs(qv) > 1e-10:
                    assert abs(cf - qv) <= max(1e-6 * abs(qv), 3 * qe + 1e-13)

    def test_window_straddles_zero(self, golden):
        # k0 - 8 beta = -3 < 0: the integration is split at k = 0
        spec = QuadratureSpec(n_sigma=8.0)
        lo = golden.k0 - spec.n_sigma * golden.beta
        assert lo < 0.0
        qv, qe = phi_by_quadrature(1.0, 0.2, golden, PLAIN, spec)
        assert np.isfinite(qv) and qe < 1e-8

    def test_error_estimate_bounds_true_error(self, golden):
        tight = QuadratureSpec(abs_tol=1e-11, rel_tol=1e-9,
                               max_subdivisions=10_000)
        for r, t in ((2.0, 0.5), (-7.0, 1.0), (12.0, 1.5)):
            val, err = phi_by_quadrature(r, t, golden, PLAIN)
            ref, _ = phi_by_quadrature(r, t, golden, PLAIN, tight)
            assert abs(val - ref) <= err + 1e-14

    def test_accuracy_error_carries_payload(self, golden):
        # starve the subdivision budget at a strongly oscillatory time
        spec = QuadratureSpec(n_sigma=8.0, abs_tol=1e-13, rel_tol=1e-13,
                              max_subdivisions=10)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", IntegrationWarning)
            with pytest.raises(AccuracyError) as exc_info:
                phi_by_quadrature(0.5, 40.0, golden, PLAIN, spec)
        assert exc_info.value.estimate is not None
        assert exc_info.value.error_bound > 0.0

    def test_nonfinite_rejected(self, golden):
        with pytest.raises(DomainError):
            phi_by_quadrature(float("nan"), 0.0, golden)


class TestResidual:
    def test_hermitian_conservation(self, hermitian):
        q, err = quadrature_residual(hermitian, PLAIN, t_star=2.0)
        assert abs(q - 1.0) < 1e-8

    @pytest.mark.slow
    def test_matches_analytic_survival(self, golden):
        # two independent integration stacks (adaptive GK in k + composite GL
        # in r, versus closed form + adaptive quad in r); measured agreement
        # ~5e-5 relative, dominated by the r-integration budgets
        q, err = quadrature_residual(golden, PLAIN)
        rep = residual_probability(golden, PLAIN)
        assert q == pytest.approx(rep.integrated, rel=2e-4)
