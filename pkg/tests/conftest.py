"""Shared fixtures and the test-local 1D relative-coordinate oracle.

The 1D evolver here is an independent re-implementation of split-operator
stepping on the relative coordinate alone (the center of mass factors out
exactly), used to cross-check the 2D grid oracle and to demonstrate the
delta-regularization convergence at spacings the 2D grid cannot afford.
It deliberately shares no code with pairloss.grid.
"""
import numpy as np
import pytest

from pairloss.params import EnvelopeKind, PacketParams
from pairloss.propagate import rel_wave, triplet_relative_wave

SEED = 20260808


@pytest.fixture()
def rng():
    return np.random.default_rng(SEED)


# Canonical parameter sets -------------------------------------------------

def golden_params():
    """gamma=2, k0=5, beta=1, r0=10: the non-resonant reference collision."""
    return PacketParams(gamma=2.0, alpha=2.0, beta=1.0, k0=5.0, r0=10.0)


def fig1a_params(eps=+5e-3):
    return PacketParams(gamma=5.0, alpha=2.0, beta=1.0,
                        k0=5.0 * (1.0 + eps), r0=10.0)


def hermitian_params():
    return PacketParams(gamma=0.0, alpha=2.0, beta=1.0, k0=5.0, r0=10.0)


@pytest.fixture()
def golden():
    return golden_params()


@pytest.fixture()
def fig1a():
    return fig1a_params()


@pytest.fixture()
def hermitian():
    return hermitian_params()


# Test-local 1D relative-coordinate split-operator oracle -------------------

def evolve_relative_1d(p: PacketParams, a_reg: float, t_final: float,
                       L_r: float = 60.0, N_r: int = 16384, dt: float = 2e-4,
                       kind: EnvelopeKind = EnvelopeKind.PLAIN,
                       antisym: bool = False) -> float:
    """Final norm^2 (survival) of the relative wave under -d^2/dr^2 - i2g delta_a."""
    h = 2.0 * L_r / N_r
    r = (np.arange(N_r) - N_r // 2) * h
    psi = (triplet_relative_wave(r, 0.0, p) if antisym
           else rel_wave(r, 0.0, p, kind))
    psi = psi / np.sqrt(np.sum(np.abs(psi) ** 2) * h)
    k = 2.0 * np.pi * np.fft.fftfreq(N_r, d=h)
    half_kin = np.exp(-0.5j * k**2 * dt)
    vfac = np.exp(-2.0 * p.gamma * dt
                  * np.exp(-(r / a_reg) ** 2) / (a_reg * np.sqrt(np.pi)))
    for _ in range(int(round(t_final / dt))):
        psi = np.fft.ifft(half_kin * np.fft.fft(psi))
        psi = vfac * psi
        psi = np.fft.ifft(half_kin * np.fft.fft(psi))
    return float(np.sum(np.abs(psi) ** 2) * h)
