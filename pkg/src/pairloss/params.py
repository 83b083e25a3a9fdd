"""Physical parameter types for the two-particle contact-absorber model.

Units are dimensionless (hbar = m = 1).  The model Hamiltonian is

    H = -1/2 (d^2/dx1^2 + d^2/dx2^2) - i 2 gamma delta(x1 - x2),   gamma > 0,

which separates in center-of-mass / relative coordinates R = (x1+x2)/2,
r = x1 - x2.  A collision experiment is configured by Gaussian momentum
envelopes of width ``alpha`` (center-of-mass) and ``beta`` (relative), central
momenta ``K0`` and ``k0``, and initial separation ``r0``.

Sign convention: the two single-particle packets are placed on a collision
course (the right-mover starts at -r0/2).  In the relative coordinate this
means the envelope carries the phase +i*k*r0, so the initial relative packet
at |r| = r0 moves inward at speed 2*k0.  See README "Conventions".
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum

from .errors import DomainError


def _require_finite(**values):
    for name, v in values.items():
        if not math.isfinite(v):
            raise DomainError(f"{name} must be finite, got {v!r}")


@dataclass(frozen=True)
class InteractionParams:
    """Strength of the imaginary contact interaction -i*2*gamma*delta(x1-x2)."""

    gamma: float

    def __post_init__(self):
        _require_finite(gamma=self.gamma)
        if self.gamma <= 0.0:
            raise DomainError(f"gamma must be > 0, got {self.gamma}")


@dataclass(frozen=True)
class MomentumPair:
    """Center-of-mass momentum K and relative momentum k, both unrestricted reals."""

    K: float
    k: float

    def __post_init__(self):
        _require_finite(K=self.K, k=self.k)


@dataclass(frozen=True)
class CoordinatePair:
    """Positions of the two particles; R and r are derived exactly."""

    x1: float
    x2: float

    def __post_init__(self):
        _require_finite(x1=self.x1, x2=self.x2)

    @property
    def R(self) -> float:
        return 0.5 * (self.x1 + self.x2)

    @property
    def r(self) -> float:
        return self.x1 - self.x2

    @classmethod
    def from_com_rel(cls, R: float, r: float) -> "CoordinatePair":
        return cls(R + 0.5 * r, R - 0.5 * r)


class EnvelopeKind(Enum):
    """The two families of relative momentum envelopes.

    PLAIN is a Gaussian; NODE_EXCITED carries an extra (k - k0) factor, which
    puts a node at the envelope center and produces the maximally two-mode
    entangled pair after symmetrization.
    """

    PLAIN = "plain"
    NODE_EXCITED = "node-excited"

    @classmethod
    def from_label(cls, label: str) -> "EnvelopeKind":
        for kind in cls:
            if kind.value == label:
                return kind
        raise DomainError(
            f"unknown envelope kind {label!r}; expected one of "
            f"{[k.value for k in cls]}"
        )


# Exact equality k0 == gamma is rejected: the conventional closed-form
# normalization constants contain (k0 - gamma)^2 and vanish there, so the
# normalized textbook forms degenerate to 0/0.  Sweeps approach the resonance
# through offsets k0 = gamma*(1 +/- eps), eps >= 1e-3.
_RESONANCE_GUARD = 1e-12


@dataclass(frozen=True)
class PacketParams:
    """Configuration of one collision experiment.

    gamma may be 0 (Hermitian reference case used by conservation checks);
    the interacting model has gamma > 0.  ``alpha == 2*beta`` is required by
    the separable product-state constructors and is checked there, not here.
    """

    gamma: float
    alpha: float
    beta: float
    k0: float
    K0: float = 0.0
    r0: float = 10.0
    R0: float = 0.0

    def __post_init__(self):
        _require_finite(gamma=self.gamma, alpha=self.alpha, beta=self.beta,
                        k0=self.k0, K0=self.K0, r0=self.r0, R0=self.R0)
        if self.gamma < 0.0:
            raise DomainError(f"gamma must be >= 0, got {self.gamma}")
        if self.alpha <= 0.0 or self.beta <= 0.0:
            raise DomainError("alpha and beta must be > 0")
        if self.k0 <= 0.0:
            raise DomainError(f"k0 must be > 0, got {self.k0}")
        if self.r0 <= 0.0:
            raise DomainError(f"r0 must be > 0, got {self.r0}")
        if abs(self.k0 - self.gamma) < _RESONANCE_GUARD * max(1.0, self.gamma):
            raise DomainError(
                "k0 == gamma is the annihilation resonance where the "
                "closed-form normalization constants vanish; approach it "
                "through k0 = gamma*(1 +/- eps) with eps >= 1e-3 instead"
            )

    @property
    def equal_width(self) -> bool:
        """True when alpha == 2*beta (the product-separability condition)."""
        return math.isclose(self.alpha, 2.0 * self.beta, rel_tol=1e-12)

    def separability_quality(self) -> float:
        """exp(-beta^2 r0^2 / 2): size of the overlap-tail corrections.

        The far-separated product form of the initial state is accurate up to
        terms of this order; callers gate on it rather than on a hard bound.
        """
        return math.exp(-0.5 * self.beta**2 * self.r0**2)

    def group_velocities(self) -> tuple[float, float]:
        """Envelope-center velocities of the two packets, K0/2 +/- k0."""
        return (0.5 * self.K0 + self.k0, 0.5 * self.K0 - self.k0)
