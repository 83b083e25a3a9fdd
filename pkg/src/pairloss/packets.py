"""Construction of the two-particle initial states.

Both families start from Gaussian momentum envelopes,

    G(K)       = exp[-(K - K0)^2/(2 alpha^2) - i K R0]          (center of mass)
    g(k)       = exp[-(k - k0)^2/(2 beta^2) + i k r0]           (plain)
    g1(k)      = (k - k0) * g(k)                                (node-excited)

smeared over the symmetric eigenfunctions.  With equal widths alpha = 2 beta
the quadratic cross term x1*x2 cancels and the state factorizes (per Heaviside
sector) into single-particle packets

    phi_+-(x) = exp[-beta^2 (x +- r0/2)^2 + (i/2)(K0 +- 2 k0) x],

i.e. the packet moving at K0/2 + k0 starts at -r0/2 and the one moving at
K0/2 - k0 at +r0/2: a collision course.  (The mirrored placement, right-mover
at +r0/2, describes the separating pair instead; see README "Conventions".)

Three constructors are provided per family: the four-term Heaviside closed
form (`initial_state_exact`, the narrow-envelope algebra made explicit), the
far-separated product approximation (`initial_state_approx`), and the true
defining integral in separable closed form (`initial_state_integral`, used to
seed the grid oracle).  `triplet_state` is the antisymmetric counterpart.
"""
from __future__ import annotations

import functools
import json
import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy.integrate import quad

from . import propagate
from .errors import DomainError
from .params import EnvelopeKind, PacketParams

__all__ = [
    "envelope_com", "envelope_rel", "single_packet", "TwoParticleState",
    "initial_state_exact", "initial_state_approx", "initial_state_integral",
    "triplet_state", "normalization_constants", "NormalizationConstants",
    "pair_amplitude_envelope",
]


def envelope_com(K, p: PacketParams):
    """Center-of-mass momentum envelope G(K); peak value 1 at K = K0, R0 = 0."""
    K = np.asarray(K, dtype=float)
    val = np.exp(-((K - p.K0) ** 2) / (2.0 * p.alpha**2) - 1j * K * p.R0)
    return val if val.ndim else complex(val)


def envelope_rel(k, p: PacketParams, kind: EnvelopeKind = EnvelopeKind.PLAIN):
    """Relative momentum envelope.

    Carries the phase +i*k*r0 so that the packets approach each other (the
    initial relative packet sits at |r| = r0 with inward group velocity 2 k0).
    The node-excited family multiplies by (k - k0): a node at the center.
    """
    k = np.asarray(k, dtype=float)
    val = np.exp(-((k - p.k0) ** 2) / (2.0 * p.beta**2) + 1j * k * p.r0)
    if kind is EnvelopeKind.NODE_EXCITED:
        val = (k - p.k0) * val
    return val if val.ndim else complex(val)


def single_packet(sign: int, x, p: PacketParams):
    """Single-particle packet phi_+- of the colliding pair.

    sign=+1: exp[-beta^2 (x + r0/2)^2 + (i/2)(K0 + 2k0) x], peak at -r0/2,
    group velocity K0/2 + k0 (the right mover); sign=-1 mirrors it.  Carrier
    momentum is (K0 +- 2k0)/2.
    """
    if sign not in (+1, -1):
        raise DomainError(f"sign must be +1 or -1, got {sign}")
    x = np.asarray(x, dtype=float)
    s = float(sign)
    val = np.exp(-p.beta**2 * (x + s * p.r0 / 2.0) ** 2
                 + 0.5j * (p.K0 + s * 2.0 * p.k0) * x)
    return val if val.ndim else complex(val)


def _node_factor(sign: int, x, p: PacketParams):
    """(x + sign*r0/2): vanishes at the phi_{sign} packet center."""
    return np.asarray(x, dtype=float) + sign * p.r0 / 2.0


@dataclass(frozen=True)
class TwoParticleState:
    """A (possibly unnormalized) two-particle amplitude with metadata.

    ``amplitude`` is vectorized over numpy arrays; ``norm_constant`` has been
    folded in, so sampling gives the normalized state directly.
    """

    amplitude: object            # callable (x1, x2) -> complex array
    symmetry: str                # "symmetric" | "antisymmetric"
    params: PacketParams
    kind: EnvelopeKind
    label: str

    def __call__(self, x1, x2):
        return self.amplitude(x1, x2)

    def sample(self, xs: np.ndarray) -> np.ndarray:
        """Amplitude matrix A[i, j] = Psi(xs[i], xs[j])."""
        X1, X2 = np.meshgrid(xs, xs, indexing="ij")
        return self.amplitude(X1, X2)

    def norm_on_grid(self, xs: np.ndarray) -> float:
        h = xs[1] - xs[0]
        A = self.sample(xs)
        return float(np.sqrt(np.sum(np.abs(A) ** 2) * h * h))

    def to_csv(self, path, xs: np.ndarray):
        """Grid dump: one '#'-prefixed JSON header line, then x1, x2, Re, Im."""
        A = self.sample(xs)
        header = {
            "label": self.label, "symmetry": self.symmetry,
            "kind": self.kind.value,
            "params": {k: getattr(self.params, k) for k in
                       ("gamma", "alpha", "beta", "k0", "K0", "r0", "R0")},
        }
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write("# " + json.dumps(header, sort_keys=True) + "\n")
            fh.write("x1,x2,re,im\n")
            for i, x1 in enumerate(xs):
                for j, x2 in enumerate(xs):
                    fh.write(f"{x1:.16e},{x2:.16e},"
                             f"{A[i, j].real:.16e},{A[i, j].imag:.16e}\n")


def _require_equal_width(p: PacketParams):
    if not p.equal_width:
        raise DomainError(
            f"separable product states require alpha = 2*beta "
            f"(got alpha={p.alpha}, beta={p.beta}); the x1*x2 cross term "
            f"does not cancel otherwise"
        )


def _warn_if_overlapping(p: PacketParams):
    if p.beta * p.r0 < 5.0:
        warnings.warn(
            f"beta*r0 = {p.beta * p.r0:.2f} < 5: initial packets overlap "
            f"appreciably (separability quality "
            f"{p.separability_quality():.2e}); the product form is rough",
            stacklevel=3,
        )


def pair_amplitude_envelope(x1, x2, p: PacketParams,
                            kind: EnvelopeKind = EnvelopeKind.PLAIN):
    """Unnormalized narrow-envelope pair amplitude for arbitrary alpha.

    The two-lobe closed form before the equal-width reduction: weights
    (k0 + gamma) on the inward lobe and (k0 - gamma) on the outgoing ghost.
    For alpha != 2*beta the (x1, x2) dependence does not factorize per sector
    (the cross term survives), which is what the sector rank test probes.
    """
    x1 = np.asarray(x1, dtype=float)
    x2 = np.asarray(x2, dtype=float)
    R = 0.5 * (x1 + x2)
    r = x1 - x2
    absr = np.abs(r)
    g, k0, b, r0 = p.gamma, p.k0, p.beta, p.r0
    com = np.exp(-0.5 * p.alpha**2 * (R - p.R0) ** 2 + 1j * p.K0 * (R - p.R0))
    out = 0.0
    for weight, u in (((k0 + g), r0 - absr), ((k0 - g), r0 + absr)):
        carrier = np.exp(-0.5 * b**2 * u**2 + 1j * k0 * u)
        if kind is EnvelopeKind.NODE_EXCITED:
            carrier = carrier * (1j * b**2 * u)
        out = out + weight * carrier
    return com * out


def _normalize_on_adaptive_grid(amp, p: PacketParams):
    """Numerical L2 normalization of a callable 2D amplitude."""
    half = p.r0 / 2.0 + 10.0 / p.beta + abs(p.R0)
    xs = np.linspace(-half, half, 801)
    h = xs[1] - xs[0]
    X1, X2 = np.meshgrid(xs, xs, indexing="ij")
    n = np.sqrt(np.sum(np.abs(amp(X1, X2)) ** 2) * h * h)
    return float(n)


def _build_state(raw, p, kind, symmetry, label) -> TwoParticleState:
    n = _normalize_on_adaptive_grid(raw, p)
    if not (np.isfinite(n) and n > 0.0):
        raise DomainError(f"cannot normalize state {label!r} (norm {n})")

    def amplitude(x1, x2, _raw=raw, _n=n):
        return _raw(np.asarray(x1, dtype=float), np.asarray(x2, dtype=float)) / _n

    return TwoParticleState(amplitude=amplitude, symmetry=symmetry,
                            params=p, kind=kind, label=label)


def initial_state_exact(p: PacketParams,
                        kind: EnvelopeKind = EnvelopeKind.PLAIN) -> TwoParticleState:
    """Four-term Heaviside closed form of the pair state (narrow-envelope).

    (k0+gamma) weights the products on their mass-carrying sectors, (k0-gamma)
    the exponentially small ghost sectors.  This is the explicit form of the
    two-lobe algebra; it deviates from the defining momentum integral by
    O(beta/k0) pointwise (the 1/k factor of the interaction term has been
    frozen at 1/k0), which `initial_state_integral` does not.
    Normalized numerically.
    """
    _require_equal_width(p)

    def raw(x1, x2):
        r = x1 - x2
        inward = np.where(r < 0,
                          single_packet(+1, x1, p) * single_packet(-1, x2, p),
                          single_packet(+1, x2, p) * single_packet(-1, x1, p))
        ghost = np.where(r >= 0,
                         single_packet(+1, x1, p) * single_packet(-1, x2, p),
                         single_packet(+1, x2, p) * single_packet(-1, x1, p))
        if kind is EnvelopeKind.NODE_EXCITED:
            n1p, n1m = _node_factor(+1, x1, p), _node_factor(-1, x1, p)
            n2p, n2m = _node_factor(+1, x2, p), _node_factor(-1, x2, p)
            inward = np.where(
                r < 0,
                (n1p - n2m) * single_packet(+1, x1, p) * single_packet(-1, x2, p),
                (n2p - n1m) * single_packet(+1, x2, p) * single_packet(-1, x1, p))
            ghost = np.where(
                r >= 0,
                (n1p - n2m) * single_packet(+1, x1, p) * single_packet(-1, x2, p),
                (n2p - n1m) * single_packet(+1, x2, p) * single_packet(-1, x1, p))
        return (p.k0 + p.gamma) * inward + (p.k0 - p.gamma) * ghost

    return _build_state(raw, p, kind, "symmetric", f"exact-{kind.value}")


def initial_state_approx(p: PacketParams,
                         kind: EnvelopeKind = EnvelopeKind.PLAIN) -> TwoParticleState:
    """Far-separated product form of the pair state.

    Plain: (beta/sqrt(pi)) [phi_+(x1) phi_-(x2) + phi_+(x2) phi_-(x1)] -- the
    normalized constant; the often-quoted beta*sqrt(1/2pi) leaves the state at
    norm 1/sqrt(2) (it drops the symmetrization factor), so the constant here
    is fixed by quadrature instead.  Node-excited: the symmetrized
    [(x+r0/2)phi_+ phi_- - phi_+ (x-r0/2)phi_-] combination, normalized
    numerically.  Accurate up to exp(-beta^2 r0^2 / 2) corrections.
    """
    _require_equal_width(p)
    _warn_if_overlapping(p)

    if kind is EnvelopeKind.PLAIN:
        def raw(x1, x2):
            return (single_packet(+1, x1, p) * single_packet(-1, x2, p)
                    + single_packet(+1, x2, p) * single_packet(-1, x1, p))
    else:
        def raw(x1, x2):
            a1 = (_node_factor(+1, x1, p) - _node_factor(-1, x2, p)) \
                * single_packet(+1, x1, p) * single_packet(-1, x2, p)
            a2 = (_node_factor(+1, x2, p) - _node_factor(-1, x1, p)) \
                * single_packet(+1, x2, p) * single_packet(-1, x1, p)
            return a1 + a2

    return _build_state(raw, p, kind, "symmetric", f"approx-{kind.value}")


def initial_state_integral(p: PacketParams,
                           kind: EnvelopeKind = EnvelopeKind.PLAIN) -> TwoParticleState:
    """The defining double momentum integral, in separable closed form.

    Psi(x1, x2) = Phi(R, 0) * phi(r, 0) with the exact relative wave (Faddeeva
    corrections included).  This is the state the oracles evolve.
    """
    _require_equal_width(p)

    def amplitude(x1, x2):
        x1 = np.asarray(x1, dtype=float)
        x2 = np.asarray(x2, dtype=float)
        R = 0.5 * (x1 + x2)
        r = x1 - x2
        return propagate.com_packet(R, 0.0, p) * propagate.rel_wave(r, 0.0, p, kind)

    return TwoParticleState(amplitude=amplitude, symmetry="symmetric",
                            params=p, kind=kind, label=f"integral-{kind.value}")


def triplet_state(p: PacketParams) -> TwoParticleState:
    """Antisymmetric spatial pair (spin-triplet fermions).

    [phi_+(x1) phi_-(x2) - phi_+(x2) phi_-(x1)], normalized; vanishes on
    x1 = x2, so the contact interaction never acts on it.
    """
    _require_equal_width(p)

    def raw(x1, x2):
        return (single_packet(+1, x1, p) * single_packet(-1, x2, p)
                - single_packet(+1, x2, p) * single_packet(-1, x1, p))

    return _build_state(raw, p, EnvelopeKind.PLAIN, "antisymmetric", "triplet")


@dataclass(frozen=True)
class NormalizationConstants:
    """Closed-form constants as conventionally quoted, plus effective values.

    The quoted forms carry (k0 - gamma)^2 and belong to the separating sign
    convention; under the collision convention the corresponding leading
    factors are (k0 + gamma)^2, and the effective values are computed
    numerically from the defining integrals (no closed form exists for the
    node-excited position normalizer).
    """

    lambda_quoted: float         # 4 pi^3 beta^2 (k0-g)^2 / k0^2
    omega_quoted: float          # pi^{3/2} beta (k0-g)^2 / k0^2
    omega_prime_quoted: float    # pi^{3/2} beta^3 (k0-g)^2 / (4 k0^2)
    relative_norm_sq: float      # numeric, collision convention
    com_norm_sq: float           # 2 pi^{3/2} alpha
    full_norm_sq: float          # product of the two


def normalization_constants(p: PacketParams,
                            kind: EnvelopeKind = EnvelopeKind.PLAIN
                            ) -> NormalizationConstants:
    g, k0, b = p.gamma, p.k0, p.beta
    if abs(k0 - g) < 1e-12 * max(1.0, g):
        raise DomainError(
            "k0 == gamma: the quoted normalization constants vanish at the "
            "resonance (Lambda, Omega ~ (k0-gamma)^2); use an eps-offset"
        )
    rel = propagate.relative_norm_sq(p, kind)
    com = propagate.com_norm_sq(p)
    return NormalizationConstants(
        lambda_quoted=4.0 * math.pi**3 * b**2 * (k0 - g) ** 2 / k0**2,
        omega_quoted=math.pi**1.5 * b * (k0 - g) ** 2 / k0**2,
        omega_prime_quoted=math.pi**1.5 * b**3 * (k0 - g) ** 2 / (4.0 * k0**2),
        relative_norm_sq=rel,
        com_norm_sq=com,
        full_norm_sq=rel * com,
    )


@functools.lru_cache(maxsize=64)
def state_overlap_1d_norms(p: PacketParams) -> float:
    """||phi_+||^2 = ||phi_-||^2 = sqrt(pi/2)/beta (closed Gaussian integral)."""
    return math.sqrt(math.pi / 2.0) / p.beta


def overlap(a: TwoParticleState, b: TwoParticleState, half: float | None = None,
            n: int = 801) -> complex:
    """<a|b> by 2D midpoint quadrature on a packet-adapted square."""
    p = a.params
    if half is None:
        half = p.r0 / 2.0 + 10.0 / p.beta + abs(p.R0)
    xs = np.linspace(-half, half, n)
    h = xs[1] - xs[0]
    X1, X2 = np.meshgrid(xs, xs, indexing="ij")
    return complex(np.sum(np.conj(a(X1, X2)) * b(X1, X2)) * h * h)
