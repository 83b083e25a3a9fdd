"""Collision dynamics of a particle pair with an imaginary contact interaction.

Exact eigenfunctions and the spectral-singularity condition, closed-form wave
packet propagation, two independent numerical oracles (adaptive momentum
quadrature and a 2D split-operator FFT grid), and a CLI for the canonical
experiments.
"""
from .params import (CoordinatePair, EnvelopeKind, InteractionParams,
                     MomentumPair, PacketParams)
from .errors import AccuracyError, ConfigError, DomainError, InstabilityError
from .eigen import (energy, psi_antisymmetric, psi_symmetric, psi_singular,
                    singular_energy, singularity_residual,
                    verify_eigen_relation)
from .packets import (envelope_com, envelope_rel, initial_state_approx,
                      initial_state_exact, initial_state_integral,
                      normalization_constants, single_packet, triplet_state,
                      TwoParticleState)
from .propagate import (asymptotic_density, com_packet, rel_wave,
                        rel_wave_excited, rel_wave_plain, rel_wave_skeleton,
                        residual_probability, theta_terms,
                        triplet_relative_wave)
from .quadrature import QuadratureSpec, phi_by_quadrature, quadrature_residual
from .grid import (GridSpec, GridState2D, build_initial_state,
                   convergence_report, evolve_grid, norm_and_loss_rate)

__version__ = "0.1.0"
