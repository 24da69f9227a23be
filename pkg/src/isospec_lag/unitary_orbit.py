"""Lagrangian dynamics on the isospectral orbit of a reference state.

A density matrix sigma and a unitary u produce the state u^dag sigma u;
the set of all such states is the isospectral orbit of sigma.  Through
the immersion phi_sigma(u) = sqrt(sigma) u the operator-space Lagrangian
pulls back to the unitary group as

    L_u = i Tr(sigma udot u^dag) - Tr(u^dag sigma u H - sigma H)

whose extremals project onto solutions of rho_dot = i [rho, H].  This
module evaluates that Lagrangian, the Maurer-Cartan forms, the
Euler-Lagrange residual projected on an orthonormal basis of the
unitary algebra, and the exact and Runge-Kutta state evolutions.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from .heisenberg import _real_part, _rk4_trajectory
from .operator_core import (
    HERMITIAN_TOL,
    as_complex_matrix,
    commutator,
    dagger,
    frobenius_norm,
    hermitian_sqrt,
    matrix_exponential,
    require_hermitian,
    unitary_algebra_basis,
)
from .trajectory import Trajectory

logger = logging.getLogger(__name__)

#: Frobenius tolerance for unitarity and tangency of group tangent vectors.
TANGENT_TOL = 1e-10
#: Spectrum agreement tolerance for orbit membership.
ORBIT_SPECTRUM_TOL = 1e-8


def validate_density(rho, tolerance: float = TANGENT_TOL) -> np.ndarray:
    """Check Hermiticity, unit trace and positivity of a density matrix.

    Eigenvalues in ``[-tolerance, 0)`` are clipped to zero (the result
    is renormalized and a warning is logged); worse violations raise.
    """
    rho = require_hermitian(rho, tolerance, name="density matrix")
    tr = float(np.trace(rho).real)
    if abs(tr - 1.0) > tolerance:
        raise ValueError(f"density matrix trace {tr} is not 1")
    w = np.linalg.eigvalsh(rho)
    if w[0] < -tolerance:
        raise ValueError(f"density matrix has eigenvalue {w[0]:.3e} < 0")
    if w[0] < 0:
        logger.warning(
            "clipping density matrix eigenvalue %.3e to zero", w[0]
        )
        wc, v = np.linalg.eigh(rho)
        wc = np.clip(wc, 0.0, None)
        rho = (v * wc) @ dagger(v)
        rho = (rho + dagger(rho)) / 2
        rho = rho / float(np.trace(rho).real)
    return rho


@dataclass(eq=False)
class UnitaryTangent:
    """A unitary ``u`` with a tangent vector ``udot``.

    Tangency to the unitary group means ``u udot^dag = -udot u^dag``,
    checked in Frobenius norm at construction.
    """

    u: np.ndarray
    udot: np.ndarray

    def __post_init__(self):
        self.u = as_complex_matrix(self.u, "u")
        self.udot = as_complex_matrix(self.udot, "udot")
        if self.u.shape != self.udot.shape:
            raise ValueError("u and udot dimensions differ")
        n = self.u.shape[0]
        unitary_defect = frobenius_norm(dagger(self.u) @ self.u - np.eye(n))
        if unitary_defect > TANGENT_TOL:
            raise ValueError(f"u is not unitary: defect {unitary_defect:.3e}")
        tangency = frobenius_norm(self.u @ dagger(self.udot) + self.udot @ dagger(self.u))
        if tangency > TANGENT_TOL:
            raise ValueError(f"udot is not tangent: defect {tangency:.3e}")


@dataclass(eq=False)
class IsospectralOrbitPoint:
    """A density matrix known to lie on the orbit of a reference spectrum."""

    rho: np.ndarray
    reference_spectrum: np.ndarray

    def __post_init__(self):
        self.rho = validate_density(self.rho)
        self.reference_spectrum = np.sort(np.asarray(self.reference_spectrum, dtype=float))
        w = np.linalg.eigvalsh(self.rho)
        drift = float(np.max(np.abs(w - self.reference_spectrum)))
        if drift > ORBIT_SPECTRUM_TOL:
            raise ValueError(f"spectrum deviates from reference by {drift:.3e}")


def immersion_phi_sigma(u, sigma) -> np.ndarray:
    """Immersion ``sqrt(sigma) u`` of the unitary group into operators.

    The image satisfies ``phi phi^dag = sigma``.
    """
    u = as_complex_matrix(u, "u")
    n = u.shape[0]
    if frobenius_norm(dagger(u) @ u - np.eye(n)) > TANGENT_TOL:
        raise ValueError("u is not unitary")
    return hermitian_sqrt(sigma) @ u


def lagrangian_unitary(ut: UnitaryTangent, sigma, h) -> float:
    """Pulled-back Lagrangian ``i Tr(sigma udot u^dag) - Tr(u^dag sigma u H - sigma H)``."""
    sigma = require_hermitian(sigma, name="sigma")
    h = require_hermitian(h, name="hamiltonian")
    u, ud = ut.u, ut.udot
    kinetic = 1j * np.trace(sigma @ ud @ dagger(u))
    potential = np.trace(dagger(u) @ sigma @ u @ h - sigma @ h)
    return _real_part(kinetic - potential, "Lagrangian")


def maurer_cartan_left(ut: UnitaryTangent) -> np.ndarray:
    """Left Maurer-Cartan pairing ``u^dag udot``; anti-Hermitian."""
    return dagger(ut.u) @ ut.udot


def maurer_cartan_right(ut: UnitaryTangent) -> np.ndarray:
    """Right Maurer-Cartan pairing ``udot u^dag``; anti-Hermitian."""
    return ut.udot @ dagger(ut.u)


def theta_u_pairing(ut: UnitaryTangent, sigma) -> float:
    """Cartan one-form ``i Tr(sigma udot u^dag)``, a real number."""
    sigma = require_hermitian(sigma, name="sigma")
    value = 1j * np.trace(sigma @ maurer_cartan_right(ut))
    return _real_part(value, "one-form value")


def lvn_rhs(rho, h) -> np.ndarray:
    """State-space velocity ``i [rho, H]``; traceless."""
    return 1j * commutator(rho, h)


def evolve_lvn_exact(rho0, h, t: float) -> np.ndarray:
    """Conjugation flow ``U rho0 U^dag`` with ``U = exp(-i t h)``.

    Spectrum-preserving; its time derivative at t = 0 is ``lvn_rhs``.
    """
    rho0 = validate_density(rho0)
    h = require_hermitian(h, name="hamiltonian")
    u = matrix_exponential(-1j * t * h)
    return u @ rho0 @ dagger(u)


def evolve_lvn_rk4(rho0, h, t_final: float, step: float) -> Trajectory:
    """Fourth-order Runge-Kutta integration of ``rho_dot = i [rho, H]``."""
    rho0 = validate_density(rho0)
    h = require_hermitian(h, name="hamiltonian")
    if step <= 0:
        raise ValueError(f"step must be positive, got {step}")
    return _rk4_trajectory(rho0, h, t_final, step, lvn_rhs, "rho")


def el_residual_unitary(ut: UnitaryTangent, sigma, h) -> np.ndarray:
    """Euler-Lagrange residual projected on the unitary-algebra basis.

    Computes rho = u^dag sigma u, its velocity

        rho_dot = u^dag sigma udot - u^dag udot u^dag sigma u

    and returns the n^2 real projections ``i Tr((rho_dot - i[rho, H]) tau_j)``
    over the orthonormal anti-Hermitian basis.  The vector vanishes
    exactly when the state follows rho_dot = i [rho, H]; in terms of the
    group tangent that is ``udot = i u H + u k`` with k commuting with
    u^dag sigma u.
    """
    sigma = require_hermitian(sigma, name="sigma")
    h = require_hermitian(h, name="hamiltonian")
    u, ud = ut.u, ut.udot
    rho = dagger(u) @ sigma @ u
    rho_dot = dagger(u) @ sigma @ ud - dagger(u) @ ud @ dagger(u) @ sigma @ u
    defect = rho_dot - lvn_rhs(rho, h)
    out = []
    for tau in unitary_algebra_basis(u.shape[0]):
        out.append(_real_part(1j * np.trace(defect @ tau), "residual projection"))
    return np.array(out)
