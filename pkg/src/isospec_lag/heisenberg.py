"""Operator-space Lagrangian mechanics for the Heisenberg equation.

The Heisenberg flow ``i dA/dt = [A, H]`` on the space of bounded
operators admits a first-order Lagrangian

    L(A, Adot) = (i/2) Tr(A^dag Adot - Adot^dag A) - Tr(A H A^dag - A^dag H A)

whose Euler-Lagrange equations reproduce the equation of motion on the
complexified operator space.  This module evaluates that Lagrangian,
its Poincare-Cartan one-form and Cartan two-form, the Euler-Lagrange
residual, and the exact and Runge-Kutta evolutions.  The auxiliary
state-vector (Schrodinger) Lagrangian lives here too.

Units take hbar = 1 throughout.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .operator_core import (
    as_complex_matrix,
    commutator,
    dagger,
    frobenius_norm,
    matrix_exponential,
    require_hermitian,
)
from .trajectory import Trajectory

#: Largest imaginary residue tolerated when a trace expression must be real.
REALITY_TOL = 1e-12


@dataclass(eq=False)
class OperatorTangent:
    """A point ``A`` of operator space together with a velocity ``Adot``."""

    point: np.ndarray
    velocity: np.ndarray

    def __post_init__(self):
        self.point = as_complex_matrix(self.point, "point")
        self.velocity = as_complex_matrix(self.velocity, "velocity")
        if self.point.shape != self.velocity.shape:
            raise ValueError("point and velocity dimensions differ")


@dataclass(eq=False)
class HeisenbergScenario:
    """Inputs of one Heisenberg integration run."""

    hamiltonian: np.ndarray
    initial: np.ndarray
    t_final: float
    step: float

    def __post_init__(self):
        self.hamiltonian = require_hermitian(self.hamiltonian, name="hamiltonian")
        self.initial = as_complex_matrix(self.initial, "initial")
        if self.step <= 0:
            raise ValueError(f"step must be positive, got {self.step}")
        if self.t_final < 0:
            raise ValueError(f"t_final must be >= 0, got {self.t_final}")
        if self.t_final > 0 and self.step > self.t_final:
            raise ValueError("step must not exceed t_final")


@dataclass(eq=False)
class KetTangent:
    """A state vector and its velocity."""

    ket: np.ndarray
    ket_velocity: np.ndarray

    def __post_init__(self):
        self.ket = np.asarray(self.ket, dtype=complex).reshape(-1)
        self.ket_velocity = np.asarray(self.ket_velocity, dtype=complex).reshape(-1)
        if self.ket.shape != self.ket_velocity.shape:
            raise ValueError("ket and ket_velocity lengths differ")
        if not (np.all(np.isfinite(self.ket.view(float)))
                and np.all(np.isfinite(self.ket_velocity.view(float)))):
            raise ValueError("ket entries must be finite")


def _real_part(value: complex, what: str) -> float:
    if abs(value.imag) > REALITY_TOL:
        raise ValueError(f"{what} has imaginary residue {value.imag:.3e}")
    return float(value.real)


def heisenberg_rhs(a, h) -> np.ndarray:
    """Velocity of the Heisenberg flow: ``-i [a, h]``."""
    return -1j * commutator(a, h)


def evolve_heisenberg_exact(a0, h, t: float) -> np.ndarray:
    """Conjugation flow ``U^dag a0 U`` with ``U = exp(-i t h)``.

    Raises
    ------
    ValueError
        If ``h`` is not Hermitian.
    """
    a0 = as_complex_matrix(a0, "initial")
    h = require_hermitian(h, name="hamiltonian")
    u = matrix_exponential(-1j * t * h)
    return dagger(u) @ a0 @ u


def _rk4_step(state: np.ndarray, h: np.ndarray, dt: float, rhs) -> np.ndarray:
    k1 = rhs(state, h)
    k2 = rhs(state + dt / 2 * k1, h)
    k3 = rhs(state + dt / 2 * k2, h)
    k4 = rhs(state + dt * k3, h)
    return state + dt / 6 * (k1 + 2 * k2 + 2 * k3 + k4)


def _rk4_trajectory(a0, h, t_final, step, rhs, name) -> Trajectory:
    times = [0.0]
    states = [a0]
    t = 0.0
    state = a0
    # full steps, then one shorter step if t_final is not a multiple
    while t_final - t > step * (1 + 1e-12):
        state = _rk4_step(state, h, step, rhs)
        t += step
        times.append(t)
        states.append(state)
    last = t_final - t
    if last > 1e-15:
        state = _rk4_step(state, h, last, rhs)
        times.append(t_final)
        states.append(state)
    return Trajectory(
        times=np.array(times),
        states=np.array(states),
        name=name,
        meta={"step": step, "t_final": t_final},
    )


def evolve_heisenberg_rk4(scenario: HeisenbergScenario) -> Trajectory:
    """Classic fourth-order Runge-Kutta integration of ``Adot = -i[A, H]``."""
    return _rk4_trajectory(
        scenario.initial, scenario.hamiltonian,
        scenario.t_final, scenario.step, heisenberg_rhs, "A",
    )


def lagrangian_heisenberg(tangent: OperatorTangent, h) -> float:
    """Operator-space Lagrangian, a real number.

    Kinetic part ``(i/2) Tr(A^dag Adot - Adot^dag A)``, potential part
    ``-Tr(A H A^dag - A^dag H A)``.  Vanishes identically on Hermitian
    (A, Adot) pairs.
    """
    a, ad = tangent.point, tangent.velocity
    h = require_hermitian(h, name="hamiltonian")
    if h.shape != a.shape:
        raise ValueError("hamiltonian dimension differs from tangent")
    kinetic = 0.5j * np.trace(dagger(a) @ ad - dagger(ad) @ a)
    potential = np.trace(a @ h @ dagger(a) - dagger(a) @ h @ a)
    return _real_part(kinetic - potential, "Lagrangian")


def cartan_one_form_heisenberg(point, v) -> float:
    """Poincare-Cartan one-form ``(i/2)[Tr(A^dag v) - Tr(A v^dag)]``.

    Zero whenever both arguments are Hermitian.
    """
    a = as_complex_matrix(point, "point")
    v = as_complex_matrix(v, "v")
    if a.shape != v.shape:
        raise ValueError("dimension mismatch")
    # (i/2)(z - conj(z)) = -Im z with z = Tr(A^dag v); real by construction
    return float(-np.trace(dagger(a) @ v).imag)


def cartan_two_form_heisenberg(v1, v2) -> float:
    """Cartan two-form ``i[Tr(v1 v2^dag) - Tr(v2 v1^dag)]``.

    Antisymmetric in its arguments and identically zero on pairs of
    Hermitian matrices.
    """
    v1 = as_complex_matrix(v1, "v1")
    v2 = as_complex_matrix(v2, "v2")
    if v1.shape != v2.shape:
        raise ValueError("dimension mismatch")
    # i(z - conj(z)) = -2 Im z with z = Tr(v1 v2^dag)
    return float(-2.0 * np.trace(v1 @ dagger(v2)).imag)


def el_residual_heisenberg(tangent: OperatorTangent, h) -> float:
    """Frobenius norm of ``[A, H] - i Adot``.

    This is the coefficient of ``dA^dag`` in the Euler-Lagrange one-form;
    for Hermitian ``H`` the ``dA`` coefficient is its adjoint and carries
    the same norm.  Zero exactly when the velocity solves the Heisenberg
    equation.
    """
    a, ad = tangent.point, tangent.velocity
    h = as_complex_matrix(h, "hamiltonian")
    if h.shape != a.shape:
        raise ValueError("hamiltonian dimension differs from tangent")
    return frobenius_norm(commutator(a, h) - 1j * ad)


def lagrangian_schrodinger(kt: KetTangent, h, potential_prefactor: float = 1.0) -> float:
    """State-vector Lagrangian
    ``(i/2)(<psi|psidot> - <psidot|psi>) - prefactor * <psi|H|psi>``.

    With ``potential_prefactor = 1`` the stationarity condition is the
    standard state-vector evolution ``i psidot = H psi``; the prefactor
    is exposed because conventions with 1/2 are also in circulation.
    """
    h = require_hermitian(h, name="hamiltonian")
    psi, psid = kt.ket, kt.ket_velocity
    if h.shape[0] != psi.shape[0]:
        raise ValueError("hamiltonian dimension differs from ket")
    z = np.vdot(psi, psid)  # <psi|psidot>
    kinetic = 0.5j * (z - np.conj(z))
    potential = potential_prefactor * np.vdot(psi, h @ psi)
    return _real_part(kinetic - potential, "Lagrangian")


def evolve_schrodinger_exact(psi0, h, t: float) -> np.ndarray:
    """Return ``exp(-i t h) psi0``; norm-preserving for Hermitian ``h``."""
    psi0 = np.asarray(psi0, dtype=complex).reshape(-1)
    h = require_hermitian(h, name="hamiltonian")
    if h.shape[0] != psi0.shape[0]:
        raise ValueError("hamiltonian dimension differs from ket")
    return matrix_exponential(-1j * t * h) @ psi0
