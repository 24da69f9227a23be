"""Finite-difference Euler-Lagrange residual checks.

Everything here works on flat real coordinate charts.  A Lagrangian is
any callable L(q, qdot); the checker samples a path on a uniform time
grid, forms d/dt(dL/dqdot) - dL/dq with centered differences and
reports the residual vectors at the interior samples.  Helpers chart
complex matrix spaces (entrywise real and imaginary parts) and the
unitary group (exponential coordinates around each sample) so the
analytic residuals of the operator and orbit Lagrangians can be
cross-checked without trusting their derivations.

Velocity-linear Lagrangians are degenerate; their residuals are
reported as-is, with no constraint reduction.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np
import scipy.linalg

from .heisenberg import lagrangian_heisenberg, OperatorTangent
from .operator_core import as_complex_matrix, dagger, unitary_algebra_basis
from .unitary_orbit import lagrangian_unitary, UnitaryTangent

DEFAULT_GRADIENT_STEP = 1e-5
UNIFORM_SPACING_RTOL = 1e-12


@dataclass(frozen=True)
class CoordinateLagrangian:
    """A Lagrangian on a flat chart: evaluate(q, qdot) -> float."""

    dim: int
    evaluate: Callable[[np.ndarray, np.ndarray], float]

    def __post_init__(self):
        if self.dim < 1:
            raise ValueError("chart dimension must be positive")


@dataclass(frozen=True)
class SampledPath:
    """Uniformly sampled path: times (N,), points (N, dim), N >= 5."""

    times: np.ndarray
    points: np.ndarray

    def __post_init__(self):
        times = np.asarray(self.times, dtype=float)
        points = np.asarray(self.points, dtype=float)
        if times.ndim != 1 or points.ndim != 2 or len(times) != len(points):
            raise ValueError("need times (N,) and points (N, dim) of equal length")
        if len(times) < 5:
            raise ValueError("centered stencils need at least 5 samples")
        spacings = np.diff(times)
        if np.any(spacings <= 0):
            raise ValueError("times must be strictly increasing")
        dt = spacings[0]
        if np.max(np.abs(spacings - dt)) > UNIFORM_SPACING_RTOL * abs(dt):
            raise ValueError("time grid must be uniform")
        object.__setattr__(self, "times", times)
        object.__setattr__(self, "points", points)

    @property
    def spacing(self) -> float:
        return float(self.times[1] - self.times[0])

    @property
    def dim(self) -> int:
        return self.points.shape[1]


def _finite(value, q, what):
    value = float(value)
    if not np.isfinite(value):
        raise ValueError(f"Lagrangian is not finite ({what}) near q={q}")
    return value


def grad_q(lag: CoordinateLagrangian, q, qdot, h: float = DEFAULT_GRADIENT_STEP) -> np.ndarray:
    """Centered-difference dL/dq, error O(h^2)."""
    if h <= 0:
        raise ValueError("gradient step must be positive")
    q = np.asarray(q, dtype=float)
    qdot = np.asarray(qdot, dtype=float)
    out = np.empty(lag.dim)
    for i in range(lag.dim):
        bump = np.zeros(lag.dim)
        bump[i] = h
        plus = _finite(lag.evaluate(q + bump, qdot), q, "grad_q +")
        minus = _finite(lag.evaluate(q - bump, qdot), q, "grad_q -")
        out[i] = (plus - minus) / (2 * h)
    return out


def grad_qdot(lag: CoordinateLagrangian, q, qdot, h: float = DEFAULT_GRADIENT_STEP) -> np.ndarray:
    """Centered-difference dL/dqdot, error O(h^2)."""
    if h <= 0:
        raise ValueError("gradient step must be positive")
    q = np.asarray(q, dtype=float)
    qdot = np.asarray(qdot, dtype=float)
    out = np.empty(lag.dim)
    for i in range(lag.dim):
        bump = np.zeros(lag.dim)
        bump[i] = h
        plus = _finite(lag.evaluate(q, qdot + bump), q, "grad_qdot +")
        minus = _finite(lag.evaluate(q, qdot - bump), q, "grad_qdot -")
        out[i] = (plus - minus) / (2 * h)
    return out


def el_residual_path(
    lag: CoordinateLagrangian,
    path: SampledPath,
    h: float = DEFAULT_GRADIENT_STEP,
) -> np.ndarray:
    """Residuals d/dt(dL/dqdot) - dL/dq along the path.

    Velocities exist at samples 1..N-2 and the momentum derivative at
    samples 2..N-3, so the returned array has shape (N-4, dim) and its
    row i belongs to path sample i + 2.
    """
    if path.dim != lag.dim:
        raise ValueError(f"path dim {path.dim} does not match chart dim {lag.dim}")
    n = len(path.times)
    dt = path.spacing
    velocities = (path.points[2:] - path.points[:-2]) / (2 * dt)  # samples 1..n-2
    momenta = np.array([
        grad_qdot(lag, path.points[i], velocities[i - 1], h)
        for i in range(1, n - 1)
    ])
    residuals = np.empty((n - 4, lag.dim))
    for i in range(2, n - 2):
        dpdt = (momenta[i] - momenta[i - 2]) / (2 * dt)
        residuals[i - 2] = dpdt - grad_q(lag, path.points[i], velocities[i - 1], h)
    return residuals


@dataclass(frozen=True)
class VerificationReport:
    passed: bool
    max_residual: float
    mean_residual: float
    worst_index: int
    tolerance: float


def verify_trajectory(
    lag: CoordinateLagrangian,
    path: SampledPath,
    tolerance: float = 1e-3,
    h: float = DEFAULT_GRADIENT_STEP,
) -> VerificationReport:
    """Pass iff the largest interior residual norm is within tolerance.

    worst_index refers to the original path sample, not the interior
    residual row.
    """
    residuals = el_residual_path(lag, path, h)
    norms = np.linalg.norm(residuals, axis=1)
    worst = int(np.argmax(norms))
    max_residual = float(norms[worst])
    return VerificationReport(
        passed=bool(max_residual <= tolerance),
        max_residual=max_residual,
        mean_residual=float(np.mean(norms)),
        worst_index=worst + 2,
        tolerance=float(tolerance),
    )


# ---------------------------------------------------------------------------
# charts


def flatten_complex(a: np.ndarray) -> np.ndarray:
    a = np.asarray(a, dtype=complex)
    return np.concatenate([a.real.ravel(), a.imag.ravel()])


def unflatten_complex(v: np.ndarray, shape) -> np.ndarray:
    v = np.asarray(v, dtype=float)
    half = v.size // 2
    return (v[:half] + 1j * v[half:]).reshape(shape)


def operator_chart(n: int, lagrangian: Callable[[np.ndarray, np.ndarray], float]) -> CoordinateLagrangian:
    """Flatten an operator-space Lagrangian to 2 n^2 real coordinates."""

    def evaluate(q, qdot):
        a = unflatten_complex(q, (n, n))
        v = unflatten_complex(qdot, (n, n))
        return lagrangian(a, v)

    return CoordinateLagrangian(dim=2 * n * n, evaluate=evaluate)


def heisenberg_chart(hamiltonian) -> CoordinateLagrangian:
    """Operator Lagrangian for a fixed Hamiltonian as a flat-chart Lagrangian."""
    hamiltonian = as_complex_matrix(hamiltonian, name="hamiltonian")
    n = hamiltonian.shape[0]

    def lagrangian(a, v):
        return lagrangian_heisenberg(OperatorTangent(a, v), hamiltonian)

    return operator_chart(n, lagrangian)


def path_from_matrices(times, matrices) -> SampledPath:
    """Sample a matrix-valued path in the entrywise real chart."""
    points = np.array([flatten_complex(m) for m in matrices])
    return SampledPath(np.asarray(times, dtype=float), points)


def chart_coordinates(u_center, u, basis: Sequence[np.ndarray]) -> np.ndarray:
    """Exponential-chart coordinates of u around u_center.

    Solves u = u_center expm(sum_j s_j B_j) for s using the principal
    logarithm; u must be close enough to u_center for that branch.
    """
    x = scipy.linalg.logm(dagger(u_center) @ u)
    x = 0.5 * (x - dagger(x))  # kill rounding off the algebra
    return np.array([np.trace(dagger(b) @ x).real for b in basis])


def unitary_chart(u_center, sigma, hamiltonian) -> CoordinateLagrangian:
    """Orbit Lagrangian in exponential coordinates around u_center."""
    u_center = as_complex_matrix(u_center, name="u_center")
    n = u_center.shape[0]
    basis = unitary_algebra_basis(n)

    def evaluate(q, qdot):
        x = sum(q[j] * basis[j] for j in range(len(basis)))
        e = sum(qdot[j] * basis[j] for j in range(len(basis)))
        expx, frechet = scipy.linalg.expm_frechet(x, e, compute_expm=True)
        tangent = UnitaryTangent(u_center @ expx, u_center @ frechet)
        return lagrangian_unitary(tangent, sigma, hamiltonian)

    return CoordinateLagrangian(dim=n * n, evaluate=evaluate)


def el_residual_unitary_path(
    times,
    unitaries,
    sigma,
    hamiltonian,
    h: float = DEFAULT_GRADIENT_STEP,
) -> np.ndarray:
    """Chart-based EL residuals along a sampled unitary path.

    Each interior sample gets its own exponential chart; the five-point
    window around it is pulled into that chart and the flat-chart
    residual is evaluated at the center.  Row i belongs to sample
    i + 2, as in el_residual_path.

    With rho = u^dag sigma u the exact Euler-Lagrange covector of
    lagrangian_unitary in the left-invariant frame B_j works out to
    Tr((i rho_dot - [rho, H]) B_j), so its extremals satisfy
    rho_dot = -i [rho, H]: the orbit Lagrangian drives the conjugation
    flow opposite in time to lvn_rhs.  Numerically the rows returned
    here agree with el_residual_unitary evaluated with the sign of the
    Hamiltonian flipped, up to the O(grid^2) discretization error.
    """
    times = np.asarray(times, dtype=float)
    unitaries = [as_complex_matrix(u, name="unitary sample") for u in unitaries]
    if len(times) != len(unitaries) or len(times) < 5:
        raise ValueError("need at least 5 matched samples")
    n = unitaries[0].shape[0]
    basis = unitary_algebra_basis(n)
    rows = []
    for m in range(2, len(unitaries) - 2):
        lag = unitary_chart(unitaries[m], sigma, hamiltonian)
        window = np.array([
            chart_coordinates(unitaries[m], unitaries[i], basis)
            for i in range(m - 2, m + 3)
        ])
        path = SampledPath(times[m - 2:m + 3], window)
        rows.append(el_residual_path(lag, path, h)[0])
    return np.array(rows)
