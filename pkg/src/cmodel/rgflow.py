"""Linearized coupling flow: dg/dk = beta(k) g, its eigenmodes and their relevance."""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Callable, Sequence

import numpy as np

from .errors import CModelError


class FlowError(CModelError):
    module = "rgflow"


class DimensionMismatch(FlowError):
    pass


class ComplexSpectrum(FlowError):
    pass


class DefectiveMatrix(FlowError):
    pass


class NonPositiveScale(FlowError):
    pass


@dataclass(frozen=True)
class CouplingVector:
    g: np.ndarray
    k: float

    def __post_init__(self):
        g = np.asarray(self.g, dtype=float)
        if g.ndim != 1 or not np.all(np.isfinite(g)):
            raise FlowError("couplings must be a finite 1-d vector")
        if not self.k > 0:
            raise NonPositiveScale(f"scale k = {self.k} must be positive")
        object.__setattr__(self, "g", g)


class BetaMatrix:
    """beta_ab(k): a constant matrix, or a callable returning one per scale."""

    def __init__(self, entries):
        if callable(entries):
            self._fn = entries
            self.constant = None
        else:
            m = np.asarray(entries, dtype=float)
            _check_square(m)
            self._fn = None
            self.constant = m

    @classmethod
    def power(cls, base, p: float) -> "BetaMatrix":
        """beta(k) = base * k**p."""
        b = np.asarray(base, dtype=float)
        _check_square(b)
        return cls(lambda k: b * k**p)

    def __call__(self, k: float) -> np.ndarray:
        if self.constant is not None:
            return self.constant
        m = np.asarray(self._fn(k), dtype=float)
        _check_square(m)
        return m


def _check_square(m: np.ndarray) -> None:
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise DimensionMismatch(f"beta matrix must be square, got shape {m.shape}")
    if not np.all(np.isfinite(m)):
        raise FlowError("beta matrix has non-finite entries")


@dataclass(frozen=True)
class EigenSystem:
    """beta = sum_n lambda_n u_n v_n^*, with columns u_n of ``right`` and v_n of ``left``."""

    eigenvalues: np.ndarray
    left: np.ndarray
    right: np.ndarray

    def reconstruct(self) -> np.ndarray:
        return self.right @ np.diag(self.eigenvalues) @ self.left.conj().T

    def to_modes(self, g) -> np.ndarray:
        """h_n = sum_a v*_an g_a."""
        return self.left.conj().T @ np.asarray(g, dtype=float)

    def from_modes(self, h) -> np.ndarray:
        return self.right @ np.asarray(h, dtype=float)


@dataclass(frozen=True)
class Hamiltonian:
    couplings: np.ndarray
    basis: tuple[Callable, ...]

    def __post_init__(self):
        c = np.asarray(self.couplings, dtype=float)
        if c.ndim != 1 or len(c) != len(self.basis):
            raise DimensionMismatch(f"{len(c)} couplings for {len(self.basis)} basis functions")
        object.__setattr__(self, "couplings", c)
        object.__setattr__(self, "basis", tuple(self.basis))


def evaluate_hamiltonian(h: Hamiltonian, x) -> float:
    return float(sum(g * f(x) for g, f in zip(h.couplings, h.basis)))


def feature_basis(n: int) -> tuple[Callable, ...]:
    """Basis xi_a(x) = x[a] for plain feature vectors."""
    return tuple((lambda x, a=a: x[a]) for a in range(n))


def diagonalize(beta: BetaMatrix | np.ndarray, k: float = 1.0, tol: float = 1e-9) -> EigenSystem:
    m = beta(k) if isinstance(beta, BetaMatrix) else np.asarray(beta, dtype=float)
    _check_square(m)
    if np.allclose(m, m.T, rtol=0, atol=1e-14 * max(1.0, np.abs(m).max())):
        lam, u = np.linalg.eigh((m + m.T) / 2)
        return EigenSystem(lam, u.copy(), u)
    lam, u = np.linalg.eig(m)
    radius = max(np.abs(lam).max(), np.finfo(float).tiny)
    if np.abs(lam.imag).max() > tol * radius:
        raise ComplexSpectrum("beta matrix has complex eigenvalues")
    lam, u = lam.real, u.real
    order = np.argsort(lam, kind="stable")
    lam, u = lam[order], u[:, order]
    if np.linalg.cond(u) > 1e10:
        raise DefectiveMatrix("eigenvectors are (numerically) linearly dependent")
    # rows of inv(u) are v_n^*, so the pair is biorthonormal by construction
    v = np.linalg.inv(u).conj().T
    return EigenSystem(lam, v, u)


class Relevance(str, Enum):
    RELEVANT = "Relevant"
    IRRELEVANT = "Irrelevant"
    MARGINAL = "Marginal"


def classify_couplings(es: EigenSystem | Sequence[float], tol: float = 1e-12) -> list[Relevance]:
    """Negative eigenvalues grow toward small k (relevant); positive ones die out."""
    lam = es.eigenvalues if isinstance(es, EigenSystem) else np.asarray(es, dtype=float)
    return [
        Relevance.RELEVANT if l < -tol else Relevance.IRRELEVANT if l > tol else Relevance.MARGINAL
        for l in np.atleast_1d(lam)
    ]


def rotate_basis(h: Hamiltonian, es: EigenSystem) -> Hamiltonian:
    """Rewrite H = sum g_a xi_a as sum h_n eta_n with eta_n = sum_b u_bn xi_b.

    With h_n = sum_a v*_an g_a and sum_n u_bn v*_an = delta_ab the energy is
    unchanged.
    """
    n = len(h.couplings)
    if es.left.shape != (n, n):
        raise DimensionMismatch(f"eigensystem of size {es.left.shape[0]} for {n} couplings")
    hn = es.to_modes(h.couplings)
    right = es.right
    basis = h.basis

    def mode(n_):
        return lambda x: sum(right[b, n_] * basis[b](x) for b in range(n))

    return Hamiltonian(hn, tuple(mode(j) for j in range(n)))


# ---------------------------------------------------------------------------
# integration


def rk4(rhs: Callable[[float, np.ndarray], np.ndarray], y0, k0: float, k1: float, steps: int):
    """Classical fixed-step RK4 from k0 to k1; returns (ks, ys) at every node."""
    if not (k0 > 0 and k1 > 0):
        raise NonPositiveScale(f"scales must be positive, got {k0}, {k1}")
    if steps < 1:
        raise FlowError("steps must be >= 1")
    y = np.array(y0, dtype=float)
    h = (k1 - k0) / steps
    ks = [k0]
    ys = [y.copy()]
    k = k0
    for s in range(steps):
        a = rhs(k, y)
        b = rhs(k + h / 2, y + h / 2 * a)
        c = rhs(k + h / 2, y + h / 2 * b)
        d = rhs(k + h, y + h * c)
        y = y + h / 6 * (a + 2 * b + 2 * c + d)
        k = k0 + (s + 1) * h
        ks.append(k)
        ys.append(y.copy())
    return np.array(ks), np.array(ys)


def flow_decoupled(h0: float, lam, k0: float, k1: float, steps: int) -> float:
    """Integrate dh/dk = lambda(k) h; ``lam`` is a number or a function of k."""
    fn = lam if callable(lam) else (lambda k: lam)
    _, ys = rk4(lambda k, y: fn(k) * y, [h0], k0, k1, steps)
    return float(ys[-1][0])


def flow_full(g0: CouplingVector, beta: BetaMatrix, k1: float, steps: int) -> CouplingVector:
    """Integrate the linear system dg/dk = beta(k) g from g0.k to k1."""
    beta = beta if isinstance(beta, BetaMatrix) else BetaMatrix(beta)
    n = len(g0.g)
    if beta(g0.k).shape != (n, n):
        raise DimensionMismatch(f"beta of shape {beta(g0.k).shape} for {n} couplings")
    _, ys = rk4(lambda k, g: beta(k) @ g, g0.g, g0.k, k1, steps)
    return CouplingVector(ys[-1], k1)


def flow_by_modes(g0: CouplingVector, beta: BetaMatrix, k1: float, steps: int) -> CouplingVector:
    """Rotate into eigenmodes, flow each independently, rotate back.

    Valid when beta's eigenvectors do not depend on k; eigenvalues may.
    """
    beta = beta if isinstance(beta, BetaMatrix) else BetaMatrix(beta)
    es = diagonalize(beta, g0.k)
    h0 = es.to_modes(g0.g)

    def mode_rate(n):
        # lambda_n(k) = v_n^* beta(k) u_n, exact when the eigenvectors are fixed
        return lambda k: float(es.left[:, n].conj() @ beta(k) @ es.right[:, n])

    h1 = [flow_decoupled(h0[n], mode_rate(n), g0.k, k1, steps) for n in range(len(h0))]
    return CouplingVector(es.from_modes(h1), k1)


def flow_nonlinear(g0: CouplingVector, rhs: Callable[[float, np.ndarray], np.ndarray], k1: float, steps: int) -> CouplingVector:
    """Integrate a user-supplied dg/dk = beta(k, g) with the same stepper."""
    _, ys = rk4(rhs, g0.g, g0.k, k1, steps)
    return CouplingVector(ys[-1], k1)


def trajectory(g0: CouplingVector, beta: BetaMatrix, k1: float, steps: int):
    """Nodes k, couplings g and mode amplitudes h along the direct flow."""
    beta = beta if isinstance(beta, BetaMatrix) else BetaMatrix(beta)
    ks, gs = rk4(lambda k, g: beta(k) @ g, g0.g, g0.k, k1, steps)
    es = diagonalize(beta, g0.k)
    hs = np.array([es.to_modes(g) for g in gs])
    return ks, gs, hs, es
