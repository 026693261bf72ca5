"""SLH triples, their derived generators, and network composition.

An open Markov model with n input channels is generated by a triple
(S, L, H): an n x n blockwise-unitary scattering matrix of operators, n
coupling operators, and a Hermitian Hamiltonian.  This module evaluates
the associated drift operator K = -1/2 sum_i L_i^H L_i - i H, the
Heisenberg-picture Lindbladian and its noise coefficients, and the two
network compositions (concatenation and cascade / series product).
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .operators import HilbertSpace, Operator, zero

__all__ = [
    "SLHTriple",
    "HeisenbergCoefficients",
    "k_operator",
    "lindbladian",
    "heisenberg_coeffs",
    "concatenation",
    "series_product",
    "passthrough",
    "unitarity_defect",
    "hermiticity_defect",
    "UNITARITY_WARN_TOL",
    "UNITARITY_FAIL_TOL",
]

# Construction validates to the warn tolerance; deliberately perturbed
# inputs below the fail tolerance only trigger a warning.
UNITARITY_WARN_TOL = 1e-10
UNITARITY_FAIL_TOL = 1e-6


def hermiticity_defect(h: Operator) -> float:
    return float(np.max(np.abs(h.mat - h.mat.conj().T))) if h.mat.size else 0.0


def unitarity_defect(s) -> float:
    """Max-entry defect of sum_j S_ji^H S_jk - delta_ik I over all (i, k)."""
    n = len(s)
    if n == 0:
        return 0.0
    dim = s[0][0].dim
    eye = np.eye(dim)
    worst = 0.0
    for i in range(n):
        for k in range(n):
            acc = np.zeros((dim, dim), dtype=complex)
            for j in range(n):
                acc += s[j][i].mat.conj().T @ s[j][k].mat
            if i == k:
                acc -= eye
            worst = max(worst, float(np.max(np.abs(acc))))
    return worst


def _as_operator_matrix(s, n: int, space: HilbertSpace):
    rows = tuple(tuple(row) for row in s)
    if len(rows) != n or any(len(row) != n for row in rows):
        raise ValueError(f"scattering matrix must be {n} x {n}")
    for row in rows:
        for op in row:
            if not isinstance(op, Operator) or op.space != space:
                raise ValueError("scattering entries must be operators on the common space")
    return rows


class SLHTriple:
    """Immutable (S, L, H) triple on a common Hilbert space.

    Blockwise unitarity of S and Hermiticity of H are checked at
    construction: defects above 1e-6 are errors, defects above 1e-10 are
    reported as warnings so deliberately perturbed models remain usable.
    """

    __slots__ = ("S", "L", "H", "space")

    def __init__(self, s, l, h: Operator):
        ls = tuple(l)
        space = h.space
        for op in ls:
            if not isinstance(op, Operator) or op.space != space:
                raise ValueError("coupling operators must live on the Hamiltonian's space")
        s_rows = _as_operator_matrix(s, len(ls), space)

        u_defect = unitarity_defect(s_rows)
        if u_defect > UNITARITY_FAIL_TOL:
            raise ValueError(f"scattering matrix is not blockwise unitary (defect {u_defect:.3e})")
        if u_defect > UNITARITY_WARN_TOL:
            warnings.warn(f"scattering matrix unitarity defect {u_defect:.3e}", stacklevel=2)
        h_defect = hermiticity_defect(h)
        if h_defect > UNITARITY_FAIL_TOL:
            raise ValueError(f"Hamiltonian is not Hermitian (defect {h_defect:.3e})")
        if h_defect > UNITARITY_WARN_TOL:
            warnings.warn(f"Hamiltonian hermiticity defect {h_defect:.3e}", stacklevel=2)

        object.__setattr__(self, "S", s_rows)
        object.__setattr__(self, "L", ls)
        object.__setattr__(self, "H", h)
        object.__setattr__(self, "space", space)

    def __setattr__(self, name, value):
        raise AttributeError("SLHTriple is immutable")

    @property
    def n(self) -> int:
        return len(self.L)

    @property
    def dim(self) -> int:
        return self.space.dim

    def __repr__(self):
        return f"SLHTriple(n={self.n}, dim={self.dim})"


def k_operator(g: SLHTriple) -> Operator:
    """Drift coefficient K = -1/2 sum_i L_i^H L_i - i H."""
    acc = np.zeros((g.dim, g.dim), dtype=complex)
    for op in g.L:
        acc += op.mat.conj().T @ op.mat
    return Operator(g.space, -0.5 * acc - 1j * g.H.mat)


def lindbladian(g: SLHTriple, x: Operator) -> Operator:
    """Heisenberg generator
    LX = 1/2 sum_i L_i^H [X, L_i] + 1/2 sum_i [L_i^H, X] L_i - i [X, H].
    """
    if x.space != g.space:
        raise ValueError("observable lives on a different space than the model")
    xm, hm = x.mat, g.H.mat
    out = -1j * (xm @ hm - hm @ xm)
    for op in g.L:
        lm = op.mat
        ld = lm.conj().T
        out += 0.5 * ld @ (xm @ lm - lm @ xm)
        out += 0.5 * (ld @ xm - xm @ ld) @ lm
    return Operator(g.space, out)


@dataclass(frozen=True)
class HeisenbergCoefficients:
    """Coefficients of the Heisenberg quantum stochastic equation for one
    observable: the dt drift, and the gains multiplying the creation,
    annihilation and gauge noise increments."""

    drift: Operator
    creation_coeffs: tuple
    annihilation_coeffs: tuple
    gauge_coeffs: tuple


def heisenberg_coeffs(g: SLHTriple, x: Operator) -> HeisenbergCoefficients:
    """Evaluate LX, M_i X = S_ji^H [X, L_j], N_i X = [L_k^H, X] S_ki and
    S_ik X = S_ji^H X S_jk - delta_ik X (sums over repeated indices)."""
    if x.space != g.space:
        raise ValueError("observable lives on a different space than the model")
    n = g.n
    xm = x.mat
    creation = []
    annihilation = []
    for i in range(n):
        m_acc = np.zeros_like(xm)
        n_acc = np.zeros_like(xm)
        for j in range(n):
            lm = g.L[j].mat
            m_acc += g.S[j][i].mat.conj().T @ (xm @ lm - lm @ xm)
            n_acc += (lm.conj().T @ xm - xm @ lm.conj().T) @ g.S[j][i].mat
        creation.append(Operator(g.space, m_acc))
        annihilation.append(Operator(g.space, n_acc))
    gauge = []
    for i in range(n):
        row = []
        for k in range(n):
            acc = np.zeros_like(xm)
            for j in range(n):
                acc += g.S[j][i].mat.conj().T @ xm @ g.S[j][k].mat
            if i == k:
                acc -= xm
            row.append(Operator(g.space, acc))
        gauge.append(tuple(row))
    return HeisenbergCoefficients(
        drift=lindbladian(g, x),
        creation_coeffs=tuple(creation),
        annihilation_coeffs=tuple(annihilation),
        gauge_coeffs=tuple(gauge),
    )


def concatenation(g1: SLHTriple, g2: SLHTriple) -> SLHTriple:
    """Parallel composition: channel counts add, S is block diagonal."""
    if g1.space != g2.space:
        raise ValueError("concatenation requires a common system space")
    n1, n2 = g1.n, g2.n
    z = zero(g1.space)
    s = [[z] * (n1 + n2) for _ in range(n1 + n2)]
    for i in range(n1):
        for j in range(n1):
            s[i][j] = g1.S[i][j]
    for i in range(n2):
        for j in range(n2):
            s[n1 + i][n1 + j] = g2.S[i][j]
    return SLHTriple(s, g1.L + g2.L, g1.H + g2.H)


def series_product(g1: SLHTriple, g2: SLHTriple) -> SLHTriple:
    """Cascade: the outputs of g1 feed the inputs of g2.

    S = S2 S1, L = L2 + S2 L1 and H = H1 + H2 + Im{sum_ij L2_i^H S2_ij
    L1_j} with Im{X} = (X - X^H) / 2i.
    """
    if g1.space != g2.space:
        raise ValueError("series product requires a common system space")
    if g1.n != g2.n:
        raise ValueError(f"channel count mismatch: {g1.n} vs {g2.n}")
    n = g1.n
    dim = g1.dim
    s = []
    for i in range(n):
        row = []
        for k in range(n):
            acc = np.zeros((dim, dim), dtype=complex)
            for j in range(n):
                acc += g2.S[i][j].mat @ g1.S[j][k].mat
            row.append(Operator(g1.space, acc))
        s.append(tuple(row))
    l = []
    for i in range(n):
        acc = g2.L[i].mat.copy()
        for j in range(n):
            acc += g2.S[i][j].mat @ g1.L[j].mat
        l.append(Operator(g1.space, acc))
    cross = np.zeros((dim, dim), dtype=complex)
    for i in range(n):
        for j in range(n):
            cross += g2.L[i].mat.conj().T @ g2.S[i][j].mat @ g1.L[j].mat
    h = g1.H.mat + g2.H.mat + (cross - cross.conj().T) / 2j
    return SLHTriple(tuple(s), tuple(l), Operator(g1.space, h))


def passthrough(space: HilbertSpace, n: int) -> SLHTriple:
    """Trivial n-channel model (S = I, L = 0, H = 0)."""
    eye = Operator(space, np.eye(space.dim, dtype=complex))
    z = zero(space)
    s = tuple(tuple(eye if i == j else z for j in range(n)) for i in range(n))
    return SLHTriple(s, (z,) * n, z)
