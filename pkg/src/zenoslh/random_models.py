"""Random model generators for property tests and sweeps.

Zenofiable scaled families are built by construction: trivial
scattering, fast-supported k^2 Hamiltonian with an invertible fast
block, a k-linear coupling mapping only fast -> Zeno (which makes the
decoupling condition automatic), and free k^0 data subject to the
scaling condition.  Oscillator models use scalar oscillator couplings so
the recovered k^2 Hamiltonian coefficient is Hermitian, a dissipative
drift matrix, and k-linear coefficients tied together by Hermiticity of
the recovered k^1 coefficient.
"""

from __future__ import annotations

import numpy as np

from .elimination import ScaledSLHFamily
from .linear import LinearMeanSystem, OscillatorModelCoeffs
from .operators import HilbertSpace, Operator, ZenoSplit, zero

__all__ = [
    "random_complex_matrix",
    "random_hermitian",
    "random_unitary",
    "random_density_matrix",
    "random_zenofiable_family",
    "random_oscillator_model",
    "random_mean_system",
]


def random_complex_matrix(rng, rows: int, cols: int | None = None) -> np.ndarray:
    cols = rows if cols is None else cols
    return (rng.standard_normal((rows, cols)) + 1j * rng.standard_normal((rows, cols))) / np.sqrt(2)


def random_hermitian(rng, dim: int) -> np.ndarray:
    m = random_complex_matrix(rng, dim)
    return 0.5 * (m + m.conj().T)


def random_unitary(rng, dim: int) -> np.ndarray:
    q, r = np.linalg.qr(random_complex_matrix(rng, dim))
    return q * (np.diag(r) / np.abs(np.diag(r)))


def random_density_matrix(rng, dim: int) -> np.ndarray:
    m = random_complex_matrix(rng, dim)
    rho = m @ m.conj().T
    return rho / np.trace(rho).real


def random_zenofiable_family(rng, dim_z: int, dim_f: int, n_channels: int):
    """Family that passes all three conditions, with the canonical split.

    Returns (family, split) with the Zeno subspace spanned by the first
    ``dim_z`` basis vectors.  The k-linear couplings have only a
    Zeno<-fast block and the k^0 couplings have no fast<-Zeno block, so
    the limit scattering is the nontrivial I + L1_zf A_ff^{-1} L1_zf^H
    and decoupling holds by construction.
    """
    dim = dim_z + dim_f
    space = HilbertSpace((dim,))

    def assemble(zz, zf, fz, ff):
        m = np.zeros((dim, dim), dtype=complex)
        if zz is not None:
            m[:dim_z, :dim_z] = zz
        if zf is not None:
            m[:dim_z, dim_z:] = zf
        if fz is not None:
            m[dim_z:, :dim_z] = fz
        if ff is not None:
            m[dim_z:, dim_z:] = ff
        return Operator(space, m)

    for _ in range(20):
        l1 = tuple(
            assemble(None, random_complex_matrix(rng, dim_z, dim_f), None, None)
            for _ in range(n_channels)
        )
        h2_ff = random_hermitian(rng, dim_f)
        h2 = assemble(None, None, None, h2_ff)
        a_ff = -0.5 * sum(
            op.mat[:dim_z, dim_z:].conj().T @ op.mat[:dim_z, dim_z:] for op in l1
        ) - 1j * h2_ff
        if dim_f == 0 or np.linalg.svd(a_ff, compute_uv=False)[-1] > 0.05:
            break
    l0 = tuple(
        assemble(
            random_complex_matrix(rng, dim_z, dim_z),
            random_complex_matrix(rng, dim_z, dim_f),
            None,
            random_complex_matrix(rng, dim_f, dim_f),
        )
        for _ in range(n_channels)
    )
    h1_zf = random_complex_matrix(rng, dim_z, dim_f)
    h1 = assemble(None, h1_zf, h1_zf.conj().T, random_hermitian(rng, dim_f))
    h0 = Operator(space, random_hermitian(rng, dim))

    eye = Operator(space, np.eye(dim, dtype=complex))
    z = zero(space)
    s = tuple(
        tuple(eye if i == j else z for j in range(n_channels)) for i in range(n_channels)
    )
    family = ScaledSLHFamily(s, l1, l0, h2, h1, h0)
    split = ZenoSplit.from_indices(space, range(dim_z))
    return family, split


def random_oscillator_model(rng, slow_dim: int, n_channels: int, m_osc: int) -> OscillatorModelCoeffs:
    """Consistent oscillator coefficients with a dissipative drift matrix.

    Oscillator couplings are scalars (times the slow identity) with a
    full-column-rank coefficient matrix, which makes the drift matrix
    strictly dissipative and the recovered Hamiltonian coefficients
    Hermitian.  Requires n_channels >= m_osc.
    """
    if n_channels < m_osc:
        raise ValueError("need at least as many channels as oscillators")
    space = HilbertSpace((slow_dim,))
    eye = np.eye(slow_dim, dtype=complex)

    def op(mat):
        return Operator(space, mat)

    for _ in range(20):
        c = random_complex_matrix(rng, n_channels, m_osc)
        gram = c.conj().T @ c
        if np.linalg.svd(gram, compute_uv=False)[-1] > 0.05:
            break
    drift = -0.5 * gram + 1j * random_hermitian(rng, m_osc)

    u = random_unitary(rng, n_channels)
    scattering = tuple(tuple(op(u[j, k] * eye) for k in range(n_channels)) for j in range(n_channels))
    couplings = tuple(tuple(op(c[j, i] * eye) for i in range(m_osc)) for j in range(n_channels))
    direct = tuple(op(random_complex_matrix(rng, slow_dim)) for _ in range(n_channels))
    creation = tuple(op(random_complex_matrix(rng, slow_dim)) for _ in range(m_osc))
    # Hermiticity of the recovered k^1 Hamiltonian ties the annihilation
    # coefficients to the creation ones: X_i = -Z_i^H - sum_j G_j^H C_ji.
    annihilation = []
    for i in range(m_osc):
        x = -creation[i].mat.conj().T
        for j in range(n_channels):
            x -= direct[j].mat.conj().T * c[j, i]
        annihilation.append(op(x))
    # Hermiticity of the recovered k^0 coefficient fixes the Hermitian
    # part of the constant drift: R + R^H = -sum_j G_j^H G_j.
    constant = op(
        -0.5 * sum(g.mat.conj().T @ g.mat for g in direct) - 1j * random_hermitian(rng, slow_dim)
    )
    return OscillatorModelCoeffs(
        slow_space=space,
        scattering=scattering,
        osc_couplings=couplings,
        direct_couplings=direct,
        osc_drift=drift,
        annihilation_coeffs=tuple(annihilation),
        creation_coeffs=creation,
        constant_drift=constant,
    )


def _shift_spectrum(rng, dim: int, max_real: float) -> np.ndarray:
    """Random matrix whose spectral abscissa equals max_real."""
    m = random_complex_matrix(rng, dim)
    shift = float(np.max(np.linalg.eigvals(m).real)) - max_real
    return m - shift * np.eye(dim)


def random_mean_system(
    rng, r: int, m: int, *, slow_hurwitz: bool, fast_hurwitz: bool, margin: float = 0.3
) -> LinearMeanSystem:
    """Mean-field blocks with prescribed Hurwitzness of Gamma4 and Gamma0.

    Gamma1 is back-solved from a target Schur complement so the slow
    criterion is controlled exactly.
    """
    gamma4 = _shift_spectrum(rng, m, -margin if fast_hurwitz else margin)
    gamma2 = random_complex_matrix(rng, r, m)
    gamma3 = random_complex_matrix(rng, m, r)
    gamma0 = _shift_spectrum(rng, r, -margin if slow_hurwitz else margin)
    gamma1 = gamma0 + gamma2 @ np.linalg.solve(gamma4, gamma3)
    return LinearMeanSystem(gamma1, gamma2, gamma3, gamma4)
