"""Strong-coupling limits of k-scaled SLH families.

A scaled family fixes S and expands the couplings and Hamiltonian in a
strength parameter k:

    L(k) = k L1 + L0,        H(k) = k^2 H2 + k H1 + H0,

so the drift operator expands as K(k) = k^2 A + k M + R with

    A = -1/2 sum_i L1_i^H L1_i - i H2,
    M = -1/2 sum_i (L1_i^H L0_i + L0_i^H L1_i) - i H1,
    R = -1/2 sum_i L0_i^H L0_i - i H0.

Given a split of the space into a candidate Zeno subspace and its fast
complement, three conditions decide whether the k -> infinity dynamics
closes on the Zeno subspace:

1. scaling:    L1 annihilates the Zeno subspace, H1 has no Zeno-Zeno
               block, and H2 is supported entirely on the fast subspace
               (so A and M acquire the block structure the limit formulas
               assume);
2. kernel:     the Zeno subspace is exactly the kernel of A, i.e. A V_z
               vanishes and the fast block A_ff is invertible;
3. decoupling: the limit scattering has no Zeno-fast blocks and the limit
               couplings do not map the Zeno subspace into the fast one.

When all three hold, the limit model on the Zeno subspace is

    S_hat_ab = (delta_ac + L1_af (1/A_ff) L1_cf^H) S_cb   (sum over c, channels)
    L_hat_a  = L0_az - L1_af (1/A_ff) M_fz
    H_hat    = H0_zz + Im{ M_zf (1/A_ff) M_fz },   Im{X} = (X - X^H)/2i.

A_ff^{-1} is always applied through a linear solve with a condition
number guard, never by forming an explicit inverse.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .operators import (
    Operator,
    SubspaceIsometry,
    ZenoSplit,
    block_split,
    kernel_basis,
)
from .slh import SLHTriple, hermiticity_defect, unitarity_defect, UNITARITY_FAIL_TOL, UNITARITY_WARN_TOL

__all__ = [
    "ScaledSLHFamily",
    "KExpansion",
    "HatOperators",
    "EliminationResult",
    "ZenofiabilityError",
    "ScalingViolation",
    "KernelViolation",
    "DecouplingViolation",
    "instantiate",
    "expand_k",
    "check_scaling",
    "check_kernel",
    "kernel_alignment",
    "hat_operators",
    "check_decoupling",
    "zeno_eliminate",
    "find_zeno_subspace",
    "family_series_product",
    "SCALING_TOL",
    "KERNEL_TOL_SIGMA",
    "DECOUPLING_TOL",
    "CONDITION_NUMBER_GUARD",
]

SCALING_TOL = 1e-9
KERNEL_TOL_SIGMA = 1e-8
DECOUPLING_TOL = 1e-9
CONDITION_NUMBER_GUARD = 1e12


class ZenofiabilityError(Exception):
    """A zenofiability condition failed for the supplied split."""

    def __init__(self, message: str, residual: float, residuals: dict | None = None):
        super().__init__(message)
        self.residual = float(residual)
        self.residuals = dict(residuals or {})


class ScalingViolation(ZenofiabilityError):
    pass


class KernelViolation(ZenofiabilityError):
    pass


class DecouplingViolation(ZenofiabilityError):
    pass


class ScaledSLHFamily:
    """Coefficients (S, L1, L0, H2, H1, H0) defining G(k) for all k > 0."""

    __slots__ = ("S", "L1", "L0", "H2", "H1", "H0", "space")

    def __init__(self, s, l1, l0, h2: Operator, h1: Operator, h0: Operator):
        space = h0.space
        l1 = tuple(l1)
        l0 = tuple(l0)
        if len(l1) != len(l0):
            raise ValueError("L1 and L0 must have the same channel count")
        for op in (*l1, *l0, h2, h1, h0):
            if not isinstance(op, Operator) or op.space != space:
                raise ValueError("all family coefficients must live on a common space")
        n = len(l1)
        s = tuple(tuple(row) for row in s)
        if len(s) != n or any(len(row) != n for row in s):
            raise ValueError(f"scattering matrix must be {n} x {n}")
        for row in s:
            for op in row:
                if not isinstance(op, Operator) or op.space != space:
                    raise ValueError("scattering entries must live on the common space")

        u_defect = unitarity_defect(s)
        if u_defect > UNITARITY_FAIL_TOL:
            raise ValueError(f"scattering matrix is not blockwise unitary (defect {u_defect:.3e})")
        if u_defect > UNITARITY_WARN_TOL:
            warnings.warn(f"scattering matrix unitarity defect {u_defect:.3e}", stacklevel=2)
        for name, h in (("H2", h2), ("H1", h1), ("H0", h0)):
            defect = hermiticity_defect(h)
            if defect > UNITARITY_FAIL_TOL:
                raise ValueError(f"{name} is not Hermitian (defect {defect:.3e})")
            if defect > UNITARITY_WARN_TOL:
                warnings.warn(f"{name} hermiticity defect {defect:.3e}", stacklevel=2)

        object.__setattr__(self, "S", s)
        object.__setattr__(self, "L1", l1)
        object.__setattr__(self, "L0", l0)
        object.__setattr__(self, "H2", h2)
        object.__setattr__(self, "H1", h1)
        object.__setattr__(self, "H0", h0)
        object.__setattr__(self, "space", space)

    def __setattr__(self, name, value):
        raise AttributeError("ScaledSLHFamily is immutable")

    @property
    def n(self) -> int:
        return len(self.L1)

    @property
    def dim(self) -> int:
        return self.space.dim

    def map_operators(self, fn) -> "ScaledSLHFamily":
        """Apply a space-changing map (e.g. a tensor lift) to every coefficient."""
        return ScaledSLHFamily(
            tuple(tuple(fn(op) for op in row) for row in self.S),
            tuple(fn(op) for op in self.L1),
            tuple(fn(op) for op in self.L0),
            fn(self.H2),
            fn(self.H1),
            fn(self.H0),
        )

    def __repr__(self):
        return f"ScaledSLHFamily(n={self.n}, dim={self.dim})"


@dataclass(frozen=True)
class KExpansion:
    """Coefficients of K(k) = k^2 quadratic + k linear + constant."""

    quadratic: Operator
    linear: Operator
    constant: Operator


@dataclass(frozen=True)
class HatOperators:
    """Limit operators prior to compression.

    ``s_hat`` and ``l_hat`` are kept on the full space so the decoupling
    blocks can be inspected; ``h_zeno`` already lives on the Zeno
    subspace.
    """

    s_hat: tuple
    l_hat: tuple
    h_zeno: Operator
    split: ZenoSplit


@dataclass(frozen=True)
class EliminationResult:
    """Limit triple on the Zeno subspace plus condition diagnostics."""

    zeno_triple: SLHTriple
    v_z: SubspaceIsometry
    residuals: dict


def instantiate(family: ScaledSLHFamily, k: float) -> SLHTriple:
    """Concrete SLH triple at coupling strength k > 0."""
    k = float(k)
    if k <= 0:
        raise ValueError(f"scaling parameter must be positive, got {k}")
    l = tuple(k * l1 + l0 for l1, l0 in zip(family.L1, family.L0))
    h = (k * k) * family.H2 + k * family.H1 + family.H0
    return SLHTriple(family.S, l, h)


def expand_k(family: ScaledSLHFamily) -> KExpansion:
    """Direct k-power expansion of K(k) = -1/2 L(k)^H L(k) - i H(k)."""
    dim = family.dim
    quad = np.zeros((dim, dim), dtype=complex)
    lin = np.zeros((dim, dim), dtype=complex)
    const = np.zeros((dim, dim), dtype=complex)
    for l1, l0 in zip(family.L1, family.L0):
        m1, m0 = l1.mat, l0.mat
        quad += m1.conj().T @ m1
        lin += m1.conj().T @ m0 + m0.conj().T @ m1
        const += m0.conj().T @ m0
    return KExpansion(
        quadratic=Operator(family.space, -0.5 * quad - 1j * family.H2.mat),
        linear=Operator(family.space, -0.5 * lin - 1j * family.H1.mat),
        constant=Operator(family.space, -0.5 * const - 1j * family.H0.mat),
    )


def check_scaling(family: ScaledSLHFamily, split: ZenoSplit) -> float:
    """Largest-entry residual of the scaling condition.

    Measures, with P_z the Zeno projection: L1_i P_z for every channel,
    P_z H1 P_z, and both rows/columns P_z H2 and H2 P_z.  Together with
    the kernel condition this enforces the block structure of A and M.
    """
    pz = split.v_z.projector()
    worst = 0.0
    for l1 in family.L1:
        m = l1.mat @ pz
        if m.size:
            worst = max(worst, float(np.max(np.abs(m))))
    h1 = pz @ family.H1.mat @ pz
    h2_rows = pz @ family.H2.mat
    h2_cols = family.H2.mat @ pz
    for m in (h1, h2_rows, h2_cols):
        if m.size:
            worst = max(worst, float(np.max(np.abs(m))))
    return worst


def check_kernel(expansion: KExpansion, split: ZenoSplit) -> float:
    """Smallest singular value of the fast block A_ff.

    The kernel condition also requires A V_z = 0; see
    :func:`kernel_alignment` for that residual.
    """
    a_ff = block_split(expansion.quadratic, split)[3]
    if a_ff.shape[0] == 0:
        return float("inf")
    return float(np.linalg.svd(a_ff, compute_uv=False)[-1])


def kernel_alignment(expansion: KExpansion, split: ZenoSplit) -> float:
    """Spectral norm of A V_z; zero iff the Zeno range sits in ker A."""
    m = expansion.quadratic.mat @ split.v_z.cols
    return float(np.linalg.norm(m, 2)) if m.size else 0.0


def hat_operators(family: ScaledSLHFamily, split: ZenoSplit) -> HatOperators:
    """Evaluate the limit formulas (see module docstring).

    Assumes the scaling and kernel conditions hold; raises
    :class:`KernelViolation` if A_ff is numerically singular.
    """
    exp = expand_k(family)
    _, _, _, a_ff = block_split(exp.quadratic, split)
    _, m_zf, m_fz, _ = block_split(exp.linear, split)
    vz, vf = split.v_z.cols, split.v_f.cols
    h0_zz = vz.conj().T @ family.H0.mat @ vz

    d_f = split.dim_fast
    if d_f and np.linalg.cond(a_ff) > CONDITION_NUMBER_GUARD:
        raise KernelViolation(
            "fast block of the k^2 drift coefficient is numerically singular "
            f"(condition number > {CONDITION_NUMBER_GUARD:.0e})",
            residual=float(np.linalg.svd(a_ff, compute_uv=False)[-1]),
        )

    def solve_ff(rhs):
        if d_f == 0 or rhs.shape[1] == 0:
            return np.zeros_like(rhs)
        return np.linalg.solve(a_ff, rhs)

    n = family.n
    l1_blocks = [block_split(op, split) for op in family.L1]
    l0_blocks = [block_split(op, split) for op in family.L0]
    s_blocks = [[block_split(family.S[j][k], split) for k in range(n)] for j in range(n)]

    w_m = solve_ff(m_fz)  # A_ff^{-1} M_fz, shape d_f x d_z

    l_hat_full = []
    for j in range(n):
        lz = l0_blocks[j][0] - l1_blocks[j][1] @ w_m  # L0_zz - L1_zf A_ff^{-1} M_fz
        lf = l0_blocks[j][2] - l1_blocks[j][3] @ w_m  # L0_fz - L1_ff A_ff^{-1} M_fz
        full = vz @ lz @ vz.conj().T + vf @ lf @ vz.conj().T
        l_hat_full.append(Operator(family.space, full))

    # Pre-solve A_ff^{-1} sum_m (L1_m)_cf^H S[m][k]_cb for each (k, block column b).
    y = [[None, None] for _ in range(n)]
    for k in range(n):
        for b in (0, 1):  # 0 = z column, 1 = f column
            d_b = split.dim_zeno if b == 0 else d_f
            rhs = np.zeros((d_f, d_b), dtype=complex)
            for m in range(n):
                s_zb = s_blocks[m][k][0 + b]      # (z, b) block
                s_fb = s_blocks[m][k][2 + b]      # (f, b) block
                rhs += l1_blocks[m][1].conj().T @ s_zb + l1_blocks[m][3].conj().T @ s_fb
            y[k][b] = solve_ff(rhs)

    s_hat_full = []
    for j in range(n):
        row = []
        for k in range(n):
            szz = s_blocks[j][k][0] + l1_blocks[j][1] @ y[k][0]
            szf = s_blocks[j][k][1] + l1_blocks[j][1] @ y[k][1]
            sfz = s_blocks[j][k][2] + l1_blocks[j][3] @ y[k][0]
            sff = s_blocks[j][k][3] + l1_blocks[j][3] @ y[k][1]
            full = (
                vz @ szz @ vz.conj().T
                + vz @ szf @ vf.conj().T
                + vf @ sfz @ vz.conj().T
                + vf @ sff @ vf.conj().T
            )
            row.append(Operator(family.space, full))
        s_hat_full.append(tuple(row))

    y_h = m_zf @ w_m
    h_hat = h0_zz + (y_h - y_h.conj().T) / 2j
    return HatOperators(
        s_hat=tuple(s_hat_full),
        l_hat=tuple(l_hat_full),
        h_zeno=Operator(split.zeno_space, h_hat),
        split=split,
    )


def check_decoupling(hats: HatOperators) -> float:
    """Largest entry of the Zeno-fast scattering blocks and fast couplings."""
    split = hats.split
    vz, vf = split.v_z.cols, split.v_f.cols
    worst = 0.0
    for row in hats.s_hat:
        for op in row:
            zf = vz.conj().T @ op.mat @ vf
            fz = vf.conj().T @ op.mat @ vz
            for m in (zf, fz):
                if m.size:
                    worst = max(worst, float(np.max(np.abs(m))))
    for op in hats.l_hat:
        lf = vf.conj().T @ op.mat @ vz
        if lf.size:
            worst = max(worst, float(np.max(np.abs(lf))))
    return worst


def zeno_eliminate(
    family: ScaledSLHFamily,
    split: ZenoSplit,
    *,
    scaling_tol: float = SCALING_TOL,
    kernel_tol: float = KERNEL_TOL_SIGMA,
    decoupling_tol: float = DECOUPLING_TOL,
) -> EliminationResult:
    """Run the three conditions and compute the limit triple.

    On success the triple is returned compressed to the Zeno subspace
    (dimension d_z), with the isometry retained for lifting results back.
    On failure a typed :class:`ZenofiabilityError` names the violated
    condition and carries the residuals collected so far.  A kernel not
    aligned with the supplied split is an error; use
    :func:`find_zeno_subspace` to discover the aligned split.
    """
    residuals: dict = {}
    s_res = check_scaling(family, split)
    residuals["scaling_residual"] = s_res
    if s_res >= scaling_tol:
        raise ScalingViolation(
            f"scaling condition violated (residual {s_res:.3e} >= {scaling_tol:.1e})",
            residual=s_res,
            residuals=residuals,
        )

    exp = expand_k(family)
    sigma_min = check_kernel(exp, split)
    align = kernel_alignment(exp, split)
    residuals["kernel_min_singular_value"] = sigma_min
    residuals["kernel_alignment"] = align
    if align >= kernel_tol:
        raise KernelViolation(
            "Zeno subspace is not contained in the kernel of the k^2 drift "
            f"coefficient (|A V_z| = {align:.3e} >= {kernel_tol:.1e})",
            residual=align,
            residuals=residuals,
        )
    if sigma_min <= kernel_tol:
        raise KernelViolation(
            "kernel of the k^2 drift coefficient is larger than the Zeno subspace "
            f"(sigma_min(A_ff) = {sigma_min:.3e} <= {kernel_tol:.1e})",
            residual=sigma_min,
            residuals=residuals,
        )

    hats = hat_operators(family, split)
    d_res = check_decoupling(hats)
    residuals["decoupling_residual"] = d_res
    if d_res >= decoupling_tol:
        raise DecouplingViolation(
            f"decoupling condition violated (residual {d_res:.3e} >= {decoupling_tol:.1e})",
            residual=d_res,
            residuals=residuals,
        )

    v_z = split.v_z
    s_zz = tuple(tuple(v_z.compress(op) for op in row) for row in hats.s_hat)
    l_z = tuple(v_z.compress(op) for op in hats.l_hat)
    triple = SLHTriple(s_zz, l_z, hats.h_zeno)
    return EliminationResult(zeno_triple=triple, v_z=v_z, residuals=residuals)


def find_zeno_subspace(family: ScaledSLHFamily, tol: float = 1e-10) -> ZenoSplit:
    """Compute the split from the kernel of the k^2 drift coefficient.

    The kernel basis is canonicalized, so kernels aligned with the
    computational basis come back as exact basis vectors.
    """
    a = expand_k(family).quadratic
    v_z = kernel_basis(a, tol)
    d = v_z.subspace_dim
    if d == 0:
        raise ValueError(
            "the k^2 drift coefficient has a trivial kernel; no Zeno subspace exists"
        )
    if d == family.dim:
        raise ValueError(
            "the k^2 drift coefficient vanishes; there is no fast subspace to eliminate"
        )
    return ZenoSplit.from_zeno(v_z)


def family_series_product(f1: ScaledSLHFamily, f2: ScaledSLHFamily) -> ScaledSLHFamily:
    """Cascade of two scaled families, collected order by order in k.

    Instantiating the result at any k equals the series product of the
    instantiated components.
    """
    if f1.space != f2.space:
        raise ValueError("series product requires a common system space")
    if f1.n != f2.n:
        raise ValueError(f"channel count mismatch: {f1.n} vs {f2.n}")
    n = f1.n
    dim = f1.dim
    space = f1.space

    s = []
    for i in range(n):
        row = []
        for k in range(n):
            acc = np.zeros((dim, dim), dtype=complex)
            for j in range(n):
                acc += f2.S[i][j].mat @ f1.S[j][k].mat
            row.append(Operator(space, acc))
        s.append(tuple(row))

    def s2_dot(ls):
        out = []
        for i in range(n):
            acc = np.zeros((dim, dim), dtype=complex)
            for j in range(n):
                acc += f2.S[i][j].mat @ ls[j].mat
            out.append(acc)
        return out

    s2_l1_1 = s2_dot(f1.L1)
    s2_l0_1 = s2_dot(f1.L0)
    l1 = tuple(Operator(space, f2.L1[i].mat + s2_l1_1[i]) for i in range(n))
    l0 = tuple(Operator(space, f2.L0[i].mat + s2_l0_1[i]) for i in range(n))

    def cross(l2s, s2_l1s):
        acc = np.zeros((dim, dim), dtype=complex)
        for i in range(n):
            acc += l2s[i].mat.conj().T @ s2_l1s[i]
        return acc

    def im(x):
        return (x - x.conj().T) / 2j

    h2 = f1.H2.mat + f2.H2.mat + im(cross(f2.L1, s2_l1_1))
    h1 = f1.H1.mat + f2.H1.mat + im(cross(f2.L1, s2_l0_1) + cross(f2.L0, s2_l1_1))
    h0 = f1.H0.mat + f2.H0.mat + im(cross(f2.L0, s2_l0_1))
    return ScaledSLHFamily(
        tuple(s),
        l1,
        l0,
        Operator(space, h2),
        Operator(space, h1),
        Operator(space, h0),
    )
