"""Oscillator fast modes: closed-form elimination and mean-field stability.

An open model whose fast degrees of freedom are m strongly damped
oscillators is specified directly through its drift coefficients on the
slow space:

    S(k) = S_slow x I,
    L_j(k) = k sum_i C_ji x a_i + G_j x I,
    K(k) = k^2 sum_ij A_ij x a_i^H a_j + k sum_i Z_i x a_i^H
           + k sum_i X_i x a_i + R x I,

with A an m x m scalar matrix.  When A is strictly Hurwitz the kernel of
the k^2 coefficient is slow x vacuum and the limit model on the slow
space is

    S_hat = (I + C A^{-1} C^H) S_slow,
    L_hat = G - C A^{-1} Z,
    K_hat = R - X A^{-1} Z,

the Hamiltonian being recovered from the drift as
H = i (K + 1/2 sum_j L_j^H L_j).  Hermiticity of every recovered H is a
validation gate on the supplied coefficients; H is never requested from
the caller.

For linear (Gaussian) models the first-moment dynamics is the
singularly perturbed pair

    d/dt b = Gamma1 b + Gamma2 z,    (1/k^2) d/dt z = Gamma3 b + Gamma4 z,

whose cleared generator is [[Gamma1, Gamma2], [k^2 Gamma3, k^2 Gamma4]].
For large k the spectrum splits into a slow group converging to the
Schur complement Gamma0 = Gamma1 - Gamma2 Gamma4^{-1} Gamma3 at rate
1/k^2 and a fast group scaling as k^2 sigma(Gamma4); the tail of the
k-family is asymptotically stable iff Gamma4 and Gamma0 are both
Hurwitz.  Both Hurwitz notions (numerical range in the open left half
plane, which is the dissipativity used for the kernel statement, and the
weaker eigenvalue criterion) are computed and reported side by side.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .elimination import ScaledSLHFamily
from .operators import HilbertSpace, Operator, ZenoSplit, fock_annihilator, tensor
from .slh import SLHTriple

__all__ = [
    "OscillatorModelCoeffs",
    "LinearMeanSystem",
    "HurwitzReport",
    "SpectrumSplit",
    "StabilityRow",
    "StabilityReport",
    "oscillator_limit",
    "build_full_family",
    "oscillator_split",
    "is_strictly_hurwitz",
    "slow_schur",
    "full_spectrum",
    "stability_threshold",
]

_COND_GUARD = 1e12


class OscillatorModelCoeffs:
    """Drift coefficients of a model with m fast oscillator modes.

    All operator entries act on the slow space; ``osc_drift`` is the
    m x m scalar matrix multiplying a_i^H a_j.
    """

    __slots__ = (
        "slow_space",
        "scattering",
        "osc_couplings",
        "direct_couplings",
        "osc_drift",
        "annihilation_coeffs",
        "creation_coeffs",
        "constant_drift",
    )

    def __init__(
        self,
        slow_space: HilbertSpace,
        scattering,
        osc_couplings,
        direct_couplings,
        osc_drift,
        annihilation_coeffs,
        creation_coeffs,
        constant_drift: Operator,
    ):
        a = np.array(osc_drift, dtype=complex)
        if a.ndim != 2 or a.shape[0] != a.shape[1]:
            raise ValueError("oscillator drift matrix must be square")
        m = a.shape[0]
        couplings = tuple(tuple(row) for row in osc_couplings)
        n = len(couplings)
        if any(len(row) != m for row in couplings):
            raise ValueError(f"oscillator couplings must form an n x {m} array")
        direct = tuple(direct_couplings)
        if len(direct) != n:
            raise ValueError("need one direct coupling per channel")
        ann = tuple(annihilation_coeffs)
        cre = tuple(creation_coeffs)
        if len(ann) != m or len(cre) != m:
            raise ValueError("need one k-linear drift coefficient per oscillator")
        scat = tuple(tuple(row) for row in scattering)
        if len(scat) != n or any(len(row) != n for row in scat):
            raise ValueError(f"scattering must be {n} x {n}")
        for op in (
            *(op for row in couplings for op in row),
            *direct,
            *ann,
            *cre,
            *(op for row in scat for op in row),
            constant_drift,
        ):
            if not isinstance(op, Operator) or op.space != slow_space:
                raise ValueError("all operator coefficients must live on the slow space")
        a.setflags(write=False)
        object.__setattr__(self, "slow_space", slow_space)
        object.__setattr__(self, "scattering", scat)
        object.__setattr__(self, "osc_couplings", couplings)
        object.__setattr__(self, "direct_couplings", direct)
        object.__setattr__(self, "osc_drift", a)
        object.__setattr__(self, "annihilation_coeffs", ann)
        object.__setattr__(self, "creation_coeffs", cre)
        object.__setattr__(self, "constant_drift", constant_drift)

    def __setattr__(self, name, value):
        raise AttributeError("OscillatorModelCoeffs is immutable")

    @property
    def n(self) -> int:
        return len(self.direct_couplings)

    @property
    def m(self) -> int:
        return self.osc_drift.shape[0]


def _check_invertible(a: np.ndarray, what: str):
    if a.size and np.linalg.cond(a) > _COND_GUARD:
        raise ValueError(f"{what} is numerically singular (condition number > {_COND_GUARD:.0e})")


def oscillator_limit(coeffs: OscillatorModelCoeffs) -> SLHTriple:
    """Closed-form limit triple on the slow space (vacuum factor dropped)."""
    _check_invertible(coeffs.osc_drift, "oscillator drift matrix")
    a_inv = np.linalg.inv(coeffs.osc_drift)
    n, m = coeffs.n, coeffs.m
    space = coeffs.slow_space
    d = space.dim

    def op(mat):
        return Operator(space, mat)

    # (C A^{-1} C^H)_{j j'} as operators on the slow space
    corr = [[np.zeros((d, d), dtype=complex) for _ in range(n)] for _ in range(n)]
    for j in range(n):
        for jp in range(n):
            acc = np.zeros((d, d), dtype=complex)
            for p in range(m):
                for q in range(m):
                    acc += a_inv[p, q] * (
                        coeffs.osc_couplings[j][p].mat
                        @ coeffs.osc_couplings[jp][q].mat.conj().T
                    )
            corr[j][jp] = acc

    s_hat = []
    for j in range(n):
        row = []
        for k in range(n):
            acc = coeffs.scattering[j][k].mat.copy()
            for jp in range(n):
                acc += corr[j][jp] @ coeffs.scattering[jp][k].mat
            row.append(op(acc))
        s_hat.append(tuple(row))

    l_hat = []
    for j in range(n):
        acc = coeffs.direct_couplings[j].mat.copy()
        for p in range(m):
            for q in range(m):
                acc -= a_inv[p, q] * (
                    coeffs.osc_couplings[j][p].mat @ coeffs.creation_coeffs[q].mat
                )
        l_hat.append(op(acc))

    k_hat = coeffs.constant_drift.mat.copy()
    for p in range(m):
        for q in range(m):
            k_hat -= a_inv[p, q] * (
                coeffs.annihilation_coeffs[p].mat @ coeffs.creation_coeffs[q].mat
            )

    h_mat = 1j * (k_hat + 0.5 * sum(l.mat.conj().T @ l.mat for l in l_hat))
    defect = float(np.max(np.abs(h_mat - h_mat.conj().T)))
    if defect > 1e-8:
        raise ValueError(
            f"recovered limit Hamiltonian is not Hermitian (defect {defect:.3e}); "
            "the supplied coefficients are inconsistent"
        )
    h = op(0.5 * (h_mat + h_mat.conj().T))
    return SLHTriple(tuple(s_hat), tuple(l_hat), h)


def _osc_operator(which: str, slot: int, m: int, truncation: int) -> Operator:
    """Annihilator / creator / identity on oscillator slot of an m-mode bank."""
    a = fock_annihilator(truncation)
    eye = Operator(HilbertSpace((truncation,)), np.eye(truncation, dtype=complex))
    ops = []
    for i in range(m):
        if i != slot:
            ops.append(eye)
        elif which == "a":
            ops.append(a)
        else:
            ops.append(a.dag())
    out = ops[0]
    for extra in ops[1:]:
        out = tensor(out, extra)
    return out


def build_full_family(coeffs: OscillatorModelCoeffs, fock_truncation: int) -> ScaledSLHFamily:
    """Assemble the scaled family on slow x Fock(truncation)^m.

    The Hamiltonian coefficients are recovered from the drift expansion
    via H = i (K + 1/2 sum_j L_j^H L_j) order by order in k; a
    non-Hermitian recovered coefficient means the supplied drift is
    inconsistent and raises.
    """
    truncation = int(fock_truncation)
    if truncation < 3:
        raise ValueError("fock truncation must be >= 3")
    n, m = coeffs.n, coeffs.m
    osc_dims = (truncation,) * m
    osc_eye = Operator(HilbertSpace(osc_dims), np.eye(truncation**m, dtype=complex))

    def lift_slow(x: Operator) -> Operator:
        return tensor(x, osc_eye)

    def mixed(x_slow: Operator, which: str, slot: int) -> Operator:
        return tensor(x_slow, _osc_operator(which, slot, m, truncation))

    space = HilbertSpace(coeffs.slow_space.factor_dims + osc_dims)
    dim = space.dim

    s = tuple(tuple(lift_slow(op) for op in row) for row in coeffs.scattering)
    l1 = []
    for j in range(n):
        acc = np.zeros((dim, dim), dtype=complex)
        for i in range(m):
            acc += mixed(coeffs.osc_couplings[j][i], "a", i).mat
        l1.append(Operator(space, acc))
    l0 = tuple(lift_slow(op) for op in coeffs.direct_couplings)

    # k^2 drift: sum_ij A_ij x a_i^H a_j
    k2 = np.zeros((dim, dim), dtype=complex)
    for i in range(m):
        adag_i = mixed(Operator(coeffs.slow_space, np.eye(coeffs.slow_space.dim)), "adag", i).mat
        for j in range(m):
            a_j = mixed(Operator(coeffs.slow_space, np.eye(coeffs.slow_space.dim)), "a", j).mat
            k2 += coeffs.osc_drift[i, j] * (adag_i @ a_j)
    # k^1 drift: sum_i Z_i x a_i^H + X_i x a_i
    k1 = np.zeros((dim, dim), dtype=complex)
    for i in range(m):
        k1 += mixed(coeffs.creation_coeffs[i], "adag", i).mat
        k1 += mixed(coeffs.annihilation_coeffs[i], "a", i).mat
    k0 = lift_slow(coeffs.constant_drift).mat

    def recover_h(k_mat, lsq, order):
        h = 1j * (k_mat + 0.5 * lsq)
        defect = float(np.max(np.abs(h - h.conj().T)))
        if defect > 1e-8:
            raise ValueError(
                f"recovered k^{order} Hamiltonian coefficient is not Hermitian "
                f"(defect {defect:.3e}); the supplied drift is inconsistent"
            )
        return Operator(space, 0.5 * (h + h.conj().T))

    lsq2 = sum(op.mat.conj().T @ op.mat for op in l1)
    lsq1 = sum(
        a.mat.conj().T @ b.mat + b.mat.conj().T @ a.mat for a, b in zip(l1, l0)
    )
    lsq0 = sum(op.mat.conj().T @ op.mat for op in l0)
    h2 = recover_h(k2, lsq2, 2)
    h1 = recover_h(k1, lsq1, 1)
    h0 = recover_h(k0, lsq0, 0)
    return ScaledSLHFamily(s, tuple(l1), l0, h2, h1, h0)


def oscillator_split(coeffs: OscillatorModelCoeffs, fock_truncation: int) -> ZenoSplit:
    """The slow x vacuum split of the assembled family's space."""
    truncation = int(fock_truncation)
    space = HilbertSpace(coeffs.slow_space.factor_dims + (truncation,) * coeffs.m)
    osc_dim = truncation**coeffs.m
    indices = [i * osc_dim for i in range(coeffs.slow_space.dim)]
    return ZenoSplit.from_indices(space, indices)


@dataclass(frozen=True)
class HurwitzReport:
    """Both stability margins of a square matrix.

    ``numerical_range_margin`` is the largest eigenvalue of the Hermitian
    part (dissipativity margin); ``eigenvalue_margin`` is the largest
    real part of the spectrum.  Dissipativity implies the eigenvalue
    criterion, not conversely.
    """

    numerical_range_margin: float
    eigenvalue_margin: float
    tol: float

    @property
    def dissipative(self) -> bool:
        return self.numerical_range_margin < -self.tol

    @property
    def eigenvalue_stable(self) -> bool:
        return self.eigenvalue_margin < -self.tol


def is_strictly_hurwitz(a, tol: float = 0.0) -> HurwitzReport:
    """Strict Hurwitz test in the numerical-range sense, both margins reported."""
    m = np.asarray(a, dtype=complex)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ValueError("need a square matrix")
    herm_part = 0.5 * (m + m.conj().T)
    nr_margin = float(np.max(np.linalg.eigvalsh(herm_part)))
    eig_margin = float(np.max(np.linalg.eigvals(m).real))
    return HurwitzReport(
        numerical_range_margin=nr_margin, eigenvalue_margin=eig_margin, tol=float(tol)
    )


class LinearMeanSystem:
    """First-moment dynamics blocks of a fast/slow oscillator assembly."""

    __slots__ = ("slow_block", "slow_fast", "fast_slow", "fast_block")

    def __init__(self, slow_block, slow_fast, fast_slow, fast_block):
        g1 = np.array(slow_block, dtype=complex)
        g2 = np.array(slow_fast, dtype=complex)
        g3 = np.array(fast_slow, dtype=complex)
        g4 = np.array(fast_block, dtype=complex)
        r = g1.shape[0]
        m = g4.shape[0]
        if g1.shape != (r, r) or g4.shape != (m, m):
            raise ValueError("diagonal blocks must be square")
        if g2.shape != (r, m) or g3.shape != (m, r):
            raise ValueError(
                f"off-diagonal blocks must be {r} x {m} and {m} x {r}, "
                f"got {g2.shape} and {g3.shape}"
            )
        for x in (g1, g2, g3, g4):
            x.setflags(write=False)
        object.__setattr__(self, "slow_block", g1)
        object.__setattr__(self, "slow_fast", g2)
        object.__setattr__(self, "fast_slow", g3)
        object.__setattr__(self, "fast_block", g4)

    def __setattr__(self, name, value):
        raise AttributeError("LinearMeanSystem is immutable")

    @property
    def r(self) -> int:
        return self.slow_block.shape[0]

    @property
    def m(self) -> int:
        return self.fast_block.shape[0]

    def generator(self, k: float) -> np.ndarray:
        kk = float(k) ** 2
        return np.block(
            [[self.slow_block, self.slow_fast], [kk * self.fast_slow, kk * self.fast_block]]
        )


def slow_schur(sys: LinearMeanSystem) -> np.ndarray:
    """Effective slow generator Gamma1 - Gamma2 Gamma4^{-1} Gamma3."""
    _check_invertible(sys.fast_block, "fast block")
    return sys.slow_block - sys.slow_fast @ np.linalg.solve(sys.fast_block, sys.fast_slow)


@dataclass(frozen=True)
class SpectrumSplit:
    """Eigenvalues of the cleared generator partitioned into groups.

    ``slow[i]`` is the eigenvalue matched to ``slow_reference[i]`` (the
    spectrum of the Schur complement); ``fast`` holds the remaining m
    eigenvalues.
    """

    slow: np.ndarray
    fast: np.ndarray
    slow_reference: np.ndarray


def full_spectrum(sys: LinearMeanSystem, k: float) -> SpectrumSplit:
    """Spectrum of [[G1, G2], [k^2 G3, k^2 G4]], matched against sigma(Gamma0)."""
    if k <= 0:
        raise ValueError("k must be positive")
    eigs = np.linalg.eigvals(sys.generator(k))
    ref = np.linalg.eigvals(slow_schur(sys))
    slow = np.empty(len(ref), dtype=complex)
    # globally greedy nearest matching; r and m are small
    pairs = sorted(
        ((abs(eigs[i] - ref[j]), i, j) for i in range(len(eigs)) for j in range(len(ref))),
        key=lambda t: t[0],
    )
    used_i: set = set()
    used_j: set = set()
    for _, i, j in pairs:
        if i in used_i or j in used_j:
            continue
        slow[j] = eigs[i]
        used_i.add(i)
        used_j.add(j)
        if len(used_j) == len(ref):
            break
    fast = np.array([eigs[i] for i in range(len(eigs)) if i not in used_i])
    return SpectrumSplit(slow=slow, fast=fast, slow_reference=ref)


@dataclass(frozen=True)
class StabilityRow:
    k: float
    max_real_part: float
    stable: bool


@dataclass(frozen=True)
class StabilityReport:
    """Per-k spectral abscissa plus the asymptotic-stability criterion.

    ``predicted_stable_tail`` applies the eigenvalue-sense criterion
    (fast block and Schur complement both Hurwitz); ``agrees`` compares
    it with the observed sign at the largest k in the grid.
    """

    rows: tuple
    fast_hurwitz: HurwitzReport
    schur_hurwitz: HurwitzReport
    predicted_stable_tail: bool
    observed_stable_at_kmax: bool

    @property
    def agrees(self) -> bool:
        return self.predicted_stable_tail == self.observed_stable_at_kmax


def stability_threshold(sys: LinearMeanSystem, k_grid) -> StabilityReport:
    """Sweep the spectral abscissa over a k grid and cross-check the criterion."""
    _check_invertible(sys.fast_block, "fast block")
    gamma0 = slow_schur(sys)
    rows = []
    for k in sorted(float(k) for k in k_grid):
        max_re = float(np.max(np.linalg.eigvals(sys.generator(k)).real))
        rows.append(StabilityRow(k=k, max_real_part=max_re, stable=max_re < 0.0))
    fast_rep = is_strictly_hurwitz(sys.fast_block)
    schur_rep = is_strictly_hurwitz(gamma0)
    predicted = fast_rep.eigenvalue_stable and schur_rep.eigenvalue_stable
    observed = rows[-1].stable if rows else predicted
    return StabilityReport(
        rows=tuple(rows),
        fast_hurwitz=fast_rep,
        schur_hurwitz=schur_rep,
        predicted_stable_tail=predicted,
        observed_stable_at_kmax=observed,
    )
