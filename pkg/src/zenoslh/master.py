"""Deterministic state evolution: dissipator, master equation, diagnostics.

The predual generator of an SLH model acts on density matrices as

    D rho = sum_i ( L_i rho L_i^H - 1/2 rho L_i^H L_i - 1/2 L_i^H L_i rho )
            + i [rho, H],

and the master equation is d rho / dt = D rho.  Integration is classical
fixed-step 4th order (the one-step map is the degree-4 Taylor polynomial
of the matrix exponential of the vectorized generator); no adaptive
stepping, so order-of-accuracy tests and diagnostics are reproducible.
States are re-Hermitized each step; the trace is never renormalized,
trace drift is a monitored diagnostic with a hard abort threshold.

The convergence harness compares the full model at increasing coupling
strength k against the limit model on the Zeno subspace: the full state
is compressed with the Zeno isometry, renormalized by its trace, and the
trace distance to the limit-model state at the same time is reported.
The full-model step is scaled by 1/k^2 because the fast rates grow as
k^2.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .elimination import ScaledSLHFamily, instantiate, zeno_eliminate
from .operators import HilbertSpace, Operator, ZenoSplit
from .slh import SLHTriple

__all__ = [
    "DensityMatrix",
    "EvolutionResult",
    "ConvergencePoint",
    "StepSizeError",
    "maximally_mixed",
    "basis_state_density",
    "pure_state_density",
    "dissipator",
    "liouvillian_matrix",
    "evolve",
    "evolve_piecewise",
    "ehrenfest_residual",
    "convergence_harness",
    "trace_distance",
    "TRACE_ABORT_TOL",
]

TRACE_ABORT_TOL = 1e-6


class StepSizeError(RuntimeError):
    """Trace drift exceeded the abort threshold; reduce the step size."""


class DensityMatrix:
    """Hermitian, unit-trace, positive-semidefinite state matrix.

    Validation tolerances are per-instance so integrators can store
    states carrying their documented drift; the defaults are the strict
    contract (Hermitian and unit trace to 1e-10, smallest eigenvalue
    above -1e-8).  Pass ``min_eig_tol=None`` to skip the eigenvalue
    check (used for conditioned states, which can transiently leave the
    cone at finite step size).
    """

    __slots__ = ("space", "mat")

    def __init__(
        self,
        space: HilbertSpace,
        mat,
        *,
        herm_tol: float = 1e-10,
        trace_tol: float = 1e-10,
        min_eig_tol: float | None = 1e-8,
    ):
        m = np.array(mat, dtype=complex)
        if m.ndim != 2 or m.shape[0] != m.shape[1] or m.shape[0] != space.dim:
            raise ValueError(f"density matrix must be {space.dim} x {space.dim}")
        herm = float(np.max(np.abs(m - m.conj().T)))
        if herm > herm_tol:
            raise ValueError(f"density matrix is not Hermitian (defect {herm:.3e})")
        tr = complex(np.trace(m))
        if abs(tr - 1.0) > trace_tol:
            raise ValueError(f"density matrix trace {tr} is not 1")
        if min_eig_tol is not None:
            w = np.linalg.eigvalsh(0.5 * (m + m.conj().T))
            if w[0] < -min_eig_tol:
                raise ValueError(f"density matrix has eigenvalue {w[0]:.3e} < -{min_eig_tol:.1e}")
        m.setflags(write=False)
        object.__setattr__(self, "space", space)
        object.__setattr__(self, "mat", m)

    def __setattr__(self, name, value):
        raise AttributeError("DensityMatrix is immutable")

    @property
    def dim(self) -> int:
        return self.mat.shape[0]

    def expectation(self, x: Operator) -> complex:
        return complex(np.trace(self.mat @ x.mat))

    def purity(self) -> float:
        return float(np.real(np.trace(self.mat @ self.mat)))

    def __repr__(self):
        return f"DensityMatrix(dim={self.dim})"


def maximally_mixed(space: HilbertSpace) -> DensityMatrix:
    return DensityMatrix(space, np.eye(space.dim, dtype=complex) / space.dim)


def basis_state_density(space: HilbertSpace, index: int) -> DensityMatrix:
    if not (0 <= index < space.dim):
        raise ValueError(f"basis index {index} out of range for dimension {space.dim}")
    m = np.zeros((space.dim, space.dim), dtype=complex)
    m[index, index] = 1.0
    return DensityMatrix(space, m)


def pure_state_density(space: HilbertSpace, psi) -> DensityMatrix:
    v = np.asarray(psi, dtype=complex).reshape(-1)
    if v.shape[0] != space.dim:
        raise ValueError("state vector dimension mismatch")
    n = np.vdot(v, v).real
    if n <= 0:
        raise ValueError("state vector has zero norm")
    v = v / np.sqrt(n)
    return DensityMatrix(space, np.outer(v, v.conj()))


def _dissipator_mat(ls, h, rho):
    out = 1j * (rho @ h - h @ rho)
    for lm in ls:
        ld = lm.conj().T
        ldl = ld @ lm
        out += lm @ rho @ ld - 0.5 * (rho @ ldl + ldl @ rho)
    return out


def dissipator(g: SLHTriple, rho: DensityMatrix) -> Operator:
    """Predual generator applied to a state; the result is traceless."""
    if rho.space != g.space:
        raise ValueError("state lives on a different space than the model")
    out = _dissipator_mat([op.mat for op in g.L], g.H.mat, rho.mat)
    return Operator(g.space, out)


def liouvillian_matrix(g: SLHTriple) -> np.ndarray:
    """Dense matrix of the predual generator in column-stacking convention.

    vec(rho) is column-major, so vec(A rho B) = (B^T kron A) vec(rho).
    """
    d = g.dim
    eye = np.eye(d, dtype=complex)
    h = g.H.mat
    out = 1j * (np.kron(h.T, eye) - np.kron(eye, h))
    for op in g.L:
        lm = op.mat
        ldl = lm.conj().T @ lm
        out += np.kron(lm.conj(), lm)
        out -= 0.5 * np.kron(ldl.T, eye)
        out -= 0.5 * np.kron(eye, ldl)
    return out


@dataclass(frozen=True)
class EvolutionResult:
    """Time grid, states, and per-saved-step integration diagnostics."""

    times: np.ndarray
    states: list
    trace_drift: np.ndarray
    hermiticity_drift: np.ndarray

    def expectations(self, x: Operator) -> np.ndarray:
        return np.array([s.expectation(x) for s in self.states])

    @property
    def final(self) -> DensityMatrix:
        return self.states[-1]


def _rk4_step_matrix(liouv: np.ndarray, dt: float) -> np.ndarray:
    """One-step map of the classical 4th-order scheme for a linear ODE."""
    z = liouv * dt
    n = z.shape[0]
    out = np.eye(n, dtype=complex) + z
    acc = z
    for p in (2.0, 3.0, 4.0):
        acc = acc @ z / p
        out += acc
    return out


def evolve(
    g: SLHTriple,
    rho0: DensityMatrix,
    t_end: float,
    dt: float,
    *,
    save_every: int = 1,
) -> EvolutionResult:
    """Integrate d rho / dt = D rho with fixed-step 4th-order stepping.

    The number of steps is round(t_end / dt) and the step is adjusted to
    hit t_end exactly.  States are re-Hermitized each step; trace drift
    beyond ``TRACE_ABORT_TOL`` raises :class:`StepSizeError`.  Saved
    states are validated with the trace tolerance relaxed to the abort
    threshold, since the drift is a recorded diagnostic.
    """
    if dt <= 0:
        raise ValueError("dt must be positive")
    if t_end < 0:
        raise ValueError("t_end must be nonnegative")
    if rho0.space != g.space:
        raise ValueError("initial state lives on a different space than the model")
    n_steps = max(0, int(round(t_end / dt)))
    if t_end > 0 and n_steps == 0:
        n_steps = 1
    dt_eff = t_end / n_steps if n_steps else dt
    save_every = max(1, int(save_every))

    d = g.dim
    phi = _rk4_step_matrix(liouvillian_matrix(g), dt_eff)
    m = np.array(rho0.mat)

    times = [0.0]
    states = [rho0]
    tdrift = [abs(np.trace(m).real - 1.0)]
    hdrift = [0.0]

    for step in range(1, n_steps + 1):
        v = phi @ m.reshape(-1, order="F")
        m = v.reshape((d, d), order="F")
        h_defect = float(np.max(np.abs(m - m.conj().T)))
        m = 0.5 * (m + m.conj().T)
        drift = abs(float(np.trace(m).real) - 1.0)
        if drift > TRACE_ABORT_TOL:
            raise StepSizeError(
                f"trace drift {drift:.3e} at t={step * dt_eff:.6g} exceeds "
                f"{TRACE_ABORT_TOL:.1e}; reduce dt"
            )
        if step % save_every == 0 or step == n_steps:
            times.append(step * dt_eff)
            states.append(
                DensityMatrix(g.space, m, trace_tol=TRACE_ABORT_TOL, min_eig_tol=None)
            )
            tdrift.append(drift)
            hdrift.append(h_defect)

    return EvolutionResult(
        times=np.array(times),
        states=states,
        trace_drift=np.array(tdrift),
        hermiticity_drift=np.array(hdrift),
    )


def evolve_piecewise(segments, rho0: DensityMatrix, dt: float) -> EvolutionResult:
    """Evolve under a piecewise-constant schedule of models.

    ``segments`` is a sequence of (SLHTriple, duration) pairs; the
    generator is re-assembled at segment boundaries.  Covers
    piecewise-constant drives, for which the triple is re-built per
    segment.
    """
    times = [np.array([0.0])]
    states = None
    tdrift = [np.array([0.0])]
    hdrift = [np.array([0.0])]
    rho = rho0
    t0 = 0.0
    for g, duration in segments:
        res = evolve(g, rho, duration, dt)
        if states is None:
            states = list(res.states)
            times = [res.times]
            tdrift = [res.trace_drift]
            hdrift = [res.hermiticity_drift]
        else:
            states.extend(res.states[1:])
            times.append(res.times[1:] + t0)
            tdrift.append(res.trace_drift[1:])
            hdrift.append(res.hermiticity_drift[1:])
        rho = res.final
        t0 += duration
    if states is None:
        return EvolutionResult(
            times=np.array([0.0]),
            states=[rho0],
            trace_drift=np.array([0.0]),
            hermiticity_drift=np.array([0.0]),
        )
    return EvolutionResult(
        times=np.concatenate(times),
        states=states,
        trace_drift=np.concatenate(tdrift),
        hermiticity_drift=np.concatenate(hdrift),
    )


def ehrenfest_residual(
    g: SLHTriple, rho0: DensityMatrix, x: Operator, t_end: float, dt: float
) -> float:
    """Max deviation between d/dt tr(rho X) (central differences) and
    tr(rho LX) along the trajectory."""
    from .slh import lindbladian

    res = evolve(g, rho0, t_end, dt)
    lx = lindbladian(g, x)
    f = res.expectations(x)
    rhs = res.expectations(lx)
    if len(f) < 3:
        return 0.0
    h = res.times[1] - res.times[0]
    lhs = (f[2:] - f[:-2]) / (2.0 * h)
    return float(np.max(np.abs(lhs - rhs[1:-1])))


def trace_distance(a, b) -> float:
    """Half the sum of singular values of the difference."""
    am = a.mat if hasattr(a, "mat") else np.asarray(a)
    bm = b.mat if hasattr(b, "mat") else np.asarray(b)
    return 0.5 * float(np.sum(np.linalg.svd(am - bm, compute_uv=False)))


@dataclass(frozen=True)
class ConvergencePoint:
    k: float
    distance: float
    leaked_trace: float
    dt_full: float


def convergence_harness(
    family: ScaledSLHFamily,
    split: ZenoSplit,
    rho0_z: DensityMatrix,
    ks,
    t_end: float,
    dt: float,
) -> list[ConvergencePoint]:
    """Distance between the compressed full-model state and the limit state.

    For each k the full model is integrated with step dt / max(1, k^2)
    (fast rates grow as k^2), the final state is compressed to the Zeno
    subspace, renormalized by its trace, and compared in trace distance
    to the limit-model state at t_end.  The k values are independent pure
    computations and may be evaluated concurrently by callers.
    """
    if rho0_z.space != split.zeno_space:
        raise ValueError("initial state must live on the Zeno subspace")
    limit = zeno_eliminate(family, split)
    zeno_final = evolve(
        limit.zeno_triple, rho0_z, t_end, dt, save_every=10**9
    ).final

    vz = split.v_z.cols
    points = []
    for k in ks:
        k = float(k)
        g_full = instantiate(family, k)
        rho0_full = DensityMatrix(
            family.space, vz @ rho0_z.mat @ vz.conj().T, min_eig_tol=None
        )
        dt_k = dt / max(1.0, k * k)
        final = evolve(g_full, rho0_full, t_end, dt_k, save_every=10**9).final
        comp = vz.conj().T @ final.mat @ vz
        tr = float(np.trace(comp).real)
        leaked = 1.0 - tr
        comp = comp / tr
        points.append(
            ConvergencePoint(
                k=k,
                distance=trace_distance(comp, zeno_final),
                leaked_trace=leaked,
                dt_full=dt_k,
            )
        )
    return points
