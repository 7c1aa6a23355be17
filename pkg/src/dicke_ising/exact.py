"""Exact diagonalization and quench dynamics on the truncated composite space.

Ground states come from an iterative (Lanczos/ARPACK) eigensolver with a
fixed all-ones start vector; real-time evolution uses an adaptive
Krylov-subspace approximation of exp(-iHt) with a per-substep error
estimate.  Reductions, parity projections and Uhlmann fidelity operate on
plain numpy arrays (states are complex vectors, density matrices complex
square arrays).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla
from scipy.linalg import eigh, eigh_tridiagonal

from .model import ModelParams, parity_diagonal


class ConvergenceError(RuntimeError):
    """An iterative routine failed to reach its accuracy contract."""


# ---------------------------------------------------------------------------
# Spectrum
# ---------------------------------------------------------------------------

@dataclass
class SpectrumSlice:
    """Lowest eigenpairs of a Hermitian operator, energies ascending."""

    energies: np.ndarray
    states: np.ndarray          # column m is |Psi_m>
    m_max: int
    residuals: np.ndarray = field(default=None, repr=False)


def _orthonormalize_degenerate(energies, states, tol=1e-9):
    """QR-orthonormalize within near-degenerate clusters (deterministic)."""
    start = 0
    for stop in range(1, len(energies) + 1):
        boundary = stop == len(energies) or energies[stop] - energies[stop - 1] > tol
        if boundary:
            if stop - start > 1:
                q, _ = np.linalg.qr(states[:, start:stop])
                states[:, start:stop] = q
            start = stop
    return states


def ground_state(h: sp.spmatrix, m_max: int = 1, *, tol: float = 0.0,
                 residual_tol: float = 1e-8, maxiter: int | None = None) -> SpectrumSlice:
    """Lowest ``m_max`` eigenpairs of a Hermitian sparse operator.

    Uses ARPACK (implicitly restarted Lanczos) with the normalized all-ones
    start vector, falling back to dense diagonalization when ``m_max`` is
    within 2 of the full dimension.  Raises :class:`ConvergenceError` with a
    residual report if the iteration fails or the residual contract
    (|H psi - E psi| <= residual_tol) is not met.
    """
    dim = h.shape[0]
    if m_max < 1 or m_max > dim:
        raise ValueError("m_max must lie in [1, dim]")

    if m_max >= dim - 1:
        energies, states = eigh(h.toarray() if sp.issparse(h) else np.asarray(h))
        energies, states = energies[:m_max], states[:, :m_max]
    else:
        v0 = np.ones(dim) / np.sqrt(dim)
        try:
            energies, states = spla.eigsh(h, k=m_max, which="SA", v0=v0,
                                          tol=tol, maxiter=maxiter)
        except spla.ArpackNoConvergence as exc:
            raise ConvergenceError(
                f"eigsh did not converge: {len(exc.eigenvalues)}/{m_max} pairs; "
                f"increase maxiter or loosen tol"
            ) from exc
        order = np.argsort(energies)
        energies, states = energies[order], states[:, order]

    states = _orthonormalize_degenerate(energies, states.astype(complex))
    residuals = np.array([
        np.linalg.norm(h @ states[:, m] - energies[m] * states[:, m])
        for m in range(m_max)
    ])
    if residuals.max() > residual_tol:
        raise ConvergenceError(
            f"eigenpair residuals up to {residuals.max():.3e} exceed {residual_tol:.1e}"
        )
    return SpectrumSlice(energies=energies, states=states, m_max=m_max,
                         residuals=residuals)


def overlap_coefficients(spectrum: SpectrumSlice, psi0: np.ndarray) -> np.ndarray:
    """c_m = <Psi_m | psi0> for every state in the slice."""
    return spectrum.states.conj().T @ psi0


# ---------------------------------------------------------------------------
# Krylov propagator
# ---------------------------------------------------------------------------

def _lanczos_decomposition(h, psi, m):
    """m-step Lanczos: returns basis V (dim x k), diagonals, and beta_k."""
    dim = psi.shape[0]
    m = min(m, dim)
    v = np.zeros((dim, m), dtype=complex)
    alphas = np.zeros(m)
    betas = np.zeros(m)
    v[:, 0] = psi
    w = h @ v[:, 0]
    alphas[0] = np.real(np.vdot(v[:, 0], w))
    w = w - alphas[0] * v[:, 0]
    k = 1
    for k in range(1, m + 1):
        beta = np.linalg.norm(w)
        if k == m or beta < 1e-14:
            betas[k - 1] = beta
            break
        betas[k - 1] = beta
        v[:, k] = w / beta
        w = h @ v[:, k]
        alphas[k] = np.real(np.vdot(v[:, k], w))
        w = w - alphas[k] * v[:, k] - beta * v[:, k - 1]
        # full reorthogonalization keeps the basis usable at large substeps
        w -= v[:, : k + 1] @ (v[:, : k + 1].conj().T @ w)
    return v[:, :k], alphas[:k], betas[:k]


def _krylov_substep(h, psi, dt, m):
    """One Krylov approximation of exp(-i dt H) psi with an error estimate."""
    norm = np.linalg.norm(psi)
    v, alphas, betas = _lanczos_decomposition(h, psi / norm, m)
    k = len(alphas)
    if k == 1:
        phase = np.exp(-1j * dt * alphas[0])
        return norm * phase * v[:, 0], 0.0
    evals, evecs = eigh_tridiagonal(alphas, betas[: k - 1])
    small = evecs @ (np.exp(-1j * dt * evals) * evecs[0, :].conj()).T
    # classic a-posteriori estimate: weight leaking out of the subspace
    err = abs(betas[k - 1]) * abs(small[-1])
    return norm * (v @ small), norm * err


def evolve(h: sp.spmatrix, psi0: np.ndarray, times, *, tol: float = 1e-10,
           krylov_dim: int = 30, max_substeps: int = 200_000) -> np.ndarray:
    """Sampled trajectory exp(-i H t) psi0 at the requested times.

    The propagator subdivides each sampling interval adaptively so that the
    estimated local error stays below ``tol`` per unit time; it raises
    :class:`ConvergenceError` if that would require more than
    ``max_substeps`` substeps.  Returns an array of shape (len(times), dim).
    """
    times = np.atleast_1d(np.asarray(times, dtype=float))
    if np.any(np.diff(times) < 0):
        raise ValueError("sample times must be non-decreasing")
    psi = np.array(psi0, dtype=complex)
    out = np.empty((len(times), psi.shape[0]), dtype=complex)
    t = 0.0
    nsub = 0
    for i, t_target in enumerate(times):
        while t_target - t > 1e-14 * max(1.0, abs(t_target)):
            dt = t_target - t
            while True:
                nsub += 1
                if nsub > max_substeps:
                    raise ConvergenceError(
                        f"evolve exceeded {max_substeps} substeps at t={t:.4g} "
                        f"(tol={tol:.1e}, last dt={dt:.3e})"
                    )
                candidate, err = _krylov_substep(h, psi, dt, krylov_dim)
                if err <= tol * max(dt, 1e-16):
                    psi = candidate
                    t += dt
                    break
                dt /= 2.0
        out[i] = psi
    return out


# ---------------------------------------------------------------------------
# Reductions and fidelity
# ---------------------------------------------------------------------------

def reduce_photon_density(state: np.ndarray, params: ModelParams,
                          projector=None) -> np.ndarray:
    """Photon reduced density matrix tr_sigma[rho O].

    ``state`` is a composite pure-state vector or density matrix; ``O`` is
    the identity (mixed reduction) or a qubit-only operator such as a parity
    projector (either the composite embedding or the bare 2^N block).  The
    trace of the result equals <O>; no renormalisation is applied.
    """
    np_ph, nq = params.n_photon_levels, params.n_qubit_states
    proj = None
    if projector is not None:
        proj = projector.toarray() if sp.issparse(projector) else np.asarray(projector)
        if proj.shape[0] == np_ph * nq:
            # composite embedding of a qubit-only operator: take one block
            proj = proj[:nq, :nq]
        elif proj.shape[0] != nq:
            raise ValueError("projector must act on the qubit factor")

    state = np.asarray(state)
    if state.ndim == 1:
        m = state.reshape(np_ph, nq)
        if proj is None:
            return m @ m.conj().T
        return m @ proj.T @ m.conj().T
    if state.shape[0] != np_ph * nq or state.shape[0] != state.shape[1]:
        raise ValueError("density matrix has wrong dimension")
    rho = state.reshape(np_ph, nq, np_ph, nq)
    if proj is None:
        return np.einsum("nqmq->nm", rho)
    return np.einsum("nqmr,rq->nm", rho, proj)


def parity_expectations(psi: np.ndarray, params: ModelParams) -> tuple[float, float]:
    """(<P_+>, <P_->) of a composite pure state."""
    diag = parity_diagonal("+", params)
    prob = np.abs(psi.reshape(params.n_photon_levels, params.n_qubit_states)) ** 2
    p_plus = float((prob * diag).sum())
    return p_plus, float(prob.sum() - p_plus)


def photon_number_expectation(psi: np.ndarray, params: ModelParams) -> float:
    """<a'a> of a composite pure state."""
    prob = np.abs(psi.reshape(params.n_photon_levels, params.n_qubit_states)) ** 2
    return float(prob.sum(axis=1) @ np.arange(params.n_photon_levels))


def _psd_sqrt(rho: np.ndarray, neg_tol: float = 1e-6) -> np.ndarray:
    evals, evecs = eigh(rho)
    if evals.min() < -neg_tol:
        raise ValueError(f"density matrix has eigenvalue {evals.min():.3e} < -{neg_tol:.1e}")
    evals = np.clip(evals, 0.0, None)
    return (evecs * np.sqrt(evals)) @ evecs.conj().T


def fidelity(rho1: np.ndarray, rho2: np.ndarray, *, neg_tol: float = 1e-6) -> float:
    """Uhlmann fidelity (tr sqrt(sqrt(rho1) rho2 sqrt(rho1)))^2.

    Traces are renormalised to 1 before comparison, matching how projected
    (sub-unit-trace) reductions are meant to be compared.
    """
    rho1 = np.asarray(rho1) / np.trace(rho1).real
    rho2 = np.asarray(rho2) / np.trace(rho2).real
    s1 = _psd_sqrt(rho1, neg_tol)
    inner = s1 @ rho2 @ s1
    evals = np.linalg.eigvalsh(0.5 * (inner + inner.conj().T))
    # sqrt amplifies eigenvalue noise of rank-deficient inputs; zero out
    # anything at relative machine-noise level before taking the root
    floor = 1e-13 * max(evals.max(), 1e-300)
    evals = np.where(evals > floor, evals, 0.0)
    f = float(np.sqrt(evals).sum() ** 2)
    return min(f, 1.0)


# ---------------------------------------------------------------------------
# Quench traces
# ---------------------------------------------------------------------------

@dataclass
class QuenchTrace:
    """Observables sampled along an exact quench, plus the x-marginal."""

    times: np.ndarray
    photon_number: np.ndarray
    parity_plus: np.ndarray
    parity_minus: np.ndarray
    fidelity: np.ndarray
    x_grid: np.ndarray
    marginal_w: np.ndarray      # shape (len(times), len(x_grid))
    states: np.ndarray = field(default=None, repr=False)


def quench_trace(params: ModelParams, h: sp.spmatrix, *, t_final: float,
                 n_samples: int = 200, tol: float = 1e-10,
                 x_grid: np.ndarray | None = None,
                 rho_reference: np.ndarray | None = None,
                 keep_states: bool = False) -> QuenchTrace:
    """Quench |FM> under ``h`` and record the standard observable set.

    ``rho_reference`` (photon density matrix, default: mixed reduction of
    the ground state of ``h``) is the fidelity target.
    """
    from .model import ferromagnetic_state
    from .wigner import marginal_w

    if x_grid is None:
        x_grid = np.linspace(-6.0, 6.0, 121)
    if rho_reference is None:
        gs = ground_state(h, 1)
        rho_reference = reduce_photon_density(gs.states[:, 0], params)

    times = np.linspace(0.0, t_final, n_samples)
    psi0 = ferromagnetic_state(params)
    traj = evolve(h, psi0, times, tol=tol)

    nt = len(times)
    n_ph = np.empty(nt)
    p_plus = np.empty(nt)
    p_minus = np.empty(nt)
    fid = np.empty(nt)
    marg = np.empty((nt, len(x_grid)))
    for i in range(nt):
        psi = traj[i]
        n_ph[i] = photon_number_expectation(psi, params)
        p_plus[i], p_minus[i] = parity_expectations(psi, params)
        rho_ph = reduce_photon_density(psi, params)
        fid[i] = fidelity(rho_ph, rho_reference)
        marg[i] = marginal_w(rho_ph, x_grid)

    return QuenchTrace(times=times, photon_number=n_ph, parity_plus=p_plus,
                       parity_minus=p_minus, fidelity=fid, x_grid=x_grid,
                       marginal_w=marg, states=traj if keep_states else None)
