"""Dissipative circuit emulation: unitary Trotter steps + Lindblad windows.

Noise acts between the Dicke-Ising gates for the physical duration of the
gates it models: after each of the L unitary steps the density matrix
evolves for tau_rabi under

    drho/dt = N kappa (a rho a' - {a'a, rho}/2)
              + Gamma_phi/2 sum_j (sz_j rho sz_j - rho)
              + Gamma_1 sum_j (s-_j rho s+_j - {s+_j s-_j, rho}/2),

with no Hamiltonian term (the two-clock prescription separates unitary
simulation time from physical gate time).  The factor N on kappa accounts
for the resonator idling through all N sequential Rabi gates of one step.
Rates are physical angular frequencies; only the dimensionless products
rate * tau_rabi enter the dynamics.  s+ s- is the excited-state projector
|1><1|_j, so Gamma_1 relaxes qubits toward their ground state |0>.

CNOT and SWAP layers are treated as instantaneous and noiseless.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .circuits import _GateCache, _step_records, free_frame_phases
from .model import ModelParams, qubit_bit_arrays


@dataclass(frozen=True)
class NoiseParams:
    """Decay rates (angular frequency, rad/s) and the Rabi-gate duration (s).

    Use :meth:`from_hz` when quoting plain frequencies: kappa = 2 pi f.
    """

    kappa: float = 2 * np.pi * 1e3
    gamma_phi: float = 2 * np.pi * 5e3
    gamma_1: float = 2 * np.pi * 5e3
    tau_rabi: float = 100e-9

    def __post_init__(self):
        if min(self.kappa, self.gamma_phi, self.gamma_1) < 0:
            raise ValueError("decay rates must be >= 0")
        if self.tau_rabi <= 0:
            raise ValueError("tau_rabi must be positive")

    @classmethod
    def from_hz(cls, kappa_hz: float = 1e3, gamma_phi_hz: float = 5e3,
                gamma_1_hz: float = 5e3, tau_rabi: float = 100e-9) -> "NoiseParams":
        two_pi = 2 * np.pi
        return cls(kappa=two_pi * kappa_hz, gamma_phi=two_pi * gamma_phi_hz,
                   gamma_1=two_pi * gamma_1_hz, tau_rabi=tau_rabi)

    @property
    def max_rate(self) -> float:
        return max(self.kappa, self.gamma_phi, self.gamma_1)


class _DissipatorOps:
    """Precomputed index machinery for the three channels.

    All qubit operators are diagonal or single-bit-flip maps in the
    computational basis, so the dissipator is evaluated with elementwise
    array work instead of generic sparse products.
    """

    def __init__(self, params: ModelParams):
        self.params = params
        n_ph, nq = params.n_photon_levels, params.n_qubit_states
        self.shape = (n_ph, nq, n_ph, nq)
        self.sqrt_n = np.sqrt(np.arange(1, n_ph))
        self.number = np.arange(n_ph)
        bits = qubit_bit_arrays(params)                        # (N, nq)
        self.z_signs = 1 - 2 * bits                            # sz diagonals
        self.excited = bits.astype(float)                      # |1><1|_j diag
        self.flip_down = [np.arange(nq) - (1 << (params.N - 1 - j))
                          for j in range(params.N)]            # q with bit j=1 -> bit j=0
        self.masks_excited = [bits[j] == 1 for j in range(params.N)]


def _lindblad_rhs_fast(rho4, ops: _DissipatorOps, noise: NoiseParams,
                       n_qubits: int) -> np.ndarray:
    """RHS on rho reshaped to (n_ph, nq, n_ph, nq)."""
    p = ops.params
    out = np.zeros_like(rho4)

    if noise.kappa > 0:
        rate = n_qubits * noise.kappa
        # a rho a': shift photon indices down on both sides
        out[:-1, :, :-1, :] += rate * (ops.sqrt_n[:, None, None, None]
                                       * rho4[1:, :, 1:, :]
                                       * ops.sqrt_n[None, None, :, None])
        anti = 0.5 * (ops.number[:, None, None, None] + ops.number[None, None, :, None])
        out -= rate * anti * rho4

    if noise.gamma_phi > 0:
        for j in range(p.N):
            z = ops.z_signs[j]
            zz = z[None, :, None, None] * z[None, None, None, :]
            out += (noise.gamma_phi / 2.0) * (zz - 1.0) * rho4

    if noise.gamma_1 > 0:
        ph = np.arange(rho4.shape[0])
        for j in range(p.N):
            mask = ops.masks_excited[j]
            src = np.where(mask)[0]
            tgt = ops.flip_down[j][mask]
            # s- rho s+ : move the excited-row/col population down one bit
            out[np.ix_(ph, tgt, ph, tgt)] += noise.gamma_1 * rho4[np.ix_(ph, src, ph, src)]
            e = ops.excited[j]
            anti = 0.5 * (e[None, :, None, None] + e[None, None, None, :])
            out -= noise.gamma_1 * anti * rho4

    return out


def lindblad_rhs(rho: np.ndarray, params: ModelParams,
                 noise: NoiseParams) -> np.ndarray:
    """d(rho)/dt of the dissipative master equation (no Hamiltonian term)."""
    n_ph, nq = params.n_photon_levels, params.n_qubit_states
    rho = np.asarray(rho, dtype=complex)
    if rho.shape != (n_ph * nq, n_ph * nq):
        raise ValueError("rho has wrong dimension for these params")
    ops = _DissipatorOps(params)
    rhs = _lindblad_rhs_fast(rho.reshape(ops.shape), ops, noise, params.N)
    return rhs.reshape(rho.shape)


class PositivityError(RuntimeError):
    """Density matrix left the positive cone beyond tolerance."""


def lindblad_window(rho: np.ndarray, duration: float, noise: NoiseParams,
                    params: ModelParams, dt_step: float | None = None, *,
                    min_eig_tol: float = -1e-7,
                    _ops: _DissipatorOps | None = None) -> np.ndarray:
    """Integrate the master equation for ``duration`` with fixed-step RK4.

    ``dt_step`` defaults to the largest step with max_rate * dt <= 0.02
    (the RK4 positivity defect scales like (rate * dt)^5).  Hermiticity is
    enforced by symmetrization each step; if the minimum eigenvalue drops
    below ``min_eig_tol`` the step size is halved and the window
    re-integrated, up to four times, before :class:`PositivityError`.
    """
    rho = np.array(rho, dtype=complex)
    if duration == 0 or (noise.kappa == 0 and noise.gamma_phi == 0
                         and noise.gamma_1 == 0):
        return rho
    ops = _ops if _ops is not None else _DissipatorOps(params)

    if dt_step is None:
        n_steps = max(1, int(np.ceil(duration * max(noise.max_rate, 1e-300) / 0.02)))
    else:
        n_steps = max(1, int(np.ceil(duration / dt_step)))
    h = duration / n_steps

    for attempt in range(5):
        out = rho.reshape(ops.shape).copy()
        for _ in range(n_steps):
            k1 = _lindblad_rhs_fast(out, ops, noise, params.N)
            k2 = _lindblad_rhs_fast(out + 0.5 * h * k1, ops, noise, params.N)
            k3 = _lindblad_rhs_fast(out + 0.5 * h * k2, ops, noise, params.N)
            k4 = _lindblad_rhs_fast(out + h * k3, ops, noise, params.N)
            out = out + (h / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
            flat = out.reshape(rho.shape)
            flat = 0.5 * (flat + flat.conj().T)
            out = flat.reshape(ops.shape)
        flat = out.reshape(rho.shape)
        min_eig = float(np.linalg.eigvalsh(flat).min())
        if min_eig >= min_eig_tol:
            return flat
        n_steps *= 2
        h = duration / n_steps
    raise PositivityError(f"minimum eigenvalue {min_eig:.3e} below {min_eig_tol:.1e} "
                          f"after step halving")


def noisy_trotter(rho0: np.ndarray, L: int, t_f: float, arch: str,
                  noise: NoiseParams, params: ModelParams) -> np.ndarray:
    """Alternate S_DI conjugation and Lindblad windows; return lab-frame rho.

    Each Trotter step applies rho -> S_DI rho S_DI' gate by gate, then a
    dissipative window of physical length tau_rabi.  The final state is
    rotated to the lab frame with exp(-i H0 t_f), as in the unitary engine.
    """
    rho = np.array(rho0, dtype=complex)
    dt = t_f / L
    cache = _GateCache(params)
    ops = _DissipatorOps(params)
    for k in range(1, L + 1):
        t_k = (k - 1) * dt
        for rec in _step_records(t_k, dt, arch, params, k, decompose_zz=False):
            u = cache(rec)
            rho = u @ rho @ u.conj().T
        rho = lindblad_window(rho, noise.tau_rabi, noise, params, _ops=ops)
    phases = free_frame_phases(t_f, params)
    return (phases[:, None] * rho) * phases.conj()[None, :]
