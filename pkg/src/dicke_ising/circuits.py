"""Digital-analog gate set and Trotter schedule for the Dicke-Ising quench.

One Trotter step of length dt simulates exp(-i H_DI dt) in the
photon-coupled interaction picture with respect to
H0 = omega0 (a'a - sum_j sz_j / 2):

    S_DI(t_k, dt) = [prod_j ZZ_{eta,j}] [prod_j Z_{beta,j}] S_D(t_k, dt)

with eta = J dt, beta = omegaz dt, and the Dicke gate S_D built from one
Rabi gate per qubit,

    S_R = S_JC(theta/2) X_pi(phi_+) S_JC(theta) X_pi(phi_-) S_JC(theta/2),
    theta = g dt / sqrt(N),  phi_-+ = omega0 (t_k + dt/4), omega0 (t_k + 3dt/4),

where S_JC(theta) = exp(-i theta (a's- + a s+)) rotates each
{|n+1, 0>, |n, 1>} doublet by theta sqrt(n+1) and
X_pi(phi) = exp(-i phi sz) sx.

Architectures: ``star`` couples every qubit to the resonator and applies
the Rabi gates directly (qubit 0 first); ``chain_swap`` couples only qubit
slot 0 and ferries each logical qubit there with nearest-neighbour SWAPs
(N(N-1)/2 per step).  The raw chain product leaves the register in reversed
order; the schedule appends order-restoring SWAPs (kind ``swap_restore``,
excluded from the hardware gate count) so the Ising layer addresses
physical sites correctly, after which chain and star step unitaries agree
exactly.

The canonical materialized schedule decomposes each ZZ gate into
CNOT - Z(eta) - CNOT and ends with the parity-readout CNOT ladder, so the
record counts reproduce the hardware estimate: 3LN JC gates,
(2L+1)(N-1) CNOTs and L N(N-1)/2 SWAPs (chain) or none (star).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from .model import ModelParams

ARCHITECTURES = ("chain_swap", "star")

FRAME_NOTE = "interaction picture of H0 = omega0 (a'a - sum_j sz_j/2)"


@dataclass(frozen=True)
class GateRecord:
    kind: str                   # jc | x_pi | z | zz | swap | swap_restore | cnot
    targets: tuple[int, ...]    # qubit slot indices (jc also acts on the photon)
    phase: float
    step: int


@dataclass
class CircuitSchedule:
    architecture: str
    L: int
    dt: float
    gates: list[GateRecord]
    frame: str = FRAME_NOTE
    params: ModelParams = None

    def counts(self) -> dict[str, int]:
        out: dict[str, int] = {}
        for g in self.gates:
            out[g.kind] = out.get(g.kind, 0) + 1
        return out


@dataclass(frozen=True)
class GateCounts:
    jc: int
    cnot: int
    swap: int


def gate_count(L: int, N: int, arch: str) -> GateCounts:
    """Hardware gate budget of the full circuit including parity readout."""
    if L < 1 or N < 1:
        raise ValueError("L and N must be >= 1")
    if arch not in ARCHITECTURES:
        raise ValueError(f"unknown architecture {arch!r}")
    swap = L * N * (N - 1) // 2 if arch == "chain_swap" else 0
    return GateCounts(jc=3 * L * N, cnot=(2 * L + 1) * (N - 1), swap=swap)


# ---------------------------------------------------------------------------
# Elementary unitaries on the composite space
# ---------------------------------------------------------------------------

def _bit_of(q: np.ndarray, j: int, N: int) -> np.ndarray:
    return (q >> (N - 1 - j)) & 1


def jc_unitary(theta: float, j: int, params: ModelParams) -> sp.csr_matrix:
    """exp(-i theta (a' s-_j + a s+_j)) embedded in the composite space.

    Rotates |n, 1_j> -> cos(phi)|n,1_j> - i sin(phi)|n+1,0_j> with
    phi = theta sqrt(n+1); the vacuum-with-|0>_j states and the truncation
    remnant |n_max, 1_j> are left invariant, keeping the map unitary.
    """
    n_ph, nq, N = params.n_photon_levels, params.n_qubit_states, params.N
    dim = n_ph * nq
    bitval = 1 << (N - 1 - j)

    q = np.arange(nq)
    q_exc = q[_bit_of(q, j, N) == 1]            # bit j set: qubit excited
    rows, cols, vals = [], [], []

    diag = np.ones(dim, dtype=complex)
    for n in range(params.n_max):
        phi = theta * np.sqrt(n + 1)
        c, s = np.cos(phi), np.sin(phi)
        i_b = n * nq + q_exc                     # |n, 1_j>
        i_a = (n + 1) * nq + (q_exc - bitval)    # |n+1, 0_j>
        diag[i_b] = c
        diag[i_a] = c
        rows.extend([i_a, i_b])
        cols.extend([i_b, i_a])
        vals.extend([np.full(len(q_exc), -1j * s), np.full(len(q_exc), -1j * s)])

    u = sp.diags(diag, 0, format="csr")
    if rows:
        off = sp.csr_matrix(
            (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
            shape=(dim, dim),
        )
        u = (u + off).tocsr()
    return u


def x_pi_unitary(phi: float, j: int, params: ModelParams) -> sp.csr_matrix:
    """X_pi(phi) = exp(-i phi sz_j) sx_j as one unitary."""
    n_ph, nq, N = params.n_photon_levels, params.n_qubit_states, params.N
    dim = n_ph * nq
    idx = np.arange(dim)
    bitval = 1 << (N - 1 - j)
    bit = _bit_of(idx % nq, j, N)
    partner = np.where(bit == 0, idx + bitval, idx - bitval)
    vals = np.where(bit == 0, np.exp(1j * phi), np.exp(-1j * phi))
    return sp.csr_matrix((vals, (partner, idx)), shape=(dim, dim))


def z_unitary(beta: float, j: int, params: ModelParams) -> sp.csr_matrix:
    """Z_beta = exp(+i beta sz_j)."""
    idx = np.arange(params.dim)
    z = 1 - 2 * _bit_of(idx % params.n_qubit_states, j, params.N)
    return sp.diags(np.exp(1j * beta * z), 0, format="csr")


def zz_unitary(eta: float, j: int, k: int, params: ModelParams) -> sp.csr_matrix:
    """ZZ_eta = exp(+i eta sz_j sz_k)."""
    idx = np.arange(params.dim)
    q = idx % params.n_qubit_states
    zz = (1 - 2 * _bit_of(q, j, params.N)) * (1 - 2 * _bit_of(q, k, params.N))
    return sp.diags(np.exp(1j * eta * zz), 0, format="csr")


def _permutation_unitary(new_q: np.ndarray, params: ModelParams) -> sp.csr_matrix:
    n_ph, nq = params.n_photon_levels, params.n_qubit_states
    idx = np.arange(n_ph * nq)
    target = (idx // nq) * nq + new_q[idx % nq]
    data = np.ones(len(idx))
    return sp.csr_matrix((data, (target, idx)), shape=(len(idx), len(idx)))


def swap_unitary(j: int, k: int, params: ModelParams) -> sp.csr_matrix:
    """SWAP of qubit slots j and k."""
    q = np.arange(params.n_qubit_states)
    bj, bk = _bit_of(q, j, params.N), _bit_of(q, k, params.N)
    vj, vk = 1 << (params.N - 1 - j), 1 << (params.N - 1 - k)
    new_q = q - bj * vj - bk * vk + bk * vj + bj * vk
    return _permutation_unitary(new_q, params)


def cnot_unitary(control: int, target: int, params: ModelParams) -> sp.csr_matrix:
    """CNOT flipping ``target`` when ``control`` is |1>."""
    q = np.arange(params.n_qubit_states)
    bc = _bit_of(q, control, params.N)
    vt = 1 << (params.N - 1 - target)
    new_q = q ^ (bc * vt)
    return _permutation_unitary(new_q, params)


def gate_jc(theta: float, n_max: int) -> np.ndarray:
    """JC gate on photon x single qubit (dense, for inspection/tests)."""
    p1 = ModelParams(N=1, n_max=n_max)
    return jc_unitary(theta, 0, p1).toarray()


def x_pi_gate(phi: float) -> np.ndarray:
    """2x2 X_pi(phi) = exp(-i phi sz) sx = [[0, e^{-i phi}], [e^{i phi}, 0]]."""
    return np.array([[0.0, np.exp(-1j * phi)], [np.exp(1j * phi), 0.0]])


def z_gate(beta: float) -> np.ndarray:
    return np.diag(np.exp(1j * beta * np.array([1.0, -1.0])))


def zz_gate(eta: float) -> np.ndarray:
    zz = np.array([1.0, -1.0, -1.0, 1.0])
    return np.diag(np.exp(1j * eta * zz))


def gate_unitary(record: GateRecord, params: ModelParams) -> sp.csr_matrix:
    """Materialize a schedule record as a sparse unitary."""
    kind, t, ph = record.kind, record.targets, record.phase
    if kind == "jc":
        return jc_unitary(ph, t[0], params)
    if kind == "x_pi":
        return x_pi_unitary(ph, t[0], params)
    if kind == "z":
        return z_unitary(ph, t[0], params)
    if kind == "zz":
        return zz_unitary(ph, t[0], t[1], params)
    if kind in ("swap", "swap_restore"):
        return swap_unitary(t[0], t[1], params)
    if kind == "cnot":
        return cnot_unitary(t[0], t[1], params)
    raise ValueError(f"unknown gate kind {record.kind!r}")


# ---------------------------------------------------------------------------
# Composite gates
# ---------------------------------------------------------------------------

def _rabi_records(t_k: float, dt: float, j: int, params: ModelParams,
                  step: int, theta: float | None = None) -> list[GateRecord]:
    """Rabi gate records in application order (rightmost factor first)."""
    if theta is None:
        theta = params.g * dt / np.sqrt(params.N)
    phi_minus = params.omega0 * (t_k + dt / 4.0)
    phi_plus = params.omega0 * (t_k + 3.0 * dt / 4.0)
    return [
        GateRecord("jc", (j,), theta / 2.0, step),
        GateRecord("x_pi", (j,), phi_minus, step),
        GateRecord("jc", (j,), theta, step),
        GateRecord("x_pi", (j,), phi_plus, step),
        GateRecord("jc", (j,), theta / 2.0, step),
    ]


def _product(records: list[GateRecord], params: ModelParams) -> sp.csr_matrix:
    u = sp.identity(params.dim, dtype=complex, format="csr")
    for rec in records:                      # records are in application order
        u = gate_unitary(rec, params) @ u
    return u


def rabi_gate(t_k: float, dt: float, j: int, params: ModelParams,
              theta: float | None = None) -> sp.csr_matrix:
    """Composite Rabi step S_R(t_k + dt, t_k) acting on qubit j.

    ``theta`` defaults to g dt / sqrt(N); for the standalone Rabi model
    (N = 1) this reduces to g dt.
    """
    return _product(_rabi_records(t_k, dt, j, params, 0, theta), params)


def _dicke_records(t_k: float, dt: float, arch: str, params: ModelParams,
                   step: int, restore_order: bool = True) -> list[GateRecord]:
    N = params.N
    records: list[GateRecord] = []
    if arch == "star":
        for j in range(N):
            records += _rabi_records(t_k, dt, j, params, step)
        return records
    if arch != "chain_swap":
        raise ValueError(f"unknown architecture {arch!r}")
    # chain: only slot 0 talks to the resonator; logical qubit j is ferried
    # down to slot 0 by j nearest-neighbour SWAPs before its Rabi block.
    for j in range(N):
        for slot in range(j - 1, -1, -1):
            records.append(GateRecord("swap", (slot, slot + 1), 0.0, step))
        records += _rabi_records(t_k, dt, 0, params, step)
    if restore_order:
        # the ferry leaves the register reversed; undo it with bookkeeping
        # swaps so later layers address physical sites directly
        for m in range(N // 2):
            records.append(GateRecord("swap_restore", (m, N - 1 - m), 0.0, step))
    return records


def dicke_gate(t_k: float, dt: float, arch: str, params: ModelParams,
               restore_order: bool = True) -> sp.csr_matrix:
    """Dicke step S_D(t_k + dt, t_k) for either architecture."""
    return _product(_dicke_records(t_k, dt, arch, params, 0, restore_order), params)


def _step_records(t_k: float, dt: float, arch: str, params: ModelParams,
                  step: int, decompose_zz: bool) -> list[GateRecord]:
    """One full S_DI step: Dicke gate, then Z layer, then ZZ layer."""
    beta = params.omegaz * dt
    eta = params.J * dt
    records = _dicke_records(t_k, dt, arch, params, step)
    for j in range(params.N):
        records.append(GateRecord("z", (j,), beta, step))
    for j in range(params.N - 1):
        if decompose_zz:
            records.append(GateRecord("cnot", (j, j + 1), 0.0, step))
            records.append(GateRecord("z", (j + 1,), eta, step))
            records.append(GateRecord("cnot", (j, j + 1), 0.0, step))
        else:
            records.append(GateRecord("zz", (j, j + 1), eta, step))
    return records


def dicke_ising_gate(t_k: float, dt: float, arch: str,
                     params: ModelParams) -> sp.csr_matrix:
    """Full Trotter-step unitary S_DI(t_k, dt)."""
    return _product(_step_records(t_k, dt, arch, params, 0, decompose_zz=False),
                    params)


# ---------------------------------------------------------------------------
# Schedules
# ---------------------------------------------------------------------------

def parity_ladder_records(params: ModelParams, step: int) -> list[GateRecord]:
    """CNOT ladder folding the total parity onto qubit 0 (Fig.-6 readout)."""
    return [GateRecord("cnot", (j, j - 1), 0.0, step)
            for j in range(params.N - 1, 0, -1)]


def build_schedule(params: ModelParams, L: int, t_f: float, arch: str, *,
                   include_parity_readout: bool = True,
                   decompose_zz: bool = True) -> CircuitSchedule:
    """Materialize the full gate schedule for L Trotter steps to t_f.

    With the default flags the record counts match :func:`gate_count`.
    """
    if params.s != 0.5:
        raise ValueError("the circuit layer is defined for qubits (s = 1/2)")
    if arch not in ARCHITECTURES:
        raise ValueError(f"unknown architecture {arch!r}")
    dt = t_f / L
    gates: list[GateRecord] = []
    for k in range(1, L + 1):
        t_k = (k - 1) * dt
        gates += _step_records(t_k, dt, arch, params, k, decompose_zz)
    if include_parity_readout:
        gates += parity_ladder_records(params, L + 1)
    return CircuitSchedule(architecture=arch, L=L, dt=dt, gates=gates,
                           params=params)


def schedule_to_text(schedule: CircuitSchedule) -> str:
    """Line-oriented export: ``kind targets phase step`` per gate."""
    lines = []
    for g in schedule.gates:
        targets = ",".join(str(t) for t in g.targets)
        lines.append(f"{g.kind} {targets} {g.phase:.17g} {g.step}")
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# Trotter evolution and parity readout
# ---------------------------------------------------------------------------

def free_frame_phases(t: float, params: ModelParams) -> np.ndarray:
    """Diagonal of exp(-i H0 t) with H0 = omega0 (a'a - sum_j sz_j / 2)."""
    n_ph, nq, N = params.n_photon_levels, params.n_qubit_states, params.N
    q = np.arange(nq)
    popcount = np.zeros(nq, dtype=int)
    for j in range(N):
        popcount += _bit_of(q, j, N)
    sum_z = N - 2 * popcount
    n = np.arange(n_ph)
    diag = params.omega0 * (n[:, None] - 0.5 * sum_z[None, :])
    return np.exp(-1j * t * diag).reshape(-1)


@dataclass
class TrotterResult:
    psi_interaction: np.ndarray
    psi_lab: np.ndarray
    schedule: CircuitSchedule = field(repr=False, default=None)


class _GateCache:
    """Build each distinct (kind, targets, phase) unitary once per run."""

    def __init__(self, params: ModelParams):
        self.params = params
        self._cache: dict[tuple, sp.csr_matrix] = {}

    def __call__(self, record: GateRecord) -> sp.csr_matrix:
        key = (record.kind, record.targets, record.phase)
        u = self._cache.get(key)
        if u is None:
            u = gate_unitary(record, self.params)
            self._cache[key] = u
        return u


def apply_schedule(psi: np.ndarray, schedule: CircuitSchedule,
                   params: ModelParams) -> np.ndarray:
    """Apply every gate of a schedule, in order, to a state vector."""
    cache = _GateCache(params)
    out = np.array(psi, dtype=complex)
    for rec in schedule.gates:
        out = cache(rec) @ out
    return out


def trotter_evolve(psi0: np.ndarray, L: int, t_f: float, arch: str,
                   params: ModelParams) -> TrotterResult:
    """Run the L-step Dicke-Ising circuit on ``psi0``.

    Returns both the raw interaction-picture output (the bare product of
    S_DI gates) and the lab-frame state exp(-i H0 t_f) applied to it, which
    is directly comparable with exact evolution under H_DI.
    """
    schedule = build_schedule(params, L, t_f, arch,
                              include_parity_readout=False, decompose_zz=False)
    psi_int = apply_schedule(psi0, schedule, params)
    psi_lab = free_frame_phases(t_f, params) * psi_int
    return TrotterResult(psi_interaction=psi_int, psi_lab=psi_lab,
                         schedule=schedule)


def parity_readout(psi: np.ndarray, params: ModelParams,
                   min_prob: float = 1e-12):
    """Single-qubit parity measurement via the CNOT ladder.

    Applies the ladder, measures qubit 0 in the z basis and conditions on
    the +1 outcome.  Returns ``(p_plus, rho_photon_plus)`` where
    ``rho_photon_plus`` is the renormalised photon state given even parity.
    """
    cache = _GateCache(params)
    out = np.array(psi, dtype=complex)
    for rec in parity_ladder_records(params, 0):
        out = cache(rec) @ out
    m = out.reshape(params.n_photon_levels, params.n_qubit_states)
    # after the ladder the (most significant) bit of qubit 0 holds the total
    # parity; even parity corresponds to bit 0 = 0, i.e. the first half
    even_block = m[:, : params.n_qubit_states // 2]
    p_plus = float(np.sum(np.abs(even_block) ** 2))
    if p_plus < min_prob:
        raise ValueError(f"even-parity probability {p_plus:.3e} too small to condition on")
    rho_plus = even_block @ even_block.conj().T / p_plus
    return p_plus, rho_plus
