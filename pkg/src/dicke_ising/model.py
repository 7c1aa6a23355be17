"""Hilbert space, operators and special states of the Dicke-Ising chain.

Model
-----
N spin-1/2 sites with ferromagnetic Ising coupling J > 0, all coupled to a
single photon mode (hbar = 1 throughout)::

    H_DI = omega0 a'a - omegaz sum_j sz_j + (g/sqrt(N)) (a + a') sum_j sx_j
           - J sum_j sz_j sz_{j+1}

Conventions (pinned once, used everywhere):

* Logical |0>_j is the sz_j = +1 eigenstate ``(1, 0)^T``; the ferromagnetic
  state |FM> = |0_photon> x |00...0> is the g = 0 ground state.
* Composite basis is photon-major: ``flat = n * 2**N + q`` where ``q`` reads
  the qubit bits left to right, qubit 0 most significant
  (``q = sum_j bits[j] * 2**(N-1-j)``).
* Raising/lowering follow ``s+ = (sx - i sy)/2 = |1><0|`` and
  ``s- = (sx + i sy)/2 = |0><1|``, so s+ excites |0> -> |1> and the coupling
  ``a' s- + a s+`` conserves the free excitation number.  Explicitly::

      s+ = [[0, 0],    s- = [[0, 1],
            [1, 0]]          [0, 0]]

* The photon ladder is hard-truncated at ``n_max``: a'|n_max> = 0.  Coherent
  state builders report/renormalise the truncated probability mass.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, replace

import numpy as np
import scipy.sparse as sp
from scipy.special import gammaln

SIGMA_X = np.array([[0.0, 1.0], [1.0, 0.0]], dtype=complex)
SIGMA_Y = np.array([[0.0, -1.0j], [1.0j, 0.0]], dtype=complex)
SIGMA_Z = np.array([[1.0, 0.0], [0.0, -1.0]], dtype=complex)
SIGMA_PLUS = np.array([[0.0, 0.0], [1.0, 0.0]], dtype=complex)   # |1><0|
SIGMA_MINUS = np.array([[0.0, 1.0], [0.0, 0.0]], dtype=complex)  # |0><1|

HAMILTONIAN_KINDS = ("dicke_ising", "dicke", "free", "rabi")


@dataclass(frozen=True)
class ModelParams:
    """Physical couplings and Hilbert-space sizes.

    All couplings share one energy unit (omega0 sets the scale).  ``s`` is
    the spin magnitude; the Hilbert-space builders and the circuit layer
    require s = 1/2, larger s enters only the mean-field formulas.
    """

    omega0: float = 1.0
    omegaz: float = 0.05
    J: float = 1.0
    g: float = 0.9
    N: int = 5
    n_max: int = 20
    s: float = 0.5
    boundary: str = "open"

    def __post_init__(self):
        if self.omega0 <= 0:
            raise ValueError("omega0 must be positive")
        if self.N < 1:
            raise ValueError("N must be >= 1")
        if self.n_max < 0:
            raise ValueError("n_max must be >= 0")
        if self.s <= 0 or round(2 * self.s) != 2 * self.s:
            raise ValueError("s must be a positive half-integer")
        if self.boundary not in ("open", "periodic"):
            raise ValueError("boundary must be 'open' or 'periodic'")

    @property
    def n_photon_levels(self) -> int:
        return self.n_max + 1

    @property
    def n_qubit_states(self) -> int:
        if self.s != 0.5:
            raise ValueError("qubit-space builders require s = 1/2")
        return 2 ** self.N

    @property
    def dim(self) -> int:
        """Composite dimension (n_max + 1) * (2s + 1)^N."""
        return self.n_photon_levels * int(round(2 * self.s + 1)) ** self.N

    def with_(self, **kwargs) -> "ModelParams":
        return replace(self, **kwargs)


# ---------------------------------------------------------------------------
# Basis bookkeeping
# ---------------------------------------------------------------------------

def flat_index(photon: int, bits, params: ModelParams) -> int:
    """Flat composite index of |photon> x |bits>, qubit 0 most significant."""
    bits = list(bits)
    if len(bits) != params.N:
        raise ValueError("bit string length must equal N")
    if not 0 <= photon <= params.n_max:
        raise ValueError("photon index out of range")
    q = 0
    for b in bits:
        q = 2 * q + int(b)
    return photon * params.n_qubit_states + q


def decode_index(index: int, params: ModelParams) -> tuple[int, tuple[int, ...]]:
    """Inverse of :func:`flat_index`."""
    nq = params.n_qubit_states
    photon, q = divmod(int(index), nq)
    if not 0 <= photon <= params.n_max:
        raise ValueError("index out of range")
    bits = tuple((q >> (params.N - 1 - j)) & 1 for j in range(params.N))
    return photon, bits


def qubit_bit_arrays(params: ModelParams) -> np.ndarray:
    """(N, 2^N) array: row j holds bit j of every qubit basis state."""
    q = np.arange(params.n_qubit_states)
    return np.array([(q >> (params.N - 1 - j)) & 1 for j in range(params.N)])


def sigma_z_diagonals(params: ModelParams) -> np.ndarray:
    """(N, 2^N) array of sz_j eigenvalues (+1 for bit 0, -1 for bit 1)."""
    return 1 - 2 * qubit_bit_arrays(params)


# ---------------------------------------------------------------------------
# Elementary operators
# ---------------------------------------------------------------------------

def boson_ops(n_max: int):
    """Truncated ladder operators (annihilation, creation, number).

    a[n, n+1] = sqrt(n+1); creation is the conjugate transpose; the top Fock
    level is annihilated by the truncated a'.  The commutator [a, a'] equals
    the identity except for the -n_max entry in the bottom-right corner.
    """
    if n_max < 0:
        raise ValueError("n_max must be >= 0")
    n = np.arange(n_max + 1)
    a = sp.diags(np.sqrt(n[1:]).astype(complex), 1, format="csr")
    adag = a.conj().T.tocsr()
    number = sp.diags(n.astype(complex), 0, format="csr")
    return a, adag, number


def _qubit_chain_op(op: np.ndarray, j: int, N: int) -> sp.csr_matrix:
    """Embed a single-qubit operator at site j of an N-qubit register."""
    out = sp.identity(1, dtype=complex, format="csr")
    for site in range(N):
        factor = sp.csr_matrix(op) if site == j else sp.identity(2, dtype=complex, format="csr")
        out = sp.kron(out, factor, format="csr")
    return out


def pauli_op(j: int, axis: str, params: ModelParams) -> sp.csr_matrix:
    """sigma^axis at qubit j, tensored with the photon identity."""
    if not 0 <= j < params.N:
        raise ValueError(f"qubit index {j} out of range for N={params.N}")
    if params.s != 0.5:
        raise ValueError("pauli_op requires s = 1/2")
    mats = {"x": SIGMA_X, "y": SIGMA_Y, "z": SIGMA_Z, "+": SIGMA_PLUS, "-": SIGMA_MINUS}
    try:
        op = mats[axis]
    except KeyError:
        raise ValueError(f"unknown axis {axis!r}") from None
    qop = _qubit_chain_op(op, j, params.N)
    return sp.kron(sp.identity(params.n_photon_levels, dtype=complex, format="csr"),
                   qop, format="csr")


def photon_op(op: sp.spmatrix, params: ModelParams) -> sp.csr_matrix:
    """Photon-space operator tensored with the qubit identity."""
    return sp.kron(op, sp.identity(params.n_qubit_states, dtype=complex, format="csr"),
                   format="csr")


# ---------------------------------------------------------------------------
# Hamiltonians
# ---------------------------------------------------------------------------

def hamiltonian(kind: str, params: ModelParams) -> sp.csr_matrix:
    """Sparse Hermitian Hamiltonian on the composite space.

    kind:
      * ``dicke_ising``: omega0 a'a - omegaz sum sz + (g/sqrt N)(a+a') sum sx
        - J sum_{<jk>} sz_j sz_k (ring closed when boundary='periodic')
      * ``dicke``: same without the Ising term
      * ``free``: omega0 (a'a - sum_j sz_j / 2), the interaction-picture
        reference used by the Trotter circuit
      * ``rabi``: omega0 a'a + g (a+a') sx, requires N = 1
    """
    if kind not in HAMILTONIAN_KINDS:
        raise ValueError(f"unknown Hamiltonian kind {kind!r}")
    if kind == "rabi" and params.N != 1:
        raise ValueError("the Rabi model is defined for N = 1")

    a, adag, number = boson_ops(params.n_max)
    h = params.omega0 * photon_op(number, params)

    if kind == "free":
        for j in range(params.N):
            h = h - 0.5 * params.omega0 * pauli_op(j, "z", params)
        return h.tocsr()

    if kind == "rabi":
        h = h + params.g * photon_op(a + adag, params) @ pauli_op(0, "x", params)
        return h.tocsr()

    x_photon = photon_op(a + adag, params)
    for j in range(params.N):
        h = h - params.omegaz * pauli_op(j, "z", params)
        h = h + (params.g / np.sqrt(params.N)) * (x_photon @ pauli_op(j, "x", params))

    if kind == "dicke_ising":
        pairs = [(j, j + 1) for j in range(params.N - 1)]
        if params.boundary == "periodic" and params.N > 2:
            pairs.append((params.N - 1, 0))
        for j, k in pairs:
            h = h - params.J * (pauli_op(j, "z", params) @ pauli_op(k, "z", params))
    return h.tocsr()


def hermiticity_defect(op) -> float:
    """Max-entry magnitude of H - H'."""
    d = op - op.conj().T
    if sp.issparse(d):
        return 0.0 if d.nnz == 0 else float(np.abs(d.data).max())
    return float(np.abs(d).max())


# ---------------------------------------------------------------------------
# Special states
# ---------------------------------------------------------------------------

def coherent_truncated_mass(alpha: complex, n_max: int) -> float:
    """Probability mass of |alpha> beyond the Fock cutoff (exact Poisson tail)."""
    if alpha == 0:
        return 0.0
    n = np.arange(n_max + 1)
    log_p = -abs(alpha) ** 2 + 2 * n * np.log(abs(alpha)) - gammaln(n + 1)
    return float(max(0.0, 1.0 - np.exp(log_p).sum()))


def ferromagnetic_state(params: ModelParams) -> np.ndarray:
    """|FM> = |0_photon> x |00...0>, amplitude 1 at flat index 0."""
    psi = np.zeros(params.dim, dtype=complex)
    psi[0] = 1.0
    return psi


def fock_state(n: int, n_max: int) -> np.ndarray:
    """Photon-only Fock basis vector |n>."""
    if not 0 <= n <= n_max:
        raise ValueError(f"Fock index {n} exceeds cutoff {n_max}")
    psi = np.zeros(n_max + 1, dtype=complex)
    psi[n] = 1.0
    return psi


def coherent_state(alpha: complex, n_max: int, mass_tol: float = 1e-8) -> np.ndarray:
    """Photon-only coherent state, renormalised on the truncated space.

    Warns when the probability of the top Fock level exceeds ``mass_tol``
    (the cutoff is then biting into the Poisson bulk).
    """
    n = np.arange(n_max + 1)
    if alpha == 0:
        return fock_state(0, n_max)
    log_mag = -0.5 * abs(alpha) ** 2 + n * np.log(abs(alpha)) - 0.5 * gammaln(n + 1)
    phase = np.exp(1j * np.angle(alpha) * n)
    amps = np.exp(log_mag) * phase
    top_prob = np.exp(2 * log_mag[-1])
    if top_prob > mass_tol:
        warnings.warn(
            f"coherent({alpha}): top Fock level holds probability {top_prob:.3e} "
            f"(> {mass_tol:.1e}); truncated mass {coherent_truncated_mass(alpha, n_max):.3e}",
            stacklevel=2,
        )
    return amps / np.linalg.norm(amps)


def special_state(kind: str, params: ModelParams, *, alpha: complex = 0.0, n: int = 0) -> np.ndarray:
    """Named states: 'fm' (composite), 'coherent' / 'fock' (photon-only)."""
    if kind == "fm":
        return ferromagnetic_state(params)
    if kind == "coherent":
        return coherent_state(alpha, params.n_max)
    if kind == "fock":
        return fock_state(n, params.n_max)
    raise ValueError(f"unknown state kind {kind!r}")


# ---------------------------------------------------------------------------
# Qubit parity
# ---------------------------------------------------------------------------

def parity_diagonal(sign: str, params: ModelParams) -> np.ndarray:
    """Diagonal of P_+- on the 2^N qubit space: (1 +- prod_j sz_j)/2."""
    if sign not in ("+", "-"):
        raise ValueError("sign must be '+' or '-'")
    if params.s != 0.5:
        raise ValueError("parity projectors require s = 1/2")
    z = sigma_z_diagonals(params)
    prod = np.prod(z, axis=0)
    pm = 1.0 if sign == "+" else -1.0
    return 0.5 * (1.0 + pm * prod)


def parity_projector(sign: str, params: ModelParams, *, qubit_only: bool = False) -> sp.csr_matrix:
    """Projector onto even/odd total qubit parity.

    By default tensored with the photon identity; ``qubit_only=True`` returns
    the 2^N x 2^N block acting on the qubit factor alone.
    """
    diag = parity_diagonal(sign, params)
    proj_q = sp.diags(diag.astype(complex), 0, format="csr")
    if qubit_only:
        return proj_q
    return sp.kron(sp.identity(params.n_photon_levels, dtype=complex, format="csr"),
                   proj_q, format="csr")
