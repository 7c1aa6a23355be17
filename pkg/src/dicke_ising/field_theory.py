"""Mean-field free energies, magnons, instantons and Gaussian fluctuations.

Everything here lives in the thermodynamic limit: the superradiant order
parameter u is the rescaled photon quadrature (a + a')/sqrt(N), free
energies are per spin, and all profiles are even in u.

Closed forms implemented (per-spin, spin s where it appears):

* Dicke model:      F_D(u)  = omega0 u^2/4 - omegaz (sqrt(1 + g^2 u^2/omegaz^2) - 1)
* Dicke-Ising chain (omegaz = 0 sector, s = 1/2):
                    F_DI(u) = omega0 u^2/4 - (2/pi)(g|u| + J) E(m),
                    m = 4 g|u| J / (g|u| + J)^2,
  the filled lower magnon band; its independent oracle is the momentum
  quadrature -(1/2) int dk/2pi |eps(k)| over the Brillouin zone with
  eps(k) = +-2 sqrt(g^2 u^2 + J^2 - 2 J g u cos k).
* Angular mean field (any s, finite omegaz):
                    F_mf(u, phi) = omega0 u^2/4 + h(u, phi),
                    h = 2s (-omegaz cos phi + g u sin phi - 2 s J cos^2 phi),
  with the stationary in-plane angle phi~(u) continued from phi~(0) = 0,
  and the Gaussian fluctuation correction

                    F_fl = (1/(2s)) int dk/2pi sqrt(A B_k)
                         = (1/(pi s)) sqrt(A (A + 8 s^2 J sin^2 phi))
                           E(16 s^2 J sin^2 phi / (A + 8 s^2 J sin^2 phi)),

  A = 4 J s^2 cos^2 phi - h, B_k = A - 8 J s^2 sin^2 phi cos k, valid on
  the stability region 4 s J cos 2phi + omegaz cos phi - g u sin phi > 0.

E(m) is the complete elliptic integral of the second kind in the
parameter-m convention, E(m) = int_0^{pi/2} sqrt(1 - m sin^2 t) dt.

The instanton connecting the superradiant minima -u0 -> +u0 follows the
imaginary-time energy conservation law (du/dtau)^2 = 4 omega0 (F - F(-u0)):

    tau(u) = int_{-u0}^{u} du' / sqrt(4 omega0 (F(u') - F(-u0))).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Callable

import numpy as np
from scipy.integrate import quad
from scipy.interpolate import CubicSpline
from scipy.optimize import brentq, minimize_scalar
from scipy.special import ellipe

from .model import ModelParams


def complete_elliptic_e(m) -> np.ndarray | float:
    """E(m) in the parameter-m convention, m in [0, 1]."""
    m = np.asarray(m, dtype=float)
    if np.any(m < -1e-12) or np.any(m > 1 + 1e-12):
        raise ValueError("elliptic parameter m must lie in [0, 1]")
    return ellipe(np.clip(m, 0.0, 1.0))


# ---------------------------------------------------------------------------
# Free energies
# ---------------------------------------------------------------------------

def free_energy_dicke(u, params: ModelParams):
    """Per-spin Dicke free energy F_D(u); second-order transition."""
    if params.omegaz <= 0:
        raise ValueError("the Dicke free energy needs omegaz > 0")
    u = np.asarray(u, dtype=float)
    g, wz = params.g, params.omegaz
    return params.omega0 * u ** 2 / 4.0 - wz * (np.sqrt(1.0 + (g * u / wz) ** 2) - 1.0)


def free_energy_dicke_ising(u, params: ModelParams):
    """Per-spin Dicke-Ising free energy F_DI(u) (omegaz = 0 sector)."""
    if params.J <= 0:
        raise ValueError("the Dicke-Ising free energy needs J > 0")
    u = np.asarray(u, dtype=float)
    gu = params.g * np.abs(u)
    m = 4.0 * gu * params.J / (gu + params.J) ** 2
    return params.omega0 * u ** 2 / 4.0 \
        - (2.0 / np.pi) * (gu + params.J) * complete_elliptic_e(m)


def magnon_spectrum(k, u, params: ModelParams):
    """Ising-magnon bands (eps_plus, eps_minus) in the condensate field u."""
    k = np.asarray(k, dtype=float)
    root = 2.0 * np.sqrt(params.g ** 2 * u ** 2 + params.J ** 2
                         - 2.0 * params.J * params.g * u * np.cos(k))
    return root, -root


def free_energy_dicke_ising_quadrature(u, params: ModelParams, *,
                                       epsabs: float = 1e-13):
    """Momentum-quadrature oracle: omega0 u^2/4 - (1/2) int dk/2pi |eps(k)|."""

    def single(uv):
        val, _err = quad(lambda kk: magnon_spectrum(kk, abs(uv), params)[0],
                         -np.pi, np.pi, epsabs=epsabs, epsrel=1e-13, limit=200)
        return params.omega0 * uv ** 2 / 4.0 - 0.5 * val / (2.0 * np.pi)

    u = np.asarray(u, dtype=float)
    if u.ndim == 0:
        return single(float(u))
    return np.array([single(uv) for uv in u])


# ---------------------------------------------------------------------------
# Profiles and critical couplings
# ---------------------------------------------------------------------------

@dataclass
class FreeEnergyProfile:
    """Sampled F(u) plus its evaluator and located minima."""

    model: str
    u_grid: np.ndarray
    values: np.ndarray
    minima: list[tuple[float, float]]          # (u*, F(u*)), u* >= 0 side listed once
    classification: str                        # normal | coexistence | superradiant
    evaluate: Callable[[np.ndarray], np.ndarray] = field(repr=False, default=None)
    params: ModelParams = None


def _locate_minima(f, u_grid):
    """Interior local minima of f on the grid, refined with bounded search."""
    vals = f(u_grid)
    minima = []
    for i in range(1, len(u_grid) - 1):
        if vals[i] <= vals[i - 1] and vals[i] <= vals[i + 1]:
            res = minimize_scalar(f, bounds=(u_grid[i - 1], u_grid[i + 1]),
                                  method="bounded",
                                  options={"xatol": 1e-12})
            minima.append((float(res.x), float(res.fun)))
    # merge duplicates from flat plateaus
    merged = []
    for u, v in sorted(minima):
        if not merged or abs(u - merged[-1][0]) > 1e-8:
            merged.append((u, v))
    return merged


def free_energy_profile(model: str, params: ModelParams,
                        u_grid: np.ndarray | None = None,
                        evaluate: Callable | None = None) -> FreeEnergyProfile:
    """Build a profile for 'dicke', 'dicke_ising' or a custom evaluator."""
    if evaluate is None:
        if model == "dicke":
            evaluate = lambda u: free_energy_dicke(u, params)
        elif model == "dicke_ising":
            evaluate = lambda u: free_energy_dicke_ising(u, params)
        else:
            raise ValueError(f"unknown free-energy model {model!r}")
    if u_grid is None:
        u_hi = max(3.0, 3.0 * params.g / params.omega0)
        u_grid = np.linspace(-u_hi, u_hi, 1201)

    vals = np.asarray(evaluate(u_grid), dtype=float)
    minima = _locate_minima(evaluate, u_grid)
    side = [(u, v) for u, v in minima if u > 1e-6]
    f0 = float(evaluate(np.asarray(0.0)))
    if not side:
        classification = "normal"
    elif min(v for _u, v in side) < f0 - 1e-12:
        classification = "superradiant"
    else:
        classification = "coexistence"
    return FreeEnergyProfile(model=model, u_grid=u_grid, values=vals,
                             minima=minima, classification=classification,
                             evaluate=evaluate, params=params)


def dicke_critical_coupling(params: ModelParams) -> float:
    """Analytic g_c = sqrt(omega0 omegaz / 2) of the Dicke model."""
    return math.sqrt(params.omega0 * params.omegaz / 2.0)


def detect_gc_dicke_curvature(params: ModelParams, *, h: float = 1e-4,
                              g_hi_factor: float = 4.0, tol: float = 1e-9) -> float:
    """Locate g_c from the sign change of F_D''(0) by bisection in g."""

    def curvature(g):
        p = params.with_(g=g)
        return float(free_energy_dicke(h, p) - 2 * free_energy_dicke(0.0, p)
                     + free_energy_dicke(-h, p)) / h ** 2

    g_lo, g_hi = 1e-9, g_hi_factor * dicke_critical_coupling(params)
    if curvature(g_lo) <= 0 or curvature(g_hi) >= 0:
        raise ValueError("curvature does not change sign in the bracket")
    return float(brentq(curvature, g_lo, g_hi, xtol=tol))


def dicke_ising_critical_coupling(params: ModelParams, *,
                                  tol: float = 1e-8) -> float:
    """First-order critical coupling of F_DI: side minima degenerate with F(0).

    Bisection on the depth gap F(u_side) - F(0) over
    g in [0.5, 1.0] sqrt(omega0 J); raises if no coexistence window exists.
    """
    scale = math.sqrt(params.omega0 * params.J)

    def side_gap(g):
        p = params.with_(g=g)
        f = lambda u: free_energy_dicke_ising(u, p)
        u_hi = max(3.0, 4.0 * g / params.omega0)
        grid = np.linspace(1e-4, u_hi, 800)
        side = [(u, v) for u, v in _locate_minima(f, grid) if u > 1e-3]
        if not side:
            return 1.0
        return min(v for _u, v in side) - float(f(np.asarray(0.0)))

    g_lo, g_hi = 0.5 * scale, 1.0 * scale
    if side_gap(g_lo) <= 0:
        raise ValueError("side minima already below F(0) at the lower bracket")
    if side_gap(g_hi) >= 0:
        raise ValueError("no coexistence window found in the bracket")
    return float(brentq(side_gap, g_lo, g_hi, xtol=tol))


@dataclass(frozen=True)
class CriticalCouplings:
    g_c_dicke: float
    g_c_dicke_ising: float
    c0: float


def critical_couplings(params: ModelParams) -> CriticalCouplings:
    """Both critical couplings and c0 = g_c_DI / sqrt(omega0 J)."""
    g_d = dicke_critical_coupling(params)
    g_di = dicke_ising_critical_coupling(params)
    return CriticalCouplings(g_c_dicke=g_d, g_c_dicke_ising=g_di,
                             c0=g_di / math.sqrt(params.omega0 * params.J))


# ---------------------------------------------------------------------------
# Instanton
# ---------------------------------------------------------------------------

@dataclass
class InstantonSolution:
    """Trajectory u(tau) between the superradiant minima, tau(0) at u = 0."""

    tau_grid: np.ndarray
    u_of_tau: np.ndarray
    u0: float
    action: float                      # per-spin value of int sqrt(dF/omega0) du
    magnon_crossing: dict = None       # J/g crossing data for Dicke-Ising profiles
    u_samples: np.ndarray = field(default=None, repr=False)
    tau_samples: np.ndarray = field(default=None, repr=False)
    rate: float = 0.0                  # endpoint relaxation rate sqrt(2 omega0 F'')


def instanton(profile: FreeEnergyProfile, *, delta_frac: float = 1e-4,
              n_samples: int = 1601, n_tau: int = 2001) -> InstantonSolution:
    """Instanton trajectory from the energy-conservation quadrature.

    tau(u) is accumulated by adaptive quadrature on a grid clustered toward
    the endpoints, where the integrand has the 1/|u -+ u0| divergence of a
    quadratic minimum; the sampled trajectory stops delta away from +-u0
    and the exponential tails follow the analytic log asymptotics with rate
    sqrt(2 omega0 F''(u0)).  The inverse u(tau) is a cubic interpolant on a
    uniform tau grid.
    """
    f = profile.evaluate
    params = profile.params
    side = [(u, v) for u, v in profile.minima if u > 1e-6]
    if not side:
        raise ValueError("profile has no superradiant minima")
    u0, f_min = min(side, key=lambda t: t[1])

    f0 = float(f(np.asarray(0.0)))
    if f0 - f_min < 0:
        raise ValueError("F(0) below the side minima: not a tunneling profile")

    def delta_f(u):
        return np.asarray(f(np.asarray(u)), dtype=float) - f_min

    delta = delta_frac * 2.0 * u0
    interior = np.linspace(-u0 + delta, u0 - delta, 5)
    if np.any(delta_f(interior[1:-1]) <= 0):
        raise ValueError("F(u) - F(-u0) non-positive inside the well interval")

    # second derivative at the minimum sets the endpoint relaxation rate
    h = 1e-5 * u0
    fpp = float(delta_f(u0 - 2 * h) - 2 * delta_f(u0 - h) + delta_f(u0)) / h ** 2
    rate = math.sqrt(max(2.0 * params.omega0 * fpp, 1e-300))

    integrand = lambda x: 1.0 / np.sqrt(4.0 * params.omega0 * delta_f(x))

    # endpoint-clustered, symmetric sample grid
    xi = np.linspace(-1.0, 1.0, n_samples)
    u_s = (u0 - delta) * np.sin(0.5 * np.pi * xi)
    tau_s = np.empty_like(u_s)
    i0 = n_samples // 2                     # u = 0 sample
    tau_s[i0] = 0.0
    for i in range(i0 + 1, n_samples):
        val, _ = quad(integrand, u_s[i - 1], u_s[i], epsabs=1e-13, epsrel=1e-12,
                      limit=200)
        tau_s[i] = tau_s[i - 1] + val
    for i in range(i0 - 1, -1, -1):
        val, _ = quad(integrand, u_s[i], u_s[i + 1], epsabs=1e-13, epsrel=1e-12,
                      limit=200)
        tau_s[i] = tau_s[i + 1] - val

    spline = CubicSpline(tau_s, u_s)
    tau_grid = np.linspace(tau_s[0], tau_s[-1], n_tau)
    u_of_tau = spline(tau_grid)

    action, _ = quad(lambda x: np.sqrt(np.maximum(delta_f(x), 0.0) / params.omega0),
                     -u0, u0, epsabs=1e-12, epsrel=1e-11, limit=400)

    crossing = None
    if profile.model == "dicke_ising":
        u_cross = params.J / params.g
        crossing = {"u_cross": u_cross, "crosses": bool(u0 > u_cross)}
        if crossing["crosses"]:
            i = int(np.searchsorted(u_s, u_cross))
            crossing["tau_cross"] = float(np.interp(u_cross, u_s, tau_s))
    return InstantonSolution(tau_grid=tau_grid, u_of_tau=u_of_tau, u0=float(u0),
                             action=float(action), magnon_crossing=crossing,
                             u_samples=u_s, tau_samples=tau_s, rate=rate)


def instanton_energy_residual(sol: InstantonSolution,
                              profile: FreeEnergyProfile,
                              interior_frac: float = 0.9) -> float:
    """Max |-(du/dtau)^2/(4 omega0) + F(u) - F(-u0)| on the trajectory bulk.

    The velocity comes from five-point finite differences of the sampled
    u(tau), so the check is independent of the defining quadrature.
    """
    params = profile.params
    f_min = float(profile.evaluate(np.asarray(sol.u0)))
    tau, u = sol.tau_grid, sol.u_of_tau
    h = tau[1] - tau[0]
    v = np.gradient(u, h, edge_order=2)
    # five-point stencil on the interior for the accuracy the check needs
    v5 = (u[:-4] - 8 * u[1:-3] + 8 * u[3:-1] - u[4:]) / (12 * h)
    res = np.abs(-v5 ** 2 / (4.0 * params.omega0)
                 + np.asarray(profile.evaluate(u[2:-2]), dtype=float) - f_min)
    n = len(res)
    lo = int((1 - interior_frac) / 2 * n)
    return float(res[lo:n - lo].max())


# ---------------------------------------------------------------------------
# Angular representation
# ---------------------------------------------------------------------------

def spin_energy_density(u, phi, params: ModelParams):
    """In-plane spin energy h(u, phi) = 2s(-omegaz cos phi + g u sin phi
    - 2 s J cos^2 phi)."""
    s = params.s
    u = np.asarray(u, dtype=float)
    phi = np.asarray(phi, dtype=float)
    return 2 * s * (-params.omegaz * np.cos(phi) + params.g * u * np.sin(phi)
                    - 2 * s * params.J * np.cos(phi) ** 2)


def mean_field_free_energy(u, phi, params: ModelParams):
    """F_mf(u, phi) = omega0 u^2 / 4 + h(u, phi)."""
    return params.omega0 * np.asarray(u, dtype=float) ** 2 / 4.0 \
        + spin_energy_density(u, phi, params)


def _dphi_h(u, phi, params: ModelParams):
    s = params.s
    return 2 * s * (params.omegaz * np.sin(phi) + params.g * u * np.cos(phi)
                    + 2 * s * params.J * np.sin(2 * phi))


def stationary_angle(u_grid: np.ndarray, params: ModelParams, *,
                     window: float = 0.6, jump_tol: float = 0.5):
    """phi~(u) solving d_phi F_mf = 0, continued from phi~(0) = 0.

    Marches outward from u = 0 keeping the branch continuous; returns
    (phi_array, branch_jump_flag).  A jump is reported when no root exists
    inside the continuation window and the solver must restart globally.
    """
    u_grid = np.asarray(u_grid, dtype=float)
    order = np.argsort(np.abs(u_grid), kind="stable")
    phi = np.full(len(u_grid), np.nan)
    jump = False

    def solve_near(u, phi_prev):
        lo, hi = phi_prev - window, phi_prev + window
        glo, ghi = _dphi_h(u, lo, params), _dphi_h(u, hi, params)
        if glo == 0.0:
            return lo, False
        if glo * ghi < 0:
            return float(brentq(lambda p: _dphi_h(u, p, params), lo, hi,
                                xtol=1e-13)), False
        # window failed: scan (-pi, pi] for the minimum closest to phi_prev
        grid = np.linspace(-np.pi, np.pi, 721)
        vals = mean_field_free_energy(u, grid, params)
        cands = [grid[i] for i in range(1, len(grid) - 1)
                 if vals[i] <= vals[i - 1] and vals[i] <= vals[i + 1]]
        if not cands:
            cands = [grid[int(np.argmin(vals))]]
        best = min(cands, key=lambda c: abs(c - phi_prev))
        refined = float(brentq(lambda p: _dphi_h(u, p, params),
                               best - 0.01, best + 0.01, xtol=1e-13)) \
            if _dphi_h(u, best - 0.01, params) * _dphi_h(u, best + 0.01, params) < 0 \
            else float(best)
        return refined, True

    prev_pos = prev_neg = 0.0
    for idx in order:
        u = u_grid[idx]
        prev = prev_pos if u >= 0 else prev_neg
        val, jumped = solve_near(u, prev)
        if jumped and abs(val - prev) > jump_tol:
            jump = True
        phi[idx] = val
        if u >= 0:
            prev_pos = val
        if u <= 0:
            prev_neg = val
    return phi, jump


@dataclass
class AngularSurface:
    """Mean-field landscape over (u, phi) plus the stationary-angle path."""

    u_grid: np.ndarray
    phi_grid: np.ndarray
    h_values: np.ndarray               # shape (len(u), len(phi))
    f_mf_values: np.ndarray
    stationary_phi: np.ndarray         # phi~(u)
    branch_jump: bool
    params: ModelParams
    fluct_values: np.ndarray = None
    stability_mask: np.ndarray = None


def angular_mean_field(params: ModelParams, *,
                       u_grid: np.ndarray | None = None,
                       phi_grid: np.ndarray | None = None) -> AngularSurface:
    """Mean-field surface h, F_mf and the continued stationary angle."""
    if params.s < 0.5:
        raise ValueError("angular representation needs s >= 1/2")
    if u_grid is None:
        u_hi = max(3.0, 3.0 * params.g * 2 * params.s / params.omega0)
        u_grid = np.linspace(-u_hi, u_hi, 241)
    if phi_grid is None:
        phi_grid = np.linspace(-np.pi, np.pi, 181)
    uu, pp = np.meshgrid(u_grid, phi_grid, indexing="ij")
    h = spin_energy_density(uu, pp, params)
    f_mf = mean_field_free_energy(uu, pp, params)
    phi_t, jump = stationary_angle(u_grid, params)
    return AngularSurface(u_grid=np.asarray(u_grid), phi_grid=np.asarray(phi_grid),
                          h_values=h, f_mf_values=f_mf, stationary_phi=phi_t,
                          branch_jump=jump, params=params)


def modified_instanton(params: ModelParams, **kwargs) -> InstantonSolution:
    """Instanton on the effective profile F_mf(u, phi~(u))."""

    def f_eff(u):
        u_arr = np.atleast_1d(np.asarray(u, dtype=float))
        phi, _ = stationary_angle(u_arr, params)
        out = mean_field_free_energy(u_arr, phi, params)
        return out if np.ndim(u) else float(out[0])

    profile = free_energy_profile("angular_mean_field", params, evaluate=f_eff)
    return instanton(profile, **kwargs)


# ---------------------------------------------------------------------------
# Gaussian fluctuations
# ---------------------------------------------------------------------------

def fluct_amplitude_theta(u, phi, params: ModelParams):
    """Out-of-plane amplitude A(u, phi) = 4 J s^2 cos^2 phi - h."""
    s = params.s
    return 4 * params.J * s ** 2 * np.cos(np.asarray(phi)) ** 2 \
        - spin_energy_density(u, phi, params)


def fluct_amplitude_phi(u, phi, k, params: ModelParams):
    """In-plane amplitude B_k = A - 8 J s^2 sin^2 phi cos k."""
    s = params.s
    return fluct_amplitude_theta(u, phi, params) \
        - 8 * params.J * s ** 2 * np.sin(np.asarray(phi)) ** 2 * np.cos(k)


def stability_condition(u, phi, params: ModelParams):
    """4 s J cos 2phi + omegaz cos phi - g u sin phi > 0 (A, B_k > 0 for all k)."""
    s = params.s
    phi = np.asarray(phi, dtype=float)
    return (4 * s * params.J * np.cos(2 * phi) + params.omegaz * np.cos(phi)
            - params.g * np.asarray(u, dtype=float) * np.sin(phi)) > 0


def fluctuation_free_energy(u, phi, params: ModelParams):
    """Closed-form F_fl(u, phi); NaN where the Gaussian action is unstable."""
    s = params.s
    a = np.asarray(fluct_amplitude_theta(u, phi, params), dtype=float)
    c = 8 * params.J * s ** 2 * np.sin(np.asarray(phi)) ** 2
    stable = np.asarray(stability_condition(u, phi, params))
    m = np.where(stable, 2 * c / np.where(a + c > 0, a + c, 1.0), 0.0)
    val = (1.0 / (np.pi * s)) * np.sqrt(np.where(stable, a * (a + c), 0.0)) \
        * ellipe(np.clip(m, 0.0, 1.0))
    return np.where(stable, val, np.nan)


def fluctuation_free_energy_quadrature(u, phi, params: ModelParams):
    """Momentum-quadrature oracle (1/2s) int dk/2pi sqrt(A B_k)."""
    if not np.asarray(stability_condition(u, phi, params)).all():
        raise ValueError("fluctuation free energy requested at an unstable point")
    a = float(fluct_amplitude_theta(u, phi, params))
    val, _ = quad(lambda k: math.sqrt(a * fluct_amplitude_phi(u, phi, k, params)),
                  -np.pi, np.pi, epsabs=1e-13, epsrel=1e-13, limit=200)
    return val / (2.0 * np.pi) / (2.0 * params.s)


@dataclass(frozen=True)
class FluctuationReport:
    n_stable: int
    n_total: int
    max_abs_fluct: float
    max_ratio_to_mean_field: float


def fluctuations(surface: AngularSurface,
                 params: ModelParams) -> tuple[AngularSurface, FluctuationReport]:
    """Fill the fluctuation grid and stability mask of an angular surface."""
    uu, pp = np.meshgrid(surface.u_grid, surface.phi_grid, indexing="ij")
    mask = stability_condition(uu, pp, params)
    f_fl = fluctuation_free_energy(uu, pp, params)
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = np.abs(f_fl) / np.abs(surface.f_mf_values)
    ratio = np.where(mask & np.isfinite(ratio), ratio, 0.0)
    report = FluctuationReport(
        n_stable=int(mask.sum()), n_total=int(mask.size),
        max_abs_fluct=float(np.nanmax(np.abs(np.where(mask, f_fl, 0.0)))),
        max_ratio_to_mean_field=float(ratio.max()),
    )
    filled = replace(surface, fluct_values=f_fl, stability_mask=mask)
    return filled, report


# ---------------------------------------------------------------------------
# Matsubara product identity
# ---------------------------------------------------------------------------

def matsubara_sinh_form(x) -> np.ndarray | float:
    """Closed form sinh(pi |x|) / (pi |x|) of the infinite product (1 at x=0)."""
    x = np.abs(np.asarray(x, dtype=float))
    with np.errstate(divide="ignore", invalid="ignore"):
        val = np.sinh(np.pi * x) / (np.pi * x)
    return np.where(x == 0, 1.0, val)


def matsubara_product(x: float, n_terms: int, *, tail_correction: bool = True) -> float:
    """Finite product prod_{n=1}^{n_terms} (1 + x^2/n^2).

    The truncated tail contributes the factor exp(sum_{n>N} log(1+x^2/n^2))
    ~= exp(x^2 psi'(N+1)); with ``tail_correction`` the product is multiplied
    by exp(x^2/(N+1/2)) (the integral estimate of that sum), which brings the
    finite product to the sinh form to O(x^4/N^3) instead of O(x^2/N).
    """
    n = np.arange(1, n_terms + 1, dtype=float)
    log_prod = np.log1p((x / n) ** 2).sum()
    if tail_correction:
        log_prod += x ** 2 / (n_terms + 0.5)
    return float(np.exp(log_prod))
