"""Lumped-element eigenmodes of a triple-leg stripline resonator (TSR).

Three identical LC-ladder legs (series inductance ``l``, shunt capacitance
``c`` per cell of length ``a0``) are joined at the center through a single
capacitor ``c0``.  In the charge-sum coordinates theta_{n,alpha} the circuit
is a generalized symmetric eigenproblem

    K v = omega^2 M v,    M = l * Identity,

where K collects the per-leg chain terms (theta_n - theta_{n+1})^2 / c with
a fixed far end theta_{N+1} = 0, plus the rank-one junction term
(sum_alpha theta_{1,alpha})^2 / c0.

Modes whose junction amplitudes sum to zero do not see the junction
capacitor and come in exactly degenerate pairs; modes with equal amplitude
on all three legs are non-degenerate.  In the continuum limit the two
families satisfy the transcendental conditions

    doublet:    tan(k L) = 1 / (k a0)
    symmetric:  tan(k L) = k a0 / ((k a0)^2 - 3 c / c0)

with L = N a0.  This module solves the discrete eigenproblem, classifies
and re-projects degenerate pairs onto the canonical leg patterns, finds the
continuum roots by bisection, and evaluates the position-dependent qubit
coupling of the fundamental doublet.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import eigh

# Canonical leg patterns of the degenerate doublet: the (+) mode has weight
# -2/sqrt(6) on leg 3, the (-) mode has none there.
A_PLUS = np.array([1.0, 1.0, -2.0]) / math.sqrt(6.0)
A_MINUS = np.array([1.0, -1.0, 0.0]) / math.sqrt(2.0)

#: Relative frequency threshold below which two modes count as degenerate.
DEGENERACY_RTOL = 1e-6


class BracketingError(RuntimeError):
    """Raised when a root bracket for a transcendental condition fails."""


@dataclass(frozen=True)
class CircuitParams:
    """Lumped-element description of the TSR.

    Parameters
    ----------
    nodes_per_leg : int
        Number N of LC cells per leg (N >= 2).
    unit_inductance, unit_capacitance : float
        Per-cell series inductance l and shunt capacitance c.
    central_capacitance : float
        Junction capacitor c0 joining the three legs.
    unit_length : float
        Cell length a0; the leg length is L = N * a0.
    """

    nodes_per_leg: int
    unit_inductance: float = 1.0
    unit_capacitance: float = 1.0
    central_capacitance: float = 1.0
    unit_length: float = 1.0

    def __post_init__(self):
        if self.nodes_per_leg < 2:
            raise ValueError(f"nodes_per_leg must be >= 2, got {self.nodes_per_leg}")
        for name in ("unit_inductance", "unit_capacitance",
                     "central_capacitance", "unit_length"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive, got {getattr(self, name)}")

    @property
    def leg_length(self) -> float:
        return self.nodes_per_leg * self.unit_length

    @property
    def phase_velocity(self) -> float:
        return self.unit_length / math.sqrt(self.unit_inductance * self.unit_capacitance)

    @property
    def fundamental_frequency(self) -> float:
        """omega0 = v_p * pi / (2 L) of the fundamental doublet (continuum)."""
        return self.phase_velocity * math.pi / (2.0 * self.leg_length)


@dataclass
class DoubletBasis:
    """Projected leg patterns of one degenerate pair (indices into the solution)."""

    index_plus: int
    index_minus: int
    pattern_plus: np.ndarray
    pattern_minus: np.ndarray


@dataclass
class ModeSolution:
    """Eigenmodes of the TSR, sorted by frequency.

    ``eigenvectors[:, j]`` holds the 3N node amplitudes of mode j, leg-major
    (leg 1 nodes 1..N, then leg 2, then leg 3), orthonormal under the
    inertia inner product v^T M v.  Degenerate pairs are re-projected so the
    first member follows the A+ leg pattern and the second A-.
    """

    params: CircuitParams
    frequencies: np.ndarray
    eigenvectors: np.ndarray
    classifications: list = field(default_factory=list)
    wavevectors: np.ndarray = None
    doublet_basis: list = field(default_factory=list)

    def junction_amplitudes(self, mode: int) -> np.ndarray:
        """Amplitudes theta_{1,alpha} of the three junction-adjacent nodes."""
        n = self.params.nodes_per_leg
        return self.eigenvectors[::n, mode][:3].copy()

    def leg_amplitudes(self, mode: int) -> np.ndarray:
        """Node amplitudes of one mode reshaped to (3, N)."""
        return self.eigenvectors[:, mode].reshape(3, self.params.nodes_per_leg)

    def node_positions(self) -> np.ndarray:
        """x coordinate of nodes 1..N; node 1 sits at the junction, x = 0."""
        n = self.params.nodes_per_leg
        return self.params.unit_length * np.arange(n)

    def fundamental_doublet(self) -> DoubletBasis:
        if not self.doublet_basis:
            raise ValueError("solution contains no complete degenerate pair")
        return self.doublet_basis[0]


def build_circuit_matrices(params: CircuitParams):
    """Assemble the inertia and stiffness matrices of the TSR.

    Returns
    -------
    (M, K) : pair of (3N, 3N) symmetric ndarrays
        M = l * Identity.  K is the quadratic form of the potential energy:
        per-leg chain terms with fixed end theta_{N+1} = 0 plus 1/c0 on
        every junction pair (1,alpha),(1,beta).  K is positive definite.
    """
    n = params.nodes_per_leg
    dim = 3 * n
    inv_c = 1.0 / params.unit_capacitance
    inv_c0 = 1.0 / params.central_capacitance

    m = params.unit_inductance * np.eye(dim)
    k = np.zeros((dim, dim))
    for leg in range(3):
        o = leg * n
        for i in range(n):
            # (theta_i - theta_{i+1})^2 / c with theta_{N+1} = 0
            k[o + i, o + i] += inv_c
            if i + 1 < n:
                k[o + i + 1, o + i + 1] += inv_c
                k[o + i, o + i + 1] -= inv_c
                k[o + i + 1, o + i] -= inv_c
    for a in range(3):
        for b in range(3):
            k[a * n, b * n] += inv_c0
    return m, k


def _bisect(f, lo: float, hi: float, rtol: float = 1e-12):
    flo, fhi = f(lo), f(hi)
    if flo == 0.0:
        return lo
    if fhi == 0.0:
        return hi
    if flo * fhi > 0:
        raise BracketingError(
            f"no sign change on bracket [{lo:.9g}, {hi:.9g}] "
            f"(f(lo)={flo:.3g}, f(hi)={fhi:.3g})")
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        fm = f(mid)
        if flo * fm <= 0:
            hi = mid
        else:
            lo, flo = mid, fm
        if hi - lo <= rtol * abs(mid):
            break
    return 0.5 * (lo + hi)


def continuum_wavevector(params: CircuitParams, branch: str, n: int = 1) -> float:
    """n-th positive root of the continuum mode condition for one branch.

    The doublet condition tan(kL) = 1/(k a0) and the symmetric condition
    tan(kL) = k a0 / ((k a0)^2 - 3c/c0) are rewritten with the tangent
    cleared, which removes the poles, and bisected to relative tolerance
    1e-12 on the bracket ((n-1) pi, (n-1/2) pi) / L resp.
    ((n-1/2) pi, n pi) / L.
    """
    if n < 1:
        raise ValueError(f"harmonic index must be >= 1, got {n}")
    length = params.leg_length
    a0 = params.unit_length
    if branch == "doublet":
        def f(k):
            return math.sin(k * length) * k * a0 - math.cos(k * length)
        lo = ((n - 1) * math.pi + 1e-9) / length
        hi = (n - 0.5) * math.pi / length
    elif branch == "symmetric":
        ratio = 3.0 * params.unit_capacitance / params.central_capacitance

        def f(k):
            return (math.sin(k * length) * ((k * a0) ** 2 - ratio)
                    - math.cos(k * length) * k * a0)
        lo = ((n - 0.5) * math.pi + 1e-9) / length
        hi = n * math.pi / length
    else:
        raise ValueError(f"branch must be 'doublet' or 'symmetric', got {branch!r}")
    return _bisect(f, lo, hi)


def _fit_wavevector(omega: float, params: CircuitParams) -> float:
    # invert the lattice dispersion omega = 2 (v_p/a0) sin(k a0 / 2)
    s = omega * params.unit_length / (2.0 * params.phase_velocity)
    return 2.0 / params.unit_length * math.asin(min(s, 1.0))


def _cluster_degenerate(freqs: np.ndarray):
    groups = [[0]]
    for i in range(1, len(freqs)):
        scale = max(abs(freqs[i]), abs(freqs[i - 1]))
        if abs(freqs[i] - freqs[i - 1]) <= DEGENERACY_RTOL * scale:
            groups[-1].append(i)
        else:
            groups.append([i])
    return groups


def solve_modes(params: CircuitParams, n_modes: int) -> ModeSolution:
    """Solve K v = omega^2 M v for the n_modes lowest modes and classify them.

    Degenerate pairs (relative split below 1e-6) are re-projected onto the
    (A+, A-) junction patterns using the leg-permutation symmetry, so that
    within each pair the first column has zero weight pattern -2/sqrt(6)
    on leg 3 and the second exactly zero.  Non-degenerate modes carry equal
    amplitude on all legs and are tagged 'symmetric'.
    """
    dim = 3 * params.nodes_per_leg
    if not 1 <= n_modes <= dim:
        raise ValueError(f"n_modes must be in [1, {dim}], got {n_modes}")
    m, k = build_circuit_matrices(params)
    # one extra mode so a pair straddling the cut is still recognized
    n_solve = min(n_modes + 1, dim)
    vals, vecs = eigh(k, m, subset_by_index=[0, n_solve - 1])
    freqs = np.sqrt(np.clip(vals, 0.0, None))

    n = params.nodes_per_leg
    classifications = [None] * n_solve
    doublets = []
    for group in _cluster_degenerate(freqs):
        if len(group) == 2:
            i, j = group
            p = vecs[::n, [i, j]]  # (3, 2) junction amplitudes of the pair
            c_plus, *_ = np.linalg.lstsq(p, A_PLUS, rcond=None)
            c_minus, *_ = np.linalg.lstsq(p, A_MINUS, rcond=None)
            w_plus = vecs[:, [i, j]] @ c_plus
            w_minus = vecs[:, [i, j]] @ c_minus
            w_plus /= math.sqrt(w_plus @ m @ w_plus)
            w_minus -= (w_plus @ m @ w_minus) * w_plus
            w_minus /= math.sqrt(w_minus @ m @ w_minus)
            pat_p = w_plus[::n] / np.linalg.norm(w_plus[::n])
            pat_m = w_minus[::n] / np.linalg.norm(w_minus[::n])
            if pat_p @ A_PLUS < 0:
                pat_p, w_plus = -pat_p, -w_plus
            if pat_m @ A_MINUS < 0:
                pat_m, w_minus = -pat_m, -w_minus
            vecs[:, i], vecs[:, j] = w_plus, w_minus
            classifications[i] = classifications[j] = "doublet"
            doublets.append(DoubletBasis(i, j, pat_p, pat_m))
        elif len(group) == 1:
            i = group[0]
            jamp = vecs[::n, i]
            pat = jamp / np.linalg.norm(jamp)
            if abs(abs(pat @ np.ones(3) / math.sqrt(3)) - 1.0) <= 1e-6:
                classifications[i] = "symmetric"
            elif i == n_solve - 1:
                # lone member of a pair cut off by the requested mode count
                classifications[i] = "doublet"
            else:
                raise RuntimeError(
                    f"non-degenerate mode {i} has unexpected junction pattern {pat}")
        else:
            raise RuntimeError(
                f"unexpected degeneracy cluster of size {len(group)} at modes {group}")

    wavevectors = np.array([_fit_wavevector(w, params) for w in freqs])
    sol = ModeSolution(
        params=params,
        frequencies=freqs[:n_modes],
        eigenvectors=vecs[:, :n_modes],
        classifications=classifications[:n_modes],
        wavevectors=wavevectors[:n_modes],
        doublet_basis=[d for d in doublets if d.index_minus < n_modes],
    )
    return sol


def _check_leg_x(params: CircuitParams, leg: int, x) -> np.ndarray:
    if leg not in (1, 2, 3):
        raise ValueError(f"leg must be 1, 2 or 3, got {leg}")
    x = np.asarray(x, dtype=float)
    if np.any(x < 0) or np.any(x > params.leg_length):
        raise ValueError(f"position outside [0, {params.leg_length}]")
    return x


def mode_function(solution: ModeSolution, mode: str, leg: int, x):
    """Continuum doublet mode function phi_mu(x) on one leg.

    phi_mu(x) = sqrt(2/(3L)) * A_leg^mu * sin(pi (x - L) / (2 L)), the
    normalized spatial profile of the fundamental doublet; used for display
    and as a cross-check of the discrete eigenvectors.
    """
    solution.fundamental_doublet()  # ensure the doublet is present
    params = solution.params
    x = _check_leg_x(params, leg, x)
    length = params.leg_length
    pattern = A_PLUS if mode == "+" else A_MINUS if mode == "-" else None
    if pattern is None:
        raise ValueError(f"mode must be '+' or '-', got {mode!r}")
    amp = math.sqrt(2.0 / (3.0 * length)) * pattern[leg - 1]
    return amp * np.sin(math.pi * (x - length) / (2.0 * length))


def coupling_strength(params: CircuitParams, solution: ModeSolution, leg: int, x):
    """Qubit coupling (g_plus, g_minus) at position x of one leg.

    g_mu(x) = -A_leg^mu * sqrt(omega0 a0 / (3 L c)) * cos(k0 (x - L)) with
    k0 = pi/(2L) and omega0 = v_p k0 (hbar = 1).  The coupling vanishes at
    the center voltage node x = 0 and peaks at the open leg end x = L; on
    leg 3 the (-) mode does not couple at all.
    """
    solution.fundamental_doublet()
    x = _check_leg_x(params, leg, x)
    length = params.leg_length
    k0 = math.pi / (2.0 * length)
    omega0 = params.phase_velocity * k0
    scale = math.sqrt(omega0 * params.unit_length
                      / (3.0 * length * params.unit_capacitance))
    envelope = np.cos(k0 * (x - length))
    g_plus = -A_PLUS[leg - 1] * scale * envelope
    g_minus = -A_MINUS[leg - 1] * scale * envelope
    return g_plus, g_minus


@dataclass
class CouplingProfile:
    """Sampled coupling strengths g_plus(x), g_minus(x) along one leg."""

    leg: int
    x: np.ndarray
    g_plus: np.ndarray
    g_minus: np.ndarray


def coupling_profile(params: CircuitParams, solution: ModeSolution, leg: int,
                     n_points: int = 201) -> CouplingProfile:
    x = np.linspace(0.0, params.leg_length, n_points)
    g_plus, g_minus = coupling_strength(params, solution, leg, x)
    return CouplingProfile(leg=leg, x=x, g_plus=np.asarray(g_plus),
                           g_minus=np.asarray(g_minus))
