"""Membership tests for the free sets and free operations.

Pure two-mode states and the root picture
-----------------------------------------
An N-particle two-mode state is a homogeneous degree-N polynomial in the
creation operators, so it factors into N linear forms ``alpha a1^dag + beta a2^dag``.
It is a linear-optical rotation of a Fock state exactly when those forms
span at most two directions and, if two, the directions are orthogonal
single-particle states.  Equivalently the state is an eigenvector of the
spin component ``J.n`` for some axis ``n``.

Root clustering is ill-conditioned for repeated roots (a root of multiplicity
m is perturbed by ~eps^(1/m)), so the verdict is taken from the spin picture:
the axis is the null direction of the spin covariance matrix, the state is
rotated onto that axis, and the residual is the weight it leaves outside a
single Fock state.  Roots and their clusters are reported as evidence.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Iterable, Sequence

import numpy as np

from .errors import InvalidArgumentsError
from .fock import (
    DensityMatrix,
    FockSpaceState,
    append_modes,
    apply_beamsplitter,
    apply_mode_unitary,
    create,
    expected_particle_number,
    partial_trace,
)

CLUSTER_TOL = 1e-6


@dataclass
class MembershipReport:
    verdict: bool
    evidence: dict = field(default_factory=dict)
    tolerance_used: float = 0.0
    uncertain: bool = False

    def to_dict(self) -> dict:
        return {
            "verdict": self.verdict,
            "uncertain": self.uncertain,
            "tolerance_used": self.tolerance_used,
            "evidence": _jsonable(self.evidence),
        }


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (complex, np.complexfloating)):
        if math.isinf(abs(obj)):
            return "inf"
        return [float(obj.real), float(obj.imag)]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, (np.floating, np.integer, np.bool_)):
        return obj.item()
    return obj


def _uncertain(residual: float, tol: float) -> bool:
    return tol / 10 <= residual <= tol


def is_delta_a(rho, tol: float = 1e-12) -> MembershipReport:
    """Diagonal in the Fock basis (across and within sectors)."""
    if isinstance(rho, FockSpaceState):
        rho = DensityMatrix.from_pure(rho)
    off = 0.0
    for (N, Np), blk in rho.blocks.items():
        a = np.abs(blk)
        if N == Np:
            a = a - np.diag(np.diag(a))
        off = max(off, float(a.max(initial=0.0)))
    return MembershipReport(off <= tol, {"max_off_diagonal": off}, tol, _uncertain(off, tol))


# pure two-mode Delta^B


def _sphere_point(z: complex) -> np.ndarray:
    """Stereographic image of a root y = z of P(1, y); infinity maps to the south pole."""
    if not np.isfinite(z):
        return np.array([0.0, 0.0, -1.0])
    d = 1 + abs(z) ** 2
    return np.array([2 * z.real / d, 2 * z.imag / d, (1 - abs(z) ** 2) / d])


def _chordal(p: np.ndarray, q: np.ndarray) -> float:
    return float(np.linalg.norm(p - q))


def _cluster(points: list[np.ndarray], tol: float) -> list[list[int]]:
    clusters: list[list[int]] = []
    for i, p in enumerate(points):
        for c in clusters:
            if any(_chordal(p, points[j]) <= tol for j in c):
                c.append(i)
                break
        else:
            clusters.append([i])
    return clusters


def creation_polynomial_roots(vec: np.ndarray) -> list[complex]:
    """Roots y of sum_k d_k y^k with d_k = c_k / sqrt((N-k)! k!); degree deficit -> inf."""
    N = len(vec) - 1
    k = np.arange(N + 1)
    lf = np.array([math.lgamma(x + 1) for x in range(N + 1)])
    scale = np.exp(-0.5 * (lf[N - k] + lf[k] - lf[N]))  # 1 / sqrt(C(N,k)) keeps magnitudes tame
    d = np.asarray(vec, dtype=complex) * scale
    thresh = 1e-12 * np.abs(d).max()
    top = N
    while top > 0 and abs(d[top]) <= thresh:
        top -= 1
    roots = list(np.roots(d[: top + 1][::-1])) if top > 0 else []
    return roots + [complex(np.inf)] * (N - top)


def spin_moments(vec: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """<J> and the symmetrized covariance of J for an N-particle two-mode vector."""
    N = len(vec) - 1
    k = np.arange(N + 1)
    jz = (N - 2 * k) / 2.0
    # a1^dag a2 |N-k, k> = sqrt((N-k+1) k) |N-k+1, k-1>
    jp = np.zeros((N + 1, N + 1))
    kk = k[1:]
    jp[kk - 1, kk] = np.sqrt((N - kk + 1.0) * kk)
    Jx = (jp + jp.T) / 2
    Jy = (jp - jp.T) / 2j
    Jz = np.diag(jz)
    ops = [Jx, Jy, Jz]
    v = np.asarray(vec, dtype=complex)
    mean = np.array([np.vdot(v, J @ v).real for J in ops])
    cov = np.empty((3, 3))
    for a in range(3):
        for b in range(3):
            sym = (ops[a] @ ops[b] + ops[b] @ ops[a]) / 2
            cov[a, b] = np.vdot(v, sym @ v).real - mean[a] * mean[b]
    return mean, cov


def _spinor_for_axis(n: np.ndarray) -> np.ndarray:
    """Single-particle state with Bloch vector ``n`` (J = a^dag sigma a / 2)."""
    theta = math.acos(max(-1.0, min(1.0, n[2])))
    phi = math.atan2(n[1], n[0])
    return np.array([math.cos(theta / 2), np.exp(1j * phi) * math.sin(theta / 2)])


def pure_in_delta_b(psi: FockSpaceState, tol: float = 1e-9) -> MembershipReport:
    """Whether a pure single-sector two-mode state is U|N-k, k> for a passive U."""
    if isinstance(psi, DensityMatrix):
        raise InvalidArgumentsError("mixed-state membership in Delta^B is not decided")
    if psi.modes != 2:
        raise InvalidArgumentsError("only two-mode states are supported")
    occupied = psi.occupied_sectors(tol=1e-15)
    if len(occupied) != 1:
        raise InvalidArgumentsError(f"state must occupy exactly one sector, found {occupied}")
    N = occupied[0]
    if N == 0:
        return MembershipReport(True, {"N": 0, "fock_residual": 0.0}, tol)
    vec = psi.sectors[N] / np.linalg.norm(psi.sectors[N])

    roots = creation_polynomial_roots(vec)
    points = [_sphere_point(z) for z in roots]
    clusters = _cluster(points, CLUSTER_TOL)

    mean, cov = spin_moments(vec)
    evals, evecs = np.linalg.eigh(cov)
    axis = evecs[:, 0]
    if mean @ axis < 0:
        axis = -axis
    u = _spinor_for_axis(axis)
    R = np.array([[np.conj(u[0]), np.conj(u[1])], [-u[1], u[0]]])
    rotated = apply_mode_unitary(FockSpaceState(2, {N: vec}), R).sectors[N]
    weights = np.abs(rotated) ** 2
    k_star = int(np.argmax(weights))
    fock_residual = max(0.0, 1.0 - float(weights[k_star]))

    north = _sphere_point(-u[0] / u[1]) if abs(u[1]) > 1e-300 else np.array([0.0, 0.0, -1.0])
    # roots of the axis factors sit at the pair {north, -north}
    spread = max((min(_chordal(p, north), _chordal(p, -north)) for p in points), default=0.0)
    evidence = {
        "N": N,
        "roots": roots,
        "root_clusters": [{"point": points[c[0]].tolist(), "multiplicity": len(c)} for c in clusters],
        "distinct_directions": len(clusters),
        "axis": axis.tolist(),
        "fock_index": k_star,
        "spin_variance_min": float(evals[0]),
        "fock_residual": fock_residual,
        "root_spread_from_axis": spread,
        "orthogonality_residual": fock_residual,
    }
    return MembershipReport(fock_residual <= tol, evidence, tol, _uncertain(fock_residual, tol))


# Kraus operators


def kraus_in_e_a(kraus_set: Sequence[np.ndarray], tol: float = 1e-12) -> MembershipReport:
    """Incoherent Kraus test: completeness and at most one nonzero per column."""
    ops = [np.asarray(K, dtype=complex) for K in kraus_set]
    if not ops:
        raise InvalidArgumentsError("empty Kraus set")
    shape = ops[0].shape
    if any(K.shape != shape for K in ops) or len(shape) != 2:
        raise InvalidArgumentsError("Kraus operators must share one 2-D shape")
    completeness = sum(K.conj().T @ K for K in ops)
    comp_res = float(np.abs(completeness - np.eye(shape[1])).max())
    bad_columns = []
    for b, K in enumerate(ops):
        nnz = (np.abs(K) > tol).sum(axis=0)
        bad_columns.extend((b, int(c)) for c in np.flatnonzero(nnz > 1))
    verdict = comp_res <= tol and not bad_columns
    evidence = {"completeness_residual": comp_res, "multi_entry_columns": bad_columns}
    return MembershipReport(verdict, evidence, tol, _uncertain(comp_res, tol))


def _pair_means(obj, pairs) -> list[float]:
    if isinstance(obj, list):
        return [math.fsum(p * expected_particle_number(s, pair) for p, s in obj) for pair in pairs]
    return [expected_particle_number(obj, pair) for pair in pairs]


def preserves_energy_density(
    op: Callable,
    mode_pairs: Sequence[Sequence[int]],
    probe_states: Iterable,
    tol: float = 1e-9,
) -> bool:
    """True if ``op`` keeps the expected particle number of every declared mode group.

    ``op`` maps a state to a state, a density matrix, or an ensemble given as
    a list of ``(probability, state)`` pairs.
    """
    for probe in probe_states:
        before = _pair_means(probe, mode_pairs)
        after = _pair_means(op(probe), mode_pairs)
        if any(abs(a - b) > tol for a, b in zip(before, after)):
            return False
    return True


# the photon-added beamsplitter isometry from F_2 into F_3


def hom_isometry(state: FockSpaceState) -> FockSpaceState:
    """Append an empty third mode, add one photon to it, mix modes 0 and 2 at 50:50.

    The beamsplitter is exp(i pi/4 (a_0^dag a_2 + h.c.)).  Adding a photon to an
    empty mode is norm-preserving, so this is an isometry on all of F_2.
    """
    if state.modes != 2:
        raise InvalidArgumentsError("the HOM isometry acts on two-mode states")
    lifted = create(append_modes(state, 1), 2)
    return apply_beamsplitter(lifted, 0, 2, math.pi / 4, math.pi / 2)


def hom_channel(state: FockSpaceState) -> DensityMatrix:
    """Isometry followed by tracing out the added mode."""
    return partial_trace(hom_isometry(state), keep=[0, 1])
