"""Bosonic Fock states on M modes, stored sector by sector.

Occupation ordering
-------------------
Within a particle-number sector the occupation vectors are listed in colex
order: sorted by the reversed tuple.  For two modes, sector ``N`` is therefore
``(N, 0), (N-1, 1), ..., (0, N)`` and index ``k`` is the occupation of mode 1
(0-based).  JSON amplitudes follow the same order.

Modes are 0-based throughout the Python API.
"""

from __future__ import annotations

import itertools
import json
import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Iterable, Mapping, Sequence

import numpy as np
from scipy.stats import unitary_group

from .errors import InvalidArgumentsError, ResourceLimitError
from .logspace import ProbabilityTable

NORM_TOL = 1e-12
PSD_TOL = 1e-10
BLOCK_TOL = 1e-12
MAX_SECTOR_DIM = 1_000_000


def sector_dimension(M: int, N: int) -> int:
    """Number of occupation vectors of ``M`` modes holding ``N`` particles."""
    if M < 1 or N < 0:
        raise InvalidArgumentsError(f"need M >= 1 and N >= 0, got M={M}, N={N}")
    return math.comb(N + M - 1, M - 1)


def _compositions(M: int, N: int):
    if M == 1:
        yield (N,)
        return
    for first in range(N, -1, -1):
        for rest in _compositions(M - 1, N - first):
            yield (first,) + rest


@lru_cache(maxsize=512)
def sector_basis(M: int, N: int) -> tuple[tuple[int, ...], ...]:
    """Occupation vectors of sector ``N`` in colex order."""
    dim = sector_dimension(M, N)
    if dim > MAX_SECTOR_DIM:
        raise ResourceLimitError(f"sector ({M} modes, {N} particles) has {dim} states")
    if M == 2:
        return tuple((N - k, k) for k in range(N + 1))
    return tuple(sorted(_compositions(M, N), key=lambda occ: occ[::-1]))


@lru_cache(maxsize=512)
def sector_index(M: int, N: int) -> dict[tuple[int, ...], int]:
    return {occ: i for i, occ in enumerate(sector_basis(M, N))}


@lru_cache(maxsize=256)
def _sector_occupations(M: int, N: int) -> np.ndarray:
    arr = np.array(sector_basis(M, N), dtype=np.int64).reshape(-1, M)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class FockSpaceState:
    """Pure state on ``modes`` bosonic modes.

    ``sectors`` maps a particle number to the dense amplitude vector over
    that sector's colex-ordered basis.  ``tail_mass_bound`` bounds the norm
    lost to truncation at ``truncation`` particles.
    """

    modes: int
    sectors: Mapping[int, np.ndarray]
    truncation: int | None = None
    tail_mass_bound: float = 0.0

    def __post_init__(self):
        if self.modes < 1:
            raise InvalidArgumentsError("a Fock state needs at least one mode")
        clean = {}
        for N in sorted(self.sectors):
            vec = np.array(self.sectors[N], dtype=complex).ravel()
            if vec.size != sector_dimension(self.modes, N):
                raise InvalidArgumentsError(
                    f"sector {N} on {self.modes} modes needs "
                    f"{sector_dimension(self.modes, N)} amplitudes, got {vec.size}"
                )
            vec.setflags(write=False)
            clean[int(N)] = vec
        object.__setattr__(self, "sectors", clean)
        if self.truncation is None:
            object.__setattr__(self, "truncation", max(clean, default=0))

    # construction helpers

    @classmethod
    def from_amplitudes(cls, modes: int, amplitudes: Mapping[Sequence[int], complex], **kw) -> FockSpaceState:
        sectors: dict[int, np.ndarray] = {}
        for occ, amp in amplitudes.items():
            occ = tuple(int(c) for c in occ)
            if len(occ) != modes or min(occ) < 0:
                raise InvalidArgumentsError(f"bad occupation vector {occ} for {modes} modes")
            N = sum(occ)
            if N not in sectors:
                sectors[N] = np.zeros(sector_dimension(modes, N), dtype=complex)
            sectors[N][sector_index(modes, N)[occ]] += amp
        return cls(modes, sectors, **kw)

    @classmethod
    def fock(cls, occ: Sequence[int]) -> FockSpaceState:
        return cls.from_amplitudes(len(occ), {tuple(occ): 1.0})

    @classmethod
    def vacuum(cls, modes: int) -> FockSpaceState:
        return cls.fock((0,) * modes)

    # queries

    def amplitude(self, occ: Sequence[int]) -> complex:
        occ = tuple(occ)
        vec = self.sectors.get(sum(occ))
        if vec is None:
            return 0j
        return complex(vec[sector_index(self.modes, sum(occ))[occ]])

    def items(self):
        """Iterate ``(occupation, amplitude)`` over stored amplitudes."""
        for N, vec in self.sectors.items():
            yield from zip(sector_basis(self.modes, N), vec)

    def sector_weights(self) -> dict[int, float]:
        return {N: float(np.vdot(v, v).real) for N, v in self.sectors.items()}

    def norm(self) -> float:
        return math.sqrt(math.fsum(self.sector_weights().values()))

    def occupied_sectors(self, tol: float = 0.0) -> list[int]:
        return [N for N, w in self.sector_weights().items() if w > tol]

    def normalized(self) -> FockSpaceState:
        nrm = self.norm()
        if nrm == 0:
            raise InvalidArgumentsError("cannot normalize the zero vector")
        return FockSpaceState(self.modes, {N: v / nrm for N, v in self.sectors.items()},
                              self.truncation, self.tail_mass_bound)

    def with_phase_convention(self) -> FockSpaceState:
        """Rotate the global phase so the first nonzero amplitude is real positive."""
        for N in sorted(self.sectors):
            nz = np.flatnonzero(np.abs(self.sectors[N]) > 0)
            if nz.size:
                a = self.sectors[N][nz[0]]
                ph = np.conj(a) / abs(a)
                return FockSpaceState(self.modes, {k: v * ph for k, v in self.sectors.items()},
                                      self.truncation, self.tail_mass_bound)
        return self

    def to_dict(self) -> dict:
        return {
            "modes": self.modes,
            "sectors": [
                {"N": N, "amplitudes": [[float(a.real), float(a.imag)] for a in vec]}
                for N, vec in self.sectors.items()
            ],
            "truncation": self.truncation,
            "tail_mass_bound": self.tail_mass_bound,
        }

    @classmethod
    def from_dict(cls, data: Mapping) -> FockSpaceState:
        sectors = {
            int(s["N"]): np.array([complex(re, im) for re, im in s["amplitudes"]])
            for s in data["sectors"]
        }
        return cls(int(data["modes"]), sectors, data.get("truncation"),
                   float(data.get("tail_mass_bound", 0.0)))

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_json(cls, text: str) -> FockSpaceState:
        return cls.from_dict(json.loads(text))


@dataclass(frozen=True)
class DensityMatrix:
    """Operator on Fock space stored as blocks between particle-number sectors.

    ``blocks[(N, N)]`` are the diagonal sector blocks.  Off-diagonal blocks
    ``(N, N')`` are present only for states with coherence between sectors;
    a missing off-diagonal block is zero.
    """

    modes: int
    blocks: Mapping[tuple[int, int], np.ndarray] = field(default_factory=dict)

    def __post_init__(self):
        clean = {}
        for (N, Np), mat in self.blocks.items():
            mat = np.array(mat, dtype=complex)
            shape = (sector_dimension(self.modes, N), sector_dimension(self.modes, Np))
            if mat.shape != shape:
                raise InvalidArgumentsError(f"block {(N, Np)} must have shape {shape}, got {mat.shape}")
            mat.setflags(write=False)
            clean[(int(N), int(Np))] = mat
        object.__setattr__(self, "blocks", clean)

    @classmethod
    def from_pure(cls, state: FockSpaceState, cross_sector: bool = True) -> DensityMatrix:
        sectors = [N for N, v in state.sectors.items() if np.any(v)]
        blocks = {}
        for N in sectors:
            for Np in sectors:
                if N == Np or cross_sector:
                    blocks[(N, Np)] = np.outer(state.sectors[N], np.conj(state.sectors[Np]))
        return cls(state.modes, blocks)

    @classmethod
    def from_ensemble(cls, ensemble: Iterable[tuple[float, FockSpaceState]]) -> DensityMatrix:
        acc: dict[tuple[int, int], np.ndarray] = {}
        modes = None
        for prob, psi in ensemble:
            modes = psi.modes if modes is None else modes
            for key, blk in cls.from_pure(psi).blocks.items():
                acc[key] = acc.get(key, 0) + prob * blk
        if modes is None:
            raise InvalidArgumentsError("empty ensemble")
        return cls(modes, acc)

    @property
    def sectors(self) -> list[int]:
        return sorted({N for N, _ in self.blocks} | {N for _, N in self.blocks})

    def block(self, N: int) -> np.ndarray:
        d = sector_dimension(self.modes, N)
        return self.blocks.get((N, N), np.zeros((d, d), dtype=complex))

    def is_block_diagonal(self, tol: float = 0.0) -> bool:
        return all(N == Np or np.max(np.abs(b), initial=0.0) <= tol for (N, Np), b in self.blocks.items())

    def sector_weights(self) -> dict[int, float]:
        return {N: float(np.trace(self.block(N)).real) for N in self.sectors}

    def trace(self) -> float:
        return math.fsum(self.sector_weights().values())

    def dense(self) -> tuple[list[tuple[int, ...]], np.ndarray]:
        """Full matrix over the concatenated sector bases (colex within sector)."""
        secs = self.sectors
        offsets, basis = {}, []
        for N in secs:
            offsets[N] = len(basis)
            basis.extend(sector_basis(self.modes, N))
        mat = np.zeros((len(basis), len(basis)), dtype=complex)
        for (N, Np), b in self.blocks.items():
            mat[offsets[N]:offsets[N] + b.shape[0], offsets[Np]:offsets[Np] + b.shape[1]] = b
        return basis, mat

    def eigenvalues(self) -> np.ndarray:
        if self.is_block_diagonal():
            vals = [np.linalg.eigvalsh(self.block(N)) for N in self.sectors]
            return np.concatenate(vals) if vals else np.zeros(0)
        return np.linalg.eigvalsh(self.dense()[1])

    def min_eigenvalue(self) -> float:
        ev = self.eigenvalues()
        return float(ev.min()) if ev.size else 0.0

    def is_valid(self) -> bool:
        herm = all(
            np.allclose(b, np.conj(self.blocks.get((Np, N), np.zeros(b.shape[::-1]))).T, atol=BLOCK_TOL)
            for (N, Np), b in self.blocks.items()
        )
        return herm and abs(self.trace() - 1) <= NORM_TOL and self.min_eigenvalue() >= -PSD_TOL

    def to_dict(self) -> dict:
        return {
            "modes": self.modes,
            "blocks": [
                {"N": N, "Nprime": Np, "matrix": [[[float(z.real), float(z.imag)] for z in row] for row in b]}
                for (N, Np), b in sorted(self.blocks.items())
            ],
        }

    @classmethod
    def from_dict(cls, data: Mapping) -> DensityMatrix:
        blocks = {}
        for b in data["blocks"]:
            mat = np.array([[complex(re, im) for re, im in row] for row in b["matrix"]])
            blocks[(int(b["N"]), int(b.get("Nprime", b["N"])))] = mat
        return cls(int(data["modes"]), blocks)


def expected_particle_number(state, mode_subset: Iterable[int]) -> float:
    """Expected number of particles found in ``mode_subset``."""
    subset = sorted(set(mode_subset))
    if not subset:
        return 0.0
    if isinstance(state, FockSpaceState):
        M = state.modes
        pieces = (np.abs(v) ** 2 for v in state.sectors.values())
        diags = {N: p for N, p in zip(state.sectors, pieces)}
    elif isinstance(state, DensityMatrix):
        M = state.modes
        diags = {N: np.diag(state.block(N)).real for N in state.sectors}
    elif hasattr(state, "expected_particle_number"):
        return state.expected_particle_number(subset)
    else:
        raise InvalidArgumentsError(f"unsupported state type {type(state).__name__}")
    if subset[0] < 0 or subset[-1] >= M:
        raise InvalidArgumentsError(f"modes {subset} out of range for {M} modes")
    terms = []
    for N, p in diags.items():
        counts = _sector_occupations(M, N)[:, subset].sum(axis=1)
        terms.extend((p * counts).tolist())
    return math.fsum(terms)


# linear optics


def _linear_form_power_product(S: np.ndarray, occ: Sequence[int]) -> dict[tuple[int, ...], complex]:
    """Expand prod_k (sum_l S[l,k] x_l)^{occ_k} as {exponent tuple: coefficient}."""
    M = S.shape[0]
    poly: dict[tuple[int, ...], complex] = {(0,) * M: 1.0 + 0j}
    for k, mk in enumerate(occ):
        col = [(l, S[l, k]) for l in range(M) if S[l, k] != 0]
        for _ in range(mk):
            nxt: dict[tuple[int, ...], complex] = {}
            for exps, c in poly.items():
                for l, s in col:
                    e = exps[:l] + (exps[l] + 1,) + exps[l + 1:]
                    nxt[e] = nxt.get(e, 0) + c * s
            poly = nxt
    return poly


def sector_action(S: np.ndarray, N: int) -> np.ndarray:
    """Matrix of the unitary induced by single-particle map ``S`` on sector ``N``.

    ``S[l, k]`` is the amplitude of mode ``l`` in the image of mode ``k``:
    ``a_k^dag -> sum_l S[l,k] a_l^dag``.  Columns are built by expanding the
    creation-operator monomial of each input occupation vector.
    """
    S = np.asarray(S, dtype=complex)
    M = S.shape[0]
    basis = sector_basis(M, N)
    index = sector_index(M, N)
    lf = np.array([math.lgamma(c + 1) for c in range(N + 1)])
    out = np.zeros((len(basis), len(basis)), dtype=complex)
    for col, occ in enumerate(basis):
        log_in = sum(lf[c] for c in occ)
        for exps, coef in _linear_form_power_product(S, occ).items():
            log_out = sum(lf[c] for c in exps)
            out[index[exps], col] += coef * math.exp(0.5 * (log_out - log_in))
    return out


def apply_mode_unitary(state: FockSpaceState, S: np.ndarray, modes: Sequence[int] | None = None) -> FockSpaceState:
    """Apply the passive linear-optical unitary with single-particle matrix ``S``.

    ``S`` acts on ``modes`` (all modes when omitted) and as identity elsewhere.
    """
    S = np.asarray(S, dtype=complex)
    M = state.modes
    if modes is None:
        modes = list(range(M))
    modes = list(modes)
    if S.shape != (len(modes), len(modes)):
        raise InvalidArgumentsError(f"matrix shape {S.shape} does not match {len(modes)} modes")
    if len(set(modes)) != len(modes) or min(modes) < 0 or max(modes) >= M:
        raise InvalidArgumentsError(f"invalid mode list {modes}")
    full = np.eye(M, dtype=complex)
    full[np.ix_(modes, modes)] = S
    sectors = {N: sector_action(full, N) @ v if N > 0 else v.copy() for N, v in state.sectors.items()}
    return FockSpaceState(M, sectors, state.truncation, state.tail_mass_bound)


def beamsplitter_matrix(M: int, i: int, j: int, theta: float, phase: float) -> np.ndarray:
    """Single-particle matrix of exp(theta (e^{i phase} a_i^dag a_j - h.c.))."""
    S = np.eye(M, dtype=complex)
    c, s = math.cos(theta), math.sin(theta)
    S[i, i] = c
    S[j, j] = c
    S[i, j] = np.exp(1j * phase) * s
    S[j, i] = -np.exp(-1j * phase) * s
    return S


def apply_beamsplitter(state: FockSpaceState, i: int, j: int, theta: float, phase: float = 0.0) -> FockSpaceState:
    """Two-mode beamsplitter ``exp(theta (e^{i phase} a_i^dag a_j - e^{-i phase} a_j^dag a_i))``.

    With ``theta = pi/4, phase = pi/2`` this is ``exp(i pi/4 (a_i^dag a_j + h.c.))``.
    """
    M = state.modes
    if i == j:
        raise InvalidArgumentsError("beamsplitter needs two distinct modes")
    if not (0 <= i < M and 0 <= j < M):
        raise InvalidArgumentsError(f"modes {i}, {j} out of range for {M} modes")
    return apply_mode_unitary(state, beamsplitter_matrix(M, i, j, theta, phase))


@dataclass(frozen=True)
class LinearOpticalUnitary:
    """Number-conserving passive unitary given by its single-particle matrix."""

    matrix: np.ndarray

    def __call__(self, state: FockSpaceState) -> FockSpaceState:
        return apply_mode_unitary(state, self.matrix)

    def sector_matrix(self, N: int) -> np.ndarray:
        return sector_action(self.matrix, N)


def random_number_conserving_unitary(M: int = 2, seed=None, identity: bool = False) -> LinearOpticalUnitary:
    """Haar-random element of U(M) lifted to Fock space (only M = 2 is supported)."""
    if M != 2:
        raise InvalidArgumentsError("only two-mode unitaries are supported")
    if identity:
        return LinearOpticalUnitary(np.eye(2, dtype=complex))
    rng = np.random.default_rng(seed)
    return LinearOpticalUnitary(unitary_group.rvs(2, random_state=rng))


def append_modes(state: FockSpaceState, extra: int = 1) -> FockSpaceState:
    """Embed into ``modes + extra`` modes with the new modes empty."""
    amps = {occ + (0,) * extra: a for occ, a in state.items() if a != 0}
    return FockSpaceState.from_amplitudes(state.modes + extra, amps,
                                          truncation=state.truncation, tail_mass_bound=state.tail_mass_bound)


def create(state: FockSpaceState, mode: int) -> FockSpaceState:
    """Apply the creation operator ``a_mode^dag`` (result not renormalized)."""
    amps = {}
    for occ, a in state.items():
        if a == 0:
            continue
        new = occ[:mode] + (occ[mode] + 1,) + occ[mode + 1:]
        amps[new] = a * math.sqrt(occ[mode] + 1)
    return FockSpaceState.from_amplitudes(state.modes, amps)


# reductions


def _as_density(obj) -> DensityMatrix:
    if isinstance(obj, DensityMatrix):
        return obj
    if isinstance(obj, FockSpaceState):
        return DensityMatrix.from_pure(obj)
    raise InvalidArgumentsError(f"unsupported state type {type(obj).__name__}")


def partial_trace(obj, keep: Iterable[int]) -> DensityMatrix:
    """Reduced state on the modes in ``keep`` (listed in increasing order)."""
    keep = sorted(set(keep))
    M = obj.modes
    if not keep:
        raise InvalidArgumentsError("keep must contain at least one mode")
    if keep[0] < 0 or keep[-1] >= M:
        raise InvalidArgumentsError(f"modes {keep} out of range for {M} modes")
    if len(keep) == M:
        return _as_density(obj)
    env = [m for m in range(M) if m not in keep]
    K = len(keep)

    if isinstance(obj, FockSpaceState):
        # group amplitudes by environment occupation: rho = sum_e |v_e><v_e|
        groups: dict[tuple[int, ...], dict[int, np.ndarray]] = {}
        for N, vec in obj.sectors.items():
            occs = _sector_occupations(M, N)
            for occ, a in zip(occs, vec):
                if a == 0:
                    continue
                e = tuple(occ[env])
                kept = tuple(int(c) for c in occ[keep])
                n = sum(kept)
                slot = groups.setdefault(e, {})
                if n not in slot:
                    slot[n] = np.zeros(sector_dimension(K, n), dtype=complex)
                slot[n][sector_index(K, n)[kept]] += a
        blocks: dict[tuple[int, int], np.ndarray] = {}
        for slot in groups.values():
            for n, v in slot.items():
                for n2, w in slot.items():
                    blocks[(n, n2)] = blocks.get((n, n2), 0) + np.outer(v, np.conj(w))
        return DensityMatrix(K, {k: b for k, b in blocks.items() if k[0] == k[1] or np.any(np.abs(b) > 1e-15)})

    rho = _as_density(obj)
    basis, mat = rho.dense()
    pos = {occ: i for i, occ in enumerate(basis)}
    by_env: dict[tuple[int, ...], list[tuple[tuple[int, ...], int]]] = {}
    for occ, i in pos.items():
        by_env.setdefault(tuple(occ[m] for m in env), []).append((tuple(occ[m] for m in keep), i))
    blocks = {}
    for members in by_env.values():
        for ka, ia in members:
            na = sum(ka)
            for kb, ib in members:
                if mat[ia, ib] == 0:
                    continue
                nb = sum(kb)
                if (na, nb) not in blocks:
                    blocks[(na, nb)] = np.zeros((sector_dimension(K, na), sector_dimension(K, nb)), dtype=complex)
                blocks[(na, nb)][sector_index(K, na)[ka], sector_index(K, nb)[kb]] += mat[ia, ib]
    return DensityMatrix(K, {k: b for k, b in blocks.items() if k[0] == k[1] or np.any(np.abs(b) > 1e-15)})


def dephase_fock(obj) -> ProbabilityTable:
    """Fock-basis measurement statistics (the fully dephased state)."""
    if isinstance(obj, FockSpaceState):
        labels, probs = [], []
        for N, vec in obj.sectors.items():
            labels.extend(sector_basis(obj.modes, N))
            probs.append(np.abs(vec) ** 2)
        return ProbabilityTable.from_probabilities(labels, np.concatenate(probs) if probs else [])
    if isinstance(obj, DensityMatrix):
        labels, probs = [], []
        for N in obj.sectors:
            labels.extend(sector_basis(obj.modes, N))
            probs.append(np.clip(np.diag(obj.block(N)).real, 0.0, None))
        return ProbabilityTable.from_probabilities(labels, np.concatenate(probs) if probs else [])
    if hasattr(obj, "dephased"):
        return obj.dephased()
    raise InvalidArgumentsError(f"unsupported state type {type(obj).__name__}")


def all_occupations(M: int, N_max: int):
    """Every occupation vector with at most ``N_max`` particles, sector by sector."""
    return itertools.chain.from_iterable(sector_basis(M, N) for N in range(N_max + 1))
