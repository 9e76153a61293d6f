"""Adiabatic quantum algorithms for exact cover-3.

Spins are stored as bits of the basis index: bit ``alpha - 1`` of ``b`` is
``z_alpha`` and ``sigma^z |z> = (2 z - 1) |z>``, so ``z = 0`` is the
``sigma^z = -1`` state. Hamiltonians are sums of Pauli words with real
coefficients and act matrix-free on dense state vectors: every word is a bit
flip mask times a diagonal phase, and words sharing a mask are combined.
"""

from __future__ import annotations

import logging
import math
from collections import defaultdict
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from enum import Enum
from functools import cached_property
from itertools import combinations
from typing import Iterable

import numpy as np
import pandas as pd
from scipy.linalg import eigh
from scipy.optimize import minimize_scalar
from scipy.sparse.linalg import ArpackNoConvergence, LinearOperator, eigsh

from quench_lab.common import DEFAULT_SEED
from quench_lab.errors import (
    ConvergenceError,
    DegeneracyError,
    DomainError,
    InvariantViolationError,
    PreconditionError,
)


logger = logging.getLogger(__name__)

MAX_QUBITS = 20
BRUTE_FORCE_CAP = 24
PHASE_CACHE_ENTRIES = 1 << 24
DENSE_AUTO_DIM = 64
RESIDUAL_RTOL = 1e-10
DEGENERACY_RTOL = 1e-8
CHORD_RTOL = 1e-9
XY_START = 1e-3
PAULI = frozenset("XYZ")

PauliWord = tuple[tuple[int, str], ...]


# --------------------------------------------------------------------------
# instances


@dataclass(frozen=True)
class EC3Instance:
    n: int
    clauses: tuple[tuple[int, int, int], ...]

    def __post_init__(self) -> None:
        if self.n < 1:
            raise DomainError("instance needs at least one bit")
        clauses = tuple(tuple(sorted(int(v) for v in clause)) for clause in self.clauses)
        for clause in clauses:
            if len(clause) != 3 or len(set(clause)) != 3:
                raise DomainError(f"clause {clause} must name three distinct variables")
            if clause[0] < 1 or clause[2] > self.n:
                raise DomainError(f"clause {clause} has a variable outside 1..{self.n}")
        if len(set(clauses)) != len(clauses):
            raise DomainError("duplicate clauses")
        object.__setattr__(self, "clauses", clauses)


def clause_penalties(inst: EC3Instance) -> np.ndarray:
    """``sum over clauses of 4 (z_a + z_b + z_c - 1)**2`` for every basis state."""
    if inst.n > BRUTE_FORCE_CAP:
        raise PreconditionError(f"brute force limited to n <= {BRUTE_FORCE_CAP}")
    index = np.arange(1 << inst.n, dtype=np.int64)
    total = np.zeros(1 << inst.n, dtype=np.int64)
    for a, b, c in inst.clauses:
        ones = ((index >> (a - 1)) & 1) + ((index >> (b - 1)) & 1) + ((index >> (c - 1)) & 1)
        total += 4 * (ones - 1) ** 2
    return total


def count_solutions(inst: EC3Instance) -> int:
    return int(np.count_nonzero(clause_penalties(inst) == 0))


def satisfying_assignments(inst: EC3Instance) -> list[tuple[int, ...]]:
    states = np.flatnonzero(clause_penalties(inst) == 0)
    return [tuple(int((b >> i) & 1) for i in range(inst.n)) for b in states]


def random_ec3_instance(
    n: int,
    m: int,
    seed: int = DEFAULT_SEED,
    require_unique_solution: bool = False,
    max_attempts: int = 10_000,
) -> EC3Instance:
    """Uniformly drawn distinct clauses; optionally rejection-sampled to a unique solution."""
    if n < 3:
        raise DomainError("exact cover-3 needs n >= 3")
    triples = list(combinations(range(1, n + 1), 3))
    if not 0 <= m <= len(triples):
        raise DomainError(f"clause count {m} outside 0..{len(triples)}")
    if require_unique_solution and n > BRUTE_FORCE_CAP:
        raise PreconditionError(f"uniqueness check needs n <= {BRUTE_FORCE_CAP}")
    rng = np.random.default_rng(seed)
    for attempt in range(1, max_attempts + 1):
        chosen = sorted(rng.choice(len(triples), size=m, replace=False).tolist())
        inst = EC3Instance(n, tuple(triples[i] for i in chosen))
        if not require_unique_solution:
            return inst
        if count_solutions(inst) == 1:
            logger.debug("unique-solution instance after %d attempts", attempt)
            return inst
    raise ConvergenceError(f"no unique-solution instance with n={n}, m={m} in {max_attempts} attempts")


# --------------------------------------------------------------------------
# operators


def sigma_z_total(n: int) -> np.ndarray:
    return 2 * np.bitwise_count(np.arange(1 << n, dtype=np.uint64)).astype(np.int64) - n


def sector_basis(n: int, sector: int) -> np.ndarray:
    """Basis indices with ``Sigma^z`` eigenvalue ``sector``."""
    if (sector + n) % 2 or abs(sector) > n:
        raise DomainError(f"Sigma^z = {sector} is not an eigenvalue for n={n}")
    return np.flatnonzero(sigma_z_total(n) == sector)


def _normalize_word(word: Iterable[tuple[int, str]]) -> PauliWord:
    sites: dict[int, str] = {}
    for site, op in word:
        if op not in PAULI:
            raise DomainError(f"unknown Pauli operator {op!r}")
        if site in sites:
            raise DomainError(f"site {site} appears twice in one word")
        sites[int(site)] = op
    return tuple(sorted(sites.items()))


@dataclass(frozen=True)
class SpinHamiltonian:
    """``sum c_w P_w`` over Pauli words ``P_w`` on ``n`` qubits (sites ``0..n-1``)."""

    n: int
    terms: tuple[tuple[PauliWord, float], ...]

    @classmethod
    def from_terms(cls, n: int, terms: Iterable[tuple[Iterable[tuple[int, str]], float]]) -> SpinHamiltonian:
        combined: dict[PauliWord, float] = defaultdict(float)
        for word, coeff in terms:
            key = _normalize_word(word)
            if any(site < 0 or site >= n for site, _ in key):
                raise DomainError(f"word {key} acts outside {n} qubits")
            combined[key] += float(coeff)
        return cls(n, tuple((word, c) for word, c in sorted(combined.items()) if c != 0.0))

    @property
    def dim(self) -> int:
        return 1 << self.n

    @property
    def norm_bound(self) -> float:
        """``sum |c_w|``, an upper bound on the operator norm."""
        return float(sum(abs(c) for _, c in self.terms))

    @property
    def dtype(self) -> type:
        odd_y = any(sum(op == "Y" for _, op in word) % 2 for word, _ in self.terms)
        return np.complex128 if odd_y else np.float64

    def _check_size(self) -> None:
        if self.n > MAX_QUBITS:
            raise DomainError(f"dense vectors limited to n <= {MAX_QUBITS} qubits")

    @cached_property
    def _signs(self) -> list[np.ndarray]:
        index = np.arange(self.dim, dtype=np.int64)
        return [(2 * ((index >> site) & 1) - 1).astype(np.int8) for site in range(self.n)]

    @cached_property
    def _groups(self) -> dict[int, list[tuple[PauliWord, float]]]:
        groups: dict[int, list[tuple[PauliWord, float]]] = defaultdict(list)
        for word, coeff in self.terms:
            mask = 0
            for site, op in word:
                if op in "XY":
                    mask |= 1 << site
            groups[mask].append((word, coeff))
        return dict(groups)

    def _phase(self, terms: list[tuple[PauliWord, float]]) -> np.ndarray:
        total = np.zeros(self.dim, dtype=self.dtype)
        for word, coeff in terms:
            phase = np.full(self.dim, coeff, dtype=self.dtype)
            y_count = 0
            for site, op in word:
                if op != "X":
                    phase *= self._signs[site]
                y_count += op == "Y"
            total += phase * (1j**y_count if self.dtype is np.complex128 else (-1) ** (y_count // 2))
        return total

    @cached_property
    def _cached_phases(self) -> dict[int, np.ndarray] | None:
        if len(self._groups) * self.dim > PHASE_CACHE_ENTRIES:
            return None
        return {mask: self._phase(terms) for mask, terms in self._groups.items()}

    def _phase_for(self, mask: int) -> np.ndarray:
        cache = self._cached_phases
        return cache[mask] if cache is not None else self._phase(self._groups[mask])

    def matvec(self, psi: np.ndarray) -> np.ndarray:
        self._check_size()
        psi = np.asarray(psi)
        out = np.zeros(self.dim, dtype=np.result_type(psi.dtype, self.dtype))
        index = np.arange(self.dim)
        for mask in self._groups:
            weighted = self._phase_for(mask) * psi
            out += weighted if mask == 0 else weighted[index ^ mask]
        return out

    def diagonal(self) -> np.ndarray:
        self._check_size()
        if 0 not in self._groups:
            return np.zeros(self.dim, dtype=self.dtype)
        return self._phase_for(0).copy()

    def to_dense(self, sector: int | None = None) -> np.ndarray:
        self._check_size()
        matrix = np.zeros((self.dim, self.dim), dtype=self.dtype)
        index = np.arange(self.dim)
        for mask in self._groups:
            matrix[index ^ mask, index] += self._phase_for(mask)
        if sector is None:
            return matrix
        basis = sector_basis(self.n, sector)
        return matrix[np.ix_(basis, basis)]

    def commutes_with_sigma_z(self) -> bool:
        """Exact check that every non-zero matrix element preserves the number of up spins."""
        self._check_size()
        index = np.arange(self.dim, dtype=np.uint64)
        counts = np.bitwise_count(index)
        for mask in self._groups:
            if mask == 0:
                continue
            phase = self._phase_for(mask)
            moved = np.bitwise_count(index ^ np.uint64(mask)) != counts
            if np.any(phase[moved] != 0):
                return False
        return True

    def as_linear_operator(self, sector: int | None = None) -> SpinOperator:
        return SpinOperator(self, None if sector is None else sector_basis(self.n, sector))

    def __add__(self, other: SpinHamiltonian) -> SpinHamiltonian:
        return combine(self, other, 1.0, 1.0)

    def __sub__(self, other: SpinHamiltonian) -> SpinHamiltonian:
        return combine(self, other, 1.0, -1.0)


class SpinOperator(LinearOperator):
    """A :class:`SpinHamiltonian` restricted to a set of basis states."""

    def __init__(self, h: SpinHamiltonian, basis: np.ndarray | None = None):
        self.h = h
        self.basis = basis
        size = h.dim if basis is None else len(basis)
        super().__init__(dtype=np.dtype(h.dtype), shape=(size, size))

    def embed(self, x: np.ndarray) -> np.ndarray:
        if self.basis is None:
            return x
        full = np.zeros(self.h.dim, dtype=np.result_type(x.dtype, self.dtype))
        full[self.basis] = x
        return full

    def _matvec(self, x: np.ndarray) -> np.ndarray:
        out = self.h.matvec(self.embed(np.ravel(x)))
        return out if self.basis is None else out[self.basis]

    def _adjoint(self) -> SpinOperator:
        return self


def combine(a: SpinHamiltonian, b: SpinHamiltonian, wa: float, wb: float) -> SpinHamiltonian:
    if a.n != b.n:
        raise DomainError(f"qubit counts differ: {a.n} vs {b.n}")
    terms = [(word, wa * c) for word, c in a.terms] + [(word, wb * c) for word, c in b.terms]
    return SpinHamiltonian.from_terms(a.n, terms)


# --------------------------------------------------------------------------
# exact cover Hamiltonians


class WeightRule(Enum):
    UNIT = "unit"
    CLAUSE_DEGREE = "clause-degree"


def build_h_out(inst: EC3Instance) -> SpinHamiltonian:
    """``sum over clauses of (s_a + s_b + s_c + 1)**2`` expanded into Pauli-Z words."""
    terms: list[tuple[PauliWord, float]] = [((), 4.0 * len(inst.clauses))]
    for clause in inst.clauses:
        sites = [v - 1 for v in clause]
        for i, j in combinations(sites, 2):
            terms.append((((i, "Z"), (j, "Z")), 2.0))
        for i in sites:
            terms.append((((i, "Z"),), 2.0))
    return SpinHamiltonian.from_terms(inst.n, terms)


def clause_degrees(inst: EC3Instance) -> np.ndarray:
    degrees = np.zeros(inst.n, dtype=int)
    for clause in inst.clauses:
        for v in clause:
            degrees[v - 1] += 1
    return degrees


def pair_weights(inst: EC3Instance) -> dict[tuple[int, int], int]:
    """``M_ab``: number of clauses containing both variables (0-based sites)."""
    weights: dict[tuple[int, int], int] = defaultdict(int)
    for clause in inst.clauses:
        for a, b in combinations(clause, 2):
            weights[(a - 1, b - 1)] += 1
    return dict(weights)


def build_h_in_x(inst: EC3Instance, weight_rule: WeightRule = WeightRule.CLAUSE_DEGREE) -> SpinHamiltonian:
    if weight_rule is WeightRule.UNIT:
        weights = np.ones(inst.n, dtype=int)
    else:
        weights = clause_degrees(inst)
        isolated = [i + 1 for i in np.flatnonzero(weights == 0)]
        if isolated:
            raise DegeneracyError(f"variables {isolated} appear in no clause; transverse field vanishes there")
    return SpinHamiltonian.from_terms(inst.n, [(((i, "X"),), float(w)) for i, w in enumerate(weights)])


def build_h_in_xy(inst: EC3Instance) -> SpinHamiltonian:
    """Ferromagnetic XY network ``-sum M_ab (X_a X_b + Y_a Y_b)`` on the clause graph."""
    terms = []
    for (a, b), weight in pair_weights(inst).items():
        terms.append((((a, "X"), (b, "X")), -float(weight)))
        terms.append((((a, "Y"), (b, "Y")), -float(weight)))
    h = SpinHamiltonian.from_terms(inst.n, terms)
    if inst.n <= 10 and not h.commutes_with_sigma_z():
        raise InvariantViolationError("XY network does not conserve Sigma^z")
    return h


def interpolate(h_in: SpinHamiltonian, h_out: SpinHamiltonian, g: float) -> SpinHamiltonian:
    """``(1 - g) H_in + g H_out``."""
    if not 0.0 <= g <= 1.0:
        raise DomainError(f"interpolation parameter {g} outside [0, 1]")
    return combine(h_in, h_out, 1.0 - g, g)


# --------------------------------------------------------------------------
# eigensolver


@dataclass(eq=False)
class Levels:
    energies: np.ndarray
    degenerate: tuple[bool, ...]
    vectors: np.ndarray
    basis: np.ndarray | None
    sector: int | None

    def full_vector(self, i: int, dim: int) -> np.ndarray:
        if self.basis is None:
            return self.vectors[:, i]
        full = np.zeros(dim, dtype=self.vectors.dtype)
        full[self.basis] = self.vectors[:, i]
        return full


def lowest_levels(
    h: SpinHamiltonian,
    k: int = 2,
    sector: int | None = None,
    method: str = "auto",
    seed: int = DEFAULT_SEED,
    max_iter: int = 500,
    basis: np.ndarray | None = None,
) -> Levels:
    """The ``k`` lowest eigenvalues (ascending) of ``h``, optionally inside one ``Sigma^z`` sector.

    ``basis`` restricts to an arbitrary invariant set of basis states instead
    (for example a parity sector); it excludes ``sector``.

    Small spaces (``dim <= 64`` under ``auto``) are diagonalized densely;
    larger ones go to ARPACK's implicitly restarted Lanczos (``eigsh``) on the
    matrix-free operator, started from a seeded vector. ``degenerate[i]`` flags
    ``E[i+1] - E[i] < 1e-8 * norm``.
    """
    if method not in {"auto", "lanczos", "dense"}:
        raise DomainError(f"unknown eigensolver method {method!r}")
    h._check_size()
    if sector is not None:
        if basis is not None:
            raise DomainError("pass either a Sigma^z sector or an explicit basis, not both")
        if not h.commutes_with_sigma_z():
            raise PreconditionError("sector restriction requested for an operator that does not conserve Sigma^z")
        basis = sector_basis(h.n, sector)
    op = SpinOperator(h, basis)
    dim = op.shape[0]
    if not 1 <= k <= dim:
        raise DomainError(f"cannot return {k} levels from a {dim}-dimensional space")
    norm = h.norm_bound

    if method == "dense" or (method == "auto" and dim <= DENSE_AUTO_DIM) or norm == 0 or k >= dim - 1:
        dense = h.to_dense() if basis is None else op.matmat(np.eye(dim, dtype=op.dtype))
        values, vectors = eigh(dense, subset_by_index=[0, k - 1])
    else:
        v0 = np.random.default_rng(seed).standard_normal(dim).astype(op.dtype)
        try:
            values, vectors = eigsh(op, k=k, which="SA", v0=v0, maxiter=max_iter, tol=0)
        except ArpackNoConvergence as exc:
            raise ConvergenceError(f"Lanczos did not converge for {k} levels of a {dim}-dimensional space") from exc
        order = np.argsort(values, kind="stable")
        values, vectors = values[order], vectors[:, order]
        residual = float(np.max(np.linalg.norm(op.matmat(vectors) - vectors * values, axis=0)))
        if residual > RESIDUAL_RTOL * norm:
            raise ConvergenceError(f"Lanczos residual {residual:.3g} exceeds {RESIDUAL_RTOL * norm:.3g}")
        logger.debug("Lanczos: %d levels of a %d-dimensional space, residual %.2e", k, dim, residual)

    flags = tuple(bool(values[i + 1] - values[i] < DEGENERACY_RTOL * norm) for i in range(k - 1))
    return Levels(np.asarray(values, dtype=float), flags, vectors, op.basis, sector)


# --------------------------------------------------------------------------
# gap scans


class SectorPolicy(Enum):
    FULL = "full"
    INITIAL = "initial"
    SOLUTION = "solution"


@dataclass(frozen=True)
class ScanConfig:
    points: int = 33
    policy: SectorPolicy = SectorPolicy.INITIAL
    refine_xatol: float = 5e-4
    method: str = "auto"
    seed: int = DEFAULT_SEED
    threads: int = 1


@dataclass(eq=False)
class GapScan:
    g: np.ndarray
    e0: np.ndarray
    e1: np.ndarray
    matrix_element: np.ndarray | None = None
    full_gap: np.ndarray | None = None
    sector: int | None = None
    policy: SectorPolicy = SectorPolicy.FULL
    coarse_points: int = field(default=0)

    @property
    def gap(self) -> np.ndarray:
        return self.e1 - self.e0

    @property
    def min_index(self) -> int:
        return int(np.argmin(self.gap))

    @property
    def min_gap(self) -> float:
        return float(self.gap[self.min_index])

    @property
    def g_min(self) -> float:
        return float(self.g[self.min_index])

    def to_frame(self) -> pd.DataFrame:
        frame = pd.DataFrame({"g": self.g, "e0": self.e0, "e1": self.e1, "gap": self.gap})
        if self.full_gap is not None:
            frame["full_gap"] = self.full_gap
        if self.matrix_element is not None:
            frame["matrix_element"] = self.matrix_element
        return frame


def _initial_sector(h_in: SpinHamiltonian, h_out: SpinHamiltonian, g: float, cfg: ScanConfig) -> int:
    h = interpolate(h_in, h_out, g)
    best_sector, best_energy = 0, math.inf
    for sector in range(-h.n, h.n + 1, 2):
        energy = lowest_levels(h, 1, sector, cfg.method, cfg.seed).energies[0]
        if energy < best_energy - DEGENERACY_RTOL * h.norm_bound:
            best_sector, best_energy = sector, energy
    return best_sector


def _solution_sector(h_out: SpinHamiltonian) -> int:
    diagonal = h_out.diagonal().real
    best = int(np.argmin(diagonal))
    return int(sigma_z_total(h_out.n)[best])


def gap_scan(h_in: SpinHamiltonian, h_out: SpinHamiltonian, cfg: ScanConfig = ScanConfig()) -> GapScan:
    """Lowest two levels along ``(1 - g) H_in + g H_out``.

    The coarse grid has ``cfg.points`` points on ``[g_start, 1]``; the bracket
    around the coarse minimum is refined by bounded minimization of the gap.
    When both operators conserve ``Sigma^z`` and the policy is not ``full``,
    the gap is taken inside one sector and the full-spectrum gap is reported
    alongside. ``g_start`` is ``1e-3`` when the ``H_in`` ground state is
    degenerate. Each point also carries ``|<1|H_out - H_in|0>|``.
    """
    if cfg.points < 16:
        raise DomainError("gap scans need at least 16 grid points")
    if h_in.n != h_out.n:
        raise DomainError(f"qubit counts differ: {h_in.n} vs {h_out.n}")
    conserving = h_in.commutes_with_sigma_z() and h_out.commutes_with_sigma_z()
    policy = cfg.policy if conserving else SectorPolicy.FULL

    start = 0.0
    if lowest_levels(h_in, 2, None, cfg.method, cfg.seed).degenerate[0]:
        start = XY_START
        logger.info("degenerate initial ground state; scan starts at g=%g", start)

    if policy is SectorPolicy.INITIAL:
        sector = _initial_sector(h_in, h_out, start, cfg)
    elif policy is SectorPolicy.SOLUTION:
        sector = _solution_sector(h_out)
    else:
        sector = None
    drive = h_out - h_in

    def evaluate(g: float) -> tuple[float, float, float, float]:
        h = interpolate(h_in, h_out, g)
        levels = lowest_levels(h, 2, sector, cfg.method, cfg.seed)
        ground = levels.full_vector(0, h.dim)
        excited = levels.full_vector(1, h.dim)
        element = abs(np.vdot(excited, drive.matvec(ground)))
        if sector is None:
            full = levels.energies[1] - levels.energies[0]
        else:
            full_levels = lowest_levels(h, 2, None, cfg.method, cfg.seed).energies
            full = full_levels[1] - full_levels[0]
        return levels.energies[0], levels.energies[1], float(element), float(full)

    grid = np.linspace(start, 1.0, cfg.points)
    if cfg.threads > 1:
        with ThreadPoolExecutor(max_workers=cfg.threads) as pool:
            rows = list(pool.map(evaluate, grid))
    else:
        rows = [evaluate(g) for g in grid]
    points = dict(zip(grid.tolist(), rows))

    def gap_at(g: float) -> float:
        g = float(g)
        if g not in points:
            points[g] = evaluate(g)
        return points[g][1] - points[g][0]

    gaps = np.array([row[1] - row[0] for row in rows])
    i = int(np.argmin(gaps))
    lo, hi = grid[max(i - 1, 0)], grid[min(i + 1, len(grid) - 1)]
    refined = minimize_scalar(
        gap_at,
        bounds=(lo, hi),
        method="bounded",
        options={"xatol": cfg.refine_xatol},
    )
    logger.debug("gap minimum refined to g=%.6f after %d evaluations", refined.x, refined.nfev)

    g_values = np.array(sorted(points))
    table = np.array([points[g] for g in g_values])
    scan = GapScan(
        g=g_values,
        e0=table[:, 0],
        e1=table[:, 1],
        matrix_element=table[:, 2],
        full_gap=table[:, 3] if sector is not None else None,
        sector=sector,
        policy=policy,
        coarse_points=cfg.points,
    )
    _check_chord(h_in, h_out, scan, cfg)
    return scan


def _check_chord(h_in: SpinHamiltonian, h_out: SpinHamiltonian, scan: GapScan, cfg: ScanConfig) -> None:
    """Concavity of the ground energy: ``E0(g) >= (1 - g) E0(0) + g E0(1)``."""
    e_in = lowest_levels(h_in, 1, scan.sector, cfg.method, cfg.seed).energies[0]
    e_out = lowest_levels(h_out, 1, scan.sector, cfg.method, cfg.seed).energies[0]
    chord = (1.0 - scan.g) * e_in + scan.g * e_out
    slack = CHORD_RTOL * (h_in.norm_bound + h_out.norm_bound)
    if np.any(scan.e0 < chord - slack):
        worst = float(np.max(chord - scan.e0))
        raise InvariantViolationError(f"ground energy falls {worst:.3g} below the endpoint chord")


def runtime_estimate(scan: GapScan, allow_crossing: bool = False) -> float:
    """``max_g |<1|dH/dg|0>| / gap**2``.

    A level crossing has no adiabatic runtime: it raises, or gives ``inf``
    with a warning when ``allow_crossing`` is set.
    """
    if scan.matrix_element is None:
        raise PreconditionError("scan carries no matrix elements")
    gap = scan.gap
    scale = max(float(np.max(np.abs(scan.e0))), float(np.max(np.abs(scan.e1))), 1.0)
    if np.any(gap <= DEGENERACY_RTOL * scale):
        g = float(scan.g[int(np.argmin(gap))])
        if allow_crossing:
            logger.warning("levels cross at g=%.6f (sector %s); runtime reported as inf", g, scan.sector)
            return math.inf
        raise DegeneracyError(f"levels cross at g={g:.6f}; no adiabatic runtime")
    return float(np.max(scan.matrix_element / gap**2))


# --------------------------------------------------------------------------
# scheme comparison


@dataclass(eq=False)
class SchemeComparison:
    table: pd.DataFrame
    medians: dict[str, float]
    wins: dict[str, int]


def compare_schemes(
    batch: list[EC3Instance],
    x_cfg: ScanConfig = ScanConfig(policy=SectorPolicy.FULL),
    xy_cfg: ScanConfig = ScanConfig(policy=SectorPolicy.SOLUTION),
    weight_rule: WeightRule = WeightRule.CLAUSE_DEGREE,
    threads: int = 1,
) -> SchemeComparison:
    """Minimum gap and runtime estimate of the transverse-field and XY schemes per instance."""
    for inst in batch:
        if inst.n > MAX_QUBITS:
            raise DomainError(f"instance with n={inst.n} exceeds the {MAX_QUBITS}-qubit cap")

    def run(item: tuple[int, EC3Instance]) -> dict[str, float]:
        index, inst = item
        h_out = build_h_out(inst)
        x_scan = gap_scan(build_h_in_x(inst, weight_rule), h_out, x_cfg)
        xy_scan = gap_scan(build_h_in_xy(inst), h_out, xy_cfg)
        xy_full = xy_scan.full_gap if xy_scan.full_gap is not None else xy_scan.gap
        return {
            "instance": index,
            "n": inst.n,
            "m": len(inst.clauses),
            "x_min_gap": x_scan.min_gap,
            "x_g_min": x_scan.g_min,
            "x_runtime": runtime_estimate(x_scan, allow_crossing=True),
            "xy_min_gap": xy_scan.min_gap,
            "xy_g_min": xy_scan.g_min,
            "xy_full_min_gap": float(np.min(xy_full)),
            "xy_sector": xy_scan.sector,
            "xy_runtime": runtime_estimate(xy_scan, allow_crossing=True),
        }

    items = list(enumerate(batch))
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            rows = list(pool.map(run, items))
    else:
        rows = [run(item) for item in items]
    table = pd.DataFrame(rows)
    if table.empty:
        return SchemeComparison(table, {}, {"x": 0, "xy": 0, "tie": 0})
    medians = {column: float(table[column].median()) for column in ("x_min_gap", "x_runtime", "xy_min_gap", "xy_runtime")}
    wins = {
        "xy": int((table["xy_runtime"] < table["x_runtime"]).sum()),
        "x": int((table["x_runtime"] < table["xy_runtime"]).sum()),
        "tie": int((table["x_runtime"] == table["xy_runtime"]).sum()),
    }
    return SchemeComparison(table, medians, wins)
