"""Symmetry-breaking quench of a spin-1 condensate and vortex statistics.

The transverse magnetization ``psi = F_x + i F_y`` is linearized around the
polar state. Each Fourier mode of ``psi`` is an oscillator with
``omega2(k) = m2 + c2 k**2`` and ``m2 = q - q_crit``; quenching ``q`` below
``q_crit = 2 |c_2| rho`` turns the long-wavelength modes unstable. Vortices
of the resulting field are found from wrapped phase differences on lattice
plaquettes.
"""

from __future__ import annotations

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace

import numpy as np
import pandas as pd
import statsmodels.api as sm

from quench_lab.common import DEFAULT_SEED, derive_seed
from quench_lab.errors import (
    DomainError,
    InvariantViolationError,
    PreconditionError,
    SingularFitError,
    ZeroFieldError,
)


logger = logging.getLogger(__name__)

TWO_PI = 2.0 * math.pi


def critical_zeeman(c2: float, density: float) -> float:
    return 2.0 * abs(c2) * density


@dataclass(frozen=True)
class SpinorQuenchParams:
    L: int = 64
    a: float = 1.0
    q_initial: float = 2.0
    q_final: float = 0.0
    spin_coupling: float = -0.5
    density: float = 1.0
    stiffness: float = 1.0
    t_grow: float = 6.0
    seed: int = DEFAULT_SEED
    cutoff_k: float | None = None

    def __post_init__(self) -> None:
        if self.L < 16 or self.L % 2:
            raise DomainError(f"lattice size L must be even and >= 16, got {self.L}")
        if self.a <= 0 or self.stiffness <= 0:
            raise DomainError("lattice spacing and stiffness must be positive")
        if self.t_grow < 0:
            raise DomainError("growth time must be non-negative")
        if self.m2_initial <= 0:
            raise PreconditionError(f"pre-quench mass {self.m2_initial} <= 0: no initial vacuum")
        if self.m2_final >= 0:
            raise PreconditionError(f"post-quench mass {self.m2_final} >= 0: no unstable modes")

    @property
    def q_crit(self) -> float:
        return critical_zeeman(self.spin_coupling, self.density)

    @property
    def m2_initial(self) -> float:
        return self.q_initial - self.q_crit

    @property
    def m2_final(self) -> float:
        return self.q_final - self.q_crit

    def lattice_k2(self) -> np.ndarray:
        """Lattice ``k**2`` on the FFT grid, shape ``(L, L)``."""
        k = TWO_PI * np.fft.fftfreq(self.L, d=self.a)
        s = np.sin(0.5 * k * self.a) ** 2
        return (4.0 / self.a**2) * (s[:, None] + s[None, :])


def _growth_factors(p: SpinorQuenchParams, k2: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Return ``(omega_in, C, S)`` with ``Q(T) = C Q0 + S P0``."""
    omega_in = np.sqrt(p.m2_initial + p.stiffness * k2)
    w2 = p.m2_final + p.stiffness * k2
    T = p.t_grow
    C = np.ones_like(k2)
    S = np.full_like(k2, T)
    unstable, stable = w2 < 0, w2 > 0
    kappa = np.sqrt(-w2[unstable])
    C[unstable] = np.cosh(kappa * T)
    S[unstable] = np.sinh(kappa * T) / kappa
    omega = np.sqrt(w2[stable])
    C[stable] = np.cos(omega * T)
    S[stable] = np.sin(omega * T) / omega
    if p.cutoff_k is not None:
        frozen = omega_in > p.cutoff_k
        C[frozen] = 1.0
        S[frozen] = 0.0
    return omega_in, C, S


def mode_variance(p: SpinorQuenchParams, k2) -> np.ndarray | float:
    """``<|Q(T)|^2>`` of the mode at ``k2`` after growing from the pre-quench vacuum."""
    k2_arr = np.atleast_1d(np.asarray(k2, dtype=float))
    omega_in, C, S = _growth_factors(p, k2_arr)
    variance = C**2 / (2.0 * omega_in) + S**2 * omega_in / 2.0
    return float(variance[0]) if np.ndim(k2) == 0 else variance


@dataclass(eq=False)
class SpinorFieldSample:
    psi: np.ndarray
    params: SpinorQuenchParams

    @property
    def seed(self) -> int:
        return self.params.seed


def sample_post_quench_field(p: SpinorQuenchParams) -> SpinorFieldSample:
    """Draw the pre-quench vacuum mode by mode and grow it for ``t_grow``."""
    k2 = p.lattice_k2()
    omega_in, C, S = _growth_factors(p, k2)
    rng = np.random.default_rng(p.seed)
    noise = rng.standard_normal((4, p.L, p.L))
    q0 = (noise[0] + 1j * noise[1]) * np.sqrt(0.25 / omega_in)
    p0 = (noise[2] + 1j * noise[3]) * np.sqrt(0.25 * omega_in)
    psi = np.fft.ifft2(C * q0 + S * p0, norm="ortho")
    if not np.all(np.isfinite(psi)):
        raise DomainError("growth overflowed; reduce t_grow")
    return SpinorFieldSample(psi, p)


# --------------------------------------------------------------------------
# vortices


def wrap_phase(d: np.ndarray) -> np.ndarray:
    """Map phase differences into (-pi, pi]."""
    return math.pi - np.mod(math.pi - d, TWO_PI)


def _edge_phases(psi: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Wrapped differences along +x (axis 0) and +y (axis 1), and a zero-site mask."""
    theta = np.angle(psi)
    wx = wrap_phase(np.roll(theta, -1, axis=0) - theta)
    wy = wrap_phase(np.roll(theta, -1, axis=1) - theta)
    return wx, wy, psi == 0


def _corner_zero(zero: np.ndarray) -> np.ndarray:
    return zero | np.roll(zero, -1, axis=0) | np.roll(zero, -1, axis=1) | np.roll(zero, (-1, -1), axis=(0, 1))


def plaquette_charges(psi: np.ndarray, periodic: bool = True) -> tuple[np.ndarray, np.ndarray]:
    """Integer charge of every plaquette and the mask of plaquettes with four non-zero corners.

    Plaquette ``(i, j)`` has corners ``(i, j), (i+1, j), (i+1, j+1), (i, j+1)``
    and is traversed counterclockwise. With ``periodic=False`` the last row
    and column, which close through the boundary, are marked invalid.
    """
    wx, wy, zero = _edge_phases(psi)
    circulation = wx + np.roll(wy, -1, axis=0) - np.roll(wx, -1, axis=1) - wy
    charges = np.rint(circulation / TWO_PI).astype(int)
    valid = ~_corner_zero(zero)
    if not periodic:
        valid[-1, :] = False
        valid[:, -1] = False
    charges[~valid] = 0
    return charges, valid


@dataclass(frozen=True)
class Vortex:
    x: float
    y: float
    charge: int


def detect_vortices(f: SpinorFieldSample | np.ndarray, periodic: bool = True) -> list[Vortex]:
    psi = f.psi if isinstance(f, SpinorFieldSample) else np.asarray(f)
    a = f.params.a if isinstance(f, SpinorFieldSample) else 1.0
    charges, valid = plaquette_charges(psi, periodic)
    skipped = int(np.count_nonzero(_corner_zero(psi == 0)))
    if skipped:
        logger.warning("skipped %d plaquettes with a zero-field corner", skipped)
    rows, cols = np.nonzero(charges)
    return [Vortex((i + 0.5) * a, (j + 0.5) * a, int(charges[i, j])) for i, j in zip(rows, cols)]


def disc_mask(shape: tuple[int, int], center: tuple[float, float], radius: float, a: float = 1.0) -> np.ndarray:
    """Plaquettes whose centers lie within ``radius`` of ``center`` (minimum-image distance)."""
    lx, ly = shape[0] * a, shape[1] * a
    x = (np.arange(shape[0]) + 0.5) * a - center[0]
    y = (np.arange(shape[1]) + 0.5) * a - center[1]
    x -= lx * np.rint(x / lx)
    y -= ly * np.rint(y / ly)
    return x[:, None] ** 2 + y[None, :] ** 2 < radius * radius


def _disc(f: SpinorFieldSample, center, R: float) -> tuple[np.ndarray, tuple[float, float]]:
    L, a = f.params.L, f.params.a
    if not 0 < R <= 0.5 * L * a:
        raise DomainError(f"radius {R} must lie in (0, {0.5 * L * a}]")
    center = (0.5 * L * a, 0.5 * L * a) if center is None else (float(center[0]), float(center[1]))
    return disc_mask(f.psi.shape, center, R, a), center


def winding_number(f: SpinorFieldSample, center: tuple[float, float] | None = None, R: float = 8.0) -> int:
    """Net plaquette charge inside the disc of radius ``R``."""
    mask, center = _disc(f, center, R)
    charges, valid = plaquette_charges(f.psi)
    bad = int(np.count_nonzero(mask & ~valid))
    if bad:
        raise ZeroFieldError(f"{bad} plaquettes with zero-field corners inside the disc at {center}, R={R}")
    return int(charges[mask].sum())


def boundary_winding(f: SpinorFieldSample, center: tuple[float, float] | None = None, R: float = 8.0) -> int:
    """Winding from the phase circulation along the boundary of the same plaquette set."""
    mask, center = _disc(f, center, R)
    wx, wy, zero = _edge_phases(f.psi)
    m = mask.astype(int)
    cx = m - np.roll(m, 1, axis=1)
    cy = np.roll(m, 1, axis=0) - m
    edge_zero_x = zero | np.roll(zero, -1, axis=0)
    edge_zero_y = zero | np.roll(zero, -1, axis=1)
    if np.any((cx != 0) & edge_zero_x) or np.any((cy != 0) & edge_zero_y):
        raise ZeroFieldError(f"zero field on the disc boundary at {center}, R={R}")
    circulation = float(np.sum(cx * wx) + np.sum(cy * wy))
    return int(np.rint(circulation / TWO_PI))


# --------------------------------------------------------------------------
# statistics


@dataclass(eq=False)
class WindingReport:
    radii: np.ndarray
    n_mean: np.ndarray
    n_mean_se: np.ndarray
    n_sq_mean: np.ndarray
    n_sq_se: np.ndarray
    samples: int

    @property
    def degenerate(self) -> bool:
        return self.samples < 2

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame(
            {
                "R": self.radii,
                "n_mean": self.n_mean,
                "n_mean_se": self.n_mean_se,
                "n_sq_mean": self.n_sq_mean,
                "n_sq_se": self.n_sq_se,
                "samples": self.samples,
            }
        )


def _sample_windings(p: SpinorQuenchParams, radii: list[float], center, check_identity: bool) -> np.ndarray:
    f = sample_post_quench_field(p)
    charges, valid = plaquette_charges(f.psi)
    if check_identity and valid.all() and int(charges.sum()) != 0:
        raise InvariantViolationError(f"seed {p.seed}: net charge {int(charges.sum())} on a periodic box")
    windings = np.empty(len(radii), dtype=np.int64)
    for i, R in enumerate(radii):
        windings[i] = winding_number(f, center, R)
        if check_identity and windings[i] != boundary_winding(f, center, R):
            raise InvariantViolationError(f"seed {p.seed}, R={R}: charge sum differs from boundary circulation")
    return windings


def winding_statistics(
    p: SpinorQuenchParams,
    radii,
    samples: int,
    seed: int | None = None,
    center: tuple[float, float] | None = None,
    threads: int = 1,
    check_identity: bool = True,
) -> WindingReport:
    """Monte-Carlo mean and mean square of the disc winding number per radius.

    Sample ``s`` uses the seed ``derive_seed(seed, s)``; results are reduced
    in sample order so any thread count gives the same report.
    """
    radii = [float(R) for R in radii]
    if not radii or np.any(np.diff(radii) <= 0):
        raise DomainError("radii must be a non-empty strictly increasing list")
    if samples < 1:
        raise DomainError("at least one sample is required")
    base = p.seed if seed is None else seed
    sample_params = [replace(p, seed=derive_seed(base, s)) for s in range(samples)]

    def run(params: SpinorQuenchParams) -> np.ndarray:
        return _sample_windings(params, radii, center, check_identity)

    if threads <= 1:
        rows = [run(params) for params in sample_params]
    else:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            rows = list(pool.map(run, sample_params))
    data = np.vstack(rows).astype(float)

    n_mean = data.mean(axis=0)
    n_sq = data**2
    n_sq_mean = n_sq.mean(axis=0)
    if samples > 1:
        n_mean_se = data.std(axis=0, ddof=1) / math.sqrt(samples)
        n_sq_se = n_sq.std(axis=0, ddof=1) / math.sqrt(samples)
    else:
        logger.warning("winding statistics from a single sample: standard errors set to zero")
        n_mean_se = np.zeros(len(radii))
        n_sq_se = np.zeros(len(radii))
    return WindingReport(np.asarray(radii), n_mean, n_mean_se, n_sq_mean, n_sq_se, samples)


SCALING_MODELS = {
    "R": lambda R: R,
    "R_lnR": lambda R: R * np.log(R),
    "R2": lambda R: R**2,
}


@dataclass(eq=False)
class ScalingFit:
    models: pd.DataFrame
    best: str
    log_slope: float


def scaling_fit(r: WindingReport) -> ScalingFit:
    """Weighted one-parameter fits of ``<N^2>`` against ``A R``, ``A R ln R`` and ``A R^2``.

    Weights are inverse squared standard errors (unit weights when any error
    is zero). The log-log slope comes from an ordinary fit of
    ``ln <N^2>`` on ``ln R`` over the positive points.
    """
    R = np.asarray(r.radii, dtype=float)
    y = np.asarray(r.n_sq_mean, dtype=float)
    if len(R) < 4 or R[-1] < 4 * R[0]:
        raise PreconditionError("scaling fit needs at least 4 radii spanning a factor of 4")
    if not np.any(y != 0):
        raise SingularFitError("all mean-square windings are zero")
    se = np.asarray(r.n_sq_se, dtype=float)
    weights = 1.0 / se**2 if np.all(se > 0) else np.ones_like(y)

    rows = []
    for name, model in SCALING_MODELS.items():
        result = sm.WLS(y, model(R)[:, None], weights=weights).fit()
        rows.append(
            {
                "model": name,
                "amplitude": float(result.params[0]),
                "amplitude_se": float(result.bse[0]),
                "weighted_ssr": float(result.ssr),
            }
        )
    models = pd.DataFrame(rows)
    best = str(models.loc[models["weighted_ssr"].idxmin(), "model"])

    positive = y > 0
    if np.count_nonzero(positive) < 2:
        raise SingularFitError("fewer than two positive points for the log-log slope")
    slope_fit = sm.OLS(np.log(y[positive]), sm.add_constant(np.log(R[positive]))).fit()
    return ScalingFit(models, best, float(slope_fit.params[1]))
