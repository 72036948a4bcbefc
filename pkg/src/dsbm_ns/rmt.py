"""Sampling and spectral statistics of the directed stochastic block model.

A model instance has K batches of n vertices; the edge from batch-i vertex
alpha to batch-j vertex beta is present independently with probability
p_ij.  Eigenvalues of A/sqrt(n) concentrate on the disk of radius
sqrt(rho(S)) with S = p(1-p), plus up to K outliers of larger modulus
coming from the unremoved mean.  Outlier trimming replaces centering: the
raw adjacency matrix is eigendecomposed and eigenvalues beyond a 10%
margin over the bulk edge are excluded from radial statistics.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.integrate import cumulative_trapezoid

from .dyson import cached_spectral_radius, density_sigma
from .errors import EigFailureError, MatrixFormatError, TooLargeError, ZeroVarianceError
from .structure import VarianceProfile

__all__ = [
    "SBMSpec",
    "SpectralSample",
    "RadialCDF",
    "OUTLIER_MARGIN",
    "MAX_DENSE_DIMENSION",
    "sample_adjacency",
    "spectrum",
    "radial_cdf",
    "theoretical_radial_cdf",
    "esd_vs_sigma",
]

OUTLIER_MARGIN = 0.10
MAX_DENSE_DIMENSION = 4000
_CONJUGATE_PAIR_TOL = 1e-8


@dataclass(eq=False)
class SBMSpec:
    """Sampling specification: batch count, batch size, probabilities, seed."""

    K: int
    n: int
    P: np.ndarray
    seed: int

    def __post_init__(self):
        p = np.asarray(self.P, dtype=float)
        if p.shape != (self.K, self.K):
            raise MatrixFormatError(f"P must be {self.K}x{self.K}, got {p.shape}")
        if np.any((p < 0) | (p > 1)):
            raise MatrixFormatError("probabilities must lie in [0, 1]")
        if self.n < 1:
            raise MatrixFormatError("batch size must be positive")
        self.P = p

    @property
    def N(self) -> int:
        return self.K * self.n

    def variance_profile(self) -> VarianceProfile:
        return VarianceProfile.from_probabilities(self.P)

    def as_dict(self) -> dict:
        return {"K": self.K, "n": self.n, "P": self.P.tolist(), "seed": self.seed}


@dataclass(eq=False)
class SpectralSample:
    """Eigenvalues of A/sqrt(n) with outliers tagged relative to the bulk edge."""

    eigenvalues: np.ndarray
    n: int
    K: int
    seed: int
    bulk_radius: float | None
    outlier_count: int

    def bulk_eigenvalues(self) -> np.ndarray:
        if self.bulk_radius is None:
            return self.eigenvalues
        keep = np.abs(self.eigenvalues) <= self.bulk_radius * (1 + OUTLIER_MARGIN)
        return self.eigenvalues[keep]


@dataclass(eq=False)
class RadialCDF:
    """Fraction of bulk eigenvalues with modulus at most t, per grid point."""

    t_grid: np.ndarray
    counts: np.ndarray


def sample_adjacency(spec: SBMSpec) -> np.ndarray:
    """0/1 adjacency matrix, entry (i*n+alpha, j*n+beta) ~ Bern(p_ij).

    Entries are thresholded counter-based Philox uniforms keyed by the
    seed, so samples are reproducible and independent trials can be keyed
    by (seed, trial) without overlapping streams.
    """
    rng = np.random.Generator(np.random.Philox(key=np.uint64(spec.seed)))
    uniforms = rng.random((spec.N, spec.N))
    thresholds = np.kron(spec.P, np.ones((spec.n, spec.n)))
    return (uniforms < thresholds).astype(np.float64)


def spectrum(matrix: np.ndarray, n: int, seed: int = 0,
             bulk_radius: float | None = None) -> SpectralSample:
    """All eigenvalues of matrix/sqrt(n) by dense Hessenberg-QR.

    Verifies the conjugate-pair symmetry of the spectrum of a real matrix
    and counts outliers against ``bulk_radius`` (the expected bulk edge
    sqrt(rho(S))) when it is provided.
    """
    a = np.asarray(matrix, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise MatrixFormatError(f"matrix must be square, got shape {a.shape}")
    if a.shape[0] > MAX_DENSE_DIMENSION:
        raise TooLargeError(
            f"dense eigensolver capped at N = {MAX_DENSE_DIMENSION}, got {a.shape[0]}")
    if a.shape[0] % max(n, 1) != 0:
        raise MatrixFormatError(f"matrix size {a.shape[0]} is not a multiple of n = {n}")
    try:
        eigs = np.linalg.eigvals(a / np.sqrt(n))
    except np.linalg.LinAlgError as exc:
        raise EigFailureError(f"eigendecomposition failed: {exc}") from exc
    scale = max(np.abs(eigs).max(), 1.0)
    paired = np.sort_complex(np.conj(eigs))
    if not np.allclose(np.sort_complex(eigs), paired, atol=_CONJUGATE_PAIR_TOL * scale, rtol=0):
        raise EigFailureError("spectrum is not symmetric under conjugation")
    outliers = 0
    if bulk_radius is not None:
        outliers = int(np.sum(np.abs(eigs) > bulk_radius * (1 + OUTLIER_MARGIN)))
    return SpectralSample(eigenvalues=eigs, n=n, K=a.shape[0] // n, seed=seed,
                          bulk_radius=bulk_radius, outlier_count=outliers)


def radial_cdf(sample: SpectralSample, t_grid) -> RadialCDF:
    """Empirical radial CDF over the bulk (outliers excluded)."""
    t = np.asarray(t_grid, dtype=float)
    moduli = np.sort(np.abs(sample.bulk_eigenvalues()))
    counts = np.searchsorted(moduli, t, side="right") / max(len(moduli), 1)
    return RadialCDF(t_grid=t, counts=counts)


def theoretical_radial_cdf(m: VarianceProfile, t_grid, radial_points: int = 200,
                           r_min: float = 1e-4) -> np.ndarray:
    """Cumulative bulk mass inside |z| <= t from the self-consistent density.

    The density is integrated as 2*pi*r*sigma(r) on a geometric radial grid
    (trapezoid in log r, where the near-origin power law is smooth), and
    the sub-grid head is added from the locally fitted power law.
    """
    rho, _ = cached_spectral_radius(m)
    edge = np.sqrt(rho)
    radii = np.geomspace(r_min, edge * (1 - 1e-9), radial_points)
    dens = np.array([density_sigma(m, r).sigma for r in radii])
    mass = cumulative_trapezoid(2 * np.pi * radii ** 2 * dens, np.log(radii), initial=0.0)
    slope = np.log(dens[1] / dens[0]) / np.log(radii[1] / radii[0])
    head = 2 * np.pi * dens[0] * radii[0] ** 2 / (slope + 2.0)
    cdf = mass + head
    t = np.asarray(t_grid, dtype=float)
    return np.interp(t, radii, cdf, left=0.0, right=cdf[-1])


def esd_vs_sigma(sample: SpectralSample, m: VarianceProfile, t_grid) -> float:
    """Sup distance between the empirical and theoretical radial CDFs."""
    if m.entries.max() == 0:
        raise ZeroVarianceError("all variances vanish; the rescaled model is degenerate")
    empirical = radial_cdf(sample, t_grid).counts
    theoretical = theoretical_radial_cdf(m, t_grid)
    return float(np.abs(empirical - theoretical).max())
