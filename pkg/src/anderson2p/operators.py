"""Finite-volume Hamiltonians on lattice boxes and their spectra.

The two-particle operator has hopping 1 between configurations at lattice
distance one (under the configured adjacency mode) and diagonal
``U(x) + g * (V(x1) + V(x2))``; hops leaving the box are dropped (plain
Dirichlet restriction).  The single-particle operator has diagonal
``g * V(x)``.  Matrices are dense real symmetric; the full spectrum is what
the resonance and non-tunnelling classifiers consume, so a dense
eigensolver is the right tool at these volumes.

Under the ``l1`` adjacency the two-particle operator on a non-interactive
box is exactly the tensor sum of its two single-particle factors, so its
spectrum equals all pairwise sums of the factor spectra.  Under the ``sup``
adjacency the two-particle hop set also moves both particles at once and
the tensor identity does not hold; ``tensor_spectrum`` remains computable
but equality with the direct spectrum is only asserted for ``l1``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .disorder import DisorderSample, InteractionSpec
from .errors import NumericError, OutOfDomainError, PreconditionError
from .geometry import (
    Box1,
    Box2,
    is_interactive,
    normalize_adjacency,
    projections,
)
from .kernels import adjacency_matrix

#: relative tolerance for eigensolver residuals and orthonormality
SPECTRAL_RTOL = 1e-8


@dataclass
class FiniteOperator:
    """Assembled Hermitian (real symmetric) finite-volume Hamiltonian."""

    box: Box2 | Box1
    points: np.ndarray  # (N, D) configuration/site array, lexicographic
    matrix: np.ndarray  # (N, N) float64 symmetric
    adjacency: str
    g: float
    sample: DisorderSample
    interaction: Optional[InteractionSpec] = None
    particle: Optional[int] = None  # 1 or 2 for single-particle operators
    _eigenvalues: Optional[np.ndarray] = field(default=None, repr=False)
    _spectral: Optional["SpectralData"] = field(default=None, repr=False)
    _lu_cache: dict = field(default_factory=dict, repr=False)

    @property
    def n(self) -> int:
        return self.matrix.shape[0]

    @property
    def two_particle(self) -> bool:
        return isinstance(self.box, Box2)

    def index_of(self, x) -> int:
        return self.box.index_of(x)

    def center_index(self) -> int:
        return self.box.center_index()

    def boundary_indices(self) -> np.ndarray:
        return self.box.boundary_indices()

    def eigenvalues(self) -> np.ndarray:
        """Ascending eigenvalues; cached (cheaper than full eigenpairs)."""
        if self._spectral is not None:
            return self._spectral.eigenvalues
        if self._eigenvalues is None:
            self._eigenvalues = np.linalg.eigvalsh(self.matrix)
        return self._eigenvalues

    def norm2(self) -> float:
        ev = self.eigenvalues()
        return float(max(abs(ev[0]), abs(ev[-1]))) if len(ev) else 0.0


@dataclass
class SpectralData:
    """Full eigendecomposition with per-state residual norms."""

    eigenvalues: np.ndarray  # ascending
    eigenvectors: np.ndarray  # orthonormal columns
    residual_norms: np.ndarray
    op: FiniteOperator

    def __post_init__(self):
        h_norm = max(1e-300, float(np.abs(self.eigenvalues).max(initial=0.0)))
        if self.residual_norms.max(initial=0.0) > SPECTRAL_RTOL * h_norm:
            raise NumericError("eigensolver residuals exceed tolerance")
        gram = self.eigenvectors.T @ self.eigenvectors
        if np.abs(gram - np.eye(gram.shape[0])).max() > SPECTRAL_RTOL:
            raise NumericError("eigenvectors not orthonormal within tolerance")

    @property
    def n(self) -> int:
        return len(self.eigenvalues)


def _check_domain(sample: DisorderSample, sites: np.ndarray, what: str):
    for row in sites:
        if tuple(int(c) for c in row) not in sample.domain:
            raise OutOfDomainError(
                f"sample domain does not cover {what}: missing site {tuple(row)}"
            )


def assemble_two_particle(
    box: Box2,
    sample: DisorderSample,
    interaction: InteractionSpec,
    g: float,
    adjacency: str = "sup",
) -> FiniteOperator:
    """Two-particle Hamiltonian on the box with Dirichlet restriction."""
    adjacency = normalize_adjacency(adjacency)
    p1, p2, _ = projections(box)
    _check_domain(sample, p1.points(), "projection of particle 1")
    _check_domain(sample, p2.points(), "projection of particle 2")
    pts = box.points()
    d = box.d
    h = adjacency_matrix(pts, adjacency)
    x1, x2 = pts[:, :d], pts[:, d:]
    v1 = sample.values_at_unchecked(x1)
    v2 = sample.values_at_unchecked(x2)
    sep = np.abs(x1 - x2).max(axis=1)
    u = interaction.at_separation(sep)
    np.fill_diagonal(h, u + g * (v1 + v2))
    return FiniteOperator(box, pts, h, adjacency, g, sample, interaction)


def assemble_single_particle(
    box: Box1,
    sample: DisorderSample,
    g: float,
    particle: int = 1,
    adjacency: str = "sup",
) -> FiniteOperator:
    """Single-particle Hamiltonian: diagonal g*V(x), unit hopping at lattice
    distance one inside the box."""
    adjacency = normalize_adjacency(adjacency)
    pts = box.points()
    _check_domain(sample, pts, "single-particle box")
    h = adjacency_matrix(pts, adjacency)
    vals = sample.values_at_unchecked(pts)
    np.fill_diagonal(h, g * vals)
    return FiniteOperator(box, pts, h, adjacency, g, sample, particle=particle)


def diagonalize(op: FiniteOperator) -> SpectralData:
    """Dense symmetric eigendecomposition with residual verification."""
    if op._spectral is not None:
        return op._spectral
    if not np.all(np.isfinite(op.matrix)):
        raise NumericError("operator matrix has non-finite entries")
    ev, q = np.linalg.eigh(op.matrix)
    res = np.linalg.norm(op.matrix @ q - q * ev, axis=0)
    sd = SpectralData(ev, q, res, op)
    op._spectral = sd
    op._eigenvalues = ev
    return sd


def single_particle_factors(
    box: Box2,
    sample: DisorderSample,
    g: float,
    adjacency: str = "l1",
) -> tuple[FiniteOperator, FiniteOperator]:
    """The two single-particle operators on the projections of a box."""
    p1, p2, _ = projections(box)
    op1 = assemble_single_particle(p1, sample, g, particle=1, adjacency=adjacency)
    op2 = assemble_single_particle(p2, sample, g, particle=2, adjacency=adjacency)
    return op1, op2


def tensor_spectrum(
    box: Box2,
    sample: DisorderSample,
    interaction: InteractionSpec,
    g: float,
    adjacency: str = "l1",
) -> np.ndarray:
    """Spectrum of a non-interactive box as sorted pairwise sums of its
    single-particle factor spectra.

    Requires a non-interactive box (the interaction vanishes there).  The
    result equals the directly diagonalized spectrum under ``l1`` adjacency.
    """
    if is_interactive(box, interaction.r0):
        raise PreconditionError("tensor_spectrum requires a non-interactive box")
    op1, op2 = single_particle_factors(box, sample, g, adjacency)
    sums = np.add.outer(op1.eigenvalues(), op2.eigenvalues()).ravel()
    return np.sort(sums)


def permutation_conjugate_check(
    box: Box2,
    sample: DisorderSample,
    interaction: InteractionSpec,
    g: float,
    adjacency: str = "sup",
) -> float:
    """Max elementwise gap between the sorted spectra of the box and of its
    particle-exchange image; zero up to roundoff for any sample."""
    op = assemble_two_particle(box, sample, interaction, g, adjacency)
    op_sigma = assemble_two_particle(box.sigma(), sample, interaction, g, adjacency)
    return float(np.abs(op.eigenvalues() - op_sigma.eigenvalues()).max())
