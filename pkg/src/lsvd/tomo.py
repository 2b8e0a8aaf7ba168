"""Parallel-beam Radon operator assembly and measurement noise.

Geometry convention: a side x side image occupies [-side/2, side/2]^2 with
pixel (row, col) centred at (col - side/2 + 0.5, row - side/2 + 0.5); images
flatten row-major (index = row * side + col).  For projection angle theta the
detector axis is e = (cos theta, sin theta), rays run perpendicular to it,
and detector bins are unit-width strips centred at offsets
(j - (bins - 1) / 2) for j = 0..bins-1, so detector spacing equals pixel
spacing and the array is centred on the image centre.

Each matrix entry is the exact pixel/strip overlap area divided by the unit
strip width, i.e. an averaged intersection length in pixel-side units.  Strips
tile the detector axis, so the per-angle projection mass of any image whose
projections stay inside the detector span is conserved exactly.

Random numbers come from seeded NumPy PCG64 generators (``default_rng``);
noise streams are bit-reproducible for a fixed seed within this
implementation.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .linalg import as_vector


@dataclass(frozen=True)
class TomoGeometry:
    """Square-image parallel-beam sampling layout."""

    image_side: int
    num_angles: int
    detector_bins: int

    def __post_init__(self):
        if self.image_side < 2:
            raise ValueError(f"image_side must be >= 2, got {self.image_side}")
        if self.num_angles < 1 or self.detector_bins < 1:
            raise ValueError("num_angles and detector_bins must be >= 1")

    @property
    def angles(self) -> np.ndarray:
        """Uniform angles k*pi/num_angles on [0, pi)."""
        return np.arange(self.num_angles) * (np.pi / self.num_angles)

    @property
    def image_size(self) -> int:
        return self.image_side * self.image_side

    @property
    def sinogram_size(self) -> int:
        return self.num_angles * self.detector_bins


@dataclass(frozen=True)
class RadonOperator:
    """Dense forward matrix (sinogram_size x image_size) plus its geometry.

    Row angle_index * detector_bins + bin is the (angle, bin) strip.
    """

    geometry: TomoGeometry
    matrix: np.ndarray


@dataclass(frozen=True)
class NoiseModel:
    """Additive Gaussian measurement noise.

    kind "gaussian_level": i.i.d. N(0, level^2) per entry, with ``level``
    understood relative to normalised data.  kind "gaussian_snr": the per-entry
    standard deviation sigma solves 10*log10(|y|^2 / (n sigma^2)) = snr_db.
    """

    kind: str
    level: float = 0.0
    snr_db: float = 0.0
    seed: int = 0

    def __post_init__(self):
        if self.kind not in ("gaussian_level", "gaussian_snr"):
            raise ValueError(f"unknown noise kind {self.kind!r}")
        if self.kind == "gaussian_level" and self.level < 0:
            raise ValueError("noise level must be >= 0")
        if self.kind == "gaussian_snr" and not np.isfinite(self.snr_db):
            raise ValueError("snr_db must be finite")


def _strip_profile_cdf(w: np.ndarray, a: float, b: float) -> np.ndarray:
    """Cumulative projection of a centred unit pixel at a given angle.

    The projection profile of the unit square onto the detector axis is a
    trapezoid of unit area with support half-width H = (a + b)/2 and plateau
    half-width h = |a - b|/2 where a = |cos theta|, b = |sin theta|; this
    returns its integral from -inf to w, evaluated elementwise.
    """
    H = 0.5 * (a + b)
    h = 0.5 * abs(a - b)
    if H - h < 1e-12:  # axis-aligned: profile degenerates to a box
        return np.clip((w + H) / (2.0 * H), 0.0, 1.0)
    peak = 1.0 / (H + h)
    ramp = H - h
    out = np.empty_like(w)
    np.clip(w, -H, H, out=out)
    rising = out <= -h
    falling = out >= h
    mid = ~(rising | falling)
    out_r = out[rising] + H
    out[rising] = peak * out_r * out_r / (2.0 * ramp)
    out[mid] = peak * (0.5 * ramp + out[mid] + h)
    out_f = H - out[falling]
    out[falling] = 1.0 - peak * out_f * out_f / (2.0 * ramp)
    return out


def assemble_radon(geometry: TomoGeometry) -> RadonOperator:
    """Build the dense strip-overlap Radon matrix for the given geometry."""
    side = geometry.image_side
    centres = np.arange(side) - side / 2.0 + 0.5
    cx = np.tile(centres, side)          # pixel centre x, row-major flatten
    cy = np.repeat(centres, side)        # pixel centre y
    offsets = np.arange(geometry.detector_bins) - (geometry.detector_bins - 1) / 2.0
    matrix = np.empty((geometry.sinogram_size, geometry.image_size))
    for k, theta in enumerate(geometry.angles):
        ca, sa = np.cos(theta), np.sin(theta)
        proj = cx * ca + cy * sa  # pixel centres on the detector axis
        w_hi = offsets[:, None] + 0.5 - proj[None, :]
        w_lo = w_hi - 1.0
        block = _strip_profile_cdf(w_hi, abs(ca), abs(sa))
        block -= _strip_profile_cdf(w_lo, abs(ca), abs(sa))
        np.clip(block, 0.0, None, out=block)
        matrix[k * geometry.detector_bins : (k + 1) * geometry.detector_bins] = block
    return RadonOperator(geometry, matrix)


def add_noise(y, model: NoiseModel) -> np.ndarray:
    """Apply the noise model to a sinogram vector, seeded and reproducible."""
    y = as_vector(y, "y")
    if model.kind == "gaussian_level":
        if model.level == 0.0:
            return y.copy()
        sigma = model.level
    else:
        energy = float(y @ y)
        if energy == 0.0:
            raise ValueError("gaussian_snr noise needs a non-zero signal")
        sigma = np.sqrt(energy / (y.size * 10.0 ** (model.snr_db / 10.0)))
    rng = np.random.default_rng(model.seed)
    return y + rng.normal(0.0, sigma, size=y.shape)


def normalise_sinograms(batch):
    """Scale a batch of sinograms so the largest absolute entry is one.

    Returns (scaled batch, factor); dividing by the factor inverts the map.
    """
    batch = np.asarray(batch, dtype=np.float64)
    if batch.size == 0:
        raise ValueError("empty sinogram batch")
    factor = float(np.max(np.abs(batch)))
    if factor == 0.0:
        raise ValueError("all-zero sinogram batch cannot be normalised")
    return batch / factor, factor
