"""Concentric-circle brightness fields and their superposition.

A pattern is a radially sinusoidal grayscale field; averaging a few such
fields with different frequencies and centers produces interference fringes.
Rendering evaluates the closed-form field at every pixel center, so an image
is an exact, reproducible function of its parameters.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .rng import MASK64, Xoshiro256pp

# Sampling defaults for dataset generation. Center coordinates may exceed the
# default 512-px frame, so pattern centers can fall outside the image.
DEFAULT_NU_MIN = 0.01
DEFAULT_NU_MAX = 0.05
DEFAULT_CENTER_MIN = 0.0
DEFAULT_CENTER_MAX = 600.0
DEFAULT_QN_CHOICES = (1, 2, 3)
DEFAULT_AMPLITUDE = 1.0
DEFAULT_IMAGE_SIZE = 512


@dataclass(frozen=True)
class ConcentricPatternSpec:
    """One concentric-circle field: radial frequency, center, contrast.

    nu is the interval frequency (fringe period is 2/nu pixels); the center
    is in pixel coordinates and may lie outside the image; amplitude scales
    the sinusoid and must stay in (0, 1] so brightness fits 8 bits.
    """

    nu: float
    center_x: float
    center_y: float
    amplitude: float = DEFAULT_AMPLITUDE

    def __post_init__(self):
        if not (math.isfinite(self.nu) and self.nu > 0.0):
            raise ValueError(f"nu must be finite and > 0, got {self.nu}")
        if not (math.isfinite(self.center_x) and math.isfinite(self.center_y)):
            raise ValueError("center coordinates must be finite")
        if not (math.isfinite(self.amplitude) and 0.0 < self.amplitude <= 1.0):
            raise ValueError(f"amplitude must be in (0, 1], got {self.amplitude}")


@dataclass(frozen=True)
class ParamRanges:
    """Half-open sampling ranges for pattern parameters.

    Defaults are the dataset's published ranges: nu in [0.01, 0.05), centers
    in [0, 600), pattern count drawn from (1, 2, 3). q_n_choices is an
    ordered tuple; the draw indexes into it as given, so its order is part
    of the reproducibility contract.
    """

    nu_min: float = DEFAULT_NU_MIN
    nu_max: float = DEFAULT_NU_MAX
    center_min: float = DEFAULT_CENTER_MIN
    center_max: float = DEFAULT_CENTER_MAX
    q_n_choices: tuple[int, ...] = DEFAULT_QN_CHOICES
    amplitude: float = DEFAULT_AMPLITUDE

    def __post_init__(self):
        object.__setattr__(self, "q_n_choices", tuple(self.q_n_choices))
        if not (math.isfinite(self.nu_min) and math.isfinite(self.nu_max)):
            raise ValueError("nu bounds must be finite")
        if not 0.0 < self.nu_min < self.nu_max:
            raise ValueError(f"need 0 < nu_min < nu_max, got [{self.nu_min}, {self.nu_max})")
        if not (math.isfinite(self.center_min) and math.isfinite(self.center_max)):
            raise ValueError("center bounds must be finite")
        if not self.center_min < self.center_max:
            raise ValueError(
                f"need center_min < center_max, got [{self.center_min}, {self.center_max})"
            )
        if not self.q_n_choices:
            raise ValueError("q_n_choices must be nonempty")
        if any(q < 1 for q in self.q_n_choices):
            raise ValueError(f"q_n_choices must all be >= 1, got {self.q_n_choices}")
        if not (math.isfinite(self.amplitude) and 0.0 < self.amplitude <= 1.0):
            raise ValueError(f"amplitude must be in (0, 1], got {self.amplitude}")


@dataclass(frozen=True)
class MoireImageSpec:
    """Full recipe for one image: the patterns to superpose, the geometry,
    and the seed the recipe was drawn from."""

    q_n: int
    patterns: tuple[ConcentricPatternSpec, ...]
    width: int
    height: int
    image_seed: int

    def __post_init__(self):
        object.__setattr__(self, "patterns", tuple(self.patterns))
        if self.q_n < 1:
            raise ValueError(f"q_n must be >= 1, got {self.q_n}")
        if len(self.patterns) != self.q_n:
            raise ValueError(
                f"expected {self.q_n} patterns, got {len(self.patterns)}"
            )
        if self.width < 1 or self.height < 1:
            raise ValueError(f"image must be at least 1x1, got {self.width}x{self.height}")
        if not 0 <= self.image_seed <= MASK64:
            raise ValueError("image_seed must be an unsigned 64-bit integer")


@dataclass(frozen=True, eq=False)
class GrayImage:
    """Dense 8-bit grayscale buffer; pixels has shape (height, width).

    Instances are immutable: the pixel array is flagged read-only.
    """

    width: int
    height: int
    pixels: np.ndarray

    def __post_init__(self):
        if self.pixels.dtype != np.uint8:
            raise ValueError(f"pixels must be uint8, got {self.pixels.dtype}")
        if self.pixels.shape != (self.height, self.width):
            raise ValueError(
                f"pixels shape {self.pixels.shape} does not match "
                f"{self.height}x{self.width}"
            )
        self.pixels.setflags(write=False)

    def __eq__(self, other):
        if not isinstance(other, GrayImage):
            return NotImplemented
        return (
            self.width == other.width
            and self.height == other.height
            and np.array_equal(self.pixels, other.pixels)
        )

    def tobytes(self) -> bytes:
        """Row-major pixel bytes."""
        return self.pixels.tobytes()


def radial_brightness(r: float, nu: float, amplitude: float = DEFAULT_AMPLITUDE) -> float:
    """Field brightness at radial distance r, before 8-bit quantization.

    The sinusoid is scaled onto half the 8-bit range so that any amplitude
    <= 1 yields values inside [0, 255]. Inputs are assumed already validated
    (see ConcentricPatternSpec); no checks happen here.
    """
    return (amplitude * math.cos(nu * math.pi * r) + 1.0) * 127.5


def render_pattern(spec: ConcentricPatternSpec, width: int, height: int) -> GrayImage:
    """Evaluate the field at every pixel center (x + 0.5, y + 0.5).

    The vectorized arithmetic performs, per pixel, the exact operation
    sequence of ``radial_brightness`` on r = sqrt(dx*dx + dy*dy), so the
    output matches a scalar per-pixel evaluation bit for bit. Rounding is
    half away from zero, then clamped to [0, 255] as a safety net.
    """
    if width < 1 or height < 1:
        raise ValueError(f"image must be at least 1x1, got {width}x{height}")
    dx = (np.arange(width, dtype=np.float64) + 0.5) - spec.center_x
    dy = (np.arange(height, dtype=np.float64) + 0.5) - spec.center_y
    r = np.sqrt((dx * dx)[None, :] + (dy * dy)[:, None])
    b = (spec.amplitude * np.cos((spec.nu * math.pi) * r) + 1.0) * 127.5
    q = np.clip(np.floor(b + 0.5), 0.0, 255.0).astype(np.uint8)
    return GrayImage(width, height, q)


def superpose(patterns) -> GrayImage:
    """Pixelwise mean of same-sized images, rounded half away from zero."""
    patterns = list(patterns)
    if not patterns:
        raise ValueError("superpose needs at least one image")
    first = patterns[0]
    total = np.zeros((first.height, first.width), dtype=np.uint32)
    for i, img in enumerate(patterns):
        if (img.width, img.height) != (first.width, first.height):
            raise ValueError(
                f"image {i} is {img.width}x{img.height}, "
                f"expected {first.width}x{first.height}"
            )
        total += img.pixels
    mean = total / float(len(patterns))
    q = np.clip(np.floor(mean + 0.5), 0.0, 255.0).astype(np.uint8)
    return GrayImage(first.width, first.height, q)


def sample_spec(
    rng: Xoshiro256pp,
    ranges: ParamRanges,
    width: int,
    height: int,
    image_seed: int,
) -> MoireImageSpec:
    """Draw a full image recipe from the stream.

    The draw order is fixed -- q_n first, then (nu, center_x, center_y) for
    each pattern in turn -- so a given stream state always yields the same
    spec.
    """
    q_n = ranges.q_n_choices[rng.below(len(ranges.q_n_choices))]
    patterns = []
    for _ in range(q_n):
        nu = rng.uniform(ranges.nu_min, ranges.nu_max)
        cx = rng.uniform(ranges.center_min, ranges.center_max)
        cy = rng.uniform(ranges.center_min, ranges.center_max)
        patterns.append(ConcentricPatternSpec(nu, cx, cy, ranges.amplitude))
    return MoireImageSpec(q_n, tuple(patterns), width, height, image_seed)


def generate_moire(spec: MoireImageSpec) -> GrayImage:
    """Render every pattern in the spec and average them; pure in the spec."""
    return superpose(
        render_pattern(p, spec.width, spec.height) for p in spec.patterns
    )


def fringe_count(spec: ConcentricPatternSpec, width: int, height: int) -> int:
    """Number of full brightness periods visible from the pattern center.

    Metadata only: the renderer evaluates a continuous field and never draws
    discrete circles. The visible radius is measured to the farthest corner
    pixel center; one period spans 2/nu pixels; at least 1 is reported.
    """
    if width < 1 or height < 1:
        raise ValueError(f"image must be at least 1x1, got {width}x{height}")
    corners = (
        (0.5, 0.5),
        (width - 0.5, 0.5),
        (0.5, height - 0.5),
        (width - 0.5, height - 0.5),
    )
    r_max = max(
        math.hypot(cx - spec.center_x, cy - spec.center_y) for cx, cy in corners
    )
    return max(1, math.ceil(r_max * spec.nu / 2.0))
