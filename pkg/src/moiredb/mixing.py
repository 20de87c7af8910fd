"""PixMix-style mixing: blend a training image with partner images a few
times, additively or multiplicatively, with Beta-distributed coefficients.

All arithmetic happens on real-valued images in [0, 1]; every step ends with
a clamp back into that range, so the pipeline is closed. Samplers are plain
sequences (len + indexing) of UnitImage already sized like the input.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .moire import GrayImage
from .rng import Xoshiro256pp


@dataclass(frozen=True)
class MixConfig:
    """Pipeline knobs.

    Defaults follow the public reference procedure: up to 5 mixing steps,
    Beta shape 3 for the coefficients, fair coins for the partner source and
    for additive-vs-multiplicative. mult_floor is the lower clamp of the
    multiplicative working space.
    """

    k_max: int = 5
    beta_shape: float = 3.0
    p_mixer_from_set: float = 0.5
    p_additive: float = 0.5
    mult_floor: float = 1e-3

    def __post_init__(self):
        if self.k_max < 0:
            raise ValueError(f"k_max must be >= 0, got {self.k_max}")
        if not (math.isfinite(self.beta_shape) and self.beta_shape > 0.0):
            raise ValueError(f"beta_shape must be > 0, got {self.beta_shape}")
        for name in ("p_mixer_from_set", "p_additive"):
            p = getattr(self, name)
            if not 0.0 <= p <= 1.0:
                raise ValueError(f"{name} must be in [0, 1], got {p}")
        if not 0.0 < self.mult_floor <= 1.0:
            raise ValueError(f"mult_floor must be in (0, 1], got {self.mult_floor}")


@dataclass(frozen=True, eq=False)
class UnitImage:
    """Real-valued working image: float64 values in [0, 1], shape
    (height, width, channels) with 1 (grayscale) or 3 (RGB) channels."""

    width: int
    height: int
    channels: int
    values: np.ndarray

    def __post_init__(self):
        v = self.values
        if self.channels not in (1, 3):
            raise ValueError(f"channels must be 1 or 3, got {self.channels}")
        if v.dtype != np.float64:
            raise ValueError(f"values must be float64, got {v.dtype}")
        if v.shape != (self.height, self.width, self.channels):
            raise ValueError(
                f"values shape {v.shape} does not match "
                f"({self.height}, {self.width}, {self.channels})"
            )
        if v.size and (v.min() < 0.0 or v.max() > 1.0):
            raise ValueError("values must lie in [0, 1]")
        v.setflags(write=False)


def unit_from_bytes(pixels: np.ndarray) -> UnitImage:
    """8-bit pixels, shape (h, w) or (h, w, c), to a [0, 1] UnitImage."""
    if pixels.dtype != np.uint8:
        raise ValueError(f"pixels must be uint8, got {pixels.dtype}")
    if pixels.ndim == 2:
        pixels = pixels[:, :, None]
    if pixels.ndim != 3:
        raise ValueError(f"pixels must be 2- or 3-dimensional, got shape {pixels.shape}")
    h, w, c = pixels.shape
    return UnitImage(w, h, c, pixels.astype(np.float64) / 255.0)


def unit_from_gray(img: GrayImage) -> UnitImage:
    return unit_from_bytes(img.pixels)


def unit_to_bytes(img: UnitImage) -> np.ndarray:
    """Quantize to 8 bits, rounding half away from zero.

    Returns shape (h, w) for grayscale, (h, w, 3) for RGB.
    """
    q = np.clip(np.floor(img.values * 255.0 + 0.5), 0.0, 255.0).astype(np.uint8)
    return q[:, :, 0] if img.channels == 1 else q


def resize_nearest(img: GrayImage, width: int, height: int) -> GrayImage:
    """Nearest-neighbor resample with floor scaling.

    Destination pixel (x, y) copies source pixel (x*src_w // dst_w,
    y*src_h // dst_h). Integer arithmetic only, so the mapping is exact on
    every platform.
    """
    if width < 1 or height < 1:
        raise ValueError(f"target must be at least 1x1, got {width}x{height}")
    sx = (np.arange(width, dtype=np.int64) * img.width) // width
    sy = (np.arange(height, dtype=np.int64) * img.height) // height
    return GrayImage(width, height, img.pixels[sy[:, None], sx[None, :]])


def sample_coefficients(rng: Xoshiro256pp, beta_shape: float) -> tuple[float, float]:
    """Draw the (a, b) mixing pair.

    A fair coin picks the branch: either a ~ Beta(shape, 1) with
    b ~ Beta(1, shape) (base-dominant), or a = 1 + Beta(1, shape) with
    b = -Beta(1, shape) (overshooting). Draw order is coin, a, b.
    """
    if rng.coin(0.5):
        a = rng.beta(beta_shape, 1.0)
        b = rng.beta(1.0, beta_shape)
    else:
        a = 1.0 + rng.beta(1.0, beta_shape)
        b = -rng.beta(1.0, beta_shape)
    return a, b


def _check_partner(base: UnitImage, mixer: UnitImage) -> None:
    if (mixer.width, mixer.height) != (base.width, base.height):
        raise ValueError(
            f"mixer is {mixer.width}x{mixer.height}, "
            f"base is {base.width}x{base.height}"
        )
    if mixer.channels not in (1, base.channels):
        raise ValueError(
            f"cannot broadcast {mixer.channels}-channel mixer onto "
            f"{base.channels}-channel base"
        )


def mix_additive(base: UnitImage, mixer: UnitImage, a: float, b: float) -> UnitImage:
    """Blend in the centered space: a*(2*base-1) + b*(2*mixer-1), mapped back
    to [0, 1] and clamped. Grayscale mixers broadcast across RGB bases."""
    _check_partner(base, mixer)
    out = a * (base.values * 2.0 - 1.0) + b * (mixer.values * 2.0 - 1.0)
    out = np.clip((out + 1.0) * 0.5, 0.0, 1.0)
    return UnitImage(base.width, base.height, base.channels, out)


def mix_multiplicative(
    base: UnitImage, mixer: UnitImage, a: float, b: float, floor: float = 1e-3
) -> UnitImage:
    """Blend as a product of powers: map v to max(2v, floor), output
    (base'**a) * (mixer'**b) / 2, clamped to [0, 1]."""
    _check_partner(base, mixer)
    bb = np.maximum(base.values * 2.0, floor)
    mm = np.maximum(mixer.values * 2.0, floor)
    out = np.clip((bb**a) * (mm**b) * 0.5, 0.0, 1.0)
    return UnitImage(base.width, base.height, base.channels, out)


def pixmix_augment(
    image: UnitImage,
    train_sampler,
    moire_sampler,
    rng: Xoshiro256pp,
    config: MixConfig,
) -> UnitImage:
    """Apply k ~ Uniform{0, ..., k_max} mixing steps to the image.

    Each step draws, in this fixed order: the partner-source coin (the
    fringe set with probability p_mixer_from_set, else the training set),
    the partner index, the operation coin (additive with probability
    p_additive), then the coefficients. k = 0 returns the input unchanged.
    """
    if len(train_sampler) == 0:
        raise ValueError("train sampler is empty")
    if len(moire_sampler) == 0:
        raise ValueError("moire sampler is empty")
    out = image
    k = rng.below(config.k_max + 1)
    for _ in range(k):
        sampler = moire_sampler if rng.coin(config.p_mixer_from_set) else train_sampler
        partner = sampler[rng.below(len(sampler))]
        additive = rng.coin(config.p_additive)
        a, b = sample_coefficients(rng, config.beta_shape)
        if additive:
            out = mix_additive(out, partner, a, b)
        else:
            out = mix_multiplicative(out, partner, a, b, config.mult_floor)
    return out
