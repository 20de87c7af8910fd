"""Formula-generated interference-fringe images and PixMix-style mixing."""

from .dataset import (
    DatasetError,
    DatasetManifest,
    LabeledImage,
    ManifestEntry,
    MixingSet,
    MoireMixSampler,
    RgbImage,
    TrainImageSampler,
    augment_records,
    build_mixing_set,
    content_hash,
    dataset_hash,
    fnv1a64,
    load_gray_png,
    load_mixing_set,
    load_rgb_png,
    read_cifar_batch,
    save_gray_png,
    save_rgb_png,
    write_augmented_dataset,
)
from .mixing import (
    MixConfig,
    UnitImage,
    mix_additive,
    mix_multiplicative,
    pixmix_augment,
    resize_nearest,
    sample_coefficients,
    unit_from_bytes,
    unit_from_gray,
    unit_to_bytes,
)
from .moire import (
    ConcentricPatternSpec,
    GrayImage,
    MoireImageSpec,
    ParamRanges,
    fringe_count,
    generate_moire,
    radial_brightness,
    render_pattern,
    sample_spec,
    superpose,
)
from .rng import SplitMix64, Xoshiro256pp, derive_seed

__version__ = "0.1.0"
