"""Deterministic field-image augmentations, a redundancy-reduction
pretraining loop at desk scale, and segmentation metrics.

Module map:

* :mod:`fieldaug.imagecore` image containers, PPM/PGM codecs, resampling
* :mod:`fieldaug.vegmask` excess-green masking and binary morphology
* :mod:`fieldaug.augment` the six augmentations and the soil bank
* :mod:`fieldaug.policy` ordered probabilistic policies and view streams
* :mod:`fieldaug.twins` the cross-correlation loss and its gradients
* :mod:`fieldaug.tinytrain` tiny encoder/projector training loop
* :mod:`fieldaug.metrics` mIoU, instance AP/AR, count differences
* :mod:`fieldaug.cli` the ``fieldaug`` command-line tool
"""

from .rng import RandomStream, derive_seed
from .policy import (
    AUGMENTATION_NAMES,
    Policy,
    PolicyEntry,
    PolicyError,
    apply_policy,
    default_policy,
    load_policy,
    make_views,
    save_policy,
)

__version__ = "0.1.0"

__all__ = [
    "RandomStream",
    "derive_seed",
    "AUGMENTATION_NAMES",
    "Policy",
    "PolicyEntry",
    "PolicyError",
    "apply_policy",
    "default_policy",
    "load_policy",
    "make_views",
    "save_policy",
    "__version__",
]
