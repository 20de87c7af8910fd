"""Toy-scale robustness evaluation harness for fringe-mixing augmentation.

Consumes the primary `moiredb` toolchain only through its external
interfaces: the CLI, mixing-set directories, CIFAR binaries, and augmented
dataset files. The mirror module reimplements the mixing protocol from its
published description for byte-level parity checking.
"""

__version__ = "0.1.0"
