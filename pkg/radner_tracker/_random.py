"""Counter-based random streams."""

import numpy as np


__docformat__ = "google"
__all__ = (
    "path_generator",
    "sample_generator",
)


def sample_generator(seed: int) -> np.random.Generator:
    """A generator for one-off samples, f.e. random states in identity checks."""
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(seed)))


def path_generator(seed: int, path_index: int) -> np.random.Generator:
    """
    The stream of one simulated path.

    Streams depend only on ``(seed, path_index)``, so that paths are identical no matter
    how they are partitioned into batches or workers.
    """
    sequence = np.random.SeedSequence(seed, spawn_key=(path_index,))
    return np.random.Generator(np.random.Philox(sequence))
