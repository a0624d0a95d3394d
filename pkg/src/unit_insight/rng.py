"""Seeding policy: every random draw comes from a counter-based Philox
generator keyed by (user seed, stream id), so independent subsystems never
share a stream and runs are reproducible across platforms."""

from __future__ import annotations

import numpy as np

KMEANS_STREAM = 1
TSNE_STREAM = 2
VORONOI_STREAM = 3
LOOKUP_STREAM = 4
NOISE_STREAM = 5
ABX_STREAM = 6
SYNTH_STREAM = 7


def make_rng(seed: int, stream: int = 0) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(np.random.SeedSequence((int(seed), int(stream)))))
