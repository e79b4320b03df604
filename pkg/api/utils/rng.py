import zlib
import numpy as np

# Named sub-streams used across the pipeline
COHOMOLOGY = "cohomology-rand"
SLOPE = "slope-perturb"
RANDOM_WALK = "random-walk"
FORM_SEARCH = "form-search"


def substream(seed: int, name: str, *key: int) -> np.random.Generator:
    """Independent generator derived from the root seed and a stream name"""
    spawn_key = (zlib.crc32(name.encode("utf-8")),) + tuple(int(k) for k in key)
    return np.random.default_rng(np.random.SeedSequence(int(seed), spawn_key=spawn_key))
