import numpy as np
import pytest

from spisim import imageio
from spisim.camera import SceneImage
from spisim.sampling import dct_axis_basis


def synth_scene(size: int, seed: int) -> np.ndarray:
    """Deterministic natural-looking test image.

    Smooth structure (gradient plus soft blobs) over a random texture
    whose DCT spectrum falls off like 1/f with an extra mid-frequency
    band, mimicking photographed scenes that contain fabric- or
    grating-like detail: mostly low-frequency energy, plus enough
    mid-band content that widening the sampled basis visibly pays off.
    """
    rng = np.random.default_rng(seed)
    y, x = np.mgrid[0:size, 0:size] / float(size)
    img = 0.3 + 0.2 * x + 0.12 * y
    for _ in range(4):
        cx, cy = rng.uniform(0.1, 0.9, 2)
        radius = rng.uniform(0.08, 0.25)
        amp = rng.uniform(0.15, 0.35)
        img = img + amp * np.exp(-((x - cx) ** 2 + (y - cy) ** 2)
                                 / (2.0 * radius ** 2))
    u = np.arange(size, dtype=float)[:, None]
    v = np.arange(size, dtype=float)[None, :]
    radial = np.hypot(u, v)
    radial[0, 0] = 1.0
    band_center, band_width = 0.27 * size, 0.047 * size
    envelope = 1.0 / radial + 0.4 * np.exp(-((radial - band_center)
                                             / band_width) ** 2)
    coeffs = rng.standard_normal((size, size)) * envelope
    coeffs[0, 0] = 0.0
    basis = dct_axis_basis(size)
    texture = basis.T @ coeffs @ basis
    img = img + 0.7 * texture / np.abs(texture).max()
    img -= img.min()
    return np.clip(img / img.max(), 0.0, 1.0)


@pytest.fixture
def scene_16() -> SceneImage:
    return SceneImage.from_array(synth_scene(16, seed=7))


@pytest.fixture
def image_files(tmp_path):
    """Write a few synthetic 64x64 PGM scenes, return their paths."""
    paths = []
    for i in range(3):
        path = tmp_path / f"scene{i}.pgm"
        imageio.write_pgm(path, synth_scene(64, seed=100 + i))
        paths.append(str(path))
    return paths
