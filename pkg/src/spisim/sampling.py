"""DCT sampling functions and DMD-ready pattern sets.

Generates subsets of the 2-D orthonormal DCT-II basis in a deterministic
low-frequency-first order, maps them either directly (affine shift into
[0,1] plus one all-ones pattern) or through simplex coding into
non-negative displayable pattern stacks, and binarizes pattern stacks by
Floyd-Steinberg error diffusion.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, replace

import numpy as np

from .simplex import encode_matrix

KIND_RAW = "raw-real"
KIND_DIRECT = "direct-dmd"
KIND_SIMPLEX = "simplex-dmd"
KINDS = (KIND_RAW, KIND_DIRECT, KIND_SIMPLEX)

ORDER_LOWFREQ = "low-frequency-first"
ORDER_ZIGZAG = "zig-zag"
ORDERINGS = (ORDER_LOWFREQ, ORDER_ZIGZAG)

_FS_WEIGHTS = (7.0, 3.0, 5.0, 1.0)  # ahead, behind-below, below, ahead-below


@dataclass(frozen=True)
class SamplingBasisSpec:
    """Resolution, count and ordering of the sampling-function subset."""

    width: int
    height: int
    count: int
    ordering: str = ORDER_LOWFREQ

    def __post_init__(self):
        if self.width < 1 or self.height < 1:
            raise ValueError("pattern resolution must be positive")
        if self.count < 1:
            raise ValueError("pattern count must be positive")
        if self.count > self.width * self.height:
            raise ValueError(
                f"count {self.count} exceeds pixels per pattern "
                f"{self.width * self.height}")
        if self.ordering not in ORDERINGS:
            raise ValueError(f"unknown ordering {self.ordering!r}")


@dataclass(frozen=True)
class PatternSet:
    """An ordered stack of 2-D sampling patterns ready for display.

    ``patterns`` has shape (count, height, width).  Raw sets hold the
    signed sampling functions; direct-dmd and simplex-dmd sets hold
    values in [0, 1] (or {0, 1} once binarized).  ``k`` is the number of
    source sampling functions the set represents.
    """

    patterns: np.ndarray
    kind: str
    binarized: bool = False
    k: int | None = None
    p: int | None = None
    l: int | None = None
    scale: float | None = None
    gain: float | None = None
    has_all_ones: bool = False

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown pattern kind {self.kind!r}")
        if self.patterns.ndim != 3:
            raise ValueError("patterns must be a (count, height, width) stack")
        self.patterns.setflags(write=False)

    @property
    def count(self) -> int:
        return self.patterns.shape[0]

    @property
    def height(self) -> int:
        return self.patterns.shape[1]

    @property
    def width(self) -> int:
        return self.patterns.shape[2]

    @property
    def matrix(self) -> np.ndarray:
        """Patterns flattened row-major to a (count, width*height) matrix."""
        return self.patterns.reshape(self.count, -1)

    def fingerprint(self) -> str:
        return matrix_fingerprint(self.matrix)


def matrix_fingerprint(a: np.ndarray) -> str:
    """Stable content hash of a float matrix (shape plus raw bytes)."""
    a = np.ascontiguousarray(np.asarray(a, dtype=float))
    h = hashlib.sha256()
    h.update(repr(a.shape).encode())
    h.update(a.tobytes())
    return h.hexdigest()


def frequency_order(spec: SamplingBasisSpec) -> list[tuple[int, int]]:
    """Return the first ``count`` (u, v) frequency pairs for the spec.

    low-frequency-first sorts by max(u, v), then lexicographically by
    (u, v); zig-zag walks anti-diagonals in the classic alternating order.
    u indexes the vertical (height) frequency, v the horizontal.
    """
    pairs = [(u, v) for u in range(spec.height) for v in range(spec.width)]
    if spec.ordering == ORDER_LOWFREQ:
        pairs.sort(key=lambda uv: (max(uv), uv))
    else:
        pairs.sort(key=lambda uv: (uv[0] + uv[1],
                                   uv[0] if (uv[0] + uv[1]) % 2 else -uv[0]))
    return pairs[:spec.count]


def dct_axis_basis(size: int) -> np.ndarray:
    """Orthonormal 1-D DCT-II basis functions, one per row."""
    f = np.arange(size, dtype=float)[:, None]
    x = np.arange(size, dtype=float)[None, :]
    basis = np.cos(np.pi * f * (2.0 * x + 1.0) / (2.0 * size))
    basis[0] *= np.sqrt(1.0 / size)
    basis[1:] *= np.sqrt(2.0 / size)
    return basis


def generate_dct_basis(spec: SamplingBasisSpec) -> PatternSet:
    """Generate the first ``count`` 2-D orthonormal DCT-II basis patterns.

    The flattened patterns are mutually orthonormal; the (0, 0) pattern is
    the constant 1/sqrt(width*height).  Generation is deterministic: the
    same spec always yields a bitwise-identical stack.
    """
    pairs = frequency_order(spec)
    rows = dct_axis_basis(spec.height)
    cols = dct_axis_basis(spec.width)
    us = np.array([u for u, _ in pairs])
    vs = np.array([v for _, v in pairs])
    patterns = rows[us][:, :, None] * cols[vs][:, None, :]
    return PatternSet(patterns=patterns, kind=KIND_RAW, k=spec.count)


def to_direct_dmd(raw: PatternSet) -> PatternSet:
    """Affinely map signed patterns into [0, 1] and append an all-ones pattern.

    Values map through x -> x*gain + 0.5 with gain = 0.5/max|x|, so zero
    lands at mid-gray and the extreme entries reach 0 and 1.  The all-ones
    pattern supplies the reading needed to subtract the 0.5 offset at
    decode time.
    """
    if raw.kind != KIND_RAW:
        raise ValueError(f"expected a {KIND_RAW} pattern set, got {raw.kind!r}")
    peak = float(np.abs(raw.patterns).max())
    if peak == 0.0:
        raise ValueError("cannot map an all-zero pattern set")
    gain = 0.5 / peak
    mapped = np.clip(raw.patterns * gain + 0.5, 0.0, 1.0)
    ones = np.ones((1, raw.height, raw.width))
    return PatternSet(patterns=np.concatenate([mapped, ones]), kind=KIND_DIRECT,
                      k=raw.count, gain=gain, has_all_ones=True)


def to_simplex_dmd(raw: PatternSet, p: int) -> PatternSet:
    """Re-encode signed patterns as a non-negative simplex-coded stack.

    k input patterns become l*(p+1) output patterns (l = ceil(k/p)); the
    global normalization divisor is kept in ``scale``.
    """
    if raw.kind != KIND_RAW:
        raise ValueError(f"expected a {KIND_RAW} pattern set, got {raw.kind!r}")
    enc = encode_matrix(raw.matrix, p)
    patterns = enc.Mprime.reshape(-1, raw.height, raw.width)
    return PatternSet(patterns=patterns, kind=KIND_SIMPLEX, k=raw.count,
                      p=enc.p, l=enc.l, scale=enc.scale)


def binarize_error_diffusion(ps: PatternSet) -> PatternSet:
    """Binarize each pattern independently by Floyd-Steinberg dithering.

    Serpentine scan, threshold 0.5, weights 7/16 ahead, 3/16 behind-below,
    5/16 below, 1/16 ahead-below (renormalized where neighbors fall off
    the grid so the quantization error stays on the pattern).  Each
    pattern's mean is preserved to within 2/(width*height).
    """
    pats = ps.patterns
    if pats.min() < 0.0 or pats.max() > 1.0:
        raise ValueError("patterns must lie in [0, 1] before binarization")
    out = _dither_stack(pats)
    return replace(ps, patterns=out, binarized=True)


def _dither_stack(stack: np.ndarray) -> np.ndarray:
    # Pixels are visited in the same serpentine order for every pattern,
    # so the whole stack is diffused in one pass with vectorized updates.
    work = stack.astype(float).copy()
    out = np.zeros_like(work)
    _, h, w = work.shape
    for r in range(h):
        step = 1 if r % 2 == 0 else -1
        cols = range(w) if step == 1 else range(w - 1, -1, -1)
        below = r + 1 < h
        for c in cols:
            old = work[:, r, c]
            new = np.where(old >= 0.5, 1.0, 0.0)
            out[:, r, c] = new
            err = old - new
            ahead = c + step
            behind = c - step
            targets = []
            if 0 <= ahead < w:
                targets.append((r, ahead, _FS_WEIGHTS[0]))
            if below:
                if 0 <= behind < w:
                    targets.append((r + 1, behind, _FS_WEIGHTS[1]))
                targets.append((r + 1, c, _FS_WEIGHTS[2]))
                if 0 <= ahead < w:
                    targets.append((r + 1, ahead, _FS_WEIGHTS[3]))
            if not targets:
                continue
            total = sum(wt for _, _, wt in targets)
            for rr, cc, wt in targets:
                work[:, rr, cc] += err * (wt / total)
    return out


def save_pattern_set(ps: PatternSet, path) -> None:
    """Write a pattern set: one JSON header line, then f32 LE pixel data."""
    header = {
        "count": ps.count,
        "width": ps.width,
        "height": ps.height,
        "kind": ps.kind,
        "binarized": ps.binarized,
        "p": ps.p,
        "l": ps.l,
        "scale": ps.scale,
        "gain": ps.gain,
        "k": ps.k,
        "has_all_ones": ps.has_all_ones,
    }
    with open(path, "wb") as f:
        f.write(json.dumps(header).encode("utf-8") + b"\n")
        f.write(np.ascontiguousarray(ps.patterns, dtype="<f4").tobytes())


def load_pattern_set(path) -> PatternSet:
    """Read a pattern set written by :func:`save_pattern_set`."""
    with open(path, "rb") as f:
        header_line = f.readline()
        try:
            header = json.loads(header_line.decode("utf-8"))
        except (UnicodeDecodeError, json.JSONDecodeError) as exc:
            raise ValueError(f"{path}: not a pattern-set file") from exc
        count = int(header["count"])
        width = int(header["width"])
        height = int(header["height"])
        data = f.read()
    expected = count * width * height * 4
    if len(data) != expected:
        raise ValueError(
            f"{path}: expected {expected} bytes of pixel data, got {len(data)}")
    patterns = np.frombuffer(data, dtype="<f4").astype(float)
    patterns = patterns.reshape(count, height, width)
    scale = header.get("scale")
    gain = header.get("gain")
    return PatternSet(
        patterns=patterns,
        kind=header["kind"],
        binarized=bool(header.get("binarized", False)),
        k=header.get("k"),
        p=header.get("p"),
        l=header.get("l"),
        scale=None if scale is None else float(scale),
        gain=None if gain is None else float(gain),
        has_all_ones=bool(header.get("has_all_ones", False)),
    )
