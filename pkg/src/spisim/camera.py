"""Single-pixel camera simulation.

Displays a pattern set against a scene, one pattern at a time, and
records the bucket-detector readings with additive Gaussian detector
noise and a configurable ambient-bias trajectory.  Supports a second,
complementary detector that simultaneously sees the light steered the
other way (pattern complement), sharing the ambient bias by default.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, asdict

import numpy as np

from .sampling import KIND_DIRECT, KIND_SIMPLEX, PatternSet
from .simplex import DecodeOperator

BIAS_KINDS = ("none", "constant", "linear-drift", "sinusoidal", "random-walk")

MODE_DIRECT_SINGLE = "direct-single"
MODE_DIRECT_COMPL = "direct-complementary"
MODE_SIMPLEX_SINGLE = "simplex-single"
MODE_SIMPLEX_COMPL = "simplex-complementary"
MODES = (MODE_DIRECT_SINGLE, MODE_SIMPLEX_SINGLE,
         MODE_DIRECT_COMPL, MODE_SIMPLEX_COMPL)

# Philox key roles for the per-detector sample streams.
ROLE_NOISE_A, ROLE_NOISE_B, ROLE_BIAS_A, ROLE_BIAS_B = range(4)


@dataclass(frozen=True)
class SceneImage:
    """A non-negative scene stored as a row-major intensity vector."""

    width: int
    height: int
    pixels: np.ndarray

    def __post_init__(self):
        if self.pixels.shape != (self.width * self.height,):
            raise ValueError(
                f"pixel vector of length {self.pixels.shape} does not match "
                f"{self.width}x{self.height}")
        if not np.all(np.isfinite(self.pixels)) or self.pixels.min() < 0.0:
            raise ValueError("scene pixels must be finite and non-negative")
        self.pixels.setflags(write=False)

    @classmethod
    def from_array(cls, img: np.ndarray) -> "SceneImage":
        img = np.asarray(img, dtype=float)
        if img.ndim != 2:
            raise ValueError("expected a 2-D image array")
        return cls(width=img.shape[1], height=img.shape[0], pixels=img.reshape(-1))

    def image(self) -> np.ndarray:
        return self.pixels.reshape(self.height, self.width)


@dataclass(frozen=True)
class BiasTrajectory:
    """Parametric ambient-bias trajectory evaluated per displayed pattern.

    kinds: none; constant (value); linear-drift (value + slope*i);
    sinusoidal (value * sin(2*pi*i/period + phase), period in samples);
    random-walk (cumulative sum of N(0, value) steps).  ``hold`` > 1
    freezes the trajectory for that many consecutive samples, modeling
    ambient light that changes only between pattern bundles.
    """

    kind: str = "none"
    value: float = 0.0
    slope: float = 0.0
    period: float = 0.0
    phase: float = 0.0
    hold: int = 1

    def __post_init__(self):
        if self.kind not in BIAS_KINDS:
            raise ValueError(f"unknown bias kind {self.kind!r}")
        if self.kind == "sinusoidal" and self.period <= 0.0:
            raise ValueError("sinusoidal bias needs a positive period")
        if self.hold < 1:
            raise ValueError("hold must be >= 1")

    def sample(self, count: int, start: int = 0, rng=None) -> np.ndarray:
        """Evaluate the trajectory at sample indices start..start+count-1."""
        idx = np.arange(start, start + count)
        held = (idx // self.hold) * self.hold
        if self.kind == "none":
            return np.zeros(count)
        if self.kind == "constant":
            return np.full(count, self.value)
        if self.kind == "linear-drift":
            return self.value + self.slope * held.astype(float)
        if self.kind == "sinusoidal":
            return self.value * np.sin(
                2.0 * np.pi * held.astype(float) / self.period + self.phase)
        # random-walk: regenerate the prefix so a later start continues
        # the same walk deterministically.
        if rng is None:
            raise ValueError("random-walk bias needs a random stream")
        steps_needed = (start + count - 1) // self.hold + 1
        walk = np.cumsum(rng.normal(0.0, self.value, steps_needed))
        return walk[idx // self.hold]


@dataclass(frozen=True)
class NoiseModel:
    """Detector-noise and ambient-bias configuration for one measurement.

    ``sigma``/``mu`` parametrize i.i.d. Gaussian readout noise per sample;
    ``bias`` is the ambient trajectory seen by detector A (and by B, unless
    ``bias_b`` supplies an independent trajectory to model imbalance).
    The same seed and parameters always give identical sample streams, and
    detector A's stream does not change when detector B is added.
    """

    sigma: float = 0.0
    mu: float = 0.0
    bias: BiasTrajectory = BiasTrajectory()
    bias_b: BiasTrajectory | None = None
    seed: int = 0

    def __post_init__(self):
        if self.sigma < 0.0:
            raise ValueError("sigma must be non-negative")

    def stream(self, role: int):
        """Independent counter-based generator for one sampling role.

        Roles occupy disjoint Philox keys derived from the master seed, so
        each detector's noise and bias draws are fixed by (seed, role)
        alone, never by which other streams happen to be consumed.
        """
        key = ((self.seed & 0xFFFFFFFFFFFFFFFF) << 2) | role
        return np.random.Generator(np.random.Philox(key=key))


@dataclass(frozen=True)
class MeasurementRecord:
    """Detector readings for one displayed pattern set.

    ``yprime`` holds detector A's per-pattern readings in display order;
    ``yprimeB`` is present in complementary modes.  Pattern metadata and
    the producing noise configuration are kept for decoding and for
    validating reconstructor/record pairings.
    """

    yprime: np.ndarray
    yprimeB: np.ndarray | None
    mode: str
    k: int
    width: int
    height: int
    fingerprint: str
    noise: NoiseModel
    p: int | None = None
    l: int | None = None
    scale: float | None = None
    gain: float | None = None
    start_index: int = 0

    def __post_init__(self):
        if self.mode not in MODES:
            raise ValueError(f"unknown measurement mode {self.mode!r}")
        self.yprime.setflags(write=False)
        if self.yprimeB is not None:
            if self.yprimeB.shape != self.yprime.shape:
                raise ValueError("detector vectors differ in length")
            self.yprimeB.setflags(write=False)

    @property
    def count(self) -> int:
        return self.yprime.shape[0]


def measure(ps: PatternSet, scene: SceneImage, noise: NoiseModel,
            complementary: bool = False, start_index: int = 0) -> MeasurementRecord:
    """Simulate displaying every pattern of ``ps`` against ``scene``.

    Each reading is <pattern, scene> + bias(i) + mu + sigma*xi_i with the
    noise stream indexed by display position, so the record is bitwise
    reproducible for identical inputs.  With ``complementary`` the second
    detector simultaneously reads <1 - pattern, scene> with its own noise
    stream and (by default) the same bias trajectory.  ``start_index``
    offsets the trajectory and noise indices, letting a sequence of
    measurements share one continuously evolving ambient bias.
    """
    if ps.kind not in (KIND_DIRECT, KIND_SIMPLEX):
        raise ValueError(f"pattern set of kind {ps.kind!r} is not displayable")
    if (ps.width, ps.height) != (scene.width, scene.height):
        raise ValueError(
            f"pattern resolution {ps.width}x{ps.height} does not match scene "
            f"{scene.width}x{scene.height}")
    count = ps.count

    def bias_samples(bias, role):
        rng = noise.stream(role) if bias.kind == "random-walk" else None
        return bias.sample(count, start_index, rng)

    def noise_draw(role):
        rng = noise.stream(role)
        return rng.standard_normal(start_index + count)[start_index:]

    clean_a = ps.matrix @ scene.pixels
    bias_a = bias_samples(noise.bias, ROLE_BIAS_A)
    ya = clean_a + bias_a + noise.mu
    if noise.sigma > 0.0:
        ya = ya + noise.sigma * noise_draw(ROLE_NOISE_A)

    yb = None
    if complementary:
        clean_b = float(scene.pixels.sum()) - clean_a
        if noise.bias_b is None:
            bias_b = bias_a
        else:
            bias_b = bias_samples(noise.bias_b, ROLE_BIAS_B)
        yb = clean_b + bias_b + noise.mu
        if noise.sigma > 0.0:
            yb = yb + noise.sigma * noise_draw(ROLE_NOISE_B)

    family = "direct" if ps.kind == KIND_DIRECT else "simplex"
    mode = family + ("-complementary" if complementary else "-single")
    return MeasurementRecord(
        yprime=np.asarray(ya, dtype=float),
        yprimeB=None if yb is None else np.asarray(yb, dtype=float),
        mode=mode, k=ps.k, width=ps.width, height=ps.height,
        fingerprint=ps.fingerprint(), noise=noise,
        p=ps.p, l=ps.l, scale=ps.scale, gain=ps.gain, start_index=start_index)


def decode_direct(record: MeasurementRecord) -> np.ndarray:
    """Recover the signed measurement from a direct-mapped record.

    Single detector: y_i = y'_i - 0.5 * y'_all-ones, which removes the 0.5
    pattern offset but lets any common bias leak through at half strength.
    Complementary: y = 0.5 * (y'_A - y'_B) over the first k patterns.
    """
    if record.mode == MODE_DIRECT_SINGLE:
        k = record.k
        if record.count != k + 1:
            raise ValueError(
                f"direct record should hold k+1={k + 1} readings, has {record.count}")
        return record.yprime[:k] - 0.5 * record.yprime[k]
    if record.mode == MODE_DIRECT_COMPL:
        return 0.5 * (record.yprime[:record.k] - record.yprimeB[:record.k])
    raise ValueError(f"decode_direct cannot handle mode {record.mode!r}")


def decode_simplex(record: MeasurementRecord, Q: DecodeOperator) -> np.ndarray:
    """Recover the signed measurement from a simplex-coded record.

    Applies the bundle decode (which removes per-bundle-constant bias) to
    the readings, or to the detector difference in complementary mode, and
    drops any zero-padded rows beyond the original k.
    """
    if record.mode not in (MODE_SIMPLEX_SINGLE, MODE_SIMPLEX_COMPL):
        raise ValueError(f"decode_simplex cannot handle mode {record.mode!r}")
    if Q.p != record.p or Q.l != record.l:
        raise ValueError(
            f"decode operator (p={Q.p}, l={Q.l}) does not match record "
            f"(p={record.p}, l={record.l})")
    if record.mode == MODE_SIMPLEX_SINGLE:
        return Q.apply(record.yprime)[:record.k]
    return Q.apply(record.yprime - record.yprimeB)[:record.k]


def _bias_to_dict(bias: BiasTrajectory | None):
    return None if bias is None else asdict(bias)


def _bias_from_dict(d) -> BiasTrajectory | None:
    return None if d is None else BiasTrajectory(**d)


def save_record(record: MeasurementRecord, path) -> None:
    """Write a measurement record: JSON header line plus f64 LE vectors."""
    header = {
        "mode": record.mode,
        "count": record.count,
        "has_b": record.yprimeB is not None,
        "k": record.k,
        "width": record.width,
        "height": record.height,
        "fingerprint": record.fingerprint,
        "p": record.p,
        "l": record.l,
        "scale": record.scale,
        "gain": record.gain,
        "start_index": record.start_index,
        "sigma": record.noise.sigma,
        "mu": record.noise.mu,
        "seed": record.noise.seed,
        "bias": _bias_to_dict(record.noise.bias),
        "bias_b": _bias_to_dict(record.noise.bias_b),
    }
    with open(path, "wb") as f:
        f.write(json.dumps(header).encode("utf-8") + b"\n")
        f.write(np.ascontiguousarray(record.yprime, dtype="<f8").tobytes())
        if record.yprimeB is not None:
            f.write(np.ascontiguousarray(record.yprimeB, dtype="<f8").tobytes())


def load_record(path) -> MeasurementRecord:
    """Read a measurement record written by :func:`save_record`."""
    with open(path, "rb") as f:
        try:
            header = json.loads(f.readline().decode("utf-8"))
        except (UnicodeDecodeError, json.JSONDecodeError) as exc:
            raise ValueError(f"{path}: not a measurement-record file") from exc
        count = int(header["count"])
        data = f.read()
    vectors = 2 if header["has_b"] else 1
    if len(data) != vectors * count * 8:
        raise ValueError(f"{path}: truncated measurement data")
    flat = np.frombuffer(data, dtype="<f8")
    noise = NoiseModel(sigma=float(header["sigma"]), mu=float(header["mu"]),
                       bias=_bias_from_dict(header["bias"]),
                       bias_b=_bias_from_dict(header["bias_b"]),
                       seed=int(header["seed"]))
    scale = header.get("scale")
    gain = header.get("gain")
    return MeasurementRecord(
        yprime=flat[:count].copy(),
        yprimeB=flat[count:].copy() if header["has_b"] else None,
        mode=header["mode"], k=int(header["k"]),
        width=int(header["width"]), height=int(header["height"]),
        fingerprint=header["fingerprint"], noise=noise,
        p=header.get("p"), l=header.get("l"),
        scale=None if scale is None else float(scale),
        gain=None if gain is None else float(gain),
        start_index=int(header.get("start_index", 0)))
