"""Experiment harnesses: noise sweeps and dynamic-bias sequences.

Runs the desk-scale studies: reconstruction quality versus simplex order
across detector-noise levels under a fixed pattern budget, and frame
sequences measured under a drifting ambient bias with imbalanced
complementary detectors.  Results are emitted as CSV tables and PGM
frames.
"""

from __future__ import annotations

import csv
import hashlib
import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import imageio
from .camera import BiasTrajectory, NoiseModel, SceneImage, measure
from .recon import (METHOD_FDRI, METHOD_TSVD, build_for_patterns, psnr,
                    reconstruct)
from .sampling import (ORDER_LOWFREQ, PatternSet, SamplingBasisSpec,
                       binarize_error_diffusion, generate_dct_basis,
                       to_direct_dmd, to_simplex_dmd)

SWEEP_MODES = ("direct-single", "simplex-single",
               "direct-complementary", "simplex-complementary")

METHOD_AUTO = "auto"

CSV_HEADER = ("image", "mode", "p", "sigma_ratio", "seed", "k", "psnr_db", "wall_ms")


def budget_k(K: int, p: int) -> int:
    """Largest k that is a multiple of p with k*(1+1/p) patterns <= K."""
    if K < p + 1:
        raise ValueError(f"budget {K} cannot fit a single p={p} bundle")
    k = (K * p) // (p + 1)
    return k - (k % p)


@dataclass(frozen=True)
class SweepConfig:
    """Configuration of a PSNR-versus-simplex-order sweep.

    ``budget`` is the total display budget K; each simplex order p samples
    k = budget_k(K, p) functions so that k*(1+1/p) fits the budget, while
    direct modes use K-1 functions plus the all-ones pattern.
    ``noise_levels`` are sigma / y_max ratios with y_max the largest
    noise-free reading of the pattern set on the image at hand.
    """

    resolution: int = 64
    budget: int = 500
    p_values: tuple[int, ...] = (1, 2, 3, 5, 10, 20, 50)
    noise_levels: tuple[float, ...] = (5e-3, 5e-4)
    images: tuple[str, ...] = ()
    seeds: tuple[int, ...] = (0, 1, 2)
    modes: tuple[str, ...] = ("simplex-single",)
    binarize: bool = True
    method: str = METHOD_AUTO
    param: float | None = None
    ordering: str = ORDER_LOWFREQ

    def __post_init__(self):
        if not self.images:
            raise ValueError("sweep needs at least one image")
        if not self.seeds:
            raise ValueError("sweep needs at least one seed")
        unknown = set(self.modes) - set(SWEEP_MODES)
        if unknown:
            raise ValueError(f"unknown sweep modes: {sorted(unknown)}")
        if any(m.startswith("simplex") for m in self.modes) and not self.p_values:
            raise ValueError("simplex modes need a non-empty p list")


@dataclass(frozen=True)
class SweepRow:
    image: str
    mode: str
    p: int              # 0 for direct modes
    sigma_ratio: float
    seed: int
    k: int
    psnr_db: float
    wall_ms: int
    error: str | None = None


@dataclass
class SweepResult:
    rows: list[SweepRow] = field(default_factory=list)

    @property
    def errors(self) -> list[SweepRow]:
        return [r for r in self.rows if r.error is not None]

    def write_csv(self, path) -> None:
        """Write the result table (UTF-8, LF line endings)."""
        with open(path, "w", encoding="utf-8", newline="") as f:
            writer = csv.writer(f, lineterminator="\n")
            writer.writerow(CSV_HEADER)
            for r in self.rows:
                writer.writerow([r.image, r.mode, r.p, r.sigma_ratio, r.seed,
                                 r.k, _format_psnr(r.psnr_db), r.wall_ms])


def _format_psnr(value: float) -> str:
    if math.isinf(value):
        return "inf"
    if math.isnan(value):
        return "nan"
    return f"{value:.6f}"


def _build_pattern_sets(cfg: SweepConfig) -> dict[tuple[str, int], PatternSet]:
    """One displayable pattern set per (family, p) used by the sweep."""
    sets = {}
    families = {m.split("-")[0] for m in cfg.modes}
    if "direct" in families:
        raw = generate_dct_basis(SamplingBasisSpec(
            width=cfg.resolution, height=cfg.resolution,
            count=cfg.budget - 1, ordering=cfg.ordering))
        ps = to_direct_dmd(raw)
        sets[("direct", 0)] = binarize_error_diffusion(ps) if cfg.binarize else ps
    if "simplex" in families:
        for p in cfg.p_values:
            k = budget_k(cfg.budget, p)
            raw = generate_dct_basis(SamplingBasisSpec(
                width=cfg.resolution, height=cfg.resolution,
                count=k, ordering=cfg.ordering))
            ps = to_simplex_dmd(raw, p)
            sets[("simplex", p)] = \
                binarize_error_diffusion(ps) if cfg.binarize else ps
    return sets


def _tuple_seed(*parts) -> int:
    """Stable 64-bit seed derived from a tuple of configuration values."""
    digest = hashlib.sha256("|".join(str(p) for p in parts).encode()).digest()
    return int.from_bytes(digest[:8], "little")


def _resolve_method(method: str, binarize: bool) -> str:
    """auto picks the frequency-weighted inverse for dithered patterns."""
    if method == METHOD_AUTO:
        return METHOD_FDRI if binarize else METHOD_TSVD
    return method


def _build_reconstructor_for(ps: PatternSet, method: str,
                             param: float | None):
    method = _resolve_method(method, ps.binarized)
    if method == METHOD_FDRI and param is None:
        # pass the sampled band, suppress everything above it: the highest
        # sampled shell for low-frequency-first ordering is ceil(sqrt(k))-1
        param = (math.ceil(math.sqrt(ps.k)) + 0.5) / max(ps.height, ps.width)
    return build_for_patterns(ps, method=method, param=param)


def run_psnr_sweep(cfg: SweepConfig, threads: int = 1,
                   clock=None) -> SweepResult:
    """Run the full sweep: patterns -> measure -> reconstruct -> PSNR.

    Rows come back in deterministic configuration order (image, mode, p,
    noise level, seed) regardless of worker scheduling; per-row noise
    seeds are derived from the configured seed and the row coordinates.
    Unreadable images produce error rows and the sweep continues.
    ``clock`` may inject a timing source (for reproducible CSV bytes).
    """
    if clock is None:
        clock = time.perf_counter
    pattern_sets = _build_pattern_sets(cfg)
    reconstructors = {
        key: _build_reconstructor_for(ps, cfg.method, cfg.param)
        for key, ps in pattern_sets.items()
    }

    scenes: dict[str, SceneImage | None] = {}
    for name in cfg.images:
        try:
            img = imageio.read_image(name)
            img = imageio.resample(img, cfg.resolution, cfg.resolution)
            scenes[name] = SceneImage.from_array(np.clip(img, 0.0, None))
        except (OSError, ValueError):
            scenes[name] = None

    jobs = []
    for name in cfg.images:
        for mode in cfg.modes:
            family = mode.split("-")[0]
            plist = cfg.p_values if family == "simplex" else (0,)
            for p in plist:
                for ratio in cfg.noise_levels:
                    for seed in cfg.seeds:
                        jobs.append((name, mode, p, ratio, seed))

    def run_one(job) -> SweepRow:
        name, mode, p, ratio, seed = job
        family = mode.split("-")[0]
        ps = pattern_sets[(family, p)]
        k = ps.k
        scene = scenes[name]
        if scene is None:
            return SweepRow(image=name, mode=mode, p=p, sigma_ratio=ratio,
                            seed=seed, k=k, psnr_db=math.nan, wall_ms=0,
                            error="unreadable image")
        t0 = clock()
        y_max = float(np.max(ps.matrix @ scene.pixels))
        noise = NoiseModel(sigma=ratio * y_max, seed=_tuple_seed(
            seed, name, mode, p, ratio))
        record = measure(ps, scene, noise,
                         complementary=mode.endswith("complementary"))
        estimate = reconstruct(reconstructors[(family, p)], record)
        value = psnr(scene, estimate.raw)
        wall_ms = int(round((clock() - t0) * 1000.0))
        return SweepRow(image=name, mode=mode, p=p, sigma_ratio=ratio,
                        seed=seed, k=k, psnr_db=value, wall_ms=wall_ms)

    result = SweepResult()
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            result.rows = list(pool.map(run_one, jobs))
    else:
        result.rows = [run_one(job) for job in jobs]
    return result


def find_optimal_p(result: SweepResult, sigma_ratio: float,
                   mode: str | None = None) -> int:
    """Simplex order with the highest image-and-seed-averaged PSNR.

    Considers simplex rows at the given noise level (optionally restricted
    to one mode); ties resolve to the smaller p.
    """
    by_p: dict[int, list[float]] = {}
    for r in result.rows:
        if r.error is not None or r.p < 1:
            continue
        if r.sigma_ratio != sigma_ratio:
            continue
        if mode is not None and r.mode != mode:
            continue
        by_p.setdefault(r.p, []).append(r.psnr_db)
    if not by_p:
        raise ValueError(f"no simplex rows at noise level {sigma_ratio}")
    ps = sorted(by_p)
    means = [float(np.mean(by_p[p])) for p in ps]
    return ps[int(np.argmax(means))]


@dataclass(frozen=True)
class DynamicConfig:
    """Configuration of a dynamic-scene, drifting-bias sequence."""

    budget: int = 500
    p: int = 10
    sigma: float = 0.0
    bias: BiasTrajectory = BiasTrajectory()
    bias_b: BiasTrajectory | None = None
    seed: int = 0
    binarize: bool = True
    method: str = METHOD_AUTO
    param: float | None = None
    ordering: str = ORDER_LOWFREQ


@dataclass(frozen=True)
class DynamicRow:
    frame: int
    mode: str
    psnr_db: float


@dataclass
class DynamicResult:
    rows: list[DynamicRow] = field(default_factory=list)
    files: list[str] = field(default_factory=list)

    def psnr_series(self, mode: str) -> list[float]:
        return [r.psnr_db for r in self.rows if r.mode == mode]

    def write_csv(self, path) -> None:
        with open(path, "w", encoding="utf-8", newline="") as f:
            writer = csv.writer(f, lineterminator="\n")
            writer.writerow(("frame", "mode", "psnr_db"))
            for r in self.rows:
                writer.writerow((r.frame, r.mode, _format_psnr(r.psnr_db)))


def run_dynamic_scene(frames: list[SceneImage], cfg: DynamicConfig,
                      out_dir=None) -> DynamicResult:
    """Measure a frame sequence under an evolving ambient bias.

    Every frame is acquired in both complementary modes (direct and
    simplex-coded) at the same display budget; the bias trajectory
    advances continuously across frames via the sample index.  Per-frame
    PSNR rows are returned for both modes, and reconstructions are written
    as PGM files when ``out_dir`` is given.
    """
    if len(frames) < 2:
        raise ValueError("dynamic sequence needs at least two frames")
    if cfg.bias.kind == "sinusoidal" and cfg.bias.period <= cfg.p + 1:
        raise ValueError("bias period must exceed one (p+1)-pattern bundle")
    width, height = frames[0].width, frames[0].height
    if any((f.width, f.height) != (width, height) for f in frames):
        raise ValueError("all frames must share one resolution")

    raw_direct = generate_dct_basis(SamplingBasisSpec(
        width=width, height=height, count=cfg.budget - 1, ordering=cfg.ordering))
    ps_direct = to_direct_dmd(raw_direct)
    k_simplex = budget_k(cfg.budget, cfg.p)
    raw_simplex = generate_dct_basis(SamplingBasisSpec(
        width=width, height=height, count=k_simplex, ordering=cfg.ordering))
    ps_simplex = to_simplex_dmd(raw_simplex, cfg.p)
    if cfg.binarize:
        ps_direct = binarize_error_diffusion(ps_direct)
        ps_simplex = binarize_error_diffusion(ps_simplex)
    rec_direct = _build_reconstructor_for(ps_direct, cfg.method, cfg.param)
    rec_simplex = _build_reconstructor_for(ps_simplex, cfg.method, cfg.param)

    noise = NoiseModel(sigma=cfg.sigma, bias=cfg.bias, bias_b=cfg.bias_b,
                       seed=cfg.seed)
    result = DynamicResult()
    for t, frame in enumerate(frames):
        for mode, ps, rec in (("direct-complementary", ps_direct, rec_direct),
                              ("simplex-complementary", ps_simplex, rec_simplex)):
            record = measure(ps, frame, noise, complementary=True,
                             start_index=t * ps.count)
            estimate = reconstruct(rec, record)
            result.rows.append(DynamicRow(
                frame=t, mode=mode, psnr_db=psnr(frame, estimate.raw)))
            if out_dir is not None:
                name = f"{out_dir}/frame{t:03d}_{mode}.pgm"
                imageio.export_reconstruction(
                    name, estimate.raw.reshape(height, width))
                result.files.append(name)
    return result
