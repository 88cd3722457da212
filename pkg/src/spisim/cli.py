"""Command-line interface: gen, simulate, reconstruct, sweep, dynamic.

Thin orchestration over the library modules with portable file formats.
Parameters may come from a flat INI-style config file (one section per
subcommand); command-line flags override file values.
"""

from __future__ import annotations

import argparse
import configparser
import os
import sys

import numpy as np

from . import imageio
from .camera import (BiasTrajectory, NoiseModel, SceneImage, load_record,
                     measure, save_record)
from .experiments import (DynamicConfig, SweepConfig, find_optimal_p,
                          run_dynamic_scene, run_psnr_sweep)
from .recon import (METHOD_TSVD, METHODS, build_for_patterns,
                    load_reconstructor, reconstruct, psnr, save_reconstructor)
from .sampling import (ORDER_LOWFREQ, ORDERINGS, SamplingBasisSpec,
                       binarize_error_diffusion, generate_dct_basis,
                       load_pattern_set, save_pattern_set, to_direct_dmd,
                       to_simplex_dmd)

_CONFIG_SECTIONS = {
    "gen": {"res", "k", "p", "direct", "binarize", "ordering", "out"},
    "simulate": {"patterns", "image", "sigma", "mu", "seed", "complementary",
                 "bias", "bias_value", "bias_slope", "bias_period",
                 "bias_phase", "bias_hold", "bias_b", "bias_b_value",
                 "bias_b_slope", "bias_b_period", "bias_b_phase",
                 "bias_b_hold", "start_index", "out"},
    "reconstruct": {"record", "patterns", "method", "param", "reference",
                    "cache", "out"},
    "sweep": {"res", "budget", "p_list", "noise_levels", "images", "seeds",
              "modes", "binarize", "method", "param", "ordering", "threads",
              "summarize", "out"},
    "dynamic": {"frames", "budget", "p", "sigma", "seed", "binarize",
                "method", "param", "bias", "bias_value", "bias_period",
                "bias_phase", "bias_hold", "bias_b", "bias_b_value",
                "bias_b_period", "bias_b_phase", "bias_b_hold", "out_dir",
                "out"},
}


class CliError(Exception):
    """Validation or I/O failure that maps to exit code 2."""


def _parse_list(text, conv):
    items = [s for s in str(text).replace(",", " ").split() if s]
    return tuple(conv(s) for s in items)


def _load_config(path, section) -> dict:
    if not os.path.exists(path):
        raise CliError(f"config file not found: {path}")
    parser = configparser.ConfigParser()
    parser.read(path)
    if not parser.has_section(section):
        return {}
    values = dict(parser.items(section))
    unknown = set(values) - _CONFIG_SECTIONS[section]
    if unknown:
        raise CliError(f"unknown keys in [{section}]: {sorted(unknown)}")
    return values


def _effective(args, key, conv, default=None):
    """Flag value if given, else config-file value, else default."""
    flag = getattr(args, key, None)
    if flag is not None:
        return flag
    if args.config:
        section = _load_config(args.config, args.command)
        if key in section:
            raw = section[key]
            if conv is bool:
                return raw.strip().lower() in ("1", "true", "yes", "on")
            return conv(raw)
    return default


def _effective_list(args, key, item_conv, default=None):
    """Like :func:`_effective` for comma/space-separated list parameters."""
    raw = _effective(args, key, str)
    if raw is None:
        return default
    return _parse_list(raw, item_conv)


def _bias_from_args(args, prefix="bias"):
    kind = _effective(args, prefix, str, "none")
    return BiasTrajectory(
        kind=kind,
        value=_effective(args, f"{prefix}_value", float, 0.0),
        slope=_effective(args, f"{prefix}_slope", float, 0.0)
        if prefix == "bias" else 0.0,
        period=_effective(args, f"{prefix}_period", float, 0.0),
        phase=_effective(args, f"{prefix}_phase", float, 0.0),
        hold=_effective(args, f"{prefix}_hold", int, 1),
    )


def _require(value, name):
    if value is None:
        raise CliError(f"missing required parameter: {name}")
    return value


def _load_scene(path, width=None, height=None) -> SceneImage:
    if not os.path.exists(path):
        raise CliError(f"image file not found: {path}")
    img = imageio.read_image(path)
    if width is not None and img.shape != (height, width):
        img = imageio.resample(img, width, height)
    return SceneImage.from_array(np.clip(img, 0.0, None))


def cmd_gen(args) -> int:
    res = _require(_effective(args, "res", int), "--res")
    k = _require(_effective(args, "k", int), "--k")
    p = _effective(args, "p", int)
    direct = bool(_effective(args, "direct", bool, False))
    binarize = bool(_effective(args, "binarize", bool, False))
    ordering = _effective(args, "ordering", str, ORDER_LOWFREQ)
    out = _require(_effective(args, "out", str), "--out")
    if k < 1:
        raise CliError("--k must be a positive pattern count")
    if direct == (p is not None):
        raise CliError("choose exactly one of --p <order> or --direct")
    if ordering not in ORDERINGS:
        raise CliError(f"unknown ordering {ordering!r}")

    raw = generate_dct_basis(SamplingBasisSpec(width=res, height=res, count=k,
                                               ordering=ordering))
    ps = to_direct_dmd(raw) if direct else to_simplex_dmd(raw, p)
    if binarize:
        ps = binarize_error_diffusion(ps)
    save_pattern_set(ps, out)
    print(f"patterns={ps.count} k={ps.k} p={ps.p} l={ps.l} scale={ps.scale} "
          f"gain={ps.gain} binarized={ps.binarized} out={out}")
    return 0


def cmd_simulate(args) -> int:
    pattern_path = _require(_effective(args, "patterns", str), "--patterns")
    image_path = _require(_effective(args, "image", str), "--image")
    out = _require(_effective(args, "out", str), "--out")
    if not os.path.exists(pattern_path):
        raise CliError(f"pattern file not found: {pattern_path}")
    ps = load_pattern_set(pattern_path)
    scene = _load_scene(image_path, ps.width, ps.height)
    seed = int(_effective(args, "seed", int, 0))
    noise = NoiseModel(
        sigma=_effective(args, "sigma", float, 0.0),
        mu=_effective(args, "mu", float, 0.0),
        bias=_bias_from_args(args, "bias"),
        bias_b=(_bias_from_args(args, "bias_b")
                if _effective(args, "bias_b", str) else None),
        seed=seed,
    )
    record = measure(ps, scene, noise,
                     complementary=bool(_effective(args, "complementary",
                                                   bool, False)),
                     start_index=int(_effective(args, "start_index", int, 0)))
    save_record(record, out)
    print(f"mode={record.mode} readings={record.count} seed={seed} out={out}")
    return 0


def cmd_reconstruct(args) -> int:
    record_path = _require(_effective(args, "record", str), "--record")
    pattern_path = _require(_effective(args, "patterns", str), "--patterns")
    out = _require(_effective(args, "out", str), "--out")
    for path in (record_path, pattern_path):
        if not os.path.exists(path):
            raise CliError(f"input file not found: {path}")
    method = _effective(args, "method", str, METHOD_TSVD)
    if method not in METHODS:
        raise CliError(f"unknown method {method!r}")
    param = _effective(args, "param", float)
    record = load_record(record_path)
    ps = load_pattern_set(pattern_path)

    cache_path = _effective(args, "cache", str)
    rec = None
    if cache_path and os.path.exists(cache_path):
        cached = load_reconstructor(cache_path)
        if (cached.fingerprint == ps.fingerprint() and cached.method == method
                and (param is None or cached.param == param)):
            rec = cached
            print(f"cache hit: {cache_path}", file=sys.stderr)
    if rec is None:
        rec = build_for_patterns(ps, method=method, param=param)
        if cache_path:
            save_reconstructor(rec, cache_path)
            print(f"cache write: {cache_path}", file=sys.stderr)

    estimate = reconstruct(rec, record)
    imageio.export_reconstruction(
        out, estimate.raw.reshape(record.height, record.width))
    reference = _effective(args, "reference", str)
    if reference:
        ref = _load_scene(reference, record.width, record.height)
        print(f"psnr_db={psnr(ref, estimate.raw):.6f}")
    print(f"image={out}", file=sys.stderr)
    return 0


def cmd_sweep(args) -> int:
    images = _effective_list(args, "images", str)
    if not images:
        raise CliError("missing required parameter: --images")
    p_values = _effective_list(args, "p_list", int, (1, 2, 3, 5, 10, 20, 50))
    modes = _effective_list(args, "modes", str, ("simplex-single",))
    if any(m.startswith("simplex") for m in modes) and not p_values:
        raise CliError("--p-list must be non-empty for simplex modes")
    out = _require(_effective(args, "out", str), "--out")
    try:
        cfg = SweepConfig(
            resolution=_effective(args, "res", int, 64),
            budget=_effective(args, "budget", int, 500),
            p_values=tuple(p_values),
            noise_levels=_effective_list(args, "noise_levels", float,
                                         (5e-3, 5e-4)),
            images=tuple(images),
            seeds=_effective_list(args, "seeds", int, (0, 1, 2)),
            modes=tuple(modes),
            binarize=bool(_effective(args, "binarize", bool, True)),
            method=_effective(args, "method", str, "auto"),
            param=_effective(args, "param", float),
            ordering=_effective(args, "ordering", str, ORDER_LOWFREQ),
        )
    except ValueError as exc:
        raise CliError(str(exc)) from exc
    result = run_psnr_sweep(cfg, threads=int(_effective(args, "threads",
                                                        int, 1)))
    result.write_csv(out)
    for row in result.errors:
        print(f"error: image={row.image} mode={row.mode} p={row.p}: "
              f"{row.error}", file=sys.stderr)
    print(f"rows={len(result.rows)} out={out}")
    if _effective(args, "summarize", bool, False):
        for ratio in cfg.noise_levels:
            try:
                best = find_optimal_p(result, ratio)
                print(f"optimal_p sigma_ratio={ratio} p={best}")
            except ValueError:
                pass
    return 0


def cmd_dynamic(args) -> int:
    frames_arg = _effective_list(args, "frames", str)
    if not frames_arg:
        raise CliError("missing required parameter: --frames")
    out = _require(_effective(args, "out", str), "--out")
    out_dir = _effective(args, "out_dir", str)
    frame_paths = []
    for entry in frames_arg:
        if os.path.isdir(entry):
            frame_paths.extend(sorted(
                os.path.join(entry, n) for n in os.listdir(entry)
                if n.lower().endswith((".pgm", ".png"))))
        else:
            frame_paths.append(entry)
    if len(frame_paths) < 2:
        raise CliError("dynamic sequence needs at least two frames")
    frames = [_load_scene(pth) for pth in frame_paths]
    bias_b_kind = _effective(args, "bias_b", str)
    cfg = DynamicConfig(
        budget=_effective(args, "budget", int, 500),
        p=_effective(args, "p", int, 10),
        sigma=_effective(args, "sigma", float, 0.0),
        bias=_bias_from_args(args, "bias"),
        bias_b=_bias_from_args(args, "bias_b") if bias_b_kind else None,
        seed=int(_effective(args, "seed", int, 0)),
        binarize=bool(_effective(args, "binarize", bool, True)),
        method=_effective(args, "method", str, "auto"),
        param=_effective(args, "param", float),
    )
    if out_dir:
        os.makedirs(out_dir, exist_ok=True)
    try:
        result = run_dynamic_scene(frames, cfg, out_dir=out_dir)
    except ValueError as exc:
        raise CliError(str(exc)) from exc
    result.write_csv(out)
    print(f"frames={len(frames)} rows={len(result.rows)} out={out}")
    return 0


def _add_common(sub):
    sub.add_argument("--seed", type=int, help="master random seed")
    sub.add_argument("--config", help="INI config file with per-command sections")
    sub.add_argument("--out", help="output file path")
    sub.add_argument("--threads", type=int, help="worker threads for sweeps")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="spisim",
        description="Simplex-coded single-pixel imaging simulator")
    commands = parser.add_subparsers(dest="command", required=True)

    gen = commands.add_parser("gen", help="generate a sampling pattern set")
    gen.add_argument("--res", type=int, help="pattern resolution (square)")
    gen.add_argument("--k", type=int, help="number of sampling functions")
    gen.add_argument("--p", type=int, help="simplex order")
    gen.add_argument("--direct", action="store_const", const=True,
                     help="direct DMD mapping instead of simplex coding")
    gen.add_argument("--binarize", action="store_const", const=True,
                     help="binarize by error diffusion")
    gen.add_argument("--ordering", choices=ORDERINGS)
    _add_common(gen)

    sim = commands.add_parser("simulate", help="simulate a measurement")
    sim.add_argument("--patterns", help="pattern-set file")
    sim.add_argument("--image", help="scene image (PGM/PNG)")
    sim.add_argument("--sigma", type=float, help="detector noise std dev")
    sim.add_argument("--mu", type=float, help="detector noise mean")
    sim.add_argument("--complementary", action="store_const", const=True)
    sim.add_argument("--start-index", dest="start_index", type=int)
    for prefix in ("bias", "bias-b"):
        dest = prefix.replace("-", "_")
        sim.add_argument(f"--{prefix}", dest=dest,
                         choices=("none", "constant", "linear-drift",
                                  "sinusoidal", "random-walk"))
        sim.add_argument(f"--{prefix}-value", dest=f"{dest}_value", type=float)
        sim.add_argument(f"--{prefix}-slope", dest=f"{dest}_slope", type=float)
        sim.add_argument(f"--{prefix}-period", dest=f"{dest}_period", type=float)
        sim.add_argument(f"--{prefix}-phase", dest=f"{dest}_phase", type=float)
        sim.add_argument(f"--{prefix}-hold", dest=f"{dest}_hold", type=int)
    _add_common(sim)

    rec = commands.add_parser("reconstruct", help="reconstruct an image")
    rec.add_argument("--record", help="measurement-record file")
    rec.add_argument("--patterns", help="pattern-set file")
    rec.add_argument("--method", choices=METHODS)
    rec.add_argument("--param", type=float)
    rec.add_argument("--reference", help="reference image for PSNR")
    rec.add_argument("--cache", help="reconstructor cache file")
    _add_common(rec)

    sweep = commands.add_parser("sweep", help="run a PSNR-vs-p noise sweep")
    sweep.add_argument("--res", type=int)
    sweep.add_argument("--budget", type=int, help="total pattern budget K")
    sweep.add_argument("--p-list", dest="p_list", help="comma-separated p values")
    sweep.add_argument("--noise-levels", dest="noise_levels",
                       help="comma-separated sigma/y_max ratios")
    sweep.add_argument("--images", help="comma-separated image paths")
    sweep.add_argument("--seeds", help="comma-separated seeds")
    sweep.add_argument("--modes", help="comma-separated measurement modes")
    sweep.add_argument("--binarize", action="store_const", const=True)
    sweep.add_argument("--no-binarize", dest="binarize", action="store_const",
                       const=False)
    sweep.add_argument("--method", choices=(*METHODS, "auto"))
    sweep.add_argument("--param", type=float)
    sweep.add_argument("--ordering", choices=ORDERINGS)
    sweep.add_argument("--summarize", action="store_const", const=True)
    _add_common(sweep)

    dyn = commands.add_parser("dynamic", help="run a dynamic-bias sequence")
    dyn.add_argument("--frames", help="frame files or a directory")
    dyn.add_argument("--budget", type=int)
    dyn.add_argument("--p", type=int)
    dyn.add_argument("--sigma", type=float)
    dyn.add_argument("--binarize", action="store_const", const=True)
    dyn.add_argument("--no-binarize", dest="binarize", action="store_const",
                     const=False)
    dyn.add_argument("--method", choices=(*METHODS, "auto"))
    dyn.add_argument("--param", type=float)
    dyn.add_argument("--out-dir", dest="out_dir", help="directory for PGM frames")
    for prefix in ("bias", "bias-b"):
        dest = prefix.replace("-", "_")
        dyn.add_argument(f"--{prefix}", dest=dest,
                         choices=("none", "constant", "linear-drift",
                                  "sinusoidal", "random-walk"))
        dyn.add_argument(f"--{prefix}-value", dest=f"{dest}_value", type=float)
        dyn.add_argument(f"--{prefix}-period", dest=f"{dest}_period", type=float)
        dyn.add_argument(f"--{prefix}-phase", dest=f"{dest}_phase", type=float)
        dyn.add_argument(f"--{prefix}-hold", dest=f"{dest}_hold", type=int)
    _add_common(dyn)

    return parser


_COMMANDS = {
    "gen": cmd_gen,
    "simulate": cmd_simulate,
    "reconstruct": cmd_reconstruct,
    "sweep": cmd_sweep,
    "dynamic": cmd_dynamic,
}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except CliError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
