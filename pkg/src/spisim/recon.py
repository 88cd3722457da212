"""Linear image reconstruction from single-pixel measurements.

Builds regularized generalized inverses of the effective measurement
matrix (the signed matrix implied by the patterns actually displayed,
binarized or not) and applies them to measurement records.  For
simplex-coded records the generalized inverse is fused with the decode
operator ahead of time, so reconstruction from raw readings is a single
matrix-vector product that can be precomputed before any measurement.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

from .camera import (MODE_DIRECT_COMPL, MODE_DIRECT_SINGLE, MODE_SIMPLEX_COMPL,
                     MODE_SIMPLEX_SINGLE, MeasurementRecord, SceneImage,
                     decode_direct)
from .sampling import (KIND_DIRECT, KIND_SIMPLEX, PatternSet, dct_axis_basis,
                       matrix_fingerprint)
from .simplex import DecodeOperator, build_decode_operator

METHOD_TSVD = "truncated-svd"
METHOD_TIKHONOV = "tikhonov"
METHOD_FDRI = "fdri"
METHODS = (METHOD_TSVD, METHOD_TIKHONOV, METHOD_FDRI)

DEFAULT_PARAMS = {METHOD_TSVD: 1e-10, METHOD_TIKHONOV: 1e-6,
                  METHOD_FDRI: 0.35}

# Butterworth order of the fdri frequency weighting.
FDRI_ORDER = 8


@dataclass(frozen=True)
class Reconstructor:
    """A precomputed linear map from detector signals to image estimates.

    ``P`` maps decoded signals (n x k) or, when ``fused``, raw simplex
    readings (n x l*(p+1)).  ``fingerprint`` identifies the pattern set or
    effective matrix the map was built from; reconstruction refuses
    records whose fingerprint differs.
    """

    P: np.ndarray
    method: str
    param: float
    fingerprint: str
    fused: bool = False

    def __post_init__(self):
        self.P.setflags(write=False)


@dataclass(frozen=True)
class Reconstruction:
    """Result of applying a reconstructor to one measurement record."""

    raw: np.ndarray          # unclipped estimate, used for metrics
    image: SceneImage        # clipped to >= 0 for display/export

    def __post_init__(self):
        self.raw.setflags(write=False)


def _tsvd_pinv(M: np.ndarray, rel_cutoff: float) -> np.ndarray:
    U, s, Vt = np.linalg.svd(M, full_matrices=False)
    if s[0] == 0.0:
        raise ValueError("effective matrix has rank 0")
    keep = s > rel_cutoff * s[0]
    return (Vt[keep].T / s[keep]) @ U[:, keep].T


def frequency_weights(height: int, width: int, cutoff: float,
                      order: int = FDRI_ORDER) -> np.ndarray:
    """Butterworth low-pass weights over the 2-D DCT frequency grid.

    ``cutoff`` is the half-power frequency as a fraction of the axis
    length, measured in the max-coordinate metric max(u/height, v/width);
    weights are strictly positive so the weighting stays invertible.
    """
    if cutoff <= 0.0:
        raise ValueError("frequency cutoff must be positive")
    u = np.arange(height)[:, None] / height
    v = np.arange(width)[None, :] / width
    rho = np.maximum(u, v)
    return 1.0 / (1.0 + (rho / cutoff) ** (2 * order))


def _weight_rows(rows: np.ndarray, weights: np.ndarray) -> np.ndarray:
    """Apply the DCT-domain weighting to each row, viewed as an image."""
    height, width = weights.shape
    ch = dct_axis_basis(height)
    cw = dct_axis_basis(width)
    imgs = rows.reshape(rows.shape[0], height, width)
    coeffs = (ch @ imgs) @ cw.T
    coeffs *= weights
    out = (ch.T @ coeffs) @ cw
    return out.reshape(rows.shape[0], height * width)


def build_reconstructor(M_eff: np.ndarray, method: str = METHOD_TSVD,
                        param: float | None = None,
                        fingerprint: str | None = None,
                        shape: tuple[int, int] | None = None) -> Reconstructor:
    """Build a regularized generalized inverse of an effective matrix.

    truncated-svd keeps singular values above param * sigma_max and
    inverts on that subspace; tikhonov solves the k x k normal system
    (M M^T + param * sigma_max^2 I), which is cheap in the compressive
    regime k <= n.  fdri fills the Fourier-domain-regularized slot with a
    frequency-weighted minimum-norm inverse, P = W (M W)^+ with W a
    low-pass weighting diagonal in the 2-D DCT domain: the solution is
    steered away from high-frequency content, which is what makes
    binarized (error-diffused) pattern matrices invertible in practice.

    Args:
        M_eff: effective measurement matrix, shape (k, n) with k <= n.
        method: "truncated-svd", "tikhonov", or "fdri".
        param: rank tolerance / regularization weight / frequency cutoff;
            method default if None.
        fingerprint: identity to stamp on the reconstructor (defaults to a
            content hash of M_eff).
        shape: (height, width) of the pixel grid; required by fdri.
    """
    M = np.asarray(M_eff, dtype=float)
    if M.ndim != 2:
        raise ValueError("effective matrix must be 2-D")
    if not np.all(np.isfinite(M)):
        raise ValueError("effective matrix contains non-finite entries")
    k, n = M.shape
    if k > n:
        raise ValueError(f"expected k <= n (compressive regime), got {k}x{n}")
    if method not in METHODS:
        raise ValueError(f"unknown reconstruction method {method!r}")
    if param is None:
        param = DEFAULT_PARAMS[method]

    if method == METHOD_TSVD:
        P = _tsvd_pinv(M, param)
    elif method == METHOD_TIKHONOV:
        G = M @ M.T
        smax2 = float(np.linalg.eigvalsh(G)[-1])
        if smax2 <= 0.0:
            raise ValueError("effective matrix has rank 0")
        A = G + (param * smax2) * np.eye(k)
        P = np.linalg.solve(A, M).T
    else:
        if shape is None:
            raise ValueError("fdri needs the pixel grid shape (height, width)")
        if shape[0] * shape[1] != n:
            raise ValueError(f"shape {shape} does not match {n} columns")
        weights = frequency_weights(shape[0], shape[1], cutoff=param)
        weighted = _weight_rows(M, weights)
        P_w = _tsvd_pinv(weighted, DEFAULT_PARAMS[METHOD_TSVD])
        P = _weight_rows(P_w.T, weights).T

    return Reconstructor(P=P, method=method, param=float(param),
                         fingerprint=fingerprint or matrix_fingerprint(M),
                         fused=False)


def build_simplex_reconstructor(Mprime: np.ndarray, Q: DecodeOperator,
                                method: str = METHOD_TSVD,
                                param: float | None = None,
                                fingerprint: str | None = None,
                                shape: tuple[int, int] | None = None
                                ) -> Reconstructor:
    """Build the fused reconstructor P' = P @ Q for simplex-coded patterns.

    The generalized inverse P is taken of the effective signed matrix
    Q @ Mprime (what the displayed, possibly binarized, patterns actually
    measure), then fused with the decode so raw readings reconstruct in
    one product.  The fused map inherits the decode's bias immunity.
    """
    Mprime = np.asarray(Mprime, dtype=float)
    inner = build_reconstructor(Q.matmul(Mprime), method=method, param=param,
                                shape=shape)
    fused = inner.P @ Q.dense()
    return Reconstructor(P=fused, method=inner.method, param=inner.param,
                         fingerprint=fingerprint or matrix_fingerprint(Mprime),
                         fused=True)


def build_for_patterns(ps: PatternSet, method: str = METHOD_TSVD,
                       param: float | None = None) -> Reconstructor:
    """Build the reconstructor matching a displayable pattern set."""
    shape = (ps.height, ps.width)
    if ps.kind == KIND_SIMPLEX:
        Q = build_decode_operator(ps.p, ps.l)
        return build_simplex_reconstructor(ps.matrix, Q, method=method,
                                           param=param,
                                           fingerprint=ps.fingerprint(),
                                           shape=shape)
    if ps.kind == KIND_DIRECT:
        M_eff = ps.matrix[:ps.k] - 0.5
        return build_reconstructor(M_eff, method=method, param=param,
                                   fingerprint=ps.fingerprint(), shape=shape)
    raise ValueError(f"no reconstructor for pattern kind {ps.kind!r}")


def reconstruct(rec: Reconstructor, record: MeasurementRecord) -> Reconstruction:
    """Apply a reconstructor to a measurement record.

    The record's pattern fingerprint must match the reconstructor's.  For
    complementary records the detector difference is halved so both modes
    reconstruct at unit gain with the same precomputed map.  The returned
    image is clipped to non-negative values; ``raw`` keeps the unclipped
    estimate for metrics.
    """
    if rec.fingerprint != record.fingerprint:
        raise ValueError("reconstructor was built for a different pattern set")
    if record.mode in (MODE_SIMPLEX_SINGLE, MODE_SIMPLEX_COMPL):
        if not rec.fused:
            raise ValueError("simplex record needs a fused reconstructor")
        if record.mode == MODE_SIMPLEX_SINGLE:
            signal = record.yprime
        else:
            signal = 0.5 * (record.yprime - record.yprimeB)
    elif record.mode in (MODE_DIRECT_SINGLE, MODE_DIRECT_COMPL):
        if rec.fused:
            raise ValueError("direct record needs an unfused reconstructor")
        signal = decode_direct(record)
    else:
        raise ValueError(f"unknown record mode {record.mode!r}")
    if rec.P.shape[1] != signal.shape[0]:
        raise ValueError(
            f"reconstructor expects {rec.P.shape[1]} signal entries, "
            f"record provides {signal.shape[0]}")
    raw = rec.P @ signal
    clipped = np.clip(raw, 0.0, None).reshape(record.height, record.width)
    return Reconstruction(raw=raw, image=SceneImage.from_array(clipped))


def psnr(reference, estimate) -> float:
    """Peak signal-to-noise ratio, 10*log10(n*max(x)^2 / ||x - xhat||^2).

    Accepts SceneImage or plain arrays; the estimate is compared unclipped.
    Returns +inf when the estimate matches the reference exactly.
    """
    ref = reference.pixels if isinstance(reference, SceneImage) else \
        np.asarray(reference, dtype=float).reshape(-1)
    est = estimate.pixels if isinstance(estimate, SceneImage) else \
        np.asarray(estimate, dtype=float).reshape(-1)
    if ref.shape != est.shape:
        raise ValueError(f"image sizes differ: {ref.shape} vs {est.shape}")
    peak = float(ref.max())
    if peak <= 0.0:
        raise ValueError("reference image is all-zero")
    err2 = float(np.sum((ref - est) ** 2))
    if err2 == 0.0:
        return math.inf
    return 10.0 * math.log10(ref.size * peak * peak / err2)


def save_reconstructor(rec: Reconstructor, path) -> None:
    """Write a reconstructor cache: JSON header line plus f64 LE matrix."""
    header = {
        "fingerprint": rec.fingerprint,
        "method": rec.method,
        "param": rec.param,
        "fused": rec.fused,
        "shape": list(rec.P.shape),
    }
    with open(path, "wb") as f:
        f.write(json.dumps(header).encode("utf-8") + b"\n")
        f.write(np.ascontiguousarray(rec.P, dtype="<f8").tobytes())


def load_reconstructor(path) -> Reconstructor:
    """Read a reconstructor cache written by :func:`save_reconstructor`."""
    with open(path, "rb") as f:
        try:
            header = json.loads(f.readline().decode("utf-8"))
        except (UnicodeDecodeError, json.JSONDecodeError) as exc:
            raise ValueError(f"{path}: not a reconstructor cache file") from exc
        rows, cols = (int(v) for v in header["shape"])
        data = f.read()
    if len(data) != rows * cols * 8:
        raise ValueError(f"{path}: truncated reconstructor data")
    P = np.frombuffer(data, dtype="<f8").reshape(rows, cols).copy()
    return Reconstructor(P=P, method=header["method"], param=float(header["param"]),
                         fingerprint=header["fingerprint"],
                         fused=bool(header["fused"]))
