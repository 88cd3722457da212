"""Simplex coding of real-valued measurement matrices.

A real k x n measurement matrix is re-encoded as a taller non-negative
matrix by expressing each bundle of p consecutive rows, pixel by pixel,
as coordinates over p of the p+1 vertices of a regular p-simplex (the
vertex furthest from the point is dropped, which makes all coordinates
non-negative).  The block-diagonal decode operator maps detector
readings taken with the non-negative patterns back to the signed
measurement; because the simplex vertices sum to zero, the decode also
removes any bias that is constant over each (p+1)-sample bundle.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

MAX_ORDER = 1024

# Solve results this far below zero are treated as round-off and clamped.
CLAMP_TOL = 1e-12


@dataclass(frozen=True)
class SimplexVertices:
    """Unit vertex coordinates of a regular p-simplex.

    ``V`` has shape (p, p+1) with one vertex per column: every column has
    unit norm, any two distinct columns have dot product -1/p, the columns
    sum to the zero vector, and V @ V.T == ((p+1)/p) * I.
    """

    p: int
    V: np.ndarray

    def __post_init__(self):
        self.V.setflags(write=False)


@dataclass(frozen=True)
class EncodedMatrix:
    """Non-negative simplex-coded form of a real measurement matrix.

    ``Mprime`` has shape (l*(p+1), n) with all entries in [0, 1].  The
    original matrix is recovered as ``Q @ Mprime * scale`` where Q is the
    decode operator for (p, l); rows beyond the original ``k`` are zero
    padding (present when k was not divisible by p).
    ``min_coefficient`` is the smallest raw decomposition coefficient seen
    before clamping, kept as a diagnostic for the non-negativity property.
    """

    p: int
    l: int
    n: int
    k: int
    Mprime: np.ndarray
    scale: float
    min_coefficient: float

    def __post_init__(self):
        self.Mprime.setflags(write=False)

    @property
    def padded_k(self) -> int:
        return self.l * self.p


def build_simplex_vertices(p: int) -> SimplexVertices:
    """Construct the vertices of a regular p-simplex.

    Uses the recursive embedding: at step i the previously placed columns
    have their first i-1 coordinates scaled by sqrt(1 - 1/i**2) and their
    i-th coordinate set to -1/i, then the new vertex e_i is appended.
    The construction is deterministic.

    Args:
        p: simplex order (space dimension), 1 <= p <= MAX_ORDER.

    Returns:
        SimplexVertices with V of shape (p, p+1).
    """
    if not isinstance(p, (int, np.integer)) or p < 1 or p > MAX_ORDER:
        raise ValueError(f"simplex order must be in 1..{MAX_ORDER}, got {p!r}")
    V = np.zeros((p, p + 1))
    for i in range(1, p + 1):
        V[: i - 1, :i] *= np.sqrt(1.0 - 1.0 / (i * i))
        V[i - 1, :i] = -1.0 / i
        V[i - 1, i] = 1.0
    return SimplexVertices(p=int(p), V=V)


def encode_matrix(M: np.ndarray, p: int) -> EncodedMatrix:
    """Re-encode a real matrix as a non-negative simplex-coded matrix.

    Each bundle of p consecutive rows of ``M`` is treated, column by
    column, as a point v in p-space.  The simplex vertex furthest from v
    (ties broken toward the smallest index) is dropped and v is solved for
    in the basis of the remaining p vertices; the resulting non-negative
    coefficients fill p of the bundle's p+1 output rows, the dropped
    vertex's row stays zero.  If the row count is not divisible by p the
    matrix is padded with zero rows first.  The assembled matrix is
    divided by its global maximum so that every entry lies in [0, 1]; the
    divisor is returned as ``scale``.

    Args:
        M: real matrix of shape (k, n), finite-valued.
        p: simplex order.

    Returns:
        EncodedMatrix with Mprime of shape (l*(p+1), n), l = ceil(k/p).
    """
    M = np.asarray(M, dtype=float)
    if M.ndim != 2 or M.shape[0] < 1 or M.shape[1] < 1:
        raise ValueError(f"expected a non-empty 2-D matrix, got shape {M.shape}")
    if not np.all(np.isfinite(M)):
        raise ValueError("measurement matrix contains non-finite entries")
    vertices = build_simplex_vertices(p)
    V = vertices.V
    k, n = M.shape
    l = -(-k // p)
    kpad = l * p
    if kpad != k:
        padded = np.zeros((kpad, n))
        padded[:k] = M
        M = padded

    # One point per (bundle, column) pair, laid out bundle-major.
    pts = M.reshape(l, p, n).transpose(0, 2, 1).reshape(l * n, p)
    sq_norms = np.einsum("ij,ij->i", pts, pts)
    nonzero = sq_norms > 0.0

    # argmax_q ||v - V_q||^2 expanded; ties resolve to the smallest q.
    d2 = sq_norms[:, None] - 2.0 * (pts @ V) + np.einsum("ij,ij->j", V, V)[None, :]
    furthest = np.argmax(d2, axis=1)

    coeffs = np.zeros((l * n, p + 1))
    for q in range(p + 1):
        sel = nonzero & (furthest == q)
        if not np.any(sel):
            continue
        basis = np.delete(V, q, axis=1)
        sol = np.linalg.solve(basis, pts[sel].T).T
        coeffs[sel, :q] = sol[:, :q]
        coeffs[sel, q + 1:] = sol[:, q:]

    min_coefficient = float(coeffs.min()) if coeffs.size else 0.0
    np.maximum(coeffs, 0.0, out=coeffs)

    Mprime = coeffs.reshape(l, n, p + 1).transpose(0, 2, 1).reshape(l * (p + 1), n)
    scale = float(Mprime.max())
    if scale == 0.0:
        scale = 1.0
    Mprime /= scale
    return EncodedMatrix(p=vertices.p, l=l, n=n, k=k, Mprime=Mprime,
                         scale=scale, min_coefficient=min_coefficient)


@dataclass(frozen=True)
class DecodeOperator:
    """Block-diagonal decode operator: l copies of the vertex matrix V.

    Acts as the Kronecker product of the l x l identity with V, mapping a
    vector of l*(p+1) detector readings to the l*p signed measurements.
    The operator annihilates any vector that is constant within each
    (p+1)-element bundle.
    """

    vertices: SimplexVertices
    l: int

    @property
    def p(self) -> int:
        return self.vertices.p

    @property
    def out_size(self) -> int:
        return self.l * self.p

    @property
    def in_size(self) -> int:
        return self.l * (self.p + 1)

    def apply(self, yprime: np.ndarray) -> np.ndarray:
        """Apply to a reading vector of length l*(p+1)."""
        yprime = np.asarray(yprime, dtype=float)
        if yprime.shape != (self.in_size,):
            raise ValueError(
                f"expected vector of length {self.in_size}, got shape {yprime.shape}")
        return (yprime.reshape(self.l, self.p + 1) @ self.vertices.V.T).reshape(-1)

    def matmul(self, A: np.ndarray) -> np.ndarray:
        """Multiply a matrix with l*(p+1) rows from the left."""
        A = np.asarray(A, dtype=float)
        if A.ndim != 2 or A.shape[0] != self.in_size:
            raise ValueError(
                f"expected matrix with {self.in_size} rows, got shape {A.shape}")
        blocks = A.reshape(self.l, self.p + 1, A.shape[1])
        out = np.einsum("ij,ljc->lic", self.vertices.V, blocks)
        return out.reshape(self.out_size, A.shape[1])

    def dense(self) -> np.ndarray:
        """Materialize as a dense (l*p) x (l*(p+1)) matrix."""
        return np.kron(np.eye(self.l), self.vertices.V)


def build_decode_operator(p: int, l: int) -> DecodeOperator:
    """Build the decode operator for l bundles over a p-simplex."""
    if not isinstance(l, (int, np.integer)) or l < 1:
        raise ValueError(f"bundle count must be a positive integer, got {l!r}")
    return DecodeOperator(vertices=build_simplex_vertices(p), l=int(l))


def decode_measurement(Q: DecodeOperator, yprime: np.ndarray) -> np.ndarray:
    """Map raw readings back to the signed measurement vector.

    Adding a constant to all of ``yprime`` (or a constant per bundle)
    leaves the result unchanged.
    """
    return Q.apply(yprime)


def complementary_combine(yA: np.ndarray, yB: np.ndarray) -> np.ndarray:
    """Subtract the complementary detector's readings from the primary's.

    The common-mode term (same light reaching both detectors) cancels
    here; the residual constant from the pattern complement is removed by
    the downstream decode.
    """
    yA = np.asarray(yA, dtype=float)
    yB = np.asarray(yB, dtype=float)
    if yA.shape != yB.shape:
        raise ValueError(f"detector vectors differ in shape: {yA.shape} vs {yB.shape}")
    return yA - yB
