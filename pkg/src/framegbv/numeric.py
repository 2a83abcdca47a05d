"""Mean-centred PCA with explained-variance accounting and back-projection.

The decomposition is taken on whichever side of the centred matrix is
smaller: the ``d x d`` covariance when ``d <= n``, otherwise the ``n x n``
Gram matrix (the usual regime for text features).
"""

from __future__ import annotations

import struct
import warnings
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import ConvergenceError, DegenerateInput, ParseError, ShapeError

_MAGIC = b"FGPCA001"
_HEADER = struct.Struct("<8sQQQQ")


@dataclass(frozen=True)
class PcaModel:
    mean: np.ndarray          # (d,)
    components: np.ndarray    # (d, k), orthonormal columns
    variances: np.ndarray     # (k,), descending
    total_variance: float
    n_samples: int

    @property
    def n_components(self):
        return self.components.shape[1]

    @property
    def n_features(self):
        return self.components.shape[0]


def _as_dense(X):
    if hasattr(X, "toarray"):
        X = X.toarray()
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2:
        raise ShapeError(f"expected a 2-D matrix, got shape {X.shape}")
    return X


def _fix_signs(V):
    """Flip each column so its largest-magnitude entry is positive."""
    if V.size == 0:
        return V
    rows = np.argmax(np.abs(V), axis=0)
    signs = np.sign(V[rows, np.arange(V.shape[1])])
    signs[signs == 0] = 1.0
    return V * signs


def pca_fit(X, k_requested):
    X = _as_dense(X)
    n, d = X.shape
    if n < 2:
        raise DegenerateInput(f"PCA needs at least 2 rows, got {n}")
    if k_requested < 1:
        raise ValueError("k_requested must be >= 1")
    if not np.all(np.isfinite(X)):
        raise ValueError("non-finite entries in PCA input")
    bound = min(n - 1, d)
    k = min(k_requested, bound)
    if k < k_requested:
        warnings.warn(f"requested {k_requested} components, rank bound allows {bound}",
                      RuntimeWarning, stacklevel=2)

    mean = X.mean(axis=0)
    Xc = X - mean
    total = float(np.einsum("ij,ij->", Xc, Xc) / (n - 1))

    try:
        if d <= n:
            evals, evecs = np.linalg.eigh(Xc.T @ Xc)
            order = np.argsort(evals)[::-1][:k]
            evals = np.clip(evals[order], 0.0, None)
            V = evecs[:, order]
        else:
            evals, U = np.linalg.eigh(Xc @ Xc.T)
            order = np.argsort(evals)[::-1][:k]
            evals = np.clip(evals[order], 0.0, None)
            U = U[:, order]
            keep = evals > 0
            V = np.zeros((d, k))
            V[:, keep] = (Xc.T @ U[:, keep]) / np.sqrt(evals[keep])
    except np.linalg.LinAlgError as exc:
        raise ConvergenceError(f"eigendecomposition failed: {exc}") from exc

    # components beyond the numerical rank carry no variance and, on the
    # Gram side, no direction; drop them rather than invent one
    tol = max(n, d) * np.finfo(float).eps * (evals[0] if len(evals) else 0.0)
    rank = int(np.sum(evals > tol)) if len(evals) and evals[0] > 0 else 0
    if rank < k:
        warnings.warn(f"data has numerical rank {rank}; keeping {rank} of {k} "
                      "components", RuntimeWarning, stacklevel=2)
        evals, V = evals[:rank], V[:, :rank]
    if rank and d > n:
        # re-orthonormalise to remove round-off from the Gram route
        Q, R = np.linalg.qr(V)
        V = Q * np.sign(np.diag(R))
    V = _fix_signs(V)
    return PcaModel(mean=mean, components=np.ascontiguousarray(V),
                    variances=evals / (n - 1), total_variance=total, n_samples=n)


def pca_transform(model, X):
    X = _as_dense(X)
    if X.shape[1] != model.n_features:
        raise ShapeError(f"expected {model.n_features} columns, got {X.shape[1]}")
    return (X - model.mean) @ model.components


def explained_variance_ratio(model):
    """(per-component ratios, cumulative ratios)."""
    if model.total_variance <= 0:
        ratios = np.zeros(model.n_components)
    else:
        ratios = model.variances / model.total_variance
    return ratios, np.cumsum(ratios)


def back_project(model, w):
    w = np.asarray(w, dtype=np.float64)
    if w.shape != (model.n_components,):
        raise ShapeError(f"expected a vector of length {model.n_components}, "
                         f"got shape {w.shape}")
    return model.components @ w


def reconstruct(model, Z):
    return model.mean + np.asarray(Z) @ model.components.T


# --- serialization ----------------------------------------------------------------
#
# Layout (little-endian):
#   8s   magic "FGPCA001"
#   u64  n_samples
#   u64  d (features)
#   u64  k (components)
#   u64  reserved (0)
#   f64  total variance
#   f64[d]    mean
#   f64[d*k]  components, row-major (d rows, k columns)
#   f64[k]    variances

def pca_to_bytes(model):
    d, k = model.components.shape
    return b"".join([
        _HEADER.pack(_MAGIC, model.n_samples, d, k, 0),
        struct.pack("<d", model.total_variance),
        np.ascontiguousarray(model.mean, dtype="<f8").tobytes(),
        np.ascontiguousarray(model.components, dtype="<f8").tobytes(),
        np.ascontiguousarray(model.variances, dtype="<f8").tobytes(),
    ])


def pca_from_bytes(blob):
    if len(blob) < _HEADER.size + 8:
        raise ParseError("truncated PCA model")
    magic, n, d, k, _ = _HEADER.unpack_from(blob, 0)
    if magic != _MAGIC:
        raise ParseError("not a PCA model container")
    expected = _HEADER.size + 8 * (1 + d + d * k + k)
    if len(blob) != expected:
        raise ParseError(f"PCA container has {len(blob)} bytes, expected {expected}")
    off = _HEADER.size
    (total,) = struct.unpack_from("<d", blob, off)
    off += 8
    mean = np.frombuffer(blob, "<f8", d, off).astype(np.float64)
    off += 8 * d
    comps = np.frombuffer(blob, "<f8", d * k, off).astype(np.float64).reshape(d, k)
    off += 8 * d * k
    variances = np.frombuffer(blob, "<f8", k, off).astype(np.float64)
    return PcaModel(mean, comps, variances, total, int(n))


def save_pca(model, path):
    Path(path).write_bytes(pca_to_bytes(model))


def load_pca(path):
    return pca_from_bytes(Path(path).read_bytes())
