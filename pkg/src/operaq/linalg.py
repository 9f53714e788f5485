"""Dense complex linear algebra primitives.

Conventions fixed here and used everywhere else:
  * vectorization is column-stacking, vec(|i><j|) = e_j (x) e_i;
  * inner products are linear in the first argument and conjugate-linear
    in the second, <x, y> = sum_i x_i conj(y_i);
  * numerical rank cutoffs default to 1e-9 relative to the largest
    singular value.
"""

from __future__ import annotations

import warnings

import numpy as np
import numpy.linalg as npl

from .errors import DimensionMismatchError, SingularMatrixError

RANK_TOL = 1e-9
HERMITICITY_WARN = 1e-8


def as_matrix(m) -> np.ndarray:
    a = np.asarray(m, dtype=complex)
    if a.ndim != 2:
        raise DimensionMismatchError(f"expected a matrix, got ndim={a.ndim}")
    if not np.all(np.isfinite(a)):
        raise ValueError("matrix entries must be finite")
    return a


def as_vector(v) -> np.ndarray:
    a = np.asarray(v, dtype=complex).reshape(-1)
    if not np.all(np.isfinite(a)):
        raise ValueError("vector entries must be finite")
    return a


def dagger(m: np.ndarray) -> np.ndarray:
    return np.asarray(m).conj().T


def vec(m) -> np.ndarray:
    """Column-stacking vectorization; vec(|i><j|) = e_j (x) e_i."""
    return np.asarray(m, dtype=complex).reshape(-1, order="F")


def unvec(v, rows: int, cols: int | None = None) -> np.ndarray:
    v = as_vector(v)
    if cols is None:
        cols = v.size // rows
    if rows * cols != v.size:
        raise DimensionMismatchError(f"cannot unvec length {v.size} into {rows}x{cols}")
    return v.reshape((rows, cols), order="F")


def inner(x, y) -> complex:
    """<x, y>, linear in x and conjugate-linear in y."""
    return complex(np.dot(as_vector(x), as_vector(y).conj()))


def kron(a, b) -> np.ndarray:
    return np.kron(as_matrix(a), as_matrix(b))


def kron_all(mats) -> np.ndarray:
    out = np.eye(1, dtype=complex)
    for m in mats:
        out = np.kron(out, np.asarray(m, dtype=complex))
    return out


def kron_vectors(vectors) -> np.ndarray:
    out = np.ones(1, dtype=complex)
    for v in vectors:
        out = np.kron(out, as_vector(v))
    return out


def matrix_unit(d: int, k: int, l: int) -> np.ndarray:
    e = np.zeros((d, d), dtype=complex)
    e[k, l] = 1.0
    return e


def matrix_units(d: int):
    """Yield (k, l, E_kl) over the standard basis of M_d."""
    for k in range(d):
        for l in range(d):
            yield k, l, matrix_unit(d, k, l)


def basis_vector(d: int, i: int) -> np.ndarray:
    e = np.zeros(d, dtype=complex)
    e[i] = 1.0
    return e


def partial_trace(m, dims, traced_factor: int) -> np.ndarray:
    """Trace out one tensor factor of an operator on (x)_i C^{d_i}."""
    m = as_matrix(m)
    dims = [int(d) for d in dims]
    total = int(np.prod(dims))
    if m.shape != (total, total):
        raise DimensionMismatchError(
            f"matrix side {m.shape[0]} does not match profile product {total}"
        )
    n = len(dims)
    if not 0 <= traced_factor < n:
        raise DimensionMismatchError(f"traced factor {traced_factor} out of range")
    t = m.reshape(dims + dims)
    t = np.trace(t, axis1=traced_factor, axis2=n + traced_factor)
    keep = total // dims[traced_factor]
    return t.reshape(keep, keep)


def hermitianize(m, warn_tol: float = HERMITICITY_WARN) -> np.ndarray:
    m = as_matrix(m)
    asym = npl.norm(m - dagger(m))
    if asym > warn_tol * max(1.0, npl.norm(m)):
        warnings.warn(f"symmetrizing matrix with hermiticity defect {asym:.3e}")
    return (m + dagger(m)) / 2


def hermitian_eig(m):
    """Eigenvalues (real, descending) and matching eigenvector columns of a
    Hermitian matrix; the input is symmetrized first."""
    h = hermitianize(m)
    vals, vecs = npl.eigh(h)
    order = np.argsort(vals)[::-1]
    return vals[order].real, vecs[:, order]


def gram_schmidt(vectors, rank_tol: float = RANK_TOL):
    """Orthonormalize, dropping vectors whose residual after projection is
    below rank_tol relative to the largest input norm."""
    vecs = [as_vector(v) for v in vectors]
    if not vecs:
        return []
    scale = max(npl.norm(v) for v in vecs)
    if scale == 0.0:
        return []
    basis: list[np.ndarray] = []
    for v in vecs:
        w = v.copy()
        for b in basis:
            w = w - np.dot(b.conj(), w) * b
        # re-orthogonalize once; classical GS alone loses orthogonality
        for b in basis:
            w = w - np.dot(b.conj(), w) * b
        nw = npl.norm(w)
        if nw > rank_tol * scale:
            basis.append(w / nw)
    return basis


def solve_linear(a, b, least_squares: bool = False) -> np.ndarray:
    """Solve a x = b exactly (square a) or in least squares."""
    a = as_matrix(a)
    b = as_vector(b)
    if a.shape[0] != b.size:
        raise DimensionMismatchError("right-hand side length does not match")
    if least_squares:
        x, _, _, _ = npl.lstsq(a, b, rcond=None)
        return x
    if a.shape[0] != a.shape[1]:
        raise DimensionMismatchError("exact mode needs a square matrix")
    svals = npl.svd(a, compute_uv=False)
    if svals[-1] < 1e-12 * svals[0]:
        raise SingularMatrixError(
            f"smallest singular value {svals[-1]:.3e} below 1e-12 of largest {svals[0]:.3e}"
        )
    return npl.solve(a, b)


def trace_norm(m) -> float:
    """Sum of singular values."""
    return float(np.sum(npl.svd(as_matrix(m), compute_uv=False)))


def frobenius(m) -> float:
    return float(npl.norm(np.asarray(m)))


def op_norm(m) -> float:
    """Largest singular value."""
    m = as_matrix(m)
    if m.size == 0:
        return 0.0
    return float(npl.svd(m, compute_uv=False)[0])


def factor_permutation(dims, perm) -> np.ndarray:
    """Permutation matrix P with P(x_1 (x) ... (x) x_n) having old factor
    perm[k] at new position k."""
    dims = [int(d) for d in dims]
    perm = [int(p) for p in perm]
    if sorted(perm) != list(range(len(dims))):
        raise DimensionMismatchError("not a permutation of the factors")
    total = int(np.prod(dims))
    src = np.arange(total).reshape(dims).transpose(perm).ravel()
    p = np.zeros((total, total))
    p[np.arange(total), src] = 1.0
    return p


def factor_permutation_superop(dims, perm) -> np.ndarray:
    """The vec-side matrix of rho -> P rho P^T for the factor permutation."""
    p = factor_permutation(dims, perm)
    return np.kron(p, p)


def mingle(dims) -> np.ndarray:
    """Permutation sending vec(A_1) (x) ... (x) vec(A_n) to vec(A_1 (x) ... (x) A_n).

    The source index interleaves per-factor (column, row) axes; the target
    groups all column axes before all row axes.
    """
    dims = [int(d) for d in dims]
    n = len(dims)
    total = int(np.prod(dims))
    inter_shape = []
    for d in dims:
        inter_shape.extend([d, d])  # (col_i, row_i) per factor
    axes = [2 * i for i in range(n)] + [2 * i + 1 for i in range(n)]
    src = np.arange(total * total).reshape(inter_shape).transpose(axes).ravel()
    m = np.zeros((total * total, total * total))
    m[np.arange(total * total), src] = 1.0
    return m


def superop_kron(superops, dims_in, dims_out) -> np.ndarray:
    """Joint vec-side matrix of a tensor product of operator maps.

    superops[i] sends vec(M_{dims_in[i]}) to vec(M_{dims_out[i]}); the result
    acts on vec of the joint operator space M_{prod dims_in}.
    """
    block = kron_all(superops)
    return mingle(dims_out) @ block @ mingle(dims_in).T
