"""Dense complex-matrix kernels shared by the channel machinery.

All matrices are plain ``numpy.ndarray`` with dtype complex128 and row-major
(C-order) semantics. Vectorization is row-major throughout the package:
``vectorize(rho)[i*d + j] == rho[i, j]``.
"""

from __future__ import annotations

from typing import Sequence

import numpy as np

HERMITICITY_ATOL = 1e-12
PSD_EIGENVALUE_FLOOR = -1e-10
RANK_CUTOFF = 1e-12


def as_complex(m) -> np.ndarray:
    """Coerce input to a C-contiguous complex128 array."""
    return np.ascontiguousarray(np.asarray(m, dtype=np.complex128))


def dagger(m: np.ndarray) -> np.ndarray:
    """Conjugate transpose."""
    return m.conj().T


def is_hermitian(m: np.ndarray, atol: float = HERMITICITY_ATOL) -> bool:
    """Check ||M - M^dag||_max <= atol."""
    return bool(np.max(np.abs(m - dagger(m))) <= atol)


def vectorize(rho: np.ndarray) -> np.ndarray:
    """Row-major vectorization |rho>> with component rho[i, j] at index i*d+j."""
    return rho.reshape(-1)


def unvectorize(v: np.ndarray, rows: int | None = None, cols: int | None = None) -> np.ndarray:
    """Inverse of :func:`vectorize`. Square by default."""
    if rows is None:
        rows = int(round(np.sqrt(v.size)))
        if rows * rows != v.size:
            raise ValueError(f"vector of length {v.size} is not square-unvectorizable")
        cols = rows
    if cols is None:
        cols = v.size // rows
    return v.reshape(rows, cols)


def hermitian_eigensystem(m: np.ndarray, atol: float = 1e-10):
    """Eigendecomposition of a Hermitian matrix, eigenvalues descending.

    Raises ValueError when the input is not Hermitian within ``atol``.
    """
    m = as_complex(m)
    dev = float(np.max(np.abs(m - dagger(m))))
    if dev > atol:
        raise ValueError(f"matrix is not Hermitian: max deviation {dev:.3e} > {atol:.1e}")
    vals, vecs = np.linalg.eigh((m + dagger(m)) / 2)
    order = np.argsort(vals)[::-1]
    return vals[order].real, vecs[:, order]


def hermitian_sqrt(m: np.ndarray, atol: float = 1e-10) -> np.ndarray:
    """Principal square root of a Hermitian PSD matrix.

    Eigenvalues below zero are clamped to zero before taking the root, so
    roundoff-negative inputs are handled gracefully. The result S satisfies
    S @ S ~= M for genuinely PSD input.
    """
    vals, vecs = hermitian_eigensystem(m, atol=atol)
    vals = np.clip(vals, 0.0, None)
    return (vecs * np.sqrt(vals)) @ dagger(vecs)


def min_eigenvalue(m: np.ndarray) -> float:
    """Smallest eigenvalue of the Hermitian part of m."""
    vals = np.linalg.eigvalsh((m + dagger(m)) / 2)
    return float(vals[0])


def matrix_rank_by_cutoff(m: np.ndarray, cutoff: float = RANK_CUTOFF) -> int:
    """Rank of a Hermitian matrix counting eigenvalues above ``cutoff``."""
    vals = np.linalg.eigvalsh((m + dagger(m)) / 2)
    return int(np.sum(np.abs(vals) > cutoff))


def _floored_sqrt_eigs(vals: np.ndarray) -> np.ndarray:
    """Square roots of eigenvalues, zeroing the numerical-noise floor.

    Eigenvalues below dim * eps * max(vals) are roundoff artifacts of exact
    zeros; their square roots (~1e-8) would otherwise dominate the fidelity
    error budget.
    """
    vals = np.clip(vals, 0.0, None)
    tol = vals.size * np.finfo(float).eps * (vals.max() if vals.size else 0.0)
    vals[vals < tol] = 0.0
    return np.sqrt(vals)


def uhlmann_fidelity(a: np.ndarray, b: np.ndarray) -> float:
    """Uhlmann fidelity (tr sqrt(sqrt(a) b sqrt(a)))^2 of two density matrices.

    Inputs must be Hermitian with eigenvalues >= -1e-10; roundoff-negative
    eigenvalues are clamped to zero, anything more negative raises.
    """
    for name, m in (("first", a), ("second", b)):
        lo = min_eigenvalue(m)
        if lo < PSD_EIGENVALUE_FLOOR:
            raise ValueError(f"{name} state is not PSD: min eigenvalue {lo:.3e}")
    vals, vecs = hermitian_eigensystem(a)
    sa = (vecs * _floored_sqrt_eigs(vals)) @ dagger(vecs)
    inner = sa @ as_complex(b) @ sa
    inner_vals = np.linalg.eigvalsh((inner + dagger(inner)) / 2)
    f = float(np.sum(_floored_sqrt_eigs(inner_vals)) ** 2)
    return min(max(f, 0.0), 1.0)


def state_fidelity(rho: np.ndarray, sigma: np.ndarray) -> float:
    """Uhlmann fidelity between two states (alias with state-flavoured name)."""
    return uhlmann_fidelity(rho, sigma)


def partial_trace(m: np.ndarray, dims: Sequence[int], keep: Sequence[int]) -> np.ndarray:
    """Trace out every tensor factor not listed in ``keep``.

    ``m`` is a square matrix over the tensor product of factors with the given
    ``dims`` (factor 0 leftmost). The kept factors stay in their original
    relative order.
    """
    dims = list(dims)
    n = len(dims)
    keep = sorted(keep)
    traced = [i for i in range(n) if i not in keep]
    t = m.reshape(dims + dims)
    for ax in sorted(traced, reverse=True):
        t = np.trace(t, axis1=ax, axis2=ax + (t.ndim // 2))
    d_keep = int(np.prod([dims[i] for i in keep])) if keep else 1
    return t.reshape(d_keep, d_keep)


def reshuffle(m: np.ndarray, dim_out: int | None = None, dim_in: int | None = None) -> np.ndarray:
    """Row-major reshuffling connecting Liouville and Choi index layouts.

    Viewing the matrix as a 4-tensor ``m[(a,b),(c,d)]``, the reshuffled matrix
    is ``r[(a,c),(b,d)]`` (swap of the middle indices). For square channels
    this permutation is an involution. No normalization factor is applied.
    """
    m = as_complex(m)
    if dim_out is None:
        dim_out = int(round(np.sqrt(m.shape[0])))
    if dim_in is None:
        dim_in = int(round(np.sqrt(m.shape[1])))
    if (dim_out * dim_out, dim_in * dim_in) != m.shape:
        raise ValueError(
            f"shape {m.shape} is incompatible with bipartite dims "
            f"(out={dim_out}, in={dim_in})"
        )
    t = m.reshape(dim_out, dim_out, dim_in, dim_in)
    return t.transpose(0, 2, 1, 3).reshape(dim_out * dim_in, dim_out * dim_in)


def complete_orthonormal_columns(cols: np.ndarray, total: int) -> np.ndarray:
    """Extend orthonormal columns to a full orthonormal basis of C^total.

    Remaining columns are seeded from identity columns. At each step the seed
    with the largest residual norm against the current basis is picked, then
    orthogonalized twice for stability. Deterministic for a given input.
    """
    cols = as_complex(cols)
    dim, k = cols.shape
    if dim != total:
        raise ValueError(f"columns live in dim {dim}, expected {total}")
    if k > total:
        raise ValueError(f"{k} columns cannot be orthonormal in dim {total}")
    gram = dagger(cols) @ cols
    if np.max(np.abs(gram - np.eye(k))) > 1e-9:
        raise ValueError("seed columns are not orthonormal")
    basis = [cols[:, i] for i in range(k)]
    candidates = list(np.eye(total, dtype=np.complex128).T)
    while len(basis) < total:
        best_idx, best_norm, best_res = -1, -1.0, None
        bmat = np.column_stack(basis)
        for idx, cand in enumerate(candidates):
            res = cand - bmat @ (dagger(bmat) @ cand)
            nrm = float(np.linalg.norm(res))
            if nrm > best_norm:
                best_idx, best_norm, best_res = idx, nrm, res
        if best_norm < 1e-8:
            raise ValueError("ran out of independent completion candidates")
        v = best_res / np.linalg.norm(best_res)
        v = v - bmat @ (dagger(bmat) @ v)
        v = v / np.linalg.norm(v)
        basis.append(v)
        candidates.pop(best_idx)
    return np.column_stack(basis)


def max_entangled_ket(d: int) -> np.ndarray:
    """|Phi> = sum_i |i,i> / sqrt(d) over a d x d bipartite space."""
    v = np.zeros(d * d, dtype=np.complex128)
    v[:: d + 1] = 1.0 / np.sqrt(d)
    return v


def basis_ket(dim: int, index: int) -> np.ndarray:
    """Computational basis vector |index> in dimension dim."""
    v = np.zeros(dim, dtype=np.complex128)
    v[index] = 1.0
    return v


def projector(ket: np.ndarray) -> np.ndarray:
    """|psi><psi| for a ket."""
    return np.outer(ket, ket.conj())
