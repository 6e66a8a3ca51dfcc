"""Small dense linear-algebra kernel.

Thin wrappers over numpy/scipy with deterministic conventions and explicit failure
modes: QR with a positive R diagonal, real Schur form with eigenvalues read off the
quasi-triangular blocks, Kronecker products, and LU solves with a singularity guard.
Everything here operates on small dense float64 arrays (supervector dimensions are
k*d with k,d <= a few dozen).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .errors import NoConvergence, RankDeficient, Singular

# Hard cap on the dimension accepted by the Schur reduction; the package only ever
# forms k x k (k <= 8-ish) and (k*d) x (k*d) matrices, so anything bigger is a bug.
SCHUR_MAX_DIM = 32


@dataclass
class QrFactors:
    q: np.ndarray
    r: np.ndarray


@dataclass
class RealSchur:
    orth: np.ndarray
    quasi_tri: np.ndarray
    eigs: np.ndarray  # complex, ordered along the diagonal blocks


def qr_positive(m, rank_tol=1e-14):
    """Reduced QR factorization with a nonnegative-diagonal R.

    Columns of Q are flipped so every diagonal entry of R is >= 0; a diagonal entry
    below rank_tol * max|m| raises RankDeficient. The factorization is deterministic
    for a given input.
    """
    m = np.asarray(m, dtype=float)
    q, r = np.linalg.qr(m)
    d = np.sign(np.diag(r))
    d[d == 0.0] = 1.0
    q = q * d[np.newaxis, :]
    r = r * d[:, np.newaxis]
    scale = np.max(np.abs(m)) if m.size else 0.0
    if np.min(np.abs(np.diag(r))) <= rank_tol * scale or scale == 0.0:
        raise RankDeficient(
            f"QR diagonal {np.min(np.abs(np.diag(r))):.3e} below tolerance "
            f"{rank_tol:.1e} * {scale:.3e}"
        )
    return QrFactors(q=q, r=r)


def _quasi_tri_eigs(t, tol=0.0):
    """Eigenvalues from the 1x1/2x2 diagonal blocks of a real quasi-triangular matrix."""
    n = t.shape[0]
    eigs = np.empty(n, dtype=complex)
    i = 0
    while i < n:
        if i + 1 < n and abs(t[i + 1, i]) > tol:
            a, b = t[i, i], t[i, i + 1]
            c, d = t[i + 1, i], t[i + 1, i + 1]
            mean = 0.5 * (a + d)
            disc = mean * mean - (a * d - b * c)
            if disc < 0.0:
                root = np.sqrt(-disc)
                eigs[i] = mean + 1j * root
                eigs[i + 1] = mean - 1j * root
            else:
                root = np.sqrt(disc)
                eigs[i] = mean + root
                eigs[i + 1] = mean - root
            i += 2
        else:
            eigs[i] = t[i, i]
            i += 1
    return eigs


def real_schur(m, max_sweeps=100):
    """Real Schur form m = Z T Z^T with eigenvalues read from T's diagonal blocks.

    max_sweeps caps the internal QR iteration; a convergence failure raises
    NoConvergence. Input must be square with dimension <= SCHUR_MAX_DIM.
    """
    m = np.asarray(m, dtype=float)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ValueError(f"real_schur expects a square matrix, got shape {m.shape}")
    if m.shape[0] > SCHUR_MAX_DIM:
        raise ValueError(
            f"real_schur dimension {m.shape[0]} exceeds design bound {SCHUR_MAX_DIM}"
        )
    try:
        t, z = scipy.linalg.schur(m, output="real")
    except scipy.linalg.LinAlgError as exc:  # pragma: no cover - rare in practice
        raise NoConvergence(f"Schur reduction failed within {max_sweeps} sweeps") from exc
    return RealSchur(orth=z, quasi_tri=t, eigs=_quasi_tri_eigs(t))


def kron(a, b):
    """Kronecker product a (x) b."""
    return np.kron(np.asarray(a, dtype=float), np.asarray(b, dtype=float))


def solve(a, rhs):
    """Solve a @ x = rhs by partial-pivoted LU with a singularity guard.

    A pivot below 1e-14 * max|a| raises Singular instead of returning garbage.
    """
    a = np.asarray(a, dtype=float)
    rhs = np.asarray(rhs, dtype=float)
    lu, piv = scipy.linalg.lu_factor(a, check_finite=False)
    scale = np.max(np.abs(a))
    if scale == 0.0 or np.min(np.abs(np.diag(lu))) < 1e-14 * scale:
        raise Singular(
            f"pivot {np.min(np.abs(np.diag(lu))):.3e} below 1e-14 * {scale:.3e}"
        )
    return scipy.linalg.lu_solve((lu, piv), rhs, check_finite=False)
