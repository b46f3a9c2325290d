"""Eigenstructure of affine pieces and closed-form orbit evaluation.

Within one region the map is affine, ``z_{t+1} = J z_t + b``, so the orbit has
a closed form in the (generalized) eigenbasis of ``J``:

* semisimple part: sum of ``c_j lambda_j^t v_j``,
* defective part: Jordan blocks evolve with binomial weights
  ``C(t, r) lambda^{t-r}``,
* bias part: ``sum_{k<t} J^k b``, evaluated as ``(I - J)^{-1}(I - J^t) b``
  whenever 1 is not an eigenvalue and blockwise otherwise.

Complex pairs are kept as real 2-planes for downstream geometry (spiral form
``z_t = r^t (cos(t theta) u - sin(t theta) w)``).
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DegenerateBasisError
from .models import AffinePiece

__all__ = [
    "JordanBlock",
    "EigenStructure",
    "eigen_structure",
    "orbit_closed_form",
    "SideBasis",
    "real_side_basis",
]

CLUSTER_TOL = 1e-8  # relative gap below which eigenvalues count as repeated
MARGINAL_TOL = 1e-9  # half-width of the marginal band around |lambda| = 1


@dataclass(frozen=True)
class JordanBlock:
    """One Jordan chain: ``(J - value I) chain[:, r] = chain[:, r-1]``."""

    value: complex
    chain: np.ndarray  # (M, m) complex, chain[:, 0] is the eigenvector

    @property
    def size(self) -> int:
        return self.chain.shape[1]


@dataclass
class EigenStructure:
    """Eigen decomposition of a piece Jacobian, with Jordan chains."""

    matrix: np.ndarray
    values: np.ndarray  # complex, one entry per basis column
    blocks: list[JordanBlock]
    basis: np.ndarray  # complex (M, M), concatenated chains
    marginal_tol: float = MARGINAL_TOL

    @property
    def magnitudes(self) -> np.ndarray:
        return np.abs(self.values)

    @property
    def labels(self) -> list[str]:
        out = []
        for m in self.magnitudes:
            if m < 1.0 - self.marginal_tol:
                out.append("stable")
            elif m > 1.0 + self.marginal_tol:
                out.append("unstable")
            else:
                out.append("marginal")
        return out

    @property
    def n_stable(self) -> int:
        return sum(1 for x in self.labels if x == "stable")

    @property
    def n_unstable(self) -> int:
        return sum(1 for x in self.labels if x == "unstable")

    @property
    def n_marginal(self) -> int:
        return sum(1 for x in self.labels if x == "marginal")

    @property
    def is_semisimple(self) -> bool:
        return all(b.size == 1 for b in self.blocks)


def _nullspace(B: np.ndarray, tol: float) -> np.ndarray:
    U, s, Vh = np.linalg.svd(B)
    rank = int(np.sum(s > tol))
    return Vh[rank:].conj().T


def _jordan_chains_for_cluster(
    J: np.ndarray, lam: complex, mult: int, tol: float
) -> list[np.ndarray]:
    """Build Jordan chains for one (possibly defective) eigenvalue cluster."""
    M = J.shape[0]
    B = J - lam * np.eye(M)
    # Nullspaces of increasing powers until the algebraic multiplicity is met.
    null_bases: list[np.ndarray] = []
    Bk = np.eye(M, dtype=complex)
    for _ in range(mult):
        Bk = Bk @ B
        N = _nullspace(Bk, tol)
        null_bases.append(N)
        if N.shape[1] >= mult:
            break
    dims = [nb.shape[1] for nb in null_bases]
    if dims[-1] < mult:
        raise DegenerateBasisError(
            f"could not span generalized eigenspace of {lam} "
            f"(reached dim {dims[-1]} of {mult})"
        )
    p = len(null_bases)

    chains: list[np.ndarray] = []
    tops: list[tuple[np.ndarray, int]] = []  # (top vector, level)
    for k in range(p, 0, -1):
        d_k = dims[k - 1]
        d_km1 = dims[k - 2] if k >= 2 else 0
        started = sum(1 for _, lvl in tops if lvl > k)
        need = (d_k - d_km1) - started
        if need <= 0:
            continue
        # Span to exclude: lower nullspace plus pass-through of taller chains.
        excl_cols = []
        if k >= 2:
            excl_cols.append(null_bases[k - 2])
        for v, lvl in tops:
            if lvl > k:
                w = v.copy()
                for _ in range(lvl - k):
                    w = B @ w
                excl_cols.append(w[:, np.newaxis])
        N_k = null_bases[k - 1]
        if excl_cols:
            S = np.hstack(excl_cols)
            Q, _ = np.linalg.qr(S)
            R = N_k - Q @ (Q.conj().T @ N_k)
        else:
            R = N_k
        U, s, _ = np.linalg.svd(R, full_matrices=False)
        if int(np.sum(s > tol)) < need:
            raise DegenerateBasisError(
                f"Jordan chain construction failed for eigenvalue {lam}"
            )
        for i in range(need):
            tops.append((U[:, i], k))

    for v, lvl in tops:
        cols = [v]
        for _ in range(lvl - 1):
            cols.append(B @ cols[-1])
        cols.reverse()  # ascending: eigenvector first
        chain = np.column_stack(cols)
        nrm = np.linalg.norm(chain[:, 0])
        if nrm > 0:
            chain = chain / nrm
        chains.append(chain)
    return chains


def eigen_structure(
    J: np.ndarray,
    *,
    cluster_tol: float = CLUSTER_TOL,
    marginal_tol: float = MARGINAL_TOL,
) -> EigenStructure:
    """Decompose ``J`` into eigenvalues, eigenvectors and Jordan chains.

    Eigenvalues closer than ``cluster_tol`` (relative) are treated as one
    repeated eigenvalue. Raises :class:`DegenerateBasisError` if no
    well-conditioned generalized basis exists.
    """
    J = np.asarray(J, dtype=float)
    M = J.shape[0]
    if J.shape != (M, M):
        raise ValueError(f"J must be square, got {J.shape}")
    w, V = np.linalg.eig(J)

    # Cluster eigenvalues by relative closeness (union-find on pairs).
    parent = list(range(M))

    def find(i: int) -> int:
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    for i in range(M):
        for j in range(i + 1, M):
            scale = max(1.0, abs(w[i]), abs(w[j]))
            if abs(w[i] - w[j]) <= cluster_tol * scale:
                parent[find(i)] = find(j)

    clusters: dict[int, list[int]] = {}
    for i in range(M):
        clusters.setdefault(find(i), []).append(i)

    scale = max(1.0, float(np.linalg.norm(J, 2)))
    blocks: list[JordanBlock] = []
    for idxs in clusters.values():
        lam = complex(np.mean(w[idxs]))
        mult = len(idxs)
        if mult == 1:
            blocks.append(JordanBlock(lam, V[:, idxs[0]][:, np.newaxis]))
            continue
        B = J - lam * np.eye(M)
        geo = _nullspace(B, cluster_tol * scale).shape[1]
        if geo >= mult:
            N = _nullspace(B, cluster_tol * scale)
            for i in range(mult):
                blocks.append(JordanBlock(lam, N[:, i][:, np.newaxis]))
        else:
            for chain in _jordan_chains_for_cluster(J, lam, mult, cluster_tol * scale):
                blocks.append(JordanBlock(lam, chain))

    basis = np.hstack([b.chain for b in blocks])
    if basis.shape != (M, M):
        raise DegenerateBasisError(
            f"generalized eigenbasis has shape {basis.shape}, expected {(M, M)}"
        )
    svals = np.linalg.svd(basis, compute_uv=False)
    if svals[-1] < 1e-12 * svals[0]:
        raise DegenerateBasisError(
            f"generalized eigenbasis is numerically singular "
            f"(sigma_min/sigma_max = {svals[-1] / svals[0]:.3e})"
        )
    values = np.concatenate([[b.value] * b.size for b in blocks])
    return EigenStructure(J, np.asarray(values), blocks, basis, marginal_tol)


def _block_power(lam: complex, m: int, t: int) -> np.ndarray:
    """``t``-th power of an m x m Jordan block with eigenvalue ``lam``."""
    P = np.zeros((m, m), dtype=complex)
    for j in range(m):
        if j > t:
            continue
        coeff = math.comb(t, j)
        if t - j == 0:
            lam_pow = 1.0
        else:
            lam_pow = lam ** (t - j)
        for i in range(m - j):
            P[i, i + j] = coeff * lam_pow
    return P


def _block_power_sum(lam: complex, m: int, t: int) -> np.ndarray:
    """Sum of the first ``t`` powers (k = 0 .. t-1) of a Jordan block."""
    S = np.zeros((m, m), dtype=complex)
    for k in range(t):
        S += _block_power(lam, m, k)
    return S


def _blockwise(structure: EigenStructure, t: int, summed: bool) -> np.ndarray:
    M = structure.basis.shape[0]
    out = np.zeros((M, M), dtype=complex)
    pos = 0
    for b in structure.blocks:
        m = b.size
        blk = _block_power_sum(b.value, m, t) if summed else _block_power(b.value, m, t)
        out[pos : pos + m, pos : pos + m] = blk
        pos += m
    return out


def orbit_closed_form(
    piece: AffinePiece,
    z0: np.ndarray,
    t: int,
    *,
    structure: EigenStructure | None = None,
) -> np.ndarray:
    """State after ``t`` applications of a single affine piece, in closed form.

    The homogeneous part is evaluated through the (generalized) eigenbasis,
    the bias part through a resolvent solve (or blockwise sums when 1 is an
    eigenvalue). Independent of repeated matrix multiplication.
    """
    if t < 0:
        raise ValueError("t must be non-negative")
    J, b = piece.J, piece.b
    z0 = np.asarray(z0, dtype=float)
    if t == 0:
        return z0.copy()
    E = structure if structure is not None else eigen_structure(J)

    c = np.linalg.solve(E.basis, z0.astype(complex))
    Jor_t = _blockwise(E, t, summed=False)
    z_hom = E.basis @ (Jor_t @ c)

    if np.min(np.abs(1.0 - E.values)) > CLUSTER_TOL:
        cb = np.linalg.solve(E.basis, b.astype(complex))
        Jt_b = E.basis @ (Jor_t @ cb)
        s = np.linalg.solve(np.eye(len(b)) - J, b - np.real(Jt_b))
        s = s.astype(complex)
    else:
        cb = np.linalg.solve(E.basis, b.astype(complex))
        S_t = _blockwise(E, t, summed=True)
        s = E.basis @ (S_t @ cb)

    return np.real(z_hom + s)


@dataclass(frozen=True)
class SideGroup:
    """One direction group of a side basis (a real line, spiral plane or chain)."""

    kind: str  # "real" | "pair" | "jordan"
    value: complex
    columns: tuple[int, ...]  # column indices into the side basis


@dataclass
class SideBasis:
    """Real basis of the stable or unstable invariant subspace."""

    basis: np.ndarray  # (M, k) real columns
    moduli: np.ndarray  # (k,) |lambda| per column
    values: np.ndarray  # (k,) complex eigenvalue per column
    groups: list[SideGroup]

    @property
    def dim(self) -> int:
        return self.basis.shape[1]


def real_side_basis(structure: EigenStructure, side: str) -> SideBasis:
    """Real spanning set of the chosen side's invariant subspace.

    Complex conjugate pairs contribute their real 2-plane (Re v, Im v);
    real Jordan blocks contribute their full chain. Marginal directions are
    never included.
    """
    if side not in ("stable", "unstable"):
        raise ValueError("side must be 'stable' or 'unstable'")
    tol = structure.marginal_tol
    cols: list[np.ndarray] = []
    moduli: list[float] = []
    values: list[complex] = []
    groups: list[SideGroup] = []
    seen_pairs: set[complex] = set()
    for b in structure.blocks:
        mag = abs(b.value)
        if side == "stable" and not mag < 1.0 - tol:
            continue
        if side == "unstable" and not mag > 1.0 + tol:
            continue
        if abs(b.value.imag) <= 1e-12 * max(1.0, abs(b.value)):
            start = len(cols)
            for r in range(b.size):
                cols.append(np.real(b.chain[:, r]))
                moduli.append(mag)
                values.append(complex(b.value.real))
            kind = "jordan" if b.size > 1 else "real"
            groups.append(SideGroup(kind, complex(b.value.real), tuple(range(start, len(cols)))))
        else:
            key = complex(round(abs(b.value.real), 12), round(abs(b.value.imag), 12))
            if key in seen_pairs:
                continue  # conjugate partner already contributed its plane
            seen_pairs.add(key)
            if b.size > 1:
                raise DegenerateBasisError(
                    "defective complex eigenvalue pairs are not supported"
                )
            lam = b.value if b.value.imag > 0 else np.conj(b.value)
            v = b.chain[:, 0]
            start = len(cols)
            cols.append(np.real(v))
            cols.append(np.imag(v))
            moduli.extend([mag, mag])
            values.extend([lam, lam])
            groups.append(SideGroup("pair", lam, (start, start + 1)))
    if not cols:
        basis = np.zeros((structure.basis.shape[0], 0))
        return SideBasis(basis, np.zeros(0), np.zeros(0, dtype=complex), [])
    B = np.column_stack(cols)
    return SideBasis(B, np.asarray(moduli), np.asarray(values, dtype=complex), groups)
