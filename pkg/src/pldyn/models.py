"""Piecewise-linear recurrent map models.

All variants share the same piecewise-affine skeleton: state space is carved
into rectangular regions by unit (or hidden-unit) sign patterns, and inside a
region the update is affine, ``z' = J z + b``. The region is encoded by a bit
vector (:class:`RegionCode`); a pre-activation of exactly 0 maps to bit 0,
which is consistent on borders because the ReLU contribution vanishes there.
"""
from __future__ import annotations

import abc
import itertools
from dataclasses import dataclass, field
from typing import Iterator, Sequence

import numpy as np

__all__ = [
    "RegionCode",
    "AffinePiece",
    "PiecewiseModel",
    "StandardPlrnn",
    "ShallowPlrnn",
    "AlRnn",
    "relu",
]

_ENUM_CAP = 16  # largest bit count for which regions may be enumerated


def relu(x: np.ndarray) -> np.ndarray:
    return np.maximum(x, 0.0)


@dataclass(frozen=True)
class RegionCode:
    """Sign pattern of the ReLU pre-activations, one bit per nonlinear unit."""

    bits: tuple[int, ...]

    def __post_init__(self):
        if any(b not in (0, 1) for b in self.bits):
            raise ValueError(f"region bits must be 0/1, got {self.bits}")

    def __len__(self) -> int:
        return len(self.bits)

    def __str__(self) -> str:
        return "".join(str(b) for b in self.bits)

    @classmethod
    def from_signs(cls, pre: np.ndarray) -> "RegionCode":
        return cls(tuple(int(v > 0.0) for v in np.asarray(pre, dtype=float)))

    def as_array(self) -> np.ndarray:
        return np.asarray(self.bits, dtype=float)

    def hamming(self, other: "RegionCode") -> int:
        if len(other) != len(self):
            raise ValueError("region codes differ in length")
        return sum(a != b for a, b in zip(self.bits, other.bits))

    def flip(self, positions: Sequence[int]) -> "RegionCode":
        bits = list(self.bits)
        for p in positions:
            bits[p] ^= 1
        return RegionCode(tuple(bits))


@dataclass(frozen=True)
class AffinePiece:
    """The affine map ``z -> J z + b`` valid inside one region."""

    J: np.ndarray
    b: np.ndarray
    region: RegionCode

    def apply(self, z: np.ndarray) -> np.ndarray:
        return self.J @ np.asarray(z, dtype=float) + self.b


class PiecewiseModel(abc.ABC):
    """Common protocol of every model variant."""

    variant: str

    @property
    @abc.abstractmethod
    def dim(self) -> int:
        """State-space dimension M."""

    @property
    @abc.abstractmethod
    def n_bits(self) -> int:
        """Length of the region code."""

    @abc.abstractmethod
    def step(self, z: np.ndarray) -> np.ndarray:
        """One forward application of the map."""

    @abc.abstractmethod
    def step_batch(self, Z: np.ndarray) -> np.ndarray:
        """Forward map applied row-wise to an (N, M) array."""

    @abc.abstractmethod
    def region_of(self, z: np.ndarray) -> RegionCode:
        """Region code of the point (pre-activation exactly 0 gives bit 0)."""

    @abc.abstractmethod
    def affine_piece(self, region: RegionCode) -> AffinePiece:
        """Affine map valid inside ``region``."""

    @abc.abstractmethod
    def border_gaps(self, z: np.ndarray) -> np.ndarray:
        """Absolute pre-activation per free bit: distance proxy to each border."""

    # -- region bookkeeping -------------------------------------------------

    def free_bit_positions(self) -> tuple[int, ...]:
        """Indices of region bits that can actually vary."""
        return tuple(range(self.n_bits))

    def forced_bits(self) -> dict[int, int]:
        """Bit positions pinned to a fixed value (e.g. linear ALRNN units)."""
        return {}

    def n_regions(self) -> int:
        return 2 ** len(self.free_bit_positions())

    def all_regions(self) -> Iterator[RegionCode]:
        free = self.free_bit_positions()
        if len(free) > _ENUM_CAP:
            raise ValueError(
                f"refusing to enumerate 2^{len(free)} regions (cap 2^{_ENUM_CAP})"
            )
        base = [1 if self.forced_bits().get(i) == 1 else 0 for i in range(self.n_bits)]
        for combo in itertools.product((0, 1), repeat=len(free)):
            bits = list(base)
            for pos, val in zip(free, combo):
                bits[pos] = val
            yield RegionCode(tuple(bits))

    def random_region(self, rng: np.random.Generator) -> RegionCode:
        bits = [1 if self.forced_bits().get(i) == 1 else 0 for i in range(self.n_bits)]
        for pos in self.free_bit_positions():
            bits[pos] = int(rng.integers(0, 2))
        return RegionCode(tuple(bits))

    def validate_point(self, z: np.ndarray) -> np.ndarray:
        z = np.asarray(z, dtype=float)
        if z.shape != (self.dim,):
            raise ValueError(f"state must have shape ({self.dim},), got {z.shape}")
        return z


def _as_matrix(name: str, value, shape: tuple[int, int]) -> np.ndarray:
    arr = np.asarray(value, dtype=float)
    if arr.shape != shape:
        raise ValueError(f"{name} must have shape {shape}, got {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} contains non-finite entries")
    return arr


def _as_vector(name: str, value, n: int) -> np.ndarray:
    arr = np.asarray(value, dtype=float)
    if arr.shape != (n,):
        raise ValueError(f"{name} must have shape ({n},), got {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} contains non-finite entries")
    return arr


@dataclass
class StandardPlrnn(PiecewiseModel):
    """``z' = A z + W relu(z) + h1``.

    The canonical architecture keeps ``A`` diagonal and ``W`` hollow
    (zero diagonal); pass ``strict=True`` to enforce that. Models produced by
    converting a planar border map carry full matrices and load with the
    default ``strict=False``.
    """

    A: np.ndarray
    W: np.ndarray
    h1: np.ndarray
    strict: bool = field(default=False, repr=False)
    variant = "standard"

    def __post_init__(self):
        M = np.asarray(self.A).shape[0]
        self.A = _as_matrix("A", self.A, (M, M))
        self.W = _as_matrix("W", self.W, (M, M))
        self.h1 = _as_vector("h1", self.h1, M)
        if self.strict:
            if np.any(self.A != np.diag(np.diag(self.A))):
                raise ValueError("standard variant requires a diagonal A")
            if np.any(np.diag(self.W) != 0.0):
                raise ValueError("standard variant requires a zero-diagonal W")

    @property
    def dim(self) -> int:
        return self.A.shape[0]

    @property
    def n_bits(self) -> int:
        return self.dim

    def step(self, z: np.ndarray) -> np.ndarray:
        z = self.validate_point(z)
        return self.A @ z + self.W @ relu(z) + self.h1

    def step_batch(self, Z: np.ndarray) -> np.ndarray:
        Z = np.asarray(Z, dtype=float)
        return Z @ self.A.T + relu(Z) @ self.W.T + self.h1

    def region_of(self, z: np.ndarray) -> RegionCode:
        return RegionCode.from_signs(self.validate_point(z))

    def border_gaps(self, z: np.ndarray) -> np.ndarray:
        return np.abs(self.validate_point(z))

    def affine_piece(self, region: RegionCode) -> AffinePiece:
        if len(region) != self.n_bits:
            raise ValueError("region code length mismatch")
        d = region.as_array()
        return AffinePiece(self.A + self.W * d[np.newaxis, :], self.h1.copy(), region)

    @classmethod
    def random(cls, M: int, rng: np.random.Generator, *, radius: float = 0.8) -> "StandardPlrnn":
        """Draw a conforming model (diagonal A, hollow W) with moderate norms."""
        A = np.diag(rng.uniform(-radius, radius, size=M))
        W = rng.normal(0.0, radius / max(1, M - 1) ** 0.5, size=(M, M))
        np.fill_diagonal(W, 0.0)
        h = rng.normal(0.0, 0.5, size=M)
        return cls(A, W, h, strict=True)

    def as_dict(self) -> dict:
        return {
            "variant": self.variant,
            "M": self.dim,
            "A": self.A.tolist(),
            "W": self.W.tolist(),
            "h1": self.h1.tolist(),
        }


@dataclass
class ShallowPlrnn(PiecewiseModel):
    """``z' = A z + W1 relu(W2 z + h2) + h1`` with H hidden expansion units."""

    A: np.ndarray
    W1: np.ndarray
    W2: np.ndarray
    h1: np.ndarray
    h2: np.ndarray
    variant = "shallow"

    def __post_init__(self):
        M = np.asarray(self.A).shape[0]
        H = np.asarray(self.W2).shape[0]
        self.A = _as_matrix("A", self.A, (M, M))
        self.W1 = _as_matrix("W1", self.W1, (M, H))
        self.W2 = _as_matrix("W2", self.W2, (H, M))
        self.h1 = _as_vector("h1", self.h1, M)
        self.h2 = _as_vector("h2", self.h2, H)

    @property
    def dim(self) -> int:
        return self.A.shape[0]

    @property
    def hidden(self) -> int:
        return self.W2.shape[0]

    @property
    def n_bits(self) -> int:
        return self.hidden

    def step(self, z: np.ndarray) -> np.ndarray:
        z = self.validate_point(z)
        return self.A @ z + self.W1 @ relu(self.W2 @ z + self.h2) + self.h1

    def step_batch(self, Z: np.ndarray) -> np.ndarray:
        Z = np.asarray(Z, dtype=float)
        return Z @ self.A.T + relu(Z @ self.W2.T + self.h2) @ self.W1.T + self.h1

    def region_of(self, z: np.ndarray) -> RegionCode:
        z = self.validate_point(z)
        return RegionCode.from_signs(self.W2 @ z + self.h2)

    def border_gaps(self, z: np.ndarray) -> np.ndarray:
        z = self.validate_point(z)
        return np.abs(self.W2 @ z + self.h2)

    def affine_piece(self, region: RegionCode) -> AffinePiece:
        if len(region) != self.n_bits:
            raise ValueError("region code length mismatch")
        d = region.as_array()
        J = self.A + (self.W1 * d[np.newaxis, :]) @ self.W2
        b = (self.W1 * d[np.newaxis, :]) @ self.h2 + self.h1
        return AffinePiece(J, b, region)

    def as_dict(self) -> dict:
        return {
            "variant": self.variant,
            "M": self.dim,
            "H": self.hidden,
            "A": self.A.tolist(),
            "W1": self.W1.tolist(),
            "W2": self.W2.tolist(),
            "h1": self.h1.tolist(),
            "h2": self.h2.tolist(),
        }


@dataclass
class AlRnn(PiecewiseModel):
    """Almost-linear variant: only the last P units pass through the ReLU.

    The leading M−P units are linear, so their region bits are pinned to 1
    and only ``2**P`` regions exist.
    """

    A: np.ndarray
    W: np.ndarray
    h1: np.ndarray
    P: int
    variant = "almost-linear"

    def __post_init__(self):
        M = np.asarray(self.A).shape[0]
        self.A = _as_matrix("A", self.A, (M, M))
        self.W = _as_matrix("W", self.W, (M, M))
        self.h1 = _as_vector("h1", self.h1, M)
        if not 0 <= self.P <= M:
            raise ValueError(f"P must lie in [0, {M}], got {self.P}")

    @property
    def dim(self) -> int:
        return self.A.shape[0]

    @property
    def n_bits(self) -> int:
        return self.dim

    def free_bit_positions(self) -> tuple[int, ...]:
        return tuple(range(self.dim - self.P, self.dim))

    def forced_bits(self) -> dict[int, int]:
        return {i: 1 for i in range(self.dim - self.P)}

    def _activation(self, z: np.ndarray) -> np.ndarray:
        out = np.array(z, dtype=float, copy=True)
        k = self.dim - self.P
        out[..., k:] = np.maximum(out[..., k:], 0.0)
        return out

    def step(self, z: np.ndarray) -> np.ndarray:
        z = self.validate_point(z)
        return self.A @ z + self.W @ self._activation(z) + self.h1

    def step_batch(self, Z: np.ndarray) -> np.ndarray:
        Z = np.asarray(Z, dtype=float)
        return Z @ self.A.T + self._activation(Z) @ self.W.T + self.h1

    def region_of(self, z: np.ndarray) -> RegionCode:
        z = self.validate_point(z)
        k = self.dim - self.P
        bits = [1] * k + [int(v > 0.0) for v in z[k:]]
        return RegionCode(tuple(bits))

    def border_gaps(self, z: np.ndarray) -> np.ndarray:
        z = self.validate_point(z)
        return np.abs(z[self.dim - self.P :])

    def affine_piece(self, region: RegionCode) -> AffinePiece:
        if len(region) != self.n_bits:
            raise ValueError("region code length mismatch")
        k = self.dim - self.P
        if any(region.bits[i] != 1 for i in range(k)):
            raise ValueError("leading linear-unit bits must be 1 for this variant")
        d = region.as_array()
        return AffinePiece(self.A + self.W * d[np.newaxis, :], self.h1.copy(), region)

    @classmethod
    def random(cls, M: int, P: int, rng: np.random.Generator, *, radius: float = 0.8) -> "AlRnn":
        A = np.diag(rng.uniform(-radius, radius, size=M))
        W = rng.normal(0.0, radius / max(1, M - 1) ** 0.5, size=(M, M))
        np.fill_diagonal(W, 0.0)
        h = rng.normal(0.0, 0.5, size=M)
        return cls(A, W, h, P)

    def as_dict(self) -> dict:
        return {
            "variant": self.variant,
            "M": self.dim,
            "P": self.P,
            "A": self.A.tolist(),
            "W": self.W.tolist(),
            "h1": self.h1.tolist(),
        }
