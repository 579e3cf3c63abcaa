"""Carrier elements, multilinear forms and observation samples.

An :class:`Element` is a point of the (finite-dimensional) carrier space:
either a dense ``d x d`` matrix or a ``(matrix, vector)`` moment pair as used
by the regression functional. Elements are treated as immutable values.

Observation samples are plain sequences of elements. For data generated from
raw design matrices the :class:`GramSample` and :class:`RegressionSample`
views build ``x x^T`` (and ``x y``) lazily, so an ``n``-point sample never
materialises ``n`` dense ``d x d`` matrices at once.
"""

from __future__ import annotations

import itertools
from collections.abc import Callable, Sequence
from dataclasses import dataclass, field

import numpy as np

from .errors import DimensionMismatch, EmptySample, EstimationError

DENSE = "dense"
PAIR = "pair"
KINDS = (DENSE, PAIR)


@dataclass(frozen=True, eq=False)
class Element:
    """A dense matrix (``kind="dense"``) or a matrix/vector moment pair."""

    kind: str
    mat: np.ndarray
    vec: np.ndarray | None = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise EstimationError(f"unknown element kind {self.kind!r}")
        mat = np.asarray(self.mat, dtype=float)
        if mat.ndim != 2 or mat.shape[0] != mat.shape[1]:
            raise DimensionMismatch(f"expected a square matrix, got shape {mat.shape}")
        object.__setattr__(self, "mat", mat)
        if self.kind == PAIR:
            if self.vec is None:
                raise DimensionMismatch("moment pair requires a vector part")
            vec = np.asarray(self.vec, dtype=float)
            if vec.shape != (mat.shape[0],):
                raise DimensionMismatch(
                    f"vector part has shape {vec.shape}, expected ({mat.shape[0]},)"
                )
            object.__setattr__(self, "vec", vec)
        elif self.vec is not None:
            raise DimensionMismatch("dense elements carry no vector part")

    # constructors -----------------------------------------------------------
    @classmethod
    def dense(cls, mat) -> "Element":
        return cls(DENSE, np.atleast_2d(np.asarray(mat, dtype=float)))

    @classmethod
    def pair(cls, mat, vec) -> "Element":
        return cls(PAIR, np.atleast_2d(np.asarray(mat, dtype=float)), np.atleast_1d(vec))

    @classmethod
    def scalar(cls, x: float) -> "Element":
        return cls(DENSE, np.array([[float(x)]]))

    @classmethod
    def zeros_like(cls, other: "Element") -> "Element":
        if other.kind == PAIR:
            return cls(PAIR, np.zeros_like(other.mat), np.zeros_like(other.vec))
        return cls(DENSE, np.zeros_like(other.mat))

    # descriptors --------------------------------------------------------------
    @property
    def dim(self) -> int:
        return self.mat.shape[0]

    @property
    def signature(self) -> tuple[str, int]:
        return (self.kind, self.dim)

    def check_compatible(self, other: "Element") -> None:
        if not isinstance(other, Element):
            raise DimensionMismatch(f"cannot combine Element with {type(other).__name__}")
        if self.signature != other.signature:
            raise DimensionMismatch(f"{self.signature} vs {other.signature}")

    # vector-space structure ---------------------------------------------------
    def __add__(self, other: "Element") -> "Element":
        self.check_compatible(other)
        if self.kind == PAIR:
            return Element(PAIR, self.mat + other.mat, self.vec + other.vec)
        return Element(DENSE, self.mat + other.mat)

    def __sub__(self, other: "Element") -> "Element":
        self.check_compatible(other)
        if self.kind == PAIR:
            return Element(PAIR, self.mat - other.mat, self.vec - other.vec)
        return Element(DENSE, self.mat - other.mat)

    def __mul__(self, alpha: float) -> "Element":
        alpha = float(alpha)
        if self.kind == PAIR:
            return Element(PAIR, alpha * self.mat, alpha * self.vec)
        return Element(DENSE, alpha * self.mat)

    __rmul__ = __mul__

    def __truediv__(self, alpha: float) -> "Element":
        return self * (1.0 / float(alpha))

    def __neg__(self) -> "Element":
        return self * -1.0

    def __matmul__(self, other: "Element") -> "Element":
        """Algebra product; only defined for dense matrices."""
        self.check_compatible(other)
        if self.kind != DENSE:
            raise EstimationError("algebra product is only defined for dense elements")
        return Element(DENSE, self.mat @ other.mat)

    def norm(self) -> float:
        n = np.linalg.norm(self.mat)
        if self.kind == PAIR:
            n = float(np.hypot(n, np.linalg.norm(self.vec)))
        return float(n)

    def allclose(self, other: "Element", rtol=1e-12, atol=1e-12) -> bool:
        if self.signature != other.signature:
            return False
        ok = np.allclose(self.mat, other.mat, rtol=rtol, atol=atol)
        if self.kind == PAIR:
            ok = ok and np.allclose(self.vec, other.vec, rtol=rtol, atol=atol)
        return bool(ok)

    # persistence ----------------------------------------------------------------
    def to_flat(self) -> dict:
        """Row-major flat payload plus a kind/dim header."""
        data = self.mat.ravel().tolist()
        if self.kind == PAIR:
            data += self.vec.tolist()
        return {"kind": self.kind, "dim": self.dim, "data": data}

    @classmethod
    def from_flat(cls, obj: dict) -> "Element":
        d = int(obj["dim"])
        data = np.asarray(obj["data"], dtype=float)
        if obj["kind"] == PAIR:
            if data.size != d * d + d:
                raise DimensionMismatch("flat payload size does not match header")
            return cls(PAIR, data[: d * d].reshape(d, d), data[d * d :])
        if data.size != d * d:
            raise DimensionMismatch("flat payload size does not match header")
        return cls(DENSE, data.reshape(d, d))


@dataclass(frozen=True)
class KLinearForm:
    """A real-valued ``arity``-linear form on elements of one kind/dim.

    ``fn`` receives ``arity`` Elements and returns a float. Linearity is a
    contract of the caller; ``symmetric`` declares invariance under argument
    permutations and is what complete U-statistics rely on.
    """

    arity: int
    fn: Callable[..., float]
    symmetric: bool = True
    kind: str | None = None
    dim: int | None = None

    def __post_init__(self):
        if self.arity < 0:
            raise EstimationError("arity must be non-negative")

    def accepts(self, h: Element) -> bool:
        if self.kind is not None and h.kind != self.kind:
            return False
        if self.dim is not None and h.dim != self.dim:
            return False
        return True

    def __call__(self, *hs: Element) -> float:
        if len(hs) != self.arity:
            raise EstimationError(f"form of arity {self.arity} applied to {len(hs)} arguments")
        for h in hs:
            if not self.accepts(h):
                raise DimensionMismatch(
                    f"form expects ({self.kind}, {self.dim}), got {h.signature}"
                )
        return float(self.fn(*hs))

    def fix(self, h: Element, times: int = 1) -> "KLinearForm":
        """Partially apply ``h`` to the first ``times`` slots."""
        if times < 0 or times > self.arity:
            raise EstimationError("cannot fix more slots than the arity")
        if times == 0:
            return self
        head = (h,) * times
        fn = self.fn
        return KLinearForm(
            self.arity - times, lambda *rest: fn(*head, *rest), self.symmetric, self.kind, self.dim
        )

    def symmetrized(self) -> "KLinearForm":
        """Average of the form over all argument orderings."""
        k = self.arity
        perms = list(itertools.permutations(range(k)))
        fn = self.fn

        def sym(*hs):
            return sum(fn(*(hs[i] for i in p)) for p in perms) / len(perms)

        return KLinearForm(k, sym, True, self.kind, self.dim)


@dataclass(frozen=True)
class FiniteSupportDistribution:
    atoms: tuple[Element, ...]
    probs: tuple[float, ...] = field(default=())

    def __post_init__(self):
        atoms = tuple(self.atoms)
        if not atoms:
            raise EmptySample("distribution needs at least one atom")
        probs = tuple(float(p) for p in self.probs) or (1.0 / len(atoms),) * len(atoms)
        if len(probs) != len(atoms):
            raise EstimationError("atoms and probs differ in length")
        if min(probs) < 0 or abs(sum(probs) - 1.0) > 1e-12:
            raise EstimationError("probabilities must be non-negative and sum to one")
        for a in atoms[1:]:
            atoms[0].check_compatible(a)
        object.__setattr__(self, "atoms", atoms)
        object.__setattr__(self, "probs", probs)

    @classmethod
    def uniform(cls, atoms) -> "FiniteSupportDistribution":
        return cls(tuple(atoms))

    def mean(self) -> Element:
        out = self.atoms[0] * self.probs[0]
        for a, p in zip(self.atoms[1:], self.probs[1:]):
            out = out + a * p
        return out

    def __len__(self) -> int:
        return len(self.atoms)


# ---------------------------------------------------------------------------
# lazy observation samples
# ---------------------------------------------------------------------------


class GramSample(Sequence):
    """Observations ``W_i = x_i x_i^T`` built lazily from rows of ``X``."""

    kind = DENSE

    def __init__(self, X):
        X = np.asarray(X, dtype=float)
        if X.ndim != 2:
            raise DimensionMismatch("X must be two-dimensional")
        self.X = X

    @property
    def dim(self) -> int:
        return self.X.shape[1]

    def __len__(self) -> int:
        return self.X.shape[0]

    def __getitem__(self, i):
        if isinstance(i, (slice, np.ndarray, list)):
            return type(self)(self.X[i])
        x = self.X[i]
        return Element(DENSE, np.outer(x, x))

    def mean(self) -> Element:
        if len(self) == 0:
            raise EmptySample("empty sample")
        return Element(DENSE, self.X.T @ self.X / len(self))

    def weighted_sum(self, w) -> Element:
        w = np.asarray(w, dtype=float)
        return Element(DENSE, (self.X.T * w) @ self.X)


class RegressionSample(Sequence):
    """Observations ``W_i = (x_i x_i^T, x_i y_i)`` built lazily."""

    kind = PAIR

    def __init__(self, X, y):
        X = np.asarray(X, dtype=float)
        y = np.asarray(y, dtype=float)
        if X.ndim != 2 or y.shape != (X.shape[0],):
            raise DimensionMismatch("X must be (n, d) and y must be (n,)")
        self.X = X
        self.y = y

    @property
    def dim(self) -> int:
        return self.X.shape[1]

    def __len__(self) -> int:
        return self.X.shape[0]

    def __getitem__(self, i):
        if isinstance(i, (slice, np.ndarray, list)):
            return type(self)(self.X[i], self.y[i])
        x = self.X[i]
        return Element(PAIR, np.outer(x, x), x * self.y[i])

    def mean(self) -> Element:
        if len(self) == 0:
            raise EmptySample("empty sample")
        n = len(self)
        return Element(PAIR, self.X.T @ self.X / n, self.X.T @ self.y / n)

    def weighted_sum(self, w) -> Element:
        w = np.asarray(w, dtype=float)
        Xw = self.X.T * w
        return Element(PAIR, Xw @ self.X, Xw @ self.y)


def take(sample: Sequence, idx) -> Sequence:
    """Sub-sample by index array or slice, preserving lazy sample types."""
    if isinstance(sample, (GramSample, RegressionSample)):
        return sample[idx]
    if isinstance(idx, slice):
        return list(sample)[idx]
    return [sample[int(i)] for i in idx]
