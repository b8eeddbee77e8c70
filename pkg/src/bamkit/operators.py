"""Operator expression trees, evaluation, and sampled property checks."""

from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .sets import ConvexSet, _as_batch, _restore

RATIO_TOL = 1e-9
MIN_PAIR_DIST = 1e-8


class Operator:
    """Base class for operator expressions.

    Calling an operator accepts a point ``(n,)`` or a batch ``(N, n)``.
    """

    dim = None

    def __call__(self, x):
        X, single = _as_batch(x)
        return _restore(self._apply(X), single)

    def _apply(self, X):
        raise NotImplementedError


class Identity(Operator):
    def __init__(self, dim=None):
        self.dim = dim

    def _apply(self, X):
        return X.copy()

    def __repr__(self):
        return "Id"


class Projector(Operator):
    def __init__(self, C: ConvexSet):
        self.set = C
        self.dim = C.dim

    def _apply(self, X):
        return self.set._project(X)

    def __repr__(self):
        return f"P[{self.set!r}]"


class Reflector(Operator):
    def __init__(self, C: ConvexSet):
        self.set = C
        self.dim = C.dim

    def _apply(self, X):
        return 2.0 * self.set._project(X) - X

    def __repr__(self):
        return f"R[{self.set!r}]"


class Averaged(Operator):
    """``(1 - gamma) * base + gamma * Id``."""

    def __init__(self, base: Operator, gamma: float):
        if not 0.0 <= gamma <= 1.0:
            raise ValueError("gamma must lie in [0, 1]")
        self.base = base
        self.gamma = float(gamma)
        self.dim = base.dim

    def _apply(self, X):
        return (1.0 - self.gamma) * self.base._apply(X) + self.gamma * X

    def __repr__(self):
        return f"Averaged({self.base!r}, {self.gamma})"


class LinearMap(Operator):
    """``x -> A x + offset``."""

    def __init__(self, matrix, offset=None):
        self.matrix = np.atleast_2d(np.asarray(matrix, dtype=float))
        if self.matrix.shape[0] != self.matrix.shape[1]:
            raise ValueError("matrix must be square")
        self.dim = self.matrix.shape[0]
        self.offset = np.zeros(self.dim) if offset is None else np.asarray(offset, dtype=float)

    def _apply(self, X):
        return X @ self.matrix.T + self.offset

    def __repr__(self):
        return f"LinearMap({self.matrix.tolist()})"


class ShiftConjugate(Operator):
    """``x -> base(x + shift) - shift``."""

    def __init__(self, base: Operator, shift):
        self.base = base
        self.shift = np.asarray(shift, dtype=float)
        self.dim = self.shift.size

    def _apply(self, X):
        return self.base._apply(X + self.shift) - self.shift

    def __repr__(self):
        return f"Shift({self.base!r}, {self.shift.tolist()})"


class Compose(Operator):
    """Composition applied right to left: ``Compose([A, B])(x) == A(B(x))``."""

    def __init__(self, ops):
        self.ops = list(ops)
        if not self.ops:
            raise ValueError("empty composition")
        self.dim = next((op.dim for op in self.ops if op.dim is not None), None)

    def _apply(self, X):
        for op in reversed(self.ops):
            X = op._apply(X)
        return X

    def __repr__(self):
        return " o ".join(repr(op) for op in self.ops)


class ConvexCombo(Operator):
    def __init__(self, weights, ops):
        w = np.asarray(weights, dtype=float)
        if len(w) != len(ops) or len(ops) == 0:
            raise ValueError("need one weight per operator")
        if np.any(w < 0) or abs(w.sum() - 1.0) > 1e-12:
            raise ValueError("weights must be nonnegative and sum to 1")
        self.weights = w
        self.ops = list(ops)
        self.dim = next((op.dim for op in self.ops if op.dim is not None), None)

    def _apply(self, X):
        out = np.zeros_like(X)
        for w, op in zip(self.weights, self.ops):
            out += w * op._apply(X)
        return out

    def __repr__(self):
        terms = " + ".join(f"{w:g}*{op!r}" for w, op in zip(self.weights, self.ops))
        return f"({terms})"


def evaluate(op: Operator, x):
    return op(x)


def conjugate_shift(op: Operator, z) -> ShiftConjugate:
    """The operator ``x -> op(x + z) - z``; its fixed set is ``Fix op - z``."""
    return ShiftConjugate(op, z)


@dataclass(frozen=True)
class SampleSpec:
    """Uniform samples from the box ``center +- half_width``.

    ``include`` lists extra points that are always checked.
    """

    seed: int = 0
    count: int = 2000
    center: tuple = None
    half_width: float = 10.0
    include: tuple = field(default_factory=tuple)

    def draw(self, dim, stream=0):
        center = np.zeros(dim) if self.center is None else np.asarray(self.center, dtype=float)
        if center.size != dim:
            raise ValueError("sample box center has the wrong dimension")
        rng = np.random.default_rng([self.seed, stream])
        X = center + self.half_width * rng.uniform(-1.0, 1.0, size=(self.count, dim))
        if self.include and stream == 0:
            X = np.vstack([np.atleast_2d(np.asarray(self.include, dtype=float)), X])
        return X


class Property(str, Enum):
    NONEXPANSIVE = "nonexpansive"
    QUASINONEXPANSIVE = "quasinonexpansive"
    STRICTLY_QUASINONEXPANSIVE = "strictly_quasinonexpansive"
    ISOMETRY = "isometry"


@dataclass
class PropertyReport:
    property: Property
    passed: bool
    worst_ratio: float
    witness: tuple = None
    refutation_only: bool = False


def _dim_of(op, fixed_set, spec):
    if op.dim is not None:
        return op.dim
    if fixed_set is not None:
        return fixed_set.dim
    if spec.center is not None:
        return len(spec.center)
    raise ValueError("cannot infer the ambient dimension")


def check_property(op: Operator, prop, fixed_set=None, spec: SampleSpec = SampleSpec()) -> PropertyReport:
    """Sampled check of a metric property.

    Pairwise properties compare ``||Tx - Ty||`` with ``||x - y||``; the
    quasi variants take ``y`` in ``fixed_set`` (where ``Ty = y``). The
    strict variant can only refute.
    """
    prop = Property(prop)
    n = _dim_of(op, fixed_set, spec)
    X = spec.draw(n, 0)
    Y = spec.draw(n, 1)
    if len(Y) < len(X):
        Y = np.vstack([Y, spec.draw(n, 2)[: len(X) - len(Y)]])
    Y = Y[: len(X)]
    TX = op(X)
    if prop in (Property.NONEXPANSIVE, Property.ISOMETRY):
        TY = op(Y)
    else:
        if fixed_set is None:
            raise ValueError(f"{prop.value} needs a fixed set")
        Y = fixed_set.project(Y)
        TY = Y
    dxy = np.linalg.norm(X - Y, axis=1)
    keep = dxy >= MIN_PAIR_DIST
    if prop is Property.STRICTLY_QUASINONEXPANSIVE:
        keep &= fixed_set.distance(X) > MIN_PAIR_DIST
    if not np.any(keep):
        return PropertyReport(prop, True, 0.0, None, prop is Property.STRICTLY_QUASINONEXPANSIVE)
    ratios = np.linalg.norm(TX - TY, axis=1)[keep] / dxy[keep]
    idx = np.flatnonzero(keep)
    if prop is Property.ISOMETRY:
        j = int(np.argmax(np.abs(ratios - 1.0)))
        passed = abs(ratios[j] - 1.0) <= RATIO_TOL
    else:
        j = int(np.argmax(ratios))
        if prop is Property.STRICTLY_QUASINONEXPANSIVE:
            passed = ratios[j] < 1.0
        else:
            passed = ratios[j] <= 1.0 + RATIO_TOL
    witness = (X[idx[j]].copy(), Y[idx[j]].copy())
    return PropertyReport(prop, bool(passed), float(ratios[j]), witness,
                          prop is Property.STRICTLY_QUASINONEXPANSIVE)
