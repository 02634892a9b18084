"""Exact finite-alphabet probability algebra.

Three immutable containers cover everything the rate evaluators and the
simulator need: :class:`Pmf` (a probability vector over named symbols),
:class:`Kernel` (one Pmf per input symbol), and :class:`JointTable` (a dense
multi-axis joint distribution with marginalize/condition algebra).

All probabilities are 64-bit floats.  Mass checks use an absolute tolerance
of ``MASS_TOL`` (1e-9); entries in ``[-NEG_CLAMP, 0)`` are clamped to zero on
construction so that round-off from solver projections never poisons a
distribution.  Symbol alphabets are ordered and all tensor indexing follows
declaration order.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

MASS_TOL = 1e-9
NEG_CLAMP = 1e-12

Symbol = str | tuple


class ProbabilityError(ValueError):
    """Raised when a vector, kernel, or table violates its invariants."""


def _clean_probs(values: Sequence[float] | np.ndarray, what: str) -> np.ndarray:
    arr = np.asarray(values, dtype=np.float64).copy()
    if np.any(arr < -NEG_CLAMP):
        bad = float(arr.min())
        raise ProbabilityError(f"{what} has negative entry {bad!r}")
    arr[arr < 0.0] = 0.0
    total = float(arr.sum())
    if abs(total - 1.0) > MASS_TOL:
        raise ProbabilityError(f"{what} has total mass {total!r}, expected 1")
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class Pmf:
    """Probability vector over an ordered finite alphabet."""

    labels: tuple[Symbol, ...]
    probs: np.ndarray

    def __post_init__(self) -> None:
        labels = tuple(self.labels)
        if len(labels) != len(set(labels)):
            raise ProbabilityError(f"duplicate symbols in alphabet {labels!r}")
        if len(labels) == 0:
            raise ProbabilityError("empty alphabet")
        probs = _clean_probs(self.probs, "pmf")
        if probs.shape != (len(labels),):
            raise ProbabilityError(
                f"pmf length {probs.shape} does not match alphabet size {len(labels)}"
            )
        object.__setattr__(self, "labels", labels)
        object.__setattr__(self, "probs", probs)

    @staticmethod
    def from_pairs(pairs: Iterable[tuple[Symbol, float]]) -> "Pmf":
        items = list(pairs)
        return Pmf(tuple(k for k, _ in items), np.array([v for _, v in items]))

    @staticmethod
    def bernoulli(p_one: float, labels: tuple[Symbol, Symbol] = ("0", "1")) -> "Pmf":
        """Two-symbol pmf with ``P(labels[1]) = p_one``."""
        return Pmf(labels, np.array([1.0 - p_one, p_one]))

    @staticmethod
    def uniform(labels: Sequence[Symbol]) -> "Pmf":
        n = len(labels)
        return Pmf(tuple(labels), np.full(n, 1.0 / n))

    @staticmethod
    def point_mass(label: Symbol, labels: Sequence[Symbol]) -> "Pmf":
        probs = np.zeros(len(labels))
        probs[list(labels).index(label)] = 1.0
        return Pmf(tuple(labels), probs)

    def prob(self, label: Symbol) -> float:
        return float(self.probs[self.labels.index(label)])

    def support(self) -> tuple[Symbol, ...]:
        return tuple(l for l, p in zip(self.labels, self.probs) if p > 0.0)

    def full_support(self) -> bool:
        return bool(np.all(self.probs > 0.0))

    def allclose(self, other: "Pmf", atol: float = 1e-12) -> bool:
        return self.labels == other.labels and bool(
            np.allclose(self.probs, other.probs, rtol=0.0, atol=atol)
        )

    def __len__(self) -> int:
        return len(self.labels)


@dataclass(frozen=True)
class Kernel:
    """Conditional distribution: one output :class:`Pmf` per input symbol.

    Composite inputs (e.g. channel inputs ``(x, s)``) use tuple labels; all
    rows must share the same output alphabet.
    """

    input_labels: tuple[Symbol, ...]
    rows: tuple[Pmf, ...]

    def __post_init__(self) -> None:
        inputs = tuple(self.input_labels)
        rows = tuple(self.rows)
        if len(inputs) != len(rows):
            raise ProbabilityError("kernel needs exactly one row per input symbol")
        if len(inputs) != len(set(inputs)):
            raise ProbabilityError(f"duplicate input symbols {inputs!r}")
        if not rows:
            raise ProbabilityError("kernel with no rows")
        out = rows[0].labels
        for label, row in zip(inputs, rows):
            if row.labels != out:
                raise ProbabilityError(
                    f"kernel row {label!r} has mismatched output alphabet"
                )
        object.__setattr__(self, "input_labels", inputs)
        object.__setattr__(self, "rows", rows)

    @staticmethod
    def from_matrix(
        input_labels: Sequence[Symbol],
        output_labels: Sequence[Symbol],
        matrix: Sequence[Sequence[float]] | np.ndarray,
    ) -> "Kernel":
        rows = tuple(Pmf(tuple(output_labels), np.asarray(r)) for r in matrix)
        return Kernel(tuple(input_labels), rows)

    @property
    def output_labels(self) -> tuple[Symbol, ...]:
        return self.rows[0].labels

    def row(self, label: Symbol) -> Pmf:
        return self.rows[self.input_labels.index(label)]

    def as_matrix(self) -> np.ndarray:
        return np.stack([r.probs for r in self.rows])


@dataclass(frozen=True)
class JointTable:
    """Dense joint distribution over named, ordered axes."""

    axes: tuple[tuple[str, tuple[Symbol, ...]], ...]
    values: np.ndarray
    _check_mass: bool = field(default=True, repr=False)

    def __post_init__(self) -> None:
        axes = tuple((str(n), tuple(ls)) for n, ls in self.axes)
        names = [n for n, _ in axes]
        if len(names) != len(set(names)):
            raise ProbabilityError(f"duplicate axis names {names!r}")
        shape = tuple(len(ls) for _, ls in axes)
        arr = np.asarray(self.values, dtype=np.float64)
        if arr.shape != shape:
            raise ProbabilityError(
                f"values shape {arr.shape} does not match axes shape {shape}"
            )
        if self._check_mass:
            arr = _clean_probs(arr.reshape(-1), "joint table").reshape(shape)
        else:
            arr = arr.copy()
        arr.setflags(write=False)
        object.__setattr__(self, "axes", axes)
        object.__setattr__(self, "values", arr)

    @property
    def names(self) -> tuple[str, ...]:
        return tuple(n for n, _ in self.axes)

    def labels(self, name: str) -> tuple[Symbol, ...]:
        return dict(self.axes)[name]

    def _axis_index(self, name: str) -> int:
        try:
            return self.names.index(name)
        except ValueError:
            raise ProbabilityError(f"unknown variable name {name!r}") from None

    def marginalize(self, keep: Iterable[str]) -> "JointTable":
        """Sum out every axis not in ``keep``; axis order is preserved."""
        keep_set = set(keep)
        for name in keep_set:
            self._axis_index(name)
        if not keep_set:
            raise ProbabilityError("must keep at least one axis")
        drop = tuple(i for i, n in enumerate(self.names) if n not in keep_set)
        values = self.values.sum(axis=drop) if drop else self.values
        axes = tuple(a for a in self.axes if a[0] in keep_set)
        return JointTable(axes, values)

    def condition(self, given: str, value: Symbol) -> "JointTable":
        """Normalized slice at ``given == value``; the axis is dropped."""
        i = self._axis_index(given)
        try:
            j = self.labels(given).index(value)
        except ValueError:
            raise ProbabilityError(
                f"symbol {value!r} not in alphabet of {given!r}"
            ) from None
        sliced = np.take(self.values, j, axis=i)
        mass = float(sliced.sum())
        if mass <= 1e-15:
            raise ProbabilityError("conditioning on null event")
        axes = tuple(a for k, a in enumerate(self.axes) if k != i)
        if not axes:
            raise ProbabilityError("cannot condition away the only axis")
        return JointTable(axes, sliced / mass)

    def to_pmf(self) -> Pmf:
        if len(self.axes) != 1:
            raise ProbabilityError("to_pmf requires exactly one axis")
        return Pmf(self.axes[0][1], self.values)

    def prob(self, **assignment: Symbol) -> float:
        idx = tuple(
            self.labels(n).index(assignment[n]) if n in assignment else slice(None)
            for n in self.names
        )
        if len(assignment) != len(self.axes):
            raise ProbabilityError("prob() needs a full assignment")
        return float(self.values[idx])


def compose(qs: Pmf, pxs: Kernel, w: Kernel) -> JointTable:
    """Joint law over ``(S, X, Y, Z)`` built as state * input rule * channel.

    ``pxs`` maps each state symbol to a pmf over inputs.  ``w`` maps tuple
    inputs ``(x, s)`` to a joint pmf over output pairs ``(y, z)`` whose labels
    must enumerate the full product alphabet in row-major (y-major) order.
    """
    s_labels = qs.labels
    if pxs.input_labels != s_labels:
        raise ProbabilityError("input rule is not indexed by the state alphabet")
    x_labels = pxs.output_labels
    y_labels, z_labels = split_product_labels(w.output_labels)
    expected_inputs = tuple((x, s) for x in x_labels for s in s_labels)
    if set(w.input_labels) != set(expected_inputs):
        raise ProbabilityError("channel kernel is not indexed by (x, s) pairs")
    ny, nz = len(y_labels), len(z_labels)
    values = np.zeros((len(s_labels), len(x_labels), ny, nz))
    for si, s in enumerate(s_labels):
        px = pxs.row(s).probs
        for xi, x in enumerate(x_labels):
            yz = w.row((x, s)).probs.reshape(ny, nz)
            values[si, xi] = qs.probs[si] * px[xi] * yz
    axes = (
        ("S", s_labels),
        ("X", x_labels),
        ("Y", y_labels),
        ("Z", z_labels),
    )
    return JointTable(axes, values)


def split_product_labels(
    labels: Sequence[Symbol],
) -> tuple[tuple[Symbol, ...], tuple[Symbol, ...]]:
    """Recover the two factor alphabets of a row-major product alphabet."""
    firsts: list[Symbol] = []
    seconds: list[Symbol] = []
    for a, b in labels:
        if a not in firsts:
            firsts.append(a)
        if b not in seconds:
            seconds.append(b)
    expected = tuple((a, b) for a in firsts for b in seconds)
    if tuple(labels) != expected:
        raise ProbabilityError(
            "output labels are not a row-major product alphabet"
        )
    return tuple(firsts), tuple(seconds)


def product_joint(axes: Sequence[tuple[str, Pmf]]) -> JointTable:
    """Independent product of named pmfs, mostly a test convenience."""
    values = np.array(1.0)
    for _, pmf in axes:
        values = np.multiply.outer(values, pmf.probs)
    return JointTable(tuple((n, p.labels) for n, p in axes), values)
