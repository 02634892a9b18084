"""Information measures in bits, plus distance inequalities and typicality.

Every quantity here uses the base-2 logarithm.  Entropies and mutual
informations are clamped at zero when round-off produces values in
``[-1e-12, 0)``.  Divergence with a support violation returns ``math.inf``
as a distinguished value rather than raising: the covertness diagnostics
legitimately produce it when the reference law misses part of the observed
support.

The distance-inequality pair is checked in a unit-consistent form: with the
divergence measured in bits, the forward bound reads
``tv <= sqrt(ln(2) * kl_bits / 2)`` and the reverse bound reads
``kl_bits <= log2(1/mu) * tv`` with ``mu`` the smallest mass of the (full
support) reference distribution.
"""

from __future__ import annotations

import math
from typing import Iterable, Mapping, Sequence

import numpy as np
from scipy.special import xlogy

from .prob import JointTable, Pmf, ProbabilityError, Symbol

Bits = float

_LOG2 = math.log(2.0)


def _clamp(value: float) -> float:
    if -1e-12 <= value < 0.0:
        return 0.0
    return value


def entropy(p: Pmf) -> Bits:
    """Shannon entropy ``-sum p log2 p`` with ``0 log 0 = 0``."""
    return _clamp(float(-xlogy(p.probs, p.probs).sum() / _LOG2))


def binary_entropy(t: float) -> Bits:
    if not 0.0 <= t <= 1.0:
        raise ValueError(f"binary entropy argument {t!r} outside [0, 1]")
    if t in (0.0, 1.0):
        return 0.0
    return -t * math.log2(t) - (1.0 - t) * math.log2(1.0 - t)


def kl_divergence(p: Pmf, q: Pmf) -> Bits:
    """``D(p || q)`` in bits; ``inf`` when ``supp(p)`` escapes ``supp(q)``."""
    if p.labels != q.labels:
        raise ProbabilityError("divergence needs a common alphabet")
    if np.any((p.probs > 0.0) & (q.probs == 0.0)):
        return math.inf
    mask = p.probs > 0.0
    val = float(
        (p.probs[mask] * (np.log(p.probs[mask]) - np.log(q.probs[mask]))).sum() / _LOG2
    )
    return _clamp(val)


def total_variation(p: Pmf, q: Pmf) -> float:
    """``(1/2) sum |p - q|``, always in ``[0, 1]``."""
    if p.labels != q.labels:
        raise ProbabilityError("total variation needs a common alphabet")
    return float(np.abs(p.probs - q.probs).sum() / 2.0)


def pinsker_check(p: Pmf, q: Pmf) -> tuple[float, float]:
    """Both sides of the forward bound: ``(tv, sqrt(ln2 * kl / 2))``."""
    lhs = total_variation(p, q)
    kl = kl_divergence(p, q)
    rhs = math.inf if math.isinf(kl) else math.sqrt(_LOG2 * kl / 2.0)
    return lhs, rhs


def reverse_pinsker_check(p: Pmf, q: Pmf) -> tuple[float, float]:
    """Both sides of the reverse bound: ``(kl, log2(1/mu) * tv)``.

    Requires ``q`` to have full support; ``mu`` is its smallest mass.
    """
    if not q.full_support():
        raise ValueError("reverse bound needs a full-support reference")
    mu = float(q.probs.min())
    return kl_divergence(p, q), math.log2(1.0 / mu) * total_variation(p, q)


def table_entropy(j: JointTable, keep: Iterable[str] | None = None) -> Bits:
    """Joint entropy of a marginal of ``j`` (the whole table by default)."""
    values = j.values if keep is None else j.marginalize(keep).values
    return _clamp(float(-xlogy(values, values).sum() / _LOG2))


def mutual_information(j: JointTable, a: Iterable[str], b: Iterable[str]) -> Bits:
    a, b = set(a), set(b)
    if a & b:
        raise ProbabilityError(f"variable sets overlap: {sorted(a & b)}")
    return _clamp(
        table_entropy(j, a) + table_entropy(j, b) - table_entropy(j, a | b)
    )


def conditional_mutual_information(
    j: JointTable,
    a: Iterable[str],
    b: Iterable[str],
    given: Iterable[str],
) -> Bits:
    a, b, c = set(a), set(b), set(given)
    if (a & b) or (a & c) or (b & c):
        raise ProbabilityError("variable sets must be disjoint")
    return _clamp(
        table_entropy(j, a | c)
        + table_entropy(j, b | c)
        - table_entropy(j, a | b | c)
        - table_entropy(j, c)
    )


def conditional_entropy(j: JointTable, a: Iterable[str], given: Iterable[str]) -> Bits:
    a, c = set(a), set(given)
    if a & c:
        raise ProbabilityError("variable sets must be disjoint")
    return _clamp(table_entropy(j, a | c) - table_entropy(j, c))


def is_strongly_typical(
    seqs: Sequence[Symbol] | Sequence[Sequence[Symbol]] | Mapping[str, Sequence[Symbol]],
    ref: JointTable,
    eps: float,
) -> bool:
    """Multiplicative strong typicality with the zero-cell exclusion.

    ``seqs`` is one sequence per axis of ``ref`` (a bare sequence when the
    table has a single axis, else a tuple/list ordered like ``ref.axes`` or a
    mapping from axis name to sequence).  A sequence tuple is typical when
    every cell's empirical frequency deviates from the reference probability
    by at most ``eps`` times that probability; in particular cells of
    reference probability zero must never occur.
    """
    if eps <= 0.0:
        raise ValueError("eps must be positive")
    names = ref.names
    if isinstance(seqs, Mapping):
        columns = [list(seqs[n]) for n in names]
    elif len(names) == 1:
        columns = [list(seqs)]  # type: ignore[arg-type]
    else:
        columns = [list(s) for s in seqs]  # type: ignore[union-attr]
        if len(columns) != len(names):
            raise ProbabilityError(
                f"expected {len(names)} aligned sequences, got {len(columns)}"
            )
    n = len(columns[0])
    if n == 0:
        raise ValueError("empty sequence")
    if any(len(c) != n for c in columns):
        raise ProbabilityError("sequences must have equal length")

    index_maps = [
        {label: i for i, label in enumerate(labels)} for _, labels in ref.axes
    ]
    counts = np.zeros(ref.values.shape)
    for row in zip(*columns):
        try:
            idx = tuple(m[s] for m, s in zip(index_maps, row))
        except KeyError as exc:
            raise ProbabilityError(f"symbol {exc.args[0]!r} outside alphabet") from None
        counts[idx] += 1.0
    freq = counts / n
    return bool(np.all(np.abs(freq - ref.values) <= eps * ref.values + 1e-15))
