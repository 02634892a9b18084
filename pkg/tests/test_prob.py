import itertools
import math

import numpy as np
import pytest

from covertdmc.prob import (
    JointTable,
    Kernel,
    Pmf,
    ProbabilityError,
    compose,
    product_joint,
)


def table(axes, values):
    return JointTable(tuple(axes), np.asarray(values, dtype=float))


class TestPmf:
    def test_rejects_negative_entry(self):
        with pytest.raises(ProbabilityError, match="negative"):
            Pmf(("a", "b"), np.array([1.1, -0.1]))

    def test_rejects_bad_mass(self):
        with pytest.raises(ProbabilityError, match="mass"):
            Pmf(("a", "b"), np.array([0.5, 0.4999999]))

    def test_clamps_roundoff_negatives(self):
        p = Pmf(("a", "b"), np.array([1.0 + 0.5e-12, -0.5e-12]))
        assert p.probs[1] == 0.0

    def test_rejects_duplicate_labels(self):
        with pytest.raises(ProbabilityError, match="duplicate"):
            Pmf(("a", "a"), np.array([0.5, 0.5]))

    def test_bernoulli_orientation(self):
        assert Pmf.bernoulli(0.3).prob("1") == pytest.approx(0.3)


class TestMarginalize:
    def test_uniform_square_keeps_uniform(self):
        j = table([("X", ("0", "1")), ("Y", ("0", "1"))], [[0.25, 0.25], [0.25, 0.25]])
        m = j.marginalize({"X"}).to_pmf()
        assert np.allclose(m.probs, [0.5, 0.5])

    def test_additive_innocent_warden_marginal(self):
        # Hand-sum of the four cells of Q_S * 1{Z = X xor S} with X fixed at
        # the innocent symbol: Z copies S, so the Z-marginal is Bern(0.3).
        zeta = 0.3
        j = table(
            [("S", ("0", "1")), ("Z", ("0", "1"))],
            [[1 - zeta, 0.0], [0.0, zeta]],
        )
        assert np.allclose(j.marginalize({"Z"}).to_pmf().probs, [0.7, 0.3])

    def test_keep_all_axes_is_identity(self):
        j = table([("A", ("x", "y")), ("B", ("u", "v"))], [[0.1, 0.2], [0.3, 0.4]])
        same = j.marginalize({"A", "B"})
        assert same.axes == j.axes
        assert np.array_equal(same.values, j.values)

    def test_unknown_name_is_reported(self):
        j = table([("A", ("x", "y"))], [0.5, 0.5])
        with pytest.raises(ProbabilityError, match="'Q'"):
            j.marginalize({"Q"})

    def test_mass_preserved(self, rng):
        vals = rng.dirichlet(np.ones(8)).reshape(2, 2, 2)
        j = table(
            [("A", ("0", "1")), ("B", ("0", "1")), ("C", ("0", "1"))], vals
        )
        assert j.marginalize({"B"}).values.sum() == pytest.approx(1.0, abs=1e-12)


class TestCondition:
    def test_independent_pair_unchanged(self):
        a = Pmf(("0", "1"), np.array([0.4, 0.6]))
        b = Pmf(("u", "v", "w"), np.array([0.2, 0.3, 0.5]))
        j = product_joint([("A", a), ("B", b)])
        c = j.condition("A", "1")
        assert np.allclose(c.values, b.probs)

    def test_deterministic_channel_row(self):
        # Y = X xor S with X = 0: conditioning on S = 1 pins Y at 1.
        j = table(
            [("S", ("0", "1")), ("Y", ("0", "1"))],
            [[0.7, 0.0], [0.0, 0.3]],
        )
        c = j.condition("S", "1")
        assert np.allclose(c.values, [0.0, 1.0])

    def test_condition_matches_direct_row(self, rng):
        # Brute-force re-derivation of the conditional row on random tables.
        for _ in range(25):
            vals = rng.dirichlet(np.ones(9)).reshape(3, 3)
            j = table([("A", ("a", "b", "c")), ("B", ("x", "y", "z"))], vals)
            for i, label in enumerate(("a", "b", "c")):
                if vals[i].sum() < 1e-12:
                    continue
                got = j.condition("A", label).values
                assert np.allclose(got, vals[i] / vals[i].sum(), atol=1e-12)

    def test_null_event_raises(self):
        j = table([("A", ("a", "b")), ("B", ("x", "y"))], [[0.5, 0.5], [0.0, 0.0]])
        with pytest.raises(ProbabilityError, match="null event"):
            j.condition("A", "b")

    def test_condition_commutes_with_marginalize(self, rng):
        for _ in range(10):
            vals = rng.dirichlet(np.ones(27)).reshape(3, 3, 3)
            j = table(
                [("A", ("a", "b", "c")), ("B", ("x", "y", "z")), ("C", ("p", "q", "r"))],
                vals,
            )
            lhs = j.condition("C", "q").marginalize({"A"}).values
            rhs = j.marginalize({"A", "C"}).condition("C", "q").values
            assert np.allclose(lhs, rhs, atol=1e-12)


def _binary_additive_kernel():
    yz = tuple((y, z) for y in ("0", "1") for z in ("0", "1"))
    inputs, rows = [], []
    for x in ("0", "1"):
        for s in ("0", "1"):
            out = str(int(x) ^ int(s))
            rows.append(
                Pmf(yz, np.array([float(y == out and z == out) for y, z in yz]))
            )
            inputs.append((x, s))
    return Kernel(tuple(inputs), tuple(rows))


class TestCompose:
    def test_point_mass_input_rule(self):
        q_s = Pmf.bernoulli(0.3)
        point = Pmf(("0", "1"), np.array([1.0, 0.0]))
        pxs = Kernel(("0", "1"), (point, point))
        j = compose(q_s, pxs, _binary_additive_kernel())
        assert j.marginalize({"X"}).to_pmf().prob("1") == 0.0

    def test_tilted_rule_reaches_state_entropy(self):
        # With the tilted conditional the input's conditional entropy equals
        # the state entropy; verified against a direct two-term evaluation.
        from covertdmc.info import binary_entropy, conditional_entropy

        zeta = 0.3
        q_s = Pmf.bernoulli(zeta)
        pxs = Kernel.from_matrix(
            ("0", "1"), ("0", "1"), [[1 - zeta, zeta], [zeta, 1 - zeta]]
        )
        j = compose(q_s, pxs, _binary_additive_kernel())
        assert conditional_entropy(j, {"X"}, {"S"}) == pytest.approx(
            binary_entropy(zeta), abs=1e-12
        )

    def test_random_instance_marginals_validate(self, rng):
        q_s = Pmf(("0", "1"), rng.dirichlet(np.ones(2)))
        pxs = Kernel.from_matrix(
            ("0", "1"), ("0", "1"), rng.dirichlet(np.ones(2), size=2)
        )
        j = compose(q_s, pxs, _binary_additive_kernel())
        assert j.values.sum() == pytest.approx(1.0, abs=1e-9)
        for name in ("S", "X", "Y", "Z"):
            pmf = j.marginalize({name}).to_pmf()
            assert pmf.probs.min() >= 0.0

    def test_alphabet_mismatch(self):
        q_s = Pmf.bernoulli(0.3, ("s0", "s1"))
        pxs = Kernel.from_matrix(("s0", "s1"), ("0", "1"), [[1, 0], [1, 0]])
        with pytest.raises(ProbabilityError):
            compose(q_s, pxs, _binary_additive_kernel())


def test_exhaustive_small_alphabet_consistency():
    # marginalize/condition agree with direct enumeration on every axis of
    # small deterministic grids.
    labels2 = ("0", "1")
    labels3 = ("0", "1", "2")
    base = np.arange(1.0, 7.0).reshape(2, 3)
    base /= base.sum()
    j = JointTable((("A", labels2), ("B", labels3)), base)
    for a in range(2):
        got = j.condition("A", labels2[a]).values
        assert np.allclose(got, base[a] / base[a].sum())
    for b in range(3):
        got = j.condition("B", labels3[b]).values
        assert np.allclose(got, base[:, b] / base[:, b].sum())
    assert np.allclose(j.marginalize({"B"}).values, base.sum(axis=0))


def test_values_are_read_only():
    j = JointTable((("A", ("0", "1")),), np.array([0.5, 0.5]))
    with pytest.raises(ValueError):
        j.values[0] = 1.0
