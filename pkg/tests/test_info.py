import math

import numpy as np
import pytest

from covertdmc import info
from covertdmc.prob import JointTable, Pmf, ProbabilityError, product_joint
from conftest import random_pmf


def bern(p):
    return Pmf.bernoulli(p)


class TestEntropy:
    def test_uniform_binary(self):
        assert info.binary_entropy(0.5) == 1.0

    def test_direct_formula_value(self):
        expected = -0.3 * math.log2(0.3) - 0.7 * math.log2(0.7)
        assert info.binary_entropy(0.3) == pytest.approx(expected, abs=1e-15)
        assert info.binary_entropy(0.3) == pytest.approx(0.881291, abs=1e-6)

    def test_point_mass(self):
        assert info.binary_entropy(0.0) == 0.0
        assert info.entropy(Pmf(("a", "b"), np.array([1.0, 0.0]))) == 0.0

    def test_domain_error(self):
        with pytest.raises(ValueError):
            info.binary_entropy(1.2)

    def test_range_invariant(self, rng):
        for _ in range(200):
            n = int(rng.integers(2, 6))
            p = random_pmf(rng, n, full_support=False)
            h = info.entropy(p)
            assert 0.0 <= h <= math.log2(n) + 1e-12


class TestDivergence:
    def test_identity(self):
        p = bern(0.37)
        assert info.kl_divergence(p, p) == 0.0

    def test_two_term_hand_value(self):
        expected = 0.5 * math.log2(0.5 / 0.25) + 0.5 * math.log2(0.5 / 0.75)
        got = info.kl_divergence(bern(0.5), bern(0.25))
        assert got == pytest.approx(expected, abs=1e-15)
        assert got == pytest.approx(0.207519, abs=1e-6)

    def test_support_violation_is_infinite(self):
        assert math.isinf(info.kl_divergence(bern(0.5), bern(0.0)))

    def test_nonnegative(self, rng):
        for _ in range(1000):
            n = int(rng.integers(2, 5))
            assert info.kl_divergence(random_pmf(rng, n), random_pmf(rng, n)) >= 0.0


class TestTotalVariation:
    def test_identity(self):
        assert info.total_variation(bern(0.3), bern(0.3)) == 0.0

    def test_direct_sum(self):
        assert info.total_variation(bern(0.5), bern(0.25)) == pytest.approx(0.25)

    def test_disjoint_point_masses(self):
        a = Pmf(("a", "b"), np.array([1.0, 0.0]))
        b = Pmf(("a", "b"), np.array([0.0, 1.0]))
        assert info.total_variation(a, b) == 1.0

    def test_zero_iff_equal_iff_zero_divergence(self, rng):
        for _ in range(200):
            p = random_pmf(rng, 3)
            q = random_pmf(rng, 3)
            equal = bool(np.all(np.abs(p.probs - q.probs) <= 1e-12))
            assert (info.total_variation(p, q) <= 1e-12) == equal
            assert (info.kl_divergence(p, q) <= 1e-12 * 10) == equal or not equal


class TestMutualInformation:
    def test_independent_pair(self):
        j = product_joint([("A", bern(0.3)), ("B", bern(0.6))])
        assert info.mutual_information(j, {"A"}, {"B"}) == pytest.approx(0.0, abs=1e-12)

    def test_noiseless_binary(self):
        j = JointTable(
            (("X", ("0", "1")), ("Y", ("0", "1"))),
            np.array([[0.5, 0.0], [0.0, 0.5]]),
        )
        assert info.mutual_information(j, {"X"}, {"Y"}) == pytest.approx(1.0)

    def test_overlap_rejected(self):
        j = product_joint([("A", bern(0.3)), ("B", bern(0.6))])
        with pytest.raises(ProbabilityError):
            info.mutual_information(j, {"A"}, {"A", "B"})

    def test_chain_rule_residual(self, rng):
        # I(X,S;Z) = I(X;S,Z) + I(S;Z) - I(X;S) on random three-bit joints.
        for _ in range(100):
            vals = rng.dirichlet(np.ones(8)).reshape(2, 2, 2)
            j = JointTable(
                (("X", ("0", "1")), ("S", ("0", "1")), ("Z", ("0", "1"))), vals
            )
            lhs = info.mutual_information(j, {"X", "S"}, {"Z"})
            rhs = (
                info.mutual_information(j, {"X"}, {"S", "Z"})
                + info.mutual_information(j, {"S"}, {"Z"})
                - info.mutual_information(j, {"X"}, {"S"})
            )
            assert abs(lhs - rhs) < 1e-10

    def test_conditional_mi_matches_conditioned_tables(self, rng):
        for _ in range(50):
            vals = rng.dirichlet(np.ones(8)).reshape(2, 2, 2) + 1e-3
            vals /= vals.sum()
            j = JointTable(
                (("A", ("0", "1")), ("B", ("0", "1")), ("C", ("0", "1"))), vals
            )
            fast = info.conditional_mutual_information(j, {"A"}, {"B"}, {"C"})
            p_c = j.marginalize({"C"}).to_pmf()
            direct = sum(
                p_c.prob(c)
                * info.mutual_information(j.condition("C", c), {"A"}, {"B"})
                for c in ("0", "1")
            )
            assert abs(fast - direct) < 1e-10


class TestDistanceInequalities:
    def test_equal_pair_gives_zeros(self):
        lhs, rhs = info.pinsker_check(bern(0.4), bern(0.4))
        assert lhs == 0.0 and rhs == 0.0
        lhs, rhs = info.reverse_pinsker_check(bern(0.4), bern(0.4))
        assert lhs == 0.0 and rhs == 0.0

    def test_bernoulli_pair_both_directions(self):
        p, q = bern(0.5), bern(0.25)
        lhs, rhs = info.pinsker_check(p, q)
        assert lhs == pytest.approx(0.25)
        assert rhs == pytest.approx(math.sqrt(math.log(2) * 0.2075187496 / 2), abs=1e-9)
        assert lhs <= rhs + 1e-12
        lhs, rhs = info.reverse_pinsker_check(p, q)
        assert rhs == pytest.approx(math.log2(4.0) * 0.25)
        assert lhs <= rhs + 1e-12

    def test_thousand_random_pairs(self, rng):
        for _ in range(1000):
            n = int(rng.integers(2, 6))
            p = random_pmf(rng, n)
            q = random_pmf(rng, n)
            lhs, rhs = info.pinsker_check(p, q)
            assert lhs <= rhs + 1e-12
            lhs, rhs = info.reverse_pinsker_check(p, q)
            assert lhs <= rhs + 1e-12

    def test_reverse_needs_full_support(self):
        with pytest.raises(ValueError):
            info.reverse_pinsker_check(bern(0.5), bern(0.0))


class TestTypicality:
    def test_point_mass_reference(self):
        ref = JointTable((("X", ("a", "b")),), np.array([1.0, 0.0]))
        assert info.is_strongly_typical(["a"] * 7, ref, eps=0.01)

    def test_seeded_bernoulli_sample(self, rng):
        ref = JointTable((("X", ("0", "1")),), np.array([0.7, 0.3]))
        seq = ["1" if u < 0.3 else "0" for u in rng.random(10_000)]
        assert info.is_strongly_typical(seq, ref, eps=0.1)

    def test_zero_cell_rule(self):
        ref = JointTable((("X", ("a", "b", "c")),), np.array([0.5, 0.5, 0.0]))
        assert not info.is_strongly_typical(["a", "b", "c", "a"], ref, eps=5.0)

    def test_empty_sequence_rejected(self):
        ref = JointTable((("X", ("a", "b")),), np.array([0.5, 0.5]))
        with pytest.raises(ValueError):
            info.is_strongly_typical([], ref, eps=0.1)

    def test_joint_sequences(self):
        ref = JointTable(
            (("X", ("0", "1")), ("Y", ("0", "1"))),
            np.array([[0.5, 0.0], [0.0, 0.5]]),
        )
        xs = ["0", "1", "0", "1"]
        assert info.is_strongly_typical((xs, xs), ref, eps=0.1)
        assert not info.is_strongly_typical((xs, ["0", "0", "0", "0"]), ref, eps=0.1)
