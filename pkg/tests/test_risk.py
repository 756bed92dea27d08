import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from collrisk.errors import DegenerateData, InvalidDistortion
from collrisk.lattice import LatticeDistribution, from_pmf, mean, point_mass
from collrisk.risk import (
    AVaR,
    Distortion,
    DistortionFunction,
    Expectile,
    OneSidedMoment,
    VaR,
    dyadic_grid,
    evaluate,
    format_measure,
    holder_exponent_probe,
    induced_distortion,
    parse_measure,
)

masses = st.lists(st.floats(0.0, 1.0), min_size=1, max_size=10).filter(lambda w: sum(w) > 1e-3)
laws = st.builds(lambda off, w: LatticeDistribution(float(off), 1.0, np.array(w) / math.fsum(w)),
                 st.integers(-5, 5), masses)

MEASURES = [
    VaR(0.9),
    AVaR(0.9),
    Distortion(DistortionFunction.power(2.0)),
    OneSidedMoment(0.5, 2.0),
    Expectile(0.8),
]
COHERENT = MEASURES[1:]


def convolve_two(d1, d2):
    m = np.convolve(d1.masses, d2.masses)
    return LatticeDistribution(d1.offset + d2.offset, d1.step, m / math.fsum(m))


class TestEvaluate:
    def test_var_example(self):
        assert evaluate(VaR(0.8), from_pmf([(0, 0.5), (10, 0.3), (20, 0.2)])) == 10.0

    @pytest.mark.parametrize("measure", MEASURES)
    def test_point_mass(self, measure):
        assert evaluate(measure, point_mass(7.0)) == pytest.approx(7.0, abs=1e-12)

    def test_avar_upper_half(self):
        assert evaluate(AVaR(0.5), from_pmf([(0, 0.5), (10, 0.5)])) == pytest.approx(10.0, abs=1e-12)

    def test_avar_by_enumeration(self):
        d = from_pmf([(0, 0.5), (10, 0.3), (20, 0.2)])
        # upper 10% tail sits entirely at 20; upper 40% is 0.2 at 20 and 0.2 at 10
        assert evaluate(AVaR(0.9), d) == pytest.approx(20.0, abs=1e-12)
        assert evaluate(AVaR(0.6), d) == pytest.approx(15.0, abs=1e-12)

    def test_one_sided_moment_direct(self):
        d = from_pmf([(0, 0.5), (10, 0.5)])
        # mean 5; E[((X-5)^+)^2] = 12.5
        assert evaluate(OneSidedMoment(1.0, 2.0), d) == pytest.approx(5 + math.sqrt(12.5), abs=1e-12)

    @given(laws)
    def test_expectile_half_is_mean(self, d):
        assert evaluate(Expectile(0.5), d) == pytest.approx(mean(d), abs=1e-9)

    @given(laws, st.floats(0.5, 0.99))
    def test_expectile_first_order_condition(self, d, alpha):
        e = evaluate(Expectile(alpha), d)
        x = d.points
        up = float(np.dot(d.masses, np.maximum(x - e, 0.0)))
        down = float(np.dot(d.masses, np.maximum(e - x, 0.0)))
        assert alpha * up == pytest.approx((1 - alpha) * down, abs=1e-9)

    @pytest.mark.parametrize("measure", MEASURES)
    @given(d=laws, c=st.integers(-20, 20), lam=st.sampled_from([0.5, 2.0, 3.0]))
    def test_cash_additive_and_homogeneous(self, measure, d, c, lam):
        base = evaluate(measure, d)
        assert evaluate(measure, d.shift(float(c))) == pytest.approx(base + c, abs=1e-9)
        assert evaluate(measure, d.scale(lam)) == pytest.approx(lam * base, abs=1e-9 * max(1.0, abs(base)))

    @pytest.mark.parametrize("measure", COHERENT)
    @given(d1=laws, d2=laws)
    def test_subadditive_for_independent_sums(self, measure, d1, d2):
        total = evaluate(measure, convolve_two(d1, d2))
        assert total <= evaluate(measure, d1) + evaluate(measure, d2) + 1e-9

    @pytest.mark.parametrize("measure", MEASURES)
    @given(d=laws, k=st.integers(0, 9))
    def test_monotone_under_dominance(self, measure, d, k):
        # moving mass upward produces a stochastically larger law
        m = d.masses.copy()
        if k < m.size - 1:
            m[k + 1] += m[k]
            m[k] = 0.0
        bigger = LatticeDistribution(d.offset, d.step, m)
        assert evaluate(measure, bigger) >= evaluate(measure, d) - 1e-9

    @given(laws, st.floats(0.5, 0.99))
    def test_avar_dominates_var(self, d, alpha):
        assert evaluate(AVaR(alpha), d) >= evaluate(VaR(alpha), d) - 1e-9


class TestDistortionFunction:
    def test_rejects_concave(self):
        with pytest.raises(InvalidDistortion):
            DistortionFunction.table([(0, 0), (0.5, 0.8), (1, 1)])

    def test_rejects_bad_endpoints(self):
        with pytest.raises(InvalidDistortion):
            DistortionFunction.table([(0, 0), (1, 0.9)])

    def test_rejects_sub_linear_power(self):
        with pytest.raises(InvalidDistortion):
            DistortionFunction.power(0.5)

    @pytest.mark.parametrize("g", [DistortionFunction.avar(0.9), DistortionFunction.power(2.5),
                                   DistortionFunction.one_sided_moment(1.0, 2.0), DistortionFunction.expectile(0.7)])
    def test_shape(self, g):
        t = np.linspace(0, 1, 501)
        v = g(t)
        assert v[0] == pytest.approx(0.0, abs=1e-12) and v[-1] == pytest.approx(1.0, abs=1e-12)
        assert np.all(np.diff(v) >= -1e-12) and np.all(np.diff(v, 2) >= -1e-12)

    def test_avar_equals_its_distortion(self):
        d = from_pmf([(0, 0.3), (1, 0.3), (4, 0.4)])
        assert evaluate(AVaR(0.75), d) == pytest.approx(evaluate(Distortion(DistortionFunction.avar(0.75)), d))


class TestInducedDistortion:
    T = np.linspace(0.0, 1.0, 100)

    @pytest.mark.parametrize("a,p", [(1.0, 2.0), (0.5, 3.0), (0.3, 1.0)])
    def test_one_sided_moment_closed_form(self, a, p):
        for t in self.T:
            assert induced_distortion(OneSidedMoment(a, p), t) == pytest.approx(t - a * t * (1 - t) ** (1 / p), abs=1e-9)

    @pytest.mark.parametrize("alpha", [0.5, 0.8, 0.95])
    def test_expectile_closed_form(self, alpha):
        for t in self.T:
            expected = (1 - alpha) * t / (1 - alpha + (1 - t) * (2 * alpha - 1))
            assert induced_distortion(Expectile(alpha), t) == pytest.approx(expected, abs=1e-9)

    @pytest.mark.parametrize("measure", MEASURES)
    def test_endpoints(self, measure):
        assert induced_distortion(measure, 0.0) == pytest.approx(0.0, abs=1e-9)
        assert induced_distortion(measure, 1.0) == pytest.approx(1.0, abs=1e-9)

    def test_avar_recovers_its_distortion(self):
        for t in self.T:
            assert induced_distortion(AVaR(0.6), t) == pytest.approx(max(t - 0.6, 0) / 0.4, abs=1e-12)


class TestHolderProbe:
    @staticmethod
    def probe(fn):
        return holder_exponent_probe({float(t): float(fn(t)) for t in dyadic_grid()})

    def test_avar(self):
        beta, L = self.probe(lambda t: induced_distortion(AVaR(0.9), t))
        assert beta == pytest.approx(1.0, abs=0.01)
        assert L == pytest.approx(10.0, rel=1e-6)

    @pytest.mark.parametrize("p", [1.0, 2.0, 3.0])
    def test_one_sided_moment(self, p):
        beta, _ = self.probe(lambda t: induced_distortion(OneSidedMoment(1.0, p), t))
        assert beta == pytest.approx(1 / p, abs=0.01)

    def test_expectile(self):
        beta, _ = self.probe(lambda t: induced_distortion(Expectile(0.8), t))
        assert beta == pytest.approx(1.0, abs=0.01)

    def test_degenerate(self):
        with pytest.raises(DegenerateData):
            holder_exponent_probe({0.5: 1.0, 0.75: 1.0, 0.9: 1.0})


class TestParse:
    @pytest.mark.parametrize("text,expected", [
        ("var:0.99", VaR(0.99)),
        ("avar:0.95", AVaR(0.95)),
        ("osm:0.5,2", OneSidedMoment(0.5, 2.0)),
        ("expectile:0.9", Expectile(0.9)),
    ])
    def test_round_trip(self, text, expected):
        m = parse_measure(text)
        assert m == expected
        assert parse_measure(format_measure(m)) == m

    def test_distortion_needs_loader(self):
        with pytest.raises(ValueError):
            parse_measure("distortion:g.csv")

    def test_distortion_table(self):
        m = parse_measure("distortion:x", load_table=lambda _: [(0, 0), (0.5, 0), (1, 1)])
        assert evaluate(m, from_pmf([(0, 0.5), (10, 0.5)])) == pytest.approx(10.0)

    @pytest.mark.parametrize("text", ["var", "var:1.5", "expectile:0.3", "osm:2,1", "cvar:0.9", "avar:0"])
    def test_rejects(self, text):
        with pytest.raises(ValueError):
            parse_measure(text)
