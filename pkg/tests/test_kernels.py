import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

import oracles
from surfamp.kernels import (
    ExcludedSetError,
    Kernel,
    PairKernel,
    ZeroSumTriple,
    austria_hunter_kernel,
    check_bound_C1,
    check_bound_C2,
    check_crucial_estimate,
    check_crucialsym,
    check_homogeneity,
    check_hunter_condition,
    check_pair_bound,
    check_pair_homogeneity,
    check_pair_symmetry_conjugation,
    check_symmetry_conjugation,
    hiz_kernel,
    kernel_from_spec,
    kernel_spec,
    phase_boundary_pair_kernel,
    reduce_to_q,
    rescale_to_p,
    sample_zero_sum_triples,
)

RT2 = math.sqrt(2.0)


# ---------------------------------------------------------------------------
# pinned values


class TestBuiltinValues:
    def test_hiz_point_values(self):
        b = hiz_kernel()
        assert b(1.0, 1.0, -2.0) == pytest.approx(0.5, abs=1e-15)
        assert b(1.0, 2.0, -3.0) == pytest.approx(1.0, abs=1e-15)

    def test_hiz_matches_scalar_oracle(self):
        b = hiz_kernel()
        x1, x2, x3 = sample_zero_sum_triples(200, seed=11)
        vals = b(x1, x2, x3)
        for i in range(200):
            ref = oracles.hiz_scalar(x1[i], x2[i], x3[i])
            assert abs(vals[i] - ref) <= 1e-12 * abs(ref)

    def test_austria_collapses_to_absolute_sum(self):
        b = austria_hunter_kernel(2.0, 0.0, -2.0, 0.0)
        x1, x2, x3 = sample_zero_sum_triples(1000, seed=3)
        ref = np.abs(x1) + np.abs(x2) + np.abs(x3)
        assert np.max(np.abs(b(x1, x2, x3) - ref) / ref) <= 1e-12

    def test_austria_matches_scalar_oracle(self):
        b = austria_hunter_kernel(1.0, 2.0, 3.0, 4.0)
        x1, x2, x3 = sample_zero_sum_triples(200, seed=7)
        vals = b(x1, x2, x3)
        for i in range(200):
            ref = oracles.austria_scalar(1, 2, 3, 4, x1[i], x2[i], x3[i])
            assert abs(vals[i] - ref) <= 1e-12 * abs(ref)

    def test_rescaled_point_values(self):
        p_hiz = rescale_to_p(hiz_kernel())
        assert p_hiz(1.0, 1.0, -2.0) == pytest.approx(0.5 / RT2, abs=1e-15)
        p_aus = rescale_to_p(austria_hunter_kernel(2, 0, -2, 0))
        assert p_aus(1.0, 1.0, -2.0) == pytest.approx(4.0 / RT2, abs=1e-14)
        assert p_hiz.homogeneity_degree == 0.5
        assert p_aus.homogeneity_degree == -0.5

    def test_reduced_point_values(self):
        q = reduce_to_q(hiz_kernel())
        assert q(1.0, 1.0) == pytest.approx(0.5, abs=1e-15)
        assert q(2.0, -1.0) == pytest.approx(0.25, abs=1e-15)

    def test_pair_kernel_all_six_sectors(self):
        g = 2.0 + 1.0j
        q = phase_boundary_pair_kernel(g)
        # one interior point per sector, against the literal case split
        pts = [(1.0, 2.0), (-1.0, -2.0), (1.0, -0.25), (-1.0, 0.25),
               (-0.25, 1.0), (0.25, -1.0)]
        for (k, l) in pts:
            assert q(k, l) == pytest.approx(oracles.pb_sector_scalar(g, k, l), abs=1e-15)

    def test_pair_kernel_random_vs_oracle(self):
        g = -0.7 + 0.3j
        q = phase_boundary_pair_kernel(g)
        rng = np.random.default_rng(5)
        k = rng.uniform(-3, 3, 500)
        l = rng.uniform(-3, 3, 500)
        keep = (k != 0) & (l != 0) & (k + l != 0)
        k, l = k[keep], l[keep]
        vals = q(k, l)
        for i in range(len(k)):
            ref = oracles.pb_sector_scalar(g, k[i], l[i])
            assert abs(vals[i] - ref) <= 1e-12 * (abs(ref) + 1e-30)

    def test_hiz_reduction_vs_oracle(self):
        q = reduce_to_q(hiz_kernel())
        for (a, l) in [(1.0, 0.5), (-2.0, 0.25), (3.0, -1.0), (-0.5, -0.125)]:
            ref = oracles.reduce_scalar(oracles.hiz_scalar, a, l)
            assert complex(q(a, l)) == pytest.approx(ref, abs=1e-14)


# ---------------------------------------------------------------------------
# domain validation


class TestValidation:
    def test_zero_sum_enforced(self):
        b = hiz_kernel()
        with pytest.raises(ValueError, match="sum to zero"):
            b(1.0, 1.0, 1.0)

    def test_excluded_set_rejected(self):
        b = hiz_kernel()
        with pytest.raises(ExcludedSetError):
            b(1.0, -1.0, 0.0)
        with pytest.raises(ExcludedSetError):
            b(np.array([1.0, 1.0]), np.array([1.0, -1.0]), np.array([-2.0, 0.0]))

    def test_triple_dataclass(self):
        t = ZeroSumTriple(1.0, 2.0, -3.0)
        assert t.astuple() == (1.0, 2.0, -3.0)
        assert hiz_kernel().evaluate(t) == pytest.approx(1.0)
        with pytest.raises(ValueError):
            ZeroSumTriple(1.0, 2.0, 3.0)
        with pytest.raises(ExcludedSetError):
            ZeroSumTriple(1.0, -1.0, 0.0)

    def test_pair_boundary_rejected(self):
        q = phase_boundary_pair_kernel(1.0)
        for (k, l) in [(0.0, 1.0), (1.0, 0.0), (1.0, -1.0)]:
            with pytest.raises(ExcludedSetError):
                q(k, l)

    def test_reduction_requires_degree_two(self):
        with pytest.raises(ValueError, match="degree-2"):
            reduce_to_q(austria_hunter_kernel(2, 0, -2, 0))
        with pytest.raises(ValueError, match="degree-2"):
            reduce_to_q(Kernel("nodeg", lambda k, l, m: k * 0j))

    def test_gamma_must_be_finite(self):
        with pytest.raises(ValueError):
            phase_boundary_pair_kernel(complex("nan"))

    def test_sampler_output_is_valid(self):
        x1, x2, x3 = sample_zero_sum_triples(5000, seed=42)
        m = np.maximum(np.abs(x1), np.maximum(np.abs(x2), np.abs(x3)))
        assert np.all(np.abs(x1 + x2 + x3) <= 1e-14 * m)
        assert np.all(x1 != 0) and np.all(x2 != 0) and np.all(x3 != 0)
        assert np.min(np.abs(np.concatenate([x1, x2]))) >= 1e-3
        assert np.max(np.abs(np.concatenate([x1, x2]))) <= 1e3


# ---------------------------------------------------------------------------
# certificates


class TestAlgebraCertificates:
    @pytest.mark.parametrize("b", [
        hiz_kernel(),
        austria_hunter_kernel(2, 0, -2, 0),
        austria_hunter_kernel(1, 2, 3, 4),
    ], ids=["hiz", "austria2020", "austria1234"])
    def test_symmetry_conjugation_passes(self, b):
        cert = check_symmetry_conjugation(b, n_samples=2000, seed=0)
        assert cert.passed and cert.worst_ratio <= 1e-12
        assert cert.samples_checked == 2000

    def test_broken_kernel_reports_witness(self):
        bad = Kernel("first_leg", lambda k, l, m: k + 0j)
        cert = check_symmetry_conjugation(bad, n_samples=500, seed=0)
        assert not cert.passed
        assert len(cert.worst_point) == 3
        # the witness actually witnesses: kernel differs under permutation there
        k, l, m = cert.worst_point
        assert abs(bad(k, l, m) - bad(l, k, m)) > 0

    @pytest.mark.parametrize("b,deg", [
        (hiz_kernel(), 2.0),
        (austria_hunter_kernel(1, 2, 3, 4), 1.0),
        (rescale_to_p(hiz_kernel()), 0.5),
    ], ids=["hiz", "austria", "p_hiz"])
    def test_homogeneity_passes(self, b, deg):
        assert b.homogeneity_degree == deg
        cert = check_homogeneity(b, n_samples=2000, seed=1)
        assert cert.passed
        assert cert.details["degree"] == deg

    def test_homogeneity_requires_declared_degree(self):
        with pytest.raises(ValueError, match="degree"):
            check_homogeneity(Kernel("nodeg", lambda k, l, m: k * 0j))

    def test_wrongly_declared_degree_fails(self):
        bad = Kernel("mislabeled", hiz_kernel().fn, homogeneity_degree=1.0)
        assert not check_homogeneity(bad, n_samples=200, seed=0).passed


class TestBoundCertificates:
    def test_C2_hiz_constant_half(self):
        cert = check_bound_C2(rescale_to_p(hiz_kernel()), n_samples=5000, seed=0)
        assert cert.passed
        assert cert.worst_ratio <= 0.5 + 1e-9
        # scan oracle approaches the same sup from below
        assert oracles.sup_C2_hiz(800) <= cert.worst_ratio + 1e-6

    def test_C1_austria_constant(self):
        cert = check_bound_C1(rescale_to_p(austria_hunter_kernel(2, 0, -2, 0)),
                              n_samples=5000, seed=0)
        assert cert.passed
        assert np.isfinite(cert.worst_ratio)
        # analytic sup is 2*sqrt(2), attained at equal-magnitude small legs
        assert cert.worst_ratio <= 2 * RT2 + 1e-9
        assert oracles.sup_C1_austria_2020(800) == pytest.approx(2 * RT2, abs=1e-6)

    def test_C1_counterexample_detected(self):
        bad = rescale_to_p(Kernel("inv", lambda k, l, m: 1.0 / np.abs(k * l * m) + 0j,
                                  homogeneity_degree=-3.0))
        cert = check_bound_C1(bad, n_samples=4000, seed=2)
        assert not cert.passed

    def test_crucial_estimate_pb(self):
        for g in (1.0 + 0j, 2.0 + 1.0j):
            cert = check_crucial_estimate(phase_boundary_pair_kernel(g),
                                          n_samples=4000, seed=0)
            assert cert.passed
            assert cert.worst_ratio <= 2 * abs(g) + 1e-9

    def test_crucial_estimate_hiz(self):
        cert = check_crucial_estimate(reduce_to_q(hiz_kernel()), n_samples=4000, seed=0)
        assert cert.passed and np.isfinite(cert.worst_ratio)

    def test_crucial_constant_kernel_vanishes(self):
        q = PairKernel("const", lambda k, l: np.ones(np.broadcast(k, l).shape) * (1 + 0j))
        cert = check_crucial_estimate(q, n_samples=1000, seed=0)
        assert cert.worst_ratio == 0.0

    def test_crucialsym_pb_and_hiz(self):
        for q in (phase_boundary_pair_kernel(2 + 1j), reduce_to_q(hiz_kernel())):
            cert = check_crucialsym(q, n_samples=4000, seed=0)
            assert cert.passed and cert.worst_ratio <= 1e-12

    def test_crucialsym_pinned_example(self):
        # gamma = 2+i at (1, -0.25): both sides equal 0.75 * conj(gamma)
        g = 2.0 + 1.0j
        q = phase_boundary_pair_kernel(g)
        lhs = abs(1.0) * q(1.0, -0.25)
        rhs = abs(0.75) * q(-(-0.25) - 1.0, -0.25)
        assert lhs == pytest.approx(0.75 * np.conj(g), abs=1e-14)
        assert rhs == pytest.approx(0.75 * np.conj(g), abs=1e-14)

    def test_crucialsym_detects_violation(self):
        q = PairKernel("const", lambda k, l: np.ones(np.broadcast(k, l).shape) * (1 + 0j))
        assert not check_crucialsym(q, n_samples=1000, seed=0).passed

    def test_hunter_condition(self):
        cert = check_hunter_condition(reduce_to_q(hiz_kernel()))
        assert cert.passed and cert.worst_ratio <= 1e-8
        assert cert.property_name == "hunterH"
        cert = check_hunter_condition(phase_boundary_pair_kernel(1 + 2j))
        assert cert.passed

    def test_hunter_limits_match_fit_oracle(self):
        q = reduce_to_q(hiz_kernel())
        qp, qm = oracles.hunter_limits_by_fit(lambda k, l: complex(q(k, l)))
        assert qp == pytest.approx(0.5, abs=1e-10)
        assert qm == pytest.approx(0.5, abs=1e-10)

    def test_hunter_detects_mismatch(self):
        # limits differ by 1 across the sign of k
        q = PairKernel("jump", lambda k, l: np.where(k > 0, 1.0, 2.0) + 0j)
        assert not check_hunter_condition(q).passed

    def test_pair_bound_certified_against_gamma(self):
        g = -0.5 + 3j
        cert = check_pair_bound(phase_boundary_pair_kernel(g), n_samples=4000, seed=0)
        assert cert.passed
        assert cert.worst_ratio <= abs(g) * (1 + 1e-12)
        assert cert.constant == abs(g)

    def test_pair_symmetry_and_homogeneity(self):
        q = phase_boundary_pair_kernel(0.3 - 1.2j)
        assert check_pair_symmetry_conjugation(q, n_samples=2000, seed=0).passed
        assert check_pair_homogeneity(q, n_samples=2000, seed=0).passed

    def test_certificate_json_shape(self):
        cert = check_bound_C2(rescale_to_p(hiz_kernel()), n_samples=500, seed=0)
        d = cert.to_json_dict()
        assert set(d) == {"property", "constant", "samples", "worst_ratio",
                          "worst_triple", "passed"}
        assert d["property"] == "C2"
        assert len(d["worst_triple"]) == 3

    def test_certificates_deterministic(self):
        a = check_bound_C2(rescale_to_p(hiz_kernel()), n_samples=1000, seed=9)
        b = check_bound_C2(rescale_to_p(hiz_kernel()), n_samples=1000, seed=9)
        assert a.worst_ratio == b.worst_ratio and a.worst_point == b.worst_point

    def test_sharded_run_still_passes(self, monkeypatch):
        monkeypatch.setenv("SURFAMP_THREADS", "4")
        cert = check_symmetry_conjugation(hiz_kernel(), n_samples=2000, seed=0)
        assert cert.passed


# ---------------------------------------------------------------------------
# serialization


class TestSerialization:
    def test_round_trip(self):
        for obj in (hiz_kernel(), austria_hunter_kernel(1, 2, 3, 4),
                    phase_boundary_pair_kernel(0.5 - 2j)):
            spec = kernel_spec(obj)
            clone = kernel_from_spec(spec)
            assert clone.name == obj.name
        clone = kernel_from_spec(kernel_spec(phase_boundary_pair_kernel(0.5 - 2j)))
        assert clone.gamma == 0.5 - 2j
        clone = kernel_from_spec(kernel_spec(austria_hunter_kernel(1, 2, 3, 4)))
        assert clone(1.0, 2.0, -3.0) == austria_hunter_kernel(1, 2, 3, 4)(1.0, 2.0, -3.0)

    def test_unknown_name_rejected(self):
        with pytest.raises(ValueError, match="unknown kernel"):
            kernel_from_spec({"name": "nope", "parameters": {}})


# ---------------------------------------------------------------------------
# property tests

finite = st.floats(min_value=1e-3, max_value=1e3, allow_nan=False)
signs = st.sampled_from([-1.0, 1.0])


@st.composite
def zero_sum_triples(draw):
    k = draw(finite) * draw(signs)
    l = draw(finite) * draw(signs)
    m = -(k + l)
    if m == 0.0 or abs(m) < 1e-6 * max(abs(k), abs(l)):
        l = 0.5 * l
        m = -(k + l)
    return k, l, m


@st.composite
def off_boundary_pairs(draw):
    k = draw(finite) * draw(signs)
    l = draw(finite) * draw(signs)
    if k + l == 0.0 or abs(k + l) < 1e-6 * max(abs(k), abs(l)):
        l = 0.5 * l
    return k, l


@settings(max_examples=200, deadline=None)
@given(zero_sum_triples())
def test_hiz_symmetry_property(t):
    k, l, m = t
    b = hiz_kernel()
    v = b(k, l, m)
    assert b(m, k, l) == pytest.approx(v, rel=1e-13)
    assert b(-k, -l, -m) == pytest.approx(np.conj(v), rel=1e-13)


@settings(max_examples=200, deadline=None)
@given(zero_sum_triples(), st.floats(min_value=-3, max_value=3),
       st.floats(min_value=-3, max_value=3))
def test_austria_conjugation_property(t, A, D):
    k, l, m = t
    b = austria_hunter_kernel(A, 1.0, -1.0, D)
    assert b(-k, -l, -m) == pytest.approx(np.conj(b(k, l, m)), rel=1e-12, abs=1e-14)


@settings(max_examples=300, deadline=None)
@given(off_boundary_pairs(), st.complex_numbers(max_magnitude=10, allow_nan=False,
                                                allow_infinity=False))
def test_pb_modulus_never_exceeds_gamma(pair, g):
    k, l = pair
    q = phase_boundary_pair_kernel(g)
    assert abs(q(k, l)) <= abs(g) * (1 + 1e-12)


@settings(max_examples=300, deadline=None)
@given(off_boundary_pairs())
def test_pb_doubling_is_exact(pair):
    # degree 0 and power-of-two scaling: bitwise equality
    k, l = pair
    q = phase_boundary_pair_kernel(1.7 - 0.4j)
    assert q(2 * k, 2 * l) == q(k, l)


@settings(max_examples=300, deadline=None)
@given(off_boundary_pairs())
def test_pb_crucialsym_pointwise(pair):
    k, l = pair
    q = phase_boundary_pair_kernel(2 + 1j)
    qa, qb = q(k, l), q(-l - k, l)
    scale = (abs(k) + abs(k + l)) * max(abs(qa), abs(qb))
    assert abs(abs(k) * qa - abs(k + l) * qb) <= 1e-12 * scale
