import math

import pytest

from demuskin.localring import enumerate_mu_q, make_field
from demuskin.linalg import Mat, det
from demuskin.deformation import (
    ComponentLabel,
    DeformationParams,
    DeformationPoint,
    PreconditionError,
    RelationViolatedError,
    canonical_point,
    check_relation,
    conjugate_point,
    det_component,
    detect_eigenvalues,
    eigenvalues_by_rank_drop,
    is_in_V,
    label_for_index,
    sample_point_on_V,
)


@pytest.fixture(scope="module")
def p332():
    return DeformationParams(make_field(3, 3, 2, 32), d=2, n=2)


@pytest.fixture(scope="module")
def p554():
    return DeformationParams(make_field(5, 5, 2, 32), d=4, n=2)


@pytest.fixture(scope="module")
def p554n3():
    return DeformationParams(make_field(5, 5, 2, 32), d=4, n=3)


def upper_triangular_fixture(params):
    """M_1 = [[zeta, 1-zeta],[0,1]] with identity partners; conjugate to
    diag(zeta, 1) by a unipotent matrix, so the relation holds exactly."""
    f = params.field
    z = f.zeta()
    m1 = Mat(f, [[z, f.one() - z], [f.zero(), f.one()]])
    mats = [m1] + [Mat.identity(f, 2) for _ in range(params.tuple_length - 1)]
    return DeformationPoint(params, mats)


def jordan_fixture(params):
    """Non-semisimple relation point: M_1 = [[zeta, pi],[0, zeta]] and
    M_2 = diag(q+1, 1); then M_2 M_1 M_2^-1 = M_1^(q+1) exactly."""
    f = params.field
    z, pi = f.zeta(), f.uniformizer()
    m1 = Mat(f, [[z, pi], [f.zero(), z]])
    m2 = Mat.diag(f, [f.from_int(params.q + 1), f.one()])
    mats = [m1, m2] + [Mat.identity(f, 2) for _ in range(params.tuple_length - 2)]
    return DeformationPoint(params, mats)


class TestParams:
    def test_tuple_length(self, p332):
        assert p332.tuple_length == 4

    def test_q1_tuple_length(self):
        params = DeformationParams(make_field(5, 1, 1, 16), d=3, n=2)
        assert params.tuple_length == 4  # d + 1

    def test_d_below_phi_q_rejected(self):
        with pytest.raises(PreconditionError):
            DeformationParams(make_field(5, 5, 1, 32), d=2, n=2)

    def test_odd_d_rejected(self, p332):
        with pytest.raises(PreconditionError):
            DeformationParams(p332.field, d=3, n=2)

    def test_path_assumption(self, p554n3):
        assert p554n3.path_assumption
        assert not DeformationParams(make_field(3, 3, 1, 32), d=2, n=3).path_assumption


class TestCheckRelation:
    def test_identity_tuple(self, p332):
        f = p332.field
        pt = DeformationPoint(p332, [Mat.identity(f, 2)] * 4)
        assert check_relation(pt) == math.inf

    def test_canonical_points_all_labels(self, p332, p554, p554n3):
        for params in (p332, p554, p554n3):
            for k in range(params.q):
                assert check_relation(canonical_point(params, k)) == math.inf

    def test_upper_triangular_fixture(self, p332):
        pt = upper_triangular_fixture(p332)
        assert check_relation(pt) == math.inf

    def test_jordan_fixture(self, p332, p554):
        for params in (p332, p554):
            assert check_relation(jordan_fixture(params)) == math.inf

    def test_violated_relation_detected(self, p332):
        f = p332.field
        z = f.zeta()
        m1 = Mat.diag(f, [z, f.one()])
        bad = Mat(f, [[f.one(), f.uniformizer()], [f.zero(), f.one()]])
        pt = DeformationPoint(p332, [m1, bad, Mat.identity(f, 2), Mat.identity(f, 2)])
        assert check_relation(pt) < f.tau

    def test_q1_always_passes(self):
        params = DeformationParams(make_field(5, 1, 1, 16), d=3, n=2)
        pt = sample_point_on_V(params, seed=0, eigenvalues=[0, 0])
        assert check_relation(pt) == math.inf

    def test_non_congruent_matrix_rejected(self, p332):
        f = p332.field
        bad = Mat.diag(f, [f.from_int(2), f.one()])
        with pytest.raises(PreconditionError):
            DeformationPoint(p332, [bad] + [Mat.identity(f, 2)] * 3)


class TestDetComponent:
    def test_identity_label_zero(self, p332):
        f = p332.field
        pt = DeformationPoint(p332, [Mat.identity(f, 2)] * 4)
        assert det_component(pt).index == 0

    def test_canonical_roundtrip(self, p554):
        for k in range(5):
            assert det_component(canonical_point(p554, k)).index == k

    def test_upper_triangular_label_one(self, p332):
        pt = upper_triangular_fixture(p332)
        lab = det_component(pt)
        assert lab.index == 1
        assert lab.element == p332.field.zeta()

    def test_conjugation_invariance(self, p554):
        import random
        from demuskin.deformation import _random_gl_one_plus_m
        rng = random.Random(21)
        pt = sample_point_on_V(p554, seed=5, eigenvalues=[1, 3])
        lab = det_component(pt)
        for _ in range(5):
            g = _random_gl_one_plus_m(rng, p554.field, 2)
            assert det_component(conjugate_point(pt, g)) == lab

    def test_violated_point_raises(self, p332):
        f = p332.field
        bad = Mat(f, [[f.one(), f.uniformizer()], [f.zero(), f.one()]])
        z = f.zeta()
        pt = DeformationPoint(p332, [Mat.diag(f, [z, f.one()]), bad,
                                     Mat.identity(f, 2), Mat.identity(f, 2)])
        with pytest.raises(RelationViolatedError):
            det_component(pt)


class TestCanonicalAndV:
    def test_canonical_in_V(self, p554):
        assert is_in_V(canonical_point(p554, 2))

    def test_perturbed_third_matrix_leaves_V(self, p332):
        f = p332.field
        pt = canonical_point(p332, 1)
        bumped = Mat(f, [[f.one(), f.uniformizer()], [f.zero(), f.one()]])
        alt = DeformationPoint(p332, [pt.matrices[0], pt.matrices[1],
                                      bumped, pt.matrices[3]])
        assert not is_in_V(alt)

    def test_reduced_relation_on_V(self, p554):
        # on V the commutators past the first vanish, so the two-matrix
        # word M_2 M_1 M_2^-1 - M_1^(q+1) has the same residual
        from demuskin.linalg import mat_inv
        pt = sample_point_on_V(p554, seed=9, eigenvalues=[2, 2])
        m1, m2 = pt.matrices[0], pt.matrices[1]
        two_word = m2 * m1 * mat_inv(m2) - m1 ** (p554.q + 1)
        assert two_word.min_entry_valuation() == math.inf
        assert check_relation(pt) == math.inf


class TestSampler:
    def test_relation_exact_for_many_seeds(self, p332, p554):
        for params, eigs in ((p332, [0, 1]), (p332, [1, 1]), (p554, [2, 4])):
            for seed in range(25):
                pt = sample_point_on_V(params, seed, eigs)
                assert check_relation(pt) == math.inf
                assert is_in_V(pt)

    def test_determinism(self, p554):
        a = sample_point_on_V(p554, seed=7, eigenvalues=[1, 2])
        b = sample_point_on_V(p554, seed=7, eigenvalues=[1, 2])
        assert a == b

    def test_label_is_sum_of_eigenvalue_indices(self, p554):
        pt = sample_point_on_V(p554, seed=3, eigenvalues=[2, 4])
        assert det_component(pt).index == (2 + 4) % 5

    def test_identity_degenerate(self, p332):
        pt = sample_point_on_V(p332, seed=0, eigenvalues=[0, 0])
        assert det_component(pt).index == 0

    def test_p_not_greater_than_n_rejected(self):
        params = DeformationParams(make_field(3, 3, 1, 32), d=2, n=3)
        with pytest.raises(PreconditionError):
            sample_point_on_V(params, seed=0, eigenvalues=[0, 0, 0])

    def test_n3_samples(self, p554n3):
        for seed in range(10):
            pt = sample_point_on_V(p554n3, seed, eigenvalues=[1, 1, 4])
            assert check_relation(pt) == math.inf


class TestEigenvalueDetection:
    def test_samples_spectrum_in_mu_q(self, p554, p554n3):
        for params, eigs in ((p554, [1, 3]), (p554, [2, 2]), (p554n3, [0, 2, 2]),
                             (p554n3, [3, 3, 3])):
            for seed in range(10):
                pt = sample_point_on_V(params, seed, eigs)
                mults = detect_eigenvalues(pt.matrices[0])
                assert sum(mults.values()) == params.n
                expect = {k: eigs.count(k) for k in set(eigs)}
                assert mults == expect

    def test_rank_drop_agrees(self, p554):
        for seed in range(5):
            pt = sample_point_on_V(p554, seed, eigenvalues=[1, 2])
            mults = detect_eigenvalues(pt.matrices[0])
            assert sorted(mults) == eigenvalues_by_rank_drop(pt.matrices[0])

    def test_jordan_fixture_multiplicity(self, p332):
        pt = jordan_fixture(p332)
        assert detect_eigenvalues(pt.matrices[0]) == {1: 2}


class TestSerialization:
    def test_roundtrip(self, p554):
        pt = sample_point_on_V(p554, seed=11, eigenvalues=[0, 3])
        blob = pt.to_json(meta={"seed": 11})
        back = DeformationPoint.from_json(blob)
        assert back == pt
        assert blob["meta"]["seed"] == 11

    def test_label_roundtrip(self, p332):
        lab = label_for_index(p332.field, 2)
        blob = lab.to_json()
        assert ComponentLabel.from_json(p332.field, blob) == lab
