import numpy as np
import pytest

from mirror_diffusion import (Domain, DomainError, IdentityMap, LogBarrierMap,
                              NegativeEntropyMap, make_mirror_map, softmax)
from mirror_diffusion.rng import make_generator


def identity(dim=2):
    return IdentityMap(Domain.euclidean(dim))


def neg_entropy(dim=3):
    return NegativeEntropyMap(Domain.simplex(dim))


def log_barrier(dim=1, lo=0.0, hi=1.0):
    return LogBarrierMap(Domain.box(dim, lo, hi))


def interior_points(mm, n, dim, rng, margin):
    if mm.domain.kind == "simplex":
        x = rng.dirichlet(np.ones(dim), size=n)
        x = np.maximum(x, margin)
        return x / x.sum(axis=1, keepdims=True)
    if mm.domain.kind == "box":
        a, b = mm.domain.lower, mm.domain.upper
        pad = margin * (b - a)
        return rng.uniform(a + pad, b - pad, size=(n, dim))
    return 3.0 * rng.standard_normal((n, dim))


def all_maps(dim):
    return [identity(dim), neg_entropy(dim), log_barrier(dim)]


class TestPotential:
    def test_negative_entropy_half_half(self):
        assert neg_entropy(2).potential(np.array([0.5, 0.5])) == pytest.approx(
            -np.log(2.0), abs=1e-12)

    def test_identity_three_four(self):
        assert identity().potential(np.array([3.0, 4.0])) == pytest.approx(12.5)

    def test_log_barrier_center(self):
        assert log_barrier().potential(np.array([0.5])) == pytest.approx(
            2.0 * np.log(2.0), abs=1e-12)

    def test_outside_domain_raises(self):
        with pytest.raises(DomainError):
            neg_entropy(2).potential(np.array([0.9, 0.9]))
        with pytest.raises(DomainError):
            log_barrier().potential(np.array([1.5]))


class TestGrad:
    def test_negative_entropy_uniform(self):
        g = neg_entropy(3).grad(np.full(3, 1.0 / 3.0))
        assert g == pytest.approx(np.full(3, 1.0 + np.log(1.0 / 3.0)), abs=1e-12)

    def test_log_barrier_center_is_zero(self):
        g = log_barrier(2).grad(np.array([0.5, 0.5]))
        assert g == pytest.approx(np.zeros(2), abs=1e-12)

    def test_identity_passthrough(self):
        x = np.array([1.0, 2.0])
        assert np.array_equal(identity().grad(x), x)


class TestGradConjugate:
    def test_softmax_shift_invariance(self):
        for c in (-7.0, 0.0, 3.5):
            out = neg_entropy(3).grad_conjugate(np.full(3, c))
            assert out == pytest.approx(np.full(3, 1.0 / 3.0), abs=1e-15)

    def test_softmax_inverts_grad(self):
        x = np.array([0.2, 0.3, 0.5])
        mm = neg_entropy(3)
        assert mm.grad_conjugate(mm.grad(x)) == pytest.approx(x, abs=1e-15)

    def test_log_barrier_zero_maps_to_center(self):
        assert log_barrier().grad_conjugate(np.array([0.0])) == pytest.approx([0.5])

    def test_log_barrier_saturates_inside(self):
        mm = log_barrier()
        out = mm.grad_conjugate(np.array([1e30, -1e30]))
        assert out[0] == pytest.approx(1.0 - mm.interior_floor)
        assert out[1] == pytest.approx(mm.interior_floor)


class TestHessianDiag:
    def test_negative_entropy(self):
        h = neg_entropy(2).hessian_diag(np.array([0.5, 0.5]))
        assert h == pytest.approx([2.0, 2.0], abs=1e-12)

    def test_log_barrier_center(self):
        assert log_barrier().hessian_diag(np.array([0.5])) == pytest.approx([8.0])

    def test_identity_all_ones(self):
        assert np.array_equal(identity(3).hessian_diag(np.zeros(3)), np.ones(3))

    def test_strictly_positive_near_boundary(self):
        mm = neg_entropy(4)
        x = mm.clamp_to_interior(np.array([1.0, 0.0, 0.0, 0.0]))
        assert (mm.hessian_diag(x) > 0).all()


class TestConjugatePotential:
    def test_negative_entropy_on_image_sums_to_one(self):
        mm = neg_entropy(3)
        for x in ([0.2, 0.3, 0.5], [0.01, 0.01, 0.98]):
            y = mm.grad(np.asarray(x))
            assert mm.conjugate_potential(y) == pytest.approx(1.0, abs=1e-12)

    def test_identity(self):
        assert identity().conjugate_potential(np.array([3.0, 4.0])) == pytest.approx(12.5)

    def test_negative_entropy_ones(self):
        assert neg_entropy(2).conjugate_potential(np.array([1.0, 1.0])) == pytest.approx(2.0)

    def test_overflow_raises(self):
        with pytest.raises(OverflowError):
            neg_entropy(2).conjugate_potential(np.array([800.0, 0.0]))


class TestClampToInterior:
    def test_simplex_vertex(self):
        mm = neg_entropy(3)
        out = mm.clamp_to_interior(np.array([1.0, 0.0, 0.0]))
        assert out.sum() == pytest.approx(1.0, abs=1e-15)
        assert (out >= mm.interior_floor / 2).all()
        assert out == pytest.approx([1.0, 1e-12, 1e-12], abs=1e-9)

    def test_box_interior_unchanged(self):
        assert np.array_equal(log_barrier().clamp_to_interior(np.array([0.3])),
                              np.array([0.3]))

    def test_box_boundary(self):
        out = log_barrier().clamp_to_interior(np.array([1.0]))
        assert out == pytest.approx([1.0 - 1e-12])

    def test_grossly_outside_raises(self):
        with pytest.raises(DomainError):
            log_barrier().clamp_to_interior(np.array([2.0]))
        with pytest.raises(DomainError):
            neg_entropy(2).clamp_to_interior(np.array([0.8, 0.8]))


class TestProperties:
    @pytest.mark.parametrize("dim", [2, 5, 16])
    def test_roundtrip(self, dim):
        rng = make_generator(42 + dim)
        for mm in all_maps(dim):
            x = interior_points(mm, 200, dim, rng, 1e-6)
            err = np.abs(mm.grad_conjugate(mm.grad(x)) - x).max()
            assert err <= 1e-9, f"{mm.kind}: {err}"

    @pytest.mark.parametrize("dim", [2, 8])
    def test_fenchel_identity(self, dim):
        rng = make_generator(77)
        for mm in (identity(dim), neg_entropy(dim)):
            x = interior_points(mm, 300, dim, rng, 1e-4)
            y = mm.grad(x)
            lhs = mm.potential(x) + mm.conjugate_potential(y)
            rhs = (x * y).sum(axis=-1)
            rel = np.abs(lhs - rhs) / np.maximum(np.abs(lhs) + np.abs(rhs), 1.0)
            assert rel.max() <= 1e-8

    def test_fenchel_identity_log_barrier_is_definitional(self):
        # phi* is computed through the identity itself, so it holds exactly
        mm = log_barrier(3)
        rng = make_generator(5)
        x = interior_points(mm, 100, 3, rng, 0.01)
        y = mm.grad(x)
        assert mm.conjugate_potential(y) == pytest.approx(
            (mm.grad_conjugate(y) * y).sum(axis=-1) - mm.potential(mm.grad_conjugate(y)))

    @pytest.mark.parametrize("dim", [2, 8])
    def test_hessian_matches_finite_differences(self, dim):
        rng = make_generator(13)
        step = 1e-5
        for mm in all_maps(dim):
            x = interior_points(mm, 100, dim, rng, 0.03)
            hess = mm.hessian_diag(x)
            for j in range(dim):
                hi, lo = x.copy(), x.copy()
                hi[:, j] += step
                lo[:, j] -= step
                fd = (mm.grad(hi)[:, j] - mm.grad(lo)[:, j]) / (2 * step)
                rel = np.abs(fd - hess[:, j]) / np.abs(hess[:, j])
                assert rel.max() <= 1e-4, f"{mm.kind} coord {j}"

    def test_hessian_grad_matches_finite_differences(self):
        rng = make_generator(14)
        step = 1e-5
        for mm in all_maps(4):
            x = interior_points(mm, 50, 4, rng, 0.05)
            hg = mm.hessian_diag_grad(x)
            for j in range(4):
                hi, lo = x.copy(), x.copy()
                hi[:, j] += step
                lo[:, j] -= step
                fd = (mm.hessian_diag(hi)[:, j] - mm.hessian_diag(lo)[:, j]) / (2 * step)
                assert fd == pytest.approx(hg[:, j], rel=1e-4, abs=1e-10)

    def test_one_convexity_witness(self):
        rng = make_generator(99)
        mm = neg_entropy(6)
        x = mm.clamp_to_interior(np.maximum(rng.dirichlet(np.ones(6), 500), 1e-9))
        y = mm.clamp_to_interior(np.maximum(rng.dirichlet(np.ones(6), 500), 1e-9))
        gap = mm.potential(y) - mm.potential(x) - (mm.grad(x) * (y - x)).sum(axis=-1)
        slack = gap - 0.5 * np.abs(y - x).sum(axis=-1) ** 2
        assert slack.min() >= -1e-10

    def test_pinsker(self):
        rng = make_generator(100)
        p = np.maximum(rng.dirichlet(np.ones(8), 500), 1e-12)
        q = np.maximum(rng.dirichlet(np.ones(8), 500), 1e-12)
        p /= p.sum(axis=1, keepdims=True)
        q /= q.sum(axis=1, keepdims=True)
        kl = (p * np.log(p / q)).sum(axis=1)
        assert (kl - 0.5 * np.abs(p - q).sum(axis=1) ** 2).min() >= -1e-12

    def test_softmax_lands_on_simplex(self):
        rng = make_generator(3)
        s = softmax(rng.standard_normal((500, 7)) * 40.0)
        assert np.abs(s.sum(axis=1) - 1.0).max() <= 1e-12
        assert (s >= 0.0).all()

    def test_operations_do_not_mutate_input(self):
        mm = neg_entropy(3)
        x = np.array([0.2, 0.3, 0.5])
        before = x.copy()
        mm.potential(x)
        mm.grad(x)
        mm.hessian_diag(x)
        mm.clamp_to_interior(x)
        assert np.array_equal(x, before)


class TestConstruction:
    def test_kind_domain_mismatch(self):
        with pytest.raises(DomainError):
            NegativeEntropyMap(Domain.euclidean(3))
        with pytest.raises(DomainError):
            LogBarrierMap(Domain.simplex(3))
        with pytest.raises(DomainError):
            IdentityMap(Domain.box(2, 0.0, 1.0))

    def test_factory(self):
        mm = make_mirror_map("log_barrier", Domain.box(2, -1.0, 2.0), 1e-10)
        assert mm.kind == "log_barrier"
        assert mm.interior_floor == 1e-10

    def test_box_requires_ordered_bounds(self):
        with pytest.raises(DomainError):
            Domain.box(2, 1.0, 0.0)

    def test_dim_positive(self):
        with pytest.raises(DomainError):
            Domain.simplex(0)
