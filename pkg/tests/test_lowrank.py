import numpy as np
import pytest

from cmereg.embedding import TrainingSet, fit
from cmereg.errors import InputError, NumericalError
from cmereg.kernels import GramMatrix, KernelSpec, gram
from cmereg.lowrank import incomplete_cholesky, subset_refit


def random_gram(seed=0, n=10, bw=0.8):
    rng = np.random.default_rng(seed)
    pts = rng.uniform(0, 3, size=(n, 2))
    return gram(KernelSpec("gaussian", bw, 2), pts), pts


class TestIncompleteCholesky:
    def test_full_rank_exact(self):
        K, _ = random_gram(seed=1)
        ic = incomplete_cholesky(K, max_rank=10, tol=0.0)
        err = np.linalg.norm(ic.factor @ ic.factor.T - K.entries)
        assert err <= 1e-8 * np.linalg.norm(K.entries)

    def test_rank_one_outer_product(self):
        v = np.array([1.0, 2.0, 3.0])
        K = GramMatrix(entries=np.outer(v, v), symmetric=True)
        ic = incomplete_cholesky(K, max_rank=1, tol=0.0)
        np.testing.assert_allclose(ic.factor @ ic.factor.T, K.entries, atol=1e-12)

    def test_identity_residual_trace(self):
        # each pivot of I removes exactly one unit diagonal entry
        K = GramMatrix(entries=np.eye(5), symmetric=True)
        ic = incomplete_cholesky(K, max_rank=3, tol=0.0)
        assert np.sum(ic.residual_diag[-1]) == pytest.approx(2.0)

    def test_trace_residual_matches_diag_sum(self):
        K, _ = random_gram(seed=2)
        ic = incomplete_cholesky(K, max_rank=4, tol=0.0)
        resid = K.entries - ic.factor @ ic.factor.T
        assert np.trace(resid) == pytest.approx(np.sum(ic.residual_diag[-1]), abs=1e-8)

    def test_residual_maxima_non_increasing(self):
        K, _ = random_gram(seed=3, n=12)
        ic = incomplete_cholesky(K, max_rank=12, tol=0.0)
        maxima = [np.max(d) for d in ic.residual_diag]
        for a, b in zip(maxima, maxima[1:]):
            assert b <= a + 1e-12

    def test_reconstruction_non_increasing_in_rank(self):
        K, _ = random_gram(seed=4, n=12)
        errs = []
        for m in range(1, 13):
            ic = incomplete_cholesky(K, max_rank=m, tol=0.0)
            errs.append(np.linalg.norm(ic.factor @ ic.factor.T - K.entries))
        for a, b in zip(errs, errs[1:]):
            assert b <= a + 1e-10

    def test_pivots_are_distinct(self):
        K, _ = random_gram(seed=5, n=15)
        ic = incomplete_cholesky(K, max_rank=15, tol=0.0)
        assert len(set(ic.pivots)) == len(ic.pivots)

    def test_nested_pivot_prefix(self):
        K, _ = random_gram(seed=6, n=10)
        ic_small = incomplete_cholesky(K, max_rank=4, tol=0.0)
        ic_big = incomplete_cholesky(K, max_rank=8, tol=0.0)
        assert ic_big.pivots[:4] == ic_small.pivots

    def test_not_psd_raises(self):
        A = np.array([[1.0, 2.0], [2.0, 1.0]])  # eigenvalues 3, -1
        with pytest.raises(NumericalError):
            incomplete_cholesky(GramMatrix(entries=A, symmetric=True), max_rank=2, tol=0.0)

    def test_bad_rank(self):
        K, _ = random_gram()
        with pytest.raises(InputError):
            incomplete_cholesky(K, max_rank=0)
        with pytest.raises(InputError):
            incomplete_cholesky(K, max_rank=11)


class TestSubsetRefit:
    def make_model(self, n=12, seed=0, lam=0.1):
        rng = np.random.default_rng(seed)
        xs = rng.uniform(0, 3, size=(n, 2))
        ys = rng.uniform(0, 3, size=(n, 2))
        spec = KernelSpec("gaussian", 0.8, 2)
        return fit(TrainingSet(xs, ys), spec, spec, lam)

    def test_all_pivots_reproduce_dense(self):
        model = self.make_model()
        M = subset_refit(model.train, range(model.train.n), model.kspec, model.lspec, model.lam)
        np.testing.assert_allclose(M, model.W, atol=1e-8)

    def test_single_pivot_single_row(self):
        model = self.make_model()
        M = subset_refit(model.train, [3], model.kspec, model.lspec, model.lam)
        nz_rows = np.where(np.any(M != 0, axis=1))[0]
        assert list(nz_rows) == [3]

    def test_empty_pivots_rejected(self):
        model = self.make_model()
        with pytest.raises(InputError):
            subset_refit(model.train, [], model.kspec, model.lspec, model.lam)

    def test_out_of_range_pivot(self):
        model = self.make_model()
        with pytest.raises(InputError):
            subset_refit(model.train, [99], model.kspec, model.lspec, model.lam)

    def test_nonpivot_rows_zero(self):
        model = self.make_model()
        pivots = [1, 4, 7]
        M = subset_refit(model.train, pivots, model.kspec, model.lspec, model.lam)
        mask = np.ones(model.train.n, dtype=bool)
        mask[pivots] = False
        assert np.all(M[mask] == 0.0)
        assert np.all(M[:, mask] == 0.0)
