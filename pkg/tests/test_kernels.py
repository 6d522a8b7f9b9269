import math

import numpy as np
import pytest

from ssl_kernel import kernels
from ssl_kernel.kernels import (
    Linear,
    Polynomial,
    Precomputed,
    RBF,
    psd_project,
    reg_inverse,
    sym_eigen,
    top_k,
)

from conftest import random_spd


class TestEval:
    def test_rbf_self_is_one(self):
        k = RBF(1.0)
        x = np.array([0.3, -0.7])
        assert k(x, x) == 1.0

    def test_rbf_at_distance_sqrt2(self):
        # direct formula: exp(-(sqrt(2))^2 / 2) = exp(-1)
        k = RBF(1.0)
        assert k([0.0, 0.0], [math.sqrt(2.0), 0.0]) == pytest.approx(
            math.exp(-1.0), abs=1e-12
        )

    def test_linear_dot(self):
        assert Linear()([1.0, 2.0], [3.0, 4.0]) == 11.0

    def test_polynomial(self):
        k = Polynomial(degree=2, coef=1.0)
        assert k([1.0, 0.0], [2.0, 0.0]) == (2.0 + 1.0) ** 2

    def test_dimension_mismatch(self):
        with pytest.raises(ValueError):
            RBF(1.0)([1.0, 2.0], [1.0, 2.0, 3.0])

    def test_precomputed_unknown_index(self):
        k = Precomputed(np.eye(3))
        with pytest.raises(IndexError):
            k(0, 5)

    def test_symmetry_all_variants(self, rng):
        variants = [RBF(0.7), Linear(), Polynomial(3, 0.5)]
        for k in variants:
            for _ in range(20):
                x = rng.normal(size=4)
                y = rng.normal(size=4)
                assert k(x, y) == k(y, x)

    def test_rbf_range(self, rng):
        k = RBF(1.3)
        for _ in range(50):
            x = rng.normal(size=3)
            y = rng.normal(size=3)
            v = k(x, y)
            assert 0.0 < v <= 1.0
            if not np.array_equal(x, y):
                assert v < 1.0 + 1e-12


class TestGramCross:
    def test_single_point(self):
        assert np.allclose(kernels.RBF(1.0).gram([[0.5, 0.5]]), [[1.0]])

    def test_orthonormal_linear(self):
        G = Linear().gram([[1.0, 0.0], [0.0, 1.0]])
        assert np.allclose(G, np.eye(2))

    def test_gram_matches_entrywise_eval(self, rng):
        k = RBF(0.8)
        X = rng.normal(size=(5, 3))
        G = k.gram(X)
        for i in range(5):
            for j in range(5):
                assert G[i, j] == pytest.approx(k(X[i], X[j]), abs=1e-12)
        assert np.linalg.eigvalsh(G).min() >= -1e-10

    def test_cross_equals_gram_on_same_data(self, rng):
        k = RBF(1.0)
        X = rng.normal(size=(4, 2))
        assert np.allclose(k.cross(X, X), k.gram(X), atol=1e-12)

    def test_cross_linear_example(self):
        C = Linear().cross([[1.0, 0.0]], [[2.0, 0.0], [0.0, 3.0]])
        assert np.array_equal(C, [[2.0, 0.0]])

    def test_cross_matches_entrywise(self, rng):
        k = RBF(1.1)
        X = rng.normal(size=(3, 2))
        Y = rng.normal(size=(4, 2))
        C = k.cross(X, Y)
        for i in range(3):
            for j in range(4):
                assert C[i, j] == pytest.approx(k(X[i], Y[j]), abs=1e-12)

    def test_empty_dataset_rejected(self):
        with pytest.raises(ValueError):
            Linear().gram(np.empty((0, 2)))

    def test_precomputed_gram_roundtrip(self, rng):
        G0 = random_spd(rng, 4)
        k = Precomputed(G0)
        assert np.allclose(k.gram(np.arange(4)), G0)
        assert np.allclose(k.cross([0, 1], [2, 3]), G0[:2, 2:])


class TestEigen:
    def test_identity(self):
        dec = sym_eigen(np.eye(3))
        assert np.allclose(dec.values, [1.0, 1.0, 1.0])
        assert np.allclose(dec.vectors @ dec.vectors.T, np.eye(3), atol=1e-12)

    def test_two_by_two_analytic(self):
        dec = sym_eigen(np.array([[1.0, 1.0], [1.0, 1.0]]))
        assert np.allclose(dec.values, [2.0, 0.0], atol=1e-12)
        top = dec.vectors[:, 0]
        expected = np.array([1.0, 1.0]) / math.sqrt(2.0)
        assert np.allclose(np.abs(top), expected, atol=1e-12)

    def test_reconstruction_random(self, rng):
        M = rng.normal(size=(6, 6))
        M = (M + M.T) / 2.0
        dec = sym_eigen(M)
        assert np.linalg.norm(dec.reconstruct() - M) <= 1e-8 * np.linalg.norm(M)
        assert np.allclose(dec.vectors.T @ dec.vectors, np.eye(6), atol=1e-8)
        assert np.all(np.diff(dec.values) <= 1e-12)

    def test_rejects_asymmetric(self):
        with pytest.raises(ValueError):
            sym_eigen(np.array([[0.0, 1.0], [0.0, 0.0]]))


class TestPsdProject:
    def test_psd_input_unchanged(self, rng):
        P = random_spd(rng, 4)
        assert np.allclose(psd_project(P), P, atol=1e-8)

    def test_diagonal(self):
        assert np.allclose(psd_project(np.diag([3.0, -2.0])), np.diag([3.0, 0.0]))

    def test_pairwise_block_unchanged(self):
        # I + A for one augmentation pair has eigenvalues {2, 0}: already PSD.
        M = np.array([[1.0, 1.0], [1.0, 1.0]])
        assert np.allclose(psd_project(M), M, atol=1e-12)

    def test_idempotent(self, rng):
        M = rng.normal(size=(5, 5))
        M = (M + M.T) / 2.0
        P1 = psd_project(M)
        assert np.allclose(psd_project(P1), P1, atol=1e-8)

    def test_nearest_psd(self, rng):
        # Frobenius optimality against random PSD candidates.
        for _ in range(20):
            M = rng.normal(size=(4, 4))
            M = (M + M.T) / 2.0
            best = np.linalg.norm(M - psd_project(M))
            for _ in range(20):
                P = random_spd(rng, 4, jitter=rng.uniform(0.0, 1.0))
                assert best <= np.linalg.norm(M - P) + 1e-10


class TestTopK:
    def test_full_k_reconstructs_psd(self, rng):
        P = random_spd(rng, 4)
        C, D = top_k(P, 4)
        assert np.allclose((C * D) @ C.T, P, atol=1e-8)

    def test_selects_largest(self):
        C, D = top_k(np.diag([5.0, 3.0, 1.0]), 2)
        assert np.allclose(D, [5.0, 3.0])

    def test_clamps_negative(self):
        C, D = top_k(np.diag([2.0, -1.0]), 2)
        assert np.allclose(D, [2.0, 0.0])

    def test_k_out_of_range(self):
        with pytest.raises(ValueError):
            top_k(np.eye(2), 3)


class TestRegInverse:
    def test_identity(self):
        assert np.allclose(reg_inverse(np.eye(3)), np.eye(3))

    def test_diagonal(self):
        assert np.allclose(reg_inverse(np.diag([2.0, 4.0])), np.diag([0.5, 0.25]))

    def test_product_is_identity(self, rng):
        G = random_spd(rng, 5)
        eps = 0.01
        inv = reg_inverse(G, eps)
        assert np.linalg.norm(inv @ (G + eps * np.eye(5)) - np.eye(5)) <= 1e-8
        assert np.array_equal(inv, inv.T)

    def test_singular_raises(self):
        with pytest.raises(np.linalg.LinAlgError):
            reg_inverse(np.ones((2, 2)))

    def test_gram_eigen_roundtrip(self, rng):
        G = RBF(1.0).gram(rng.normal(size=(6, 2)))
        dec = sym_eigen(G)
        assert np.linalg.norm(dec.reconstruct() - G) <= 1e-8 * np.linalg.norm(G)


class TestValidateGram:
    def test_accepts_kernel_output(self, rng):
        G = RBF(1.0).gram(rng.normal(size=(6, 2)))
        kernels.validate_gram(G)

    def test_rejects_asymmetric(self):
        with pytest.raises(ValueError):
            kernels.validate_gram(np.array([[1.0, 0.5], [0.0, 1.0]]))

    def test_rejects_indefinite(self):
        with pytest.raises(ValueError):
            kernels.validate_gram(np.array([[1.0, 2.0], [2.0, 1.0]]))


class TestGramIO:
    def test_csv_roundtrip(self, rng, tmp_path):
        G = random_spd(rng, 4)
        path = tmp_path / "gram.csv"
        kernels.save_gram_csv(G, path)
        assert np.array_equal(kernels.load_gram_csv(path), G)

    def test_csv_header_required(self, tmp_path):
        path = tmp_path / "bad.csv"
        path.write_text("1.0,0.0\n0.0,1.0\n")
        with pytest.raises(ValueError):
            kernels.load_gram_csv(path)

    def test_binary_roundtrip(self, rng, tmp_path):
        G = random_spd(rng, 3)
        path = tmp_path / "gram.ikgm"
        kernels.save_gram_bin(G, path)
        assert np.array_equal(kernels.load_gram_bin(path), G)

    def test_binary_layout(self, tmp_path):
        G = np.array([[1.0, 2.0], [2.0, 5.0]])
        path = tmp_path / "gram.ikgm"
        kernels.save_gram_bin(G, path)
        raw = path.read_bytes()
        assert raw[:4] == b"IKGM"
        assert raw[4:8] == (2).to_bytes(4, "big")
        assert np.frombuffer(raw[8:], dtype="<f8")[0] == 1.0

    def test_binary_bad_magic(self, tmp_path):
        path = tmp_path / "junk.bin"
        path.write_bytes(b"NOPE" + bytes(12))
        with pytest.raises(ValueError):
            kernels.load_gram_bin(path)
