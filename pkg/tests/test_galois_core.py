import unittest
import itertools
import os
import sys
sys.path.insert(0, os.path.join(os.path.dirname(__file__), '..'))

import numpy as np
from scipy import stats

from pnclab.core.galois_core import (
    FieldElement,
    FieldError,
    FieldMatrix,
    FieldVector,
    UnsolvableSystemError,
    ZeroInverseError,
    gf_add,
    gf_inv,
    gf_mul,
    random_matrix,
    rank,
    solve,
)
from pnclab.core.rng import derive_rng


def E(value, q):
    return FieldElement(value, q)


class TestFieldElement(unittest.TestCase):

    def test_add_examples(self):
        """Test modular addition examples."""
        self.assertEqual(gf_add(E(3, 5), E(4, 5)), E(2, 5))
        self.assertEqual(gf_add(E(1, 2), E(1, 2)), E(0, 2))
        self.assertEqual(gf_add(E(0, 7), E(6, 7)), E(6, 7))

    def test_mul_examples(self):
        """Test modular multiplication examples."""
        self.assertEqual(gf_mul(E(3, 5), E(4, 5)), E(2, 5))
        self.assertEqual(gf_mul(E(2, 3), E(2, 3)), E(1, 3))
        self.assertEqual(gf_mul(E(1, 11), E(9, 11)), E(9, 11))

    def test_inverse_examples(self):
        """Test multiplicative inverses, including a brute-force check in F_13."""
        self.assertEqual(gf_inv(E(2, 5)), E(3, 5))
        self.assertEqual(gf_inv(E(1, 7)), E(1, 7))
        brute = [b for b in range(1, 13) if (5 * b) % 13 == 1]
        self.assertEqual(brute, [8])
        self.assertEqual(gf_inv(E(5, 13)), E(8, 13))

    def test_inverse_of_zero(self):
        """Test that inverting zero raises."""
        with self.assertRaises(ZeroInverseError):
            gf_inv(E(0, 7))
        with self.assertRaises(ZeroDivisionError):
            gf_inv(E(0, 7))

    def test_bad_modulus(self):
        """Test that composite, tiny and oversized moduli are rejected."""
        for q in (0, 1, 4, 9, 2 ** 16 + 1):
            with self.assertRaises(FieldError):
                E(0, q)
        with self.assertRaises(FieldError):
            E(5, 5)

    def test_modulus_mismatch(self):
        """Test that mixing fields raises."""
        with self.assertRaises(FieldError):
            gf_add(E(1, 3), E(1, 5))

    def test_field_axioms(self):
        """Test associativity, commutativity, distributivity and inverses on random triples."""
        rng = derive_rng(11)
        for q in (2, 3, 5, 7, 11):
            for a, b, c in rng.integers(0, q, size=(400, 3)):
                a, b, c = E(a, q), E(b, q), E(c, q)
                self.assertEqual((a + b) + c, a + (b + c))
                self.assertEqual((a * b) * c, a * (b * c))
                self.assertEqual(a + b, b + a)
                self.assertEqual(a * b, b * a)
                self.assertEqual(a * (b + c), a * b + a * c)
                self.assertEqual(a + (-a), E(0, q))
                if a.value:
                    self.assertEqual(a * gf_inv(a), E(1, q))


class TestFieldMatrix(unittest.TestCase):

    def test_empty_matrix_rejected(self):
        """Test that zero-row or zero-column matrices are constructor errors."""
        with self.assertRaises(FieldError):
            FieldMatrix(np.zeros((0, 3), dtype=int), 3)
        with self.assertRaises(FieldError):
            FieldVector([], 3)

    def test_entries_read_only(self):
        """Test that the backing array cannot be written."""
        M = FieldMatrix([[1, 2], [0, 1]], 3)
        with self.assertRaises(ValueError):
            M.entries[0, 0] = 2

    def test_rank_examples(self):
        """Test rank of identity, zero and dependent matrices."""
        self.assertEqual(rank(FieldMatrix.identity(3, 2)), 3)
        self.assertEqual(rank(FieldMatrix([[0] * 4] * 2, 5)), 0)
        self.assertEqual(rank(FieldMatrix([[1, 1], [2, 2]], 3)), 1)

    def test_rank_matches_row_space_enumeration(self):
        """Test rank against the size of the brute-force row space."""
        rng = derive_rng(3)
        for q in (2, 3):
            for _ in range(60):
                rows, cols = rng.integers(1, 4, size=2)
                M = random_matrix(int(rows), int(cols), q, rng)
                span = set()
                for x in itertools.product(range(q), repeat=M.rows):
                    span.add(tuple(np.mod(np.array(x) @ M.entries, q)))
                self.assertEqual(q ** rank(M), len(span))

    def test_solve_examples(self):
        """Test solve on identity and on a 2x2 system over F_3."""
        U = FieldMatrix([[1, 0], [2, 1]], 3)
        self.assertEqual(solve(FieldMatrix.identity(2, 3), U), U)

        A = FieldMatrix([[1, 1], [1, 2]], 3)
        W = solve(A, FieldMatrix([[0], [2]], 3))
        self.assertEqual(W, FieldMatrix([[1], [2]], 3))
        solutions = [
            (w1, w2) for w1 in range(3) for w2 in range(3)
            if ((w1 + w2) % 3, (w1 + 2 * w2) % 3) == (0, 2)
        ]
        self.assertEqual(solutions, [(1, 2)])

    def test_solve_rank_deficient(self):
        """Test that a dependent system reports its rank."""
        with self.assertRaises(UnsolvableSystemError) as ctx:
            solve(FieldMatrix([[1, 1], [2, 2]], 3), FieldMatrix([[1], [2]], 3))
        self.assertEqual(ctx.exception.rank, 1)
        self.assertEqual(ctx.exception.required, 2)

    def test_solve_inconsistent(self):
        """Test that an overdetermined inconsistent system is rejected."""
        A = FieldMatrix([[1, 0], [0, 1], [1, 1]], 3)
        U = FieldMatrix([[1], [1], [0]], 3)
        with self.assertRaises(UnsolvableSystemError) as ctx:
            solve(A, U)
        self.assertEqual(ctx.exception.rank, 2)

    def test_solve_apply_identity(self):
        """Test solve(A, A W) = W for random full-rank A."""
        rng = derive_rng(5)
        for q in (2, 3, 5, 7, 11):
            for _ in range(40):
                L = int(rng.integers(1, 7))
                M = int(rng.integers(L, 7))
                k = int(rng.integers(1, 7))
                A = random_matrix(M, L, q, rng)
                while rank(A) < L:
                    A = random_matrix(M, L, q, rng)
                W = random_matrix(L, k, q, rng)
                self.assertEqual(solve(A, A @ W), W)


class TestRandomMatrix(unittest.TestCase):

    def test_seed_determinism(self):
        """Test that a fixed seed reproduces the same matrix."""
        self.assertEqual(random_matrix(4, 3, 7, derive_rng(42)), random_matrix(4, 3, 7, derive_rng(42)))

    def test_uniform_entries(self):
        """Test entry uniformity with a chi-square test over 1e5 draws."""
        M = random_matrix(1000, 100, 5, derive_rng(9))
        counts = np.bincount(M.entries.ravel(), minlength=5)
        self.assertGreater(stats.chisquare(counts).pvalue, 1e-3)

    def test_binary_one_by_one(self):
        """Test that a 1x1 binary matrix takes both values."""
        rng = derive_rng(1)
        values = {int(random_matrix(1, 1, 2, rng).entries[0, 0]) for _ in range(100)}
        self.assertEqual(values, {0, 1})

    def test_dimensions_positive(self):
        """Test that empty random matrices are rejected."""
        with self.assertRaises(FieldError):
            random_matrix(0, 2, 3, derive_rng(1))


if __name__ == '__main__':
    unittest.main()
