import unittest
import itertools
import math
import os
import sys
sys.path.insert(0, os.path.join(os.path.dirname(__file__), '..'))

import numpy as np
from scipy import optimize

from pnclab.core.galois_core import FieldError, FieldMatrix, FieldVector
from pnclab.core.lattice_cf import (
    CfProblem,
    LatticeError,
    LatticePoint,
    NestedLatticeCode,
    alpha_mmse_cf,
    alpha_mmse_complex,
    alpha_mmse_equal,
    alpha_mmse_single,
    best_coeffs,
    best_single_message_rate,
    cf_decode,
    cf_decode_complex,
    cf_error_rate,
    comp_rate_at_alpha,
    comp_rate_complex,
    comp_rate_real,
    complex_combination,
    complex_shift_weights,
    full_rank_complex,
    interference_as_noise_rate,
    lattice_combine,
    lattice_decode_point,
    mod_coarse,
    n_effec,
    n_effec_complex,
    phi_inv,
    phi_map,
    quantize_fine,
    recover_from_complex_equations,
    split_complex_decode,
    split_complex_encode,
)
from pnclab.core.netcod_core import Packet
from pnclab.core.rng import derive_rng

# q = 5, n = 8, k = 2; fine lattice minimum squared distance 11 beta^2
TEST_ROWS = [[2, 0], [0, 2], [2, 2], [2, 4], [1, 3], [1, 4], [1, 0], [1, 0]]


def lattice_generator():
    return FieldMatrix(TEST_ROWS, 5)


def packet(values, q):
    return Packet(FieldVector(values, q))


def small_code(P=2.0 / 3.0):
    """q = 3, n = 2, k = 1; beta = 1 at the default power."""
    return NestedLatticeCode(FieldMatrix([[1], [2]], 3), P)


class TestNestedLatticeCode(unittest.TestCase):

    def test_beta_and_moduli(self):
        """Test the scaling constant and the coarse modulus."""
        code = small_code()
        self.assertAlmostEqual(code.beta, 1.0)
        self.assertAlmostEqual(code.coarse_modulus, 3.0)
        self.assertAlmostEqual(code.center_shift, 1.0)

    def test_average_power(self):
        """Test that the uniform codebook has average power P."""
        code = NestedLatticeCode(lattice_generator(), 3.7)
        self.assertAlmostEqual(code.average_power, 3.7, places=12)
        self.assertGreaterEqual(code.peak_power, code.average_power)

    def test_min_distance(self):
        """Test the enumerated minimum distance of the test lattice."""
        code = NestedLatticeCode(lattice_generator(), 2.0)
        self.assertAlmostEqual(code.min_distance_sq(), 11 * code.beta ** 2)

    def test_rate(self):
        """Test the code rate."""
        code = NestedLatticeCode(lattice_generator(), 1.0)
        self.assertAlmostEqual(code.rate, 2 * math.log2(5) / 8)

    def test_random_full_rank(self):
        """Test that random codes are reproducible and reject k > n."""
        a = NestedLatticeCode.random(5, 6, 2, 1.0, derive_rng(4))
        b = NestedLatticeCode.random(5, 6, 2, 1.0, derive_rng(4))
        self.assertEqual(a.G, b.G)
        with self.assertRaises(FieldError):
            NestedLatticeCode.random(5, 2, 3, 1.0, derive_rng(4))

    def test_bad_power(self):
        """Test that non-positive power is rejected."""
        with self.assertRaises(LatticeError):
            NestedLatticeCode(lattice_generator(), 0.0)

    def test_contains(self):
        """Test membership in the coarse Voronoi region."""
        code = small_code()
        self.assertTrue(code.contains([-1.5, 1.49]))
        self.assertFalse(code.contains([1.5, 0.0]))


class TestLatticeMaps(unittest.TestCase):

    def test_phi_example(self):
        """Test the centered embedding of one message."""
        code = small_code()
        x = phi_map(code, packet([2], 3))
        np.testing.assert_allclose(x.coords, [1.0, 0.0])
        self.assertEqual(x.shift_weight, 1)
        self.assertEqual(phi_inv(code, x), packet([2], 3))

    def test_zero_message(self):
        """Test that the zero message maps to the corner offset and back."""
        code = NestedLatticeCode(lattice_generator(), 1.0)
        zero = packet([0, 0], 5)
        x = phi_map(code, zero)
        np.testing.assert_allclose(x.coords, -2.0 * code.beta * np.ones(8))
        self.assertEqual(phi_inv(code, x), zero)

    def test_phi_round_trip_power(self):
        """Test round trips over the full codebook and the power of every point."""
        code = NestedLatticeCode(lattice_generator(), 1.0)
        for m in itertools.product(range(5), repeat=2):
            x = phi_map(code, packet(m, 5))
            self.assertLessEqual(x.power, code.peak_power + 1e-12)
            self.assertEqual(phi_inv(code, x).payload.to_list(), list(m))

    def test_phi_inv_rejects_off_lattice(self):
        """Test that points off the fine lattice are rejected."""
        code = small_code()
        with self.assertRaises(LatticeError):
            phi_inv(code, LatticePoint(np.array([0.3, 0.0])))
        with self.assertRaises(LatticeError):
            phi_inv(code, LatticePoint(np.array([0.0, 0.0, 0.0])))

    def test_wrong_packet(self):
        """Test that packets of the wrong field or length are rejected."""
        code = small_code()
        with self.assertRaises(LatticeError):
            phi_map(code, packet([1], 5))
        with self.assertRaises(LatticeError):
            phi_map(code, packet([1, 1], 3))

    def test_mod_coarse_examples(self):
        """Test coarse reduction with beta q = 6."""
        code = NestedLatticeCode(FieldMatrix([[1]], 3), 8.0 / 3.0)
        self.assertAlmostEqual(code.coarse_modulus, 6.0)
        np.testing.assert_allclose(mod_coarse(code, [7.0, -3.0, 3.0, -9.5]), [1.0, -3.0, -3.0, 2.5])

    def test_mod_distributive(self):
        """Test [[x1] mod + x2] mod = [x1 + x2] mod on random pairs."""
        code = NestedLatticeCode(lattice_generator(), 2.0)
        rng = derive_rng(13)
        x1 = rng.uniform(-50, 50, size=(10000, 8))
        x2 = rng.uniform(-50, 50, size=(10000, 8))
        left = mod_coarse(code, mod_coarse(code, x1) + x2)
        right = mod_coarse(code, x1 + x2)
        np.testing.assert_allclose(left, right, rtol=0, atol=1e-12)

    def test_quantize_commutes_with_mod(self):
        """Test [Q([x] mod)] mod = [Q(x)] mod on random vectors."""
        code = NestedLatticeCode(lattice_generator(), 2.0)
        rng = derive_rng(14)
        for x in rng.uniform(-30, 30, size=(10000, 8)):
            left = mod_coarse(code, quantize_fine(code, mod_coarse(code, x)).coords)
            right = mod_coarse(code, quantize_fine(code, x).coords)
            np.testing.assert_allclose(left, right, rtol=0, atol=1e-12)

    def test_quantize_corrects_small_noise(self):
        """Test that noise shorter than half the minimum distance is removed."""
        code = NestedLatticeCode(lattice_generator(), 2.0)
        radius = 0.49 * math.sqrt(code.min_distance_sq())
        rng = derive_rng(15)
        for _ in range(200):
            w = packet(rng.integers(0, 5, size=2), 5)
            e = rng.normal(size=8)
            y = phi_map(code, w).coords + radius * e / np.linalg.norm(e)
            self.assertEqual(phi_inv(code, lattice_decode_point(code, y, 1.0)), w)

    def test_quantize_shape(self):
        """Test that a wrong-length input is rejected."""
        with self.assertRaises(LatticeError):
            quantize_fine(small_code(), np.zeros(3))

    def test_linearity(self):
        """Test phi_inv([sum a_l phi(w_l)] mod) = sum a_l w_l on random instances."""
        rng = derive_rng(16)
        for _ in range(1000):
            q = int(rng.choice([2, 3, 5]))
            k = int(rng.integers(1, 3))
            n = int(rng.integers(k, 7))
            L = int(rng.integers(1, 4))
            code = NestedLatticeCode.random(q, n, k, float(rng.uniform(0.5, 10)), rng)
            messages = [packet(rng.integers(0, q, size=k), q) for _ in range(L)]
            a = [int(v) for v in rng.integers(-2, 3, size=L)]
            point = lattice_combine(code, [phi_map(code, w) for w in messages], a)
            expected = FieldVector.reduce(sum(c * w.payload.entries for c, w in zip(a, messages)), q)
            self.assertEqual(phi_inv(code, point).payload, expected)

    def test_sum_decoding_noiseless_exhaustive(self):
        """Test that every pair of messages decodes to its sum at equal gains."""
        code = small_code()
        for m1, m2 in itertools.product(range(3), repeat=2):
            y = phi_map(code, packet([m1], 3)).coords + phi_map(code, packet([m2], 3)).coords
            point = lattice_decode_point(code, y, 1.0, shift_weight=2)
            self.assertEqual(phi_inv(code, point), packet([(m1 + m2) % 3], 3))


class TestMmseAndRates(unittest.TestCase):

    def test_alpha_examples(self):
        """Test closed-form MMSE coefficients."""
        self.assertAlmostEqual(alpha_mmse_single(3.0, 1.0), 0.75)
        self.assertAlmostEqual(alpha_mmse_equal(1.0, 1.0), 2.0 / 3.0)
        self.assertAlmostEqual(alpha_mmse_cf((1, 1), (1, 1), 5.0, 1.0), alpha_mmse_equal(5.0, 1.0))
        self.assertAlmostEqual(alpha_mmse_cf((1, 0), (0, 1), 5.0, 1.0), 0.0)

    def test_alpha_minimizes_effective_noise(self):
        """Test the MMSE coefficient against a numerical minimization."""
        rng = derive_rng(17)
        for _ in range(20):
            h = rng.normal(size=2)
            a = rng.integers(-2, 3, size=2)
            if not np.any(a):
                continue
            P, sigma2 = float(rng.uniform(0.5, 20)), float(rng.uniform(0.2, 2))
            found = optimize.minimize_scalar(
                lambda alpha: n_effec(CfProblem(tuple(h), tuple(a), P, sigma2, alpha)).value
            )
            self.assertAlmostEqual(found.x, alpha_mmse_cf(h, a, P, sigma2), delta=1e-5)
        self.assertAlmostEqual(
            optimize.minimize_scalar(lambda alpha: n_effec(CfProblem((1.0,), (1,), 4.0, 1.0, alpha)).value).x,
            alpha_mmse_single(4.0, 1.0),
            delta=1e-5,
        )

    def test_effective_noise_examples(self):
        """Test effective noise at hand-computed points."""
        self.assertAlmostEqual(n_effec(CfProblem((1, 1), (0, 0), 4.0, 1.0, 0.0)).value, 0.0)
        self.assertAlmostEqual(n_effec(CfProblem((1, 1), (1, 1), 4.0, 2.0, 1.0)).value, 2.0)
        self.assertAlmostEqual(n_effec(CfProblem((0.5, 0.5), (1, 1), 4.0, 1.0, 2.0)).value, 4.0)
        self.assertAlmostEqual(n_effec_complex(CfProblem((1j,), (1,), 1.0, 1.0, -1j)).value, 1.0)
        with self.assertRaises(LatticeError):
            CfProblem((1, 1), (1,), 1.0, 1.0)
        with self.assertRaises(LatticeError):
            CfProblem((1,), (1,), 1.0, 0.0)

    def test_equal_gain_rate(self):
        """Test the equal-gain computation rate."""
        for P in (0.5, 1.0, 10.0, 100.0):
            self.assertAlmostEqual(comp_rate_real((1, 1), (1, 1), P, 1.0), 0.5 * math.log2(0.5 + P))
            self.assertAlmostEqual(comp_rate_complex((1, 1), (1, 1), P, 1.0), math.log2(0.5 + P))

    def test_rate_clamped_at_zero(self):
        """Test that a poor coefficient vector has rate zero."""
        self.assertEqual(comp_rate_real((1, 1), (2, -2), 1.0, 1.0), 0.0)
        with self.assertRaises(LatticeError):
            comp_rate_real((1, 1), (0, 0), 1.0, 1.0)

    def test_rate_matches_optimized_alpha(self):
        """Test the closed-form rate against a grid over alpha."""
        h, a, P = (1.2, 0.6), (2, 1), 10.0
        grid = np.linspace(0, 2, 20001)
        best = max(comp_rate_at_alpha(h, a, P, 1.0, alpha) for alpha in grid)
        self.assertAlmostEqual(best, comp_rate_real(h, a, P, 1.0), places=6)

    def test_unit_vector_is_interference_as_noise(self):
        """Test that decoding one message alone gives the interference-as-noise rate."""
        rng = derive_rng(18)
        for _ in range(1000):
            L = int(rng.integers(2, 4))
            h = rng.normal(size=L)
            P = float(rng.uniform(0.1, 100))
            m = int(rng.integers(1, L + 1))
            e = np.zeros(L, dtype=int)
            e[m - 1] = 1
            self.assertAlmostEqual(comp_rate_real(h, e, P, 1.0), interference_as_noise_rate(h, m, P, 1.0))
            hc = h + 1j * rng.normal(size=L)
            self.assertAlmostEqual(
                comp_rate_complex(hc, e, P, 1.0), interference_as_noise_rate(hc, m, P, 1.0, complex_channel=True)
            )

    def test_complex_rate_doubles_real(self):
        """Test that real-valued inputs give twice the real rate."""
        rng = derive_rng(19)
        for _ in range(100):
            h = rng.normal(size=2)
            a = rng.integers(1, 3, size=2)
            P = float(rng.uniform(0.5, 50))
            self.assertAlmostEqual(comp_rate_complex(h, a, P, 1.0), 2 * comp_rate_real(h, a, P, 1.0))

    def test_complex_alpha_is_a_minimum(self):
        """Test that no nearby complex alpha has lower effective noise."""
        rng = derive_rng(20)
        for _ in range(50):
            h = rng.normal(size=2) + 1j * rng.normal(size=2)
            a = (1 + 1j, 1)
            P = float(rng.uniform(1, 50))
            alpha = alpha_mmse_complex(h, a, P, 1.0)
            best = n_effec_complex(CfProblem(tuple(h), a, P, 1.0, alpha)).value
            for step in (1e-3 * np.exp(1j * t) for t in np.linspace(0, 2 * np.pi, 8, endpoint=False)):
                self.assertGreaterEqual(n_effec_complex(CfProblem(tuple(h), a, P, 1.0, alpha + step)).value, best)
            self.assertAlmostEqual(max(0.0, math.log2(P / best)), comp_rate_complex(h, a, P, 1.0))

    def test_alpha_rescaling(self):
        """Test R(c h, a, c^2 sigma2, alpha / c) = R(h, a, sigma2, alpha)."""
        rng = derive_rng(21)
        for _ in range(100):
            h = rng.normal(size=2)
            c = float(rng.uniform(0.2, 5))
            alpha = float(rng.uniform(0.1, 2))
            P = float(rng.uniform(0.5, 50))
            self.assertAlmostEqual(
                comp_rate_at_alpha(c * h, (1, 2), P, c * c, alpha / c), comp_rate_at_alpha(h, (1, 2), P, 1.0, alpha)
            )

    def test_interference_as_noise_index(self):
        """Test the 1-based message index."""
        self.assertAlmostEqual(interference_as_noise_rate((1, 0), 1, 3.0, 1.0), 1.0)
        with self.assertRaises(LatticeError):
            interference_as_noise_rate((1, 1), 3, 1.0, 1.0)
        m, rate = best_single_message_rate((0.2, 1.5, 0.1), 10.0, 1.0)
        self.assertEqual(m, 2)
        self.assertAlmostEqual(rate, interference_as_noise_rate((0.2, 1.5, 0.1), 2, 10.0, 1.0))


class TestBestCoefficients(unittest.TestCase):

    def test_equal_gains(self):
        """Test that equal gains pick the plain sum."""
        a, rate = best_coeffs((1, 1), 10.0, 1.0)
        self.assertEqual(a, (1, 1))
        self.assertAlmostEqual(rate, comp_rate_real((1, 1), (1, 1), 10.0, 1.0))

    def test_low_snr_picks_strongest_user(self):
        """Test that very low SNR decodes the strongest message alone."""
        a, _ = best_coeffs((0.3, 1.2), 1.0, 1e6)
        self.assertEqual(a, (0, 1))

    def test_matches_exhaustive_search(self):
        """Test the vectorized search against a direct loop."""
        rng = derive_rng(22)
        for _ in range(30):
            h = rng.normal(size=3)
            P = float(rng.uniform(0.5, 100))
            _, rate = best_coeffs(h, P, 1.0, search_radius=2)
            brute = max(
                comp_rate_real(h, a, P, 1.0)
                for a in itertools.product(range(-2, 3), repeat=3) if any(a)
            )
            self.assertAlmostEqual(rate, brute)

    def test_sign_canonical(self):
        """Test that the first nonzero coefficient is positive."""
        a, _ = best_coeffs((-1.0, 0.9), 50.0, 1.0)
        first = next(c for c in a if c)
        self.assertGreater(first, 0)

    def test_complex_channel(self):
        """Test the Gaussian-integer search on h = (1, j)."""
        a, rate = best_coeffs((1, 1j), 100.0, 1.0, complex_channel=True)
        self.assertEqual(a, (1 + 0j, 1j))
        self.assertAlmostEqual(rate, comp_rate_complex((1, 1j), a, 100.0, 1.0))

    def test_radius_must_be_positive(self):
        """Test that a zero search radius is rejected."""
        with self.assertRaises(LatticeError):
            best_coeffs((1, 1), 1.0, 1.0, search_radius=0)


class TestComplexReceiver(unittest.TestCase):

    def test_split_halves(self):
        """Test splitting a message into real and imaginary halves."""
        w = packet([1, 2, 3, 4], 5)
        re, im = split_complex_encode(w)
        self.assertEqual(re, packet([1, 2], 5))
        self.assertEqual(im, packet([3, 4], 5))
        self.assertEqual(split_complex_decode(re, im), w)
        with self.assertRaises(LatticeError):
            split_complex_encode(packet([1, 2, 3], 5))

    def test_multiply_by_j(self):
        """Test that a = j rotates the halves."""
        halves = [split_complex_encode(packet([1, 3], 5))]
        u_re, u_im = complex_combination(halves, [1j], 5)
        self.assertEqual(u_re, packet([2], 5))
        self.assertEqual(u_im, packet([1], 5))

    def test_shift_weights(self):
        """Test the centering offsets carried by each half."""
        self.assertEqual(complex_shift_weights([1j, 2]), (1, 3))
        self.assertEqual(complex_shift_weights([1 + 1j, 1 - 1j]), (2, 2))

    def test_noiseless_exhaustive(self):
        """Test complex decoding of every message pair without noise."""
        code = small_code()
        for a in ((1 + 1j, 1 - 1j), (1j, 2), (1, 0)):
            for m1, m2 in itertools.product(itertools.product(range(3), repeat=2), repeat=2):
                halves = [split_complex_encode(packet(m1, 3)), split_complex_encode(packet(m2, 3))]
                x = [phi_map(code, re).coords + 1j * phi_map(code, im).coords for re, im in halves]
                y = a[0] * x[0] + a[1] * x[1]
                decoded = cf_decode_complex(code, y, a, a, 2 * code.P, 1e-12)
                self.assertEqual(decoded, complex_combination(halves, a, 3))

    def test_full_rank_against_enumeration(self):
        """Test the Gaussian-integer rank test against injectivity of the map."""
        q = 5
        messages = list(itertools.product(range(q), repeat=4))
        for A, expected in (
            ([[1, 1j], [1j, 1]], True),
            ([[1, 1j], [1j, -1]], False),
            ([[1 + 1j, 1], [1, 1 - 1j]], True),
        ):
            images = set()
            for w1re, w1im, w2re, w2im in messages:
                halves = [(packet([w1re], q), packet([w1im], q)), (packet([w2re], q), packet([w2im], q))]
                out = []
                for row in A:
                    u_re, u_im = complex_combination(halves, row, q)
                    out += u_re.payload.to_list() + u_im.payload.to_list()
                images.add(tuple(out))
            self.assertEqual(len(images) == len(messages), expected)
            self.assertEqual(full_rank_complex(A, q), expected)

    def test_recover_from_two_equations(self):
        """Test recovering both full messages from two complex combinations."""
        q = 5
        A = [[1, 1j], [1j, 1]]
        w = [packet([1, 2, 3, 4], q), packet([0, 4, 4, 1], q)]
        halves = [split_complex_encode(p) for p in w]
        U = [complex_combination(halves, row, q) for row in A]
        recovered = recover_from_complex_equations(A, [u[0] for u in U], [u[1] for u in U], q)
        self.assertEqual(recovered, w)


class TestMonteCarlo(unittest.TestCase):

    rate = 2 * math.log2(5) / 8

    def test_cf_decode_noiseless(self):
        """Test the real receiver without noise."""
        code = NestedLatticeCode(lattice_generator(), 5.0)
        w1, w2 = packet([1, 2], 5), packet([4, 4], 5)
        y = 2 * phi_map(code, w1).coords + phi_map(code, w2).coords
        decoded = cf_decode(code, y, (2, 1), (2, 1), code.P, 1e-12)
        self.assertEqual(decoded, packet([1, 3], 5))

    def test_sum_decoding_with_margin(self):
        """Test equal-gain sum decoding 6 dB above the operating point."""
        P0 = optimize.brentq(lambda P: comp_rate_real((1, 1), (1, 1), P, 1.0) - self.rate, 1e-3, 1e4)
        code = NestedLatticeCode(lattice_generator(), P0 * 10 ** 0.6)
        error_rate, _ = cf_error_rate(code, (1.0, 1.0), (1, 1), 1.0, 10000, 99)
        self.assertLess(error_rate, 1e-2)

    def test_unequal_gains_with_margin(self):
        """Test decoding 2 w1 + w2 on h = (1, 0.5) about 6 dB above its operating point."""
        h = (1.0, 0.5)
        P0 = optimize.brentq(lambda P: comp_rate_real(h, (2, 1), P, 1.0) - self.rate, 1e-3, 1e4)
        P = P0 * 10 ** 0.6
        a, _ = best_coeffs(h, P, 1.0)
        self.assertEqual(a, (2, 1))
        error_rate, _ = cf_error_rate(NestedLatticeCode(lattice_generator(), P), h, a, 1.0, 10000, 98)
        self.assertLess(error_rate, 1e-2)

    def test_errors_fall_with_snr(self):
        """Test that error counts do not increase along a 2 dB grid with common seeds."""
        P0 = optimize.brentq(lambda P: comp_rate_real((1, 1), (1, 1), P, 1.0) - self.rate, 1e-3, 1e4)
        counts = []
        for margin_db in range(0, 12, 2):
            code = NestedLatticeCode(lattice_generator(), P0 * 10 ** (margin_db / 10))
            counts.append(cf_error_rate(code, (1.0, 1.0), (1, 1), 1.0, 1000, 7)[1])
        self.assertEqual(counts, sorted(counts, reverse=True))
        self.assertGreater(counts[0], counts[-1])

    def test_seed_reproducible(self):
        """Test that the same seed gives the same error count."""
        code = NestedLatticeCode(lattice_generator(), 2.0)
        self.assertEqual(
            cf_error_rate(code, (1.0, 1.0), (1, 1), 1.0, 200, 5),
            cf_error_rate(code, (1.0, 1.0), (1, 1), 1.0, 200, 5),
        )

    def test_complex_high_snr(self):
        """Test the complex receiver at high SNR."""
        h = (1.0, 0.8j)
        a, _ = best_coeffs(h, 2000.0, 1.0, complex_channel=True)
        code = NestedLatticeCode(lattice_generator(), 1000.0)
        error_rate, _ = cf_error_rate(code, h, a, 1.0, 200, 3, complex_channel=True)
        self.assertEqual(error_rate, 0.0)


if __name__ == '__main__':
    unittest.main()
