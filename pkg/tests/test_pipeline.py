import numpy as np
import pytest

from spreadid.model import (
    GridParams,
    SupportSet,
    pack_unknowns,
    random_spreading,
    random_support,
)
from spreadid.pipeline import (
    ReceivedSignal,
    add_noise,
    assemble_Z,
    discrete_zak,
    probe_samples,
    simulate,
)
from spreadid.probing import ProbingSequence, alltop, build_matrix, random_disc


def naive_simulate(sf, c):
    """Literal triple-loop evaluation of the sampled response formula."""
    g = sf.grid
    L, E = g.L, g.E
    EL, DL, EDL = g.delay_grid, g.doppler_grid, g.samples_total
    x = np.zeros(EL, complex)
    for k in range(L):
        x[E * k] = c.c[(-k) % L]
    y = np.zeros(EDL, complex)
    for n in range(EDL):
        acc = 0j
        for r in range(EL):
            xv = x[(n - r) % EL]
            if xv == 0:
                continue
            for l in range(DL):
                acc += sf.samples[r, l] * xv * np.exp(2j * np.pi * l * n / EDL)
        y[n] = acc / EDL
    return y


def random_instance(L, E, D, card, seed):
    rng = np.random.default_rng(seed)
    g = GridParams(L=L, E=E, D=D, require_prime_L=False)
    sup = random_support(g, card, rng)
    sf = random_spreading(g, sup, rng)
    c = random_disc(L, rng)
    return g, sf, c


class TestProbeSamples:
    def test_E1_L3(self):
        g = GridParams(L=3, E=1, D=1)
        c = ProbingSequence(c=np.array([1.0, 2.0, 3.0], complex))
        np.testing.assert_array_equal(probe_samples(c, g), [1.0, 3.0, 2.0])

    def test_E2_L2(self):
        g = GridParams(L=2, E=2, D=1)
        c = ProbingSequence(c=np.array([1.0, 2.0], complex))
        np.testing.assert_array_equal(probe_samples(c, g), [1.0, 0.0, 2.0, 0.0])

    def test_exactly_L_nonzeros(self):
        g = GridParams(L=7, E=3, D=2)
        x = probe_samples(random_disc(7, np.random.default_rng(0)), g)
        assert np.count_nonzero(x) == 7


class TestSimulate:
    def test_zero_spreading(self):
        g, sf, c = random_instance(5, 2, 2, 0, seed=1)
        assert not np.any(simulate(sf, c).y)

    def test_single_sample_closed_form(self):
        # E = D = 1, one active cell (k, m):
        # y[n] = (1/L) * s * c[(k - n) mod L] * exp(j 2 pi m n / L)
        L = 5
        g = GridParams(L=L, E=1, D=1)
        rng = np.random.default_rng(2)
        c = random_disc(L, rng)
        for k in range(L):
            for m in range(L):
                samples = np.zeros((L, L), complex)
                s_val = rng.standard_normal() + 1j * rng.standard_normal()
                samples[k, m] = s_val
                from spreadid.model import DiscreteSpreadingFunction

                sf = DiscreteSpreadingFunction(
                    grid=g, samples=samples, support=SupportSet(L, frozenset({(k, m)}))
                )
                y = simulate(sf, c).y
                n = np.arange(L)
                expect = s_val * c.c[(k - n) % L] * np.exp(2j * np.pi * m * n / L) / L
                np.testing.assert_allclose(y, expect, atol=1e-14)

    def test_linearity(self):
        g = GridParams(L=5, E=2, D=2)
        rng = np.random.default_rng(3)
        c = random_disc(5, rng)
        sup = SupportSet.full(5)
        sf1 = random_spreading(g, sup, rng)
        sf2 = random_spreading(g, sup, rng)
        from spreadid.model import DiscreteSpreadingFunction

        sf_sum = DiscreteSpreadingFunction(
            grid=g, samples=sf1.samples + sf2.samples, support=sup
        )
        lhs = simulate(sf_sum, c).y
        rhs = simulate(sf1, c).y + simulate(sf2, c).y
        assert np.linalg.norm(lhs - rhs) <= 1e-12 * np.linalg.norm(rhs)

    @pytest.mark.parametrize("L,E,D", [(3, 1, 1), (3, 2, 2), (5, 3, 2), (7, 1, 4)])
    def test_against_naive_oracle(self, L, E, D):
        g, sf, c = random_instance(L, E, D, card=min(L * L, 6), seed=L * 100 + E * 10 + D)
        fast = simulate(sf, c).y
        ref = naive_simulate(sf, c)
        assert np.abs(fast - ref).max() <= 1e-12 * np.abs(ref).max()

    def test_dimension_mismatch(self):
        g, sf, _ = random_instance(5, 1, 1, 2, seed=4)
        with pytest.raises(ValueError):
            simulate(sf, random_disc(7, np.random.default_rng(0)))


class TestAddNoise:
    def test_infinite_snr(self):
        g, sf, c = random_instance(5, 2, 2, 3, seed=5)
        y = simulate(sf, c)
        out = add_noise(y, float("inf"), np.random.default_rng(0))
        np.testing.assert_array_equal(out.y, y.y)
        assert out.noise_meta.noise_power == 0.0

    def test_zero_db_power(self):
        rng = np.random.default_rng(6)
        g = GridParams(L=5, E=2, D=1)
        y = ReceivedSignal(grid=g, y=np.ones(10, complex))
        # aggregate over many draws: noise power ~ signal power within 5%
        total = 0.0
        n_rep = 2000
        for _ in range(n_rep):
            noisy = add_noise(y, 0.0, rng)
            total += np.mean(np.abs(noisy.y - y.y) ** 2)
        assert total / n_rep == pytest.approx(1.0, rel=0.05)

    def test_determinism(self):
        g, sf, c = random_instance(5, 2, 2, 3, seed=7)
        y = simulate(sf, c)
        a = add_noise(y, 10.0, np.random.default_rng(8))
        b = add_noise(y, 10.0, np.random.default_rng(8))
        np.testing.assert_array_equal(a.y, b.y)

    def test_zero_signal_rejected(self):
        g = GridParams(L=5, E=1, D=1)
        y = ReceivedSignal(grid=g, y=np.zeros(5, complex))
        with pytest.raises(ValueError):
            add_noise(y, 20.0, np.random.default_rng(0))


class TestDiscreteZak:
    def test_D1_identity(self):
        g, sf, c = random_instance(5, 2, 1, 4, seed=9)
        y = simulate(sf, c)
        zak = discrete_zak(y)
        assert zak.shape == (10, 1)
        np.testing.assert_allclose(zak[:, 0], y.y, atol=1e-15)

    def test_hand_case(self):
        # E*L = 2, D = 2, y = (1, 0, 0, 0):
        # Z[0, r] = 1/2 for both r; Z[1, r] = 0.
        g = GridParams(L=2, E=1, D=2)
        y = ReceivedSignal(grid=g, y=np.array([1.0, 0.0, 0.0, 0.0], complex))
        zak = discrete_zak(y)
        np.testing.assert_allclose(zak[0], [0.5, 0.5], atol=1e-15)
        np.testing.assert_allclose(zak[1], [0.0, 0.0], atol=1e-15)

    def test_isometry(self):
        for seed, (L, E, D) in enumerate([(3, 2, 4), (5, 1, 3), (7, 2, 2)]):
            g, sf, c = random_instance(L, E, D, card=5, seed=10 + seed)
            y = simulate(sf, c)
            zak = discrete_zak(y)
            lhs = g.D * np.sum(np.abs(zak) ** 2)
            rhs = np.sum(np.abs(y.y) ** 2)
            assert lhs == pytest.approx(rhs, rel=1e-12)

    def test_length_mismatch(self):
        g = GridParams(L=5, E=1, D=2)
        with pytest.raises(ValueError):
            ReceivedSignal(grid=g, y=np.zeros(7, complex))


class TestAssembleZ:
    def test_zero(self):
        g = GridParams(L=3, E=2, D=2)
        Z = assemble_Z(np.zeros((6, 2), complex), g)
        assert not np.any(Z.Z)

    def test_r0_block_is_strided_read(self):
        # phase factor is exp(0) = 1 on the r = 0 columns
        g, sf, c = random_instance(5, 2, 3, 4, seed=13)
        y = simulate(sf, c)
        zak = discrete_zak(y)
        Z = assemble_Z(zak, g).Z
        for p in range(5):
            for n in range(2):
                expect = zak[n + 2 * p, 0] * g.samples_total
                assert Z[p, n * 3 + 0] == pytest.approx(expect)

    def test_factorization_identity(self):
        for seed, (L, E, D) in enumerate([(3, 1, 2), (5, 2, 2), (7, 4, 1)]):
            g, sf, c = random_instance(L, E, D, card=min(L * L, 8), seed=20 + seed)
            Z = assemble_Z(discrete_zak(simulate(sf, c)), g).Z
            ref = build_matrix(c).A @ pack_unknowns(sf).S
            assert np.linalg.norm(Z - ref) <= 1e-9 * np.linalg.norm(ref)

    def test_alltop_factorization(self):
        g = GridParams(L=7, E=2, D=2)
        rng = np.random.default_rng(30)
        sup = random_support(g, 5, rng)
        sf = random_spreading(g, sup, rng)
        c = alltop(7)
        Z = assemble_Z(discrete_zak(simulate(sf, c)), g).Z
        ref = build_matrix(c).A @ pack_unknowns(sf).S
        assert np.linalg.norm(Z - ref) <= 1e-9 * np.linalg.norm(ref)

    def test_noise_linearity(self):
        # Z(noisy) - Z(clean) equals the assembled transform of the noise.
        g, sf, c = random_instance(5, 2, 2, 4, seed=31)
        clean = simulate(sf, c)
        noisy = add_noise(clean, 10.0, np.random.default_rng(32))
        Z_clean = assemble_Z(discrete_zak(clean), g).Z
        Z_noisy = assemble_Z(discrete_zak(noisy), g).Z
        noise_only = ReceivedSignal(grid=g, y=noisy.y - clean.y)
        Z_noise = assemble_Z(discrete_zak(noise_only), g).Z
        diff = Z_noisy - Z_clean
        assert np.linalg.norm(diff - Z_noise) <= 1e-12 * np.linalg.norm(Z_noise)

    def test_shape_validation(self):
        g = GridParams(L=3, E=2, D=2)
        with pytest.raises(ValueError):
            assemble_Z(np.zeros((5, 2), complex), g)
