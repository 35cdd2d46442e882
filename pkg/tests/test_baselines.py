import numpy as np
import pytest

from clsklab import baselines as bl


@pytest.fixture(scope="module")
def sources():
    return bl.chaotic_sources(4000, seed=1)


def test_sources_are_distinct_chaotic_orbits(sources):
    x, y = sources
    assert len(x) == len(y) == 4000
    assert np.std(x) > 1.0 and np.std(y) > 1.0
    assert np.corrcoef(x, y)[0, 1] < 0.5


def test_csk_all_zero_bits(sources):
    x, y = sources
    s = bl.csk_modulate([0] * 5, x, y, 20)
    np.testing.assert_array_equal(s.samples, x[:100])


def test_csk_segments_follow_bits(sources):
    x, y = sources
    bits = [0, 1, 1, 0, 1]
    s = bl.csk_modulate(bits, x, y, 20)
    for k, b in enumerate(bits):
        seg = s.samples[20 * k : 20 * (k + 1)]
        src = (x if b == 0 else y)[20 * k : 20 * (k + 1)]
        for a, c in zip(seg, src):
            assert a == c


def test_csk_insufficient_source(sources):
    x, y = sources
    with pytest.raises(ValueError):
        bl.csk_modulate([0] * 300, x, y, 20)


def test_csk_noise_free_error_free(sources):
    x, y = sources
    bits = np.random.default_rng(0).integers(0, 2, 150)
    s = bl.csk_modulate(bits, x, y, 20)
    np.testing.assert_array_equal(bl.csk_demodulate(s, x, y, 20), bits)


def test_csk_sign_flip(sources):
    x, _ = sources
    y = -x
    bits = np.random.default_rng(1).integers(0, 2, 100)
    s = bl.csk_modulate(bits, x, y, 20)
    flipped = bl.csk_demodulate(-s.samples, x, y, 20)
    np.testing.assert_array_equal(flipped, 1 - bits)


def test_dcsk_construction_and_noise_free(sources):
    x, _ = sources
    bits = np.random.default_rng(2).integers(0, 2, 100)
    s = bl.dcsk_modulate(bits, x, 40)
    sym = s.symbols()
    for k, b in enumerate(bits):
        ref, data = sym[k, :20], sym[k, 20:]
        np.testing.assert_array_equal(data, ref if b == 0 else -ref)
    np.testing.assert_array_equal(bl.dcsk_demodulate(s, 40), bits)
    with pytest.raises(ValueError):
        bl.dcsk_modulate(bits, x, 41)
    with pytest.raises(ValueError):
        bl.dcsk_demodulate(s.samples, 41)


def test_signal_length_invariant():
    with pytest.raises(ValueError):
        bl.BasebandSignal(np.zeros(10), 1.0, 3)


def test_awgn_infinite_snr_is_identity(sources):
    x, y = sources
    s = bl.csk_modulate([0, 1], x, y, 20)
    np.testing.assert_array_equal(bl.awgn(s, np.inf, 0).samples, s.samples)


def test_awgn_variance():
    rng = np.random.default_rng(3)
    s = bl.BasebandSignal(rng.choice([-1.0, 1.0], 1_000_000), 1.0, 10)
    eb = bl.bit_energy(s)
    assert eb == pytest.approx(10.0)
    noisy = bl.awgn(s, 6.0, rng)
    want = bl.noise_variance(eb, 6.0)
    assert np.var(noisy.samples - s.samples) == pytest.approx(want, rel=0.02)


def test_bit_energy_definition(sources):
    x, y = sources
    s = bl.csk_modulate([0, 1, 1], x, y, 20)
    assert bl.bit_energy(s) == pytest.approx(np.mean([np.sum(seg ** 2) for seg in s.symbols()]))


def test_fit_curve():
    assert bl.FIT_COEFFS == (-0.5354, 7.2835, -25.05)
    a, b, c = bl.FIT_COEFFS
    vertex = -b / (2 * a)
    assert vertex == pytest.approx(6.8, abs=0.05)
    xs = np.linspace(vertex, 20, 200)
    assert np.all(np.diff(bl.fit_curve(xs)) <= 0)
    assert bl.fit_curve(10.0) == pytest.approx(10 ** (a * 100 + b * 10 + c))
    assert np.all(bl.fit_curve(np.linspace(-5, 20, 100)) <= 1.0)
    assert bl.fit_vertex() == pytest.approx(vertex)


def test_crossover_with_curve():
    line = lambda x: 10.0 ** (-np.asarray(x, dtype=float))  # noqa: E731
    grid = np.arange(0.0, 11.0)
    pe = np.full(grid.shape, 1e-8)
    # on the searched branch the line drops below 1e-8 exactly at x = 8
    assert bl.crossover(grid, pe, 10**9, curve=line) == pytest.approx(8.0, abs=1e-2)
    assert bl.crossover(grid, np.full(grid.shape, 1e-12), 10**13, curve=line) is None


def test_crossover_floors_zero_counts():
    grid = np.array([7.0, 9.0, 11.0])
    # zero errors count as half an error out of 100 bits
    x = bl.crossover(grid, np.zeros(3), 100)
    assert bl.fit_curve(x) == pytest.approx(0.005, rel=1e-2)
    with pytest.raises(ValueError):
        bl.crossover([1.0], [0.1], 100)


def test_simulate_ber_deterministic():
    a = bl.simulate_ber("csk", [0.0, 6.0], 300, 20, seed=4)
    b = bl.simulate_ber("csk", [0.0, 6.0], 300, 20, seed=4)
    np.testing.assert_array_equal(a, b)
    with pytest.raises(ValueError):
        bl.simulate_ber("fsk", [0.0], 100, 20)


def test_dcsk_worse_than_csk_at_10db():
    csk = bl.simulate_ber("csk", [10.0], 2000, 100, seed=0)[0]
    dcsk = bl.simulate_ber("dcsk", [10.0], 2000, 100, seed=0)[0]
    assert dcsk > csk
