import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mdising.anneal import AnnealParams
from mdising.errors import BudgetError
from mdising.hardware import COBI
from mdising.ising import absorb_linear_terms, brute_force_ground_state, energy
from mdising.mimo import (
    CONSTELLATIONS,
    MimoInstance,
    PipelineConfig,
    ber,
    detect,
    device_to_bits,
    generate_instance,
    get_constellation,
    instance_from_json,
    instance_to_json,
    mld_oracle,
    mld_to_ising,
)
from mdising.multidigit import MultiDigitConfig, map_problem
from mdising.ising import normalize

EXACT = AnnealParams()


def residual(inst, enc, s):
    H_r = np.block([[inst.H.real, -inst.H.imag], [inst.H.imag, inst.H.real]])
    y_r = np.concatenate([inst.y.real, inst.y.imag])
    r = y_r - H_r @ enc.D @ s
    return float(r @ r)


class TestConstellation:
    def test_amplitudes(self):
        assert list(get_constellation("16-QAM").amplitudes) == [-3, -1, 1, 3]
        assert list(get_constellation("4-QAM").amplitudes) == [-1, 1]
        assert list(get_constellation("BPSK").amplitudes) == [-1, 1]
        assert not get_constellation("BPSK").complex_valued

    def test_bits_per_symbol(self):
        assert [CONSTELLATIONS[k].bits_per_symbol for k in ("BPSK", "4-QAM", "16-QAM")] == [1, 2, 4]

    @pytest.mark.parametrize("name", sorted(CONSTELLATIONS))
    def test_labeling_bijective(self, name):
        c = CONSTELLATIONS[name]
        syms = c.symbols
        assert len(set(syms.tolist())) == syms.shape[0] == 2**c.bits_per_symbol
        bits = np.array(list(itertools.product((0, 1), repeat=c.bits_per_symbol)), dtype=np.uint8)
        for b in bits:
            x = c.modulate(b)
            u = np.array([x.real[0], x.imag[0]]) if c.complex_valued else x.real
            assert np.array_equal(c.demodulate(np.rint(u).astype(int)), b)

    def test_gray_neighbours_differ_by_one_bit(self):
        c = CONSTELLATIONS["16-QAM"]
        labels = [c.demodulate(np.array([a])) for a in (-3, -1, 1, 3)]
        for a, b in zip(labels, labels[1:]):
            assert np.count_nonzero(a != b) == 1

    def test_aliases_and_unknown(self):
        assert get_constellation("qpsk").name == "4-QAM"
        with pytest.raises(ValueError):
            get_constellation("64-QAM")


class TestGenerate:
    def test_noiseless(self):
        inst = generate_instance(3, 4, "16-QAM", 0.0, seed=1)
        np.testing.assert_array_equal(inst.y, inst.H @ inst.x)

    def test_deterministic(self):
        a, b = generate_instance(2, 2, seed=5), generate_instance(2, 2, seed=5)
        assert instance_to_json(a) == instance_to_json(b)

    def test_bit_count(self):
        assert generate_instance(2, 2, "16-QAM", seed=0).tx_bits.shape == (8,)

    def test_symbols_in_alphabet(self):
        inst = generate_instance(4, 4, "16-QAM", seed=2)
        assert set(inst.x.tolist()) <= set(inst.constellation.symbols.tolist())

    def test_noise(self):
        inst = generate_instance(2, 2, "4-QAM", 0.5, seed=3)
        assert not np.allclose(inst.y, inst.H @ inst.x)

    @pytest.mark.parametrize("args", [(0, 1), (1, 0)])
    def test_bad_antennas(self, args):
        with pytest.raises(ValueError):
            generate_instance(*args)

    def test_json_roundtrip(self):
        inst = generate_instance(2, 3, "16-QAM", 0.1, seed=9)
        back = instance_from_json(instance_to_json(inst))
        np.testing.assert_array_equal(back.H, inst.H)
        np.testing.assert_array_equal(back.y, inst.y)
        np.testing.assert_array_equal(back.tx_bits, inst.tx_bits)
        assert back.constellation == inst.constellation
        assert instance_to_json(back) == instance_to_json(inst)


class TestTransform:
    @pytest.mark.parametrize(
        "sa,sb,u", [(1, 1, 3), (1, -1, 1), (-1, 1, -1), (-1, -1, -3)]
    )
    def test_16qam_spin_table(self, sa, sb, u):
        inst = generate_instance(1, 1, "16-QAM", seed=0)
        _, enc = mld_to_ising(inst)
        # Spin order: 2*s_a for (re, im), then s_b for (re, im).
        amp = enc.spins_to_real([sa, sa, sb, sb])
        assert list(amp) == [u, u]

    def test_bpsk_scalar(self):
        const = get_constellation("BPSK")
        inst = MimoInstance(
            1, 1, np.array([[1.0 + 0j]]), np.array([1.0 + 0j]), np.array([1.0 + 0j]),
            0.0, np.array([1], dtype=np.uint8), const,
        )
        problem, _ = mld_to_ising(inst)
        assert problem.n == 1
        s, _ = brute_force_ground_state(problem)
        assert list(s) == [1]

    @pytest.mark.parametrize("seed", range(3))
    def test_residual_identity_all_configs(self, seed):
        inst = generate_instance(2, 2, "16-QAM", 0.2, seed=seed)
        problem, enc = mld_to_ising(inst)
        assert problem.n == 8
        for s in itertools.product((1, -1), repeat=8):
            s = np.array(s)
            want = residual(inst, enc, s)
            got = energy(problem, s) + enc.constant
            assert abs(got - want) <= 1e-9 * max(1.0, abs(want))

    def test_symbols_roundtrip(self):
        inst = generate_instance(3, 3, "16-QAM", seed=4)
        _, enc = mld_to_ising(inst)
        s = enc.symbols_to_spins(inst.x)
        np.testing.assert_array_equal(enc.spins_to_symbols(s), inst.x)
        np.testing.assert_array_equal(enc.spins_to_bits(s), inst.tx_bits)


class TestOracle:
    @pytest.mark.parametrize("seed", range(5))
    def test_noiseless_recovery(self, seed):
        inst = generate_instance(2, 2, "16-QAM", seed=seed)
        x, bits = mld_oracle(inst)
        np.testing.assert_allclose(x, inst.x)
        assert ber(inst.tx_bits, bits) == 0

    @pytest.mark.parametrize("seed", range(4))
    def test_agrees_with_ising_ground_state(self, seed):
        inst = generate_instance(2, 2, "16-QAM", 0.5, seed=seed)
        _, bits = mld_oracle(inst)
        problem, enc = mld_to_ising(inst)
        flat, a = absorb_linear_terms(problem)
        s, _ = brute_force_ground_state(flat)
        if s[a] < 0:
            s = -s
        np.testing.assert_array_equal(enc.spins_to_bits(s[: problem.n]), bits)

    def test_scale_invariance(self):
        inst = generate_instance(2, 2, "16-QAM", 1.0, seed=6)
        scaled = MimoInstance(
            inst.n_t, inst.n_r, 2 * inst.H, inst.x, 2 * inst.y, inst.noise_variance,
            inst.tx_bits, inst.constellation,
        )
        assert np.array_equal(mld_oracle(inst)[1], mld_oracle(scaled)[1])

    def test_budget(self):
        inst = generate_instance(5, 5, "16-QAM", seed=0)
        with pytest.raises(BudgetError):
            mld_oracle(inst)


class TestDetect:
    @pytest.mark.parametrize("seed", range(5))
    def test_float_path_is_exact(self, seed):
        inst = generate_instance(2, 2, "16-QAM", seed=seed)
        d = detect(inst, PipelineConfig("float"))
        assert ber(inst.tx_bits, d.bits) == 0
        assert d.coherence_violations == 0

    def test_float_matches_oracle_with_noise(self):
        for seed in range(5):
            inst = generate_instance(2, 2, "16-QAM", 1.0, seed=seed)
            d = detect(inst, PipelineConfig("float"))
            assert np.array_equal(d.bits, mld_oracle(inst)[1])

    def test_native_degenerates_where_multidigit_recovers(self):
        # On this channel the weak couplings round away natively.
        inst = generate_instance(2, 2, "4-QAM", 0.0, seed=7)
        native = detect(inst, PipelineConfig("native", exact=True))
        lifted = detect(inst, PipelineConfig(MultiDigitConfig(3, 3), exact=True))
        assert ber(inst.tx_bits, native.bits) > 0
        assert ber(inst.tx_bits, lifted.bits) == 0
        assert lifted.spins_used == 5 * 4

    def test_diagnostics(self):
        inst = generate_instance(2, 2, "16-QAM", seed=1)
        d = detect(inst, PipelineConfig(MultiDigitConfig(3, 5), anneal=AnnealParams(n_anneals=5, sweeps_per_anneal=50)))
        assert d.spins_used == 54
        assert d.bits.shape == (8,)
        assert isinstance(d.coherence_violations, int)

    def test_budget_propagates(self):
        inst = generate_instance(2, 2, "16-QAM", seed=1)
        with pytest.raises(BudgetError, match="81"):
            detect(inst, PipelineConfig(MultiDigitConfig(3, 8)))

    @pytest.mark.parametrize("seed", range(3))
    def test_gauge_flip(self, seed):
        inst = generate_instance(2, 2, "16-QAM", seed=seed)
        problem, enc = mld_to_ising(inst)
        flat, a = absorb_linear_terms(normalize(problem)[0])
        program, plan = map_problem(flat, COBI, MultiDigitConfig(3, 3))
        rng = np.random.default_rng(seed)
        dev = rng.choice(np.array([-1, 1], dtype=np.int8), size=program.n_spins)
        b1, _ = device_to_bits(dev, plan, a, enc, problem.n)
        b2, _ = device_to_bits(-dev, plan, a, enc, problem.n)
        np.testing.assert_array_equal(b1, b2)

    def test_bad_mapping(self):
        with pytest.raises(ValueError):
            PipelineConfig("double")


class TestBer:
    def test_examples(self):
        a = np.array([0, 1, 1, 0, 1, 0, 0, 1])
        assert ber(a, a) == 0.0
        assert ber(a, 1 - a) == 1.0
        b = a.copy()
        b[[1, 6]] ^= 1
        assert ber(a, b) == 0.25

    def test_mismatch(self):
        with pytest.raises(ValueError):
            ber([0, 1], [0, 1, 1])

    @given(st.lists(st.integers(0, 1), min_size=1, max_size=64), st.data())
    @settings(max_examples=50, deadline=None)
    def test_range(self, tx, data):
        rx = data.draw(st.lists(st.integers(0, 1), min_size=len(tx), max_size=len(tx)))
        v = ber(tx, rx)
        assert 0.0 <= v <= 1.0
        assert v == ber(rx, tx)
