import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import all_configs, random_problem
from oracles import oracle_factorize
from mdising.errors import BoundError, BudgetError, NormalizationError
from mdising.hardware import COBI, DeviceProgram, HardwareProfile, program_energy, validate
from mdising.ising import IsingProblem, absorb_linear_terms, normalize
from mdising.mimo import generate_instance, mld_to_ising
from mdising.multidigit import (
    MappingPlan,
    MultiDigitConfig,
    coherence_violations,
    coherent_extend,
    decode,
    digit_decompose_2,
    digit_decompose_3,
    effective_range,
    factorize_min_copies,
    lifted_quantize,
    map_problem,
    map_three_digit,
    map_two_digit,
    read_plan,
    write_plan,
)


def edge_problem(total, n=2):
    """Two-spin problem whose (0, 1) pair coupling is ``total``."""
    J = np.zeros((n, n))
    J[0, 1] = J[1, 0] = total / 2
    return IsingProblem(J)


def exact_edge(t, m_q):
    """Problem that quantizes to K'_01 == K'_10 == t."""
    return edge_problem(2 * t / m_q)


def mimo_flat(n_t, seed):
    p, _ = mld_to_ising(generate_instance(n_t, n_t, "16-QAM", 0.0, seed))
    flat, _ = absorb_linear_terms(normalize(p)[0])
    return flat


class TestRange:
    def test_three_digit(self):
        assert effective_range(3, 8) == 511
        assert effective_range(3, 5) == 124

    def test_two_digit(self):
        assert effective_range(2, 8) == 63
        assert effective_range(2, 5) == 24

    def test_lifted_quantize_half(self):
        K = lifted_quantize(edge_problem(1.0), 511)
        assert (K[0, 1], K[1, 0]) == (256, 255)

    @pytest.mark.parametrize("m_q", [124, 63])
    def test_lifted_range(self, m_q):
        assert lifted_quantize(edge_problem(2.0), m_q)[0, 1] == m_q
        assert lifted_quantize(edge_problem(-2.0), m_q)[1, 0] == -m_q

    def test_unnormalized_rejected(self):
        with pytest.raises(NormalizationError):
            lifted_quantize(edge_problem(2.01), 124)


class TestDigits:
    def test_base8(self):
        assert digit_decompose_3(403, 8) == (6, 2, 3)

    def test_zero(self):
        assert digit_decompose_3(0, 8) == (0, 0, 0)

    def test_extremal(self):
        assert digit_decompose_3(-511, 8) == (-7, -7, -7)

    def test_out_of_range(self):
        with pytest.raises(ValueError):
            digit_decompose_3(512, 8)
        with pytest.raises(ValueError):
            digit_decompose_2(64, 8)

    @pytest.mark.parametrize("q", [2, 3, 5, 8])
    def test_two_digit_all(self, q):
        for t in range(-effective_range(2, q), effective_range(2, q) + 1):
            f, g = digit_decompose_2(t, q)
            assert q * f + g == t
            assert abs(f) <= q - 1 and abs(g) <= q - 1
            assert f * t >= 0 and g * t >= 0


class TestFactorize:
    def test_formulation_b_wins(self):
        fac = factorize_min_copies(5, 8, 7, g=5)
        assert fac == ("B", 5, 3, 3, 0)
        assert oracle_factorize(5, 5, 8, 7) == tuple(fac)

    def test_formulation_a_needs_four_copies(self):
        # Neither 40 = q*5 factors with max(beta, gamma) < 4 under |alpha| <= 7.
        from mdising.multidigit import _best_triple

        alpha, beta, gamma = _best_triple(40, 7)
        assert max(beta, gamma) == 4 and alpha * beta * gamma == 40

    @pytest.mark.parametrize("q", [2, 3, 5, 7])
    def test_unit_digit_single_copy(self, q):
        assert factorize_min_copies(1, q, 7) == ("A", q, 1, 1, 0)

    def test_negative_sign_on_alpha(self):
        fac = factorize_min_copies(-3, 8, 7, g=-2)
        assert fac == oracle_factorize(-3, -2, 8, 7)
        assert fac.alpha < 0 and fac.beta >= 1 and fac.gamma >= 1
        assert fac.alpha * fac.beta * fac.gamma + fac.residual == 8 * -3 - 2

    def test_zero_rejected(self):
        with pytest.raises(ValueError):
            factorize_min_copies(0, 8, 7)

    @pytest.mark.parametrize("q", range(2, 9))
    def test_matches_oracle_cobi(self, q):
        for f in range(-(q - 1), q):
            if f == 0:
                continue
            for g in range(0, q):
                g = g if f > 0 else -g
                assert tuple(factorize_min_copies(f, q, 7, g)) == oracle_factorize(f, g, q, 7)


class TestThreeDigit:
    def test_ferromagnetic_pair_q2(self):
        p = edge_problem(1.0)
        prog, plan = map_three_digit(p, COBI, MultiDigitConfig(3, 2, 7))
        assert prog.n_spins == 6
        kq = plan.quantized
        # Penalty constant: weight on every ordered pair inside each group.
        const = -7 * 2 * (3 * 2)
        for s in all_configs(2):
            e = program_energy(prog, coherent_extend(s, plan))
            assert e == -(kq[0, 1] + kq[1, 0]) * s[0] * s[1] + const
        # Ground state over all 64 device configs is coherent and aligned.
        best = min(all_configs(6), key=lambda c: program_energy(prog, c))
        assert coherence_violations(best, plan) == 0
        assert list(decode(best, plan)) == [1, 1]

    def test_edgeless(self):
        prog, plan = map_three_digit(IsingProblem(np.zeros((1, 1))), COBI, MultiDigitConfig(3, 3))
        assert prog.n_spins == 4
        K = prog.K.copy()
        np.fill_diagonal(K, 7)
        assert np.all(K == 7)

    def test_mimo_2x2_fits_cobi(self):
        flat = mimo_flat(2, seed=3)
        assert flat.n == 9
        prog, plan = map_three_digit(flat, COBI, MultiDigitConfig(3, 5))
        assert prog.n_spins == 54 == plan.n_device
        assert validate(prog, COBI) == []

    def test_mimo_2x2_q8_rejected(self):
        with pytest.raises(BudgetError, match="81"):
            map_three_digit(mimo_flat(2, seed=3), COBI, MultiDigitConfig(3, 8))

    def test_digit_terms_recorded(self):
        prog, plan = map_three_digit(exact_edge(403, 511), HardwareProfile(7, 100), MultiDigitConfig(3, 8))
        assert plan.edge_terms["0,1"] == {"a": 6, "b": 2, "c": 3}

    @pytest.mark.parametrize("q", [2, 3, 5, 8])
    def test_every_level_representable(self, q):
        m_q = effective_range(3, q)
        prof = HardwareProfile(max(q - 1, 1), 100)
        for t in range(-m_q, m_q + 1):
            prog, plan = map_three_digit(exact_edge(t, m_q), prof, MultiDigitConfig(3, q, 1))
            assert plan.quantized[0, 1] == plan.quantized[1, 0] == t
            same = program_energy(prog, coherent_extend([1, 1], plan))
            diff = program_energy(prog, coherent_extend([1, -1], plan))
            assert diff - same == 2 * 2 * t


class TestTwoDigit:
    def test_single_edge_45(self):
        prog, plan = map_two_digit(exact_edge(45, 63), COBI, MultiDigitConfig(2, 8))
        assert plan.quantized[0, 1] == 45
        assert plan.edge_terms["0,1"] == {
            "formulation": "B", "alpha": 5, "beta": 3, "gamma": 3, "residual": 0,
        }
        assert prog.n_spins == 6
        assert [len(g) for g in plan.groups] == [3, 3]

    def test_single_digit_edge_is_direct(self):
        prog, plan = map_two_digit(exact_edge(5, 63), COBI, MultiDigitConfig(2, 8))
        assert prog.n_spins == 2
        assert (prog.K[0, 1], prog.K[1, 0]) == (5, 5)
        prog, plan = map_two_digit(edge_problem(2 * 4.5 / 63), COBI, MultiDigitConfig(2, 8))
        assert (prog.K[0, 1], prog.K[1, 0]) == (5, 4)

    def test_mimo_3x3_fits_cobi(self):
        for seed in range(30):
            flat = mimo_flat(3, seed)
            assert flat.n == 13
            prog, plan = map_two_digit(flat, COBI, MultiDigitConfig(2, 8))
            assert prog.n_spins <= 59
            assert validate(prog, COBI) == []

    def test_budget_error_names_counts(self):
        tiny = HardwareProfile(7, 4)
        with pytest.raises(BudgetError, match="needs 6 device spins.*allows 4"):
            map_two_digit(exact_edge(45, 63), tiny, MultiDigitConfig(2, 8))

    @pytest.mark.parametrize("q", [2, 3, 5, 8])
    def test_every_level_representable(self, q):
        m_q = effective_range(2, q)
        for t in range(-m_q, m_q + 1):
            prog, plan = map_two_digit(exact_edge(t, m_q), COBI, MultiDigitConfig(2, q))
            same = program_energy(prog, coherent_extend([1, 1], plan))
            diff = program_energy(prog, coherent_extend([1, -1], plan))
            assert diff - same == 2 * 2 * t

    @pytest.mark.parametrize("q", range(2, 9))
    def test_residual_spill_costs_at_most_one_replica(self, q):
        # When alpha already fills the original pair's slots (e.g. q=3,
        # K'=-8 -> alpha=-6, residual=-2) one extra replica opens room.
        m_q = effective_range(2, q)
        for t in range(-m_q, m_q + 1):
            for half in (0.0, 0.5):
                x = t - half
                if abs(x) > m_q:
                    continue
                prog, plan = map_two_digit(edge_problem(2 * x / m_q), COBI, MultiDigitConfig(2, q))
                need = [1, 1]
                for key, term in plan.edge_terms.items():
                    if term["formulation"] == "direct":
                        continue
                    i, j = map(int, key.split(","))
                    need[i] = max(need[i], term["beta"])
                    need[j] = max(need[j], term["gamma"])
                assert sum(need) <= prog.n_spins <= sum(need) + 1
                same = program_energy(prog, coherent_extend([1, 1], plan))
                diff = program_energy(prog, coherent_extend([1, -1], plan))
                assert diff - same == 2 * int(plan.quantized[0, 1] + plan.quantized[1, 0])


def test_q_bound():
    with pytest.raises(BoundError):
        map_problem(edge_problem(1.0), COBI, MultiDigitConfig(2, 9))
    with pytest.warns(UserWarning, match="c_max \\+ 1"):
        warnings.simplefilter("always")
        map_problem(edge_problem(1.0), COBI, MultiDigitConfig(2, 8))


def test_penalty_weight_bound():
    with pytest.raises(BoundError):
        map_problem(edge_problem(1.0), COBI, MultiDigitConfig(3, 2, penalty_weight=8))


def test_linear_terms_rejected():
    with pytest.raises(NormalizationError):
        map_problem(IsingProblem(np.zeros((2, 2)), [0.5, 0.1]), COBI, MultiDigitConfig(3, 2))


@settings(max_examples=60, deadline=None)
@given(
    st.integers(1, 6),
    st.sampled_from([2, 3]),
    st.sampled_from([2, 3]),
    st.integers(0, 2**32 - 1),
)
def test_coherent_energy_identity(n, digits, q, seed):
    p, _ = normalize(random_problem(np.random.default_rng(seed), n)) if n > 1 else (IsingProblem(np.zeros((1, 1))), 1)
    prog, plan = map_problem(p, COBI, MultiDigitConfig(digits, q))
    assert np.abs(prog.K).max() <= COBI.c_max
    kq = plan.quantized
    offsets = set()
    for s in all_configs(n):
        expected = -int(s.astype(int) @ kq @ s.astype(int))
        dev = coherent_extend(s, plan)
        offsets.add(program_energy(prog, dev) - expected)
        assert list(decode(dev, plan)) == list(s)
    assert len(offsets) == 1


class TestDecode:
    def plan(self, sizes):
        groups, nxt = [], len(sizes)
        for i, k in enumerate(sizes):
            groups.append([i] + list(range(nxt, nxt + k - 1)))
            nxt += k - 1
        return MappingPlan(len(sizes), groups, 2, 3, 8, 1, np.zeros((len(sizes),) * 2))

    def test_majority(self):
        plan = self.plan([5])
        assert list(decode([1, 1, 1, -1, -1], plan)) == [1]
        assert coherence_violations([1, 1, 1, -1, -1], plan) == 1

    def test_tie_keeps_original(self):
        plan = self.plan([4])
        assert list(decode([1, -1, -1, 1], plan)) == [1]
        assert list(decode([-1, 1, 1, -1], plan)) == [-1]

    def test_coherent_identity(self):
        plan = self.plan([3, 1, 2])
        for s in all_configs(3):
            dev = coherent_extend(s, plan)
            assert np.array_equal(dev[:3], s)
            assert np.array_equal(decode(dev, plan), s)
            assert coherence_violations(dev, plan) == 0


def test_plan_json_roundtrip(tmp_path):
    prog, plan = map_two_digit(mimo_flat(2, seed=1), COBI, MultiDigitConfig(2, 8))
    plan.ancilla = 8
    write_plan(plan, tmp_path / "plan.json")
    back = read_plan(tmp_path / "plan.json")
    assert back.groups == plan.groups and back.edge_terms == plan.edge_terms
    assert back.m_q == 63 and back.q == 8 and back.digits == 2 and back.ancilla == 8
    np.testing.assert_array_equal(back.quantized, plan.quantized)
