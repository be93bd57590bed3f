"""Query separation: interference solver vs collision search, and the reduction demo."""

import numpy as np
import pytest
from scipy import stats

from trapqip.core import CapacityError
from trapqip.separation import (
    GeneralizedSimonOracle,
    RsrLanguage,
    build_simon_oracle,
    classical_collision_count,
    gf2_null_vector,
    gf2_rank,
    gf2_reduce,
    quantum_reduction_demo,
    simon_solve,
)


def _parity(v):
    return bin(v).count("1") % 2


class TestOracleConstruction:
    def test_tables_are_two_to_one_along_secrets(self):
        orc = build_simon_oracle(4, 5, seed=0)
        assert orc.instance_count == 5
        for i in range(5):
            s = orc.secrets[i]
            table = orc.tables[i]
            assert s != 0
            assert len(set(table)) == 8
            for x in range(16):
                assert table[x] == table[x ^ s]

    def test_build_is_seed_deterministic(self):
        a = build_simon_oracle(5, 3, seed=7)
        b = build_simon_oracle(5, 3, seed=7)
        assert a.secrets == b.secrets
        assert a.tables == b.tables
        c = build_simon_oracle(5, 3, seed=8)
        assert a.secrets != c.secrets or a.tables != c.tables

    def test_zero_secret_rejected(self):
        with pytest.raises(ValueError):
            GeneralizedSimonOracle(2, (0,), (tuple(range(4)),))

    def test_non_colliding_table_rejected(self):
        with pytest.raises(ValueError):
            GeneralizedSimonOracle(2, (3,), ((0, 1, 2, 3),))

    def test_constant_table_rejected(self):
        with pytest.raises(ValueError):
            GeneralizedSimonOracle(2, (3,), ((0, 0, 0, 0),))

    def test_width_and_instance_caps(self):
        with pytest.raises(CapacityError):
            build_simon_oracle(9, 1, seed=0)
        with pytest.raises(CapacityError):
            build_simon_oracle(4, 65, seed=0)

    def test_query_counters(self):
        orc = build_simon_oracle(3, 2, seed=1)
        orc.classical_query(0, 5)
        orc.classical_query(0, 2)
        orc.count_quantum_query(1)
        assert orc.classical_counts[0] == 2
        assert orc.quantum_counts[1] == 1
        orc.reset_counters()
        assert orc.classical_counts[0] == 0
        assert orc.quantum_counts[1] == 0


class TestGf2:
    def test_reduce_and_rank(self):
        rows = [0b110, 0b011, 0b101]
        assert gf2_rank(rows) == 2
        reduced = gf2_reduce(rows)
        assert len(reduced) == 2

    def test_null_vector_is_orthogonal_complement(self):
        rows = [0b110, 0b011]
        v = gf2_null_vector(rows, 3)
        assert v is not None and v != 0
        for r in rows:
            assert _parity(v & r) == 0

    def test_full_rank_has_no_null_vector(self):
        assert gf2_null_vector([0b001, 0b010, 0b100], 3) is None


class TestInterferenceSolver:
    def test_recovers_secrets_within_budget(self):
        for n in (3, 4, 6, 8):
            orc = build_simon_oracle(n, 2, seed=n)
            for i in range(2):
                res = simon_solve(orc, i, seed=10 * n + i)
                assert res.secret == orc.secrets[i]
                assert res.queries <= 20 * n
                assert orc.quantum_counts[i] == res.queries

    def test_measurements_orthogonal_to_secret(self):
        orc = build_simon_oracle(6, 1, seed=3)
        s = orc.secrets[0]
        for seed in range(20):
            res = simon_solve(orc, 0, seed=seed)
            assert all(_parity(y & s) == 0 for y in res.measurements)

    def test_single_bit_edge_case(self):
        # n=1 forces secret 1; rank 0 suffices and one round resolves it
        orc = build_simon_oracle(1, 1, seed=0)
        res = simon_solve(orc, 0, seed=0)
        assert res.secret == 1
        assert res.queries == 1
        assert res.measurements == (0,)

    def test_result_unpacks(self):
        orc = build_simon_oracle(3, 1, seed=1)
        secret, queries = simon_solve(orc, 0, seed=2)
        assert secret == orc.secrets[0]
        assert queries >= 1

    def test_first_round_measurement_uniform_on_complement(self):
        # the interference round samples the orthogonal subspace evenly
        orc = build_simon_oracle(3, 1, seed=5)
        s = orc.secrets[0]
        counts = {y: 0 for y in range(8) if _parity(y & s) == 0}
        for seed in range(1000):
            counts[simon_solve(orc, 0, seed=seed).measurements[0]] += 1
        assert stats.chisquare(list(counts.values())).pvalue > 0.01


class TestCollisionSearch:
    def test_birthday_recovers_secret(self):
        orc = build_simon_oracle(5, 1, seed=4)
        secret, count = classical_collision_count(orc, 0, seed=3)
        assert secret == orc.secrets[0]
        assert orc.classical_counts[0] == count
        assert count >= 2

    def test_scaling_gap(self):
        # median collision cost at n=8 sits well above the interference cost
        orc = build_simon_oracle(8, 1, seed=6)
        classical = []
        for seed in range(15):
            orc.reset_counters()
            _, count = classical_collision_count(orc, 0, seed=seed)
            classical.append(count)
        orc.reset_counters()
        quantum = simon_solve(orc, 0, seed=0).queries
        assert float(np.median(classical)) >= 2 * quantum

    def test_unknown_strategy_rejected(self):
        orc = build_simon_oracle(3, 1, seed=0)
        with pytest.raises(ValueError):
            classical_collision_count(orc, 0, strategy="telepathy")


class TestRsrLanguage:
    def test_membership_is_linear(self):
        lang = RsrLanguage(4, 0b1011)
        for x in range(16):
            for r in range(16):
                assert lang.member(x) ^ lang.member(r) == lang.member(x ^ r)

    def test_shift_query_blinds_by_xor(self):
        lang = RsrLanguage(3, 5)
        assert lang.shift_query(0b110, 0b011) == 0b101

    def test_out_of_range_rejected(self):
        with pytest.raises(ValueError):
            RsrLanguage(2, 4)
        with pytest.raises(ValueError):
            RsrLanguage(3, 5).member(8)


class TestReductionDemo:
    def test_every_input_decided_correctly(self):
        lang = RsrLanguage(3, 5)
        orc = build_simon_oracle(3, 6, seed=1)
        for x in range(8):
            orc.reset_counters()
            res = quantum_reduction_demo(lang, orc, x, seed=x)
            assert res.decision == res.expected == lang.member(x)
            assert not res.aborted
            assert len(res.pair_bits) == 3
            assert sum(res.quantum_queries) >= 6

    def test_pair_count_must_be_odd(self):
        lang = RsrLanguage(3, 5)
        orc = build_simon_oracle(3, 6, seed=1)
        with pytest.raises(ValueError):
            quantum_reduction_demo(lang, orc, 2, seed=0, pairs=2)

    def test_needs_two_instances_per_pair(self):
        lang = RsrLanguage(3, 5)
        orc = build_simon_oracle(3, 2, seed=1)
        with pytest.raises(ValueError):
            quantum_reduction_demo(lang, orc, 2, seed=0, pairs=3)

    def test_classical_budget_starves_the_solver(self):
        # guessing a 255-way secret 16 times per call almost never lands
        lang = RsrLanguage(8, 0b10110101)
        orc = build_simon_oracle(8, 6, seed=2)
        res = quantum_reduction_demo(lang, orc, 77, seed=3, classical_budget=16)
        assert res.aborted
        assert res.decision is None
        assert res.solver_rejections == 16
        assert sum(res.quantum_queries) == 0
