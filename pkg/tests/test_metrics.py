"""Recovery rates, capacity/entropy accounting, margin predicate, campaigns."""

import numpy as np
import pytest

from stead.attacks import TamperProfile
from stead.engine import (
    MASK,
    DenoiseSchedule,
    GenerationConfig,
    StegoResult,
    StepPlan,
    embed_message,
    generate_cover,
    plan_step,
)
from stead.metrics import (
    NoRobustSteps,
    embedding_capacity,
    empirical_kld,
    recovery_rates,
    robustness_margin,
    run_campaign,
    sequence_entropy,
)
from stead.sampling import MessageBitstream, SamplingConfig, canonicalize
from stead.synthetic import SyntheticModel, SyntheticModelSpec
from conftest import key_from_int


def payload(n):
    return ("0110100111001010" * ((n + 15) // 16))[:n]


class TestRecoveryRates:
    def test_hand_computed_triplet(self):
        embedded = "1" * 100
        extracted = "1" * 79 + "0"  # 80 bits returned, 79 of them right
        report = recovery_rates(embedded, extracted)
        assert report.correct_rate == 0.79
        assert report.wrong_rate == 0.01
        assert report.lost_rate == pytest.approx(0.20)
        assert not report.success

    def test_perfect_recovery(self):
        report = recovery_rates("10110", "10110")
        assert (report.correct_rate, report.wrong_rate, report.lost_rate) == (1.0, 0.0, 0.0)
        assert report.success

    def test_total_loss(self):
        report = recovery_rates("10110", "")
        assert (report.correct_rate, report.wrong_rate, report.lost_rate) == (0.0, 0.0, 1.0)

    def test_extra_extracted_bits_ignored(self):
        report = recovery_rates("101", "10111")
        assert report.correct_rate == 1.0 and report.lost_rate == 0.0

    def test_randomized_oracle_cases(self):
        rng = np.random.default_rng(17)
        for _ in range(100):
            n_emb = int(rng.integers(1, 200))
            n_ext = int(rng.integers(0, 250))
            emb = "".join(rng.choice(["0", "1"], size=n_emb))
            ext = "".join(rng.choice(["0", "1"], size=n_ext))
            rep = recovery_rates(emb, ext)
            n_cmp = min(n_emb, n_ext)
            matches = sum(a == b for a, b in zip(emb[:n_cmp], ext[:n_cmp]))
            assert rep.correct_rate == matches / n_emb
            assert rep.wrong_rate == (n_cmp - matches) / n_emb
            assert rep.lost_rate == pytest.approx(1 - n_cmp / n_emb, abs=1e-12)
            assert rep.correct_rate + rep.wrong_rate + rep.lost_rate == pytest.approx(
                1.0, abs=1e-12
            )

    def test_rejects_empty_embedded(self):
        with pytest.raises(ValueError):
            recovery_rates("", "101")


def synthetic_trace(length, steps):
    """Closed-form fixture: one position per step, uniform 4-way, two bits each."""
    u4 = canonicalize([(i, 0.25) for i in range(4)], SamplingConfig())
    trace = [
        StepPlan(
            step_index=k,
            t=1.0,
            s=0.0,
            unmask_positions=[k],
            distributions=[u4],
            n_unmask=1,
            capacity=2,
            robust=True,
        )
        for k in range(steps)
    ]
    return StegoResult(stegotext=[0] * length, embedded_bit_count=2 * steps, trace=trace)


class TestCapacityAndEntropy:
    def test_closed_form_uniform_trace(self):
        result = synthetic_trace(length=50, steps=50)
        assert embedding_capacity(result) == 2000.0
        assert sequence_entropy(result.trace, 50) == pytest.approx(2.0, abs=1e-12)

    def test_degenerate_distributions(self):
        one = canonicalize([(3, 1.0)], SamplingConfig())
        trace = [
            StepPlan(0, 1.0, 0.0, [0], [one], 1, 0, False),
        ]
        result = StegoResult([3], 0, trace)
        assert embedding_capacity(result) == 0.0
        assert sequence_entropy(trace, 1) == 0.0

    def test_capacity_bounded_by_entropy_on_real_traces(self, model, small_config):
        for seed in range(10):
            key = key_from_int(seed)
            result = embed_message(
                model, key, small_config, MessageBitstream.from_payload_bits(payload(24))
            )
            cap = embedding_capacity(result)
            ent = sequence_entropy(result.trace, small_config.length)
            assert cap <= 1000.0 * ent


class TestRobustnessMargin:
    def fake_trace(self, ns_values):
        u4 = canonicalize([(i, 0.25) for i in range(4)], SamplingConfig())
        return [
            StepPlan(k, 1.0, 0.0, list(range(n)), [u4] * n, n, 1, robust=True)
            for k, n in enumerate(ns_values)
        ]

    def test_zero_tampering_is_inside_margin(self):
        trace = self.fake_trace([3, 4, 5])
        assert robustness_margin(trace, 0.0, 0.0, 0.0, 2, 512)

    def test_substitution_rate_exceeding_batch_bound(self):
        trace = self.fake_trace([3, 5])
        # 2 * 0.01 = 0.02 >= 3/512, so the guarantee does not apply
        assert not robustness_margin(trace, 0.01, 0.0, 0.0, 2, 512)

    def test_shift_budget_must_stay_under_window(self):
        trace = self.fake_trace([30, 40])
        beta = 3 / 512
        assert not robustness_margin(trace, 0.0, beta, 0.0, 2, 512)
        assert robustness_margin(trace, 0.0, 1 / 512, 0.0, 2, 512)

    def test_no_robust_steps(self):
        u4 = canonicalize([(i, 0.25) for i in range(4)], SamplingConfig())
        trace = [StepPlan(0, 1.0, 0.5, [0, 1], [u4] * 2, 2, 0, robust=False)]
        with pytest.raises(NoRobustSteps):
            robustness_margin(trace, 0.0, 0.0, 0.0, 2, 512)


class TestEmpiricalKld:
    def test_identical_corpora(self):
        corpus = [[1, 2, 3], [4, 5, 6], [1, 1, 2]]
        assert empirical_kld(corpus, corpus, 8) == 0.0

    def test_same_model_cover_vs_stego_small(self):
        # small vocab keeps the finite-sample noise floor well under the bound
        model = SyntheticModel(SyntheticModelSpec(vocab_size=32, concentration=2.0))
        config = GenerationConfig(length=16, schedule=DenoiseSchedule(4))
        cover, stego = [], []
        for seed in range(400):
            cover.append(generate_cover(model, key_from_int(seed), config))
            res = embed_message(
                model,
                key_from_int(10_000 + seed),
                config,
                MessageBitstream.from_payload_bits(payload(16)),
            )
            stego.append(res.stegotext)
        kld = empirical_kld(cover, stego, 32)
        assert kld < 0.05

    def test_biased_sampler_control_detected(self, model):
        # always taking the most likely token is visibly not the model's law
        config = GenerationConfig(length=16, schedule=DenoiseSchedule(4))
        cover, biased = [], []
        for seed in range(120):
            cover.append(generate_cover(model, key_from_int(seed), config))
            key = key_from_int(20_000 + seed)
            region = [MASK] * config.length
            for k in range(config.schedule.total_steps):
                plan = plan_step(region, k, key, model, config)
                for pos, dist in zip(plan.unmask_positions, plan.distributions):
                    region[pos] = dist.token_ids[0]
            biased.append(region)
        assert empirical_kld(cover, biased, 256) > 0.1


class TestRunCampaign:
    def config(self):
        return GenerationConfig(length=64, schedule=DenoiseSchedule(16))

    def test_identity_attack_recovers_exactly(self):
        result = run_campaign(
            [TamperProfile()],
            trials=2,
            spec=SyntheticModelSpec(),
            config=self.config(),
            message_bits=8,
            master_seed=5,
        )
        cell = result.cells[0]
        assert cell.correct_mean == 1.0
        assert cell.success_rate == 1.0
        assert cell.correct_std == 0.0
        assert cell.capacity_mean > 0

    def test_reproducible_from_master_seed(self):
        grid = [TamperProfile(alpha=0.05)]
        kwargs = dict(
            trials=3,
            spec=SyntheticModelSpec(),
            config=self.config(),
            message_bits=8,
            master_seed=77,
        )
        a = run_campaign(grid, **kwargs)
        b = run_campaign(grid, **kwargs)
        assert a.as_dict() == b.as_dict()

    def test_csv_rows_shape(self):
        result = run_campaign(
            [TamperProfile(), TamperProfile(alpha=0.1)],
            trials=1,
            spec=SyntheticModelSpec(),
            config=self.config(),
            message_bits=8,
            master_seed=1,
        )
        rows = result.csv_rows()
        assert len(rows) == 3
        assert rows[0].startswith("alpha,")
        assert all(len(r.split(",")) == 12 for r in rows)

    def test_trials_must_be_positive(self):
        with pytest.raises(ValueError):
            run_campaign([TamperProfile()], 0, SyntheticModelSpec(), self.config())
