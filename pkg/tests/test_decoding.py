"""Truncated sampling, the guided decoder, and the baseline decoders."""
import numpy as np
import pytest

from kid.decoding import (
    DecodingConfig,
    DecodingSession,
    decode_beam,
    decode_greedy,
    decode_kid,
    decode_sampling,
    sample_from,
)
from kid.knowledge import Triplet, build_trie
from kid.lm import PolicyDistribution, UniformProvider, Vocabulary, train_ngram


def _dist(probs):
    return PolicyDistribution(np.log(np.asarray(probs, dtype=np.float64)))


class TestSampleFrom:
    def test_top_k_2_support_and_ratio(self):
        dist = _dist([0.5, 0.3, 0.2])
        rng = np.random.default_rng(0)
        draws = np.array(
            [sample_from(dist, top_p=1.0, top_k=2, rng=rng) for _ in range(10_000)]
        )
        assert set(np.unique(draws)) == {0, 1}
        # Renormalized to 5:3; allow 3-sigma binomial slack around 0.625.
        frac0 = float(np.mean(draws == 0))
        sigma = (0.625 * 0.375 / 10_000) ** 0.5
        assert abs(frac0 - 0.625) < 3 * sigma

    def test_unrestricted_matches_distribution(self):
        probs = np.array([0.05, 0.1, 0.15, 0.2, 0.5])
        dist = _dist(probs)
        rng = np.random.default_rng(1)
        n = 10_000
        draws = np.array(
            [sample_from(dist, top_p=1.0, top_k=0, rng=rng) for _ in range(n)]
        )
        for tok, p in enumerate(probs):
            freq = float(np.mean(draws == tok))
            sigma = (p * (1 - p) / n) ** 0.5
            assert abs(freq - p) <= 3 * sigma, (tok, freq, p)

    def test_one_hot_always_that_token(self):
        probs = np.full(6, 1e-12)
        probs[4] = 1.0
        dist = PolicyDistribution(np.log(probs / probs.sum()))
        rng = np.random.default_rng(2)
        for _ in range(50):
            assert sample_from(dist, top_p=0.3, top_k=1, rng=rng) == 4

    def test_nucleus_cuts_tail(self):
        dist = _dist([0.6, 0.3, 0.1])
        rng = np.random.default_rng(3)
        draws = {sample_from(dist, top_p=0.7, top_k=0, rng=rng) for _ in range(500)}
        # Smallest prefix reaching 0.7 is {0, 1}.
        assert draws == {0, 1}

    def test_top_p_zero_degenerates_to_argmax(self):
        dist = _dist([0.2, 0.5, 0.3])
        rng = np.random.default_rng(4)
        for _ in range(20):
            assert sample_from(dist, top_p=0.0, top_k=0, rng=rng) == 1

    def test_invalid_params(self):
        dist = _dist([0.5, 0.5])
        rng = np.random.default_rng(4)
        with pytest.raises(ValueError):
            sample_from(dist, top_p=-0.1, top_k=0, rng=rng)
        with pytest.raises(ValueError):
            sample_from(dist, top_p=1.5, top_k=0, rng=rng)
        with pytest.raises(ValueError):
            sample_from(dist, top_p=0.9, top_k=-1, rng=rng)


def _toy_task():
    sents = [["helium", "is", "gas"], ["helium", "is", "solid"]] * 50
    provider = train_ngram(sents, order=2, k=0.01)
    trie = build_trie([Triplet(("helium",), ("is",), ("gas",))])
    return provider, trie


class TestDecodeKid:
    def test_trie_breaks_symmetric_tie(self):
        provider, trie = _toy_task()
        ids = provider.encode("helium is")
        cfg = DecodingConfig(max_length=1, top_p=0.7, top_k=20)
        session = DecodingSession(provider, trie)
        hits = sum(
            provider.decode(decode_kid(session, ids, cfg, seed=s).tokens[:1]) == "gas"
            for s in range(100)
        )
        assert hits > 90

    def test_unguided_tie_stays_even(self):
        provider, _ = _toy_task()
        ids = provider.encode("helium is")
        cfg = DecodingConfig(max_length=1, top_p=0.7, top_k=20)
        session = DecodingSession(provider, None)
        hits = sum(
            provider.decode(decode_sampling(session, ids, cfg, seed=s).tokens[:1])
            == "gas"
            for s in range(100)
        )
        assert 20 < hits < 80

    def test_empty_trie_equals_sampling(self):
        provider, _ = _toy_task()
        ids = provider.encode("helium is")
        cfg = DecodingConfig(max_length=8)
        session = DecodingSession(provider, None)
        for seed in range(10):
            a = decode_kid(session, ids, cfg, seed=seed)
            b = decode_sampling(session, ids, cfg, seed=seed)
            assert a.tokens == b.tokens

    def test_deterministic_per_seed(self):
        provider, trie = _toy_task()
        ids = provider.encode("helium is")
        cfg = DecodingConfig(max_length=6)
        session = DecodingSession(provider, trie)
        a = decode_kid(session, ids, cfg, seed=11)
        b = decode_kid(session, ids, cfg, seed=11)
        assert a.tokens == b.tokens
        assert [s.kl for s in a.steps] == [s.kl for s in b.steps]

    def test_step_traces_present(self):
        provider, trie = _toy_task()
        ids = provider.encode("helium is")
        session = DecodingSession(provider, trie)
        result = decode_kid(session, ids, DecodingConfig(max_length=4), seed=0)
        assert result.steps
        for step in result.steps:
            assert step.kl >= 0
            assert step.beta > 0
            assert 0 <= step.demo_mass_before <= 1
            assert 0 <= step.demo_mass_after <= 1

    def test_max_length_cap(self):
        provider, trie = _toy_task()
        session = DecodingSession(provider, trie)
        result = decode_kid(session, provider.encode("helium"),
                            DecodingConfig(max_length=3), seed=0)
        assert len(result.tokens) <= 3


class TestBaselines:
    @pytest.fixture()
    def provider(self):
        sents = [["a", "b", "c"], ["a", "b", "d"], ["b", "c"]] * 10
        return train_ngram(sents, order=3, k=0.1)

    def test_greedy_is_argmax_path(self, provider):
        session = DecodingSession(provider, None)
        result = decode_greedy(session, provider.encode("a"),
                               DecodingConfig(max_length=5), seed=0)
        prefix = provider.encode("a")
        expected = []
        for _ in range(5):
            tok = int(np.argmax(provider.next_distribution(prefix).logits))
            if tok == provider.vocab.eos_id:
                break
            expected.append(tok)
            prefix.append(tok)
        assert result.tokens == expected

    def test_beam_1_equals_greedy(self, provider):
        session = DecodingSession(provider, None)
        cfg1 = DecodingConfig(max_length=5, beam_size=1)
        g = decode_greedy(session, provider.encode("a"), cfg1, seed=0)
        b = decode_beam(session, provider.encode("a"), cfg1, seed=0)
        assert b.tokens == g.tokens

    def test_top_k_1_sampling_equals_greedy(self, provider):
        session = DecodingSession(provider, None)
        cfg = DecodingConfig(max_length=5, top_k=1, top_p=1.0)
        s = decode_sampling(session, provider.encode("a"), cfg, seed=3)
        g = decode_greedy(session, provider.encode("a"),
                          DecodingConfig(max_length=5), seed=3)
        assert s.tokens == g.tokens

    def test_sampling_reproducible(self, provider):
        session = DecodingSession(provider, None)
        cfg = DecodingConfig(max_length=6)
        a = decode_sampling(session, provider.encode("b"), cfg, seed=9)
        b = decode_sampling(session, provider.encode("b"), cfg, seed=9)
        assert a.tokens == b.tokens


class TestConfig:
    def test_defaults(self):
        cfg = DecodingConfig()
        assert cfg.h_max == 4
        assert cfg.effective_w_max == 4
        assert cfg.k_docs == 5
        assert cfg.top_p == 0.9
        assert cfg.top_k == 20
        assert cfg.beam_size == 5

    def test_w_max_override(self):
        assert DecodingConfig(w_max=2).effective_w_max == 2

    def test_validation(self):
        with pytest.raises(ValueError):
            DecodingConfig(h_max=0)
        with pytest.raises(ValueError):
            DecodingConfig(top_p=-0.5)
        with pytest.raises(ValueError):
            DecodingConfig(max_length=0)
        with pytest.raises(ValueError):
            DecodingConfig(beam_size=0)
