"""Generation metrics against hand-computed and brute-force oracles."""
import math
import random

import pytest

from kid.knowledge import Triplet
from kid.metrics import (
    EvalRecord,
    bleu1,
    coverage,
    evaluate_records,
    precision_at_1,
    read_eval_records,
    rouge_l,
    unigram_f1,
)
from kid.retrieval import Chunk, RetrievalResult


class TestBleu1:
    def test_worked_example(self):
        assert bleu1("a a a", ["a b"]) == pytest.approx(0.23884377019126307)

    def test_empty_hypothesis(self):
        assert bleu1("", ["a b"]) == 0.0

    def test_exact_match(self):
        assert bleu1("a b c", ["a b c"]) == pytest.approx(1.0)

    def test_clipping(self):
        # Equal lengths so the length penalty is 1: "a" clips to 1,
        # "b" clips to its single occurrence -> 2 of 3 counts.
        assert bleu1("a a b", ["a b b"]) == pytest.approx(2 / 3)

    def test_length_penalty_is_symmetric(self):
        assert bleu1("a a a", ["a"]) == pytest.approx((1 / 3) * math.exp(-2 / 3))
        assert bleu1("a", ["a a a"]) == pytest.approx(math.exp(-2 / 1))

    def test_multiple_refs_use_closest_length(self):
        # c=2; refs of length 2 and 9 -> brevity judged against length 2.
        assert bleu1("a b", ["a b", "a x x x x x x x x"]) == pytest.approx(1.0)

    def test_no_refs_rejected(self):
        with pytest.raises(ValueError):
            bleu1("a", [])


class TestRougeL:
    def test_worked_example(self):
        assert rouge_l("a c b", ["a b c"]) == pytest.approx(2 / 3, abs=1e-3)

    def test_exact_match(self):
        assert rouge_l("x y z", ["x y z"]) == pytest.approx(1.0)

    def test_empty_hypothesis(self):
        assert rouge_l("", ["a b"]) == 0.0

    def test_matches_brute_force_lcs(self):
        def lcs_table(a, b):
            m, n = len(a), len(b)
            dp = [[0] * (n + 1) for _ in range(m + 1)]
            for i in range(m):
                for j in range(n):
                    dp[i + 1][j + 1] = (
                        dp[i][j] + 1 if a[i] == b[j]
                        else max(dp[i][j + 1], dp[i + 1][j])
                    )
            return dp[m][n]

        rng = random.Random(31)
        vocab = ["a", "b", "c", "d"]
        beta2 = 1.2 ** 2
        for _ in range(100):
            hyp = [rng.choice(vocab) for _ in range(rng.randint(1, 12))]
            ref = [rng.choice(vocab) for _ in range(rng.randint(1, 12))]
            lcs = lcs_table(hyp, ref)
            if lcs == 0:
                expected = 0.0
            else:
                p = lcs / len(hyp)
                r = lcs / len(ref)
                expected = (1 + beta2) * p * r / (r + beta2 * p)
            got = rouge_l(" ".join(hyp), [" ".join(ref)])
            assert got == pytest.approx(expected, abs=1e-12)


class TestUnigramF1:
    def test_worked_example(self):
        assert unigram_f1("a b b", ["a b c"]) == pytest.approx(2 / 3)

    def test_identical_bags(self):
        assert unigram_f1("b a", ["a b"]) == pytest.approx(1.0)

    def test_disjoint_bags(self):
        assert unigram_f1("a a", ["b c"]) == 0.0


class TestCoverage:
    def _triplets(self):
        return [
            Triplet(("marijuana",), ("is",), ("depressant", "drug")),
            Triplet(("drug",), ("slows",), ("reaction", "times")),
        ]

    def test_full_coverage(self):
        hyp = "marijuana depressant drug slows reaction times"
        assert coverage(hyp, self._triplets()) == pytest.approx(100.0)

    def test_zero_coverage(self):
        assert coverage("helium neon argon", self._triplets()) == 0.0

    def test_partial_is_stem_based(self):
        # "drugs" and "time" hit the stems of "drug" and "times".
        got = coverage("drugs take time", self._triplets())
        assert 0.0 < got < 100.0

    def test_no_triplets_rejected(self):
        with pytest.raises(ValueError):
            coverage("anything", [])


class TestPrecisionAt1:
    def _result(self, doc_id, rank_score):
        return RetrievalResult(Chunk(doc_id, 0, ("w",)), rank_score)

    def test_gold_at_rank_1(self):
        assert precision_at_1([self._result("gold", 1.0)], "gold") == 1.0

    def test_gold_absent(self):
        assert precision_at_1([self._result("other", 1.0)], "gold") == 0.0

    def test_no_results(self):
        assert precision_at_1([], "gold") == 0.0

    def test_toy_set_average(self):
        cases = [("gold", "gold"), ("gold", "miss"), ("g2", "g2"), ("x", "y")]
        vals = [
            precision_at_1([self._result(got, 1.0)], want)
            for got, want in cases
        ]
        assert sum(vals) / len(vals) == pytest.approx(0.5)


class TestEvalRecords:
    def test_aggregation(self):
        records = [
            EvalRecord(
                context="q",
                hypothesis="a b",
                references=["a b"],
                triplets=[Triplet(("a",), ("is",), ("b",))],
            ),
            EvalRecord(
                context="q2",
                hypothesis="a c",
                references=["a b"],
                triplets=None,
            ),
        ]
        summary = evaluate_records(records)
        assert summary["count"] == 2
        assert summary["bleu1"] == pytest.approx(
            (bleu1("a b", ["a b"]) + bleu1("a c", ["a b"])) / 2
        )

    def test_from_json_round_trip(self):
        rec = EvalRecord.from_json(
            {
                "context": "q",
                "hypothesis": "h",
                "references": ["r"],
                "triplets": [[["s"], ["is"], ["o", "o2"]]],
            }
        )
        assert rec.triplets[0].obj == ("o", "o2")

    def test_read_rejects_bad_line(self, tmp_path):
        path = tmp_path / "records.jsonl"
        good = '{"context": "q", "hypothesis": "h", "references": ["r"]}'
        path.write_text(good + "\nnot json\n")
        with pytest.raises(ValueError) as err:
            read_eval_records(path)
        assert ":2:" in str(err.value)
