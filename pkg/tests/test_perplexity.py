"""Perplexity identities, exactness under sharding, and file ingestion."""

import json
import math
import random

import pytest

from textgen_eval.errors import EmptyInput
from textgen_eval.exactsum import ExactSum
from textgen_eval.markov import train
from textgen_eval.perplexity import (
    InvalidRecord,
    LogProbRecord,
    NonFiniteLogProb,
    perplexity_from_logprobs,
    perplexity_of_markov,
    read_logprob_file,
)
from tests.conftest import corpus_from_token_lists


def uniform_records(v: int, n: int, doc_id: str = "d") -> list[LogProbRecord]:
    lp = -math.log(v)
    return [LogProbRecord(doc_id=doc_id, token=f"t{i}", logprob=lp) for i in range(n)]


@pytest.mark.parametrize("v", [2, 8, 1000])
def test_uniform_logprobs_give_ppl_equal_to_vocab_size(v):
    report = perplexity_from_logprobs(uniform_records(v, 137))
    assert math.isclose(report.overall.perplexity, v, rel_tol=1e-9)


def test_hand_case_half_and_eighth_gives_four():
    records = [
        LogProbRecord("d", "x", math.log(0.5)),
        LogProbRecord("d", "y", math.log(0.125)),
    ]
    report = perplexity_from_logprobs(records)
    assert math.isclose(report.overall.perplexity, 4.0, rel_tol=1e-12)


def test_order_of_records_does_not_change_the_bits():
    pyrng = random.Random(17)
    records = [
        LogProbRecord("d", f"t{i}", -pyrng.random() * 9 - 1e-6) for i in range(500)
    ]
    base = perplexity_from_logprobs(records).overall.perplexity
    for _ in range(5):
        pyrng.shuffle(records)
        assert perplexity_from_logprobs(records).overall.perplexity == base


def test_shard_merge_equals_single_pass_exactly():
    pyrng = random.Random(18)
    values = [-pyrng.random() * 9 - 1e-6 for _ in range(1001)]
    single = ExactSum(values)
    for cut in (1, 137, 500, 1000):
        left, right = ExactSum(values[:cut]), ExactSum(values[cut:])
        left.merge(right)
        assert left.value == single.value
    report = perplexity_from_logprobs(
        [LogProbRecord("d", "t", v) for v in values]
    )
    assert report.overall.perplexity == math.exp(-single.value / len(values))


def test_concatenation_ppl_lies_between_domain_ppls():
    a = uniform_records(4, 50, doc_id="wiki/a")
    b = uniform_records(64, 70, doc_id="news/b")
    report = perplexity_from_logprobs(a + b, domain_of=lambda d: d.split("/")[0])
    lo = min(report.domains["wiki"].perplexity, report.domains["news"].perplexity)
    hi = max(report.domains["wiki"].perplexity, report.domains["news"].perplexity)
    assert lo <= report.overall.perplexity <= hi
    assert report.overall.token_count == 120


def test_empty_records_rejected():
    with pytest.raises(EmptyInput):
        perplexity_from_logprobs([])


def test_non_finite_logprob_rejected_with_index():
    records = uniform_records(2, 3) + [LogProbRecord("d", "bad", float("-inf"))]
    with pytest.raises(NonFiniteLogProb) as err:
        perplexity_from_logprobs(records)
    assert err.value.index == 3


# -- markov-scored perplexity ----------------------------------------------

def test_markov_ppl_of_abc_is_fourth_root_of_two():
    model = train([["a", "b", "c"], ["a", "b", "d"]], state_size=2)
    corpus = corpus_from_token_lists([["a", "b", "c"]])
    report = perplexity_of_markov(model, corpus, alpha=1e-9)
    assert math.isclose(report.overall.perplexity, 2 ** 0.25, rel_tol=1e-6)
    assert report.overall.token_count == 4  # END transition counted
    assert report.unit == "word"


def test_markov_ppl_rises_with_alpha_on_in_domain_text():
    model = train([["a", "b", "c"], ["a", "b", "d"]], state_size=2)
    corpus = corpus_from_token_lists([["a", "b", "c"], ["a", "b", "d"]])
    ppls = [
        perplexity_of_markov(model, corpus, alpha).overall.perplexity
        for alpha in (1e-6, 1e-3, 0.1, 1.0, 10.0)
    ]
    assert all(lo < hi for lo, hi in zip(ppls, ppls[1:]))


def test_markov_ppl_groups_by_document_domain():
    model = train([["a", "b", "c"], ["a", "b", "d"]], state_size=2)
    corpus_a = corpus_from_token_lists([["a", "b", "c"]], domain="uno")
    corpus_b = corpus_from_token_lists([["a", "b", "d"]], domain="due")
    corpus_a.documents.extend(corpus_b.documents)
    merged = type(corpus_a)(documents=corpus_a.documents)
    report = perplexity_of_markov(model, merged, alpha=0.1)
    assert set(report.domains) == {"uno", "due"}
    assert report.overall.token_count == 8


def test_markov_ppl_empty_corpus_rejected():
    model = train([["a"]], state_size=2)
    with pytest.raises(EmptyInput):
        perplexity_of_markov(model, corpus_from_token_lists([]))


# -- report renderings ------------------------------------------------------

def test_report_renderings_are_deterministic_and_ordered():
    a = uniform_records(4, 10, doc_id="wiki/a")
    b = uniform_records(8, 10, doc_id="news/b")
    report = perplexity_from_logprobs(a + b, domain_of=lambda d: d.split("/")[0])
    csv_one = report.to_csv(domain_order=["wiki", "news"])
    assert csv_one == report.to_csv(domain_order=["wiki", "news"])
    lines = csv_one.strip().splitlines()
    assert lines[0] == "domain,token_count,mean_neg_logprob,perplexity"
    assert [l.split(",")[0] for l in lines[1:]] == ["wiki", "news", "overall"]
    text = report.to_text()
    assert "overall" in text and "unit: token" in text
    payload = report.to_dict()
    assert set(payload["domains"]) == {"wiki", "news"}


# -- file ingestion ---------------------------------------------------------

def write_logprob_file(path, header: dict, rows: list[dict]):
    lines = [json.dumps(header)] + [json.dumps(r) for r in rows]
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")


def test_log_base_two_is_converted(tmp_path):
    path = tmp_path / "lp.jsonl"
    write_logprob_file(
        path,
        {"log_base": "2", "unit": "subword"},
        [{"doc_id": "d", "token": "t", "logprob": -1.0}],
    )
    header, records = read_logprob_file(path)
    assert header["unit"] == "subword"
    assert math.isclose(records[0].logprob, math.log(0.5), rel_tol=1e-12)


def test_unknown_log_base_rejected(tmp_path):
    path = tmp_path / "lp.jsonl"
    write_logprob_file(path, {"log_base": "7"}, [])
    with pytest.raises(InvalidRecord):
        read_logprob_file(path)


def test_positive_logprob_rejected(tmp_path):
    path = tmp_path / "lp.jsonl"
    write_logprob_file(
        path, {"log_base": "e"}, [{"doc_id": "d", "token": "t", "logprob": 0.5}]
    )
    with pytest.raises(InvalidRecord):
        read_logprob_file(path)


def test_missing_field_rejected_with_index(tmp_path):
    path = tmp_path / "lp.jsonl"
    write_logprob_file(
        path,
        {"log_base": "e"},
        [{"doc_id": "d", "token": "t", "logprob": -1.0}, {"doc_id": "d"}],
    )
    with pytest.raises(InvalidRecord) as err:
        read_logprob_file(path)
    assert err.value.index == 1


def test_empty_file_rejected(tmp_path):
    path = tmp_path / "lp.jsonl"
    path.write_text("", encoding="utf-8")
    with pytest.raises(EmptyInput):
        read_logprob_file(path)


def test_file_round_trip_to_report(tmp_path):
    path = tmp_path / "lp.jsonl"
    rows = [
        {"doc_id": "d", "token": f"t{i}", "logprob": -math.log(8)} for i in range(24)
    ]
    write_logprob_file(path, {"log_base": "e", "unit": "token"}, rows)
    header, records = read_logprob_file(path)
    report = perplexity_from_logprobs(records, unit=str(header["unit"]))
    assert math.isclose(report.overall.perplexity, 8.0, rel_tol=1e-9)
