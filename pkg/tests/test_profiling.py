"""Sentence and corpus feature profiles against hand fixtures and a
brute-force oracle."""

import math
import random

import pytest

from textgen_eval.corpusio import Corpus, Document, Sentence, Token, tokenize_plain
from textgen_eval.errors import EmptyInput
from textgen_eval.profiling import (
    FEATURES,
    POS_REPORT_ORDER,
    CorpusProfile,
    aggregate_profiles,
    compare_profiles,
    profile_corpus,
    profile_sentence,
)
from tests.conftest import random_tree_sentence


def tree(rows):
    """rows: (form, upos, head, deprel)."""
    return Sentence(
        tokens=[
            Token(index=i, form=f, upos=u, head=h, deprel=d)
            for i, (f, u, h, d) in enumerate(rows, start=1)
        ]
    )


CAT = tree([
    ("Il", "DET", 2, "det"),
    ("gatto", "NOUN", 4, "nsubj"),
    ("nero", "ADJ", 2, "amod"),
    ("dorme", "VERB", 0, "root"),
    (".", "PUNCT", 4, "punct"),
])

COP = tree([
    ("Il", "DET", 2, "det"),
    ("gatto", "NOUN", 4, "nsubj"),
    ("è", "AUX", 4, "cop"),
    ("nero", "ADJ", 0, "root"),
    (".", "PUNCT", 4, "punct"),
])


def oracle(sent):
    """Independent re-derivation of every feature by plain enumeration."""
    tokens = sent.tokens
    tps = len(tokens)
    pos_counts = {}
    for t in tokens:
        pos_counts[t.upos] = pos_counts.get(t.upos, 0) + 1
    pos_dist = {tag: c / tps for tag, c in pos_counts.items()}
    lengths = [len(t.form) for t in tokens if t.upos != "PUNCT"]
    cpt = sum(lengths) / len(lengths) if lengths else None
    if sent.synthetic_tree:
        return dict(tps=tps, cpt=cpt, tpc=None, ll_max=None, ll_avg=None,
                    ll_max_norm=None, pos_dist=pos_dist)
    clause = set()
    for t in tokens:
        if t.upos == "VERB" and t.deprel not in ("aux", "aux:pass", "cop"):
            clause.add(t.index)
        if t.deprel == "cop" and t.head != 0:
            clause.add(t.head)
    links = []
    for t in tokens:
        if t.head != 0 and t.deprel != "punct":
            links.append(abs(t.index - t.head))
    return dict(
        tps=tps,
        cpt=cpt,
        tpc=tps / len(clause) if clause else None,
        ll_max=max(links) if links else None,
        ll_avg=sum(links) / len(links) if links else None,
        ll_max_norm=max(links) / tps if links else None,
        pos_dist=pos_dist,
    )


def test_cat_fixture_values():
    p = profile_sentence(CAT)
    assert p.cpt == 4.0
    assert p.tps == 5
    assert p.tpc == 5.0
    assert p.ll_avg == 4 / 3
    assert p.ll_max == 2
    assert p.ll_max_norm == 0.4
    assert p.pos_dist == {
        "DET": 0.2, "NOUN": 0.2, "ADJ": 0.2, "VERB": 0.2, "PUNCT": 0.2,
    }


def test_cop_dependent_marks_its_head_as_clause():
    p = profile_sentence(COP)
    assert p.tpc == 5.0  # exactly one clause, headed by "nero"


def test_single_interjection_has_absent_syntactic_features():
    p = profile_sentence(tree([("Sì", "INTJ", 0, "root")]))
    assert p.tps == 1
    assert p.cpt == 2.0
    assert p.tpc is None
    assert p.ll_max is None and p.ll_avg is None and p.ll_max_norm is None
    assert p.pos_dist == {"INTJ": 1.0}


def test_synthetic_tree_gets_surface_features_only():
    p = profile_sentence(tokenize_plain("Il gatto dorme .")[0])
    assert p.tps == 4 and p.cpt is not None and p.pos_dist == {"X": 1.0}
    assert p.tpc is None and p.ll_max is None and p.ll_avg is None


def test_oracle_equivalence_on_random_trees():
    pyrng = random.Random(4242)
    for _ in range(50):
        sent = random_tree_sentence(pyrng, pyrng.randint(1, 15))
        p = profile_sentence(sent)
        want = oracle(sent)
        assert p.tps == want["tps"]
        assert p.cpt == want["cpt"]
        assert p.tpc == want["tpc"]
        assert p.ll_max == want["ll_max"]
        assert p.ll_avg == want["ll_avg"]
        assert p.ll_max_norm == want["ll_max_norm"]
        assert p.pos_dist == want["pos_dist"]


def test_ll_max_stays_below_token_count():
    pyrng = random.Random(77)
    for _ in range(200):
        p = profile_sentence(random_tree_sentence(pyrng, pyrng.randint(1, 15)))
        if p.ll_max is not None:
            assert p.ll_max < p.tps


def test_pos_dist_sums_to_one():
    pyrng = random.Random(78)
    for _ in range(100):
        p = profile_sentence(random_tree_sentence(pyrng, pyrng.randint(1, 15)))
        assert math.isclose(sum(p.pos_dist.values()), 1.0, abs_tol=1e-9)


# -- aggregation ------------------------------------------------------------

def test_aggregate_mean_and_population_std():
    short = tree([("ab", "NOUN", 0, "root")] + [("c", "NOUN", 1, "dep")] * 9)
    long = tree([("ab", "NOUN", 0, "root")] + [("c", "NOUN", 1, "dep")] * 29)
    stats = aggregate_profiles(
        [profile_sentence(short), profile_sentence(long)]
    ).features["tps"]
    assert stats.mean == 20.0
    assert stats.std == 10.0
    assert stats.n == 2


def test_single_profile_std_zero():
    prof = aggregate_profiles([profile_sentence(CAT)])
    assert prof.features["tps"].std == 0.0


def test_presence_counting_for_absent_features():
    sentences = [CAT, COP, CAT] + tokenize_plain("a b. c d.")
    profiles = [profile_sentence(s) for s in sentences]
    prof = aggregate_profiles(profiles)
    assert prof.features["ll_max"].n == 3
    assert prof.features["tps"].n == 5


def test_aggregate_empty_raises():
    with pytest.raises(EmptyInput):
        aggregate_profiles([])


def test_std_matches_brute_force():
    pyrng = random.Random(55)
    sentences = [random_tree_sentence(pyrng, pyrng.randint(2, 15)) for _ in range(80)]
    prof = aggregate_profiles([profile_sentence(s) for s in sentences])
    values = [float(len(s)) for s in sentences]
    mean = math.fsum(values) / len(values)
    var = math.fsum((v - mean) ** 2 for v in values) / len(values)
    assert math.isclose(prof.features["tps"].mean, mean, rel_tol=1e-9)
    assert math.isclose(prof.features["tps"].std, math.sqrt(var), rel_tol=1e-9)


def test_identical_sentences_aggregate_to_single_values():
    single = profile_sentence(CAT)
    prof = aggregate_profiles([profile_sentence(CAT) for _ in range(4)])
    for tag, share in single.pos_dist.items():
        assert prof.pos_stats[tag].mean == share
        assert prof.pos_stats[tag].std == 0.0
    assert prof.features["cpt"].mean == single.cpt


def test_ll_max_over_tps_is_ratio_of_means():
    profiles = [profile_sentence(CAT), profile_sentence(COP)]
    prof = aggregate_profiles(profiles)
    want = prof.features["ll_max"].mean / prof.features["tps"].mean
    assert prof.ll_max_over_tps == want


def test_profile_roundtrips_through_dict():
    prof = profile_corpus(Corpus(documents=[Document(sentences=[CAT, COP])]))
    again = CorpusProfile.from_dict(prof.to_dict())
    assert again.to_dict() == prof.to_dict()


# -- comparison -------------------------------------------------------------

def test_compare_with_self_has_zero_differences():
    prof = profile_corpus(Corpus(documents=[Document(sentences=[CAT, COP])]))
    report = compare_profiles(prof, prof)
    for row in report.rows:
        if row.a is not None:
            assert row.diff_mean == 0.0


def test_compare_row_order_features_then_pos_report_order():
    prof = profile_corpus(Corpus(documents=[Document(sentences=[CAT, COP])]))
    report = compare_profiles(prof, prof)
    labels = [r.feature for r in report.rows]
    assert labels[: len(FEATURES)] == list(FEATURES)
    pos_labels = [l for l in labels if l.startswith("pos:")]
    wanted = [f"pos:{t}" for t in POS_REPORT_ORDER if f"pos:{t}" in pos_labels]
    assert pos_labels[: len(wanted)] == wanted


def test_compare_csv_shape():
    prof = profile_corpus(Corpus(documents=[Document(sentences=[CAT])]))
    csv_text = compare_profiles(prof, prof).to_csv()
    lines = csv_text.strip().splitlines()
    assert lines[0] == "feature,a_mean,a_std,a_n,b_mean,b_std,b_n,diff_mean"
    assert lines[-1].startswith("ll_max_over_tps,")
    assert any(line.startswith("cpt,4,") for line in lines)


def test_compare_text_marks_absent_with_dash():
    plain = profile_corpus(
        Corpus(documents=[Document(sentences=tokenize_plain("a b."))])
    )
    text = compare_profiles(plain, plain).to_text()
    assert "—" in text
