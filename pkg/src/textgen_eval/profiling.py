"""Per-sentence linguistic features and corpus-level mean/std aggregation.

Feature names are fixed strings used across reports and serialization:
``cpt`` (mean chars per non-punctuation token), ``tps`` (tokens per
sentence), ``tpc`` (tokens per clause), ``ll_max`` / ``ll_avg`` (longest and
mean dependency link), ``ll_max_norm`` (longest link over sentence length).

Conventions, stated once:
* cpt excludes PUNCT tokens; tps and the POS distribution include them.
* A dependency link is counted for every non-root token whose relation is
  not "punct"; its length is the absolute index distance to the head.
* A clause head is a VERB whose relation is none of aux/aux:pass/cop, or any
  token governing a "cop" dependent.
* Features whose denominator is zero are absent (None), never zero.
* On synthetic plain-text trees only cpt, tps and pos_dist are produced.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable

from .corpusio import Corpus, Sentence
from .errors import EmptyInput
from .exactsum import ExactSum

FEATURES = ("cpt", "tps", "tpc", "ll_max", "ll_avg", "ll_max_norm")

# Report order for the thirteen POS tags tracked in comparisons; any other
# observed tag is appended alphabetically.
POS_REPORT_ORDER = (
    "AUX", "PROPN", "PUNCT", "DET", "NUM", "ADP", "PRON", "SCONJ", "NOUN",
    "VERB", "ADV", "CCONJ", "ADJ",
)

_NON_CLAUSAL_VERB_DEPRELS = frozenset({"aux", "aux:pass", "cop"})


@dataclass
class SentenceProfile:
    tps: int
    cpt: float | None
    tpc: float | None
    ll_max: int | None
    ll_avg: float | None
    ll_max_norm: float | None
    pos_dist: dict[str, float]

    def feature(self, name: str) -> float | None:
        return getattr(self, name)


@dataclass
class FeatureStats:
    """Population mean/std over the sentences where a feature is present."""

    mean: float
    std: float
    n: int

    def to_dict(self) -> dict:
        return {"mean": self.mean, "std": self.std, "n": self.n}

    @classmethod
    def from_dict(cls, d: dict) -> "FeatureStats":
        return cls(mean=d["mean"], std=d["std"], n=d["n"])


@dataclass
class CorpusProfile:
    features: dict[str, FeatureStats]
    pos_stats: dict[str, FeatureStats]
    sentence_count: int
    ll_max_over_tps: float | None = None

    def to_dict(self) -> dict:
        return {
            "sentence_count": self.sentence_count,
            "ll_max_over_tps": self.ll_max_over_tps,
            "features": {k: v.to_dict() for k, v in self.features.items()},
            "pos_stats": {k: v.to_dict() for k, v in self.pos_stats.items()},
        }

    @classmethod
    def from_dict(cls, d: dict) -> "CorpusProfile":
        return cls(
            features={k: FeatureStats.from_dict(v) for k, v in d["features"].items()},
            pos_stats={k: FeatureStats.from_dict(v) for k, v in d["pos_stats"].items()},
            sentence_count=d["sentence_count"],
            ll_max_over_tps=d.get("ll_max_over_tps"),
        )


def profile_sentence(sentence: Sentence) -> SentenceProfile:
    """Compute the per-sentence feature vector."""
    tokens = sentence.tokens
    tps = len(tokens)

    pos_counts: dict[str, int] = {}
    for t in tokens:
        pos_counts[t.upos] = pos_counts.get(t.upos, 0) + 1
    pos_dist = {tag: count / tps for tag, count in pos_counts.items()}

    non_punct_lens = [len(t.form) for t in tokens if t.upos != "PUNCT"]
    cpt = sum(non_punct_lens) / len(non_punct_lens) if non_punct_lens else None

    if sentence.synthetic_tree:
        return SentenceProfile(
            tps=tps, cpt=cpt, tpc=None, ll_max=None, ll_avg=None,
            ll_max_norm=None, pos_dist=pos_dist,
        )

    clause_heads = set()
    for t in tokens:
        if t.upos == "VERB" and t.deprel not in _NON_CLAUSAL_VERB_DEPRELS:
            clause_heads.add(t.index)
    for t in tokens:
        if t.deprel == "cop" and t.head != 0:
            clause_heads.add(t.head)
    tpc = tps / len(clause_heads) if clause_heads else None

    links = [abs(t.index - t.head) for t in tokens
             if t.head != 0 and t.deprel != "punct"]
    if links:
        ll_max: int | None = max(links)
        ll_avg: float | None = sum(links) / len(links)
        ll_max_norm: float | None = ll_max / tps
    else:
        ll_max = ll_avg = ll_max_norm = None

    return SentenceProfile(
        tps=tps, cpt=cpt, tpc=tpc, ll_max=ll_max, ll_avg=ll_avg,
        ll_max_norm=ll_max_norm, pos_dist=pos_dist,
    )


def _stats(values: list[float]) -> FeatureStats:
    """Two-pass population mean/std with exact summation."""
    n = len(values)
    mean = ExactSum(values).value / n
    var = ExactSum((v - mean) ** 2 for v in values).value / n
    # tiny negative residue can appear from the final rounding
    return FeatureStats(mean=mean, std=math.sqrt(max(var, 0.0)), n=n)


def aggregate_profiles(profiles: list[SentenceProfile]) -> CorpusProfile:
    """Mean/std per feature over the sentences where the feature is present."""
    if not profiles:
        raise EmptyInput("no sentence profiles to aggregate")

    features: dict[str, FeatureStats] = {}
    for name in FEATURES:
        values = [float(v) for p in profiles
                  if (v := p.feature(name)) is not None]
        if values:
            features[name] = _stats(values)

    tags = sorted({tag for p in profiles for tag in p.pos_dist})
    pos_stats = {
        tag: _stats([p.pos_dist.get(tag, 0.0) for p in profiles]) for tag in tags
    }

    ll_max_over_tps = None
    if "ll_max" in features:
        ll_max_over_tps = features["ll_max"].mean / features["tps"].mean

    return CorpusProfile(
        features=features,
        pos_stats=pos_stats,
        sentence_count=len(profiles),
        ll_max_over_tps=ll_max_over_tps,
    )


def profile_corpus(corpus: Corpus) -> CorpusProfile:
    return aggregate_profiles([profile_sentence(s) for s in corpus.sentences()])


@dataclass
class CompareRow:
    feature: str
    a: FeatureStats | None
    b: FeatureStats | None

    @property
    def diff_mean(self) -> float | None:
        if self.a is None or self.b is None:
            return None
        return self.b.mean - self.a.mean


@dataclass
class ComparisonReport:
    """Side-by-side feature table for two corpus profiles (a vs b)."""

    rows: list[CompareRow]
    ll_max_over_tps: tuple[float | None, float | None] = (None, None)

    def to_csv(self) -> str:
        lines = ["feature,a_mean,a_std,a_n,b_mean,b_std,b_n,diff_mean"]
        for row in self.rows:
            cells = [row.feature]
            for stats in (row.a, row.b):
                if stats is None:
                    cells.extend(["", "", ""])
                else:
                    cells.extend([f"{stats.mean:.6g}", f"{stats.std:.6g}", str(stats.n)])
            diff = row.diff_mean
            cells.append("" if diff is None else f"{diff:.6g}")
            lines.append(",".join(cells))
        a_ratio, b_ratio = self.ll_max_over_tps
        lines.append(
            "ll_max_over_tps,"
            + ("" if a_ratio is None else f"{a_ratio:.6g}")
            + ",,,"
            + ("" if b_ratio is None else f"{b_ratio:.6g}")
            + ",,,"
        )
        return "\n".join(lines) + "\n"

    def to_text(self) -> str:
        header = f"{'feature':<14}{'a mean':>10}{'a std':>10}{'b mean':>10}{'b std':>10}{'diff':>10}"
        lines = [header, "-" * len(header)]
        for row in self.rows:
            def fmt(x: float | None) -> str:
                return "     —" if x is None else f"{x:10.3f}"
            a_mean = fmt(row.a.mean if row.a else None)
            a_std = fmt(row.a.std if row.a else None)
            b_mean = fmt(row.b.mean if row.b else None)
            b_std = fmt(row.b.std if row.b else None)
            lines.append(
                f"{row.feature:<14}{a_mean}{a_std}{b_mean}{b_std}{fmt(row.diff_mean)}"
            )
        a_ratio, b_ratio = self.ll_max_over_tps
        if a_ratio is not None or b_ratio is not None:
            lines.append("")
            lines.append(
                "ll_max_over_tps: a="
                + ("—" if a_ratio is None else f"{a_ratio:.3f}")
                + " b="
                + ("—" if b_ratio is None else f"{b_ratio:.3f}")
            )
        return "\n".join(lines) + "\n"

    def to_dict(self) -> dict:
        return {
            "rows": [
                {
                    "feature": r.feature,
                    "a": r.a.to_dict() if r.a else None,
                    "b": r.b.to_dict() if r.b else None,
                    "diff_mean": r.diff_mean,
                }
                for r in self.rows
            ],
            "ll_max_over_tps": {
                "a": self.ll_max_over_tps[0],
                "b": self.ll_max_over_tps[1],
            },
        }


def compare_profiles(a: CorpusProfile, b: CorpusProfile) -> ComparisonReport:
    """Side-by-side table: main features first, then POS rows in report order."""
    rows = [
        CompareRow(name, a.features.get(name), b.features.get(name))
        for name in FEATURES
    ]
    seen = set(POS_REPORT_ORDER)
    extra = sorted(
        (set(a.pos_stats) | set(b.pos_stats)) - seen
    )
    for tag in (*POS_REPORT_ORDER, *extra):
        stats_a = a.pos_stats.get(tag)
        stats_b = b.pos_stats.get(tag)
        if stats_a is None and stats_b is None:
            continue
        rows.append(CompareRow(f"pos:{tag}", stats_a, stats_b))
    return ComparisonReport(
        rows=rows, ll_max_over_tps=(a.ll_max_over_tps, b.ll_max_over_tps)
    )
