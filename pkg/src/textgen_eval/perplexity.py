"""Per-domain perplexity from token log-probabilities.

Perplexity is exp of the mean negative natural-log probability per token.
Two producers feed the same report: externally supplied per-token log-prob
records (any language model, any tokenization; the file header declares the
log base and unit) and the native Markov scorer.  Accumulation uses exact
mergeable summation, so sharded and serial passes agree bit for bit.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Iterable

from .corpusio import Corpus
from .errors import EmptyInput, WorkbenchError
from .exactsum import ExactSum
from .markov import MarkovModel, score

LOG_BASE_FACTORS = {"e": 1.0, "2": math.log(2.0), "10": math.log(10.0)}


class NonFiniteLogProb(WorkbenchError):
    code = "perplexity.NonFiniteLogProb"

    def __init__(self, message: str, index: int):
        super().__init__(message)
        self.index = index


class InvalidRecord(WorkbenchError):
    code = "perplexity.InvalidRecord"

    def __init__(self, message: str, index: int):
        super().__init__(message)
        self.index = index


@dataclass(frozen=True)
class LogProbRecord:
    """One scored token: natural-log probability, always <= 0 and finite."""

    doc_id: str
    token: str
    logprob: float


@dataclass
class DomainPerplexity:
    token_count: int
    mean_neg_logprob: float
    perplexity: float


@dataclass
class PerplexityReport:
    domains: dict[str, DomainPerplexity]
    overall: DomainPerplexity
    unit: str = "token"

    def _check(self) -> None:
        for row in (*self.domains.values(), self.overall):
            expected = math.exp(row.mean_neg_logprob)
            if not math.isclose(row.perplexity, expected, rel_tol=1e-12):
                raise AssertionError("perplexity inconsistent with mean logprob")

    def _ordered_domains(self, domain_order: list[str] | None) -> list[str]:
        if domain_order is None:
            return sorted(self.domains)
        listed = [d for d in domain_order if d in self.domains]
        rest = sorted(d for d in self.domains if d not in set(domain_order))
        return listed + rest

    def to_csv(self, domain_order: list[str] | None = None) -> str:
        self._check()
        lines = ["domain,token_count,mean_neg_logprob,perplexity"]
        for name in self._ordered_domains(domain_order):
            row = self.domains[name]
            lines.append(
                f"{name},{row.token_count},{row.mean_neg_logprob:.10g},{row.perplexity:.10g}"
            )
        o = self.overall
        lines.append(
            f"overall,{o.token_count},{o.mean_neg_logprob:.10g},{o.perplexity:.10g}"
        )
        return "\n".join(lines) + "\n"

    def to_text(self, domain_order: list[str] | None = None) -> str:
        self._check()
        width = max(
            (len(d) for d in self.domains), default=7
        )
        width = max(width, len("overall"))
        header = f"{'domain':<{width}}  {'tokens':>10}  {'perplexity':>12}   (unit: {self.unit})"
        lines = [header, "-" * len(header)]
        for name in self._ordered_domains(domain_order):
            row = self.domains[name]
            lines.append(f"{name:<{width}}  {row.token_count:>10}  {row.perplexity:>12.4f}")
        lines.append(
            f"{'overall':<{width}}  {self.overall.token_count:>10}  {self.overall.perplexity:>12.4f}"
        )
        return "\n".join(lines) + "\n"

    def to_dict(self) -> dict:
        self._check()
        return {
            "unit": self.unit,
            "domains": {
                name: {
                    "token_count": row.token_count,
                    "mean_neg_logprob": row.mean_neg_logprob,
                    "perplexity": row.perplexity,
                }
                for name, row in self.domains.items()
            },
            "overall": {
                "token_count": self.overall.token_count,
                "mean_neg_logprob": self.overall.mean_neg_logprob,
                "perplexity": self.overall.perplexity,
            },
        }


def _finish(sums: dict[str, ExactSum], counts: dict[str, int], unit: str) -> PerplexityReport:
    domains = {}
    pooled = ExactSum()
    total_count = 0
    for name in sums:
        mean_neg = -sums[name].value / counts[name]
        domains[name] = DomainPerplexity(
            token_count=counts[name],
            mean_neg_logprob=mean_neg,
            perplexity=math.exp(mean_neg),
        )
        pooled.merge(sums[name])
        total_count += counts[name]
    mean_neg = -pooled.value / total_count
    overall = DomainPerplexity(
        token_count=total_count, mean_neg_logprob=mean_neg, perplexity=math.exp(mean_neg)
    )
    return PerplexityReport(domains=domains, overall=overall, unit=unit)


def perplexity_from_logprobs(
    records: Iterable[LogProbRecord],
    domain_of: Callable[[str], str] | None = None,
    unit: str = "token",
) -> PerplexityReport:
    """Single streaming pass: per-domain PPL = exp(-sum(logprob)/N)."""
    if domain_of is None:
        domain_of = lambda doc_id: "all"  # noqa: E731
    sums: dict[str, ExactSum] = {}
    counts: dict[str, int] = {}
    index = -1
    for index, record in enumerate(records):
        if not math.isfinite(record.logprob):
            raise NonFiniteLogProb(
                f"record {index} has non-finite logprob {record.logprob!r}", index
            )
        domain = domain_of(record.doc_id)
        sums.setdefault(domain, ExactSum()).add(record.logprob)
        counts[domain] = counts.get(domain, 0) + 1
    if index < 0:
        raise EmptyInput("no log-probability records")
    return _finish(sums, counts, unit)


def perplexity_of_markov(
    model: MarkovModel, corpus: Corpus, alpha: float = 0.1
) -> PerplexityReport:
    """Score every sentence with the Markov model; the per-sentence token
    count includes the END transition."""
    sums: dict[str, ExactSum] = {}
    counts: dict[str, int] = {}
    any_sentence = False
    for doc in corpus.documents:
        domain = doc.meta.get("domain", "all")
        for sentence in doc.sentences:
            any_sentence = True
            forms = sentence.forms()
            sums.setdefault(domain, ExactSum()).add(score(model, forms, alpha))
            counts[domain] = counts.get(domain, 0) + len(forms) + 1
    if not any_sentence:
        raise EmptyInput("corpus has no sentences")
    return _finish(sums, counts, "word")


def read_logprob_file(path: str | Path) -> tuple[dict, list[LogProbRecord]]:
    """Read the JSONL interchange format.

    The first line is a header ``{"log_base": "e"|"2"|"10", "unit": ...}``;
    each following line is ``{"doc_id", "token", "logprob"}``.  Log-probs are
    converted to natural log on load and validated (finite, <= 0).
    """
    records: list[LogProbRecord] = []
    with open(path, encoding="utf-8") as fh:
        header_line = fh.readline()
        if not header_line.strip():
            raise EmptyInput(f"{path}: missing header line")
        try:
            header = json.loads(header_line)
        except json.JSONDecodeError as exc:
            raise InvalidRecord(f"{path}: bad header: {exc}", 0) from exc
        base = str(header.get("log_base", "e"))
        if base not in LOG_BASE_FACTORS:
            raise InvalidRecord(f"{path}: unknown log_base {base!r}", 0)
        factor = LOG_BASE_FACTORS[base]
        for index, line in enumerate(fh):
            if not line.strip():
                continue
            try:
                raw = json.loads(line)
            except json.JSONDecodeError as exc:
                raise InvalidRecord(f"{path}: record {index}: {exc}", index) from exc
            try:
                logprob = float(raw["logprob"]) * factor
                record = LogProbRecord(
                    doc_id=str(raw["doc_id"]), token=str(raw["token"]), logprob=logprob
                )
            except (KeyError, TypeError, ValueError) as exc:
                raise InvalidRecord(
                    f"{path}: record {index}: malformed fields ({exc})", index
                ) from exc
            if not math.isfinite(record.logprob):
                raise NonFiniteLogProb(
                    f"{path}: record {index}: non-finite logprob", index
                )
            if record.logprob > 0:
                raise InvalidRecord(
                    f"{path}: record {index}: positive logprob {record.logprob}", index
                )
            records.append(record)
    if not records:
        raise EmptyInput(f"{path}: no records after header")
    return header, records
