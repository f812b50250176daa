"""Token-frequency reference dictionary and top-permille hit rate.

The top set for N permille holds the ceil(N/1000 * types) most frequent
forms.  Ties at the boundary break by (count desc, form asc), which also
fixes the order of the persisted TSV, so two builds over the same corpus are
byte-identical.
"""

from __future__ import annotations

from pathlib import Path
from typing import Iterable, Sequence

from .corpusio import Corpus
from .errors import EmptyInput, WorkbenchError


class InvalidDictionary(WorkbenchError):
    """A persisted dictionary file that fails validation on load."""

    code = "freqdict.InvalidDictionary"


class FreqDict:
    """Immutable frequency dictionary over surface forms."""

    def __init__(self, counts: dict[str, int], lowercased: bool = False):
        if not counts:
            raise EmptyInput("frequency dictionary has no entries")
        self.counts = dict(counts)
        self.total = sum(self.counts.values())
        self.lowercased = lowercased
        # rank order is the tie-break order: count desc, form asc
        self._ranked = sorted(self.counts, key=lambda f: (-self.counts[f], f))

    def __len__(self) -> int:
        return len(self.counts)

    def top_set(self, permille: int) -> frozenset[str]:
        """The top ceil(permille/1000 * types) forms by rank."""
        if not 1 <= permille <= 1000:
            raise ValueError("permille must be in [1, 1000]")
        k = -(-permille * len(self._ranked) // 1000)  # ceiling division
        return frozenset(self._ranked[:k])

    def save_tsv(self, path: str | Path) -> None:
        """Two-column TSV (form, count) in rank order."""
        with open(path, "w", encoding="utf-8") as fh:
            for form in self._ranked:
                fh.write(f"{form}\t{self.counts[form]}\n")

    @classmethod
    def load_tsv(cls, path: str | Path, lowercased: bool = False) -> "FreqDict":
        counts: dict[str, int] = {}
        previous: tuple[int, str] | None = None
        with open(path, encoding="utf-8") as fh:
            for line_no, line in enumerate(fh, start=1):
                line = line.rstrip("\n")
                if not line:
                    continue
                parts = line.split("\t")
                if len(parts) != 2 or not parts[1].isdigit() or int(parts[1]) < 1:
                    raise InvalidDictionary(
                        f"{path}:{line_no}: expected 'form<TAB>count'"
                    )
                form, count = parts[0], int(parts[1])
                if form in counts:
                    raise InvalidDictionary(f"{path}:{line_no}: duplicate form {form!r}")
                key = (-count, form)
                if previous is not None and key < previous:
                    raise InvalidDictionary(
                        f"{path}:{line_no}: entries not in (count desc, form asc) order"
                    )
                previous = key
                counts[form] = count
        if not counts:
            raise InvalidDictionary(f"{path}: dictionary file is empty")
        return cls(counts, lowercased=lowercased)


def build_freq_dict(corpus: Corpus, lowercase: bool = False) -> FreqDict:
    """Count surface forms over a corpus."""
    counts: dict[str, int] = {}
    for form in corpus.token_forms():
        if lowercase:
            form = form.lower()
        counts[form] = counts.get(form, 0) + 1
    if not counts:
        raise EmptyInput("corpus has no tokens")
    return FreqDict(counts, lowercased=lowercase)


def top_hit_rate(
    text_tokens: Sequence[str] | Iterable[str], fdict: FreqDict, permille: int
) -> float:
    """Fraction of tokens whose form is in the dictionary's top set.

    Tokens absent from the dictionary count as misses.  When the dictionary
    was built lowercased, incoming tokens are lowercased to match.
    """
    tokens = list(text_tokens)
    if not tokens:
        raise EmptyInput("no tokens to rate")
    top = fdict.top_set(permille)
    if fdict.lowercased:
        tokens = [t.lower() for t in tokens]
    hits = sum(1 for t in tokens if t in top)
    return hits / len(tokens)
