"""Markov-chain baseline generator with exact counts and smoothed scoring.

States are tuples of ``state_size`` preceding forms; sentences are padded
with BEGIN markers and terminated by END, so counts over the padded sequence
are exact corpus counts.  Sampling walks the next-symbol list in
(count desc, form asc) order against a cumulative threshold drawn from the
documented xorshift64* generator, which makes generation reproducible bit for
bit across platforms (see rng.py for the full contract).
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

from .corpusio import Sentence
from .errors import EmptyInput, WorkbenchError
from .rng import Xorshift64Star

BEGIN = "___BEGIN__"
END = "___END__"


class UnseenState(WorkbenchError):
    """A continuation was requested from a state never seen in training."""

    code = "markov.UnseenState"


class InvalidModel(WorkbenchError):
    """A persisted model file that fails invariant checks on load."""

    code = "markov.InvalidModel"


@dataclass
class Continuation:
    """Generated tokens plus whether the chain hit END before the quota."""

    tokens: list[str]
    ended: bool


class MarkovModel:
    """Immutable transition table: state tuple -> {next form or END: count}."""

    def __init__(self, state_size: int, transitions: dict[tuple[str, ...], dict[str, int]]):
        self.state_size = state_size
        self.transitions = transitions
        self.vocab = frozenset(
            sym for nexts in transitions.values() for sym in nexts if sym != END
        )
        # sampling and serialization order: count desc, then form asc
        self._ordered: dict[tuple[str, ...], list[tuple[str, int]]] = {
            state: sorted(nexts.items(), key=lambda kv: (-kv[1], kv[0]))
            for state, nexts in transitions.items()
        }
        self._totals = {state: sum(n.values()) for state, n in transitions.items()}

    @property
    def begin_state(self) -> tuple[str, ...]:
        return (BEGIN,) * self.state_size

    def total(self, state: tuple[str, ...]) -> int:
        return self._totals[state]

    def probability(self, state: tuple[str, ...], symbol: str) -> float:
        """Unsmoothed count ratio for a stored state."""
        return self.transitions[state].get(symbol, 0) / self._totals[state]

    def total_transition_count(self) -> int:
        return sum(self._totals.values())

    def validate(self) -> None:
        for state, nexts in self.transitions.items():
            if len(state) != self.state_size:
                raise InvalidModel(f"state {state!r} has wrong length")
            if not nexts:
                raise InvalidModel(f"state {state!r} has no transitions")
            for sym, count in nexts.items():
                if count < 1:
                    raise InvalidModel(f"non-positive count for {state!r} -> {sym!r}")
            for part in state:
                if part != BEGIN and part not in self.vocab:
                    raise InvalidModel(
                        f"state component {part!r} missing from vocabulary"
                    )


def train(sentences: Iterable[Sentence | Sequence[str]], state_size: int) -> MarkovModel:
    """Count transitions over BEGIN-padded, END-terminated form sequences."""
    if state_size < 1:
        raise ValueError("state_size must be >= 1")
    transitions: dict[tuple[str, ...], dict[str, int]] = {}
    n_sentences = 0
    for sentence in sentences:
        forms = sentence.forms() if isinstance(sentence, Sentence) else list(sentence)
        if not forms:
            continue
        for form in forms:
            if form in (BEGIN, END):
                raise ValueError(f"token {form!r} collides with a reserved marker")
        n_sentences += 1
        padded = [BEGIN] * state_size + forms + [END]
        for i in range(len(padded) - state_size):
            state = tuple(padded[i:i + state_size])
            nxt = padded[i + state_size]
            bucket = transitions.setdefault(state, {})
            bucket[nxt] = bucket.get(nxt, 0) + 1
    if n_sentences == 0:
        raise EmptyInput("no non-empty sentences to train on")
    return MarkovModel(state_size=state_size, transitions=transitions)


def _sample(model: MarkovModel, state: tuple[str, ...], rng: Xorshift64Star) -> str:
    ordered = model._ordered.get(state)
    if ordered is None:
        raise UnseenState(f"state {state!r} never occurred in training")
    threshold = rng.below(model.total(state))
    cumulative = 0
    for symbol, count in ordered:
        cumulative += count
        if threshold < cumulative:
            return symbol
    raise AssertionError("cumulative walk exhausted")  # pragma: no cover


def generate(model: MarkovModel, max_tokens: int, rng_seed: int) -> list[str]:
    """Sample a sentence from the BEGIN state; stops at END or max_tokens."""
    rng = Xorshift64Star(rng_seed)
    state = model.begin_state
    out: list[str] = []
    while len(out) < max_tokens:
        symbol = _sample(model, state, rng)
        if symbol == END:
            break
        out.append(symbol)
        state = state[1:] + (symbol,)
    return out


def continue_from(
    model: MarkovModel, prompt: Sequence[str], n_tokens: int, rng_seed: int
) -> Continuation:
    """Generate n_tokens continuing from the last state_size prompt tokens.

    Raises UnseenState when that final state never occurred in training; no
    silent backoff.  Hitting END early returns a shorter, flagged result.
    """
    if len(prompt) < model.state_size:
        raise ValueError(
            f"prompt has {len(prompt)} tokens; need at least {model.state_size}"
        )
    state = tuple(prompt[-model.state_size:])
    if state not in model.transitions:
        raise UnseenState(f"state {state!r} never occurred in training")
    rng = Xorshift64Star(rng_seed)
    out: list[str] = []
    while len(out) < n_tokens:
        symbol = _sample(model, state, rng)
        if symbol == END:
            return Continuation(tokens=out, ended=True)
        out.append(symbol)
        state = state[1:] + (symbol,)
    return Continuation(tokens=out, ended=False)


def score(model: MarkovModel, tokens: Sequence[str], alpha: float = 0.1) -> float:
    """Total natural-log probability of a token sequence, END included.

    Stored states score with add-alpha smoothing over vocab plus END; a
    transition outside the model's knowledge (unseen state, or a next symbol
    outside vocab plus END) falls back to uniform 1/(|vocab|+1).
    """
    if alpha <= 0:
        raise ValueError("alpha must be positive")
    support_size = len(model.vocab) + 1  # vocabulary plus END
    uniform = 1.0 / support_size
    state = model.begin_state
    total_logp = 0.0
    for symbol in (*tokens, END):
        nexts = model.transitions.get(state)
        in_support = symbol == END or symbol in model.vocab
        if nexts is None or not in_support:
            p = uniform
        else:
            count = nexts.get(symbol, 0)
            p = (count + alpha) / (model.total(state) + alpha * support_size)
        total_logp += math.log(p)
        state = state[1:] + (symbol,)
    return total_logp


def save_model(model: MarkovModel, path: str | Path) -> None:
    """JSON-lines: a header record, then one record per state in sorted order."""
    with open(path, "w", encoding="utf-8") as fh:
        header = {"format": "markov-model", "version": 1, "state_size": model.state_size}
        fh.write(json.dumps(header, sort_keys=True) + "\n")
        for state in sorted(model.transitions):
            record = {"state": list(state), "next": [
                [sym, count] for sym, count in model._ordered[state]
            ]}
            fh.write(json.dumps(record, ensure_ascii=False, sort_keys=True) + "\n")


def load_model(path: str | Path) -> MarkovModel:
    with open(path, encoding="utf-8") as fh:
        header_line = fh.readline()
        if not header_line:
            raise InvalidModel(f"{path}: empty model file")
        try:
            header = json.loads(header_line)
        except json.JSONDecodeError as exc:
            raise InvalidModel(f"{path}: bad header: {exc}") from exc
        if header.get("format") != "markov-model":
            raise InvalidModel(f"{path}: not a markov model file")
        state_size = header.get("state_size")
        if not isinstance(state_size, int) or state_size < 1:
            raise InvalidModel(f"{path}: bad state_size {state_size!r}")
        transitions: dict[tuple[str, ...], dict[str, int]] = {}
        for line_no, line in enumerate(fh, start=2):
            if not line.strip():
                continue
            try:
                record = json.loads(line)
            except json.JSONDecodeError as exc:
                raise InvalidModel(f"{path}:{line_no}: bad record: {exc}") from exc
            state = tuple(record["state"])
            pairs = record["next"]
            expected = sorted(pairs, key=lambda kv: (-kv[1], kv[0]))
            if pairs != expected:
                raise InvalidModel(
                    f"{path}:{line_no}: next-counts not in (count desc, form asc) order"
                )
            if state in transitions:
                raise InvalidModel(f"{path}:{line_no}: duplicate state {state!r}")
            transitions[state] = {sym: count for sym, count in pairs}
    model = MarkovModel(state_size=state_size, transitions=transitions)
    model.validate()
    return model
