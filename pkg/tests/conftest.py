"""Shared fixture builders."""

from __future__ import annotations

import random

from textgen_eval.corpusio import Corpus, Document, Sentence, Token
from textgen_eval.stimuli import StimulusSet, build_stimulus_set, select_prompts

UPOS_POOL = (
    "NOUN", "VERB", "ADJ", "ADV", "DET", "ADP", "AUX", "PRON", "PUNCT", "PROPN",
)
DEPREL_POOL = ("nsubj", "obj", "obl", "advmod", "det", "case", "dep")

# one (name, passed, detail) entry per acceptance criterion, printed after
# the run so the lines survive pytest's output capture
ACCEPTANCE_RESULTS: list[tuple[str, bool, str]] = []


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for name, passed, detail in ACCEPTANCE_RESULTS:
        status = "PASS" if passed else "FAIL"
        terminalreporter.write_line(f"{status} {name}: {detail}")


def corpus_from_token_lists(token_lists, domain: str | None = None) -> Corpus:
    doc = Document(
        sentences=[Sentence.from_forms(list(forms)) for forms in token_lists],
        meta={"domain": domain} if domain else {},
    )
    return Corpus(documents=[doc])


def fixture_stimulus_set(
    n_prompts: int = 6, sentence_length: int = 25, rng_seed: int = 11
) -> StimulusSet:
    """Small full-factorial stimulus set; token shapes avoid the system
    label strings so blinding scans stay meaningful."""
    corpus = corpus_from_token_lists(
        [
            [f"w{i:02d}t{j:02d}" for j in range(sentence_length)]
            for i in range(n_prompts + 4)
        ]
    )
    pairs = select_prompts(corpus, n_prompts, rng_seed=rng_seed)
    completions = {
        (p.prompt_id, plen, system): [
            f"{system[:1]}{p.prompt_id}l{plen}k{k:02d}" for k in range(10)
        ]
        for p in pairs
        for plen in (5, 10)
        for system in ("model", "baseline")
    }
    return build_stimulus_set(pairs, completions)


def random_tree_sentence(pyrng: random.Random, n: int) -> Sentence:
    """Random valid dependency tree: heads follow a random attachment order,
    so the graph is acyclic with exactly one root by construction."""
    order = list(range(1, n + 1))
    pyrng.shuffle(order)
    heads = {order[0]: 0}
    for pos in range(1, n):
        heads[order[pos]] = pyrng.choice(order[:pos])
    tokens = []
    for index in range(1, n + 1):
        upos = pyrng.choice(UPOS_POOL)
        if heads[index] == 0:
            deprel = "root"
        else:
            roll = pyrng.random()
            # make sure aux/cop/punct deprels occur so every branch of the
            # clause and link rules gets exercised
            if roll < 0.15:
                deprel = pyrng.choice(("aux", "cop", "aux:pass"))
            elif upos == "PUNCT" and roll < 0.6:
                deprel = "punct"
            else:
                deprel = pyrng.choice(DEPREL_POOL)
        form = "t" + "".join(
            pyrng.choice("abcdefg") for _ in range(pyrng.randint(1, 6))
        )
        tokens.append(
            Token(index=index, form=form, upos=upos, head=heads[index], deprel=deprel)
        )
    return Sentence(tokens=tokens)
