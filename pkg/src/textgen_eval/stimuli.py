"""Stimulus material and session assignment for the human evaluation.

The design crosses three systems (gold, model, baseline) with four
prompt+completion length conditions (5+5, 5+10, 10+5, 10+10): twelve
stimuli per prompt.  Stimulus ids are opaque hashes so that serialized
session plans and served payloads never reveal which system produced a
text; the id -> system blinding map lives in its own file and is only
joined back in at export time.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping, Sequence

from .corpusio import Corpus
from .errors import WorkbenchError
from .rng import Xorshift64Star, derive_seed

SYSTEMS = ("gold", "model", "baseline")
CONDITIONS = ("5+5", "5+10", "10+5", "10+10")
PROMPT_LENGTHS = (5, 10)
MIN_GOLD_TOKENS = 20  # the 10+10 gold condition needs this many


class NotEnoughEligible(WorkbenchError):
    code = "stimuli.NotEnoughEligible"

    def __init__(self, needed: int, found: int):
        super().__init__(
            f"needed {needed} sentences of >= {MIN_GOLD_TOKENS} tokens, found {found}"
        )
        self.needed = needed
        self.found = found


class MissingCompletion(WorkbenchError):
    code = "stimuli.MissingCompletion"


class CompletionTooShort(WorkbenchError):
    code = "stimuli.CompletionTooShort"


class BadSubjectCount(WorkbenchError):
    code = "stimuli.BadSubjectCount"


def condition_lengths(condition: str) -> tuple[int, int]:
    prompt_len, completion_len = condition.split("+")
    return int(prompt_len), int(completion_len)


@dataclass
class PromptPair:
    """A gold sentence with its 5- and 10-token prompt prefixes."""

    prompt_id: str
    gold_sentence: list[str]
    p5: list[str] = field(default_factory=list)
    p10: list[str] = field(default_factory=list)

    def __post_init__(self):
        if not self.p5:
            self.p5 = self.gold_sentence[:5]
        if not self.p10:
            self.p10 = self.gold_sentence[:10]

    def prompt(self, length: int) -> list[str]:
        if length == 5:
            return self.p5
        if length == 10:
            return self.p10
        raise ValueError(f"unsupported prompt length {length}")

    def to_dict(self) -> dict:
        return {
            "prompt_id": self.prompt_id,
            "gold_sentence": self.gold_sentence,
            "p5": self.p5,
            "p10": self.p10,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "PromptPair":
        return cls(
            prompt_id=d["prompt_id"],
            gold_sentence=list(d["gold_sentence"]),
            p5=list(d["p5"]),
            p10=list(d["p10"]),
        )


@dataclass
class Stimulus:
    stimulus_id: str
    prompt_id: str
    system: str
    condition: str
    text: list[str]


@dataclass
class StimulusSet:
    prompts: list[PromptPair]
    stimuli: list[Stimulus]

    def blinding_map(self) -> dict[str, str]:
        return {s.stimulus_id: s.system for s in self.stimuli}

    def by_id(self) -> dict[str, Stimulus]:
        return {s.stimulus_id: s for s in self.stimuli}

    def lookup(self, prompt_id: str, system: str, condition: str) -> Stimulus:
        for s in self.stimuli:
            if (s.prompt_id, s.system, s.condition) == (prompt_id, system, condition):
                return s
        raise KeyError((prompt_id, system, condition))


@dataclass
class RankingItem:
    prompt_id: str
    # stimulus ids in the order shown to the subject
    stimulus_ids: list[str]
    # 1-based positions into the id-sorted triple that produced that order
    display_order: list[int]


@dataclass
class ClassificationItem:
    prompt_id: str
    stimulus_id: str


@dataclass
class SessionPlan:
    task: str  # "ranking" | "classification"
    subject_id: str
    items: list  # RankingItem or ClassificationItem
    rng_seed: int

    def to_dict(self) -> dict:
        if self.task == "ranking":
            items = [
                {
                    "prompt_id": it.prompt_id,
                    "stimulus_ids": it.stimulus_ids,
                    "display_order": it.display_order,
                }
                for it in self.items
            ]
        else:
            items = [
                {"prompt_id": it.prompt_id, "stimulus_id": it.stimulus_id}
                for it in self.items
            ]
        return {
            "task": self.task,
            "subject_id": self.subject_id,
            "rng_seed": self.rng_seed,
            "items": items,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "SessionPlan":
        if d["task"] == "ranking":
            items = [
                RankingItem(
                    prompt_id=it["prompt_id"],
                    stimulus_ids=list(it["stimulus_ids"]),
                    display_order=list(it["display_order"]),
                )
                for it in d["items"]
            ]
        else:
            items = [
                ClassificationItem(prompt_id=it["prompt_id"], stimulus_id=it["stimulus_id"])
                for it in d["items"]
            ]
        return cls(
            task=d["task"], subject_id=d["subject_id"], items=items,
            rng_seed=d["rng_seed"],
        )


def _stimulus_id(prompt_id: str, system: str, condition: str) -> str:
    digest = hashlib.sha256(f"{prompt_id}/{system}/{condition}".encode()).hexdigest()
    return f"st{digest[:12]}"


def select_prompts(corpus: Corpus, n: int, rng_seed: int) -> list[PromptPair]:
    """Uniform sample without replacement among sentences long enough for
    every gold condition."""
    eligible = [s for s in corpus.sentences() if len(s) >= MIN_GOLD_TOKENS]
    if len(eligible) < n:
        raise NotEnoughEligible(needed=n, found=len(eligible))
    rng = Xorshift64Star(rng_seed)
    pool = list(range(len(eligible)))
    # partial Fisher-Yates: the first n slots end up a uniform sample
    for i in range(n):
        j = i + rng.below(len(pool) - i)
        pool[i], pool[j] = pool[j], pool[i]
    width = max(3, len(str(max(n - 1, 0))))
    return [
        PromptPair(prompt_id=f"p{i:0{width}d}", gold_sentence=eligible[pool[i]].forms())
        for i in range(n)
    ]


def build_stimulus_set(
    prompts: Sequence[PromptPair],
    completions: Mapping[tuple[str, int, str], Sequence[str]],
) -> StimulusSet:
    """Cross prompts with systems and conditions.

    ``completions`` maps (prompt_id, prompt_len, system) to the full
    generated continuation (>= 10 tokens); each condition slices it, so the
    5-token completion is always a prefix of the 10-token one.  Gold
    completions come from the source sentence itself.
    """
    stimuli: list[Stimulus] = []
    for prompt in prompts:
        for system in SYSTEMS:
            for plen in PROMPT_LENGTHS:
                if system == "gold":
                    continuation = prompt.gold_sentence[plen:plen + 10]
                else:
                    key = (prompt.prompt_id, plen, system)
                    if key not in completions:
                        raise MissingCompletion(
                            f"no completion for prompt {prompt.prompt_id}, "
                            f"prompt_len {plen}, system {system}"
                        )
                    continuation = list(completions[key])
                if len(continuation) < 10:
                    raise CompletionTooShort(
                        f"completion for prompt {prompt.prompt_id}, prompt_len {plen}, "
                        f"system {system} has {len(continuation)} tokens; need 10"
                    )
                for clen in (5, 10):
                    condition = f"{plen}+{clen}"
                    stimuli.append(
                        Stimulus(
                            stimulus_id=_stimulus_id(prompt.prompt_id, system, condition),
                            prompt_id=prompt.prompt_id,
                            system=system,
                            condition=condition,
                            text=prompt.prompt(plen) + list(continuation[:clen]),
                        )
                    )
    return StimulusSet(prompts=list(prompts), stimuli=stimuli)


def assign_ranking(
    sset: StimulusSet, subjects: Sequence[str], rng_seed: int
) -> list[SessionPlan]:
    """Between-subject split over the four length conditions.

    Each session holds one item per prompt: the three system variants for
    the subject's condition, in an independently shuffled display order.
    """
    if not subjects or len(subjects) % len(CONDITIONS) != 0:
        raise BadSubjectCount(
            f"ranking needs a positive multiple of {len(CONDITIONS)} subjects, "
            f"got {len(subjects)}"
        )
    subject_list = list(subjects)
    Xorshift64Star(derive_seed(rng_seed, "ranking/subjects")).shuffle(subject_list)
    group_size = len(subject_list) // len(CONDITIONS)

    by_key = {(s.prompt_id, s.system, s.condition): s for s in sset.stimuli}
    plans: list[SessionPlan] = []
    for pos, subject in enumerate(subject_list):
        condition = CONDITIONS[pos // group_size]
        subject_seed = derive_seed(rng_seed, f"ranking/subject/{subject}")
        rng = Xorshift64Star(subject_seed)
        prompt_order = rng.permutation(len(sset.prompts))
        items: list[RankingItem] = []
        for prompt_pos in prompt_order:
            prompt = sset.prompts[prompt_pos]
            triple = sorted(
                (by_key[(prompt.prompt_id, system, condition)].stimulus_id
                 for system in SYSTEMS)
            )
            perm = rng.permutation(3)
            items.append(
                RankingItem(
                    prompt_id=prompt.prompt_id,
                    stimulus_ids=[triple[k] for k in perm],
                    display_order=[k + 1 for k in perm],
                )
            )
        plans.append(
            SessionPlan(task="ranking", subject_id=subject, items=items,
                        rng_seed=subject_seed)
        )
    return plans


def assign_classification(
    sset: StimulusSet, subjects: Sequence[str], rng_seed: int,
    balanced: bool = True,
) -> list[SessionPlan]:
    """Between-subject assignment over all twelve system x condition cells.

    Balanced mode (default) uses a Latin square per block of twelve
    subjects: after a seeded relabeling of cells and prompts, subject s gets
    cell (i + s) mod 12 for prompt i.  Within a block every stimulus is
    served exactly once and every subject sees every prompt exactly once.
    Random mode draws the cell independently per (subject, prompt).
    """
    n_cells = len(SYSTEMS) * len(CONDITIONS)
    if not subjects or len(subjects) % n_cells != 0:
        raise BadSubjectCount(
            f"classification needs a positive multiple of {n_cells} subjects, "
            f"got {len(subjects)}"
        )
    subject_list = list(subjects)
    Xorshift64Star(derive_seed(rng_seed, "classification/subjects")).shuffle(subject_list)

    cells = [(system, condition) for system in SYSTEMS for condition in CONDITIONS]
    by_key = {(s.prompt_id, s.system, s.condition): s for s in sset.stimuli}
    n_prompts = len(sset.prompts)

    plans: list[SessionPlan] = []
    for pos, subject in enumerate(subject_list):
        block, in_block = divmod(pos, n_cells)
        subject_seed = derive_seed(rng_seed, f"classification/subject/{subject}")
        rng = Xorshift64Star(subject_seed)
        if balanced:
            cell_perm = Xorshift64Star(
                derive_seed(rng_seed, f"classification/block/{block}/cells")
            ).permutation(n_cells)
            prompt_perm = Xorshift64Star(
                derive_seed(rng_seed, f"classification/block/{block}/prompts")
            ).permutation(n_prompts)
            assignments = [
                (prompt_perm[i], cells[cell_perm[(i + in_block) % n_cells]])
                for i in range(n_prompts)
            ]
        else:
            assignments = [
                (i, cells[rng.below(n_cells)]) for i in range(n_prompts)
            ]
        items = [
            ClassificationItem(
                prompt_id=sset.prompts[prompt_pos].prompt_id,
                stimulus_id=by_key[
                    (sset.prompts[prompt_pos].prompt_id, system, condition)
                ].stimulus_id,
            )
            for prompt_pos, (system, condition) in assignments
        ]
        rng.shuffle(items)
        plans.append(
            SessionPlan(task="classification", subject_id=subject, items=items,
                        rng_seed=subject_seed)
        )
    return plans


# ---------------------------------------------------------------------------
# serialization

def save_stimulus_set(sset: StimulusSet, directory: str | Path) -> None:
    """Write three files: stimuli.json (served material, no system labels),
    prompts.json (source sentences) and blinding.json (id -> system)."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    payload = {
        "stimuli": [
            {
                "stimulus_id": s.stimulus_id,
                "prompt_id": s.prompt_id,
                "condition": s.condition,
                "text": s.text,
            }
            for s in sset.stimuli
        ],
    }
    _write_json(directory / "stimuli.json", payload)
    save_prompts(sset.prompts, directory / "prompts.json")
    _write_json(directory / "blinding.json", sset.blinding_map())


def load_stimulus_set(directory: str | Path) -> StimulusSet:
    directory = Path(directory)
    payload = json.loads((directory / "stimuli.json").read_text(encoding="utf-8"))
    blinding = json.loads((directory / "blinding.json").read_text(encoding="utf-8"))
    prompts = load_prompts(directory / "prompts.json")
    stimuli = [
        Stimulus(
            stimulus_id=s["stimulus_id"],
            prompt_id=s["prompt_id"],
            system=blinding[s["stimulus_id"]],
            condition=s["condition"],
            text=list(s["text"]),
        )
        for s in payload["stimuli"]
    ]
    return StimulusSet(prompts=prompts, stimuli=stimuli)


def save_plans(plans: Sequence[SessionPlan], path: str | Path) -> None:
    _write_json(Path(path), {"plans": [p.to_dict() for p in plans]})


def load_plans(path: str | Path) -> list[SessionPlan]:
    data = json.loads(Path(path).read_text(encoding="utf-8"))
    return [SessionPlan.from_dict(d) for d in data["plans"]]


def save_prompts(prompts: Sequence[PromptPair], path: str | Path) -> None:
    _write_json(Path(path), {"prompts": [p.to_dict() for p in prompts]})


def load_prompts(path: str | Path) -> list[PromptPair]:
    data = json.loads(Path(path).read_text(encoding="utf-8"))
    return [PromptPair.from_dict(p) for p in data["prompts"]]


def read_completions(paths: Sequence[str | Path]) -> dict[tuple[str, int, str], list[str]]:
    """Read completion JSONL records {prompt_id, prompt_len, system, tokens}."""
    completions: dict[tuple[str, int, str], list[str]] = {}
    for path in paths:
        with open(path, encoding="utf-8") as fh:
            for line in fh:
                if not line.strip():
                    continue
                record = json.loads(line)
                key = (record["prompt_id"], int(record["prompt_len"]), record["system"])
                completions[key] = list(record["tokens"])
    return completions


def _write_json(path: Path, payload) -> None:
    path.write_text(
        json.dumps(payload, ensure_ascii=False, indent=2, sort_keys=True) + "\n",
        encoding="utf-8",
    )
