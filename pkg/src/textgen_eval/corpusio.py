"""Corpus ingestion: CoNLL-U treebanks and raw text behind one document model.

Both input kinds produce the same Token/Sentence/Document/Corpus types so the
profiling, frequency and Markov modules never care where text came from.
Plain-text sentences get a degenerate single-root tree and are flagged, so
syntactic features can refuse them instead of reporting garbage.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterator

from .errors import WorkbenchError

# The 17 universal POS tags; anything else is normalised to "X".
UD_TAGS = frozenset(
    {
        "ADJ", "ADP", "ADV", "AUX", "CCONJ", "DET", "INTJ", "NOUN", "NUM",
        "PART", "PRON", "PROPN", "PUNCT", "SCONJ", "SYM", "VERB", "X",
    }
)

# Characters detached from token edges by the plain-text tokenizer.
DETACHABLE_PUNCT = frozenset(".,;:!?()\"'«»")

_MWT_ID = re.compile(r"\d+-\d+")
_EMPTY_NODE_ID = re.compile(r"\d+\.\d+")
_SENT_SPLIT = re.compile(r"(?<=[.!?])\s+")


class MalformedLine(WorkbenchError):
    """A CoNLL-U line that does not follow the format."""

    code = "corpusio.MalformedLine"

    def __init__(self, message: str, line: int, file: str | None = None):
        super().__init__(message)
        self.message = message
        self.line = line
        self.file = file

    def __str__(self) -> str:
        prefix = f"{self.file}:" if self.file else ""
        return f"{prefix}line {self.line}: {self.message}"


class InvalidTree(WorkbenchError):
    """A sentence whose head links do not form a single rooted tree."""

    code = "corpusio.InvalidTree"

    def __init__(self, message: str, line: int, file: str | None = None):
        super().__init__(message)
        self.message = message
        self.line = line
        self.file = file

    def __str__(self) -> str:
        prefix = f"{self.file}:" if self.file else ""
        return f"{prefix}line {self.line}: {self.message}"


@dataclass(frozen=True)
class Token:
    """One syntactic word: 1-based index, surface form, UPOS, head (0 = root)."""

    index: int
    form: str
    upos: str = "X"
    head: int = 0
    deprel: str = "dep"
    lemma: str | None = None


@dataclass
class Sentence:
    tokens: list[Token]
    source_id: str | None = None
    # True for sentences whose tree is the synthetic single-root convention
    # produced by the plain-text tokenizer; syntactic features skip these.
    synthetic_tree: bool = False

    @classmethod
    def from_forms(
        cls, forms: list[str], source_id: str | None = None
    ) -> "Sentence":
        """Build a sentence with the degenerate tree: token 1 is root, the
        rest attach to it."""
        if not forms:
            raise ValueError("a sentence needs at least one token")
        tokens = [Token(index=1, form=forms[0], upos="X", head=0, deprel="root")]
        for i, form in enumerate(forms[1:], start=2):
            tokens.append(Token(index=i, form=form, upos="X", head=1, deprel="dep"))
        return cls(tokens=tokens, synthetic_tree=True, source_id=source_id)

    def forms(self) -> list[str]:
        return [t.form for t in self.tokens]

    def __len__(self) -> int:
        return len(self.tokens)


@dataclass
class Document:
    sentences: list[Sentence]
    meta: dict[str, str] = field(default_factory=dict)


@dataclass
class Corpus:
    documents: list[Document]
    token_count: int = field(init=False, default=0)
    sentence_count: int = field(init=False, default=0)

    def __post_init__(self):
        self.sentence_count = sum(len(d.sentences) for d in self.documents)
        self.token_count = sum(
            len(s.tokens) for d in self.documents for s in d.sentences
        )

    def counts_consistent(self) -> bool:
        """Re-derive the cached totals and compare."""
        return self.sentence_count == sum(
            len(d.sentences) for d in self.documents
        ) and self.token_count == sum(
            len(s.tokens) for d in self.documents for s in d.sentences
        )

    def sentences(self) -> Iterator[Sentence]:
        for doc in self.documents:
            yield from doc.sentences

    def token_forms(self) -> Iterator[str]:
        for sent in self.sentences():
            for tok in sent.tokens:
                yield tok.form


def validate_tree(sentence: Sentence, lines: list[int] | None = None,
                  file: str | None = None) -> None:
    """Check the single-rooted-tree invariant by walking every head chain.

    ``lines`` maps token position to the source line number used in errors;
    defaults to token indices when the sentence did not come from a file.
    """
    tokens = sentence.tokens
    n = len(tokens)
    if n == 0:
        raise InvalidTree("empty sentence", line=lines[0] if lines else 0, file=file)
    if lines is None:
        lines = [t.index for t in tokens]

    for pos, tok in enumerate(tokens):
        if tok.index != pos + 1:
            raise MalformedLine(
                f"token id {tok.index} out of sequence (expected {pos + 1})",
                line=lines[pos], file=file,
            )
        if tok.head == tok.index:
            raise InvalidTree(
                f"token {tok.index} is its own head", line=lines[pos], file=file
            )
        if tok.head > n:
            raise InvalidTree(
                f"token {tok.index} has dangling head {tok.head}",
                line=lines[pos], file=file,
            )

    roots = [pos for pos, t in enumerate(tokens) if t.head == 0]
    if not roots:
        raise InvalidTree("no root token", line=lines[0], file=file)
    if len(roots) > 1:
        raise InvalidTree("multiple root tokens", line=lines[roots[1]], file=file)

    # every head chain must reach the root in at most n steps
    for pos, tok in enumerate(tokens):
        current = tok.index
        for _ in range(n):
            head = tokens[current - 1].head
            if head == 0:
                break
            current = head
        else:
            raise InvalidTree(
                f"cycle in head chain starting at token {tok.index}",
                line=lines[pos], file=file,
            )


def parse_conllu(text: str, file: str | None = None) -> Document:
    """Parse CoNLL-U text into a Document.

    Multiword-token range lines and empty nodes are dropped; syntactic words
    are the unit of every downstream count.  Raises MalformedLine or
    InvalidTree with the offending line number.
    """
    sentences: list[Sentence] = []
    pending: list[Token] = []
    pending_lines: list[int] = []
    sent_id: str | None = None

    def flush() -> None:
        nonlocal pending, pending_lines, sent_id
        if not pending:
            sent_id = None
            return
        sentence = Sentence(tokens=pending, source_id=sent_id)
        validate_tree(sentence, lines=pending_lines, file=file)
        sentences.append(sentence)
        pending = []
        pending_lines = []
        sent_id = None

    for line_no, raw in enumerate(text.split("\n"), start=1):
        line = raw.rstrip("\r")
        if line == "":
            flush()
            continue
        if line.startswith("#"):
            if line.startswith("# sent_id"):
                _, _, value = line.partition("=")
                sent_id = value.strip() or None
            continue
        cols = line.split("\t")
        if len(cols) != 10:
            raise MalformedLine(
                f"expected 10 tab-separated columns, got {len(cols)}",
                line=line_no, file=file,
            )
        token_id = cols[0]
        if _MWT_ID.fullmatch(token_id) or _EMPTY_NODE_ID.fullmatch(token_id):
            continue  # range lines and empty nodes are not syntactic words
        if not token_id.isdigit() or int(token_id) < 1:
            raise MalformedLine(
                f"non-numeric token id {token_id!r}", line=line_no, file=file
            )
        if not cols[6].isdigit():
            raise MalformedLine(
                f"non-numeric head {cols[6]!r}", line=line_no, file=file
            )
        index = int(token_id)
        expected = len(pending) + 1
        if index != expected:
            raise MalformedLine(
                f"token id {index} out of sequence (expected {expected})",
                line=line_no, file=file,
            )
        upos = cols[3] if cols[3] in UD_TAGS else "X"
        pending.append(
            Token(
                index=index,
                form=cols[1],
                upos=upos,
                head=int(cols[6]),
                deprel=cols[7],
                lemma=None if cols[2] == "_" else cols[2],
            )
        )
        pending_lines.append(line_no)

    flush()
    return Document(sentences=sentences)


def to_conllu(document: Document) -> str:
    """Serialize a Document back to CoNLL-U; inverse of parse_conllu."""
    blocks: list[str] = []
    for sentence in document.sentences:
        lines: list[str] = []
        if sentence.source_id:
            lines.append(f"# sent_id = {sentence.source_id}")
        for t in sentence.tokens:
            lines.append(
                "\t".join(
                    (
                        str(t.index), t.form, t.lemma or "_", t.upos, "_",
                        "_", str(t.head), t.deprel, "_", "_",
                    )
                )
            )
        blocks.append("\n".join(lines))
    return "\n\n".join(blocks) + ("\n" if blocks else "")


def _detach_punct(chunk: str) -> list[str]:
    """Split leading/trailing punctuation characters off a whitespace token."""
    i, j = 0, len(chunk)
    while i < j and chunk[i] in DETACHABLE_PUNCT:
        i += 1
    while j > i and chunk[j - 1] in DETACHABLE_PUNCT:
        j -= 1
    tokens = list(chunk[:i])
    if i < j:
        tokens.append(chunk[i:j])
    tokens.extend(chunk[j:])
    return tokens


def tokenize_plain(text: str) -> list[Sentence]:
    """Whitespace tokenization with punctuation detachment.

    Sentences split on newlines and on sentence-final ``.!?`` followed by
    whitespace.  Each sentence carries the degenerate single-root tree.
    """
    sentences: list[Sentence] = []
    for line in text.splitlines():
        for piece in _SENT_SPLIT.split(line):
            forms: list[str] = []
            for chunk in piece.split():
                forms.extend(_detach_punct(chunk))
            if forms:
                sentences.append(Sentence.from_forms(forms))
    return sentences


def _domain_of(relative: Path) -> str | None:
    parts = relative.parts
    return parts[0] if len(parts) > 1 else None


def read_corpus(path: str | Path, format: str = "conllu") -> Corpus:
    """Read a file or a directory tree into a Corpus.

    Every regular file becomes one Document.  Under a directory root, the
    first-level subdirectory name becomes the document's ``domain`` meta, so
    a ``<root>/<domain>/<file>`` layout yields domain-tagged documents.
    """
    if format not in ("conllu", "plain"):
        raise ValueError(f"unknown corpus format {format!r}")
    root = Path(path)
    if root.is_dir():
        files = sorted(
            (f for f in root.rglob("*") if f.is_file()),
            key=lambda f: f.relative_to(root).as_posix(),
        )
        documents = []
        for f in files:
            rel = f.relative_to(root)
            doc = _read_document(f, format)
            doc.meta["source"] = rel.as_posix()
            domain = _domain_of(rel)
            if domain:
                doc.meta["domain"] = domain
            documents.append(doc)
        return Corpus(documents=documents)
    doc = _read_document(root, format)
    doc.meta["source"] = root.name
    return Corpus(documents=[doc])


def _read_document(file: Path, format: str) -> Document:
    text = file.read_text(encoding="utf-8")
    if format == "conllu":
        return parse_conllu(text, file=str(file))
    return Document(sentences=tokenize_plain(text))
