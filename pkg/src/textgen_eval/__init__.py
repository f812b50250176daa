"""Generator-agnostic evaluation workbench for text generators.

Subpackages cover corpus ingestion (CoNLL-U and plain text), linguistic
profiling, token-frequency analysis, a Markov-chain baseline generator,
perplexity reporting, human-evaluation stimulus construction, the annotation
HTTP service, and result aggregation.
"""

__version__ = "0.1.0"
