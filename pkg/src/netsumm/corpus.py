"""Corpus loading, tokenization, and TF-IDF term vectors.

Documents are kept in lexicographic id order everywhere so node indices
are stable across runs over the same corpus bytes.
"""

from __future__ import annotations

import json
import math
import re
from collections import Counter
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable

_TOKEN_RE = re.compile(r"[a-z0-9]+")

# Small built-in English stopword list, enough to keep similarity graphs
# from being dominated by function words. Toggle via drop_stopwords=False.
STOPWORDS = frozenset(
    """
    a an and are as at be but by for from had has have he her his if in into
    is it its no nor not of on or she such that the their them then there
    these they this to was we were what when which who will with you your
    """.split()
)


class CorpusError(ValueError):
    """Malformed corpus input: bad path, duplicate id, empty body, bad jsonl."""


@dataclass(frozen=True)
class Document:
    id: str
    text: str
    relevant: bool | None = None  # ground-truth flag, evaluation only


@dataclass(frozen=True)
class Corpus:
    """Documents plus the derived vocabulary and per-document term counts.

    vocabulary[tid] is the term string for term-id tid; term_ids inverts it.
    counts[i] maps term-id -> raw count for documents[i].
    """

    documents: tuple[Document, ...]
    vocabulary: tuple[str, ...]
    term_ids: dict[str, int]
    counts: tuple[dict[int, int], ...]

    @property
    def ids(self) -> tuple[str, ...]:
        return tuple(d.id for d in self.documents)

    def index_of(self, doc_id: str) -> int:
        try:
            return self.ids.index(doc_id)
        except ValueError:
            raise CorpusError(f"unknown document id: {doc_id!r}") from None


def tokenize(text: str, drop_stopwords: bool = True) -> list[str]:
    """Lowercase, split on non-alphanumeric runs, drop tokens shorter than 2."""
    tokens = [t for t in _TOKEN_RE.findall(text.lower()) if len(t) >= 2]
    if drop_stopwords:
        tokens = [t for t in tokens if t not in STOPWORDS]
    return tokens


def build_corpus(documents: Iterable[Document], drop_stopwords: bool = True) -> Corpus:
    """Order documents by id, tokenize, and build the vocabulary."""
    docs = sorted(documents, key=lambda d: d.id)
    seen: set[str] = set()
    for d in docs:
        if d.id in seen:
            raise CorpusError(f"duplicate document id: {d.id!r}")
        seen.add(d.id)
        if not d.text.strip():
            raise CorpusError(f"empty document body: {d.id!r}")
    if not docs:
        raise CorpusError("no documents found")

    raw_counts = [Counter(tokenize(d.text, drop_stopwords)) for d in docs]
    vocabulary = tuple(sorted(set().union(*[c.keys() for c in raw_counts])))
    term_ids = {t: i for i, t in enumerate(vocabulary)}
    counts = tuple({term_ids[t]: c for t, c in sorted(rc.items())} for rc in raw_counts)
    return Corpus(tuple(docs), vocabulary, term_ids, counts)


def load_corpus(path: str | Path, format: str = "jsonl", drop_stopwords: bool = True) -> Corpus:
    """Load a corpus from a *.txt directory or a jsonl file.

    plain-dir: every *.txt file is one document, id = filename stem.
    jsonl: one object per line with "id" and "text", optional "relevant".
    """
    path = Path(path)
    if not path.exists():
        raise CorpusError(f"corpus path does not exist: {path}")
    if format == "plain-dir":
        if not path.is_dir():
            raise CorpusError(f"plain-dir corpus must be a directory: {path}")
        docs = [Document(p.stem, p.read_text(encoding="utf-8")) for p in sorted(path.glob("*.txt"))]
    elif format == "jsonl":
        docs = list(_read_jsonl(path))
    else:
        raise CorpusError(f"unknown corpus format: {format!r}")
    return build_corpus(docs, drop_stopwords)


def _read_jsonl(path: Path) -> Iterable[Document]:
    with path.open(encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise CorpusError(f"{path}:{lineno}: malformed jsonl line: {exc}") from None
            if not isinstance(obj, dict) or "id" not in obj or "text" not in obj:
                raise CorpusError(f"{path}:{lineno}: jsonl line must carry 'id' and 'text'")
            relevant = obj.get("relevant")
            if relevant is not None and not isinstance(relevant, bool):
                raise CorpusError(f"{path}:{lineno}: 'relevant' must be boolean")
            yield Document(str(obj["id"]), str(obj["text"]), relevant)


def write_jsonl(corpus: Corpus, path: str | Path) -> None:
    """Persist a corpus snapshot (one document object per line, corpus order)."""
    with Path(path).open("w", encoding="utf-8") as fh:
        for d in corpus.documents:
            obj: dict = {"id": d.id, "text": d.text}
            if d.relevant is not None:
                obj["relevant"] = d.relevant
            fh.write(json.dumps(obj, sort_keys=True) + "\n")


def tfidf(corpus: Corpus) -> list[dict[int, float]]:
    """Per-document sparse TF-IDF vectors, corpus order.

    entry(t, d) = count(t, d) * ln(N / df(t)). Terms present in every
    document have idf 0 and are dropped, so stored weights are positive.
    """
    n = len(corpus.documents)
    if n == 0:
        raise CorpusError("corpus is empty")
    df: Counter[int] = Counter()
    for c in corpus.counts:
        df.update(c.keys())
    idf = {t: math.log(n / d) for t, d in df.items() if d < n}
    return [{t: c * idf[t] for t, c in counts.items() if t in idf} for counts in corpus.counts]


def top_terms(corpus: Corpus, member_ids: Iterable[str], m: int) -> list[tuple[str, float]]:
    """Top m terms by summed TF-IDF over the member documents.

    Ties break lexicographically by term string; fewer than m terms are
    returned when the members' vocabulary is smaller.
    """
    if m < 1:
        raise ValueError(f"m must be >= 1, got {m}")
    members = sorted(set(member_ids))
    indices = [corpus.index_of(i) for i in members]
    vectors = tfidf(corpus)
    agg: dict[int, float] = {}
    for i in indices:
        for t, w in vectors[i].items():
            agg[t] = agg.get(t, 0.0) + w
    ranked = sorted(agg.items(), key=lambda kv: (-kv[1], corpus.vocabulary[kv[0]]))
    return [(corpus.vocabulary[t], w) for t, w in ranked[:m]]
