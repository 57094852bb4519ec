"""Lexicon-based news polarity scores.

Pipeline per day and asset: split each article into sentences, keep the
sentences that mention the asset, score them with the weighted lexicon rule,
sum per article and average over the day's articles.
"""

from __future__ import annotations

import csv
import json
import re
from collections import defaultdict
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np

from .data import fmt

NEGATIONS = frozenset({"not", "no", "never", "n't"})
WEIGHTED_POS = frozenset({"adverb", "verb", "adjective"})
POS_CLASSES = frozenset({"adverb", "verb", "adjective", "other"})
EMPHASIS = 1.5

ABBREVIATIONS = frozenset(
    """u.s. u.k. e.u. u.n. mr. mrs. ms. dr. prof. inc. corp. co. ltd. jr. sr. st.
    vs. etc. e.g. i.e. jan. feb. mar. apr. jun. jul. aug. sep. sept. oct. nov. dec.
    no. approx. dept. est. fig.""".split()
)

_TERMINAL = re.compile(r"[.!?]+(?=\s|$)")
_TOKEN = re.compile(r"[a-z0-9]+(?:'[a-z0-9]+)*")


@dataclass(frozen=True)
class Lexicon:
    entries: Mapping[str, float]
    pos_tags: Mapping[str, str] = field(default_factory=dict)

    def __post_init__(self):
        for key, score in self.entries.items():
            if not -1.0 <= score <= 1.0:
                raise ValueError(f"lexicon score for {key!r} outside [-1, 1]: {score}")
        for key, tag in self.pos_tags.items():
            if tag not in POS_CLASSES:
                raise ValueError(f"unknown part-of-speech class {tag!r} for {key!r}")
        object.__setattr__(self, "_max_len", max((len(k.split()) for k in self.entries), default=1))

    @classmethod
    def from_rows(cls, rows: Iterable[tuple[str, float, str]]) -> "Lexicon":
        entries, tags = {}, {}
        for token, score, pos in rows:
            key = " ".join(tokenize(token))
            entries[key] = float(score)
            tags[key] = pos
        return cls(entries, tags)

    def weight(self, key: str) -> float:
        return EMPHASIS if self.pos_tags.get(key, "other") in WEIGHTED_POS else 1.0

    @property
    def max_phrase_len(self) -> int:
        return self._max_len


def load_lexicon(path) -> Lexicon:
    """Tab-separated ``token<TAB>score<TAB>pos-class`` lines; ``#`` comments."""
    rows = []
    with Path(path).open() as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.rstrip("\n")
            if not line.strip() or line.lstrip().startswith("#"):
                continue
            parts = line.split("\t")
            if len(parts) == 2:
                parts.append("other")
            if len(parts) != 3:
                raise ValueError(f"{path}:{lineno}: expected token, score, pos-class")
            rows.append((parts[0], float(parts[1]), parts[2].strip().lower()))
    return Lexicon.from_rows(rows)


def tokenize(text: str) -> list[str]:
    """Lowercase word tokens; apostrophes survive only inside words."""
    return _TOKEN.findall(text.lower().replace("’", "'"))


def is_negation(token: str) -> bool:
    return token in NEGATIONS or token.endswith("n't")


def split_sentences(text: str, abbreviations=ABBREVIATIONS) -> list[str]:
    out, start = [], 0
    for match in _TERMINAL.finditer(text):
        end = match.end()
        word = text[start:end].split()[-1].lower() if text[start:end].split() else ""
        if word in abbreviations:
            continue
        sentence = text[start:end].strip()
        if sentence:
            out.append(sentence)
        start = end
    tail = text[start:].strip()
    if tail:
        out.append(tail)
    return out


def relevant(sentence: str, watchlist: Mapping[str, Sequence[str]]) -> dict[str, bool]:
    """Whole-token, case-insensitive match of any watch term, per asset."""
    tokens = tokenize(sentence)
    joined = " " + " ".join(tokens) + " "
    out = {}
    for asset, terms in watchlist.items():
        hit = False
        for term in terms:
            t = " ".join(tokenize(term))
            if t and f" {t} " in joined:
                hit = True
                break
        out[asset] = hit
    return out


def score_sentence(sentence: str, lexicon: Lexicon) -> float:
    """Weighted lexicon polarity averaged over the sentence's token count.

    Multi-word entries match greedily (longest first).  An odd number of
    negation tokens flips the sign.
    """
    tokens = tokenize(sentence)
    if not tokens:
        return 0.0
    total = 0.0
    k = 0
    longest = lexicon.max_phrase_len
    while k < len(tokens):
        for size in range(min(longest, len(tokens) - k), 0, -1):
            key = " ".join(tokens[k:k + size])
            if key in lexicon.entries:
                total += lexicon.entries[key] * lexicon.weight(key)
                k += size
                break
        else:
            k += 1
    pol = total / len(tokens)
    if sum(is_negation(t) for t in tokens) % 2 == 1:
        pol = -pol
    return pol


@dataclass(frozen=True)
class ScoredDocument:
    sentences: tuple[tuple[str, bool, float], ...]
    pol: float


def score_document(text: str, lexicon: Lexicon, watch_terms: Sequence[str]) -> ScoredDocument:
    rows = []
    for s in split_sentences(text):
        rel = relevant(s, {"_": watch_terms})["_"]
        rows.append((s, rel, score_sentence(s, lexicon) if rel else 0.0))
    return ScoredDocument(tuple(rows), float(sum(p for _, rel, p in rows if rel)))


def daily_score(documents: Sequence[str], watchlist: Mapping[str, Sequence[str]],
                lexicon: Lexicon) -> dict[str, float]:
    """Mean document polarity per asset; NaN when there are no documents."""
    out = {}
    for asset, terms in watchlist.items():
        pols = [score_document(doc, lexicon, terms).pol for doc in documents]
        out[asset] = float(np.mean(pols)) if pols else float("nan")
    return out


# -- corpora ----------------------------------------------------------------------

@dataclass(frozen=True)
class Article:
    date: str
    text: str
    assets: tuple[str, ...] = ()


def load_corpus(path) -> list[Article]:
    """Read a ``.jsonl`` (date, text, optional assets list) or CSV corpus
    (date, text, optional ``assets`` column with ``;``-separated tags)."""
    path = Path(path)
    out = []
    if path.suffix in (".jsonl", ".json"):
        with path.open() as fh:
            for line in fh:
                if line.strip():
                    rec = json.loads(line)
                    out.append(Article(str(rec["date"]), rec["text"], tuple(rec.get("assets", ()))))
    else:
        with path.open(newline="") as fh:
            for rec in csv.DictReader(fh):
                tags = tuple(t for t in (rec.get("assets") or "").split(";") if t)
                out.append(Article(rec["date"].strip(), rec["text"], tags))
    return out


def score_corpus(articles: Sequence[Article], watchlist: Mapping[str, Sequence[str]],
                 lexicon: Lexicon) -> tuple[list[str], np.ndarray]:
    """Daily D2 per asset.  An article tagged with assets only counts toward
    those assets; untagged articles count toward every asset."""
    by_day: dict[str, dict[str, list[str]]] = defaultdict(lambda: defaultdict(list))
    for art in articles:
        for asset in watchlist:
            if not art.assets or asset in art.assets:
                by_day[art.date][asset].append(art.text)
    days = sorted(by_day)
    assets = list(watchlist)
    d2 = np.full((len(days), len(assets)), np.nan)
    for k, day in enumerate(days):
        for i, asset in enumerate(assets):
            docs = by_day[day][asset]
            if docs:
                d2[k, i] = daily_score(docs, {asset: watchlist[asset]}, lexicon)[asset]
    return days, d2


def write_scores_csv(path, days, d1, d2, names) -> None:
    with Path(path).open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["date", "d1", *names])
        for k, day in enumerate(days):
            cells = ["" if not np.isfinite(v) else fmt(v) for v in (d1[k], *d2[k])]
            w.writerow([day, *cells])
