"""Text-overlap metrics implemented from scratch.

Shared tokenization for the word-level metrics: lowercase, split on
Unicode whitespace, strip leading/trailing punctuation per token.  chrF
works on raw characters with all whitespace removed and no lowercasing.
Absolute values are therefore comparable only across runs of this
implementation, not with resource-backed metric packages.
"""

from __future__ import annotations

import math
import string
from collections import Counter
from typing import Iterable

_PUNCT = string.punctuation

METRIC_KEYS = ("bleu4", "rougeLsum", "meteor", "chrf")


def tokenize(text: str) -> list[str]:
    out = []
    for raw in text.lower().split():
        tok = raw.strip(_PUNCT)
        if tok:
            out.append(tok)
    return out


def _ngrams(seq, n: int) -> Counter:
    return Counter(tuple(seq[i : i + n]) for i in range(len(seq) - n + 1))


def bleu4(hyp: str, ref: str) -> float:
    """Sentence BLEU with n=1..4 modified precisions and brevity penalty.

    No smoothing: any zero n-gram precision (including hypotheses shorter
    than 4 tokens) scores 0.
    """
    h, r = tokenize(hyp), tokenize(ref)
    if not h:
        return 0.0
    log_sum = 0.0
    for n in range(1, 5):
        hc = _ngrams(h, n)
        total = sum(hc.values())
        if total == 0:
            return 0.0
        rc = _ngrams(r, n)
        clipped = sum(min(count, rc[g]) for g, count in hc.items())
        if clipped == 0:
            return 0.0
        log_sum += math.log(clipped / total)
    bp = 1.0 if len(h) >= len(r) else math.exp(1.0 - len(r) / len(h))
    return bp * math.exp(log_sum / 4.0)


def split_sentences(text: str) -> list[str]:
    """Split on newlines and terminal .!? characters."""
    parts: list[str] = []
    for line in text.split("\n"):
        start = 0
        for i, ch in enumerate(line):
            if ch in ".!?":
                parts.append(line[start : i + 1])
                start = i + 1
        if start < len(line):
            parts.append(line[start:])
    return [p for p in (s.strip() for s in parts) if p]


def _lcs_match_positions(a: list[str], b: list[str]) -> set[int]:
    """Positions in ``b`` taking part in one LCS of a and b (DP table)."""
    la, lb = len(a), len(b)
    dp = [[0] * (lb + 1) for _ in range(la + 1)]
    for i in range(la - 1, -1, -1):
        row, nxt = dp[i], dp[i + 1]
        for j in range(lb - 1, -1, -1):
            if a[i] == b[j]:
                row[j] = 1 + nxt[j + 1]
            else:
                row[j] = max(nxt[j], row[j + 1])
    out: set[int] = set()
    i = j = 0
    while i < la and j < lb:
        if a[i] == b[j]:
            out.add(j)
            i += 1
            j += 1
        elif dp[i + 1][j] >= dp[i][j + 1]:
            i += 1
        else:
            j += 1
    return out


def rouge_l_sum_f1(hyp: str, ref: str) -> float:
    """Summary-level ROUGE-L F1 via union-LCS over sentence pairs."""
    hyp_sents = [s for s in (tokenize(x) for x in split_sentences(hyp)) if s]
    ref_sents = [s for s in (tokenize(x) for x in split_sentences(ref)) if s]
    if not hyp_sents or not ref_sents:
        return 0.0
    hits = 0
    for rs in ref_sents:
        union: set[int] = set()
        for hs in hyp_sents:
            union |= _lcs_match_positions(hs, rs)
        hits += len(union)
    if hits == 0:
        return 0.0
    precision = hits / sum(len(s) for s in hyp_sents)
    recall = hits / sum(len(s) for s in ref_sents)
    return 2 * precision * recall / (precision + recall)


_STEM_SUFFIXES = ("ing", "tion", "ers", "ies", "ed", "es", "ly", "er", "s")


def _stem(tok: str) -> str:
    for suf in _STEM_SUFFIXES:
        if tok.endswith(suf) and len(tok) - len(suf) >= 3:
            return tok[: -len(suf)]
    return tok


def meteor(hyp: str, ref: str) -> float:
    """METEOR with exact + suffix-stem stages and no synonym dictionary.

    F_mean = 10PR/(R+9P); fragmentation penalty 0.5*(chunks/matches)^3.
    """
    h, r = tokenize(hyp), tokenize(ref)
    if not h or not r:
        return 0.0
    used_ref: set[int] = set()
    pairs: list[tuple[int, int]] = []
    residual: list[int] = []
    for i, tok in enumerate(h):
        for j, rt in enumerate(r):
            if j not in used_ref and tok == rt:
                used_ref.add(j)
                pairs.append((i, j))
                break
        else:
            residual.append(i)
    for i in residual:
        hs = _stem(h[i])
        for j, rt in enumerate(r):
            if j not in used_ref and hs == _stem(rt):
                used_ref.add(j)
                pairs.append((i, j))
                break
    matches = len(pairs)
    if matches == 0:
        return 0.0
    precision = matches / len(h)
    recall = matches / len(r)
    f_mean = 10 * precision * recall / (recall + 9 * precision)
    pairs.sort()
    chunks = 1 + sum(
        1
        for (hi, ri), (hj, rj) in zip(pairs, pairs[1:])
        if not (hj == hi + 1 and rj == ri + 1)
    )
    penalty = 0.5 * (chunks / matches) ** 3
    return f_mean * (1 - penalty)


def chrf(hyp: str, ref: str, beta: float = 2.0, max_n: int = 6) -> float:
    """chrF over character n-grams 1..6 with whitespace removed, in [0,100].

    Orders where neither side has n-grams are skipped (effective order).
    """
    h = "".join(hyp.split())
    r = "".join(ref.split())
    precisions: list[float] = []
    recalls: list[float] = []
    for n in range(1, max_n + 1):
        hc = _ngrams(h, n)
        rc = _ngrams(r, n)
        h_total = sum(hc.values())
        r_total = sum(rc.values())
        if h_total == 0 and r_total == 0:
            continue
        overlap = sum(min(count, rc[g]) for g, count in hc.items())
        precisions.append(overlap / h_total if h_total else 0.0)
        recalls.append(overlap / r_total if r_total else 0.0)
    if not precisions:
        return 0.0
    avg_p = sum(precisions) / len(precisions)
    avg_r = sum(recalls) / len(recalls)
    denom = beta * beta * avg_p + avg_r
    if denom == 0:
        return 0.0
    return 100.0 * (1 + beta * beta) * avg_p * avg_r / denom


def score_pair(hyp: str, ref: str) -> dict[str, float]:
    return {
        "bleu4": bleu4(hyp, ref),
        "rougeLsum": rouge_l_sum_f1(hyp, ref),
        "meteor": meteor(hyp, ref),
        "chrf": chrf(hyp, ref),
    }


def score_corpus(pairs: Iterable[tuple[str, str]]) -> dict[str, float]:
    """Mean of per-pair scores over (hypothesis, reference) pairs."""
    rows = [score_pair(h, r) for h, r in pairs]
    if not rows:
        return {k: 0.0 for k in METRIC_KEYS}
    return {k: sum(row[k] for row in rows) / len(rows) for k in METRIC_KEYS}
