"""Independent brute-force oracle for the text-overlap metrics.

Written before the package implementation and kept deliberately naive:
explicit n-gram enumeration, memoized recursive LCS, Fraction arithmetic
wherever the formulas are rational.  Run as a script to (re)generate
``metrics_fixture.json`` next to this file.
"""

from __future__ import annotations

import json
import math
import string
import sys
from fractions import Fraction
from functools import lru_cache
from pathlib import Path

PUNCT = string.punctuation


def tokens(text):
    out = []
    for raw in text.lower().split():
        t = raw.strip(PUNCT)
        if t:
            out.append(t)
    return out


def ngram_counts(seq, n):
    counts = {}
    for i in range(len(seq) - n + 1):
        g = tuple(seq[i : i + n])
        counts[g] = counts.get(g, 0) + 1
    return counts


def bleu4_oracle(hyp, ref):
    h, r = tokens(hyp), tokens(ref)
    if not h:
        return 0.0
    precisions = []
    for n in range(1, 5):
        hc = ngram_counts(h, n)
        rc = ngram_counts(r, n)
        total = sum(hc.values())
        if total == 0:
            return 0.0
        clipped = sum(min(c, rc.get(g, 0)) for g, c in hc.items())
        precisions.append(Fraction(clipped, total))
    if any(p == 0 for p in precisions):
        return 0.0
    geo = math.exp(sum(math.log(float(p)) for p in precisions) / 4.0)
    bp = 1.0 if len(h) >= len(r) else math.exp(1.0 - len(r) / len(h))
    return bp * geo


def split_sentences(text):
    parts = []
    for line in text.split("\n"):
        buf = []
        for ch in line:
            buf.append(ch)
            if ch in ".!?":
                parts.append("".join(buf))
                buf = []
        if buf:
            parts.append("".join(buf))
    return [p for p in (s.strip() for s in parts) if p]


def lcs_positions(a, b):
    """Indices into ``b`` participating in one LCS of a and b (recursive)."""

    @lru_cache(maxsize=None)
    def length(i, j):
        if i == len(a) or j == len(b):
            return 0
        if a[i] == b[j]:
            return 1 + length(i + 1, j + 1)
        return max(length(i + 1, j), length(i, j + 1))

    out = []
    i = j = 0
    while i < len(a) and j < len(b):
        if a[i] == b[j]:
            out.append(j)
            i += 1
            j += 1
        elif length(i + 1, j) >= length(i, j + 1):
            i += 1
        else:
            j += 1
    return out


def rouge_l_sum_oracle(hyp, ref):
    hyp_sents = [tokens(s) for s in split_sentences(hyp)]
    ref_sents = [tokens(s) for s in split_sentences(ref)]
    hyp_sents = [s for s in hyp_sents if s]
    ref_sents = [s for s in ref_sents if s]
    if not hyp_sents or not ref_sents:
        return 0.0
    hits = 0
    for rs in ref_sents:
        union = set()
        for hs in hyp_sents:
            union.update(lcs_positions(hs, rs))
        hits += len(union)
    m = sum(len(s) for s in ref_sents)
    n = sum(len(s) for s in hyp_sents)
    if hits == 0:
        return 0.0
    p = Fraction(hits, n)
    r = Fraction(hits, m)
    return float(2 * p * r / (p + r))


SUFFIXES = ("ing", "tion", "ers", "ies", "ed", "es", "ly", "er", "s")


def stem(tok):
    for suf in SUFFIXES:
        if tok.endswith(suf) and len(tok) - len(suf) >= 3:
            return tok[: -len(suf)]
    return tok


def meteor_oracle(hyp, ref):
    h, r = tokens(hyp), tokens(ref)
    if not h or not r:
        return 0.0
    pairs = []
    used_r = set()
    # stage 1: exact, leftmost-available reference position
    hyp_residual = []
    for i, ht in enumerate(h):
        match = None
        for j, rt in enumerate(r):
            if j not in used_r and ht == rt:
                match = j
                break
        if match is None:
            hyp_residual.append(i)
        else:
            used_r.add(match)
            pairs.append((i, match))
    # stage 2: stem on the residue
    for i in hyp_residual:
        hs = stem(h[i])
        for j, rt in enumerate(r):
            if j not in used_r and hs == stem(rt):
                used_r.add(j)
                pairs.append((i, j))
                break
    m = len(pairs)
    if m == 0:
        return 0.0
    p = Fraction(m, len(h))
    rr = Fraction(m, len(r))
    fmean = 10 * p * rr / (rr + 9 * p)
    pairs.sort()
    chunks = 1
    for (hi, ri), (hj, rj) in zip(pairs, pairs[1:]):
        if not (hj == hi + 1 and rj == ri + 1):
            chunks += 1
    penalty = Fraction(1, 2) * Fraction(chunks, m) ** 3
    return float(fmean * (1 - penalty))


def chrf_oracle(hyp, ref, beta=2, max_n=6):
    h = "".join(hyp.split())
    r = "".join(ref.split())
    ps, rs = [], []
    for n in range(1, max_n + 1):
        hc = ngram_counts(list(h), n)
        rc = ngram_counts(list(r), n)
        htotal = sum(hc.values())
        rtotal = sum(rc.values())
        if htotal == 0 and rtotal == 0:
            continue
        overlap = sum(min(c, rc.get(g, 0)) for g, c in hc.items())
        ps.append(Fraction(overlap, htotal) if htotal else Fraction(0))
        rs.append(Fraction(overlap, rtotal) if rtotal else Fraction(0))
    if not ps:
        return 0.0
    avg_p = sum(ps) / len(ps)
    avg_r = sum(rs) / len(rs)
    denom = beta * beta * avg_p + avg_r
    if denom == 0:
        return 0.0
    return float(100 * (1 + beta * beta) * avg_p * avg_r / denom)


FIXTURE_PAIRS = [
    ("identity long", "the ablation study in section five is missing entirely",
     "the ablation study in section five is missing entirely"),
    ("disjoint", "alpha beta gamma delta", "epsilon zeta eta theta"),
    ("bp case", "a b c d", "a b c d e"),
    ("lcs case", "a b c", "a c"),
    ("swap", "a b", "b a"),
    ("chrf case", "abcd", "abce"),
    ("stems", "the experiments were missing", "an experiment is miss"),
    ("multi sentence", "Results look weak. Add error bars to Figure 2.",
     "The results are weak! Please add error bars in Figure 2."),
    ("partial overlap", "the baselines are missing from table three",
     "missing baselines undermine the claims in table three"),
    ("punctuation", "Add, seeds; and report variance.",
     "add seeds and report variance"),
    ("short vs long",
     "clarify notation",
     "please clarify the notation used in equation four and define all symbols"),
    ("repeated tokens", "more more more ablations ablations",
     "more ablations please"),
]


def main():
    rows = []
    for name, hyp, ref in FIXTURE_PAIRS:
        rows.append(
            {
                "name": name,
                "hyp": hyp,
                "ref": ref,
                "bleu4": bleu4_oracle(hyp, ref),
                "rougeLsum": rouge_l_sum_oracle(hyp, ref),
                "meteor": meteor_oracle(hyp, ref),
                "chrf": chrf_oracle(hyp, ref),
            }
        )
    out = Path(__file__).with_name("metrics_fixture.json")
    out.write_text(json.dumps(rows, indent=2) + "\n")
    print(f"wrote {out} ({len(rows)} pairs)")


if __name__ == "__main__":
    sys.exit(main())
