"""Reference BLEU-4 / ROUGE-L calculator used to produce the metric worksheet.

Written independently of the C++ implementation: Counter-based clipping and a
memoised recursive LCS.

    python3 tools/metric_oracle.py > tests/fixtures/metric_worksheet.json
"""

import json
import math
import sys
from collections import Counter
from functools import lru_cache

PAIRS = [
    ("returns the scaled value of price", "returns the scaled value of price"),
    ("returns the incremented value of count", "returns the scaled value of count"),
    ("get user name", "get the user name"),
    ("a b c d", "a b c e"),
    ("parse http response body now", "parse response"),
]


def grams(words, n):
    return Counter(tuple(words[i:i + n]) for i in range(len(words) - n + 1))


def bleu(pairs):
    match = [0] * 4
    total = [0] * 4
    hyp_len = sum(len(h) for h, _ in pairs)
    ref_len = sum(len(r) for _, r in pairs)
    for h, r in pairs:
        for n in range(1, 5):
            hg, rg = grams(h, n), grams(r, n)
            total[n - 1] += sum(hg.values())
            match[n - 1] += sum((hg & rg).values())
    if hyp_len == 0 or match[0] == 0:
        return 0.0
    precisions = [match[0] / total[0]] + [(match[n] + 1) / (total[n] + 1) for n in range(1, 4)]
    bp = 1.0 if hyp_len > ref_len else math.exp(1 - ref_len / hyp_len)
    return bp * math.exp(sum(math.log(p) for p in precisions) / 4)


def lcs(a, b):
    @lru_cache(maxsize=None)
    def go(i, j):
        if i == len(a) or j == len(b):
            return 0
        if a[i] == b[j]:
            return 1 + go(i + 1, j + 1)
        return max(go(i + 1, j), go(i, j + 1))

    return go(0, 0)


def rouge_l(h, r, beta=1.2):
    l = lcs(tuple(h), tuple(r))
    if l == 0:
        return 0.0
    p, rec = l / len(h), l / len(r)
    return (1 + beta ** 2) * p * rec / (rec + beta ** 2 * p)


def main():
    rows = []
    split = [(h.split(), r.split()) for h, r in PAIRS]
    for (h, r), (hs, rs) in zip(PAIRS, split):
        rows.append({"hypothesis": h, "reference": r, "bleu": bleu([(hs, rs)]), "rouge_l": rouge_l(hs, rs)})
    out = {
        "pairs": rows,
        "corpus_bleu": bleu(split),
        "corpus_rouge_l": sum(rouge_l(h, r) for h, r in split) / len(split),
    }
    json.dump(out, sys.stdout, indent=2)
    sys.stdout.write("\n")


if __name__ == "__main__":
    main()
