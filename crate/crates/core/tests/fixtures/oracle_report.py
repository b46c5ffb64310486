#!/usr/bin/env python3
"""Count the expected corpus report straight from the planted truth.

Usage: oracle_report.py TRUTH_JSON LEXICON_TXT OUT_JSON

Everything here is computed directly from truth.json with its own string
metrics and acronym scorer; nothing is shared with the Rust code.
"""
import json
import sys
from fractions import Fraction
from functools import lru_cache

METRIC_THRESHOLD = 0.5
METRIC_W = 0.5
W_CAPITAL, W_LOWER, W_OTHER, THRESHOLD_FACTOR = 2.0, 1.1, 0.1, 0.5
BOUNDARIES = [1990, 2000, 2010]
TOP_K = 20
STRICT, LOOSE = 1.0, 0.9
ERA = 2000
MARGIN = 0.2


def norm(s):
    return "".join(c for c in s.lower() if c.isalnum())


def grams(s, n):
    return {s[i:i + n] for i in range(len(s) - n + 1)}


def exact_match(last, key):
    return norm(last) in norm(key)


def asymmetric_match(last, key):
    a, c = norm(last), norm(key)
    if not a or not c:
        return False
    n = min(3, len(a), len(c))
    ga, gc = grams(a, n), grams(c, n)
    union = len(ga | gc)
    only = len(ga - gc)
    value = (union ** METRIC_W - only ** METRIC_W) / union ** METRIC_W
    return value >= METRIC_THRESHOLD


def acronym_score(key, lasts, weights=(W_CAPITAL, W_LOWER, W_OTHER)):
    w_capital, w_lower, w_other = weights
    target = []
    for last in lasts:
        for k, ch in enumerate(last):
            if k == 0:
                w = w_capital if ch.isupper() else w_lower
            else:
                w = w_other
            target.append((ch.lower(), w))
    key = key.lower()

    @lru_cache(maxsize=None)
    def best(i, j):
        # best weight using key[i:] and target[j:]
        if i == len(key) or j == len(target):
            return 0 * w_other
        options = [best(i + 1, j), best(i, j + 1)]
        if key[i] == target[j][0]:
            options.append(target[j][1] + best(i + 1, j + 1))
        return max(options)

    return best(0, 0)


def acronym_match(key, lasts):
    if not lasts:
        return False
    threshold = THRESHOLD_FACTOR * W_CAPITAL * len(lasts)
    score = acronym_score(key, lasts)
    exact = acronym_score(key, lasts, (Fraction(2), Fraction(11, 10), Fraction(1, 10)))
    if abs(score - threshold) < 1e-9 and not (score == threshold and exact == threshold):
        # a near-tie whose float value depends on summation order
        raise SystemExit("acronym score on the threshold for key %r; regenerate" % key)
    return score > threshold


def ratio(num, den):
    return {"num": num, "den": den, "value": (num / den) if den else None}


def occurrences(text, term):
    n, i = 0, text.find(term)
    while i != -1:
        n += 1
        i = text.find(term, i + 1)
    return n


def main(truth_path, lexicon_path, out_path):
    with open(truth_path) as f:
        truth = json.load(f)
    with open(lexicon_path) as f:
        lexicon = sorted({l.strip().lower() for l in f if l.strip() and not l.strip().startswith("#")})

    keyed = analyzable = multi = 0
    first_exact = first_asym = acro = acro_multi = 0
    cond = {"exact": {}, "asym": {}}
    cells = {"acronym": [[0, 0], [0, 0]], "first": [[0, 0], [0, 0]]}
    single = unresolved = 0
    trend = {}
    undated = 0
    papers = {}
    keys = {}
    titles = {}
    names = {}

    for paper in truth["papers"]:
        pid = paper["paper_id"]
        for e in paper["entries"]:
            key, lasts, year = e["key"], e["authors"], e["year"]
            keyed += 1
            keys[key.lower()] = keys.get(key.lower(), 0) + 1
            t = e["title"].lower()
            titles[t] = titles.get(t, 0) + 1
            for l in lasts:
                names[norm(l)] = names.get(norm(l), 0) + 1
            p = papers.setdefault(pid, {"keys": 0, "analyzable": 0, "first": 0, "acronym": 0, "dblp": 0, "year": None})
            p["keys"] += 1
            if key.lower().startswith("dblp:"):
                p["dblp"] += 1
            if year is not None and (p["year"] is None or year > p["year"]):
                p["year"] = year
            j = len(lasts)
            if j == 0:
                unresolved += 1
                continue
            if j == 1:
                single += 1
            ex = [exact_match(l, key) for l in lasts]
            asy = [asymmetric_match(l, key) for l in lasts]
            ac = acronym_match(key, lasts)
            alpha = all(norm(lasts[i]) <= norm(lasts[i + 1]) for i in range(j - 1))
            analyzable += 1
            first_exact += ex[0]
            first_asym += asy[0]
            acro += ac
            for name, hits in (("exact", ex), ("asym", asy)):
                col = cond[name].setdefault(j, [0, [0] * j])
                col[0] += 1
                for i in range(j):
                    col[1][i] += hits[i]
            if j >= 2:
                multi += 1
                acro_multi += ac
                cells["acronym"][alpha][ac] += 1
                cells["first"][alpha][ex[0]] += 1
            if year is None:
                undated += 1
            else:
                y = trend.setdefault(year, [0, 0, 0])
                y[0] += 1
                y[1] += ac
                y[2] += ex[0]
            p["analyzable"] += 1
            p["first"] += ex[0]
            p["acronym"] += ac

    def cond_table(table):
        return {"columns": [
            {"authors": j, "entries": table[j][0], "positions": [ratio(m, table[j][0]) for m in table[j][1]]}
            for j in sorted(table)
        ]}

    def ordering(c):
        return {
            "alphabetical_matched": ratio(c[1][1], multi),
            "alphabetical_unmatched": ratio(c[1][0], multi),
            "unordered_matched": ratio(c[0][1], multi),
            "unordered_unmatched": ratio(c[0][0], multi),
        }

    buckets = []
    for start, end in zip(BOUNDARIES, BOUNDARIES[1:]):
        cit = sum(v[0] for y, v in trend.items() if start <= y < end)
        ac = sum(v[1] for y, v in trend.items() if start <= y < end)
        fe = sum(v[2] for y, v in trend.items() if start <= y < end)
        buckets.append({"start": start, "end": end, "citations": cit,
                        "acronym": ratio(ac, cit), "first_author": ratio(fe, cit)})
    dated = sum(v[0] for v in trend.values())
    unbucketed = dated - sum(b["citations"] for b in buckets)

    patterns = []
    per_paper = []
    counted = 0
    for pattern, field in (("first_author_exact", "first"), ("author_acronym", "acronym")):
        n = s = l = 0
        for pid in sorted(papers):
            p = papers[pid]
            if p["analyzable"] == 0:
                continue
            value = p[field] / p["analyzable"]
            n += 1
            s += value >= STRICT
            l += value >= LOOSE
            per_paper.append((pid, pattern, {"paper_id": pid, "pattern": pattern,
                                             "pmr": ratio(p[field], p["analyzable"]),
                                             "citations": p["analyzable"]}))
        counted = n
        patterns.append({"pattern": pattern, "papers": n, "strict": ratio(s, n), "loose": ratio(l, n)})
    order = {"first_author_exact": 0, "author_acronym": 1}
    per_paper.sort(key=lambda x: (x[0], order[x[1]]))

    ngrams = []
    for n in range(2, 11):
        freq = {}
        for k, mult in keys.items():
            for i in range(len(k) - n + 1):
                g = k[i:i + n]
                freq[g] = freq.get(g, 0) + mult
        top = sorted(freq.items(), key=lambda kv: (-kv[1], kv[0]))[:TOP_K]
        items = []
        for term, count in top:
            it = sum(occurrences(t, term) * m for t, m in titles.items())
            ia = sum(occurrences(a, term) * m for a, m in names.items())
            total = it + ia
            ta = it / total if total else None
            aa = ia / total if total else None
            if term.isdigit() or "etal" in term:
                cluster = "year_and_phrase"
            elif any(w in term for w in lexicon):
                cluster = "type_and_sources"
            elif total == 0:
                cluster = "unassigned"
            elif ta - aa >= MARGIN:
                cluster = "title_words"
            elif aa - ta >= MARGIN:
                cluster = "author_names"
            else:
                cluster = "unassigned"
            items.append({"term": term, "count": count, "cluster": cluster, "in_titles": it,
                          "in_author_names": ia, "title_affinity": ta, "author_affinity": aa})
        ngrams.append({"n": n, "distinct": len(freq), "total": sum(freq.values()), "top": items})

    copied = sum(p["dblp"] for p in papers.values())
    all_keys = sum(p["keys"] for p in papers.values())

    def era(pred):
        sel = [p for p in papers.values() if pred(p["year"])]
        c = sum(p["dblp"] for p in sel)
        return {"papers": len(sel), "keys": sum(p["keys"] for p in sel), "copied": c,
                "share_of_copied": ratio(c, copied)}

    report = {
        "summary": {
            "papers": len(papers),
            "keyed_entries": keyed,
            "analyzable_entries": analyzable,
            "multi_author_entries": multi,
            "first_author_exact": ratio(first_exact, analyzable),
            "first_author_asymmetric": ratio(first_asym, analyzable),
            "acronym": ratio(acro, analyzable),
            "acronym_multi_author": ratio(acro_multi, multi),
        },
        "cond_prob": {"exact": cond_table(cond["exact"]), "asymmetric": cond_table(cond["asym"])},
        "ordering": {
            "considered": multi,
            "excluded_single_author": single,
            "excluded_unresolved": unresolved,
            "acronym": ordering(cells["acronym"]),
            "first_author": ordering(cells["first"]),
        },
        "trend": {"buckets": buckets, "unbucketed": unbucketed, "undated": undated},
        "consistency": {
            "strict_threshold": STRICT,
            "loose_threshold": LOOSE,
            "patterns": patterns,
            "excluded_papers": len(papers) - counted,
            "per_paper": [x[2] for x in per_paper],
        },
        "ngrams": ngrams,
        "dblp": {
            "mode": "prefix",
            "copied_keys": ratio(copied, all_keys),
            "papers_with_copies": sum(1 for p in papers.values() if p["dblp"] > 0),
            "papers_majority_copied": ratio(sum(1 for p in papers.values() if 2 * p["dblp"] > p["keys"]), len(papers)),
            "era_start": ERA,
            "before_era": era(lambda y: y is not None and y < ERA),
            "from_era": era(lambda y: y is not None and y >= ERA),
            "undated": era(lambda y: y is None),
        },
    }
    with open(out_path, "w") as f:
        f.write(json.dumps(report, indent=2, ensure_ascii=False))
        f.write("\n")


if __name__ == "__main__":
    main(*sys.argv[1:4])
