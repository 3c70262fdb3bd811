#!/usr/bin/env python3
"""Regenerate tests/data/{stats,fid}_oracle.json with scipy.

    python3 tests/oracles/make_oracles.py
"""
import itertools
import json
import pathlib

import numpy as np
from scipy import linalg, stats

OUT = pathlib.Path(__file__).resolve().parent.parent / "data"


def group_sets(rng):
    sets = []
    for case in range(20):
        k = int(rng.integers(2, 7))
        groups = []
        for g in range(k):
            n = int(rng.integers(2, 14))
            if case % 3 == 0:
                # heavy ties on a coarse grid
                vals = rng.integers(0, 5, size=n) / 4.0
            else:
                vals = rng.normal(loc=0.3 * g, scale=1.0, size=n)
            groups.append([float(v) for v in vals])
        sets.append(groups)
    return sets


def mw(a, b, method):
    r = stats.mannwhitneyu(a, b, alternative="two-sided", method=method)
    return {"u": float(r.statistic), "p": float(r.pvalue)}


def stats_oracle():
    rng = np.random.default_rng(20240501)
    cases = []
    for groups in group_sets(rng):
        kw = stats.kruskal(*groups)
        pairs = []
        for i, j in itertools.combinations(range(len(groups)), 2):
            a, b = groups[i], groups[j]
            ties = len(set(a + b)) < len(a) + len(b)
            entry = {"row": i, "col": j, "auto": mw(a, b, "auto"), "asymptotic": mw(a, b, "asymptotic")}
            if not ties:
                entry["exact"] = mw(a, b, "exact")
            pairs.append(entry)
        cases.append({"groups": groups, "kruskal": {"h": float(kw.statistic), "p": float(kw.pvalue)}, "pairs": pairs})
    return {"generator": "scipy " + __import__("scipy").__version__, "cases": cases}


def fid(x, y):
    mu1, mu2 = x.mean(axis=0), y.mean(axis=0)
    s1, s2 = np.cov(x, rowvar=False), np.cov(y, rowvar=False)
    covmean = linalg.sqrtm(s1 @ s2).real
    return float(((mu1 - mu2) ** 2).sum() + np.trace(s1 + s2 - 2 * covmean))


def fid_oracle():
    rng = np.random.default_rng(77)
    cases = []
    for n, m, d in [(20, 25, 3), (40, 30, 6), (60, 60, 10), (12, 50, 4)]:
        a = rng.normal(size=(d, d))
        x = rng.normal(size=(n, d)) @ a
        y = rng.normal(size=(m, d)) @ rng.normal(size=(d, d)) + rng.normal(size=d)
        cases.append({"real": x.tolist(), "fake": y.tolist(), "fid": fid(x, y)})
    return {"generator": "scipy.linalg.sqrtm", "cases": cases}


if __name__ == "__main__":
    OUT.mkdir(parents=True, exist_ok=True)
    (OUT / "stats_oracle.json").write_text(json.dumps(stats_oracle(), indent=1) + "\n")
    (OUT / "fid_oracle.json").write_text(json.dumps(fid_oracle(), indent=1) + "\n")
