"""Brute-force reference implementation of the rank metrics.

Plain Python on lists: explicit ordered-pair loops, dictionary counting and
the textbook mutual-information sum.  Shares no code with ``gengap.metrics``.
Undefined quantities come back as ``None``.
"""

import itertools
import math


def sgn(x):
    if x > 0:
        return 1
    if x < 0:
        return -1
    return 0


def tau(mu, g):
    n = len(mu)
    total = 0
    for i in range(n):
        for j in range(n):
            if i != j:
                total += sgn(mu[i] - mu[j]) * sgn(g[i] - g[j])
    return total / (n * (n - 1))


def members(coords, fixed):
    """Indices of models whose coordinates match ``fixed`` ({axis position: value index})."""
    return [i for i, c in enumerate(coords) if all(c[a] == v for a, v in fixed.items())]


def psi_axis(coords, cards, g, mu, axis):
    if cards[axis] < 2:
        return None
    others = [a for a in range(len(cards)) if a != axis]
    taus = []
    for combo in itertools.product(*(range(cards[a]) for a in others)):
        idx = members(coords, dict(zip(others, combo)))
        if len(idx) >= 2:
            taus.append(tau([mu[i] for i in idx], [g[i] for i in idx]))
    if not taus:
        return None
    return sum(taus) / len(taus)


def psi_overall(coords, cards, g, mu):
    per_axis = {}
    for a in range(len(cards)):
        v = psi_axis(coords, cards, g, mu, a)
        if v is not None:
            per_axis[a] = v
    if not per_axis:
        return per_axis, None
    return per_axis, sum(per_axis.values()) / len(per_axis)


def joint_counts(idx, g, mu):
    counts = {}
    for i in idx:
        for j in idx:
            if i != j:
                key = (sgn(g[i] - g[j]), sgn(mu[i] - mu[j]))
                counts[key] = counts.get(key, 0) + 1
    return counts


def group_information(counts):
    total = sum(counts.values())
    pj = {k: c / total for k, c in counts.items()}
    pg, pm = {}, {}
    for (a, b), p in pj.items():
        pg[a] = pg.get(a, 0.0) + p
        pm[b] = pm.get(b, 0.0) + p
    mi = sum(p * math.log2(p / (pg[a] * pm[b])) for (a, b), p in pj.items() if p > 0)
    h = -sum(p * math.log2(p) for p in pg.values() if p > 0)
    return mi, h


def cond_mi(coords, cards, g, mu, cond, weighting="equal"):
    """(I, H, normalized) or None when no group holds a pair."""
    cond = sorted(cond)
    parts = []
    for combo in itertools.product(*(range(cards[a]) for a in cond)):
        idx = members(coords, dict(zip(cond, combo)))
        if len(idx) < 2:
            continue
        counts = joint_counts(idx, g, mu)
        parts.append((sum(counts.values()), *group_information(counts)))
    if not parts:
        return None
    if weighting == "equal":
        w = [1 / len(parts)] * len(parts)
    else:
        tot = sum(t for t, _, _ in parts)
        w = [t / tot for t, _, _ in parts]
    mi = sum(wi * i for wi, (_, i, _) in zip(w, parts))
    h = sum(wi * e for wi, (_, _, e) in zip(w, parts))
    return mi, h, (mi / h if h > 0 else 0.0)


def metric2(coords, cards, g, mu, k_max, weighting="equal"):
    """(J, argmin as tuple of axis positions) or (None, None)."""
    axes = [a for a in range(len(cards)) if cards[a] >= 2]
    best = None
    best_set = None
    subsets = [s for s in itertools.chain.from_iterable(
        itertools.combinations(axes, k) for k in range(len(axes) + 1)) if len(s) <= k_max]
    subsets.sort(key=lambda s: (len(s), s))
    for s in subsets:
        r = cond_mi(coords, cards, g, mu, s, weighting)
        if r is None:
            continue
        if best is None or r[2] < best:
            best, best_set = r[2], s
    return best, best_set
