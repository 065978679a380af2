"""Independent brute-force reference implementations used only by tests.

Everything here is written as plain double loops over Python floats so the
library's vectorized paths are checked against a genuinely separate route.
"""

import math


def naive_similarity(s_rows, t_rows):
    n = len(s_rows)
    return [[sum(si * tj for si, tj in zip(s_rows[i], t_rows[j]))
             for j in range(n)] for i in range(n)]


def naive_cosine_mean(m):
    n = len(m)
    return sum(m[i][i] for i in range(n)) / n


def naive_cosine_gap(m):
    n = len(m)
    total = sum(m[i][j] for i in range(n) for j in range(n))
    return naive_cosine_mean(m) - total / (n * n)


def naive_p_at_1(m, direction):
    n = len(m)
    hits = 0
    for i in range(n):
        if direction == "source_to_target":
            row = m[i]
        else:
            row = [m[j][i] for j in range(n)]
        best = 0
        for j in range(1, n):
            if row[j] > row[best]:
                best = j
        hits += best == i
    return hits / n


def naive_csls(m, k):
    n = len(m)
    k_eff = min(k, n)
    r_row = [sum(sorted(m[i], reverse=True)[:k_eff]) / k_eff for i in range(n)]
    r_col = [sum(sorted((m[i][j] for i in range(n)), reverse=True)[:k_eff]) / k_eff
             for j in range(n)]
    return sum(2 * m[i][i] - r_row[i] - r_col[i] for i in range(n)) / n


def _gram_zero_diag(rows):
    n = len(rows)
    g = [[sum(a * b for a, b in zip(rows[i], rows[j])) for j in range(n)]
         for i in range(n)]
    for i in range(n):
        g[i][i] = 0.0
    return g


def _naive_hsic_unbiased(ka, kb):
    n = len(ka)
    trace = sum(ka[i][j] * kb[j][i] for i in range(n) for j in range(n))
    total_a = sum(ka[i][j] for i in range(n) for j in range(n))
    total_b = sum(kb[i][j] for i in range(n) for j in range(n))
    cross = 0.0
    for i in range(n):
        for ell in range(n):
            cross += sum(ka[i][j] * kb[j][ell] for j in range(n))
    return (trace + total_a * total_b / ((n - 1) * (n - 2))
            - 2.0 * cross / (n - 2)) / (n * (n - 3))


def naive_cka(s_rows, t_rows):
    ka = _gram_zero_diag(s_rows)
    kb = _gram_zero_diag(t_rows)
    num = _naive_hsic_unbiased(ka, kb)
    den = math.sqrt(_naive_hsic_unbiased(ka, ka) * _naive_hsic_unbiased(kb, kb))
    raw = num / den
    return min(max(raw, 0.0), 1.0)


def naive_spearman_rho(x, y):
    """Pearson correlation of average ranks, computed the long way."""
    def ranks(vals):
        order = sorted(range(len(vals)), key=lambda i: vals[i])
        out = [0.0] * len(vals)
        i = 0
        while i < len(vals):
            j = i
            while j + 1 < len(vals) and vals[order[j + 1]] == vals[order[i]]:
                j += 1
            for t in range(i, j + 1):
                out[order[t]] = (i + j) / 2.0 + 1.0
            i = j + 1
        return out

    rx, ry = ranks(list(x)), ranks(list(y))
    n = len(rx)
    mx, my = sum(rx) / n, sum(ry) / n
    num = sum((a - mx) * (b - my) for a, b in zip(rx, ry))
    den = math.sqrt(sum((a - mx) ** 2 for a in rx) * sum((b - my) ** 2 for b in ry))
    return num / den
