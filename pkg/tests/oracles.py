"""Independent brute-force recomputations used as test oracles.

Deliberately written in plain Python loops, with no imports from the package
under test, so each one checks its counterpart along a different path.
"""

import math


def ewm_topsis_reference(x):
    """Straight-line scoring of an agents-by-criteria count matrix.

    Returns (closeness list, weights list, kept column indices). Conventions
    shared with the pipeline contract: zero-range columns are dropped before
    normalization, 0*ln(0) = 0, zero total disparity falls back to uniform
    weights, and an agent at zero distance from both profiles scores 0.5.
    """
    m = len(x)
    n = len(x[0]) if m else 0
    assert m >= 2

    kept = []
    for j in range(n):
        col = [x[i][j] for i in range(m)]
        if max(col) > min(col):
            kept.append(j)

    r = []
    for i in range(m):
        row = []
        for j in kept:
            col = [x[q][j] for q in range(m)]
            row.append((x[i][j] - min(col)) / (max(col) - min(col)))
        r.append(row)

    if not kept:
        return [0.5] * m, [], kept

    k = 1.0 / math.log(m)
    d = []
    for j in range(len(kept)):
        col_sum = sum(r[i][j] for i in range(m))
        e = 0.0
        for i in range(m):
            p = r[i][j] / col_sum
            if p > 0:
                e += p * math.log(p)
        e *= -k
        dj = 1.0 - e
        d.append(dj if dj > 0 else 0.0)

    total_d = sum(d)
    if total_d <= 0:
        w = [1.0 / len(kept)] * len(kept)
    else:
        w = [dj / total_d for dj in d]

    v = [[w[j] * r[i][j] for j in range(len(kept))] for i in range(m)]
    v_plus = [max(v[i][j] for i in range(m)) for j in range(len(kept))]
    v_minus = [min(v[i][j] for i in range(m)) for j in range(len(kept))]

    closeness = []
    for i in range(m):
        s_plus = math.sqrt(sum((v[i][j] - v_plus[j]) ** 2 for j in range(len(kept))))
        s_minus = math.sqrt(sum((v[i][j] - v_minus[j]) ** 2 for j in range(len(kept))))
        if s_plus + s_minus == 0:
            closeness.append(0.5)
        else:
            closeness.append(s_minus / (s_plus + s_minus))
    return closeness, w, kept


def saw_r2_by_enumeration(n):
    """Exact <R^2> over all cubic-lattice self-avoiding walks of length n,
    via breadth-first expansion (distinct from the package's DFS)."""
    walks = [((0, 0, 0),)]
    for _ in range(n):
        nxt = []
        for walk in walks:
            x, y, z = walk[-1]
            for dx, dy, dz in ((1, 0, 0), (-1, 0, 0), (0, 1, 0),
                               (0, -1, 0), (0, 0, 1), (0, 0, -1)):
                site = (x + dx, y + dy, z + dz)
                if site not in walk:
                    nxt.append(walk + (site,))
        walks = nxt
    total = sum(w[-1][0] ** 2 + w[-1][1] ** 2 + w[-1][2] ** 2 for w in walks)
    return total / len(walks), len(walks)


def two_body_energy(mu, position, velocity):
    """Specific orbital energy of a test particle: v^2/2 - mu/r."""
    v2 = sum(c * c for c in velocity)
    r = math.sqrt(sum(c * c for c in position))
    return 0.5 * v2 - mu / r
