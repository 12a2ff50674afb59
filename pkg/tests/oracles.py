"""Independent brute-force reference computations used by the test suite.

Everything in here is written as plain Python loops over lists of floats, on
purpose: no shared code path with the package's vectorised implementations.
Tolerances used by the equivalence tests live with the tests themselves.
"""

import math


def as_rows(means):
    """Copy a 2-D array-like into plain nested lists of floats."""
    return [[float(x) for x in row] for row in means]


# ---------------------------------------------------------------------------
# dominance / Pareto geometry
# ---------------------------------------------------------------------------

def strictly_dominated(u, v, eps=0.0):
    """True when v beats u + eps strictly in every coordinate."""
    return all(u[d] + eps < v[d] for d in range(len(u)))


def brute_min_margin(rows, i, j):
    """m(i, j): smallest coordinate advantage of arm j over arm i."""
    return min(rows[j][d] - rows[i][d] for d in range(len(rows[i])))


def brute_max_margin(rows, i, j):
    """M(i, j): largest coordinate advantage of arm i over arm j."""
    return max(rows[i][d] - rows[j][d] for d in range(len(rows[i])))


def brute_pareto(rows, eps=0.0):
    """Arms not strictly dominated at slack eps, as a sorted tuple."""
    rows = as_rows(rows)
    keep = []
    for i in range(len(rows)):
        if not any(
            j != i and strictly_dominated(rows[i], rows[j], eps)
            for j in range(len(rows))
        ):
            keep.append(i)
    return tuple(keep)


def brute_omega(rows, a):
    """omega_a: worst-case max-margin of arm a against every other arm."""
    rows = as_rows(rows)
    return min(brute_max_margin(rows, a, j) for j in range(len(rows)) if j != a)


def brute_omega_sorted(rows):
    return tuple(sorted((brute_omega(rows, a) for a in range(len(rows))), reverse=True))


def brute_gaps(rows):
    """(delta, omega, omega_sorted, delta_plus, delta_minus) per definitions.

    delta_plus / delta_minus are dicts over optimal arms, only populated when
    the Pareto set has at least two members.
    """
    rows = as_rows(rows)
    K = len(rows)
    opt = set(brute_pareto(rows))
    sub = [a for a in range(K) if a not in opt]

    delta = [None] * K
    for a in sub:
        delta[a] = max(brute_min_margin(rows, a, j) for j in opt)

    d_plus, d_minus = {}, {}
    if len(opt) == 1:
        a = next(iter(opt))
        delta[a] = min(delta[j] for j in range(K) if j != a)
    else:
        for a in opt:
            d_plus[a] = min(
                min(brute_max_margin(rows, a, j), brute_max_margin(rows, j, a))
                for j in opt
                if j != a
            )
            if sub:
                d_minus[a] = min(
                    max(brute_max_margin(rows, j, a), 0.0) + delta[j] for j in sub
                )
            else:
                d_minus[a] = math.inf
            delta[a] = min(d_plus[a], d_minus[a])

    omega = [brute_omega(rows, a) for a in range(K)]
    return (
        tuple(delta),
        tuple(omega),
        tuple(sorted(omega, reverse=True)),
        d_plus,
        d_minus,
    )


def brute_bound(rows, delta_risk, eps1, k=None):
    """Worst-case pull-count bound, summed arm by arm."""
    rows = as_rows(rows)
    K, D = len(rows), len(rows[0])
    gaps = brute_gaps(rows)[0]
    omega_sorted = brute_omega_sorted(rows)
    total = 0.0
    for a in range(K):
        dt = max(gaps[a], eps1)
        if k is not None:
            dt = max(dt, omega_sorted[k - 1])
        if dt <= 0:
            raise ValueError("degenerate arm")
        total += (88.0 / dt**2) * math.log(
            (2.0 * K * (K - 1) * D / delta_risk) * math.log(12.0 * math.e / dt)
        )
    return total


def brute_verify(rows, rec, kind, eps1=0.0, eps2=0.0, k=1):
    """Recommendation-correctness oracle, one branch per rule kind."""
    rows = as_rows(rows)
    rec = set(rec)
    star = set(brute_pareto(rows, 0.0))
    star_eps1 = set(brute_pareto(rows, eps1))
    if kind == "eps-psi":
        return star <= rec <= star_eps1
    if kind == "eps-cover":
        if not rec <= star_eps1:
            return False
        for i in range(len(rows)):
            if i in rec or i not in star:
                continue
            if not any(brute_min_margin(rows, i, j) + eps2 > 0 for j in rec):
                return False
        return True
    if kind == "k-relaxed":
        if len(rec) == k:
            return rec <= star_eps1
        return len(rec) < k and star <= rec <= star_eps1
    raise ValueError(kind)


# ---------------------------------------------------------------------------
# worst-case two-coordinate family: closed forms
# ---------------------------------------------------------------------------

def family_means(p, omega, base, D):
    """Rebuild the hard two-coordinate family directly from its definition.

    Arms are 1-based i = 1..p here; row i-1 of the result. Coordinates past
    the second copy the base point.
    """
    rows = []
    for i in range(1, p + 1):
        if i >= p - 2:
            first, second = 2 ** (p - i) * omega, -(2 ** (p - i)) * omega
        else:
            first, second = (4 + 2 * i) * omega, -(4 + 2 * i) * omega
        rows.append([first, second] + [base[d] for d in range(2, D)])
    return rows


def family_max_margin(p, omega, i, j):
    """Closed-form M(i, j) for the family above (1-based i != j)."""
    top = lambda a: p - 2 <= a <= p
    if top(i) and top(j):
        return 2**p * omega * abs(2.0**-i - 2.0**-j)
    if not top(i) and not top(j):
        return 2 * omega * abs(i - j)
    if not top(i):  # low arm against top arm
        return (4 + 2 * i - 2 ** (p - j)) * omega
    # top arm against low arm: symmetric expression
    return (4 + 2 * j - 2 ** (p - i)) * omega


def family_omega(p, omega, i):
    """Closed-form omega_i for the family (1-based)."""
    if i == p:
        return omega
    if i in (p - 2, p - 1):
        return 2 ** (p - i - 1) * omega
    return 2 * omega
