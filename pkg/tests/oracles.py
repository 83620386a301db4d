"""Independent reference implementations used by the tests.

Nothing here imports the closed forms or the path solver it checks.
"""

import math

import numpy as np


def rk4(f, y0, t_end, steps):
    """Classic fixed-step RK4; ``y0`` has shape (k, n) and ``t_end`` shape (n,)."""
    y = np.array(y0, dtype=float)
    h = np.asarray(t_end, dtype=float) / steps
    for _ in range(steps):
        k1 = f(y)
        k2 = f(y + 0.5 * h * k1)
        k3 = f(y + 0.5 * h * k2)
        k4 = f(y + h * k3)
        y = y + h / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4)
    return y


# Each integrator carries the capacitor voltages plus three accumulators:
# energy leaving the sender, energy entering the receiver, and i^2 R heat.


def ode_rr(v1, v2, c, r, t0, steps=2000):
    def f(y):
        i = (y[0] - y[1]) / r
        return np.stack([-i / c, i / c, y[0] * i, y[1] * i, i * i * r])

    z = np.zeros_like(np.asarray(v1, dtype=float))
    y = rk4(f, [v1, v2, z, z, z], t0, steps)
    return y[0], y[1], y[2], y[3], y[4]


def ode_sr(vs, v2, c, r, t0, steps=2000):
    def f(y):
        i = (vs - y[0]) / r
        return np.stack([i / c, vs * i, y[0] * i, i * i * r])

    z = np.zeros_like(np.asarray(v2, dtype=float))
    y = rk4(f, [v2, z, z, z], t0, steps)
    return y[0], y[1], y[2], y[3]


def ode_rl(v1, c, r, rl, t0, steps=2000):
    def f(y):
        i = y[0] / (r + rl)
        return np.stack([-i / c, y[0] * i, i * i * rl, i * i * r])

    z = np.zeros_like(np.asarray(v1, dtype=float))
    y = rk4(f, [v1, z, z, z], t0, steps)
    return y[0], y[1], y[2], y[3]


def all_simple_paths(values, ids, s, t):
    """Recursive enumeration of every loop-free finite path over a raw matrix."""
    index = {nid: k for k, nid in enumerate(ids)}
    out = []

    def walk(k, seen, trail, cost_terms):
        if ids[k] == t:
            out.append((math.fsum(cost_terms), tuple(trail)))
            return
        for m in range(len(ids)):
            w = values[k, m]
            if m in seen or not np.isfinite(w):
                continue
            seen.add(m)
            trail.append(ids[m])
            cost_terms.append(float(w))
            walk(m, seen, trail, cost_terms)
            cost_terms.pop()
            trail.pop()
            seen.discard(m)

    walk(index[s], {index[s]}, [s], [])
    return sorted(out)


def brute_force_min(values, ids, sources, t):
    """(cost, source, nodes) of the cheapest path from any of ``sources``."""
    best = None
    for s in sorted(sources):
        for cost, nodes in all_simple_paths(values, ids, s, t):
            if best is None or cost < best[0]:
                best = (cost, s, nodes)
    return best


def count_simple_paths(adj, s, t, seen=None):
    """Count loop-free paths in an undirected adjacency dict."""
    seen = {s} if seen is None else seen
    if s == t:
        return 1
    n = 0
    for m in adj[s]:
        if m not in seen:
            seen.add(m)
            n += count_simple_paths(adj, m, t, seen)
            seen.discard(m)
    return n


def rr_cost_closed_form(v0, big_e):
    """Router-router loss/send with the denominator read as (3 v0 + 1)."""
    return -2 * (v0 - 1) * (1 - big_e**2) / ((v0 - 1) * big_e**2 + 2 * (v0 + 1) * big_e - 3 * v0 - 1)


def sr_cost_closed_form(v, e):
    return (v - 1) / (2 * v) * (1 + e)


def rl_cost_closed_form(r, rl):
    return r / (r + rl)
