"""Brute-force contact-state classifier used as the test oracle.

Classifies from membership sampling alone: volume fraction of retained
Fibonacci-sphere directions, the span rank of every feasible direction found
(volume samples plus candidate boundary rays), antipodality probes, and dense
sweeps of candidate great circles.  Independent of the production
implicit-equality / lineality computation.
"""

import numpy as np

from lfo.contact import ContactStateClass, sample_feasible_oracle
from lfo.geometry import fibonacci_sphere


def _member(N, x, tol):
    return N.size == 0 or bool(np.all(N @ x >= -tol))


def _candidate_rays(N):
    cands = [e for v in np.eye(3) for e in (v, -v)]
    for n in N:
        cands.extend((n, -n))
    for i in range(len(N)):
        for j in range(i + 1, len(N)):
            c = np.cross(N[i], N[j])
            if np.linalg.norm(c) > 1e-12:
                c = c / np.linalg.norm(c)
                cands.extend((c, -c))
    for n in N:
        for e in np.eye(3):
            c = np.cross(n, e)
            if np.linalg.norm(c) > 1e-12:
                c = c / np.linalg.norm(c)
                cands.extend((c, -c))
    return cands


def oracle_classify(normals, n=10000, tol=1e-6) -> ContactStateClass:
    N = np.array([np.asarray(v, float) for v in normals]).reshape(-1, 3)
    retained = sample_feasible_oracle(normals, n, tol=tol)
    frac = len(retained) / n
    feas_cands = [c for c in _candidate_rays(N) if _member(N, c, tol)]
    all_feas = list(retained) + feas_cands
    if not all_feas:
        return ContactStateClass.EMPTY
    if frac >= 0.95:
        return ContactStateClass.FULL_SPHERE

    M = np.array(all_feas)
    s = np.linalg.svd(M, compute_uv=False)
    rank = int(np.sum(s > 1e-6 * s[0]))

    if rank == 1:
        u = M[0] / np.linalg.norm(M[0])
        return (ContactStateClass.ANTIPODAL_PAIR
                if _member(N, -u, tol) else ContactStateClass.SINGLE_POINT)

    if rank == 2:
        _, _, vt = np.linalg.svd(M)
        u1, u2 = vt[0], vt[1]
        theta = np.linspace(0, 2 * np.pi, 3600, endpoint=False)
        circle = np.outer(np.cos(theta), u1) + np.outer(np.sin(theta), u2)
        inside = np.all(circle @ N.T >= -tol, axis=1) if N.size else np.ones(3600, bool)
        return (ContactStateClass.GREAT_CIRCLE
                if bool(np.all(inside)) else ContactStateClass.HALF_GREAT_CIRCLE)

    # rank 3: hemisphere iff membership is equivalent to a single half-space
    pool = retained if len(retained) else np.array(feas_cands)
    u = pool.mean(axis=0)
    nu = np.linalg.norm(u)
    if nu > 1e-12:
        u = u / nu
        band = 0.02
        probe = fibonacci_sphere(n)
        dots = probe @ u
        members = np.all(probe @ N.T >= -tol, axis=1) if N.size else np.ones(n, bool)
        mismatch = np.any((members & (dots < -band)) | (~members & (dots > band)))
        if not mismatch:
            return ContactStateClass.HEMISPHERE
    return ContactStateClass.CONVEX_REGION


def random_normal_sets(count, seed, max_normals=6):
    rng = np.random.default_rng(seed)
    sets = []
    for _ in range(count):
        m = int(rng.integers(0, max_normals + 1))
        v = rng.normal(size=(m, 3))
        v /= np.linalg.norm(v, axis=1, keepdims=True)
        sets.append(v)
    return sets
