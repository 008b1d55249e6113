"""Helpers for comparing recovered superquadric parameters against ground truth.

A superellipsoid is invariant under swapping the x/y axes (with a1/a2) and
under sign flips of any axis; when e1 == e2 it is invariant under every axis
permutation.  Parameter comparison canonicalizes over the allowed relabelings
before measuring errors.
"""

import numpy as np

_XY_PERMS = ((0, 1, 2), (1, 0, 2))
_ALL_PERMS = (
    (0, 1, 2), (1, 0, 2), (0, 2, 1), (2, 1, 0), (1, 2, 0), (2, 0, 1),
)


def _allowed_perms(fitted):
    if abs(fitted.e[0] - fitted.e[1]) < 0.05:
        return _ALL_PERMS
    return _XY_PERMS


def param_errors(truth, fitted):
    """(max relative size error, max exponent error) over allowed relabelings."""
    at = np.asarray(truth.a)
    af = np.asarray(fitted.a)
    e_err = float(max(abs(fitted.e[0] - truth.e[0]), abs(fitted.e[1] - truth.e[1])))
    best = np.inf
    for perm in _allowed_perms(fitted):
        size_err = float(np.max(np.abs(af[list(perm)] - at) / at))
        best = min(best, size_err)
    return best, e_err


def axis_angles_deg(truth, fitted):
    """Worst angle (deg) between matched fitted/true axes, minimized over the
    allowed relabelings and sign flips."""
    Rt, Rf = truth.rot(), fitted.rot()
    out = []
    for perm in _allowed_perms(fitted):
        angles = []
        for i, j in zip((0, 1, 2), perm):
            c = abs(float(np.dot(Rt[:, i], Rf[:, j])))
            angles.append(np.degrees(np.arccos(min(1.0, c))))
        out.append(max(angles))
    return min(out)
