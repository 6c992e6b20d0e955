"""Shared test utilities: problem generators and small oracles."""

from typing import List, Tuple

import numpy as np

from momentsos.poly import Polynomial, SemialgebraicSet
from momentsos.sdp import SdpProblem


def random_psd(rng, d: int, shift: float = 0.5) -> np.ndarray:
    M = rng.standard_normal((d, d))
    return M @ M.T + shift * np.eye(d)


def make_strictly_feasible_sdp(rng) -> Tuple[SdpProblem, List[np.ndarray]]:
    """Random SDP built from interior points so both sides are strictly
    feasible: pick X0, Z0 > 0 and lam0 first, then derive b and C."""
    dims = [int(rng.integers(1, 7)) for _ in range(int(rng.integers(1, 4)))]
    p = int(rng.integers(1, 9))
    As = []
    for _ in range(p):
        row = [rng.standard_normal((d, d)) for d in dims]
        As.append([0.5 * (M + M.T) for M in row])
    X0 = [random_psd(rng, d) for d in dims]
    b = [
        sum(float(np.sum(Ab * Xb)) for Ab, Xb in zip(row, X0))
        for row in As
    ]
    lam0 = rng.standard_normal(p)
    Z0 = [random_psd(rng, d) for d in dims]
    C = [
        Zb + sum(lam0[i] * As[i][k] for i in range(p))
        for k, Zb in enumerate(Z0)
    ]
    return SdpProblem.make(dims, C, list(zip(As, b))), X0


def example_hyperbola_disk() -> SemialgebraicSet:
    """{x : x1*x2 - 1/4 >= 0, 0.5 - (x1-0.5)^2 - (x2-0.5)^2 >= 0}.

    Convex lens between a hyperbola branch and a disk; the recurring
    certification fixture.
    """
    g1 = Polynomial.make(2, {(1, 1): 1.0, (0, 0): -0.25})
    g2 = Polynomial.make(
        2,
        {(0, 0): 0.5 - 0.25 - 0.25, (1, 0): 1.0, (0, 1): 1.0, (2, 0): -1.0, (0, 2): -1.0},
    )
    return SemialgebraicSet(2, (g1, g2), ball_bound=2.0)


def example_degenerate_cube() -> SemialgebraicSet:
    """{x : (1 - x1^2 + x2^2)^3 >= 0, 10 - |x|^2 >= 0}.

    The first constraint's gradient vanishes identically on its zero set.
    """
    inner = Polynomial.make(2, {(0, 0): 1.0, (2, 0): -1.0, (0, 2): 1.0})
    g1 = inner ** 3
    g2 = Polynomial.make(2, {(0, 0): 10.0, (2, 0): -1.0, (0, 2): -1.0})
    return SemialgebraicSet(2, (g1, g2), ball_bound=4.0)


def unit_disk() -> SemialgebraicSet:
    g = Polynomial.make(2, {(0, 0): 1.0, (2, 0): -1.0, (0, 2): -1.0})
    return SemialgebraicSet(2, (g,), ball_bound=1.5)


def grid_minimize(f, K: SemialgebraicSet, lo, hi, steps=1001, refine_rounds=5):
    """Multistage grid minimization of f over K within the box [lo,hi]^n.

    Coarse scan at `steps` resolution, then repeated 10x zooms around the
    incumbent; boundary-accurate to roughly the final cell size.
    """
    n = K.n
    assert n == 2, "grid oracle written for the planar fixtures"
    lo = np.asarray(lo, dtype=float)
    hi = np.asarray(hi, dtype=float)
    best_val, best_x = np.inf, None
    for _ in range(refine_rounds + 1):
        xs = np.linspace(lo[0], hi[0], steps)
        ys = np.linspace(lo[1], hi[1], steps)
        XX, YY = np.meshgrid(xs, ys, indexing="ij")
        mask = np.ones_like(XX, dtype=bool)
        for g in K.constraints:
            G = np.zeros_like(XX)
            for (a1, a2), c in g.terms.items():
                G += c * XX ** a1 * YY ** a2
            mask &= G >= 0.0
        F = np.zeros_like(XX)
        for (a1, a2), c in f.terms.items():
            F += c * XX ** a1 * YY ** a2
        F = np.where(mask, F, np.inf)
        idx = np.unravel_index(np.argmin(F), F.shape)
        if F[idx] < best_val:
            best_val = float(F[idx])
            best_x = np.array([XX[idx], YY[idx]])
        span = (hi - lo) / (steps - 1) * 12.0
        lo = best_x - span
        hi = best_x + span
    return best_val, best_x
