"""Partial sums of linear processes in weight form.

For X_k = sum_j a_{k+j} xi_j, exchanging summation order gives
S_n(X) = sum_j b_{n,j} xi_j with b_{n,j} = a_{j+1} + ... + a_{j+n}, so a
partial sum is one weighted pass over the innovation window. Normalized
path values W_n(t) = S_{[nt]} / b_n share a single innovation
realization across grid points, which is what makes empirical
finite-dimensional covariances meaningful.

The blocked process X'_k = sum_j a_{k+j}(xi_j + xi_{j+1}) collapses the
same way: S_n(X') = sum_j (b_{n,j} + b_{n,j-1}) xi_j, a widened window
with pairwise-summed weights.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import innovations, kernels, rng
from .coefficients import WeightProfile, weight_profile


def partial_sum(profile: WeightProfile, xi) -> float:
    """Weighted innovation sum over the profile window.

    xi must align with [j_min, j_max]: xi[k] multiplies b_{n, j_min+k}.
    Accumulation is compensated and in fixed ascending j order, so
    results are reproducible and stable on windows of 1e7 terms.
    """
    xi = np.ascontiguousarray(xi, dtype=np.float64)
    if xi.shape != profile.weights.shape:
        raise ValueError(
            f"innovation window {xi.shape} does not match weight window "
            f"{profile.weights.shape}"
        )
    return float(kernels.kahan_dot(profile.weights, xi))


def blocked_weights(profile: WeightProfile) -> WeightProfile:
    """Weights of the blocked process: coefficient b_{n,j} + b_{n,j-1} on xi_j.

    The window widens by one on the right (identity
    sum_j b_{n,j} xi_{j+1} = sum_j b_{n,j-1} xi_j); weights outside the
    profile window are treated as zero, which is exact for finite
    supports and within the certified tail otherwise.
    """
    w = profile.weights
    c = np.empty(len(w) + 1)
    c[0] = w[0]
    c[-1] = w[-1]
    c[1:-1] = w[1:] + w[:-1]
    out = WeightProfile.from_weights(c, profile.n, profile.j_min,
                                     variant=profile.variant + "+blocked")
    out.eps = profile.eps
    out.tail_bound = 4.0 * profile.tail_bound
    return out


@dataclass(frozen=True)
class PathRequest:
    """One replicate's worth of normalized partial-sum path values."""

    family: object
    chain: object
    n: int
    t_grid: tuple
    eps: float
    seed: int
    replicate: int = 0

    def __post_init__(self):
        if self.n < 2:
            raise ValueError("n must be >= 2")
        grid = tuple(float(t) for t in self.t_grid)
        if not grid:
            raise ValueError("t_grid must be nonempty")
        if any(t2 <= t1 for t1, t2 in zip(grid, grid[1:])):
            raise ValueError("t_grid must be strictly increasing")
        if grid[-1] > 1.0 or grid[0] <= 0.0:
            raise ValueError("t_grid must lie in (0, 1]")
        if int(self.n * grid[0]) < 1:
            raise ValueError(f"[n t] < 1 at t={grid[0]}; refine n or the grid")
        object.__setattr__(self, "t_grid", grid)


@dataclass
class PathSample:
    """W_n(t) values drawn from one innovation realization."""

    values: np.ndarray
    s_n: float
    bn2: float
    j_min: int
    j_max: int


def grid_offsets(n: int, t_grid) -> np.ndarray:
    """Window offsets [n t] for each grid point; validates distinctness."""
    offs = np.array([int(n * t) for t in t_grid], dtype=np.int64)
    if offs[0] < 1:
        raise ValueError("smallest grid point maps below 1")
    if np.any(np.diff(offs) <= 0):
        raise ValueError(f"grid points collide at n={n}: offsets {offs.tolist()}")
    return offs


def path_values(req: PathRequest, profile: WeightProfile | None = None) -> PathSample:
    """Evaluate W_n(t) = S_{[nt]} / b_n on the grid from one innovation path.

    One realization covers the union window (sized for m = n); each
    S_{[nt]} reuses it through the shared coefficient prefix sums, at
    baseline cost O(window x grid).
    """
    if profile is None:
        profile = weight_profile(req.family, req.n, req.eps)
    if profile.prefix is None:
        raise ValueError("path_values needs a family-built profile with prefixes")
    offs = grid_offsets(req.n, req.t_grid)
    key = rng.substream_key(req.seed, req.replicate)
    _, xi = innovations.sample_path(req.chain, len(profile.weights), key)
    bn = np.sqrt(profile.bn2)
    vals = np.empty(len(offs))
    for g, m in enumerate(offs):
        vals[g] = kernels.kahan_dot(profile.weights_for(int(m)), xi) / bn
    s_n = float(kernels.kahan_dot(profile.weights, xi))
    return PathSample(values=vals, s_n=s_n, bn2=profile.bn2,
                      j_min=profile.j_min, j_max=profile.j_max)
