"""Stationary reversible chains and the innovation functionals they drive.

Three chain models produce the innovation sequence xi_k = g(gamma_k):

* ``MHChainSpec``: the Metropolis-Hastings style chain on [-1, 1] that
  holds at x with probability 1 - |x| and otherwise redraws from the
  symmetric density (a + 1) / 2 * |x|^a, with g(x) = sign(x) |x|^q.
  Its stationary law has density (a / 2) |x|^(a - 1).
* ``GaussianChainSpec``: a stationary AR(1) Gaussian chain with one-step
  correlation r, with g given by a finite combination of probabilists'
  Hermite polynomials (no constant term, so innovations are centered).
* ``GroupWalkSpec``: a random walk on the cyclic group Z_m with a
  symmetric step law, observed through a real function with vanishing
  mean given by its Fourier coefficients.

Sampling is delegated to the streaming kernels; the per-substream random
word layout is documented in kernels.py and is part of the public
contract (tests replay it in pure Python).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import kernels, rng

_ATOL = 1e-12


@dataclass(frozen=True)
class MHChainSpec:
    """Hold-or-redraw chain on [-1, 1] with power-law stationary density."""

    a: float
    q: float

    kind = "mh"

    def __post_init__(self):
        if not (np.isfinite(self.a) and self.a > 0):
            raise ValueError("a must be a positive finite number")
        if not (np.isfinite(self.q) and self.q > 0):
            raise ValueError("q must be a positive finite number")

    @property
    def theta(self) -> float:
        """Exponent pairing the stationary tail with the hold time."""
        return (self.a + 1.0) / self.a

    def g(self, x):
        x = np.asarray(x, dtype=float)
        return np.sign(x) * np.abs(x) ** self.q

    def stationary_density(self, x):
        x = np.asarray(x, dtype=float)
        return np.where(np.abs(x) <= 1.0, 0.5 * self.a * np.abs(x) ** (self.a - 1.0), 0.0)

    def redraw_density(self, x):
        x = np.asarray(x, dtype=float)
        return np.where(np.abs(x) <= 1.0, 0.5 * (self.a + 1.0) * np.abs(x) ** self.a, 0.0)

    def params(self) -> dict:
        return {"a": self.a, "q": self.q}


def mh_conditional_mean(spec: MHChainSpec, x, k: int):
    """E[g(gamma_k) | gamma_0 = x] = (1 - |x|)^k g(x).

    The redraw target is symmetric, so only the never-redrawn paths
    contribute; their probability is (1 - |x|)^k.
    """
    if k < 0:
        raise ValueError("k must be nonnegative")
    x = np.asarray(x, dtype=float)
    if np.any(np.abs(x) > 1.0):
        raise ValueError("x must lie in [-1, 1]")
    return (1.0 - np.abs(x)) ** k * spec.g(x)


@dataclass(frozen=True)
class GaussianChainSpec:
    """Stationary AR(1) chain observed through a Hermite polynomial."""

    r: float
    coeffs: tuple = ()

    kind = "gaussian"

    def __post_init__(self):
        if not (np.isfinite(self.r) and 0.0 < self.r < 1.0):
            raise ValueError("r must lie strictly between 0 and 1")
        c = np.asarray(self.coeffs, dtype=float)
        if c.ndim != 1 or c.size == 0:
            raise ValueError("coeffs must be a nonempty 1-d sequence")
        if not np.all(np.isfinite(c)):
            raise ValueError("coeffs must be finite")
        if not np.any(c != 0.0):
            raise ValueError("at least one Hermite coefficient must be nonzero")
        object.__setattr__(self, "coeffs", tuple(float(v) for v in c))

    def coeff_array(self) -> np.ndarray:
        return np.asarray(self.coeffs, dtype=float)

    def g(self, x):
        """Sum of c_l H_l(x) over l >= 1, probabilists' normalization."""
        x = np.asarray(x, dtype=float)
        c = self.coeff_array()
        h_prev = np.ones_like(x)
        h = x.copy()
        total = c[0] * h
        for l in range(1, c.size):
            h_next = x * h - l * h_prev
            h_prev, h = h, h_next
            total = total + c[l] * h
        return total

    def params(self) -> dict:
        return {"r": self.r, "coeffs": list(self.coeffs)}


@dataclass(frozen=True)
class GroupWalkSpec:
    """Symmetric random walk on Z_m observed through a centered function.

    ``step_pmf[s]`` is the probability of the increment s (mod m) and
    must satisfy step_pmf[s] == step_pmf[m - s].  ``fourier[j]`` is the
    j-th Fourier coefficient of the observed function; conjugate
    symmetry makes the function real and fourier[0] == 0 centers it.
    """

    m: int
    step_pmf: tuple = ()
    fourier: tuple = ()
    _nu_hat: np.ndarray = field(init=False, repr=False, compare=False)
    _table: np.ndarray = field(init=False, repr=False, compare=False)
    _cdf: np.ndarray = field(init=False, repr=False, compare=False)

    kind = "group"

    def __post_init__(self):
        if int(self.m) != self.m or self.m < 2:
            raise ValueError("m must be an integer >= 2")
        object.__setattr__(self, "m", int(self.m))
        m = self.m
        pmf = np.asarray(self.step_pmf, dtype=float)
        if pmf.shape != (m,):
            raise ValueError("step_pmf must have length m")
        if np.any(pmf < 0.0) or not np.all(np.isfinite(pmf)):
            raise ValueError("step_pmf must be nonnegative and finite")
        if abs(pmf.sum() - 1.0) > 1e-9:
            raise ValueError("step_pmf must sum to 1")
        if np.max(np.abs(pmf - pmf[(m - np.arange(m)) % m])) > _ATOL:
            raise ValueError("step_pmf must be symmetric: pmf[s] == pmf[m - s]")
        fh = np.asarray(self.fourier, dtype=complex)
        if fh.shape != (m,):
            raise ValueError("fourier must have length m")
        if not np.all(np.isfinite(fh)):
            raise ValueError("fourier coefficients must be finite")
        if abs(fh[0]) > _ATOL:
            raise ValueError("fourier[0] must vanish (the function must be centered)")
        if np.max(np.abs(fh - np.conj(fh[(m - np.arange(m)) % m]))) > _ATOL:
            raise ValueError("fourier must be conjugate symmetric so the function is real")

        j = np.arange(m)
        # real by symmetry of the step law
        nu_hat = np.cos(2.0 * np.pi * np.outer(j, j) / m) @ pmf
        if np.max(nu_hat[1:]) > 1.0 - _ATOL:
            raise ValueError(
                "step law is supported on a proper subgroup; the walk is not ergodic"
            )
        table = m * np.fft.ifft(fh)
        if np.max(np.abs(table.imag)) > 1e-10:
            raise ValueError("fourier coefficients do not define a real function")
        object.__setattr__(self, "step_pmf", tuple(float(v) for v in pmf))
        object.__setattr__(self, "fourier", tuple(complex(v) for v in fh))
        object.__setattr__(self, "_nu_hat", nu_hat)
        object.__setattr__(self, "_table", np.ascontiguousarray(table.real))
        cdf = np.cumsum(pmf)
        cdf[-1] = 1.0
        object.__setattr__(self, "_cdf", cdf)

    @property
    def nu_hat(self) -> np.ndarray:
        """Fourier transform of the step law (real, nu_hat[0] == 1)."""
        return self._nu_hat.copy()

    def value_table(self) -> np.ndarray:
        """Function values f(0), ..., f(m - 1)."""
        return self._table.copy()

    def g(self, idx):
        idx = np.asarray(idx)
        return self._table[np.mod(idx, self.m)]

    def params(self) -> dict:
        return {
            "m": self.m,
            "step_pmf": list(self.step_pmf),
            "fourier": [[v.real, v.imag] for v in self.fourier],
        }


@dataclass(frozen=True)
class SpectralAtoms:
    """Discrete spectral measure sum_j w_j * delta(t_j) on [-1, 1)."""

    t: np.ndarray
    w: np.ndarray

    def total_mass(self) -> float:
        return float(np.sum(self.w))


def spectral_atoms(spec: GroupWalkSpec, merge_tol: float = 1e-12) -> SpectralAtoms:
    """Atoms (nu_hat(j), |fourier[j]|^2) of the walk's covariance measure.

    Frequencies with zero weight are dropped, atoms whose locations
    agree within ``merge_tol`` are merged, and an atom at +1 is rejected
    because the covariance would not decay.
    """
    locs = []
    wts = []
    fh = np.asarray(spec.fourier, dtype=complex)
    for j in range(1, spec.m):
        wj = abs(fh[j]) ** 2
        if wj == 0.0:
            continue
        locs.append(spec._nu_hat[j])
        wts.append(wj)
    if not locs:
        raise ValueError("the observed function has no nonzero frequency component")
    order = np.argsort(locs)
    locs = np.asarray(locs)[order]
    wts = np.asarray(wts)[order]
    merged_t = [locs[0]]
    merged_w = [wts[0]]
    for t, w in zip(locs[1:], wts[1:]):
        if t - merged_t[-1] <= merge_tol:
            merged_w[-1] += w
        else:
            merged_t.append(t)
            merged_w.append(w)
    t = np.asarray(merged_t)
    w = np.asarray(merged_w)
    if np.any(t >= 1.0 - merge_tol):
        raise ValueError("spectral atom at +1: long-run variance would diverge")
    return SpectralAtoms(t=t, w=w)


# ---------------------------------------------------------------------------
# Sampling


def sample_path(spec, count: int, key: int) -> tuple[np.ndarray, np.ndarray]:
    """Chain states and innovations for one substream key.

    Returns ``(state, xi)`` with ``count`` entries each. ``state`` holds
    chain positions (floats for mh/gaussian, indices for group) and
    ``xi`` the innovations g(state). The substream key comes from
    rng.substream_key(seed, replicate).
    """
    if count < 1:
        raise ValueError("count must be positive")
    k = np.uint64(key)
    if spec.kind == "mh":
        return kernels.mh_path(k, count, 1.0 / spec.a, 1.0 / (spec.a + 1.0), spec.q)
    if spec.kind == "gaussian":
        return kernels.gaussian_path(k, count, spec.r, spec.coeff_array())
    if spec.kind == "group":
        return kernels.group_path(k, count, spec._cdf, spec._table)
    raise ValueError(f"unknown chain kind {spec.kind!r}")


def sample_innovations(spec, count: int, seed: int, replicate: int = 0) -> np.ndarray:
    """Innovation block xi_0, ..., xi_{count-1} for one replicate."""
    _, xi = sample_path(spec, count, rng.substream_key(seed, replicate))
    return xi


def innovation_paths(spec, count: int, seed: int, replicates: int) -> np.ndarray:
    """Matrix of innovation paths, one replicate per row."""
    if replicates < 1:
        raise ValueError("replicates must be positive")
    if count < 1:
        raise ValueError("count must be positive")
    keys = np.array(
        [rng.substream_key(seed, r) for r in range(replicates)], dtype=np.uint64
    )
    if spec.kind == "mh":
        return kernels.mh_paths_batch(keys, count, 1.0 / spec.a, 1.0 / (spec.a + 1.0), spec.q)
    if spec.kind == "gaussian":
        return kernels.gaussian_paths_batch(keys, count, spec.r, spec.coeff_array())
    if spec.kind == "group":
        return kernels.group_paths_batch(keys, count, spec._cdf, spec._table)
    raise ValueError(f"unknown chain kind {spec.kind!r}")


def weighted_sums(spec, prefix: np.ndarray, offsets, window: int, seed: int, replicates: int) -> np.ndarray:
    """Accumulate sum_k (prefix[k + off] - prefix[k]) * xi_k per replicate.

    ``prefix`` must have length >= window + max(offsets); column g of the
    result holds the weighted innovation sum for offsets[g]. One chain
    sweep per replicate serves every offset.
    """
    offs = np.asarray(offsets, dtype=np.int64)
    if offs.ndim != 1 or offs.size == 0:
        raise ValueError("offsets must be a nonempty 1-d sequence")
    if np.any(offs < 0):
        raise ValueError("offsets must be nonnegative")
    if window < 1:
        raise ValueError("window must be positive")
    prefix = np.ascontiguousarray(prefix, dtype=float)
    if prefix.shape[0] < window + int(offs.max()):
        raise ValueError("prefix array is shorter than window + max offset")
    if replicates < 1:
        raise ValueError("replicates must be positive")
    keys = np.array(
        [rng.substream_key(seed, r) for r in range(replicates)], dtype=np.uint64
    )
    out = np.empty((replicates, offs.size))
    if spec.kind == "mh":
        kernels.mh_sums(keys, 1.0 / spec.a, 1.0 / (spec.a + 1.0), spec.q, prefix, offs, window, out)
    elif spec.kind == "gaussian":
        kernels.gaussian_sums(keys, spec.r, spec.coeff_array(), prefix, offs, window, out)
    elif spec.kind == "group":
        kernels.group_sums(keys, spec._cdf, spec._table, prefix, offs, window, out)
    else:
        raise ValueError(f"unknown chain kind {spec.kind!r}")
    return out


def chain_spec(kind: str, **params):
    """Build a chain spec from its kind name and parameters."""
    kinds = {"mh": MHChainSpec, "gaussian": GaussianChainSpec, "group": GroupWalkSpec}
    if kind not in kinds:
        raise ValueError(f"unknown chain kind {kind!r}; expected one of {sorted(kinds)}")
    return kinds[kind](**params)
