"""Coefficient families and partial-sum weight profiles.

A linear process X_k = sum_j a_{k+j} xi_j is described by its coefficient
sequence (a_i). Partial sums collapse to weighted sums of innovations,
S_n = sum_j b_{n,j} xi_j with b_{n,j} = a_{j+1} + ... + a_{j+n}, so the
object of interest here is the weight profile: the window of j where
b_{n,j} matters, the weights themselves, and b_n^2 = sum_j b_{n,j}^2.

Families (all causal, a_i = 0 below the support start i0):

    power_law   a_i = i^-alpha, i >= 1, alpha in (1/2, 1)      beta = 3 - 2 alpha
    frac_int    a_i = Gamma(i+d) / (Gamma(d) i!), i >= 0,
                d in (0, 1/2)                                  beta = 2d + 1
    power_diff  a_0 = 1, a_i = (i+1)^-alpha - i^-alpha, i >= 1,
                alpha in (0, 1/2)  (negative for i >= 1)       beta = 1 - 2 alpha
    log_power   a_i = i^-1/2 (1 + ln i)^-alpha, i >= 1,
                alpha > 1/2                                    beta = 2
    geometric   a_i = scale * ratio^i, i >= 0                  beta = 1
    delta       a_1 = 1, else 0                                beta = 1

beta is the regular-variation index of b_n^2 (b_n^2 varies regularly with
exponent beta, i.e. b_{2n}^2 / b_n^2 -> 2^beta). log_power uses
(1 + ln i)^-alpha rather than (ln i)^-alpha so the i = 1 term is finite;
the index is unchanged.

Truncation is certified, never silent: a profile's window [j_min, j_max]
satisfies sum_{j not in window} b_{n,j}^2 <= eps * b_n^2, established from
|b_{n,j}| <= n |a_{j+1}| (coefficients decrease in absolute value past the
support start) together with a per-family closed-form bound on
sum_{i >= M} a_i^2.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

DEFAULT_WINDOW_CAP = 1 << 26


class TruncationError(RuntimeError):
    """Requested truncation eps is unattainable within the window cap."""


class SummabilityError(ValueError):
    """The family has no usable absolute sum for short-memory scaling."""


class PowerLaw:
    """a_i = i^-alpha for i >= 1; long memory, beta = 3 - 2 alpha."""

    variant = "power_law"
    i0 = 1
    finite_support_end = None

    def __init__(self, alpha: float):
        if not 0.5 < alpha < 1.0:
            raise ValueError(f"power_law needs alpha in (1/2, 1), got {alpha}")
        self.alpha = float(alpha)

    @property
    def beta(self) -> float:
        return 3.0 - 2.0 * self.alpha

    @property
    def params(self) -> dict:
        return {"alpha": self.alpha}

    def coeff_block(self, lo: int, hi: int) -> np.ndarray:
        i = np.arange(lo, hi + 1, dtype=np.float64)
        out = np.where(i >= 1, np.maximum(i, 1.0) ** (-self.alpha), 0.0)
        return out

    def tail_sq_bound(self, M: int) -> float:
        # sum_{i>=M} i^-2a <= M^-2a + M^(1-2a)/(2a-1), integral comparison
        M = max(M, 1)
        a2 = 2.0 * self.alpha
        return M ** (-a2) + M ** (1.0 - a2) / (a2 - 1.0)

    def abs_sum(self) -> float:
        raise SummabilityError("power_law coefficients are not absolutely summable")


class FracInt:
    """Fractional-integration coefficients, a_{i+1} = a_i (i+d)/(i+1), a_0 = 1."""

    variant = "frac_int"
    i0 = 0
    finite_support_end = None

    def __init__(self, d: float):
        if not 0.0 < d < 0.5:
            raise ValueError(f"frac_int needs d in (0, 1/2), got {d}")
        self.d = float(d)

    @property
    def beta(self) -> float:
        return 2.0 * self.d + 1.0

    @property
    def params(self) -> dict:
        return {"d": self.d}

    def coeff_block(self, lo: int, hi: int) -> np.ndarray:
        # stable product recurrence from a_0 = 1; cumprod keeps relative
        # error ~ sqrt(length) ulps, checked against lgamma in the tests
        ratios = np.arange(1, hi + 1, dtype=np.float64)
        ratios = (ratios - 1.0 + self.d) / ratios
        full = np.concatenate([[1.0], np.cumprod(ratios)])
        return full[lo : hi + 1]

    def tail_sq_bound(self, M: int) -> float:
        # a_i * i^(1-d) increases to 1/Gamma(d)  (ratio a_{i+1}/a_i = (i+d)/(i+1)
        # and Jensen on 1/(i+s)), so a_i <= i^(d-1)/Gamma(d) for all i >= 1
        M = max(M, 1)
        g2 = math.gamma(self.d) ** 2
        e = 2.0 * self.d - 2.0
        return (M**e + M ** (e + 1.0) / (1.0 - 2.0 * self.d)) / g2

    def abs_sum(self) -> float:
        raise SummabilityError("frac_int coefficients are not absolutely summable")


class PowerDiff:
    """a_0 = 1 and a_i = (i+1)^-alpha - i^-alpha < 0 for i >= 1.

    Prefix sums telescope: A_m = (m+1)^-alpha, so the plain coefficient sum
    is 0 and b_n^2 shrinks to regular variation with beta = 1 - 2 alpha.
    """

    variant = "power_diff"
    i0 = 0
    finite_support_end = None

    def __init__(self, alpha: float):
        if not 0.0 < alpha < 0.5:
            raise ValueError(f"power_diff needs alpha in (0, 1/2), got {alpha}")
        self.alpha = float(alpha)

    @property
    def beta(self) -> float:
        return 1.0 - 2.0 * self.alpha

    @property
    def params(self) -> dict:
        return {"alpha": self.alpha}

    def coeff_block(self, lo: int, hi: int) -> np.ndarray:
        i = np.arange(lo, hi + 1, dtype=np.float64)
        safe = np.maximum(i, 1.0)
        out = (safe + 1.0) ** (-self.alpha) - safe ** (-self.alpha)
        out[i < 1] = 0.0
        if lo == 0:
            out[0] = 1.0
        return out

    def tail_sq_bound(self, M: int) -> float:
        # |a_i| = i^-a - (i+1)^-a <= alpha * i^-(a+1)
        M = max(M, 1)
        e = -2.0 * self.alpha - 2.0
        return self.alpha**2 * (M**e + M ** (e + 1.0) / (2.0 * self.alpha + 1.0))

    def abs_sum(self) -> float:
        raise SummabilityError(
            "power_diff coefficient sum telescopes to zero; "
            "the sqrt(n) short-memory scaling is degenerate"
        )


class LogPower:
    """a_i = i^-1/2 (1 + ln i)^-alpha for i >= 1; boundary case beta = 2."""

    variant = "log_power"
    i0 = 1
    finite_support_end = None

    def __init__(self, alpha: float):
        if not alpha > 0.5:
            raise ValueError(f"log_power needs alpha > 1/2, got {alpha}")
        self.alpha = float(alpha)

    @property
    def beta(self) -> float:
        return 2.0

    @property
    def params(self) -> dict:
        return {"alpha": self.alpha}

    def coeff_block(self, lo: int, hi: int) -> np.ndarray:
        i = np.arange(lo, hi + 1, dtype=np.float64)
        safe = np.maximum(i, 1.0)
        out = safe**-0.5 * (1.0 + np.log(safe)) ** (-self.alpha)
        out[i < 1] = 0.0
        return out

    def tail_sq_bound(self, M: int) -> float:
        M = max(M, 1)
        a2 = 2.0 * self.alpha
        lm = 1.0 + math.log(M)
        return (1.0 / M) * lm ** (-a2) + lm ** (1.0 - a2) / (a2 - 1.0)

    def abs_sum(self) -> float:
        raise SummabilityError("log_power coefficients are not absolutely summable")


class Geometric:
    """a_i = scale * ratio^i for i >= 0; short memory, A = scale/(1-ratio)."""

    variant = "geometric"
    i0 = 0
    finite_support_end = None

    def __init__(self, ratio: float, scale: float = 1.0):
        if not 0.0 < ratio < 1.0:
            raise ValueError(f"geometric needs ratio in (0, 1), got {ratio}")
        if scale <= 0.0:
            raise ValueError(f"geometric needs scale > 0, got {scale}")
        self.ratio = float(ratio)
        self.scale = float(scale)

    @property
    def beta(self) -> float:
        return 1.0

    @property
    def params(self) -> dict:
        return {"ratio": self.ratio, "scale": self.scale}

    def coeff_block(self, lo: int, hi: int) -> np.ndarray:
        i = np.arange(lo, hi + 1, dtype=np.float64)
        return self.scale * self.ratio**i

    def tail_sq_bound(self, M: int) -> float:
        M = max(M, 0)
        return self.scale**2 * self.ratio ** (2 * M) / (1.0 - self.ratio**2)

    def abs_sum(self) -> float:
        return self.scale / (1.0 - self.ratio)


class Delta:
    """a_1 = 1, all other coefficients 0: S_n is a plain innovation block sum."""

    variant = "delta"
    i0 = 1
    finite_support_end = 1

    def __init__(self):
        pass

    @property
    def beta(self) -> float:
        return 1.0

    @property
    def params(self) -> dict:
        return {}

    def coeff_block(self, lo: int, hi: int) -> np.ndarray:
        i = np.arange(lo, hi + 1)
        return (i == 1).astype(np.float64)

    def tail_sq_bound(self, M: int) -> float:
        return 0.0 if M >= 2 else 1.0

    def abs_sum(self) -> float:
        return 1.0


_VARIANTS = {
    "power_law": PowerLaw,
    "frac_int": FracInt,
    "power_diff": PowerDiff,
    "log_power": LogPower,
    "geometric": Geometric,
    "delta": Delta,
}


def family(variant: str, **params):
    """Build a coefficient family by name; unknown names or params raise."""
    try:
        cls = _VARIANTS[variant]
    except KeyError:
        raise ValueError(
            f"unknown variant {variant!r}; expected one of {sorted(_VARIANTS)}"
        ) from None
    return cls(**params)


def coeff(fam, i: int) -> float:
    """Single coefficient a_i; indices outside the support return 0."""
    if i < fam.i0:
        return 0.0
    return float(fam.coeff_block(i, i)[0])


@dataclass
class WeightProfile:
    """Certified window of partial-sum weights b_{n,j}.

    weights[k] = b_{n, j_min + k}. prefix[k] = A_{j_min + k} (coefficient
    prefix sums, length len(weights) + n) so that b_{m, j_min+k} =
    prefix[k+m] - prefix[k] for any 1 <= m <= n; present whenever the
    profile came from a family, None for hand-built profiles.
    tail_bound bounds the squared-weight mass beyond j_max and satisfies
    tail_bound <= eps * bn2.
    """

    variant: str
    n: int
    eps: float
    j_min: int
    j_max: int
    weights: np.ndarray
    bn2: float
    tail_bound: float
    prefix: np.ndarray | None = field(default=None, repr=False)

    @property
    def tail_fraction(self) -> float:
        return self.tail_bound / self.bn2 if self.bn2 > 0 else 0.0

    def weights_for(self, m: int) -> np.ndarray:
        """Weights b_{m, j} over this profile's window, from shared prefixes."""
        if self.prefix is None:
            raise ValueError("profile has no prefix sums (hand-built)")
        if not 1 <= m <= self.n:
            raise ValueError(f"m must be in [1, n]; got {m} with n={self.n}")
        w = len(self.weights)
        return self.prefix[m : m + w] - self.prefix[:w]

    @staticmethod
    def from_weights(weights, n: int, j_min: int, variant: str = "custom"):
        """Wrap an explicit weight array (used by tests and blocked profiles)."""
        weights = np.asarray(weights, dtype=np.float64)
        bn2 = float(np.dot(weights, weights))
        return WeightProfile(
            variant=variant,
            n=n,
            eps=0.0,
            j_min=j_min,
            j_max=j_min + len(weights) - 1,
            weights=weights,
            bn2=bn2,
            tail_bound=0.0,
        )


def weight_profile(fam, n: int, eps: float, cap: int = DEFAULT_WINDOW_CAP) -> WeightProfile:
    """Compute b_{n,j} over a window certified to hold all but eps of b_n^2.

    The window always starts at j_min = i0 - n (weights vanish exactly
    below it). j_max grows by doubling until the closed-form bound
    n^2 * sum_{i >= j_max+2} a_i^2 on the excluded mass drops under
    eps * (retained mass); a cap violation raises TruncationError.
    """
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    if not 0.0 < eps < 1.0:
        raise ValueError(f"eps must be in (0, 1), got {eps}")
    j_min = fam.i0 - n
    if fam.finite_support_end is not None:
        j_max = fam.finite_support_end - 1
        prefix, weights, bn2 = _build(fam, n, j_min, j_max)
        return WeightProfile(fam.variant, n, eps, j_min, j_max, weights, bn2,
                             0.0, prefix)
    j_max = max(2 * n, 64)
    prefix, weights, bn2 = _build(fam, n, j_min, j_max)
    tail = n * n * fam.tail_sq_bound(j_max + 2)
    if tail <= eps * bn2:
        return WeightProfile(fam.variant, n, eps, j_min, j_max, weights,
                             bn2, tail, prefix)
    # The bound is closed form, so locate the smallest adequate j_max by
    # bisection against the current bn2 (an underestimate: extending the
    # window only adds squared weights, so the certificate carries over).
    cap_j = cap + j_min - 1
    hi = j_max
    capped = False
    while n * n * fam.tail_sq_bound(hi + 2) > eps * bn2:
        hi *= 2
        if hi >= cap_j:
            # Decide against an upper bound on the full-window mass before
            # paying for a cap-sized build; bn2 can gain at most the
            # bounded tail mass beyond the window built so far.
            bn2_ub = bn2 + n * n * fam.tail_sq_bound(j_max + 2)
            if n * n * fam.tail_sq_bound(cap_j + 2) > eps * bn2_ub:
                raise TruncationError(
                    f"window for {fam.variant} n={n} eps={eps} exceeds cap "
                    f"{cap}; raise eps or the cap"
                )
            hi = cap_j
            capped = True
            break
    if not capped:
        lo = j_max
        while lo + 1 < hi:
            mid = (lo + hi) // 2
            if n * n * fam.tail_sq_bound(mid + 2) <= eps * bn2:
                hi = mid
            else:
                lo = mid
    j_max = hi
    prefix, weights, bn2 = _build(fam, n, j_min, j_max)
    tail = n * n * fam.tail_sq_bound(j_max + 2)
    if tail > eps * bn2:
        raise TruncationError(
            f"window for {fam.variant} n={n} eps={eps} exceeds cap {cap}; "
            "raise eps or the cap"
        )
    # The bisection certified against the starting window's bn2, an
    # underestimate, so j_max can overshoot. One refinement pass against
    # the built bn2 tightens the window; keep it only if the shrunk
    # window still passes its own certificate. The (1 - eps) margin
    # absorbs the mass lost by shrinking, which is itself below eps.
    lo = max(2 * n, 64)
    hi = j_max
    while lo + 1 < hi:
        mid = (lo + hi) // 2
        if n * n * fam.tail_sq_bound(mid + 2) <= eps * (1.0 - eps) * bn2:
            hi = mid
        else:
            lo = mid
    if hi < j_max:
        prefix2, weights2, bn2_2 = _build(fam, n, j_min, hi)
        tail2 = n * n * fam.tail_sq_bound(hi + 2)
        if tail2 <= eps * bn2_2:
            j_max, prefix, weights, bn2, tail = hi, prefix2, weights2, bn2_2, tail2
    return WeightProfile(fam.variant, n, eps, j_min, j_max, weights, bn2,
                         tail, prefix)


def _build(fam, n, j_min, j_max):
    coeffs = fam.coeff_block(fam.i0, j_max + n)
    prefix = np.concatenate([np.zeros(n), np.cumsum(coeffs)])
    w = j_max - j_min + 1
    prefix = prefix[: w + n]
    weights = prefix[n:] - prefix[:w]
    bn2 = float(np.dot(weights, weights))
    return prefix, weights, bn2


@dataclass
class RegVarDiagnostic:
    """Scaling diagnostics for b_n^2: grid ratios and a dyadic log-log fit."""

    variant: str
    n: int
    beta: float
    ratios: list  # (t, bn2([nt]) / bn2(n), t**beta)
    doubling: float  # bn2(2n) / bn2(n), reference 2**beta
    beta_hat: float  # slope of log bn2 vs log n over the dyadic grid
    grid_n: list
    grid_bn2: list


def regvar_diagnostic(fam, n: int, t_grid=(0.25, 0.5, 1.0), eps: float = 1e-2,
                      levels: int = 5) -> RegVarDiagnostic:
    """Regular-variation check: b_{[nt]}^2 / b_n^2 against t^beta.

    Each b_m^2 uses its own profile at the same eps so certified windows
    scale with m and truncation deficits cancel in ratios.
    """
    if n < 8:
        raise ValueError("n too small for scaling diagnostics")
    bn2 = {}

    def get(m):
        if m not in bn2:
            bn2[m] = weight_profile(fam, m, eps).bn2
        return bn2[m]

    ratios = []
    for t in t_grid:
        m = int(n * t)
        if m < 1:
            raise ValueError(f"grid point t={t} gives [nt] < 1")
        ratios.append((float(t), get(m) / get(n), float(t) ** fam.beta))
    doubling = get(2 * n) / get(n)
    ks = [n >> k for k in range(levels) if (n >> k) >= 8]
    logs_n = np.log([float(k) for k in ks])
    logs_b = np.log([get(k) for k in ks])
    beta_hat = float(np.polyfit(logs_n, logs_b, 1)[0])
    return RegVarDiagnostic(fam.variant, n, fam.beta, ratios, doubling,
                            beta_hat, ks, [bn2[k] for k in ks])


def abs_sum(fam) -> float:
    """Plain coefficient sum A for absolutely summable short-memory families."""
    return fam.abs_sum()
