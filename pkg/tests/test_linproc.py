"""Partial sums in weight form: exchange identity, blocking, path grids."""

import numpy as np
import pytest

from revlin.coefficients import WeightProfile, family, weight_profile
from revlin.innovations import chain_spec, sample_path, weighted_sums
from revlin.linproc import (
    PathRequest,
    blocked_weights,
    grid_offsets,
    partial_sum,
    path_values,
)
from revlin.rng import substream_key

MH11 = chain_spec("mh", a=1.0, q=1.0)


def test_partial_sum_equals_double_sum():
    # S_n = sum_k X_k with X_k = sum_j a_{k+j} xi_j, both restricted to
    # the profile window, must equal the single weighted pass exactly
    fam = family("geometric", ratio=0.5)
    n = 6
    profile = weight_profile(fam, n, 1e-9)
    rng = np.random.default_rng(3)
    xi = rng.normal(size=len(profile.weights))
    coeffs = fam.coeff_block(fam.i0, profile.j_max + n)

    def a(i):
        return coeffs[i - fam.i0] if i >= fam.i0 else 0.0

    brute = 0.0
    for k in range(1, n + 1):
        for idx, j in enumerate(range(profile.j_min, profile.j_max + 1)):
            brute += a(k + j) * xi[idx]
    got = partial_sum(profile, xi)
    assert got == pytest.approx(brute, rel=1e-12)


def test_partial_sum_is_linear():
    profile = weight_profile(family("frac_int", d=0.25), 16, 1e-3)
    rng = np.random.default_rng(11)
    xi = rng.normal(size=len(profile.weights))
    eta = rng.normal(size=len(profile.weights))
    lhs = partial_sum(profile, 2.5 * xi - 0.75 * eta)
    rhs = 2.5 * partial_sum(profile, xi) - 0.75 * partial_sum(profile, eta)
    assert lhs == pytest.approx(rhs, rel=1e-12)


def test_partial_sum_rejects_misaligned_window():
    profile = weight_profile(family("delta"), 8, 1e-3)
    with pytest.raises(ValueError):
        partial_sum(profile, np.zeros(7))


def test_blocked_weights_pairwise_identity():
    # sum_j (b_j + b_{j-1}) xi_j over the widened window must equal
    # sum_j b_j (xi_j + xi_{j+1}) over the original one
    profile = weight_profile(family("frac_int", d=0.25), 12, 1e-3)
    blocked = blocked_weights(profile)
    assert blocked.j_min == profile.j_min
    assert blocked.j_max == profile.j_max + 1
    rng = np.random.default_rng(5)
    xi = rng.normal(size=len(blocked.weights))
    left = partial_sum(blocked, xi)
    w = profile.weights
    right = float(np.dot(w, xi[:-1] + xi[1:]))
    assert left == pytest.approx(right, rel=1e-10)


def test_blocked_delta_gives_binomial_weights():
    profile = weight_profile(family("delta"), 2, 1e-3)
    blocked = blocked_weights(profile)
    assert np.array_equal(blocked.weights, [1.0, 2.0, 1.0])
    assert blocked.bn2 == 6.0
    profile5 = weight_profile(family("delta"), 5, 1e-3)
    blocked5 = blocked_weights(profile5)
    assert np.array_equal(blocked5.weights, [1.0, 2.0, 2.0, 2.0, 2.0, 1.0])


def test_blocked_mass_at_most_quadrupled():
    # (b_j + b_{j-1})^2 <= 2 b_j^2 + 2 b_{j-1}^2 summed over the window
    for variant, params, eps in [
        ("frac_int", {"d": 0.25}, 1e-3),
        ("geometric", {"ratio": 0.5}, 1e-9),
        ("delta", {}, 1e-3),
    ]:
        profile = weight_profile(family(variant, **params), 24, eps)
        blocked = blocked_weights(profile)
        assert blocked.bn2 <= 4.0 * profile.bn2 + 1e-12
        assert blocked.tail_bound == 4.0 * profile.tail_bound


def test_blocked_works_on_hand_built_profiles():
    profile = WeightProfile.from_weights([1.0, -2.0, 3.0], n=3, j_min=0)
    blocked = blocked_weights(profile)
    assert np.array_equal(blocked.weights, [1.0, -1.0, 1.0, 3.0])


def test_path_values_match_partial_sum_at_t_one():
    fam = family("frac_int", d=0.25)
    req = PathRequest(family=fam, chain=MH11, n=64, t_grid=(0.5, 1.0),
                      eps=1e-3, seed=99, replicate=4)
    sample = path_values(req)
    profile = weight_profile(fam, 64, 1e-3)
    key = substream_key(99, 4)
    _, xi = sample_path(MH11, len(profile.weights), key)
    bn = np.sqrt(profile.bn2)
    assert sample.values[-1] == pytest.approx(sample.s_n / bn, rel=1e-12)
    assert sample.s_n == pytest.approx(partial_sum(profile, xi), rel=1e-12)
    assert sample.bn2 == profile.bn2
    assert (sample.j_min, sample.j_max) == (profile.j_min, profile.j_max)


def test_path_values_delta_reduce_to_block_sums():
    # with a_1 = 1 only, S_m sums the last m window innovations, so the
    # normalized path is a cumulative block sum of the same realization
    fam = family("delta")
    n = 40
    req = PathRequest(family=fam, chain=MH11, n=n, t_grid=(0.25, 0.5, 1.0),
                      eps=1e-3, seed=7, replicate=2)
    sample = path_values(req)
    key = substream_key(7, 2)
    _, xi = sample_path(MH11, n, key)
    for g, t in enumerate(req.t_grid):
        m = int(n * t)
        want = xi[n - m :].sum() / np.sqrt(float(n))
        assert sample.values[g] == pytest.approx(want, rel=1e-12)


def test_path_values_agree_with_streaming_sums():
    # the one-pass streaming kernel and the materialized path must give
    # the same weighted sums for the same seed and replicate set
    fam = family("frac_int", d=0.25)
    n = 32
    t_grid = (0.25, 0.5, 1.0)
    profile = weight_profile(fam, n, 1e-2)
    offs = grid_offsets(n, t_grid)
    window = len(profile.weights)
    sums = weighted_sums(MH11, profile.prefix, offs, window, 123, 6)
    bn = np.sqrt(profile.bn2)
    for r in range(6):
        req = PathRequest(family=fam, chain=MH11, n=n, t_grid=t_grid,
                          eps=1e-2, seed=123, replicate=r)
        sample = path_values(req, profile=profile)
        assert np.allclose(sample.values, sums[r] / bn, rtol=1e-10, atol=1e-12)


def test_truncation_stability_of_partial_sums():
    # same seed, tighter eps: the two sums differ only through the extra
    # tail window, whose innovation mass is eps-bounded
    fam = family("frac_int", d=0.25)
    n = 48
    loose = weight_profile(fam, n, 1e-2)
    tight = weight_profile(fam, n, 1e-3)
    assert len(tight.weights) > len(loose.weights)
    for rep in range(20):
        key = substream_key(2024, rep)
        _, xi = sample_path(MH11, len(tight.weights), key)
        s_loose = partial_sum(loose, xi[: len(loose.weights)])
        s_tight = partial_sum(tight, xi)
        assert abs(s_tight - s_loose) < 0.5 * np.sqrt(loose.bn2)


def test_grid_offsets_validation():
    assert np.array_equal(grid_offsets(100, (0.25, 0.5, 1.0)), [25, 50, 100])
    with pytest.raises(ValueError):
        grid_offsets(8, (0.05, 1.0))  # [n t] < 1
    with pytest.raises(ValueError):
        grid_offsets(10, (0.2, 0.25))  # offsets collide


def test_path_request_validation():
    fam = family("delta")
    with pytest.raises(ValueError):
        PathRequest(family=fam, chain=MH11, n=1, t_grid=(1.0,), eps=1e-3, seed=0)
    with pytest.raises(ValueError):
        PathRequest(family=fam, chain=MH11, n=8, t_grid=(), eps=1e-3, seed=0)
    with pytest.raises(ValueError):
        PathRequest(family=fam, chain=MH11, n=8, t_grid=(0.5, 0.5), eps=1e-3, seed=0)
    with pytest.raises(ValueError):
        PathRequest(family=fam, chain=MH11, n=8, t_grid=(0.5, 1.5), eps=1e-3, seed=0)
    with pytest.raises(ValueError):
        PathRequest(family=fam, chain=MH11, n=8, t_grid=(0.05, 1.0), eps=1e-3, seed=0)


def test_path_values_requires_prefix():
    profile = WeightProfile.from_weights(np.ones(8), n=8, j_min=-7)
    req = PathRequest(family=family("delta"), chain=MH11, n=8, t_grid=(1.0,),
                      eps=1e-3, seed=1)
    with pytest.raises(ValueError):
        path_values(req, profile=profile)
