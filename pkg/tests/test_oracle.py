import numpy as np
import pytest

from lerwlab.chains import FiniteChainSpec, exact_marginals, green_truncated
from lerwlab.experiments import (
    flip_kill_quarter,
    lazy_cycle,
    lazy_two_state,
    srw_cycle,
    three_state_kill,
    z1_interval,
)
from lerwlab.intersections import TimeSpaceSet
from lerwlab.oracle import (
    BudgetExceededError,
    WeightedPathSet,
    chi_conditional_exact,
    enumerate_paths,
    heat_kernel_identity_check,
    hit_prob_exact,
    intersection_law_exact,
    le_hit_prob_exact,
    moment_identity_check,
    sw_moments_exact,
    weight_table_exact,
)

DIAG = TimeSpaceSet.diagonal()
EMPTY = TimeSpaceSet(lambda m, x, n, y: False, "empty")


def flip_chain():
    return FiniteChainSpec(states=(0, 1), kernel=np.array([[0.0, 1.0], [1.0, 0.0]]))


def half_loop():
    return FiniteChainSpec(states=("o",), kernel=np.array([[0.5]]))


SANDWICH_INSTANCES = [
    (lazy_two_state(), 0, 1, 4),
    (three_state_kill(), 0, 1, 4),
    (flip_kill_quarter(), 0, 1, 5),
]


# --- enumeration ----------------------------------------------------------------


def test_enumerate_zero_horizon():
    ps = enumerate_paths(lazy_two_state(), 0, 0)
    assert ps.paths == ((0,),) and ps.probs.tolist() == [1.0]


def test_enumerate_flip_single_path():
    ps = enumerate_paths(flip_chain(), 0, 1)
    assert ps.paths == ((0, 1),) and ps.probs.tolist() == [1.0]


def test_enumerate_with_killing_mass():
    ps = enumerate_paths(half_loop(), "o", 1)
    assert set(ps.paths) == {("o",), ("o", "o")}
    assert np.allclose(sorted(ps.probs), [0.5, 0.5])


def test_enumerate_mass_conservation():
    for spec, sx, _, T in SANDWICH_INSTANCES:
        ps = enumerate_paths(spec, sx, T)
        assert abs(ps.probs.sum() - 1.0) < 1e-12


def test_enumerate_budget():
    with pytest.raises(BudgetExceededError):
        enumerate_paths(lazy_two_state(), 0, 25, budget=100)


def test_weighted_path_set_validates_mass():
    with pytest.raises(ValueError):
        WeightedPathSet(lazy_two_state(), 0, 1, ((0,),), np.array([0.5]))


# --- hit probability and weights -------------------------------------------------


def test_hit_prob_empty_set():
    sx = enumerate_paths(lazy_two_state(), 0, 2)
    assert hit_prob_exact(sx, sx, EMPTY) == 0.0


def test_hit_prob_forced_at_time_zero():
    sx = enumerate_paths(flip_chain(), 0, 1)
    assert hit_prob_exact(sx, sx, DIAG) == 1.0


def test_hit_prob_lazy_regression():
    # pinned: 1 - P[X stays at 0]*P[Y stays at 1] = 1 - (1/4)^2 = 15/16
    sx = enumerate_paths(lazy_two_state(), 0, 2)
    sy = enumerate_paths(lazy_two_state(), 1, 2)
    assert abs(hit_prob_exact(sx, sy, DIAG) - 15.0 / 16.0) < 1e-15


def test_weight_table_empty_for_empty_set():
    sx = enumerate_paths(lazy_two_state(), 0, 2)
    assert len(weight_table_exact(sx, sx, EMPTY)) == 0


def test_weights_are_conditional_probabilities():
    for spec, sx_state, sy_state, T in SANDWICH_INSTANCES:
        sx = enumerate_paths(spec, sx_state, T)
        sy = enumerate_paths(spec, sy_state, T)
        w = weight_table_exact(sx, sy, DIAG)
        assert all(0.0 <= wt <= 1.0 + 1e-12 for _, wt in w.items())


def test_weight_marginal_identity():
    # sum over (m,x,n,y) of w * P[X_m=x] P[Y_n=y] recovers the hit probability
    spec = three_state_kill()
    sx = enumerate_paths(spec, 0, 4)
    sy = enumerate_paths(spec, 1, 4)
    w = weight_table_exact(sx, sy, DIAG)
    margs_x = exact_marginals(spec, 0, 4)
    margs_y = exact_marginals(spec, 1, 4)
    total = sum(
        wt * margs_x[m, spec.index(x)] * margs_y[n, spec.index(y)]
        for (m, x, n, y), wt in w.items()
    )
    assert abs(total - hit_prob_exact(sx, sy, DIAG)) < 1e-12


# --- S_w moments: the sharpest anchors ---------------------------------------------


@pytest.mark.parametrize("spec,sx_state,sy_state,T", SANDWICH_INSTANCES)
def test_stopping_time_identity_and_sandwich(spec, sx_state, sy_state, T):
    sx = enumerate_paths(spec, sx_state, T)
    sy = enumerate_paths(spec, sy_state, T)
    hit = hit_prob_exact(sx, sy, DIAG)
    w = weight_table_exact(sx, sy, DIAG)
    mom = sw_moments_exact(sx, sy, w)
    assert abs(mom.e_s - hit) < 1e-12  # E S_w = P[hit]
    lower = mom.e_s**2 / mom.e_s2
    assert lower <= hit + 1e-12
    assert hit <= 64.0 * lower + 1e-12
    assert mom.e_s2 <= 64.0 * hit + 1e-12
    assert mom.e_y >= 0.5 * mom.e_s - 1e-12
    assert mom.e_y <= mom.e_s + 1e-12


def test_sw_moments_zero_table():
    sx = enumerate_paths(lazy_two_state(), 0, 2)
    from lerwlab.intersections import WeightTable

    mom = sw_moments_exact(sx, sx, WeightTable({}))
    assert mom.e_s == mom.e_s2 == mom.e_y == mom.e_y2 == 0.0


# --- loop-erasure hit probability ---------------------------------------------------


def test_le_hit_single_state():
    ps = enumerate_paths(half_loop(), "o", 2)
    assert abs(le_hit_prob_exact(ps, ps) - 1.0) < 1e-15


def test_le_hit_regression_lazy_t3():
    sx = enumerate_paths(lazy_two_state(), 0, 3)
    sy = enumerate_paths(lazy_two_state(), 1, 3)
    assert abs(le_hit_prob_exact(sx, sy) - 0.9375) < 1e-15  # pinned on first run


@pytest.mark.parametrize("spec,sx_state,sy_state,T", SANDWICH_INSTANCES)
def test_le_hit_dominates_2_to_minus_8(spec, sx_state, sy_state, T):
    sx = enumerate_paths(spec, sx_state, T)
    sy = enumerate_paths(spec, sy_state, T)
    assert le_hit_prob_exact(sx, sy) >= 2.0**-8 * hit_prob_exact(sx, sy, DIAG)


def test_le_hit_with_prefix_conditional_form():
    # prefix-conditioned variant: LE of (prefix + fresh chain) vs a bound from
    # the unprefixed intersection probability
    spec = lazy_two_state()
    sy = enumerate_paths(spec, 1, 3)
    for prefix, start in [((1, 0), 0), ((0, 1), 1), ((0, 0, 1), 0)]:
        sx = enumerate_paths(spec, start, 3)
        le_hit = le_hit_prob_exact(sx, sy, prefix=prefix)
        hit = hit_prob_exact(sx, sy, DIAG)
        assert le_hit >= 2.0**-8 * hit - 1e-12


# --- conditional exchangeability ------------------------------------------------------


def test_chi_conditional_regressions():
    sx = enumerate_paths(lazy_two_state(), 0, 3)
    sy = enumerate_paths(lazy_two_state(), 1, 3)
    assert abs(chi_conditional_exact(sx, sy, 1, 1, 0) - 1.0) < 1e-15
    assert abs(chi_conditional_exact(sx, sy, 1, 1, 1) - 0.8125) < 1e-15  # 13/16


def test_chi_conditional_diag_at_least_half():
    for spec, sx_state, sy_state, T in SANDWICH_INSTANCES:
        sx = enumerate_paths(spec, sx_state, T)
        sy = enumerate_paths(spec, sy_state, T)
        for m in range(T + 1):
            for x in spec.states:
                try:
                    val = chi_conditional_exact(sx, sy, m, m, x)
                except ValueError:
                    continue
                assert val >= 0.5 - 1e-12


def test_chi_conditional_terminal_time_is_one():
    spec = lazy_two_state()
    sx = enumerate_paths(spec, 0, 3)
    sy = enumerate_paths(spec, 1, 3)
    # at m = n = T the X-continuation is just {x}, so i <= j = J(m) always
    for x in (0, 1):
        assert abs(chi_conditional_exact(sx, sy, 3, 3, x) - 1.0) < 1e-15


def test_chi_conditional_zero_probability_event():
    sx = enumerate_paths(flip_chain(), 0, 3)
    sy = enumerate_paths(flip_chain(), 1, 3)
    with pytest.raises(ValueError):
        chi_conditional_exact(sx, sy, 1, 1, 1)  # X_1 = 1 but Y_1 = 0 surely


# --- truncated-Green identities --------------------------------------------------------


def test_moment_identity_n0():
    rep = moment_identity_check(lazy_cycle(5), 0, 0)
    assert rep.e_i_from_green == 1.0
    assert rep.e_i_pairwise == 1.0


def test_moment_identity_c5():
    spec = lazy_cycle(5)
    rep = moment_identity_check(spec, 0, 4, transitive=True)
    assert abs(rep.e_i_from_green - rep.e_i_pairwise) < 1e-12
    assert rep.e_i_sq <= rep.e_i_sq_bound + 1e-12
    assert rep.allz_spread < 1e-12
    # cross-check both moments against full path-pair enumeration
    ps = enumerate_paths(spec, 0, 4)
    law = intersection_law_exact(ps, ps)
    assert abs(law.e_i - rep.e_i_from_green) < 1e-12
    assert abs(law.e_i_sq - rep.e_i_sq) < 1e-12


def test_moment_identity_green_consistency():
    spec = lazy_cycle(5)
    rep = moment_identity_check(spec, 0, 4)
    g = green_truncated(spec, 0, 4)
    assert abs(rep.e_i_from_green - sum(v * v for v in g.values())) < 1e-12


def test_transitivity_flag_rejects_nontransitive():
    spec = FiniteChainSpec(states=(0, 1), kernel=np.array([[0.0, 0.5], [0.9, 0.0]]))
    with pytest.raises(ValueError):
        moment_identity_check(spec, 0, 3, transitive=True)
    rep = moment_identity_check(spec, 0, 3, transitive=False)
    assert rep.allz_spread > 1e-6


def test_kahane_inequality_exact():
    ps = enumerate_paths(lazy_cycle(5), 0, 4)
    law = intersection_law_exact(ps, ps)
    for eps in (0.1, 0.5):
        assert law.tail(eps * law.e_i) >= (1 - eps) ** 2 / 4.0
    assert abs(sum(law.pmf.values()) - 1.0) < 1e-12
    assert law.tail(0.0) == pytest.approx(1.0, abs=1e-12)


# --- heat-kernel identity ------------------------------------------------------------


def test_heat_kernel_n0():
    lhs, rhs = heat_kernel_identity_check(srw_cycle(6), 0, 0)
    assert lhs == rhs == 1.0


def test_heat_kernel_c6_and_interval():
    for spec in (srw_cycle(6), z1_interval(40)):
        lhs, rhs = heat_kernel_identity_check(spec, 0, 20)
        assert abs(lhs - rhs) < 1e-12


def test_heat_kernel_rejects_asymmetric():
    spec = FiniteChainSpec(states=(0, 1), kernel=np.array([[0.0, 0.5], [0.0, 0.0]]))
    with pytest.raises(ValueError):
        heat_kernel_identity_check(spec, 0, 3)


# --- randomized instances: the identities must hold on every chain ------------------


def _random_substochastic(rng, size):
    raw = rng.random((size, size)) * rng.random((size, size))
    scale = rng.uniform(0.55, 1.0, size=size) / raw.sum(axis=1)
    return FiniteChainSpec(states=tuple(range(size)), kernel=raw * scale[:, None])


def test_identity_and_sandwich_on_random_kernels():
    rng = np.random.default_rng(314)
    for _ in range(25):
        size = int(rng.integers(2, 4))
        spec = _random_substochastic(rng, size)
        sx_state, sy_state = rng.integers(0, size, size=2)
        T = int(rng.integers(1, 5))
        sx = enumerate_paths(spec, int(sx_state), T)
        sy = enumerate_paths(spec, int(sy_state), T)
        hit = hit_prob_exact(sx, sy, DIAG)
        w = weight_table_exact(sx, sy, DIAG)
        assert all(0.0 <= wt <= 1.0 + 1e-12 for _, wt in w.items())
        mom = sw_moments_exact(sx, sy, w)
        assert abs(mom.e_s - hit) < 1e-12
        if hit > 0:
            lower = mom.e_s**2 / mom.e_s2
            assert lower <= hit + 1e-12
            assert hit <= 64.0 * lower + 1e-12
            assert mom.e_s2 <= 64.0 * hit + 1e-12
        assert mom.e_y <= mom.e_s + 1e-12
        assert le_hit_prob_exact(sx, sy) >= 2.0**-8 * hit - 1e-12


def test_chi_conditional_half_on_random_identical_kernels():
    # same-kernel pairs at equal clock times: the 1/2 bound survives truncation
    rng = np.random.default_rng(2718)
    for _ in range(15):
        size = int(rng.integers(2, 4))
        spec = _random_substochastic(rng, size)
        sx_state, sy_state = rng.integers(0, size, size=2)
        T = int(rng.integers(1, 5))
        sx = enumerate_paths(spec, int(sx_state), T)
        sy = enumerate_paths(spec, int(sy_state), T)
        for m in range(T + 1):
            for x in spec.states:
                try:
                    val = chi_conditional_exact(sx, sy, m, m, x)
                except ValueError:
                    continue
                assert val >= 0.5 - 1e-12


def test_heat_kernel_identity_on_random_symmetric_kernels():
    rng = np.random.default_rng(161)
    for _ in range(15):
        size = int(rng.integers(2, 6))
        raw = rng.random((size, size))
        sym = (raw + raw.T) / 2.0
        sym /= sym.sum(axis=1).max() * rng.uniform(1.0, 1.6)
        spec = FiniteChainSpec(states=tuple(range(size)), kernel=sym)
        lhs, rhs = heat_kernel_identity_check(spec, int(rng.integers(0, size)), 8)
        assert abs(lhs - rhs) < 1e-12


def test_moment_identity_on_random_circulants():
    # circulant kernels are vertex-transitive, so the 4-bound applies
    rng = np.random.default_rng(999)
    for _ in range(10):
        size = int(rng.integers(3, 6))
        mass = rng.random(size)
        mass[0] = rng.random() * 0.5  # lazy part
        mass /= mass.sum() / rng.uniform(0.7, 1.0)
        kern = np.empty((size, size))
        for i in range(size):
            for j in range(size):
                kern[i, j] = mass[(j - i) % size]
        spec = FiniteChainSpec(states=tuple(range(size)), kernel=kern)
        n = int(rng.integers(1, 4))
        rep = moment_identity_check(spec, 0, n, transitive=True)
        ps = enumerate_paths(spec, 0, n, budget=10**6)
        law = intersection_law_exact(ps, ps)
        assert abs(rep.e_i_from_green - law.e_i) < 1e-12
        assert abs(rep.e_i_sq - law.e_i_sq) < 1e-12
        assert rep.e_i_sq <= rep.e_i_sq_bound + 1e-12
