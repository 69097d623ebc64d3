import numpy as np
from hypothesis import given, settings
from hypothesis import strategies as st

from symground.rng import RandomStream, draw_normal, draw_uniform
from symground.world import (
    ChannelParams,
    WorldConfig,
    advance_channels,
    initial_environment,
    sample_context,
    step_environment,
)


def test_zero_noise_identity():
    cfg = WorldConfig(m_e=2, m_i=1)
    env = initial_environment(cfg, [0.3, -0.2, 1.5])
    nxt = step_environment(env, cfg, RandomStream(0, "world"))
    assert nxt.step == 1
    assert np.array_equal(nxt.channels, env.channels)


def test_full_reversion_in_one_step():
    cfg = WorldConfig(m_e=1, m_i=0, reversion_rate=1.0, long_run_means=0.0)
    env = initial_environment(cfg, [2.0])
    assert step_environment(env, cfg, RandomStream(0, "world")).relevant[0] == 0.0


def test_lengths_preserved(world):
    env = initial_environment(world)
    for t in range(5):
        env = step_environment(env, world, RandomStream(1, "world", 0, t))
    assert env.relevant.shape == (4,) and env.irrelevant.shape == (4,)


def test_random_walk_variance_monte_carlo():
    # kernel evaluated on 10^5 replicas at once with the same draws the stream would use
    reps, steps, sigma = 100_000, 20, 0.1
    x = np.zeros(reps)
    ids = np.arange(reps)
    for t in range(steps):
        eta = draw_normal(4, "rw", ids, t)[:, 0]
        x = advance_channels(x, 0.0, 0.0, sigma, 0.0, 1.0, 1.0, eta, np.ones(reps), np.zeros(reps))
    expected = sigma**2 * steps
    assert abs(x.var() / expected - 1) < 0.05


def test_step_environment_matches_kernel():
    cfg = WorldConfig(m_e=2, m_i=2, reversion_rate=0.3, long_run_means=(0.5, -0.5),
                      diffusion=0.2, jump_prob=0.1, jump_range=2.0,
                      irrelevant=ChannelParams(long_run_means=0.0))
    env = initial_environment(cfg, [1.0, 2.0, 3.0, 4.0])
    rng = RandomStream(3, "world", 0, 1)
    got = step_environment(env, cfg, rng)
    ref = RandomStream(3, "world", 0, 1)
    eta, uj, uv = ref.normal(4), ref.random(4), ref.random(4)
    p = cfg.channel_arrays()
    want = advance_channels(env.channels, 0.3, p["long_run_means"], 0.2, 0.1, 2.0, 1.0, eta, uj, uv)
    assert np.array_equal(got.channels, want)


def test_jump_rate():
    n, p = 200_000, 0.03
    u = draw_uniform(1, "jump", np.arange(n), 0)[:, 0]
    x = advance_channels(np.full(n, 5.0), 0.0, 0.0, 0.0, p, 1.0, 1.0, np.zeros(n), u, np.full(n, 0.5))
    rate = np.mean(x != 5.0)
    assert abs(rate - p) < 3 * np.sqrt(p * (1 - p) / n)


def test_jump_values_in_range():
    cfg = WorldConfig(m_e=3, m_i=3, jump_prob=1.0, jump_range=0.7)
    env = initial_environment(cfg)
    for t in range(50):
        env = step_environment(env, cfg, RandomStream(0, "world", 0, t))
        assert np.all(np.abs(env.channels) <= 0.7)


@settings(max_examples=40, deadline=None)
@given(st.floats(0.01, 1.0), st.floats(-5, 5), st.floats(-5, 5))
def test_deterministic_reversion_is_monotone(kappa, mu, x0):
    cfg = WorldConfig(m_e=1, m_i=0, reversion_rate=kappa, long_run_means=mu)
    env = initial_environment(cfg, [x0])
    gap = abs(x0 - mu)
    for t in range(10):
        env = step_environment(env, cfg, RandomStream(0, "world", 0, t))
        new_gap = abs(env.relevant[0] - mu)
        assert new_gap <= gap + 1e-12
        gap = new_gap


def test_irrelevant_block_own_parameters():
    cfg = WorldConfig(m_e=2, m_i=2, diffusion=0.0, irrelevant=ChannelParams(diffusion=0.5))
    env = initial_environment(cfg)
    env = step_environment(env, cfg, RandomStream(0, "world", 0, 1))
    assert np.all(env.relevant == 0.0)
    assert np.all(env.irrelevant != 0.0)


def test_context_zero_noise():
    cfg = WorldConfig(m_e=2, m_i=1)
    env = initial_environment(cfg, [0.7, 0.1, -0.3])
    ctx = sample_context(env, cfg, RandomStream(0, "ctx"))
    assert np.array_equal(ctx.speaker_view, env.channels)
    assert np.array_equal(ctx.hearer_view, env.channels)
    assert ctx.speaker_view[cfg.hazard_index] == 0.7


def test_context_noise_monte_carlo():
    sc = 0.05
    cfg = WorldConfig(m_e=1, m_i=0, context_noise=sc)
    env = initial_environment(cfg, [0.2])
    rng = RandomStream(8, "ctx")
    d = np.array([np.subtract(*sample_context(env, cfg, rng).views[:, 0]) for _ in range(100_000)])
    assert abs(np.mean(d**2) / (2 * sc**2) - 1) < 0.02


def test_hazard_lead_delays_strike():
    cfg = WorldConfig(m_e=1, m_i=0, jump_prob=1.0, jump_range=1.0, hazard_lead=3)
    env = initial_environment(cfg)
    seen = []
    for t in range(1, 12):
        env = step_environment(env, cfg, RandomStream(0, "world", 0, t))
        seen.append(env.relevant[0])
        if t > 3:
            assert env.hazard == max(0.0, seen[t - 4])
        else:
            assert env.hazard == 0.0


def test_hazard_is_clipped_channel_value():
    cfg = WorldConfig(m_e=2, m_i=0, hazard_index=1)
    assert initial_environment(cfg, [0.0, -0.4]).hazard == 0.0
    assert initial_environment(cfg, [0.0, 0.4]).hazard == 0.4
