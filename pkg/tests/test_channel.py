"""Link-level channel model tests.

Oracles: the path-loss law checked as a Monte-Carlo ratio of mean squared
entries, Rician moments checked against the closed-form mean/variance
split, and the cascade matrix checked against an independent evaluation
order (explicit diag(theta) product).
"""

import numpy as np
import pytest

from manifold_ris.channel import (
    ChannelSet,
    FadingConfig,
    PathlossExponents,
    SystemGeometry,
    assemble_channels,
    cascade_matrix,
    cascade_tensor,
    composite_channel,
    composite_channels,
    dbm_to_mw,
    draw_los_angles,
    channel_means,
    mw_to_dbm,
    place_users_semicircle,
    sample_channels,
    ula_steering,
)
from manifold_ris.manifolds import ComplexCircle, random_point


def _geom(ue_positions, ris_positions=((700.0, 0.0),), gain_db=-30.0):
    return SystemGeometry(bs_position=(0.0, 0.0),
                          ris_positions=ris_positions,
                          ue_positions=tuple(ue_positions),
                          reference_gain_db=gain_db)


# ---------------------------------------------------------------------------
# units and geometry

def test_dbm_roundtrip():
    assert dbm_to_mw(30.0) == pytest.approx(1000.0)
    assert dbm_to_mw(-104.0) == pytest.approx(10.0 ** -10.4)
    assert mw_to_dbm(dbm_to_mw(-3.7)) == pytest.approx(-3.7)
    with pytest.raises(ValueError):
        mw_to_dbm(0.0)


def test_geometry_rejects_coincident_nodes():
    with pytest.raises(ValueError):
        _geom([(0.0, 0.0)])
    with pytest.raises(ValueError):
        _geom([(700.0, 0.0)])
    with pytest.raises(ValueError):
        PathlossExponents(bs_ue=0.0)


def test_place_single_user_at_midpoint():
    (p,) = place_users_semicircle(1, 20.0, (3.0, 4.0))
    assert p[0] == pytest.approx(3.0)
    assert p[1] == pytest.approx(24.0)


def test_place_two_users_at_semicircle_ends():
    a, b = place_users_semicircle(2, 20.0, (0.0, 0.0))
    np.testing.assert_allclose(a, (20.0, 0.0), atol=1e-12)
    np.testing.assert_allclose(b, (-20.0, 0.0), atol=1e-12)


def test_place_eight_users_equal_radius():
    pts = place_users_semicircle(8, 20.0, (5.0, -2.0))
    assert len(pts) == 8
    for p in pts:
        d = np.hypot(p[0] - 5.0, p[1] + 2.0)
        assert abs(d - 20.0) <= 1e-9


# ---------------------------------------------------------------------------
# sampling

def test_zero_reference_gain_gives_zero_channels():
    geom = _geom([(10.0, 10.0)], gain_db=-np.inf)
    ch = sample_channels(geom, FadingConfig("rician", 5.0), 4, 8, seed=0)
    assert np.all(ch.G == 0) and np.all(ch.h_r == 0) and np.all(ch.h_d == 0)


def test_direct_link_pathloss_ratio_sixteen():
    # users at d and 2d from the BS; exponent 4 makes the mean squared
    # entry ratio 2**4 = 16
    d = 50.0
    geom = _geom([(d, 0.0), (2.0 * d, 0.0)])
    fading = FadingConfig("rician", 1.0)
    acc = np.zeros(2)
    for seed in range(200):
        ch = sample_channels(geom, fading, 8, 4, seed=seed)
        acc += np.mean(np.abs(ch.h_d) ** 2, axis=1)
    # 200 draws x 8 antennas = 1600 samples per user
    assert acc[0] / acc[1] == pytest.approx(16.0, rel=0.05)


def test_pure_los_steering_entries_unit_modulus():
    # unit link distances and 0 dB reference gain leave the raw steering
    # response (the UE sits 1 m from the RIS)
    geom = SystemGeometry(bs_position=(0.0, 0.0),
                          ris_positions=((1.0, 0.0),),
                          ue_positions=((1.0, 1.0),),
                          reference_gain_db=0.0)
    ch = sample_channels(geom, FadingConfig("pure_los"), 4, 6, seed=3)
    np.testing.assert_allclose(np.abs(ch.G[0]), 1.0, atol=1e-12)
    np.testing.assert_allclose(np.abs(ch.h_r[0, 0]), 1.0, atol=1e-12)


def test_steering_vector_structure():
    a = ula_steering(8, 0.7)
    np.testing.assert_allclose(np.abs(a), 1.0, atol=1e-14)
    # constant phase increment pi*cos(angle) between adjacent elements
    incr = np.angle(a[1:] * a[:-1].conj())
    np.testing.assert_allclose(incr, np.pi * np.cos(0.7), atol=1e-12)


def test_rician_moments_match_closed_form():
    # mean is the kappa-weighted LoS response, scatter variance 1/(1+kappa)
    kappa = 10.0
    geom = SystemGeometry(bs_position=(0.0, 0.0),
                          ris_positions=((1.0, 0.0),),
                          ue_positions=((1.0, 1.0),),
                          reference_gain_db=0.0)
    fading = FadingConfig("rician", kappa)
    rng = np.random.default_rng(9)
    angles = draw_los_angles(1, 1, rng)
    draws = np.stack([
        assemble_channels(geom, fading, angles, 2, 4,
                          np.random.default_rng(1000 + t)).h_r[0, 0]
        for t in range(20_000)])
    expected_mean = np.sqrt(kappa / (kappa + 1.0)) * \
        ula_steering(4, angles.ris_ue[0, 0])
    np.testing.assert_allclose(draws.mean(axis=0), expected_mean, atol=0.02)
    var = np.mean(np.abs(draws - expected_mean) ** 2)
    assert var == pytest.approx(1.0 / (kappa + 1.0), rel=0.05)


def test_channel_means_match_monte_carlo():
    geom = _geom([(690.0, 15.0), (705.0, -8.0)])
    fading = FadingConfig("rician", 4.0)
    rng = np.random.default_rng(21)
    angles = draw_los_angles(1, 2, rng)
    G_mean, h_r_mean, h_d_mean = channel_means(geom, fading, angles, 3, 5)
    acc = np.zeros((2, 3), dtype=np.complex128)
    for t in range(20_000):
        acc += assemble_channels(geom, fading, angles, 3, 5,
                                 np.random.default_rng(t)).h_d
    scale = np.abs(h_d_mean).max()
    np.testing.assert_allclose(acc / 20_000, h_d_mean, atol=0.03 * scale)
    # pure LoS means are the full steering response
    G_mean_los, _, _ = channel_means(geom, FadingConfig("pure_los"),
                                     angles, 3, 5)
    amp = geom.link_amplitude(geom.distance_bs_ris(0), geom.exponents.bs_ris)
    np.testing.assert_allclose(np.abs(G_mean_los[0]), amp, atol=1e-12)


def test_sampling_deterministic_per_seed():
    geom = _geom([(10.0, 5.0), (20.0, 1.0)])
    fading = FadingConfig("rician", 3.0)
    a = sample_channels(geom, fading, 4, 8, seed=7, noise_power_mw=0.5)
    b = sample_channels(geom, fading, 4, 8, seed=7, noise_power_mw=0.5)
    c = sample_channels(geom, fading, 4, 8, seed=8)
    assert np.array_equal(a.G, b.G)
    assert np.array_equal(a.h_r, b.h_r)
    assert np.array_equal(a.h_d, b.h_d)
    assert a.noise_power_mw == 0.5
    assert not np.array_equal(a.G, c.G)


def test_channel_set_shape_validation():
    ok = dict(G=np.zeros((1, 4, 8)), h_r=np.zeros((1, 2, 8)),
              h_d=np.zeros((2, 4)))
    ChannelSet(**ok)
    with pytest.raises(ValueError):
        ChannelSet(G=np.zeros((1, 4, 8)), h_r=np.zeros((1, 2, 7)),
                   h_d=np.zeros((2, 4)))
    with pytest.raises(ValueError):
        ChannelSet(G=np.full((1, 4, 8), np.nan), h_r=np.zeros((1, 2, 8)),
                   h_d=np.zeros((2, 4)))


# ---------------------------------------------------------------------------
# composite channel and cascades

def test_composite_scalar_cascade_no_direct():
    ch = ChannelSet(G=np.array([[[2.0 + 1.0j]]]),
                    h_r=np.array([[[0.5 - 0.5j]]]),
                    h_d=np.zeros((1, 1)))
    h = composite_channel(ch, np.array([1.0 + 0.0j]), 0)
    np.testing.assert_allclose(h, [(2.0 + 1.0j) * (0.5 - 0.5j)], atol=1e-15)


def test_composite_reduces_to_direct_when_ris_disconnected():
    rng = np.random.default_rng(2)
    h_d = rng.standard_normal((3, 4)) + 1j * rng.standard_normal((3, 4))
    ch = ChannelSet(G=np.zeros((1, 4, 8)),
                    h_r=rng.standard_normal((1, 3, 8)) + 0j,
                    h_d=h_d)
    m = ComplexCircle(8)
    for seed in range(5):
        theta = random_point(m, seed)
        for k in range(3):
            np.testing.assert_allclose(composite_channel(ch, theta, k),
                                       h_d[k], atol=1e-15)


def test_cascade_matrix_matches_diag_product():
    # independent evaluation orders: A_k theta vs G diag(theta) h_r
    rng = np.random.default_rng(5)
    geom = _geom([(695.0, 3.0)])
    ch = sample_channels(geom, FadingConfig("rician", 2.0), 4, 8, seed=11)
    a = cascade_matrix(ch, 0)
    m = ComplexCircle(8)
    for seed in range(100):
        theta = random_point(m, seed).ambient
        direct = ch.G[0] @ np.diag(theta) @ ch.h_r[0, 0]
        np.testing.assert_allclose(a @ theta, direct, atol=1e-12)
        np.testing.assert_allclose(composite_channel(ch, theta, 0),
                                   ch.h_d[0] + direct, atol=1e-12)


def test_cascade_matrix_multi_ris_stacking():
    geom = _geom([(30.0, 4.0)], ris_positions=((50.0, 0.0), (0.0, 60.0)))
    ch = sample_channels(geom, FadingConfig("rician", 2.0), 4, 6, seed=13)
    theta = random_point(ComplexCircle(12), 1).ambient
    expected = ch.h_d[0]
    for r in range(2):
        expected = expected + ch.G[r] @ np.diag(theta[6 * r:6 * r + 6]) \
            @ ch.h_r[r, 0]
    np.testing.assert_allclose(composite_channel(ch, theta, 0), expected,
                               atol=1e-12)


def test_composite_channels_matrix_agrees_with_per_user():
    geom = _geom([(700.0, 10.0), (680.0, -5.0), (710.0, 0.0)])
    ch = sample_channels(geom, FadingConfig("rician", 5.0), 6, 8, seed=17)
    theta = random_point(ComplexCircle(8), 3)
    H = composite_channels(ch, theta)
    H_pre = composite_channels(ch, theta, cascades=cascade_tensor(ch))
    assert H.shape == (6, 3)
    np.testing.assert_array_equal(H, H_pre)
    for k in range(3):
        np.testing.assert_allclose(H[:, k], composite_channel(ch, theta, k),
                                   atol=1e-14)


def test_theta_size_mismatch_raises():
    geom = _geom([(10.0, 10.0)])
    ch = sample_channels(geom, FadingConfig("rician", 1.0), 4, 8, seed=1)
    with pytest.raises(ValueError):
        composite_channel(ch, np.ones(7, dtype=complex), 0)


# ---------------------------------------------------------------------------
# invariants

def test_reference_gain_scaling_per_path():
    """Doubling the linear reference gain doubles each stored link's power.

    The direct term of ||h_k(theta)||^2 therefore scales by 2 and the
    cascaded term by 4 (it traverses two links).
    """
    ue = [(695.0, 12.0)]
    g1 = _geom(ue, gain_db=-30.0)
    g2 = _geom(ue, gain_db=-30.0 + 10.0 * np.log10(2.0))
    f = FadingConfig("rician", 4.0)
    a = sample_channels(g1, f, 4, 8, seed=23)
    b = sample_channels(g2, f, 4, 8, seed=23)
    for x, y in ((a.G, b.G), (a.h_r, b.h_r), (a.h_d, b.h_d)):
        assert np.linalg.norm(y) ** 2 == pytest.approx(
            2.0 * np.linalg.norm(x) ** 2, rel=1e-12)
    theta = random_point(ComplexCircle(8), 1)
    casc_a = cascade_matrix(a, 0) @ theta.ambient
    casc_b = cascade_matrix(b, 0) @ theta.ambient
    assert np.linalg.norm(casc_b) ** 2 == pytest.approx(
        4.0 * np.linalg.norm(casc_a) ** 2, rel=1e-12)
    assert np.linalg.norm(b.h_d[0]) ** 2 == pytest.approx(
        2.0 * np.linalg.norm(a.h_d[0]) ** 2, rel=1e-12)


def test_global_phase_rotation_leaves_cascade_norm():
    geom = _geom([(700.0, 10.0)])
    ch = sample_channels(geom, FadingConfig("rician", 5.0), 4, 8, seed=29)
    theta = random_point(ComplexCircle(8), 4).ambient
    base = np.linalg.norm(cascade_matrix(ch, 0) @ theta)
    for phi in (0.3, 1.7, -2.2):
        rotated = np.linalg.norm(cascade_matrix(ch, 0) @ (np.exp(1j * phi)
                                                          * theta))
        assert rotated == pytest.approx(base, rel=1e-12)
