"""Geometry, path loss, Rician structure, and the cascaded channel."""

import numpy as np
import pytest

from risbeam import (GeometryError, SystemConfig, cascaded_channel,
                     cascaded_channel_separate, generate_channels,
                     make_link_geometry, seeded_rng, with_overrides)
from risbeam.channel import draw_user_positions
from risbeam.types import ChannelSet, DimensionMismatchError

from oracles import bruteforce_cascaded


class TestLinkGeometry:
    def test_reference_link_path_loss(self):
        # BS at (1,0,5), first surface at (0,0,2): d = sqrt(10), gamma = 2.2
        geom = make_link_geometry((1, 0, 5), (0, 0, 2), ref_path_loss=1e-3,
                                  exponent=2.2)
        assert geom.distance == pytest.approx(np.sqrt(10.0), rel=1e-15)
        assert geom.path_loss == pytest.approx(1e-3 * 10 ** (-1.1), rel=1e-12)

    def test_degenerate_geometry_rejected(self):
        with pytest.raises(GeometryError):
            make_link_geometry((1, 2, 3), (1, 2, 3), 1e-3, 2.2)

    def test_exponent_ordering_matches_scenario(self, paper_cfg):
        # short hops decay slower than every long hop
        exps = paper_cfg.ploss_exponents
        assert exps["t1"] == exps["r2"] == 2.2
        for link in ("t2", "r1", "s"):
            assert exps[link] == 3.6


class TestRicianStructure:
    def test_pure_scatter_covariance(self):
        cfg = SystemConfig(n_tx=8, n_rx_per_user=2, n_streams_per_user=1,
                           n_users=1, n_elements=16, rician_factor=0.0, user_radius=0.0)
        rng = seeded_rng(11)
        geom = make_link_geometry(cfg.bs_position, cfg.ris1_position,
                                  cfg.ref_path_loss, 2.2)
        beta = geom.path_loss
        samples = []
        pair_corr = []
        while len(samples) * 128 < 10_000:
            ch = generate_channels(cfg, rng)
            samples.append(np.abs(ch.t1) ** 2)
            pair_corr.append(ch.t1[:, :-1] * ch.t1[:, 1:].conj())
        mean_power = np.mean(np.concatenate([s.ravel() for s in samples]))
        cross = np.abs(np.mean(np.concatenate([c.ravel() for c in pair_corr])))
        assert mean_power == pytest.approx(beta, rel=0.05)
        assert cross <= 0.05 * beta

    def test_pure_los_rank_one(self):
        cfg = SystemConfig(rician_factor=1.0)
        ch = generate_channels(cfg, seeded_rng(5))
        for mat in (ch.t1, ch.t2, ch.s, ch.r1[0], ch.r2[1]):
            sv = np.linalg.svd(mat, compute_uv=False)
            assert sv[1] < 1e-10 * sv[0]

    def test_determinism(self, paper_cfg):
        a = generate_channels(paper_cfg, seeded_rng(3))
        b = generate_channels(paper_cfg, seeded_rng(3))
        assert np.array_equal(a.s, b.s)

    def test_user_positions_inside_disk(self, paper_cfg):
        rng = seeded_rng(9)
        pos = draw_user_positions(with_overrides(paper_cfg, user_radius=2.0), rng)
        center = np.asarray(paper_cfg.user_center)
        for p in pos:
            assert np.linalg.norm((p - center)[:2]) <= 2.0 + 1e-12
            assert p[2] == center[2]


class TestCascadedChannel:
    def test_zero_reduction(self, desk_cfg):
        ch = generate_channels(desk_cfg, seeded_rng(1))
        stripped = ChannelSet(t1=ch.t1, t2=np.zeros_like(ch.t2),
                              s=np.zeros_like(ch.s), r1=ch.r1, r2=ch.r2)
        theta = np.ones(desk_cfg.n_elements, dtype=complex)
        h = cascaded_channel(stripped, theta, 0)
        np.testing.assert_allclose(h, ch.r1[0] @ ch.t1, rtol=0, atol=1e-14)

    def test_bruteforce_path_sum(self):
        cfg = SystemConfig(n_tx=2, n_rx_per_user=2, n_streams_per_user=1,
                           n_users=2, n_elements=4)
        ch = generate_channels(cfg, seeded_rng(2))
        rng = seeded_rng(3)
        theta = np.exp(2j * np.pi * rng.random(4))
        for k in range(2):
            fast = cascaded_channel(ch, theta, k)
            slow = bruteforce_cascaded(ch, theta, k)
            np.testing.assert_allclose(fast, slow, rtol=1e-12, atol=1e-18)

    def test_scaling_homogeneity(self, desk_cfg):
        ch = generate_channels(desk_cfg, seeded_rng(4))
        rng = seeded_rng(5)
        theta = np.exp(2j * np.pi * rng.random(desk_cfg.n_elements))
        c = 2.0
        single = ChannelSet(t1=ch.t1, t2=ch.t2, s=np.zeros_like(ch.s),
                            r1=ch.r1, r2=ch.r2)
        double_only = ChannelSet(t1=ch.t1, t2=np.zeros_like(ch.t2), s=ch.s,
                                 r1=[np.zeros_like(r) for r in ch.r1], r2=ch.r2)
        np.testing.assert_allclose(cascaded_channel(single, c * theta, 0),
                                   c * cascaded_channel(single, theta, 0), rtol=1e-12)
        np.testing.assert_allclose(cascaded_channel(double_only, c * theta, 0),
                                   c ** 2 * cascaded_channel(double_only, theta, 0),
                                   rtol=1e-12)

    def test_linearity_in_each_factor(self, desk_cfg):
        ch = generate_channels(desk_cfg, seeded_rng(6))
        theta = np.exp(2j * np.pi * seeded_rng(7).random(desk_cfg.n_elements))
        scaled = ChannelSet(t1=3.0 * ch.t1, t2=ch.t2, s=ch.s, r1=ch.r1, r2=ch.r2)
        base = cascaded_channel(ch, theta, 0)
        stripped = ChannelSet(t1=np.zeros_like(ch.t1), t2=ch.t2,
                              s=np.zeros_like(ch.s), r1=ch.r1, r2=ch.r2)
        t2_only = cascaded_channel(stripped, theta, 0)
        np.testing.assert_allclose(cascaded_channel(scaled, theta, 0),
                                   3.0 * base - 2.0 * t2_only, rtol=1e-10)

    def test_dimension_mismatch(self, desk_cfg):
        ch = generate_channels(desk_cfg, seeded_rng(8))
        with pytest.raises(DimensionMismatchError):
            cascaded_channel(ch, np.ones(desk_cfg.n_elements + 1, dtype=complex), 0)
        with pytest.raises(DimensionMismatchError):
            cascaded_channel(ch, np.ones(desk_cfg.n_elements, dtype=complex), 5)

    def test_separate_patterns_match_common_when_equal(self, desk_cfg):
        ch = generate_channels(desk_cfg, seeded_rng(9))
        theta = np.exp(2j * np.pi * seeded_rng(10).random(desk_cfg.n_elements))
        for k in range(desk_cfg.n_users):
            np.testing.assert_allclose(
                cascaded_channel_separate(ch, theta, theta, k),
                cascaded_channel(ch, theta, k), rtol=1e-14)
