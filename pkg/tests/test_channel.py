"""Channel sampling, matrix builders, and the phase-aligned cascade collapse."""

import numpy as np
import pytest

from ris_ssm.array_geometry import UlaGeometry, UpaGeometry, ula_spatial_frequency
from ris_ssm.channel import (
    ChannelRealization,
    PathParams,
    RisPhaseProfile,
    SamplingError,
    build_ris_rx_channel,
    build_tx_ris_channel,
    composite_channel,
    effective_gain,
    optimize_ris_phases,
    sample_channel,
    select_scatterers,
)

TX = UlaGeometry(32)
RX = UlaGeometry(32)
RIS = UpaGeometry(8, 8)


def draw(l_total=6, min_sep=0.05, seed=0, tx=TX, rx=RX, ris=RIS):
    rng = np.random.default_rng(seed)
    return sample_channel(l_total, tx, rx, ris, min_sep, rng)


def realization_from_gains(gains, seed=0):
    """Hand-built realization with prescribed gains (pre-sorted descending)."""
    rng = np.random.default_rng(seed)
    paths = tuple(
        PathParams(
            gain=g,
            aod_elevation=rng.uniform(-np.pi, np.pi),
            aod_azimuth=rng.uniform(-np.pi, np.pi),
            aoa_rx=rng.uniform(-np.pi, np.pi),
        )
        for g in gains
    )
    return ChannelRealization(
        tx_aod=0.3,
        ris_aoa_elevation=0.2,
        ris_aoa_azimuth=-0.4,
        paths=paths,
        tx_geom=TX,
        rx_geom=RX,
        ris_geom=RIS,
    )


class TestRealizationInvariants:
    def test_rejects_unsorted_paths(self):
        with pytest.raises(ValueError):
            realization_from_gains([0.2, 0.9])

    def test_rejects_empty_paths(self):
        with pytest.raises(ValueError):
            realization_from_gains([])

    def test_angles_are_wrapped(self):
        p = PathParams(gain=1.0, aod_elevation=5.0, aod_azimuth=-7.0, aoa_rx=9.5)
        for angle in (p.aod_elevation, p.aod_azimuth, p.aoa_rx):
            assert -np.pi <= angle <= np.pi

    def test_rejects_nonfinite_gain(self):
        with pytest.raises(ValueError):
            PathParams(gain=np.nan, aod_elevation=0, aod_azimuth=0, aoa_rx=0)


class TestSampling:
    def test_single_path_trivially_sorted(self):
        ch = draw(l_total=1)
        assert ch.n_paths == 1

    def test_fixed_seed_reproduces(self):
        a = draw(l_total=6, seed=33)
        b = draw(l_total=6, seed=33)
        assert a == b

    def test_distinct_seeds_differ(self):
        assert draw(seed=1) != draw(seed=2)

    def test_gain_second_moment(self):
        """Law of large numbers: mean |h|^2 of CN(0,1) gains is 1."""
        rng = np.random.default_rng(100)
        total = 0.0
        n_draws = 100_000
        for _ in range(n_draws):
            ch = sample_channel(1, TX, RX, RIS, 0.0, rng)
            total += abs(ch.paths[0].gain) ** 2
        assert total / n_draws == pytest.approx(1.0, abs=0.01)

    def test_sorting_invariant_property(self):
        rng = np.random.default_rng(4)
        for _ in range(10_000):
            ch = sample_channel(5, TX, RX, RIS, 0.0, rng)
            mags = [abs(p.gain) for p in ch.paths]
            assert all(mags[i] >= mags[i + 1] for i in range(len(mags) - 1))

    def test_rx_separation_respected(self):
        sep = 0.08
        for seed in range(200):
            ch = draw(l_total=6, min_sep=sep, seed=seed)
            freqs = [
                ula_spatial_frequency(RX, p.aoa_rx) for p in ch.paths
            ]
            for i in range(len(freqs)):
                for j in range(i + 1, len(freqs)):
                    gap = abs(freqs[i] - freqs[j]) % 1.0
                    assert min(gap, 1.0 - gap) >= sep

    def test_angles_in_range(self):
        ch = draw(l_total=4, seed=8)
        angles = [ch.tx_aod, ch.ris_aoa_elevation, ch.ris_aoa_azimuth]
        for p in ch.paths:
            angles += [p.aod_elevation, p.aod_azimuth, p.aoa_rx]
        assert all(-np.pi <= a <= np.pi for a in angles)

    def test_infeasible_separation_raises(self):
        with pytest.raises(SamplingError):
            draw(l_total=12, min_sep=0.2)

    def test_exhausted_restarts_raise(self):
        # feasible on paper but hopeless for the bounded search
        rng = np.random.default_rng(0)
        with pytest.raises(SamplingError):
            sample_channel(11, TX, RX, RIS, 0.0905, rng, max_restarts=5)


class TestSelectScatterers:
    def test_strongest_two_of_three(self):
        ch = realization_from_gains([0.9, 0.5, 0.2])
        idx = select_scatterers(ch, 2)
        assert [abs(ch.paths[i].gain) for i in idx] == [0.9, 0.5]

    def test_all_paths(self):
        ch = realization_from_gains([0.9, 0.5])
        assert select_scatterers(ch, 2) == [0, 1]

    def test_against_full_sort_oracle(self):
        ch = draw(l_total=12, seed=21, min_sep=0.0)
        idx = select_scatterers(ch, 4)
        selected = sorted(abs(ch.paths[i].gain) for i in idx)
        oracle = sorted(abs(p.gain) for p in ch.paths)[-4:]
        assert np.allclose(selected, oracle)

    def test_too_many_requested(self):
        with pytest.raises(ValueError):
            select_scatterers(realization_from_gains([1.0]), 2)

    def test_non_power_of_two(self):
        ch = realization_from_gains([0.9, 0.5, 0.4, 0.2, 0.1, 0.05])
        with pytest.raises(ValueError):
            select_scatterers(ch, 3)


class TestTxRisChannel:
    def test_rank_one(self):
        b = build_tx_ris_channel(draw(seed=2))
        s = np.linalg.svd(b, compute_uv=False)
        assert s[1] < 1e-10

    def test_unit_frobenius_norm(self):
        b = build_tx_ris_channel(draw(seed=3))
        assert np.linalg.norm(b) == pytest.approx(1.0, abs=1e-12)

    def test_leading_entry(self):
        ch = draw(seed=4)
        b = build_tx_ris_channel(ch)
        n = RIS.n_elements * TX.n_elements
        assert b[0, 0] == pytest.approx(1 / np.sqrt(n), abs=1e-12)


class TestRisRxChannel:
    def test_zero_gain_gives_zero_matrix(self):
        ch = realization_from_gains([0.0])
        assert np.allclose(build_ris_rx_channel(ch), 0.0)

    def test_single_path_rank_one(self):
        ch = realization_from_gains([1.3 - 0.2j])
        s = np.linalg.svd(build_ris_rx_channel(ch), compute_uv=False)
        assert s[1] < 1e-10

    def test_term_by_term_oracle(self):
        ch = draw(l_total=3, seed=5)
        total = np.zeros((RX.n_elements, RIS.n_elements), dtype=complex)
        for i in range(3):
            total += ch.paths[i].gain * np.outer(
                ch.rx_steering(i), np.conj(ch.ris_departure_steering(i))
            )
        assert np.allclose(build_ris_rx_channel(ch), total, atol=1e-12)


class TestPhaseAlignment:
    def test_broadside_angles_give_zero_phases(self):
        # elevation = azimuth = pi/2 zeroes every UPA exponent
        paths = (PathParams(1.0, np.pi / 2, np.pi / 2, 0.3),)
        ch = ChannelRealization(0.1, np.pi / 2, np.pi / 2, paths, TX, RX, RIS)
        assert np.allclose(optimize_ris_phases(ch, 0).phases, 0.0, atol=1e-12)

    def test_cascade_sum_equals_element_count(self):
        ch = draw(seed=6)
        profile = optimize_ris_phases(ch, 2)
        zeta_t = np.angle(ch.ris_departure_steering(2))
        zeta_r = -np.angle(ch.ris_arrival_steering())
        total = np.sum(np.exp(1j * (profile.phases - zeta_t - zeta_r)))
        assert abs(total - RIS.n_elements) < 1e-9

    def test_cascade_scalar_exactly_one(self):
        """Targeted-path RIS cascade equals 1 to machine precision."""
        for seed in range(20):
            ch = draw(seed=seed)
            target = seed % ch.n_paths
            profile = optimize_ris_phases(ch, target)
            scalar = np.conj(ch.ris_departure_steering(target)) @ (
                profile.reflection() * ch.ris_arrival_steering()
            )
            assert abs(scalar - 1.0) < 1e-12

    def test_index_out_of_range(self):
        with pytest.raises(IndexError):
            optimize_ris_phases(draw(seed=7), 99)


class TestCompositeChannel:
    def test_zero_gains_give_zero(self):
        ch = realization_from_gains([0.0, 0.0])
        profile = optimize_ris_phases(ch, 0)
        assert np.allclose(composite_channel(ch, profile), 0.0)

    def test_single_aligned_path_collapses(self):
        """With one path the cascade is exact: H = h1 a_r a_t^H."""
        ch = draw(l_total=1, seed=9)
        profile = optimize_ris_phases(ch, 0)
        h = composite_channel(ch, profile)
        oracle = ch.paths[0].gain * np.outer(
            ch.rx_steering(0), np.conj(ch.tx_steering())
        )
        assert np.allclose(h, oracle, atol=1e-9)

    def test_brute_force_triple_product(self):
        tx, rx, ris = UlaGeometry(4), UlaGeometry(4), UpaGeometry(2, 4)
        rng = np.random.default_rng(10)
        ch = sample_channel(6, tx, rx, ris, 0.0, rng)
        profile = optimize_ris_phases(ch, 1)
        h = composite_channel(ch, profile)
        f = build_ris_rx_channel(ch)
        b = build_tx_ris_channel(ch)
        r = np.exp(1j * profile.phases)
        oracle = np.zeros((4, 4), dtype=complex)
        for i in range(4):
            for j in range(4):
                oracle[i, j] = sum(f[i, n] * r[n] * b[n, j] for n in range(8))
        assert np.allclose(h, oracle, atol=1e-10)

    def test_dimension_mismatch(self):
        ch = draw(seed=11)
        with pytest.raises(ValueError):
            composite_channel(ch, RisPhaseProfile(np.zeros(3)))


class TestEffectiveGain:
    def test_single_path_exact(self):
        ch = draw(l_total=1, seed=12)
        profile = optimize_ris_phases(ch, 0)
        assert effective_gain(ch, profile, 0) == pytest.approx(
            ch.paths[0].gain, abs=1e-12
        )

    def test_dirichlet_grid_kills_interference(self):
        """Paths on exact kernel nulls contribute nothing to the probe."""
        rng = np.random.default_rng(14)
        freqs = np.array([0.0, 4 / 32, -8 / 32])
        paths = [
            PathParams(
                gain=g,
                aod_elevation=rng.uniform(-np.pi, np.pi),
                aod_azimuth=rng.uniform(-np.pi, np.pi),
                aoa_rx=float(np.arcsin(f / 0.5)),
            )
            for g, f in zip([1.5, 1.0, 0.5], freqs)
        ]
        ch = ChannelRealization(0.2, 0.5, -0.8, tuple(paths), TX, RX, RIS)
        profile = optimize_ris_phases(ch, 1)
        assert effective_gain(ch, profile, 1) == pytest.approx(
            ch.paths[1].gain, abs=1e-12
        )

    def test_empirical_deviation_at_desk_scale(self):
        """Aligned-path gain error stays within 5% of |h| for separated beams."""
        ris = UpaGeometry(16, 16)
        rel = []
        for seed in range(200):
            rng = np.random.default_rng(1000 + seed)
            ch = sample_channel(6, TX, RX, ris, 0.125, rng)
            profile = optimize_ris_phases(ch, 0)
            dev = abs(effective_gain(ch, profile, 0) - ch.paths[0].gain)
            rel.append(dev / abs(ch.paths[0].gain))
        observed = float(np.median(rel))
        print(f"observed median relative deviation: {observed:.4f}")
        assert observed <= 0.05

    def test_deviation_shrinks_as_arrays_grow(self):
        """Median aligned-gain error is non-increasing as N_t = N_r doubles."""
        medians = []
        for n in (8, 16, 32, 64):
            tx, rx = UlaGeometry(n), UlaGeometry(n)
            devs = []
            for seed in range(500):
                rng = np.random.default_rng(seed)
                ch = sample_channel(6, tx, rx, RIS, 0.05, rng)
                profile = optimize_ris_phases(ch, 0)
                devs.append(abs(effective_gain(ch, profile, 0) - ch.paths[0].gain))
            medians.append(np.median(devs))
        assert all(medians[i + 1] <= medians[i] for i in range(len(medians) - 1))

    def test_probe_out_of_range(self):
        ch = draw(seed=15)
        with pytest.raises(IndexError):
            effective_gain(ch, optimize_ris_phases(ch, 0), 99)
