"""Channel synthesis for the Tx -> RIS -> Rx cascade.

The front leg (Tx to RIS) is a rank-one LoS outer product; the back leg
(RIS to Rx) is a sparse multipath sum of per-scatterer outer products.
Tuning the RIS phases to one scatterer collapses the cascade so that the
effective end-to-end gain toward that scatterer is its path gain alone,
up to the residual non-orthogonality of the receive beams.
"""

from dataclasses import dataclass

import numpy as np

from .array_geometry import (
    UlaGeometry,
    UpaGeometry,
    ula_spatial_frequency,
    ula_steering,
    upa_steering,
    wrap_angle,
)


class SamplingError(RuntimeError):
    """Angle rejection sampling could not satisfy the separation constraint."""


def complex_gaussian(rng: np.random.Generator, size=None) -> np.ndarray:
    """Circularly symmetric complex Gaussian samples with unit variance."""
    return (rng.standard_normal(size) + 1j * rng.standard_normal(size)) / np.sqrt(2.0)


def is_power_of_two(n: int) -> bool:
    return n >= 1 and (n & (n - 1)) == 0


@dataclass(frozen=True)
class PathParams:
    """One scattered path of the RIS -> Rx leg."""

    gain: complex
    aod_elevation: float  # departure elevation at the RIS
    aod_azimuth: float  # departure azimuth at the RIS
    aoa_rx: float  # arrival angle at the Rx ULA

    def __post_init__(self):
        if not np.isfinite(self.gain):
            raise ValueError(f"path gain must be finite, got {self.gain!r}")
        object.__setattr__(self, "gain", complex(self.gain))
        object.__setattr__(self, "aod_elevation", wrap_angle(self.aod_elevation))
        object.__setattr__(self, "aod_azimuth", wrap_angle(self.aod_azimuth))
        object.__setattr__(self, "aoa_rx", wrap_angle(self.aoa_rx))


@dataclass(frozen=True)
class RisPhaseProfile:
    """Per-element RIS phase shifts; the reflection coefficients are exp(j*phases)."""

    phases: np.ndarray

    def __post_init__(self):
        phases = np.asarray(self.phases, dtype=float)
        if phases.ndim != 1:
            raise ValueError("phases must be a 1-D vector")
        object.__setattr__(self, "phases", phases)

    def reflection(self) -> np.ndarray:
        """Unit-magnitude diagonal entries of the reflection matrix."""
        return np.exp(1j * self.phases)


@dataclass(frozen=True)
class ChannelRealization:
    """One draw of the cascade: LoS angles plus the scattered paths, gain-sorted."""

    tx_aod: float
    ris_aoa_elevation: float
    ris_aoa_azimuth: float
    paths: tuple
    tx_geom: UlaGeometry
    rx_geom: UlaGeometry
    ris_geom: UpaGeometry

    def __post_init__(self):
        object.__setattr__(self, "tx_aod", wrap_angle(self.tx_aod))
        object.__setattr__(self, "ris_aoa_elevation", wrap_angle(self.ris_aoa_elevation))
        object.__setattr__(self, "ris_aoa_azimuth", wrap_angle(self.ris_aoa_azimuth))
        object.__setattr__(self, "paths", tuple(self.paths))
        if len(self.paths) < 1:
            raise ValueError("a realization needs at least one path")
        mags = [abs(p.gain) for p in self.paths]
        if any(mags[i] < mags[i + 1] for i in range(len(mags) - 1)):
            raise ValueError("paths must be sorted by |gain| descending")

    @property
    def n_paths(self) -> int:
        return len(self.paths)

    def gains(self) -> np.ndarray:
        """Path gains in descending-magnitude order."""
        return np.array([p.gain for p in self.paths])

    def tx_steering(self) -> np.ndarray:
        return ula_steering(self.tx_geom, self.tx_aod)

    def rx_steering(self, path_index: int) -> np.ndarray:
        return ula_steering(self.rx_geom, self.paths[path_index].aoa_rx)

    def ris_arrival_steering(self) -> np.ndarray:
        """UPA response of the LoS arrival from the Tx."""
        return upa_steering(self.ris_geom, self.ris_aoa_elevation, self.ris_aoa_azimuth)

    def ris_departure_steering(self, path_index: int) -> np.ndarray:
        """UPA response of the departure toward one scatterer."""
        p = self.paths[path_index]
        return upa_steering(self.ris_geom, p.aod_elevation, p.aod_azimuth)


def _circular_gap(a: float, b: float) -> float:
    # spatial frequencies live on a unit-period circle (Dirichlet kernel period)
    d = abs(a - b) % 1.0
    return min(d, 1.0 - d)


def sample_channel(
    l_total: int,
    tx_geom: UlaGeometry,
    rx_geom: UlaGeometry,
    ris_geom: UpaGeometry,
    min_angular_separation: float,
    rng: np.random.Generator,
    max_restarts: int = 200,
) -> ChannelRealization:
    """Draw one channel realization from a seeded stream.

    Path gains are i.i.d. CN(0, 1) (so |h|^2 is Exponential(1)) and every
    angle is uniform on [-pi, pi].  Rx arrival angles are accepted greedily
    from a block of uniform candidates until all pairwise spatial-frequency
    gaps (circular, period 1) are at least ``min_angular_separation``; the
    whole set restarts if a block is exhausted.  Paths are returned sorted
    by gain magnitude, descending.

    Raises
    ------
    SamplingError
        If the separation constraint is infeasible or the bounded restarts
        are exhausted.
    """
    if l_total < 1:
        raise ValueError(f"l_total must be >= 1, got {l_total}")
    if min_angular_separation < 0:
        raise ValueError("min_angular_separation must be >= 0")
    if l_total * min_angular_separation > 1.0:
        raise SamplingError(
            f"cannot place {l_total} spatial frequencies with pairwise gap "
            f">= {min_angular_separation} on the unit circle"
        )

    tx_aod = rng.uniform(-np.pi, np.pi)
    ris_el = rng.uniform(-np.pi, np.pi)
    ris_az = rng.uniform(-np.pi, np.pi)

    block = max(64, 16 * l_total)
    aoa_rx = None
    for _ in range(max_restarts):
        candidates = rng.uniform(-np.pi, np.pi, size=block)
        accepted: list[float] = []
        freqs: list[float] = []
        for theta in candidates:
            f = ula_spatial_frequency(rx_geom, theta)
            if all(_circular_gap(f, g) >= min_angular_separation for g in freqs):
                accepted.append(float(theta))
                freqs.append(f)
                if len(accepted) == l_total:
                    break
        if len(accepted) == l_total:
            aoa_rx = accepted
            break
    if aoa_rx is None:
        raise SamplingError(
            f"no admissible Rx angle set after {max_restarts} restarts "
            f"(l_total={l_total}, min_angular_separation={min_angular_separation})"
        )

    aod_el = rng.uniform(-np.pi, np.pi, size=l_total)
    aod_az = rng.uniform(-np.pi, np.pi, size=l_total)
    gains = complex_gaussian(rng, l_total)

    order = np.argsort(-np.abs(gains), kind="stable")
    paths = tuple(
        PathParams(
            gain=gains[i],
            aod_elevation=aod_el[i],
            aod_azimuth=aod_az[i],
            aoa_rx=aoa_rx[i],
        )
        for i in order
    )
    return ChannelRealization(
        tx_aod=tx_aod,
        ris_aoa_elevation=ris_el,
        ris_aoa_azimuth=ris_az,
        paths=paths,
        tx_geom=tx_geom,
        rx_geom=rx_geom,
        ris_geom=ris_geom,
    )


def select_scatterers(ch: ChannelRealization, l_selected: int) -> list:
    """Indices of the strongest ``l_selected`` paths (a power of two)."""
    if l_selected > ch.n_paths:
        raise ValueError(
            f"l_selected={l_selected} exceeds the {ch.n_paths} available paths"
        )
    if not is_power_of_two(l_selected):
        raise ValueError(
            f"l_selected must be a power of two for the bit mapping, got {l_selected}"
        )
    return list(range(l_selected))


def build_tx_ris_channel(ch: ChannelRealization) -> np.ndarray:
    """Rank-one LoS matrix B = a_ris(arrival) a_t^H, shape (N, N_t)."""
    return np.outer(ch.ris_arrival_steering(), np.conj(ch.tx_steering()))


def build_ris_rx_channel(ch: ChannelRealization) -> np.ndarray:
    """Multipath matrix F = sum_l h_l a_r(l) a_ris^H(l), shape (N_r, N)."""
    a_r = np.stack([ch.rx_steering(i) for i in range(ch.n_paths)], axis=1)
    a_d = np.stack([ch.ris_departure_steering(i) for i in range(ch.n_paths)], axis=1)
    return (a_r * ch.gains()[None, :]) @ np.conj(a_d.T)


def optimize_ris_phases(ch: ChannelRealization, target_path: int) -> RisPhaseProfile:
    """Phase profile aligning the cascade toward one scatterer.

    Element n gets the departure-steering phase of the target minus the
    arrival-steering phase, so the per-element cascade terms add coherently
    (sum of N unit phasors equals N exactly).
    """
    if not 0 <= target_path < ch.n_paths:
        raise IndexError(f"target_path {target_path} out of range [0, {ch.n_paths})")
    phases = np.angle(ch.ris_departure_steering(target_path)) - np.angle(
        ch.ris_arrival_steering()
    )
    return RisPhaseProfile(phases=phases)


def composite_channel(ch: ChannelRealization, profile: RisPhaseProfile) -> np.ndarray:
    """End-to-end matrix H = F diag(exp(j*psi)) B, shape (N_r, N_t)."""
    if profile.phases.shape[0] != ch.ris_geom.n_elements:
        raise ValueError(
            f"profile has {profile.phases.shape[0]} phases, RIS has "
            f"{ch.ris_geom.n_elements} elements"
        )
    f = build_ris_rx_channel(ch)
    b = build_tx_ris_channel(ch)
    return (f * profile.reflection()[None, :]) @ b


def effective_gain(
    ch: ChannelRealization, profile: RisPhaseProfile, probe_path: int
) -> complex:
    """Beam-domain scalar a_r^H(probe) H a_t for a given phase profile.

    When the profile targets the probe path this approaches the raw path
    gain as the arrays grow; other probes see only the misaligned residual.
    """
    if not 0 <= probe_path < ch.n_paths:
        raise IndexError(f"probe_path {probe_path} out of range [0, {ch.n_paths})")
    h = composite_channel(ch, profile)
    return complex(np.conj(ch.rx_steering(probe_path)) @ h @ ch.tx_steering())
