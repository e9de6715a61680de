"""Bit mapping, PSK signalling, RF-chain combining, and joint ML detection.

A transmitted block carries log2(L_s) scatterer-index bits plus log2(M)
symbol bits.  Two received-signal fidelities are exposed: the full physical
chain (antenna-domain noise, then combining through the per-scatterer beam
bank) and the idealized beamspace model that treats the beams as exactly
orthogonal.  Both feed the same detector, so the gap between them is
directly measurable.
"""

from dataclasses import dataclass

import numpy as np

from .channel import (
    ChannelRealization,
    complex_gaussian,
    composite_channel,
    is_power_of_two,
    optimize_ris_phases,
)


@dataclass(frozen=True, eq=False)
class Constellation:
    """Unit-average-energy symbol set with natural-binary point labels."""

    points: np.ndarray

    def __post_init__(self):
        points = np.asarray(self.points, dtype=complex)
        if points.ndim != 1 or not is_power_of_two(points.size) or points.size < 2:
            raise ValueError("constellation size must be a power of two >= 2")
        energy = float(np.mean(np.abs(points) ** 2))
        if abs(energy - 1.0) > 1e-12:
            raise ValueError(f"average symbol energy must be 1, got {energy}")
        if np.unique(np.round(points, 12)).size != points.size:
            raise ValueError("constellation points must be distinct")
        object.__setattr__(self, "points", points)

    @property
    def order(self) -> int:
        return self.points.size

    @property
    def bits_per_symbol(self) -> int:
        return int(np.log2(self.order))


def build_psk(order: int) -> Constellation:
    """M-PSK points exp(j*2*pi*m/M), m = 0..M-1."""
    if not is_power_of_two(order) or order < 2:
        raise ValueError(f"PSK order must be a power of two >= 2, got {order}")
    return Constellation(points=np.exp(2j * np.pi * np.arange(order) / order))


@dataclass(frozen=True)
class SsmSymbol:
    """A (scatterer rank, constellation index) pair."""

    scatterer_rank: int
    symbol_index: int


def _bit_widths(l_selected: int, mod_order: int) -> tuple:
    if not is_power_of_two(l_selected) or not is_power_of_two(mod_order):
        raise ValueError(
            f"l_selected and mod_order must be powers of two, got "
            f"{l_selected} and {mod_order}"
        )
    return int(np.log2(l_selected)), int(np.log2(mod_order))


def map_bits(bits, l_selected: int, mod_order: int) -> SsmSymbol:
    """Map a bit block to a symbol: spatial bits first, MSB first throughout."""
    b_l, b_m = _bit_widths(l_selected, mod_order)
    bits = np.asarray(bits, dtype=int)
    if bits.shape != (b_l + b_m,):
        raise ValueError(f"expected {b_l + b_m} bits, got shape {bits.shape}")
    if np.any((bits != 0) & (bits != 1)):
        raise ValueError("bits must be 0 or 1")
    rank = int(bits[:b_l] @ (1 << np.arange(b_l - 1, -1, -1))) if b_l else 0
    idx = int(bits[b_l:] @ (1 << np.arange(b_m - 1, -1, -1))) if b_m else 0
    return SsmSymbol(scatterer_rank=rank, symbol_index=idx)


def demap(sym: SsmSymbol, l_selected: int, mod_order: int) -> np.ndarray:
    """Exact inverse of :func:`map_bits`."""
    b_l, b_m = _bit_widths(l_selected, mod_order)
    if not 0 <= sym.scatterer_rank < l_selected:
        raise ValueError(f"scatterer_rank {sym.scatterer_rank} out of range")
    if not 0 <= sym.symbol_index < mod_order:
        raise ValueError(f"symbol_index {sym.symbol_index} out of range")
    rank_bits = [(sym.scatterer_rank >> k) & 1 for k in range(b_l - 1, -1, -1)]
    sym_bits = [(sym.symbol_index >> k) & 1 for k in range(b_m - 1, -1, -1)]
    return np.array(rank_bits + sym_bits, dtype=int)


def hamming_distance(a: SsmSymbol, b: SsmSymbol, l_selected: int, mod_order: int) -> int:
    """Number of differing bits between the binary expressions of two symbols."""
    return int(
        np.sum(demap(a, l_selected, mod_order) != demap(b, l_selected, mod_order))
    )


def hamming_table(l_selected: int, mod_order: int) -> np.ndarray:
    """Pairwise bit distances indexed by flat label rank*M + index.

    The flat label's binary expansion is exactly the concatenated bit block,
    so the distance is the popcount of the XOR.
    """
    _bit_widths(l_selected, mod_order)
    labels = np.arange(l_selected * mod_order, dtype=np.uint64)
    return np.bitwise_count(labels[:, None] ^ labels[None, :]).astype(int)


def transmit_physical(
    ch: ChannelRealization,
    sym: SsmSymbol,
    constellation: Constellation,
    snr_linear: float,
    rng: np.random.Generator,
    add_noise: bool = True,
) -> np.ndarray:
    """Antenna-domain received vector for one slot.

    The RIS is retargeted at the symbol's scatterer, then
    y = sqrt(rho) * H a_t * s + n with per-entry unit-variance complex noise
    (noise power normalized to one, so the transmit power equals rho).
    """
    profile = optimize_ris_phases(ch, sym.scatterer_rank)
    h = composite_channel(ch, profile)
    y = np.sqrt(snr_linear) * (h @ ch.tx_steering()) * constellation.points[
        sym.symbol_index
    ]
    if add_noise:
        y = y + complex_gaussian(rng, ch.rx_geom.n_elements)
    return y


def rx_combiner(ch: ChannelRealization, selected) -> np.ndarray:
    """Combining bank: row l is a_r^H for the l-th monitored scatterer."""
    return np.conj(np.stack([ch.rx_steering(i) for i in selected], axis=0))


def combine(y: np.ndarray, ch: ChannelRealization, selected) -> np.ndarray:
    """Project an antenna-domain vector onto the monitored receive beams."""
    y = np.asarray(y)
    if y.shape[0] != ch.rx_geom.n_elements:
        raise ValueError(f"expected length {ch.rx_geom.n_elements}, got {y.shape[0]}")
    return rx_combiner(ch, selected) @ y


def transmit_beamspace(
    ch: ChannelRealization,
    selected,
    sym: SsmSymbol,
    constellation: Constellation,
    snr_linear: float,
    rng: np.random.Generator,
    add_noise: bool = True,
) -> np.ndarray:
    """Idealized branch observation under exact beam orthogonality.

    Branch l is sqrt(rho)*h_l*s when l is the targeted scatterer and pure
    unit-variance complex noise otherwise.
    """
    branches = (
        complex_gaussian(rng, len(selected))
        if add_noise
        else np.zeros(len(selected), dtype=complex)
    )
    gain = ch.paths[selected[sym.scatterer_rank]].gain
    branches[sym.scatterer_rank] += (
        np.sqrt(snr_linear) * gain * constellation.points[sym.symbol_index]
    )
    return branches


def ml_detect_batch(
    obs: np.ndarray,
    gains: np.ndarray,
    constellation: Constellation,
    snr_linear: float,
) -> tuple:
    """Vectorized joint detection of S observations, shape (L_s, S).

    Returns (ranks, symbol indices) as int arrays of length S.  The metric
    for hypothesis (l, m) uses branch l only; ties resolve to the smallest
    (l, m) in lexicographic order.
    """
    obs = np.asarray(obs)
    gains = np.asarray(gains)
    ref = np.sqrt(snr_linear) * gains[:, None] * constellation.points[None, :]
    diff = obs[:, None, :] - ref[:, :, None]
    metric = diff.real**2 + diff.imag**2
    flat = metric.reshape(-1, obs.shape[1]).argmin(axis=0)
    return flat // constellation.order, flat % constellation.order


def ml_detect(
    obs: np.ndarray,
    gains: np.ndarray,
    constellation: Constellation,
    snr_linear: float,
) -> SsmSymbol:
    """Joint ML decision for one observation vector of length L_s."""
    obs = np.asarray(obs)
    if obs.shape != (len(gains),):
        raise ValueError(f"expected {len(gains)} branches, got shape {obs.shape}")
    ranks, idx = ml_detect_batch(obs[:, None], gains, constellation, snr_linear)
    return SsmSymbol(scatterer_rank=int(ranks[0]), symbol_index=int(idx[0]))
