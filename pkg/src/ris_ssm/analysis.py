"""Pairwise error probabilities and the ABEP union bound.

Two conditional error branches exist: a correct-beam branch (the detector
picked the right scatterer but the wrong symbol), which is a Gaussian tail,
and a wrong-beam branch (wrong scatterer), which reduces to comparing a
central against a noncentral chi-square variate.  The wrong-beam branch is
implemented three independent ways -- closed form, truncated exponential
series, and adaptive quadrature over the noncentral density -- so the whole
derivation chain is numerically cross-checkable.

Channel averaging uses ordered gains: the strongest L_s of L unit-mean
exponential powers, matching the CN(0,1) path gains of the channel module.
"""

from dataclasses import dataclass

import numpy as np
from scipy.integrate import quad
from scipy.special import erfc

from .transceiver import Constellation, hamming_table

#: truncation depth at which the wrong-beam series has converged to double
#: precision for noncentralities up to ~40
SERIES_TERMS = 50


def q_function(x):
    """Gaussian tail probability Q(x) = erfc(x / sqrt(2)) / 2."""
    return 0.5 * erfc(np.asarray(x, dtype=float) / np.sqrt(2.0))


def _check_inputs(snr_linear, gain_sq, symbol_term):
    vals = np.asarray([snr_linear, gain_sq, symbol_term], dtype=float)
    if np.any(~np.isfinite(vals)) or np.any(vals < 0):
        raise ValueError(
            f"CPEP inputs must be finite and non-negative, got "
            f"snr={snr_linear}, gain_sq={gain_sq}, symbol_term={symbol_term}"
        )


def cpep_correct_beam(snr_linear, gain_sq, symbol_dist_sq) -> float:
    """Pairwise error probability when the scatterer was detected correctly.

    ``symbol_dist_sq`` is |s_m - s_mhat|^2; the result is
    Q(sqrt(rho * |h|^2 * |s_m - s_mhat|^2 / 2)).
    """
    _check_inputs(snr_linear, gain_sq, symbol_dist_sq)
    return float(q_function(np.sqrt(snr_linear * gain_sq * symbol_dist_sq / 2.0)))


def cpep_wrong_beam(snr_linear, gain_sq, symbol_energy) -> float:
    """Pairwise error probability when the wrong scatterer was detected.

    ``symbol_energy`` is |s_mhat|^2; the result is
    exp(-rho * |h|^2 * |s_mhat|^2 / 2) / 2.
    """
    _check_inputs(snr_linear, gain_sq, symbol_energy)
    return float(0.5 * np.exp(-snr_linear * gain_sq * symbol_energy / 2.0))


def wrong_beam_noncentrality(snr_linear, gain_sq, symbol_energy) -> float:
    """Noncentrality tau = 2 * rho * |h|^2 * |s_mhat|^2 of the wrong-beam branch."""
    _check_inputs(snr_linear, gain_sq, symbol_energy)
    return float(2.0 * snr_linear * gain_sq * symbol_energy)


def cpep_wrong_beam_series(tau: float, terms: int = SERIES_TERMS) -> float:
    """Truncated series form exp(-tau/2)/2 * sum_k (tau/4)^k / k!.

    Terms are built by the ratio recurrence term_{k+1} = term_k*(tau/4)/(k+1),
    so no factorial is ever materialized.
    """
    if tau < 0 or not np.isfinite(tau):
        raise ValueError(f"tau must be finite and >= 0, got {tau}")
    if terms < 1:
        raise ValueError(f"terms must be >= 1, got {terms}")
    term = 1.0
    total = 1.0
    for k in range(1, terms):
        term *= (tau / 4.0) / k
        total += term
    return float(0.5 * np.exp(-tau / 2.0) * total)


def bessel_i0(z: float) -> float:
    """Modified Bessel function I_0 by its power series, truncated at 1e-14 relative."""
    if z < 0:
        raise ValueError(f"z must be >= 0, got {z}")
    q = z * z / 4.0
    term = 1.0
    total = 1.0
    for k in range(1, 10_000):
        term *= q / (k * k)
        total += term
        if term <= 1e-14 * total:
            return total
    raise ArithmeticError(f"I0 series did not converge for z={z}")


def cpep_wrong_beam_quadrature(tau: float) -> float:
    """Wrong-beam probability by integrating the noncentral chi-square density.

    Evaluates the exceedance integral of a central chi-square over a
    noncentral one (2 DoF, noncentrality tau):
    integral of exp(-x/2)/2 * exp(-(x+tau)/2) * I0(sqrt(tau*x)) dx.
    The upper limit is cut where the integrand is provably below 1e-30 of
    the result scale; adaptive quadrature runs at 1e-10 absolute tolerance.
    """
    if tau < 0 or not np.isfinite(tau):
        raise ValueError(f"tau must be finite and >= 0, got {tau}")

    def integrand(x):
        return 0.5 * np.exp(-x - tau / 2.0) * bessel_i0(np.sqrt(tau * x))

    # exponent of the integrand is -(sqrt(x) - sqrt(tau)/2)^2 - tau/4 at worst
    x_max = (np.sqrt(tau) / 2.0 + 9.0) ** 2 + 1.0
    value, abserr = quad(integrand, 0.0, x_max, epsabs=1e-10, epsrel=1e-11, limit=300)
    if abserr > 1e-8:
        raise ArithmeticError(
            f"quadrature failed to converge for tau={tau} (abserr={abserr})"
        )
    return float(value)


def ordered_gain_ensemble(
    l_total: int, l_selected: int, n_draws: int, rng: np.random.Generator
) -> np.ndarray:
    """Squared gains of the strongest l_selected out of l_total Exp(1) powers.

    Returns shape (n_draws, l_selected) sorted descending within each row.
    """
    if not 1 <= l_selected <= l_total:
        raise ValueError(f"need 1 <= l_selected <= l_total, got {l_selected}, {l_total}")
    if n_draws < 1:
        raise ValueError(f"n_draws must be >= 1, got {n_draws}")
    draws = rng.exponential(size=(n_draws, l_total))
    draws.sort(axis=1)
    return draws[:, ::-1][:, :l_selected]


def _grouped_means(values: np.ndarray, func) -> dict:
    # collapse float duplicates (e.g. the handful of distinct PSK distances)
    out = {}
    for v in np.unique(np.round(values, 12)):
        if v > 0:
            out[v] = func(v)
    return out


def average_pep(
    kind: str,
    snr_linear: float,
    constellation: Constellation,
    gain_sq_ensemble: np.ndarray,
) -> np.ndarray:
    """Ensemble-averaged pairwise error probabilities over (l, m, lhat, mhat).

    ``kind`` selects which error branch is filled: "correct" fills the
    lhat == l, mhat != m entries with the averaged Gaussian-tail branch using
    the l-th ordered gain; "wrong" fills the lhat != l entries with the
    averaged exponential branch using the lhat-th ordered gain.  All other
    entries are zero, so the two matrices add into the full averaged matrix.
    """
    g = np.asarray(gain_sq_ensemble, dtype=float)
    if g.ndim != 2 or g.shape[0] < 1 or g.shape[1] < 1:
        raise ValueError(f"gain ensemble must be non-empty 2-D, got shape {g.shape}")
    l_s = g.shape[1]
    m_order = constellation.order
    pts = constellation.points
    out = np.zeros((l_s, m_order, l_s, m_order))

    if kind == "correct":
        dist_sq = np.abs(pts[:, None] - pts[None, :]) ** 2
        means = _grouped_means(
            dist_sq,
            lambda v: q_function(np.sqrt(snr_linear * v / 2.0 * g)).mean(axis=0),
        )
        for m in range(m_order):
            for mh in range(m_order):
                if mh == m:
                    continue
                avg = means[round(float(dist_sq[m, mh]), 12)]  # (l_s,)
                for l in range(l_s):
                    out[l, m, l, mh] = avg[l]
    elif kind == "wrong":
        energy = np.abs(pts) ** 2
        means = _grouped_means(
            energy,
            lambda v: 0.5 * np.exp(-snr_linear * v / 2.0 * g).mean(axis=0),
        )
        for mh in range(m_order):
            avg = means[round(float(energy[mh]), 12)]  # (l_s,)
            for l in range(l_s):
                for lh in range(l_s):
                    if lh != l:
                        out[l, :, lh, mh] = avg[lh]
    else:
        raise ValueError(f"kind must be 'correct' or 'wrong', got {kind!r}")
    return out


def abep_union_bound(avg_pep: np.ndarray, l_selected: int, mod_order: int) -> float:
    """Hamming-weighted union bound on the average bit error probability.

    ``avg_pep`` is the full averaged matrix (correct + wrong branches).  The
    result is clamped to 0.5 since union bounds exceed the valid range at
    low SNR.
    """
    avg_pep = np.asarray(avg_pep)
    expected = (l_selected, mod_order, l_selected, mod_order)
    if avg_pep.shape != expected:
        raise ValueError(f"expected PEP matrix of shape {expected}, got {avg_pep.shape}")
    weights = hamming_table(l_selected, mod_order).reshape(expected)
    n_bits = np.log2(mod_order * l_selected)
    total = float((avg_pep * weights).sum()) / (mod_order * l_selected * n_bits)
    return min(0.5, total)


@dataclass(frozen=True)
class AbepCurve:
    """Union-bound values over an SNR grid, non-increasing by construction."""

    snr_grid_db: tuple
    abep: tuple

    def __post_init__(self):
        snr = tuple(float(s) for s in self.snr_grid_db)
        vals = tuple(float(v) for v in self.abep)
        if len(snr) != len(vals):
            raise ValueError("snr grid and abep values must have equal length")
        if any(not 0.0 < v <= 0.5 for v in vals):
            raise ValueError("abep values must lie in (0, 0.5]")
        if any(vals[i + 1] > vals[i] + 1e-15 for i in range(len(vals) - 1)):
            raise ValueError("abep must be non-increasing along the SNR grid")
        object.__setattr__(self, "snr_grid_db", snr)
        object.__setattr__(self, "abep", vals)


def abep_curve(
    snr_grid_db,
    constellation: Constellation,
    l_total: int,
    l_selected: int,
    n_draws: int,
    rng: np.random.Generator,
) -> AbepCurve:
    """Union-bound curve over an SNR grid, one shared gain ensemble throughout.

    Sharing the ensemble across grid points makes the curve exactly monotone
    (each conditional probability decreases pointwise in SNR).
    """
    ensemble = ordered_gain_ensemble(l_total, l_selected, n_draws, rng)
    values = []
    for snr_db in snr_grid_db:
        rho = 10.0 ** (float(snr_db) / 10.0)
        pep = average_pep("correct", rho, constellation, ensemble) + average_pep(
            "wrong", rho, constellation, ensemble
        )
        values.append(abep_union_bound(pep, l_selected, constellation.order))
    return AbepCurve(snr_grid_db=tuple(snr_grid_db), abep=tuple(values))


def snr_at_abep(curve: AbepCurve, level: float) -> float:
    """SNR (dB) where the bound crosses ``level``, log-linear interpolated."""
    snr = curve.snr_grid_db
    vals = curve.abep
    for i in range(len(snr) - 1):
        if vals[i] >= level >= vals[i + 1]:
            y0, y1 = np.log10(vals[i]), np.log10(vals[i + 1])
            if y0 == y1:
                return float(snr[i])
            frac = (np.log10(level) - y0) / (y1 - y0)
            return float(snr[i] + frac * (snr[i + 1] - snr[i]))
    raise ValueError(f"curve does not cross level {level} on its grid")
