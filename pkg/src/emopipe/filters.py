"""Butterworth band-pass filter bank: analog design and digital realization.

The analog design follows the classical normalized-prototype route: N poles
on the unit circle in the left half p-plane, then the low-pass to band-pass
index substitution p = (s^2 + w_l*w_u) / (s * (w_u - w_l)).  Digital
realization is a bilinear transform with pre-warped band edges so the -3 dB
points of the *digital* filter land on the requested Hz values; coefficients
are kept as a cascade of second-order sections because an order-16 direct
form is numerically unusable in doubles.

Application is forward-backward (zero phase) by default: offline analysis,
and phase distortion would bias the windowed derivative features downstream.
A single-pass causal mode is available for streaming experiments.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import kernels
from .errors import ComputationError, ValidationError
from .model import Band

DEFAULT_ORDER = 8


@dataclass(frozen=True)
class FilterDesign:
    """Analog design metadata for one band."""

    order: int
    band: Band
    sampling_rate: float
    normalized_poles: np.ndarray  # N low-pass prototype poles, |p| = 1
    analog_poles: np.ndarray  # 2N band-pass poles, rad/s, left half-plane
    band_parameters: dict  # B, eta_l, eta_u, eta0_sq (rad/s convention)


@dataclass(frozen=True)
class AnalogBandpass:
    """Band-pass transfer function in the s-domain: gain * prod(s - z) / prod(s - p)."""

    zeros: np.ndarray
    poles: np.ndarray
    gain: float
    design: FilterDesign

    def magnitude(self, freq_hz) -> np.ndarray:
        """|H(j * 2*pi*f)| evaluated at freq_hz (scalar or array)."""
        s = 1j * 2.0 * math.pi * np.asarray(freq_hz, dtype=np.float64)
        num = np.prod(s[..., None] - self.zeros, axis=-1)
        den = np.prod(s[..., None] - self.poles, axis=-1)
        return np.abs(self.gain * num / den)


@dataclass(frozen=True)
class DigitalFilter:
    """Second-order-section cascade; sections are (b0, b1, b2, a1, a2), a0 = 1."""

    sections: np.ndarray  # (n_sections, 5) float64
    design: FilterDesign

    @property
    def n_sections(self) -> int:
        return self.sections.shape[0]

    @property
    def sampling_rate(self) -> float:
        return self.design.sampling_rate


def design_lowpass_prototype(order: int) -> np.ndarray:
    """Normalized Butterworth low-pass poles p_k = exp(j*pi*(2k+N+1)/(2N)).

    All N poles lie on the unit circle in the open left half-plane.
    """
    if order < 1:
        raise ValidationError(f"filter order must be >= 1, got {order}")
    k = np.arange(order)
    poles = np.exp(1j * math.pi * (2.0 * k + order + 1.0) / (2.0 * order))
    # force exact conjugate symmetry (and a real pole at -1 for odd N)
    poles = 0.5 * (poles + np.conj(poles[::-1]))
    return poles


def _bandpass_zpk(prototype: np.ndarray, w_low: float, w_high: float):
    """Low-pass to band-pass substitution in rad/s; returns (zeros, poles, gain).

    Each prototype pole p maps to the two roots of s^2 - p*B*s + w0^2 = 0
    (B = w_high - w_low, w0^2 = w_low * w_high); the N transformed numerators
    contribute N zeros at s = 0 and a factor B^N.
    """
    bw = w_high - w_low
    w0_sq = w_low * w_high
    roots = []
    for p in prototype:
        disc = np.sqrt(complex(p * p * bw * bw - 4.0 * w0_sq))
        roots.append(0.5 * (p * bw + disc))
        roots.append(0.5 * (p * bw - disc))
    poles = np.array(roots)
    zeros = np.zeros(len(prototype), dtype=complex)
    # normalize to unit magnitude at the geometric center
    s0 = 1j * math.sqrt(w0_sq)
    raw = np.abs(np.prod(s0 - zeros) / np.prod(s0 - poles))
    gain = 1.0 / raw
    return zeros, poles, gain


def bandpass_transform(prototype: np.ndarray, band: Band, sampling_rate: float) -> AnalogBandpass:
    """Analog band-pass transfer function for the given band (literal Hz edges)."""
    band.validate_against(sampling_rate)
    w_low = 2.0 * math.pi * band.low_hz
    w_high = 2.0 * math.pi * band.high_hz
    zeros, poles, gain = _bandpass_zpk(prototype, w_low, w_high)
    if np.any(poles.real >= 0):
        raise ComputationError(f"band {band.name!r}: unstable analog design")
    bw = w_high - w_low
    design = FilterDesign(
        order=len(prototype),
        band=band,
        sampling_rate=sampling_rate,
        normalized_poles=prototype,
        analog_poles=poles,
        band_parameters={
            "B": bw,
            "eta_l": w_low / bw,
            "eta_u": w_high / bw,
            "eta0_sq": (w_low / bw) * (w_high / bw),
        },
    )
    return AnalogBandpass(zeros=zeros, poles=poles, gain=gain, design=design)


def _pair_conjugates(values: np.ndarray) -> list[tuple[complex, complex]]:
    """Group a conjugate-symmetric set into (value, partner) pairs."""
    tol = 1e-9
    complexes = sorted(
        (v for v in values if v.imag > tol),
        key=lambda v: (v.real, v.imag),
    )
    reals = sorted((v.real for v in values if abs(v.imag) <= tol))
    pairs = [(v, v.conjugate()) for v in complexes]
    if len(reals) % 2 != 0:
        raise ComputationError("cannot pair an odd number of real poles into biquads")
    pairs.extend(
        (complex(reals[i]), complex(reals[i + 1])) for i in range(0, len(reals), 2)
    )
    return pairs


def discretize(analog: AnalogBandpass, sampling_rate: float) -> DigitalFilter:
    """Bilinear transform with band-edge pre-warping, assembled into biquads.

    The analog design is re-derived at warped edges w' = 2*fs*tan(pi*f/fs) so
    that the digital magnitude hits 1/sqrt(2) at the band's named Hz edges.
    Each conjugate pole pair becomes one section carrying one zero at z=+1 and
    one at z=-1; sections are individually normalized to unit magnitude at the
    band's geometric center and ordered with poles nearest the unit circle
    last.
    """
    band = analog.design.band
    if sampling_rate != analog.design.sampling_rate:
        raise ValidationError(
            f"analog design was made for fs={analog.design.sampling_rate}, "
            f"got fs={sampling_rate}"
        )
    band.validate_against(sampling_rate)
    fs = sampling_rate
    w_low = 2.0 * fs * math.tan(math.pi * band.low_hz / fs)
    w_high = 2.0 * fs * math.tan(math.pi * band.high_hz / fs)
    _, poles_a, _ = _bandpass_zpk(analog.design.normalized_poles, w_low, w_high)
    # bilinear z = (2fs + s) / (2fs - s); the N zeros at s=0 map to z=+1 and
    # the relative degree contributes N more at z=-1 (hardwired per section)
    poles_d = (2.0 * fs + poles_a) / (2.0 * fs - poles_a)
    if np.any(np.abs(poles_d) >= 1.0):
        raise ComputationError(f"band {band.name!r}: bilinear produced unstable poles")

    pole_pairs = _pair_conjugates(poles_d)
    pole_pairs.sort(key=lambda pq: (abs(pq[0] * pq[1]), (pq[0] + pq[1]).real))
    n_pos = len(pole_pairs)
    if 2 * n_pos != len(poles_d):
        raise ComputationError("pole pairing failed")

    theta_c = 2.0 * math.pi * math.sqrt(band.low_hz * band.high_hz) / fs
    zc = np.exp(1j * theta_c)
    sections = np.empty((n_pos, 5), dtype=np.float64)
    for i, (p, q) in enumerate(pole_pairs):
        a1 = -(p + q).real
        a2 = (p * q).real
        # numerator (z-1)(z+1) = z^2 - 1, scaled to unit gain at the center
        num = zc * zc - 1.0
        den = zc * zc + a1 * zc + a2
        g = abs(den / num)
        sections[i] = (g, 0.0, -g, a1, a2)
    return DigitalFilter(sections=sections, design=analog.design)


def design_bandpass(band: Band, sampling_rate: float, order: int = DEFAULT_ORDER) -> DigitalFilter:
    """Full design chain: prototype -> analog band-pass -> pre-warped digital."""
    prototype = design_lowpass_prototype(order)
    analog = bandpass_transform(prototype, band, sampling_rate)
    return discretize(analog, sampling_rate)


def design_filter_bank(bands, sampling_rate: float, order: int = DEFAULT_ORDER):
    """One DigitalFilter per band, keyed by band name."""
    return {band.name: design_bandpass(band, sampling_rate, order) for band in bands}


def frequency_response(filt: DigitalFilter, freq_hz) -> np.ndarray:
    """Cascade magnitude |H(e^{j*2*pi*f/fs})| at freq_hz (scalar or array)."""
    f = np.asarray(freq_hz, dtype=np.float64)
    nyquist = filt.sampling_rate / 2.0
    if np.any(f < 0) or np.any(f > nyquist):
        raise ValidationError(f"frequency outside [0, {nyquist}] Hz")
    z1 = np.exp(-2j * math.pi * f / filt.sampling_rate)
    z2 = z1 * z1
    mag = np.ones_like(f)
    for b0, b1, b2, a1, a2 in filt.sections:
        mag = mag * np.abs((b0 + b1 * z1 + b2 * z2) / (1.0 + a1 * z1 + a2 * z2))
    return mag if mag.ndim else float(mag)


def _steady_state_per_section(sections: np.ndarray) -> np.ndarray:
    """Unit-step steady-state DF2T state for each section, cascaded.

    Returns (n_sections, 2); multiply by the (constant) input level to get the
    actual state.  The constant propagated into section i+1 is section i's DC
    gain times its input level.
    """
    n = sections.shape[0]
    zi = np.zeros((n, 2))
    level = 1.0
    for i, (b0, b1, b2, a1, a2) in enumerate(sections):
        denom = 1.0 + a1 + a2
        if abs(denom) < 1e-300:
            raise ComputationError("section has a pole at z=1; cannot form steady state")
        z1 = (b1 + b2 - (a1 + a2) * b0) / denom
        y_ss = b0 + z1  # DC gain of this section
        zi[i, 0] = z1 * level
        zi[i, 1] = (b2 - a2 * y_ss) * level
        level *= y_ss
    return zi


def apply_batch(filt: DigitalFilter, signals: np.ndarray, zero_phase: bool = True) -> np.ndarray:
    """Filter each row of ``signals``; forward-backward when zero_phase.

    Edges are handled by odd reflection of 3x the cascade state length
    (6 * n_sections samples) at both ends, with steady-state initial
    conditions scaled to the first padded sample, mirroring the usual
    filtfilt recipe.
    """
    x = np.asarray(signals, dtype=np.float64)
    squeeze = x.ndim == 1
    if squeeze:
        x = x[None, :]
    if x.ndim != 2:
        raise ValidationError(f"signals must be 1-D or 2-D, got shape {x.shape}")
    if x.shape[1] < 2:
        raise ValidationError("signal too short to filter")
    if not np.isfinite(x).all():
        raise ValidationError("signal contains non-finite values")
    x = np.ascontiguousarray(x)
    sos = filt.sections

    if not zero_phase:
        y = kernels.sosfilt(sos, x)
        return y[0] if squeeze else y

    padlen = min(6 * filt.n_sections, x.shape[1] - 1)
    left = 2.0 * x[:, :1] - x[:, padlen:0:-1]
    right = 2.0 * x[:, -1:] - x[:, -2 : -2 - padlen : -1]
    ext = np.ascontiguousarray(np.concatenate([left, x, right], axis=1))

    zi_unit = _steady_state_per_section(sos)
    zi = zi_unit[None, :, :] * ext[:, :1, None]
    y = kernels.sosfilt(sos, ext, zi)
    y = np.ascontiguousarray(y[:, ::-1])
    zi = zi_unit[None, :, :] * y[:, :1, None]
    y = kernels.sosfilt(sos, y, zi)[:, ::-1]
    y = y[:, padlen : padlen + x.shape[1]] if padlen else y
    return y[0] if squeeze else y


def apply(filt: DigitalFilter, signal: np.ndarray, zero_phase: bool = True) -> np.ndarray:
    """Filter one 1-D signal, returning a vector of the same length."""
    signal = np.asarray(signal, dtype=np.float64)
    if signal.ndim != 1:
        raise ValidationError(f"signal must be 1-D, got shape {signal.shape}")
    return apply_batch(filt, signal, zero_phase=zero_phase)
