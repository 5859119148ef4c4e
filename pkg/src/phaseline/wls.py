"""Frame-by-frame phase reconstruction by weighted least squares over complex
STFT coefficients.

Per frame, the estimated time and frequency ratios define two quadratic
penalties on the unknown coefficient vector: closeness to the time-rotated
previous frame, weighted by ``lambda``, and closeness of adjacent-bin ratios,
weighted by ``gamma``.  The stationarity condition is a Hermitian
positive-definite tridiagonal system solved in O(M); the phase is the argument
of the solution and the given magnitude is re-imposed before the next frame.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .phasediff import floor_magnitude, to_complex_ratios, wrap
from .spectral import Spectrogram, istft, stft

DEFAULT_P = 10.0 ** -0.4
DEFAULT_GAMMA0 = 10.0


@dataclass(frozen=True)
class WlsWeights:
    """Diagonal reliability weights: ``lambda_diag`` (length M) for time
    ratios, ``gamma_diag`` (length M-1, row r weighting the bin pair
    (r, r+1)) for frequency ratios."""

    lambda_diag: np.ndarray
    gamma_diag: np.ndarray
    p: float
    gamma0: float


def build_weights(mag_prev, mag_cur, p=DEFAULT_P, gamma0=DEFAULT_GAMMA0, floor_reference=None):
    """Magnitude-product weights ``(A_cur*A_prev)^p`` and
    ``gamma0*(A_cur*A_neighbor)^p`` from floored magnitudes."""
    if gamma0 < 0:
        raise ValueError("gamma0 must be >= 0")
    if not np.isfinite(p):
        raise ValueError("p must be finite")
    mag_prev = np.asarray(mag_prev, dtype=np.float64)
    mag_cur = np.asarray(mag_cur, dtype=np.float64)
    if floor_reference is None:
        floor_reference = max(mag_prev.max(), mag_cur.max())
    prev = floor_magnitude(mag_prev, floor_reference)
    cur = floor_magnitude(mag_cur, floor_reference)
    lambda_diag = (cur * prev) ** p
    gamma_diag = gamma0 * (cur[1:] * cur[:-1]) ** p
    return WlsWeights(lambda_diag, gamma_diag, p, gamma0)


@dataclass(frozen=True)
class TridiagonalHermitianSystem:
    """Hermitian tridiagonal normal equations; the diagonal is real by
    construction and the lower band is the conjugate of ``upper``."""

    diag: np.ndarray
    upper: np.ndarray
    rhs: np.ndarray


def assemble_system(ratios, weights, prev_coefficients):
    """Normal equations of the per-frame objective.

    The matrix is ``diag(lambda) + D^H diag(gamma) D`` where row r of D is
    ``(-u[r], 1)`` on bins (r, r+1); the right-hand side rotates the previous
    frame's coefficients by the time ratios, scaled by ``lambda``.
    """
    m = weights.lambda_diag.size
    if ratios.v.size != m or prev_coefficients.size != m:
        raise ValueError("dimension mismatch between ratios, weights, and state")
    lam = weights.lambda_diag
    gam = weights.gamma_diag
    u = ratios.u
    diag = lam.astype(np.float64).copy()
    diag[:-1] += gam * np.abs(u) ** 2
    diag[1:] += gam
    upper = -np.conj(u) * gam
    rhs = lam * ratios.v * prev_coefficients
    return TridiagonalHermitianSystem(diag, upper, rhs)


def solve_tridiagonal(system):
    """O(M) LDL^H solve of a Hermitian positive-definite tridiagonal system."""
    d = np.asarray(system.diag, dtype=np.float64)
    e = np.asarray(system.upper, dtype=np.complex128)
    b = np.asarray(system.rhs, dtype=np.complex128)
    m = d.size
    if e.size != m - 1 or b.size != m:
        raise ValueError("inconsistent system dimensions")

    delta = np.empty(m)
    sub = np.empty(m - 1, dtype=np.complex128)  # unit lower-bidiagonal factor
    delta[0] = d[0]
    for i in range(1, m):
        if delta[i - 1] <= 0:
            raise np.linalg.LinAlgError("system is not positive definite")
        sub[i - 1] = np.conj(e[i - 1]) / delta[i - 1]
        delta[i] = d[i] - (sub[i - 1] * e[i - 1]).real
    if delta[-1] <= 0:
        raise np.linalg.LinAlgError("system is not positive definite")

    z = np.empty(m, dtype=np.complex128)
    z[0] = b[0]
    for i in range(1, m):
        z[i] = b[i] - sub[i - 1] * z[i - 1]
    x = z / delta
    for i in range(m - 2, -1, -1):
        x[i] -= np.conj(sub[i]) * x[i + 1]
    return x


def wls_objective(x, ratios, weights, prev_coefficients):
    """Value of the per-frame objective at ``x`` (used for certificates)."""
    t_res = x - ratios.v * prev_coefficients
    s_res = x[1:] - ratios.u * x[:-1]
    return float(
        np.sum(weights.lambda_diag * np.abs(t_res) ** 2)
        + np.sum(weights.gamma_diag * np.abs(s_res) ** 2)
    )


@dataclass(frozen=True)
class ReconstructionState:
    """Carry-over between frames: previous coefficients with the given
    magnitude re-imposed, and the running magnitude maximum used as the
    flooring reference in streaming operation."""

    coefficients: np.ndarray
    frame_index: int
    floor_reference: float


def initialize_first_frame(mag_first, fpd_first):
    """Frame-0 state: phase accumulated from the frequency differences,
    anchored at zero phase in the lowest bin."""
    mag_first = np.asarray(mag_first, dtype=np.float64)
    phase = np.concatenate([[0.0], np.cumsum(np.asarray(fpd_first, dtype=np.float64))])
    coeffs = mag_first * np.exp(1j * phase)
    return ReconstructionState(coeffs, 0, float(mag_first.max()))


def reconstruct_frame(state, mag_cur, tpd, fpd, p=DEFAULT_P, gamma0=DEFAULT_GAMMA0):
    """One step of the weighted least-squares recursion.

    Returns ``(phase, new_state)``; the new state re-imposes ``mag_cur`` on the
    solution so only the phase survives to the next frame.
    """
    mag_cur = np.asarray(mag_cur, dtype=np.float64)
    mag_prev = np.abs(state.coefficients)
    floor_ref = max(state.floor_reference, float(mag_cur.max()))
    ratios = to_complex_ratios(mag_prev, mag_cur, tpd, fpd, floor_reference=floor_ref)
    weights = build_weights(mag_prev, mag_cur, p, gamma0, floor_reference=floor_ref)
    system = assemble_system(ratios, weights, state.coefficients)
    solution = solve_tridiagonal(system)
    phase = np.angle(solution)
    new_state = ReconstructionState(
        mag_cur * np.exp(1j * phase), state.frame_index + 1, floor_ref
    )
    return phase, new_state


def time_integration_step(prev_phase, tpd):
    """Accumulate the time difference onto the previous phase (baseline)."""
    return np.asarray(prev_phase, dtype=np.float64) + np.asarray(tpd, dtype=np.float64)


def reconstruct_wls(magnitude, tpd, fpd, p=DEFAULT_P, gamma0=DEFAULT_GAMMA0):
    """Grid driver for the WLS recursion.

    ``magnitude`` is (M, N); ``tpd`` is (M, N-1) covering frames 1 onward and
    ``fpd`` is (M-1, N).  Frame 0 is initialized from ``fpd[:, 0]``.
    """
    magnitude = np.asarray(magnitude, dtype=np.float64)
    n_frames = magnitude.shape[1]
    state = initialize_first_frame(magnitude[:, 0], fpd[:, 0])
    phase = np.empty_like(magnitude)
    phase[:, 0] = np.angle(state.coefficients)
    for n in range(1, n_frames):
        phase[:, n], state = reconstruct_frame(
            state, magnitude[:, n], tpd[:, n - 1], fpd[:, n], p, gamma0
        )
    return phase


def reconstruct_time_integration(magnitude, tpd, fpd):
    """Grid driver for the time-integration baseline with the same frame-0
    initialization as the WLS path.  ``fpd`` is used only at frame 0."""
    magnitude = np.asarray(magnitude, dtype=np.float64)
    n_frames = magnitude.shape[1]
    phase = np.empty_like(magnitude)
    phase[:, 0] = np.concatenate([[0.0], np.cumsum(fpd[:, 0])])
    for n in range(1, n_frames):
        phase[:, n] = time_integration_step(phase[:, n - 1], tpd[:, n - 1])
    return phase


def griffin_lim_refine(spec, iterations):
    """Classic alternating-projection refinement of an estimated phase.

    Each iteration replaces the phase with that of the re-analyzed synthesis
    while keeping the target magnitude; the consistency residual never
    increases.  Zero iterations return the input phase unchanged.
    """
    if iterations < 0:
        raise ValueError("iterations must be >= 0")
    magnitude = spec.magnitude
    phase = spec.phase
    for _ in range(iterations):
        current = Spectrogram(
            magnitude * np.exp(1j * phase),
            spec.config,
            spec.sample_rate,
            spec.signal_length,
        )
        reanalyzed = stft(istft(current), spec.config, spec.sample_rate)
        phase = reanalyzed.phase
    return phase
