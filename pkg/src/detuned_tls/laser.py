"""Mean-field laser treatment: pulled frequency, intensity, field dynamics.

Treating the cavity amplitude as a classical variable closes the equations
of motion.  Demanding a time-independent steady state in a frame rotating at
the oscillation frequency fixes that frequency to a rate-weighted mean of the
cavity and transition frequencies (frequency pulling) and yields a closed
form for the saturated intensity.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .model import (
    CavitySpec,
    EnergyLevels,
    Occupations,
    SystemSpec,
    resolve_occupations,
)


@dataclass(frozen=True)
class LaserSolution:
    """Oscillation frequency and saturated field of the mean-field laser.

    The oscillation frequency depends only on rates and energies, never on
    the reservoir occupations.  Below threshold the field is zero; above it
    the global phase is fixed so that the amplitude is real and positive.
    ``small_signal_gain`` is the unsaturated gain-to-loss ratio; threshold
    sits at 1.
    """

    omega: float
    a_ss: complex
    sigma_ul_ss: complex
    intensity: float
    above_threshold: bool
    small_signal_gain: float


@dataclass(frozen=True)
class MeanFieldState:
    sigma_uu: float
    sigma_ll: float
    sigma_ul: complex
    field: complex


@dataclass(frozen=True)
class MeanFieldTrajectory:
    t: np.ndarray
    sigma_uu: np.ndarray
    sigma_ll: np.ndarray
    sigma_ul: np.ndarray
    field: np.ndarray

    @property
    def final(self) -> MeanFieldState:
        return MeanFieldState(
            float(self.sigma_uu[-1]),
            float(self.sigma_ll[-1]),
            complex(self.sigma_ul[-1]),
            complex(self.field[-1]),
        )


def pulled_frequency(
    levels: EnergyLevels,
    cavity: CavitySpec,
    gamma_u: float,
    gamma_l: float,
    gamma_b: float,
) -> float:
    """Oscillation frequency pulled between cavity and transition.

    Rate-weighted mean of the cavity frequency (weight: atomic broadening)
    and the transition frequency (weight: cavity loss).  Coincides with the
    effective photon energy of the quantum treatment.
    """
    total = gamma_u + gamma_l + gamma_b
    if total <= 0:
        raise ValueError("gamma_u + gamma_l + gamma_b must be positive")
    return ((gamma_u + gamma_l) * cavity.omega_cav + gamma_b * levels.gap) / total


def _laser_coefficients(spec: SystemSpec) -> tuple[float, float, float, float, float]:
    """omega, delta (vs transition), delta_c (vs cavity), loss term A, saturation S."""
    gamma_u = spec.reservoir_u.gamma
    gamma_l = spec.reservoir_l.gamma
    gamma_b = spec.bath.gamma
    omega = pulled_frequency(spec.levels, spec.cavity, gamma_u, gamma_l, gamma_b)
    delta = omega - spec.levels.gap
    delta_c = omega - spec.cavity.omega_cav
    gamma_sum = gamma_u + gamma_l
    a_coeff = delta_c * delta - gamma_b * gamma_sum / 4.0
    saturation = gamma_sum**2 / (gamma_u * gamma_l * (gamma_sum**2 / 4.0 + delta**2))
    return omega, delta, delta_c, a_coeff, saturation


def solve_lasing(spec: SystemSpec, occupations: Occupations | None = None) -> LaserSolution:
    """Closed-form lasing solution from the gain-saturation balance.

    An inversion-free medium (f_u <= f_l) is below threshold, not an error.
    """
    if spec.cavity is None or spec.bath is None:
        raise ValueError("lasing requires a cavity and a bosonic bath")
    if spec.bath.gamma <= 0:
        raise ValueError("lasing requires a lossy cavity (bath gamma > 0)")
    occ = occupations or resolve_occupations(spec, "quantum")

    omega, _, delta_c, a_coeff, saturation = _laser_coefficients(spec)
    g = complex(spec.cavity.g)
    g2 = abs(g) ** 2
    if g2 <= 0:
        raise ValueError("lasing requires a non-zero coupling")

    # Unsaturated gain over loss; the field balance reads
    # a_coeff = -|g|^2 (f_u - f_l) / (1 + saturation |g a|^2) with a_coeff < 0.
    gain = -g2 * (occ.f_u - occ.f_l) / a_coeff
    if gain <= 1.0:
        return LaserSolution(
            omega=omega,
            a_ss=0.0 + 0.0j,
            sigma_ul_ss=0.0 + 0.0j,
            intensity=0.0,
            above_threshold=False,
            small_signal_gain=gain,
        )

    intensity = (gain - 1.0) / (saturation * g2)
    amplitude = math.sqrt(intensity)
    sigma_ul = (delta_c + 0.5j * spec.bath.gamma) * g * amplitude / g2
    return LaserSolution(
        omega=omega,
        a_ss=complex(amplitude),
        sigma_ul_ss=sigma_ul,
        intensity=intensity,
        above_threshold=True,
        small_signal_gain=gain,
    )


def evolve_meanfield(
    state0: MeanFieldState,
    spec: SystemSpec,
    t_final: float,
    dt: float | None = None,
    occupations: Occupations | None = None,
    max_store: int = 2001,
) -> MeanFieldTrajectory:
    """RK4 integration of the factorized equations in the pulled frame.

    The zero-field state is an exact (unstable) fixed point, so driving the
    laser up from below requires a small seed amplitude.  Field growth beyond
    1e6 aborts with a divergence error.
    """
    if spec.cavity is None or spec.bath is None:
        raise ValueError("mean-field dynamics requires a cavity and a bath")
    occ = occupations or resolve_occupations(spec, "quantum")
    omega, delta, delta_c, _, _ = _laser_coefficients(spec)

    gamma_u = spec.reservoir_u.gamma
    gamma_l = spec.reservoir_l.gamma
    gamma_b = spec.bath.gamma
    g = complex(spec.cavity.g)
    gamma_sum = gamma_u + gamma_l

    if dt is None:
        try:
            a_scale = max(1.0, abs(state0.field), abs(solve_lasing(spec, occ).a_ss))
        except ValueError:
            a_scale = max(1.0, abs(state0.field))
        rate_scale = max(gamma_u, gamma_l, gamma_b, abs(delta), abs(delta_c), abs(g) * a_scale)
        dt = 0.02 / rate_scale
    if dt <= 0 or t_final <= 0:
        raise ValueError("dt and t_final must be positive")

    def rhs(y: np.ndarray) -> np.ndarray:
        s_uu, s_ll, s_ul, field = y
        corr = g.conjugate() * field.conjugate() * s_ul  # Y under factorization
        rate = 2.0 * corr.imag
        return np.array(
            [
                gamma_u * (occ.f_u - s_uu.real) - rate,
                gamma_l * (occ.f_l - s_ll.real) + rate,
                1j * delta * s_ul + 1j * g * field * (s_uu - s_ll) - 0.5 * gamma_sum * s_ul,
                1j * delta_c * field - 1j * g.conjugate() * s_ul - 0.5 * gamma_b * field,
            ],
            dtype=complex,
        )

    n_steps = max(1, math.ceil(t_final / dt - 1e-12))
    h = t_final / n_steps
    stride = max(1, -(-n_steps // (max_store - 1)))

    y = np.array(
        [state0.sigma_uu, state0.sigma_ll, state0.sigma_ul, state0.field], dtype=complex
    )
    times = [0.0]
    samples = [y.copy()]
    for step in range(1, n_steps + 1):
        k1 = rhs(y)
        k2 = rhs(y + 0.5 * h * k1)
        k3 = rhs(y + 0.5 * h * k2)
        k4 = rhs(y + h * k3)
        y = y + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        if abs(y[3]) > 1e6:
            raise RuntimeError(f"field diverged at t = {step * h:.6g}")
        if step % stride == 0 or step == n_steps:
            times.append(step * h)
            samples.append(y.copy())

    arr = np.array(samples)
    return MeanFieldTrajectory(
        t=np.array(times),
        sigma_uu=arr[:, 0].real,
        sigma_ll=arr[:, 1].real,
        sigma_ul=arr[:, 2],
        field=arr[:, 3],
    )
