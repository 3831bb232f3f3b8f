"""Far-field optical link budget, maximum rate, and range sweeps."""
from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass

import numpy as np

from .infotheory import DEFAULT_TOL
from .optimize import optimize_ppm_order

H_PLANCK = 6.62607015e-34  # J s
C_LIGHT = 2.99792458e8  # m/s
AU = 1.496e11  # m
AU_ROUNDED = 1.5e11  # m, the rounded value quoted alongside the range plots


class FarFieldError(ValueError):
    """Total link efficiency above one: the far-field diffraction model does not apply."""


@dataclass(frozen=True)
class LinkGeometry:
    """Physical link parameters (SI units).

    Attributes
    ----------
    P_t : transmitted optical power, W
    B : slot bandwidth, Hz (one time bin lasts 1/B)
    f_c : carrier frequency, Hz
    D_t, D_r : transmitter and receiver aperture diameters, m
    eta_det : detector efficiency in (0, 1]
    r : range, m
    """

    P_t: float
    B: float
    f_c: float
    D_t: float
    D_r: float
    eta_det: float
    r: float

    def __post_init__(self):
        for name in ("P_t", "B", "f_c", "D_t", "D_r", "eta_det", "r"):
            v = getattr(self, name)
            if not (v > 0 and math.isfinite(v)):
                raise ValueError(f"{name} must be finite and > 0, got {v}")
        if self.eta_det > 1:
            raise ValueError(f"eta_det must be <= 1, got {self.eta_det}")

    def at_range(self, r):
        return dataclasses.replace(self, r=r)


def reference_geometry(r=AU):
    """The deep-space example link: 4 W, 2 GHz, 200 THz, 0.22 m / 11.8 m, 2.5% detector."""
    return LinkGeometry(P_t=4.0, B=2e9, f_c=2e14, D_t=0.22, D_r=11.8, eta_det=0.025, r=r)


def total_efficiency(geom: LinkGeometry):
    """``eta_det * (pi f_c D_t D_r / (4 c r))**2``; raises `FarFieldError` above 1."""
    eta = geom.eta_det * (math.pi * geom.f_c * geom.D_t * geom.D_r / (4.0 * C_LIGHT * geom.r)) ** 2
    if eta > 1:
        raise FarFieldError(f"total efficiency {eta:.3g} > 1 at r={geom.r:g} m")
    return eta


def photon_energy(geom: LinkGeometry):
    return H_PLANCK * geom.f_c


def detected_signal_level(geom: LinkGeometry):
    """Mean detected signal photons per time bin, ``n_a = eta_tot P_t / (B h f_c)``."""
    return total_efficiency(geom) * geom.P_t / (geom.B * photon_energy(geom))


@dataclass
class RangePoint:
    """One row of a range sweep.  ``error`` is set (and numbers are NaN) when the point failed."""

    r: float
    n_b: float
    mode: str
    n_a: float = math.nan
    eta_tot: float = math.nan
    M_star: int | None = None
    pie_star: float = math.nan
    n_s_star: float = math.nan
    rate_bits_per_s: float = math.nan
    peak_power_W: float = math.nan
    error: str | None = None


def max_rate(geom: LinkGeometry, n_b, mode="complete", tol=DEFAULT_TOL):
    """Optimized information rate and the peak power it needs at ``geom.r``.

    ``R = B n_a PIE*`` and, for a rectangular pulse filling one bin,
    ``P_peak = B h f_c n_s* / eta_tot``.
    """
    eta = total_efficiency(geom)
    n_a = detected_signal_level(geom)
    opt = optimize_ppm_order(n_a, n_b, mode, tol)
    return RangePoint(
        r=geom.r,
        n_b=n_b,
        mode=mode,
        n_a=n_a,
        eta_tot=eta,
        M_star=opt.M_star,
        pie_star=opt.pie_star,
        n_s_star=opt.n_s_star,
        rate_bits_per_s=geom.B * n_a * opt.pie_star,
        peak_power_W=geom.B * photon_energy(geom) * opt.n_s_star / eta,
    )


def iter_range_sweep(geom_template: LinkGeometry, n_b_list, r_grid, mode_list,
                     tol=DEFAULT_TOL):
    """Yield `RangePoint` rows ordered by ``n_b``, then mode, then range.

    A failing point yields a row with ``error`` set; the sweep carries on.
    """
    r_grid = [float(r) for r in r_grid]
    if any(b <= a for a, b in zip(r_grid, r_grid[1:])):
        raise ValueError("r_grid must be strictly increasing")
    for n_b in n_b_list:
        for mode in mode_list:
            for r in r_grid:
                try:
                    yield max_rate(geom_template.at_range(r), n_b, mode, tol)
                except (ValueError, ArithmeticError) as exc:
                    yield RangePoint(r=r, n_b=n_b, mode=mode,
                                     error=f"{type(exc).__name__}: {exc}")


def range_sweep(geom_template, n_b_list, r_grid, mode_list, tol=DEFAULT_TOL):
    return list(iter_range_sweep(geom_template, n_b_list, r_grid, mode_list, tol))


def loglog_slope(x, y):
    """Least-squares exponent of ``y ~ x**slope``."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    return float(np.polyfit(np.log(x), np.log(y), 1)[0])
