"""
Energy gain of collaborative beamforming (CB) and cooperative
transmission (CT) clusters.

Closed forms, Monte Carlo estimators that check them, and the inversion
from a required gain to the cluster size that delivers it.
"""

from __future__ import annotations

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from enum import Enum

import numpy as np

from config_helper import MC_CHUNK, db_to_linear, dbm_to_watts
from errors import ApproximationDomainError, InvalidParameterError, UnreachableGainError
from numerics import Hyp2F1Args, Tolerance, hypergeometric_series, integrate_1d

log = logging.getLogger(__name__)

MU = 0.09332
DEFAULT_MAX_CLUSTER = 10**6

# numerical slack for ceilings of computed gains, e.g. (2A0/A0)**4 == 16
_CEIL_SLACK = 1e-9


def ceil_with_slack(x):
    return max(1, math.ceil(x * (1.0 - _CEIL_SLACK)))


@dataclass(frozen=True)
class PhyParams:
    power: float = 0.01          # W (10 dBm)
    sigma2: float = 1e-10        # W (-70 dBm)
    c0: float = 1.0
    alpha: float = 4.0
    wavelength: float = 0.125    # m
    rho: float = 1.0             # nodes / m^2
    packet_length: int = 100     # symbols
    gamma0: float = 10.0         # linear SNR threshold (10 dB)

    def __post_init__(self):
        checks = [
            (self.power > 0, "power must be > 0"),
            (self.sigma2 > 0, "sigma2 must be > 0"),
            (self.c0 > 0, "c0 must be > 0"),
            (self.alpha >= 2, "alpha must be >= 2"),
            (self.wavelength > 0, "wavelength must be > 0"),
            (self.rho > 0, "rho must be > 0"),
            (int(self.packet_length) == self.packet_length and self.packet_length >= 1,
             "packet_length must be an integer >= 1"),
            (self.gamma0 > 0, "gamma0 must be > 0"),
        ]
        for ok, message in checks:
            if not ok:
                raise InvalidParameterError(f"PhyParams: {message}")

    @classmethod
    def from_db(cls, power_dbm=10.0, noise_dbm=-70.0, gamma0_db=10.0, **kwargs):
        return cls(
            power=dbm_to_watts(power_dbm),
            sigma2=dbm_to_watts(noise_dbm),
            gamma0=db_to_linear(gamma0_db),
            **kwargs,
        )

    def snr(self, distance):
        return self.power * self.c0 * np.power(distance, -self.alpha) / self.sigma2

    def single_hop_range(self):
        """A0: the distance at which the unfaded SNR equals gamma0."""
        return (self.power * self.c0 / (self.sigma2 * self.gamma0)) ** (1.0 / self.alpha)

    def good_channel_argument(self, radius):
        """z = sigma^2 R^alpha / (4 P C0), the 2F1 argument of the CT closed form."""
        return self.sigma2 * radius**self.alpha / (4.0 * self.power * self.c0)

    def cluster_radius(self, n):
        """Disk radius holding n nodes at density rho."""
        return math.sqrt(n / (self.rho * math.pi))


@dataclass(frozen=True)
class ClusterGeometry:
    N: int
    R: float
    A: float

    def __post_init__(self):
        if int(self.N) != self.N or self.N < 1:
            raise InvalidParameterError(f"ClusterGeometry.N must be an integer >= 1, got {self.N}")
        if not self.R > 0:
            raise InvalidParameterError(f"ClusterGeometry.R must be > 0, got {self.R}")
        if not self.A > self.R:
            raise InvalidParameterError(f"far field needs A > R, got A={self.A}, R={self.R}")

    @classmethod
    def from_density(cls, R, A, phy: PhyParams):
        """N = floor(rho * pi * R^2)"""
        return cls(N=int(math.floor(phy.rho * math.pi * R * R)), R=R, A=A)


class GainMode(str, Enum):
    CB_BOUND = "cb-bound"
    CT_CLOSED_FORM = "ct-closed-form"
    IDEAL = "ideal"
    MONTE_CARLO = "monte-carlo"
    QUADRATURE = "quadrature"


@dataclass(frozen=True)
class GainEstimate:
    value: float
    mode: GainMode
    stderr: float = 0.0

    def __post_init__(self):
        if self.value < 0 or self.stderr < 0:
            raise InvalidParameterError(f"GainEstimate needs value, stderr >= 0: {self}")


@dataclass(frozen=True)
class NodePlacement:
    radii: np.ndarray
    angles: np.ndarray

    @classmethod
    def sample(cls, n, R, rng, source_at_center=False):
        """Uniform placement on the disk: r = R*sqrt(u), angle uniform."""
        radii = R * np.sqrt(rng.random(n))
        angles = 2.0 * math.pi * rng.random(n)
        if source_at_center and n:
            radii[0] = 0.0
            angles[0] = 0.0
        return cls(radii=radii, angles=angles)


# ---------------------------------------------------------------- CB

def cb_gain_bound(geom: ClusterGeometry, phy: PhyParams) -> GainEstimate:
    """D_av >= N / (1 + mu N lambda / R)"""
    value = geom.N / (1.0 + MU * geom.N * phy.wavelength / geom.R)
    return GainEstimate(value=value, mode=GainMode.CB_BOUND)


def beam_pattern(placement: NodePlacement, geom: ClusterGeometry, phy: PhyParams, phi):
    """|F(phi|z)|^2 for one placement, beam steered to phi = 0."""
    phi = np.asarray(phi, dtype=float)
    a = 4.0 * math.pi * geom.R * np.sin(phi / 2.0) / phy.wavelength
    z = (placement.radii / geom.R)[None, :] * np.sin(placement.angles[None, :] - phi[:, None] / 2.0)
    factor = np.exp(-1j * a[:, None] * z).mean(axis=1)
    return np.abs(factor) ** 2


def _azimuth_grid(geom: ClusterGeometry, phy: PhyParams):
    # |F|^2 is band-limited to about 4*pi*R/lambda harmonics; the periodic
    # trapezoid rule is exact above that
    needed = 8.0 * math.pi * geom.R / phy.wavelength + 64
    size = max(256, 1 << math.ceil(math.log2(needed)))
    return 2.0 * math.pi * np.arange(size) / size


def directivity(placement: NodePlacement, geom: ClusterGeometry, phy: PhyParams, phi_grid=None):
    """P(0) over the azimuthal mean of P(phi); P(0) = 1 by construction."""
    if phi_grid is None:
        phi_grid = _azimuth_grid(geom, phy)
    return 1.0 / beam_pattern(placement, geom, phy, phi_grid).mean()


def cb_gain_monte_carlo(geom: ClusterGeometry, phy: PhyParams, trials: int, seed: int,
                        workers: int = 1) -> GainEstimate:
    """Mean directivity over random uniform placements."""
    if geom.N == 1 and trials >= 1:
        # a lone node is isotropic
        return GainEstimate(value=1.0, mode=GainMode.MONTE_CARLO)
    phi_grid = _azimuth_grid(geom, phy)

    def kernel(rng, size):
        values = np.empty(size)
        for t in range(size):
            placement = NodePlacement.sample(geom.N, geom.R, rng)
            values[t] = directivity(placement, geom, phy, phi_grid)
        return values

    values = run_chunked(kernel, trials, seed, workers)
    return summarize_trials(values)


# ---------------------------------------------------------------- CT

def ct_success_probability(r, phy: PhyParams):
    """Packet success probability of a relay at distance r from the source.

    BPSK over Rayleigh fading, averaged per bit:
    (1/2 + 1/2 sqrt(P C0 / (P C0 + sigma^2 r^alpha)))^L
    """
    s = phy.sigma2 * np.power(r, phy.alpha) / (phy.power * phy.c0)
    return (0.5 + 0.5 / np.sqrt(1.0 + s)) ** phy.packet_length


def radial_average(z, alpha, packet_length, tol: Tolerance | None = None):
    """2 * integral_0^1 u (1 - z u^alpha)^L du, the quadrature twin of 2F1."""
    tol = tol or Tolerance(rel=1e-12, abs=1e-15, max_iters=2000)
    return 2.0 * integrate_1d(lambda u: u * (1.0 - z * u**alpha) ** packet_length, 0.0, 1.0, tol)


def ct_relay_factor(z, phy: PhyParams):
    """2F1(2/alpha, -L; (alpha+2)/alpha; z), switching to quadrature on cancellation."""
    args = Hyp2F1Args(a=2.0 / phy.alpha, L=int(phy.packet_length), c=(phy.alpha + 2.0) / phy.alpha, z=z)
    series = hypergeometric_series(args)
    if series.cancelled:
        log.debug(f"2F1 cancellation ratio {series.cancellation_ratio:.3g} at z={z:.4g}, integrating instead")
        return radial_average(z, phy.alpha, int(phy.packet_length))
    return series.value


def _ct_closed_form_value(n, radius, phy: PhyParams):
    if n == 1:
        return 1.0
    z = phy.good_channel_argument(radius)
    if z > 1.0:
        raise ApproximationDomainError(
            f"good-channel approximation needs sigma^2 R^alpha / 4P <= 1, got {z:.4g} at R={radius:.4g} m"
        )
    return 1.0 + (n - 1) * ct_relay_factor(z, phy)


def ct_gain_closed_form(geom: ClusterGeometry, phy: PhyParams) -> GainEstimate:
    """D_av = 1 + (N-1) 2F1(2/alpha, -L; (alpha+2)/alpha; sigma^2 R^alpha / 4P)"""
    return GainEstimate(value=_ct_closed_form_value(geom.N, geom.R, phy), mode=GainMode.CT_CLOSED_FORM)


def ct_gain_exact(geom: ClusterGeometry, phy: PhyParams, tol: Tolerance | None = None) -> GainEstimate:
    """The average gain integral without the far-field or good-channel approximations."""
    tol = tol or Tolerance(rel=1e-10, abs=1e-13, max_iters=2000)
    if geom.N == 1:
        return GainEstimate(value=1.0, mode=GainMode.QUADRATURE)

    A, R, alpha = geom.A, geom.R, phy.alpha

    def angular_mean(r):
        # (1/pi) * integral_0^pi (A/d)^alpha dpsi
        path_gain = lambda psi: (A * A / (A * A + r * r - 2.0 * r * A * math.cos(psi))) ** (alpha / 2.0)
        return integrate_1d(path_gain, 0.0, math.pi, tol) / math.pi

    def radial(r):
        return 2.0 * r / (R * R) * float(ct_success_probability(r, phy)) * angular_mean(r)

    relay = integrate_1d(radial, 0.0, R, tol)
    return GainEstimate(value=1.0 + (geom.N - 1) * relay, mode=GainMode.QUADRATURE)


def ct_gain_monte_carlo(geom: ClusterGeometry, phy: PhyParams, trials: int, seed: int,
                        workers: int = 1) -> GainEstimate:
    """E[sum_k A^alpha d_k^-alpha P_r^k] over random relay placements.

    Node 1 is the source at the disk center (d_1 = A, P_r = 1), so it adds
    exactly 1. Relays are evaluated with the exact success probability.
    """
    A, R, alpha = geom.A, geom.R, phy.alpha
    relays = geom.N - 1

    def kernel(rng, size):
        radii = R * np.sqrt(rng.random((size, relays)))
        angles = 2.0 * math.pi * rng.random((size, relays))
        d2 = A * A + radii * radii - 2.0 * radii * A * np.cos(angles)
        path_gain = (A * A / d2) ** (alpha / 2.0)
        return 1.0 + (path_gain * ct_success_probability(radii, phy)).sum(axis=1)

    values = run_chunked(kernel, trials, seed, workers)
    return summarize_trials(values)


def ideal_gain(geom: ClusterGeometry) -> GainEstimate:
    """Dense-network limit D_av / N -> 1."""
    return GainEstimate(value=float(geom.N), mode=GainMode.IDEAL)


# ---------------------------------------------------------------- Monte Carlo plumbing

def run_chunked(kernel, trials, seed, workers=1, chunk=None):
    """Run kernel(rng, size) over fixed-size chunks and concatenate in chunk order.

    Chunk i always draws from SeedSequence(seed, spawn_key=(i,)), so the
    result depends on (seed, trials, chunk) only, never on workers.
    """
    if trials < 1:
        raise InvalidParameterError(f"trials must be >= 1, got {trials}")
    chunk = chunk or MC_CHUNK
    sizes = [min(chunk, trials - start) for start in range(0, trials, chunk)]

    def run(index):
        rng = np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(index,)))
        return kernel(rng, sizes[index])

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(run, range(len(sizes))))
    else:
        parts = [run(i) for i in range(len(sizes))]
    return np.concatenate(parts)


def summarize_trials(values) -> GainEstimate:
    mean = float(np.mean(values))
    stderr = float(np.std(values, ddof=1) / math.sqrt(len(values))) if len(values) > 1 else 0.0
    return GainEstimate(value=mean, mode=GainMode.MONTE_CARLO, stderr=stderr)


# ---------------------------------------------------------------- inversion

def invert_cluster_size(c0, mode, phy: PhyParams, n_max: int = DEFAULT_MAX_CLUSTER) -> int:
    """Smallest cluster size whose average gain reaches c0.

    The cluster occupies a disk of radius sqrt(N / (rho pi)).
    """
    mode = getattr(mode, "value", mode)
    if c0 < 1:
        raise InvalidParameterError(f"required gain must be >= 1, got {c0}")
    if c0 == 1:
        return 1

    if mode == "ideal":
        return ceil_with_slack(c0)

    if mode == "cb":
        c1 = MU * phy.wavelength * math.sqrt(phy.rho * math.pi)
        n = 0.5 * (c0 * (2.0 + c0 * c1 * c1) + c0**1.5 * c1 * math.sqrt(4.0 + c0 * c1 * c1))
        return ceil_with_slack(n)

    if mode == "ct":
        return _invert_ct(c0, phy, n_max)

    raise InvalidParameterError(f"unknown collaboration mode '{mode}'")


def _invert_ct(c0, phy: PhyParams, n_max):
    def gain(n):
        try:
            return _ct_closed_form_value(n, phy.cluster_radius(n), phy)
        except ApproximationDomainError as e:
            raise UnreachableGainError(f"CT gain {c0:.4g} unreachable: {e}")

    lo, hi = 1, 2
    while gain(hi) < c0:
        if hi >= n_max:
            raise UnreachableGainError(f"CT gain {c0:.4g} needs more than {n_max} nodes")
        lo, hi = hi, min(2 * hi, n_max)

    while hi - lo > 1:
        mid = (lo + hi) // 2
        if gain(mid) >= c0:
            hi = mid
        else:
            lo = mid
    return hi
