"""Random channel generation: i.i.d. Rayleigh and an ELAA surrogate.

Every realization is normalized so that ``||H||_F^2 = N`` and is a pure
function of its parameters and seed.

The ELAA surrogate
------------------
The BS is a horizontal uniform linear array along ``x``, centred at the origin
at height ``bs_height``. Each user carries ``antennas_per_user`` antennas on a
short ULA, also along ``x``, at height ``user_height``. User centres are drawn
uniformly from ``region = (x_min, x_max, y_min, y_max)`` unless given.

For the link between user antenna ``k`` and BS antenna ``m`` at distance
``d``::

    h = d^(-ple / 2) * (sqrt(K / (K + 1)) e^(-j 2 pi d / wavelength)
                        + sqrt(1 / (K + 1)) g),     g ~ CN(0, 1)

with ``ple = ple_los`` and Rician factor ``K``. In ``los`` mode every link is
of this form. In ``mixed`` mode each link is LoS with probability
``exp(-d / los_d0)``; the others are Rayleigh, ``d^(-ple_nlos / 2) s g``, with
log-normal shadowing ``s``. ``rician_k_db = inf`` removes the scatter term.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import GeometryError

SPEED_OF_LIGHT = 299_792_458.0
CHANNEL_MODELS = ("rayleigh", "elaa-los", "elaa-mixed")
SPACING_RTOL = 0.01
MIN_DISTANCE = 1e-9


@dataclass(frozen=True)
class SurrogateParams:
    """Propagation constants of the ELAA surrogate."""

    ple_los: float = 2.0
    ple_nlos: float = 3.5
    shadowing_db: float = 4.0
    los_d0: float = 50.0
    rician_k_db: float = 10.0

    def __post_init__(self):
        if self.ple_los <= 0 or self.ple_nlos <= 0:
            raise ValueError("path-loss exponents must be positive")
        if self.shadowing_db < 0:
            raise ValueError("shadowing_db must be non-negative")
        if self.los_d0 <= 0:
            raise ValueError("los_d0 must be positive")

    @property
    def los_fraction(self) -> float:
        """Power share of the specular term, ``K / (K + 1)``."""
        if math.isinf(self.rician_k_db):
            return 1.0
        k = 10.0 ** (self.rician_k_db / 10.0)
        return k / (k + 1.0)


@dataclass(frozen=True)
class ElaaGeometry:
    """Array layout in metres. ``user_positions`` holds ``(x, y)`` user centres."""

    num_bs_antennas: int = 128
    num_users: int = 2
    antennas_per_user: int = 8
    bs_height: float = 10.0
    user_height: float = 1.5
    antenna_spacing: float = 0.0429
    carrier: float = 3.5e9
    region: tuple = (-0.5, 0.5, 300.0, 500.0)
    user_positions: tuple | None = None

    def __post_init__(self):
        if self.num_bs_antennas < 1 or self.num_users < 1 or self.antennas_per_user < 1:
            raise GeometryError("antenna and user counts must be positive")
        half = self.wavelength / 2.0
        if abs(self.antenna_spacing - half) > SPACING_RTOL * half:
            raise GeometryError(
                f"antenna spacing {self.antenna_spacing} m is not half the "
                f"{self.carrier:.3g} Hz wavelength ({half:.4f} m) within 1%"
            )
        x0, x1, y0, y1 = self.region
        if not (x0 <= x1 and y0 <= y1):
            raise GeometryError(f"malformed region {self.region}")
        if self.user_positions is not None:
            pos = tuple(tuple(float(v) for v in p) for p in self.user_positions)
            if len(pos) != self.num_users or any(len(p) != 2 for p in pos):
                raise GeometryError(f"need {self.num_users} (x, y) user positions")
            for x, y in pos:
                if not (x0 <= x <= x1 and y0 <= y <= y1):
                    raise GeometryError(f"user at ({x}, {y}) lies outside region {self.region}")
            object.__setattr__(self, "user_positions", pos)

    @classmethod
    def for_dimensions(cls, m: int, n: int, antennas_per_user: int = 8, **kw) -> "ElaaGeometry":
        """Layout with ``m`` BS antennas and ``n`` user antennas in total."""
        apu = min(antennas_per_user, n)
        if n % apu:
            raise GeometryError(f"N={n} is not a multiple of antennas_per_user={apu}")
        return cls(num_bs_antennas=m, num_users=n // apu, antennas_per_user=apu, **kw)

    @property
    def wavelength(self) -> float:
        return SPEED_OF_LIGHT / self.carrier

    @property
    def num_user_antennas(self) -> int:
        return self.num_users * self.antennas_per_user

    def bs_antennas(self) -> np.ndarray:
        """``(M, 3)`` BS antenna coordinates."""
        m = np.arange(self.num_bs_antennas) - (self.num_bs_antennas - 1) / 2.0
        pos = np.zeros((self.num_bs_antennas, 3))
        pos[:, 0] = m * self.antenna_spacing
        pos[:, 2] = self.bs_height
        return pos

    def user_antennas(self, centres: np.ndarray) -> np.ndarray:
        """``(N, 3)`` user antenna coordinates, grouped by user."""
        k = np.arange(self.antennas_per_user) - (self.antennas_per_user - 1) / 2.0
        pos = np.zeros((len(centres), self.antennas_per_user, 3))
        pos[:, :, 0] = centres[:, 0, None] + k * self.antenna_spacing
        pos[:, :, 1] = centres[:, 1, None]
        pos[:, :, 2] = self.user_height
        return pos.reshape(-1, 3)


@dataclass
class ChannelRealization:
    H: np.ndarray
    model: str
    seed: int
    los_mask: np.ndarray | None = None
    geometry: dict = field(default_factory=dict)

    @property
    def wishart(self) -> np.ndarray:
        return self.H @ self.H.conj().T


def _rng(seed: int) -> np.random.Generator:
    if seed < 0 or seed >= 2**64:
        raise ValueError(f"seed must be an unsigned 64-bit integer, got {seed}")
    return np.random.default_rng(seed)


def _cn(rng: np.random.Generator, shape) -> np.ndarray:
    return (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / math.sqrt(2.0)


def normalize_channel(h: np.ndarray) -> np.ndarray:
    """Scale ``h`` so that ``||h||_F^2`` equals its number of rows."""
    energy = float(np.sum(h.real**2 + h.imag**2))
    if energy == 0.0:
        raise ValueError("cannot normalize an all-zero channel")
    return h * math.sqrt(h.shape[0] / energy)


def rayleigh_channel(n: int, m: int, seed: int, normalize: bool = True) -> ChannelRealization:
    """``n x m`` matrix of i.i.d. ``CN(0, 1)`` entries."""
    if not 1 <= n <= m:
        raise ValueError(f"need 1 <= N <= M, got N={n}, M={m}")
    h = _cn(_rng(seed), (n, m))
    if normalize:
        h = normalize_channel(h)
    return ChannelRealization(h, "rayleigh", seed)


def elaa_channel(geometry: ElaaGeometry, mode: str, seed: int,
                 params: SurrogateParams | None = None) -> ChannelRealization:
    """One ELAA surrogate realization; ``mode`` is ``"los"`` or ``"mixed"``."""
    if mode not in ("los", "mixed"):
        raise ValueError(f"unknown ELAA mode {mode!r}")
    params = params or SurrogateParams()
    rng = _rng(seed)
    if geometry.user_positions is None:
        x0, x1, y0, y1 = geometry.region
        centres = np.column_stack([
            rng.uniform(x0, x1, geometry.num_users),
            rng.uniform(y0, y1, geometry.num_users),
        ])
    else:
        centres = np.array(geometry.user_positions, dtype=float)
    bs = geometry.bs_antennas()
    ue = geometry.user_antennas(centres)
    d = np.linalg.norm(ue[:, None, :] - bs[None, :, :], axis=2)
    if np.any(d < MIN_DISTANCE):
        raise GeometryError("a user antenna coincides with a BS antenna (zero distance)")
    shape = d.shape
    phase = np.exp(-2j * np.pi * d / geometry.wavelength)
    rho = params.los_fraction
    scatter = _cn(rng, shape)
    los = np.sqrt(rho) * phase + np.sqrt(1.0 - rho) * scatter
    los *= d ** (-params.ple_los / 2.0)
    if mode == "los":
        mask = np.ones(shape, dtype=bool)
        h = los
    else:
        mask = rng.uniform(size=shape) < np.exp(-d / params.los_d0)
        shadow = 10.0 ** (params.shadowing_db * rng.standard_normal(shape) / 20.0)
        nlos = d ** (-params.ple_nlos / 2.0) * shadow * _cn(rng, shape)
        h = np.where(mask, los, nlos)
    h = normalize_channel(h)
    info = {"bs_antennas": bs, "user_centres": centres, "user_antennas": ue}
    return ChannelRealization(h, f"elaa-{mode}", seed, mask, info)
