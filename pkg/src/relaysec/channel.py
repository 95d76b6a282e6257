"""Three-node AF untrusted-relay network with destination-based jamming.

All quantities are in the SNR domain (noise power normalized to one)
except :func:`amplification_factor`, which takes the noise power
explicitly. Functions accept numpy arrays wherever the fields of
:class:`ChannelRealization` are arrays, which is how the Monte Carlo
simulator evaluates a whole batch of fading draws at once.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

ETA_SUM_TOL = 1e-9


def db_to_linear(db: float) -> float:
    return 10.0 ** (db / 10.0)


@dataclass(frozen=True)
class SystemParams:
    """One operating point of the network.

    ``gamma_p`` is the linear total transmit SNR, ``eta1..eta3`` the power
    split between source, relay and destination (jammer), ``rs``/``rt``
    the secrecy and codeword rates in bits/s/Hz. When ``d`` (normalized
    source-relay distance) is given, the mean channel gains follow from
    the path-loss law ``omega = distance ** -alpha``.
    """

    gamma_p: float
    eta1: float = 1.0 / 3.0
    eta2: float = 1.0 / 3.0
    eta3: float = 1.0 / 3.0
    rs: float = 1.0
    rt: float | None = None
    omega_sr: float | None = None
    omega_rd: float | None = None
    alpha: float = 4.0
    d: float | None = None

    def __post_init__(self):
        if self.rt is None:
            object.__setattr__(self, "rt", self.rs)
        if self.d is not None:
            if not 0.0 < self.d < 1.0:
                raise ValueError(f"d must lie in (0, 1), got {self.d!r}")
            object.__setattr__(self, "omega_sr", self.d ** -self.alpha)
            object.__setattr__(self, "omega_rd", (1.0 - self.d) ** -self.alpha)
        if self.omega_sr is None or self.omega_rd is None:
            raise ValueError("either d or both omega_sr and omega_rd must be given")
        self._validate()

    def _validate(self):
        etas = (self.eta1, self.eta2, self.eta3)
        if min(etas) <= 0.0:
            raise ValueError(f"eta factors must be positive, got {etas}")
        if abs(sum(etas) - 1.0) > ETA_SUM_TOL:
            raise ValueError(f"eta sum must equal 1, got {sum(etas)!r}")
        if not 0.0 < self.rs <= self.rt:
            raise ValueError(f"rates must satisfy 0 < rs <= rt, got rs={self.rs!r}, rt={self.rt!r}")
        if not self.gamma_p > 0.0:
            raise ValueError(f"gamma_p must be positive, got {self.gamma_p!r}")
        if not (self.omega_sr > 0.0 and self.omega_rd > 0.0):
            raise ValueError("mean channel gains must be positive")
        if not all(map(math.isfinite, (self.gamma_p, self.omega_sr, self.omega_rd, self.rs, self.rt))):
            raise ValueError("parameters must be finite")

    @classmethod
    def from_db(cls, gamma_p_db: float, **kwargs) -> "SystemParams":
        return cls(gamma_p=db_to_linear(gamma_p_db), **kwargs)

    @property
    def gamma_p_db(self) -> float:
        return 10.0 * math.log10(self.gamma_p)

    @property
    def etas(self) -> tuple[float, float, float]:
        return self.eta1, self.eta2, self.eta3

    def with_(self, **changes) -> "SystemParams":
        """Copy with changed fields; omegas are recomputed when ``d`` changes."""
        if "d" in changes and changes["d"] is not None:
            changes.setdefault("omega_sr", None)
            changes.setdefault("omega_rd", None)
        elif "omega_sr" in changes or "omega_rd" in changes:
            changes.setdefault("d", None)
        if "rs" in changes and "rt" not in changes and self.rt == self.rs:
            changes["rt"] = changes["rs"]
        return replace(self, **changes)


@dataclass(frozen=True)
class ChannelRealization:
    """Fading gains; ``g_rd`` serves both the R->D and D->R directions."""

    g_sr: float
    g_rd: float

    def __post_init__(self):
        g = np.asarray(self.g_sr), np.asarray(self.g_rd)
        for arr in g:
            if not np.all(np.isfinite(arr)) or np.any(arr < 0):
                raise ValueError("channel gains must be finite and nonnegative")


@dataclass(frozen=True)
class LinkSinrs:
    gamma_r: float
    gamma_d: float

    @property
    def phi(self):
        """Ratio (1 + Gamma_D) / (1 + Gamma_R) driving the equivocation."""
        return (1.0 + self.gamma_d) / (1.0 + self.gamma_r)


def transmit_snrs(p: SystemParams) -> tuple[float, float, float]:
    return p.eta1 * p.gamma_p, p.eta2 * p.gamma_p, p.eta3 * p.gamma_p


def amplification_factor(p: SystemParams, c: ChannelRealization, n0: float = 1.0):
    if not n0 > 0:
        raise ValueError("noise power must be positive")
    p_s = p.eta1 * p.gamma_p * n0
    p_d = p.eta3 * p.gamma_p * n0
    return 1.0 / np.sqrt(p_s * c.g_sr + p_d * c.g_rd + n0)


def sinrs_from_snrs(gs, gr, gd, g_sr, g_rd):
    """Exact relay and destination SINRs for raw (array) inputs."""
    x = gs * g_sr
    gamma_r = x / (gd * g_rd + 1.0)
    gamma_d = x * (gr * g_rd) / (x + gr * g_rd + gd * g_rd + 1.0)
    return gamma_r, gamma_d


def link_sinrs(p: SystemParams, c: ChannelRealization) -> LinkSinrs:
    gs, gr, gd = transmit_snrs(p)
    return LinkSinrs(*sinrs_from_snrs(gs, gr, gd, c.g_sr, c.g_rd))


def min_bound_gamma_d(p: SystemParams, c: ChannelRealization):
    """Harmonic-mean upper bound on Gamma_D used by the closed forms."""
    gs, gr, gd = transmit_snrs(p)
    return gr / (gr + gd) * np.minimum(gs * c.g_sr, (gr + gd) * c.g_rd)


def capacities(s: LinkSinrs):
    c_l = 0.5 * np.log2(1.0 + s.gamma_d)
    c_e = 0.5 * np.log2(1.0 + s.gamma_r)
    return c_l, c_e


def equivocation_from_phi(phi, rs: float):
    """Fractional equivocation as a function of the SINR ratio.

    1 above ``2**(2 rs)``, 0 at or below 1, ``log2(phi) / (2 rs)`` between.
    Clipping the middle expression reproduces all three branches.
    """
    if not rs > 0:
        raise ValueError("rs must be positive")
    phi = np.asarray(phi, dtype=float)
    out = np.clip(np.log2(np.maximum(phi, np.finfo(float).tiny)) / (2.0 * rs), 0.0, 1.0)
    return out if out.ndim else float(out)


def fractional_equivocation(s: LinkSinrs, rs: float):
    return equivocation_from_phi(s.phi, rs)
