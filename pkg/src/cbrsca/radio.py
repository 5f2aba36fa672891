"""Propagation, contour radii and planar geometry.

Path loss follows COST-231 Hata evaluated as-is at the CBRS carrier
(3.6 GHz), which is outside the model's nominal 1.5-2 GHz range.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

D_MIN_KM = 0.001
EARTH_RADIUS_KM = 6371.0

# environment correction C_m in dB
_ENV_CORRECTION = {"metropolitan": 3.0, "medium_city": 0.0}


@dataclass(frozen=True)
class RadioParams:
    freq_mhz: float = 3600.0
    tx_power_dbm: float = 30.0
    h_tx_m: float = 3.0
    h_rx_m: float = 1.5
    service_threshold_dbm: float = -96.0
    interference_threshold_dbm: float = -80.0
    cs_threshold_dbm: float = -75.0
    env: str = "metropolitan"

    def __post_init__(self):
        if min(self.freq_mhz, self.h_tx_m, self.h_rx_m) <= 0:
            raise ValueError("frequency and antenna heights must be positive")
        if not (self.service_threshold_dbm < self.interference_threshold_dbm
                < self.cs_threshold_dbm < self.tx_power_dbm):
            raise ValueError(
                "thresholds must satisfy service < interference < cs < tx power")
        if self.env not in _ENV_CORRECTION:
            raise ValueError(f"unknown environment {self.env!r}")

    def to_dict(self) -> dict:
        return dict(self.__dict__)


@dataclass(frozen=True)
class Point:
    x_km: float
    y_km: float

    def __post_init__(self):
        if not (math.isfinite(self.x_km) and math.isfinite(self.y_km)):
            raise ValueError("point coordinates must be finite")


def dbm_to_watts(p_dbm):
    if np.ndim(p_dbm):
        return 10.0 ** ((np.asarray(p_dbm, dtype=float) - 30.0) / 10.0)
    return 10.0 ** ((p_dbm - 30.0) / 10.0)


def watts_to_dbm(p_w):
    if np.ndim(p_w):
        return 10.0 * np.log10(np.asarray(p_w, dtype=float)) + 30.0
    return 10.0 * math.log10(p_w) + 30.0


def _hata_terms(params: RadioParams) -> tuple[float, float]:
    """Return (loss at 1 km, slope per decade of distance) in dB."""
    lf = math.log10(params.freq_mhz)
    lh = math.log10(params.h_tx_m)
    a_hr = (1.1 * lf - 0.7) * params.h_rx_m - (1.56 * lf - 0.8)
    intercept = 46.3 + 33.9 * lf - 13.82 * lh - a_hr + _ENV_CORRECTION[params.env]
    slope = 44.9 - 6.55 * lh
    return intercept, slope


def path_loss_db(d_km, params: RadioParams = RadioParams()):
    """COST-231 Hata loss in dB; accepts scalars or arrays.

    Distances below ``D_MIN_KM`` are clamped, non-positive ones rejected.
    """
    intercept, slope = _hata_terms(params)
    if np.ndim(d_km):
        d = np.asarray(d_km, dtype=float)
        if np.any(d <= 0):
            raise ValueError("distance must be positive")
        return intercept + slope * np.log10(np.maximum(d, D_MIN_KM))
    if d_km <= 0:
        raise ValueError("distance must be positive")
    return intercept + slope * math.log10(max(d_km, D_MIN_KM))


def received_power_dbm(d_km, params: RadioParams = RadioParams()):
    """Received power at distance ``d_km`` from a transmitter with ``params``.

    Zero distance is treated as ``D_MIN_KM`` (coincident points).
    """
    if np.ndim(d_km):
        d = np.maximum(np.asarray(d_km, dtype=float), D_MIN_KM)
    else:
        d = max(d_km, D_MIN_KM)
    return params.tx_power_dbm - path_loss_db(d, params)


def contour_radius(tx_dbm: float, threshold_dbm: float,
                   params: RadioParams = RadioParams()) -> float:
    """Distance (km) at which a ``tx_dbm`` signal decays to ``threshold_dbm``.

    Closed-form inverse of the log-linear loss model; the clamp in
    :func:`path_loss_db` is not applied, so tiny radii are returned as-is.
    """
    if threshold_dbm >= tx_dbm:
        raise ValueError("contour undefined: threshold must be below transmit power")
    intercept, slope = _hata_terms(params)
    return 10.0 ** ((tx_dbm - threshold_dbm - intercept) / slope)


def service_radius(params: RadioParams) -> float:
    return contour_radius(params.tx_power_dbm, params.service_threshold_dbm, params)


def interference_radius(params: RadioParams) -> float:
    return contour_radius(params.tx_power_dbm, params.interference_threshold_dbm, params)


def planar_distance(a: Point, b: Point) -> float:
    return math.hypot(a.x_km - b.x_km, a.y_km - b.y_km)


def project_latlon(lat, lon, lat0: float, lon0: float):
    """Equirectangular projection about (lat0, lon0); returns (x_km, y_km)."""
    lat = np.asarray(lat, dtype=float)
    lon = np.asarray(lon, dtype=float)
    x = EARTH_RADIUS_KM * np.radians(lon - lon0) * math.cos(math.radians(lat0))
    y = EARTH_RADIUS_KM * np.radians(lat - lat0)
    return x, y
