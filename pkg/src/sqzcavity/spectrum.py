"""Frequency-indexed data container shared by the model and analysis layers."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidConfig


@dataclass
class Spectrum:
    """A set of named channels sampled on a common angular frequency grid.

    Parameters
    ----------
    omega : ndarray
        Angular sideband frequencies [rad/s], strictly increasing.
    channels : dict of str to ndarray
        Channel name to sampled values, all the same length as ``omega``.
    units : dict of str to str
        Unit tag per channel, e.g. ``"dimensionless"`` or ``"dB"``.
    """

    omega: np.ndarray
    channels: dict[str, np.ndarray]
    units: dict[str, str] = field(default_factory=dict)

    def __post_init__(self):
        self.omega = np.asarray(self.omega, dtype=float)
        if self.omega.ndim != 1 or self.omega.size == 0:
            raise InvalidConfig("omega grid must be a non-empty 1-d array")
        if self.omega.size > 1 and not np.all(np.diff(self.omega) > 0.0):
            raise InvalidConfig("omega grid must be strictly increasing")
        clean = {}
        for name, values in self.channels.items():
            values = np.asarray(values, dtype=float)
            if values.shape != self.omega.shape:
                raise InvalidConfig(
                    f"channel {name!r} has shape {values.shape}, "
                    f"expected {self.omega.shape}"
                )
            clean[name] = values
        self.channels = clean

    def __len__(self) -> int:
        return self.omega.size

    def channel(self, name: str) -> np.ndarray:
        if name not in self.channels:
            raise KeyError(f"no channel {name!r}; have {sorted(self.channels)}")
        return self.channels[name]
