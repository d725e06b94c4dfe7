"""Pipeline configuration."""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field

from .errors import ConfigError
from .signal_core import DEFAULT_CONSTANTS, PhysicalConstants

# Residual ear-canal length intervals by probe insertion depth, in metres.
INTERVAL_PRESETS = {
    "entrance": (15e-3, 45e-3),
    "between_bends": (10e-3, 35e-3),
    "second_bend": (5e-3, 30e-3),
    "beyond_second_bend": (3e-3, 20e-3),
}

SURGE_VARIANTS = ("surge1", "surge2", "geometric")

TERMINATION_RULES = (
    "lme",
    "epsilon",
    "epsilon_corrected",
    "tdrmax",
    "tdrmax_corrected",
    "tdr50",
    "tdr50_corrected",
    "fixed",
)


def fcut_model(f_lim: float) -> float:
    """Blackman cutoff predicted from the highest valid frequency (Hz)."""
    if not f_lim > 0:
        raise ValueError("f_lim must be positive")
    return 1.05 * f_lim + 6.88e3


@dataclass(frozen=True)
class LegacyOptions:
    """Options reproducing the original integer-upsampling method.

    With ``n_sup`` set, the reflectance is computed on a base grid at
    ``f_s`` (default 2 f_lim) and zero-padded to ``n_sup * f_s``.
    """

    n_sup: int | None = None
    f_s: float | None = None
    amplitude_correction: bool = False
    time_reversed_addition: bool = False

    @property
    def upsampling(self):
        return self.n_sup is not None


@dataclass(frozen=True)
class PipelineConfig:
    f_lim: float | None = None
    f_cut: float | str = "auto"
    f_sup: float = 3.5e6
    surge: str = "surge1"
    geometric_area: float | None = None
    a_guess: float = 50e-6
    l_max: float = 50e-3
    termination: str = "epsilon_corrected"
    termination_length: float | None = None
    interval: tuple[float, float] | None = None
    constants: PhysicalConstants = field(default_factory=lambda: DEFAULT_CONSTANTS)
    legacy: LegacyOptions = field(default_factory=LegacyOptions)
    window_a: float = 0.16
    surge_tol: float = 1e-6
    surge_max_iter: int = 100
    clamp: float = 0.9999

    def __post_init__(self):
        if self.surge not in SURGE_VARIANTS:
            raise ConfigError(f"unknown surge variant {self.surge!r}")
        if self.surge == "geometric" and not (self.geometric_area and self.geometric_area > 0):
            raise ConfigError("geometric surge needs a positive geometric_area")
        if self.termination not in TERMINATION_RULES:
            raise ConfigError(f"unknown termination rule {self.termination!r}")
        if self.termination == "fixed" and self.termination_length is None:
            raise ConfigError("fixed termination needs termination_length")
        if not self.l_max > 0:
            raise ConfigError("l_max must be positive")
        if not self.f_sup > 0:
            raise ConfigError("f_sup must be positive")
        if isinstance(self.f_cut, str) and self.f_cut not in ("auto", "off"):
            raise ConfigError("f_cut must be a frequency, 'auto' or 'off'")
        if isinstance(self.interval, str):
            object.__setattr__(self, "interval", resolve_interval(self.interval))
        if self.interval is not None:
            lo, hi = self.interval
            if not 0 <= lo <= hi:
                raise ConfigError("interval must satisfy 0 <= lo <= hi")
        if self.legacy.n_sup is not None and self.legacy.n_sup < 1:
            raise ConfigError("legacy n_sup must be >= 1")

    def replace(self, **changes) -> "PipelineConfig":
        return dataclasses.replace(self, **changes)

    def effective_f_sup(self, f_lim: float) -> float:
        if self.legacy.upsampling:
            return self.legacy.n_sup * self.legacy_f_s(f_lim)
        return self.f_sup

    def legacy_f_s(self, f_lim: float) -> float:
        return self.legacy.f_s if self.legacy.f_s else 2.0 * f_lim

    def resolved_f_cut(self, f_lim: float) -> float | None:
        """Cutoff in Hz, or None when windowing is off."""
        if self.f_cut == "off":
            return None
        f_cut = fcut_model(f_lim) if self.f_cut == "auto" else float(self.f_cut)
        nyq = self.effective_f_sup(f_lim) / 2
        if not 0 < f_cut <= nyq:
            raise ConfigError(f"f_cut {f_cut:g} Hz outside (0, {nyq:g}]")
        return f_cut

    def resolved_interval(self) -> tuple[float, float]:
        return self.interval if self.interval is not None else (0.0, self.l_max)

    def to_dict(self) -> dict:
        d = dataclasses.asdict(self)
        d["interval"] = list(self.interval) if self.interval is not None else None
        return d


def resolve_interval(spec) -> tuple[float, float]:
    """Preset name or (lo, hi) in metres."""
    if isinstance(spec, str):
        try:
            return INTERVAL_PRESETS[spec]
        except KeyError:
            raise ConfigError(
                f"unknown interval preset {spec!r}; choose from {sorted(INTERVAL_PRESETS)}"
            ) from None
    lo, hi = spec
    return float(lo), float(hi)
