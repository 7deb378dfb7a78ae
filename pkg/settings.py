from __future__ import annotations

import logging
import os
from dataclasses import dataclass
from pathlib import Path

from dotenv import load_dotenv


BASIS_KINDS = ("chebyshev_product", "monomial")
GRID_KINDS = ("uniform", "chebyshev_lobatto")


@dataclass(frozen=True)
class Settings:
    """Run-wide defaults. CLI flags override these."""

    basis: str = "chebyshev_product"
    grid_resolution: int = 101
    grid_kind: str = "uniform"
    quadrature_extra: int = 10
    pivot_tol: float = 1e-12
    membership_tol: float = 1e-12
    padua_alpha: float = 0.5


def _read(name: str, cast, default):
    raw = os.getenv(name)
    if raw is None or raw.strip() == "":
        return default
    try:
        return cast(raw.strip())
    except ValueError:
        raise ValueError(f"Invalid value for {name}: {raw!r}") from None


def load_settings(dotenv_path: str | Path | None = ".env") -> Settings:
    """Build Settings from the environment, after loading an optional .env file.

    Variables already set in the environment win over the .env file, which is
    the python-dotenv default.
    """
    if dotenv_path is not None and Path(dotenv_path).exists():
        load_dotenv(dotenv_path=dotenv_path)
        logging.debug(f"Loaded settings from {dotenv_path}")

    settings = Settings(
        basis=_read("HISTO_BASIS", str, Settings.basis),
        grid_resolution=_read("HISTO_GRID_RESOLUTION", int, Settings.grid_resolution),
        grid_kind=_read("HISTO_GRID_KIND", str, Settings.grid_kind),
        quadrature_extra=_read("HISTO_QUADRATURE_EXTRA", int, Settings.quadrature_extra),
        pivot_tol=_read("HISTO_PIVOT_TOL", float, Settings.pivot_tol),
        membership_tol=_read("HISTO_MEMBERSHIP_TOL", float, Settings.membership_tol),
        padua_alpha=_read("HISTO_PADUA_ALPHA", float, Settings.padua_alpha),
    )

    if settings.basis not in BASIS_KINDS:
        raise ValueError(f"Invalid value for HISTO_BASIS: {settings.basis!r}")
    if settings.grid_kind not in GRID_KINDS:
        raise ValueError(f"Invalid value for HISTO_GRID_KIND: {settings.grid_kind!r}")
    if settings.grid_resolution < 2:
        raise ValueError("HISTO_GRID_RESOLUTION must be at least 2")
    if settings.quadrature_extra < 0:
        raise ValueError("HISTO_QUADRATURE_EXTRA must be non-negative")
    if not 0.0 < settings.padua_alpha < 1.0:
        raise ValueError("HISTO_PADUA_ALPHA must lie in (0, 1)")
    return settings
