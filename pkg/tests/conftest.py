import numpy as np
import pytest

from sqzcavity import OpticalConfig


@pytest.fixture
def reference_config() -> OpticalConfig:
    """Tabletop cavity used for the frozen expected values: 2.77 cm,
    1550 nm, 15% coupler, 500 ppm back mirror, 1800 ppm internal loss,
    82% detection efficiency, squeeze factor 0.02."""
    return OpticalConfig(
        lambda0=1550e-9,
        length=0.0277,
        t_c_sq=0.15,
        t_b_sq=0.0005,
        r_int_sq=0.0018,
        q=0.02,
        eta_det=0.82,
        p_circ=1.0,
    )


@pytest.fixture
def omega_grid(reference_config) -> np.ndarray:
    """Dense grid across one free spectral range."""
    return np.linspace(0.0, reference_config.fsr_rad_s, 257)


def random_config(rng: np.random.Generator) -> OpticalConfig:
    """A random valid cavity below threshold, biased toward realistic
    tabletop numbers but covering wide ranges."""
    t_c_sq = rng.uniform(1e-4, 0.5)
    t_b_sq = rng.uniform(0.0, 0.01)
    r_int_sq = rng.uniform(0.0, 0.01)
    cfg = OpticalConfig(
        lambda0=rng.uniform(500e-9, 2000e-9),
        length=10 ** rng.uniform(-2.0, 1.0),
        t_c_sq=t_c_sq,
        t_b_sq=t_b_sq,
        r_int_sq=r_int_sq,
        q=0.0,
        eta_det=rng.uniform(0.05, 1.0),
        p_circ=10 ** rng.uniform(-3.0, 1.0),
    )
    from sqzcavity import opo_threshold

    q = rng.uniform(0.0, 0.95) * opo_threshold(cfg)
    import dataclasses

    return dataclasses.replace(cfg, q=q)
