import numpy as np

from nyusim.core import CarrierConfig, link_geometry, params_for
from nyusim.small_scale import SmallScaleConfig, Subpaths, generate_realization


def make_subpaths(delays, powers, phases=None, azimuth_dep=None, elevation_dep=None,
                  azimuth_arr=None, elevation_arr=None) -> Subpaths:
    """Hand-built subpath set; unspecified angles are zero."""
    delays = np.asarray(delays, dtype=float)
    n = delays.size
    zeros = np.zeros(n)

    def col(x):
        return zeros.copy() if x is None else np.asarray(x, dtype=float)

    ph = np.zeros((n, 4)) if phases is None else np.asarray(phases, dtype=float).reshape(n, -1)
    if ph.shape[1] == 1:
        ph = np.hstack([ph, np.zeros((n, 3))])
    return Subpaths(
        cluster=np.ones(n, dtype=int), intra_index=np.arange(1, n + 1), intra_delay=delays - delays.min(),
        delay=delays, power=np.asarray(powers, dtype=float), phases=ph,
        azimuth_dep=col(azimuth_dep), elevation_dep=col(elevation_dep),
        azimuth_arr=col(azimuth_arr), elevation_arr=col(elevation_arr),
        aod_lobe=np.ones(n, dtype=int), aoa_lobe=np.ones(n, dtype=int),
    )


def realize(scenario, condition, f=28.0, seed=0, d=100.0, h_bs=None, path_loss_db=110.0,
            config=None, velocity=(0.0, 0.0, 0.0)):
    h_bs = (35.0 if scenario in ("UMi", "UMa", "RMa") else 3.0) if h_bs is None else h_bs
    geom = link_geometry((0.0, 0.0, h_bs), (d, 0.0, 1.5), velocity)
    params = params_for(scenario, condition, f)
    return generate_realization(scenario, condition, geom, CarrierConfig(f), params,
                                np.random.default_rng(seed), path_loss_db=path_loss_db,
                                config=config or SmallScaleConfig())

