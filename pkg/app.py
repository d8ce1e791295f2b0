import os
import logging
from typing import Any, Dict, Optional

from errors import ConfigError

# Defaults for every tunable of the sampler, the baselines and the CLI.
# Anything passed explicitly on the command line overrides these.
DEFAULT_SETTINGS: Dict[str, Any] = {
    'burn_in': 500,          # sweeps discarded per chain
    'samples': 1000,         # collecting sweeps per chain for the first estimate
    'segment': 100,          # sweeps per active-chain segment
    'segments': 50,          # jumps in one MCE run
    't0': 2.0,               # annealing start temperature
    'cool': 0.99,            # geometric cooling constant
    'iters_per_temp': 50,    # sweeps at each temperature
    't_min': 0.01,           # annealing stops below this temperature
    'em_tol': 1e-7,          # nats
    'em_max_iter': 500,
    'kmeans_max_iter': 300,
    'k_cap': 64,             # hard upper bound on the number of classes (models.K_MAX)
    'sweep_rule': 'exact',   # sampling chains: 'exact' or 'fixed'
    'anneal_rule': 'fixed',  # annealing chains
    'workers': int(os.environ.get("MMLMIX_WORKERS", "1")),
    'log_level': os.environ.get("MMLMIX_LOG_LEVEL", "WARNING"),
}

_logging_configured = False


def load_settings(overrides: Optional[Dict[str, Any]] = None) -> Dict[str, Any]:
    """
    Return a copy of the default settings updated with explicit overrides.

    Args:
        overrides: Mapping of setting name to value; None values are ignored
            so unset CLI options fall through to the defaults.

    Returns:
        dict: The effective settings
    """
    settings = DEFAULT_SETTINGS.copy()
    if overrides:
        unknown = set(overrides) - set(DEFAULT_SETTINGS)
        if unknown:
            raise ConfigError(f"Unknown settings: {', '.join(sorted(unknown))}")
        settings.update({k: v for k, v in overrides.items() if v is not None})
    return settings


def configure_logging(level: Optional[str] = None) -> None:
    """Configure root logging once; keep third-party loggers quiet."""
    global _logging_configured
    level_name = (level or DEFAULT_SETTINGS['log_level']).upper()
    if not _logging_configured:
        logging.basicConfig(
            level=logging.WARNING,
            format="%(asctime)s %(levelname)s %(name)s: %(message)s",
        )
        logging.getLogger('numexpr').setLevel(logging.WARNING)
        logging.getLogger('urllib3').setLevel(logging.WARNING)
        _logging_configured = True
    logging.getLogger().setLevel(getattr(logging, level_name, logging.WARNING))
