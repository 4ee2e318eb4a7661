"""
Named experiment presets for the reproduced tables.

Names: ``table1-loading{1,2}-r{1,25}-n{N}``, ``table3-decay{1,2}-r{1,25}-n{N}``,
``tableb3-loading3-n{N}`` and ``tableb4-b1{neg,pos}-r{1,25}-n{N}`` with
N in {200, 400, 600}; ``r25`` stands for r = 1/25.
"""
from typing import Dict, List, Optional
from config.logging_config import get_logger
from core.exceptions import ConfigError

logger = get_logger('simulation')

PRESET_SIZES = (200, 400, 600)
PRESET_P = 501
RATIOS = {'r1': 1.0, 'r25': 1.0 / 25.0}


def _base(name: str, n: int, beta_spec: dict, loading_spec: dict) -> dict:
    return {
        'name': name,
        'n': n,
        'p': PRESET_P,
        'beta_spec': beta_spec,
        'loading_spec': loading_spec,
    }


def _build_registry() -> Dict[str, dict]:
    registry: Dict[str, dict] = {}
    for n in PRESET_SIZES:
        for tag, r in RATIOS.items():
            for k in (1, 2):
                name = f"table1-loading{k}-{tag}-n{n}"
                registry[name] = _base(name, n, {'kind': 'exact_sparse'}, {'kind': f'loading{k}', 'r': r})
            for decay in (1, 2):
                name = f"table3-decay{decay}-{tag}-n{n}"
                registry[name] = _base(
                    name, n, {'kind': 'decay', 'exponent': float(decay)}, {'kind': 'loading1', 'r': r},
                )
            for sign, b1 in (('neg', -1.0), ('pos', 1.0)):
                name = f"tableb4-b1{sign}-{tag}-n{n}"
                registry[name] = _base(
                    name, n, {'kind': 'exact_sparse_intercept', 'b1': b1}, {'kind': 'loading1', 'r': r},
                )
        name = f"tableb3-loading3-n{n}"
        registry[name] = _base(name, n, {'kind': 'exact_sparse_adversarial'}, {'kind': 'loading3'})
    return registry


PRESETS: Dict[str, dict] = _build_registry()


def list_presets() -> List[str]:
    return sorted(PRESETS)


def preset_config(name: str, p: Optional[int] = None, **overrides) -> dict:
    """Config mapping for ``name`` with optional overrides (e.g. a reduced p for desk runs)."""
    if name not in PRESETS:
        raise ConfigError({'preset': f"unknown preset '{name}'"})
    payload = dict(PRESETS[name])
    if p is not None:
        payload['p'] = p
    payload.update({k: v for k, v in overrides.items() if v is not None})
    logger.debug(f"Preset {name}: n={payload['n']}, p={payload['p']}")
    return payload
