# app/utils/grids.py
import re
from typing import List

import numpy as np

NUMBER = r'[-+]?(?:\d+\.?\d*|\.\d+)(?:[eE][-+]?\d+)?'
LOG_GRID = re.compile(rf'log:({NUMBER}):({NUMBER}):(\d+)(?::(.+))?$')


def parse_vector(text: str) -> List[float]:
    """Parse a comma-separated vector such as ``0,2`` or ``1e-3, -4``."""
    parts = [part.strip() for part in text.split(',')]
    if not parts or any(not re.fullmatch(NUMBER, part) for part in parts):
        raise ValueError(f"Invalid vector {text!r}; expected comma-separated reals")
    return [float(part) for part in parts]


def _log_points(lo: str, hi: str, count: str) -> np.ndarray:
    lo_value, hi_value, n = float(lo), float(hi), int(count)
    if lo_value <= 0 or hi_value <= lo_value:
        raise ValueError("log grids need 0 < lo < hi")
    if n < 1:
        raise ValueError("log grids need at least one point")
    return np.logspace(np.log10(lo_value), np.log10(hi_value), n)


def parse_x_grid(text: str) -> List[List[float]]:
    """``log:<lo>:<hi>:<count>:<direction>`` -> x = t * direction for log-spaced t."""
    match = LOG_GRID.match(text.strip())
    if not match or match.group(4) is None:
        raise ValueError(f"Invalid x-grid {text!r}; expected log:<lo>:<hi>:<count>:<direction>")
    direction = np.array(parse_vector(match.group(4)))
    return [(t * direction).tolist() for t in _log_points(*match.group(1, 2, 3))]


def parse_t_grid(text: str) -> List[float]:
    """``log:<lo>:<hi>:<count>`` or an explicit comma-separated list."""
    text = text.strip()
    if text.startswith('log:'):
        match = LOG_GRID.match(text)
        if not match or match.group(4) is not None:
            raise ValueError(f"Invalid t-grid {text!r}; expected log:<lo>:<hi>:<count>")
        return _log_points(*match.group(1, 2, 3)).tolist()
    return parse_vector(text)
