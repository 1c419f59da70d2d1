# app/utils/reports.py
"""JSON rendering with every real written to 17 significant digits."""
import json
import math
from typing import Any

from pydantic import BaseModel

from app.models.schemas import Report


def _float(value: float) -> str:
    if math.isnan(value):
        return '"nan"'
    if math.isinf(value):
        return '"inf"' if value > 0 else '"-inf"'
    return format(value, '.17g')


def _render(value: Any, indent: int) -> str:
    pad = '  ' * (indent + 1)
    end = '  ' * indent
    if isinstance(value, BaseModel):
        value = value.model_dump()
    if isinstance(value, bool) or value is None:
        return json.dumps(value)
    if isinstance(value, float):
        return _float(value)
    if isinstance(value, int):
        return str(value)
    if isinstance(value, str):
        return json.dumps(value)
    if isinstance(value, dict):
        if not value:
            return '{}'
        items = [f"{pad}{json.dumps(str(k))}: {_render(v, indent + 1)}" for k, v in value.items()]
        return '{\n' + ',\n'.join(items) + '\n' + end + '}'
    if isinstance(value, (list, tuple)):
        if not value:
            return '[]'
        if all(isinstance(v, (int, float, str, bool)) or v is None for v in value):
            return '[' + ', '.join(_render(v, indent + 1) for v in value) + ']'
        return '[\n' + ',\n'.join(pad + _render(v, indent + 1) for v in value) + '\n' + end + ']'
    raise TypeError(f"cannot render {type(value).__name__} in a report")


def render_report(report: Report) -> str:
    return _render(report, 0) + '\n'
