"""CSV artifacts with a '#'-prefixed provenance header."""
from __future__ import annotations

import io
import math

from .. import __version__


def fmt(value) -> str:
    """Numbers with 17 significant digits (exact float round trip); others via str."""
    if isinstance(value, bool):
        return str(int(value))
    if isinstance(value, float):
        if math.isnan(value):
            return "nan"
        return format(value, ".17g")
    if hasattr(value, "dtype"):  # numpy scalars
        return fmt(value.item())
    return str(value)


def header_lines(config) -> list[str]:
    return [
        f"# kuramoto2c {__version__}",
        f"# seed: {config.seed}",
        f"# command: {config.command}",
        f"# config: {config.to_json()}",
    ]


def render(config, columns, rows, extra: dict | None = None) -> str:
    buf = io.StringIO()
    for line in header_lines(config):
        buf.write(line + "\n")
    for key, val in (extra or {}).items():
        buf.write(f"# {key}: {val}\n")
    buf.write(",".join(columns) + "\n")
    for row in rows:
        buf.write(",".join(fmt(v) for v in row) + "\n")
    return buf.getvalue()


def read_header(text: str) -> dict:
    """The '# key: value' lines at the top of an artifact."""
    out = {}
    for line in text.splitlines():
        if not line.startswith("#"):
            break
        body = line[1:].strip()
        if ": " in body:
            key, val = body.split(": ", 1)
            out[key] = val
        else:
            out.setdefault("banner", body)
    return out
