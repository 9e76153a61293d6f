from __future__ import annotations

import json
from pathlib import Path
from typing import Any

import numpy as np
import pandas as pd

from quench_lab.errors import ConfigError


DEFAULT_SEED = 20240601
MASK64 = (1 << 64) - 1


def format_number(value: float | int | None, decimals: int = 4) -> str:
    if pd.isna(value):
        return "-"
    value = float(value)
    if value != 0 and (abs(value) >= 1e6 or abs(value) < 10.0 ** (-decimals)):
        return f"{value:.{decimals}e}"
    return f"{value:,.{decimals}f}"


def print_table(frame: pd.DataFrame, title: str | None = None) -> None:
    if title:
        print(title)
    if frame.empty:
        print("No rows found.")
        return
    print(frame.fillna("-").to_string(index=False))


def splitmix64(value: int) -> int:
    """One step of the splitmix64 finalizer on a 64-bit integer."""
    z = (value + 0x9E3779B97F4A7C15) & MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
    return z ^ (z >> 31)


def derive_seed(seed: int, index: int) -> int:
    """Per-sample seed: ``seed XOR splitmix64(index)``, kept to 64 bits."""
    return (int(seed) ^ splitmix64(int(index))) & MASK64


def sample_rng(seed: int, index: int) -> np.random.Generator:
    return np.random.default_rng(derive_seed(seed, index))


def resolve_output_path(out: str | Path | None, experiment: str, fmt: str) -> Path:
    if out is not None:
        return Path(out)
    return Path("results") / f"{experiment}.{fmt}"


def sibling_path(path: Path, name: str) -> Path:
    """``results/run.csv`` + ``trajectories`` -> ``results/run.trajectories.csv``."""
    return path.with_name(f"{path.stem}.{name}{path.suffix}")


def load_json_document(path: str | Path) -> dict[str, Any]:
    file_path = Path(path)
    if not file_path.exists():
        raise FileNotFoundError(f"Config file not found: {file_path}")
    try:
        payload = json.loads(file_path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{file_path}: invalid JSON at line {exc.lineno}, column {exc.colno}: {exc.msg}") from exc
    if not isinstance(payload, dict):
        raise ConfigError(f"{file_path}: expected a JSON object at the top level")
    return payload
