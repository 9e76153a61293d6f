#!/usr/bin/env python3
"""Run the project-level quench-lab CLI from this skill."""

from __future__ import annotations

import runpy
import sys
from pathlib import Path


def main() -> None:
    project_root = Path(__file__).resolve().parents[3]
    sys.path.insert(0, str(project_root))
    runpy.run_module("quench_lab.cli", run_name="__main__", alter_sys=True)


if __name__ == "__main__":
    main()
