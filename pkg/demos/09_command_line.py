"""Batch pipeline through the command-line entry point.

Runs every subcommand on the configurations in ``demos/configs`` and
writes results under ``demos/out``.  Equivalent shell usage::

    ksdft1d invert --config demos/configs/invert.json --out demos/out/invert
"""

import json
from pathlib import Path

from ksdft1d.cli import main

here = Path(__file__).parent
for cfg in sorted((here / "configs").glob("*.json")):
    command = cfg.stem.split("_")[0]
    out = here / "out" / cfg.stem
    code = main([command, "--config", str(cfg), "--out", str(out), "--seed", "1"])
    files = [e["file"] for e in json.loads((out / "manifest.json").read_text())["files"]] if code == 0 else []
    print(f"{command:12s} exit {code}  {', '.join(files)}")
