from __future__ import annotations

import json
from pathlib import Path
from typing import IO, Any


def write_json(filepath: str | Path, data: dict[str, Any]) -> None:
    path = Path(filepath)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8") as fh:
        dump_json(data, fh)


def dump_json(data: dict[str, Any], fh: IO[str]) -> None:
    # float repr round-trips exactly, so coordinates survive bit for bit
    json.dump(data, fh, ensure_ascii=False, indent=2)
    fh.write("\n")


def read_json(filepath: str | Path) -> dict[str, Any]:
    with open(filepath, "r", encoding="utf-8") as fh:
        return json.load(fh)
