from __future__ import annotations

import csv
import json
import logging
import os
from pathlib import Path
from typing import Any, Dict, Iterable, List, Optional, Sequence

from almost_prime_lab import TOOL_NAME, __version__
from almost_prime_lab.errors import PreconditionError

logger = logging.getLogger("almost_prime_lab.storage")

# ---------- paths ----------
DATA_DIR = Path.cwd() / "data"


def default_path(name: str) -> Path:
    DATA_DIR.mkdir(parents=True, exist_ok=True)
    return (DATA_DIR / name).resolve()


# ---------- artifacts ----------
def artifact_header(config: Optional[Dict[str, Any]]) -> Dict[str, Any]:
    """Provenance block embedded in every artifact. No timestamp: re-runs must be byte-identical."""
    return {"tool": TOOL_NAME, "version": __version__, "config": config or {}}


def _dumps(payload: Any) -> str:
    return json.dumps(payload, ensure_ascii=False, sort_keys=True, allow_nan=True)


def _atomic_write_text(path: Path, text: str) -> None:
    path = Path(path)
    tmp = path.with_suffix(path.suffix + ".tmp")
    tmp.parent.mkdir(parents=True, exist_ok=True)
    with open(tmp, "w", encoding="utf-8", newline="") as f:
        f.write(text)
    os.replace(tmp, path)


def atomic_write_json(path: Path, result: Any, config: Optional[Dict[str, Any]] = None) -> Path:
    payload = artifact_header(config)
    payload["result"] = result
    _atomic_write_text(path, json.dumps(payload, ensure_ascii=False, sort_keys=True, indent=2) + "\n")
    logger.info("Saved report to %s", path)
    return Path(path)


def atomic_write_jsonl(path: Path, rows: Iterable[Dict[str, Any]], config: Optional[Dict[str, Any]] = None) -> int:
    lines = [_dumps(artifact_header(config))]
    n = 0
    for row in rows:
        lines.append(_dumps(row))
        n += 1
    _atomic_write_text(path, "\n".join(lines) + "\n")
    logger.info("Saved %d records to %s", n, path)
    return n


def atomic_write_csv(
    path: Path,
    columns: Sequence[str],
    rows: Iterable[Sequence[Any]],
    config: Optional[Dict[str, Any]] = None,
) -> int:
    path = Path(path)
    tmp = path.with_suffix(path.suffix + ".tmp")
    tmp.parent.mkdir(parents=True, exist_ok=True)
    n = 0
    with open(tmp, "w", encoding="utf-8", newline="") as f:
        f.write("# " + _dumps(artifact_header(config)) + "\n")
        writer = csv.writer(f)
        writer.writerow(list(columns))
        for row in rows:
            writer.writerow([repr(v) if isinstance(v, float) else v for v in row])
            n += 1
    os.replace(tmp, path)
    logger.info("Saved %d rows to %s", n, path)
    return n


def load_jsonl(path: Path) -> List[Dict[str, Any]]:
    """Records of a JSON-lines artifact, header line dropped."""
    path = Path(path)
    if not path.exists():
        return []
    with open(path, "r", encoding="utf-8") as f:
        rows = [json.loads(line) for line in f if line.strip()]
    if rows and "tool" in rows[0] and "config" in rows[0]:
        rows = rows[1:]
    return rows


def load_config_file(path: Optional[Path]) -> Dict[str, Any]:
    if path is None:
        return {}
    try:
        with open(path, "r", encoding="utf-8") as f:
            data = json.load(f)
    except (OSError, json.JSONDecodeError) as e:
        logger.warning("Failed to load config %s: %s", path, e)
        raise PreconditionError(f"cannot read config file {path}: {e}") from e
    if not isinstance(data, dict):
        logger.warning("Config %s did not contain an object, ignoring.", path)
        return {}
    # artifacts embed their config; accept them directly for re-runs
    if "config" in data and "tool" in data and isinstance(data["config"], dict):
        return data["config"]
    return data
