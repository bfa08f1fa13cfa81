"""Output writers: CSV with a config-hash comment line, JSON records."""

from __future__ import annotations

import datetime
import json
import os


def write_csv(path: str, header: list[str], rows, config_hash: str):
    os.makedirs(os.path.dirname(path) or ".", exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(f"# config_hash={config_hash}\n")
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(_fmt(v) for v in row) + "\n")


def _fmt(v) -> str:
    if isinstance(v, float):
        return repr(v)
    return str(v)


def write_json(path: str, payload: dict, config_hash: str,
               timestamp: bool = True):
    os.makedirs(os.path.dirname(path) or ".", exist_ok=True)
    record = dict(payload)
    record["config_hash"] = config_hash
    if timestamp:
        record["timestamp"] = datetime.datetime.now(
            datetime.timezone.utc).isoformat()
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(record, fh, indent=2, sort_keys=True)
        fh.write("\n")


def trajectory_rows(samples):
    """Rows for the population CSV: t, |I|, n_branch, n_branch_neg, K."""
    return [(sp.t, sp.n_alive, sp.n_branch, sp.n_branch_neg, sp.K)
            for sp in samples]
