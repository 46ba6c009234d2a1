"""Checkpointed census runs.

A checkpoint is a directory holding ``journal.jsonl`` plus one ``.npz`` file
per completed shard.  The journal's first line records the configuration and
its hash; each further line records one completed shard (range, file name,
sha256 of the file, and the raw cycles it found).  Shard files are written
to a temporary name and renamed, and their journal line is appended only
afterwards, so a crash leaves at worst an orphan file or a torn final line.
Both are ignored on resume and the affected shard is simply recomputed.
"""

from __future__ import annotations

import hashlib
import json
import logging
import os
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Optional

import numpy as np

from .census import (
    DEFAULT_SHARD_SIZE,
    CensusReport,
    ShardResult,
    compute_shards,
    merge_shards,
    report_from_table,
    shard_bounds,
)
from .errors import ConfigMismatch
from .maps import Caps, MapParams, new_map

log = logging.getLogger(__name__)

JOURNAL = "journal.jsonl"


@dataclass(frozen=True)
class SweepConfig:
    a: int
    b: int
    N: int
    max_steps: int
    max_value: int
    shard_size: int = DEFAULT_SHARD_SIZE
    workers: int = 1
    checkpoint: Optional[str] = None
    format: str = "json"

    def __post_init__(self):
        if self.shard_size < 1:
            raise ValueError("shard_size must be >= 1")
        if self.format not in ("json", "csv"):
            raise ValueError(f"unknown format {self.format!r}")

    @property
    def map(self) -> MapParams:
        return new_map(self.a, self.b)

    @property
    def caps(self) -> Caps:
        return Caps(self.max_steps, self.max_value)

    def identity(self) -> dict:
        """The fields that determine the result; workers and paths do not."""
        return {
            "a": self.a,
            "b": self.b,
            "N": self.N,
            "max_steps": self.max_steps,
            "max_value": str(self.max_value),
            "shard_size": self.shard_size,
        }

    def hash(self) -> str:
        blob = json.dumps(self.identity(), sort_keys=True).encode()
        return hashlib.sha256(blob).hexdigest()


def _sha256(path: Path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as f:
        for chunk in iter(lambda: f.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def _fsync_dir(path: Path) -> None:
    try:
        fd = os.open(path, os.O_RDONLY)
    except OSError:
        return
    try:
        os.fsync(fd)
    except OSError:
        pass
    finally:
        os.close(fd)


def atomic_write(path: Path, data: bytes) -> None:
    path = Path(path)
    tmp = path.with_name(path.name + ".tmp")
    with open(tmp, "wb") as f:
        f.write(data)
        f.flush()
        os.fsync(f.fileno())
    os.replace(tmp, path)
    _fsync_dir(path.parent)


class Checkpoint:
    """Append-only record of completed shards for one configuration."""

    def __init__(self, directory, config: SweepConfig):
        self.dir = Path(directory)
        self.config = config
        self.completed: dict[int, ShardResult] = {}

    @property
    def journal(self) -> Path:
        return self.dir / JOURNAL

    def open(self) -> "Checkpoint":
        """Create the checkpoint, or load it and check it matches the configuration."""
        self.dir.mkdir(parents=True, exist_ok=True)
        if not self.journal.exists() or self.journal.stat().st_size == 0:
            header = {"config": self.config.identity(), "hash": self.config.hash()}
            atomic_write(self.journal, (json.dumps(header, sort_keys=True) + "\n").encode())
            return self
        self._load()
        return self

    def _load(self) -> None:
        raw = self.journal.read_bytes()
        lines = raw.split(b"\n")
        # everything after the last newline is a torn write
        good_len = len(raw) - len(lines[-1])
        try:
            header = json.loads(lines[0])
        except (json.JSONDecodeError, IndexError):
            raise ConfigMismatch(f"unreadable checkpoint header in {self.journal}")
        if header.get("hash") != self.config.hash():
            raise ConfigMismatch(
                f"checkpoint {self.dir} was made for {header.get('config')}, "
                f"not {self.config.identity()}"
            )
        bounds = shard_bounds(self.config.N, self.config.shard_size)
        for line in lines[1:-1]:
            if not line.strip():
                continue
            rec = json.loads(line)
            i = rec["shard"]
            path = self.dir / rec["file"]
            if i >= len(bounds) or tuple(bounds[i]) != (rec["lo"], rec["hi"]):
                raise ConfigMismatch(f"shard record {i} does not match the configured ranges")
            if not path.exists() or _sha256(path) != rec["sha256"]:
                log.warning("shard %d file missing or corrupt; it will be recomputed", i)
                continue
            with np.load(path, allow_pickle=False) as z:
                self.completed[i] = ShardResult(
                    i, rec["lo"], rec["hi"], z["status"], z["ref"], z["steps"],
                    [tuple(c) for c in rec["cycles"]],
                )
        if good_len != len(raw):
            log.warning("dropping torn trailing journal line")
            with open(self.journal, "r+b") as f:
                f.truncate(good_len)

    def record(self, res: ShardResult) -> None:
        name = f"shard_{res.index:06d}.npz"
        path = self.dir / name
        tmp = self.dir / (name + ".tmp")
        with open(tmp, "wb") as f:
            np.savez(f, status=res.status, ref=res.ref, steps=res.steps)
            f.flush()
            os.fsync(f.fileno())
        os.replace(tmp, path)
        rec = {
            "shard": res.index,
            "lo": res.lo,
            "hi": res.hi,
            "file": name,
            "sha256": _sha256(path),
            "cycles": [list(map(int, c)) for c in res.cycles],
        }
        with open(self.journal, "ab") as f:
            f.write((json.dumps(rec, sort_keys=True) + "\n").encode())
            f.flush()
            os.fsync(f.fileno())
        self.completed[res.index] = res


def run_census(config: SweepConfig, stop_after: Optional[int] = None,
               on_done: Optional[Callable[[ShardResult], None]] = None,
               backend: Optional[str] = None) -> Optional[CensusReport]:
    """Run (or resume) a census; returns None when interrupted by ``stop_after``."""
    m, caps = config.map, config.caps
    if config.N < 1:
        raise ValueError("N must be >= 1")
    ckpt = Checkpoint(config.checkpoint, config).open() if config.checkpoint else None
    done = dict(ckpt.completed) if ckpt else {}
    if done:
        log.info("resuming: %d shards already complete", len(done))

    def finished(res: ShardResult) -> None:
        if ckpt is not None:
            ckpt.record(res)
        if on_done is not None:
            on_done(res)

    fresh = compute_shards(m, config.N, caps, config.shard_size, config.workers,
                           skip=done.keys(), on_done=finished, stop_after=stop_after,
                           backend=backend)
    done.update(fresh)
    if len(done) < len(shard_bounds(config.N, config.shard_size)):
        return None
    table = merge_shards(config.N, list(done.values()))
    return report_from_table(m, config.N, caps, table)


def render(report: CensusReport, fmt: str) -> str:
    return report.to_json() if fmt == "json" else report.to_csv()


def write_report(report: CensusReport, path, fmt: str) -> None:
    atomic_write(Path(path), render(report, fmt).encode())


def sweep_maps(maps: list[MapParams], N: int, caps: Caps, out_dir, *, shard_size: int = DEFAULT_SHARD_SIZE,
               workers: int = 1, fmt: str = "json", resume: bool = True) -> dict:
    """Census every map into ``out_dir``, one checkpoint and report per map.

    Maps whose report already exists are skipped when ``resume`` is set.
    Returns the summary that is also written to ``summary.json``.
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    rows = []
    for m in maps:
        tag = f"a{m.a}_b{m.b}"
        report_path = out / f"{tag}.{fmt}"
        cfg = SweepConfig(m.a, m.b, N, caps.max_steps, caps.max_value, shard_size, workers,
                          str(out / "checkpoints" / tag), fmt)
        summary_path = out / "checkpoints" / tag / "summary.json"
        if resume and report_path.exists() and summary_path.exists():
            rows.append(json.loads(summary_path.read_text()))
            continue
        report = run_census(cfg)
        write_report(report, report_path, fmt)
        row = {
            "a": m.a,
            "b": m.b,
            "N": N,
            "report": report_path.name,
            "cycles": [[c.omega, c.length] for c in report.cycles],
            "unresolved_count": report.unresolved_count,
        }
        atomic_write(summary_path, (json.dumps(row, sort_keys=True) + "\n").encode())
        rows.append(row)
    summary = {"N": N, "caps": {"max_steps": caps.max_steps, "max_value": caps.max_value}, "maps": rows}
    atomic_write(out / "summary.json", (json.dumps(summary, sort_keys=True, indent=1) + "\n").encode())
    return summary


__all__ = ["SweepConfig", "Checkpoint", "run_census", "render", "write_report", "sweep_maps"]
