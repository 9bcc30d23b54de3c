from __future__ import annotations

import hashlib
import json
import math
import os
import shlex
import subprocess
import tempfile
import threading
from pathlib import Path
from typing import Dict, Optional, Sequence, Union

import numpy as np

from mci.core.config import get_settings
from mci.core.errors import InvalidParameter, NormalizationError, OracleFailure
from mci.core.logging import get_logger
from mci.valuation.base import Valuation
from mci.valuation.feature_set import parse_subset_key, subset_key

logger = get_logger(__name__)

OracleCommand = Union[str, Sequence[str]]


def _normalize_command(command: OracleCommand) -> list[str]:
    if isinstance(command, str):
        args = shlex.split(command)
    else:
        args = [str(part) for part in command]
    if not args:
        raise OracleFailure("Oracle command is empty")
    return args


def default_cache_path(command: OracleCommand, n: int, cache_dir: Optional[Path] = None) -> Path:
    """Cache file named by a digest of the command line and feature count."""
    args = _normalize_command(command)
    digest = hashlib.sha256(json.dumps({"command": args, "n": n}).encode("utf-8")).hexdigest()[:16]
    root = Path(cache_dir) if cache_dir is not None else Path(get_settings().cache_dir)
    return root / f"oracle-{digest}.json"


class OracleValuation(Valuation):
    """
    Valuation delegated to an external program, one process per uncached subset.

    The program receives the subset key on stdin (sorted comma-separated ids,
    an empty line for the empty set) and must print one non-negative decimal.
    Replies persist in a JSON cache keyed by subset so re-runs never re-invoke.
    New replies are written in batches of `flush_every`, after `materialize`, and
    on `flush()` or leaving a `with` block.
    """

    kind = "oracle"
    expensive = True
    flush_every = 256

    def __init__(
        self,
        command: OracleCommand,
        n: int,
        cache_path: Optional[Union[str, Path]] = None,
        *,
        timeout_seconds: Optional[float] = None,
    ) -> None:
        super().__init__(n)
        self.command = _normalize_command(command)
        self.cache_path = Path(cache_path) if cache_path is not None else default_cache_path(self.command, n)
        self.timeout_seconds = timeout_seconds if timeout_seconds is not None else get_settings().oracle_timeout_seconds
        self.invocations = 0
        self.cache_hits = 0
        self.cache_writes = 0
        self._disk: Dict[int, float] = self._load_cache()
        self._pending = 0
        self._disk_lock = threading.Lock()
        self._inflight: Dict[int, threading.Lock] = {}

    def __enter__(self) -> "OracleValuation":
        return self

    def __exit__(self, *exc_info: object) -> None:
        self.flush()

    def _load_cache(self) -> Dict[int, float]:
        if not self.cache_path.exists():
            return {}
        try:
            raw = json.loads(self.cache_path.read_text(encoding="utf-8"))
        except (OSError, json.JSONDecodeError):
            logger.warning("oracle_cache_unreadable", extra={"event": "oracle_cache_unreadable", "path": str(self.cache_path)})
            return {}
        if not isinstance(raw, dict):
            logger.warning("oracle_cache_unreadable", extra={"event": "oracle_cache_unreadable", "path": str(self.cache_path)})
            return {}
        cache: Dict[int, float] = {}
        rejected = []
        for key, val in raw.items():
            try:
                mask = parse_subset_key(key, self.n)
                number = float(val)
            except (InvalidParameter, TypeError, ValueError):
                rejected.append(key)
                continue
            # same acceptance rules as a live reply
            if not math.isfinite(number) or number < 0 or (mask == 0 and abs(number) > 1e-12):
                rejected.append(key)
                continue
            cache[mask] = 0.0 if mask == 0 else number
        if rejected:
            logger.warning(
                "oracle_cache_entries_rejected",
                extra={"event": "oracle_cache_entries_rejected", "path": str(self.cache_path), "keys": rejected[:20],
                       "count": len(rejected)},
            )
        return cache

    def _persist(self) -> None:
        """Rewrite the cache file atomically; caller holds `_disk_lock`."""
        body = json.dumps({subset_key(mask): val for mask, val in sorted(self._disk.items())}, indent=2)
        self.cache_path.parent.mkdir(parents=True, exist_ok=True)
        fd, tmp_name = tempfile.mkstemp(dir=self.cache_path.parent, prefix=".oracle-", suffix=".json")
        with os.fdopen(fd, "w", encoding="utf-8") as handle:
            handle.write(body + "\n")
        os.replace(tmp_name, self.cache_path)
        self.cache_writes += 1
        self._pending = 0

    def flush(self) -> None:
        """Write replies not yet on disk; a no-op when nothing is pending."""
        with self._disk_lock:
            if self._pending:
                self._persist()

    def _materialize(self) -> np.ndarray:
        try:
            return super()._materialize()
        finally:
            self.flush()

    def value_mask(self, mask: int) -> float:
        with self._lock:
            memoized = mask in self._memo
        if memoized:
            with self._disk_lock:
                self.cache_hits += 1
        return super().value_mask(mask)

    def _subset_lock(self, mask: int) -> threading.Lock:
        with self._disk_lock:
            return self._inflight.setdefault(mask, threading.Lock())

    def _evaluate(self, mask: int) -> float:
        # single in-flight query per subset; distinct subsets run concurrently
        with self._subset_lock(mask):
            with self._disk_lock:
                if mask in self._disk:
                    self.cache_hits += 1
                    logger.debug("oracle_cache_hit", extra={"event": "oracle_cache_hit", "subset": subset_key(mask)})
                    return self._disk[mask]
            value = self._invoke(mask)
            with self._disk_lock:
                self._disk[mask] = value
                self._pending += 1
                if self._pending >= self.flush_every:
                    self._persist()
            return value

    def _invoke(self, mask: int) -> float:
        key = subset_key(mask)
        with self._disk_lock:
            self.invocations += 1
        try:
            completed = subprocess.run(
                self.command,
                input=key + "\n",
                capture_output=True,
                text=True,
                timeout=self.timeout_seconds or None,
                check=False,
            )
        except (OSError, subprocess.TimeoutExpired) as exc:
            raise OracleFailure(f"Oracle process failed for subset '{key}': {exc}", context={"subset": key}) from exc
        if completed.returncode != 0:
            raise OracleFailure(
                f"Oracle exited with status {completed.returncode} for subset '{key}'",
                context={"subset": key, "stderr": completed.stderr.strip()[-500:]},
            )
        reply = completed.stdout.strip()
        try:
            value = float(reply.splitlines()[0]) if reply else float("nan")
        except ValueError:
            value = float("nan")
        if not math.isfinite(value):
            raise OracleFailure(f"Oracle reply for subset '{key}' is not a number: {reply[:80]!r}", context={"subset": key})
        if value < 0:
            raise OracleFailure(f"Oracle reply for subset '{key}' is negative ({value})", context={"subset": key})
        if mask == 0:
            if abs(value) > 1e-12:
                raise NormalizationError(f"Oracle value of the empty set must be 0, got {value}")
            value = 0.0
        logger.info("oracle_invoked", extra={"event": "oracle_invoked", "subset": key, "value": value})
        return value


def oracle_valuation(
    command: OracleCommand,
    n: int,
    cache_path: Optional[Union[str, Path]] = None,
    *,
    timeout_seconds: Optional[float] = None,
) -> OracleValuation:
    return OracleValuation(command, n, cache_path, timeout_seconds=timeout_seconds)
