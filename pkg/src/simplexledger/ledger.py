"""Exact first-occurrence ledger over order-k keyword combinations.

Per year, every article's keyword set is expanded into all combinations of
size k+1; a combination is new in year t iff it appears in some year-t
article and never earlier.  New combinations containing a keyword whose
debut year (under the same refinement) is t are classified peripheral, the
rest core.

Deduplication is external: combinations are packed into 64-bit keys, hash
sharded, and each shard keeps sorted run files on disk.  A year-end merge
diffs the year's sorted unique keys against the shard's history, so tallies
are exact at scales far beyond memory, and the result is identical for any
shard count or thread count.  A manifest written after each completed year
allows restart from the last watermark.
"""

from __future__ import annotations

import hashlib
import itertools
import json
import math
import os
import shutil
import tempfile
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Iterable, Iterator

import numpy as np

from simplexledger.corpus import ALL, REFINEMENTS, ArticleRecord, CorpusStore

SPILL_ENV_VAR = "SLEDGER_TMP"

_MANIFEST_NAME = "manifest.json"
_MANIFEST_VERSION = 1
_MIN_MEMORY_BUDGET = 1 << 16
_EMIT_CHUNK = 1 << 18  # keys per emission batch
_RUN_COMPACT_THRESHOLD = 8

# Bits per keyword id in the packed 64-bit key, by combination size.
_ARITY_BITS = {1: 32, 2: 32, 3: 21, 4: 16}


class LedgerError(ValueError):
    """Raised for invalid configuration or unsupported input scale."""


def enumerate_simplices(keywords: Iterable[int], k: int) -> list[tuple[int, ...]]:
    """All sorted (k+1)-combinations of the keyword set, in ascending order.

    Returns an empty list when the set is too small to form any.
    """
    if k < 0:
        raise LedgerError(f"order must be non-negative, got {k}")
    ids = sorted(set(keywords))
    if len(ids) < k + 1:
        return []
    return list(itertools.combinations(ids, k + 1))


def keyword_debut_years(corpus: CorpusStore, refinement: str = ALL) -> dict[int, int]:
    """Earliest year each keyword appears in any article, per refinement."""
    if refinement not in REFINEMENTS:
        raise LedgerError(f"unknown refinement {refinement!r}")
    debut: dict[int, int] = {}
    for year in corpus.years:
        for record in corpus.records_in(year):
            for kid in record.keywords(refinement):
                if kid not in debut:
                    debut[kid] = year
    return debut


@dataclass(frozen=True)
class LedgerConfig:
    k: int = 1
    refinement: str = ALL
    shard_count: int = 1
    memory_budget_bytes: int = 256 << 20
    spill_directory: str | os.PathLike | None = None
    threads: int = 1

    def __post_init__(self) -> None:
        if self.k not in (0, 1, 2, 3):
            raise LedgerError(f"order k must be in 0..3, got {self.k}")
        if self.refinement not in REFINEMENTS:
            raise LedgerError(f"unknown refinement {self.refinement!r}")
        if self.shard_count < 1:
            raise LedgerError("shard_count must be >= 1")
        if self.threads < 1:
            raise LedgerError("threads must be >= 1")
        if self.memory_budget_bytes < _MIN_MEMORY_BUDGET:
            raise LedgerError(
                f"memory_budget_bytes={self.memory_budget_bytes} is below the "
                f"minimum merge frame; need at least {_MIN_MEMORY_BUDGET} "
                "bytes (raise the budget or lower shard_count)"
            )


@dataclass
class LedgerSeries:
    """Per-year novelty tallies for one (order, refinement) pair.

    Years are contiguous from the first to the last corpus year; empty
    years carry zeros so that deltas and rates stay well defined.
    """

    k: int
    refinement: str
    years: list[int] = field(default_factory=list)
    new_simplices: list[int] = field(default_factory=list)
    new_peripheral: list[int] = field(default_factory=list)
    new_keywords: list[int] = field(default_factory=list)
    articles_processed: list[int] = field(default_factory=list)

    @property
    def cum_simplices(self) -> list[int]:
        return list(itertools.accumulate(self.new_simplices))

    @property
    def cum_keywords(self) -> list[int]:
        return list(itertools.accumulate(self.new_keywords))

    @property
    def cum_articles(self) -> list[int]:
        return list(itertools.accumulate(self.articles_processed))

    def row(self, year: int) -> dict[str, int]:
        i = self.years.index(year)
        return {
            "year": year,
            "new_simplices": self.new_simplices[i],
            "new_peripheral": self.new_peripheral[i],
            "new_keywords": self.new_keywords[i],
            "articles_processed": self.articles_processed[i],
            "cum_simplices": self.cum_simplices[i],
            "cum_keywords": self.cum_keywords[i],
        }


# --- packing ---------------------------------------------------------------


def _check_capacity(max_id: int, s: int) -> int:
    bits = _ARITY_BITS[s]
    if max_id >= (1 << bits):
        raise LedgerError(
            f"keyword id {max_id} exceeds the {bits}-bit capacity for "
            f"combinations of size {s}"
        )
    return bits


def _pack(rows: np.ndarray, s: int) -> np.ndarray:
    """Pack (n, s) ascending id rows into sortable uint64 keys."""
    bits = _ARITY_BITS[s]
    keys = rows[:, 0].astype(np.uint64)
    for col in range(1, s):
        keys = (keys << np.uint64(bits)) | rows[:, col].astype(np.uint64)
    return keys


def _unpack(keys: np.ndarray, s: int) -> np.ndarray:
    bits = np.uint64(_ARITY_BITS[s])
    mask = np.uint64((1 << _ARITY_BITS[s]) - 1)
    cols = []
    work = keys.copy()
    for _ in range(s):
        cols.append(work & mask)
        work = work >> bits
    return np.stack(cols[::-1], axis=1)


def _mix64(keys: np.ndarray) -> np.ndarray:
    """splitmix64 finalizer; balances shard assignment."""
    x = keys.copy()
    x ^= x >> np.uint64(30)
    x *= np.uint64(0xBF58476D1CE4E5B9)
    x ^= x >> np.uint64(27)
    x *= np.uint64(0x94D049BB133111EB)
    x ^= x >> np.uint64(31)
    return x


# --- emission --------------------------------------------------------------

_comb_index_cache: dict[tuple[int, int], np.ndarray] = {}


def _comb_indices(m: int, s: int) -> np.ndarray:
    cached = _comb_index_cache.get((m, s))
    if cached is not None:
        return cached
    idx = np.array(list(itertools.combinations(range(m), s)), dtype=np.intp)
    idx = idx.reshape(-1, s)
    if m <= 24:
        _comb_index_cache[(m, s)] = idx
    return idx


def _emit_year_keys(
    records: list[ArticleRecord], refinement: str, s: int
) -> Iterator[np.ndarray]:
    """Packed keys for all size-s combinations of the year's articles.

    Articles are grouped by keyword count so the combination gather is
    vectorized across articles.
    """
    groups: dict[int, list[list[int]]] = {}
    for record in records:
        ids = sorted(record.keywords(refinement))
        if len(ids) >= s:
            groups.setdefault(len(ids), []).append(ids)
    for m in sorted(groups):
        rows = groups[m]
        idx = _comb_indices(m, s)
        per_article = len(idx)
        batch = max(1, _EMIT_CHUNK // max(per_article, 1))
        for start in range(0, len(rows), batch):
            mat = np.array(rows[start : start + batch], dtype=np.uint64)
            combos = mat[:, idx].reshape(-1, s)
            yield _pack(combos, s)


# --- chunked sorted-stream machinery --------------------------------------


def _iter_file(path: Path, chunk_elems: int) -> Iterator[np.ndarray]:
    with open(path, "rb") as f:
        while True:
            arr = np.fromfile(f, dtype=np.uint64, count=chunk_elems)
            if arr.size == 0:
                return
            yield arr


def _merge_streams(
    sources: list[Iterator[np.ndarray]], dedup: bool
) -> Iterator[np.ndarray]:
    """Merge sorted (unique-per-source) chunk streams into one sorted stream.

    Works on the invariant that any value <= the minimum of the buffers'
    last elements is already present in the buffers.
    """
    buffers: list[np.ndarray | None] = []
    iters: list[Iterator[np.ndarray] | None] = []
    for src in sources:
        buffers.append(None)
        iters.append(src)
    n = len(sources)

    def refill(i: int) -> None:
        if iters[i] is None:
            return
        buf = buffers[i]
        if buf is not None and buf.size:
            return
        for chunk in iters[i]:  # type: ignore[union-attr]
            if chunk.size:
                buffers[i] = chunk
                return
        iters[i] = None
        buffers[i] = None

    while True:
        for i in range(n):
            refill(i)
        live = [b for b in buffers if b is not None and b.size]
        if not live:
            return
        boundary = min(int(b[-1]) for b in live)
        parts = []
        for i in range(n):
            buf = buffers[i]
            if buf is None or not buf.size:
                continue
            cut = int(np.searchsorted(buf, np.uint64(boundary), side="right"))
            if cut:
                parts.append(buf[:cut])
                buffers[i] = buf[cut:]
        out = parts[0] if len(parts) == 1 else np.sort(np.concatenate(parts))
        if dedup and out.size > 1:
            keep = np.empty(out.size, dtype=bool)
            keep[0] = True
            np.not_equal(out[1:], out[:-1], out=keep[1:])
            out = out[keep]
        if out.size:
            yield out


def _diff_streams(
    year_iter: Iterator[np.ndarray], hist_iter: Iterator[np.ndarray]
) -> Iterator[np.ndarray]:
    """Elements of the year stream absent from the history stream.

    Both streams are globally sorted and unique.
    """
    ybuf = np.empty(0, dtype=np.uint64)
    hbuf = np.empty(0, dtype=np.uint64)
    y_done = h_done = False
    while True:
        if not ybuf.size and not y_done:
            ybuf = next(year_iter, None)  # type: ignore[assignment]
            if ybuf is None:
                ybuf = np.empty(0, dtype=np.uint64)
                y_done = True
        if not ybuf.size:
            return
        if not hbuf.size and not h_done:
            hbuf = next(hist_iter, None)  # type: ignore[assignment]
            if hbuf is None:
                hbuf = np.empty(0, dtype=np.uint64)
                h_done = True
        if h_done and not hbuf.size:
            yield ybuf
            ybuf = np.empty(0, dtype=np.uint64)
            continue
        boundary = min(int(ybuf[-1]), int(hbuf[-1]))
        ycut = int(np.searchsorted(ybuf, np.uint64(boundary), side="right"))
        hcut = int(np.searchsorted(hbuf, np.uint64(boundary), side="right"))
        ypart, ybuf = ybuf[:ycut], ybuf[ycut:]
        hpart, hbuf = hbuf[:hcut], hbuf[hcut:]
        if ypart.size:
            if hpart.size:
                new = ypart[~np.isin(ypart, hpart, assume_unique=True)]
            else:
                new = ypart
            if new.size:
                yield new


# --- shard state -----------------------------------------------------------


class _Shard:
    """One hash partition: sorted, pairwise-disjoint run files on disk."""

    def __init__(self, directory: Path, chunk_elems: int) -> None:
        self.directory = directory
        self.chunk_elems = chunk_elems
        self.runs: list[str] = []
        self.batch: list[np.ndarray] = []
        self.spills: list[Path] = []
        self._spill_serial = 0
        directory.mkdir(parents=True, exist_ok=True)

    def batch_bytes(self) -> int:
        return sum(a.nbytes for a in self.batch)

    def add(self, keys: np.ndarray) -> None:
        if keys.size:
            self.batch.append(keys)

    def _drain_batch(self) -> np.ndarray:
        if not self.batch:
            return np.empty(0, dtype=np.uint64)
        merged = np.concatenate(self.batch) if len(self.batch) > 1 else self.batch[0]
        self.batch = []
        merged = np.sort(merged)
        if merged.size > 1:
            keep = np.empty(merged.size, dtype=bool)
            keep[0] = True
            np.not_equal(merged[1:], merged[:-1], out=keep[1:])
            merged = merged[keep]
        return merged

    def spill(self) -> None:
        arr = self._drain_batch()
        if not arr.size:
            return
        path = self.directory / f"spill{self._spill_serial:04d}.tmp"
        self._spill_serial += 1
        arr.tofile(path)
        self.spills.append(path)

    def finish_year(
        self, run_name: str, debut_ids: np.ndarray, s: int
    ) -> tuple[int, int]:
        """Diff the year's unique keys against history; append the new run.

        Returns (new_count, new_peripheral_count).
        """
        tail = self._drain_batch()
        sources: list[Iterator[np.ndarray]] = [
            _iter_file(p, self.chunk_elems) for p in self.spills
        ]
        if tail.size:
            sources.append(iter([tail]))
        if not sources:
            return 0, 0
        year_iter = _merge_streams(sources, dedup=True)
        hist_iter = _merge_streams(
            [_iter_file(self.directory / r, self.chunk_elems) for r in self.runs],
            dedup=False,
        )
        new_count = 0
        peripheral = 0
        tmp_path = self.directory / (run_name + ".tmp")
        with open(tmp_path, "wb") as out:
            for chunk in _diff_streams(year_iter, hist_iter):
                new_count += chunk.size
                if debut_ids.size:
                    ids = _unpack(chunk, s)
                    peripheral += int(
                        np.isin(ids, debut_ids, assume_unique=False)
                        .any(axis=1)
                        .sum()
                    )
                chunk.tofile(out)
        for p in self.spills:
            p.unlink(missing_ok=True)
        self.spills = []
        self._spill_serial = 0
        if new_count:
            os.replace(tmp_path, self.directory / run_name)
            self.runs.append(run_name)
        else:
            tmp_path.unlink(missing_ok=True)
        return new_count, peripheral

    def compact(self, run_name: str) -> list[Path]:
        """Merge all runs into a single run file (they are disjoint).

        Old run files are kept on disk and returned so the caller can
        delete them only after the manifest records the new inventory.
        """
        if len(self.runs) < 2:
            return []
        merged_iter = _merge_streams(
            [_iter_file(self.directory / r, self.chunk_elems) for r in self.runs],
            dedup=False,
        )
        tmp_path = self.directory / (run_name + ".tmp")
        with open(tmp_path, "wb") as out:
            for chunk in merged_iter:
                chunk.tofile(out)
        old = [self.directory / r for r in self.runs]
        os.replace(tmp_path, self.directory / run_name)
        self.runs = [run_name]
        return old


# --- manifest --------------------------------------------------------------


def _fingerprint(corpus_digest: str, config: LedgerConfig) -> str:
    payload = json.dumps(
        {"corpus": corpus_digest, "k": config.k, "refinement": config.refinement}
    )
    return hashlib.sha256(payload.encode()).hexdigest()


def _write_manifest(path: Path, payload: dict) -> None:
    tmp = path.with_suffix(".tmp")
    tmp.write_text(json.dumps(payload, indent=1))
    os.replace(tmp, path)


def _load_manifest(path: Path, fingerprint: str) -> dict | None:
    if not path.exists():
        return None
    try:
        payload = json.loads(path.read_text())
    except (OSError, json.JSONDecodeError):
        return None
    if payload.get("version") != _MANIFEST_VERSION:
        return None
    if payload.get("fingerprint") != fingerprint:
        return None
    return payload


# --- tabulate --------------------------------------------------------------


def _resolve_workdir(config: LedgerConfig) -> Path:
    if config.spill_directory is not None:
        return Path(config.spill_directory)
    env = os.environ.get(SPILL_ENV_VAR)
    if env:
        return Path(env)
    return Path(tempfile.mkdtemp(prefix="sledger-"))


def tabulate(
    corpus: CorpusStore,
    config: LedgerConfig,
    progress_callback: Callable[[int], None] | None = None,
) -> LedgerSeries:
    """Sweep years ascending, tallying first occurrences exactly.

    Resumes from the manifest's year watermark when the spill directory
    already holds state for the same corpus and configuration.  The
    optional callback fires after each year is durably committed.
    """
    s = config.k + 1
    series = LedgerSeries(k=config.k, refinement=config.refinement)
    corpus_years = corpus.years
    if not corpus_years:
        return series

    _check_capacity(corpus.max_keyword_id(), s)

    workdir = _resolve_workdir(config)
    ledger_dir = workdir / f"k{config.k}" / config.refinement
    try:
        ledger_dir.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise LedgerError(f"spill directory unwritable: {exc}") from exc

    fingerprint = _fingerprint(corpus.digest(), config)
    manifest_path = ledger_dir / _MANIFEST_NAME
    manifest = _load_manifest(manifest_path, fingerprint)
    if manifest is None or manifest.get("shard_count") != config.shard_count:
        # Fresh start: clear any stale state.
        if ledger_dir.exists():
            shutil.rmtree(ledger_dir)
        ledger_dir.mkdir(parents=True)
        manifest = {
            "version": _MANIFEST_VERSION,
            "fingerprint": fingerprint,
            "shard_count": config.shard_count,
            "watermark": None,
            "runs": {str(i): [] for i in range(config.shard_count)},
            "rows": [],
        }

    chunk_elems = max(
        1024, config.memory_budget_bytes // (8 * 8 * max(config.shard_count, 1))
    )
    shards = [
        _Shard(ledger_dir / f"shard{i:04d}", chunk_elems)
        for i in range(config.shard_count)
    ]
    for i, shard in enumerate(shards):
        shard.runs = list(manifest["runs"][str(i)])
        # Drop files not in the committed inventory (partial year leftovers).
        for p in shard.directory.iterdir():
            if p.name not in shard.runs:
                p.unlink()

    debut = keyword_debut_years(corpus, config.refinement)
    grouped: dict[int, list[int]] = {}
    for kid, year in debut.items():
        grouped.setdefault(year, []).append(kid)
    debut_by_year = {
        y: np.sort(np.array(ids, dtype=np.uint64)) for y, ids in grouped.items()
    }

    rows = list(manifest["rows"])
    watermark = manifest["watermark"]
    all_years = list(range(corpus_years[0], corpus_years[-1] + 1))
    spill_threshold = config.memory_budget_bytes // 2

    for year in all_years:
        if watermark is not None and year <= watermark:
            continue
        records = corpus.records_in(year)
        processed = sum(
            1 for r in records if len(r.keywords(config.refinement)) >= s
        )
        debut_ids = debut_by_year.get(year, np.empty(0, dtype=np.uint64))

        buffered = 0
        for keys in _emit_year_keys(records, config.refinement, s):
            if config.shard_count == 1:
                shards[0].add(keys)
            else:
                sid = _mix64(keys) % np.uint64(config.shard_count)
                for i in range(config.shard_count):
                    shards[i].add(keys[sid == np.uint64(i)])
            buffered += keys.nbytes
            if buffered > spill_threshold:
                for shard in shards:
                    shard.spill()
                buffered = 0

        run_name = f"run{len(rows):04d}.bin"

        def finish(shard: _Shard) -> tuple[int, int]:
            return shard.finish_year(run_name, debut_ids, s)

        if config.threads > 1 and config.shard_count > 1:
            with ThreadPoolExecutor(max_workers=config.threads) as pool:
                results = list(pool.map(finish, shards))
        else:
            results = [finish(shard) for shard in shards]

        new_count = sum(r[0] for r in results)
        peripheral = sum(r[1] for r in results)

        garbage: list[Path] = []
        for shard in shards:
            if len(shard.runs) > _RUN_COMPACT_THRESHOLD:
                garbage.extend(shard.compact(f"run{len(rows):04d}c.bin"))

        rows.append(
            {
                "year": year,
                "new_simplices": new_count,
                "new_peripheral": peripheral,
                "new_keywords": int(debut_ids.size),
                "articles_processed": processed,
            }
        )
        manifest.update(
            watermark=year,
            rows=rows,
            runs={str(i): list(sh.runs) for i, sh in enumerate(shards)},
        )
        _write_manifest(manifest_path, manifest)
        for p in garbage:
            p.unlink(missing_ok=True)
        if progress_callback is not None:
            progress_callback(year)

    for row in rows:
        series.years.append(row["year"])
        series.new_simplices.append(row["new_simplices"])
        series.new_peripheral.append(row["new_peripheral"])
        series.new_keywords.append(row["new_keywords"])
        series.articles_processed.append(row["articles_processed"])
    return series


# --- brute-force oracle ----------------------------------------------------


def oracle_tabulate(
    corpus: CorpusStore,
    k: int,
    refinement: str = ALL,
    guard: int = 10_000_000,
) -> LedgerSeries:
    """Naive in-memory tabulation; the independent check for `tabulate`.

    Refuses corpora whose total emission count exceeds the guard.
    """
    if k not in (0, 1, 2, 3):
        raise LedgerError(f"order k must be in 0..3, got {k}")
    if refinement not in REFINEMENTS:
        raise LedgerError(f"unknown refinement {refinement!r}")
    s = k + 1
    emissions = sum(
        math.comb(len(r.keywords(refinement)), s) for r in corpus.iter_records()
    )
    if emissions > guard:
        raise LedgerError(
            f"corpus would emit {emissions} combinations, over the oracle "
            f"guard of {guard}"
        )
    series = LedgerSeries(k=k, refinement=refinement)
    years = corpus.years
    if not years:
        return series
    seen: set[tuple[int, ...]] = set()
    seen_kw: set[int] = set()
    for year in range(years[0], years[-1] + 1):
        records = corpus.records_in(year)
        debuts = {
            kid
            for r in records
            for kid in r.keywords(refinement)
            if kid not in seen_kw
        }
        year_new: set[tuple[int, ...]] = set()
        processed = 0
        for record in records:
            ids = sorted(record.keywords(refinement))
            if len(ids) < s:
                continue
            processed += 1
            for combo in itertools.combinations(ids, s):
                if combo not in seen:
                    year_new.add(combo)
        peripheral = sum(
            1 for combo in year_new if any(kid in debuts for kid in combo)
        )
        seen.update(year_new)
        seen_kw.update(debuts)
        series.years.append(year)
        series.new_simplices.append(len(year_new))
        series.new_peripheral.append(peripheral)
        series.new_keywords.append(len(debuts))
        series.articles_processed.append(processed)
    return series
