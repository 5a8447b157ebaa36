"""Bit-level materialization and coded delivery of a placement.

Files become pseudo-random bit strings; each file is split contiguously into
subfiles in canonical subset order, with fractional bit targets resolved by
largest-remainder rounding so the pieces sum exactly to the file length.
Delivery XORs, per nonempty subset, the zero-padded subfiles its members
need; decoding replays each user's cache plus the payloads and compares the
reassembled file bit for bit.
"""

from __future__ import annotations

import base64
import json
from dataclasses import dataclass

import numpy as np

from .model import Placement, SystemConfig
from .subsets import canonical_subsets, subset_index, subset_key

DEFAULT_UNIT_BITS = 2400  # divisible by 2,3,4,6,8: exact splits for small K


def largest_remainder_split(targets, total: int) -> list:
    """Integer sizes summing to `total`, proportional to nonnegative targets.

    Floor each target, then hand out the remaining units by descending
    fractional part (ties go to the earlier entry).
    """
    targets = [max(float(t), 0.0) for t in targets]
    floors = [int(np.floor(t)) for t in targets]
    remaining = total - sum(floors)
    if remaining < 0:
        raise ValueError("floored targets already exceed the total")
    order = sorted(range(len(targets)), key=lambda i: (-(targets[i] - floors[i]), i))
    sizes = list(floors)
    pos = 0
    while remaining > 0:
        sizes[order[pos % len(order)]] += 1
        pos += 1
        remaining -= 1
    return sizes


@dataclass(frozen=True)
class BitCatalog:
    """Materialized files plus the contiguous subfile layout.

    files[l-1] is a 0/1 uint8 array; layout[l-1][si] = (start, length) for
    the subfile of file l on the si-th canonical subset.
    """

    num_users: int
    num_files: int
    unit_bits: int
    files: tuple
    layout: tuple

    def subfile(self, file_index: int, subset: frozenset) -> np.ndarray:
        si = subset_index(self.num_users)[frozenset(subset)]
        start, length = self.layout[file_index - 1][si]
        return self.files[file_index - 1][start : start + length]

    def subfile_bits(self, file_index: int, subset: frozenset) -> int:
        si = subset_index(self.num_users)[frozenset(subset)]
        return self.layout[file_index - 1][si][1]


def materialize(
    cfg: SystemConfig,
    pl: Placement,
    unit_bits: int = DEFAULT_UNIT_BITS,
    seed: int = 0,
) -> BitCatalog:
    """Deterministic pseudo-random bits for every file, split per placement."""
    if pl.num_users != cfg.num_users or pl.num_files != cfg.num_files:
        raise ValueError("placement dimensions do not match the config")
    rng = np.random.default_rng(seed)
    subsets = canonical_subsets(cfg.num_users)
    files = []
    layout = []
    for l in range(1, cfg.num_files + 1):
        total = int(round(cfg.file_lengths[l - 1] * unit_bits))
        bits = rng.integers(0, 2, size=total, dtype=np.uint8)
        bits.setflags(write=False)
        targets = [pl.w[l - 1, si] * unit_bits for si in range(len(subsets))]
        sizes = largest_remainder_split(targets, total)
        spans = []
        start = 0
        for size in sizes:
            spans.append((start, size))
            start += size
        files.append(bits)
        layout.append(tuple(spans))
    return BitCatalog(
        num_users=cfg.num_users,
        num_files=cfg.num_files,
        unit_bits=unit_bits,
        files=tuple(files),
        layout=tuple(layout),
    )


@dataclass(frozen=True)
class Transmission:
    subset: frozenset
    payload: np.ndarray  # 0/1 uint8, length = max constituent length
    constituents: tuple  # ((user, file_index, cached_on_subset, length_bits), ...)

    @property
    def length_bits(self) -> int:
        return int(self.payload.size)


@dataclass(frozen=True)
class TransmissionLog:
    num_users: int
    demand: tuple
    entries: tuple  # transmissions with nonzero payloads, canonical order

    @property
    def total_bits(self) -> int:
        return sum(entry.length_bits for entry in self.entries)

    def entry_for(self, subset: frozenset) -> Transmission | None:
        target = frozenset(subset)
        for entry in self.entries:
            if entry.subset == target:
                return entry
        return None

    def to_json_dict(self, include_payloads: bool = False) -> dict:
        entries = []
        for entry in self.entries:
            record = {
                "S": subset_key(entry.subset),
                "bits": entry.length_bits,
                "constituents": [
                    {"user": user, "file": l, "cached_on": subset_key(s), "bits": bits}
                    for user, l, s, bits in entry.constituents
                ],
            }
            if include_payloads:
                record["payload_b64"] = base64.b64encode(
                    np.packbits(entry.payload).tobytes()
                ).decode("ascii")
            entries.append(record)
        return {
            "demand": list(self.demand),
            "total_bits": self.total_bits,
            "transmissions": entries,
        }

    def to_json(self, include_payloads: bool = False) -> str:
        return json.dumps(self.to_json_dict(include_payloads), indent=2, sort_keys=True)


def _padded_xor(parts, length: int) -> np.ndarray:
    out = np.zeros(length, dtype=np.uint8)
    for part in parts:
        if part.size:
            out[: part.size] ^= part
    return out


def deliver(cat: BitCatalog, demand) -> TransmissionLog:
    """One coded transmission per nonempty subset; empty payloads are skipped
    in the log (they cost zero bits either way)."""
    d = tuple(int(x) for x in demand)
    if len(d) != cat.num_users:
        raise ValueError(f"demand must list {cat.num_users} file indices")
    if any(not 1 <= x <= cat.num_files for x in d):
        raise ValueError(f"demand entries must lie in 1..{cat.num_files}")
    entries = []
    for s in canonical_subsets(cat.num_users):
        if not s:
            continue
        constituents = []
        parts = []
        for user in sorted(s):
            cached_on = s - {user}
            part = cat.subfile(d[user - 1], cached_on)
            parts.append(part)
            constituents.append((user, d[user - 1], cached_on, int(part.size)))
        length = max(part.size for part in parts)
        if length == 0:
            continue
        entries.append(
            Transmission(
                subset=s,
                payload=_padded_xor(parts, length),
                constituents=tuple(constituents),
            )
        )
    return TransmissionLog(num_users=cat.num_users, demand=d, entries=tuple(entries))


@dataclass(frozen=True)
class UserDecode:
    user: int
    ok: bool
    failed_subset: frozenset | None = None
    first_mismatch_bit: int | None = None


@dataclass(frozen=True)
class DecodeReport:
    results: tuple

    @property
    def all_ok(self) -> bool:
        return all(r.ok for r in self.results)

    @property
    def num_ok(self) -> int:
        return sum(1 for r in self.results if r.ok)

    def __str__(self):
        lines = [f"decoded {self.num_ok}/{len(self.results)} users"]
        for r in self.results:
            if not r.ok:
                where = subset_key(r.failed_subset) if r.failed_subset else "?"
                lines.append(
                    f"  user {r.user} failed at S={{{where}}}, first mismatch bit {r.first_mismatch_bit}"
                )
        return "\n".join(lines)


def decode_all(cat: BitCatalog, log: TransmissionLog, demand) -> DecodeReport:
    """Replay every user's decoder and compare files bit-exactly.

    A user recovers the subfile cached on S (k not in S) from the payload for
    S + {k} by XOR-cancelling the other constituents, all of which it holds
    in cache; subfiles with k in S come straight from cache.
    """
    d = tuple(int(x) for x in demand)
    if d != tuple(log.demand):
        raise ValueError("log was produced for a different demand vector")
    subsets = canonical_subsets(cat.num_users)
    payloads = {entry.subset: entry for entry in log.entries}
    results = []
    for user in range(1, cat.num_users + 1):
        want = d[user - 1]
        target_file = cat.files[want - 1]
        recovered = np.zeros(target_file.size, dtype=np.uint8)
        ok = True
        failed_subset = None
        mismatch_bit = None
        for si, s in enumerate(subsets):
            start, length = cat.layout[want - 1][si]
            if length == 0:
                continue
            if user in s:
                piece = cat.subfile(want, s)
            else:
                trans_set = s | {user}
                entry = payloads.get(trans_set)
                if entry is None:
                    # Every constituent was empty, yet the user needs bits.
                    ok = False
                    failed_subset = trans_set
                    mismatch_bit = start
                    break
                acc = entry.payload.copy()
                for other, file_index, cached_on, _bits in entry.constituents:
                    if other == user:
                        continue
                    part = cat.subfile(file_index, cached_on)
                    acc[: part.size] ^= part
                piece = acc[:length]
            recovered[start : start + length] = piece
        if ok:
            diff = np.nonzero(recovered != target_file)[0]
            if diff.size:
                ok = False
                mismatch_bit = int(diff[0])
                failed_subset = _covering_subset(cat, want, int(diff[0]))
        results.append(
            UserDecode(
                user=user, ok=ok, failed_subset=failed_subset, first_mismatch_bit=mismatch_bit
            )
        )
    return DecodeReport(results=tuple(results))


def _covering_subset(cat: BitCatalog, file_index: int, bit: int) -> frozenset | None:
    for si, s in enumerate(canonical_subsets(cat.num_users)):
        start, length = cat.layout[file_index - 1][si]
        if start <= bit < start + length:
            return s
    return None
