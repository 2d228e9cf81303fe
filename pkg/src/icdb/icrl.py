"""Serial-number allocation and revocation: the freshness oracle.

Serials are drawn from one global, monotonically increasing u64 space.
Revoked serials are stored run-length encoded as inclusive ranges; the
complement (everything allocated and not revoked) is what counts as fresh.

Allocation and revocation require exclusive access (single writer);
`snapshot()` produces an immutable view that readers and worker processes
can consult concurrently.
"""

from __future__ import annotations

import bisect
from dataclasses import dataclass

from .errors import IcrlFileError, IcrlStateError, SerialSpaceExhausted

MAX_SERIAL = (1 << 64) - 1


def _contains(ranges: list[tuple[int, int]] | tuple, serial: int) -> bool:
    idx = bisect.bisect_right(ranges, (serial, MAX_SERIAL)) - 1
    return idx >= 0 and ranges[idx][0] <= serial <= ranges[idx][1]


@dataclass(frozen=True)
class IcrlSnapshot:
    """Immutable view of an Icrl, safe to share across workers."""

    next_serial: int
    revoked_ranges: tuple[tuple[int, int], ...]

    def is_valid(self, serial: int) -> bool:
        return 1 <= serial < self.next_serial and not _contains(
            self.revoked_ranges, serial
        )


class Icrl:
    """Allocator watermark plus revoked-serial registry."""

    def __init__(self):
        self._next = 1
        self._ranges: list[tuple[int, int]] = []

    @property
    def next_serial(self) -> int:
        return self._next

    @property
    def revoked_ranges(self) -> tuple[tuple[int, int], ...]:
        return tuple(self._ranges)

    def allocate(self, n: int) -> list[int]:
        """Hand out `n` consecutive fresh serials and advance the watermark."""
        if n < 1:
            raise IcrlStateError("allocation count must be at least 1")
        if self._next + n - 1 > MAX_SERIAL:
            raise SerialSpaceExhausted("serial allocator exhausted")
        start = self._next
        self._next += n
        return list(range(start, start + n))

    def revoke(self, serials) -> None:
        """Mark serials invalid. Idempotent; unallocated serials are rejected."""
        serials = sorted(set(serials))
        for s in serials:
            if not 1 <= s < self._next:
                raise IcrlStateError(
                    f"cannot revoke serial {s}: not allocated (next={self._next})"
                )
        for s in serials:
            self._insert(s)

    def _insert(self, s: int) -> None:
        ranges = self._ranges
        idx = bisect.bisect_right(ranges, (s, MAX_SERIAL))
        if idx > 0 and ranges[idx - 1][0] <= s <= ranges[idx - 1][1]:
            return
        # Merge with the neighbours when the new serial is adjacent.
        lo, hi = s, s
        if idx > 0 and ranges[idx - 1][1] == s - 1:
            lo = ranges[idx - 1][0]
            idx -= 1
            ranges.pop(idx)
        if idx < len(ranges) and ranges[idx][0] == s + 1:
            hi = ranges[idx][1]
            ranges.pop(idx)
        ranges.insert(idx, (lo, hi))

    def is_valid(self, serial: int) -> bool:
        return 1 <= serial < self._next and not _contains(self._ranges, serial)

    def snapshot(self) -> IcrlSnapshot:
        return IcrlSnapshot(self._next, tuple(self._ranges))

    def __eq__(self, other) -> bool:
        if not isinstance(other, Icrl):
            return NotImplemented
        return self._next == other._next and self._ranges == other._ranges

    def __repr__(self) -> str:
        return f"Icrl(next={self._next}, revoked_ranges={self._ranges!r})"

    def save(self, path) -> None:
        """Write the canonical text form (bit-exact, LF-terminated)."""
        lines = [f"next={self._next}\n"]
        for lo, hi in self._ranges:
            lines.append(f"revoked={lo}\n" if lo == hi else f"revoked={lo}-{hi}\n")
        with open(path, "w", encoding="ascii", newline="") as fh:
            fh.writelines(lines)

    @classmethod
    def load(cls, path) -> "Icrl":
        with open(path, "r", encoding="ascii", newline="") as fh:
            text = fh.read()
        icrl = cls()
        if not text.endswith("\n"):
            raise IcrlFileError("file must end with a newline", line=None)
        seen_next = False
        prev_hi = 0
        for lineno, line in enumerate(text.split("\n")[:-1], start=1):
            if line.startswith("next="):
                if seen_next:
                    raise IcrlFileError("duplicate next= line", line=lineno)
                if lineno != 1:
                    raise IcrlFileError("next= must be the first line", line=lineno)
                icrl._next = _parse_u64(line[5:], lineno)
                if icrl._next < 1:
                    raise IcrlFileError("next serial must be at least 1", line=lineno)
                seen_next = True
            elif line.startswith("revoked="):
                if not seen_next:
                    raise IcrlFileError("revoked= before next=", line=lineno)
                body = line[8:]
                if "-" in body:
                    lo_s, _, hi_s = body.partition("-")
                    lo = _parse_u64(lo_s, lineno)
                    hi = _parse_u64(hi_s, lineno)
                else:
                    lo = hi = _parse_u64(body, lineno)
                if lo > hi:
                    raise IcrlFileError(f"range {lo}-{hi} is inverted", line=lineno)
                if lo <= prev_hi:
                    raise IcrlFileError(
                        "revoked ranges must be ascending and non-overlapping",
                        line=lineno,
                    )
                if hi >= icrl._next:
                    raise IcrlFileError(
                        f"revoked serial {hi} is not below next={icrl._next}",
                        line=lineno,
                    )
                # Adjacent segments collapse so that save() stays canonical.
                if icrl._ranges and lo == prev_hi + 1:
                    icrl._ranges[-1] = (icrl._ranges[-1][0], hi)
                else:
                    icrl._ranges.append((lo, hi))
                prev_hi = hi
            else:
                raise IcrlFileError(f"unrecognized line {line!r}", line=lineno)
        if not seen_next:
            raise IcrlFileError("missing next= line", line=None)
        return icrl


def _parse_u64(text: str, lineno: int) -> int:
    if not text.isdigit():
        raise IcrlFileError(f"expected unsigned integer, found {text!r}", line=lineno)
    value = int(text)
    if value > MAX_SERIAL:
        raise IcrlFileError(f"{value} exceeds the u64 range", line=lineno)
    return value
