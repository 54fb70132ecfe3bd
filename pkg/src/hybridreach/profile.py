"""Driving profiles: ordered links with a length and a constant speed."""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass
from pathlib import Path
from typing import IO, Union

from hybridreach.errors import ParseError, ValidationError

HEADER = ("k", "d_m", "sigma_mps")


@dataclass(frozen=True)
class ProfileLink:
    """One route link between nodes ``index - 1`` and ``index``.

    Args:
        index: 1-based stage number.
        distance_m: Link length in meters.
        speed_mps: Constant speed on the link in m/s.
        source_index: Route link this entry was cut from (differs from
            ``index`` only after sub-stepping).
    """

    index: int
    distance_m: float
    speed_mps: float
    source_index: int = 0

    def __post_init__(self) -> None:
        if not (math.isfinite(self.distance_m) and self.distance_m > 0):
            raise ValidationError(f"link {self.index}: distance must be positive, got {self.distance_m}")
        if not (math.isfinite(self.speed_mps) and self.speed_mps > 0):
            raise ValidationError(f"link {self.index}: speed must be positive, got {self.speed_mps}")
        if self.source_index == 0:
            object.__setattr__(self, "source_index", self.index)

    @property
    def time_s(self) -> float:
        return self.distance_m / self.speed_mps


@dataclass(frozen=True)
class DrivingProfile:
    links: tuple[ProfileLink, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "links", tuple(self.links))
        for expected, link in enumerate(self.links, start=1):
            if link.index != expected:
                raise ValidationError(f"link indices must be contiguous from 1; got {link.index} at position {expected}")

    def __len__(self) -> int:
        return len(self.links)

    @property
    def total_time_s(self) -> float:
        return math.fsum(link.time_s for link in self.links)

    @property
    def total_distance_m(self) -> float:
        return math.fsum(link.distance_m for link in self.links)

    def link_time(self, k: int) -> float:
        """Duration of link ``k`` (1-based) in seconds."""
        if not 1 <= k <= len(self.links):
            raise IndexError(f"link {k} outside 1..{len(self.links)}")
        return self.links[k - 1].time_s

    def times(self) -> list[float]:
        return [link.time_s for link in self.links]

    def cumulative_time(self, k: int) -> float:
        """Elapsed time at node ``k`` (0 at the start node)."""
        return math.fsum(link.time_s for link in self.links[:k])

    def cumulative_distance(self, k: int) -> float:
        return math.fsum(link.distance_m for link in self.links[:k])

    def truncated(self, count: int) -> DrivingProfile:
        return DrivingProfile(self.links[:count])

    def substepped(self, max_step_s: float) -> DrivingProfile:
        """Split every link longer than ``max_step_s`` into equal sub-links.

        Each link is cut into ``ceil(time / max_step_s)`` pieces, so every
        resulting step is at most ``max_step_s``. Sub-links keep the parent's
        speed and remember the parent's index in ``source_index``.
        """
        if not max_step_s > 0:
            raise ValidationError("max step must be positive")
        out: list[ProfileLink] = []
        for link in self.links:
            # tolerance absorbs round-off when time is an exact multiple of the step
            n = max(1, math.ceil(link.time_s / max_step_s - 1e-9))
            for _ in range(n):
                out.append(
                    ProfileLink(len(out) + 1, link.distance_m / n, link.speed_mps, source_index=link.source_index)
                )
        return DrivingProfile(tuple(out))


def constant_profile(count: int, distance_m: float, speed_mps: float) -> DrivingProfile:
    """Profile of ``count`` identical links."""
    if count < 1:
        raise ValidationError(f"stage count must be >= 1, got {count}")
    if not (distance_m > 0 and speed_mps > 0):
        raise ValidationError("distance and speed must be positive")
    return DrivingProfile(tuple(ProfileLink(k, float(distance_m), float(speed_mps)) for k in range(1, count + 1)))


Source = Union[str, Path, IO[str], IO[bytes]]


def _read_text(source: Source) -> str:
    if isinstance(source, (str, Path)):
        return Path(source).read_text(encoding="utf-8")
    data = source.read()
    if isinstance(data, bytes):
        return data.decode("utf-8")
    return data


def load_profile(source: Source) -> DrivingProfile:
    """Parse a ``k,d_m,sigma_mps`` CSV document into a validated profile.

    ``source`` may be a path, a text stream or a byte stream.

    Raises:
        ParseError: Wrong header, wrong column count or non-numeric field;
            the message names the offending line.
        ValidationError: Non-positive distance or speed, or non-contiguous
            indices; the message names the link.
    """
    text = _read_text(source)
    rows = csv.reader(io.StringIO(text))
    try:
        header = next(rows)
    except StopIteration:
        raise ParseError("line 1: empty profile") from None
    if tuple(col.strip() for col in header) != HEADER:
        raise ParseError(f"line 1: expected header {','.join(HEADER)}, got {','.join(header)}")
    links = []
    for lineno, row in enumerate(rows, start=2):
        if not row or all(not cell.strip() for cell in row):
            continue
        if len(row) != 3:
            raise ParseError(f"line {lineno}: expected 3 fields, got {len(row)}")
        try:
            k = int(row[0])
            d = float(row[1])
            s = float(row[2])
        except ValueError as exc:
            raise ParseError(f"line {lineno}: {exc}") from None
        links.append(ProfileLink(k, d, s))
    if not links:
        raise ParseError("profile has no links")
    return DrivingProfile(tuple(links))


def dump_profile(profile: DrivingProfile, target: Union[str, Path, IO[str], None] = None) -> str:
    """Write ``profile`` as CSV; floats use ``repr`` so re-loading is exact."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(HEADER)
    for link in profile.links:
        writer.writerow([link.index, repr(link.distance_m), repr(link.speed_mps)])
    text = buf.getvalue()
    if isinstance(target, (str, Path)):
        Path(target).write_text(text, encoding="utf-8")
    elif target is not None:
        target.write(text)
    return text
