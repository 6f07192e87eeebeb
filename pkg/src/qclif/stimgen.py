"""Spike event streams: file formats, Poisson sources, and a synthetic context task.

Text format (UTF-8)::

    # qsnn-events v1 channels=<C> duration=<T>     (optional metadata line)
    timestep,channel
    0,17
    ...

Binary format (little-endian)::

    b"QSNN" | u8 version=1 | u32 channel_count | u64 event_count | event_count x (u32 timestep, u32 channel)

The binary header carries no duration; readers take ``last timestep + 1``.

Random streams come from numpy's Philox4x32-10 counter-based generator
seeded with the 64-bit run seed. Uniforms are drawn row-major, one row of
``channels`` doubles per cycle, and a channel spikes when its draw is below
``p``. Changing this procedure requires bumping ``STREAM_ALGORITHM``.
"""
from __future__ import annotations

import io
import re
import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import InvariantViolation, ParseError, RateOutOfRange

MAGIC = b"QSNN"
FORMAT_VERSION = 1
STREAM_ALGORITHM = "philox4x32-10/row-major-uniform/v1"
_HEADER = struct.Struct("<4sBIQ")
_EVENT_DTYPE = np.dtype([("timestep", "<u4"), ("channel", "<u4")])
_META_RE = re.compile(r"#\s*qsnn-events\s+v(\d+)\s+channels=(\d+)\s+duration=(\d+)\s*$")
_CHUNK_ROWS = 4096


@dataclass(frozen=True, eq=False)
class EventStream:
    timesteps: np.ndarray
    channels: np.ndarray
    channel_count: int
    duration: int

    def __post_init__(self):
        ts = np.asarray(self.timesteps, dtype=np.int64).ravel()
        ch = np.asarray(self.channels, dtype=np.int64).ravel()
        object.__setattr__(self, "timesteps", ts)
        object.__setattr__(self, "channels", ch)
        if ts.shape != ch.shape:
            raise InvariantViolation("timesteps and channels differ in length")
        if self.channel_count < 0 or self.duration < 0:
            raise InvariantViolation("channel_count and duration must be non-negative")
        if ts.size:
            if ts.min() < 0 or ch.min() < 0:
                raise InvariantViolation("negative timestep or channel")
            if np.any(np.diff(ts) < 0):
                i = int(np.flatnonzero(np.diff(ts) < 0)[0]) + 1
                raise InvariantViolation(f"timestep decreases at event {i}")
            if ch.max() >= self.channel_count:
                raise InvariantViolation(f"channel {int(ch.max())} >= channel_count {self.channel_count}")
            if self.duration < ts[-1] + 1:
                raise InvariantViolation(f"duration {self.duration} too short for timestep {int(ts[-1])}")

    def __len__(self):
        return int(self.timesteps.size)

    def __eq__(self, other):
        if not isinstance(other, EventStream):
            return NotImplemented
        return (self.channel_count == other.channel_count and self.duration == other.duration
                and np.array_equal(self.timesteps, other.timesteps)
                and np.array_equal(self.channels, other.channels))

    @property
    def events(self) -> list[tuple[int, int]]:
        return list(zip(self.timesteps.tolist(), self.channels.tolist()))

    @classmethod
    def from_events(cls, events, channel_count: int, duration: int | None = None) -> "EventStream":
        """Build from unordered (timestep, channel) pairs; the result is canonical."""
        arr = np.asarray(list(events), dtype=np.int64).reshape(-1, 2)
        if duration is None:
            duration = int(arr[:, 0].max()) + 1 if arr.size else 0
        return canonicalize_arrays(arr[:, 0], arr[:, 1], channel_count, duration)

    @classmethod
    def from_raster(cls, raster) -> "EventStream":
        r = np.asarray(raster, dtype=bool)
        ts, ch = np.nonzero(r)
        return cls(ts, ch, r.shape[1], r.shape[0])

    def to_raster(self, cycles: int | None = None) -> np.ndarray:
        cycles = self.duration if cycles is None else cycles
        r = np.zeros((cycles, self.channel_count), dtype=bool)
        keep = self.timesteps < cycles
        r[self.timesteps[keep], self.channels[keep]] = True
        return r

    def canonical(self) -> "EventStream":
        return canonicalize_arrays(self.timesteps, self.channels, self.channel_count, self.duration)

    def shifted(self, offset: int, duration: int | None = None) -> "EventStream":
        return EventStream(self.timesteps + offset, self.channels, self.channel_count,
                           (self.duration + offset) if duration is None else duration)


def canonicalize_arrays(ts, ch, channel_count: int, duration: int) -> EventStream:
    """Sort by (timestep, channel) and drop duplicate events."""
    ts = np.asarray(ts, dtype=np.int64)
    ch = np.asarray(ch, dtype=np.int64)
    if ts.size:
        pairs = np.unique(np.stack([ts, ch], axis=1), axis=0)
        ts, ch = pairs[:, 0], pairs[:, 1]
    return EventStream(ts, ch, channel_count, duration)


def concatenate(streams: list[EventStream]) -> EventStream:
    """Place streams back to back in time."""
    if not streams:
        return EventStream(np.zeros(0), np.zeros(0), 0, 0)
    offset, ts, ch = 0, [], []
    width = max(s.channel_count for s in streams)
    for s in streams:
        ts.append(s.timesteps + offset)
        ch.append(s.channels)
        offset += s.duration
    return EventStream(np.concatenate(ts), np.concatenate(ch), width, offset)


# ---------------------------------------------------------------------------
# text format


def dumps_text(stream: EventStream) -> str:
    s = stream.canonical()
    buf = io.StringIO()
    buf.write(f"# qsnn-events v{FORMAT_VERSION} channels={s.channel_count} duration={s.duration}\n")
    buf.write("timestep,channel\n")
    for t, c in zip(s.timesteps.tolist(), s.channels.tolist()):
        buf.write(f"{t},{c}\n")
    return buf.getvalue()


def loads_text(text: str) -> EventStream:
    lines = text.splitlines()
    i = 0
    channel_count = duration = None
    if lines and lines[0].startswith("#"):
        m = _META_RE.match(lines[0])
        if not m:
            raise ParseError("malformed metadata line", offset=1)
        if int(m.group(1)) != FORMAT_VERSION:
            raise ParseError(f"unsupported text format version {m.group(1)}", offset=1)
        channel_count, duration = int(m.group(2)), int(m.group(3))
        i = 1
    if i >= len(lines) or lines[i].strip() != "timestep,channel":
        raise ParseError("missing 'timestep,channel' header", offset=i + 1)
    ts, ch = [], []
    for lineno, line in enumerate(lines[i + 1:], start=i + 2):
        if not line.strip():
            continue
        parts = line.split(",")
        if len(parts) != 2:
            raise ParseError(f"expected 2 fields, got {len(parts)}", offset=lineno)
        try:
            t, c = int(parts[0]), int(parts[1])
        except ValueError:
            raise ParseError(f"non-integer field in {line!r}", offset=lineno) from None
        if ts and t < ts[-1]:
            raise InvariantViolation(f"timestep decreases at line {lineno}")
        ts.append(t)
        ch.append(c)
    if channel_count is None:
        channel_count = max(ch) + 1 if ch else 0
    if duration is None:
        duration = ts[-1] + 1 if ts else 0
    return EventStream(np.array(ts, np.int64), np.array(ch, np.int64), channel_count, duration)


# ---------------------------------------------------------------------------
# binary format


def dumps_binary(stream: EventStream) -> bytes:
    s = stream.canonical()
    if s.channel_count > 0xFFFFFFFF or (len(s) and s.timesteps[-1] > 0xFFFFFFFF):
        raise InvariantViolation("values exceed u32 range of the binary format")
    body = np.empty(len(s), dtype=_EVENT_DTYPE)
    body["timestep"] = s.timesteps
    body["channel"] = s.channels
    return _HEADER.pack(MAGIC, FORMAT_VERSION, s.channel_count, len(s)) + body.tobytes()


def loads_binary(data: bytes) -> EventStream:
    if len(data) < _HEADER.size:
        raise ParseError("truncated header", offset=len(data))
    magic, version, channel_count, count = _HEADER.unpack_from(data)
    if magic != MAGIC:
        raise ParseError(f"bad magic {magic!r}", offset=0)
    if version != FORMAT_VERSION:
        raise ParseError(f"unsupported binary format version {version}", offset=4)
    need = _HEADER.size + count * _EVENT_DTYPE.itemsize
    if len(data) < need:
        raise ParseError(f"truncated event table: need {need} bytes, have {len(data)}", offset=len(data))
    if len(data) > need:
        raise ParseError("trailing bytes after event table", offset=need)
    body = np.frombuffer(data, dtype=_EVENT_DTYPE, count=count, offset=_HEADER.size)
    ts = body["timestep"].astype(np.int64)
    ch = body["channel"].astype(np.int64)
    duration = int(ts[-1]) + 1 if count else 0
    return EventStream(ts, ch, channel_count, duration)


def _is_binary_path(path: Path) -> bool:
    return path.suffix.lower() in (".qsnn", ".bin")


def write_event_stream(stream: EventStream, path) -> None:
    path = Path(path)
    if _is_binary_path(path):
        path.write_bytes(dumps_binary(stream))
    else:
        path.write_text(dumps_text(stream), encoding="utf-8")


def read_event_stream(path) -> EventStream:
    """Read either format; binary is recognised by its magic bytes."""
    data = Path(path).read_bytes()
    if data[:4] == MAGIC:
        return loads_binary(data)
    try:
        text = data.decode("utf-8")
    except UnicodeDecodeError as exc:
        raise ParseError("not UTF-8 text and not a QSNN binary stream", offset=exc.start) from None
    return loads_text(text)


# ---------------------------------------------------------------------------
# generators


def make_rng(seed: int) -> np.random.Generator:
    if not 0 <= seed < 1 << 64:
        raise ValueError("seed must be an unsigned 64-bit value")
    return np.random.Generator(np.random.Philox(seed))


def poisson_raster(rate_hz: float, dt_ms: float, channels: int, duration: int, seed: int | np.random.Generator
                   ) -> np.ndarray:
    """Bernoulli approximation: each (cycle, channel) fires with p = rate * dt."""
    p = rate_hz * dt_ms / 1000.0
    if not 0.0 <= p <= 1.0:
        raise RateOutOfRange(f"rate {rate_hz} Hz at dt {dt_ms} ms gives p={p}")
    rng = seed if isinstance(seed, np.random.Generator) else make_rng(seed)
    out = np.zeros((duration, channels), dtype=bool)
    for start in range(0, duration, _CHUNK_ROWS):
        stop = min(start + _CHUNK_ROWS, duration)
        out[start:stop] = rng.random((stop - start, channels)) < p
    return out


def poisson_stream(rate_hz: float, dt_ms: float, channels: int, duration: int, seed) -> EventStream:
    return EventStream.from_raster(poisson_raster(rate_hz, dt_ms, channels, duration, seed))
