"""Point-to-point message transport with an in-process loopback world.

Wire format (little-endian throughout):

    magic      u32   0x53464847
    sweep      u32   outer-step counter
    phase      u8    0=x, 1=y, 2=z
    side       u8    0=low face of the sender, 1=high face
    depth      u16   halo layer count
    payload_len u64  bytes of payload
    payload    payload_len bytes of f64 values, row-major (x fastest)

The loopback transport delivers byte-exact messages in FIFO order per
(sender, receiver) channel and runs every rank as a thread of one
process, which keeps multi-rank tests hermetic and deterministic.
"""

from __future__ import annotations

import queue
import struct
import threading
from dataclasses import dataclass

import numpy as np

MAGIC = 0x53464847
_HEADER = struct.Struct("<IIBBHQ")
HEADER_SIZE = _HEADER.size

PHASE_CODES = {"x": 0, "y": 1, "z": 2}


class TransportError(RuntimeError):
    """Protocol violation or peer failure."""


@dataclass(frozen=True)
class MessageHeader:
    sweep: int
    phase: int
    side: int
    depth: int
    payload_len: int


def encode_message(header: MessageHeader, payload: np.ndarray) -> bytes:
    data = np.ascontiguousarray(payload, dtype="<f8").tobytes()
    if header.payload_len != len(data):
        raise TransportError(
            f"payload_len {header.payload_len} != payload bytes {len(data)}")
    return _HEADER.pack(MAGIC, header.sweep, header.phase, header.side,
                        header.depth, header.payload_len) + data


def decode_message(raw: bytes) -> tuple[MessageHeader, np.ndarray]:
    if len(raw) < HEADER_SIZE:
        raise TransportError("truncated message header")
    magic, sweep, phase, side, depth, payload_len = _HEADER.unpack_from(raw)
    if magic != MAGIC:
        raise TransportError(f"bad magic 0x{magic:08X}")
    body = raw[HEADER_SIZE:]
    if len(body) != payload_len:
        raise TransportError(f"payload length {len(body)} != header {payload_len}")
    header = MessageHeader(sweep, phase, side, depth, payload_len)
    return header, np.frombuffer(body, dtype="<f8")


class Endpoint:
    """One rank's handle into the loopback world."""

    _POLL = 0.1  # seconds between abort checks while blocked in recv

    def __init__(self, world: "LoopbackWorld", rank: int):
        self._world = world
        self.rank = rank

    def send(self, peer: int, header: MessageHeader, payload: np.ndarray) -> None:
        self._world.channel(self.rank, peer).put(encode_message(header, payload))

    def recv(self, peer: int, expect: MessageHeader) -> np.ndarray:
        chan = self._world.channel(peer, self.rank)
        while True:
            if self._world.aborted.is_set():
                raise TransportError(f"rank {self.rank}: world aborted while "
                                     f"receiving from {peer}")
            try:
                raw = chan.get(timeout=self._POLL)
                break
            except queue.Empty:
                continue
        header, payload = decode_message(raw)
        if header != expect:
            raise TransportError(
                f"rank {self.rank}: header mismatch from {peer}: "
                f"got {header}, expected {expect}")
        return payload


class LoopbackWorld:
    def __init__(self, n_ranks: int):
        self.n_ranks = n_ranks
        self.aborted = threading.Event()
        self._channels = {(s, r): queue.SimpleQueue()
                          for s in range(n_ranks) for r in range(n_ranks)
                          if s != r}

    def channel(self, sender: int, receiver: int) -> queue.SimpleQueue:
        try:
            return self._channels[(sender, receiver)]
        except KeyError:
            raise TransportError(f"no channel {sender} -> {receiver}") from None

    def endpoint(self, rank: int) -> Endpoint:
        return Endpoint(self, rank)


def spawn_world(n_ranks: int, program):
    """Run ``program(rank, endpoint)`` on every rank concurrently.

    Returns the per-rank results in rank order.  Any rank failure aborts
    the whole world and re-raises with the failing rank attached.
    """
    if n_ranks < 1:
        raise ValueError(f"need at least one rank, got {n_ranks}")
    world = LoopbackWorld(n_ranks)
    results: list = [None] * n_ranks
    failures: list[tuple[int, BaseException]] = []
    lock = threading.Lock()

    def runner(rank: int) -> None:
        try:
            results[rank] = program(rank, world.endpoint(rank))
        except BaseException as exc:  # noqa: BLE001 - collected for the caller
            with lock:
                failures.append((rank, exc))
            world.aborted.set()

    if n_ranks == 1:
        runner(0)
    else:
        threads = [threading.Thread(target=runner, args=(r,),
                                    name=f"rank-{r}", daemon=True)
                   for r in range(n_ranks)]
        for th in threads:
            th.start()
        for th in threads:
            th.join()
    if failures:
        rank, exc = min(failures, key=lambda f: f[0])
        raise TransportError(f"rank {rank} failed: {exc!r}") from exc
    return results
