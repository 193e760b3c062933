import struct

import numpy as np
import pytest

from stencilpipe.transport import (HEADER_SIZE, MAGIC, LoopbackWorld,
                                   MessageHeader, TransportError,
                                   decode_message, encode_message, spawn_world)


def test_header_layout():
    header = MessageHeader(sweep=3, phase=1, side=0, depth=4, payload_len=16)
    raw = encode_message(header, np.array([1.0, 2.0]))
    assert len(raw) == HEADER_SIZE + 16
    magic, sweep, phase, side, depth, plen = struct.unpack_from("<IIBBHQ", raw)
    assert (magic, sweep, phase, side, depth, plen) == (MAGIC, 3, 1, 0, 4, 16)
    # payload is little-endian f64, x fastest
    assert raw[HEADER_SIZE:] == struct.pack("<2d", 1.0, 2.0)


def test_encode_decode_round_trip():
    payload = np.linspace(-1.0, 1.0, 37)
    header = MessageHeader(sweep=9, phase=2, side=1, depth=2,
                           payload_len=payload.nbytes)
    got_header, got_payload = decode_message(encode_message(header, payload))
    assert got_header == header
    assert np.array_equal(got_payload, payload)
    assert got_payload.dtype == np.dtype("<f8")


def test_decode_rejects_bad_magic():
    header = MessageHeader(0, 0, 0, 1, 8)
    raw = bytearray(encode_message(header, np.array([0.5])))
    raw[0] ^= 0xFF
    with pytest.raises(TransportError):
        decode_message(bytes(raw))


def test_decode_rejects_truncation():
    header = MessageHeader(0, 0, 0, 1, 16)
    raw = encode_message(header, np.array([0.5, 1.5]))
    with pytest.raises(TransportError):
        decode_message(raw[:10])
    with pytest.raises(TransportError):
        decode_message(raw[:-4])


def test_encode_rejects_wrong_length():
    with pytest.raises(TransportError):
        encode_message(MessageHeader(0, 0, 0, 1, 9), np.array([0.5]))


def test_loopback_fifo_order():
    world = LoopbackWorld(2)
    a = world.endpoint(0)
    b = world.endpoint(1)
    for sweep in range(5):
        h = MessageHeader(sweep, 0, 0, 1, 8)
        a.send(1, h, np.array([float(sweep)]))
    for sweep in range(5):
        h = MessageHeader(sweep, 0, 0, 1, 8)
        assert b.recv(0, h)[0] == float(sweep)


def test_recv_validates_header():
    world = LoopbackWorld(2)
    world.endpoint(0).send(1, MessageHeader(0, 0, 0, 1, 8), np.array([1.0]))
    with pytest.raises(TransportError):
        world.endpoint(1).recv(0, MessageHeader(0, 0, 1, 1, 8))


def test_no_self_channel():
    world = LoopbackWorld(2)
    with pytest.raises(TransportError):
        world.channel(0, 0)


def test_spawn_world_single_rank():
    assert spawn_world(1, lambda rank, ep: rank + 10) == [10]
    with pytest.raises(ValueError):
        spawn_world(0, lambda rank, ep: None)


def test_spawn_world_ping_pong():
    rounds = 200

    def program(rank, ep):
        peer = 1 - rank
        total = 0.0
        for r in range(rounds):
            h = MessageHeader(r, 0, rank, 1, 8)
            if rank == 0:
                ep.send(peer, h, np.array([float(r)]))
                total += ep.recv(peer, MessageHeader(r, 0, peer, 1, 8))[0]
            else:
                got = ep.recv(peer, MessageHeader(r, 0, peer, 1, 8))[0]
                ep.send(peer, h, np.array([got * 2.0]))
                total += got
        return total

    results = spawn_world(2, program)
    assert results[0] == sum(2.0 * r for r in range(rounds))
    assert results[1] == sum(float(r) for r in range(rounds))


def test_spawn_world_reports_lowest_failing_rank():
    def program(rank, ep):
        if rank >= 2:
            raise RuntimeError(f"boom {rank}")
        return rank

    with pytest.raises(TransportError, match="rank 2 failed"):
        spawn_world(4, program)


def test_abort_tears_down_blocked_ranks():
    # rank 1 blocks on a message that never comes; rank 0's failure must
    # abort the world instead of hanging the join
    def program(rank, ep):
        if rank == 0:
            raise RuntimeError("boom")
        ep.recv(0, MessageHeader(0, 0, 0, 1, 8))

    with pytest.raises(TransportError, match="rank 0 failed"):
        spawn_world(2, program)


def test_all_pairs_exchange():
    n = 8

    def program(rank, ep):
        h = MessageHeader(0, 0, 0, 1, 8)
        for peer in range(n):
            if peer != rank:
                ep.send(peer, h, np.array([float(rank)]))
        seen = sorted(ep.recv(peer, h)[0] for peer in range(n) if peer != rank)
        return seen

    for rank, seen in enumerate(spawn_world(n, program)):
        assert seen == [float(p) for p in range(n) if p != rank]
