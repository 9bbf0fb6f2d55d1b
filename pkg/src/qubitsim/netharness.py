"""Two-party execution of the reduced Bell protocol over TCP.

A referee connects to a Bob service and an Alice service.  Both parties
derive the shared noise of round ``k`` from the session seed, so the only
data crossing from Bob to Alice is the one-byte ``BOB_BIT`` frame the
referee relays.  Alice holds no connection to Bob.

Frame layout (little-endian)::

    kind: u8 | round: u64 | length: u16 | payload[length]

Session order::

    referee -> both   INIT(0, seed:u64)
    per round k:
      referee -> Bob    SETTING(k, v0: 3 x f64)
      Bob -> referee    BOB_BIT(k, r) ; OUTCOME(k, s0)
      referee -> Alice  SETTING(k, v1) ; BOB_BIT(k, r)
      Alice -> referee  OUTCOME(k, s1)
    referee -> both   DONE(rounds) ; each party answers DONE(rounds)

Bits are encoded as one byte, 0x01 for +1 and 0x00 for -1.  A party that
receives a malformed or out-of-order frame answers with an ERROR frame
(utf-8 message) and closes the connection.
"""

from __future__ import annotations

import enum
import logging
import math
import socket
import socketserver
import struct
import threading
from dataclasses import dataclass, field

import numpy as np

from qubitsim import _core
from qubitsim.bell import shared_uniforms
from qubitsim.geometry import NORM_TOL, UnitVec3

log = logging.getLogger(__name__)

HEADER = struct.Struct("<BQH")
SEED = struct.Struct("<Q")
VECTOR = struct.Struct("<3d")
NOISE_BLOCK = 4096
DEFAULT_WINDOW = 512


class Kind(enum.IntEnum):
    INIT = 1
    SETTING = 2
    BOB_BIT = 3
    OUTCOME = 4
    DONE = 5
    ERROR = 6


class ProtocolError(Exception):
    """A frame that is malformed or arrives out of order."""


class SessionError(Exception):
    pass


class PartialSessionError(SessionError):
    """The session broke off; ``counts`` and ``triples`` hold the finished rounds."""

    def __init__(self, message, counts, triples):
        super().__init__(message)
        self.counts = counts
        self.triples = triples


@dataclass(frozen=True)
class Frame:
    kind: Kind
    round: int
    payload: bytes = b""

    def encode(self) -> bytes:
        return HEADER.pack(self.kind, self.round, len(self.payload)) + self.payload


def encode_bit(b: int) -> bytes:
    return b"\x01" if b > 0 else b"\x00"


def decode_bit(payload: bytes) -> int:
    if len(payload) != 1 or payload[0] not in (0, 1):
        raise ProtocolError(f"bit payload must be one byte 0x00/0x01, got {payload!r}")
    return 1 if payload[0] else -1


def init_frame(seed: int) -> Frame:
    return Frame(Kind.INIT, 0, SEED.pack(seed))


def setting_frame(round_index: int, v: UnitVec3) -> Frame:
    return Frame(Kind.SETTING, round_index, VECTOR.pack(v.x, v.y, v.z))


def decode_setting(payload: bytes) -> np.ndarray:
    if len(payload) != VECTOR.size:
        raise ProtocolError(f"SETTING payload must be {VECTOR.size} bytes, got {len(payload)}")
    v = np.array(VECTOR.unpack(payload))
    if not np.all(np.isfinite(v)) or abs(math.sqrt(float(v @ v)) - 1.0) > NORM_TOL:
        raise ProtocolError("SETTING vector is not a finite unit vector")
    return v


def read_exact(stream, size: int) -> bytes:
    data = stream.read(size)
    if data is None or len(data) < size:
        raise ConnectionError("connection closed mid-frame" if data else "connection closed")
    return data


def read_frame(stream) -> Frame:
    head = read_exact(stream, HEADER.size)
    kind, rnd, length = HEADER.unpack(head)
    payload = read_exact(stream, length) if length else b""
    try:
        kind = Kind(kind)
    except ValueError:
        raise ProtocolError(f"unknown frame kind {kind}") from None
    return Frame(kind, rnd, payload)


class _NoiseCache:
    """Shared-noise rows for a session, generated a block at a time."""

    def __init__(self, seed: int, block: int = NOISE_BLOCK):
        self.seed = seed
        self.block = block
        self._start = -1
        self._rows = None

    def row(self, k: int) -> np.ndarray:
        start = k - k % self.block
        if start != self._start:
            self._rows = shared_uniforms(self.seed, start, self.block)
            self._start = start
        i = k - start
        return self._rows[i : i + 1]


class Party:
    """Protocol state machine for one session of Bob or Alice.

    ``handle`` consumes a frame and returns the frames to send back; it
    raises ``ProtocolError`` on anything the protocol does not allow.
    """

    def __init__(self, role: str, backend: str | None = None):
        if role not in ("bob", "alice"):
            raise ValueError(f"role must be 'bob' or 'alice', got {role!r}")
        self.role = role
        self.kernels = _core.get_backend(backend) if backend else _core.kernels
        self.noise: _NoiseCache | None = None
        self.last_round = -1
        self.pending: tuple[int, np.ndarray] | None = None
        self.done = False

    def handle(self, frame: Frame) -> list[Frame]:
        if self.done:
            raise ProtocolError(f"{frame.kind.name} after DONE")
        if frame.kind == Kind.INIT:
            if self.noise is not None:
                raise ProtocolError("duplicate INIT")
            if len(frame.payload) != SEED.size:
                raise ProtocolError(f"INIT payload must be {SEED.size} bytes")
            self.noise = _NoiseCache(SEED.unpack(frame.payload)[0])
            return []
        if self.noise is None:
            raise ProtocolError(f"{frame.kind.name} before INIT")
        if frame.kind == Kind.SETTING:
            return self._setting(frame)
        if frame.kind == Kind.BOB_BIT and self.role == "alice":
            return self._bob_bit(frame)
        if frame.kind == Kind.DONE:
            if self.pending is not None:
                raise ProtocolError(f"DONE while round {self.pending[0]} awaits BOB_BIT")
            self.done = True
            return [Frame(Kind.DONE, frame.round)]
        raise ProtocolError(f"unexpected {frame.kind.name} frame for {self.role}")

    def _setting(self, frame: Frame) -> list[Frame]:
        k = frame.round
        if k <= self.last_round:
            raise ProtocolError(f"SETTING round {k} does not follow round {self.last_round}")
        if self.pending is not None:
            raise ProtocolError(f"SETTING for round {k} while round {self.pending[0]} awaits BOB_BIT")
        v = decode_setting(frame.payload)
        self.last_round = k
        if self.role == "bob":
            r, s0 = self.kernels.bob_reduced_batch(self.noise.row(k), v)
            return [Frame(Kind.BOB_BIT, k, encode_bit(int(r[0]))), Frame(Kind.OUTCOME, k, encode_bit(int(s0[0])))]
        self.pending = (k, v)
        return []

    def _bob_bit(self, frame: Frame) -> list[Frame]:
        if self.pending is None or self.pending[0] != frame.round:
            raise ProtocolError(f"BOB_BIT for round {frame.round} without a matching SETTING")
        r = decode_bit(frame.payload)
        k, v = self.pending
        self.pending = None
        s1 = self.kernels.alice_reduced_batch(self.noise.row(k), np.array([r], dtype=np.int8), v)
        return [Frame(Kind.OUTCOME, k, encode_bit(int(s1[0])))]


def _make_handler(role: str, backend: str | None):
    class Handler(socketserver.StreamRequestHandler):
        def handle(self):
            party = Party(role, backend)
            while not party.done:
                try:
                    frame = read_frame(self.rfile)
                    replies = party.handle(frame)
                except ConnectionError:
                    return
                except ProtocolError as exc:
                    log.warning("%s: protocol error: %s", role, exc)
                    self.wfile.write(Frame(Kind.ERROR, party.last_round + 1, str(exc).encode()[:4096]).encode())
                    return
                if replies:
                    self.wfile.write(b"".join(f.encode() for f in replies))

    return Handler


class PartyServer(socketserver.TCPServer):
    """Sequential (one session at a time) server for one party."""

    allow_reuse_address = True

    def __init__(self, role: str, address=("127.0.0.1", 0), backend: str | None = None):
        self.role = role
        super().__init__(address, _make_handler(role, backend))


def bob_service(address=("127.0.0.1", 0), backend: str | None = None) -> PartyServer:
    return PartyServer("bob", address, backend)


def alice_service(address=("127.0.0.1", 0), backend: str | None = None) -> PartyServer:
    return PartyServer("alice", address, backend)


def start_in_thread(server: PartyServer) -> threading.Thread:
    t = threading.Thread(target=server.serve_forever, name=f"{server.role}-service", daemon=True)
    t.start()
    return t


def parse_endpoint(text: str) -> tuple[str, int]:
    host, sep, port = text.rpartition(":")
    if not sep or not host or not port.isdigit():
        raise ValueError(f"endpoint must look like host:port, got {text!r}")
    return host, int(port)


@dataclass
class SessionResult:
    seed: int
    v0: UnitVec3
    v1: UnitVec3
    rounds: int
    counts: np.ndarray
    triples: list[tuple[int, int, int]] = field(default_factory=list)
    bob_to_alice_payload_bytes: int = 0

    def summary(self) -> dict:
        return {
            "seed": self.seed,
            "v0": [self.v0.x, self.v0.y, self.v0.z],
            "v1": [self.v1.x, self.v1.y, self.v1.z],
            "rounds": self.rounds,
            "counts": {
                f"{a:+d},{b:+d}": int(self.counts[i, j])
                for i, a in enumerate((1, -1))
                for j, b in enumerate((1, -1))
            },
            "bob_to_alice_payload_bytes": self.bob_to_alice_payload_bytes,
        }


class _Peer:
    def __init__(self, name: str, address, timeout: float | None):
        self.name = name
        self.sock = socket.create_connection(address, timeout=timeout)
        self.sock.setsockopt(socket.IPPROTO_TCP, socket.TCP_NODELAY, 1)
        self.rfile = self.sock.makefile("rb")

    def send(self, frames):
        self.sock.sendall(b"".join(f.encode() for f in frames))

    def expect(self, kind: Kind, round_index: int) -> Frame:
        frame = read_frame(self.rfile)
        if frame.kind == Kind.ERROR:
            raise SessionError(f"{self.name} reported error: {frame.payload.decode(errors='replace')}")
        if frame.kind != kind or frame.round != round_index:
            raise SessionError(
                f"{self.name} sent {frame.kind.name} for round {frame.round}, expected {kind.name} for round {round_index}"
            )
        return frame

    def close(self):
        try:
            self.rfile.close()
        finally:
            self.sock.close()


def referee_session(
    v0: UnitVec3,
    v1: UnitVec3,
    rounds: int,
    seed: int,
    bob_address,
    alice_address,
    window: int = DEFAULT_WINDOW,
    timeout: float | None = 30.0,
) -> SessionResult:
    """Drive one session and aggregate the joint ``(s0, s1)`` counts.

    Rounds are pipelined ``window`` at a time; within a round Alice always
    receives SETTING before the relayed BOB_BIT.
    """
    if rounds < 0:
        raise ValueError("rounds must be >= 0")
    counts = np.zeros((2, 2), dtype=np.int64)
    triples: list[tuple[int, int, int]] = []
    relayed = 0
    bob = alice = None
    try:
        bob = _Peer("bob", bob_address, timeout)
        alice = _Peer("alice", alice_address, timeout)
        bob.send([init_frame(seed)])
        alice.send([init_frame(seed)])
        for start in range(0, rounds, window):
            ks = range(start, min(rounds, start + window))
            bob.send([setting_frame(k, v0) for k in ks])
            bits = []
            for k in ks:
                bit = bob.expect(Kind.BOB_BIT, k)
                s0 = decode_bit(bob.expect(Kind.OUTCOME, k).payload)
                bits.append((bit, s0))
            out = []
            for k, (bit, _) in zip(ks, bits):
                out.append(setting_frame(k, v1))
                out.append(Frame(Kind.BOB_BIT, k, bit.payload))
                relayed += len(bit.payload)
            alice.send(out)
            for k, (bit, s0) in zip(ks, bits):
                s1 = decode_bit(alice.expect(Kind.OUTCOME, k).payload)
                counts[0 if s0 > 0 else 1, 0 if s1 > 0 else 1] += 1
                triples.append((decode_bit(bit.payload), s0, s1))
        bob.send([Frame(Kind.DONE, rounds)])
        alice.send([Frame(Kind.DONE, rounds)])
        bob.expect(Kind.DONE, rounds)
        alice.expect(Kind.DONE, rounds)
    except (ConnectionError, socket.timeout, OSError) as exc:
        raise PartialSessionError(f"connection lost after {len(triples)} rounds: {exc}", counts, triples) from exc
    except ProtocolError as exc:
        raise SessionError(str(exc)) from exc
    finally:
        for peer in (bob, alice):
            if peer is not None:
                peer.close()
    if relayed != rounds:
        raise SessionError(f"Bob->Alice payload was {relayed} bytes for {rounds} rounds")
    return SessionResult(seed, v0, v1, rounds, counts, triples, relayed)
