"""Bit-exact wire formats for the driver daisy chain.

State packet frame:

    offset  size  field
    0       1     header, 0xA5
    1       1     board id
    2       4     cycle counter, uint32 LE
    6       1     joint count k
    7       10*k  per joint: id 1 byte, q float32 LE, v float32 LE
    7+10k   2     CRC-16/CCITT-FALSE over bytes [0, 7+10k), uint16 LE

Law update record:

    0       4     sequence number, uint32 LE
    4       ...   A row-major float32 LE (n x 2n), then b float32 LE (n)

On-wire floats are 32-bit; in-process values are 64-bit, so the codec
quantizes. StatePacket normalizes its values to float32 precision on
construction so that decode(encode(p)) == p holds exactly.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field

import numpy as np

HEADER = 0xA5
_JOINT = struct.Struct("<Bff")
_HEAD = struct.Struct("<BBIB")

MAX_JOINTS = 255
MAX_FRAME_LEN = _HEAD.size + MAX_JOINTS * _JOINT.size + 2


class PacketError(ValueError):
    """Base for all frame decode failures."""


class BadHeaderError(PacketError):
    pass


class BadCrcError(PacketError):
    pass


class TruncatedFrameError(PacketError):
    """Frame shorter or longer than its declared joint count implies."""


_CRC_TABLE = None


def _crc_table():
    global _CRC_TABLE
    if _CRC_TABLE is None:
        table = []
        for byte in range(256):
            crc = byte << 8
            for _ in range(8):
                crc = ((crc << 1) ^ 0x1021 if crc & 0x8000 else crc << 1) & 0xFFFF
            table.append(crc)
        _CRC_TABLE = tuple(table)
    return _CRC_TABLE


def crc16(data: bytes) -> int:
    """CRC-16/CCITT-FALSE: poly 0x1021, init 0xFFFF, no reflection."""
    table = _crc_table()
    crc = 0xFFFF
    for byte in data:
        crc = ((crc << 8) & 0xFFFF) ^ table[((crc >> 8) ^ byte) & 0xFF]
    return crc


def _f32(x) -> float:
    return float(np.float32(x))


@dataclass(frozen=True)
class StatePacket:
    """One board's local joint states as shared around the ring.

    q/v are stored at float32 precision (the wire resolution).
    """

    board_id: int
    cycle: int
    joint_ids: tuple = ()
    q: tuple = ()
    v: tuple = ()
    header: int = HEADER

    def __post_init__(self):
        jid = tuple(int(j) for j in self.joint_ids)
        q = tuple(_f32(x) for x in self.q)
        v = tuple(_f32(x) for x in self.v)
        if not (len(jid) == len(q) == len(v)):
            raise ValueError("joint_ids, q, v must have equal length")
        if len(jid) > MAX_JOINTS:
            raise ValueError("too many joints for one frame")
        if not 0 <= self.board_id <= 0xFF:
            raise ValueError("board_id must fit one byte")
        if not 0 <= self.cycle <= 0xFFFFFFFF:
            raise ValueError("cycle must fit uint32")
        object.__setattr__(self, "joint_ids", jid)
        object.__setattr__(self, "q", q)
        object.__setattr__(self, "v", v)


def encode_packet(p: StatePacket) -> bytes:
    body = bytearray(_HEAD.pack(p.header, p.board_id, p.cycle, len(p.joint_ids)))
    for jid, q, v in zip(p.joint_ids, p.q, p.v):
        body += _JOINT.pack(jid, q, v)
    body += struct.pack("<H", crc16(bytes(body)))
    return bytes(body)


def decode_packet(frame: bytes) -> StatePacket:
    if len(frame) < _HEAD.size + 2:
        raise TruncatedFrameError(f"frame too short: {len(frame)} bytes")
    if frame[0] != HEADER:
        raise BadHeaderError(f"bad header byte 0x{frame[0]:02X}")
    header, board_id, cycle, count = _HEAD.unpack_from(frame, 0)
    expected = _HEAD.size + count * _JOINT.size + 2
    if len(frame) != expected:
        raise TruncatedFrameError(
            f"frame length {len(frame)} != {expected} implied by joint "
            f"count {count}")
    crc_got, = struct.unpack_from("<H", frame, expected - 2)
    if crc_got != crc16(frame[:expected - 2]):
        raise BadCrcError("checksum mismatch")
    joint_ids, q, v = [], [], []
    for k in range(count):
        jid, qk, vk = _JOINT.unpack_from(frame, _HEAD.size + k * _JOINT.size)
        joint_ids.append(jid)
        q.append(qk)
        v.append(vk)
    return StatePacket(board_id=board_id, cycle=cycle,
                       joint_ids=tuple(joint_ids), q=tuple(q), v=tuple(v))


def encode_law_update(seq: int, A, b) -> bytes:
    A = np.ascontiguousarray(A, dtype="<f4")
    b = np.ascontiguousarray(b, dtype="<f4")
    return struct.pack("<I", seq) + A.tobytes() + b.tobytes()


def decode_law_update(data: bytes, n: int):
    """Returns (seq, A, b); A is n x 2n. Raises on size mismatch."""
    expected = 4 + 4 * (n * 2 * n + n)
    if len(data) != expected:
        raise TruncatedFrameError(
            f"law record length {len(data)} != {expected} for n={n}")
    seq, = struct.unpack_from("<I", data, 0)
    flat = np.frombuffer(data, dtype="<f4", offset=4).astype(float)
    A = flat[:n * 2 * n].reshape(n, 2 * n)
    b = flat[n * 2 * n:]
    return seq, A, b
