"""Tick-level emulation of the daisy-chained motor-driver boards.

Each board owns two joints, evaluates its rows of the active affine law
on the full robot state it assembles from the ring, and recomputes its
torque every ``decimation`` fast ticks (holding it in between).

The ring is unidirectional: a slice published by the board at ring
position j reaches position i after (i - j) mod M hops, each hop
costing ``hop_delay`` fast ticks. Slices are held at float32 (the wire
resolution); byte framing itself lives in wire.py and is not run per
tick.

The emulation is single-threaded and tick-deterministic; identical
inputs produce identical torques.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .dynamics import DimensionMismatch
from .linearize import LinearFeedbackLaw, affine_rows


class LinkFailureError(RuntimeError):
    """A board did not contribute its slice this tick."""


@dataclass(frozen=True)
class BoardConfig:
    board_id: int
    joints: tuple          # exactly 2 owned joint ids
    ring_position: int

    def __post_init__(self):
        object.__setattr__(self, "joints", tuple(int(j) for j in self.joints))
        if len(self.joints) != 2:
            raise ValueError("a board drives exactly 2 joints")


def default_boards(n: int):
    """Boards {0,1}, {2,3}, ... in ring order."""
    if n % 2:
        raise ValueError("joint count must be even")
    return [BoardConfig(board_id=i, joints=(2 * i, 2 * i + 1), ring_position=i)
            for i in range(n // 2)]


class DriverNetwork:
    def __init__(self, boards, n: int, hop_delay: int = 0,
                 decimation: int = 1, drop_prob: float = 0.0,
                 drop_seed: int = 0):
        boards = list(boards)
        owned = [j for b in boards for j in b.joints]
        if sorted(owned) != list(range(n)):
            raise ValueError("board joint ids must partition 0..n-1")
        if sorted(b.ring_position for b in boards) != list(range(len(boards))):
            raise ValueError("ring positions must be a permutation")
        if not (isinstance(decimation, int) and decimation >= 1):
            raise ValueError("decimation must be an integer >= 1")
        if hop_delay < 0:
            raise ValueError("hop_delay must be >= 0")
        if not 0.0 <= drop_prob < 1.0:
            raise ValueError("drop_prob must be in [0, 1)")
        self.boards = boards
        self.n = n
        self.M = len(boards)
        self.hop_delay = hop_delay
        self.decimation = decimation
        self.tick_count = 0
        self._pos = {b.board_id: b.ring_position for b in boards}
        self._by_pos = sorted(boards, key=lambda b: b.ring_position)
        # law state: per-board rows of (A, b) plus the pending full law
        self._active_A = {b.board_id: None for b in boards}
        self._active_b = {b.board_id: None for b in boards}
        self._active_seq = {b.board_id: None for b in boards}
        self._pending = None
        self._held = {b.board_id: np.zeros(2) for b in boards}
        # slice history ring buffer, float32 wire precision
        self._hist_len = (self.M - 1) * hop_delay + 1
        self._hist = np.zeros((self._hist_len, self.M, 2, 2), dtype=np.float32)
        # optional lossy-link emulation: a dropped slice leaves the
        # previous tick's values in place for everyone downstream
        self.drop_prob = float(drop_prob)
        self._drop_rng = (np.random.default_rng(drop_seed)
                          if self.drop_prob > 0.0 else None)

    # -- law staging -------------------------------------------------

    def stage_law(self, law) -> None:
        """Stage a law; it becomes active atomically at the next tick.
        The most recently staged law wins."""
        if isinstance(law, LinearFeedbackLaw):
            seq, A, b = law.seq, law.A, law.b
        else:
            seq, A, b = law
            A = np.asarray(A, dtype=float)
            b = np.asarray(b, dtype=float)
        if A.shape != (self.n, 2 * self.n) or b.shape != (self.n,):
            raise DimensionMismatch(
                f"law dims {A.shape}/{b.shape} do not match n={self.n}")
        self._pending = (int(seq), A.copy(), b.copy())

    def _commit(self) -> None:
        if self._pending is None:
            return
        seq, A, b = self._pending
        for board in self.boards:
            rows = list(board.joints)
            self._active_A[board.board_id] = A[rows, :]
            self._active_b[board.board_id] = b[rows]
            self._active_seq[board.board_id] = seq
        self._pending = None

    def active_sequences(self):
        return [self._active_seq[b.board_id] for b in self.boards]

    def board_rows(self, board_id: int):
        """The (A rows, b entries) the board currently holds."""
        return self._active_A[board_id], self._active_b[board_id]

    # -- state sharing -----------------------------------------------

    def _store_slices(self, local) -> None:
        slot = self._hist[self.tick_count % self._hist_len]
        if self._drop_rng is not None:
            slot[:] = self._hist[(self.tick_count - 1) % self._hist_len]
        for board in self.boards:
            try:
                q2, v2 = local[board.board_id]
            except (KeyError, IndexError):
                raise LinkFailureError(
                    f"board {board.board_id} missing from exchange") from None
            if (self._drop_rng is not None
                    and self._drop_rng.random() < self.drop_prob):
                continue
            slot[board.ring_position, 0, :] = q2
            slot[board.ring_position, 1, :] = v2

    def _assemble(self, receiver_pos: int) -> np.ndarray:
        x = np.empty(2 * self.n)
        for src in self._by_pos:
            age = ((receiver_pos - src.ring_position) % self.M) * self.hop_delay
            idx = (self.tick_count - age) % self._hist_len
            sl = self._hist[idx, src.ring_position]
            for k, j in enumerate(src.joints):
                x[j] = sl[0, k]
                x[self.n + j] = sl[1, k]
        return x

    def ring_exchange(self, local) -> dict:
        """Store this tick's local slices and return every board's
        assembled full state (dict board_id -> length-2n array).

        ``local`` maps board_id -> (q slice, v slice) for its 2 joints.
        """
        self._store_slices(local)
        if self.hop_delay == 0:
            x = self._assemble(0)
            return {b.board_id: x.copy() for b in self.boards}
        return {b.board_id: self._assemble(b.ring_position)
                for b in self.boards}

    # -- fast tick ---------------------------------------------------

    def tick(self, local) -> np.ndarray:
        """One fast tick: commit any staged law, exchange state, and
        return the full torque vector (held values on skipped ticks)."""
        self._commit()
        views = self.ring_exchange(local)
        if self.tick_count % self.decimation == 0:
            for board in self.boards:
                A = self._active_A[board.board_id]
                if A is None:
                    self._held[board.board_id] = np.zeros(2)  # safe default
                else:
                    x = views[board.board_id]
                    self._held[board.board_id] = affine_rows(
                        A, self._active_b[board.board_id], x)
        tau = np.empty(self.n)
        for board in self.boards:
            tau[list(board.joints)] = self._held[board.board_id]
        self.tick_count += 1
        return tau

    def tick_full(self, x) -> np.ndarray:
        """Convenience: tick with slices cut from a full sensed state."""
        local = {b.board_id: (x[list(b.joints)],
                              x[[self.n + j for j in b.joints]])
                 for b in self.boards}
        return self.tick(local)
