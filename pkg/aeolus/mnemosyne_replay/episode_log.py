"""
Episode Log Module

Reads and writes BOFL episode logs. A log is a 24-byte header (magic b"BOFL", then little-endian
u32 version=1, n_balls, history length H, action dim=9, task code) followed by fixed-size packed
records, one per control step:

    f4 pixels[n_balls][2]   ground-truth ball pixels after the action
    f4 action[9]
    f4 reward
    u1 done
    u4 episode
    u4 step
    f4 observation[obs_dim]
    f4 next_observation[obs_dim]

with obs_dim = n_balls * 2 * H (+2 for the goal-conditioned task). Records are held in memory as
a NumPy structured array with exactly this layout, so writing and reading back is bit-exact.

Classes:
    EpisodeLog: Header plus record array.
    EpisodeLogWriter: Streams whole episodes to a log file.

Functions:
    record_dtype(): The packed record layout for a header.
    write_log(): Write a log file.
    read_log(): Read a log file.
    file_sha256(): Hex SHA-256 of a file's bytes.
"""

import hashlib
import logging
from pathlib import Path
from typing import Iterator, List, Sequence, Union

import numpy as np

from aeolus.boreas_sim.sim_config import EPISODE_LENGTH, N_NOZZLES
from aeolus.boreas_sim.pixel_observer import observation_size
from aeolus.errors import BadMagicError, BadVersionError, DatasetError, LogFormatError, TruncatedLogError
from aeolus.mnemosyne_replay.transition import Transition
from aeolus.themis_tasks.task_spec import TASK_IDS

logger = logging.getLogger(__name__)

MAGIC = b"BOFL"
VERSION = 1
HEADER_SIZE = len(MAGIC) + 5 * 4
REACH_CODE = TASK_IDS.index("reach")


def record_dtype(n_balls: int, history_length: int, task_code: int) -> np.dtype:
    """Packed little-endian record layout for a log header."""
    obs_dim = observation_size(n_balls, history_length, task_code == REACH_CODE)
    return np.dtype([
        ("pixels", "<f4", (n_balls, 2)),
        ("action", "<f4", (N_NOZZLES,)),
        ("reward", "<f4"),
        ("done", "u1"),
        ("episode", "<u4"),
        ("step", "<u4"),
        ("observation", "<f4", (obs_dim,)),
        ("next_observation", "<f4", (obs_dim,)),
    ])


class EpisodeLog:
    """Header plus record array.

    Attributes:
        n_balls (int): Balls per frame.
        history_length (int): Frames per observation.
        task_code (int): Index of the logged task in `TASK_IDS`.
        records (np.ndarray): Structured array with `record_dtype()` layout.

    Methods:
        append_episode(): Add one full episode of transitions.
        episode(): Records of one episode id.
        transitions(): Iterate records as `Transition`s.
    """

    def __init__(self, n_balls: int, history_length: int, task_code: int, records: np.ndarray = None):
        if not 0 <= task_code < len(TASK_IDS):
            raise LogFormatError(f"Unknown task code={task_code} in episode log.")
        self.n_balls = int(n_balls)
        self.history_length = int(history_length)
        self.task_code = int(task_code)
        self.dtype = record_dtype(self.n_balls, self.history_length, self.task_code)
        if records is None:
            records = np.zeros(0, dtype=self.dtype)
        if records.dtype != self.dtype:
            raise LogFormatError(f"Record layout {records.dtype} does not match header layout {self.dtype}")
        self.records = records

    @property
    def task_id(self) -> str:
        return TASK_IDS[self.task_code]

    @property
    def goal_conditioned(self) -> bool:
        return self.task_code == REACH_CODE

    @property
    def n_transitions(self) -> int:
        return len(self.records)

    @property
    def n_episodes(self) -> int:
        return len(self.records) // EPISODE_LENGTH

    def header_values(self) -> List[int]:
        return [VERSION, self.n_balls, self.history_length, N_NOZZLES, self.task_code]

    def transitions_to_records(self, transitions: Sequence[Transition]) -> np.ndarray:
        records = np.zeros(len(transitions), dtype=self.dtype)
        for i, t in enumerate(transitions):
            records[i] = (
                t.pixels, t.action, t.reward, t.done, t.episode, t.step,
                t.observation, t.next_observation,
            )
        return records

    def append_episode(self, transitions: Sequence[Transition]):
        """Add one full episode.

        Raises:
            DatasetError: If the episode is not exactly `EPISODE_LENGTH` steps long.
        """
        if len(transitions) != EPISODE_LENGTH:
            raise DatasetError(f"An episode has {EPISODE_LENGTH} steps, got {len(transitions)}.")
        self.records = np.concatenate([self.records, self.transitions_to_records(transitions)])

    def episode_ids(self) -> np.ndarray:
        """Episode ids in file order."""
        return self.records["episode"][::EPISODE_LENGTH].astype(np.int64)

    def episode(self, episode_id: int) -> np.ndarray:
        """Records of `episode_id`.

        Raises:
            DatasetError: If the log holds no such episode.
        """
        rows = np.flatnonzero(self.records["episode"] == episode_id)
        if rows.size == 0:
            raise DatasetError(f"Episode={episode_id} not found in episode log.")
        return self.records[rows]

    def goals(self, records: np.ndarray = None) -> np.ndarray:
        """Goal pixel of every record (the last two observation entries).

        Raises:
            DatasetError: If the log is not goal-conditioned.
        """
        if not self.goal_conditioned:
            raise DatasetError(f'Episode log of task="{self.task_id}" stores no goals.')
        records = self.records if records is None else records
        return records["observation"][:, -2:].astype(np.float64)

    def transitions(self) -> Iterator[Transition]:
        for r in self.records:
            yield Transition(
                observation=r["observation"].astype(np.float64),
                action=r["action"].astype(np.float64),
                reward=float(r["reward"]),
                next_observation=r["next_observation"].astype(np.float64),
                done=bool(r["done"]),
                pixels=r["pixels"].astype(np.float64),
                episode=int(r["episode"]),
                step=int(r["step"]),
            )

    def copy(self) -> "EpisodeLog":
        return EpisodeLog(self.n_balls, self.history_length, self.task_code, self.records.copy())

    def __eq__(self, other):
        if not isinstance(other, EpisodeLog):
            return False
        return (
            self.header_values() == other.header_values()
            and self.records.tobytes() == other.records.tobytes()
        )

    def __repr__(self):
        return f"EpisodeLog(task={self.task_id}, episodes={self.n_episodes}, transitions={self.n_transitions})"


def _header_bytes(log: EpisodeLog) -> bytes:
    return MAGIC + np.array(log.header_values(), dtype="<u4").tobytes()


def encode_log(log: EpisodeLog) -> bytes:
    if log.n_transitions % EPISODE_LENGTH:
        raise LogFormatError(
            f"Episode log holds {log.n_transitions} records, not a multiple of {EPISODE_LENGTH}."
        )
    return _header_bytes(log) + log.records.tobytes()


def decode_log(payload: bytes) -> EpisodeLog:
    """Parse BOFL bytes.

    Raises:
        BadMagicError: If the payload does not start with b"BOFL".
        BadVersionError: If the version is not 1.
        TruncatedLogError: If the payload ends inside a record or inside an episode; carries the
            index and byte offset of the first incomplete record or episode.
    """
    if payload[:4] != MAGIC:
        raise BadMagicError(f"Expected episode-log magic {MAGIC!r}, found {payload[:4]!r}")
    if len(payload) < HEADER_SIZE:
        raise TruncatedLogError(
            f"Episode log header is {len(payload)} bytes, needs {HEADER_SIZE}", record_index=0, byte_offset=4
        )
    version, n_balls, history_length, action_dim, task_code = (
        int(v) for v in np.frombuffer(payload, dtype="<u4", count=5, offset=4)
    )
    if version != VERSION:
        raise BadVersionError(f"Episode log version={version}, only version={VERSION} is supported")
    if action_dim != N_NOZZLES:
        raise LogFormatError(f"Episode log action_dim={action_dim}, expected {N_NOZZLES}")
    log = EpisodeLog(n_balls, history_length, task_code)
    body = len(payload) - HEADER_SIZE
    n_records, remainder = divmod(body, log.dtype.itemsize)
    if remainder:
        raise TruncatedLogError(
            f"Episode log ends inside record {n_records}",
            record_index=n_records,
            byte_offset=HEADER_SIZE + n_records * log.dtype.itemsize,
        )
    if n_records % EPISODE_LENGTH:
        first_partial = n_records - n_records % EPISODE_LENGTH
        raise TruncatedLogError(
            f"Episode log ends inside the episode starting at record {first_partial}",
            record_index=first_partial,
            byte_offset=HEADER_SIZE + first_partial * log.dtype.itemsize,
        )
    log.records = np.frombuffer(payload, dtype=log.dtype, count=n_records, offset=HEADER_SIZE).copy()
    return log


def write_log(path: Union[str, Path], log: EpisodeLog):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_bytes(encode_log(log))
    logger.debug("Wrote %r to %s", log, path)


def read_log(path: Union[str, Path]) -> EpisodeLog:
    path = Path(path)
    try:
        payload = path.read_bytes()
    except FileNotFoundError:
        raise DatasetError(f'Episode log "{path}" not found') from None
    return decode_log(payload)


def file_sha256(path: Union[str, Path]) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as handle:
        for chunk in iter(lambda: handle.read(1 << 20), b""):
            digest.update(chunk)
    return digest.hexdigest()


class EpisodeLogWriter:
    """Streams whole episodes to a log file; usable as a context manager.

    Each `write_episode()` appends and flushes one episode, so a crashed run leaves a readable log
    of its completed episodes.
    """

    def __init__(self, path: Union[str, Path], n_balls: int, history_length: int, task_code: int):
        self.path = Path(path)
        self.log = EpisodeLog(n_balls, history_length, task_code)
        self.n_episodes = 0
        self.path.parent.mkdir(parents=True, exist_ok=True)
        self._handle = open(self.path, "wb")
        self._handle.write(_header_bytes(self.log))
        self._handle.flush()

    def write_episode(self, transitions: Sequence[Transition]):
        if len(transitions) != EPISODE_LENGTH:
            raise DatasetError(f"An episode has {EPISODE_LENGTH} steps, got {len(transitions)}.")
        self._handle.write(self.log.transitions_to_records(transitions).tobytes())
        self._handle.flush()
        self.n_episodes += 1

    def close(self):
        if not self._handle.closed:
            self._handle.close()

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()
