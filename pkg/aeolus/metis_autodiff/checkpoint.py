"""
Parameter Checkpoint Module

Reads and writes BOFP parameter files: the magic b"BOFP", a u32 version (1), a u32 tensor count,
then for every tensor a u32 rank, u32 dims and the values as little-endian float64. All integers
are little-endian. A write followed by a read returns bit-identical arrays.

Functions:
    save_tensors(): Write a list of arrays to a BOFP file.
    load_tensors(): Read a BOFP file back into a list of arrays.
    encode_tensors(): The BOFP byte encoding of a list of arrays.
    decode_tensors(): Parse BOFP bytes.
"""

from pathlib import Path
from typing import List, Sequence, Union

import numpy as np

from aeolus.errors import BadMagicError, BadVersionError, TruncatedLogError

MAGIC = b"BOFP"
VERSION = 1
_U32 = np.dtype("<u4")
_F64 = np.dtype("<f8")


def encode_tensors(arrays: Sequence[np.ndarray]) -> bytes:
    """Return the BOFP byte encoding of `arrays`."""
    chunks = [MAGIC, np.array([VERSION, len(arrays)], dtype=_U32).tobytes()]
    for array in arrays:
        array = np.asarray(array, dtype=np.float64)
        chunks.append(np.array([array.ndim, *array.shape], dtype=_U32).tobytes())
        chunks.append(np.ascontiguousarray(array, dtype=_F64).tobytes())
    return b"".join(chunks)


def decode_tensors(payload: bytes) -> List[np.ndarray]:
    """Parse BOFP bytes.

    Raises:
        BadMagicError: If the payload does not start with b"BOFP".
        BadVersionError: If the version is not 1.
        TruncatedLogError: If the payload ends inside a tensor; `record_index` is that tensor.

    Returns:
        List[np.ndarray]: The stored arrays, float64, in file order.
    """
    if payload[:4] != MAGIC:
        raise BadMagicError(f"Expected parameter magic {MAGIC!r}, found {payload[:4]!r}")
    offset = 4

    def read_u32(count: int, index: int) -> np.ndarray:
        nonlocal offset
        end = offset + 4 * count
        if end > len(payload):
            raise TruncatedLogError(
                f"Parameter file ends inside tensor {index} at byte {offset}",
                record_index=index,
                byte_offset=offset,
            )
        values = np.frombuffer(payload, dtype=_U32, count=count, offset=offset)
        offset = end
        return values

    version, count = (int(v) for v in read_u32(2, -1))
    if version != VERSION:
        raise BadVersionError(f"Parameter file version={version}, only version={VERSION} is supported")
    arrays = []
    for index in range(count):
        start = offset
        rank = int(read_u32(1, index)[0])
        dims = tuple(int(d) for d in read_u32(rank, index))
        n_values = int(np.prod(dims, dtype=np.int64))
        end = offset + 8 * n_values
        if end > len(payload):
            raise TruncatedLogError(
                f"Parameter file ends inside tensor {index} (starts at byte {start})",
                record_index=index,
                byte_offset=start,
            )
        values = np.frombuffer(payload, dtype=_F64, count=n_values, offset=offset)
        arrays.append(values.astype(np.float64).reshape(dims))
        offset = end
    return arrays


def save_tensors(path: Union[str, Path], arrays: Sequence[np.ndarray]):
    """Write `arrays` to a BOFP file at `path`, creating parent directories."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_bytes(encode_tensors(arrays))


def load_tensors(path: Union[str, Path]) -> List[np.ndarray]:
    """Read the arrays stored in the BOFP file at `path`."""
    return decode_tensors(Path(path).read_bytes())
