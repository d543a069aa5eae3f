# modules/bal/parser.py
"""Reader and writer for Bundle Adjustment in the Large problem files

Layout: a header "num_cameras num_points num_observations", one
observation per line "camera_index point_index x y", then 9 camera
scalars and 3 point scalars, whitespace separated. Values are read at
binary64; gzip and bzip2 compressed files are detected by magic bytes.
"""
from dataclasses import dataclass
from typing import BinaryIO, List, TextIO, Tuple, Union
import bz2
import gzip
import io
import os

import numpy as np

from core.exceptions import BALFormatError
import logging

logger = logging.getLogger(__name__)

CAMERA_DIMENSION = 9
POINT_DIMENSION = 3

_GZIP_MAGIC = b'\x1f\x8b'
_BZIP2_MAGIC = b'BZh'


@dataclass
class BALProblem:
    camera_indices: np.ndarray   # (n_obs,)
    point_indices: np.ndarray    # (n_obs,)
    observations: np.ndarray     # (n_obs, 2) pixels
    cameras: np.ndarray          # (n_cameras, 9): r1 r2 r3 t1 t2 t3 f k1 k2
    points: np.ndarray           # (n_points, 3)

    @property
    def num_cameras(self) -> int:
        return int(self.cameras.shape[0])

    @property
    def num_points(self) -> int:
        return int(self.points.shape[0])

    @property
    def num_observations(self) -> int:
        return int(self.observations.shape[0])

    def summary(self) -> str:
        return f"{self.num_cameras} cameras, {self.num_points} points, {self.num_observations} observations"


class _TokenReader:
    """Whitespace tokens with the 1-based line each came from"""

    def __init__(self, text: str):
        self.tokens: List[str] = []
        self.lines: List[int] = []
        self.num_lines = 0
        for lineno, line in enumerate(text.splitlines(), start=1):
            self.num_lines = lineno
            for token in line.split():
                self.tokens.append(token)
                self.lines.append(lineno)
        self.position = 0

    def _next(self, what: str):
        if self.position >= len(self.tokens):
            raise BALFormatError(f"unexpected end of file, expected {what}", self.num_lines + 1)
        token, line = self.tokens[self.position], self.lines[self.position]
        self.position += 1
        return token, line

    def read_int(self, what: str) -> Tuple[int, int]:
        token, line = self._next(what)
        try:
            return int(token), line
        except ValueError:
            raise BALFormatError(f"expected integer {what}, got '{token}'", line) from None

    def read_float(self, what: str) -> float:
        token, line = self._next(what)
        try:
            value = float(token)
        except ValueError:
            raise BALFormatError(f"expected number {what}, got '{token}'", line) from None
        if not np.isfinite(value):
            raise BALFormatError(f"non-finite {what}: '{token}'", line)
        return value

    @property
    def exhausted(self) -> bool:
        return self.position >= len(self.tokens)

    def current_line(self) -> int:
        return self.lines[self.position] if not self.exhausted else self.num_lines


def _decode(raw: bytes) -> str:
    if raw.startswith(_GZIP_MAGIC):
        raw = gzip.decompress(raw)
    elif raw.startswith(_BZIP2_MAGIC):
        raw = bz2.decompress(raw)
    return raw.decode('ascii', errors='strict')


def _read_source(source: Union[str, os.PathLike, BinaryIO, TextIO]) -> str:
    if isinstance(source, (str, os.PathLike)):
        with open(source, 'rb') as handle:
            raw = handle.read()
    else:
        raw = source.read()
        if isinstance(raw, str):
            return raw
    try:
        return _decode(raw)
    except UnicodeDecodeError as e:
        raise BALFormatError(f"file is not ASCII text ({e.reason})", 1) from None


def parse_bal_text(text: str) -> BALProblem:
    reader = _TokenReader(text)
    num_cameras, line = reader.read_int("camera count")
    num_points, _ = reader.read_int("point count")
    num_observations, _ = reader.read_int("observation count")
    if min(num_cameras, num_points, num_observations) < 0:
        raise BALFormatError("negative count in header", line)

    camera_indices = np.empty(num_observations, dtype=np.int64)
    point_indices = np.empty(num_observations, dtype=np.int64)
    observations = np.empty((num_observations, 2), dtype=np.float64)
    for i in range(num_observations):
        cam, line = reader.read_int(f"camera index of observation {i}")
        if not 0 <= cam < num_cameras:
            raise BALFormatError(f"camera index {cam} out of range [0, {num_cameras})", line)
        point, line = reader.read_int(f"point index of observation {i}")
        if not 0 <= point < num_points:
            raise BALFormatError(f"point index {point} out of range [0, {num_points})", line)
        camera_indices[i] = cam
        point_indices[i] = point
        observations[i, 0] = reader.read_float(f"x of observation {i}")
        observations[i, 1] = reader.read_float(f"y of observation {i}")

    cameras = np.empty((num_cameras, CAMERA_DIMENSION), dtype=np.float64)
    for i in range(num_cameras):
        for j in range(CAMERA_DIMENSION):
            cameras[i, j] = reader.read_float(f"parameter {j} of camera {i}")

    points = np.empty((num_points, POINT_DIMENSION), dtype=np.float64)
    for i in range(num_points):
        for j in range(POINT_DIMENSION):
            points[i, j] = reader.read_float(f"coordinate {j} of point {i}")

    if not reader.exhausted:
        logger.warning(f"⚠️ Ignoring trailing content from line {reader.current_line()}")
    return BALProblem(camera_indices, point_indices, observations, cameras, points)


def parse_bal(source: Union[str, os.PathLike, BinaryIO, TextIO]) -> BALProblem:
    """Parse a BAL problem from a path or an open stream"""
    problem = parse_bal_text(_read_source(source))
    logger.info(f"📷 Loaded BAL problem: {problem.summary()}")
    return problem


def _format(value: float) -> str:
    # 17 significant digits reproduce every binary64 exactly
    return format(float(value), '.17g')


def format_bal(problem: BALProblem) -> str:
    out = io.StringIO()
    out.write(f"{problem.num_cameras} {problem.num_points} {problem.num_observations}\n")
    for cam, point, (x, y) in zip(problem.camera_indices, problem.point_indices, problem.observations):
        out.write(f"{int(cam)} {int(point)} {_format(x)} {_format(y)}\n")
    for value in problem.cameras.reshape(-1):
        out.write(f"{_format(value)}\n")
    for value in problem.points.reshape(-1):
        out.write(f"{_format(value)}\n")
    return out.getvalue()


def write_bal(problem: BALProblem, destination: Union[str, os.PathLike, TextIO]) -> None:
    """Serialize a problem in BAL text layout; '.gz' paths are compressed"""
    text = format_bal(problem)
    if isinstance(destination, (str, os.PathLike)):
        if str(destination).endswith('.gz'):
            with gzip.open(destination, 'wt', encoding='ascii') as handle:
                handle.write(text)
        else:
            with open(destination, 'w', encoding='ascii') as handle:
                handle.write(text)
    else:
        destination.write(text)
