"""
Plain-text scenario and block-matrix files.

Both formats are line oriented: ``key = value`` header lines, then
``[section]`` headers each followed by comma-separated rows. ``#`` starts
a comment. Every parse error carries the offending line number.

Scenario sections: ``d_rs`` (N x M), ``d_dr`` (K x N), ``d_ds`` (K x M),
``excess_rs``, ``excess_dr`` in meters, or the position tables ``tx``,
``ris`` and ``rx`` (one x, y, z row per antenna).

Block files hold one ``[matrix]`` section of complex literals for the
full (M+N+K) x (M+N+K) matrix.
"""
import csv
import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, List, Optional, Tuple, Union

import numpy as np

from .channel import LinkConfig, LinkGeometry, validate_geometry
from .errors import FormatError, RisNetError
from .multiport import DEFAULT_RESISTANCE, BlockMatrix, MultiportImpedance, MultiportScattering
from .utils import format_complex

logger = logging.getLogger(__name__)

PathLike = Union[str, Path]

SCENARIO_KEYS = {
    "M": int,
    "N": int,
    "K": int,
    "R": float,
    "wavelength": float,
    "blocked_direct": "bool",
    "reference": int,
}
DISTANCE_SECTIONS = ("d_rs", "d_dr", "d_ds", "excess_rs", "excess_dr")
POSITION_SECTIONS = ("tx", "ris", "rx")
BLOCK_KEYS = {"kind": str, "R": float, "M": int, "N": int, "K": int}
BLOCK_KINDS = ("Z", "S")

_TRUE = ("1", "true", "yes", "on")
_FALSE = ("0", "false", "no", "off")


@dataclass
class _Document:
    header: Dict[str, Tuple[str, int]]
    sections: Dict[str, List[Tuple[List[str], int]]]
    first_line: Dict[str, int]


def _parse(text: str, path: Optional[str], allowed_sections) -> _Document:
    header: Dict[str, Tuple[str, int]] = {}
    sections: Dict[str, List[Tuple[List[str], int]]] = {}
    first_line: Dict[str, int] = {}
    current = None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("["):
            if not line.endswith("]"):
                raise FormatError(f"unterminated section header {line!r}", line=lineno, path=path)
            name = line[1:-1].strip()
            if name not in allowed_sections:
                raise FormatError(f"unknown section [{name}]", line=lineno, path=path)
            if name in sections:
                raise FormatError(f"duplicate section [{name}]", line=lineno, path=path)
            sections[name] = []
            first_line[name] = lineno
            current = name
            continue
        if current is None:
            key, sep, value = line.partition("=")
            if not sep:
                raise FormatError(f"expected 'key = value', got {line!r}", line=lineno, path=path)
            key = key.strip()
            if key in header:
                raise FormatError(f"duplicate key {key!r}", line=lineno, path=path)
            header[key] = (value.strip(), lineno)
            continue
        cells = [c.strip() for c in next(csv.reader([line], skipinitialspace=True))]
        sections[current].append((cells, lineno))
    return _Document(header, sections, first_line)


def _convert(value: str, kind, key: str, lineno: int, path: Optional[str]):
    try:
        if kind == "bool":
            lowered = value.lower()
            if lowered in _TRUE:
                return True
            if lowered in _FALSE:
                return False
            raise ValueError(value)
        return kind(value)
    except ValueError:
        raise FormatError(f"invalid value {value!r} for {key}", line=lineno, path=path) from None


def _header_values(doc: _Document, keys: Dict, path: Optional[str]) -> Dict:
    values = {}
    for key, (raw, lineno) in doc.header.items():
        if key not in keys:
            raise FormatError(f"unknown key {key!r}", line=lineno, path=path)
        values[key] = _convert(raw, keys[key], key, lineno, path)
    return values


def _table(doc: _Document, name: str, path: Optional[str], parse=float) -> Optional[np.ndarray]:
    if name not in doc.sections:
        return None
    rows = doc.sections[name]
    if not rows:
        raise FormatError(f"section [{name}] is empty", line=doc.first_line[name], path=path)
    width = len(rows[0][0])
    table = []
    for cells, lineno in rows:
        if len(cells) != width:
            raise FormatError(
                f"row has {len(cells)} columns, expected {width} in [{name}]", line=lineno, path=path
            )
        try:
            table.append([parse(c.replace(" ", "")) for c in cells])
        except ValueError:
            raise FormatError(f"non-numeric entry in [{name}]: {cells}", line=lineno, path=path) from None
    return np.array(table)


def parse_scenario(text: str, path: Optional[str] = None) -> Tuple[LinkConfig, LinkGeometry, int]:
    """
    Parse scenario text.

    Returns:
        (LinkConfig, LinkGeometry, reference) with ``reference`` 0-based.

    Raises:
        FormatError: On malformed input, with the line number.
    """
    doc = _parse(text, path, DISTANCE_SECTIONS + POSITION_SECTIONS)
    header = _header_values(doc, SCENARIO_KEYS, path)
    blocked = header.pop("blocked_direct", True)
    reference = header.pop("reference", 1)

    positions = [name for name in POSITION_SECTIONS if name in doc.sections]
    distances = [name for name in DISTANCE_SECTIONS if name in doc.sections]
    if positions and distances:
        line = min(doc.first_line[n] for n in positions + distances)
        raise FormatError("give either position tables or distance tables, not both", line=line, path=path)

    try:
        if positions:
            missing = [n for n in POSITION_SECTIONS if n not in doc.sections]
            if missing:
                raise FormatError(f"missing position section(s) {missing}", path=path)
            tx, ris, rx = (_table(doc, n, path) for n in POSITION_SECTIONS)
            geom = LinkGeometry.from_positions(tx, ris, rx, blocked_direct=blocked)
            inferred = {"M": len(tx), "N": len(ris), "K": len(rx)}
        else:
            for name in ("d_rs", "d_dr"):
                if name not in doc.sections:
                    raise FormatError(f"missing section [{name}]", path=path)
            tables = {name: _table(doc, name, path) for name in DISTANCE_SECTIONS}
            geom = LinkGeometry(blocked_direct=blocked, **tables)
            inferred = {"M": geom.d_rs.shape[1], "N": geom.d_rs.shape[0], "K": geom.d_dr.shape[0]}
        for key, count in inferred.items():
            header.setdefault(key, count)
        cfg = LinkConfig(**header)
        validate_geometry(cfg, geom)
    except FormatError:
        raise
    except RisNetError as exc:
        raise FormatError(str(exc), path=path) from exc

    if not 1 <= reference <= cfg.N:
        line = doc.header["reference"][1] if "reference" in doc.header else None
        raise FormatError(f"reference element {reference} outside 1..{cfg.N}", line=line, path=path)
    logger.debug("scenario %s: M=%d N=%d K=%d", path or "<text>", cfg.M, cfg.N, cfg.K)
    return cfg, geom, reference - 1


def read_scenario(path: PathLike) -> Tuple[LinkConfig, LinkGeometry, int]:
    """Read a scenario file; see :func:`parse_scenario`."""
    text = Path(path).read_text(encoding="utf-8")
    return parse_scenario(text, str(path))


def parse_block_file(text: str, path: Optional[str] = None) -> Tuple[BlockMatrix, float]:
    """
    Parse a block-matrix file.

    Returns:
        (matrix, R) where matrix is a MultiportImpedance for ``kind = Z``
        and a MultiportScattering for ``kind = S``.
    """
    doc = _parse(text, path, ("matrix",))
    header = _header_values(doc, BLOCK_KEYS, path)
    for key in ("kind", "M", "N", "K"):
        if key not in header:
            raise FormatError(f"missing key {key!r}", path=path)
    kind = header["kind"].upper()
    if kind not in BLOCK_KINDS:
        raise FormatError(f"kind must be Z or S, got {header['kind']!r}", line=doc.header["kind"][1], path=path)
    if "matrix" not in doc.sections:
        raise FormatError("missing section [matrix]", path=path)
    matrix = _table(doc, "matrix", path, parse=complex)
    sizes = (header["M"], header["N"], header["K"])
    R = header.get("R", DEFAULT_RESISTANCE)
    cls = MultiportImpedance if kind == "Z" else MultiportScattering
    try:
        return cls(matrix, sizes), R
    except RisNetError as exc:
        raise FormatError(str(exc), line=doc.first_line["matrix"], path=path) from exc


def read_block_file(path: PathLike) -> Tuple[BlockMatrix, float]:
    text = Path(path).read_text(encoding="utf-8")
    return parse_block_file(text, str(path))


def render_block_file(matrix: BlockMatrix, R: float = DEFAULT_RESISTANCE) -> str:
    """Serialize a partitioned matrix with full precision."""
    kind = "S" if isinstance(matrix, MultiportScattering) else "Z"
    lines = [
        f"kind = {kind}",
        f"R = {R!r}",
        f"M = {matrix.M}",
        f"N = {matrix.N}",
        f"K = {matrix.K}",
        "",
        "[matrix]",
    ]
    for row in matrix.matrix:
        lines.append(", ".join(format_complex(v) for v in row))
    return "\n".join(lines) + "\n"


def write_block_file(path: PathLike, matrix: BlockMatrix, R: float = DEFAULT_RESISTANCE) -> None:
    Path(path).write_text(render_block_file(matrix, R), encoding="utf-8")
