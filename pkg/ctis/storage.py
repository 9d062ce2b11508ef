"""Container files for kernels, images, cubes and solve reports, plus CSV output.

A container is a UTF-8 ``key: value`` header terminated by a ``---`` line,
followed by the raw little-endian payload::

    magic: CTIS1
    kind: cube
    dtype: f64
    byte_order: little
    a: 2
    ...
    payload_bytes: 96
    crc32: 1a2b3c4d
    ---
    <payload>
"""

from __future__ import annotations

import csv
import logging
import zlib
from pathlib import Path
from typing import Iterable, Mapping

import numpy as np

from ctis.errors import ChecksumError, FormatVersionError
from ctis.models import Datacube, FpaImage, SystemGeometry, check_geometry, validate_finite
from ctis.services.calibration import KernelSet, build_kernel_set
from ctis.services.solver import SolveReport

logger = logging.getLogger(__name__)

MAGIC = "CTIS1"
KINDS = ("kernels", "image", "cube", "report")
HEADER_END = b"\n---\n"
_DTYPES = {"f32": np.dtype("<f4"), "f64": np.dtype("<f8")}

BENCHMARK_FIELDS = (
    "solver",
    "backend",
    "w",
    "K",
    "seconds",
    "relative_error",
    "avg_rel_pixel_error",
)


# ---------------------------------------------------------------------------
# Container encoding
# ---------------------------------------------------------------------------


def _dtype_name(dtype: np.dtype) -> str:
    return "f32" if np.dtype(dtype) == np.float32 else "f64"


def _write_container(
    path: Path,
    kind: str,
    geometry: SystemGeometry,
    payload: np.ndarray,
    extra: Mapping[str, str] | None = None,
) -> None:
    dtype = _dtype_name(payload.dtype)
    raw = np.ascontiguousarray(payload, dtype=_DTYPES[dtype]).tobytes()
    fields: dict[str, str] = {
        "magic": MAGIC,
        "kind": kind,
        "dtype": dtype,
        "byte_order": "little",
        "a": str(geometry.a),
        "alpha": str(geometry.alpha),
        "gamma": str(geometry.gamma),
        "xi": str(geometry.xi),
        "w": str(geometry.w),
        "ordering": "column-major",
    }
    if geometry.wavelengths is not None:
        fields["wavelengths"] = ",".join(repr(v) for v in geometry.wavelengths)
    fields.update(extra or {})
    fields["payload_bytes"] = str(len(raw))
    fields["crc32"] = f"{zlib.crc32(raw) & 0xFFFFFFFF:08x}"

    header = "".join(f"{k}: {v}\n" for k, v in fields.items())
    path = Path(path)
    path.write_bytes(header.encode("utf-8") + b"---\n" + raw)
    logger.info("Saved %s container %s (%d bytes payload)", kind, path, len(raw))


def _parse_header(blob: bytes) -> tuple[dict[str, str], bytes]:
    end = blob.find(HEADER_END)
    if end < 0:
        raise FormatVersionError("missing container header terminator")
    try:
        text = blob[:end].decode("utf-8")
    except UnicodeDecodeError as exc:
        raise FormatVersionError("container header is not UTF-8") from exc
    fields: dict[str, str] = {}
    for line in text.splitlines():
        key, sep, value = line.partition(":")
        if not sep:
            raise FormatVersionError(f"malformed header line {line!r}")
        fields[key.strip()] = value.strip()
    return fields, blob[end + len(HEADER_END) :]


def _geometry_from(fields: Mapping[str, str]) -> SystemGeometry:
    wl = fields.get("wavelengths")
    try:
        dims = [int(fields[k]) for k in ("a", "alpha", "gamma", "xi", "w")]
    except (KeyError, ValueError) as exc:
        raise FormatVersionError(f"bad geometry in header: {exc}") from exc
    try:
        wavelengths = tuple(float(v) for v in wl.split(",")) if wl else None
    except ValueError as exc:
        raise FormatVersionError(f"bad wavelengths in header: {wl!r}") from exc
    return SystemGeometry(*dims, wavelengths)


def _read_container(
    path: Path,
    kind: str,
    expected: SystemGeometry | None = None,
) -> tuple[dict[str, str], SystemGeometry, np.ndarray]:
    fields, payload = _parse_header(Path(path).read_bytes())
    if fields.get("magic") != MAGIC:
        raise FormatVersionError(f"unsupported container magic {fields.get('magic')!r}")
    if fields.get("kind") != kind:
        raise FormatVersionError(f"expected a {kind} container, found {fields.get('kind')!r}")
    if fields.get("byte_order") != "little" or fields.get("ordering") != "column-major":
        raise FormatVersionError("only little-endian column-major containers are supported")
    dtype = _DTYPES.get(fields.get("dtype", ""))
    if dtype is None:
        raise FormatVersionError(f"unsupported dtype {fields.get('dtype')!r}")

    try:
        declared = int(fields["payload_bytes"])
    except (KeyError, ValueError) as exc:
        raise FormatVersionError(f"bad payload_bytes in header: {exc}") from exc
    if len(payload) != declared:
        raise ChecksumError(f"payload is {len(payload)} bytes, header declares {declared}")
    crc = f"{zlib.crc32(payload) & 0xFFFFFFFF:08x}"
    if crc != fields.get("crc32"):
        raise ChecksumError(f"CRC32 mismatch: computed {crc}, header {fields.get('crc32')}")

    geometry = _geometry_from(fields)
    if expected is not None:
        check_geometry(expected, geometry)
    data = np.frombuffer(payload, dtype=dtype).astype(dtype.newbyteorder("="))
    logger.info("Loaded %s container %s", kind, path)
    return fields, geometry, data


def read_geometry(path: Path) -> SystemGeometry:
    """Geometry from any container header, without reading it as a given kind."""
    fields, _ = _parse_header(Path(path).read_bytes())
    if fields.get("magic") != MAGIC:
        raise FormatVersionError(f"unsupported container magic {fields.get('magic')!r}")
    return _geometry_from(fields)


# ---------------------------------------------------------------------------
# Typed save/load
# ---------------------------------------------------------------------------


def save_kernels(path: Path, kernels: KernelSet) -> None:
    """Spatial kernels only; spectra are recomputed on load."""
    _write_container(path, "kernels", kernels.geometry, kernels.spatial.reshape(-1))


def load_kernels(path: Path, expected: SystemGeometry | None = None) -> KernelSet:
    _, geometry, data = _read_container(path, "kernels", expected)
    planes = data.reshape(geometry.w, geometry.n)
    return build_kernel_set([FpaImage(geometry, p) for p in planes], geometry)


def save_image(path: Path, image: FpaImage) -> None:
    _write_container(path, "image", image.geometry, image.data)


def load_image(path: Path, expected: SystemGeometry | None = None) -> FpaImage:
    _, geometry, data = _read_container(path, "image", expected)
    return FpaImage(geometry, data)


def save_cube(path: Path, cube: Datacube) -> None:
    _write_container(path, "cube", cube.geometry, cube.data)


def load_cube(path: Path, expected: SystemGeometry | None = None) -> Datacube:
    _, geometry, data = _read_container(path, "cube", expected)
    cube = Datacube(geometry, data)
    validate_finite(cube)
    return cube


def _floats(values: Iterable[float] | None) -> str:
    return ",".join(repr(float(v)) for v in values) if values is not None else "none"


def _parse_floats(text: str) -> list[float] | None:
    if text == "none":
        return None
    try:
        return [float(v) for v in text.split(",") if v]
    except ValueError as exc:
        raise FormatVersionError(f"bad number list in header: {text!r}") from exc


def save_report(path: Path, report: SolveReport) -> None:
    """Final cube as payload; per-iteration timings and residuals in the header."""
    _write_container(
        path,
        "report",
        report.final.geometry,
        report.final.data,
        extra={
            "iterations": str(report.iterations),
            "seconds": _floats(report.seconds),
            "residuals": _floats(report.residuals),
        },
    )


def load_report(path: Path, expected: SystemGeometry | None = None) -> SolveReport:
    fields, geometry, data = _read_container(path, "report", expected)
    return SolveReport(
        final=Datacube(geometry, data),
        seconds=_parse_floats(fields.get("seconds", "none")) or [],
        residuals=_parse_floats(fields.get("residuals", "none")),
        iterations=_header_int(fields, "iterations"),
    )


def _header_int(fields: Mapping[str, str], key: str) -> int:
    try:
        return int(fields.get(key, "0"))
    except ValueError as exc:
        raise FormatVersionError(f"bad {key} in header: {fields[key]!r}") from exc


# ---------------------------------------------------------------------------
# CSV
# ---------------------------------------------------------------------------


def write_report_csv(path: Path, report: SolveReport) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["iteration", "seconds", "residual"])
        for k, seconds in enumerate(report.seconds, start=1):
            residual = "" if report.residuals is None else repr(float(report.residuals[k - 1]))
            writer.writerow([k, repr(float(seconds)), residual])
    logger.info("Wrote solve report CSV %s", path)


def write_benchmark_csv(path: Path, rows: Iterable[Mapping[str, object]]) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.DictWriter(fh, fieldnames=BENCHMARK_FIELDS)
        writer.writeheader()
        for row in rows:
            writer.writerow({k: "" if row.get(k) is None else row[k] for k in BENCHMARK_FIELDS})
    logger.info("Wrote benchmark CSV %s", path)


def read_benchmark_csv(path: Path) -> list[dict[str, str]]:
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        if tuple(reader.fieldnames or ()) != BENCHMARK_FIELDS:
            raise FormatVersionError(f"unexpected benchmark CSV header {reader.fieldnames}")
        return list(reader)
