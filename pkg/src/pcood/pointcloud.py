"""Labeled point cloud ingestion and ID/OOD map output.

Clouds follow the Semantic3D ASCII conventions: one point per line with
fields ``x y z intensity r g b``, plus an optional label file carrying
one integer class id per line (0 marks unlabeled points, 1..C the
classes). Columns are stored as numpy arrays and frozen after
construction, so clouds can be shared across threads.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ._io import iter_decoded_lines, write_text
from .errors import ParseError, StructuralError, ValidationError

SEMANTIC3D_CLASS_COUNT = 8
SEMANTIC3D_CLASS_NAMES = (
    "Manmade terrain",
    "Natural terrain",
    "High vegetation",
    "Low vegetation",
    "Buildings",
    "Hardscapes",
    "Scanning artefacts",
    "Cars",
)

# Colors for the rendered ID/OOD map.
ID_COLOR = (0, 255, 0)
OOD_COLOR = (255, 0, 0)


@dataclass(frozen=True)
class PointRecord:
    """One point: coordinates, intensity, and an 8-bit color triple."""

    x: float
    y: float
    z: float
    intensity: float
    r: int
    g: int
    b: int

    def __post_init__(self):
        for name in ("x", "y", "z", "intensity"):
            if not math.isfinite(getattr(self, name)):
                raise ValidationError(f"point field {name} is not finite")
        for name in ("r", "g", "b"):
            value = getattr(self, name)
            if not 0 <= value <= 255:
                raise ValidationError(f"color {name}={value} outside 0..255")


def _frozen(arr: np.ndarray) -> np.ndarray:
    arr.flags.writeable = False
    return arr


@dataclass
class LabeledCloud:
    """A point cloud with one class label per point (0 = unlabeled)."""

    xyz: np.ndarray  # (N, 3) float64
    intensity: np.ndarray  # (N,)
    rgb: np.ndarray  # (N, 3) uint8
    labels: np.ndarray  # (N,) int64, values in 0..class_count
    class_count: int = SEMANTIC3D_CLASS_COUNT
    source_id: str = ""

    def __post_init__(self):
        xyz = np.array(self.xyz, dtype=np.float64, copy=True)
        intensity = np.array(self.intensity, dtype=np.float64, copy=True)
        rgb = np.array(self.rgb, dtype=np.int64, copy=True)
        labels = np.array(self.labels, dtype=np.int64, copy=True)
        if xyz.ndim != 2 or xyz.shape[1] != 3:
            raise StructuralError(f"xyz must have shape (N, 3), got {xyz.shape}")
        n = xyz.shape[0]
        if intensity.shape != (n,):
            raise StructuralError(f"expected {n} intensities, got {intensity.shape}")
        if rgb.shape != (n, 3):
            raise StructuralError(f"rgb must have shape ({n}, 3), got {rgb.shape}")
        if labels.shape != (n,):
            raise StructuralError(f"{n} points but {labels.shape[0]} labels")
        if self.class_count < 1:
            raise ValidationError(f"class_count must be >= 1, got {self.class_count}")
        if not np.isfinite(xyz).all() or not np.isfinite(intensity).all():
            raise ValidationError("coordinates and intensities must be finite")
        # Range-check before the uint8 cast so out-of-range values cannot wrap.
        if rgb.size and (rgb.min() < 0 or rgb.max() > 255):
            raise ValidationError("color components must lie in 0..255")
        bad = np.nonzero((labels < 0) | (labels > self.class_count))[0]
        if bad.size:
            i = int(bad[0])
            raise ValidationError(
                f"label {int(labels[i])} at index {i} outside 0..{self.class_count}"
            )
        self.xyz = _frozen(xyz)
        self.intensity = _frozen(intensity)
        self.rgb = _frozen(rgb.astype(np.uint8))
        self.labels = _frozen(labels)

    def __len__(self) -> int:
        return self.xyz.shape[0]

    def point(self, i: int) -> PointRecord:
        x, y, z = self.xyz[i]
        r, g, b = self.rgb[i]
        return PointRecord(float(x), float(y), float(z), float(self.intensity[i]),
                           int(r), int(g), int(b))

    @classmethod
    def from_records(cls, records, labels=None, *,
                     class_count: int = SEMANTIC3D_CLASS_COUNT,
                     source_id: str = "") -> "LabeledCloud":
        records = list(records)
        n = len(records)
        xyz = np.array([(p.x, p.y, p.z) for p in records], dtype=np.float64).reshape(n, 3)
        intensity = np.array([p.intensity for p in records], dtype=np.float64)
        rgb = np.array([(p.r, p.g, p.b) for p in records], dtype=np.int64).reshape(n, 3)
        if labels is None:
            labels = np.zeros(n, dtype=np.int64)
        return cls(xyz, intensity, rgb, labels,
                   class_count=class_count, source_id=source_id)


@dataclass
class IdOodMask:
    """Per-point binary decision: 0 keeps a point in-distribution, 1 flags OOD."""

    flags: np.ndarray

    def __post_init__(self):
        flags = np.array(self.flags, dtype=np.int64, copy=True)
        if flags.ndim != 1:
            raise StructuralError(f"mask must be one-dimensional, got shape {flags.shape}")
        if flags.size and not np.isin(flags, (0, 1)).all():
            raise ValidationError("mask entries must be 0 (ID) or 1 (OOD)")
        self.flags = _frozen(flags.astype(np.uint8))

    def __len__(self) -> int:
        return self.flags.shape[0]

    @property
    def n_ood(self) -> int:
        return int(self.flags.sum())

    @property
    def n_id(self) -> int:
        return len(self) - self.n_ood


def parse_semantic3d(points_stream, labels_stream=None, *,
                     class_count: int = SEMANTIC3D_CLASS_COUNT,
                     source_id: str = "") -> LabeledCloud:
    """Parse a Semantic3D points file and an optional labels file.

    Blank lines are skipped, tabs and repeated spaces both separate
    fields. Errors carry the 1-based line number of the offending line.
    Without a labels file every point is marked unlabeled (0).
    """
    rows = []
    for lineno, line in enumerate(iter_decoded_lines(points_stream), start=1):
        fields = line.split()
        if not fields:
            continue
        if len(fields) != 7:
            raise ParseError(
                f"points line {lineno}: expected 7 fields (x y z intensity r g b), "
                f"got {len(fields)}"
            )
        try:
            x, y, z, inten = (float(f) for f in fields[:4])
            r, g, b = (int(f) for f in fields[4:])
        except ValueError:
            raise ParseError(f"points line {lineno}: malformed field in {line!r}") from None
        if not all(math.isfinite(v) for v in (x, y, z, inten)):
            raise ParseError(f"points line {lineno}: non-finite coordinate or intensity")
        for name, v in (("r", r), ("g", g), ("b", b)):
            if not 0 <= v <= 255:
                raise ParseError(f"points line {lineno}: color {name}={v} outside 0..255")
        rows.append((x, y, z, inten, r, g, b))

    n = len(rows)
    data = np.array(rows, dtype=np.float64).reshape(n, 7)
    labels = np.zeros(n, dtype=np.int64)
    if labels_stream is not None:
        values = []
        for lineno, line in enumerate(iter_decoded_lines(labels_stream), start=1):
            text = line.strip()
            if not text:
                continue
            try:
                values.append(int(text))
            except ValueError:
                raise ParseError(f"labels line {lineno}: not an integer: {text!r}") from None
        if len(values) != n:
            raise StructuralError(f"{n} points but {len(values)} labels")
        labels = np.array(values, dtype=np.int64).reshape(n)

    return LabeledCloud(data[:, :3], data[:, 3], data[:, 4:7].astype(np.int64),
                        labels, class_count=class_count, source_id=source_id)


def strip_color(cloud: LabeledCloud) -> LabeledCloud:
    """Return a copy of the cloud with every color zeroed.

    Geometry, intensity, and labels are carried over bit for bit, so
    applying the transform twice changes nothing beyond the first pass.
    """
    return LabeledCloud(cloud.xyz, cloud.intensity,
                        np.zeros((len(cloud), 3), dtype=np.int64),
                        cloud.labels, class_count=cloud.class_count,
                        source_id=cloud.source_id)


def write_idood_map(cloud: LabeledCloud, mask: IdOodMask, sink) -> None:
    """Write ``x y z r g b`` lines colorized by the ID/OOD decision.

    ID points come out green (0, 255, 0) and OOD points red (255, 0, 0);
    coordinates are printed with six decimal places.
    """
    if len(mask) != len(cloud):
        raise StructuralError(
            f"mask length {len(mask)} does not match cloud length {len(cloud)}"
        )
    xyz = cloud.xyz
    flags = mask.flags
    lines = []
    for i in range(len(cloud)):
        r, g, b = OOD_COLOR if flags[i] else ID_COLOR
        lines.append(f"{xyz[i, 0]:.6f} {xyz[i, 1]:.6f} {xyz[i, 2]:.6f} {r} {g} {b}")
    text = "\n".join(lines)
    write_text(sink, text + "\n" if text else "")
