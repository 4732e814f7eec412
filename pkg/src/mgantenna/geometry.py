"""Physical design description and its discretization into MoM elements.

Unknown ordering is fixed throughout the package::

    [ wire segments (wire 0 first) | ground segments | dielectric cells ]

Segments carry surface current (A/m) and have zero thickness; cells carry
volume polarization current (A/m^2).
"""
from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Optional

import numpy as np
from scipy import constants

from .errors import ValidationError

C0 = constants.c
EPS0 = constants.epsilon_0
ETA0 = math.sqrt(constants.mu_0 / constants.epsilon_0)

WIRE, GROUND, CELL = 0, 1, 2
KIND_NAMES = {WIRE: "wire", GROUND: "ground", CELL: "cell"}

# ground segments within FEED_ZONE feed heights of the feed are split to
# at most FEED_SEGMENT feed heights, resolving the sharply peaked image current
FEED_ZONE = 4.0
FEED_SEGMENT = 0.25

# collocation points closer than this (in wavelengths) count as coincident
COINCIDENCE_TOL = 1e-9


@dataclass(frozen=True)
class DesignSpec:
    """Physical and numerical description of one antenna design problem.

    Lengths are in meters.  Optional fields left as ``None`` take the
    documented defaults when the spec is resolved (see :meth:`resolved`):

    * ``wire_strip_width``: wavelength / 50
    * ``ground_width``: ``aperture_width``
    * ``source_position``: ``(0, substrate_thickness / 2)``

    The default ``reactance_bounds`` bracket the narrow reactance band in
    which the default wire lattice guides a surface wave.  Outside that
    band the wires barely interact with the source and every design looks
    the same, so a wide box leaves the optimizer on a flat plateau.  Other
    geometries or meshes move the band and need their own bounds.
    """

    frequency: float
    aperture_width: float
    wire_spacing: float
    substrate_thickness: float
    substrate_rel_permittivity: float = 3.0
    wire_strip_width: Optional[float] = None
    ground_width: Optional[float] = None
    source_position: Optional[tuple] = None
    source_amplitude: complex = 1.0
    segments_per_wire: int = 3
    ground_segments_per_wavelength: int = 160
    cells_per_wavelength_lateral: int = 20
    cells_through_thickness: int = 1
    reactance_bounds: tuple = (-11.5, -10.5)

    def __post_init__(self):
        for name in ("frequency", "aperture_width", "wire_spacing", "substrate_thickness"):
            value = getattr(self, name)
            if not (np.isfinite(value) and value > 0):
                raise ValidationError(f"{name} must be positive and finite, got {value!r}")
        if not self.substrate_rel_permittivity >= 1.0:
            raise ValidationError(
                f"substrate_rel_permittivity must be >= 1, got {self.substrate_rel_permittivity!r}"
            )
        if self.wire_spacing > self.aperture_width * (1 + 1e-12):
            raise ValidationError("wire_spacing must not exceed aperture_width")
        for name in (
            "segments_per_wire",
            "ground_segments_per_wavelength",
            "cells_per_wavelength_lateral",
            "cells_through_thickness",
        ):
            value = getattr(self, name)
            if int(value) != value or value < 1:
                raise ValidationError(f"{name} must be a positive integer, got {value!r}")
        lo, hi = self.reactance_bounds
        if not (np.isfinite(lo) and np.isfinite(hi)):
            raise ValidationError("reactance_bounds must be finite")
        if lo > hi:
            raise ValidationError(f"empty reactance_bounds: X_min={lo} > X_max={hi}")
        # normalise tuple-like fields so the spec stays hashable
        object.__setattr__(self, "reactance_bounds", (float(lo), float(hi)))
        if self.source_position is not None:
            object.__setattr__(self, "source_position", tuple(float(v) for v in self.source_position))
        if self.wire_strip_width is not None and self.wire_strip_width <= 0:
            raise ValidationError("wire_strip_width must be positive")
        if self.strip_width >= self.wire_spacing:
            raise ValidationError(
                f"strips overlap: wire_strip_width {self.strip_width:g} m >= wire_spacing "
                f"{self.wire_spacing:g} m"
            )
        if self.ground_extent < self.aperture_width * (1 - 1e-12):
            raise ValidationError("ground_width must be at least aperture_width")
        if self.source[1] <= 0:
            raise ValidationError("source must lie above the ground plane (z > 0)")

    @classmethod
    def in_wavelengths(
        cls,
        frequency=10e9,
        aperture=7.0,
        spacing=0.25,
        thickness=0.0085,
        eps_r=3.0,
        **kwargs,
    ):
        """Build a spec with the geometric sizes given in free-space wavelengths."""
        lam = C0 / frequency
        for key in ("wire_strip_width", "ground_width"):
            if kwargs.get(key) is not None:
                kwargs[key] = kwargs[key] * lam
        if kwargs.get("source_position") is not None:
            kwargs["source_position"] = tuple(v * lam for v in kwargs["source_position"])
        return cls(
            frequency=frequency,
            aperture_width=aperture * lam,
            wire_spacing=spacing * lam,
            substrate_thickness=thickness * lam,
            substrate_rel_permittivity=eps_r,
            **kwargs,
        )

    # derived quantities
    @property
    def wavelength(self) -> float:
        return C0 / self.frequency

    @property
    def omega(self) -> float:
        return 2 * math.pi * self.frequency

    @property
    def k(self) -> float:
        return self.omega / C0

    @property
    def eta(self) -> float:
        return ETA0

    @property
    def n_wires(self) -> int:
        return max(1, int(round(self.aperture_width / self.wire_spacing)))

    @property
    def strip_width(self) -> float:
        if self.wire_strip_width is None:
            return self.wavelength / 50
        return self.wire_strip_width

    @property
    def ground_extent(self) -> float:
        return self.aperture_width if self.ground_width is None else self.ground_width

    @property
    def source(self) -> tuple:
        if self.source_position is None:
            return (0.0, self.substrate_thickness / 2)
        return self.source_position

    @property
    def contrast(self) -> complex:
        """Volume contrast ``j*omega*(eps - eps0)`` in S/m."""
        return 1j * self.omega * (self.substrate_rel_permittivity - 1.0) * EPS0

    def resolved(self) -> "DesignSpec":
        """Copy with every defaulted field filled in explicitly."""
        return dataclasses.replace(
            self,
            wire_strip_width=self.strip_width,
            ground_width=self.ground_extent,
            source_position=self.source,
        )

    def refined(self, factor: int) -> "DesignSpec":
        """Copy with every discretization density multiplied by ``factor``."""
        return dataclasses.replace(
            self,
            segments_per_wire=self.segments_per_wire * factor,
            ground_segments_per_wavelength=self.ground_segments_per_wavelength * factor,
            cells_per_wavelength_lateral=self.cells_per_wavelength_lateral * factor,
            cells_through_thickness=self.cells_through_thickness * factor,
        )

    def mirrored(self) -> "DesignSpec":
        """Copy with the source reflected through y = 0."""
        y, z = self.source
        return dataclasses.replace(self, source_position=(-y, z))


@dataclass(frozen=True)
class Segment:
    center: tuple
    width: float
    kind: str
    wire_index: Optional[int] = None


@dataclass(frozen=True)
class Cell:
    center: tuple
    dy: float
    dz: float
    contrast: complex


@dataclass(frozen=True, eq=False)
class DiscretizedScene:
    """Flat-array view of all MoM elements plus the line source.

    ``dz`` is zero for surface segments.  ``measure`` is the segment width
    or the cell area, i.e. the weight of the element's pulse basis.
    """

    frequency: float
    centers: np.ndarray
    dy: np.ndarray
    dz: np.ndarray
    kind: np.ndarray
    wire_index: np.ndarray
    contrast: complex
    source_position: tuple
    source_amplitude: complex
    n_wires: int
    spec: Optional[DesignSpec] = field(default=None, repr=False)
    # X-independent operators computed lazily by the solver
    cache: dict = field(default_factory=dict, repr=False)

    def __post_init__(self):
        for name in ("centers", "dy", "dz", "kind", "wire_index"):
            getattr(self, name).setflags(write=False)

    @classmethod
    def from_elements(cls, frequency, segments=(), cells=(), source_position=(0.0, 0.0),
                      source_amplitude=1.0, n_wires=None):
        """Assemble a scene by hand, mainly for small test problems.

        ``segments`` must list wire segments before ground segments.
        """
        centers, dy, dz, kind, widx = [], [], [], [], []
        contrast = 0j
        for seg in segments:
            centers.append(seg.center)
            dy.append(seg.width)
            dz.append(0.0)
            kind.append(WIRE if seg.kind == "wire" else GROUND)
            widx.append(seg.wire_index if seg.kind == "wire" else -1)
        for cell in cells:
            centers.append(cell.center)
            dy.append(cell.dy)
            dz.append(cell.dz)
            kind.append(CELL)
            widx.append(-1)
            contrast = cell.contrast
        kind = np.array(kind, dtype=int)
        if np.any(np.diff(kind) < 0):
            raise ValidationError("elements must be ordered wires, ground, cells")
        widx = np.array(widx, dtype=int)
        if n_wires is None:
            n_wires = int(widx.max()) + 1 if np.any(kind == WIRE) else 0
        return cls(
            frequency=float(frequency),
            centers=np.array(centers, dtype=float).reshape(-1, 2),
            dy=np.array(dy, dtype=float),
            dz=np.array(dz, dtype=float),
            kind=kind,
            wire_index=widx,
            contrast=complex(contrast),
            source_position=tuple(float(v) for v in source_position),
            source_amplitude=complex(source_amplitude),
            n_wires=int(n_wires),
        )

    @property
    def wavelength(self):
        return C0 / self.frequency

    @property
    def omega(self):
        return 2 * math.pi * self.frequency

    @property
    def k(self):
        return self.omega / C0

    @property
    def eta(self):
        return ETA0

    @property
    def size(self) -> int:
        return len(self.kind)

    @property
    def n_w(self) -> int:
        return int(np.count_nonzero(self.kind == WIRE))

    @property
    def n_g(self) -> int:
        return int(np.count_nonzero(self.kind == GROUND))

    @property
    def n_v(self) -> int:
        return int(np.count_nonzero(self.kind == CELL))

    @cached_property
    def measure(self) -> np.ndarray:
        m = np.where(self.kind == CELL, self.dy * self.dz, self.dy)
        m.setflags(write=False)
        return m

    @cached_property
    def wire_to_segments(self) -> dict:
        return {
            n: np.flatnonzero(self.wire_index == n) for n in range(self.n_wires)
        }

    @property
    def segments(self) -> list:
        out = []
        for i in np.flatnonzero(self.kind != CELL):
            kind = KIND_NAMES[int(self.kind[i])]
            out.append(
                Segment(
                    center=(float(self.centers[i, 0]), float(self.centers[i, 1])),
                    width=float(self.dy[i]),
                    kind=kind,
                    wire_index=int(self.wire_index[i]) if kind == "wire" else None,
                )
            )
        return out

    @property
    def cells(self) -> list:
        return [
            Cell(
                center=(float(self.centers[i, 0]), float(self.centers[i, 1])),
                dy=float(self.dy[i]),
                dz=float(self.dz[i]),
                contrast=self.contrast,
            )
            for i in np.flatnonzero(self.kind == CELL)
        ]


def _feed_graded_edges(edges, source):
    ys, zs = source
    out = [edges[:1]]
    for a, b in zip(edges[:-1], edges[1:]):
        near = abs(0.5 * (a + b) - ys) < FEED_ZONE * zs + 0.5 * (b - a)
        pieces = max(1, math.ceil((b - a) / (FEED_SEGMENT * zs))) if near else 1
        out.append(np.linspace(a, b, pieces + 1)[1:])
    return np.concatenate(out)


def build_scene(spec: DesignSpec) -> DiscretizedScene:
    """Discretize wires, ground plane and substrate of ``spec``.

    Wire ``n`` (0-based) is centered at ``y = -W/2 + (n + 1/2) * spacing``,
    height ``z = t``, and split into ``segments_per_wire`` equal segments.
    The ground spans ``[-W_g/2, W_g/2]`` at ``z = 0`` with uniform segments,
    split further within ``FEED_ZONE`` feed heights of the feed.  The
    substrate occupies the same lateral extent for ``0 < z < t``.  A
    substrate with ``eps_r == 1`` has no contrast and contributes no cells.
    """
    lam = spec.wavelength
    t = spec.substrate_thickness
    n_wires = spec.n_wires
    w_s = spec.strip_width
    n_sw = spec.segments_per_wire

    wire_y = -spec.aperture_width / 2 + (np.arange(n_wires) + 0.5) * spec.wire_spacing
    sub = (np.arange(n_sw) + 0.5) * (w_s / n_sw) - w_s / 2
    seg_y = (wire_y[:, None] + sub[None, :]).ravel()
    wire_centers = np.column_stack([seg_y, np.full(seg_y.size, t)])
    wire_dy = np.full(seg_y.size, w_s / n_sw)
    wire_idx = np.repeat(np.arange(n_wires), n_sw)

    w_g = spec.ground_extent
    n_g = max(1, int(round(w_g / lam * spec.ground_segments_per_wavelength)))
    g_edges = _feed_graded_edges(np.linspace(-w_g / 2, w_g / 2, n_g + 1), spec.source)
    n_g = g_edges.size - 1
    g_y = 0.5 * (g_edges[:-1] + g_edges[1:])
    ground_centers = np.column_stack([g_y, np.zeros(n_g)])
    ground_dy = np.diff(g_edges)

    if spec.substrate_rel_permittivity > 1.0:
        n_cy = max(1, int(round(w_g / lam * spec.cells_per_wavelength_lateral)))
        # even count keeps a centered feed off the cell collocation points
        n_cy += n_cy % 2
        n_cz = spec.cells_through_thickness
        y_edges = np.linspace(-w_g / 2, w_g / 2, n_cy + 1)
        z_edges = np.linspace(0.0, t, n_cz + 1)
        cy = 0.5 * (y_edges[:-1] + y_edges[1:])
        cz = 0.5 * (z_edges[:-1] + z_edges[1:])
        # lateral index fastest, bottom layer first
        cyy, czz = np.meshgrid(cy, cz)
        cell_centers = np.column_stack([cyy.ravel(), czz.ravel()])
        cell_dy = np.meshgrid(np.diff(y_edges), cz)[0].ravel()
        cell_dz = np.meshgrid(cy, np.diff(z_edges))[1].ravel()
    else:
        cell_centers = np.empty((0, 2))
        cell_dy = cell_dz = np.empty(0)

    n_v = len(cell_dy)
    centers = np.vstack([wire_centers, ground_centers, cell_centers])
    scene = DiscretizedScene(
        frequency=spec.frequency,
        centers=centers,
        dy=np.concatenate([wire_dy, ground_dy, cell_dy]),
        dz=np.concatenate([np.zeros(seg_y.size + n_g), cell_dz]),
        kind=np.concatenate([
            np.full(seg_y.size, WIRE), np.full(n_g, GROUND), np.full(n_v, CELL)
        ]).astype(int),
        wire_index=np.concatenate([wire_idx, np.full(n_g + n_v, -1)]).astype(int),
        contrast=spec.contrast if n_v else 0j,
        source_position=spec.source,
        source_amplitude=complex(spec.source_amplitude),
        n_wires=n_wires,
        spec=spec,
    )
    src = np.asarray(spec.source)
    dist = np.hypot(*(centers - src).T)
    if np.any(dist <= COINCIDENCE_TOL * lam):
        raise ValidationError(f"source at {spec.source} coincides with a collocation point")
    return scene


def collocation_points(scene: DiscretizedScene) -> np.ndarray:
    """Matching points in unknown order, shape ``(M, 2)``: segment then cell centers."""
    return scene.centers.copy()
