"""Field samples on uniform grids and their binary serialization.

Binary layout: 16-byte header (8-byte magic, uint32 version, uint32 dim),
then little-endian float64 values in C order, then the m gradient
components, each in C order. Metadata travels in a JSON sidecar.
"""

import json
import struct
from dataclasses import dataclass, field

import numpy as np

from .util import as_float_array

MAGIC = b"NDLFLD01"
VERSION = 1


@dataclass(frozen=True)
class GridWindow:
    """Uniform rectangular grid: vertex i sits at origin + i * spacing."""

    origin: np.ndarray
    spacing: np.ndarray
    shape: tuple

    @staticmethod
    def make(origin, spacing, shape):
        origin = np.atleast_1d(as_float_array(origin, "origin"))
        m = len(origin)
        spacing = np.broadcast_to(np.atleast_1d(as_float_array(spacing,
                                                               "spacing")), (m,))
        if np.any(spacing <= 0):
            raise ValueError("spacing must be positive")
        shape = tuple(int(s) for s in np.atleast_1d(shape))
        if len(shape) != m or any(s < 2 for s in shape):
            raise ValueError("shape must give >= 2 vertices per axis")
        return GridWindow(origin, spacing.copy(), shape)

    @staticmethod
    def box(center, half_extent, spacing):
        """Symmetric box window around `center` with at least `half_extent` reach."""
        center = np.atleast_1d(as_float_array(center, "center"))
        m = len(center)
        spacing = np.broadcast_to(np.atleast_1d(as_float_array(spacing,
                                                               "spacing")), (m,))
        half = np.broadcast_to(np.atleast_1d(as_float_array(half_extent,
                                                            "half_extent")), (m,))
        ns = np.ceil(half / spacing).astype(int)
        origin = center - ns * spacing
        return GridWindow.make(origin, spacing, tuple(2 * ns + 1))

    @property
    def dim(self):
        return len(self.origin)

    def axis(self, a):
        return self.origin[a] + self.spacing[a] * np.arange(self.shape[a])

    def axes(self):
        return [self.axis(a) for a in range(self.dim)]

    @property
    def upper(self):
        return self.origin + self.spacing * (np.array(self.shape) - 1)

    def cell_volume(self):
        return float(np.prod(self.spacing))

    def contains_ball(self, center, r):
        center = np.atleast_1d(np.asarray(center, float))
        return bool(np.all(center - r >= self.origin - 1e-12)
                    and np.all(center + r <= self.upper + 1e-12))

    def to_config(self):
        return {"origin": self.origin.tolist(), "spacing": self.spacing.tolist(),
                "shape": list(self.shape)}

    @staticmethod
    def from_config(cfg):
        return GridWindow.make(cfg["origin"], cfg["spacing"], cfg["shape"])


@dataclass
class FieldSample:
    """Values and analytic gradients of one field realization on a grid.

    Gradients come from the same coefficient draw as the values (term-wise
    differentiation of the series), never from differencing the values.
    """

    window: GridWindow
    values: np.ndarray
    gradients: np.ndarray          # shape (m, *grid shape)
    meta: dict = field(default_factory=dict)
    wrap: bool = False             # torus samples wrap modulo the full extent

    def __post_init__(self):
        if self.values.shape != self.window.shape:
            raise ValueError("values shape does not match the window")
        if self.gradients.shape != (self.window.dim,) + self.window.shape:
            raise ValueError("gradients must hold one component per axis")

    @property
    def dim(self):
        return self.window.dim

    def grad_norm(self):
        return np.sqrt(np.sum(self.gradients ** 2, axis=0))


def field_from_function(window, f, grad):
    """Evaluate an analytic test function and its gradient on a window."""
    mesh = np.meshgrid(*window.axes(), indexing="ij")
    pts = np.stack(mesh, axis=-1)
    values = f(pts)
    gradients = grad(pts)
    return FieldSample(window=window, values=np.asarray(values, float),
                       gradients=np.asarray(gradients, float),
                       meta={"kind": "analytic"})


def write_field(sample, path):
    """Write the binary payload and a JSON sidecar (path + '.json')."""
    window = sample.window
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<II", VERSION, window.dim))
        fh.write(np.ascontiguousarray(sample.values, dtype="<f8").tobytes())
        for a in range(window.dim):
            fh.write(np.ascontiguousarray(sample.gradients[a],
                                          dtype="<f8").tobytes())
    sidecar = {
        "window": window.to_config(),
        "wrap": sample.wrap,
        "meta": sample.meta,
    }
    with open(str(path) + ".json", "w") as fh:
        json.dump(sidecar, fh, sort_keys=True, indent=2)


def read_field(path):
    with open(str(path) + ".json") as fh:
        sidecar = json.load(fh)
    window = GridWindow.from_config(sidecar["window"])
    count = int(np.prod(window.shape))
    with open(path, "rb") as fh:
        magic = fh.read(8)
        if magic != MAGIC:
            raise ValueError(f"not a field file: bad magic {magic!r}")
        version, dim = struct.unpack("<II", fh.read(8))
        if version != VERSION:
            raise ValueError(f"unsupported field file version {version}")
        if dim != window.dim:
            raise ValueError("header dimension disagrees with sidecar window")
        raw = np.frombuffer(fh.read(8 * count * (1 + dim)), dtype="<f8")
    values = raw[:count].reshape(window.shape).copy()
    grads = raw[count:].reshape((dim,) + window.shape).copy()
    return FieldSample(window=window, values=values, gradients=grads,
                       meta=sidecar.get("meta", {}),
                       wrap=sidecar.get("wrap", False))


def write_labels(labels, window, path, meta=None):
    """Dump an integer label grid in the field container (labels as float64)."""
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<II", VERSION, window.dim))
        fh.write(np.ascontiguousarray(labels, dtype="<f8").tobytes())
    sidecar = {"window": window.to_config(), "meta": meta or {"kind": "labels"}}
    with open(str(path) + ".json", "w") as fh:
        json.dump(sidecar, fh, sort_keys=True, indent=2)
