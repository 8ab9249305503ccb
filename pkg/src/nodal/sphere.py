"""Latitude-longitude face mesh on the unit 2-sphere.

Faces are the quads between consecutive theta/phi grid lines, evaluated at
their centers. Adjacency wraps in phi; the two pole vertices act as extra
"cap" sites connecting the first and last rings.
"""

import math
from dataclasses import dataclass, field

import numpy as np


@dataclass(frozen=True)
class SphereMesh:
    n_theta: int
    n_phi: int

    @staticmethod
    def for_spacing(h):
        return SphereMesh(n_theta=max(4, int(math.ceil(math.pi / h))),
                          n_phi=max(8, int(math.ceil(2 * math.pi / h))))

    @staticmethod
    def for_degree(n, factor=4.0):
        """Mesh resolving a degree-n polynomial: spacing <= 1 / (factor sqrt(n))."""
        return SphereMesh.for_spacing(1.0 / (factor * math.sqrt(max(n, 1))))

    @property
    def spacing(self):
        return max(math.pi / self.n_theta, 2 * math.pi / self.n_phi)

    def certified_for_degree(self, n, factor=4.0):
        return self.spacing <= 1.0 / (factor * math.sqrt(max(n, 1))) * (1 + 1e-9)

    def face_centers_angular(self):
        theta = (np.arange(self.n_theta) + 0.5) * math.pi / self.n_theta
        phi = (np.arange(self.n_phi) + 0.5) * 2 * math.pi / self.n_phi
        return theta, phi

    def face_centers_xyz(self):
        theta, phi = self.face_centers_angular()
        st, ct = np.sin(theta), np.cos(theta)
        cp, sp = np.cos(phi), np.sin(phi)
        x = st[:, None] * cp[None, :]
        y = st[:, None] * sp[None, :]
        z = np.broadcast_to(ct[:, None], (self.n_theta, self.n_phi)).copy()
        return x, y, z


@dataclass
class SphereFieldSample:
    """One field realization on a sphere mesh: face-center values plus poles."""

    mesh: SphereMesh
    values: np.ndarray                # (n_theta, n_phi)
    pole_values: np.ndarray           # (north, south)
    grad_norm: np.ndarray = None      # intrinsic |grad|, same shape as values
    meta: dict = field(default_factory=dict)
