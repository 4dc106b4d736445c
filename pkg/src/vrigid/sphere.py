"""Unit-sphere primitives and rigid motions of R^3."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DegenerateChord, InvalidScale, NotOrthogonal

ORTHO_TOL = 1e-10


def direction_of_chord(p, q) -> np.ndarray:
    """(p - q) / |p - q|."""
    v = np.asarray(p, dtype=float) - np.asarray(q, dtype=float)
    n = np.linalg.norm(v)
    if n == 0.0:
        raise DegenerateChord("chord endpoints coincide")
    return v / n


def directions_of_chords(p: np.ndarray, q: np.ndarray) -> np.ndarray:
    """Row-wise version of :func:`direction_of_chord`."""
    v = np.asarray(p, dtype=float) - np.asarray(q, dtype=float)
    n = np.linalg.norm(v, axis=-1, keepdims=True)
    if np.any(n == 0.0):
        raise DegenerateChord("chord endpoints coincide")
    return v / n


def psi(c: float, v):
    """Sphere self-map (x, y, z) -> (x, y, cz)/|(x, y, cz)|; works row-wise."""
    if not c > 0:
        raise InvalidScale(f"scale must be positive, got {c}")
    w = np.array(v, dtype=float, copy=True)
    w[..., 2] *= c
    return w / np.linalg.norm(w, axis=-1, keepdims=True)


def alpha_angle(c: float, d: float) -> float:
    """Rotation angle arctan(cd) - arctan(d) about the x-axis."""
    return math.atan(c * d) - math.atan(d)


def w_coefficient(c, d):
    """sqrt((1/(d^2+1)) (1 + 1/(cd)^2)): xy-plane trace rescaling after the x-axis rotation."""
    c_arr = np.asarray(c, dtype=float)
    d_arr = np.asarray(d, dtype=float)
    if np.any(c_arr <= 0) or np.any(d_arr <= 0):
        raise InvalidScale("w_coefficient needs c > 0 and d > 0")
    out = np.sqrt((1.0 / (d_arr ** 2 + 1.0)) * (1.0 + 1.0 / (c_arr * d_arr) ** 2))
    return float(out) if out.ndim == 0 else out


def rotation_x(alpha: float) -> np.ndarray:
    c, s = math.cos(alpha), math.sin(alpha)
    return np.array([[1.0, 0.0, 0.0], [0.0, c, -s], [0.0, s, c]])


def rotation_y(alpha: float) -> np.ndarray:
    """Rotation in the xz-plane turning +x towards +z by ``alpha``."""
    c, s = math.cos(alpha), math.sin(alpha)
    return np.array([[c, 0.0, -s], [0.0, 1.0, 0.0], [s, 0.0, c]])


def rotation_z(theta: float) -> np.ndarray:
    c, s = math.cos(theta), math.sin(theta)
    return np.array([[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]])


def rotate_about_x(p, alpha: float) -> np.ndarray:
    return np.asarray(p, dtype=float) @ rotation_x(alpha).T


def slope_height_map(m):
    """Slope -> z-coordinate of the unit vector with that slope: m / sqrt(1 + m^2), +-inf -> +-1."""
    m = np.asarray(m, dtype=float)
    with np.errstate(invalid="ignore", over="ignore"):
        z = m / np.sqrt(1.0 + m * m)
        # large |m| overflows m*m; the limit is sign(m)
        z = np.where(np.abs(m) > 1e150, np.sign(m), z)
    return float(z) if z.ndim == 0 else z


def height_slope_map(z):
    """Inverse of :func:`slope_height_map` for |z| < 1 (+-inf at the poles)."""
    z = np.asarray(z, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        inner = np.where(np.abs(z) >= 1.0, 1.0, z / np.sqrt(np.maximum(1.0 - z * z, 1e-300)))
        m = np.where(np.abs(z) >= 1.0, np.copysign(np.inf, z), inner)
    return float(m) if m.ndim == 0 else m


def angular_distance(u, v):
    """Great-circle distance between unit vectors (row-wise)."""
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    cross = np.linalg.norm(np.cross(u, v), axis=-1)
    dot = np.sum(u * v, axis=-1)
    return np.arctan2(cross, dot)


def chord_to_angle(chord):
    """Angular distance from Euclidean chord length between unit vectors."""
    return 2.0 * np.arcsin(np.clip(np.asarray(chord) / 2.0, 0.0, 1.0))


@dataclass(frozen=True, eq=False)
class Isometry3:
    """p -> Q p + t with Q orthogonal; ``orientation`` = det(Q)."""

    Q: np.ndarray
    t: np.ndarray
    orientation: int = 1

    def __post_init__(self):
        Q = np.array(self.Q, dtype=float).reshape(3, 3)
        t = np.array(self.t, dtype=float).reshape(3)
        Q.setflags(write=False)
        t.setflags(write=False)
        object.__setattr__(self, "Q", Q)
        object.__setattr__(self, "t", t)
        object.__setattr__(self, "orientation", int(self.orientation))

    @classmethod
    def from_parts(cls, Q, t=(0.0, 0.0, 0.0)) -> "Isometry3":
        Q = np.asarray(Q, dtype=float)
        return cls(Q, t, 1 if np.linalg.det(Q) >= 0 else -1)

    @classmethod
    def identity(cls) -> "Isometry3":
        return cls(np.eye(3), np.zeros(3), 1)

    @classmethod
    def translation(cls, t) -> "Isometry3":
        return cls(np.eye(3), t, 1)

    @classmethod
    def from_affine(cls, M) -> "Isometry3":
        M = np.asarray(M, dtype=float)
        return cls.from_parts(M[:3, :3], M[:3, 3])

    def check(self, tol: float = ORTHO_TOL) -> None:
        err = np.max(np.abs(self.Q.T @ self.Q - np.eye(3)))
        det = np.linalg.det(self.Q)
        if err > tol or abs(det - self.orientation) > tol or self.orientation not in (1, -1):
            raise NotOrthogonal(f"orthogonality error {err:.3e}, det {det:.6f}, orientation {self.orientation}")

    def is_valid(self, tol: float = ORTHO_TOL) -> bool:
        try:
            self.check(tol)
        except NotOrthogonal:
            return False
        return True

    def affine(self) -> np.ndarray:
        M = np.eye(4)
        M[:3, :3] = self.Q
        M[:3, 3] = self.t
        return M

    def __call__(self, p):
        return apply_isometry(self, p)

    def compose(self, other: "Isometry3") -> "Isometry3":
        """self after other."""
        return Isometry3(self.Q @ other.Q, self.Q @ other.t + self.t, self.orientation * other.orientation)

    def __matmul__(self, other: "Isometry3") -> "Isometry3":
        return self.compose(other)

    def inverse(self) -> "Isometry3":
        return Isometry3(self.Q.T, -(self.Q.T @ self.t), self.orientation)

    def conjugate(self, M) -> "Isometry3":
        """M o self o M^-1 for an affine similarity M (4x4); result is again an isometry."""
        M = np.asarray(M, dtype=float)
        return Isometry3.from_affine(M @ self.affine() @ np.linalg.inv(M))

    def allclose(self, other: "Isometry3", atol: float = 1e-12) -> bool:
        return (np.allclose(self.Q, other.Q, atol=atol) and np.allclose(self.t, other.t, atol=atol)
                and self.orientation == other.orientation)

    def to_list(self) -> list[float]:
        """9 matrix entries row-major, 3 translation entries, orientation sign."""
        return [float(v) for v in self.Q.ravel()] + [float(v) for v in self.t] + [int(self.orientation)]

    @classmethod
    def from_list(cls, values) -> "Isometry3":
        values = list(values)
        if len(values) != 13:
            raise ValueError("serialized isometry needs 13 numbers")
        return cls(np.reshape(values[:9], (3, 3)), values[9:12], int(values[12]))

    def repaired(self) -> "Isometry3":
        """Nearest orthogonal Q (polar factor via SVD), same translation."""
        U, _, Vt = np.linalg.svd(self.Q)
        Q = U @ Vt
        return Isometry3.from_parts(Q, self.t)


def apply_isometry(iso: Isometry3, p):
    """Q p + t, row-wise for (n, 3) arrays."""
    iso.check()
    p = np.asarray(p, dtype=float)
    return p @ iso.Q.T + iso.t


def decompose_isometry(iso: Isometry3) -> tuple[Isometry3, Isometry3]:
    """(orthogonal part with t = 0, translation part with Q = I); translation after orthogonal."""
    ort = Isometry3(iso.Q, np.zeros(3), iso.orientation)
    trans = Isometry3(np.eye(3), iso.t, 1)
    return ort, trans


def random_sphere_points(n: int, rng: np.random.Generator) -> np.ndarray:
    v = rng.normal(size=(n, 3))
    return v / np.linalg.norm(v, axis=1, keepdims=True)
