"""Synthetic spherical segmentation scenes and sky-box ingestion.

A scene is parametric geometry on the unit sphere: a sky cap around +z, a
floor cap around -z, and small object caps in the mid-latitude band,
painted over a background.  Inputs are per-class base colors plus a
low-frequency illumination field and grid-space sensor noise.  The
canonical pose is strongly anisotropic (sky up, floor down, objects at
eye level), which is exactly what a rotation test must generalize away
from.

Two deliberate ambiguities force the networks to use geometry rather than
color lookups: sky and floor share one appearance and differ only in
angular width, so an orientation-blind model must measure region extent,
while an upright-trained planar model that keys on image rows breaks
under rotation.

Rotated samples are produced by rotating the geometry and re-rendering,
so labels carry no interpolation error; the illumination field rotates
spectrally and the sensor noise stays fixed to the grid.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from .grid import FeatureMap, LabelMap, make_grid
from .harmonics import synthesis_array
from .rotation import RotationZYZ, grid_directions, haar_rotation, rotate_coeffs_array

_GEOMETRY_STREAM = 101
_NOISE_STREAM = 202
_ROTATION_STREAM = 303

DEG = np.pi / 180.0


@dataclass(frozen=True)
class GeneratorParams:
    """Knobs of the scene distribution; defaults are the calibrated desk task."""

    B: int = 32
    num_classes: int = 6
    noise_sigma: float = 0.03
    illum_amplitude: float = 0.15
    illum_bandlimit: int = 4
    sky_radius_range: tuple = (15.0 * DEG, 22.0 * DEG)
    floor_radius_range: tuple = (28.0 * DEG, 38.0 * DEG)
    cap_radius_range: tuple = (12.0 * DEG, 26.0 * DEG)
    cap_theta_range: tuple = (60.0 * DEG, 120.0 * DEG)
    max_extra_caps: int = 2
    color_jitter: float = 0.04

    def __post_init__(self):
        if self.num_classes < 4:
            raise ValueError("need at least 4 classes: background, floor, sky, one object")
        if self.B < 4:
            raise ValueError("bandlimit too small for scene rendering")
        lo, hi = self.cap_radius_range
        if lo < 10.0 * DEG or hi > 60.0 * DEG:
            raise ValueError("cap radii must stay within [10, 60] degrees")

    def to_dict(self) -> dict:
        return {
            "B": self.B,
            "num_classes": self.num_classes,
            "noise_sigma": self.noise_sigma,
            "illum_amplitude": self.illum_amplitude,
            "illum_bandlimit": self.illum_bandlimit,
            "sky_radius_range": ",".join(repr(v) for v in self.sky_radius_range),
            "floor_radius_range": ",".join(repr(v) for v in self.floor_radius_range),
            "cap_radius_range": ",".join(repr(v) for v in self.cap_radius_range),
            "cap_theta_range": ",".join(repr(v) for v in self.cap_theta_range),
            "max_extra_caps": self.max_extra_caps,
            "color_jitter": self.color_jitter,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "GeneratorParams":
        def pair(s):
            a, b = str(s).split(",")
            return (float(a), float(b))

        return cls(
            B=int(d["B"]),
            num_classes=int(d["num_classes"]),
            noise_sigma=float(d["noise_sigma"]),
            illum_amplitude=float(d["illum_amplitude"]),
            illum_bandlimit=int(d["illum_bandlimit"]),
            sky_radius_range=pair(d["sky_radius_range"]),
            floor_radius_range=pair(d["floor_radius_range"]),
            cap_radius_range=pair(d["cap_radius_range"]),
            cap_theta_range=pair(d["cap_theta_range"]),
            max_extra_caps=int(d["max_extra_caps"]),
            color_jitter=float(d["color_jitter"]),
        )


def class_palette(num_classes: int) -> np.ndarray:
    """Base colors: background, floor, sky (same as floor), then objects."""
    base = [
        (0.35, 0.50, 0.65),  # background
        (0.62, 0.60, 0.58),  # floor
        (0.62, 0.60, 0.58),  # sky: identical to floor on purpose
        (0.85, 0.25, 0.20),
        (0.20, 0.75, 0.30),
        (0.85, 0.75, 0.15),
    ]
    while len(base) < num_classes:
        h = 2.399963 * len(base)  # golden-angle hue spacing for extra objects
        base.append(tuple(0.5 + 0.4 * np.cos(h + 2 * np.pi * k / 3) for k in range(3)))
    return np.array(base[:num_classes])


@dataclass
class SceneSpec:
    """Full parametric description of one scene (canonical pose)."""

    seed: int
    params: GeneratorParams
    sky_radius: float
    floor_radius: float
    caps: list  # (unit center xyz, radius, class_id) in paint order
    appearance: np.ndarray  # (num_classes, 3) base values
    illum_coeffs: np.ndarray  # flat triangular complex, bandlimit illum_bandlimit

    def __post_init__(self):
        for center, _, _ in self.caps:
            if abs(np.linalg.norm(center) - 1.0) > 1e-12:
                raise ValueError("cap centers must be unit vectors")


def build_scene_spec(seed: int, params: GeneratorParams) -> SceneSpec:
    rng = np.random.default_rng([_GEOMETRY_STREAM, int(seed)])
    sky_radius = rng.uniform(*params.sky_radius_range)
    floor_radius = rng.uniform(*params.floor_radius_range)

    object_classes = list(range(3, params.num_classes))
    cap_classes = object_classes + list(
        rng.choice(object_classes, size=int(rng.integers(0, params.max_extra_caps + 1)))
    )
    caps = []
    for cls in cap_classes:
        theta = rng.uniform(*params.cap_theta_range)
        phi = rng.uniform(0.0, 2.0 * np.pi)
        radius = rng.uniform(*params.cap_radius_range)
        center = np.array([np.sin(theta) * np.cos(phi), np.sin(theta) * np.sin(phi), np.cos(theta)])
        center /= np.linalg.norm(center)
        caps.append((center, float(radius), int(cls)))
    order = rng.permutation(len(caps))
    caps = [caps[i] for i in order]

    jitter = rng.uniform(-params.color_jitter, params.color_jitter, size=(params.num_classes, 3))
    jitter[2] = jitter[1]  # sky and floor stay indistinguishable by color
    appearance = np.clip(class_palette(params.num_classes) + jitter, 0.0, 1.0)

    Bi = params.illum_bandlimit
    coeffs = rng.standard_normal(Bi * Bi) + 1j * rng.standard_normal(Bi * Bi)
    for l in range(Bi):  # conjugate symmetry so the field is real
        block = coeffs[l * l : (l + 1) * (l + 1)]
        block[l] = block[l].real
        ms = np.arange(1, l + 1)
        block[:l] = (((-1.0) ** ms) * np.conj(block[l + 1 :]))[::-1]
    total = np.sqrt(np.sum(np.abs(coeffs) ** 2))
    coeffs *= params.illum_amplitude * np.sqrt(4.0 * np.pi) / max(total, 1e-12)

    return SceneSpec(
        seed=int(seed),
        params=params,
        sky_radius=float(sky_radius),
        floor_radius=float(floor_radius),
        caps=caps,
        appearance=appearance,
        illum_coeffs=coeffs,
    )


def render_scene(spec: SceneSpec, rot: RotationZYZ | None = None) -> tuple[FeatureMap, LabelMap]:
    """Render geometry under an optional rotation; labels are re-painted
    from the rotated geometry, never resampled."""
    p = spec.params
    grid = make_grid(p.B)
    n = grid.n
    dirs = grid_directions(grid)
    identity = rot is None or (rot.alpha == 0.0 and rot.beta == 0.0 and rot.gamma == 0.0)
    R = None if identity else rot.matrix()

    sky_axis = np.array([0.0, 0.0, 1.0])
    floor_axis = np.array([0.0, 0.0, -1.0])
    if R is not None:
        sky_axis = R @ sky_axis
        floor_axis = R @ floor_axis

    labels = np.zeros((n, n), dtype=np.int64)
    labels[dirs @ floor_axis >= np.cos(spec.floor_radius)] = 1
    labels[dirs @ sky_axis >= np.cos(spec.sky_radius)] = 2
    for center, radius, cls in spec.caps:
        c = R @ center if R is not None else center
        labels[dirs @ c >= np.cos(radius)] = cls

    illum_c = spec.illum_coeffs if identity else rotate_coeffs_array(spec.illum_coeffs, p.illum_bandlimit, rot)
    Bi = p.illum_bandlimit
    pad = np.zeros(p.B * p.B, dtype=np.complex128)
    pad[: Bi * Bi] = illum_c
    illum = synthesis_array(pad, p.B)

    noise_rng = np.random.default_rng([_NOISE_STREAM, spec.seed])
    noise = p.noise_sigma * noise_rng.standard_normal((3, n, n))

    values = spec.appearance[labels].transpose(2, 0, 1) + illum[None] + noise
    return FeatureMap(grid, values), LabelMap(grid, labels, p.num_classes)


def sample_scene(seed: int, params: GeneratorParams) -> tuple[FeatureMap, LabelMap, SceneSpec]:
    """Deterministic canonical-pose scene for one seed."""
    spec = build_scene_spec(seed, params)
    fmap, lmap = render_scene(spec, None)
    return fmap, lmap, spec


def rotate_scene(spec: SceneSpec, rot: RotationZYZ) -> tuple[FeatureMap, LabelMap]:
    """Exact arbitrarily-oriented render of an existing scene."""
    return render_scene(spec, rot)


def scene_rotation(seed: int, index: int) -> RotationZYZ:
    """Haar rotation tied to (seed, sample index); used by 3d datasets and eval."""
    return haar_rotation(np.random.default_rng([_ROTATION_STREAM, int(seed), int(index)]))


# ---------------------------------------------------------------------------
# sky-box ingestion

FACE_NAMES = ("front", "back", "left", "right", "up", "down")


@dataclass
class CubeFaceSet:
    """Six square 8-bit RGB faces: front +x, back -x, left +y, right -y, up +z, down -z."""

    front: np.ndarray
    back: np.ndarray
    left: np.ndarray
    right: np.ndarray
    up: np.ndarray
    down: np.ndarray

    def __post_init__(self):
        shapes = set()
        for name in FACE_NAMES:
            face = getattr(self, name)
            if face is None:
                raise ValueError(f"missing cube face {name!r}")
            face = np.asarray(face)
            if face.ndim != 3 or face.shape[2] != 3 or face.shape[0] != face.shape[1]:
                raise ValueError(f"face {name!r} must be square RGB, got {face.shape}")
            shapes.add(face.shape)
            setattr(self, name, face)
        if len(shapes) != 1:
            raise ValueError(f"cube faces disagree in size: {sorted(shapes)}")

    @property
    def size(self) -> int:
        return self.front.shape[0]


def _bilinear(face: np.ndarray, u: np.ndarray, v: np.ndarray) -> np.ndarray:
    """Sample face at (u, v) in [-1, 1]^2; u along columns, v along rows."""
    S = face.shape[0]
    px = np.clip((u + 1.0) * 0.5 * S - 0.5, 0.0, S - 1.0)
    py = np.clip((v + 1.0) * 0.5 * S - 0.5, 0.0, S - 1.0)
    x0 = np.floor(px).astype(np.int64)
    y0 = np.floor(py).astype(np.int64)
    x1 = np.minimum(x0 + 1, S - 1)
    y1 = np.minimum(y0 + 1, S - 1)
    fx = (px - x0)[..., None]
    fy = (py - y0)[..., None]
    f = face.astype(np.float64)
    top = f[y0, x0] * (1 - fx) + f[y0, x1] * fx
    bot = f[y1, x0] * (1 - fx) + f[y1, x1] * fx
    return top * (1 - fy) + bot * fy


def cubemap_to_sphere(faces: CubeFaceSet, B: int) -> FeatureMap:
    """Gnomonic pull-back of a sky-box onto the sphere grid, scaled to [0, 1].

    Each direction samples the face of its dominant axis; (0, 0, 1) hits
    the center of the "up" face.
    """
    grid = make_grid(B)
    dirs = grid_directions(grid)
    x, y, z = dirs[..., 0], dirs[..., 1], dirs[..., 2]
    ax, ay, az = np.abs(x), np.abs(y), np.abs(z)
    out = np.zeros((grid.n, grid.n, 3))

    # (mask, face, u, v) per cube side; u/v chosen so each face is a
    # gnomonic chart with v increasing toward -z (image rows run downward)
    charts = (
        ((ax >= ay) & (ax >= az) & (x > 0), faces.front, lambda: y / x, lambda: -z / ax),
        ((ax >= ay) & (ax >= az) & (x <= 0), faces.back, lambda: y / x, lambda: -z / ax),
        ((ay > ax) & (ay >= az) & (y > 0), faces.left, lambda: -x / y, lambda: -z / ay),
        ((ay > ax) & (ay >= az) & (y <= 0), faces.right, lambda: -x / y, lambda: -z / ay),
        ((az > ax) & (az > ay) & (z > 0), faces.up, lambda: y / z, lambda: x / az),
        ((az > ax) & (az > ay) & (z <= 0), faces.down, lambda: y / z, lambda: -x / az),
    )
    with np.errstate(divide="ignore", invalid="ignore"):
        for mask, face, fu, fv in charts:
            if not np.any(mask):
                continue
            u = fu()[mask]
            v = fv()[mask]
            out[mask] = _bilinear(face, u, v)
    return FeatureMap(grid, (out / 255.0).transpose(2, 0, 1).copy())
