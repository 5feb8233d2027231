"""Dataset directories: sample files plus a manifest that fully reproduces them.

Manifest layout ("manifest.txt"): '#'-prefixed header lines carry the
generator parameters, then one line per sample:

    index=<n> seed=<u64> pose=<c|3d> alpha=<f> beta=<f> gamma=<f> signal=<path> labels=<path>

Angles are stored with full precision, so a 3d dataset re-renders
bit-identically from the manifest alone.
"""

from __future__ import annotations

import os
from dataclasses import dataclass

import numpy as np

from .errors import FormatError
from .grid import FeatureMap, LabelMap
from .rotation import RotationZYZ
from .scenes import GeneratorParams, build_scene_spec, render_scene, scene_rotation
from .sphio import read_labels, read_signal, write_labels, write_signal

_HEADER_TAG = "# schn-dataset v1"


@dataclass(frozen=True)
class SampleEntry:
    index: int
    seed: int
    pose: str
    alpha: float
    beta: float
    gamma: float
    signal: str
    labels: str

    def rotation(self) -> RotationZYZ | None:
        if self.pose == "c":
            return None
        return RotationZYZ(self.alpha, self.beta, self.gamma)


def build_dataset(n: int, seed: int, pose: str, out_dir, params: GeneratorParams | None = None) -> str:
    """Generate n samples and their manifest; fully reproducible from (seed, params)."""
    if pose not in ("c", "3d"):
        raise ValueError(f"pose must be 'c' or '3d', got {pose!r}")
    params = params or GeneratorParams()
    os.makedirs(out_dir, exist_ok=True)
    master = np.random.default_rng(int(seed))
    sample_seeds = master.integers(0, np.iinfo(np.int64).max, size=n)

    lines = [_HEADER_TAG]
    for key, value in params.to_dict().items():
        lines.append(f"# {key}={value}")
    try:
        for i in range(n):
            spec = build_scene_spec(int(sample_seeds[i]), params)
            rot = scene_rotation(int(sample_seeds[i]), i) if pose == "3d" else None
            fmap, lmap = render_scene(spec, rot)
            sig_name = f"sample_{i:05d}.sphs"
            lab_name = f"sample_{i:05d}.sphl"
            write_signal(fmap, os.path.join(out_dir, sig_name), dtype="f32")
            write_labels(lmap, os.path.join(out_dir, lab_name))
            a, b, g = (rot.alpha, rot.beta, rot.gamma) if rot else (0.0, 0.0, 0.0)
            lines.append(
                f"index={i} seed={int(sample_seeds[i])} pose={pose} "
                f"alpha={a!r} beta={b!r} gamma={g!r} signal={sig_name} labels={lab_name}"
            )
        manifest = os.path.join(out_dir, "manifest.txt")
        with open(manifest, "w") as fh:
            fh.write("\n".join(lines) + "\n")
    except OSError as exc:
        raise OSError(f"dataset build failed writing under {out_dir}: {exc}") from exc
    return manifest


class SceneDataset:
    """Manifest-backed sample access with optional exact re-rendering."""

    def __init__(self, directory):
        self.directory = str(directory)
        manifest = os.path.join(self.directory, "manifest.txt")
        if not os.path.exists(manifest):
            raise FormatError(f"no manifest.txt under {self.directory}")
        header: dict[str, str] = {}
        entries: list[SampleEntry] = []
        with open(manifest) as fh:
            first = fh.readline().rstrip("\n")
            if first != _HEADER_TAG:
                raise FormatError(f"unrecognized manifest header {first!r}")
            for line in fh:
                line = line.strip()
                if not line:
                    continue
                if line.startswith("#"):
                    key, _, value = line[1:].strip().partition("=")
                    header[key.strip()] = value.strip()
                    continue
                fields = dict(part.split("=", 1) for part in line.split())
                entries.append(
                    SampleEntry(
                        index=int(fields["index"]),
                        seed=int(fields["seed"]),
                        pose=fields["pose"],
                        alpha=float(fields["alpha"]),
                        beta=float(fields["beta"]),
                        gamma=float(fields["gamma"]),
                        signal=fields["signal"],
                        labels=fields["labels"],
                    )
                )
        self.entries = entries
        self.params = GeneratorParams.from_dict(header) if header else None

    def __len__(self) -> int:
        return len(self.entries)

    @property
    def B(self) -> int:
        if self.params is not None:
            return self.params.B
        return self.load_maps(0)[0].grid.B

    def load_maps(self, i: int) -> tuple[FeatureMap, LabelMap]:
        e = self.entries[i]
        fmap = read_signal(os.path.join(self.directory, e.signal))
        lmap = read_labels(os.path.join(self.directory, e.labels))
        return fmap, lmap

    def load(self, i: int) -> tuple[np.ndarray, np.ndarray]:
        """Sample as stored on disk: (3, 2B, 2B) float64 and (2B, 2B) int64."""
        fmap, lmap = self.load_maps(i)
        return fmap.values, lmap.labels

    def render(self, i: int, rot: RotationZYZ | None) -> tuple[np.ndarray, np.ndarray]:
        """Exact re-render of sample i under ``rot`` composed with its stored pose."""
        if self.params is None:
            raise FormatError("dataset manifest lacks generator parameters; cannot re-render")
        e = self.entries[i]
        spec = build_scene_spec(e.seed, self.params)
        base = e.rotation()
        if rot is None:
            total = base
        elif base is None:
            total = rot
        else:
            total = rot.compose(base)
        fmap, lmap = render_scene(spec, total)
        return fmap.values, lmap.labels
