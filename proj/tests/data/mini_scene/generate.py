"""Regenerates the mini-scene fixture: a 200-point cloud in a source frame,
five cameras observed in both frames, and the target-frame bounding box."""

import json
import pathlib

import numpy as np

HERE = pathlib.Path(__file__).resolve().parent
rng = np.random.default_rng(20240601)

scale = 1.5
axis = np.array([1.0, 2.0, 3.0]) / np.linalg.norm([1.0, 2.0, 3.0])
angle = np.deg2rad(40.0)
K = np.array([[0, -axis[2], axis[1]], [axis[2], 0, -axis[0]], [-axis[1], axis[0], 0]])
rotation = np.eye(3) + np.sin(angle) * K + (1 - np.cos(angle)) * K @ K
translation = np.array([0.3, -0.7, 1.2])


def to_target(p):
    return scale * p @ rotation.T + translation


# Target-frame points in [-4, 4]^3, pairwise spacing >= 0.2.
target = []
while len(target) < 200:
    c = rng.uniform(-4.0, 4.0, 3)
    if all(np.linalg.norm(c - q) >= 0.2 for q in target):
        target.append(c)
target = np.array(target)
source = ((target - translation) @ rotation) / scale
source = source.astype(np.float32)

colors = rng.integers(0, 256, (200, 3), dtype=np.uint8)
normals = rng.normal(size=(200, 3))
normals = (normals / np.linalg.norm(normals, axis=1, keepdims=True)).astype(np.float32)

vertex = np.zeros(200, dtype=[("x", "<f4"), ("y", "<f4"), ("z", "<f4"),
                              ("nx", "<f4"), ("ny", "<f4"), ("nz", "<f4"),
                              ("red", "u1"), ("green", "u1"), ("blue", "u1")])
for i, k in enumerate("xyz"):
    vertex[k] = source[:, i]
    vertex["n" + k] = normals[:, i]
for i, k in enumerate(("red", "green", "blue")):
    vertex[k] = colors[:, i]
header = ("ply\nformat binary_little_endian 1.0\ncomment mini scene fixture\nelement vertex 200\n"
          "property float x\nproperty float y\nproperty float z\n"
          "property float nx\nproperty float ny\nproperty float nz\n"
          "property uchar red\nproperty uchar green\nproperty uchar blue\nend_header\n")
(HERE / "scene.ply").write_bytes(header.encode() + vertex.tobytes())

cam_src = np.array([[0.0, 0.0, 0.0], [3.0, 0.5, -1.0], [-2.0, 2.5, 1.0], [1.0, -3.0, 2.0], [0.5, 1.0, -3.5]])
cam_dst = to_target(cam_src)
ids = [f"cam{i}" for i in range(5)]
(HERE / "cameras_src.json").write_text(json.dumps(
    [{"id": i, "center": c.tolist()} for i, c in zip(ids, cam_src)], indent=2) + "\n")
# Target order differs from source order; matching is by id.
order = [3, 0, 4, 1, 2]
(HERE / "cameras_dst.json").write_text(json.dumps(
    [{"id": ids[k], "center": cam_dst[k].tolist()} for k in order], indent=2) + "\n")

expected_points = to_target(source.astype(np.float64))
(HERE / "expected.json").write_text(json.dumps({
    "scale": scale,
    "rotation": rotation.tolist(),
    "translation": translation.tolist(),
    "bbox_min": expected_points.min(axis=0).tolist(),
    "bbox_max": expected_points.max(axis=0).tolist(),
    "final_count": 200,
}, indent=2) + "\n")

(HERE / "config.json").write_text(json.dumps({
    "alignment": "sim3",
    "prune": {"tau0": 0.005, "beta": 0.01, "iterations": 6, "min_keep_fraction": 0.3,
              "voxel_size": 0.01, "seed": 42},
    "paths": {"input_ply": "scene.ply", "src_cameras": "cameras_src.json",
              "dst_cameras": "cameras_dst.json"},
}, indent=2) + "\n")
