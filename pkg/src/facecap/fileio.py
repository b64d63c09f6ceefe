"""On-disk formats for every pipeline artifact.

Structured records (landmarks, parameter tracks, rigs, embeddings, the
retrieval index, segmentation textures) are JSON documents carrying a
"format" tag and integer "version"; floats serialize via repr, so
values round trip exactly.  Meshes use a minimal OBJ subset (v, vt, f
lines only).  Preview images are 8-bit PNG; float rasters are .npy;
regressor bundles, texture maps, and domain transfers are .npz archives.
All writers are deterministic: identical data produces identical bytes
(npz members are stored with a fixed zip timestamp).
"""

from __future__ import annotations

import io
import json
import zipfile
from pathlib import Path

import numpy as np
from PIL import Image

from .geom import TemplateModel
from .index import ClusterNode, node_from_dict, node_to_dict
from .regressor import Mlp, RegressorBundle
from .render import Camera, Mesh, SegTexture
from .rig import BlendshapeRig, PoseParams
from .texture import TextureMap
from .transfer import PcaTransfer

FORMAT_VERSION = 1


class FormatError(ValueError):
    """File does not match the expected facecap format/version."""


def _savez_deterministic(path, arrays: dict):
    """np.savez with a fixed member timestamp so reruns match byte for byte."""
    with zipfile.ZipFile(str(path), "w", zipfile.ZIP_STORED) as zf:
        for name in sorted(arrays):
            buf = io.BytesIO()
            np.lib.format.write_array(buf, np.asarray(arrays[name]))
            info = zipfile.ZipInfo(f"{name}.npy", date_time=(1980, 1, 1, 0, 0, 0))
            zf.writestr(info, buf.getvalue())


def _write_json(path, format_name: str, payload: dict):
    doc = {"format": f"facecap/{format_name}", "version": FORMAT_VERSION}
    doc.update(payload)
    Path(path).write_text(json.dumps(doc, indent=1, sort_keys=True) + "\n")


def _read_json(path, format_name: str) -> dict:
    doc = json.loads(Path(path).read_text())
    tag = doc.get("format")
    if tag != f"facecap/{format_name}":
        raise FormatError(f"{path}: expected facecap/{format_name}, got {tag}")
    if doc.get("version") != FORMAT_VERSION:
        raise FormatError(f"{path}: unsupported version {doc.get('version')}")
    return doc


# ---------------------------------------------------------------------------
# Landmarks, parameter tracks, embeddings
# ---------------------------------------------------------------------------

def save_landmarks(path, points: np.ndarray):
    points = np.asarray(points, dtype=float)
    _write_json(path, "landmarks", {"points": points.tolist()})


def load_landmarks(path) -> np.ndarray:
    return np.asarray(_read_json(path, "landmarks")["points"], dtype=float)


def save_params(path, frames):
    """Parameter track; accepts a single PoseParams or a sequence."""
    if isinstance(frames, PoseParams):
        frames = [frames]
    rows = [{"pitch": p.pitch, "yaw": p.yaw, "tx": p.tx, "ty": p.ty,
             "w": p.w.tolist()} for p in frames]
    _write_json(path, "params", {"frames": rows})


def load_params(path) -> list:
    doc = _read_json(path, "params")
    return [PoseParams(pitch=r["pitch"], yaw=r["yaw"], w=np.asarray(r["w"]),
                       tx=r["tx"], ty=r["ty"]) for r in doc["frames"]]


def save_embeddings(path, vectors: np.ndarray):
    vectors = np.atleast_2d(np.asarray(vectors, dtype=float))
    _write_json(path, "embeddings", {"vectors": vectors.tolist()})


def load_embeddings(path) -> np.ndarray:
    return np.asarray(_read_json(path, "embeddings")["vectors"], dtype=float)


def save_landmark_tracks(path, tracks):
    """Per-frame landmark arrays, each (68, 2) in [0,1] coordinates."""
    rows = [np.asarray(t, dtype=float).tolist() for t in tracks]
    _write_json(path, "landmark_tracks", {"tracks": rows})


def load_landmark_tracks(path) -> list:
    doc = _read_json(path, "landmark_tracks")
    return [np.asarray(t, dtype=float) for t in doc["tracks"]]


def save_feature_records(path, records):
    """Curation feature rows: (source_id, {kind: vector}) pairs."""
    rows = [{"source_id": int(sid),
             "features": {k: np.asarray(v, dtype=float).tolist()
                          for k, v in feats.items()}}
            for sid, feats in records]
    _write_json(path, "features", {"records": rows})


def load_feature_records(path) -> list:
    doc = _read_json(path, "features")
    return [(r["source_id"],
             {k: np.asarray(v, dtype=float) for k, v in r["features"].items()})
            for r in doc["records"]]


def save_template(path, template: TemplateModel):
    _write_json(path, "template", {
        "vertices": template.vertices.tolist(),
        "marker_indices": template.marker_indices.tolist(),
    })


def load_template(path) -> TemplateModel:
    doc = _read_json(path, "template")
    return TemplateModel(vertices=np.asarray(doc["vertices"], dtype=float),
                         marker_indices=np.asarray(doc["marker_indices"],
                                                   dtype=int))


def save_camera(path, camera: Camera):
    _write_json(path, "camera", {
        "width": camera.width, "height": camera.height, "kind": camera.kind,
        "focal": camera.focal, "scale": camera.scale,
        "eye": list(camera.eye), "target": list(camera.target),
        "up": list(camera.up),
    })


def load_camera(path) -> Camera:
    doc = _read_json(path, "camera")
    return Camera(width=doc["width"], height=doc["height"], kind=doc["kind"],
                  focal=doc["focal"], scale=doc["scale"],
                  eye=tuple(doc["eye"]), target=tuple(doc["target"]),
                  up=tuple(doc["up"]))


# ---------------------------------------------------------------------------
# Rig
# ---------------------------------------------------------------------------

def save_rig(path, rig: BlendshapeRig):
    """Deltas are stored sparsely: per shape, the touched vertex rows."""
    shapes = []
    for i in range(len(rig.deltas)):
        delta = rig.deltas[i]
        rows = np.nonzero(np.abs(delta).sum(axis=1) > 0)[0]
        shapes.append({"vertices": rows.tolist(),
                       "offsets": delta[rows].tolist()})
    _write_json(path, "rig", {
        "neutral": rig.neutral.tolist(),
        "shapes": shapes,
        "skin_weights": rig.skin_weights.tolist(),
        "jaw_rotations": rig.jaw_rotations.tolist(),
        "jaw_translations": rig.jaw_translations.tolist(),
        "jaw_control_indices": list(rig.jaw_control_indices),
    })


def load_rig(path) -> BlendshapeRig:
    doc = _read_json(path, "rig")
    neutral = np.asarray(doc["neutral"], dtype=float)
    deltas = np.zeros((len(doc["shapes"]),) + neutral.shape)
    for i, shape in enumerate(doc["shapes"]):
        rows = np.asarray(shape["vertices"], dtype=int)
        if len(rows):
            deltas[i, rows] = np.asarray(shape["offsets"], dtype=float)
    return BlendshapeRig(
        neutral=neutral, deltas=deltas,
        skin_weights=np.asarray(doc["skin_weights"], dtype=float),
        jaw_rotations=np.asarray(doc["jaw_rotations"], dtype=float),
        jaw_translations=np.asarray(doc["jaw_translations"], dtype=float),
        jaw_control_indices=tuple(doc["jaw_control_indices"]))


# ---------------------------------------------------------------------------
# Retrieval index, segmentation texture
# ---------------------------------------------------------------------------

def save_index(path, root: ClusterNode):
    _write_json(path, "index", {"tree": node_to_dict(root)})


def load_index(path) -> ClusterNode:
    return node_from_dict(_read_json(path, "index")["tree"])


def save_seg_texture(path, texture: SegTexture):
    _write_json(path, "seg_texture", {
        "labels": texture.labels.tolist(),
        "color_table": texture.color_table.tolist(),
    })


def load_seg_texture(path) -> SegTexture:
    doc = _read_json(path, "seg_texture")
    return SegTexture(labels=np.asarray(doc["labels"], dtype=np.int32),
                      color_table=np.asarray(doc["color_table"], dtype=float))


# ---------------------------------------------------------------------------
# Mesh OBJ subset
# ---------------------------------------------------------------------------

def save_obj(path, mesh: Mesh):
    """v/vt/f subset; faces index vertices and uvs together (1-based)."""
    lines = []
    for v in mesh.vertices.tolist():
        lines.append(f"v {v[0]!r} {v[1]!r} {v[2]!r}")
    for t in mesh.uvs.tolist():
        lines.append(f"vt {t[0]!r} {t[1]!r}")
    for f in mesh.triangles:
        a, b, c = (int(i) + 1 for i in f)
        lines.append(f"f {a}/{a} {b}/{b} {c}/{c}")
    Path(path).write_text("\n".join(lines) + "\n")


def load_obj(path) -> Mesh:
    verts, uvs, faces = [], [], []
    for ln, raw in enumerate(Path(path).read_text().splitlines(), start=1):
        parts = raw.split()
        if not parts or parts[0].startswith("#"):
            continue
        kind = parts[0]
        if kind == "v":
            verts.append([float(x) for x in parts[1:4]])
        elif kind == "vt":
            uvs.append([float(x) for x in parts[1:3]])
        elif kind == "f":
            if len(parts) != 4:
                raise FormatError(f"{path}:{ln}: only triangle faces supported")
            faces.append([int(p.split("/")[0]) - 1 for p in parts[1:]])
        else:
            raise FormatError(f"{path}:{ln}: unsupported OBJ element {kind!r}")
    verts = np.asarray(verts, dtype=float)
    if not uvs:
        uvs = np.zeros((len(verts), 2))
    return Mesh(vertices=verts, triangles=np.asarray(faces, dtype=int),
                uvs=np.asarray(uvs, dtype=float))


# ---------------------------------------------------------------------------
# Images
# ---------------------------------------------------------------------------

def save_png(path, image: np.ndarray):
    """Float [0,1] RGB (or grayscale) to 8-bit PNG."""
    arr = np.asarray(image, dtype=float)
    data = np.clip(np.rint(arr * 255.0), 0, 255).astype(np.uint8)
    Image.fromarray(data).save(str(path), format="PNG")


def load_png(path) -> np.ndarray:
    with Image.open(str(path)) as im:
        return np.asarray(im, dtype=float) / 255.0


def save_float_image(path, image: np.ndarray):
    np.save(str(path), np.asarray(image, dtype=np.float64))


def load_float_image(path) -> np.ndarray:
    return np.load(str(path))


def save_texture_map(path, tmap: TextureMap):
    _savez_deterministic(path, {"color": tmap.color,
                                "confidence": tmap.confidence,
                                "valid": tmap.valid})


def load_texture_map(path) -> TextureMap:
    with np.load(str(path)) as data:
        return TextureMap(color=data["color"], confidence=data["confidence"],
                          valid=data["valid"])


def save_transfer(path, transfer: PcaTransfer):
    _savez_deterministic(path, {
        "mean": transfer.mean, "basis": transfer.basis,
        "real_mean": transfer.real_mean, "real_basis": transfer.real_basis,
        "synth_mean": transfer.synth_mean, "synth_basis": transfer.synth_basis})


def load_transfer(path) -> PcaTransfer:
    with np.load(str(path)) as data:
        return PcaTransfer(mean=data["mean"], basis=data["basis"],
                           real_mean=data["real_mean"],
                           real_basis=data["real_basis"],
                           synth_mean=data["synth_mean"],
                           synth_basis=data["synth_basis"])


# ---------------------------------------------------------------------------
# Regressor bundle
# ---------------------------------------------------------------------------

def _net_arrays(prefix: str, net: Mlp) -> dict:
    out = {}
    for i, (w, b) in enumerate(zip(net.weights, net.biases)):
        out[f"{prefix}_w{i}"] = w
        out[f"{prefix}_b{i}"] = b
    return out


def _net_from_arrays(data, prefix: str, n_layers: int) -> Mlp:
    return Mlp(weights=[data[f"{prefix}_w{i}"] for i in range(n_layers)],
               biases=[data[f"{prefix}_b{i}"] for i in range(n_layers)])


def save_bundle(path, bundle: RegressorBundle):
    nets = {"pose": bundle.pose_net, "jaw": bundle.jaw_net,
            "expr": bundle.expr_net, "landmark": bundle.landmark_net}
    arrays = {}
    layers = {}
    for name, net in nets.items():
        arrays.update(_net_arrays(name, net))
        layers[name] = len(net.weights)
    meta = {"format": "facecap/bundle", "version": FORMAT_VERSION,
            "layers": layers,
            "jaw_indices": list(bundle.jaw_indices),
            "n_controls": bundle.n_controls,
            "pitch_range": list(bundle.pitch_range),
            "yaw_range": list(bundle.yaw_range)}
    arrays["meta"] = np.frombuffer(
        json.dumps(meta, sort_keys=True).encode(), dtype=np.uint8)
    _savez_deterministic(path, arrays)


def load_bundle(path) -> RegressorBundle:
    with np.load(str(path)) as data:
        meta = json.loads(bytes(data["meta"]).decode())
        if meta.get("format") != "facecap/bundle":
            raise FormatError(f"{path}: not a regressor bundle")
        if meta.get("version") != FORMAT_VERSION:
            raise FormatError(f"{path}: unsupported version {meta.get('version')}")
        nets = {name: _net_from_arrays(data, name, n)
                for name, n in meta["layers"].items()}
    return RegressorBundle(
        pose_net=nets["pose"], jaw_net=nets["jaw"], expr_net=nets["expr"],
        landmark_net=nets["landmark"],
        jaw_indices=tuple(meta["jaw_indices"]),
        n_controls=meta["n_controls"],
        pitch_range=tuple(meta["pitch_range"]),
        yaw_range=tuple(meta["yaw_range"]))
