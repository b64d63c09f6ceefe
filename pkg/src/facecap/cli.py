"""Command-line pipeline driver.

Each subcommand wraps one library operation, reads/writes the formats in
fileio, and echoes its fully-resolved settings next to its outputs so a
run can be reproduced from the artifacts alone.  All stages are
deterministic under a fixed seed: rerunning a command writes byte-
identical primary outputs.

Layout: `facecap <group> <operation> [flags]`, e.g. `facecap solve frame
--target t.png --rig rig.json ...`.  Shared flags: --config (JSON file
of flag defaults, keyed "<group> <operation>"), --seed, --workers,
--out-dir, --preview.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import fileio
from .errors import FacecapError
from .features import PartSpec, extract_all
from .fixtures import (default_camera, make_head, neutral_params,
                       project_landmarks, synthesize_footage,
                       turntable_params)
from .geom import LandmarkSet
from .index import IndexConfig, build_index, query
from .regressor import (RegressorBundle, TrainConfig, TrainSample,
                        infer, latent_code, train_stage1, train_stage2,
                        train_stage3)
from .render import Camera, rasterize, rasterize_uv
from .rig import PoseParams, evaluate
from .solver import SolveConfig, solve_frame, solve_sequence, blend_parameters
from .texture import PhotonMap, gather, merge, splat
from .transfer import SampleConfig, contract, expand, fit_pca_transfer, sample_dataset


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    if not hasattr(args, "handler"):
        parser.print_help()
        return 2
    _apply_config_file(args)
    try:
        args.handler(args)
    except (FacecapError, fileio.FormatError, ValueError, OSError) as exc:
        msg = {"stage": args.group, "operation": args.operation,
               "cause": str(exc)}
        print(f"error: {json.dumps(msg, sort_keys=True)}", file=sys.stderr)
        return 1
    return 0


# ---------------------------------------------------------------------------
# Shared plumbing
# ---------------------------------------------------------------------------

def _build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON file of flag defaults")
    common.add_argument("--seed", type=int, default=None)
    common.add_argument("--workers", type=int, default=1)
    common.add_argument("--out-dir", default=None)
    common.add_argument("--preview", action="store_true",
                        help="also write preview images")

    parser = argparse.ArgumentParser(
        prog="facecap",
        description="personalized facial capture pipeline")
    groups = parser.add_subparsers(dest="group")

    def op(group_sub, group: str, name: str, handler, **flag_specs):
        p = group_sub.add_parser(name, parents=[common])
        for flag, spec in flag_specs.items():
            p.add_argument("--" + flag.replace("_", "-"), **spec)
        p.set_defaults(handler=handler, group=group, operation=name)
        return p

    g = groups.add_parser("features").add_subparsers(dest="operation")
    op(g, "features", "extract", _features_extract,
       images_dir={"required": True},
       landmarks={"required": True, "help": "landmark tracks JSON"},
       template={"required": True},
       reference={"required": True, "help": "reference landmarks JSON"},
       out={"required": True})

    g = groups.add_parser("index").add_subparsers(dest="operation")
    op(g, "index", "build", _index_build,
       features={"required": True},
       branch={"default": "9,3", "help": "comma-separated branch factors"},
       out={"required": True})
    op(g, "index", "query", _index_query,
       index={"required": True},
       features={"required": True},
       row={"type": int, "default": 0},
       counts={"default": "2,3,1"},
       out={"required": True})

    g = groups.add_parser("rig").add_subparsers(dest="operation")
    op(g, "rig", "eval", _rig_eval,
       rig={"required": True}, mesh={"required": True},
       params={"required": True}, frame={"type": int, "default": 0},
       out={"required": True})

    g = groups.add_parser("render").add_subparsers(dest="operation")
    op(g, "render", "turntable", _render_turntable,
       rig={"required": True}, mesh={"required": True},
       texture={"required": True},
       camera={"default": None}, views={"type": int, "default": 12},
       size={"type": int, "default": 96},
       shaded={"action": "store_true"})

    g = groups.add_parser("texture").add_subparsers(dest="operation")
    for name in ("face", "head"):
        op(g, "texture", name, _texture_gather,
           frames_dir={"required": True},
           params={"required": True},
           rig={"required": True}, mesh={"required": True},
           camera={"required": True},
           resolution={"type": int, "default": 96},
           k={"type": int, "default": 8},
           cutoff={"type": float, "default": 0.05},
           out={"required": True})
    op(g, "texture", "merge", _texture_merge,
       face={"required": True}, head={"required": True},
       preference={"type": float, "default": 4.0},
       out={"required": True})

    g = groups.add_parser("dataset").add_subparsers(dest="operation")
    op(g, "dataset", "sample", _dataset_sample,
       rig={"required": True}, n={"type": int, "default": 500},
       out={"required": True})
    op(g, "dataset", "contract", _dataset_contract,
       synthetic={"required": True}, real={"required": True},
       fraction={"type": float, "default": 0.2},
       k_nn={"type": int, "default": 5},
       out={"required": True})
    op(g, "dataset", "expand", _dataset_expand,
       outliers={"required": True},
       bootstrap={"required": True, "help": "params JSON of solver seeds"},
       n_target={"type": int, "required": True},
       jitter={"default": "0.8,1.2"},
       out={"required": True})

    g = groups.add_parser("solve").add_subparsers(dest="operation")
    solve_flags = dict(
        rig={"required": True}, mesh={"required": True},
        texture={"required": True}, camera={"required": True},
        init={"default": None, "help": "params JSON; default frontal neutral"},
        supersample={"type": int, "default": 2},
        block_order={"default": "pose,jaw,expression"},
        step_rule={"default": "pattern"},
        epochs={"type": int, "default": 40},
        out={"required": True})
    op(g, "solve", "frame", _solve_frame,
       target={"required": True}, **solve_flags)
    op(g, "solve", "sequence", _solve_sequence,
       targets_dir={"required": True},
       warm_start={"action": "store_true"}, **solve_flags)

    g = groups.add_parser("blend").add_subparsers(dest="operation")
    op(g, "blend", "tracks", _blend_tracks,
       track_a={"required": True}, track_b={"required": True},
       lip_mask={"required": True, "help": "comma-separated control indices"},
       out={"required": True})

    g = groups.add_parser("regress").add_subparsers(dest="operation")
    op(g, "regress", "train", _regress_train,
       data_dir={"required": True, "help": "directory from fixtures generate"},
       latent_dim={"type": int, "default": 8},
       epochs={"type": int, "default": 60},
       learning_rate={"type": float, "default": 0.05})
    op(g, "regress", "infer", _regress_infer,
       bundle={"required": True}, transfer={"required": True},
       image={"required": True}, out={"required": True})

    g = groups.add_parser("fixtures").add_subparsers(dest="operation")
    op(g, "fixtures", "generate", _fixtures_generate,
       frames={"type": int, "default": 24},
       size={"type": int, "default": 96},
       views={"type": int, "default": 12})
    return parser


def _apply_config_file(args):
    """Fill unset flags from the config file section for this command."""
    if not args.config:
        return
    doc = json.loads(Path(args.config).read_text())
    section = doc.get(f"{args.group} {args.operation}", {})
    for key, value in section.items():
        attr = key.replace("-", "_")
        if getattr(args, attr, None) in (None, False):
            setattr(args, attr, value)


def _echo_config(args, directory: Path):
    """Write the resolved flag values next to the outputs."""
    skip = {"handler", "group", "operation", "config"}
    resolved = {k: v for k, v in sorted(vars(args).items()) if k not in skip}
    name = f"{args.group}-{args.operation}.config.json"
    directory.mkdir(parents=True, exist_ok=True)
    (directory / name).write_text(
        json.dumps(resolved, indent=1, sort_keys=True, default=str) + "\n")


def _out_dir_of(args, fallback: str) -> Path:
    d = Path(args.out_dir) if args.out_dir else Path(fallback)
    d.mkdir(parents=True, exist_ok=True)
    return d


def _prep_out(path) -> Path:
    p = Path(path)
    p.parent.mkdir(parents=True, exist_ok=True)
    return p


def _load_texture(path: str):
    path = str(path)
    if path.endswith(".json"):
        return fileio.load_seg_texture(path)
    return fileio.load_float_image(path)


def _load_image(path: str) -> np.ndarray:
    path = str(path)
    if path.endswith(".npy"):
        return fileio.load_float_image(path)
    return fileio.load_png(path)


def _frames_in(directory) -> list:
    files = sorted(p for p in Path(directory).iterdir()
                   if p.suffix in (".png", ".npy"))
    if not files:
        raise ValueError(f"no frames found in {directory}")
    return files


def _int_list(text: str) -> list:
    return [int(x) for x in str(text).split(",") if x != ""]


def _trace_plot(trace, size: int = 128) -> np.ndarray:
    """Loss trace rendered as a simple white-on-black polyline image."""
    img = np.zeros((size, size, 3))
    vals = np.asarray(trace, dtype=float)
    if len(vals) == 0:
        return img
    lo, hi = vals.min(), vals.max()
    span = hi - lo if hi > lo else 1.0
    ys = (size - 1) - ((vals - lo) / span * (size - 1)).astype(int)
    xs = np.linspace(0, size - 1, len(vals)).astype(int)
    for i in range(len(vals) - 1):
        n = max(abs(xs[i + 1] - xs[i]), abs(ys[i + 1] - ys[i])) + 1
        xi = np.linspace(xs[i], xs[i + 1], n).astype(int)
        yi = np.linspace(ys[i], ys[i + 1], n).astype(int)
        img[yi, xi] = 1.0
    return img


# ---------------------------------------------------------------------------
# features / index
# ---------------------------------------------------------------------------

def _features_extract(args):
    out = _prep_out(args.out)
    template = fileio.load_template(args.template)
    reference = fileio.load_landmarks(args.reference)
    parts = PartSpec.from_reference(reference)
    tracks = fileio.load_landmark_tracks(args.landmarks)
    frames = _frames_in(args.images_dir)
    if len(tracks) != len(frames):
        raise ValueError(f"{len(frames)} frames but {len(tracks)} landmark rows")
    records = []
    for i, (frame, track) in enumerate(zip(frames, tracks)):
        feats = extract_all(_load_image(frame), LandmarkSet(points=track),
                            template, parts)
        records.append((i, feats))
    fileio.save_feature_records(out, records)
    _echo_config(args, out.parent)
    print(f"extracted features for {len(records)} frames -> {out}")


def _index_build(args):
    records = fileio.load_feature_records(args.features)
    config = IndexConfig(branch_factors=tuple(_int_list(args.branch)),
                         kmeans_seed=args.seed or 0)
    root = build_index(records, config)
    out = _prep_out(args.out)
    fileio.save_index(out, root)
    _echo_config(args, out.parent)
    level_sizes = []
    nodes = [root]
    while nodes:
        level_sizes.append(len(nodes))
        nodes = [c for n in nodes for c in n.children]
    print(f"index over {len(records)} images, nodes per level "
          f"{level_sizes} -> {out}")


def _index_query(args):
    root = fileio.load_index(args.index)
    records = fileio.load_feature_records(args.features)
    if not 0 <= args.row < len(records):
        raise ValueError(f"row {args.row} outside 0..{len(records) - 1}")
    _, feats = records[args.row]
    counts = tuple(_int_list(args.counts))
    matches = query(root, feats, counts)
    out = _prep_out(args.out)
    doc = {"format": "facecap/query", "version": 1,
           "row": args.row, "counts": list(counts),
           "matches": [int(m) for m in matches]}
    out.write_text(json.dumps(doc, indent=1, sort_keys=True) + "\n")
    _echo_config(args, out.parent)
    print("matches:", " ".join(str(m) for m in matches))


# ---------------------------------------------------------------------------
# rig / render
# ---------------------------------------------------------------------------

def _rig_eval(args):
    rig = fileio.load_rig(args.rig)
    mesh = fileio.load_obj(args.mesh)
    frames = fileio.load_params(args.params)
    if not 0 <= args.frame < len(frames):
        raise ValueError(f"frame {args.frame} outside 0..{len(frames) - 1}")
    verts = evaluate(rig, frames[args.frame])
    posed = type(mesh)(vertices=verts, triangles=mesh.triangles, uvs=mesh.uvs)
    out = _prep_out(args.out)
    fileio.save_obj(out, posed)
    _echo_config(args, out.parent)
    print(f"evaluated frame {args.frame} -> {out}")


def _render_turntable(args):
    rig = fileio.load_rig(args.rig)
    mesh = fileio.load_obj(args.mesh)
    texture = _load_texture(args.texture)
    camera = (fileio.load_camera(args.camera) if args.camera
              else default_camera(args.size))
    out_dir = _out_dir_of(args, "turntable")
    views = turntable_params_for(rig, args.views)
    for i, params in enumerate(views):
        result = rasterize(mesh, camera, texture=texture, rig=rig,
                           params=params, shaded=args.shaded)
        fileio.save_png(out_dir / f"view_{i:03d}.png", result.image)
    fileio.save_params(out_dir / "turntable_params.json", views)
    _echo_config(args, out_dir)
    print(f"rendered {len(views)} turntable views -> {out_dir}")


def turntable_params_for(rig, n_views: int) -> list:
    yaws = np.linspace(-80.0, 80.0, n_views)
    return [PoseParams(yaw=float(y), w=np.zeros(rig.n_shapes)) for y in yaws]


# ---------------------------------------------------------------------------
# texture
# ---------------------------------------------------------------------------

def _texture_gather(args):
    rig = fileio.load_rig(args.rig)
    mesh = fileio.load_obj(args.mesh)
    camera = fileio.load_camera(args.camera)
    frames = _frames_in(args.frames_dir)
    track = fileio.load_params(args.params)
    if len(track) != len(frames):
        raise ValueError(f"{len(frames)} frames but {len(track)} parameter rows")
    pmap = PhotonMap.empty()
    for i, (frame, params) in enumerate(zip(frames, track)):
        uv, valid = rasterize_uv(mesh, camera, rig=rig, params=params)
        pmap = splat(_load_image(frame), uv, valid, pmap, source_id=i)
    tmap = gather(pmap, args.resolution, k=args.k, cutoff=args.cutoff)
    out = _prep_out(args.out)
    fileio.save_texture_map(out, tmap)
    _echo_config(args, out.parent)
    if args.preview:
        fileio.save_png(out.with_suffix(".color.png"), tmap.color)
        conf = tmap.confidence / tmap.confidence.max() if tmap.confidence.max() else tmap.confidence
        fileio.save_png(out.with_suffix(".confidence.png"), conf)
    covered = float(tmap.valid.mean())
    print(f"gathered {len(pmap)} samples into {args.resolution}x"
          f"{args.resolution} texture ({covered:.0%} covered) -> {out}")


def _texture_merge(args):
    face = fileio.load_texture_map(args.face)
    head = fileio.load_texture_map(args.head)
    merged = merge(face, head, preference=args.preference)
    out = _prep_out(args.out)
    fileio.save_texture_map(out, merged)
    _echo_config(args, out.parent)
    if args.preview:
        fileio.save_png(out.with_suffix(".color.png"), merged.color)
    print(f"merged textures ({float(merged.valid.mean()):.0%} covered) -> {out}")


# ---------------------------------------------------------------------------
# dataset
# ---------------------------------------------------------------------------

def _dataset_sample(args):
    rig = fileio.load_rig(args.rig)
    config = SampleConfig(n_samples=args.n, seed=args.seed or 0)
    params, _ = sample_dataset(rig, config)
    out = _prep_out(args.out)
    fileio.save_params(out, params)
    _echo_config(args, out.parent)
    print(f"sampled {len(params)} parameter sets -> {out}")


def _dataset_contract(args):
    synthetic = fileio.load_embeddings(args.synthetic)
    real = fileio.load_embeddings(args.real)
    kept, pruned = contract(synthetic, real, prune_fraction=args.fraction,
                            k_nn=args.k_nn)
    out = _prep_out(args.out)
    doc = {"format": "facecap/contraction", "version": 1,
           "kept": kept.tolist(), "pruned": pruned.tolist()}
    out.write_text(json.dumps(doc, indent=1, sort_keys=True) + "\n")
    _echo_config(args, out.parent)
    print(f"kept {len(kept)}, pruned {len(pruned)} -> {out}")


def _dataset_expand(args):
    fileio.load_embeddings(args.outliers)   # validated, documents the gaps
    bootstrap = [p.w for p in fileio.load_params(args.bootstrap)]
    lo, hi = (float(x) for x in args.jitter.split(","))
    grown, provenance = expand(None, bootstrap, args.n_target,
                               jitter_range=(lo, hi), seed=args.seed or 0)
    out = _prep_out(args.out)
    fileio.save_params(out, [PoseParams(w=w) for w in grown])
    prov_rows = [[str(p[0])] + [x.tolist() if isinstance(x, np.ndarray)
                                else x for x in p[1:]] for p in provenance]
    prov_path = out.with_suffix(".provenance.json")
    prov_path.write_text(json.dumps(
        {"format": "facecap/provenance", "version": 1, "rows": prov_rows},
        indent=1, sort_keys=True) + "\n")
    _echo_config(args, out.parent)
    print(f"expanded {len(bootstrap)} seeds to {len(grown)} samples -> {out}")


# ---------------------------------------------------------------------------
# solve / blend
# ---------------------------------------------------------------------------

def _solve_config(args) -> SolveConfig:
    return SolveConfig(block_order=tuple(args.block_order.split(",")),
                       step_rule=args.step_rule, epochs=args.epochs,
                       supersample=args.supersample, seed=args.seed or 0)


def _solve_inputs(args):
    rig = fileio.load_rig(args.rig)
    mesh = fileio.load_obj(args.mesh)
    texture = _load_texture(args.texture)
    camera = fileio.load_camera(args.camera)
    if args.init:
        init = fileio.load_params(args.init)[0]
    else:
        init = PoseParams(w=np.zeros(rig.n_shapes))
    return rig, mesh, texture, camera, init


def _solve_frame(args):
    rig, mesh, texture, camera, init = _solve_inputs(args)
    target = _load_image(args.target)
    result = solve_frame(target, rig, mesh, camera, texture, init,
                         config=_solve_config(args))
    out = _prep_out(args.out)
    fileio.save_params(out, result.params)
    report = {"format": "facecap/solve_report", "version": 1,
              "loss": float(result.loss),
              "trace": [float(x) for x in result.trace],
              "converged": bool(result.converged),
              "no_descent": bool(result.no_descent),
              "n_evals": int(result.n_evals)}
    out.with_suffix(".report.json").write_text(
        json.dumps(report, indent=1, sort_keys=True) + "\n")
    _echo_config(args, out.parent)
    if args.preview:
        render = rasterize(mesh, camera, texture=texture, rig=rig,
                           params=result.params, shaded=False,
                           supersample=args.supersample).image
        fileio.save_png(out.with_suffix(".render.png"), render)
        fileio.save_png(out.with_suffix(".diff.png"),
                        np.abs(render - np.asarray(target, dtype=float)))
        fileio.save_png(out.with_suffix(".trace.png"),
                        _trace_plot(result.trace))
    p = result.params
    print(f"solved: loss {result.loss:.3e}, pitch {p.pitch:.2f}, "
          f"yaw {p.yaw:.2f}, {result.n_evals} evals -> {out}")


def _solve_sequence(args):
    rig, mesh, texture, camera, init = _solve_inputs(args)
    targets = [_load_image(f) for f in _frames_in(args.targets_dir)]
    results = solve_sequence(targets, rig, mesh, camera, texture, init=init,
                             config=_solve_config(args),
                             parallel=not args.warm_start,
                             workers=args.workers)
    failed = [i for i, r in enumerate(results) if r.error]
    if failed:
        raise ValueError(f"frames {failed} failed: {results[failed[0]].error}")
    out = _prep_out(args.out)
    fileio.save_params(out, [r.params for r in results])
    _echo_config(args, out.parent)
    losses = [r.loss for r in results]
    print(f"solved {len(results)} frames, mean loss {np.mean(losses):.3e} -> {out}")


def _blend_tracks(args):
    track_a = fileio.load_params(args.track_a)
    track_b = fileio.load_params(args.track_b)
    blended = blend_parameters(track_a, track_b, _int_list(args.lip_mask))
    out = _prep_out(args.out)
    fileio.save_params(out, blended)
    _echo_config(args, out.parent)
    print(f"blended {len(blended)} frames -> {out}")


# ---------------------------------------------------------------------------
# regress
# ---------------------------------------------------------------------------

def _regress_train(args):
    data = Path(args.data_dir)
    out_dir = _out_dir_of(args, "regressor")
    rig = fileio.load_rig(data / "rig.json")
    jaw_idx = rig.jaw_control_indices
    expr_idx = [i for i in range(rig.n_shapes) if i not in jaw_idx]

    synth_imgs = [_load_image(f) for f in _frames_in(data / "synth")]
    synth_params = fileio.load_params(data / "synth" / "params.json")
    synth_marks = fileio.load_landmark_tracks(data / "synth" / "landmarks.json")
    real_imgs = [_load_image(f) for f in _frames_in(data / "footage")]
    real_marks = fileio.load_landmark_tracks(data / "footage" / "landmarks.json")

    transfer = fit_pca_transfer(real_imgs, synth_imgs, d=args.latent_dim)
    synth = [TrainSample(latent=latent_code(transfer, img),
                         landmarks=marks, pitch=p.pitch, yaw=p.yaw,
                         jaw=p.w[list(jaw_idx)], expression=p.w[expr_idx])
             for img, marks, p in zip(synth_imgs, synth_marks, synth_params)]
    real = [TrainSample(latent=latent_code(transfer, img), landmarks=marks)
            for img, marks in zip(real_imgs, real_marks)]

    bundle = RegressorBundle.create(transfer.latent_dim, rig.n_shapes,
                                    jaw_idx, seed=args.seed or 0)
    config = TrainConfig(epochs=args.epochs, learning_rate=args.learning_rate,
                         seed=args.seed or 0)
    train_stage1(bundle, synth, config)
    train_stage2(bundle, synth, config)
    train_stage3(bundle, synth, real, config)

    fileio.save_bundle(out_dir / "bundle.npz", bundle)
    fileio.save_transfer(out_dir / "transfer.npz", transfer)
    (out_dir / "history.json").write_text(
        json.dumps(bundle.history, indent=1, sort_keys=True) + "\n")
    _echo_config(args, out_dir)
    finals = {k: v[-1] for k, v in bundle.history.items()}
    print(f"trained 3 stages on {len(synth)}+{len(real)} samples, "
          f"final losses {finals} -> {out_dir}")


def _regress_infer(args):
    bundle = fileio.load_bundle(args.bundle)
    transfer = fileio.load_transfer(args.transfer)
    image = _load_image(args.image)
    params = infer(bundle, image, transfer)
    out = _prep_out(args.out)
    fileio.save_params(out, params)
    _echo_config(args, out.parent)
    print(f"inferred pitch {params.pitch:.2f}, yaw {params.yaw:.2f} -> {out}")


# ---------------------------------------------------------------------------
# fixtures
# ---------------------------------------------------------------------------

def _fixtures_generate(args):
    out_dir = _out_dir_of(args, "fixtures")
    seed = args.seed or 0
    head = make_head()
    camera = default_camera(args.size)

    fileio.save_obj(out_dir / "mesh.obj", head.mesh)
    fileio.save_rig(out_dir / "rig.json", head.rig)
    fileio.save_seg_texture(out_dir / "seg_texture.json", head.seg)
    fileio.save_float_image(out_dir / "rgb_texture.npy", head.texture)
    fileio.save_template(out_dir / "template.json", head.template)
    fileio.save_camera(out_dir / "camera.json", camera)
    reference = project_landmarks(head, neutral_params(head), camera)
    fileio.save_landmarks(out_dir / "reference_landmarks.json",
                          reference.points)

    # clean synthetic set, ground truth attached
    synth_dir = out_dir / "synth"
    synth_dir.mkdir(exist_ok=True)
    synth = synthesize_footage(head, args.frames, seed=seed, size=args.size,
                               shaded=False)
    for i, fr in enumerate(synth):
        fileio.save_png(synth_dir / f"frame_{i:03d}.png", fr.image)
    fileio.save_params(synth_dir / "params.json", [f.params for f in synth])
    fileio.save_landmark_tracks(synth_dir / "landmarks.json",
                                [f.landmarks.points for f in synth])

    # stand-in footage: shaded, lighting drift, noisy landmarks
    foot_dir = out_dir / "footage"
    foot_dir.mkdir(exist_ok=True)
    footage = synthesize_footage(head, args.frames, seed=seed + 1,
                                 size=args.size, shaded=True,
                                 landmark_noise=0.005)
    for i, fr in enumerate(footage):
        fileio.save_png(foot_dir / f"frame_{i:03d}.png", fr.image)
    fileio.save_params(foot_dir / "params.json", [f.params for f in footage])
    fileio.save_landmark_tracks(foot_dir / "landmarks.json",
                                [f.landmarks.points for f in footage])

    # neutral turntable for texture passes
    turn_dir = out_dir / "turntable"
    turn_dir.mkdir(exist_ok=True)
    views = turntable_params(head, n_views=args.views)
    for i, params in enumerate(views):
        img = rasterize(head.mesh, camera, texture=head.texture, rig=head.rig,
                        params=params, shaded=False).image
        fileio.save_png(turn_dir / f"view_{i:03d}.png", img)
    fileio.save_params(turn_dir / "params.json", views)

    _echo_config(args, out_dir)
    print(f"fixture set: mesh, rig, textures, template, camera, "
          f"{args.frames}+{args.frames} frames, {args.views} views -> {out_dir}")


if __name__ == "__main__":
    sys.exit(main())
