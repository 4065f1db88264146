"""Command-line surface.

Subcommands:

* ``matte``      full pipeline over a scene manifest; writes per-instance
                 alpha mattes and RGBA cut-outs (plus per-pass trimaps and
                 alphas with ``--history``, composites with ``--background``)
* ``composite``  layer alpha mattes of one image over a new background
* ``synth``      emit a synthetic scene (image, ground-truth alpha, coarse
                 mask, manifest) for evaluation
* ``eval``       score a matte against ground truth

Exit codes: 0 success, 1 at least one instance failed while the rest
completed, 2 invalid input.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import io
from .composite import FIXTURE_KINDS, layer_composite, make_fixture, make_synthetic, metrics, extract_rgba
from .core import TRIMAP_UNKNOWN
from .errors import MatteError
from .manifest import load_scene
from .matting import SolverParams, make_backend
from .pipeline import InstanceFailure, PipelineConfig, matte_all
from .trimap import TrimapParams


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="instamatte",
        description="Automatic instance matting and compositing.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("matte", help="matte every instance of an annotated scene")
    p.add_argument("--image", required=True, help="input RGB PNG")
    p.add_argument("--manifest", required=True, help="scene manifest JSON")
    p.add_argument("--labels", default=None, help="comma-separated class labels to keep")
    p.add_argument("--min-score", type=float, default=0.0, help="drop detections below this score")
    p.add_argument("--passes", type=int, default=4, help="feedback passes")
    p.add_argument("--k", type=int, default=10, help="sampling rounds per pass")
    p.add_argument("--patch", type=int, default=320, help="patch size in pixels")
    p.add_argument("--working", type=int, default=640, help="working resolution")
    p.add_argument("--rate", type=float, default=0.10, help="initial dilation rate")
    p.add_argument("--decay", type=float, default=0.5, help="per-pass dilation decay")
    p.add_argument("--hi", type=float, default=0.95, help="alpha threshold seeding foreground")
    p.add_argument("--lo", type=float, default=0.05, help="alpha threshold seeding background")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--history", action="store_true", help="also write per-pass trimaps and alphas")
    p.add_argument("--backend", default="reference", help="'reference' or 'exec:<command>'")
    p.add_argument("--background", default=None, help="optional background PNG for composites")
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(func=cmd_matte)

    p = sub.add_parser("composite", help="layer alpha mattes over a new background")
    p.add_argument("--image", required=True)
    p.add_argument("--alphas", nargs="+", required=True, help="alpha matte PNGs, bottom to top")
    p.add_argument("--background", required=True)
    p.add_argument("--out", required=True, help="output PNG")
    p.set_defaults(func=cmd_composite)

    p = sub.add_parser("synth", help="generate a synthetic evaluation scene")
    p.add_argument("--kind", choices=FIXTURE_KINDS, default="disk")
    p.add_argument("--perturb", type=int, default=3, help="max coarse-mask perturbation radius")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("eval", help="score an alpha matte against ground truth")
    p.add_argument("--alpha", required=True)
    p.add_argument("--gt", required=True)
    p.add_argument("--region", choices=("unknown", "all"), default="unknown")
    p.add_argument("--trimap", default=None, help="trimap PNG (required for --region unknown)")
    p.add_argument("--json", action="store_true", help="emit a JSON document")
    p.set_defaults(func=cmd_eval)
    return parser


def cmd_matte(args) -> int:
    image, annotations = load_scene(args.manifest, args.image)
    cfg = PipelineConfig(
        passes=args.passes,
        samples_k=args.k,
        patch_size=args.patch,
        working_size=(args.working, args.working),
        initial_rate=args.rate,
        rate_decay=args.decay,
        trimap_params=TrimapParams(args.rate, args.hi, args.lo),
        solver=SolverParams(),
        seed=args.seed,
    )
    backend = make_backend(args.backend, cfg.solver)
    labels = [s for s in args.labels.split(",") if s] if args.labels else None
    background = io.read_rgb(args.background) if args.background else None

    results = matte_all(
        image,
        annotations,
        cfg,
        backend=backend,
        labels=labels,
        min_score=args.min_score,
        history=args.history,
    )

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    stem = Path(args.image).stem
    failures = 0
    finished = []
    for result in results:
        if isinstance(result, InstanceFailure):
            failures += 1
            print(f"instance {result.instance_id!r} failed: {result.message}", file=sys.stderr)
            continue
        prefix = out / f"{stem}_inst{result.instance_id}"
        io.write_alpha(f"{prefix}_alpha.png", result.final_alpha)
        io.write_rgba(f"{prefix}_rgba.png", extract_rgba(image, result.final_alpha))
        if result.per_pass:
            for k, (trimap, alpha) in enumerate(result.per_pass, start=1):
                io.write_trimap(f"{prefix}_trimap_p{k}.png", trimap)
                io.write_alpha(f"{prefix}_alpha_p{k}.png", alpha)
        if background is not None:
            io.write_rgb(
                f"{prefix}_composite.png",
                layer_composite(image, [result.final_alpha], background),
            )
        finished.append(result)

    if background is not None and finished:
        io.write_rgb(
            out / f"{stem}_composite.png",
            layer_composite(image, [r.final_alpha for r in finished], background),
        )
    print(f"matted {len(finished)} instance(s), {failures} failure(s) -> {out}")
    return 1 if failures else 0


def cmd_composite(args) -> int:
    image = io.read_rgb(args.image)
    background = io.read_rgb(args.background)
    mattes = [io.read_alpha(p) for p in args.alphas]
    io.write_rgb(args.out, layer_composite(image, mattes, background))
    print(f"wrote {args.out}")
    return 0


def cmd_synth(args) -> int:
    fg_rgba, bg = make_fixture(args.kind)
    image, gt_alpha, coarse, _ = make_synthetic(fg_rgba, bg, args.perturb, args.seed)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    io.write_rgb(out / "image.png", image)
    io.write_alpha(out / "gt_alpha.png", gt_alpha)
    io.write_mask(out / "mask.png", coarse)
    manifest = {
        "image_path": "image.png",
        "instances": [{"id": 1, "label": args.kind, "score": 1.0, "mask": "mask.png"}],
    }
    (out / "manifest.json").write_text(json.dumps(manifest, indent=2) + "\n")
    print(f"wrote synthetic '{args.kind}' scene -> {out}")
    return 0


def cmd_eval(args) -> int:
    alpha = io.read_alpha(args.alpha)
    gt = io.read_alpha(args.gt)
    if args.region == "unknown":
        if args.trimap is None:
            raise MatteError("--region unknown needs --trimap (or pass --region all)")
        region = io.read_trimap(args.trimap) == TRIMAP_UNKNOWN
    else:
        region = np.ones(gt.shape, dtype=bool)
    report = metrics(alpha, gt, region, region_label=args.region)
    if args.json:
        print(json.dumps(report.to_json_dict(), indent=2))
    else:
        sys.stdout.write(report.to_text())
    return 0


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except MatteError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
