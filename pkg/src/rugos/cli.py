"""Command-line interface: ``rugos synth|convert|prep|roughness|compare``."""

import argparse
import json
import sys
from pathlib import Path

from . import __version__
from .analysis import field_stats, render_report, timestamp
from .exceptions import InvalidConfig, RugosError
from .io import ASCII, BINARY_LITTLE_ENDIAN, parse_splat_ply, save_ply, save_xyz, splats_to_cloud
from .io.splat import CentersAll, DensitySampled, OpacityThreshold, retained_mask
from .parallel import default_workers, set_workers
from .pipeline import (
    PipelineManifest,
    Preprocess,
    StageError,
    check_radii_fit,
    load_input,
    prepare,
    run_manifest,
)
from .roughness import RoughnessConfig, attach_fields, compute_roughness_fields
from .synth import SurfaceSpec, generate

EXIT_ERROR = 2


def _write_cloud(cloud, path, ascii=False):
    path = Path(path)
    if path.suffix.lower() == ".ply":
        save_ply(cloud, path, ASCII if ascii else BINARY_LITTLE_ENDIAN)
    else:
        save_xyz(cloud, path, delimiter="," if path.suffix.lower() == ".csv" else " ")


def _write_json(path, payload):
    Path(path).write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n", encoding="utf-8")


def _parse_radii(text):
    try:
        radii = tuple(float(v) for v in text.split(",") if v.strip())
    except ValueError:
        raise InvalidConfig(f"radii must be comma-separated numbers, got {text!r}") from None
    if not radii:
        raise InvalidConfig("at least one radius is required")
    if any(r <= 0 for r in radii):
        raise InvalidConfig("radii must be positive")
    if any(b <= a for a, b in zip(radii, radii[1:])):
        raise InvalidConfig("radii must be strictly increasing")
    return radii


def cmd_synth(args):
    spec = SurfaceSpec.from_json(Path(args.spec).read_text(encoding="utf-8"))
    if args.seed is not None:
        spec = SurfaceSpec.from_dict({**spec.to_dict(), "seed": args.seed})
    cloud = generate(spec, name=Path(args.output).stem)
    _write_cloud(cloud, args.output, args.ascii)
    print(f"wrote {len(cloud)} points to {args.output}")
    return 0


def _conversion_mode(args):
    if args.centers_all:
        return CentersAll()
    if args.density_sampled is not None:
        return DensitySampled(args.density_sampled, seed=args.seed or 0, tau=args.opacity_threshold or 0.0)
    return OpacityThreshold(0.5 if args.opacity_threshold is None else args.opacity_threshold)


def cmd_convert(args):
    splats = parse_splat_ply(args.input)
    mode = _conversion_mode(args)
    cloud = splats_to_cloud(splats, mode, name=Path(args.input).stem)
    _write_cloud(cloud, args.output, args.ascii)
    if isinstance(mode, CentersAll):
        kept = len(splats)
    else:
        kept = int(retained_mask(splats, mode.tau).sum())
    print(f"retained {kept} of {len(splats)} splats; wrote {len(cloud)} points")
    return 0


def cmd_prep(args):
    cloud = load_input(args.input, seed=args.seed)
    crop_box = None
    if args.crop_box:
        crop_box = tuple(float(v) for v in args.crop_box.split(","))
    pre = Preprocess(align=args.align, normalize=args.normalize, crop=args.crop, crop_box=crop_box)
    cloud, info = prepare(cloud, pre)
    _write_cloud(cloud, args.output, args.ascii)
    info.update(
        input=str(args.input),
        output=str(args.output),
        output_points=len(cloud),
        timestamp=timestamp(args.fixed_clock),
        version=__version__,
    )
    sidecar = Path(args.output).with_suffix(".prep.json")
    _write_json(sidecar, info)
    print(f"wrote {len(cloud)} points to {args.output}; sidecar {sidecar}")
    return 0


def cmd_roughness(args):
    radii = _parse_radii(args.radii)
    cfg = RoughnessConfig(
        radii=radii,
        metric_variant=args.variant,
        min_neighbors=args.min_neighbors,
        include_self=not args.exclude_self,
    )
    cloud = load_input(args.input, seed=args.seed)
    check_radii_fit(cloud, cfg.radii)
    fields = compute_roughness_fields(cloud, cfg)
    _write_cloud(attach_fields(cloud, fields), args.output, args.ascii)
    out = Path(args.output)
    for f in fields:
        stats = field_stats(f)
        payload = {
            "field": f.name,
            "radius": f.radius,
            "metric_variant": f.metric_variant.value,
            "config": cfg.to_dict(),
            "input": str(args.input),
            "timestamp": timestamp(args.fixed_clock),
            **stats.to_dict(),
        }
        _write_json(out.with_name(f"{out.stem}.{f.name}.stats.json"), payload)
        print(
            f"{f.name}: mean {stats.mean:.6g}, defined {stats.defined_count}, "
            f"undefined {stats.undefined_count}"
        )
    return 0


def cmd_compare(args):
    manifest = PipelineManifest.load(args.manifest)
    report, results = run_manifest(manifest, seed=args.seed, fixed_clock=args.fixed_clock)
    text = render_report(report, args.format)
    if manifest.output_dir:
        out = Path(manifest.output_dir)
        out.mkdir(parents=True, exist_ok=True)
        for name, (cloud, _, info) in results.items():
            save_ply(cloud, out / f"{name}.ply")
            _write_json(out / f"{name}.prep.json", info)
        (out / "report.json").write_text(render_report(report, "json"), encoding="utf-8")
    if args.output:
        Path(args.output).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)
    return 0


def build_parser():
    p = argparse.ArgumentParser(
        prog="rugos",
        description="Multi-scale local roughness of reconstructed point clouds.",
    )
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    p.add_argument("--threads", type=int, default=None,
                   help="worker threads (default: $RUGOS_THREADS or all cores)")
    p.add_argument("--fixed-clock", action="store_true",
                   help="write a constant timestamp so outputs are byte-reproducible")
    p.add_argument("--seed", type=int, default=None, help="seed for random sampling")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("synth", help="generate a synthetic surface from a JSON spec")
    s.add_argument("spec")
    s.add_argument("output")
    s.add_argument("--ascii", action="store_true")
    s.set_defaults(func=cmd_synth)

    c = sub.add_parser("convert", help="convert a Gaussian-splat PLY to a point cloud")
    c.add_argument("input")
    c.add_argument("output")
    mode = c.add_mutually_exclusive_group()
    mode.add_argument("--centers-all", action="store_true")
    mode.add_argument("--density-sampled", type=float, metavar="SAMPLES_PER_SCALE")
    c.add_argument("--opacity-threshold", type=float, metavar="TAU",
                   help="minimum activated opacity (default 0.5)")
    c.add_argument("--ascii", action="store_true")
    c.set_defaults(func=cmd_convert)

    pr = sub.add_parser("prep", help="crop, align and normalize a cloud")
    pr.add_argument("input")
    pr.add_argument("output")
    pr.add_argument("--align", action="store_true", help="move the dominant plane to z = 0")
    pr.add_argument("--normalize", metavar="bbox|FACTOR",
                    help="'bbox' for unit bounding-box diagonal, or an explicit factor")
    pr.add_argument("--crop", metavar="POLYGON_FILE", help="XY polygon, one 'x y' per line")
    pr.add_argument("--crop-box", metavar="XMIN,YMIN,ZMIN,XMAX,YMAX,ZMAX")
    pr.add_argument("--ascii", action="store_true")
    pr.set_defaults(func=cmd_prep)

    r = sub.add_parser("roughness", help="compute roughness scalar fields")
    r.add_argument("input")
    r.add_argument("output")
    r.add_argument("--radii", default="0.2,0.4,0.6")
    r.add_argument("--variant", choices=["mad", "p2p"], default="mad")
    r.add_argument("--min-neighbors", type=int, default=4)
    r.add_argument("--exclude-self", action="store_true",
                   help="leave each point out of its own neighborhood")
    r.add_argument("--ascii", action="store_true")
    r.set_defaults(func=cmd_roughness)

    cm = sub.add_parser("compare", help="run a manifest and report a comparison")
    cm.add_argument("manifest")
    cm.add_argument("--format", choices=["json", "csv", "md"], default="md")
    cm.add_argument("--output", help="write the report here instead of stdout")
    cm.set_defaults(func=cmd_compare)
    return p


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        set_workers(args.threads if args.threads is not None else default_workers())
        return args.func(args)
    except FileNotFoundError as e:
        print(f"error: file not found: {e.filename or e}", file=sys.stderr)
    except StageError as e:
        print(f"error: {e}", file=sys.stderr)
    except (RugosError, OSError, ValueError) as e:
        print(f"error: {type(e).__name__}: {e}", file=sys.stderr)
    return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
