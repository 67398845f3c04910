"""Command line entry point: ``drcount <command>``.

Exit codes: 0 success, 1 validation or evaluation failure, 2 bad config.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

import numpy as np

from .assets import AssetError
from .config import ConfigError, config_from_dict, load_config
from .metrics import evaluate
from .pipeline import generate_dataset, render_image, validate_dataset
from .render import save_png

EXIT_OK, EXIT_FAIL, EXIT_CONFIG = 0, 1, 2


def _load(path):
    """A config file, or a manifest whose snapshot is replayed."""
    p = Path(path)
    if p.suffix == ".json" and p.is_file():
        try:
            data = json.loads(p.read_text())
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{p}: cannot parse ({exc})") from exc
        if isinstance(data, dict) and "records" in data and "config" in data:
            return config_from_dict(data["config"], base_dir=p.parent)
    return load_config(p)


def cmd_generate(args) -> int:
    config = _load(args.config)
    if args.size is not None:
        config.size = args.size
        config.validate()

    def progress(done, total):
        if args.verbose or done == total:
            print(f"\r{done}/{total} images", end="\n" if done == total else "", file=sys.stderr)

    manifest = generate_dataset(config, args.out, seed=args.seed, workers=args.workers,
                                progress=progress)
    print(f"wrote {len(manifest['records'])} records to {Path(args.out) / 'manifest.json'}")
    return EXIT_OK


def cmd_validate(args) -> int:
    report = validate_dataset(args.manifest)
    print(report.format())
    return EXIT_OK if report.ok else EXIT_FAIL


def cmd_evaluate(args) -> int:
    try:
        report = evaluate(args.predictions, args.manifest)
    except (ValueError, OSError, KeyError) as exc:
        print(f"evaluation failed: {exc}", file=sys.stderr)
        return EXIT_FAIL
    print(report.format())
    if args.output:
        Path(args.output).write_text(json.dumps(report.to_dict(), indent=2) + "\n")
    return EXIT_OK


def cmd_preview(args) -> int:
    from .assets import Assets

    config = _load(args.config)
    seed = config.seed if args.seed is None else args.seed
    image, ann, _ = render_image(config, Assets.from_config(config), seed, args.index)
    if args.dots:
        image = image.copy()
        for x, y in np.rint(ann.dots).astype(int):
            image[max(0, y - 2):y + 3, x] = (255, 0, 0)
            image[y, max(0, x - 2):x + 3] = (255, 0, 0)
    save_png(image, args.out)
    print(f"{args.out}: {ann.count} objects in frame")
    return EXIT_OK


def cmd_make_assets(args) -> int:
    from .samples import write_demo_assets

    paths = write_demo_assets(args.out, n_textures=args.textures, n_backgrounds=args.backgrounds,
                              seed=args.seed)
    for key, p in paths.items():
        print(f"{key}: {p}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="drcount", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("generate", help="generate a synthetic counting dataset")
    p.add_argument("--config", required=True, help="YAML/JSON config, or a manifest to replay")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--seed", type=int, default=None, help="override the master seed")
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--size", type=int, default=None, help="override the dataset size")
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("validate", help="check a generated dataset")
    p.add_argument("manifest")
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("evaluate", help="MAE/MSE of predicted counts against a manifest")
    p.add_argument("--manifest", required=True)
    p.add_argument("--predictions", required=True, help="lines of '<image id> <count>'")
    p.add_argument("--output", help="also write the report as JSON")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("preview", help="render a single image")
    p.add_argument("--config", required=True)
    p.add_argument("--index", type=int, default=0)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--out", default="preview.png")
    p.add_argument("--dots", action="store_true", help="mark annotated dots in red")
    p.set_defaults(func=cmd_preview)

    p = sub.add_parser("make-assets", help="write procedural demo asset libraries")
    p.add_argument("out")
    p.add_argument("--textures", type=int, default=24)
    p.add_argument("--backgrounds", type=int, default=24)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_make_assets)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (ConfigError, AssetError) as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
