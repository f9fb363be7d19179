"""Command line interface.

Exit codes: 0 success, 1 usage, 2 I/O, 3 data (dimensions, preconditions).
"""

from __future__ import annotations

import argparse
import logging
import sys
from dataclasses import replace
from pathlib import Path

from . import imageio
from .clahe import clahe
from .metrics import reports_to_csv
from .pipeline import (
    ConfigError,
    DataError,
    PipelineConfig,
    build_bank,
    dump_bank,
    load_config,
    report_from_masks,
    run_batch,
    run_single,
)

EXIT_OK, EXIT_USAGE, EXIT_IO, EXIT_DATA = 0, 1, 2, 3

DEFAULT_KERNEL_SIZE = 25


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _tiles(text: str) -> tuple[int, int]:
    try:
        nx, ny = (int(v) for v in text.lower().split("x"))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected NxM, got {text!r}") from None
    return nx, ny


def _common_options() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(add_help=False)
    p.add_argument("--config", metavar="PATH", help="key = value configuration file")
    p.add_argument("--out", metavar="DIR")
    p.add_argument("--debug-stages", action="store_true", default=None, help="write every intermediate stage")
    p.add_argument("--orientations", type=int, metavar="N")
    p.add_argument("--kernel-size", type=int, metavar="N")
    p.add_argument("--clip-limit", type=float, metavar="F")
    p.add_argument("--tiles", type=_tiles, metavar="NxM", help="CLAHE tile grid, columns x rows")
    p.add_argument("--t-low", type=float, metavar="F")
    p.add_argument("--t-high", type=float, metavar="F")
    p.add_argument("--reference", choices=("max", "mean"))
    p.add_argument("--gain", type=float, metavar="F")
    p.add_argument("--morph-radius", type=int, metavar="N")
    p.add_argument("--jobs", type=int, metavar="N")
    p.add_argument("-v", "--verbose", action="store_true")
    return p


def build_parser() -> argparse.ArgumentParser:
    common = _common_options()
    parser = _Parser(prog="mammodense", description="Dense tissue segmentation of mammograms.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("kernels", parents=[common], help="dump the Gabor bank as PGMs")
    p.set_defaults(func=cmd_kernels)

    p = sub.add_parser("enhance", parents=[common], help="CLAHE only")
    p.add_argument("image")
    p.add_argument("mask", nargs="?")
    p.set_defaults(func=cmd_enhance)

    p = sub.add_parser("segment", parents=[common], help="segment one image/mask pair")
    p.add_argument("image")
    p.add_argument("mask")
    p.set_defaults(func=cmd_segment)

    p = sub.add_parser("batch", parents=[common], help="segment every pair in two directories")
    p.add_argument("image_dir")
    p.add_argument("mask_dir")
    p.set_defaults(func=cmd_batch)

    p = sub.add_parser("report", parents=[common], help="recompute the CSV from existing masks")
    p.add_argument("mask_dir")
    p.add_argument("dense_dir")
    p.set_defaults(func=cmd_report)
    return parser


def config_from_args(args) -> PipelineConfig:
    config = PipelineConfig()
    if args.config:
        config = load_config(Path(args.config).read_text(), config)
    overrides = {
        name: getattr(args, name)
        for name in (
            "out",
            "debug_stages",
            "orientations",
            "kernel_size",
            "clip_limit",
            "t_low",
            "t_high",
            "reference",
            "gain",
            "morph_radius",
            "jobs",
        )
        if getattr(args, name) is not None
    }
    if args.tiles is not None:
        overrides["tiles_x"], overrides["tiles_y"] = args.tiles
    return replace(config, **overrides).validate()


def _write_csv(config: PipelineConfig, reports) -> Path:
    out = Path(config.out)
    out.mkdir(parents=True, exist_ok=True)
    path = out / "report.csv"
    path.write_text(reports_to_csv(reports))
    return path


def _warn(lines):
    for line in lines:
        print(f"warning: {line}", file=sys.stderr)


def cmd_kernels(args, config: PipelineConfig) -> int:
    bank = build_bank(config, config.kernel_size or DEFAULT_KERNEL_SIZE)
    for path in dump_bank(bank, config.out):
        print(path)
    return EXIT_OK


def cmd_enhance(args, config: PipelineConfig) -> int:
    image = imageio.load_image(args.image)
    mask = imageio.load_mask(args.mask) if args.mask else None
    if mask is not None and mask.shape != image.shape:
        raise DataError(f"mask {args.mask} is {mask.shape}, image {args.image} is {image.shape}")
    out = Path(config.out)
    out.mkdir(parents=True, exist_ok=True)
    path = out / f"{Path(args.image).stem}_clahe.pgm"
    imageio.save_image(path, clahe(image, config.clahe, mask))
    print(path)
    return EXIT_OK


def cmd_segment(args, config: PipelineConfig) -> int:
    report, _ = run_single(args.image, args.mask, config)
    _write_csv(config, [report])
    sys.stdout.write(reports_to_csv([report]))
    return EXIT_OK


def cmd_batch(args, config: PipelineConfig) -> int:
    reports, warnings, failed = run_batch(args.image_dir, args.mask_dir, config)
    _warn(warnings)
    _write_csv(config, reports)
    sys.stdout.write(reports_to_csv(reports))
    return EXIT_DATA if failed else EXIT_OK


def cmd_report(args, config: PipelineConfig) -> int:
    reports, warnings = report_from_masks(args.mask_dir, args.dense_dir, config.reference)
    _warn(warnings)
    if not reports:
        raise DataError(f"no mask/dense pairs between {args.mask_dir} and {args.dense_dir}")
    _write_csv(config, reports)
    sys.stdout.write(reports_to_csv(reports))
    return EXIT_OK


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        config = config_from_args(args)
    except ConfigError as exc:
        print(f"mammodense: config error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as exc:
        print(f"mammodense: cannot read config: {exc}", file=sys.stderr)
        return EXIT_IO
    try:
        return args.func(args, config)
    except OSError as exc:
        name = getattr(exc, "filename", None)
        detail = f"{exc.strerror}: {name}" if name and exc.strerror else str(exc)
        print(f"mammodense: I/O error: {detail}", file=sys.stderr)
        return EXIT_IO
    except ValueError as exc:
        print(f"mammodense: data error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
