"""End-to-end driver: file pairs in, dense masks and density reports out."""

from __future__ import annotations

import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, fields, replace
from pathlib import Path

import numpy as np

from . import imageio
from .clahe import ClaheConfig
from .convolve import rescale_to_depth
from .gabor import FilterBank, default_params, kernel_size_for, make_bank, orientation_responses
from .imageio import GrayImage
from .metrics import DensityReport, make_report
from .preprocess import apply_mask, breast_extent, crop, orient_left, paste, roi_box
from .segment import SegmentConfig, segment_stages

log = logging.getLogger(__name__)

__all__ = [
    "PipelineConfig",
    "ConfigError",
    "DataError",
    "load_config",
    "build_bank",
    "run_single",
    "run_batch",
    "pair_files",
    "report_from_masks",
    "dump_bank",
]

IMAGE_SUFFIXES = (".pgm",)
MASK_SUFFIXES = (".pgm", ".pbm")


class ConfigError(ValueError):
    """Bad configuration file or option value."""


class DataError(ValueError):
    """Inputs that are readable but violate a precondition (dims, empty masks...)."""


@dataclass(frozen=True)
class PipelineConfig:
    orientations: int = 8
    kernel_size: int | None = None
    gamma: float = 0.5
    wavelength: float | None = None
    sigma: float | None = None
    psi: float = 0.0
    combine: str = "max"
    tiles_x: int = 8
    tiles_y: int = 8
    clip_limit: float = 4.0
    bins: int = 256
    t_low: float = 0.60
    t_high: float = 0.80
    reference: str = "max"
    morph_radius: int = 3
    gain: float = 1.0
    debug_stages: bool = False
    out: str = "out"
    jobs: int = 1

    @property
    def clahe(self) -> ClaheConfig:
        return ClaheConfig(self.tiles_x, self.tiles_y, self.clip_limit, self.bins)

    @property
    def segment(self) -> SegmentConfig:
        return SegmentConfig(
            t_low=self.t_low,
            t_high=self.t_high,
            reference=self.reference,
            morph_radius=self.morph_radius,
            gain=self.gain,
            combine=self.combine,
        )

    def validate(self) -> "PipelineConfig":
        try:
            self.clahe
            self.segment
        except ValueError as exc:
            raise ConfigError(str(exc)) from None
        if self.orientations < 1:
            raise ConfigError("orientations must be >= 1")
        if self.kernel_size is not None and (self.kernel_size < 3 or self.kernel_size % 2 == 0):
            raise ConfigError("kernel_size must be odd and >= 3")
        if self.jobs < 1:
            raise ConfigError("jobs must be >= 1")
        return self


def _parse_value(name: str, raw: str):
    ftype = {f.name: f.type for f in fields(PipelineConfig)}[name]
    raw = raw.strip()
    optional = "None" in ftype
    if optional and raw.lower() in ("", "none", "auto"):
        return None
    try:
        if ftype.startswith("int"):
            return int(raw)
        if ftype.startswith("float"):
            return float(raw)
        if ftype == "bool":
            if raw.lower() in ("1", "true", "yes", "on"):
                return True
            if raw.lower() in ("0", "false", "no", "off"):
                return False
            raise ValueError(raw)
    except ValueError:
        raise ConfigError(f"bad value for {name}: {raw!r}") from None
    return raw


def load_config(text: str, base: PipelineConfig | None = None) -> PipelineConfig:
    """Parse ``key = value`` lines (``#`` starts a comment). Unknown keys are errors."""
    known = {f.name for f in fields(PipelineConfig)}
    values = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value'")
        key, raw = (part.strip() for part in line.split("=", 1))
        key = key.replace("-", "_")
        if key not in known:
            raise ConfigError(f"line {lineno}: unknown key {key!r}")
        values[key] = _parse_value(key, raw)
    return replace(base or PipelineConfig(), **values).validate()


def build_bank(config: PipelineConfig, size: int) -> FilterBank:
    params = default_params(
        size,
        gamma=config.gamma,
        wavelength=config.wavelength,
        sigma=config.sigma,
        psi=config.psi,
    )
    return make_bank(params, config.orientations, size)


def _largest_odd_at_most(n: int) -> int:
    return n if n % 2 else n - 1


def _kernel_size(config: PipelineConfig, full_shape, roi_shape) -> int:
    if config.kernel_size is not None:
        size = config.kernel_size
    else:
        try:
            size = kernel_size_for(*full_shape)
        except ValueError as exc:
            raise DataError(str(exc)) from None
    # the kernel must fit inside the ROI it filters
    size = min(size, _largest_odd_at_most(min(roi_shape)))
    if size < 3:
        raise DataError(f"ROI {roi_shape} too small for a 3x3 kernel")
    return size


def _dump_stages(directory: Path, roi, region, stages, bank, jobs):
    directory.mkdir(parents=True, exist_ok=True)
    imageio.save_image(directory / "roi.pgm", roi)
    imageio.save_mask(directory / "region.pgm", region)
    imageio.save_image(directory / "enhanced.pgm", stages.enhanced)
    imageio.save_image(directory / "response.pgm", rescale_to_depth(stages.response, 8))
    imageio.save_image(directory / "suppressed.pgm", stages.suppressed)
    imageio.save_mask(directory / "low.pgm", stages.low)
    imageio.save_mask(directory / "high.pgm", stages.high)
    imageio.save_mask(directory / "and.pgm", stages.fused)
    imageio.save_mask(directory / "final.pgm", stages.final)
    for k, resp in enumerate(orientation_responses(stages.enhanced, bank, jobs=jobs)):
        deg = np.degrees(bank.thetas[k])
        imageio.save_image(directory / f"response_{k:02d}_{deg:05.1f}.pgm", rescale_to_depth(resp, 8))


def _read_pair(image_path, mask_path) -> tuple[GrayImage, np.ndarray]:
    # OSError propagates as an I/O failure, PnmError (a ValueError) as data
    image = imageio.load_image(image_path)
    mask = imageio.load_mask(mask_path)
    if mask.shape != image.shape:
        raise DataError(f"mask {mask_path} is {mask.shape}, image {image_path} is {image.shape}")
    return image, mask


def _roi_of(image: GrayImage, mask: np.ndarray):
    """Mask, orient and crop. Returns (roi image, roi region, box, flipped)."""
    try:
        oriented, omask, flipped = orient_left(apply_mask(image, mask), mask)
        box = roi_box(breast_extent(omask), *oriented.shape)
    except ValueError as exc:
        raise DataError(str(exc)) from None
    return crop(oriented, box), crop(omask, box), box, flipped


def run_single(
    image_path, mask_path, config: PipelineConfig = PipelineConfig(), image_id: str | None = None
) -> tuple[DensityReport, np.ndarray]:
    """Segment one mammogram and write ``<out>/<id>_dense.pgm``.

    The dense mask is returned (and written) at full size in the original
    orientation. With ``debug_stages`` every intermediate goes to
    ``<out>/<id>/``.
    """
    image_id = image_id or Path(image_path).stem
    image, mask = _read_pair(image_path, mask_path)
    roi, region, box, flipped = _roi_of(image, mask)
    size = _kernel_size(config, image.shape, roi.shape)
    bank = build_bank(config, size)
    try:
        stages = segment_stages(roi, region, bank, config.clahe, config.segment, jobs=config.jobs)
    except ValueError as exc:
        raise DataError(str(exc)) from None

    dense = paste(np.zeros(image.shape, dtype=bool), stages.final, box)
    if flipped:
        dense = dense[:, ::-1].copy()
    report = make_report(image_id, stages.final, region, config.reference)

    out = Path(config.out)
    out.mkdir(parents=True, exist_ok=True)
    imageio.save_mask(out / f"{image_id}_dense.pgm", dense)
    if config.debug_stages:
        _dump_stages(out / image_id, roi, region, stages, bank, config.jobs)
    log.info("%s: %d/%d dense (%.4f)", image_id, report.dense_px, report.breast_px, report.percent_dense)
    return report, dense


def _stems(directory: Path, suffixes) -> dict[str, Path]:
    found = {}
    for p in sorted(directory.iterdir()):
        if p.is_file() and p.suffix.lower() in suffixes:
            found.setdefault(p.stem, p)
    return found


def pair_files(image_dir, mask_dir, mask_suffix: str = ""):
    """Pair images and masks by stem. Returns (pairs, warnings), both sorted by stem.

    ``mask_suffix`` is stripped from mask stems before matching (e.g. ``_dense``).
    """
    image_dir, mask_dir = Path(image_dir), Path(mask_dir)
    for d in (image_dir, mask_dir):
        if not d.is_dir():
            raise FileNotFoundError(f"not a directory: {d}")
    images = _stems(image_dir, IMAGE_SUFFIXES)
    masks = {}
    for stem, path in _stems(mask_dir, MASK_SUFFIXES).items():
        if mask_suffix:
            if not stem.endswith(mask_suffix):
                continue
            stem = stem[: -len(mask_suffix)]
        masks[stem] = path
    pairs = [(stem, images[stem], masks[stem]) for stem in sorted(images.keys() & masks.keys())]
    warnings = [f"{stem}: no mask in {mask_dir}" for stem in images.keys() - masks.keys()]
    warnings += [f"{stem}: no image in {image_dir}" for stem in masks.keys() - images.keys()]
    return pairs, sorted(warnings)


def _run_one(args):
    stem, image_path, mask_path, config = args
    try:
        return stem, run_single(image_path, mask_path, config, stem)[0], None
    except (OSError, ValueError) as exc:
        return stem, None, f"{stem}: {exc}"


def run_batch(image_dir, mask_dir, config: PipelineConfig = PipelineConfig()):
    """Process every image/mask pair.

    Returns ``(reports, warnings, n_failed)``; reports and warnings are sorted
    by image id. Images that fail are reported as warnings and skipped.

    With ``jobs > 1`` images run in worker processes; each image itself is
    processed single-threaded so results do not depend on the schedule.
    """
    pairs, warnings = pair_files(image_dir, mask_dir)
    if not pairs:
        raise DataError(f"no image/mask pairs between {image_dir} and {mask_dir}")
    jobs = config.jobs
    per_image = replace(config, jobs=1) if jobs > 1 else config
    work = [(stem, img, msk, per_image) for stem, img, msk in pairs]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(_run_one, work))
    else:
        results = [_run_one(w) for w in work]
    reports = []
    failures = []
    for stem, report, err in results:
        if err is None:
            reports.append(report)
        else:
            failures.append(err)
    reports.sort(key=lambda r: r.image_id)
    return reports, sorted(warnings + failures), len(failures)


def report_from_masks(mask_dir, dense_dir, reference: str = "max") -> tuple[list[DensityReport], list[str]]:
    """Recompute reports from breast masks and previously written ``*_dense.pgm`` files."""
    pairs, warnings = pair_files(mask_dir, dense_dir, mask_suffix="_dense")
    reports = []
    for stem, mask_path, dense_path in pairs:
        mask = imageio.load_mask(mask_path)
        dense = imageio.load_mask(dense_path)
        if dense.shape != mask.shape:
            warnings.append(f"{stem}: dense mask shape {dense.shape} != breast mask {mask.shape}")
            continue
        fake = GrayImage(np.zeros(mask.shape, dtype=np.uint8))
        try:
            _, region, box, flipped = _roi_of(fake, mask)
            if flipped:
                dense = dense[:, ::-1]
            reports.append(make_report(stem, crop(dense, box), region, reference))
        except ValueError as exc:
            warnings.append(f"{stem}: {exc}")
    return reports, sorted(warnings)


def dump_bank(bank: FilterBank, directory) -> list[Path]:
    """Write each kernel's real part as an 8-bit PGM for viewing."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    written = []
    for k, (kernel, theta) in enumerate(zip(bank.kernels, bank.thetas)):
        path = directory / f"kernel_{k:02d}_{np.degrees(theta):05.1f}.pgm"
        imageio.save_image(path, rescale_to_depth(kernel.real, 8))
        written.append(path)
    return written
