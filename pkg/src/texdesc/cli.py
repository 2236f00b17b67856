"""Batch command-line interface.

Commands: ``extract`` (descriptor matrices), ``select`` (feature ranking and
subset search on one slice), ``train`` (two-stage bundle), ``evaluate`` (the
density-stratified protocol with report, ROC CSVs and figures) and
``classify`` (apply a bundle).  Exit codes: 0 success, 1 domain error,
2 usage error.  The ``TEXDESC_THREADS`` environment variable caps extraction
worker threads.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from . import featio
from .dpselect import dp_scores, incremental_select, selection_report
from .errors import TexdescError
from .evaluation import evaluate_grid, emit_report, DENSITY_CELLS
from .patchio import load_manifest, density_slice
from .pipeline import (
    DescriptorConfig,
    classify as classify_patch,
    extract_matrix,
    load_bundle,
    make_inner_evaluator,
    save_bundle,
    stage1_labels,
    stage2_labels,
    train_pipeline,
)

DENSITY_CHOICES = ("d", "e", "f", "g", "all")


def _parse_sigma_token(parser, token: str, allow_sweep: bool):
    """A sigma flag is either one positive real or an inclusive integer sweep a..b."""
    if ".." in token:
        if not allow_sweep:
            parser.error(f"--sigma sweep {token!r} is only valid for evaluate")
        lo_s, _, hi_s = token.partition("..")
        try:
            lo, hi = int(lo_s), int(hi_s)
        except ValueError:
            parser.error(f"--sigma sweep bounds must be integers, got {token!r}")
        if lo < 1 or hi < lo:
            parser.error(f"--sigma sweep {token!r} must satisfy 1 <= a <= b")
        return [float(v) for v in range(lo, hi + 1)]
    try:
        value = float(token)
    except ValueError:
        parser.error(f"--sigma must be a number or a..b sweep, got {token!r}")
    if value <= 0:
        parser.error("--sigma must be positive")
    return [value]


def _add_descriptor_flags(sub):
    sub.add_argument("--descriptor", required=True, choices=("hog", "hot", "pbdct"))
    sub.add_argument("--sigma", help="Gabor scale for hot; a..b sweeps (evaluate only)")
    sub.add_argument(
        "--keep-fraction", type=float, default=0.5,
        help="fraction of DCT coefficients kept by pbdct (default 0.5)",
    )
    sub.add_argument(
        "--no-enhance", action="store_true",
        help="skip the two-stage CLAHE pass (min-max normalization still runs)",
    )
    sub.add_argument("--kernel", choices=("linear", "rbf"), default="linear")
    sub.add_argument("--svm-c", type=float, default=1.0, help="SVM C (default 1.0)")
    sub.add_argument(
        "--select-cap", type=int, default=None,
        help="largest ranked-prefix size tried by subset search",
    )


def _build_config(parser, args, allow_sweep=False):
    sigmas = [1.0]
    if args.sigma is not None:
        sigmas = _parse_sigma_token(parser, args.sigma, allow_sweep)
    elif args.descriptor == "hot":
        parser.error("--sigma is required with --descriptor hot")
    if not 0.0 < args.keep_fraction <= 1.0:
        parser.error("--keep-fraction must lie in (0, 1]")
    cap = args.select_cap if args.select_cap is not None else 5200
    if args.select_cap is not None and args.select_cap < 5:
        parser.error("--select-cap must be >= 5")
    configs = [
        DescriptorConfig(
            descriptor=args.descriptor,
            sigma=s,
            keep_fraction=args.keep_fraction,
            enhance=not args.no_enhance,
            kernel=args.kernel,
            C=args.svm_c,
            select_cap=cap,
        )
        for s in sigmas
    ]
    return configs


def _stage_data(parser, ds, density, stage, config):
    sl = density_slice(ds, density)
    if stage == 2:
        records = [r for r in sl.records if r.label != "normal"]
        labels = stage2_labels(records)
    else:
        records = list(sl.records)
        labels = stage1_labels(records)
    if not records:
        parser.error(f"density slice {density!r} has no records for stage {stage}")
    _, matrix = extract_matrix(config, records)
    return records, matrix, labels


def cmd_extract(parser, args) -> int:
    config = _build_config(parser, args)[0]
    ds = load_manifest(args.manifest)
    if not len(ds):
        parser.error("manifest holds no records")
    ids, matrix = extract_matrix(config, ds.records)
    out = Path(args.out)
    if out.suffix == ".txd":
        featio.write_txd(out, matrix)
        ids_path = out.with_suffix(out.suffix + ".ids")
        ids_path.write_text("\n".join(ids) + "\n", encoding="utf-8")
        print(f"wrote {matrix.shape[0]}x{matrix.shape[1]} matrix to {out} (+ {ids_path.name})")
    else:
        featio.write_matrix_csv(out, ids, matrix)
        print(f"wrote {matrix.shape[0]}x{matrix.shape[1]} matrix to {out}")
    return 0


def cmd_select(parser, args) -> int:
    config = _build_config(parser, args)[0]
    ds = load_manifest(args.manifest)
    records, matrix, labels = _stage_data(parser, ds, args.density, args.stage, config)
    ranking = dp_scores(matrix, labels)
    evaluator = make_inner_evaluator(matrix, labels, config, (args.seed, args.stage))
    cap = min(config.select_cap, matrix.shape[1])
    result = incremental_select(matrix, labels, ranking, evaluator, cap=cap)
    header = [
        f"descriptor: {config.descriptor}",
        f"density: {args.density}",
        f"stage: {args.stage}",
        f"seed: {args.seed}",
        f"records: {len(records)}",
        f"config_digest: {config.digest()}",
    ]
    text = selection_report(result, header_lines=header)
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    out.write_text(text, encoding="utf-8")
    written = [str(out)]
    if not args.no_figures:
        from .figures import selection_curve_figure

        fig_path = out.with_suffix(".png")
        selection_curve_figure(result, fig_path, title=f"{config.descriptor} stage {args.stage}")
        written.append(str(fig_path))
    print(f"chosen subset size {result.chosen_size}; wrote {', '.join(written)}")
    return 0


def cmd_train(parser, args) -> int:
    config = _build_config(parser, args)[0]
    ds = load_manifest(args.manifest)
    bundle = train_pipeline(ds, density=args.density, config=config, seed=args.seed)
    save_bundle(bundle, args.out)
    stage2 = "present" if bundle.stage2 is not None else "absent"
    print(
        f"trained bundle ({bundle.stage1.search.chosen_size} stage-1 features, "
        f"stage 2 {stage2}) -> {args.out}"
    )
    for warning in bundle.warnings:
        print(f"warning: {warning}", file=sys.stderr)
    return 0


def cmd_evaluate(parser, args) -> int:
    configs = _build_config(parser, args, allow_sweep=True)
    ds = load_manifest(args.manifest)
    densities = DENSITY_CELLS if args.density == "each" else (args.density,)
    seeds = tuple(range(args.seed, args.seed + args.repeats))
    report_dir = Path(args.report)

    sweep_rows = []
    exit_code = 0
    for config in configs:
        out_dir = report_dir if len(configs) == 1 else report_dir / f"sigma_{int(config.sigma)}"
        report = evaluate_grid(
            ds, config, densities=densities, repeats=args.repeats, seeds=seeds
        )
        written = emit_report(report, out_dir, figures=not args.no_figures)
        if report.errored:
            exit_code = 1
        for (density, stage), cell in report.cells.items():
            mean = cell.summary["accuracy"][0] if cell.status == "ok" else None
            sweep_rows.append((config.sigma, density, stage, cell.status, mean))
        print(f"wrote {len(written)} file(s) under {out_dir}")

    if len(configs) > 1:
        lines = ["sigma,density,stage,status,accuracy_mean"]
        for sigma, density, stage, status, mean in sweep_rows:
            mean_s = "NA" if mean is None else f"{mean:.6f}"
            lines.append(f"{sigma!r},{density},{stage},{status},{mean_s}")
        sweep_csv = report_dir / "sigma_sweep.csv"
        sweep_csv.write_text("\n".join(lines) + "\n", encoding="utf-8")
        if not args.no_figures:
            from .figures import sigma_sweep_figure

            first_density = densities[0]
            sweep = {
                sigma: mean
                for sigma, density, stage, _status, mean in sweep_rows
                if density == first_density and stage == 1
            }
            sigma_sweep_figure(sweep, report_dir / "sigma_sweep.png")
        print(f"wrote sweep summary to {sweep_csv}")
    return exit_code


def cmd_classify(parser, args) -> int:
    bundle = load_bundle(args.bundle)
    lines = ["id,label,stage1_raw,stage2_raw"]
    if args.manifest:
        ds = load_manifest(args.manifest)
        items = [(rec.id, rec.patch) for rec in ds.records]
    else:
        from .patchio import ImagePatch, _decode_image

        path = Path(args.image)
        items = [(str(path), ImagePatch(_decode_image(path, 128)))]
    for item_id, patch in items:
        result = classify_patch(bundle, patch)
        s2 = "" if result.stage2 is None else repr(float(result.stage2.raw))
        lines.append(f"{item_id},{result.label},{float(result.stage1.raw)!r},{s2}")
    text = "\n".join(lines) + "\n"
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8")
        print(f"wrote {len(items)} classification(s) to {args.out}")
    else:
        sys.stdout.write(text)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="texdesc",
        description="Texture descriptors and two-stage patch classification.",
    )
    subs = parser.add_subparsers(dest="command", required=True)

    p_extract = subs.add_parser("extract", help="write a feature matrix for a manifest")
    _add_descriptor_flags(p_extract)
    p_extract.add_argument("--manifest", required=True)
    p_extract.add_argument("--out", required=True, help=".csv or .txd output path")
    p_extract.set_defaults(func=cmd_extract)

    p_select = subs.add_parser("select", help="rank features and search subset sizes")
    _add_descriptor_flags(p_select)
    p_select.add_argument("--manifest", required=True)
    p_select.add_argument("--density", choices=DENSITY_CHOICES, default="all")
    p_select.add_argument("--stage", type=int, choices=(1, 2), default=1)
    p_select.add_argument("--seed", type=int, default=0)
    p_select.add_argument("--out", required=True, help="selection report path")
    p_select.add_argument("--no-figures", action="store_true")
    p_select.set_defaults(func=cmd_select)

    p_train = subs.add_parser("train", help="train a two-stage bundle")
    _add_descriptor_flags(p_train)
    p_train.add_argument("--manifest", required=True)
    p_train.add_argument("--density", choices=DENSITY_CHOICES, default="all")
    p_train.add_argument("--seed", type=int, default=0)
    p_train.add_argument("--out", required=True, help="bundle output path")
    p_train.set_defaults(func=cmd_train)

    p_eval = subs.add_parser("evaluate", help="run the cross-validation protocol")
    _add_descriptor_flags(p_eval)
    p_eval.add_argument("--manifest", required=True)
    p_eval.add_argument(
        "--density", choices=DENSITY_CHOICES + ("each",), default="all",
        help="one density cell, or 'each' for the full d/e/f/g/all grid",
    )
    p_eval.add_argument("--repeats", type=int, default=10)
    p_eval.add_argument("--seed", type=int, default=0, help="first repeat seed")
    p_eval.add_argument("--report", required=True, help="report output directory")
    p_eval.add_argument("--no-figures", action="store_true")
    p_eval.set_defaults(func=cmd_evaluate)

    p_cls = subs.add_parser("classify", help="apply a trained bundle")
    p_cls.add_argument("--bundle", required=True)
    group = p_cls.add_mutually_exclusive_group(required=True)
    group.add_argument("--image", help="one image file")
    group.add_argument("--manifest", help="batch manifest")
    p_cls.add_argument("--out", help="output CSV (default: stdout)")
    p_cls.set_defaults(func=cmd_classify)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(parser, args)
    except TexdescError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
