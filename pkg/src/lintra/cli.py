"""Command-line entry point wiring the full pipeline.

Subcommands: make-task, fit, translate, eval, spectrum, distcheck. Every
flag can also come from a ``--config`` JSON file; explicit flags win over
config values, which win over built-in defaults. Logs go to stderr, data
to files or stdout. Exit codes: 0 ok, 2 usage, 3 algorithm failure,
4 data mismatch, 1 anything else.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
from pathlib import Path
from types import SimpleNamespace

from . import align, metrics, model_store, pca, report, tasks
from .dataset import ImageShape, load_directory, save_directory, _decode, _EXTENSIONS
from .errors import AlignmentError, DataMismatchError, LintraError
from .translator import Translator

log = logging.getLogger(__name__)

_DEFAULTS: dict[str, dict] = {
    "make-task": {"protocol": "paired-shuffled", "seed": 0, "mask": None,
                  "factor": None, "sidecar": None},
    "fit": {"seed": 0, "pairing": "icp", "mode": align.ORTHOGONAL, "ridge": 0.0,
            "max_iters": 100, "tol": 1e-5, "min_buddies": None, "whiten": False,
            "skew_align": True},
    "translate": {},
    "eval": {"json": None, "figure": None, "no_figure": False},
    "spectrum": {"seed": 0, "figure": None, "no_figure": False},
    "distcheck": {"pairs": 1000, "seed": 0, "figure": None, "no_figure": False},
}


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="lintra",
        description="Linear orthogonal image-to-image translation in PCA space.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name: str, help_text: str) -> argparse.ArgumentParser:
        p = sub.add_parser(name, help=help_text, argument_default=argparse.SUPPRESS)
        p.add_argument("--config", help="JSON file with defaults for any flag")
        return p

    p = add("make-task", "generate a synthetic two-domain task from an image directory")
    p.add_argument("--task", choices=tasks.TASK_NAMES, required=True)
    p.add_argument("--input", required=True, help="source image directory (domain B)")
    p.add_argument("--out-a", required=True)
    p.add_argument("--out-b", required=True)
    p.add_argument("--protocol", choices=tasks.PROTOCOLS)
    p.add_argument("--seed", type=int)
    p.add_argument("--mask", type=int, nargs=4, metavar=("TOP", "LEFT", "HEIGHT", "WIDTH"),
                   help="inpaint rectangle (default: centered, 25%% of area)")
    p.add_argument("--factor", type=int, help="super-res downsampling factor (default 8)")
    p.add_argument("--sidecar", help="where to write the task JSON sidecar")

    p = add("fit", "fit PCA bases and the latent map, then save a translator model")
    p.add_argument("--input-a", required=True)
    p.add_argument("--input-b", required=True)
    p.add_argument("--out", required=True, help="model file to write")
    p.add_argument("--rank", type=int, required=True)
    p.add_argument("--seed", type=int)
    p.add_argument("--pairing", choices=("icp", "supervised"))
    p.add_argument("--mode", choices=(align.ORTHOGONAL, align.UNRESTRICTED))
    p.add_argument("--ridge", type=float)
    p.add_argument("--max-iters", type=int)
    p.add_argument("--tol", type=float)
    p.add_argument("--min-buddies", type=int)
    p.add_argument("--whiten", action="store_true")
    p.add_argument("--no-skew-align", dest="skew_align", action="store_false")

    p = add("translate", "run a saved model over a directory of images")
    p.add_argument("--model", required=True)
    p.add_argument("--input", required=True)
    p.add_argument("--out", required=True)

    p = add("eval", "MSE/SSIM of predictions against aligned targets")
    p.add_argument("--pred", required=True)
    p.add_argument("--target", required=True)
    p.add_argument("--out", required=True, help="CSV report path")
    p.add_argument("--json", help="also write the report as JSON")
    p.add_argument("--figure", help="figure path (default: CSV path with .png)")
    p.add_argument("--no-figure", action="store_true")

    p = add("spectrum", "PCA eigenvalue spectrum of an image directory")
    p.add_argument("--input", required=True)
    p.add_argument("--rank", type=int, required=True)
    p.add_argument("--seed", type=int)
    p.add_argument("--out", required=True, help="CSV path")
    p.add_argument("--figure", help="figure path (default: CSV path with .png)")
    p.add_argument("--no-figure", action="store_true")

    p = add("distcheck", "cross-domain distance preservation scatter")
    p.add_argument("--input-a", required=True)
    p.add_argument("--input-b", required=True)
    p.add_argument("--pairs", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--out", required=True, help="CSV path")
    p.add_argument("--figure", help="figure path (default: CSV path with .png)")
    p.add_argument("--no-figure", action="store_true")
    return parser


def _merge_options(args: argparse.Namespace) -> SimpleNamespace:
    """Layer built-in defaults, then --config values, then explicit flags."""
    passed = {k: v for k, v in vars(args).items() if k not in ("command", "config")}
    merged = dict(_DEFAULTS[args.command])
    config_path = getattr(args, "config", None)
    if config_path:
        try:
            config = json.loads(Path(config_path).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ValueError(f"cannot read config {config_path}: {exc}") from exc
        if not isinstance(config, dict):
            raise ValueError(f"config {config_path} must hold a JSON object")
        for key, value in config.items():
            dest = key.replace("-", "_")
            if dest not in merged and dest not in passed:
                raise ValueError(f"config key {key!r} is not a flag of {args.command!r}")
            merged[dest] = value
    merged.update(passed)
    return SimpleNamespace(**merged)


def _peek_directory(path: str) -> tuple[int, ImageShape]:
    """File count and geometry of the first image, without loading everything."""
    root = Path(path)
    if not root.is_dir():
        raise ValueError(f"not a directory: {root}")
    names = sorted(p for p in root.iterdir() if p.suffix.lower() in _EXTENSIONS)
    if not names:
        raise ValueError(f"no supported images (png/ppm/pgm) in {root}")
    _, shape = _decode(names[0])
    return len(names), shape


def _figure_path(opts) -> Path | None:
    if opts.no_figure:
        return None
    return Path(opts.figure) if opts.figure else Path(opts.out).with_suffix(".png")


def cmd_make_task(opts) -> int:
    params = {}
    if opts.mask is not None:
        params["mask"] = [int(v) for v in opts.mask]
    if opts.factor is not None:
        params["factor"] = int(opts.factor)
    spec = tasks.TaskSpec(opts.task, protocol=opts.protocol, seed=opts.seed, params=params)
    source = load_directory(opts.input)
    domain_a, domain_b = tasks.make_domain_pair(spec, source)
    save_directory(domain_a, opts.out_a)
    save_directory(domain_b, opts.out_b)
    sidecar: dict = {
        "task": spec.name,
        "params": spec.params,
        "protocol": spec.protocol,
        "seed": spec.seed,
    }
    if spec.protocol == "paired-shuffled":
        source_pos = {image_id: k for k, image_id in enumerate(source.ids)}
        sidecar["permutation"] = [source_pos[i] for i in domain_a.ids]
    else:
        sidecar["split"] = {"a_ids": list(domain_a.ids), "b_ids": list(domain_b.ids)}
    sidecar_path = Path(opts.sidecar) if opts.sidecar else Path(opts.out_a).parent / "task.json"
    sidecar_path.write_text(json.dumps(sidecar, indent=2) + "\n")
    log.info("wrote %d images to %s, %d to %s, sidecar %s",
             len(domain_a), opts.out_a, len(domain_b), opts.out_b, sidecar_path)
    return 0


def cmd_fit(opts) -> int:
    if opts.pairing == "icp" and opts.mode != align.ORTHOGONAL:
        raise ValueError("unsupervised (icp) fitting is orthogonal-only; "
                         "use --pairing supervised for unrestricted-linear")
    if opts.rank < 1:
        raise ValueError(f"rank must be >= 1, got {opts.rank}")
    # Validate the rank against both directories before decoding everything.
    for label, directory in (("A", opts.input_a), ("B", opts.input_b)):
        n, shape = _peek_directory(directory)
        max_rank = min(n - 1, shape.dim)
        if opts.rank > max_rank:
            raise ValueError(
                f"rank {opts.rank} exceeds min(n-1, d) = {max_rank} for domain {label} "
                f"({n} images of dim {shape.dim})"
            )

    set_a = load_directory(opts.input_a)
    set_b = load_directory(opts.input_b)
    basis_a = pca.fit_pca(set_a, opts.rank, seed=opts.seed)
    basis_b = pca.fit_pca(set_b, opts.rank, seed=opts.seed)
    if opts.skew_align:
        basis_a = pca.align_skew(basis_a, set_a)
        basis_b = pca.align_skew(basis_b, set_b)
    za = pca.project(basis_a, set_a)
    zb = pca.project(basis_b, set_b)

    if opts.pairing == "supervised":
        pairing = align.Correspondence.from_ids(set_a.ids, set_b.ids)
        if len(pairing) == 0:
            raise DataMismatchError("no shared ids between domains; supervised pairing "
                                    "requires the paired-shuffled protocol")
        log.info("supervised fit on %d id-matched pairs", len(pairing))
        lmap = align.fit_paired(za, zb, pairing, mode=opts.mode, ridge=opts.ridge)
    else:
        config = align.IcpConfig(rank=opts.rank, max_iters=opts.max_iters, tol=opts.tol,
                                 min_buddies=opts.min_buddies, whiten=opts.whiten)
        lmap = align.fit_icp(za, zb, config)

    snapshot = {
        "rank": opts.rank, "seed": opts.seed, "pairing": opts.pairing, "mode": opts.mode,
        "ridge": opts.ridge, "max_iters": opts.max_iters, "tol": opts.tol,
        "min_buddies": opts.min_buddies, "whiten": opts.whiten,
        "skew_align": opts.skew_align,
        "input_a": str(opts.input_a), "input_b": str(opts.input_b),
    }
    model_store.save(Translator.bundle(basis_a, basis_b, lmap, snapshot), opts.out)
    log.info("saved model to %s (%d iterations)", opts.out, lmap.iterations_run)
    return 0


def cmd_translate(opts) -> int:
    translator = model_store.load(opts.model)
    images = load_directory(opts.input, expected_shape=translator.basis_a.shape)
    save_directory(translator.translate(images), opts.out)
    log.info("translated %d images into %s", len(images), opts.out)
    return 0


def cmd_eval(opts) -> int:
    pred = load_directory(opts.pred)
    target = load_directory(opts.target)
    result = metrics.evaluate(pred, target)
    result.write_csv(opts.out)
    if opts.json:
        result.write_json(opts.json)
    figure = _figure_path(opts)
    if figure is not None:
        report.eval_figure(result, figure)
    print(f"mean_mse={result.mean_mse!r} mean_ssim={result.mean_ssim!r}")
    return 0


def cmd_spectrum(opts) -> int:
    images = load_directory(opts.input)
    basis = pca.fit_pca(images, opts.rank, seed=opts.seed)
    rows = pca.spectrum_report(basis)
    with open(opts.out, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["index", "eigenvalue", "cumulative_fraction"])
        for index, eigenvalue, fraction in rows:
            writer.writerow([index, repr(eigenvalue), repr(fraction)])
    figure = _figure_path(opts)
    if figure is not None:
        report.spectrum_figure(rows, figure)
    return 0


def cmd_distcheck(opts) -> int:
    set_a = load_directory(opts.input_a)
    set_b = load_directory(opts.input_b)
    pairing = align.Correspondence.from_ids(set_a.ids, set_b.ids)
    if len(pairing) < 2:
        raise DataMismatchError("distcheck needs at least 2 id-matched images across domains")
    table = metrics.distance_scatter(set_a, set_b, pairing, n_pairs=opts.pairs, seed=opts.seed)
    with open(opts.out, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["d_a", "d_b"])
        for d_a, d_b in table:
            writer.writerow([repr(float(d_a)), repr(float(d_b))])
    figure = _figure_path(opts)
    if figure is not None:
        report.scatter_figure(table, figure)
    return 0


_COMMANDS = {
    "make-task": cmd_make_task,
    "fit": cmd_fit,
    "translate": cmd_translate,
    "eval": cmd_eval,
    "spectrum": cmd_spectrum,
    "distcheck": cmd_distcheck,
}


def main(argv: list[str] | None = None) -> int:
    logging.basicConfig(stream=sys.stderr, level=logging.INFO, format="%(message)s")
    args = _build_parser().parse_args(argv)
    try:
        opts = _merge_options(args)
        return _COMMANDS[args.command](opts)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except AlignmentError as exc:
        print(f"alignment failed: {exc}", file=sys.stderr)
        return 3
    except DataMismatchError as exc:
        print(f"data mismatch: {exc}", file=sys.stderr)
        return 4
    except LintraError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
