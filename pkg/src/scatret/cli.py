"""Command-line entry point: ``scatret <command> [options]``.

Exit status is 0 on success, 1 on runtime failures and 2 on usage or
configuration errors.
"""
from __future__ import annotations

import argparse
import json
import sys
import time

import numpy as np

from . import imageio, synthetic
from .config import ConfigError, load_config
from .dwt import dwt2
from .filterbank import build_morlet_bank, littlewood_paley
from .retrieval import EvaluationReport, FeatureDB, bank_for, blur_sweep, extract_signature, index_dataset, query
from .scattering import ScatteringError, nwst, parse_path, path_label, wst, write_subband_dump
from .signature import METHODS
from .statmodel import FLOOR_REL, ggd_fit, weibull_fit

EXIT_OK, EXIT_FAILURE, EXIT_USAGE = 0, 1, 2


class UsageError(Exception):
    pass


def _config_options(p: argparse.ArgumentParser) -> None:
    g = p.add_argument_group("run configuration (flags override --config)")
    g.add_argument("--config", help="key = value config file")
    g.add_argument("--method", choices=METHODS)
    g.add_argument("-J", "--scales", dest="J", type=int)
    g.add_argument("-L", "--rotations", dest="L", type=int)
    g.add_argument("-M", "--max-path-length", dest="M", type=int)
    g.add_argument("--epsilon-rel", dest="epsilon_rel", type=float)
    g.add_argument("--center-freq", dest="center_freq", type=float)
    g.add_argument("--bandwidth-factor", dest="bandwidth_factor", type=float)
    g.add_argument("--slant", type=float)
    g.add_argument("--lowpass-width", dest="lowpass_width", type=float)
    g.add_argument("--oversampling", type=int)
    g.add_argument("--dwt-levels", dest="dwt_levels", type=int)
    g.add_argument("--patch-size", dest="patch_size", type=int)
    g.add_argument("--patching", choices=("grid", "five", "whole"))
    g.add_argument("--downscale", action="store_const", const=True, default=None,
                   help="halve images (2x2 block mean) before cutting patches")
    g.add_argument("--floor-rel", dest="floor_rel", type=float)
    g.add_argument("--seed", type=int)
    g.add_argument("--workers", type=int, help="feature-extraction processes (env SCATRET_WORKERS)")


_CONFIG_KEYS = ("method", "J", "L", "M", "epsilon_rel", "center_freq", "bandwidth_factor", "slant",
                "lowpass_width", "oversampling", "dwt_levels", "patch_size", "patching", "downscale",
                "floor_rel", "seed", "workers")


def _run_config(args, **extra):
    overrides = {k: getattr(args, k, None) for k in _CONFIG_KEYS}
    overrides.update(extra)
    return load_config(getattr(args, "config", None), **overrides)


def _emit(text: str, out_path=None) -> None:
    if out_path:
        with open(out_path, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _check_root(root):
    try:
        imageio.list_dataset(root)
    except imageio.ImageError as exc:
        raise UsageError(str(exc)) from None


# -- commands --------------------------------------------------------------------

def cmd_index(args) -> int:
    config = _run_config(args, root=args.root, db=args.db)
    _check_root(args.root)
    start = time.perf_counter()

    def progress(done, total, cls, pid):
        if args.verbose:
            print(f"[{done}/{total} files] {cls} #{pid}", file=sys.stderr)

    db = index_dataset(args.root, config, progress=progress)
    db.save(args.db)
    print(f"indexed {len(db)} records ({len(db.classes())} classes, {config.method}) "
          f"in {time.perf_counter() - start:.2f} s -> {args.db}")
    return EXIT_OK


def cmd_query(args) -> int:
    if args.n < 1:
        raise UsageError(f"-n must be >= 1, got {args.n}")
    config = _run_config(args)
    db = FeatureDB.load(args.db)
    sig = extract_signature(imageio.load_grayscale(args.image), config)
    for cls, pid, value in query(db, sig, args.n):
        print(f"{cls}\t{pid}\t{value:.6g}")
    return EXIT_OK


def cmd_evaluate(args) -> int:
    report = EvaluationReport.from_db(FeatureDB.load(args.db))
    _emit(report.to_json() + "\n" if args.format == "json" else report.to_text(), args.output)
    return EXIT_OK


def _parse_sigmas(text: str):
    try:
        sigmas = [float(s) for s in text.split(",") if s.strip()]
    except ValueError:
        raise UsageError(f"invalid sigma list {text!r}") from None
    if not sigmas or any(s < 0 for s in sigmas):
        raise UsageError(f"sigmas must be a nonempty list of nonnegative reals, got {text!r}")
    return sigmas


def cmd_blur_sweep(args) -> int:
    sigmas = _parse_sigmas(args.sigmas)
    config = _run_config(args, root=args.root)
    _check_root(args.root)
    rates = blur_sweep(args.root, config, sigmas)
    if args.format == "json":
        doc = {"method": config.method, "rates": [{"sigma": s, "rate": rates[s]} for s in sigmas]}
        _emit(json.dumps(doc, indent=2) + "\n", args.output)
    else:
        lines = [f"{'sigma':>8} {'rate':>8}"] + [f"{s:8g} {100 * rates[s]:7.2f}%" for s in sigmas]
        _emit("\n".join(lines) + "\n", args.output)
    return EXIT_OK


def _representation(image, config):
    patch = imageio.normalize_patch(image)
    if config.method == "fwt-ggd":
        return dwt2(patch, config.dwt_levels)
    bank = bank_for(config, patch.shape)
    if config.method == "nwst-weibull":
        return nwst(patch, bank, config.M, config.epsilon_rel, config.oversampling)
    return wst(patch, bank, config.M, config.oversampling)


def fit_inspect(image, config, selector: str, bins: int = 64) -> dict:
    """Histogram of one subband plus its fitted parameters."""
    rep = _representation(image, config)
    if config.method == "fwt-ggd":
        labels = {f"L{lvl}-{o[0].upper()}": (lvl, o) for lvl, o in rep.keys()}
        if selector not in labels:
            raise UsageError(f"invalid path selector {selector!r}; expected one of {', '.join(labels)}")
        samples = rep.details[labels[selector]].ravel()
        fit = ggd_fit(samples)
        params = {"alpha": fit.alpha, "beta": fit.beta}
    else:
        try:
            path = parse_path(selector)
        except ScatteringError as exc:
            raise UsageError(str(exc)) from None
        if not path or path not in rep.subbands:
            raise UsageError(f"invalid path selector {selector!r}: not a layer >= 1 path of this transform")
        sub = rep.subbands[path].ravel()
        floor = config.floor_rel * float(sub.max())
        fit = weibull_fit(sub, floor=floor)
        samples = sub[sub > floor]
        params = {"lambda": fit.lam, "k": fit.k}
        selector = path_label(path)
    counts, edges = np.histogram(samples, bins=bins, range=(float(samples.min()), float(samples.max())))
    return {"method": config.method, "path": selector, "samples": int(samples.size),
            "bin_edges": edges.tolist(), "counts": counts.tolist(), "params": params}


def cmd_fit_inspect(args) -> int:
    config = _run_config(args)
    doc = fit_inspect(imageio.load_grayscale(args.image), config, args.path)
    _emit(json.dumps(doc, indent=2) + "\n", args.output)
    return EXIT_OK


def cmd_dump(args) -> int:
    config = _run_config(args)
    if config.method == "fwt-ggd":
        raise UsageError("dump writes scattering subbands; choose wst-weibull or nwst-weibull")
    rep = _representation(imageio.load_grayscale(args.image), config)
    write_subband_dump(rep, args.output)
    print(f"wrote {len(rep.subbands)} subbands -> {args.output}")
    return EXIT_OK


def cmd_synth(args) -> int:
    config = _run_config(args)
    if args.kind == "fine-coarse":
        written = synthetic.write_fine_coarse_dataset(args.output, classes=args.classes,
                                                      images_per_class=args.images, size=args.size,
                                                      seed=config.seed)
    else:
        written = synthetic.write_separable_dataset(args.output, classes=args.classes,
                                                    images_per_class=args.images, size=args.size,
                                                    seed=config.seed)
    print(f"wrote {sum(len(v) for v in written.values())} images in {len(written)} classes -> {args.output}")
    return EXIT_OK


def cmd_bank(args) -> int:
    config = _run_config(args)
    bank = build_morlet_bank(args.size, args.size, config.J, config.L, slant=config.slant,
                             bandwidth_factor=config.bandwidth_factor, center_freq=config.center_freq,
                             lowpass_width=config.lowpass_width)
    _, delta = littlewood_paley(bank)
    doc = {"size": args.size, "J": bank.J, "L": bank.L, "gain": bank.gain, "lp_deviation": delta,
           "max_bandpass_dc": max(abs(complex(psi[0, 0])) for psi in bank.bandpass.values()),
           "max_bandpass_modulus": max(float(np.abs(psi).max()) for psi in bank.bandpass.values())}
    print(json.dumps(doc, indent=2))
    return EXIT_OK


# -- parser --------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="scatret", description="Scattering-based texture retrieval.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("index", help="index a dataset into a feature database")
    p.add_argument("root", help="dataset root, one subdirectory per class")
    p.add_argument("db", help="output database file")
    p.add_argument("-v", "--verbose", action="store_true", help="per-patch progress on stderr")
    _config_options(p)
    p.set_defaults(func=cmd_index)

    p = sub.add_parser("query", help="rank database records against an image")
    p.add_argument("db")
    p.add_argument("image")
    p.add_argument("-n", type=int, default=10, help="number of results (default 10)")
    _config_options(p)
    p.set_defaults(func=cmd_query)

    p = sub.add_parser("evaluate", help="retrieval rate of a database")
    p.add_argument("db")
    p.add_argument("--format", choices=("text", "json"), default="text")
    p.add_argument("-o", "--output")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("blur-sweep", help="retrieval rate versus Gaussian blur")
    p.add_argument("root")
    p.add_argument("--sigmas", default="0,1,2,4", help="comma-separated blur widths in pixels")
    p.add_argument("--format", choices=("text", "json"), default="text")
    p.add_argument("-o", "--output")
    _config_options(p)
    p.set_defaults(func=cmd_blur_sweep)

    p = sub.add_parser("fit-inspect", help="histogram and fit of one subband, as JSON")
    p.add_argument("image")
    p.add_argument("--path", required=True, help='scattering path such as "0,1" or "0,1/2,3"; DWT label such as "L1-H"')
    p.add_argument("-o", "--output")
    _config_options(p)
    p.set_defaults(func=cmd_fit_inspect)

    p = sub.add_parser("dump", help="write all scattering subbands of an image")
    p.add_argument("image")
    p.add_argument("output")
    _config_options(p)
    p.set_defaults(func=cmd_dump)

    p = sub.add_parser("synth", help="write a synthetic texture dataset")
    p.add_argument("output")
    p.add_argument("--kind", choices=("fine-coarse", "separable"), default="fine-coarse")
    p.add_argument("--classes", type=int, default=4)
    p.add_argument("--images", type=int, default=2, help="images per class")
    p.add_argument("--size", type=int, default=128)
    _config_options(p)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("bank", help="filterbank diagnostics")
    p.add_argument("--size", type=int, default=128)
    _config_options(p)
    p.set_defaults(func=cmd_bank)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (UsageError, ConfigError) as exc:
        print(f"scatret: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (OSError, ValueError, RuntimeError) as exc:
        print(f"scatret: {exc}", file=sys.stderr)
        return EXIT_FAILURE


if __name__ == "__main__":
    sys.exit(main())
