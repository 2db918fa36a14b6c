"""Command-line interface.

    hilbtrim radii    DATA --alpha 0.1,0.3,0.5 [-o radii.csv]
    hilbtrim screen   DATA [--alpha ...] [--bins 20] --out-dir DIR [--figures]
    hilbtrim trim     DATA --alpha 0.5 --beta 0.41 [--mode soft --beta1 0.5] [-K 2] [-o fit.json]
    hilbtrim simulate --config table1 --out-dir DIR [--replications N] [--figures]
    hilbtrim replay   MANIFEST

Exit status: 0 success, 2 unreadable input or bad arguments, 3 degenerate
configuration (e.g. every weight trimmed away), 1 anything else.
``HILBTRIM_THREADS`` sets the number of worker processes for ``simulate``.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
import tempfile
from importlib import resources
from pathlib import Path

import numpy as np

from . import __version__
from . import io as hio
from .depth import TrimConfig, alpha_radii, is_bimodal, histogram_valley, radius_histogram, trim_weights
from .estimators import breakdown_point, complement_mean, scores, trimmed_cov_pcs
from .exceptions import (
    BreakdownHypothesisError,
    DatasetParseError,
    DegenerateTrimError,
    HilbtrimError,
    InvalidAlphaError,
    InvalidConfigError,
    SimConfigError,
)
from .hilbert import pairwise_distances
from .simulation import SimConfig, default_workers, run_study

log = logging.getLogger("hilbtrim")

EXIT_OK, EXIT_ERROR, EXIT_PARSE, EXIT_DEGENERATE = 0, 1, 2, 3
DEFAULT_ALPHAS = "0.1,0.2,0.3,0.4,0.5"
SHIPPED_CONFIGS = ("table1", "table2")


def _alpha_list(text: str) -> list:
    try:
        vals = [float(a) for a in text.split(",") if a.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a comma-separated list of numbers: {text!r}") from None
    if not vals:
        raise argparse.ArgumentTypeError("empty alpha list")
    return vals


def _profiles(sample, alphas):
    dist = pairwise_distances(sample)
    return [alpha_radii(dist, a) for a in sorted(set(alphas))]


def _radii_rows(sample, profiles):
    ids = sample.observation_ids()
    for prof in profiles:
        for i, oid in enumerate(ids):
            yield oid, prof.alpha, prof.radii[i], prof.ranks[i]


def _histogram_rows(profiles, bins):
    for prof in profiles:
        edges, counts = radius_histogram(prof.radii, bins)
        for lo, hi, c in zip(edges[:-1], edges[1:], counts):
            yield prof.alpha, lo, hi, c


def _write(path, text):
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    Path(path).write_text(text, encoding="utf-8", newline="\n")


def _params(args, skip=("func", "figures", "manifest")):
    params = {k: v for k, v in vars(args).items() if k not in skip}
    if params.get("dataset"):
        params["dataset"] = str(Path(params["dataset"]).resolve())
    return params


# -- commands ---------------------------------------------------------------

def cmd_radii(args, manifest=True):
    sample = hio.load_dataset(args.dataset, args.format)
    profiles = _profiles(sample, args.alpha)
    text = hio.radii_csv(_radii_rows(sample, profiles))
    if args.output is None:
        sys.stdout.write(text)
        return {}
    _write(args.output, text)
    outputs = {"radii": args.output}
    if manifest:
        hio.write_manifest(f"{args.output}.manifest.json", "radii", _params(args), outputs, args.dataset)
    return outputs


def cmd_screen(args, manifest=True):
    sample = hio.load_dataset(args.dataset, args.format)
    profiles = _profiles(sample, args.alpha)
    out = Path(args.out_dir)
    outputs = {"radii": out / "radii.csv", "histogram": out / "histogram.csv"}
    _write(outputs["radii"], hio.radii_csv(_radii_rows(sample, profiles)))
    _write(outputs["histogram"], hio.histogram_csv(_histogram_rows(profiles, args.bins)))
    for prof in profiles:
        edges, counts = radius_histogram(prof.radii, args.bins)
        found = histogram_valley(counts)
        shape = "bimodal" if is_bimodal(counts) else "unimodal"
        line = f"alpha={prof.alpha:g}: {shape}"
        if shape == "bimodal":
            lo, v, hi = found
            above = int(np.sum(prof.radii > edges[v + 1]))
            line += (f", valley near radius {0.5 * (edges[v] + edges[v + 1]):.4g}; "
                     f"{above}/{prof.n} observations ({above / prof.n:.1%}) lie beyond it")
        print(line)
    if getattr(args, "figures", False):
        from .plotting import radii_histograms
        radii_histograms(profiles, out / "radii_histograms.png", args.bins)
    if manifest:
        hio.write_manifest(out / "manifest.json", "screen", _params(args), outputs, args.dataset)
    return outputs


def _trim_config(args) -> TrimConfig:
    beta1 = args.beta1
    if args.mode == "soft" and beta1 is None:
        beta1 = 0.5
    return TrimConfig(args.alpha, args.beta, args.mode, beta1 if args.mode == "soft" else None)


def _describe_radii(profile, bins=10) -> str:
    edges, counts = radius_histogram(profile.radii, bins)
    lines = [f"radii histogram (alpha={profile.alpha:g}, n={profile.n}):"]
    for lo, hi, c in zip(edges[:-1], edges[1:], counts):
        lines.append(f"  [{lo:.4g}, {hi:.4g}): {c}")
    ties = profile.n - np.unique(profile.ranks).size
    lines.append(f"  {ties} observations share a rank with another; choose beta so that "
                 "1 - beta exceeds the smallest rank fraction")
    return "\n".join(lines)


def trim_document(sample, cfg: TrimConfig, K: int) -> dict:
    dist = pairwise_distances(sample)
    profile = alpha_radii(dist, cfg.alpha)
    try:
        weights = trim_weights(profile, cfg)
    except DegenerateTrimError as exc:
        raise DegenerateTrimError(f"{exc}\n{_describe_radii(profile)}") from None
    fit = trimmed_cov_pcs(sample, weights, K)
    cut = weights.w == 0
    comp = complement_mean(sample, weights) if np.any(cut) else None
    try:
        bdp = breakdown_point(sample.n, cfg.alpha, cfg.beta)
        bdp = {"numerator": bdp.numerator, "denominator": bdp.denominator, "value": float(bdp)}
    except BreakdownHypothesisError:
        bdp = None
    doc = {
        "schema": "hilbtrim.trim/1",
        "config": {"alpha": cfg.alpha, "beta": cfg.beta, "mode": cfg.mode, "beta1": cfg.beta1,
                   "components": K},
        "n": sample.n,
        "channels": hio.channel_layout(sample),
        "ids": list(sample.observation_ids()),
        "radii": profile.radii.tolist(),
        "ranks": profile.ranks.tolist(),
        "weights": weights.w.tolist(),
        "effective_n": weights.effective_n,
        "trimmed_count": int(cut.sum()),
        "mean": fit.mean.tolist(),
        "complement_mean": None if comp is None else comp.tolist(),
        "eigenvalues": fit.eigenvalues.tolist(),
        "pc_values": fit.pc_values.tolist(),
        "scores": scores(sample, fit).tolist(),
        "truncated": fit.truncated,
        "repeated": fit.repeated.tolist(),
        "breakdown_point": bdp,
    }
    return doc, fit, comp


def cmd_trim(args, manifest=True):
    sample = hio.load_dataset(args.dataset, args.format)
    cfg = _trim_config(args)
    doc, fit, comp = trim_document(sample, cfg, args.components)
    text = hio.dumps_keyed(doc)
    outputs = {}
    if args.output is None:
        sys.stdout.write(text)
    else:
        _write(args.output, text)
        outputs["fit"] = args.output
    if getattr(args, "figures", None):
        from .plotting import trim_summary
        trim_summary(sample, fit, comp, Path(args.figures) / "trim_summary.png")
    mpath = getattr(args, "manifest", None) or (f"{args.output}.manifest.json" if args.output else None)
    if manifest and mpath and outputs:
        hio.write_manifest(mpath, "trim", _params(args), outputs, args.dataset)
    return outputs


def load_config_file(spec: str) -> dict:
    if spec in SHIPPED_CONFIGS:
        text = resources.files("hilbtrim").joinpath("configs", f"{spec}.toml").read_text(encoding="utf-8")
        suffix = ".toml"
    else:
        path = Path(spec)
        if not path.exists():
            raise DatasetParseError("config file not found", path)
        text = path.read_text(encoding="utf-8")
        suffix = path.suffix.lower()
    if suffix == ".json":
        try:
            return json.loads(text)
        except json.JSONDecodeError as exc:
            raise DatasetParseError(exc.msg, spec, exc.lineno) from None
    try:
        import tomllib
    except ModuleNotFoundError:  # Python < 3.11
        import tomli as tomllib
    try:
        return tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        raise DatasetParseError(str(exc), spec) from None


def resolve_sim_config(args) -> SimConfig:
    data = getattr(args, "resolved_config", None) or load_config_file(args.config)
    data = dict(data)
    for key in ("replications", "seed", "models"):
        val = getattr(args, key, None)
        if val is not None:
            data[key] = val
    return SimConfig.from_mapping(data)


def cmd_simulate(args, manifest=True):
    config = resolve_sim_config(args)
    workers = args.workers if args.workers else default_workers()
    report = run_study(config, workers=workers)
    out = Path(args.out_dir)
    outputs = {"report_csv": out / "report.csv"}
    _write(outputs["report_csv"], hio.report_csv(report))
    _write(out / "report.json", hio.report_json(report))
    for r in report.rows:
        if r.failures:
            log.warning("%s model %d eps %g: %d failed replications", r.estimator, r.model, r.epsilon, r.failures)
    if getattr(args, "figures", False):
        from .plotting import report_curves
        report_curves(report, out / "rmse.png")
    if manifest:
        params = _params(args)
        params["resolved_config"] = config.to_mapping()
        params["config_hash"] = config.digest()
        hio.write_manifest(out / "manifest.json", "simulate", params, outputs, seed=config.seed)
    return outputs


COMMANDS = {"radii": cmd_radii, "screen": cmd_screen, "trim": cmd_trim, "simulate": cmd_simulate}
# Output arguments per command, redirected into a scratch directory on replay.
OUTPUT_ARGS = {"radii": ("output",), "screen": ("out_dir",), "trim": ("output",), "simulate": ("out_dir",)}


def cmd_replay(args, manifest=False):
    doc = hio.read_manifest(args.manifest)
    command = doc["command"]
    params = dict(doc["config"])
    if doc.get("dataset"):
        ds = doc["dataset"]
        if hio.file_sha256(ds["path"]) != ds["sha256"]:
            print(f"dataset {ds['path']} changed since the manifest was written", file=sys.stderr)
            return {"ok": False}
    with tempfile.TemporaryDirectory() as tmp:
        for key in OUTPUT_ARGS[command]:
            params[key] = str(Path(tmp) / "out" / Path(params[key]).name) if key == "output" else str(Path(tmp) / "out")
        ns = argparse.Namespace(**params)
        produced = COMMANDS[command](ns, manifest=False)
        ok = True
        for role, rec in doc["outputs"].items():
            digest = hio.file_sha256(produced[role])
            same = digest == rec["sha256"]
            ok &= same
            print(f"{role}: {'identical' if same else 'DIFFERENT'} ({rec['path']})")
    return {"ok": ok}


# -- argument parsing ---------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="hilbtrim", description=__doc__.split("\n\n")[0])
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    def dataset_args(sp):
        sp.add_argument("dataset", help="matrix-CSV or channel-JSON file")
        sp.add_argument("--format", choices=("csv", "json"), help="override extension-based detection")

    sp = sub.add_parser("radii", help="alpha-radii and their ranks for each alpha")
    dataset_args(sp)
    sp.add_argument("--alpha", type=_alpha_list, required=True, help="comma-separated alphas")
    sp.add_argument("-o", "--output", help="CSV path (default: stdout)")
    sp.set_defaults(func=cmd_radii)

    sp = sub.add_parser("screen", help="radii for several alphas plus binned histograms")
    dataset_args(sp)
    sp.add_argument("--alpha", type=_alpha_list, default=_alpha_list(DEFAULT_ALPHAS))
    sp.add_argument("--bins", type=int, default=20)
    sp.add_argument("--out-dir", required=True)
    sp.add_argument("--figures", action="store_true", help="also render histogram PNGs")
    sp.set_defaults(func=cmd_screen)

    sp = sub.add_parser("trim", help="trimmed mean, trimmed components and scores")
    dataset_args(sp)
    sp.add_argument("--alpha", type=float, default=0.5)
    sp.add_argument("--beta", type=float, required=True)
    sp.add_argument("--beta1", type=float, help="soft mode only (default 0.5)")
    sp.add_argument("--mode", choices=("hard", "soft"), default="hard")
    sp.add_argument("-K", "--components", type=int, default=2)
    sp.add_argument("-o", "--output", help="JSON path (default: stdout)")
    sp.add_argument("--manifest", help="manifest path (default: OUTPUT.manifest.json)")
    sp.add_argument("--figures", metavar="DIR", help="render mean/component plots into DIR")
    sp.set_defaults(func=cmd_trim)

    sp = sub.add_parser("simulate", help="Monte Carlo study from a config file")
    sp.add_argument("--config", required=True,
                    help=f"TOML/JSON file or a shipped name ({', '.join(SHIPPED_CONFIGS)})")
    sp.add_argument("--out-dir", required=True)
    sp.add_argument("--replications", type=int)
    sp.add_argument("--seed", type=int)
    sp.add_argument("--models", type=lambda s: [int(m) for m in s.split(",")])
    sp.add_argument("--workers", type=int, help="processes (default: $HILBTRIM_THREADS or 1)")
    sp.add_argument("--figures", action="store_true", help="also render rmse.png")
    sp.set_defaults(func=cmd_simulate)

    sp = sub.add_parser("replay", help="re-run a manifest and compare output checksums")
    sp.add_argument("manifest")
    sp.set_defaults(func=cmd_replay)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        result = args.func(args)
    except (DatasetParseError, SimConfigError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except (DegenerateTrimError, InvalidAlphaError, InvalidConfigError, BreakdownHypothesisError) as exc:
        print(f"degenerate configuration: {exc}", file=sys.stderr)
        return EXIT_DEGENERATE
    except (HilbtrimError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR
    if args.command == "replay" and not result.get("ok", False):
        return EXIT_ERROR
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
