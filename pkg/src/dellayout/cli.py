"""Command-line front end: ``dellayout {sample,features,analyze,expressivity}``.

Exit codes: 0 ok, 2 configuration error, 3 data error, 4 numeric error,
5 expressivity criteria not met.
"""

from __future__ import annotations

import argparse
import logging
import os
import re
import sys
import time
from pathlib import Path

import numpy as np

from . import analysis
from .errors import ConfigError, CriteriaError, DataError, DelError
from .features import feature_tensors, write_features, write_features_csv
from .graph import load_dataset, read_edge_list
from .layout import ALGORITHMS, LayoutParams
from .sampler import SampleConfig, read_archive, sample_dataset, write_archive, write_traces_csv

log = logging.getLogger("dellayout")

ARCHIVE_NAME = "layouts.dela"
TRACES_NAME = "energy_traces.csv"
FEATURES_NAME = "features.delf"


def _positive_int(text):
    try:
        value = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected an integer, got {text!r}") from None
    if value < 1:
        raise argparse.ArgumentTypeError(f"must be >= 1, got {value}")
    return value


def _min2_int(text):
    value = _positive_int(text)
    if value < 2:
        raise argparse.ArgumentTypeError(f"must be >= 2, got {value}")
    return value


def _float_check(check, message):
    def parse(text):
        try:
            value = float(text)
        except ValueError:
            raise argparse.ArgumentTypeError(f"expected a number, got {text!r}") from None
        if not np.isfinite(value) or not check(value):
            raise argparse.ArgumentTypeError(f"{message}, got {text}")
        return value

    return parse


_positive = _float_check(lambda v: v > 0, "must be positive")
_nonneg = _float_check(lambda v: v >= 0, "must be >= 0")
_fraction = _float_check(lambda v: 0 < v <= 1, "must lie in (0, 1]")
_real = _float_check(lambda v: True, "must be finite")


def _seed(text):
    try:
        value = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected an integer, got {text!r}") from None
    if not 0 <= value < 2**64:
        raise argparse.ArgumentTypeError("must be a 64-bit unsigned integer")
    return value


def _cap(text):
    return None if text.lower() == "none" else _positive(text)


def _threads(text):
    return "auto" if text == "auto" else _positive_int(text)


def _add_sampling_flags(p, layouts=True):
    d = LayoutParams()
    g = p.add_argument_group("sampling")
    g.add_argument("--algo", choices=ALGORITHMS, default=d.algorithm, help="layout algorithm")
    if layouts:
        g.add_argument("--layouts", type=_positive_int, default=8, help="layouts per graph (k)")
    g.add_argument("--iterations", type=_positive_int, default=d.iterations,
                   help="iterations (FR/AR) or outer sweeps (KK)")
    g.add_argument("--dim", type=_min2_int, default=d.dim, help="layout dimension")
    g.add_argument("--kattr", type=_positive, default=d.k_attr, help="attraction coefficient")
    g.add_argument("--krep", type=_positive, default=d.k_rep, help="repulsion coefficient")
    g.add_argument("--a-exp", type=_real, default=d.a_exp, help="attraction exponent (ar)")
    g.add_argument("--r-exp", type=_real, default=d.r_exp, help="repulsion exponent (ar)")
    g.add_argument("--step", type=_positive, default=d.step_size, help="initial step size")
    g.add_argument("--cooling", type=_fraction, default=d.cooling, help="per-iteration step decay")
    g.add_argument("--noise", type=_nonneg, default=d.noise_scale, help="Langevin noise scale alpha")
    g.add_argument("--max-disp", type=_cap, default=d.max_displacement,
                   help="per-node displacement cap per step, or 'none'")
    g.add_argument("--init-box", type=_positive, default=d.init_box, help="half-width of random init box")
    g.add_argument("--spring-k", type=_positive, default=d.kk_spring_k, help="KK spring constant")
    g.add_argument("--kk-tolerance", type=_positive, default=d.kk_tolerance,
                   help="KK convergence threshold on max gradient norm")
    g.add_argument("--seed", type=_seed, default=0, help="base seed")
    g.add_argument("--threads", type=_threads, default=1, help="worker threads or 'auto'")


def _sample_config(args, layouts=None) -> SampleConfig:
    params = LayoutParams(
        algorithm=args.algo,
        dim=args.dim,
        iterations=args.iterations,
        k_attr=args.kattr,
        k_rep=args.krep,
        a_exp=args.a_exp,
        r_exp=args.r_exp,
        step_size=args.step,
        cooling=args.cooling,
        noise_scale=args.noise,
        max_displacement=args.max_disp,
        kk_spring_k=args.spring_k,
        kk_tolerance=args.kk_tolerance,
        init_box=args.init_box,
    )
    k = layouts if layouts is not None else getattr(args, "layouts", 8)
    return SampleConfig(k, args.seed, params, args.threads)


def _output_dir(args) -> Path:
    out = Path(args.output)
    out.mkdir(parents=True, exist_ok=True)
    return out


def cmd_sample(args) -> int:
    ds = load_dataset(args.input)
    cfg = _sample_config(args)
    out = _output_dir(args)
    start = time.perf_counter()
    ensembles = sample_dataset(ds, cfg)
    elapsed = time.perf_counter() - start
    write_archive(out / ARCHIVE_NAME, ensembles)
    write_traces_csv(out / TRACES_NAME, ensembles)
    for g, ens in zip(ds, ensembles):
        energies = [lay.final_energy for lay in ens.layouts]
        print(f"{g.graph_id}\tn={g.n}\tm={g.m}\tk={ens.k}\tmean_final_energy={np.mean(energies):.6g}")
    print(f"sampled {len(ensembles)} graphs x {cfg.layouts_per_graph} layouts in {elapsed:.3f} s")
    return 0


def cmd_features(args) -> int:
    ds = load_dataset(args.input)
    out = _output_dir(args)
    archive = Path(args.archive) if args.archive else out / ARCHIVE_NAME
    if archive.exists():
        ensembles = read_archive(archive)
    elif args.one_shot:
        ensembles = sample_dataset(ds, _sample_config(args))
    else:
        raise DataError(f"layout archive {archive} not found (run `sample` first or pass --one-shot)")
    tensors = feature_tensors(ensembles, list(ds))
    write_features(out / FEATURES_NAME, tensors)
    if args.csv:
        write_features_csv(out / "features.csv", tensors)
    print(f"wrote {len(tensors)} feature tensors to {out / FEATURES_NAME}")
    return 0


def cmd_analyze(args) -> int:
    if not (args.curve or args.layout_distance or args.mds):
        raise ConfigError("analyze needs at least one of --curve, --layout-distance, --mds")
    ds = load_dataset(args.input)
    out = _output_dir(args)
    cfg = _sample_config(args)
    if args.curve:
        curve = analysis.energy_curve(ds, cfg, args.iterations)
        analysis.write_energy_curve_csv(out / "energy_curve.csv", curve)
        print(f"energy curve: E[0]={curve[0]:.6g} E[{args.iterations}]={curve[-1]:.6g}")
    if args.layout_distance or args.mds:
        ensembles = sample_dataset(ds, cfg)
        for i, (g, ens) in enumerate(zip(ds, ensembles)):
            if g.m == 0:
                log.warning("%s: no edges, skipping layout distances", g.graph_id)
                continue
            D = analysis.layout_distance_matrix(ens, g)
            if args.layout_distance:
                analysis.write_distance_matrix_csv(out / f"layout_distance_{i}.csv", D)
            if args.mds:
                emb = analysis.classical_mds(D)
                analysis.write_mds_csv(out / f"mds_{i}.csv", emb)
                print(f"{g.graph_id}: MDS variance captured {emb.variance_fraction:.3f}")
    return 0


def _slug(text):
    return re.sub(r"[^A-Za-z0-9_.-]+", "_", text)


def cmd_expressivity(args) -> int:
    cfg = _sample_config(args, layouts=args.samples)
    pair = None
    if args.pair:
        a, b = (Path(p) for p in args.pair)
        pair = (read_edge_list(a, f"a:{a.stem}"), read_edge_list(b, f"b:{b.stem}"))
    report = analysis.expressivity_report(cfg, args.samples, pair)
    out = _output_dir(args)
    (out / "expressivity.json").write_text(report.to_json())
    analysis.write_gtw_samples_csv(out / "gtw_samples.csv", report.distributions)
    for d in report.distributions:
        analysis.write_kde_csv(out / f"kde_{_slug(d.graph_id)}.csv", d)
    sys.stdout.write(report.to_text())
    if not report.passed:
        reasons = []
        if not report.distinguishable:
            reasons.append(f"GTW distributions not distinguishable (KS p={report.ks_between[1]:.3g} "
                           f">= {analysis.DISTINGUISH_ALPHA})")
        if not report.stable:
            reasons.append(f"reruns not stable (fewer than {analysis.STABILITY_MIN_PASS} of "
                           f"{analysis.STABILITY_REPEATS} rerun KS p > {analysis.STABILITY_ALPHA})")
        raise CriteriaError("; ".join(reasons))
    return 0


def build_parser() -> argparse.ArgumentParser:
    fmt = argparse.ArgumentDefaultsHelpFormatter
    parser = argparse.ArgumentParser(prog="dellayout", description=__doc__.splitlines()[0], formatter_class=fmt)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("sample", help="sample layout ensembles", formatter_class=fmt)
    p.add_argument("--input", required=True, help="TUDataset directory or edge-list file")
    p.add_argument("--output", required=True, help="output directory")
    _add_sampling_flags(p)
    p.set_defaults(func=cmd_sample)

    p = sub.add_parser("features", help="build edge-length feature file", formatter_class=fmt)
    p.add_argument("--input", required=True, help="TUDataset directory or edge-list file")
    p.add_argument("--output", required=True, help="output directory")
    p.add_argument("--archive", default=None, help=f"layout archive (default: OUTPUT/{ARCHIVE_NAME})")
    p.add_argument("--one-shot", action="store_true", help="sample in-process when no archive exists")
    p.add_argument("--csv", action="store_true", help="also write a CSV mirror")
    _add_sampling_flags(p)
    p.set_defaults(func=cmd_features)

    p = sub.add_parser("analyze", help="energy curves, layout distances, MDS", formatter_class=fmt)
    p.add_argument("--input", required=True, help="TUDataset directory or edge-list file")
    p.add_argument("--output", required=True, help="output directory")
    p.add_argument("--curve", action="store_true", help="write the mean energy curve")
    p.add_argument("--layout-distance", action="store_true", help="write layout distance matrices")
    p.add_argument("--mds", action="store_true", help="write MDS coordinates of layout distances")
    _add_sampling_flags(p)
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("expressivity", help="GTW distinguishability report", formatter_class=fmt)
    p.add_argument("--output", required=True, help="output directory")
    p.add_argument("--samples", type=_min2_int, default=50, help="layouts sampled per graph")
    p.add_argument("--pair", nargs=2, metavar=("A", "B"), help="two edge-list files (default: built-in pair)")
    _add_sampling_flags(p, layouts=False)
    p.set_defaults(func=cmd_expressivity)
    return parser


def main(argv=None) -> int:
    level = os.environ.get("DEL_LOG", "WARNING").upper()
    logging.basicConfig(level=getattr(logging, level, logging.WARNING), format="%(levelname)s %(name)s: %(message)s")
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except DelError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return DataError.exit_code


if __name__ == "__main__":
    sys.exit(main())
