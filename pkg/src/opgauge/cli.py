"""Command-line entry point: ``opgauge {analyze,compare,sweep,diagnose,recover}``.

Exit status is 0 on success, 2 for input errors (bad arguments, unreadable
or invalid chain files) and 3 for failures during computation. Outputs are
written only after every requested file has been computed.
"""

import argparse
import dataclasses
import os
import sys
import tempfile
from pathlib import Path

import numpy as np

from . import __version__
from .chain import (
    chain_diagnostics,
    comparative_experiment,
    marginal_loss,
    search_comparison,
    stage_attribution,
    sweep,
)
from .chainfile import digest, parse_chain_file, serialize_chain
from .errors import InputError, OpgaugeError
from .measures import info_report
from .noise import NoiseModel, recoverability_experiment
from .report import build_document, dumps, render_spectrum_svg, spectrum_csv, sweep_csv

EXIT_OK, EXIT_INPUT, EXIT_COMPUTE = 0, 2, 3


def _read_chain(path, paper_capacity=False):
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise InputError(f"cannot read chain file: {exc.strerror}", str(path)) from None
    spec = parse_chain_file(text, path.parent)
    if paper_capacity:
        spec.thresholds = dataclasses.replace(spec.thresholds, paper_capacity=True)
    return spec, text


def _write_all(out_dir, files):
    """Write ``{name: text}`` into ``out_dir`` via temp files and renames."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    staged = []
    try:
        for name, text in files.items():
            fd, tmp = tempfile.mkstemp(dir=out_dir, prefix=f".{name}.")
            with os.fdopen(fd, "w", newline="\n") as fh:
                fh.write(text)
            staged.append((tmp, out_dir / name))
    except BaseException:
        for tmp, _ in staged:
            os.unlink(tmp)
        raise
    for tmp, final in staged:
        os.replace(tmp, final)
    return [final for _, final in staged]


def cmd_analyze(args):
    spec, text = _read_chain(args.chain, args.paper_capacity_convention)
    op = spec.operator()
    spectrum = op.spectrum(args.route, k=args.k, seed=args.seed)
    report = info_report(spectrum, spec.thresholds)
    attribution = None
    if args.attribution:
        ops = spec.realize_stages()
        reports = stage_attribution(ops, spec.thresholds)
        attribution = [
            {"stage": st.label, "report": r.to_dict(), "marginal_irreversibility": m}
            for st, r, m in zip(spec.stages, reports, marginal_loss(reports))
        ]
    doc = build_document(spec.label, spectrum, report, __version__, digest(text), attribution)
    stem = Path(args.chain).stem
    files = {f"{stem}.report.json": doc.to_json(), f"{stem}.spectrum.csv": spectrum_csv(spectrum)}
    if args.svg:
        files[f"{stem}.spectrum.svg"] = render_spectrum_svg(spectrum, report.delta, report.epsilon, spec.label)
    return _write_all(args.out, files)


def cmd_compare(args):
    files = {}
    if args.search:
        a, b, params = search_comparison()
        files["system_a.chain.json"] = serialize_chain(a)
        files["system_b.chain.json"] = serialize_chain(b)
        name = "comparison.json"
    else:
        if not (args.chain_a and args.chain_b):
            raise InputError("compare needs two chain files, or --search")
        a, _ = _read_chain(args.chain_a, args.paper_capacity_convention)
        b, _ = _read_chain(args.chain_b, args.paper_capacity_convention)
        params = None
        name = f"{Path(args.chain_a).stem}_vs_{Path(args.chain_b).stem}.json"
    if args.paper_capacity_convention:
        a.thresholds = dataclasses.replace(a.thresholds, paper_capacity=True)
    result = comparative_experiment(a, b, a.thresholds, params)
    files[name] = dumps(result.to_dict())
    return _write_all(args.out, files)


def _parse_values(text):
    try:
        return [float(v) if any(c in v for c in ".eE") else int(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise InputError(f"values must be comma-separated numbers, got {text!r}", "--values") from None


def cmd_sweep(args):
    spec, _ = _read_chain(args.chain, args.paper_capacity_convention)
    result = sweep(spec, args.parameter, _parse_values(args.values))
    return _write_all(args.out, {f"{Path(args.chain).stem}.sweep.csv": sweep_csv(result)})


def cmd_diagnose(args):
    spec, text = _read_chain(args.chain, args.paper_capacity_convention)
    ops = spec.realize_stages()
    reports = stage_attribution(ops, spec.thresholds)
    steps = chain_diagnostics(ops, spec.thresholds)
    doc = {
        "label": spec.label,
        "input_digest": digest(text),
        "tool_version": __version__,
        "attribution": [
            {"stage": st.label, "report": r.to_dict(), "marginal_irreversibility": m}
            for st, r, m in zip(spec.stages, reports, marginal_loss(reports))
        ],
        "composition": [
            {"prefix_end": spec.stages[i].label, "next": spec.stages[i + 1].label, **d.to_dict()}
            for i, d in enumerate(steps)
        ],
    }
    return _write_all(args.out, {f"{Path(args.chain).stem}.diagnostics.json": dumps(doc)})


def cmd_recover(args):
    spec, text = _read_chain(args.chain, args.paper_capacity_convention)
    op = spec.operator()
    x = np.full(op.n_object, args.object_value)
    result = recoverability_experiment(
        op, x, NoiseModel(args.sigma_n, args.seed), args.kappa, args.trials, spec.thresholds
    )
    doc = result.to_dict()
    for m in doc["per_mode"]:
        for key in ("empirical_relative_error", "predicted_relative_error"):
            if m[key] != m[key]:
                m[key] = None
    doc.update(label=spec.label, input_digest=digest(text), seed=args.seed, tool_version=__version__)
    return _write_all(args.out, {f"{Path(args.chain).stem}.recover.json": dumps(doc)})


def build_parser():
    parser = argparse.ArgumentParser(prog="opgauge", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"opgauge {__version__}")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--out", default=".", help="output directory (default: current)")
    common.add_argument("--seed", type=int, default=0)
    common.add_argument(
        "--paper-capacity-convention",
        action="store_true",
        help="report capacity 0 (not null) when no mode is recoverable",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("analyze", parents=[common], help="entropy, capacity and irreversibility of a chain")
    p.add_argument("chain")
    p.add_argument("--svg", action="store_true", help="also write a spectrum plot")
    p.add_argument("--attribution", action="store_true", help="add per-stage prefix reports")
    p.add_argument("--route", choices=("auto", "dense", "analytic", "randomized"), default="auto")
    p.add_argument("--k", type=int, default=None, help="modes to resolve on the randomized route")
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("compare", parents=[common], help="compare two chains on one grid")
    p.add_argument("chain_a", nargs="?")
    p.add_argument("chain_b", nargs="?")
    p.add_argument("--search", action="store_true", help="run the bundled blur/sampling parameter search")
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("sweep", parents=[common], help="vary one numeric stage field")
    p.add_argument("chain")
    p.add_argument("--parameter", required=True, help="stages[i].field or label.field")
    p.add_argument("--values", required=True, help="comma-separated values")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("diagnose", parents=[common], help="composition bounds and stage attribution")
    p.add_argument("chain")
    p.set_defaults(func=cmd_diagnose)

    p = sub.add_parser("recover", parents=[common], help="noisy recoverability experiment")
    p.add_argument("chain")
    p.add_argument("--sigma-n", type=float, required=True)
    p.add_argument("--kappa", type=float, default=3.0)
    p.add_argument("--trials", type=int, default=10_000)
    p.add_argument("--object-value", type=float, default=1.0, help="constant object value")
    p.set_defaults(func=cmd_recover)
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        written = args.func(args)
    except InputError as exc:
        print(f"opgauge: error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except (OpgaugeError, np.linalg.LinAlgError, FloatingPointError) as exc:
        print(f"opgauge: computation failed: {exc}", file=sys.stderr)
        return EXIT_COMPUTE
    for path in written:
        print(path)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
