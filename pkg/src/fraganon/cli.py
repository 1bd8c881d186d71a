"""Command-line front end: anonymize, verify, attack, eval, sweep.

Exit codes: 0 success, 1 privacy violation found, 2 usage/input error,
3 internal assertion. ``FRAGANON_LOG_LEVEL`` sets the log level.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from . import __version__
from .attacks import audit
from .data import DataFormatError, Fragment, SchemaError, attribute_ranges, load_csv, load_schema, project
from .ldiversity import group_by_segment, ldiverse_pipeline
from .metrics import METRICS_HEADER, information_loss, weighted_f_measure
from .mondrian import mondrian_l_diverse
from .pipeline import fragment_and_anonymize
from .publish import MANIFEST, load_published, write_fragment, write_manifest, write_violations
from .reconstruct.graph import EnforcementError
from .reconstruct.joins import Violation
from .reconstruct.versions import EtaUndefinedError

log = logging.getLogger("fraganon")

EXIT_OK, EXIT_VIOLATION, EXIT_USAGE, EXIT_INTERNAL = 0, 1, 2, 3
REPORT = "enforcement_report.json"


class UsageError(Exception):
    pass


def _positive_k(text: str) -> int:
    k = int(text)
    if k < 2:
        raise argparse.ArgumentTypeError("k must be at least 2")
    return k


def _int_list(text: str) -> list[int]:
    try:
        return [int(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None


def _str_list(text: str) -> list[str]:
    return [t.strip() for t in text.split(",") if t.strip()]


# -- anonymize ---------------------------------------------------------------

def _fragment_names(dataset, fragments):
    names = dataset.names
    return [[names[a] for a in f.fragment.feature_indices] for f in fragments]


def cmd_anonymize(args) -> int:
    if args.model == "l-div":
        if args.strategy is not None:
            raise UsageError("--strategy does not apply to --model l-div (the pipeline is non-reconstructable by construction)")
        if args.l is None or args.l < 2:
            raise UsageError("--model l-div needs --l >= 2")
    elif args.l is not None:
        raise UsageError("--l only applies to --model l-div")
    if args.fragments < 1:
        raise UsageError("--fragments must be at least 1")

    schema = load_schema(args.schema)
    dataset = load_csv(args.input, schema)
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    class_name = dataset.names[dataset.class_index]

    strategy = args.strategy or "dgbe"
    manifest = {
        "version": __version__,
        "model": args.model,
        "k": args.k,
        "l": args.l,
        "strategy": strategy if args.model == "k-anon" else None,
        "delta": args.delta if args.model == "k-anon" and strategy == "delta" else None,
        "bins": args.bins,
        "seed": args.seed,
        "parts": args.fragments,
        "input": str(args.input),
        "schema": str(args.schema),
        "class_name": class_name,
        "rows": dataset.row_count,
        "attribute_ranges": {str(a): list(r) for a, r in sorted(attribute_ranges(dataset).items())},
    }

    if args.model == "k-anon":
        result = fragment_and_anonymize(dataset, args.k, strategy, parts=args.fragments, bins=args.bins,
                                        delta=args.delta, seed=args.seed)
        fragments = result.fragments
        manifest["report"] = dict(result.report.as_dict(), total=result.report.total)
        Path(out, REPORT).write_text(json.dumps(manifest["report"], indent=2, sort_keys=True) + "\n", encoding="utf-8")
    else:
        result = ldiverse_pipeline(dataset, args.k, args.l, bins=args.bins, parts=args.fragments, seed=args.seed)
        fragments = result.fragments
        manifest["segments"] = len(result.segments)
        manifest["report"] = {"strategy": "l-div", "total": 0}

    entries = []
    for i, (frag, names) in enumerate(zip(fragments, _fragment_names(dataset, fragments))):
        fname = f"fragment_{i + 1}.csv"
        write_fragment(frag, names, out / fname, class_name, debug=args.debug)
        entries.append({"file": fname, "attribute_indices": list(frag.fragment.feature_indices),
                        "names": names, "mode": frag.mode, "classes": len(frag.classes)})
    manifest["fragments"] = entries
    write_manifest(out, manifest)
    print(f"wrote {len(entries)} fragment(s) to {out} (distortions={manifest['report']['total']})")
    return EXIT_OK


# -- verify ------------------------------------------------------------------

def _load(out_dir: str):
    out = Path(out_dir)
    if not Path(out, MANIFEST).exists():
        raise UsageError(f"{out}: no {MANIFEST}; run 'anonymize' first")
    manifest = json.loads(Path(out, MANIFEST).read_text(encoding="utf-8"))
    for key in ("k", "fragments"):
        if key not in manifest:
            raise UsageError(f"manifest mismatch: missing {key!r}")
    for entry in manifest["fragments"]:
        path = out / entry["file"]
        if not path.exists():
            raise UsageError(f"missing fragment file {path}")
        with path.open(newline="", encoding="utf-8") as fh:
            header = next(csv.reader(fh), [])
        if header[1:1 + len(entry["names"])] != entry["names"]:
            raise UsageError(f"manifest mismatch: {path} header {header} does not list {entry['names']}")
    try:
        return load_published(out)
    except ValueError as exc:
        raise UsageError(f"manifest mismatch: {exc}") from None


def _ldiv_rows(fragments, failures):
    """Translate group-local l-diversity failures to published class indices."""
    rows = []
    for key, x, y, fail in failures:
        ga = group_by_segment(fragments[x])[key]
        gb = group_by_segment(fragments[y]).get(key, [])
        ia = next(i for i, eq in enumerate(fragments[x].classes) if eq is ga[fail.eq_a])
        ib = next(i for i, eq in enumerate(fragments[y].classes) if eq is gb[fail.eq_b])
        rows.append(Violation(f"F{x + 1}", (ia,), f"F{y + 1}", (ib,), fail.join_size, fail.expected))
    return rows


def _violations(report, fragments):
    out = [Violation(f"F{f + 1}", (i,), "", (), size, report.k) for f, i, size in report.small_classes]
    out.extend(report.violations)
    out.extend(_ldiv_rows(fragments, report.ldiv_failures))
    return out


def _audit_args(manifest):
    l = manifest.get("l") if manifest.get("model") == "l-div" else None
    delta = manifest.get("delta") if manifest.get("strategy") == "delta" else None
    return manifest["k"], l, delta


def cmd_verify(args) -> int:
    manifest, fragments = _load(args.out_dir)
    k, l, delta = _audit_args(manifest)
    report = audit(fragments, k, l, delta)
    rows = _violations(report, fragments)
    write_violations(rows, Path(args.out_dir, "violations.csv"))
    sys.stdout.write(report.text())
    for v in rows[:20]:
        print(f"violation: {v.fragment_a}[{':'.join(map(str, v.eq_a))}] x {v.fragment_b}"
              f"[{':'.join(map(str, v.eq_b))}] -> {v.value} (threshold {v.threshold})")
    return EXIT_OK if report.passed else EXIT_VIOLATION


# -- attack ------------------------------------------------------------------

def cmd_attack(args) -> int:
    manifest, fragments = _load(args.out_dir)
    k, l, delta = _audit_args(manifest)
    input_path = args.input or manifest.get("input")
    schema_path = args.schema or manifest.get("schema")
    original = None
    if input_path and schema_path and Path(input_path).exists():
        original = load_csv(input_path, load_schema(schema_path))
    elif args.input:
        raise UsageError(f"cannot read original data {input_path}")
    report = audit(fragments, k, l, delta, original=original, members=args.members,
                   non_members=args.non_members, seed=args.seed)
    text = report.text()
    Path(args.out_dir, "audit.txt").write_text(text, encoding="utf-8")
    with Path(args.out_dir, "audit.csv").open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["item", "value"])
        for name, ok in report.checks.items():
            w.writerow([name, "pass" if ok else "fail"])
        for name, value in report.membership.items():
            w.writerow([f"membership_{name}", format(value, ".6g")])
    write_violations(_violations(report, fragments), Path(args.out_dir, "violations.csv"))
    sys.stdout.write(text)
    return EXIT_OK if report.passed else EXIT_VIOLATION


# -- eval --------------------------------------------------------------------

def _fmt(v):
    if v is None:
        return ""
    if isinstance(v, float):
        return format(v, ".6f")
    return str(v)


def _write_metrics(rows: list[list], path: str | None) -> None:
    fh = sys.stdout if path is None else open(path, "w", newline="", encoding="utf-8")
    try:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(METRICS_HEADER)
        for r in rows:
            w.writerow([_fmt(v) for v in r])
    finally:
        if path is not None:
            fh.close()


def cmd_eval(args) -> int:
    manifest, fragments = _load(args.out_dir)
    ranges = {int(a): tuple(r) for a, r in manifest["attribute_ranges"].items()}
    loss = information_loss(fragments, ranges)
    wf = None
    if args.test:
        schema = load_schema(args.schema or manifest["schema"])
        wf = weighted_f_measure(fragments, load_csv(args.test, schema), args.neighbors)
    strategy = manifest.get("strategy") or manifest.get("model")
    row = [args.run_id, manifest["k"], manifest.get("l"), manifest.get("delta"), len(ranges), strategy,
           loss, wf, manifest.get("report", {}).get("total", 0)]
    _write_metrics([row], args.output or str(Path(args.out_dir, "metrics.csv")))
    print(",".join(_fmt(v) for v in row))
    return EXIT_OK


# -- sweep -------------------------------------------------------------------

def _sweep_cell(cell: dict) -> list[list]:
    """One (dims, k) grid cell: the unfragmented baseline plus every requested strategy."""
    train, test = cell["train"], cell["test"]
    k, l, dims = cell["k"], cell["l"], cell["dims"]
    ranges = attribute_ranges(train)
    rows = []

    def score(fragments):
        return information_loss(fragments, ranges), (weighted_f_measure(fragments, test, cell["neighbors"])
                                                      if test is not None else None)

    if cell["k_anon"]:
        base = fragment_and_anonymize(train, k, "none", parts=1, bins=cell["bins"], seed=cell["seed"])
        rows.append([None, k, None, None, dims, "unfragmented", *score(base.fragments), 0])
        for strategy in cell["strategies"]:
            delta = cell["delta"] if strategy == "delta" else None
            res = fragment_and_anonymize(train, k, strategy, parts=cell["parts"], bins=cell["bins"],
                                         delta=cell["delta"], seed=cell["seed"])
            rows.append([None, k, None, delta, dims, strategy, *score(res.fragments), res.report.total])
    if cell["l_div"]:
        whole = project(train, Fragment(train.feature_origin()))
        base = [mondrian_l_diverse(whole, k, l)]
        rows.append([None, k, l, None, dims, "l-div-unfragmented", *score(base), 0])
        res = ldiverse_pipeline(train, k, l, bins=cell["bins"], parts=cell["parts"], seed=cell["seed"])
        rows.append([None, k, l, None, dims, "l-div", *score(res.fragments), 0])
    return rows


def cmd_sweep(args) -> int:
    schema = load_schema(args.schema)
    data = load_csv(args.input, schema)
    features = data.feature_indices
    if max(args.dims) > len(features):
        raise UsageError(f"--dims up to {max(args.dims)} but the table has {len(features)} features")
    if any(k < 2 for k in args.k):
        raise UsageError("every k must be at least 2")
    models = set(args.models)
    if not models <= {"k-anon", "l-div"}:
        raise UsageError(f"unknown model(s) {sorted(models - {'k-anon', 'l-div'})}")
    bad = set(args.strategies) - {"naive", "dgbe", "delta"}
    if bad:
        raise UsageError(f"unknown strategies {sorted(bad)}")

    rng = np.random.default_rng(args.seed)
    if args.test:
        train, test = data, load_csv(args.test, schema)
    elif args.test_fraction > 0:
        order = rng.permutation(data.row_count)
        n_test = int(round(args.test_fraction * data.row_count))
        train, test = data.take(np.sort(order[n_test:])), data.take(np.sort(order[:n_test]))
    else:
        train, test = data, None
    # one random feature order; each dimensionality takes a prefix so sweeps are nested
    chosen = [features[i] for i in rng.permutation(len(features))]

    cells = []
    for dims in args.dims:
        cols = sorted(chosen[:dims]) + [data.class_index]
        for k in args.k:
            cells.append({
                "train": train.select(cols), "test": None if test is None else test.select(cols),
                "k": k, "l": args.l, "dims": dims, "strategies": args.strategies, "delta": args.delta,
                "bins": args.bins, "parts": args.fragments, "seed": args.seed, "neighbors": args.neighbors,
                "k_anon": "k-anon" in models, "l_div": "l-div" in models,
            })
    if args.jobs > 1:
        with ProcessPoolExecutor(max_workers=args.jobs) as pool:
            results = list(pool.map(_sweep_cell, cells))
    else:
        results = [_sweep_cell(c) for c in cells]
    rows = [r for cell_rows in results for r in cell_rows]
    for i, r in enumerate(rows, start=1):
        r[0] = i
    _write_metrics(rows, args.output)
    return EXIT_OK


# -- entry point -------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="fraganon", description="Vertical fragmentation + k-anonymity / l-diversity.")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    a = sub.add_parser("anonymize", help="fragment, anonymize and publish a table")
    a.add_argument("--input", required=True)
    a.add_argument("--schema", required=True)
    a.add_argument("--model", choices=["k-anon", "l-div"], default="k-anon")
    a.add_argument("--k", type=_positive_k, required=True)
    a.add_argument("--l", type=int)
    a.add_argument("--strategy", choices=["naive", "dgbe", "delta"])
    a.add_argument("--delta", type=float, default=0.5)
    a.add_argument("--bins", type=int, default=10)
    a.add_argument("--seed", type=int, default=0)
    a.add_argument("--out-dir", required=True)
    a.add_argument("--fragments", type=int, default=2)
    a.add_argument("--debug", action="store_true", help="add the segment id column (not safe to publish)")
    a.set_defaults(func=cmd_anonymize)

    v = sub.add_parser("verify", help="re-check published fragments; exit 1 on any violation")
    v.add_argument("--out-dir", required=True)
    v.set_defaults(func=cmd_verify)

    t = sub.add_parser("attack", help="adversary audit: join checks and membership likelihood")
    t.add_argument("--out-dir", required=True)
    t.add_argument("--input", help="original table (defaults to the manifest's input)")
    t.add_argument("--schema")
    t.add_argument("--members", type=int, default=100)
    t.add_argument("--non-members", type=int, default=100)
    t.add_argument("--seed", type=int, default=0)
    t.set_defaults(func=cmd_attack)

    e = sub.add_parser("eval", help="information loss and weighted F-measure of published fragments")
    e.add_argument("--out-dir", required=True)
    e.add_argument("--test", help="held-out table for the k-NN ensemble")
    e.add_argument("--schema")
    e.add_argument("--neighbors", type=int, default=5)
    e.add_argument("--run-id", default="1")
    e.add_argument("--output", help="metrics CSV path (default <out-dir>/metrics.csv)")
    e.set_defaults(func=cmd_eval)

    s = sub.add_parser("sweep", help="metrics over a (dims, k, strategy) grid")
    s.add_argument("--input", required=True)
    s.add_argument("--schema", required=True)
    s.add_argument("--dims", type=_int_list, default=[10, 20, 30, 40])
    s.add_argument("--k", type=_int_list, default=[40])
    s.add_argument("--l", type=int, default=2)
    s.add_argument("--models", type=_str_list, default=["k-anon"])
    s.add_argument("--strategies", type=_str_list, default=["naive", "dgbe", "delta"])
    s.add_argument("--delta", type=float, default=0.5)
    s.add_argument("--bins", type=int, default=10)
    s.add_argument("--fragments", type=int, default=2)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--test", help="held-out table; otherwise a seeded split of --input")
    s.add_argument("--test-fraction", type=float, default=0.3)
    s.add_argument("--neighbors", type=int, default=5)
    s.add_argument("--jobs", type=int, default=1)
    s.add_argument("--output", help="metrics CSV path (default stdout)")
    s.set_defaults(func=cmd_sweep)
    return p


def main(argv: list[str] | None = None) -> int:
    logging.basicConfig(level=os.environ.get("FRAGANON_LOG_LEVEL", "WARNING").upper(),
                        format="%(levelname)s %(name)s: %(message)s")
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (UsageError, SchemaError, DataFormatError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (AssertionError, EnforcementError, EtaUndefinedError) as exc:
        print(f"internal error: {exc}", file=sys.stderr)
        return EXIT_INTERNAL
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
