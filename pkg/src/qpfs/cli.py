"""Command-line front end.

Subcommands: fetch, select, evaluate, reproduce, inspect.  Every flag can
also be given in a flat key-value config file (``--config``); explicit
flags win over config values, which win over defaults.  Exit codes: 0
success, 2 configuration error, 3 data error, 4 numerical failure.
"""

from __future__ import annotations

import argparse
import json
import sys
from importlib import resources
from pathlib import Path

from . import __version__
from .errors import ConfigError, DataError, NumericalError, QpfsError
from .evaluation import (CONVENTIONS, CvProtocol, format_delta_table,
                         format_report_table, reports_to_json)
from .fetch import SOURCES, fetch_dataset
from .ingest import (DiscretizationPolicy, Dataset, load_csv, load_schema,
                     parse_schema_text)
from .pipeline import (METHODS, Q_DIAGONALS, SelectionConfig, inspect_quantities,
                       reference_results, reproduce_tables, select_features)
from .qp import weights_to_text

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_DATA = 3
EXIT_NUMERICAL = 4


# ---------------------------------------------------------------------------
# Config file and flag merging
# ---------------------------------------------------------------------------

def read_config_file(path) -> dict[str, str]:
    """Flat ``key = value`` lines; '#' starts a comment."""
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path}: {exc}") from exc
    values: dict[str, str] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}, line {lineno}: expected 'key = value'")
        key, _, value = line.partition("=")
        values[key.strip().replace("-", "_")] = value.strip()
    return values


def _coerce(key: str, value: str):
    as_int = ("k", "bins", "folds", "cv_seed", "seed", "relieff_neighbors",
              "relieff_iterations")
    as_float = ("alpha", "ridge")
    as_bool = ("header", "strict", "force", "stratified")
    if key in as_int:
        return int(value)
    if key in as_float:
        return float(value)
    if key in as_bool:
        lowered = value.lower()
        if lowered in ("true", "yes", "1"):
            return True
        if lowered in ("false", "no", "0"):
            return False
        raise ConfigError(f"config key {key!r}: expected a boolean, got {value!r}")
    return value


def merged_option(args, config: dict, key: str, default=None):
    """Flag value if given, else config-file value, else default."""
    flag = getattr(args, key, None)
    if flag is not None:
        return flag
    if key in config:
        try:
            return _coerce(key, config[key])
        except ValueError as exc:
            raise ConfigError(f"config key {key!r}: {exc}") from exc
    return default


# ---------------------------------------------------------------------------
# Shared resolution helpers
# ---------------------------------------------------------------------------

def packaged_schema_text(name: str) -> str:
    return resources.files("qpfs.data").joinpath(f"{name}.schema").read_text()


def resolve_dataset(args, config) -> Dataset:
    name = merged_option(args, config, "name")
    data_path = merged_option(args, config, "data")
    schema_path = merged_option(args, config, "schema")
    data_dir = merged_option(args, config, "data_dir", "data")

    if name is not None and name not in SOURCES:
        raise ConfigError(f"unknown dataset name {name!r}; expected one of {sorted(SOURCES)}")
    if data_path is None:
        if name is None:
            raise ConfigError("give --data/--schema paths or --name german|australian")
        data_path = Path(data_dir) / SOURCES[name].filename
    if schema_path is not None:
        schema = load_schema(schema_path)
    elif name is not None:
        schema = parse_schema_text(packaged_schema_text(name), source=f"<packaged {name}>")
    else:
        raise ConfigError("a --schema file is required with --data")

    delimiter = merged_option(args, config, "delimiter",
                              "whitespace" if name is not None else ",")
    delimiter = None if delimiter == "whitespace" else delimiter
    header = bool(merged_option(args, config, "header", False))
    return load_csv(data_path, schema, delimiter=delimiter, header=header,
                    name=name or Path(data_path).stem)


def resolve_selection_config(args, config) -> SelectionConfig:
    policy = DiscretizationPolicy(
        method=merged_option(args, config, "binning", "equal-frequency"),
        n_bins=int(merged_option(args, config, "bins", 10)),
        missing_policy=merged_option(args, config, "missing", "impute-median"),
    )
    relieff_iterations = merged_option(args, config, "relieff_iterations")
    return SelectionConfig(
        method=merged_option(args, config, "method", "quadratic"),
        k=int(merged_option(args, config, "k", 5)),
        policy=policy,
        alpha=merged_option(args, config, "alpha"),
        q_diagonal=merged_option(args, config, "q_diagonal", "zero"),
        relieff_neighbors=int(merged_option(args, config, "relieff_neighbors", 10)),
        relieff_iterations=relieff_iterations,
        seed=int(merged_option(args, config, "seed", 0)),
    )


def resolve_protocol(args, config) -> CvProtocol:
    return CvProtocol(
        n_folds=int(merged_option(args, config, "folds", 10)),
        stratified=bool(merged_option(args, config, "stratified", True)),
        seed=int(merged_option(args, config, "cv_seed", 20130101)),
        encoding=merged_option(args, config, "encoding", "one-hot"),
    )


def _write(out_dir: Path, filename: str, text: str) -> Path:
    out_dir.mkdir(parents=True, exist_ok=True)
    path = out_dir / filename
    path.write_text(text)
    return path


# ---------------------------------------------------------------------------
# Subcommands
# ---------------------------------------------------------------------------

def cmd_fetch(args, config) -> int:
    data_dir = merged_option(args, config, "data_dir", "data")
    only = merged_option(args, config, "only")
    keys = [only] if only else sorted(SOURCES)
    for key in keys:
        path = fetch_dataset(key, data_dir, force=bool(getattr(args, "force", False)))
        print(f"{key}: {path}")
    return EXIT_OK


def cmd_select(args, config) -> int:
    data = resolve_dataset(args, config)
    sel_config = resolve_selection_config(args, config)
    output = select_features(data, sel_config)
    names = output.discretized.feature_names

    if output.alpha is not None:
        print(f"alpha = {output.alpha:.6f}"
              + ("" if sel_config.alpha is None else " (override)"))
        print(f"psd_shift = {output.problem.psd_shift:.3e}")
    print(f"method = {output.result.method}, k = {output.result.k}")
    print(output.result.to_text(names), end="")

    out_dir = merged_option(args, config, "out")
    if out_dir is not None:
        out_dir = Path(out_dir)
        _write(out_dir, "selection.txt", output.result.to_text(names))
        if output.weights is not None:
            _write(out_dir, "weights.txt", weights_to_text(output.weights, names))
    return EXIT_OK


def cmd_evaluate(args, config) -> int:
    from .evaluation import evaluate

    data = resolve_dataset(args, config)
    sel_config = resolve_selection_config(args, config)
    protocol = resolve_protocol(args, config)
    ridge = float(merged_option(args, config, "ridge", 1e-6))
    convention = merged_option(args, config, "error_convention", "bad-positive")
    if convention not in CONVENTIONS:
        raise ConfigError(f"unknown error convention {convention!r}")
    strict = bool(merged_option(args, config, "strict", False))

    output = select_features(data, sel_config)
    strict_selector = None
    if strict:
        def strict_selector(train):
            return select_features(train, sel_config).result.selected

    report = evaluate(data, output.result.selected, protocol, ridge=ridge,
                      convention=convention, method=sel_config.method,
                      strict_selector=strict_selector)
    print(f"dataset = {report.dataset}, method = {report.method}, k = {report.k}")
    print(f"test_error  = {report.test_error:.3f}")
    print(f"type1_error = {report.type1_error:.3f}")
    print(f"type2_error = {report.type2_error:.3f}")

    out_dir = merged_option(args, config, "out")
    if out_dir is not None:
        out_dir = Path(out_dir)
        payload = report.to_dict()
        payload["protocol"] = {"n_folds": protocol.n_folds, "seed": protocol.seed,
                               "stratified": protocol.stratified,
                               "encoding": protocol.encoding, "ridge": ridge,
                               "convention": convention, "strict": strict}
        _write(out_dir, "report.json", json.dumps(payload, indent=2, sort_keys=True) + "\n")
    return EXIT_OK


def cmd_reproduce(args, config) -> int:
    data_dir = Path(merged_option(args, config, "data_dir", "data"))
    only = merged_option(args, config, "only")
    out_dir = Path(merged_option(args, config, "out", "qpfs_out"))
    sel_config = resolve_selection_config(args, config)
    protocol = resolve_protocol(args, config)
    ridge = float(merged_option(args, config, "ridge", 1e-6))
    convention = merged_option(args, config, "error_convention", "bad-positive")
    strict = bool(merged_option(args, config, "strict", False))

    keys = [only] if only else list(SOURCES)    # registry order: german first
    reference = reference_results()
    datasets: dict[str, tuple[Dataset, int]] = {}
    for key in keys:
        if key not in SOURCES:
            raise ConfigError(f"unknown dataset name {key!r}")
        path = data_dir / SOURCES[key].filename
        if not path.exists():
            raise DataError(
                f"dataset file {path} not found; run `qpfs fetch` or place it there"
            )
        schema = parse_schema_text(packaged_schema_text(key), source=f"<packaged {key}>")
        datasets[key] = (load_csv(path, schema, delimiter=None, name=key),
                         SOURCES[key].k_published)

    all_reports = reproduce_tables(datasets, sel_config, protocol, ridge=ridge,
                                   convention=convention, strict=strict)

    for key, reports in all_reports.items():
        table = format_report_table(key, datasets[key][1], reports)
        print(table)
        _write(out_dir, f"table_{key}.txt", table)
        ref_methods = reference.get(key, {}).get("methods", {})
        if ref_methods:
            delta = format_delta_table(key, reports, ref_methods)
            print(delta)
            _write(out_dir, f"delta_{key}.txt", delta)
    run_info = {"seed": protocol.seed, "n_folds": protocol.n_folds,
                "ridge": ridge, "convention": convention, "strict": strict,
                "binning": sel_config.policy.method, "bins": sel_config.policy.n_bins,
                "q_diagonal": sel_config.q_diagonal, "version": __version__}
    _write(out_dir, "results.json", reports_to_json(all_reports, extras=run_info))
    print(f"artifacts written to {out_dir}/")
    return EXIT_OK


def cmd_inspect(args, config) -> int:
    data = resolve_dataset(args, config)
    sel_config = resolve_selection_config(args, config)
    quantities = inspect_quantities(data, sel_config)

    print(f"alpha = {quantities['alpha']:.6f}")
    print(f"lambda_min(Q_eff) = {quantities['lambda_min']:.6e}")
    print(f"psd_shift = {quantities['psd_shift']:.6e}")
    print(f"bin_counts = {list(map(int, quantities['bin_counts']))}")
    print()
    print(quantities["F"].to_text(), end="")

    out_dir = merged_option(args, config, "out")
    if out_dir is not None:
        out_dir = Path(out_dir)
        _write(out_dir, "Q.txt", quantities["Q"].to_text())
        _write(out_dir, "F.txt", quantities["F"].to_text())
        summary = {
            "alpha": quantities["alpha"],
            "lambda_min": quantities["lambda_min"],
            "psd_shift": quantities["psd_shift"],
            "bin_counts": [int(b) for b in quantities["bin_counts"]],
            "feature_names": quantities["feature_names"],
        }
        _write(out_dir, "summary.json", json.dumps(summary, indent=2, sort_keys=True) + "\n")
    return EXIT_OK


# ---------------------------------------------------------------------------
# Parser
# ---------------------------------------------------------------------------

def _add_dataset_flags(sub):
    sub.add_argument("--name", choices=sorted(SOURCES), help="built-in dataset name")
    sub.add_argument("--data", help="path to a data file")
    sub.add_argument("--schema", help="path to a schema file")
    sub.add_argument("--data-dir", dest="data_dir", help="directory with fetched datasets")
    sub.add_argument("--delimiter", help="cell delimiter, or 'whitespace'")
    sub.add_argument("--header", action="store_const", const=True, default=None,
                     help="first row is a header")


def _add_selection_flags(sub):
    sub.add_argument("--method", choices=METHODS)
    sub.add_argument("--k", type=int, help="selection size")
    sub.add_argument("--alpha", type=float, help="override the estimated alpha")
    sub.add_argument("--q-diagonal", dest="q_diagonal", choices=Q_DIAGONALS)
    sub.add_argument("--binning", choices=("equal-frequency", "equal-width"))
    sub.add_argument("--bins", type=int, help="bins for continuous features")
    sub.add_argument("--missing", choices=("impute-median", "impute-mode", "drop-row"))
    sub.add_argument("--relieff-neighbors", dest="relieff_neighbors", type=int)
    sub.add_argument("--relieff-iterations", dest="relieff_iterations", type=int)
    sub.add_argument("--seed", type=int, help="selector seed (ReliefF sampling)")


def _add_protocol_flags(sub):
    sub.add_argument("--folds", type=int)
    sub.add_argument("--cv-seed", dest="cv_seed", type=int)
    sub.add_argument("--encoding", choices=("one-hot", "code-as-ordinal"))
    sub.add_argument("--ridge", type=float)
    sub.add_argument("--error-convention", dest="error_convention",
                     choices=CONVENTIONS)
    sub.add_argument("--strict", action="store_const", const=True, default=None,
                     help="re-select features inside each training fold")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="qpfs",
        description="Feature selection by simplex-constrained quadratic programming,"
                    " with mRMR and filter baselines and a credit-scoring harness.",
    )
    parser.add_argument("--version", action="version", version=f"qpfs {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("fetch", help="download the UCI credit datasets")
    p.add_argument("--data-dir", dest="data_dir")
    p.add_argument("--only", choices=sorted(SOURCES))
    p.add_argument("--force", action="store_const", const=True, default=None)
    p.add_argument("--config")
    p.set_defaults(func=cmd_fetch)

    p = sub.add_parser("select", help="rank and select features")
    _add_dataset_flags(p)
    _add_selection_flags(p)
    p.add_argument("--out", help="directory for selection artifacts")
    p.add_argument("--config")
    p.set_defaults(func=cmd_select)

    p = sub.add_parser("evaluate", help="cross-validated error rates for a selection")
    _add_dataset_flags(p)
    _add_selection_flags(p)
    _add_protocol_flags(p)
    p.add_argument("--out")
    p.add_argument("--config")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("reproduce", help="regenerate both benchmark tables")
    p.add_argument("--data-dir", dest="data_dir")
    p.add_argument("--only", choices=sorted(SOURCES))
    p.add_argument("--out")
    _add_selection_flags(p)
    _add_protocol_flags(p)
    p.add_argument("--config")
    p.set_defaults(func=cmd_reproduce)

    p = sub.add_parser("inspect", help="dump Q, F, alpha, and solver diagnostics")
    _add_dataset_flags(p)
    _add_selection_flags(p)
    p.add_argument("--out")
    p.add_argument("--config")
    p.set_defaults(func=cmd_inspect)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        config = read_config_file(args.config) if getattr(args, "config", None) else {}
        return args.func(args, config)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except DataError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except NumericalError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except QpfsError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
