"""Experiment orchestration and the command-line interface.

Subcommands:
  run <config>   full experiment: materialize sources, evaluate metrics on
                 originals and complements, run the stats pipeline, write
                 metrics.csv/metrics.json, statreport-*.json, boxplot.json,
                 and manifest.json into the output directory.
  carmichael     enumerate Carmichael numbers up to a bound.
  stats          rebuild reports from an existing metrics file.
  gen            materialize one source to a bitfile.

Exit codes: 0 success, 1 configuration/usage error, 2 runtime error.
Everything an experiment writes except manifest.json is a pure function of
the config, so rerunning a config byte-reproduces metrics and reports.
"""

from __future__ import annotations

import argparse
import configparser
import csv
import dataclasses
import hashlib
import io
import json
import logging
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from . import __version__
from .algotests import (
    TEST_NAMES,
    Csss4Config,
    MetricSample,
    borel_metric,
    csss1_min_witnesses,
    csss2_bits_used,
    csss3_bits_used,
    csss4_violation_average,
)
from .bitstream import BitString, complement, split_into_samples, write_bitfile
from .errors import ConfigError, RandprobeError
from .generators import MASK64, SourceSpec, generate, parse_source_spec
from .numtheory import CarmichaelSet, enumerate_carmichael, load_carmichael, save_carmichael
from .stats import StatReport, decision_pipeline

logger = logging.getLogger("randprobe")

METRICS_CSV_HEADER = ["source", "string_index", "test", "complemented", "value",
                      "params-hash", "error"]


@dataclass
class ExperimentConfig:
    """Parsed experiment description; see configs/desk.ini for the schema."""

    sources: list[tuple[str, SourceSpec]]
    n_strings: int
    string_len: int
    tests: tuple[str, ...] = TEST_NAMES
    carmichael_bound: int = 10_000
    csss4: Csss4Config = field(default_factory=Csss4Config)
    run_complemented: bool = True
    wrap_on_exhaustion: bool = False
    j_max_mode: str = "k"
    sampling: str = "split"
    output_dir: str = "out"
    carmichael_cache: str | None = None

    def validate(self) -> None:
        if not self.sources:
            raise ConfigError("at least one [source:<label>] section is required")
        labels = [label for label, _ in self.sources]
        if len(set(labels)) != len(labels):
            raise ConfigError("source labels must be unique")
        if self.n_strings < 1:
            raise ConfigError("n_strings must be >= 1")
        if self.string_len < 1024:
            raise ConfigError("string_len must be >= 1024 bits")
        unknown = set(self.tests) - set(TEST_NAMES)
        if unknown or not self.tests:
            raise ConfigError(f"tests must be a non-empty subset of {TEST_NAMES}")
        if self.carmichael_bound < 2:
            raise ConfigError("carmichael_bound must be >= 2")
        if self.j_max_mode not in ("k", "k_minus_1"):
            raise ConfigError("j_max_mode must be k or k_minus_1")
        if self.sampling not in ("split", "reseed"):
            raise ConfigError("sampling must be split or reseed")
        for label, spec in self.sources:
            try:
                spec.validate()
            except RandprobeError as exc:
                raise ConfigError(f"source {label!r}: {exc}") from exc

    def to_dict(self) -> dict:
        return {
            "sources": [[label, {k: v for k, v in dataclasses.asdict(spec).items()
                                 if v is not None}]
                        for label, spec in self.sources],
            "n_strings": self.n_strings,
            "string_len": self.string_len,
            "tests": list(self.tests),
            "carmichael_bound": self.carmichael_bound,
            "csss4": {"targets": list(self.csss4.targets),
                      "offset_stride": self.csss4.offset_stride},
            "run_complemented": self.run_complemented,
            "wrap_on_exhaustion": self.wrap_on_exhaustion,
            "j_max_mode": self.j_max_mode,
            "sampling": self.sampling,
            "output_dir": self.output_dir,
            "carmichael_cache": self.carmichael_cache,
        }


def _get(parser_section, caster, key, default):
    if key not in parser_section:
        return default
    raw = parser_section[key]
    try:
        return caster(raw)
    except ValueError as exc:
        raise ConfigError(f"bad value for {key}: {raw!r}") from exc


def _as_bool(raw: str) -> bool:
    lowered = raw.strip().lower()
    if lowered in ("1", "true", "yes", "on"):
        return True
    if lowered in ("0", "false", "no", "off"):
        return False
    raise ValueError(raw)


def _as_list(raw: str) -> list[str]:
    return raw.replace(",", " ").split()


def parse_config(path) -> ExperimentConfig:
    """Read an INI experiment config: [experiment], [csss4], [source:<label>]."""
    cp = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
    try:
        read = cp.read(path)
    except configparser.Error as exc:
        raise ConfigError(f"cannot parse config {path}: {exc}") from exc
    if not read:
        raise ConfigError(f"config file not found: {path}")
    if "experiment" not in cp:
        raise ConfigError("config needs an [experiment] section")
    exp = cp["experiment"]
    for required in ("n_strings", "string_len"):
        if required not in exp:
            raise ConfigError(f"[experiment] is missing {required}")
    sources: list[tuple[str, SourceSpec]] = []
    for section in cp.sections():
        if not section.startswith("source:"):
            continue
        label = section.split(":", 1)[1].strip()
        sec = cp[section]
        if "family" not in sec:
            raise ConfigError(f"[{section}] is missing family")
        spec = SourceSpec(
            family=sec["family"].strip(),
            seed=_get(sec, lambda r: int(r, 0), "seed", None),
            bias=_get(sec, float, "bias", None),
            path=sec.get("path"),
            format=sec.get("format"),
        )
        sources.append((label, spec))
    csss4_cfg = Csss4Config()
    if "csss4" in cp:
        sec = cp["csss4"]
        try:
            csss4_cfg = Csss4Config(
                targets=tuple(_get(sec, lambda r: [int(v) for v in _as_list(r)],
                                   "targets", list(Csss4Config().targets))),
                offset_stride=_get(sec, int, "offset_stride", 1),
            )
        except ValueError as exc:
            raise ConfigError(f"[csss4]: {exc}") from exc
    config = ExperimentConfig(
        sources=sources,
        n_strings=_get(exp, int, "n_strings", 0),
        string_len=_get(exp, int, "string_len", 0),
        tests=tuple(_get(exp, _as_list, "tests", list(TEST_NAMES))),
        carmichael_bound=_get(exp, int, "carmichael_bound", 10_000),
        csss4=csss4_cfg,
        run_complemented=_get(exp, _as_bool, "run_complemented", True),
        wrap_on_exhaustion=_get(exp, _as_bool, "wrap_on_exhaustion", False),
        j_max_mode=_get(exp, str.strip, "j_max_mode", "k"),
        sampling=_get(exp, str.strip, "sampling", "split"),
        output_dir=_get(exp, str.strip, "output_dir", "out"),
        carmichael_cache=exp.get("carmichael_cache"),
    )
    config.validate()
    return config


def _params_hash(params: dict) -> str:
    blob = json.dumps(params, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(blob.encode()).hexdigest()[:12]


def _materialize_source(label: str, spec: SourceSpec, cfg: ExperimentConfig) -> list[BitString]:
    if cfg.sampling == "split" or spec.family in ("pi", "file"):
        whole = generate(spec, cfg.n_strings * cfg.string_len, origin=label)
        return split_into_samples(whole, cfg.n_strings, cfg.string_len)
    out = []
    for i in range(cfg.n_strings):
        derived = replace(spec, seed=(spec.seed + i) & MASK64)
        out.append(generate(derived, cfg.string_len, origin=f"{label}[{i}]"))
    return out


def _test_params(cfg: ExperimentConfig, carmichael: CarmichaelSet | None) -> dict[str, dict]:
    params: dict[str, dict] = {}
    for test in cfg.tests:
        if test == "borel":
            params[test] = {"test": "borel"}
        elif test in ("csss1", "csss2"):
            params[test] = {"test": test, "carmichael_bound": cfg.carmichael_bound,
                            "n_targets": len(carmichael.members),
                            "wrap": cfg.wrap_on_exhaustion}
        elif test == "csss3":
            params[test] = {"test": test, "carmichael_bound": cfg.carmichael_bound,
                            "n_targets": len(carmichael.members),
                            "wrap": cfg.wrap_on_exhaustion, "j_max_mode": cfg.j_max_mode}
        else:
            params[test] = {"test": test, "targets": list(cfg.csss4.targets),
                            "offset_stride": cfg.csss4.offset_stride,
                            "j_max_mode": cfg.j_max_mode}
    return params


def _evaluate_one(test: str, x: BitString, cfg: ExperimentConfig,
                  carmichael: CarmichaelSet | None):
    if test == "borel":
        return borel_metric(x)
    if test == "csss1":
        return csss1_min_witnesses(x, carmichael, wrap=cfg.wrap_on_exhaustion)
    if test == "csss2":
        return csss2_bits_used(x, carmichael, wrap=cfg.wrap_on_exhaustion)
    if test == "csss3":
        return csss3_bits_used(x, carmichael, j_max_mode=cfg.j_max_mode,
                               wrap=cfg.wrap_on_exhaustion)
    return csss4_violation_average(x, cfg.csss4, j_max_mode=cfg.j_max_mode)


def run_experiment(cfg: ExperimentConfig, workers: int = 1,
                   output_dir: str | None = None,
                   metric_formats: tuple[str, ...] = ("csv", "json")) -> Path:
    """Run the full experiment; returns the output directory.

    Per-item metric failures (exhaustion, short strings) become error-tagged
    rows rather than aborting the run. Results are gathered and sorted
    deterministically, so the worker count never changes any output file.
    """
    cfg.validate()
    if workers < 1:
        raise ConfigError("workers must be >= 1")
    out_dir = Path(output_dir if output_dir is not None else cfg.output_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    started = datetime.now(timezone.utc)
    timings: dict[str, float] = {}

    carmichael = None
    if any(t in cfg.tests for t in ("csss1", "csss2", "csss3")):
        t0 = time.perf_counter()
        carmichael = _carmichael_for(cfg)
        timings["carmichael"] = round(time.perf_counter() - t0, 3)
        logger.info("carmichael targets <= %d: %d members", cfg.carmichael_bound,
                    len(carmichael.members))

    t0 = time.perf_counter()
    strings: dict[str, list[BitString]] = {}
    for label, spec in cfg.sources:
        strings[label] = _materialize_source(label, spec, cfg)
        logger.info("materialized %s: %d strings of %d bits", label, cfg.n_strings,
                    cfg.string_len)
    timings["generate"] = round(time.perf_counter() - t0, 3)

    params_by_test = _test_params(cfg, carmichael)
    comp_states = (False, True) if cfg.run_complemented else (False,)
    items = []
    for label, _ in cfg.sources:
        for idx in range(cfg.n_strings):
            for test in cfg.tests:
                for comp in comp_states:
                    items.append((label, idx, test, comp))

    def evaluate(item) -> MetricSample:
        label, idx, test, comp = item
        x = strings[label][idx]
        if comp:
            x = complement(x)
        params = params_by_test[test]
        try:
            value = _evaluate_one(test, x, cfg, carmichael)
            return MetricSample(label, idx, test, comp, value, params)
        except RandprobeError as exc:
            return MetricSample(label, idx, test, comp, None, params,
                                error=f"{type(exc).__name__}: {exc}")

    t0 = time.perf_counter()
    if workers == 1:
        rows = [evaluate(item) for item in items]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(evaluate, items))
    order = {label: i for i, (label, _) in enumerate(cfg.sources)}
    test_order = {t: i for i, t in enumerate(TEST_NAMES)}
    rows.sort(key=lambda r: (order[r.source], r.string_index, test_order[r.test],
                             r.complemented))
    timings["evaluate"] = round(time.perf_counter() - t0, 3)
    n_errors = sum(1 for r in rows if r.error)
    logger.info("evaluated %d rows (%d errors)", len(rows), n_errors)

    if "csv" in metric_formats:
        _write_metrics_csv(rows, out_dir / "metrics.csv")
    if "json" in metric_formats:
        _write_metrics_json(rows, out_dir / "metrics.json")

    t0 = time.perf_counter()
    labels = [label for label, _ in cfg.sources]
    for test in cfg.tests:
        for comp in comp_states:
            report, note = _report_for(rows, labels, test, comp)
            payload = {"test": test, "complemented": comp}
            if report is not None:
                payload.update(report.to_dict())
            if note:
                payload["note"] = note
            name = f"statreport-{test}-{'comp' if comp else 'orig'}.json"
            _write_json(payload, out_dir / name)
    groups = summarize_boxplot(rows)
    _write_json({"groups": [dataclasses.asdict(g) for g in groups]}, out_dir / "boxplot.json")
    timings["stats"] = round(time.perf_counter() - t0, 3)

    finished = datetime.now(timezone.utc)
    errors_by_type: dict[str, int] = {}
    for r in rows:
        if r.error:
            kind = r.error.split(":", 1)[0]
            errors_by_type[kind] = errors_by_type.get(kind, 0) + 1
    manifest = {
        "config": cfg.to_dict(),
        "config_hash": _params_hash(cfg.to_dict()),
        "versions": _versions(),
        "workers": workers,
        "started": started.isoformat(),
        "finished": finished.isoformat(),
        "durations_s": timings,
        "rows": len(rows),
        "errors": {"count": n_errors, "by_type": errors_by_type},
        "carmichael_members": None if carmichael is None else len(carmichael.members),
    }
    _write_json(manifest, out_dir / "manifest.json")
    logger.info("artifacts written to %s", out_dir)
    return out_dir


def _carmichael_for(cfg: ExperimentConfig) -> CarmichaelSet:
    if cfg.carmichael_cache:
        cache = Path(cfg.carmichael_cache)
        if cache.exists():
            cached = load_carmichael(cache)
            if cached.bound == cfg.carmichael_bound:
                return cached
        cs = enumerate_carmichael(cfg.carmichael_bound)
        cache.parent.mkdir(parents=True, exist_ok=True)
        save_carmichael(cs, cache)
        return cs
    return enumerate_carmichael(cfg.carmichael_bound)


def _report_for(rows: list[MetricSample], labels: list[str], test: str,
                comp: bool) -> tuple[StatReport | None, str | None]:
    by_source: dict[str, list[float]] = {}
    for label in labels:
        values = [float(r.value) for r in rows
                  if r.source == label and r.test == test and r.complemented == comp
                  and r.error is None and r.value is not None]
        if values:
            by_source[label] = values
    dropped = [label for label in labels if label not in by_source]
    note = None
    if dropped:
        note = "sources without valid samples: " + ", ".join(dropped)
    if len(by_source) < 2:
        return None, (note or "") + "; fewer than 2 sources with valid samples"
    return decision_pipeline(by_source), note


def _format_value(value) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        raise TypeError("metric value cannot be boolean")
    if isinstance(value, int):
        return str(value)
    return repr(float(value))


def _write_metrics_csv(rows: list[MetricSample], path: Path) -> None:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(METRICS_CSV_HEADER)
    for r in rows:
        writer.writerow([r.source, r.string_index, r.test,
                         "true" if r.complemented else "false",
                         _format_value(r.value), _params_hash(r.params), r.error or ""])
    path.write_text(buf.getvalue(), encoding="utf-8")


def _write_metrics_json(rows: list[MetricSample], path: Path) -> None:
    params_index: dict[str, dict] = {}
    samples = []
    for r in rows:
        h = _params_hash(r.params)
        params_index[h] = r.params
        samples.append({"source": r.source, "string_index": r.string_index,
                        "test": r.test, "complemented": r.complemented,
                        "value": r.value, "params_hash": h, "error": r.error})
    _write_json({"samples": samples, "params_index": params_index}, path)


def _write_json(payload, path: Path) -> None:
    path.write_text(json.dumps(payload, sort_keys=True, indent=2) + "\n", encoding="utf-8")


def read_metrics(path) -> list[MetricSample]:
    """Load metrics rows from a metrics.csv or metrics.json file."""
    p = Path(path)
    if p.suffix == ".json":
        payload = json.loads(p.read_text(encoding="utf-8"))
        params_index = payload.get("params_index", {})
        return [MetricSample(s["source"], int(s["string_index"]), s["test"],
                             bool(s["complemented"]), s["value"],
                             params_index.get(s.get("params_hash", ""), {}),
                             s.get("error"))
                for s in payload["samples"]]
    rows = []
    with p.open(newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames != METRICS_CSV_HEADER:
            raise ConfigError(f"{path} does not look like a metrics.csv file")
        for rec in reader:
            raw = rec["value"]
            value = None if raw == "" else (int(raw) if _is_int(raw) else float(raw))
            rows.append(MetricSample(rec["source"], int(rec["string_index"]), rec["test"],
                                     rec["complemented"] == "true", value, {},
                                     rec["error"] or None))
    return rows


def _is_int(text: str) -> bool:
    try:
        int(text)
    except ValueError:
        return False
    return True


@dataclass
class BoxplotSummary:
    """Tukey five-number summary with 1.5*IQR whiskers for one group.

    Whiskers are the most extreme data points inside the fences, clamped to
    the box edges so whisker_low <= Q1 and whisker_high >= Q3 even for very
    skewed groups; values outside the fences are listed as outliers.
    """

    source: str
    test: str
    complemented: bool
    n: int
    min: float
    q1: float
    median: float
    q3: float
    max: float
    whisker_low: float
    whisker_high: float
    outliers: list[float]


def summarize_boxplot(rows: list[MetricSample]) -> list[BoxplotSummary]:
    """Five-number summaries per (source, test, complemented) group.

    Quartiles use linear interpolation between closest ranks (the numpy
    default); error rows are excluded.
    """
    groups: dict[tuple[str, str, bool], list[float]] = {}
    seen_order: list[tuple[str, str, bool]] = []
    for r in rows:
        if r.error is not None or r.value is None:
            continue
        key = (r.source, r.test, r.complemented)
        if key not in groups:
            groups[key] = []
            seen_order.append(key)
        groups[key].append(float(r.value))
    out = []
    for key in seen_order:
        values = np.asarray(groups[key], dtype=float)
        q1, med, q3 = (float(v) for v in np.percentile(values, [25, 50, 75]))
        iqr = q3 - q1
        lo_fence, hi_fence = q1 - 1.5 * iqr, q3 + 1.5 * iqr
        inside = values[(values >= lo_fence) & (values <= hi_fence)]
        whisker_low = min(q1, float(inside.min())) if inside.size else q1
        whisker_high = max(q3, float(inside.max())) if inside.size else q3
        outliers = sorted(float(v) for v in values[(values < lo_fence) | (values > hi_fence)])
        out.append(BoxplotSummary(source=key[0], test=key[1], complemented=key[2],
                                  n=int(values.size), min=float(values.min()), q1=q1,
                                  median=med, q3=q3, max=float(values.max()),
                                  whisker_low=whisker_low, whisker_high=whisker_high,
                                  outliers=outliers))
    return out


def _versions() -> dict:
    import gmpy2
    import scipy

    return {"randprobe": __version__, "python": sys.version.split()[0],
            "numpy": np.__version__, "scipy": scipy.__version__,
            "gmpy2": gmpy2.version()}


# --- argument parsing -----------------------------------------------------

class _Parser(argparse.ArgumentParser):
    """argparse that reports usage problems as ConfigError (exit code 1)."""

    def error(self, message):
        raise ConfigError(message)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="randprobe",
                     description="Algorithmic-randomness test battery for bit sources")
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run a full experiment from a config file")
    p_run.add_argument("config", help="INI experiment config")
    p_run.add_argument("--workers", type=int, default=1, help="worker pool size")
    p_run.add_argument("--output-dir", default=None, help="override [experiment] output_dir")
    p_run.add_argument("--format", choices=("csv", "json"), default=None,
                       help="emit only this metrics format (default: both)")
    p_run.set_defaults(func=_cmd_run)

    p_car = sub.add_parser("carmichael", help="enumerate Carmichael numbers")
    p_car.add_argument("--bound", type=int, required=True, help="inclusive upper bound")
    p_car.add_argument("--out", default=None, help="write the set to this file")
    p_car.add_argument("--format", choices=("binary", "csv", "json"), default="binary",
                       help="output file format (default binary cache)")
    p_car.set_defaults(func=_cmd_carmichael)

    p_stats = sub.add_parser("stats", help="rebuild reports from a metrics file")
    p_stats.add_argument("--metrics", required=True, help="metrics.csv or metrics.json")
    p_stats.add_argument("--output-dir", default=None,
                         help="where to write reports (default: next to the metrics file)")
    p_stats.set_defaults(func=_cmd_stats)

    p_gen = sub.add_parser("gen", help="materialize one source to a bitfile")
    p_gen.add_argument("--spec", required=True,
                       help="source spec, e.g. mt19937:seed=42 or bernoulli:bias=0.4,seed=7")
    p_gen.add_argument("--bits", type=int, required=True, help="number of bits")
    p_gen.add_argument("--out", required=True, help="output path")
    p_gen.add_argument("--format", choices=("packed-msb", "ascii01"), default="packed-msb",
                       help="bitfile format")
    p_gen.set_defaults(func=_cmd_gen)
    return parser


def _cmd_run(args) -> int:
    cfg = parse_config(args.config)
    formats = ("csv", "json") if args.format is None else (args.format,)
    out_dir = run_experiment(cfg, workers=args.workers, output_dir=args.output_dir,
                             metric_formats=formats)
    print(f"experiment complete: {out_dir}")
    return 0


def _cmd_carmichael(args) -> int:
    cs = enumerate_carmichael(args.bound)
    print(f"{len(cs.members)} Carmichael numbers <= {args.bound}")
    if args.out is None:
        for n in cs.members:
            print(n)
        return 0
    out = Path(args.out)
    if args.format == "binary":
        save_carmichael(cs, out)
    elif args.format == "csv":
        out.write_text("".join(f"{n}\n" for n in cs.members), encoding="utf-8")
    else:
        _write_json({"bound": cs.bound, "members": cs.members}, out)
    print(f"written to {out}")
    return 0


def _cmd_stats(args) -> int:
    rows = read_metrics(args.metrics)
    if not rows:
        raise ConfigError(f"{args.metrics} holds no rows")
    out_dir = Path(args.output_dir) if args.output_dir else Path(args.metrics).parent
    out_dir.mkdir(parents=True, exist_ok=True)
    labels = list(dict.fromkeys(r.source for r in rows))
    tests = list(dict.fromkeys(r.test for r in rows))
    comp_states = sorted({r.complemented for r in rows})
    for test in tests:
        for comp in comp_states:
            report, note = _report_for(rows, labels, test, comp)
            payload = {"test": test, "complemented": comp}
            if report is not None:
                payload.update(report.to_dict())
                print(f"=== {test} ({'complemented' if comp else 'original'}) ===")
                print(report.format_text())
            if note:
                payload["note"] = note
            name = f"statreport-{test}-{'comp' if comp else 'orig'}.json"
            _write_json(payload, out_dir / name)
    groups = summarize_boxplot(rows)
    _write_json({"groups": [dataclasses.asdict(g) for g in groups]}, out_dir / "boxplot.json")
    print(f"reports written to {out_dir}")
    return 0


def _cmd_gen(args) -> int:
    spec = parse_source_spec(args.spec)
    bits = generate(spec, args.bits)
    write_bitfile(bits, args.out, args.format)
    print(f"{args.bits} bits of {spec.family} written to {args.out} ({args.format})")
    return 0


def main(argv=None) -> int:
    logging.basicConfig(level=logging.INFO, format="%(levelname)s %(message)s", stream=sys.stderr)
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    except (RandprobeError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
