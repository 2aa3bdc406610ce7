"""Command-line surface: generate scenarios, run detection, sweep ranks,
and tabulate captured variances.

Every run writes a `config.echo` with the fully-resolved parameters it
used; flags override config-file values, which override defaults.
"""

from __future__ import annotations

import argparse
import sys
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Callable, Sequence

import numpy as np

from .detectors import (
    DEFAULT_BETA,
    DEFAULT_POWER_EXPONENT,
    METHOD_PCA,
    METHOD_RBAD,
    METHOD_SSPBAD,
    METHODS,
    build_pca_model,
    build_rbad_model,
    detect,
    sspbad_detect,
)
from .ensembles import EnsembleKind, SeedSpec
from .evaluation import sweep_rank, variance_compare
from .storage import (
    atomic_write_text,
    format_float,
    read_config_file,
    read_labels_csv,
    read_matrix_csv,
    read_scenario,
    write_config_file,
    write_scenario,
)
from .traffic import ScenarioConfig, assemble_scenario, default_anomaly_count

__all__ = ["main"]

DEFAULT_RANK_GRID = (8, 16, 24, 32, 48, 64)


def _parse_bool(text: str) -> bool:
    lowered = text.strip().lower()
    if lowered in ("true", "1", "yes"):
        return True
    if lowered in ("false", "0", "no"):
        return False
    raise ValueError(f"expected a boolean, got {text!r}")


def _parse_int_list(text: str) -> tuple[int, ...]:
    return tuple(int(item) for item in text.split(",") if item.strip())


def _parse_str_list(text: str) -> tuple[str, ...]:
    return tuple(item.strip() for item in text.split(",") if item.strip())


@dataclass(frozen=True)
class _Field:
    name: str
    parse: Callable[[str], Any]
    default: Any
    help: str
    flag: str | None = None  # CLI flag spelling, defaults to --<name with _ -> ->


_FIELDS = [
    _Field("m", int, 120, "link count"),
    _Field("n", int, 240, "origin-destination flow count"),
    _Field("t", int, 640, "snapshot count"),
    _Field("r_true", int, 24, "true rank of the flow matrix"),
    _Field("routing_density", float, 0.05, "probability of a flow traversing a link"),
    _Field("anomaly_count", int, None, "nonzero anomalies (default: round(0.001*m*t))"),
    _Field("noise_variance", float, 0.1, "measurement-noise variance"),
    _Field("master_seed", int, 0, "64-bit master seed"),
    _Field("stream_index", int, 0, "base stream index under the master seed"),
    _Field("method", _parse_str_list, None, "detection method(s), comma-separated"),
    _Field("rank", int, 24, "normal-subspace rank"),
    _Field("power_exponent", int, DEFAULT_POWER_EXPONENT, "power-iteration exponent for rbad"),
    _Field("beta", float, DEFAULT_BETA, "Q-statistic false-alarm level"),
    _Field("ensembles", _parse_str_list, tuple(k.value for k in EnsembleKind),
           "sspbad ensemble tags, comma-separated"),
    _Field("rank_grid", _parse_int_list, DEFAULT_RANK_GRID, "ranks to sweep, comma-separated"),
    _Field("trials", int, 20, "number of sweep trials"),
    _Field("workers", int, 1, "parallel trial workers"),
    _Field("center", _parse_bool, False, "center traffic rows in rbad/sspbad models"),
    _Field("input", str, None, "scenario directory to read"),
    _Field("y", str, None, "traffic matrix CSV (alternative to --input)"),
    _Field("labels", str, None, "labels CSV (alternative to --input)"),
    _Field("output", str, ".", "output directory"),
]
_FIELD_MAP = {field.name: field for field in _FIELDS}

_SUBCOMMAND_FIELDS = {
    "generate": ("m", "n", "t", "r_true", "routing_density", "anomaly_count",
                 "noise_variance", "master_seed", "stream_index", "output"),
    "detect": ("input", "y", "labels", "method", "rank", "power_exponent", "beta",
               "ensembles", "center", "master_seed", "stream_index", "output"),
    "sweep": ("m", "n", "t", "r_true", "routing_density", "anomaly_count",
              "noise_variance", "master_seed", "stream_index", "method", "rank_grid",
              "trials", "beta", "power_exponent", "ensembles", "center", "workers",
              "output"),
    "variances": ("input", "y", "rank", "power_exponent", "ensembles", "master_seed",
                  "stream_index", "output"),
}


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="linkanom",
        description="Randomized-subspace anomaly detection for link-traffic matrices.",
    )
    subparsers = parser.add_subparsers(dest="subcommand", required=True)
    descriptions = {
        "generate": "generate a synthetic traffic scenario directory",
        "detect": "flag anomalous snapshots in a scenario",
        "sweep": "detection rate vs. normal-subspace rank over many trials",
        "variances": "captured-variance table for all methods on one scenario",
    }
    for name, fields in _SUBCOMMAND_FIELDS.items():
        sub = subparsers.add_parser(name, help=descriptions[name])
        sub.add_argument("--config", help="flat key = value config file (flags win)")
        for field_name in fields:
            field = _FIELD_MAP[field_name]
            flag = "--" + field_name.replace("_", "-")
            sub.add_argument(flag, dest=field_name, default=None, help=field.help, metavar="V")
    return parser


def _resolve(args: argparse.Namespace) -> dict[str, Any]:
    """defaults < config file < explicit flags."""
    fields = _SUBCOMMAND_FIELDS[args.subcommand]
    file_values: dict[str, str] = {}
    if args.config:
        for key, value in read_config_file(args.config).items():
            if key == "subcommand":
                continue  # provenance only
            if key not in _FIELD_MAP:
                raise ValueError(f"unknown config key {key!r} in {args.config}")
            file_values[key] = value
    resolved: dict[str, Any] = {"subcommand": args.subcommand}
    for field_name in fields:
        field = _FIELD_MAP[field_name]
        raw = getattr(args, field_name)
        if raw is None and field_name in file_values:
            raw = file_values[field_name]
        if raw is None:
            resolved[field_name] = field.default
        else:
            try:
                resolved[field_name] = field.parse(raw)
            except ValueError as exc:
                raise ValueError(f"bad value for {field_name}: {exc}") from None
    return resolved


def _echo_value(value: Any) -> str:
    if isinstance(value, float):
        return repr(value)
    if isinstance(value, tuple):
        return ",".join(str(item) for item in value)
    return str(value)


class _OutputSet:
    """Tracks files created by one run so a failure removes all of them."""

    def __init__(self, directory: Path):
        self.directory = directory
        self.created_dir = not directory.exists()
        directory.mkdir(parents=True, exist_ok=True)
        self.files: list[Path] = []

    def path(self, name: str) -> Path:
        path = self.directory / name
        self.files.append(path)
        return path

    def write_text(self, name: str, text: str) -> None:
        atomic_write_text(self.path(name), text)

    def discard(self) -> None:
        for path in self.files:
            path.unlink(missing_ok=True)
        if self.created_dir:
            try:
                self.directory.rmdir()
            except OSError:
                pass

    def write_echo(self, cfg: dict[str, Any]) -> None:
        entries = {key: _echo_value(value) for key, value in cfg.items() if value is not None}
        write_config_file(entries, self.path("config.echo"))


def _scenario_config(cfg: dict[str, Any]) -> ScenarioConfig:
    anomaly_count = cfg["anomaly_count"]
    if anomaly_count is None:
        anomaly_count = default_anomaly_count(cfg["m"], cfg["t"])
        cfg["anomaly_count"] = anomaly_count  # echo the resolved value
    return ScenarioConfig(
        m=cfg["m"],
        n=cfg["n"],
        t=cfg["t"],
        r_true=cfg["r_true"],
        routing_density=cfg["routing_density"],
        anomaly_count=anomaly_count,
        noise_variance=cfg["noise_variance"],
        seed=SeedSpec(cfg["master_seed"], cfg["stream_index"]),
    )


def _ensemble_kinds(cfg: dict[str, Any]) -> list[EnsembleKind]:
    kinds = [EnsembleKind.from_tag(tag) for tag in cfg["ensembles"]]
    cfg["ensembles"] = tuple(kind.value for kind in kinds)  # normalized echo
    return kinds


def _load_traffic(cfg: dict[str, Any], need_labels: bool) -> tuple[np.ndarray, np.ndarray | None]:
    if cfg.get("input"):
        return read_scenario(cfg["input"])
    if cfg.get("y"):
        if need_labels and not cfg.get("labels"):
            raise ValueError("--y requires --labels (or use --input with a scenario directory)")
        y = read_matrix_csv(cfg["y"])
        labels = read_labels_csv(cfg["labels"]) if cfg.get("labels") else None
        if labels is not None and labels.shape[0] != y.shape[1]:
            raise ValueError(f"{labels.shape[0]} labels do not match {y.shape[1]} snapshots")
        return y, labels
    raise ValueError("no input given: pass --input SCENARIO_DIR or --y MATRIX_CSV")


def _cmd_generate(cfg: dict[str, Any], outputs: _OutputSet) -> None:
    scenario_cfg = _scenario_config(cfg)
    scenario = assemble_scenario(scenario_cfg)
    outputs.files.extend(write_scenario(scenario, outputs.directory))
    outputs.write_echo(cfg)
    print(
        f"wrote scenario (m={scenario_cfg.m}, n={scenario_cfg.n}, t={scenario_cfg.t}, "
        f"anomalies={scenario_cfg.anomaly_count}) to {outputs.directory}"
    )


def _cmd_detect(cfg: dict[str, Any], outputs: _OutputSet) -> None:
    methods = cfg["method"] or (METHOD_PCA,)
    if len(methods) != 1:
        raise ValueError("detect takes exactly one --method")
    method = methods[0]
    if method not in METHODS:
        raise ValueError(f"unknown method {method!r}; expected one of {METHODS}")
    cfg["method"] = (method,)
    y, labels = _load_traffic(cfg, need_labels=True)
    seed = SeedSpec(cfg["master_seed"], cfg["stream_index"])
    kinds = _ensemble_kinds(cfg)
    if method == METHOD_PCA:
        report = detect(build_pca_model(y, cfg["rank"]), y, cfg["beta"])
    elif method == METHOD_RBAD:
        model = build_rbad_model(y, cfg["rank"], seed, cfg["power_exponent"], cfg["center"])
        report = detect(model, y, cfg["beta"])
    else:
        report = sspbad_detect(y, cfg["rank"], seed, kinds, cfg["beta"], cfg["center"])
    q_beta = report.threshold.q_beta if report.threshold is not None else float("nan")
    lines = ["snapshot,spe,q_beta,flag,label"]
    assert labels is not None
    for j in range(report.spe.shape[0]):
        lines.append(
            f"{j},{format_float(report.spe[j])},{format_float(q_beta)},"
            f"{int(report.flags[j])},{int(labels[j])}"
        )
    outputs.write_text("report.csv", "\n".join(lines) + "\n")
    outputs.write_echo(cfg)
    picked = f", ensemble={report.model_summary.ensemble.value}" if method == METHOD_SSPBAD else ""
    print(
        f"flagged {report.flag_count} of {report.spe.shape[0]} snapshots "
        f"(method={method}, rank={cfg['rank']}, q_beta={q_beta:.6g}{picked})"
    )


def _cmd_sweep(cfg: dict[str, Any], outputs: _OutputSet) -> None:
    methods = cfg["method"] or METHODS
    cfg["method"] = tuple(methods)
    scenario_cfg = _scenario_config(cfg)
    kinds = _ensemble_kinds(cfg)
    rows, curves = sweep_rank(
        scenario_cfg,
        methods,
        cfg["rank_grid"],
        cfg["trials"],
        beta=cfg["beta"],
        power_exponent=cfg["power_exponent"],
        kinds=kinds,
        center=cfg["center"],
        workers=cfg["workers"],
    )
    lines = ["method,rank,trial,detection_rate,tpr,far,flag_count"]
    for row in rows:
        lines.append(
            f"{row.method},{row.rank},{row.trial},{format_float(row.detection_rate)},"
            f"{format_float(row.tpr)},{format_float(row.far)},{row.flag_count}"
        )
    outputs.write_text("sweep.csv", "\n".join(lines) + "\n")
    mean_lines = ["method,rank,mean_detection_rate,std_detection_rate"]
    for curve in curves:
        for rank, mean, std in zip(curve.ranks, curve.mean_detection_rate, curve.std_detection_rate):
            mean_lines.append(f"{curve.method},{rank},{format_float(mean)},{format_float(std)}")
    outputs.write_text("sweep_mean.csv", "\n".join(mean_lines) + "\n")
    outputs.write_echo(cfg)
    print(f"wrote {len(rows)} sweep rows over {cfg['trials']} trials to {outputs.directory}")


def _cmd_variances(cfg: dict[str, Any], outputs: _OutputSet) -> None:
    y, _ = _load_traffic(cfg, need_labels=False)
    kinds = _ensemble_kinds(cfg)
    seed = SeedSpec(cfg["master_seed"], cfg["stream_index"])
    table = variance_compare(y, cfg["rank"], seed, cfg["power_exponent"], kinds)
    lines = ["index," + ",".join(table.methods)]
    for i in range(table.variances.shape[0]):
        lines.append(f"{i}," + ",".join(format_float(x) for x in table.variances[i]))
    outputs.write_text("variances.csv", "\n".join(lines) + "\n")
    outputs.write_echo(cfg)
    worst = max(table.top_rank_deviation.items(), key=lambda item: item[1])
    print(
        f"wrote variance table ({table.variances.shape[0]} indices x {len(table.methods)} "
        f"methods); max top-{table.rank} deviation vs pca: {worst[1]:.3%} ({worst[0]})"
    )


_COMMANDS = {
    "generate": _cmd_generate,
    "detect": _cmd_detect,
    "sweep": _cmd_sweep,
    "variances": _cmd_variances,
}


def main(argv: Sequence[str] | None = None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = _resolve(args)
        outputs = _OutputSet(Path(cfg["output"]))
    except Exception as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    try:
        _COMMANDS[args.subcommand](cfg, outputs)
    except Exception as exc:
        outputs.discard()
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
