# Experiment Orchestrator for walsh-logmeans
# Runs kernel exports, convergence and divergence sweeps and the norm audits, then renders CSV or JSON

import csv
import datetime as dt
import io
import json
import logging
import math
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable, Iterable, List, Optional, Sequence

import numpy as np
from pydantic import BaseModel

from src.core.dyadic import AxisSubset
from src.core.transform import DyadicFunction, analyze
from src.errors import UsageError
from src.orchestration.functions import adversarial_suite, build_function, random_suite
from src.schemas import ExperimentConfig
from src.services.counterexample_service import CounterexampleService, TranslateConfig, proof_scale_r
from src.services.logmeans_service import KernelKind, LogMeanService, MeanSpec
from src.services.norm_service import NormService, YoungFunction, log_entropy, superlevel_measure, weak_l1

logger = logging.getLogger(__name__)

CONVERGENCE_LEVELS = (0.1, 0.01)


@dataclass
class CommandResult:
    command: str
    columns: List[str]
    rows: List[List[Any]] = field(default_factory=list)
    reports: List[BaseModel] = field(default_factory=list)
    label: Optional[str] = None


def _cell(value: Any, precision: int) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return f"{float(value):.{precision}g}"
    return str(value)


class ExperimentPipeline:
    """High-level orchestrator for the walsh-logmeans commands."""

    def __init__(
        self,
        log_means: LogMeanService,
        norms: NormService,
        counterexamples: CounterexampleService,
        csv_precision: int = 17,
        default_tilde: int = 2,
    ) -> None:
        self.log_means = log_means
        self.norms = norms
        self.counterexamples = counterexamples
        self.csv_precision = csv_precision
        self.default_tilde = default_tilde

    def run(self, config: ExperimentConfig) -> CommandResult:
        handlers = {
            "kernel": self.run_kernel,
            "converge": self.run_converge,
            "diverge": self.run_diverge,
            "norms": self.run_norms,
        }
        logger.info("Running %s %s", config.command, config.what or "")
        return handlers[config.command](config)

    def execute(self, config: ExperimentConfig) -> Optional[Path]:
        return self.write(self.run(config), config)

    # commands

    def run_kernel(self, config: ExperimentConfig) -> CommandResult:
        resolution = config.K[0]
        profile = self.log_means.kernel(KernelKind(config.kind), config.n, resolution)
        rows = [[j, profile.samples[j], profile.multipliers[j]] for j in range(1 << resolution)]
        return CommandResult("kernel", ["index", "sample", "multiplier"], rows, label=config.kind)

    def run_converge(self, config: ExperimentConfig) -> CommandResult:
        f = build_function(config.function, config.K, config.params, config.seed)
        axes = AxisSubset.from_labels(config.d, config.B)
        spectrum = analyze(f)

        def point(n: int) -> List[Any]:
            mean = self.log_means.apply_mean(f, MeanSpec(axes, (n,) * config.d), spectrum=spectrum)
            error = DyadicFunction(f.resolution, mean.samples - f.samples)
            row: List[Any] = [n, float(np.abs(error.samples).mean())]
            row.extend(superlevel_measure(error, level) for level in CONVERGENCE_LEVELS)
            logger.debug("converge n=%s error %.6g", n, row[1])
            return row

        rows = self._map(point, config.sweep, config.workers)
        columns = ["n", "l1_error"] + [f"mes_gt_{level:g}" for level in CONVERGENCE_LEVELS]
        return CommandResult("converge", columns, rows, label=config.function)

    def run_norms(self, config: ExperimentConfig) -> CommandResult:
        if config.what == "types":
            resolution = max(config.K[0], 8)
            audit = self.log_means.type_audit(adversarial_suite(resolution), config.sweep, weak_l1)
            rows = [[n, strong, weak] for n, (strong, weak) in audit.items()]
            return CommandResult("norms", ["n", "strong_ratio", "weak_ratio"], rows, label="types")

        axes = AxisSubset.from_labels(config.d, config.B)
        b = axes.size
        suite = [DyadicFunction.constant(config.K, 1.0)] + random_suite(config.K, config.count, config.seed)
        spectra = [analyze(f) for f in suite]
        strong_den = [1.0 + log_entropy(f, b) for f in suite]
        weak_den = [1.0 + log_entropy(f, max(b - 1, 0)) for f in suite]

        def point(n: int) -> List[Any]:
            spec = MeanSpec(axes, (n,) * config.d)
            strong = 0.0
            weak = 0.0
            for f, spectrum, s_den, w_den in zip(suite, spectra, strong_den, weak_den):
                mean = self.log_means.apply_mean(f, spec, spectrum=spectrum)
                strong = max(strong, float(np.abs(mean.samples).mean()) / s_den)
                weak = max(weak, weak_l1(mean) / w_den)
            kernel_l1 = math.prod(
                self.log_means.kernel(spec.kind_for(axis), n, k).l1_norm for axis, k in enumerate(config.K)
            )
            return [n, strong, weak, kernel_l1]

        rows = self._map(point, config.sweep, config.workers)
        return CommandResult("norms", ["n", "strong_ratio", "weak_ratio", "kernel_l1"], rows, label="theorem")

    def run_diverge(self, config: ExperimentConfig) -> CommandResult:
        handlers = {
            "kernel-growth": self._kernel_growth,
            "lemma-gg": self._lemma_gg,
            "op-bound": self._operator_bound,
            "est1": self._est1,
            "xi": self._xi,
            "search": self._search,
            "cond1": self._cond1,
            "regions": self._regions,
        }
        if config.what not in handlers:
            raise UsageError(f"unknown diverge target {config.what!r}")
        return handlers[config.what](config)

    # diverge targets

    def _axes(self, config: ExperimentConfig) -> AxisSubset:
        return AxisSubset.from_labels(config.d, config.B)

    def _young(self, config: ExperimentConfig, default_beta: float) -> YoungFunction:
        return YoungFunction.log_power(default_beta if config.beta is None else config.beta)

    def _tilde(self, config: ExperimentConfig) -> Optional[int]:
        if config.faithful:
            return None
        return config.tilde if config.tilde is not None else self.default_tilde

    def _kernel_growth(self, config: ExperimentConfig) -> CommandResult:
        rows = self.counterexamples.kernel_norm_growth(config.nmax, config.K[0] if config.K else None)
        return self._table("kernel-growth", rows)

    def _lemma_gg(self, config: ExperimentConfig) -> CommandResult:
        resolution = config.K[0] if config.K else 2 * config.n + 2
        region = self.counterexamples.omega_region(config.n, self._tilde(config))
        report = self.counterexamples.lemma_gg_scan(config.n, resolution, region)
        rows = [[band.m, band.start, band.end, band.points, band.min, band.argmin] for band in report.per_band]
        return CommandResult("diverge", ["m", "start", "end", "points", "min", "argmin"], rows, [report], "lemma-gg")

    def _operator_bound(self, config: ExperimentConfig) -> CommandResult:
        axes = self._axes(config)
        q = self._young(config, axes.size)

        def work(n: int):
            return self.counterexamples.operator_lower_bound(n, q, axes)

        return self._table("op-bound", self._map(work, range(2, config.nmax + 1), config.workers))

    def _est1(self, config: ExperimentConfig) -> CommandResult:
        axes = self._axes(config)
        resolution = config.K or None

        def work(n: int):
            return self.counterexamples.est1_measure(n, axes, resolution, config.c)

        return self._table("est1", self._map(work, range(2, config.nmax + 1), config.workers))

    def _cond1(self, config: ExperimentConfig) -> CommandResult:
        axes = self._axes(config)
        q = self._young(config, max(axes.size - 1, 0))
        return self._table("cond1", self.counterexamples.cond1_profile(q, axes, range(2, config.nmax + 1)))

    def _xi(self, config: ExperimentConfig) -> CommandResult:
        axes = self._axes(config)
        resolution = config.K or [2 * config.n + 1 if axes.contains_axis(i) else 0 for i in range(config.d)]
        r = config.r or proof_scale_r(config.n, axes)
        rng = np.random.default_rng(np.random.SeedSequence(config.seed))
        translates = TranslateConfig.random(rng, r, resolution)
        built = self.counterexamples.build_xi(config.n, axes, self._young(config, axes.size), translates, resolution)
        return self._table("xi", [built.report])

    def _search(self, config: ExperimentConfig) -> CommandResult:
        axes = self._axes(config)
        result = self.counterexamples.search_signed_translates(
            config.n,
            axes,
            r=config.r,
            trials=config.trials,
            seed=config.seed,
            resolution=config.K or None,
            c=1.0 if config.c is None else config.c,
        )
        report = result.report
        columns = ["n", "r", "trials", "seed", "threshold", "measure"]
        row = [report.n, report.r, report.trials, report.seed, report.threshold, report.measure]
        return CommandResult("diverge", columns, [row], [report], "search")

    def _regions(self, config: ExperimentConfig) -> CommandResult:
        report = self.counterexamples.region_report(config.n, self._tilde(config))
        rows = [["omega", iv.m, iv.tilde, iv.start, iv.end, iv.empty] for iv in report.omega]
        rows += [["exceptional", iv.m, iv.tilde, iv.start, iv.end, iv.empty] for iv in report.exceptional]
        return CommandResult("diverge", ["set", "m", "tilde", "start", "end", "empty"], rows, [report], "regions")

    # plumbing

    def _table(self, label: str, reports: Sequence[BaseModel]) -> CommandResult:
        columns = list(type(reports[0]).model_fields) if reports else []
        rows = []
        for report in reports:
            values = report.model_dump()
            rows.append([",".join(map(str, v)) if isinstance(v, list) else v for v in values.values()])
        return CommandResult("diverge", columns, rows, list(reports), label)

    def _map(self, func: Callable[[Any], Any], items: Iterable[Any], workers: int) -> List[Any]:
        items = list(items)
        if workers <= 1 or len(items) <= 1:
            return [func(item) for item in items]
        with ThreadPoolExecutor(max_workers=workers) as pool:
            # map yields in submission order whatever the completion order
            return list(pool.map(func, items))

    def render(self, result: CommandResult, config: ExperimentConfig) -> str:
        stamp = dt.datetime.now(dt.timezone.utc).isoformat(timespec="seconds")
        if config.format == "json":
            payload = {
                "command": result.command,
                "what": result.label,
                "columns": result.columns,
                "rows": result.rows,
                "reports": [report.model_dump() for report in result.reports],
            }
            if not config.quiet_header:
                payload["generated"] = stamp
            return json.dumps(payload, indent=2, default=float) + "\n"
        buffer = io.StringIO()
        if not config.quiet_header:
            buffer.write(f"# walsh-logmeans {result.command} {result.label or ''} generated {stamp}\n")
        writer = csv.writer(buffer, lineterminator="\n")
        writer.writerow(result.columns)
        for row in result.rows:
            writer.writerow([_cell(value, self.csv_precision) for value in row])
        return buffer.getvalue()

    def write(self, result: CommandResult, config: ExperimentConfig) -> Optional[Path]:
        text = self.render(result, config)
        if config.output is None:
            sys.stdout.write(text)
            return None
        target = Path(config.output)
        target.parent.mkdir(parents=True, exist_ok=True)
        target.write_text(text)
        logger.info("Wrote %s rows to %s", len(result.rows), target)
        return target
