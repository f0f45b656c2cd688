"""Dataset benchmarking over directories of (prompt, ground truth) pairs.

A dataset is one directory per sample, each holding prompt.txt and
ground_truth.stl.  One run evolves an object for every sample and scores
the final elite against the ground truth; several runs are then averaged
over the joint watertight subset, the samples whose ground truth and
whose generated elite in every run are all closed surfaces.  Restricting
every column to that shared subset keeps the aggregate numbers mutually
comparable.

Topology curves track the per-generation elite (labeled "elite" in the
output) next to the per-generation population average (labeled
"population"), because the two tell different stories: the elite curve
shows the best object found so far, the population curve shows whether
the cohort as a whole is converging.
"""

from __future__ import annotations

import hashlib
import json
import time
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .bridge import CsgEngine
from .errors import EmptyDataset, EvocadError, MismatchedSampleSets
from .evolve import BackendSuite, EvoConfig, run, write_traces
from .geometry import TriMesh, euler_characteristic, is_watertight, load_stl
from .lm import FewShotStore
from .metrics import IcpConfig, MetricReport, full_report

METRIC_KEYS = ("t_corr_pct", "t_err", "pcd", "hdd", "iou_pct", "dsc_pct")

CURVES_HEADER = "generation,t_corr_mean,t_corr_std,t_err_mean,t_err_std"


@dataclass(frozen=True, eq=False)
class Sample:
    """One benchmark entry: a text request and its reference solid."""

    ident: str
    prompt: str
    ground_truth: TriMesh
    path: str


@dataclass
class SampleResult:
    """Outcome of one evolutionary run on one sample."""

    sample: str
    seed: int
    ok: bool = False
    error: str = ""
    elite_code: str = ""
    metrics: MetricReport | None = None
    curves: list[dict] = field(default_factory=list)
    trace_ref: str = ""

    def to_dict(self) -> dict:
        return {
            "sample": self.sample,
            "seed": self.seed,
            "ok": self.ok,
            "error": self.error,
            "elite_code": self.elite_code,
            "metrics": self.metrics.to_dict() if self.metrics else None,
            "curves": self.curves,
            "trace_ref": self.trace_ref,
        }


@dataclass
class RunReport:
    """All sample results of one run.  Wall time is informational only."""

    seed: int
    results: list[SampleResult]
    elapsed_s: float = field(default=0.0, compare=False)

    def sample_ids(self) -> list[str]:
        return [r.sample for r in self.results]


@dataclass
class AggregateReport:
    """Cross-run averages over the joint watertight subset."""

    runs: int
    sample_ids: list[str]
    subset: list[str]
    metrics: dict[str, dict]
    curves_elite: list[dict]
    curves_population: list[dict]

    def to_dict(self) -> dict:
        return {
            "runs": self.runs,
            "sample_ids": self.sample_ids,
            "subset": self.subset,
            "metrics": self.metrics,
            "curves": {
                "elite": self.curves_elite,
                "population": self.curves_population,
            },
        }


# ---------------------------------------------------------------------------
# dataset loading


def load_dataset(root) -> list[Sample]:
    """Scan a directory of sample subdirectories, skipping broken ones."""
    root = Path(root)
    if not root.is_dir():
        raise EmptyDataset(f"dataset root {root} is not a directory")
    samples = []
    for sub in sorted(p for p in root.iterdir() if p.is_dir()):
        prompt_file = sub / "prompt.txt"
        stl_file = sub / "ground_truth.stl"
        if not prompt_file.is_file() or not stl_file.is_file():
            warnings.warn(f"skipping {sub.name}: needs prompt.txt and ground_truth.stl")
            continue
        prompt = prompt_file.read_text(encoding="utf-8").strip()
        if not prompt:
            warnings.warn(f"skipping {sub.name}: prompt.txt is empty")
            continue
        try:
            mesh = load_stl(stl_file.read_bytes())
        except EvocadError as exc:
            warnings.warn(f"skipping {sub.name}: unreadable ground truth ({exc})")
            continue
        samples.append(Sample(sub.name, prompt, mesh, str(sub)))
    if not samples:
        raise EmptyDataset(f"no usable samples under {root}")
    return samples


# ---------------------------------------------------------------------------
# per-sample scoring


def derive_seed(base: int, label: str) -> int:
    """Stable per-label seed so samples get independent but replayable runs."""
    digest = hashlib.sha256(f"{base}:{label}".encode()).digest()
    return int.from_bytes(digest[:8], "big") % (2**63)


def _topology_cache(engine):
    cache: dict[str, tuple[bool, int | None]] = {}

    def lookup(code: str) -> tuple[bool, int | None]:
        if code not in cache:
            result = engine.render(code)
            if result.ok and is_watertight(result.mesh):
                cache[code] = (True, euler_characteristic(result.mesh))
            else:
                cache[code] = (False, None)
        return cache[code]

    return lookup


def _curve_rows(traces, gt_chi: int | None, engine) -> list[dict]:
    """Per-generation elite and population topology against the target."""
    lookup = _topology_cache(engine)
    rows = []
    for trace in traces:
        row = {
            "generation": trace.generation,
            "elite_t_corr": None,
            "elite_t_err": None,
            "pop_t_corr_mean": None,
            "pop_t_err_mean": None,
            "pop_scored": 0,
        }
        if gt_chi is not None:
            codes = {snap["id"]: snap["code"] for snap in trace.individuals}
            elite_ok, elite_chi = lookup(codes[trace.elite])
            if elite_ok:
                row["elite_t_corr"] = elite_chi == gt_chi
                row["elite_t_err"] = abs(gt_chi - elite_chi)
            scored = [lookup(c) for c in codes.values()]
            chis = [chi for ok, chi in scored if ok]
            if chis:
                row["pop_t_corr_mean"] = float(np.mean([c == gt_chi for c in chis]))
                row["pop_t_err_mean"] = float(np.mean([abs(gt_chi - c) for c in chis]))
                row["pop_scored"] = len(chis)
        rows.append(row)
    return rows


def _score_sample(sample: Sample, cfg: EvoConfig, backends, engine, corpus,
                  trace_dir) -> SampleResult:
    seed = derive_seed(cfg.seed, sample.ident)
    out = SampleResult(sample=sample.ident, seed=seed)
    suite = backends(seed) if callable(backends) else backends
    try:
        result = run(sample.prompt, replace(cfg, seed=seed), suite,
                     corpus=corpus, engine=engine)
    except EvocadError as exc:
        out.error = f"run failed: {exc}"
        return out
    if trace_dir is not None:
        ref = Path(trace_dir) / f"{sample.ident}.jsonl"
        write_traces(ref, result.traces)
        out.trace_ref = ref.name
    gt_wt = is_watertight(sample.ground_truth)
    gt_chi = euler_characteristic(sample.ground_truth) if gt_wt else None
    out.curves = _curve_rows(result.traces, gt_chi, engine)
    out.elite_code = result.elite.code
    if not result.elite.ok:
        out.error = f"elite failed to compile: {result.elite.error}"
        return out
    out.metrics = full_report(result.elite.mesh, sample.ground_truth,
                              seed=derive_seed(seed, "metrics"))
    out.ok = True
    return out


def evaluate_run(samples: list[Sample], cfg: EvoConfig, backends,
                 engine=None, corpus=None, workers: int = 1,
                 trace_dir=None) -> RunReport:
    """One full run over the dataset: evolve, then score every sample.

    backends is either a BackendSuite shared by all samples or a callable
    mapping the derived per-sample seed to a fresh suite.  Per-sample
    failures are recorded in the result, never raised.
    """
    if not samples:
        raise EmptyDataset("no samples to evaluate")
    engine = engine if engine is not None else CsgEngine()
    corpus = corpus if corpus is not None else FewShotStore.bundled()
    if trace_dir is not None:
        Path(trace_dir).mkdir(parents=True, exist_ok=True)
    started = time.perf_counter()

    def score(sample):
        return _score_sample(sample, cfg, backends, engine, corpus, trace_dir)

    ordered = sorted(samples, key=lambda s: s.ident)
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(score, ordered))
    else:
        results = [score(s) for s in ordered]
    return RunReport(seed=cfg.seed, results=results,
                     elapsed_s=time.perf_counter() - started)


# ---------------------------------------------------------------------------
# aggregation


def joint_watertight_subset(runs: list[RunReport]) -> list[str]:
    """Samples whose ground truth and every run's elite are watertight."""
    ids = runs[0].sample_ids()
    for other in runs[1:]:
        if set(other.sample_ids()) != set(ids):
            raise MismatchedSampleSets("runs cover different sample sets")
    keep = []
    for ident in sorted(ids):
        entries = [
            next(r for r in report.results if r.sample == ident)
            for report in runs
        ]
        if all(
            e.metrics is not None
            and e.metrics.gt_watertight
            and e.metrics.gen_watertight
            for e in entries
        ):
            keep.append(ident)
    return keep


def _run_means(report: RunReport, subset: list[str]) -> dict[str, float]:
    chosen = [r.metrics for r in report.results if r.sample in set(subset)]
    return {
        "t_corr_pct": float(np.mean([m.t_corr for m in chosen])) * 100.0,
        "t_err": float(np.mean([m.t_err for m in chosen])),
        "pcd": float(np.mean([m.pcd for m in chosen])),
        "hdd": float(np.mean([m.hdd for m in chosen])),
        "iou_pct": float(np.mean([m.iou for m in chosen])) * 100.0,
        "dsc_pct": float(np.mean([m.dsc for m in chosen])) * 100.0,
    }


def _curve_table(runs: list[RunReport], subset: list[str], kind: str) -> list[dict]:
    corr_key = "elite_t_corr" if kind == "elite" else "pop_t_corr_mean"
    err_key = "elite_t_err" if kind == "elite" else "pop_t_err_mean"
    members = set(subset)
    by_generation: dict[int, list[tuple[float, float]]] = {}
    for report in runs:
        for result in report.results:
            if result.sample not in members:
                continue
            for row in result.curves:
                if row[corr_key] is None:
                    continue
                by_generation.setdefault(row["generation"], []).append(
                    (float(row[corr_key]), float(row[err_key]))
                )
    table = []
    for generation in sorted(by_generation):
        pts = np.asarray(by_generation[generation], dtype=np.float64)
        table.append({
            "generation": generation,
            "t_corr_mean": float(pts[:, 0].mean()),
            "t_corr_std": float(pts[:, 0].std()),
            "t_err_mean": float(pts[:, 1].mean()),
            "t_err_std": float(pts[:, 1].std()),
            "n": int(pts.shape[0]),
        })
    return table


def aggregate(runs: list[RunReport]) -> AggregateReport:
    """Mean and spread per metric across runs, on the joint subset."""
    if not runs:
        raise ValueError("aggregate needs at least one run")
    subset = joint_watertight_subset(runs)
    metrics: dict[str, dict] = {}
    if subset:
        per_run = [_run_means(report, subset) for report in runs]
        for key in METRIC_KEYS:
            values = np.array([means[key] for means in per_run], dtype=np.float64)
            metrics[key] = {"mean": float(values.mean()), "std": float(values.std())}
    else:
        metrics = {key: {"mean": None, "std": None} for key in METRIC_KEYS}
    return AggregateReport(
        runs=len(runs),
        sample_ids=sorted(runs[0].sample_ids()),
        subset=subset,
        metrics=metrics,
        curves_elite=_curve_table(runs, subset, "elite"),
        curves_population=_curve_table(runs, subset, "population"),
    )


# ---------------------------------------------------------------------------
# report files


def write_report_files(out_dir, agg: AggregateReport, runs: list[RunReport]):
    """Emit report.json, per_sample.jsonl and curves.csv under out_dir."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    (out / "report.json").write_text(
        json.dumps(agg.to_dict(), sort_keys=True, indent=2) + "\n", encoding="utf-8"
    )
    with open(out / "per_sample.jsonl", "w", encoding="utf-8") as fh:
        for index, report in enumerate(runs):
            for result in report.results:
                record = {"run": index, "run_seed": report.seed}
                record.update(result.to_dict())
                fh.write(json.dumps(record, sort_keys=True) + "\n")
    lines = [CURVES_HEADER]
    for row in agg.curves_elite:
        lines.append(",".join([
            str(row["generation"]),
            repr(row["t_corr_mean"]),
            repr(row["t_corr_std"]),
            repr(row["t_err_mean"]),
            repr(row["t_err_std"]),
        ]))
    (out / "curves.csv").write_text("\n".join(lines) + "\n", encoding="utf-8")
