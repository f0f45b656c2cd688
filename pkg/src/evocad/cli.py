"""Command line front end.

Four subcommands: generate one object from a prompt, bench a dataset
over several runs, compare two STL files, and validate the configuration
without doing real work.  All machine-readable output is JSON or CSV;
progress and summaries go to stderr.  Exit codes: 0 success, 1 bad
configuration or input, 2 generation produced no usable object, 3 the
model backend failed.

Settings resolve in three layers: built-in defaults, then a key=value
config file (--config), then explicit flags.  The effective settings are
echoed into the output directory as config_used.json so a result can
always be traced back to what produced it.
"""

from __future__ import annotations

import argparse
import json
import shlex
import sys
from pathlib import Path

from .bridge import CsgEngine, ExternalEngine
from .errors import (
    BackendError,
    EmptyDataset,
    EvocadError,
    MismatchedSampleSets,
)
from .evolve import BackendSuite, EvoConfig, run, write_traces
from .geometry import load_stl, write_stl
from .harness import (
    aggregate,
    derive_seed,
    evaluate_run,
    load_dataset,
    write_report_files,
)
from .lm import MockBackend
from .metrics import full_report
from .render import render_multiview, write_png

DEFAULTS = {
    "backend": "mock",
    "engine": "csg",
    "base_url": "",
    "external_cmd": "",
    "pop": 6,
    "gens": 4,
    "shots": 5,
    "pm": 0.5,
    "selection_lambda": 0.5,
    "elites": 1,
    "seed": 0,
    "render_size": 256,
    "runs": 3,
    "workers": 1,
    "out": "out",
}

_COERCE = {
    "pop": int, "gens": int, "shots": int, "elites": int, "seed": int,
    "render_size": int, "runs": int, "workers": int,
    "pm": float, "selection_lambda": float,
    "backend": str, "engine": str, "base_url": str, "external_cmd": str,
    "out": str,
}

# config file spellings that differ from internal names
_FILE_ALIASES = {"lambda": "selection_lambda"}


class CliError(Exception):
    """Carries the process exit code alongside the message."""

    def __init__(self, code: int, message: str):
        super().__init__(message)
        self.code = code


class _Parser(argparse.ArgumentParser):
    # argparse would sys.exit(2); 2 means generation failure here
    def error(self, message):
        raise CliError(1, message)


# ---------------------------------------------------------------------------
# settings


def read_config_file(path) -> dict:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise CliError(1, f"cannot read config file: {exc}")
    out = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        key, sep, value = line.partition("=")
        if not sep:
            raise CliError(1, f"{path}:{lineno}: expected key=value")
        key = _FILE_ALIASES.get(key.strip(), key.strip())
        if key not in _COERCE:
            raise CliError(1, f"{path}:{lineno}: unknown setting {key!r}")
        try:
            out[key] = _COERCE[key](value.strip())
        except ValueError:
            raise CliError(1, f"{path}:{lineno}: bad value for {key!r}")
    return out


def effective_settings(args) -> dict:
    settings = dict(DEFAULTS)
    if getattr(args, "config", None):
        settings.update(read_config_file(args.config))
    for key in DEFAULTS:
        value = getattr(args, key, None)
        if value is not None:
            settings[key] = value
    return settings


def _evo_config(settings) -> EvoConfig:
    try:
        return EvoConfig(
            population=settings["pop"],
            generations=settings["gens"],
            few_shots=settings["shots"],
            mutation_prob=settings["pm"],
            selection_lambda=settings["selection_lambda"],
            elites=settings["elites"],
            seed=settings["seed"],
            render_size=settings["render_size"],
        )
    except ValueError as exc:
        raise CliError(1, f"bad configuration: {exc}")


def _make_suite(settings, seed: int) -> BackendSuite:
    if settings["backend"] == "mock":
        return BackendSuite.mock(seed)
    if settings["backend"] == "wire":
        if not settings["base_url"]:
            raise CliError(1, "wire backend needs base_url")
        return BackendSuite.wire(settings["base_url"])
    raise CliError(1, f"unknown backend {settings['backend']!r}")


def _make_engine(settings, out_dir: Path):
    if settings["engine"] == "csg":
        return CsgEngine()
    if settings["engine"] == "external":
        if not settings["external_cmd"]:
            raise CliError(1, "external engine needs external_cmd")
        work = out_dir / "engine_stl"
        work.mkdir(parents=True, exist_ok=True)
        return ExternalEngine(shlex.split(settings["external_cmd"]), work)
    raise CliError(1, f"unknown engine {settings['engine']!r}")


def _write_config_echo(out_dir: Path, settings):
    out_dir.mkdir(parents=True, exist_ok=True)
    (out_dir / "config_used.json").write_text(
        json.dumps(settings, sort_keys=True, indent=2) + "\n", encoding="utf-8"
    )


def _close(engine):
    if isinstance(engine, ExternalEngine):
        engine.close()


# ---------------------------------------------------------------------------
# subcommands


def cmd_generate(args) -> int:
    settings = effective_settings(args)
    cfg = _evo_config(settings)
    prompt_arg = args.prompt
    path = Path(prompt_arg)
    prompt = path.read_text(encoding="utf-8").strip() if path.is_file() else prompt_arg
    if not prompt.strip():
        raise CliError(1, "prompt is empty")

    out_dir = Path(settings["out"])
    _write_config_echo(out_dir, settings)
    suite = _make_suite(settings, cfg.seed)
    engine = _make_engine(settings, out_dir)
    try:
        result = run(prompt, cfg, suite, engine=engine)
    finally:
        _close(engine)

    write_traces(out_dir / "traces.jsonl", result.traces)
    elite = result.elite
    (out_dir / "elite.txt").write_text(elite.code + ("" if elite.code.endswith("\n") else "\n"),
                                       encoding="utf-8")
    summary = {
        "ok": elite.ok,
        "prompt": prompt,
        "seed": cfg.seed,
        "elite": elite.snapshot(),
        "generator_calls": result.generator_calls,
        "call_counts": dict(result.call_counts),
    }
    (out_dir / "result.json").write_text(
        json.dumps(summary, sort_keys=True, indent=2) + "\n", encoding="utf-8"
    )
    if not elite.ok:
        print(f"generation failed: {elite.error}", file=sys.stderr)
        return 2
    (out_dir / "elite.stl").write_bytes(write_stl(elite.mesh))
    image = render_multiview(elite.mesh, cfg.render_size).with_provenance(elite.code)
    write_png(image, out_dir / "elite.png")
    print(f"wrote elite.txt, elite.stl, elite.png, traces.jsonl to {out_dir}",
          file=sys.stderr)
    return 0


def cmd_bench(args) -> int:
    settings = effective_settings(args)
    cfg = _evo_config(settings)
    samples = load_dataset(args.dataset)
    out_dir = Path(settings["out"])
    _write_config_echo(out_dir, settings)
    engine = _make_engine(settings, out_dir)

    if settings["backend"] == "mock":
        backends = lambda seed: BackendSuite.mock(seed)  # noqa: E731
    else:
        backends = _make_suite(settings, cfg.seed)

    runs = []
    try:
        for index in range(settings["runs"]):
            run_seed = derive_seed(cfg.seed, f"run-{index}")
            run_cfg = EvoConfig(
                population=cfg.population, generations=cfg.generations,
                few_shots=cfg.few_shots, mutation_prob=cfg.mutation_prob,
                selection_lambda=cfg.selection_lambda, elites=cfg.elites,
                seed=run_seed, render_size=cfg.render_size,
            )
            trace_dir = out_dir / "traces" / f"run-{index}"
            runs.append(evaluate_run(samples, run_cfg, backends, engine=engine,
                                     workers=settings["workers"],
                                     trace_dir=trace_dir))
            print(f"run {index}: {len(samples)} samples scored", file=sys.stderr)
    finally:
        _close(engine)

    report = aggregate(runs)
    write_report_files(out_dir, report, runs)
    if args.gallery:
        _write_gallery(out_dir, runs, settings["render_size"])
    kept = len(report.subset)
    print(f"aggregated {len(runs)} runs; joint watertight subset "
          f"{kept}/{len(samples)}; reports in {out_dir}", file=sys.stderr)
    return 0


def _write_gallery(out_dir: Path, runs, size: int):
    gallery = out_dir / "gallery"
    gallery.mkdir(exist_ok=True)
    engine = CsgEngine()
    for index, report in enumerate(runs):
        for result in report.results:
            if not result.ok:
                continue
            rendered = engine.render(result.elite_code)
            if rendered.ok:
                image = render_multiview(rendered.mesh, size).with_provenance(
                    result.elite_code)
                write_png(image, gallery / f"run{index}_{result.sample}.png")


def cmd_compare(args) -> int:
    meshes = []
    for name in (args.generated, args.reference):
        try:
            meshes.append(load_stl(Path(name).read_bytes()))
        except OSError as exc:
            raise CliError(1, f"cannot read {name}: {exc}")
        except EvocadError as exc:
            raise CliError(1, f"cannot parse {name}: {exc}")
    report = full_report(meshes[0], meshes[1], seed=args.seed or 0)
    print(json.dumps(report.to_dict(), sort_keys=True, indent=2))
    return 0


def cmd_validate(args) -> int:
    settings = effective_settings(args)
    cfg = _evo_config(settings)
    status = {"config": "ok", "backend": "", "engine": ""}

    suite = _make_suite(settings, cfg.seed)
    if isinstance(suite.generator, MockBackend):
        status["backend"] = "mock ready"
    else:
        from .lm import ChatMessage

        probe = [ChatMessage("user", "Reply with the single word ready.")]
        suite.generator.complete(probe, suite.configs["describer"])
        status["backend"] = f"wire ready at {settings['base_url']}"

    if settings["engine"] == "csg":
        rendered = CsgEngine().render("part z 0 1 { rect 1 1 }")
        if not rendered.ok:
            raise CliError(1, f"csg engine self-test failed: {rendered.error}")
        status["engine"] = "csg ready"
    else:
        command = shlex.split(settings["external_cmd"] or "")
        if not command:
            raise CliError(1, "external engine needs external_cmd")
        import shutil

        if shutil.which(command[0]) is None and not Path(command[0]).exists():
            raise CliError(1, f"external runner not found: {command[0]}")
        status["engine"] = f"external runner present: {command[0]}"

    print(json.dumps(status, sort_keys=True, indent=2))
    return 0


# ---------------------------------------------------------------------------
# wiring


def _add_common(parser):
    parser.add_argument("--config", help="key=value settings file")
    parser.add_argument("--backend", choices=["mock", "wire"])
    parser.add_argument("--engine", choices=["csg", "external"])
    parser.add_argument("--base-url", dest="base_url")
    parser.add_argument("--external-cmd", dest="external_cmd")
    parser.add_argument("--pop", type=int)
    parser.add_argument("--gens", type=int)
    parser.add_argument("--shots", type=int)
    parser.add_argument("--pm", type=float)
    parser.add_argument("--lambda", dest="selection_lambda", type=float)
    parser.add_argument("--elites", type=int)
    parser.add_argument("--seed", type=int)
    parser.add_argument("--render-size", dest="render_size", type=int)
    parser.add_argument("--out")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="evocad",
                     description="evolutionary CAD program generation")
    sub = parser.add_subparsers(dest="subcommand", required=True)

    gen = sub.add_parser("generate", help="evolve one object from a prompt")
    gen.add_argument("prompt", help="prompt text, or a path to a text file")
    _add_common(gen)
    gen.set_defaults(func=cmd_generate)

    bench = sub.add_parser("bench", help="run the benchmark over a dataset")
    bench.add_argument("dataset", help="dataset root directory")
    bench.add_argument("--runs", type=int)
    bench.add_argument("--workers", type=int)
    bench.add_argument("--gallery", action="store_true",
                       help="also write per-sample elite renders")
    _add_common(bench)
    bench.set_defaults(func=cmd_bench)

    cmp_ = sub.add_parser("compare", help="score one STL against another")
    cmp_.add_argument("generated", help="generated mesh (STL)")
    cmp_.add_argument("reference", help="reference mesh (STL)")
    cmp_.add_argument("--seed", type=int)
    cmp_.set_defaults(func=cmd_compare)

    val = sub.add_parser("validate", help="check settings and backends")
    _add_common(val)
    val.set_defaults(func=cmd_validate)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return args.func(args)
    except CliError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.code
    except BackendError as exc:
        print(f"backend error: {exc}", file=sys.stderr)
        return 3
    except (EmptyDataset, MismatchedSampleSets, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except EvocadError as exc:
        print(f"generation error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
