"""Experiment-runner CLI.

Subcommands mirror the workflows: ``exact`` (closed-form influence
quantities), ``sample`` (shot-level distributions), ``hiqi`` (high-influence
qubit identification), ``junta-test``, ``junta-learn``, ``sweep``
(parameter grids), and ``report`` (figures + CSV from a result envelope).

Every command reads one JSON config (``--config``), optionally overridden
by flags, and emits a JSON result envelope whose payload is a pure function
of (config, seed, workers). Exit codes: 0 success, 2 config error,
3 capability error, 4 resource-cap error.
"""

from __future__ import annotations

import json
import platform
import sys
import time
from importlib import metadata
from pathlib import Path

import click
import numpy as np

from .channels import junta_view, embed_dense
from .config import ConfigError, ExperimentConfig, GATE_MODE_NAMES
from .estimation import bounds_from_estimates, estimate_sampler, hiqi as run_hiqi, junta_tester
from .influence import influence_diagnostics, influence_exact, sampler_expectations
from .paulis import DenseSizeError
from .processes import ChiMatrix
from .sampling import (
    CapabilityError,
    CapacityError,
    SamplerConfig,
    SubsetDistribution,
    run_sampling,
    run_sampling_random,
)
from .subsets import QubitSubset
from .tomography import junta_learner

EXIT_CONFIG = 2
EXIT_CAPABILITY = 3
EXIT_RESOURCE = 4


def _versions() -> dict:
    try:
        own = metadata.version("qinfluence")
    except metadata.PackageNotFoundError:
        own = "unknown"
    return {"qinfluence": own, "numpy": np.__version__, "python": platform.python_version()}


def _envelope(cfg: ExperimentConfig, payload: dict, started: float) -> dict:
    return {
        "command": cfg.command,
        "payload_version": 1,
        "config": cfg.resolved(),
        "payload": payload,
        "versions": _versions(),
        "wall_clock_s": round(time.perf_counter() - started, 6),
        "provenance": {"seed": cfg.seed, "workers": cfg.workers},
    }


def _emit(envelope: dict, out: str | None, fmt: str) -> None:
    text = json.dumps(envelope, indent=2, sort_keys=True)
    if out is None:
        click.echo(text)
    else:
        Path(out).write_text(text + "\n")
        click.echo(f"wrote {out}")
    if fmt == "csv":
        if out is None:
            raise ConfigError("--format csv requires --out to name the file pair")
        from .report import write_csv

        csv_path = Path(out).with_suffix(".csv")
        write_csv(envelope, csv_path)
        click.echo(f"wrote {csv_path}")


def _default_subsets(cfg: ExperimentConfig) -> list[QubitSubset]:
    n = cfg.n
    subsets = [QubitSubset.from_qubits([i], n) for i in range(1, n + 1)]
    support = cfg.process.support
    for s in (support, support.complement(), QubitSubset.full(n)):
        if not s.is_empty() and s not in subsets:
            subsets.append(s)
    return subsets


def _requested_subsets(cfg: ExperimentConfig) -> list[QubitSubset]:
    if cfg.subsets is None:
        return _default_subsets(cfg)
    try:
        return [QubitSubset.from_qubits(s, cfg.n) for s in cfg.subsets]
    except ValueError as exc:
        raise ConfigError(f"subsets: {exc}") from exc


def _sampler_config(cfg: ExperimentConfig, shots: int | None = None) -> SamplerConfig:
    return SamplerConfig(
        shots=shots if shots is not None else cfg.shots,
        seed=cfg.seed,
        gate_set=cfg.gates,
        noise=cfg.noise,
        workers=cfg.workers,
        mode="marginal" if cfg.marginals_only else "full",
    )


def _exact_block(chi: ChiMatrix, s: QubitSubset) -> dict:
    e = sampler_expectations(chi, s)
    il, iu = (max(e[:2]), min(e[0] + e[1], 1.0))
    il3, iu3 = (max(e), min(sum(e) / 2, 1.0))
    block = {
        "qubits": list(s.qubits),
        "influence": influence_exact(chi, s),
        "samplers": list(e),
        "il": il,
        "iu": iu,
        "il_three": il3,
        "iu_three": iu3,
    }
    if not s.is_empty():
        d = influence_diagnostics(chi, s)
        block["diagnostics"] = {
            "o": d.o, "a": d.a, "b": d.b, "c": d.c,
            "a_only": d.a_only, "b_only": d.b_only, "c_only": d.c_only, "d": d.d,
        }
    return block


def cmd_exact(cfg: ExperimentConfig) -> dict:
    chi = embed_dense(cfg.process)
    return {"command": "exact", "subsets": [_exact_block(chi, s) for s in _requested_subsets(cfg)]}


def _cross_check(view, dists: dict[int, SubsetDistribution], subsets, strict: bool) -> list[dict]:
    rows = []
    for s in subsets:
        exact = view.sampler_expectations(s)
        for l, dist in sorted(dists.items()):
            try:
                emp, se = estimate_sampler(dist, s)
            except CapabilityError:
                if strict:
                    raise
                continue
            ref = exact[l - 1]
            z = 0.0 if se == 0.0 and emp == ref else (emp - ref) / se if se > 0 else float("inf")
            rows.append({"qubits": list(s.qubits), "gate": l, "exact": ref, "estimate": emp, "z": z})
    return rows


def cmd_sample(cfg: ExperimentConfig) -> dict:
    view = junta_view(cfg.process)
    sampler_cfg = _sampler_config(cfg)
    if cfg.gates in ("two", "three"):
        dists = run_sampling(view, sampler_cfg)
    else:
        dists = {0: run_sampling_random(view, sampler_cfg)}
    payload = {"command": "sample", "distributions": [dists[l].to_record() for l in sorted(dists)]}
    if cfg.cross_check:
        if cfg.gates in ("two", "three"):
            payload["cross_check"] = _cross_check(
                view, dists, _requested_subsets(cfg), strict=cfg.subsets is not None
            )
        else:
            weights = {"rand1": 2.0, "rand2": 1.5}
            rows = []
            for s in _requested_subsets(cfg):
                exact = view.sampler_expectations(s)
                count = 2 if cfg.gates == "rand1" else 3
                ref = sum(exact[:count]) / count
                try:
                    emp, se = estimate_sampler(dists[0], s)
                except CapabilityError:
                    if cfg.subsets is not None:
                        raise
                    continue
                z = 0.0 if se == 0.0 and emp == ref else (emp - ref) / se if se > 0 else float("inf")
                rows.append(
                    {
                        "qubits": list(s.qubits),
                        "overlap": emp,
                        "exact_overlap": ref,
                        "z": z,
                        "iu_from_overlap": min(weights[cfg.gates] * emp, 1.0),
                    }
                )
            payload["cross_check"] = rows
    return payload


def cmd_hiqi(cfg: ExperimentConfig) -> dict:
    result = run_hiqi(junta_view(cfg.process), cfg.delta, _sampler_config(cfg))
    return {"command": "hiqi", **result.to_record()}


def cmd_junta_test(cfg: ExperimentConfig) -> dict:
    verdict = junta_tester(junta_view(cfg.process), cfg.k, cfg.delta, _sampler_config(cfg))
    return {"command": "junta-test", **verdict.to_record()}


def cmd_junta_learn(cfg: ExperimentConfig) -> dict:
    out = junta_learner(
        junta_view(cfg.process),
        cfg.delta,
        _sampler_config(cfg),
        cfg.shots_per_setting,
        tomography_flip=cfg.tomography_flip,
        cap=cfg.target_cap,
    )
    return {"command": "junta-learn", **out.to_record()}


def cmd_sweep(cfg: ExperimentConfig) -> dict:
    from .channels import GateSpec, ProcessSpec

    grid = cfg.sweep
    s = QubitSubset.from_qubits([grid.qubit], cfg.n)
    points = []
    for kind in grid.kinds:
        for theta in grid.thetas():
            spec = ProcessSpec(cfg.n, (GateSpec(kind, (grid.qubit,), theta=theta),))
            view = junta_view(spec)
            e = view.sampler_expectations(s)
            point = {
                "kind": kind,
                "theta": theta,
                "exact": {
                    "samplers": list(e),
                    "influence": view.influence(s),
                    "il": max(e[:2]),
                    "iu": min(e[0] + e[1], 1.0),
                    "il_three": max(e),
                    "iu_three": min(sum(e) / 2, 1.0),
                },
            }
            if grid.sampled:
                dists = run_sampling(view, _sampler_config(cfg))
                pairs = [estimate_sampler(dists[l], s) for l in sorted(dists)]
                b = bounds_from_estimates(s, [p for p, _ in pairs], [se for _, se in pairs])
                point["sampled"] = b.to_record()
            points.append(point)
    return {"command": "sweep", "points": points}


_COMMANDS = {
    "exact": cmd_exact,
    "sample": cmd_sample,
    "hiqi": cmd_hiqi,
    "junta-test": cmd_junta_test,
    "junta-learn": cmd_junta_learn,
    "sweep": cmd_sweep,
}


def _execute(command: str, config_path: str, overrides: dict, out: str | None, fmt: str) -> None:
    started = time.perf_counter()
    try:
        try:
            doc = json.loads(Path(config_path).read_text())
        except OSError as exc:
            raise ConfigError(f"cannot read config {config_path}: {exc}") from exc
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config {config_path} is not valid JSON: {exc}") from exc
        if not isinstance(doc, dict):
            raise ConfigError("config document must be a JSON object")
        doc.update({k: v for k, v in overrides.items() if v is not None})
        cfg = ExperimentConfig.from_dict(doc, command)
        payload = _COMMANDS[command](cfg)
        _emit(_envelope(cfg, payload, started), out, fmt)
    except ConfigError as exc:
        click.echo(f"config error: {exc}", err=True)
        sys.exit(EXIT_CONFIG)
    except CapabilityError as exc:
        click.echo(f"capability error: {exc}", err=True)
        sys.exit(EXIT_CAPABILITY)
    except (CapacityError, DenseSizeError) as exc:
        click.echo(f"resource cap: {exc}", err=True)
        sys.exit(EXIT_RESOURCE)


def _common_options(f):
    f = click.option("--config", "config_path", required=True, type=click.Path(), help="JSON experiment config")(f)
    f = click.option("--seed", type=int, default=None, help="Override the config seed")(f)
    f = click.option("--workers", type=int, default=None, help="Override the worker count")(f)
    f = click.option("--out", type=click.Path(), default=None, help="Write the JSON envelope here")(f)
    f = click.option("--format", "fmt", type=click.Choice(["json", "csv"]), default="json",
                     help="csv additionally writes a delimited projection next to --out")(f)
    return f


def _sampling_options(f):
    f = click.option("--gates", type=click.Choice(sorted(GATE_MODE_NAMES)), default=None,
                     help="Test-gate mode: fixed two/three or per-shot random")(f)
    f = click.option("--marginals-only", is_flag=True, default=False,
                     help="Record only per-qubit flip rates (scales to n=64)")(f)
    return f


@click.group()
def main() -> None:
    """Influence sampling experiments for n-qubit quantum processes."""


_COMMAND_HELP = {
    "exact": "Closed-form influence, samplers, bounds and diagnostics.",
    "sample": "Run the shot-level sampler and emit flip-set distributions.",
    "hiqi": "Identify high-influence qubits by thresholding per-qubit bounds.",
    "junta-test": "Decide whether the process is close to a k-junta.",
    "junta-learn": "Identify the influential qubits, then learn their sub-process.",
    "sweep": "Evaluate samplers and bounds over a rotation-angle grid.",
}


def _make_command(name: str, sampling: bool):
    if sampling:

        @_common_options
        @_sampling_options
        def cmd(config_path, seed, workers, out, fmt, gates, marginals_only):
            overrides = {"seed": seed, "workers": workers, "gates": gates}
            if marginals_only:
                overrides["marginals_only"] = True
            _execute(name, config_path, overrides, out, fmt)

    else:

        @_common_options
        def cmd(config_path, seed, workers, out, fmt):
            _execute(name, config_path, {"seed": seed, "workers": workers}, out, fmt)

    cmd.__name__ = name.replace("-", "_")
    cmd.__doc__ = _COMMAND_HELP[name]
    return main.command(name=name)(cmd)


cmd_exact_cli = _make_command("exact", sampling=False)
cmd_sample_cli = _make_command("sample", sampling=True)
cmd_hiqi_cli = _make_command("hiqi", sampling=True)
cmd_junta_test_cli = _make_command("junta-test", sampling=True)
cmd_junta_learn_cli = _make_command("junta-learn", sampling=True)
cmd_sweep_cli = _make_command("sweep", sampling=True)


@main.command(name="report")
@click.option("--in", "envelope_path", required=True, type=click.Path(), help="Result envelope JSON")
@click.option("--out-dir", required=True, type=click.Path(), help="Directory for figures and CSV")
def cmd_report(envelope_path: str, out_dir: str) -> None:
    """Render figures and a CSV projection from a result envelope."""
    from .report import render_report

    try:
        envelope = json.loads(Path(envelope_path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        click.echo(f"config error: cannot load envelope: {exc}", err=True)
        sys.exit(EXIT_CONFIG)
    try:
        written = render_report(envelope, Path(out_dir))
    except ConfigError as exc:
        click.echo(f"config error: {exc}", err=True)
        sys.exit(EXIT_CONFIG)
    for path in written:
        click.echo(f"wrote {path}")


if __name__ == "__main__":
    main()
