import json
import logging
import math
from pathlib import Path
from typing import Any, Callable, Dict, List, Optional, Tuple, Type, TypeVar

import numpy as np
import typer
from pydantic import BaseModel, ValidationError

from almost_prime_lab import expsum, gamma, kernel, params, primes, sieve
from almost_prime_lab.errors import LabError, PreconditionError, VerificationError
from almost_prime_lab.logging_setup import setup_logging
from almost_prime_lab.models import (
    KernelTableConfig,
    ParamsConfig,
    ReportConfig,
    SearchConfig,
    TraceConfig,
    VerifyConfig,
    WeightsConfig,
)
from almost_prime_lab.storage import (
    atomic_write_csv,
    atomic_write_json,
    atomic_write_jsonl,
    default_path,
    load_config_file,
)
from almost_prime_lab.verify import run_suites

setup_logging()
logger = logging.getLogger("app.cli")

app = typer.Typer(help="Almost-prime lab: prime quadruples near N with sieve-rough shifts")

C = TypeVar("C", bound=BaseModel)


def _resolve(model: Type[C], config: Optional[Path], **flags: Any) -> C:
    """defaults < JSON config file < explicit flags."""
    merged: Dict[str, Any] = dict(load_config_file(config))
    merged.update({k: v for k, v in flags.items() if v is not None})
    try:
        return model(**merged)
    except ValidationError as e:
        raise PreconditionError(f"invalid {model.__name__}: {e}") from e


def _guard(fn: Callable[[], None]) -> None:
    try:
        fn()
    except LabError as e:
        typer.echo(f"error: {e}", err=True)
        logger.error("%s: %s", type(e).__name__, e)
        raise typer.Exit(code=e.exit_code)


def _echo_json(payload: Any) -> None:
    typer.echo(json.dumps(payload, indent=2, sort_keys=True))


@app.command("params")
def cmd_params(
    c: Optional[float] = typer.Option(None, "--c", help="exponent c"),
    N: Optional[float] = typer.Option(None, "--N", help="target N (default 3 X^c)"),
    X: Optional[float] = typer.Option(None, "--X", help="scale X when N is not given"),
    A: Optional[float] = typer.Option(None, "--A"),
    s: Optional[float] = typer.Option(None, "--s", help="sieve quality s in [2, 3]"),
    coefficient: Optional[float] = typer.Option(None, "--coef", help="coefficient in f(s) - coef F(s)"),
    scan: Optional[bool] = typer.Option(None, "--scan/--no-scan", help="scan f(s) - coef F(s) over [2, 3]"),
    grid_step: Optional[float] = typer.Option(None, "--grid-step"),
    out: Optional[str] = typer.Option(None, "--out", help="JSON report path (CSV for --scan rows)"),
    config: Optional[Path] = typer.Option(None, "--config", help="JSON config file"),
):
    """
    Example:
      python app.py params --c 1.005 --s 2.95
    """

    def run() -> None:
        cfg = _resolve(ParamsConfig, config, c=c, N=N, X=X, A=A, s=s, coefficient=coefficient,
                       scan=scan, grid_step=grid_step, out=out)
        target = cfg.N if cfg.N is not None else 3.0 * cfg.X ** cfg.c
        p = params.derive_params(cfg.c, target, cfg.A, cfg.s)
        report: Dict[str, Any] = params.params_report(p)
        report["objective_at_s"] = float(params.sieve_objective(cfg.s, cfg.coefficient))
        sc = None
        if cfg.scan:
            sc = params.scan_sieve_quality(cfg.c, coefficient=cfg.coefficient, grid_step=cfg.grid_step)
            report["scan"] = sc.model_dump(mode="json", exclude={"rows"})
        effective = cfg.model_dump(mode="json")
        if cfg.out:
            if sc is not None and cfg.out.endswith(".csv"):
                atomic_write_csv(Path(cfg.out), ["s", "objective"], sc.rows, effective)
            else:
                atomic_write_json(Path(cfg.out), report, effective)
        _echo_json(report)
        if report["range_class"] == "outside":
            raise PreconditionError(f"c={cfg.c} lies outside every theorem range")

    _guard(run)


@app.command("search")
def cmd_search(
    c: Optional[float] = typer.Option(None, "--c"),
    X: Optional[float] = typer.Option(None, "--X"),
    N: Optional[float] = typer.Option(None, "--N", help="target N (default 3 X^c)"),
    vartheta: Optional[float] = typer.Option(None, "--vartheta"),
    z: Optional[float] = typer.Option(None, "--z"),
    D: Optional[float] = typer.Option(None, "--D", help="sieve level (default z^3)"),
    radius: Optional[float] = typer.Option(None, "--radius", help="search radius (default vartheta)"),
    require_rough: Optional[bool] = typer.Option(None, "--require-rough/--no-require-rough"),
    limit: Optional[int] = typer.Option(None, "--limit"),
    threads: Optional[int] = typer.Option(None, "--threads"),
    out: Optional[str] = typer.Option(None, "--out", help="witness JSON-lines path"),
    config: Optional[Path] = typer.Option(None, "--config"),
):
    """
    Example:
      python app.py search --c 1.005 --X 2000 --vartheta 0.05 --z 5
    """

    def run() -> None:
        cfg = _resolve(SearchConfig, config, c=c, X=X, N=N, vartheta=vartheta, z=z, D=D, radius=radius,
                       require_rough=require_rough, limit=limit, threads=threads, out=out)
        p = params.desk_params(cfg.c, cfg.N, X=cfg.X, vartheta=cfg.vartheta, z=cfg.z, D=cfg.D)
        ctx = expsum.build_context(p, threads=cfg.threads)
        found = gamma.find_witnesses(ctx, cfg.limit, radius=cfg.radius, require_rough=cfg.require_rough)
        path = Path(cfg.out) if cfg.out else default_path("witnesses.jsonl")
        n = atomic_write_jsonl(path, (w.row() for w in found.witnesses), cfg.model_dump(mode="json"))
        _echo_json({
            "N": p.N,
            "radius": found.radius,
            "admissible_primes": found.admissible_primes,
            "searched_quadruples": found.searched_quadruples,
            "matches": found.matches,
            "witnesses": n,
            "out": str(path),
        })

    _guard(run)


@app.command("verify")
def cmd_verify(
    suite: Optional[str] = typer.Option(None, "--suite", help="params|primes|sieve|kernel|expsum|gamma|all"),
    seed: Optional[int] = typer.Option(None, "--seed"),
    samples: Optional[int] = typer.Option(None, "--samples", help="random quadruples for the vector sieve"),
    out: Optional[str] = typer.Option(None, "--out"),
    config: Optional[Path] = typer.Option(None, "--config"),
):
    """
    Example:
      python app.py verify --suite sieve
    """

    def run() -> None:
        cfg = _resolve(VerifyConfig, config, suite=suite, seed=seed, samples=samples, out=out)
        results = run_suites(cfg.suite, cfg.seed, cfg.samples)
        for r in results:
            for ch in r.checks:
                typer.echo(f"[{'PASS' if ch.passed else 'FAIL'}] {r.suite}.{ch.name} {ch.detail}".rstrip())
        if cfg.out:
            atomic_write_json(Path(cfg.out), [r.model_dump(mode="json") for r in results], cfg.model_dump(mode="json"))
        failed = [f"{r.suite}.{ch.name}" for r in results for ch in r.checks if not ch.passed]
        if failed:
            raise VerificationError(f"{len(failed)} check(s) failed: {', '.join(failed)}")
        typer.echo("all checks passed")

    _guard(run)


def _trace_rows(cfg: TraceConfig) -> Tuple[List[str], List[Any]]:
    q = cfg.quantity
    if q in ("L", "I"):
        t_max = cfg.t_max if cfg.t_max is not None else 32.0 * cfg.X ** (-cfg.c)
        if q == "L":
            p = params.desk_params(cfg.c, X=cfg.X, vartheta=cfg.vartheta, z=cfg.z, D=cfg.D)
            ctx = expsum.build_context(p, threads=cfg.threads)
            grid = np.linspace(0.0, t_max, cfg.points)
            return ["t", "re_L", "im_L", "abs_L", "abs_M"], expsum.l_trace_rows(ctx, cfg.sign, grid)
        grid = np.linspace(-t_max, t_max, cfg.points)
        return ["alpha", "re_I", "im_I", "abs_I", "bound"], expsum.i_trace_rows(cfg.X, cfg.c, grid)
    if q == "Theta":
        spec = kernel.make_kernel(cfg.vartheta, cfg.k)
        x_max = cfg.t_max if cfg.t_max is not None else 16.0 * cfg.k / cfg.vartheta
        rows = kernel.kernel_table(spec, np.linspace(0.0, x_max, cfg.points))
        return ["x", "Theta", "branch1", "branch2", "branch3", "bound"], rows
    if q == "moments":
        reports = []
        for X in cfg.scales:
            p = params.desk_params(cfg.c, X=X, vartheta=cfg.vartheta, z=cfg.z, D=cfg.D)
            ctx = expsum.build_context(p, threads=cfg.threads)
            reports.append(expsum.mean_square(ctx, cfg.sign))
            reports.append(expsum.unit_interval_moment(ctx, cfg.sign, 2))
            reports.append(expsum.unit_interval_moment(ctx, cfg.sign, 4))
        return ["X", "kind", "moment", "reference", "ratio"], expsum.moment_rows(reports)
    if q == "minsum":
        intervals = [expsum.min_sum(int(X), cfg.c) for X in cfg.scales]
        return ["X", "lower", "upper", "exact_part", "reference", "ratio_upper"], expsum.minsum_rows(intervals)
    if q == "primes":
        rows = primes.segment_counts(int(math.floor(cfg.X / 2.0)), int(math.floor(cfg.X)), cfg.segment_size)
        return ["segment_lo", "segment_hi", "count"], rows
    raise PreconditionError(f"unknown trace quantity {q!r}")


@app.command("trace")
def cmd_trace(
    quantity: str = typer.Argument(..., help="L|I|Theta|moments|minsum|primes"),
    c: Optional[float] = typer.Option(None, "--c"),
    X: Optional[float] = typer.Option(None, "--X"),
    vartheta: Optional[float] = typer.Option(None, "--vartheta"),
    k: Optional[int] = typer.Option(None, "--k"),
    z: Optional[float] = typer.Option(None, "--z"),
    D: Optional[float] = typer.Option(None, "--D"),
    sign: Optional[str] = typer.Option(None, "--sign", help="plus|minus|unsieved"),
    points: Optional[int] = typer.Option(None, "--points"),
    t_max: Optional[float] = typer.Option(None, "--t-max"),
    scales: Optional[List[float]] = typer.Option(None, "--scale", help="repeatable; X values for moments/minsum"),
    segment_size: Optional[int] = typer.Option(None, "--segment-size"),
    threads: Optional[int] = typer.Option(None, "--threads"),
    out: Optional[str] = typer.Option(None, "--out"),
    config: Optional[Path] = typer.Option(None, "--config"),
):
    """
    Example:
      python app.py trace L --c 1.1 --X 1000 --points 257
    """

    def run() -> None:
        cfg = _resolve(TraceConfig, config, quantity=quantity, c=c, X=X, vartheta=vartheta, k=k, z=z, D=D,
                       sign=sign, points=points, t_max=t_max, scales=scales or None,
                       segment_size=segment_size, threads=threads, out=out)
        columns, rows = _trace_rows(cfg)
        path = Path(cfg.out) if cfg.out else default_path(f"trace_{cfg.quantity}.csv")
        n = atomic_write_csv(path, columns, rows, cfg.model_dump(mode="json"))
        typer.echo(f"Saved {n} rows to {path}")

    _guard(run)


@app.command("weights")
def cmd_weights(
    D: Optional[float] = typer.Option(None, "--D"),
    z: Optional[float] = typer.Option(None, "--z"),
    out: Optional[str] = typer.Option(None, "--out"),
    config: Optional[Path] = typer.Option(None, "--config"),
):
    """
    Example:
      python app.py weights --D 100 --z 10
    """

    def run() -> None:
        cfg = _resolve(WeightsConfig, config, D=D, z=z, out=out)
        plus = sieve.build_rosser(cfg.D, cfg.z, "plus")
        minus = sieve.build_rosser(cfg.D, cfg.z, "minus")
        rows = sieve.weights_table_rows(plus, minus)
        path = Path(cfg.out) if cfg.out else default_path("weights.csv")
        n = atomic_write_csv(path, ["d", "factorization", "lambda_plus", "lambda_minus"], rows,
                             cfg.model_dump(mode="json"))
        typer.echo(f"Saved {n} rows to {path}")
        try:
            g = sieve.g_bounds_check(cfg.D, cfg.z)
        except PreconditionError as e:
            logger.info("G bounds skipped: %s", e)
        else:
            typer.echo(f"G- = {g.G_minus:.10g}  F(z) = {g.curly_F:.10g}  G+ = {g.G_plus:.10g}  chain={g.chain_holds}")

    _guard(run)


@app.command("kernel-table")
def cmd_kernel_table(
    vartheta: Optional[float] = typer.Option(None, "--vartheta"),
    k: Optional[int] = typer.Option(None, "--k"),
    x_max: Optional[float] = typer.Option(None, "--x-max"),
    points: Optional[int] = typer.Option(None, "--points"),
    out: Optional[str] = typer.Option(None, "--out"),
    config: Optional[Path] = typer.Option(None, "--config"),
):
    """
    Example:
      python app.py kernel-table --vartheta 0.05 --k 8
    """

    def run() -> None:
        cfg = _resolve(KernelTableConfig, config, vartheta=vartheta, k=k, x_max=x_max, points=points, out=out)
        spec = kernel.make_kernel(cfg.vartheta, cfg.k)
        x_hi = cfg.x_max if cfg.x_max is not None else 16.0 * cfg.k / cfg.vartheta
        rows = kernel.kernel_table(spec, np.linspace(0.0, x_hi, cfg.points))
        path = Path(cfg.out) if cfg.out else default_path("kernel_table.csv")
        n = atomic_write_csv(path, ["x", "Theta", "branch1", "branch2", "branch3", "bound"], rows,
                             cfg.model_dump(mode="json"))
        typer.echo(f"Saved {n} rows to {path}")

    _guard(run)


@app.command("report")
def cmd_report(
    c: Optional[float] = typer.Option(None, "--c"),
    X: Optional[float] = typer.Option(None, "--X"),
    N: Optional[float] = typer.Option(None, "--N"),
    vartheta: Optional[float] = typer.Option(None, "--vartheta"),
    k: Optional[int] = typer.Option(None, "--k"),
    z: Optional[float] = typer.Option(None, "--z"),
    D: Optional[float] = typer.Option(None, "--D"),
    coefficient: Optional[float] = typer.Option(None, "--coef"),
    T: Optional[float] = typer.Option(None, "--T", help="run the Fourier stage up to |t| <= T"),
    witness_limit: Optional[int] = typer.Option(None, "--witness-limit"),
    threads: Optional[int] = typer.Option(None, "--threads"),
    out: Optional[str] = typer.Option(None, "--out"),
    config: Optional[Path] = typer.Option(None, "--config"),
):
    """
    Example:
      python app.py report --c 1.1 --X 100 --vartheta 0.05 --z 5 --D 50 --T 2000
    """

    def run() -> None:
        cfg = _resolve(ReportConfig, config, c=c, X=X, N=N, vartheta=vartheta, k=k, z=z, D=D,
                       coefficient=coefficient, T=T, witness_limit=witness_limit, threads=threads, out=out)
        p = params.desk_params(cfg.c, cfg.N, X=cfg.X, vartheta=cfg.vartheta, z=cfg.z, D=cfg.D)
        ctx = expsum.build_context(p, threads=cfg.threads)
        spec = kernel.make_kernel(cfg.vartheta, cfg.k)
        report = gamma.build_report(ctx, spec, coefficient=cfg.coefficient, T=cfg.T, witness_limit=cfg.witness_limit)
        payload = report.model_dump(mode="json")
        path = Path(cfg.out) if cfg.out else default_path("report.json")
        atomic_write_json(path, payload, cfg.model_dump(mode="json"))
        _echo_json({k_: v for k_, v in payload.items() if k_ != "witnesses"})

    _guard(run)


if __name__ == "__main__":
    app()
