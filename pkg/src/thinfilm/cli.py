"""Command line entry point: ``thinfilm <command> [options]``."""
from __future__ import annotations

import csv
import json
import math
import sys
from pathlib import Path

import click
import numpy as np

from . import experiments as ex
from . import field_energy as fe
from . import snapshot
from .config import ConfigError, load_config
from .geometry import DomainMask
from .params import derive


def _clean(obj):
    if isinstance(obj, float):
        return None if math.isnan(obj) else obj
    if isinstance(obj, (np.floating, np.integer)):
        return _clean(obj.item())
    if isinstance(obj, dict):
        return {k: _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    return obj


def _cell(v):
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def write_outputs(out: Path, results: list) -> None:
    """``results.json`` with every record and ``table.csv`` with every table row."""
    out.mkdir(parents=True, exist_ok=True)
    payload = {"experiments": [r.as_dict() for r in results], "passed": all(r.passed for r in results)}
    (out / "results.json").write_text(json.dumps(_clean(payload), indent=2, sort_keys=True) + "\n")
    columns = ["experiment"]
    for r in results:
        for row in r.table:
            columns += [k for k in row if k not in columns]
    with (out / "table.csv").open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(columns)
        for r in results:
            for row in r.table:
                full = {"experiment": r.experiment, **row}
                w.writerow([_cell(full.get(c, "")) for c in columns])


def _finish(out: Path, results: list) -> None:
    write_outputs(out, results)
    failed = [rec for r in results for rec in r.failures]
    for rec in failed:
        click.echo(f"FAIL {rec.claim_id}: lhs={rec.lhs!r} rhs={rec.rhs!r} {rec.note}", err=True)
    click.echo(f"{sum(len(r.records) for r in results)} records, {len(failed)} failed; output in {out}")
    sys.exit(1 if failed else 0)


@click.group()
@click.option("--config", "config_path", type=click.Path(exists=True, dir_okay=False), default=None, help="YAML experiment config.")
@click.option("--out", type=click.Path(file_okay=False), default="out", show_default=True, help="Output directory.")
@click.option("--seed", type=click.IntRange(min=0), default=None, help="Overrides the config seed list.")
@click.option("--threads", type=click.IntRange(min=1), default=1, show_default=True, help="Parallel independent runs.")
@click.pass_context
def main(ctx, config_path, out, seed, threads):
    """Reduced thin-film energy engine."""
    overrides = {"seeds": [seed]} if seed is not None else {}
    try:
        cfg = load_config(config_path, overrides)
    except ConfigError as exc:
        raise click.BadParameter(str(exc), param_hint="--config") from None
    ctx.obj = {"cfg": cfg, "out": Path(out), "threads": threads}


@main.command()
@click.argument("path", type=click.Path(exists=True, dir_okay=False))
@click.pass_context
def energy(ctx, path):
    """Evaluate F_eps, E_eps and the BV estimate for a field snapshot."""
    m, eps, Q = snapshot.load(path)
    p = derive(eps, Q)
    b = fe.E_eps(m, p)
    res = ex.ExperimentResult("energy", params=p, domain=m.mask.descriptor(), provenance={"snapshot": str(path)})
    res.records += ex.check_bv_bounds(m, p, breakdown=b)
    res.table.append({k: v for k, v in b.as_dict().items() if v is not None})
    _finish(ctx.obj["out"], [res])


@main.command("minimize")
@click.pass_context
def minimize_cmd(ctx):
    """Multi-start minimization on the configured domain."""
    cfg, out, threads = ctx.obj["cfg"], ctx.obj["out"], ctx.obj["threads"]
    p = derive(cfg.epsilon, cfg.Q)
    mask = cfg.mask()
    traces = ex.multistart(mask, p, cfg.minimize_config(), cfg.starts, cfg.seeds, threads)
    res = ex.ExperimentResult("minimize", params=p, domain=mask.descriptor(), provenance={"seeds": cfg.seeds, "h": mask.h})
    out.mkdir(parents=True, exist_ok=True)
    for tr in traces:
        label = tr.init.replace(":", "_")
        tr.write_csv(out / f"trace_{label}.csv")
        snap = out / f"field_{label}.tfm"
        snapshot.save(snap, tr.final, p.epsilon, p.Q, {"init": tr.init, "reason": tr.reason})
        recs = ex.check_bv_bounds(tr.final, p)
        for rec in recs:
            rec.claim_id = f"{rec.claim_id}[{tr.init}]"
            if rec.status == ex.FAIL:
                rec.snapshot = str(snap)
        res.records += recs
        last = tr.rows[-1]
        res.table.append({"start": tr.init, "reason": tr.reason, "iterations": last["iteration"], "F_eps": last["F_eps"],
                          "L_eps": last["L_eps"], "N": last["N"], "bv_norm": last["bv_norm"], "grad_norm": last["grad_norm"]})
    _finish(out, [res])


@main.command("onset-scan")
@click.pass_context
def onset_scan_cmd(ctx):
    """Best-of-starts energy for diameters relative to the onset threshold."""
    cfg = ctx.obj["cfg"]
    res = ex.onset_scan(cfg.onset.get("family", "disk"), cfg.epsilons, cfg.onset.get("diam_factors", [0.5]),
                        cfg.minimize_config(), cfg.Q, cfg.starts, cfg.seeds, cfg.cells, cfg.h_over_eps, ctx.obj["threads"],
                        cfg.eps0)
    _finish(ctx.obj["out"], [res])


@main.command()
@click.option("--kind", type=click.Choice(["kernels", "interpolation", "bv", "stray", "bubble", "all"]), default="all",
              show_default=True)
@click.pass_context
def check(ctx, kind):
    """Run inequality checkers."""
    cfg = ctx.obj["cfg"]
    opts = cfg.check
    seed = cfg.seeds[0]
    results = []
    if kind in ("kernels", "all"):
        results.append(ex.kernel_checks())
    if kind in ("interpolation", "all"):
        mask = cfg.mask() if cfg.h is not None else DomainMask.disk(1.0, 2.0 / 62)
        results.append(ex.interpolation_sweep(mask, int(opts.get("samples", 200)), seed=seed))
        results.append(ex.interpolation_sharpness())
    if kind in ("stray", "all"):
        mask = DomainMask.disk(1.0, 2.0 / 30)
        m = fe.Magnetization2D.random_unit(mask, np.random.default_rng(seed))
        results.append(ex.stray_check(mask, m, float(opts.get("t", 0.05))))
    if kind in ("bubble", "all"):
        results.append(ex.bubble_certificate())
    if kind == "bv":
        p = derive(cfg.epsilon, cfg.Q)
        mask = cfg.mask()
        traces = ex.multistart(mask, p, cfg.minimize_config(), cfg.starts, cfg.seeds, ctx.obj["threads"])
        res = ex.ExperimentResult("bv", params=p, domain=mask.descriptor())
        for tr in traces:
            res.records += ex.check_bv_bounds(tr.final, p)
            res.table.append({"start": tr.init, "F_eps": tr.final_energy, "bv_norm": tr.rows[-1]["bv_norm"]})
        results.append(res)
    _finish(ctx.obj["out"], results)


@main.command()
@click.option("--kind", type=click.Choice(["scaling", "compactness"]), default="scaling", show_default=True)
@click.pass_context
def sweep(ctx, kind):
    """Sweep eps on the configured domain."""
    cfg, threads = ctx.obj["cfg"], ctx.obj["threads"]
    mask = cfg.mask(min(cfg.epsilons))
    if kind == "scaling":
        res = ex.scaling_sweep(mask, cfg.epsilons, cfg.minimize_config(), cfg.Q, cfg.starts, cfg.seeds, threads)
    else:
        solver = cfg.minimize_config(cfg.seeds[0])
        solver = type(solver)(**{**solver.__dict__, "init": "random_unit"})
        res = ex.compactness_diagnostic(mask, sorted(cfg.epsilons, reverse=True), solver, cfg.Q, threads)
    _finish(ctx.obj["out"], [res])


if __name__ == "__main__":
    main()
