"""Command-line surface binding generation, collection, training, sampling,
and the experiment harnesses.

Every command that produces a run directory drops a ``manifest.json`` with
the resolved arguments.  Report-producing commands write delimited CSV plus
a rendered PNG figure next to it.  Exit codes: 0 success, 2 bad config,
3 parse error, 4 infeasible, 5 missing file, 1 internal error.
"""

from __future__ import annotations

import argparse
import json
import sys
import time
from pathlib import Path

from . import __version__
from .cisp import CISPConfig, load_cisp, save_cisp, train_cisp
from .dataset import load_dataset
from .diffusion import DiffusionConfig, load_diffusion, save_diffusion, train_joint
from .experiments import (
    export_histogram,
    run_ablation,
    run_partial_complete,
    write_ablation_csv,
    write_curve_csv,
    write_histogram_csv,
)
from .featurize import build_bipartite, dump_graph
from .generators import FAMILIES, GeneratorConfig, generate
from .guidance import GuidanceConfig, sample_many
from .instance import (
    ParseError,
    read_instance,
    read_pool,
    write_instance,
    write_pool,
)
from .metrics import evaluate_pool
from .mps import read_mps
from .oracle import CompletionInfeasible, solve_exact
from .plots import render_ablation_bars, render_histogram, render_loss_curve

ERROR_EXIT_CODES = {
    "config": 2,
    "parse": 3,
    "infeasible": 4,
    "io": 5,
    "internal": 1,
}


class CLIError(Exception):
    def __init__(self, category: str, message: str):
        super().__init__(message)
        self.category = category


def _load_instance(path: str, fmt: str = "native"):
    if fmt == "mps":
        return read_mps(path)
    return read_instance(path)


def _write_manifest(out_dir: Path, args: argparse.Namespace, extra: dict | None = None) -> None:
    out_dir.mkdir(parents=True, exist_ok=True)
    payload = {k: v for k, v in vars(args).items() if k != "func"}
    payload["version"] = __version__
    if extra:
        payload.update(extra)
    (out_dir / "manifest.json").write_text(json.dumps(payload, indent=2, default=str))


def _load_models(ckpt_dir: str):
    ckpt = Path(ckpt_dir)
    cisp_path = ckpt / "cisp.pt"
    diff_path = ckpt / "diffusion.pt"
    for p in (cisp_path, diff_path):
        if not p.exists():
            raise CLIError("io", f"missing checkpoint {p}")
    return load_cisp(cisp_path), load_diffusion(diff_path)


# ---------------------------------------------------------------------------
# subcommands


def cmd_gen(args) -> int:
    out = Path(args.out)
    cfg_kwargs = dict(
        family=args.family, rows=args.rows, cols=args.cols, density=args.density,
        facilities=args.facilities, customers=args.customers,
        items=args.items, bids=args.bids,
        nodes=args.nodes, edges=args.edges, affinity=args.affinity,
    )
    if args.count == 1 and not args.split:
        inst = generate(GeneratorConfig(seed=args.seed, **cfg_kwargs))
        if out.suffix:
            out.parent.mkdir(parents=True, exist_ok=True)
            target = out
        else:
            out.mkdir(parents=True, exist_ok=True)
            target = out / f"{inst.name}.ip"
        write_instance(inst, target)
        print(f"wrote {target}")
        return 0
    splits = {"": args.count}
    if args.split:
        train = max(1, round(args.count * 0.8))
        valid = max(1, round(args.count * 0.1))
        test = max(1, args.count - train - valid)
        splits = {"train": train, "valid": valid, "test": test}
    seed = args.seed
    for split, count in splits.items():
        split_dir = out / split if split else out
        split_dir.mkdir(parents=True, exist_ok=True)
        for i in range(count):
            inst = generate(GeneratorConfig(seed=seed, **cfg_kwargs))
            write_instance(inst, split_dir / f"inst_{i:04d}.ip")
            seed += 1
    _write_manifest(out, args)
    print(f"wrote {args.count} instances under {out}")
    return 0


def cmd_collect(args) -> int:
    data = Path(args.data)
    paths = sorted(data.glob("*.ip"))
    if not paths:
        raise CLIError("io", f"no *.ip files under {data}")
    for path in paths:
        inst = read_instance(path)
        pool = solve_exact(inst, pool_cap=args.pool, node_limit=args.node_limit)
        write_pool(pool.solutions, path.with_suffix(".pool"))
        print(f"{path.name}: {len(pool.solutions)} solutions, status={pool.status}")
    return 0


def cmd_featurize(args) -> int:
    inst = _load_instance(args.inst, args.format)
    dump_graph(build_bipartite(inst), args.out)
    print(f"wrote {args.out}")
    return 0


def cmd_train_cisp(args) -> int:
    records = load_dataset(args.data)
    config = CISPConfig(
        dim=args.dim, epochs=args.epochs, batch_size=args.batch_size,
        lr=args.lr, seed=args.seed,
    )
    start = time.time()
    model, curve = train_cisp(records, config)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    save_cisp(out / "cisp.pt", model, extra={"loss_curve": curve})
    write_curve_csv(curve, out / "cisp_loss.csv")
    render_loss_curve(curve, out / "cisp_loss.png", title="contrastive pretraining loss")
    _write_manifest(out, args, {"runtime_s": round(time.time() - start, 2)})
    print(f"trained contrastive encoders: final loss {curve[-1]:.4f} -> {out}")
    return 0


def cmd_train_diffusion(args) -> int:
    records = load_dataset(args.data)
    lam = args.lam if args.lam == "auto" else float(args.lam)
    freeze = not args.no_freeze_encoders
    if args.cisp:
        cisp_model = load_cisp(Path(args.cisp) / "cisp.pt" if Path(args.cisp).is_dir() else args.cisp)
    else:
        if freeze:
            raise CLIError("config", "--cisp checkpoint required unless --no-freeze-encoders")
        from .cisp import CISPModel
        cisp_model = CISPModel(CISPConfig(dim=args.dim, seed=args.seed))
    config = DiffusionConfig(
        dim=cisp_model.config.dim, T=args.timesteps, epochs=args.epochs,
        batch_size=args.batch_size, lr=args.lr, lam=lam,
        freeze_encoders=freeze, seed=args.seed,
    )
    start = time.time()
    model, curve = train_joint(records, cisp_model, config)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    save_diffusion(out / "diffusion.pt", model, extra={"loss_curve": curve})
    save_cisp(out / "cisp.pt", cisp_model)  # co-locate for sampling
    write_curve_csv(curve, out / "diffusion_loss.csv")
    render_loss_curve(curve, out / "diffusion_loss.png", title="diffusion + decoder loss")
    _write_manifest(out, args, {"runtime_s": round(time.time() - start, 2)})
    print(f"trained diffusion model: final total loss {curve[-1]['total']:.4f} -> {out}")
    return 0


def _guidance_from_args(args) -> GuidanceConfig:
    return GuidanceConfig(
        variant=args.variant, steps=args.steps, s=args.s, gamma=args.gamma,
        eta=args.eta, seed=args.seed,
    )


def cmd_sample(args) -> int:
    inst = _load_instance(args.inst, args.format)
    cisp_model, model = _load_models(args.ckpt)
    cfg = _guidance_from_args(args)
    samples = sample_many(inst, cisp_model, model, cfg, args.count)
    write_pool([(sol, rep.objective) for sol, rep in samples], args.out)
    feasible = sum(rep.feasible for _, rep in samples)
    print(f"wrote {len(samples)} samples ({feasible} feasible) to {args.out}")
    return 0


def cmd_eval(args) -> int:
    inst = _load_instance(args.inst, args.format)
    pool = read_pool(args.pool)
    oracle_opt = None
    if args.oracle:
        best = solve_exact(inst, pool_cap=1, node_limit=args.node_limit).best
        oracle_opt = best[1] if best else None
    report = evaluate_pool(inst, [sol for sol, _ in pool], oracle_opt)
    print(json.dumps({
        "sample_count": report.sample_count,
        "feasible_ratio": report.feasible_ratio,
        "mean_objective": report.mean_objective,
        "mean_gap": report.mean_gap,
        "oracle_objective": report.oracle_objective,
    }, indent=2))
    return 0


def cmd_ablate(args) -> int:
    records = load_dataset(args.data)
    cisp_model, model = _load_models(args.ckpt)
    no_cisp = None
    if args.no_cisp_ckpt:
        no_cisp = _load_models(args.no_cisp_ckpt)
    cfg = _guidance_from_args(args)
    start = time.time()
    rows = run_ablation(
        [r.instance for r in records], cisp_model, model, cfg,
        count=args.count, no_cisp=no_cisp, node_limit=args.node_limit,
    )
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    write_ablation_csv(rows, out / "ablation.csv")
    render_ablation_bars([r for r in rows if not r.get("absent")], out / "ablation.png")
    _write_manifest(out, args, {"runtime_s": round(time.time() - start, 2)})
    for row in rows:
        if row.get("absent"):
            print(f"{row['variant']}: absent (no checkpoint)")
        else:
            print(f"{row['variant']}: feasible_ratio={row['feasible_ratio']:.3f} "
                  f"mean_gap={row['mean_gap']}")
    return 0


def cmd_partial(args) -> int:
    records = load_dataset(args.data)
    cisp_model, model = _load_models(args.ckpt)
    cfg = _guidance_from_args(args)
    start = time.time()
    result = run_partial_complete(
        [r.instance for r in records], cisp_model, model,
        args.proportion, cfg, count=args.count, node_limit=args.node_limit,
    )
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    write_ablation_csv([result.direct, result.completed], out / "partial.csv")
    _write_manifest(out, args, {
        "runtime_s": round(time.time() - start, 2),
        "infeasible_completions": result.infeasible_completions,
    })
    print(f"direct:    feasible_ratio={result.direct['feasible_ratio']:.3f} "
          f"mean_gap={result.direct['mean_gap']}")
    print(f"completed: feasible_ratio={result.completed['feasible_ratio']:.3f} "
          f"mean_gap={result.completed['mean_gap']}")
    return 0


def cmd_hist(args) -> int:
    inst = _load_instance(args.inst, args.format)
    cisp_model, model = _load_models(args.ckpt)
    cfg = _guidance_from_args(args)
    objectives, oracle_opt = export_histogram(
        inst, cisp_model, model, cfg, count=args.count, node_limit=args.node_limit
    )
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    write_histogram_csv(objectives, oracle_opt, out / "histogram.csv")
    render_histogram(objectives, out / "histogram.png", oracle_objective=oracle_opt)
    _write_manifest(out, args)
    print(f"{len(objectives)} feasible of {args.count} samples; data under {out}")
    return 0


# ---------------------------------------------------------------------------
# parser


def _add_guidance_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--variant", choices=["ddim", "ddpm"], default="ddim")
    p.add_argument("--steps", type=int, default=100)
    p.add_argument("--s", type=float, default=0.0)
    p.add_argument("--gamma", type=float, default=0.0)
    p.add_argument("--eta", type=float, default=0.0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--count", type=int, default=30)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ipdiff",
        description="Train and sample a guided diffusion model over 0-1 program solutions.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen", help="generate instance files")
    p.add_argument("--family", choices=FAMILIES, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.add_argument("--count", type=int, default=1)
    p.add_argument("--split", action="store_true", help="write train/valid/test splits (8/1/1)")
    p.add_argument("--rows", type=int, default=15)
    p.add_argument("--cols", type=int, default=25)
    p.add_argument("--density", type=float, default=0.15)
    p.add_argument("--facilities", type=int, default=3)
    p.add_argument("--customers", type=int, default=6)
    p.add_argument("--items", type=int, default=10)
    p.add_argument("--bids", type=int, default=15)
    p.add_argument("--nodes", type=int, default=20)
    p.add_argument("--edges", type=int, default=None)
    p.add_argument("--affinity", type=int, default=4)
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("collect", help="solve instances exactly and write solution pools")
    p.add_argument("--data", required=True)
    p.add_argument("--pool", type=int, default=50)
    p.add_argument("--node-limit", type=int, default=None)
    p.set_defaults(func=cmd_collect)

    p = sub.add_parser("featurize", help="dump the bipartite feature graph as JSON")
    p.add_argument("--inst", required=True)
    p.add_argument("--format", choices=["native", "mps"], default="native")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_featurize)

    p = sub.add_parser("train-cisp", help="contrastive encoder pretraining")
    p.add_argument("--data", required=True)
    p.add_argument("--epochs", type=int, default=100)
    p.add_argument("--batch-size", type=int, default=64)
    p.add_argument("--dim", type=int, default=32)
    p.add_argument("--lr", type=float, default=1e-3)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_train_cisp)

    p = sub.add_parser("train-diffusion", help="joint denoiser + decoder training")
    p.add_argument("--data", required=True)
    p.add_argument("--cisp", default=None, help="CISP checkpoint file or directory")
    p.add_argument("--epochs", type=int, default=100)
    p.add_argument("--batch-size", type=int, default=32)
    p.add_argument("--timesteps", type=int, default=200)
    p.add_argument("--lr", type=float, default=1e-3)
    p.add_argument("--lam", "--lambda", dest="lam", default="auto",
                   help="'auto' (= variable count), 0, or any real")
    p.add_argument("--dim", type=int, default=32, help="used only with fresh encoders")
    p.add_argument("--no-freeze-encoders", action="store_true",
                   help="train encoders jointly (no-pretraining ablation)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_train_diffusion)

    p = sub.add_parser("sample", help="sample solutions for one instance")
    p.add_argument("--inst", required=True)
    p.add_argument("--format", choices=["native", "mps"], default="native")
    p.add_argument("--ckpt", required=True)
    _add_guidance_args(p)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_sample)

    p = sub.add_parser("eval", help="evaluate a solution pool against an instance")
    p.add_argument("--inst", required=True)
    p.add_argument("--format", choices=["native", "mps"], default="native")
    p.add_argument("--pool", required=True)
    p.add_argument("--oracle", action="store_true", help="solve exactly for the gap reference")
    p.add_argument("--node-limit", type=int, default=None)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("ablate", help="guidance-variant ablation over a dataset")
    p.add_argument("--data", required=True)
    p.add_argument("--ckpt", required=True)
    p.add_argument("--no-cisp-ckpt", default=None)
    p.add_argument("--node-limit", type=int, default=None)
    _add_guidance_args(p)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_ablate)

    p = sub.add_parser("partial", help="partial-fix + exact completion experiment")
    p.add_argument("--data", required=True)
    p.add_argument("--ckpt", required=True)
    p.add_argument("--proportion", type=float, default=0.2)
    p.add_argument("--node-limit", type=int, default=None)
    _add_guidance_args(p)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_partial)

    p = sub.add_parser("hist", help="solution-distribution export for one instance")
    p.add_argument("--inst", required=True)
    p.add_argument("--format", choices=["native", "mps"], default="native")
    p.add_argument("--ckpt", required=True)
    p.add_argument("--node-limit", type=int, default=None)
    _add_guidance_args(p)
    p.set_defaults(count=1000)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_hist)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except CLIError as e:
        print(f"error:{e.category}: {e}", file=sys.stderr)
        return ERROR_EXIT_CODES[e.category]
    except ParseError as e:
        print(f"error:parse: {e}", file=sys.stderr)
        return ERROR_EXIT_CODES["parse"]
    except CompletionInfeasible as e:
        print(f"error:infeasible: {e}", file=sys.stderr)
        return ERROR_EXIT_CODES["infeasible"]
    except FileNotFoundError as e:
        print(f"error:io: {e}", file=sys.stderr)
        return ERROR_EXIT_CODES["io"]
    except ValueError as e:
        print(f"error:config: {e}", file=sys.stderr)
        return ERROR_EXIT_CODES["config"]


if __name__ == "__main__":
    sys.exit(main())
