"""Command-line front door.

Subcommands: gen (random SPD data), fmean (Fréchet mean of a manifest),
anova (Fréchet or Riemannian tests), harmonize (combat/rigid), bench
(Fréchet-mean timing grid). Every command takes --seed and is reproducible
for any --threads value.

Exit codes: 0 success, 2 validation error, 3 numerical or domain error,
4 completed but did not converge.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import time

import numpy as np

from . import bench as bench_mod
from . import io as io_mod
from . import parallel
from .cluster import calinski_harabasz, davies_bouldin, silhouette_score
from .errors import (
    DegenerateGroupError,
    DomainError,
    NumericalError,
    ShapeError,
    SingularScatterError,
    StateError,
    UnsupportedMetric,
    ValidationError,
)
from .harmonize import combat_harmonization, rigid_harmonization
from .metrics import get_metric, metric_names, tri_dim
from .sample import ConnectomeSample, FrechetConfig, rspdnorm
from .stats import frechet_anova, riem_anova
from .supersample import SuperSample

EXIT_OK = 0
EXIT_VALIDATION = 2
EXIT_NUMERICAL = 3
EXIT_NOT_CONVERGED = 4


def _add_threads(p):
    p.add_argument(
        "--threads",
        type=int,
        default=None,
        help="worker pool size (default: SPDSTATS_THREADS or 1)",
    )


def _add_metric(p, default="airm"):
    p.add_argument(
        "--metric",
        default=default,
        help=f"one of: {', '.join(metric_names())} (default {default})",
    )


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="spdstats",
        description="Riemannian statistics for SPD matrix samples",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    g = sub.add_parser("gen", help="generate a random SPD-normal sample")
    g.add_argument("--n", type=int, required=True)
    g.add_argument("--p", type=int, required=True)
    _add_metric(g)
    g.add_argument("--ref", default="identity", help="reference: CSV path or 'identity'")
    g.add_argument(
        "--dispersion", default="identity", help="dispersion: CSV path or 'identity'"
    )
    g.add_argument("--seed", type=int, default=0)
    g.add_argument(
        "--group", default="g0",
        help="manifest group labels: one label, or label:count runs (a:16,b:16)",
    )
    g.add_argument(
        "--site", default=None,
        help="manifest site labels: one label, or label:count runs (s1:16,s2:16)",
    )
    g.add_argument("--out-dir", required=True)

    f = sub.add_parser("fmean", help="Fréchet mean of a manifest")
    f.add_argument("--manifest", required=True)
    _add_metric(f)
    f.add_argument("--lr", type=float, default=0.2)
    f.add_argument("--tol", type=float, default=0.05)
    f.add_argument("--max-iter", type=int, default=20)
    f.add_argument("--batch-size", default="n", help="integer or 'n' (full batch)")
    _add_threads(f)
    f.add_argument("--seed", type=int, default=0)
    f.add_argument("--out", default="mean.csv", help="output matrix CSV")
    f.add_argument("--report", default=None, help="write the JSON report here")

    a = sub.add_parser("anova", help="multi-group tests on manifest groups")
    a.add_argument("--manifest", required=True)
    _add_metric(a)
    a.add_argument("--test", choices=["frechet", "riem"], default="frechet")
    a.add_argument("--stat", choices=["log-wilks", "pillai"], default="log-wilks")
    a.add_argument("--iterations", type=int, default=100)
    a.add_argument("--pca-dim", type=int, default=None)
    _add_threads(a)
    a.add_argument("--seed", type=int, default=0)
    a.add_argument("--report", default=None)

    h = sub.add_parser("harmonize", help="multi-site harmonization")
    h.add_argument("--manifest", required=True)
    _add_metric(h)
    h.add_argument("--method", choices=["combat", "rigid"], default="combat")
    _add_threads(h)
    h.add_argument("--seed", type=int, default=0)
    h.add_argument("--out-dir", required=True)
    h.add_argument("--report", default=None)

    b = sub.add_parser("bench", help="Fréchet mean timing grid")
    b.add_argument("--n-list", default="100,200,300,400")
    b.add_argument("--p-list", default="20,30,40")
    b.add_argument("--threads-list", default="1")
    b.add_argument("--batch-list", default="n", help="comma list of ints or 'n'")
    b.add_argument("--repeats", type=int, default=1)
    _add_metric(b)
    b.add_argument("--seed", type=int, default=0)
    b.add_argument("--out", default="bench.csv")

    return parser


def _resolve_threads(args) -> int:
    threads = args.threads if getattr(args, "threads", None) is not None else None
    if threads is None:
        parallel.set_num_threads(None)
        return parallel.get_num_threads()
    parallel.set_num_threads(threads)
    return threads


def _report(payload, path) -> None:
    text = json.dumps(payload, indent=2)
    if path:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(text + "\n")
    print(text)


def _load_square(spec, size, what):
    if spec == "identity":
        return np.eye(size)
    a = io_mod.read_matrix(spec)
    if a.shape != (size, size):
        raise ValidationError(f"{what} must be {size} x {size}, got {a.shape}")
    return a


def _expand_labels(raw, n, what):
    """One label for all n entries, or label:count runs covering exactly n."""
    if raw is None:
        return [None] * n
    if ":" not in raw:
        return [raw] * n
    labels = []
    for token in raw.split(","):
        name, sep, count = token.partition(":")
        if not sep or not name:
            raise ValidationError(f"{what}: every entry needs label:count, got {token!r}")
        try:
            k = int(count)
        except ValueError:
            raise ValidationError(f"{what}: bad count in {token!r}") from None
        if k <= 0:
            raise ValidationError(f"{what}: count must be positive in {token!r}")
        labels.extend([name] * k)
    if len(labels) != n:
        raise ValidationError(f"{what}: counts sum to {len(labels)}, need {n}")
    return labels


def _cmd_gen(args) -> int:
    metric = get_metric(args.metric)
    ref = _load_square(args.ref, args.p, "--ref")
    disp = _load_square(args.dispersion, tri_dim(args.p), "--dispersion")
    sample = rspdnorm(args.n, ref, disp, metric, seed=args.seed)
    sample.compute_unvec()
    sample.compute_conns()
    os.makedirs(args.out_dir, exist_ok=True)
    groups = _expand_labels(args.group, sample.n, "--group")
    sites = _expand_labels(args.site, sample.n, "--site")
    entries = []
    for i in range(sample.n):
        name = f"conn_{i:04d}.csv"
        io_mod.write_matrix(os.path.join(args.out_dir, name), sample.conns[i])
        entries.append(io_mod.ManifestEntry(path=name, group=groups[i], site=sites[i]))
    manifest = io_mod.write_manifest(args.out_dir, entries)
    _report(
        {
            "command": "gen",
            "config": {
                "n": args.n,
                "p": args.p,
                "metric": metric.name,
                "seed": args.seed,
                "group": args.group,
                "site": args.site,
            },
            "result": {"manifest": manifest, "files": sample.n},
        },
        None,
    )
    return EXIT_OK


def _batch_size(raw, n):
    if str(raw).lower() == "n":
        return None
    try:
        return int(raw)
    except ValueError:
        raise ValidationError(f"--batch-size must be an integer or 'n', got {raw!r}")


def _cmd_fmean(args) -> int:
    threads = _resolve_threads(args)
    metric = get_metric(args.metric)
    stack, _, _, _ = io_mod.load_manifest(args.manifest)
    sample = ConnectomeSample.from_connectomes(stack, metric)
    cfg = FrechetConfig(
        learning_rate=args.lr,
        tolerance=args.tol,
        max_iterations=args.max_iter,
        batch_size=_batch_size(args.batch_size, sample.n),
        seed=args.seed,
    )
    start = time.perf_counter()
    mean = sample.compute_frechet_mean(cfg)
    wall = time.perf_counter() - start
    io_mod.write_matrix(args.out, mean)
    _report(
        {
            "command": "fmean",
            "config": {
                "metric": metric.name,
                "learning_rate": cfg.learning_rate,
                "tolerance": cfg.tolerance,
                "max_iterations": cfg.max_iterations,
                "batch_size": sample.n if cfg.batch_size is None else cfg.batch_size,
                "seed": cfg.seed,
                "threads": threads,
            },
            "result": {
                "mean_path": args.out,
                "epochs": sample.frechet_epochs,
                "final_delta": sample.frechet_delta,
                "converged": sample.frechet_converged,
                "wall_seconds": wall,
            },
        },
        args.report,
    )
    return EXIT_OK if sample.frechet_converged else EXIT_NOT_CONVERGED


def _supersample_by(stack, labels, metric) -> SuperSample:
    order = []
    for lab in labels:
        if lab not in order:
            order.append(lab)
    groups = [
        ConnectomeSample.from_connectomes(
            stack[[i for i, lab in enumerate(labels) if lab == want]], metric
        )
        for want in order
    ]
    return SuperSample(groups, metric), order


def _cmd_anova(args) -> int:
    threads = _resolve_threads(args)
    metric = get_metric(args.metric)
    stack, groups, _, _ = io_mod.load_manifest(args.manifest)
    if len(set(groups)) < 2:
        raise ValidationError("anova needs at least 2 distinct group labels")
    ss, order = _supersample_by(stack, groups, metric)
    config = {
        "metric": metric.name,
        "test": args.test,
        "iterations": args.iterations,
        "seed": args.seed,
        "threads": threads,
        "groups": order,
    }
    if args.test == "frechet":
        res = frechet_anova(ss, n_permutations=args.iterations, seed=args.seed)
        result = {
            "group_variations": res.group_variations,
            "pooled_variation": res.pooled_variation,
            "f_n": res.f_n,
            "u_n": res.u_n,
            "t_n": res.t_n,
            "p_permutation": res.p_permutation,
            "p_asymptotic": res.p_asymptotic,
            "n_permutations": res.n_permutations,
        }
    else:
        config["stat"] = args.stat
        res = riem_anova(
            ss,
            stat=args.stat,
            n_iterations=args.iterations,
            seed=args.seed,
            pca_dim=args.pca_dim,
        )
        result = {
            "stat": res.stat,
            "statistic": res.statistic,
            "p_value": res.p_value,
            "n_iterations": res.n_iterations,
        }
    _report({"command": "anova", "config": config, "result": result}, args.report)
    return EXIT_OK


def _site_quality(ss, site_labels):
    vecs = ss.pooled_vectors()
    labels = np.asarray(site_labels)
    return {
        "silhouette": silhouette_score(vecs, labels),
        "calinski_harabasz": calinski_harabasz(vecs, labels),
        "davies_bouldin": davies_bouldin(vecs, labels),
    }


def _cmd_harmonize(args) -> int:
    threads = _resolve_threads(args)
    metric = get_metric(args.metric)
    stack, _, sites, _ = io_mod.load_manifest(args.manifest)
    if any(s is None for s in sites):
        raise ValidationError("harmonize needs a site label on every manifest entry")
    if len(set(sites)) < 2:
        raise ValidationError("harmonize needs at least 2 distinct sites")
    ss, order = _supersample_by(stack, sites, metric)
    ss.compute_grand_mean()
    # pooled_vectors follows group order, not manifest order
    site_vector = []
    for want in order:
        site_vector.extend([want] * sites.count(want))
    before = _site_quality(ss, site_vector)
    if args.method == "combat":
        out_ss = combat_harmonization(ss)
    else:
        out_ss = rigid_harmonization(ss)
    out_ss.compute_grand_mean()
    after = _site_quality(out_ss, site_vector)
    os.makedirs(args.out_dir, exist_ok=True)
    entries = []
    i = 0
    for site, group in zip(order, out_ss.groups):
        for row in group.conns:
            name = f"harmonized_{i:04d}.csv"
            io_mod.write_matrix(os.path.join(args.out_dir, name), row)
            entries.append(io_mod.ManifestEntry(path=name, group=site, site=site))
            i += 1
    manifest = io_mod.write_manifest(args.out_dir, entries)
    _report(
        {
            "command": "harmonize",
            "config": {
                "metric": metric.name,
                "method": args.method,
                "seed": args.seed,
                "threads": threads,
                "sites": order,
            },
            "result": {
                "manifest": manifest,
                "quality_before": before,
                "quality_after": after,
            },
        },
        args.report,
    )
    return EXIT_OK


def _int_list(raw, what):
    try:
        return [int(tok) for tok in str(raw).split(",") if tok != ""]
    except ValueError:
        raise ValidationError(f"{what} must be a comma list of integers, got {raw!r}")


def _cmd_bench(args) -> int:
    batches = [
        None if tok.lower() == "n" else int(tok)
        for tok in str(args.batch_list).split(",")
        if tok != ""
    ]
    rows = bench_mod.run_bench(
        _int_list(args.n_list, "--n-list"),
        _int_list(args.p_list, "--p-list"),
        _int_list(args.threads_list, "--threads-list"),
        batches,
        repeats=args.repeats,
        metric=args.metric,
        seed=args.seed,
    )
    bench_mod.write_csv(args.out, rows)
    print(f"wrote {len(rows)} rows to {args.out}")
    if args.repeats >= 3:
        for cell in bench_mod.summarize(rows):
            print(
                "n={n} p={p} threads={threads} batch={batch_size}: "
                "min={min:.4f}s median={median:.4f}s max={max:.4f}s".format(**cell)
            )
    return EXIT_OK


_DISPATCH = {
    "gen": _cmd_gen,
    "fmean": _cmd_fmean,
    "anova": _cmd_anova,
    "harmonize": _cmd_harmonize,
    "bench": _cmd_bench,
}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return _DISPATCH[args.command](args)
    except (ValidationError, ShapeError, StateError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except (
        DomainError,
        NumericalError,
        DegenerateGroupError,
        SingularScatterError,
        UnsupportedMetric,
    ) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
