"""Command-line interface.

Commands: simulate, gibbs, psm, minvi, summarize, elbow, diagnose.
Every randomized command takes --seed (default 0) and records it, with the
fully resolved configuration and input digests, in a manifest.json inside
the output directory.  Exit codes: 0 ok, 1 usage error, 2 data error,
3 internal invariant violation.
"""

from __future__ import annotations

import argparse
import sys
import time
import warnings
from pathlib import Path

import numpy as np

from . import __version__, diagnostics, io, simulate, summarize
from .io import DataError, UsageError
from .samples import SampleSet, expected_vi, psm
from .search import SearchConfig, greedy_minvi
from .summarize import InvariantError, SummaryConfig

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2
EXIT_INVARIANT = 3

PSM_ITEM_LIMIT = 5000


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _out_dir(args) -> Path | None:
    if args.out is None:
        return None
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _emit_rows(rows, fmt):
    np.savetxt(sys.stdout, np.atleast_2d(rows), fmt=fmt, delimiter=",")


def _parse_alpha(text: str):
    if text in ("1", "empirical"):
        return text
    try:
        value = float(text)
    except ValueError:
        raise UsageError(f"--alpha must be 1, empirical, or a number, got {text!r}")
    if value <= 0:
        raise UsageError("--alpha must be positive")
    return value


def _search_config(args) -> SearchConfig:
    return SearchConfig(k_max=args.k_max, runs=args.runs, seed=args.seed)


def _summary_config(args, n_particles: int) -> SummaryConfig:
    init = args.init
    fixed = None
    if init.startswith("fixed="):
        rows = io._loadtxt(init[len("fixed="):], np.int64)
        fixed_set = SampleSet.from_labels(rows)
        fixed = tuple(fixed_set.draw(i) for i in range(fixed_set.T))
        init = "fixed"
    return SummaryConfig(
        n_particles=n_particles,
        init=init,
        fixed=fixed,
        epsilon=args.epsilon,
        max_iter=args.max_iter,
        runs=args.runs,
        minibatch=args.batch,
        search=SearchConfig(k_max=args.k_max, runs=args.search_runs),
        seed=args.seed,
        init_thin=args.thin,
        threads=args.threads,
    )


def _config_dict(cfg: SummaryConfig) -> dict:
    d = {
        "n_particles": cfg.n_particles,
        "init": cfg.init,
        "epsilon": cfg.epsilon,
        "max_iter": cfg.max_iter,
        "runs": cfg.runs,
        "minibatch": cfg.minibatch,
        "init_thin": cfg.init_thin,
        "outlier_check": cfg.outlier_check,
        "threads": cfg.threads,
        "k_max": cfg.search.k_max,
        "search_runs": cfg.search.runs,
    }
    if cfg.fixed:
        d["fixed_particles"] = [p.labels.tolist() for p in cfg.fixed]
    return d


# --------------------------------------------------------------------------
# commands
# --------------------------------------------------------------------------


def cmd_simulate(args) -> int:
    started = time.monotonic()
    maker = simulate.PRESETS[args.preset]
    kwargs = {"seed": args.seed}
    if args.n is not None:
        kwargs["n"] = args.n
    if args.preset == "quadrants" and args.m is not None:
        kwargs["m"] = args.m
    if args.preset == "truncated" and args.sd is not None:
        kwargs["sd"] = args.sd
    if args.preset == "skewt":
        if args.df is not None:
            kwargs["df"] = args.df
        if args.skew is not None:
            kwargs["skew"] = args.skew
    spec = maker(**kwargs)
    data, labels = simulate.gen_mixture(spec)
    out = _out_dir(args)
    if out is None:
        _emit_rows(data, io.FLOAT_FMT)
        return EXIT_OK
    io.save_floats(out / "data.csv", data)
    io.save_labels(out / "true_labels.csv", labels.reshape(-1, 1))
    io.write_manifest(out, "simulate",
                      {"preset": args.preset, **{k: v for k, v in kwargs.items()}},
                      args.seed, {}, ["data.csv", "true_labels.csv"], started)
    return EXIT_OK


def cmd_gibbs(args) -> int:
    started = time.monotonic()
    data = io.load_data_matrix(args.data)
    alpha = _parse_alpha(args.alpha)
    hyper = simulate.default_hyper(data, alpha=alpha)
    burnin = args.burnin if args.burnin is not None else args.iters // 2
    draws = simulate.dpm_gibbs(data, hyper, iters=args.iters, burnin=burnin,
                               thin=args.thin, seed=args.seed)
    out = _out_dir(args)
    if out is None:
        _emit_rows(draws.matrix, "%d")
        return EXIT_OK
    io.save_labels(out / "draws.csv", draws.matrix)
    inputs = {} if str(args.data) == "-" else {str(args.data): io.file_digest(args.data)}
    io.write_manifest(out, "gibbs",
                      {"alpha": alpha, "iters": args.iters, "burnin": burnin,
                       "thin": args.thin, "hyper": {
                           "mu0": hyper.mu0.tolist(), "k0": hyper.k0,
                           "a0": hyper.a0, "b0": hyper.b0.tolist(),
                           "alpha": hyper.alpha}},
                      args.seed, inputs, ["draws.csv"], started)
    return EXIT_OK


def cmd_psm(args) -> int:
    started = time.monotonic()
    s = io.load_draws(args.draws)
    if s.n > PSM_ITEM_LIMIT and not args.force:
        raise DataError(
            f"item-level PSM for n={s.n} exceeds the {PSM_ITEM_LIMIT}-item guard "
            f"(quadratic memory); use the meet-collapsed PSM from `diagnose`, "
            f"or pass --force"
        )
    matrix = psm(s).values
    out = _out_dir(args)
    if out is None:
        _emit_rows(matrix, io.FLOAT_FMT)
        return EXIT_OK
    io.save_floats(out / "psm.csv", matrix)
    io.write_manifest(out, "psm",
                      {"force": bool(args.force), "input_canonicalized": True},
                      None,
                      {str(args.draws): io.file_digest(args.draws)},
                      ["psm.csv"], started)
    return EXIT_OK


def cmd_minvi(args) -> int:
    started = time.monotonic()
    s = io.load_draws(args.draws)
    cfg = _search_config(args)
    best = greedy_minvi(s, cfg)
    evi = expected_vi(best, s)
    out = _out_dir(args)
    if out is None:
        _emit_rows(best.labels, "%d")
        return EXIT_OK
    io.save_labels(out / "partition.csv", best.labels)
    io.write_json(out / "summary.json", {
        "schema_version": io.SCHEMA_VERSION,
        "n": s.n, "T": s.T,
        "expected_vi": evi,
        "cluster_count": best.k,
        "seed": args.seed,
    })
    io.write_manifest(out, "minvi",
                      {"k_max": cfg.k_max, "runs": cfg.runs,
                       "input_canonicalized": True}, args.seed,
                      {str(args.draws): io.file_digest(args.draws)},
                      ["partition.csv", "summary.json"], started)
    return EXIT_OK


def cmd_summarize(args) -> int:
    started = time.monotonic()
    s = io.load_draws(args.draws)
    cfg = _summary_config(args, args.L)
    result = summarize.run(s, cfg)
    out = _out_dir(args)
    files = io.write_summary_dir(out, result, args.seed)
    io.write_manifest(out, "summarize",
                      {**_config_dict(cfg), "input_canonicalized": True},
                      args.seed,
                      {str(args.draws): io.file_digest(args.draws)},
                      files, started)
    return EXIT_OK


def cmd_elbow(args) -> int:
    started = time.monotonic()
    s = io.load_draws(args.draws)
    cfg = _summary_config(args, args.L_min)
    L_values = list(range(args.L_min, args.L_max + 1))
    results = summarize.elbow(s, L_values, cfg)
    out = _out_dir(args)
    files = []
    rows = []
    for L, W, res in results:
        rows.append((L, W))
        sub = out / f"L{L:02d}"
        sub.mkdir(exist_ok=True)
        for name in io.write_summary_dir(sub, res, args.seed):
            files.append(f"L{L:02d}/{name}")
    with open(out / "elbow.csv", "w") as fh:
        for L, W in rows:
            fh.write(f"{L},{W:.17g}\n")
    files.append("elbow.csv")
    io.write_manifest(out, "elbow",
                      {**_config_dict(cfg), "L_min": args.L_min,
                       "L_max": args.L_max, "input_canonicalized": True},
                      args.seed, {str(args.draws): io.file_digest(args.draws)},
                      files, started)
    return EXIT_OK


def cmd_diagnose(args) -> int:
    started = time.monotonic()
    s = io.load_draws(args.draws)
    result, meta = io.load_summary_dir(args.summary)
    if result.particles[0].n != s.n:
        raise DataError("summary and draws have different item counts")
    if result.assignments.size != s.T:
        raise DataError("summary assignments do not cover the draws file "
                        "(stale summary?)")
    manifest = io.read_manifest(args.summary)
    recorded = manifest.get("inputs", {})
    digest = io.file_digest(args.draws)
    if recorded and digest not in recorded.values():
        raise DataError(
            "draws file digest does not match the one recorded when the "
            "summary was fitted; refusing to mix runs"
        )

    if args.region_psm and s.n > PSM_ITEM_LIMIT:
        raise DataError(
            f"per-region item-level PSMs for n={s.n} exceed the "
            f"{PSM_ITEM_LIMIT}-item guard; the meet-collapsed PSM "
            f"(wasabi_psm.csv) is emitted regardless"
        )
    report = diagnostics.build_report(s, result,
                                      include_region_psms=args.region_psm)
    if args.region_psm:
        diagnostics.check_identities(s, result, check_psm=True)

    out = _out_dir(args)
    files = ["report.json", "meet.csv", "wasabi_psm.csv", "evic.csv"]
    io.save_labels(out / "meet.csv", report.decomposition.meet.labels)
    io.save_floats(out / "wasabi_psm.csv", report.collapsed.values)

    if args.evic == "mcmc":
        from .samples import evi_contribution_mcmc

        per_item = evi_contribution_mcmc(report.decomposition.meet, s)
        grouped = report.decomposition.meet.labels
        values = np.zeros(report.decomposition.meet.k)
        np.add.at(values, grouped, per_item)
        values /= report.decomposition.meet.sizes
        evic_values = values
    else:
        evic_values = report.meet_evic.values
    evic_rows = np.column_stack([
        np.arange(report.decomposition.meet.k),
        report.decomposition.meet.sizes,
        evic_values,
    ])
    with open(out / "evic.csv", "w") as fh:
        for m, size, v in evic_rows:
            fh.write(f"{int(m)},{int(size)},{v:.17g}\n")

    for (a, b), comp in report.pairwise.items():
        vic_name = f"vic_{a}_{b}.csv"
        vicg_name = f"vicg_{a}_{b}.csv"
        io.save_floats(out / vic_name, comp.vic)
        with open(out / vicg_name, "w") as fh:
            for (ca, cb), v in sorted(comp.vicg.items()):
                fh.write(f"{ca},{cb},{v:.17g}\n")
        files += [vic_name, vicg_name]

    if args.region_psm:
        for l, rp in enumerate(report.region_psms):
            name = f"region_psm_{l}.csv"
            io.save_floats(out / name, rp.values)
            files.append(name)

    io.write_json(out / "report.json", {
        "schema_version": io.SCHEMA_VERSION,
        "n": s.n, "T": s.T, "L": result.L,
        "weights": result.weights.tolist(),
        "wasserstein": result.wasserstein,
        "cluster_counts": [p.k for p in result.particles],
        "meet": {
            "clusters": report.decomposition.meet.k,
            "sizes": report.decomposition.meet.sizes.tolist(),
            "cluster_map": report.decomposition.cluster_map.tolist(),
        },
        "region_evi": report.region_evis.tolist(),
        "region_evi_normalized": report.region_evis_normalized.tolist(),
        "evic_total": float(np.dot(evic_values,
                                   report.decomposition.meet.sizes)),
        "evic_source": args.evic,
        "pairwise_vi": [[a, b, comp.vi] for (a, b), comp in
                        sorted(report.pairwise.items())],
        "identity_checks": {
            "weighted_region_evi_equals_objective": True,
            "psm_mixture_checked": bool(args.region_psm),
        },
    })
    io.write_manifest(out, "diagnose",
                      {"region_psm": bool(args.region_psm), "evic": args.evic,
                       "input_canonicalized": True},
                      None,
                      {str(args.draws): digest, str(args.summary): "dir"},
                      files, started)
    return EXIT_OK


# --------------------------------------------------------------------------
# parser
# --------------------------------------------------------------------------


def _add_summary_flags(p, with_L=True):
    if with_L:
        p.add_argument("--L", type=int, required=True,
                       help="number of representative partitions")
    p.add_argument("--init", default="topvi",
                   help="average | complete | plusplus | topvi | fixed=FILE")
    p.add_argument("--epsilon", type=float, default=None,
                   help="convergence threshold in bits (default 0.0001*log2(n))")
    p.add_argument("--max-iter", type=int, default=100, dest="max_iter")
    p.add_argument("--runs", type=int, default=8)
    p.add_argument("--batch", type=int, default=None,
                   help="mini-batch size for the iterations")
    p.add_argument("--k-max", type=int, default=None, dest="k_max")
    p.add_argument("--thin", type=int, default=10,
                   help="thinning stride for initialization EVI ranking")
    p.add_argument("--search-runs", type=int, default=4, dest="search_runs",
                   help="restarts of the inner expected-VI search")
    p.add_argument("--threads", type=int, default=1)


def build_parser() -> _Parser:
    parser = _Parser(prog="postpart",
                     description="Summarize posterior partition samples with "
                                 "weighted representative partitions (VI metric).")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="generate data from a preset scenario")
    p.add_argument("--preset", choices=sorted(simulate.PRESETS), required=True)
    p.add_argument("--n", type=int, default=None)
    p.add_argument("--m", type=float, default=None, help="quadrant separation")
    p.add_argument("--sd", type=float, default=None, help="truncated-Gaussian sd")
    p.add_argument("--df", type=float, default=None, help="skewed-t degrees of freedom")
    p.add_argument("--skew", type=float, default=None, help="skewed-t skewness")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("gibbs", help="sample partitions from a DPM of Gaussians")
    p.add_argument("data", help="observations CSV (or - for stdin)")
    p.add_argument("--alpha", default="1", help="1 | empirical | VALUE")
    p.add_argument("--iters", type=int, default=20000)
    p.add_argument("--burnin", type=int, default=None,
                   help="default iters // 2")
    p.add_argument("--thin", type=int, default=1)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_gibbs)

    p = sub.add_parser("psm", help="item-level posterior similarity matrix")
    p.add_argument("draws")
    p.add_argument("--force", action="store_true",
                   help="override the large-n guard")
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_psm)

    p = sub.add_parser("minvi", help="single best partition under expected VI")
    p.add_argument("draws")
    p.add_argument("--k-max", type=int, default=None, dest="k_max")
    p.add_argument("--runs", type=int, default=8)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_minvi)

    p = sub.add_parser("summarize", help="fit the weighted particle summary")
    p.add_argument("draws")
    _add_summary_flags(p)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_summarize)

    p = sub.add_parser("elbow", help="objective for a range of particle counts")
    p.add_argument("draws")
    p.add_argument("--L-max", type=int, default=10, dest="L_max")
    p.add_argument("--L-min", type=int, default=1, dest="L_min")
    _add_summary_flags(p, with_L=False)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_elbow)

    p = sub.add_parser("diagnose", help="post-fit diagnostics of a summary")
    p.add_argument("draws")
    p.add_argument("summary", help="output directory of a previous summarize run")
    p.add_argument("--region-psm", action="store_true", dest="region_psm",
                   help="also emit per-region item-level PSMs")
    p.add_argument("--evic", choices=("particles", "mcmc"), default="particles",
                   help="expectation source for the meet's EVI contributions")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_diagnose)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        with warnings.catch_warnings():
            warnings.simplefilter("always")
            return args.func(args)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except DataError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except InvariantError as exc:
        print(f"internal invariant violation: {exc}", file=sys.stderr)
        return EXIT_INVARIANT
    except ValueError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except BrokenPipeError:
        return EXIT_OK
    except OSError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
