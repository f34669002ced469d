"""Command-line front end: synthetic data, ingestion, retrieval runs and the benchmark sweeps.

Every command is deterministic given ``--seed``. Results go to ``--out``
(stdout when omitted or ``-``) as CSV.
"""
from __future__ import annotations

import argparse
import csv
import sys

import numpy as np

from ._io import text_sink
from .analysis import check_exact_retrieval, require_sparse
from .datasets import load_dataset
from .dynamics import RetrievalConfig, distance_retrieve, error_bound
from .errors import BisectionFailure, LineSearchFailure, RankError, UHopError
from .kernel import save_feature_map
from .loss import LOSS_KINDS, Stage1Config, save_loss_history
from .patterns import GaussianNoise, MaskFraction, PatternSet, save_csv
from .pipeline import (
    batch_retrieve,
    corrupted_queries,
    derive_seed,
    learn_feature_map,
    retrieve_all,
    save_batch_results,
    sse,
)
from .representation import (
    orthogonalize_features,
    random_stochastic_matrix,
    realize_attention,
    verify_realization,
)
from .synthetic import GENERATORS, generate

EXIT_OK = 0
EXIT_FAIL = 1
EXIT_PRECONDITION = 2
EXIT_NUMERIC = 3

# sweep defaults follow the published hyperparameter grid
DEFAULT_SIZES = "10,20,30,50,100,200,500"
DEFAULT_LEVELS = "0.0,0.01,0.05,0.1,0.3,0.5,0.7,1.0,1.2,1.4,2.0"
DEFAULT_ITERS = "0,1,10,20,50,100,200,500,1000"
REPR_TOL = 1e-8

BENCH_HEADER = ["method", "M", "N", "trial", "mean_sse", "final_loss"]
NOISE_HEADER = ["method", "M", "noise", "N", "trial", "mean_sse", "final_loss"]


def _int_list(text: str) -> list:
    return [int(v) for v in text.split(",") if v.strip()]


def _float_list(text: str) -> list:
    return [float(v) for v in text.split(",") if v.strip()]


def _fmt(v: float) -> str:
    return f"{v:.17g}"


# -- argument parsing -----------------------------------------------------------


def _common(seed=True, out=True) -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(add_help=False)
    if seed:
        p.add_argument("--seed", type=int, default=0)
    if out:
        p.add_argument("--out", default="-", help="output file; '-' for stdout")
    p.add_argument("--format", choices=["csv"], default="csv")
    return p


def _model_args() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(add_help=False)
    p.add_argument("--alpha", type=float, default=1.0)
    p.add_argument("--beta", type=float, default=1.0)
    p.add_argument("--t", type=float, default=2.0)
    p.add_argument("--gamma", type=float, default=0.01)
    p.add_argument("--T", type=int, default=1, help="retrieval steps")
    p.add_argument("--loss", choices=LOSS_KINDS, default="avg")
    p.add_argument("--no-line-search", action="store_true")
    p.add_argument("--raw-loss", action="store_true", help="separation loss on raw rather than unit features")
    p.add_argument("--row-norm", choices=["unit", "preserve"], default="unit")
    p.add_argument("--init", choices=["identity", "gaussian"], default="identity",
                   help="initial feature map; identity makes N=0 the plain dense model")
    p.add_argument("--D-phi", dest="D_phi", type=int, default=None, help="feature dimension (default 4d)")
    return p


def _data_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("dataset", help="bundled name (mnist) or an IDX / pattern CSV path")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="uhop", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    g = sub.add_parser("gen", parents=[_common()], help="write a synthetic pattern CSV")
    g.add_argument("kind", choices=GENERATORS)
    g.add_argument("--d", type=int, required=True)
    g.add_argument("--M", type=int, required=True)
    g.add_argument("--angle", type=float, default=0.2, help="near-parallel spread in radians")

    i = sub.add_parser("ingest", parents=[_common(seed=False)], help="convert IDX or CSV to pattern CSV")
    _data_args(i)
    i.add_argument("--count", type=int, default=None, help="keep the first COUNT patterns")

    r = sub.add_parser("retrieve", parents=[_common(), _model_args()],
                       help="Stage I then retrieval of one corrupted query per memory")
    _data_args(r)
    r.add_argument("--M", type=int, default=None, help="random subset size")
    r.add_argument("--N", type=int, default=10)
    r.add_argument("--mask", type=float, default=0.5)
    r.add_argument("--noise", type=float, default=None, help="use Gaussian noise of this level instead of masking")
    r.add_argument("--map-out", default=None, help="also write the learned feature map")

    for name, help_ in [("bench-capacity", "SSE against memory set size under masking"),
                        ("bench-noise", "SSE against Gaussian noise level")]:
        b = sub.add_parser(name, parents=[_common(), _model_args()], help=help_)
        _data_args(b)
        b.add_argument("--sizes", default=DEFAULT_SIZES if name == "bench-capacity" else "100")
        b.add_argument("--N", default=DEFAULT_ITERS, help="comma separated Stage-I iteration counts")
        b.add_argument("--trials", type=int, default=20)
        b.add_argument("--baseline", action="append", choices=["l2", "manhattan"], default=[])
        if name == "bench-capacity":
            b.add_argument("--mask", type=float, default=0.5)
        else:
            b.add_argument("--levels", default=DEFAULT_LEVELS)

    c = sub.add_parser("check", parents=[_common(), _model_args()], help="exact-retrieval report after Stage I")
    _data_args(c)
    c.add_argument("--M", type=int, default=None)
    c.add_argument("--N", type=int, default=0)

    v = sub.add_parser("verify-repr", parents=[_common(out=False)],
                       help="check the attention realization construction on random instances")
    v.add_argument("--M", type=int, default=4)
    v.add_argument("--d", type=int, default=8)
    v.add_argument("--trials", type=int, default=100)

    s = sub.add_parser("stage1", parents=[_common(), _model_args()], help="export the Stage-I loss curve")
    _data_args(s)
    s.add_argument("--M", type=int, default=None)
    s.add_argument("--N", type=int, default=100)
    s.add_argument("--map-out", default=None)
    return parser


# -- helpers -----------------------------------------------------------------------


def _stage1(args, N: int) -> Stage1Config:
    return Stage1Config(N=N, gamma=args.gamma, t=args.t, line_search=not args.no_line_search,
                        loss_kind=args.loss, row_norm=args.row_norm, normalize_features=not args.raw_loss)


def _retrieval(args, alpha=None) -> RetrievalConfig:
    return RetrievalConfig(beta=args.beta, t=args.t, alpha=args.alpha if alpha is None else alpha, T=args.T)


def _subsample(full: PatternSet, M, seed: int) -> PatternSet:
    if M is None:
        return full
    if not 1 <= M <= full.M:
        raise ValueError(f"cannot draw {M} memories from a set of {full.M}")
    return full.subset(np.random.default_rng(seed).choice(full.M, M, replace=False))


# -- commands ----------------------------------------------------------------------


def cmd_gen(args) -> int:
    save_csv(generate(args.kind, args.d, args.M, args.seed, args.angle), _sink(args))
    return EXIT_OK


def cmd_ingest(args) -> int:
    ps = load_dataset(args.dataset)
    if args.count is not None:
        if not 1 <= args.count <= ps.M:
            raise ValueError(f"--count must lie in [1, {ps.M}]")
        ps = ps.subset(range(args.count))
    save_csv(ps, _sink(args))
    return EXIT_OK


def cmd_retrieve(args) -> int:
    ps = _subsample(load_dataset(args.dataset), args.M, args.seed)
    corruption = GaussianNoise(args.noise, args.seed) if args.noise is not None else MaskFraction(args.mask, args.seed)
    fm, history = learn_feature_map(ps, _stage1(args, args.N), args.seed, args.init, args.D_phi)
    if args.map_out:
        save_feature_map(fm, args.map_out)
    final_loss = history[-1] if history else float("nan")
    results = retrieve_all(fm, ps, _retrieval(args), corrupted_queries(ps, corruption), final_loss)
    save_batch_results(results, _sink(args))
    return EXIT_OK


def _baseline_sse(ps: PatternSet, args, corruption, metric: str) -> float:
    queries = corrupted_queries(ps, corruption)
    out = distance_retrieve(ps, _retrieval(args), queries, metric).retrieved
    return float(np.mean([sse(out[:, mu], ps.pattern(mu)) for mu in range(ps.M)]))


def _bench_rows(args, full: PatternSet, sizes, corruption_for, extra=()):
    """Rows for every (size, trial, method, N); the corruption is rebuilt from the trial seed."""
    rows = []
    iters = _int_list(args.N)
    for M in sizes:
        for trial in range(args.trials):
            tseed = derive_seed(args.seed, trial)
            ps = _subsample(full, M, tseed)
            corruption = corruption_for(tseed)
            # N=0 references: plain dense and sparse models on the identity map
            for method, alpha in [("dense", 1.0), ("sparse", 2.0)]:
                res = batch_retrieve(ps, _stage1(args, 0), _retrieval(args, alpha), corruption, tseed, "identity", ps.d)
                rows.append([method, M, *extra, 0, trial, np.mean([r.sse for r in res]), res[0].final_loss])
            for N in iters:
                res = batch_retrieve(ps, _stage1(args, N), _retrieval(args), corruption, tseed, args.init, args.D_phi)
                rows.append(["uhop", M, *extra, N, trial, np.mean([r.sse for r in res]), res[0].final_loss])
            for metric in args.baseline:
                rows.append([metric, M, *extra, 0, trial, _baseline_sse(ps, args, corruption, metric), float("nan")])
    return rows


def _write_rows(args, header, rows) -> None:
    with text_sink(_sink(args)) as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([_fmt(v) if isinstance(v, float) else v for v in row])


def cmd_bench_capacity(args) -> int:
    full = load_dataset(args.dataset)
    rows = _bench_rows(args, full, _int_list(args.sizes), lambda s: MaskFraction(args.mask, s))
    _write_rows(args, BENCH_HEADER, rows)
    return EXIT_OK


def cmd_bench_noise(args) -> int:
    full = load_dataset(args.dataset)
    rows = []
    for level in _float_list(args.levels):
        rows += _bench_rows(args, full, _int_list(args.sizes), lambda s, lv=level: GaussianNoise(lv, s), (level,))
    _write_rows(args, NOISE_HEADER, rows)
    return EXIT_OK


def cmd_check(args) -> int:
    ps = _subsample(load_dataset(args.dataset), args.M, args.seed)
    require_sparse(args.alpha)  # fail before spending time on Stage I
    fm, _ = learn_feature_map(ps, _stage1(args, args.N), args.seed, args.init, args.D_phi)
    report = check_exact_retrieval(fm, ps, args.alpha, args.beta, args.t)
    bounds = [error_bound(ps, args.beta, mu) if ps.M > 1 else float("nan") for mu in range(ps.M)]
    report.to_csv(_sink(args), error_bounds=bounds)
    print(f"{report.n_satisfied}/{ps.M} memories satisfy the exact-retrieval condition", file=sys.stderr)
    return EXIT_OK


def cmd_verify_repr(args) -> int:
    if args.M > args.d:
        raise RankError(f"M={args.M} exceeds d={args.d}; orthonormal features need M <= d")
    worst = 0.0
    for trial in range(args.trials):
        rng = np.random.default_rng(derive_seed(args.seed, trial))
        ps = PatternSet(rng.standard_normal((args.d, args.M)))
        X = orthogonalize_features(ps, derive_seed(args.seed, trial)).W @ ps.data
        P = random_stochastic_matrix(args.M, rng)
        beta = float(rng.uniform(0.1, 10.0))
        D0 = np.diag(rng.uniform(0.1, 10.0, args.M))
        W_K, W_Q = realize_attention(X, P, beta, D0)
        worst = max(worst, verify_realization(W_K, W_Q, X, P, beta))
    ok = worst <= REPR_TOL
    print(f"trials={args.trials} M={args.M} d={args.d} max_error={worst:.3e} {'pass' if ok else 'FAIL'}")
    return EXIT_OK if ok else EXIT_FAIL


def cmd_stage1(args) -> int:
    ps = _subsample(load_dataset(args.dataset), args.M, args.seed)
    fm, history = learn_feature_map(ps, _stage1(args, args.N), args.seed, args.init, args.D_phi)
    if args.map_out:
        save_feature_map(fm, args.map_out)
    save_loss_history(history, _sink(args))
    return EXIT_OK


def _sink(args):
    return sys.stdout if args.out in (None, "-") else args.out


COMMANDS = {
    "gen": cmd_gen,
    "ingest": cmd_ingest,
    "retrieve": cmd_retrieve,
    "bench-capacity": cmd_bench_capacity,
    "bench-noise": cmd_bench_noise,
    "check": cmd_check,
    "verify-repr": cmd_verify_repr,
    "stage1": cmd_stage1,
}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except (BisectionFailure, LineSearchFailure, FloatingPointError) as exc:
        print(f"uhop: numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (UHopError, ValueError, KeyError, IndexError, OSError) as exc:
        print(f"uhop: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_PRECONDITION


if __name__ == "__main__":
    sys.exit(main())
