"""Command-line interface: runs, parameter searches, analyses, self-checks and instance export."""
from __future__ import annotations

import argparse
import json
import logging
import sys
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Callable

import numpy as np

from . import analysis, verify
from .engine import (RunParams, equal_superposition, optimize_params, prepare_amplified,
                     tune_penalty)
from .instances import BUILTINS, brute_force_optimum, dumps, load, load_builtin
from .mixers import HammingMixer, Mixer, make_mixer
from .problems import (MINIMIZE, CflpInstance, KMeansInstance, MisInstance, Problem,
                       estimate_cluster_means)
from .space import BINARY, SolutionSpace, indices_of

log = logging.getLogger("qwoa")

VARIANTS = {
    "kmeans": ("plain", "transformed"),
    "cflp": ("penalised", "unconstrained"),
}


class UsageError(Exception):
    """Bad configuration; reported on stderr with exit code 2."""


@dataclass
class ProblemSetup:
    """Objective tables and optimum set for one instance variant.

    ``values`` drives the phase separation; ``optima`` are the indices whose
    probability is reported as the optimal-solution probability.
    """

    instance: Problem
    variant: str
    penalty: tuple | None
    values: np.ndarray
    optima: np.ndarray
    sense: str
    values_for: Callable | None = None  # penalty vector -> objective table

    @property
    def space(self) -> SolutionSpace:
        return self.instance.space


def _best(values, sense, mask=None):
    v = np.asarray(values, dtype=float)
    if mask is not None:
        v = np.where(mask, v, np.inf if sense == MINIMIZE else -np.inf)
    return brute_force_optimum(v, sense).solutions


def problem_setup(inst: Problem, variant: str | None = None, penalty=None) -> ProblemSetup:
    kind = inst.kind
    allowed = VARIANTS.get(kind, ("default",))
    variant = allowed[0] if variant is None else variant
    if variant not in allowed:
        raise UsageError(f"variant {variant!r} not available for {kind}; choose from {', '.join(allowed)}")
    if penalty is not None and kind not in ("mis", "cflp"):
        raise UsageError(f"{kind} takes no penalty vector")
    sense = inst.sense
    if isinstance(inst, KMeansInstance):
        raw = inst.values()
        values = raw
        if variant == "transformed":
            values = inst.values(estimate_cluster_means(inst, "exact").means)
        # the optimum set is that of the raw objective for both variants
        return ProblemSetup(inst, variant, None, values, _best(raw, sense), sense)
    if isinstance(inst, MisInstance):
        lam = tuple(inst.default_penalty if penalty is None else penalty)
        values = inst.values(lam)
        return ProblemSetup(inst, variant, lam, values, _best(values, sense, inst.valid_mask()), sense,
                            lambda p: inst.values(p))
    if isinstance(inst, CflpInstance):
        if variant == "unconstrained":
            if penalty is not None:
                raise UsageError("the unconstrained CFLP variant takes no penalty vector")
            values = inst.values((0.0, 0.0, 0.0))
            return ProblemSetup(inst, variant, (0.0, 0.0, 0.0), values, _best(values, sense), sense)
        lam = tuple(inst.default_penalty if penalty is None else penalty)
        ref = inst.unconstrained_optimum()
        values_for = lambda p: inst.values(p, reference=ref)  # noqa: E731
        values = values_for(lam)
        return ProblemSetup(inst, variant, lam, values, _best(values, sense, inst.valid_mask()), sense,
                            values_for)
    values = inst.values()
    return ProblemSetup(inst, variant, None, values, _best(values, sense), sense)


def build_mixer(space: SolutionSpace, name: str) -> Mixer:
    if name == "auto":
        return make_mixer(space)
    if name == "hamming" and space.kind == BINARY:
        return HammingMixer(SolutionSpace.integer(space.n, 2))
    natural = make_mixer(space)
    if natural.name != name:
        raise UsageError(f"mixer {name!r} does not fit a {space.kind} space (use {natural.name!r})")
    return natural


def _parse_floats(text: str) -> tuple:
    try:
        return tuple(float(v) for v in text.split(","))
    except ValueError:
        raise UsageError(f"expected comma-separated numbers, got {text!r}") from None


def _parse_ints(text: str) -> list:
    """'1..8' or '1,2,5'."""
    try:
        if ".." in text:
            a, b = text.split("..")
            return list(range(int(a), int(b) + 1))
        return [int(v) for v in text.split(",")]
    except ValueError:
        raise UsageError(f"expected an integer list like 1..8 or 1,2,5, got {text!r}") from None


def _load(ref: str) -> Problem:
    try:
        return load(ref)
    except KeyError as exc:
        raise UsageError(exc.args[0]) from None
    except FileNotFoundError:
        raise UsageError(f"instance file not found: {ref}") from None


def _setup_from_args(args) -> tuple[ProblemSetup, Mixer]:
    inst = _load(args.instance)
    penalty = _parse_floats(args.penalty) if getattr(args, "penalty", None) else None
    setup = problem_setup(inst, args.variant, penalty)
    return setup, build_mixer(setup.space, args.mixer)


def _run_params(args, setup: ProblemSetup, gamma, t, beta) -> RunParams:
    sigma = args.sigma if args.sigma is not None else float(np.std(setup.values))
    beta = 1.0 / args.p if beta is None else beta
    return RunParams(gamma, t, beta, args.p, setup.sense, sigma, setup.penalty)


def _out(args, name: str) -> Path:
    out = Path(args.output_dir) / name
    out.parent.mkdir(parents=True, exist_ok=True)
    return out


def _write_json(path: Path, doc) -> None:
    path.write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n")


def _instance_doc(args, setup: ProblemSetup) -> dict:
    return {"ref": args.instance, "kind": setup.instance.kind, "variant": setup.variant,
            "optima": setup.optima.tolist()}


def cmd_run(args) -> int:
    setup, mixer = _setup_from_args(args)
    params = _run_params(args, setup, args.gamma, args.t, args.beta)
    trace = prepare_amplified(mixer, setup.values, params, setup.optima, cvar_alpha=args.alpha)
    doc = trace.to_dict(setup.values, args.top)
    doc["instance"] = _instance_doc(args, setup)
    doc["mixer"] = mixer.name
    doc["cvar_alpha"] = args.alpha
    _write_json(_out(args, args.output), doc)
    fx, amp = analysis.amplification_profile(trace.state, setup.values)
    analysis.write_csv(_out(args, args.profile), ((x, "a2", y, None) for x, y in zip(fx, amp)))
    print(f"final optimal probability: {trace.final_probability:.6f}")
    return 0


def cmd_optimize(args) -> int:
    setup, mixer = _setup_from_args(args)
    init = _run_params(args, setup, args.gamma, args.t, args.beta)
    opts = dict(metric=args.metric, cvar_alpha=args.alpha, max_evals=args.max_evals)
    if args.tune_penalty:
        if setup.values_for is None:
            raise UsageError(f"--tune-penalty needs a penalised instance, not {setup.instance.kind} "
                             f"({setup.variant})")
        res = tune_penalty(mixer, setup.values_for, setup.penalty, init, **opts)
        values = setup.values_for(res.params.penalty)
    else:
        res = optimize_params(mixer, setup.values, init, **opts)
        values = setup.values
    trace = prepare_amplified(mixer, values, res.params, setup.optima, cvar_alpha=args.alpha,
                              metric_values=setup.values, keep_state=False)
    doc = res.to_dict()
    doc.update(instance=_instance_doc(args, setup), mixer=mixer.name, metric=args.metric, alpha=args.alpha,
               tune_penalty=bool(args.tune_penalty), fixed_penalty=None if setup.penalty is None
               else list(setup.penalty), init=init.to_dict(),
               final_optimal_probability=trace.final_probability)
    _write_json(_out(args, args.output), doc)
    print(f"{'converged' if res.converged else 'not converged'} after {res.evaluations} evaluations: "
          f"{args.metric} {res.value:.10g}, optimal probability {trace.final_probability:.6f}")
    return 0


def _state_for(args, setup, mixer, keep_iteration=None):
    if args.p == 0:
        return equal_superposition(setup.space), None
    params = _run_params(args, setup, args.gamma, args.t, args.beta)
    want = args.p - 1 if keep_iteration is None else keep_iteration
    if not 0 <= want < args.p:
        raise UsageError(f"--iteration must lie in [1, {args.p}]")
    kept = {}

    def hook(i, state):
        if i == want:
            kept["state"] = state.copy()

    prepare_amplified(mixer, setup.values, params, setup.optima, hook=hook, keep_state=False)
    return kept["state"], params


def cmd_analyze(args) -> int:
    rng = np.random.default_rng(args.seed)
    if args.analysis == "approx-error":
        grid = np.linspace(0.0, args.std_max, args.std_points)
        rows = []
        for pd in ("normal", "uniform"):
            for wd in ("uniform", "increasing"):
                for pt in analysis.approx_error_experiment(pd, wd, grid, args.terms, args.trials, rng):
                    rows.append((pt.std, f"{pd}-{wd} phase", pt.phase_error_mean, pt.phase_error_std))
                    rows.append((pt.std, f"{pd}-{wd} magnitude", pt.magnitude_error_mean,
                                 pt.magnitude_error_std))
        analysis.write_csv(_out(args, args.output or "approx_error.csv"), rows)
        print(f"wrote {len(rows)} rows")
        return 0
    if args.instance is None:
        raise UsageError(f"analyze {args.analysis} needs --instance")
    setup, mixer = _setup_from_args(args)
    if args.analysis == "subset-means":
        rows = analysis.subset_means_sampled(setup.space, lambda X: _table_lookup(setup, X), args.bins,
                                             args.per_bin, _parse_ints(args.h), rng, args.pool, args.inner)
        analysis.write_csv(_out(args, args.output or "subset_means.csv"),
                           ((r.f_bin_center, f"h={r.h}", r.mean, r.std) for r in rows))
        print(f"wrote {len(rows)} rows")
        return 0
    if args.analysis == "amplification":
        state, _ = _state_for(args, setup, mixer)
        fx, amp = analysis.amplification_profile(state, setup.values)
        analysis.write_csv(_out(args, args.output or "amplification.csv"),
                           ((x, "a2", y, None) for x, y in zip(fx, amp)))
        print(f"wrote {fx.size} rows")
        return 0
    # weighted-stats
    if mixer.name not in ("hypercube", "hamming"):
        raise UsageError("weighted-stats needs a hypercube or Hamming mixer: on the transposition graph "
                         "walk amplitudes vary within a distance shell, so the weights do not reduce to a_x")
    state, params = _state_for(args, setup, mixer, None if args.iteration is None else args.iteration - 1)
    gamma_next = 0.0 if params is None else params.gamma / params.sigma
    order = np.argsort(setup.values, kind="stable")
    sample_u = order[np.linspace(0, order.size - 1, args.samples_u).astype(np.int64)]
    h_list = _parse_ints(args.h) if args.h else None
    stats = analysis.weighted_subset_stats(state, setup.space, setup.values, gamma_next, sample_u,
                                           mixer.name, h_list, setup.sense, rng=rng)
    analysis.write_csv(_out(args, args.output or "weighted_stats.csv"),
                       ((s.f_u, f"h={s.h}", s.E_f, np.sqrt(s.V_f)) for s in stats))
    _write_json(_out(args, "weighted_stats.json"), [asdict(s) for s in stats])
    print(f"wrote {len(stats)} rows")
    return 0


def _table_lookup(setup: ProblemSetup, X):
    return setup.values[indices_of(setup.space, X)]


def cmd_verify(args) -> int:
    checks = []
    if args.scope in ("mixers", "all"):
        checks += verify.mixer_checks(args.seed)
    if args.scope in ("circuits", "all"):
        checks += verify.circuit_checks(args.seed)
    print(verify.format_table(checks))
    failed = sum(not c.passed for c in checks)
    print(f"{len(checks) - failed} passed, {failed} failed")
    return 1 if failed else 0


def cmd_instance(args) -> int:
    if args.action == "list":
        for name in BUILTINS:
            inst = load_builtin(name)
            print(f"{name}\t{inst.kind}\t{inst.space}")
        return 0
    try:
        inst = load_builtin(args.name)
    except KeyError as exc:
        raise UsageError(exc.args[0]) from None
    path = _out(args, args.output or f"{args.name}.json")
    path.write_text(dumps(inst) + "\n")
    print(f"wrote {path}")
    return 0


def _add_problem_args(p, required=True):
    p.add_argument("--instance", required=required, help="builtin:NAME or path to an instance JSON file")
    p.add_argument("--variant", help="kmeans: plain|transformed; cflp: penalised|unconstrained")
    p.add_argument("--penalty", help="comma-separated penalty vector (mis, cflp)")
    p.add_argument("--mixer", default="auto", choices=["auto", "hypercube", "hamming", "transposition"])


def _add_schedule_args(p, gamma=None, t=None, p_default=None):
    p.add_argument("--p", type=int, required=p_default is None, default=p_default, help="iterations")
    p.add_argument("--gamma", type=float, required=gamma is None, default=gamma)
    p.add_argument("--t", type=float, required=t is None, default=t)
    p.add_argument("--beta", type=float, help="defaults to 1/p")
    p.add_argument("--sigma", type=float, help="phase scale; defaults to the objective's standard deviation")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="qwoa", description="Quantum walk optimisation simulator with a fixed parameter schedule")
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--threads", type=int, help="numba worker threads (default: all)")
    ap.add_argument("--output-dir", default=".")
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="prepare an amplified state and record per-iteration metrics")
    _add_problem_args(run)
    _add_schedule_args(run)
    run.add_argument("--alpha", type=float, default=0.1, help="CVaR fraction")
    run.add_argument("--top", type=int, default=10)
    run.add_argument("--output", default="run.json")
    run.add_argument("--profile", default="amplification.csv")
    run.set_defaults(func=cmd_run)

    opt = sub.add_parser("optimize", help="local search over (gamma, t, beta) and optionally the penalty")
    _add_problem_args(opt)
    _add_schedule_args(opt, gamma=1.0, t=0.1)
    opt.add_argument("--metric", default="expectation", choices=["expectation", "cvar"])
    opt.add_argument("--alpha", type=float, default=0.1, help="CVaR fraction")
    opt.add_argument("--tune-penalty", action="store_true")
    opt.add_argument("--max-evals", type=int, default=500)
    opt.add_argument("--output", default="optimize.json")
    opt.set_defaults(func=cmd_optimize)

    an = sub.add_parser("analyze", help="emit plot data as CSV")
    an.add_argument("analysis", choices=["subset-means", "weighted-stats", "amplification", "approx-error"])
    _add_problem_args(an, required=False)
    _add_schedule_args(an, gamma=0.3, t=0.2, p_default=0)
    an.add_argument("--iteration", type=int, help="weighted-stats: use the state after this iteration")
    an.add_argument("--samples-u", type=int, default=100, help="weighted-stats: reference solutions")
    an.add_argument("--bins", type=int, default=100)
    an.add_argument("--per-bin", type=int, default=200)
    an.add_argument("--pool", type=int, default=100_000, help="subset-means: uniform solutions to bin")
    an.add_argument("--inner", type=int, default=200, help="subset-means: shell draws per solution")
    an.add_argument("--h", help="distances, e.g. 1..8 or 1,2,5")
    an.add_argument("--trials", type=int, default=10_000)
    an.add_argument("--terms", type=int, default=1000)
    an.add_argument("--std-max", type=float, default=1.0)
    an.add_argument("--std-points", type=int, default=11)
    an.add_argument("--output")
    an.set_defaults(func=cmd_analyze)

    ver = sub.add_parser("verify", help="check mixers and circuits against dense references")
    ver.add_argument("scope", choices=["mixers", "circuits", "all"])
    ver.set_defaults(func=cmd_verify)

    ins = sub.add_parser("instance", help="list or export the built-in instances")
    ins.add_argument("action", choices=["list", "export"])
    ins.add_argument("name", nargs="?")
    ins.add_argument("--output")
    ins.set_defaults(func=cmd_instance)
    return ap


def _set_threads(n):
    if n is None:
        return
    import numba

    numba.set_num_threads(max(1, min(n, numba.config.NUMBA_NUM_THREADS)))


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        if args.command == "instance" and args.action == "export" and not args.name:
            raise UsageError("instance export needs a builtin name")
        if args.command == "analyze" and args.p < 0:
            raise UsageError("--p must be >= 0")
        _set_threads(args.threads)
        return args.func(args)
    except (UsageError, ValueError) as exc:
        print(f"qwoa: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
