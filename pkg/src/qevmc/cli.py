"""Command-line harness for the training and benchmark experiments.

Every subcommand is deterministic given its flags and --seed. CSV outputs start
with a "#schema=1" line; every run writes a manifest JSON next to its outputs.
Exit codes: 0 success, 2 configuration or input error, 3 numerical failure.
"""
from __future__ import annotations

import argparse
import csv
import dataclasses
import io
import json
import logging
import math
import os
import sys
import tempfile
import time
from pathlib import Path

import numpy as np

from . import __version__, ed, mcmc, rbm, surrogate, vmc
from . import hamiltonian as ham
from . import quantumsim as qs
from .configspace import all_configs, config_to_index
from .exceptions import ConfigError, NumericalError

log = logging.getLogger("qevmc")

SCHEMA = "#schema=1"
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3


# ---------------------------------------------------------------------------
# output helpers


def _atomic_write(path, text: str) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _json_text(doc) -> str:
    return json.dumps(doc, indent=2, sort_keys=True, default=_json_default) + "\n"


def _json_default(o):
    if isinstance(o, np.generic):
        return o.item()
    if isinstance(o, np.ndarray):
        return o.tolist()
    if isinstance(o, Path):
        return str(o)
    raise TypeError(f"not JSON serializable: {type(o).__name__}")


def write_json(path, doc) -> None:
    _atomic_write(path, _json_text(doc))


def _cell(x):
    if isinstance(x, (float, np.floating)):
        return repr(float(x))
    return str(x)


def write_csv(path, header, rows) -> None:
    buf = io.StringIO()
    buf.write(SCHEMA + "\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([_cell(x) for x in r])
    _atomic_write(path, buf.getvalue())


def read_csv(path):
    """Rows of a schema-1 CSV as dicts of strings."""
    with open(path, encoding="utf-8") as fh:
        first = fh.readline().strip()
        if first != SCHEMA:
            raise ConfigError(f"{path}: expected {SCHEMA!r} header, got {first!r}")
        return list(csv.DictReader(fh))


def _check_overwrite(paths, force: bool) -> None:
    if force:
        return
    for p in paths:
        if Path(p).exists():
            raise ConfigError(f"{p} exists; pass --force to overwrite")


class Run:
    """Collects artifact paths and writes the manifest at the end of a subcommand."""

    def __init__(self, args, manifest_path):
        self.args = args
        self.manifest_path = Path(manifest_path)
        self.artifacts = []
        self.t0 = time.time()
        self.config = {}

    def add(self, path):
        self.artifacts.append(str(path))
        return path

    def finish(self):
        doc = {
            "subcommand": self.args.command,
            "argv": {k: v for k, v in sorted(vars(self.args).items()) if k not in ("func",)},
            "config": self.config,
            "seed": getattr(self.args, "seed", None),
            "artifacts": self.artifacts,
            "wall_clock_seconds": round(time.time() - self.t0, 3),
            "started_at": time.strftime("%Y-%m-%dT%H:%M:%SZ", time.gmtime(self.t0)),
            "version": __version__,
        }
        write_json(self.manifest_path, doc)


def _parse_floats(s: str) -> list:
    try:
        return [float(x) for x in s.split(",") if x.strip()]
    except ValueError as exc:
        raise ConfigError(f"expected a comma-separated list of numbers, got {s!r}") from exc


def _parse_ints(s: str) -> list:
    out = []
    for part in s.split(","):
        part = part.strip()
        if not part:
            continue
        if "-" in part[1:]:
            lo, hi = part.split("-", 1)
            out.extend(range(int(lo), int(hi) + 1))
        else:
            out.append(int(part))
    return out


def _load_json(path):
    try:
        with open(path, encoding="utf-8") as fh:
            return json.load(fh)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON ({exc})") from exc


# ---------------------------------------------------------------------------
# gen-xxz


def cmd_gen_xxz(args) -> int:
    H = ham.xxz(args.n, args.J, args.delta, args.periodic)
    _check_overwrite([args.out], args.force)
    run = Run(args, f"{args.out}.manifest.json")
    _atomic_write(args.out, ham.format_text(H))
    run.add(args.out)
    run.config = {"n": args.n, "J": args.J, "delta": args.delta, "periodic": args.periodic,
                  "terms": len(H)}
    run.finish()
    print(f"wrote {len(H)} terms to {args.out}")
    return 0


# ---------------------------------------------------------------------------
# train

# flag name -> TrainingConfig field
TRAIN_FLAGS = {
    "epochs": "epochs_max", "samples": "samples_per_epoch", "burn_in": "burn_in_fraction",
    "proposal": "proposal", "lr": "learning_rate", "optimizer": "optimizer",
    "fit_total": "fit_total", "fit_top_fraction": "fit_top_fraction", "tol": "convergence_tol",
    "convergence_count": "convergence_count", "window": "window", "seed": "seed",
    "warm_start": "warm_start_path", "hidden": "hidden", "beta": "beta",
    "init_scale": "init_scale", "phase_init": "phase_init",
}


def resolve_training_config(args, defaults: dict | None = None) -> vmc.TrainingConfig:
    """Defaults, then the JSON config file, then explicit flags."""
    doc = dict(defaults or {})
    if getattr(args, "config", None):
        file_doc = _load_json(args.config)
        if not isinstance(file_doc, dict):
            raise ConfigError(f"{args.config}: config must be a JSON object")
        doc.update(file_doc)
    for flag, name in TRAIN_FLAGS.items():
        val = getattr(args, flag, None)
        if val is not None:
            doc[name] = val
    return vmc.TrainingConfig.from_dict(doc)


TRACE_HEADER = ["epoch", "energy_re", "energy_im", "variance", "var_ratio", "acceptance", "grad_norm"]


def _summary(trace: vmc.TrainingTrace, H, label=None) -> dict:
    mean, sd = trace.window_mean()
    try:
        z = vmc.zve(trace, trace.window)
        zdoc = {"energy_zve": z.extrapolated_energy, "zve_slope": z.slope,
                "zve_points": z.fit_points, "zve_degenerate": z.degenerate,
                "zve_zero_variance": z.zero_variance}
    except ConfigError:
        zdoc = {"energy_zve": None, "zve_slope": None, "zve_points": 0,
                "zve_degenerate": False, "zve_zero_variance": False}
    doc = {"label": label, "n": H.n, "epochs": trace.epochs, "converged": trace.converged,
           "energy_mean": mean, "energy_std": sd, "window": trace.window,
           "best_energy": trace.best_energy, "final_var_ratio": trace.var_ratio[-1]}
    doc.update(zdoc)
    if H.n <= ed.MAX_N:
        e0 = ed.ground_state(H).ground_energy
        doc["energy_ed"] = e0
        if e0 != 0:
            doc["rel_error_mean"] = abs(mean - e0) / abs(e0)
            if doc["energy_zve"] is not None:
                doc["rel_error_zve"] = abs(doc["energy_zve"] - e0) / abs(e0)
    return doc


def _write_training(prefix: str, trace, H, run: Run, label=None) -> dict:
    write_csv(run.add(f"{prefix}.trace.csv"), TRACE_HEADER, trace.rows())
    write_json(run.add(f"{prefix}.params.json"), trace.final_params.to_json())
    write_json(run.add(f"{prefix}.best_params.json"), trace.best_params.to_json())
    summary = _summary(trace, H, label)
    write_json(run.add(f"{prefix}.summary.json"), summary)
    return summary


def _progress(epoch, trace, params):
    log.info("epoch %d energy %.6f var %.4g acc %.3f", epoch, trace.energies()[-1],
             trace.variance[-1], trace.acceptance[-1])


def cmd_train(args) -> int:
    sweep = args.xxz_sweep is not None
    if sweep == bool(args.hamiltonians):
        raise ConfigError("give Hamiltonian files or --xxz-sweep, not both or neither")
    defaults = {"phase_init": "staggered"} if sweep else {}
    cfg = resolve_training_config(args, defaults)
    run = Run(args, f"{args.out_prefix}.manifest.json")
    run.config = cfg.to_dict()
    cb = _progress if args.verbose else None
    summaries = []
    if sweep:
        deltas = _parse_floats(args.xxz_sweep)
        if not deltas:
            raise ConfigError("--xxz-sweep needs at least one value")
        restart = args.restart or "phase"
        run.config.update({"sweep": deltas, "n": args.n, "J": args.J, "restart": restart,
                           "periodic": args.periodic})
        points = vmc.xxz_sweep(args.n, deltas, args.J, cfg, restart, args.periodic)
        for k, p in enumerate(points):
            H = ham.xxz(args.n, args.J, p.delta, args.periodic)
            s = _write_training(f"{args.out_prefix}.{k}", p.trace, H, run, label=f"delta={p.delta:g}")
            s.update({"delta": p.delta, "warm_from": p.warm_from})
            summaries.append(s)
    else:
        restart = args.restart or "never"
        if restart == "phase":
            raise ConfigError("--restart phase applies to --xxz-sweep only")
        prev = None
        for k, path in enumerate(args.hamiltonians):
            H = ham.parse_file(path)
            warm = prev if restart == "never" else None
            trace = vmc.train(H, cfg if k == 0 else dataclasses.replace(cfg, warm_start_path=None),
                              initial_params=warm, callback=cb)
            prefix = args.out_prefix if len(args.hamiltonians) == 1 else f"{args.out_prefix}.{k}"
            s = _write_training(prefix, trace, H, run, label=str(path))
            s["warm_from"] = (str(args.hamiltonians[k - 1]) if warm is not None else
                              (cfg.warm_start_path if k == 0 else None))
            summaries.append(s)
            prev = trace.final_params
    if len(summaries) > 1:
        write_json(run.add(f"{args.out_prefix}.summary.json"), summaries)
    run.finish()
    for s in summaries:
        line = f"{s['label']}: E_mean {s['energy_mean']:.6f} +- {s['energy_std']:.2e}"
        if s["energy_zve"] is not None:
            line += f"  E_zve {s['energy_zve']:.6f}"
        if "energy_ed" in s:
            line += f"  E_ed {s['energy_ed']:.6f}"
        print(line)
    return 0


# ---------------------------------------------------------------------------
# ed and correlate


def cmd_ed(args) -> int:
    H = ham.parse_file(args.hamiltonian)
    spec = ed.ground_state(H)
    doc = {"n": H.n, "ground_energy": spec.ground_energy, "degeneracy": spec.degeneracy,
           "lowest_eigenvalues": spec.eigenvalues[:args.levels].tolist()}
    if args.site is not None:
        if not 0 <= args.site < H.n:
            raise ConfigError(f"site {args.site} out of range")
        rows = []
        for j in range(H.n):
            lo, hi = ed.ed_correlation_envelope(spec, args.site, j)
            rows.append({"j": j, "zz": ed.ed_correlation(spec, args.site, j), "min": lo, "max": hi})
        doc["correlations"] = rows
    run = Run(args, f"{args.out}.manifest.json")
    write_json(run.add(args.out), doc)
    run.finish()
    print(f"E0 = {spec.ground_energy:.12g} (degeneracy {spec.degeneracy})")
    return 0


def cmd_correlate(args) -> int:
    params = rbm.RbmParams.load(args.params)
    site = args.site
    if not 0 <= site < params.n:
        raise ConfigError(f"site {site} out of range for n={params.n}")
    spec = None
    if args.hamiltonian:
        H = ham.parse_file(args.hamiltonian)
        if H.n != params.n:
            raise ConfigError("Hamiltonian and parameters have different n")
        spec = ed.ground_state(H)
    rows = []
    for j in range(params.n):
        c = vmc.two_point_correlation(params, site, j)
        ref = ed.ed_correlation(spec, site, j) if spec is not None else math.nan
        rows.append((site, j, c, ref))
    run = Run(args, f"{args.out}.manifest.json")
    write_csv(run.add(args.out), ["i", "j", "rbm", "ed"], rows)
    run.finish()
    for r in rows:
        print(f"<Z{r[0]} Z{r[1]}> rbm {r[2]:+.4f}" + ("" if spec is None else f"  ed {r[3]:+.4f}"))
    return 0


# ---------------------------------------------------------------------------
# benchmarks


def _instance_model(n: int, seed: int, instance: int, uniform: bool) -> surrogate.SurrogateModel:
    if uniform:
        return surrogate.SurrogateModel(n, 2, 0.0, np.zeros(n), np.zeros((n, n)))
    return mcmc.random_ising_model(n, np.random.default_rng([seed, n, instance]))


def _slope(ns, means):
    ns, means = np.asarray(ns, float), np.asarray(means, float)
    ok = means > 0
    if ok.sum() < 2:
        return math.nan
    return float(np.polyfit(ns[ok], np.log(means[ok]), 1)[0])


def gap_benchmark(n_list, instances: int, proposals, seed: int = 0, uniform: bool = False):
    rows = []
    for n in n_list:
        for inst in range(instances):
            model = _instance_model(n, seed, inst, uniform)
            phi = mcmc.exact_phi(model)
            for kind in proposals:
                spec = mcmc.proposal_spec(kind)
                T = mcmc.build_transition_matrix(spec, model, seed=[seed, n, inst])
                rows.append((kind, n, inst, mcmc.spectral_gap(T, phi)))
    means = {}
    for kind in proposals:
        means[kind] = [float(np.mean([r[3] for r in rows if r[0] == kind and r[1] == n])) for n in n_list]
    slopes = {k: _slope(n_list, means[k]) for k in proposals}
    return rows, {"n": list(n_list), "mean_delta": means, "log_slope": slopes}


def cmd_benchmark_gap(args) -> int:
    n_list = _parse_ints(args.n_list)
    proposals = [p.strip() for p in args.proposals.split(",") if p.strip()]
    for kind in proposals:
        mcmc.proposal_spec(kind)
    if args.instances < 1 or not n_list:
        raise ConfigError("need at least one instance and one n")
    rows, summary = gap_benchmark(n_list, args.instances, proposals, args.seed, args.uniform)
    run = Run(args, f"{args.out}.manifest.json")
    write_csv(run.add(args.out), ["proposal", "n", "instance", "delta"], rows)
    write_json(run.add(f"{args.out}.summary.json"), summary)
    run.finish()
    for kind in proposals:
        print(kind, " ".join(f"{m:.4g}" for m in summary["mean_delta"][kind]),
              f"slope {summary['log_slope'][kind]:.4f}")
    return 0


CONVERGENCE_HEADER = ["proposal", "n", "instance", "chain", "samples", "l2_error", "tv", "acceptance", "delta"]


def convergence_benchmark(n: int, instances: int, chains: int, samples: int, proposals,
                          seed: int = 0, burn_in: float = 0.1, with_gap: bool = True):
    rows = []
    for inst in range(instances):
        model = _instance_model(n, seed, inst, False)
        phi = mcmc.exact_phi(model) if with_gap else None
        for kind in proposals:
            spec = mcmc.proposal_spec(kind).with_model(model) if mcmc.proposal_spec(kind).is_quantum \
                else mcmc.proposal_spec(kind)
            delta = math.nan
            if with_gap and n <= mcmc.KERNEL_MAX_N:
                T = mcmc.build_transition_matrix(spec, model, seed=[seed, n, inst])
                delta = mcmc.spectral_gap(T, phi)
            for c in range(chains):
                res = mcmc.run_chain(spec, model, samples, burn_in, mcmc.chain_seed(seed, inst * 10007 + c))
                d = mcmc.diagnostics(res, model)
                rows.append((kind, n, inst, c, samples, d["l2_error"], d["tv_distance"],
                             res.acceptance_rate, delta))
    rows.sort(key=lambda r: (r[2], r[3], proposals.index(r[0])))
    means = {k: float(np.mean([r[5] for r in rows if r[0] == k])) for k in proposals}
    return rows, {"n": n, "instances": instances, "chains": chains, "samples": samples,
                  "mean_l2_error": means}


def cmd_benchmark_convergence(args) -> int:
    proposals = [p.strip() for p in args.proposals.split(",") if p.strip()]
    for kind in proposals:
        mcmc.proposal_spec(kind)
    if min(args.instances, args.chains, args.samples) < 1:
        raise ConfigError("instances, chains and samples must be positive")
    rows, summary = convergence_benchmark(args.n, args.instances, args.chains, args.samples,
                                          proposals, args.seed, args.burn_in, not args.no_gap)
    run = Run(args, f"{args.out}.manifest.json")
    write_csv(run.add(args.out), CONVERGENCE_HEADER, rows)
    write_json(run.add(f"{args.out}.summary.json"), summary)
    run.finish()
    for k, v in summary["mean_l2_error"].items():
        print(f"{k}: mean l2 error {v:.4g}")
    return 0


# ---------------------------------------------------------------------------
# fit-check and circuit


def _params_source(args) -> rbm.RbmParams:
    if args.params:
        return rbm.RbmParams.load(args.params)
    if args.random is None:
        raise ConfigError("give --params or --random N[,M]")
    nm = _parse_ints(args.random)
    n = nm[0]
    m = nm[1] if len(nm) > 1 else None
    return rbm.random_init(n, m, 1.0, args.scale, seed=args.seed)


def cmd_fit_check(args) -> int:
    params = _params_source(args)
    configs, n_top, n_rand = surrogate.select_fit_configs(params, args.fit_total, args.fit_top_fraction,
                                                          seed=args.seed, return_counts=True)
    model, report = surrogate.fit(params, configs, num_top=n_top)
    doc = {"n": params.n, "m": params.m, "report": dataclasses.asdict(report), "model": model.to_json()}
    if params.n <= 16:
        lk = surrogate.log_kappa(params, model, all_configs(params.n))
        rho = np.exp(rbm.log_rho_diag(params, all_configs(params.n)))
        rho /= rho.sum()
        doc["log_kappa_range"] = [float(lk.min()), float(lk.max())]
        doc["tv_rho_phi"] = float(0.5 * np.abs(rho - mcmc.exact_phi(model)).sum())
        if args.top_q:
            got = [config_to_index(v) for v in surrogate.top_q_configs(params, args.top_q)]
            best = np.argsort(-rbm.log_rho_diag(params, all_configs(params.n)), kind="stable")
            doc["top_q_overlap"] = len(set(got) & set(best[:args.top_q].tolist())) / args.top_q
    run = Run(args, f"{args.out}.manifest.json")
    write_json(run.add(args.out), doc)
    if args.model_out:
        model.save(run.add(args.model_out))
    run.finish()
    print(f"residual {report.refined_residual:.4g} flagged {report.flagged}")
    return 0


def cmd_circuit(args) -> int:
    if args.model:
        model = surrogate.SurrogateModel.from_json(_load_json(args.model))
    elif args.params or args.random:
        model, _ = surrogate.fit(_params_source(args), seed=args.seed)
    else:
        raise ConfigError("give --model, --params or --random")
    p = qs.ProposalCircuitParams(-np.asarray(model.l), model.J, args.gamma, args.tau, args.dt,
                                 n_trot=args.layers)
    text = qs.emit_circuit(p, args.basis, args.format)
    report = qs.resource_report(p, "cnot" if args.basis == "native" else args.basis)
    run = Run(args, f"{args.out}.manifest.json")
    _atomic_write(run.add(args.out), text)
    write_json(run.add(f"{args.out}.resources.json"), report)
    run.finish()
    print(f"{report['layers']} layers, {report['two_qubit_gates']} entangling gates, depth {report['depth']}")
    return 0


# ---------------------------------------------------------------------------
# parser


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="qevmc", description=__doc__.splitlines()[0])
    ap.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    ap.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen-xxz", help="write an XXZ chain Hamiltonian file")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--J", type=float, default=1.0)
    p.add_argument("--delta", type=float, required=True)
    p.add_argument("--periodic", action="store_true")
    p.add_argument("--out", required=True)
    p.add_argument("--force", action="store_true", help="overwrite an existing file")
    p.set_defaults(func=cmd_gen_xxz)

    p = sub.add_parser("train", help="train the RBM on one or more Hamiltonians")
    p.add_argument("hamiltonians", nargs="*", help="Hamiltonian files, warm-started in order")
    p.add_argument("--xxz-sweep", help="comma-separated anisotropies for a built-in XXZ sweep")
    p.add_argument("--n", type=int, default=8, help="chain length for --xxz-sweep")
    p.add_argument("--J", type=float, default=1.0)
    p.add_argument("--periodic", action="store_true")
    p.add_argument("--restart", choices=["phase", "always", "never"],
                   help="when to start cold instead of warm (sweep default phase, files default never)")
    p.add_argument("--config", help="JSON file with TrainingConfig keys")
    p.add_argument("--out-prefix", required=True)
    p.add_argument("--epochs", type=int)
    p.add_argument("--samples", type=int)
    p.add_argument("--burn-in", type=float)
    p.add_argument("--proposal")
    p.add_argument("--lr", type=float)
    p.add_argument("--optimizer", choices=["adam", "sgd"])
    p.add_argument("--fit-total", type=int)
    p.add_argument("--fit-top-fraction", type=float)
    p.add_argument("--tol", type=float)
    p.add_argument("--convergence-count", type=int)
    p.add_argument("--window", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--warm-start", help="RBM parameter snapshot to start from")
    p.add_argument("--hidden", type=int)
    p.add_argument("--beta", type=float)
    p.add_argument("--init-scale", type=float)
    p.add_argument("--phase-init", choices=["none", "staggered"])
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("ed", help="exact ground state of a Hamiltonian file")
    p.add_argument("hamiltonian")
    p.add_argument("--site", type=int, help="also report <Z_site Z_j> for all j")
    p.add_argument("--levels", type=int, default=8)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_ed)

    p = sub.add_parser("correlate", help="<Z_i Z_j> profile of a parameter snapshot")
    p.add_argument("params")
    p.add_argument("--site", type=int, default=0)
    p.add_argument("--hamiltonian", help="compare against the exact ground state of this file")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_correlate)

    p = sub.add_parser("benchmark-gap", help="spectral gaps on random Ising instances")
    p.add_argument("--n-list", default="4-8")
    p.add_argument("--instances", type=int, default=50)
    p.add_argument("--proposals", default="A,H")
    p.add_argument("--uniform", action="store_true", help="use the uniform distribution instead")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_benchmark_gap)

    p = sub.add_parser("benchmark-convergence", help="chain l2 error against the exact distribution")
    p.add_argument("--n", type=int, default=8)
    p.add_argument("--instances", type=int, default=20)
    p.add_argument("--chains", type=int, default=10)
    p.add_argument("--samples", type=int, default=10000)
    p.add_argument("--burn-in", type=float, default=0.1)
    p.add_argument("--proposals", default="A,H")
    p.add_argument("--no-gap", action="store_true", help="skip the per-instance spectral gap")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_benchmark_convergence)

    for name, func, hlp in (("fit-check", cmd_fit_check, "fit the surrogate to RBM parameters"),
                            ("circuit", cmd_circuit, "emit the Trotter proposal circuit")):
        p = sub.add_parser(name, help=hlp)
        p.add_argument("--params", help="RBM parameter snapshot")
        p.add_argument("--random", help="random RBM with N[,M] units instead")
        p.add_argument("--scale", type=float, default=0.5)
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--out", required=True)
        p.set_defaults(func=func)
        if name == "fit-check":
            p.add_argument("--fit-total", type=int)
            p.add_argument("--fit-top-fraction", type=float, default=0.25)
            p.add_argument("--top-q", type=int, default=0)
            p.add_argument("--model-out", help="also save the fitted surrogate")
        else:
            p.add_argument("--model", help="surrogate model JSON")
            p.add_argument("--gamma", type=float, default=0.425)
            p.add_argument("--tau", type=float, default=11.0)
            p.add_argument("--dt", type=float, default=0.2)
            p.add_argument("--layers", type=int, help="override the number of Trotter layers")
            p.add_argument("--basis", choices=["native", "cnot", "ecr"], default="cnot")
            p.add_argument("--format", choices=["text", "qasm"], default="text")
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except NumericalError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except (ConfigError, OSError, KeyError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
