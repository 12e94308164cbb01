"""Command-line pipelines: simulate, predict, recurse, report, replay.

Exit codes: 0 ok, 2 input error, 3 solver did not converge (outputs are
still written and flagged), 4 numerical or domain error.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import time

import numpy as np

from . import __version__, io
from .core import (
    ArgumentError,
    DomainError,
    FrequencyGrid,
    GenerationError,
    NumericalError,
    SpectralDensitySamples,
    SpeclinkError,
    StructureError,
    Support,
    evaluate,
    inverse_samples,
)
from .estimation import sample_covariances
from .objective import RegularizedProblem
from .recursive import flatten, initial_state, step
from .scoring import (
    partial_coherence,
    score_against_truth,
    score_matrix,
    threshold,
)
from .simulate import build_scenario, random_nested_scenario
from .solver import SolverConfig, check_moments, recover_primal, solve_regularized

EXIT_OK = 0
EXIT_INPUT = 2
EXIT_NOT_CONVERGED = 3
EXIT_NUMERICAL = 4


def _manifest(out_dir, command, parameters, inputs, outputs, t0):
    io.save_json(
        os.path.join(out_dir, "manifest.json"),
        {
            "format": "speclink-manifest",
            "version": 1,
            "artifact_version": __version__,
            "command": command,
            "parameters": parameters,
            "inputs": inputs,
            "outputs": sorted(outputs),
            "runtime_seconds": time.time() - t0,
        },
    )


def _solver_config(args):
    return SolverConfig(max_iters=args.max_iters, tol_grad=args.tol)


def _add_solver_flags(p):
    p.add_argument("--grid-size", type=int, default=512, help="frequency grid nodes")
    p.add_argument("--max-iters", type=int, default=5000)
    p.add_argument("--tol", type=float, default=1e-7, help="prox-gradient mapping tolerance")


# -- simulate -----------------------------------------------------------------


def _require(cfg, field, where="config"):
    if field not in cfg:
        raise ArgumentError("missing field %r in %s" % (field, where))
    return cfg[field]


def cmd_simulate(args):
    t0 = time.time()
    try:
        cfg = io.load_json(args.config)
    except (OSError, json.JSONDecodeError) as err:
        raise ArgumentError("cannot read scenario config: %s" % err)
    m = _require(cfg, "m")
    n = _require(cfg, "n")
    seed = cfg["seed"] if args.seed is None else args.seed
    if seed is None:
        raise ArgumentError("missing field 'seed' in config (or pass --seed)")
    windows = _require(cfg, "windows")
    if not windows:
        raise ArgumentError("config field 'windows' must be a nonempty list")
    lengths = [0] + [_require(w, "N", "windows[%d]" % k) for k, w in enumerate(windows)]
    added = [_require(w, "added_edges", "windows[%d]" % k) for k, w in enumerate(windows)]
    grid = FrequencyGrid.default(cfg.get("grid_size", 512))
    spec = random_nested_scenario(
        m,
        n,
        lengths,
        _require(cfg, "base_edges"),
        added,
        seed,
        grid=grid,
        amplitude=cfg.get("amplitude", 0.25),
        new_edge_amplitude=cfg.get("new_edge_amplitude", 0.8),
        min_eig=cfg.get("min_eig", 0.5),
        ma=cfg.get("ma", [1.0]),
    )
    scen = build_scenario(spec)
    out = args.out
    os.makedirs(out, exist_ok=True)
    outputs = []
    for k, model in enumerate(spec.models):
        name = "model_%02d.json" % k
        io.save_model(os.path.join(out, name), model)
        outputs.append(name)
        name = "truth_support_%02d.json" % k
        io.save_support(os.path.join(out, name), model.support)
        outputs.append(name)
    for k, y in enumerate(scen.windows, start=1):
        name = "window_%02d.csv" % k
        io.save_timeseries(os.path.join(out, name), y)
        outputs.append(name)
    params = dict(cfg)
    params["seed"] = seed
    _manifest(out, "simulate", params, {"config": os.path.abspath(args.config)}, outputs, t0)
    return EXIT_OK


# -- predict ------------------------------------------------------------------


def _load_prior(path, grid_size):
    """Prior inverse samples + prior support from a model/coeffs/samples file.

    The support defaults to the nonzero pattern of the prior inverse.
    """
    if path.endswith(".csv"):
        samples = io.load_samples(path)
        psi_inv = SpectralDensitySamples(samples.grid, samples.values, positive=True)
        support = _infer_support(psi_inv.values)
        return psi_inv, support
    obj = io.load_json(path)
    fmt = obj.get("format")
    grid = FrequencyGrid.default(grid_size)
    if fmt == "speclink-model":
        model = io.load_model(path)
        psi_inv = model.inverse_spectrum(grid)
        support = model.support or _infer_support(psi_inv.values)
        return psi_inv, support
    if fmt == "speclink-coeffs":
        p = io.load_coeffs(path)
        samples = evaluate(p, grid)
        psi_inv = SpectralDensitySamples(grid, samples.values, positive=True)
        return psi_inv, _infer_support(psi_inv.values)
    raise ArgumentError("unsupported prior file format %r" % fmt)


def _infer_support(values):
    mask = np.abs(values).max(axis=0) > 1e-12
    m = mask.shape[0]
    return Support(m, [(i, j) for i in range(m) for j in range(i + 1, m) if mask[i, j]])


def _run_identification(psi_inv, support, y, args, out_dir):
    """Shared predict pipeline; returns (exit_code, predicted_support, outputs)."""
    lags = sample_covariances(y, args.order)
    hard_mask = None
    if args.mask:
        hard_mask = io.load_support(args.mask)
    prob = RegularizedProblem(
        psi_inv=psi_inv,
        lags=lags,
        omega_sigma=support,
        lam=args.lam,
        hard_mask=hard_mask,
    )
    Q_o, report = solve_regularized(prob, _solver_config(args))
    phi = recover_primal(Q_o, psi_inv)
    gamma = partial_coherence(phi)
    G = score_matrix(gamma, support)
    predicted = threshold(G, args.threshold)
    if hard_mask is not None:
        predicted = hard_mask

    os.makedirs(out_dir, exist_ok=True)
    outputs = []

    def put(name, saver, *a):
        saver(os.path.join(out_dir, name), *a)
        outputs.append(name)

    put("q_coeffs.json", io.save_coeffs, Q_o)
    if getattr(args, "samples_format", "csv") == "npy":
        put("phi_samples.npy", io.save_samples_npy, phi)
    else:
        put("phi_samples.csv", io.save_samples, phi)
    put("scores.csv", io.save_scores, G)
    put("predicted_support.json", io.save_support, predicted)
    put("prior_support.json", io.save_support, support)
    kkt = report.kkt
    put(
        "kkt_report.json",
        io.save_json,
        {
            "passed": bool(kkt.passed),
            "tol": kkt.tol,
            "lambda": kkt.lam,
            "grad_inf_unpenalized": kkt.grad_inf_unpenalized,
            "groups_active": int(np.sum(kkt.group_active)),
            "groups_total": int(kkt.group_active.size),
            "max_group_grad_l1": float(kkt.group_grad_l1.max(initial=0.0)),
        },
    )
    check_on = hard_mask if hard_mask is not None else support
    moments = check_moments(phi, lags, check_on)
    off = ~check_on.mask()
    put(
        "moment_report.json",
        io.save_json,
        {
            "max_on_support": moments.max_residual,
            "max_off_support": float(
                np.abs(moments.residuals * off[None, :, :]).max()
            ),
            "converged": bool(report.converged),
            "iterations": int(report.iterations),
            "objective": report.objective,
            "prox_grad_norm": report.prox_grad_norm,
        },
    )
    code = EXIT_OK if report.converged else EXIT_NOT_CONVERGED
    return code, predicted, outputs


def cmd_predict(args):
    t0 = time.time()
    psi_inv, support = _load_prior(args.prior, args.grid_size)
    y = io.load_timeseries(args.data)
    code, _, outputs = _run_identification(psi_inv, support, y, args, args.out)
    _manifest(
        args.out,
        "predict",
        {
            "lambda": args.lam,
            "threshold": args.threshold,
            "order": args.order,
            "grid_size": args.grid_size,
            "max_iters": args.max_iters,
            "tol": args.tol,
            "samples_format": args.samples_format,
            "seed": args.seed,
            "converged": code == EXIT_OK,
        },
        {
            "prior": os.path.abspath(args.prior),
            "data": os.path.abspath(args.data),
            "mask": os.path.abspath(args.mask) if args.mask else None,
        },
        outputs,
        t0,
    )
    return code


# -- recurse ------------------------------------------------------------------


def cmd_recurse(args):
    t0 = time.time()
    scen_dir = args.scenario
    prior_path = os.path.join(scen_dir, "model_00.json")
    if not os.path.exists(prior_path):
        raise ArgumentError("scenario directory lacks model_00.json")
    windows = sorted(
        f for f in os.listdir(scen_dir) if f.startswith("window_") and f.endswith(".csv")
    )
    if not windows:
        raise ArgumentError("scenario directory has no window CSV files")
    prior = io.load_model(prior_path)
    grid = FrequencyGrid.default(args.grid_size)
    psi_inv = prior.inverse_spectrum(grid)
    state = initial_state(psi_inv, prior.support, args.order, base_degree=prior.n)
    cfg = _solver_config(args)
    os.makedirs(args.out, exist_ok=True)
    outputs = []
    metrics = []
    all_converged = True
    for k, wname in enumerate(windows, start=1):
        y = io.load_timeseries(os.path.join(scen_dir, wname))
        state = step(state, y, args.lam, args.threshold, cfg)
        report = state.reports[-1]
        all_converged = all_converged and report.converged
        wdir = os.path.join(args.out, "window_%02d" % k)
        os.makedirs(wdir, exist_ok=True)
        io.save_coeffs(os.path.join(wdir, "q_coeffs.json"), state.increments[-1])
        io.save_scores(os.path.join(wdir, "scores.csv"), state.scores[-1])
        io.save_support(os.path.join(wdir, "predicted_support.json"), state.support)
        phi = inverse_samples(state.current_inverse)
        io.save_samples(os.path.join(wdir, "phi_samples.csv"), phi)
        outputs += [
            "window_%02d/q_coeffs.json" % k,
            "window_%02d/scores.csv" % k,
            "window_%02d/predicted_support.json" % k,
            "window_%02d/phi_samples.csv" % k,
        ]
        entry = {
            "window": k,
            "converged": bool(report.converged),
            "iterations": int(report.iterations),
            "objective": report.objective,
            "edges": sorted(map(list, state.support.off_diagonal())),
        }
        truth_path = os.path.join(scen_dir, "truth_support_%02d.json" % k)
        if os.path.exists(truth_path):
            truth = io.load_support(truth_path)
            base = io.load_support(os.path.join(scen_dir, "truth_support_00.json"))
            met = score_against_truth(state.support, truth, base)
            entry["vs_truth"] = {
                "tp": met.tp,
                "fp": met.fp,
                "fn": met.fn,
                "precision": met.precision,
                "recall": met.recall,
                "f1": met.f1,
            }
        metrics.append(entry)
    io.save_support(os.path.join(args.out, "final_support.json"), state.support)
    io.save_json(os.path.join(args.out, "metrics.json"), metrics)
    outputs += ["final_support.json", "metrics.json"]
    _manifest(
        args.out,
        "recurse",
        {
            "lambda": args.lam,
            "threshold": args.threshold,
            "order": args.order,
            "grid_size": args.grid_size,
            "max_iters": args.max_iters,
            "tol": args.tol,
            "seed": args.seed,
        },
        {"scenario": os.path.abspath(scen_dir)},
        outputs,
        t0,
    )
    return EXIT_OK if all_converged else EXIT_NOT_CONVERGED


# -- report -------------------------------------------------------------------


def _roc_rows(G, truth, omega_sigma):
    candidates = sorted(omega_sigma.complement_pairs())
    positives = {p for p in candidates if p in truth}
    negatives = [p for p in candidates if p not in positives]
    rows = []
    thresholds = [np.inf] + sorted({s for s in G.scores.values()}, reverse=True) + [0.0]
    for t in thresholds:
        pred = {p for p, s in G.scores.items() if s > t}
        tp = len(pred & positives)
        fp = len(pred) - tp
        tpr = tp / len(positives) if positives else 1.0
        fpr = fp / len(negatives) if negatives else 0.0
        rows.append((t, fpr, tpr))
    return rows


def cmd_report(args):
    t0 = time.time()
    run = args.run
    scores_path = os.path.join(run, "scores.csv")
    phi_path = os.path.join(run, "phi_samples.csv")
    if not os.path.exists(phi_path) and os.path.exists(phi_path[:-4] + ".npy"):
        phi_path = phi_path[:-4] + ".npy"
    pred_path = os.path.join(run, "predicted_support.json")
    for p in (scores_path, phi_path, pred_path):
        if not os.path.exists(p):
            raise ArgumentError("run directory lacks %s" % os.path.basename(p))
    G = io.load_scores(scores_path)
    phi = (
        io.load_samples_npy(phi_path)
        if phi_path.endswith(".npy")
        else io.load_samples(phi_path)
    )
    predicted = io.load_support(pred_path)
    prior_path = os.path.join(run, "prior_support.json")
    prior = io.load_support(prior_path) if os.path.exists(prior_path) else G.omega_sigma
    truth = io.load_support(args.truth) if args.truth else None

    os.makedirs(args.out, exist_ok=True)
    outputs = []

    # (a) score heatmap (long form, one row per upper-triangle cell)
    io.save_scores(os.path.join(args.out, "scores_heatmap.csv"), G)
    outputs.append("scores_heatmap.csv")

    # (b) per-entry magnitude curves of the estimated inverse spectrum
    inv = inverse_samples(
        SpectralDensitySamples(phi.grid, phi.values, positive=True)
    )
    rows = ["node_index,theta,i,j,abs"]
    for l in range(phi.grid.L):
        for i in range(phi.m):
            for j in range(phi.m):
                rows.append(
                    "%d,%s,%d,%d,%s"
                    % (
                        l,
                        repr(float(phi.grid.nodes[l])),
                        i,
                        j,
                        repr(float(abs(inv.values[l, i, j]))),
                    )
                )
    io.atomic_write(
        os.path.join(args.out, "inverse_spectrum.csv"), "\r\n".join(rows) + "\r\n"
    )
    outputs.append("inverse_spectrum.csv")

    # (c) support comparison grid
    rows = ["i,j,in_prior,in_predicted,in_truth"]
    for i in range(predicted.m):
        for j in range(i + 1, predicted.m):
            rows.append(
                "%d,%d,%d,%d,%d"
                % (
                    i,
                    j,
                    1 if (i, j) in prior else 0,
                    1 if (i, j) in predicted else 0,
                    -1 if truth is None else (1 if (i, j) in truth else 0),
                )
            )
    io.atomic_write(
        os.path.join(args.out, "support_grid.csv"), "\r\n".join(rows) + "\r\n"
    )
    outputs.append("support_grid.csv")

    # (d) ROC sweep over the threshold, when truth is known
    if truth is not None:
        rows = ["t_r,fpr,tpr"]
        for t, fpr, tpr in _roc_rows(G, truth, prior):
            rows.append("%s,%s,%s" % (repr(float(t)), repr(fpr), repr(tpr)))
        io.atomic_write(os.path.join(args.out, "roc.csv"), "\r\n".join(rows) + "\r\n")
        outputs.append("roc.csv")

    _manifest(
        args.out,
        "report",
        {"truth": os.path.abspath(args.truth) if args.truth else None},
        {"run": os.path.abspath(run)},
        outputs,
        t0,
    )
    return EXIT_OK


# -- replay -------------------------------------------------------------------


def cmd_replay(args):
    man = io.load_json(args.manifest)
    if man.get("format") != "speclink-manifest":
        raise ArgumentError("not a speclink manifest")
    command = man["command"]
    params = man["parameters"]
    inputs = man["inputs"]
    argv = [command]
    if command == "simulate":
        # the manifest embeds the resolved config; write it next to the output
        os.makedirs(args.out, exist_ok=True)
        cfg_path = os.path.join(args.out, "replayed_config.json")
        io.save_json(cfg_path, {k: v for k, v in params.items()})
        argv += [cfg_path, "--out", args.out]
    elif command == "predict":
        argv += [
            "--prior", inputs["prior"], "--data", inputs["data"],
            "--lambda", str(params["lambda"]), "--threshold", str(params["threshold"]),
            "--order", str(params["order"]), "--grid-size", str(params["grid_size"]),
            "--max-iters", str(params["max_iters"]), "--tol", str(params["tol"]),
            "--samples-format", params.get("samples_format", "csv"),
            "--out", args.out,
        ]
        if inputs.get("mask"):
            argv += ["--mask", inputs["mask"]]
    elif command == "recurse":
        argv += [
            "--scenario", inputs["scenario"],
            "--lambda", str(params["lambda"]), "--threshold", str(params["threshold"]),
            "--order", str(params["order"]), "--grid-size", str(params["grid_size"]),
            "--max-iters", str(params["max_iters"]), "--tol", str(params["tol"]),
            "--out", args.out,
        ]
    elif command == "report":
        argv += ["--run", inputs["run"], "--out", args.out]
        if params.get("truth"):
            argv += ["--truth", params["truth"]]
    else:
        raise ArgumentError("cannot replay command %r" % command)
    return main(argv)


# -- entry point ---------------------------------------------------------------


def _build_parser():
    ap = argparse.ArgumentParser(
        prog="speclink",
        description="Sparse dynamic graphical-model identification and link prediction",
    )
    ap.add_argument("--version", action="version", version="speclink " + __version__)
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="generate a synthetic scenario directory")
    p.add_argument("config", help="scenario config JSON")
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int, default=None, help="override the config seed")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("predict", help="identify a model and score candidate edges")
    p.add_argument("--prior", required=True, help="model/coeffs JSON or samples CSV")
    p.add_argument("--data", required=True, help="time-series CSV (N rows, m columns)")
    p.add_argument("--lambda", dest="lam", type=float, default=0.0427)
    p.add_argument("--threshold", type=float, default=3e-4)
    p.add_argument("--order", type=int, default=2, help="lag order n of the dual variable")
    p.add_argument("--mask", default=None, help="hard target-support JSON (sets lambda to 0)")
    p.add_argument("--samples-format", choices=("csv", "npy"), default="csv",
                   help="format of the recovered-spectrum samples file")
    p.add_argument("--seed", type=int, default=None, help="recorded in the manifest")
    p.add_argument("--out", required=True)
    _add_solver_flags(p)
    p.set_defaults(func=cmd_predict)

    p = sub.add_parser("recurse", help="run the recursive scheme over a scenario")
    p.add_argument("--scenario", required=True, help="directory from `speclink simulate`")
    p.add_argument("--lambda", dest="lam", type=float, default=0.0427)
    p.add_argument("--threshold", type=float, default=3e-4)
    p.add_argument("--order", type=int, default=2)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--out", required=True)
    _add_solver_flags(p)
    p.set_defaults(func=cmd_recurse)

    p = sub.add_parser("report", help="emit plot-ready CSV bundles from a run")
    p.add_argument("--run", required=True, help="directory written by predict/recurse")
    p.add_argument("--truth", default=None, help="truth support JSON for ROC output")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_report)

    p = sub.add_parser("replay", help="re-execute a run from its manifest")
    p.add_argument("manifest")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_replay)
    return ap


def main(argv=None):
    ap = _build_parser()
    args = ap.parse_args(argv)
    if getattr(args, "mask", None) is not None:
        args.lam = 0.0
    try:
        return args.func(args)
    except (ArgumentError, StructureError, GenerationError) as err:
        print("error: %s" % err, file=sys.stderr)
        return EXIT_INPUT
    except (DomainError, NumericalError) as err:
        print("error: %s" % err, file=sys.stderr)
        return EXIT_NUMERICAL
    except (OSError, json.JSONDecodeError) as err:
        print("error: %s" % err, file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
