"""Command-line interface.

Subcommands: ``gen-data`` (sample the configured distributions),
``solve`` (run the transport pipeline on two CSVs), ``benchmark``
(accuracy sweeps against the closed-form reference), ``emit-plots``
(plot data and figures from a result document).

One YAML config drives everything; any field can be overridden on the
command line by its config path (``--solver.tolerance 1e-6``).  Exit
codes: 0 success, 2 input/configuration error, 3 finished without
meeting the convergence criteria (results still written).
"""

from __future__ import annotations

import argparse
import os
import sys
import time
from concurrent.futures import ThreadPoolExecutor

from . import datasets, io, metrics, plots
from .runconfig import ConfigError, apply_overrides, load_config
from .transport import apply_map, solve_transport

__all__ = ["main"]

EXIT_OK = 0
EXIT_INPUT = 2
EXIT_NOT_CONVERGED = 3


def _threads() -> int:
    raw = os.environ.get("ADOT_THREADS", "")
    try:
        return max(0, int(raw))
    except ValueError:
        return 0


def _deterministic(cfg) -> bool:
    return bool(cfg["deterministic"]) and _threads() == 0


# ---------------------------------------------------------------------------
# gen-data
# ---------------------------------------------------------------------------

def cmd_gen_data(cfg, out: str) -> int:
    gen = cfg["generate"]
    os.makedirs(out, exist_ok=True)
    jobs = []
    if "pair" in gen:
        doc = gen["pair"]
        spec = datasets.spec_from_dict(doc)
        if not isinstance(spec.shape, datasets.PowerPairSpec):
            print("error: generate.pair must have kind power_pair", file=sys.stderr)
            return EXIT_INPUT
        X, Y, _ref = datasets.power_pair(spec.n, spec.shape.epsilon, spec.seed)
        jobs = [("source", X, doc), ("target", Y, dict(doc, derived="power map of source"))]
    else:
        for name in ("source", "target"):
            if name not in gen:
                print(f"error: generate.{name} missing from config", file=sys.stderr)
                return EXIT_INPUT
            spec = datasets.spec_from_dict(gen[name])
            jobs.append((name, datasets.generate(spec), gen[name]))
    header = bool(cfg.get("csv_header", False))
    for name, X, doc in jobs:
        path = os.path.join(out, f"{name}.csv")
        io.write_samples(path, X, header=header)
        io.write_json(path.replace(".csv", ".meta.json"),
                      io.generator_metadata(int(doc.get("seed", cfg["seed"])),
                                            {"spec": doc, "rows": int(X.shape[0]),
                                             "columns": int(X.shape[1])}))
        print(f"wrote {path} ({X.shape[0]} x {X.shape[1]})")
    return EXIT_OK


# ---------------------------------------------------------------------------
# solve
# ---------------------------------------------------------------------------

def _data_paths(cfg, out: str):
    data = cfg["data"]
    src = data.get("source", os.path.join(out, "source.csv"))
    tgt = data.get("target", os.path.join(out, "target.csv"))
    return src, tgt


def cmd_solve(cfg, out: str) -> int:
    src_path, tgt_path = _data_paths(cfg, out)
    for p in (src_path, tgt_path):
        if not os.path.exists(p):
            print(f"error: missing input file {p}", file=sys.stderr)
            return EXIT_INPUT
    X = io.read_samples(src_path)
    Y = io.read_samples(tgt_path)
    if X.shape[1] != Y.shape[1]:
        print(f"error: dimension mismatch {X.shape[1]} vs {Y.shape[1]}", file=sys.stderr)
        return EXIT_INPUT
    gcfg = cfg.global_config()
    res = solve_transport(X, Y, gcfg)
    os.makedirs(out, exist_ok=True)
    transported = apply_map(res.composed, X)
    io.write_samples(os.path.join(out, "transported.csv"), transported)
    doc = {
        "format_version": io.RESULT_FORMAT_VERSION,
        "source_csv": src_path,
        "target_csv": tgt_path,
        "seed": int(cfg["seed"]),
        "config": {
            "transport": cfg["transport"],
            "features": cfg["features"],
            "penalty": cfg["penalty"],
            "solver": cfg["solver"],
        },
        "composed": io.composed_to_doc(res.composed),
        "final_discriminator": io.discriminator_to_doc(
            res.diagnostics["final_discriminator"]),
        "sweeps": res.sweeps,
        "converged": bool(res.converged),
        "kl_final": res.kl_final,
        "cost": res.cost,
        "step_diagnostics": [
            {
                "step": t + 1,
                "iterations": s.iterations,
                "final_grad_norm": s.final_grad_norm,
                "rejected_steps": s.rejected_steps,
                "hit_max_iter": bool(s.diagnostics["hit_max_iter"]),
                "stalled": bool(s.diagnostics["stalled"]),
                "min_map_jacobian_eig": s.diagnostics["min_map_jacobian_eig"],
            }
            for t, s in enumerate(res.local_solutions)
        ],
        "lagrangian_traces": [
            [[float(p), float(c)] for p, c in s.lagrangian_trace]
            for s in res.local_solutions
        ],
    }
    io.write_json(os.path.join(out, "result.json"), doc)
    print(f"solved in {res.sweeps} sweep(s); kl={res.kl_final:.6g} cost={res.cost:.6g}")
    return EXIT_OK if res.converged else EXIT_NOT_CONVERGED


# ---------------------------------------------------------------------------
# benchmark
# ---------------------------------------------------------------------------

def _benchmark_rows(cfg):
    b = cfg["benchmark"]
    base = cfg.global_config()
    kind = b["kind"]
    params = list(b["params"])
    seeds = list(b["seeds"])
    runner = lambda p, s: metrics.convergence_suite(
        kind, [p], [s], epsilon=float(b["epsilon"]),
        n_fixed=int(b["n_fixed"]), K_fixed=int(b["k_fixed"]),
        base=base, grid_points=int(cfg["plots"]["grid_points"]))[0]
    cells = [(p, s) for p in params for s in seeds]
    threads = _threads()
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            rows = list(pool.map(lambda ps: runner(*ps), cells))
    else:
        rows = [runner(p, s) for p, s in cells]
    rows.sort(key=lambda r: (params.index(r.param), seeds.index(r.seed)))
    return rows


def cmd_benchmark(cfg, out: str) -> int:
    t0 = time.time()
    rows = _benchmark_rows(cfg)
    agg = metrics.aggregate_rows(rows)
    os.makedirs(out, exist_ok=True)
    deterministic = _deterministic(cfg)

    def fmt_runtime(r):
        # wall-clock time is inherently non-reproducible; deterministic
        # mode zeroes the column so artifacts are byte-identical
        return 0.0 if deterministic else r.runtime_s

    header = "param,seed,weighted_l2,linf,cost,runtime_s,error"
    with open(os.path.join(out, "benchmark.csv"), "w") as f:
        f.write(header + "\n")
        for r in rows:
            f.write(f"{r.param},{r.seed},{r.weighted_l2:.17g},{r.linf:.17g},"
                    f"{r.cost:.17g},{fmt_runtime(r):.17g},{r.error}\n")
    with open(os.path.join(out, "benchmark_mean.csv"), "w") as f:
        f.write("param,weighted_l2,linf,cost,runtime_s,error\n")
        for r in agg:
            f.write(f"{r.param},{r.weighted_l2:.17g},{r.linf:.17g},"
                    f"{r.cost:.17g},{fmt_runtime(r):.17g},{r.error}\n")
    failures = [r for r in rows if r.error]
    print(f"benchmark: {len(rows)} cells, {len(failures)} failed, "
          f"{time.time() - t0:.1f}s", file=sys.stderr)
    if len(failures) == len(rows):
        print("error: all benchmark cells failed", file=sys.stderr)
        return EXIT_INPUT
    return EXIT_OK


# ---------------------------------------------------------------------------
# emit-plots
# ---------------------------------------------------------------------------

def cmd_emit_plots(cfg, out: str) -> int:
    result_path = cfg.get("data.result", os.path.join(out, "result.json"))
    if not os.path.exists(result_path):
        print(f"error: missing result document {result_path}", file=sys.stderr)
        return EXIT_INPUT
    result = io.read_json(result_path)
    src = result.get("source_csv")
    tgt = result.get("target_csv")
    for p in (src, tgt):
        if p is None or not os.path.exists(p):
            print(f"error: result document references missing samples {p}",
                  file=sys.stderr)
            return EXIT_INPUT
    X = io.read_samples(src)
    Y = io.read_samples(tgt)
    p = cfg["plots"]
    written = plots.emit_plot_data(result, X, Y, out, bins=int(p["bins"]),
                                   grid_points=int(p["grid_points"]),
                                   render=bool(p["render"]))
    for path in written:
        print(f"wrote {path}")
    return EXIT_OK


# ---------------------------------------------------------------------------
# entry point
# ---------------------------------------------------------------------------

def _split_overrides(extra: list) -> list:
    pairs = []
    i = 0
    while i < len(extra):
        tok = extra[i]
        if not tok.startswith("--") or "." not in tok:
            raise ConfigError(f"unrecognized argument {tok!r}")
        if "=" in tok:
            path, raw = tok[2:].split("=", 1)
            pairs.append((path, raw))
            i += 1
        else:
            if i + 1 >= len(extra):
                raise ConfigError(f"override {tok} needs a value")
            pairs.append((tok[2:], extra[i + 1]))
            i += 2
    return pairs


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="adot",
        description="Adversarial sample-based optimal transport")
    parser.add_argument("command",
                        choices=["gen-data", "solve", "benchmark", "emit-plots"])
    parser.add_argument("--config", default=None, help="YAML config file")
    parser.add_argument("--seed", type=int, default=None, help="override config seed")
    parser.add_argument("--out", default=None, help="override output directory")
    args, extra = parser.parse_known_args(argv)
    try:
        cfg = load_config(args.config)
        overrides = _split_overrides(extra)
        if overrides:
            cfg = apply_overrides(cfg, overrides)
        if args.seed is not None:
            cfg.doc["seed"] = args.seed
        if args.out is not None:
            cfg.doc["out"] = args.out
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    out = cfg.doc["out"]
    try:
        if args.command == "gen-data":
            return cmd_gen_data(cfg, out)
        if args.command == "solve":
            return cmd_solve(cfg, out)
        if args.command == "benchmark":
            return cmd_benchmark(cfg, out)
        if args.command == "emit-plots":
            return cmd_emit_plots(cfg, out)
    except io.InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
