"""Command-line surface tying the pipeline together.

Every command writes its outputs plus a manifest recording the command, the
resolved configuration, the seed, sha256 digests of the inputs, the output
names and the tool version.  Outputs are byte-deterministic: rerunning with
an equal manifest reproduces them exactly, for any ``--threads`` value.

Exit codes: 0 success, 1 usage error, 2 data error.
"""
from __future__ import annotations

import argparse
import hashlib
import json
import os
import sys
from datetime import date
from pathlib import Path

import numpy as np

from . import __version__, bankstrat, baselines, classify, inference, knockout, netcore, synth
from .errors import BlockscopeError
from .parallel import default_threads

SEED_ENV = "BLOCKSCOPE_SEED"


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def _stable_json(obj) -> str:
    return json.dumps(obj, sort_keys=True, indent=2) + "\n"


def _sha256(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


def _resolve_seed(args) -> int:
    if getattr(args, "seed", None) is not None:
        return args.seed
    env = os.environ.get(SEED_ENV)
    if env is not None:
        try:
            return int(env)
        except ValueError:
            raise UsageError(f"{SEED_ENV} must be an integer, got {env!r}") from None
    return 0


def _load_flag_config(args) -> dict:
    path = getattr(args, "config", None)
    if path is None:
        return {}
    cfg = json.loads(Path(path).read_text(encoding="utf-8"))
    if not isinstance(cfg, dict):
        raise BlockscopeError(f"config file {path} must hold a JSON object")
    return cfg


def _setting(args, config: dict, name: str, default):
    # explicit flag wins, then the config file, then the default
    value = getattr(args, name, None)
    if value is not None:
        return value
    if name in config:
        return config[name]
    return default


def _inference_config(args, config: dict, seed: int) -> inference.InferenceConfig:
    return inference.InferenceConfig(
        restarts=int(_setting(args, config, "restarts", 4)),
        sweeps_per_restart=int(_setting(args, config, "sweeps", 60)),
        seed=seed,
    )


def _write_manifest(out_base: Path, command: str, config: dict, seed, inputs, outputs) -> str:
    manifest_name = out_base.name + ".manifest.json"
    manifest = {
        "command": command,
        "config": config,
        "seed": seed,
        "inputs": {str(p): _sha256(Path(p)) for p in inputs},
        "outputs": sorted(outputs),
        "tool_version": __version__,
    }
    (out_base.parent / manifest_name).write_text(_stable_json(manifest), encoding="utf-8")
    return manifest_name


def _write_csv(path: Path, body: str, manifest_name: str) -> None:
    path.write_text(f"# manifest: {manifest_name}\n{body}", encoding="utf-8")


def _write_json(path: Path, payload: dict, manifest_name: str) -> None:
    payload = dict(payload)
    payload["manifest"] = manifest_name
    path.write_text(_stable_json(payload), encoding="utf-8")


def _window_dict(window: netcore.AggregationWindow | None):
    if window is None:
        return None
    return {"start": window.start.isoformat(), "span": window.span}


def _label_dict(label: classify.StructureLabel) -> dict:
    return {"label": label.value, "core_block": label.core_block}


# ---------------------------------------------------------------------------
# commands


def _cmd_ingest(args) -> int:
    txs = netcore.ingest(args.txs, domestic_only=args.domestic_only)
    out = Path(args.out)
    rows = ["date,lender_id,borrower_id,volume_eur,domestic"]
    for t in txs:
        rows.append(
            f"{t.day.isoformat()},{t.lender},{t.borrower},{t.volume!r},{1 if t.domestic else 0}"
        )
    manifest = _write_manifest(
        out, "ingest", {"domestic_only": args.domestic_only}, None, [args.txs], [out.name]
    )
    _write_csv(out, "\n".join(rows) + "\n", manifest)
    return 0


def _cmd_aggregate(args) -> int:
    config = _load_flag_config(args)
    scale = _setting(args, config, "scale", "week")
    if scale not in netcore.SPAN_DAYS:
        raise UsageError(f"--scale must be one of {sorted(netcore.SPAN_DAYS)}")
    txs = netcore.ingest(args.txs, domestic_only=args.domestic_only)
    outdir = Path(args.out)
    outdir.mkdir(parents=True, exist_ok=True)
    outputs = []
    if txs:
        span = netcore.SPAN_DAYS[scale]
        schedule = netcore.build_schedule(txs[0].day, txs[-1].day, span)
        for window in schedule:
            in_window = netcore.slice_transactions(txs, window)
            if not in_window:
                continue
            net = netcore.aggregate(in_window, window)
            if args.binary:
                net = netcore.binarize(net)
            elif args.weighted:
                net = netcore.discretize_weights(net)
            if args.symmetrize:
                net = netcore.symmetrize(net)
            name = f"net_{window.start.isoformat()}_{scale}.edges"
            netcore.write_edge_list(net, outdir / name)
            outputs.append(name)
    _write_manifest(
        outdir / "aggregate",
        "aggregate",
        {
            "scale": scale,
            "binary": args.binary,
            "weighted": args.weighted,
            "symmetrize": args.symmetrize,
            "domestic_only": args.domestic_only,
        },
        None,
        [args.txs],
        outputs,
    )
    return 0


def _cmd_infer(args) -> int:
    config = _load_flag_config(args)
    seed = _resolve_seed(args)
    cfg = _inference_config(args, config, seed)
    net = netcore.read_edge_list(args.net)
    result = inference.select_model(net, cfg)
    label = classify.label_structure(result)
    out = Path(args.out)
    manifest = _write_manifest(
        out,
        "infer",
        {"restarts": cfg.restarts, "sweeps": cfg.sweeps_per_restart},
        seed,
        [args.net],
        [out.name],
    )
    payload = result.to_dict()
    payload.update(_label_dict(label))
    payload["window"] = _window_dict(net.window)
    _write_json(out, payload, manifest)
    return 0


def _cmd_census(args) -> int:
    results_dir = Path(args.results)
    rows = []
    for path in sorted(results_dir.glob("*.json")):
        if path.name.endswith(".manifest.json"):
            continue
        payload = json.loads(path.read_text(encoding="utf-8"))
        if payload.get("window") is None:
            raise BlockscopeError(f"{path}: result has no window; census needs dated results")
        window = netcore.AggregationWindow(
            start=date.fromisoformat(payload["window"]["start"]),
            span=int(payload["window"]["span"]),
        )
        rows.append((window, inference.InferenceResult.from_dict(payload)))
    if not rows:
        raise BlockscopeError(f"no result files found in {results_dir}")
    table = classify.structure_census(rows)
    out = Path(args.out)
    manifest = _write_manifest(out, "census", {}, None, [], [out.name])
    _write_csv(out, table.to_csv(), manifest)
    return 0


def _cmd_baselines_detect(args) -> int:
    net = netcore.read_edge_list(args.net)
    if not net.kind.endswith("binary"):
        net = netcore.binarize(net)
    undirected = netcore.symmetrize(net) if net.directed else net
    directed = net if net.directed else None
    discrete = baselines.discrete_cp_degree_sort(undirected)
    sym = baselines.symmetric_continuous(undirected)
    payload = {
        "discrete": {
            "core": sorted(undirected.nodes[i] for i in discrete.core),
            "score": discrete.score,
        },
        "symmetric_continuous": {
            "coreness": {b: float(u) for b, u in zip(undirected.nodes, sym.u)},
            "objective": sym.objective,
        },
    }
    if directed is not None:
        asym = baselines.asymmetric_continuous(directed)
        tier = baselines.tiering_cp(directed)
        payload["asymmetric_continuous"] = {
            "out_coreness": {b: float(u) for b, u in zip(directed.nodes, asym.u)},
            "in_coreness": {b: float(v) for b, v in zip(directed.nodes, asym.v)},
            "objective": asym.objective,
        }
        payload["tiering"] = {
            "core": sorted(directed.nodes[i] for i in tier.core),
            "score": tier.score,
        }
    out = Path(args.out)
    manifest = _write_manifest(out, "baselines detect", {}, None, [args.net], [out.name])
    _write_json(out, payload, manifest)
    return 0


def _cmd_baselines_bias(args) -> int:
    seed = _resolve_seed(args)
    curve = baselines.expected_z_bias(
        n=args.n,
        core_size=args.core,
        p_cc=args.p_cc,
        p_cp=args.p_cp,
        p_pp=args.p_pp,
        samples=args.samples,
        seed=seed,
    )
    out = Path(args.out)
    config = {
        "n": args.n,
        "core": args.core,
        "p": [args.p_cc, args.p_cp, args.p_pp],
        "samples": args.samples,
    }
    manifest = _write_manifest(out, "baselines bias", config, seed, [], [out.name])
    _write_csv(out, curve.to_csv(), manifest)
    return 0


def _parse_quarter(text: str) -> tuple[int, int]:
    try:
        year, q = text.upper().split("Q")
        year, q = int(year), int(q)
    except ValueError:
        raise UsageError(f"quarter must look like 2011Q1, got {text!r}") from None
    if not 1 <= q <= 4:
        raise UsageError(f"quarter number out of range in {text!r}")
    return year, q


def _cmd_strategy(args) -> int:
    txs = netcore.ingest(args.txs, domestic_only=args.domestic_only)
    by_day: dict = {}
    for t in txs:
        by_day.setdefault(t.day, []).append(t)
    daily = []
    for day in sorted(by_day):
        window = netcore.AggregationWindow(day, 1) if day.weekday() < 5 else None
        if window is None:
            raise BlockscopeError(f"transaction dated on a weekend: {day}")
        daily.append((day, netcore.aggregate(by_day[day], window)))
    q_from = _parse_quarter(getattr(args, "from"))
    q_to = _parse_quarter(args.to)
    groups = bankstrat.group_by_quarter(daily)
    if q_from not in groups or q_to not in groups:
        missing = [q for q in (q_from, q_to) if q not in groups]
        raise BlockscopeError(f"no transactions in quarter(s) {missing}")
    roster = sorted({t.lender for t in txs} | {t.borrower for t in txs})
    cat_from = bankstrat.categorize(groups[q_from], roster)
    cat_to = bankstrat.categorize(groups[q_to], roster)
    matrix = bankstrat.transition_matrix(cat_from, cat_to)
    outdir = Path(args.out)
    outdir.mkdir(parents=True, exist_ok=True)
    manifest = _write_manifest(
        outdir / "strategy",
        "strategy",
        {"from": getattr(args, "from"), "to": args.to, "domestic_only": args.domestic_only},
        None,
        [args.txs],
        ["transitions.csv", "categories.json"],
    )
    _write_csv(outdir / "transitions.csv", matrix.to_csv(), manifest)
    _write_json(
        outdir / "categories.json",
        {
            "from": {b: cat_from[b] for b in roster},
            "to": {b: cat_to[b] for b in roster},
        },
        manifest,
    )
    return 0


def _cmd_knockout(args) -> int:
    config = _load_flag_config(args)
    seed = _resolve_seed(args)
    cfg = _inference_config(args, config, seed)
    threads = args.threads if args.threads is not None else default_threads()
    suite = synth.load_suite(args.suite)
    report = knockout.structural_score(suite.pairs, cfg, threads=threads)
    validation = knockout.score_ordered_validation(suite.pairs, report, cfg, threads=threads)
    outdir = Path(args.out)
    outdir.mkdir(parents=True, exist_ok=True)
    manifest = _write_manifest(
        outdir / "knockout",
        "knockout",
        {"restarts": cfg.restarts, "sweeps": cfg.sweeps_per_restart},
        seed,
        [args.suite],
        ["report.json", "score_histogram.csv", "validation.csv"],
    )
    _write_json(outdir / "report.json", report.to_dict(), manifest)
    _write_csv(outdir / "score_histogram.csv", knockout.histogram_csv(report), manifest)
    lines = ["pair,substitutions"]
    for idx, count in validation:
        lines.append(f"{idx},{count}")
    _write_csv(outdir / "validation.csv", "\n".join(lines) + "\n", manifest)
    return 0


def _scenario_for(n: int, n_networks: int, seed: int) -> synth.PlantedScenario:
    borrowers = round(n * synth.BIPARTITE_WEEKLY_SIZES[0] / sum(synth.BIPARTITE_WEEKLY_SIZES))
    sizes = (borrowers, n - borrowers)
    return synth.two_block_scenario(sizes, synth.BIPARTITE_WEEKLY_AFFINITY, n_networks, seed)


def _cmd_synth_generate(args) -> int:
    seed = _resolve_seed(args)
    scenario = _scenario_for(args.n, args.count, seed)
    nets = synth.generate_scenario(scenario)
    outdir = Path(args.out)
    outdir.mkdir(parents=True, exist_ok=True)
    outputs = ["scenario.json"]
    for i, net in enumerate(nets):
        name = f"planted_{i:03d}.edges"
        netcore.write_edge_list(net, outdir / name)
        outputs.append(name)
    manifest = _write_manifest(
        outdir / "generate",
        "synth generate",
        {"n": args.n, "count": args.count, "truth_label": scenario.truth_label},
        seed,
        [],
        outputs,
    )
    _write_json(outdir / "scenario.json", scenario.to_dict(), manifest)
    return 0


def _cmd_synth_removal(args) -> int:
    config = _load_flag_config(args)
    seed = _resolve_seed(args)
    cfg = _inference_config(args, config, seed)
    threads = args.threads if args.threads is not None else default_threads()
    scenario = _scenario_for(args.n, 1, seed)
    report = synth.removal_experiment(
        scenario, args.target, args.reps, seed, cfg=cfg, threads=threads
    )
    out = Path(args.out)
    manifest = _write_manifest(
        out,
        "synth removal",
        {
            "n": args.n,
            "target": args.target,
            "reps": args.reps,
            "restarts": cfg.restarts,
            "sweeps": cfg.sweeps_per_restart,
        },
        seed,
        [],
        [out.name],
    )
    _write_json(out, report.to_dict(), manifest)
    return 0


def _cmd_synth_suite(args) -> int:
    seed = _resolve_seed(args)
    threads = args.threads if args.threads is not None else default_threads()
    suite = synth.build_knockout_suite(args.pairs, args.critical, seed, threads=threads)
    outdir = Path(args.out)
    manifest_path = synth.save_suite(suite, outdir)
    _write_manifest(
        outdir / "suite-build",
        "synth knockout-suite",
        {"pairs": args.pairs, "critical": args.critical},
        seed,
        [],
        [manifest_path.name],
    )
    return 0


# ---------------------------------------------------------------------------
# parser


def _build_parser() -> _Parser:
    parser = _Parser(prog="blockscope", description=__doc__)
    parser.add_argument("--version", action="version", version=f"blockscope {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, seed=True, threads=False, infer=False):
        p.add_argument("--config", help="JSON file of flag defaults; explicit flags win")
        if seed:
            p.add_argument("--seed", type=int, default=None, help=f"falls back to ${SEED_ENV}, then 0")
        if threads:
            p.add_argument("--threads", type=int, default=None, help="worker threads (default: cores)")
        if infer:
            p.add_argument("--restarts", type=int, default=None)
            p.add_argument("--sweeps", type=int, default=None)

    p = sub.add_parser("ingest", help="validate and normalize a transactions CSV")
    p.add_argument("--txs", required=True)
    p.add_argument("--domestic-only", action="store_true")
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_ingest)

    p = sub.add_parser("aggregate", help="aggregate transactions into windowed networks")
    p.add_argument("--txs", required=True)
    p.add_argument("--scale", choices=sorted(netcore.SPAN_DAYS), default=None)
    mode = p.add_mutually_exclusive_group()
    mode.add_argument("--binary", action="store_true", help="emit binary networks")
    mode.add_argument("--weighted", action="store_true", help="emit log-discretized weights")
    p.add_argument("--symmetrize", action="store_true")
    p.add_argument("--domestic-only", action="store_true")
    p.add_argument("--out", required=True)
    common(p, seed=False)
    p.set_defaults(func=_cmd_aggregate)

    p = sub.add_parser("infer", help="two-block model selection on one network")
    p.add_argument("--net", required=True)
    p.add_argument("--out", required=True)
    common(p, infer=True)
    p.set_defaults(func=_cmd_infer)

    p = sub.add_parser("census", help="tabulate labels per year and timescale")
    p.add_argument("--results", required=True, help="directory of infer result JSONs")
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_census)

    p = sub.add_parser("baselines", help="score-based core-periphery detectors")
    bsub = p.add_subparsers(dest="baselines_command", required=True)
    pd = bsub.add_parser("detect", help="run the four detectors on a network")
    pd.add_argument("--net", required=True)
    pd.add_argument("--out", required=True)
    pd.set_defaults(func=_cmd_baselines_detect)
    pb = bsub.add_parser("bias", help="expected-score bias curve on planted graphs")
    pb.add_argument("--n", type=int, required=True)
    pb.add_argument("--core", type=int, required=True)
    pb.add_argument("--p-cc", type=float, required=True)
    pb.add_argument("--p-cp", type=float, required=True)
    pb.add_argument("--p-pp", type=float, required=True)
    pb.add_argument("--samples", type=int, default=200)
    pb.add_argument("--out", required=True)
    common(pb)
    pb.set_defaults(func=_cmd_baselines_bias)

    p = sub.add_parser("strategy", help="strategy categories and transition matrix")
    p.add_argument("--txs", required=True)
    p.add_argument("--from", required=True, help="first quarter, e.g. 2011Q1")
    p.add_argument("--to", required=True, help="second quarter, e.g. 2012Q2")
    p.add_argument("--domestic-only", action="store_true")
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_strategy)

    p = sub.add_parser("knockout", help="structural scores over a pair suite")
    p.add_argument("--suite", required=True, help="suite manifest JSON")
    p.add_argument("--out", required=True)
    common(p, threads=True, infer=True)
    p.set_defaults(func=_cmd_knockout)

    p = sub.add_parser("synth", help="planted-model generation and experiments")
    ssub = p.add_subparsers(dest="synth_command", required=True)
    pg = ssub.add_parser("generate", help="draw planted bipartite networks")
    pg.add_argument("--n", type=int, default=75)
    pg.add_argument("--count", type=int, default=10)
    pg.add_argument("--out", required=True)
    common(pg)
    pg.set_defaults(func=_cmd_synth_generate)
    pr = ssub.add_parser("removal", help="bank-removal robustness experiment")
    pr.add_argument("--n", type=int, default=75)
    pr.add_argument("--target", type=int, default=60)
    pr.add_argument("--reps", type=int, default=1000)
    pr.add_argument("--out", required=True)
    common(pr, threads=True, infer=True)
    pr.set_defaults(func=_cmd_synth_removal)
    pk = ssub.add_parser("knockout-suite", help="build a planted knockout suite")
    pk.add_argument("--pairs", type=int, default=60)
    pk.add_argument("--critical", type=int, default=2)
    pk.add_argument("--out", required=True)
    common(pk, threads=True)
    pk.set_defaults(func=_cmd_synth_suite)

    return parser


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
        return args.func(args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except BlockscopeError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
