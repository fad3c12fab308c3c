"""Command line entry point: ``fleam <command> [flags]``.

Settings resolve in three layers: built-in defaults, then the ``[common]`` and
``[<command>]`` sections of the ``--config`` INI file, then explicit flags. The
resolved settings are printed as JSON before the command runs.

Exit status: 0 success, 1 runtime failure, 2 configuration or validation error.
"""

from __future__ import annotations

import argparse
import configparser
import csv
import json
import logging
import sys
from dataclasses import asdict
from importlib import resources
from pathlib import Path

log = logging.getLogger("fleam")

COMMON = {"seed": 0, "out": "runs", "verbose": False}

_TRAIN = {"dataset": None, "subset": 50000, "hidden": 100, "lr": 0.01, "batch": 32, "lam": 0.0,
          "folds": 10, "fold": 0, "seq_len": 1}

DEFAULTS = {
    "train-centralized": dict(_TRAIN, epochs=20),
    "train-federated": dict(_TRAIN, workers=4, rounds=20, local_epochs=1, mode="uniform", alpha=0.2,
                            weighting="size", local_only=False),
    "detect": {"benign": None, "packets": None, "synthetic": False, "hidden": 32, "context": 5,
               "q": 0.05, "gamma": 0.2, "window": 100, "epochs": 5, "lr": 0.1, "batch": 64,
               "baseline_windows": 300, "attack_share": 0.5},
    "simulate-mitigation": {"scenario": None, "trials": 1000, "bots": 1000,
                            "curve": "100,200,300,400,500,600,700,800,900,1000", "accuracy": True},
    "economics": {"prices": None, "classic_time": 1715.91, "fleam_time": 483.74, "lv": False,
                  "horizon": 20.0, "step": 1e-3, "alpha1": 1.0, "alpha2": 0.1, "alpha3": 0.1,
                  "alpha4": 1.0, "idle0": 5.0, "bots0": 5.0},
    "placement": {"topology": None, "routes": None, "k": 2},
    "report": {"runs": None},
    "synth-unsw": {"rows": 50000, "name": "unsw_synth.csv"},
}

HELP = {
    "train-centralized": "train the GRU classifier on the pooled training data",
    "train-federated": "train the GRU classifier by iterative model averaging across workers",
    "detect": "train a next-symbol detector, fit its baseline and classify packet windows",
    "simulate-mitigation": "Monte-Carlo mitigation delay and system-accuracy scenarios",
    "economics": "attack cost table and bot/resource dynamics",
    "placement": "fog-node centrality and checkpoint selection",
    "report": "merge run outputs into comparison tables",
    "synth-unsw": "write a synthetic UNSW-NB15-layout CSV",
}

PATH_KEYS = ("dataset", "topology", "prices", "scenario", "routes", "benign", "packets", "runs")


class CliError(Exception):
    """Configuration or validation failure (exit status 2)."""


def sample_file(name: str) -> str:
    return str(resources.files("fleam") / "data" / name)


# -- configuration -------------------------------------------------------------------


def _convert(key, raw, default):
    if not isinstance(raw, str) or default is None:
        return raw
    try:
        if isinstance(default, bool):
            low = raw.strip().lower()
            if low not in ("1", "0", "true", "false", "yes", "no", "on", "off"):
                raise ValueError(raw)
            return low in ("1", "true", "yes", "on")
        if isinstance(default, int):
            return int(raw)
        if isinstance(default, float):
            return float(raw)
    except ValueError:
        raise CliError(f"bad value for {key}: {raw!r}") from None
    return raw


def resolve(command: str, flags: dict) -> dict:
    cfg = dict(COMMON)
    cfg.update(DEFAULTS[command])
    cfg_path = flags.pop("config", None)
    if cfg_path:
        if not Path(cfg_path).is_file():
            raise CliError(f"--config: file not found: {cfg_path}")
        cp = configparser.ConfigParser()
        try:
            cp.read(cfg_path)
        except configparser.Error as e:
            raise CliError(f"--config: {e}") from None
        for section in ("common", command):
            if not cp.has_section(section):
                continue
            for k, v in cp.items(section):
                k = k.replace("-", "_")
                if k not in cfg:
                    raise CliError(f"--config: unknown key {k!r} in [{section}]")
                cfg[k] = _convert(k, v, cfg[k])
    for k, v in flags.items():
        cfg[k] = _convert(k, v, cfg.get(k))
    if cfg_path:
        cfg["config"] = cfg_path
    return cfg


def _require(cfg, key, why="is required"):
    if cfg.get(key) is None:
        raise CliError(f"--{key.replace('_', '-')} {why}")


def _check_paths(cfg):
    for key in PATH_KEYS:
        p = cfg.get(key)
        if p is not None and not Path(p).exists():
            raise CliError(f"--{key}: path does not exist: {p}")


# -- commands ------------------------------------------------------------------------


def _train_config(cfg, epochs):
    from .nn import TrainConfig

    return TrainConfig(learning_rate=cfg["lr"], batch_size=cfg["batch"], epochs=epochs,
                       lam=cfg["lam"], seed=cfg["seed"])


def _prepare(cfg, workers, mode="uniform", alpha=0.2):
    from . import dataset, pipeline

    _require(cfg, "dataset")
    _check_paths(cfg)
    recs = dataset.load_csv(cfg["dataset"])
    log.info("loaded %d records (%d rejected)", len(recs.labels), recs.rejected)
    plan = dataset.ShardPlan(n_workers=workers, mode=mode, alpha=alpha, n_folds=cfg["folds"],
                             fold=cfg["fold"], seed=cfg["seed"])
    subset = cfg["subset"] if cfg["subset"] > 0 else None
    return pipeline.prepare(recs, plan, subset, cfg["seq_len"])


def _progress(rec):
    log.info("step %d: loss %.5f accuracy %.4f", rec.round, rec.loss, rec.accuracy)


def cmd_train_centralized(cfg) -> dict:
    from . import pipeline

    prep = _prepare(cfg, 1)
    hist = pipeline.centralized(prep, cfg["hidden"], _train_config(cfg, cfg["epochs"]), _progress)
    pipeline.save_outputs(cfg["out"], prep, hist, cfg["hidden"], "centralized")
    return {"accuracy": hist[-1].accuracy, "epochs": len(hist) - 1, "test_records": len(prep.test[1])}


def cmd_train_federated(cfg) -> dict:
    from . import pipeline

    prep = _prepare(cfg, cfg["workers"], cfg["mode"], cfg["alpha"])
    tc = _train_config(cfg, cfg["local_epochs"])
    hist = pipeline.federated(prep, cfg["rounds"], cfg["hidden"], tc, cfg["local_epochs"],
                              weighting=cfg["weighting"], callback=_progress)
    out = pipeline.save_outputs(cfg["out"], prep, hist, cfg["hidden"], "federated")
    result = {"accuracy": hist[-1].accuracy, "rounds": len(hist) - 1,
              "shard_sizes": [len(s) for s in prep.partition.shards]}
    if cfg["local_only"]:
        accs = pipeline.local_only(prep, cfg["hidden"], tc.replace(epochs=cfg["rounds"]))
        with open(out / "local_only.csv", "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["worker", "records", "accuracy"])
            for i, (a, s) in enumerate(zip(accs, prep.partition.shards)):
                w.writerow([i, len(s), repr(a)])
        result["local_only"] = accs
    return result


def cmd_detect(cfg) -> dict:
    from . import detection, nn, traffic

    if not cfg["synthetic"]:
        _require(cfg, "benign", "is required (or pass --synthetic)")
        _require(cfg, "packets", "is required (or pass --synthetic)")
    _check_paths(cfg)
    seed, ts = cfg["seed"], cfg["window"]
    if cfg["synthetic"]:
        train_pk = traffic.benign_packets(20000, seed=seed + 11)
        base_windows = traffic.benign_windows(cfg["baseline_windows"], ts, seed=seed + 12)
        windows = traffic.benign_windows(50, ts, seed=seed + 13)
        windows += [detection.FlowWindow(traffic.mixed_window(ts, cfg["attack_share"], seed + k), 0, (0, 0), ts)
                    for k in range(50)]
        for i, w in enumerate(windows):
            w.window_id = i
    else:
        benign = detection.read_packets(cfg["benign"])
        cut = int(len(benign) * 0.7)
        train_pk = benign.iloc[:cut]
        base_windows = [w for w in detection.make_windows(benign.iloc[cut:], ts) if not w.partial]
        if not base_windows:
            raise CliError("--benign: too few packets left for the baseline windows")
        windows = detection.make_windows(detection.read_packets(cfg["packets"]), ts)
    tc = nn.TrainConfig(learning_rate=cfg["lr"], batch_size=cfg["batch"], epochs=cfg["epochs"], seed=seed)
    det = detection.train_symbol_model(train_pk, cfg["hidden"], cfg["context"], tc)
    det.fit_baseline(base_windows, cfg["q"], cfg["gamma"])
    out = Path(cfg["out"])
    out.mkdir(parents=True, exist_ok=True)
    nn.save_checkpoint(det.model, out / "detector.ckpt")
    det.symbols.save(out / "symbols.json")
    det.profile.save(out / "baseline.json")
    verdicts = det.classify_many(windows)
    with open(out / "verdicts.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["window", "packets", "scored", "flagged_fraction", "anomaly", "low_confidence"])
        for win, v in zip(windows, verdicts):
            w.writerow([win.window_id, len(win), v.scored, repr(v.flagged_fraction), int(v.anomaly),
                        int(v.low_confidence)])
    return {"windows": len(windows), "anomalous": sum(v.anomaly for v in verdicts),
            "symbol_classes": det.symbols.n_classes}


def cmd_simulate(cfg) -> dict:
    from . import detection, simulator as sim, traffic

    _check_paths(cfg)
    if cfg["scenario"]:
        try:
            scen, spec = sim.load_scenario(cfg["scenario"], cfg["seed"])
        except (ValueError, TypeError, KeyError) as e:
            raise CliError(f"--scenario: {e}") from None
    else:
        scen = sim.AttackScenario(bot_count=cfg["bots"], trials=cfg["trials"], seed=cfg["seed"])
        spec = sim.TrafficSpec(seed=cfg["seed"])
    try:
        counts = [int(x) for x in str(cfg["curve"]).split(",") if x.strip()]
    except ValueError:
        raise CliError(f"--curve: expected comma-separated bot counts, got {cfg['curve']!r}") from None
    out = Path(cfg["out"])
    out.mkdir(parents=True, exist_ok=True)

    comp = sim.compare_delay_models(scen)
    sim.write_reports_csv([("victim-centric", comp.victim), ("attacker-centric", comp.attacker)],
                          out / "delay_comparison.csv")
    with open(out / "delay_curve.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["bots", "victim_centric_s", "attacker_centric_s"])
        for row in sim.delay_curve(scen, counts):
            w.writerow([row[0], repr(row[1]), repr(row[2])])
    summary = {"scenario": asdict(scen), "delay": comp.summary()}

    if cfg["accuracy"]:
        from . import nn

        det = detection.train_symbol_model(traffic.benign_packets(20000, seed=spec.seed + 11),
                                           config=nn.TrainConfig(0.1, 64, 5, seed=spec.seed))
        det.fit_baseline(traffic.benign_windows(300, spec.window_size, seed=spec.seed + 12))
        grid = sim.accuracy_grid(sim.mixed_traffic(spec), det)
        sim.write_reports_csv([(f"{m}/{p}", r) for (m, p), r in grid.items()], out / "accuracy.csv")
        summary["traffic"] = asdict(spec)
        summary["accuracy"] = {f"{m}/{p}": r.summary() for (m, p), r in grid.items()}
    sim.write_summary_json(summary, out / "simulation.json")
    return summary["delay"]


def cmd_economics(cfg) -> dict:
    from . import economics as eco

    prices = cfg["prices"] or sample_file("prices.csv")
    cfg["prices"] = prices
    _check_paths(cfg)
    try:
        offers = eco.load_offers(prices)
    except (KeyError, ValueError) as e:
        raise CliError(f"--prices: {e}") from None
    rows = eco.cost_table(offers, cfg["classic_time"], cfg["fleam_time"])
    out = Path(cfg["out"])
    out.mkdir(parents=True, exist_ok=True)
    eco.write_cost_table(rows, out / "cost_table.csv")
    result = {"rows": len(rows)}
    if cfg["lv"]:
        p = eco.EconParams(alpha1=cfg["alpha1"], alpha2=cfg["alpha2"], alpha3=cfg["alpha3"],
                           alpha4=cfg["alpha4"], step=cfg["step"])
        tr = eco.lv_dynamics(p, cfg["idle0"], cfg["bots0"], cfg["horizon"])
        v = tr.first_integral(p)
        stride = max(1, len(tr.t) // 2000)
        with open(out / "lv.csv", "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["t", "idle", "bots", "first_integral"])
            for i in list(range(0, len(tr.t), stride)) + ([len(tr.t) - 1] if (len(tr.t) - 1) % stride else []):
                w.writerow([repr(tr.t[i]), repr(tr.idle[i]), repr(tr.bots[i]), repr(v[i])])
        result["lv_relative_drift"] = float(abs(v[-1] - v[0]) / abs(v[0]))
    return result


def _read_routes(path) -> list:
    routes = []
    for line in Path(path).read_text().splitlines():
        parts = line.split("#", 1)[0].split()
        if parts:
            routes.append(parts)
    return routes


def cmd_placement(cfg) -> dict:
    from . import placement as pl

    if cfg["topology"] is None:
        cfg["topology"] = sample_file("sample_topology.txt")
        if cfg["routes"] is None:
            cfg["routes"] = sample_file("sample_routes.txt")
    _check_paths(cfg)
    g = pl.read_topology(cfg["topology"])
    rep = pl.centrality_report(g)
    out = Path(cfg["out"])
    out.mkdir(parents=True, exist_ok=True)
    rep.write_csv(out / "centrality.csv", g.roles)
    result = {"nodes": g.z, "connected": rep.connected, "degree_centralization": rep.centralization,
              "betweenness_ranking": rep.ranking("betweenness")[:5]}
    if cfg["routes"]:
        routes = _read_routes(cfg["routes"])
        chosen = pl.select_checkpoints(g, routes, cfg["k"], rep)
        result.update(checkpoints=chosen, routes=len(routes), covered=pl.covered_routes(routes, chosen))
    with open(out / "placement.json", "w") as fh:
        json.dump(result, fh, indent=1)
    return result


def _read_csv(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def cmd_report(cfg) -> dict:
    runs = Path(cfg["runs"] or cfg["out"])
    cfg["runs"] = str(runs)
    _check_paths(cfg)
    out = Path(cfg["out"])
    out.mkdir(parents=True, exist_ok=True)
    made = []
    cen, fed = runs / "centralized.csv", runs / "federated.csv"
    if cen.exists() or fed.exists():
        c = {r["epoch"]: r["accuracy"] for r in _read_csv(cen)} if cen.exists() else {}
        f = {r["round"]: r["accuracy"] for r in _read_csv(fed)} if fed.exists() else {}
        steps = sorted(set(c) | set(f), key=int)
        with open(out / "report_accuracy.csv", "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["step", "centralized", "federated"])
            for s in steps:
                w.writerow([s, c.get(s, ""), f.get(s, "")])
        made.append("report_accuracy.csv")
    if (runs / "delay_comparison.csv").exists():
        from .simulator import ATTACKER_DELAYS_MS, PATTERNS, VICTIM_DELAYS_MS

        rows = {r["scenario"]: r for r in _read_csv(runs / "delay_comparison.csv")}
        with open(out / "report_delays.csv", "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["pattern", "victim_centric_ms", "attacker_centric_ms"])
            for p, v, a in zip(PATTERNS, VICTIM_DELAYS_MS, ATTACKER_DELAYS_MS):
                w.writerow([p, v, a])
            for name in ("victim-centric", "attacker-centric"):
                if name in rows:
                    w.writerow([f"total per 1000 bots ({name}, s)", rows[name]["per_1000_bots_s"], ""])
        made.append("report_delays.csv")
    if (runs / "cost_table.csv").exists():
        rows = _read_csv(runs / "cost_table.csv")
        with open(out / "report_costs.csv", "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["botnet", "classic_usd_per_sec", "fleam_usd_per_sec", "classic_kusd_per_hour",
                        "fleam_kusd_per_hour"])
            for r in rows:
                w.writerow([r["botnet"], r["classic_usd_per_sec"], r["fleam_usd_per_sec"],
                            r["classic_kusd_per_hour"], r["fleam_kusd_per_hour"]])
        made.append("report_costs.csv")
    if (runs / "accuracy.csv").exists():
        rows = _read_csv(runs / "accuracy.csv")
        with open(out / "report_system_accuracy.csv", "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["mode/placement", "bpr", "mdr", "system_accuracy"])
            for r in rows:
                w.writerow([r["scenario"], r["bpr"], r["mdr"], r["system_accuracy"]])
        made.append("report_system_accuracy.csv")
    if not made:
        raise CliError(f"--runs: no run outputs found in {runs}")
    return {"written": made}


def cmd_synth_unsw(cfg) -> dict:
    from . import unsw_synth

    if cfg["rows"] < 1:
        raise CliError("--rows must be >= 1")
    out = Path(cfg["out"])
    out.mkdir(parents=True, exist_ok=True)
    path = out / cfg["name"]
    unsw_synth.write_csv(path, cfg["rows"], seed=cfg["seed"])
    return {"path": str(path), "rows": cfg["rows"]}


COMMANDS = {
    "train-centralized": cmd_train_centralized,
    "train-federated": cmd_train_federated,
    "detect": cmd_detect,
    "simulate-mitigation": cmd_simulate,
    "economics": cmd_economics,
    "placement": cmd_placement,
    "report": cmd_report,
    "synth-unsw": cmd_synth_unsw,
}


# -- argument parsing ----------------------------------------------------------------


def _flag_type(default):
    if isinstance(default, bool):
        return None
    if isinstance(default, int):
        return int
    if isinstance(default, float):
        return float
    return str


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="fleam", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="command", required=True, metavar="command")
    for name, defaults in DEFAULTS.items():
        p = sub.add_parser(name, help=HELP[name], argument_default=argparse.SUPPRESS)
        p.add_argument("--config", help="INI file with [common] and per-command sections")
        p.add_argument("--seed", type=int, help=f"random seed (default {COMMON['seed']})")
        p.add_argument("--out", help=f"output directory (default {COMMON['out']})")
        p.add_argument("-v", "--verbose", action="store_true")
        for key, default in defaults.items():
            flag = "--" + key.replace("_", "-")
            if isinstance(default, bool):
                p.add_argument(flag, dest=key, action=argparse.BooleanOptionalAction,
                               help=f"default {default}")
            else:
                p.add_argument(flag, dest=key, type=_flag_type(default), help=f"default {default}")
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    args = vars(ap.parse_args(argv))
    command = args.pop("command")
    try:
        cfg = resolve(command, args)
    except CliError as e:
        print(f"fleam {command}: error: {e}", file=sys.stderr)
        return 2
    logging.basicConfig(level=logging.INFO if cfg["verbose"] else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    print(json.dumps({"command": command, **cfg}, sort_keys=True))
    from .dataset import IngestionError, PartitionError
    from .detection import ConfigError
    from .economics import DomainError
    from .placement import TopologyError

    try:
        result = COMMANDS[command](cfg)
    except (CliError, IngestionError, PartitionError, ConfigError, DomainError, TopologyError) as e:
        print(f"fleam {command}: error: {e}", file=sys.stderr)
        return 2
    except Exception as e:  # noqa: BLE001 - reported as runtime failure
        log.debug("runtime failure", exc_info=True)
        print(f"fleam {command}: failed: {type(e).__name__}: {e}", file=sys.stderr)
        return 1
    print(json.dumps(result, default=str))
    return 0


if __name__ == "__main__":
    sys.exit(main())
