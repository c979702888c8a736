"""Command-line front end.

Two subcommands:

* ``run`` loads a scenario config (YAML), runs the simulation, and writes
  ``report.json`` plus ``events.log`` into the output directory.  Exit
  code 0 when no attack breached, 2 when any did, 1 on config errors.
* ``puf-eval`` runs a PUF metric campaign and writes ``metrics.json``
  plus a ``hamming.csv`` of all pairwise inter-chip distances.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import json
import sys
from pathlib import Path

import yaml

from .errors import ConfigurationError, TrustTokenError
from .policy_engine import IntegrityLevel, attribute_from_str
from .puf_model import PufParams, evaluate_population
from .soc_sim import (
    MODES,
    AttackInjection,
    AttackKind,
    CpuSpec,
    IpSpec,
    ReprovisionEvent,
    Topology,
    TransactionIntent,
    build,
    report,
    run,
)


def load_config(path: Path) -> dict:
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigurationError(f"{path}: {exc}") from exc
    try:
        data = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        where = f"{path}:{mark.line + 1}" if mark else str(path)
        raise ConfigurationError(f"{where}: {exc}") from exc
    if not isinstance(data, dict):
        raise ConfigurationError(f"{path}: top level must be a mapping")
    return data


def parse_topology(section: dict) -> Topology:
    try:
        cpus = tuple(
            CpuSpec(
                name=str(c["name"]),
                apps=tuple(str(a) for a in c.get("apps", [])),
                user=c.get("user"),
            )
            for c in section["cpus"]
        )
        ips = tuple(
            IpSpec(
                stub=str(ip["stub"]),
                object=str(ip["object"]),
                integrity=IntegrityLevel(str(ip.get("integrity", "HIGH"))),
            )
            for ip in section["ips"]
        )
        app_map = {str(k): str(v) for k, v in section["app_map"].items()}
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigurationError(f"topology section: {exc!r}") from exc
    return Topology(cpus=cpus, wrapped_ips=ips, app_to_ip=app_map)


def parse_script(entries) -> list:
    script = []
    for i, raw in enumerate(entries or []):
        try:
            cycle = int(raw["cycle"])
            kind = str(raw.get("type", "access"))
            if kind == "access":
                script.append(
                    TransactionIntent(
                        cycle=cycle,
                        app=str(raw["app"]),
                        target=str(raw["target"]),
                        attribute=attribute_from_str(str(raw.get("access", "r"))),
                        payload=bytes.fromhex(str(raw.get("payload", ""))),
                    )
                )
            elif kind == "attack":
                params = {
                    k: v for k, v in raw.items() if k not in ("cycle", "type", "kind")
                }
                if "access" in params:
                    params["attribute"] = attribute_from_str(str(params.pop("access")))
                if "payload" in params:
                    params["payload"] = bytes.fromhex(str(params.pop("payload")))
                script.append(
                    AttackInjection(
                        kind=AttackKind(str(raw["kind"])),
                        trigger_cycle=cycle,
                        params=params,
                    )
                )
            elif kind == "reprovision":
                script.append(ReprovisionEvent(cycle=cycle))
            else:
                raise ConfigurationError(f"unknown script entry type {kind!r}")
        except (KeyError, TypeError, ValueError) as exc:
            raise ConfigurationError(f"script entry {i}: {exc!r}") from exc
    return script


def parse_puf_params(section) -> PufParams:
    if not section:
        return PufParams()
    try:
        return PufParams(**{k: v for k, v in section.items()})
    except TypeError as exc:
        raise ConfigurationError(f"puf section: {exc}") from exc


def cmd_run(config_path: str, mode_override=None, seed_override=None, out_path="out") -> int:
    try:
        config = load_config(Path(config_path))
        mode = mode_override or config.get("mode", "trusttoken")
        if mode not in MODES:
            raise ConfigurationError(f"unknown mode {mode!r}")
        seed = int(seed_override if seed_override is not None else config.get("seed", 0))
        params = parse_puf_params(config.get("puf"))
        topology = parse_topology(config.get("topology", {}))
        script = parse_script(config.get("script"))
        max_cycles = int(config.get("max_cycles", 10_000))
        sim = build(topology, seed, mode=mode, params=params)
        log = run(sim, script, max_cycles)
        summary = report(log)
    except TrustTokenError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1

    out = Path(out_path)
    out.mkdir(parents=True, exist_ok=True)
    (out / "report.json").write_text(summary.to_json())
    (out / "events.log").write_text(log.to_text())
    print(f"mode={mode} verdict={summary.verdict} grants={summary.grants} denies={summary.denies}")
    return 2 if summary.verdict == "BREACHED" else 0


def cmd_puf_eval(chips: int, challenges: int, seed: int, out_path: str,
                 noise_sigma: float | None = None) -> int:
    try:
        if chips < 2:
            raise ConfigurationError("need at least 2 chips")
        params = PufParams()
        if noise_sigma is not None:
            params = dataclasses.replace(params, noise_sigma=noise_sigma)
        metrics = evaluate_population(chips, challenges, seed, params)
        noisy = dataclasses.replace(
            params, noise_sigma=params.process_variation_sigma / 20
        )
        noisy_metrics = evaluate_population(chips, 1, seed, noisy)
    except TrustTokenError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1

    out = Path(out_path)
    out.mkdir(parents=True, exist_ok=True)
    payload = {
        "chips": chips,
        "challenges": challenges,
        "uniqueness_pct": metrics.uniqueness_pct,
        "randomness_pct": metrics.randomness_pct,
        "reliability_pct": metrics.reliability_pct,
        "reliability_noisy_pct": noisy_metrics.reliability_pct,
        "fraction_in_40_60_band": metrics.fraction_in_band(),
    }
    (out / "metrics.json").write_text(json.dumps(payload, sort_keys=True, indent=2) + "\n")
    with (out / "hamming.csv").open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["challenge", "chip_a", "chip_b", "distance_bits", "distance_frac"])
        for challenge, a, b, d in metrics.pairwise_distances:
            writer.writerow([challenge, a, b, d, f"{d / 256:.6f}"])
    print(
        f"uniqueness={metrics.uniqueness_pct:.2f}% "
        f"randomness={metrics.randomness_pct:.2f}% "
        f"reliability={metrics.reliability_pct:.2f}%"
    )
    return 0


def bundled_config(name: str) -> Path:
    """Path of a config shipped with the package (e.g. 'scenario1.cfg')."""
    return Path(__file__).parent / "configs" / name


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="trusttoken")
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run a scenario config")
    p_run.add_argument("--config", required=True)
    p_run.add_argument("--mode", choices=MODES)
    p_run.add_argument("--seed", type=int)
    p_run.add_argument("--out", default="out")

    p_puf = sub.add_parser("puf-eval", help="run a PUF metric campaign")
    p_puf.add_argument("--chips", type=int, default=20)
    p_puf.add_argument("--challenges", type=int, default=16)
    p_puf.add_argument("--seed", type=int, default=0)
    p_puf.add_argument("--noise-sigma", type=float, default=None)
    p_puf.add_argument("--out", default="out")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.command == "run":
        return cmd_run(args.config, args.mode, args.seed, args.out)
    return cmd_puf_eval(args.chips, args.challenges, args.seed, args.out, args.noise_sigma)


if __name__ == "__main__":
    sys.exit(main())
