"""Command-line entry point.

Subcommands: generate | mapper | dist | instability | sweep | bounds.
Every run resolves its parameters into one JSON document, written next to
the outputs, and `--from-config` replays such a document bit for bit.
Outputs are written atomically (temp file + rename), so no subcommand
leaves a partial file behind on error.

Exit codes: 0 success, 1 usage error, 2 computation error.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

import numpy as np

from . import bounds as bounds_mod
from .clustering import ClustererConfig
from .cover import build_cover
from .datagen import SyntheticSpec, generate
from .dataset import PointCloud, dump_point_cloud_csv, load_point_cloud
from .distance import mapper_distance_detailed
from .errors import MapperStabError, ParameterError
from .instability import averaged_instability
from .mapper import (build_mapper, mapper_function_from_json,
                     mapper_function_to_json, nerve)
from .sweep import SweepConfig, local_minima, sweep_1d, sweep_2d

SCHEMA_VERSION = 1


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


# ---------------------------------------------------------------------------
# small flag-value parsers

def _parse_filter(text: str) -> dict:
    if text == "identity":
        return {"kind": "identity"}
    if text.startswith("axis:"):
        return {"kind": "axis", "axis": int(text.split(":", 1)[1])}
    raise UsageError(f"bad --filter value: {text!r} (use axis:<k> or identity)")


def _parse_cluster(text: str, seed: int) -> dict:
    if text.startswith("eps:"):
        return {"method": "epsilon", "epsilon": float(text.split(":", 1)[1]),
                "seed": seed}
    if text.startswith("kmeans:"):
        parts = text.split(":", 1)[1].split(",")
        doc = {"method": "kmeans", "K": int(parts[0]), "seed": seed}
        if len(parts) > 1:
            doc["restarts"] = int(parts[1])
        if len(parts) > 2:
            doc["max_iter"] = int(parts[2])
        return doc
    raise UsageError(f"bad --cluster value: {text!r} "
                     "(use eps:<r> or kmeans:<K>[,restarts[,max_iter]])")


def _parse_range(text: str | None):
    if text is None:
        return None
    out = []
    for part in text.split(","):
        lo, hi = part.split(":")
        out.append([float(lo), float(hi)])
    return out if len(out) > 1 else out[0]


def _parse_axis_values(text: str, integer: bool = False) -> list:
    cast = int if integer else float
    if ":" in text:
        parts = text.split(":")
        lo, hi = float(parts[0]), float(parts[1])
        step = float(parts[2]) if len(parts) > 2 else 1.0
        count = int(np.floor((hi - lo) / step + 1e-9)) + 1
        vals = [lo + i * step for i in range(count)]
        return [cast(round(v)) if integer else v for v in vals]
    return [cast(v) for v in text.split(",")]


def _parse_resolution(text: str):
    vals = [int(v) for v in text.split(",")]
    return vals[0] if len(vals) == 1 else vals


def _parse_params(items) -> dict:
    out = {}
    for item in items or []:
        if "=" not in item:
            raise UsageError(f"bad --param {item!r} (use key=value)")
        key, value = item.split("=", 1)
        vals = [float(v) for v in value.split(",")]
        if key == "cov":
            side = int(round(len(vals) ** 0.5))
            out[key] = [vals[i * side:(i + 1) * side] for i in range(side)]
        elif key == "radii":
            out[key] = vals
        elif key in ("mean", "center"):
            out[key] = vals
        else:
            out[key] = vals[0] if len(vals) == 1 else vals
    return out


def _atomic_write(path: str, content: str):
    tmp = f"{path}.tmp.{os.getpid()}"
    with open(tmp, "w", encoding="utf-8") as fh:
        fh.write(content)
    os.replace(tmp, path)


def _dump(doc) -> str:
    return json.dumps(doc, sort_keys=True, separators=(",", ":"))


def _load_cloud(params: dict) -> PointCloud:
    return load_point_cloud(params["input"], format=params.get("format", "csv"),
                            header=params.get("header", False))


def _filter_values(cloud: PointCloud, fspec: dict) -> np.ndarray:
    if fspec["kind"] == "identity":
        return cloud.points.copy()
    return cloud.points[:, fspec["axis"]]


def _clusterer(params: dict) -> ClustererConfig:
    return ClustererConfig.from_dict(params["cluster"])


# ---------------------------------------------------------------------------
# subcommand runners: params dict -> {path: content}

def _run_generate(params: dict) -> dict:
    spec = SyntheticSpec(kind=params["kind"], n=params["n"],
                         seed=params["seed"], params=params.get("params", {}))
    cloud = generate(spec)
    return {params["out"]: dump_point_cloud_csv(cloud)}


def _run_mapper(params: dict) -> dict:
    cloud = _load_cloud(params)
    values = _filter_values(cloud, params["filter"])
    cover = build_cover(values, params["resolution"], params["gain"],
                        params.get("range"))
    f = build_mapper(cloud, cover, _clusterer(params))
    graph = nerve(f, max_dim=params.get("max_dim", 2))
    outputs = {params["out"]: graph.to_json()}
    if params.get("dot"):
        outputs[params["dot"]] = graph.to_dot()
    if params.get("function_out"):
        outputs[params["function_out"]] = mapper_function_to_json(f)
    return outputs


def _run_dist(params: dict) -> dict:
    with open(params["a"], encoding="utf-8") as fh:
        fa = mapper_function_from_json(fh.read())
    with open(params["b"], encoding="utf-8") as fh:
        fb = mapper_function_from_json(fh.read())
    value, matching, stats = mapper_distance_detailed(fa, fb)
    doc = {
        "schema_version": SCHEMA_VERSION,
        "value": value,
        "mismatch_count": int(matching.count),
        "n": int(fa.domain.size),
        "matching": [
            {"bin": i, "map": {str(g): f for g, f in sorted(bmap.items())}}
            for i, bmap in enumerate(matching.bin_maps)
        ],
        "mismatch": matching.mismatch.tolist(),
        "upper_bound": stats["upper_bound"],
        "nodes": stats["nodes"],
    }
    return {params["out"]: _dump(doc)}


def _run_instability(params: dict) -> dict:
    cloud = _load_cloud(params)
    values = _filter_values(cloud, params["filter"])
    cover = build_cover(values, params["resolution"], params["gain"],
                        params.get("range"))
    mean, std, estimates = averaged_instability(
        cloud, cover, _clusterer(params), params["k"], params["repeats"],
        params["seed"], normalization=params["normalization"],
        estimator=params["estimator"], trials=params.get("trials", 10),
        jobs=params.get("jobs", 1),
    )
    doc = {
        "schema_version": SCHEMA_VERSION,
        "mean": mean,
        "std": std,
        "estimates": [e.as_dict() for e in estimates],
    }
    return {params["out"]: _dump(doc)}


def _sweep_config(params: dict) -> SweepConfig:
    return SweepConfig(
        clusterer=_clusterer(params),
        resolution=params.get("resolution_base", 10),
        gain=params.get("gain_base", 0.25),
        range_override=params.get("range"),
        estimator=params["estimator"],
        k=params["k"], trials=params.get("trials", 10),
        repeats=params["repeats"], normalization=params["normalization"],
        seed=params["seed"],
    )


def _run_sweep(params: dict) -> dict:
    cloud = _load_cloud(params)
    values = _filter_values(cloud, params["filter"])
    base = _sweep_config(params)
    jobs = params.get("jobs", 1)
    if params["mode"] == "1d":
        grid = sweep_1d(cloud, values, params["axis"], params["values"], base,
                        jobs=jobs)
        minima = None
    else:
        grid = sweep_2d(cloud, values, params["res_values"],
                        params["gain_values"], base, jobs=jobs)
        minima = local_minima(grid)
    outputs = {}
    emit = params.get("emit", "both")
    prefix = params["out"]
    if emit in ("json", "both"):
        doc = json.loads(grid.to_json())
        if minima is not None:
            doc["local_minima"] = minima
        outputs[prefix + ".json"] = _dump(doc)
    if emit in ("csv", "both"):
        outputs[prefix + ".csv"] = grid.to_csv()
    return outputs


def _run_bounds(params: dict) -> dict:
    factories = bounds_mod.builtin_scenarios()
    if params["scenario"] not in factories:
        raise ParameterError(f"unknown scenario: {params['scenario']!r}")
    scenario = factories[params["scenario"]]()
    report = bounds_mod.theorem1_bound(
        scenario, params["gammas"], params["trials"], params["seed"],
        mc_points=params.get("mc_points", 20000),
        raster=params.get("raster", 64),
    )
    report["schema_version"] = SCHEMA_VERSION
    return {params["out"]: _dump(report)}


_RUNNERS = {
    "generate": _run_generate,
    "mapper": _run_mapper,
    "dist": _run_dist,
    "instability": _run_instability,
    "sweep": _run_sweep,
    "bounds": _run_bounds,
}


# ---------------------------------------------------------------------------
# argument parsing -> resolved params

def _build_parser() -> _Parser:
    parser = _Parser(prog="mapperstab")
    sub = parser.add_subparsers(dest="command")

    def common(p):
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--out", required=True)
        p.add_argument("--from-config", default=None)

    p = sub.add_parser("generate", description="Emit a synthetic dataset as CSV.")
    p.add_argument("--kind", choices=["circles", "gaussian", "uniform_square",
                                      "gaussian_quad"])
    p.add_argument("--n", type=int)
    p.add_argument("--param", action="append", default=[])
    common(p)

    def dataset_flags(p):
        p.add_argument("--in", dest="input")
        p.add_argument("--format", choices=["csv", "json"], default="csv")
        p.add_argument("--header", action="store_true")
        p.add_argument("--filter", default="axis:0")
        p.add_argument("--resolution", default="10")
        p.add_argument("--gain", type=float, default=0.25)
        p.add_argument("--range", dest="range_", default=None)
        p.add_argument("--cluster", default="kmeans:2")

    p = sub.add_parser("mapper", description="Build a Mapper graph from a dataset.")
    dataset_flags(p)
    p.add_argument("--max-dim", type=int, default=2)
    p.add_argument("--dot", default=None)
    p.add_argument("--function-out", default=None)
    common(p)

    p = sub.add_parser("dist", description="Mapper distance between two "
                                           "serialized Mapper functions.")
    p.add_argument("a", nargs="?")
    p.add_argument("b", nargs="?")
    common(p)

    p = sub.add_parser("instability", description="Subsampling instability "
                                                  "estimate.")
    dataset_flags(p)
    p.add_argument("--k", type=int, default=10)
    p.add_argument("--repeats", type=int, default=10)
    p.add_argument("--trials", type=int, default=10)
    p.add_argument("--normalization", choices=["paper", "pairs"], default="paper")
    p.add_argument("--estimator", choices=["kfold", "paired"], default="kfold")
    p.add_argument("--jobs", type=int, default=1)
    common(p)

    p = sub.add_parser("sweep", description="Instability over a parameter "
                                            "sweep; emits plot data.")
    dataset_flags(p)
    p.add_argument("--mode", choices=["1d", "2d"], default="2d")
    p.add_argument("--axis", default="epsilon")
    p.add_argument("--values", default=None)
    p.add_argument("--k", type=int, default=10)
    p.add_argument("--repeats", type=int, default=10)
    p.add_argument("--trials", type=int, default=10)
    p.add_argument("--normalization", choices=["paper", "pairs"], default="paper")
    p.add_argument("--estimator", choices=["kfold", "paired"], default="kfold")
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--emit", choices=["csv", "json", "both"], default="both")
    common(p)

    p = sub.add_parser("bounds", description="Tube/boundary bound check on a "
                                             "shipped scenario.")
    p.add_argument("--scenario", default="separated_gaussians")
    p.add_argument("--gamma", default="1.0")
    p.add_argument("--trials", type=int, default=30)
    p.add_argument("--raster", type=int, default=64)
    p.add_argument("--mc-points", type=int, default=20000)
    common(p)

    return parser


def _resolve(args: argparse.Namespace) -> dict:
    cmd = args.command
    params: dict = {"seed": args.seed, "out": args.out}
    if cmd == "generate":
        if args.kind is None or args.n is None:
            raise UsageError("generate needs --kind and --n")
        params.update(kind=args.kind, n=args.n, params=_parse_params(args.param))
    elif cmd in ("mapper", "instability", "sweep"):
        if args.input is None:
            raise UsageError(f"{cmd} needs --in")
        params.update(
            input=args.input, format=args.format, header=args.header,
            filter=_parse_filter(args.filter),
            gain=args.gain, range=_parse_range(args.range_),
            cluster=_parse_cluster(args.cluster, args.seed),
        )
        if cmd == "mapper":
            params.update(resolution=_parse_resolution(args.resolution),
                          max_dim=args.max_dim, dot=args.dot,
                          function_out=args.function_out)
        elif cmd == "instability":
            params.update(resolution=_parse_resolution(args.resolution),
                          k=args.k, repeats=args.repeats, trials=args.trials,
                          normalization=args.normalization,
                          estimator=args.estimator, jobs=args.jobs)
        else:
            res_base = (_parse_axis_values(args.resolution, integer=True)[0]
                        if ":" in args.resolution
                        else _parse_resolution(args.resolution))
            params.update(
                mode=args.mode, k=args.k, repeats=args.repeats,
                trials=args.trials, normalization=args.normalization,
                estimator=args.estimator, jobs=args.jobs, emit=args.emit,
                resolution_base=res_base,
                gain_base=args.gain,
            )
            del params["gain"]
            if args.mode == "1d":
                if args.values is None:
                    raise UsageError("sweep --mode 1d needs --values")
                integer = args.axis in ("resolution", "K")
                params.update(axis=args.axis,
                              values=_parse_axis_values(args.values, integer))
            else:
                params.update(
                    res_values=_parse_axis_values(args.resolution, integer=True),
                    gain_values=_parse_axis_values(str(args.gain)
                                                   if args.values is None
                                                   else args.values),
                )
    elif cmd == "dist":
        if args.a is None or args.b is None:
            raise UsageError("dist needs two Mapper-function files")
        params.update(a=args.a, b=args.b)
    elif cmd == "bounds":
        params.update(scenario=args.scenario,
                      gammas=[float(g) for g in args.gamma.split(",")],
                      trials=args.trials, raster=args.raster,
                      mc_points=args.mc_points)
    else:
        raise UsageError("missing subcommand")
    return params


def run_resolved(command: str, params: dict) -> dict:
    """Execute a resolved config; returns {path: content} of all outputs."""
    outputs = _RUNNERS[command](params)
    config_doc = {"schema_version": SCHEMA_VERSION, "command": command,
                  "params": params}
    outputs[params["out"] + ".config.json"] = _dump(config_doc)
    return outputs


def main(argv=None) -> int:
    argv = sys.argv[1:] if argv is None else list(argv)
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
        if args.command is None:
            raise UsageError("missing subcommand")
        if getattr(args, "from_config", None):
            with open(args.from_config, encoding="utf-8") as fh:
                doc = json.load(fh)
            command, params = doc["command"], doc["params"]
        else:
            command, params = args.command, _resolve(args)
        outputs = run_resolved(command, params)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        parser.print_usage(sys.stderr)
        return 1
    except MapperStabError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    for path, content in sorted(outputs.items()):
        _atomic_write(path, content)
    return 0


if __name__ == "__main__":
    sys.exit(main())
