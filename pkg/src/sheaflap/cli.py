"""``sheaflap`` command line: gen-synth, verify, train, diffuse, build-lap.

Exit codes: 0 success, 1 property failure, 2 usage error, 3 I/O error.
Options may also come from ``--config file.json`` (keys mirror the long flag
names, dashes or underscores); flags given on the command line win.
"""

from __future__ import annotations

import argparse
import json
import sys

import numpy as np

from .diffuse import diffuse_linear, diffuse_nonlinear
from .errors import ParseError, SheafLapError
from .hypercore import Hypergraph, load_hypergraph, save_hypergraph
from .lap import linear_laplacian, nonlinear_laplacian, normalize, normalizer
from .sheaf import MapKind, random_sheaf, trivial_sheaf

EXIT_OK, EXIT_PROPERTY, EXIT_USAGE, EXIT_IO = 0, 1, 2, 3


class UsageError(Exception):
    pass


DEFAULTS = {
    "gen-synth": dict(alpha=None, beta=None, nodes=5000, edges=1000, cardinality=15, feature_dim=10,
                      separation=1.0, noise=1.0, seed=0, out=None),
    "verify": dict(trials=50, seed=0, max_nodes=8, inject_asymmetry=False),
    "train": dict(data=None, variant="sheaf_gnn", d=2, kind="diag", rank=None, layers=2, hidden=16,
                  fixed_W1=False, policy="fixed_first_layer", norm_mode="degree", norm_style="symmetric",
                  epsilon=1e-6, mediators=True, squash="sigmoid", edge_mode="mean-of-inputs", trivial=False,
                  dropout=0.0, lr=0.01, weight_decay=0.0, epochs=100, seed=0, out="report.json"),
    "diffuse": dict(data=None, law="linear", steps=10, eta=0.5, mediators=False, d=1, kind="diag", rank=None,
                    trivial=False, sheaf_seed=None, norm_mode="sheaf", norm_style="symmetric", epsilon=1e-6,
                    seed=0, out=None),
    "build-lap": dict(data=None, law="linear", mediators=False, d=1, kind="diag", rank=None, trivial=False,
                      sheaf_seed=None, norm_mode="none", norm_style="symmetric", epsilon=1e-6, seed=0, out=None),
}


def _add(p, *names, **kw):
    p.add_argument(*names, default=argparse.SUPPRESS, **kw)


def _sheaf_flags(p):
    _add(p, "--d", type=int, help="stalk dimension")
    _add(p, "--kind", help="diag | lowrank[:r] | general")
    _add(p, "--rank", type=int)
    _add(p, "--trivial", action="store_true", help="trivial sheaf (d=1, unit maps)")
    _add(p, "--sheaf-seed", type=int, help="seed of the random sheaf (defaults to --seed)")
    _add(p, "--norm-mode", choices=["none", "degree", "sheaf"])
    _add(p, "--norm-style", choices=["symmetric", "asymmetric"])
    _add(p, "--epsilon", type=float)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="sheaflap", description="Sheaf hypergraph Laplacians and networks")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen-synth", help="generate a contextual hypergraph SBM dataset")
    _add(p, "--alpha", type=int, help="heterophily level (sets beta = alpha)")
    _add(p, "--beta", type=int, help="class-0 nodes per hyperedge")
    _add(p, "--nodes", type=int)
    _add(p, "--edges", type=int)
    _add(p, "--cardinality", type=int)
    _add(p, "--feature-dim", type=int)
    _add(p, "--separation", type=float, help="distance between the two class means")
    _add(p, "--noise", type=float, help="feature noise standard deviation")
    _add(p, "--seed", type=int)
    _add(p, "--out")

    p = sub.add_parser("verify", help="run the randomized property suites")
    _add(p, "--trials", type=int)
    _add(p, "--seed", type=int)
    _add(p, "--max-nodes", type=int)
    _add(p, "--inject-asymmetry", action="store_true", help="corrupt the operator to test the failure path")

    p = sub.add_parser("train", help="train a sheaf hypergraph network")
    _add(p, "--data")
    _add(p, "--variant", choices=["sheaf_gnn", "sheaf_gcn"])
    _add(p, "--layers", type=int)
    _add(p, "--hidden", type=int)
    _add(p, "--fixed-W1", action="store_true", help="keep W1 at the identity")
    _add(p, "--policy", choices=["fixed_first_layer", "recompute_each_layer"])
    _add(p, "--mediators", action=argparse.BooleanOptionalAction)
    _add(p, "--squash", choices=["sigmoid", "tanh"])
    _add(p, "--edge-mode", choices=["mean-of-inputs", "mean-of-hidden", "mean-of-transformed"])
    _add(p, "--dropout", type=float)
    _add(p, "--lr", type=float)
    _add(p, "--weight-decay", type=float)
    _add(p, "--epochs", type=int)
    _add(p, "--seed", type=int)
    _add(p, "--out")
    _sheaf_flags(p)

    for name, help_ in (("diffuse", "run linear or non-linear sheaf diffusion"),
                        ("build-lap", "export a sheaf Laplacian as a coordinate list")):
        p = sub.add_parser(name, help=help_)
        _add(p, "--data")
        _add(p, "--law", choices=["linear", "nonlinear"])
        _add(p, "--mediators", action=argparse.BooleanOptionalAction)
        _add(p, "--seed", type=int)
        _add(p, "--out")
        _sheaf_flags(p)
        if name == "diffuse":
            _add(p, "--steps", type=int)
            _add(p, "--eta", type=float, help="non-linear step size")

    for p in sub.choices.values():
        p.add_argument("--config", help="JSON file of option values")
    return parser


def _read_config(path: str) -> dict:
    try:
        with open(path, encoding="utf-8") as fh:
            obj = json.load(fh)
    except OSError:
        raise
    except json.JSONDecodeError as exc:
        raise UsageError(f"config file {path}: {exc}") from exc
    if not isinstance(obj, dict):
        raise UsageError("config file must hold a JSON object")
    return {k.replace("-", "_"): v for k, v in obj.items()}


def resolve(command: str, ns: argparse.Namespace) -> dict:
    """Defaults, then config-file values, then explicit flags."""
    cfg = dict(DEFAULTS[command])
    flags = {k: v for k, v in vars(ns).items() if k not in ("command", "config")}
    if getattr(ns, "config", None):
        file_cfg = _read_config(ns.config)
        unknown = set(file_cfg) - set(cfg)
        if unknown:
            raise UsageError(f"unknown config keys for {command}: {sorted(unknown)}")
        cfg.update(file_cfg)
    cfg.update(flags)
    return cfg


def _echo(cfg: dict, command: str, stream) -> None:
    print("config " + json.dumps({"command": command, **cfg}, sort_keys=True), file=stream)


def _write(path: str | None, text: str) -> None:
    if path is None or path == "-":
        sys.stdout.write(text)
    else:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(text)


def _need(cfg: dict, key: str):
    if cfg.get(key) is None:
        raise UsageError(f"--{key.replace('_', '-')} is required")
    return cfg[key]


# -- commands -------------------------------------------------------------------

def cmd_gen_synth(cfg: dict) -> int:
    from .synth import SynthConfig, generate

    card = cfg["cardinality"]
    if cfg["alpha"] is not None and cfg["beta"] is not None:
        raise UsageError("give --alpha or --beta, not both")
    if cfg["alpha"] is not None:
        if not 1 <= cfg["alpha"] <= card // 2:
            raise UsageError(f"--alpha must lie in 1..{card // 2} for cardinality {card}")
        beta = cfg["alpha"]
    elif cfg["beta"] is not None:
        beta = cfg["beta"]
    else:
        raise UsageError("one of --alpha or --beta is required")
    out = _need(cfg, "out")
    sc = SynthConfig(num_nodes=cfg["nodes"], num_hyperedges=cfg["edges"], cardinality=card, beta=beta,
                     feature_dim=cfg["feature_dim"], mean_separation=cfg["separation"], noise_std=cfg["noise"],
                     seed=cfg["seed"])
    _echo(cfg, "gen-synth", sys.stdout)
    H = generate(sc)
    save_hypergraph(H, out)
    counts = np.bincount(H.labels, minlength=2)
    print(f"class 0: {counts[0]} nodes, class 1: {counts[1]} nodes, alpha={sc.alpha} (beta={beta})")
    return EXIT_OK


def cmd_verify(cfg: dict) -> int:
    from .verify import run_all

    _echo(cfg, "verify", sys.stdout)
    results = run_all(cfg["trials"], cfg["seed"], cfg["max_nodes"], cfg["inject_asymmetry"], log=print)
    ok = all(r.passed for r in results)
    print("all properties hold" if ok else "property failure")
    return EXIT_OK if ok else EXIT_PROPERTY


def _load(cfg: dict) -> Hypergraph:
    return load_hypergraph(_need(cfg, "data"))


def _kind(cfg: dict) -> MapKind:
    return MapKind.parse(str(cfg["kind"]), cfg["rank"])


def _sheaf_and_norm(cfg: dict, H: Hypergraph):
    if cfg["trivial"]:
        S = trivial_sheaf(H)
    else:
        seed = cfg["sheaf_seed"] if cfg["sheaf_seed"] is not None else cfg["seed"]
        S = random_sheaf(H, cfg["d"], _kind(cfg), seed)
    N = None if cfg["norm_mode"] == "none" else normalizer(H, S, cfg["norm_mode"], cfg["norm_style"], cfg["epsilon"])
    return S, N


def _signal(H: Hypergraph, d: int, seed: int) -> np.ndarray:
    """Dataset features copied onto every stalk row, or a seeded Gaussian column without features."""
    X = H.features if H.features is not None else np.random.default_rng(seed).standard_normal((H.num_nodes, 1))
    return np.repeat(np.asarray(X, dtype=float), d, axis=0)


def cmd_train(cfg: dict) -> int:
    from .nn import ModelConfig, train
    from .synth import split

    H = _load(cfg)
    if cfg["trivial"]:
        mc = ModelConfig.trivial(variant=cfg["variant"])
    else:
        mc = ModelConfig(variant=cfg["variant"], stalk_dim=cfg["d"], map_kind=_kind(cfg), learn_W1=not cfg["fixed_W1"])
    mc = mc.with_(layers=cfg["layers"], hidden_channels=cfg["hidden"], sheaf_policy=cfg["policy"],
                  norm_mode=cfg["norm_mode"], norm_style=cfg["norm_style"], epsilon=cfg["epsilon"],
                  mediators=cfg["mediators"], squash=cfg["squash"], edge_mode=cfg["edge_mode"],
                  dropout=cfg["dropout"], lr=cfg["lr"], weight_decay=cfg["weight_decay"], epochs=cfg["epochs"],
                  seed=cfg["seed"])
    mc.validate()
    stream = sys.stderr if cfg["out"] in (None, "-") else sys.stdout
    _echo(cfg, "train", stream)
    report, _ = train(H, split(H.num_nodes, seed=cfg["seed"]), mc)
    _write(cfg["out"], report.to_json())
    print(f"test_acc {report.test_acc:.4f} best_epoch {report.best_epoch} dirichlet_probe {report.dirichlet_probe!r}",
          file=stream)
    return EXIT_OK


def cmd_diffuse(cfg: dict) -> int:
    H = _load(cfg)
    if cfg["norm_mode"] == "none":
        raise UsageError("diffusion needs a normalization (--norm-mode degree|sheaf)")
    S, N = _sheaf_and_norm(cfg, H)
    X0 = _signal(H, S.stalk_dim, cfg["seed"])
    stream = sys.stderr if cfg["out"] in (None, "-") else sys.stdout
    _echo(cfg, "diffuse", stream)
    if cfg["law"] == "linear":
        _, trace = diffuse_linear(H, S, N, X0, cfg["steps"])
    else:
        _, trace = diffuse_nonlinear(H, S, N, X0, cfg["steps"], cfg["eta"], cfg["mediators"], cfg["seed"])
    _write(cfg["out"], trace.to_csv())
    return EXIT_OK


def cmd_build_lap(cfg: dict) -> int:
    H = _load(cfg)
    S, N = _sheaf_and_norm(cfg, H)
    stream = sys.stderr if cfg["out"] in (None, "-") else sys.stdout
    _echo(cfg, "build-lap", stream)
    if cfg["law"] == "linear":
        L = linear_laplacian(H, S)
    else:
        L = nonlinear_laplacian(H, S, _signal(H, S.stalk_dim, cfg["seed"]), cfg["mediators"], N, cfg["seed"])
    if N is not None:
        L = normalize(L, N)
    _write(cfg["out"], L.to_coo_text())
    return EXIT_OK


COMMANDS = {"gen-synth": cmd_gen_synth, "verify": cmd_verify, "train": cmd_train, "diffuse": cmd_diffuse,
            "build-lap": cmd_build_lap}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        ns = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code in (0, None) else EXIT_USAGE
    try:
        cfg = resolve(ns.command, ns)
        return COMMANDS[ns.command](cfg)
    except (UsageError, TypeError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (OSError, ParseError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    except SheafLapError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
