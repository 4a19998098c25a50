"""Command-line pipeline driver.

Subcommands: `stats` (the five structural indicators as JSON), `embed`
(hyperbolic hierarchy embeddings as TSV), `augment` (contrastive sample
records as JSONL), `fuse-check` (the fusion-math property and gradient
suite), and `all` (every artifact into one directory).

Settings resolve as flag > config file > default. The config file is a flat
`key = value` document with `#` comments; keys mirror flag names. Every run
is deterministic given identical inputs, settings, and seed.
"""

import argparse
import json
import logging
import sys
from pathlib import Path

from .graph import IngestError, IngestReport, load_graph, load_hierarchy
from .stats import indicator_report
from .hyperbolic import PoincareEmbedding, export_embeddings
from .augment import SampleAugmenter, validate_level_config, write_jsonl
from .fusion import FusionDims, run_fusion_checks
from .text import tokenize

__all__ = ["main", "read_config", "validate_config", "DEFAULTS"]


class ConfigError(ValueError):
    """A config file that cannot be parsed."""


def _parse_bool(text):
    lowered = str(text).strip().lower()
    if lowered in ("1", "true", "yes", "on"):
        return True
    if lowered in ("0", "false", "no", "off"):
        return False
    raise ValueError("not a boolean: %r" % text)


_CASTS = {
    "kg": str, "classes": str, "corpus": str, "out": str,
    "seed": int, "verbose": _parse_bool,
    "samples": int, "node_fraction": float, "match_threshold": int,
    "dim": int, "lr": float, "epochs": int, "neg": int, "burn_in": int,
    "K": int, "k": int, "L": int,
    "same_class_preference": _parse_bool,
    "positive_hop": int, "negative_base_hop": int,
    "d1": int, "d2": int, "d3": int, "d4": int,
    "M": int, "N": int, "n_heads": int,
    "tau": float, "lam1": float, "lam2": float,
    "trials": int,
}

DEFAULTS = {
    "seed": 42, "verbose": False,
    "samples": 100, "node_fraction": 0.10, "match_threshold": 1,
    "dim": 100, "lr": 0.1, "epochs": 50, "neg": 10, "burn_in": 10,
    "K": 2, "k": 3, "L": 64, "same_class_preference": True,
    "positive_hop": 1, "negative_base_hop": 2,
    "d1": 768, "d2": 100, "d3": 100, "d4": 768,
    "M": 6, "N": 5, "n_heads": 4,
    "tau": 1.0, "lam1": 0.5, "lam2": 0.5,
    "trials": 20,
}


def read_config(path):
    """Parse a flat `key = value` file into a raw string dict."""
    raw = {}
    with open(path, "r", encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            stripped = line.strip()
            if not stripped or stripped.startswith("#"):
                continue
            if "=" not in stripped:
                raise ConfigError(
                    "%s:%d: expected 'key = value', got %r" % (path, line_no, stripped)
                )
            key, _, value = stripped.partition("=")
            raw[key.strip()] = value.strip()
    return raw


def _semantic_diagnostics(values):
    """Errors and warnings for a fully resolved settings dict."""
    errors = []
    warnings = []
    if values["samples"] < 1:
        errors.append("samples must be >= 1")
    if not 0.0 < values["node_fraction"] <= 1.0:
        errors.append("node_fraction must lie in (0, 1]")
    if values["match_threshold"] < 1:
        errors.append("match_threshold must be >= 1")
    if values["dim"] < 1:
        errors.append("dim must be >= 1")
    if values["lr"] <= 0:
        errors.append("lr must be positive")
    if values["epochs"] < 1 or values["burn_in"] < 0:
        errors.append("epochs must be >= 1 and burn_in >= 0")
    if values["neg"] < 1:
        errors.append("neg must be >= 1")
    if values["trials"] < 1:
        errors.append("trials must be >= 1")
    dims = FusionDims(
        d1=values["d1"], d2=values["d2"], d3=values["d3"], d4=values["d4"],
        n_layers=values["M"], n_encoder_layers=values["N"],
        n_heads=values["n_heads"], tau=values["tau"],
        lam1=values["lam1"], lam2=values["lam2"],
    )
    try:
        dims.validate()
    except ValueError as exc:
        errors.append(str(exc))
    try:
        warnings.extend(validate_level_config(
            values["K"], values["k"], values["L"],
            values["positive_hop"], values["negative_base_hop"],
        ))
    except ValueError as exc:
        errors.append(str(exc))
    return errors, warnings


def _typed_config(config):
    """Cast raw config strings; returns (structural errors, typed dict)."""
    errors = []
    typed = {}
    for key, value in config.items():
        cast = _CASTS.get(key)
        if cast is None:
            errors.append("unknown config key: %s" % key)
            continue
        try:
            typed[key] = cast(value) if isinstance(value, str) else value
        except ValueError:
            errors.append("config key %s has invalid value %r" % (key, value))
    return errors, typed


def validate_config(config):
    """Diagnostics for a raw config dict: (errors, warnings)."""
    errors, typed = _typed_config(config)
    merged = dict(DEFAULTS)
    merged.update({k: v for k, v in typed.items() if k in DEFAULTS})
    sem_errors, warnings = _semantic_diagnostics(merged)
    return errors + sem_errors, warnings


def _resolve_settings(ns, typed_config):
    """Merge flags over typed config values over defaults."""
    values = dict(DEFAULTS)
    for key in _CASTS:
        if key in typed_config:
            values[key] = typed_config[key]
        flag = getattr(ns, key, None)
        if flag is not None:
            values[key] = flag
    for key in ("kg", "classes", "corpus", "out"):
        values.setdefault(key, None)
    return values


def _require(values, key, command):
    if not values.get(key):
        raise ConfigError("%s requires --%s (flag or config)" % (command, key))
    return values[key]


def _write_text(path, text):
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(text)


def _stats_payload(values):
    g, _, report = load_graph(_require(values, "kg", "stats"),
                              _require(values, "classes", "stats"))
    print(report.as_key_values(), file=sys.stderr)
    tokens = None
    if values.get("corpus"):
        tokens = tokenize(Path(values["corpus"]).read_text(encoding="utf-8"))
    rep = indicator_report(
        g, corpus_tokens=tokens,
        match_threshold=values["match_threshold"],
        samples=values["samples"],
        node_fraction=values["node_fraction"],
        seed=values["seed"],
    )
    payload = rep.as_dict()
    payload.update({
        "samples": values["samples"],
        "node_fraction": values["node_fraction"],
        "seed": values["seed"],
    })
    return json.dumps(payload, indent=2, sort_keys=True) + "\n"


def _fit_embedding(values, classes_path):
    hierarchy, report = load_hierarchy(classes_path, IngestReport())
    print(report.as_key_values(), file=sys.stderr)
    est = PoincareEmbedding(
        dim=values["dim"], lr=values["lr"], epochs=values["epochs"],
        neg_count=values["neg"], burn_in_epochs=values["burn_in"],
        random_state=values["seed"],
    )
    return est.fit(hierarchy)


def _augment_records(values, kg_path, classes_path):
    g, hierarchy, report = load_graph(kg_path, classes_path)
    print(report.as_key_values(), file=sys.stderr)
    augmenter = SampleAugmenter(
        K=values["K"], k=values["k"], L=values["L"],
        same_class_preference=values["same_class_preference"],
        positive_hop=values["positive_hop"],
        negative_base_hop=values["negative_base_hop"],
        random_state=values["seed"],
    )
    return augmenter.fit(g, hierarchy).transform()


def _fusion_report(values):
    rows = run_fusion_checks(seed=values["seed"], trials=values["trials"])
    lines = [
        "%s %s: %s" % ("PASS" if ok else "FAIL", name, detail)
        for name, ok, detail in rows
    ]
    all_ok = all(ok for _, ok, _ in rows)
    summary = "%d/%d properties passed" % (sum(ok for _, ok, _ in rows), len(rows))
    return "\n".join(lines + [summary]) + "\n", all_ok


def _cmd_stats(ns, values):
    text = _stats_payload(values)
    if values.get("out"):
        _write_text(values["out"], text)
    else:
        sys.stdout.write(text)
    return 0


def _cmd_embed(ns, values):
    est = _fit_embedding(values, _require(values, "classes", "embed"))
    out = _require(values, "out", "embed")
    export_embeddings(est, out)
    print("final mean loss: %r" % est.loss_history_[-1], file=sys.stderr)
    return 0


def _cmd_augment(ns, values):
    records = _augment_records(
        values,
        _require(values, "kg", "augment"),
        _require(values, "classes", "augment"),
    )
    if values.get("out"):
        with open(values["out"], "w", encoding="utf-8") as fh:
            count = write_jsonl(records, fh)
    else:
        count = write_jsonl(records, sys.stdout)
    print("wrote %d records" % count, file=sys.stderr)
    return 0


def _cmd_fuse_check(ns, values):
    text, all_ok = _fusion_report(values)
    if values.get("out"):
        _write_text(values["out"], text)
    else:
        sys.stdout.write(text)
    return 0 if all_ok else 1


def _cmd_all(ns, values):
    out_dir = Path(values.get("out") or "closedkg_out")
    out_dir.mkdir(parents=True, exist_ok=True)
    kg = _require(values, "kg", "all")
    classes = _require(values, "classes", "all")

    _write_text(out_dir / "indicators.json", _stats_payload(values))
    est = _fit_embedding(values, classes)
    export_embeddings(est, out_dir / "embeddings.tsv")
    records = _augment_records(values, kg, classes)
    with open(out_dir / "samples.jsonl", "w", encoding="utf-8") as fh:
        write_jsonl(records, fh)
    text, all_ok = _fusion_report(values)
    _write_text(out_dir / "fusion_checks.txt", text)
    print("artifacts written to %s" % out_dir, file=sys.stderr)
    return 0 if all_ok else 1


def _add_common(parser):
    parser.add_argument("--config", help="flat key = value settings file")
    parser.add_argument("--seed", type=int, help="base random seed (default 42)")
    parser.add_argument("--out", help="output file, or directory for `all`")
    parser.add_argument("--verbose", action="store_const", const=True,
                        help="log progress details to stderr")


def _add_fusion_dims(parser):
    for name in ("d1", "d2", "d3", "d4", "M", "N"):
        parser.add_argument("--%s" % name, type=int)
    parser.add_argument("--n-heads", type=int, dest="n_heads")
    parser.add_argument("--tau", type=float)
    parser.add_argument("--lam1", type=float)
    parser.add_argument("--lam2", type=float)


def _add_kg_inputs(parser, corpus=False):
    parser.add_argument("--kg", help="entity triples TSV: head<TAB>relation<TAB>tail")
    parser.add_argument("--classes",
                        help="hierarchy TSV: child<TAB>parent<TAB>kind (ec or cc)")
    if corpus:
        parser.add_argument("--corpus", help="plain-text corpus for coverage")


def _build_parser():
    parser = argparse.ArgumentParser(
        prog="closedkg",
        description="Structural indicators, hyperbolic class embeddings, and "
                    "contrastive samples for closed-domain knowledge graphs.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("stats", help="emit the five structural indicators as JSON")
    _add_kg_inputs(p, corpus=True)
    p.add_argument("--samples", type=int, help="random subgraphs to draw (default 100)")
    p.add_argument("--node-fraction", type=float, dest="node_fraction",
                   help="subgraph size as a node fraction (default 0.10)")
    p.add_argument("--match-threshold", type=int, dest="match_threshold",
                   help="minimum tokens for a corpus entity match (default 1)")
    _add_common(p)
    p.set_defaults(func=_cmd_stats)

    p = sub.add_parser("embed", help="train hierarchy embeddings, export TSV")
    p.add_argument("--classes",
                   help="hierarchy TSV: child<TAB>parent<TAB>kind (ec or cc)")
    p.add_argument("--dim", type=int, help="embedding width (default 100)")
    p.add_argument("--lr", type=float, help="learning rate (default 0.1)")
    p.add_argument("--epochs", type=int, help="training epochs (default 50)")
    p.add_argument("--neg", type=int, help="negatives per pair (default 10)")
    p.add_argument("--burn-in", type=int, dest="burn_in",
                   help="initial epochs at lr/10 (default 10)")
    _add_common(p)
    p.set_defaults(func=_cmd_embed)

    p = sub.add_parser("augment", help="build contrastive samples as JSONL")
    _add_kg_inputs(p)
    p.add_argument("--K", type=int, help="neighbor triples per positive (default 2)")
    p.add_argument("--k", type=int, help="negative levels (default 3)")
    p.add_argument("--L", type=int, help="target record length in tokens (default 64)")
    p.add_argument("--same-class-preference", dest="same_class_preference",
                   action="store_const", const=True,
                   help="prefer negative ends of the anchor's class (default)")
    p.add_argument("--no-same-class-preference", dest="same_class_preference",
                   action="store_const", const=False,
                   help="disable the same-class preference")
    p.add_argument("--positive-hop", type=int, dest="positive_hop",
                   help="hop of positive neighbors (default 1)")
    p.add_argument("--negative-base-hop", type=int, dest="negative_base_hop",
                   help="hop of level-1 negative ends (default 2)")
    _add_common(p)
    p.set_defaults(func=_cmd_augment)

    p = sub.add_parser("fuse-check",
                       help="run the fusion-math property and gradient suite "
                            "(always at reduced widths; the dim flags are "
                            "validated for pipeline configs)")
    p.add_argument("--trials", type=int,
                   help="instances per gradient check (default 20)")
    _add_fusion_dims(p)
    _add_common(p)
    p.set_defaults(func=_cmd_fuse_check)

    p = sub.add_parser("all", help="write every artifact into --out directory")
    _add_kg_inputs(p, corpus=True)
    p.add_argument("--samples", type=int)
    p.add_argument("--node-fraction", type=float, dest="node_fraction")
    p.add_argument("--match-threshold", type=int, dest="match_threshold")
    p.add_argument("--dim", type=int)
    p.add_argument("--lr", type=float)
    p.add_argument("--epochs", type=int)
    p.add_argument("--neg", type=int)
    p.add_argument("--burn-in", type=int, dest="burn_in")
    p.add_argument("--K", type=int)
    p.add_argument("--k", type=int)
    p.add_argument("--L", type=int)
    p.add_argument("--positive-hop", type=int, dest="positive_hop")
    p.add_argument("--negative-base-hop", type=int, dest="negative_base_hop")
    p.add_argument("--trials", type=int)
    _add_fusion_dims(p)
    _add_common(p)
    p.set_defaults(func=_cmd_all)

    return parser


def main(argv=None):
    parser = _build_parser()
    ns = parser.parse_args(argv)
    try:
        config = read_config(ns.config) if ns.config else {}
        errors, typed = _typed_config(config)
        values = _resolve_settings(ns, typed)
        sem_errors, warnings = _semantic_diagnostics(values)
        errors.extend(sem_errors)
        logging.basicConfig(
            stream=sys.stderr,
            level=logging.INFO if values["verbose"] else logging.WARNING,
            format="%(levelname)s %(name)s: %(message)s",
        )
        for warning in warnings:
            print("warning: %s" % warning, file=sys.stderr)
        if errors:
            for error in errors:
                print("error: %s" % error, file=sys.stderr)
            return 1
        return ns.func(ns, values)
    except (ConfigError, IngestError, OSError, ValueError) as exc:
        print("error: %s" % exc, file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
