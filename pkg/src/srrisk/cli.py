"""Command-line harness: train, evaluate, sweep, matrix and weighted-loss experiments.

Every CSV row carries a JSON ``spec`` with the data selection, architecture,
training configuration, metric and seed, so ``srrisk replay`` can rebuild the
cell and recompute the value from nothing else.
"""

import argparse
import configparser
import csv
import hashlib
import io
import json
import logging
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import replace
from pathlib import Path

import numpy as np

from .data import default_mnist_dir, load_mnist, mnist_paths, subset, synth_blobs
from .errors import ConfigurationError, SrriskError
from .metrics import CROSS_ENTROPY, ZERO_ONE, LossSpec
from .nn import init_network, load_network, save_network
from .perturb import PerturbationSpec
from .risk import MetricSpec, PgdConfig
from .rng import Purpose
from .train import CORRUPTION, NATURAL, PGD, TrainConfig, train

log = logging.getLogger("srrisk")

ERROR_MARK = "ERROR"


def default_eval_grid():
    return [float(v) for v in np.geomspace(1e-3, 0.7, 8)]


DEFAULTS = {
    "data": {
        "source": "mnist",
        "mnist_dir": "",
        "train_subset": "10000",
        "test_subset": "0",
        "subset_seed": "0",
        "blobs_per_class": "100",
        "blobs_dim": "20",
        "blobs_classes": "3",
        "blobs_separation": "3.0",
    },
    "model": {"hidden": "256"},
    "train": {
        "regime": NATURAL,
        "perturbation": "dirac",
        "pgd_eps": "0.157",
        "pgd_steps": "7",
        "pgd_step_size": "",
        "pgd_random_start": "true",
        "pgd_clip": "false",
        "loss": CROSS_ENTROPY,
        "epochs": "10",
        "batch_size": "128",
        "lr": "0.1",
        "momentum": "0.9",
        "dtype": "float64",
    },
    "eval": {
        "metrics": "zero_one @ dirac; zero_one @ uniform_linf 0.3",
        "k": "100",
        "split": "test",
    },
    "sweep": {
        "train_eps": "0, 0.1, 0.3, 0.5, 0.7",
        "eval_eps": ", ".join(repr(v) for v in default_eval_grid()),
        "k": "100",
    },
    "matrix": {"eps1": "0.157", "eps2": "0.5", "k": "10"},
    "weighted": {
        "weight_class": "8",
        "weight": "100",
        "sigma": "0.3",
        "k": "10",
        "eval_every": "1",
        "lr": "0.05",
        "momentum": "0.0",
    },
    "run": {"seeds": "0, 1, 2", "output": "-", "model": "model.srrnet", "n_jobs": "1"},
}

# shortcut flags and the config keys they override
SHORTCUTS = {
    "seeds": "run.seeds",
    "output": "run.output",
    "model": "run.model",
    "n_jobs": "run.n_jobs",
    "epochs": "train.epochs",
    "train_subset": "data.train_subset",
    "mnist_dir": "data.mnist_dir",
}


def load_config(path=None, overrides=()) -> configparser.ConfigParser:
    cfg = configparser.ConfigParser(interpolation=None)
    cfg.read_dict(DEFAULTS)
    if path:
        if not Path(path).is_file():
            raise ConfigurationError(f"config file not found: {path}")
        cfg.read(path)
    for item in overrides:
        key, sep, value = item.partition("=")
        section, dot, option = key.strip().partition(".")
        if not sep or not dot:
            raise ConfigurationError(f"override must look like section.key=value, got {item!r}")
        if section not in DEFAULTS or option not in DEFAULTS[section]:
            raise ConfigurationError(f"unknown config key {key.strip()!r}")
        cfg[section][option] = value.strip()
    return cfg


def _floats(text):
    return [float(v) for v in text.replace(",", " ").split()]


def _ints(text):
    return [int(v) for v in text.replace(",", " ").split()]


def _positive(name, value):
    if not value > 0:
        raise ConfigurationError(f"{name} must be positive, got {value}")
    return value


# ---- data and model -------------------------------------------------------

def data_spec(cfg) -> dict:
    d = cfg["data"]
    if d["source"] == "mnist":
        return {"source": "mnist", "train_subset": d.getint("train_subset"), "test_subset": d.getint("test_subset"),
                "subset_seed": d.getint("subset_seed")}
    if d["source"] == "blobs":
        return {"source": "blobs", "per_class": d.getint("blobs_per_class"), "dim": d.getint("blobs_dim"),
                "classes": d.getint("blobs_classes"), "separation": d.getfloat("blobs_separation"),
                "subset_seed": d.getint("subset_seed")}
    raise ConfigurationError(f"unknown data source {d['source']!r}")


_DATA_CACHE = {}


def load_data(spec: dict, mnist_dir=None):
    """Return ``(train, test)`` for a data spec; results are cached per process."""
    key = (json.dumps(spec, sort_keys=True), str(mnist_dir))
    if key in _DATA_CACHE:
        return _DATA_CACHE[key]
    if spec["source"] == "blobs":
        full = synth_blobs(spec["per_class"], spec["dim"], spec["classes"], spec["separation"], spec["subset_seed"])
        held = synth_blobs(spec["per_class"], spec["dim"], spec["classes"], spec["separation"],
                           spec["subset_seed"] + 1_000_003)
        tr, te = full, held
    else:
        paths = mnist_paths(Path(mnist_dir) if mnist_dir else default_mnist_dir())
        missing = [str(p) for p in paths.values() if not p.exists()]
        if missing:
            raise ConfigurationError("MNIST files missing: " + ", ".join(missing))
        tr = load_mnist(paths["train_images"], paths["train_labels"])
        te = load_mnist(paths["test_images"], paths["test_labels"])
        if spec["train_subset"]:
            tr = subset(tr, spec["train_subset"], spec["subset_seed"])
        if spec["test_subset"]:
            te = subset(te, spec["test_subset"], spec["subset_seed"])
    _DATA_CACHE[key] = (tr, te)
    return tr, te


def hidden_sizes(cfg):
    return _ints(cfg["model"]["hidden"])


def layer_sizes(data, hidden):
    return [data.dim, *hidden, data.class_count]


# ---- training configs ------------------------------------------------------

def pgd_from_section(sec, eps=None) -> PgdConfig:
    step = sec.get("pgd_step_size", "").strip()
    return PgdConfig(float(sec["pgd_eps"]) if eps is None else eps, int(sec["pgd_steps"]),
                     float(step) if step else None, sec.getboolean("pgd_random_start"), sec.getboolean("pgd_clip"))


def train_config(cfg, seed, class_count, **changes) -> TrainConfig:
    t = cfg["train"]
    regime = changes.pop("regime", t["regime"])
    kw = dict(epochs=t.getint("epochs"), batch_size=t.getint("batch_size"), lr=t.getfloat("lr"),
              momentum=t.getfloat("momentum"), seed=seed, loss=LossSpec.parse(t["loss"], class_count),
              dtype=t["dtype"])
    if regime == CORRUPTION:
        kw["perturbation"] = PerturbationSpec.parse(t["perturbation"])
    if regime == PGD:
        kw["pgd"] = pgd_from_section(t)
    kw.update(changes)
    return TrainConfig(regime, **kw)


def parse_metric(text, k, class_count=10, pgd_section=None) -> MetricSpec:
    """``loss @ perturbation`` or ``loss @ pgd <eps>``; the name is the normalised text."""
    loss_text, sep, pert_text = text.partition("@")
    loss = LossSpec.parse(loss_text.strip(), class_count)
    pert_text = pert_text.strip() if sep else "dirac"
    parts = pert_text.split()
    if parts and parts[0] == "pgd":
        if len(parts) != 2:
            raise ConfigurationError(f"pgd metric needs a radius: {text!r}")
        pgd = pgd_from_section(pgd_section, float(parts[1])) if pgd_section is not None else PgdConfig(float(parts[1]))
        return MetricSpec(f"{loss} @ pgd {pgd.eps!r}", loss, pgd=pgd)
    pert = PerturbationSpec.parse(pert_text)
    return MetricSpec(f"{loss} @ {pert}", loss, pert, k)


# ---- cells -----------------------------------------------------------------

_NET_CACHE = {}


def trained_net(dspec, hidden, tcfg: TrainConfig, mnist_dir=None):
    """Train (or reuse) the network for one cell; a cell is fully determined by its arguments."""
    key = json.dumps([dspec, hidden, tcfg.describe()], sort_keys=True)
    if key not in _NET_CACHE:
        tr, _ = load_data(dspec, mnist_dir)
        net0 = init_network(layer_sizes(tr, hidden), tcfg.seed)
        _NET_CACHE[key] = train(net0, tr, None, tcfg)[0]
    return _NET_CACHE[key]


def clear_caches():
    _NET_CACHE.clear()
    _DATA_CACHE.clear()


def cell_spec(dspec, hidden, tcfg: TrainConfig, metric: MetricSpec, split, seed, stream=None) -> dict:
    spec = {"data": dspec, "hidden": hidden, "train": tcfg.describe(), "metric": metric.describe(),
            "split": split, "eval_seed": seed}
    if stream is not None:
        spec["stream"] = list(stream)
    return spec


def evaluate_spec(spec: dict, mnist_dir=None):
    """Recompute the estimate a row's spec describes."""
    dspec = spec["data"]
    tr, te = load_data(dspec, mnist_dir)
    metric = MetricSpec.from_dict(spec["metric"], tr.class_count)
    stream = tuple(spec["stream"]) if "stream" in spec else None
    if "network_sha256" in spec:
        net = load_network(spec["network"])
        digest = hashlib.sha256(Path(spec["network"]).read_bytes()).hexdigest()
        if digest != spec["network_sha256"]:
            raise ConfigurationError(f"network file {spec['network']} changed since the row was written")
    else:
        tcfg = TrainConfig.from_dict(spec["train"], tr.class_count)
        net = trained_net(dspec, spec["hidden"], tcfg, mnist_dir)
    data = tr if spec["split"] == "train" else te
    return metric.evaluate(net, data, spec["eval_seed"], stream)


# ---- CSV --------------------------------------------------------------------

def fmt(v):
    if isinstance(v, float):
        return repr(v)
    return v


class RowWriter:
    """Single CSV writer; rows are flushed as they arrive."""

    def __init__(self, path, columns):
        self.columns = list(columns) + ["error", "spec"]
        self.path = path
        self.fh = sys.stdout if path in ("-", "") else open(path, "w", newline="")
        self.writer = csv.DictWriter(self.fh, self.columns, extrasaction="ignore", lineterminator="\n")
        self.writer.writeheader()
        self.failed = 0
        self.count = 0

    def write(self, row: dict, spec: dict = None, error: str = ""):
        out = {k: fmt(v) for k, v in row.items()}
        out["spec"] = json.dumps(spec or {}, sort_keys=True)
        out["error"] = f"{ERROR_MARK}: {error}" if error else ""
        if error:
            self.failed += 1
        self.writer.writerow(out)
        self.fh.flush()
        self.count += 1

    def close(self):
        if self.fh is not sys.stdout:
            self.fh.close()


def _run_cells(cells, n_jobs):
    """Run ``cells`` (callables returning row lists) possibly concurrently, yielding results in order."""
    def guarded(fn):
        try:
            return fn(), None
        except (SrriskError, ValueError, ArithmeticError) as exc:
            log.error("cell failed: %s", exc)
            return None, f"{type(exc).__name__}: {exc}"

    if n_jobs > 1:
        with ThreadPoolExecutor(max_workers=n_jobs) as pool:
            yield from pool.map(guarded, cells)
    else:
        for fn in cells:
            yield guarded(fn)


def _estimate_row(est):
    return {"mean": est.mean, "std_error": est.std_error}


# ---- commands ----------------------------------------------------------------

def cmd_print_config(cfg, args):
    buf = io.StringIO()
    cfg.write(buf)
    sys.stdout.write(buf.getvalue())
    return 0


def cmd_train(cfg, args):
    dspec = data_spec(cfg)
    seed = _ints(cfg["run"]["seeds"])[0]
    tr, _ = load_data(dspec, cfg["data"]["mnist_dir"])
    tcfg = train_config(cfg, seed, tr.class_count)
    net, hist = train(init_network(layer_sizes(tr, hidden_sizes(cfg)), seed), tr, None, tcfg)
    save_network(net, cfg["run"]["model"])
    out = RowWriter(cfg["run"]["output"], ["epoch", "train_loss"])
    spec = {"data": dspec, "hidden": hidden_sizes(cfg), "train": tcfg.describe()}
    for epoch, loss in enumerate(hist.epoch_losses, 1):
        out.write({"epoch": epoch, "train_loss": float(loss)}, spec)
    out.close()
    log.info("saved %s after %.1fs", cfg["run"]["model"], hist.wall_time)
    return 0


def cmd_eval(cfg, args):
    dspec = data_spec(cfg)
    mnist_dir = cfg["data"]["mnist_dir"]
    tr, te = load_data(dspec, mnist_dir)
    path = cfg["run"]["model"]
    net = load_network(path)
    digest = hashlib.sha256(Path(path).read_bytes()).hexdigest()
    k = cfg["eval"].getint("k")
    metrics = [parse_metric(m, k, tr.class_count, cfg["train"]) for m in cfg["eval"]["metrics"].split(";") if m.strip()]
    split = cfg["eval"]["split"]
    splits = ["train", "test"] if split == "both" else [split]
    if not set(splits) <= {"train", "test"}:
        raise ConfigurationError(f"split must be train, test or both, got {split!r}")
    out = RowWriter(cfg["run"]["output"], ["metric", "split", "seed", "mean", "std_error", "n_terms"])
    cells = []
    for seed in _ints(cfg["run"]["seeds"]):
        for m in metrics:
            for s in splits:
                spec = {"data": dspec, "network": str(path), "network_sha256": digest, "metric": m.describe(),
                        "split": s, "eval_seed": seed}
                cells.append((spec, {"metric": m.name, "split": s, "seed": seed},
                              lambda m=m, s=s, seed=seed: m.evaluate(net, tr if s == "train" else te, seed)))
    for (spec, base, _), (est, err) in zip(cells, _run_cells([c[2] for c in cells], cfg["run"].getint("n_jobs"))):
        row = dict(base, **({"mean": est.mean, "std_error": est.std_error, "n_terms": est.n_terms} if est else {}))
        out.write(row, spec, err or "")
    out.close()
    return 1 if out.failed else 0


def cmd_sweep(cfg, args):
    dspec = data_spec(cfg)
    mnist_dir = cfg["data"]["mnist_dir"]
    hidden = hidden_sizes(cfg)
    sw = cfg["sweep"]
    train_eps = _floats(sw["train_eps"])
    eval_eps = [_positive("eval_eps", e) for e in _floats(sw["eval_eps"])]
    k = sw.getint("k")
    out = RowWriter(cfg["run"]["output"], ["train_eps", "eval_eps", "seed", "mean", "std_error"])

    def cell(seed, te_):
        def run():
            tr, test = load_data(dspec, mnist_dir)
            if te_ == 0:
                tcfg = train_config(cfg, seed, tr.class_count, regime=NATURAL)
            else:
                tcfg = train_config(cfg, seed, tr.class_count, regime=CORRUPTION,
                                    perturbation=PerturbationSpec.uniform_linf(_positive("train_eps", te_)))
            net = trained_net(dspec, hidden, tcfg, mnist_dir)
            rows = []
            for ee in eval_eps:
                m = MetricSpec(f"a_tsrm {ee!r}", LossSpec(ZERO_ONE), PerturbationSpec.uniform_linf(ee), k)
                rows.append((ee, m.evaluate(net, test, seed), cell_spec(dspec, hidden, tcfg, m, "test", seed)))
            return rows
        return run

    grid = [(seed, te_) for seed in _ints(cfg["run"]["seeds"]) for te_ in train_eps]
    for (seed, te_), (rows, err) in zip(grid, _run_cells([cell(*g) for g in grid], cfg["run"].getint("n_jobs"))):
        if err:
            for ee in eval_eps:
                out.write({"train_eps": te_, "eval_eps": ee, "seed": seed}, {"train_eps": te_, "seed": seed}, err)
            continue
        for ee, est, spec in rows:
            out.write({"train_eps": te_, "eval_eps": ee, "seed": seed, **_estimate_row(est)}, spec)
    out.close()
    return 1 if out.failed else 0


def matrix_methods(cfg, seed, class_count):
    mx = cfg["matrix"]
    e1, e2 = _positive("eps1", mx.getfloat("eps1")), _positive("eps2", mx.getfloat("eps2"))
    return [
        ("natural", train_config(cfg, seed, class_count, regime=NATURAL)),
        (f"corruption {e1!r}", train_config(cfg, seed, class_count, regime=CORRUPTION,
                                            perturbation=PerturbationSpec.uniform_linf(e1))),
        (f"corruption {e2!r}", train_config(cfg, seed, class_count, regime=CORRUPTION,
                                            perturbation=PerturbationSpec.uniform_linf(e2))),
        (f"pgd {e1!r}", train_config(cfg, seed, class_count, regime=PGD, pgd=pgd_from_section(cfg["train"], e1))),
    ]


def matrix_metrics(cfg):
    mx = cfg["matrix"]
    e1, e2, k = mx.getfloat("eps1"), mx.getfloat("eps2"), mx.getint("k")
    zo = LossSpec(ZERO_ONE)
    return [
        MetricSpec("natural_risk", zo),
        MetricSpec(f"a_tsrm {e1!r}", zo, PerturbationSpec.uniform_linf(e1), k),
        MetricSpec(f"a_tsrm {e2!r}", zo, PerturbationSpec.uniform_linf(e2), k),
        MetricSpec(f"adversarial_risk {e1!r}", zo, pgd=pgd_from_section(cfg["train"], e1)),
    ]


def cmd_matrix(cfg, args):
    dspec = data_spec(cfg)
    mnist_dir = cfg["data"]["mnist_dir"]
    hidden = hidden_sizes(cfg)
    metrics = matrix_metrics(cfg)
    out = RowWriter(cfg["run"]["output"], ["training_method", "metric", "split", "seed", "value", "accuracy",
                                           "std_error"])

    def cell(seed, method_index):
        def run():
            tr, te = load_data(dspec, mnist_dir)
            name, tcfg = matrix_methods(cfg, seed, tr.class_count)[method_index]
            net = trained_net(dspec, hidden, tcfg, mnist_dir)
            rows = []
            for m in metrics:
                for split, data in (("train", tr), ("test", te)):
                    rows.append((m, split, m.evaluate(net, data, seed), cell_spec(dspec, hidden, tcfg, m, split, seed)))
            return name, rows
        return run

    grid = [(seed, i) for seed in _ints(cfg["run"]["seeds"]) for i in range(4)]
    for (seed, i), (res, err) in zip(grid, _run_cells([cell(*g) for g in grid], cfg["run"].getint("n_jobs"))):
        if err:
            for m in metrics:
                for split in ("train", "test"):
                    out.write({"training_method": f"method {i}", "metric": m.name, "split": split, "seed": seed},
                              {"seed": seed}, err)
            continue
        name, rows = res
        for m, split, est, spec in rows:
            out.write({"training_method": name, "metric": m.name, "split": split, "seed": seed, "value": est.mean,
                       "accuracy": 1.0 - est.mean, "std_error": est.std_error}, spec)
    out.close()
    return 1 if out.failed else 0


def weighted_setup(cfg, seed, class_count):
    w = cfg["weighted"]
    loss = LossSpec.weighted(class_count, {w.getint("weight_class"): _positive("weight", w.getfloat("weight"))})
    sigma = _positive("sigma", w.getfloat("sigma"))
    common = dict(loss=loss, lr=w.getfloat("lr"), momentum=w.getfloat("momentum"))
    regimes = [
        (NATURAL, train_config(cfg, seed, class_count, regime=NATURAL, **common)),
        (CORRUPTION, train_config(cfg, seed, class_count, regime=CORRUPTION,
                                  perturbation=PerturbationSpec.gaussian(sigma), **common)),
    ]
    metrics = (MetricSpec("natural_risk", loss), MetricSpec("srr", loss, PerturbationSpec.gaussian(sigma),
                                                            w.getint("k")))
    return regimes, metrics


def cmd_weighted(cfg, args):
    dspec = data_spec(cfg)
    mnist_dir = cfg["data"]["mnist_dir"]
    hidden = hidden_sizes(cfg)
    every = cfg["weighted"].getint("eval_every")
    out = RowWriter(cfg["run"]["output"], ["regime", "epoch", "metric", "split", "seed", "value", "std_error"])

    def cell(seed, ri):
        def run():
            tr, te = load_data(dspec, mnist_dir)
            regimes, metrics = weighted_setup(cfg, seed, tr.class_count)
            regime, tcfg = regimes[ri]
            run_cfg = replace(tcfg, eval_every=every, eval_metrics=metrics)
            _, hist = train(init_network(layer_sizes(tr, hidden), seed), tr, te, run_cfg)
            rows = []
            for snap in hist.snapshots:
                stream = (int(Purpose.SNAPSHOT), snap.epoch)
                epoch_cfg = TrainConfig.from_dict({**tcfg.describe(), "epochs": snap.epoch}, tr.class_count)
                for m in metrics:
                    for split, ests in (("train", snap.train), ("test", snap.test)):
                        rows.append(({"regime": regime, "epoch": snap.epoch, "metric": m.name, "split": split,
                                      "seed": seed, "value": ests[m.name].mean, "std_error": ests[m.name].std_error},
                                     cell_spec(dspec, hidden, epoch_cfg, m, split, seed, stream)))
            return rows
        return run

    grid = [(seed, ri) for seed in _ints(cfg["run"]["seeds"]) for ri in range(2)]
    for (seed, ri), (rows, err) in zip(grid, _run_cells([cell(*g) for g in grid], cfg["run"].getint("n_jobs"))):
        if err:
            out.write({"regime": (NATURAL, CORRUPTION)[ri], "seed": seed}, {"seed": seed}, err)
            continue
        for row, spec in rows:
            out.write(row, spec)
    out.close()
    return 1 if out.failed else 0


def read_rows(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def value_of(row):
    for key in ("mean", "value"):
        if row.get(key):
            return float(row[key])
    return None


def cmd_replay(cfg, args):
    rows = read_rows(args.csv)
    wanted = _ints(args.rows) if args.rows else range(len(rows))
    mnist_dir = cfg["data"]["mnist_dir"]
    bad = 0
    for i in wanted:
        row = rows[i]
        if row.get("error"):
            print(f"row {i}: skipped (recorded error)")
            continue
        try:
            got = evaluate_spec(json.loads(row["spec"]), mnist_dir).mean
        except (SrriskError, ValueError, KeyError) as exc:
            print(f"row {i}: FAIL ({type(exc).__name__}: {exc})")
            bad += 1
            continue
        want = value_of(row)
        same = got == want
        bad += not same
        print(f"row {i}: {'ok' if same else 'MISMATCH'} recorded={want!r} replayed={got!r}")
    return 1 if bad else 0


COMMANDS = {
    "train": (cmd_train, "train one network and save it"),
    "eval": (cmd_eval, "evaluate a saved network"),
    "sweep": (cmd_sweep, "A-TSRM over an evaluation grid for corruption-trained networks"),
    "matrix": (cmd_matrix, "train/test matrix of training methods against metrics"),
    "weighted": (cmd_weighted, "learning curves under a class-weighted loss"),
    "print-config": (cmd_print_config, "print the effective configuration"),
    "replay": (cmd_replay, "recompute CSV rows from their recorded specs"),
}


def build_parser():
    parser = argparse.ArgumentParser(prog="srrisk", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    for name, (_, help_) in COMMANDS.items():
        p = sub.add_parser(name, help=help_)
        p.add_argument("-c", "--config", help="INI config file; flags override it")
        p.add_argument("--set", action="append", default=[], metavar="SECTION.KEY=VALUE",
                       help="override any config key (repeatable)")
        p.add_argument("-o", "--output", help="CSV output path ('-' for stdout)")
        p.add_argument("--seeds", help="comma-separated seeds")
        p.add_argument("--model", help="network file to write (train) or read (eval)")
        p.add_argument("--epochs", type=int)
        p.add_argument("--train-subset", type=int, help="training points (0 = all)")
        p.add_argument("--mnist-dir")
        p.add_argument("-j", "--n-jobs", type=int, help="cells run concurrently")
        p.add_argument("-v", "--verbose", action="store_true")
        if name == "replay":
            p.add_argument("csv")
            p.add_argument("--rows", help="comma-separated row indices (default all)")
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    overrides = list(args.set)
    for attr, key in SHORTCUTS.items():
        value = getattr(args, attr, None)
        if value is not None:
            overrides.append(f"{key}={value}")
    try:
        cfg = load_config(args.config, overrides)
        if not _ints(cfg["run"]["seeds"]):
            raise ConfigurationError("need at least one seed")
        return COMMANDS[args.command][0](cfg, args)
    except (SrriskError, ValueError, OSError) as exc:
        print(f"srrisk: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
