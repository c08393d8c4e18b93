"""End-to-end multiway clustering runs and benchmark sweeps."""
import csv
import json
import os
import time
from collections import Counter
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .affinity import VARIANTS, build_affinity, save_affinity_csv
from .baselines import cp_als, factor_clustering, hooi
from .clustering import APParams, affinity_propagation, spectral_clustering
from .errors import ConfigError, MCAMError
from .metrics import NMI_NORMALIZATION, MultiwayClustering, ari, nmi
from .spectra import effective_dimension, mode_spectra
from .synthgen import SyntheticSpec, generate, save_labels_csv
from .tensor import MODES, read_tensor

ENGINES = ("ap", "sc")
METHODS = ("mcam1-ap", "mcam1-sc", "mcam2-ap", "mcam2-sc", "cp-kmeans", "tucker-kmeans")
WORKERS_ENV = "MCAM_WORKERS"


def env_workers():
    raw = os.environ.get(WORKERS_ENV, "1")
    try:
        return max(1, int(raw))
    except ValueError:
        raise ConfigError(f"{WORKERS_ENV} must be an integer, got {raw!r}") from None


@dataclass(frozen=True)
class RunConfig:
    input: str = None
    variant: str = "mcam1"
    engine: str = "ap"
    k: tuple = None
    r: int = None
    ap: APParams = APParams()
    seed: int = 0
    output: str = None

    def __post_init__(self):
        if self.variant not in VARIANTS:
            raise ConfigError(f"variant must be one of {sorted(VARIANTS)}, got {self.variant!r}")
        if self.engine not in ENGINES:
            raise ConfigError(f"engine must be one of {ENGINES}, got {self.engine!r}")
        if self.engine == "sc":
            if self.k is None:
                raise ConfigError("engine 'sc' needs cluster counts k = (k1, k2, k3)")
            k = tuple(int(v) for v in self.k)
            if len(k) != 3 or min(k) < 1:
                raise ConfigError(f"k must be three positive integers, got {self.k}")
            object.__setattr__(self, "k", k)
        elif self.k is not None:
            object.__setattr__(self, "k", tuple(int(v) for v in self.k))
        if self.r is not None and int(self.r) < 1:
            raise ConfigError(f"r must be at least 1, got {self.r}")

    def to_dict(self):
        doc = asdict(self)
        doc["k"] = list(self.k) if self.k is not None else None
        return doc


@dataclass
class ModeResult:
    clustering: object
    r: int
    r_estimated: int
    affinity: object


@dataclass
class MCAMResult:
    clustering: MultiwayClustering
    modes: list
    report: dict
    timings: dict = field(default_factory=dict)


def _with_mode(exc, mode):
    if exc.args and isinstance(exc.args[0], str) and not exc.args[0].startswith("mode-"):
        exc.args = (f"mode-{mode}: {exc.args[0]}",) + exc.args[1:]
    return exc


def cluster_mode(t, mode, variant="mcam1", engine="ap", k=None, r=None, ap=APParams(), seed=0,
                 spectra=None):
    """Spectra, affinity and clustering for one mode of ``t``."""
    try:
        if spectra is None:
            spectra = mode_spectra(t, mode)
        r_est = effective_dimension(spectra)
        r_used = r_est if r is None else int(r)
        aff = build_affinity(spectra, r_used, variant)
        if engine == "sc":
            mc = spectral_clustering(aff, k, seed)
        else:
            mc = affinity_propagation(aff, ap)
    except MCAMError as exc:
        raise _with_mode(exc, mode)
    return ModeResult(mc, r_used, r_est, aff)


def cluster(t, variant="mcam1", engine="ap", k=None, r=None, ap=APParams(), seed=0):
    """Multiway clustering of a 3-order tensor, one mode at a time.

    ``engine="sc"`` needs ``k = (k1, k2, k3)``; affinity propagation picks the
    cluster counts itself. ``r`` overrides the scree-estimated dimension.
    """
    cfg = RunConfig(variant=variant, engine=engine, k=k, r=r, ap=ap, seed=seed)
    return _run(t, cfg)


def _run(t, cfg):
    modes, timings = [], {}
    for mode in MODES:
        start = time.perf_counter()
        k = cfg.k[mode - 1] if cfg.k is not None else None
        modes.append(cluster_mode(t, mode, cfg.variant, cfg.engine, k, cfg.r, cfg.ap, cfg.seed))
        timings[f"mode{mode}_seconds"] = time.perf_counter() - start
    mc = MultiwayClustering(tuple(m.clustering for m in modes))
    report = {
        "version": __version__,
        "config": cfg.to_dict(),
        "dims": list(t.shape),
        "nmi_normalization": NMI_NORMALIZATION,
        "modes": [
            {
                "mode": m.clustering.mode,
                "r": m.r,
                "r_estimated": m.r_estimated,
                "n_clusters": m.clustering.n_clusters,
                "converged": m.clustering.converged,
                "iterations": m.clustering.iterations,
                "exemplars": list(m.clustering.exemplars) if m.clustering.exemplars else None,
                "preference": m.clustering.preference,
            }
            for m in modes
        ],
    }
    return MCAMResult(mc, modes, report, timings)


def write_json(doc, path):
    with open(path, "w") as fh:
        json.dump(doc, fh, indent=2, sort_keys=True)
        fh.write("\n")


def run_mcam(cfg):
    """Load ``cfg.input``, cluster it and write the outputs to ``cfg.output``.

    Files written: ``labels.csv`` (all modes), ``labels_mode{n}.csv``,
    ``affinity_mode{n}.csv``, ``report.json`` and ``timings.json``. The
    report holds no wall-clock data, so equal configs give equal reports.
    """
    if cfg.input is None:
        raise ConfigError("no input tensor given")
    t = read_tensor(cfg.input)
    result = _run(t, cfg)
    if cfg.output is not None:
        out = Path(cfg.output)
        out.mkdir(parents=True, exist_ok=True)
        save_labels_csv(result.clustering.labels, out / "labels.csv")
        for m in result.modes:
            n = m.clustering.mode
            with open(out / f"labels_mode{n}.csv", "w", newline="") as fh:
                w = csv.writer(fh, lineterminator="\n")
                w.writerow(["index", "label"])
                w.writerows(enumerate(int(v) for v in m.clustering.labels))
            save_affinity_csv(m.affinity, out / f"affinity_mode{n}.csv")
        write_json(result.report, out / "report.json")
        write_json(result.timings, out / "timings.json")
    return result


# --------------------------------------------------------------------------
# sweeps
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class SweepSpec:
    """A grid of synthetic benchmark runs.

    ``r_values`` forces the affinity dimension of the MCAM methods (``None``
    entries mean "estimate"); ``ranks`` sets the decomposition rank of the
    baselines (``None`` means the number of clusters).
    """

    gammas: tuple
    methods: tuple
    repetitions: int = 10
    base_seed: int = 0
    dims: tuple = (100, 100, 100)
    n_clusters: int = 9
    block_size: int = 11
    r_values: tuple = (None,)
    ranks: tuple = (None,)
    ap: APParams = APParams()

    def __post_init__(self):
        if not self.methods:
            raise ConfigError("sweep needs at least one method")
        bad = [m for m in self.methods if m not in METHODS]
        if bad:
            raise ConfigError(f"unknown methods {bad}; choose from {METHODS}")
        if not self.gammas:
            raise ConfigError("sweep needs at least one gamma")
        if self.repetitions < 1:
            raise ConfigError("repetitions must be positive")
        object.__setattr__(self, "gammas", tuple(float(g) for g in self.gammas))
        object.__setattr__(self, "methods", tuple(self.methods))
        object.__setattr__(self, "dims", tuple(self.dims))
        object.__setattr__(self, "r_values", tuple(self.r_values) or (None,))
        object.__setattr__(self, "ranks", tuple(self.ranks) or (None,))

    @classmethod
    def from_dict(cls, doc):
        doc = dict(doc)
        if "ap" in doc:
            doc["ap"] = APParams(**doc["ap"])
        try:
            return cls(**doc)
        except TypeError as exc:
            raise ConfigError(str(exc)) from None

    def labels(self):
        """(method label, method, r, rank) for every configured variant."""
        out = []
        for method in self.methods:
            if method.startswith("mcam"):
                for r in self.r_values:
                    out.append((method if r is None else f"{method}@r={r}", method, r, None))
            else:
                for d in self.ranks:
                    out.append((method if d is None else f"{method}@d={d}", method, None, d))
        return out


def _one_run(spec, gamma, rep):
    seed = spec.base_seed + rep
    syn = SyntheticSpec.blocks(spec.dims, spec.n_clusters, spec.block_size, gamma, True, seed)
    t, truth = generate(syn)
    c = spec.n_clusters
    records = []
    spectra, cp_models = {}, {}
    for label, method, r, d in spec.labels():
        rec = {"gamma": gamma, "method": label, "rep": rep, "seed": seed}
        try:
            if method.startswith("mcam"):
                variant, engine = method.split("-")
                modes = []
                for mode in MODES:
                    if mode not in spectra:
                        spectra[mode] = mode_spectra(t, mode)
                    modes.append(cluster_mode(t, mode, variant, engine, c, r, spec.ap, seed,
                                              spectra=spectra[mode]))
                labels = [m.clustering.labels for m in modes]
                rec["r"] = [m.r for m in modes]
                rec["n_clusters"] = [m.clustering.n_clusters for m in modes]
                if engine == "ap":
                    # AP outcomes depend on the preference; keep it next to the result
                    rec["preference"] = [m.clustering.preference for m in modes]
                    rec["converged"] = [m.clustering.converged for m in modes]
            else:
                rank = c if d is None else int(d)
                if method == "cp-kmeans":
                    model = cp_models.get(rank) or cp_als(t, rank, seed=seed)
                    cp_models[rank] = model
                else:
                    model = hooi(t, (rank,) * 3, seed=seed)
                labels = [factor_clustering(model, mode, c, seed).labels for mode in MODES]
                rec["r"] = None
                rec["n_clusters"] = [int(lab.max()) + 1 for lab in labels]
            rec["ari"] = [ari(truth.labels[n], labels[n]) for n in range(3)]
            rec["nmi"] = [nmi(truth.labels[n], labels[n]) for n in range(3)]
        except Exception as exc:  # a failed cell must not stop the sweep
            rec["error"] = f"{type(exc).__name__}: {exc}"
        records.append(rec)
    return records


def _one_run_packed(args):
    return _one_run(*args)


@dataclass
class SweepResult:
    rows: list
    runs: list

    def write_csv(self, path):
        cols = ["gamma", "method", "ari_mean", "ari_std", "nmi_mean", "nmi_std", "r_mode"]
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(cols)
            for row in self.rows:
                w.writerow(["" if row[c] is None else row[c] for c in cols])


def _modal(values):
    if not values:
        return None
    counts = Counter(values)
    top = max(counts.values())
    return min(v for v, n in counts.items() if n == top)


def aggregate(spec, runs):
    rows = []
    for gamma in spec.gammas:
        for label, *_ in spec.labels():
            cell = [r for r in runs if r["gamma"] == gamma and r["method"] == label and "ari" in r]
            row = {"gamma": gamma, "method": label, "ari_mean": None, "ari_std": None,
                   "nmi_mean": None, "nmi_std": None, "r_mode": None, "n_runs": len(cell)}
            if cell:
                a = np.array([np.mean(r["ari"]) for r in cell])
                b = np.array([np.mean(r["nmi"]) for r in cell])
                row.update(ari_mean=float(a.mean()), ari_std=float(a.std()),
                           nmi_mean=float(b.mean()), nmi_std=float(b.std()))
                rs = [v for r in cell if r["r"] for v in r["r"]]
                row["r_mode"] = _modal(rs)
            rows.append(row)
    return rows


def run_sweep(spec, workers=None):
    """Run every (gamma, repetition) cell and aggregate ARI/NMI per method.

    Repetition ``t`` uses seed ``base_seed + t``. Runs execute on a process
    pool of ``workers`` (default: ``$MCAM_WORKERS`` or 1); results are
    ordered by (gamma, method, repetition) whatever the completion order.
    """
    workers = env_workers() if workers is None else workers
    jobs = [(spec, g, rep) for g in spec.gammas for rep in range(spec.repetitions)]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            batches = list(pool.map(_one_run_packed, jobs))
    else:
        batches = [_one_run(*job) for job in jobs]
    order = {label: i for i, (label, *_) in enumerate(spec.labels())}
    runs = sorted((r for b in batches for r in b),
                  key=lambda r: (r["gamma"], order[r["method"]], r["rep"]))
    return SweepResult(aggregate(spec, runs), runs)
