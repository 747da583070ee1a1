"""Prior-structure sweeps with Pareto selection over (modularity, crossings)."""

import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, replace

import numpy as np

from .annealing import AnnealConfig, anneal
from .exceptions import InputError
from .graph import Clustering, induced_graph
from .layout import Layout, fr_layout, grid_layout
from .prior import KERNELS, MAX_GRID_DIM, grid_prior, identity_prior, neighbor_scale
from .quality import QualityPoint, count_crossings, modularity, organized_modularity, pareto_front

__all__ = ["SweepConfig", "RunReport", "run_sweep", "default_lambdas", "two_phase_crossings"]

NEIGHBOR_SIMILARITIES = (0.0, 0.25, 0.5, 0.75)


def default_lambdas(kernel):
    """Scales giving nearest-neighbor similarity 0, 0.25, 0.5 and 0.75."""
    return [neighbor_scale(kernel, s) for s in NEIGHBOR_SIMILARITIES]


@dataclass(frozen=True)
class SweepConfig:
    """What to try.

    ``lambda_values=None`` picks :func:`default_lambdas` per kernel; an
    explicit list is used for every kernel.
    """

    grid_sizes: tuple = ((3, 3), (4, 4), (5, 5))
    kernels: tuple = ("exponential", "linear")
    lambda_values: tuple = None
    cluster_counts: tuple = tuple(range(2, 26))
    anneal: AnnealConfig = field(default_factory=AnnealConfig)
    seeds_per_config: int = 1
    fr_restarts: int = 10

    def __post_init__(self):
        grids = tuple(tuple(int(v) for v in g) for g in self.grid_sizes)
        if not grids:
            raise InputError("grid_sizes must not be empty")
        for r, c in grids:
            if not (1 <= r <= MAX_GRID_DIM and 1 <= c <= MAX_GRID_DIM):
                raise InputError(f"grid {r}x{c} exceeds {MAX_GRID_DIM} per dimension")
        object.__setattr__(self, "grid_sizes", grids)
        if not self.kernels:
            raise InputError("kernels must not be empty")
        for k in self.kernels:
            if k not in KERNELS:
                raise InputError(f"unknown kernel {k!r}")
        object.__setattr__(self, "kernels", tuple(self.kernels))
        if self.lambda_values is not None:
            if len(self.lambda_values) == 0:
                raise InputError("lambda_values must not be empty")
            object.__setattr__(self, "lambda_values", tuple(float(x) for x in self.lambda_values))
        counts = tuple(int(c) for c in (self.cluster_counts or ()))
        if any(c < 1 for c in counts):
            raise InputError("cluster counts must be >= 1")
        object.__setattr__(self, "cluster_counts", counts)
        if int(self.seeds_per_config) < 1:
            raise InputError("seeds_per_config must be >= 1")
        if int(self.fr_restarts) < 1:
            raise InputError("fr_restarts must be >= 1")

    def lambdas_for(self, kernel):
        return list(self.lambda_values) if self.lambda_values is not None else default_lambdas(kernel)

    def tasks(self):
        """Every run as a dict, in config-index order."""
        out = []
        for rows, cols in self.grid_sizes:
            for kernel in self.kernels:
                for lam in self.lambdas_for(kernel):
                    for s in range(self.seeds_per_config):
                        out.append({"kind": "organized", "rows": rows, "cols": cols,
                                    "kernel": kernel, "lambda": lam, "n_clusters": rows * cols,
                                    "seed": self.anneal.seed + s})
        for c in self.cluster_counts:
            for s in range(self.seeds_per_config):
                out.append({"kind": "identity", "rows": None, "cols": None, "kernel": "identity",
                            "lambda": None, "n_clusters": c, "seed": self.anneal.seed + s})
        for i, t in enumerate(out):
            t["id"] = i
        return out

    def to_dict(self):
        d = asdict(self)
        d["grid_sizes"] = [list(g) for g in self.grid_sizes]
        d["kernels"] = list(self.kernels)
        d["lambda_values"] = None if self.lambda_values is None else list(self.lambda_values)
        d["cluster_counts"] = list(self.cluster_counts)
        return d

    @classmethod
    def from_dict(cls, d):
        d = dict(d)
        if "anneal" in d and isinstance(d["anneal"], dict):
            d["anneal"] = AnnealConfig(**d["anneal"])
        for key in ("grid_sizes", "kernels", "lambda_values", "cluster_counts"):
            if key in d and d[key] is not None:
                d[key] = tuple(tuple(v) if isinstance(v, list) else v for v in d[key])
        unknown = set(d) - set(cls.__dataclass_fields__)
        if unknown:
            raise InputError(f"unknown sweep config keys: {sorted(unknown)}")
        return cls(**d)


@dataclass
class RunReport:
    """Rows sorted by decreasing modularity, with Pareto flags.

    ``seconds`` (wall time per row and total) is kept out of the JSON form so
    that reports are byte-reproducible.
    """

    graph: dict
    config: SweepConfig
    rows: list
    seconds: float = 0.0
    artifacts: list = field(default_factory=list)

    @property
    def pareto_rows(self):
        return [r for r in self.rows if r["pareto"]]

    def points(self):
        return [_point(r) for r in self.rows if r["crossings"] is not None]

    def to_dict(self):
        keys = ("id", "kind", "rows", "cols", "kernel", "lambda", "n_clusters", "seed",
                "modularity", "organized_modularity", "nonempty_clusters", "crossings",
                "pareto", "error", "assignments")
        return {
            "graph": self.graph,
            "sweep": self.config.to_dict(),
            "rows": [{k: r.get(k) for k in keys} for r in self.rows],
            "pareto": [r["id"] for r in self.pareto_rows],
            "artifacts": list(self.artifacts),
        }


def _point(row):
    return QualityPoint(modularity=row["modularity"], crossings=row["crossings"],
                        config_id=row["id"], nonempty_clusters=row["nonempty_clusters"])


def _run_task(graph, task, anneal_config):
    start = time.perf_counter()
    row = dict(task)
    row.update(modularity=None, organized_modularity=None, nonempty_clusters=None,
               crossings=None, pareto=False, error=None, assignments=None)
    try:
        if task["kind"] == "organized":
            prior = grid_prior(task["rows"], task["cols"], task["kernel"], task["lambda"])
        else:
            prior = identity_prior(task["n_clusters"])
        cfg = replace(anneal_config, seed=task["seed"])
        res = anneal(graph, prior, cfg)
        cl = res.clustering
        row["modularity"] = modularity(graph, cl)
        row["organized_modularity"] = organized_modularity(graph, cl, prior)
        row["nonempty_clusters"] = cl.nonempty_clusters()
        row["assignments"] = [int(a) for a in cl.assignment]
        if task["kind"] == "organized":
            lay = grid_layout(cl, prior, induced_graph(graph, cl))
            row["crossings"] = count_crossings(lay.points, lay.edges)
    except Exception as exc:  # one failed run must not stop the sweep
        row["error"] = f"{type(exc).__name__}: {exc}"
    row["seconds"] = time.perf_counter() - start
    return row


def two_phase_crossings(graph, clustering, restarts=10, seed=0):
    """Fewest crossings over force-directed layouts of the induced graph from random starts."""
    ind = induced_graph(graph, clustering)
    keep = np.flatnonzero(ind.sizes > 0)
    remap = {int(k): i for i, k in enumerate(keep)}
    edges = [(remap[k], remap[l]) for k, l, _ in ind.edges()]
    base = Layout(np.zeros((len(keep), 2)), ind.sizes[keep],
                  np.array(edges, dtype=np.int64).reshape(-1, 2), np.ones(len(edges)),
                  tuple(int(k) for k in keep))
    best = None
    for r in range(restarts):
        lay = fr_layout(base, seed=seed + r)
        x = count_crossings(lay.points, lay.edges)
        if best is None or x < best[0]:
            best = (x, lay)
    return best


def run_sweep(graph, config=None, parallel=1):
    """Anneal every configuration, score it and flag Pareto-optimal rows.

    Organized runs are scored on modularity and on crossings of the induced
    graph drawn on the grid. Identity-prior runs are scored on modularity;
    the best of them is the two-phase baseline, whose crossings come from the
    best of ``fr_restarts`` random force-directed layouts.
    """
    config = config or SweepConfig()
    start = time.perf_counter()
    tasks = config.tasks()
    if parallel > 1:
        with ProcessPoolExecutor(max_workers=parallel) as pool:
            rows = list(pool.map(_run_task, [graph] * len(tasks), tasks, [config.anneal] * len(tasks)))
    else:
        rows = [_run_task(graph, t, config.anneal) for t in tasks]
    rows.sort(key=lambda r: r["id"])

    identity = [r for r in rows if r["kind"] == "identity" and r["error"] is None]
    if identity:
        best = max(identity, key=lambda r: (r["modularity"], -r["id"]))
        cl = Clustering(best["assignments"], best["n_clusters"])
        best["crossings"] = two_phase_crossings(graph, cl, config.fr_restarts, config.anneal.seed)[0]
        best["kind"] = "two-phase"

    scored = [r for r in rows if r["crossings"] is not None]
    front = {p.config_id for p in pareto_front(_point(r) for r in scored)}
    for r in rows:
        r["pareto"] = r["id"] in front
    rows.sort(key=lambda r: (-(r["modularity"] if r["modularity"] is not None else -np.inf), r["id"]))
    return RunReport(
        graph={"n": graph.n, "edge_count": graph.edge_count, "total_weight": graph.total_weight},
        config=config,
        rows=rows,
        seconds=time.perf_counter() - start,
    )
