"""Reproducible on-disk artifacts: tables, JSON reports, manifests.

Every output directory carries one ``manifest.json`` describing the run
(graph, operator specs, initial state, horizon, thresholds, RNG algorithm
and master seed, tool version); data files reference the manifest by its
hash. Floats use shortest round-trip formatting and all row orders are
canonical, so re-running a manifest reproduces files byte for byte.

Tables are written as CSV (default, with ``# key=value`` comment lines
for metadata) or as an equivalent JSON document, and read back either
way.
"""

from __future__ import annotations

import csv
import hashlib
import json
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

from .coins import UNITARY_ATOL
from .equivalence import (
    COLUMN_SUM_ERROR,
    ZERO_PROB,
    TransitionMatrix,
    TransitionMatrixSeq,
    state_index,
    state_label,
)
from .errors import ConfigError, ValidationError
from .graphs import PortGraph, ProductGraph, graph_from_json, graph_hash
from .trajectory import RNG_ALGORITHM, TrajectoryEnsemble
from .walk import NORM_ATOL, CoinSpec, InteractionSpec, ShiftSpec, WaveFunction

__all__ = [
    "RunManifest",
    "Table",
    "coin_from_json",
    "shift_from_json",
    "interaction_from_json",
    "initial_state_from_json",
    "graph_and_spaces",
    "rho_table",
    "matrix_table",
    "trajectories_table",
    "ensemble_mean_table",
    "tvd_table",
    "write_table",
    "read_table",
    "save_sequence",
    "load_sequence",
    "write_json",
]

MANIFEST_NAME = "manifest.json"
TOOL_VERSION = "0.1.0"


def _fmt(x) -> str:
    if isinstance(x, float):
        return repr(x)
    return str(x)


# ---------------------------------------------------------------------------
# manifest
# ---------------------------------------------------------------------------

@dataclass
class RunManifest:
    """Everything needed to reproduce a run's outputs bit-identically."""

    command: str
    graph: dict
    graph_sha256: str
    walkers: int = 1
    coin: dict | None = None
    shift: dict | None = None
    interaction: dict | None = None
    initial_state: list | None = None
    horizon: int | None = None
    seed: int | None = None
    rng_algorithm: str = RNG_ALGORITHM
    tool_version: str = TOOL_VERSION
    thresholds: dict = field(default_factory=lambda: {
        "zero_probability": ZERO_PROB,
        "unitary_atol": UNITARY_ATOL,
        "column_sum_error": COLUMN_SUM_ERROR,
        "norm_atol": NORM_ATOL,
    })
    params: dict = field(default_factory=dict)

    @property
    def sha256(self) -> str:
        compact = json.dumps(asdict(self), sort_keys=True,
                             separators=(",", ":"))
        return hashlib.sha256(compact.encode()).hexdigest()

    def save(self, out_dir: str | Path) -> Path:
        path = Path(out_dir) / MANIFEST_NAME
        path.write_text(json.dumps(asdict(self), sort_keys=True, indent=2)
                        + "\n")
        return path

    @classmethod
    def load(cls, out_dir: str | Path) -> "RunManifest":
        path = Path(out_dir) / MANIFEST_NAME
        return cls(**json.loads(path.read_text()))


def manifest_for(config: dict, command: str, base: PortGraph,
                 **params) -> RunManifest:
    return RunManifest(
        command=command,
        graph=config["graph"],
        graph_sha256=graph_hash(base),
        walkers=int(config.get("walkers", 1)),
        coin=config.get("coin"),
        shift=config.get("shift"),
        interaction=config.get("interaction"),
        initial_state=config.get("initial_state"),
        horizon=config.get("horizon"),
        seed=config.get("seed"),
        params=params,
    )


# ---------------------------------------------------------------------------
# operator and state specs from JSON documents
# ---------------------------------------------------------------------------

def _complex_matrix(rows) -> np.ndarray:
    """Parse a matrix whose entries are numbers or [re, im] pairs."""
    def entry(x):
        if isinstance(x, (list, tuple)):
            return complex(x[0], x[1])
        return complex(x)
    return np.array([[entry(x) for x in row] for row in rows],
                    dtype=np.complex128)


def _scheduled(doc: dict, build: Callable[[dict], object]):
    """``{"schedule": {"0": spec, ...}, "default": spec}`` becomes a
    callable ``t -> spec``; plain documents build the spec directly."""
    if "schedule" not in doc:
        return build(doc)
    default_doc = doc.get("default")
    if default_doc is None:
        raise ConfigError("scheduled spec needs a 'default' entry")
    table = {int(t): build(sub) for t, sub in doc["schedule"].items()}
    default = build(default_doc)
    return lambda t: table.get(t, default)


def coin_from_json(doc: dict, graph: PortGraph):
    def build(d: dict) -> CoinSpec:
        kind = d.get("type")
        if kind == "hadamard":
            return CoinSpec.hadamard(graph)
        if kind == "grover":
            return CoinSpec.grover(graph)
        if kind == "identity":
            return CoinSpec.identity(graph)
        if kind == "random-unitary":
            rng = np.random.default_rng(d.get("seed"))
            return CoinSpec.random_unitary(graph, rng)
        if kind == "explicit":
            blocks = [_complex_matrix(b) for b in d["blocks"]]
            return CoinSpec.from_blocks(graph, blocks,
                                        validate=d.get("validate", True))
        raise ConfigError(f"unknown coin type {kind!r}")
    return _scheduled(doc, build)


def shift_from_json(doc: dict, graph: PortGraph):
    def build(d: dict) -> ShiftSpec:
        kind = d.get("type")
        if kind in ("flip-flop", "flipflop", "default"):
            return ShiftSpec.flip_flop(graph)
        if kind == "moving":
            return ShiftSpec.moving(graph)
        if kind == "explicit":
            return ShiftSpec.from_permutation(
                graph, d["permutation"],
                enforce_edges=d.get("enforce_edges", True))
        raise ConfigError(f"unknown shift type {kind!r}")
    return _scheduled(doc, build)


def interaction_from_json(doc: dict | None, pg: ProductGraph):
    if doc is None:
        return None

    def build(d: dict) -> InteractionSpec:
        kind = d.get("type")
        if kind == "identity":
            return InteractionSpec.identity(pg)
        if kind == "coincidence-phase":
            return InteractionSpec.coincidence_phase(pg, float(d["phi"]))
        if kind == "explicit":
            blocks = {tuple(item["vertices"]): _complex_matrix(item["block"])
                      for item in d["tuples"]}
            return InteractionSpec.from_blocks(pg, blocks)
        raise ConfigError(f"unknown interaction type {kind!r}")
    return _scheduled(doc, build)


def initial_state_from_json(
    doc: list | None,
    graph: PortGraph | ProductGraph,
) -> WaveFunction:
    """Parse ``[{"vertex": v, "port": c, "re": x, "im": y}, ...]``.

    The default (None) is the localized state on vertex 0, port 0; lists
    in the vertex/port fields address multiple walkers. The state is
    renormalised on load (with a warning beyond 1e-8 drift).
    """
    if doc is None:
        k = graph.num_walkers if isinstance(graph, ProductGraph) else 1
        zeros = (0,) * k if k > 1 else 0
        return WaveFunction.localized(graph, zeros, zeros)
    comps = []
    for item in doc:
        vertex = item["vertex"]
        port = item.get("port", 0)
        amp = complex(item.get("re", 0.0), item.get("im", 0.0))
        vertex = tuple(vertex) if isinstance(vertex, list) else vertex
        port = tuple(port) if isinstance(port, list) else port
        comps.append((vertex, port, amp))
    return WaveFunction.from_components(graph, comps)


def graph_and_spaces(
    config: dict,
) -> tuple[PortGraph, PortGraph | ProductGraph, int]:
    """Build the base graph and, when walkers > 1, the product space."""
    if "graph" not in config:
        raise ConfigError("config needs a 'graph' entry")
    base = graph_from_json(config["graph"])
    walkers = int(config.get("walkers", 1))
    if walkers < 1:
        raise ConfigError("walkers must be >= 1")
    space = ProductGraph(base, walkers) if walkers > 1 else base
    return base, space, walkers


# ---------------------------------------------------------------------------
# tables
# ---------------------------------------------------------------------------

@dataclass
class Table:
    header: list[str]
    rows: list[list]
    meta: dict = field(default_factory=dict)


def write_table(path_base: str | Path, table: Table,
                fmt: str = "csv") -> Path:
    """Write a table as ``<base>.csv`` or ``<base>.json``."""
    base = Path(path_base)
    if fmt == "csv":
        path = base.with_suffix(".csv")
        with path.open("w", newline="") as fh:
            for key in sorted(table.meta):
                fh.write(f"# {key}={table.meta[key]}\n")
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(table.header)
            for row in table.rows:
                writer.writerow([_fmt(x) for x in row])
        return path
    if fmt == "json":
        path = base.with_suffix(".json")
        payload = {"meta": table.meta, "header": table.header,
                   "rows": table.rows}
        path.write_text(json.dumps(payload, sort_keys=True) + "\n")
        return path
    raise ConfigError(f"unknown output format {fmt!r}")


def read_table(path_base: str | Path) -> Table:
    """Read ``<base>.csv`` or ``<base>.json``, whichever exists."""
    base = Path(path_base)
    csv_path = base.with_suffix(".csv")
    json_path = base.with_suffix(".json")
    if csv_path.exists():
        meta: dict = {}
        rows: list[list] = []
        header: list[str] | None = None
        with csv_path.open() as fh:
            for line in fh:
                line = line.rstrip("\n")
                if not line:
                    continue
                if line.startswith("#"):
                    for token in line[1:].split():
                        if "=" in token:
                            key, val = token.split("=", 1)
                            meta[key] = val
                    continue
                cells = line.split(",")
                if header is None:
                    header = cells
                else:
                    rows.append(cells)
        if header is None:
            raise ValidationError(f"{csv_path} has no header row")
        return Table(header, rows, meta)
    if json_path.exists():
        payload = json.loads(json_path.read_text())
        return Table(payload["header"], payload["rows"],
                     payload.get("meta", {}))
    raise ValidationError(f"neither {csv_path} nor {json_path} exists")


def rho_table(rho: np.ndarray, num_walkers: int, num_base: int,
              manifest_sha: str | None = None) -> Table:
    """Rows ``t,v,rho`` (tuple states serialised as ``u1|u2|...``)."""
    rho = np.asarray(rho)
    rows = [[t, state_label(v, num_walkers, num_base), float(rho[t, v])]
            for t in range(rho.shape[0]) for v in range(rho.shape[1])]
    meta = {"states": rho.shape[1], "walkers": num_walkers,
            "base": num_base}
    if manifest_sha:
        meta["manifest"] = manifest_sha
    return Table(["t", "v", "rho"], rows, meta)


def matrix_table(seq: TransitionMatrixSeq,
                 manifest_sha: str | None = None) -> Table:
    """Rows ``t,u,v,p`` over all materialised nonzero entries."""
    rows = []
    for t, mat in enumerate(seq.matrices):
        for u in sorted(mat.columns):
            targets, probs = mat.columns[u]
            for v, p in zip(targets.tolist(), probs.tolist()):
                if p != 0.0:
                    rows.append([t, seq.state_label(u), seq.state_label(v),
                                 float(p)])
    meta = {"states": seq.num_states, "walkers": seq.num_walkers,
            "base": seq.num_base_vertices}
    if manifest_sha:
        meta["manifest"] = manifest_sha
    return Table(["t", "u", "v", "p"], rows, meta)


def _torus_coords(dims: Sequence[int], vertex: int) -> tuple[int, ...]:
    # row-major unfolding matching the torus generator's vertex ids
    out = []
    for size in reversed(dims):
        out.append(vertex % size)
        vertex //= size
    return tuple(reversed(out))


def trajectories_table(
    ens: TrajectoryEnsemble,
    num_walkers: int = 1,
    num_base: int | None = None,
    torus_dims: Sequence[int] | None = None,
    manifest_sha: str | None = None,
) -> Table:
    """Rows ``traj_id,t,vertex`` plus unfolded ``x,y`` columns on a
    generated 2-D torus (plot-ready long format)."""
    num_base = num_base if num_base is not None else ens.num_states
    unfold = (torus_dims is not None and len(torus_dims) == 2
              and num_walkers == 1)
    header = ["traj_id", "t", "vertex"] + (["x", "y"] if unfold else [])
    rows = []
    for i in range(ens.size):
        for t in range(ens.length + 1):
            state = int(ens.paths[i, t])
            row = [i, t, state_label(state, num_walkers, num_base)]
            if unfold:
                row += list(_torus_coords(torus_dims, state))
            rows.append(row)
    meta = {"trajectories": ens.size, "length": ens.length,
            "method": ens.method, "rng": RNG_ALGORITHM}
    if ens.master_seed is not None:
        meta["seed"] = ens.master_seed
    if manifest_sha:
        meta["manifest"] = manifest_sha
    return Table(header, rows, meta)


def ensemble_mean_table(
    ens: TrajectoryEnsemble,
    torus_dims: Sequence[int],
    manifest_sha: str | None = None,
) -> Table:
    """Per-instant empirical mean of the unfolded torus coordinates."""
    dims = tuple(int(d) for d in torus_dims)
    coords = np.array([_torus_coords(dims, v)
                       for v in range(int(np.prod(dims)))], dtype=np.float64)
    header = ["t"] + [f"mean_axis{i}" for i in range(len(dims))]
    rows = []
    for t in range(ens.length + 1):
        mean = coords[ens.paths[:, t]].mean(axis=0)
        rows.append([t] + [float(x) for x in mean])
    meta = {"manifest": manifest_sha} if manifest_sha else {}
    return Table(header, rows, meta)


def tvd_table(rows: Sequence[tuple[int, int, float]],
              manifest_sha: str | None = None) -> Table:
    meta = {"manifest": manifest_sha} if manifest_sha else {}
    return Table(["M", "t", "tvd"],
                 [[int(m), int(t), float(d)] for m, t, d in rows], meta)


# ---------------------------------------------------------------------------
# sequence round trip
# ---------------------------------------------------------------------------

def save_sequence(out_dir: str | Path, seq: TransitionMatrixSeq,
                  manifest_sha: str | None = None,
                  fmt: str = "csv") -> tuple[Path, Path]:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    p1 = write_table(out / "p_matrix", matrix_table(seq, manifest_sha), fmt)
    p2 = write_table(
        out / "rho",
        rho_table(seq.rho, seq.num_walkers, seq.num_base_vertices,
                  manifest_sha),
        fmt,
    )
    return p1, p2


def load_sequence(out_dir: str | Path) -> TransitionMatrixSeq:
    """Rebuild a sequence from persisted tables so sampling can run
    without re-evolving the walk."""
    out = Path(out_dir)
    rho_tab = read_table(out / "rho")
    num_states = int(rho_tab.meta.get("states", 0))
    walkers = int(rho_tab.meta.get("walkers", 1))
    base = int(rho_tab.meta.get("base", num_states))
    if num_states <= 0:
        raise ValidationError("rho table lacks the states metadata")

    times = sorted({int(r[0]) for r in rho_tab.rows})
    if times != list(range(len(times))):
        raise ValidationError("rho table has missing time rows")
    rho = np.zeros((len(times), num_states))
    for t, label, val in rho_tab.rows:
        rho[int(t), state_index(str(label), walkers, base)] = float(val)

    mat_tab = read_table(out / "p_matrix")
    by_time: dict[int, dict[int, list[tuple[int, float]]]] = {}
    for t, u_label, v_label, p in mat_tab.rows:
        col = by_time.setdefault(int(t), {}).setdefault(
            state_index(str(u_label), walkers, base), [])
        col.append((state_index(str(v_label), walkers, base), float(p)))
    matrices = []
    for t in range(len(times) - 1):
        cols = {}
        for u, entries in by_time.get(t, {}).items():
            entries.sort()
            cols[u] = (np.array([v for v, _ in entries], dtype=np.int64),
                       np.array([p for _, p in entries]))
        matrices.append(TransitionMatrix(t, num_states, cols))
    return TransitionMatrixSeq(matrices, rho, num_walkers=walkers,
                               num_base_vertices=base)


def write_json(path: str | Path, payload: dict) -> Path:
    path = Path(path)
    path.write_text(json.dumps(payload, sort_keys=True, indent=2) + "\n")
    return path
