"""Non-homogeneous random-walk matrices equivalent to a coined walk.

Between two consecutive wavefunctions the vertex distribution evolves as
``rho(t+1) = P(t) rho(t)`` for the column-stochastic matrix

    p[v, u](t) = rho(v, c, t+1) / rho(u, t)   for rho(u, t) > 0, (u, v) an edge
    p[v, u](t) = 1 / d(u)                     for rho(u, t) = 0, (u, v) an edge
    p[v, u](t) = 0                            otherwise,

where ``c`` is the port of ``v`` fed by ``u`` under the shift actually in
use. Unitarity of the step operator makes every column a probability
distribution (entries bounded by the Cauchy-Schwarz inequality, sums equal
to the source vertex mass). The same construction runs on the K-walker
product graph, where states are vertex tuples.

Construction cost is dominated by the wavefunction evolution itself
(quadratic in the directed edge count per step for general operators);
emitting one matrix is linear in its nonzeros.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .errors import ConsistencyError, ValidationError
from .graphs import PortGraph, ProductGraph
from .walk import (
    CoinLike,
    InteractionLike,
    ShiftLike,
    ShiftSpec,
    WaveFunction,
    _at,
    _per_walker,
    step,
    vertex_distribution,
)

__all__ = [
    "TransitionMatrix",
    "TransitionMatrixSeq",
    "PropertyReport",
    "build_transition_matrix",
    "build_multiwalker_matrix",
    "build_sequence",
    "verify_theorem_properties",
    "state_label",
    "state_index",
    "ZERO_PROB",
    "COLUMN_SUM_ERROR",
]


def state_label(index: int, num_walkers: int, num_base: int) -> str:
    """Serialise a chain state; vertex tuples become ``u1|u2|...``."""
    if num_walkers == 1:
        return str(index)
    parts = []
    for _ in range(num_walkers):
        parts.append(index % num_base)
        index //= num_base
    return "|".join(str(x) for x in reversed(parts))


def state_index(label: str, num_walkers: int, num_base: int) -> int:
    parts = label.split("|")
    if len(parts) != num_walkers:
        raise ValidationError(
            f"state label {label!r} does not address {num_walkers} walker(s)"
        )
    idx = 0
    for p in parts:
        idx = idx * num_base + int(p)
    return idx

#: Vertex probabilities at or below this are treated as exactly zero when
#: choosing between the ratio and the uniform column convention.
ZERO_PROB = 1e-14
#: Column sums deviating from 1 by more than this raise instead of being
#: rescaled away; it signals non-unitary inputs.
COLUMN_SUM_ERROR = 1e-8


@dataclass
class TransitionMatrix:
    """One column-stochastic transition matrix P(t), stored column-wise.

    ``columns[u] = (targets, probs)`` holds the nonzero entries of source
    column ``u`` with ``targets`` sorted ascending. For K-walker chains the
    state index is the mixed-radix vertex-tuple index and only a subset of
    columns may be materialised.
    """

    time: int
    num_states: int
    columns: dict[int, tuple[np.ndarray, np.ndarray]]
    column_sum_error: float = 0.0

    def column(self, u: int) -> tuple[np.ndarray, np.ndarray]:
        try:
            return self.columns[u]
        except KeyError:
            raise ConsistencyError(
                f"column {u} of P({self.time}) was not materialised"
            ) from None

    def entry(self, v: int, u: int) -> float:
        targets, probs = self.column(u)
        pos = np.searchsorted(targets, v)
        if pos < targets.size and targets[pos] == v:
            return float(probs[pos])
        return 0.0

    def apply(self, rho: np.ndarray, threshold: float = ZERO_PROB) -> np.ndarray:
        """Propagate a distribution: returns P(t) @ rho."""
        rho = np.asarray(rho, dtype=np.float64)
        if rho.shape != (self.num_states,):
            raise ValidationError(
                f"distribution has shape {rho.shape}, expected "
                f"({self.num_states},)"
            )
        out = np.zeros(self.num_states)
        for u in np.flatnonzero(rho > threshold):
            targets, probs = self.column(int(u))
            out[targets] += probs * rho[u]
        return out

    def toarray(self) -> np.ndarray:
        """Dense (num_states x num_states) array; missing columns are zero."""
        a = np.zeros((self.num_states, self.num_states))
        for u, (targets, probs) in self.columns.items():
            a[targets, u] = probs
        return a


@dataclass
class TransitionMatrixSeq:
    """Matrices P(0..T-1) with the distribution sequence rho(0..T)."""

    matrices: list[TransitionMatrix]
    rho: np.ndarray  # (T+1, num_states)
    num_walkers: int = 1
    num_base_vertices: int | None = None

    def __post_init__(self) -> None:
        self.rho = np.asarray(self.rho, dtype=np.float64)
        if self.rho.ndim != 2 or self.rho.shape[0] != len(self.matrices) + 1:
            raise ValidationError(
                f"rho has shape {self.rho.shape}, expected "
                f"({len(self.matrices) + 1}, num_states)"
            )
        if self.num_base_vertices is None:
            self.num_base_vertices = self.rho.shape[1]

    @property
    def num_steps(self) -> int:
        return len(self.matrices)

    @property
    def num_states(self) -> int:
        return int(self.rho.shape[1])

    def state_label(self, index: int) -> str:
        return state_label(index, self.num_walkers, self.num_base_vertices)

    def state_index(self, label: str) -> int:
        return state_index(label, self.num_walkers, self.num_base_vertices)


@dataclass
class PropertyReport:
    """Worst-case residuals of the three defining matrix properties.

    ``max_entry_violation`` measures how far any entry leaves [0, 1],
    ``max_column_sum_deviation`` how far any materialised column sum is
    from 1, and ``max_propagation_residual`` the sup-norm of
    ``P(t) rho(t) - rho(t+1)`` over all steps.
    """

    num_steps: int
    tolerance: float = 1e-10
    max_entry_violation: float = 0.0
    max_column_sum_deviation: float = 0.0
    max_propagation_residual: float = 0.0
    columns_checked: int = 0

    @property
    def passed(self) -> bool:
        return (
            self.max_entry_violation <= self.tolerance
            and self.max_column_sum_deviation <= self.tolerance
            and self.max_propagation_residual <= self.tolerance
        )

    def as_dict(self) -> dict:
        return {
            "num_steps": self.num_steps,
            "tolerance": self.tolerance,
            "max_entry_violation": self.max_entry_violation,
            "max_column_sum_deviation": self.max_column_sum_deviation,
            "max_propagation_residual": self.max_propagation_residual,
            "columns_checked": self.columns_checked,
            "passed": self.passed,
        }

    def __str__(self) -> str:
        d = self.as_dict()
        lines = [f"transition-matrix property report ({self.num_steps} steps, "
                 f"{self.columns_checked} columns)"]
        for key in ("max_entry_violation", "max_column_sum_deviation",
                    "max_propagation_residual"):
            ok = "ok" if d[key] <= self.tolerance else "VIOLATED"
            lines.append(f"  {key:28s} {d[key]:.3e}  [{ok}]")
        lines.append(f"  overall: {'pass' if self.passed else 'FAIL'} "
                     f"(tolerance {self.tolerance:g})")
        return "\n".join(lines)


# ---------------------------------------------------------------------------
# construction
# ---------------------------------------------------------------------------

def _mixed_radix(indices: Sequence[np.ndarray], radix: int) -> np.ndarray:
    """Combine per-walker index arrays into joint indices on their outer
    product grid (walker 0 most significant)."""
    acc = np.zeros((), dtype=np.int64)
    for ix in indices:
        acc = acc[..., None] * radix + ix
    return acc


def _ratio_column(
    u_tuple: tuple[int, ...],
    rho_u: float,
    p_next_basis: np.ndarray,
    base: PortGraph,
    perms: Sequence[np.ndarray],
    validate: bool,
    time: int,
) -> tuple[np.ndarray, np.ndarray, float]:
    """Column of ratios rho(v, c, t+1) / rho(u, t) for one source state.

    Each arc leaving ``u`` is pushed through the per-walker shift
    permutations; the squared amplitude found at the joint target state is
    the numerator for the move to that target's vertex tuple.
    """
    offs = base.port_offsets
    taus = [perms[i][int(offs[ui]):int(offs[ui]) + base.degree(ui)]
            for i, ui in enumerate(u_tuple)]
    joint_targets = _mixed_radix(taus, base.basis_dim).reshape(-1)
    vertex_arrays = [base.vertex_of_basis[tau] for tau in taus]
    joint_vertices = _mixed_radix(vertex_arrays, base.num_vertices).reshape(-1)

    probs = p_next_basis[joint_targets] / rho_u
    # np.unique sorts the targets, so re-bin the probabilities through the
    # inverse map even when no two arcs share a target vertex.
    targets, inverse = np.unique(joint_vertices, return_inverse=True)
    probs = np.bincount(inverse, weights=probs, minlength=targets.size)

    colsum = float(probs.sum())
    dev = abs(colsum - 1.0)
    if validate:
        if dev > COLUMN_SUM_ERROR:
            raise ConsistencyError(
                f"column {u_tuple} of P({time}) sums to {colsum!r}; the "
                "step operator is not unitary"
            )
        probs = np.minimum(probs / colsum, 1.0)
    return targets, probs, dev


def _uniform_column(
    pg: ProductGraph, u_tuple: tuple[int, ...]
) -> tuple[np.ndarray, np.ndarray]:
    targets = np.fromiter(
        (pg.tuple_index(w) for w in pg.out_neighbors(u_tuple)),
        dtype=np.int64,
    )
    targets.sort()
    d = targets.size
    return targets, np.full(d, 1.0 / d)


def build_transition_matrix(
    psi_t: WaveFunction,
    psi_next: WaveFunction,
    graph: PortGraph | None = None,
    shift: ShiftSpec | None = None,
    zero_threshold: float = ZERO_PROB,
    validate: bool = True,
    time: int = 0,
) -> TransitionMatrix:
    """Single-walker transition matrix between consecutive states.

    Parameters
    ----------
    psi_t, psi_next:
        States before and after one step of the same operators.
    graph:
        Defaults to the states' graph; passing it double-checks identity.
    shift:
        The shift used by the evolution. It determines which port of the
        target vertex carries the amplitude that moved along each edge;
        defaults to the flip-flop shift.
    zero_threshold:
        Source masses at or below this get the uniform ``1/d(u)`` column.
    validate:
        When true, columns are checked (sum within
        :data:`COLUMN_SUM_ERROR` of 1) and rescaled onto the simplex;
        disable to inspect defective inputs.
    """
    if psi_t.num_walkers != 1:
        raise ValidationError(
            "use build_multiwalker_matrix for multi-walker states"
        )
    base = psi_t.base
    if graph is not None and graph.out_neighbors != base.out_neighbors:
        raise ValidationError("graph does not match the states' graph")
    if psi_next.base.out_neighbors != base.out_neighbors:
        raise ValidationError("states live on different graphs")
    if shift is None:
        shift = ShiftSpec.flip_flop(base)

    rho_t = vertex_distribution(psi_t)
    p_next = np.abs(psi_next.amplitudes) ** 2
    pg = ProductGraph(base, 1)
    columns: dict[int, tuple[np.ndarray, np.ndarray]] = {}
    worst = 0.0
    for u in range(base.num_vertices):
        if rho_t[u] > zero_threshold:
            targets, probs, dev = _ratio_column(
                (u,), float(rho_t[u]), p_next, base, [shift.permutation],
                validate, time,
            )
            worst = max(worst, dev)
            columns[u] = (targets, probs)
        else:
            columns[u] = _uniform_column(pg, (u,))
    return TransitionMatrix(time, base.num_vertices, columns,
                            column_sum_error=worst)


def build_multiwalker_matrix(
    psi_t: WaveFunction,
    psi_next: WaveFunction,
    pg: ProductGraph | None = None,
    shifts: ShiftSpec | Sequence[ShiftSpec] | None = None,
    zero_threshold: float = ZERO_PROB,
    validate: bool = True,
    time: int = 0,
    columns: str = "support",
    extra_columns: Iterable[Sequence[int] | int] = (),
) -> TransitionMatrix:
    """Transition matrix over vertex tuples for K interacting walkers.

    ``columns`` selects which source columns to materialise: ``"support"``
    (tuples with mass above ``zero_threshold``, plus any
    ``extra_columns``) or ``"full"`` (every tuple; exponential in K, for
    oracle tests on small instances). Zero-mass columns are uniform over
    the product out-neighbours.
    """
    if pg is None:
        pg = psi_t.graph if isinstance(psi_t.graph, ProductGraph) else None
    if pg is None:
        pg = ProductGraph(psi_t.base, psi_t.num_walkers)
    base = psi_t.base
    k = psi_t.num_walkers
    if pg.num_walkers != k or pg.base.out_neighbors != base.out_neighbors:
        raise ValidationError("product graph does not match the states")
    if psi_next.num_walkers != k:
        raise ValidationError("states have different walker counts")
    shift_list = _per_walker(
        shifts if shifts is not None else ShiftSpec.flip_flop(base), k
    )
    perms = [s.permutation for s in shift_list]

    rho_t = vertex_distribution(psi_t)
    p_next = np.abs(psi_next.amplitudes) ** 2

    if columns == "full":
        wanted = range(pg.num_states)
    elif columns == "support":
        extras = {
            pg.tuple_index(e) if not np.isscalar(e) else int(e)
            for e in extra_columns
        }
        wanted = sorted(set(np.flatnonzero(rho_t > zero_threshold).tolist())
                        | extras)
    else:
        raise ValidationError(f"unknown column mode {columns!r}")

    cols: dict[int, tuple[np.ndarray, np.ndarray]] = {}
    worst = 0.0
    for idx in wanted:
        u_tuple = pg.tuple_of(int(idx))
        if rho_t[idx] > zero_threshold:
            targets, probs, dev = _ratio_column(
                u_tuple, float(rho_t[idx]), p_next, base, perms,
                validate, time,
            )
            worst = max(worst, dev)
            cols[int(idx)] = (targets, probs)
        else:
            cols[int(idx)] = _uniform_column(pg, u_tuple)
    return TransitionMatrix(time, pg.num_states, cols, column_sum_error=worst)


def build_sequence(
    graph: PortGraph | ProductGraph,
    coin: CoinLike,
    shift: ShiftLike,
    psi0: WaveFunction,
    horizon: int,
    interaction: InteractionLike | None = None,
    zero_threshold: float = ZERO_PROB,
    validate: bool = True,
    columns: str = "auto",
) -> TransitionMatrixSeq:
    """Evolve ``horizon`` steps and emit P(0..T-1) plus rho(0..T).

    For multi-walker states the default ``columns="auto"`` materialises
    the support of rho(t) plus the one-step halo reachable from the
    support of rho(t-1); ``"full"`` forces every tuple column (small
    instances only).
    """
    if horizon < 0:
        raise ValidationError("horizon must be >= 0")
    k = psi0.num_walkers
    base = psi0.base
    pg = psi0.graph if isinstance(psi0.graph, ProductGraph) else None
    if isinstance(graph, ProductGraph):
        if pg is None or graph.num_walkers != k:
            raise ValidationError("graph walker count does not match psi0")
    elif graph.out_neighbors != base.out_neighbors:
        raise ValidationError("graph does not match psi0")

    psi = psi0
    rhos = [vertex_distribution(psi0)]
    matrices: list[TransitionMatrix] = []
    for t in range(horizon):
        psi_next = step(psi, coin, shift, interaction, t)
        if k == 1:
            shift_t = _at(_per_walker(shift, 1)[0], t)
            matrices.append(build_transition_matrix(
                psi, psi_next, base, shift_t,
                zero_threshold=zero_threshold, validate=validate, time=t,
            ))
        else:
            shifts_t = [_at(s, t) for s in _per_walker(shift, k)]
            if columns == "full":
                mode, extras = "full", ()
            else:
                mode = "support"
                prev = np.flatnonzero(rhos[-1] > zero_threshold)
                halo = set()
                if t > 0 and len(rhos) >= 2:
                    src = np.flatnonzero(rhos[-2] > zero_threshold)
                    for s in src:
                        u_tuple = pg.tuple_of(int(s))
                        for w in pg.out_neighbors(u_tuple):
                            halo.add(pg.tuple_index(w))
                extras = halo - set(prev.tolist())
            matrices.append(build_multiwalker_matrix(
                psi, psi_next, pg, shifts_t,
                zero_threshold=zero_threshold, validate=validate, time=t,
                columns=mode, extra_columns=extras,
            ))
        psi = psi_next
        rhos.append(vertex_distribution(psi))
    return TransitionMatrixSeq(
        matrices, np.stack(rhos), num_walkers=k,
        num_base_vertices=base.num_vertices,
    )


def verify_theorem_properties(
    seq: TransitionMatrixSeq, tolerance: float = 1e-10
) -> PropertyReport:
    """Measure the three matrix properties over a built sequence.

    Reports worst-case residuals only; it never raises, so defective
    sequences (built with ``validate=False``) can be inspected.
    """
    report = PropertyReport(num_steps=seq.num_steps, tolerance=tolerance)
    for t, mat in enumerate(seq.matrices):
        for _, (targets, probs) in sorted(mat.columns.items()):
            if probs.size:
                report.max_entry_violation = max(
                    report.max_entry_violation,
                    float(max(probs.max() - 1.0, 0.0)),
                    float(max(-probs.min(), 0.0)),
                )
                report.max_column_sum_deviation = max(
                    report.max_column_sum_deviation,
                    abs(float(probs.sum()) - 1.0),
                )
            report.columns_checked += 1
        residual = mat.apply(seq.rho[t]) - seq.rho[t + 1]
        report.max_propagation_residual = max(
            report.max_propagation_residual,
            float(np.max(np.abs(residual))) if residual.size else 0.0,
        )
    return report
