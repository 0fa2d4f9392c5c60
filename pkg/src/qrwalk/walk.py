"""Walker states and the coin / shift / interaction operators.

One evolution step applies, in order, the optional interaction (K > 1
walkers only), the block-diagonal coin, and the shift permutation. All
operators are unitary, so a step maps a normalised state to a normalised
state; nothing here renormalises, which keeps genuine defects visible.

Operators may vary with time: wherever a spec is accepted, a callable
``t -> spec`` is accepted too and resolved at each step.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable, Mapping, Sequence, Union

import numpy as np

from . import coins
from .errors import ResourceLimitError, UnitarityError, ValidationError
from .graphs import PortGraph, ProductGraph

__all__ = [
    "WaveFunction",
    "CoinSpec",
    "ShiftSpec",
    "InteractionSpec",
    "apply_coin",
    "apply_shift",
    "apply_interaction",
    "step",
    "vertex_distribution",
    "NORM_ATOL",
    "DEFAULT_MEMORY_BUDGET",
]

NORM_ATOL = 1e-10
#: Cap on the amplitude-vector footprint for K-walker tensor states (bytes).
DEFAULT_MEMORY_BUDGET = 2 << 30


def _as_base(graph: PortGraph | ProductGraph) -> tuple[PortGraph, int]:
    if isinstance(graph, ProductGraph):
        return graph.base, graph.num_walkers
    return graph, 1


def _check_budget(dim: int, budget: int) -> None:
    need = 16 * dim
    if need > budget:
        raise ResourceLimitError(
            f"state vector of dimension {dim} needs {need} bytes, over the "
            f"memory budget of {budget}; raise memory_budget explicitly "
            "to proceed"
        )


@dataclass(frozen=True)
class WaveFunction:
    """Complex amplitudes over the flattened (vertex, port) basis.

    For ``K`` walkers the basis is the K-fold tensor power of the single
    walker basis; the joint index is mixed-radix with walker 0 most
    significant. States are validated to be normalised within
    :data:`NORM_ATOL` and their storage is frozen. ``strict=False`` skips
    the normalisation invariant and is inherited by evolved states, which
    lets deliberately defective operators be run for diagnostics.
    """

    graph: PortGraph | ProductGraph
    amplitudes: np.ndarray
    strict: bool = field(default=True, compare=False)

    def __post_init__(self) -> None:
        base, k = _as_base(self.graph)
        amps = np.ascontiguousarray(self.amplitudes, dtype=np.complex128)
        expected = base.basis_dim ** k
        if amps.shape != (expected,):
            raise ValidationError(
                f"amplitude vector has shape {amps.shape}, expected "
                f"({expected},) for {k} walker(s) on a basis of dimension "
                f"{base.basis_dim}"
            )
        if self.strict:
            norm2 = float(np.vdot(amps, amps).real)
            if abs(norm2 - 1.0) > NORM_ATOL:
                raise ValidationError(
                    f"state is not normalised: squared norm {norm2!r}"
                )
        amps.flags.writeable = False
        object.__setattr__(self, "amplitudes", amps)

    # -- structure ---------------------------------------------------------

    @property
    def base(self) -> PortGraph:
        return _as_base(self.graph)[0]

    @property
    def num_walkers(self) -> int:
        return _as_base(self.graph)[1]

    @property
    def single_dim(self) -> int:
        return self.base.basis_dim

    # -- constructors --------------------------------------------------------

    @classmethod
    def localized(
        cls,
        graph: PortGraph | ProductGraph,
        vertex: int | Sequence[int],
        port: int | Sequence[int] = 0,
        memory_budget: int = DEFAULT_MEMORY_BUDGET,
    ) -> "WaveFunction":
        """Point mass on one basis state; tuples address K walkers."""
        base, k = _as_base(graph)
        vs = [vertex] * 1 if np.isscalar(vertex) else list(vertex)
        ps = [port] * len(vs) if np.isscalar(port) else list(port)
        if len(vs) != k or len(ps) != k:
            raise ValidationError(
                f"localized state needs {k} (vertex, port) pairs, got "
                f"{len(vs)} vertices and {len(ps)} ports"
            )
        dim = base.basis_dim ** k
        _check_budget(dim, memory_budget)
        idx = 0
        for v, c in zip(vs, ps):
            idx = idx * base.basis_dim + base.basis_index(int(v), int(c))
        amps = np.zeros(dim, dtype=np.complex128)
        amps[idx] = 1.0
        return cls(graph, amps)

    @classmethod
    def uniform(
        cls,
        graph: PortGraph | ProductGraph,
        memory_budget: int = DEFAULT_MEMORY_BUDGET,
    ) -> "WaveFunction":
        """Equal real amplitude on every basis state."""
        base, k = _as_base(graph)
        dim = base.basis_dim ** k
        _check_budget(dim, memory_budget)
        return cls(graph, np.full(dim, 1.0 / np.sqrt(dim), dtype=np.complex128))

    @classmethod
    def from_components(
        cls,
        graph: PortGraph | ProductGraph,
        components: Sequence[tuple],
        renormalize: bool = True,
        memory_budget: int = DEFAULT_MEMORY_BUDGET,
    ) -> "WaveFunction":
        """Build from sparse ``(vertex, port, amplitude)`` entries.

        Tuples of vertices/ports address K-walker states. The vector is
        renormalised on load; a drift beyond 1e-8 triggers a warning since
        it usually means the input was not meant to be a state.
        """
        base, k = _as_base(graph)
        dim = base.basis_dim ** k
        _check_budget(dim, memory_budget)
        amps = np.zeros(dim, dtype=np.complex128)
        for vertex, port, amp in components:
            vs = [vertex] if np.isscalar(vertex) else list(vertex)
            ps = [port] if np.isscalar(port) else list(port)
            if len(vs) != k or len(ps) != k:
                raise ValidationError(
                    f"component ({vertex}, {port}) does not address "
                    f"{k} walker(s)"
                )
            idx = 0
            for v, c in zip(vs, ps):
                idx = idx * base.basis_dim + base.basis_index(int(v), int(c))
            amps[idx] += complex(amp)
        norm = float(np.linalg.norm(amps))
        if norm == 0.0:
            raise ValidationError("initial state has zero norm")
        if renormalize:
            if abs(norm - 1.0) > 1e-8:
                warnings.warn(
                    f"initial state renormalised: norm was {norm!r}",
                    stacklevel=2,
                )
            amps /= norm
        return cls(graph, amps)


# ---------------------------------------------------------------------------
# operator specifications
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class CoinSpec:
    """Per-vertex unitary blocks mixing amplitudes among a vertex's ports."""

    graph: PortGraph
    blocks: tuple[np.ndarray, ...]
    name: str = "explicit"

    def __post_init__(self) -> None:
        if len(self.blocks) != self.graph.num_vertices:
            raise ValidationError(
                f"{len(self.blocks)} coin blocks for "
                f"{self.graph.num_vertices} vertices"
            )
        frozen = []
        for v, block in enumerate(self.blocks):
            b = np.asarray(block, dtype=np.complex128)
            d = self.graph.degree(v)
            if b.shape != (d, d):
                raise ValidationError(
                    f"coin block at vertex {v} has shape {b.shape}, "
                    f"expected ({d}, {d})"
                )
            b.flags.writeable = False
            frozen.append(b)
        object.__setattr__(self, "blocks", tuple(frozen))

    def validate(self, atol: float = coins.UNITARY_ATOL) -> None:
        """Check every block against the two coin unitarity conditions."""
        for v, block in enumerate(self.blocks):
            coins.check_coin_unitary(block, label=f"vertex {v}", atol=atol)

    # -- named builders ----------------------------------------------------

    @classmethod
    def hadamard(cls, graph: PortGraph) -> "CoinSpec":
        cache = {int(d): coins.hadamard_coin(int(d)) for d in set(graph.degrees)}
        return cls(graph, tuple(cache[graph.degree(v)]
                                for v in range(graph.num_vertices)),
                   name="hadamard")

    @classmethod
    def grover(cls, graph: PortGraph) -> "CoinSpec":
        cache = {int(d): coins.grover_coin(int(d)) for d in set(graph.degrees)}
        return cls(graph, tuple(cache[graph.degree(v)]
                                for v in range(graph.num_vertices)),
                   name="grover")

    @classmethod
    def identity(cls, graph: PortGraph) -> "CoinSpec":
        cache = {int(d): coins.identity_coin(int(d)) for d in set(graph.degrees)}
        return cls(graph, tuple(cache[graph.degree(v)]
                                for v in range(graph.num_vertices)),
                   name="identity")

    @classmethod
    def random_unitary(cls, graph: PortGraph,
                       rng: np.random.Generator) -> "CoinSpec":
        return cls(graph, tuple(coins.random_unitary_coin(graph.degree(v), rng)
                                for v in range(graph.num_vertices)),
                   name="random-unitary")

    @classmethod
    def from_blocks(cls, graph: PortGraph, blocks: Sequence[np.ndarray],
                    validate: bool = True) -> "CoinSpec":
        spec = cls(graph, tuple(blocks))
        if validate:
            spec.validate()
        return spec


@dataclass(frozen=True)
class ShiftSpec:
    """Basis permutation transporting amplitude along arcs.

    ``permutation[i]`` is the flattened target index of basis state ``i``.
    The edge-respect invariant (the target vertex of ``(v, c)`` is
    ``eta(v, c)``) is enforced unless explicitly disabled for degenerate
    experiments.
    """

    graph: PortGraph
    permutation: np.ndarray
    name: str = "explicit"

    def __post_init__(self) -> None:
        perm = np.asarray(self.permutation, dtype=np.int64)
        dim = self.graph.basis_dim
        if perm.shape != (dim,):
            raise ValidationError(
                f"permutation has shape {perm.shape}, expected ({dim},)"
            )
        if not np.array_equal(np.sort(perm), np.arange(dim)):
            raise ValidationError(
                "shift map is not a permutation of the basis (it would "
                "not be unitary)"
            )
        perm.flags.writeable = False
        object.__setattr__(self, "permutation", perm)

    @cached_property
    def inverse(self) -> np.ndarray:
        inv = np.empty_like(self.permutation)
        inv[self.permutation] = np.arange(self.permutation.size)
        inv.flags.writeable = False
        return inv

    def check_respects_edges(self) -> None:
        g = self.graph
        for v in range(g.num_vertices):
            off = int(g.port_offsets[v])
            for c, u in enumerate(g.out_neighbors[v]):
                tgt = int(self.permutation[off + c])
                if int(g.vertex_of_basis[tgt]) != u:
                    raise ValidationError(
                        f"shift sends ({v}, {c}) to vertex "
                        f"{int(g.vertex_of_basis[tgt])}, but eta({v}, {c}) "
                        f"= {u}"
                    )

    # -- named builders ----------------------------------------------------

    @classmethod
    def flip_flop(cls, graph: PortGraph) -> "ShiftSpec":
        """Default shift: ``(v, c) -> (eta(v, c), sigma(v, eta(v, c)))``.

        Amplitude moving along an arc lands on the reverse arc's port, so
        the map is an involution and always a permutation.
        """
        perm = np.empty(graph.basis_dim, dtype=np.int64)
        for v in range(graph.num_vertices):
            off = int(graph.port_offsets[v])
            for c, u in enumerate(graph.out_neighbors[v]):
                perm[off + c] = graph.basis_index(u, graph.sigma(v, u))
        return cls(graph, perm, name="flip-flop")

    @classmethod
    def moving(cls, graph: PortGraph) -> "ShiftSpec":
        """Moving shift ``(v, c) -> (eta(v, c), c)``: the port label is
        preserved, so a walker keeps its direction.

        Only valid when ``eta(., c)`` is injective for every port ``c``
        (true for the cycle and torus generators' axis-aligned port
        orders); otherwise the map is not a permutation and this raises.
        """
        perm = np.empty(graph.basis_dim, dtype=np.int64)
        for v in range(graph.num_vertices):
            off = int(graph.port_offsets[v])
            for c, u in enumerate(graph.out_neighbors[v]):
                if c >= graph.degree(u):
                    raise ValidationError(
                        f"moving shift undefined: port {c} does not exist "
                        f"at vertex {u} (degree {graph.degree(u)})"
                    )
                perm[off + c] = graph.basis_index(u, c)
        if np.unique(perm).size != perm.size:
            raise ValidationError(
                "moving shift is not a permutation on this graph/port "
                "order; use the flip-flop shift or a custom port order"
            )
        return cls(graph, perm, name="moving")

    @classmethod
    def from_permutation(cls, graph: PortGraph, permutation: Sequence[int],
                         enforce_edges: bool = True) -> "ShiftSpec":
        spec = cls(graph, np.asarray(permutation, dtype=np.int64))
        if enforce_edges:
            spec.check_respects_edges()
        return spec


@dataclass(frozen=True)
class InteractionSpec:
    """Unitary coupling of K walkers, block-diagonal in the vertex tuple.

    A block acts on the joint port space of one vertex tuple, so walkers
    exchange amplitude and phase without moving; movement stays confined
    to the shift. ``blocks`` maps vertex tuples to explicit unitaries;
    tuples not listed act as identity.
    """

    graph: ProductGraph
    kind: str = "identity"
    phase: float = 0.0
    blocks: Mapping[tuple[int, ...], np.ndarray] | None = None

    def __post_init__(self) -> None:
        if self.kind not in ("identity", "coincidence-phase", "explicit"):
            raise ValidationError(f"unknown interaction kind {self.kind!r}")
        if self.kind == "explicit":
            frozen = {}
            for key, block in (self.blocks or {}).items():
                u = tuple(int(x) for x in key)
                d = self.graph.degree(u)
                b = np.asarray(block, dtype=np.complex128)
                if b.shape != (d, d):
                    raise ValidationError(
                        f"interaction block at tuple {u} has shape "
                        f"{b.shape}, expected ({d}, {d})"
                    )
                coins.check_coin_unitary(b, label=f"tuple {u}")
                b.flags.writeable = False
                frozen[u] = b
            object.__setattr__(self, "blocks", frozen)

    @classmethod
    def identity(cls, graph: ProductGraph) -> "InteractionSpec":
        return cls(graph, kind="identity")

    @classmethod
    def coincidence_phase(cls, graph: ProductGraph,
                          phi: float) -> "InteractionSpec":
        """Multiply by ``exp(i * phi)`` whenever all walkers share a vertex."""
        return cls(graph, kind="coincidence-phase", phase=float(phi))

    @classmethod
    def from_blocks(cls, graph: ProductGraph,
                    blocks: Mapping[tuple[int, ...], np.ndarray]
                    ) -> "InteractionSpec":
        return cls(graph, kind="explicit", blocks=dict(blocks))


CoinLike = Union[CoinSpec, Callable[[int], CoinSpec]]
ShiftLike = Union[ShiftSpec, Callable[[int], ShiftSpec]]
InteractionLike = Union[InteractionSpec, Callable[[int], InteractionSpec]]


def _at(spec, t: int):
    """Resolve a possibly time-scheduled spec at step t."""
    if spec is None or isinstance(spec, (CoinSpec, ShiftSpec, InteractionSpec)):
        return spec
    return spec(t)


def _per_walker(spec, k: int) -> list:
    if isinstance(spec, (list, tuple)):
        if len(spec) != k:
            raise ValidationError(
                f"got {len(spec)} per-walker specs for {k} walkers"
            )
        return list(spec)
    return [spec] * k


def _check_same_graph(spec_graph: PortGraph, base: PortGraph, what: str) -> None:
    if spec_graph is base:
        return
    if (spec_graph.num_vertices != base.num_vertices
            or spec_graph.out_neighbors != base.out_neighbors):
        raise ValidationError(f"{what} was built for a different graph")


# ---------------------------------------------------------------------------
# operator application
# ---------------------------------------------------------------------------

def _coin_block_multiply(spec: CoinSpec, amps: np.ndarray) -> np.ndarray:
    """Apply the block-diagonal coin to rows of ``amps`` (dim x m or dim)."""
    out = np.empty_like(amps)
    offs = spec.graph.port_offsets
    for v in range(spec.graph.num_vertices):
        lo, hi = int(offs[v]), int(offs[v + 1])
        out[lo:hi] = spec.blocks[v] @ amps[lo:hi]
    return out


def apply_coin(psi: WaveFunction, coin: CoinLike, t: int = 0) -> WaveFunction:
    """Mix amplitudes among each vertex's ports with the coin blocks."""
    k = psi.num_walkers
    specs = [_at(s, t) for s in _per_walker(coin, k)]
    for s in specs:
        _check_same_graph(s.graph, psi.base, "coin")
    if k == 1:
        return WaveFunction(psi.graph,
                            _coin_block_multiply(specs[0], psi.amplitudes),
                            strict=psi.strict)
    dim = psi.single_dim
    arr = psi.amplitudes.reshape((dim,) * k)
    for axis, s in enumerate(specs):
        moved = np.moveaxis(arr, axis, 0).reshape(dim, -1)
        arr = np.moveaxis(
            _coin_block_multiply(s, moved).reshape((dim,) + (dim,) * (k - 1)),
            0, axis,
        )
    return WaveFunction(psi.graph, np.ascontiguousarray(arr).reshape(-1),
                        strict=psi.strict)


def apply_shift(psi: WaveFunction, shift: ShiftLike, t: int = 0) -> WaveFunction:
    """Transport amplitudes along arcs by the shift permutation."""
    k = psi.num_walkers
    specs = [_at(s, t) for s in _per_walker(shift, k)]
    for s in specs:
        _check_same_graph(s.graph, psi.base, "shift")
    if k == 1:
        return WaveFunction(psi.graph, psi.amplitudes[specs[0].inverse],
                            strict=psi.strict)
    dim = psi.single_dim
    arr = psi.amplitudes.reshape((dim,) * k)
    arr = arr[np.ix_(*(s.inverse for s in specs))]
    return WaveFunction(psi.graph, np.ascontiguousarray(arr).reshape(-1),
                        strict=psi.strict)


def apply_interaction(psi: WaveFunction, interaction: InteractionLike,
                      t: int = 0) -> WaveFunction:
    """Apply the per-tuple interaction blocks (walkers do not move)."""
    spec = _at(interaction, t)
    if spec is None or spec.kind == "identity":
        return psi
    k = psi.num_walkers
    base = psi.base
    _check_same_graph(spec.graph.base, base, "interaction")
    if spec.graph.num_walkers != k:
        raise ValidationError(
            f"interaction is for {spec.graph.num_walkers} walkers, state "
            f"has {k}"
        )
    dim = psi.single_dim
    arr = psi.amplitudes.reshape((dim,) * k).copy()
    offs = base.port_offsets
    if spec.kind == "coincidence-phase":
        factor = np.exp(1j * spec.phase)
        for v in range(base.num_vertices):
            sl = slice(int(offs[v]), int(offs[v + 1]))
            arr[(sl,) * k] *= factor
    else:
        for u, block in spec.blocks.items():
            slices = tuple(slice(int(offs[ui]), int(offs[ui + 1])) for ui in u)
            sub = arr[slices]
            arr[slices] = (block @ sub.reshape(-1)).reshape(sub.shape)
    return WaveFunction(psi.graph, arr.reshape(-1), strict=psi.strict)


def step(
    psi: WaveFunction,
    coin: CoinLike,
    shift: ShiftLike,
    interaction: InteractionLike | None = None,
    t: int = 0,
) -> WaveFunction:
    """One evolution step: shift(coin(interaction(psi)))."""
    if interaction is not None:
        if psi.num_walkers == 1:
            spec = _at(interaction, t)
            if spec is not None and spec.kind != "identity":
                raise ValidationError(
                    "interactions require at least two walkers"
                )
        else:
            psi = apply_interaction(psi, interaction, t)
    psi = apply_coin(psi, coin, t)
    return apply_shift(psi, shift, t)


def vertex_distribution(psi: WaveFunction) -> np.ndarray:
    """Probability of finding the walker(s) at each vertex (tuple).

    Sums squared moduli over each vertex's ports; for K walkers the result
    is indexed by the mixed-radix tuple index.
    """
    p = np.abs(psi.amplitudes) ** 2
    starts = psi.base.port_offsets[:-1]
    k = psi.num_walkers
    if k == 1:
        return np.add.reduceat(p, starts)
    arr = p.reshape((psi.single_dim,) * k)
    for axis in range(k):
        arr = np.add.reduceat(arr, starts, axis=axis)
    return arr.reshape(-1)
