"""Command-line surface: run walks, emit matrices, sample, verify.

Runs are driven by a JSON config plus a few flag overrides; every command
writes a ``manifest.json`` next to its outputs and the data files carry
the manifest hash. Exit codes: 0 on success, 1 on a runtime numerical
failure, 2 on configuration errors.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

import numpy as np

from .baselines import exact_rejection_marginals, grover_torus_dp, \
    grover_torus_matrix, rejection_sample
from .equivalence import TransitionMatrixSeq, build_sequence, \
    verify_theorem_properties
from .errors import ConfigError, ConsistencyError, QRWalkError, \
    ResourceLimitError, SamplingError, ValidationError
from .persist import (
    RunManifest,
    ensemble_mean_table,
    graph_and_spaces,
    initial_state_from_json,
    interaction_from_json,
    load_sequence,
    manifest_for,
    matrix_table,
    coin_from_json,
    rho_table,
    save_sequence,
    shift_from_json,
    trajectories_table,
    tvd_table,
    write_json,
    write_table,
)
from .trajectory import convergence_report, locality_fraction, sample_ensemble
from .walk import step, vertex_distribution

_RUNTIME_ERRORS = (ConsistencyError, SamplingError, ResourceLimitError)


def _load_config(path: str | None) -> dict:
    if path is None:
        return {}
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    try:
        config = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(
            f"malformed JSON in {path}: {exc.msg} at line {exc.lineno} "
            f"column {exc.colno}"
        ) from None
    if not isinstance(config, dict):
        raise ConfigError(f"config {path} must be a JSON object")
    return config


def _out_dir(args) -> Path:
    out = args.out_dir or os.environ.get("QRWALK_OUT_DIR") or "."
    path = Path(out)
    path.mkdir(parents=True, exist_ok=True)
    return path


def _apply_overrides(config: dict, args, keys: dict) -> dict:
    for attr, key in keys.items():
        value = getattr(args, attr, None)
        if value is not None:
            config[key] = value
    return config


def _require(config: dict, *keys: str) -> None:
    missing = [k for k in keys if k not in config]
    if missing:
        raise ConfigError(f"config is missing required entries: {missing}")


def _operators(config: dict, base, space, walkers: int):
    _require(config, "coin", "shift")
    coin = coin_from_json(config["coin"], base)
    shift = shift_from_json(config["shift"], base)
    interaction = None
    if walkers > 1:
        interaction = interaction_from_json(config.get("interaction"), space)
    elif config.get("interaction") is not None:
        raise ConfigError("interactions require walkers > 1")
    return coin, shift, interaction


def _as_runtime(exc: ValidationError) -> ConsistencyError:
    # validation failures after the config phase are numerical breaches
    return ConsistencyError(str(exc))


def _horizon(config: dict) -> int:
    horizon = int(config.get("horizon", 0))
    if horizon < 0:
        raise ConfigError("horizon must be >= 0")
    return horizon


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------

def cmd_evolve(args, config: dict) -> int:
    base, space, walkers = graph_and_spaces(config)
    coin, shift, interaction = _operators(config, base, space, walkers)
    psi = initial_state_from_json(config.get("initial_state"), space)
    horizon = _horizon(config)
    manifest = manifest_for(config, "evolve", base, format=args.format)

    rhos = [vertex_distribution(psi)]
    try:
        for t in range(horizon):
            psi = step(psi, coin, shift, interaction, t)
            rhos.append(vertex_distribution(psi))
    except ValidationError as exc:
        raise _as_runtime(exc) from exc

    out = _out_dir(args)
    manifest.save(out)
    path = write_table(
        out / "rho",
        rho_table(np.stack(rhos), walkers, base.num_vertices,
                  manifest.sha256),
        args.format,
    )
    print(f"wrote {len(rhos)} distributions over "
          f"{base.num_vertices ** walkers} states to {path}")
    return 0


def _build_seq(config: dict, args) -> tuple[TransitionMatrixSeq, object, int]:
    base, space, walkers = graph_and_spaces(config)
    coin, shift, interaction = _operators(config, base, space, walkers)
    psi = initial_state_from_json(config.get("initial_state"), space)
    horizon = _horizon(config)
    try:
        seq = build_sequence(space, coin, shift, psi, horizon,
                             interaction=interaction)
    except ValidationError as exc:
        raise _as_runtime(exc) from exc
    return seq, space, walkers


def cmd_equivalence(args, config: dict) -> int:
    base = graph_and_spaces(config)[0]
    seq, space, walkers = _build_seq(config, args)
    report = verify_theorem_properties(seq)
    manifest = manifest_for(config, "equivalence", base, format=args.format)
    out = _out_dir(args)
    manifest.save(out)
    save_sequence(out, seq, manifest.sha256, args.format)
    write_json(out / "report.json", report.as_dict())
    print(report)
    if not report.passed:
        raise ConsistencyError(
            "matrix properties violated beyond tolerance; see report"
        )
    print(f"wrote {seq.num_steps} matrices to {out}")
    return 0


def cmd_sample(args, config: dict) -> int:
    torus_dims = None
    space = None
    if args.from_dir:
        seq = load_sequence(args.from_dir)
        walkers = seq.num_walkers
        base_n = seq.num_base_vertices
        source = RunManifest.load(args.from_dir) \
            if (Path(args.from_dir) / "manifest.json").exists() else None
        graph_doc = source.graph if source else {"loaded": args.from_dir}
        if source and isinstance(source.graph, dict):
            if source.graph.get("type") == "torus":
                torus_dims = source.graph.get("dims")
            elif source.graph.get("type") == "cycle":
                torus_dims = [source.graph.get("n")]
        manifest = RunManifest(
            command="sample", graph=graph_doc,
            graph_sha256=source.graph_sha256 if source else "unknown",
            walkers=walkers, seed=config.get("seed"),
        )
    else:
        base = graph_and_spaces(config)[0]
        seq, space, walkers = _build_seq(config, args)
        base_n = base.num_vertices
        torus_dims = base.torus_dims
        manifest = manifest_for(config, "sample", base, format=args.format)

    size = int(config.get("ensemble_size", 20))
    method = config.get("method", "scan")
    length = config.get("length")
    manifest.params.update({"ensemble_size": size, "method": method})
    ens = sample_ensemble(seq, size, config.get("seed"),
                          length=length, method=method)
    if space is not None and locality_fraction(ens, space) < 1.0:
        raise ConsistencyError(
            "sampled ensemble contains a non-edge transition"
        )

    out = _out_dir(args)
    manifest.save(out)
    path = write_table(
        out / "trajectories",
        trajectories_table(ens, walkers, base_n, torus_dims,
                           manifest.sha256),
        args.format,
    )
    if torus_dims is not None and walkers == 1:
        write_table(out / "ensemble_mean",
                    ensemble_mean_table(ens, torus_dims, manifest.sha256),
                    args.format)
    print(f"wrote {size} trajectories of length {ens.length} to {path}")
    return 0


def cmd_tvd(args, config: dict) -> int:
    base = graph_and_spaces(config)[0]
    _require(config, "ensemble_sizes", "t_grid")
    sizes = [int(m) for m in config["ensemble_sizes"]]
    t_grid = [int(t) for t in config["t_grid"]]
    seq, _, _ = _build_seq(config, args)
    manifest = manifest_for(config, "tvd", base, ensemble_sizes=sizes,
                            t_grid=t_grid, format=args.format)
    report = convergence_report(seq, sizes, t_grid, config.get("seed"),
                                method=config.get("method", "scan"))
    out = _out_dir(args)
    manifest.save(out)
    path = write_table(out / "tvd", tvd_table(report.rows, manifest.sha256),
                       args.format)
    for m in sizes:
        print(f"M={m}: median TVD over grid = {report.median_tvd(m):.6f}")
    print(f"wrote {len(report.rows)} rows to {path}")
    return 0


def cmd_rejection(args, config: dict) -> int:
    base, space, walkers = graph_and_spaces(config)
    if walkers != 1:
        raise ConfigError("the rejection baseline is single-walker")
    coin, shift, _ = _operators(config, base, space, walkers)
    psi = initial_state_from_json(config.get("initial_state"), space)
    length = int(config.get("length", 3))
    if length < 1:
        raise ConfigError("length must be >= 1")
    attempts = int(config.get("attempts", 1_000_000))
    manifest = manifest_for(config, "rejection", base, length=length,
                            attempts=attempts)

    try:
        rhos = [vertex_distribution(psi)]
        for t in range(length - 1):
            psi = step(psi, coin, shift, None, t)
            rhos.append(vertex_distribution(psi))
        rho_seq = np.stack(rhos)
        report = rejection_sample(rho_seq, base, attempts,
                                  seed=config.get("seed"))
        exact, total = exact_rejection_marginals(rho_seq, base)
    except ValidationError as exc:
        raise _as_runtime(exc) from exc

    payload = {
        "manifest": manifest.sha256,
        "report": report.as_dict(),
        "exact_marginals": None if exact is None
        else [list(row) for row in exact],
        "exact_total_path_probability": total,
        "exact_tvd_vs_rho": None if exact is None else [
            0.5 * float(np.abs(exact[t] - rho_seq[t]).sum())
            for t in range(length)
        ],
    }
    out = _out_dir(args)
    manifest.save(out)
    path = write_json(out / "rejection.json", payload)
    print(f"acceptance rate {report.acceptance_rate:.6g} "
          f"({report.accepted}/{report.attempts}); wrote {path}")
    return 0


def cmd_torus_dp(args, config: dict) -> int:
    base, space, walkers = graph_and_spaces(config)
    if walkers != 1:
        raise ConfigError("the torus recursion is single-walker")
    if base.torus_dims is None:
        raise ConfigError(
            "torus-dp needs a generated torus graph "
            '({"type": "torus", "dims": [...]} or {"type": "cycle", ...})'
        )
    psi = initial_state_from_json(config.get("initial_state"), base)
    horizon = _horizon(config)
    manifest = manifest_for(config, "torus-dp", base,
                            emit_matrices=bool(config.get("emit_matrices")))
    amp = psi.amplitudes
    if np.abs(amp.imag).max() > 0.0:
        raise ConfigError(
            "torus-dp requires a purely real initial state"
        )
    states = grover_torus_dp(base.torus_dims, amp.real, horizon)
    rho = np.stack([s.vertex_distribution() for s in states])

    out = _out_dir(args)
    manifest.save(out)
    path = write_table(out / "rho",
                       rho_table(rho, 1, base.num_vertices, manifest.sha256),
                       args.format)
    if config.get("emit_matrices"):
        matrices = [grover_torus_matrix(states[t], states[t + 1])
                    for t in range(horizon)]
        seq = TransitionMatrixSeq(matrices, rho, num_walkers=1,
                                  num_base_vertices=base.num_vertices)
        write_table(out / "p_matrix", matrix_table(seq, manifest.sha256),
                    args.format)
    print(f"wrote {rho.shape[0]} distributions to {path}")
    return 0


def cmd_verify(args, config: dict) -> int:
    seq = load_sequence(args.in_dir)
    report = verify_theorem_properties(seq, tolerance=args.tol)
    write_json(Path(args.in_dir) / "verify_report.json", report.as_dict())
    print(report)
    if not report.passed:
        raise ConsistencyError("persisted sequence violates the matrix "
                               "properties beyond tolerance")
    return 0


# ---------------------------------------------------------------------------
# parser and entry point
# ---------------------------------------------------------------------------

def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="qrwalk",
        description="Coined quantum walks, their equivalent non-homogeneous "
                    "random walks, and trajectory sampling.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(sp, config_required=True):
        sp.add_argument("--config", required=config_required,
                        help="JSON run configuration")
        sp.add_argument("--seed", type=int, help="master RNG seed override")
        sp.add_argument("--out-dir",
                        help="output directory (default: $QRWALK_OUT_DIR or .)")
        sp.add_argument("--format", choices=("csv", "json"), default="csv")

    sp = sub.add_parser("evolve", help="run the walk, write rho(0..T)")
    common(sp)
    sp.add_argument("--horizon", type=int)
    sp.set_defaults(func=cmd_evolve,
                    overrides={"seed": "seed", "horizon": "horizon"})

    sp = sub.add_parser("equivalence",
                        help="build P(0..T-1), verify, persist")
    common(sp)
    sp.add_argument("--horizon", type=int)
    sp.set_defaults(func=cmd_equivalence,
                    overrides={"seed": "seed", "horizon": "horizon"})

    sp = sub.add_parser("sample", help="sample a trajectory ensemble")
    common(sp, config_required=False)
    sp.add_argument("--from", dest="from_dir",
                    help="directory with persisted p_matrix/rho tables")
    sp.add_argument("--ensemble-size", type=int)
    sp.set_defaults(func=cmd_sample,
                    overrides={"seed": "seed",
                               "ensemble_size": "ensemble_size"})

    sp = sub.add_parser("tvd", help="ensemble-size convergence table")
    common(sp)
    sp.set_defaults(func=cmd_tvd, overrides={"seed": "seed"})

    sp = sub.add_parser("rejection", help="rejection-sampling baseline")
    common(sp)
    sp.add_argument("--attempts", type=int)
    sp.add_argument("--length", type=int)
    sp.set_defaults(func=cmd_rejection,
                    overrides={"seed": "seed", "attempts": "attempts",
                               "length": "length"})

    sp = sub.add_parser("torus-dp",
                        help="Grover/moving-shift torus recursion")
    common(sp)
    sp.add_argument("--horizon", type=int)
    sp.set_defaults(func=cmd_torus_dp,
                    overrides={"seed": "seed", "horizon": "horizon"})

    sp = sub.add_parser("verify", help="re-check persisted matrices")
    sp.add_argument("--in-dir", required=True)
    sp.add_argument("--tol", type=float, default=1e-10)
    sp.set_defaults(func=cmd_verify, overrides={}, config=None,
                    out_dir=None, format="csv", seed=None)

    return parser


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        config = _load_config(getattr(args, "config", None))
        _apply_overrides(config, args, args.overrides)
        if args.command == "sample" and not args.from_dir and not args.config:
            raise ConfigError("sample needs --config or --from")
        return args.func(args, config)
    except _RUNTIME_ERRORS as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 1
    except (ConfigError, ValidationError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except QRWalkError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
