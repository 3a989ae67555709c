"""Command-line entry points: train, diagnose, gradcheck.

`flowsim train --config run.toml` executes one full training run into a
fresh run directory (timestamp + config hash) and prints that directory.
`flowsim diagnose --checkpoint c.flowmat1 --config run.toml` recomputes the
embeddings of a saved backbone on the configured dataset and rewrites the
geometry artifacts next to the checkpoint.  `flowsim gradcheck` verifies
analytic gradients against finite differences.

Exit codes: 0 success; 2 configuration problems (train/diagnose); 3
numerical divergence (train); 1 gradient-check failure (gradcheck).
"""

import argparse
import json
import sys
from pathlib import Path

from . import __version__
from .backbone import flatten_params, forward, unflatten_params
from .config import (
    ConfigError,
    config_hash,
    finalize_manifest,
    make_run_dir,
    parse_config,
    start_manifest,
)
from .datagen import (
    InconsistentWidth,
    InfeasiblePartition,
    ParseError,
    dirichlet_partition,
    gen_union_of_subspaces,
    load_csv,
)
from .diagnostics import class_spectra, cosine_matrix, orthogonality_score
from .diagnostics import write_similarity, write_spectra_csv, write_spectra_json
from .federation import (
    NonFiniteParameters,
    run,
    write_round_csv,
    write_round_jsonl,
)
from .gradcheck import PASS_THRESHOLD, run_gradcheck
from .linalg import derive_seed
from .matio import load_matrix, save_matrix

TRAIN_ARTIFACTS = (
    "manifest.json",
    "rounds.csv",
    "rounds.jsonl",
    "checkpoint.flowmat1",
    "similarity.flowmat1",
    "spectra.csv",
)


def _materialize_dataset(cfg):
    block = cfg.dataset
    if block["kind"] == "synthetic":
        return gen_union_of_subspaces(
            n_classes=block["n_classes"],
            subspace_dim=block["subspace_dim"],
            samples_per_class=block["samples_per_class"],
            ambient_dim=block["ambient_dim"],
            noise_sigma=block["noise_sigma"],
            seed=derive_seed(cfg.root_seed, "dataset"),
        )
    return load_csv(block["path"])


def _materialize_plan(cfg, dataset):
    if cfg.federation.mode == "centralized":
        return None
    return dirichlet_partition(
        dataset.labels,
        n_clients=cfg.federation.n_clients,
        alpha=cfg.partition["alpha"],
        seed=derive_seed(cfg.root_seed, "partition"),
        min_per_client=cfg.partition["min_per_client"],
    )


def _write_geometry(out_dir, z, labels, cap, seed):
    """Similarity + spectra + scalar scores for an embedding matrix."""
    sim = cosine_matrix(z, labels, max_columns=cap, seed=seed)
    write_similarity(
        sim, out_dir / "similarity.flowmat1", out_dir / "similarity.csv"
    )
    with open(out_dir / "similarity_labels.csv", "w", encoding="ascii") as fh:
        fh.write("position,label,original_index\n")
        for i, (lab, orig) in enumerate(zip(sim.labels, sim.order)):
            fh.write(f"{i},{lab},{orig}\n")
    report = class_spectra(z, labels)
    write_spectra_csv(report, out_dir / "spectra.csv")
    write_spectra_json(report, out_dir / "spectra.json")
    inter, intra = orthogonality_score(sim)
    with open(out_dir / "scores.json", "w", encoding="ascii") as fh:
        json.dump(
            {
                "inter_class_mean_abs_cos": inter,
                "intra_class_mean_abs_cos": intra,
            },
            fh,
            indent=2,
        )
        fh.write("\n")
    return [
        "similarity.flowmat1",
        "similarity.csv",
        "similarity_labels.csv",
        "spectra.csv",
        "spectra.json",
        "scores.json",
    ]


def cmd_train(args):
    try:
        cfg = parse_config(args.config)
        dataset = _materialize_dataset(cfg)
        plan = _materialize_plan(cfg, dataset)
    except (ConfigError, ParseError, InconsistentWidth, InfeasiblePartition,
            ValueError, OSError) as exc:
        print(f"flowsim train: {exc}", file=sys.stderr)
        return 2

    run_dir = make_run_dir(cfg)
    print(run_dir, flush=True)
    manifest = start_manifest(run_dir, cfg, __version__)
    try:
        final_params, logs = run(cfg.federation, dataset, plan)
    except NonFiniteParameters as exc:
        print(f"flowsim train: diverged: {exc}", file=sys.stderr)
        finalize_manifest(run_dir, manifest, ["manifest.json"], status="diverged")
        return 3

    write_round_csv(run_dir / "rounds.csv", logs)
    write_round_jsonl(run_dir / "rounds.jsonl", logs)
    save_matrix(run_dir / "checkpoint.flowmat1", flatten_params(final_params))
    meta = {
        "input_dim": final_params.input_dim,
        "embed_dim": final_params.output_dim,
        "n_params": int(flatten_params(final_params).size),
        "layer_manifest": final_params.manifest(),
        "config_hash": config_hash(cfg),
    }
    (run_dir / "checkpoint.json").write_text(
        json.dumps(meta, indent=2) + "\n", encoding="ascii"
    )

    z, _ = forward(final_params, dataset.x)
    geometry_files = _write_geometry(
        run_dir,
        z,
        dataset.labels,
        cfg.diagnostics["subsample_cap"],
        derive_seed(cfg.root_seed, "diag-subsample"),
    )
    files = [
        "manifest.json",
        "rounds.csv",
        "rounds.jsonl",
        "checkpoint.flowmat1",
        "checkpoint.json",
        *geometry_files,
    ]
    finalize_manifest(run_dir, manifest, files)
    return 0


def cmd_diagnose(args):
    ckpt_path = Path(args.checkpoint)
    meta_path = ckpt_path.with_suffix(".json")
    try:
        cfg = parse_config(args.config)
        dataset = _materialize_dataset(cfg)
        if not ckpt_path.is_file():
            raise ConfigError(f"checkpoint not found: {ckpt_path}")
        if not meta_path.is_file():
            raise ConfigError(f"checkpoint metadata not found: {meta_path}")
        meta = json.loads(meta_path.read_text(encoding="ascii"))
        vec = load_matrix(ckpt_path).ravel()
        try:
            params = unflatten_params(vec, meta["layer_manifest"])
        except ValueError as exc:
            raise ConfigError(f"shape mismatch: {exc}") from exc
        if params.input_dim != dataset.ambient_dim:
            raise ConfigError(
                "shape mismatch: checkpoint expects input dimension "
                f"{params.input_dim}, dataset has {dataset.ambient_dim}"
            )
        if params.output_dim != cfg.federation.embed_dim:
            raise ConfigError(
                "shape mismatch: checkpoint embeds into "
                f"{params.output_dim}, config says {cfg.federation.embed_dim}"
            )
    except (ConfigError, ParseError, InconsistentWidth, ValueError,
            OSError) as exc:
        print(f"flowsim diagnose: {exc}", file=sys.stderr)
        return 2

    z, _ = forward(params, dataset.x)
    _write_geometry(
        ckpt_path.parent,
        z,
        dataset.labels,
        cfg.diagnostics["subsample_cap"],
        derive_seed(cfg.root_seed, "diag-subsample"),
    )
    print(ckpt_path.parent, flush=True)
    return 0


def cmd_gradcheck(args):
    max_err, rows = run_gradcheck(seed=args.seed)
    for shape, err in rows:
        print(f"{shape}: rel_err={err:.3e}")
    print(f"max relative error: {max_err:.3e}")
    if max_err < PASS_THRESHOLD:
        print("PASS")
        return 0
    worst = max(rows, key=lambda row: row[1])
    print(
        f"gradcheck FAILED on {worst[0]} (rel_err={worst[1]:.3e}, "
        f"threshold {PASS_THRESHOLD:g})",
        file=sys.stderr,
    )
    return 1


def build_parser():
    parser = argparse.ArgumentParser(
        prog="flowsim",
        description="Federated coding-rate representation learning simulator.",
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p_train = sub.add_parser("train", help="run one training configuration")
    p_train.add_argument("--config", required=True, help="TOML or JSON config")
    p_train.set_defaults(func=cmd_train)

    p_diag = sub.add_parser("diagnose", help="geometry artifacts for a checkpoint")
    p_diag.add_argument("--checkpoint", required=True, help="checkpoint .flowmat1")
    p_diag.add_argument("--config", required=True, help="config describing the data")
    p_diag.set_defaults(func=cmd_diagnose)

    p_grad = sub.add_parser("gradcheck", help="verify gradients vs finite differences")
    p_grad.add_argument("--seed", type=int, default=0)
    p_grad.set_defaults(func=cmd_gradcheck)

    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
