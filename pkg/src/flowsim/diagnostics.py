"""Geometry checks over learned representations.

Everything here is read-only over a matrix of embedding columns: pairwise
cosine similarities (class-sorted, so block structure is visible), per-class
singular-value spectra with an effective-rank cutoff, and scalar
orthogonality scores summarizing how separated the class subspaces are.
"""

import json
from dataclasses import dataclass

import numpy as np

from .linalg import check_matrix, make_rng, sym_eig
from .matio import save_matrix, write_matrix_csv

# Relative cutoff for counting a singular value as structurally nonzero.
EFFECTIVE_RANK_RTOL = 1e-6


class ZeroNormColumn(Exception):
    """A column with (near-)zero norm has no direction to compare."""


@dataclass(frozen=True, eq=False)
class SimilarityMatrix:
    """Cosine similarities between embedding columns, class-sorted."""

    values: np.ndarray    # n x n, symmetric by construction
    labels: np.ndarray    # class of row/column i, ascending
    order: np.ndarray     # original column index of row/column i

    def __post_init__(self):
        n = self.values.shape[0]
        if self.values.shape != (n, n):
            raise ValueError("similarity matrix must be square")
        if self.labels.shape != (n,) or self.order.shape != (n,):
            raise ValueError("labels and order must have one entry per column")
        if np.any(np.diff(self.labels) < 0):
            raise ValueError("labels must be sorted ascending")

    @property
    def n_samples(self):
        return self.values.shape[0]


@dataclass(frozen=True)
class ClassSpectrum:
    label: int
    size: int
    singular_values: tuple     # descending
    effective_rank: int
    rank_target: int           # min(size, embed_dim)
    top_dispersion: float      # std/mean of the top min(size-1, d-1) values


@dataclass(frozen=True)
class SpectrumReport:
    embed_dim: int
    classes: tuple             # ClassSpectrum per label, ascending


def cosine_matrix(z, labels, max_columns=None, seed=0):
    """Pairwise cosine similarities, columns re-ordered by class.

    With more than ``max_columns`` columns, a seeded subsample of that many
    columns is used to bound memory. Exact symmetry is enforced by computing
    one triangle and mirroring it.
    """
    z = check_matrix(z, "z")
    labels = np.asarray(labels)
    if labels.shape != (z.shape[1],):
        raise ValueError("one label per column required")
    if max_columns is not None and z.shape[1] > max_columns:
        rng = make_rng(seed)
        keep = np.sort(rng.choice(z.shape[1], size=max_columns, replace=False))
        z = z[:, keep]
        labels = labels[keep]
        original = keep
    else:
        original = np.arange(z.shape[1])

    norms = np.linalg.norm(z, axis=0)
    bad = np.flatnonzero(norms < 1e-12)
    if bad.size:
        raise ZeroNormColumn(f"column {original[bad[0]]} has near-zero norm")

    order = np.argsort(labels, kind="stable")
    unit = z[:, order] / norms[order]
    sims = unit.T @ unit
    out = np.triu(sims)
    out = out + np.triu(out, 1).T
    np.fill_diagonal(out, 1.0)
    np.clip(out, -1.0, 1.0, out=out)
    return SimilarityMatrix(
        values=out, labels=labels[order], order=original[order]
    )


def orthogonality_score(sim):
    """(mean inter-class |cos|, mean intra-class |cos|), diagonal excluded.

    Means over empty pair sets (single class, or singleton classes) are 0.
    """
    n = sim.n_samples
    same = sim.labels[:, None] == sim.labels[None, :]
    off_diag = ~np.eye(n, dtype=bool)
    abs_vals = np.abs(sim.values)
    inter_mask = ~same
    intra_mask = same & off_diag
    inter = float(abs_vals[inter_mask].mean()) if inter_mask.any() else 0.0
    intra = float(abs_vals[intra_mask].mean()) if intra_mask.any() else 0.0
    return inter, intra


def class_spectra(z, labels):
    """Per-class singular values of the embedding columns.

    Singular values come from the eigenvalues of Z_k Z_k^T (clipped at zero
    before the square root). Effective rank counts values at or above
    ``EFFECTIVE_RANK_RTOL`` times the largest one; an all-zero class has
    effective rank 0. Dispersion of the top values is 0 when their mean is 0.
    """
    z = check_matrix(z, "z")
    labels = np.asarray(labels)
    if labels.shape != (z.shape[1],):
        raise ValueError("one label per column required")
    d = z.shape[0]
    reports = []
    for k in np.unique(labels):
        cols = np.flatnonzero(labels == k)
        zk = z[:, cols]
        w, _ = sym_eig(zk @ zk.T)
        sigma = np.sqrt(np.clip(w, 0.0, None))
        top = sigma[0]
        if top > 0.0:
            rank = int(np.count_nonzero(sigma >= EFFECTIVE_RANK_RTOL * top))
        else:
            rank = 0
        n_top = min(cols.size - 1, d - 1)
        if n_top >= 1:
            head = sigma[:n_top]
            mean = head.mean()
            dispersion = float(head.std() / mean) if mean > 0.0 else 0.0
        else:
            dispersion = 0.0
        reports.append(
            ClassSpectrum(
                label=int(k),
                size=int(cols.size),
                singular_values=tuple(float(s) for s in sigma),
                effective_rank=rank,
                rank_target=min(int(cols.size), d),
                top_dispersion=dispersion,
            )
        )
    return SpectrumReport(embed_dim=d, classes=tuple(reports))


def write_similarity(sim, binary_path, csv_path):
    save_matrix(binary_path, sim.values)
    write_matrix_csv(csv_path, sim.values)


def write_spectra_csv(report, path):
    with open(path, "w", encoding="ascii") as fh:
        fh.write("class,index,singular_value\n")
        for spec in report.classes:
            for i, s in enumerate(spec.singular_values):
                fh.write(f"{spec.label},{i},{s:.17g}\n")


def write_spectra_json(report, path):
    payload = {
        "embed_dim": report.embed_dim,
        "classes": [
            {
                "label": spec.label,
                "size": spec.size,
                "effective_rank": spec.effective_rank,
                "rank_target": spec.rank_target,
                "top_dispersion": spec.top_dispersion,
                "sigma_max": spec.singular_values[0] if spec.singular_values else 0.0,
            }
            for spec in report.classes
        ],
    }
    with open(path, "w", encoding="ascii") as fh:
        json.dump(payload, fh, indent=2)
        fh.write("\n")
