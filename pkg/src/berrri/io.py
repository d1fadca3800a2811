"""Matrix file ingestion and result persistence.

Interchange format is tab-separated text: one header row of column IDs and one
leading column of row IDs.  Floats are written with 17 significant digits so a
write/read round trip is exact.  Every result directory carries a JSON
manifest with the full configuration, seed, and format version, from which
the run is reproducible.
"""

import csv
import json
import os
from pathlib import Path
from typing import NamedTuple, Optional

import numpy as np

from .errors import ValidationError
from .types import Dataset, GENOTYPE_VALUES

__all__ = [
    "FORMAT_VERSION",
    "MatrixFile",
    "load_matrix",
    "save_matrix",
    "load_positions",
    "load_dataset",
    "save_results",
    "save_simulation",
    "load_manifest",
]

FORMAT_VERSION = "1"


def fmt(x) -> str:
    """Decimal text at 17 significant digits (round-trips float64 exactly)."""
    return format(float(x), ".17g")


class MatrixFile(NamedTuple):
    values: np.ndarray
    row_ids: tuple
    col_ids: tuple


def load_matrix(path, kind: str) -> MatrixFile:
    """Read a labelled TSV matrix; kind is 'genotype' or 'trait'.

    Genotype matrices must contain only dosages {0, 1, 2}; trait matrices must
    be finite reals.  Errors name the offending cell by row and column ID.
    """
    if kind not in ("genotype", "trait"):
        raise ValidationError(f"kind must be 'genotype' or 'trait', got {kind!r}")
    path = Path(path)
    if not path.is_file():
        raise ValidationError(f"no such file: {path}")
    with open(path, newline="") as fh:
        reader = csv.reader(fh, delimiter="\t")
        try:
            header = next(reader)
        except StopIteration:
            raise ValidationError(f"{path}: empty file") from None
        col_ids = tuple(header[1:])
        if not col_ids:
            raise ValidationError(f"{path}: header row has no column IDs")
        row_ids = []
        rows = []
        for i, rec in enumerate(reader, start=2):
            if len(rec) != len(col_ids) + 1:
                raise ValidationError(
                    f"{path}: line {i} has {len(rec)} fields, expected {len(col_ids) + 1}"
                )
            row_ids.append(rec[0])
            parsed = np.empty(len(col_ids))
            for j, text in enumerate(rec[1:]):
                try:
                    parsed[j] = float(text)
                except ValueError:
                    raise ValidationError(
                        f"{path}: malformed cell at row {rec[0]!r} (line {i}), "
                        f"column {col_ids[j]!r}: {text!r}"
                    ) from None
            rows.append(parsed)
    if not rows:
        raise ValidationError(f"{path}: no data rows")
    values = np.vstack(rows)

    if kind == "genotype":
        bad = ~np.isin(values, GENOTYPE_VALUES)
        if bad.any():
            i, j = np.argwhere(bad)[0]
            raise ValidationError(
                f"{path}: genotype value {values[i, j]!r} at row {row_ids[i]!r}, "
                f"column {col_ids[j]!r} is not a dosage in {{0, 1, 2}}"
            )
    else:
        bad = ~np.isfinite(values)
        if bad.any():
            i, j = np.argwhere(bad)[0]
            raise ValidationError(
                f"{path}: non-finite trait value at row {row_ids[i]!r}, column {col_ids[j]!r}"
            )
    return MatrixFile(values=values, row_ids=tuple(row_ids), col_ids=tuple(col_ids))


def save_matrix(path, values, row_ids=None, col_ids=None, corner: str = "id"):
    values = np.asarray(values)
    n, m = values.shape
    row_ids = row_ids if row_ids is not None else [f"r{i}" for i in range(n)]
    col_ids = col_ids if col_ids is not None else [f"c{j}" for j in range(m)]
    with open(path, "w", newline="") as fh:
        fh.write("\t".join([corner, *map(str, col_ids)]) + "\n")
        for rid, row in zip(row_ids, values):
            fh.write("\t".join([str(rid), *(fmt(v) for v in row)]) + "\n")


def load_positions(path) -> dict:
    """Two-column TSV (ID, base-pair position) -> {id: position}."""
    path = Path(path)
    if not path.is_file():
        raise ValidationError(f"no such file: {path}")
    out = {}
    with open(path, newline="") as fh:
        for i, rec in enumerate(csv.reader(fh, delimiter="\t"), start=1):
            if len(rec) != 2:
                raise ValidationError(f"{path}: line {i} has {len(rec)} fields, expected 2")
            try:
                out[rec[0]] = float(rec[1])
            except ValueError:
                raise ValidationError(
                    f"{path}: malformed position at line {i}: {rec[1]!r}"
                ) from None
    return out


def load_dataset(
    genotype_path,
    trait_path,
    snp_positions_path=None,
    trait_positions_path=None,
) -> Dataset:
    gen = load_matrix(genotype_path, "genotype")
    tr = load_matrix(trait_path, "trait")
    if len(gen.row_ids) != len(tr.row_ids):
        raise ValidationError(
            f"genotype file has {len(gen.row_ids)} individuals but trait file has "
            f"{len(tr.row_ids)}; the row counts must match"
        )
    snp_pos = trait_pos = None
    if snp_positions_path is not None:
        table = load_positions(snp_positions_path)
        missing = [s for s in gen.col_ids if s not in table]
        if missing:
            raise ValidationError(f"missing positions for SNPs: {missing[:5]}")
        snp_pos = np.array([table[s] for s in gen.col_ids])
    if trait_positions_path is not None:
        table = load_positions(trait_positions_path)
        missing = [t for t in tr.col_ids if t not in table]
        if missing:
            raise ValidationError(f"missing positions for traits: {missing[:5]}")
        trait_pos = np.array([table[t] for t in tr.col_ids])
    return Dataset(
        X=gen.values,
        Y=tr.values,
        snp_ids=gen.col_ids,
        trait_ids=tr.col_ids,
        snp_positions=snp_pos,
        trait_positions=trait_pos,
    )


def _prepare_out_dir(out_dir) -> Path:
    out = Path(out_dir)
    try:
        out.mkdir(parents=True, exist_ok=True)
        probe = out / ".write-probe"
        probe.touch()
        probe.unlink()
    except OSError as exc:
        raise ValidationError(f"output directory {out} is not writable: {exc}") from None
    return out


def _write_manifest(path, payload: dict):
    payload = dict(payload)
    payload["format_version"] = FORMAT_VERSION
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")


def load_manifest(path) -> dict:
    with open(path) as fh:
        return json.load(fh)


def save_results(out_dir, dataset: Dataset, state, report, scores=None, config: Optional[dict] = None):
    """Persist a fitted model: score, factor, and loading tables plus manifest.

    Writes vmap.tsv (snp, trait, signed score, magnitude, significance flag,
    and SNP-trait distance when both position tracks are present),
    factors.tsv (snp, factor, inclusion probability), loadings.tsv (factor,
    trait, effect mean), null_scores.tsv when a permutation null is attached,
    and manifest.json.  Returns {name: path}.
    """
    out = _prepare_out_dir(out_dir)
    signed = scores.signed if scores is not None else state.eta @ state.phi
    magnitude = scores.vmap if scores is not None else np.abs(signed)
    threshold = scores.threshold if scores is not None else None
    significant = magnitude >= threshold if threshold is not None else np.zeros_like(magnitude, dtype=bool)
    with_distance = dataset.snp_positions is not None and dataset.trait_positions is not None

    paths = {}
    vmap_path = out / "vmap.tsv"
    with open(vmap_path, "w") as fh:
        cols = ["snp_id", "trait_id", "vmap_signed", "vmap", "significant"]
        if with_distance:
            cols.append("distance")
        fh.write("\t".join(cols) + "\n")
        for q, snp in enumerate(dataset.snp_ids):
            for p, trait in enumerate(dataset.trait_ids):
                row = [snp, trait, fmt(signed[q, p]), fmt(magnitude[q, p]), str(int(significant[q, p]))]
                if with_distance:
                    row.append(fmt(abs(dataset.snp_positions[q] - dataset.trait_positions[p])))
                fh.write("\t".join(row) + "\n")
    paths["vmap"] = vmap_path

    # wide Q x P magnitude matrix, consumable by `eval` and external tools
    matrix_path = out / "vmap_matrix.tsv"
    save_matrix(matrix_path, magnitude, dataset.snp_ids, dataset.trait_ids, corner="snp_id")
    paths["vmap_matrix"] = matrix_path

    factors_path = out / "factors.tsv"
    with open(factors_path, "w") as fh:
        fh.write("snp_id\tfactor\teta\n")
        for q, snp in enumerate(dataset.snp_ids):
            for k in range(state.k_max):
                fh.write(f"{snp}\t{k}\t{fmt(state.eta[q, k])}\n")
    paths["factors"] = factors_path

    loadings_path = out / "loadings.tsv"
    with open(loadings_path, "w") as fh:
        fh.write("factor\ttrait_id\tphi\n")
        for k in range(state.k_max):
            for p, trait in enumerate(dataset.trait_ids):
                fh.write(f"{k}\t{trait}\t{fmt(state.phi[k, p])}\n")
    paths["loadings"] = loadings_path

    if scores is not None and scores.null_scores is not None:
        null_path = out / "null_scores.tsv"
        with open(null_path, "w") as fh:
            fh.write("null_score\n")
            for v in scores.null_scores:
                fh.write(fmt(v) + "\n")
        paths["null_scores"] = null_path

    manifest = {
        "config": config or {},
        "converged": report.converged,
        "iterations": report.iterations,
        "final_elbo": report.final_elbo,
        "k_effective": report.k_effective,
        "elbo_trace": list(report.elbo_trace),
        "convergence_p_values": report.p_values,
        "convergence_t_stats": report.t_stats,
        "threshold": threshold,
        "fdr_target": scores.fdr_target if scores is not None else None,
        "n_permutations": scores.n_permutations if scores is not None else None,
        "n_discoveries": int(significant.sum()),
        "n_snps": dataset.n_snps,
        "n_traits": dataset.n_traits,
        "n_individuals": dataset.n_individuals,
    }
    manifest_path = out / "manifest.json"
    _write_manifest(manifest_path, manifest)
    paths["manifest"] = manifest_path
    return paths


def save_simulation(out_dir, dataset: Dataset, truth, config: Optional[dict] = None):
    """Persist a simulated dataset and its planted truth. Returns {name: path}."""
    out = _prepare_out_dir(out_dir)
    ind_ids = [f"ind{n}" for n in range(dataset.n_individuals)]
    k_ids = [f"factor{k}" for k in range(truth.Z_true.shape[1])]
    paths = {}
    for name, values, rows, cols in (
        ("genotypes", dataset.X, ind_ids, dataset.snp_ids),
        ("traits", dataset.Y, ind_ids, dataset.trait_ids),
        ("Z_true", truth.Z_true, dataset.snp_ids, k_ids),
        ("A_true", truth.A_true, k_ids, dataset.trait_ids),
        ("mask", truth.mask.astype(int), dataset.snp_ids, dataset.trait_ids),
    ):
        path = out / f"{name}.tsv"
        save_matrix(path, values, rows, cols)
        paths[name] = path
    manifest_path = out / "manifest.json"
    _write_manifest(manifest_path, {"config": config or {}})
    paths["manifest"] = manifest_path
    return paths
