"""File writers: ensemble CSV + manifest, distance reports, run manifests.

Floats are written with ``repr`` so identical inputs give byte-identical files.
"""
from __future__ import annotations

import csv
import json
import math
import os
from typing import Optional

import numpy as np

from .fields import sobolev_norm_sq
from .gibbs import WeightedEnsemble, wick_mass


def library_version() -> str:
    from . import __version__

    return __version__


def ensure_dir(path: str) -> str:
    os.makedirs(path, exist_ok=True)
    return path


def _num(x) -> str:
    return repr(float(x))


def ensemble_columns(ens: WeightedEnsemble) -> dict:
    """Per-sample observables written next to the weights."""
    c = ens.coeffs
    cols = {
        "hs_norm_sq_m0.5": sobolev_norm_sq(c, -0.5),
        "re_u1": c[:, 0].real,
        "im_u1": c[:, 0].imag,
    }
    if ens.ctx is not None:
        cols = {"wick_mass": wick_mass(c, ens.ctx), **cols}
    return cols


def write_ensemble(ens: WeightedEnsemble, csv_path: str, manifest_path: str, seed, extra: Optional[dict] = None):
    """CSV rows (sample_id, weight, log_weight, observables...) and a JSON manifest."""
    cols = ensemble_columns(ens)
    with open(csv_path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["sample_id", "weight", "log_weight", *cols])
        for i in range(len(ens)):
            w.writerow([i, _num(ens.weights[i]), _num(ens.log_weights[i]), *(_num(v[i]) for v in cols.values())])
    z, z_se = ens.partition_function() if not ens.chains else (math.nan, math.nan)
    means = {}
    for name, v in cols.items():
        m, se = ens.expectation(v)
        means[name] = {"mean": m, "stderr": se}
    ctx = ens.ctx
    manifest = {
        "ctx": None
        if ctx is None
        else {"k": ctx.k, "N": ctx.N, "sigma": ctx.s, "sigma_provenance": ctx.sigma.provenance, "kind": ctx.kind.label},
        "spec": repr(ens.spec),
        "seed": seed,
        "count": len(ens),
        "ess": ens.ess,
        "chains": ens.chains,
        "acceptance_rate": ens.acceptance_rate,
        "Z": None if math.isnan(z) else z,
        "Z_stderr": None if math.isnan(z_se) else z_se,
        "observables": means,
        "version": library_version(),
    }
    if extra:
        manifest.update(extra)
    with open(manifest_path, "w") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
    return manifest


def distance_record(pair: str, metric: str, value: float, stderr, params: dict, seed) -> dict:
    return {"pair": pair, "metric": metric, "value": value, "stderr": stderr, "params": params, "seed": seed}


def write_csv(path_or_fh, header, rows):
    """Plain CSV with repr floats; ``path_or_fh`` may be an open file."""
    own = isinstance(path_or_fh, (str, os.PathLike))
    fh = open(path_or_fh, "w", newline="") if own else path_or_fh
    try:
        w = csv.writer(fh)
        w.writerow(header)
        for row in rows:
            w.writerow([_num(v) if isinstance(v, (float, np.floating)) else v for v in row])
    finally:
        if own:
            fh.close()


def write_manifest(path: str, payload: dict):
    payload = dict(payload)
    payload.setdefault("version", library_version())
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True, default=str)
