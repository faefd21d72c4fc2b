"""File formats: CSV and binary matrices, JSON records for truths/observations.

Binary layout: magic b"VLAS1", then little-endian uint32 n and p, then n*p
float64 values (little endian, row major).  CSV matrices are one row per
observation.  All JSON records carry the seeds used to generate them.
"""

from __future__ import annotations

import json
import struct
from pathlib import Path

import numpy as np

from .model import DesignMatrix, GroundTruth, Observation

MAGIC = b"VLAS1"

SCHEMA_VERSION = "vlasso/v1"


# ---------------------------------------------------------------------------
# matrices and vectors

def save_matrix_csv(path, M: np.ndarray) -> None:
    M = np.atleast_2d(np.asarray(M, dtype=np.float64))
    np.savetxt(path, M, delimiter=",", fmt="%.17g")


def load_matrix_csv(path) -> np.ndarray:
    M = np.loadtxt(path, delimiter=",", dtype=np.float64)
    return np.atleast_2d(M) if M.ndim < 2 else M


def save_matrix_bin(path, M: np.ndarray) -> None:
    M = np.atleast_2d(np.ascontiguousarray(M, dtype=np.float64))
    n, p = M.shape
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<II", n, p))
        fh.write(M.astype("<f8").tobytes(order="C"))


def load_matrix_bin(path) -> np.ndarray:
    with open(path, "rb") as fh:
        magic = fh.read(len(MAGIC))
        if magic != MAGIC:
            raise ValueError(f"{path}: bad magic {magic!r}, expected {MAGIC!r}")
        n, p = struct.unpack("<II", fh.read(8))
        data = fh.read(8 * n * p)
    if len(data) != 8 * n * p:
        raise ValueError(f"{path}: truncated payload")
    return np.frombuffer(data, dtype="<f8").reshape(n, p).astype(np.float64)


def load_matrix(path) -> np.ndarray:
    """Dispatch on extension: .bin/.vlas -> binary, anything else -> CSV."""
    suffix = Path(path).suffix.lower()
    if suffix in (".bin", ".vlas"):
        return load_matrix_bin(path)
    return load_matrix_csv(path)


def load_design(path) -> DesignMatrix:
    return DesignMatrix(load_matrix(path))


def load_vector(path) -> np.ndarray:
    """A vector stored as an (n,1) or (1,n) matrix, or an observation JSON."""
    if Path(path).suffix.lower() == ".json":
        return observation_from_json_file(path).y
    M = load_matrix(path)
    if 1 not in M.shape and M.ndim == 2:
        raise ValueError(f"{path}: expected a vector, got shape {M.shape}")
    return M.reshape(-1)


# ---------------------------------------------------------------------------
# JSON records

def ground_truth_to_json(t: GroundTruth) -> dict:
    return {
        "schema": SCHEMA_VERSION,
        "kind": "ground_truth",
        "p": t.p,
        "support": [int(j) for j in t.support],
        "signs": [float(s) for s in t.signs],
        "values": [float(v) for v in t.beta[t.support]],
        "sigma": t.sigma,
        "seed": t.seed,
    }


def ground_truth_from_json(d: dict) -> GroundTruth:
    p = int(d["p"])
    support = np.asarray(d["support"], dtype=int)
    beta = np.zeros(p)
    beta[support] = np.asarray(d["values"], dtype=float)
    return GroundTruth(
        support=support,
        signs=np.asarray(d["signs"], dtype=float),
        beta=beta,
        sigma=float(d["sigma"]),
        seed=d.get("seed"),
    )


def observation_to_json(o: Observation) -> dict:
    return {
        "schema": SCHEMA_VERSION,
        "kind": "observation",
        "y": [float(v) for v in o.y],
        "noise": [float(v) for v in o.noise],
        "seed": o.seed,
    }


def observation_from_json(d: dict) -> Observation:
    return Observation(
        y=np.asarray(d["y"], dtype=float),
        noise=np.asarray(d["noise"], dtype=float),
        seed=d.get("seed"),
    )


def observation_from_json_file(path) -> Observation:
    with open(path) as fh:
        return observation_from_json(json.load(fh))


def write_json(path, payload: dict) -> None:
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=2)
        fh.write("\n")
