"""Compressed-sensing instances and figures of merit.

An instance bundles the observation matrix A (M x N, i.i.d. normal entries
with variance 1/M), the true source signal x (i.i.d. standard normal), the
true support indicator xi (exactly round(a*N) randomly placed ones) and the
observation y = A (x o xi) + w, where w is optional Gaussian observation
noise with standard deviation nu.  M = round(alpha*N) measurements are taken
for a compression ratio alpha, and a is the sparseness (fraction of non-zero
source entries).

Instances serialise to a small self-describing binary container (magic bytes,
format version, dimensions, little-endian float64 payload, trailing CRC32)
so that a saved instance reloads bit-identically on any platform.
"""

import csv
import io
import logging
import struct
import zlib
from dataclasses import dataclass

import numpy as np

from .streams import DOMAIN_INSTANCE, check_seed, generator

log = logging.getLogger(__name__)

_MAGIC = b"CIMCSIN\x00"
_VERSION = 1
_HEADER = struct.Struct("<8sIQQdddQ")  # magic, version, N, M, alpha, a, nu, seed


@dataclass(frozen=True)
class Instance:
    """One synthetic compressed-sensing problem.

    Arrays are owned by the instance and must be treated as read-only.
    """

    A: np.ndarray      # (M, N) observation matrix
    y: np.ndarray      # (M,) observation signal
    x: np.ndarray      # (N,) true source signal
    xi: np.ndarray     # (N,) true support, uint8 in {0, 1}
    N: int
    M: int
    alpha: float       # requested compression ratio M/N
    a: float           # requested sparseness
    nu: float          # observation-noise standard deviation
    seed: int

    @property
    def alpha_realized(self):
        return self.M / self.N

    @property
    def a_realized(self):
        return float(np.sum(self.xi)) / self.N


@dataclass(frozen=True)
class Metrics:
    """Reconstruction figures of merit for an estimate (R, sigma)."""

    rmse: float
    direction_cosine: float
    hamming_loss: float


def _round_half_away(v):
    # round-half-away-from-zero for non-negative v
    return int(np.floor(v + 0.5))


def _check_lengths(*vectors):
    sizes = {np.asarray(v).shape for v in vectors}
    if len(sizes) != 1 or any(len(s) != 1 for s in sizes):
        raise ValueError(f"length mismatch between vectors: {sizes}")


def gen_instance(N, alpha, a, nu, seed):
    """Draw a reproducible random instance.

    Parameters
    ----------
    N : int
        Source dimension, at least 2.
    alpha : float
        Compression ratio in (0, 1]; the number of measurements is
        M = round(alpha * N).
    a : float
        Sparseness in (0, 1]; exactly round(a * N) support entries are set.
    nu : float
        Observation-noise standard deviation, >= 0.
    seed : int
        64-bit master seed.  One Philox sub-stream is used per component
        (A, x, support positions, noise) so the same seed always produces a
        bit-identical instance.
    """
    if not (isinstance(N, (int, np.integer)) and N >= 2):
        raise ValueError(f"N must be an integer >= 2, got {N}")
    N = int(N)
    alpha, a, nu = float(alpha), float(a), float(nu)
    if not np.isfinite(alpha) or not 0.0 < alpha <= 1.0:
        raise ValueError(f"alpha must be in (0, 1], got {alpha}")
    if not np.isfinite(a) or not 0.0 < a <= 1.0:
        raise ValueError(f"a must be in (0, 1], got {a}")
    if not np.isfinite(nu) or nu < 0.0:
        raise ValueError(f"nu must be finite and >= 0, got {nu}")
    seed = check_seed(seed)

    M = _round_half_away(alpha * N)
    k = _round_half_away(a * N)

    A = generator(seed, DOMAIN_INSTANCE, 0).standard_normal((M, N)) / np.sqrt(M)
    x = generator(seed, DOMAIN_INSTANCE, 1).standard_normal(N)

    # seeded partial Fisher-Yates shuffle; first k slots become the support
    rg = generator(seed, DOMAIN_INSTANCE, 2)
    idx = np.arange(N)
    for i in range(k):
        j = i + int(rg.integers(0, N - i))
        idx[i], idx[j] = idx[j], idx[i]
    xi = np.zeros(N, dtype=np.uint8)
    xi[idx[:k]] = 1

    # noise stream is drawn even for nu = 0 so that changing nu rescales the
    # same noise pattern instead of reshuffling it
    w = generator(seed, DOMAIN_INSTANCE, 3).standard_normal(M)
    y = A @ (x * xi) + nu * w

    return Instance(A=A, y=y, x=x, xi=xi, N=N, M=M,
                    alpha=alpha, a=a, nu=nu, seed=seed)


def rmse(R, sigma, x, xi):
    """Root-mean-square error between the masked estimate and masked truth:
    sqrt(1/N * sum_r (R_r sigma_r - x_r xi_r)^2)."""
    R = np.asarray(R, dtype=float)
    sigma = np.asarray(sigma, dtype=float)
    x = np.asarray(x, dtype=float)
    xi = np.asarray(xi, dtype=float)
    _check_lengths(R, sigma, x, xi)
    d = R * sigma - x * xi
    return float(np.sqrt(np.mean(d * d)))


def direction_cosine(xi, sigma):
    """Normalised support overlap sum(xi*sigma)/sqrt(sum(xi)*sum(sigma)).

    Equals 1 exactly when both supports coincide as sets.  If either support
    is empty the overlap is undefined; 0.0 is returned (and logged) so that
    sweep aggregation stays total.
    """
    xi = np.asarray(xi, dtype=float)
    sigma = np.asarray(sigma, dtype=float)
    _check_lengths(xi, sigma)
    s_xi, s_sg = float(np.sum(xi)), float(np.sum(sigma))
    if s_xi == 0.0 or s_sg == 0.0:
        log.warning("direction_cosine: degenerate (empty) support, returning 0")
        return 0.0
    return float(np.dot(xi, sigma) / np.sqrt(s_xi * s_sg))


def hamming_loss(sigma, xi):
    """Fraction of support entries that disagree: 1/N * sum_r |sigma_r - xi_r|."""
    sigma = np.asarray(sigma, dtype=float)
    xi = np.asarray(xi, dtype=float)
    _check_lengths(sigma, xi)
    return float(np.mean(np.abs(sigma - xi)))


def compute_metrics(R, sigma, x, xi):
    return Metrics(rmse=rmse(R, sigma, x, xi),
                   direction_cosine=direction_cosine(xi, sigma),
                   hamming_loss=hamming_loss(sigma, xi))


# ---------------------------------------------------------------------------
# persistence
# ---------------------------------------------------------------------------

def instance_to_bytes(inst):
    """Serialise an instance to the binary container format."""
    buf = io.BytesIO()
    buf.write(_HEADER.pack(_MAGIC, _VERSION, inst.N, inst.M,
                           inst.alpha, inst.a, inst.nu, inst.seed))
    buf.write(np.ascontiguousarray(inst.A, dtype="<f8").tobytes())
    buf.write(np.ascontiguousarray(inst.y, dtype="<f8").tobytes())
    buf.write(np.ascontiguousarray(inst.x, dtype="<f8").tobytes())
    buf.write(np.ascontiguousarray(inst.xi, dtype=np.uint8).tobytes())
    payload = buf.getvalue()
    return payload + struct.pack("<I", zlib.crc32(payload))


def instance_from_bytes(data):
    if len(data) < _HEADER.size + 4:
        raise ValueError("truncated instance container")
    payload, (crc,) = data[:-4], struct.unpack("<I", data[-4:])
    if zlib.crc32(payload) != crc:
        raise ValueError("instance container checksum mismatch")
    magic, version, N, M, alpha, a, nu, seed = _HEADER.unpack_from(payload, 0)
    if magic != _MAGIC:
        raise ValueError("not an instance container (bad magic bytes)")
    if version != _VERSION:
        raise ValueError(f"unsupported instance container version {version}")
    off = _HEADER.size
    nbytes_A, nbytes_vec = 8 * M * N, 8 * M
    expected = off + nbytes_A + nbytes_vec + 8 * N + N
    if len(payload) != expected:
        raise ValueError("instance container has inconsistent payload size")
    A = np.frombuffer(payload, dtype="<f8", count=M * N, offset=off).reshape(M, N)
    off += nbytes_A
    y = np.frombuffer(payload, dtype="<f8", count=M, offset=off)
    off += nbytes_vec
    x = np.frombuffer(payload, dtype="<f8", count=N, offset=off)
    off += 8 * N
    xi = np.frombuffer(payload, dtype=np.uint8, count=N, offset=off)
    if not (np.all(np.isfinite(A)) and np.all(np.isfinite(y)) and np.all(np.isfinite(x))):
        raise ValueError("instance container holds non-finite values")
    return Instance(A=A.copy(), y=y.copy(), x=x.copy(), xi=xi.copy(),
                    N=N, M=M, alpha=alpha, a=a, nu=nu, seed=seed)


def save_instance(inst, path):
    with open(path, "wb") as fh:
        fh.write(instance_to_bytes(inst))


def load_instance(path):
    with open(path, "rb") as fh:
        return instance_from_bytes(fh.read())


def export_csv(inst, directory):
    """Write A.csv, y.csv, signals.csv and meta.csv for manual inspection."""
    import os

    os.makedirs(directory, exist_ok=True)
    np.savetxt(os.path.join(directory, "A.csv"), inst.A, delimiter=",")
    np.savetxt(os.path.join(directory, "y.csv"), inst.y, delimiter=",")
    with open(os.path.join(directory, "signals.csv"), "w", newline="") as fh:
        wr = csv.writer(fh)
        wr.writerow(["r", "x", "xi"])
        for r in range(inst.N):
            wr.writerow([r, repr(float(inst.x[r])), int(inst.xi[r])])
    with open(os.path.join(directory, "meta.csv"), "w", newline="") as fh:
        wr = csv.writer(fh)
        wr.writerow(["N", "M", "alpha", "a", "nu", "seed",
                     "alpha_realized", "a_realized"])
        wr.writerow([inst.N, inst.M, repr(inst.alpha), repr(inst.a),
                     repr(inst.nu), inst.seed,
                     repr(inst.alpha_realized), repr(inst.a_realized)])
