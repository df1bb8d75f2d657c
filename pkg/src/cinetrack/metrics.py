"""Objective evaluation over audio embeddings.

Distributional fidelity (Frechet distance between fitted Gaussians, k-NN
manifold precision), diversity (manifold recall), paired fidelity (cosine
similarity, classifier-distribution KL), and the k-means survey-sample
selector. All inputs are precomputed embedding sets; no model inference
happens here.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy.spatial.distance import cdist

DEFAULT_KNN = 5
DEFAULT_FAD_EPS = 1e-6
DEFAULT_KL_SMOOTH = 1e-9
KMEANS_TOL = 1e-6
KMEANS_MAX_ITER = 300


class ZeroNormEmbeddingError(ValueError):
    """Cosine similarity is undefined for zero-norm rows."""

    def __init__(self, ids: list[str]):
        self.ids = ids
        super().__init__(f"zero-norm embeddings for ids: {', '.join(ids)}")


@dataclass(frozen=True)
class EmbeddingSet:
    """N x D float matrix with one unique id per row."""

    matrix: np.ndarray
    ids: tuple[str, ...]

    def __post_init__(self):
        matrix = np.asarray(self.matrix, dtype=np.float64)
        if matrix.ndim != 2 or matrix.shape[0] < 1:
            raise ValueError(f"matrix must be N x D with N >= 1, got {matrix.shape}")
        if not np.all(np.isfinite(matrix)):
            raise ValueError("embeddings must be finite")
        ids = tuple(str(i) for i in self.ids)
        if len(ids) != matrix.shape[0]:
            raise ValueError("one id per row required")
        if len(set(ids)) != len(ids):
            raise ValueError("ids must be unique")
        object.__setattr__(self, "matrix", matrix)
        object.__setattr__(self, "ids", ids)

    @property
    def n(self) -> int:
        return self.matrix.shape[0]

    @property
    def dim(self) -> int:
        return self.matrix.shape[1]


@dataclass(frozen=True)
class ProbDistribution:
    """Length-C probability vector (non-negative, sums to 1 within 1e-6)."""

    probs: np.ndarray

    def __post_init__(self):
        probs = np.asarray(self.probs, dtype=np.float64)
        if probs.ndim != 1 or probs.size == 0:
            raise ValueError("probs must be a non-empty vector")
        if np.any(probs < 0):
            raise ValueError("probabilities must be non-negative")
        if abs(probs.sum() - 1.0) > 1e-6:
            raise ValueError(f"probabilities must sum to 1, got {probs.sum()}")
        object.__setattr__(self, "probs", probs)


def _sqrtm_psd(mat: np.ndarray) -> np.ndarray:
    """Symmetric PSD square root via eigendecomposition (negative noise clipped)."""
    vals, vecs = np.linalg.eigh((mat + mat.T) / 2.0)
    vals = np.clip(vals, 0.0, None)
    return (vecs * np.sqrt(vals)) @ vecs.T


def frechet_distance(
    mu_r: np.ndarray, cov_r: np.ndarray, mu_g: np.ndarray, cov_g: np.ndarray,
    eps: float = DEFAULT_FAD_EPS,
) -> float:
    """Frechet distance between two Gaussians from their exact moments.

    The cross term uses the symmetrized product root sqrt(S_r^1/2 S_g S_r^1/2);
    eps * I is added to both covariances when either is near-singular. The
    result is clamped at zero against floating-point noise.
    """
    mu_r = np.asarray(mu_r, dtype=np.float64)
    mu_g = np.asarray(mu_g, dtype=np.float64)
    cov_r = np.atleast_2d(np.asarray(cov_r, dtype=np.float64))
    cov_g = np.atleast_2d(np.asarray(cov_g, dtype=np.float64))
    if mu_r.shape != mu_g.shape or cov_r.shape != cov_g.shape:
        raise ValueError("moment shapes must agree")

    min_eig = min(
        np.linalg.eigvalsh(cov_r).min(), np.linalg.eigvalsh(cov_g).min()
    )
    if min_eig < eps:
        identity = np.eye(cov_r.shape[0])
        cov_r = cov_r + eps * identity
        cov_g = cov_g + eps * identity

    root_r = _sqrtm_psd(cov_r)
    cross = _sqrtm_psd(root_r @ cov_g @ root_r)
    diff = mu_r - mu_g
    value = float(diff @ diff + np.trace(cov_r) + np.trace(cov_g) - 2.0 * np.trace(cross))
    return max(value, 0.0)


def fad(ref: EmbeddingSet, gen: EmbeddingSet, eps: float = DEFAULT_FAD_EPS) -> float:
    """Frechet distance between Gaussians fitted to the two embedding sets."""
    if ref.dim != gen.dim:
        raise ValueError(f"dimension mismatch: {ref.dim} vs {gen.dim}")
    if ref.n < 2 or gen.n < 2:
        raise ValueError("need at least 2 samples per set to fit a Gaussian")
    mu_r = ref.matrix.mean(axis=0)
    mu_g = gen.matrix.mean(axis=0)
    cov_r = np.cov(ref.matrix, rowvar=False)  # unbiased
    cov_g = np.cov(gen.matrix, rowvar=False)
    return frechet_distance(mu_r, cov_r, mu_g, cov_g, eps=eps)


def _knn_radii(points: np.ndarray, k: int) -> np.ndarray:
    """Distance from each point to its k-th nearest other point."""
    dists = cdist(points, points)
    np.fill_diagonal(dists, np.inf)
    return np.partition(dists, k - 1, axis=1)[:, k - 1]


def manifold_precision(ref: EmbeddingSet, gen: EmbeddingSet, k: int = DEFAULT_KNN) -> float:
    """Fraction of generated points inside the k-NN balls around reference points."""
    if ref.dim != gen.dim:
        raise ValueError("dimension mismatch")
    if k >= ref.n:
        raise ValueError(f"k={k} must be < reference size {ref.n}")
    radii = _knn_radii(ref.matrix, k)
    dists = cdist(gen.matrix, ref.matrix)  # (n_gen, n_ref)
    inside = (dists <= radii[None, :]).any(axis=1)
    return float(inside.mean())


def manifold_recall(ref: EmbeddingSet, gen: EmbeddingSet, k: int = DEFAULT_KNN) -> float:
    """Fraction of reference points inside the k-NN balls around generated points."""
    return manifold_precision(gen, ref, k)


def paired_similarity(ref: EmbeddingSet, gen: EmbeddingSet) -> float:
    """Mean cosine similarity over id-aligned pairs, in [-1, 1]."""
    if ref.n != gen.n:
        raise ValueError(f"paired sets must match in size: {ref.n} vs {gen.n}")
    if ref.ids != gen.ids:
        raise ValueError("paired sets must have identical id order")
    norms_r = np.linalg.norm(ref.matrix, axis=1)
    norms_g = np.linalg.norm(gen.matrix, axis=1)
    bad = (norms_r == 0) | (norms_g == 0)
    if bad.any():
        raise ZeroNormEmbeddingError([ref.ids[i] for i in np.flatnonzero(bad)])
    cosines = np.einsum("nd,nd->n", ref.matrix, gen.matrix) / (norms_r * norms_g)
    return float(np.clip(cosines, -1.0, 1.0).mean())


def paired_kl(
    ref: list[ProbDistribution],
    gen: list[ProbDistribution],
    smooth: float = DEFAULT_KL_SMOOTH,
) -> float:
    """Mean KL(ref_i || gen_i) over aligned pairs, natural log.

    Both sides are smoothed by ``smooth`` and renormalized so that zero bins
    cannot produce infinities.
    """
    if len(ref) != len(gen):
        raise ValueError(f"pair count mismatch: {len(ref)} vs {len(gen)}")
    if len(ref) == 0:
        raise ValueError("need at least one pair")
    total = 0.0
    for p_dist, q_dist in zip(ref, gen):
        p, q = p_dist.probs, q_dist.probs
        if p.shape != q.shape:
            raise ValueError("paired distributions must share the class count")
        p = (p + smooth) / (1.0 + p.size * smooth)
        q = (q + smooth) / (1.0 + q.size * smooth)
        total += float(np.sum(p * np.log(p / q)))
    return total / len(ref)


def _kmeans_pp_init(matrix: np.ndarray, k: int, rng: np.random.Generator) -> np.ndarray:
    n = matrix.shape[0]
    centroids = np.empty((k, matrix.shape[1]))
    first = int(rng.integers(n))
    centroids[0] = matrix[first]
    closest_sq = np.sum((matrix - centroids[0]) ** 2, axis=1)
    for j in range(1, k):
        total = closest_sq.sum()
        if total <= 0.0:
            # duplicates exhausted the spread: pick uniformly
            idx = int(rng.integers(n))
        else:
            idx = int(rng.choice(n, p=closest_sq / total))
        centroids[j] = matrix[idx]
        closest_sq = np.minimum(closest_sq, np.sum((matrix - centroids[j]) ** 2, axis=1))
    return centroids


def kmeans_cluster(
    matrix: np.ndarray, k: int, seed: int
) -> tuple[np.ndarray, np.ndarray, list[float]]:
    """Lloyd's algorithm with k-means++ seeding.

    Returns (centroids, labels, per-iteration inertia). Deterministic for a
    fixed seed; converges when the max centroid shift drops below 1e-6 or
    after 300 iterations.
    """
    matrix = np.asarray(matrix, dtype=np.float64)
    n = matrix.shape[0]
    if k > n:
        raise ValueError(f"k={k} exceeds sample count {n}")
    rng = np.random.default_rng(seed)
    centroids = _kmeans_pp_init(matrix, k, rng)

    inertia_history: list[float] = []
    labels = np.zeros(n, dtype=int)
    for _ in range(KMEANS_MAX_ITER):
        dists = cdist(matrix, centroids)
        labels = np.argmin(dists, axis=1)
        inertia_history.append(float(np.sum(dists[np.arange(n), labels] ** 2)))
        new_centroids = centroids.copy()
        for j in range(k):
            members = matrix[labels == j]
            if len(members):
                new_centroids[j] = members.mean(axis=0)
            else:
                # re-seed an empty cluster at the worst-fit point
                worst = int(np.argmax(dists[np.arange(n), labels]))
                new_centroids[j] = matrix[worst]
        shift = np.max(np.linalg.norm(new_centroids - centroids, axis=1))
        centroids = new_centroids
        if shift < KMEANS_TOL:
            break
    return centroids, labels, inertia_history


def kmeans_select(emb: EmbeddingSet, k: int = 10, seed: int = 0) -> list[str]:
    """One representative id per cluster: the member closest to its centroid."""
    if k > emb.n:
        raise ValueError(f"k={k} exceeds sample count {emb.n}")
    centroids, labels, _ = kmeans_cluster(emb.matrix, k, seed)
    chosen: list[str] = []
    for j in range(k):
        members = np.flatnonzero(labels == j)
        if len(members) == 0:
            continue
        dists = np.linalg.norm(emb.matrix[members] - centroids[j], axis=1)
        chosen.append(emb.ids[members[int(np.argmin(dists))]])
    return chosen


def load_embedding_dir(path) -> EmbeddingSet:
    """Read a directory of <id>.f32 row-major float32 vectors with <id>.json shape sidecars."""
    root = Path(path)
    rows = []
    ids = []
    for data_path in sorted(root.glob("*.f32")):
        meta = json.loads(data_path.with_suffix(".json").read_text())
        shape = meta["shape"]
        arr = np.frombuffer(data_path.read_bytes(), dtype=np.float32).reshape(shape)
        if arr.ndim != 1:
            raise ValueError(f"{data_path.name}: expected a 1-D embedding, got shape {shape}")
        rows.append(arr.astype(np.float64))
        ids.append(data_path.stem)
    if not rows:
        raise ValueError(f"no .f32 embeddings found in {root}")
    return EmbeddingSet(np.stack(rows), tuple(ids))


def save_embedding_dir(path, emb: EmbeddingSet) -> None:
    root = Path(path)
    root.mkdir(parents=True, exist_ok=True)
    for row, clip_id in zip(emb.matrix, emb.ids):
        (root / f"{clip_id}.f32").write_bytes(row.astype(np.float32).tobytes())
        (root / f"{clip_id}.json").write_text(
            json.dumps({"shape": [int(row.shape[0])], "dtype": "float32"})
        )


def evaluation_report(
    ref: EmbeddingSet,
    gen: EmbeddingSet,
    k: int = DEFAULT_KNN,
    seed: int = 0,
    ref_probs: list[ProbDistribution] | None = None,
    gen_probs: list[ProbDistribution] | None = None,
) -> dict:
    """Full metric suite as a JSON-serializable report.

    Paired similarity requires id-aligned sets; KL additionally needs the
    classifier distributions. Inapplicable metrics are reported as null.
    """
    report = {
        "fad": fad(ref, gen),
        "precision": manifold_precision(ref, gen, k),
        "recall": manifold_recall(ref, gen, k),
        "similarity": None,
        "kl": None,
        "n_ref": ref.n,
        "n_gen": gen.n,
        "k": k,
        "seed": seed,
    }
    if ref.n == gen.n and ref.ids == gen.ids:
        report["similarity"] = paired_similarity(ref, gen)
    if ref_probs is not None and gen_probs is not None:
        report["kl"] = paired_kl(ref_probs, gen_probs)
    return report
