"""Point clouds on self-affine attractors and their empirical dimensions.

Points are sampled as ``f_{x_1} o ... o f_{x_L}(0)`` for ``mu``-typical words,
projected onto subspaces, and fed to box-counting and local-dimension
estimators.
"""

from __future__ import annotations

import csv
import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.spatial import cKDTree

from ._parallel import pmap
from .ergodic import rng_for, sample_block
from .errors import InvalidInputError
from .pressure import proj_affinity_dim
from .words import MatrixTuple

TRUNCATION = 1e-12
CHUNK = 1 << 16
ADDRESS_LEN = 16


class DegenerateCloudWarning(UserWarning):
    """All points coincide, so box counting carries no scale information."""


@dataclass(frozen=True, eq=False)
class IFSInstance:
    """Affine maps ``f_i(x) = T_i x + a_i``."""

    tuple: MatrixTuple
    translations: np.ndarray

    def __post_init__(self):
        a = np.array(self.translations, dtype=float)
        if a.ndim == 1 and self.tuple.d == 1:
            a = a[:, None]
        if a.shape != (self.tuple.m, self.tuple.d):
            raise InvalidInputError(f"translations must have shape ({self.tuple.m}, {self.tuple.d}), got {a.shape}")
        if not np.all(np.isfinite(a)):
            raise InvalidInputError("translations must be finite")
        a.setflags(write=False)
        object.__setattr__(self, "translations", a)

    @property
    def bounding_radius(self):
        """``max_i ||a_i|| / (1 - ||T_i||)``: every ``f_i`` maps that ball into itself."""
        return float(np.max(np.linalg.norm(self.translations, axis=1) / (1 - self.tuple.norms)))

    def burn_in(self, tol=TRUNCATION):
        """Smallest ``L`` with ``alpha_+^L R < tol``."""
        R = self.bounding_radius
        if R == 0:
            return 1
        return max(1, int(math.floor(math.log(tol / R) / math.log(self.tuple.alpha_plus))) + 1)


@dataclass
class PointCloud:
    points: np.ndarray
    addresses: np.ndarray | None = None
    radius: float = math.inf
    meta: dict = field(default_factory=dict)

    def __len__(self):
        return self.points.shape[0]

    def project(self, W):
        """Coordinates of ``P_W x`` in the orthonormal basis of ``W``."""
        return PointCloud(self.points @ W.basis, self.addresses, self.radius, dict(self.meta, projected_dim=W.dim))


def _compose(mats, trans, paths):
    pts = np.zeros((paths.shape[0], mats.shape[1]))
    for t in range(paths.shape[1] - 1, -1, -1):
        x = paths[:, t]
        pts = np.einsum("nij,nj->ni", mats[x], pts) + trans[x]
    return pts


def chaos_game(ifs, mu, N, burn_in=None, seed=0, workers=1, address_len=ADDRESS_LEN):
    """``N`` samples of the coding-map image of ``mu``.

    Point ``r`` is ``f_{x_1} o ... o f_{x_L}(0)`` for a word drawn from ``mu``, so
    it lies within ``alpha_+^L R`` of the image of the infinite path. Chunk ``c``
    of ``2^16`` points uses the generator keyed ``(seed, c)``.
    """
    if mu.m != ifs.tuple.m:
        raise InvalidInputError("measure alphabet and tuple size differ")
    L = ifs.burn_in() if burn_in is None else int(burn_in)
    mats, trans = ifs.tuple.matrices, ifs.translations
    starts = list(range(0, N, CHUNK))

    def run(c):
        count = min(CHUNK, N - starts[c])
        paths = sample_block(mu, L, count, rng_for(seed, c))
        return _compose(mats, trans, paths), paths[:, :address_len].astype(np.int8)

    parts = pmap(run, range(len(starts)), workers)
    pts = np.concatenate([p for p, _ in parts]) if parts else np.zeros((0, ifs.tuple.d))
    addr = np.concatenate([a for _, a in parts]) if parts else None
    return PointCloud(pts, addr, ifs.bounding_radius, {"burn_in": L, "seed": seed})


def _extent(points):
    return float(np.max(points.max(axis=0) - points.min(axis=0))) if len(points) else 0.0


def default_scales(extent, steps=8, coarse=8, fine=2048):
    return np.geomspace(extent / coarse, extent / fine, steps)


def box_counts(points, scales):
    """Occupied grid cells at each box size, using integer cell keys."""
    pts = np.asarray(points, dtype=float)
    if pts.ndim == 1:
        pts = pts[:, None]
    lo = pts.min(axis=0)
    out = []
    for eps in scales:
        cells = np.floor((pts - lo) / eps).astype(np.int64)
        dims = cells.max(axis=0) + 1
        if np.prod(dims.astype(float)) < 2**62:
            keys = np.ravel_multi_index(cells.T, dims)
            out.append(int(np.unique(keys).size))
        else:
            out.append(int(np.unique(cells, axis=0).shape[0]))
    return np.array(out)


@dataclass
class BoxCountResult:
    estimate: float
    r_squared: float
    scales: np.ndarray
    counts: np.ndarray

    def as_dict(self):
        return {
            "estimate": self.estimate,
            "r_squared": self.r_squared,
            "scales": list(map(float, self.scales)),
            "counts": list(map(int, self.counts)),
        }


def box_count_dim(points, scales=None, window=None):
    """Least-squares slope of ``log N(eps)`` against ``log(1/eps)``.

    Default box sizes run geometrically from ``extent/8`` to ``extent/2048``
    where ``extent`` is the largest coordinate range of the cloud. ``window`` is
    an optional ``(first, stop)`` slice into the scales used for the fit.
    """
    pts = np.asarray(points.points if isinstance(points, PointCloud) else points, dtype=float)
    if pts.ndim == 1:
        pts = pts[:, None]
    extent = _extent(pts)
    if extent == 0:
        warnings.warn("all points coincide; box dimension reported as 0", DegenerateCloudWarning, stacklevel=2)
        sc = np.asarray(scales if scales is not None else [1.0], dtype=float)
        return BoxCountResult(0.0, 1.0, sc, np.ones(sc.size, dtype=int))
    scales = default_scales(extent) if scales is None else np.asarray(scales, dtype=float)
    counts = box_counts(pts, scales)
    sl = slice(*window) if window is not None else slice(None)
    x = np.log(1 / scales[sl])
    y = np.log(counts[sl])
    slope, icpt = np.polyfit(x, y, 1)
    resid = y - (slope * x + icpt)
    ss = float(((y - y.mean()) ** 2).sum())
    r2 = 1.0 - float((resid**2).sum()) / ss if ss > 0 else 1.0
    return BoxCountResult(float(slope), r2, scales, counts)


def random_translations(m, d, radius, rng):
    """``m`` points uniform in the ball of the given radius in ``R^d``."""
    g = rng.normal(size=(m, d))
    g /= np.linalg.norm(g, axis=1, keepdims=True)
    r = radius * rng.random(m) ** (1.0 / d)
    return g * r[:, None]


def projected_dim_experiment(T, W, mu, trials=10, N=10**6, seed=0, radius=1.0, cfg=None, workers=1, scales=None):
    """Box dimension of ``P_W`` applied to attractors with random translations.

    Trial ``t`` draws translations from the generator keyed ``(seed, t)`` and
    samples its cloud with base seed ``seed + 1 + t``. The result carries the
    pressure-based prediction and whether the tuple meets the norm condition
    ``||T_i|| + ||T_j|| < 1`` behind it.
    """
    pred = proj_affinity_dim(T, W, cfg)
    rows = []
    for t in range(trials):
        a = random_translations(T.m, T.d, radius, rng_for(seed, t))
        cloud = chaos_game(IFSInstance(T, a), mu, N, seed=seed + 1 + t, workers=workers)
        box = box_count_dim(cloud.project(W), scales)
        rows.append({"trial": t, "translations": a.tolist(), "box_dim": box.estimate, "r_squared": box.r_squared, "scales": box.scales.tolist(), "counts": box.counts.tolist()})
    dims = np.array([r["box_dim"] for r in rows])
    return {
        "prediction": pred.as_dict(),
        "rows": rows,
        "mean": float(dims.mean()) if trials else math.nan,
        "spread": float(dims.max() - dims.min()) if trials else math.nan,
        "hypotheses_met": bool(T.transversal),
        "note": None if T.transversal else "norm condition ||T_i|| + ||T_j|| < 1 fails; the almost-sure prediction may not apply",
    }


@dataclass
class LocalDimResult:
    slopes: np.ndarray
    centers: np.ndarray
    radii: np.ndarray
    skipped: int
    histogram: dict

    def as_dict(self):
        return {
            "slopes": self.slopes.tolist(),
            "centers": self.centers.tolist(),
            "radii": self.radii.tolist(),
            "skipped": self.skipped,
            "histogram": self.histogram,
        }


def _ball_counts(pts, centers, radii):
    if pts.shape[1] == 1:
        s = np.sort(pts[:, 0])
        c = centers[:, 0][:, None]
        return np.searchsorted(s, c + radii[None, :], side="right") - np.searchsorted(s, c - radii[None, :], side="left")
    tree = cKDTree(pts)
    return np.column_stack([tree.query_ball_point(centers, r, return_length=True) for r in radii])


def local_dim_estimate(points, n_centers=200, radii=None, seed=0, bins=40):
    """Per-center slopes of ``log mass(B(x, r))`` against ``log r``.

    Centers are cloud points drawn with the generator keyed ``(seed, 0)``. A
    center whose finest ball holds only itself is skipped and counted.
    """
    pts = np.asarray(points.points if isinstance(points, PointCloud) else points, dtype=float)
    if pts.ndim == 1:
        pts = pts[:, None]
    N = pts.shape[0]
    extent = _extent(pts)
    if radii is None:
        radii = np.geomspace(extent / 16, extent / 1024, 7) if extent > 0 else np.array([1.0, 0.5])
    radii = np.asarray(radii, dtype=float)
    idx = rng_for(seed, 0).choice(N, size=min(n_centers, N), replace=False)
    centers = pts[idx]
    counts = _ball_counts(pts, centers, radii)
    keep = counts[:, np.argmin(radii)] >= 2
    x = np.log(radii)
    y = np.log(counts[keep] / N)
    slopes = np.polyfit(x, y.T, 1)[0] if y.size else np.zeros(0)
    hi = max(1.0, float(slopes.max()) if slopes.size else 1.0)
    hc, he = np.histogram(slopes, bins=bins, range=(0.0, hi))
    return LocalDimResult(np.atleast_1d(slopes), centers[keep], radii, int((~keep).sum()), {"edges": he.tolist(), "counts": hc.tolist()})


def write_cloud_csv(cloud, path, max_rows=None):
    """One point per row: coordinates, then the address prefix (1-based symbols)."""
    pts = cloud.points if max_rows is None else cloud.points[:max_rows]
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        k = pts.shape[1]
        w.writerow([f"x{i + 1}" for i in range(k)] + (["address"] if cloud.addresses is not None else []))
        for r, p in enumerate(pts):
            row = [repr(float(v)) for v in p]
            if cloud.addresses is not None:
                row.append(" ".join(str(int(a) + 1) for a in cloud.addresses[r]))
            w.writerow(row)


__all__ = [
    "IFSInstance",
    "PointCloud",
    "BoxCountResult",
    "LocalDimResult",
    "DegenerateCloudWarning",
    "chaos_game",
    "box_counts",
    "box_count_dim",
    "default_scales",
    "projected_dim_experiment",
    "local_dim_estimate",
    "random_translations",
    "write_cloud_csv",
]
