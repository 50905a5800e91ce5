"""Stream generators and dataset loaders for the experiments.

A :class:`DatasetSpec` describes an ordered stream: optional prepended
points (which the window later expires), then the body, then optional
appended points. ``window`` is the length of the true dataset at the end of
the stream.
"""
from __future__ import annotations

import json
import os
from dataclasses import dataclass, field

import numpy as np

SKIN_ENV = "SWCORESET_SKIN_PATH"
SKIN_ROWS = 245_057
KINDS = ("gaussian_mixture", "skin_csv", "noisy_skin", "lowerbound")


@dataclass
class Component:
    mean: list
    stddev: float
    count: int

    def __post_init__(self):
        self.mean = [float(v) for v in self.mean]
        if self.count < 0:
            raise ValueError("component count must be nonnegative")
        if not self.stddev > 0:
            raise ValueError("component stddev must be positive")


@dataclass
class DatasetSpec:
    kind: str = "gaussian_mixture"
    components: list = field(default_factory=list)
    prepend: list = field(default_factory=list)
    append: list = field(default_factory=list)
    window: int | None = None
    shuffle: bool = True
    path: str | None = None
    d_prime: int = 1
    gamma_lb: int = 1
    tau: int = 100
    max_length: int = 10_000_000

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown dataset kind {self.kind!r}")
        self.components = [c if isinstance(c, Component) else Component(**c) for c in self.components]
        self.prepend = [c if isinstance(c, Component) else Component(**c) for c in self.prepend]
        self.append = [c if isinstance(c, Component) else Component(**c) for c in self.append]
        if self.kind == "lowerbound" and (self.tau < 2 or self.d_prime < 1 or self.gamma_lb < 1):
            raise ValueError("lowerbound needs d_prime >= 1, gamma_lb >= 1, tau >= 2")
        if self.window is not None and self.window < 1:
            raise ValueError("window must be positive")

    @classmethod
    def from_json(cls, d) -> "DatasetSpec":
        if isinstance(d, str):
            with open(d) as fh:
                d = json.load(fh)
        return cls(**d)

    def to_json(self) -> dict:
        out = dict(self.__dict__)
        out["components"] = [c.__dict__ for c in self.components]
        out["prepend"] = [c.__dict__ for c in self.prepend]
        out["append"] = [c.__dict__ for c in self.append]
        return out


def _draw(components, rng, dim=None):
    parts = []
    for c in components:
        if dim is not None and len(c.mean) != dim:
            raise ValueError(f"component mean has dimension {len(c.mean)}, expected {dim}")
        parts.append(rng.normal(c.mean, c.stddev, size=(c.count, len(c.mean))))
    return parts


def gen_gaussian_mixture(spec: DatasetSpec, rng: np.random.Generator) -> np.ndarray:
    """Prepended points first, then the body, then appended points.

    Body components are emitted in order, each as a consecutive run, unless
    ``spec.shuffle`` interleaves them. Prepends and appends keep their order.
    """
    all_c = spec.prepend + spec.components + spec.append
    if not all_c:
        raise ValueError("spec has no components")
    dim = len(all_c[0].mean)
    head = _draw(spec.prepend, rng, dim)
    body = _draw(spec.components, rng, dim)
    body = np.concatenate(body) if body else np.zeros((0, dim))
    if spec.shuffle and len(body):
        body = body[rng.permutation(len(body))]
    tail = _draw(spec.append, rng, dim)
    return np.concatenate(head + [body] + tail)


def outlier_synthetic_spec(scale: float = 1.0) -> DatasetSpec:
    """Two expired outliers, two large interleaved Gaussian clusters, one far final point.

    ``scale`` shrinks the cluster sizes (0.1 gives a 20,003-point stream).
    """
    n = int(round(100_000 * scale))
    return DatasetSpec(
        kind="gaussian_mixture",
        components=[Component([-10, 10], 2.75, n), Component([10, -10], 2.75, n)],
        prepend=[Component([-100_000, 100_000], 2.75, 1), Component([-100_000, -100_000], 2.75, 1)],
        append=[Component([100_000, 100_000], 2.75, 1)],
        window=2 * n + 1,
    )


def skin_path(path=None):
    path = path or os.environ.get(SKIN_ENV)
    return path if path and os.path.exists(path) else None


def load_skin_dataset(path) -> np.ndarray:
    """UCI Skin Segmentation file, standardized to zero mean and unit variance per column."""
    with open(path) as fh:
        sample = fh.readline()
    delim = "," if "," in sample else None
    try:
        data = np.loadtxt(path, delimiter=delim, ndmin=2)
    except ValueError as exc:
        raise ValueError(f"{path}: could not parse numeric rows") from exc
    if data.shape[1] != 4:
        raise ValueError(f"{path}: expected 4 columns, found {data.shape[1]}")
    mu = data.mean(axis=0)
    sd = data.std(axis=0)
    sd[sd == 0] = 1.0
    return (data - mu) / sd


def build_noisy_skin_stream(points: np.ndarray, rng: np.random.Generator) -> tuple[np.ndarray, int]:
    """Two expired prepends, then the data, then 201 planted points. Returns (stream, window)."""
    points = np.asarray(points, dtype=float)
    extra = np.concatenate([
        rng.normal([-10, 10, 0, 0], 1.0, size=(100, 4)),
        rng.normal([10, -10, 0, 0], 1.0, size=(100, 4)),
        rng.normal([500, 500, 0, 0], 1.0, size=(1, 4)),
    ])
    head = np.stack([rng.normal([-10, 10, 0, 0], 2.75), rng.normal([-10, -10, 0, 0], 2.75)])
    body = np.concatenate([points, extra])
    return np.concatenate([head, body]), len(body)


def lowerbound_length(d_prime: int, gamma_lb: int, tau: int) -> int:
    return d_prime * sum(tau**i for i in range(gamma_lb))


def gen_lowerbound_stream(d_prime: int, gamma_lb: int, tau: int, max_length: int = 10_000_000):
    """Sparse elementary vectors: instance i repeats each of its d' unit vectors tau**(i-1) times.

    Returns (support, dim): ``support[t]`` is the coordinate index of the
    t-th point's single 1 entry in dimension 2 d' gamma_lb.
    """
    if d_prime < 1 or gamma_lb < 1 or tau < 2:
        raise ValueError("need d_prime >= 1, gamma_lb >= 1, tau >= 2")
    n = lowerbound_length(d_prime, gamma_lb, tau)
    if n > max_length:
        raise ValueError(f"stream length {n} exceeds the budget {max_length}")
    parts = []
    for i in range(gamma_lb):
        base = 2 * i * d_prime
        parts.append(np.repeat(np.arange(base, base + d_prime), tau**i))
    return np.concatenate(parts), 2 * d_prime * gamma_lb


def densify(support: np.ndarray, dim: int) -> np.ndarray:
    X = np.zeros((len(support), dim))
    X[np.arange(len(support)), support] = 1.0
    return X


def build_stream(spec: DatasetSpec, rng: np.random.Generator) -> tuple[np.ndarray, int]:
    """Materialize any spec as (stream, window)."""
    if spec.kind == "gaussian_mixture":
        X = gen_gaussian_mixture(spec, rng)
    elif spec.kind == "lowerbound":
        X = densify(*gen_lowerbound_stream(spec.d_prime, spec.gamma_lb, spec.tau, spec.max_length))
    else:
        path = skin_path(spec.path)
        if path is None:
            raise FileNotFoundError(f"SKIN data not found; pass a path or set {SKIN_ENV}")
        pts = load_skin_dataset(path)
        if spec.kind == "skin_csv":
            X = pts
        else:
            X, window = build_noisy_skin_stream(pts, rng)
            return X, spec.window or window
    return X, spec.window or len(X)
