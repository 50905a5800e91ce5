"""Online coreset by ring/group importance sampling over a consistent assignment.

Each arriving item is assigned irrevocably to a bicriteria center. Its
assignment cost puts it in a ring (a power-of-two cost band, per center) and
its position inside that ring puts it in a group; the item is then kept with
probability inversely proportional to the size of its group so far, and
reweighted by the inverse probability. Samples are never removed, so the
samples that arrived by time t form a coreset of the first t items.

Items at distance zero from their center are not sampled: they are stored
exactly as run-length tallies on the center.

Every stored record covers a contiguous range of timestamps
``[ts_lo, ts_hi]`` with its weight spread uniformly over that range. Raw
samples cover a single timestamp; zero-cost tallies cover runs. Restricting
a record to a time range keeps the matching fraction of its weight, which is
what lets the sliding-window structure cut blocks at arbitrary timestamps.
"""
from __future__ import annotations

import csv
import math
from collections import defaultdict
from dataclasses import dataclass, field

import numpy as np

from .metric import StreamParams, WeightedSet
from .meyerson import MeyersonConfig, MultMeyerson

ZERO_RING = None


def ring_index(cost_z: float):
    """floor(log2 cost) for a positive cost, ``ZERO_RING`` (None) for zero."""
    if cost_z < 0:
        raise ValueError("cost must be nonnegative")
    if cost_z == 0:
        return ZERO_RING
    m, e = math.frexp(cost_z)  # cost = m * 2**e with 0.5 <= m < 1
    return e - 1


def group_index(r: int) -> int:
    """Group of the r-th item of a ring: 0 for the first, else ceil(log2 r)."""
    if r < 1:
        raise ValueError("ring position starts at 1")
    return 0 if r == 1 else (r - 1).bit_length()


def _log2_inv_eps(epsilon: float) -> float:
    # clamped at 1 so epsilon >= 1/2 behaves like 1/2
    return max(1.0, math.log2(1 / epsilon))


def gamma(k: int, epsilon: float, z: int, alpha: float, beta: float, centroid_log: float,
          horizon: int, c_gamma: float = 1.0) -> float:
    """Oversampling factor of the ring sampler.

    C max(α², α^z) β / min(ε², ε^z) · log²(1/ε) · (k·centroid_log + log log(1/ε) + log N) · log²(1/ε)
    """
    if not 0 < epsilon < 1:
        raise ValueError("epsilon must lie in (0, 1)")
    l = _log2_inv_eps(epsilon)
    lead = c_gamma * max(alpha**2, alpha**z) * beta / min(epsilon**2, epsilon**z)
    inner = k * centroid_log + math.log2(l) + math.log2(max(2, horizon))
    return lead * l**2 * inner * l**2


@dataclass
class CoresetConfig:
    """Configuration of :class:`OnlineCoreset`.

    ``target_samples`` replaces the theoretical γ (astronomical at desk scale)
    by one giving a per-group sampling numerator of target_samples / log N.
    ``meyerson`` holds overrides forwarded to :class:`MeyersonConfig`.
    """

    params: StreamParams
    c_gamma: float = 1.0
    centroid_log: float | None = None
    exact_mode: bool = False
    target_samples: float | None = None
    alpha: float | None = None
    beta: float | None = None
    meyerson: dict = field(default_factory=dict)

    def meyerson_config(self, dim: int) -> MeyersonConfig:
        p = self.params
        return MeyersonConfig(k=p.k, dim=dim, z=p.z, aspect_bound=p.aspect_bound, horizon=p.horizon,
                              delta=p.delta, metric=p.metric, **self.meyerson)

    def gamma(self, dim: int) -> float:
        p = self.params
        log_n = p.log_n
        if self.target_samples is not None:
            return self.target_samples / (4 * log_n**2)
        alpha = 2.0 ** (p.z + 7) if self.alpha is None else self.alpha
        if self.beta is None:
            beta = self.meyerson_config(dim).beta_cap / p.k
        else:
            beta = self.beta
        centroid_log = self.centroid_log
        if centroid_log is None:
            centroid_log = dim * math.log2(2 * p.aspect_bound * p.horizon / p.epsilon)
        return gamma(p.k, p.epsilon, p.z, alpha, beta, centroid_log, p.horizon, self.c_gamma)

    def numerator(self, dim: int) -> float:
        """4 γ log N, floored at 1 so the first item of every group is always kept."""
        return max(1.0, 4 * self.gamma(dim) * self.params.log_n)


class GroupStats:
    """Exact running counts and costs per ring, group and center."""

    def __init__(self):
        self.ring_count = defaultdict(int)      # (center, j) -> items
        self.ring_cost = defaultdict(float)     # (center, j) -> weighted cost
        self.ring_weight = defaultdict(float)   # (center, j) -> weight
        self.group_count = defaultdict(int)     # (j, b) -> items
        self.group_cost = defaultdict(float)    # (j, b) -> weighted cost
        self.center_count = defaultdict(int)
        self.center_cost = defaultdict(float)
        self.center_weight = defaultdict(float)
        self.zero_weight = defaultdict(float)   # center -> weight of zero-cost items

    def group(self, j, b) -> tuple[int, float]:
        key = (j, b)
        if key not in self.group_count:
            return 0, 0.0
        return self.group_count[key], self.group_cost[key]


class OnlineCoreset:
    """Ring-sampling online coreset (one bicriteria sketch + importance sampling).

    ``ingest`` accepts weighted items; a sampled item keeps its carried weight
    divided by its sampling probability.
    """

    def __init__(self, config: CoresetConfig, dim: int, rng: np.random.Generator,
                 check: bool = False, keep_log: bool = True):
        self.config = config
        self.dim = dim
        self.rng = rng
        self.check = check
        self.bicriteria = MultMeyerson(config.meyerson_config(dim), rng, keep_log=keep_log, check=check)
        self.stats = GroupStats()
        self.numerator = config.numerator(dim)
        self.p_floor = 1.0 / float(config.params.horizon) ** 2
        self.time = 0
        self.n_items = 0
        self.last_timestamp = None
        self._direction = None
        # record columns
        self._coords: list[np.ndarray] = []
        self._weight: list[float] = []
        self._lo: list[int] = []
        self._hi: list[int] = []
        self._pos_lo: list[int] = []
        self._pos_hi: list[int] = []
        self._pid: list[int] = []
        self._center: list[int] = []
        self._ring: list = []
        self._group: list = []
        self._p: list[float] = []
        self._r: list[int] = []
        self._cost: list[float] = []
        self._zero_tail: dict[int, int] = {}
        self._group_sampled = defaultdict(int)

    # ------------------------------------------------------------------ ingest
    def ingest(self, x, weight: float = 1.0, timestamp: int | None = None, point_id: int | None = None):
        ts = None if timestamp is None else [timestamp]
        ids = None if point_id is None else [point_id]
        n_before = len(self._weight)
        self.ingest_many(np.asarray(x, dtype=float).reshape(1, -1), [weight], ts, ids)
        return len(self._weight) > n_before

    def ingest_many(self, X, weights=None, timestamps=None, ids=None, spans_lo=None) -> None:
        """Feed items in arrival order.

        ``timestamps`` default to the arrival index. ``spans_lo`` gives the
        low end of each item's timestamp range (defaults to the timestamp).
        """
        X = np.atleast_2d(np.asarray(X, dtype=float))
        n = X.shape[0]
        if n == 0:
            return
        W = np.ones(n) if weights is None else np.asarray(weights, dtype=float)
        if np.any(W <= 0):
            raise ValueError("weights must be positive")
        hi = (np.arange(self.time + 1, self.time + n + 1) if timestamps is None
              else np.asarray(timestamps, dtype=np.int64))
        lo = hi if spans_lo is None else np.asarray(spans_lo, dtype=np.int64)
        pid = hi if ids is None else np.asarray(ids, dtype=np.int64)
        centers, dz = self.bicriteria.ingest_many(X, W, pid)
        U = self.rng.random(n)
        self._ring_sample(X, W, lo, hi, pid, centers, dz, U)

    def _ring_sample(self, X, W, lo, hi, pid, centers, dz, U):
        st = self.stats
        exact = self.config.exact_mode
        num, floor = self.numerator, self.p_floor
        check = self.check
        W_l, lo_l, hi_l, pid_l, c_l, dz_l, U_l = (W.tolist(), lo.tolist(), hi.tolist(), pid.tolist(),
                                                  centers.tolist(), dz.tolist(), U.tolist())
        for q in range(len(W_l)):
            w, c, d = W_l[q], c_l[q], dz_l[q]
            t_lo, t_hi = lo_l[q], hi_l[q]
            self.time += 1
            self.n_items += 1
            if check:
                self._check_order(t_lo, t_hi)
            self.last_timestamp = t_hi
            item_cost = w * d
            st.center_count[c] += 1
            st.center_cost[c] += item_cost
            st.center_weight[c] += w
            if item_cost == 0.0:
                st.zero_weight[c] += w
                self._add_zero(X[q], w, t_lo, t_hi, pid_l[q], c)
                continue
            j = math.frexp(item_cost)[1] - 1
            rkey = (c, j)
            r_ring = st.ring_count[rkey] + 1
            st.ring_count[rkey] = r_ring
            st.ring_cost[rkey] += item_cost
            st.ring_weight[rkey] += w
            b = 0 if r_ring == 1 else (r_ring - 1).bit_length()
            gkey = (j, b)
            if check:
                before = (st.group_count[gkey], st.group_cost[gkey])
            r_t = st.group_count[gkey] + 1
            st.group_count[gkey] = r_t
            st.group_cost[gkey] += item_cost
            if check:
                assert st.group_count[gkey] == before[0] + 1 and st.group_cost[gkey] >= before[1], "group stats decreased"
            if exact:
                p = 1.0
            else:
                p = num / r_t
                p = 1.0 if p >= 1.0 else (floor if p < floor else p)
            if U_l[q] < p:
                self._append(X[q], w / p, t_lo, t_hi, pid_l[q], c, j, b, p, r_t, item_cost)
                self._group_sampled[gkey] += 1

    def _check_order(self, t_lo, t_hi):
        assert t_lo <= t_hi, "span must be ordered"
        last = self.last_timestamp
        if last is None:
            return
        step = 1 if t_hi > last else -1
        if self._direction is None:
            self._direction = step
        assert t_hi != last and step == self._direction, "timestamps must be strictly monotone"

    def _append(self, x, weight, t_lo, t_hi, pid, center, j, b, p, r_t, item_cost):
        self._coords.append(np.array(x, dtype=float))
        self._weight.append(weight)
        self._lo.append(t_lo)
        self._hi.append(t_hi)
        self._pos_lo.append(self.time)
        self._pos_hi.append(self.time)
        self._pid.append(pid)
        self._center.append(center)
        self._ring.append(j)
        self._group.append(b)
        self._p.append(p)
        self._r.append(r_t)
        self._cost.append(item_cost)

    def _add_zero(self, x, w, t_lo, t_hi, pid, center):
        # exact mode keeps one record per item, so costs sum in the same terms as the raw stream
        idx = None if self.config.exact_mode else self._zero_tail.get(center)
        if idx is not None and self._pos_hi[idx] == self.time - 1:
            n_pos = self._pos_hi[idx] - self._pos_lo[idx] + 1
            span = self._hi[idx] - self._lo[idx] + 1
            # equal weight per position and per timestamp keeps both prorations exact
            if w * n_pos == self._weight[idx] and w * span == self._weight[idx] * (t_hi - t_lo + 1):
                if t_lo == self._hi[idx] + 1:
                    self._hi[idx] = t_hi
                elif t_hi == self._lo[idx] - 1:
                    self._lo[idx] = t_lo
                else:
                    idx = None
                if idx is not None:
                    self._weight[idx] += w
                    self._pos_hi[idx] = self.time
                    return
        self._append(x, w, t_lo, t_hi, pid, center, ZERO_RING, None, 1.0, 0, 0.0)
        self._zero_tail[center] = len(self._weight) - 1

    # ----------------------------------------------------------------- queries
    @property
    def num_records(self) -> int:
        return len(self._weight)

    @property
    def num_samples(self) -> int:
        """Records that came from sampling (zero-cost tallies excluded)."""
        return sum(1 for j in self._ring if j is not ZERO_RING)

    def group_stats(self, j, b) -> tuple[int, float]:
        return self.stats.group(j, b)

    def sampled_per_group(self) -> dict:
        return dict(self._group_sampled)

    def records(self) -> dict[str, np.ndarray]:
        """All stored records as columns."""
        n = len(self._weight)
        return {
            "coords": np.stack(self._coords) if n else np.zeros((0, self.dim)),
            "weight": np.asarray(self._weight, dtype=float),
            "ts_lo": np.asarray(self._lo, dtype=np.int64),
            "ts_hi": np.asarray(self._hi, dtype=np.int64),
            "pos_lo": np.asarray(self._pos_lo, dtype=np.int64),
            "pos_hi": np.asarray(self._pos_hi, dtype=np.int64),
            "point_id": np.asarray(self._pid, dtype=np.int64),
            "center_id": np.asarray(self._center, dtype=np.int64),
            "ring": np.array([np.nan if j is None else j for j in self._ring]),
            "group": np.array([np.nan if b is None else b for b in self._group]),
            "p": np.asarray(self._p, dtype=float),
            "r": np.asarray(self._r, dtype=np.int64),
            "cost": np.asarray(self._cost, dtype=float),
        }

    def extract(self, t: int | None = None, substitute_centers: bool = False) -> WeightedSet:
        """Weighted coreset of the first ``t`` arrivals (all arrivals by default)."""
        if t is None:
            t = self.time
        if not 0 <= t <= self.time:
            raise ValueError(f"t={t} outside [0, {self.time}]")
        if substitute_centers:
            if t != self.time:
                raise ValueError("center substitution is only available for the full stream")
            return self._extract_substituted()
        rec = self.records()
        if t == 0 or len(rec["weight"]) == 0:
            return WeightedSet.empty(self.dim)
        plo, phi = rec["pos_lo"], rec["pos_hi"]
        keep = plo <= t
        n_pos = phi - plo + 1
        n_in = np.clip(t - plo + 1, 0, n_pos)
        weights = rec["weight"] * (n_in / n_pos)
        # partial runs only arise on forward streams, where the run grows upward in time
        per_pos = (rec["ts_hi"] - rec["ts_lo"] + 1) // n_pos
        ts = np.where(n_in == n_pos, rec["ts_hi"], rec["ts_lo"] + n_in * per_pos - 1)
        return WeightedSet(rec["coords"][keep], weights[keep], ts[keep], rec["point_id"][keep])

    def frozen(self) -> "FrozenCoreset":
        rec = self.records()
        return FrozenCoreset(rec["coords"], rec["weight"], rec["ts_lo"], rec["ts_hi"], rec["point_id"])

    def _extract_substituted(self) -> WeightedSet:
        st = self.stats
        p = self.config.params
        eps, z = p.epsilon, p.z
        n_centers = max(1, self.bicriteria.num_centers)
        rings_by_j = defaultdict(float)
        for (c, j), v in st.ring_cost.items():
            rings_by_j[j] += v
        outer_cost = {}
        substituted = set()
        for c in st.center_count:
            kappa = st.center_cost[c] / st.center_weight[c]
            if kappa == 0:
                continue
            inner_cut = (eps / z) ** (2 * z) * kappa
            outer_cut = (z / eps) ** (2 * z) * kappa
            oc = 0.0
            for (cc, j) in [key for key in st.ring_cost if key[0] == c]:
                if 2.0 ** (j + 1) <= inner_cut:
                    substituted.add((c, j))
                elif 2.0**j >= outer_cut:
                    oc += st.ring_cost[(c, j)]
                if st.ring_cost[(c, j)] < 2 * (eps / (4 * z)) ** z * rings_by_j[j] / n_centers:
                    substituted.add((c, j))
            outer_cost[c] = oc
        total_outer = sum(outer_cost.values())
        for c, oc in outer_cost.items():
            if 0 < oc < 2 * (eps / (4 * z)) ** z * total_outer / n_centers:
                kappa = st.center_cost[c] / st.center_weight[c]
                for (cc, j) in [key for key in st.ring_cost if key[0] == c]:
                    if 2.0**j >= (z / eps) ** (2 * z) * kappa:
                        substituted.add((c, j))
        base = self.extract()
        rec = self.records()
        drop = np.array([(c, j) in substituted for c, j in zip(rec["center_id"].tolist(), self._ring)], dtype=bool)
        kept = base.select(~drop)
        extra = defaultdict(float)
        for key in substituted:
            extra[key[0]] += st.ring_weight[key]
        if not extra:
            return kept
        cids = sorted(extra)
        centers = np.stack([self.bicriteria.center(c) for c in cids])
        add = WeightedSet(centers, np.array([extra[c] for c in cids]),
                          np.full(len(cids), self.time, dtype=np.int64), -1 - np.asarray(cids, dtype=np.int64))
        return WeightedSet.concat([kept, add], self.dim)

    def export_csv(self, path) -> None:
        rec = self.records()
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["point_id", "timestamp", "weight", "center_id", "j", "b", "p_x"])
            for i in range(len(rec["weight"])):
                j = "" if np.isnan(rec["ring"][i]) else int(rec["ring"][i])
                b = "" if np.isnan(rec["group"][i]) else int(rec["group"][i])
                w.writerow([int(rec["point_id"][i]), int(rec["ts_hi"][i]), repr(float(rec["weight"][i])),
                            int(rec["center_id"][i]), j, b, repr(float(rec["p"][i]))])


def ringsample_ingest(coreset: OnlineCoreset, x, rng=None, weight: float = 1.0, timestamp=None) -> bool:
    """Ingest one point; returns True when it produced a new stored record."""
    return coreset.ingest(x, weight, timestamp)


def extract_coreset(coreset: OnlineCoreset, t: int | None = None, substitute_centers: bool = False) -> WeightedSet:
    return coreset.extract(t, substitute_centers)


@dataclass
class FrozenCoreset:
    """Immutable record table of a finished online coreset.

    Each record spreads ``weight`` uniformly over timestamps ``ts_lo..ts_hi``.
    """

    coords: np.ndarray
    weight: np.ndarray
    ts_lo: np.ndarray
    ts_hi: np.ndarray
    point_id: np.ndarray

    def __len__(self) -> int:
        return len(self.weight)

    @property
    def span(self) -> tuple[int, int]:
        return int(self.ts_lo.min()), int(self.ts_hi.max())

    def restrict(self, t_min: int, t_max: int | None = None) -> WeightedSet:
        """Records restricted to timestamps in [t_min, t_max], weights prorated."""
        lo, hi = self.ts_lo, self.ts_hi
        a = np.maximum(lo, t_min)
        b = hi if t_max is None else np.minimum(hi, t_max)
        inside = b >= a
        frac = np.where(inside, (b - a + 1) / (hi - lo + 1), 0.0)
        keep = inside
        return WeightedSet(self.coords[keep], (self.weight * frac)[keep], b[keep], self.point_id[keep])

    def to_json(self) -> dict:
        return {
            "coords": self.coords.tolist(),
            "weight": self.weight.tolist(),
            "ts_lo": self.ts_lo.tolist(),
            "ts_hi": self.ts_hi.tolist(),
            "point_id": self.point_id.tolist(),
        }

    @classmethod
    def from_json(cls, d: dict, dim: int) -> "FrozenCoreset":
        coords = np.asarray(d["coords"], dtype=float).reshape(-1, dim)
        return cls(coords, np.asarray(d["weight"], dtype=float), np.asarray(d["ts_lo"], dtype=np.int64),
                   np.asarray(d["ts_hi"], dtype=np.int64), np.asarray(d["point_id"], dtype=np.int64))
