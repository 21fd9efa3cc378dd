"""Poisson multi-Bernoulli mixture recursion with per-object detection
probability estimation.

The posterior is a Poisson intensity of Beta-Gaussian components (undetected
objects) plus a weighted set of global hypotheses, each a list of Bernoulli
tracks with single Beta-Gaussian densities. A fixed detection probability
mode (classic PMBM, no Beta bookkeeping) shares the whole pipeline and serves
as the reduction oracle.

All posterior values are immutable; predict/update/reduce/estimate are pure
transformations.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.special import betaln

from .assignment import Assignment, CostMatrix, murty_kbest
from .distributions import (
    BetaGaussianComponent,
    BetaParams,
    GaussianComponent,
    beta_mean,
    beta_predict,
    beta_times_a,
    beta_times_one_minus_a,
    gaussian_predict,
    hellinger_distance,
    moment_match_bg_mixture,
)

__all__ = [
    "BetaDetection",
    "FixedDetection",
    "PoissonIntensity",
    "BernoulliTrack",
    "GlobalHypothesis",
    "PmbmPosterior",
    "EstimateSet",
    "FilterConfig",
    "predict",
    "update",
    "update_undetected",
    "first_detection",
    "misdetect_track",
    "detect_track",
    "build_cost_matrix",
    "reduce_posterior",
    "estimate",
    "step",
    "run_fixed_pd_step",
    "snapshot",
]

# log-weights below this are treated as impossible when building cost
# matrices; exp(-690) underflows to ~1e-300 so rankings are unaffected
_LOG_FLOOR = -690.0


@dataclass(frozen=True)
class BetaDetection:
    """Detection probability modeled per object by its Beta marginal."""

    def detect(self, beta: BetaParams) -> tuple[float, BetaParams]:
        return beta_times_a(beta)

    def miss(self, beta: BetaParams) -> tuple[float, BetaParams]:
        return beta_times_one_minus_a(beta)


@dataclass(frozen=True)
class FixedDetection:
    """Known constant detection probability; Beta bookkeeping skipped."""

    p_d: float

    def __post_init__(self):
        if not (0.0 < self.p_d <= 1.0):
            raise ValueError(f"p_d must lie in (0,1], got {self.p_d}")

    def detect(self, beta):
        return self.p_d, beta

    def miss(self, beta):
        return 1.0 - self.p_d, beta


@dataclass(frozen=True)
class PoissonIntensity:
    """Intensity of the undetected-object Poisson process."""

    components: tuple[BetaGaussianComponent, ...] = ()


@dataclass(frozen=True)
class BernoulliTrack:
    """Potentially detected object: existence probability and density.

    assoc_key encodes the full association history (birth event plus one
    miss/detect event per scan); identical keys imply identical densities,
    which is what duplicate-hypothesis merging relies on.
    """

    track_id: tuple
    existence: float
    beta: BetaParams | None
    gaussian: GaussianComponent
    assoc_key: tuple = ()
    log_weight_contrib: float = 0.0


@dataclass(frozen=True)
class GlobalHypothesis:
    log_weight: float
    tracks: tuple[BernoulliTrack, ...] = ()


@dataclass(frozen=True)
class PmbmPosterior:
    poisson: PoissonIntensity = PoissonIntensity()
    hypotheses: tuple[GlobalHypothesis, ...] = (GlobalHypothesis(0.0),)
    time_index: int = 0


@dataclass(frozen=True)
class EstimateSet:
    states: tuple[tuple[tuple, np.ndarray], ...]
    cardinality_count: int
    cardinality_expected: float
    p_d_estimate: float | None


@dataclass(frozen=True)
class FilterConfig:
    """Reduction thresholds and hypothesis budget."""

    k_beta: float = 1.05
    murty_budget: int = 100          # total assignments spread over parents
    max_hypotheses: int = 200
    max_poisson: int = 100
    prune_poisson: float = 1e-5
    prune_track: float = 1e-5
    prune_hypothesis: float = 1e-4
    merge_threshold: float = 0.1     # squared Hellinger
    extract_threshold: float = 0.55
    gate_threshold: float = 13.8155  # chi-square 0.999 quantile, 2 dof


# ---------------------------------------------------------------------------
# prediction


def predict(
    post: PmbmPosterior,
    motion: tuple[np.ndarray, np.ndarray],
    birth: PoissonIntensity,
    p_s: float,
    k_beta: float = 1.0,
    detection=BetaDetection(),
) -> PmbmPosterior:
    """Survival-thinned NCV prediction of both the Poisson and MBM parts."""
    F, Q = motion

    def predict_beta(b):
        if b is None or isinstance(detection, FixedDetection):
            return b
        return beta_predict(b, k_beta)

    comps = [
        BetaGaussianComponent(
            c.weight * p_s, predict_beta(c.beta), gaussian_predict(c.gaussian, F, Q)
        )
        for c in post.poisson.components
    ]
    comps.extend(birth.components)

    # tracks shared between hypotheses stay shared after prediction, which
    # lets update() reuse per-track work across hypotheses
    cache: dict[int, BernoulliTrack] = {}

    def predict_track(tr: BernoulliTrack) -> BernoulliTrack:
        out = cache.get(id(tr))
        if out is None:
            out = BernoulliTrack(
                tr.track_id,
                tr.existence * p_s,
                predict_beta(tr.beta),
                gaussian_predict(tr.gaussian, F, Q),
                tr.assoc_key,
                tr.log_weight_contrib,
            )
            cache[id(tr)] = out
        return out

    hyps = []
    cache_get = cache.get
    for h in post.hypotheses:
        tracks = tuple(
            [cache_get(id(tr)) or predict_track(tr) for tr in h.tracks]
        )
        hyps.append(GlobalHypothesis(h.log_weight, tracks))
    return PmbmPosterior(PoissonIntensity(tuple(comps)), tuple(hyps), post.time_index + 1)


# ---------------------------------------------------------------------------
# single-object updates


def update_undetected(poisson: PoissonIntensity, detection=BetaDetection()) -> PoissonIntensity:
    """Thin the undetected intensity by the per-component miss probability."""
    comps = []
    for c in poisson.components:
        factor, new_beta = detection.miss(c.beta)
        comps.append(BetaGaussianComponent(c.weight * factor, new_beta, c.gaussian))
    return PoissonIntensity(tuple(comps))


def _obs_cache(gaussian: GaussianComponent, Z: np.ndarray, H: np.ndarray, R: np.ndarray):
    """Gate and Kalman-update one Gaussian against every observation at once.

    Returns (mahalanobis, loglik, posterior means, posterior cov); the
    posterior covariance is shared by all observations.
    """
    z_pred = H @ gaussian.mean
    S = H @ gaussian.cov @ H.T + R
    S = 0.5 * (S + S.T)
    V = Z - z_pred                          # (M, obs_dim)
    if S.shape == (2, 2):
        # closed-form 2x2 path; dominates the per-scan cost otherwise
        a, b, c = S[0, 0], S[0, 1], S[1, 1]
        det = a * c - b * b
        if det <= 0.0:
            raise np.linalg.LinAlgError("innovation covariance not positive definite")
        vx, vy = V[:, 0], V[:, 1]
        mahal = (c * vx * vx - 2.0 * b * vx * vy + a * vy * vy) / det
        loglik = -0.5 * mahal - 0.5 * math.log(det) - math.log(2 * math.pi)
        S_inv = np.array([[c, -b], [-b, a]]) / det
        K = gaussian.cov @ H.T @ S_inv       # (dim, 2)
    else:
        L = np.linalg.cholesky(S)
        W = np.linalg.solve(L, V.T)          # whitened innovations
        mahal = (W * W).sum(axis=0)
        loglik = (
            -0.5 * mahal - np.log(np.diag(L)).sum()
            - 0.5 * Z.shape[1] * math.log(2 * math.pi)
        )
        K = np.linalg.solve(S, H @ gaussian.cov).T
    means = gaussian.mean + V @ K.T
    cov = gaussian.cov - K @ (H @ gaussian.cov)
    cov = 0.5 * (cov + cov.T)
    return mahal, loglik, means, cov


def _first_detections(
    poisson: PoissonIntensity,
    Z: np.ndarray,
    obs: tuple[np.ndarray, np.ndarray],
    clutter_density: float,
    detection,
    gate_threshold: float,
    scan: int,
) -> tuple[np.ndarray, list[BernoulliTrack | None]]:
    """First-time update of every observation against the undetected
    intensity; per-component work is shared across observations.

    Returns (log rho_p per observation, new track per observation); the track
    is None when every component is gated out, in which case the observation
    can only be explained as clutter.
    """
    if clutter_density <= 0:
        raise ValueError("clutter density must be positive")
    H, R = obs
    M = Z.shape[0]
    pieces: list[list[BetaGaussianComponent]] = [[] for _ in range(M)]
    for c in poisson.components:
        if c.weight <= 0.0:
            continue
        mahal, loglik, means, cov = _obs_cache(c.gaussian, Z, H, R)
        factor, new_beta = detection.detect(c.beta)
        for m in np.flatnonzero(mahal <= gate_threshold):
            w = c.weight * factor * math.exp(loglik[m])
            pieces[m].append(
                BetaGaussianComponent(w, new_beta, GaussianComponent(means[m], cov))
            )
    log_rho = np.empty(M)
    tracks: list[BernoulliTrack | None] = []
    for m in range(M):
        e = sum(p.weight for p in pieces[m])
        if e <= 0.0:
            log_rho[m] = math.log(clutter_density)
            tracks.append(None)
            continue
        rho = e + clutter_density
        matched = moment_match_bg_mixture(pieces[m])
        log_rho[m] = math.log(rho)
        tracks.append(
            BernoulliTrack(
                track_id=(scan, m),
                existence=e / rho,
                beta=matched.beta,
                gaussian=matched.gaussian,
                assoc_key=(("birth", scan, m),),
                log_weight_contrib=math.log(rho),
            )
        )
    return log_rho, tracks


def first_detection(
    poisson: PoissonIntensity,
    z: np.ndarray,
    obs: tuple[np.ndarray, np.ndarray],
    clutter_density: float,
    detection=BetaDetection(),
    gate_threshold: float = math.inf,
    track_id: tuple = ("new",),
) -> tuple[float, BernoulliTrack | None]:
    """First-time update of one observation against the undetected intensity."""
    Z = np.asarray(z, dtype=float)[None, :]
    log_rho, tracks = _first_detections(
        poisson, Z, obs, clutter_density, detection, gate_threshold, scan=-1
    )
    track = tracks[0]
    if track is not None:
        track = replace(
            track, track_id=track_id, assoc_key=(("birth",) + track_id,)
        )
    return float(log_rho[0]), track


def misdetect_track(
    tr: BernoulliTrack, detection=BetaDetection(), scan: int = -1
) -> tuple[float, BernoulliTrack]:
    """Missed-detection branch: weight factor 1 - r + r * E[1-a]."""
    factor, new_beta = detection.miss(tr.beta)
    r = tr.existence
    denom = 1.0 - r + r * factor
    if denom <= 0.0:
        delta = -math.inf
        new_r = 0.0
    else:
        delta = math.log(denom)
        new_r = r * factor / denom
    new = BernoulliTrack(
        tr.track_id,
        new_r,
        new_beta,
        tr.gaussian,
        tr.assoc_key + (("miss", scan),),
        delta,
    )
    return delta, new


def detect_track(
    tr: BernoulliTrack,
    z: np.ndarray,
    obs: tuple[np.ndarray, np.ndarray],
    detection=BetaDetection(),
    scan: int = -1,
    obs_index: int = -1,
) -> tuple[float, BernoulliTrack]:
    """Detection branch: weight factor r * E[a] * q(z); existence becomes 1."""
    H, R = obs
    Z = np.asarray(z, dtype=float)[None, :]
    factor, new_beta = detection.detect(tr.beta)
    _, loglik, means, cov = _obs_cache(tr.gaussian, Z, H, R)
    if tr.existence <= 0.0 or factor <= 0.0:
        delta = -math.inf
    else:
        delta = math.log(tr.existence) + math.log(factor) + loglik[0]
    new = replace(
        tr,
        existence=1.0,
        beta=new_beta,
        gaussian=GaussianComponent(means[0], cov),
        assoc_key=tr.assoc_key + (("detect", scan, obs_index),),
        log_weight_contrib=delta,
    )
    return delta, new


def build_cost_matrix(
    miss_log_weights: np.ndarray,
    detect_log_weights: np.ndarray,
    first_detection_log_weights: np.ndarray,
) -> CostMatrix:
    """Negative-log cost matrix: old-track block of weight ratios, then the
    diagonal new-object block."""
    M = len(first_detection_log_weights)
    n_o = len(miss_log_weights)
    miss = np.maximum(miss_log_weights, _LOG_FLOOR)
    entries = np.full((M, M + n_o), np.inf)
    if n_o:
        entries[:, :n_o] = -(detect_log_weights - miss[None, :])
    entries[np.arange(M), n_o + np.arange(M)] = -first_detection_log_weights
    return CostMatrix(entries, n_o)


# ---------------------------------------------------------------------------
# full update


def update(
    post: PmbmPosterior,
    Z,
    obs: tuple[np.ndarray, np.ndarray],
    clutter_density: float,
    cfg: FilterConfig = FilterConfig(),
    detection=BetaDetection(),
) -> PmbmPosterior:
    """Measurement update: per-observation first detections, per-track
    miss/detect branches, and Murty-based global hypothesis construction."""
    if clutter_density <= 0:
        raise ValueError("clutter density must be positive")
    H, R = obs
    Z = np.asarray(Z, dtype=float).reshape(-1, H.shape[0])
    M = Z.shape[0]
    scan = post.time_index

    first_log_rho, new_tracks = _first_detections(
        post.poisson, Z, obs, clutter_density, detection, cfg.gate_threshold, scan
    )

    thinned = update_undetected(post.poisson, detection)

    # per-unique-track miss/detect results, shared across hypotheses:
    # (miss delta, missed track, detect deltas per observation, detect
    # tracks per observation with None where gated out)
    track_cache: dict[int, tuple] = {}

    def track_results(tr: BernoulliTrack):
        key = id(tr)
        result = track_cache.get(key)
        if result is not None:
            return result
        miss_delta, miss_tr = misdetect_track(tr, detection, scan)
        det_lw = np.full(M, -np.inf)
        det_tr: list[BernoulliTrack | None] = [None] * M
        if M and tr.existence > 0.0:
            factor, new_beta = detection.detect(tr.beta)
            if factor > 0.0:
                mahal, loglik, means, cov = _obs_cache(tr.gaussian, Z, H, R)
                base = math.log(tr.existence) + math.log(factor)
                for m in np.flatnonzero(mahal <= cfg.gate_threshold):
                    lw = base + loglik[m]
                    det_lw[m] = lw
                    det_tr[m] = BernoulliTrack(
                        tr.track_id,
                        1.0,
                        new_beta,
                        GaussianComponent(means[m], cov),
                        tr.assoc_key + (("detect", scan, int(m)),),
                        lw,
                    )
        has_det = any(t is not None for t in det_tr)
        result = (miss_delta, miss_tr, det_lw, det_tr, has_det)
        track_cache[key] = result
        return result

    parent_lws = np.array([h.log_weight for h in post.hypotheses])
    parent_norm = parent_lws - _logsumexp(parent_lws)

    children: dict[frozenset, GlobalHypothesis] = {}

    def add_child(log_weight: float, tracks: tuple[BernoulliTrack, ...]):
        if log_weight == -math.inf or math.isnan(log_weight):
            return
        # equal association histories always denote the same (cached) track
        # object, so object identity is an exact duplicate signature
        sig = frozenset(map(id, tracks))
        old = children.get(sig)
        if old is None:
            children[sig] = GlobalHypothesis(log_weight, tracks)
        else:
            children[sig] = GlobalHypothesis(
                np.logaddexp(old.log_weight, log_weight), old.tracks
            )

    cache_get = track_cache.get
    for j, hyp in enumerate(post.hypotheses):
        n_o = len(hyp.tracks)
        results = [cache_get(id(tr)) or track_results(tr) for tr in hyp.tracks]
        miss_deltas = np.array([r[0] for r in results]) if n_o else np.zeros(0)
        miss_tracks = [r[1] for r in results]

        if M == 0:
            lw = hyp.log_weight + miss_deltas.sum()
            add_child(lw, tuple(miss_tracks))
            continue

        # only tracks that gate at least one observation enter the cost
        # matrix; the rest can only miss, so fold them into the base weight
        active = [i for i, r in enumerate(results) if r[4]]
        inf_miss = ~np.isfinite(miss_deltas)
        if n_o and inf_miss.any():
            active_set = set(active)
            if any(inf_miss[i] for i in range(n_o) if i not in active_set):
                continue  # a track that can neither miss nor detect: weight 0
        base_lw = hyp.log_weight + (miss_deltas[~inf_miss].sum() if n_o else 0.0)
        must_assign = int(inf_miss[active].sum()) if active else 0

        n_a = len(active)
        miss_act = miss_deltas[active]
        det_act = np.empty((M, n_a))
        for k_col, i in enumerate(active):
            det_act[:, k_col] = results[i][2]

        # observations gating no track are forced onto the new-object
        # diagonal; dropping their rows shrinks every assignment solve and
        # only shifts all child weights by the same constant
        free = (
            np.flatnonzero(np.isfinite(det_act).any(axis=1))
            if n_a else np.zeros(0, dtype=int)
        )
        forced = np.setdiff1d(np.arange(M), free, assume_unique=True)
        base_lw += first_log_rho[forced].sum()
        base_extra = tuple(
            new_tracks[m] for m in forced if new_tracks[m] is not None
        )

        cost = build_cost_matrix(miss_act, det_act[free], first_log_rho[free])
        k_j = max(1, math.ceil(cfg.murty_budget * math.exp(parent_norm[j])))
        for assignment in murty_kbest(cost, k_j):
            lw = base_lw
            tracks = list(miss_tracks)
            extra: list[BernoulliTrack] = []
            unmet = must_assign
            for m_i, col in enumerate(assignment.row_to_column):
                m = free[m_i]
                if col < n_a:
                    i = active[col]
                    tracks[i] = results[i][3][m]
                    if inf_miss[i]:
                        unmet -= 1
                        lw += det_act[m, col]
                    else:
                        lw += det_act[m, col] - miss_act[col]
                else:
                    lw += first_log_rho[m]
                    if new_tracks[m] is not None:
                        extra.append(new_tracks[m])
            if unmet:
                continue
            add_child(lw, tuple(tracks) + base_extra + tuple(extra))

    hyps = list(children.values())
    if not hyps:
        hyps = [GlobalHypothesis(0.0)]
    lws = np.array([h.log_weight for h in hyps])
    lws -= _logsumexp(lws)
    hyps = tuple(GlobalHypothesis(float(lw), h.tracks) for lw, h in zip(lws, hyps))
    return PmbmPosterior(thinned, hyps, post.time_index)


def _logsumexp(x: np.ndarray) -> float:
    if len(x) == 0:
        return -math.inf
    m = np.max(x)
    if m == -math.inf:
        return -math.inf
    return float(m + np.log(np.exp(x - m).sum()))


# ---------------------------------------------------------------------------
# reduction


def _merge_poisson(components, cfg: FilterConfig):
    comps = [c for c in components if c.weight >= cfg.prune_poisson]
    comps.sort(key=lambda c: -c.weight)
    n = len(comps)
    if n == 0:
        return ()
    # prescreen: the Gaussian Bhattacharyya coefficient is at most
    # exp(-|dm|^2 / (8 tr(Pbar))), so pairs with large mean separation can
    # never fall below the merge threshold and skip the full computation
    means = np.stack([c.gaussian.mean for c in comps])
    covs = np.stack([c.gaussian.cov for c in comps])
    traces = covs.trace(axis1=1, axis2=2)
    _, logdets = np.linalg.slogdet(covs)
    has_beta = all(c.beta is not None for c in comps)
    if has_beta:
        s_arr = np.array([c.beta.s for c in comps])
        t_arr = np.array([c.beta.t for c in comps])
        betaln_st = betaln(s_arr, t_arr)
    if cfg.merge_threshold < 1.0:
        max_d2 = -8.0 * math.log(1.0 - cfg.merge_threshold)
    else:
        max_d2 = math.inf
    merged = []
    used = np.zeros(n, dtype=bool)
    for i, c in enumerate(comps):
        if used[i]:
            continue
        used[i] = True
        rest = np.flatnonzero(~used)
        if len(rest):
            d = means[rest] - means[i]
            d2 = (d * d).sum(axis=1)
            tr_bar = 0.5 * (traces[rest] + traces[i])
            keep = d2 <= max_d2 * tr_bar
            rest = rest[keep]
            d = d[keep]
        if len(rest):
            # batched squared-Hellinger against all surviving candidates
            P = 0.5 * (covs[rest] + covs[i])
            _, logdet_p = np.linalg.slogdet(P)
            quad = np.einsum(
                "ri,ri->r", d, np.linalg.solve(P, d[..., None])[..., 0]
            )
            log_bc = (
                -0.125 * quad - 0.5 * logdet_p
                + 0.25 * (logdets[rest] + logdets[i])
            )
            bc = np.exp(np.minimum(log_bc, 0.0))
            if has_beta:
                log_bb = betaln(
                    0.5 * (s_arr[rest] + s_arr[i]), 0.5 * (t_arr[rest] + t_arr[i])
                ) - 0.5 * (betaln_st[rest] + betaln_st[i])
                bc = bc * np.exp(np.minimum(log_bb, 0.0))
            dist = np.clip(1.0 - bc, 0.0, 1.0)
            close = rest[dist < cfg.merge_threshold]
        else:
            close = rest
        cluster = [c] + [comps[j] for j in close]
        used[close] = True
        merged.append(cluster[0] if len(cluster) == 1 else moment_match_bg_mixture(cluster))
    merged.sort(key=lambda c: -c.weight)
    return tuple(merged[: cfg.max_poisson])


def reduce_posterior(post: PmbmPosterior, cfg: FilterConfig = FilterConfig()) -> PmbmPosterior:
    """Prune, merge, cap, and renormalize the posterior."""
    poisson = PoissonIntensity(_merge_poisson(list(post.poisson.components), cfg))

    hyps = sorted(post.hypotheses, key=lambda h: -h.log_weight)
    if hyps:
        log_thresh = (
            math.log(cfg.prune_hypothesis) if cfg.prune_hypothesis > 0 else -math.inf
        )
        kept = [h for h in hyps if h.log_weight >= log_thresh]
        if not kept:
            kept = [hyps[0]]
        hyps = kept[: cfg.max_hypotheses]

    merged: dict[frozenset, GlobalHypothesis] = {}
    for h in hyps:
        tracks = tuple([tr for tr in h.tracks if tr.existence >= cfg.prune_track])
        sig = frozenset(map(id, tracks))
        old = merged.get(sig)
        if old is None:
            merged[sig] = GlobalHypothesis(h.log_weight, tracks)
        else:
            merged[sig] = GlobalHypothesis(
                float(np.logaddexp(old.log_weight, h.log_weight)), old.tracks
            )
    out = list(merged.values())
    lws = np.array([h.log_weight for h in out])
    lws -= _logsumexp(lws)
    out = tuple(GlobalHypothesis(float(lw), h.tracks) for lw, h in zip(lws, out))
    return PmbmPosterior(poisson, out, post.time_index)


# ---------------------------------------------------------------------------
# extraction


def estimate(post: PmbmPosterior, gamma: float = 0.55) -> EstimateSet:
    """Report tracks above the existence threshold from the best hypothesis."""
    best = max(post.hypotheses, key=lambda h: h.log_weight)
    selected = [tr for tr in best.tracks if tr.existence > gamma]
    states = tuple((tr.track_id, tr.gaussian.mean) for tr in selected)
    expected = float(sum(tr.existence for tr in selected))
    betas = [tr.beta for tr in selected if tr.beta is not None]
    p_d = float(np.mean([beta_mean(b) for b in betas])) if betas else None
    return EstimateSet(states, len(selected), expected, p_d)


# ---------------------------------------------------------------------------
# one full recursion step


def step(
    post: PmbmPosterior,
    Z,
    motion: tuple[np.ndarray, np.ndarray],
    obs: tuple[np.ndarray, np.ndarray],
    birth: PoissonIntensity,
    p_s: float,
    clutter_density: float,
    cfg: FilterConfig = FilterConfig(),
    detection=BetaDetection(),
) -> PmbmPosterior:
    pred = predict(post, motion, birth, p_s, cfg.k_beta, detection)
    upd = update(pred, Z, obs, clutter_density, cfg, detection)
    return reduce_posterior(upd, cfg)


def run_fixed_pd_step(
    post: PmbmPosterior,
    Z,
    motion,
    obs,
    birth: PoissonIntensity,
    p_s: float,
    clutter_density: float,
    p_d: float,
    cfg: FilterConfig = FilterConfig(),
) -> PmbmPosterior:
    """Classic PMBM step with known constant detection probability."""
    return step(post, Z, motion, obs, birth, p_s, clutter_density, cfg,
                detection=FixedDetection(p_d))


# ---------------------------------------------------------------------------
# snapshot serialization (debugging / golden files)


def _fmt_array(a: np.ndarray) -> str:
    return "[" + ",".join(f"{v:.12g}" for v in np.asarray(a).ravel()) + "]"


def snapshot(post: PmbmPosterior) -> str:
    """One record per Poisson component and per hypothesis/track."""
    lines = [f"posterior time_index={post.time_index}"]
    for c in post.poisson.components:
        beta = f"s={c.beta.s:.12g} t={c.beta.t:.12g} " if c.beta else ""
        lines.append(
            f"poisson_component weight={c.weight:.12g} {beta}"
            f"mean={_fmt_array(c.gaussian.mean)} cov={_fmt_array(c.gaussian.cov)}"
        )
    for h in post.hypotheses:
        lines.append(f"hypothesis log_weight={h.log_weight:.12g}")
        for tr in h.tracks:
            beta = f"s={tr.beta.s:.12g} t={tr.beta.t:.12g} " if tr.beta else ""
            lines.append(
                f"track track_id={tr.track_id} existence={tr.existence:.12g} {beta}"
                f"mean={_fmt_array(tr.gaussian.mean)} cov={_fmt_array(tr.gaussian.cov)} "
                f"log_weight_contrib={tr.log_weight_contrib:.12g}"
            )
    return "\n".join(lines) + "\n"
