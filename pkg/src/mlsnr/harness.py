"""Monte Carlo study of SNR estimation error.

For each random channel: send many uniformly drawn symbol vectors, ML-decode
them, turn the measured per-stream and joint symbol error rates into
"empiric" SNRs through ``SNR = -beta ln SER``, then evaluate every requested
estimator on the same channel. Errors (estimate minus empiric, in dB) are
aggregated per method and per stream, plus a vertical entry comparing the
dB-averaged per-stream estimate (or a joint-only estimate) with the SNR
implied by the joint SER.

Channel ``k`` draws from its own substream of ``SeedSequence(seed)``, so
results do not depend on how channels are spread over worker processes.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, replace
from functools import partial

import numpy as np

from .channel import ChannelRealization, complex_normal, rayleigh_channel, rho_from_snr_db
from .decoders import SearchCounter, ml_decode_batch
from .errorsets import ErrorSetFamily, error_set_family
from .estimators import (
    Method,
    PhBound,
    SnrEstimate,
    capacity_snr_estimate,
    per_stream_snr,
    ph_error_bound,
    to_db,
)
from .modulation import Constellation, DomainError, Kind, make_constellation

VERTICAL = "vertical"
DEFAULT_METHODS = ("union", "fullsum", "maxlog", "capacity")


class ZeroSer(ValueError):
    """No symbol errors were observed, so no SNR is implied."""


class InsufficientData(ValueError):
    pass


@dataclass
class SimConfig:
    modulation: str = "qpsk"
    num_channels: int = 2000
    vectors_per_channel: int = 1_000_000
    m_t: int = 2
    m_r: int = 2
    snr_db: float | None = 10.0
    rho: float | None = None
    methods: tuple[str, ...] = DEFAULT_METHODS
    qpsk_sets_for_higher_qam: bool = False
    seed: int = 0
    hist_bin_db: float = 0.25
    hist_range_db: float = 10.0
    workers: int = 1

    def __post_init__(self):
        self.modulation = Kind(self.modulation).value
        self.methods = tuple(Method(m).value for m in self.methods)
        if self.num_channels < 1 or self.vectors_per_channel < 1:
            raise ValueError("num_channels and vectors_per_channel must be positive")
        if not self.m_r >= self.m_t >= 1:
            raise ValueError(f"need m_r >= m_t >= 1, got m_r={self.m_r}, m_t={self.m_t}")
        if self.rho is None and self.snr_db is None:
            raise ValueError("one of rho or snr_db is required")
        if self.rho is not None and not self.rho > 0:
            raise ValueError(f"rho must be positive, got {self.rho}")
        if not (self.hist_bin_db > 0 and self.hist_range_db > 0):
            raise ValueError("histogram bin width and range must be positive")
        if self.workers < 1:
            raise ValueError("workers must be at least 1")

    @property
    def noise_rho(self) -> float:
        """``rho`` if given, otherwise derived from ``snr_db``."""
        return self.rho if self.rho is not None else rho_from_snr_db(self.snr_db)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["methods"] = list(self.methods)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "SimConfig":
        d = dict(d)
        if "methods" in d:
            d["methods"] = tuple(d["methods"])
        return cls(**d)


@dataclass
class TrialRecord:
    channel: int
    h_phy: np.ndarray = field(repr=False)
    vectors: int
    stream_errors: tuple[int, ...]
    joint_errors: int
    empiric_db: tuple[float, ...]
    joint_empiric_db: float
    estimates: dict[str, SnrEstimate]
    ph: PhBound | None
    excluded: bool
    data_searches: int = 0
    snr_searches: int = 0
    maxlog_evaluations: int = 0

    @property
    def ser(self) -> tuple[float, ...]:
        return tuple(e / self.vectors for e in self.stream_errors)

    @property
    def joint_ser(self) -> float:
        return self.joint_errors / self.vectors


@dataclass
class MethodStats:
    method: str
    stream: str
    samples: int
    saturated: int
    mean_error_db: float
    std_error_db: float
    bin_edges: np.ndarray = field(repr=False)
    counts: np.ndarray = field(repr=False)


@dataclass
class ErrorStats:
    entries: dict[tuple[str, str], MethodStats]
    included: int
    excluded: int

    def get(self, method: str, stream) -> MethodStats:
        return self.entries[(Method(method).value, str(stream))]


def empiric_snr(ser: float, c: Constellation) -> float:
    """SNR in dB implied by a measured symbol error rate: ``-beta ln SER``."""
    if ser == 0:
        raise ZeroSer("SER is zero")
    if not 0 < ser < 1:
        raise DomainError(f"SER must lie in (0, 1), got {ser}")
    return to_db(-c.beta * math.log(ser))


def channel_rng(seed: int, index: int) -> np.random.Generator:
    """Independent stream for channel ``index``, fixed by ``(seed, index)`` alone."""
    return np.random.default_rng(np.random.SeedSequence(entropy=seed, spawn_key=(index,)))


def estimation_family(cfg: SimConfig) -> ErrorSetFamily:
    kind = Kind.QPSK if cfg.qpsk_sets_for_higher_qam else Kind(cfg.modulation)
    return error_set_family(kind, cfg.m_t)


def _stream_symbols(decoded: np.ndarray, q: int, m_t: int) -> np.ndarray:
    # candidate index -> per-stream symbol index, stream 0 fastest
    return (decoded[:, None] // q ** np.arange(m_t)[None, :]) % q


def run_trial(
    cfg: SimConfig,
    index: int,
    rng: np.random.Generator | None = None,
    h_phy: np.ndarray | None = None,
) -> TrialRecord:
    """Simulate one channel and evaluate every requested estimator on it.

    The channel is drawn from the channel's substream unless ``h_phy`` is
    given, in which case only symbols and noise are random.
    """
    if rng is None:
        rng = channel_rng(cfg.seed, index)
    c = make_constellation(cfg.modulation)
    family = estimation_family(cfg)
    n = cfg.vectors_per_channel

    if h_phy is None:
        h_phy = rayleigh_channel(cfg.m_r, cfg.m_t, rng)
    ch = ChannelRealization(h_phy, cfg.noise_rho)
    sent = rng.integers(0, c.q_size, size=(n, cfg.m_t))
    y = c.points[sent] @ ch.h_eff.T + ch.rho * complex_normal(rng, (n, cfg.m_r))

    data = SearchCounter()
    decoded = _stream_symbols(ml_decode_batch(y, ch, c, data), c.q_size, cfg.m_t)
    wrong = decoded != sent
    stream_errors = tuple(int(x) for x in wrong.sum(axis=0))
    joint_errors = int(wrong.any(axis=1).sum())

    excluded = False
    try:
        empiric = tuple(empiric_snr(e / n, c) for e in stream_errors)
        joint = empiric_snr(joint_errors / n, c)
    except (ZeroSer, DomainError):
        excluded = True
        empiric, joint = (math.nan,) * cfg.m_t, math.nan

    snr = SearchCounter()
    estimates: dict[str, SnrEstimate] = {}
    ph = None
    maxlog_runs = 0
    for name in cfg.methods:
        method = Method(name)
        if method is Method.CAPACITY:
            estimates[name] = capacity_snr_estimate(ch)
        elif method is Method.PH:
            ph = ph_error_bound(ch, c)
        else:
            estimates[name] = per_stream_snr(method, ch, c, family, snr)
            maxlog_runs += method is Method.MAXLOG

    return TrialRecord(
        channel=index,
        h_phy=h_phy,
        vectors=n,
        stream_errors=stream_errors,
        joint_errors=joint_errors,
        empiric_db=empiric,
        joint_empiric_db=joint,
        estimates=estimates,
        ph=ph,
        excluded=excluded,
        data_searches=data.calls,
        snr_searches=snr.calls,
        maxlog_evaluations=maxlog_runs,
    )


def sample_used(r: TrialRecord, method: str, stream) -> bool:
    """Whether ``(r, method, stream)`` contributes an error sample.

    Excluded channels never do; nor do saturated estimates (a vertical
    estimate is unusable if any of its streams saturated).
    """
    if r.excluded or method not in r.estimates:
        return False
    est = r.estimates[method]
    if stream == VERTICAL:
        return not est.any_saturated
    return not (est.saturated and est.saturated[int(stream)])


def sample_error(r: TrialRecord, method: str, stream) -> float:
    est = r.estimates[method]
    if stream == VERTICAL:
        return est.vertical_db - r.joint_empiric_db
    return est.per_stream_db[int(stream)] - r.empiric_db[int(stream)]


def error_samples(records: list[TrialRecord], method: str, stream) -> np.ndarray:
    """Estimate-minus-empiric dB errors over the usable samples."""
    return np.array(
        [sample_error(r, method, stream) for r in records if sample_used(r, method, stream)],
        dtype=float,
    )


def histogram(errors: np.ndarray, bin_db: float, range_db: float) -> tuple[np.ndarray, np.ndarray]:
    """Mean-compensated histogram; values beyond the range land in the edge bins."""
    nbins = int(round(2 * range_db / bin_db))
    edges = np.linspace(-range_db, range_db, nbins + 1)
    if len(errors) == 0:
        return edges, np.zeros(nbins, dtype=int)
    centered = np.clip(errors - errors.mean(), -range_db, range_db)
    counts, _ = np.histogram(centered, bins=edges)
    return edges, counts


def aggregate(records: list[TrialRecord], bin_db: float = 0.25, range_db: float = 10.0) -> ErrorStats:
    """Per-method error statistics over the non-excluded records."""
    included = [r for r in records if not r.excluded]
    if len(included) < 2:
        raise InsufficientData(f"{len(included)} usable channels, need at least 2")
    m_t = len(included[0].stream_errors)
    entries = {}
    for method in included[0].estimates:
        streams = [str(i) for i in range(m_t)] if Method(method).per_stream else []
        for stream in [*streams, VERTICAL]:
            err = error_samples(included, method, stream)
            # an entry left with fewer than two usable samples (everything
            # saturated) reports NaN statistics instead of failing the run
            edges, counts = histogram(err, bin_db, range_db)
            entries[(method, stream)] = MethodStats(
                method=method,
                stream=stream,
                samples=len(err),
                saturated=len(included) - len(err),
                mean_error_db=float(err.mean()) if len(err) else math.nan,
                std_error_db=float(err.std(ddof=1)) if len(err) >= 2 else math.nan,
                bin_edges=edges,
                counts=counts,
            )
    return ErrorStats(entries=entries, included=len(included), excluded=len(records) - len(included))


def reestimate(records: list[TrialRecord], cfg: SimConfig) -> list[TrialRecord]:
    """Re-evaluate the estimators of ``cfg`` on already simulated channels.

    Error counts and empiric SNRs are kept, so two estimator settings (native
    versus QPSK error sets, say) are compared on identical realizations.
    """
    c = make_constellation(cfg.modulation)
    family = estimation_family(cfg)
    out = []
    for r in records:
        ch = ChannelRealization(r.h_phy, cfg.noise_rho)
        est = {}
        for name in cfg.methods:
            method = Method(name)
            if method is Method.CAPACITY:
                est[name] = capacity_snr_estimate(ch)
            elif method is not Method.PH:
                est[name] = per_stream_snr(method, ch, c, family)
        out.append(replace(r, estimates=est))
    return out


def run_experiment(cfg: SimConfig) -> tuple[list[TrialRecord], ErrorStats]:
    """Run every channel (in parallel when ``cfg.workers > 1``) and aggregate."""
    trial = partial(run_trial, cfg)
    indices = range(cfg.num_channels)
    if cfg.workers > 1:
        with ProcessPoolExecutor(max_workers=cfg.workers) as pool:
            chunk = max(1, cfg.num_channels // (4 * cfg.workers))
            records = list(pool.map(trial, indices, chunksize=chunk))
    else:
        records = [trial(k) for k in indices]
    return records, aggregate(records, cfg.hist_bin_db, cfg.hist_range_db)


@dataclass(frozen=True)
class Overhead:
    data_searches: int
    data_set_size: int
    snr_searches: int
    snr_set_size: int

    @property
    def search_ratio(self) -> float:
        return self.snr_searches / self.data_searches

    @property
    def point_ratio(self) -> float:
        return (self.snr_searches * self.snr_set_size) / (self.data_searches * self.data_set_size)


def decoder_overhead(c: Constellation, family: ErrorSetFamily, symbols: int = 10) -> Overhead:
    """Search cost of one max-log SNR evaluation against soft data decoding.

    Soft decoding of ``symbols`` vectors runs two searches per bit, each over
    the half of the ``q^M_T`` candidates carrying that bit value. The SNR
    needs one search per stream over ``B^_i``.
    """
    m_t = family.m_t
    bits = m_t * c.bits_per_symbol
    return Overhead(
        data_searches=2 * bits * symbols,
        data_set_size=c.q_size**m_t // 2,
        snr_searches=m_t,
        snr_set_size=max(len(s) for s in family.abbreviated_sets),
    )


def search_report(records: list[TrialRecord], cfg: SimConfig) -> dict:
    """ML-search bookkeeping for a finished run."""
    c = make_constellation(cfg.modulation)
    family = estimation_family(cfg)
    data = sum(r.data_searches for r in records)
    snr = sum(r.snr_searches for r in records)
    evals = sum(r.maxlog_evaluations for r in records)
    ov = decoder_overhead(c, family)
    return {
        "data_searches": data,
        "data_set_size": c.q_size**cfg.m_t,
        "snr_searches": snr,
        "snr_set_size": [len(s) for s in family.abbreviated_sets],
        "maxlog_evaluations": evals,
        "snr_searches_per_evaluation": snr / evals if evals else None,
        "allocation_symbols": 10,
        "allocation_data_searches": ov.data_searches,
        "allocation_data_set_size": ov.data_set_size,
        "allocation_snr_searches": ov.snr_searches,
        "allocation_search_ratio": ov.search_ratio,
        "allocation_point_ratio": ov.point_ratio,
    }
