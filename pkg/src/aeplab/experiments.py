"""Verification harness: exact output laws, equipartition metrics, codebook
statistics, entropy-rate estimates, joint typicality, and the decoding checks.

Conditioning convention: the typical-noise event applies per transmitted
codeword (the output is conditionally typical given the word actually sent),
and the conditional output law of a codebook mixes the per-word conditional
laws with the uniform message weights:

    Pr(Y = y | E, C) = (1/M) sum_w 1{y in A(Y|x_w)} p(y|x_w) / Pr(E|x_w).

Outputs reachable under typical noise need not be typical themselves at the
same epsilon; reports list the mass inside the typical output set and the
remainder separately rather than assuming containment.

Determinism: every stochastic quantity derives its generator from the config
seed plus fixed integer tags, per-task reductions happen in task-index order,
and the dense-law contractions avoid BLAS dispatch, so a report is
byte-identical across runs and across worker counts.
"""

from __future__ import annotations

import math
import statistics
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import exactlaw
from . import typicality as typ
from .typicality import exp2
from .channel import Dmc, Pmf, Sequence, entropy_bits, single_letter_stats
from .codebook import Codebook, generate_codebook, input_entropy_rate, is_regular_codebook, is_typical_codebook
from .errors import CapExceeded, ConfigError, EmptyTypicalSet
from .report import ExperimentReport, version_string
from .specfile import ChannelSpec, render_channel_spec

CAP_PAIR_WORK = 2**29  # sum over codewords of |A(Y|x_w)| in the dense conditional law
CAP_COMPOSITION_WORK = 2**24

_TAG_CODEBOOK = 1
_TAG_MC_OUTPUT = 2
_TAG_MC_JOINT = 3

__all__ = [
    "ExperimentConfig",
    "OutputClassMass",
    "EquipartitionStats",
    "derive_seed",
    "codebook_for",
    "output_dist_given_E",
    "conditional_law_dense",
    "equipartition_report",
    "theorem1_report",
    "typical_codebook_rate",
    "cond_entropy_rate",
    "unconditional_entropy_rate",
    "joint_typicality_rate",
    "ml_decode",
    "fano_per_codebook",
    "fano_report",
    "vc_bound",
    "input_entropy_trend",
    "sweep_report",
]


@dataclass(frozen=True)
class ExperimentConfig:
    channel: Dmc
    p0: Pmf
    epsilon: float
    n_grid: tuple[int, ...]
    rates: tuple[float, ...]
    trials: int = 1000
    codebooks: int = 20
    seed: int = 0
    workers: int = 1

    def __post_init__(self):
        if self.epsilon <= 0:
            raise ConfigError("epsilon must be positive")
        if not self.n_grid:
            raise ConfigError("n grid must not be empty")
        if list(self.n_grid) != sorted(self.n_grid) or len(set(self.n_grid)) != len(self.n_grid):
            raise ConfigError("n grid must be strictly ascending")
        if not self.rates:
            raise ConfigError("at least one rate is required")
        if self.trials < 1 or self.codebooks < 1:
            raise ConfigError("trials and codebooks must be at least 1")
        if self.workers < 1:
            raise ConfigError("workers must be at least 1")

    @property
    def rate(self) -> float:
        return self.rates[0]

    def metadata(self, **extra) -> dict[str, str]:
        meta = {
            "channel": render_channel_spec(ChannelSpec(self.channel, self.p0)).replace("\n", " | "),
            "epsilon": f"{self.epsilon:.12g}",
            "rates": ",".join(f"{r:.12g}" for r in self.rates),
            "n_grid": ",".join(str(n) for n in self.n_grid),
            "codebooks": str(self.codebooks),
            "trials": str(self.trials),
            "seed": str(self.seed),
            "version": version_string(),
        }
        meta.update({k: str(v) for k, v in extra.items()})
        return meta


def derive_seed(base: int, *tags: int) -> int:
    """Stable 64-bit substream seed from the config seed and integer tags."""
    ss = np.random.SeedSequence((int(base),) + tuple(int(t) for t in tags))
    return int(ss.generate_state(1, np.uint64)[0])


def codebook_for(cfg: ExperimentConfig, rate: float, n: int, index: int) -> Codebook:
    """Codebook index under the config seed; the substream ignores the rate,
    so codebooks at different rates share word prefixes (matched seeds)."""
    return generate_codebook(
        cfg.p0, n, rate, cfg.epsilon, derive_seed(cfg.seed, _TAG_CODEBOOK, n, index)
    )


def _pmap(fn, tasks, workers: int) -> list:
    if workers <= 1 or len(tasks) <= 1:
        return [fn(t) for t in tasks]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, tasks))


# ---------------------------------------------------------------------------
# conditional output law, per type class (exact at any block length)
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class OutputClassMass:
    counts: tuple[int, ...]
    representative: Sequence
    mass: float
    log2_size: float
    is_typical: bool


def _word_types(cb: Codebook) -> list[tuple[tuple[int, ...], int]]:
    """Distinct codeword types with multiplicities, in lexicographic order."""
    kx = cb.alphabet.size
    counts = np.stack(
        [np.count_nonzero(cb.words == a, axis=1) for a in range(kx)], axis=1
    )
    uniq, mult = np.unique(counts, axis=0, return_counts=True)
    return [(tuple(int(v) for v in row), int(m)) for row, m in zip(uniq, mult)]


def _noise_given_types(
    types: list[tuple[tuple[int, ...], int]], ch: Dmc, eps: float, n: int
) -> dict[tuple[int, ...], float]:
    out: dict[tuple[int, ...], float] = {}
    for r, _ in types:
        pe = typ.prob_typical_noise_of_type(r, ch, eps, n)
        if pe == 0.0:
            raise EmptyTypicalSet(
                f"conditional-typical output set is empty for codeword type {r}"
            )
        out[r] = pe
    return out


def _cond_cell_bounds(r: tuple[int, ...], ch: Dmc, eps: float, n: int):
    """Per-cell windows of the conditional-typicality test for row sums r."""
    ky = ch.output.size
    bounds = []
    for a, r_a in enumerate(r):
        win = typ.cond_row_windows(r_a, ch.transition[a], n, eps, ky)
        if win is None:
            return None
        bounds.append(win)
    return bounds


def output_dist_given_E(cb: Codebook, ch: Dmc, p0: Pmf, eps: float) -> list[OutputClassMass]:
    """Exact Pr(Y in class | E, C) per output type class.

    Classes with zero mass are kept only when typical, so reports can count
    typical classes the codebook cannot reach.  The masses over all classes
    sum to 1.
    """
    n = cb.n
    ky = ch.output.size
    log_t = np.where(ch.transition > 0, np.log2(np.maximum(ch.transition, 1e-300)), 0.0)
    types = _word_types(cb)
    noise = _noise_given_types(types, ch, eps, n)
    p0y = ch.output_pmf(p0)
    y_windows = typ.strong_windows(n, p0y.probs, eps)

    out: list[OutputClassMass] = []
    for t in typ.bounded_compositions(n, [(0, n)] * ky):
        mass = 0.0
        for r, m_r in types:
            bounds = _cond_cell_bounds(r, ch, eps, n)
            if bounds is None:
                continue
            acc = 0.0
            for kmat in typ.contingency_tables(list(r), list(t), bounds):
                w = 0.0
                for a, r_a in enumerate(r):
                    if r_a:
                        w += typ.log2_multinomial(r_a, kmat[a])
                        for b in range(ky):
                            if kmat[a, b]:
                                w += int(kmat[a, b]) * log_t[a, b]
                acc += exp2(w)
            mass += m_r * acc / noise[r]
        mass /= cb.num_words
        typical = False
        if y_windows is not None:
            typical = all(lo <= t[b] <= hi for b, (lo, hi) in enumerate(y_windows))
        if mass > 0.0 or typical:
            rep = Sequence(ch.output, np.repeat(np.arange(ky), t))
            out.append(
                OutputClassMass(t, rep, mass, typ.log2_multinomial(n, t), typical)
            )
    return out


# ---------------------------------------------------------------------------
# per-sequence conditional output law and the equipartition metrics
# ---------------------------------------------------------------------------


def _arrangements(comp: tuple[int, ...]) -> np.ndarray:
    """All distinct orderings of the multiset {b^comp[b]}, as symbol rows."""
    r = int(sum(comp))
    out = np.empty((typ.exact_multinomial(r, comp), r), dtype=np.int8)
    row = np.empty(r, dtype=np.int8)
    idx = 0
    remaining = list(comp)

    def rec(pos: int):
        nonlocal idx
        if pos == r:
            out[idx] = row
            idx += 1
            return
        for b, c in enumerate(remaining):
            if c:
                remaining[b] -= 1
                row[pos] = b
                rec(pos + 1)
                remaining[b] += 1

    rec(0)
    return out


def _type_patterns(r: tuple[int, ...], ch: Dmc, eps: float, n: int):
    """Per input symbol: (symbol-value patterns, log2 channel weight per pattern).

    The patterns for symbol a enumerate every conditionally-typical way to
    fill the r_a positions carrying a; their cross product over symbols is
    exactly the conditional-typical output ball of a word of type r.
    """
    ky = ch.output.size
    log_t = np.where(ch.transition > 0, np.log2(np.maximum(ch.transition, 1e-300)), 0.0)
    per_symbol = []
    for a, r_a in enumerate(r):
        if r_a == 0:
            continue
        win = typ.cond_row_windows(r_a, ch.transition[a], n, eps, ky)
        if win is None:
            return None
        pats = []
        wexp = []
        for comp in typ.bounded_compositions(r_a, win):
            arr = _arrangements(comp)
            pats.append(arr)
            w = sum(int(c) * log_t[a, b] for b, c in enumerate(comp) if c)
            wexp.append(np.full(arr.shape[0], w))
        per_symbol.append((a, np.concatenate(pats, axis=0), np.concatenate(wexp)))
    return per_symbol


def conditional_law_dense(cb: Codebook, ch: Dmc, eps: float) -> np.ndarray:
    """Pr(Y = y | E, C) for every output sequence, indexed by packed code."""
    n = cb.n
    radix = ch.output.size
    total = radix**n
    if total > exactlaw.CAP_OUTPUT_ENUM:
        raise CapExceeded(f"output enumeration {radix}^{n} exceeds cap 2^22")
    types = _word_types(cb)
    noise = _noise_given_types(types, ch, eps, n)

    kx = cb.alphabet.size
    word_counts = np.stack(
        [np.count_nonzero(cb.words == a, axis=1) for a in range(kx)], axis=1
    )
    pow_vec = radix ** np.arange(n - 1, -1, -1, dtype=np.int64)
    q = np.zeros(total, dtype=np.float64)

    work = 0
    plans = []
    for r, m_r in types:
        per_symbol = _type_patterns(r, ch, eps, n)
        if per_symbol is None:
            raise EmptyTypicalSet(
                f"conditional-typical output set is empty for codeword type {r}"
            )
        ball = 1
        for _, pats, _ in per_symbol:
            ball *= pats.shape[0]
        work += ball * m_r
        plans.append((r, per_symbol))
    if work > CAP_PAIR_WORK:
        raise CapExceeded(f"conditional-law work {work} exceeds cap {CAP_PAIR_WORK}")

    for r, per_symbol in plans:
        sel = np.flatnonzero(np.all(word_counts == np.array(r), axis=1))
        scale = 1.0 / (cb.num_words * noise[tuple(r)])
        ball = 1
        for _, pats, _ in per_symbol:
            ball *= pats.shape[0]
        chunk = max(1, min(sel.size, (1 << 22) // max(ball, 1)))
        for start in range(0, sel.size, chunk):
            block = sel[start : start + chunk]
            words = cb.words[block]
            inc = np.zeros((1, block.size), dtype=np.float64)
            wexp = np.zeros(1, dtype=np.float64)
            for a, pats, w in per_symbol:
                rows, cols = np.nonzero(words == a)
                powmat = pow_vec[cols].reshape(block.size, -1)  # (W, r_a)
                inc_a = np.einsum(
                    "pr,wr->pw", pats.astype(np.float64), powmat.astype(np.float64),
                    optimize=False,
                )
                inc = (inc[:, None, :] + inc_a[None, :, :]).reshape(-1, block.size)
                wexp = (wexp[:, None] + w[None, :]).reshape(-1)
            codes = inc.astype(np.int64)
            weights = np.exp2(wexp) * scale
            q += np.bincount(
                codes.ravel(),
                weights=np.repeat(weights, block.size),
                minlength=total,
            )
    return q


@dataclass(frozen=True)
class EquipartitionStats:
    spread: float
    l_min: float
    l_max: float
    l_mean: float
    max_dev_h0y: float
    mass_typical: float
    mass_atypical: float
    zero_mass_typical: int
    positive_typical: int


def _typical_code_mask(radix: int, n: int, p0y: Pmf, eps: float) -> np.ndarray:
    counts = exactlaw.code_symbol_counts(radix, n)
    windows = typ.strong_windows(n, p0y.probs, eps)
    if windows is None:
        return np.zeros(counts.shape[0], dtype=bool)
    lo = np.array([w[0] for w in windows], dtype=np.int16)
    hi = np.array([w[1] for w in windows], dtype=np.int16)
    return np.all((counts >= lo) & (counts <= hi), axis=1)


def equipartition_report(
    cb: Codebook,
    ch: Dmc,
    p0: Pmf,
    eps: float,
    _mask: np.ndarray | None = None,
) -> EquipartitionStats:
    """Per-sequence surprisal metrics of the conditional output law.

    l(y) = -(1/n) log2 Pr(Y=y | E, C) over typical outputs with positive mass;
    spread = max - min.  Typical outputs the codebook cannot reach and mass
    escaping the typical set are reported, not folded in.
    """
    n = cb.n
    radix = ch.output.size
    q = conditional_law_dense(cb, ch, eps)
    mask = _mask if _mask is not None else _typical_code_mask(radix, n, ch.output_pmf(p0), eps)
    h0y = entropy_bits(ch.output_pmf(p0).probs)
    tq = q[mask]
    pos = tq[tq > 0]
    mass_typical = float(tq.sum())
    if pos.size:
        ell = -np.log2(pos) / n
        stats = EquipartitionStats(
            spread=float(ell.max() - ell.min()),
            l_min=float(ell.min()),
            l_max=float(ell.max()),
            l_mean=float(ell.mean()),
            max_dev_h0y=float(np.abs(ell - h0y).max()),
            mass_typical=mass_typical,
            mass_atypical=float(1.0 - mass_typical),
            zero_mass_typical=int(tq.size - pos.size),
            positive_typical=int(pos.size),
        )
    else:
        stats = EquipartitionStats(
            spread=0.0,
            l_min=0.0,
            l_max=0.0,
            l_mean=0.0,
            max_dev_h0y=h0y,
            mass_typical=mass_typical,
            mass_atypical=float(1.0 - mass_typical),
            zero_mass_typical=int(tq.size),
            positive_typical=0,
        )
    return stats


def theorem1_report(cfg: ExperimentConfig) -> ExperimentReport:
    """Equipartition metrics per (n, rate, codebook), matched seeds across rates."""
    report = ExperimentReport(
        name="theorem1_equipartition",
        columns=[
            "n",
            "R",
            "codebook_idx",
            "spread",
            "l_min",
            "l_max",
            "l_mean",
            "max_dev_h0y",
            "mass_typical",
            "mass_atypical",
            "zero_mass_typical",
            "positive_typical",
        ],
        metadata=cfg.metadata(),
    )
    for n in cfg.n_grid:
        mask = _typical_code_mask(
            cfg.channel.output.size, n, cfg.channel.output_pmf(cfg.p0), cfg.epsilon
        )
        for rate in cfg.rates:
            def job(idx: int):
                cb = codebook_for(cfg, rate, n, idx)
                return equipartition_report(cb, cfg.channel, cfg.p0, cfg.epsilon, _mask=mask)

            results = _pmap(job, list(range(cfg.codebooks)), cfg.workers)
            for idx, st in enumerate(results):
                report.add(
                    n,
                    rate,
                    idx,
                    st.spread,
                    st.l_min,
                    st.l_max,
                    st.l_mean,
                    st.max_dev_h0y,
                    st.mass_typical,
                    st.mass_atypical,
                    st.zero_mass_typical,
                    st.positive_typical,
                )
    return report


# ---------------------------------------------------------------------------
# theorem 2: how often the random construction yields a typical codebook
# ---------------------------------------------------------------------------


def vc_bound(p0yn: Pmf, n: int, eps: float) -> float:
    """log2 of the typical output set size: the set-family dimension bound."""
    classes, log2_size = typ.typical_type_classes(p0yn, typ.TypicalityParams(eps, n))
    if not classes:
        raise EmptyTypicalSet(f"empty typical set for n={n}, eps={eps}")
    return log2_size


def typical_codebook_rate(cfg: ExperimentConfig) -> ExperimentReport:
    """Typical-codebook pass fraction and deviation statistics per block length."""
    rate = cfg.rate
    report = ExperimentReport(
        name="theorem2_typical_codebooks",
        columns=[
            "n",
            "codebooks",
            "pass_fraction",
            "median_sup_deviation",
            "max_sup_deviation",
            "threshold",
            "delta_eps",
            "vc_deviation_bound",
        ],
        metadata=cfg.metadata(),
    )
    p0y = cfg.channel.output_pmf(cfg.p0)
    for n in cfg.n_grid:
        def job(idx: int):
            cb = codebook_for(cfg, rate, n, idx)
            stats = is_typical_codebook(cb, cfg.channel, cfg.p0, cfg.epsilon)
            return stats
        results = _pmap(job, list(range(cfg.codebooks)), cfg.workers)
        devs = [st.sup_deviation for st in results]
        passes = sum(1 for st in results if st.is_typical)
        threshold = results[0].threshold
        bound = vc_bound(p0y, n, cfg.epsilon)
        delta_eps = max(8.0 * bound, 16.0 * math.e)
        m = 2 ** int(math.floor(n * rate + 1e-12))
        realized = math.log2(m) / n
        report.add(
            n,
            cfg.codebooks,
            passes / cfg.codebooks,
            statistics.median(devs),
            max(devs),
            threshold,
            delta_eps,
            delta_eps * n * realized / m,
        )
    return report


# ---------------------------------------------------------------------------
# theorem 3: conditional entropy rate of the output given the codebook
# ---------------------------------------------------------------------------


def _entropy_rate_exact(cb: Codebook, ch: Dmc) -> float:
    q = exactlaw.output_law_given_codebook(cb, ch)
    return exactlaw.entropy_bits_of_law(q) / cb.n


def _entropy_rate_mc(cb: Codebook, ch: Dmc, trials: int, seed: int) -> tuple[float, float]:
    """Plug-in estimate of (1/n) H(Y^n | cb) from sampled outputs."""
    rng = np.random.default_rng(seed)
    n = cb.n
    m = cb.num_words
    log_t = np.where(ch.transition > 0, np.log2(np.maximum(ch.transition, 1e-300)), -np.inf)
    cdf = np.cumsum(ch.transition, axis=1)
    cdf[:, -1] = 1.0
    vals = np.empty(trials, dtype=np.float64)
    chunk = max(1, (1 << 22) // max(m * n, 1))
    done = 0
    while done < trials:
        b = min(chunk, trials - done)
        widx = rng.integers(0, m, size=b)
        u = rng.random((b, n))
        rows = cdf[cb.words[widx].astype(np.int64)]  # (b, n, ky)
        y = np.sum(u[:, :, None] >= rows, axis=2)
        y = np.minimum(y, ch.output.size - 1)
        lp = log_t[cb.words[None, :, :].astype(np.int64), y[:, None, :]].sum(axis=2)  # (b, M)
        mx = lp.max(axis=1)
        qlog = mx + np.log2(np.exp2(lp - mx[:, None]).sum(axis=1)) - math.log2(m)
        vals[done : done + b] = -qlog / n
        done += b
    mean = float(vals.mean())
    stderr = float(vals.std(ddof=1) / math.sqrt(trials)) if trials > 1 else 0.0
    return mean, stderr


def _check_rate_regime(cfg: ExperimentConfig, rate: float) -> None:
    stats = single_letter_stats(cfg.channel, cfg.p0)
    if abs(rate - stats.i0_xy) < 1e-6:
        raise ConfigError(
            f"rate {rate} is within 1e-6 of I0(X;Y) = {stats.i0_xy:.9f}; "
            "the transition point is not characterized"
        )


def cond_entropy_rate(cfg: ExperimentConfig) -> ExperimentReport:
    """Per-codebook exact (or flagged Monte Carlo) entropy rate (1/n) H(Y^n | cb)."""
    rate = cfg.rate
    _check_rate_regime(cfg, rate)
    stats = single_letter_stats(cfg.channel, cfg.p0)
    report = ExperimentReport(
        name="theorem3_cond_entropy",
        columns=["n", "codebook_idx", "H_rate_exact", "stderr", "ref_H0Y", "ref_RplusH0YgX"],
        metadata=cfg.metadata(),
    )
    radix = cfg.channel.output.size
    for n in cfg.n_grid:
        exact = radix**n <= exactlaw.CAP_OUTPUT_ENUM
        if not exact:
            report.metadata[f"method_n{n}"] = f"mc(trials={cfg.trials})"

        def job(idx: int):
            cb = codebook_for(cfg, rate, n, idx)
            if exact:
                return _entropy_rate_exact(cb, cfg.channel), 0.0
            return _entropy_rate_mc(
                cb, cfg.channel, cfg.trials, derive_seed(cfg.seed, _TAG_MC_OUTPUT, n, idx)
            )

        results = _pmap(job, list(range(cfg.codebooks)), cfg.workers)
        for idx, (est, stderr) in enumerate(results):
            report.add(n, idx, est, stderr, stats.h0_y, rate + stats.h0_y_given_x)
    return report


def unconditional_entropy_rate(ch: Dmc, p0: Pmf, eps: float, n: int) -> float:
    """Exact (1/n) H(Y^n) when X^n is the typicality-conditioned i.i.d. input.

    The output law is permutation invariant, so the sum runs over output type
    classes with an inner sum over joint compositions; no codebook sampling
    is involved because codewords are i.i.d. and the message is uniform.
    """
    kx, ky = ch.input.size, ch.output.size
    denom = typ.prob_typical_set(p0, n, eps)
    if denom == 0.0:
        raise EmptyTypicalSet(f"empty typical set for n={n}, eps={eps}")
    x_windows = typ.strong_windows(n, p0.probs, eps)
    logp0 = np.where(p0.probs > 0, np.log2(np.maximum(p0.probs, 1e-300)), 0.0)
    log_t = np.where(ch.transition > 0, np.log2(np.maximum(ch.transition, 1e-300)), 0.0)
    if math.comb(n + ky - 1, ky - 1) > CAP_COMPOSITION_WORK:
        raise CapExceeded("output composition count exceeds cap")

    h = 0.0
    work = 0
    for t in typ.bounded_compositions(n, [(0, n)] * ky):
        # per-sequence probability of outputs with composition t
        p_seq = 0.0
        cols = list(t)
        kmat = np.zeros((kx, ky), dtype=np.int64)

        def rec(b: int, weight: float):
            nonlocal p_seq, work
            if b == ky:
                rows = kmat.sum(axis=1)
                for a in range(kx):
                    if not x_windows[a][0] <= rows[a] <= x_windows[a][1]:
                        return
                w = weight
                for a in range(kx):
                    if rows[a]:
                        w += int(rows[a]) * logp0[a]
                p_seq += exp2(w)
                return
            per_cell = [(0, min(cols[b], x_windows[a][1])) for a in range(kx)]
            for comp in typ.bounded_compositions(cols[b], per_cell):
                work += 1
                if work > CAP_COMPOSITION_WORK:
                    raise CapExceeded("joint composition work exceeds cap")
                w = weight + typ.log2_multinomial(cols[b], comp)
                skip = False
                for a in range(kx):
                    if comp[a]:
                        if ch.transition[a, b] == 0.0:
                            skip = True
                            break
                        w += comp[a] * log_t[a, b]
                if skip:
                    continue
                kmat[:, b] = comp
                rec(b + 1, w)
            kmat[:, b] = 0

        rec(0, 0.0)
        p_seq /= denom
        if p_seq > 0:
            h += typ.exact_multinomial(n, t) * p_seq * (-math.log2(p_seq))
    return h / n


# ---------------------------------------------------------------------------
# lemma 4: joint typicality of the conditioned input process
# ---------------------------------------------------------------------------


def _joint_typicality_exact(ch: Dmc, p0: Pmf, eps: float, n: int) -> float:
    kx, ky = ch.input.size, ch.output.size
    denom = typ.prob_typical_set(p0, n, eps)
    if denom == 0.0:
        raise EmptyTypicalSet(f"empty typical set for n={n}, eps={eps}")
    x_windows = typ.strong_windows(n, p0.probs, eps)
    joint = p0.probs[:, None] * ch.transition
    cells = joint.reshape(-1)
    k = cells.size

    cell_windows: list[tuple[int, int]] = []
    for p in cells:
        if p == 0.0:
            cell_windows.append((0, 0))
            continue
        ok = [c for c in range(n + 1) if abs(c / n - p) < eps / k]
        if not ok:
            return 0.0
        cell_windows.append((ok[0], ok[-1]))

    logp0 = np.where(p0.probs > 0, np.log2(np.maximum(p0.probs, 1e-300)), 0.0)
    log_t = np.where(ch.transition > 0, np.log2(np.maximum(ch.transition, 1e-300)), 0.0)
    total = 0.0
    for flat in typ.bounded_compositions(n, cell_windows):
        kmat = np.array(flat, dtype=np.int64).reshape(kx, ky)
        rows = kmat.sum(axis=1)
        ok = True
        for a in range(kx):
            if not x_windows[a][0] <= rows[a] <= x_windows[a][1]:
                ok = False
                break
        if not ok:
            continue
        w = typ.log2_multinomial(n, rows)
        for a in range(kx):
            if rows[a]:
                w += int(rows[a]) * logp0[a]
                w += typ.log2_multinomial(int(rows[a]), kmat[a])
                for b in range(ky):
                    if kmat[a, b]:
                        w += int(kmat[a, b]) * log_t[a, b]
        total += exp2(w)
    return total / denom


def _joint_typicality_mc(
    ch: Dmc, p0: Pmf, eps: float, n: int, trials: int, seed: int
) -> tuple[float, float]:
    from .channel import JointPmf, simulate_output
    from .codebook import _draw_until_typical

    rng = np.random.default_rng(seed)
    windows = typ.strong_windows(n, p0.probs, eps)
    if windows is None:
        raise EmptyTypicalSet(f"empty typical set for n={n}, eps={eps}")
    lo = np.array([w[0] for w in windows])
    hi = np.array([w[1] for w in windows])
    if not int(lo.sum()) <= n <= int(hi.sum()):
        raise EmptyTypicalSet(f"empty typical set for n={n}, eps={eps}")
    cdf = np.cumsum(p0.probs)
    cdf[-1] = 1.0
    jp = JointPmf.from_input_and_channel(p0, ch)
    hits = 0
    for _ in range(trials):
        sym = _draw_until_typical(rng, n, cdf, lo, hi, p0.alphabet.size)
        x = Sequence(p0.alphabet, sym.astype(np.int64))
        y = simulate_output(x, ch, int(rng.integers(0, 2**63)))
        if typ.is_jointly_typical(x, y, jp, eps):
            hits += 1
    p = hits / trials
    return p, math.sqrt(max(p * (1 - p), 0.0) / trials)


def joint_typicality_rate(cfg: ExperimentConfig, force_mc: bool = False) -> ExperimentReport:
    """Pr((X^n, Y^n) jointly typical) per n, exact by type DP unless forced MC."""
    report = ExperimentReport(
        name="lemma4_joint_typicality",
        columns=["n", "prob_jointly_typical", "method", "trials", "stderr"],
        metadata=cfg.metadata(),
    )
    for n in cfg.n_grid:
        if force_mc:
            p, se = _joint_typicality_mc(
                cfg.channel, cfg.p0, cfg.epsilon, n, cfg.trials,
                derive_seed(cfg.seed, _TAG_MC_JOINT, n),
            )
            report.add(n, p, "mc", cfg.trials, se)
        else:
            p = _joint_typicality_exact(cfg.channel, cfg.p0, cfg.epsilon, n)
            report.add(n, p, "exact", 0, 0.0)
    return report


# ---------------------------------------------------------------------------
# fano: maximum-likelihood decoding of the message index
# ---------------------------------------------------------------------------


def ml_decode(y: Sequence, cb: Codebook, ch: Dmc) -> int:
    """argmax_w p(y | x_w); ties resolve to the smallest message index.

    Candidates within a small log-domain tolerance of the float maximum are
    re-compared with exact rational arithmetic, so mathematical ties (for a
    BSC: equal Hamming distance) follow the smallest-index rule rather than
    float summation noise.
    """
    if y.n != cb.n:
        raise ConfigError(f"length mismatch: {y.n} vs {cb.n}")
    kx, ky = ch.input.size, ch.output.size
    log_t = np.where(ch.transition > 0, np.log2(np.maximum(ch.transition, 1e-300)), -np.inf)
    kmats = np.zeros((cb.num_words, kx, ky), dtype=np.int64)
    lp = np.zeros(cb.num_words, dtype=np.float64)
    for a in range(kx):
        wa = cb.words == a
        for b in range(ky):
            counts = np.count_nonzero(wa & (y.symbols == b), axis=1)
            kmats[:, a, b] = counts
            if log_t[a, b] == -np.inf:
                lp[counts > 0] = -np.inf
            else:
                lp = lp + counts * log_t[a, b]
    best = float(lp.max())
    if best == -np.inf:
        return 0
    cand = np.flatnonzero(lp >= best - 1e-9)
    if cand.size == 1:
        return int(cand[0])
    from fractions import Fraction

    best_val = None
    best_w = int(cand[0])
    for w in cand:
        val = Fraction(1)
        for a in range(kx):
            for b in range(ky):
                c = int(kmats[w, a, b])
                if c:
                    val *= Fraction(float(ch.transition[a, b])) ** c
        if best_val is None or val > best_val:
            best_val = val
            best_w = int(w)
    return best_w


def fano_per_codebook(cb: Codebook, ch: Dmc) -> tuple[float, float]:
    """(P_e under ML, H(W | Y^n, cb)) computed exactly over all outputs."""
    correct = exactlaw.ml_correct_mass(cb, ch)
    p_e = 1.0 - correct
    q = exactlaw.output_law_given_codebook(cb, ch)
    h_y = exactlaw.entropy_bits_of_law(q)
    row_ent = np.array([entropy_bits(ch.transition[a]) for a in range(ch.input.size)])
    counts = np.stack(
        [np.count_nonzero(cb.words == a, axis=1) for a in range(ch.input.size)], axis=1
    )
    h_y_given_w = float(np.mean(counts @ row_ent))
    h_w_given_y = math.log2(cb.num_words) + h_y_given_w - h_y
    return p_e, max(h_w_given_y, 0.0)


def fano_report(cfg: ExperimentConfig) -> ExperimentReport:
    """Exact error probability and posterior entropy, with the inequality record."""
    rate = cfg.rate
    report = ExperimentReport(
        name="fano_ml_decoding",
        columns=["n", "codebook_idx", "p_error", "h_w_given_y", "fano_bound", "holds"],
        metadata=cfg.metadata(),
    )
    for n in cfg.n_grid:
        def job(idx: int):
            cb = codebook_for(cfg, rate, n, idx)
            p_e, h = fano_per_codebook(cb, cfg.channel)
            bits = int(math.floor(n * rate + 1e-12))
            bound = 1.0 + p_e * bits
            return p_e, h, bound

        results = _pmap(job, list(range(cfg.codebooks)), cfg.workers)
        for idx, (p_e, h, bound) in enumerate(results):
            report.add(n, idx, p_e, h, bound, h <= bound)
    return report


# ---------------------------------------------------------------------------
# lemma 6: input entropy rate given the codebook
# ---------------------------------------------------------------------------


def input_entropy_trend(cfg: ExperimentConfig) -> ExperimentReport:
    rate = cfg.rate
    report = ExperimentReport(
        name="lemma6_input_entropy",
        columns=["n", "codebooks", "mean_input_entropy_rate", "target_rate", "regular_fraction"],
        metadata=cfg.metadata(),
    )
    for n in cfg.n_grid:
        def job(idx: int):
            cb = codebook_for(cfg, rate, n, idx)
            return input_entropy_rate(cb), is_regular_codebook(cb, cfg.p0, cfg.epsilon)

        results = _pmap(job, list(range(cfg.codebooks)), cfg.workers)
        mean_rate = sum(r for r, _ in results) / cfg.codebooks
        regular = sum(1 for _, reg in results if reg) / cfg.codebooks
        target = int(math.floor(n * rate + 1e-12)) / n
        report.add(n, cfg.codebooks, mean_rate, target, regular)
    return report


# ---------------------------------------------------------------------------
# rate sweep across the transition
# ---------------------------------------------------------------------------


def sweep_report(cfg: ExperimentConfig) -> ExperimentReport:
    """Mean conditional entropy rate for each rate in the grid."""
    stats = single_letter_stats(cfg.channel, cfg.p0)
    report = ExperimentReport(
        name="sweep_cond_entropy",
        columns=["R", "n", "mean_H_rate", "ref_H0Y", "ref_RplusH0YgX", "regime"],
        metadata=cfg.metadata(),
    )
    radix = cfg.channel.output.size
    for rate in cfg.rates:
        _check_rate_regime(cfg, rate)
    for rate in cfg.rates:
        for n in cfg.n_grid:
            exact = radix**n <= exactlaw.CAP_OUTPUT_ENUM

            def job(idx: int):
                cb = codebook_for(cfg, rate, n, idx)
                if exact:
                    return _entropy_rate_exact(cb, cfg.channel)
                return _entropy_rate_mc(
                    cb, cfg.channel, cfg.trials,
                    derive_seed(cfg.seed, _TAG_MC_OUTPUT, n, idx),
                )[0]

            results = _pmap(job, list(range(cfg.codebooks)), cfg.workers)
            mean_rate = sum(results) / cfg.codebooks
            regime = "above" if rate > stats.i0_xy else "below"
            report.add(rate, n, mean_rate, stats.h0_y, rate + stats.h0_y_given_x, regime)
    return report
