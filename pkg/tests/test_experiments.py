import collections
import math

import numpy as np
import pytest

from aeplab import exactlaw
from aeplab import typicality as typ
from aeplab.channel import Alphabet, Pmf, Sequence, entropy_bits, single_letter_stats
from aeplab.channels import bsc, identity_channel, uniform_pmf, useless_channel
from aeplab.codebook import Codebook, generate_codebook
from aeplab.errors import CapExceeded, ConfigError, EmptyTypicalSet
from aeplab.experiments import (
    ExperimentConfig,
    codebook_for,
    cond_entropy_rate,
    conditional_law_dense,
    equipartition_report,
    fano_per_codebook,
    fano_report,
    input_entropy_trend,
    joint_typicality_rate,
    ml_decode,
    output_dist_given_E,
    sweep_report,
    theorem1_report,
    typical_codebook_rate,
    unconditional_entropy_rate,
    vc_bound,
)
from aeplab.report import render_csv

from conftest import (
    brute_channel_probs,
    brute_cond_typical,
    brute_seq_probs,
    brute_strongly_typical,
    enum_sequences,
    seq_of,
)

UNIF2 = Pmf(Alphabet.of("01"), np.array([0.5, 0.5]))


def make_cb(words, n, rate=1.0, eps=2.0):
    return Codebook(Alphabet.of("01"), n, rate, np.array(words, dtype=np.uint8), eps, 0)


def brute_conditional_law(cb, ch, eps):
    """Per-sequence Pr(y | E, cb) by full enumeration."""
    n = cb.n
    seqs = enum_sequences(ch.output.size, n)
    q = np.zeros(seqs.shape[0])
    for w in range(cb.num_words):
        x = cb.words[w].astype(np.int64)
        pe = typ.prob_typical_noise(seq_of(ch.input, x), ch, eps)
        mask = np.array(
            [bool(brute_cond_typical(x[None, :], seqs[i], ch.transition, eps)[0]) for i in range(seqs.shape[0])]
        )
        probs = brute_channel_probs(x, seqs, ch.transition)
        q[mask] += probs[mask] / pe
    return q / cb.num_words


class TestOutputDistGivenE:
    def test_identity_two_words(self):
        ch = identity_channel(2)
        cb = make_cb([[0, 1], [1, 0]], 2)
        classes = output_dist_given_E(cb, ch, UNIF2, 2.0)
        by_counts = {c.counts: c for c in classes}
        assert by_counts[(1, 1)].mass == pytest.approx(1.0, abs=1e-12)
        assert sum(c.mass for c in classes) == pytest.approx(1.0, abs=1e-12)

    def test_single_word_point_mass(self):
        ch = identity_channel(2)
        cb = make_cb([[0, 1, 0, 1]], 4, rate=0.0)
        classes = output_dist_given_E(cb, ch, UNIF2, 2.0)
        masses = {c.counts: c.mass for c in classes}
        assert masses[(2, 2)] == pytest.approx(1.0, abs=1e-12)

    @pytest.mark.parametrize("eps", [0.2, 0.5])
    @pytest.mark.parametrize("seed", [1, 2])
    def test_matches_brute_force(self, eps, seed):
        ch = bsc(0.2)
        cb = generate_codebook(UNIF2, 6, 0.5, eps, seed=seed)
        q = brute_conditional_law(cb, ch, eps)
        seqs = enum_sequences(2, 6)
        ones = seqs.sum(axis=1)
        classes = output_dist_given_E(cb, ch, UNIF2, eps)
        total = 0.0
        for c in classes:
            expected = q[ones == c.counts[1]].sum()
            assert c.mass == pytest.approx(expected, rel=1e-9, abs=1e-12)
            total += c.mass
        assert total == pytest.approx(1.0, abs=1e-9)


class TestConditionalLawDense:
    @pytest.mark.parametrize("eps", [0.2, 0.5, 1.0])
    def test_matches_brute_force(self, eps):
        ch = bsc(0.2)
        cb = generate_codebook(UNIF2, 6, 0.5, eps, seed=3)
        dense = conditional_law_dense(cb, ch, eps)
        brute = brute_conditional_law(cb, ch, eps)
        assert np.max(np.abs(dense - brute)) < 1e-12

    def test_mass_sums_to_one(self):
        ch = bsc(0.1)
        cb = generate_codebook(UNIF2, 10, 0.5, 0.3, seed=5)
        q = conditional_law_dense(cb, ch, 0.3)
        assert q.sum() == pytest.approx(1.0, abs=1e-9)


class TestEquipartition:
    def test_uniform_coverage_zero_spread(self):
        # codebook = the whole typical set once: conditional law uniform on it
        ch = identity_channel(2)
        eps = 0.2
        n = 4
        seqs = enum_sequences(2, n)
        mask = brute_strongly_typical(seqs, UNIF2.probs, eps)
        cb = make_cb(seqs[mask], n, rate=None or math.log2(int(mask.sum())) / n, eps=eps)
        st = equipartition_report(cb, ch, UNIF2, eps)
        assert st.spread == pytest.approx(0.0, abs=1e-12)
        assert st.l_mean == pytest.approx(math.log2(int(mask.sum())) / n, abs=1e-12)

    def test_single_codeword(self):
        ch = identity_channel(2)
        cb = make_cb([[0, 1, 0, 1]], 4, rate=0.0)
        st = equipartition_report(cb, ch, UNIF2, 0.2)
        assert st.spread == 0.0
        assert st.positive_typical == 1
        assert st.l_min == pytest.approx(0.0, abs=1e-12)  # point mass

    def test_rate_contrast_small(self):
        ch, p0 = bsc(0.1), UNIF2
        cfg = ExperimentConfig(
            channel=ch, p0=p0, epsilon=0.1, n_grid=(10,), rates=(0.3, 0.8),
            codebooks=3, seed=11,
        )
        rep = theorem1_report(cfg)
        spreads = collections.defaultdict(list)
        for row in rep.rows:
            spreads[row[1]].append(row[3])
        assert sum(spreads[0.8]) / 3 < sum(spreads[0.3]) / 3


class TestTypicalCodebookRate:
    def test_threshold_vacuous_full_pass(self):
        ch = bsc(0.1)
        cfg = ExperimentConfig(
            channel=ch, p0=UNIF2, epsilon=0.3, n_grid=(6,), rates=(0.5,),
            codebooks=10, seed=2,
        )
        rep = typical_codebook_rate(cfg)
        row = rep.rows[0]
        assert row[5] >= 1.0  # threshold
        assert row[2] == 1.0  # pass fraction

    def test_degenerate_p0(self):
        ch = bsc(0.1)
        p = Pmf(ch.input, np.array([1.0, 0.0]))
        cfg = ExperimentConfig(
            channel=ch, p0=p, epsilon=0.3, n_grid=(6,), rates=(0.4,),
            codebooks=5, seed=2,
        )
        rep = typical_codebook_rate(cfg)
        assert rep.rows[0][2] == 1.0
        assert rep.rows[0][4] == pytest.approx(0.0, abs=1e-12)  # max deviation


class TestCondEntropyRate:
    def test_identity_two_words(self):
        ch = identity_channel(2)
        cb = make_cb([[0, 1], [1, 0]], 2, rate=0.5)
        q = exactlaw.output_law_given_codebook(cb, ch)
        h = exactlaw.entropy_bits_of_law(q) / 2
        assert h == pytest.approx(0.5, abs=1e-12)

    def test_useless_channel_h0y(self):
        ch = useless_channel(2)
        cb = generate_codebook(UNIF2, 8, 0.5, 0.3, seed=1)
        q = exactlaw.output_law_given_codebook(cb, ch)
        assert exactlaw.entropy_bits_of_law(q) / 8 == pytest.approx(1.0, abs=1e-12)

    @pytest.mark.parametrize("n", [4, 6])
    def test_matches_brute_force(self, n):
        ch = bsc(0.2)
        cb = generate_codebook(UNIF2, n, 0.5, 0.4, seed=7)
        q = exactlaw.output_law_given_codebook(cb, ch)
        seqs = enum_sequences(2, n)
        qb = np.zeros(seqs.shape[0])
        for w in range(cb.num_words):
            qb += brute_channel_probs(cb.words[w].astype(np.int64), seqs, ch.transition)
        qb /= cb.num_words
        assert np.max(np.abs(q - qb)) < 1e-13
        hb = float(-(qb[qb > 0] * np.log2(qb[qb > 0])).sum()) / n
        assert exactlaw.entropy_bits_of_law(q) / n == pytest.approx(hb, rel=1e-12)

    def test_mc_estimator_agrees_with_exact(self):
        from aeplab.experiments import _entropy_rate_exact, _entropy_rate_mc

        ch = bsc(0.1)
        cb = generate_codebook(UNIF2, 10, 0.5, 0.3, seed=2)
        exact = _entropy_rate_exact(cb, ch)
        est, stderr = _entropy_rate_mc(cb, ch, trials=4000, seed=123)
        assert stderr > 0
        assert abs(est - exact) < 5 * stderr
        again = _entropy_rate_mc(cb, ch, trials=4000, seed=123)
        assert again == (est, stderr)

    def test_refuses_rate_at_transition(self):
        ch = bsc(0.1)
        i0 = single_letter_stats(ch, UNIF2).i0_xy
        cfg = ExperimentConfig(
            channel=ch, p0=UNIF2, epsilon=0.1, n_grid=(6,), rates=(i0,),
            codebooks=2, seed=1,
        )
        with pytest.raises(ConfigError, match="I0"):
            cond_entropy_rate(cfg)

    def test_report_schema(self):
        ch = bsc(0.1)
        cfg = ExperimentConfig(
            channel=ch, p0=UNIF2, epsilon=0.1, n_grid=(6,), rates=(0.3,),
            codebooks=2, seed=1,
        )
        rep = cond_entropy_rate(cfg)
        assert rep.columns == ["n", "codebook_idx", "H_rate_exact", "stderr", "ref_H0Y", "ref_RplusH0YgX"]
        assert len(rep.rows) == 2


class TestUnconditionalEntropyRate:
    def test_identity_small(self):
        ch = identity_channel(2)
        assert unconditional_entropy_rate(ch, UNIF2, 0.1, 2) == pytest.approx(0.5, abs=1e-12)

    def test_useless_channel(self):
        ch = useless_channel(2)
        for n in (4, 6):
            assert unconditional_entropy_rate(ch, UNIF2, 0.3, n) == pytest.approx(1.0, abs=1e-11)

    def test_wide_window_iid(self):
        ch = bsc(0.1)
        assert unconditional_entropy_rate(ch, UNIF2, 2.5, 8) == pytest.approx(1.0, abs=1e-9)

    @pytest.mark.parametrize("eps", [0.2, 0.4])
    def test_matches_brute_force(self, eps):
        ch = bsc(0.3)
        n = 6
        seqs = enum_sequences(2, n)
        mask = brute_strongly_typical(seqs, UNIF2.probs, eps)
        px = brute_seq_probs(seqs, UNIF2.probs) * mask
        px /= px.sum()
        qy = np.zeros(seqs.shape[0])
        for xi in np.flatnonzero(mask):
            qy += px[xi] * brute_channel_probs(seqs[xi], seqs, ch.transition)
        hb = float(-(qy[qy > 0] * np.log2(qy[qy > 0])).sum()) / n
        assert unconditional_entropy_rate(ch, UNIF2, eps, n) == pytest.approx(hb, rel=1e-10)


class TestJointTypicalityRate:
    def test_identity_small(self):
        ch = identity_channel(2)
        cfg = ExperimentConfig(
            channel=ch, p0=UNIF2, epsilon=0.1, n_grid=(2,), rates=(0.4,),
            codebooks=1, seed=1,
        )
        rep = joint_typicality_rate(cfg)
        assert rep.rows[0][1] == pytest.approx(1.0, abs=1e-12)

    def test_huge_eps(self):
        ch = bsc(0.2)
        cfg = ExperimentConfig(
            channel=ch, p0=UNIF2, epsilon=4.0, n_grid=(5,), rates=(0.4,),
            codebooks=1, seed=1,
        )
        rep = joint_typicality_rate(cfg)
        assert rep.rows[0][1] == pytest.approx(1.0, abs=1e-10)

    def test_trend_and_mc_agreement(self):
        ch = bsc(0.1)
        cfg = ExperimentConfig(
            channel=ch, p0=UNIF2, epsilon=0.3, n_grid=(8, 16), rates=(0.4,),
            codebooks=1, trials=4000, seed=5,
        )
        exact = joint_typicality_rate(cfg)
        assert exact.rows[1][1] > exact.rows[0][1]
        mc = joint_typicality_rate(cfg, force_mc=True)
        for (n1, p1, m1, t1, se1), (n2, p2, m2, t2, se2) in zip(exact.rows, mc.rows):
            assert m1 == "exact" and m2 == "mc"
            assert abs(p1 - p2) < 5 * max(se2, 1e-3)


class TestMlDecodeAndFano:
    def test_identity_decodes_self(self):
        ch = identity_channel(2)
        cb = make_cb([[0, 0], [0, 1], [1, 0], [1, 1]], 2)
        for w in range(4):
            assert ml_decode(cb.word(w), cb, ch) == w

    def test_bsc_is_min_distance(self):
        ch = bsc(0.2)
        cb = generate_codebook(UNIF2, 6, 0.5, 0.4, seed=13)
        seqs = enum_sequences(2, 6)
        for i in range(seqs.shape[0]):
            y = seq_of(ch.output, seqs[i])
            w = ml_decode(y, cb, ch)
            dists = (cb.words.astype(np.int64) != seqs[i][None, :]).sum(axis=1)
            assert dists[w] == dists.min()
            assert w == int(np.argmin(dists))  # same tie rule: first minimum

    def test_tie_to_smallest_index(self):
        ch = identity_channel(2)
        cb = make_cb([[0, 1], [0, 1], [1, 0]], 2)
        assert ml_decode(seq_of(ch.output, [0, 1]), cb, ch) == 0

    def test_identity_distinct_zero_error(self):
        ch = identity_channel(2)
        cb = make_cb([[0, 0], [0, 1], [1, 0], [1, 1]], 2)
        p_e, h = fano_per_codebook(cb, ch)
        assert p_e == pytest.approx(0.0, abs=1e-12)
        assert h == pytest.approx(0.0, abs=1e-9)

    def test_all_words_identical(self):
        ch = bsc(0.1)
        cb = make_cb([[0, 1, 0, 1]] * 4, 4, rate=0.5)
        p_e, h = fano_per_codebook(cb, ch)
        bits = 2  # floor(4 * 0.5)
        assert p_e == pytest.approx(1 - 2.0**-bits, abs=1e-12)
        assert h == pytest.approx(bits, abs=1e-9)
        assert h <= 1 + p_e * bits

    def test_fano_report_inequality(self):
        ch = bsc(0.1)
        cfg = ExperimentConfig(
            channel=ch, p0=UNIF2, epsilon=0.1, n_grid=(6, 8), rates=(0.4,),
            codebooks=5, seed=3,
        )
        rep = fano_report(cfg)
        for row in rep.rows:
            assert bool(row[5])
            assert row[3] <= row[4]


class TestConditionalSurprisalSandwich:
    @staticmethod
    def _window_slack(ch, p0, eps, n):
        """Extreme |{-(1/n) log2 p(y|x)/Pr(E|x)} - H0(Y|X)| over typical word
        types and conditionally-typical outputs, from the window arithmetic."""
        st = single_letter_stats(ch, p0)
        win = typ.strong_windows(n, p0.probs, eps)
        logT = np.where(ch.transition > 0, np.log2(np.maximum(ch.transition, 1e-300)), 0.0)
        worst = 0.0
        for counts in typ.bounded_compositions(n, win):
            pe = typ.prob_typical_noise_of_type(counts, ch, eps, n)
            if pe == 0.0:
                continue
            lo_total = hi_total = 0.0
            for a, r_a in enumerate(counts):
                if r_a == 0:
                    continue
                w = typ.cond_row_windows(r_a, ch.transition[a], n, eps, ch.output.size)
                vals = [
                    sum(k * logT[a, b] for b, k in enumerate(comp))
                    for comp in typ.bounded_compositions(r_a, w)
                ]
                lo_total += min(vals)
                hi_total += max(vals)
            l_hi = -(lo_total - math.log2(pe)) / n
            l_lo = -(hi_total - math.log2(pe)) / n
            worst = max(worst, abs(l_hi - st.h0_y_given_x), abs(l_lo - st.h0_y_given_x))
        return worst

    @pytest.mark.parametrize("eps", [0.2, 0.4])
    def test_exhaustive_pairs_within_window_slack(self, eps):
        # every (typical word, conditionally typical output) surprisal deviates
        # from H0(Y|X) by at most the window-derived slack, n = 8 exhaustive
        ch = bsc(0.1)
        n = 8
        st = single_letter_stats(ch, UNIF2)
        delta = self._window_slack(ch, UNIF2, eps, n)
        seqs = enum_sequences(2, n)
        strong = brute_strongly_typical(seqs, UNIF2.probs, eps)
        hit = 0
        observed = 0.0
        for xi in np.flatnonzero(strong):
            x = seq_of(ch.input, seqs[xi])
            for yi in range(2**n):
                y = seq_of(ch.output, seqs[yi])
                p = typ.cond_output_prob_given_E(y, x, ch, eps)
                if p > 0:
                    dev = abs(-math.log2(p) / n - st.h0_y_given_x)
                    observed = max(observed, dev)
                    assert dev <= delta + 1e-12
                    hit += 1
        assert hit > 0
        # the window extremes are attained, so the two computations agree
        assert observed == pytest.approx(delta, rel=1e-9)


class TestVcBound:
    def test_uniform_n4(self):
        assert vc_bound(UNIF2, 4, 0.2) == pytest.approx(math.log2(6), abs=1e-9)

    def test_huge_eps(self):
        assert vc_bound(UNIF2, 5, 10.0) == pytest.approx(5.0, abs=1e-9)

    def test_degenerate(self):
        p = Pmf(Alphabet.of("01"), np.array([1.0, 0.0]))
        assert vc_bound(p, 7, 0.3) == pytest.approx(0.0, abs=1e-12)

    def test_empty_propagates(self):
        with pytest.raises(EmptyTypicalSet):
            vc_bound(UNIF2, 9, 0.1)


class TestInputEntropyTrend:
    def test_degenerate_zero(self):
        ch = bsc(0.1)
        p = Pmf(ch.input, np.array([1.0, 0.0]))
        cfg = ExperimentConfig(
            channel=ch, p0=p, epsilon=0.3, n_grid=(6,), rates=(0.4,),
            codebooks=4, seed=9,
        )
        rep = input_entropy_trend(cfg)
        assert rep.rows[0][2] == pytest.approx(0.0, abs=1e-12)

    def test_schema_and_target(self):
        ch = bsc(0.1)
        cfg = ExperimentConfig(
            channel=ch, p0=UNIF2, epsilon=0.3, n_grid=(8,), rates=(0.5,),
            codebooks=4, seed=9,
        )
        rep = input_entropy_trend(cfg)
        assert rep.rows[0][3] == pytest.approx(0.5)
        assert rep.rows[0][2] <= rep.rows[0][3] + 1e-12


class TestSweep:
    def test_rows_and_regimes(self):
        ch = bsc(0.1)
        cfg = ExperimentConfig(
            channel=ch, p0=UNIF2, epsilon=0.1, n_grid=(6,), rates=(0.3, 0.8),
            codebooks=2, seed=4,
        )
        rep = sweep_report(cfg)
        regimes = {row[0]: row[5] for row in rep.rows}
        assert regimes[0.3] == "below" and regimes[0.8] == "above"


class TestDeterminism:
    def test_workers_do_not_change_csv(self):
        ch = bsc(0.1)
        texts = []
        for workers in (1, 4):
            cfg = ExperimentConfig(
                channel=ch, p0=UNIF2, epsilon=0.1, n_grid=(6, 10), rates=(0.3, 0.8),
                codebooks=4, seed=123, workers=workers,
            )
            texts.append(render_csv(theorem1_report(cfg)))
        assert texts[0] == texts[1]

    def test_codebook_for_matched_across_rates(self):
        ch = bsc(0.1)
        cfg = ExperimentConfig(
            channel=ch, p0=UNIF2, epsilon=0.1, n_grid=(10,), rates=(0.3, 0.8),
            codebooks=2, seed=55,
        )
        low = codebook_for(cfg, 0.3, 10, 0)
        high = codebook_for(cfg, 0.8, 10, 0)
        assert np.array_equal(low.words, high.words[: low.num_words])


class TestCaps:
    def test_dense_law_cap(self):
        ch = bsc(0.1)
        cb = generate_codebook(UNIF2, 30, 0.2, 0.3, seed=1)
        with pytest.raises(CapExceeded):
            conditional_law_dense(cb, ch, 0.3)

    def test_grid_must_ascend(self):
        ch = bsc(0.1)
        with pytest.raises(ConfigError, match="ascending"):
            ExperimentConfig(
                channel=ch, p0=UNIF2, epsilon=0.1, n_grid=(10, 6), rates=(0.3,), seed=1
            )
