import math

import numpy as np
import pytest

from permll import (
    ClassicKind,
    ClassicSpec,
    DistributionTable,
    EmpiricalData,
    FamilyKind,
    FitOptions,
    GeneratorFamily,
    SearchSide,
    alternating_fit,
    classic_distribution,
    compose,
    empirical,
    enumerate_permutations,
    explicit_L_mle,
    fit_family,
    gof_report,
    identity,
    inverse,
    ipfp_fit,
    is_decomposable,
    perm_index,
    right_invariance_group,
    sample,
    search_relabelling,
)
from permll.errors import SizeError, SupportMismatchError, ValidationError
from permll.subspaces import generators, span_matrix


def random_counts(n, seed, m=2000):
    rng = np.random.default_rng(seed)
    size = math.factorial(n)
    counts = rng.multinomial(m, rng.dirichlet(np.ones(size)))
    return EmpiricalData(n, counts)


class TestEmpirical:
    def test_relative_frequencies(self):
        data = EmpiricalData.from_dict(2, {(1, 2): 3, (2, 1): 1})
        r = empirical(data)
        assert r.probs.tolist() == [0.75, 0.25]
        assert data.m == 4

    def test_rejects_empty_and_negative(self):
        with pytest.raises(ValidationError):
            EmpiricalData(2, np.zeros(2, dtype=np.int64))
        with pytest.raises(ValidationError):
            EmpiricalData(2, np.array([3, -1]))

    def test_options_validation(self):
        with pytest.raises(ValidationError):
            FitOptions(max_cycles=0)
        with pytest.raises(ValidationError):
            FitOptions(marginal_tol=0.0)


class TestIpfp:
    def test_uniform_fixed_point(self):
        r = DistributionTable.uniform(4)
        rep = ipfp_fit(GeneratorFamily(FamilyKind.BI, 4), r)
        assert rep.converged and rep.cycles_used == 1
        assert np.abs(rep.fitted.probs - r.probs).max() < 1e-15

    def test_saturated_returns_input(self):
        r = empirical(random_counts(4, 0))
        rep = ipfp_fit(GeneratorFamily(FamilyKind.SATURATED, 4), r)
        assert np.abs(rep.fitted.probs - r.probs).max() < 1e-12

    def test_likelihood_monotone(self):
        r = empirical(random_counts(4, 1))
        rep = ipfp_fit(GeneratorFamily(FamilyKind.BI, 4), r)
        trace = np.array(rep.loglik_trace)
        assert (np.diff(trace) >= -1e-10).all()

    def test_marginal_fixed_point(self):
        from permll.subspaces import atom_labels

        r = empirical(random_counts(4, 2))
        family = GeneratorFamily(FamilyKind.L, 4)
        rep = ipfp_fit(family, r)
        assert rep.converged
        for board in generators(family):
            labels, natoms = atom_labels(board, 4)
            emp = np.bincount(labels, weights=r.probs, minlength=natoms)
            fit = np.bincount(labels, weights=rep.fitted.probs, minlength=natoms)
            assert 0.5 * np.abs(emp - fit).sum() <= 1e-9

    def test_exact_bi_input_is_fixed_point(self):
        p = classic_distribution(
            ClassicSpec(ClassicKind.MBT, {"alpha": [0.4, 0.3, 0.2, 0.1]}), 4
        )
        rep = ipfp_fit(GeneratorFamily(FamilyKind.BI, 4), p)
        assert np.abs(rep.fitted.probs - p.probs).max() < 1e-9

    def test_structural_zeros_stay_zero(self):
        counts = np.zeros(24, dtype=np.int64)
        counts[0] = 5
        counts[7] = 5
        r = empirical(EmpiricalData(4, counts))
        rep = ipfp_fit(GeneratorFamily(FamilyKind.SATURATED, 4), r)
        assert rep.fitted.probs[1] == 0.0

    def test_log_fitted_in_generator_span(self):
        r = empirical(random_counts(4, 3))
        family = GeneratorFamily(FamilyKind.BI, 4)
        rep = ipfp_fit(family, r)
        logs = np.log(rep.fitted.probs)
        span = span_matrix(generators(family), 4).astype(float)
        resid = logs - span @ np.linalg.lstsq(span, logs, rcond=None)[0]
        assert np.abs(resid).max() < 1e-6

    def test_size_mismatch(self):
        with pytest.raises(SizeError):
            ipfp_fit(GeneratorFamily(FamilyKind.L, 3), DistributionTable.uniform(4))


class TestExplicit:
    def test_idempotent(self):
        r = empirical(random_counts(4, 4))
        once = explicit_L_mle(r).fitted
        twice = explicit_L_mle(once).fitted
        assert np.abs(once.probs - twice.probs).max() < 1e-15

    def test_l_decomposable_input_unchanged(self):
        p = classic_distribution(
            ClassicSpec(ClassicKind.LUCE, {"theta": [0.4, 0.3, 0.2, 0.1]}), 4
        )
        rep = explicit_L_mle(p)
        assert np.abs(rep.fitted.probs - p.probs).max() < 1e-12

    def test_matches_ipfp_likelihood(self):
        for seed in range(20):
            r = empirical(random_counts(4, 100 + seed, m=500))
            a = explicit_L_mle(r)
            b = ipfp_fit(GeneratorFamily(FamilyKind.L, 4), r)
            assert abs(a.log_likelihood - b.log_likelihood) <= 1e-6

    def test_primed_is_inverse_conjugation(self):
        from permll import inverse_distribution, markovianize

        r = empirical(random_counts(4, 5))
        rep = explicit_L_mle(r, primed=True)
        expect = inverse_distribution(markovianize(inverse_distribution(r)))
        assert (rep.fitted.probs == expect.probs).all()


class TestAlternating:
    def test_agrees_with_ipfp_bi(self):
        r = empirical(random_counts(4, 6))
        a = alternating_fit(r)
        b = ipfp_fit(GeneratorFamily(FamilyKind.BI, 4), r)
        assert abs(a.log_likelihood - b.log_likelihood) <= 1e-4

    def test_bi_input_is_fixed_point(self):
        p = classic_distribution(
            ClassicSpec(ClassicKind.MBT, {"alpha": [0.4, 0.3, 0.2, 0.1]}), 4
        )
        rep = alternating_fit(p)
        assert np.abs(rep.fitted.probs - p.probs).max() < 1e-9


class TestGof:
    def test_df_table_n5(self):
        # nominal df for the seven fitted families at n=5
        expect = {
            FamilyKind.L: 70,
            FamilyKind.L_PRIME: 70,
            FamilyKind.L_S: 93,
            FamilyKind.L_S_PRIME: 93,
            FamilyKind.BI: 89,
            FamilyKind.BI_S: 99,
            FamilyKind.UNIFORM: 119,
        }
        data = random_counts(5, 7, m=10000)
        fitted = DistributionTable.uniform(5)
        for kind, df in expect.items():
            rep = gof_report(fitted, data, GeneratorFamily(kind, 5))
            assert rep.df == df
            if rep.df > 0:
                assert rep.u_statistic == pytest.approx(
                    (rep.gof_chi_square - rep.df) / math.sqrt(rep.df)
                )

    def test_support_mismatch(self):
        data = EmpiricalData.from_dict(3, {(1, 2, 3): 5, (3, 2, 1): 5})
        fitted = DistributionTable.point_mass((1, 2, 3))
        with pytest.raises(SupportMismatchError):
            gof_report(fitted, data, GeneratorFamily(FamilyKind.SATURATED, 3))

    def test_saturated_df_zero_and_no_u(self):
        data = random_counts(3, 8, m=60000)
        rep = fit_family(GeneratorFamily(FamilyKind.SATURATED, 3), data)
        assert rep.df == 0 and rep.u_statistic is None
        assert rep.gof_chi_square == pytest.approx(0.0, abs=1e-9)

    def test_counts_loglikelihood(self):
        data = EmpiricalData.from_dict(2, {(1, 2): 3, (2, 1): 1})
        fitted = DistributionTable(2, np.array([0.75, 0.25]))
        rep = gof_report(fitted, data, GeneratorFamily(FamilyKind.SATURATED, 2))
        assert rep.log_likelihood == pytest.approx(3 * math.log(0.75) + math.log(0.25))

    def test_report_json_keys(self):
        data = random_counts(3, 9, m=60000)
        rep = fit_family(GeneratorFamily(FamilyKind.L, 3), data)
        doc = rep.to_json()
        assert set(doc) == {
            "family", "n", "log_likelihood", "gof", "df", "u",
            "cycles", "converged", "max_marginal_gap",
        }


class TestRelabelling:
    def test_group_has_eight_elements(self):
        for n in (4, 5):
            group = right_invariance_group(n)
            assert len(group) == 8
            assert identity(n) in group
            assert tuple(range(n, 0, -1)) in group

    def test_uniform_data_returns_identity(self):
        counts = np.full(24, 10, dtype=np.int64)
        data = EmpiricalData(4, counts)
        sigma, rho, _ = search_relabelling(
            data, GeneratorFamily(FamilyKind.L, 4), SearchSide.BOTH
        )
        assert sigma == identity(4) and rho == identity(4)

    def test_l_data_found_in_group_orbit(self):
        # multistage model with rational stage weights: exact integer counts
        theta = [
            [8 / 16, 4 / 16, 3 / 16, 1 / 16],
            [4 / 8, 3 / 8, 1 / 8],
            [3 / 4, 1 / 4],
            [1.0],
        ]
        p = classic_distribution(ClassicSpec(ClassicKind.MULTISTAGE, {"theta": theta}), 4)
        counts = np.rint(p.probs * 512).astype(np.int64)
        assert counts.sum() == 512
        data = EmpiricalData(4, counts)
        sigma, rho, rep = search_relabelling(
            data, GeneratorFamily(FamilyKind.L, 4), SearchSide.BOTH
        )
        assert rho == identity(4)
        assert sigma in right_invariance_group(4)

    def test_scrambled_mbt_recovered_up_to_invariance(self):
        # integer-weight mbt: counts proportional to the exact distribution
        perms = enumerate_permutations(4)
        alpha = [4, 3, 2, 1]
        counts = np.array(
            [
                int(np.prod([alpha[x - 1] ** (4 - pos - 1) for pos, x in enumerate(pi)]))
                for pi in perms
            ],
            dtype=np.int64,
        )
        data = EmpiricalData(4, counts)
        sigma0, rho0 = (3, 1, 4, 2), (2, 4, 1, 3)
        scrambled = np.empty_like(counts)
        for t, tau in enumerate(perms):
            scrambled[t] = counts[
                perm_index(compose(compose(inverse(rho0), tau), sigma0))
            ]
        sdata = EmpiricalData(4, scrambled)
        family = GeneratorFamily(FamilyKind.BI, 4)
        sigma, rho, rep = search_relabelling(sdata, family, SearchSide.BOTH)
        # undoing the found relabelling must land in the invariance orbit:
        # the doubly relabelled counts come from relabelling by (sigma sigma0, rho rho0)
        group = set(right_invariance_group(4))
        assert compose(sigma, sigma0) in group
        assert compose(rho, rho0) in group
        base = fit_family(family, data)
        assert rep.log_likelihood == pytest.approx(base.log_likelihood, abs=1e-6)

    def test_size_caps(self):
        counts = np.full(math.factorial(7), 1, dtype=np.int64)
        data = EmpiricalData(7, counts)
        with pytest.raises(SizeError):
            search_relabelling(data, GeneratorFamily(FamilyKind.L, 7), SearchSide.BOTH)
