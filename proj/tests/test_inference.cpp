#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "helpers.hpp"
#include "plmcell/errors.hpp"
#include "plmcell/inference.hpp"
#include "plmcell/parallel.hpp"
#include "plmcell/simulation.hpp"

using namespace plmcell;

namespace {

LinearHypothesis drop_last(Eigen::Index p, Eigen::Index k) {
    LinearHypothesis hyp;
    hyp.a = Eigen::MatrixXd::Zero(k, p);
    for (Eigen::Index r = 0; r < k; ++r) hyp.a(r, p - k + r) = 1.0;
    return hyp;
}

}  // namespace

TEST_CASE("t1_statistic arithmetic") {
    CHECK(t1_statistic(1.0, 1.0) == 0.0);
    CHECK(t1_statistic(2.0, 1.0) == doctest::Approx(1.0));
    CHECK_THROWS_AS(t1_statistic(1.0, 0.0), InvalidArgument);
}

TEST_CASE("rank-deficient constraints are rejected") {
    LinearHypothesis hyp;
    hyp.a = Eigen::MatrixXd::Zero(2, 3);
    hyp.a(0, 0) = 1.0;
    hyp.a(1, 0) = 2.0;  // second row is a multiple of the first
    CHECK_THROWS_AS(hyp.validate(3), RankDeficientConstraint);
    hyp.a = Eigen::MatrixXd::Identity(4, 3).topRows(4);
    CHECK_THROWS_AS(hyp.validate(3), RankDeficientConstraint);
}

TEST_CASE("fully constrained fit reduces to pure cell means") {
    rng::Stream s(51, 0);
    const Dataset ds = testutil::random_instance(s, 30, 2);
    const PartitionPlan plan = make_partition(ds, testutil::single_z(), 3);
    LinearHypothesis hyp;
    hyp.a = Eigen::MatrixXd::Identity(2, 2);
    const PlmFit f0 = restricted_fit(ds, plan, hyp);
    CHECK(f0.beta.cwiseAbs().maxCoeff() == 0.0);
    const double expected = center_within_cells(ds.y, plan).squaredNorm();
    CHECK(f0.rss == doctest::Approx(expected).epsilon(1e-12));
}

TEST_CASE("single exclusion equals deleting the column") {
    rng::Stream s(52, 0);
    const Dataset ds = testutil::random_instance(s, 40, 2);
    const PartitionPlan plan = make_partition(ds, testutil::single_z(), 4);
    LinearHypothesis hyp;
    hyp.a = Eigen::MatrixXd::Zero(1, 2);
    hyp.a(0, 1) = 1.0;  // beta_2 = 0
    const PlmFit f0 = restricted_fit(ds, plan, hyp);

    Dataset reduced = ds;
    reduced.x = ds.x.leftCols(1);
    reduced.x_names = {"x1"};
    const PlmFit fr = fit(reduced, plan);
    CHECK(std::abs(f0.beta(0) - fr.beta(0)) < 1e-10);
    CHECK(std::abs(f0.beta(1)) < 1e-12);
    CHECK(f0.rss == doctest::Approx(fr.rss).epsilon(1e-12));
}

TEST_CASE("restricted estimate matches the projection identity") {
    rng::Stream s(53, 0);
    const Dataset ds = testutil::random_instance(s, 50, 4);
    const PartitionPlan plan = make_partition(ds, testutil::single_z(), 5);
    const LinearHypothesis hyp = drop_last(4, 2);
    const PlmFit f1 = fit(ds, plan);
    const PlmFit f0 = restricted_fit(ds, plan, hyp);

    const Eigen::MatrixXd gi = f1.gram.inverse();
    const Eigen::MatrixXd a = hyp.a;
    const Eigen::VectorXd projected =
        f1.beta - gi * a.transpose() * (a * gi * a.transpose()).inverse() * (a * f1.beta);
    CHECK((f0.beta - projected).cwiseAbs().maxCoeff() < 1e-9);
    CHECK((hyp.a * f0.beta).cwiseAbs().maxCoeff() < 1e-10);
    CHECK(f0.rss >= f1.rss - 1e-12);
}

TEST_CASE("nesting and scale invariance over random instances") {
    rng::Stream s(54, 0);
    for (int rep = 0; rep < 25; ++rep) {
        const Eigen::Index p = 2 + static_cast<Eigen::Index>(s.below(3));
        const Eigen::Index n = 30 + static_cast<Eigen::Index>(s.below(30));
        const Dataset ds = testutil::random_instance(s, n, p);
        const PartitionPlan plan = make_partition(ds, testutil::single_z(), 3);
        const LinearHypothesis hyp = drop_last(p, 1 + static_cast<Eigen::Index>(s.below(p - 1)));
        const PlmFit f1 = fit(ds, plan);
        const PlmFit f0 = restricted_fit(ds, plan, hyp);
        const double t = t1_statistic(f0.rss, f1.rss);
        CHECK(f0.rss >= f1.rss - 1e-12);
        CHECK(t >= 0.0);
        CHECK((hyp.a * f0.beta).cwiseAbs().maxCoeff() < 1e-10);

        // Scaling y by a power of two leaves the RSS ratio bit-identical.
        Dataset scaled = ds;
        scaled.y = 4.0 * ds.y;
        const PlmFit g1 = fit(scaled, plan);
        const PlmFit g0 = restricted_fit(scaled, plan, hyp);
        CHECK(t1_statistic(g0.rss, g1.rss) == t);
    }
}

TEST_CASE("t1_test is reproducible across thread counts") {
    DgpSpec spec;
    spec.example = Example::Ex1;
    spec.n = 80;
    spec.seed = 99;
    const Dataset ds = dgp(spec);
    const PartitionPlan plan = make_partition(ds, default_zspec(Example::Ex1), 2);
    const LinearHypothesis hyp = default_hypothesis();

    const TestReport one = t1_test(ds, plan, hyp, 60, 1234, 1);
    const TestReport two = t1_test(ds, plan, hyp, 60, 1234, 2);
    CHECK(one.statistic == two.statistic);
    CHECK(one.bootstrap_draws == two.bootstrap_draws);
    CHECK(*one.p_bootstrap == *two.p_bootstrap);
    CHECK(*one.p_bootstrap >= 1.0 / 61.0);
    CHECK(*one.p_bootstrap <= 1.0);
    CHECK(one.df == 4);
    CHECK(one.scaled_statistic ==
          doctest::Approx((ds.n() - plan.n_cells()) * one.statistic));

    const TestReport none = t1_test(ds, plan, hyp, 0, 1234, 1);
    CHECK(!none.p_bootstrap.has_value());
    CHECK(none.p_asymptotic.has_value());
}

TEST_CASE("bootstrap p-values are roughly uniform under the null") {
    // Level-0.01 KS test of 200 bootstrap p-values against U(0,1).
    const int reps = 200;
    const int n_boot = 99;
    std::vector<double> pvals(reps);
    DgpSpec spec;
    spec.example = Example::Ex1;
    spec.n = 100;
    spec.seed = 2718;
    const LinearHypothesis hyp = default_hypothesis();
    const ZSpec zspec = default_zspec(Example::Ex1);
    parallel_for(reps, 0, [&](std::size_t r) {
        const Dataset ds = dgp_replicate(spec, r);
        const PartitionPlan plan = make_partition(ds, zspec, 5);
        const TestReport rep =
            t1_test(ds, plan, hyp, n_boot, rng::derive_seed(spec.seed, r), 1);
        pvals[r] = *rep.p_bootstrap;
    });
    std::sort(pvals.begin(), pvals.end());
    double ks = 0.0;
    for (int i = 0; i < reps; ++i) {
        ks = std::max(ks, std::abs(pvals[i] - (i + 1.0) / reps));
        ks = std::max(ks, std::abs(pvals[i] - static_cast<double>(i) / reps));
    }
    // critical value at alpha=0.01 is 1.63/sqrt(reps); allow discreteness slack
    CHECK(ks < 1.63 / std::sqrt(static_cast<double>(reps)) + 0.5 / n_boot);
}

TEST_CASE("asymptotic and bootstrap p-values agree at n=400") {
    DgpSpec spec;
    spec.example = Example::Ex1;
    spec.n = 400;
    spec.seed = 4242;
    const Dataset ds = dgp(spec);
    const PartitionPlan plan = make_partition(ds, default_zspec(Example::Ex1), 5);
    const TestReport rep = t1_test(ds, plan, default_hypothesis(), 999, 777, 0);
    CHECK(std::abs(*rep.p_asymptotic - *rep.p_bootstrap) < 0.05);
}

TEST_CASE("gumbel centering constant") {
    const KernelSpec kern = KernelSpec::make(KernelFamily::Epanechnikov);
    CHECK(gumbel_centering(0.1, kern) == doctest::Approx(1.39351).epsilon(1e-4));
    CHECK_THROWS_AS(gumbel_centering(1.0, kern), InvalidArgument);
    CHECK_THROWS_AS(gumbel_centering(0.0, kern), InvalidArgument);
}

TEST_CASE("identical curves give the floor statistic") {
    CurveEstimate c;
    c.grid = Eigen::VectorXd::LinSpaced(11, 0.0, 1.0);
    c.ghat = Eigen::VectorXd::Zero(11);
    c.var_ghat = Eigen::VectorXd::Constant(11, 0.5);
    const KernelSpec kern = KernelSpec::make(KernelFamily::Epanechnikov);
    const double h = 0.2;
    const double stat = t2_statistic(c, c, h, kern, Sided::two);
    const double a = std::sqrt(-2.0 * std::log(h));
    CHECK(stat == doctest::Approx(-a * gumbel_centering(h, kern)));
    CHECK(stat < 0.0);

    CurveEstimate zero_var = c;
    zero_var.var_ghat(3) = 0.0;
    CHECK_THROWS_AS(t2_statistic(zero_var, zero_var, h, kern, Sided::two), InvalidArgument);
    CHECK_THROWS_AS(t2_statistic(c, c, 1.2, kern, Sided::two), InvalidArgument);
}

TEST_CASE("confidence band brackets the difference and widens as alpha falls") {
    CurveEstimate c1, c0;
    c1.grid = c0.grid = Eigen::VectorXd::LinSpaced(21, 0.0, 1.0);
    c1.ghat = c1.grid.array().sin();
    c0.ghat = Eigen::VectorXd::Zero(21);
    c1.var_ghat = Eigen::VectorXd::Constant(21, 0.3);
    c0.var_ghat = Eigen::VectorXd::Constant(21, 0.2);
    const KernelSpec kern = KernelSpec::make(KernelFamily::Epanechnikov);
    const double h = 0.15;

    const Band narrow = confidence_band(c1, c0, h, kern, 0.10, 1.0);
    const Band wide = confidence_band(c1, c0, h, kern, 0.05, 1.8);
    for (int g = 0; g < 21; ++g) {
        const double diff = c1.ghat(g) - c0.ghat(g);
        CHECK(narrow.lower(g) <= diff);
        CHECK(diff <= narrow.upper(g));
        CHECK(wide.lower(g) <= narrow.lower(g));
        CHECK(narrow.upper(g) <= wide.upper(g));
    }
}

TEST_CASE("curve test runs, is reproducible, and respects sidedness") {
    DgpSpec spec;
    spec.example = Example::Ex3;
    spec.n = 200;
    spec.delta = 0.25;
    spec.seed = 31415;
    const Dataset ds = dgp(spec);
    const ZSpec zspec = default_zspec(Example::Ex3);
    const PartitionPlan plan = make_partition(ds, zspec, 5);
    const PlmFit f = fit(ds, plan);

    CurveTestConfig config;
    config.threads = 1;
    const CurveTestResult two = t2_test(ds, zspec, f, config, 49, 7, Sided::two);
    CHECK(two.h < 1.0);
    CHECK(two.h > 0.0);
    CHECK(two.h == doctest::Approx(0.8 * two.h_gcv));
    CHECK(*two.report.p_bootstrap >= 1.0 / 50.0);
    CHECK(*two.report.p_bootstrap <= 1.0);
    CHECK(two.curve0.grid.size() == config.grid_points);
    CHECK(two.curve1.var_ghat.minCoeff() >= 0.0);
    CHECK(two.group_sizes[0] + two.group_sizes[1] == ds.n());

    config.threads = 2;
    const CurveTestResult again = t2_test(ds, zspec, f, config, 49, 7, Sided::two);
    CHECK(again.report.statistic == two.report.statistic);
    CHECK(again.report.bootstrap_draws == two.report.bootstrap_draws);

    // Swapping the group labels maps "less" onto "greater" exactly.
    Dataset flipped = ds;
    for (Eigen::Index i = 0; i < ds.n(); ++i)
        flipped.z_categorical(i, 0) = 1 - ds.z_categorical(i, 0);
    const PartitionPlan plan_f = make_partition(flipped, zspec, 5);
    const PlmFit ff = fit(flipped, plan_f);
    // Same centered design, same cells: beta agrees, so Y* agrees.
    REQUIRE((ff.beta - f.beta).cwiseAbs().maxCoeff() < 1e-12);
    config.threads = 1;
    const CurveTestResult less = t2_test(ds, zspec, f, config, 49, 7, Sided::less);
    const CurveTestResult greater = t2_test(flipped, zspec, ff, config, 49, 7, Sided::greater);
    CHECK(less.report.statistic == doctest::Approx(greater.report.statistic).epsilon(1e-12));
}

TEST_CASE("95% band covers the zero difference under the null") {
    // Monte Carlo coverage oracle: with equal group curves the zero function
    // should fall inside the band in at least 90% of replicates.
    const int reps = 200;
    std::vector<int> covered(reps, 0);
    DgpSpec spec;
    spec.example = Example::Ex3;
    spec.n = 200;
    spec.delta = 0.0;
    spec.seed = 8088;
    const ZSpec zspec = default_zspec(Example::Ex3);
    const KernelSpec kern = KernelSpec::make(KernelFamily::Epanechnikov);
    parallel_for(reps, 0, [&](std::size_t r) {
        const Dataset ds = dgp_replicate(spec, r);
        const PartitionPlan plan = make_partition(ds, zspec, 5);
        const PlmFit f = fit(ds, plan);
        CurveTestConfig config;
        config.threads = 1;
        const CurveTestResult res =
            t2_test(ds, zspec, f, config, 99, rng::derive_seed(spec.seed, r), Sided::two);
        const double q = bootstrap_quantile(res.report.bootstrap_draws, 0.05);
        const Band band = confidence_band(res.curve1, res.curve0, res.h, kern, 0.05, q);
        bool inside = true;
        for (Eigen::Index g = 0; g < band.lower.size(); ++g)
            inside = inside && band.lower(g) <= 0.0 && 0.0 <= band.upper(g);
        covered[r] = inside ? 1 : 0;
    });
    int total = 0;
    for (const int c : covered) total += c;
    CHECK(static_cast<double>(total) / reps >= 0.90);
}

TEST_CASE("curve test rejects unusable groupings") {
    DgpSpec spec;
    spec.example = Example::Ex3;
    spec.n = 60;
    spec.seed = 5;
    Dataset ds = dgp(spec);
    const ZSpec zspec = default_zspec(Example::Ex3);
    const PartitionPlan plan = make_partition(ds, zspec, 5);
    const PlmFit f = fit(ds, plan);

    Dataset lopsided = ds;
    for (Eigen::Index i = 0; i < ds.n() - 3; ++i) lopsided.z_categorical(i, 0) = 1;
    CHECK_THROWS_AS(t2_test(lopsided, zspec, f, CurveTestConfig{}, 0, 0, Sided::two),
                    GroupTooSmall);

    Dataset trinary = ds;
    trinary.zd_levels[0] = {"0", "1", "2"};
    trinary.z_categorical(0, 0) = 2;
    CHECK_THROWS_AS(t2_test(trinary, zspec, f, CurveTestConfig{}, 0, 0, Sided::two),
                    InvalidArgument);
}
