#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "helpers.hpp"
#include "plmcell/errors.hpp"
#include "plmcell/simulation.hpp"

using namespace plmcell;

TEST_CASE("dgp is deterministic and honors substreams") {
    DgpSpec spec;
    spec.example = Example::Ex1;
    spec.n = 50;
    spec.seed = 7;
    const Dataset a = dgp(spec);
    const Dataset b = dgp(spec);
    CHECK(a.y == b.y);
    CHECK(a.x == b.x);
    CHECK(a.z_continuous == b.z_continuous);

    // Replicate 3 is the same whether or not other replicates were drawn.
    const Dataset r3 = dgp_replicate(spec, 3);
    dgp_replicate(spec, 0);
    dgp_replicate(spec, 1);
    const Dataset r3_again = dgp_replicate(spec, 3);
    CHECK(r3.y == r3_again.y);

    bool distinct = false;
    const Dataset r4 = dgp_replicate(spec, 4);
    for (Eigen::Index i = 0; i < r3.n() && !distinct; ++i) distinct = r3.y(i) != r4.y(i);
    CHECK(distinct);
}

TEST_CASE("example 1 has the stated correlation structure") {
    DgpSpec spec;
    spec.example = Example::Ex1;
    spec.n = 10000;
    spec.seed = 11;
    const Dataset ds = dgp(spec);
    auto corr = [&](const Eigen::VectorXd& u, const Eigen::VectorXd& v) {
        const double mu = u.mean(), mv = v.mean();
        const double num = ((u.array() - mu) * (v.array() - mv)).sum();
        return num / std::sqrt((u.array() - mu).square().sum() *
                               (v.array() - mv).square().sum());
    };
    CHECK(std::abs(corr(ds.x.col(0), ds.x.col(1)) - 0.5) < 0.03);
    CHECK(std::abs(corr(ds.x.col(3), ds.x.col(5)) - 0.5) < 0.03);
    CHECK(std::abs(corr(ds.x.col(2), ds.z_continuous.col(0)) - 0.5) < 0.03);
    CHECK(std::abs(ds.x.col(0).mean()) < 0.04);

    // y reflects beta = (1,3,0,...) plus 3sin(2z) plus unit noise.
    const Eigen::VectorXd noise =
        ds.y - ds.x * true_beta(spec) -
        (3.0 * (2.0 * ds.z_continuous.col(0).array()).sin()).matrix();
    CHECK(std::abs(noise.mean()) < 0.04);
    CHECK(std::abs(noise.squaredNorm() / ds.n() - 1.0) < 0.05);
}

TEST_CASE("example 2 builds nearly collinear Z columns") {
    DgpSpec spec;
    spec.example = Example::Ex2;
    spec.n = 4000;
    spec.seed = 12;
    const Dataset ds = dgp(spec);
    const Eigen::VectorXd d21 = ds.z_continuous.col(1) - ds.z_continuous.col(0);
    const Eigen::VectorXd d31 = ds.z_continuous.col(2) - ds.z_continuous.col(0);
    const double sd21 = std::sqrt(d21.squaredNorm() / ds.n());
    const double sd31 = std::sqrt(d31.squaredNorm() / ds.n());
    const double expected = 1.0 / std::sqrt(static_cast<double>(ds.n()));
    CHECK(sd21 == doctest::Approx(expected).epsilon(0.3));
    CHECK(sd31 == doctest::Approx(expected).epsilon(0.3));
}

TEST_CASE("example 3 matches its marginals") {
    DgpSpec spec;
    spec.example = Example::Ex3;
    spec.n = 10000;
    spec.delta = 0.25;
    spec.seed = 13;
    const Dataset ds = dgp(spec);
    CHECK(std::abs(ds.z_categorical.col(0).cast<double>().mean() - 0.7) < 0.02);
    CHECK(ds.z_continuous.col(0).minCoeff() >= -1.0);
    CHECK(ds.z_continuous.col(0).maxCoeff() <= 1.0);
    for (Eigen::Index j = 0; j < 6; ++j) {
        const double m = ds.x.col(j).mean();
        CHECK(std::abs(m - 0.5) < 0.02);
        CHECK(((ds.x.col(j).array() == 0.0) || (ds.x.col(j).array() == 1.0)).all());
    }
}

TEST_CASE("sigma2 recovers the noise variance in example 1") {
    DgpSpec spec;
    spec.example = Example::Ex1;
    spec.n = 400;
    spec.seed = 14;
    const ZSpec zspec = default_zspec(Example::Ex1);
    double total = 0.0;
    const int reps = 50;
    for (int r = 0; r < reps; ++r) {
        const Dataset ds = dgp_replicate(spec, static_cast<std::uint64_t>(r));
        total += fit(ds, make_partition(ds, zspec, 5)).sigma2;
    }
    CHECK(total / reps > 0.9);
    CHECK(total / reps < 1.1);
}

TEST_CASE("run_mc aggregates and is thread-count invariant") {
    DgpSpec spec;
    spec.example = Example::Ex3;
    spec.n = 100;
    spec.delta = 0.25;
    spec.seed = 15;
    const McResult one = run_mc(spec, 5, 24, 1);
    const McResult two = run_mc(spec, 5, 24, 2);
    CHECK(one.ase_mean == two.ase_mean);
    CHECK(one.mse_mean == two.mse_mean);
    CHECK(one.per_coef_sd == two.per_coef_sd);
    CHECK(one.per_coef_sdm == two.per_coef_sdm);
    CHECK(one.replicates == 24);
    CHECK(one.per_coef_mean.size() == 6);
    CHECK(one.ase_mean > 0.0);
    CHECK(one.rsd > 0.0);
    // beta_1 should sit near its true value 3.5 even at n=100
    CHECK(std::abs(one.per_coef_mean(0) - 3.5) < 0.1);
}

TEST_CASE("null study produces sorted nonnegative statistics") {
    DgpSpec spec;
    spec.example = Example::Ex1;
    spec.n = 100;
    spec.seed = 16;
    const NullStudyResult res = null_distribution_study(spec, 2, 60, 0);
    REQUIRE(res.scaled_stats.size() == 60);
    CHECK(std::is_sorted(res.scaled_stats.begin(), res.scaled_stats.end()));
    CHECK(res.scaled_stats.front() >= 0.0);
    CHECK(res.df == 4);
    CHECK(res.ks_distance > 0.0);
    CHECK(res.ks_distance < 0.35);

    DgpSpec bad = spec;
    bad.delta = 0.5;
    CHECK_THROWS_AS(null_distribution_study(bad, 2, 10, 0), InvalidArgument);

    // Ex3's delta lives in the curve, so the coefficient null still holds.
    DgpSpec ex3 = spec;
    ex3.example = Example::Ex3;
    ex3.delta = 0.25;
    const NullStudyResult ok = null_distribution_study(ex3, 5, 20, 0);
    CHECK(ok.scaled_stats.size() == 20);
}

TEST_CASE("ks distance against the right and wrong distribution") {
    // Draws generated through the chi-square quantile function: an
    // independent route to the CDF used by the distance computation.
    rng::Stream s(17, 0);
    std::vector<double> draws(800);
    for (auto& d : draws) d = chi2_quantile(s.uniform01(), 4);
    std::sort(draws.begin(), draws.end());
    CHECK(ks_distance_chi2(draws, 4) < 0.05);
    CHECK(ks_distance_chi2(draws, 8) > 0.2);
}

TEST_CASE("rate slope on synthetic exact-rate inputs") {
    // mse = 40 * (I/(I-1)) / n  =>  slope exactly -1.
    const std::vector<Eigen::Index> ns = {100, 200, 400};
    const std::vector<int> cells = {2, 5, 10};
    std::vector<std::vector<double>> mse(ns.size(), std::vector<double>(cells.size()));
    for (std::size_t a = 0; a < ns.size(); ++a)
        for (std::size_t b = 0; b < cells.size(); ++b) {
            const double i_sz = cells[b];
            mse[a][b] = 40.0 * (i_sz / (i_sz - 1.0)) / static_cast<double>(ns[a]);
        }
    CHECK(mse_rate_slope(ns, cells, mse) == doctest::Approx(-1.0).epsilon(1e-12));
}

TEST_CASE("power curve smoke test") {
    DgpSpec spec;
    spec.example = Example::Ex1;
    spec.n = 80;
    spec.seed = 18;
    const std::vector<double> deltas = {0.0, 1.5};
    const auto points = power_curve(spec, TestKind::LinearT1, deltas, 2, 12, 39, 0.05, 0);
    REQUIRE(points.size() == 2);
    CHECK(points[0].delta == 0.0);
    CHECK(points[1].delta == 1.5);
    for (const auto& pt : points) {
        CHECK(pt.rate_bootstrap >= 0.0);
        CHECK(pt.rate_bootstrap <= 1.0);
        CHECK(pt.rate_asymptotic >= 0.0);
    }
    // A strong alternative at n=80 should reject much more often than the null.
    CHECK(points[1].rate_bootstrap >= points[0].rate_bootstrap);

    const auto again = power_curve(spec, TestKind::LinearT1, deltas, 2, 12, 39, 0.05, 2);
    CHECK(again[0].rate_bootstrap == points[0].rate_bootstrap);
    CHECK(again[1].rate_asymptotic == points[1].rate_asymptotic);
}

TEST_CASE("residualizing example 3 exposes the curve plus small noise") {
    DgpSpec spec;
    spec.example = Example::Ex3;
    spec.n = 400;
    spec.delta = 0.25;
    spec.seed = 19;
    const Dataset ds = dgp(spec);
    const PartitionPlan plan = make_partition(ds, default_zspec(Example::Ex3), 5);
    const PlmFit f = fit(ds, plan);
    const Eigen::VectorXd y_star = residualize(ds, f);

    Eigen::VectorXd noise(ds.n());
    for (Eigen::Index i = 0; i < ds.n(); ++i) {
        const double zc = ds.z_continuous(i, 0);
        const double zd = ds.z_categorical(i, 0);
        const double g = zc * zc + 2.0 * zc + 0.25 * zd * std::exp(-16.0 * zc * zc);
        noise(i) = y_star(i) - g;
    }
    // What remains should look like the N(0, 0.2^2) errors, up to a level
    // shift from the root-n estimation error in beta (X has mean 1/2 here).
    CHECK(std::abs(noise.mean()) < 0.1);
    const double sd = std::sqrt((noise.array() - noise.mean()).square().sum() / ds.n());
    CHECK(sd > 0.15);
    CHECK(sd < 0.28);
}

TEST_CASE("per-replicate MSE never exceeds squared ASE and both shrink with n") {
    for (const Example ex : {Example::Ex1, Example::Ex2, Example::Ex3}) {
        DgpSpec small;
        small.example = ex;
        small.n = 100;
        small.delta = ex == Example::Ex3 ? 0.25 : 0.0;
        small.seed = 23;
        DgpSpec big = small;
        big.n = 400;
        const McResult r_small = run_mc(small, 5, 60, 0);
        const McResult r_big = run_mc(big, 5, 60, 0);
        CHECK(r_big.ase_mean < r_small.ase_mean);
        CHECK(r_big.mse_mean < r_small.mse_mean);

        // Cauchy-Schwarz per replicate: sum e^2 <= (sum |e|)^2.
        const ZSpec zspec = default_zspec(ex);
        const Eigen::VectorXd beta0 = true_beta(small);
        for (std::uint64_t r = 0; r < 10; ++r) {
            const Dataset ds = dgp_replicate(small, r);
            const PlmFit f = fit(ds, make_partition(ds, zspec, 5));
            const double ase = (f.beta - beta0).lpNorm<1>();
            const double mse = (f.beta - beta0).squaredNorm();
            CHECK(mse <= ase * ase + 1e-15);
        }
    }
}

TEST_CASE("dgp spec validation") {
    DgpSpec spec;
    spec.n = 10;
    CHECK_THROWS_AS(spec.validate(), InvalidArgument);
    spec.n = 100;
    spec.rho = 1.0;
    CHECK_THROWS_AS(spec.validate(), InvalidArgument);
    spec.rho = 0.5;
    spec.delta = -0.1;
    CHECK_THROWS_AS(spec.validate(), InvalidArgument);
}
