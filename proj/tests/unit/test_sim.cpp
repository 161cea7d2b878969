#include <doctest.h>

#include "adamwarm/errors.hpp"
#include "adamwarm/sim.hpp"

#include <cmath>
#include <sstream>

using namespace adamwarm;
using namespace adamwarm::sim;

namespace {

SimConfig small(std::uint64_t params, std::uint64_t iters) {
    SimConfig c;
    c.n_params = params;
    c.n_iters = iters;
    return c;
}

double median_at(const SimTrajectory& tr, std::int64_t t) { return tr.rows.at(t - 1).values[tr.column(0.5)]; }

} // namespace

TEST_CASE("first row is exactly one") {
    for (std::uint64_t seed : {0, 1, 99}) {
        auto c = small(5000, 3);
        c.seed = seed;
        const auto tr = run_local_minimum_sim(c);
        REQUIRE(tr.rows.size() == 3);
        CHECK(tr.rows[0].t == 1);
        for (double q : tr.rows[0].values) CHECK(q == 1.0);
    }
}

TEST_CASE("rows are ordered and deterministic") {
    const auto c = small(3000, 60);
    const auto a = run_local_minimum_sim(c);
    const auto b = run_local_minimum_sim(c);
    REQUIRE(a.rows.size() == 60);
    for (std::size_t i = 0; i < a.rows.size(); ++i) {
        CHECK(a.rows[i].t == static_cast<std::int64_t>(i + 1));
        CHECK(a.rows[i].values == b.rows[i].values);
        for (std::size_t k = 1; k < a.levels.size(); ++k) CHECK(a.rows[i].values[k] >= a.rows[i].values[k - 1]);
    }
}

TEST_CASE("thread count does not change results") {
    auto c = small(10007, 40);
    const auto one = run_local_minimum_sim(c);
    for (unsigned th : {2u, 3u, 8u}) {
        c.threads = th;
        const auto many = run_local_minimum_sim(c);
        for (std::size_t i = 0; i < one.rows.size(); ++i) REQUIRE(many.rows[i].values == one.rows[i].values);
    }
}

TEST_CASE("gradient variance does not matter") {
    auto c = small(4000, 200);
    const auto a = run_local_minimum_sim(c);
    c.grad_variance = 1.0;
    const auto b = run_local_minimum_sim(c);
    for (std::size_t i = 0; i < a.rows.size(); ++i) {
        for (std::size_t k = 0; k < a.levels.size(); ++k) {
            const double x = a.rows[i].values[k], y = b.rows[i].values[k];
            REQUIRE(std::abs(x - y) <= 1e-12 * std::abs(y));
        }
    }
}

TEST_CASE("default-size trajectory shape") {
    const SimConfig c; // 25000 params, 1000 iterations
    const auto tr = run_local_minimum_sim(c);
    // early decay: median non-increasing over t in [1, 20] up to sampling noise
    for (std::int64_t t = 2; t <= 20; ++t) CHECK(median_at(tr, t) <= median_at(tr, t - 1) + 0.002);
    const double m40 = median_at(tr, 40);
    CHECK(m40 >= 0.15);
    CHECK(m40 <= 0.18);
    const double m1000 = median_at(tr, 1000);
    CHECK(m1000 >= 0.148);
    CHECK(m1000 <= 0.158);

    auto c2 = c;
    c2.seed = 12345;
    const auto tr2 = run_local_minimum_sim(c2);
    for (std::int64_t t : {100, 1000}) CHECK(std::abs(median_at(tr, t) - median_at(tr2, t)) < 0.005);

    auto c3 = c;
    c3.quantiles = {0.5};
    CHECK(stationary_median(c3) == m1000);
}

TEST_CASE("validation") {
    CHECK_THROWS_AS(run_local_minimum_sim(small(0, 10)), InvalidArgument);
    CHECK_THROWS_AS(run_local_minimum_sim(small(10, 0)), InvalidArgument);
    auto c = small(10, 10);
    c.grad_variance = 0.0;
    CHECK_THROWS_AS(run_local_minimum_sim(c), InvalidArgument);
    c = small(10, 10);
    c.quantiles = {0.5, 0.25};
    CHECK_THROWS_AS(run_local_minimum_sim(c), InvalidArgument);
    c.quantiles = {0.0, 0.5};
    CHECK_THROWS_AS(run_local_minimum_sim(c), InvalidArgument);
    c = small(10, 10);
    c.threads = 0;
    CHECK_THROWS_AS(run_local_minimum_sim(c), InvalidArgument);
    CHECK_THROWS_AS(run_local_minimum_sim(small(10, 10)).column(0.3), InvalidArgument);
}

TEST_CASE("csv layout") {
    const auto tr = run_local_minimum_sim(small(1000, 3));
    std::ostringstream os;
    write_csv(os, tr);
    std::istringstream is(os.str());
    std::string line;
    std::getline(is, line);
    CHECK(line == "t,q2.5,q25,q50,q75,q97.5");
    std::getline(is, line);
    CHECK(line == "1,1,1,1,1,1");
    std::getline(is, line);
    CHECK(line.rfind("2,", 0) == 0);
    int rows = 2;
    while (std::getline(is, line)) ++rows;
    CHECK(rows == 3);
    CHECK(quantile_label(0.025) == "q2.5");
    CHECK(quantile_label(0.975) == "q97.5");
}
