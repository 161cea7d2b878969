#include <doctest.h>

#include "adamwarm/errors.hpp"
#include "adamwarm/train/mlp.hpp"

#include <cmath>
#include <limits>

using namespace adamwarm;
using namespace adamwarm::train;

namespace {

Batch random_batch(RandomStream& rng, std::size_t rows, std::size_t cols, std::size_t classes) {
    Batch b{rows, cols, std::vector<double>(rows * cols), std::vector<std::uint32_t>(rows)};
    for (auto& x : b.x) x = rng.uniform();
    for (auto& y : b.y) y = static_cast<std::uint32_t>(rng.below(classes));
    return b;
}

// |a - b| / max(|a|, |b|), with differences below 1e-9 treated as agreement
// (central differences at h = 1e-5 carry ~1e-10 absolute error).
double fd_error(double a, double b) {
    const double d = std::abs(a - b);
    if (d <= 1e-9) return 0.0;
    return d / std::max(std::abs(a), std::abs(b));
}

} // namespace

TEST_CASE("initialisation") {
    RandomStream rng(0, 0);
    const Mlp m = init_mlp(784, 10, rng);
    CHECK(m.layer_sizes() == std::vector<std::size_t>{784, 200, 100, 50, 10});
    const auto& L = m.layers();
    REQUIRE(L.size() == 4);
    CHECK(L[0].fan_in == 784);
    CHECK(L[0].fan_out == 200);
    CHECK(L[3].fan_in == 50);
    CHECK(L[3].fan_out == 10);
    CHECK(m.params().size() == 784 * 200 + 200 + 200 * 100 + 100 + 100 * 50 + 50 + 50 * 10 + 10);
    for (std::size_t l = 0; l < L.size(); ++l) {
        const double bound = 1.0 / std::sqrt(static_cast<double>(L[l].fan_in));
        double lo = 1.0, hi = -1.0;
        for (double w : m.weights(l)) {
            REQUIRE(std::abs(w) <= bound);
            lo = std::min(lo, w);
            hi = std::max(hi, w);
        }
        CHECK(lo < -0.9 * bound);
        CHECK(hi > 0.9 * bound);
        for (double b : m.biases(l)) CHECK(b == 0.0);
    }
    RandomStream again(0, 0);
    CHECK(init_mlp(784, 10, again).params().size() == m.params().size());
    RandomStream again2(0, 0);
    const Mlp m2 = init_mlp(784, 10, again2);
    CHECK(std::equal(m.params().begin(), m.params().end(), m2.params().begin()));
    CHECK_THROWS_AS(Mlp(std::vector<std::size_t>{5}), InvalidArgument);
    CHECK_THROWS_AS(Mlp(std::vector<std::size_t>{5, 0, 2}), InvalidArgument);
}

TEST_CASE("uniform logits give ln(classes)") {
    RandomStream rng(1, 0);
    Mlp m = init_mlp(6, 10, rng, {5, 4});
    for (double& w : m.weights(2)) w = 0.0;
    const Batch b = random_batch(rng, 1, 6, 10);
    CHECK(evaluate_loss(m, b) == doctest::Approx(std::log(10.0)).epsilon(1e-15));
    CHECK(forward_backward(m, b).loss == doctest::Approx(2.302585092994046).epsilon(1e-15));
}

TEST_CASE("backprop matches central differences") {
    RandomStream rng(2024, 0);
    const double h = 1e-5;
    double worst = 0.0;
    for (int config = 0; config < 100; ++config) {
        Mlp m = init_mlp(4, 2, rng, {3, 3, 3});
        for (double& p : m.params()) p = rng.uniform(-1.0, 1.0);
        const Batch b = random_batch(rng, 1 + rng.below(5), 4, 2);
        const auto lg = forward_backward(m, b);
        for (std::size_t i = 0; i < m.params().size(); ++i) {
            const double keep = m.params()[i];
            m.params()[i] = keep + h;
            const double up = evaluate_loss(m, b);
            m.params()[i] = keep - h;
            const double down = evaluate_loss(m, b);
            m.params()[i] = keep;
            const double fd = (up - down) / (2 * h);
            worst = std::max(worst, fd_error(lg.grad[i], fd));
        }
    }
    CHECK(worst <= 1e-6);
}

TEST_CASE("duplicating the batch changes nothing") {
    RandomStream rng(3, 0);
    const Mlp m = init_mlp(8, 3, rng, {6, 5});
    const Batch b = random_batch(rng, 4, 8, 3);
    Batch twice = b;
    twice.rows *= 2;
    twice.x.insert(twice.x.end(), b.x.begin(), b.x.end());
    twice.y.insert(twice.y.end(), b.y.begin(), b.y.end());
    const auto a = forward_backward(m, b);
    const auto c = forward_backward(m, twice);
    CHECK(c.loss == doctest::Approx(a.loss).epsilon(1e-14));
    for (std::size_t i = 0; i < a.grad.size(); ++i) {
        CHECK(std::abs(c.grad[i] - a.grad[i]) <= 1e-14 * (std::abs(a.grad[i]) + 1e-12));
    }
}

TEST_CASE("input validation and numeric failure") {
    RandomStream rng(4, 0);
    Mlp m = init_mlp(4, 3, rng, {3});
    Batch b = random_batch(rng, 2, 4, 3);
    Batch wrong = random_batch(rng, 2, 5, 3);
    CHECK_THROWS_AS(forward_backward(m, wrong), ShapeError);
    b.y[0] = 7;
    CHECK_THROWS_AS(forward_backward(m, b), InvalidArgument);
    b.y[0] = 0;
    CHECK_THROWS_AS(forward_backward(m, Batch{}), InvalidArgument);
    m.params()[0] = std::numeric_limits<double>::quiet_NaN();
    CHECK_THROWS_AS(forward_backward(m, b), NumericFailure);
    m.params()[0] = std::numeric_limits<double>::infinity();
    CHECK_THROWS_AS(evaluate_loss(m, b), NumericFailure);
}

TEST_CASE("large logits stay finite") {
    RandomStream rng(5, 0);
    Mlp m = init_mlp(4, 3, rng, {3});
    for (double& p : m.params()) p *= 400.0;
    Batch b = random_batch(rng, 3, 4, 3);
    const auto lg = forward_backward(m, b);
    CHECK(std::isfinite(lg.loss));
}

TEST_CASE("model json and dataset loss") {
    RandomStream rng(6, 0);
    const Mlp m = init_mlp(4, 2, rng, {3, 3});
    const Mlp back = Mlp::from_json(nlohmann::json::parse(m.to_json().dump()));
    CHECK(back.layer_sizes() == m.layer_sizes());
    CHECK(std::equal(m.params().begin(), m.params().end(), back.params().begin()));
    auto j = m.to_json();
    j["version"] = 2;
    CHECK_THROWS_AS(Mlp::from_json(j), InvalidArgument);

    IdxDataset d;
    d.count = 3000;
    d.rows = 2;
    d.cols = 2;
    d.n_classes = 2;
    for (std::size_t i = 0; i < d.count * 4; ++i) d.pixels.push_back(static_cast<std::uint8_t>(rng.below(256)));
    for (std::size_t i = 0; i < d.count; ++i) d.labels.push_back(static_cast<std::uint8_t>(rng.below(2)));
    std::vector<std::size_t> all(d.count);
    for (std::size_t i = 0; i < d.count; ++i) all[i] = i;
    const Batch full = make_batch(d, all);
    CHECK(full.x[0] == d.pixels[0] / 255.0);
    CHECK(dataset_loss(m, d) == doctest::Approx(evaluate_loss(m, full)).epsilon(1e-13));
}
