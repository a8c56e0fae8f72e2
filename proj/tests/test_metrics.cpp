#include "oodkit/error.hpp"
#include "oodkit/metrics.hpp"

#include <doctest.h>
#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

using namespace oodkit;

namespace {

// O(n^2) Mann-Whitney with integer tallies.
double pairwise_auroc(const std::vector<double>& id, const std::vector<double>& ood) {
    std::uint64_t twice = 0;
    for (double a : id) {
        for (double b : ood) twice += a > b ? 2 : a == b ? 1 : 0;
    }
    return static_cast<double>(twice) / (2.0 * static_cast<double>(id.size() * ood.size()));
}

std::size_t above(const std::vector<double>& v, double lambda) {
    return static_cast<std::size_t>(std::count_if(v.begin(), v.end(), [&](double s) { return s > lambda; }));
}

// Largest observed ID score that still keeps the target fraction strictly above it.
std::optional<double> largest_valid_score(const std::vector<double>& id, double t) {
    std::optional<double> best;
    for (double s : id) {
        if (static_cast<double>(above(id, s)) / static_cast<double>(id.size()) >= t && (!best || s > *best)) best = s;
    }
    return best;
}

std::vector<double> draw(std::mt19937_64& rng, std::size_t n, bool coarse) {
    std::normal_distribution<double> normal;
    std::uniform_int_distribution<int> small(0, 6);
    std::vector<double> v(n);
    for (auto& x : v) x = coarse ? small(rng) : normal(rng);
    return v;
}

} // namespace

TEST_CASE("AUROC examples") {
    CHECK(auroc(std::vector<double>{3, 4, 5}, std::vector<double>{1, 2}) == 1.0);
    CHECK(auroc(std::vector<double>{1, 3}, std::vector<double>{2, 4}) == 0.25);
    CHECK(auroc(std::vector<double>{1}, std::vector<double>{1}) == 0.5);
    CHECK(auroc(std::vector<double>{1, 2}, std::vector<double>{3, 4}) == 0.0);
}

TEST_CASE("AUROC equals the pairwise oracle") {
    std::mt19937_64 rng(2024);
    std::uniform_int_distribution<std::size_t> size(1, 200);
    for (int i = 0; i < 300; ++i) {
        const bool coarse = i % 3 == 0;
        const auto id = draw(rng, size(rng), coarse);
        const auto ood = draw(rng, size(rng), coarse);
        CHECK(std::abs(auroc(id, ood) - pairwise_auroc(id, ood)) <= 1e-12);
    }
}

TEST_CASE("AUROC properties") {
    std::mt19937_64 rng(3);
    for (int i = 0; i < 50; ++i) {
        const auto id = draw(rng, 80, false);
        auto ood = draw(rng, 60, false);
        for (auto& x : ood) x -= 0.5;
        const double base = auroc(id, ood);
        CHECK(base >= 0.0);
        CHECK(base <= 1.0);
        CHECK(std::abs(base + auroc(ood, id) - 1.0) <= 1e-12);

        auto map = [](std::vector<double> v, auto f) {
            for (auto& x : v) x = f(x);
            return v;
        };
        auto ex = [](double x) { return std::exp(x); };
        auto affine = [](double x) { return 3.0 * x - 7.0; };
        CHECK(std::abs(auroc(map(id, ex), map(ood, ex)) - base) <= 1e-12);
        CHECK(std::abs(auroc(map(id, affine), map(ood, affine)) - base) <= 1e-12);
    }
}

TEST_CASE("threshold examples") {
    std::vector<double> ramp(20);
    for (int i = 0; i < 20; ++i) ramp[i] = i + 1;
    std::shuffle(ramp.begin(), ramp.end(), std::mt19937_64(1));
    const double lambda = threshold_at_tpr(ramp, 0.95);
    CHECK(lambda == 1.0);
    CHECK(above(ramp, lambda) == 19);
    CHECK(largest_valid_score(ramp, 0.95) == lambda);

    const double all = threshold_at_tpr(ramp, 1.0);
    CHECK(above(ramp, all) == 20);
    CHECK(all == std::nextafter(1.0, -std::numeric_limits<double>::infinity()));

    const std::vector<double> flat{5, 5, 5};
    const double tie = threshold_at_tpr(flat, 0.95);
    CHECK(tie < 5.0);
    CHECK(tie == std::nextafter(5.0, -std::numeric_limits<double>::infinity()));
}

TEST_CASE("threshold agrees with candidate enumeration") {
    std::mt19937_64 rng(77);
    std::uniform_int_distribution<std::size_t> size(1, 120);
    std::uniform_real_distribution<double> target(0.01, 1.0);
    for (int i = 0; i < 500; ++i) {
        const bool coarse = i % 2 == 0;
        const auto id = draw(rng, size(rng), coarse);
        const double t = i % 5 == 0 ? 0.95 : target(rng);
        const double lambda = threshold_at_tpr(id, t);
        const double n = static_cast<double>(id.size());
        CAPTURE(t);
        CAPTURE(id.size());
        // Target met.
        CHECK(static_cast<double>(above(id, lambda)) / n >= t);
        // No larger ID score would still meet it, so the kept set is minimal.
        for (double s : id) {
            if (s > lambda) CHECK(static_cast<double>(above(id, s)) / n < t);
        }
        // Lambda is an observed score or sits just below one.
        const bool observed = std::find(id.begin(), id.end(), lambda) != id.end();
        const bool just_below = std::find(id.begin(), id.end(),
                                          std::nextafter(lambda, std::numeric_limits<double>::infinity())) != id.end();
        CHECK((observed || just_below));
        if (!coarse) {
            const auto best = largest_valid_score(id, t);
            if (best) CHECK(lambda == *best);
        }
    }
}

TEST_CASE("threshold errors") {
    CHECK_THROWS_AS(threshold_at_tpr(std::vector<double>{}, 0.95), Error);
    CHECK_THROWS_AS(threshold_at_tpr(std::vector<double>{1}, 0.0), Error);
    CHECK_THROWS_AS(threshold_at_tpr(std::vector<double>{1}, 1.01), Error);
    CHECK_THROWS_AS(auroc(std::vector<double>{}, std::vector<double>{1}), Error);
    CHECK_THROWS_AS(auroc(std::vector<double>{std::nan("")}, std::vector<double>{1}), Error);
}

TEST_CASE("FPR at TPR") {
    CHECK(fpr_at_tpr(std::vector<double>{3, 4, 5}, std::vector<double>{1, 2}, 0.95) == 0.0);
    CHECK(fpr_at_tpr(std::vector<double>{1, 2}, std::vector<double>{3, 4}, 0.95) == 1.0);

    // Identical distributions: P(ood > lambda) = P(id > lambda), so FPR ~ target.
    std::mt19937_64 rng(555);
    const std::size_t n = 20000;
    const auto id = draw(rng, n, false);
    const auto ood = draw(rng, n, false);
    const double fpr = fpr_at_tpr(id, ood, 0.95);
    const double p = 0.95;
    const double sigma = std::sqrt(p * (1 - p) * (2.0 / static_cast<double>(n)));
    CHECK(std::abs(fpr - p) <= 3 * sigma);

    for (int i = 0; i < 30; ++i) {
        const auto a = draw(rng, 100, i % 2 == 0);
        const auto b = draw(rng, 90, i % 2 == 0);
        CHECK(fpr_at_tpr(a, b, 0.99) >= fpr_at_tpr(a, b, 0.90));
    }
}

TEST_CASE("decide treats the boundary as OOD") {
    CHECK(decide(0.9, 1.0) == Decision::Ood);
    CHECK(decide(1.0, 1.0) == Decision::Ood);
    CHECK(decide(2.0, 1.0) == Decision::Id);
}

TEST_CASE("evaluate bundles the metrics") {
    const std::vector<double> id{0.2, 0.9, 0.8, 0.7}, ood{0.1, 0.75, 0.3};
    const auto r = evaluate(id, ood, 0.5, "msp", R"({"method":"msp"})");
    CHECK(r.auroc == auroc(id, ood));
    CHECK(r.fpr95 == fpr_at_tpr(id, ood, 0.5));
    CHECK(r.threshold_lambda == threshold_at_tpr(id, 0.5));
    CHECK(r.n_id == 4);
    CHECK(r.n_ood == 3);
    const auto json = nlohmann::json::parse(report_to_json(r));
    CHECK(json.at("auroc").get<double>() == r.auroc);
    CHECK(json.at("config").at("method") == "msp");
    CHECK(json.at("n_ood") == 3);
}
