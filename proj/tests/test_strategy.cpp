#include <doctest.h>

#include <cmath>

#include "offload/core/errors.hpp"
#include "offload/strategy/engine.hpp"

using namespace offload;

namespace {

strategy::ClusterView two_by_two_view() {
    strategy::ClusterView view;
    view.pods = {
        {"m1", "pn-1", core::NodeCategory::Medium, ""},
        {"m2", "pn-1", core::NodeCategory::Medium, ""},
        {"s1", "pi-1", core::NodeCategory::Small, ""},
        {"s2", "pi-1", core::NodeCategory::Small, ""},
    };
    view.category_metrics[core::NodeCategory::Small] = {150.0, 0.5};
    view.category_metrics[core::NodeCategory::Medium] = {55.0, 0.5};
    return view;
}

}  // namespace

TEST_CASE("normalize_metrics divides by the per-metric maximum") {
    strategy::MetricMap raw{{"a", {100.0, 0.0, 10.0}}, {"b", {200.0, 0.0, 20.0}}};
    const auto n = strategy::normalize_metrics(raw);
    CHECK(n.at("a").rt_ms == doctest::Approx(0.5));
    CHECK(n.at("b").rt_ms == doctest::Approx(1.0));
    // Zero-max metric normalizes to all zeros.
    CHECK(n.at("a").cpu == doctest::Approx(0.0));
    CHECK(n.at("b").cpu == doctest::Approx(0.0));

    const auto single = strategy::normalize_metrics({{"only", {90.0, 0.3, 5.0}}});
    CHECK(single.at("only").rt_ms == doctest::Approx(1.0));

    CHECK_THROWS_AS(strategy::normalize_metrics({}), core::EmptyInput);
}

TEST_CASE("score_category") {
    const core::StrategyWeights w{0.5, 0.5, 0.0};
    CHECK(strategy::score_category(0.0, 0.0, w) == doctest::Approx(0.0));
    CHECK(strategy::score_category(1.0, 0.4, w) == doctest::Approx(0.7));
    CHECK(strategy::score_category(0.37, 0.9, {1.0, 0.0, 0.0}) == doctest::Approx(0.37));
}

TEST_CASE("score_pod") {
    CHECK(strategy::score_pod(0, 0, 0, {0.5, 0.3, 0.2}) == doctest::Approx(0.0));
    CHECK(strategy::score_pod(0.4, 0.7, 0.5, {0.5, 0.3, 0.2}) == doctest::Approx(0.51));
    CHECK(strategy::score_pod(0.1, 0.2, 0.9, {0.0, 0.0, 1.0}) == doctest::Approx(0.9));
}

TEST_CASE("assign_category picks the argmin") {
    const core::StrategyWeights w{0.5, 0.5, 0.0};
    SUBCASE("loaded small loses to medium") {
        const std::map<core::NodeCategory, strategy::CategoryMetrics> m{
            {core::NodeCategory::Small, {150.0, 1.0}},
            {core::NodeCategory::Medium, {55.0, 0.6}},
        };
        CHECK(strategy::assign_category(m, w) == core::NodeCategory::Medium);
    }
    SUBCASE("identical metrics tie toward medium") {
        const std::map<core::NodeCategory, strategy::CategoryMetrics> m{
            {core::NodeCategory::Small, {100.0, 0.5}},
            {core::NodeCategory::Medium, {100.0, 0.5}},
        };
        CHECK(strategy::assign_category(m, w) == core::NodeCategory::Medium);
    }
    SUBCASE("idle small wins") {
        const std::map<core::NodeCategory, strategy::CategoryMetrics> m{
            {core::NodeCategory::Small, {10.0, 0.1}},
            {core::NodeCategory::Medium, {200.0, 0.9}},
        };
        CHECK(strategy::assign_category(m, w) == core::NodeCategory::Small);
    }
    SUBCASE("missing category") {
        const std::map<core::NodeCategory, strategy::CategoryMetrics> m{
            {core::NodeCategory::Small, {10.0, 0.1}},
        };
        CHECK_THROWS_AS(strategy::assign_category(m, w), core::EmptyCategory);
    }
}

TEST_CASE("scores_to_profile inverse mapping") {
    SUBCASE("equal scores split evenly") {
        const auto p = strategy::scores_to_profile({{"a", 1.0}, {"a2", 1.0}});
        CHECK(p.entries.at("a") == doctest::Approx(0.5));
        CHECK(p.entries.at("a2") == doctest::Approx(0.5));
        p.validate();
    }
    SUBCASE("inverse proportional") {
        const auto p = strategy::scores_to_profile({{"a", 2.0}, {"b", 1.0}});
        CHECK(p.entries.at("a") == doctest::Approx(1.0 / 3.0).epsilon(1e-5));
        CHECK(p.entries.at("b") == doctest::Approx(2.0 / 3.0).epsilon(1e-5));
    }
    SUBCASE("singleton") {
        const auto p = strategy::scores_to_profile({{"only", 3.0}});
        CHECK(p.entries.at("only") == doctest::Approx(1.0));
    }
    SUBCASE("all-zero scores give uniform") {
        const auto p = strategy::scores_to_profile({{"a", 0.0}, {"b", 0.0}, {"c", 0.0}});
        CHECK(p.entries.at("a") == doctest::Approx(1.0 / 3.0));
        p.validate();
    }
    SUBCASE("version increments") {
        const auto p = strategy::scores_to_profile({{"a", 1.0}}, 1e-6, 41, 7000);
        CHECK(p.version == 42);
        CHECK(p.updated_at_ms == 7000);
    }
    SUBCASE("empty input") {
        CHECK_THROWS_AS(strategy::scores_to_profile({}), core::EmptyInput);
    }
}

TEST_CASE("profile property suite: sum, scale invariance, monotonicity") {
    core::Rng rng(99);
    for (int trial = 0; trial < 10000; ++trial) {
        const int n = 2 + static_cast<int>(rng.uniform(6));
        std::map<std::string, double> scores;
        for (int i = 0; i < n; ++i) {
            scores["p" + std::to_string(i)] = rng.uniform(100.0);
        }
        const auto p = strategy::scores_to_profile(scores);
        double sum = 0;
        for (const auto& [pod, prob] : p.entries) {
            CHECK(prob >= 0.0);
            sum += prob;
        }
        CHECK(std::abs(sum - 1.0) <= 1e-9);

        // Scale invariance.
        const double k = 1e-3 + rng.uniform(1e4);
        std::map<std::string, double> scaled;
        for (const auto& [pod, s] : scores) scaled[pod] = s * k;
        const auto p2 = strategy::scores_to_profile(scaled);
        for (const auto& [pod, prob] : p.entries) {
            CHECK(std::abs(prob - p2.entries.at(pod)) <= 1e-12);
        }

        // Monotonicity: decreasing one pod's score strictly raises its probability.
        auto it = scores.begin();
        std::advance(it, static_cast<int>(rng.uniform(static_cast<double>(n))));
        if (it->second > 1e-9) {
            std::map<std::string, double> lowered = scores;
            lowered[it->first] = it->second * rng.uniform(0.9);
            const auto p3 = strategy::scores_to_profile(lowered);
            CHECK(p3.entries.at(it->first) > p.entries.at(it->first));
        }
    }
}

TEST_CASE("weight scale invariance of scoring decisions") {
    core::Rng rng(123);
    for (int trial = 0; trial < 500; ++trial) {
        const core::StrategyWeights w{rng.uniform(1.0), rng.uniform(1.0), rng.uniform(1.0) + 0.01};
        const double k = 0.001 + rng.uniform(100.0);
        const core::StrategyWeights kw{w.w1 * k, w.w2 * k, w.w3 * k};
        const std::map<core::NodeCategory, strategy::CategoryMetrics> m{
            {core::NodeCategory::Small, {rng.uniform(300.0), rng.next_double()}},
            {core::NodeCategory::Medium, {rng.uniform(300.0), rng.next_double()}},
        };
        CHECK(strategy::assign_category(m, w) == strategy::assign_category(m, kw));

        std::map<std::string, double> scores, kscores;
        for (int i = 0; i < 4; ++i) {
            const double rt = rng.next_double(), cpu = rng.next_double(), e = rng.next_double();
            scores["p" + std::to_string(i)] = strategy::score_pod(rt, cpu, e, w);
            kscores["p" + std::to_string(i)] = strategy::score_pod(rt, cpu, e, kw);
        }
        const auto p = strategy::scores_to_profile(scores);
        const auto kp = strategy::scores_to_profile(kscores);
        for (const auto& [pod, prob] : p.entries) {
            CHECK(std::abs(prob - kp.entries.at(pod)) <= 1e-9);
        }
    }
}

TEST_CASE("softmax mapping sharpens toward low scores") {
    strategy::ProfileMapping mapping;
    mapping.kind = strategy::ProfileMapping::Kind::Softmax;
    mapping.temperature = 0.1;
    const auto p = strategy::build_profile({{"good", 0.2}, {"bad", 0.8}}, mapping, 0, 0);
    p.validate();
    CHECK(p.entries.at("good") > 0.99);
}

TEST_CASE("sample_pod") {
    core::ServiceProfile certain;
    certain.entries = {{"p", 1.0}};
    core::Rng rng(1);
    CHECK(strategy::sample_pod(certain, rng) == "p");

    SUBCASE("golden first draw for the committed generator") {
        // mt19937_64 seeded with 42: first uniform is 0.75515553295453897,
        // which lands in b's half of the inverse CDF over {a, b}.
        core::ServiceProfile even;
        even.entries = {{"a", 0.5}, {"b", 0.5}};
        core::Rng seeded(42);
        CHECK(strategy::sample_pod(even, seeded) == "b");
    }

    SUBCASE("empirical frequencies track probabilities") {
        core::ServiceProfile p;
        p.entries = {{"a", 0.25}, {"b", 0.75}};
        core::Rng sampler(7);
        int b_count = 0;
        const int draws = 100000;
        for (int i = 0; i < draws; ++i) {
            if (strategy::sample_pod(p, sampler) == "b") ++b_count;
        }
        const double freq = static_cast<double>(b_count) / draws;
        CHECK(freq == doctest::Approx(0.75).epsilon(0.0134));  // +-0.01 absolute
    }

    SUBCASE("three standard errors over random profiles") {
        core::Rng maker(31);
        for (int trial = 0; trial < 5; ++trial) {
            std::map<std::string, double> scores;
            for (int i = 0; i < 4; ++i) scores["p" + std::to_string(i)] = 0.1 + maker.uniform(3.0);
            const auto profile = strategy::scores_to_profile(scores);
            core::Rng sampler(trial + 100);
            std::map<std::string, int> counts;
            const int draws = 100000;
            for (int i = 0; i < draws; ++i) ++counts[strategy::sample_pod(profile, sampler)];
            for (const auto& [pod, prob] : profile.entries) {
                const double freq = static_cast<double>(counts[pod]) / draws;
                const double se = std::sqrt(prob * (1 - prob) / draws);
                CHECK(std::abs(freq - prob) <= 3.0 * se + 1e-12);
            }
        }
    }

    core::ServiceProfile empty;
    CHECK_THROWS_AS(strategy::sample_pod(empty, rng), core::EmptyProfile);
}

TEST_CASE("round robin cycles and resets on membership change") {
    strategy::RoundRobinState rr;
    std::vector<core::PodRef> pods{
        {"a", "n", core::NodeCategory::Small, ""},
        {"b", "n", core::NodeCategory::Small, ""},
        {"c", "n", core::NodeCategory::Small, ""},
    };
    CHECK(rr.next("svc", pods).pod_id == "a");
    CHECK(rr.next("svc", pods).pod_id == "b");
    CHECK(rr.next("svc", pods).pod_id == "c");
    CHECK(rr.next("svc", pods).pod_id == "a");

    SUBCASE("singleton service") {
        std::vector<core::PodRef> one{{"solo", "n", core::NodeCategory::Small, ""}};
        for (int i = 0; i < 5; ++i) CHECK(rr.next("solo-svc", one).pod_id == "solo");
    }

    SUBCASE("membership change resets the cursor") {
        pods.push_back({"d", "n", core::NodeCategory::Small, ""});
        CHECK(rr.next("svc", pods).pod_id == "a");
    }

    SUBCASE("empty service") {
        CHECK_THROWS_AS(rr.next("svc", {}), core::EmptyService);
    }
}

TEST_CASE("decide: static split alternates small/medium with round robin") {
    strategy::Dispatcher d(strategy::StrategyKind::StaticSplit, {0.5, 0.3, 0.2}, 1);
    const auto view = two_by_two_view();
    core::Task task{"t", "tag-0", 0, 0};
    CHECK(d.decide(task, view).pod_id == "s1");
    CHECK(d.decide(task, view).pod_id == "m1");
    CHECK(d.decide(task, view).pod_id == "s2");
    CHECK(d.decide(task, view).pod_id == "m2");
    CHECK(d.decide(task, view).pod_id == "s1");
}

TEST_CASE("decide: category argmin routes to the winning category") {
    strategy::Dispatcher d(strategy::StrategyKind::CategoryArgmin, {0.5, 0.5, 0.0}, 1);
    auto view = two_by_two_view();
    view.category_metrics[core::NodeCategory::Small] = {150.0, 1.0};
    view.category_metrics[core::NodeCategory::Medium] = {55.0, 0.6};
    core::Task task{"t", "tag-0", 0, 0};
    CHECK(d.decide(task, view).pod_id == "m1");
    CHECK(d.decide(task, view).pod_id == "m2");
    CHECK(d.decide(task, view).pod_id == "m1");
}

TEST_CASE("decide: pod level follows the profile") {
    strategy::Dispatcher d(strategy::StrategyKind::PodLevel, {0.5, 0.3, 0.2}, 1);
    auto view = two_by_two_view();
    auto profile = std::make_shared<core::ServiceProfile>();
    profile->entries = {{"m1", 1.0}};
    profile->version = 1;
    view.profile = profile;
    core::Task task{"t", "tag-0", 0, 0};
    for (int i = 0; i < 10; ++i) CHECK(d.decide(task, view).pod_id == "m1");

    SUBCASE("profile entries for retired pods renormalize over live ones") {
        profile->entries = {{"gone", 0.9}, {"m2", 0.1}};
        for (int i = 0; i < 10; ++i) CHECK(d.decide(task, view).pod_id == "m2");
    }

    SUBCASE("no live pods") {
        view.pods.clear();
        CHECK_THROWS_AS(d.decide(task, view), core::NoLivePods);
    }

    SUBCASE("missing profile") {
        view.profile.reset();
        CHECK_THROWS_AS(d.decide(task, view), core::EmptyProfile);
    }
}

TEST_CASE("decide is reproducible for identical inputs") {
    const auto run = [] {
        strategy::Dispatcher d(strategy::StrategyKind::PodLevel, {0.5, 0.3, 0.2}, 77);
        auto view = two_by_two_view();
        auto profile = std::make_shared<core::ServiceProfile>();
        profile->entries = {{"m1", 0.4}, {"m2", 0.3}, {"s1", 0.2}, {"s2", 0.1}};
        view.profile = profile;
        std::vector<std::string> picked;
        core::Task task{"t", "tag-0", 0, 0};
        for (int i = 0; i < 50; ++i) picked.push_back(d.decide(task, view).pod_id);
        return picked;
    };
    CHECK(run() == run());
}
