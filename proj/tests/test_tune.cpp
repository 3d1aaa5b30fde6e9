#include <doctest.h>

#include "fixtures.hpp"
#include "pvd/tune.hpp"

#include <json.hpp>

#include <fstream>
#include <random>
#include <set>

using namespace pvd;

namespace {

bool within_one_step(const GridPoint& a, const GridPoint& b) {
    return std::abs(a.kappa - b.kappa) <= 1 && std::abs(a.window - b.window) <= 1 && std::abs(a.mad - b.mad) <= 1 &&
           std::abs(a.gap - b.gap) <= 1;
}

std::vector<Observation> random_history(std::mt19937_64& rng, int n) {
    std::vector<Observation> h;
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int i = 0; i < n; ++i) h.push_back({random_suggest(rng()), u(rng)});
    return h;
}

}  // namespace

TEST_CASE("search space") {
    CHECK(SearchSpace::size() == 11u * 21u * 11u * 9u);
    for (std::size_t i = 0; i < SearchSpace::size(); i += 97) {
        const GridPoint p = SearchSpace::at(i);
        REQUIRE(SearchSpace::contains(p));
        REQUIRE(SearchSpace::index_of(p) == i);
    }
    CHECK(SearchSpace::at(0) == GridPoint{0, 5, 0, 1});
    CHECK(SearchSpace::at(SearchSpace::size() - 1) == GridPoint{10, 25, 10, 9});

    const GridPoint defaults = SearchSpace::quantize(ProposerParams{});
    CHECK(defaults == GridPoint{3, 19, 1, 4});
    const ProposerParams p = SearchSpace::params(defaults);
    CHECK(p.kappa == 0.4);
    CHECK(p.mad_threshold == 0.01);
    CHECK(SearchSpace::kappa(10) == 0.75);
    CHECK(SearchSpace::mad(10) == 0.1);
    CHECK_THROWS_AS(SearchSpace::params(GridPoint{11, 19, 1, 4}), std::out_of_range);
}

TEST_CASE("suggestions respect the grid") {
    std::mt19937_64 rng(3);
    CHECK(SearchSpace::contains(tpe_suggest({}, 1)));
    for (int n : {0, 5, 10, 11, 30, 80}) {
        const auto history = random_history(rng, n);
        for (std::uint64_t seed = 0; seed < 20; ++seed) {
            REQUIRE(SearchSpace::contains(tpe_suggest(history, seed)));
            REQUIRE(SearchSpace::contains(random_suggest(seed)));
        }
    }
}

TEST_CASE("suggestions are deterministic") {
    std::mt19937_64 rng(4);
    const auto history = random_history(rng, 40);
    CHECK(tpe_suggest(history, 99) == tpe_suggest(history, 99));
    CHECK(random_suggest(99) == random_suggest(99));
    std::set<GridPoint> distinct;
    for (std::uint64_t s = 0; s < 20; ++s) distinct.insert(tpe_suggest(history, s));
    CHECK(distinct.size() > 1);
}

TEST_CASE("startup phase is random search") {
    std::mt19937_64 rng(5);
    const auto history = random_history(rng, 9);
    CHECK(tpe_suggest(history, 42) == random_suggest(42));
}

TEST_CASE("suggestions concentrate around a single good point") {
    const GridPoint best{6, 11, 3, 5};
    std::mt19937_64 rng(50);
    std::vector<Observation> history;
    while (history.size() < 49) {
        const GridPoint p = random_suggest(rng());
        if (p != best) history.push_back({p, 1.0});
    }
    history.push_back({best, 0.0});
    int near = 0;
    for (std::uint64_t s = 0; s < 20; ++s) near += within_one_step(tpe_suggest(history, 1000 + s), best);
    CHECK(near >= 12);
}

TEST_CASE("objective") {
    QualityReport r;
    r.q = 0.7;
    CHECK(objective_from(r) == doctest::Approx(0.3));
    r.q = 1.0;
    CHECK(objective_from(r) == 0.0);
    CHECK(objective_from(QualityReport{}) == 1.0);

    const Dataset& ds = fixture::tuning_dataset();
    ProposalObjective train(ds, Split::Train, 3);

    SUBCASE("equals 1 - q of the plain proposer, bit for bit") {
        const Sequence* seq = ds.split(Split::Train).front();
        for (const GridPoint p : {GridPoint{3, 19, 1, 4}, GridPoint{0, 5, 0, 1}, GridPoint{10, 25, 10, 9}, GridPoint{7, 8, 4, 2}}) {
            EventCounts counts;
            for (std::size_t i = 0; i < seq->frames.size(); i += 3) {
                const GrayImage img = read_pgm(seq->image_path(seq->frames[i]).string());
                counts.add(score_frame(propose(img, SearchSpace::params(p)), seq->frames[i].keypoints));
            }
            const auto q = quality(counts).q;
            CHECK(train.h(p) == (q ? 1.0 - *q : 1.0));
        }
    }
    SUBCASE("the whole-grid pass agrees with single evaluations") {
        ProposalObjective fresh(ds, Split::Train, 3);
        std::vector<double> single;
        std::vector<GridPoint> points;
        std::mt19937_64 rng(8);
        for (int i = 0; i < 25; ++i) {
            points.push_back(random_suggest(rng()));
            single.push_back(fresh.h(points.back()));
        }
        const auto& grid = train.grid();
        for (std::size_t i = 0; i < points.size(); ++i) CHECK(grid[SearchSpace::index_of(points[i])] == single[i]);
        for (double h : grid) {
            REQUIRE(h >= 0.0);
            REQUIRE(h <= 1.0);
        }
    }
    SUBCASE("empty split") {
        Dataset empty = ds;
        empty.splits[static_cast<int>(Split::Test)].clear();
        CHECK_THROWS_AS(ProposalObjective(empty, Split::Test), InputError);
    }
}

TEST_CASE("optimize") {
    const Dataset& ds = fixture::tuning_dataset();
    ProposalObjective train(ds, Split::Train, 4), val(ds, Split::Val, 4), test(ds, Split::Test, 4);

    SUBCASE("budget 1 returns the sole trial") {
        OptimizeOptions o;
        o.budget = 1;
        const OptimizeResult r = optimize(train, val, &test, o);
        REQUIRE(r.trials.size() == 1);
        CHECK(r.best == 0);
        CHECK(r.best_params == SearchSpace::params(r.trials[0].point));
        CHECK(r.test.has_value());
    }
    SUBCASE("budget 0 is rejected") {
        OptimizeOptions o;
        o.budget = 0;
        CHECK_THROWS_AS(optimize(train, val, nullptr, o), InputError);
    }
    for (Sampler sampler : {Sampler::Tpe, Sampler::Random}) {
        CAPTURE(to_string(sampler));
        const auto dir = fixture::temp_dir(std::string("optimize_") + to_string(sampler));
        OptimizeOptions o;
        o.budget = 30;
        o.seed = 11;
        o.sampler = sampler;
        o.log_path = (dir / "trials.jsonl").string();
        const OptimizeResult r = optimize(train, val, nullptr, o);
        REQUIRE(r.trials.size() == 30);
        for (std::size_t i = 1; i < r.best_val_so_far.size(); ++i) CHECK(r.best_val_so_far[i] <= r.best_val_so_far[i - 1]);
        for (const Trial& t : r.trials) {
            CHECK(SearchSpace::contains(t.point));
            CHECK(r.trials[r.best].val_h <= t.val_h);
            CHECK((t.train_h >= 0.0 && t.train_h <= 1.0));
        }
        std::ifstream log(o.log_path);
        std::string line;
        int lines = 0;
        while (std::getline(log, line)) {
            const auto j = nlohmann::json::parse(line);
            CHECK(j["trial"] == lines);
            CHECK(j["sampler"] == to_string(sampler));
            CHECK(j.contains("timestamp"));
            CHECK(j["val_h"].get<double>() == r.trials[lines].val_h);
            ++lines;
        }
        CHECK(lines == 30);
        const OptimizeResult again = optimize(train, val, nullptr, [&] { auto c = o; c.log_path.clear(); return c; }());
        for (std::size_t i = 0; i < r.trials.size(); ++i) CHECK(again.trials[i].point == r.trials[i].point);
    }
}

TEST_CASE("sampler names") {
    CHECK(parse_sampler("tpe") == Sampler::Tpe);
    CHECK(parse_sampler("random") == Sampler::Random);
    CHECK_THROWS_AS(parse_sampler("grid"), InputError);
}
