#include <doctest.h>

#include "oracles.hpp"
#include "pvd/proposer.hpp"
#include "pvd/synth.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>
#include <set>

using namespace pvd;

namespace {

Mask mask_from(int w, int h, std::initializer_list<std::pair<int, int>> pts) {
    Mask m{w, h, std::vector<unsigned char>(static_cast<std::size_t>(w) * h)};
    for (auto [x, y] : pts) m.set(x, y);
    return m;
}


BBox hull(const std::vector<int>& pix, int width) {
    BBox b{1e9, 1e9, -1, -1};
    for (int p : pix) {
        b.x_min = std::min<double>(b.x_min, p % width);
        b.x_max = std::max<double>(b.x_max, p % width);
        b.y_min = std::min<double>(b.y_min, p / width);
        b.y_max = std::max<double>(b.y_max, p / width);
    }
    return b;
}

}  // namespace

TEST_CASE("preprocess") {
    SUBCASE("halves the resolution") {
        const GrayImage out = preprocess(GrayImage(1280, 960, 0.2), ProposerParams{});
        CHECK(out.width() == 640);
        CHECK(out.height() == 480);
    }
    SUBCASE("constant image stays constant") {
        const GrayImage out = preprocess(GrayImage(64, 48, 0.3), ProposerParams{});
        for (double v : out.data()) CHECK(v == doctest::Approx(0.3).epsilon(1e-14));
    }
    SUBCASE("blur preserves mass of an interior spot") {
        GrayImage img(21, 21);
        img(10, 10) = 1.0;
        const GrayImage out = gaussian_blur(img, 5, 1.0);
        double sum = 0.0;
        for (double v : out.data()) sum += v;
        CHECK(std::abs(sum - 1.0) < 1e-6);
        CHECK(out(10, 10) > out(11, 10));
        CHECK(out(11, 10) == doctest::Approx(out(10, 11)));
    }
    SUBCASE("too small for the kernel") {
        CHECK_THROWS_AS(preprocess(GrayImage(6, 6, 0.1), ProposerParams{}), InputError);
    }
    SUBCASE("values stay in range") {
        std::mt19937_64 rng(2);
        const GrayImage out = preprocess(oracle::random_image(40, 30, rng), ProposerParams{});
        for (double v : out.data()) CHECK((v >= 0.0 && v <= 1.0));
    }
}

TEST_CASE("dynamic threshold") {
    SUBCASE("constant image") {
        const GrayImage t = dynamic_threshold(GrayImage(20, 20, 0.5), 0.4, 19);
        for (double v : t.data()) CHECK(v == doctest::Approx(0.7).epsilon(1e-14));
    }
    SUBCASE("naive windowed-mean oracle on 32x32") {
        std::mt19937_64 rng(32);
        const GrayImage img = oracle::random_image(32, 32, rng);
        const GrayImage t = dynamic_threshold(img, 0.4, 19);
        const GrayImage ref = oracle::threshold(img, 0.4, 19);
        for (std::size_t i = 0; i < t.size(); ++i) REQUIRE(std::abs(t.data()[i] - ref.data()[i]) <= 1e-9);
    }
    SUBCASE("pixel at its local mean gets mu (1 + kappa)") {
        GrayImage img(9, 9, 0.2);
        img(4, 4) = 0.2;
        const GrayImage t = dynamic_threshold(img, 0.3, 5);
        CHECK(t(4, 4) == doctest::Approx(0.2 * 1.3));
    }
    SUBCASE("saturated pixel over a dark window stays finite") {
        GrayImage img(25, 25, 0.0);
        img(12, 12) = 1.0;
        const GrayImage t = dynamic_threshold(img, 0.75, 25);
        for (double v : t.data()) CHECK(std::isfinite(v));
    }
}

TEST_CASE("binarize") {
    SUBCASE("constant image gives an empty mask") {
        const GrayImage img(16, 16, 0.4);
        const Mask m = binarize(img, dynamic_threshold(img, 0.3, 7));
        for (auto b : m.bits) CHECK(b == 0);
    }
    SUBCASE("equality is not above") {
        const GrayImage img(2, 1, 0.5);
        const Mask m = binarize(img, GrayImage(2, 1, std::vector<double>{0.5, 0.49}));
        CHECK_FALSE(m.at(0, 0));
        CHECK(m.at(1, 0));
    }
    SUBCASE("bright blob core is set") {
        GrayImage img(80, 60, 0.03);
        add_blob(img, 40, 30, 0.8, 2.5);
        const Mask m = binarize(img, dynamic_threshold(img, 0.4, 19));
        for (int y = 29; y <= 31; ++y)
            for (int x = 39; x <= 41; ++x) CHECK(m.at(x, y));
        CHECK_FALSE(m.at(5, 5));
    }
}

TEST_CASE("blobs_to_boxes") {
    SUBCASE("gap boundary") {
        for (int d = 1; d <= 9; ++d) {
            CHECK(blobs_to_boxes(mask_from(30, 30, {{2, 2}, {2 + d, 2 + d}}), d).size() == 1);
            CHECK(blobs_to_boxes(mask_from(30, 30, {{2, 2}, {2 + d + 1, 2}}), d).size() == 2);
        }
    }
    SUBCASE("tight hull") {
        const auto boxes = blobs_to_boxes(mask_from(10, 10, {{3, 4}, {4, 4}, {4, 6}}), 2);
        REQUIRE(boxes.size() == 1);
        CHECK(boxes[0] == BBox{3, 4, 4, 6});
    }
    SUBCASE("empty mask") {
        CHECK(blobs_to_boxes(mask_from(8, 8, {}), 4).empty());
    }
    SUBCASE("brute-force union-find oracle on sparse 64x64 masks") {
        std::mt19937_64 rng(64);
        for (int trial = 0; trial < 20; ++trial) {
            const int d = 1 + trial % 9;
            const Mask m = oracle::random_mask(64, 64, 0.01 + 0.002 * trial, rng);
            const auto truth = oracle::components(m, d);
            const BlobLabels lab = label_blobs(m, d);
            std::vector<std::vector<int>> members(lab.count);
            for (int i = 0; i < 64 * 64; ++i) {
                REQUIRE((lab.labels[i] >= 0) == (m.bits[i] != 0));
                if (lab.labels[i] >= 0) members[lab.labels[i]].push_back(i);
            }
            CHECK(std::set<std::vector<int>>(members.begin(), members.end()) == truth);
            const auto boxes = blobs_to_boxes(m, d);
            REQUIRE(boxes.size() == members.size());
            for (int k = 0; k < lab.count; ++k) CHECK(boxes[k] == hull(members[k], 64));
        }
    }
    SUBCASE("boxes ordered by first raster pixel") {
        const auto boxes = blobs_to_boxes(mask_from(20, 20, {{15, 1}, {2, 5}, {10, 10}}), 1);
        REQUIRE(boxes.size() == 3);
        CHECK(boxes[0].x_min == 15);
        CHECK(boxes[1].x_min == 2);
        CHECK(boxes[2].x_min == 10);
    }
    SUBCASE("larger gap never yields more boxes") {
        std::mt19937_64 rng(9);
        for (int t = 0; t < 10; ++t) {
            const Mask m = oracle::random_mask(48, 48, 0.03, rng);
            std::size_t prev = blobs_to_boxes(m, 1).size();
            for (int d = 2; d <= 9; ++d) {
                const std::size_t n = blobs_to_boxes(m, d).size();
                CHECK(n <= prev);
                prev = n;
            }
        }
    }
}

TEST_CASE("filter_boxes") {
    std::mt19937_64 rng(7);
    const GrayImage img = oracle::random_image(40, 40, rng);
    std::vector<BBox> boxes;
    std::uniform_int_distribution<int> c(0, 30), s(0, 9);
    for (int i = 0; i < 60; ++i) {
        const int x = c(rng), y = c(rng);
        boxes.push_back({double(x), double(y), double(x + s(rng)), double(y + s(rng))});
    }
    SUBCASE("matches the naive MAD decision") {
        for (double thr : {0.0, 0.05, 0.2, 0.25, 0.3}) {
            std::vector<BBox> want;
            for (const BBox& b : boxes)
                if (oracle::mad(img, int(b.x_min), int(b.y_min), int(b.x_max), int(b.y_max)) >= thr) want.push_back(b);
            CHECK(filter_boxes(img, boxes, thr) == want);
        }
    }
    SUBCASE("s = 0 keeps everything") {
        CHECK(filter_boxes(img, boxes, 0.0).size() == boxes.size());
    }
    SUBCASE("constant box is removed") {
        CHECK(filter_boxes(GrayImage(10, 10, 0.4), {BBox{1, 1, 5, 5}}, 1e-9).empty());
    }
    SUBCASE("raising s never keeps more") {
        std::size_t prev = boxes.size();
        for (int i = 0; i <= 40; ++i) {
            const std::size_t n = filter_boxes(img, boxes, i / 100.0).size();
            CHECK(n <= prev);
            prev = n;
        }
    }
}

TEST_CASE("upscale rounds outward") {
    const BBox b = upscale_box(BBox{10, 20, 10, 21}, 0.5, 1280, 960);
    CHECK(b == BBox{20, 40, 21, 43});
    const BBox edge = upscale_box(BBox{0, 0, 639, 479}, 0.5, 1280, 960);
    CHECK(edge == BBox{0, 0, 1279, 959});
}

TEST_CASE("propose") {
    const ProposerParams params;
    SUBCASE("all-dark frame") {
        CHECK(propose(GrayImage(320, 240, 0.0), params).empty());
    }
    SUBCASE("constant frames give nothing for any kappa > 0 and s > 0") {
        ProposerParams p = params;
        for (double level : {0.0, 0.1, 0.5, 1.0}) {
            p.kappa = 0.25 + level / 2;
            p.mad_threshold = 0.01;
            CHECK(propose(GrayImage(64, 48, level), p).empty());
        }
    }
    SUBCASE("two separated blobs give two boxes, one per keypoint") {
        GrayImage img(640, 480, 0.04);
        add_blob(img, 200.0, 240.0, 0.9, 3.0);
        add_blob(img, 450.0, 200.0, 0.9, 3.0);
        const auto boxes = propose(img, params);
        REQUIRE(boxes.size() == 2);
        CHECK(boxes[0].contains(450, 200));
        CHECK(boxes[1].contains(200, 240));
    }
    SUBCASE("boxes lie inside the full frame") {
        const SyntheticSceneSpec spec;
        const SyntheticFrame f = render_frame(spec, 80);
        for (const BBox& b : propose(f.image, params)) {
            CHECK(b.valid());
            CHECK(b.x_min >= 0);
            CHECK(b.y_min >= 0);
            CHECK(b.x_max <= 1279);
            CHECK(b.y_max <= 959);
        }
    }
}

TEST_CASE("proposer params") {
    ProposerParams p;
    CHECK_NOTHROW(p.validate());
    p.kappa = 0.8;
    CHECK_THROWS_AS(p.validate(), InputError);
    p = {};
    p.gap = 0;
    CHECK_THROWS_AS(p.validate(), InputError);

    const auto dir = std::filesystem::temp_directory_path() / "pvd_tests" / "params";
    std::filesystem::create_directories(dir);
    ProposerParams q;
    q.kappa = 0.55;
    q.window = 11;
    q.mad_threshold = 0.03;
    q.gap = 7;
    write_proposer_params((dir / "p.txt").string(), q);
    CHECK(read_proposer_params((dir / "p.txt").string()) == q);
    std::ofstream(dir / "partial.txt") << "# tuned\nkappa = 0.3\n";
    const ProposerParams partial = read_proposer_params((dir / "partial.txt").string());
    CHECK(partial.kappa == 0.3);
    CHECK(partial.window == 19);
    std::ofstream(dir / "bad.txt") << "kappa = 0.3\ncolour = red\n";
    CHECK_THROWS_AS(read_proposer_params((dir / "bad.txt").string()), InputError);
}
