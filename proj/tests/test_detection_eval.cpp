#include <doctest.h>

#include <algorithm>
#include <random>

#include "polerisk/detection_eval.hpp"
#include "polerisk/error.hpp"
#include "support/oracles.hpp"
#include "support/synthetic.hpp"

using namespace polerisk;

namespace {

std::optional<double> ap_of(std::vector<bool> flags, std::size_t n_gt) {
    const auto buf = std::make_unique<bool[]>(flags.size());
    std::copy(flags.begin(), flags.end(), buf.get());
    return average_precision(std::span<const bool>(buf.get(), flags.size()), n_gt);
}

}  // namespace

TEST_CASE("iou examples and symmetry") {
    const BBox a{0, 0, 2, 2}, b{1, 1, 3, 3}, far{10, 10, 11, 11};
    CHECK(iou(a, a) == 1.0);
    CHECK(iou(a, far) == 0.0);
    CHECK(iou(a, b) == doctest::Approx(1.0 / 7.0).epsilon(1e-12));
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(0, 10);
    for (int i = 0; i < 500; ++i) {
        const BBox p{u(rng), u(rng), 10 + u(rng), 10 + u(rng)};
        const BBox q{u(rng), u(rng), 10 + u(rng), 10 + u(rng)};
        CHECK(iou(p, q) == iou(q, p));
        CHECK(iou(p, q) >= 0.0);
        CHECK(iou(p, q) <= 1.0);
        CHECK(iou(p, q) == doctest::Approx(oracle::box_iou(p, q)).epsilon(1e-12));
    }
}

TEST_CASE("matching examples") {
    const std::vector<GroundTruth> gt{{"img", 0, {0, 0, 10, 10}}};
    const std::vector<Detection> perfect{{"img", 0, 0.9, {0, 0, 10, 10}}};
    auto m = match_detections(perfect, gt, 0.5);
    REQUIRE(m.size() == 1);
    CHECK(m[0].true_positive);

    const std::vector<Detection> two{{"img", 0, 0.4, {0, 0, 10, 10}}, {"img", 0, 0.8, {0, 0, 10, 9}}};
    m = match_detections(two, gt, 0.5);
    REQUIRE(m.size() == 2);
    CHECK(m[0].detection.score == 0.8);
    CHECK(m[0].true_positive);
    CHECK_FALSE(m[1].true_positive);

    // IoU 0.4 at threshold 0.5
    const std::vector<Detection> weak{{"img", 0, 0.9, {0, 0, 4, 10}}};
    m = match_detections(weak, gt, 0.5);
    CHECK_FALSE(m[0].true_positive);

    const std::vector<Detection> other_image{{"other", 0, 0.9, {0, 0, 10, 10}}};
    CHECK_FALSE(match_detections(other_image, gt, 0.5)[0].true_positive);
    CHECK_THROWS_AS(match_detections(perfect, gt, 0.0), Error);
    CHECK_THROWS_AS(match_detections(perfect, gt, 1.5), Error);
}

TEST_CASE("equal scores keep input order") {
    const std::vector<GroundTruth> gt{{"i", 0, {0, 0, 10, 10}}};
    const std::vector<Detection> dets{{"i", 0, 0.5, {0, 0, 10, 10}}, {"i", 0, 0.5, {0, 0, 10, 10.5}}};
    const auto m = match_detections(dets, gt, 0.5);
    CHECK(m[0].detection.box.y_max == 10.0);
    CHECK(m[0].true_positive);
    CHECK_FALSE(m[1].true_positive);
}

TEST_CASE("average precision examples") {
    CHECK(ap_of({true}, 1) == 1.0);
    CHECK(ap_of({true, false}, 1) == 1.0);
    CHECK(ap_of({false, true}, 1) == 0.5);
    CHECK_FALSE(ap_of({}, 0).has_value());
    CHECK(ap_of({false, false}, 0) == 0.0);
    CHECK(ap_of({}, 3) == 0.0);
}

TEST_CASE("appending a false positive never raises AP") {
    std::mt19937_64 rng(17);
    std::bernoulli_distribution coin(0.5);
    for (int i = 0; i < 500; ++i) {
        std::vector<bool> flags;
        const std::size_t n = 1 + i % 12;
        std::size_t tp = 0;
        for (std::size_t k = 0; k < n; ++k) {
            flags.push_back(coin(rng));
            tp += flags.back();
        }
        const std::size_t n_gt = tp + static_cast<std::size_t>(i % 3);
        if (n_gt == 0) continue;
        const double before = *ap_of(flags, n_gt);
        flags.push_back(false);
        CHECK(*ap_of(flags, n_gt) <= before);
        CHECK(before == doctest::Approx(oracle::average_precision(std::vector<bool>(flags.begin(), flags.end() - 1), n_gt)).epsilon(1e-12));
    }
}

TEST_CASE("mean over classes") {
    const std::vector<GroundTruth> gt{{"i", 0, {0, 0, 10, 10}}, {"i", 1, {20, 20, 30, 30}}};
    const std::vector<Detection> dets{{"i", 0, 0.9, {0, 0, 10, 10}}, {"i", 1, 0.9, {50, 50, 60, 60}},
                                      {"i", 1, 0.8, {20, 20, 30, 30}}};
    const auto r = mean_average_precision(dets, gt, 0.5);
    CHECK(r.per_class_ap.at(0) == 1.0);
    CHECK(r.per_class_ap.at(1) == 0.5);
    CHECK(r.map_value == 0.75);
    CHECK(r.n_classes == 2);

    // a requested class with neither GT nor detections is not counted
    const auto r2 = mean_average_precision(dets, gt, 0.5, std::vector<int>{0, 1, 7});
    CHECK(r2.n_classes == 2);
    CHECK_THROWS_AS(mean_average_precision({}, {}, 0.5), Error);
}

TEST_CASE("random instances match the brute-force oracle") {
    std::mt19937_64 rng(555);
    for (int i = 0; i < 200; ++i) {
        const auto inst = synth::random_detection_instance(rng, 10, 2);
        const auto r = mean_average_precision(inst.dets, inst.gts, 0.5);
        CHECK(std::abs(r.map_value - oracle::mean_ap(inst.dets, inst.gts, 0.5)) <= 1e-12);
        for (const auto& [cls, ap] : r.per_class_ap) {
            CHECK(ap >= 0.0);
            CHECK(ap <= 1.0);
        }
    }
}

TEST_CASE("csv parsing and json report") {
    const auto dets = parse_detections_csv("image_id,class_id,score,x_min,y_min,x_max,y_max\na,0,0.9,0,0,1,1\n");
    REQUIRE(dets.size() == 1);
    CHECK(dets[0].score == 0.9);
    const auto gts = parse_ground_truth_csv("image_id,class_id,x_min,y_min,x_max,y_max\na,0,0,0,1,1\n");
    REQUIRE(gts.size() == 1);
    CHECK_THROWS_WITH_AS(parse_detections_csv("image_id,class_id,score,x_min,y_min,x_max,y_max\na,0,1.5,0,0,1,1\n"),
                         doctest::Contains("line 2"), ParseError);
    CHECK_THROWS_AS(parse_ground_truth_csv("image_id,class_id,x_min,y_min,x_max,y_max\na,0,2,0,1,1\n"), ParseError);
    CHECK_THROWS_AS(parse_ground_truth_csv("bad\n"), ParseError);
    const auto json = eval_report_json(mean_average_precision(dets, gts, 0.5));
    CHECK(json.find("\"map\":1.0") != std::string::npos);
}
