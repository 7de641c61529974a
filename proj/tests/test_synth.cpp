#include "difd/error.hpp"
#include "difd/synth.hpp"

#include "test_support.hpp"

#include <doctest.h>

#include <cmath>

using namespace difd;
namespace ts = testsupport;

namespace {

EvidenceField ellipse_field(double cx, double cy, double rx, double ry, double peak,
                            std::array<double, 3> chroma,
                            EvidenceField::Kind kind = EvidenceField::Kind::reflection) {
    EvidenceField f;
    f.kind = kind;
    f.cx = cx;
    f.cy = cy;
    f.rx = rx;
    f.ry = ry;
    f.peak = peak;
    f.chroma = chroma;
    return f;
}

SceneSpec basic_spec(std::uint64_t seed, double noise_std = 0.0) {
    SceneSpec spec;
    spec.width = 64;
    spec.height = 48;
    spec.channels = 3;
    spec.base_level = 0.5;
    spec.noise_std = noise_std;
    spec.seed = seed;
    return spec;
}

} // namespace

TEST_SUITE_BEGIN("synth");

TEST_CASE("counter-based noise is deterministic and order-free") {
    CHECK(hash_counter(1, 2, 3) == hash_counter(1, 2, 3));
    CHECK(hash_counter(1, 2, 3) != hash_counter(1, 2, 4));
    CHECK(hash_counter(1, 2, 3) != hash_counter(1, 3, 3));
    CHECK(gaussian_sample(9, 1, 100) == gaussian_sample(9, 1, 100));

    // roughly standard normal over many draws
    double sum = 0.0, sum_sq = 0.0;
    const int n = 200000;
    for (int i = 0; i < n; ++i) {
        const double z = gaussian_sample(42, 7, static_cast<std::uint64_t>(i));
        sum += z;
        sum_sq += z * z;
    }
    CHECK(std::abs(sum / n) < 0.01);
    CHECK(std::abs(sum_sq / n - 1.0) < 0.02);
}

TEST_CASE("no evidence and no noise gives identical scene and reference") {
    const ScenePair pair = generate_pair(basic_spec(5));
    CHECK(ts::bit_identical(pair.scene, pair.reference));
    CHECK(pair.truth.empty());
}

TEST_CASE("a noise-free reflection is recovered exactly by subtraction") {
    SceneSpec spec = basic_spec(6);
    spec.evidence = {ellipse_field(30, 24, 12, 9, 2.0 / 255.0, {0.2, 0.6, 0.2})};
    const ScenePair pair = generate_pair(spec);

    const Image d = subtract(pair.scene, pair.reference);
    const EvidenceField& f = spec.evidence[0];
    for (int y = 0; y < spec.height; ++y) {
        for (int x = 0; x < spec.width; ++x) {
            for (int c = 0; c < 3; ++c) {
                const double expected =
                    f.peak * f.chroma[static_cast<std::size_t>(c)] * f.profile_at(x, y);
                CHECK(std::abs(d.at(c, x, y) - expected) <= 1e-6);
            }
        }
    }
    REQUIRE(pair.truth.size() == 1);
    std::size_t support = 0;
    for (float m : pair.truth[0].mask.samples())
        support += m != 0.0f;
    CHECK(support > 0);
}

TEST_CASE("generation is bit-identical for a fixed seed and diverges across seeds") {
    SceneSpec spec = basic_spec(7, 2.0 / 255.0);
    spec.evidence = {ellipse_field(30, 24, 10, 10, 2.0 / 255.0, {0.3, 0.4, 0.3})};
    const ScenePair a = generate_pair(spec);
    const ScenePair b = generate_pair(spec);
    CHECK(ts::bit_identical(a.scene, b.scene));
    CHECK(ts::bit_identical(a.reference, b.reference));

    spec.seed = 8;
    const ScenePair c = generate_pair(spec);
    CHECK_FALSE(ts::bit_identical(a.scene, c.scene));
}

TEST_CASE("scene and reference noise are independent streams") {
    const ScenePair pair = generate_pair(basic_spec(9, 2.0 / 255.0));
    CHECK_FALSE(ts::bit_identical(pair.scene, pair.reference));
}

TEST_CASE("specs that leave [0,1] are rejected") {
    SceneSpec spec = basic_spec(10);
    spec.base_level = 0.999;
    spec.evidence = {ellipse_field(30, 24, 10, 10, 8.0 / 255.0, {0.2, 0.6, 0.2})};
    CHECK_THROWS_AS(generate_pair(spec), ParamError);

    spec.base_level = 0.001;
    spec.evidence[0].kind = EvidenceField::Kind::occlusion;
    CHECK_THROWS_AS(generate_pair(spec), ParamError);
}

TEST_CASE("field validation enforces the sub-perceptual bound") {
    SceneSpec spec = basic_spec(11);
    spec.evidence = {ellipse_field(30, 24, 10, 10, 9.0 / 255.0, {0.2, 0.6, 0.2})};
    CHECK_THROWS_AS(generate_pair(spec), ParamError);
    spec.evidence = {ellipse_field(30, 24, 10, 10, 0.0, {0.2, 0.6, 0.2})};
    CHECK_THROWS_AS(generate_pair(spec), ParamError);
}

TEST_CASE("stream entry frame boundaries") {
    SceneSpec spec = basic_spec(12);
    spec.evidence = {ellipse_field(30, 24, 10, 10, 4.0 / 255.0, {0.2, 0.6, 0.2})};

    const SceneStream all = generate_stream(spec, 4, 0);
    for (int pos = 1; pos < 4; ++pos) // noise-free: frames differ only by index
        CHECK(ts::bit_identical(all.stream.frame(pos), all.stream.frame(0)));
    const Image d = subtract(all.stream.frame(0), generate_pair(spec).reference);
    CHECK(sample_min_max(d).max > 0.0f);

    const SceneStream none = generate_stream(spec, 4, 4);
    const ScenePair clean = generate_pair(basic_spec(12));
    CHECK(ts::bit_identical(none.stream.frame(0), clean.reference));

    CHECK_THROWS_AS(generate_stream(spec, 4, 5), ParamError);
    CHECK_THROWS_AS(generate_stream(spec, 0, 0), ParamError);
}

TEST_CASE("per-frame noise is independent") {
    SceneSpec spec = basic_spec(13, 2.0 / 255.0);
    const SceneStream scene = generate_stream(spec, 3, 3);
    CHECK_FALSE(ts::bit_identical(scene.stream.frame(0), scene.stream.frame(1)));
    CHECK_FALSE(ts::bit_identical(scene.stream.frame(1), scene.stream.frame(2)));
}

TEST_CASE("evaluate_recovery on the field's own normalized profile") {
    SceneSpec spec = basic_spec(14);
    spec.width = 64;
    spec.height = 64;
    const EvidenceField f = ellipse_field(32, 32, 14, 14, 4.0 / 255.0, {0.2, 0.6, 0.2});
    spec.evidence = {f};
    const ScenePair pair = generate_pair(spec);

    // D+ equals the normalized profile up to float cancellation against the
    // base level (worst at the taper edge where the profile is ~0)
    const AmplifiedPair amplified = amplify_split(subtract(pair.scene, pair.reference));
    const RecoveryMetrics metrics =
        evaluate_recovery(amplified, pair.truth[0].mask, 0.5, chroma_rg(f.chroma));
    CHECK(metrics.argmax_hit);
    CHECK(metrics.has_chroma_error);
    CHECK(metrics.chroma_error <= 1e-3);

    // half-height support ratio of the plateau-0.5 taper: profile >= 0.5
    // inside t <= 0.75, support is t < 1 -> ratio ~ 0.75^2
    CHECK(metrics.iou == doctest::Approx(0.5625).epsilon(0.08));
}

TEST_CASE("degenerate pairs score zero recovery") {
    SceneSpec spec = basic_spec(15);
    spec.evidence = {ellipse_field(30, 24, 10, 10, 4.0 / 255.0, {0.2, 0.6, 0.2})};
    const ScenePair pair = generate_pair(spec);

    AmplifiedPair degenerate;
    degenerate.d_plus = Image(spec.width, spec.height, 3);
    degenerate.d_minus = Image(spec.width, spec.height, 3);
    degenerate.degenerate_plus = true;
    degenerate.degenerate_minus = true;
    const RecoveryMetrics metrics = evaluate_recovery(degenerate, pair.truth[0].mask, 0.5);
    CHECK(metrics.iou == 0.0);
    CHECK_FALSE(metrics.argmax_hit);
}

TEST_CASE("evaluate_recovery rejects an empty truth mask") {
    AmplifiedPair pair;
    pair.d_plus = Image(8, 8, 3);
    pair.d_minus = Image(8, 8, 3);
    const Image empty(8, 8, 1);
    CHECK_THROWS_AS(evaluate_recovery(pair, empty, 0.5), ParamError);
}

TEST_CASE("noise-free end-to-end chroma error stays small after filtering") {
    SceneSpec spec = basic_spec(16);
    spec.width = 96;
    spec.height = 96;
    const EvidenceField f = ellipse_field(48, 48, 20, 16, 2.0 / 255.0, {0.2, 0.6, 0.2});
    spec.evidence = {f};
    const ScenePair pair = generate_pair(spec);

    AnalysisParams params;
    params.sigma = 9.0;
    const AmplifiedPair amplified = analyze_pair(pair.scene, pair.reference, params);
    const RecoveryMetrics metrics =
        evaluate_recovery(amplified, pair.truth[0].mask, 0.5, chroma_rg(f.chroma));
    REQUIRE(metrics.has_chroma_error);
    CHECK(metrics.chroma_error <= 0.02);
}

TEST_CASE("reflection-only scenes populate D+ only; occlusion-only the converse") {
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        SceneSpec spec = basic_spec(200 + seed);
        spec.evidence = {ellipse_field(30, 24, 10, 8, 3.0 / 255.0, {0.2, 0.6, 0.2})};
        const ScenePair refl = generate_pair(spec);
        AnalysisParams params;
        params.sigma = 3.0;
        const AmplifiedPair a = analyze_pair(refl.scene, refl.reference, params);
        CHECK_FALSE(a.degenerate_plus);
        CHECK(a.degenerate_minus);

        spec.evidence[0].kind = EvidenceField::Kind::occlusion;
        const ScenePair occl = generate_pair(spec);
        const AmplifiedPair b = analyze_pair(occl.scene, occl.reference, params);
        CHECK(b.degenerate_plus);
        CHECK_FALSE(b.degenerate_minus);
    }
}

TEST_CASE("noise-free recovery hits the truth support for every geometry") {
    for (int seed = 0; seed < 50; ++seed) {
        std::mt19937_64 geo(400 + static_cast<std::uint64_t>(seed));
        std::uniform_real_distribution<double> center(20.0, 44.0);
        std::uniform_real_distribution<double> radius(8.0, 16.0);
        std::uniform_real_distribution<double> chroma(0.1, 0.8);

        SceneSpec spec = basic_spec(static_cast<std::uint64_t>(500 + seed));
        spec.width = 64;
        spec.height = 64;
        spec.evidence = {ellipse_field(center(geo), center(geo), radius(geo), radius(geo),
                                       2.0 / 255.0,
                                       {chroma(geo), chroma(geo), chroma(geo)})};
        const ScenePair pair = generate_pair(spec);
        AnalysisParams params;
        params.sigma = 5.0;
        const AmplifiedPair amplified = analyze_pair(pair.scene, pair.reference, params);
        const RecoveryMetrics metrics = evaluate_recovery(amplified, pair.truth[0].mask, 0.5);
        CHECK(metrics.argmax_hit);
    }
}

TEST_CASE("recovery degrades monotonically in noise") {
    const double levels[] = {0.0, 1.0 / 255.0, 2.0 / 255.0, 4.0 / 255.0};
    double mean_iou[4] = {0, 0, 0, 0};
    const int seeds = 20;

    for (int level = 0; level < 4; ++level) {
        for (int seed = 0; seed < seeds; ++seed) {
            SceneSpec spec = basic_spec(static_cast<std::uint64_t>(300 + seed), levels[level]);
            spec.width = 64;
            spec.height = 64;
            spec.evidence = {ellipse_field(32, 32, 13, 11, 2.0 / 255.0, {0.2, 0.6, 0.2})};
            const ScenePair pair = generate_pair(spec);
            AnalysisParams params;
            params.sigma = 3.0;
            const AmplifiedPair amplified = analyze_pair(pair.scene, pair.reference, params);
            mean_iou[level] +=
                evaluate_recovery(amplified, pair.truth[0].mask, 0.5).iou / seeds;
        }
    }
    CHECK(mean_iou[1] <= mean_iou[0] + 1e-9);
    CHECK(mean_iou[2] <= mean_iou[1] + 1e-9);
    CHECK(mean_iou[3] <= mean_iou[2] + 1e-9);
    CHECK(mean_iou[0] > 0.3);
}

TEST_CASE("scene spec parsing") {
    const std::string text = "width: 64\n"
                             "height: 48\n"
                             "channels: 3\n"
                             "base: constant\n"
                             "base_level: 0.5\n"
                             "noise_std: 1/255\n"
                             "seed: 77\n"
                             "# a comment line\n"
                             "field: reflection ellipse 30 24 12 9 2/255 0.2 0.6 0.2\n"
                             "field: occlusion rect 4 6 10 8 1/255 0.4 0.3 0.3 0.25\n";
    const SceneSpec spec = parse_scene_spec(text);
    CHECK(spec.width == 64);
    CHECK(spec.noise_std == doctest::Approx(1.0 / 255.0));
    CHECK(spec.seed == 77);
    REQUIRE(spec.evidence.size() == 2);
    CHECK(spec.evidence[0].kind == EvidenceField::Kind::reflection);
    CHECK(spec.evidence[0].shape == EvidenceField::Shape::ellipse);
    CHECK(spec.evidence[0].peak == doctest::Approx(2.0 / 255.0));
    CHECK(spec.evidence[1].shape == EvidenceField::Shape::rectangle);
    CHECK(spec.evidence[1].cx == doctest::Approx(9.0)); // x + w/2
    CHECK(spec.evidence[1].plateau == doctest::Approx(0.25));

    CHECK_THROWS_AS(parse_scene_spec("width: 64\nbogus_key: 3\n"), ParamError);
    CHECK_THROWS_AS(parse_scene_spec("width 64\n"), ParamError);
    CHECK_THROWS_AS(parse_scene_spec("width: 0\nheight: 4\n"), ParamError);
}

TEST_SUITE_END();
