#include "difd/error.hpp"
#include "difd/pipeline.hpp"
#include "difd/threading.hpp"

#include "test_support.hpp"

#include <doctest.h>

#include <cmath>
#include <limits>
#include <numeric>

using namespace difd;
namespace ts = testsupport;

namespace {

AnalysisParams params_sigma(double sigma, int radius = 0) {
    AnalysisParams p;
    p.sigma = sigma;
    p.truncation_radius = radius;
    return p;
}

} // namespace

TEST_SUITE_BEGIN("pipeline");

TEST_CASE("kernel weights: sigma=1, radius=3") {
    const GaussianKernel k = build_kernel(params_sigma(1.0, 3));
    REQUIRE(k.weights.size() == 7);

    // independent evaluation of exp(-j^2/2) for j = -3..3, then normalize
    double raw[7];
    double sum = 0.0;
    for (int j = -3; j <= 3; ++j) {
        raw[j + 3] = std::exp(-0.5 * j * j);
        sum += raw[j + 3];
    }
    for (int i = 0; i < 7; ++i)
        CHECK(k.weights[static_cast<std::size_t>(i)] ==
              doctest::Approx(raw[i] / sum).epsilon(1e-12));
    CHECK(k.weights[3] == doctest::Approx(0.3990503).epsilon(1e-6));
}

TEST_CASE("kernel weights normalize to 1 within 1e-12") {
    for (double sigma : {0.5, 1.0, 2.0, 9.0, 17.25}) {
        const GaussianKernel k = build_kernel(params_sigma(sigma));
        const double sum = std::accumulate(k.weights.begin(), k.weights.end(), 0.0);
        CHECK(std::abs(sum - 1.0) <= 1e-12);
        for (double w : k.weights)
            CHECK(w > 0.0);
    }
}

TEST_CASE("kernel for sigma=9 has 55 symmetric taps") {
    const GaussianKernel k = build_kernel(params_sigma(9.0));
    CHECK(k.radius == 27);
    REQUIRE(k.weights.size() == 55);
    for (int j = 0; j < 27; ++j)
        CHECK(k.weights[static_cast<std::size_t>(j)] ==
              k.weights[static_cast<std::size_t>(54 - j)]);
}

TEST_CASE("kernel rejects nonpositive sigma") {
    CHECK_THROWS_AS(build_kernel(params_sigma(0.0)), ParamError);
    CHECK_THROWS_AS(build_kernel(params_sigma(-1.0)), ParamError);
}

TEST_CASE("filtering preserves constant images") {
    const GaussianKernel k = build_kernel(params_sigma(2.0));
    const Image c = Image::constant(20, 14, 3, 0.731f);
    const Image out = spatial_filter(c, k);
    for (float s : out.samples())
        CHECK(std::abs(s - 0.731f) <= 1e-9f);
}

TEST_CASE("impulse response center equals the squared 1D center weight") {
    const GaussianKernel k = build_kernel(params_sigma(1.0, 3));
    Image impulse(31, 31, 1);
    impulse.at(0, 15, 15) = 1.0f;
    const Image out = spatial_filter(impulse, k);

    const double center = k.weights[static_cast<std::size_t>(k.radius)];
    CHECK(out.at(0, 15, 15) == doctest::Approx(center * center).epsilon(1e-6));
    CHECK(out.at(0, 15, 15) == doctest::Approx(0.1592411).epsilon(1e-4));

    const Image dense = ts::dense_convolve_2d(impulse, k);
    CHECK(ts::max_abs_difference(out, dense) <= 1e-6);
}

TEST_CASE("separable filter matches the dense 2D oracle") {
    std::mt19937_64 gen(21);
    const GaussianKernel k = build_kernel(params_sigma(2.0));
    const Image img = ts::random_image(gen, 32, 32, 3, -0.5f, 0.5f);
    const Image out = spatial_filter(img, k);
    const Image dense = ts::dense_convolve_2d(img, k);
    CHECK(ts::max_abs_difference(out, dense) <= 1e-6);
}

TEST_CASE("mirror boundaries fold correctly when the radius exceeds the image") {
    std::mt19937_64 gen(22);
    const GaussianKernel k = build_kernel(params_sigma(9.0)); // radius 27
    const Image img = ts::random_image(gen, 5, 4, 1, -1.0f, 1.0f);
    const Image out = spatial_filter(img, k);
    const Image dense = ts::dense_convolve_2d(img, k);
    CHECK(ts::max_abs_difference(out, dense) <= 1e-6);
}

TEST_CASE("filtering is linear") {
    std::mt19937_64 gen(23);
    const GaussianKernel k = build_kernel(params_sigma(1.5));
    const Image a = ts::random_image(gen, 24, 18, 3, -1.0f, 1.0f);
    const Image b = ts::random_image(gen, 24, 18, 3, -1.0f, 1.0f);

    Image sum(24, 18, 3);
    for (std::size_t i = 0; i < sum.sample_count(); ++i)
        sum.samples()[i] = a.samples()[i] + b.samples()[i];
    const Image f_sum = spatial_filter(sum, k);
    const Image f_a = spatial_filter(a, k);
    const Image f_b = spatial_filter(b, k);
    for (std::size_t i = 0; i < sum.sample_count(); ++i)
        CHECK(std::abs(f_sum.samples()[i] - (f_a.samples()[i] + f_b.samples()[i])) <= 1e-6f);

    Image scaled(24, 18, 3);
    for (std::size_t i = 0; i < scaled.sample_count(); ++i)
        scaled.samples()[i] = 0.25f * a.samples()[i]; // exact scaling
    const Image f_scaled = spatial_filter(scaled, k);
    for (std::size_t i = 0; i < scaled.sample_count(); ++i)
        CHECK(std::abs(f_scaled.samples()[i] - 0.25f * f_a.samples()[i]) <= 1e-6f);
}

TEST_CASE("amplify_split of zero input degenerates on both sides") {
    const Image zero(16, 16, 3);
    const AmplifiedPair pair = amplify_split(zero);
    CHECK(pair.degenerate_plus);
    CHECK(pair.degenerate_minus);
    CHECK(pair.gain_plus == 0.0);
    CHECK(pair.gain_minus == 0.0);
    for (float s : pair.d_plus.samples())
        CHECK(s == 0.0f);
    for (float s : pair.d_minus.samples())
        CHECK(s == 0.0f);
}

TEST_CASE("amplify_split gains are the reciprocal extremes") {
    Image d(8, 8, 1);
    d.at(0, 2, 3) = 0.02f;
    d.at(0, 5, 6) = -0.005f;
    const AmplifiedPair pair = amplify_split(d);
    CHECK_FALSE(pair.degenerate_plus);
    CHECK_FALSE(pair.degenerate_minus);
    CHECK(pair.gain_plus == doctest::Approx(50.0).epsilon(1e-6));
    CHECK(pair.gain_minus == doctest::Approx(200.0).epsilon(1e-6));
    CHECK(sample_min_max(pair.d_plus).max == 1.0f);
    CHECK(sample_min_max(pair.d_minus).max == 1.0f);
}

TEST_CASE("amplify_split matches the element-wise normalization oracle") {
    std::mt19937_64 gen(31);
    for (int trial = 0; trial < 10; ++trial) {
        const Image d = ts::random_image(gen, 16, 16, 3, -0.04f, 0.03f);
        const AmplifiedPair pair = amplify_split(d);

        const MinMax mm = sample_min_max(d);
        for (std::size_t i = 0; i < d.sample_count(); ++i) {
            const float v = d.samples()[i];
            const float expect_plus = (v > 0.0f ? v : 0.0f) / mm.max;
            const float neg = 0.0f - v;
            const float expect_minus = (neg > 0.0f ? neg : 0.0f) / (0.0f - mm.min);
            CHECK(std::abs(pair.d_plus.samples()[i] - expect_plus) <= 1e-9f);
            CHECK(std::abs(pair.d_minus.samples()[i] - expect_minus) <= 1e-9f);
        }
        CHECK(sample_min_max(pair.d_plus).max == 1.0f);
        CHECK(sample_min_max(pair.d_minus).max == 1.0f);
    }
}

TEST_CASE("amplified output is invariant under positive scaling of the input") {
    std::mt19937_64 gen(37);
    const Image d = ts::random_image(gen, 16, 16, 3, -0.02f, 0.02f);
    const AmplifiedPair base = amplify_split(d);

    // power-of-two scaling is exact, so images must match bit for bit
    Image scaled(16, 16, 3);
    for (std::size_t i = 0; i < d.sample_count(); ++i)
        scaled.samples()[i] = d.samples()[i] * 8.0f;
    const AmplifiedPair pow2 = amplify_split(scaled);
    CHECK(ts::bit_identical(base.d_plus, pow2.d_plus));
    CHECK(ts::bit_identical(base.d_minus, pow2.d_minus));
    CHECK(pow2.gain_plus == doctest::Approx(base.gain_plus / 8.0).epsilon(1e-12));

    // arbitrary scaling only up to rounding
    for (std::size_t i = 0; i < d.sample_count(); ++i)
        scaled.samples()[i] = d.samples()[i] * 3.7f;
    const AmplifiedPair arb = amplify_split(scaled);
    CHECK(ts::max_abs_difference(base.d_plus, arb.d_plus) <= 1e-6);
    CHECK(ts::max_abs_difference(base.d_minus, arb.d_minus) <= 1e-6);
}

TEST_CASE("amplify_split rejects non-finite input") {
    Image d(4, 4, 1);
    d.at(0, 1, 1) = std::numeric_limits<float>::quiet_NaN();
    CHECK_THROWS_AS(amplify_split(d), DataError);
}

TEST_CASE("analyze_pair of identical images is degenerate") {
    std::mt19937_64 gen(41);
    const Image p = ts::random_image(gen, 40, 30, 3);
    const AmplifiedPair pair = analyze_pair(p, p, params_sigma(3.0));
    CHECK(pair.degenerate_plus);
    CHECK(pair.degenerate_minus);
}

TEST_CASE("analyze_pair localizes an additive bump") {
    const int w = 96, h = 96;
    Image p_r = Image::constant(w, h, 3, 0.5f);
    Image p = p_r;
    // smooth bump of peak 3/255 centered at (30, 60), radius 12
    const double peak = 3.0 / 255.0;
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            const double r = std::hypot((x - 30.0) / 12.0, (y - 60.0) / 12.0);
            if (r < 1.0) {
                const float add = static_cast<float>(peak * 0.5 * (1.0 + std::cos(3.14159265358979 * r)));
                for (int c = 0; c < 3; ++c)
                    p.at(c, x, y) += add;
            }
        }
    }
    const AmplifiedPair pair = analyze_pair(p, p_r, params_sigma(9.0));
    CHECK_FALSE(pair.degenerate_plus);
    const SampleLoc loc = argmax_sample(pair.d_plus);
    CHECK(std::hypot(loc.x - 30.0, loc.y - 60.0) < 12.0);
}

TEST_CASE("sigma=0 skips the filtering stage") {
    std::mt19937_64 gen(43);
    const Image p = ts::random_image(gen, 12, 9, 3);
    const Image r = ts::random_image(gen, 12, 9, 3);
    const AmplifiedPair direct = analyze_pair(p, r, params_sigma(0.0));
    const AmplifiedPair expected = amplify_split(subtract(p, r));
    CHECK(ts::bit_identical(direct.d_plus, expected.d_plus));
    CHECK(ts::bit_identical(direct.d_minus, expected.d_minus));
}

TEST_CASE("masked filtering matches the renormalized-weights oracle") {
    std::mt19937_64 gen(47);
    const GaussianKernel k = build_kernel(params_sigma(2.0));
    const Image img = ts::random_image(gen, 24, 20, 3, -0.5f, 0.5f);

    Image valid(24, 20, 1);
    for (std::size_t i = 0; i < valid.plane_size(); ++i)
        valid.plane(0)[i] = 1.0f;
    for (int y = 5; y < 14; ++y) // carve out a block
        for (int x = 8; x < 19; ++x)
            valid.at(0, x, y) = 0.0f;

    const Image out = spatial_filter_masked(img, valid, k);
    const Image oracle = ts::dense_masked_convolve_2d(img, valid, k);
    CHECK(ts::max_abs_difference(out, oracle) <= 1e-6);
}

TEST_CASE("filtering is bit-identical across worker counts") {
    std::mt19937_64 gen(59);
    const Image img = ts::random_image(gen, 64, 48, 3, -0.5f, 0.5f);
    const GaussianKernel k = build_kernel(params_sigma(9.0));

    set_max_threads(1);
    const Image serial = spatial_filter(img, k);
    set_max_threads(3);
    const Image parallel = spatial_filter(img, k);
    CHECK(ts::bit_identical(serial, parallel));
}

TEST_CASE("pipeline output is identical across kernel backends") {
    if (!kernels::avx2_available())
        return;
    std::mt19937_64 gen(53);
    const Image p = ts::random_image(gen, 48, 36, 3);
    const Image r = ts::random_image(gen, 48, 36, 3);

    ts::BackendGuard guard;
    kernels::select_backend(kernels::Backend::scalar);
    const AmplifiedPair a = analyze_pair(p, r, params_sigma(2.0));
    kernels::select_backend(kernels::Backend::avx2);
    const AmplifiedPair b = analyze_pair(p, r, params_sigma(2.0));

    CHECK(ts::bit_identical(a.d_plus, b.d_plus));
    CHECK(ts::bit_identical(a.d_minus, b.d_minus));
    CHECK(a.gain_plus == b.gain_plus);
}

TEST_SUITE_END();
