#include <doctest.h>

#include <cmath>

#include "evdiff/errors.hpp"
#include "evdiff/haze.hpp"
#include "evdiff/rng.hpp"
#include "test_util.hpp"

using namespace evdiff;

namespace {

Image random_image(Rng& rng, int h, int w, int c, float lo = 0.0f, float hi = 1.0f) {
    Image img = Image::zeros(h, w, c);
    for (auto& v : img.values) v = lo + (hi - lo) * static_cast<float>(rng.uniform());
    return img;
}

}  // namespace

TEST_CASE("transmission one leaves the image unchanged") {
    Rng rng(1);
    Image j = random_image(rng, 6, 6, 1);
    Image i = synthesize_haze(j, HazeParams::with_scalar(1.0f, {0.9f}));
    for (std::size_t k = 0; k < j.values.size(); ++k) CHECK(i.values[k] == j.values[k]);
}

TEST_CASE("transmission zero yields pure airlight") {
    Rng rng(2);
    Image j = random_image(rng, 5, 4, 3);
    Image i = synthesize_haze(j, HazeParams::with_scalar(0.0f, {0.7f, 0.8f, 0.9f}));
    for (int y = 0; y < 5; ++y)
        for (int x = 0; x < 4; ++x) {
            CHECK(i.at(0, y, x) == doctest::Approx(0.7f));
            CHECK(i.at(1, y, x) == doctest::Approx(0.8f));
            CHECK(i.at(2, y, x) == doctest::Approx(0.9f));
        }
}

TEST_CASE("scattering model point evaluation") {
    Image j = Image::zeros(1, 1, 1);
    j.at(0, 0, 0) = 0.8f;
    Image i = synthesize_haze(j, HazeParams::with_scalar(0.5f, {0.9f}));
    CHECK(i.at(0, 0, 0) == doctest::Approx(0.85f));
}

TEST_CASE("inversion undoes synthesis when transmission is bounded away from zero") {
    Rng rng(3);
    for (int trial = 0; trial < 30; ++trial) {
        Image j = random_image(rng, 8, 8, 1);
        Tensor tmap = Tensor::zeros({8, 8});
        for (auto& v : tmap.values()) v = 0.05f + 0.95f * static_cast<float>(rng.uniform());
        HazeParams p = HazeParams::with_map(tmap, {static_cast<float>(0.5 + 0.5 * rng.uniform())});
        Image round = invert_haze(synthesize_haze(j, p), p);
        for (std::size_t k = 0; k < j.values.size(); ++k)
            CHECK(std::abs(round.values[k] - j.values[k]) < 1e-6f);
    }
}

TEST_CASE("airlight-valued scene is a fixed point of inversion") {
    Image i = Image::zeros(4, 4, 1);
    for (auto& v : i.values) v = 0.6f;
    Image j = invert_haze(i, HazeParams::with_scalar(0.3f, {0.6f}));
    for (float v : j.values) CHECK(v == doctest::Approx(0.6f).epsilon(1e-6));
}

TEST_CASE("strict inversion names the pixel below the transmission floor") {
    Image i = Image::zeros(2, 3, 1);
    Tensor tmap = Tensor::full({2, 3}, 0.5f);
    tmap.at2(1, 2) = 0.001f;
    HazeParams p = HazeParams::with_map(tmap, {0.8f});
    try {
        invert_haze(i, p, 0.01f, true);
        FAIL("expected ValidationError");
    } catch (const ValidationError& e) {
        const std::string msg = e.what();
        CHECK(msg.find("x=2") != std::string::npos);
        CHECK(msg.find("y=1") != std::string::npos);
    }
}

TEST_CASE("transmission from depth follows the exponential decay") {
    Tensor depth = Tensor::full({2, 2}, 0.0f);
    CHECK(transmission_from_depth(depth, 5.0f).values() == std::vector<float>{1, 1, 1, 1});
    Tensor d1 = Tensor::full({1, 1}, 1.0f);
    CHECK(transmission_from_depth(d1, 0.0f)[0] == doctest::Approx(1.0f));
    CHECK(transmission_from_depth(d1, static_cast<float>(std::log(2.0)))[0] == doctest::Approx(0.5f));
    CHECK_THROWS_AS(transmission_from_depth(d1, -1.0f), ValidationError);
    Tensor neg = Tensor::full({1, 1}, -0.5f);
    CHECK_THROWS_AS(transmission_from_depth(neg, 1.0f), ValidationError);
}

TEST_CASE("dynamic range report matches the closed form") {
    DrReport r = dynamic_range_report(100.0, 0.01, 0.5, 0.18);
    CHECK(r.a == doctest::Approx(0.005));
    CHECK(r.b == doctest::Approx(0.09));
    CHECK(r.dr_obs == doctest::Approx(0.59 / 0.095));
    CHECK(r.dr_obs < 100.0);
    CHECK(r.compressed);
}

TEST_CASE("no haze means no compression in the t->1 limit") {
    DrReport r = dynamic_range_report(50.0, 0.02, 0.999999, 0.5);
    CHECK(r.dr_obs == doctest::Approx(50.0).epsilon(1e-3));
}

TEST_CASE("degenerate scenes are rejected") {
    CHECK_THROWS_AS(dynamic_range_report(1.0, 0.01, 0.5, 0.18), ValidationError);
    CHECK_THROWS_AS(dynamic_range_report(10.0, 0.0, 0.5, 0.18), ValidationError);
    CHECK_THROWS_AS(dynamic_range_report(10.0, 0.01, 1.0, 0.18), ValidationError);
    CHECK_THROWS_AS(dynamic_range_report(10.0, 0.01, 0.5, 0.0), ValidationError);
}

TEST_CASE("observed dynamic range is always compressed and monotone in t") {
    Rng rng(17);
    for (int i = 0; i < 10000; ++i) {
        const double k = 1.0 + 99.0 * rng.uniform() + 1e-6;
        const double t = 0.01 + 0.98 * rng.uniform();
        const double j_min = 1e-4 + rng.uniform();
        const double a = 1e-4 + rng.uniform();
        CHECK(dynamic_range_report(k, j_min, t, a).dr_obs < k);
    }
    for (int trial = 0; trial < 100; ++trial) {
        const double k = 1.5 + 80.0 * rng.uniform();
        const double j_min = 1e-3 + rng.uniform();
        const double a = 1e-3 + rng.uniform();
        double prev = 0.0;
        for (int g = 1; g <= 100; ++g) {
            const double t = 0.01 + 0.97 * g / 100.0;
            const double cur = dynamic_range_report(k, j_min, t, a).dr_obs;
            CHECK(cur > prev);
            prev = cur;
        }
    }
}

TEST_CASE("haze synthesis preserves pixelwise order in the clean image") {
    Rng rng(31);
    for (int trial = 0; trial < 20; ++trial) {
        Image a = random_image(rng, 6, 6, 1);
        Image b = a;
        for (auto& v : b.values) v = std::min(1.0f, v + 0.1f * static_cast<float>(rng.uniform()));
        HazeParams p = HazeParams::with_scalar(static_cast<float>(0.2 + 0.7 * rng.uniform()),
                                               {static_cast<float>(rng.uniform())});
        Image ha = synthesize_haze(a, p);
        Image hb = synthesize_haze(b, p);
        for (std::size_t k = 0; k < ha.values.size(); ++k) CHECK(ha.values[k] <= hb.values[k] + 1e-7f);
    }
}

TEST_CASE("histogram bins and summary") {
    Image half = Image::zeros(4, 4, 1);
    for (auto& v : half.values) v = 0.5f;
    HistogramSummary h = intensity_histogram(half, 10);
    CHECK(h.counts[5] == 16);
    for (int b = 0; b < 10; ++b)
        if (b != 5) CHECK(h.counts[static_cast<std::size_t>(b)] == 0);

    Image ends = Image::zeros(1, 2, 1);
    ends.at(0, 0, 0) = 0.0f;
    ends.at(0, 0, 1) = 1.0f;
    HistogramSummary h2 = intensity_histogram(ends, 8);
    CHECK(h2.counts.front() == 1);
    CHECK(h2.counts.back() == 1);
    CHECK(h2.spread == doctest::Approx(255.0));  // min floored at 1/255

    CHECK_THROWS_AS(intensity_histogram(half, 1), ValidationError);
}

TEST_CASE("extent mismatches are rejected") {
    Image j = Image::zeros(4, 4, 1);
    Tensor tmap = Tensor::zeros({3, 4});
    CHECK_THROWS_AS(synthesize_haze(j, HazeParams::with_map(tmap, {0.9f})), DimensionError);
    CHECK_THROWS_AS(synthesize_haze(j, HazeParams::with_scalar(0.5f, {0.9f, 0.9f})), DimensionError);
}
