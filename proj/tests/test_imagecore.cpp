#include <gtest/gtest.h>

#include <cmath>
#include <fstream>

#include "sharpxr/dataset.hpp"
#include "sharpxr/image.hpp"
#include "test_util.hpp"

using namespace sharpxr;
using sharpxr::test::random_image;
using sharpxr::test::TempDir;

namespace {

void write_raw(const std::filesystem::path& p, const std::string& bytes) {
    std::ofstream out(p, std::ios::binary);
    out << bytes;
}

std::string pgm(int w, int h, unsigned char fill) {
    return "P5\n" + std::to_string(w) + " " + std::to_string(h) + "\n255\n" + std::string(static_cast<std::size_t>(w) * h, static_cast<char>(fill));
}

// Scalar bilinear reference, written independently of resize_bilinear.
double reference_bilinear(const Image& img, int oh, int ow, int y, int x) {
    double sy = (y + 0.5) * img.height() / oh - 0.5;
    double sx = (x + 0.5) * img.width() / ow - 0.5;
    sy = std::min(std::max(sy, 0.0), img.height() - 1.0);
    sx = std::min(std::max(sx, 0.0), img.width() - 1.0);
    const int y0 = static_cast<int>(std::floor(sy));
    const int x0 = static_cast<int>(std::floor(sx));
    const int y1 = std::min(y0 + 1, img.height() - 1);
    const int x1 = std::min(x0 + 1, img.width() - 1);
    const double ty = sy - y0;
    const double tx = sx - x0;
    return (1 - ty) * ((1 - tx) * img.at(y0, x0) + tx * img.at(y0, x1)) + ty * ((1 - tx) * img.at(y1, x0) + tx * img.at(y1, x1));
}

}  // namespace

TEST(Image, RejectsOutOfRangePixels) {
    EXPECT_THROW(Image(2, 2, std::vector<float>{0.0f, 0.5f, 1.2f, 0.1f}), ImageError);
    EXPECT_THROW(Image(2, 2, std::vector<float>{0.0f, 0.5f}), ImageError);
    const Image c = Image::clamped(1, 3, {-0.5f, 0.4f, 3.0f});
    EXPECT_EQ(c.at(0, 0), 0.0f);
    EXPECT_EQ(c.at(0, 1), 0.4f);
    EXPECT_EQ(c.at(0, 2), 1.0f);
}

TEST(Pgm, LoadMapsBytesToUnitInterval) {
    TempDir dir("pgm");
    write_raw(dir / "white.pgm", pgm(3, 2, 255));
    write_raw(dir / "black.pgm", pgm(3, 2, 0));
    write_raw(dir / "mid.pgm", "P5\n# comment\n1 1\n255\n" + std::string(1, static_cast<char>(128)));

    const Image white = load_image(dir / "white.pgm");
    EXPECT_EQ(white.height(), 2);
    EXPECT_EQ(white.width(), 3);
    for (float v : white.pixels()) EXPECT_EQ(v, 1.0f);
    const Image black = load_image(dir / "black.pgm");
    for (float v : black.pixels()) EXPECT_EQ(v, 0.0f);
    EXPECT_FLOAT_EQ(load_image(dir / "mid.pgm").at(0, 0), 128.0f / 255.0f);
}

TEST(Pgm, LoadErrors) {
    TempDir dir("pgm_err");
    EXPECT_THROW(load_image(dir / "missing.pgm"), ImageError);
    write_raw(dir / "color.ppm", "P6\n1 1\n255\nabc");
    EXPECT_THROW(load_image(dir / "color.ppm"), ImageError);
    write_raw(dir / "deep.pgm", "P5\n1 1\n65535\nab");
    EXPECT_THROW(load_image(dir / "deep.pgm"), ImageError);
    write_raw(dir / "short.pgm", "P5\n4 4\n255\nabc");
    EXPECT_THROW(load_image(dir / "short.pgm"), ImageError);
    write_raw(dir / "junk.pgm", "hello");
    EXPECT_THROW(load_image(dir / "junk.pgm"), ImageError);
}

TEST(Pgm, SaveQuantizesHalfUp) {
    TempDir dir("pgm_save");
    save_image(Image(2, 2, 1.0f), dir / "ones.pgm");
    std::ifstream in(dir / "ones.pgm", std::ios::binary);
    const std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    EXPECT_EQ(bytes, pgm(2, 2, 255));

    EXPECT_EQ(quantize_u8(0.5f), 128);  // 127.5 rounds up
    EXPECT_EQ(quantize_u8(0.0f), 0);
    EXPECT_EQ(quantize_u8(1.0f), 255);
}

TEST(Pgm, RoundTripWithinHalfStep) {
    TempDir dir("pgm_rt");
    const Image img = random_image(17, 23, 5);
    save_image(img, dir / "r.pgm");
    const Image back = load_image(dir / "r.pgm");
    ASSERT_EQ(back.size(), img.size());
    for (std::size_t i = 0; i < img.size(); ++i) {
        EXPECT_LE(std::abs(back.pixels()[i] - img.pixels()[i]), 1.0f / (2 * 255) + 1e-7f);
    }
    EXPECT_EQ(back, quantize(img));
}

TEST(Resize, ConstantStaysConstant) {
    const Image c(7, 5, 0.3f);
    for (auto [h, w] : {std::pair{1, 1}, {3, 9}, {16, 16}, {256, 128}}) {
        const Image r = resize_bilinear(c, h, w);
        ASSERT_EQ(r.height(), h);
        ASSERT_EQ(r.width(), w);
        for (float v : r.pixels()) EXPECT_FLOAT_EQ(v, 0.3f);
    }
}

TEST(Resize, IdentityIsBitwise) {
    const Image img = random_image(12, 9, 1);
    EXPECT_EQ(resize_bilinear(img, 12, 9), img);
}

TEST(Resize, MatchesScalarReferenceAndIsMonotone) {
    const Image ramp(2, 2, std::vector<float>{0, 1, 0, 1});
    const Image r = resize_bilinear(ramp, 2, 4);
    for (int y = 0; y < 2; ++y) {
        for (int x = 0; x < 4; ++x) {
            EXPECT_NEAR(r.at(y, x), reference_bilinear(ramp, 2, 4, y, x), 1e-6);
            if (x > 0) EXPECT_GE(r.at(y, x), r.at(y, x - 1));
        }
    }
    const Image img = random_image(13, 11, 9);
    const Image big = resize_bilinear(img, 31, 7);
    for (int y = 0; y < 31; ++y) {
        for (int x = 0; x < 7; ++x) EXPECT_NEAR(big.at(y, x), reference_bilinear(img, 31, 7, y, x), 1e-6);
    }
}

TEST(Resize, ZeroTargetThrows) {
    EXPECT_THROW(resize_bilinear(Image(4, 4), 0, 4), ImageError);
    EXPECT_THROW(resize_bilinear(Image(4, 4), 4, 0), ImageError);
}

TEST(Augment, IdentityConfigIsExact) {
    const Image img = random_image(32, 32, 3);
    Rng rng(11);
    for (int i = 0; i < 5; ++i) EXPECT_EQ(augment(img, AugmentConfig::identity(), rng), img);
}

TEST(Augment, FlipIsInvolution) {
    const Image img = random_image(8, 13, 4);
    EXPECT_NE(flip_horizontal(img), img);
    EXPECT_EQ(flip_horizontal(flip_horizontal(img)), img);
    AugmentConfig always = AugmentConfig::identity();
    always.flip_prob = 1.0;
    Rng rng(1);
    EXPECT_EQ(augment(augment(img, always, rng), always, rng), img);
}

TEST(Augment, ContrastPivotsAtMidGray) {
    const Image mid(6, 6, 0.5f);
    EXPECT_EQ(adjust_intensity(mid, 1.1, 0.0), mid);
    const Image low(2, 2, 0.25f);
    EXPECT_FLOAT_EQ(adjust_intensity(low, 1.1, 0.0).at(0, 0), 0.225f);
    EXPECT_FLOAT_EQ(adjust_intensity(low, 1.0, 0.1).at(0, 0), 0.35f);
}

TEST(Augment, RotationFillsWithZeroAndKeepsCenter) {
    const Image ones(9, 9, 1.0f);
    const Image r = rotate(ones, 15.0);
    EXPECT_FLOAT_EQ(r.at(4, 4), 1.0f);
    EXPECT_LT(r.at(0, 0), 1.0f);
    // 90 degrees on an odd square maps pixels exactly (up to trig rounding).
    const Image img = random_image(5, 5, 8);
    const Image q = rotate(img, 90.0);
    EXPECT_NEAR(q.at(2, 2), img.at(2, 2), 1e-6);
}

TEST(Augment, OutputsStayInRangeAndAreSeedDeterministic) {
    const Image img = random_image(32, 32, 6);
    AugmentConfig cfg;
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        Rng a(seed);
        Rng b(seed);
        const Image x = augment(img, cfg, a);
        EXPECT_EQ(x, augment(img, cfg, b));
        for (float v : x.pixels()) {
            EXPECT_GE(v, 0.0f);
            EXPECT_LE(v, 1.0f);
        }
    }
}

TEST(Augment, ConfigValidation) {
    AugmentConfig bad;
    bad.flip_prob = 1.5;
    Rng rng(0);
    EXPECT_THROW(augment(Image(4, 4), bad, rng), ImageError);
    bad = {};
    bad.rotation_deg_max = -1;
    EXPECT_THROW(bad.validate(), ImageError);
}

namespace {

LabeledDataset synthetic(int n0, int n1) {
    LabeledDataset ds;
    ds.class_names = {"a", "b"};
    for (int i = 0; i < n0 + n1; ++i) ds.items.push_back({Image(2, 2, static_cast<float>(i % 256) / 255.0f), i < n0 ? 0 : 1});
    return ds;
}

}  // namespace

TEST(StratifiedSplit, ApportionsPerClass) {
    const auto ds = synthetic(600, 400);
    const auto s = stratified_split(ds, {}, 7);
    EXPECT_NEAR(static_cast<double>(s.train.count_label(0)), 450.0, 1.0);
    EXPECT_NEAR(static_cast<double>(s.train.count_label(1)), 300.0, 1.0);
    EXPECT_EQ(s.train.size() + s.val.size() + s.test.size(), ds.size());
}

TEST(StratifiedSplit, PaperScaleCounts) {
    // 5,856 images, balanced classes.
    const auto c = apportion(2928, {});
    const std::size_t train = 2 * c[0], val = 2 * c[1], test = 2 * c[2];
    EXPECT_EQ(train + val + test, 5856u);
    EXPECT_NEAR(static_cast<double>(train), 4391.0, 1.0);
    EXPECT_NEAR(static_cast<double>(val), 586.0, 1.0);
    EXPECT_NEAR(static_cast<double>(test), 879.0, 1.0);
}

TEST(StratifiedSplit, DeterministicDisjointAndComplete) {
    // Tag each item by a unique pixel so membership can be traced.
    LabeledDataset ds;
    for (int i = 0; i < 90; ++i) ds.items.push_back({Image(1, 1, static_cast<float>(i) / 255.0f), i % 3});
    const auto a = stratified_split(ds, {}, 99);
    const auto b = stratified_split(ds, {}, 99);
    const auto c = stratified_split(ds, {}, 100);
    auto ids = [](const LabeledDataset& d) {
        std::vector<int> out;
        for (const auto& it : d.items) out.push_back(static_cast<int>(std::lround(it.image.at(0, 0) * 255.0f)));
        return out;
    };
    EXPECT_EQ(ids(a.train), ids(b.train));
    EXPECT_EQ(ids(a.test), ids(b.test));
    EXPECT_NE(ids(a.train), ids(c.train));

    std::vector<int> all;
    for (const auto* d : {&a.train, &a.val, &a.test}) {
        const auto v = ids(*d);
        all.insert(all.end(), v.begin(), v.end());
    }
    std::sort(all.begin(), all.end());
    for (int i = 0; i < 90; ++i) EXPECT_EQ(all[static_cast<std::size_t>(i)], i);
}

TEST(StratifiedSplit, PropertyCountsWithinOneOfQuota) {
    std::mt19937 eng(3);
    const SplitFractions fr;
    for (int trial = 0; trial < 50; ++trial) {
        const int n0 = 3 + static_cast<int>(eng() % 200);
        const int n1 = 3 + static_cast<int>(eng() % 200);
        const auto s = stratified_split(synthetic(n0, n1), fr, eng());
        const std::array<const LabeledDataset*, 3> splits = {&s.train, &s.val, &s.test};
        const std::array<double, 3> f = {fr.train, fr.val, fr.test};
        for (int k = 0; k < 2; ++k) {
            const double nk = k == 0 ? n0 : n1;
            for (int i = 0; i < 3; ++i) {
                EXPECT_LE(std::abs(static_cast<double>(splits[i]->count_label(k)) - f[i] * nk), 1.0);
            }
        }
    }
}

TEST(StratifiedSplit, Errors) {
    EXPECT_THROW(stratified_split(synthetic(10, 2), {}, 0), std::invalid_argument);
    EXPECT_THROW(stratified_split(synthetic(10, 10), {0.5, 0.2, 0.2}, 0), std::invalid_argument);
    LabeledDataset gap;
    for (int i = 0; i < 6; ++i) gap.items.push_back({Image(1, 1), i % 2 == 0 ? 0 : 2});
    EXPECT_THROW(stratified_split(gap, {}, 0), std::invalid_argument);
}

TEST(Dataset, LoadsSortedClassDirectories) {
    TempDir dir("ds");
    std::filesystem::create_directories(dir / "pneumonia");
    std::filesystem::create_directories(dir / "normal");
    save_image(Image(4, 4, 1.0f), dir / "pneumonia" / "b.pgm");
    save_image(Image(4, 4, 0.0f), dir / "normal" / "z.pgm");
    save_image(Image(4, 4, 0.0f), dir / "normal" / "a.pgm");
    const auto ds = load_dataset(dir.path());
    ASSERT_EQ(ds.size(), 3u);
    EXPECT_EQ(ds.class_names, (std::vector<std::string>{"normal", "pneumonia"}));
    EXPECT_EQ(ds.items[0].label, 0);
    EXPECT_EQ(ds.items[2].label, 1);
    EXPECT_EQ(ds.items[2].image.at(0, 0), 1.0f);
}
