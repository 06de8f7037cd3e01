#include <gtest/gtest.h>

#include <filesystem>

#include "adapedit/controller.hpp"
#include "adapedit/errors.hpp"
#include "adapedit/image.hpp"
#include "adapedit/record.hpp"
#include "adapedit/toy_backend.hpp"

using namespace adapedit;

namespace {

AttnRecord small_record(int steps) {
    EditConfig cfg;
    cfg.prompt = "a cat on a mat";
    cfg.edit = "a dog on a mat";
    cfg.steps = steps;
    ToyBackend b;
    return collect_pass(cfg, b).record;
}

std::filesystem::path temp_file(const std::string& name) {
    const auto dir = std::filesystem::temp_directory_path() / "adapedit_record_test";
    std::filesystem::create_directories(dir);
    return dir / name;
}

}  // namespace

TEST(AttnRecordTest, AppendEnforcesDescendingSteps) {
    AttnRecord rec(3, {}, {}, {});
    EXPECT_THROW(rec.append(StepRecord{2}), StateError);
    rec.append(StepRecord{3});
    EXPECT_THROW(rec.append(StepRecord{3}), StateError);
    rec.append(StepRecord{2});
    EXPECT_TRUE(rec.has(3));
    EXPECT_FALSE(rec.has(1));
    EXPECT_THROW(rec.at(1), StateError);
    EXPECT_FALSE(rec.complete());
    rec.append(StepRecord{1});
    EXPECT_TRUE(rec.complete());
    EXPECT_EQ(rec.at(1).t, 1);
}

TEST(AttnRecordTest, LayerLookup) {
    AttnRecord rec(1, {{4, {8, 8}, 2}}, {}, {});
    EXPECT_EQ(rec.layer(4).heads, 2u);
    EXPECT_THROW(rec.layer(0), DimensionError);
}

TEST(RecordFileTest, FullRoundTrip) {
    const AttnRecord rec = small_record(3);
    EXPECT_EQ(deserialize_record(serialize_record(rec)), rec);
}

TEST(RecordFileTest, CompactFormKeepsFinalStepFeaturesOnly) {
    const AttnRecord rec = small_record(3);
    const auto path = temp_file("compact.bin");
    save_record(rec, path);
    const AttnRecord back = load_record(path);
    EXPECT_LT(std::filesystem::file_size(path), serialize_record(rec).size());
    ASSERT_EQ(back.entries().size(), 3u);
    for (const auto& e : back.entries()) {
        const StepRecord& orig = rec.at(e.t);
        EXPECT_EQ(e.source_maps, orig.source_maps);
        EXPECT_EQ(e.edit_maps, orig.edit_maps);
        if (e.t == 1) {
            EXPECT_EQ(e.edit_features, orig.edit_features);
        } else {
            EXPECT_TRUE(e.edit_features.empty());
        }
    }
    EXPECT_EQ(back.source_prompt(), rec.source_prompt());
    EXPECT_EQ(back.edit_prompt(), rec.edit_prompt());
    EXPECT_EQ(back.layers(), rec.layers());
}

TEST(RecordFileTest, CorruptInputIsRejected) {
    auto bytes = serialize_record(small_record(1));
    auto bad = bytes;
    bad[0] = 'X';
    EXPECT_THROW(deserialize_record(bad), ProtocolError);
    bad = bytes;
    bad[4] = 9;
    EXPECT_THROW(deserialize_record(bad), ProtocolError);
    bad = bytes;
    bad.resize(bytes.size() / 2);
    EXPECT_THROW(deserialize_record(bad), ProtocolError);
    bad = bytes;
    bad.push_back(0);
    EXPECT_THROW(deserialize_record(bad), ProtocolError);
}

TEST(RecordFileTest, MissingFileIsAStateError) {
    EXPECT_THROW(load_record(temp_file("does_not_exist.bin")), StateError);
}

TEST(PngTest, RoundTripAndMagic) {
    Image img{3, 2, 3, {}};
    for (int i = 0; i < 18; ++i) img.pixels.push_back(static_cast<std::uint8_t>(i * 14));
    const auto png = encode_png(img);
    EXPECT_TRUE(is_png(png));
    EXPECT_EQ(decode_png(png), img);
    const std::vector<std::uint8_t> junk = {1, 2, 3};
    EXPECT_FALSE(is_png(junk));
}

TEST(HeatmapTest, RoundsToNearestAndClamps) {
    const std::vector<float> v = {0.0f, 0.03f, 0.5f, 1.0f, 2.0f, -1.0f};
    const Image img = heatmap(v, {2, 3});
    EXPECT_EQ(img.channels, 1u);
    EXPECT_EQ(img.pixels, (std::vector<std::uint8_t>{0, 8, 128, 255, 255, 0}));
}

TEST(ImageL2Test, UnitScale) {
    const Image a{1, 1, 1, {0}}, b{1, 1, 1, {255}};
    EXPECT_DOUBLE_EQ(image_l2(a, b), 1.0);
    EXPECT_DOUBLE_EQ(image_l2(a, a), 0.0);
}
