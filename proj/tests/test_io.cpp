#include "io.hpp"
#include "test_support.hpp"

#include <gtest/gtest.h>

#include <fstream>

namespace dermacolor::io {
namespace {

using testing::expect_error;
using testing::TempDir;

TEST(Png, RgbRoundTrip) {
    TempDir dir("png");
    RgbImage img(5, 3);
    for (std::size_t i = 0; i < img.bytes().size(); ++i) img.bytes()[i] = static_cast<std::uint8_t>(i * 17);
    write_png_rgb(dir.path() / "a.png", img);
    EXPECT_EQ(read_png_rgb(dir.path() / "a.png"), img);
}

TEST(Png, MaskRoundTrip) {
    TempDir dir("mask");
    Mask m(7, 4);
    m.set(0, 0, true);
    m.set(6, 3, true);
    m.set(3, 2, true);
    write_png_mask(dir.path() / "m.png", m);
    EXPECT_EQ(read_png_mask(dir.path() / "m.png"), m);
}

TEST(Png, MissingAndCorruptFiles) {
    TempDir dir("bad");
    expect_error(ErrorCode::Io, [&] { read_png_rgb(dir.path() / "nope.png"); });
    write_text(dir.path() / "junk.png", "not a png");
    const auto code = [&] {
        try {
            read_png_rgb(dir.path() / "junk.png");
        } catch (const Error& e) {
            return e.code();
        }
        return ErrorCode::InvalidArgument;
    }();
    EXPECT_TRUE(code == ErrorCode::Format || code == ErrorCode::Io);
}

TEST(Csv, RoundTrip) {
    TempDir dir("csv");
    CsvTable t{{"id", "ita", "note"}, {{"img_00000", "12.5", ""}, {"img_00001", "-3", "x"}}};
    write_csv(dir.path() / "t.csv", t);
    const auto back = read_csv(dir.path() / "t.csv");
    EXPECT_EQ(back.header, t.header);
    EXPECT_EQ(back.rows, t.rows);
    EXPECT_EQ(back.column("ita"), 1u);
    EXPECT_FALSE(back.has_column("missing"));
}

TEST(Csv, PadsShortRowsRejectsLongOnes) {
    TempDir dir("ragged");
    write_text(dir.path() / "short.csv", "a,b\n1,2\n3\n");
    const auto t = read_csv(dir.path() / "short.csv");
    EXPECT_EQ(t.rows[1], (std::vector<std::string>{"3", ""}));
    write_text(dir.path() / "long.csv", "a,b\n1,2,3\n");
    expect_error(ErrorCode::Format, [&] { read_csv(dir.path() / "long.csv"); });
}

TEST(Numbers, ShortestRoundTrip) {
    for (double v : {0.1, -52.38, 1e-300, 123456789.125, 57.52880770915151}) {
        EXPECT_EQ(parse_double(format_double(v), "v"), v);
    }
    expect_error(ErrorCode::Format, [] { parse_double("12abc", "ita"); });
    expect_error(ErrorCode::Format, [] { parse_int("4.5", "n"); });
    EXPECT_EQ(parse_u64("18446744073709551615", "seed"), 18446744073709551615ULL);
}

TEST(Hash, KnownDigest) {
    const std::string abc = "abc";
    EXPECT_EQ(sha256_hex(std::span<const std::uint8_t>(reinterpret_cast<const std::uint8_t*>(abc.data()), 3)),
              "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

TEST(Hash, TreeHashTracksContentAndSkips) {
    TempDir dir("tree");
    write_text(dir.path() / "a.txt", "one");
    std::filesystem::create_directories(dir.path() / "sub");
    write_text(dir.path() / "sub" / "b.txt", "two");
    const auto h1 = hash_tree(dir.path(), {"manifest.json"});
    write_text(dir.path() / "manifest.json", "{}");
    EXPECT_EQ(hash_tree(dir.path(), {"manifest.json"}), h1);
    write_text(dir.path() / "sub" / "b.txt", "tw0");
    EXPECT_NE(hash_tree(dir.path(), {"manifest.json"}), h1);
}

TEST(Metadata, RoundTrip) {
    TempDir dir("meta");
    const std::vector<MetadataRow> rows{{"img_00000", 0.0123, 0, 99, 21.5, 3, 2},
                                        {"img_00001", 0.4, 17, 100, 15.0, 0, std::nullopt}};
    write_metadata(dir.path() / "metadata.csv", rows);
    const auto back = read_metadata(dir.path() / "metadata.csv");
    ASSERT_EQ(back.size(), 2u);
    EXPECT_EQ(back[0].id, "img_00000");
    EXPECT_EQ(back[0].melanosome_fraction, 0.0123);
    EXPECT_EQ(back[0].gt_fp, 2);
    EXPECT_EQ(back[1].lighting_id, 17);
    EXPECT_FALSE(back[1].gt_fp.has_value());
    const auto header = read_csv(dir.path() / "metadata.csv").header;
    EXPECT_EQ(header, (std::vector<std::string>{"id", "melanosome_fraction", "lighting_id", "seed", "lesion_dl",
                                                "n_hairs", "gt_fp"}));
}

}  // namespace
}  // namespace dermacolor::io
