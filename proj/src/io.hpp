/**
 * @file io.hpp
 * @brief PNG, CSV and JSON file helpers plus content hashing
 */
#pragma once

#include "raster.hpp"

#include <json.hpp>

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace dermacolor::io {

namespace fs = std::filesystem;

// PNG: 8-bit RGB for images, 8-bit grayscale {0, 255} for masks.
RgbImage read_png_rgb(const fs::path& path);
void write_png_rgb(const fs::path& path, const RgbImage& img);
Mask read_png_mask(const fs::path& path);  ///< any nonzero sample is set
void write_png_mask(const fs::path& path, const Mask& mask);

/// Comma-separated table without quoting; fields must not contain commas
/// or newlines.
struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;

    /// Index of a named column; throws Format when absent.
    std::size_t column(const std::string& name) const;
    bool has_column(const std::string& name) const;
};

CsvTable read_csv(const fs::path& path);
void write_csv(const fs::path& path, const CsvTable& table);

/// Shortest text that parses back to the same double.
std::string format_double(double v);
double parse_double(const std::string& text, const std::string& context);
long long parse_int(const std::string& text, const std::string& context);
std::uint64_t parse_u64(const std::string& text, const std::string& context);

std::string read_text(const fs::path& path);
void write_text(const fs::path& path, const std::string& text);
nlohmann::json read_json(const fs::path& path);
void write_json(const fs::path& path, const nlohmann::json& j);

void create_directories(const fs::path& path);

std::string sha256_hex(std::span<const std::uint8_t> bytes);

/// SHA-256 over every regular file under root (sorted relative paths, each
/// path followed by its size and contents), skipping the named files.
std::string hash_tree(const fs::path& root, const std::vector<std::string>& skip_names = {});

/// Current UTC time as ISO-8601.
std::string utc_timestamp();

// =============================================================================
// Dataset layout
// =============================================================================

struct MetadataRow {
    std::string id;
    double melanosome_fraction = 0.0;
    int lighting_id = 0;
    std::uint64_t seed = 0;
    double lesion_dl = 0.0;
    int n_hairs = 0;
    std::optional<int> gt_fp;
};

void write_metadata(const fs::path& path, std::span<const MetadataRow> rows);
std::vector<MetadataRow> read_metadata(const fs::path& path);

struct DatasetLayout {
    fs::path root;

    fs::path metadata() const { return root / "metadata.csv"; }
    fs::path manifest() const { return root / "manifest.json"; }
    fs::path thresholds() const { return root / "gt_thresholds.json"; }
    fs::path image(const std::string& id) const { return root / "images" / (id + ".png"); }
    fs::path lesion_mask(const std::string& id) const { return root / "masks" / "lesion" / (id + ".png"); }
    fs::path hair_mask(const std::string& id) const { return root / "masks" / "hair" / (id + ".png"); }
};

/// Content hash of a dataset directory (manifest excluded).
std::string dataset_hash(const DatasetLayout& layout);

}  // namespace dermacolor::io
