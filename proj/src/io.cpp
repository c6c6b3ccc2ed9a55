/**
 * @file io.cpp
 */
#include "io.hpp"

#include "error.hpp"

#include <openssl/evp.h>
#include <png.h>

#include <algorithm>
#include <charconv>
#include <chrono>
#include <ctime>
#include <fstream>
#include <iterator>
#include <memory>
#include <sstream>

namespace dermacolor::io {

namespace {

[[noreturn]] void io_fail(const fs::path& path, const std::string& what) {
    fail(ErrorCode::Io, what + ": " + path.string());
}

std::vector<std::uint8_t> read_png(const fs::path& path, std::uint32_t format, int& width, int& height) {
    png_image image{};
    image.version = PNG_IMAGE_VERSION;
    if (!png_image_begin_read_from_file(&image, path.c_str())) {
        const std::string msg = image.message;
        png_image_free(&image);
        io_fail(path, "cannot read PNG (" + msg + ")");
    }
    image.format = format;
    std::vector<std::uint8_t> buffer(PNG_IMAGE_SIZE(image));
    if (!png_image_finish_read(&image, nullptr, buffer.data(), 0, nullptr)) {
        const std::string msg = image.message;
        png_image_free(&image);
        io_fail(path, "cannot decode PNG (" + msg + ")");
    }
    width = static_cast<int>(image.width);
    height = static_cast<int>(image.height);
    return buffer;
}

void write_png(const fs::path& path, std::uint32_t format, int width, int height, const std::uint8_t* data) {
    png_image image{};
    image.version = PNG_IMAGE_VERSION;
    image.width = static_cast<png_uint_32>(width);
    image.height = static_cast<png_uint_32>(height);
    image.format = format;
    if (!png_image_write_to_file(&image, path.c_str(), 0, data, 0, nullptr)) {
        const std::string msg = image.message;
        png_image_free(&image);
        io_fail(path, "cannot write PNG (" + msg + ")");
    }
}

std::vector<std::string> split_line(const std::string& line) {
    std::vector<std::string> out;
    std::string field;
    std::istringstream ss(line);
    while (std::getline(ss, field, ',')) out.push_back(field);
    if (!line.empty() && line.back() == ',') out.emplace_back();
    return out;
}

std::string optional_field(const std::vector<std::string>& row, std::size_t col) {
    return col < row.size() ? row[col] : std::string{};
}

}  // namespace

RgbImage read_png_rgb(const fs::path& path) {
    int w = 0;
    int h = 0;
    auto data = read_png(path, PNG_FORMAT_RGB, w, h);
    return RgbImage(w, h, std::move(data));
}

void write_png_rgb(const fs::path& path, const RgbImage& img) {
    write_png(path, PNG_FORMAT_RGB, img.width(), img.height(), img.bytes().data());
}

Mask read_png_mask(const fs::path& path) {
    int w = 0;
    int h = 0;
    const auto data = read_png(path, PNG_FORMAT_GRAY, w, h);
    Mask mask(w, h);
    for (std::size_t i = 0; i < data.size(); ++i) mask.set(i, data[i] != 0);
    return mask;
}

void write_png_mask(const fs::path& path, const Mask& mask) {
    std::vector<std::uint8_t> data(mask.size());
    for (std::size_t i = 0; i < data.size(); ++i) data[i] = mask[i] ? 255 : 0;
    write_png(path, PNG_FORMAT_GRAY, mask.width(), mask.height(), data.data());
}

// =============================================================================
// CSV and scalars
// =============================================================================

std::size_t CsvTable::column(const std::string& name) const {
    const auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end()) fail(ErrorCode::Format, "CSV has no column '" + name + "'");
    return static_cast<std::size_t>(it - header.begin());
}

bool CsvTable::has_column(const std::string& name) const {
    return std::find(header.begin(), header.end(), name) != header.end();
}

CsvTable read_csv(const fs::path& path) {
    std::ifstream in(path);
    if (!in) io_fail(path, "cannot open CSV");
    CsvTable table;
    std::string line;
    if (!std::getline(in, line)) fail(ErrorCode::Format, "CSV is empty: " + path.string());
    table.header = split_line(line);
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        auto row = split_line(line);
        if (row.size() > table.header.size()) {
            fail(ErrorCode::Format, "CSV row has more fields than the header: " + path.string());
        }
        row.resize(table.header.size());
        table.rows.push_back(std::move(row));
    }
    return table;
}

void write_csv(const fs::path& path, const CsvTable& table) {
    std::ostringstream out;
    auto emit = [&](const std::vector<std::string>& fields) {
        for (std::size_t i = 0; i < fields.size(); ++i) {
            if (fields[i].find_first_of(",\n") != std::string::npos) {
                fail(ErrorCode::InvalidArgument, "CSV field contains a separator: " + fields[i]);
            }
            if (i > 0) out << ',';
            out << fields[i];
        }
        out << '\n';
    };
    emit(table.header);
    for (const auto& row : table.rows) emit(row);
    write_text(path, out.str());
}

std::string format_double(double v) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

double parse_double(const std::string& text, const std::string& context) {
    double v = 0.0;
    const auto res = std::from_chars(text.data(), text.data() + text.size(), v);
    if (res.ec != std::errc{} || res.ptr != text.data() + text.size()) {
        fail(ErrorCode::Format, context + ": not a number: '" + text + "'");
    }
    return v;
}

long long parse_int(const std::string& text, const std::string& context) {
    long long v = 0;
    const auto res = std::from_chars(text.data(), text.data() + text.size(), v);
    if (res.ec != std::errc{} || res.ptr != text.data() + text.size()) {
        fail(ErrorCode::Format, context + ": not an integer: '" + text + "'");
    }
    return v;
}

std::uint64_t parse_u64(const std::string& text, const std::string& context) {
    std::uint64_t v = 0;
    const auto res = std::from_chars(text.data(), text.data() + text.size(), v);
    if (res.ec != std::errc{} || res.ptr != text.data() + text.size()) {
        fail(ErrorCode::Format, context + ": not an unsigned integer: '" + text + "'");
    }
    return v;
}

// =============================================================================
// Text and JSON
// =============================================================================

std::string read_text(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) io_fail(path, "cannot open");
    return std::string(std::istreambuf_iterator<char>(in), {});
}

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) io_fail(path, "cannot create");
    out << text;
    if (!out.flush()) io_fail(path, "write failed");
}

nlohmann::json read_json(const fs::path& path) {
    try {
        return nlohmann::json::parse(read_text(path));
    } catch (const nlohmann::json::parse_error& e) {
        fail(ErrorCode::Format, "malformed JSON in " + path.string() + ": " + e.what());
    }
}

void write_json(const fs::path& path, const nlohmann::json& j) { write_text(path, j.dump(2) + "\n"); }

void create_directories(const fs::path& path) {
    std::error_code ec;
    fs::create_directories(path, ec);
    if (ec) io_fail(path, "cannot create directory (" + ec.message() + ")");
}

// =============================================================================
// Hashing
// =============================================================================

namespace {

struct DigestDeleter {
    void operator()(EVP_MD_CTX* ctx) const noexcept { EVP_MD_CTX_free(ctx); }
};

class Sha256 {
public:
    Sha256() : ctx_(EVP_MD_CTX_new()) {
        if (!ctx_ || EVP_DigestInit_ex(ctx_.get(), EVP_sha256(), nullptr) != 1) {
            fail(ErrorCode::Io, "SHA-256 initialization failed");
        }
    }
    void update(const void* data, std::size_t n) {
        if (EVP_DigestUpdate(ctx_.get(), data, n) != 1) fail(ErrorCode::Io, "SHA-256 update failed");
    }
    std::string hex() {
        unsigned char md[EVP_MAX_MD_SIZE];
        unsigned int len = 0;
        if (EVP_DigestFinal_ex(ctx_.get(), md, &len) != 1) fail(ErrorCode::Io, "SHA-256 finalization failed");
        static constexpr char digits[] = "0123456789abcdef";
        std::string out;
        for (unsigned int i = 0; i < len; ++i) {
            out += digits[md[i] >> 4];
            out += digits[md[i] & 0xF];
        }
        return out;
    }

private:
    std::unique_ptr<EVP_MD_CTX, DigestDeleter> ctx_;
};

}  // namespace

std::string sha256_hex(std::span<const std::uint8_t> bytes) {
    Sha256 h;
    h.update(bytes.data(), bytes.size());
    return h.hex();
}

std::string hash_tree(const fs::path& root, const std::vector<std::string>& skip_names) {
    std::error_code ec;
    if (!fs::is_directory(root, ec)) io_fail(root, "not a directory");
    std::vector<std::string> files;
    for (fs::recursive_directory_iterator it(root, ec), end; it != end; it.increment(ec)) {
        if (ec) io_fail(root, "cannot list directory");
        if (!it->is_regular_file()) continue;
        const std::string name = it->path().filename().string();
        if (std::find(skip_names.begin(), skip_names.end(), name) != skip_names.end()) continue;
        files.push_back(fs::relative(it->path(), root).generic_string());
    }
    std::sort(files.begin(), files.end());
    Sha256 h;
    for (const auto& rel : files) {
        const std::string content = read_text(root / rel);
        const std::string header = rel + '\0' + std::to_string(content.size()) + '\0';
        h.update(header.data(), header.size());
        h.update(content.data(), content.size());
    }
    return h.hex();
}

std::string utc_timestamp() {
    const auto now = std::chrono::system_clock::now();
    const std::time_t t = std::chrono::system_clock::to_time_t(now);
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

// =============================================================================
// Metadata
// =============================================================================

void write_metadata(const fs::path& path, std::span<const MetadataRow> rows) {
    CsvTable t;
    t.header = {"id", "melanosome_fraction", "lighting_id", "seed", "lesion_dl", "n_hairs", "gt_fp"};
    for (const auto& r : rows) {
        t.rows.push_back({r.id, format_double(r.melanosome_fraction), std::to_string(r.lighting_id),
                          std::to_string(r.seed), format_double(r.lesion_dl), std::to_string(r.n_hairs),
                          r.gt_fp ? std::to_string(*r.gt_fp) : std::string{}});
    }
    write_csv(path, t);
}

std::vector<MetadataRow> read_metadata(const fs::path& path) {
    const CsvTable t = read_csv(path);
    const std::size_t c_id = t.column("id");
    const std::size_t c_mel = t.column("melanosome_fraction");
    const std::size_t c_light = t.column("lighting_id");
    const std::size_t c_seed = t.column("seed");
    const std::size_t c_dl = t.column("lesion_dl");
    const std::size_t c_hairs = t.column("n_hairs");
    const std::size_t c_gt = t.column("gt_fp");
    std::vector<MetadataRow> rows;
    for (const auto& f : t.rows) {
        MetadataRow r;
        r.id = f[c_id];
        const std::string ctx = path.string() + " id " + r.id;
        r.melanosome_fraction = parse_double(f[c_mel], ctx);
        r.lighting_id = static_cast<int>(parse_int(f[c_light], ctx));
        r.seed = parse_u64(f[c_seed], ctx);
        r.lesion_dl = parse_double(f[c_dl], ctx);
        r.n_hairs = static_cast<int>(parse_int(f[c_hairs], ctx));
        const std::string gt = optional_field(f, c_gt);
        if (!gt.empty()) r.gt_fp = static_cast<int>(parse_int(gt, ctx));
        rows.push_back(std::move(r));
    }
    return rows;
}

std::string dataset_hash(const DatasetLayout& layout) { return hash_tree(layout.root, {"manifest.json"}); }

}  // namespace dermacolor::io
