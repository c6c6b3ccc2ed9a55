/**
 * @file pipeline.cpp
 */
#include "pipeline.hpp"

#include "error.hpp"
#include "parallel.hpp"
#include "stats.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <set>

#ifndef DERMACOLOR_VERSION
#define DERMACOLOR_VERSION "0.0.0"
#endif

namespace dermacolor::pipeline {

const char* const kToolVersion = DERMACOLOR_VERSION;

namespace {

using estimators::Method;

void require(bool ok, const std::string& message) {
    if (!ok) fail(ErrorCode::InvalidArgument, message);
}

fs::path with_suffix(const fs::path& out, const std::string& suffix) {
    fs::path p = out;
    p.replace_extension();
    p += suffix;
    return p;
}

void ensure_parent(const fs::path& file) {
    if (file.has_parent_path()) io::create_directories(file.parent_path());
}

std::vector<io::MetadataRow> load_metadata(const io::DatasetLayout& layout) {
    std::error_code ec;
    if (!fs::is_directory(layout.root, ec)) fail(ErrorCode::Io, "dataset directory not found: " + layout.root.string());
    if (!fs::exists(layout.metadata(), ec)) fail(ErrorCode::Io, "dataset has no metadata.csv: " + layout.root.string());
    auto rows = io::read_metadata(layout.metadata());
    if (rows.empty()) fail(ErrorCode::InvalidArgument, "dataset metadata is empty");
    std::sort(rows.begin(), rows.end(), [](const auto& a, const auto& b) { return a.id < b.id; });
    return rows;
}

std::string join_ids(const std::vector<std::string>& ids, std::size_t limit = 10) {
    std::string out;
    for (std::size_t i = 0; i < ids.size() && i < limit; ++i) out += (i ? " " : "") + ids[i];
    if (ids.size() > limit) out += " ... (" + std::to_string(ids.size()) + " total)";
    return out;
}

/// GT label per id, from a labels CSV (id, gt_fp) or from metadata.
std::map<std::string, int> load_labels(const std::vector<io::MetadataRow>& meta,
                                       const std::optional<fs::path>& labels_csv) {
    std::map<std::string, int> labels;
    if (labels_csv) {
        const auto t = io::read_csv(*labels_csv);
        const std::size_t c_id = t.column("id");
        const std::size_t c_gt = t.column("gt_fp");
        for (const auto& row : t.rows) {
            labels[row[c_id]] = static_cast<int>(io::parse_int(row[c_gt], labels_csv->string()));
        }
    } else {
        for (const auto& r : meta) {
            if (r.gt_fp) labels[r.id] = *r.gt_fp;
        }
    }
    std::vector<std::string> missing;
    for (const auto& r : meta) {
        if (!labels.count(r.id)) missing.push_back(r.id);
    }
    require(missing.empty(), "no ground-truth Fitzpatrick label for ids: " + join_ids(missing));
    for (const auto& [id, gt] : labels) {
        if (gt < 1 || gt > 6) fail(ErrorCode::Format, "label for " + id + " is outside 1..6");
    }
    return labels;
}

nlohmann::json fp_metrics_json(const stats::FpMetrics& m, std::size_t n) {
    nlohmann::json confusion = nlohmann::json::array();
    for (const auto& row : m.confusion) confusion.push_back(row);
    return {{"n", n},
            {"qw_kappa", m.qw_kappa},
            {"balanced_accuracy", m.balanced_accuracy},
            {"macro_precision", m.macro_precision},
            {"macro_recall", m.macro_recall},
            {"macro_f1", m.macro_f1},
            {"confusion", confusion}};
}

std::vector<color::FitzpatrickType> to_types(const std::vector<int>& v) {
    std::vector<color::FitzpatrickType> out;
    out.reserve(v.size());
    for (int t : v) out.emplace_back(t);
    return out;
}

}  // namespace

// =============================================================================
// Manifest
// =============================================================================

fs::path manifest_path_for(const fs::path& output) {
    fs::path p = output;
    p += ".manifest.json";
    return p;
}

nlohmann::json to_json(const RunManifest& m) {
    nlohmann::json j{
        {"command", m.command},
        {"config", m.config},
        {"seed", m.seed},
        {"tool_version", kToolVersion},
        {"started_at", m.started_at},
        {"finished_at", m.finished_at},
        {"outputs", m.outputs},
    };
    if (m.dataset) j["dataset"] = {{"path", m.dataset->string()}, {"content_hash", m.dataset_hash}};
    if (!m.results.is_null()) j["results"] = m.results;
    return j;
}

void write_manifest(const fs::path& path, RunManifest m) {
    if (m.finished_at.empty()) m.finished_at = io::utc_timestamp();
    io::write_json(path, to_json(m));
}

// =============================================================================
// generate
// =============================================================================

std::string sample_id(std::size_t index) {
    std::string digits = std::to_string(index);
    if (digits.size() < 5) digits.insert(0, 5 - digits.size(), '0');
    return "img_" + digits;
}

GenerateSummary generate(const GenerateOptions& o) {
    require(o.n >= static_cast<std::size_t>(synth::kLightingConditions),
            "--n must be >= 18 so every lighting condition occurs (got " + std::to_string(o.n) + ")");
    require(o.m_min >= 0.0 && o.m_min < o.m_max && o.m_max <= 1.0, "melanosome range needs 0 <= m_min < m_max <= 1");
    require(o.size >= 128, "--size must be >= 128 (edge patches need 4 x 32 px)");
    require(!o.out.empty(), "--out is required");

    RunManifest manifest;
    manifest.started_at = io::utc_timestamp();
    const io::DatasetLayout layout{o.out};
    std::error_code ec;
    if (fs::exists(o.out, ec) && !fs::is_empty(o.out, ec)) {
        require(o.overwrite && fs::exists(layout.manifest(), ec),
                "output directory is not empty: " + o.out.string() +
                    (o.overwrite ? " (refusing to overwrite a directory without manifest.json)" : " (use --overwrite)"));
        fs::remove_all(o.out, ec);
        if (ec) fail(ErrorCode::Io, "cannot clear " + o.out.string() + ": " + ec.message());
    }
    io::create_directories(o.out / "images");
    io::create_directories(o.out / "masks" / "lesion");
    io::create_directories(o.out / "masks" / "hair");

    synth::SynthConfig cfg;
    cfg.range = {o.m_min, o.m_max};
    const auto plan = synth::plan_dataset(o.n, o.seed, o.size, cfg);
    std::vector<double> mean_itas(o.n);
    parallel_for(o.n, [&](std::size_t i) {
        const auto sample = synth::generate_sample(plan[i], cfg);
        const std::string id = sample_id(i);
        io::write_png_rgb(layout.image(id), sample.image);
        io::write_png_mask(layout.lesion_mask(id), sample.lesion_mask);
        io::write_png_mask(layout.hair_mask(id), sample.hair_mask);
        mean_itas[i] = synth::mean_skin_ita(color::to_lab(sample.image), sample.lesion_mask);
    });

    std::vector<double> mels;
    for (const auto& p : plan) mels.push_back(p.melanosome_fraction);
    const auto gt = synth::derive_gt_fp_labels(mean_itas, mels);

    std::vector<io::MetadataRow> rows;
    for (std::size_t i = 0; i < o.n; ++i) {
        const auto& p = plan[i];
        rows.push_back({sample_id(i), p.melanosome_fraction, p.lighting_id, p.seed, p.lesion.darkening, p.n_hairs,
                        gt.labels[i].index()});
    }
    io::write_metadata(layout.metadata(), rows);

    nlohmann::json bin_means = nlohmann::json::array();
    for (const auto& m : gt.bin_means) bin_means.push_back(m ? nlohmann::json(*m) : nlohmann::json(nullptr));
    io::write_json(layout.thresholds(),
                   {{"melanosome_thresholds", gt.thresholds.boundaries},
                    {"bin_mean_melanosome", bin_means},
                    {"ita_thresholds", color::ItaThresholds::defaults().boundaries()}});

    GenerateSummary summary;
    summary.n = o.n;
    summary.content_hash = io::dataset_hash(layout);
    summary.thresholds = gt.thresholds;

    manifest.command = "generate";
    manifest.config = {{"n", o.n}, {"seed", o.seed}, {"m_min", o.m_min}, {"m_max", o.m_max}, {"size", o.size}};
    manifest.dataset = o.out;
    manifest.dataset_hash = summary.content_hash;
    manifest.seed = o.seed;
    manifest.outputs = {"images/", "masks/lesion/", "masks/hair/", "metadata.csv", "gt_thresholds.json"};
    manifest.results = {{"melanosome_thresholds", gt.thresholds.boundaries}};
    write_manifest(layout.manifest(), manifest);
    return summary;
}

// =============================================================================
// label
// =============================================================================

synth::GtLabels label(const LabelOptions& o) {
    require(!o.out.empty(), "--out is required");
    RunManifest manifest;
    manifest.started_at = io::utc_timestamp();
    const io::DatasetLayout layout{o.dataset};
    const auto meta = load_metadata(layout);
    std::vector<double> itas(meta.size());
    parallel_for(meta.size(), [&](std::size_t i) {
        const auto img = io::read_png_rgb(layout.image(meta[i].id));
        const auto mask = io::read_png_mask(layout.lesion_mask(meta[i].id));
        itas[i] = synth::mean_skin_ita(color::to_lab(img), mask);
    });
    std::vector<double> mels;
    for (const auto& r : meta) mels.push_back(r.melanosome_fraction);
    auto gt = synth::derive_gt_fp_labels(itas, mels, o.ita_thresholds);

    io::CsvTable t;
    t.header = {"id", "mean_ita", "provisional_fp", "gt_fp"};
    for (std::size_t i = 0; i < meta.size(); ++i) {
        t.rows.push_back({meta[i].id, io::format_double(itas[i]), std::to_string(gt.provisional[i].index()),
                          std::to_string(gt.labels[i].index())});
    }
    ensure_parent(o.out);
    io::write_csv(o.out, t);

    manifest.command = "label";
    manifest.config = {{"ita_thresholds", o.ita_thresholds.boundaries()}};
    manifest.dataset = o.dataset;
    manifest.dataset_hash = io::dataset_hash(layout);
    manifest.outputs = {o.out.filename().string()};
    manifest.results = {{"melanosome_thresholds", gt.thresholds.boundaries}};
    write_manifest(manifest_path_for(o.out), manifest);
    return gt;
}

// =============================================================================
// estimate
// =============================================================================

EstimateSummary estimate(const EstimateOptions& o) {
    require(!o.out.empty(), "--out is required");
    require(o.max_failure_fraction >= 0.0 && o.max_failure_fraction <= 1.0, "failure fraction must be in [0, 1]");
    RunManifest manifest;
    manifest.started_at = io::utc_timestamp();
    const io::DatasetLayout layout{o.dataset};
    const auto meta = load_metadata(layout);

    std::error_code ec;
    std::vector<std::string> missing;
    for (const auto& r : meta) {
        if (!fs::exists(layout.image(r.id), ec)) missing.push_back(layout.image(r.id).string());
        if (o.method == Method::Segmentation && !fs::exists(layout.lesion_mask(r.id), ec)) {
            missing.push_back(layout.lesion_mask(r.id).string());
        }
    }
    require(missing.empty(), std::string("segmentation needs lesion masks; missing inputs: ") + join_ids(missing, 5));

    std::optional<calibration::CalibrationModel> cal;
    if (o.calibration) {
        calibration::CalibrationModel m;
        calibration::from_json(io::read_json(*o.calibration), m);
        cal = m;
    }

    struct Outcome {
        std::optional<estimators::ItaEstimate> estimate;
        std::string error;
    };
    std::vector<Outcome> outcomes(meta.size());
    parallel_for(meta.size(), [&](std::size_t i) {
        const std::string& id = meta[i].id;
        try {
            const auto img = io::read_png_rgb(layout.image(id));
            switch (o.method) {
                case Method::Segmentation: {
                    const auto mask = io::read_png_mask(layout.lesion_mask(id));
                    outcomes[i].estimate = estimators::estimate_segmentation(color::to_lab(img), mask);
                    break;
                }
                case Method::Patch:
                    outcomes[i].estimate = estimators::estimate_patch(img, o.patch);
                    break;
                case Method::Quantization:
                    outcomes[i].estimate = estimators::estimate_quantization(img, o.quantization);
                    break;
            }
        } catch (const Error& e) {
            if (e.code() == ErrorCode::Io || e.code() == ErrorCode::Format) throw;
            outcomes[i].error = error_code_name(e.code());
        }
    });

    auto opt = [](const auto& v) { return v ? io::format_double(static_cast<double>(*v)) : std::string{}; };
    io::CsvTable t;
    t.header = {"id",
                "ita",
                "method",
                "status",
                "error_code",
                "raw_ita",
                "n_pixels_used",
                "chosen_patch_index",
                "chosen_cluster_size",
                "k_selected",
                "masked_fraction",
                "knee_fallback",
                "suspect_inverted_contrast"};
    // calibrated runs are tagged so they stay distinct from raw ones downstream
    const std::string method_label = std::string(estimators::method_name(o.method)) + (cal ? "_calibrated" : "");
    EstimateSummary summary;
    summary.n = meta.size();
    for (std::size_t i = 0; i < meta.size(); ++i) {
        const auto& out = outcomes[i];
        if (!out.estimate) {
            ++summary.n_failed;
            t.rows.push_back({meta[i].id, "", method_label, "error", out.error, "", "", "", "", "",
                              "", "", ""});
            continue;
        }
        const auto& e = *out.estimate;
        const double raw = e.ita.value;
        const double value = cal ? calibration::apply(*cal, e.ita).value : raw;
        const auto& d = e.diagnostics;
        t.rows.push_back({meta[i].id, io::format_double(value), method_label, "ok", "",
                          io::format_double(raw), opt(d.n_pixels_used), opt(d.chosen_patch_index),
                          opt(d.chosen_cluster_size), opt(d.k_selected), opt(d.masked_fraction),
                          d.knee_fallback ? "1" : "0", d.suspect_inverted_contrast ? "1" : "0"});
    }
    ensure_parent(o.out);
    io::write_csv(o.out, t);

    manifest.command = "estimate";
    manifest.config = {{"method", estimators::method_name(o.method)},
                       {"calibration", o.calibration ? o.calibration->string() : ""},
                       {"patch_size", o.patch.patch_size},
                       {"n_patches", o.patch.n_patches},
                       {"quantization_seed", o.quantization.seed},
                       {"clahe_clustering", o.quantization.clahe_clustering},
                       {"max_failure_fraction", o.max_failure_fraction}};
    manifest.dataset = o.dataset;
    manifest.dataset_hash = io::dataset_hash(layout);
    manifest.seed = o.quantization.seed;
    manifest.outputs = {o.out.filename().string()};
    manifest.results = {{"n", summary.n}, {"n_failed", summary.n_failed}};
    write_manifest(manifest_path_for(o.out), manifest);

    if (static_cast<double>(summary.n_failed) > o.max_failure_fraction * static_cast<double>(summary.n)) {
        fail(ErrorCode::InsufficientData, std::to_string(summary.n_failed) + " of " + std::to_string(summary.n) +
                                              " images failed (limit " +
                                              io::format_double(100.0 * o.max_failure_fraction) + "%)");
    }
    return summary;
}

std::vector<EstimateRow> read_estimates(const fs::path& path) {
    const auto t = io::read_csv(path);
    const std::size_t c_id = t.column("id");
    const std::size_t c_ita = t.column("ita");
    const std::size_t c_method = t.column("method");
    const std::size_t c_status = t.column("status");
    const bool has_raw = t.has_column("raw_ita");
    const bool has_code = t.has_column("error_code");
    std::vector<EstimateRow> rows;
    std::set<std::string> seen;
    for (const auto& f : t.rows) {
        EstimateRow r;
        r.id = f[c_id];
        if (!seen.insert(r.id).second) fail(ErrorCode::Format, "duplicate id " + r.id + " in " + path.string());
        r.method = f[c_method];
        if (f[c_status] == "ok") {
            r.ita = io::parse_double(f[c_ita], path.string() + " id " + r.id);
            if (has_raw && !f[t.column("raw_ita")].empty()) {
                r.raw_ita = io::parse_double(f[t.column("raw_ita")], path.string() + " id " + r.id);
            }
        } else if (has_code) {
            r.error_code = f[t.column("error_code")];
        }
        rows.push_back(std::move(r));
    }
    return rows;
}

// =============================================================================
// calibrate
// =============================================================================

CalibrateSummary calibrate(const CalibrateOptions& o) {
    require(!o.out.empty(), "--out is required");
    require(o.fit_fraction > 0.0 && o.fit_fraction < 1.0, "--fit-fraction must be in (0, 1)");
    RunManifest manifest;
    manifest.started_at = io::utc_timestamp();
    const auto raw_rows = read_estimates(o.raw_estimates);
    const auto ref_rows = read_estimates(o.reference_estimates);
    std::map<std::string, double> ref;
    std::set<std::string> ref_ids;
    for (const auto& r : ref_rows) {
        ref_ids.insert(r.id);
        if (r.ita) ref[r.id] = *r.ita;
    }
    std::vector<std::string> unmatched;
    for (const auto& r : raw_rows) {
        if (!ref_ids.count(r.id)) unmatched.push_back(r.id);
    }
    require(unmatched.empty(), "ids missing from the reference estimates: " + join_ids(unmatched));

    // pairs where both estimates succeeded, in id order
    std::vector<std::pair<std::string, std::pair<double, double>>> pairs;
    for (const auto& r : raw_rows) {
        const auto it = ref.find(r.id);
        if (!r.ita || it == ref.end()) continue;
        const double raw = r.raw_ita ? *r.raw_ita : *r.ita;
        pairs.push_back({r.id, {raw, it->second}});
    }
    std::sort(pairs.begin(), pairs.end());
    if (pairs.size() < 4) fail(ErrorCode::InsufficientData, "calibration needs at least 4 paired estimates");

    const auto fit = calibration::calibration_split(pairs.size(), o.fit_fraction, o.seed);
    std::vector<double> xf;
    std::vector<double> yf;
    for (std::size_t i = 0; i < pairs.size(); ++i) {
        if (fit[i]) {
            xf.push_back(pairs[i].second.first);
            yf.push_back(pairs[i].second.second);
        }
    }
    CalibrateSummary s;
    s.model = calibration::fit_ols(xf, yf);
    double bias = 0.0;
    for (std::size_t i = 0; i < xf.size(); ++i) bias += s.model.slope * xf[i] + s.model.intercept - yf[i];
    s.bias_fit = bias / static_cast<double>(xf.size());
    for (std::size_t i = 0; i < pairs.size(); ++i) {
        if (fit[i]) continue;
        const auto [x, y] = pairs[i].second;
        const double c = s.model.slope * x + s.model.intercept;
        s.mse_raw_eval += (x - y) * (x - y);
        s.mse_calibrated_eval += (c - y) * (c - y);
        ++s.n_eval;
    }
    if (s.n_eval > 0) {
        s.mse_raw_eval /= static_cast<double>(s.n_eval);
        s.mse_calibrated_eval /= static_cast<double>(s.n_eval);
    }

    nlohmann::json j;
    calibration::to_json(j, s.model);
    j["fit_fraction"] = o.fit_fraction;
    j["split_seed"] = o.seed;
    j["evaluation"] = {{"n_eval", s.n_eval},
                       {"bias_fit", s.bias_fit},
                       {"mse_raw_eval", s.mse_raw_eval},
                       {"mse_calibrated_eval", s.mse_calibrated_eval}};
    ensure_parent(o.out);
    io::write_json(o.out, j);

    manifest.command = "calibrate";
    manifest.config = {{"raw_estimates", o.raw_estimates.string()},
                       {"reference_estimates", o.reference_estimates.string()},
                       {"fit_fraction", o.fit_fraction},
                       {"seed", o.seed}};
    manifest.seed = o.seed;
    manifest.outputs = {o.out.filename().string()};
    manifest.results = j["evaluation"];
    write_manifest(manifest_path_for(o.out), manifest);
    return s;
}

// =============================================================================
// train
// =============================================================================

TrainSummary train(const TrainOptions& o) {
    require(!o.out.empty(), "--out is required");
    o.config.validate();
    RunManifest manifest;
    manifest.started_at = io::utc_timestamp();
    const io::DatasetLayout layout{o.dataset};
    const auto meta = load_metadata(layout);
    const auto label_map = load_labels(meta, o.labels);

    const std::size_t d = o.config.feature_config.dimension();
    std::vector<double> features(meta.size() * d);
    std::vector<color::FitzpatrickType> labels;
    for (const auto& r : meta) labels.emplace_back(label_map.at(r.id));
    parallel_for(meta.size(), [&](std::size_t i) {
        const auto f = ordinal::featurize(io::read_png_rgb(layout.image(meta[i].id)), o.config.feature_config);
        std::copy(f.begin(), f.end(), features.begin() + static_cast<std::ptrdiff_t>(i * d));
    });

    const auto result = ordinal::train(features, labels, o.config);
    TrainSummary s;
    s.best_epoch = result.model.train_meta.best_epoch;
    s.best_val_loss = result.model.train_meta.best_val_loss;
    s.log = o.log.value_or(with_suffix(o.out, ".log.csv"));
    s.predictions = o.predictions.value_or(with_suffix(o.out, ".predictions.csv"));

    nlohmann::json model_json;
    ordinal::to_json(model_json, result.model);
    ensure_parent(o.out);
    io::write_json(o.out, model_json);

    io::CsvTable log;
    log.header = {"epoch", "train_loss", "val_loss", "val_accuracy"};
    for (const auto& e : result.log) {
        log.rows.push_back({std::to_string(e.epoch), io::format_double(e.train_loss), io::format_double(e.val_loss),
                            io::format_double(e.val_accuracy)});
    }
    ensure_parent(s.log);
    io::write_csv(s.log, log);

    io::CsvTable pred;
    pred.header = {"id", "split", "gt_fp", "pred_fp"};
    std::vector<color::FitzpatrickType> test_gt;
    std::vector<color::FitzpatrickType> test_pred;
    static constexpr const char* split_names[] = {"train", "val", "test"};
    for (std::size_t i = 0; i < meta.size(); ++i) {
        const auto p = ordinal::predict(result.model, std::span<const double>(features).subspan(i * d, d));
        const auto split = result.split[i];
        pred.rows.push_back({meta[i].id, split_names[static_cast<int>(split)], std::to_string(labels[i].index()),
                             std::to_string(p.index())});
        if (split == ordinal::Split::Test) {
            test_gt.push_back(labels[i]);
            test_pred.push_back(p);
        }
    }
    ensure_parent(s.predictions);
    io::write_csv(s.predictions, pred);
    s.n_test = test_gt.size();
    if (!test_gt.empty()) s.test_qw_kappa = stats::fp_metrics(test_gt, test_pred).qw_kappa;

    manifest.command = "train";
    manifest.config = {{"train_fraction", o.config.train_fraction}, {"val_fraction", o.config.val_fraction},
                       {"test_fraction", o.config.test_fraction},   {"max_epochs", o.config.max_epochs},
                       {"batch_size", o.config.batch_size},         {"learning_rate", o.config.learning_rate},
                       {"hidden", o.config.hidden},                 {"seed", o.config.seed},
                       {"labels", o.labels ? o.labels->string() : ""}};
    manifest.dataset = o.dataset;
    manifest.dataset_hash = io::dataset_hash(layout);
    manifest.seed = o.config.seed;
    manifest.outputs = {o.out.filename().string(), s.log.filename().string(), s.predictions.filename().string()};
    manifest.results = {{"best_epoch", s.best_epoch},
                        {"best_val_loss", s.best_val_loss},
                        {"n_test", s.n_test},
                        {"test_qw_kappa", s.test_qw_kappa}};
    write_manifest(manifest_path_for(o.out), manifest);
    return s;
}

// =============================================================================
// evaluate
// =============================================================================

nlohmann::json evaluate(const EvaluateOptions& o) {
    require(!o.out.empty(), "--out is required");
    require(!o.estimates.empty(), "at least one --estimates file is required");
    RunManifest manifest;
    manifest.started_at = io::utc_timestamp();
    const io::DatasetLayout layout{o.dataset};
    const auto meta = load_metadata(layout);
    const auto label_map = load_labels(meta, o.gt_labels);
    std::map<std::string, std::size_t> index;
    for (std::size_t i = 0; i < meta.size(); ++i) index[meta[i].id] = i;

    struct MethodData {
        std::string name;
        std::vector<std::optional<double>> ita;  ///< per metadata row
        std::size_t n_failed = 0;
    };
    std::vector<MethodData> methods;
    for (const auto& path : o.estimates) {
        const auto rows = read_estimates(path);
        require(!rows.empty(), "estimates file is empty: " + path.string());
        MethodData m;
        m.name = rows.front().method;
        m.ita.assign(meta.size(), std::nullopt);
        std::vector<std::string> unmatched;
        std::vector<bool> present(meta.size(), false);
        for (const auto& r : rows) {
            require(r.method == m.name, "estimates file mixes methods: " + path.string());
            const auto it = index.find(r.id);
            if (it == index.end()) {
                unmatched.push_back(r.id);
                continue;
            }
            present[it->second] = true;
            m.ita[it->second] = r.ita;
            if (!r.ita) ++m.n_failed;
        }
        for (std::size_t i = 0; i < meta.size(); ++i) {
            if (!present[i]) unmatched.push_back(meta[i].id);
        }
        require(unmatched.empty(), "estimates " + path.string() + " do not join to metadata; unmatched ids: " +
                                       join_ids(unmatched));
        require(std::none_of(methods.begin(), methods.end(), [&](const auto& q) { return q.name == m.name; }),
                "method " + m.name + " given twice");
        methods.push_back(std::move(m));
    }

    std::set<int> levels;
    for (const auto& r : meta) levels.insert(r.lighting_id);

    std::set<std::string> test_ids;
    nlohmann::json model_json;
    if (o.predictions) {
        const auto t = io::read_csv(*o.predictions);
        const std::size_t c_id = t.column("id");
        const std::size_t c_split = t.column("split");
        const std::size_t c_pred = t.column("pred_fp");
        std::vector<color::FitzpatrickType> gt;
        std::vector<color::FitzpatrickType> pred;
        std::vector<std::string> unmatched;
        for (const auto& row : t.rows) {
            if (!index.count(row[c_id])) {
                unmatched.push_back(row[c_id]);
                continue;
            }
            if (row[c_split] != "test") continue;
            test_ids.insert(row[c_id]);
            gt.emplace_back(label_map.at(row[c_id]));
            pred.emplace_back(static_cast<int>(io::parse_int(row[c_pred], o.predictions->string())));
        }
        require(unmatched.empty(), "predictions do not join to metadata; unmatched ids: " + join_ids(unmatched));
        require(!gt.empty(), "predictions file has no test-split rows");
        model_json = {{"fp_metrics_test", fp_metrics_json(stats::fp_metrics(gt, pred), gt.size())}};
    }

    const MethodData* reference = nullptr;
    for (const auto& m : methods) {
        if (m.name == o.reference_method) reference = &m;
    }

    io::CsvTable ba_csv;
    ba_csv.header = {"method", "id", "mean", "diff"};
    io::CsvTable conf_csv;
    conf_csv.header = {"method", "subset", "gt_fp", "pred_fp", "count"};
    auto add_confusion = [&](const std::string& method, const std::string& subset, const stats::FpMetrics& fm) {
        for (std::size_t g = 0; g < 6; ++g) {
            for (std::size_t p = 0; p < 6; ++p) {
                conf_csv.rows.push_back({method, subset, std::to_string(g + 1), std::to_string(p + 1),
                                         std::to_string(fm.confusion[g][p])});
            }
        }
    };

    nlohmann::json methods_json = nlohmann::json::object();
    const auto defaults = color::ItaThresholds::defaults();
    for (const auto& m : methods) {
        std::vector<double> ita;
        std::vector<double> mel;
        std::vector<int> light;
        std::vector<int> gt;
        std::vector<int> pred;
        std::vector<int> gt_test;
        std::vector<int> pred_test;
        for (std::size_t i = 0; i < meta.size(); ++i) {
            if (!m.ita[i]) continue;
            ita.push_back(*m.ita[i]);
            mel.push_back(meta[i].melanosome_fraction);
            light.push_back(meta[i].lighting_id);
            gt.push_back(label_map.at(meta[i].id));
            pred.push_back(color::ita_to_fitzpatrick({*m.ita[i]}, defaults).index());
            if (test_ids.count(meta[i].id)) {
                gt_test.push_back(gt.back());
                pred_test.push_back(pred.back());
            }
        }
        nlohmann::json mj{{"n", ita.size()}, {"n_failed", m.n_failed}};
        if (ita.size() < 10) {
            mj["error"] = "fewer than 10 successful estimates";
            methods_json[m.name] = mj;
            continue;
        }
        const auto ci = stats::bootstrap_ci(ita, mel, stats::pearson, o.bootstrap_resamples, o.alpha, o.seed);
        mj["pearson_vs_melanosome"] = {{"r", stats::pearson(ita, mel)},
                                       {"ci_low", ci.lo},
                                       {"ci_high", ci.hi},
                                       {"n_resamples", o.bootstrap_resamples},
                                       {"n_skipped", ci.n_skipped},
                                       {"alpha", o.alpha}};
        mj["spearman_vs_melanosome"] = stats::spearman(ita, mel);

        if (reference) {
            std::vector<double> a;
            std::vector<double> b;
            std::vector<std::string> ids;
            for (std::size_t i = 0; i < meta.size(); ++i) {
                if (m.ita[i] && reference->ita[i]) {
                    a.push_back(*m.ita[i]);
                    b.push_back(*reference->ita[i]);
                    ids.push_back(meta[i].id);
                }
            }
            if (a.size() >= 2) {
                const auto ba = stats::bland_altman(a, b);
                mj["bland_altman"] = {{"reference", reference->name}, {"n", a.size()},       {"bias", ba.bias},
                                      {"sd", ba.sd},                  {"loa_low", ba.loa_low}, {"loa_high", ba.loa_high}};
                for (std::size_t k = 0; k < a.size(); ++k) {
                    ba_csv.rows.push_back(
                        {m.name, ids[k], io::format_double(ba.means[k]), io::format_double(ba.diffs[k])});
                }
            }
        }

        const auto ls = stats::lighting_sensitivity(ita, mel, light);
        mj["lighting_sensitivity"] = {
            {"r2_mel", ls.r2_mel}, {"r2_mel_light", ls.r2_mel_light}, {"delta_r2", ls.delta_r2}};

        const auto fm = stats::fp_metrics(to_types(gt), to_types(pred));
        mj["fp_metrics"] = fp_metrics_json(fm, gt.size());
        add_confusion(m.name, "all", fm);
        if (!gt_test.empty()) {
            const auto ft = stats::fp_metrics(to_types(gt_test), to_types(pred_test));
            mj["fp_metrics_test"] = fp_metrics_json(ft, gt_test.size());
            add_confusion(m.name, "test", ft);
        }
        methods_json[m.name] = mj;
    }

    nlohmann::json report{
        {"tool_version", kToolVersion},
        {"dataset_hash", io::dataset_hash(layout)},
        {"n_images", meta.size()},
        {"lighting_levels", levels},
        {"reference_method", reference ? reference->name : ""},
        {"fp_thresholds", defaults.boundaries()},
        {"bootstrap", {{"n_resamples", o.bootstrap_resamples}, {"alpha", o.alpha}, {"seed", o.seed}}},
        {"methods", methods_json},
    };
    if (!model_json.is_null()) {
        report["model"] = model_json;
        std::vector<color::FitzpatrickType> g;
        std::vector<color::FitzpatrickType> p;
        const auto t = io::read_csv(*o.predictions);
        for (const auto& row : t.rows) {
            if (row[t.column("split")] != "test") continue;
            g.emplace_back(label_map.at(row[t.column("id")]));
            p.emplace_back(static_cast<int>(io::parse_int(row[t.column("pred_fp")], o.predictions->string())));
        }
        add_confusion("model", "test", stats::fp_metrics(g, p));
    }

    ensure_parent(o.out);
    io::write_json(o.out, report);
    const fs::path ba_path = with_suffix(o.out, ".bland_altman.csv");
    const fs::path conf_path = with_suffix(o.out, ".confusion.csv");
    io::write_csv(ba_path, ba_csv);
    io::write_csv(conf_path, conf_csv);

    manifest.command = "evaluate";
    nlohmann::json est = nlohmann::json::array();
    for (const auto& p : o.estimates) est.push_back(p.string());
    manifest.config = {{"estimates", est},
                       {"gt_labels", o.gt_labels ? o.gt_labels->string() : ""},
                       {"predictions", o.predictions ? o.predictions->string() : ""},
                       {"reference_method", o.reference_method},
                       {"bootstrap_resamples", o.bootstrap_resamples},
                       {"alpha", o.alpha},
                       {"seed", o.seed}};
    manifest.dataset = o.dataset;
    manifest.dataset_hash = report["dataset_hash"];
    manifest.seed = o.seed;
    manifest.outputs = {o.out.filename().string(), ba_path.filename().string(), conf_path.filename().string()};
    write_manifest(manifest_path_for(o.out), manifest);
    return report;
}

}  // namespace dermacolor::pipeline
