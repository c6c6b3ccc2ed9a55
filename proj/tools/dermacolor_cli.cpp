// Command-line front end. Talks to the toolkit only through the C API.
#include <dermacolor/dermacolor.h>

#include <CLI11.hpp>

#include <cstdio>
#include <string>
#include <vector>

namespace {

int report(dc_status status) {
    if (status == DC_OK) return 0;
    std::fprintf(stderr, "error [%s]: %s\n", dc_status_name(status), dc_last_error());
    return dc_status_exit_code(status);
}

const char* c_str_or_null(const std::string& s) { return s.empty() ? nullptr : s.c_str(); }

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Skin-color estimation toolkit for dermatoscopic images"};
    app.set_config("--config", "", "TOML/INI file with option values (sections per subcommand)");
    app.set_version_flag("--version", std::string(dc_version()));
    app.require_subcommand(1);

    // generate ---------------------------------------------------------------
    dc_generate_options gen;
    dc_generate_options_init(&gen);
    std::string gen_out;
    bool gen_overwrite = false;
    auto* generate = app.add_subcommand("generate", "Generate a synthetic dataset with ground-truth labels");
    generate->add_option("--out", gen_out, "Output dataset directory")->required();
    generate->add_option("--n", gen.n, "Number of images (>= 18)")->capture_default_str();
    generate->add_option("--seed", gen.seed, "Dataset seed")->capture_default_str();
    generate->add_option("--m-min", gen.m_min, "Minimum melanosome fraction")->capture_default_str();
    generate->add_option("--m-max", gen.m_max, "Maximum melanosome fraction")->capture_default_str();
    generate->add_option("--size", gen.size, "Image side in px")->capture_default_str();
    generate->add_flag("--overwrite", gen_overwrite, "Replace an existing dataset directory");

    // label ------------------------------------------------------------------
    std::string lab_dataset;
    std::string lab_out;
    std::vector<double> lab_thresholds;
    auto* label = app.add_subcommand("label", "Derive ground-truth Fitzpatrick labels for a dataset");
    label->add_option("--dataset", lab_dataset, "Dataset directory")->required();
    label->add_option("--out", lab_out, "Labels CSV")->required();
    label->add_option("--ita-thresholds", lab_thresholds, "Five decreasing ITA boundaries")->expected(5);

    // estimate ---------------------------------------------------------------
    dc_estimate_dataset_options est;
    dc_estimate_dataset_options_init(&est);
    std::string est_dataset;
    std::string est_method;
    std::string est_out;
    std::string est_calibration;
    bool est_clahe = false;
    auto* estimate = app.add_subcommand("estimate", "Estimate per-image ITA for a dataset");
    estimate->add_option("--dataset", est_dataset, "Dataset directory")->required();
    estimate->add_option("--method", est_method, "segmentation | patch | quantization")
        ->required()
        ->check(CLI::IsMember({"segmentation", "patch", "quantization"}));
    estimate->add_option("--out", est_out, "Estimates CSV")->required();
    estimate->add_option("--calibration", est_calibration, "Calibration model JSON applied to every estimate");
    estimate->add_option("--patch-size", est.estimator.patch_size, "Patch side in px")->capture_default_str();
    estimate->add_option("--n-patches", est.estimator.n_patches, "Number of edge patches")->capture_default_str();
    estimate->add_option("--seed", est.estimator.seed, "k-means seed")->capture_default_str();
    estimate->add_flag("--clahe-clustering", est_clahe, "Cluster on CLAHE-enhanced L*");
    estimate->add_option("--max-failure-fraction", est.max_failure_fraction, "Fail the run above this fraction")
        ->capture_default_str();

    // calibrate --------------------------------------------------------------
    dc_calibrate_options cal;
    dc_calibrate_options_init(&cal);
    std::string cal_raw;
    std::string cal_ref;
    std::string cal_out;
    auto* calibrate = app.add_subcommand("calibrate", "Fit an OLS calibration of one method against a reference");
    calibrate->add_option("--estimates", cal_raw, "Estimates CSV to calibrate")->required();
    calibrate->add_option("--reference", cal_ref, "Reference estimates CSV")->required();
    calibrate->add_option("--out", cal_out, "Calibration model JSON")->required();
    calibrate->add_option("--fit-fraction", cal.fit_fraction, "Held-out fraction used for fitting")
        ->capture_default_str();
    calibrate->add_option("--seed", cal.seed, "Split seed")->capture_default_str();

    // train ------------------------------------------------------------------
    dc_train_options tr;
    dc_train_options_init(&tr);
    std::string tr_dataset;
    std::string tr_labels;
    std::string tr_out;
    std::string tr_log;
    std::string tr_pred;
    auto* train = app.add_subcommand("train", "Train the CORAL ordinal classifier");
    train->add_option("--dataset", tr_dataset, "Dataset directory")->required();
    train->add_option("--labels", tr_labels, "Labels CSV (default: metadata gt_fp)");
    train->add_option("--out", tr_out, "Model JSON")->required();
    train->add_option("--log", tr_log, "Training log CSV");
    train->add_option("--predictions", tr_pred, "Per-image predictions CSV");
    train->add_option("--epochs", tr.max_epochs, "Maximum epochs")->capture_default_str();
    train->add_option("--batch-size", tr.batch_size, "Mini-batch size")->capture_default_str();
    train->add_option("--lr", tr.learning_rate, "Learning rate")->capture_default_str();
    train->add_option("--hidden", tr.hidden, "Hidden layer width (0 = linear)")->capture_default_str();
    train->add_option("--seed", tr.seed, "Split and shuffle seed")->capture_default_str();
    train->add_option("--train-fraction", tr.train_fraction, "Training fraction")->capture_default_str();
    train->add_option("--val-fraction", tr.val_fraction, "Validation fraction")->capture_default_str();
    train->add_option("--test-fraction", tr.test_fraction, "Test fraction")->capture_default_str();

    // evaluate ---------------------------------------------------------------
    dc_evaluate_options ev;
    dc_evaluate_options_init(&ev);
    std::string ev_dataset;
    std::vector<std::string> ev_estimates;
    std::string ev_labels;
    std::string ev_pred;
    std::string ev_out;
    std::string ev_reference = ev.reference_method;
    auto* evaluate = app.add_subcommand("evaluate", "Compute accuracy and lighting-invariance statistics");
    evaluate->add_option("--dataset", ev_dataset, "Dataset directory")->required();
    evaluate->add_option("--estimates", ev_estimates, "Estimates CSV (repeatable)")->required();
    evaluate->add_option("--gt-labels", ev_labels, "Labels CSV (default: metadata gt_fp)");
    evaluate->add_option("--predictions", ev_pred, "Model predictions CSV from train");
    evaluate->add_option("--out", ev_out, "Report JSON")->required();
    evaluate->add_option("--reference", ev_reference, "Reference method for Bland-Altman")->capture_default_str();
    evaluate->add_option("--bootstrap", ev.bootstrap_resamples, "Bootstrap resamples")->capture_default_str();
    evaluate->add_option("--alpha", ev.alpha, "CI level is 1 - alpha")->capture_default_str();
    evaluate->add_option("--seed", ev.seed, "Bootstrap seed")->capture_default_str();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForVersion& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    if (generate->parsed()) {
        gen.out = gen_out.c_str();
        gen.overwrite = gen_overwrite ? 1 : 0;
        char hash[65] = {};
        const dc_status s = dc_generate(&gen, hash);
        if (s == DC_OK) std::printf("generated %zu images in %s\ncontent hash %s\n", gen.n, gen_out.c_str(), hash);
        return report(s);
    }
    if (label->parsed()) {
        dc_label_options o;
        dc_label_options_init(&o);
        o.dataset = lab_dataset.c_str();
        o.out = lab_out.c_str();
        if (!lab_thresholds.empty()) o.ita_thresholds = lab_thresholds.data();
        const dc_status s = dc_label(&o);
        if (s == DC_OK) std::printf("labels written to %s\n", lab_out.c_str());
        return report(s);
    }
    if (estimate->parsed()) {
        est.dataset = est_dataset.c_str();
        est.out = est_out.c_str();
        est.calibration = c_str_or_null(est_calibration);
        est.estimator.clahe_clustering = est_clahe ? 1 : 0;
        dc_status s = dc_parse_method(est_method.c_str(), &est.method);
        size_t failed = 0;
        if (s == DC_OK) s = dc_estimate_dataset(&est, &failed);
        if (s == DC_OK || s == DC_ERR_INSUFFICIENT_DATA) {
            std::printf("%s estimates written to %s (%zu failed)\n", est_method.c_str(), est_out.c_str(), failed);
        }
        return report(s);
    }
    if (calibrate->parsed()) {
        cal.raw_estimates = cal_raw.c_str();
        cal.reference_estimates = cal_ref.c_str();
        cal.out = cal_out.c_str();
        dc_calibrate_summary sum{};
        const dc_status s = dc_calibrate(&cal, &sum);
        if (s == DC_OK) {
            std::printf("slope %.6g intercept %.6g (n_fit %zu)\nfit-split bias %.4g; eval MSE %.4g -> %.4g (n %zu)\n",
                        sum.slope, sum.intercept, sum.n_fit, sum.bias_fit, sum.mse_raw_eval,
                        sum.mse_calibrated_eval, sum.n_eval);
        }
        return report(s);
    }
    if (train->parsed()) {
        tr.dataset = tr_dataset.c_str();
        tr.labels = c_str_or_null(tr_labels);
        tr.out = tr_out.c_str();
        tr.log = c_str_or_null(tr_log);
        tr.predictions = c_str_or_null(tr_pred);
        dc_train_summary sum{};
        const dc_status s = dc_train(&tr, &sum);
        if (s == DC_OK) {
            std::printf("best epoch %d (val loss %.5g); test kappa %.4f on %zu images\n", sum.best_epoch,
                        sum.best_val_loss, sum.test_qw_kappa, sum.n_test);
        }
        return report(s);
    }
    if (evaluate->parsed()) {
        std::vector<const char*> paths;
        for (const auto& p : ev_estimates) paths.push_back(p.c_str());
        ev.dataset = ev_dataset.c_str();
        ev.estimates = paths.data();
        ev.n_estimates = paths.size();
        ev.gt_labels = c_str_or_null(ev_labels);
        ev.predictions = c_str_or_null(ev_pred);
        ev.out = ev_out.c_str();
        ev.reference_method = ev_reference.c_str();
        const dc_status s = dc_evaluate(&ev);
        if (s == DC_OK) std::printf("report written to %s\n", ev_out.c_str());
        return report(s);
    }
    return 2;
}
