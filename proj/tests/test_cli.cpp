// End-to-end runs of the command-line tool.
#include "test_support.hpp"

#include <gtest/gtest.h>
#include <json.hpp>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

namespace {

namespace fs = std::filesystem;
using dermacolor::testing::TempDir;

int run(const std::string& args) {
    const std::string cmd = std::string(DERMACOLOR_CLI) + " " + args + " >/dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

std::vector<std::vector<std::string>> csv_rows(const fs::path& p) {
    std::ifstream in(p);
    std::vector<std::vector<std::string>> rows;
    std::string line;
    while (std::getline(in, line)) {
        std::vector<std::string> fields;
        std::stringstream ss(line);
        std::string f;
        while (std::getline(ss, f, ',')) fields.push_back(f);
        if (!line.empty() && line.back() == ',') fields.emplace_back();
        rows.push_back(fields);
    }
    return rows;
}

std::size_t column(const std::vector<std::string>& header, const std::string& name) {
    for (std::size_t i = 0; i < header.size(); ++i)
        if (header[i] == name) return i;
    ADD_FAILURE() << "missing column " << name;
    return 0;
}

class Cli : public ::testing::Test {
protected:
    static void SetUpTestSuite() {
        dir_ = new TempDir("cli");
        ds_ = (dir_->path() / "ds").string();
        ASSERT_EQ(run("generate --out " + ds_ + " --n 36 --size 128 --seed 5"), 0);
    }
    static void TearDownTestSuite() {
        delete dir_;
        dir_ = nullptr;
    }
    static fs::path tmp(const std::string& name) { return dir_->path() / name; }

    static TempDir* dir_;
    static std::string ds_;
};

TempDir* Cli::dir_ = nullptr;
std::string Cli::ds_;

TEST_F(Cli, UsageErrorsExitTwo) {
    EXPECT_EQ(run("generate --out " + tmp("small").string() + " --n 5"), 2);
    EXPECT_EQ(run("estimate --dataset " + ds_ + " --method median --out x.csv"), 2);
    EXPECT_EQ(run("frobnicate"), 2);
    EXPECT_EQ(run(""), 2);
}

TEST_F(Cli, MissingDatasetIsIoError) {
    EXPECT_EQ(run("estimate --dataset " + tmp("nowhere").string() + " --method patch --out " +
                  tmp("p.csv").string()),
              3);
}

TEST_F(Cli, GenerateIsReproducible) {
    const auto a = tmp("rep_a"), b = tmp("rep_b");
    ASSERT_EQ(run("generate --out " + a.string() + " --n 18 --size 128 --seed 9"), 0);
    ASSERT_EQ(run("generate --out " + b.string() + " --n 18 --size 128 --seed 9"), 0);
    const auto ha = nlohmann::json::parse(slurp(a / "manifest.json"))["dataset"]["content_hash"];
    const auto hb = nlohmann::json::parse(slurp(b / "manifest.json"))["dataset"]["content_hash"];
    EXPECT_EQ(ha, hb);
    EXPECT_EQ(slurp(a / "metadata.csv"), slurp(b / "metadata.csv"));
    EXPECT_EQ(run("generate --out " + a.string() + " --n 18 --size 128 --seed 9"), 2);
    EXPECT_EQ(run("generate --out " + a.string() + " --n 18 --size 128 --seed 9 --overwrite"), 0);
}

TEST_F(Cli, SegmentationOnCleanDatasetHasNoFailures) {
    const auto out = tmp("seg.csv");
    ASSERT_EQ(run("estimate --dataset " + ds_ + " --method segmentation --out " + out.string()), 0);
    const auto rows = csv_rows(out);
    ASSERT_EQ(rows.size(), 37u);
    const auto st = column(rows[0], "status");
    for (std::size_t i = 1; i < rows.size(); ++i) EXPECT_EQ(rows[i][st], "ok");
}

TEST_F(Cli, SegmentationWithoutMasksExitsTwo) {
    const auto copy = tmp("nomask");
    fs::copy(ds_, copy, fs::copy_options::recursive);
    fs::remove_all(copy / "masks");
    EXPECT_EQ(run("estimate --dataset " + copy.string() + " --method segmentation --out " +
                  tmp("nm.csv").string()),
              2);
}

TEST_F(Cli, CalibratedEstimatesAreAffineInRaw) {
    const auto seg = tmp("c_seg.csv"), patch = tmp("c_patch.csv"), cal = tmp("cal.json"), pc = tmp("pc.csv");
    ASSERT_EQ(run("estimate --dataset " + ds_ + " --method segmentation --out " + seg.string()), 0);
    ASSERT_EQ(run("estimate --dataset " + ds_ + " --method patch --out " + patch.string()), 0);
    ASSERT_EQ(run("calibrate --estimates " + patch.string() + " --reference " + seg.string() + " --out " +
                  cal.string()),
              0);
    ASSERT_EQ(run("estimate --dataset " + ds_ + " --method patch --out " + pc.string() + " --calibration " +
                  cal.string()),
              0);
    const auto model = nlohmann::json::parse(slurp(cal));
    const double slope = model["slope"], intercept = model["intercept"];
    const auto rows = csv_rows(pc);
    const auto c_ita = column(rows[0], "ita"), c_raw = column(rows[0], "raw_ita"), c_m = column(rows[0], "method");
    for (std::size_t i = 1; i < rows.size(); ++i) {
        EXPECT_EQ(rows[i][c_m], "patch_calibrated");
        EXPECT_NEAR(std::stod(rows[i][c_ita]), slope * std::stod(rows[i][c_raw]) + intercept, 1e-9);
    }
}

TEST_F(Cli, CalibrateRecoversExactLine) {
    const auto raw = tmp("lin_raw.csv"), ref = tmp("lin_ref.csv"), out = tmp("lin.json");
    std::ofstream a(raw), b(ref);
    a << "id,ita,method,status\n";
    b << "id,ita,method,status\n";
    for (int i = 0; i < 50; ++i) {
        const double x = -30.0 + 1.7 * i;
        a << "img_" << i << "," << x << ",patch,ok\n";
        b << "img_" << i << "," << 0.75 * x + 4.5 << ",segmentation,ok\n";
    }
    a.close();
    b.close();
    ASSERT_EQ(run("calibrate --estimates " + raw.string() + " --reference " + ref.string() + " --out " +
                  out.string()),
              0);
    const auto model = nlohmann::json::parse(slurp(out));
    EXPECT_NEAR(model["slope"].get<double>(), 0.75, 1e-9);
    EXPECT_NEAR(model["intercept"].get<double>(), 4.5, 1e-9);
}

TEST_F(Cli, EvaluateSelfComparison) {
    const auto seg = tmp("e_seg.csv"), report = tmp("report.json");
    ASSERT_EQ(run("estimate --dataset " + ds_ + " --method segmentation --out " + seg.string()), 0);
    ASSERT_EQ(run("evaluate --dataset " + ds_ + " --estimates " + seg.string() + " --out " + report.string() +
                  " --bootstrap 200"),
              0);
    const auto r = nlohmann::json::parse(slurp(report));
    const auto& s = r["methods"]["segmentation"];
    EXPECT_EQ(s["bland_altman"]["bias"].get<double>(), 0.0);
    EXPECT_EQ(r["lighting_levels"].size(), 18u);
    EXPECT_GE(s["lighting_sensitivity"]["delta_r2"].get<double>(), 0.0);
    EXPECT_LT(s["spearman_vs_melanosome"].get<double>(), 0.0);
}

TEST_F(Cli, TrainLogAndDeterminism) {
    const auto m1 = tmp("m1.json"), m2 = tmp("m2.json");
    const std::string common = " --dataset " + ds_ + " --epochs 7 --batch-size 8 --lr 0.01 --seed 2";
    ASSERT_EQ(run("train" + common + " --out " + m1.string()), 0);
    ASSERT_EQ(run("train" + common + " --out " + m2.string()), 0);
    EXPECT_EQ(slurp(m1), slurp(m2));
    const auto log = csv_rows(tmp("m1.log.csv"));
    EXPECT_EQ(log.size(), 1u + 7u);
    const auto pred = csv_rows(tmp("m1.predictions.csv"));
    EXPECT_EQ(pred.size(), 37u);
}

TEST_F(Cli, LabelCommandMatchesMetadata) {
    const auto labels = tmp("labels.csv");
    ASSERT_EQ(run("label --dataset " + ds_ + " --out " + labels.string()), 0);
    const auto lab = csv_rows(labels);
    const auto meta = csv_rows(fs::path(ds_) / "metadata.csv");
    ASSERT_EQ(lab.size(), meta.size());
    const auto l_id = column(lab[0], "id"), l_gt = column(lab[0], "gt_fp");
    const auto m_id = column(meta[0], "id"), m_gt = column(meta[0], "gt_fp");
    for (std::size_t i = 1; i < lab.size(); ++i) {
        EXPECT_EQ(lab[i][l_id], meta[i][m_id]);
        EXPECT_EQ(lab[i][l_gt], meta[i][m_gt]);
    }
}

}  // namespace
