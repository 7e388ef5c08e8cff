#include <doctest.h>

#include <sys/wait.h>

#include <opencv2/core.hpp>
#include <opencv2/imgcodecs.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <limits>
#include <string>
#include <vector>

#include "ucn/checkpoint.hpp"
#include "ucn/config.hpp"

using namespace ucn;
namespace fs = std::filesystem;

// End-to-end tests drive the real executable (UCN_CLI_BIN is injected by the
// build) so argument parsing, exit codes, and artifacts are all exercised.
namespace {

struct TempDir {
    fs::path path;
    explicit TempDir(const std::string& tag) {
        path = fs::temp_directory_path() / ("ucn_cli_" + tag + "_" + std::to_string(::getpid()));
        fs::remove_all(path);
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
};

int run(const std::string& args, const std::string& capture = "/dev/null") {
    const std::string cmd = std::string(UCN_CLI_BIN) + " " + args + " > " + capture + " 2>&1";
    int st = std::system(cmd.c_str());
    REQUIRE(st != -1);
    return WIFEXITED(st) ? WEXITSTATUS(st) : -1;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    REQUIRE(in.good());
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

// Shared flags for a desk-sized synthetic training run.
const std::string kTinyTrain =
    "train --synthetic 4 --k 1 --batch-size 2 --target-h 32 --target-w 32 --seed 3";

}  // namespace

TEST_CASE("run naming follows the width and ablation flags") {
    RunConfig cfg;
    cfg.k = 4;
    CHECK(cfg.run_name() == "ucloudnet_k4_aux_lrdecay");
    cfg.aux = false;
    CHECK(cfg.run_name() == "ucloudnet_k4_lrdecay");
    cfg.lr_decay = false;
    cfg.k = 2;
    CHECK(cfg.run_name() == "ucloudnet_k2");
}

TEST_CASE("cli: no subcommand, bad k, and missing data are usage errors") {
    CHECK(run("") == 1);
    CHECK(run("train --k 0 --synthetic 4") == 1);
    CHECK(run("train") == 1);  // neither --dataset nor --synthetic
    CHECK(run("train --synthetic 4 --target-h 30 --target-w 30") == 1);
    CHECK(run("--help") == 0);
}

TEST_CASE("cli: train writes artifacts and identical configs give identical bytes") {
    TempDir td("train");
    const std::string a = (td.path / "a").string();
    const std::string b = (td.path / "b").string();
    const std::string log = (td.path / "log.txt").string();

    CHECK(run(kTinyTrain + " --epochs 2 --out " + a, log) == 0);
    CHECK(fs::is_regular_file(a + "/checkpoint.bin"));
    CHECK(fs::is_regular_file(a + "/loss_history.csv"));
    CHECK(fs::is_regular_file(a + "/config.txt"));
    CHECK(slurp(log).find("ucloudnet_k1:") != std::string::npos);

    CHECK(run(kTinyTrain + " --epochs 2 --out " + b) == 0);
    CHECK(slurp(a + "/checkpoint.bin") == slurp(b + "/checkpoint.bin"));
    CHECK(slurp(a + "/loss_history.csv") == slurp(b + "/loss_history.csv"));
}

TEST_CASE("cli: the echoed config reproduces the run via --config") {
    TempDir td("cfgecho");
    const std::string a = (td.path / "a").string();
    const std::string c = (td.path / "c").string();
    CHECK(run(kTinyTrain + " --epochs 2 --out " + a) == 0);
    CHECK(run("train --config " + a + "/config.txt --out " + c) == 0);
    CHECK(slurp(a + "/checkpoint.bin") == slurp(c + "/checkpoint.bin"));
}

TEST_CASE("cli: in-place resume extends the history seamlessly") {
    TempDir td("resume");
    const std::string d = (td.path / "d").string();
    const std::string f = (td.path / "f").string();

    CHECK(run(kTinyTrain + " --epochs 4 --out " + f) == 0);  // uninterrupted reference
    CHECK(run(kTinyTrain + " --epochs 2 --out " + d) == 0);
    CHECK(run("train --checkpoint " + d + "/checkpoint.bin --epochs 4 --out " + d) == 0);

    CHECK(slurp(d + "/checkpoint.bin") == slurp(f + "/checkpoint.bin"));
    CHECK(slurp(d + "/loss_history.csv") == slurp(f + "/loss_history.csv"));

    // Asking for fewer epochs than already completed is rejected.
    CHECK(run("train --checkpoint " + d + "/checkpoint.bin --epochs 1 --out " + d) == 1);
}

TEST_CASE("cli: eval writes deterministic reports with the expected fields") {
    TempDir td("eval");
    const std::string m = (td.path / "m").string();
    const std::string g = (td.path / "g").string();
    const std::string h = (td.path / "h").string();
    CHECK(run(kTinyTrain + " --epochs 2 --out " + m) == 0);

    CHECK(run("eval --checkpoint " + m + "/checkpoint.bin --out " + g) == 0);
    const std::string report = slurp(g + "/eval_report.txt");
    for (const char* key : {"samples=", "threshold=", "precision=", "recall=", "f_measure=",
                            "error_rate=", "tp=", "fp=", "fn=", "tn=", "auc_pr="})
        CHECK(report.find(key) != std::string::npos);
    const std::string curve = slurp(g + "/pr_curve.csv");
    CHECK(curve.rfind("threshold,precision,recall\n", 0) == 0);

    CHECK(run("eval --checkpoint " + m + "/checkpoint.bin --out " + h) == 0);
    CHECK(report == slurp(h + "/eval_report.txt"));
    CHECK(curve == slurp(h + "/pr_curve.csv"));

    CHECK(run("eval") == 1);                              // --checkpoint required
    CHECK(run("eval --checkpoint " + m + "/nope.bin") == 1);
}

TEST_CASE("cli: pr-curve exports only the curve") {
    TempDir td("curve");
    const std::string m = (td.path / "m").string();
    const std::string o = (td.path / "o").string();
    CHECK(run(kTinyTrain + " --epochs 2 --out " + m) == 0);
    CHECK(run("pr-curve --checkpoint " + m + "/checkpoint.bin --out " + o) == 0);
    CHECK(fs::is_regular_file(o + "/pr_curve.csv"));
    CHECK_FALSE(fs::exists(o + "/eval_report.txt"));
}

TEST_CASE("cli: predict emits a strictly binary mask at the source resolution") {
    TempDir td("predict");
    const std::string m = (td.path / "m").string();
    CHECK(run(kTinyTrain + " --epochs 2 --out " + m) == 0);

    // A non-square, non-divisible-by-16 input exercises the resize round-trip.
    cv::Mat img(50, 40, CV_8UC3);
    for (int y = 0; y < 50; ++y)
        for (int x = 0; x < 40; ++x)
            img.at<cv::Vec3b>(y, x) =
                cv::Vec3b(uint8_t(200 - y), uint8_t(140 + x / 2), uint8_t(90 + y));
    const std::string in = (td.path / "sky.png").string();
    cv::imwrite(in, img);

    const std::string mask_path = (td.path / "mask.png").string();
    const std::string prob_path = (td.path / "prob.png").string();
    CHECK(run("predict --image " + in + " --checkpoint " + m + "/checkpoint.bin --out " +
              mask_path + " --prob " + prob_path) == 0);

    cv::Mat mask = cv::imread(mask_path, cv::IMREAD_GRAYSCALE);
    REQUIRE(!mask.empty());
    CHECK(mask.rows == 50);
    CHECK(mask.cols == 40);
    for (int y = 0; y < mask.rows; ++y)
        for (int x = 0; x < mask.cols; ++x) {
            const uint8_t v = mask.at<uint8_t>(y, x);
            CHECK((v == 0 || v == 255));
        }
    CHECK(fs::is_regular_file(prob_path));

    // Threshold 0 turns every pixel positive under the >= convention.
    const std::string all_on = (td.path / "allon.png").string();
    CHECK(run("predict --image " + in + " --checkpoint " + m +
              "/checkpoint.bin --threshold 0 --out " + all_on) == 0);
    cv::Mat on = cv::imread(all_on, cv::IMREAD_GRAYSCALE);
    REQUIRE(!on.empty());
    for (int y = 0; y < on.rows; ++y)
        for (int x = 0; x < on.cols; ++x) CHECK(on.at<uint8_t>(y, x) == 255);

    CHECK(run("predict --image " + (td.path / "missing.png").string() + " --checkpoint " + m +
              "/checkpoint.bin --out " + mask_path) == 1);
}

TEST_CASE("cli: gradcheck covers every primitive and catches sabotage") {
    TempDir td("gradcheck");
    const std::string log = (td.path / "log.txt").string();
    CHECK(run("gradcheck --seeds 2", log) == 0);
    const std::string out = slurp(log);
    for (const char* name : {"conv2d", "maxpool2d", "upsample", "batchnorm", "relu6", "sigmoid",
                             "concat", "add", "bce", "encoder_dcb", "ucloudnet_k1"})
        CHECK(out.find(name) != std::string::npos);
    CHECK(out.find("gradcheck: PASS") != std::string::npos);
    CHECK(out.find("FAIL") == std::string::npos);

    const std::string bad = (td.path / "bad.txt").string();
    CHECK(run("gradcheck --seeds 2 --corrupt-conv", bad) == 1);
    const std::string bout = slurp(bad);
    CHECK(bout.find("gradcheck: FAIL (conv2d)") != std::string::npos);
}

TEST_CASE("cli: a numerical abort exits with the dedicated code") {
    TempDir td("numabort");
    // Hand-build a resumable checkpoint whose weights are poisoned with NaN;
    // the first training forward then aborts numerically.
    RunConfig cfg;
    cfg.k = 1;
    cfg.epochs = 1;
    cfg.batch_size = 2;
    cfg.seed = 3;
    cfg.target_h = cfg.target_w = 32;
    cfg.synthetic = 2;
    UCloudNet<float> model(cfg.k, cfg.seed);
    model.head_main().weight.data()[0] = std::numeric_limits<float>::quiet_NaN();
    AdamState<float> adam;
    adam.init(model.trainable_parameters());
    const std::string ckpt = (td.path / "nan.bin").string();
    save_checkpoint(ckpt, model, &adam, cfg, 0, 0);

    CHECK(run("train --checkpoint " + ckpt + " --epochs 1 --out " + (td.path / "out").string()) ==
          2);
}
