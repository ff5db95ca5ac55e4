#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "vascufold/cli/commands.hpp"
#include "vascufold/cli/config.hpp"
#include "vascufold/core/errors.hpp"

using namespace vf;
namespace fs = std::filesystem;

namespace {

json tiny_config(const std::string& out) {
    json cfg = default_experiment_config();
    cfg["output_dir"] = out;
    cfg["seed"] = 5;
    cfg["training"]["train_cases"] = 3;
    cfg["training"]["val_cases"] = 2;
    cfg["training"]["epochs"] = 1;
    return cfg;
}

std::string fresh_dir(const char* name) {
    auto d = fs::temp_directory_path() / name;
    fs::remove_all(d);
    fs::create_directories(d);
    return d.string();
}

}  // namespace

TEST_CASE("config: unknown keys are rejected with their dotted path") {
    auto dir = fresh_dir("vf_cli_cfg");
    {
        std::ofstream out(dir + "/bad.json");
        out << R"({"phantom": {"dpeth": 3}})";
    }
    try {
        load_experiment_config(dir + "/bad.json", {}, nullptr, nullptr);
        FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
        CHECK(std::string(e.what()).find("phantom.dpeth") != std::string::npos);
    }
}

TEST_CASE("config: --set overrides and validates paths") {
    auto cfg = load_experiment_config("", {"phantom.depth=4", "training.lr=0.01"}, nullptr,
                                      nullptr);
    CHECK(cfg["phantom"]["depth"] == 4);
    CHECK(cfg["training"]["lr"] == 0.01);
    CHECK_THROWS_AS(load_experiment_config("", {"phantom.nope=1"}, nullptr, nullptr),
                    ConfigError);
    CHECK_THROWS_AS(load_experiment_config("", {"malformed"}, nullptr, nullptr), ConfigError);
}

TEST_CASE("config: seed overrides stack file < flag < environment") {
    auto dir = fresh_dir("vf_cli_seed");
    {
        std::ofstream out(dir + "/cfg.json");
        out << R"({"seed": 3})";
    }
    auto c1 = load_experiment_config(dir + "/cfg.json", {}, nullptr, nullptr);
    CHECK(c1["seed"] == 3);
    int64_t s = 9;
    auto c2 = load_experiment_config(dir + "/cfg.json", {}, &s, nullptr);
    CHECK(c2["seed"] == 9);
    setenv("VASCUFOLD_SEED", "21", 1);
    auto c3 = load_experiment_config(dir + "/cfg.json", {}, &s, nullptr);
    CHECK(c3["seed"] == 21);
    unsetenv("VASCUFOLD_SEED");
}

TEST_CASE("pipeline commands chain and produce the declared artifacts") {
    auto dir = fresh_dir("vf_cli_pipe");
    auto cfg = tiny_config(dir);
    cfg["degradation"]["gaussian_sigma"] = 0.02;

    cmd_phantom(cfg);
    CHECK(fs::exists(dir + "/graph.json"));
    CHECK(fs::exists(dir + "/volume.json"));
    CHECK(fs::exists(dir + "/volume.raw"));
    CHECK(fs::exists(dir + "/resolved_config.json"));

    cmd_simulate(cfg);
    CHECK(fs::exists(dir + "/stack/stack.json"));
    CHECK(fs::exists(dir + "/stack_clean/stack.json"));
    CHECK(fs::exists(dir + "/stack/s0_grayscale.raw"));

    cmd_preprocess(cfg);
    CHECK(fs::exists(dir + "/stack_pre/stack.json"));
    CHECK(fs::exists(dir + "/preprocess_report.json"));

    cmd_train(cfg);
    CHECK(fs::exists(dir + "/model.json"));
    CHECK(fs::exists(dir + "/model.raw"));
    CHECK(fs::exists(dir + "/history.csv"));
    {
        std::ifstream h(dir + "/history.csv");
        std::string header;
        std::getline(h, header);
        CHECK(header == "epoch,loss,val_dice,wall_ms");
    }

    cmd_reconstruct(cfg);
    CHECK(fs::exists(dir + "/recon.json"));
    CHECK(fs::exists(dir + "/probs.json"));

    cmd_quantify(cfg);
    CHECK(fs::exists(dir + "/quant_report.json"));
    CHECK(fs::exists(dir + "/quant_report.csv"));
    CHECK(fs::exists(dir + "/extracted_graph.json"));

    cmd_evaluate(cfg);
    CHECK(fs::exists(dir + "/report.json"));
    CHECK(fs::exists(dir + "/tables.txt"));
    auto rep = read_json_file(dir + "/report.json");
    CHECK(rep.contains("dice"));
    CHECK(rep["dice"].is_number());
    CHECK(rep["published_fold_arithmetic"]["published_average_consistent"] == false);

    cmd_report(dir);
    CHECK(fs::exists(dir + "/summary_tables.txt"));
    CHECK(fs::exists(dir + "/summary.csv"));
    fs::remove_all(dir);
}

TEST_CASE("the resolved-config echo reproduces byte-identical artifacts") {
    auto d1 = fresh_dir("vf_cli_echo1");
    auto d2 = fresh_dir("vf_cli_echo2");
    auto cfg = tiny_config(d1);
    cmd_phantom(cfg);
    // re-feed the echo as the config of a second run
    auto echo = read_json_file(d1 + "/resolved_config.json");
    echo["output_dir"] = d2;
    cmd_phantom(echo);
    auto bytes = [](const std::string& p) {
        std::ifstream in(p, std::ios::binary);
        return std::string(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
    };
    CHECK(bytes(d1 + "/graph.json") == bytes(d2 + "/graph.json"));
    CHECK(bytes(d1 + "/volume.raw") == bytes(d2 + "/volume.raw"));
    fs::remove_all(d1);
    fs::remove_all(d2);
}

TEST_CASE("report aggregates mean and std across seeded runs exactly") {
    auto dir = fresh_dir("vf_cli_report");
    // five synthetic single-method reports with known dice values
    std::vector<double> dices = {0.8, 0.85, 0.9, 0.95, 1.0};
    for (size_t i = 0; i < dices.size(); ++i) {
        auto sub = dir + "/run" + std::to_string(i);
        fs::create_directories(sub);
        json rep;
        rep["metrics"] = json::array();
        json row;
        row["method"] = "toy";
        row["dice"] = dices[i];
        row["sensitivity"] = 0.5;
        rep["metrics"].push_back(row);
        write_json_file(sub + "/report.json", rep);
    }
    cmd_report(dir);
    // recompute by hand
    double mean = 0;
    for (double d : dices) mean += d;
    mean /= static_cast<double>(dices.size());
    double var = 0;
    for (double d : dices) var += (d - mean) * (d - mean);
    double sd = std::sqrt(var / static_cast<double>(dices.size() - 1));

    std::ifstream csv(dir + "/summary.csv");
    std::string line;
    bool found = false;
    while (std::getline(csv, line)) {
        if (line.rfind("toy,dice,", 0) == 0) {
            std::stringstream ss(line.substr(9));
            std::string m, s, n;
            std::getline(ss, m, ',');
            std::getline(ss, s, ',');
            std::getline(ss, n, ',');
            CHECK(std::abs(std::stod(m) - mean) < 1e-9);
            CHECK(std::abs(std::stod(s) - sd) < 1e-9);
            CHECK(n == "5");
            found = true;
        }
    }
    CHECK(found);
    fs::remove_all(dir);
}

TEST_CASE("report on an empty directory raises a config error") {
    auto dir = fresh_dir("vf_cli_empty");
    CHECK_THROWS_AS(cmd_report(dir), ConfigError);
    CHECK_THROWS_AS(cmd_report(dir + "/missing"), ConfigError);
    fs::remove_all(dir);
}

TEST_CASE("quantify honors the source selector") {
    auto dir = fresh_dir("vf_cli_quant");
    auto cfg = tiny_config(dir);
    // quant accuracy needs spacing <= radius/3; the training grid is coarser
    cfg["phantom"]["grid_dims_zyx"] = {64, 64, 64};
    cfg["phantom"]["spacing_mm_zyx"] = {0.02, 0.02, 0.02};
    cmd_phantom(cfg);
    cfg["quantification"]["source"] = "truth";
    cmd_quantify(cfg);
    auto q = read_json_file(dir + "/quant_report.json");
    CHECK(q["provenance"]["volume_id"] == "truth");
    // truth-volume quant should sit close to the analytic parameters
    auto t = read_json_file(dir + "/truth_params.json");
    double qd = q["vessel_density_mm_per_mm3"].get<double>();
    double td = t["vessel_density_mm_per_mm3"].get<double>();
    CHECK(std::abs(qd - td) / td < 0.06);
    cfg["quantification"]["source"] = "nonsense";
    CHECK_THROWS_AS(cmd_quantify(cfg), ConfigError);
    fs::remove_all(dir);
}
