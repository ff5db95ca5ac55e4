#include <cstdio>
#include <exception>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "vascufold/cli/commands.hpp"
#include "vascufold/cli/config.hpp"
#include "vascufold/core/errors.hpp"

namespace {

struct CommonArgs {
    std::string config_path;
    std::string out_dir;
    int64_t seed = -1;
    bool seed_set = false;
    std::vector<std::string> sets;
};

void add_common(CLI::App* sub, CommonArgs& args) {
    sub->add_option("-c,--config", args.config_path, "experiment config JSON");
    sub->add_option("-o,--output", args.out_dir, "output directory override");
    sub->add_option("--seed", args.seed, "global seed override")
        ->each([&](const std::string&) { args.seed_set = true; });
    sub->add_option("--set", args.sets, "dotted key=value overrides")->take_all();
}

vf::json resolve(const CommonArgs& args) {
    return vf::load_experiment_config(args.config_path, args.sets,
                                      args.seed_set ? &args.seed : nullptr,
                                      args.out_dir.empty() ? nullptr : &args.out_dir);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"vascufold: synthetic SRUS microvasculature reconstruction pipeline"};
    app.require_subcommand(1);

    CommonArgs args;
    std::string report_dir;

    auto* c_phantom = app.add_subcommand("phantom", "generate a vascular phantom and raster volume");
    auto* c_simulate = app.add_subcommand("simulate", "slice the phantom into a multimodal stack");
    auto* c_preprocess = app.add_subcommand("preprocess", "denoise and register the slice stack");
    auto* c_train = app.add_subcommand("train", "train the toy reconstruction model");
    auto* c_reconstruct = app.add_subcommand("reconstruct", "infer the 3D volume from slices");
    auto* c_quantify = app.add_subcommand("quantify", "extract the centerline graph and parameters");
    auto* c_evaluate = app.add_subcommand("evaluate", "score reconstruction and emit reports");
    auto* c_report = app.add_subcommand("report", "aggregate metrics tables from a run directory");
    for (auto* sub : {c_phantom, c_simulate, c_preprocess, c_train, c_reconstruct, c_quantify,
                      c_evaluate})
        add_common(sub, args);
    c_report->add_option("-o,--output", report_dir, "run directory holding report.json files")
        ->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (c_phantom->parsed()) vf::cmd_phantom(resolve(args));
        if (c_simulate->parsed()) vf::cmd_simulate(resolve(args));
        if (c_preprocess->parsed()) vf::cmd_preprocess(resolve(args));
        if (c_train->parsed()) vf::cmd_train(resolve(args));
        if (c_reconstruct->parsed()) vf::cmd_reconstruct(resolve(args));
        if (c_quantify->parsed()) vf::cmd_quantify(resolve(args));
        if (c_evaluate->parsed()) vf::cmd_evaluate(resolve(args));
        if (c_report->parsed()) vf::cmd_report(report_dir);
    } catch (const vf::ConfigError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "internal error: %s\n", e.what());
        return 2;
    }
    return 0;
}
