#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "hlab/experiments.hpp"

int main(int argc, char** argv) {
    CLI::App app{"hlab: Helmholtz desk laboratory"};
    std::string experiment, config_path, out_dir;
    std::vector<std::string> overrides;
    app.add_option("experiment", experiment,
                   "solve | norms | rays | identities | waveguide | concentration | "
                   "sommerfeld-compare | eps-sweep")
        ->required();
    app.add_option("--config", config_path, "JSON configuration file")->required();
    app.add_option("--out", out_dir, "output directory (default from config, else '.')");
    app.add_option("--override", overrides, "top-level key=value overrides, repeatable");
    CLI11_PARSE(app, argc, argv);

    hlab::Json cfg;
    try {
        cfg = hlab::load_config(config_path);
        cfg["experiment"] = experiment;
        for (const auto& kv : overrides) hlab::apply_override(cfg, kv);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    std::string out = out_dir;
    if (out.empty()) out = hlab::exp_detail::get_or(cfg, "out", std::string("."));
    return hlab::run_experiment(cfg, out);
}
