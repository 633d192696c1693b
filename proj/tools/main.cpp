#include <cstdlib>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "region_learner/commands.hpp"
#include "region_learner/error.hpp"

using namespace region_learner;

namespace {

constexpr int kOk = 0;
constexpr int kConfig = 2;
constexpr int kData = 3;
constexpr int kInvariant = 4;

struct Globals
{
    std::string config;
    std::optional<std::uint64_t> seed;
    std::string out = ".";
    std::vector<std::string> overrides;
};

/* file first, then --set, then --seed: later sources win */
RunConfig build_config(const Globals& g)
{
    RunConfig cfg;
    if (!g.config.empty())
        cfg.load(g.config);
    for (const auto& kv : g.overrides) {
        const auto eq = kv.find('=');
        if (eq == std::string::npos)
            throw ConfigError("--set expects key=value, got '" + kv + "'");
        cfg.set(kv.substr(0, eq), kv.substr(eq + 1));
    }
    if (g.seed)
        cfg.seed = *g.seed;
    cfg.validate();
    return cfg;
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app { "Region-based node preselection: clustering, region prediction and "
                   "bounded working-memory replay" };
    app.require_subcommand(1);

    Globals g;
    app.add_option("--config", g.config, "key = value config file");
    app.add_option("--seed", g.seed, "seed for generation and training");
    app.add_option("--out", g.out, "output directory");
    app.add_option("--set", g.overrides, "override a config key (key=value), repeatable");

    auto* gen = app.add_subcommand("gen-synthetic", "write a synthetic sequence");
    std::size_t revisits = 0, detour = 40;
    std::string layout, name;
    std::optional<std::size_t> frames, regions;
    std::optional<double> noise;
    gen->add_option("--layout", layout, "loop | figure-eight | grid");
    gen->add_option("--frames", frames);
    gen->add_option("--regions", regions);
    gen->add_option("--noise", noise);
    gen->add_option("--revisits", revisits, "also write a second session with N revisits");
    gen->add_option("--detour", detour, "frames of new ground between revisits");

    auto* explore = app.add_subcommand("explore", "cluster a sequence into regions");
    std::string input;
    explore->add_option("--input", input)->required();

    auto* train_cmd = app.add_subcommand("train", "train the region predictor");
    std::string dataset;
    train_cmd->add_option("--dataset", dataset, "dataset.jsonl from explore")->required();

    auto* replay = app.add_subcommand("replay", "navigate a sequence through the memory manager");
    ReplayOptions ro;
    std::string policy, sweep;
    replay->add_option("--input", ro.input)->required();
    replay->add_option("--clusters", ro.clusters, "clusters.csv from explore")->required();
    replay->add_option("--model", ro.model);
    replay->add_flag("--oracle", ro.oracle, "predict the labeled region of each frame");
    replay->add_option("--prior", ro.prior, "earlier session replayed first, WM carried over");
    replay->add_option("--pairing", ro.pairing, "JSON {train_region: test_region}");
    replay->add_option("--policy", policy, "region | baseline");
    replay->add_flag("--timing", ro.timing, "record update latency");
    replay->add_option("--sweep", sweep, "key=v1,v2,... independent runs in parallel");

    auto* eval = app.add_subcommand("eval", "score an event log");
    EvalOptions eo;
    eval->add_option("--log", eo.log)->required();
    eval->add_option("--input", eo.input)->required();
    eval->add_option("--prior", eo.prior);
    eval->add_option("--clusters", eo.clusters);
    eval->add_option("--pairing", eo.pairing);

    auto* plot = app.add_subcommand("plot-data", "CSV series for cluster maps, latency and detections");
    PlotOptions po;
    plot->add_option("--clusters", po.clusters);
    plot->add_option("--latency", po.latency, "latency.csv from replay --timing");
    plot->add_option("--log", po.log);
    plot->add_option("--input", po.input);
    plot->add_option("--prior", po.prior);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kOk : kConfig;
    }

    try {
        RunConfig cfg = build_config(g);
        const fs::path out = g.out;

        if (*gen) {
            if (!layout.empty())
                cfg.synthetic.layout = parse_layout(layout);
            if (frames)
                cfg.synthetic.n_frames = *frames;
            if (regions)
                cfg.synthetic.n_regions = *regions;
            if (noise)
                cfg.synthetic.noise_sigma = *noise;
            cfg.validate();
            cmd_gen_synthetic(cfg, out, revisits, detour);
        } else if (*explore) {
            cmd_explore(cfg, input, out);
        } else if (*train_cmd) {
            cmd_train(cfg, dataset, out);
        } else if (*replay) {
            if (!policy.empty())
                cfg.memory.policy = parse_policy(policy);
            if (!sweep.empty())
                cmd_replay_sweep(cfg, ro, sweep, out);
            else
                cmd_replay(cfg, ro, out);
        } else if (*eval) {
            cmd_eval(cfg, eo, out);
        } else if (*plot) {
            cmd_plot_data(cfg, po, out);
        }
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return kConfig;
    } catch (const DataError& e) {
        std::cerr << "data error: " << e.what() << '\n';
        return kData;
    } catch (const fs::filesystem_error& e) {
        std::cerr << "data error: " << e.what() << '\n';
        return kData;
    } catch (const std::exception& e) {
        std::cerr << "internal error: " << e.what() << '\n';
        return kInvariant;
    }
    return kOk;
}
