#pragma once

#include <filesystem>
#include <optional>
#include <string>

#include "region_learner/config.hpp"
#include "region_learner/evaluation.hpp"

namespace region_learner {

namespace fs = std::filesystem;

/* Writes sequence.jsonl, plus sequence-revisit.jsonl when revisits > 0 */
void cmd_gen_synthetic(const RunConfig& cfg, const fs::path& out_dir,
                       std::size_t revisits = 0, std::size_t detour = 40);

/* Writes clusters.csv and dataset.jsonl (frames labeled with their region) */
void cmd_explore(const RunConfig& cfg, const fs::path& input, const fs::path& out_dir);

/* Writes model.bin and loss.csv */
void cmd_train(const RunConfig& cfg, const fs::path& dataset, const fs::path& out_dir);

struct ReplayOptions
{
    fs::path input;
    fs::path clusters;
    std::optional<fs::path> model;
    bool oracle = false;
    std::optional<fs::path> prior;      /* earlier session replayed first, WM carried over */
    std::optional<fs::path> pairing;
    bool timing = false;                /* latency in the report and latency.csv */
};

/* Writes events.jsonl and report.json */
RunReport cmd_replay(const RunConfig& cfg, const ReplayOptions& opts, const fs::path& out_dir);

/* "key=v1,v2,..": one replay per value, run concurrently, each into
 * out_dir/sweep/key=value */
void cmd_replay_sweep(const RunConfig& cfg, const ReplayOptions& opts,
                      const std::string& sweep, const fs::path& out_dir);

struct EvalOptions
{
    fs::path log;
    fs::path input;
    std::optional<fs::path> prior;
    std::optional<fs::path> clusters;
    std::optional<fs::path> pairing;
};

/* Writes report.json */
RunReport cmd_eval(const RunConfig& cfg, const EvalOptions& opts, const fs::path& out_dir);

struct PlotOptions
{
    std::optional<fs::path> clusters;
    std::optional<fs::path> latency;
    std::optional<fs::path> log;
    std::optional<fs::path> input;
    std::optional<fs::path> prior;
};

/* cluster_map.csv, latency_vs_map_size.csv, closures.csv, detections.csv,
 * each written when its inputs are given */
void cmd_plot_data(const RunConfig& cfg, const PlotOptions& opts, const fs::path& out_dir);

RegionPairing load_pairing(const fs::path& path);

} // namespace region_learner
