#include "region_learner/commands.hpp"

#include <fstream>
#include <future>
#include <map>
#include <sstream>

#include <json.hpp>

#include "region_learner/error.hpp"
#include "region_learner/pipeline.hpp"
#include "region_learner/report.hpp"

namespace region_learner {

namespace {

std::ofstream open_out(const fs::path& dir, const std::string& name)
{
    fs::create_directories(dir);
    std::ofstream out(dir / name);
    if (!out)
        throw DataError("cannot write " + (dir / name).string());
    out.precision(10);
    return out;
}

std::vector<ClusterDumpRow> load_clusters(const fs::path& path)
{
    std::ifstream in(path);
    if (!in)
        throw DataError("cannot open cluster file " + path.string());
    return read_cluster_csv(in);
}

/* Ground-truth labels come from the frames themselves when a pairing maps
 * training regions onto them, otherwise from the explored map */
std::vector<std::optional<RegionId>> topk_labels(std::span<const Frame> frames,
                                                 const std::optional<RegionPairing>& pairing,
                                                 const RegionLabeler* labeler)
{
    if (pairing) {
        std::vector<std::optional<RegionId>> labels;
        for (const Frame& f : frames)
            labels.push_back(f.gt_region);
        return labels;
    }
    if (labeler)
        return label_frames(frames, *labeler);
    return std::vector<std::optional<RegionId>>(frames.size());
}

RunReport score_run(const RunConfig& cfg, const EventLog& log, std::span<const Frame> input,
                    const std::vector<Frame>* prior,
                    std::span<const std::optional<RegionId>> labels,
                    const std::optional<RegionPairing>& pairing)
{
    RunReport r;
    const NodeId offset = prior ? static_cast<NodeId>(prior->size()) : 0;

    const auto intra = coalesce_events(gt_matches_intra(input, cfg.gt));
    const auto loops = eval_loops(log.events, intra, input, cfg.gt, offset, offset);
    r.loops_total = loops.total;
    r.loops_detected = loops.detected;

    if (prior) {
        const auto cross = coalesce_events(gt_matches(input, *prior, cfg.gt));
        const auto reloc = eval_loops(log.events, cross, *prior, cfg.gt, offset, 0);
        r.reloc_total = reloc.total;
        r.reloc_performed = reloc.detected;
    }

    if (!log.predicted.empty()) {
        const auto t1 = eval_topk(log.predicted, labels, pairing, 1);
        const auto t3 = eval_topk(log.predicted, labels, pairing, 3);
        r.top1 = t1.fraction;
        r.top3 = t3.fraction;
        r.topk_evaluated = t1.evaluated;
        r.topk_excluded = t1.excluded;
    }
    return r;
}

SyntheticSpec synthetic_spec(const RunConfig& cfg)
{
    SyntheticSpec spec = cfg.synthetic;
    spec.seed = cfg.seed;
    return spec;
}

} // namespace

RegionPairing load_pairing(const fs::path& path)
{
    std::ifstream in(path);
    if (!in)
        throw DataError("cannot open pairing file " + path.string());
    RegionPairing pairing;
    try {
        const auto j = nlohmann::json::parse(in);
        if (!j.is_object())
            throw DataError("pairing file must hold a JSON object");
        for (const auto& [key, value] : j.items()) {
            std::size_t used = 0;
            const unsigned long train = std::stoul(key, &used);
            if (used != key.size())
                throw DataError("pairing key '" + key + "' is not a region id");
            pairing[static_cast<RegionId>(train)] = value.get<RegionId>();
        }
    } catch (const nlohmann::json::exception& e) {
        throw DataError("pairing file " + path.string() + ": " + e.what());
    } catch (const std::logic_error& e) {
        throw DataError("pairing file " + path.string() + ": bad region id");
    }
    return pairing;
}

void cmd_gen_synthetic(const RunConfig& cfg, const fs::path& out_dir, std::size_t revisits,
                       std::size_t detour)
{
    const SyntheticSpec spec = synthetic_spec(cfg);
    const auto frames = gen_synthetic(spec);
    auto out = open_out(out_dir, "sequence.jsonl");
    write_sequence(out, frames);

    if (revisits > 0) {
        const auto second = gen_revisit_session(spec, frames, revisits, detour, spec.seed + 1);
        auto out2 = open_out(out_dir, "sequence-revisit.jsonl");
        write_sequence(out2, second);
    }
}

void cmd_explore(const RunConfig& cfg, const fs::path& input, const fs::path& out_dir)
{
    auto frames = load_sequence(input);
    const Exploration ex = run_exploration(frames, cfg.clustering, cfg.links);

    auto csv = open_out(out_dir, "clusters.csv");
    write_cluster_csv(csv, ex.graph, ex.regions);

    for (std::size_t i = 0; i < frames.size(); ++i)
        frames[i].gt_region = ex.dataset[i].region;
    auto dataset = open_out(out_dir, "dataset.jsonl");
    write_sequence(dataset, frames);
}

void cmd_train(const RunConfig& cfg, const fs::path& dataset_path, const fs::path& out_dir)
{
    const auto frames = load_sequence(dataset_path);
    std::vector<LabeledExample> dataset;
    RegionId max_region = 0;
    for (const Frame& f : frames) {
        if (!f.gt_region)
            throw DataError("dataset frame " + std::to_string(f.frame_id) + " has no region");
        if (f.feature.empty())
            throw DataError("dataset frame " + std::to_string(f.frame_id) + " has no feature");
        dataset.push_back({ f.feature, *f.gt_region });
        max_region = std::max(max_region, *f.gt_region);
    }

    TrainConfig tc = cfg.train;
    tc.seed = cfg.seed;
    auto model = PredictorModel::initialize(dataset.front().feature.size(), cfg.hidden,
                                            static_cast<std::size_t>(max_region) + 1, cfg.seed);
    const TrainResult result = train(std::move(model), dataset, tc);

    fs::create_directories(out_dir);
    std::ofstream bin(out_dir / "model.bin", std::ios::binary);
    if (!bin)
        throw DataError("cannot write " + (out_dir / "model.bin").string());
    save_model(bin, result.model);
    auto loss = open_out(out_dir, "loss.csv");
    loss << "epoch,loss\n";
    for (std::size_t e = 0; e < result.loss_history.size(); ++e)
        loss << e + 1 << ',' << result.loss_history[e] << '\n';
}

RunReport cmd_replay(const RunConfig& cfg, const ReplayOptions& opts, const fs::path& out_dir)
{
    cfg.validate();
    const auto frames = load_sequence(opts.input);
    const auto rows = load_clusters(opts.clusters);
    const RegionLabeler labeler(rows, cfg.label_radius);
    const RegionSet regions = regions_from_dump(rows);
    const std::size_t n_regions = labeler.n_regions();

    std::optional<std::vector<Frame>> prior;
    if (opts.prior)
        prior = load_sequence(*opts.prior);

    std::optional<PredictorModel> model;
    if (opts.model && !opts.oracle) {
        std::ifstream bin(*opts.model, std::ios::binary);
        if (!bin)
            throw DataError("cannot open model file " + opts.model->string());
        model = load_model(bin);
    }
    if (!model && !opts.oracle && cfg.memory.policy == MemoryPolicy::Region)
        throw ConfigError("replay: region policy needs --model or --oracle");

    const auto make_predictor = [&](std::span<const Frame> seq) -> std::unique_ptr<RegionPredictor> {
        if (model)
            return std::make_unique<MlpPredictor>(*model);
        if (opts.oracle)
            return std::make_unique<OraclePredictor>(label_frames(seq, labeler), n_regions);
        return std::make_unique<OraclePredictor>(std::vector<std::optional<RegionId>> {},
                                                 n_regions);
    };

    NavigationParams np { cfg.memory, cfg.ema_alpha, opts.timing };
    MemoryManager memory(cfg.memory, regions);
    EmaState ema(cfg.ema_alpha, n_regions);

    NodeId first_id = 0;
    if (prior) {
        auto p = make_predictor(*prior);
        run_navigation(*prior, *p, labeler, memory, ema, np, 0);
        memory.end_session();
        first_id = static_cast<NodeId>(prior->size());
    }
    auto predictor = make_predictor(frames);
    const NavigationResult nav =
        run_navigation(frames, *predictor, labeler, memory, ema, np, first_id);

    /* a baseline run without a model has no predictions worth scoring */
    std::vector<std::vector<RegionId>> predicted;
    if (model || opts.oracle)
        predicted = nav.ranked;

    auto log_out = open_out(out_dir, "events.jsonl");
    write_event_log(log_out, nav.events, predicted);

    std::optional<RegionPairing> pairing;
    if (opts.pairing)
        pairing = load_pairing(*opts.pairing);
    const auto labels = topk_labels(frames, pairing, &labeler);

    EventLog log { nav.events, std::move(predicted) };
    RunReport report = score_run(cfg, log, frames, prior ? &*prior : nullptr, labels, pairing);

    if (opts.timing) {
        report.latency = latency_stats(nav.latency_us);
        auto lat = open_out(out_dir, "latency.csv");
        lat << "frame,map_size,wm_update_us\n";
        for (std::size_t i = 0; i < nav.latency_us.size(); ++i)
            lat << i << ',' << first_id + i + 1 << ',' << nav.latency_us[i] << '\n';
    }

    auto rep = open_out(out_dir, "report.json");
    rep << report_json(report, cfg.echo_json());
    return report;
}

void cmd_replay_sweep(const RunConfig& cfg, const ReplayOptions& opts, const std::string& sweep,
                      const fs::path& out_dir)
{
    const auto eq = sweep.find('=');
    if (eq == std::string::npos || eq == 0 || eq + 1 == sweep.size())
        throw ConfigError("--sweep expects key=v1,v2,...");
    const std::string key = sweep.substr(0, eq);

    std::vector<std::pair<std::string, RunConfig>> runs;
    std::stringstream values(sweep.substr(eq + 1));
    std::string value;
    while (std::getline(values, value, ',')) {
        RunConfig c = cfg;
        c.set(key, value);
        c.validate();
        runs.emplace_back(value, std::move(c));
    }

    /* each run owns its config, memory and predictor; nothing is shared */
    std::vector<std::future<RunReport>> jobs;
    for (const auto& [v, c] : runs) {
        const fs::path dir = out_dir / "sweep" / (key + "=" + v);
        jobs.push_back(std::async(std::launch::async,
                                  [&c, &opts, dir] { return cmd_replay(c, opts, dir); }));
    }
    for (auto& job : jobs)
        job.get();
}

RunReport cmd_eval(const RunConfig& cfg, const EvalOptions& opts, const fs::path& out_dir)
{
    cfg.gt.validate();
    const EventLog log = load_event_log(opts.log);
    const auto frames = load_sequence(opts.input);
    std::optional<std::vector<Frame>> prior;
    if (opts.prior)
        prior = load_sequence(*opts.prior);

    std::optional<RegionPairing> pairing;
    if (opts.pairing)
        pairing = load_pairing(*opts.pairing);
    std::optional<RegionLabeler> labeler;
    if (opts.clusters)
        labeler.emplace(load_clusters(*opts.clusters), cfg.label_radius);
    const auto labels = topk_labels(frames, pairing, labeler ? &*labeler : nullptr);

    const RunReport report =
        score_run(cfg, log, frames, prior ? &*prior : nullptr, labels, pairing);
    auto rep = open_out(out_dir, "report.json");
    rep << report_json(report, cfg.echo_json());
    return report;
}

void cmd_plot_data(const RunConfig& cfg, const PlotOptions& opts, const fs::path& out_dir)
{
    if (opts.clusters) {
        auto rows = load_clusters(*opts.clusters);
        std::sort(rows.begin(), rows.end(),
                  [](const ClusterDumpRow& a, const ClusterDumpRow& b) { return a.node < b.node; });
        auto out = open_out(out_dir, "cluster_map.csv");
        out << "node_id,x,y,region_id\n";
        for (const auto& r : rows)
            out << r.node << ',' << r.x << ',' << r.y << ',' << r.region << '\n';
    }

    if (opts.latency) {
        std::ifstream in(*opts.latency);
        if (!in)
            throw DataError("cannot open latency file " + opts.latency->string());
        std::string line;
        std::getline(in, line);
        /* bins of 100 map nodes */
        std::map<std::size_t, std::pair<std::size_t, double>> bins;
        std::size_t lineno = 1;
        while (std::getline(in, line)) {
            ++lineno;
            if (line.empty())
                continue;
            std::size_t frame = 0, size = 0;
            double us = 0.0;
            char c1 = 0, c2 = 0;
            std::istringstream row(line);
            if (!(row >> frame >> c1 >> size >> c2 >> us) || c1 != ',' || c2 != ',')
                throw DataError("latency file line " + std::to_string(lineno) + ": malformed");
            auto& bin = bins[size / 100 * 100];
            ++bin.first;
            bin.second += us;
        }
        auto out = open_out(out_dir, "latency_vs_map_size.csv");
        out << "map_size,frames,mean_us\n";
        for (const auto& [size, acc] : bins)
            out << size << ',' << acc.first << ',' << acc.second / static_cast<double>(acc.first)
                << '\n';
    }

    if (opts.log) {
        const EventLog log = load_event_log(*opts.log);
        auto out = open_out(out_dir, "closures.csv");
        out << "step,node_id,hypothesis_id,hypothesis_score\n";
        for (const auto& e : log.events)
            if (e.loop_closed && e.hypothesis)
                out << e.step << ',' << e.node << ',' << e.hypothesis->node << ','
                    << e.hypothesis->score << '\n';

        if (opts.input) {
            const auto frames = load_sequence(*opts.input);
            auto table = open_out(out_dir, "detections.csv");
            table << "kind,event,query_begin,query_end,ref_first,ref_last,detected\n";
            const auto emit = [&](const char* kind, const std::vector<GtEvent>& events,
                                  const std::vector<bool>& flags) {
                for (std::size_t k = 0; k < events.size(); ++k)
                    table << kind << ',' << k << ',' << events[k].query_begin << ','
                          << events[k].query_end << ',' << events[k].refs.front() << ','
                          << events[k].refs.back() << ',' << (flags[k] ? 1 : 0) << '\n';
            };
            std::optional<std::vector<Frame>> prior;
            if (opts.prior)
                prior = load_sequence(*opts.prior);
            const NodeId offset = prior ? static_cast<NodeId>(prior->size()) : 0;
            const auto intra = coalesce_events(gt_matches_intra(frames, cfg.gt));
            emit("loop", intra, detect_events(log.events, intra, frames, cfg.gt, offset, offset));
            if (prior) {
                const auto cross = coalesce_events(gt_matches(frames, *prior, cfg.gt));
                emit("reloc", cross, detect_events(log.events, cross, *prior, cfg.gt, offset, 0));
            }
        }
    }
}

} // namespace region_learner
