#include "region_learner/report.hpp"

#include <fstream>

#include <json.hpp>

#include "region_learner/error.hpp"

namespace region_learner {

using nlohmann::json;
using ordered_json = nlohmann::ordered_json;

void write_event_log(std::ostream& os, std::span<const UpdateEvents> events,
                     std::span<const std::vector<RegionId>> predicted)
{
    if (!predicted.empty() && predicted.size() != events.size())
        throw InvariantError("event log: one prediction per event expected");
    for (std::size_t i = 0; i < events.size(); ++i) {
        const UpdateEvents& e = events[i];
        ordered_json j;
        j["step"] = e.step;
        j["node_id"] = e.node;
        if (e.hypothesis) {
            j["hypothesis_id"] = e.hypothesis->node;
            j["hypothesis_score"] = e.hypothesis->score;
        } else {
            j["hypothesis_id"] = nullptr;
            j["hypothesis_score"] = nullptr;
        }
        j["loop_closed"] = e.loop_closed;
        j["retrieved_u1"] = e.retrieved_u1;
        j["retrieved_u3"] = e.retrieved_u3;
        j["transferred"] = e.transferred;
        j["overflow"] = e.overflow;
        j["wm_size"] = e.wm_size;
        j["top_regions"] = e.top_regions;
        if (!predicted.empty())
            j["predicted"] = predicted[i];
        os << j.dump() << '\n';
    }
}

EventLog read_event_log(std::istream& is)
{
    EventLog out;
    bool with_predictions = true;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(is, line)) {
        ++lineno;
        if (line.empty() || line[0] == '#')
            continue;
        try {
            const json j = json::parse(line);
            UpdateEvents e;
            e.step = j.at("step").get<std::uint64_t>();
            e.node = j.at("node_id").get<NodeId>();
            if (!j.at("hypothesis_id").is_null())
                e.hypothesis = Hypothesis { j.at("hypothesis_id").get<NodeId>(),
                                            j.at("hypothesis_score").get<double>() };
            e.loop_closed = j.at("loop_closed").get<bool>();
            e.retrieved_u1 = j.at("retrieved_u1").get<std::vector<NodeId>>();
            e.retrieved_u3 = j.at("retrieved_u3").get<std::vector<NodeId>>();
            e.transferred = j.at("transferred").get<std::vector<NodeId>>();
            e.overflow = j.value("overflow", false);
            e.wm_size = j.at("wm_size").get<std::size_t>();
            e.top_regions = j.value("top_regions", std::vector<RegionId> {});
            if (j.contains("predicted"))
                out.predicted.push_back(j.at("predicted").get<std::vector<RegionId>>());
            else
                with_predictions = false;
            out.events.push_back(std::move(e));
        } catch (const json::exception& ex) {
            throw DataError("event log line " + std::to_string(lineno) + ": " + ex.what());
        }
    }
    if (!with_predictions)
        out.predicted.clear();
    return out;
}

EventLog load_event_log(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in)
        throw DataError("cannot open event log " + path.string());
    return read_event_log(in);
}

std::string report_json(const RunReport& r, const std::string& config_echo_json)
{
    ordered_json j;
    j["top1"] = r.top1;
    j["top3"] = r.top3;
    j["topk_evaluated"] = r.topk_evaluated;
    j["topk_excluded"] = r.topk_excluded;
    j["loops_total"] = r.loops_total;
    j["loops_detected"] = r.loops_detected;
    j["reloc_total"] = r.reloc_total;
    j["reloc_performed"] = r.reloc_performed;
    if (r.latency) {
        const LatencyStats& l = *r.latency;
        j["latency"] = { { "samples", l.samples },     { "mean_us", l.mean_us },
                         { "p50_us", l.p50_us },       { "p95_us", l.p95_us },
                         { "max_us", l.max_us },       { "tail_mean_us", l.tail_mean_us } };
    }
    j["config"] = config_echo_json.empty() ? ordered_json::object()
                                           : ordered_json::parse(config_echo_json);
    return j.dump(2) + "\n";
}

} // namespace region_learner
