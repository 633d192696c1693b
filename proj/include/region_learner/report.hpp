#pragma once

#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "region_learner/evaluation.hpp"
#include "region_learner/memory.hpp"

namespace region_learner {

/*
 * Event log: JSON lines, one memory update per line, fields
 * step, node_id, hypothesis_id, hypothesis_score, loop_closed,
 * retrieved_u1, retrieved_u3, transferred, overflow, wm_size, top_regions
 * (EMA) and predicted (top-3 of the raw prediction, when recorded).
 */
struct EventLog
{
    std::vector<UpdateEvents> events;
    std::vector<std::vector<RegionId>> predicted;   /* empty or one per event */
};

void write_event_log(std::ostream& os, std::span<const UpdateEvents> events,
                     std::span<const std::vector<RegionId>> predicted = {});
EventLog read_event_log(std::istream& is);
EventLog load_event_log(const std::filesystem::path& path);

/* Report JSON; `config` is echoed verbatim under "config" */
std::string report_json(const RunReport& report, const std::string& config_echo_json);

} // namespace region_learner
