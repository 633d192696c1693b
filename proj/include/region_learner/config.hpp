#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>

#include "region_learner/clustering.hpp"
#include "region_learner/evaluation.hpp"
#include "region_learner/memory.hpp"
#include "region_learner/pipeline.hpp"
#include "region_learner/predictor.hpp"
#include "region_learner/sequence.hpp"

namespace region_learner {

/*
 * Every tunable of a run. Files are key = value lines; a [section] header
 * prefixes the keys below it ("[memory]" then "n_wm = 50" sets memory.n_wm).
 * '#' starts a comment.
 */
struct RunConfig
{
    ClusteringParams clustering;
    LinkParams links;
    TrainConfig train;
    std::size_t hidden = 64;
    MemoryParams memory;
    GtThresholds gt;
    double ema_alpha = 0.5;
    double label_radius = 3.0;      /* meters; frames farther from the map are unlabeled */
    SyntheticSpec synthetic;
    std::uint64_t seed = 0;

    /* Throws ConfigError for unknown keys or unparsable values */
    void set(const std::string& key, const std::string& value);
    void parse(std::istream& is, const std::string& origin = "config");
    void load(const std::filesystem::path& path);

    /* Cross-field checks, including k1 + k2 <= N */
    void validate() const;

    /* The effective configuration as a JSON object */
    std::string echo_json() const;
};

} // namespace region_learner
