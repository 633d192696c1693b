#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "region_learner/map_graph.hpp"

namespace region_learner {

struct Frame
{
    std::string seq;
    std::int64_t frame_id = 0;
    double t = 0.0;
    Pose2 pose;
    std::vector<double> feature;          /* unit norm; empty for image-only frames */
    std::optional<std::string> image;
    std::optional<RegionId> gt_region;    /* generator ground truth, when known */
};

/*
 * Sequence files are JSON lines, one frame per line:
 *   {"seq": str, "id": int, "t": float, "pose": [x, y, yaw], "feature": [...]}
 * "image" may replace "feature"; "region" optionally carries a ground-truth
 * region label. A 7-element pose [x, y, z, qx, qy, qz, qw] is projected to
 * the plane. Lines starting with '#' are comments.
 */
std::vector<Frame> parse_sequence(std::istream& is);
std::vector<Frame> load_sequence(const std::filesystem::path& path);
void write_sequence(std::ostream& os, std::span<const Frame> frames);
void save_sequence(const std::filesystem::path& path, std::span<const Frame> frames);

enum class Layout { Loop, FigureEight, Grid };

Layout parse_layout(const std::string& name);
std::string to_string(Layout layout);

struct SyntheticSpec
{
    Layout layout = Layout::Loop;
    std::size_t n_frames = 100;
    std::size_t n_regions = 8;
    double noise_sigma = 0.0;
    std::uint64_t seed = 0;
    std::size_t dim = 32;
    double step = 1.0;            /* meters between consecutive frames */
    double dt = 1.0;              /* seconds between consecutive frames */

    /* Weight of the pose-dependent appearance code mixed into each
     * feature; 0 leaves the pure region archetype */
    double place_weight = 0.0;
    double place_scale = 1.5;     /* meters; appearance correlation length */
    double heading_gain = 2.0;    /* appearance sensitivity to yaw */

    std::size_t n_loops = 5;      /* grid: planted large loops */
    std::size_t revisit_len = 6;  /* grid: frames driven along an old street */

    std::string name = "synthetic";

    void validate() const;
};

/*
 * Appearance model shared by all sessions generated over one layout:
 * region archetypes, region centers (Voronoi partition of the plane) and
 * a random-Fourier code of the pose.
 */
class SyntheticWorld
{
public:
    SyntheticWorld(const SyntheticSpec& spec, std::span<const Pose2> layout_poses);

    RegionId region_at(const Pose2& pose) const;
    /* Archetype of the region at pose, plus place code and noise, normalized */
    std::vector<double> render(const Pose2& pose, double noise_sigma,
                               std::uint64_t noise_seed, std::size_t index) const;

    const std::vector<std::vector<double>>& archetypes() const { return archetypes_; }
    const std::vector<std::pair<double, double>>& centers() const { return centers_; }

private:
    SyntheticSpec spec_;
    std::vector<std::vector<double>> archetypes_;
    std::vector<std::pair<double, double>> centers_;
    std::vector<std::array<double, 4>> freq_;
    std::vector<double> phase_;
};

/* Trajectory of the layout, n_frames poses spaced by spec.step */
std::vector<Pose2> layout_poses(const SyntheticSpec& spec);

/* Deterministic synthetic sequence with ground-truth region labels */
std::vector<Frame> gen_synthetic(const SyntheticSpec& spec);

/* Frames for arbitrary poses rendered in the world of spec */
std::vector<Frame> render_frames(const SyntheticSpec& spec, const SyntheticWorld& world,
                                 std::span<const Pose2> poses, std::uint64_t noise_seed,
                                 const std::string& name, double t0 = 0.0);

/*
 * Second session over the layout of `first`: n_revisits short drives along
 * old streets (revisit_len frames each, same heading), separated by
 * detours through unmapped ground. The first revisit drives a stretch
 * ending 3 * revisit_len frames before the end of the first session, the
 * others are spread over its earlier part.
 */
std::vector<Frame> gen_revisit_session(const SyntheticSpec& spec,
                                       std::span<const Frame> first,
                                       std::size_t n_revisits,
                                       std::size_t detour_len,
                                       std::uint64_t noise_seed);

} // namespace region_learner
