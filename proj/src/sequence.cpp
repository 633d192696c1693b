#include "region_learner/sequence.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <numbers>
#include <random>
#include <sstream>

#include <json.hpp>

#include "region_learner/error.hpp"

namespace region_learner {

namespace {

using nlohmann::json;

std::string at_line(std::size_t lineno, const std::string& what)
{
    return "line " + std::to_string(lineno) + ": " + what;
}

Pose2 parse_pose(const json& j, std::size_t lineno)
{
    if (!j.is_array())
        throw DataError(at_line(lineno, "pose must be an array"));
    std::vector<double> v;
    for (const auto& c : j) {
        if (!c.is_number())
            throw DataError(at_line(lineno, "pose component is not a number"));
        v.push_back(c.get<double>());
    }
    if (v.size() == 3)
        return { v[0], v[1], v[2] };
    if (v.size() == 7) {
        /* x, y, z, qx, qy, qz, qw: keep the heading about the vertical axis */
        const double qx = v[3], qy = v[4], qz = v[5], qw = v[6];
        const double yaw = std::atan2(2.0 * (qw * qz + qx * qy),
                                      1.0 - 2.0 * (qy * qy + qz * qz));
        return { v[0], v[1], yaw };
    }
    throw DataError(at_line(lineno, "pose must have 3 or 7 components"));
}

/* Polyline through waypoints sampled every `step` meters. A sample that
 * falls exactly on a waypoint takes the heading of the outgoing segment;
 * samples past the end continue straight ahead. */
std::vector<Pose2> sample_polyline(const std::vector<std::pair<double, double>>& pts,
                                   std::size_t n, double step)
{
    struct Segment
    {
        double x0, y0, dx, dy, len, start;
    };
    std::vector<Segment> segs;
    double total = 0.0;
    for (std::size_t i = 1; i < pts.size(); ++i) {
        const double dx = pts[i].first - pts[i - 1].first;
        const double dy = pts[i].second - pts[i - 1].second;
        const double len = std::hypot(dx, dy);
        if (len <= 0.0)
            continue;
        segs.push_back({ pts[i - 1].first, pts[i - 1].second, dx / len, dy / len, len, total });
        total += len;
    }

    std::vector<Pose2> poses;
    poses.reserve(n);
    std::size_t s = 0;
    for (std::size_t i = 0; i < n; ++i) {
        const double at = static_cast<double>(i) * step;
        while (s + 1 < segs.size() && at >= segs[s].start + segs[s].len)
            ++s;
        const Segment& g = segs[s];
        const double along = at - g.start;
        poses.emplace_back(g.x0 + g.dx * along, g.y0 + g.dy * along, std::atan2(g.dy, g.dx));
    }
    return poses;
}

std::vector<Pose2> grid_poses(const SyntheticSpec& spec)
{
    /* Blocks side by side along x. Each block is driven once around,
     * then `revisit_len` steps along its first street again (the planted
     * loop), and left southwards through new ground towards the next one. */
    const auto loops = static_cast<double>(std::max<std::size_t>(1, spec.n_loops));
    const auto revisit = static_cast<double>(spec.revisit_len);
    const double side = std::max(revisit + 2.0,
                                 std::floor(static_cast<double>(spec.n_frames) / (loops * 6.5)));
    const double depth = std::max(1.0, std::floor(side / 2.0));
    const double gap = std::max(1.0, std::floor(side / 2.0));
    const double u = spec.step;

    std::vector<std::pair<double, double>> pts;
    for (std::size_t k = 0; k < spec.n_loops; ++k) {
        const double x0 = static_cast<double>(k) * (side + gap);
        const double x1 = x0 + side + gap;
        pts.emplace_back(x0 * u, 0.0);
        pts.emplace_back((x0 + side) * u, 0.0);
        pts.emplace_back((x0 + side) * u, side * u);
        pts.emplace_back(x0 * u, side * u);
        pts.emplace_back(x0 * u, 0.0);
        pts.emplace_back((x0 + revisit) * u, 0.0);
        pts.emplace_back((x0 + revisit) * u, -depth * u);
        /* after the last block the exit street just keeps going east */
        pts.emplace_back(x1 * u, -depth * u);
        if (k + 1 < spec.n_loops)
            pts.emplace_back(x1 * u, 0.0);
    }
    return sample_polyline(pts, spec.n_frames, spec.step);
}

} // namespace

std::vector<Frame> parse_sequence(std::istream& is)
{
    std::vector<Frame> frames;
    std::map<std::string, double> last_t;
    std::size_t dim = 0;
    std::string line;
    std::size_t lineno = 0;

    while (std::getline(is, line)) {
        ++lineno;
        const auto first = line.find_first_not_of(" \t\r");
        if (first == std::string::npos || line[first] == '#')
            continue;

        json j;
        try {
            j = json::parse(line);
        } catch (const json::parse_error& e) {
            throw DataError(at_line(lineno, std::string("invalid JSON: ") + e.what()));
        }
        if (!j.is_object())
            throw DataError(at_line(lineno, "frame must be a JSON object"));

        Frame f;
        try {
            f.seq = j.value("seq", std::string {});
            if (!j.contains("id") || !j.contains("t") || !j.contains("pose"))
                throw DataError(at_line(lineno, "frame needs id, t and pose"));
            f.frame_id = j.at("id").get<std::int64_t>();
            f.t = j.at("t").get<double>();
            f.pose = parse_pose(j.at("pose"), lineno);
            if (j.contains("image"))
                f.image = j.at("image").get<std::string>();
            if (j.contains("region"))
                f.gt_region = j.at("region").get<RegionId>();
            if (j.contains("feature")) {
                const auto raw = j.at("feature").get<std::vector<double>>();
                f.feature = l2_normalized(raw);
            }
        } catch (const json::exception& e) {
            throw DataError(at_line(lineno, std::string("bad field: ") + e.what()));
        } catch (const DataError& e) {
            const std::string what = e.what();
            if (what.rfind("line ", 0) == 0)
                throw;
            throw DataError(at_line(lineno, what));
        }

        if (!std::isfinite(f.t) || !f.pose.finite())
            throw DataError(at_line(lineno, "non-finite time or pose"));
        if (f.feature.empty() && !f.image)
            throw DataError(at_line(lineno, "frame has neither feature nor image"));
        if (!f.feature.empty()) {
            if (dim == 0)
                dim = f.feature.size();
            else if (f.feature.size() != dim)
                throw DataError(at_line(lineno, "feature dimension " +
                                                    std::to_string(f.feature.size()) +
                                                    " differs from " + std::to_string(dim)));
        }

        const auto prev = last_t.find(f.seq);
        if (prev != last_t.end() && !(f.t > prev->second))
            throw DataError(at_line(lineno, "non-monotone t"));
        last_t[f.seq] = f.t;

        frames.push_back(std::move(f));
    }

    if (frames.empty())
        throw DataError("no frames");
    return frames;
}

std::vector<Frame> load_sequence(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in)
        throw DataError("cannot open sequence file " + path.string());
    try {
        return parse_sequence(in);
    } catch (const DataError& e) {
        throw DataError(path.string() + ": " + e.what());
    }
}

void write_sequence(std::ostream& os, std::span<const Frame> frames)
{
    for (const Frame& f : frames) {
        nlohmann::ordered_json j;
        j["seq"] = f.seq;
        j["id"] = f.frame_id;
        j["t"] = f.t;
        j["pose"] = { f.pose.x, f.pose.y, f.pose.yaw };
        if (!f.feature.empty()) {
            std::vector<float> feature(f.feature.begin(), f.feature.end());
            j["feature"] = feature;
        }
        if (f.image)
            j["image"] = *f.image;
        if (f.gt_region)
            j["region"] = *f.gt_region;
        os << j.dump() << '\n';
    }
}

void save_sequence(const std::filesystem::path& path, std::span<const Frame> frames)
{
    std::ofstream out(path);
    if (!out)
        throw DataError("cannot write sequence file " + path.string());
    write_sequence(out, frames);
}

Layout parse_layout(const std::string& name)
{
    if (name == "loop")
        return Layout::Loop;
    if (name == "figure-eight")
        return Layout::FigureEight;
    if (name == "grid")
        return Layout::Grid;
    throw ConfigError("unknown layout '" + name + "' (expected loop|figure-eight|grid)");
}

std::string to_string(Layout layout)
{
    switch (layout) {
    case Layout::Loop: return "loop";
    case Layout::FigureEight: return "figure-eight";
    case Layout::Grid: return "grid";
    }
    return "loop";
}

void SyntheticSpec::validate() const
{
    if (n_frames < 2)
        throw ConfigError("synthetic: n_frames must be >= 2");
    if (n_regions == 0)
        throw ConfigError("synthetic: n_regions must be positive");
    if (dim == 0)
        throw ConfigError("synthetic: dim must be positive");
    if (!(noise_sigma >= 0.0) || !(place_weight >= 0.0))
        throw ConfigError("synthetic: noise_sigma and place_weight must be >= 0");
    if (!(step > 0.0) || !(dt > 0.0) || !(place_scale > 0.0))
        throw ConfigError("synthetic: step, dt and place_scale must be > 0");
}

std::vector<Pose2> layout_poses(const SyntheticSpec& spec)
{
    spec.validate();
    const std::size_t n = spec.n_frames;
    const double arc = static_cast<double>(n - 1) * spec.step;
    std::vector<Pose2> poses;
    poses.reserve(n);

    switch (spec.layout) {
    case Layout::Loop: {
        const double radius = arc / (2.0 * std::numbers::pi);
        for (std::size_t i = 0; i < n; ++i) {
            const double th = 2.0 * std::numbers::pi * static_cast<double>(i) /
                              static_cast<double>(n - 1);
            poses.emplace_back(radius * std::sin(th), radius * (1.0 - std::cos(th)), th);
        }
        break;
    }
    case Layout::FigureEight: {
        const double radius = arc / (4.0 * std::numbers::pi);
        for (std::size_t i = 0; i < n; ++i) {
            const double u = 4.0 * std::numbers::pi * static_cast<double>(i) /
                             static_cast<double>(n - 1);
            if (u <= 2.0 * std::numbers::pi) {
                poses.emplace_back(radius * std::sin(u), radius * (1.0 - std::cos(u)), u);
            } else {
                const double v = u - 2.0 * std::numbers::pi;
                poses.emplace_back(radius * std::sin(v), -radius * (1.0 - std::cos(v)), -v);
            }
        }
        break;
    }
    case Layout::Grid:
        poses = grid_poses(spec);
        break;
    }
    return poses;
}

SyntheticWorld::SyntheticWorld(const SyntheticSpec& spec, std::span<const Pose2> layout) :
    spec_(spec)
{
    spec.validate();
    if (layout.empty())
        throw ConfigError("synthetic world needs a non-empty layout");

    std::mt19937_64 rng(spec.seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    std::uniform_real_distribution<double> uniform(0.0, 2.0 * std::numbers::pi);

    archetypes_.resize(spec.n_regions);
    for (auto& a : archetypes_) {
        a.resize(spec.dim);
        for (double& c : a)
            c = normal(rng);
        a = l2_normalized(a);
    }

    freq_.resize(spec.dim);
    phase_.resize(spec.dim);
    for (std::size_t k = 0; k < spec.dim; ++k) {
        for (double& w : freq_[k])
            w = normal(rng);
        phase_[k] = uniform(rng);
    }

    /* Region centers spread evenly along the layout trajectory */
    const std::size_t n = layout.size();
    for (std::size_t r = 0; r < spec.n_regions; ++r) {
        const std::size_t idx = std::min(n - 1, (2 * r + 1) * n / (2 * spec.n_regions));
        centers_.emplace_back(layout[idx].x, layout[idx].y);
    }
}

RegionId SyntheticWorld::region_at(const Pose2& pose) const
{
    RegionId best = 0;
    double best_d = std::numeric_limits<double>::infinity();
    for (std::size_t r = 0; r < centers_.size(); ++r) {
        const double d = std::hypot(pose.x - centers_[r].first, pose.y - centers_[r].second);
        if (d < best_d) {
            best_d = d;
            best = static_cast<RegionId>(r);
        }
    }
    return best;
}

std::vector<double> SyntheticWorld::render(const Pose2& pose, double noise_sigma,
                                           std::uint64_t noise_seed,
                                           std::size_t index) const
{
    const auto& archetype = archetypes_[region_at(pose)];
    if (noise_sigma == 0.0 && spec_.place_weight == 0.0)
        return archetype;

    std::vector<double> v = archetype;
    if (spec_.place_weight > 0.0) {
        const std::array<double, 4> u { pose.x / spec_.place_scale, pose.y / spec_.place_scale,
                                        spec_.heading_gain * std::cos(pose.yaw),
                                        spec_.heading_gain * std::sin(pose.yaw) };
        const double amp = spec_.place_weight * std::sqrt(2.0 / static_cast<double>(spec_.dim));
        for (std::size_t k = 0; k < spec_.dim; ++k) {
            double arg = phase_[k];
            for (std::size_t c = 0; c < 4; ++c)
                arg += freq_[k][c] * u[c];
            v[k] += amp * std::cos(arg);
        }
    }
    if (noise_sigma > 0.0) {
        std::seed_seq seq { static_cast<std::uint32_t>(noise_seed),
                            static_cast<std::uint32_t>(noise_seed >> 32),
                            static_cast<std::uint32_t>(index),
                            static_cast<std::uint32_t>(index >> 32) };
        std::mt19937_64 rng(seq);
        std::normal_distribution<double> normal(0.0, noise_sigma);
        for (double& c : v)
            c += normal(rng);
    }
    return l2_normalized(v);
}

std::vector<Frame> render_frames(const SyntheticSpec& spec, const SyntheticWorld& world,
                                 std::span<const Pose2> poses, std::uint64_t noise_seed,
                                 const std::string& name, double t0)
{
    std::vector<Frame> frames;
    frames.reserve(poses.size());
    for (std::size_t i = 0; i < poses.size(); ++i) {
        Frame f;
        f.seq = name;
        f.frame_id = static_cast<std::int64_t>(i);
        f.t = t0 + static_cast<double>(i) * spec.dt;
        f.pose = poses[i];
        f.feature = world.render(poses[i], spec.noise_sigma, noise_seed, i);
        f.gt_region = world.region_at(poses[i]);
        frames.push_back(std::move(f));
    }
    return frames;
}

std::vector<Frame> gen_synthetic(const SyntheticSpec& spec)
{
    const auto poses = layout_poses(spec);
    const SyntheticWorld world(spec, poses);
    return render_frames(spec, world, poses, spec.seed, spec.name);
}

namespace {

/* True when no frame outside [begin, end) comes within radius of the
 * stretch, i.e. the stretch is a place the session saw exactly once */
bool visited_once(std::span<const Frame> frames, std::size_t begin, std::size_t end,
                  double radius, std::size_t margin)
{
    for (std::size_t i = begin; i < end; ++i) {
        for (std::size_t j = 0; j < frames.size(); ++j) {
            if (j + margin >= begin && j < end + margin)
                continue;
            if (planar_distance(frames[i].pose, frames[j].pose) < radius)
                return false;
        }
    }
    return true;
}

} // namespace

std::vector<Frame> gen_revisit_session(const SyntheticSpec& spec,
                                       std::span<const Frame> first,
                                       std::size_t n_revisits, std::size_t detour_len,
                                       std::uint64_t noise_seed)
{
    spec.validate();
    const std::size_t len = std::max<std::size_t>(1, spec.revisit_len);
    if (first.size() < 4 * len || n_revisits == 0)
        throw ConfigError("revisit session: first session too short");

    double xmin = first.front().pose.x, ymin = first.front().pose.y;
    double xmax = xmin, ymax = ymin;
    for (const Frame& f : first) {
        xmin = std::min(xmin, f.pose.x);
        xmax = std::max(xmax, f.pose.x);
        ymin = std::min(ymin, f.pose.y);
        ymax = std::max(ymax, f.pose.y);
    }
    const double extent = std::max(xmax - xmin, ymax - ymin);
    const double detour_y = ymin - std::max(60.0, 0.25 * extent);
    const double clearance = 10.0 * spec.step;

    /* Targets: a stretch just before the end of the first session (kept
     * clear of the last frames so that ids stay apart), then evenly spread
     * earlier stretches, each slid forward until it was seen only once */
    std::vector<std::size_t> targets { first.size() - 4 * len };
    for (std::size_t k = 1; k < n_revisits; ++k) {
        std::size_t at = (first.size() - 4 * len) * k / n_revisits;
        while (at + 2 * len < first.size() &&
               !visited_once(first, at, at + len, clearance, 2 * len))
            ++at;
        targets.push_back(at);
    }

    std::vector<Pose2> poses;
    for (std::size_t k = 0; k < targets.size(); ++k) {
        if (k > 0) {
            const double x0 = xmin + static_cast<double>(k - 1) *
                                         (static_cast<double>(detour_len) + 20.0) * spec.step;
            for (std::size_t i = 0; i < detour_len; ++i)
                poses.emplace_back(x0 + static_cast<double>(i) * spec.step, detour_y, 0.0);
        }
        for (std::size_t i = 0; i < len; ++i)
            poses.push_back(first[targets[k] + i].pose);
    }

    const SyntheticWorld world(spec, layout_poses(spec));
    return render_frames(spec, world, poses, noise_seed, spec.name + "-2");
}

} // namespace region_learner
