#include "region_learner/config.hpp"

#include <charconv>
#include <fstream>
#include <functional>
#include <map>

#include <json.hpp>

#include "region_learner/error.hpp"

namespace region_learner {

namespace {

std::string trim(const std::string& s)
{
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos)
        return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

std::string unquote(const std::string& s)
{
    if (s.size() >= 2 && (s.front() == '"' || s.front() == '\'') && s.back() == s.front())
        return s.substr(1, s.size() - 2);
    return s;
}

template <typename T>
T parse_number(const std::string& key, const std::string& value)
{
    T out {};
    const char* first = value.data();
    const char* last = value.data() + value.size();
    const auto [ptr, ec] = std::from_chars(first, last, out);
    if (ec != std::errc {} || ptr != last)
        throw ConfigError("config key " + key + ": invalid value '" + value + "'");
    return out;
}

using Setter = std::function<void(const std::string& key, const std::string& value)>;

template <typename T>
Setter bind(T& field)
{
    return [&field](const std::string& key, const std::string& value) {
        field = parse_number<T>(key, value);
    };
}

std::map<std::string, Setter> setters(RunConfig& c)
{
    std::map<std::string, Setter> m;
    m["seed"] = bind(c.seed);

    m["clustering.s_prime"] = bind(c.clustering.s_prime);
    m["clustering.s_max"] = bind(c.clustering.s_max);
    m["clustering.n_des"] = bind(c.clustering.n_des);
    m["clustering.r_max"] = bind(c.clustering.r_max);
    m["clustering.shape_factor"] = bind(c.clustering.shape_factor);

    m["links.distance"] = bind(c.links.distance);
    m["links.angle"] = bind(c.links.angle);
    m["links.min_gap"] = bind(c.links.min_gap);

    m["train.gamma"] = bind(c.train.gamma);
    m["train.step_size"] = bind(c.train.step_size);
    m["train.epochs"] = bind(c.train.epochs);
    m["train.batch"] = bind(c.train.batch);
    m["train.clamp_eps"] = bind(c.train.clamp_eps);
    m["train.hidden"] = bind(c.hidden);

    m["memory.n_wm"] = bind(c.memory.n_wm);
    m["memory.m_stm"] = bind(c.memory.m_stm);
    m["memory.k1"] = bind(c.memory.k1);
    m["memory.k2_frac"] = bind(c.memory.k2_frac);
    m["memory.tau_loop"] = bind(c.memory.tau_loop);
    m["memory.neighbor_radius"] = bind(c.memory.neighbor_radius);
    m["memory.grid_cell"] = bind(c.memory.grid_cell);
    m["memory.policy"] = [&c](const std::string&, const std::string& v) {
        c.memory.policy = parse_policy(v);
    };

    m["gt.d_max"] = bind(c.gt.d_max);
    m["gt.theta_max"] = bind(c.gt.theta_max);
    m["gt.window"] = bind(c.gt.window);

    m["ema.alpha"] = bind(c.ema_alpha);
    m["navigation.label_radius"] = bind(c.label_radius);

    m["synthetic.layout"] = [&c](const std::string&, const std::string& v) {
        c.synthetic.layout = parse_layout(v);
    };
    m["synthetic.n_frames"] = bind(c.synthetic.n_frames);
    m["synthetic.n_regions"] = bind(c.synthetic.n_regions);
    m["synthetic.noise_sigma"] = bind(c.synthetic.noise_sigma);
    m["synthetic.dim"] = bind(c.synthetic.dim);
    m["synthetic.step"] = bind(c.synthetic.step);
    m["synthetic.dt"] = bind(c.synthetic.dt);
    m["synthetic.place_weight"] = bind(c.synthetic.place_weight);
    m["synthetic.place_scale"] = bind(c.synthetic.place_scale);
    m["synthetic.heading_gain"] = bind(c.synthetic.heading_gain);
    m["synthetic.n_loops"] = bind(c.synthetic.n_loops);
    m["synthetic.revisit_len"] = bind(c.synthetic.revisit_len);
    m["synthetic.name"] = [&c](const std::string&, const std::string& v) {
        c.synthetic.name = v;
    };
    return m;
}

} // namespace

void RunConfig::set(const std::string& key, const std::string& value)
{
    auto table = setters(*this);
    const auto it = table.find(key);
    if (it == table.end())
        throw ConfigError("unknown config key '" + key + "'");
    it->second(key, unquote(trim(value)));
}

void RunConfig::parse(std::istream& is, const std::string& origin)
{
    std::string section;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(is, line)) {
        ++lineno;
        bool quoted = false;
        for (std::size_t i = 0; i < line.size(); ++i) {
            if (line[i] == '"')
                quoted = !quoted;
            else if (line[i] == '#' && !quoted) {
                line.resize(i);
                break;
            }
        }
        line = trim(line);
        if (line.empty())
            continue;
        if (line.front() == '[') {
            if (line.back() != ']')
                throw ConfigError(origin + ":" + std::to_string(lineno) + ": bad section header");
            section = trim(line.substr(1, line.size() - 2));
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError(origin + ":" + std::to_string(lineno) + ": expected key = value");
        const std::string key = trim(line.substr(0, eq));
        try {
            set(section.empty() ? key : section + "." + key, line.substr(eq + 1));
        } catch (const ConfigError& e) {
            throw ConfigError(origin + ":" + std::to_string(lineno) + ": " + e.what());
        }
    }
}

void RunConfig::load(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in)
        throw ConfigError("cannot open config file " + path.string());
    parse(in, path.string());
}

void RunConfig::validate() const
{
    clustering.validate();
    train.validate();
    memory.validate();
    gt.validate();
    synthetic.validate();
    if (hidden == 0)
        throw ConfigError("train: hidden must be positive");
    if (!(ema_alpha > 0.0 && ema_alpha <= 1.0))
        throw ConfigError("ema: alpha must be in (0, 1]");
    if (!(label_radius >= 0.0))
        throw ConfigError("navigation: label_radius must be >= 0");
    if (!(links.distance >= 0.0) || !(links.angle > 0.0))
        throw ConfigError("links: distance must be >= 0 and angle > 0");
}

std::string RunConfig::echo_json() const
{
    nlohmann::ordered_json j;
    j["seed"] = seed;
    j["clustering"] = { { "s_prime", clustering.s_prime },
                        { "s_max", clustering.s_max },
                        { "n_des", clustering.n_des },
                        { "r_max", clustering.r_max },
                        { "shape_factor", clustering.shape_factor } };
    j["links"] = { { "distance", links.distance },
                   { "angle", links.angle },
                   { "min_gap", links.min_gap } };
    j["train"] = { { "gamma", train.gamma },         { "step_size", train.step_size },
                   { "epochs", train.epochs },       { "batch", train.batch },
                   { "clamp_eps", train.clamp_eps }, { "hidden", hidden } };
    j["memory"] = { { "n_wm", memory.n_wm },
                    { "m_stm", memory.m_stm },
                    { "k1", memory.k1 },
                    { "k2_frac", memory.k2_frac },
                    { "k2", memory.k2() },
                    { "k3", memory.k3() },
                    { "tau_loop", memory.tau_loop },
                    { "policy", to_string(memory.policy) },
                    { "neighbor_radius", memory.neighbor_radius },
                    { "grid_cell", memory.grid_cell } };
    j["gt"] = { { "d_max", gt.d_max }, { "theta_max", gt.theta_max }, { "window", gt.window } };
    j["ema"] = { { "alpha", ema_alpha } };
    j["navigation"] = { { "label_radius", label_radius } };
    j["synthetic"] = { { "layout", to_string(synthetic.layout) },
                       { "n_frames", synthetic.n_frames },
                       { "n_regions", synthetic.n_regions },
                       { "noise_sigma", synthetic.noise_sigma },
                       { "dim", synthetic.dim },
                       { "step", synthetic.step },
                       { "dt", synthetic.dt },
                       { "place_weight", synthetic.place_weight },
                       { "place_scale", synthetic.place_scale },
                       { "heading_gain", synthetic.heading_gain },
                       { "n_loops", synthetic.n_loops },
                       { "revisit_len", synthetic.revisit_len },
                       { "name", synthetic.name } };
    return j.dump();
}

} // namespace region_learner
