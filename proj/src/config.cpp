#include "bonsai/config.hpp"

#include <cmath>
#include <functional>
#include <set>
#include <sstream>
#include <variant>
#include <vector>

#include "bonsai/error.hpp"
#include "bonsai/io.hpp"

namespace bonsai {

namespace {

using List = std::vector<double>;
using Value = std::variant<double, bool, std::string, List>;

struct Key {
    const char* section;  // "" for top level
    const char* name;
    const char* help;
    std::function<void(PipelineConfig&, const Value&, const std::string&)> set;
    std::function<std::string(const PipelineConfig&)> show;
};

double as_number(const Value& v, const std::string& key) {
    if (const double* d = std::get_if<double>(&v)) {
        return *d;
    }
    throw ParseError("config key '" + key + "' expects a number");
}

std::uint64_t as_count(const Value& v, const std::string& key) {
    const double d = as_number(v, key);
    if (d < 0.0 || d != std::floor(d) || d > 9.007199254740992e15) {
        throw ParseError("config key '" + key + "' expects a non-negative integer");
    }
    return static_cast<std::uint64_t>(d);
}

bool as_bool(const Value& v, const std::string& key) {
    if (const bool* b = std::get_if<bool>(&v)) {
        return *b;
    }
    throw ParseError("config key '" + key + "' expects true or false");
}

std::string as_string(const Value& v, const std::string& key) {
    if (const std::string* s = std::get_if<std::string>(&v)) {
        return *s;
    }
    throw ParseError("config key '" + key + "' expects a quoted string");
}

List as_list(const Value& v, const std::string& key, std::size_t n) {
    const List* l = std::get_if<List>(&v);
    if (l == nullptr || l->size() != n) {
        throw ParseError("config key '" + key + "' expects a list of " + std::to_string(n) + " numbers");
    }
    return *l;
}

std::string show_list(std::initializer_list<double> v) {
    std::string out = "[";
    bool first = true;
    for (const double d : v) {
        out += (first ? "" : ", ") + format_number(d);
        first = false;
    }
    return out + "]";
}

std::string show_theta(const Theta& t) { return show_list({t[0], t[1], t[2], t[3]}); }

Theta theta_from(const Value& v, const std::string& key) {
    const List l = as_list(v, key, 4);
    return {l[0], l[1], l[2], l[3]};
}

Rgb rgb_from(const Value& v, const std::string& key) {
    const List l = as_list(v, key, 3);
    return {l[0], l[1], l[2]};
}

#define NUM(field) [](PipelineConfig& c, const Value& v, const std::string& k) { c.field = as_number(v, k); }, \
                   [](const PipelineConfig& c) { return format_number(c.field); }
#define COUNT(field) [](PipelineConfig& c, const Value& v, const std::string& k) { c.field = as_count(v, k); }, \
                     [](const PipelineConfig& c) { return std::to_string(c.field); }

const std::vector<Key>& registry() {
    static const std::vector<Key> keys = {
        {"", "seed", "master seed for attractors, sampling, cameras", COUNT(growth.seed)},
        {"", "output_dir", "directory for pipeline outputs",
         [](PipelineConfig& c, const Value& v, const std::string& k) { c.output_dir = as_string(v, k); },
         [](const PipelineConfig& c) { return "\"" + c.output_dir + "\""; }},

        {"growth", "radius", "crown domain radius R (> 0)", NUM(growth.radius)},
        {"growth", "attractors", "number of attraction points", COUNT(growth.n_attractors)},
        {"growth", "step", "branch step length (> 0)", NUM(growth.step)},
        {"growth", "kill_distance", "attractor removal radius; step < kill_distance < influence_distance",
         NUM(growth.kill_distance)},
        {"growth", "influence_distance", "attractor pull radius", NUM(growth.influence_distance)},
        {"growth", "omega", "theta[0]: base attractor weight (> 0)", NUM(growth.weights.omega)},
        {"growth", "falloff", "theta[1]: exponential distance falloff of the weight", NUM(growth.weights.falloff)},
        {"growth", "tropism", "theta[2]: extra weight for attractors above the node", NUM(growth.weights.tropism)},
        {"growth", "reserved", "theta[3]: carried through fitting, unused by growth", NUM(growth.weights.reserved)},
        {"growth", "max_iterations", "hard cap on growth iterations", COUNT(growth.max_iterations)},
        {"growth", "stall_limit", "stop after this many iterations without new nodes or kills",
         COUNT(growth.stall_limit)},
        {"growth", "assignment", "\"nearest\" or \"all_in_range\" (the latter grows very fast; lower max_iterations)",
         [](PipelineConfig& c, const Value& v, const std::string& k) {
             try {
                 c.growth.assignment = assignment_mode_from_string(as_string(v, k));
             } catch (const ValidationError& e) {
                 throw ParseError(std::string("config key '") + k + "': " + e.what());
             }
         },
         [](const PipelineConfig& c) { return "\"" + std::string(to_string(c.growth.assignment)) + "\""; }},
        {"growth", "uniform_volume", "volume-uniform attractors instead of center-biased",
         [](PipelineConfig& c, const Value& v, const std::string& k) { c.growth.uniform_volume = as_bool(v, k); },
         [](const PipelineConfig& c) { return std::string(c.growth.uniform_volume ? "true" : "false"); }},

        {"sizing", "extremity_size", "size r_e of childless branches (> 0)", NUM(sizing.extremity_size)},
        {"sizing", "inverted_growth", "exponent I_g aggregating child sizes (> 0)", NUM(sizing.inverted_growth)},
        {"sizing", "ring_segments", "vertices per tube ring S (>= 3)", COUNT(sizing.ring_segments)},

        {"sample", "density", "surface samples per unit area (> 0)", NUM(density)},

        {"gaussians", "opacity", "initial splat opacity in (0, 1]", NUM(opacity)},
        {"gaussians", "trunk_color", "RGB of trunk splats",
         [](PipelineConfig& c, const Value& v, const std::string& k) { c.palette.trunk = rgb_from(v, k); },
         [](const PipelineConfig& c) { return show_list({c.palette.trunk.r, c.palette.trunk.g, c.palette.trunk.b}); }},
        {"gaussians", "extremity_color", "RGB of extremity splats",
         [](PipelineConfig& c, const Value& v, const std::string& k) { c.palette.extremity = rgb_from(v, k); },
         [](const PipelineConfig& c) {
             return show_list({c.palette.extremity.r, c.palette.extremity.g, c.palette.extremity.b});
         }},

        {"render", "views", "number of rig cameras (>= 1)", COUNT(rig.views)},
        {"render", "distance_min", "closest camera distance, in scene radii", NUM(rig.distance_lo)},
        {"render", "distance_max", "farthest camera distance, in scene radii", NUM(rig.distance_hi)},
        {"render", "fov", "vertical field of view in degrees", NUM(rig.vertical_fov)},
        {"render", "width", "image width in pixels", COUNT(rig.width)},
        {"render", "height", "image height in pixels", COUNT(rig.height)},

        {"fit", "theta_lo", "lower bounds for (omega, falloff, tropism, reserved)",
         [](PipelineConfig& c, const Value& v, const std::string& k) { c.fit.theta_lo = theta_from(v, k); },
         [](const PipelineConfig& c) { return show_theta(c.fit.theta_lo); }},
        {"fit", "theta_hi", "upper bounds for (omega, falloff, tropism, reserved)",
         [](PipelineConfig& c, const Value& v, const std::string& k) { c.fit.theta_hi = theta_from(v, k); },
         [](const PipelineConfig& c) { return show_theta(c.fit.theta_hi); }},
        {"fit", "step_sigma", "initial proposal standard deviation", NUM(fit.step_sigma)},
        {"fit", "budget", "loss evaluations (>= 1)", COUNT(fit.budget)},
        {"fit", "seed", "seed of the proposal noise", COUNT(fit.seed)},
        {"fit", "resolution", "silhouette render size in pixels", COUNT(fit.resolution)},
    };
    return keys;
}

#undef NUM
#undef COUNT

std::string trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos) {
        return {};
    }
    const auto e = s.find_last_not_of(" \t\r");
    return std::string(s.substr(b, e - b + 1));
}

double parse_number(const std::string& s, std::size_t line) {
    char* end = nullptr;
    const double d = std::strtod(s.c_str(), &end);
    if (s.empty() || end != s.c_str() + s.size() || !std::isfinite(d)) {
        throw ParseError("line " + std::to_string(line) + ": invalid value '" + s + "'");
    }
    return d;
}

Value parse_value(const std::string& raw, std::size_t line) {
    if (raw.empty()) {
        throw ParseError("line " + std::to_string(line) + ": missing value");
    }
    if (raw == "true" || raw == "false") {
        return raw == "true";
    }
    if (raw.front() == '"') {
        if (raw.size() < 2 || raw.back() != '"' || raw.find('"', 1) != raw.size() - 1) {
            throw ParseError("line " + std::to_string(line) + ": unterminated string");
        }
        return raw.substr(1, raw.size() - 2);
    }
    if (raw.front() == '[') {
        if (raw.back() != ']') {
            throw ParseError("line " + std::to_string(line) + ": unterminated list");
        }
        List out;
        const std::string inner = trim(std::string_view(raw).substr(1, raw.size() - 2));
        if (!inner.empty()) {
            std::stringstream ss(inner);
            std::string item;
            while (std::getline(ss, item, ',')) {
                out.push_back(parse_number(trim(item), line));
            }
        }
        return out;
    }
    return parse_number(raw, line);
}

// Drops a trailing comment that is not inside a quoted string.
std::string_view strip_comment(std::string_view line) {
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        if (line[i] == '"') {
            quoted = !quoted;
        } else if (line[i] == '#' && !quoted) {
            return line.substr(0, i);
        }
    }
    return line;
}

}  // namespace

void PipelineConfig::validate() const {
    validate_params(growth);
    validate_sizing(sizing);
    if (!(density > 0.0)) {
        throw NonPositive("sample density must be positive");
    }
    if (!(opacity > 0.0 && opacity <= 1.0)) {
        throw ValidationError("initial opacity must lie in (0, 1]");
    }
    for (const Rgb& c : {palette.trunk, palette.extremity}) {
        for (const double ch : {c.r, c.g, c.b}) {
            if (!(ch >= 0.0 && ch <= 1.0)) {
                throw ValidationError("palette colors must lie in [0, 1]");
            }
        }
    }
    if (rig.views < 1) {
        throw NonPositive("render views must be at least 1");
    }
    if (!(rig.distance_lo > 0.0)) {
        throw NonPositive("render distance_min must be positive");
    }
    if (!(rig.distance_lo <= rig.distance_hi)) {
        throw OrderingViolation("render distance_min must not exceed distance_max");
    }
    if (!(rig.vertical_fov > 0.0 && rig.vertical_fov < 180.0)) {
        throw ValidationError("render fov must lie in (0, 180) degrees");
    }
    if (rig.width < 1 || rig.height < 1) {
        throw NonPositive("render width and height must be at least 1 pixel");
    }
    if (fit.resolution < 1) {
        throw NonPositive("fit resolution must be at least 1 pixel");
    }
    fit_config().validate();
}

FitConfig PipelineConfig::fit_config() const {
    FitConfig f;
    f.theta_init = growth.weights.to_array();
    f.theta_lo = fit.theta_lo;
    f.theta_hi = fit.theta_hi;
    f.step_sigma = fit.step_sigma;
    f.budget = fit.budget;
    f.seed = fit.seed;
    f.problem.base = growth;
    f.problem.sizing = sizing;
    f.problem.rig = rig;
    f.problem.rig.views = 4;
    f.problem.rig.width = fit.resolution;
    f.problem.rig.height = fit.resolution;
    return f;
}

PipelineConfig parse_config(std::string_view text) {
    PipelineConfig cfg;
    std::string section;
    std::set<std::string> seen;
    std::size_t line_no = 0;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        const std::size_t nl = text.find('\n', pos);
        const std::size_t end = nl == std::string_view::npos ? text.size() : nl;
        const std::string line = trim(strip_comment(text.substr(pos, end - pos)));
        pos = end + 1;
        ++line_no;
        if (line.empty()) {
            continue;
        }
        if (line.front() == '[') {
            if (line.back() != ']') {
                throw ParseError("line " + std::to_string(line_no) + ": malformed section header");
            }
            section = trim(std::string_view(line).substr(1, line.size() - 2));
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            throw ParseError("line " + std::to_string(line_no) + ": expected key = value");
        }
        const std::string name = trim(std::string_view(line).substr(0, eq));
        const std::string qualified = section.empty() ? name : section + "." + name;
        const Key* key = nullptr;
        for (const Key& k : registry()) {
            if (section == k.section && name == k.name) {
                key = &k;
                break;
            }
        }
        if (key == nullptr) {
            throw ParseError("line " + std::to_string(line_no) + ": unknown config key '" + qualified + "'");
        }
        if (!seen.insert(qualified).second) {
            throw ParseError("line " + std::to_string(line_no) + ": duplicate config key '" + qualified + "'");
        }
        key->set(cfg, parse_value(trim(std::string_view(line).substr(eq + 1)), line_no), qualified);
    }
    cfg.validate();
    return cfg;
}

PipelineConfig load_config(const std::filesystem::path& path) { return parse_config(io::read_file(path)); }

std::string config_reference() {
    const PipelineConfig defaults;
    std::ostringstream out;
    out << "Config file keys (key = value, grouped by [section]; default in parentheses):\n";
    std::string current = "-";
    for (const Key& k : registry()) {
        if (current != k.section) {
            current = k.section;
            out << (current.empty() ? "  (top level)" : "  [" + current + "]") << '\n';
        }
        out << "    " << k.name << " (" << k.show(defaults) << "): " << k.help << '\n';
    }
    return out.str();
}

}  // namespace bonsai
