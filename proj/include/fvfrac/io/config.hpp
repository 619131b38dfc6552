#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "fvfrac/assembly.hpp"
#include "fvfrac/discretization/dofs.hpp"
#include "fvfrac/errors.hpp"
#include "fvfrac/harness/cases.hpp"
#include "fvfrac/io/text.hpp"
#include "fvfrac/mesh/raw_mesh.hpp"

namespace fvfrac {

struct BoundarySpec {
    BoundaryKind kind = BoundaryKind::Dirichlet;
    Vec2 value = Vec2::Zero();
};

struct RunConfig {
    std::string command;
    std::string mesh_path;
    std::string output_dir = ".";
    std::string prefix;
    bool write_vtk = true;
    bool case_set = false;
    CaseSpec harness = default_case_spec(CaseId::Case1);
    int face_pairs = 16;
    std::uint64_t seed = 0;
    std::map<int, BoundarySpec> boundary;
    FractureConditions fractures;
    Vec2 body_force = Vec2::Zero();
    double condition_warning = 1e12;

    BoundaryConditions boundary_conditions() const
    {
        BoundaryConditions out;
        for (const auto& [tag, b] : boundary)
            out[tag] = b.kind == BoundaryKind::Dirichlet ? BoundaryCondition::dirichlet(b.value)
                                                         : BoundaryCondition::neumann(b.value);
        return out;
    }
};

namespace detail {

struct ConfigValue {
    std::string value;
    std::string origin;  // "line N" or "override 'k=v'"
};

inline ConfigError config_error(const ConfigValue& v, const std::string& what)
{
    return ConfigError(v.origin + ": " + what);
}

inline double config_double(const ConfigValue& v)
{
    const auto tok = trim(v.value);
    double x = 0.0;
    auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), x);
    if (ec != std::errc() || ptr != tok.data() + tok.size())
        throw config_error(v, "expected a number, got '" + v.value + "'");
    return x;
}

inline long long config_int(const ConfigValue& v)
{
    const auto tok = trim(v.value);
    long long x = 0;
    auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), x);
    if (ec != std::errc() || ptr != tok.data() + tok.size())
        throw config_error(v, "expected an integer, got '" + v.value + "'");
    return x;
}

inline bool config_bool(const ConfigValue& v)
{
    const auto tok = trim(v.value);
    if (tok == "true" || tok == "1" || tok == "on" || tok == "yes") return true;
    if (tok == "false" || tok == "0" || tok == "off" || tok == "no") return false;
    throw config_error(v, "expected a boolean, got '" + v.value + "'");
}

inline std::vector<double> config_numbers(const ConfigValue& v, std::size_t count)
{
    std::vector<double> out;
    for (auto tok : split_ws(v.value)) out.push_back(config_double({std::string(tok), v.origin}));
    if (out.size() != count)
        throw config_error(v, "expected " + std::to_string(count) + " numbers, got '" + v.value + "'");
    return out;
}

inline std::vector<int> config_int_list(const ConfigValue& v)
{
    std::vector<int> out;
    std::string s = v.value;
    for (char& c : s)
        if (c == ',') c = ' ';
    for (auto tok : split_ws(s)) out.push_back(static_cast<int>(config_int({std::string(tok), v.origin})));
    if (out.empty()) throw config_error(v, "expected a comma-separated integer list");
    return out;
}

struct KeyInfo {
    const char* section;
    const char* key;
};

// Fixed keys of the grammar. `tag.<n>` (boundary) and `fracture.<id>` (fractures) are
// the two indexed families.
inline const std::vector<KeyInfo>& config_schema()
{
    static const std::vector<KeyInfo> keys = {
        {"mesh", "mesh"},
        {"mesh", "face_pairs"},
        {"mesh", "seed"},
        {"mesh", "half_width"},
        {"mesh", "fracture_length"},
        {"mesh", "grading"},
        {"mesh", "jitter"},
        {"material", "mu"},
        {"material", "lambda"},
        {"discretization", "beta"},
        {"discretization", "symmetry"},
        {"discretization", "condition_warning"},
        {"loads", "body_force"},
        {"loads", "jump"},
        {"loads", "pressure"},
        {"loads", "compression"},
        {"loads", "alpha"},
        {"loads", "friction_angle"},
        {"solver", "newton_rtol"},
        {"solver", "newton_atol"},
        {"solver", "newton_max_iterations"},
        {"solver", "newton_damping"},
        {"harness", "case"},
        {"harness", "refinements"},
        {"harness", "reference"},
        {"harness", "seeds"},
        {"harness", "first_seed"},
        {"harness", "tip_radius"},
        {"harness", "singular_radius"},
        {"harness", "jobs"},
        {"harness", "network"},
        {"harness", "record_timing"},
        {"output", "output_dir"},
        {"output", "prefix"},
        {"output", "vtk"},
    };
    return keys;
}

inline bool is_section(std::string_view s)
{
    static const char* names[] = {"mesh", "material", "discretization", "boundary", "fractures",
                                  "loads", "solver", "harness", "output"};
    for (const char* n : names)
        if (s == n) return true;
    return false;
}

inline bool indexed_key(std::string_view key, std::string_view family, int& index)
{
    if (key.size() <= family.size() + 1 || key.substr(0, family.size()) != family || key[family.size()] != '.')
        return false;
    const auto tok = key.substr(family.size() + 1);
    auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), index);
    return ec == std::errc() && ptr == tok.data() + tok.size();
}

/// Section a key belongs to, or empty if the key is not part of the grammar.
inline std::string section_of(std::string_view key)
{
    int index = 0;
    if (indexed_key(key, "tag", index)) return "boundary";
    if (indexed_key(key, "fracture", index)) return "fractures";
    for (const auto& k : config_schema())
        if (key == k.key) return k.section;
    return {};
}

/// Accepts `key` and `section.key`.
inline std::string canonical_key(std::string_view key)
{
    if (!section_of(key).empty()) return std::string(key);
    const auto dot = key.find('.');
    if (dot != std::string_view::npos) {
        const auto section = key.substr(0, dot);
        const auto rest = key.substr(dot + 1);
        if (is_section(section) && section_of(rest) == section) return std::string(rest);
    }
    return {};
}

inline std::pair<std::string, std::string> split_assignment(std::string_view line, const std::string& origin)
{
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) throw ConfigError(origin + ": expected 'key=value'");
    const auto key = trim(line.substr(0, eq));
    const auto value = trim(line.substr(eq + 1));
    if (key.empty()) throw ConfigError(origin + ": empty key");
    return {std::string(key), std::string(value)};
}

}  // namespace detail

/// Collects raw key/value pairs from a document in the config grammar, checking that every
/// key is known and sits in its own section.
inline std::map<std::string, detail::ConfigValue> read_config_values(std::string_view text)
{
    std::map<std::string, detail::ConfigValue> values;
    std::string section;
    int number = 0;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        auto nl = text.find('\n', pos);
        if (nl == std::string_view::npos) nl = text.size();
        ++number;
        auto raw = text.substr(pos, nl - pos);
        pos = nl + 1;
        if (auto hash = raw.find('#'); hash != std::string_view::npos) raw = raw.substr(0, hash);
        raw = detail::trim(raw);
        if (raw.empty()) continue;
        const std::string origin = "line " + std::to_string(number);
        if (raw.front() == '[') {
            if (raw.back() != ']') throw ConfigError(origin + ": unterminated section header");
            section = std::string(detail::trim(raw.substr(1, raw.size() - 2)));
            if (!detail::is_section(section)) throw ConfigError(origin + ": unknown section [" + section + "]");
            continue;
        }
        auto [key, value] = detail::split_assignment(raw, origin);
        const std::string home = detail::section_of(key);
        if (home.empty()) throw ConfigError(origin + ": unknown key '" + key + "'");
        if (!section.empty() && home != section)
            throw ConfigError(origin + ": key '" + key + "' belongs to section [" + home + "], not [" + section + "]");
        values[key] = {value, origin};
    }
    return values;
}

/// Builds a RunConfig from a document and `key=value` overrides; overrides win.
inline RunConfig parse_config(std::string_view text, const std::vector<std::string>& overrides = {},
                              const std::string& command = {})
{
    auto values = read_config_values(text);
    for (const auto& o : overrides) {
        const std::string origin = "override '" + o + "'";
        auto [key, value] = detail::split_assignment(o, origin);
        const std::string canon = detail::canonical_key(key);
        if (canon.empty()) throw ConfigError(origin + ": unknown key '" + key + "'");
        values[canon] = {value, origin};
    }

    RunConfig cfg;
    cfg.command = command;
    auto take = [&](const std::string& key) -> const detail::ConfigValue* {
        auto it = values.find(key);
        return it == values.end() ? nullptr : &it->second;
    };
    if (const auto* v = take("case")) {
        try {
            cfg.harness = default_case_spec(parse_case_id(std::string(detail::trim(v->value))));
        } catch (const ConfigError& e) {
            throw detail::config_error(*v, e.what());
        }
        cfg.case_set = true;
    }
    CaseSpec& h = cfg.harness;
    using Setter = std::function<void(const detail::ConfigValue&)>;
    const std::map<std::string, Setter> setters = {
        {"mesh", [&](auto& v) { cfg.mesh_path = v.value; }},
        {"face_pairs", [&](auto& v) { cfg.face_pairs = static_cast<int>(detail::config_int(v)); }},
        {"seed", [&](auto& v) { cfg.seed = static_cast<std::uint64_t>(detail::config_int(v)); }},
        {"half_width", [&](auto& v) { h.half_width = detail::config_double(v); }},
        {"fracture_length", [&](auto& v) { h.fracture_length = detail::config_double(v); }},
        {"grading", [&](auto& v) { h.grading = detail::config_double(v); }},
        {"jitter", [&](auto& v) { h.jitter = detail::config_double(v); }},
        {"mu", [&](auto& v) { h.mu = detail::config_double(v); }},
        {"lambda", [&](auto& v) { h.lambda = detail::config_double(v); }},
        {"beta", [&](auto& v) { h.beta = detail::config_double(v); }},
        {"symmetry",
         [&](auto& v) {
             const auto s = detail::trim(v.value);
             if (s == "weak")
                 h.symmetry = StressSymmetry::Weak;
             else if (s == "full")
                 h.symmetry = StressSymmetry::Full;
             else
                 throw detail::config_error(v, "symmetry must be 'weak' or 'full'");
         }},
        {"condition_warning", [&](auto& v) { cfg.condition_warning = detail::config_double(v); }},
        {"body_force",
         [&](auto& v) {
             const auto n = detail::config_numbers(v, 2);
             cfg.body_force = {n[0], n[1]};
         }},
        {"jump", [&](auto& v) { h.jump = detail::config_double(v); }},
        {"pressure", [&](auto& v) { h.pressure = detail::config_double(v); }},
        {"compression", [&](auto& v) { h.compression = detail::config_double(v); }},
        {"alpha", [&](auto& v) { h.alpha_deg = detail::config_double(v); }},
        {"friction_angle", [&](auto& v) { h.friction_angle_deg = detail::config_double(v); }},
        {"newton_rtol", [&](auto& v) { h.newton.rtol = detail::config_double(v); }},
        {"newton_atol", [&](auto& v) { h.newton.atol = detail::config_double(v); }},
        {"newton_max_iterations", [&](auto& v) { h.newton.max_iterations = static_cast<int>(detail::config_int(v)); }},
        {"newton_damping", [&](auto& v) { h.newton.damping = detail::config_double(v); }},
        {"case", [](auto&) {}},
        {"refinements", [&](auto& v) { h.refinements = detail::config_int_list(v); }},
        {"reference", [&](auto& v) { h.reference_refinement = static_cast<int>(detail::config_int(v)); }},
        {"seeds", [&](auto& v) { h.seeds = static_cast<int>(detail::config_int(v)); }},
        {"first_seed", [&](auto& v) { h.first_seed = static_cast<std::uint64_t>(detail::config_int(v)); }},
        {"tip_radius", [&](auto& v) { h.tip_radius = detail::config_double(v); }},
        {"singular_radius", [&](auto& v) { h.singular_radius = detail::config_double(v); }},
        {"jobs", [&](auto& v) { h.jobs = static_cast<int>(detail::config_int(v)); }},
        {"network", [&](auto& v) { h.network = parse_fracture_lines(read_text_file(v.value)); }},
        {"record_timing", [&](auto& v) { h.record_timing = detail::config_bool(v); }},
        {"output_dir", [&](auto& v) { cfg.output_dir = v.value; }},
        {"prefix", [&](auto& v) { cfg.prefix = v.value; }},
        {"vtk", [&](auto& v) { cfg.write_vtk = detail::config_bool(v); }},
    };
    for (const auto& [key, v] : values) {
        int index = 0;
        if (detail::indexed_key(key, "tag", index)) {
            const auto tokens = detail::split_ws(v.value);
            if (tokens.size() != 3 || (tokens[0] != "dirichlet" && tokens[0] != "neumann"))
                throw detail::config_error(v, "boundary entry must be 'dirichlet ux uy' or 'neumann tx ty'");
            BoundarySpec b;
            b.kind = tokens[0] == "dirichlet" ? BoundaryKind::Dirichlet : BoundaryKind::Neumann;
            b.value = {detail::config_double({std::string(tokens[1]), v.origin}),
                       detail::config_double({std::string(tokens[2]), v.origin})};
            cfg.boundary[index] = b;
        } else if (detail::indexed_key(key, "fracture", index)) {
            const auto tokens = detail::split_ws(v.value);
            auto num = [&](std::size_t k) { return detail::config_double({std::string(tokens[k]), v.origin}); };
            if (tokens.size() == 3 && tokens[0] == "jump")
                cfg.fractures.push_back({index, PrescribedJump{{Vec2(num(1), num(2))}}});
            else if (tokens.size() == 3 && tokens[0] == "traction")
                cfg.fractures.push_back({index, PrescribedTraction{{Vec2(num(1), num(2))}}});
            else if (tokens.size() == 2 && tokens[0] == "friction")
                cfg.fractures.push_back({index, CoulombFriction{num(1)}});
            else
                throw detail::config_error(v, "fracture entry must be 'jump dn dt', 'traction tx ty' or 'friction mu_f'");
        } else {
            setters.at(key)(v);
        }
    }
    return cfg;
}

inline RunConfig parse_config_file(const std::string& path, const std::vector<std::string>& overrides = {},
                                   const std::string& command = {})
{
    return parse_config(read_text_file(path), overrides, command);
}

/// Checks the settings a command needs.
inline void validate_config(const RunConfig& cfg)
{
    if (cfg.command == "discretize" && cfg.mesh_path.empty()) throw ConfigError("missing required path 'mesh'");
    if (cfg.command == "solve" && cfg.mesh_path.empty() && !cfg.case_set)
        throw ConfigError("missing required path 'mesh' (or a 'case' to generate a fixture)");
    if (cfg.command == "verify" && !cfg.case_set) throw ConfigError("verify needs a case");
    if (cfg.face_pairs < 2) throw ConfigError("face_pairs must be at least 2");
    if (!(cfg.harness.beta > 0.0 && cfg.harness.beta < 1.0)) throw ConfigError("beta must lie in (0, 1)");
    if (!(cfg.harness.mu > 0.0) || !(cfg.harness.lambda + cfg.harness.mu > 0.0))
        throw ConfigError("Lame parameters must satisfy mu > 0 and lambda + mu > 0");
    cfg.harness.validate();
}

}  // namespace fvfrac
