#include "darwinize/config.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <functional>
#include <sstream>

#include "darwinize/csv.hpp"
#include "darwinize/errors.hpp"

namespace darwinize {

namespace {

std::string trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return std::string(s.substr(b, e - b + 1));
}

double parse_real(const std::string& key, const std::string& v) {
    double x = 0.0;
    const char* end = v.data() + v.size();
    const auto r = std::from_chars(v.data(), end, x);
    if (r.ec != std::errc() || r.ptr != end || !std::isfinite(x))
        throw ConfigError(key + ": expected a finite number, got '" + v + "'");
    return x;
}

long long parse_integer(const std::string& key, const std::string& v) {
    long long x = 0;
    const char* end = v.data() + v.size();
    const auto r = std::from_chars(v.data(), end, x);
    if (r.ec != std::errc() || r.ptr != end) throw ConfigError(key + ": expected an integer, got '" + v + "'");
    return x;
}

bool parse_bool(const std::string& key, const std::string& v) {
    if (v == "true" || v == "1" || v == "yes") return true;
    if (v == "false" || v == "0" || v == "no") return false;
    throw ConfigError(key + ": expected true or false, got '" + v + "'");
}

std::vector<double> parse_list(const std::string& key, const std::string& v) {
    std::vector<double> out;
    std::stringstream ss(v);
    std::string item;
    while (std::getline(ss, item, ',')) out.push_back(parse_real(key, trim(item)));
    if (out.empty()) throw ConfigError(key + ": empty list");
    return out;
}

using Setter = std::function<void(RunConfig&, const std::string&, const std::string&)>;

const std::map<std::string, Setter>& setters() {
    static const std::map<std::string, Setter> table = {
        {"omega0", [](RunConfig& c, auto& k, auto& v) { c.params.omega0 = parse_real(k, v); }},
        {"omega_total", [](RunConfig& c, auto& k, auto& v) { c.params.coupling = parse_real(k, v); }},
        {"gamma", [](RunConfig& c, auto& k, auto& v) { c.params.gamma = parse_real(k, v); }},
        {"gamma_w", [](RunConfig& c, auto& k, auto& v) { c.params.gamma_w = parse_real(k, v); }},
        // resolved after every other key, see resolve_config
        {"gamma_plus", [](RunConfig&, auto& k, auto& v) { parse_real(k, v); }},
        {"delta", [](RunConfig& c, auto& k, auto& v) { c.params.detuning = parse_real(k, v); }},
        {"ce0_re", [](RunConfig& c, auto& k, auto& v) { c.params.ce0.real(parse_real(k, v)); }},
        {"ce0_im", [](RunConfig& c, auto& k, auto& v) { c.params.ce0.imag(parse_real(k, v)); }},
        {"cg_re", [](RunConfig& c, auto& k, auto& v) { c.params.cg.real(parse_real(k, v)); }},
        {"cg_im", [](RunConfig& c, auto& k, auto& v) { c.params.cg.imag(parse_real(k, v)); }},
        {"deficit", [](RunConfig& c, auto& k, auto& v) { c.params.deficit = parse_real(k, v); }},
        {"n_modes", [](RunConfig& c, auto& k, auto& v) { c.n_modes = parse_integer(k, v); }},
        {"scheme",
         [](RunConfig& c, auto&, auto& v) {
             try {
                 c.scheme = parse_scheme(v);
             } catch (const InvalidParameter& e) {
                 throw ConfigError(e.what());
             }
         }},
        {"cutoff", [](RunConfig& c, auto& k, auto& v) { c.cutoff = parse_real(k, v); }},
        {"t_max", [](RunConfig& c, auto& k, auto& v) { c.t_max = parse_real(k, v); }},
        {"n_steps", [](RunConfig& c, auto& k, auto& v) { c.n_steps = parse_integer(k, v); }},
        {"seed",
         [](RunConfig& c, auto& k, auto& v) {
             const long long s = parse_integer(k, v);
             if (s < 0) throw ConfigError("seed must be non-negative");
             c.seed = static_cast<std::uint64_t>(s);
         }},
        {"n_samples", [](RunConfig& c, auto& k, auto& v) { c.n_samples = parse_integer(k, v); }},
        {"exhaustive_limit", [](RunConfig& c, auto& k, auto& v) { c.exhaustive_limit = parse_integer(k, v); }},
        {"kind",
         [](RunConfig& c, auto& k, auto& v) {
             if (v == "subenv")
                 c.kind = KindSelection::subenv;
             else if (v == "pseudo")
                 c.kind = KindSelection::pseudo;
             else if (v == "both")
                 c.kind = KindSelection::both;
             else
                 throw ConfigError(k + ": expected subenv, pseudo or both, got '" + v + "'");
         }},
        {"t_eval", [](RunConfig& c, auto& k, auto& v) { c.t_eval = parse_list(k, v); }},
        {"with_split", [](RunConfig& c, auto& k, auto& v) { c.with_split = parse_bool(k, v); }},
        {"n_series", [](RunConfig& c, auto& k, auto& v) { c.n_series = parse_integer(k, v); }},
        {"max_gamma_ratio_ii", [](RunConfig& c, auto& k, auto& v) { c.max_gamma_ratio_ii = parse_real(k, v); }},
        {"witness_a", [](RunConfig& c, auto& k, auto& v) { c.witness.a = parse_real(k, v); }},
        {"witness_b_re", [](RunConfig& c, auto& k, auto& v) { c.witness.b.real(parse_real(k, v)); }},
        {"witness_b_im", [](RunConfig& c, auto& k, auto& v) { c.witness.b.imag(parse_real(k, v)); }},
    };
    return table;
}

void validate(const RunConfig& c) {
    try {
        c.params.validate();
    } catch (const InvalidParameter& e) {
        throw ConfigError(e.what());
    }
    if (c.n_modes < 1) throw ConfigError("n_modes must be at least 1");
    if (!(c.cutoff > 0.0)) throw ConfigError("cutoff must be positive");
    if (!(c.t_max > 0.0)) throw ConfigError("t_max must be positive");
    if (c.n_steps < 1) throw ConfigError("n_steps must be at least 1");
    if (c.n_samples < 1) throw ConfigError("n_samples must be at least 1");
    if (c.exhaustive_limit < 0) throw ConfigError("exhaustive_limit must be non-negative");
    if (c.n_series < 1) throw ConfigError("n_series must be at least 1");
    if (!(c.max_gamma_ratio_ii > 0.0)) throw ConfigError("max_gamma_ratio_ii must be positive");
    if (std::abs(c.witness.a) > 1.0 || std::abs(c.witness.b) > 1.0)
        throw ConfigError("witness differences must have magnitude at most 1");
    if (c.witness.a == 0.0 && std::abs(c.witness.b) == 0.0) throw ConfigError("witness states coincide");
    const TimeGrid grid(c.t_max, c.n_steps);
    for (double t : c.t_eval) {
        if (t < 0.0 || t > c.t_max) throw ConfigError("t_eval " + format_double(t) + " outside [0, t_max]");
        try {
            (void)grid.index_of(t);
        } catch (const DomainError&) {
            throw ConfigError("t_eval " + format_double(t) + " is not on the time grid");
        }
    }
}

}  // namespace

std::vector<FragmentKind> RunConfig::kinds() const {
    switch (kind) {
        case KindSelection::subenv:
            return {FragmentKind::subenvironments};
        case KindSelection::pseudo:
            return {FragmentKind::pseudomodes};
        case KindSelection::both:
            break;
    }
    return {FragmentKind::subenvironments, FragmentKind::pseudomodes};
}

ConfigEntries parse_config(const std::string& text, const std::string& source) {
    ConfigEntries out;
    std::stringstream ss(text);
    std::string line;
    int number = 0;
    while (std::getline(ss, line)) {
        ++number;
        const auto hash = line.find('#');
        const std::string body = trim(hash == std::string::npos ? line : line.substr(0, hash));
        if (body.empty()) continue;
        const auto eq = body.find('=');
        if (eq == std::string::npos)
            throw ConfigError(source + ":" + std::to_string(number) + ": expected 'key = value'");
        const std::string key = trim(body.substr(0, eq));
        const std::string value = trim(body.substr(eq + 1));
        if (key.empty() || value.empty())
            throw ConfigError(source + ":" + std::to_string(number) + ": empty key or value");
        if (!out.emplace(key, value).second)
            throw ConfigError(source + ":" + std::to_string(number) + ": repeated key '" + key + "'");
    }
    return out;
}

ConfigEntries read_config_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot open config file " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str(), path.string());
}

std::pair<std::string, std::string> split_assignment(const std::string& text) {
    const auto eq = text.find('=');
    if (eq == std::string::npos) throw ConfigError("expected key=value, got '" + text + "'");
    std::string key = trim(text.substr(0, eq));
    std::string value = trim(text.substr(eq + 1));
    if (key.empty()) throw ConfigError("empty key in '" + text + "'");
    return {std::move(key), std::move(value)};
}

bool is_config_key(const std::string& key) { return setters().count(key) > 0; }

void set_entry(ConfigEntries& entries, const std::string& key, const std::string& value) {
    if (!is_config_key(key)) throw ConfigError("unknown config key '" + key + "'");
    if (key == "gamma_w") entries.erase("gamma_plus");
    if (key == "gamma_plus") entries.erase("gamma_w");
    entries[key] = value;
}

RunConfig resolve_config(const ConfigEntries& entries) {
    RunConfig c;
    for (const auto& [key, value] : entries) {
        const auto it = setters().find(key);
        if (it == setters().end()) throw ConfigError("unknown config key '" + key + "'");
        it->second(c, key, value);
    }
    if (const auto gp = entries.find("gamma_plus"); gp != entries.end()) {
        if (entries.count("gamma_w")) throw ConfigError("give gamma_w or gamma_plus, not both");
        c.params.gamma_w = parse_real("gamma_plus", gp->second) - c.params.gamma;
    }
    if (!entries.count("t_eval")) c.t_eval = {c.t_max};
    validate(c);
    return c;
}

std::string echo_config(const RunConfig& c) {
    std::ostringstream out;
    auto line = [&](std::string_view key, const std::string& value) { out << key << " = " << value << '\n'; };
    const auto& p = c.params;
    line("omega0", format_double(p.omega0));
    line("omega_total", format_double(p.coupling));
    line("gamma", format_double(p.gamma));
    line("gamma_w", format_double(p.gamma_w));
    line("delta", format_double(p.detuning));
    line("ce0_re", format_double(p.ce0.real()));
    line("ce0_im", format_double(p.ce0.imag()));
    line("cg_re", format_double(p.cg.real()));
    line("cg_im", format_double(p.cg.imag()));
    line("deficit", format_double(p.deficit));
    line("n_modes", std::to_string(c.n_modes));
    line("scheme", std::string(to_string(c.scheme)));
    line("cutoff", format_double(c.cutoff));
    line("t_max", format_double(c.t_max));
    line("n_steps", std::to_string(c.n_steps));
    line("seed", std::to_string(c.seed));
    line("n_samples", std::to_string(c.n_samples));
    line("exhaustive_limit", std::to_string(c.exhaustive_limit));
    line("kind", c.kind == KindSelection::subenv ? "subenv" : c.kind == KindSelection::pseudo ? "pseudo" : "both");
    std::string te;
    for (double t : c.t_eval) te += (te.empty() ? "" : ",") + format_double(t);
    line("t_eval", te);
    line("with_split", c.with_split ? "true" : "false");
    line("n_series", std::to_string(c.n_series));
    line("max_gamma_ratio_ii", format_double(c.max_gamma_ratio_ii));
    line("witness_a", format_double(c.witness.a));
    line("witness_b_re", format_double(c.witness.b.real()));
    line("witness_b_im", format_double(c.witness.b.imag()));
    return out.str();
}

}  // namespace darwinize
