#include "rvl/config.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>

namespace rvl {

namespace {

std::string trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos) {
        return {};
    }
    const auto e = s.find_last_not_of(" \t\r");
    return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> split_list(std::string_view s, char sep) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (true) {
        const auto pos = s.find(sep, start);
        out.push_back(trim(s.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start)));
        if (pos == std::string_view::npos) {
            return out;
        }
        start = pos + 1;
    }
}

double to_double(const std::string& key, const std::string& v) {
    try {
        return parse_double(v);
    } catch (const std::invalid_argument&) {
        throw std::invalid_argument(key + ": expected a number, got '" + v + "'");
    }
}

std::uint64_t to_uint(const std::string& key, const std::string& v) {
    std::uint64_t out = 0;
    auto res = std::from_chars(v.data(), v.data() + v.size(), out);
    if (res.ec != std::errc() || res.ptr != v.data() + v.size()) {
        throw std::invalid_argument(key + ": expected a non-negative integer, got '" + v + "'");
    }
    return out;
}

bool to_bool(const std::string& key, const std::string& v) {
    if (v == "true" || v == "1" || v == "yes") return true;
    if (v == "false" || v == "0" || v == "no") return false;
    throw std::invalid_argument(key + ": expected true or false, got '" + v + "'");
}

Eigen::MatrixXd parse_matrix(const std::string& key, const std::string& v) {
    const auto rows = split_list(v, ';');
    Eigen::MatrixXd M(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows.size()));
    for (std::size_t r = 0; r < rows.size(); ++r) {
        const auto cols = split_list(rows[r], ',');
        if (cols.size() != rows.size()) {
            throw std::invalid_argument(key + ": expected a square matrix written as a,b;c,d");
        }
        for (std::size_t c = 0; c < cols.size(); ++c) {
            M(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = to_double(key, cols[c]);
        }
    }
    return M;
}

std::string format_matrix(const Eigen::MatrixXd& M) {
    std::string out;
    for (Eigen::Index r = 0; r < M.rows(); ++r) {
        if (r > 0) out += ';';
        for (Eigen::Index c = 0; c < M.cols(); ++c) {
            if (c > 0) out += ',';
            out += format_double(M(r, c));
        }
    }
    return out;
}

}  // namespace

KeyValues KeyValues::parse(const std::string& text, const std::string& source) {
    KeyValues kv;
    std::size_t line_no = 0;
    std::size_t start = 0;
    while (start <= text.size()) {
        const auto end = text.find('\n', start);
        const std::string line = trim(std::string_view(text).substr(start, end == std::string::npos ? std::string::npos : end - start));
        ++line_no;
        start = end == std::string::npos ? text.size() + 1 : end + 1;
        if (line.empty() || line.front() == '#') {
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            throw DataError(source + ": expected key = value", line_no);
        }
        const std::string key = trim(std::string_view(line).substr(0, eq));
        if (key.empty()) {
            throw DataError(source + ": empty key", line_no);
        }
        kv.set(key, trim(std::string_view(line).substr(eq + 1)));
    }
    return kv;
}

KeyValues KeyValues::load(const std::filesystem::path& path) {
    return parse(read_text(path), path.string());
}

void KeyValues::set(const std::string& key, std::string value) {
    for (auto& [k, v] : entries_) {
        if (k == key) {
            v = std::move(value);
            return;
        }
    }
    entries_.emplace_back(key, std::move(value));
}

bool KeyValues::contains(const std::string& key) const {
    return get(key).has_value();
}

const std::string& KeyValues::at(const std::string& key) const {
    for (const auto& [k, v] : entries_) {
        if (k == key) {
            return v;
        }
    }
    throw std::invalid_argument("missing key '" + key + "'");
}

std::optional<std::string> KeyValues::get(const std::string& key) const {
    for (const auto& [k, v] : entries_) {
        if (k == key) {
            return v;
        }
    }
    return std::nullopt;
}

void KeyValues::merge(const KeyValues& other) {
    for (const auto& [k, v] : other.entries_) {
        set(k, v);
    }
}

std::string KeyValues::str() const {
    std::string out;
    for (const auto& [k, v] : entries_) {
        out += k;
        out += " = ";
        out += v;
        out += '\n';
    }
    return out;
}

std::pair<std::string, std::string> parse_override(const std::string& text) {
    const auto eq = text.find('=');
    if (eq == std::string::npos || eq == 0) {
        throw std::invalid_argument("override must look like key=value, got '" + text + "'");
    }
    return {trim(std::string_view(text).substr(0, eq)), trim(std::string_view(text).substr(eq + 1))};
}

RunConfig RunConfig::from(const KeyValues& kv) {
    RunConfig c;
    for (const auto& [key, value] : kv.entries()) {
        if (key == "model.family") {
            c.family = parse_family(value);
        } else if (key == "model.m") {
            c.m = to_uint(key, value);
        } else if (key == "fracdiff.K") {
            c.trunc_K = to_uint(key, value);
        } else if (key == "stability.lag_cap") {
            c.lag_cap = to_uint(key, value);
        } else if (key == "simulate.T") {
            c.sim_T = to_uint(key, value);
        } else if (key == "simulate.burn_in") {
            c.burn_in = to_uint(key, value);
        } else if (key == "gibbs.iterations") {
            c.gibbs.iterations = to_uint(key, value);
        } else if (key == "gibbs.warmup") {
            c.gibbs.warmup = to_uint(key, value);
        } else if (key == "gibbs.grid_points") {
            c.gibbs.grid_points = to_uint(key, value);
        } else if (key == "gibbs.chains") {
            c.gibbs.chains = to_uint(key, value);
        } else if (key == "gibbs.sample_b2") {
            c.gibbs.sample_b2 = to_bool(key, value);
        } else if (key == "gibbs.progress") {
            c.progress = to_bool(key, value);
        } else if (key.rfind("priors.", 0) == 0) {
            c.prior_overrides.set(key.substr(7), value);
        } else if (key.rfind("params.", 0) == 0) {
            c.params.set(key, value);
        } else if (key == "risk.levels") {
            c.risk_levels.clear();
            for (const auto& s : split_list(value, ',')) {
                c.risk_levels.push_back(to_double(key, s));
            }
        } else if (key == "risk.normal_fallback") {
            c.normal_fallback = to_bool(key, value);
        } else if (key == "data.path") {
            c.data_path = value;
        } else if (key == "data.kind") {
            c.data_kind = parse_series_kind(value);
        } else if (key == "data.split") {
            c.split = to_double(key, value);
        } else if (key == "forecast.path") {
            c.forecast_path = value;
        } else if (key == "output.states") {
            c.save_states = to_bool(key, value);
        } else if (key == "seed") {
            c.seed = to_uint(key, value);
        } else if (key == "output.dir") {
            c.out_dir = value;
        } else {
            throw std::invalid_argument("unknown configuration key '" + key + "'");
        }
    }
    c.gibbs.seed = c.seed;
    if (c.m < 1) {
        throw std::invalid_argument("model.m must be at least 1");
    }
    if (c.family != ModelFamily::msst && c.m != 1) {
        throw std::invalid_argument("model.m must be 1 for the st and hygarch families");
    }
    if (c.trunc_K < 2) {
        throw std::invalid_argument("fracdiff.K must be at least 2");
    }
    if (!(c.split > 0.0 && c.split < 1.0)) {
        throw std::invalid_argument("data.split must lie in (0, 1)");
    }
    for (double r : c.risk_levels) {
        if (!(r > 0.0 && r < 0.5)) {
            throw std::invalid_argument("risk levels must lie in (0, 0.5)");
        }
    }
    return c;
}

ModelSpec RunConfig::model_spec() const {
    ModelSpec spec;
    spec.trunc_K = trunc_K;
    for (std::size_t j = 1; j <= m; ++j) {
        const std::string prefix = "params." + std::to_string(j) + ".";
        auto need = [&](const char* field) {
            const auto v = params.get(prefix + field);
            if (!v) {
                throw std::invalid_argument("missing parameter " + prefix + field);
            }
            return to_double(prefix + field, *v);
        };
        RegimeParams p;
        p.a0 = need("a0");
        p.a1 = need("a1");
        p.a2 = need("a2");
        p.b0 = need("b0");
        p.b1 = need("b1");
        p.d = need("d");
        const auto b2 = params.get(prefix + "b2");
        p.b2 = b2 ? to_double(prefix + "b2", *b2) : 0.0;
        if (family != ModelFamily::hygarch) {
            p.gamma = need("gamma");
        } else {
            const auto g = params.get(prefix + "gamma");
            p.gamma = g ? to_double(prefix + "gamma", *g) : 1.0;  // unused with a fixed weight
        }
        spec.regimes.push_back(p);
    }
    for (const auto& [key, value] : params.entries()) {
        (void)value;
        const auto parts = split_list(key, '.');
        const bool known = (parts.size() == 2 && (parts[1] == "w" || parts[1] == "transition")) ||
                           (parts.size() == 3 && !parts[1].empty() &&
                            std::all_of(parts[1].begin(), parts[1].end(), [](char ch) { return ch >= '0' && ch <= '9'; }));
        if (!known) {
            throw std::invalid_argument("unknown parameter key '" + key + "'");
        }
        if (parts.size() == 3) {
            const auto j = to_uint(key, parts[1]);
            if (j < 1 || j > m) {
                throw std::invalid_argument(key + ": regime index out of range 1.." + std::to_string(m));
            }
            parse_field(parts[2]);
        }
    }
    if (family == ModelFamily::hygarch) {
        const auto w = params.get("params.w");
        if (!w) {
            throw std::invalid_argument("missing parameter params.w for the hygarch family");
        }
        spec.weight = WeightMode::fixed(to_double("params.w", *w));
    } else {
        spec.weight = WeightMode::logistic();
    }
    if (m == 1) {
        spec.transition = TransitionMatrix::single();
    } else {
        const auto t = params.get("params.transition");
        if (!t) {
            throw std::invalid_argument("missing parameter params.transition");
        }
        Eigen::MatrixXd P = parse_matrix("params.transition", *t);
        if (static_cast<std::size_t>(P.rows()) != m) {
            throw std::invalid_argument("params.transition must be " + std::to_string(m) + " x " + std::to_string(m));
        }
        spec.transition = TransitionMatrix(std::move(P));
    }
    spec.validate();
    return spec;
}

PriorSpec RunConfig::prior_spec() const {
    PriorSpec prior = PriorSpec::defaults(m);
    for (const auto& [key, value] : prior_overrides.entries()) {
        if (key == "transition") {
            Eigen::MatrixXd C = parse_matrix("priors.transition", value);
            if (static_cast<std::size_t>(C.rows()) != m) {
                throw std::invalid_argument("priors.transition must be " + std::to_string(m) + " x " + std::to_string(m));
            }
            prior.concentration = std::move(C);
            continue;
        }
        const ParamField f = parse_field(key);
        const auto parts = split_list(value, ',');
        if (parts.size() != 2) {
            throw std::invalid_argument("priors." + key + ": expected lo,hi");
        }
        prior.bound(f) = {to_double("priors." + key, parts[0]), to_double("priors." + key, parts[1])};
    }
    prior.validate(m);
    return prior;
}

FitModel RunConfig::fit_model() const {
    return FitModel{family, m, trunc_K};
}

KeyValues spec_to_params(const ModelSpec& spec) {
    KeyValues kv;
    for (std::size_t j = 0; j < spec.m(); ++j) {
        const RegimeParams& p = spec.regimes[j];
        const std::string prefix = "params." + std::to_string(j + 1) + ".";
        kv.set(prefix + "a0", format_double(p.a0));
        kv.set(prefix + "a1", format_double(p.a1));
        kv.set(prefix + "a2", format_double(p.a2));
        kv.set(prefix + "b0", format_double(p.b0));
        kv.set(prefix + "b1", format_double(p.b1));
        kv.set(prefix + "b2", format_double(p.b2));
        kv.set(prefix + "d", format_double(p.d));
        kv.set(prefix + "gamma", format_double(p.gamma));
    }
    if (spec.weight.kind == WeightKind::fixed) {
        kv.set("params.w", format_double(spec.weight.fixed_w));
    }
    if (spec.m() > 1) {
        kv.set("params.transition", format_matrix(spec.transition.matrix()));
    }
    return kv;
}

}  // namespace rvl
