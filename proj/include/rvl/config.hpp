#pragma once

#include "rvl/bayes_gibbs.hpp"
#include "rvl/dataset.hpp"
#include "rvl/model.hpp"
#include "rvl/stability.hpp"

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace rvl {

/// Ordered `key = value` document. Lines starting with '#' are comments.
class KeyValues {
public:
    static KeyValues parse(const std::string& text, const std::string& source = "<text>");
    static KeyValues load(const std::filesystem::path& path);

    void set(const std::string& key, std::string value);
    [[nodiscard]] bool contains(const std::string& key) const;
    [[nodiscard]] const std::string& at(const std::string& key) const;
    [[nodiscard]] std::optional<std::string> get(const std::string& key) const;
    [[nodiscard]] const std::vector<std::pair<std::string, std::string>>& entries() const noexcept {
        return entries_;
    }

    /// Copies every entry of `other`, replacing existing keys.
    void merge(const KeyValues& other);

    [[nodiscard]] std::string str() const;

private:
    std::vector<std::pair<std::string, std::string>> entries_;
};

/// Parses "key=value" from a command-line override.
std::pair<std::string, std::string> parse_override(const std::string& text);

/**
 * @brief Typed run configuration assembled from a key-value document.
 *
 * Keys: model.family, model.m, fracdiff.K, stability.lag_cap, simulate.T,
 * simulate.burn_in, gibbs.iterations, gibbs.warmup, gibbs.grid_points,
 * gibbs.chains, gibbs.sample_b2, gibbs.progress, priors.<field> = lo,hi,
 * priors.transition = c11,c12;c21,c22, params.<j>.<field>, params.w,
 * params.transition = p11,p12;p21,p22, risk.levels, risk.normal_fallback,
 * data.path, data.kind, data.split, forecast.path, output.states, seed,
 * output.dir. Unknown keys are rejected.
 */
struct RunConfig {
    ModelFamily family = ModelFamily::msst;
    std::size_t m = 2;
    std::size_t trunc_K = kDefaultTruncation;
    std::size_t lag_cap = kDefaultLagCap;
    std::size_t sim_T = 2000;
    std::size_t burn_in = 1000;
    GibbsConfig gibbs;
    bool progress = false;
    KeyValues prior_overrides;
    KeyValues params;
    std::vector<double> risk_levels{0.05, 0.10};
    bool normal_fallback = false;
    std::optional<std::filesystem::path> data_path;
    SeriesKind data_kind = SeriesKind::returns;
    double split = 2.0 / 3.0;
    std::optional<std::filesystem::path> forecast_path;
    bool save_states = false;
    std::uint64_t seed = 20240917;
    std::filesystem::path out_dir = ".";

    static RunConfig from(const KeyValues& kv);

    /// Parameter values for simulate/stability/forecast. Requires a0,a1,a2,b0,b1,d
    /// per regime, gamma for logistic families, w for hygarch and the transition
    /// matrix when m > 1; b2 defaults to 0.
    [[nodiscard]] ModelSpec model_spec() const;

    [[nodiscard]] PriorSpec prior_spec() const;
    [[nodiscard]] FitModel fit_model() const;
};

/// `params.*` entries describing a spec, in the layout read by RunConfig.
KeyValues spec_to_params(const ModelSpec& spec);

}  // namespace rvl
