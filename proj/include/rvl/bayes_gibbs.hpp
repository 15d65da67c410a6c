#pragma once

#include "rvl/model.hpp"

#include <Eigen/Dense>

#include <array>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace rvl {

using Rng = std::mt19937_64;

/// Continuous parameters that the Griddy Gibbs block can update. `w` is the
/// fixed HYGARCH weight and exists only for the hygarch family.
enum class ParamField { a0, a1, a2, b0, b1, b2, d, gamma, w };

inline constexpr std::array<ParamField, 9> kAllFields = {
    ParamField::a0, ParamField::a1, ParamField::a2, ParamField::b0, ParamField::b1,
    ParamField::b2, ParamField::d,  ParamField::gamma, ParamField::w};

std::string_view field_name(ParamField field) noexcept;
ParamField parse_field(std::string_view name);

struct Interval {
    double lo = 0.0;
    double hi = 1.0;
};

/**
 * @brief Uniform priors for the continuous parameters (shared by all regimes)
 *        and Dirichlet rows for the transition matrix.
 *
 * The joint restriction b2 <= b1 <= d is imposed as a support restriction by
 * clipping each grid to the range left feasible by the other parameters.
 * With two regimes each row reduces to the Beta(c_r1, c_r2) prior.
 */
struct PriorSpec {
    std::array<Interval, kAllFields.size()> bounds{};
    Eigen::MatrixXd concentration;  // c_rs > 0, m x m

    /// a0,b0 in (0,5]; a1,a2 in (0,1); b1,b2 in [0,1); d in (0,1); gamma in (0,10]; w in [0,1];
    /// c_rs = 1.
    static PriorSpec defaults(std::size_t m);

    [[nodiscard]] const Interval& bound(ParamField f) const noexcept {
        return bounds[static_cast<std::size_t>(f)];
    }
    Interval& bound(ParamField f) noexcept { return bounds[static_cast<std::size_t>(f)]; }

    void validate(std::size_t m) const;
};

struct GibbsConfig {
    std::size_t iterations = 10000;
    std::size_t warmup = 5000;
    std::size_t grid_points = 33;
    std::uint64_t seed = 20240917;
    std::size_t chains = 1;
    bool sample_b2 = false;  // b2 stays at its starting value unless set

    void validate() const;
};

/// Model family plus regime count for estimation.
struct FitModel {
    ModelFamily family = ModelFamily::msst;
    std::size_t m = 2;
    std::size_t trunc_K = kDefaultTruncation;
};

/// One sampled coordinate: a field of one regime (regime is ignored for w).
struct ParameterSlot {
    std::size_t regime = 0;
    ParamField field = ParamField::a0;

    /// "a0.1", "d.2", "w"
    [[nodiscard]] std::string name() const;
};

/// Coordinates updated by the Griddy block for a family, in sweep order.
std::vector<ParameterSlot> sampled_slots(const FitModel& model, bool sample_b2);

double slot_value(const ModelSpec& spec, const ParameterSlot& slot);
void set_slot_value(ModelSpec& spec, const ParameterSlot& slot, double value);

struct ColumnSummary {
    double mean = 0.0;
    double sd = 0.0;
    double mcse = 0.0;  // batch-means Monte Carlo standard error of the mean
};

struct PosteriorDraws {
    FitModel model;
    std::vector<std::string> names;            // theta names followed by p11..pmm when m > 1
    std::vector<std::vector<double>> draws;    // retained rows, one column per name
    std::vector<std::vector<double>> transitions;  // retained rows, P flattened row-major
    std::vector<std::vector<std::uint8_t>> states;  // retained latent paths (0-based)
    std::vector<std::size_t> chain_of_row;
    std::vector<std::size_t> iteration_of_row;
    std::vector<ColumnSummary> summary;                 // pooled, per column
    std::vector<std::vector<ColumnSummary>> per_chain;  // [chain][column]
    WeightMode weight_template = WeightMode::logistic();
    std::vector<RegimeParams> fixed_template;  // values of coordinates that were not sampled

    /// Spec built from posterior means of every column (and of P).
    [[nodiscard]] ModelSpec posterior_mean_spec() const;

    /// Share of retained draws with z_t = j, per t.
    [[nodiscard]] std::vector<std::vector<double>> state_probabilities() const;
};

/// log N(y_t; 0, h_{t,j}) for every t and regime j.
Eigen::MatrixXd regime_log_likelihoods(const ModelSpec& spec, std::span<const double> y, double h_init);

/**
 * @brief Forward filtering, backward sampling of one joint latent path.
 *
 * Forward: p(z_t | Y_{t-1}) = sum_k p(z_{t-1}=k | Y_{t-1}) p_{k z_t} from the
 * stationary start, p(z_t | Y_t) proportional to f(y_t | z_t) p(z_t | Y_{t-1}).
 * Backward: z_T from p(z_T | Y), then z_t proportional to p(z_t | Y_t) p_{z_t z_{t+1}}.
 */
std::vector<int> ffbs_sample(const Eigen::MatrixXd& log_lik, const TransitionMatrix& P, Rng& rng);

std::vector<int> ffbs_sample_states(const ModelSpec& spec, std::span<const double> y, double h_init,
                                    Rng& rng);

/// Transition counts n_rs over consecutive pairs of a 0-based path.
Eigen::MatrixXd transition_counts(std::span<const int> z, std::size_t m);

/// Conjugate draw of P: row r ~ Dirichlet(c_r + n_r). For two states,
/// p11 ~ Beta(c11 + n11, c12 + n12) and p22 ~ Beta(c22 + n22, c21 + n21).
TransitionMatrix sample_transition(const PriorSpec& prior, std::span<const int> z, std::size_t m,
                                   Rng& rng);

/**
 * @brief Inverse of the grid CDF at fraction u in [0,1].
 *
 * The kernel is interpolated linearly between grid points, so the cumulative
 * integral at the nodes is the trapezoid rule and the inverse inside each cell
 * solves a quadratic. Monotone non-decreasing in u.
 */
double griddy_inverse(std::span<const double> grid, std::span<const double> kernel, double u);

/// Draws from the grid density given log-kernel values (max-shifted before
/// exponentiation). The result lies strictly inside (grid.front(), grid.back()).
/// Throws std::domain_error when the kernel vanishes everywhere.
double griddy_draw(std::span<const double> grid, std::span<const double> log_kernel, Rng& rng);

/// H equally spaced points spanning range, nudged inside open endpoints.
std::vector<double> make_grid(Interval range, std::size_t H);

/// Range of the grid for one coordinate given the prior and the current values
/// of the other coordinates (b1 in [b2, d], d in [b1, 1), b2 in [0, min(b1, (1-d)/2)]).
Interval feasible_range(const ModelSpec& spec, const ParameterSlot& slot, const PriorSpec& prior);

/**
 * @brief One Griddy Gibbs update of a single coordinate conditional on the
 *        latent path and the other coordinates.
 *
 * The kernel at each grid value is the prior times prod_{t: z_t = j} N(y_t; 0, h_{t,j}).
 */
double griddy_sample_param(const ParameterSlot& slot, const ModelSpec& current, std::span<const int> z,
                           std::span<const double> y, double h_init, const PriorSpec& prior,
                           std::size_t H, Rng& rng);

/// Starting values derived from the sample variance, clipped into the prior.
ModelSpec default_initial_spec(const FitModel& model, std::span<const double> y, const PriorSpec& prior);

using GibbsProgress = std::function<void(std::size_t chain, std::size_t iteration)>;

/**
 * @brief Three-block Gibbs sampler: latent states by FFBS, transition
 *        probabilities by conjugate draws, continuous parameters by Griddy Gibbs.
 *
 * Regimes are relabelled by ascending a0 after every sweep. Warmup draws are
 * discarded. Chains run independently with seeds derived from cfg.seed.
 */
PosteriorDraws run_gibbs(std::span<const double> y, const FitModel& model, const PriorSpec& prior,
                         const GibbsConfig& cfg, std::optional<ModelSpec> initial = std::nullopt,
                         const GibbsProgress& progress = {});

}  // namespace rvl
