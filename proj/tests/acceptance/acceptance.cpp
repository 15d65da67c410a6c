// Acceptance run: one PASS/FAIL line per criterion, non-zero exit when any fails.

#include "oracles.hpp"
#include "rvl/bayes_gibbs.hpp"
#include "rvl/commands.hpp"
#include "rvl/config.hpp"
#include "rvl/dataset.hpp"
#include "rvl/fracdiff.hpp"
#include "rvl/model.hpp"
#include "rvl/regime_filter.hpp"
#include "rvl/risk_backtest.hpp"
#include "rvl/stability.hpp"

#include <sys/wait.h>
#include <unistd.h>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <iostream>
#include <random>
#include <sstream>
#include <string>

namespace fs = std::filesystem;
using namespace rvl;

namespace {

// Tolerances and limits
constexpr double kFracTol = 1e-10;
constexpr std::size_t kFracLags = 500;
constexpr double kFracSeconds = 1.0;
constexpr double kHygarchTol = 1e-8;
constexpr std::size_t kHygarchSteps = 500;
constexpr std::size_t kHygarchK = 1000;
constexpr double kHygarchSeconds = 5.0;
constexpr double kOperatorTol = 1e-10;
constexpr int kOperatorSets = 200;
constexpr std::size_t kOperatorLags = 50;
constexpr double kRhoSimTarget = 0.90;
constexpr double kRhoEmpTarget = 0.908;
constexpr double kRhoTol = 0.02;
constexpr double kStabilitySeconds = 1.0;
constexpr double kPsiTol = 1e-12;
constexpr std::size_t kFilterSteps = 10000;
constexpr std::size_t kFfbsDraws = 5000;
constexpr double kFfbsSe = 3.0;
constexpr double kFfbsSeconds = 30.0;
constexpr std::size_t kGriddyDraws = 10000;
constexpr double kGriddySeconds = 30.0;
constexpr std::size_t kRecoveryIterations = 10000;
constexpr std::size_t kRecoveryWarmup = 5000;
constexpr double kRecoverySd = 4.0;
constexpr std::size_t kRecoveryMinPass = 13;
constexpr double kRecoverySeconds = 30.0 * 60.0;
constexpr double kUc20 = 1.1266;
constexpr double kUcTol = 1e-3;
constexpr double kLrTol = 1e-10;
constexpr int kLrSequences = 1000;
constexpr int kNullReps = 10000;
constexpr double kNullLo = 0.03;
constexpr double kNullHi = 0.07;
constexpr double kBacktestSeconds = 60.0;
constexpr std::size_t kCompareIterations = 2000;
constexpr std::size_t kCompareWarmup = 1000;
constexpr std::size_t kPipelineIterations = 2000;
constexpr std::size_t kPipelineWarmup = 1000;
constexpr std::uint64_t kSeed = 20240917;

struct Outcome {
    bool pass = false;
    std::string detail;
};

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string num(double v, int prec = 4) {
    std::ostringstream os;
    os.precision(prec);
    os << v;
    return os.str();
}

ModelSpec simulation_spec() {
    ModelSpec s;
    s.regimes = {{0.18, 0.20, 0.25, 0.15, 0.14, 0.0, 0.40, 0.60}, {1.50, 0.40, 0.35, 1.00, 0.18, 0.0, 0.85, 2.00}};
    s.transition = TransitionMatrix::two_state(0.85, 0.60);
    s.trunc_K = kDefaultTruncation;
    return s;
}

ModelSpec empirical_spec() {
    ModelSpec s;
    s.regimes = {{0.203, 0.205, 0.406, 0.204, 0.082, 0.0, 0.806, 0.314},
                 {0.455, 0.405, 0.405, 0.456, 0.102, 0.0, 0.856, 1.785}};
    s.transition = TransitionMatrix::two_state(0.941, 0.977);
    return s;
}

Outcome fracdiff_oracle() {
    const auto t0 = std::chrono::steady_clock::now();
    double worst = 0.0;
    bool sums_ok = true;
    for (double d : {0.1, 0.25, 0.4, 0.5, 0.75, 0.85, 0.9}) {
        const FracDiffCoeffs g(d, kFracLags);
        double sum = 0.0;
        for (std::size_t i = 1; i <= kFracLags; ++i) {
            worst = std::max(worst, std::abs(g[i] - oracle::gamma_coeff(d, i)));
            const double next = sum + g[i];
            sums_ok = sums_ok && next > sum && next < 1.0;
            sum = next;
        }
    }
    const double secs = seconds_since(t0);
    return {worst < kFracTol && sums_ok && secs < kFracSeconds,
            "max |recurrence - gamma| = " + num(worst) + ", partial sums increasing below 1: " +
                (sums_ok ? "yes" : "no") + ", " + num(secs, 3) + " s"};
}

Outcome hygarch_identity() {
    const auto t0 = std::chrono::steady_clock::now();
    const double gamma = 0.1, lambda = 0.2, delta = 0.25, w = 0.6, d = 0.4;
    const RegimeParams p{gamma, lambda, delta - lambda, gamma, lambda, delta, d, 1.0};
    const FracDiffCoeffs g(d, kHygarchK);
    const oracle::HygarchDirect direct(gamma, lambda, delta, w, d, kHygarchK);
    std::mt19937_64 rng(kSeed);
    std::normal_distribution<double> eps;
    std::vector<double> y(kHygarchSteps), y_sq(kHygarchSteps), h(kHygarchSteps);
    h[0] = 1.0;
    for (std::size_t t = 0; t < kHygarchSteps; ++t) {
        if (t > 0) h[t] = direct.step(h[t - 1], y_sq, t);
        y[t] = std::sqrt(h[t]) * eps(rng);
        y_sq[t] = y[t] * y[t];
    }
    const RegimePath path = regime_path(p, g, WeightMode::fixed(w), y, 1.0);
    double worst = 0.0;
    for (std::size_t t = 0; t < kHygarchSteps; ++t) worst = std::max(worst, std::abs(path.h[t] - h[t]) / h[t]);
    const double secs = seconds_since(t0);
    return {worst < kHygarchTol && secs < kHygarchSeconds,
            "max relative difference = " + num(worst) + ", " + num(secs, 3) + " s"};
}

Outcome operator_rewrite() {
    std::mt19937_64 rng(kSeed);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    double worst = 0.0;
    for (int k = 0; k < kOperatorSets; ++k) {
        RegimeParams p;
        p.d = 0.05 + 0.9 * u(rng);
        p.b2 = u(rng) * std::min(p.d, (1.0 - p.d) / 2.0);
        p.b1 = p.b2 + u(rng) * (p.d - p.b2);
        p.b0 = 0.01 + u(rng);
        const FracDiffCoeffs g(p.d, kDefaultTruncation);
        std::vector<double> hist(kOperatorLags);
        for (auto& v : hist) v = 5.0 * u(rng) * u(rng);
        const double h_prev = 0.1 + 3.0 * u(rng);
        worst = std::max(worst, std::abs(figarch_step(p, g, h_prev, hist) -
                                         oracle::figarch_operator_step(p.b0, p.b1, p.b2, p.d, h_prev, hist)));
    }
    return {worst < kOperatorTol, "max |operator - expansion| = " + num(worst)};
}

Outcome stability_reproduction() {
    auto t0 = std::chrono::steady_clock::now();
    const auto sim = stability_report(simulation_spec());
    const double s1 = seconds_since(t0);
    t0 = std::chrono::steady_clock::now();
    const auto emp = stability_report(empirical_spec());
    const double s2 = seconds_since(t0);
    const bool ok = std::abs(sim.rho - kRhoSimTarget) <= kRhoTol && std::abs(emp.rho - kRhoEmpTarget) <= kRhoTol &&
                    sim.stable && emp.stable && s1 < kStabilitySeconds && s2 < kStabilitySeconds;
    return {ok, "rho(simulation set) = " + num(sim.rho, 6) + ", rho(empirical set) = " + num(emp.rho, 6) + ", " +
                    num(s1, 3) + " s / " + num(s2, 3) + " s"};
}

Outcome filter_correctness() {
    const ModelSpec s = simulation_spec();
    const auto sim = simulate_path(s, kFilterSteps + 1000, 1000, kSeed);
    const auto run = run_filter(s, sim.returns, init_filter(s, std::span<const double>(sim.returns).first(200)));
    double norm_err = 0.0;
    for (const auto& psi : run.psi) {
        double sum = 0.0;
        for (double p : psi) sum += p;
        norm_err = std::max(norm_err, std::abs(sum - 1.0));
    }

    ModelSpec same = s;
    same.regimes[1] = same.regimes[0];
    const auto rs = run_filter(same, sim.returns, init_filter(same, std::span<const double>(sim.returns).first(200)));
    double markov_err = 0.0;
    const Eigen::MatrixXd& P = same.transition.matrix();
    for (std::size_t t = 1; t < rs.psi.size(); ++t) {
        const Eigen::RowVector2d prev(rs.psi[t - 1][0], rs.psi[t - 1][1]);
        const Eigen::RowVector2d pred = prev * P;
        markov_err = std::max({markov_err, std::abs(pred(0) - rs.psi[t][0]), std::abs(pred(1) - rs.psi[t][1])});
    }

    bool bitwise = true;
    for (const WeightMode& mode : {WeightMode::logistic(), WeightMode::fixed(0.54)}) {
        ModelSpec one;
        one.regimes = {{0.41, 0.31, 0.31, 0.41, 0.18, 0.0, 0.51, 0.26}};
        one.weight = mode;
        const double h0 = presample_variance(std::span<const double>(sim.returns).first(200));
        const auto r1 = run_filter(one, sim.returns, init_filter_at(one, std::vector<double>{h0}));
        const auto path = regime_path(one.regimes[0], FracDiffCoeffs(0.51, one.trunc_K), mode, sim.returns, h0);
        for (std::size_t t = 0; t < path.h.size(); ++t) {
            bitwise = bitwise && r1.forecasts[t].variance == path.h[t] && r1.psi[t][0] == 1.0;
        }
    }
    return {norm_err <= kPsiTol && markov_err <= kPsiTol && bitwise,
            "max |sum psi - 1| = " + num(norm_err) + " over " + std::to_string(run.psi.size()) +
                " steps, identical-regime deviation = " + num(markov_err) + ", m=1 bitwise: " +
                (bitwise ? "yes" : "no")};
}

Outcome ffbs_exactness() {
    const auto t0 = std::chrono::steady_clock::now();
    const std::size_t T = 10;
    Rng gen(kSeed);
    std::normal_distribution<double> n01;
    Eigen::MatrixXd ll(T, 2);
    for (Eigen::Index t = 0; t < static_cast<Eigen::Index>(T); ++t) {
        ll(t, 0) = -0.5 * std::pow(n01(gen), 2);
        ll(t, 1) = -0.5 * std::pow(n01(gen), 2) - std::log(2.0);
    }
    const auto P = TransitionMatrix::two_state(0.85, 0.60);
    const auto exact = oracle::enumerate_marginals(ll, P.matrix(), stationary_distribution(P));
    std::vector<double> freq(T, 0.0);
    Rng rng(kSeed + 1);
    for (std::size_t k = 0; k < kFfbsDraws; ++k) {
        const auto z = ffbs_sample(ll, P, rng);
        for (std::size_t t = 0; t < T; ++t) freq[t] += z[t];
    }
    double worst_z = 0.0;
    for (std::size_t t = 0; t < T; ++t) {
        const double p = exact[t][1];
        const double se = std::sqrt(p * (1.0 - p) / static_cast<double>(kFfbsDraws));
        worst_z = std::max(worst_z, std::abs(freq[t] / kFfbsDraws - p) / se);
    }
    const double secs = seconds_since(t0);
    return {worst_z < kFfbsSe && secs < kFfbsSeconds,
            "largest deviation = " + num(worst_z, 3) + " MC standard errors, " + num(secs, 3) + " s"};
}

Outcome griddy_correctness() {
    const auto t0 = std::chrono::steady_clock::now();
    Rng rng(kSeed);
    const double crit = oracle::ks_critical_1pct(kGriddyDraws);
    std::vector<double> grid(33), flat(33, 0.0);
    for (std::size_t i = 0; i < grid.size(); ++i) grid[i] = static_cast<double>(i) / 32.0;
    std::vector<double> x(kGriddyDraws);
    for (auto& v : x) v = griddy_draw(grid, flat, rng);
    const double ks_flat = oracle::ks_statistic(x, [](double v) { return v; });

    std::vector<double> lgrid(101), lin(101);
    for (std::size_t i = 0; i < lgrid.size(); ++i) {
        lgrid[i] = static_cast<double>(i) / 100.0;
        lin[i] = std::log(lgrid[i]);
    }
    for (auto& v : x) v = griddy_draw(lgrid, lin, rng);
    const double ks_lin = oracle::ks_statistic(x, [](double v) { return v * v; });
    const double secs = seconds_since(t0);
    return {ks_flat < crit && ks_lin < crit && secs < kGriddySeconds,
            "KS flat = " + num(ks_flat) + ", KS linear = " + num(ks_lin) + ", 1% critical = " + num(crit) + ", " +
                num(secs, 3) + " s"};
}

Outcome parameter_recovery() {
    const auto t0 = std::chrono::steady_clock::now();
    const ModelSpec truth = simulation_spec();
    const auto sim = simulate_path(truth, 2000, 1000, kSeed);
    GibbsConfig cfg;
    cfg.iterations = kRecoveryIterations;
    cfg.warmup = kRecoveryWarmup;
    cfg.seed = kSeed;
    const FitModel model{ModelFamily::msst, 2, truth.trunc_K};
    const auto post = run_gibbs(sim.returns, model, PriorSpec::defaults(2), cfg);
    const auto slots = sampled_slots(model, false);
    std::size_t inside = 0;
    std::string misses;
    for (std::size_t k = 0; k < post.names.size(); ++k) {
        const double true_value = k < slots.size() ? slot_value(truth, slots[k])
                                                   : (post.names[k] == "p11" ? truth.transition(0, 0)
                                                      : post.names[k] == "p22" ? truth.transition(1, 1)
                                                                                 : NAN);
        if (post.names[k] == "p12" || post.names[k] == "p21") continue;
        const auto& s = post.summary[k];
        const double z = std::abs(s.mean - true_value) / s.sd;
        if (z <= kRecoverySd) {
            ++inside;
        } else {
            misses += " " + post.names[k] + "(" + num(z, 3) + " sd)";
        }
    }
    const double secs = seconds_since(t0);
    return {inside >= kRecoveryMinPass && secs <= kRecoverySeconds,
            std::to_string(inside) + "/16 posterior means within 4 sd" + (misses.empty() ? "" : "; outside:" + misses) +
                ", " + std::to_string(kRecoveryIterations) + "/" + std::to_string(kRecoveryWarmup) +
                " iterations, " + num(secs, 4) + " s"};
}

Outcome backtest_statistics() {
    const auto t0 = std::chrono::steady_clock::now();
    const double uc25 = kupiec_uc(25, 500, 0.05);
    const double uc20 = kupiec_uc(20, 500, 0.05);
    std::mt19937_64 rng(kSeed);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    double add_err = 0.0, oracle_err = 0.0;
    for (int k = 0; k < kLrSequences; ++k) {
        const std::size_t T = 2 + static_cast<std::size_t>(u(rng) * 500);
        const double phi = u(rng) * 0.3;
        const double rho = 0.01 + u(rng) * 0.2;
        std::vector<double> y(T);
        for (auto& v : y) v = u(rng) < phi ? -1.0 : 1.0;
        const auto rep = backtest(y, VarSeries{rho, -1.0, std::vector<double>(T, 0.0)});
        const auto o = oracle::lr_statistics(rep.exceptions.q, rho);
        add_err = std::max(add_err, std::abs(rep.lr_cc - (rep.lr_uc_shared + rep.lr_ind)));
        oracle_err = std::max({oracle_err, std::abs(rep.lr_uc - o.uc_full), std::abs(rep.lr_uc_shared - o.uc_shared),
                               std::abs(rep.lr_ind - o.ind), std::abs(rep.lr_cc - o.cc)});
    }
    std::bernoulli_distribution hit(0.05);
    int rejections = 0;
    for (int r = 0; r < kNullReps; ++r) {
        std::size_t n = 0;
        for (int t = 0; t < 500; ++t) n += hit(rng) ? 1 : 0;
        if (kupiec_uc(n, 500, 0.05) > kChi2Crit1) ++rejections;
    }
    const double rate = static_cast<double>(rejections) / kNullReps;
    const double secs = seconds_since(t0);
    const bool ok = uc25 == 0.0 && std::abs(uc20 - kUc20) <= kUcTol && add_err < kLrTol && oracle_err < kLrTol &&
                    rate >= kNullLo && rate <= kNullHi && secs < kBacktestSeconds;
    return {ok, "UC(25)=" + num(uc25) + ", UC(20)=" + num(uc20, 6) + ", additivity error " + num(add_err) +
                    ", oracle error " + num(oracle_err) + ", null rejection rate " + num(rate, 4) + ", " +
                    num(secs, 3) + " s"};
}

ForecastMetrics out_of_sample(const ModelSpec& spec, std::span<const double> y, std::size_t split) {
    const auto run = run_filter(spec, y, init_filter(spec, y.first(split)));
    return run_metrics(std::span<const ForecastRecord>(run.forecasts).subspan(split), y.subspan(split));
}

Outcome model_comparison() {
    const auto t0 = std::chrono::steady_clock::now();
    const auto sim = simulate_path(simulation_spec(), 2500, 1000, kSeed + 10);
    ReturnsDataset ds;
    ds.values = sim.returns;
    const std::size_t split = ds.split_index(2.0 / 3.0);
    const std::span<const double> y(sim.returns);

    GibbsConfig cfg;
    cfg.iterations = kCompareIterations;
    cfg.warmup = kCompareWarmup;
    cfg.seed = kSeed;
    const auto msst = run_gibbs(y.first(split), {ModelFamily::msst, 2, kDefaultTruncation}, PriorSpec::defaults(2), cfg);
    const auto hyg = run_gibbs(y.first(split), {ModelFamily::hygarch, 1, kDefaultTruncation}, PriorSpec::defaults(1), cfg);
    const auto a = out_of_sample(msst.posterior_mean_spec(), y, split);
    const auto b = out_of_sample(hyg.posterior_mean_spec(), y, split);
    const double secs = seconds_since(t0);
    return {a.rmse < b.rmse && a.llv > b.llv,
            "out-of-sample RMSE " + num(a.rmse) + " vs " + num(b.rmse) + ", LLV " + num(a.llv, 6) + " vs " +
                num(b.llv, 6) + " (MSST vs fixed-weight single regime, " + std::to_string(kCompareIterations) + "/" +
                std::to_string(kCompareWarmup) + " iterations), " + num(secs, 4) + " s"};
}

int run_cli(const std::string& args) {
    const std::string cmd = std::string("\"") + RVL_CLI_PATH + "\" " + args + " >/dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::vector<std::string> split_commas(const std::string& line) {
    std::vector<std::string> out;
    std::stringstream ss(line);
    std::string field;
    while (std::getline(ss, field, ',')) out.push_back(field);
    return out;
}

// Re-emits a CSV through the library readers and compares bytes.
bool round_trips(const fs::path& file, const fs::path& scratch) {
    const std::string text = read_text(file);
    const std::string header = text.substr(0, text.find('\n'));
    const auto names = split_commas(header);
    if (names.front() == "date") {
        std::vector<std::string> cols(names.begin() + 1, names.end());
        std::vector<std::vector<double>> values;
        std::vector<std::string> dates;
        for (const auto& c : cols) {
            const auto ds = ingest(file, SeriesKind::returns, c);
            dates = ds.dates;
            values.push_back(ds.values);
        }
        write_dated_csv(scratch, dates, cols, values);
        return read_text(scratch) == text;
    }
    std::string rebuilt = header + "\n";
    std::stringstream ss(text.substr(header.size() + 1));
    std::string line;
    while (std::getline(ss, line)) {
        const auto fields = split_commas(line);
        for (std::size_t i = 0; i < fields.size(); ++i) {
            if (i) rebuilt += ',';
            rebuilt += format_double(parse_double(fields[i]));
        }
        rebuilt += '\n';
    }
    return rebuilt == text;
}

Outcome pipeline() {
    const auto t0 = std::chrono::steady_clock::now();
    const fs::path dir = fs::temp_directory_path() / ("rvl_acceptance_" + std::to_string(::getpid()));
    fs::remove_all(dir);
    const std::string cfg = "--config \"" + std::string(RVL_SCENARIO_DIR) + "/two_state_msst.cfg\"";
    const std::string out = " --out \"" + dir.string() + "\"";
    const std::string data = " --data \"" + (dir / "returns.csv").string() + "\"";
    const std::string params = " --params \"" + (dir / "posterior.txt").string() + "\"";
    const std::string reduced = " --set gibbs.iterations=" + std::to_string(kPipelineIterations) +
                                " gibbs.warmup=" + std::to_string(kPipelineWarmup);
    std::vector<std::pair<std::string, int>> steps{
        {"simulate", run_cli("simulate " + cfg + out)},
        {"fit", run_cli("fit " + cfg + out + data + reduced)},
        {"stability", run_cli("stability " + cfg + out + params)},
        {"forecast", run_cli("forecast " + cfg + out + data + params)},
        {"backtest", run_cli("backtest " + cfg + out)},
    };
    bool ok = true;
    std::string codes;
    for (const auto& [name, code] : steps) {
        ok = ok && code == 0;
        codes += " " + name + "=" + std::to_string(code);
    }
    std::size_t checked = 0;
    std::string bad;
    if (ok) {
        const fs::path scratch = dir / "roundtrip.tmp";
        for (const auto& entry : fs::directory_iterator(dir)) {
            const fs::path p = entry.path();
            if (p == scratch) continue;
            try {
                bool same = false;
                if (p.extension() == ".csv") {
                    same = round_trips(p, scratch);
                } else if (p.extension() == ".txt" && p.filename() != "metrics_table.txt" &&
                           p.filename() != "backtest_table.txt") {
                    same = KeyValues::parse(read_text(p)).str() == read_text(p);
                } else {
                    continue;
                }
                ++checked;
                if (!same) bad += " " + p.filename().string();
            } catch (const std::exception& e) {
                bad += " " + p.filename().string() + "(" + e.what() + ")";
            }
        }
        fs::remove(scratch);
        ok = bad.empty() && checked > 0;
    }
    fs::remove_all(dir);
    const double secs = seconds_since(t0);
    return {ok, "exit codes:" + codes + "; " + std::to_string(checked) + " files round-tripped" +
                    (bad.empty() ? "" : ", mismatches:" + bad) + ", " + num(secs, 4) + " s"};
}

}  // namespace

int main() {
    const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
        {"fractional-differencing oracle", fracdiff_oracle},
        {"HYGARCH decomposition identity", hygarch_identity},
        {"operator-rewrite equivalence", operator_rewrite},
        {"stability reproduction", stability_reproduction},
        {"filter correctness", filter_correctness},
        {"FFBS exactness", ffbs_exactness},
        {"Griddy correctness", griddy_correctness},
        {"parameter recovery", parameter_recovery},
        {"backtest statistics", backtest_statistics},
        {"model-comparison ordering", model_comparison},
        {"end-to-end pipeline", pipeline},
    };
    int failures = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        Outcome o;
        try {
            o = criteria[i].second();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        if (!o.pass) ++failures;
        std::cout << (o.pass ? "PASS" : "FAIL") << " criterion " << (i + 1) << " (" << criteria[i].first
                  << "): " << o.detail << std::endl;
    }
    std::cout << (failures == 0 ? "all criteria passed" : std::to_string(failures) + " criteria failed") << "\n";
    return failures == 0 ? 0 : 1;
}
