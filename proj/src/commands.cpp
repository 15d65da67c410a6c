#include "rvl/commands.hpp"

#include "rvl/regime_filter.hpp"
#include "rvl/risk_backtest.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <mutex>
#include <ostream>

namespace rvl {

namespace {

namespace fs = std::filesystem;

std::string fmt(double v) {
    return format_double(v);
}

std::string fixed(double v, int digits) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*f", digits, v);
    return buf;
}

void add_stats(KeyValues& kv, const DescriptiveStats& s) {
    kv.set("count", std::to_string(s.count));
    kv.set("mean", fmt(s.mean));
    kv.set("sd", fmt(s.sd));
    kv.set("min", fmt(s.min));
    kv.set("max", fmt(s.max));
    kv.set("skewness", fmt(s.skewness));
    kv.set("excess_kurtosis", fmt(s.excess_kurtosis));
    kv.set("degenerate", s.degenerate ? "true" : "false");
}

ReturnsDataset load_data(const RunConfig& cfg) {
    if (!cfg.data_path) {
        throw std::invalid_argument("no input data: set data.path or pass --data");
    }
    return ingest(*cfg.data_path, cfg.data_kind);
}

std::string write_histogram(const fs::path& path, const std::vector<std::vector<double>>& draws, std::size_t col) {
    constexpr std::size_t kBins = 30;
    double lo = draws.front()[col];
    double hi = lo;
    for (const auto& r : draws) {
        lo = std::min(lo, r[col]);
        hi = std::max(hi, r[col]);
    }
    if (hi <= lo) {
        hi = lo + 1e-12;
    }
    std::vector<double> mass(kBins, 0.0);
    const double width = (hi - lo) / static_cast<double>(kBins);
    for (const auto& r : draws) {
        auto b = static_cast<std::size_t>((r[col] - lo) / width);
        mass[std::min(b, kBins - 1)] += 1.0 / static_cast<double>(draws.size());
    }
    std::string out = "bin_lo,bin_hi,mass\n";
    for (std::size_t b = 0; b < kBins; ++b) {
        out += fmt(lo + width * static_cast<double>(b)) + "," + fmt(lo + width * static_cast<double>(b + 1)) + "," +
               fmt(mass[b]) + "\n";
    }
    write_text(path, out);
    return out;
}

std::string level_label(double rho) {
    return fmt(rho);
}

}  // namespace

int cmd_simulate(const RunConfig& cfg, std::ostream& log) {
    if (cfg.sim_T == 0) {
        throw std::invalid_argument("simulate.T must be positive");
    }
    if (cfg.burn_in >= cfg.sim_T) {
        throw std::invalid_argument("simulate.burn_in must be smaller than simulate.T");
    }
    const ModelSpec spec = cfg.model_spec();
    const SimulatedPath path = simulate_path(spec, cfg.sim_T, cfg.burn_in, cfg.seed);

    std::vector<std::string> dates(path.returns.size());
    std::vector<double> states(path.states.size());
    for (std::size_t t = 0; t < dates.size(); ++t) {
        dates[t] = synthetic_date(t);
        states[t] = static_cast<double>(path.states[t] + 1);
    }
    write_dated_csv(cfg.out_dir / "returns.csv", dates, {"value"}, {path.returns});
    write_dated_csv(cfg.out_dir / "states.csv", dates, {"value"}, {states});

    KeyValues report;
    report.set("command", "simulate");
    report.set("seed", std::to_string(cfg.seed));
    report.set("T", std::to_string(cfg.sim_T));
    report.set("burn_in", std::to_string(cfg.burn_in));
    report.set("family", std::string(family_name(cfg.family)));
    report.set("m", std::to_string(spec.m()));
    const DescriptiveStats stats = describe(path.returns);
    add_stats(report, stats);
    for (std::size_t j = 0; j < spec.m(); ++j) {
        const auto visits = std::count(path.states.begin(), path.states.end(), static_cast<int>(j));
        report.set("state." + std::to_string(j + 1) + ".share",
                   fmt(static_cast<double>(visits) / static_cast<double>(path.states.size())));
    }
    write_text(cfg.out_dir / "simulate_report.txt", report.str());
    log << "simulated " << stats.count << " observations: mean " << fixed(stats.mean, 3) << ", sd "
        << fixed(stats.sd, 3) << ", min " << fixed(stats.min, 3) << ", max " << fixed(stats.max, 3)
        << ", skewness " << fixed(stats.skewness, 3) << ", excess kurtosis " << fixed(stats.excess_kurtosis, 3)
        << "\n";
    return kExitOk;
}

int cmd_stability(const RunConfig& cfg, std::ostream& log) {
    const ModelSpec spec = cfg.model_spec();
    const StabilityReport rep = stability_report(spec, cfg.lag_cap);
    KeyValues kv;
    kv.set("command", "stability");
    kv.set("m", std::to_string(spec.m()));
    kv.set("fracdiff.K", std::to_string(spec.trunc_K));
    kv.set("lag_cap", std::to_string(cfg.lag_cap));
    kv.set("rho", fmt(rep.rho));
    kv.set("stable", rep.stable ? "true" : "false");
    kv.set("bound", rep.bound ? fmt(*rep.bound) : "none");
    for (std::size_t j = 0; j < rep.pi.size(); ++j) {
        kv.set("pi." + std::to_string(j + 1), fmt(rep.pi[j]));
    }
    write_text(cfg.out_dir / "stability_report.txt", kv.str());
    log << "spectral radius " << fixed(rep.rho, 6) << (rep.stable ? " (stable" : " (unstable");
    if (rep.bound) {
        log << ", second-moment bound " << fixed(*rep.bound, 4);
    }
    log << ")\n";
    return rep.stable ? kExitOk : kExitUnstable;
}

int cmd_fit(const RunConfig& cfg, std::ostream& log) {
    const ReturnsDataset data = load_data(cfg);
    const std::size_t split = data.split_index(cfg.split);
    const std::vector<double> y(data.values.begin(), data.values.begin() + static_cast<std::ptrdiff_t>(split));
    const FitModel model = cfg.fit_model();
    const PriorSpec prior = cfg.prior_spec();
    GibbsConfig gibbs = cfg.gibbs;
    gibbs.seed = cfg.seed;

    GibbsProgress progress;
    std::mutex log_mutex;
    if (cfg.progress) {
        progress = [&log, &log_mutex, total = gibbs.iterations](std::size_t chain, std::size_t it) {
            if ((it + 1) % 500 == 0 || it + 1 == total) {
                const std::lock_guard lock(log_mutex);
                log << "chain " << chain << ": " << (it + 1) << "/" << total << "\n" << std::flush;
            }
        };
    }
    const PosteriorDraws post = run_gibbs(y, model, prior, gibbs, std::nullopt, progress);

    std::string draws = "chain,iteration";
    for (const auto& n : post.names) {
        draws += "," + n;
    }
    draws += "\n";
    for (std::size_t r = 0; r < post.draws.size(); ++r) {
        draws += std::to_string(post.chain_of_row[r]) + "," + std::to_string(post.iteration_of_row[r]);
        for (double v : post.draws[r]) {
            draws += "," + fmt(v);
        }
        draws += "\n";
    }
    write_text(cfg.out_dir / "draws.csv", draws);

    KeyValues kv;
    kv.set("command", "fit");
    kv.set("model.family", std::string(family_name(model.family)));
    kv.set("model.m", std::to_string(model.m));
    kv.set("seed", std::to_string(cfg.seed));
    kv.set("gibbs.iterations", std::to_string(gibbs.iterations));
    kv.set("gibbs.warmup", std::to_string(gibbs.warmup));
    kv.set("gibbs.grid_points", std::to_string(gibbs.grid_points));
    kv.set("gibbs.chains", std::to_string(gibbs.chains));
    kv.set("in_sample.T", std::to_string(y.size()));
    kv.set("retained", std::to_string(post.draws.size()));
    for (std::size_t k = 0; k < post.names.size(); ++k) {
        kv.set("mean." + post.names[k], fmt(post.summary[k].mean));
        kv.set("sd." + post.names[k], fmt(post.summary[k].sd));
        kv.set("mcse." + post.names[k], fmt(post.summary[k].mcse));
    }
    for (std::size_t c = 0; c < post.per_chain.size() && post.per_chain.size() > 1; ++c) {
        for (std::size_t k = 0; k < post.names.size(); ++k) {
            kv.set("chain." + std::to_string(c) + ".mean." + post.names[k], fmt(post.per_chain[c][k].mean));
        }
    }
    const ModelSpec mean_spec = post.posterior_mean_spec();
    kv.merge(spec_to_params(mean_spec));
    write_text(cfg.out_dir / "posterior.txt", kv.str());

    for (std::size_t k = 0; k < post.names.size(); ++k) {
        write_histogram(cfg.out_dir / ("hist_" + post.names[k] + ".csv"), post.draws, k);
    }

    const auto probs = post.state_probabilities();
    std::vector<double> high(probs.size());
    for (std::size_t t = 0; t < probs.size(); ++t) {
        high[t] = probs[t].back();
    }
    write_dated_csv(cfg.out_dir / "state_prob.csv",
                    std::vector<std::string>(data.dates.begin(), data.dates.begin() + static_cast<std::ptrdiff_t>(split)),
                    {"value"}, {high});

    if (cfg.save_states) {
        std::string rle = "chain,iteration,runs\n";
        for (std::size_t r = 0; r < post.states.size(); ++r) {
            rle += std::to_string(post.chain_of_row[r]) + "," + std::to_string(post.iteration_of_row[r]) + ",";
            const auto& path = post.states[r];
            std::size_t start = 0;
            for (std::size_t t = 1; t <= path.size(); ++t) {
                if (t == path.size() || path[t] != path[start]) {
                    if (start > 0) rle += ' ';
                    rle += std::to_string(path[start] + 1) + ":" + std::to_string(t - start);
                    start = t;
                }
            }
            rle += "\n";
        }
        write_text(cfg.out_dir / "states_rle.csv", rle);
    }

    log << "retained " << post.draws.size() << " draws\n";
    for (std::size_t k = 0; k < post.names.size(); ++k) {
        log << "  " << post.names[k] << "  mean " << fixed(post.summary[k].mean, 4) << "  sd "
            << fixed(post.summary[k].sd, 4) << "\n";
    }
    return kExitOk;
}

int cmd_forecast(const RunConfig& cfg, std::ostream& log) {
    const ModelSpec spec = cfg.model_spec();
    const ReturnsDataset data = load_data(cfg);
    const std::size_t split = data.split_index(cfg.split);
    const std::span<const double> y(data.values);
    const FilterState init = init_filter(spec, y.first(split));
    const FilterRun run = run_filter(spec, y, init);

    const std::size_t T = y.size();
    const std::size_t m = spec.m();
    std::vector<std::vector<double>> cols(4 + m, std::vector<double>(T));
    std::vector<std::string> names{"return", "variance", "log_density", "in_sample"};
    for (std::size_t j = 0; j < m; ++j) {
        names.push_back("psi." + std::to_string(j + 1));
    }
    for (std::size_t t = 0; t < T; ++t) {
        cols[0][t] = y[t];
        cols[1][t] = run.forecasts[t].variance;
        cols[2][t] = run.forecasts[t].log_density;
        cols[3][t] = t < split ? 1.0 : 0.0;
        for (std::size_t j = 0; j < m; ++j) {
            cols[4 + j][t] = run.psi[t][j];
        }
    }
    write_dated_csv(cfg.out_dir / "forecast.csv", data.dates, names, cols);
    write_dated_csv(cfg.out_dir / "high_vol_prob.csv", data.dates, {"value"}, {cols[3 + m]});

    const std::span<const ForecastRecord> fc(run.forecasts);
    const ForecastMetrics in = run_metrics(fc.first(split), y.first(split));
    const ForecastMetrics out = run_metrics(fc.subspan(split), y.subspan(split));
    KeyValues kv;
    kv.set("command", "forecast");
    kv.set("model.family", std::string(family_name(cfg.family)));
    kv.set("model.m", std::to_string(m));
    kv.set("in_sample.T", std::to_string(split));
    kv.set("in_sample.rmse", fmt(in.rmse));
    kv.set("in_sample.llv", fmt(in.llv));
    kv.set("out_of_sample.T", std::to_string(T - split));
    kv.set("out_of_sample.rmse", fmt(out.rmse));
    kv.set("out_of_sample.llv", fmt(out.llv));
    write_text(cfg.out_dir / "metrics.txt", kv.str());

    const std::string label = cfg.family == ModelFamily::msst ? "MSST-HYGARCH"
                              : cfg.family == ModelFamily::st ? "ST-HYGARCH"
                                                              : "HYGARCH";
    char line[256];
    std::string table;
    std::snprintf(line, sizeof line, "%-14s %22s %22s\n", "", "In-Sample", "Out-of-Sample");
    table += line;
    std::snprintf(line, sizeof line, "%-14s %10s %11s %10s %11s\n", "Model", "RMSE", "LLV", "RMSE", "LLV");
    table += line;
    std::snprintf(line, sizeof line, "%-14s %10.3f %11.1f %10.3f %11.1f\n", label.c_str(), in.rmse, in.llv, out.rmse,
                  out.llv);
    table += line;
    write_text(cfg.out_dir / "metrics_table.txt", table);
    log << table;
    return kExitOk;
}

int cmd_backtest(const RunConfig& cfg, std::ostream& log) {
    const fs::path path = cfg.forecast_path ? *cfg.forecast_path : cfg.out_dir / "forecast.csv";
    const ReturnsDataset returns = ingest(path, SeriesKind::returns, "return");
    const ReturnsDataset variances = ingest(path, SeriesKind::returns, "variance");
    const ReturnsDataset flags = ingest(path, SeriesKind::returns, "in_sample");

    std::vector<double> y_in, h_in, y_out, h_out;
    std::vector<std::string> dates_out;
    for (std::size_t t = 0; t < returns.size(); ++t) {
        if (flags.values[t] != 0.0) {
            if (!dates_out.empty()) {
                throw DataError("in-sample rows must precede out-of-sample rows", t + 2);
            }
            y_in.push_back(returns.values[t]);
            h_in.push_back(variances.values[t]);
        } else {
            y_out.push_back(returns.values[t]);
            h_out.push_back(variances.values[t]);
            dates_out.push_back(returns.dates[t]);
        }
    }
    if (y_out.size() < 2) {
        throw std::invalid_argument("backtest needs at least two out-of-sample forecasts");
    }

    KeyValues kv;
    kv.set("command", "backtest");
    kv.set("T", std::to_string(y_out.size()));
    kv.set("quantile_source", cfg.normal_fallback ? "normal" : "empirical");
    std::vector<BacktestReport> reports;
    for (double rho : cfg.risk_levels) {
        const double q = cfg.normal_fallback ? normal_quantile(rho) : standardized_quantile(y_in, h_in, rho);
        const VarSeries var = make_var_series(h_out, rho, q);
        BacktestReport rep = backtest(y_out, var);
        const std::string p = "level." + level_label(rho) + ".";
        kv.set(p + "quantile", fmt(q));
        kv.set(p + "expected", fmt(rep.expected));
        kv.set(p + "exceptions", std::to_string(rep.n));
        kv.set(p + "lr_uc", fmt(rep.lr_uc));
        kv.set(p + "lr_uc_shared", fmt(rep.lr_uc_shared));
        kv.set(p + "lr_ind", fmt(rep.lr_ind));
        kv.set(p + "lr_cc", fmt(rep.lr_cc));
        kv.set(p + "pass_uc", rep.pass_uc ? "true" : "false");
        kv.set(p + "pass_ind", rep.pass_ind ? "true" : "false");
        kv.set(p + "pass_cc", rep.pass_cc ? "true" : "false");

        std::vector<double> q_col(rep.exceptions.q.begin(), rep.exceptions.q.end());
        write_dated_csv(cfg.out_dir / ("exceptions_" + level_label(rho) + ".csv"), dates_out,
                        {"return", "var", "q"}, {y_out, var.var, q_col});
        reports.push_back(std::move(rep));
    }
    write_text(cfg.out_dir / "backtest_report.txt", kv.str());

    char cell[64];
    std::string table = "          ";
    for (const auto& r : reports) {
        std::snprintf(cell, sizeof cell, "%14s", ("rho=" + fixed(r.rho, 2)).c_str());
        table += cell;
    }
    table += "\n";
    auto row = [&](const char* name, auto value) {
        table += name;
        for (const auto& r : reports) {
            table += value(r);
        }
        table += "\n";
    };
    row("Ex.e      ", [&](const BacktestReport& r) {
        std::snprintf(cell, sizeof cell, "%14.0f", r.expected);
        return std::string(cell);
    });
    row("Ex.       ", [&](const BacktestReport& r) {
        std::snprintf(cell, sizeof cell, "%14zu", r.n);
        return std::string(cell);
    });
    auto stat = [&](double v, bool pass) {
        std::snprintf(cell, sizeof cell, "%10.3f (%c)", v, pass ? '+' : '-');
        return std::string(cell);
    };
    row("LR_UC     ", [&](const BacktestReport& r) { return stat(r.lr_uc, r.pass_uc); });
    row("LR_IND    ", [&](const BacktestReport& r) { return stat(r.lr_ind, r.pass_ind); });
    row("LR_CC     ", [&](const BacktestReport& r) { return stat(r.lr_cc, r.pass_cc); });
    table += "(+) not rejected at 5%: 3.84 for UC and IND, 5.99 for CC\n";
    write_text(cfg.out_dir / "backtest_table.txt", table);
    log << table;
    return kExitOk;
}

int run_command(std::string_view name, const RunConfig& cfg, std::ostream& log, std::ostream& err) {
    try {
        std::error_code ec;
        fs::create_directories(cfg.out_dir, ec);
        if (ec) {
            throw IoError("cannot create output directory " + cfg.out_dir.string() + ": " + ec.message());
        }
        if (name == "simulate") return cmd_simulate(cfg, log);
        if (name == "stability") return cmd_stability(cfg, log);
        if (name == "fit") return cmd_fit(cfg, log);
        if (name == "forecast") return cmd_forecast(cfg, log);
        if (name == "backtest") return cmd_backtest(cfg, log);
        throw std::invalid_argument("unknown command '" + std::string(name) + "'");
    } catch (const IoError& e) {
        err << "error: " << e.what() << "\n";
        return kExitIo;
    } catch (const fs::filesystem_error& e) {
        err << "error: " << e.what() << "\n";
        return kExitIo;
    } catch (const std::invalid_argument& e) {
        err << "error: " << e.what() << "\n";
        return kExitValidation;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return kExitComputation;
    }
}

}  // namespace rvl
