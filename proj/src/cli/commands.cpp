#include "adamwarm/cli/commands.hpp"

#include "adamwarm/cli/json_config.hpp"
#include "adamwarm/errors.hpp"
#include "adamwarm/schedules.hpp"
#include "adamwarm/sim.hpp"
#include "adamwarm/stats.hpp"
#include "adamwarm/train/trainer.hpp"

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <limits>
#include <ostream>

#ifndef ADAMWARM_VERSION
#define ADAMWARM_VERSION "0.0.0"
#endif

namespace adamwarm::cli {

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

struct Common {
    std::string out_dir;
    std::string tag;
};

struct SimulateOpts {
    std::uint64_t params = 25000;
    std::uint64_t iters = 1000;
    double variance = 1e-9;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 0.0;
    std::vector<double> quantiles{0.025, 0.25, 0.5, 0.75, 0.975};
    std::uint64_t seed = 0;
    unsigned threads = 1;
    bool stationary = false;
};

struct ScheduleOpts {
    double beta2 = 0.999;
    std::vector<std::string> kinds{"linear-untuned", "expo-untuned", "radam"};
    double tau = 0.0;
    std::int64_t t_max = 4000;
    bool effective_period = false;
    double tolerance = kDefaultPeriodTolerance;
};

struct Fact1Opts {
    double beta2_min = 0.8;
    double beta2_max = 0.999;
    double beta2_step = 0.001;
    std::vector<double> extra{0.9995, 0.9999};
    std::int64_t t_max = 100000;
};

struct TrainOpts {
    std::string images;
    std::string labels;
    std::string optimizer = "adam";
    std::string warmup = "constant";
    double tau = 0.0;
    std::string ablation = "standard";
    double lr = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    double weight_decay = 1e-4;
    std::size_t batch_size = 256;
    std::int64_t iters = 2000;
    std::vector<std::size_t> hidden = train::kDefaultHidden;
    bool probe = false;
    std::size_t probe_samples = 64;
    std::size_t probe_params = 500;
    std::int64_t probe_every = 10;
    std::int64_t probe_until = 0;
    std::uint64_t seed = 0;
    bool compare_warmups = false;
    std::size_t seeds = 3;
};

const std::vector<std::string> kScheduleKinds{"constant",       "linear",       "exponential",
                                              "linear-untuned", "expo-untuned", "radam"};

std::string fmt(double x, int digits = 9) {
    if (std::isnan(x)) return "nan";
    char buf[48];
    std::snprintf(buf, sizeof buf, "%.*g", digits, x);
    return buf;
}

std::ofstream open_output(const fs::path& path) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw std::runtime_error(path.string() + ": cannot open for writing");
    return os;
}

class RunOutputs {
public:
    RunOutputs(const Common& c, std::string command) : dir_(c.out_dir), tag_(c.tag), command_(std::move(command)) {
        if (tag_.empty()) tag_ = command_;
        fs::create_directories(dir_);
    }

    fs::path file(const std::string& suffix) {
        std::string name = tag_ + suffix;
        files_.push_back(name);
        return dir_ / name;
    }

    void write_manifest(const json& config, const json& seed) const {
        json m{{"command", command_},
               {"config", config},
               {"seed", seed},
               {"version", ADAMWARM_VERSION},
               {"outputs", files_}};
        auto os = open_output(dir_ / (tag_ + ".manifest.json"));
        os << m.dump(2) << '\n';
    }

private:
    fs::path dir_;
    std::string tag_;
    std::string command_;
    std::vector<std::string> files_;
};

WarmupSchedule make_schedule(const std::string& kind, double tau, bool tau_given, double beta2) {
    auto need_tau = [&] {
        if (!tau_given) throw InvalidArgument("schedule '" + kind + "' needs --tau");
    };
    WarmupSchedule s;
    if (kind == "constant") {
        s = WarmupSchedule::constant_one();
    } else if (kind == "linear") {
        need_tau();
        s = WarmupSchedule::linear(tau);
    } else if (kind == "exponential") {
        need_tau();
        s = WarmupSchedule::exponential(tau);
    } else if (kind == "linear-untuned") {
        s = WarmupSchedule::linear_untuned(beta2);
    } else if (kind == "expo-untuned") {
        s = WarmupSchedule::exponential_untuned(beta2);
    } else if (kind == "radam") {
        s = WarmupSchedule::radam(beta2);
    } else {
        throw InvalidArgument("unknown schedule '" + kind + "'");
    }
    s.validate();
    return s;
}

// --- simulate ---------------------------------------------------------------

int cmd_simulate(const SimulateOpts& o, const Common& c, std::ostream& out) {
    sim::SimConfig cfg;
    cfg.n_params = o.params;
    cfg.n_iters = o.stationary ? 10000 : o.iters;
    cfg.grad_variance = o.variance;
    cfg.hp.beta1 = o.beta1;
    cfg.hp.beta2 = o.beta2;
    cfg.hp.epsilon = o.eps;
    cfg.quantiles = o.quantiles;
    if (o.stationary && std::find(cfg.quantiles.begin(), cfg.quantiles.end(), 0.5) == cfg.quantiles.end()) {
        cfg.quantiles.insert(std::upper_bound(cfg.quantiles.begin(), cfg.quantiles.end(), 0.5), 0.5);
    }
    cfg.seed = o.seed;
    cfg.threads = o.threads;
    cfg.validate();

    RunOutputs run(c, "simulate");
    const auto traj = sim::run_local_minimum_sim(cfg);
    {
        auto os = open_output(run.file(".csv"));
        sim::write_csv(os, traj);
    }
    if (o.stationary) {
        const double med = traj.rows.back().values[traj.column(0.5)];
        out << "stationary median |update|/alpha at t=" << cfg.n_iters << ": " << fmt(med, 6) << '\n';
    }
    json config{{"params", o.params},   {"iters", cfg.n_iters}, {"variance", o.variance},
                {"beta1", o.beta1},     {"beta2", o.beta2},     {"eps", o.eps},
                {"quantiles", o.quantiles}, {"seed", o.seed},   {"threads", o.threads},
                {"stationary", o.stationary}};
    run.write_manifest(config, o.seed);
    return kExitOk;
}

// --- schedule ---------------------------------------------------------------

int cmd_schedule(const ScheduleOpts& o, bool tau_given, const Common& c, std::ostream& out) {
    if (!(o.beta2 > 0.0 && o.beta2 < 1.0)) throw InvalidArgument("--beta2 must lie in (0, 1)");
    std::vector<std::pair<std::string, WarmupSchedule>> schedules;
    for (const auto& k : o.kinds) schedules.emplace_back(k, make_schedule(k, o.tau, tau_given, o.beta2));

    RunOutputs run(c, "schedule");
    for (const auto& [name, s] : schedules) {
        auto os = open_output(run.file("." + name + ".csv"));
        os << "t,omega\n";
        for (std::int64_t t = 1; t <= o.t_max; ++t) os << t << ',' << fmt(s.factor(t), 12) << '\n';
    }
    if (o.effective_period) {
        for (const auto& [name, s] : schedules) {
            out << name << ' ' << fmt(effective_warmup_period(s, o.tolerance), 10) << '\n';
        }
    }
    json config{{"beta2", o.beta2},
                {"kind", o.kinds},
                {"t-max", o.t_max},
                {"effective-period", o.effective_period},
                {"tolerance", o.tolerance}};
    if (tau_given) config["tau"] = o.tau;
    run.write_manifest(config, nullptr);
    return kExitOk;
}

// --- fact1 ------------------------------------------------------------------

int cmd_fact1(const Fact1Opts& o, const Common& c, std::ostream& out) {
    if (!(o.beta2_min >= 0.8)) throw InvalidArgument("--beta2-min must be at least 0.8");
    if (!(o.beta2_max < 1.0)) throw InvalidArgument("--beta2-max must be below 1");
    if (o.beta2_min > o.beta2_max) throw InvalidArgument("--beta2-min exceeds --beta2-max");
    if (!(o.beta2_step > 0.0)) throw InvalidArgument("--beta2-step must be positive");
    for (double b : o.extra) {
        if (!(b >= 0.8 && b < 1.0)) throw InvalidArgument("--extra values must lie in [0.8, 1)");
    }

    // Grid points are min + k * step, computed from k to avoid accumulated drift.
    std::vector<double> grid;
    const auto n = static_cast<std::int64_t>(std::floor((o.beta2_max - o.beta2_min) / o.beta2_step + 1e-9));
    for (std::int64_t k = 0; k <= n; ++k) grid.push_back(o.beta2_min + static_cast<double>(k) * o.beta2_step);
    grid.insert(grid.end(), o.extra.begin(), o.extra.end());
    std::sort(grid.begin(), grid.end());
    grid.erase(std::unique(grid.begin(), grid.end()), grid.end());

    RunOutputs run(c, "fact1");
    auto os = open_output(run.file(".csv"));
    os << "beta2,rho_4,rho_5,counterexamples\n";
    std::size_t bad = 0;
    for (double b : grid) {
        std::size_t bad_here = 0;
        for (std::int64_t t = 1; t <= o.t_max; ++t) {
            const double rho = radam_rho(t, b).rho_t;
            if ((rho <= 4.0) != (t <= 4)) {
                if (bad == 0) {
                    out << "counterexample: beta2=" << fmt(b, 17) << " t=" << t << " rho_t=" << fmt(rho, 17) << '\n';
                }
                ++bad;
                ++bad_here;
            }
        }
        os << fmt(b, 17) << ',' << fmt(radam_rho(4, b).rho_t, 17) << ',' << fmt(radam_rho(5, b).rho_t, 17) << ','
           << bad_here << '\n';
    }
    os.close();

    out << "grid: " << grid.size() << " beta2 values in [" << fmt(grid.front()) << ", " << fmt(grid.back())
        << "], t in [1, " << o.t_max << "]\n";
    if (o.t_max <= 4) {
        out << "note: t-max <= 4, so the direction t > 4 => rho_t > 4 is vacuous; only t <= 4 => rho_t <= 4 was "
               "checked\n";
    }
    json config{{"beta2-min", o.beta2_min},
                {"beta2-max", o.beta2_max},
                {"beta2-step", o.beta2_step},
                {"extra", o.extra},
                {"t-max", o.t_max}};
    run.write_manifest(config, nullptr);
    if (bad > 0) {
        out << bad << " counterexamples\n";
        return kExitRuntime;
    }
    out << "verified\n";
    return kExitOk;
}

// --- train ------------------------------------------------------------------

train::TrainConfig train_config(const TrainOpts& o, bool tau_given) {
    train::TrainConfig cfg;
    cfg.hp = {o.lr, o.beta1, o.beta2, o.eps, o.weight_decay};
    cfg.hp.validate();
    cfg.optimizer = optimizer_kind_from_string(o.optimizer);
    cfg.warmup = make_schedule(o.warmup, o.tau, tau_given, o.beta2);
    cfg.ablation = radam_ablation_from_string(o.ablation);
    cfg.batch_size = o.batch_size;
    cfg.n_iters = o.iters;
    cfg.hidden = o.hidden;
    cfg.probe = {o.probe, o.probe_samples, o.probe_params, o.probe_every, o.probe_until};
    cfg.seed = o.seed;
    return cfg;
}

json train_manifest_config(const TrainOpts& o, bool tau_given) {
    json j{{"images", o.images},
           {"labels", o.labels},
           {"optimizer", o.optimizer},
           {"warmup", o.warmup},
           {"ablation", o.ablation},
           {"lr", o.lr},
           {"beta1", o.beta1},
           {"beta2", o.beta2},
           {"eps", o.eps},
           {"weight-decay", o.weight_decay},
           {"batch-size", o.batch_size},
           {"iters", o.iters},
           {"hidden", o.hidden},
           {"probe", o.probe},
           {"probe-samples", o.probe_samples},
           {"probe-params", o.probe_params},
           {"probe-every", o.probe_every},
           {"probe-until", o.probe_until},
           {"seed", o.seed},
           {"compare-warmups", o.compare_warmups},
           {"seeds", o.seeds}};
    if (tau_given) j["tau"] = o.tau;
    return j;
}

int cmd_compare(const TrainOpts& o, const train::TrainConfig& base, const train::IdxDataset& data, RunOutputs& run,
                std::ostream& out) {
    const auto cmp = train::compare_warmups(base, data, o.seeds, [&](const train::ComparisonRun& r) {
        out << "  " << train::to_string(r.method) << " seed " << r.seed << ": loss " << fmt(r.initial_loss, 6)
            << " -> " << fmt(r.final_loss, 6) << '\n';
        out.flush();
    });
    {
        auto os = open_output(run.file(".compare.csv"));
        os << "method,seed,initial_loss,final_loss\n";
        for (const auto& r : cmp.runs) {
            os << train::to_string(r.method) << ',' << r.seed << ',' << fmt(r.initial_loss) << ','
               << fmt(r.final_loss) << '\n';
        }
    }

    char line[256];
    std::snprintf(line, sizeof line, "%-16s", "method");
    out << '\n' << line;
    for (std::size_t s = 0; s < o.seeds; ++s) {
        std::snprintf(line, sizeof line, " %10s", ("seed " + std::to_string(base.seed + s)).c_str());
        out << line;
    }
    std::snprintf(line, sizeof line, " %10s %10s\n", "mean", "std");
    out << line;
    for (std::size_t m = 0; m < cmp.runs.size(); m += o.seeds) {
        std::vector<double> finals;
        std::snprintf(line, sizeof line, "%-16s", std::string(train::to_string(cmp.runs[m].method)).c_str());
        out << line;
        for (std::size_t s = 0; s < o.seeds; ++s) {
            finals.push_back(cmp.runs[m + s].final_loss);
            std::snprintf(line, sizeof line, " %10.6f", finals.back());
            out << line;
        }
        const double mu = stats::mean(finals);
        double ss = 0.0;
        for (double f : finals) ss += (f - mu) * (f - mu);
        std::snprintf(line, sizeof line, " %10.6f %10.6f\n", mu, std::sqrt(ss / static_cast<double>(finals.size() - 1)));
        out << line;
    }
    out << "max cross-method gap of mean final loss: " << fmt(cmp.max_method_gap, 6) << '\n';
    out << "max cross-seed std: " << fmt(cmp.max_seed_std, 6) << " (bound 2x = " << fmt(2.0 * cmp.max_seed_std, 6)
        << ")\n";
    out << "methods interchangeable: " << (cmp.interchangeable ? "yes" : "no") << '\n';
    out << "all runs below half their initial loss: " << (cmp.all_halved ? "yes" : "no") << '\n';
    return kExitOk;
}

int cmd_train(const TrainOpts& o, bool tau_given, const Common& c, std::ostream& out) {
    const train::TrainConfig cfg = train_config(o, tau_given);
    const train::IdxDataset data = train::load_idx(o.images, o.labels);
    RunOutputs run(c, "train");
    out << "dataset: " << data.count << " images " << data.rows << "x" << data.cols << ", " << data.n_classes
        << " classes\n";

    if (o.compare_warmups) {
        if (o.probe) throw InvalidConfiguration("--probe cannot be combined with --compare-warmups");
        cmd_compare(o, cfg, data, run, out);
    } else {
        const auto result = train::train(cfg, data);
        {
            auto os = open_output(run.file(".loss.csv"));
            train::write_loss_csv(os, result.loss_curve);
        }
        if (o.probe) {
            auto os = open_output(run.file(".probe.csv"));
            train::write_probe_csv(os, result.probes);
        }
        {
            auto os = open_output(run.file(".checkpoint.json"));
            os << json{{"model", result.model.to_json()}, {"optimizer", result.optimizer_checkpoint}}.dump() << '\n';
        }
        out << "loss " << fmt(result.initial_loss, 6) << " -> " << fmt(result.final_loss, 6) << " after " << cfg.n_iters
            << " iterations\n";
    }
    run.write_manifest(train_manifest_config(o, tau_given), o.seed);
    return kExitOk;
}

std::string default_out_dir() {
    const char* env = std::getenv(kOutDirEnv);
    return (env != nullptr && *env != '\0') ? env : ".";
}

} // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Adam warmup analysis tool"};
    app.name("adamwarm");
    app.set_version_flag("--version", ADAMWARM_VERSION);
    app.config_formatter(std::make_shared<JsonConfig>());
    app.set_config("--config", "", "JSON config file or run manifest; command-line flags take precedence");
    app.require_subcommand(1);

    Common common;
    common.out_dir = default_out_dir();
    app.add_option("--out-dir", common.out_dir,
                   std::string("Output directory (default: $") + kOutDirEnv + " or the current directory)")
        ->configurable(false);
    app.add_option("--tag", common.tag, "Output file prefix (default: the command name)")->configurable(false);
    auto add_common = [](CLI::App* sub) {
        sub->configurable();
        sub->fallthrough();
    };
    const auto unit = CLI::Range(0.0, 1.0);

    SimulateOpts sim_o;
    auto* simulate = app.add_subcommand("simulate", "Adam update magnitudes at a simulated local minimum");
    simulate->add_option("--params", sim_o.params, "Number of simulated parameters")
        ->check(CLI::Range(std::uint64_t{1}, std::numeric_limits<std::uint64_t>::max()))
        ->capture_default_str();
    simulate->add_option("--iters", sim_o.iters, "Iterations")
        ->check(CLI::Range(std::uint64_t{1}, std::numeric_limits<std::uint64_t>::max()))
        ->capture_default_str();
    simulate->add_option("--variance", sim_o.variance, "Gradient variance")->check(CLI::PositiveNumber)->capture_default_str();
    simulate->add_option("--beta1", sim_o.beta1)->check(unit)->capture_default_str();
    simulate->add_option("--beta2", sim_o.beta2)->check(unit)->capture_default_str();
    simulate->add_option("--eps", sim_o.eps)->check(CLI::NonNegativeNumber)->capture_default_str();
    simulate->add_option("--quantiles", sim_o.quantiles, "Quantile levels in (0, 1)")->capture_default_str();
    simulate->add_option("--seed", sim_o.seed)->capture_default_str();
    simulate->add_option("--threads", sim_o.threads)->check(CLI::Range(1u, 1024u))->capture_default_str();
    simulate->add_flag("--stationary", sim_o.stationary, "Run 10000 iterations and print the final median");
    add_common(simulate);

    ScheduleOpts sch_o;
    auto* schedule = app.add_subcommand("schedule", "Warmup schedule tables and effective warmup periods");
    schedule->add_option("--beta2", sch_o.beta2)->capture_default_str();
    schedule->add_option("--kind", sch_o.kinds, "Schedules to tabulate")
        ->check(CLI::IsMember(kScheduleKinds))
        ->capture_default_str();
    auto* tau_opt = schedule->add_option("--tau", sch_o.tau, "Period for linear/exponential")->check(CLI::PositiveNumber);
    schedule->add_option("--t-max", sch_o.t_max, "Last tabulated iteration")
        ->check(CLI::Range(std::int64_t{1}, std::numeric_limits<std::int64_t>::max()))
        ->capture_default_str();
    schedule->add_flag("--effective-period", sch_o.effective_period, "Print the effective warmup period per schedule");
    schedule->add_option("--tolerance", sch_o.tolerance, "Truncation tolerance for infinite sums")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    add_common(schedule);

    Fact1Opts f1_o;
    auto* fact1 = app.add_subcommand("fact1", "Check rho_t <= 4 <=> t <= 4 over a beta2 grid");
    fact1->add_option("--beta2-min", f1_o.beta2_min)->capture_default_str();
    fact1->add_option("--beta2-max", f1_o.beta2_max)->capture_default_str();
    fact1->add_option("--beta2-step", f1_o.beta2_step)->capture_default_str();
    fact1->add_option("--extra", f1_o.extra, "Additional beta2 values")->capture_default_str();
    fact1->add_option("--t-max", f1_o.t_max)
        ->check(CLI::Range(std::int64_t{1}, std::numeric_limits<std::int64_t>::max()))
        ->capture_default_str();
    add_common(fact1);

    TrainOpts tr_o;
    auto* trainc = app.add_subcommand("train", "Train the MLP on an IDX digit dataset");
    trainc->add_option("--images", tr_o.images, "IDX image file (optionally gzipped)")->required();
    trainc->add_option("--labels", tr_o.labels, "IDX label file (optionally gzipped)")->required();
    trainc->add_option("--optimizer", tr_o.optimizer)
        ->check(CLI::IsMember({"sgd", "adam", "radam"}))
        ->capture_default_str();
    trainc->add_option("--warmup", tr_o.warmup)->check(CLI::IsMember(kScheduleKinds))->capture_default_str();
    auto* train_tau = trainc->add_option("--tau", tr_o.tau, "Period for linear/exponential warmup")
                          ->check(CLI::PositiveNumber);
    trainc->add_option("--ablation", tr_o.ablation, "RAdam behaviour for t <= 4")
        ->check(CLI::IsMember({"standard", "do-nothing", "jump-to-omega5", "linear-to-omega5"}))
        ->capture_default_str();
    trainc->add_option("--lr", tr_o.lr)->capture_default_str();
    trainc->add_option("--beta1", tr_o.beta1)->capture_default_str();
    trainc->add_option("--beta2", tr_o.beta2)->capture_default_str();
    trainc->add_option("--eps", tr_o.eps)->capture_default_str();
    trainc->add_option("--weight-decay", tr_o.weight_decay)->capture_default_str();
    trainc->add_option("--batch-size", tr_o.batch_size)->capture_default_str();
    trainc->add_option("--iters", tr_o.iters)
        ->check(CLI::Range(std::int64_t{1}, std::numeric_limits<std::int64_t>::max()))
        ->capture_default_str();
    trainc->add_option("--hidden", tr_o.hidden, "Hidden layer widths")->capture_default_str();
    trainc->add_flag("--probe", tr_o.probe, "Record gradient statistics");
    trainc->add_option("--probe-samples", tr_o.probe_samples, "Minibatch gradients per probe")->capture_default_str();
    trainc->add_option("--probe-params", tr_o.probe_params, "Sampled weights per matrix")->capture_default_str();
    trainc->add_option("--probe-every", tr_o.probe_every)->capture_default_str();
    trainc->add_option("--probe-until", tr_o.probe_until, "Last probed iteration (0: no limit)")->capture_default_str();
    trainc->add_option("--seed", tr_o.seed)->capture_default_str();
    trainc->add_flag("--compare-warmups", tr_o.compare_warmups,
                     "Train expo-untuned, linear-untuned and RAdam over --seeds seeds");
    trainc->add_option("--seeds", tr_o.seeds, "Seeds per method for --compare-warmups")
        ->check(CLI::Range(std::size_t{2}, std::size_t{1000}))
        ->capture_default_str();
    add_common(trainc);

    try {
        std::vector<std::string> reversed(args.rbegin(), args.rend());
        app.parse(reversed);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e, out, err);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e, out, err);
    } catch (const CLI::CallForVersion& e) {
        return app.exit(e, out, err);
    } catch (const CLI::ParseError& e) {
        app.exit(e, out, err);
        return kExitUsage;
    }

    try {
        if (simulate->parsed()) return cmd_simulate(sim_o, common, out);
        if (schedule->parsed()) return cmd_schedule(sch_o, tau_opt->count() > 0, common, out);
        if (fact1->parsed()) return cmd_fact1(f1_o, common, out);
        if (trainc->parsed()) return cmd_train(tr_o, train_tau->count() > 0, common, out);
    } catch (const InvalidArgument& e) {
        err << "usage error: " << e.what() << '\n';
        return kExitUsage;
    } catch (const InvalidConfiguration& e) {
        err << "usage error: " << e.what() << '\n';
        return kExitUsage;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return kExitRuntime;
    }
    return kExitUsage;
}

} // namespace adamwarm::cli
