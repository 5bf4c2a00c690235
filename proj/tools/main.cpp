// Command-line front door: dataset generation, training, reconstruction and
// kernel sweeps as reproducible file-based experiments.

#include <cstdint>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "qdl/io.hpp"

namespace {

using qdl::json;

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitIo = 3;
constexpr int kExitDiverged = 4;

struct SmeGenConfig {
    double omega = 1.0;
    double gamma = 0.5;
    double eta = 0.4;
    double t_max = 4.0;
    double dt = 0.01;
};

SmeGenConfig parse_sme_gen_config(const json& j) {
    qdl::reject_unknown_keys(
        j, {"format_version", "omega", "gamma", "eta", "t_max", "dt"}, "sme config");
    qdl::check_format_version(j, "sme config");
    SmeGenConfig c;
    c.omega = j.value("omega", c.omega);
    c.gamma = j.value("gamma", c.gamma);
    c.eta = j.value("eta", c.eta);
    c.t_max = j.value("t_max", c.t_max);
    c.dt = j.value("dt", c.dt);
    if (!(c.t_max > 0.0) || !(c.dt > 0.0)) throw qdl::ConfigError("t_max and dt must be > 0");
    if (!(c.gamma >= 0.0)) throw qdl::ConfigError("gamma must be >= 0");
    if (!(c.eta > 0.0) || !(c.eta < 1.0))
        throw qdl::ConfigError("eta must lie strictly in (0, 1)");
    return c;
}

qdl::SpinStarDatasetConfig parse_spinstar_config(const json& j) {
    qdl::reject_unknown_keys(j,
                             {"format_version", "n_bath", "omega0", "coupling_min",
                              "coupling_max", "couplings", "segments", "drive_amp",
                              "t_max", "sim_dt", "model_dt", "shots", "bath_initial",
                              "beta"},
                             "spin-star config");
    qdl::check_format_version(j, "spin-star config");
    qdl::SpinStarDatasetConfig c;
    c.n_bath = j.value("n_bath", c.n_bath);
    c.omega0 = j.value("omega0", c.omega0);
    c.coupling_min = j.value("coupling_min", c.coupling_min);
    c.coupling_max = j.value("coupling_max", c.coupling_max);
    c.segments = j.value("segments", c.segments);
    c.drive_amp = j.value("drive_amp", c.drive_amp);
    c.t_max = j.value("t_max", c.t_max);
    c.sim_dt = j.value("sim_dt", c.sim_dt);
    c.model_dt = j.value("model_dt", c.model_dt);
    c.shots = j.value("shots", c.shots);
    c.beta = j.value("beta", c.beta);
    if (j.contains("couplings")) c.couplings = j.at("couplings").get<std::vector<double>>();
    const std::string bath = j.value("bath_initial", "ground");
    if (bath == "ground")
        c.bath_initial = qdl::BathInitial::AllGround;
    else if (bath == "thermal")
        c.bath_initial = qdl::BathInitial::Thermal;
    else
        throw qdl::ConfigError("bath_initial must be \"ground\" or \"thermal\"");
    if (c.n_bath < 0 || c.segments < 1) throw qdl::ConfigError("bad spin-star geometry");
    return c;
}

json training_summary(const qdl::SwarmResult& swarm) {
    json runs = json::array();
    for (const auto& run : swarm.runs)
        runs.push_back({{"seed", run.seed},
                        {"final_cost", run.result.final_cost},
                        {"steps", run.result.steps},
                        {"diverged", run.result.diverged}});
    json out{{"runs", std::move(runs)}, {"best", swarm.best}};
    if (swarm.best >= 0)
        out["cost_history"] = swarm.runs[swarm.best].result.cost_history;
    return out;
}

int cmd_gen_sme_data(const std::string& config_path, const std::string& out_dir, int S,
                     std::uint64_t seed, int threads) {
    if (S < 1) throw qdl::ConfigError("--trajectories must be >= 1");
    const json cfg_json = qdl::load_json_file(config_path);
    const SmeGenConfig cfg = parse_sme_gen_config(cfg_json);

    const int n_steps = static_cast<int>(std::lround(cfg.t_max / cfg.dt));
    const qdl::TimeGrid grid(0.0, cfg.dt, n_steps);
    const qdl::SmeTruth truth{cfg.omega, cfg.gamma, cfg.eta};
    const qdl::SmeDataset ds = qdl::emit_sme_dataset(truth, grid, S, seed, threads);

    json effective{{"command", "gen-sme-data"}, {"config", cfg_json},
                   {"trajectories", S}, {"seed", seed}};
    qdl::write_sme_dataset(out_dir, ds, effective);
    std::cout << "wrote " << S << " weak-measurement records to " << out_dir << "\n"
              << "grid: dt=" << cfg.dt << " n_steps=" << n_steps << "\n"
              << "truth file: " << out_dir << "/metadata.json\n";
    return kExitOk;
}

int cmd_train_sme(const std::string& data_dir, const std::string& out_path, int swarm_n,
                  std::uint64_t seed, int max_steps, double lr, int threads) {
    const qdl::SmeDataset ds = qdl::read_sme_dataset(data_dir);
    qdl::SmeModel model{ds.grid};

    qdl::TrainBudget budget;
    budget.max_steps = max_steps;
    budget.adam.lr = lr;

    qdl::RunLog log(out_path.empty() ? "" : out_path + ".log.jsonl");
    auto cost = [&](const std::vector<qdl::DiffScalar>& th) {
        return qdl::cost_weak(model, th, ds.records, threads);
    };
    const std::vector<double> base = qdl::SmeModel::pack(0.8, 0.3, 0.5);
    auto init = [&](std::uint64_t run_seed) {
        return qdl::jitter_init(base, 0.5, run_seed);
    };
    const qdl::SwarmResult swarm = qdl::swarm_train(swarm_n, init, cost, budget, seed);

    json effective{{"command", "train-sme"}, {"data_dir", data_dir},
                   {"swarm", swarm_n}, {"seed", seed},
                   {"max_steps", max_steps}, {"lr", lr}};
    json out;
    out["format_version"] = qdl::kFormatVersion;
    out["config"] = effective;
    out["config_hash"] = qdl::config_hash(effective);
    out["model"] = {{"kind", "sme"}, {"grid", qdl::grid_to_json(ds.grid)},
                    {"rho0", "ground"}};
    out["training"] = training_summary(swarm);

    const bool failed = swarm.best < 0;
    const qdl::TrainResult& shown =
        failed ? swarm.runs.front().result : swarm.runs[swarm.best].result;
    out["params"] = qdl::generator_set_to_json(
        qdl::values_of(model.generators(shown.final_theta)));
    const auto phys = qdl::SmeModel::physical(shown.final_theta);
    out["physical"] = {{"omega", phys.omega}, {"gamma", phys.gamma}, {"eta", phys.eta}};
    for (std::size_t r = 0; r < swarm.runs.size(); ++r)
        for (std::size_t s = 0; s < swarm.runs[r].result.cost_history.size(); ++s)
            log.log(static_cast<int>(r), static_cast<long>(s),
                    swarm.runs[r].result.cost_history[s],
                    s + 1 == swarm.runs[r].result.cost_history.size()
                        ? swarm.runs[r].result.final_theta
                        : std::vector<double>{});
    if (!out_path.empty()) qdl::save_json_file(out_path, out);

    if (failed) {
        std::cerr << "every swarm run diverged; partial results written\n";
        return kExitDiverged;
    }
    std::cout << "fitted omega=" << phys.omega << " gamma=" << phys.gamma
              << " eta=" << phys.eta << " (cost " << shown.final_cost << ", "
              << shown.steps << " steps)\n";
    return kExitOk;
}

int cmd_reconstruct(const std::string& params_path, const std::string& record_path,
                    const std::string& out_path) {
    const json res = qdl::load_json_file(params_path);
    qdl::check_format_version(res, "params file");
    if (!res.contains("params") || !res.contains("model"))
        throw qdl::ConfigError(params_path + ": expected params and model sections");
    const qdl::GeneratorSet<double> gen = qdl::generator_set_from_json(res.at("params"));
    const qdl::TimeGrid grid = qdl::grid_from_json(res.at("model").at("grid"));

    const std::vector<double> record = qdl::read_record_csv(record_path);
    if (static_cast<int>(record.size()) != grid.n_steps)
        throw qdl::ConfigError("record length != model grid n_steps");
    const auto traj =
        qdl::sme_reconstruct(gen, grid, record, qdl::ground_state<double>());
    const json effective{{"command", "reconstruct"}, {"params", params_path},
                         {"record", record_path}};
    qdl::save_with_provenance(out_path, qdl::trajectory_csv(grid, traj), effective);
    std::cout << "wrote reconstructed trajectory to " << out_path << "\n";
    return kExitOk;
}

int cmd_gen_spinstar_data(const std::string& config_path, const std::string& out_dir,
                          int S, int T, std::uint64_t seed, int threads) {
    if (S < 1) throw qdl::ConfigError("--trajectories must be >= 1");
    if (T < 1) throw qdl::ConfigError("--samples must be >= 1");
    const json cfg_json = qdl::load_json_file(config_path);
    const qdl::SpinStarDatasetConfig cfg = parse_spinstar_config(cfg_json);
    const qdl::PopulationDataset ds =
        qdl::emit_population_dataset(cfg, S, T, seed, threads);
    json effective{{"command", "gen-spinstar-data"}, {"config", cfg_json},
                   {"trajectories", S}, {"samples", T}, {"seed", seed}};
    qdl::write_population_dataset(out_dir, ds, effective);
    std::cout << "wrote " << S << " trajectories x " << T << " samples to " << out_dir
              << "\n";
    return kExitOk;
}

int cmd_train_nz(const std::string& data_dir, const std::string& val_dir,
                 const std::string& channels, int kernel_length, int swarm_n,
                 std::uint64_t seed, const std::string& out_path, int max_steps,
                 double lr, double dt, int threads) {
    const qdl::PopulationDataset ds = qdl::read_population_dataset(data_dir);
    qdl::KernelModel model;
    model.omega0 = ds.omega0;
    model.dt = dt > 0.0 ? dt : ds.model_dt;
    model.t_max = ds.t_max;
    model.bases = qdl::parse_channel_set(channels);
    model.kernel_length = kernel_length;
    if (kernel_length < 0) throw qdl::ConfigError("--kernel-length must be >= 0");

    qdl::TrainBudget budget;
    budget.max_steps = max_steps;
    budget.adam.lr = lr;

    const double rough = qdl::rough_lindblad_rate(ds, model.dt, ds.t_max, threads);
    auto cost = [&](const std::vector<qdl::DiffScalar>& th) {
        return qdl::cost_population(model, th, ds, threads);
    };
    auto init = [&](std::uint64_t run_seed) {
        return qdl::kernel_init(model, rough, run_seed);
    };
    const qdl::SwarmResult swarm = qdl::swarm_train(swarm_n, init, cost, budget, seed);

    json effective{{"command", "train-nz"}, {"data_dir", data_dir},
                   {"channels", channels}, {"kernel_length", kernel_length},
                   {"swarm", swarm_n}, {"seed", seed}, {"max_steps", max_steps},
                   {"lr", lr}, {"dt", model.dt}};
    json out;
    out["format_version"] = qdl::kFormatVersion;
    out["config"] = effective;
    out["config_hash"] = qdl::config_hash(effective);
    out["model"] = {{"kind", kernel_length > 0 ? "nz" : "lindblad"},
                    {"omega0", model.omega0}, {"dt", model.dt},
                    {"t_max", model.t_max}, {"channels", channels},
                    {"kernel_length", kernel_length}};
    out["training"] = training_summary(swarm);

    const bool failed = swarm.best < 0;
    const qdl::TrainResult& shown =
        failed ? swarm.runs.front().result : swarm.runs[swarm.best].result;
    out["params"] = qdl::generator_set_to_json(
        qdl::values_of(model.generators(shown.final_theta)));
    json metrics{{"train_rmse", std::sqrt(shown.final_cost)}};
    if (!val_dir.empty()) {
        const qdl::PopulationDataset val = qdl::read_population_dataset(val_dir);
        metrics["val_rmse"] = qdl::population_rmse(model, shown.final_theta, val, threads);
    }
    out["metrics"] = metrics;

    qdl::RunLog log(out_path.empty() ? "" : out_path + ".log.jsonl");
    for (std::size_t r = 0; r < swarm.runs.size(); ++r)
        for (std::size_t s = 0; s < swarm.runs[r].result.cost_history.size(); ++s)
            log.log(static_cast<int>(r), static_cast<long>(s),
                    swarm.runs[r].result.cost_history[s],
                    s + 1 == swarm.runs[r].result.cost_history.size()
                        ? swarm.runs[r].result.final_theta
                        : std::vector<double>{});
    if (!out_path.empty()) qdl::save_json_file(out_path, out);

    if (failed) {
        std::cerr << "every swarm run diverged; partial results written\n";
        return kExitDiverged;
    }
    std::cout << "trained " << (kernel_length > 0 ? "NZ" : "Lindblad") << " model, "
              << "train RMSE " << std::sqrt(shown.final_cost) << "\n";
    return kExitOk;
}

std::vector<int> parse_lengths(const std::string& csv) {
    std::vector<int> out;
    std::string tok;
    for (std::size_t i = 0; i <= csv.size(); ++i) {
        if (i == csv.size() || csv[i] == ',') {
            if (!tok.empty()) out.push_back(std::stoi(tok));
            tok.clear();
        } else {
            tok += csv[i];
        }
    }
    if (out.empty()) throw qdl::ConfigError("--lengths must not be empty");
    return out;
}

int cmd_sweep_kernel(const std::string& data_dir, const std::string& val_dir,
                     const std::string& lengths_csv, const std::string& channel_sets_arg,
                     const std::string& out_path, int swarm_n, std::uint64_t seed,
                     int max_steps, double lr, double dt, int threads) {
    const qdl::PopulationDataset train_ds = qdl::read_population_dataset(data_dir);
    const qdl::PopulationDataset val_ds =
        val_dir.empty() ? train_ds : qdl::read_population_dataset(val_dir);
    const double model_dt = dt > 0.0 ? dt : train_ds.model_dt;

    std::vector<std::vector<qdl::Pauli>> sets;
    std::string tok;
    for (std::size_t i = 0; i <= channel_sets_arg.size(); ++i) {
        if (i == channel_sets_arg.size() || channel_sets_arg[i] == ';') {
            if (!tok.empty()) sets.push_back(qdl::parse_channel_set(tok));
            tok.clear();
        } else {
            tok += channel_sets_arg[i];
        }
    }

    qdl::TrainBudget budget;
    budget.max_steps = max_steps;
    budget.adam.lr = lr;
    const qdl::SweepResult sweep =
        qdl::kernel_length_sweep(train_ds, val_ds, sets, parse_lengths(lengths_csv),
                                 model_dt, swarm_n, budget, seed, threads);
    const json effective{{"command", "sweep-kernel"}, {"data_dir", data_dir},
                         {"val_dir", val_dir},        {"lengths", lengths_csv},
                         {"channel_sets", channel_sets_arg}, {"swarm", swarm_n},
                         {"seed", seed},              {"max_steps", max_steps},
                         {"lr", lr},                  {"dt", model_dt}};
    qdl::save_with_provenance(out_path, qdl::sweep_csv(sweep), effective);

    for (const auto& set : sets) {
        const std::string name = qdl::channel_set_name(set);
        std::cout << name << ": best RMSE " << sweep.best_rmse_any_length(name) << "\n";
    }
    std::cout << "wrote " << sweep.rows.size() << " rows to " << out_path << "\n";
    return kExitOk;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"differentiable open-quantum-system dynamics learning"};
    app.require_subcommand(1);

    std::string config_path, out_dir, data_dir, val_dir, out_path, params_path,
        record_path;
    std::string channels = "sm,sp,sz";
    std::string channel_sets = "sm;sm,sp,sz";
    std::string lengths = "1,2,4,8,16,32";
    int trajectories = 10, samples = 25, swarm_n = 8, kernel_length = 1;
    int max_steps = 400;
    double lr = 1e-2, dt = 0.0;
    std::uint64_t seed = 1;
    int threads = qdl::hardware_threads();

    auto* gen_sme = app.add_subcommand("gen-sme-data",
                                       "simulate weak-measurement records");
    gen_sme->add_option("--config", config_path, "experiment config JSON")->required();
    gen_sme->add_option("--out-dir", out_dir, "output dataset directory")->required();
    gen_sme->add_option("--trajectories", trajectories, "number of recorded shots S");
    gen_sme->add_option("--seed", seed, "master seed");
    gen_sme->add_option("--threads", threads, "worker threads");

    auto* train_sme = app.add_subcommand("train-sme",
                                         "fit (Omega, gamma, eta) to recorded shots");
    train_sme->add_option("--data-dir", data_dir, "dataset directory")->required();
    train_sme->add_option("--out", out_path, "result JSON path")->required();
    train_sme->add_option("--swarm", swarm_n, "independent optimizations");
    train_sme->add_option("--seed", seed, "master seed");
    train_sme->add_option("--max-steps", max_steps, "Adam step budget per run");
    train_sme->add_option("--lr", lr, "Adam learning rate");
    train_sme->add_option("--threads", threads, "worker threads");

    auto* rec = app.add_subcommand("reconstruct",
                                   "propagate a recorded signal through fitted parameters");
    rec->add_option("--params", params_path, "result JSON from train-sme")->required();
    rec->add_option("--record", record_path, "record CSV (t,V)")->required();
    rec->add_option("--out", out_path, "output trajectory CSV")->required();

    auto* gen_star = app.add_subcommand("gen-spinstar-data",
                                        "simulate spin-star populations");
    gen_star->add_option("--config", config_path, "experiment config JSON")->required();
    gen_star->add_option("--out-dir", out_dir, "output dataset directory")->required();
    gen_star->add_option("--trajectories", trajectories, "drive schedules S");
    gen_star->add_option("--samples", samples, "durations per schedule T");
    gen_star->add_option("--seed", seed, "master seed");
    gen_star->add_option("--threads", threads, "worker threads");

    auto* train_nz = app.add_subcommand("train-nz",
                                        "fit a memory-kernel (or Lindblad) model");
    train_nz->add_option("--data-dir", data_dir, "population dataset")->required();
    train_nz->add_option("--val-dir", val_dir, "optional validation dataset");
    train_nz->add_option("--channels", channels, "collapse channels, e.g. sm or sm,sp,sz");
    train_nz->add_option("--kernel-length", kernel_length,
                         "kernel length L in dtau units; 0 trains plain Lindblad rates");
    train_nz->add_option("--swarm", swarm_n, "independent optimizations");
    train_nz->add_option("--seed", seed, "master seed");
    train_nz->add_option("--out", out_path, "result JSON path");
    train_nz->add_option("--max-steps", max_steps, "Adam step budget per run");
    train_nz->add_option("--lr", lr, "Adam learning rate");
    train_nz->add_option("--dt", dt, "model grid step (default: dataset hint)");
    train_nz->add_option("--threads", threads, "worker threads");

    auto* sweep = app.add_subcommand("sweep-kernel",
                                     "swarm-train across kernel lengths and channel sets");
    sweep->add_option("--data-dir", data_dir, "training dataset")->required();
    sweep->add_option("--val-dir", val_dir, "validation dataset (default: training set)");
    sweep->add_option("--lengths", lengths, "comma-separated kernel lengths");
    sweep->add_option("--channel-sets", channel_sets,
                      "semicolon-separated channel sets (0-length rows = Lindblad)");
    sweep->add_option("--out", out_path, "sweep CSV path")->required();
    sweep->add_option("--swarm", swarm_n, "runs per configuration");
    sweep->add_option("--seed", seed, "master seed");
    sweep->add_option("--max-steps", max_steps, "Adam step budget per run");
    sweep->add_option("--lr", lr, "Adam learning rate");
    sweep->add_option("--dt", dt, "model grid step (default: dataset hint)");
    sweep->add_option("--threads", threads, "worker threads");

    CLI11_PARSE(app, argc, argv);

    try {
        if (gen_sme->parsed())
            return cmd_gen_sme_data(config_path, out_dir, trajectories, seed, threads);
        if (train_sme->parsed())
            return cmd_train_sme(data_dir, out_path, swarm_n, seed, max_steps, lr,
                                 threads);
        if (rec->parsed()) return cmd_reconstruct(params_path, record_path, out_path);
        if (gen_star->parsed())
            return cmd_gen_spinstar_data(config_path, out_dir, trajectories, samples,
                                         seed, threads);
        if (train_nz->parsed())
            return cmd_train_nz(data_dir, val_dir, channels, kernel_length, swarm_n, seed,
                                out_path, max_steps, lr, dt, threads);
        if (sweep->parsed())
            return cmd_sweep_kernel(data_dir, val_dir, lengths, channel_sets, out_path,
                                    swarm_n, seed, max_steps, lr, dt, threads);
    } catch (const qdl::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const qdl::ScheduleError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const qdl::DimensionError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const qdl::IoError& e) {
        std::cerr << "io error: " << e.what() << "\n";
        return kExitIo;
    } catch (const qdl::SwarmError& e) {
        std::cerr << "training failed: " << e.what() << "\n";
        return kExitDiverged;
    } catch (const qdl::NumericError& e) {
        std::cerr << "numeric failure: " << e.what() << "\n";
        return kExitDiverged;
    }
    return kExitOk;
}
