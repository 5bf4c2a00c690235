#pragma once

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "qdl/estimation.hpp"
#include "qdl/spin_star.hpp"

namespace qdl {

using json = nlohmann::json;

inline constexpr int kFormatVersion = 1;

// FNV-1a 64; enough to tie outputs back to the exact config that made them.
inline std::string fnv1a_hex(const std::string& s) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

inline std::string config_hash(const json& j) { return fnv1a_hex(j.dump()); }

// shortest-exact double, stable across runs
inline std::string fmt_double(double x) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

inline json load_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path);
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw ConfigError("bad JSON in " + path + ": " + e.what());
    }
    return j;
}

inline void save_text_file(const std::string& path, const std::string& content) {
    const auto dir = std::filesystem::path(path).parent_path();
    if (!dir.empty()) std::filesystem::create_directories(dir);
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write " + path);
    out << content;
    if (!out) throw IoError("write failed for " + path);
}

inline void save_json_file(const std::string& path, const json& j) {
    save_text_file(path, j.dump(2) + "\n");
}

// Payload formats like the sweep and trajectory CSVs have fixed columns, so
// provenance (format_version, config hash) rides in a sidecar instead.
inline void save_with_provenance(const std::string& path, const std::string& content,
                                 const json& effective_config) {
    save_text_file(path, content);
    save_json_file(path + ".meta.json",
                   json{{"format_version", kFormatVersion},
                        {"config", effective_config},
                        {"config_hash", config_hash(effective_config)}});
}

inline void check_format_version(const json& j, const std::string& what) {
    if (!j.contains("format_version") || !j["format_version"].is_number_integer())
        throw ConfigError(what + ": missing format_version");
    if (j["format_version"].get<int>() != kFormatVersion)
        throw ConfigError(what + ": unsupported format_version " +
                          j["format_version"].dump());
}

inline void reject_unknown_keys(const json& j, const std::vector<std::string>& allowed,
                                const std::string& what) {
    for (auto it = j.begin(); it != j.end(); ++it) {
        bool ok = false;
        for (const auto& k : allowed)
            if (it.key() == k) {
                ok = true;
                break;
            }
        if (!ok) throw ConfigError(what + ": unknown key \"" + it.key() + "\"");
    }
}

// ---------------------------------------------------------------------------
// Generator parameters <-> JSON  (complex numbers as [re, im])
// ---------------------------------------------------------------------------

inline json matrix_to_json(const ComplexMatrix<double>& m) {
    json rows = json::array();
    for (int i = 0; i < m.dim(); ++i) {
        json row = json::array();
        for (int j = 0; j < m.dim(); ++j)
            row.push_back(json::array({m.at(i, j).re, m.at(i, j).im}));
        rows.push_back(std::move(row));
    }
    return rows;
}

inline ComplexMatrix<double> matrix_from_json(const json& j) {
    if (!j.is_array() || j.empty()) throw ConfigError("matrix JSON must be a 2D array");
    const int dim = static_cast<int>(j.size());
    ComplexMatrix<double> m(dim);
    for (int i = 0; i < dim; ++i) {
        if (static_cast<int>(j[i].size()) != dim)
            throw ConfigError("matrix JSON is not square");
        for (int k = 0; k < dim; ++k) {
            m.at(i, k).re = j[i][k].at(0).get<double>();
            m.at(i, k).im = j[i][k].at(1).get<double>();
        }
    }
    return m;
}

inline json generator_set_to_json(const GeneratorSet<double>& g) {
    json out;
    out["h"] = matrix_to_json(g.ham.h);
    json slices = json::array();
    for (const auto& s : g.ham.couplings) slices.push_back(matrix_to_json(s));
    out["S"] = std::move(slices);
    json channels = json::array();
    for (const auto& ch : g.channels)
        channels.push_back({{"base", pauli_name(ch.base)},
                            {"amplitude", ch.amplitude},
                            {"monitored", ch.monitored}});
    out["channels"] = std::move(channels);
    out["eta_raw"] = g.eta.raw;
    if (g.kernel) {
        json weights;
        for (std::size_t c = 0; c < g.channels.size(); ++c) {
            const std::string name = pauli_name(g.channels[c].base);
            if (weights.contains(name))
                throw ConfigError("kernel serialization needs unique channel bases");
            weights[name] = g.kernel->weights[c];
        }
        out["kernel"] = {{"dtau", g.kernel->dtau}, {"weights", std::move(weights)}};
    } else {
        out["kernel"] = nullptr;
    }
    return out;
}

inline GeneratorSet<double> generator_set_from_json(const json& j) {
    reject_unknown_keys(j, {"h", "S", "channels", "eta_raw", "kernel"}, "generator set");
    GeneratorSet<double> g;
    g.ham.h = matrix_from_json(j.at("h"));
    for (const auto& s : j.at("S")) g.ham.couplings.push_back(matrix_from_json(s));
    for (const auto& ch : j.at("channels")) {
        reject_unknown_keys(ch, {"base", "amplitude", "monitored"}, "channel");
        g.channels.push_back({pauli_from_name(ch.at("base").get<std::string>()),
                              ch.at("amplitude").get<double>(),
                              ch.value("monitored", false)});
    }
    g.eta.raw = j.at("eta_raw").get<double>();
    if (j.contains("kernel") && !j.at("kernel").is_null()) {
        const json& kj = j.at("kernel");
        reject_unknown_keys(kj, {"dtau", "weights"}, "kernel");
        MemoryKernel<double> k;
        k.dtau = kj.at("dtau").get<double>();
        k.weights.resize(g.channels.size());
        int length = -1;
        for (std::size_t c = 0; c < g.channels.size(); ++c) {
            const std::string name = pauli_name(g.channels[c].base);
            k.weights[c] = kj.at("weights").at(name).get<std::vector<double>>();
            if (length < 0) length = static_cast<int>(k.weights[c].size());
        }
        k.length = length;
        k.validate(g.channels.size());
        g.kernel = std::move(k);
    }
    return g;
}

// ---------------------------------------------------------------------------
// Control schedules <-> JSON
// ---------------------------------------------------------------------------

inline json schedule_to_json(const ControlSchedule& s) {
    return {{"boundaries", s.boundaries()}, {"amplitudes", s.amplitudes()}};
}

inline ControlSchedule schedule_from_json(const json& j) {
    reject_unknown_keys(j, {"boundaries", "amplitudes"}, "schedule");
    return ControlSchedule(j.at("boundaries").get<std::vector<double>>(),
                           j.at("amplitudes").get<std::vector<std::vector<double>>>());
}

// ---------------------------------------------------------------------------
// CSV payloads
// ---------------------------------------------------------------------------

// Trajectory dump: t, rho_re_00, rho_im_00, ..., population. One row per grid
// point, header mandatory.
inline std::string trajectory_csv(const TimeGrid& grid,
                                  const std::vector<DensityMatrix<double>>& traj) {
    std::ostringstream out;
    const int dim = traj.empty() ? 0 : traj.front().dim();
    out << "t";
    for (int i = 0; i < dim; ++i)
        for (int j = 0; j < dim; ++j)
            out << ",rho_re_" << i << j << ",rho_im_" << i << j;
    out << ",population\n";
    for (std::size_t n = 0; n < traj.size(); ++n) {
        out << fmt_double(grid.time_at(static_cast<int>(n)));
        for (int i = 0; i < dim; ++i)
            for (int j = 0; j < dim; ++j) {
                const Cd z = traj[n].matrix().at(i, j);
                out << "," << fmt_double(z.re) << "," << fmt_double(z.im);
            }
        out << "," << fmt_double(traj[n].excited_population()) << "\n";
    }
    return out.str();
}

inline std::string record_csv(const TimeGrid& grid, const std::vector<double>& record) {
    std::ostringstream out;
    out << "t,V\n";
    for (std::size_t n = 0; n < record.size(); ++n)
        out << fmt_double(grid.time_at(static_cast<int>(n))) << ","
            << fmt_double(record[n]) << "\n";
    return out.str();
}

inline std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> out;
    std::string tok;
    for (char c : line) {
        if (c == ',') {
            out.push_back(tok);
            tok.clear();
        } else if (c != '\r') {
            tok += c;
        }
    }
    out.push_back(tok);
    return out;
}

inline std::vector<double> read_record_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path);
    std::string line;
    if (!std::getline(in, line) || split_csv_line(line).size() != 2)
        throw ConfigError(path + ": expected header t,V");
    std::vector<double> record;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        const auto cols = split_csv_line(line);
        if (cols.size() != 2) throw ConfigError(path + ": malformed row");
        record.push_back(std::stod(cols[1]));
    }
    return record;
}

// last column of a trajectory dump
inline std::vector<double> read_population_column(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path);
    std::string line;
    if (!std::getline(in, line)) throw ConfigError(path + ": empty file");
    const auto header = split_csv_line(line);
    if (header.empty() || header.back() != "population")
        throw ConfigError(path + ": expected trailing population column");
    std::vector<double> pops;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        pops.push_back(std::stod(split_csv_line(line).back()));
    }
    return pops;
}

// ---------------------------------------------------------------------------
// Dataset directories
// ---------------------------------------------------------------------------

inline json grid_to_json(const TimeGrid& g) {
    return {{"t0", g.t0}, {"dt", g.dt}, {"n_steps", g.n_steps}};
}
inline TimeGrid grid_from_json(const json& j) {
    reject_unknown_keys(j, {"t0", "dt", "n_steps"}, "grid");
    return TimeGrid(j.at("t0").get<double>(), j.at("dt").get<double>(),
                    j.at("n_steps").get<int>());
}

inline char path_sep() { return static_cast<char>(std::filesystem::path::preferred_separator); }

inline std::string traj_file_name(const char* prefix, int index) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%s/traj_%04d.csv", prefix, index);
    return buf;
}

inline void write_sme_dataset(const std::string& dir, const SmeDataset& ds,
                              const json& effective_config) {
    std::filesystem::create_directories(dir);
    json meta;
    meta["format_version"] = kFormatVersion;
    meta["kind"] = "sme_records";
    meta["config"] = effective_config;
    meta["config_hash"] = config_hash(effective_config);
    meta["master_seed"] = ds.master_seed;
    meta["grid"] = grid_to_json(ds.grid);
    meta["rho0"] = ds.rho0;
    meta["truth"] = {{"omega", ds.truth.omega}, {"gamma", ds.truth.gamma},
                     {"eta", ds.truth.eta}};
    json recs = json::array();
    for (std::size_t i = 0; i < ds.records.size(); ++i) {
        const std::string rec_file = traj_file_name("records", static_cast<int>(i));
        const std::string truth_file = traj_file_name("truth", static_cast<int>(i));
        save_text_file(dir + path_sep() + rec_file,
                       record_csv(ds.grid, ds.records[i].record));
        // withheld truth goes to a side file for validation only
        std::ostringstream truth_csv;
        truth_csv << "t,population\n";
        for (std::size_t n = 0; n < ds.truth_populations[i].size(); ++n)
            truth_csv << fmt_double(ds.grid.time_at(static_cast<int>(n))) << ","
                      << fmt_double(ds.truth_populations[i][n]) << "\n";
        save_text_file(dir + path_sep() + truth_file, truth_csv.str());
        recs.push_back({{"file", rec_file},
                        {"truth_file", truth_file},
                        {"seed", ds.records[i].seed},
                        {"final_bit", ds.records[i].final_bit}});
    }
    meta["records"] = std::move(recs);
    save_json_file(dir + path_sep() + std::string("metadata.json"), meta);
}

inline SmeDataset read_sme_dataset(const std::string& dir) {
    const json meta = load_json_file(dir + path_sep() + std::string("metadata.json"));
    check_format_version(meta, "sme dataset");
    if (meta.value("kind", "") != std::string("sme_records"))
        throw ConfigError(dir + ": not an sme_records dataset");
    SmeDataset ds;
    ds.grid = grid_from_json(meta.at("grid"));
    ds.master_seed = meta.at("master_seed").get<std::uint64_t>();
    ds.rho0 = meta.value("rho0", "ground");
    ds.truth.omega = meta.at("truth").at("omega").get<double>();
    ds.truth.gamma = meta.at("truth").at("gamma").get<double>();
    ds.truth.eta = meta.at("truth").at("eta").get<double>();
    for (const auto& r : meta.at("records")) {
        TrajectoryRecord rec;
        rec.grid = ds.grid;
        rec.seed = r.at("seed").get<std::uint64_t>();
        rec.final_bit = r.at("final_bit").get<int>();
        rec.record = read_record_csv(dir + path_sep() + r.at("file").get<std::string>());
        if (static_cast<int>(rec.record.size()) != ds.grid.n_steps)
            throw ConfigError("record length mismatch in " + dir);
        ds.records.push_back(std::move(rec));
        ds.truth_populations.push_back(read_population_column(
            dir + path_sep() + r.at("truth_file").get<std::string>()));
    }
    return ds;
}

inline void write_population_dataset(const std::string& dir, const PopulationDataset& ds,
                                     const json& effective_config) {
    std::filesystem::create_directories(dir);
    json meta;
    meta["format_version"] = kFormatVersion;
    meta["kind"] = "spinstar_populations";
    meta["config"] = effective_config;
    meta["config_hash"] = config_hash(effective_config);
    meta["master_seed"] = ds.master_seed;
    meta["n_bath"] = ds.n_bath;
    meta["omega0"] = ds.omega0;
    meta["couplings"] = ds.couplings;
    meta["t_max"] = ds.t_max;
    meta["sim_dt"] = ds.sim_dt;
    meta["model_dt"] = ds.model_dt;
    meta["shots"] = ds.shots;
    json scheds = json::array();
    for (const auto& tr : ds.trajectories) scheds.push_back(schedule_to_json(tr.schedule));
    meta["schedules"] = std::move(scheds);
    save_json_file(dir + path_sep() + std::string("metadata.json"), meta);

    std::ostringstream csv;
    csv << "trajectory_id,t,population\n";
    for (std::size_t i = 0; i < ds.trajectories.size(); ++i)
        for (std::size_t j = 0; j < ds.trajectories[i].times.size(); ++j)
            csv << i << "," << fmt_double(ds.trajectories[i].times[j]) << ","
                << fmt_double(ds.trajectories[i].populations[j]) << "\n";
    save_text_file(dir + path_sep() + std::string("populations.csv"), csv.str());
}

inline PopulationDataset read_population_dataset(const std::string& dir) {
    const json meta = load_json_file(dir + path_sep() + std::string("metadata.json"));
    check_format_version(meta, "population dataset");
    if (meta.value("kind", "") != std::string("spinstar_populations"))
        throw ConfigError(dir + ": not a spinstar_populations dataset");
    PopulationDataset ds;
    ds.n_bath = meta.at("n_bath").get<int>();
    ds.omega0 = meta.at("omega0").get<double>();
    ds.couplings = meta.at("couplings").get<std::vector<double>>();
    ds.t_max = meta.at("t_max").get<double>();
    ds.sim_dt = meta.at("sim_dt").get<double>();
    ds.model_dt = meta.at("model_dt").get<double>();
    ds.shots = meta.at("shots").get<long>();
    ds.master_seed = meta.at("master_seed").get<std::uint64_t>();
    for (const auto& sj : meta.at("schedules")) {
        PopulationTrajectory tr;
        tr.schedule = schedule_from_json(sj);
        ds.trajectories.push_back(std::move(tr));
    }

    std::ifstream in(dir + path_sep() + std::string("populations.csv"));
    if (!in) throw IoError("cannot open populations.csv in " + dir);
    std::string line;
    std::getline(in, line);
    if (split_csv_line(line) != std::vector<std::string>{"trajectory_id", "t", "population"})
        throw ConfigError(dir + ": bad populations.csv header");
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        const auto cols = split_csv_line(line);
        if (cols.size() != 3) throw ConfigError(dir + ": malformed populations row");
        const std::size_t id = std::stoul(cols[0]);
        if (id >= ds.trajectories.size())
            throw ConfigError(dir + ": trajectory_id out of range");
        ds.trajectories[id].times.push_back(std::stod(cols[1]));
        ds.trajectories[id].populations.push_back(std::stod(cols[2]));
    }
    return ds;
}

inline std::string sweep_csv(const SweepResult& sweep) {
    std::ostringstream out;
    out << "L,channel_set,run_seed,final_rmse\n";
    for (const auto& row : sweep.rows) {
        out << row.kernel_length << ",\"" << row.channel_set << "\"," << row.run_seed
            << ",";
        if (row.diverged)
            out << "nan";
        else
            out << fmt_double(row.final_rmse);
        out << "\n";
    }
    return out.str();
}

// JSON-lines run log: one object per step, parameter snapshot every k steps.
class RunLog {
public:
    RunLog() = default;
    explicit RunLog(const std::string& path, int snapshot_every = 25)
        : snapshot_every_(snapshot_every) {
        if (path.empty()) return;
        const auto dir = std::filesystem::path(path).parent_path();
        if (!dir.empty()) std::filesystem::create_directories(dir);
        out_.open(path, std::ios::binary);
        if (!out_) throw IoError("cannot write " + path);
    }

    void log(int run_index, long step, double cost, const std::vector<double>& theta) {
        if (!out_.is_open()) return;
        json j{{"run", run_index}, {"step", step}, {"cost", cost}};
        if (step % snapshot_every_ == 0) j["theta"] = theta;
        out_ << j.dump() << "\n";
    }

private:
    std::ofstream out_;
    int snapshot_every_ = 25;
};

} // namespace qdl
