// SPDX-License-Identifier: Apache-2.0
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
// http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
// ------------------------------------------------------------------------

#include "trisbf/experiments.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <set>
#include <sstream>
#include <thread>

#include <Eigen/Core>

#include "trisbf/oracle.hpp"

namespace trisbf {

const char* to_string(SweepKind k) {
    switch (k) {
        case SweepKind::none: return "none";
        case SweepKind::power: return "power";
        case SweepKind::distance: return "distance";
        case SweepKind::elements: return "elements";
    }
    return "unknown";
}

void ExperimentConfig::validate() const {
    scenario.validate();
    system.validate();
    if (trials < 1) throw std::invalid_argument("trials must be at least 1");
    if (!(q_t_fraction >= 0.0 && q_t_fraction < 1.0))
        throw std::invalid_argument("q_t_fraction must lie in [0, 1)");
    if (q_t_w && !(*q_t_w >= 0.0)) throw std::invalid_argument("q_t_w must be nonnegative");
    if (!std::isfinite(p_t_dbm) || !std::isfinite(noise_dbm))
        throw std::invalid_argument("p_t_dbm and noise_dbm must be finite");
    if (sweep.kind != SweepKind::none) {
        if (sweep.values.empty()) throw std::invalid_argument("sweep values must be nonempty");
        if (!std::is_sorted(sweep.values.begin(), sweep.values.end()))
            throw std::invalid_argument("sweep values must be sorted ascending");
    }
    if (sweep.kind == SweepKind::distance)
        for (double d : sweep.values)
            if (!(d > scenario.id_distance.min))
                throw std::invalid_argument("distance sweep values must exceed the minimum ID distance");
    if (sweep.kind == SweepKind::elements)
        for (double n : sweep.values)
            if (n < 1 || n != std::floor(n))
                throw std::invalid_argument("elements sweep values must be positive integers");
    for (int n : n_values)
        if (n < 1) throw std::invalid_argument("n_values must be positive");
    for (int k : k_values)
        if (k < 1) throw std::invalid_argument("k_values must be positive");
    if (threads < 0) throw std::invalid_argument("threads must be nonnegative");
    if (tolerances.max_outer_iters < 1)
        throw std::invalid_argument("max_outer_iters must be at least 1");
}

ExperimentConfig default_config() {
    ExperimentConfig cfg;
    cfg.system.P_t = dbm_to_watt(cfg.p_t_dbm);
    cfg.system.sigma2.assign(cfg.system.K, dbm_to_watt(cfg.noise_dbm));
    return cfg;
}

// ---------------------------------------------------------------------------
// Parsing
// ---------------------------------------------------------------------------

namespace {

int line_at(const std::string& text, std::size_t byte) {
    byte = std::min(byte, text.size());
    return 1 + static_cast<int>(std::count(text.begin(), text.begin() + byte, '\n'));
}

/// Best-effort location of a key for semantic errors: its first quoted
/// occurrence in the document.
int line_of_key(const std::string& text, const std::string& key) {
    const std::size_t pos = text.find('"' + key + '"');
    return pos == std::string::npos ? 0 : line_at(text, pos);
}

class Reader {
public:
    Reader(const std::string& text, const nlohmann::json& obj, std::string where)
        : text_(text), obj_(obj), where_(std::move(where)) {
        if (!obj_.is_object()) fail(where_, where_ + " must be an object");
    }

    template <class T>
    void get(const std::string& key, T& out) {
        seen_.insert(key);
        if (!obj_.contains(key)) return;
        try {
            out = obj_.at(key).get<T>();
        } catch (const nlohmann::json::exception& e) {
            fail(key, where_ + "." + key + ": " + e.what());
        }
    }

    const nlohmann::json* child(const std::string& key) {
        seen_.insert(key);
        return obj_.contains(key) ? &obj_.at(key) : nullptr;
    }

    void finish() const {
        for (const auto& [key, value] : obj_.items())
            if (!seen_.count(key)) fail(key, "unknown key " + where_ + "." + key);
    }

    [[noreturn]] void fail(const std::string& key, const std::string& msg) const {
        throw ConfigError(msg, line_of_key(text_, key));
    }

private:
    const std::string& text_;
    const nlohmann::json& obj_;
    std::string where_;
    std::set<std::string> seen_;
};

}  // namespace

ExperimentConfig parse_config(const std::string& text) {
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw ConfigError(e.what(), line_at(text, e.byte > 0 ? e.byte - 1 : 0));
    }

    ExperimentConfig cfg = default_config();
    Reader top(text, doc, "config");

    if (const nlohmann::json* sys = top.child("system")) {
        Reader r(text, *sys, "system");
        r.get("N", cfg.system.N);
        r.get("K", cfg.system.K);
        r.get("G", cfg.system.G);
        r.get("p_t_dbm", cfg.p_t_dbm);
        r.get("noise_dbm", cfg.noise_dbm);
        r.get("zeta", cfg.system.zeta);
        r.get("q_t_fraction", cfg.q_t_fraction);
        if (const nlohmann::json* q = r.child("q_t_w"); q && !q->is_null()) {
            double value = -1.0;
            r.get("q_t_w", value);
            cfg.q_t_w = value;
        }
        std::string base = "bits";
        r.get("log_base", base);
        if (base != "bits" && base != "nats") r.fail("log_base", "log_base must be bits or nats");
        cfg.system.log_base = base == "bits" ? LogBase::bits : LogBase::nats;
        r.finish();
    }

    if (const nlohmann::json* sc = top.child("scenario")) {
        Reader r(text, *sc, "scenario");
        ScenarioParams& p = cfg.scenario;
        std::vector<double> pos{p.tris_position[0], p.tris_position[1], p.tris_position[2]};
        r.get("tris_position", pos);
        if (pos.size() != 3) r.fail("tris_position", "tris_position needs three coordinates");
        p.tris_position = {pos[0], pos[1], pos[2]};
        std::vector<double> id{p.id_distance.min, p.id_distance.max};
        std::vector<double> eh{p.eh_distance.min, p.eh_distance.max};
        r.get("id_distance", id);
        r.get("eh_distance", eh);
        if (id.size() != 2) r.fail("id_distance", "id_distance needs [min, max]");
        if (eh.size() != 2) r.fail("eh_distance", "eh_distance needs [min, max]");
        p.id_distance = {id[0], id[1]};
        p.eh_distance = {eh[0], eh[1]};
        r.get("user_height", p.user_height);
        r.get("alpha_id", p.alpha_id);
        r.get("alpha_eh", p.alpha_eh);
        r.get("pl0_db", p.pl0_db);
        r.get("sector_half_angle_deg", p.sector_half_angle_deg);
        r.get("seed", p.seed);
        r.finish();
    }

    if (const nlohmann::json* sw = top.child("sweep")) {
        Reader r(text, *sw, "sweep");
        std::string kind = "none";
        r.get("kind", kind);
        if (kind == "none") cfg.sweep.kind = SweepKind::none;
        else if (kind == "power") cfg.sweep.kind = SweepKind::power;
        else if (kind == "distance") cfg.sweep.kind = SweepKind::distance;
        else if (kind == "elements") cfg.sweep.kind = SweepKind::elements;
        else r.fail("kind", "unknown sweep kind " + kind);
        r.get("values", cfg.sweep.values);
        r.finish();
    }

    if (const nlohmann::json* sch = top.child("schedule")) {
        Reader r(text, *sch, "schedule");
        r.get("initial_rho", cfg.schedule.initial_rho);
        r.get("decay", cfg.schedule.decay);
        r.get("floor", cfg.schedule.floor);
        r.get("residual_target", cfg.schedule.residual_target);
        r.get("power_normalized", cfg.schedule.power_normalized);
        r.finish();
    }

    top.get("n_values", cfg.n_values);
    top.get("k_values", cfg.k_values);
    top.get("trials", cfg.trials);
    top.get("max_outer_iters", cfg.tolerances.max_outer_iters);
    top.get("surrogate_rel_tol", cfg.tolerances.surrogate_rel);
    top.get("output_path", cfg.output_path);
    top.get("threads", cfg.threads);
    top.finish();

    cfg.system.P_t = dbm_to_watt(cfg.p_t_dbm);
    cfg.system.sigma2.assign(cfg.system.K, dbm_to_watt(cfg.noise_dbm));
    if (cfg.n_values.empty()) cfg.n_values = {cfg.system.N};
    if (cfg.k_values.empty()) cfg.k_values = {cfg.system.K};
    try {
        cfg.validate();
    } catch (const std::invalid_argument& e) {
        // Validation messages lead with the offending key.
        const std::string msg = e.what();
        throw ConfigError(msg, line_of_key(text, msg.substr(0, msg.find(' '))));
    }
    return cfg;
}

ExperimentConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file " + path, 0);
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_config(buf.str());
}

nlohmann::json to_json(const ExperimentConfig& cfg) {
    nlohmann::json j;
    j["system"] = {{"N", cfg.system.N},
                   {"K", cfg.system.K},
                   {"G", cfg.system.G},
                   {"p_t_dbm", cfg.p_t_dbm},
                   {"noise_dbm", cfg.noise_dbm},
                   {"zeta", cfg.system.zeta},
                   {"q_t_fraction", cfg.q_t_fraction},
                   {"log_base", cfg.system.log_base == LogBase::bits ? "bits" : "nats"}};
    j["system"]["q_t_w"] = cfg.q_t_w ? nlohmann::json(*cfg.q_t_w) : nlohmann::json(nullptr);
    const ScenarioParams& p = cfg.scenario;
    j["scenario"] = {{"tris_position", p.tris_position},
                     {"id_distance", {p.id_distance.min, p.id_distance.max}},
                     {"eh_distance", {p.eh_distance.min, p.eh_distance.max}},
                     {"user_height", p.user_height},
                     {"alpha_id", p.alpha_id},
                     {"alpha_eh", p.alpha_eh},
                     {"pl0_db", p.pl0_db},
                     {"sector_half_angle_deg", p.sector_half_angle_deg},
                     {"seed", p.seed}};
    j["sweep"] = {{"kind", to_string(cfg.sweep.kind)}, {"values", cfg.sweep.values}};
    j["schedule"] = {{"initial_rho", cfg.schedule.initial_rho},
                     {"decay", cfg.schedule.decay},
                     {"floor", cfg.schedule.floor},
                     {"residual_target", cfg.schedule.residual_target},
                     {"power_normalized", cfg.schedule.power_normalized}};
    j["n_values"] = cfg.n_values;
    j["k_values"] = cfg.k_values;
    j["trials"] = cfg.trials;
    j["max_outer_iters"] = cfg.tolerances.max_outer_iters;
    j["surrogate_rel_tol"] = cfg.tolerances.surrogate_rel;
    j["output_path"] = cfg.output_path;
    j["threads"] = cfg.threads;
    return j;
}

// ---------------------------------------------------------------------------
// Trials
// ---------------------------------------------------------------------------

bool TrialOutcome::usable() const {
    return status == RunStatus::converged || status == RunStatus::max_iters;
}

double beam_violation(const BeamformerPair& beams, const ChannelSet& ch,
                      const SelectionOperators& ops, const SystemConfig& cfg) {
    double worst = 0.0;
    for (int n = 0; n < cfg.N; ++n)
        worst = std::max(worst, (per_antenna_power(beams, ops, n) - cfg.P_t) / cfg.P_t);
    if (cfg.Q_t > 0.0)
        worst = std::max(worst, (cfg.Q_t - total_harvest(beams, ch, ops, cfg)) / cfg.Q_t);
    return worst;
}

TrialOutcome run_trial(const ExperimentConfig& cfg, std::uint64_t seed, bool keep_trajectory) {
    ScenarioParams scenario = cfg.scenario;
    scenario.seed = seed;
    SystemConfig sys = cfg.system;
    sys.sigma2.assign(sys.K, dbm_to_watt(cfg.noise_dbm));

    TrialOutcome out;
    out.N = sys.N;
    out.K = sys.K;
    out.seed = seed;
    const ChannelSet ch = stack_channels(sys, draw_scenario(scenario, sys));
    sys.Q_t = cfg.q_t_w ? *cfg.q_t_w
                        : cfg.q_t_fraction * max_total_harvest(sys, ch, cfg.tolerances.solver);
    out.q_t = sys.Q_t;

    RunResult res = run(sys, ch, cfg.schedule, cfg.tolerances);
    out.status = res.status;
    out.diagnostics = res.diagnostics;
    out.outer_iterations = res.outer_iterations;
    if (!res.trajectory.empty()) {
        const IterateState& last = res.trajectory.back();
        out.lifted_sum_rate = last.sum_rate;
        out.residual_I = last.penalty_residual_I;
        out.residual_E = last.penalty_residual_E;
        out.trace_I = last.lift.F_I.trace().real();
        out.trace_E = last.lift.F_E.trace().real();
    }
    if (out.usable()) {
        out.sum_rate = res.achieved_sum_rate;
        out.harvest = res.achieved_harvest;
        out.max_violation = beam_violation(res.beams, ch, SelectionOperators(sys), sys);
    }
    if (keep_trajectory) out.trajectory = std::move(res.trajectory);
    return out;
}

namespace {

unsigned worker_count(const ExperimentConfig& cfg, int jobs) {
    const unsigned hw = std::max(1u, std::thread::hardware_concurrency());
    const unsigned want = cfg.threads > 0 ? static_cast<unsigned>(cfg.threads) : hw;
    return std::max(1u, std::min<unsigned>(want, static_cast<unsigned>(jobs)));
}

/// Evaluates job(i) for i in [0, count) on a small pool; results keep index order.
template <class Result, class Job>
std::vector<Result> parallel_map(const ExperimentConfig& cfg, int count, Job job) {
    std::vector<Result> results(count);
    std::vector<std::exception_ptr> errors(count);
    std::atomic<int> next{0};
    auto worker = [&] {
        for (int i = next++; i < count; i = next++) {
            try {
                results[i] = job(i);
            } catch (...) {
                errors[i] = std::current_exception();
            }
        }
    };
    std::vector<std::thread> pool;
    const unsigned workers = worker_count(cfg, count);
    for (unsigned w = 1; w < workers; ++w) pool.emplace_back(worker);
    worker();
    for (std::thread& t : pool) t.join();
    for (const std::exception_ptr& e : errors)
        if (e) std::rethrow_exception(e);
    return results;
}

}  // namespace

std::vector<TrialOutcome> run_trials(const ExperimentConfig& cfg, bool keep_trajectory) {
    return parallel_map<TrialOutcome>(cfg, cfg.trials, [&](int i) {
        TrialOutcome t = run_trial(cfg, cfg.scenario.seed + static_cast<std::uint64_t>(i),
                                   keep_trajectory);
        t.trial = i;
        return t;
    });
}

SweepPoint summarize(int N, int K, double value, std::vector<TrialOutcome> trials) {
    SweepPoint p;
    p.N = N;
    p.K = K;
    p.value = value;
    std::vector<double> rates;
    for (TrialOutcome& t : trials) {
        t.sweep_value = value;
        if (t.status == RunStatus::converged) ++p.converged;
        if (t.usable()) rates.push_back(t.sum_rate);
    }
    p.usable = static_cast<int>(rates.size());
    if (!rates.empty()) {
        double sum = 0.0;
        for (double r : rates) sum += r;  // trial order keeps the sum reproducible
        p.mean_sum_rate = sum / rates.size();
        std::sort(rates.begin(), rates.end());
        const std::size_t m = rates.size() / 2;
        p.median_sum_rate = rates.size() % 2 ? rates[m] : 0.5 * (rates[m - 1] + rates[m]);
    }
    p.trials = std::move(trials);
    return p;
}

namespace {

ExperimentConfig with_dims(ExperimentConfig cfg, int N, int K) {
    cfg.system.N = N;
    cfg.system.K = K;
    cfg.system.sigma2.assign(K, dbm_to_watt(cfg.noise_dbm));
    return cfg;
}

std::vector<double> sweep_values(const ExperimentConfig& cfg, SweepKind kind,
                                 const std::vector<double>& fallback) {
    if (cfg.sweep.kind == kind) return cfg.sweep.values;
    if (cfg.sweep.kind == SweepKind::none) return fallback;
    throw std::invalid_argument(std::string("config sweep kind is ") + to_string(cfg.sweep.kind) +
                                ", expected " + to_string(kind));
}

template <class Apply>
std::vector<SweepPoint> sweep(const ExperimentConfig& cfg, const std::vector<double>& values,
                              Apply apply) {
    std::vector<SweepPoint> points;
    for (int N : cfg.n_values)
        for (int K : cfg.k_values)
            for (double v : values) {
                ExperimentConfig point = with_dims(cfg, N, K);
                apply(point, v);
                point.validate();
                points.push_back(summarize(N, K, v, run_trials(point, false)));
            }
    return points;
}

}  // namespace

std::vector<SweepPoint> run_convergence(const ExperimentConfig& cfg) {
    std::vector<int> ns = cfg.n_values;
    if (cfg.sweep.kind == SweepKind::elements) {
        ns.clear();
        for (double v : cfg.sweep.values) ns.push_back(static_cast<int>(v));
    }
    std::vector<SweepPoint> series;
    for (int N : ns) {
        ExperimentConfig point = with_dims(cfg, N, cfg.system.K);
        point.validate();
        series.push_back(summarize(N, point.system.K, N, run_trials(point, true)));
    }
    return series;
}

std::vector<SweepPoint> run_power_sweep(const ExperimentConfig& cfg) {
    return sweep(cfg, sweep_values(cfg, SweepKind::power, {0.0, 5.0, 10.0, 15.0}),
                 [](ExperimentConfig& c, double dbm) {
                     c.p_t_dbm = dbm;
                     c.system.P_t = dbm_to_watt(dbm);
                 });
}

std::vector<SweepPoint> run_distance_sweep(const ExperimentConfig& cfg) {
    return sweep(cfg,
                 sweep_values(cfg, SweepKind::distance, {50.0, 100.0, 150.0, 200.0, 250.0, 300.0}),
                 [](ExperimentConfig& c, double d) { c.scenario.id_distance.max = d; });
}

std::vector<OracleComparison> run_oracle_check(const ExperimentConfig& cfg, int resolution) {
    ExperimentConfig tiny = with_dims(cfg, 2, 1);
    tiny.system.G = 1;
    tiny.validate();
    // The exhaustive search is already multi-threaded; run trials one at a time.
    std::vector<OracleComparison> rows;
    for (int i = 0; i < tiny.trials; ++i) {
        const std::uint64_t seed = tiny.scenario.seed + static_cast<std::uint64_t>(i);
        ScenarioParams scenario = tiny.scenario;
        scenario.seed = seed;
        SystemConfig sys = tiny.system;
        const ChannelSet ch = stack_channels(sys, draw_scenario(scenario, sys));
        sys.Q_t = tiny.q_t_w ? *tiny.q_t_w
                             : tiny.q_t_fraction * max_total_harvest(sys, ch, tiny.tolerances.solver);

        OracleComparison row;
        row.trial = i;
        row.seed = seed;
        const RunResult res = run(sys, ch, tiny.schedule, tiny.tolerances);
        row.status = res.status;
        const OracleResult best = brute_force_best(sys, ch, resolution);
        row.oracle_feasible = best.feasible;
        row.oracle_sum_rate = best.sum_rate;
        if (res.status == RunStatus::converged || res.status == RunStatus::max_iters) {
            row.optimizer_sum_rate = res.achieved_sum_rate;
            row.max_violation = beam_violation(res.beams, ch, SelectionOperators(sys), sys);
        }
        if (best.feasible && best.sum_rate > 0.0)
            row.relative_gap = (best.sum_rate - row.optimizer_sum_rate) / best.sum_rate;
        rows.push_back(row);
    }
    return rows;
}

// ---------------------------------------------------------------------------
// Output
// ---------------------------------------------------------------------------

namespace {

std::ostringstream number_stream() {
    std::ostringstream s;
    s << std::setprecision(17);
    return s;
}

}  // namespace

void write_convergence_csv(std::ostream& os, const std::vector<SweepPoint>& series) {
    os << "N,trial,seed,iteration,sum_rate_bits,penalty_residual_I,penalty_residual_E,rho,"
          "surrogate_objective\n";
    for (const SweepPoint& p : series)
        for (const TrialOutcome& t : p.trials) {
            if (!t.usable()) continue;
            std::ostringstream traj = number_stream();
            write_trajectory_csv(traj, t.trajectory, false);
            std::istringstream lines(traj.str());
            for (std::string line; std::getline(lines, line);)
                os << p.N << ',' << t.trial << ',' << t.seed << ',' << line << '\n';
        }
}

void write_sweep_csv(std::ostream& os, const std::vector<SweepPoint>& points,
                     const std::string& value_name) {
    os << "N,K," << value_name
       << ",trials,usable,converged,mean_sum_rate_bits,median_sum_rate_bits\n";
    for (const SweepPoint& p : points) {
        std::ostringstream row = number_stream();
        row << p.N << ',' << p.K << ',' << p.value << ',' << p.trials.size() << ',' << p.usable
            << ',' << p.converged << ',' << p.mean_sum_rate << ',' << p.median_sum_rate << '\n';
        os << row.str();
    }
}

void write_trials_csv(std::ostream& os, const std::vector<SweepPoint>& points,
                      const std::string& value_name) {
    os << "N,K," << value_name
       << ",trial,seed,status,outer_iterations,sum_rate_bits,lifted_sum_rate_bits,harvest_w,"
          "q_t_w,penalty_residual_I,penalty_residual_E,trace_I,trace_E,max_violation\n";
    for (const SweepPoint& p : points)
        for (const TrialOutcome& t : p.trials) {
            std::ostringstream row = number_stream();
            row << p.N << ',' << p.K << ',' << p.value << ',' << t.trial << ',' << t.seed << ','
                << to_string(t.status) << ',' << t.outer_iterations << ',' << t.sum_rate << ','
                << t.lifted_sum_rate << ',' << t.harvest << ',' << t.q_t << ',' << t.residual_I
                << ',' << t.residual_E << ',' << t.trace_I << ',' << t.trace_E << ','
                << t.max_violation << '\n';
            os << row.str();
        }
}

void write_oracle_csv(std::ostream& os, const std::vector<OracleComparison>& rows) {
    os << "trial,seed,status,optimizer_sum_rate_bits,oracle_sum_rate_bits,relative_gap,"
          "max_violation,oracle_feasible\n";
    for (const OracleComparison& r : rows) {
        std::ostringstream row = number_stream();
        row << r.trial << ',' << r.seed << ',' << to_string(r.status) << ','
            << r.optimizer_sum_rate << ',' << r.oracle_sum_rate << ',' << r.relative_gap << ','
            << r.max_violation << ',' << (r.oracle_feasible ? 1 : 0) << '\n';
        os << row.str();
    }
}

nlohmann::json make_manifest(const std::string& command, const ExperimentConfig& cfg,
                             double wall_seconds) {
    nlohmann::json m;
    m["command"] = command;
    m["config"] = to_json(cfg);
    m["versions"] = {{"trisbf", TRISBF_VERSION},
                     {"eigen", std::to_string(EIGEN_WORLD_VERSION) + "." +
                                   std::to_string(EIGEN_MAJOR_VERSION) + "." +
                                   std::to_string(EIGEN_MINOR_VERSION)},
                     {"nlohmann_json", std::to_string(NLOHMANN_JSON_VERSION_MAJOR) + "." +
                                           std::to_string(NLOHMANN_JSON_VERSION_MINOR) + "." +
                                           std::to_string(NLOHMANN_JSON_VERSION_PATCH)},
                     {"compiler", __VERSION__}};
    m["wall_seconds"] = wall_seconds;
    return m;
}

}  // namespace trisbf
