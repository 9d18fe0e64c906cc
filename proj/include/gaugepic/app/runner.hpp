// Copyright 2026 The gaugepic Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

// Scenario execution for the command-line runner. Results are written as
// JSON lines (one record per line) or as a CSV table.

#include "gaugepic/app/config.hpp"

#include <spdlog/spdlog.h>

#include <chrono>
#include <cstdio>
#include <ostream>
#include <random>
#include <string>
#include <vector>

namespace gaugepic::app {

enum ExitCode : int {
    kExitOk = 0,
    kExitConfigError = 1,
    kExitAssertionFailed = 2,
    kExitDiverged = 3,
};

/// Writes records tagged with the config hash, seed and scenario.
class RecordWriter {
  public:
    RecordWriter(std::ostream& out, const ExperimentConfig& cfg)
        : out_(out), format_(cfg.format), hash_(config_hash(cfg)), seed_(cfg.seed), scenario_(to_string(cfg.scenario)) {
        if (format_ == OutputFormat::csv) {
            if (cfg.scenario == Scenario::bench) {
                out_ << "config_hash,seed,n_sites,mode,steps,seconds_per_step,oracle_seconds\n";
            } else {
                out_ << "config_hash,seed,scenario,time,observable,re,im,oracle_re,oracle_im,gap,"
                        "consistency,cocycle,unitarity,norm,steps\n";
            }
        }
    }

    /// Emits one record. In CSV mode only observable and bench rows are written.
    void write(Json record, std::optional<std::pair<double, double>> wall_times = std::nullopt) {
        record["config_hash"] = hash_;
        record["seed"] = seed_;
        record["scenario"] = scenario_;
        ++count_;
        if (format_ == OutputFormat::json) {
            out_ << record.dump() << '\n';
            return;
        }
        const std::string kind = record["kind"];
        if (kind == "observable") {
            const Json& d = record["defects"];
            const bool has_oracle = record.contains("oracle");
            out_ << hash_ << ',' << seed_ << ',' << scenario_ << ',' << num(record["time"]) << ','
                 << csv_field(record["observable"]) << ',' << num(record["value"]["re"]) << ','
                 << num(record["value"]["im"]) << ',' << (has_oracle ? num(record["oracle"]["re"]) : "") << ','
                 << (has_oracle ? num(record["oracle"]["im"]) : "") << ',' << (has_oracle ? num(record["gap"]) : "")
                 << ',' << num(d["consistency"]) << ',' << num(d["cocycle"]) << ',' << num(d["unitarity"]) << ','
                 << num(d["norm"]) << ',' << record["stats"]["steps"].get<std::uint64_t>() << '\n';
        } else if (kind == "bench") {
            out_ << hash_ << ',' << seed_ << ',' << record["n_sites"].get<int>() << ','
                 << record["mode"].get<std::string>() << ',' << record["steps"].get<int>() << ','
                 << (wall_times ? num(wall_times->first) : "") << ',' << (wall_times ? num(wall_times->second) : "")
                 << '\n';
        }
    }

    std::size_t count() const { return count_; }

  private:
    static std::string num(const Json& v) { return num(v.get<double>()); }
    static std::string num(double v) {
        char buf[32];
        std::snprintf(buf, sizeof buf, "%.17g", v);
        return buf;
    }
    static std::string csv_field(const Json& v) {
        const std::string s = v.get<std::string>();
        if (s.find_first_of(",\"\n") == std::string::npos) return s;
        std::string quoted = "\"";
        for (char ch : s) quoted += ch == '"' ? std::string("\"\"") : std::string(1, ch);
        return quoted + "\"";
    }

    std::ostream& out_;
    OutputFormat format_;
    std::string hash_;
    std::uint64_t seed_;
    std::string scenario_;
    std::size_t count_ = 0;
};

namespace detail {

inline Json complex_json(Complex z) { return {{"re", z.real()}, {"im", z.imag()}}; }

inline Json defects_json(const DefectReport& d) {
    return {{"consistency", d.consistency}, {"cocycle", d.cocycle}, {"unitarity", d.unitarity}, {"norm", d.norm}};
}

inline PatchCover build_cover(CoverScheme scheme, int n) {
    switch (scheme) {
        case CoverScheme::pairs:
            if (n < 2) throw ConfigError("cover", "the pairs cover needs at least 2 sites");
            return nn_pair_cover(n);
        case CoverScheme::sites: return single_site_cover(n);
        case CoverScheme::whole: return whole_chain_cover(n);
    }
    throw ConfigError("cover", "unknown cover scheme");
}

inline LocalHamiltonian build_hamiltonian(const ExperimentConfig& cfg, int n) {
    const ModelSpec& m = cfg.model;
    if (m.name == "tfim") return tfim_chain(n, m.coupling, m.field, m.assignment);
    if (m.name == "heisenberg") return heisenberg_chain(n, m.jx, m.jy, m.jz);
    if (m.name == "tfim_single_site") return tfim_single_site(n, m.coupling, m.field);
    if (m.name == "zero") return LocalHamiltonian(build_cover(cfg.cover, n));
    throw ConfigError("model.name", "unknown model \"" + m.name + "\"");
}

inline StateVector initial_state(const InitialStateSpec& spec, int n, std::uint64_t seed) {
    const auto dim = static_cast<Eigen::Index>(std::size_t{1} << n);
    if (spec.kind == "plus") return StateVector::Constant(dim, Complex(1.0 / std::sqrt(static_cast<double>(dim)), 0.0));
    StateVector v = StateVector::Zero(dim);
    if (spec.kind == "zero") {
        v(0) = 1.0;
    } else if (spec.kind == "basis") {
        v(static_cast<Eigen::Index>(spec.index)) = 1.0;
    } else {
        std::mt19937_64 rng(seed);
        std::normal_distribution<double> normal(0.0, 1.0);
        for (Eigen::Index k = 0; k < dim; ++k) {
            const double re = normal(rng);
            const double im = normal(rng);
            v(k) = Complex(re, im);
        }
        v.normalize();
    }
    return v;
}

/// An observable with every factor assigned to a cover patch.
struct ResolvedObservable {
    std::string id;
    std::vector<std::pair<Patch, LocalOperator>> chain;
};

inline std::vector<ResolvedObservable> resolve_observables(const ExperimentConfig& cfg, const PatchCover& cover) {
    std::vector<ResolvedObservable> out;
    for (std::size_t k = 0; k < cfg.observables.size(); ++k) {
        const auto& spec = cfg.observables[k];
        ResolvedObservable r{spec.id, {}};
        for (const auto& f : spec.chain) {
            const LocalOperator op = pauli_string(f.op);
            std::optional<Patch> patch = f.patch;
            if (!patch) {
                const auto host = cover.host_of(op.support);
                if (!host) {
                    throw ConfigError(index_path("observables", k),
                                      "operator " + f.op + " is not contained in any cover patch");
                }
                patch = cover.patch(*host);
            } else if (!cover.index_of(*patch)) {
                throw ConfigError(index_path("observables", k), "patch " + patch->to_string() + " is not in the cover");
            }
            r.chain.emplace_back(*patch, op);
        }
        out.push_back(std::move(r));
    }
    if (!out.empty()) return out;
    // Default set: Z_i, X_i and nearest-neighbor Z_i Z_{i+1}.
    const int n = cover.n_sites();
    for (const char* letter : {"Z", "X"}) {
        for (int i = 0; i < n; ++i) {
            const std::string id = letter + std::to_string(i);
            const LocalOperator op = pauli_string(id);
            out.push_back({id, {{cover.patch(*cover.host_of(op.support)), op}}});
        }
    }
    for (int i = 0; i + 1 < n; ++i) {
        const std::string id = "Z" + std::to_string(i) + " Z" + std::to_string(i + 1);
        const LocalOperator op = pauli_string(id);
        if (const auto host = cover.host_of(op.support)) {
            out.push_back({id, {{cover.patch(*host), op}}});
        } else {
            const LocalOperator a = pauli_string("Z" + std::to_string(i));
            const LocalOperator b = pauli_string("Z" + std::to_string(i + 1));
            out.push_back({id, {{cover.patch(*cover.host_of(a.support)), a}, {cover.patch(*cover.host_of(b.support)), b}}});
        }
    }
    return out;
}

inline Complex gauge_value(const GaugeState& s, const ResolvedObservable& o) {
    if (o.chain.size() == 1) return local_expectation(s, o.chain[0].first, o.chain[0].second);
    return correlator(s, o.chain);
}

// <psi| A_1 ... A_m |psi> for a global state.
inline Complex global_value(const StateVector& psi, const ResolvedObservable& o) {
    StateVector v = psi;
    for (auto it = o.chain.rbegin(); it != o.chain.rend(); ++it) apply_left(it->second.op, it->second.support, v);
    return psi.dot(v);
}

// Records observables at one time; returns the largest oracle gap (0 without an oracle).
inline double emit_observables(RecordWriter& w, const GaugeState& s, double time,
                               const std::vector<ResolvedObservable>& obs, const StateVector* oracle_state,
                               bool& passed, const ExperimentConfig& cfg) {
    const DefectReport d = diagnostics(s);
    if (!(d.consistency <= cfg.tolerance) || !(d.norm <= cfg.tolerance)) passed = false;
    const Json defects = defects_json(d);
    double worst = 0.0;
    for (const auto& o : obs) {
        const Complex value = gauge_value(s, o);
        Json r{{"kind", "observable"},
               {"time", time},
               {"observable", o.id},
               {"value", complex_json(value)},
               {"defects", defects},
               {"stats", {{"steps", s.steps()}}}};
        if (oracle_state) {
            const Complex expected = global_value(*oracle_state, o);
            const double gap = std::abs(value - expected);
            worst = std::max(worst, gap);
            if (!(gap <= cfg.tolerance)) passed = false;
            r["oracle"] = complex_json(expected);
            r["gap"] = gap;
        }
        w.write(std::move(r));
    }
    if (obs.empty()) {
        w.write({{"kind", "defects"}, {"time", time}, {"defects", defects}, {"stats", {{"steps", s.steps()}}}});
    }
    return worst;
}

inline void write_summary(RecordWriter& w, bool passed, Json extra = Json::object()) {
    extra["kind"] = "summary";
    extra["passed"] = passed;
    w.write(std::move(extra));
}

inline int run_evolution(const ExperimentConfig& cfg, RecordWriter& w, bool with_oracle) {
    const LocalHamiltonian h = build_hamiltonian(cfg, cfg.n_sites);
    const auto obs = resolve_observables(cfg, h.cover());
    const StateVector psi0 = initial_state(cfg.initial_state, cfg.n_sites, cfg.seed);
    GaugeState s = init(psi0, h, cfg.mode);
    bool passed = true;
    double worst = 0.0;
    for (double t : cfg.times) {
        s = evolve_to(std::move(s), h, cfg.integrator, t);
        spdlog::debug("t = {} after {} steps", t, s.steps());
        if (with_oracle) {
            const StateVector psi_s = schrodinger_evolve(h, psi0, t);
            worst = std::max(worst, emit_observables(w, s, t, obs, &psi_s, passed, cfg));
        } else {
            emit_observables(w, s, t, obs, nullptr, passed, cfg);
        }
    }
    Json extra{{"tolerance", cfg.tolerance}, {"steps", s.steps()}};
    if (with_oracle) extra["max_gap"] = worst;
    write_summary(w, passed, extra);
    if (with_oracle) spdlog::info("largest gauge-oracle gap {:.3e} (tolerance {:.1e})", worst, cfg.tolerance);
    return passed ? kExitOk : kExitAssertionFailed;
}

inline Json audit_json(const LightConeAudit& a) {
    Json entries = Json::array();
    for (const auto& e : a.entries) {
        Json ej{{"variable", e.variable},
                {"support", e.support},
                {"allowed", e.allowed},
                {"violations", e.violations},
                {"margin", e.margin},
                {"worst_outside_defect", e.worst_outside_defect}};
        ej["partner"] = e.partner ? Json(e.partner->sites()) : Json(nullptr);
        entries.push_back(std::move(ej));
    }
    return {{"kind", "audit"},     {"patch", a.patch.sites()}, {"depth", a.depth},
            {"tolerance", a.tolerance}, {"passed", a.passed()},  {"entries", entries}};
}

inline int run_circuit_scenario(const ExperimentConfig& cfg, RecordWriter& w) {
    const CircuitSpec& spec = *cfg.circuit;
    if (!spec.audit_patches.empty() && cfg.mode != EvolutionMode::generator) {
        throw ConfigError("integrator.mode", "light-cone audits need generator mode");
    }
    const PatchCover cover = build_cover(CoverScheme::pairs, cfg.n_sites);
    for (std::size_t k = 0; k < spec.audit_patches.size(); ++k) {
        if (!cover.index_of(spec.audit_patches[k])) {
            throw ConfigError(index_path("circuit.audit_patches", k), "patch is not in the cover");
        }
    }
    const auto obs = resolve_observables(cfg, cover);
    const Circuit circuit = brickwork(cfg.n_sites, spec.depth, cfg.seed);
    const StateVector psi0 = initial_state(cfg.initial_state, cfg.n_sites, cfg.seed);
    GaugeState s = init(psi0, cover, cfg.mode);
    StateVector psi_s = psi0;
    bool passed = true;
    double worst = 0.0;
    for (std::size_t l = 0; l < circuit.depth(); ++l) {
        s = apply_commuting_layer(std::move(s), circuit.layers[l], 1e-12);
        for (const Gate& g : circuit.layers[l]) apply_left(g.op, g.support, psi_s);
        const double layer_time = static_cast<double>(l + 1);
        worst = std::max(worst, emit_observables(w, s, layer_time, obs, &psi_s, passed, cfg));
        for (const Patch& p : spec.audit_patches) {
            const LightConeAudit a = audit_lightcone(s, p, static_cast<int>(l + 1), spec.audit_tolerance);
            if (!a.passed()) passed = false;
            Json r = audit_json(a);
            r["time"] = layer_time;
            w.write(std::move(r));
        }
    }
    write_summary(w, passed, {{"tolerance", cfg.tolerance}, {"max_gap", worst}, {"depth", spec.depth}});
    return passed ? kExitOk : kExitAssertionFailed;
}

inline int run_measure_scenario(const ExperimentConfig& cfg, RecordWriter& w) {
    const MeasurementSpec& spec = *cfg.measurement;
    const LocalHamiltonian h = build_hamiltonian(cfg, cfg.n_sites);
    const auto obs = resolve_observables(cfg, h.cover());
    const StateVector psi0 = initial_state(cfg.initial_state, cfg.n_sites, cfg.seed);
    GaugeState s = evolve_to(init(psi0, h, cfg.mode), h, cfg.integrator, spec.time);
    StateVector psi_s = schrodinger_evolve(h, psi0, spec.time);

    const KrausSet ks = z_basis_measurement(spec.site);
    const auto probabilities = measurement_probabilities(s, ks);
    std::vector<double> oracle_probabilities;
    std::vector<StateVector> branches;
    for (const auto& e : ks.ops) {
        StateVector v = psi_s;
        apply_left(e, ks.patch, v);
        oracle_probabilities.push_back(v.squaredNorm());
        branches.push_back(std::move(v));
    }
    std::mt19937_64 rng(cfg.seed);
    OutcomeChoice choice = &rng;
    if (spec.outcome) choice = *spec.outcome;
    auto [post, record] = apply_measurement(std::move(s), ks, choice);
    s = std::move(post);
    psi_s = branches[record.outcome].normalized();

    bool passed = true;
    double worst_probability = 0.0;
    for (std::size_t k = 0; k < probabilities.size(); ++k) {
        worst_probability = std::max(worst_probability, std::abs(probabilities[k] - oracle_probabilities[k]));
    }
    if (!(worst_probability <= cfg.tolerance)) passed = false;
    const DefectReport after = diagnostics(s);
    w.write({{"kind", "measurement"},
             {"time", spec.time},
             {"site", spec.site},
             {"outcome", record.outcome},
             {"probability", record.probability},
             {"probabilities", probabilities},
             {"oracle_probabilities", oracle_probabilities},
             {"defects", defects_json(after)}});

    double worst = emit_observables(w, s, spec.time, obs, &psi_s, passed, cfg);
    for (double t : cfg.times) {
        if (t <= spec.time) continue;
        s = evolve_to(std::move(s), h, cfg.integrator, t);
        const StateVector later = mat_exp_hermitian(h.dense(), t - spec.time) * psi_s;
        worst = std::max(worst, emit_observables(w, s, t, obs, &later, passed, cfg));
    }
    write_summary(w, passed,
                  {{"tolerance", cfg.tolerance}, {"max_gap", worst}, {"max_probability_gap", worst_probability}});
    return passed ? kExitOk : kExitAssertionFailed;
}

inline int run_bench_scenario(const ExperimentConfig& cfg, RecordWriter& w) {
    using clock = std::chrono::steady_clock;
    const BenchSpec& spec = *cfg.bench;
    for (int n : spec.sizes) {
        const LocalHamiltonian h = build_hamiltonian(cfg, n);
        const StateVector psi0 = initial_state(cfg.initial_state.kind == "basis" ? InitialStateSpec{} : cfg.initial_state,
                                               n, cfg.seed);
        const auto o0 = clock::now();
        (void)propagator(h, 1.0);
        const double oracle_seconds = std::chrono::duration<double>(clock::now() - o0).count();
        for (EvolutionMode mode : spec.modes) {
            GaugeState s = init(psi0, h, mode);
            const auto t0 = clock::now();
            for (int k = 0; k < spec.steps; ++k) s = step(std::move(s), h, cfg.integrator);
            const double per_step = std::chrono::duration<double>(clock::now() - t0).count() / spec.steps;
            spdlog::info("n = {:2d} {:9s}: {:.3e} s/step, oracle {:.3e} s", n, gaugepic::to_string(mode), per_step,
                         oracle_seconds);
            w.write({{"kind", "bench"}, {"n_sites", n}, {"mode", gaugepic::to_string(mode)}, {"steps", s.steps()}},
                    std::make_pair(per_step, oracle_seconds));
        }
    }
    write_summary(w, true);
    return kExitOk;
}

}  // namespace detail

/// Runs one scenario, writing its records to `out`. Config problems
/// found while building the model throw ConfigError; numerical divergence
/// and contract violations are reported as an error record.
inline int run(const ExperimentConfig& cfg, std::ostream& out) {
    validate_config(cfg);
    RecordWriter w(out, cfg);
    spdlog::info("scenario {} (config {}, seed {})", to_string(cfg.scenario), config_hash(cfg), cfg.seed);
    try {
        switch (cfg.scenario) {
            case Scenario::evolve: return detail::run_evolution(cfg, w, false);
            case Scenario::validate: return detail::run_evolution(cfg, w, true);
            case Scenario::circuit: return detail::run_circuit_scenario(cfg, w);
            case Scenario::measure: return detail::run_measure_scenario(cfg, w);
            case Scenario::bench: return detail::run_bench_scenario(cfg, w);
        }
    } catch (const DivergenceError& e) {
        spdlog::error("{}", e.what());
        w.write({{"kind", "error"}, {"error", "divergence"}, {"message", e.what()}});
        return kExitDiverged;
    } catch (const ContractError& e) {
        spdlog::error("{}", e.what());
        w.write({{"kind", "error"}, {"error", "contract"}, {"message", e.what()}});
        return kExitAssertionFailed;
    }
    return kExitOk;
}

}  // namespace gaugepic::app
