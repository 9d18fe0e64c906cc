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

// Experiment description for the batch runner, read from a JSON file.
// Errors name the offending field as a path such as "model.name" or
// "observables[2].op".

#include "gaugepic/gaugepic.hpp"

#include <nlohmann/json.hpp>

#include <cstdint>
#include <fstream>
#include <optional>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace gaugepic::app {

using Json = nlohmann::json;

class ConfigError : public std::runtime_error {
  public:
    ConfigError(std::string field, const std::string& message)
        : std::runtime_error(field.empty() ? message : field + ": " + message), field_(std::move(field)) {}

    const std::string& field() const { return field_; }

  private:
    std::string field_;
};

enum class Scenario { evolve, circuit, measure, validate, bench };
enum class CoverScheme { pairs, sites, whole };
enum class OutputFormat { json, csv };

inline const char* to_string(Scenario s) {
    switch (s) {
        case Scenario::evolve: return "evolve";
        case Scenario::circuit: return "circuit";
        case Scenario::measure: return "measure";
        case Scenario::validate: return "validate";
        case Scenario::bench: return "bench";
    }
    return "?";
}

inline const char* to_string(CoverScheme c) {
    switch (c) {
        case CoverScheme::pairs: return "pairs";
        case CoverScheme::sites: return "sites";
        case CoverScheme::whole: return "whole";
    }
    return "?";
}

inline const char* to_string(OutputFormat f) { return f == OutputFormat::json ? "json" : "csv"; }

inline std::optional<Scenario> parse_scenario(const std::string& s) {
    for (Scenario v : {Scenario::evolve, Scenario::circuit, Scenario::measure, Scenario::validate, Scenario::bench}) {
        if (s == to_string(v)) return v;
    }
    return std::nullopt;
}

inline std::optional<EvolutionMode> parse_mode(const std::string& s) {
    if (s == "generator") return EvolutionMode::generator;
    if (s == "direct") return EvolutionMode::direct;
    return std::nullopt;
}

inline std::optional<OutputFormat> parse_format(const std::string& s) {
    if (s == "json") return OutputFormat::json;
    if (s == "csv") return OutputFormat::csv;
    return std::nullopt;
}

struct ModelSpec {
    std::string name = "tfim";  // tfim | heisenberg | tfim_single_site | zero
    double coupling = 1.0;
    double field = 1.0;
    double jx = 1.0, jy = 1.0, jz = 1.0;
    FieldAssignment assignment = FieldAssignment::leftmost;
};

struct InitialStateSpec {
    std::string kind = "plus";  // plus | zero | basis | random
    std::uint64_t index = 0;    // for kind == basis
};

/// One factor of an observable: a Pauli string, evaluated on `patch` (or on
/// the first cover patch containing it).
struct ObservableFactor {
    std::optional<Patch> patch;
    std::string op;
};

struct ObservableSpec {
    std::string id;
    std::vector<ObservableFactor> chain;
};

struct CircuitSpec {
    int depth = 1;
    std::vector<Patch> audit_patches;
    double audit_tolerance = 1e-12;
};

struct MeasurementSpec {
    int site = 0;
    double time = 0.0;
    std::optional<std::size_t> outcome;  // sampled from the seed when absent
};

struct BenchSpec {
    std::vector<int> sizes{4, 6};
    int steps = 10;
    std::vector<EvolutionMode> modes{EvolutionMode::generator, EvolutionMode::direct};
};

struct ExperimentConfig {
    ModelSpec model;
    int n_sites = 0;
    CoverScheme cover = CoverScheme::pairs;
    Scenario scenario = Scenario::evolve;
    IntegratorConfig integrator;
    EvolutionMode mode = EvolutionMode::generator;
    InitialStateSpec initial_state;
    std::vector<ObservableSpec> observables;
    std::vector<double> times;
    std::uint64_t seed = 0;
    double tolerance = 1e-6;
    std::optional<CircuitSpec> circuit;
    std::optional<MeasurementSpec> measurement;
    std::optional<BenchSpec> bench;
    std::string output_path;  // empty = standard output
    OutputFormat format = OutputFormat::json;
};

namespace detail {

inline std::string join_path(const std::string& base, const std::string& key) {
    return base.empty() ? key : base + "." + key;
}

inline std::string index_path(const std::string& base, std::size_t k) { return base + "[" + std::to_string(k) + "]"; }

// Rejects keys outside `allowed`.
inline void check_keys(const Json& obj, const std::string& path, std::initializer_list<const char*> allowed) {
    for (const auto& [key, _] : obj.items()) {
        bool known = false;
        for (const char* a : allowed) known = known || key == a;
        if (!known) throw ConfigError(join_path(path, key), "unknown field");
    }
}

inline const Json& require_object(const Json& j, const std::string& path) {
    if (!j.is_object()) throw ConfigError(path, "expected an object");
    return j;
}

inline double read_number(const Json& j, const std::string& path) {
    if (!j.is_number()) throw ConfigError(path, "expected a number");
    const double v = j.get<double>();
    if (!std::isfinite(v)) throw ConfigError(path, "expected a finite number");
    return v;
}

inline std::int64_t read_integer(const Json& j, const std::string& path) {
    if (!j.is_number_integer()) throw ConfigError(path, "expected an integer");
    return j.get<std::int64_t>();
}

inline std::uint64_t read_unsigned(const Json& j, const std::string& path) {
    if (j.is_number_unsigned()) return j.get<std::uint64_t>();
    if (j.is_number_integer() && j.get<std::int64_t>() >= 0) return static_cast<std::uint64_t>(j.get<std::int64_t>());
    throw ConfigError(path, "expected a non-negative integer");
}

inline std::string read_string(const Json& j, const std::string& path) {
    if (!j.is_string()) throw ConfigError(path, "expected a string");
    return j.get<std::string>();
}

inline bool read_bool(const Json& j, const std::string& path) {
    if (!j.is_boolean()) throw ConfigError(path, "expected true or false");
    return j.get<bool>();
}

inline Patch read_patch(const Json& j, const std::string& path) {
    if (!j.is_array() || j.empty()) throw ConfigError(path, "expected a nonempty array of site indices");
    std::vector<int> sites;
    for (std::size_t k = 0; k < j.size(); ++k) sites.push_back(static_cast<int>(read_integer(j[k], index_path(path, k))));
    try {
        return Patch(std::move(sites));
    } catch (const ContractError& e) {
        throw ConfigError(path, e.what());
    }
}

inline void check_pauli(const std::string& op, const std::string& path) {
    try {
        (void)pauli_string(op);
    } catch (const ContractError& e) {
        throw ConfigError(path, e.what());
    }
}

inline ModelSpec read_model(const Json& j, const std::string& path) {
    require_object(j, path);
    ModelSpec m;
    if (!j.contains("name")) throw ConfigError(join_path(path, "name"), "missing required field");
    m.name = read_string(j["name"], join_path(path, "name"));
    if (m.name == "tfim" || m.name == "tfim_single_site") {
        check_keys(j, path, {"name", "coupling", "field", "field_assignment"});
        if (j.contains("coupling")) m.coupling = read_number(j["coupling"], join_path(path, "coupling"));
        if (j.contains("field")) m.field = read_number(j["field"], join_path(path, "field"));
        if (j.contains("field_assignment")) {
            const std::string p = join_path(path, "field_assignment");
            if (m.name != "tfim") throw ConfigError(p, "only the pair-cover tfim model apportions fields");
            const std::string a = read_string(j["field_assignment"], p);
            if (a == "leftmost") {
                m.assignment = FieldAssignment::leftmost;
            } else if (a == "split") {
                m.assignment = FieldAssignment::split;
            } else {
                throw ConfigError(p, "expected \"leftmost\" or \"split\", got \"" + a + "\"");
            }
        }
    } else if (m.name == "heisenberg") {
        check_keys(j, path, {"name", "jx", "jy", "jz"});
        if (j.contains("jx")) m.jx = read_number(j["jx"], join_path(path, "jx"));
        if (j.contains("jy")) m.jy = read_number(j["jy"], join_path(path, "jy"));
        if (j.contains("jz")) m.jz = read_number(j["jz"], join_path(path, "jz"));
    } else if (m.name == "zero") {
        check_keys(j, path, {"name"});
    } else {
        throw ConfigError(join_path(path, "name"),
                          "unknown model \"" + m.name + "\" (expected tfim, heisenberg, tfim_single_site or zero)");
    }
    return m;
}

inline ObservableFactor read_factor(const Json& j, const std::string& path) {
    ObservableFactor f;
    if (j.is_string()) {
        f.op = j.get<std::string>();
        check_pauli(f.op, path);
        return f;
    }
    require_object(j, path);
    check_keys(j, path, {"patch", "op"});
    if (!j.contains("op")) throw ConfigError(join_path(path, "op"), "missing required field");
    f.op = read_string(j["op"], join_path(path, "op"));
    check_pauli(f.op, join_path(path, "op"));
    if (j.contains("patch")) f.patch = read_patch(j["patch"], join_path(path, "patch"));
    return f;
}

inline ObservableSpec read_observable(const Json& j, const std::string& path) {
    ObservableSpec o;
    if (j.is_string()) {
        o.chain.push_back(read_factor(j, path));
        o.id = o.chain[0].op;
        return o;
    }
    require_object(j, path);
    check_keys(j, path, {"id", "patch", "op", "chain"});
    if (j.contains("chain")) {
        if (j.contains("op") || j.contains("patch")) {
            throw ConfigError(path, "give either \"chain\" or \"op\"/\"patch\", not both");
        }
        const std::string cp = join_path(path, "chain");
        if (!j["chain"].is_array() || j["chain"].empty()) throw ConfigError(cp, "expected a nonempty array");
        for (std::size_t k = 0; k < j["chain"].size(); ++k) o.chain.push_back(read_factor(j["chain"][k], index_path(cp, k)));
    } else {
        Json single = Json::object();
        if (j.contains("op")) single["op"] = j["op"];
        if (j.contains("patch")) single["patch"] = j["patch"];
        o.chain.push_back(read_factor(single, path));
    }
    if (j.contains("id")) {
        o.id = read_string(j["id"], join_path(path, "id"));
    } else {
        for (std::size_t k = 0; k < o.chain.size(); ++k) o.id += (k ? " | " : "") + o.chain[k].op;
    }
    return o;
}

inline void read_integrator(const Json& j, const std::string& path, ExperimentConfig& c) {
    require_object(j, path);
    check_keys(j, path, {"dt", "mode", "scheme", "reunitarize_every", "renormalize"});
    if (j.contains("dt")) c.integrator.dt = read_number(j["dt"], join_path(path, "dt"));
    if (j.contains("mode")) {
        const std::string p = join_path(path, "mode");
        const auto m = parse_mode(read_string(j["mode"], p));
        if (!m) throw ConfigError(p, "expected \"generator\" or \"direct\"");
        c.mode = *m;
    }
    if (j.contains("scheme") && read_string(j["scheme"], join_path(path, "scheme")) != "rk4") {
        throw ConfigError(join_path(path, "scheme"), "only \"rk4\" is supported");
    }
    if (j.contains("reunitarize_every")) {
        const std::string p = join_path(path, "reunitarize_every");
        const auto v = read_integer(j["reunitarize_every"], p);
        if (v < 0) throw ConfigError(p, "must be non-negative");
        c.integrator.reunitarize_every = static_cast<int>(v);
    }
    if (j.contains("renormalize")) c.integrator.renormalize = read_bool(j["renormalize"], join_path(path, "renormalize"));
}

inline InitialStateSpec read_initial_state(const Json& j, const std::string& path) {
    InitialStateSpec s;
    if (j.is_string()) {
        s.kind = j.get<std::string>();
    } else {
        require_object(j, path);
        check_keys(j, path, {"kind", "index"});
        if (!j.contains("kind")) throw ConfigError(join_path(path, "kind"), "missing required field");
        s.kind = read_string(j["kind"], join_path(path, "kind"));
        if (j.contains("index")) s.index = read_unsigned(j["index"], join_path(path, "index"));
    }
    if (s.kind != "plus" && s.kind != "zero" && s.kind != "basis" && s.kind != "random") {
        throw ConfigError(j.is_string() ? path : join_path(path, "kind"),
                          "expected plus, zero, basis or random, got \"" + s.kind + "\"");
    }
    return s;
}

inline CircuitSpec read_circuit(const Json& j, const std::string& path) {
    require_object(j, path);
    check_keys(j, path, {"depth", "audit_patches", "audit_tolerance"});
    CircuitSpec c;
    if (!j.contains("depth")) throw ConfigError(join_path(path, "depth"), "missing required field");
    const auto depth = read_integer(j["depth"], join_path(path, "depth"));
    if (depth < 1) throw ConfigError(join_path(path, "depth"), "must be at least 1");
    c.depth = static_cast<int>(depth);
    if (j.contains("audit_patches")) {
        const std::string p = join_path(path, "audit_patches");
        if (!j["audit_patches"].is_array()) throw ConfigError(p, "expected an array of patches");
        for (std::size_t k = 0; k < j["audit_patches"].size(); ++k) {
            c.audit_patches.push_back(read_patch(j["audit_patches"][k], index_path(p, k)));
        }
    }
    if (j.contains("audit_tolerance")) {
        c.audit_tolerance = read_number(j["audit_tolerance"], join_path(path, "audit_tolerance"));
        if (!(c.audit_tolerance > 0)) throw ConfigError(join_path(path, "audit_tolerance"), "must be positive");
    }
    return c;
}

inline MeasurementSpec read_measurement(const Json& j, const std::string& path) {
    require_object(j, path);
    check_keys(j, path, {"site", "time", "outcome"});
    MeasurementSpec m;
    if (!j.contains("site")) throw ConfigError(join_path(path, "site"), "missing required field");
    m.site = static_cast<int>(read_integer(j["site"], join_path(path, "site")));
    if (j.contains("time")) {
        m.time = read_number(j["time"], join_path(path, "time"));
        if (m.time < 0) throw ConfigError(join_path(path, "time"), "must be non-negative");
    }
    if (j.contains("outcome") && !j["outcome"].is_null()) {
        const auto k = read_unsigned(j["outcome"], join_path(path, "outcome"));
        if (k > 1) throw ConfigError(join_path(path, "outcome"), "a Z-basis measurement has outcomes 0 and 1");
        m.outcome = static_cast<std::size_t>(k);
    }
    return m;
}

inline BenchSpec read_bench(const Json& j, const std::string& path) {
    require_object(j, path);
    check_keys(j, path, {"sizes", "steps", "modes"});
    BenchSpec b;
    if (j.contains("sizes")) {
        const std::string p = join_path(path, "sizes");
        if (!j["sizes"].is_array() || j["sizes"].empty()) throw ConfigError(p, "expected a nonempty array");
        b.sizes.clear();
        for (std::size_t k = 0; k < j["sizes"].size(); ++k) {
            const auto n = read_integer(j["sizes"][k], index_path(p, k));
            if (n < 2 || n > 12) throw ConfigError(index_path(p, k), "bench sizes must lie in [2, 12]");
            b.sizes.push_back(static_cast<int>(n));
        }
    }
    if (j.contains("steps")) {
        const auto s = read_integer(j["steps"], join_path(path, "steps"));
        if (s < 1) throw ConfigError(join_path(path, "steps"), "must be at least 1");
        b.steps = static_cast<int>(s);
    }
    if (j.contains("modes")) {
        const std::string p = join_path(path, "modes");
        if (!j["modes"].is_array() || j["modes"].empty()) throw ConfigError(p, "expected a nonempty array");
        b.modes.clear();
        for (std::size_t k = 0; k < j["modes"].size(); ++k) {
            const auto m = parse_mode(read_string(j["modes"][k], index_path(p, k)));
            if (!m) throw ConfigError(index_path(p, k), "expected \"generator\" or \"direct\"");
            b.modes.push_back(*m);
        }
    }
    return b;
}

}  // namespace detail

/// Checks the cross-field invariants of a parsed or overridden config.
inline void validate_config(const ExperimentConfig& c) {
    if (c.scenario != Scenario::bench) {
        if (c.n_sites < 1 || c.n_sites > 12) throw ConfigError("n_sites", "must lie in [1, 12]");
    }
    if (!(c.integrator.dt > 0.0) || !std::isfinite(c.integrator.dt)) {
        throw ConfigError("integrator.dt", "must be positive");
    }
    for (std::size_t k = 0; k < c.times.size(); ++k) {
        if (c.times[k] < 0.0) throw ConfigError(detail::index_path("times", k), "must be non-negative");
        if (k > 0 && c.times[k] <= c.times[k - 1]) {
            throw ConfigError(detail::index_path("times", k), "times must be strictly ascending");
        }
    }
    const bool single_site = c.model.name == "tfim_single_site";
    if (single_site && c.cover != CoverScheme::sites) {
        throw ConfigError("cover", "model tfim_single_site requires the \"sites\" cover");
    }
    if ((c.model.name == "tfim" || c.model.name == "heisenberg") && c.cover != CoverScheme::pairs) {
        throw ConfigError("cover", "model " + c.model.name + " requires the \"pairs\" cover");
    }
    if (c.scenario != Scenario::bench && c.model.name != "zero" && c.n_sites < 2) {
        throw ConfigError("n_sites", "model " + c.model.name + " needs at least 2 sites");
    }
    if (c.initial_state.kind == "basis" && c.scenario != Scenario::bench &&
        c.initial_state.index >= (std::uint64_t{1} << c.n_sites)) {
        throw ConfigError("initial_state.index", "basis index out of range");
    }
    for (std::size_t k = 0; k < c.observables.size(); ++k) {
        for (std::size_t m = 0; m < c.observables[k].chain.size(); ++m) {
            const auto& f = c.observables[k].chain[m];
            const auto path = detail::index_path("observables", k);
            const LocalOperator op = pauli_string(f.op);
            if (op.support.sites().back() >= c.n_sites) throw ConfigError(path, "operator acts outside the chain");
            if (f.patch && f.patch->sites().back() >= c.n_sites) throw ConfigError(path, "patch lies outside the chain");
            if (f.patch && !op.support.is_subset_of(*f.patch)) {
                throw ConfigError(path, "operator " + f.op + " is not supported in patch " + f.patch->to_string());
            }
        }
    }
    switch (c.scenario) {
        case Scenario::circuit:
            if (!c.circuit) throw ConfigError("circuit", "required by the circuit scenario");
            if (c.cover != CoverScheme::pairs) throw ConfigError("cover", "circuits run on the \"pairs\" cover");
            for (std::size_t k = 0; k < c.circuit->audit_patches.size(); ++k) {
                if (c.circuit->audit_patches[k].sites().back() >= c.n_sites) {
                    throw ConfigError(detail::index_path("circuit.audit_patches", k), "patch lies outside the chain");
                }
            }
            break;
        case Scenario::measure:
            if (!c.measurement) throw ConfigError("measurement", "required by the measure scenario");
            if (c.measurement->site < 0 || c.measurement->site >= c.n_sites) {
                throw ConfigError("measurement.site", "site lies outside the chain");
            }
            for (std::size_t k = 0; k < c.times.size(); ++k) {
                if (c.times[k] < c.measurement->time) {
                    throw ConfigError(detail::index_path("times", k), "measure scenario times must not precede the measurement");
                }
            }
            break;
        case Scenario::bench:
            if (!c.bench) throw ConfigError("bench", "required by the bench scenario");
            break;
        case Scenario::evolve:
        case Scenario::validate:
            if (c.times.empty()) throw ConfigError("times", "required by the " + std::string(to_string(c.scenario)) + " scenario");
            break;
    }
}

inline ExperimentConfig parse_config(const Json& j) {
    using namespace detail;
    if (!j.is_object()) throw ConfigError("", "config must be a JSON object");
    check_keys(j, "", {"model", "n_sites", "cover", "scenario", "integrator", "initial_state", "observables", "times",
                       "seed", "tolerance", "circuit", "measurement", "bench", "output"});
    ExperimentConfig c;
    if (!j.contains("scenario")) throw ConfigError("scenario", "missing required field");
    {
        const auto s = parse_scenario(read_string(j["scenario"], "scenario"));
        if (!s) throw ConfigError("scenario", "expected evolve, circuit, measure, validate or bench");
        c.scenario = *s;
    }
    if (j.contains("model")) {
        c.model = read_model(j["model"], "model");
    } else if (c.scenario == Scenario::circuit) {
        c.model.name = "zero";
    } else if (c.scenario != Scenario::bench) {
        throw ConfigError("model", "missing required field");
    }
    if (j.contains("n_sites")) {
        c.n_sites = static_cast<int>(read_integer(j["n_sites"], "n_sites"));
    } else if (c.scenario != Scenario::bench) {
        throw ConfigError("n_sites", "missing required field");
    }
    if (j.contains("cover")) {
        const std::string s = read_string(j["cover"], "cover");
        if (s == "pairs") {
            c.cover = CoverScheme::pairs;
        } else if (s == "sites") {
            c.cover = CoverScheme::sites;
        } else if (s == "whole") {
            c.cover = CoverScheme::whole;
        } else {
            throw ConfigError("cover", "expected pairs, sites or whole");
        }
    } else if (c.model.name == "tfim_single_site") {
        c.cover = CoverScheme::sites;
    }
    if (j.contains("integrator")) read_integrator(j["integrator"], "integrator", c);
    if (j.contains("initial_state")) c.initial_state = read_initial_state(j["initial_state"], "initial_state");
    if (j.contains("observables")) {
        if (!j["observables"].is_array()) throw ConfigError("observables", "expected an array");
        for (std::size_t k = 0; k < j["observables"].size(); ++k) {
            c.observables.push_back(read_observable(j["observables"][k], index_path("observables", k)));
        }
    }
    if (j.contains("times")) {
        if (!j["times"].is_array()) throw ConfigError("times", "expected an array of numbers");
        for (std::size_t k = 0; k < j["times"].size(); ++k) c.times.push_back(read_number(j["times"][k], index_path("times", k)));
    }
    if (j.contains("seed")) c.seed = read_unsigned(j["seed"], "seed");
    if (j.contains("tolerance")) {
        c.tolerance = read_number(j["tolerance"], "tolerance");
        if (!(c.tolerance > 0)) throw ConfigError("tolerance", "must be positive");
    }
    if (j.contains("circuit")) c.circuit = read_circuit(j["circuit"], "circuit");
    if (j.contains("measurement")) c.measurement = read_measurement(j["measurement"], "measurement");
    if (j.contains("bench")) c.bench = read_bench(j["bench"], "bench");
    if (j.contains("output")) {
        require_object(j["output"], "output");
        check_keys(j["output"], "output", {"path", "format"});
        if (j["output"].contains("path")) c.output_path = read_string(j["output"]["path"], "output.path");
        if (j["output"].contains("format")) {
            const auto f = parse_format(read_string(j["output"]["format"], "output.format"));
            if (!f) throw ConfigError("output.format", "expected \"json\" or \"csv\"");
            c.format = *f;
        }
    }
    validate_config(c);
    return c;
}

inline ExperimentConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("", "cannot open config file " + path);
    Json j;
    try {
        j = Json::parse(in);
    } catch (const Json::parse_error& e) {
        throw ConfigError("", "config file " + path + " is not valid JSON: " + e.what());
    }
    return parse_config(j);
}

/// Canonical JSON form of the effective config; hashed to tag every record.
inline Json canonical_json(const ExperimentConfig& c) {
    Json j;
    j["scenario"] = to_string(c.scenario);
    j["model"] = {{"name", c.model.name}};
    if (c.model.name == "tfim" || c.model.name == "tfim_single_site") {
        j["model"]["coupling"] = c.model.coupling;
        j["model"]["field"] = c.model.field;
        if (c.model.name == "tfim") {
            j["model"]["field_assignment"] = c.model.assignment == FieldAssignment::leftmost ? "leftmost" : "split";
        }
    } else if (c.model.name == "heisenberg") {
        j["model"]["jx"] = c.model.jx;
        j["model"]["jy"] = c.model.jy;
        j["model"]["jz"] = c.model.jz;
    }
    j["n_sites"] = c.n_sites;
    j["cover"] = to_string(c.cover);
    j["integrator"] = {{"dt", c.integrator.dt},
                       {"mode", gaugepic::to_string(c.mode)},
                       {"scheme", "rk4"},
                       {"reunitarize_every", c.integrator.reunitarize_every},
                       {"renormalize", c.integrator.renormalize}};
    j["initial_state"] = {{"kind", c.initial_state.kind}, {"index", c.initial_state.index}};
    j["observables"] = Json::array();
    for (const auto& o : c.observables) {
        Json chain = Json::array();
        for (const auto& f : o.chain) {
            Json fj{{"op", f.op}};
            if (f.patch) fj["patch"] = f.patch->sites();
            chain.push_back(fj);
        }
        j["observables"].push_back({{"id", o.id}, {"chain", chain}});
    }
    j["times"] = c.times;
    j["seed"] = c.seed;
    j["tolerance"] = c.tolerance;
    if (c.circuit) {
        Json patches = Json::array();
        for (const auto& p : c.circuit->audit_patches) patches.push_back(p.sites());
        j["circuit"] = {{"depth", c.circuit->depth},
                        {"audit_patches", patches},
                        {"audit_tolerance", c.circuit->audit_tolerance}};
    }
    if (c.measurement) {
        j["measurement"] = {{"site", c.measurement->site}, {"time", c.measurement->time}};
        j["measurement"]["outcome"] = c.measurement->outcome ? Json(*c.measurement->outcome) : Json(nullptr);
    }
    if (c.bench) {
        Json modes = Json::array();
        for (auto m : c.bench->modes) modes.push_back(gaugepic::to_string(m));
        j["bench"] = {{"sizes", c.bench->sizes}, {"steps", c.bench->steps}, {"modes", modes}};
    }
    return j;
}

/// 64-bit FNV-1a.
inline std::uint64_t fnv1a(const std::string& bytes) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char ch : bytes) {
        h ^= ch;
        h *= 0x100000001b3ULL;
    }
    return h;
}

/// Hex FNV-1a hash of the canonical config. Output location and format are
/// excluded so that the same experiment hashes identically wherever it is written.
inline std::string config_hash(const ExperimentConfig& c) {
    std::ostringstream os;
    os << std::hex;
    os.width(16);
    os.fill('0');
    os << fnv1a(canonical_json(c).dump());
    return os.str();
}

}  // namespace gaugepic::app
