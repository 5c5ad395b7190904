#include "scenario_file.hpp"

#include <algorithm>
#include <fstream>
#include <initializer_list>
#include <sstream>

#include "json.hpp"

namespace abdsde::cli {
namespace {

using nlohmann::json;

[[noreturn]] void field_error(const std::string& field, const std::string& what) {
  throw Error(ErrorKind::kParseError, "field '" + field + "': " + what);
}

void allow_keys(const json& obj, const std::string& where,
                std::initializer_list<std::string_view> keys) {
  if (!obj.is_object()) field_error(where, "expected an object");
  for (const auto& item : obj.items()) {
    if (std::find(keys.begin(), keys.end(), item.key()) == keys.end()) {
      field_error(where.empty() ? item.key() : where + "." + item.key(), "unknown key");
    }
  }
}

std::string join(const std::string& where, const std::string& key) {
  return where.empty() ? key : where + "." + key;
}

double number(const json& obj, const std::string& where, const std::string& key) {
  if (!obj.contains(key)) field_error(join(where, key), "missing");
  const json& v = obj.at(key);
  if (!v.is_number()) field_error(join(where, key), "expected a number");
  return v.get<double>();
}

double number_or(json& obj, const std::string& where, const std::string& key, double fallback) {
  if (!obj.contains(key)) obj[key] = fallback;
  return number(obj, where, key);
}

std::uint64_t count_or(json& obj, const std::string& where, const std::string& key,
                       std::uint64_t fallback) {
  if (!obj.contains(key)) obj[key] = fallback;
  const json& v = obj.at(key);
  if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<std::int64_t>() >= 0)) {
    field_error(join(where, key), "expected a nonnegative integer");
  }
  return v.get<std::uint64_t>();
}

std::string text(const json& obj, const std::string& where, const std::string& key) {
  if (!obj.contains(key)) field_error(join(where, key), "missing");
  if (!obj.at(key).is_string()) field_error(join(where, key), "expected a string");
  return obj.at(key).get<std::string>();
}

Params params_of(const json& obj, const std::string& where) {
  Params out;
  if (!obj.contains("params")) return out;
  const json& p = obj.at("params");
  if (!p.is_object()) field_error(where + ".params", "expected an object");
  for (const auto& item : p.items()) {
    if (!item.value().is_number()) field_error(where + ".params." + item.key(), "expected a number");
    out.emplace(item.key(), item.value().get<double>());
  }
  return out;
}

DelayForm delay_form(const json& v, const std::string& where) {
  if (v.is_number()) return DelayForm::constant(v.get<double>());
  allow_keys(v, where, {"a", "b"});
  json copy = v;
  return DelayForm::affine(number(copy, where, "a"), number_or(copy, where, "b", 0.0));
}

// Any library failure while building the scenario becomes a ValidationError.
template <typename F>
auto validated(F&& build) -> decltype(build()) {
  try {
    return build();
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::kParseError || e.kind() == ErrorKind::kValidationError) throw;
    throw Error(ErrorKind::kValidationError, e.kind(), e.detail());
  }
}

GeneratorSpec generator_of(const json& g, const std::string& where, Dims dims) {
  allow_keys(g, where, {"name", "params", "lipschitz"});
  const std::string name = text(g, where, "name");
  GeneratorSpec spec = validated([&] { return builtin_generator(name, params_of(g, where), dims); });
  if (g.contains("lipschitz")) {
    const std::string lw = where + ".lipschitz";
    allow_keys(g.at("lipschitz"), lw, {"c", "alpha1", "alpha2"});
    json lip = g.at("lipschitz");
    LipschitzData data = spec.lipschitz();
    data.c = number_or(lip, lw, "c", data.c);
    data.alpha1 = number_or(lip, lw, "alpha1", data.alpha1);
    data.alpha2 = number_or(lip, lw, "alpha2", data.alpha2);
    spec = validated([&] { return spec.with_lipschitz(data); });
  }
  return spec;
}

TerminalSpec terminal_of(const json& t, const std::string& where, Dims dims) {
  allow_keys(t, where, {"name", "params"});
  const std::string name = text(t, where, "name");
  return validated([&] { return builtin_terminal(name, params_of(t, where), dims); });
}

json parse_text(const std::string& source) {
  try {
    return json::parse(source);
  } catch (const json::parse_error& e) {
    std::size_t line = 1;
    std::size_t col = 1;
    for (std::size_t i = 0; i + 1 < e.byte && i < source.size(); ++i) {
      if (source[i] == '\n') {
        ++line;
        col = 1;
      } else {
        ++col;
      }
    }
    throw Error(ErrorKind::kParseError, "line " + std::to_string(line) + ", column " +
                                            std::to_string(col) + ": " + e.what());
  }
}

}  // namespace

std::uint64_t fnv1a(std::string_view data) {
  std::uint64_t hash = 0xcbf29ce484222325ULL;
  for (unsigned char c : data) {
    hash ^= c;
    hash *= 0x100000001b3ULL;
  }
  return hash;
}

PathEnsemble ScenarioFile::make_paths() const {
  const TimeGrid& grid = scenario.grid();
  if (backend.is_exact()) return build_tree(grid.n_end, grid.h).ensemble(grid);
  return sample_paths(grid, scenario.dims().d, scenario.dims().l, paths, seed);
}

ScenarioFile parse_scenario(const std::string& source, const Overrides& overrides) {
  json doc = parse_text(source);
  allow_keys(doc, "", {"grid", "dims", "delay", "generator", "terminal", "backend", "paths",
                       "seed", "solver", "audit", "compare", "duality"});

  if (!doc.contains("grid")) field_error("grid", "missing");
  json& grid_j = doc["grid"];
  allow_keys(grid_j, "grid", {"T", "K", "h"});
  if (overrides.h) grid_j["h"] = *overrides.h;
  const double T = number(grid_j, "grid", "T");
  const double K = number_or(grid_j, "grid", "K", 0.0);
  const double h = number(grid_j, "grid", "h");

  if (!doc.contains("dims")) doc["dims"] = json::object();
  json& dims_j = doc["dims"];
  allow_keys(dims_j, "dims", {"m", "d", "l"});
  const Dims dims{static_cast<int>(count_or(dims_j, "dims", "m", 1)),
                  static_cast<int>(count_or(dims_j, "dims", "d", 1)),
                  static_cast<int>(count_or(dims_j, "dims", "l", 1))};

  std::optional<DelaySpec> delay;
  if (doc.contains("delay")) {
    const json& dj = doc["delay"];
    allow_keys(dj, "delay", {"delta", "zeta"});
    if (!dj.contains("delta")) field_error("delay.delta", "missing");
    DelaySpec spec;
    spec.delta = delay_form(dj.at("delta"), "delay.delta");
    spec.zeta = dj.contains("zeta") ? delay_form(dj.at("zeta"), "delay.zeta") : spec.delta;
    delay = spec;
  }

  if (!doc.contains("generator")) field_error("generator", "missing");
  if (!doc.contains("terminal")) field_error("terminal", "missing");
  const GeneratorSpec generator = generator_of(doc["generator"], "generator", dims);
  const TerminalSpec terminal = terminal_of(doc["terminal"], "terminal", dims);

  if (!doc.contains("backend")) doc["backend"] = json::object();
  json& bj = doc["backend"];
  allow_keys(bj, "backend", {"type", "degree", "ridge"});
  if (!bj.contains("type")) bj["type"] = "regression";
  const std::string type = text(bj, "backend", "type");
  CondExpBackend backend = CondExpBackend::exact();
  if (type == "regression") {
    RegressionBasis basis;
    basis.degree = static_cast<int>(count_or(bj, "backend", "degree", 2));
    basis.ridge = number_or(bj, "backend", "ridge", 1e-8);
    backend = validated([&] { return CondExpBackend::regression(basis); });
  } else if (type != "exact") {
    field_error("backend.type", "expected 'regression' or 'exact'");
  }

  if (overrides.paths) doc["paths"] = *overrides.paths;
  if (overrides.seed) doc["seed"] = *overrides.seed;
  const std::size_t paths = count_or(doc, "", "paths", 1000);
  const std::uint64_t seed = count_or(doc, "", "seed", 1);
  if (paths < 1) field_error("paths", "must be at least 1");

  if (!doc.contains("solver")) doc["solver"] = json::object();
  allow_keys(doc["solver"], "solver", {"implicit_iters"});
  SolverOptions options;
  options.implicit_iters = static_cast<int>(count_or(doc["solver"], "solver", "implicit_iters", 1));

  if (!doc.contains("audit")) doc["audit"] = json::object();
  allow_keys(doc["audit"], "audit", {"samples"});
  const std::size_t audit_samples = count_or(doc["audit"], "audit", "samples", 1000);

  if (doc.contains("duality")) {
    json& dj = doc["duality"];
    allow_keys(dj, "duality", {"t0", "outer_paths", "inner_paths", "levels"});
    if (overrides.paths) dj["inner_paths"] = *overrides.paths;
    count_or(dj, "duality", "outer_paths", 64);
    count_or(dj, "duality", "inner_paths", 2048);
    count_or(dj, "duality", "levels", 3);
  }
  if (doc.contains("compare")) {
    allow_keys(doc["compare"], "compare", {"generator", "terminal", "epsilon"});
  }

  const std::string resolved = doc.dump();
  const std::uint64_t hash = fnv1a(resolved);

  const Scenario scenario = validated([&] {
    return Scenario(make_grid(T, K, h), delay, generator, terminal, options, hash);
  });
  if (backend.is_exact()) {
    validated([&] {
      if (dims.d != 1 || dims.l != 1) {
        throw Error(ErrorKind::kShapeMismatch, "exact backend needs d = l = 1");
      }
      return build_tree(scenario.grid().n_end, h);
    });
  }

  const LipschitzAudit audit =
      validated([&] { return audit_lipschitz(generator, audit_samples, seed); });
  if (!audit.pass) {
    std::ostringstream os;
    os.precision(6);
    os << "Lipschitz audit failed for '" << generator.name() << "': observed f " << audit.f_constant
       << ", g_y " << audit.g_y_constant << ", g_z " << audit.g_z_constant << ", g_z' "
       << audit.g_anticipated_z_constant << " vs declared c=" << generator.lipschitz().c
       << ", alpha1=" << generator.lipschitz().alpha1
       << ", alpha2=" << generator.lipschitz().alpha2;
    throw Error(ErrorKind::kValidationError, os.str());
  }

  ScenarioFile out{resolved, hash, scenario, backend, paths, seed, {}, {}, {}, audit};

  if (doc.contains("compare")) {
    json& cj = doc["compare"];
    if (!cj.contains("generator")) field_error("compare.generator", "missing");
    const GeneratorSpec g2 = generator_of(cj["generator"], "compare.generator", dims);
    const TerminalSpec t2 =
        cj.contains("terminal") ? terminal_of(cj["terminal"], "compare.terminal", dims) : terminal;
    out.compare = validated([&] { return scenario.with_generator(g2).with_terminal(t2); });
    if (!validated([&] { return audit_lipschitz(g2, audit_samples, seed); }).pass) {
      throw Error(ErrorKind::kValidationError, "Lipschitz audit failed for '" + g2.name() + "'");
    }
    if (cj.contains("epsilon")) out.compare_epsilon = number(cj, "compare", "epsilon");
  }

  if (doc.contains("duality")) {
    json& dj = doc["duality"];
    if (backend.is_exact()) {
      field_error("backend.type", "the duality section needs the regression backend");
    }
    if (generator.name() != "duality_linear") {
      field_error("generator.name", "the duality section needs generator 'duality_linear'");
    }
    if (!delay || delay->delta.b != 0.0 || delay->zeta.b != 0.0 ||
        delay->delta.a != delay->zeta.a) {
      field_error("delay", "the duality section needs one constant delay for Y and Z");
    }
    const Params gp = params_of(doc["generator"], "generator");
    const Params tp = params_of(doc["terminal"], "terminal");
    auto get = [](const Params& p, const char* key, double fallback) {
      const auto it = p.find(key);
      return it == p.end() ? fallback : it->second;
    };
    DualitySettings ds;
    LinearDualityCoeffs& c = ds.coeffs;
    c.mu = get(gp, "mu", 0.0);
    c.mu_bar = get(gp, "mu_bar", 0.0);
    c.sigma = get(gp, "sigma", 0.0);
    c.sigma_bar = get(gp, "sigma_bar", 0.0);
    c.kappa = get(gp, "kappa", 0.0);
    c.rho = get(gp, "rho", 0.0);
    c.delta = delay->delta.a;
    c.T = T;
    c.t0 = number(dj, "duality", "t0");
    const std::string tname = terminal.name();
    if (tname != "constant" && tname != "linear_in_time") {
      field_error("terminal.name", "the duality section needs deterministic terminal data");
    }
    c.xi = get(tp, "value", 0.0);
    c.xi_slope = get(tp, "slope", 0.0);
    c.eta = get(tp, "eta", 0.0);
    if (std::abs(K - c.delta) > 1e-12) field_error("grid.K", "must equal the delay for duality");
    ds.outer_paths = count_or(dj, "duality", "outer_paths", 64);
    ds.inner_paths = count_or(dj, "duality", "inner_paths", 2048);
    ds.levels = static_cast<int>(count_or(dj, "duality", "levels", 3));
    validated([&] {
      c.validate(h);
      return 0;
    });
    out.duality = ds;
  }
  return out;
}

ScenarioFile load_scenario(const std::string& path, const Overrides& overrides) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::kParseError, "cannot open '" + path + "'");
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return parse_scenario(buffer.str(), overrides);
}

}  // namespace abdsde::cli
