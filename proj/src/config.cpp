#include "dqsg/config.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

namespace dqsg {

namespace {

std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::string fmt(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

double to_real(std::string_view v) {
  if (v == "inf" || v == "infinity") return std::numeric_limits<double>::infinity();
  double out = 0.0;
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || ptr != v.data() + v.size()) throw ConfigError("expected a real number");
  return out;
}

std::uint64_t to_unsigned(std::string_view v) {
  std::uint64_t out = 0;
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || ptr != v.data() + v.size() || v.empty())
    throw ConfigError("expected a nonnegative integer");
  return out;
}

int to_int(std::string_view v) {
  int out = 0;
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || ptr != v.data() + v.size() || v.empty())
    throw ConfigError("expected an integer");
  return out;
}

template <typename T, typename F>
std::vector<T> to_list(std::string_view v, F&& parse_one) {
  std::vector<T> out;
  while (!v.empty()) {
    const auto comma = v.find(',');
    out.push_back(parse_one(trim(v.substr(0, comma))));
    if (comma == std::string_view::npos) break;
    v.remove_prefix(comma + 1);
  }
  if (out.empty()) throw ConfigError("expected a comma-separated list");
  return out;
}

template <typename T>
std::string join(const std::vector<T>& xs) {
  std::string out;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    if (i) out += ',';
    if constexpr (std::is_floating_point_v<T>)
      out += fmt(xs[i]);
    else
      out += std::to_string(xs[i]);
  }
  return out;
}

// Disorder fields are parsed separately and combined at the end, since the
// spec validates family, param and truncation together.
struct DisorderFields {
  DisorderFamily family = DisorderFamily::rademacher;
  double param = 1.0;
  double truncation = kNoTruncation;
};

struct Key {
  std::function<void(ExperimentConfig&, DisorderFields&, std::string_view)> set;
  std::function<std::string(const ExperimentConfig&)> get;
};

const std::map<std::string, Key, std::less<>>& key_table() {
  using C = ExperimentConfig;
  using D = DisorderFields;
  static const std::map<std::string, Key, std::less<>> table{
      {"model.alpha", {[](C& c, D&, auto v) { c.model.alpha = to_real(v); },
                       [](const C& c) { return fmt(c.model.alpha); }}},
      {"model.beta", {[](C& c, D&, auto v) { c.model.beta = to_real(v); },
                      [](const C& c) { return fmt(c.model.beta); }}},
      {"model.h", {[](C& c, D&, auto v) { c.model.h = to_real(v); },
                   [](const C& c) { return fmt(c.model.h); }}},
      {"model.p", {[](C& c, D&, auto v) { c.model.p = to_int(v); },
                   [](const C& c) { return std::to_string(c.model.p); }}},
      {"disorder.family",
       {[](C&, D& d, auto v) {
          try {
            d.family = parse_disorder_family(v);
          } catch (const std::invalid_argument& e) {
            throw ConfigError(e.what());
          }
        },
        [](const C& c) { return std::string(to_string(c.disorder.family())); }}},
      {"disorder.param", {[](C&, D& d, auto v) { d.param = to_real(v); },
                          [](const C& c) { return fmt(c.disorder.param()); }}},
      {"disorder.truncation", {[](C&, D& d, auto v) { d.truncation = to_real(v); },
                               [](const C& c) { return fmt(c.disorder.truncation()); }}},
      {"experiment.kind", {[](C& c, D&, auto v) { c.kind = parse_experiment_kind(v); },
                           [](const C& c) { return std::string(to_string(c.kind)); }}},
      {"experiment.n_sites",
       {[](C& c, D&, auto v) {
          c.n_sites = to_list<std::size_t>(v, [](auto s) { return to_unsigned(s); });
        },
        [](const C& c) { return join(c.n_sites); }}},
      {"experiment.replicates", {[](C& c, D&, auto v) { c.replicates = to_unsigned(v); },
                                 [](const C& c) { return std::to_string(c.replicates); }}},
      {"rde.pop_size", {[](C& c, D&, auto v) { c.rde.pop_size = to_unsigned(v); },
                        [](const C& c) { return std::to_string(c.rde.pop_size); }}},
      {"rde.tol", {[](C& c, D&, auto v) { c.rde.tol = to_real(v); },
                   [](const C& c) { return fmt(c.rde.tol); }}},
      {"rde.max_gens", {[](C& c, D&, auto v) { c.rde.max_gens = to_unsigned(v); },
                        [](const C& c) { return std::to_string(c.rde.max_gens); }}},
      {"rde.window", {[](C& c, D&, auto v) { c.rde.window = to_unsigned(v); },
                      [](const C& c) { return std::to_string(c.rde.window); }}},
      {"rde.rate_scale", {[](C& c, D&, auto v) { c.rate_scale = to_real(v); },
                          [](const C& c) { return fmt(c.rate_scale); }}},
      {"quadrature.nodes", {[](C& c, D&, auto v) { c.quadrature_nodes = to_unsigned(v); },
                            [](const C& c) { return std::to_string(c.quadrature_nodes); }}},
      {"quadrature.rule", {[](C& c, D&, auto v) { c.quadrature_rule = std::string(v); },
                           [](const C& c) { return c.quadrature_rule; }}},
      {"free_energy.n_mc", {[](C& c, D&, auto v) { c.n_mc = to_unsigned(v); },
                            [](const C& c) { return std::to_string(c.n_mc); }}},
      {"contraction.q_grid",
       {[](C& c, D&, auto v) { c.q_grid = to_list<double>(v, [](auto s) { return to_real(s); }); },
        [](const C& c) { return join(c.q_grid); }}},
      {"contraction.n_mc", {[](C& c, D&, auto v) { c.contraction_n_mc = to_unsigned(v); },
                            [](const C& c) { return std::to_string(c.contraction_n_mc); }}},
      {"seed", {[](C& c, D&, auto v) { c.seed = to_unsigned(v); },
                [](const C& c) { return std::to_string(c.seed); }}},
      {"output.dir", {[](C& c, D&, auto v) { c.output_dir = std::string(v); },
                      [](const C& c) { return c.output_dir; }}},
      {"load.model_file", {[](C& c, D&, auto v) { c.model_file = std::string(v); },
                           [](const C& c) { return c.model_file; }}},
      {"validate.preset",
       {[](C& c, D&, auto v) {
          if (v == "desk")
            c.validate_preset = ValidatePreset::desk;
          else if (v == "quick")
            c.validate_preset = ValidatePreset::quick;
          else
            throw ConfigError("expected desk or quick");
        },
        [](const C& c) {
          return std::string(c.validate_preset == ValidatePreset::desk ? "desk" : "quick");
        }}},
  };
  return table;
}

}  // namespace

std::string_view to_string(ExperimentKind k) {
  switch (k) {
    case ExperimentKind::simulate: return "simulate";
    case ExperimentKind::rde: return "rde";
    case ExperimentKind::free_energy: return "free-energy";
    case ExperimentKind::convergence: return "convergence";
    case ExperimentKind::validate: return "validate";
    case ExperimentKind::dump: return "dump";
    case ExperimentKind::load: return "load";
  }
  return "?";
}

ExperimentKind parse_experiment_kind(std::string_view name) {
  for (auto k : {ExperimentKind::simulate, ExperimentKind::rde, ExperimentKind::free_energy,
                 ExperimentKind::convergence, ExperimentKind::validate, ExperimentKind::dump,
                 ExperimentKind::load})
    if (to_string(k) == name) return k;
  throw ConfigError("unknown experiment kind '" + std::string(name) + "'");
}

const std::vector<std::string>& config_keys() {
  static const std::vector<std::string> keys = [] {
    std::vector<std::string> out;
    for (const auto& [k, _] : key_table()) out.push_back(k);
    return out;
  }();
  return keys;
}

void ExperimentConfig::validate() const {
  auto fail = [](const std::string& msg) { throw ConfigError(msg); };
  try {
    model.validate();
  } catch (const std::invalid_argument& e) {
    fail(e.what());
  }
  if (n_sites.empty()) fail("experiment.n_sites must list at least one size");
  for (auto n : n_sites)
    if (n < static_cast<std::size_t>(model.p))
      fail("experiment.n_sites entries must be at least model.p (" + std::to_string(model.p) + ")");
  if (replicates == 0) fail("experiment.replicates must be positive");
  if (kind == ExperimentKind::convergence && replicates < 2)
    fail("experiment.replicates must be at least 2 for convergence");
  if (rde.pop_size == 0) fail("rde.pop_size must be positive");
  if (!(rde.tol > 0.0) || !std::isfinite(rde.tol)) fail("rde.tol must be positive and finite");
  if (rde.max_gens == 0) fail("rde.max_gens must be positive");
  if (rde.window == 0) fail("rde.window must be positive");
  if (!(rate_scale > 0.0 && rate_scale <= 1.0)) fail("rde.rate_scale must lie in (0, 1]");
  if (quadrature_nodes == 0) fail("quadrature.nodes must be positive");
  if (quadrature_rule != "gauss_legendre" && quadrature_rule != "midpoint")
    fail("quadrature.rule must be gauss_legendre or midpoint");
  if (n_mc == 0) fail("free_energy.n_mc must be positive");
  if (contraction_n_mc == 0) fail("contraction.n_mc must be positive");
  for (std::size_t i = 0; i < q_grid.size(); ++i) {
    if (!(q_grid[i] >= 1.0) || !std::isfinite(q_grid[i]))
      fail("contraction.q_grid entries must be finite and at least 1");
    if (i && !(q_grid[i] > q_grid[i - 1])) fail("contraction.q_grid must be increasing");
  }
  if (kind == ExperimentKind::load && model_file.empty())
    fail("load.model_file is required for the load experiment");
  if (output_dir.empty()) fail("output.dir must not be empty");
}

ExperimentConfig parse_config(std::istream& in, std::string_view source) {
  ExperimentConfig cfg;
  DisorderFields d;
  std::map<std::string, std::size_t, std::less<>> seen;
  std::string line;
  std::size_t line_no = 0;
  auto where = [&] { return std::string(source) + ":" + std::to_string(line_no) + ": "; };
  while (std::getline(in, line)) {
    ++line_no;
    std::string_view text = line;
    if (const auto hash = text.find('#'); hash != std::string_view::npos) text = text.substr(0, hash);
    text = trim(text);
    if (text.empty()) continue;
    const auto eq = text.find('=');
    if (eq == std::string_view::npos) throw ConfigError(where() + "expected key=value");
    const auto key = trim(text.substr(0, eq));
    const auto value = trim(text.substr(eq + 1));
    const auto it = key_table().find(key);
    if (it == key_table().end()) throw ConfigError(where() + "unknown key '" + std::string(key) + "'");
    if (const auto prev = seen.find(key); prev != seen.end())
      throw ConfigError(where() + "duplicate key '" + std::string(key) + "' (first set on line " +
                        std::to_string(prev->second) + ")");
    seen.emplace(std::string(key), line_no);
    if (value.empty() && key != "load.model_file")
      throw ConfigError(where() + std::string(key) + ": missing value");
    try {
      it->second.set(cfg, d, value);
    } catch (const ConfigError& e) {
      throw ConfigError(where() + std::string(key) + ": " + e.what());
    }
  }
  try {
    cfg.disorder = DisorderSpec(d.family, d.param, d.truncation);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string(source) + ": " + e.what());
  }
  return cfg;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(path.string() + ": cannot open config file");
  return parse_config(in, path.string());
}

std::string canonical_text(const ExperimentConfig& cfg) {
  std::string out;
  for (const auto& [key, k] : key_table())
    if (key != "output.dir") out += key + "=" + k.get(cfg) + "\n";
  return out;
}

}  // namespace dqsg
