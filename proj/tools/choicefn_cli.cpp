// Copyright 2026 The choicefn Authors. All Rights Reserved.
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

// choicefn command-line tool: generate, fit, select-dim, predict, evaluate.
//
// Every key can come from --config (a JSON object) or from a flag of the
// same name; flags win. Unknown keys are rejected, and each command checks
// its whole configuration and reads all of its inputs before it writes
// anything. Exit codes: 0 success, 1 runtime failure, 2 usage or
// configuration error. Failures print {"error": {...}} on stderr.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "choicefn/dataset.hpp"
#include "choicefn/errors.hpp"
#include "choicefn/evaluation.hpp"
#include "choicefn/model_io.hpp"
#include "choicefn/model_selection.hpp"
#include "choicefn/prediction.hpp"
#include "choicefn/random.hpp"
#include "choicefn/synthetic.hpp"
#include "choicefn/variational.hpp"

namespace {

namespace fs = std::filesystem;
using nlohmann::json;
using namespace choicefn;

constexpr int kExitRuntime = 1;
constexpr int kExitUsage = 2;

// A configuration problem: reported with exit code 2.
struct ConfigError {
  std::string code;
  std::string message;
};

enum class KeyType { kInt, kUInt, kDouble, kBool, kString, kStringList };

struct KeySpec {
  std::string name;
  KeyType type;
  json fallback;  // null means required
  std::string help;
};

std::string type_name(KeyType t) {
  switch (t) {
    case KeyType::kInt: return "integer";
    case KeyType::kUInt: return "non-negative integer";
    case KeyType::kDouble: return "number";
    case KeyType::kBool: return "boolean";
    case KeyType::kString: return "string";
    case KeyType::kStringList: return "list of strings";
  }
  return "value";
}

bool has_type(const json& v, KeyType t) {
  switch (t) {
    case KeyType::kInt: return v.is_number_integer();
    case KeyType::kUInt: return v.is_number_unsigned();
    case KeyType::kDouble: return v.is_number();
    case KeyType::kBool: return v.is_boolean();
    case KeyType::kString: return v.is_string();
    case KeyType::kStringList:
      if (!v.is_array()) return false;
      for (const auto& e : v) {
        if (!e.is_string()) return false;
      }
      return true;
  }
  return false;
}

// Converts a flag's text to the key's JSON type.
json parse_flag(const KeySpec& spec, const std::string& text) {
  auto bad = [&]() -> ConfigError {
    return {"InvalidArgument",
            "--" + spec.name + " expects type " + type_name(spec.type) + ", got '" + text + "'"};
  };
  try {
    std::size_t used = 0;
    switch (spec.type) {
      case KeyType::kInt: {
        const long long v = std::stoll(text, &used);
        if (used != text.size()) throw bad();
        return v;
      }
      case KeyType::kUInt: {
        if (!text.empty() && text[0] == '-') throw bad();
        const unsigned long long v = std::stoull(text, &used);
        if (used != text.size()) throw bad();
        return v;
      }
      case KeyType::kDouble: {
        const double v = std::stod(text, &used);
        if (used != text.size()) throw bad();
        return v;
      }
      case KeyType::kBool:
        if (text == "true" || text == "1") return true;
        if (text == "false" || text == "0") return false;
        throw bad();
      case KeyType::kString:
        return text;
      case KeyType::kStringList: {
        json list = json::array();
        std::stringstream in(text);
        std::string item;
        while (std::getline(in, item, ',')) {
          if (!item.empty()) list.push_back(item);
        }
        return list;
      }
    }
  } catch (const std::invalid_argument&) {
    throw bad();
  } catch (const std::out_of_range&) {
    throw bad();
  }
  throw bad();
}

// Resolved key/value settings of one command.
class Settings {
 public:
  explicit Settings(std::map<std::string, json> values) : values_(std::move(values)) {}

  long long integer(const std::string& k) const { return at(k).get<long long>(); }
  int int32(const std::string& k) const {
    const long long v = integer(k);
    if (v < INT32_MIN || v > INT32_MAX) {
      throw ConfigError{"InvalidArgument", k + " is out of range"};
    }
    return static_cast<int>(v);
  }
  std::uint64_t uint64(const std::string& k) const { return at(k).get<std::uint64_t>(); }
  double real(const std::string& k) const { return at(k).get<double>(); }
  bool flag(const std::string& k) const { return at(k).get<bool>(); }
  std::string text(const std::string& k) const { return at(k).get<std::string>(); }
  std::vector<std::string> list(const std::string& k) const {
    return at(k).get<std::vector<std::string>>();
  }
  const std::map<std::string, json>& all() const { return values_; }

 private:
  const json& at(const std::string& k) const { return values_.at(k); }
  std::map<std::string, json> values_;
};

class Command {
 public:
  Command(CLI::App& app, std::string name, std::string description,
          std::vector<KeySpec> keys)
      : keys_(std::move(keys)) {
    sub_ = app.add_subcommand(std::move(name), std::move(description));
    sub_->add_option("--config", config_path_, "JSON file supplying any of the keys below");
    for (const auto& k : keys_) {
      std::string help = k.help;
      if (!k.fallback.is_null()) help += " [default: " + k.fallback.dump() + "]";
      std::string names = "--" + k.name;
      std::string dashed = k.name;
      std::replace(dashed.begin(), dashed.end(), '_', '-');
      if (dashed != k.name) names += ",--" + dashed;
      options_[k.name] = sub_->add_option(names, raw_[k.name], help);
    }
  }

  CLI::App* app() const { return sub_; }

  // Defaults, then the config file, then explicit flags.
  Settings resolve() const {
    std::map<std::string, json> values;
    for (const auto& k : keys_) values[k.name] = k.fallback;
    if (!config_path_.empty()) {
      json file;
      try {
        file = read_json_file(config_path_, "config file");
      } catch (const Error& e) {
        throw ConfigError{std::string(error_code_name(e.code())), e.what()};
      }
      if (!file.is_object()) {
        throw ConfigError{"SchemaMismatch", "config file must hold a JSON object"};
      }
      for (const auto& [key, value] : file.items()) {
        const KeySpec* spec = find(key);
        if (spec == nullptr) {
          throw ConfigError{"InvalidArgument", "unknown config key '" + key + "'"};
        }
        if (!has_type(value, spec->type)) {
          throw ConfigError{"InvalidArgument",
                            "config key '" + key + "' must be of type " + type_name(spec->type)};
        }
        values[key] = value;
      }
    }
    for (const auto& k : keys_) {
      if (options_.at(k.name)->count() > 0) values[k.name] = parse_flag(k, raw_.at(k.name));
    }
    for (const auto& k : keys_) {
      if (values[k.name].is_null()) {
        throw ConfigError{"InvalidArgument", "missing required key '" + k.name + "'"};
      }
    }
    return Settings(std::move(values));
  }

 private:
  const KeySpec* find(const std::string& name) const {
    for (const auto& k : keys_) {
      if (k.name == name) return &k;
    }
    return nullptr;
  }

  CLI::App* sub_ = nullptr;
  std::vector<KeySpec> keys_;
  std::string config_path_;
  std::map<std::string, std::string> raw_;
  std::map<std::string, CLI::Option*> options_;
};

// ---------------------------------------------------------------------------
// Key tables.

std::vector<KeySpec> with_globals(std::vector<KeySpec> keys) {
  keys.push_back({"seed", KeyType::kUInt, 0, "master random seed"});
  keys.push_back({"output_dir", KeyType::kString, ".", "directory for every output file"});
  keys.push_back({"threads", KeyType::kInt, 0, "worker threads, 0 = all cores"});
  return keys;
}

std::vector<KeySpec> fit_keys() {
  const FitConfig d;
  return {
      {"iters", KeyType::kInt, d.iters, "Adam iterations"},
      {"learning_rate", KeyType::kDouble, d.learning_rate, "Adam step size"},
      {"mc_samples", KeyType::kInt, d.mc_samples, "Monte-Carlo samples per step"},
      {"shared_lengthscales", KeyType::kBool, d.shared_lengthscales,
       "one lengthscale vector for all latent dimensions"},
      {"jitter", KeyType::kDouble, d.jitter, "diagonal jitter of the Gram matrix"},
      {"map_iters", KeyType::kInt, d.map_iters, "MAP initialization iterations"},
      {"init_lengthscale", KeyType::kDouble, d.init_lengthscale, "initial lengthscale"},
      {"init_sigma", KeyType::kDouble, d.init_sigma, "initial sigma"},
      {"final_elbo_samples", KeyType::kInt, d.final_elbo_samples,
       "samples for the reported final ELBO"},
      {"wall_clock", KeyType::kBool, false, "record wall-clock seconds in reports"},
  };
}

FitConfig fit_config(const Settings& s) {
  FitConfig c;
  c.iters = s.int32("iters");
  c.learning_rate = s.real("learning_rate");
  c.mc_samples = s.int32("mc_samples");
  c.seed = s.uint64("seed");
  c.shared_lengthscales = s.flag("shared_lengthscales");
  c.jitter = s.real("jitter");
  c.map_iters = s.int32("map_iters");
  c.init_lengthscale = s.real("init_lengthscale");
  c.init_sigma = s.real("init_sigma");
  c.final_elbo_samples = s.int32("final_elbo_samples");
  c.threads = s.int32("threads");
  return c;
}

void require(bool ok, const std::string& message) {
  if (!ok) throw ConfigError{"InvalidArgument", message};
}

void check_fit_config(const FitConfig& c) {
  require(c.iters >= 1, "iters must be >= 1");
  require(c.learning_rate > 0.0, "learning_rate must be positive");
  require(c.mc_samples >= 1, "mc_samples must be >= 1");
  require(c.jitter > 0.0 && c.jitter <= kMaxJitter, "jitter must be in (0, 1e-2]");
  require(c.map_iters >= 0, "map_iters must be >= 0");
  require(c.init_lengthscale > 0.0, "init_lengthscale must be positive");
  require(c.init_sigma > 0.0, "init_sigma must be positive");
  require(c.final_elbo_samples >= 1, "final_elbo_samples must be >= 1");
  require(c.threads >= 0, "threads must be >= 0");
}

// Output paths are resolved against output_dir; validated before writing.
fs::path output_path(const Settings& s, const std::string& key) {
  const fs::path p = s.text(key);
  require(!p.empty(), key + " must not be empty");
  return p.is_absolute() ? p : fs::path(s.text("output_dir")) / p;
}

void prepare_output_dir(const Settings& s) {
  const fs::path dir = s.text("output_dir");
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) {
    throw Error(ErrorCode::kIo, "cannot create output directory " + dir.string());
  }
}

ChoiceDataset read_dataset(const Settings& s, const std::string& key) {
  const std::string path = s.text(key);
  try {
    return validate_dataset(load_dataset(path));
  } catch (const Error& e) {
    throw ConfigError{std::string(error_code_name(e.code())), e.what()};
  }
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::kIo, "cannot write " + path.string());
  out << text;
}

json matrix_json(const Eigen::MatrixXd& m) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

// ---------------------------------------------------------------------------
// generate

const std::vector<std::string> kGenerators = {"example1", "kernel_mixture", "zdt1", "dtlz2"};

std::vector<KeySpec> generate_keys() {
  return with_globals({
      {"generator", KeyType::kString, nullptr, "example1 | kernel_mixture | zdt1 | dtlz2"},
      {"n_points", KeyType::kInt, 200, "number of objects"},
      {"m", KeyType::kInt, 50, "number of observations"},
      {"set_size", KeyType::kInt, 3, "|A| per observation (set generators)"},
      {"lower", KeyType::kDouble, -4.5, "example1 input lower bound"},
      {"upper", KeyType::kDouble, 4.5, "example1 input upper bound"},
      {"n_features", KeyType::kInt, 2, "feature count (kernel_mixture, zdt1, dtlz2)"},
      {"states", KeyType::kInt, 2, "kernel_mixture latent states L"},
      {"pair_mode", KeyType::kString, "D2", "kernel_mixture labelling: D1 | D2"},
      {"lengthscale", KeyType::kDouble, 1.0, "kernel_mixture RBF lengthscale"},
      {"n_objectives", KeyType::kInt, 3, "objectives of zdt1 (always 2) or dtlz2"},
      {"conversion", KeyType::kString, "none",
       "turn pair choices into preferences: none | random | majority"},
      {"output", KeyType::kString, "dataset.json", "dataset file"},
      {"truth", KeyType::kString, "truth.json", "ground-truth sidecar file"},
  });
}

int run_generate(const Settings& s) {
  const std::string gen = s.text("generator");
  if (std::find(kGenerators.begin(), kGenerators.end(), gen) == kGenerators.end()) {
    throw ConfigError{"InvalidArgument",
                      "unknown generator '" + gen + "'; available: example1, "
                      "kernel_mixture, zdt1, dtlz2"};
  }
  const int n = s.int32("n_points");
  const int m = s.int32("m");
  const int set_size = s.int32("set_size");
  const std::string conversion = s.text("conversion");
  const std::string pair_mode = s.text("pair_mode");
  require(n >= 2, "n_points must be >= 2");
  require(m >= 1, "m must be >= 1");
  require(conversion == "none" || conversion == "random" || conversion == "majority",
          "conversion must be none, random or majority");
  require(pair_mode == "D1" || pair_mode == "D2", "pair_mode must be D1 or D2");
  const bool pairs = gen == "kernel_mixture" || set_size == 2;
  require(conversion == "none" || pairs, "conversion needs pair data (set_size 2)");
  if (gen != "kernel_mixture") {
    require(set_size >= 2 && set_size <= n, "set_size must be in [2, n_points]");
  }
  if (gen == "example1") {
    require(s.real("lower") < s.real("upper"), "lower must be below upper");
  }
  if (gen == "kernel_mixture") {
    require(s.int32("states") >= 1, "states must be >= 1");
    require(s.int32("n_features") >= 1, "n_features must be >= 1");
    require(s.real("lengthscale") > 0.0, "lengthscale must be positive");
    const long long all_pairs = static_cast<long long>(n) * (n - 1) / 2;
    require(m <= all_pairs, "m exceeds the number of distinct pairs");
  }
  if (gen == "zdt1") require(s.int32("n_features") >= 2, "zdt1 needs n_features >= 2");
  if (gen == "dtlz2") {
    require(s.int32("n_objectives") >= 2, "dtlz2 needs n_objectives >= 2");
    require(s.int32("n_features") >= s.int32("n_objectives"),
            "dtlz2 needs n_features >= n_objectives");
  }
  const fs::path out_path = output_path(s, "output");
  const fs::path truth_path = output_path(s, "truth");
  const std::uint64_t seed = s.uint64("seed");

  GeneratedData data;
  json truth = {{"generator", gen}, {"seed", seed}};
  if (gen == "example1") {
    Example1Options o;
    o.n_points = n;
    o.m_sets = m;
    o.set_size = set_size;
    o.lower = s.real("lower");
    o.upper = s.real("upper");
    o.seed = seed;
    data = gen_example1(o);
  } else if (gen == "kernel_mixture") {
    KernelParams kernel{Eigen::VectorXd::Constant(s.int32("n_features"), s.real("lengthscale")),
                        kDefaultJitter};
    const KernelMixture mix =
        gen_kernel_mixture(n, s.int32("n_features"), s.int32("states"), kernel, seed);
    const auto pair_list = random_pairs(n, static_cast<std::size_t>(m), derive_seed(seed, 1));
    data.dataset = gen_pairwise_datasets(
        mix, pair_list, pair_mode == "D1" ? PairMode::kD1 : PairMode::kD2);
    data.true_utilities = mix.utilities();
    data.true_dim = static_cast<int>(data.true_utilities.cols());
    truth["states"] = mix.states;
    truth["assignment"] = mix.assignment;
    truth["pair_mode"] = pair_mode;
  } else {
    TestSuiteOptions o;
    o.problem = gen == "zdt1" ? TestProblem::kZdt1 : TestProblem::kDtlz2;
    o.n_objectives = gen == "zdt1" ? 2 : s.int32("n_objectives");
    o.n_points = n;
    o.n_features = s.int32("n_features");
    o.m_sets = m;
    o.set_size = set_size;
    o.seed = seed;
    data = gen_test_suite(o);
  }
  if (conversion != "none") {
    require(conversion != "majority" || data.true_utilities.cols() % 2 == 1,
            "majority conversion needs an odd number of utilities");
    data.dataset = choices_to_preferences(
        data.dataset, data.true_utilities,
        conversion == "random" ? ConversionMode::kRandom : ConversionMode::kMajority,
        derive_seed(seed, 2));
    truth["conversion"] = conversion;
  }
  validate_dataset(data.dataset);
  truth["true_dim"] = data.true_dim;
  truth["utilities"] = matrix_json(data.true_utilities);

  prepare_output_dir(s);
  save_dataset(data.dataset, out_path.string());
  write_json_file(truth, truth_path.string());
  return 0;
}

// ---------------------------------------------------------------------------
// fit

std::vector<KeySpec> fit_command_keys() {
  std::vector<KeySpec> keys = {
      {"dataset", KeyType::kString, nullptr, "training dataset JSON"},
      {"latent_dim", KeyType::kInt, nullptr, "latent dimension d"},
      {"model", KeyType::kString, "model.json", "model file to write"},
      {"report", KeyType::kString, "fit_report.json", "fit report to write"},
  };
  for (auto& k : fit_keys()) keys.push_back(std::move(k));
  return with_globals(std::move(keys));
}

int run_fit(const Settings& s) {
  const FitConfig config = fit_config(s);
  check_fit_config(config);
  const int d = s.int32("latent_dim");
  require(d >= 1, "latent_dim must be >= 1");
  const fs::path model_path = output_path(s, "model");
  const fs::path report_path = output_path(s, "report");
  const ChoiceDataset data = read_dataset(s, "dataset");

  auto [model, report] = fit(data, d, config);
  prepare_output_dir(s);
  save_model(model, metadata_of(report), model_path.string());
  write_json_file(fit_report_to_json(report, s.flag("wall_clock")), report_path.string());
  return 0;
}

// ---------------------------------------------------------------------------
// select-dim

std::vector<KeySpec> select_keys() {
  std::vector<KeySpec> keys = {
      {"dataset", KeyType::kString, nullptr, "training dataset JSON"},
      {"d_max", KeyType::kInt, 5, "largest latent dimension tried"},
      {"early_stop", KeyType::kBool, false, "stop after the first decrease of phi"},
      {"loo_samples", KeyType::kInt, kDefaultLooSamples, "posterior draws for PSIS-LOO"},
      {"table", KeyType::kString, "selection.csv", "phi-vs-d table"},
      {"summary", KeyType::kString, "selection.json", "selection summary"},
      {"model", KeyType::kString, "model.json", "model file of the selected d"},
  };
  for (auto& k : fit_keys()) keys.push_back(std::move(k));
  return with_globals(std::move(keys));
}

std::string format_double(double v) {
  std::ostringstream out;
  out.precision(17);
  out << v;
  return out.str();
}

int run_select(const Settings& s) {
  SelectionConfig config;
  config.fit = fit_config(s);
  check_fit_config(config.fit);
  config.d_max = s.int32("d_max");
  config.early_stop = s.flag("early_stop");
  config.loo_samples = s.int32("loo_samples");
  require(config.d_max >= 1, "d_max must be >= 1");
  require(psis_tail_size(static_cast<std::size_t>(std::max(config.loo_samples, 0))) >= 5,
          "loo_samples must be >= 21");
  const fs::path table_path = output_path(s, "table");
  const fs::path summary_path = output_path(s, "summary");
  const fs::path model_path = output_path(s, "model");
  const ChoiceDataset data = read_dataset(s, "dataset");

  const SelectionResult result = select_latent_dim(data, config);
  std::ostringstream csv;
  csv << "d,phi,max_khat,n_bad_khat\n";
  json rows = json::array();
  for (const auto& row : result.rows) {
    if (row.failed) {
      csv << row.d << ",nan,nan,nan\n";
      rows.push_back({{"d", row.d}, {"failed", true}, {"error", row.error}});
      continue;
    }
    csv << row.d << ',' << format_double(row.phi) << ',' << format_double(row.max_khat)
        << ',' << row.n_bad_khat << '\n';
    json entry = {{"d", row.d},
                  {"failed", false},
                  {"phi", row.phi},
                  {"max_khat", row.max_khat},
                  {"n_bad_khat", row.n_bad_khat},
                  {"unreliable", row.loo.unreliable},
                  {"degenerate", row.loo.degenerate},
                  {"n_posterior_samples", row.loo.n_samples},
                  {"elpd", row.loo.elpd},
                  {"khat", row.loo.khat},
                  {"fit", fit_report_to_json(row.report, s.flag("wall_clock"))}};
    entry["fit"].erase("elbo_trace");
    rows.push_back(std::move(entry));
  }
  json summary = {{"best_d", result.best_d}, {"rows", std::move(rows)}};

  prepare_output_dir(s);
  write_text(table_path, csv.str());
  write_json_file(summary, summary_path.string());
  const auto& best = result.rows[static_cast<std::size_t>(result.best_d - 1)];
  save_model(*result.best_model, metadata_of(best.report), model_path.string());
  return 0;
}

// ---------------------------------------------------------------------------
// predict

std::vector<KeySpec> predict_keys() {
  return with_globals({
      {"model", KeyType::kString, nullptr, "model file"},
      {"dataset", KeyType::kString, nullptr,
       "test objects and sets; 'chosen' entries are optional and ignored"},
      {"n_samples", KeyType::kInt, kDefaultPredictiveSamples, "predictive draws per set"},
      {"mode", KeyType::kString, "marginal", "set decision rule: marginal | exact"},
      {"subset_probs", KeyType::kBool, false, "report every subset probability (|A| <= 12)"},
      {"semantics", KeyType::kString, "indicator",
       "subset probability semantics: indicator | relaxed"},
      {"output", KeyType::kString, "predictions.json", "predictions file"},
  });
}

struct TestSets {
  Eigen::MatrixXd features;
  std::vector<std::vector<Index>> sets;
};

TestSets read_test_sets(const std::string& path) {
  TestSets out;
  try {
    const json j = read_json_file(path, "dataset");
    const auto& rows = j.at("features");
    const Index c = rows.empty() ? 0 : static_cast<Index>(rows.at(0).size());
    out.features.resize(static_cast<Index>(rows.size()), c);
    for (std::size_t i = 0; i < rows.size(); ++i) {
      const auto row = rows[i].get<std::vector<double>>();
      if (static_cast<Index>(row.size()) != c) {
        throw Error(ErrorCode::kSchemaMismatch, "ragged feature matrix");
      }
      for (Index k = 0; k < c; ++k) out.features(static_cast<Index>(i), k) = row[static_cast<std::size_t>(k)];
    }
    for (const auto& obs : j.at("observations")) {
      out.sets.push_back(obs.at("set").get<std::vector<Index>>());
    }
  } catch (const json::exception& e) {
    throw ConfigError{"SchemaMismatch", std::string("malformed test set: ") + e.what()};
  } catch (const Error& e) {
    throw ConfigError{std::string(error_code_name(e.code())), e.what()};
  }
  if (out.sets.empty()) throw ConfigError{"InvalidDataset", "test set has no observations"};
  if (!out.features.allFinite()) throw ConfigError{"InvalidDataset", "non-finite features"};
  for (const auto& set : out.sets) {
    if (set.size() < 2) throw ConfigError{"InvalidDataset", "every test set needs |A| >= 2"};
    for (Index v : set) {
      if (v < 0 || v >= out.features.rows()) {
        throw ConfigError{"IndexOutOfRange", "test set index " + std::to_string(v) + " out of range"};
      }
    }
  }
  return out;
}

int run_predict(const Settings& s) {
  const int n_samples = s.int32("n_samples");
  const std::string mode = s.text("mode");
  const std::string semantics = s.text("semantics");
  require(n_samples >= 1, "n_samples must be >= 1");
  require(mode == "marginal" || mode == "exact", "mode must be marginal or exact");
  require(semantics == "indicator" || semantics == "relaxed",
          "semantics must be indicator or relaxed");
  const fs::path out_path = output_path(s, "output");
  FittedModel model;
  try {
    model = load_model(s.text("model"));
  } catch (const Error& e) {
    throw ConfigError{std::string(error_code_name(e.code())), e.what()};
  }
  const TestSets test = read_test_sets(s.text("dataset"));
  if (test.features.cols() != model.features().cols()) {
    throw ConfigError{"SchemaMismatch",
                      "model has " + std::to_string(model.features().cols()) +
                          " features, test set has " + std::to_string(test.features.cols())};
  }
  for (const auto& set : test.sets) {
    const bool enumerate = mode == "exact" || s.flag("subset_probs");
    require(!enumerate || set.size() <= static_cast<std::size_t>(kMaxExactSetSize),
            "exact mode and subset_probs need |A| <= 12");
  }

  const std::uint64_t seed = s.uint64("seed");
  json predictions = json::array();
  for (std::size_t k = 0; k < test.sets.size(); ++k) {
    SetPredictionOptions o;
    o.n_samples = n_samples;
    o.seed = derive_seed(seed, k);
    o.mode = mode == "exact" ? SetPredictionMode::kExact : SetPredictionMode::kMarginal;
    o.subset_probabilities = s.flag("subset_probs");
    o.subset_semantics = semantics == "relaxed" ? ProbabilitySemantics::kRelaxed
                                                : ProbabilitySemantics::kIndicator;
    const SetPrediction p = predict_set(model, test.features, test.sets[k], o);
    json entry = {{"set", test.sets[k]}, {"chosen", p.chosen}, {"probabilities", p.marginal}};
    if (o.subset_probabilities) {
      json subsets = json::array();
      for (const auto& sp : p.subsets) {
        subsets.push_back({{"subset", sp.subset}, {"probability", sp.probability}});
      }
      entry["subsets"] = std::move(subsets);
    }
    predictions.push_back(std::move(entry));
  }
  json out = {{"schema_version", 1},
              {"mode", mode},
              {"n_samples", n_samples},
              {"seed", seed},
              {"predictions", std::move(predictions)}};
  if (s.flag("subset_probs")) out["semantics"] = semantics;
  prepare_output_dir(s);
  write_json_file(out, out_path.string());
  return 0;
}

// ---------------------------------------------------------------------------
// evaluate

std::vector<KeySpec> evaluate_keys() {
  return with_globals({
      {"predictions", KeyType::kString, "", "predictions file (single evaluation)"},
      {"truth", KeyType::kString, "", "dataset with the true chosen sets"},
      {"output", KeyType::kString, "evaluation.json", "evaluation report"},
      {"aggregate", KeyType::kStringList, json::array(),
       "repetition directories, each holding an evaluation report named like 'output'"},
      {"aggregate_output", KeyType::kString, "aggregate.csv", "aggregate table"},
  });
}

std::vector<std::vector<Index>> read_predictions(const std::string& path) {
  std::vector<std::vector<Index>> out;
  try {
    const json j = read_json_file(path, "predictions");
    for (const auto& p : j.at("predictions")) {
      out.push_back(p.at("chosen").get<std::vector<Index>>());
    }
  } catch (const json::exception& e) {
    throw ConfigError{"SchemaMismatch", std::string("malformed predictions: ") + e.what()};
  } catch (const Error& e) {
    throw ConfigError{std::string(error_code_name(e.code())), e.what()};
  }
  if (out.empty()) throw ConfigError{"InvalidArgument", "predictions file is empty"};
  return out;
}

bool all_binary(const ChoiceDataset& data) {
  for (const auto& obs : data.observations) {
    if (obs.set.size() != 2) return false;
  }
  return true;
}

int run_evaluate(const Settings& s) {
  const auto dirs = s.list("aggregate");
  if (!dirs.empty()) {
    const fs::path out_path = output_path(s, "aggregate_output");
    std::vector<EvalReport> reports;
    std::vector<double> pairwise;
    for (const auto& dir : dirs) {
      const fs::path file = fs::path(dir) / fs::path(s.text("output")).filename();
      try {
        const json j = read_json_file(file.string(), "evaluation report");
        reports.push_back(eval_report_from_json(j));
        if (j.contains("pairwise_accuracy")) pairwise.push_back(j["pairwise_accuracy"].get<double>());
      } catch (const Error& e) {
        throw ConfigError{std::string(error_code_name(e.code())), e.what()};
      }
    }
    auto rows = aggregate_reports(reports);
    if (pairwise.size() == reports.size()) {
      MetricSummary p{"pairwise_accuracy", 0.0, 0.0, static_cast<int>(pairwise.size())};
      for (double v : pairwise) p.mean += v;
      p.mean /= static_cast<double>(pairwise.size());
      if (pairwise.size() > 1) {
        double ss = 0.0;
        for (double v : pairwise) ss += (v - p.mean) * (v - p.mean);
        p.std = std::sqrt(ss / static_cast<double>(pairwise.size() - 1));
      }
      rows.push_back(p);
    }
    prepare_output_dir(s);
    write_text(out_path, summaries_to_csv(rows));
    return 0;
  }
  require(!s.text("predictions").empty(), "predictions is required");
  require(!s.text("truth").empty(), "truth is required");
  const fs::path out_path = output_path(s, "output");
  const auto predicted = read_predictions(s.text("predictions"));
  const ChoiceDataset truth = read_dataset(s, "truth");
  if (predicted.size() != truth.observations.size()) {
    throw ConfigError{"SchemaMismatch", std::to_string(predicted.size()) +
                                            " predictions for " +
                                            std::to_string(truth.observations.size()) +
                                            " observations"};
  }
  json out = eval_report_to_json(a_mean(predicted, truth));
  if (all_binary(truth)) out["pairwise_accuracy"] = pairwise_accuracy(predicted, truth);
  out["n_observations"] = truth.observations.size();
  prepare_output_dir(s);
  write_json_file(out, out_path.string());
  return 0;
}

void print_error(const std::string& code, const std::string& message) {
  std::cerr << json{{"error", {{"code", code}, {"message", message}}}}.dump() << '\n';
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"choicefn: Gaussian-process choice functions"};
  app.require_subcommand(1);
  app.set_version_flag("--version", "choicefn 0.1.0");
  Command generate(app, "generate", "write a synthetic dataset and its ground truth",
                   generate_keys());
  Command fit_cmd(app, "fit", "fit the variational posterior for one latent dimension",
                  fit_command_keys());
  Command select(app, "select-dim", "choose the latent dimension by PSIS-LOO", select_keys());
  Command predict(app, "predict", "predict choice sets for test sets", predict_keys());
  Command evaluate(app, "evaluate", "score predictions against the truth", evaluate_keys());

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    print_error("Usage", e.what());
    return kExitUsage;
  }

  const std::vector<std::pair<Command*, std::function<int(const Settings&)>>> commands = {
      {&generate, run_generate}, {&fit_cmd, run_fit}, {&select, run_select},
      {&predict, run_predict},   {&evaluate, run_evaluate}};
  try {
    for (const auto& [cmd, run] : commands) {
      if (cmd->app()->parsed()) return run(cmd->resolve());
    }
  } catch (const ConfigError& e) {
    print_error(e.code, e.message);
    return kExitUsage;
  } catch (const Error& e) {
    print_error(std::string(error_code_name(e.code())), e.what());
    return kExitRuntime;
  } catch (const std::exception& e) {
    print_error("Internal", e.what());
    return kExitRuntime;
  }
  return kExitUsage;
}
