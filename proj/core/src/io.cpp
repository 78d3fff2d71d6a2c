#include "selshare/io.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <sstream>

#include "selshare/errors.hpp"

namespace selshare {
namespace {

std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

template <class T>
bool parse_number(std::string_view s, T& out) {
  s = trim(s);
  if (s.empty()) return false;
  if constexpr (std::is_floating_point_v<T>) {
    if (s.front() == '+') s.remove_prefix(1);
  }
  const auto* end = s.data() + s.size();
  const auto [ptr, ec] = std::from_chars(s.data(), end, out);
  return ec == std::errc() && ptr == end;
}

std::vector<std::string_view> split(std::string_view line, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = line.find(sep, start);
    out.push_back(line.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

std::ifstream open_input(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open " + path.string());
  return in;
}

double json_real(const nlohmann::json& j) {
  return j.is_null() ? std::numeric_limits<double>::quiet_NaN() : j.get<double>();
}

}  // namespace

// ---- dataset CSV ------------------------------------------------------------------

Dataset read_dataset_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw InputError("row 1: missing header");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line.size() >= 3 && line.compare(0, 3, "\xEF\xBB\xBF") == 0) line.erase(0, 3);
  if (line != kDatasetHeader) {
    throw InputError(std::string("row 1: header must be exactly '") + kDatasetHeader + "'");
  }
  std::vector<ShareRecord> records;
  std::uint64_t row = 1;
  while (std::getline(in, line)) {
    ++row;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (trim(line).empty()) continue;
    const auto fields = split(line, ',');
    auto where = [&] { return "row " + std::to_string(row) + ": "; };
    if (fields.size() != 6) throw InputError(where() + "expected 6 fields, found " + std::to_string(fields.size()));
    std::uint64_t subject = 0, offer = 0;
    std::uint32_t treatment = 0, shared = 0, exposed = 0, adoptions = 0;
    if (!parse_number(fields[0], subject)) throw InputError(where() + "subject_id is not a nonnegative integer");
    if (!parse_number(fields[1], offer)) throw InputError(where() + "offer_id is not a nonnegative integer");
    if (!parse_number(fields[2], treatment) || treatment > 1) throw InputError(where() + "treatment must be 0 or 1");
    if (!parse_number(fields[3], shared) || shared > 1) throw InputError(where() + "shared must be 0 or 1");
    if (!parse_number(fields[4], exposed)) throw InputError(where() + "peers_exposed is not a nonnegative integer");
    if (!parse_number(fields[5], adoptions)) throw InputError(where() + "peer_adoptions is not a nonnegative integer");
    ShareRecord r{SubjectId{subject}, OfferId{offer}, treatment == 1 ? Treatment::active : Treatment::passive,
                  shared == 1, exposed, adoptions};
    try {
      r.validate();
    } catch (const InputError& e) {
      throw InputError(where() + e.what());
    }
    records.push_back(r);
  }
  try {
    return Dataset(std::move(records));
  } catch (const InputError& e) {
    throw InputError(std::string("dataset: ") + e.what());
  }
}

Dataset read_dataset_csv(const std::filesystem::path& path) {
  auto in = open_input(path);
  return read_dataset_csv(in);
}

void write_dataset_csv(std::ostream& out, const Dataset& dataset) {
  std::string buffer;
  buffer.reserve(32 * (dataset.size() + 1));
  buffer += kDatasetHeader;
  buffer += '\n';
  for (const auto& r : dataset.records()) {
    buffer += std::to_string(to_underlying(r.subject_id));
    buffer += ',';
    buffer += std::to_string(to_underlying(r.offer_id));
    buffer += r.treatment == Treatment::active ? ",1," : ",0,";
    buffer += r.shared ? "1," : "0,";
    buffer += std::to_string(r.peers_exposed);
    buffer += ',';
    buffer += std::to_string(r.peer_adoptions);
    buffer += '\n';
  }
  out << buffer;
}

// ---- key = value ------------------------------------------------------------------

KeyValues KeyValues::parse(std::istream& in, std::string source) {
  KeyValues kv;
  kv.source_ = std::move(source);
  std::string raw;
  int line = 0;
  while (std::getline(in, raw)) {
    ++line;
    std::string_view text(raw);
    if (const auto hash = text.find('#'); hash != std::string_view::npos) text = text.substr(0, hash);
    text = trim(text);
    if (text.empty()) continue;
    const auto eq = text.find('=');
    const auto where = kv.source_ + ":" + std::to_string(line) + ": ";
    if (eq == std::string_view::npos) throw ConfigError(where + "expected key = value");
    const std::string key(trim(text.substr(0, eq)));
    const std::string value(trim(text.substr(eq + 1)));
    if (key.empty()) throw ConfigError(where + "empty key");
    if (value.empty()) throw ConfigError(where + "empty value for '" + key + "'");
    if (!kv.entries_.emplace(key, Entry{value, line}).second) throw ConfigError(where + "duplicate key '" + key + "'");
  }
  return kv;
}

KeyValues KeyValues::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open " + path.string());
  KeyValues kv = parse(in, path.string());
  kv.base_directory = path.parent_path();
  return kv;
}

const KeyValues::Entry& KeyValues::at(const std::string& key) const {
  const auto it = entries_.find(key);
  if (it == entries_.end()) throw ConfigError(source_ + ": missing required key '" + key + "'");
  return it->second;
}

void KeyValues::fail(const std::string& key, const std::string& message) const {
  throw ConfigError(source_ + ":" + std::to_string(at(key).line) + ": " + key + ": " + message);
}

void KeyValues::restrict_to(const std::vector<std::string>& allowed) const {
  for (const auto& [key, entry] : entries_) {
    if (std::find(allowed.begin(), allowed.end(), key) == allowed.end()) {
      throw ConfigError(source_ + ":" + std::to_string(entry.line) + ": unknown key '" + key + "'");
    }
  }
}

double KeyValues::real(const std::string& key) const {
  double v = 0.0;
  if (!parse_number(at(key).value, v) || !std::isfinite(v)) fail(key, "expected a finite number");
  return v;
}

std::uint64_t KeyValues::unsigned_integer(const std::string& key) const {
  std::uint64_t v = 0;
  if (!parse_number(at(key).value, v)) fail(key, "expected a nonnegative integer");
  return v;
}

long long KeyValues::integer(const std::string& key) const {
  long long v = 0;
  if (!parse_number(at(key).value, v)) fail(key, "expected an integer");
  return v;
}

bool KeyValues::boolean(const std::string& key) const {
  const auto& v = at(key).value;
  if (v == "true" || v == "1") return true;
  if (v == "false" || v == "0") return false;
  fail(key, "expected true or false");
}

ExposureDistribution parse_exposure(const std::string& text, const std::filesystem::path& base) {
  const std::string_view s = trim(text);
  const auto open = s.find('(');
  if (open == std::string_view::npos || s.back() != ')') {
    throw ConfigError("exposure_distribution: expected name(arguments), got '" + text + "'");
  }
  const std::string_view name = trim(s.substr(0, open));
  const std::string_view args = s.substr(open + 1, s.size() - open - 2);
  if (name == "negative_binomial") {
    const auto parts = split(args, ',');
    double mean = 0.0, dispersion = 0.0;
    if (parts.size() != 2 || !parse_number(parts[0], mean) || !parse_number(parts[1], dispersion)) {
      throw ConfigError("exposure_distribution: negative_binomial needs (mean, dispersion)");
    }
    auto d = ExposureDistribution::negative_binomial(mean, dispersion);
    d.validate();
    return d;
  }
  if (name == "fixed") {
    std::uint32_t n = 0;
    if (!parse_number(args, n)) throw ConfigError("exposure_distribution: fixed needs a nonnegative integer");
    return ExposureDistribution::fixed(n);
  }
  if (name == "empirical") {
    std::filesystem::path path{std::string(trim(args))};
    if (path.is_relative() && !base.empty()) path = base / path;
    std::ifstream in(path);
    if (!in) throw ConfigError("exposure_distribution: cannot open " + path.string());
    std::vector<double> weights;
    std::string raw;
    int line = 0;
    while (std::getline(in, raw)) {
      ++line;
      std::string_view t(raw);
      if (const auto hash = t.find('#'); hash != std::string_view::npos) t = t.substr(0, hash);
      t = trim(t);
      if (t.empty()) continue;
      std::istringstream fields{std::string(t)};
      std::string count_text, weight_text, extra;
      fields >> count_text >> weight_text;
      std::uint32_t count = 0;
      double weight = 0.0;
      if (!parse_number(count_text, count) || !parse_number(weight_text, weight) || (fields >> extra)) {
        throw ConfigError(path.string() + ":" + std::to_string(line) + ": expected 'count weight'");
      }
      if (count >= 1'000'000) throw ConfigError(path.string() + ":" + std::to_string(line) + ": count too large");
      if (weights.size() <= count) weights.resize(count + 1, 0.0);
      weights[count] += weight;
    }
    auto d = ExposureDistribution::empirical(std::move(weights));
    d.validate();
    return d;
  }
  throw ConfigError("exposure_distribution: unknown distribution '" + std::string(name) + "'");
}

SimConfig sim_config_from(const KeyValues& kv) {
  kv.restrict_to({"n_subjects", "n_offers", "exposure_distribution", "treatment_probability", "seed",
                  "min_offer_subjects"});
  SimConfig c;
  c.n_subjects = kv.unsigned_integer("n_subjects");
  c.n_offers = kv.unsigned_integer("n_offers");
  if (kv.has("exposure_distribution")) {
    try {
      c.exposure_distribution = parse_exposure(kv.text("exposure_distribution"), kv.base_directory);
    } catch (const ConfigError& e) {
      throw ConfigError(kv.source() + ":" + std::to_string(kv.at("exposure_distribution").line) + ": " + e.what());
    }
  }
  if (kv.has("treatment_probability")) c.treatment_probability = kv.real("treatment_probability");
  if (kv.has("seed")) c.seed = kv.unsigned_integer("seed");
  if (kv.has("min_offer_subjects")) {
    const auto m = kv.unsigned_integer("min_offer_subjects");
    if (m > std::numeric_limits<std::uint32_t>::max()) throw ConfigError(kv.source() + ": min_offer_subjects too large");
    c.min_offer_subjects = static_cast<std::uint32_t>(m);
  }
  try {
    c.validate();
  } catch (const ConfigError& e) {
    throw ConfigError(kv.source() + ": " + e.what());
  }
  return c;
}

ModelParams params_from(const KeyValues& kv) {
  std::vector<std::string> names(ModelParams::kNames.begin(), ModelParams::kNames.end());
  kv.restrict_to(names);
  std::array<double, ModelParams::kCount> v{};
  for (std::size_t i = 0; i < ModelParams::kCount; ++i) v[i] = kv.real(names[i]);
  const auto p = ModelParams::from_array(v);
  try {
    p.validate();
  } catch (const Error& e) {
    throw ConfigError(kv.source() + ": " + e.what());
  }
  return p;
}

McmcConfig mcmc_config_from(const KeyValues& kv) {
  kv.restrict_to({"chains", "iterations", "burn_in", "seed", "hyper_sweeps", "adapt", "rhat_threshold"});
  McmcConfig c;
  if (kv.has("chains")) c.chains = static_cast<int>(kv.integer("chains"));
  if (kv.has("iterations")) c.iterations = static_cast<int>(kv.integer("iterations"));
  if (kv.has("burn_in")) c.burn_in = static_cast<int>(kv.integer("burn_in"));
  if (kv.has("seed")) c.seed = kv.unsigned_integer("seed");
  if (kv.has("hyper_sweeps")) c.hyper_sweeps = static_cast<int>(kv.integer("hyper_sweeps"));
  if (kv.has("adapt")) c.adapt = kv.boolean("adapt");
  if (kv.has("rhat_threshold")) c.rhat_threshold = kv.real("rhat_threshold");
  try {
    c.validate();
  } catch (const ConfigError& e) {
    throw ConfigError(kv.source() + ": " + e.what());
  }
  return c;
}

BootstrapConfig bootstrap_config_from(const KeyValues& kv) {
  kv.restrict_to({"replicates", "seed", "confidence_level"});
  BootstrapConfig c;
  if (kv.has("replicates")) c.replicates = static_cast<int>(kv.integer("replicates"));
  if (kv.has("seed")) c.seed = kv.unsigned_integer("seed");
  if (kv.has("confidence_level")) c.confidence_level = kv.real("confidence_level");
  try {
    c.validate();
  } catch (const ConfigError& e) {
    throw ConfigError(kv.source() + ": " + e.what());
  }
  return c;
}

// ---- JSON ---------------------------------------------------------------------------

nlohmann::json to_json(const ModelParams& params) {
  nlohmann::json j = nlohmann::json::object();
  const auto v = params.to_array();
  for (std::size_t i = 0; i < ModelParams::kCount; ++i) j[std::string(ModelParams::kNames[i])] = v[i];
  return j;
}

ModelParams params_from_json(const nlohmann::json& j) {
  std::array<double, ModelParams::kCount> v{};
  for (std::size_t i = 0; i < ModelParams::kCount; ++i) {
    const std::string name(ModelParams::kNames[i]);
    if (!j.contains(name) || !j[name].is_number()) throw InputError("parameters: missing number '" + name + "'");
    v[i] = j[name].get<double>();
  }
  return ModelParams::from_array(v);
}

nlohmann::json to_json(const ReducedFormShareFit& fit) {
  return {{"model", "share_probit"},
          {"alpha", fit.alpha_hat},
          {"sigma_mu", fit.sigma_mu_hat},
          {"log_likelihood", fit.log_likelihood},
          {"n_groups", fit.n_groups},
          {"n_obs", fit.n_obs},
          {"standard_errors", {{"alpha", fit.standard_errors.alpha}, {"sigma_mu", fit.standard_errors.sigma_mu}}},
          {"intraclass_correlation", intraclass_correlation(fit.sigma_mu_hat)},
          {"at_boundary", fit.at_boundary},
          {"warnings", fit.warnings}};
}

nlohmann::json to_json(const ReducedFormAdoptFit& fit) {
  return {{"model", "adopt_binomial"},
          {"gamma", fit.gamma_hat},
          {"beta", fit.beta_hat},
          {"sigma_lambda", fit.sigma_lambda_hat},
          {"log_likelihood", fit.log_likelihood},
          {"n_groups", fit.n_groups},
          {"n_obs", fit.n_obs},
          {"standard_errors",
           {{"gamma", fit.standard_errors.gamma},
            {"beta", fit.standard_errors.beta},
            {"sigma_lambda", fit.standard_errors.sigma_lambda}}},
          {"intraclass_correlation", intraclass_correlation(fit.sigma_lambda_hat)},
          {"at_boundary", fit.at_boundary},
          {"warnings", fit.warnings}};
}

nlohmann::json to_json(const PosteriorDraws& posterior) {
  nlohmann::json j;
  j["model"] = "joint";
  j["chains"] = posterior.chains;
  j["iterations_kept"] = posterior.iterations_kept;
  j["converged"] = posterior.converged;
  nlohmann::json draws = nlohmann::json::object(), rhat = nlohmann::json::object(),
                 summary = nlohmann::json::object(), acceptance = nlohmann::json::object();
  for (std::size_t i = 0; i < ModelParams::kCount; ++i) {
    const std::string name(ModelParams::kNames[i]);
    const auto p = static_cast<Param>(i);
    draws[name] = posterior.trace(p);
    rhat[name] = posterior.rhat[i];
    acceptance[name] = posterior.acceptance[i];
    const auto s = posterior.summary(p);
    summary[name] = {{"mean", s.mean}, {"sd", s.sd}, {"q025", s.q025}, {"median", s.median}, {"q975", s.q975}};
  }
  j["rhat"] = rhat;
  j["summary"] = summary;
  j["acceptance"] = acceptance;
  j["draws"] = draws;
  return j;
}

PosteriorDraws posterior_from_json(const nlohmann::json& j) {
  try {
    PosteriorDraws d;
    const auto& draws = j.at("draws");
    std::vector<std::vector<std::vector<double>>> traces;
    for (const auto& name : ModelParams::kNames) {
      traces.push_back(draws.at(std::string(name)).get<std::vector<std::vector<double>>>());
    }
    d.chains = static_cast<int>(traces[0].size());
    d.iterations_kept = d.chains > 0 ? static_cast<int>(traces[0][0].size()) : 0;
    if (d.chains == 0 || d.iterations_kept == 0) throw InputError("posterior: no draws");
    d.draws.assign(d.chains, std::vector<ModelParams>(d.iterations_kept));
    for (std::size_t i = 0; i < ModelParams::kCount; ++i) {
      if (static_cast<int>(traces[i].size()) != d.chains) throw InputError("posterior: ragged draws");
      for (int c = 0; c < d.chains; ++c) {
        if (static_cast<int>(traces[i][c].size()) != d.iterations_kept) throw InputError("posterior: ragged draws");
        for (int t = 0; t < d.iterations_kept; ++t) {
          auto v = d.draws[c][t].to_array();
          v[i] = traces[i][c][t];
          d.draws[c][t] = ModelParams::from_array(v);
        }
      }
    }
    for (const auto& chain : d.draws) {
      for (const auto& p : chain) p.validate();
    }
    if (j.contains("acceptance")) {
      for (std::size_t i = 0; i < ModelParams::kCount; ++i) {
        d.acceptance[i] = json_real(j["acceptance"].value(std::string(ModelParams::kNames[i]), nlohmann::json()));
      }
    }
    d.update_diagnostics(1.1);
    return d;
  } catch (const nlohmann::json::exception& e) {
    throw InputError(std::string("posterior: ") + e.what());
  } catch (const DomainError& e) {
    throw InputError(std::string("posterior: ") + e.what());
  }
}

nlohmann::json to_json(const IntervalEstimate& interval, bool include_replicates) {
  nlohmann::json j{{"point", interval.point}, {"lower", interval.lower}, {"upper", interval.upper},
                   {"dropped", interval.dropped}};
  if (include_replicates) j["replicate_values"] = interval.replicate_values;
  return j;
}

nlohmann::json to_json(const DecompositionResult& result) {
  return {{"rr_total", to_json(result.rr_total)},
          {"rr_product", to_json(result.rr_product)},
          {"rr_dyad", to_json(result.rr_dyad)},
          {"iterations", result.iterations},
          {"population_size", result.population_size},
          {"redraws", result.redraws}};
}

nlohmann::json to_json(const SummaryTable& table) {
  auto one = [](const ConditionSummary& s) {
    return nlohmann::json{{"subjects", s.subjects},
                          {"distinct_offers", s.distinct_offers},
                          {"proportion_shared", s.proportion_shared},
                          {"mean_exposed", s.mean_exposed},
                          {"median_exposed", s.median_exposed},
                          {"adoptions", s.adoptions},
                          {"adoption_rate", s.adoption_rate},
                          {"adoptions_per_subject", s.adoptions_per_subject},
                          {"adoptions_per_sharer", s.adoptions_per_sharer}};
  };
  return {{"active", one(table.active)}, {"passive", one(table.passive)}};
}

void write_effects_csv(std::ostream& out, const std::vector<EffectRow>& rows) {
  std::ostringstream buffer;
  buffer << std::setprecision(17);
  buffer << "scenario,mean,lower,upper\n";
  for (const auto& r : rows) buffer << r.scenario << ',' << r.mean << ',' << r.lower << ',' << r.upper << '\n';
  out << buffer.str();
}

}  // namespace selshare
