#pragma once

#include <filesystem>
#include <istream>
#include <map>
#include <ostream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "selshare/bootstrap.hpp"
#include "selshare/counterfactual.hpp"
#include "selshare/mcmc.hpp"
#include "selshare/model.hpp"
#include "selshare/params.hpp"
#include "selshare/reduced_form.hpp"
#include "selshare/simulator.hpp"

namespace selshare {

/// Exact header of the dataset interchange format.
inline constexpr const char* kDatasetHeader = "subject_id,offer_id,treatment,shared,peers_exposed,peer_adoptions";

/// Parses a dataset CSV. Errors name the 1-based line ("row") of the offending record.
Dataset read_dataset_csv(std::istream& in);
Dataset read_dataset_csv(const std::filesystem::path& path);
void write_dataset_csv(std::ostream& out, const Dataset& dataset);

/// `key = value` text with `#` comments. Keys remember their line for diagnostics.
class KeyValues {
 public:
  struct Entry {
    std::string value;
    int line = 0;
  };

  static KeyValues parse(std::istream& in, std::string source);
  static KeyValues load(const std::filesystem::path& path);

  bool has(const std::string& key) const { return entries_.count(key) != 0; }
  const Entry& at(const std::string& key) const;
  const std::string& source() const noexcept { return source_; }
  /// Throws ConfigError naming the first key not in `allowed`.
  void restrict_to(const std::vector<std::string>& allowed) const;

  std::string text(const std::string& key) const { return at(key).value; }
  double real(const std::string& key) const;
  std::uint64_t unsigned_integer(const std::string& key) const;
  long long integer(const std::string& key) const;
  bool boolean(const std::string& key) const;

  std::filesystem::path base_directory;

 private:
  [[noreturn]] void fail(const std::string& key, const std::string& message) const;

  std::string source_;
  std::map<std::string, Entry> entries_;
};

/// `negative_binomial(mean, dispersion)`, `fixed(n)` or `empirical(path)`; relative paths
/// resolve against `base`. Empirical files hold `count weight` lines.
ExposureDistribution parse_exposure(const std::string& text, const std::filesystem::path& base = {});

SimConfig sim_config_from(const KeyValues& kv);
ModelParams params_from(const KeyValues& kv);
McmcConfig mcmc_config_from(const KeyValues& kv);
BootstrapConfig bootstrap_config_from(const KeyValues& kv);

nlohmann::json to_json(const ModelParams& params);
ModelParams params_from_json(const nlohmann::json& j);
nlohmann::json to_json(const ReducedFormShareFit& fit);
nlohmann::json to_json(const ReducedFormAdoptFit& fit);
nlohmann::json to_json(const PosteriorDraws& posterior);
/// Reads the draws written by to_json and recomputes the diagnostics.
PosteriorDraws posterior_from_json(const nlohmann::json& j);
nlohmann::json to_json(const IntervalEstimate& interval, bool include_replicates = true);
nlohmann::json to_json(const DecompositionResult& result);
nlohmann::json to_json(const SummaryTable& table);

/// CSV with header `scenario,mean,lower,upper`.
void write_effects_csv(std::ostream& out, const std::vector<EffectRow>& rows);

}  // namespace selshare
