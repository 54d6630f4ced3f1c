#include "sanctsim/analysis.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <numeric>
#include <random>
#include <set>
#include <sstream>
#include <stdexcept>

namespace sanctsim {

// ---------------------------------------------------------------- archetypes

std::string to_string(ArchetypeVariant v) {
  switch (v) {
    case ArchetypeVariant::INCREASINGLY_COOPERATIVE:
      return "INCREASINGLY_COOPERATIVE";
    case ArchetypeVariant::INCREASINGLY_DEFECTING:
      return "INCREASINGLY_DEFECTING";
    case ArchetypeVariant::NO_CHANGE:
      return "NO_CHANGE";
    case ArchetypeVariant::UNSTABLE:
      return "UNSTABLE";
  }
  return "NO_CHANGE";
}

std::optional<ArchetypeVariant> archetype_from_string(const std::string& s) {
  if (s == "INCREASINGLY_COOPERATIVE")
    return ArchetypeVariant::INCREASINGLY_COOPERATIVE;
  if (s == "INCREASINGLY_DEFECTING")
    return ArchetypeVariant::INCREASINGLY_DEFECTING;
  if (s == "NO_CHANGE") return ArchetypeVariant::NO_CHANGE;
  if (s == "UNSTABLE") return ArchetypeVariant::UNSTABLE;
  return std::nullopt;
}

Archetype classify_archetype(const std::vector<double>& series,
                             const GameParameters& params,
                             ArchetypeThresholds thresholds) {
  const std::size_t n = series.size();
  if (n < 3)
    throw std::invalid_argument("archetype series needs at least 3 rounds");

  // OLS of contribution on round index 1..n.
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double x = static_cast<double>(i + 1);
    sx += x;
    sy += series[i];
    sxx += x * x;
    sxy += x * series[i];
  }
  const double denom = n * sxx - sx * sx;
  const double slope = (n * sxy - sx * sy) / denom;
  const double intercept = (sy - slope * sx) / n;

  double ss = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double fit = intercept + slope * static_cast<double>(i + 1);
    ss += (series[i] - fit) * (series[i] - fit);
  }
  const double residual_std = std::sqrt(ss / static_cast<double>(n - 2));

  const double scale = params.endowment_stage1 / 20.0;
  Archetype result{ArchetypeVariant::NO_CHANGE, slope, residual_std};
  if (residual_std > thresholds.unstable * scale) {
    result.variant = ArchetypeVariant::UNSTABLE;
  } else if (slope >= thresholds.slope * scale) {
    result.variant = ArchetypeVariant::INCREASINGLY_COOPERATIVE;
  } else if (slope <= -thresholds.slope * scale) {
    result.variant = ArchetypeVariant::INCREASINGLY_DEFECTING;
  }
  return result;
}

// ------------------------------------------------------------------ taxonomy

const std::vector<std::pair<std::string, std::vector<std::string>>>&
macro_categories() {
  static const std::vector<std::pair<std::string, std::vector<std::string>>>
      macros = {
          {"Economic Reasoning",
           {"Payoff maximization", "Nash equilibrium strategy",
            "Free-Riding / Exploitation", "Payoff complacency"}},
          {"Social Cooperation",
           {"Cooperative argument", "Social norms and conformity",
            "Reputation concerns", "Moral considerations",
            "Psychological factors"}},
          {"Risk Management",
           {"Risk aversion", "Complexity aversion",
            "Retaliation avoidance / Punishment aversion"}},
          {"Control & Strategy",
           {"Control based", "Learning and experimentation",
            "Status quo bias or inertia"}},
      };
  return macros;
}

const std::vector<std::string>& taxonomy_categories() {
  static const std::vector<std::string> categories = [] {
    std::vector<std::string> all;
    for (const auto& [macro, members] : macro_categories())
      all.insert(all.end(), members.begin(), members.end());
    return all;
  }();
  return categories;
}

namespace {

// Lowercased alphanumeric characters only; tolerant of spacing, casing,
// hyphenation, and slash placement variants.
std::string normalization_key(const std::string& s) {
  std::string key;
  for (char c : s) {
    if (std::isalnum(static_cast<unsigned char>(c)))
      key += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  }
  return key;
}

const std::map<std::string, std::string>& canonical_map() {
  static const std::map<std::string, std::string> table = [] {
    std::map<std::string, std::string> m;
    for (const std::string& name : taxonomy_categories())
      m[normalization_key(name)] = name;
    // Wording variants seen in classifier output.
    m[normalization_key("Cooperative arguments")] = "Cooperative argument";
    m[normalization_key("Retaliation/Punishment aversion")] =
        "Retaliation avoidance / Punishment aversion";
    m[normalization_key("Retaliation avoidance")] =
        "Retaliation avoidance / Punishment aversion";
    m[normalization_key("Punishment aversion")] =
        "Retaliation avoidance / Punishment aversion";
    m[normalization_key("Control-based reasoning")] = "Control based";
    m[normalization_key("Free riding")] = "Free-Riding / Exploitation";
    m[normalization_key("Exploitation")] = "Free-Riding / Exploitation";
    m[normalization_key("Status quo bias")] = "Status quo bias or inertia";
    m[normalization_key("Inertia")] = "Status quo bias or inertia";
    m[normalization_key("Nash equilibrium")] = "Nash equilibrium strategy";
    return m;
  }();
  return table;
}

std::string trim(const std::string& s) {
  auto begin = s.find_first_not_of(" \t\r\n");
  if (begin == std::string::npos) return "";
  auto end = s.find_last_not_of(" \t\r\n");
  return s.substr(begin, end - begin + 1);
}

std::vector<std::string> split_names(const std::string& joined) {
  std::vector<std::string> names;
  std::stringstream ss(joined);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) names.push_back(item);
  }
  return names;
}

}  // namespace

std::string canonical_category(const std::string& raw) {
  const auto& table = canonical_map();
  auto it = table.find(normalization_key(raw));
  return it != table.end() ? it->second : std::string();
}

TaxonomyLabel classify_reasoning(ChatBackend& backend, const PromptKit& kit,
                                 const std::string& reasoning_text,
                                 int max_retries) {
  RenderedPrompt prompt = kit.render_classification_prompt(reasoning_text);
  ParsedDecision fallback;
  fallback.schema = PromptSchema::CLASSIFICATION;
  DecisionEnvelope envelope = decide_with_retries(
      backend, prompt, nullptr, fallback, max_retries, /*fallback_enabled=*/true);

  TaxonomyLabel label;
  if (envelope.fallback_used) {
    label.unclassified = true;
    return label;
  }
  label.confidence = envelope.parsed.confidence;
  label.classifier_rationale = envelope.parsed.classifier_rationale;
  std::set<std::string> seen;
  for (const std::string& name :
       split_names(envelope.parsed.justification_type)) {
    std::string canonical = canonical_category(name);
    if (canonical.empty()) canonical = kOtherCategory;
    if (seen.insert(canonical).second) label.categories.push_back(canonical);
  }
  if (label.categories.empty()) label.categories.push_back(kOtherCategory);
  return label;
}

// --------------------------------------------------------------- aggregation

StrategyUsage aggregate_strategy_usage(
    const std::vector<TaxonomyLabel>& labels) {
  StrategyUsage usage;
  std::map<std::string, int> category_counts;
  std::map<std::string, int> macro_counts;
  for (const TaxonomyLabel& label : labels) {
    if (label.unclassified) {
      ++usage.n_unclassified;
      continue;
    }
    ++usage.n_statements;
    std::set<std::string> unique(label.categories.begin(),
                                 label.categories.end());
    for (const std::string& category : unique) ++category_counts[category];
    for (const auto& [macro, members] : macro_categories()) {
      const bool hit = std::any_of(
          members.begin(), members.end(),
          [&unique](const std::string& m) { return unique.contains(m); });
      if (hit) ++macro_counts[macro];
    }
  }
  if (usage.n_statements == 0) return usage;
  const double n = usage.n_statements;
  for (const std::string& category : taxonomy_categories())
    usage.category_percent[category] =
        100.0 * category_counts[category] / n;
  usage.category_percent[kOtherCategory] =
      100.0 * category_counts[kOtherCategory] / n;
  for (const auto& [macro, members] : macro_categories())
    usage.macro_percent[macro] = 100.0 * macro_counts[macro] / n;
  return usage;
}

namespace {

std::string csv_value(const StrategyUsage& usage, const std::string& row,
                      bool macro) {
  const auto& table = macro ? usage.macro_percent : usage.category_percent;
  auto it = table.find(row);
  if (it == table.end() || usage.n_statements == 0) return "";  // absent cell
  std::ostringstream os;
  os << it->second;
  return os.str();
}

std::string csv_escape(const std::string& s) {
  if (s.find(',') == std::string::npos && s.find('"') == std::string::npos)
    return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += "\"\"";
    out += c;
  }
  out += '"';
  return out;
}

}  // namespace

std::string strategy_table_csv(
    const std::vector<std::pair<std::string, StrategyUsage>>& columns) {
  std::ostringstream os;
  os << "strategy";
  for (const auto& [name, _] : columns) os << ',' << csv_escape(name);
  os << '\n';
  for (const auto& [macro, members] : macro_categories()) {
    os << csv_escape(macro);
    for (const auto& [_, usage] : columns)
      os << ',' << csv_value(usage, macro, /*macro=*/true);
    os << '\n';
    for (const std::string& member : members) {
      os << csv_escape(member);
      for (const auto& [_, usage] : columns)
        os << ',' << csv_value(usage, member, /*macro=*/false);
      os << '\n';
    }
  }
  os << csv_escape(kOtherCategory);
  for (const auto& [_, usage] : columns)
    os << ',' << csv_value(usage, kOtherCategory, /*macro=*/false);
  os << '\n';
  return os.str();
}

// ----------------------------------------------------------------- bootstrap

BootstrapResult hierarchical_bootstrap(const NestedObservations& groups,
                                       const Statistic& statistic,
                                       int resamples, double level,
                                       std::uint64_t seed) {
  if (resamples < 1)
    throw std::invalid_argument("bootstrap needs at least one resample");
  if (groups.empty())
    throw std::invalid_argument("bootstrap needs grouped observations");
  if (level <= 0.0 || level >= 1.0)
    throw std::invalid_argument("CI level must be in (0, 1)");

  std::vector<const std::map<int, std::vector<double>>*> models;
  std::vector<double> pooled;
  std::size_t run_count = 0;
  for (const auto& [model, runs] : groups) {
    models.push_back(&runs);
    run_count += runs.size();
    for (const auto& [run, values] : runs)
      pooled.insert(pooled.end(), values.begin(), values.end());
  }

  BootstrapResult result;
  result.point = statistic(pooled);
  result.degenerate = models.size() == 1 && run_count == 1;
  if (result.degenerate) {
    result.lo = result.hi = result.point;
    return result;
  }

  std::mt19937_64 rng(seed);
  std::vector<double> stats;
  stats.reserve(resamples);
  std::uniform_int_distribution<std::size_t> model_draw(0, models.size() - 1);
  std::vector<double> sample;
  for (int b = 0; b < resamples; ++b) {
    sample.clear();
    for (std::size_t m = 0; m < models.size(); ++m) {
      const auto& runs = *models[model_draw(rng)];
      std::vector<const std::vector<double>*> run_list;
      run_list.reserve(runs.size());
      for (const auto& [run, values] : runs) run_list.push_back(&values);
      std::uniform_int_distribution<std::size_t> run_draw(0,
                                                          run_list.size() - 1);
      for (std::size_t r = 0; r < run_list.size(); ++r) {
        const std::vector<double>& values = *run_list[run_draw(rng)];
        sample.insert(sample.end(), values.begin(), values.end());
      }
    }
    stats.push_back(statistic(sample));
  }
  std::sort(stats.begin(), stats.end());
  const double alpha = (1.0 - level) / 2.0;
  auto quantile = [&stats](double q) {
    const double pos = q * (stats.size() - 1);
    const std::size_t lo = static_cast<std::size_t>(std::floor(pos));
    const std::size_t hi = std::min(lo + 1, stats.size() - 1);
    const double frac = pos - lo;
    return stats[lo] * (1.0 - frac) + stats[hi] * frac;
  };
  result.lo = quantile(alpha);
  result.hi = quantile(1.0 - alpha);
  return result;
}

// ---------------------------------------------------------------- archetype diff

std::vector<StrategyDiff> archetype_strategy_diff(
    const StrategyUsage& reference, const StrategyUsage& other,
    const std::map<std::string, BootstrapResult>& diff_cis,
    double magnitude_pp) {
  std::vector<StrategyDiff> diffs;
  auto value = [](const StrategyUsage& usage, const std::string& category) {
    auto it = usage.category_percent.find(category);
    return it != usage.category_percent.end() ? it->second : 0.0;
  };
  std::vector<std::string> rows = taxonomy_categories();
  rows.push_back(kOtherCategory);
  for (const std::string& category : rows) {
    StrategyDiff d;
    d.category = category;
    d.diff_pp = value(reference, category) - value(other, category);
    d.insignificant = std::abs(d.diff_pp) < magnitude_pp;
    auto it = diff_cis.find(category);
    if (it != diff_cis.end() && it->second.lo <= 0.0 && it->second.hi >= 0.0)
      d.insignificant = true;
    diffs.push_back(d);
  }
  return diffs;
}

std::string strategy_diff_csv(const std::vector<StrategyDiff>& diffs) {
  std::ostringstream os;
  os << "strategy,diff_pp,insignificant\n";
  for (const StrategyDiff& d : diffs) {
    os << csv_escape(d.category) << ',' << d.diff_pp << ','
       << (d.insignificant ? "true" : "false") << '\n';
  }
  return os.str();
}

}  // namespace sanctsim
