#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "sanctsim/game_core.hpp"
#include "sanctsim/llm_gateway.hpp"
#include "sanctsim/prompt_kit.hpp"

namespace sanctsim {

// ---------------------------------------------------------------- archetypes

enum class ArchetypeVariant {
  INCREASINGLY_COOPERATIVE,
  INCREASINGLY_DEFECTING,
  NO_CHANGE,
  UNSTABLE,
};

std::string to_string(ArchetypeVariant v);
std::optional<ArchetypeVariant> archetype_from_string(const std::string& s);

struct Archetype {
  ArchetypeVariant variant = ArchetypeVariant::NO_CHANGE;
  double slope = 0.0;         // tokens per round
  double residual_std = 0.0;  // tokens
};

/// Slope and residual-std thresholds at the default 20-token endowment;
/// both scale linearly with the endowment.
struct ArchetypeThresholds {
  double slope = 0.25;
  double unstable = 3.0;
};

/// Fits an OLS line to the per-round mean contribution series and
/// classifies the trajectory. UNSTABLE (high residual std) takes
/// precedence over the slope classes. Throws on series shorter than 3.
Archetype classify_archetype(const std::vector<double>& series,
                             const GameParameters& params,
                             ArchetypeThresholds thresholds = {});

// ------------------------------------------------------------------ taxonomy

/// The 15 canonical reasoning-strategy names.
const std::vector<std::string>& taxonomy_categories();

/// Macro-category name -> member categories, in report row order.
const std::vector<std::pair<std::string, std::vector<std::string>>>&
macro_categories();

inline constexpr const char* kOtherCategory = "Other";

/// Maps a raw classifier-emitted name (any casing/spacing) to the
/// canonical category name, or empty when unrecognized.
std::string canonical_category(const std::string& raw);

struct TaxonomyLabel {
  std::vector<std::string> categories;  // canonical names, or kOtherCategory
  double confidence = 0.0;
  std::string classifier_rationale;
  std::string decision_type;  // INSTITUTION | CONTRIBUTION | SANCTION
  bool unclassified = false;  // retries exhausted; excluded from aggregation
  // Provenance.
  std::string model;
  int run = 0;
  int round = 0;
  int agent = 0;
};

/// Classifies one reasoning statement through the gateway, retrying on
/// schema violations. Exhausted retries yield an unclassified label.
TaxonomyLabel classify_reasoning(ChatBackend& backend, const PromptKit& kit,
                                 const std::string& reasoning_text,
                                 int max_retries = 3);

// --------------------------------------------------------------- aggregation

struct StrategyUsage {
  // Percent of statements containing each category.
  std::map<std::string, double> category_percent;
  // Percent of statements containing at least one member category.
  std::map<std::string, double> macro_percent;
  int n_statements = 0;
  int n_unclassified = 0;
};

StrategyUsage aggregate_strategy_usage(const std::vector<TaxonomyLabel>& labels);

/// Fixed-order CSV: macro row then member rows, one column per group.
std::string strategy_table_csv(
    const std::vector<std::pair<std::string, StrategyUsage>>& columns);

// ----------------------------------------------------------------- bootstrap

struct BootstrapResult {
  double point = 0.0;
  double lo = 0.0;
  double hi = 0.0;
  bool degenerate = false;  // single model + single run
};

using Statistic = std::function<double(const std::vector<double>&)>;

/// Observations nested as model -> run -> values.
using NestedObservations =
    std::map<std::string, std::map<int, std::vector<double>>>;

/// Two-level percentile bootstrap: resamples models with replacement,
/// then runs within each drawn model with replacement.
BootstrapResult hierarchical_bootstrap(const NestedObservations& groups,
                                       const Statistic& statistic,
                                       int resamples, double level,
                                       std::uint64_t seed);

// ---------------------------------------------------------------- archetype diff

struct StrategyDiff {
  std::string category;
  double diff_pp = 0.0;       // reference percent - other percent
  bool insignificant = false;  // |diff| < 10pp or CI spans zero
};

/// Per-category percentage-point differences between a reference usage
/// column and another, flagged by the magnitude/CI rule. `diff_cis`
/// optionally supplies bootstrap CIs of the differences by category.
std::vector<StrategyDiff> archetype_strategy_diff(
    const StrategyUsage& reference, const StrategyUsage& other,
    const std::map<std::string, BootstrapResult>& diff_cis = {},
    double magnitude_pp = 10.0);

std::string strategy_diff_csv(const std::vector<StrategyDiff>& diffs);

}  // namespace sanctsim
